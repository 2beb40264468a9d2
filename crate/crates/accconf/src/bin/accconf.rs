//! Command-line front end: key setup, enabling-block lifecycle, client
//! extraction, content encryption/chunking, the cache simulator, and an
//! operation-count benchmark.
//!
//! Exit codes: 0 success, 2 usage, 3 cryptographic failure (signature,
//! revoked, expired, checksum), 4 I/O or malformed file, 5 capacity or
//! revocation threshold.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use accconf::block::{
    self, build_block, deserialize_block, serialize_block, BlockError, BlockState,
    ProviderSigningKey,
};
use accconf::content::{
    chunk_object, decrypt_content, encrypt_content, write_object_store, ContentError, ContentName,
    EncryptedContent, Numbering,
};
use accconf::extract::{extract, extract_no_precompute, ExtractError};
use accconf::group::{generate_params, GroupError, SystemParams};
use accconf::shares::{
    generate_shares, share_from_bytes, share_to_bytes, SecretPolynomial, ServerShareSet,
    ShareError, ShareOwner, ShareTuple,
};
use accconf::sim::{generate_topology, run_simulation, SimConfig, SimError};
use accconf::wire;

#[derive(Parser)]
#[command(
    name = "accconf",
    version,
    about = "Broadcast-encryption access control for cached content, with an ICN cache simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate group parameters, the secret polynomial, server shares,
    /// and n user shares.
    Setup(SetupArgs),
    /// Build and sign an enabling block for a symmetric key.
    BuildBlock(BuildBlockArgs),
    /// Revoke a registered user and publish a rebuilt block.
    Revoke(RevokeArgs),
    /// Recover the key from an enabling block with one user share.
    Extract(ExtractArgs),
    /// Encrypt a file under a key.
    Encrypt(EncryptArgs),
    /// Decrypt a file sealed by `encrypt`.
    Decrypt(EncryptArgs),
    /// Split a file into named chunks plus a manifest.
    Chunk(ChunkArgs),
    /// Run one simulator experiment from a JSON config.
    Simulate(SimulateArgs),
    /// Measure block sizes and extraction operation counts across t.
    Bench(BenchArgs),
}

#[derive(Args)]
struct SetupArgs {
    /// Bit length of the group order Q.
    #[arg(long = "bits-q", default_value_t = 256)]
    bits_q: u32,
    /// Revocation threshold (polynomial degree).
    #[arg(long, default_value_t = 64)]
    t: usize,
    /// Number of users to register.
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Share expiry as UNIX seconds (0 = none).
    #[arg(long, default_value_t = 0)]
    timeout: u64,
    #[arg(long = "out-dir")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct BuildBlockArgs {
    /// State directory produced by `setup`.
    #[arg(long)]
    dir: PathBuf,
    /// File holding the symmetric key bytes.
    #[arg(long = "key-file")]
    key_file: PathBuf,
    /// Block expiry as UNIX seconds (0 = none).
    #[arg(long, default_value_t = 0)]
    timeout: u64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RevokeArgs {
    #[arg(long)]
    dir: PathBuf,
    #[arg(long = "user-id")]
    user_id: u64,
    #[arg(long = "key-file")]
    key_file: PathBuf,
    #[arg(long, default_value_t = 0)]
    timeout: u64,
    #[arg(long)]
    seed: Option<u64>,
    /// Where to write the rebuilt block.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long)]
    params: PathBuf,
    #[arg(long = "verify-key")]
    verify_key: PathBuf,
    #[arg(long)]
    share: PathBuf,
    #[arg(long)]
    block: PathBuf,
    /// Clock for expiry checks; defaults to the system time.
    #[arg(long)]
    now: Option<u64>,
    /// Recompute coefficients instead of using the precomputed set.
    #[arg(long = "no-precompute", default_value_t = false)]
    no_precompute: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EncryptArgs {
    #[arg(long = "key-file")]
    key_file: PathBuf,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    nonce: u64,
}

#[derive(Args)]
struct ChunkArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long = "out-dir")]
    out_dir: PathBuf,
    /// Object name as /provider/type/category/title.
    #[arg(long)]
    name: String,
    #[arg(long, default_value_t = 1)]
    version: u32,
    #[arg(long = "chunk-size", default_value_t = 1436)]
    chunk_size: usize,
    /// sequential or random.
    #[arg(long, default_value = "sequential")]
    numbering: String,
    #[arg(long)]
    seed: Option<u64>,
    /// Enabling-block version the payload was sealed under.
    #[arg(long = "key-id", default_value_t = 0)]
    key_id: u64,
}

#[derive(Args)]
struct SimulateArgs {
    /// SimConfig JSON document.
    #[arg(long)]
    config: PathBuf,
    #[arg(long = "out-dir")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated revocation thresholds to measure.
    #[arg(long = "t-list", default_value = "8,16,32")]
    t_list: String,
    #[arg(long = "bits-q", default_value_t = 64)]
    bits_q: u32,
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

// --------------------------------------------------------------------------
// Error-to-exit-code mapping.
// --------------------------------------------------------------------------

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError { code: 2, message: message.into() }
    }

    fn crypto(message: impl Into<String>) -> Self {
        CliError { code: 3, message: message.into() }
    }

    fn io(message: impl Into<String>) -> Self {
        CliError { code: 4, message: message.into() }
    }

    fn capacity(message: impl Into<String>) -> Self {
        CliError { code: 5, message: message.into() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::io(err.to_string())
    }
}

impl From<GroupError> for CliError {
    fn from(err: GroupError) -> Self {
        match err {
            GroupError::BitsTooSmall(_) => CliError::usage(err.to_string()),
            GroupError::SearchExhausted { .. } => CliError::crypto(err.to_string()),
            GroupError::Wire(_) | GroupError::Invalid(_) => CliError::io(err.to_string()),
            _ => CliError::crypto(err.to_string()),
        }
    }
}

impl From<ShareError> for CliError {
    fn from(err: ShareError) -> Self {
        match err {
            ShareError::CapacityExceeded => CliError::capacity(err.to_string()),
            ShareError::DegreeOutOfRange(_)
            | ShareError::DuplicateUser(_)
            | ShareError::UnknownUser(_) => CliError::usage(err.to_string()),
            ShareError::Wire(_) => CliError::io(err.to_string()),
            other => CliError::crypto(other.to_string()),
        }
    }
}

impl From<BlockError> for CliError {
    fn from(err: BlockError) -> Self {
        match err {
            BlockError::ThresholdExceeded(_) => CliError::capacity(err.to_string()),
            BlockError::SignatureInvalid => CliError::crypto(err.to_string()),
            BlockError::Wire(_) | BlockError::UnsupportedHashAlg(_) => {
                CliError::io(err.to_string())
            }
            BlockError::EmptyKey | BlockError::GroupTooSmall => CliError::usage(err.to_string()),
            other => CliError::crypto(other.to_string()),
        }
    }
}

impl From<ExtractError> for CliError {
    fn from(err: ExtractError) -> Self {
        CliError::crypto(err.to_string())
    }
}

impl From<ContentError> for CliError {
    fn from(err: ContentError) -> Self {
        match err {
            ContentError::AuthFailed => CliError::crypto(err.to_string()),
            ContentError::EmptyKey | ContentError::ChunkSizeZero | ContentError::BadName(_) => {
                CliError::usage(err.to_string())
            }
            other => CliError::io(other.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(err: SimError) -> Self {
        match err {
            SimError::Config(_) => CliError::usage(err.to_string()),
            other => CliError::io(other.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(err: serde_json::Error) -> Self {
        CliError::io(err.to_string())
    }
}

// --------------------------------------------------------------------------
// State directory layout.
// --------------------------------------------------------------------------

const PARAMS_FILE: &str = "params.acf1";
const SIGNING_FILE: &str = "signing.acfk";
const VERIFY_FILE: &str = "verify.acfv";
const SERVER_SHARES_FILE: &str = "server_shares.acfs";
const POLY_FILE: &str = "poly.acfp";
const STATE_FILE: &str = "state.json";
const SHARES_DIR: &str = "shares";

#[derive(Serialize, Deserialize)]
struct RegistryEntry {
    user_id: u64,
    file: String,
    timeout: u64,
    revoked: bool,
}

#[derive(Serialize, Deserialize)]
struct StateIndex {
    bits_q: u32,
    t: usize,
    n: usize,
    seed: u64,
    block_version: u64,
    revoked_count: usize,
    users: Vec<RegistryEntry>,
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    if let Some(seed) = seed {
        return seed;
    }
    if let Ok(env) = std::env::var("ACCCONF_SEED") {
        if let Ok(parsed) = env.parse() {
            return parsed;
        }
    }
    rand::rngs::OsRng.next_u64()
}

/// Write via a temp file and rename, so a crash never leaves a torn file.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let dir = dir.unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().map(|f| f.to_string_lossy()).unwrap_or_default()
    ));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn poly_to_bytes(poly: &SecretPolynomial) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(b"ACFP");
    buf.push(1);
    buf.extend_from_slice(&(poly.coeffs().len() as u32).to_be_bytes());
    for coeff in poly.coeffs() {
        wire::put_uint(&mut buf, coeff.value());
    }
    buf
}

fn poly_from_bytes(bytes: &[u8], params: &SystemParams) -> Result<SecretPolynomial, CliError> {
    let mut r = wire::Reader::new(bytes);
    r.expect_magic("ACFP").map_err(|e| CliError::io(e.to_string()))?;
    let version = r.u8("version").map_err(|e| CliError::io(e.to_string()))?;
    if version != 1 {
        return Err(CliError::io("unsupported polynomial file version"));
    }
    let count = r.u32("coeff count").map_err(|e| CliError::io(e.to_string()))? as usize;
    let mut coeffs = Vec::with_capacity(count);
    for _ in 0..count {
        coeffs.push(r.uint("coeff").map_err(|e| CliError::io(e.to_string()))?);
    }
    r.finish("polynomial file").map_err(|e| CliError::io(e.to_string()))?;
    Ok(SecretPolynomial::from_coeffs(params, coeffs)?)
}

fn read_server_shares(
    bytes: &[u8],
    params: &SystemParams,
    t: usize,
) -> Result<ServerShareSet, CliError> {
    // The server file is t concatenated share records; records are
    // self-delimiting via their length prefixes.
    let mut shares = Vec::with_capacity(t);
    let mut rest = bytes;
    while !rest.is_empty() {
        let (share, timeout) = share_record_prefix(rest, params)?;
        let consumed = share_to_bytes(&share, timeout).len();
        shares.push(share);
        rest = &rest[consumed..];
    }
    if shares.len() != t {
        return Err(CliError::io("server share file holds the wrong number of records"));
    }
    Ok(ServerShareSet::new(shares)?)
}

/// Parse one share record off the front of a concatenated file.
fn share_record_prefix(
    bytes: &[u8],
    params: &SystemParams,
) -> Result<(ShareTuple, u64), CliError> {
    // Header: 4 magic + 1 version + 1 tag + 8 id + 8 timeout = 22 bytes.
    if bytes.len() < 26 {
        return Err(CliError::io("truncated share record"));
    }
    let x_len = u32::from_be_bytes([bytes[22], bytes[23], bytes[24], bytes[25]]) as usize;
    let fx_at = 26 + x_len;
    if bytes.len() < fx_at + 4 {
        return Err(CliError::io("truncated share record"));
    }
    let fx_len =
        u32::from_be_bytes([bytes[fx_at], bytes[fx_at + 1], bytes[fx_at + 2], bytes[fx_at + 3]])
            as usize;
    let total = fx_at + 4 + fx_len;
    if bytes.len() < total {
        return Err(CliError::io("truncated share record"));
    }
    Ok(share_from_bytes(&bytes[..total], params)?)
}

struct LoadedState {
    params: SystemParams,
    signing: ProviderSigningKey,
    poly: SecretPolynomial,
    server: ServerShareSet,
    index: StateIndex,
}

fn load_state(dir: &Path) -> Result<LoadedState, CliError> {
    let params = SystemParams::from_bytes(&fs::read(dir.join(PARAMS_FILE))?)?;
    let signing = ProviderSigningKey::from_bytes(&fs::read(dir.join(SIGNING_FILE))?, &params)?;
    let index: StateIndex = serde_json::from_slice(&fs::read(dir.join(STATE_FILE))?)?;
    let poly = poly_from_bytes(&fs::read(dir.join(POLY_FILE))?, &params)?;
    let server = read_server_shares(&fs::read(dir.join(SERVER_SHARES_FILE))?, &params, index.t)?;
    Ok(LoadedState { params, signing, poly, server, index })
}

fn save_index(dir: &Path, index: &StateIndex) -> Result<(), CliError> {
    write_atomic(&dir.join(STATE_FILE), &serde_json::to_vec_pretty(index)?)
}

// --------------------------------------------------------------------------
// Subcommand implementations.
// --------------------------------------------------------------------------

fn cmd_setup(args: SetupArgs) -> Result<(), CliError> {
    let seed = resolve_seed(args.seed);
    let params = generate_params(args.bits_q, seed)?;
    let mut rng = accconf::rng::substream(seed, "shares");
    let poly = SecretPolynomial::generate(&params, args.t, &mut rng)?;
    let (server, registry) = generate_shares(&poly, &params, args.n, &mut rng)?;
    let mut sig_rng = accconf::rng::substream(seed, "signing-key");
    let signing = ProviderSigningKey::generate(&params, &mut sig_rng);

    let dir = &args.out_dir;
    fs::create_dir_all(dir.join(SHARES_DIR))?;
    write_atomic(&dir.join(PARAMS_FILE), &params.to_bytes())?;
    write_atomic(&dir.join(SIGNING_FILE), &signing.to_bytes())?;
    write_atomic(&dir.join(VERIFY_FILE), &block::verify_key_to_bytes(signing.verify_key()))?;
    write_atomic(&dir.join(POLY_FILE), &poly_to_bytes(&poly))?;
    let mut server_bytes = Vec::new();
    for share in server.shares() {
        server_bytes.extend_from_slice(&share_to_bytes(share, 0));
    }
    write_atomic(&dir.join(SERVER_SHARES_FILE), &server_bytes)?;

    let mut users = Vec::new();
    for (&user_id, entry) in registry.iter() {
        let file = format!("{SHARES_DIR}/user_{user_id:06}.acfs");
        write_atomic(&dir.join(&file), &share_to_bytes(&entry.share, args.timeout))?;
        users.push(RegistryEntry { user_id, file, timeout: args.timeout, revoked: false });
    }

    save_index(
        dir,
        &StateIndex {
            bits_q: args.bits_q,
            t: args.t,
            n: args.n,
            seed,
            block_version: 0,
            revoked_count: 0,
            users,
        },
    )?;
    println!(
        "setup: wrote params ({} bits), {} server shares, {} user shares to {}",
        args.bits_q,
        args.t,
        args.n,
        dir.display()
    );
    Ok(())
}

fn cmd_build_block(args: BuildBlockArgs) -> Result<(), CliError> {
    let seed = resolve_seed(args.seed);
    let state = load_state(&args.dir)?;
    let key = fs::read(&args.key_file)?;
    let mut rng = accconf::rng::substream(seed, "block");
    let mut block_state =
        BlockState::new(state.params.clone(), state.signing.clone(), &state.poly, state.server)
            .with_counters(state.index.block_version, state.index.revoked_count);
    block_state.set_key_bytes(&key, 1)?;
    let built = block_state.rebuild(args.timeout, &mut rng)?;
    write_atomic(&args.out, &serialize_block(&built))?;
    let mut index = state.index;
    index.block_version = block_state.version();
    save_index(&args.dir, &index)?;
    println!(
        "build-block: version {} with {} subkeys, t={} -> {}",
        built.version,
        built.subkey_count(),
        built.t(),
        args.out.display()
    );
    Ok(())
}

fn cmd_revoke(args: RevokeArgs) -> Result<(), CliError> {
    let seed = resolve_seed(args.seed);
    let state = load_state(&args.dir)?;
    let mut index = state.index;
    let entry = index
        .users
        .iter_mut()
        .find(|u| u.user_id == args.user_id)
        .ok_or_else(|| CliError::usage(format!("user {} is not registered", args.user_id)))?;
    if entry.revoked {
        return Err(CliError::usage(format!("user {} is already revoked", args.user_id)));
    }
    let (share, _) = share_from_bytes(&fs::read(args.dir.join(&entry.file))?, &state.params)?;
    let revoked_tuple = ShareTuple { owner: ShareOwner::Revoked(args.user_id), ..share };

    let key = fs::read(&args.key_file)?;
    let mut rng = accconf::rng::substream(seed, "revoke");
    let mut block_state =
        BlockState::new(state.params.clone(), state.signing.clone(), &state.poly, state.server)
            .with_counters(index.block_version, index.revoked_count);
    block_state.set_key_bytes(&key, 1)?;
    let built = block_state.revoke_user(revoked_tuple, args.timeout, &mut rng)?;

    // Persist the substituted server set and the updated counters.
    let mut server_bytes = Vec::new();
    for share in block_state.server_shares().shares() {
        server_bytes.extend_from_slice(&share_to_bytes(share, 0));
    }
    write_atomic(&args.dir.join(SERVER_SHARES_FILE), &server_bytes)?;
    entry.revoked = true;
    index.block_version = block_state.version();
    index.revoked_count = block_state.revoked_count();
    save_index(&args.dir, &index)?;
    write_atomic(&args.out, &serialize_block(&built))?;
    println!(
        "revoke: user {} folded into the server set; block version {} -> {}",
        args.user_id,
        built.version,
        args.out.display()
    );
    Ok(())
}

fn cmd_extract(args: ExtractArgs) -> Result<(), CliError> {
    let params = SystemParams::from_bytes(&fs::read(&args.params)?)?;
    let vk = block::verify_key_from_bytes(&fs::read(&args.verify_key)?, &params)?;
    let (share, _) = share_from_bytes(&fs::read(&args.share)?, &params)?;
    let blk = deserialize_block(&fs::read(&args.block)?, &params)?;
    let now = args.now.unwrap_or_else(|| {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    });
    let result = if args.no_precompute {
        extract_no_precompute(&blk, &share, &params, &vk, now)?
    } else {
        extract(&blk, &share, &params, &vk, now)?
    };
    write_atomic(&args.out, &result.key_bytes)?;
    println!(
        "extract: {} key bytes ({} Z_Q mults, {} Z_P exps) -> {}",
        result.key_bytes.len(),
        result.mult_count,
        result.exp_count,
        args.out.display()
    );
    Ok(())
}

fn cmd_encrypt(args: EncryptArgs) -> Result<(), CliError> {
    let key = fs::read(&args.key_file)?;
    let plaintext = fs::read(&args.input)?;
    let name = ContentName::object("cp", "content", "all", "object", 1)?;
    let sealed = encrypt_content(&name, &plaintext, &key, args.nonce, 0)?;
    write_atomic(&args.out, &sealed.ciphertext)?;
    println!(
        "encrypt: {} -> {} ({} bytes)",
        args.input.display(),
        args.out.display(),
        sealed.ciphertext.len()
    );
    Ok(())
}

fn cmd_decrypt(args: EncryptArgs) -> Result<(), CliError> {
    let key = fs::read(&args.key_file)?;
    let ciphertext = fs::read(&args.input)?;
    let name = ContentName::object("cp", "content", "all", "object", 1)?;
    let content = EncryptedContent { object_name: name, ciphertext, key_id: 0, nonce: args.nonce };
    let plaintext = decrypt_content(&content, &key)?;
    write_atomic(&args.out, &plaintext)?;
    println!("decrypt: {} -> {}", args.input.display(), args.out.display());
    Ok(())
}

fn parse_object_name(name: &str, version: u32) -> Result<ContentName, CliError> {
    let parts: Vec<&str> = name.trim_matches('/').split('/').collect();
    if parts.len() != 4 {
        return Err(CliError::usage(
            "--name must be /provider/type/category/title (four components)",
        ));
    }
    Ok(ContentName::object(parts[0], parts[1], parts[2], parts[3], version)?)
}

fn cmd_chunk(args: ChunkArgs) -> Result<(), CliError> {
    let payload = fs::read(&args.input)?;
    let prefix = parse_object_name(&args.name, args.version)?;
    let numbering = match args.numbering.as_str() {
        "sequential" => Numbering::Sequential,
        "random" => Numbering::Random { seed: resolve_seed(args.seed) },
        other => {
            return Err(CliError::usage(format!(
                "unknown numbering '{other}' (expected sequential or random)"
            )))
        }
    };
    let chunks = chunk_object(&prefix, &payload, args.chunk_size, numbering)?;
    let manifest = write_object_store(&args.out_dir, &prefix, &chunks, numbering, args.key_id)?;
    println!(
        "chunk: {} bytes -> {} chunks under {} (first id {})",
        payload.len(),
        manifest.chunk_count,
        args.out_dir.display(),
        manifest.first_chunk_id
    );
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let cfg: SimConfig = serde_json::from_slice(&fs::read(&args.config)?)?;
    let topo = generate_topology(&cfg.topology)?;
    for warning in &topo.warnings {
        eprintln!("warning: {warning}");
    }
    let report = run_simulation(&topo, &cfg)?;
    report.write_csv_files(&args.out_dir)?;
    println!(
        "simulate: stack {} seed {} -> mean downloads {:.3}, p50 {:.6}s, hit ratio {:.4} ({})",
        report.stack.label(),
        report.seed,
        report.mean_downloads(),
        report.quantile_sec(0.5),
        report.hit_ratio(),
        args.out_dir.display()
    );
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<(), CliError> {
    let seed = resolve_seed(args.seed);
    let t_list: Vec<usize> = args
        .t_list
        .split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|_| CliError::usage("bad --t-list entry")))
        .collect::<Result<_, _>>()?;
    let params = generate_params(args.bits_q, seed)?;
    let mut out = String::from("t,block_bytes,global_mults,globalnp_mults,exps\n");
    for &t in &t_list {
        let mut rng = accconf::rng::substream(seed, &format!("bench-{t}"));
        let poly = SecretPolynomial::generate(&params, t, &mut rng)?;
        let (server, registry) = generate_shares(&poly, &params, args.n.max(1), &mut rng)?;
        let signing = ProviderSigningKey::generate(&params, &mut rng);
        let key = [0x42u8; 16];
        let built = build_block(&key, &server, poly.secret(), &params, &signing, 0, &mut rng)?;
        let block_bytes = serialize_block(&built).len();
        let share = &registry.get(1).ok_or_else(|| CliError::usage("need n >= 1"))?.share;
        let global = extract(&built, share, &params, signing.verify_key(), 0)?;
        let baseline = extract_no_precompute(&built, share, &params, signing.verify_key(), 0)?;
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            t, block_bytes, global.mult_count, baseline.mult_count, global.exp_count
        ));
    }
    match &args.out {
        Some(path) => write_atomic(path, out.as_bytes())?,
        None => print!("{out}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Setup(args) => cmd_setup(args),
        Command::BuildBlock(args) => cmd_build_block(args),
        Command::Revoke(args) => cmd_revoke(args),
        Command::Extract(args) => cmd_extract(args),
        Command::Encrypt(args) => cmd_encrypt(args),
        Command::Decrypt(args) => cmd_decrypt(args),
        Command::Chunk(args) => cmd_chunk(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message);
            ExitCode::from(err.code)
        }
    }
}
