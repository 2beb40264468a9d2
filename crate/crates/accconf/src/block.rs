//! Enabling-block construction and maintenance.
//!
//! The enabling block is the signed metadata published next to encrypted
//! content: the blinded key material γ_b = τ_b · g^(r·a_0), the ephemeral
//! g^r, the server-precomputed partial Lagrangian coefficients Λ, and the
//! transformed server shares E^e = {⟨x_j, g^(r·f(x_j))⟩}. A client owning
//! one non-revoked share completes the interpolation in the exponent and
//! divides the blinding away.
//!
//! Revocation substitutes a revoked user's tuple into the server set and
//! rebuilds the block under a fresh r; once all t slots are consumed, the
//! reactive multi-subkey plan covers up to m·t revoked users.

use num_bigint::BigUint;
use num_traits::One;
use rand::RngCore;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::group::{mod_exp, mod_inv, zq_rand, GroupError, SystemParams, ZpElement, ZqElement};
use crate::shares::{SecretPolynomial, ServerShareSet, ShareError, ShareOwner, ShareTuple};
use crate::wire::{self, Reader, WireError};

/// Hash-algorithm tag carried in every block header. Only SHA-256 is
/// defined; the tag keeps the format stable if that ever changes.
pub const HASH_ALG_SHA256: u8 = 1;

#[derive(Debug, Error)]
pub enum BlockError {
    #[error("key bytes must be nonempty")]
    EmptyKey,
    #[error("group too small to carry key bytes (need bits_q >= 9)")]
    GroupTooSmall,
    #[error("key needs {needed} subkeys but the format allows at most {max}")]
    KeyTooLong { needed: usize, max: usize },
    #[error("key needs {needed} subkeys but the plan provides {have}")]
    PlanTooSmall { needed: usize, have: usize },
    #[error("revocation threshold exceeded: all {0} server slots already hold revoked tuples")]
    ThresholdExceeded(usize),
    #[error("subkey plan is infeasible: {0}")]
    BadPlan(&'static str),
    #[error("no key material set; call set_key_bytes or set_subkeys first")]
    NoKeyMaterial,
    #[error("unsupported hash algorithm tag {0}")]
    UnsupportedHashAlg(u8),
    #[error("signature verification failed")]
    SignatureInvalid,
    #[error(transparent)]
    Share(#[from] ShareError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Wire(#[from] WireError),
}

/// Schnorr signing key over the same group: vk = g^sk.
#[derive(Clone, Debug)]
pub struct ProviderSigningKey {
    sk: ZqElement,
    vk: ZpElement,
}

impl ProviderSigningKey {
    pub fn generate<R: RngCore>(params: &SystemParams, rng: &mut R) -> Self {
        let sk = zq_rand(params, rng);
        let vk = mod_exp(&params.generator(), sk.value(), params);
        ProviderSigningKey { sk, vk }
    }

    pub fn verify_key(&self) -> &ZpElement {
        &self.vk
    }

    /// Serialize the key pair: magic "ACFK", version, sk, vk.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        buf.extend_from_slice(b"ACFK");
        buf.push(1);
        wire::put_uint(&mut buf, self.sk.value());
        wire::put_uint(&mut buf, self.vk.value());
        buf
    }

    pub fn from_bytes(bytes: &[u8], params: &SystemParams) -> Result<Self, BlockError> {
        let mut r = Reader::new(bytes);
        r.expect_magic("ACFK")?;
        let version = r.u8("version")?;
        if version != 1 {
            return Err(WireError::UnsupportedVersion(version).into());
        }
        let sk = params.zq(r.uint("sk")?)?;
        let vk = params.zp(r.uint("vk")?)?;
        r.finish("trailing bytes after signing key")?;
        if mod_exp(&params.generator(), sk.value(), params) != vk {
            return Err(WireError::Invalid("vk does not match sk").into());
        }
        Ok(ProviderSigningKey { sk, vk })
    }
}

/// Serialize just the public verification key: magic "ACFV", version, vk.
pub fn verify_key_to_bytes(vk: &ZpElement) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(b"ACFV");
    buf.push(1);
    wire::put_uint(&mut buf, vk.value());
    buf
}

pub fn verify_key_from_bytes(bytes: &[u8], params: &SystemParams) -> Result<ZpElement, BlockError> {
    let mut r = Reader::new(bytes);
    r.expect_magic("ACFV")?;
    let version = r.u8("version")?;
    if version != 1 {
        return Err(WireError::UnsupportedVersion(version).into());
    }
    let vk = params.zp(r.uint("vk")?)?;
    r.finish("trailing bytes after verify key")?;
    Ok(vk)
}

fn hash_sha256(alg: u8, parts: &[&[u8]]) -> Result<[u8; 32], BlockError> {
    if alg != HASH_ALG_SHA256 {
        return Err(BlockError::UnsupportedHashAlg(alg));
    }
    let mut h = Sha256::new();
    for part in parts {
        h.update(part);
    }
    Ok(h.finalize().into())
}

/// Schnorr-sign a message: k random in Z*_Q, R = g^k,
/// e = H(R ‖ vk ‖ msg) mod Q, s = k - sk·e mod Q.
pub fn schnorr_sign<R: RngCore>(
    params: &SystemParams,
    key: &ProviderSigningKey,
    hash_alg: u8,
    msg: &[u8],
    rng: &mut R,
) -> Result<Vec<u8>, BlockError> {
    let k = zq_rand(params, rng);
    let r_point = mod_exp(&params.generator(), k.value(), params);
    let e = schnorr_challenge(params, hash_alg, &r_point, key.verify_key(), msg)?;
    let sk_e = key.sk.value() * &e % params.q();
    let s = (k.value() + params.q() - sk_e) % params.q();
    let mut sig = Vec::new();
    wire::put_uint(&mut sig, &e);
    wire::put_uint(&mut sig, &s);
    Ok(sig)
}

pub fn schnorr_verify(
    params: &SystemParams,
    vk: &ZpElement,
    hash_alg: u8,
    msg: &[u8],
    sig: &[u8],
) -> Result<(), BlockError> {
    let mut r = Reader::new(sig);
    let e = r.uint("signature e").map_err(|_| BlockError::SignatureInvalid)?;
    let s = r.uint("signature s").map_err(|_| BlockError::SignatureInvalid)?;
    if r.finish("signature").is_err() || &e >= params.q() || &s >= params.q() {
        return Err(BlockError::SignatureInvalid);
    }
    let p = params.p();
    let r_point =
        params.zp(params.generator().value().modpow(&s, p) * vk.value().modpow(&e, p) % p)?;
    let expect = schnorr_challenge(params, hash_alg, &r_point, vk, msg)?;
    if expect == e {
        Ok(())
    } else {
        Err(BlockError::SignatureInvalid)
    }
}

fn schnorr_challenge(
    params: &SystemParams,
    hash_alg: u8,
    r_point: &ZpElement,
    vk: &ZpElement,
    msg: &[u8],
) -> Result<BigUint, BlockError> {
    let r_bytes = r_point.value().to_bytes_be();
    let vk_bytes = vk.value().to_bytes_be();
    let digest = hash_sha256(
        hash_alg,
        &[
            b"accconf-sig",
            &(r_bytes.len() as u32).to_be_bytes(),
            &r_bytes,
            &(vk_bytes.len() as u32).to_be_bytes(),
            &vk_bytes,
            msg,
        ],
    )?;
    Ok(BigUint::from_bytes_be(&digest) % params.q())
}

// --------------------------------------------------------------------------
// Subkey codec: key bytes <-> field elements in Z*_Q.
// --------------------------------------------------------------------------

/// Bytes each subkey can carry so its value stays below Q.
pub fn subkey_width(params: &SystemParams) -> Result<usize, BlockError> {
    let width = ((params.bits_q() - 1) / 8) as usize;
    if width == 0 {
        return Err(BlockError::GroupTooSmall);
    }
    Ok(width)
}

/// Split key bytes into at least `min_subkeys` field elements.
///
/// The key is prefixed with its u32 length, zero-padded to a whole number
/// of chunks, and each chunk maps bijectively to 1 + its big-endian value,
/// so every subkey lands in [1, 2^(8·width)] ⊂ Z*_Q and reassembly is
/// unambiguous for any key length.
pub fn encode_key(
    key: &[u8],
    params: &SystemParams,
    min_subkeys: usize,
) -> Result<Vec<ZqElement>, BlockError> {
    if key.is_empty() {
        return Err(BlockError::EmptyKey);
    }
    let width = subkey_width(params)?;
    let mut buf = Vec::with_capacity(4 + key.len());
    buf.extend_from_slice(&(key.len() as u32).to_be_bytes());
    buf.extend_from_slice(key);
    let natural = buf.len().div_ceil(width);
    let m = natural.max(min_subkeys.max(1));
    if m > u16::MAX as usize {
        return Err(BlockError::KeyTooLong {
            needed: m,
            max: u16::MAX as usize,
        });
    }
    buf.resize(m * width, 0);
    buf.chunks(width)
        .map(|chunk| {
            let v = BigUint::from_bytes_be(chunk) + 1u32;
            params.zq(v).map_err(BlockError::from)
        })
        .collect()
}

/// Reassemble key bytes from extracted subkeys.
pub fn decode_key(subkeys: &[ZqElement], params: &SystemParams) -> Result<Vec<u8>, BlockError> {
    let width = subkey_width(params)?;
    let mut buf = Vec::with_capacity(subkeys.len() * width);
    for subkey in subkeys {
        let v = subkey.value() - 1u32;
        let bytes = v.to_bytes_be();
        let bytes = if bytes == [0] { Vec::new() } else { bytes };
        if bytes.len() > width {
            return Err(WireError::Invalid("subkey exceeds chunk width").into());
        }
        buf.resize(buf.len() + width - bytes.len(), 0);
        buf.extend_from_slice(&bytes);
    }
    if buf.len() < 4 {
        return Err(WireError::Invalid("decoded key shorter than its header").into());
    }
    let len = u32::from_be_bytes([buf[0], buf[1], buf[2], buf[3]]) as usize;
    if len == 0 || 4 + len > buf.len() {
        return Err(WireError::Invalid("decoded key length out of range").into());
    }
    if buf[4 + len..].iter().any(|&b| b != 0) {
        return Err(WireError::Invalid("nonzero padding after key bytes").into());
    }
    Ok(buf[4..4 + len].to_vec())
}

// --------------------------------------------------------------------------
// Block construction.
// --------------------------------------------------------------------------

/// The signed metadata that unlocks cached content.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnablingBlock {
    /// γ_b = τ_b · g^(r·a_0) mod P, one per subkey.
    pub gammas: Vec<ZpElement>,
    /// g^r mod P.
    pub g_r: ZpElement,
    /// Partial Lagrangian coefficients λ̂_k over the server x list.
    pub lambda_hats: Vec<ZqElement>,
    /// Transformed server shares ⟨x_j, g^(r·f(x_j))⟩.
    pub transformed_shares: Vec<(ZqElement, ZpElement)>,
    /// Expiry instant, UNIX seconds; 0 means no expiry.
    pub timeout: u64,
    /// Monotonically increasing rebuild counter.
    pub version: u64,
    pub hash_alg: u8,
    /// Checksum of the plaintext subkeys, signed with the rest of the
    /// header so extraction can tell a wrong share from a corrupt block.
    pub key_check: [u8; 4],
    pub signature: Vec<u8>,
}

impl EnablingBlock {
    pub fn t(&self) -> usize {
        self.transformed_shares.len()
    }

    pub fn subkey_count(&self) -> usize {
        self.gammas.len()
    }

    /// The x coordinates folded into this block; a share whose x appears
    /// here cannot extract (that is revocation working as intended).
    pub fn contains_x(&self, x: &ZqElement) -> bool {
        self.transformed_shares.iter().any(|(xj, _)| xj == x)
    }
}

/// λ̂_k = Π_{j≠k} x_j / (x_j − x_k) mod Q for the t server x values.
///
/// Θ(t²) multiplications, spent once at the server so each client pays a
/// single multiplication per coefficient.
pub fn precompute_partial_lagrangians(
    server_shares: &ServerShareSet,
    params: &SystemParams,
) -> Result<Vec<ZqElement>, BlockError> {
    let xs: Vec<&ZqElement> = server_shares.shares().iter().map(|s| &s.x).collect();
    let mut hats = Vec::with_capacity(xs.len());
    for (k, xk) in xs.iter().enumerate() {
        let mut acc = BigUint::one();
        for (j, xj) in xs.iter().enumerate() {
            if j == k {
                continue;
            }
            let diff = params.zq_sub(xj, xk);
            let inv = mod_inv(&diff, params.q())?;
            acc = acc * xj.value() % params.q();
            acc = acc * inv % params.q();
        }
        hats.push(params.zq(acc)?);
    }
    Ok(hats)
}

fn subkey_checksum(hash_alg: u8, subkeys: &[ZqElement]) -> Result<[u8; 4], BlockError> {
    let mut h_input: Vec<u8> = Vec::new();
    h_input.extend_from_slice(&(subkeys.len() as u16).to_be_bytes());
    for subkey in subkeys {
        wire::put_uint(&mut h_input, subkey.value());
    }
    let digest = hash_sha256(hash_alg, &[b"accconf-keycheck", &h_input])?;
    Ok([digest[0], digest[1], digest[2], digest[3]])
}

pub(crate) fn check_subkey_checksum(
    block: &EnablingBlock,
    subkeys: &[ZqElement],
) -> Result<bool, BlockError> {
    Ok(subkey_checksum(block.hash_alg, subkeys)? == block.key_check)
}

/// Protocol core: blind the subkeys with g^(r·a_0) and transform the
/// server shares under the supplied ephemeral exponent r.
#[allow(clippy::too_many_arguments)]
pub fn build_block_from_subkeys<R: RngCore>(
    subkeys: &[ZqElement],
    r: &ZqElement,
    server_shares: &ServerShareSet,
    a0: &ZqElement,
    params: &SystemParams,
    signing_key: &ProviderSigningKey,
    timeout: u64,
    version: u64,
    rng: &mut R,
) -> Result<EnablingBlock, BlockError> {
    if subkeys.is_empty() {
        return Err(BlockError::EmptyKey);
    }
    if subkeys.len() > u16::MAX as usize {
        return Err(BlockError::KeyTooLong {
            needed: subkeys.len(),
            max: u16::MAX as usize,
        });
    }
    let g = params.generator();
    // r·a_0 and r·f(x_j) stay in Z*_Q: products of nonzero residues mod a prime.
    let blind = mod_exp(&g, params.zq_mul(r, a0).value(), params);
    let gammas = subkeys
        .iter()
        .map(|tau| {
            let tau_p = params.zp(tau.value().clone())?;
            Ok(params.zp_mul(&tau_p, &blind))
        })
        .collect::<Result<Vec<_>, BlockError>>()?;
    let g_r = mod_exp(&g, r.value(), params);
    let lambda_hats = precompute_partial_lagrangians(server_shares, params)?;
    let transformed_shares = server_shares
        .shares()
        .iter()
        .map(|share| {
            let exp = params.zq_mul(r, &share.fx);
            (share.x.clone(), mod_exp(&g, exp.value(), params))
        })
        .collect();
    let mut block = EnablingBlock {
        gammas,
        g_r,
        lambda_hats,
        transformed_shares,
        timeout,
        version,
        hash_alg: HASH_ALG_SHA256,
        key_check: subkey_checksum(HASH_ALG_SHA256, subkeys)?,
        signature: Vec::new(),
    };
    let canonical = canonical_block_bytes(&block);
    block.signature = schnorr_sign(params, signing_key, block.hash_alg, &canonical, rng)?;
    Ok(block)
}

/// Full block build: draw a fresh r, split the key into subkeys,
/// blind, transform, sign.
pub fn build_block<R: RngCore>(
    key_bytes: &[u8],
    server_shares: &ServerShareSet,
    a0: &ZqElement,
    params: &SystemParams,
    signing_key: &ProviderSigningKey,
    timeout: u64,
    rng: &mut R,
) -> Result<EnablingBlock, BlockError> {
    let subkeys = encode_key(key_bytes, params, 1)?;
    let r = zq_rand(params, rng);
    build_block_from_subkeys(
        &subkeys,
        &r,
        server_shares,
        a0,
        params,
        signing_key,
        timeout,
        1,
        rng,
    )
}

// --------------------------------------------------------------------------
// Mutable provider-side state: versioning and revocation.
// --------------------------------------------------------------------------

/// Single-writer provider state: the server share set, the current key
/// material, the rebuild counter, and how many slots revocation has used.
#[derive(Clone, Debug)]
pub struct BlockState {
    params: SystemParams,
    signing_key: ProviderSigningKey,
    a0: ZqElement,
    server_shares: ServerShareSet,
    subkeys: Vec<ZqElement>,
    version: u64,
    revoked: usize,
}

impl BlockState {
    pub fn new(
        params: SystemParams,
        signing_key: ProviderSigningKey,
        poly: &SecretPolynomial,
        server_shares: ServerShareSet,
    ) -> Self {
        BlockState {
            params,
            signing_key,
            a0: poly.secret().clone(),
            server_shares,
            subkeys: Vec::new(),
            version: 0,
            revoked: 0,
        }
    }

    /// Restore counters persisted across runs (CLI state).
    pub fn with_counters(mut self, version: u64, revoked: usize) -> Self {
        self.version = version;
        self.revoked = revoked;
        self
    }

    pub fn set_key_bytes(&mut self, key: &[u8], min_subkeys: usize) -> Result<(), BlockError> {
        self.subkeys = encode_key(key, &self.params, min_subkeys)?;
        Ok(())
    }

    pub fn set_subkeys(&mut self, subkeys: Vec<ZqElement>) {
        self.subkeys = subkeys;
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn revoked_count(&self) -> usize {
        self.revoked
    }

    pub fn server_shares(&self) -> &ServerShareSet {
        &self.server_shares
    }

    pub fn verify_key(&self) -> &ZpElement {
        self.signing_key.verify_key()
    }

    /// Rebuild the current block under a fresh r, bumping the version.
    pub fn rebuild<R: RngCore>(
        &mut self,
        timeout: u64,
        rng: &mut R,
    ) -> Result<EnablingBlock, BlockError> {
        if self.subkeys.is_empty() {
            return Err(BlockError::NoKeyMaterial);
        }
        self.version += 1;
        let r = zq_rand(&self.params, rng);
        build_block_from_subkeys(
            &self.subkeys,
            &r,
            &self.server_shares,
            &self.a0,
            &self.params,
            &self.signing_key,
            timeout,
            self.version,
            rng,
        )
    }

    /// Fold a revoked user's tuple into the server set, replacing the
    /// oldest remaining original slot (FIFO), then rebuild.
    pub fn revoke_user<R: RngCore>(
        &mut self,
        revoked: ShareTuple,
        timeout: u64,
        rng: &mut R,
    ) -> Result<EnablingBlock, BlockError> {
        let t = self.server_shares.t();
        if self.revoked >= t {
            return Err(BlockError::ThresholdExceeded(t));
        }
        let tuple = ShareTuple {
            owner: match revoked.owner {
                ShareOwner::User(id) | ShareOwner::Revoked(id) => ShareOwner::Revoked(id),
                ShareOwner::Server => {
                    return Err(BlockError::BadPlan("cannot revoke a server share"))
                }
            },
            ..revoked
        };
        self.server_shares.replace(self.revoked, tuple)?;
        self.revoked += 1;
        self.rebuild(timeout, rng)
    }
}

// --------------------------------------------------------------------------
// Reactive plan for |R| > t.
// --------------------------------------------------------------------------

/// Assignment of share sets to subkeys so every revoked user is folded
/// into at least one subkey's server set.
#[derive(Clone, Debug)]
pub struct SubkeyPlan {
    assignments: Vec<ServerShareSet>,
}

impl SubkeyPlan {
    pub fn m(&self) -> usize {
        self.assignments.len()
    }

    pub fn assignments(&self) -> &[ServerShareSet] {
        &self.assignments
    }

    /// Every revoked user appears in at least one assignment.
    pub fn covers(&self, revoked: &[ShareTuple]) -> bool {
        revoked.iter().all(|r| {
            self.assignments
                .iter()
                .any(|set| set.shares().iter().any(|s| s.x == r.x))
        })
    }
}

/// Fill m subkey share sets of t slots each with the revoked tuples in
/// order, padding underfull sets with ordinary server shares.
pub fn plan_subkeys(
    revoked: &[ShareTuple],
    t: usize,
    m: usize,
    spare_server_shares: &ServerShareSet,
) -> Result<SubkeyPlan, BlockError> {
    if t == 0 || m == 0 {
        return Err(BlockError::BadPlan("t and m must be positive"));
    }
    if revoked.len() > m * t {
        return Err(BlockError::BadPlan("need m >= ceil(|revoked| / t) subkeys"));
    }
    let mut assignments = Vec::with_capacity(m);
    for b in 0..m {
        let mut slots: Vec<ShareTuple> = revoked.iter().skip(b * t).take(t).cloned().collect();
        let mut spares = spare_server_shares.shares().iter();
        while slots.len() < t {
            let spare = spares
                .next()
                .ok_or(BlockError::BadPlan("not enough spare server shares to pad"))?;
            if slots.iter().any(|s| s.x == spare.x) {
                continue;
            }
            slots.push(spare.clone());
        }
        assignments.push(ServerShareSet::new(slots)?);
    }
    let plan = SubkeyPlan { assignments };
    debug_assert!(plan.covers(revoked));
    Ok(plan)
}

/// Build one enabling block per planned subkey. Each block carries its own
/// share set, so a revoked user fails on at least one block and cannot
/// reassemble the full key; legitimate users recover every piece.
#[allow(clippy::too_many_arguments)]
pub fn build_reactive_blocks<R: RngCore>(
    key_bytes: &[u8],
    plan: &SubkeyPlan,
    a0: &ZqElement,
    params: &SystemParams,
    signing_key: &ProviderSigningKey,
    timeout: u64,
    version: u64,
    rng: &mut R,
) -> Result<Vec<EnablingBlock>, BlockError> {
    let subkeys = encode_key(key_bytes, params, plan.m())?;
    if subkeys.len() != plan.m() {
        return Err(BlockError::PlanTooSmall {
            needed: subkeys.len(),
            have: plan.m(),
        });
    }
    subkeys
        .iter()
        .zip(plan.assignments())
        .map(|(subkey, share_set)| {
            let r = zq_rand(params, rng);
            build_block_from_subkeys(
                std::slice::from_ref(subkey),
                &r,
                share_set,
                a0,
                params,
                signing_key,
                timeout,
                version,
                rng,
            )
        })
        .collect()
}

// --------------------------------------------------------------------------
// Lazy-update timeout.
// --------------------------------------------------------------------------

/// Clamp band and proportionality constant for the enabling-block expiry.
#[derive(Clone, Copy, Debug)]
pub struct TimeoutPolicy {
    pub base_seconds: f64,
    pub min_seconds: f64,
    pub max_seconds: f64,
    pub epsilon: f64,
}

impl Default for TimeoutPolicy {
    fn default() -> Self {
        TimeoutPolicy {
            base_seconds: 3600.0,
            min_seconds: 60.0,
            max_seconds: 86_400.0,
            epsilon: 1e-9,
        }
    }
}

/// TO ∝ 1/ζ(n): the faster users churn, the sooner cached blocks expire.
pub fn refresh_timeout(turnover_per_sec: f64, policy: &TimeoutPolicy) -> f64 {
    let to = policy.base_seconds / turnover_per_sec.max(policy.epsilon);
    to.clamp(policy.min_seconds, policy.max_seconds)
}

// --------------------------------------------------------------------------
// Clustering.
// --------------------------------------------------------------------------

/// An independent cluster: its own polynomial, registry, and block, so a
/// share issued in one cluster is useless in another and revocation only
/// needs a local update.
#[derive(Clone, Debug)]
pub struct Cluster {
    pub cluster_id: u32,
    pub registry: crate::shares::UserRegistry,
    pub state: BlockState,
    pub current_block: EnablingBlock,
}

impl Cluster {
    /// Stand up a cluster over shared group params: fresh polynomial of
    /// degree t, n registered users, and a first signed block.
    pub fn bootstrap<R: RngCore>(
        cluster_id: u32,
        params: &SystemParams,
        t: usize,
        n: usize,
        key_bytes: &[u8],
        timeout: u64,
        rng: &mut R,
    ) -> Result<Self, BlockError> {
        let poly = SecretPolynomial::generate(params, t, rng)?;
        let (server_shares, registry) = crate::shares::generate_shares(&poly, params, n, rng)?;
        let signing_key = ProviderSigningKey::generate(params, rng);
        let mut state = BlockState::new(params.clone(), signing_key, &poly, server_shares);
        state.set_key_bytes(key_bytes, 1)?;
        let current_block = state.rebuild(timeout, rng)?;
        Ok(Cluster {
            cluster_id,
            registry,
            state,
            current_block,
        })
    }
}

// --------------------------------------------------------------------------
// Wire format.
// --------------------------------------------------------------------------

/// Serialization with the signature field emptied; this is what gets
/// signed and verified.
pub fn canonical_block_bytes(block: &EnablingBlock) -> Vec<u8> {
    serialize_block_inner(block, true)
}

/// Full wire format: magic "ACFB", format version, block version, timeout,
/// hash tag, m, t, key checksum, γ values, g^r, Λ, E^e pairs, signature.
pub fn serialize_block(block: &EnablingBlock) -> Vec<u8> {
    serialize_block_inner(block, false)
}

fn serialize_block_inner(block: &EnablingBlock, zero_signature: bool) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(b"ACFB");
    buf.push(1);
    buf.extend_from_slice(&block.version.to_be_bytes());
    buf.extend_from_slice(&block.timeout.to_be_bytes());
    buf.push(block.hash_alg);
    buf.extend_from_slice(&(block.gammas.len() as u16).to_be_bytes());
    buf.extend_from_slice(&(block.transformed_shares.len() as u32).to_be_bytes());
    buf.extend_from_slice(&block.key_check);
    for gamma in &block.gammas {
        wire::put_uint(&mut buf, gamma.value());
    }
    wire::put_uint(&mut buf, block.g_r.value());
    for hat in &block.lambda_hats {
        wire::put_uint(&mut buf, hat.value());
    }
    for (x, y) in &block.transformed_shares {
        wire::put_uint(&mut buf, x.value());
        wire::put_uint(&mut buf, y.value());
    }
    if zero_signature {
        wire::put_bytes(&mut buf, &[]);
    } else {
        wire::put_bytes(&mut buf, &block.signature);
    }
    buf
}

/// Parse a block and validate element ranges; does not verify provenance.
pub fn deserialize_block(bytes: &[u8], params: &SystemParams) -> Result<EnablingBlock, BlockError> {
    let mut r = Reader::new(bytes);
    r.expect_magic("ACFB")?;
    let format_version = r.u8("format version")?;
    if format_version != 1 {
        return Err(WireError::UnsupportedVersion(format_version).into());
    }
    let version = r.u64("block version")?;
    let timeout = r.u64("timeout")?;
    let hash_alg = r.u8("hash alg")?;
    if hash_alg != HASH_ALG_SHA256 {
        return Err(BlockError::UnsupportedHashAlg(hash_alg));
    }
    let m = r.u16("m")? as usize;
    let t = r.u32("t")? as usize;
    if m == 0 || t == 0 {
        return Err(WireError::Invalid("m and t must be positive").into());
    }
    let mut key_check = [0u8; 4];
    key_check.copy_from_slice(r.take(4, "key checksum")?);
    let mut gammas = Vec::with_capacity(m);
    for _ in 0..m {
        gammas.push(params.zp(r.uint("gamma")?)?);
    }
    let g_r = params.zp(r.uint("g^r")?)?;
    let mut lambda_hats = Vec::with_capacity(t);
    for _ in 0..t {
        lambda_hats.push(params.zq(r.uint("lambda hat")?)?);
    }
    let mut transformed_shares = Vec::with_capacity(t);
    for _ in 0..t {
        let x = params.zq(r.uint("share x")?)?;
        let y = params.zp(r.uint("share y")?)?;
        transformed_shares.push((x, y));
    }
    let signature = r.bytes("signature")?.to_vec();
    r.finish("trailing bytes after block")?;
    let mut seen = std::collections::BTreeSet::new();
    if !transformed_shares.iter().all(|(x, _)| seen.insert(x.clone())) {
        return Err(WireError::Invalid("duplicate x in transformed shares").into());
    }
    Ok(EnablingBlock {
        gammas,
        g_r,
        lambda_hats,
        transformed_shares,
        timeout,
        version,
        hash_alg,
        key_check,
        signature,
    })
}

/// Parse and verify the provider signature in one step.
pub fn deserialize_block_verified(
    bytes: &[u8],
    params: &SystemParams,
    vk: &ZpElement,
) -> Result<EnablingBlock, BlockError> {
    let block = deserialize_block(bytes, params)?;
    verify_block_signature(&block, params, vk)?;
    Ok(block)
}

pub fn verify_block_signature(
    block: &EnablingBlock,
    params: &SystemParams,
    vk: &ZpElement,
) -> Result<(), BlockError> {
    schnorr_verify(
        params,
        vk,
        block.hash_alg,
        &canonical_block_bytes(block),
        &block.signature,
    )
}

/// Recompute Λ from the block's own x list and compare; the coefficients
/// are redundant data and must stay consistent with E^e.
pub fn verify_lambda_hats(
    block: &EnablingBlock,
    params: &SystemParams,
) -> Result<bool, BlockError> {
    let shares: Vec<ShareTuple> = block
        .transformed_shares
        .iter()
        .map(|(x, _)| ShareTuple {
            x: x.clone(),
            fx: params.zq(BigUint::one()).expect("1 < Q"),
            owner: ShareOwner::Server,
        })
        .collect();
    let recomputed = precompute_partial_lagrangians(&ServerShareSet::new(shares)?, params)?;
    Ok(recomputed == block.lambda_hats)
}
