//! Content encryption, chunking, and hierarchical naming.
//!
//! Objects are encrypted under the key carried by an enabling block, then
//! split into fixed-size named chunks. Names follow the hierarchical
//! convention `/provider/type/category/title/V3/001.avi`; enabling-block
//! chunks reuse the same shape with the service tier in place of the
//! content type, which is what keeps the two distinguishable in caches.
//!
//! Two chunk-numbering schemes exist: sequential zero-padded ids, and
//! random ids where each chunk carries the id of the next one so only the
//! first id is predictable.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::wire::{Reader, WireError};

/// Tag length appended by the default cipher.
pub const TAG_LEN: usize = 32;

#[derive(Debug, Error)]
pub enum ContentError {
    #[error("key bytes must be nonempty")]
    EmptyKey,
    #[error("chunk size must be at least 1 byte")]
    ChunkSizeZero,
    #[error("authentication tag mismatch")]
    AuthFailed,
    #[error("invalid name component: {0}")]
    BadName(&'static str),
    #[error("chunk {0} missing from store")]
    MissingChunk(String),
    #[error("{0}")]
    BadManifest(&'static str),
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

// --------------------------------------------------------------------------
// Naming.
// --------------------------------------------------------------------------

/// Ordered name components; `chunk` is absent for the object prefix.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContentName {
    pub provider: String,
    pub service: String,
    pub category: String,
    pub title: String,
    pub version: u32,
    pub chunk: Option<String>,
}

impl ContentName {
    /// Object prefix, e.g. `/Netflix.com/movie/scifi/starwars/V3`.
    pub fn object(
        provider: &str,
        service: &str,
        category: &str,
        title: &str,
        version: u32,
    ) -> Result<Self, ContentError> {
        for (component, what) in [
            (provider, "provider"),
            (service, "service"),
            (category, "category"),
            (title, "title"),
        ] {
            if component.is_empty() {
                return Err(ContentError::BadName("empty component"));
            }
            if component.contains('/') {
                return Err(ContentError::BadName(what));
            }
        }
        Ok(ContentName {
            provider: provider.to_string(),
            service: service.to_string(),
            category: category.to_string(),
            title: title.to_string(),
            version,
            chunk: None,
        })
    }

    /// The same name with a chunk id appended.
    pub fn with_chunk(&self, chunk_id: &str) -> Result<Self, ContentError> {
        if chunk_id.is_empty() || chunk_id.contains('/') {
            return Err(ContentError::BadName("chunk id"));
        }
        let mut name = self.clone();
        name.chunk = Some(chunk_id.to_string());
        Ok(name)
    }

    pub fn prefix(&self) -> Self {
        let mut name = self.clone();
        name.chunk = None;
        name
    }
}

impl fmt::Display for ContentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "/{}/{}/{}/{}/V{}",
            self.provider, self.service, self.category, self.title, self.version
        )?;
        if let Some(chunk) = &self.chunk {
            write!(f, "/{chunk}")?;
        }
        Ok(())
    }
}

/// Percent-encode a name so it is safe as a single file name.
pub fn percent_encode_name(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    for byte in name.bytes() {
        match byte {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'-' | b'_' | b'.' | b'~' => {
                out.push(byte as char)
            }
            other => out.push_str(&format!("%{other:02X}")),
        }
    }
    out
}

// --------------------------------------------------------------------------
// Symmetric encryption.
// --------------------------------------------------------------------------

/// Pluggable symmetric cipher; content is sealed once and decrypted by
/// every legitimate client after key extraction.
pub trait ContentCipher {
    fn seal(&self, key: &[u8], nonce: u64, plaintext: &[u8]) -> Vec<u8>;
    fn open(&self, key: &[u8], nonce: u64, sealed: &[u8]) -> Result<Vec<u8>, ContentError>;
}

/// Default cipher: SHA-256 keystream over (key ‖ nonce ‖ counter) XORed
/// with the plaintext, plus a 32-byte hash tag over the ciphertext.
pub struct HashStreamCipher;

impl HashStreamCipher {
    fn keystream_block(key: &[u8], nonce: u64, counter: u64) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(b"accconf-stream");
        h.update((key.len() as u64).to_be_bytes());
        h.update(key);
        h.update(nonce.to_be_bytes());
        h.update(counter.to_be_bytes());
        h.finalize().into()
    }

    fn tag(key: &[u8], nonce: u64, ciphertext: &[u8]) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(b"accconf-tag");
        h.update((key.len() as u64).to_be_bytes());
        h.update(key);
        h.update(nonce.to_be_bytes());
        h.update(ciphertext);
        h.finalize().into()
    }

    fn xor_stream(key: &[u8], nonce: u64, data: &[u8]) -> Vec<u8> {
        let mut out = Vec::with_capacity(data.len());
        for (counter, block) in data.chunks(32).enumerate() {
            let ks = Self::keystream_block(key, nonce, counter as u64);
            out.extend(block.iter().zip(ks.iter()).map(|(d, k)| d ^ k));
        }
        out
    }
}

impl ContentCipher for HashStreamCipher {
    fn seal(&self, key: &[u8], nonce: u64, plaintext: &[u8]) -> Vec<u8> {
        let mut out = Self::xor_stream(key, nonce, plaintext);
        out.extend_from_slice(&Self::tag(key, nonce, &out));
        out
    }

    fn open(&self, key: &[u8], nonce: u64, sealed: &[u8]) -> Result<Vec<u8>, ContentError> {
        if sealed.len() < TAG_LEN {
            return Err(ContentError::AuthFailed);
        }
        let (ct, tag) = sealed.split_at(sealed.len() - TAG_LEN);
        if Self::tag(key, nonce, ct) != tag {
            return Err(ContentError::AuthFailed);
        }
        Ok(Self::xor_stream(key, nonce, ct))
    }
}

/// A named encrypted object, linked to the enabling-block version whose
/// key sealed it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncryptedContent {
    pub object_name: ContentName,
    pub ciphertext: Vec<u8>,
    pub key_id: u64,
    pub nonce: u64,
}

pub fn encrypt_content(
    object_name: &ContentName,
    plaintext: &[u8],
    key_bytes: &[u8],
    nonce: u64,
    key_id: u64,
) -> Result<EncryptedContent, ContentError> {
    if key_bytes.is_empty() {
        return Err(ContentError::EmptyKey);
    }
    Ok(EncryptedContent {
        object_name: object_name.prefix(),
        ciphertext: HashStreamCipher.seal(key_bytes, nonce, plaintext),
        key_id,
        nonce,
    })
}

pub fn decrypt_content(
    content: &EncryptedContent,
    key_bytes: &[u8],
) -> Result<Vec<u8>, ContentError> {
    if key_bytes.is_empty() {
        return Err(ContentError::EmptyKey);
    }
    HashStreamCipher.open(key_bytes, content.nonce, &content.ciphertext)
}

// --------------------------------------------------------------------------
// Chunking.
// --------------------------------------------------------------------------

/// Chunk-numbering scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Numbering {
    Sequential,
    Random { seed: u64 },
}

/// One named chunk; `next_chunk_id` is set only in random numbering.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chunk {
    pub name: ContentName,
    pub payload: Vec<u8>,
    pub next_chunk_id: Option<String>,
    pub seq_index: usize,
}

/// The id every object starts from, in both numbering schemes.
pub const FIRST_CHUNK_ID: &str = "001";

/// Split a payload into chunks named under `prefix`.
///
/// Sequential ids are zero-padded decimals from 001. Random ids keep the
/// first id fixed and chain each chunk to a seeded 64-bit hex token,
/// collision-free within the object.
pub fn chunk_object(
    prefix: &ContentName,
    payload: &[u8],
    chunk_size: usize,
    numbering: Numbering,
) -> Result<Vec<Chunk>, ContentError> {
    if chunk_size == 0 {
        return Err(ContentError::ChunkSizeZero);
    }
    let pieces: Vec<&[u8]> = if payload.is_empty() {
        vec![&[]]
    } else {
        payload.chunks(chunk_size).collect()
    };
    let ids: Vec<String> = match numbering {
        Numbering::Sequential => (1..=pieces.len()).map(|i| format!("{i:03}")).collect(),
        Numbering::Random { seed } => {
            let mut rng = crate::rng::substream(seed, "chunk-ids");
            let mut seen = BTreeSet::new();
            seen.insert(FIRST_CHUNK_ID.to_string());
            let mut ids = vec![FIRST_CHUNK_ID.to_string()];
            while ids.len() < pieces.len() {
                use rand::RngCore;
                let token = format!("{:016x}", rng.next_u64());
                if seen.insert(token.clone()) {
                    ids.push(token);
                }
            }
            ids
        }
    };
    pieces
        .iter()
        .enumerate()
        .map(|(i, piece)| {
            let next_chunk_id = match numbering {
                Numbering::Sequential => None,
                Numbering::Random { .. } => ids.get(i + 1).cloned(),
            };
            Ok(Chunk {
                name: prefix.with_chunk(&ids[i])?,
                payload: piece.to_vec(),
                next_chunk_id,
                seq_index: i,
            })
        })
        .collect()
}

/// Rebuild the payload: follow the id chain in random mode, sort ids
/// numerically in sequential mode.
pub fn reassemble(chunks: &[Chunk]) -> Result<Vec<u8>, ContentError> {
    if chunks.is_empty() {
        return Ok(Vec::new());
    }
    let chained = chunks.iter().any(|c| c.next_chunk_id.is_some());
    let mut payload = Vec::new();
    if chained || chunks.len() == 1 {
        let mut by_id: std::collections::BTreeMap<&str, &Chunk> = chunks
            .iter()
            .map(|c| (c.name.chunk.as_deref().unwrap_or(""), c))
            .collect();
        let mut next = Some(FIRST_CHUNK_ID.to_string());
        while let Some(id) = next {
            let chunk = by_id
                .remove(id.as_str())
                .ok_or(ContentError::MissingChunk(id))?;
            payload.extend_from_slice(&chunk.payload);
            next = chunk.next_chunk_id.clone();
        }
        if !by_id.is_empty() {
            return Err(ContentError::BadManifest("orphan chunks outside the chain"));
        }
    } else {
        let mut ordered: Vec<&Chunk> = chunks.iter().collect();
        ordered.sort_by_key(|c| {
            c.name
                .chunk
                .as_deref()
                .and_then(|id| id.parse::<u64>().ok())
                .unwrap_or(u64::MAX)
        });
        for chunk in ordered {
            payload.extend_from_slice(&chunk.payload);
        }
    }
    Ok(payload)
}

// --------------------------------------------------------------------------
// On-disk chunk store.
// --------------------------------------------------------------------------

/// Per-object manifest stored next to the chunk files.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub object_name: String,
    pub chunk_count: usize,
    pub numbering: Numbering,
    pub first_chunk_id: String,
    pub key_id: u64,
}

fn chunk_file_bytes(chunk: &Chunk) -> Vec<u8> {
    // The chunk file mirrors the data packet: the id of the next chunk to
    // request travels in-band, then the raw payload.
    let mut buf = Vec::new();
    buf.extend_from_slice(b"ACFC");
    buf.push(1);
    let next = chunk.next_chunk_id.as_deref().unwrap_or("");
    buf.extend_from_slice(&(next.len() as u32).to_be_bytes());
    buf.extend_from_slice(next.as_bytes());
    buf.extend_from_slice(&chunk.payload);
    buf
}

fn parse_chunk_file(bytes: &[u8]) -> Result<(Option<String>, Vec<u8>), ContentError> {
    let mut r = Reader::new(bytes);
    r.expect_magic("ACFC")?;
    let version = r.u8("version")?;
    if version != 1 {
        return Err(WireError::UnsupportedVersion(version).into());
    }
    let next = r.bytes("next chunk id")?;
    let next = if next.is_empty() {
        None
    } else {
        Some(
            String::from_utf8(next.to_vec())
                .map_err(|_| WireError::Invalid("next id not utf-8"))?,
        )
    };
    let len = bytes.len() - 4 - 1 - 4 - next.as_deref().map_or(0, str::len);
    let payload = r.take(len, "payload")?.to_vec();
    Ok((next, payload))
}

pub fn chunk_path(dir: &Path, name: &ContentName) -> PathBuf {
    dir.join(percent_encode_name(&name.to_string()))
}

pub fn manifest_path(dir: &Path, prefix: &ContentName) -> PathBuf {
    dir.join(format!(
        "{}.manifest.json",
        percent_encode_name(&prefix.to_string())
    ))
}

/// Write one file per chunk plus the object manifest.
pub fn write_object_store(
    dir: &Path,
    prefix: &ContentName,
    chunks: &[Chunk],
    numbering: Numbering,
    key_id: u64,
) -> Result<Manifest, ContentError> {
    fs::create_dir_all(dir)?;
    for chunk in chunks {
        let mut file = fs::File::create(chunk_path(dir, &chunk.name))?;
        file.write_all(&chunk_file_bytes(chunk))?;
    }
    let manifest = Manifest {
        object_name: prefix.to_string(),
        chunk_count: chunks.len(),
        numbering,
        first_chunk_id: chunks
            .first()
            .and_then(|c| c.name.chunk.clone())
            .unwrap_or_else(|| FIRST_CHUNK_ID.to_string()),
        key_id,
    };
    let json = serde_json::to_vec_pretty(&manifest)?;
    fs::write(manifest_path(dir, prefix), json)?;
    Ok(manifest)
}

/// Load a stored object by walking its chunks and reassembling the payload.
pub fn read_object_store(
    dir: &Path,
    prefix: &ContentName,
) -> Result<(Manifest, Vec<u8>), ContentError> {
    let manifest: Manifest = serde_json::from_slice(&fs::read(manifest_path(dir, prefix))?)?;
    let mut payload = Vec::new();
    match manifest.numbering {
        Numbering::Sequential => {
            for i in 1..=manifest.chunk_count {
                let name = prefix.with_chunk(&format!("{i:03}"))?;
                let bytes = fs::read(chunk_path(dir, &name))
                    .map_err(|_| ContentError::MissingChunk(name.to_string()))?;
                let (_, piece) = parse_chunk_file(&bytes)?;
                payload.extend_from_slice(&piece);
            }
        }
        Numbering::Random { .. } => {
            let mut next = Some(manifest.first_chunk_id.clone());
            let mut loaded = 0usize;
            while let Some(id) = next {
                let name = prefix.with_chunk(&id)?;
                let bytes = fs::read(chunk_path(dir, &name))
                    .map_err(|_| ContentError::MissingChunk(name.to_string()))?;
                let (chain_next, piece) = parse_chunk_file(&bytes)?;
                payload.extend_from_slice(&piece);
                loaded += 1;
                next = chain_next;
            }
            if loaded != manifest.chunk_count {
                return Err(ContentError::BadManifest("chain length != chunk count"));
            }
        }
    }
    Ok((manifest, payload))
}
