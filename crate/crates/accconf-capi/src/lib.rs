//! C ABI for the client side of the access-control framework.
//!
//! The surface covers what a player binding needs: load system
//! parameters, the provider's verification key, an enabling block, and
//! one user share, then extract the content key. Handles are opaque;
//! every function returns an `AccconfStatus` and writes results through
//! out-pointers. Byte buffers use a two-call pattern: call with a null
//! buffer to learn the required size.

use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use accconf::block::{deserialize_block, verify_key_from_bytes, BlockError, EnablingBlock};
use accconf::extract::{extract, extract_no_precompute, ExtractError};
use accconf::group::{generate_params, GroupError, SystemParams, ZpElement};
use accconf::shares::{share_from_bytes, ShareError, ShareTuple};

/// Result of every API call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AccconfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    CryptoFailure = 3,
    Malformed = 4,
    CapacityExceeded = 5,
    SignatureInvalid = 6,
    BlockExpired = 7,
    RevokedShare = 8,
    KeyChecksumMismatch = 9,
    BufferTooSmall = 10,
    InternalPanic = 11,
}

/// Opaque Schnorr-group parameters.
pub struct AccconfParams(SystemParams);

/// Opaque user share.
pub struct AccconfShare(ShareTuple);

/// Opaque enabling block.
pub struct AccconfBlock(EnablingBlock);

/// Opaque provider verification key.
pub struct AccconfVerifyKey(ZpElement);

impl From<GroupError> for AccconfStatus {
    fn from(err: GroupError) -> Self {
        match err {
            GroupError::BitsTooSmall(_) => AccconfStatus::InvalidArgument,
            GroupError::Wire(_) | GroupError::Invalid(_) | GroupError::OutOfRange(_) => {
                AccconfStatus::Malformed
            }
            _ => AccconfStatus::CryptoFailure,
        }
    }
}

impl From<ShareError> for AccconfStatus {
    fn from(err: ShareError) -> Self {
        match err {
            ShareError::CapacityExceeded => AccconfStatus::CapacityExceeded,
            ShareError::Wire(_) | ShareError::InvalidShareSet => AccconfStatus::Malformed,
            ShareError::Group(inner) => inner.into(),
            _ => AccconfStatus::InvalidArgument,
        }
    }
}

impl From<BlockError> for AccconfStatus {
    fn from(err: BlockError) -> Self {
        match err {
            BlockError::SignatureInvalid => AccconfStatus::SignatureInvalid,
            BlockError::ThresholdExceeded(_) => AccconfStatus::CapacityExceeded,
            BlockError::Wire(_) | BlockError::UnsupportedHashAlg(_) => AccconfStatus::Malformed,
            BlockError::Group(inner) => inner.into(),
            _ => AccconfStatus::InvalidArgument,
        }
    }
}

impl From<ExtractError> for AccconfStatus {
    fn from(err: ExtractError) -> Self {
        match err {
            ExtractError::SignatureInvalid => AccconfStatus::SignatureInvalid,
            ExtractError::Expired { .. } => AccconfStatus::BlockExpired,
            ExtractError::RevokedShare => AccconfStatus::RevokedShare,
            ExtractError::KeyChecksum => AccconfStatus::KeyChecksumMismatch,
            ExtractError::SubkeyDecode(_) => AccconfStatus::Malformed,
            ExtractError::Group(_) => AccconfStatus::CryptoFailure,
        }
    }
}

fn guarded(body: impl FnOnce() -> AccconfStatus) -> AccconfStatus {
    catch_unwind(AssertUnwindSafe(body)).unwrap_or(AccconfStatus::InternalPanic)
}

unsafe fn input<'a>(ptr: *const u8, len: usize) -> Option<&'a [u8]> {
    if ptr.is_null() {
        None
    } else {
        Some(slice::from_raw_parts(ptr, len))
    }
}

/// Copy `bytes` into (`buf`, `cap`), reporting the required size through
/// `written`. A null `buf` only queries the size.
unsafe fn copy_out(bytes: &[u8], buf: *mut u8, cap: usize, written: *mut usize) -> AccconfStatus {
    if written.is_null() {
        return AccconfStatus::NullPointer;
    }
    *written = bytes.len();
    if buf.is_null() {
        return AccconfStatus::Ok;
    }
    if cap < bytes.len() {
        return AccconfStatus::BufferTooSmall;
    }
    std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf, bytes.len());
    AccconfStatus::Ok
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn accconf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn accconf_status_message(status: AccconfStatus) -> *const c_char {
    let msg: &'static CStr = match status {
        AccconfStatus::Ok => c"ok",
        AccconfStatus::NullPointer => c"null pointer argument",
        AccconfStatus::InvalidArgument => c"invalid argument",
        AccconfStatus::CryptoFailure => c"cryptographic failure",
        AccconfStatus::Malformed => c"malformed input bytes",
        AccconfStatus::CapacityExceeded => c"capacity or threshold exceeded",
        AccconfStatus::SignatureInvalid => c"block signature verification failed",
        AccconfStatus::BlockExpired => c"enabling block expired",
        AccconfStatus::RevokedShare => c"share is revoked",
        AccconfStatus::KeyChecksumMismatch => c"recovered key fails the block checksum",
        AccconfStatus::BufferTooSmall => c"output buffer too small",
        AccconfStatus::InternalPanic => c"internal panic",
    };
    msg.as_ptr()
}

// --------------------------------------------------------------------------
// Parameters.
// --------------------------------------------------------------------------

/// Search for a Schnorr group with a `bits_q`-bit order, deterministically
/// from `seed`.
///
/// # Safety
/// `out` must point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn accconf_params_generate(
    bits_q: u32,
    seed: u64,
    out: *mut *mut AccconfParams,
) -> AccconfStatus {
    guarded(|| {
        if out.is_null() {
            return AccconfStatus::NullPointer;
        }
        match generate_params(bits_q, seed) {
            Ok(params) => {
                *out = Box::into_raw(Box::new(AccconfParams(params)));
                AccconfStatus::Ok
            }
            Err(err) => err.into(),
        }
    })
}

/// Parse and fully validate serialized parameters.
///
/// # Safety
/// `bytes`/`len` must be readable; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn accconf_params_from_bytes(
    bytes: *const u8,
    len: usize,
    out: *mut *mut AccconfParams,
) -> AccconfStatus {
    guarded(|| {
        let Some(bytes) = input(bytes, len) else {
            return AccconfStatus::NullPointer;
        };
        if out.is_null() {
            return AccconfStatus::NullPointer;
        }
        match SystemParams::from_bytes(bytes) {
            Ok(params) => {
                *out = Box::into_raw(Box::new(AccconfParams(params)));
                AccconfStatus::Ok
            }
            Err(err) => err.into(),
        }
    })
}

/// Serialize parameters; two-call pattern via `buf == NULL`.
///
/// # Safety
/// Pointers must be valid for the sizes given.
#[no_mangle]
pub unsafe extern "C" fn accconf_params_to_bytes(
    params: *const AccconfParams,
    buf: *mut u8,
    cap: usize,
    written: *mut usize,
) -> AccconfStatus {
    guarded(|| {
        let Some(params) = params.as_ref() else {
            return AccconfStatus::NullPointer;
        };
        copy_out(&params.0.to_bytes(), buf, cap, written)
    })
}

/// Bit length of the group order Q; 0 for a null handle.
///
/// # Safety
/// `params` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn accconf_params_bits_q(params: *const AccconfParams) -> u32 {
    params.as_ref().map_or(0, |p| p.0.bits_q())
}

/// # Safety
/// `params` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn accconf_params_free(params: *mut AccconfParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

// --------------------------------------------------------------------------
// Shares, verification keys, blocks.
// --------------------------------------------------------------------------

/// Parse a serialized user share against the given parameters.
///
/// # Safety
/// `bytes`/`len` must be readable; `params` live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn accconf_share_from_bytes(
    bytes: *const u8,
    len: usize,
    params: *const AccconfParams,
    out: *mut *mut AccconfShare,
) -> AccconfStatus {
    guarded(|| {
        let (Some(bytes), Some(params)) = (input(bytes, len), params.as_ref()) else {
            return AccconfStatus::NullPointer;
        };
        if out.is_null() {
            return AccconfStatus::NullPointer;
        }
        match share_from_bytes(bytes, &params.0) {
            Ok((share, _timeout)) => {
                *out = Box::into_raw(Box::new(AccconfShare(share)));
                AccconfStatus::Ok
            }
            Err(err) => err.into(),
        }
    })
}

/// # Safety
/// `share` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn accconf_share_free(share: *mut AccconfShare) {
    if !share.is_null() {
        drop(Box::from_raw(share));
    }
}

/// Parse a serialized provider verification key.
///
/// # Safety
/// `bytes`/`len` must be readable; `params` live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn accconf_verify_key_from_bytes(
    bytes: *const u8,
    len: usize,
    params: *const AccconfParams,
    out: *mut *mut AccconfVerifyKey,
) -> AccconfStatus {
    guarded(|| {
        let (Some(bytes), Some(params)) = (input(bytes, len), params.as_ref()) else {
            return AccconfStatus::NullPointer;
        };
        if out.is_null() {
            return AccconfStatus::NullPointer;
        }
        match verify_key_from_bytes(bytes, &params.0) {
            Ok(vk) => {
                *out = Box::into_raw(Box::new(AccconfVerifyKey(vk)));
                AccconfStatus::Ok
            }
            Err(err) => err.into(),
        }
    })
}

/// # Safety
/// `vk` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn accconf_verify_key_free(vk: *mut AccconfVerifyKey) {
    if !vk.is_null() {
        drop(Box::from_raw(vk));
    }
}

/// Parse a serialized enabling block. The provider signature is checked
/// at extraction time, against the verification key supplied there.
///
/// # Safety
/// `bytes`/`len` must be readable; `params` live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn accconf_block_from_bytes(
    bytes: *const u8,
    len: usize,
    params: *const AccconfParams,
    out: *mut *mut AccconfBlock,
) -> AccconfStatus {
    guarded(|| {
        let (Some(bytes), Some(params)) = (input(bytes, len), params.as_ref()) else {
            return AccconfStatus::NullPointer;
        };
        if out.is_null() {
            return AccconfStatus::NullPointer;
        }
        match deserialize_block(bytes, &params.0) {
            Ok(block) => {
                *out = Box::into_raw(Box::new(AccconfBlock(block)));
                AccconfStatus::Ok
            }
            Err(err) => err.into(),
        }
    })
}

/// Monotonic rebuild counter of the block; 0 for a null handle.
///
/// # Safety
/// `block` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn accconf_block_version(block: *const AccconfBlock) -> u64 {
    block.as_ref().map_or(0, |b| b.0.version)
}

/// Expiry instant in UNIX seconds; 0 means no expiry (or null handle).
///
/// # Safety
/// `block` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn accconf_block_timeout(block: *const AccconfBlock) -> u64 {
    block.as_ref().map_or(0, |b| b.0.timeout)
}

/// # Safety
/// `block` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn accconf_block_free(block: *mut AccconfBlock) {
    if !block.is_null() {
        drop(Box::from_raw(block));
    }
}

// --------------------------------------------------------------------------
// Extraction.
// --------------------------------------------------------------------------

/// Recover the content key from a block and one user share.
///
/// Verifies the provider signature and the block expiry against
/// `now_unix_secs` before any algebra. `no_precompute != 0` selects the
/// baseline path that recomputes every Lagrangian coefficient.
/// `mult_count`/`exp_count` may be null. Key bytes use the two-call
/// pattern via `key_buf == NULL`.
///
/// # Safety
/// All handles must be live; buffers must match their advertised sizes.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn accconf_extract(
    block: *const AccconfBlock,
    share: *const AccconfShare,
    params: *const AccconfParams,
    verify_key: *const AccconfVerifyKey,
    now_unix_secs: u64,
    no_precompute: i32,
    key_buf: *mut u8,
    key_cap: usize,
    key_len: *mut usize,
    mult_count: *mut u64,
    exp_count: *mut u64,
) -> AccconfStatus {
    guarded(|| {
        let (Some(block), Some(share), Some(params), Some(vk)) = (
            block.as_ref(),
            share.as_ref(),
            params.as_ref(),
            verify_key.as_ref(),
        ) else {
            return AccconfStatus::NullPointer;
        };
        let result = if no_precompute != 0 {
            extract_no_precompute(&block.0, &share.0, &params.0, &vk.0, now_unix_secs)
        } else {
            extract(&block.0, &share.0, &params.0, &vk.0, now_unix_secs)
        };
        match result {
            Ok(res) => {
                if !mult_count.is_null() {
                    *mult_count = res.mult_count;
                }
                if !exp_count.is_null() {
                    *exp_count = res.exp_count;
                }
                copy_out(&res.key_bytes, key_buf, key_cap, key_len)
            }
            Err(err) => err.into(),
        }
    })
}
