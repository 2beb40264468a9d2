//! Client-side secret extraction.
//!
//! Given a verified enabling block and one user share, complete each
//! partial Lagrangian coefficient with a single multiplication, raise the
//! transformed server shares to those coefficients, add the user's own
//! term in the exponent, and divide the blinding g^(r·a_0) out of each γ_b.
//!
//! Two paths are provided: the precomputed path uses the Λ shipped in the
//! block (one multiplication per coefficient); the baseline recomputes
//! every coefficient from the full t-term product. Both are instrumented
//! with exact operation counters so the precomputation saving is
//! measurable rather than estimated.

use num_bigint::BigUint;
use thiserror::Error;

use crate::block::{
    check_subkey_checksum, decode_key, verify_block_signature, BlockError, EnablingBlock,
};
use crate::group::{mod_exp, mod_inv, GroupError, SystemParams, ZpElement, ZqElement};
use crate::shares::ShareTuple;

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("block signature verification failed")]
    SignatureInvalid,
    #[error("block expired at {timeout}, now {now}")]
    Expired { timeout: u64, now: u64 },
    #[error("share is revoked: its x coordinate is folded into the block")]
    RevokedShare,
    #[error("recovered key material fails the block checksum")]
    KeyChecksum,
    #[error("subkey decoding failed: {0}")]
    SubkeyDecode(BlockError),
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// Recovered key plus exact operation counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtractionResult {
    pub key_bytes: Vec<u8>,
    /// Z_Q multiplications performed (inversions not included).
    pub mult_count: u64,
    /// Z_P exponentiations performed.
    pub exp_count: u64,
}

/// Intermediate values of one extraction, for diagnostics and the
/// operation-level test vectors.
#[derive(Clone, Debug)]
pub struct ExtractTrace {
    /// Completed coefficients λ_k for the block's share points.
    pub lambdas: Vec<BigUint>,
    /// δ_1 = Π_k y_k^(λ_k).
    pub delta1: ZpElement,
    /// The user's own coefficient λ_i.
    pub user_lambda: BigUint,
    /// δ_2 = (g^r)^(f(x_i)·λ_i).
    pub delta2: ZpElement,
}

/// Subkey-level extraction output; `extract` decodes it to key bytes.
#[derive(Clone, Debug)]
pub struct SubkeyExtraction {
    pub subkeys: Vec<ZqElement>,
    pub mult_count: u64,
    pub exp_count: u64,
    pub trace: ExtractTrace,
}

struct OpCounter {
    mults: u64,
    exps: u64,
}

impl OpCounter {
    fn new() -> Self {
        OpCounter { mults: 0, exps: 0 }
    }

    fn mul_q(&mut self, a: &BigUint, b: &BigUint, params: &SystemParams) -> BigUint {
        self.mults += 1;
        a * b % params.q()
    }

    fn exp_p(&mut self, base: &ZpElement, exp: &BigUint, params: &SystemParams) -> ZpElement {
        self.exps += 1;
        mod_exp(base, exp, params)
    }
}

/// Shared preamble: provenance, freshness, revocation.
fn check_block(
    block: &EnablingBlock,
    share: &ShareTuple,
    params: &SystemParams,
    verify_key: &ZpElement,
    now: u64,
) -> Result<(), ExtractError> {
    verify_block_signature(block, params, verify_key)
        .map_err(|_| ExtractError::SignatureInvalid)?;
    if block.timeout != 0 && now >= block.timeout {
        return Err(ExtractError::Expired {
            timeout: block.timeout,
            now,
        });
    }
    if block.contains_x(&share.x) {
        return Err(ExtractError::RevokedShare);
    }
    Ok(())
}

fn extract_subkeys_inner(
    block: &EnablingBlock,
    share: &ShareTuple,
    params: &SystemParams,
    verify_key: &ZpElement,
    now: u64,
    use_precomputed: bool,
) -> Result<SubkeyExtraction, ExtractError> {
    check_block(block, share, params, verify_key, now)?;
    let mut ops = OpCounter::new();
    let xi = &share.x;

    // Completed coefficients for the block's t points. The precomputed
    // path finishes each λ̂_k with the user factor x_i/(x_i − x_k); the
    // baseline multiplies out all t fractions per coefficient.
    let mut lambdas = Vec::with_capacity(block.t());
    for (k, (xk, _)) in block.transformed_shares.iter().enumerate() {
        let lambda_k = if use_precomputed {
            let inv = invert_difference(params, xi, xk)?;
            let frac = ops.mul_q(xi.value(), &inv, params);
            ops.mul_q(block.lambda_hats[k].value(), &frac, params)
        } else {
            let mut acc: Option<BigUint> = None;
            for (j, (xj, _)) in block.transformed_shares.iter().enumerate() {
                if j == k {
                    continue;
                }
                let inv = invert_difference(params, xj, xk)?;
                let term = ops.mul_q(xj.value(), &inv, params);
                acc = Some(match acc {
                    None => term,
                    Some(a) => ops.mul_q(&a, &term, params),
                });
            }
            // The user's point is the t-th interpolation node.
            let inv = invert_difference(params, xi, xk)?;
            let term = ops.mul_q(xi.value(), &inv, params);
            match acc {
                None => term,
                Some(a) => ops.mul_q(&a, &term, params),
            }
        };
        lambdas.push(lambda_k);
    }

    // δ_1 = Π_k y_k^(λ_k) over the transformed server shares.
    let mut delta1: Option<ZpElement> = None;
    for ((_, yk), lambda_k) in block.transformed_shares.iter().zip(&lambdas) {
        let factor = ops.exp_p(yk, lambda_k, params);
        delta1 = Some(match delta1 {
            None => factor,
            Some(d) => params.zp_mul(&d, &factor),
        });
    }
    let delta1 = delta1.expect("block holds at least one share");

    // λ_i = Π_j x_j/(x_j − x_i) over the block's points.
    let mut user_lambda: Option<BigUint> = None;
    for (xj, _) in &block.transformed_shares {
        let inv = invert_difference(params, xj, xi)?;
        let term = ops.mul_q(xj.value(), &inv, params);
        user_lambda = Some(match user_lambda {
            None => term,
            Some(a) => ops.mul_q(&a, &term, params),
        });
    }
    let user_lambda = user_lambda.expect("block holds at least one share");

    // δ_2 = (g^r)^(f(x_i)·λ_i mod Q).
    let exponent = ops.mul_q(share.fx.value(), &user_lambda, params);
    let delta2 = ops.exp_p(&block.g_r, &exponent, params);

    // τ_b = γ_b / (δ_1·δ_2); the denominator equals g^(r·a_0) for any
    // legitimate share.
    let denom = params.zp_mul(&delta1, &delta2);
    let denom_inv = params.zp_inv(&denom)?;
    let mut subkeys = Vec::with_capacity(block.gammas.len());
    for gamma in &block.gammas {
        let tau = params.zp_mul(gamma, &denom_inv);
        let tau = params
            .zq(tau.into_value())
            .map_err(|_| ExtractError::KeyChecksum)?;
        subkeys.push(tau);
    }
    if !check_subkey_checksum(block, &subkeys).map_err(ExtractError::SubkeyDecode)? {
        return Err(ExtractError::KeyChecksum);
    }

    Ok(SubkeyExtraction {
        subkeys,
        mult_count: ops.mults,
        exp_count: ops.exps,
        trace: ExtractTrace {
            lambdas,
            delta1,
            user_lambda,
            delta2,
        },
    })
}

fn invert_difference(
    params: &SystemParams,
    a: &ZqElement,
    b: &ZqElement,
) -> Result<BigUint, ExtractError> {
    let diff = params.zq_sub(a, b);
    mod_inv(&diff, params.q()).map_err(|err| match err {
        GroupError::NotInvertible => ExtractError::RevokedShare,
        other => ExtractError::Group(other),
    })
}

/// Precomputed path: recover the subkeys using the Λ shipped in the block.
pub fn extract_subkeys(
    block: &EnablingBlock,
    share: &ShareTuple,
    params: &SystemParams,
    verify_key: &ZpElement,
    now: u64,
) -> Result<SubkeyExtraction, ExtractError> {
    extract_subkeys_inner(block, share, params, verify_key, now, true)
}

/// Baseline path: ignore Λ and recompute every coefficient from scratch.
pub fn extract_subkeys_no_precompute(
    block: &EnablingBlock,
    share: &ShareTuple,
    params: &SystemParams,
    verify_key: &ZpElement,
    now: u64,
) -> Result<SubkeyExtraction, ExtractError> {
    extract_subkeys_inner(block, share, params, verify_key, now, false)
}

/// Full extraction: verify, recover subkeys, decode to key bytes.
pub fn extract(
    block: &EnablingBlock,
    share: &ShareTuple,
    params: &SystemParams,
    verify_key: &ZpElement,
    now: u64,
) -> Result<ExtractionResult, ExtractError> {
    let sub = extract_subkeys(block, share, params, verify_key, now)?;
    finish(sub, params)
}

/// Full extraction along the no-precomputation baseline.
pub fn extract_no_precompute(
    block: &EnablingBlock,
    share: &ShareTuple,
    params: &SystemParams,
    verify_key: &ZpElement,
    now: u64,
) -> Result<ExtractionResult, ExtractError> {
    let sub = extract_subkeys_no_precompute(block, share, params, verify_key, now)?;
    finish(sub, params)
}

fn finish(sub: SubkeyExtraction, params: &SystemParams) -> Result<ExtractionResult, ExtractError> {
    let key_bytes = decode_key(&sub.subkeys, params).map_err(ExtractError::SubkeyDecode)?;
    Ok(ExtractionResult {
        key_bytes,
        mult_count: sub.mult_count,
        exp_count: sub.exp_count,
    })
}

/// Reassemble a key split across reactive blocks: each block contributes
/// its subkeys in order. A revoked user fails on at least one block.
pub fn extract_reactive(
    blocks: &[EnablingBlock],
    share: &ShareTuple,
    params: &SystemParams,
    verify_key: &ZpElement,
    now: u64,
) -> Result<ExtractionResult, ExtractError> {
    let mut subkeys = Vec::new();
    let mut mults = 0;
    let mut exps = 0;
    for block in blocks {
        let sub = extract_subkeys(block, share, params, verify_key, now)?;
        subkeys.extend(sub.subkeys);
        mults += sub.mult_count;
        exps += sub.exp_count;
    }
    let key_bytes = decode_key(&subkeys, params).map_err(ExtractError::SubkeyDecode)?;
    Ok(ExtractionResult {
        key_bytes,
        mult_count: mults,
        exp_count: exps,
    })
}
