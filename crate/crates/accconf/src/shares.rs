//! Secret polynomial and share generation.
//!
//! The server draws a degree-t polynomial with coefficients in Z*_Q, keeps
//! t points for itself and hands every registered user one further point.
//! Any t+1 points determine the polynomial; t points do not, which is what
//! lets the server lock out up to t revoked users by folding their points
//! into the published server set.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use num_traits::Zero;
use rand::RngCore;
use thiserror::Error;

use crate::group::{zq_rand, GroupError, SystemParams, ZqElement};
use crate::wire::{self, Reader, WireError};

/// Resampling budget per share before concluding the x-space is exhausted.
const MAX_SAMPLE_ATTEMPTS: usize = 4096;

#[derive(Debug, Error)]
pub enum ShareError {
    #[error("polynomial degree t must satisfy 1 <= t < Q - 1, got {0}")]
    DegreeOutOfRange(usize),
    #[error("capacity exceeded: n + t must stay below Q - 1")]
    CapacityExceeded,
    #[error("user id {0} is already registered")]
    DuplicateUser(u64),
    #[error("user id {0} is not registered")]
    UnknownUser(u64),
    #[error("share set must hold pairwise distinct x values")]
    InvalidShareSet,
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Wire(#[from] WireError),
}

/// The degree-t secret polynomial p(x) = a_0 + a_1 x + ... + a_t x^t over Z_Q.
///
/// a_0 is the shared secret that Lagrange interpolation at zero recovers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SecretPolynomial {
    coeffs: Vec<ZqElement>,
}

impl SecretPolynomial {
    /// Draw t+1 independent uniform coefficients from Z*_Q.
    pub fn generate<R: RngCore>(
        params: &SystemParams,
        t: usize,
        rng: &mut R,
    ) -> Result<Self, ShareError> {
        if t < 1 || BigUint::from(t) >= params.q() - 1u32 {
            return Err(ShareError::DegreeOutOfRange(t));
        }
        let coeffs = (0..=t).map(|_| zq_rand(params, rng)).collect();
        Ok(SecretPolynomial { coeffs })
    }

    /// Build from explicit coefficients [a_0 ... a_t], each in [1, Q-1].
    pub fn from_coeffs(params: &SystemParams, coeffs: Vec<BigUint>) -> Result<Self, ShareError> {
        if coeffs.is_empty() {
            return Err(ShareError::DegreeOutOfRange(0));
        }
        let coeffs = coeffs
            .into_iter()
            .map(|c| params.zq(c))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(SecretPolynomial { coeffs })
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// The constant term a_0, the shared secret base.
    pub fn secret(&self) -> &ZqElement {
        &self.coeffs[0]
    }

    pub fn coeffs(&self) -> &[ZqElement] {
        &self.coeffs
    }

    /// Horner evaluation mod Q. The result may be zero; callers issuing
    /// shares reject such x so that every f(x) stays in Z*_Q.
    pub fn evaluate(&self, params: &SystemParams, x: &ZqElement) -> BigUint {
        let q = params.q();
        let mut acc = BigUint::zero();
        for coeff in self.coeffs.iter().rev() {
            acc = (acc * x.value() + coeff.value()) % q;
        }
        acc
    }
}

/// Who holds a share.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShareOwner {
    Server,
    User(u64),
    Revoked(u64),
}

/// One point (x, f(x)) on the secret polynomial.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShareTuple {
    pub x: ZqElement,
    pub fx: ZqElement,
    pub owner: ShareOwner,
}

/// The t tuples the server publishes (in transformed form) inside every
/// enabling block. Slots are replaced in FIFO order as users are revoked.
#[derive(Clone, Debug)]
pub struct ServerShareSet {
    shares: Vec<ShareTuple>,
}

impl ServerShareSet {
    pub fn new(shares: Vec<ShareTuple>) -> Result<Self, ShareError> {
        if shares.is_empty() {
            return Err(ShareError::InvalidShareSet);
        }
        let mut seen = BTreeSet::new();
        for share in &shares {
            if !seen.insert(share.x.clone()) {
                return Err(ShareError::InvalidShareSet);
            }
        }
        Ok(ServerShareSet { shares })
    }

    pub fn shares(&self) -> &[ShareTuple] {
        &self.shares
    }

    /// Number of slots, i.e. the revocation threshold t.
    pub fn t(&self) -> usize {
        self.shares.len()
    }

    /// Substitute one slot, keeping x values pairwise distinct.
    pub fn replace(&mut self, idx: usize, tuple: ShareTuple) -> Result<(), ShareError> {
        if idx >= self.shares.len() {
            return Err(ShareError::InvalidShareSet);
        }
        if self
            .shares
            .iter()
            .enumerate()
            .any(|(j, s)| j != idx && s.x == tuple.x)
        {
            return Err(ShareError::InvalidShareSet);
        }
        self.shares[idx] = tuple;
        Ok(())
    }
}

/// A registered user's share plus its expiry (0 = none).
#[derive(Clone, Debug)]
pub struct UserEntry {
    pub share: ShareTuple,
    pub timeout: u64,
}

/// All issued user shares, plus the set of every x ever allocated
/// (server shares included) so no coordinate is reused.
#[derive(Clone, Debug, Default)]
pub struct UserRegistry {
    entries: BTreeMap<u64, UserEntry>,
    used_x: BTreeSet<ZqElement>,
}

impl UserRegistry {
    pub fn n(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, user_id: u64) -> Option<&UserEntry> {
        self.entries.get(&user_id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&u64, &UserEntry)> {
        self.entries.iter()
    }

    /// Issue a fresh share to a new user. The returned tuple is the
    /// registration payload delivered out of band.
    pub fn register_user<R: RngCore>(
        &mut self,
        user_id: u64,
        poly: &SecretPolynomial,
        params: &SystemParams,
        rng: &mut R,
        timeout: u64,
    ) -> Result<ShareTuple, ShareError> {
        if self.entries.contains_key(&user_id) {
            return Err(ShareError::DuplicateUser(user_id));
        }
        // used_x counts n + t allocations; one more must keep n + t
        // below Q - 1.
        if BigUint::from(self.used_x.len() + 1) >= params.q() - 1u32 {
            return Err(ShareError::CapacityExceeded);
        }
        let share = sample_share(
            poly,
            params,
            &mut self.used_x,
            rng,
            ShareOwner::User(user_id),
        )?;
        self.entries.insert(
            user_id,
            UserEntry {
                share: share.clone(),
                timeout,
            },
        );
        Ok(share)
    }

    /// Flip a user's entry to revoked and hand back the tuple that the
    /// enabling block will absorb.
    pub fn mark_revoked(&mut self, user_id: u64) -> Result<ShareTuple, ShareError> {
        let entry = self
            .entries
            .get_mut(&user_id)
            .ok_or(ShareError::UnknownUser(user_id))?;
        entry.share.owner = ShareOwner::Revoked(user_id);
        Ok(entry.share.clone())
    }
}

/// Draw the t server shares and n user shares: all x values pairwise
/// distinct, every f(x) nonzero, resampling on collision.
pub fn generate_shares<R: RngCore>(
    poly: &SecretPolynomial,
    params: &SystemParams,
    n: usize,
    rng: &mut R,
) -> Result<(ServerShareSet, UserRegistry), ShareError> {
    let t = poly.degree();
    if BigUint::from(n + t) >= params.q() - 1u32 {
        return Err(ShareError::CapacityExceeded);
    }
    let mut used_x = BTreeSet::new();
    let mut server = Vec::with_capacity(t);
    for _ in 0..t {
        server.push(sample_share(poly, params, &mut used_x, rng, ShareOwner::Server)?);
    }
    let mut registry = UserRegistry {
        entries: BTreeMap::new(),
        used_x,
    };
    for user_id in 1..=n as u64 {
        let share = sample_share(
            poly,
            params,
            &mut registry.used_x,
            rng,
            ShareOwner::User(user_id),
        )?;
        registry.entries.insert(user_id, UserEntry { share, timeout: 0 });
    }
    Ok((ServerShareSet::new(server)?, registry))
}

fn sample_share<R: RngCore>(
    poly: &SecretPolynomial,
    params: &SystemParams,
    used_x: &mut BTreeSet<ZqElement>,
    rng: &mut R,
    owner: ShareOwner,
) -> Result<ShareTuple, ShareError> {
    for _ in 0..MAX_SAMPLE_ATTEMPTS {
        let x = zq_rand(params, rng);
        if used_x.contains(&x) {
            continue;
        }
        let fx = poly.evaluate(params, &x);
        if fx.is_zero() {
            continue; // f(x) must land in Z*_Q
        }
        used_x.insert(x.clone());
        return Ok(ShareTuple {
            x,
            fx: params.zq(fx)?,
            owner,
        });
    }
    Err(ShareError::CapacityExceeded)
}

/// Serialize one share: magic "ACFS", version, owner tag, user id,
/// expiry, then x and f(x).
pub fn share_to_bytes(share: &ShareTuple, timeout: u64) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(b"ACFS");
    buf.push(1);
    let (tag, user_id) = match share.owner {
        ShareOwner::Server => (0u8, 0u64),
        ShareOwner::User(id) => (1, id),
        ShareOwner::Revoked(id) => (2, id),
    };
    buf.push(tag);
    buf.extend_from_slice(&user_id.to_be_bytes());
    buf.extend_from_slice(&timeout.to_be_bytes());
    wire::put_uint(&mut buf, share.x.value());
    wire::put_uint(&mut buf, share.fx.value());
    buf
}

pub fn share_from_bytes(
    bytes: &[u8],
    params: &SystemParams,
) -> Result<(ShareTuple, u64), ShareError> {
    let mut r = Reader::new(bytes);
    r.expect_magic("ACFS")?;
    let version = r.u8("version")?;
    if version != 1 {
        return Err(WireError::UnsupportedVersion(version).into());
    }
    let tag = r.u8("owner tag")?;
    let user_id = r.u64("user id")?;
    let timeout = r.u64("timeout")?;
    let x = params.zq(r.uint("x")?)?;
    let fx = params.zq(r.uint("fx")?)?;
    r.finish("trailing bytes after share")?;
    let owner = match tag {
        0 => ShareOwner::Server,
        1 => ShareOwner::User(user_id),
        2 => ShareOwner::Revoked(user_id),
        _ => return Err(WireError::Invalid("unknown owner tag").into()),
    };
    Ok((ShareTuple { x, fx, owner }, timeout))
}
