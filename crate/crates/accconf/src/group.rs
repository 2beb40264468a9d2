//! Arbitrary-precision arithmetic over a Schnorr group.
//!
//! The group is the order-Q subgroup of the multiplicative group mod P,
//! where P = 2Q + 1 and both P and Q are prime. Exponent arithmetic lives
//! in Z*_Q, group elements in Z*_P. Zero is excluded from both, so every
//! sampled value is invertible and every exponent is nonzero.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::RngCore;
use thiserror::Error;

use crate::wire::{self, Reader, WireError};

/// Rounds of Miller-Rabin, giving an error bound of at most 2^-80.
pub const MILLER_RABIN_ROUNDS: u32 = 40;

/// Smallest supported bit length for Q. Q = 11 (4 bits) is the smallest
/// safe-prime order and is used by the enumerable test groups.
pub const MIN_BITS_Q: u32 = 4;

/// Candidate budget for the safe-prime search before giving up.
const MAX_PRIME_CANDIDATES: u32 = 200_000;

#[derive(Debug, Error)]
pub enum GroupError {
    #[error("bits_q must be at least {MIN_BITS_Q}, got {0}")]
    BitsTooSmall(u32),
    #[error("no safe prime of {bits} bits found after {candidates} candidates")]
    SearchExhausted { bits: u32, candidates: u32 },
    #[error("value out of range for {0}")]
    OutOfRange(&'static str),
    #[error("value has no inverse modulo the given modulus")]
    NotInvertible,
    #[error("invalid parameters: {0}")]
    Invalid(&'static str),
    #[error(transparent)]
    Wire(#[from] WireError),
}

/// The Schnorr group (P, Q, g) plus the bit length of Q.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SystemParams {
    p: BigUint,
    q: BigUint,
    g: BigUint,
    bits_q: u32,
}

/// An element of Z*_Q, the exponent field. Always in [1, Q-1].
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ZqElement(BigUint);

/// An element of Z*_P. Always in [1, P-1].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ZpElement(BigUint);

impl ZqElement {
    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn into_value(self) -> BigUint {
        self.0
    }
}

impl ZpElement {
    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn into_value(self) -> BigUint {
        self.0
    }
}

impl SystemParams {
    /// Assemble params from explicit values, checking every invariant:
    /// P and Q prime, P = 2Q + 1, g generates the order-Q subgroup.
    pub fn from_parts(p: BigUint, q: BigUint, g: BigUint) -> Result<Self, GroupError> {
        let mut rng = crate::rng::substream(0x5eed, "params-validate");
        if !is_probable_prime(&q, MILLER_RABIN_ROUNDS, &mut rng) {
            return Err(GroupError::Invalid("Q is not prime"));
        }
        if !is_probable_prime(&p, MILLER_RABIN_ROUNDS, &mut rng) {
            return Err(GroupError::Invalid("P is not prime"));
        }
        if p != &q * 2u32 + 1u32 {
            return Err(GroupError::Invalid("P != 2Q + 1"));
        }
        if g <= BigUint::one() || g >= p {
            return Err(GroupError::Invalid("g out of range"));
        }
        if g.modpow(&q, &p) != BigUint::one() {
            return Err(GroupError::Invalid("g^Q != 1 mod P"));
        }
        let bits_q = q.bits() as u32;
        Ok(SystemParams { p, q, g, bits_q })
    }

    pub fn p(&self) -> &BigUint {
        &self.p
    }

    pub fn q(&self) -> &BigUint {
        &self.q
    }

    pub fn bits_q(&self) -> u32 {
        self.bits_q
    }

    /// The subgroup generator as a group element.
    pub fn generator(&self) -> ZpElement {
        ZpElement(self.g.clone())
    }

    /// Wrap a value as an exponent, checking 1 <= v <= Q-1.
    pub fn zq(&self, value: BigUint) -> Result<ZqElement, GroupError> {
        if value.is_zero() || value >= self.q {
            return Err(GroupError::OutOfRange("Z*_Q"));
        }
        Ok(ZqElement(value))
    }

    pub fn zq_u64(&self, value: u64) -> Result<ZqElement, GroupError> {
        self.zq(BigUint::from(value))
    }

    /// Wrap a value as a group element, checking 1 <= v <= P-1.
    pub fn zp(&self, value: BigUint) -> Result<ZpElement, GroupError> {
        if value.is_zero() || value >= self.p {
            return Err(GroupError::OutOfRange("Z*_P"));
        }
        Ok(ZpElement(value))
    }

    pub fn zp_u64(&self, value: u64) -> Result<ZpElement, GroupError> {
        self.zp(BigUint::from(value))
    }

    /// (a * b) mod Q. Nonzero since Q is prime and both factors are nonzero.
    pub fn zq_mul(&self, a: &ZqElement, b: &ZqElement) -> ZqElement {
        ZqElement((&a.0 * &b.0) % &self.q)
    }

    /// (a - b) mod Q as a raw residue; zero when a == b.
    pub fn zq_sub(&self, a: &ZqElement, b: &ZqElement) -> BigUint {
        if a.0 >= b.0 {
            &a.0 - &b.0
        } else {
            &self.q - &b.0 + &a.0
        }
    }

    /// (a * b) mod P.
    pub fn zp_mul(&self, a: &ZpElement, b: &ZpElement) -> ZpElement {
        ZpElement((&a.0 * &b.0) % &self.p)
    }

    /// Inverse of an exponent in Z*_Q.
    pub fn zq_inv(&self, a: &ZqElement) -> Result<ZqElement, GroupError> {
        Ok(ZqElement(mod_inv(&a.0, &self.q)?))
    }

    /// Inverse of a group element in Z*_P.
    pub fn zp_inv(&self, a: &ZpElement) -> Result<ZpElement, GroupError> {
        Ok(ZpElement(mod_inv(&a.0, &self.p)?))
    }

    /// Serialize as magic "ACF1", version 1, then length-prefixed
    /// big-endian P, Q, g.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        buf.extend_from_slice(b"ACF1");
        buf.push(1);
        wire::put_uint(&mut buf, &self.p);
        wire::put_uint(&mut buf, &self.q);
        wire::put_uint(&mut buf, &self.g);
        buf
    }

    /// Parse and fully re-validate serialized params.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, GroupError> {
        let mut r = Reader::new(bytes);
        r.expect_magic("ACF1")?;
        let version = r.u8("version")?;
        if version != 1 {
            return Err(WireError::UnsupportedVersion(version).into());
        }
        let p = r.uint("P")?;
        let q = r.uint("Q")?;
        let g = r.uint("g")?;
        r.finish("trailing bytes after params")?;
        SystemParams::from_parts(p, q, g)
    }
}

/// Search for a Schnorr group with a `bits_q`-bit prime Q and P = 2Q + 1.
///
/// Deterministic for a fixed seed. The generator is h^2 mod P for the
/// smallest h >= 2 with h^2 mod P != 1.
pub fn generate_params(bits_q: u32, rng_seed: u64) -> Result<SystemParams, GroupError> {
    if bits_q < MIN_BITS_Q {
        return Err(GroupError::BitsTooSmall(bits_q));
    }
    let mut rng = crate::rng::substream(rng_seed, "params");
    let sieve = small_primes(4000);
    for _ in 0..MAX_PRIME_CANDIDATES {
        let q = random_odd_with_top_bit(bits_q, &mut rng);
        if !passes_sieve(&q, &sieve) {
            continue;
        }
        let p = &q * 2u32 + 1u32;
        if !passes_sieve(&p, &sieve) {
            continue;
        }
        if !is_probable_prime(&q, MILLER_RABIN_ROUNDS, &mut rng) {
            continue;
        }
        if !is_probable_prime(&p, MILLER_RABIN_ROUNDS, &mut rng) {
            continue;
        }
        let g = find_generator(&p);
        return SystemParams::from_parts(p, q, g);
    }
    Err(GroupError::SearchExhausted {
        bits: bits_q,
        candidates: MAX_PRIME_CANDIDATES,
    })
}

/// Smallest h >= 2 whose square is a nontrivial quadratic residue mod P.
/// Any such square generates the order-Q subgroup.
fn find_generator(p: &BigUint) -> BigUint {
    let mut h = BigUint::from(2u32);
    loop {
        let g = h.modpow(&BigUint::from(2u32), p);
        if g != BigUint::one() {
            return g;
        }
        h += 1u32;
    }
}

/// Uniform draw from [1, Q-1] by rejection sampling. Advances the stream.
pub fn zq_rand<R: RngCore>(params: &SystemParams, rng: &mut R) -> ZqElement {
    loop {
        let v = rand_below(params.q(), rng);
        if !v.is_zero() {
            return ZqElement(v);
        }
    }
}

/// base^exp mod P. The exponent must be >= 1 (protocol exponents are
/// always in Z*_Q or the subgroup order Q itself).
pub fn mod_exp(base: &ZpElement, exp: &BigUint, params: &SystemParams) -> ZpElement {
    assert!(!exp.is_zero(), "mod_exp requires exponent >= 1");
    ZpElement(base.0.modpow(exp, &params.p))
}

/// a^-1 mod modulus via extended Euclid. Fails when gcd(a, modulus) != 1;
/// callers treat a zero difference here as revoked-share detection.
pub fn mod_inv(a: &BigUint, modulus: &BigUint) -> Result<BigUint, GroupError> {
    if a.is_zero() {
        return Err(GroupError::NotInvertible);
    }
    let a = BigInt::from(a.clone());
    let m = BigInt::from(modulus.clone());
    let ext = a.extended_gcd(&m);
    if !ext.gcd.is_one() {
        return Err(GroupError::NotInvertible);
    }
    let mut x = ext.x % &m;
    if x < BigInt::zero() {
        x += &m;
    }
    Ok(x.to_biguint().expect("reduced inverse is nonnegative"))
}

/// Uniform draw from [0, bound) by masked rejection sampling.
pub fn rand_below<R: RngCore>(bound: &BigUint, rng: &mut R) -> BigUint {
    let bits = bound.bits();
    let nbytes = bits.div_ceil(8) as usize;
    let excess_bits = (nbytes as u64) * 8 - bits;
    let mask = 0xffu8 >> excess_bits;
    let mut buf = vec![0u8; nbytes];
    loop {
        rng.fill_bytes(&mut buf);
        buf[0] &= mask;
        let v = BigUint::from_bytes_be(&buf);
        if &v < bound {
            return v;
        }
    }
}

fn random_odd_with_top_bit<R: RngCore>(bits: u32, rng: &mut R) -> BigUint {
    let nbytes = (bits as usize).div_ceil(8);
    let mut buf = vec![0u8; nbytes];
    rng.fill_bytes(&mut buf);
    let excess_bits = nbytes * 8 - bits as usize;
    buf[0] &= 0xffu8 >> excess_bits;
    buf[0] |= 1 << (7 - excess_bits);
    let last = nbytes - 1;
    buf[last] |= 1;
    BigUint::from_bytes_be(&buf)
}

fn small_primes(limit: u32) -> Vec<u32> {
    let mut is_composite = vec![false; limit as usize + 1];
    let mut primes = Vec::new();
    for n in 2..=limit {
        if !is_composite[n as usize] {
            primes.push(n);
            let mut k = (n as u64) * (n as u64);
            while k <= limit as u64 {
                is_composite[k as usize] = true;
                k += n as u64;
            }
        }
    }
    primes
}

fn passes_sieve(n: &BigUint, primes: &[u32]) -> bool {
    for &p in primes {
        let bp = BigUint::from(p);
        if n == &bp {
            return true;
        }
        if (n % &bp).is_zero() {
            return false;
        }
    }
    true
}

/// Miller-Rabin with witnesses drawn from the supplied stream.
pub fn is_probable_prime<R: RngCore>(n: &BigUint, rounds: u32, rng: &mut R) -> bool {
    let two = BigUint::from(2u32);
    let three = BigUint::from(3u32);
    if n < &two {
        return false;
    }
    if n == &two || n == &three {
        return true;
    }
    if n.is_even() {
        return false;
    }
    let n_minus_1 = n - 1u32;
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;
    let witness_bound = n - 3u32; // witnesses in [2, n-2]
    'rounds: for _ in 0..rounds {
        let a = rand_below(&witness_bound, rng) + 2u32;
        let mut x = a.modpow(&d, n);
        if x.is_one() || x == n_minus_1 {
            continue;
        }
        for _ in 0..s.saturating_sub(1) {
            x = x.modpow(&two, n);
            if x == n_minus_1 {
                continue 'rounds;
            }
        }
        return false;
    }
    true
}
