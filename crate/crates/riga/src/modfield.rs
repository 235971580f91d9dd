//! Arbitrary-precision arithmetic over a prime field GF(p) and Lagrange
//! polynomial interpolation in coefficient form.
//!
//! A [`PrimeField`] checks its modulus once at construction (64 rounds of
//! Miller-Rabin); all per-element operations assume canonical residues in
//! `[0, p)`. [`lagrange_interpolate`] produces the unique polynomial of
//! degree < k through k points, stored constant-term first, so that a
//! generator can pay O(k^2) once and O(k) per evaluation afterwards.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Rounds of Miller-Rabin used when a field is constructed.
pub const PRIMALITY_ROUNDS: u32 = 64;

// Fixed seed for Miller-Rabin witness selection: the check is probabilistic
// but reproducible across runs and platforms.
const WITNESS_SEED: u64 = 0x5249_4741_2131;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FieldError {
    #[error("modulus {0} failed probabilistic primality")]
    NotPrime(BigUint),
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("duplicate abscissa {0} in interpolation points")]
    DuplicateAbscissa(BigUint),
    #[error("value {value} is outside the field of order {prime}")]
    OutOfField { value: BigUint, prime: BigUint },
}

/// A prime field GF(p). Elements are canonical `BigUint` residues in `[0, p)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeField {
    prime: BigUint,
}

impl PrimeField {
    /// Builds the field, rejecting composite moduli. Verification runs
    /// once per distinct modulus per process; the result is cached since
    /// campaigns rebuild fields over the same prime constantly.
    pub fn new(prime: BigUint) -> Result<Self, FieldError> {
        use std::collections::HashSet;
        use std::sync::{Mutex, OnceLock};
        static VERIFIED: OnceLock<Mutex<HashSet<Vec<u8>>>> = OnceLock::new();
        let cache = VERIFIED.get_or_init(|| Mutex::new(HashSet::new()));
        let key = prime.to_bytes_be();
        if !cache.lock().expect("cache lock").contains(&key) {
            if !is_probable_prime(&prime, PRIMALITY_ROUNDS) {
                return Err(FieldError::NotPrime(prime));
            }
            cache.lock().expect("cache lock").insert(key);
        }
        Ok(Self { prime })
    }

    pub fn prime(&self) -> &BigUint {
        &self.prime
    }

    /// Reduces an arbitrary integer into the canonical range.
    pub fn reduce(&self, x: &BigUint) -> BigUint {
        x % &self.prime
    }

    /// Returns true when `x` is already canonical.
    pub fn contains(&self, x: &BigUint) -> bool {
        x < &self.prime
    }

    pub fn add(&self, a: &BigUint, b: &BigUint) -> BigUint {
        let s = a + b;
        if s >= self.prime {
            s - &self.prime
        } else {
            s
        }
    }

    pub fn sub(&self, a: &BigUint, b: &BigUint) -> BigUint {
        if a >= b {
            a - b
        } else {
            &self.prime - (b - a)
        }
    }

    pub fn mul(&self, a: &BigUint, b: &BigUint) -> BigUint {
        (a * b) % &self.prime
    }

    /// Multiplicative inverse via the extended Euclidean algorithm.
    pub fn inv(&self, a: &BigUint) -> Result<BigUint, FieldError> {
        if a.is_zero() {
            return Err(FieldError::ZeroInverse);
        }
        let e = BigInt::from(a.clone()).extended_gcd(&BigInt::from(self.prime.clone()));
        debug_assert!(e.gcd.is_one(), "a and prime p must be coprime");
        let p = BigInt::from(self.prime.clone());
        let x = ((e.x % &p) + &p) % &p;
        Ok(x.to_biguint().expect("normalized into [0, p)"))
    }
}

/// A polynomial over GF(p), coefficients stored constant-term first with
/// trailing zeros trimmed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldPoly {
    coeffs: Vec<BigUint>,
    field: PrimeField,
}

impl FieldPoly {
    /// Wraps raw coefficients; callers must pass canonical residues.
    pub fn from_coeffs(mut coeffs: Vec<BigUint>, field: PrimeField) -> Result<Self, FieldError> {
        for c in &coeffs {
            if !field.contains(c) {
                return Err(FieldError::OutOfField {
                    value: c.clone(),
                    prime: field.prime().clone(),
                });
            }
        }
        while coeffs.len() > 1 && coeffs.last().map(Zero::is_zero) == Some(true) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(BigUint::zero());
        }
        Ok(Self { coeffs, field })
    }

    pub fn coeffs(&self) -> &[BigUint] {
        &self.coeffs
    }

    pub fn field(&self) -> &PrimeField {
        &self.field
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Horner evaluation at `x`; inputs from an unbounded counter domain are
    /// reduced mod p first.
    pub fn eval(&self, x: &BigUint) -> BigUint {
        let x = self.field.reduce(x);
        let mut acc = BigUint::zero();
        for c in self.coeffs.iter().rev() {
            acc = self.field.add(&self.field.mul(&acc, &x), c);
        }
        acc
    }
}

/// Interpolates the unique polynomial of degree < k through k points,
/// returned in coefficient form.
pub fn lagrange_interpolate(
    points: &[(BigUint, BigUint)],
    field: &PrimeField,
) -> Result<FieldPoly, FieldError> {
    assert!(!points.is_empty(), "interpolation requires at least one point");
    for (x, y) in points {
        for v in [x, y] {
            if !field.contains(v) {
                return Err(FieldError::OutOfField {
                    value: v.clone(),
                    prime: field.prime().clone(),
                });
            }
        }
    }
    for (i, (xi, _)) in points.iter().enumerate() {
        if points[..i].iter().any(|(xj, _)| xj == xi) {
            return Err(FieldError::DuplicateAbscissa(xi.clone()));
        }
    }

    let k = points.len();
    // master(x) = prod_j (x - x_j), degree k, constant-term first.
    let mut master = vec![BigUint::one()];
    for (xj, _) in points {
        let neg_xj = field.sub(&BigUint::zero(), xj);
        let mut next = vec![BigUint::zero(); master.len() + 1];
        for (d, c) in master.iter().enumerate() {
            next[d] = field.add(&next[d], &field.mul(c, &neg_xj));
            next[d + 1] = field.add(&next[d + 1], c);
        }
        master = next;
    }

    let mut acc = vec![BigUint::zero(); k];
    for (i, (xi, yi)) in points.iter().enumerate() {
        // basis_i = master / (x - x_i) by synthetic division, degree k-1.
        let mut basis = vec![BigUint::zero(); k];
        let mut carry = BigUint::zero();
        for d in (0..k).rev() {
            let q = field.add(&master[d + 1], &field.mul(&carry, xi));
            basis[d] = q.clone();
            carry = q;
        }
        let mut denom = BigUint::one();
        for (j, (xj, _)) in points.iter().enumerate() {
            if j != i {
                denom = field.mul(&denom, &field.sub(xi, xj));
            }
        }
        let weight = field.mul(yi, &field.inv(&denom)?);
        for d in 0..k {
            acc[d] = field.add(&acc[d], &field.mul(&weight, &basis[d]));
        }
    }

    FieldPoly::from_coeffs(acc, field.clone())
}

/// Miller-Rabin with `rounds` pseudo-random witnesses. Error probability is
/// below 4^-rounds for composite n.
pub fn is_probable_prime(n: &BigUint, rounds: u32) -> bool {
    let two = BigUint::from(2u32);
    let three = BigUint::from(3u32);
    if *n < two {
        return false;
    }
    if *n == two || *n == three {
        return true;
    }
    if n.is_even() {
        return false;
    }

    // n - 1 = d * 2^s with d odd
    let n_minus_1 = n - 1u32;
    let s = n_minus_1.trailing_zeros().expect("n > 1 so n-1 > 0");
    let d = &n_minus_1 >> s;

    let mut rng = ChaCha8Rng::seed_from_u64(WITNESS_SEED);
    let byte_len = ((n.bits() + 7) / 8) as usize;
    let span = n - 3u32; // witnesses drawn from [2, n-2]
    'witness: for _ in 0..rounds {
        let mut buf = vec![0u8; byte_len];
        rng.fill(buf.as_mut_slice());
        let a = BigUint::from_bytes_be(&buf) % &span + &two;

        let mut x = a.modpow(&d, n);
        if x.is_one() || x == n_minus_1 {
            continue;
        }
        for _ in 0..s.saturating_sub(1) {
            x = x.modpow(&two, n);
            if x == n_minus_1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}
