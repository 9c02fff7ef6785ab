//! Exact arithmetic over the prime field `F_p` and the cyclotomic ring `Z[zeta_p]`.
//!
//! Character values of a finite p-group live in `Z[zeta_p][1/p]`: integer
//! combinations of p-th roots of unity divided by a power of p.  We keep all
//! three layers exact:
//!
//! * [`FieldElem`] — residues mod p,
//! * [`CycValue`] — elements of `Z[zeta_p]`, stored on the redundant basis
//!   `1, zeta, ..., zeta^{p-1}` and normalised so the last coordinate is 0
//!   (the basis relation is `1 + zeta + ... + zeta^{p-1} = 0`),
//! * [`CharValue`] — a `CycValue` divided by an explicit power of p.
//!
//! Equality of [`CharValue`]s cross-multiplies by p-powers, so values produced
//! by different evaluation strategies (orbit sums vs. closed forms) compare
//! exactly without ever leaving `Z`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FieldError {
    #[error("modulus mismatch: {0} vs {1}")]
    ModulusMismatch(u64, u64),
    #[error("inversion of zero in F_{0}")]
    ZeroInverse(u64),
    #[error("{0} is not an odd prime")]
    NotPrime(u64),
}

/// Trial-division primality check; moduli here are tiny (p <= 101 in practice).
pub fn is_odd_prime(p: u64) -> bool {
    if p < 3 || p % 2 == 0 {
        return false;
    }
    let mut d = 3;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// A residue mod an odd prime p, always stored in `0..p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldElem {
    p: u64,
    value: u64,
}

impl FieldElem {
    pub fn new(p: u64, value: i64) -> Result<Self, FieldError> {
        if !is_odd_prime(p) {
            return Err(FieldError::NotPrime(p));
        }
        Ok(Self::reduce(p, value))
    }

    /// Internal constructor for callers that have already validated p.
    pub(crate) fn reduce(p: u64, value: i64) -> Self {
        let m = value.rem_euclid(p as i64) as u64;
        FieldElem { p, value: m }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    fn check(&self, other: &Self) -> Result<(), FieldError> {
        if self.p != other.p {
            Err(FieldError::ModulusMismatch(self.p, other.p))
        } else {
            Ok(())
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, FieldError> {
        self.check(other)?;
        Ok(FieldElem {
            p: self.p,
            value: (self.value + other.value) % self.p,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, FieldError> {
        self.check(other)?;
        Ok(FieldElem {
            p: self.p,
            value: (self.p + self.value - other.value) % self.p,
        })
    }

    pub fn mul(&self, other: &Self) -> Result<Self, FieldError> {
        self.check(other)?;
        Ok(FieldElem {
            p: self.p,
            value: (self.value * other.value) % self.p,
        })
    }

    pub fn neg(&self) -> Self {
        FieldElem {
            p: self.p,
            value: (self.p - self.value) % self.p,
        }
    }

    /// Multiplicative inverse via Fermat's little theorem.
    pub fn inv(&self) -> Result<Self, FieldError> {
        if self.value == 0 {
            return Err(FieldError::ZeroInverse(self.p));
        }
        Ok(FieldElem {
            p: self.p,
            value: pow_mod(self.value, self.p - 2, self.p),
        })
    }
}

pub(crate) fn pow_mod(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    base %= p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % p;
        }
        base = base * base % p;
        exp >>= 1;
    }
    acc
}

/// Scalar arithmetic mod p on raw `u64` residues (hot loops avoid the
/// per-element modulus tag).
#[inline]
pub fn addm(a: u64, b: u64, p: u64) -> u64 {
    let s = a + b;
    if s >= p {
        s - p
    } else {
        s
    }
}

#[inline]
pub fn subm(a: u64, b: u64, p: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        a + p - b
    }
}

#[inline]
pub fn mulm(a: u64, b: u64, p: u64) -> u64 {
    a * b % p
}

/// An element of `Z[zeta_p]` on the basis `1, zeta, ..., zeta^{p-1}` with the
/// normalisation `coeffs[p-1] == 0`.  Constructors normalise, so derived
/// equality is literal equality in the ring.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CycValue {
    p: u64,
    coeffs: Vec<i64>,
}

impl CycValue {
    pub fn zero(p: u64) -> Self {
        CycValue {
            p,
            coeffs: vec![0; p as usize],
        }
    }

    pub fn from_integer(p: u64, n: i64) -> Self {
        let mut v = Self::zero(p);
        v.coeffs[0] = n;
        v
    }

    /// Build from coefficients on `1, zeta, ..., zeta^{p-1}` (length p),
    /// reducing by `sum zeta^i = 0`.
    pub fn from_coeffs(p: u64, coeffs: Vec<i64>) -> Self {
        assert_eq!(coeffs.len(), p as usize, "need p coefficients");
        let mut v = CycValue { p, coeffs };
        v.normalize();
        v
    }

    /// `zeta^k` with arbitrary integer exponent.
    pub fn zeta_pow(p: u64, k: i64) -> Self {
        let k = k.rem_euclid(p as i64) as usize;
        let mut v = CycValue {
            p,
            coeffs: vec![0; p as usize],
        };
        v.coeffs[k] = 1;
        v.normalize();
        v
    }

    fn normalize(&mut self) {
        let last = self.coeffs[self.p as usize - 1];
        if last != 0 {
            for c in self.coeffs.iter_mut() {
                *c -= last;
            }
        }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    fn check(&self, other: &Self) -> Result<(), FieldError> {
        if self.p != other.p {
            Err(FieldError::ModulusMismatch(self.p, other.p))
        } else {
            Ok(())
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, FieldError> {
        self.check(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        Ok(CycValue { p: self.p, coeffs })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, FieldError> {
        self.check(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a - b)
            .collect();
        Ok(CycValue { p: self.p, coeffs })
    }

    pub fn mul(&self, other: &Self) -> Result<Self, FieldError> {
        self.check(other)?;
        let p = self.p as usize;
        let mut coeffs = vec![0i64; p];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                coeffs[(i + j) % p] += a * b;
            }
        }
        let mut v = CycValue { p: self.p, coeffs };
        v.normalize();
        Ok(v)
    }

    pub fn scale(&self, n: i64) -> Self {
        CycValue {
            p: self.p,
            coeffs: self.coeffs.iter().map(|c| c * n).collect(),
        }
    }

    /// Complex conjugation: `zeta -> zeta^{-1}`.
    pub fn conj(&self) -> Self {
        let p = self.p as usize;
        let mut coeffs = vec![0i64; p];
        for (i, &a) in self.coeffs.iter().enumerate() {
            coeffs[(p - i) % p] += a;
        }
        let mut v = CycValue { p: self.p, coeffs };
        v.normalize();
        v
    }

    /// Floating approximation for display only; all decisions are exact.
    pub fn to_complex(&self) -> (f64, f64) {
        let p = self.p as f64;
        let mut re = 0.0;
        let mut im = 0.0;
        for (i, &a) in self.coeffs.iter().enumerate() {
            let arg = 2.0 * std::f64::consts::PI * (i as f64) / p;
            re += a as f64 * arg.cos();
            im += a as f64 * arg.sin();
        }
        (re, im)
    }
}

/// The additive character `theta(c) = zeta_p^c`.
pub fn theta(c: FieldElem) -> CycValue {
    CycValue::zeta_pow(c.p(), c.value() as i64)
}

/// An element of `Z[zeta_p][1/p]`: `num / p^denom_exp`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CharValue {
    pub num: CycValue,
    pub denom_exp: u32,
}

impl CharValue {
    pub fn new(num: CycValue, denom_exp: u32) -> Self {
        CharValue { num, denom_exp }
    }

    pub fn from_integer(p: u64, n: i64) -> Self {
        CharValue {
            num: CycValue::from_integer(p, n),
            denom_exp: 0,
        }
    }

    pub fn p(&self) -> u64 {
        self.num.p()
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn to_complex(&self) -> (f64, f64) {
        let (re, im) = self.num.to_complex();
        let d = (self.p() as f64).powi(self.denom_exp as i32);
        (re / d, im / d)
    }
}

impl PartialEq for CharValue {
    /// `a/p^e == b/p^f` iff `a * p^f == b * p^e`; the cross-multiplication is
    /// carried out in i128 to stay safely exact at desk scales.
    fn eq(&self, other: &Self) -> bool {
        if self.p() != other.p() {
            return false;
        }
        let p = self.p() as i128;
        let (lo, hi) = if self.denom_exp <= other.denom_exp {
            (self, other)
        } else {
            (other, self)
        };
        let mut scale = 1i128;
        for _ in lo.denom_exp..hi.denom_exp {
            scale *= p;
        }
        lo.num
            .coeffs()
            .iter()
            .zip(hi.num.coeffs())
            .all(|(&a, &b)| (a as i128) * scale == b as i128)
    }
}

impl Eq for CharValue {}
