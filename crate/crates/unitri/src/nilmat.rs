//! The group U_n(F_p) of lower unitriangular matrices, its Lie algebra of
//! strictly lower triangular matrices, and the dual space of linear forms.
//!
//! All three kinds of object are stored sparsely-densely: one `u64` residue per
//! strictly lower position (i, j), i > j, in the triangular order
//! `(2,1), (3,1), (3,2), (4,1), ...`.  A linear form is indexed the same way,
//! with `e[(i,j)]` meaning the value on the basis matrix `e_{i,j}`; as a matrix
//! it lives in the strictly *upper* triangle, at position (j, i).
//!
//! `exp` and `ln` are the truncated series, which are mutually inverse
//! bijections whenever p >= n (all factorials up to (n-1)! invertible).
//!
//! The coadjoint action is `(g . lambda)(x) = lambda(g^{-1} x g)`; on matrices
//! it is "conjugate the upper-triangular matrix of lambda by g, then discard
//! everything on or below the diagonal".  For a generator `g = 1 + t e_{r,s}`
//! this reduces to one row and one column update ([`coadjoint_gen`]), which is
//! what the orbit enumerator runs.

use crate::field::{addm, is_odd_prime, mulm, subm, FieldElem};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NilmatError {
    #[error("size/modulus mismatch between operands")]
    ShapeMismatch,
    #[error("n = {0} is out of range (need 2 <= n)")]
    BadSize(usize),
    #[error("{0} is not an odd prime")]
    NotPrime(u64),
    #[error("exp/ln need p >= n, got p = {p}, n = {n}")]
    ModulusTooSmall { p: u64, n: usize },
    #[error("entry ({i}, {j}) is not strictly lower triangular for n = {n}")]
    BadPosition { i: usize, j: usize, n: usize },
    #[error("unknown matrix kind {0:?}")]
    BadKind(String),
}

/// Number of strictly lower positions for size n.
pub fn tri_len(n: usize) -> usize {
    n * (n - 1) / 2
}

/// Index of the strictly lower position (i, j), 1-based, i > j.
#[inline]
pub fn tri_idx(i: usize, j: usize) -> usize {
    (i - 1) * (i - 2) / 2 + j - 1
}

/// Inverse of [`tri_idx`].
pub fn tri_pos(n: usize, mut idx: usize) -> (usize, usize) {
    for i in 2..=n {
        if idx < i - 1 {
            return (i, idx + 1);
        }
        idx -= i - 1;
    }
    panic!("triangular index out of range");
}

fn validate(n: usize, p: u64) -> Result<(), NilmatError> {
    if n < 2 {
        return Err(NilmatError::BadSize(n));
    }
    if !is_odd_prime(p) {
        return Err(NilmatError::NotPrime(p));
    }
    Ok(())
}

macro_rules! tri_object {
    ($name:ident, $kind:expr) => {
        #[derive(Debug, Clone, PartialEq, Eq, Hash)]
        pub struct $name {
            n: usize,
            p: u64,
            e: Vec<u64>,
        }

        impl $name {
            pub fn zero(n: usize, p: u64) -> Result<Self, NilmatError> {
                validate(n, p)?;
                Ok($name {
                    n,
                    p,
                    e: vec![0; tri_len(n)],
                })
            }

            pub fn from_entries(
                n: usize,
                p: u64,
                entries: &[(usize, usize, i64)],
            ) -> Result<Self, NilmatError> {
                let mut m = Self::zero(n, p)?;
                for &(i, j, v) in entries {
                    m.set(i, j, v)?;
                }
                Ok(m)
            }

            pub fn n(&self) -> usize {
                self.n
            }

            pub fn p(&self) -> u64 {
                self.p
            }

            /// Entry at strictly lower position (i, j), i > j.
            pub fn get(&self, i: usize, j: usize) -> u64 {
                debug_assert!(j < i && i <= self.n);
                self.e[tri_idx(i, j)]
            }

            pub fn set(&mut self, i: usize, j: usize, v: i64) -> Result<(), NilmatError> {
                if !(j >= 1 && j < i && i <= self.n) {
                    return Err(NilmatError::BadPosition { i, j, n: self.n });
                }
                self.e[tri_idx(i, j)] = v.rem_euclid(self.p as i64) as u64;
                Ok(())
            }

            pub fn entries(&self) -> &[u64] {
                &self.e
            }

            pub fn entries_mut(&mut self) -> &mut [u64] {
                &mut self.e
            }

            pub fn from_raw(n: usize, p: u64, e: Vec<u64>) -> Self {
                debug_assert_eq!(e.len(), tri_len(n));
                debug_assert!(e.iter().all(|&v| v < p));
                $name { n, p, e }
            }

            pub fn is_zero(&self) -> bool {
                self.e.iter().all(|&v| v == 0)
            }

            pub fn same_shape(&self, other: &Self) -> Result<(), NilmatError> {
                if self.n != other.n || self.p != other.p {
                    Err(NilmatError::ShapeMismatch)
                } else {
                    Ok(())
                }
            }

            pub fn to_json(&self) -> MatrixJson {
                let mut entries = Vec::new();
                for idx in 0..tri_len(self.n) {
                    if self.e[idx] != 0 {
                        let (i, j) = tri_pos(self.n, idx);
                        entries.push((i, j, self.e[idx]));
                    }
                }
                MatrixJson {
                    n: self.n,
                    p: self.p,
                    kind: $kind.to_string(),
                    entries,
                }
            }

            pub fn from_json(json: &MatrixJson) -> Result<Self, NilmatError> {
                if json.kind != $kind {
                    return Err(NilmatError::BadKind(json.kind.clone()));
                }
                let entries: Vec<(usize, usize, i64)> = json
                    .entries
                    .iter()
                    .map(|&(i, j, v)| (i, j, v as i64))
                    .collect();
                Self::from_entries(json.n, json.p, &entries)
            }
        }
    };
}

tri_object!(GroupElem, "group");
tri_object!(LieElem, "lie");
tri_object!(LinForm, "form");

/// Interchange format for all three kinds of triangular object: only nonzero
/// entries, listed by strictly lower position.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixJson {
    pub n: usize,
    pub p: u64,
    pub kind: String,
    pub entries: Vec<(usize, usize, u64)>,
}

/// Dense n x n working matrix over F_p (row-major, 0-based).
#[derive(Clone)]
struct Full {
    n: usize,
    p: u64,
    a: Vec<u64>,
}

impl Full {
    fn zero(n: usize, p: u64) -> Self {
        Full {
            n,
            p,
            a: vec![0; n * n],
        }
    }

    fn identity(n: usize, p: u64) -> Self {
        let mut m = Self::zero(n, p);
        for i in 0..n {
            m.a[i * n + i] = 1;
        }
        m
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> u64 {
        self.a[i * self.n + j]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: u64) {
        self.a[i * self.n + j] = v;
    }

    fn mul(&self, other: &Full) -> Full {
        let n = self.n;
        let p = self.p;
        let mut out = Full::zero(n, p);
        for i in 0..n {
            for k in 0..n {
                let aik = self.get(i, k);
                if aik == 0 {
                    continue;
                }
                for j in 0..n {
                    let v = addm(out.get(i, j), mulm(aik, other.get(k, j), p), p);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    fn add_scaled(&mut self, other: &Full, c: u64) {
        for (x, &y) in self.a.iter_mut().zip(&other.a) {
            *x = addm(*x, mulm(c, y, self.p), self.p);
        }
    }
}

impl GroupElem {
    pub fn identity(n: usize, p: u64) -> Result<Self, NilmatError> {
        Self::zero(n, p)
    }

    /// The generator 1 + t e_{r,s}.
    pub fn generator(n: usize, p: u64, r: usize, s: usize, t: i64) -> Result<Self, NilmatError> {
        let mut g = Self::zero(n, p)?;
        g.set(r, s, t)?;
        Ok(g)
    }

    fn to_full(&self) -> Full {
        let mut m = Full::identity(self.n, self.p);
        for i in 2..=self.n {
            for j in 1..i {
                m.set(i - 1, j - 1, self.get(i, j));
            }
        }
        m
    }

    fn from_full(f: &Full) -> Self {
        let n = f.n;
        let mut g = GroupElem {
            n,
            p: f.p,
            e: vec![0; tri_len(n)],
        };
        for i in 2..=n {
            for j in 1..i {
                g.e[tri_idx(i, j)] = f.get(i - 1, j - 1);
            }
        }
        g
    }

    pub fn mul(&self, other: &Self) -> Result<Self, NilmatError> {
        self.same_shape(other)?;
        Ok(Self::from_full(&self.to_full().mul(&other.to_full())))
    }

    /// Inverse via the Neumann series: (1 + y)^{-1} = sum_k (-y)^k, finite
    /// because y is nilpotent.
    pub fn inv(&self) -> Self {
        let n = self.n;
        let p = self.p;
        let y = {
            let mut f = self.to_full();
            for i in 0..n {
                f.set(i, i, 0);
            }
            f
        };
        let mut acc = Full::identity(n, p);
        let mut pow = Full::identity(n, p);
        for k in 1..n {
            pow = pow.mul(&y);
            let sign = if k % 2 == 1 { p - 1 } else { 1 };
            acc.add_scaled(&pow, sign);
        }
        Self::from_full(&acc)
    }

    pub fn conjugate(&self, by: &Self) -> Result<Self, NilmatError> {
        // by^{-1} * self * by
        by.inv().mul(self)?.mul(by)
    }
}

impl LieElem {
    fn to_full(&self) -> Full {
        let mut m = Full::zero(self.n, self.p);
        for i in 2..=self.n {
            for j in 1..i {
                m.set(i - 1, j - 1, self.get(i, j));
            }
        }
        m
    }

    fn from_full(f: &Full) -> Self {
        let n = f.n;
        let mut x = LieElem {
            n,
            p: f.p,
            e: vec![0; tri_len(n)],
        };
        for i in 2..=n {
            for j in 1..i {
                x.e[tri_idx(i, j)] = f.get(i - 1, j - 1);
            }
        }
        x
    }

    pub fn add(&self, other: &Self) -> Result<Self, NilmatError> {
        self.same_shape(other)?;
        let e = self
            .e
            .iter()
            .zip(&other.e)
            .map(|(&a, &b)| addm(a, b, self.p))
            .collect();
        Ok(LieElem {
            n: self.n,
            p: self.p,
            e,
        })
    }

    pub fn scale(&self, c: i64) -> Self {
        let c = c.rem_euclid(self.p as i64) as u64;
        LieElem {
            n: self.n,
            p: self.p,
            e: self.e.iter().map(|&a| mulm(a, c, self.p)).collect(),
        }
    }

    /// Lie bracket [x, y] = xy - yx.
    pub fn bracket(&self, other: &Self) -> Result<Self, NilmatError> {
        self.same_shape(other)?;
        let xy = self.to_full().mul(&other.to_full());
        let mut yx = other.to_full().mul(&self.to_full());
        let p = self.p;
        for (a, &b) in yx.a.iter_mut().zip(&xy.a) {
            *a = subm(b, *a, p);
        }
        Ok(Self::from_full(&yx))
    }
}

/// Truncated exponential series; bijection u -> U when p >= n.
pub fn exp(x: &LieElem) -> Result<GroupElem, NilmatError> {
    let n = x.n();
    let p = x.p();
    if p < n as u64 {
        return Err(NilmatError::ModulusTooSmall { p, n });
    }
    let xf = x.to_full();
    let mut acc = Full::identity(n, p);
    let mut pow = Full::identity(n, p);
    let mut fact = FieldElem::reduce(p, 1);
    for k in 1..n {
        pow = pow.mul(&xf);
        fact = fact.mul(&FieldElem::reduce(p, k as i64)).unwrap();
        acc.add_scaled(&pow, fact.inv().unwrap().value());
    }
    let mut g = GroupElem::zero(n, p)?;
    for i in 2..=n {
        for j in 1..i {
            g.e[tri_idx(i, j)] = acc.get(i - 1, j - 1);
        }
    }
    Ok(g)
}

/// Truncated logarithm series, inverse to [`exp`] when p >= n.
pub fn ln(g: &GroupElem) -> Result<LieElem, NilmatError> {
    let n = g.n();
    let p = g.p();
    if p < n as u64 {
        return Err(NilmatError::ModulusTooSmall { p, n });
    }
    let y = {
        let mut f = g.to_full();
        for i in 0..n {
            f.set(i, i, 0);
        }
        f
    };
    let mut acc = Full::zero(n, p);
    let mut pow = Full::identity(n, p);
    for k in 1..n {
        pow = pow.mul(&y);
        let inv_k = FieldElem::reduce(p, k as i64).inv().unwrap().value();
        let c = if k % 2 == 1 { inv_k } else { mulm(p - 1, inv_k, p) };
        acc.add_scaled(&pow, c);
    }
    Ok(LieElem::from_full(&acc))
}

impl LinForm {
    /// The pairing lambda(x) = sum over strictly lower positions.
    pub fn eval(&self, x: &LieElem) -> Result<FieldElem, NilmatError> {
        if self.n != x.n() || self.p != x.p() {
            return Err(NilmatError::ShapeMismatch);
        }
        let mut acc = 0u64;
        for (&a, &b) in self.e.iter().zip(x.entries()) {
            acc = addm(acc, mulm(a, b, self.p), self.p);
        }
        Ok(FieldElem::reduce(self.p, acc as i64))
    }

    /// Coadjoint action (g . lambda)(x) = lambda(g^{-1} x g): conjugate the
    /// upper triangular matrix of lambda by g and keep the strictly upper part.
    pub fn coadjoint(&self, g: &GroupElem) -> Result<Self, NilmatError> {
        if self.n != g.n() || self.p != g.p() {
            return Err(NilmatError::ShapeMismatch);
        }
        let n = self.n;
        let mut lam = Full::zero(n, self.p);
        for i in 2..=n {
            for j in 1..i {
                // form coordinate at lower root (i, j) sits at matrix (j, i)
                lam.set(j - 1, i - 1, self.get(i, j));
            }
        }
        let conj = g.to_full().mul(&lam).mul(&g.inv().to_full());
        let mut out = LinForm {
            n,
            p: self.p,
            e: vec![0; tri_len(n)],
        };
        for i in 2..=n {
            for j in 1..i {
                out.e[tri_idx(i, j)] = conj.get(j - 1, i - 1);
            }
        }
        Ok(out)
    }

    /// The alternating form beta_lambda(x, y) = lambda([x, y]) as a matrix over
    /// the root basis; its rank is the dimension of the orbit through lambda.
    pub fn beta_matrix(&self) -> Vec<Vec<u64>> {
        let n = self.n;
        let p = self.p;
        let m = tri_len(n);
        let mut b = vec![vec![0u64; m]; m];
        for a in 0..m {
            let (i, j) = tri_pos(n, a);
            for c in 0..m {
                let (k, l) = tri_pos(n, c);
                // [e_{i,j}, e_{k,l}] = delta_{j,k} e_{i,l} - delta_{l,i} e_{k,j}
                let mut v = 0u64;
                if j == k {
                    v = addm(v, self.get(i, l), p);
                }
                if l == i {
                    v = subm(v, self.get(k, j), p);
                }
                b[a][c] = v;
            }
        }
        b
    }
}

/// In-place coadjoint update for a generator g = 1 + t e_{r,s} (r > s) acting
/// on the raw coordinate slice of a form.  Derived from
/// lambda' = (1 + tE) lambda (1 - tE) truncated above the diagonal; the
/// quadratic term lands at the lower position (r, s) and is discarded by the
/// truncation.  The touched positions are disjoint from the read positions, so
/// the update is safe in place.
#[inline]
pub fn coadjoint_gen(e: &mut [u64], n: usize, p: u64, r: usize, s: usize, t: u64) {
    // matrix row r of the form gains t * row s: lambda'_{r,b} += t lambda_{s,b}
    for b in (r + 1)..=n {
        let add = mulm(t, e[tri_idx(b, s)], p);
        let idx = tri_idx(b, r);
        e[idx] = addm(e[idx], add, p);
    }
    // matrix column s loses t * column r: lambda'_{a,s} -= t lambda_{a,r}
    for a in 1..s {
        let sub = mulm(t, e[tri_idx(r, a)], p);
        let idx = tri_idx(s, a);
        e[idx] = subm(e[idx], sub, p);
    }
}

/// In-place conjugation x -> g^{-1} x g of a group element's raw coordinate
/// slice by a generator g = 1 + t e_{r,s}.  Same derivation as
/// [`coadjoint_gen`] on the lower triangle; the diagonal contributions cancel
/// and the quadratic term vanishes above the diagonal.
#[inline]
pub fn conjugate_gen(e: &mut [u64], n: usize, p: u64, r: usize, s: usize, t: u64) {
    // row r loses t * row s (strictly lower part)
    for b in 1..s {
        let sub = mulm(t, e[tri_idx(s, b)], p);
        let idx = tri_idx(r, b);
        e[idx] = subm(e[idx], sub, p);
    }
    // column s gains t * column r
    for a in (r + 1)..=n {
        let add = mulm(t, e[tri_idx(a, r)], p);
        let idx = tri_idx(a, s);
        e[idx] = addm(e[idx], add, p);
    }
}

/// Bits needed per coordinate to pack residues mod p.
pub fn bits_for(p: u64) -> u32 {
    64 - (p - 1).leading_zeros() as u32
}

/// Pack a coordinate slice into a single u64 key (requires len * bits <= 64).
#[inline]
pub fn pack(e: &[u64], bits: u32) -> u64 {
    debug_assert!(e.len() as u32 * bits <= 64);
    let mut key = 0u64;
    for &v in e.iter().rev() {
        key = (key << bits) | v;
    }
    key
}

#[inline]
pub fn unpack(mut key: u64, bits: u32, out: &mut [u64]) {
    let mask = (1u64 << bits) - 1;
    for v in out.iter_mut() {
        *v = key & mask;
        key >>= bits;
    }
}

/// Rank of a matrix over F_p by Gaussian elimination.
pub fn rank_mod_p(mut m: Vec<Vec<u64>>, p: u64) -> usize {
    let rows = m.len();
    if rows == 0 {
        return 0;
    }
    let cols = m[0].len();
    let mut rank = 0;
    let mut row = 0;
    for col in 0..cols {
        let pivot = (row..rows).find(|&r| m[r][col] != 0);
        let Some(pr) = pivot else { continue };
        m.swap(row, pr);
        let inv = FieldElem::reduce(p, m[row][col] as i64).inv().unwrap().value();
        for v in m[row].iter_mut() {
            *v = mulm(*v, inv, p);
        }
        for r in 0..rows {
            if r != row && m[r][col] != 0 {
                let c = m[r][col];
                for j in 0..cols {
                    let sub = mulm(c, m[row][j], p);
                    m[r][j] = subm(m[r][j], sub, p);
                }
            }
        }
        row += 1;
        rank += 1;
        if row == rows {
            break;
        }
    }
    rank
}

/// Nullity (kernel dimension) of a matrix over F_p.
pub fn nullity_mod_p(m: Vec<Vec<u64>>, p: u64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let cols = m[0].len();
    cols - rank_mod_p(m, p)
}
