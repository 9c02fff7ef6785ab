//! Coadjoint orbits of U_n(F_p) on the dual u* of its Lie algebra.
//!
//! Orbits are computed as breadth-first closures under the generator action
//! λ ↦ x_{r,s}(1).λ with states packed into `u64` keys.  On top of the raw
//! closure this module provides the layer stratification X_i, i-regularity,
//! canonical polarizations with a four-point verification report, the defining
//! minor/γ equation systems of the canonical orbits, membership in the
//! partition pieces O_{D,ξ} attached to arbitrary rook placements, and
//! recovery of the canonical depth-2 representative from a 2-regular orbit.

use crate::field::is_odd_prime;
use crate::nilmat::{
    bits_for, coadjoint_gen, pack, rank_mod_p, tri_idx, tri_len, unpack, LinForm,
};
use crate::roots::{
    build_canonical, canonical_tails, delta_eligible, delta_minor, is_rook_placement,
    minus_set, phi, singular, up_chain, Placement, Root, RootsError,
};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OrbitsError {
    #[error("state space too large: {0} states exceed the bound {1}")]
    TooLarge(u128, u64),
    #[error("cannot pack n = {0}, p = {1} states into 64 bits")]
    Unpackable(usize, u64),
    #[error("orbit size {0} is not a power of p = {1}")]
    NotPPower(u64, u64),
    #[error("orbit dimension {0} is odd")]
    OddDimension(usize),
    #[error("invalid depth {0} for n = {1}")]
    BadDepth(u8, usize),
    #[error("expected exactly one canonical point, found {0}")]
    CanonicalCount(usize),
    #[error("orbit is not 2-regular (layer {0}, dim {1})")]
    NotTwoRegular(usize, usize),
    #[error(transparent)]
    Roots(#[from] RootsError),
}

/// Maximum orbit dimension N(n) = 2·|{(i,j) : i > n−j+1}|.
pub fn max_orbit_dim(n: usize) -> usize {
    2 * phi(n).iter().filter(|&&(i, j)| i > n + 1 - j).count()
}

/// A full coadjoint orbit with its elements in sorted packed encoding.
#[derive(Debug, Clone)]
pub struct Orbit {
    seed: LinForm,
    bits: u32,
    elements: Vec<u64>,
    dim: usize,
}

/// Breadth-first closure of the seed under all generators x_{r,s}(1).
pub fn enumerate_orbit(lam: &LinForm, max_states: u64) -> Result<Orbit, OrbitsError> {
    let (n, p) = (lam.n(), lam.p());
    assert!(is_odd_prime(p), "modulus must be an odd prime");
    let len = tri_len(n);
    let bits = bits_for(p);
    if bits as usize * len > 64 {
        return Err(OrbitsError::Unpackable(n, p));
    }
    let gens: Vec<Root> = phi(n);
    let mut seen: HashSet<u64> = HashSet::new();
    let mut frontier: Vec<u64> = Vec::new();
    let seed_key = pack(lam.entries(), bits);
    seen.insert(seed_key);
    frontier.push(seed_key);
    let mut buf = vec![0u64; len];
    while let Some(key) = frontier.pop() {
        for &(r, s) in &gens {
            unpack(key, bits, &mut buf);
            coadjoint_gen(&mut buf, n, p, r, s, 1);
            let nk = pack(&buf, bits);
            if seen.insert(nk) {
                if seen.len() as u64 > max_states {
                    return Err(OrbitsError::TooLarge(seen.len() as u128, max_states));
                }
                frontier.push(nk);
            }
        }
    }
    let mut elements: Vec<u64> = seen.into_iter().collect();
    elements.sort_unstable();
    let size = elements.len() as u64;
    let mut dim = 0usize;
    let mut s = size;
    while s > 1 {
        if s % p != 0 {
            return Err(OrbitsError::NotPPower(size, p));
        }
        s /= p;
        dim += 1;
    }
    if dim % 2 != 0 {
        return Err(OrbitsError::OddDimension(dim));
    }
    Ok(Orbit { seed: lam.clone(), bits, elements, dim })
}

impl Orbit {
    pub fn seed(&self) -> &LinForm {
        &self.seed
    }

    pub fn size(&self) -> u64 {
        self.elements.len() as u64
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn contains(&self, lam: &LinForm) -> bool {
        let key = pack(lam.entries(), self.bits);
        self.elements.binary_search(&key).is_ok()
    }

    /// Elements in deterministic (sorted-key) order.
    pub fn forms(&self) -> impl Iterator<Item = LinForm> + '_ {
        let (n, p) = (self.seed.n(), self.seed.p());
        let len = tri_len(n);
        self.elements.iter().map(move |&key| {
            let mut buf = vec![0u64; len];
            unpack(key, self.bits, &mut buf);
            LinForm::from_raw(n, p, buf)
        })
    }

    pub fn keys(&self) -> &[u64] {
        &self.elements
    }

    /// The largest i with the orbit inside X_i.
    pub fn layer(&self) -> usize {
        let n = self.seed.n();
        (0..=(n - 1))
            .take_while(|&i| self.forms().all(|f| layer_membership(&f, i)))
            .last()
            .unwrap_or(0)
    }
}

/// λ ∈ X_i iff λ(e_{n,j}) = 0 for 1 ≤ j ≤ i.
pub fn layer_membership(lam: &LinForm, i: usize) -> bool {
    let n = lam.n();
    (1..=i.min(n - 1)).all(|j| lam.get(n, j) == 0)
}

/// i-regular: contained in X_i and of the maximal dimension N − 2i there.
pub fn is_i_regular(orb: &Orbit, i: usize) -> bool {
    orb.forms().all(|f| layer_membership(&f, i))
        && orb.dim == max_orbit_dim(orb.seed.n()).saturating_sub(2 * i)
}

/// Orbit dimension without enumeration: the rank of the skew form
/// β_λ(x,y) = λ([x,y]).
pub fn orbit_dim_rank(lam: &LinForm) -> usize {
    rank_mod_p(lam.beta_matrix(), lam.p())
}

/// A subalgebra spanned by elementary vectors, candidate polarization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Polarization {
    pub n: usize,
    pub p: u64,
    pub basis_roots: Vec<Root>,
}

/// The canonical polarization span{e_{i,j} : (i,j) ∉ M(n,k)}.
pub fn polarization_for(n: usize, p: u64, depth: u8) -> Result<Polarization, OrbitsError> {
    let m = minus_set(n, depth).map_err(|_| OrbitsError::BadDepth(depth, n))?;
    let basis_roots = phi(n).into_iter().filter(|r| !m.contains(r)).collect();
    Ok(Polarization { n, p, basis_roots })
}

impl Polarization {
    pub fn codim(&self) -> usize {
        tri_len(self.n) - self.basis_roots.len()
    }

    pub fn contains_root(&self, r: Root) -> bool {
        self.basis_roots.contains(&r)
    }
}

/// β_λ(e_{a}, e_{b}) for root vectors: λ([e_a, e_b]) read off the
/// precomputed skew matrix.
fn beta_entry(beta: &[Vec<u64>], a: Root, b: Root) -> u64 {
    beta[crate::nilmat::tri_idx(a.0, a.1)][crate::nilmat::tri_idx(b.0, b.1)]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolarizationReport {
    pub subalgebra: bool,
    pub isotropy: bool,
    pub maximality: bool,
    pub dim_relation: bool,
    pub orbit_dim: usize,
    pub codim: usize,
    /// true when the orbit dimension came from the rank of β_λ instead of a
    /// full closure (state space above the bound).
    pub dim_by_rank: bool,
}

impl PolarizationReport {
    pub fn all_pass(&self) -> bool {
        self.subalgebra && self.isotropy && self.maximality && self.dim_relation
    }
}

/// Check the four defining properties of a polarization for λ.
pub fn verify_polarization(
    pol: &Polarization,
    lam: &LinForm,
    max_states: u64,
) -> Result<PolarizationReport, OrbitsError> {
    let n = pol.n;
    assert_eq!(n, lam.n());
    assert_eq!(pol.p, lam.p());

    // (a) subalgebra: [e_{i,j}, e_{k,l}] = δ_{j,k} e_{i,l} − δ_{l,i} e_{k,j},
    // so closure only needs the two possible product roots to stay inside.
    let inside = |r: Root| pol.contains_root(r);
    let mut subalgebra = true;
    for &a in &pol.basis_roots {
        for &b in &pol.basis_roots {
            if a.1 == b.0 && !inside((a.0, b.1)) {
                subalgebra = false;
            }
            if b.1 == a.0 && !inside((b.0, a.1)) {
                subalgebra = false;
            }
        }
    }

    let beta = lam.beta_matrix();
    // (b) isotropy on all basis pairs.
    let isotropy = pol
        .basis_roots
        .iter()
        .all(|&a| pol.basis_roots.iter().all(|&b| beta_entry(&beta, a, b) == 0));
    // (c) maximal isotropic: isotropy plus every outside vector pairing
    // nontrivially with the span.
    let outside: Vec<Root> = phi(n).into_iter().filter(|&r| !inside(r)).collect();
    let maximality = isotropy
        && outside
            .iter()
            .all(|&r| pol.basis_roots.iter().any(|&b| beta_entry(&beta, r, b) != 0));

    // (d) dim Ω_λ = 2 codim p.
    let rank = orbit_dim_rank(lam);
    let mut orbit_dim = rank;
    let mut dim_by_rank = true;
    if (pol.p as u128).pow(rank as u32) <= max_states as u128 {
        if let Ok(orb) = enumerate_orbit(lam, max_states) {
            orbit_dim = orb.dim();
            dim_by_rank = false;
        }
    }
    let codim = pol.codim();
    Ok(PolarizationReport {
        subalgebra,
        isotropy,
        maximality,
        dim_relation: orbit_dim == 2 * codim,
        orbit_dim,
        codim,
        dim_by_rank,
    })
}

/// γ on linear forms: γ(μ) = Σ_{k=2}^{n−1} μ(e_{k,1}) μ(e_{n,k}).
pub fn form_gamma(mu: &LinForm) -> u64 {
    let (n, p) = (mu.n(), mu.p());
    let mut acc = 0u64;
    for k in 2..n {
        acc = (acc + mu.get(k, 1) * mu.get(n, k)) % p;
    }
    acc
}

/// The Δ-equation index set of a placement: roots avoiding every singular set
/// whose up-chain minor is defined.
pub fn delta_equation_roots(n: usize, d: &[Root]) -> Vec<Root> {
    phi(n)
        .into_iter()
        .filter(|&r| {
            if !delta_eligible(d, r) {
                return false;
            }
            let mut chain = up_chain(d, r);
            chain.push(r);
            let rows: std::collections::BTreeSet<usize> =
                chain.iter().map(|x| x.0).collect();
            let cols: std::collections::BTreeSet<usize> =
                chain.iter().map(|x| x.1).collect();
            rows.len() == chain.len() && cols.len() == chain.len()
        })
        .collect()
}

/// Whether μ satisfies the defining equations of the orbit of the canonical
/// seed: all Δ-minors match the seed values, and at depth 1 also γ.
pub fn satisfies_orbit_equations(
    mu: &LinForm,
    seed: &Placement,
    depth: u8,
) -> Result<bool, OrbitsError> {
    let d = seed.roots();
    let f = seed.form();
    for r in delta_equation_roots(seed.n, d) {
        if delta_minor(mu, d, r)? != delta_minor(&f, d, r)? {
            return Ok(false);
        }
    }
    if depth == 1 && form_gamma(mu) != form_gamma(&f) {
        return Ok(false);
    }
    Ok(true)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquationsReport {
    pub orbit_points_satisfy: bool,
    /// Solution count over all of u* when exhaustive, else None.
    pub solution_count: Option<u64>,
    pub solutions_equal_orbit: bool,
    pub exhaustive: bool,
}

/// Verify that the Δ/γ system characterizes the orbit: every orbit point
/// satisfies it, and (exhaustively when p^{dim u*} ≤ bound, else on the given
/// number of seeded random samples) every solution lies in the orbit.
pub fn orbit_equations_check(
    orb: &Orbit,
    seed: &Placement,
    depth: u8,
    exhaustive_bound: u64,
    samples: u64,
) -> Result<EquationsReport, OrbitsError> {
    let (n, p) = (seed.n, seed.p);
    let len = tri_len(n);
    let orbit_points_satisfy = orb
        .forms()
        .map(|f| satisfies_orbit_equations(&f, seed, depth))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .all(|b| b);

    let space = (p as u128).pow(len as u32);
    if space <= exhaustive_bound as u128 {
        let mut count = 0u64;
        let mut all_in = true;
        let mut e = vec![0u64; len];
        loop {
            let mu = LinForm::from_raw(n, p, e.clone());
            if satisfies_orbit_equations(&mu, seed, depth)? {
                count += 1;
                if !orb.contains(&mu) {
                    all_in = false;
                }
            }
            // odometer over F_p^len
            let mut k = 0;
            while k < len {
                e[k] += 1;
                if e[k] < p {
                    break;
                }
                e[k] = 0;
                k += 1;
            }
            if k == len {
                break;
            }
        }
        Ok(EquationsReport {
            orbit_points_satisfy,
            solution_count: Some(count),
            solutions_equal_orbit: all_in && count == orb.size(),
            exhaustive: true,
        })
    } else {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x0b17);
        let mut ok = true;
        for _ in 0..samples {
            let e: Vec<u64> = (0..len).map(|_| rng.gen_range(0..p)).collect();
            let mu = LinForm::from_raw(n, p, e);
            if satisfies_orbit_equations(&mu, seed, depth)? && !orb.contains(&mu) {
                ok = false;
            }
        }
        Ok(EquationsReport {
            orbit_points_satisfy,
            solution_count: None,
            solutions_equal_orbit: ok,
            exhaustive: false,
        })
    }
}

/// Membership in the partition piece O_{D,ξ} of an arbitrary rook placement:
/// all Δ-minors of D match their seed values.
pub fn andre_membership(mu: &LinForm, seed: &Placement) -> Result<bool, OrbitsError> {
    assert!(is_rook_placement(seed.roots()));
    let f = seed.form();
    for r in delta_equation_roots(seed.n, seed.roots()) {
        if delta_minor(mu, seed.roots(), r)? != delta_minor(&f, seed.roots(), r)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Expected size of O_{D,ξ}: p^{|⋃_{(i,j)∈D} S(i,j)|}.  When the singular
/// sets of the D-roots are pairwise disjoint (true for every canonical seed)
/// this equals p^{Σ|S(i,j)|}; the union is the reading pinned by the
/// exhaustive partition scan at n = 4 (overlapping example D = {(3,1),(4,2)}).
pub fn andre_piece_size(seed: &Placement) -> u128 {
    let union: std::collections::BTreeSet<Root> = seed
        .roots()
        .iter()
        .flat_map(|&r| singular(r))
        .collect();
    (seed.p as u128).pow(union.len() as u32)
}

/// Scan a 2-regular orbit for its unique canonical point f_{D²,ξ}.
pub fn canonical_rep(orb: &Orbit) -> Result<Placement, OrbitsError> {
    let n = orb.seed().n();
    let p = orb.seed().p();
    if orb.layer() < 2 || orb.dim() != max_orbit_dim(n).saturating_sub(4) {
        return Err(OrbitsError::NotTwoRegular(orb.layer(), orb.dim()));
    }
    let candidates: Vec<Vec<Root>> = canonical_tails(n, 2)
        .into_iter()
        .map(|t| build_canonical(n, 2, &t))
        .collect::<Result<Vec<_>, _>>()?;
    let mut hits: Vec<Placement> = Vec::new();
    for f in orb.forms() {
        let support: Vec<Root> = phi(n).into_iter().filter(|&(i, j)| f.get(i, j) != 0).collect();
        if candidates.iter().any(|c| *c == support) {
            let pairs: Vec<(Root, i64)> =
                support.iter().map(|&(i, j)| ((i, j), f.get(i, j) as i64)).collect();
            hits.push(Placement::new(n, p, &pairs)?);
        }
    }
    if hits.len() != 1 {
        return Err(OrbitsError::CanonicalCount(hits.len()));
    }
    Ok(hits.pop().unwrap())
}

/// Atlas entry for one orbit, the CLI JSON shape.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrbitSummary {
    pub seed: crate::nilmat::MatrixJson,
    pub size: u64,
    pub dim: usize,
    pub layer: usize,
    pub regular: bool,
    #[serde(rename = "canonicalRep")]
    pub canonical_rep: Option<crate::roots::PlacementJson>,
}

pub fn summarize_orbit(orb: &Orbit) -> OrbitSummary {
    let layer = orb.layer();
    let regular = is_i_regular(orb, layer);
    let canonical = canonical_rep(orb).ok().map(|p| p.to_json());
    OrbitSummary {
        seed: orb.seed().to_json(),
        size: orb.size(),
        dim: orb.dim(),
        layer,
        regular,
        canonical_rep: canonical,
    }
}

/// One orbit discovered while partitioning a layer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AtlasOrbit {
    pub rep: crate::nilmat::MatrixJson,
    pub size: u64,
    pub dim: usize,
    /// Points of the orbit supported exactly on a canonical 2-regular set
    /// (only counted when partitioning layer 2).
    pub canonical_points: u64,
    /// Whether some point lies in one of the degenerate loci
    /// λ(n,3) = 0, λ(n−1,1) = 0, or the 2×2 minor on rows n−2, n−1 and
    /// columns 1, 2 vanishing (only evaluated in layer 2).
    pub meets_degenerate_locus: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AtlasReport {
    pub n: usize,
    pub p: u64,
    pub layer: usize,
    pub total_forms: u128,
    pub max_dim: usize,
    /// dim → number of orbits of that dimension.
    pub dim_histogram: std::collections::BTreeMap<usize, u64>,
    pub orbits: Vec<AtlasOrbit>,
}

fn in_degenerate_locus(f: &LinForm) -> bool {
    let n = f.n();
    let p = f.p();
    let minor = (f.get(n - 2, 1) * f.get(n - 1, 2) % p + p
        - f.get(n - 2, 2) * f.get(n - 1, 1) % p)
        % p;
    f.get(n, 3) == 0 || f.get(n - 1, 1) == 0 || minor == 0
}

/// Partition the invariant layer X_i of the dual space into coadjoint
/// orbits.  The whole layer (p^(len−i) forms) is scanned, so this is only
/// for exhaustible sizes; the bound is checked up front.
pub fn layer_atlas(
    n: usize,
    p: u64,
    layer: usize,
    max_states: u64,
) -> Result<AtlasReport, OrbitsError> {
    assert!(is_odd_prime(p));
    let len = tri_len(n);
    let free = len - layer.min(n - 1);
    let total = (p as u128).pow(free as u32);
    if total > max_states as u128 {
        return Err(OrbitsError::TooLarge(total, max_states));
    }
    // positions (n,j), j ≤ layer are pinned to zero in X_layer
    let pinned: Vec<usize> = (1..=layer.min(n - 1)).map(|j| tri_idx(n, j)).collect();
    let bits = bits_for(p);
    let mut seen: HashSet<u64> = HashSet::new();
    let mut orbits: Vec<AtlasOrbit> = Vec::new();
    let mut dim_histogram = std::collections::BTreeMap::new();
    let mut max_dim = 0usize;
    let canonical_sets: Vec<Vec<Root>> = if layer == 2 {
        canonical_tails(n, 2)
            .into_iter()
            .map(|t| build_canonical(n, 2, &t))
            .collect::<Result<Vec<_>, _>>()?
    } else {
        Vec::new()
    };
    let mut e = vec![0u64; len];
    loop {
        let key = pack(&e, bits);
        if !seen.contains(&key) {
            let f = LinForm::from_raw(n, p, e.clone());
            let orb = enumerate_orbit(&f, max_states)?;
            seen.extend(orb.keys().iter().copied());
            let mut canonical_points = 0u64;
            let mut meets = false;
            if layer == 2 {
                for g in orb.forms() {
                    let support: Vec<Root> = phi(n)
                        .into_iter()
                        .filter(|&(i, j)| g.get(i, j) != 0)
                        .collect();
                    if canonical_sets.iter().any(|c| *c == support) {
                        canonical_points += 1;
                    }
                    if !meets && in_degenerate_locus(&g) {
                        meets = true;
                    }
                }
            }
            max_dim = max_dim.max(orb.dim());
            *dim_histogram.entry(orb.dim()).or_insert(0u64) += 1;
            orbits.push(AtlasOrbit {
                rep: f.to_json(),
                size: orb.size(),
                dim: orb.dim(),
                canonical_points,
                meets_degenerate_locus: (layer == 2).then_some(meets),
            });
        }
        // odometer over the free coordinates
        let mut k = len;
        loop {
            if k == 0 {
                let report = AtlasReport {
                    n,
                    p,
                    layer,
                    total_forms: total,
                    max_dim,
                    dim_histogram,
                    orbits,
                };
                return Ok(report);
            }
            k -= 1;
            if pinned.contains(&k) {
                continue;
            }
            e[k] += 1;
            if e[k] < p {
                break;
            }
            e[k] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::roots::d0;
    use std::collections::HashMap;

    fn canonical_seed(n: usize, p: u64, depth: u8, tail: &[Root], xi: &[i64]) -> Placement {
        let d = build_canonical(n, depth, tail).unwrap();
        assert_eq!(d.len(), xi.len());
        let pairs: Vec<(Root, i64)> = d.iter().copied().zip(xi.iter().copied()).collect();
        Placement::new(n, p, &pairs).unwrap()
    }

    #[test]
    fn zero_form_is_fixed() {
        let lam = LinForm::zero(5, 7).unwrap();
        let orb = enumerate_orbit(&lam, 10).unwrap();
        assert_eq!(orb.size(), 1);
        assert_eq!(orb.dim(), 0);
    }

    #[test]
    fn depth2_orbit_sizes_n5() {
        // [DERIVED] n=5, p=7: any depth-2 seed has orbit size 7⁴ (dim N−4 = 4).
        for xi in [[1i64, 1, 1], [2, 1, 2]] {
            let seed = canonical_seed(5, 7, 2, &[], &xi);
            let orb = enumerate_orbit(&seed.form(), 1 << 20).unwrap();
            assert_eq!(orb.size(), 2401);
            assert_eq!(orb.dim(), 4);
            assert!(is_i_regular(&orb, 2));
            assert_eq!(orbit_dim_rank(&seed.form()), 4);
        }
    }

    #[test]
    fn depth0_orbit_max_dimension() {
        // [DERIVED] n=5, p=5: f_{D⁰,ξ} has the maximal orbit, size 5⁸.
        let seed = canonical_seed(5, 5, 0, &[], &[1, 1]);
        let orb = enumerate_orbit(&seed.form(), 1 << 20).unwrap();
        assert_eq!(orb.size(), 390625);
        assert_eq!(orb.dim(), 8);
        assert_eq!(max_orbit_dim(5), 8);
        assert_eq!(orb.layer(), 0);
    }

    #[test]
    fn layers() {
        let seed = canonical_seed(5, 7, 2, &[], &[1, 2, 3]);
        let f = seed.form();
        assert!(layer_membership(&f, 0));
        assert!(layer_membership(&f, 2));
        assert!(!layer_membership(&f, 3)); // ξ(5,3) ≠ 0
        let mut g = LinForm::zero(5, 7).unwrap();
        g.set(5, 1, 1).unwrap();
        assert!(!layer_membership(&g, 1));
    }

    #[test]
    fn polarization_reports() {
        // [DERIVED] n=6 depth 2: 11 of 15 basis roots.
        let pol = polarization_for(6, 7, 2).unwrap();
        assert_eq!(pol.basis_roots.len(), 11);
        assert_eq!(pol.codim(), 4);

        // depth-2 polarization verifies for n=5, p=7, several ξ
        for xi in [[1i64, 1, 1], [2, 3, 1], [4, 6, 5]] {
            let seed = canonical_seed(5, 7, 2, &[], &xi);
            let pol = polarization_for(5, 7, 2).unwrap();
            let rep = verify_polarization(&pol, &seed.form(), 1 << 20).unwrap();
            assert!(rep.all_pass(), "{rep:?}");
            assert!(!rep.dim_by_rank);
        }
        // depths 0 and 1 verify as well
        for (depth, xi) in [(0u8, vec![1i64, 2]), (1, vec![3, 1])] {
            let seed = canonical_seed(5, 7, depth, &[], &xi);
            let pol = polarization_for(5, 7, depth).unwrap();
            let rep = verify_polarization(&pol, &seed.form(), 1 << 22).unwrap();
            assert!(rep.all_pass(), "depth {depth}: {rep:?}");
        }

        // the whole algebra is not a polarization for a nonzero-dim orbit
        let seed = canonical_seed(5, 7, 2, &[], &[1, 1, 1]);
        let full = Polarization { n: 5, p: 7, basis_roots: phi(5) };
        let rep = verify_polarization(&full, &seed.form(), 1 << 20).unwrap();
        assert!(rep.subalgebra && !rep.isotropy && !rep.maximality && !rep.dim_relation);

        // dropping a basis root keeps isotropy but breaks the dim relation
        let mut pol = polarization_for(5, 7, 2).unwrap();
        let keep: Vec<Root> = pol
            .basis_roots
            .iter()
            .copied()
            .filter(|&r| r != (2, 1))
            .collect();
        pol.basis_roots = keep;
        let rep = verify_polarization(&pol, &seed.form(), 1 << 20).unwrap();
        assert!(rep.isotropy && !rep.dim_relation);
    }

    #[test]
    fn orbit_equations_exhaustive_n4() {
        // [DERIVED] exhaustive over 5⁶ forms at n=4 for depths 0 and 1.
        for (depth, tail, xi) in [
            (0u8, vec![], vec![1i64, 1]),
            (0, vec![], vec![2, 3]),
            (1, vec![], vec![1, 2]),
            (1, vec![(4, 3)], vec![1, 2, 3]),
        ] {
            let seed = canonical_seed(4, 5, depth, &tail, &xi);
            let orb = enumerate_orbit(&seed.form(), 1 << 20).unwrap();
            let rep = orbit_equations_check(&orb, &seed, depth, 20_000, 0).unwrap();
            assert!(rep.exhaustive);
            assert!(rep.orbit_points_satisfy, "depth {depth}");
            assert!(rep.solutions_equal_orbit, "depth {depth} {rep:?}");
        }
    }

    #[test]
    fn orbit_equations_sampled_n5() {
        let seed = canonical_seed(5, 5, 1, &[(5, 4)], &[1, 2, 3]);
        let orb = enumerate_orbit(&seed.form(), 1 << 22).unwrap();
        assert_eq!(orb.dim(), 6);
        let rep = orbit_equations_check(&orb, &seed, 1, 1 << 20, 3000).unwrap();
        assert!(!rep.exhaustive);
        assert!(rep.orbit_points_satisfy && rep.solutions_equal_orbit);
        // perturbing one pinned coordinate leaves the orbit
        let mut f = seed.form();
        f.set(4, 1, 4).unwrap();
        assert!(!satisfies_orbit_equations(&f, &seed, 1).unwrap());
        assert!(!orb.contains(&f));
    }

    #[test]
    fn andre_partition_n4() {
        // [DERIVED] the pieces O_{D,ξ} partition u* at n=4, p=5; every piece
        // has size p^{Σ|S(i,j)|}.
        let (n, p) = (4usize, 5u64);
        let all_roots = phi(n);
        // all rook subsets
        let mut rooks: Vec<Vec<Root>> = Vec::new();
        for mask in 0u32..(1 << all_roots.len()) {
            let sub: Vec<Root> = all_roots
                .iter()
                .enumerate()
                .filter(|&(k, _)| mask >> k & 1 == 1)
                .map(|(_, &r)| r)
                .collect();
            if is_rook_placement(&sub) {
                rooks.push(sub);
            }
        }
        // all seeds (D, ξ)
        let mut seeds: Vec<Placement> = Vec::new();
        for d in &rooks {
            let mut stack: Vec<Vec<i64>> = vec![vec![]];
            for _ in d {
                let mut next = Vec::new();
                for v in &stack {
                    for c in 1..p as i64 {
                        let mut w = v.clone();
                        w.push(c);
                        next.push(w);
                    }
                }
                stack = next;
            }
            for xi in stack {
                let pairs: Vec<(Root, i64)> =
                    d.iter().copied().zip(xi.into_iter()).collect();
                seeds.push(Placement::new(n, p, &pairs).unwrap());
            }
        }
        // count memberships over all of u*
        let len = tri_len(n);
        let mut counts: HashMap<usize, u64> = HashMap::new();
        let mut e = vec![0u64; len];
        loop {
            let mu = LinForm::from_raw(n, p, e.clone());
            let mut owners = 0;
            for (k, s) in seeds.iter().enumerate() {
                if andre_membership(&mu, s).unwrap() {
                    owners += 1;
                    *counts.entry(k).or_insert(0) += 1;
                }
            }
            assert_eq!(owners, 1, "form {e:?} lies in {owners} pieces");
            let mut k = 0;
            while k < len {
                e[k] += 1;
                if e[k] < p {
                    break;
                }
                e[k] = 0;
                k += 1;
            }
            if k == len {
                break;
            }
        }
        for (k, s) in seeds.iter().enumerate() {
            assert_eq!(
                counts.get(&k).copied().unwrap_or(0) as u128,
                andre_piece_size(s),
                "piece {:?}",
                s.roots()
            );
        }
    }

    #[test]
    fn canonical_rep_recovery() {
        let seed = canonical_seed(5, 5, 2, &[(5, 4)], &[2, 3, 1, 4]);
        let orb = enumerate_orbit(&seed.form(), 1 << 20).unwrap();
        let rep = canonical_rep(&orb).unwrap();
        assert_eq!(rep, seed);
        // a 0-regular orbit is rejected
        let s0 = canonical_seed(5, 5, 0, &[], &[1, 1]);
        let orb0 = enumerate_orbit(&s0.form(), 1 << 20).unwrap();
        assert!(matches!(canonical_rep(&orb0), Err(OrbitsError::NotTwoRegular(_, _))));
    }

    #[test]
    fn orbit_partition_n4() {
        // [DERIVED] orbits partition u* at n=4, p=5 (5⁶ forms).
        let (n, p) = (4usize, 5u64);
        let len = tri_len(n);
        let bits = bits_for(p);
        let total = (p as u64).pow(len as u32);
        let mut assigned: HashSet<u64> = HashSet::new();
        let mut e = vec![0u64; len];
        let mut covered = 0u64;
        loop {
            let key = pack(&e, bits);
            if !assigned.contains(&key) {
                let mu = LinForm::from_raw(n, p, e.clone());
                let orb = enumerate_orbit(&mu, total).unwrap();
                for &k in orb.keys() {
                    assert!(assigned.insert(k), "orbits overlap at key {k}");
                }
                covered += orb.size();
            }
            let mut k = 0;
            while k < len {
                e[k] += 1;
                if e[k] < p {
                    break;
                }
                e[k] = 0;
                k += 1;
            }
            if k == len {
                break;
            }
        }
        assert_eq!(covered, total);
    }

    #[test]
    fn no_orbit_in_x2_exceeds_bound_n4() {
        // dimension cap inside a layer: at n=4 no orbit in X_1 exceeds N−2.
        let (n, p) = (4usize, 5u64);
        let nn = max_orbit_dim(n);
        let len = tri_len(n);
        let mut e = vec![0u64; len];
        loop {
            let mu = LinForm::from_raw(n, p, e.clone());
            if layer_membership(&mu, 1) {
                assert!(orbit_dim_rank(&mu) <= nn - 2);
            }
            let mut k = 0;
            while k < len {
                e[k] += 1;
                if e[k] < p {
                    break;
                }
                e[k] = 0;
                k += 1;
            }
            if k == len {
                break;
            }
        }
    }

    #[test]
    fn seed_form_matches_d0() {
        let seed = canonical_seed(6, 7, 0, &[], &[1, 2, 3]);
        let mut expect = d0(6);
        expect.sort();
        assert_eq!(seed.roots(), expect.as_slice());
    }
}
