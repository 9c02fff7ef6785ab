//! Conjugacy classes of U_n(F_p) attached to regular root placements.
//!
//! A class is specified by a placement (D, φ) and a depth tag; the
//! representative is x_D(φ) = 1 + Σ φ(i,j) e_{i,j}.  The class is described
//! two ways: extensionally by breadth-first closure under conjugation, and
//! intensionally by the predicate system K_D(φ) of chain minors plus the
//! branch-specific quadratic equations.  A backtracking solver counts the
//! solutions of the predicate system so the two descriptions can be compared
//! exactly without materializing the solution set twice.

use crate::field::FieldElem;
use crate::nilmat::{
    bits_for, conjugate_gen, nullity_mod_p, pack, tri_idx, tri_len, unpack, GroupElem,
};
use crate::roots::{
    class_minor, class_minor_defined, cross_sets, quadratic, regularity_at_depth,
    Placement, Quadratic, RegularityTag, Root, RootsError,
};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClassesError {
    #[error("placement is not regular at depth {0}")]
    NotRegular(u8),
    #[error("state bound {0} exceeded during class closure")]
    TooLarge(u64),
    #[error("cannot pack n = {0}, p = {1} states into 64 bits")]
    Unpackable(usize, u64),
    #[error("node bound {0} exceeded during predicate solving")]
    SolverBound(u64),
    #[error(transparent)]
    Roots(#[from] RootsError),
}

/// A conjugacy-class specification: placement, depth, and its regularity tag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassSpec {
    pub placement: Placement,
    pub depth: u8,
    pub tag: RegularityTag,
    /// Branch with both (3,2) and (n,n−1) only: target value of the extra
    /// affine cut.  The representative is shifted in x_{n−1,1} to attain it,
    /// reaching the p − 1 classes of a minor/quadratic locus that no plain
    /// coefficient map labels.
    pub cut: Option<u64>,
}

impl ClassSpec {
    pub fn new(placement: Placement, depth: u8) -> Result<Self, ClassesError> {
        let tag = regularity_at_depth(placement.n, placement.roots(), depth)
            .ok_or(ClassesError::NotRegular(depth))?;
        Ok(ClassSpec { placement, depth, tag, cut: None })
    }

    /// A depth-2 class on the (3,2)+(n,n−1) branch with a prescribed value of
    /// the pairing cut.
    pub fn with_cut(placement: Placement, depth: u8, cut: u64) -> Result<Self, ClassesError> {
        let mut spec = ClassSpec::new(placement, depth)?;
        spec.cut = Some(cut % spec.placement.p);
        Ok(spec)
    }

    pub fn n(&self) -> usize {
        self.placement.n
    }

    pub fn p(&self) -> u64 {
        self.placement.p
    }

    /// The representative: x_D(φ), shifted in x_{n−1,1} when a pairing-cut
    /// target is prescribed.
    pub fn rep(&self) -> GroupElem {
        let mut g = self.placement.unipotent();
        if let Some(target) = self.cut {
            let (n, p) = (self.placement.n, self.placement.p);
            let (c1, c2) = cut_coeffs(n, p, &self.placement);
            let e0 = cut_value(&g, c1, c2);
            let delta = FieldElem::new(p, ((p + target - e0) % p) as i64)
                .unwrap()
                .mul(&FieldElem::new(p, c1 as i64).unwrap().inv().unwrap())
                .unwrap()
                .value();
            let v = (g.get(n - 1, 1) + delta) % p;
            g.set(n - 1, 1, v as i64).unwrap();
        }
        g
    }
}

/// Coefficients of the affine pairing cut c1·x_{n−1,1} + c2·x_{n,n−2} +
/// x_{3,1}·x_{n−1,2} on the branch carrying both (3,2) and (n,n−1).
pub(crate) fn cut_coeffs(n: usize, p: u64, placement: &Placement) -> (u64, u64) {
    let a1 = FieldElem::new(p, placement.value((3, 2)).unwrap() as i64).unwrap();
    let a2 = FieldElem::new(p, placement.value((n - 2, 1)).unwrap() as i64).unwrap();
    let a4 = FieldElem::new(p, placement.value((n, n - 1)).unwrap() as i64).unwrap();
    let c1 = (p - a1.value()) % p;
    let num = a1.mul(&a2).unwrap();
    let c2 = (p - num.mul(&a4.inv().unwrap()).unwrap().value()) % p;
    (c1, c2)
}

pub(crate) fn cut_value(x: &GroupElem, c1: u64, c2: u64) -> u64 {
    let (n, p) = (x.n(), x.p());
    (c1 * x.get(n - 1, 1) + c2 * x.get(n, n - 2) + x.get(3, 1) * x.get(n - 1, 2)) % p
}

/// One defining equation of K_D(φ), with its value frozen at the
/// representative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassEq {
    Minor { root: Root, value: u64 },
    Quad { q: Quadratic, value: u64 },
    /// c1·x_{n−1,1} + c2·x_{n,n−2} + x_{3,1}·x_{n−1,2} = value.  The extra
    /// cut that isolates a single class inside the minor/quadratic locus on
    /// the branch containing both (3,2) and (n,n−1).
    Pairing { c1: u64, c2: u64, value: u64 },
}

/// The full equation system of the predicate branch for this spec.  Every
/// value is evaluated at x_D(φ), so the representative satisfies the system
/// by construction and the system's constants match the closed formulas
/// (pinned products ±Πφ, the γ-variants, and zeros).
pub fn predicate_equations(spec: &ClassSpec) -> Result<Vec<ClassEq>, ClassesError> {
    let n = spec.n();
    let d = spec.placement.roots();
    let rep = spec.rep();
    let mut eqs = Vec::new();
    let (eligible, _) = cross_sets(n, d);
    for r in eligible {
        let value = class_minor(&rep, d, r)?.value();
        eqs.push(ClassEq::Minor { root: r, value });
    }
    let mut push_quad = |q: Quadratic| {
        let value = quadratic(&rep, q).value();
        eqs.push(ClassEq::Quad { q, value });
    };
    match spec.depth {
        0 => {}
        1 => {
            let dset: Vec<Root> = d.to_vec();
            if dset.contains(&(2, 1)) && dset.contains(&(n, n - 1)) {
                push_quad(Quadratic::Gamma);
                for &(i, j) in &spec.tag.d_prime {
                    push_quad(Quadratic::Alpha(j));
                    push_quad(Quadratic::Beta1(i));
                }
            }
        }
        2 => {
            use crate::roots::Family;
            let (family, _) = spec.tag.family.clone().ok_or(ClassesError::NotRegular(2))?;
            match family {
                Family::D1 => {}
                Family::D3 => {
                    // D̄ = D minus the rows 3, n−1, n
                    let bar: Vec<Root> = d
                        .iter()
                        .copied()
                        .filter(|&(i, _)| i != 3 && i != n - 1 && i != n)
                        .collect();
                    for (i, j) in bar {
                        push_quad(Quadratic::Beta1(i));
                        push_quad(Quadratic::Alpha(j));
                    }
                    push_quad(Quadratic::Gamma1);
                }
                _ => {
                    for &(i, j) in &spec.tag.d_prime {
                        push_quad(Quadratic::Beta2(i));
                        push_quad(Quadratic::Alpha(j));
                    }
                    push_quad(Quadratic::Gamma2);
                    if family == Family::D5 {
                        // The quadratic/minor system above carves out a union
                        // of p classes on this branch: the pairs
                        // (x_{n−1,2}, x_{n,3}) with a fixed value of γ₂ all
                        // survive it.  One extra affine-plus-quadratic cut,
                        // calibrated against brute-force class enumeration,
                        // pins the single class of the representative.
                        let (c1, c2) = cut_coeffs(n, spec.p(), &spec.placement);
                        let value = cut_value(&rep, c1, c2);
                        eqs.push(ClassEq::Pairing { c1, c2, value });
                    }
                }
            }
        }
        k => return Err(ClassesError::NotRegular(k)),
    }
    Ok(eqs)
}

fn eval_eq(x: &GroupElem, d: &[Root], eq: &ClassEq) -> Result<bool, ClassesError> {
    Ok(match *eq {
        ClassEq::Minor { root, value } => class_minor(x, d, root)?.value() == value,
        ClassEq::Quad { q, value } => quadratic(x, q).value() == value,
        ClassEq::Pairing { c1, c2, value } => {
            let (n, p) = (x.n(), x.p());
            (c1 * x.get(n - 1, 1) + c2 * x.get(n, n - 2) + x.get(3, 1) * x.get(n - 1, 2)) % p
                == value
        }
    })
}

/// Whether x satisfies every defining equation of K_D(φ).
pub fn class_predicate(x: &GroupElem, spec: &ClassSpec) -> Result<bool, ClassesError> {
    let d = spec.placement.roots();
    for eq in predicate_equations(spec)? {
        if !eval_eq(x, d, &eq)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Whether x satisfies the minor and quadratic equations of K_D(φ),
/// ignoring the pairing cut.  On the branch containing both (3,2) and
/// (n,n−1) this locus is a union of p conjugacy classes, all of which lie in
/// the character support; elsewhere it coincides with `class_predicate`.
pub fn branch_predicate(x: &GroupElem, spec: &ClassSpec) -> Result<bool, ClassesError> {
    let d = spec.placement.roots();
    for eq in predicate_equations(spec)? {
        if matches!(eq, ClassEq::Pairing { .. }) {
            continue;
        }
        if !eval_eq(x, d, &eq)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The offset of the pairing invariant of x from its frozen value at the
/// representative: zero on K_D(φ) itself, and a complete invariant of the
/// other classes sharing its minor/quadratic locus.  Zero when the spec has
/// no pairing cut.
pub fn pairing_offset(x: &GroupElem, spec: &ClassSpec) -> Result<u64, ClassesError> {
    let (n, p) = (x.n(), x.p());
    for eq in predicate_equations(spec)? {
        if let ClassEq::Pairing { c1, c2, value } = eq {
            let e = (c1 * x.get(n - 1, 1) + c2 * x.get(n, n - 2) + x.get(3, 1) * x.get(n - 1, 2))
                % p;
            return Ok((e + p - value) % p);
        }
    }
    Ok(0)
}

/// A fully enumerated conjugacy class in sorted packed encoding.
#[derive(Debug, Clone)]
pub struct ClassSet {
    rep: GroupElem,
    bits: u32,
    elements: Vec<u64>,
}

/// Breadth-first closure of g under conjugation by all generators x_{r,s}(1).
pub fn enumerate_class(g: &GroupElem, max_states: u64) -> Result<ClassSet, ClassesError> {
    let (n, p) = (g.n(), g.p());
    let len = tri_len(n);
    let bits = bits_for(p);
    if bits as usize * len > 64 {
        return Err(ClassesError::Unpackable(n, p));
    }
    let gens: Vec<Root> = crate::roots::phi(n);
    let mut seen: HashSet<u64> = HashSet::new();
    let seed_key = pack(g.entries(), bits);
    seen.insert(seed_key);
    let mut frontier = vec![seed_key];
    let mut buf = vec![0u64; len];
    while let Some(key) = frontier.pop() {
        for &(r, s) in &gens {
            unpack(key, bits, &mut buf);
            conjugate_gen(&mut buf, n, p, r, s, 1);
            let nk = pack(&buf, bits);
            if seen.insert(nk) {
                if seen.len() as u64 > max_states {
                    return Err(ClassesError::TooLarge(max_states));
                }
                frontier.push(nk);
            }
        }
    }
    let mut elements: Vec<u64> = seen.into_iter().collect();
    elements.sort_unstable();
    Ok(ClassSet { rep: g.clone(), bits, elements })
}

impl ClassSet {
    pub fn rep(&self) -> &GroupElem {
        &self.rep
    }

    pub fn size(&self) -> u64 {
        self.elements.len() as u64
    }

    pub fn contains(&self, g: &GroupElem) -> bool {
        self.elements.binary_search(&pack(g.entries(), self.bits)).is_ok()
    }

    pub fn members(&self) -> impl Iterator<Item = GroupElem> + '_ {
        let (n, p) = (self.rep.n(), self.rep.p());
        let len = tri_len(n);
        self.elements.iter().map(move |&key| {
            let mut buf = vec![0u64; len];
            unpack(key, self.bits, &mut buf);
            GroupElem::from_raw(n, p, buf)
        })
    }
}

/// |C_U(g)| = p^{nullity of y ↦ yg − gy on the strictly lower triangle}.
/// The centralizer is 1 + ker of that linear map, so this is exact.
pub fn centralizer_size(g: &GroupElem) -> u128 {
    let (n, p) = (g.n(), g.p());
    let m = tri_len(n);
    // columns indexed by basis vectors e_{i,j}; rows by output coordinates
    let mut mat = vec![vec![0u64; m]; m];
    let full = |a: usize, b: usize| -> u64 {
        match a.cmp(&b) {
            std::cmp::Ordering::Greater => g.get(a, b),
            std::cmp::Ordering::Equal => 1,
            std::cmp::Ordering::Less => 0,
        }
    };
    for i in 2..=n {
        for j in 1..i {
            let col = tri_idx(i, j);
            // L(e_{i,j})_{a,b} = δ_{a,i} g_{j,b} − g_{a,i} δ_{j,b}, a > b
            for a in 2..=n {
                for b in 1..a {
                    let mut v = 0i64;
                    if a == i {
                        v += full(j, b) as i64;
                    }
                    if j == b {
                        v -= full(a, i) as i64;
                    }
                    mat[tri_idx(a, b)][col] = v.rem_euclid(p as i64) as u64;
                }
            }
        }
    }
    (p as u128).pow(nullity_mod_p(mat, p) as u32)
}

/// Group order |U| = p^{n(n−1)/2}.
pub fn group_order(n: usize, p: u64) -> u128 {
    (p as u128).pow(tri_len(n) as u32)
}

/// Exact class size via orbit–stabilizer, no enumeration.
pub fn class_size(g: &GroupElem) -> u128 {
    group_order(g.n(), g.p()) / centralizer_size(g)
}

/// Count solutions of the predicate system by depth-first assignment of the
/// matrix entries in triangular order, checking each equation as soon as all
/// of its entries are assigned.
pub fn count_predicate_solutions(
    spec: &ClassSpec,
    node_bound: u64,
) -> Result<u64, ClassesError> {
    let n = spec.n();
    let p = spec.p();
    let m = tri_len(n);
    let d = spec.placement.roots().to_vec();
    let eqs = predicate_equations(spec)?;
    // attach each equation to the last entry (in tri order) it reads
    let mut attached: Vec<Vec<ClassEq>> = vec![Vec::new(); m];
    for eq in &eqs {
        let support = eq_support(n, &d, eq);
        let last = support
            .iter()
            .map(|&(i, j)| tri_idx(i, j))
            .max()
            .unwrap_or(0);
        attached[last].push(*eq);
    }
    let mut x = GroupElem::identity(n, p).map_err(RootsError::from)?;
    let mut nodes = 0u64;
    fn dfs(
        k: usize,
        m: usize,
        p: u64,
        n: usize,
        d: &[Root],
        attached: &[Vec<ClassEq>],
        x: &mut GroupElem,
        nodes: &mut u64,
        bound: u64,
    ) -> Result<u64, ClassesError> {
        if k == m {
            return Ok(1);
        }
        let (i, j) = crate::nilmat::tri_pos(n, k);
        let mut total = 0u64;
        for v in 0..p {
            *nodes += 1;
            if *nodes > bound {
                return Err(ClassesError::SolverBound(bound));
            }
            x.set(i, j, v as i64).map_err(RootsError::from)?;
            let ok = attached[k]
                .iter()
                .map(|eq| eval_eq(x, d, eq))
                .collect::<Result<Vec<_>, _>>()?
                .into_iter()
                .all(|b| b);
            if ok {
                total += dfs(k + 1, m, p, n, d, attached, x, nodes, bound)?;
            }
        }
        x.set(i, j, 0).map_err(RootsError::from)?;
        Ok(total)
    }
    dfs(0, m, p, n, &d, &attached, &mut x, &mut nodes, node_bound)
}

/// The strictly-lower entries read by an equation.
fn eq_support(n: usize, d: &[Root], eq: &ClassEq) -> Vec<Root> {
    match *eq {
        ClassEq::Minor { root, .. } => {
            let mut chain = crate::roots::down_chain(d, root);
            chain.push(root);
            let rows: Vec<usize> = chain.iter().map(|r| r.0).collect();
            let cols: Vec<usize> = chain.iter().map(|r| r.1).collect();
            let mut out = Vec::new();
            for &i in &rows {
                for &j in &cols {
                    if i > j {
                        out.push((i, j));
                    }
                }
            }
            out
        }
        ClassEq::Quad { q, .. } => {
            let mut out = Vec::new();
            match q {
                Quadratic::Alpha(j) => {
                    for l in (j + 1)..n {
                        out.push((n, l));
                        out.push((l, j));
                    }
                }
                Quadratic::Beta1(i) => {
                    for l in 2..i {
                        out.push((i, l));
                        out.push((l, 1));
                    }
                }
                Quadratic::Beta2(i) => {
                    for l in 3..i {
                        out.push((i, l));
                        out.push((l, 2));
                    }
                }
                Quadratic::Gamma => {
                    for l in 2..n {
                        out.push((n, l));
                        out.push((l, 1));
                    }
                }
                Quadratic::Gamma1 => {
                    for k in 3..n {
                        out.push((k, 1));
                        out.push((n, k));
                    }
                }
                Quadratic::Gamma2 => {
                    for l in 3..n {
                        out.push((n, l));
                        out.push((l, 2));
                    }
                }
            }
            out.retain(|&(a, b)| a > b);
            out
        }
        ClassEq::Pairing { .. } => {
            vec![(n - 1, 1), (n, n - 2), (3, 1), (n - 1, 2)]
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub trials: u64,
    pub minor_failures: u64,
    pub quad_failures: u64,
}

impl InvarianceReport {
    pub fn all_pass(&self) -> bool {
        self.minor_failures == 0 && self.quad_failures == 0
    }
}

/// Sample class members (random conjugates of the representative) and verify
/// that every defining quantity of the active branch is conjugation-invariant
/// on the class locus.
pub fn invariance_suite(
    spec: &ClassSpec,
    trials: u64,
    rng_seed: u64,
) -> Result<InvarianceReport, ClassesError> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(rng_seed);
    let (n, p) = (spec.n(), spec.p());
    let d = spec.placement.roots().to_vec();
    let eqs = predicate_equations(spec)?;
    let mut minor_failures = 0u64;
    let mut quad_failures = 0u64;
    let random_elem = |rng: &mut rand_chacha::ChaCha8Rng| {
        let mut g = GroupElem::identity(n, p).unwrap();
        for i in 2..=n {
            for j in 1..i {
                g.set(i, j, rng.gen_range(0..p) as i64).unwrap();
            }
        }
        g
    };
    let rep = spec.rep();
    for _ in 0..trials {
        let h = random_elem(&mut rng);
        let x = rep.conjugate(&h).map_err(RootsError::from)?;
        let g = random_elem(&mut rng);
        let y = x.conjugate(&g).map_err(RootsError::from)?;
        for eq in &eqs {
            match *eq {
                ClassEq::Minor { root, .. } => {
                    if class_minor(&x, &d, root)? != class_minor(&y, &d, root)? {
                        minor_failures += 1;
                    }
                }
                ClassEq::Quad { q, .. } => {
                    if quadratic(&x, q) != quadratic(&y, q) {
                        quad_failures += 1;
                    }
                }
                ClassEq::Pairing { c1, c2, .. } => {
                    let pair = |g: &GroupElem| {
                        let (n, p) = (g.n(), g.p());
                        (c1 * g.get(n - 1, 1) + c2 * g.get(n, n - 2) + g.get(3, 1) * g.get(n - 1, 2))
                            % p
                    };
                    if pair(&x) != pair(&y) {
                        quad_failures += 1;
                    }
                }
            }
        }
    }
    Ok(InvarianceReport { trials, minor_failures, quad_failures })
}

/// CLI JSON shape for one classified class.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassReport {
    pub rep: crate::nilmat::MatrixJson,
    pub size: u64,
    #[serde(rename = "predicateMatches")]
    pub predicate_matches: bool,
    pub branch: String,
}

pub fn branch_name(tag: &RegularityTag) -> String {
    match (tag.depth, &tag.family) {
        (2, Some((f, _))) => format!("{f:?}"),
        (k, _) => format!("depth{k}"),
    }
}

/// Evaluate a single minor/quadratic value for external reporting.
pub fn minor_value(x: &GroupElem, d: &[Root], r: Root) -> Result<FieldElem, ClassesError> {
    if !class_minor_defined(d, r) {
        return Err(ClassesError::Roots(RootsError::MinorUndefined(r.0, r.1)));
    }
    Ok(class_minor(x, d, r)?)
}
