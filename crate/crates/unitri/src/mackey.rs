//! Little-group evaluation of the canonical characters.
//!
//! U factors as U′⋊Ũ, where U′ is the abelian column-1 subgroup and Ũ the
//! unitriangular group on indices 2..n.  A linear character κ of U′ reads off
//! one column-1 entry; its stabilizer Ũ^κ splits as V × F̃ with V a copy of
//! U_{n−2}, and the canonical character is induced from κ ⊗ ψ where ψ
//! restricts to a smaller canonical character ψ̃ on V.  The value at x is the
//! transversal sum
//!
//!   χ(x) = Σ over t ∈ T with x^t ∈ U′Ũ^κ of κ(x^t_{U′})·ψ(x^t_{Ũ^κ}),
//!
//! with T a set of row exponentials and x^t = t⁻¹xt.

use crate::characters::{cached_orbit, kirillov_value_with_orbit, CharacterSpec, CharactersError};
use crate::field::{theta, CharValue, CycValue, FieldElem};
use crate::nilmat::{conjugate_gen, GroupElem};
use crate::roots::{Placement, Root};

/// The column-1 split x = a·b with a ∈ U′ and b carrying no column-1 entry.
pub fn project(x: &GroupElem) -> (Vec<u64>, GroupElem) {
    let n = x.n();
    let mut col1 = vec![0u64; n + 1];
    let mut b = x.clone();
    for i in 2..=n {
        col1[i] = x.get(i, 1);
        b.set(i, 1, 0).unwrap();
    }
    (col1, b)
}

/// The column-1 row index read by κ: n at depth 0, n−1 at depths 1 and 2.
pub fn kappa_row(n: usize, depth: u8) -> usize {
    if depth == 0 {
        n
    } else {
        n - 1
    }
}

/// Index set of the U_{n−2} copy V inside Ũ^κ, in increasing V-order.
pub fn little_indices(n: usize, depth: u8) -> Vec<usize> {
    if depth == 0 {
        (2..=n - 1).collect()
    } else {
        let mut v: Vec<usize> = (2..=n - 2).collect();
        v.push(n);
        v
    }
}

/// Extract the V-component of an element of Ũ^κ as a U_{n−2} element.
pub fn little_component(x: &GroupElem, depth: u8) -> Result<GroupElem, CharactersError> {
    let n = x.n();
    let idx = little_indices(n, depth);
    let mut v = GroupElem::identity(n - 2, x.p())?;
    for (bi, &i) in idx.iter().enumerate() {
        for (bj, &j) in idx.iter().enumerate().take(bi) {
            v.set(bi + 1, bj + 1, x.get(i, j) as i64)?;
        }
    }
    Ok(v)
}

/// The canonical spec of ψ̃ on U_{n−2}: depth 0 restricts to depth 0, depths
/// 1 and 2 restrict to depths 0 and 1, with the (n,n−2) tail descending.
pub fn little_spec(spec: &CharacterSpec) -> Result<CharacterSpec, CharactersError> {
    let n = spec.n;
    let idx = little_indices(n, spec.depth);
    let little_depth = match spec.depth {
        0 => 0,
        1 => 0,
        _ => 1,
    };
    let mut tail: Vec<Root> = Vec::new();
    if spec.depth == 2 && spec.tail.contains(&(n, n - 2)) {
        tail.push((n - 2, n - 3));
    }
    let d_small = crate::roots::build_canonical(n - 2, little_depth, &tail)
        .map_err(|_| CharactersError::BadSpec(little_depth, n - 2))?;
    // pull each small root back through ρ to read off its ξ value
    let mut pairs: Vec<(Root, i64)> = Vec::new();
    for &(i, j) in &d_small {
        let big = (idx[i - 1], idx[j - 1]);
        let v = spec
            .xi
            .value(big)
            .ok_or(CharactersError::BadSpec(spec.depth, n))?;
        pairs.push(((i, j), v as i64));
    }
    let xi = Placement::new(n - 2, spec.p, &pairs)?;
    CharacterSpec::new(n - 2, spec.p, little_depth, &tail, xi)
}

/// Closed-form conjugation x ↦ x^t by a commuting row exponential
/// t = 1 + Σ_j c_j e_{r,j}, via the generator update rules.
pub fn conjugate_by_row(x: &GroupElem, r: usize, coords: &[(usize, u64)]) -> GroupElem {
    let n = x.n();
    let p = x.p();
    let mut e = x.entries().to_vec();
    for &(j, c) in coords {
        conjugate_gen(&mut e, n, p, r, j, c);
    }
    GroupElem::from_raw(n, p, e)
}

/// x^t ∈ U′Ũ^κ: the κ-row entries outside columns 1 and the V-block vanish.
fn in_induced_domain(x: &GroupElem, depth: u8) -> bool {
    let n = x.n();
    let r = kappa_row(n, depth);
    let top = if depth == 0 { n - 1 } else { n - 2 };
    (2..=top).all(|j| x.get(r, j) == 0)
}

/// The transversal-sum value of the induced character at x.
pub fn chi_kappa_psi(
    spec: &CharacterSpec,
    g: &GroupElem,
    max_states: u64,
) -> Result<CharValue, CharactersError> {
    let n = spec.n;
    let p = spec.p;
    let depth = spec.depth;
    let r = kappa_row(n, depth);
    let xi_kappa = spec.xi_at((r, 1));
    let xi_edge = if depth == 0 { 0 } else { spec.xi_at((n, n - 1)) };
    let small = little_spec(spec)?;
    let orb = cached_orbit(&small, max_states)?;
    let denom = (orb.dim() / 2) as u32;

    let cols: Vec<usize> = (2..=if depth == 0 { n - 1 } else { n - 2 }).collect();
    let mut coords = vec![0u64; cols.len()];
    let mut acc = CycValue::zero(p);
    loop {
        let pairs: Vec<(usize, u64)> =
            cols.iter().copied().zip(coords.iter().copied()).collect();
        let xt = conjugate_by_row(g, r, &pairs);
        if in_induced_domain(&xt, depth) {
            let (col1, b) = project(&xt);
            let kappa = theta(FieldElem::new(p, (xi_kappa * col1[r] % p) as i64).unwrap());
            let edge = theta(FieldElem::new(p, (xi_edge * b.get(n, n - 1) % p) as i64).unwrap());
            let v = little_component(&b, depth)?;
            let psi = kirillov_value_with_orbit(&orb, &v)?;
            debug_assert_eq!(psi.denom_exp, denom);
            let term = kappa.mul(&edge).unwrap().mul(&psi.num).unwrap();
            acc = acc.add(&term).unwrap();
        }
        let mut k = 0;
        while k < coords.len() {
            coords[k] += 1;
            if coords[k] < p {
                break;
            }
            coords[k] = 0;
            k += 1;
        }
        if k == coords.len() {
            break;
        }
    }
    Ok(CharValue::new(acc, denom))
}
