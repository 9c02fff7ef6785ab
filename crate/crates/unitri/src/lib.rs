//! Exact computations with coadjoint orbits and irreducible characters of the
//! groups U_n(F_p) of lower unitriangular matrices over a prime field.
//!
//! The crate builds up in layers:
//!
//! * [`field`] — exact arithmetic in `F_p`, `Z[zeta_p]`, and `Z[zeta_p][1/p]`;
//! * [`nilmat`] — the group, its Lie algebra, truncated `exp`/`ln`, and the
//!   coadjoint action on the dual space of strictly upper triangular forms;
//! * [`roots`] — the root poset of strictly lower positions, rook placements,
//!   canonical seed sets, chain minors, and the combinatorial exponents that
//!   appear in the closed character formulas;
//! * [`orbits`] — orbit enumeration, regularity layers, polarizations;
//! * [`classes`] — conjugacy-class representatives, the polynomial class
//!   predicates, and class enumeration;
//! * [`characters`] — four independent evaluation strategies for the same
//!   irreducible characters (orbit sum, induction from a polarization, the
//!   closed formula, and a two-step Mackey construction), kept honest against
//!   one another;
//! * [`mackey`] — the restriction/induction machinery behind the fourth
//!   strategy;
//! * [`verify`] — named self-check suites driven by the CLI.

pub mod characters;
pub mod classes;
pub mod field;
pub mod mackey;
pub mod nilmat;
pub mod orbits;
pub mod roots;
pub mod verify;
