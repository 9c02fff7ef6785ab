//! Named self-check suites.
//!
//! Each suite cross-validates one layer of the computation against an
//! independent oracle (brute-force enumeration, a second evaluation strategy,
//! or an exact counting identity) and reports the first counterexample it
//! finds.  Suites are looked up by name so the CLI and the acceptance tests
//! drive exactly the same code.

use crate::characters::{
    cached_orbit, closed_value, kirillov_value_with_orbit, norm_sum, support_decompose,
    CharacterSpec, CharactersError,
};
use crate::classes::{
    class_predicate, count_predicate_solutions, enumerate_class, invariance_suite, ClassSpec,
    ClassesError,
};
use crate::field::CharValue;
use crate::nilmat::GroupElem;
use crate::orbits::{
    enumerate_orbit, orbit_equations_check, polarization_for, verify_polarization, OrbitsError,
};
use crate::roots::{
    build_canonical, canonical_tails, k_regular_sets, two_regular_sets, Placement, Root,
    RootsError,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("unknown suite {0:?}")]
    UnknownSuite(String),
    #[error(transparent)]
    Characters(#[from] CharactersError),
    #[error(transparent)]
    Classes(#[from] ClassesError),
    #[error(transparent)]
    Orbits(#[from] OrbitsError),
    #[error(transparent)]
    Roots(#[from] RootsError),
}

impl VerifyError {
    /// True when the failure is a state-bound exceedance rather than an
    /// invalid request or a verification failure.
    pub fn is_bound(&self) -> bool {
        matches!(
            self,
            VerifyError::Orbits(OrbitsError::TooLarge(..))
                | VerifyError::Classes(ClassesError::TooLarge(..))
                | VerifyError::Classes(ClassesError::SolverBound(..))
                | VerifyError::Characters(CharactersError::Orbits(OrbitsError::TooLarge(..)))
                | VerifyError::Characters(CharactersError::Classes(ClassesError::TooLarge(..)))
        )
    }
}

/// Parameters shared by every suite.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub n: usize,
    pub p: u64,
    pub depth: u8,
    /// Tail roots of the canonical set (the R-variant); empty = base variant.
    pub tail: Vec<Root>,
    /// ξ values on the canonical set; `None` = all ones.
    pub xi: Option<Vec<i64>>,
    pub trials: u64,
    pub seed: u64,
    pub max_states: u64,
}

impl SuiteConfig {
    pub fn new(n: usize, p: u64, depth: u8) -> Self {
        SuiteConfig {
            n,
            p,
            depth,
            tail: Vec::new(),
            xi: None,
            trials: 200,
            seed: 7,
            max_states: 50_000_000,
        }
    }

    pub fn spec(&self) -> Result<CharacterSpec, VerifyError> {
        let canon = build_canonical(self.n, self.depth, &self.tail)?;
        let vals = match &self.xi {
            Some(v) => v.clone(),
            None => vec![1i64; canon.len()],
        };
        Ok(CharacterSpec::from_values(self.n, self.p, self.depth, &self.tail, &vals)?)
    }
}

/// Outcome of one suite run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: u64,
    pub failures: u64,
    pub counterexample: Option<String>,
}

impl SuiteReport {
    fn new(suite: &str) -> Self {
        SuiteReport {
            suite: suite.to_string(),
            checks: 0,
            failures: 0,
            counterexample: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0 && self.checks > 0
    }

    fn record(&mut self, ok: bool, witness: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures += 1;
            if self.counterexample.is_none() {
                self.counterexample = Some(witness());
            }
        }
    }
}

pub trait VerifySuite: Send + Sync {
    fn name(&self) -> &'static str;
    fn run(&self, cfg: &SuiteConfig) -> Result<SuiteReport, VerifyError>;
}

/// All catalog labels (D, φ) at the configured depth with φ-entries drawn
/// from {1, 2}, truncated to `limit` entries.
fn catalog_labels(
    n: usize,
    p: u64,
    depth: u8,
    limit: usize,
) -> Result<Vec<ClassSpec>, VerifyError> {
    let sets: Vec<Vec<Root>> = match depth {
        2 => two_regular_sets(n).into_iter().map(|(d, _)| d).collect(),
        k => k_regular_sets(n, k),
    };
    let mut out = Vec::new();
    for d in sets {
        for mask in 0u32..(1 << d.len()) {
            let pairs: Vec<(Root, i64)> = d
                .iter()
                .enumerate()
                .map(|(k, &r)| (r, if mask >> k & 1 == 1 { 2 } else { 1 }))
                .collect();
            let pl = Placement::new(n, p, &pairs)?;
            out.push(ClassSpec::new(pl, depth)?);
            if out.len() >= limit {
                return Ok(out);
            }
        }
    }
    Ok(out)
}

fn random_xi(rng: &mut ChaCha8Rng, p: u64, len: usize) -> Vec<i64> {
    (0..len).map(|_| rng.gen_range(1..p) as i64).collect()
}

fn random_elem(rng: &mut ChaCha8Rng, n: usize, p: u64) -> GroupElem {
    let mut g = GroupElem::identity(n, p).unwrap();
    for i in 2..=n {
        for j in 1..i {
            g.set(i, j, rng.gen_range(0..p) as i64).unwrap();
        }
    }
    g
}

/// Canonical polarizations: the four defining checks at the configured depth
/// for random ξ.
struct PolarizationSuite;

impl VerifySuite for PolarizationSuite {
    fn name(&self) -> &'static str {
        "polarization"
    }

    fn run(&self, cfg: &SuiteConfig) -> Result<SuiteReport, VerifyError> {
        let mut rep = SuiteReport::new(self.name());
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let pol = polarization_for(cfg.n, cfg.p, cfg.depth)?;
        let canon = build_canonical(cfg.n, cfg.depth, &cfg.tail)?;
        let rounds = cfg.trials.clamp(1, 50);
        for _ in 0..rounds {
            let vals = random_xi(&mut rng, cfg.p, canon.len());
            let spec =
                CharacterSpec::from_values(cfg.n, cfg.p, cfg.depth, &cfg.tail, &vals)?;
            let lam = spec.seed_form();
            let report = verify_polarization(&pol, &lam, cfg.max_states)?;
            rep.record(report.all_pass(), || format!("xi {vals:?}: {report:?}"));
        }
        Ok(rep)
    }
}

/// Orbit sizes and Δ/γ defining equations for the canonical seeds.
struct OrbitEquationsSuite;

impl VerifySuite for OrbitEquationsSuite {
    fn name(&self) -> &'static str {
        "orbit-equations"
    }

    fn run(&self, cfg: &SuiteConfig) -> Result<SuiteReport, VerifyError> {
        let mut rep = SuiteReport::new(self.name());
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let canon = build_canonical(cfg.n, cfg.depth, &cfg.tail)?;
        let rounds = cfg.trials.clamp(1, 10);
        for _ in 0..rounds {
            let vals = random_xi(&mut rng, cfg.p, canon.len());
            let pairs: Vec<(Root, i64)> =
                canon.iter().copied().zip(vals.iter().copied()).collect();
            let seed = Placement::new(cfg.n, cfg.p, &pairs)?;
            let orb = enumerate_orbit(&seed.form(), cfg.max_states)?;
            let expect_dim = crate::orbits::max_orbit_dim(cfg.n) - 2 * cfg.depth as usize;
            rep.record(orb.dim() == expect_dim, || {
                format!("xi {vals:?}: orbit dim {} != {expect_dim}", orb.dim())
            });
            // Exhaust the dual space only while it is small; beyond that,
            // seeded sampling checks that solutions stay inside the orbit.
            let bound = cfg.max_states.min(2_000_000);
            let eq = orbit_equations_check(&orb, &seed, cfg.depth, bound, 2_000)?;
            // The Δ/γ system cuts out the orbit exactly at depths 0 and 1;
            // at depth 2 the minors are necessary conditions only.
            let ok = if cfg.depth <= 1 {
                eq.orbit_points_satisfy && eq.solutions_equal_orbit
            } else {
                eq.orbit_points_satisfy
            };
            rep.record(ok, || format!("xi {vals:?}: {eq:?}"));
        }
        Ok(rep)
    }
}

/// Conjugacy class of x_D(φ) = the polynomial predicate locus, as sets.
struct SupportSuite;

impl VerifySuite for SupportSuite {
    fn name(&self) -> &'static str {
        "support"
    }

    fn run(&self, cfg: &SuiteConfig) -> Result<SuiteReport, VerifyError> {
        let mut rep = SuiteReport::new(self.name());
        let labels = catalog_labels(cfg.n, cfg.p, cfg.depth, cfg.trials.max(1) as usize)?;
        for spec in labels {
            let cls = enumerate_class(&spec.rep(), cfg.max_states)?;
            let count = count_predicate_solutions(&spec, cfg.max_states)?;
            let mut ok = cls.size() == count;
            if ok {
                ok = cls
                    .members()
                    .map(|m| class_predicate(&m, &spec))
                    .collect::<Result<Vec<_>, _>>()?
                    .into_iter()
                    .all(|b| b);
            }
            rep.record(ok, || {
                format!(
                    "D,phi {:?}: |class| = {}, predicate count = {count}",
                    spec.placement.pairs().collect::<Vec<_>>(),
                    cls.size()
                )
            });
        }
        Ok(rep)
    }
}

/// Closed formula = orbit sum on every catalog representative, and the orbit
/// sum vanishes wherever the support decomposition finds nothing.
struct ValueSuite;

impl VerifySuite for ValueSuite {
    fn name(&self) -> &'static str {
        "value"
    }

    fn run(&self, cfg: &SuiteConfig) -> Result<SuiteReport, VerifyError> {
        let mut rep = SuiteReport::new(self.name());
        let spec = cfg.spec()?;
        let orb = cached_orbit(&spec, cfg.max_states)?;
        let labels = catalog_labels(cfg.n, cfg.p, cfg.depth, cfg.trials.max(1) as usize)?;
        for class in labels {
            let g = class.rep();
            let kv = kirillov_value_with_orbit(&orb, &g)?;
            let cv = closed_value(&spec, &g)?;
            rep.record(kv == cv, || {
                format!(
                    "rep of {:?}: kirillov {kv:?} != closed {cv:?}",
                    class.placement.pairs().collect::<Vec<_>>()
                )
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        for _ in 0..cfg.trials {
            let g = random_elem(&mut rng, cfg.n, cfg.p);
            if support_decompose(&spec, &g)?.is_some() {
                continue;
            }
            let kv = kirillov_value_with_orbit(&orb, &g)?;
            rep.record(kv.is_zero(), || {
                format!("off-support g {:?}: kirillov {kv:?}", g.entries())
            });
        }
        Ok(rep)
    }
}

/// The two-step induced construction agrees with the orbit sum and the
/// closed formula on catalog representatives and on random elements.
struct MackeySuite;

impl VerifySuite for MackeySuite {
    fn name(&self) -> &'static str {
        "mackey"
    }

    fn run(&self, cfg: &SuiteConfig) -> Result<SuiteReport, VerifyError> {
        let mut rep = SuiteReport::new(self.name());
        let spec = cfg.spec()?;
        let orb = cached_orbit(&spec, cfg.max_states)?;
        let labels = catalog_labels(cfg.n, cfg.p, cfg.depth, 40)?;
        let mut points: Vec<GroupElem> = labels.iter().map(|c| c.rep()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        for _ in 0..cfg.trials.clamp(1, 20) {
            points.push(random_elem(&mut rng, cfg.n, cfg.p));
        }
        for g in points {
            let kv = kirillov_value_with_orbit(&orb, &g)?;
            let mv = crate::mackey::chi_kappa_psi(&spec, &g, cfg.max_states)?;
            rep.record(kv == mv, || {
                format!("g {:?}: kirillov {kv:?} != mackey {mv:?}", g.entries())
            });
        }
        Ok(rep)
    }
}

/// ⟨χ,χ⟩ = 1 as the exact counting identity Σ|K|·q^{2m} = |U|.
struct OrthogonalitySuite;

impl VerifySuite for OrthogonalitySuite {
    fn name(&self) -> &'static str {
        "orthogonality"
    }

    fn run(&self, cfg: &SuiteConfig) -> Result<SuiteReport, VerifyError> {
        let mut rep = SuiteReport::new(self.name());
        for tail in canonical_tails(cfg.n, cfg.depth) {
            let mut c = cfg.clone();
            c.tail = tail.clone();
            if c.xi.is_some()
                && c.xi.as_ref().unwrap().len()
                    != build_canonical(cfg.n, cfg.depth, &tail)?.len()
            {
                c.xi = None;
            }
            let spec = c.spec()?;
            let (total, order) = norm_sum(&spec)?;
            rep.record(total == order, || {
                format!("tail {tail:?}: sum {total} != group order {order}")
            });
        }
        Ok(rep)
    }
}

/// Conjugation invariance of every minor/quadratic in the predicate systems.
struct InvarianceSuite;

impl VerifySuite for InvarianceSuite {
    fn name(&self) -> &'static str {
        "invariance"
    }

    fn run(&self, cfg: &SuiteConfig) -> Result<SuiteReport, VerifyError> {
        let mut rep = SuiteReport::new(self.name());
        let labels = catalog_labels(cfg.n, cfg.p, cfg.depth, 60)?;
        let per_label = (cfg.trials / labels.len().max(1) as u64).max(5);
        for spec in labels {
            let report = invariance_suite(&spec, per_label, cfg.seed)?;
            rep.record(report.all_pass(), || {
                format!(
                    "D,phi {:?}: {report:?}",
                    spec.placement.pairs().collect::<Vec<_>>()
                )
            });
        }
        Ok(rep)
    }
}

pub fn suite_registry() -> Vec<Box<dyn VerifySuite>> {
    vec![
        Box::new(PolarizationSuite),
        Box::new(OrbitEquationsSuite),
        Box::new(SupportSuite),
        Box::new(ValueSuite),
        Box::new(MackeySuite),
        Box::new(OrthogonalitySuite),
        Box::new(InvarianceSuite),
    ]
}

pub fn suite_by_name(name: &str) -> Result<Box<dyn VerifySuite>, VerifyError> {
    suite_registry()
        .into_iter()
        .find(|s| s.name() == name)
        .ok_or_else(|| VerifyError::UnknownSuite(name.to_string()))
}

/// Convenience used by tests: run one suite with default bounds.
pub fn run_suite(
    name: &str,
    n: usize,
    p: u64,
    depth: u8,
) -> Result<SuiteReport, VerifyError> {
    suite_by_name(name)?.run(&SuiteConfig::new(n, p, depth))
}

#[allow(unused)]
fn _char_value_debug(v: &CharValue) -> String {
    format!("{v:?}")
}
