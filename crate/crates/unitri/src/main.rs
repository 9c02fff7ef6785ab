//! Command-line front end: construct character specs, run enumerations and
//! verification suites, and emit JSON/CSV artifacts.
//!
//! Exit codes: 0 success, 2 invalid input, 3 state bound exceeded,
//! 4 verification failure.  Errors are reported on stderr as a JSON object.

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use unitri::characters::{
    method_by_name, method_registry, support_decompose, CharacterSpec, CharactersError,
};
use unitri::classes::{branch_name, ClassesError};
use unitri::field::CharValue;
use unitri::nilmat::{GroupElem, MatrixJson, NilmatError};
use unitri::orbits::{enumerate_orbit, layer_atlas, summarize_orbit, OrbitsError};
use unitri::roots::{build_canonical, canonical_tails, Placement, Root, RootsError};
use unitri::verify::{suite_by_name, SuiteConfig, VerifyError};

/// Default directory for relative --output paths.
const OUT_DIR_ENV: &str = "UNITRI_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "unitri",
    version,
    about = "Exact coadjoint-orbit and character computations for unitriangular groups"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SpecArgs {
    /// Matrix size n of U_n(F_p)
    #[arg(long)]
    n: usize,
    /// Odd prime modulus
    #[arg(long)]
    p: u64,
    /// Character depth (0, 1 or 2)
    #[arg(long)]
    depth: u8,
    /// ξ on the canonical root set, compact form "i,j=v;..."; the roots must
    /// form a canonical set (base or tail variant) for the depth.
    /// Defaults to all ones on the base variant.
    #[arg(long)]
    xi: Option<String>,
    /// Tail variant roots, compact form "i,j;i,j" (used when --xi is absent)
    #[arg(long)]
    tail: Option<String>,
}

#[derive(Args, Clone)]
struct OutArgs {
    /// Output file; relative paths resolve under $UNITRI_OUT_DIR.
    /// Defaults to stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Output format (json, or csv for `table`)
    #[arg(long, default_value = "json")]
    format: String,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate the coadjoint orbit of a canonical seed form
    Orbit {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, default_value_t = 50_000_000)]
        max_states: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Partition an invariant layer of the dual space into coadjoint orbits
    Atlas {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: u64,
        /// Layer index i of X_i (forms vanishing on the last i column roots)
        #[arg(long)]
        layer: usize,
        #[arg(long, default_value_t = 50_000_000)]
        max_states: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Evaluate one irreducible character at one element
    CharValue {
        #[command(flatten)]
        spec: SpecArgs,
        /// "identity", compact "i,j=v;..." entries of g − 1, or a JSON file
        #[arg(long)]
        element: String,
        /// kirillov | induced | closed | mackey | all
        #[arg(long, default_value = "closed")]
        method: String,
        #[arg(long, default_value_t = 50_000_000)]
        max_states: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Full character column over its support classes
    Table {
        #[command(flatten)]
        spec: SpecArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Decompose an element against the support-class catalog
    ClassifyClass {
        #[command(flatten)]
        spec: SpecArgs,
        /// "identity", compact "i,j=v;..." entries of g − 1, or a JSON file
        #[arg(long)]
        element: String,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run a named self-check suite
    Verify {
        /// polarization | orbit-equations | support | value | mackey |
        /// orthogonality | invariance
        #[arg(long)]
        suite: String,
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, default_value_t = 200)]
        trials: u64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 50_000_000)]
        max_states: u64,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Debug)]
enum CliError {
    /// exit 2
    Invalid(String),
    /// exit 3
    Bound(String),
    /// exit 4
    Verification(serde_json::Value),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Bound(_) => 3,
            CliError::Verification(_) => 4,
        }
    }

    fn object(&self) -> serde_json::Value {
        match self {
            CliError::Invalid(m) => json!({
                "error": {"exit": 2, "kind": "invalid-input", "message": m}
            }),
            CliError::Bound(m) => json!({
                "error": {"exit": 3, "kind": "bound-exceeded", "message": m}
            }),
            CliError::Verification(report) => json!({
                "error": {"exit": 4, "kind": "verification-failure",
                          "report": report}
            }),
        }
    }
}

fn classify_err(e: impl std::fmt::Display + BoundCheck) -> CliError {
    if e.is_bound() {
        CliError::Bound(e.to_string())
    } else {
        CliError::Invalid(e.to_string())
    }
}

trait BoundCheck {
    fn is_bound(&self) -> bool;
}

impl BoundCheck for OrbitsError {
    fn is_bound(&self) -> bool {
        matches!(self, OrbitsError::TooLarge(..))
    }
}

impl BoundCheck for ClassesError {
    fn is_bound(&self) -> bool {
        matches!(
            self,
            ClassesError::TooLarge(..) | ClassesError::SolverBound(..)
        )
    }
}

impl BoundCheck for CharactersError {
    fn is_bound(&self) -> bool {
        matches!(
            self,
            CharactersError::Orbits(OrbitsError::TooLarge(..))
                | CharactersError::Classes(ClassesError::TooLarge(..))
                | CharactersError::Classes(ClassesError::SolverBound(..))
        )
    }
}

impl BoundCheck for VerifyError {
    fn is_bound(&self) -> bool {
        VerifyError::is_bound(self)
    }
}

impl BoundCheck for RootsError {
    fn is_bound(&self) -> bool {
        false
    }
}

impl BoundCheck for NilmatError {
    fn is_bound(&self) -> bool {
        false
    }
}

impl SpecArgs {
    fn build(&self) -> Result<CharacterSpec, CliError> {
        let tails: Vec<Vec<Root>> = canonical_tails(self.n, self.depth);
        if let Some(xi) = &self.xi {
            let pl = Placement::parse_compact(self.n, self.p, xi).map_err(classify_err)?;
            let mut support: Vec<Root> = pl.roots().to_vec();
            support.sort_unstable();
            for tail in &tails {
                let canon = build_canonical(self.n, self.depth, tail).map_err(classify_err)?;
                let mut sorted = canon.clone();
                sorted.sort_unstable();
                if sorted == support {
                    let vals: Vec<i64> = canon
                        .iter()
                        .map(|&r| pl.value(r).unwrap() as i64)
                        .collect();
                    return CharacterSpec::from_values(self.n, self.p, self.depth, tail, &vals)
                        .map_err(classify_err);
                }
            }
            return Err(CliError::Invalid(format!(
                "--xi support {support:?} is not a canonical depth-{} set for n = {}",
                self.depth, self.n
            )));
        }
        let tail = match &self.tail {
            None => Vec::new(),
            Some(s) => parse_roots(s)?,
        };
        let canon = build_canonical(self.n, self.depth, &tail).map_err(classify_err)?;
        CharacterSpec::from_values(self.n, self.p, self.depth, &tail, &vec![1; canon.len()])
            .map_err(classify_err)
    }
}

fn parse_roots(s: &str) -> Result<Vec<Root>, CliError> {
    s.split(';')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            let mut it = t.split(',');
            let bad = || CliError::Invalid(format!("bad root {t:?}, expected \"i,j\""));
            let i = it.next().ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
            let j = it.next().ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
            if it.next().is_some() {
                return Err(bad());
            }
            Ok((i, j))
        })
        .collect()
}

/// "identity", compact "i,j=v;..." (entries of g − 1), or a JSON file path.
fn parse_element(n: usize, p: u64, s: &str) -> Result<GroupElem, CliError> {
    if s == "identity" {
        return GroupElem::identity(n, p).map_err(classify_err);
    }
    if s.contains('=') {
        let pl = Placement::parse_compact(n, p, s).map_err(classify_err)?;
        let mut g = GroupElem::identity(n, p).map_err(classify_err)?;
        for ((i, j), v) in pl.pairs() {
            g.set(i, j, v as i64).map_err(classify_err)?;
        }
        return Ok(g);
    }
    let text = std::fs::read_to_string(s)
        .map_err(|e| CliError::Invalid(format!("cannot read element file {s:?}: {e}")))?;
    let mj: MatrixJson = serde_json::from_str(&text)
        .map_err(|e| CliError::Invalid(format!("bad element JSON in {s:?}: {e}")))?;
    GroupElem::from_json(&mj).map_err(classify_err)
}

fn value_json(v: &CharValue) -> serde_json::Value {
    let (re, im) = v.to_complex();
    json!({
        "coeffs": v.num.coeffs(),
        "denomExp": v.denom_exp,
        // non-authoritative rendering for humans; the coefficients are exact
        "approx": {"re": format!("{re:.15e}"), "im": format!("{im:.15e}")},
    })
}

fn emit(out: &OutArgs, text: String) -> Result<(), CliError> {
    match &out.output {
        None => {
            println!("{text}");
            Ok(())
        }
        Some(path) => {
            let path = if path.is_relative() {
                match std::env::var_os(OUT_DIR_ENV) {
                    Some(dir) => PathBuf::from(dir).join(path),
                    None => path.clone(),
                }
            } else {
                path.clone()
            };
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent).map_err(|e| {
                        CliError::Invalid(format!("cannot create {parent:?}: {e}"))
                    })?;
                }
            }
            std::fs::write(&path, text.as_bytes())
                .map_err(|e| CliError::Invalid(format!("cannot write {path:?}: {e}")))
        }
    }
}

fn require_json(out: &OutArgs) -> Result<(), CliError> {
    if out.format != "json" {
        return Err(CliError::Invalid(format!(
            "format {:?} is not supported for this command (use json)",
            out.format
        )));
    }
    Ok(())
}

fn pretty(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("serializable")
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Orbit { spec, max_states, out } => {
            require_json(&out)?;
            let spec = spec.build()?;
            let orb = enumerate_orbit(&spec.seed_form(), max_states).map_err(classify_err)?;
            let summary = summarize_orbit(&orb);
            emit(&out, pretty(&serde_json::to_value(&summary).unwrap()))
        }
        Command::Atlas { n, p, layer, max_states, out } => {
            require_json(&out)?;
            if !unitri::field::is_odd_prime(p) || n < 2 || layer >= n {
                return Err(CliError::Invalid(format!(
                    "need an odd prime p and 0 <= layer < n (got n = {n}, p = {p}, layer = {layer})"
                )));
            }
            let report = layer_atlas(n, p, layer, max_states).map_err(classify_err)?;
            emit(&out, pretty(&serde_json::to_value(&report).unwrap()))
        }
        Command::CharValue { spec, element, method, max_states, out } => {
            require_json(&out)?;
            let spec = spec.build()?;
            let g = parse_element(spec.n, spec.p, &element)?;
            let mut values = serde_json::Map::new();
            if method == "all" {
                for m in method_registry() {
                    let v = m.value(&spec, &g, max_states).map_err(classify_err)?;
                    values.insert(m.name().to_string(), value_json(&v));
                }
            } else {
                let m = method_by_name(&method).map_err(classify_err)?;
                let v = m.value(&spec, &g, max_states).map_err(classify_err)?;
                values.insert(m.name().to_string(), value_json(&v));
            }
            let doc = json!({
                "n": spec.n, "p": spec.p, "depth": spec.depth,
                "element": g.to_json(),
                "values": values,
            });
            emit(&out, pretty(&doc))
        }
        Command::Table { spec, out } => {
            let spec = spec.build()?;
            let rows = unitri::characters::char_table(&spec).map_err(classify_err)?;
            match out.format.as_str() {
                "json" => {
                    let rows: Vec<serde_json::Value> = rows
                        .iter()
                        .map(|r| {
                            json!({
                                "label": r.label,
                                "classSize": r.class_size.to_string(),
                                "value": value_json(&r.value),
                            })
                        })
                        .collect();
                    let doc = json!({
                        "n": spec.n, "p": spec.p, "depth": spec.depth,
                        "rows": rows,
                    });
                    emit(&out, pretty(&doc))
                }
                "csv" => {
                    let mut text = String::new();
                    // exact cyclotomic coefficients, then a non-authoritative
                    // complex rendering
                    text.push_str("label,class_size,denom_exp,coeffs,approx_re,approx_im\n");
                    for r in rows {
                        let (re, im) = r.value.to_complex();
                        let coeffs = r
                            .value
                            .num
                            .coeffs()
                            .iter()
                            .map(|c| c.to_string())
                            .collect::<Vec<_>>()
                            .join(" ");
                        text.push_str(&format!(
                            "\"{}\",{},{},\"{}\",{:.15e},{:.15e}\n",
                            r.label, r.class_size, r.value.denom_exp, coeffs, re, im
                        ));
                    }
                    emit(&out, text)
                }
                other => Err(CliError::Invalid(format!(
                    "unknown format {other:?} (json or csv)"
                ))),
            }
        }
        Command::ClassifyClass { spec, element, out } => {
            require_json(&out)?;
            let spec = spec.build()?;
            let g = parse_element(spec.n, spec.p, &element)?;
            let doc = match support_decompose(&spec, &g).map_err(classify_err)? {
                None => json!({"inSupport": false}),
                Some(data) => json!({
                    "inSupport": true,
                    "class": {
                        "placement": data.class.placement.to_json(),
                        "depth": data.class.depth,
                        "branch": branch_name(&data.class.tag),
                        "cut": data.class.cut,
                    },
                    "thetaArg": data.theta_arg,
                    "m": data.m,
                }),
            };
            emit(&out, pretty(&doc))
        }
        Command::Verify { suite, spec, trials, seed, max_states, out } => {
            require_json(&out)?;
            // build the spec first so bad parameters exit 2, not 4
            let built = spec.build()?;
            let cfg = SuiteConfig {
                n: built.n,
                p: built.p,
                depth: built.depth,
                tail: built.tail.clone(),
                xi: Some(built.xi.pairs().map(|(_, v)| v as i64).collect()),
                trials,
                seed,
                max_states,
            };
            let s = suite_by_name(&suite).map_err(classify_err)?;
            let report = s.run(&cfg).map_err(classify_err)?;
            let doc = serde_json::to_value(&report).unwrap();
            emit(&out, pretty(&doc))?;
            if report.passed() {
                Ok(())
            } else {
                Err(CliError::Verification(doc))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let mut stderr = std::io::stderr();
            let _ = writeln!(stderr, "{}", pretty(&e.object()));
            ExitCode::from(e.exit_code())
        }
    }
}
