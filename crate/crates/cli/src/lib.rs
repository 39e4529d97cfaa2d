//! Command-line front end: one verb per library operation, JSON in and out.
//!
//! Successful results print `{"schema": "1", "result": …}` and exit 0. Domain
//! errors print `{"schema": "1", "error": {"code", "message"}}` and exit 1.
//! Malformed input or arguments exit 2.

use std::io::{self, Read};
use std::path::PathBuf;

use cartan_core::curves::{
    automorphism_group, classify_structures, is_conjugate, moduli_coordinate, schwarzian_exact,
    schwarzian_fd, verify_equivariance, CurveDescriptor, DevFamily, ModelGeometry, StructureSpec,
    DEFAULT_SCHWARZIAN_STEP,
};
use cartan_core::lattice::{
    grains_enumerate, is_grain, is_sublattice, reduce_basis, Lattice, MultGroup, DEFAULT_EXP_BOUND,
};
use cartan_core::lifts::{
    classify_surface, finite_orbits, is_trivial_bundle, lift, lifted_automorphisms,
    orbit_structure, parallel_sections, parse_surface_input, rep_class, GeneratorAction,
    RepresentationSpec, DEFAULT_BRANCH_BOUND,
};
use cartan_core::moebius::{Moebius, SpherePoint};
use cartan_core::subgroup::{centralizer, normalizer, recognize, DEFAULT_CAP};
use cartan_core::{Error, Scalar, Tolerance};
use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub const SCHEMA: &str = "1";

#[derive(Parser, Debug)]
#[command(
    name = "cartan",
    version,
    about = "Locally homogeneous curve structures and their lifts"
)]
pub struct Cli {
    #[command(subcommand)]
    pub verb: Verb,
    /// Comparison tolerance for floating values.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,
    /// Cap on enumerated group elements.
    #[arg(long, global = true, default_value_t = DEFAULT_CAP, value_parser = clap::builder::RangedU64ValueParser::<usize>::new().range(1..))]
    pub cap: usize,
    /// Bound on exponents in multiplicative-group membership searches.
    #[arg(long, global = true, default_value_t = DEFAULT_EXP_BOUND, value_parser = clap::value_parser!(u32).range(1..))]
    pub exp_bound: u32,
    /// Bound on logarithm branches in bundle triviality searches.
    #[arg(long, global = true, default_value_t = DEFAULT_BRANCH_BOUND, value_parser = clap::value_parser!(u32).range(1..))]
    pub branch_bound: u32,
    /// Seed for sampled checks.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Sample count for `verify`.
    #[arg(long, global = true, default_value_t = 100, value_parser = clap::builder::RangedU64ValueParser::<usize>::new().range(1..))]
    pub samples: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Input JSON file; standard input when absent.
    #[arg(long = "in", global = true)]
    pub input: Option<PathBuf>,
    /// Run batch entries concurrently.
    #[arg(long, global = true)]
    pub parallel: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Verb {
    Recognize,
    Centralizer,
    Normalizer,
    LatticeReduce,
    Symmetry,
    Sublattice,
    Grain,
    Grains,
    Build,
    Verify,
    Classify,
    Moduli,
    Conjugate,
    Aut,
    Schwarzian,
    RepClass,
    BundleTrivial,
    Sections,
    Orbits,
    Lift,
    LiftAut,
    ClassifySurface {
        #[arg(long)]
        kind: Option<String>,
        #[arg(long)]
        name: Option<String>,
    },
    Batch,
}

impl Verb {
    fn from_name(name: &str) -> Option<Verb> {
        Some(match name {
            "recognize" => Verb::Recognize,
            "centralizer" => Verb::Centralizer,
            "normalizer" => Verb::Normalizer,
            "lattice-reduce" => Verb::LatticeReduce,
            "symmetry" => Verb::Symmetry,
            "sublattice" => Verb::Sublattice,
            "grain" => Verb::Grain,
            "grains" => Verb::Grains,
            "build" => Verb::Build,
            "verify" => Verb::Verify,
            "classify" => Verb::Classify,
            "moduli" => Verb::Moduli,
            "conjugate" => Verb::Conjugate,
            "aut" => Verb::Aut,
            "schwarzian" => Verb::Schwarzian,
            "rep-class" => Verb::RepClass,
            "bundle-trivial" => Verb::BundleTrivial,
            "sections" => Verb::Sections,
            "orbits" => Verb::Orbits,
            "lift" => Verb::Lift,
            "lift-aut" => Verb::LiftAut,
            "classify-surface" => Verb::ClassifySurface {
                kind: None,
                name: None,
            },
            _ => return None,
        })
    }
}

/// Settings shared by every verb.
#[derive(Clone, Copy, Debug)]
pub struct CommandConfig {
    pub tol: Tolerance,
    pub cap: usize,
    pub exp_bound: u32,
    pub branch_bound: u32,
    pub seed: u64,
    pub samples: usize,
}

impl Default for CommandConfig {
    fn default() -> Self {
        Self {
            tol: Tolerance::default(),
            cap: DEFAULT_CAP,
            exp_bound: DEFAULT_EXP_BOUND,
            branch_bound: DEFAULT_BRANCH_BOUND,
            seed: 0,
            samples: 100,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Domain(#[from] Error),
    #[error("malformed input: {0}")]
    Malformed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Domain(_) => 1,
            CliError::Malformed(_) => 2,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            CliError::Domain(e) => json!({"code": e.code(), "message": e.to_string()}),
            CliError::Malformed(m) => json!({"code": "malformed_input", "message": m}),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn parse<T: DeserializeOwned>(input: Value) -> CliResult<T> {
    serde_json::from_value(input).map_err(|e| CliError::Malformed(e.to_string()))
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("results serialize")
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Generators {
    generators: Vec<Moebius>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Periods {
    periods: [Scalar; 2],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SublatticeQuery {
    sub: Lattice,
    lattice: Lattice,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GrainQuery {
    c: Scalar,
    lattice: Lattice,
    group: MultGroup,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GrainsQuery {
    lattice: Lattice,
    a_prime: Lattice,
    height: u32,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassifyQuery {
    model: ModelGeometry,
    curve: CurveDescriptor,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PairQuery {
    first: StructureSpec,
    second: StructureSpec,
}

// flatten and deny_unknown_fields do not combine in serde
#[derive(Deserialize)]
struct SchwarzianQuery {
    #[serde(flatten)]
    family: DevFamily,
    /// Möbius map applied after the developing map.
    #[serde(default)]
    post: Option<Moebius>,
    z: Scalar,
    #[serde(default)]
    step: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OrbitQuery {
    rep: RepresentationSpec,
    #[serde(default)]
    point: Option<SpherePoint>,
    #[serde(default)]
    structure: Option<StructureSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LiftQuery {
    structure: StructureSpec,
    rep: RepresentationSpec,
    #[serde(default)]
    actions: Vec<GeneratorAction>,
}

fn apply_post(post: &Option<Moebius>, v: Complex64) -> Complex64 {
    match post {
        None => v,
        Some(m) => {
            let [a, b, c, d] = m.to_c64();
            (a * v + b) / (c * v + d)
        }
    }
}

/// Runs one verb on a parsed JSON input.
pub fn execute(verb: &Verb, input: Value, cfg: &CommandConfig) -> CliResult<Value> {
    let tol = cfg.tol;
    Ok(match verb {
        Verb::Recognize => to_value(&recognize(
            &parse::<Generators>(input)?.generators,
            cfg.cap,
            tol,
        )),
        Verb::Centralizer => to_value(&centralizer(
            &parse::<Generators>(input)?.generators,
            cfg.cap,
            tol,
        )?),
        Verb::Normalizer => to_value(&normalizer(
            &parse::<Generators>(input)?.generators,
            cfg.cap,
            tol,
        )?),
        Verb::LatticeReduce => {
            let p: Periods = parse(input)?;
            let l = reduce_basis(&p.periods[0], &p.periods[1], tol)?;
            json!({"periods": l.periods(), "tau": l.tau(), "covolume": l.covolume()})
        }
        Verb::Symmetry => {
            let p: Periods = parse(input)?;
            let l = reduce_basis(&p.periods[0], &p.periods[1], tol)?;
            json!({"order": l.symmetry_order(tol)})
        }
        Verb::Sublattice => {
            let q: SublatticeQuery = parse(input)?;
            let index = is_sublattice(&q.sub, &q.lattice, tol);
            json!({"sublattice": index.is_some(), "index": index})
        }
        Verb::Grain => {
            let q: GrainQuery = parse(input)?;
            q.group.validate()?;
            json!({"grain": is_grain(&q.c, &q.lattice, &q.group, cfg.exp_bound, tol)?})
        }
        Verb::Grains => {
            let q: GrainsQuery = parse(input)?;
            to_value(&grains_enumerate(
                &q.lattice,
                &q.a_prime,
                q.height,
                cfg.exp_bound,
                tol,
            )?)
        }
        Verb::Build => to_value(&parse::<StructureSpec>(input)?.build(tol)?),
        Verb::Verify => {
            let ds = parse::<StructureSpec>(input)?.build(tol)?;
            to_value(&verify_equivariance(&ds, cfg.samples, cfg.seed, tol)?)
        }
        Verb::Classify => {
            let q: ClassifyQuery = parse(input)?;
            q.model.validate(tol)?;
            q.curve.validate()?;
            to_value(&classify_structures(&q.model, &q.curve))
        }
        Verb::Moduli => to_value(&moduli_coordinate(
            &parse::<StructureSpec>(input)?.build(tol)?,
        )),
        Verb::Conjugate => {
            let q: PairQuery = parse(input)?;
            let (a, b) = (q.first.build(tol)?, q.second.build(tol)?);
            json!({"conjugate": is_conjugate(&a, &b, cfg.exp_bound, tol)?})
        }
        Verb::Aut => to_value(&automorphism_group(
            &parse::<StructureSpec>(input)?.build(tol)?,
            tol,
        )?),
        Verb::Schwarzian => {
            let q: SchwarzianQuery = parse(input)?;
            let step = q.step.unwrap_or(DEFAULT_SCHWARZIAN_STEP);
            let f = |w: Complex64| apply_post(&q.post, q.family.eval(w));
            let value = schwarzian_fd(f, q.z.to_c64(), step)?;
            json!({"value": Scalar::from(value), "exact": schwarzian_exact(&q.family), "step": step})
        }
        Verb::RepClass => {
            let rep = parse::<RepresentationSpec>(input)?.build(tol)?;
            json!({"class": rep_class(&rep, tol)})
        }
        Verb::BundleTrivial => {
            let rep = parse::<RepresentationSpec>(input)?.build(tol)?;
            to_value(&is_trivial_bundle(&rep, cfg.branch_bound, tol)?)
        }
        Verb::Sections => {
            let rep = parse::<RepresentationSpec>(input)?.build(tol)?;
            to_value(&parallel_sections(&rep, tol))
        }
        Verb::Orbits => {
            let q: OrbitQuery = parse(input)?;
            let rep = q.rep.build(tol)?;
            match (q.point, q.structure) {
                (Some(w), None) => to_value(&finite_orbits(&rep, &w, cfg.cap, tol)),
                (None, Some(s)) => to_value(&orbit_structure(
                    &lift(&s.build(tol)?, &rep)?,
                    cfg.cap,
                    tol,
                )?),
                _ => {
                    return Err(CliError::Malformed(
                        "give exactly one of `point` or `structure`".into(),
                    ))
                }
            }
        }
        Verb::Lift => {
            let q: LiftQuery = parse(input)?;
            to_value(&lift(&q.structure.build(tol)?, &q.rep.build(tol)?)?)
        }
        Verb::LiftAut => {
            let q: LiftQuery = parse(input)?;
            let lg = lift(&q.structure.build(tol)?, &q.rep.build(tol)?)?;
            to_value(&lifted_automorphisms(&lg, &q.actions, cfg.cap, tol)?)
        }
        Verb::ClassifySurface { kind, name } => {
            let input = match (kind, name) {
                (Some(k), n) => {
                    let mut v = json!({"kind": k});
                    if let Some(n) = n {
                        v["name"] = json!(n);
                    }
                    v
                }
                (None, _) => input,
            };
            to_value(&classify_surface(&parse_surface_input(input)?, tol)?)
        }
        Verb::Batch => return Err(CliError::Malformed("batch entries cannot nest".into())),
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BatchEntry {
    verb: String,
    #[serde(default)]
    input: Value,
}

fn run_entry(entry: &Value, cfg: &CommandConfig) -> Value {
    let outcome = parse::<BatchEntry>(entry.clone()).and_then(|e| {
        let verb = Verb::from_name(&e.verb)
            .ok_or_else(|| CliError::Malformed(format!("unknown verb `{}`", e.verb)))?;
        execute(&verb, e.input, cfg)
    });
    match outcome {
        Ok(v) => json!({"ok": true, "result": v}),
        Err(e) => json!({"ok": false, "error": e.to_json()}),
    }
}

/// Runs a batch of `{"verb", "input"}` queries, keeping input order.
pub fn batch(entries: &[Value], cfg: &CommandConfig, parallel: bool) -> Vec<Value> {
    if parallel {
        entries.par_iter().map(|e| run_entry(e, cfg)).collect()
    } else {
        entries.iter().map(|e| run_entry(e, cfg)).collect()
    }
}

/// JSON formatter printing every float with 17 significant digits.
struct Precise;

impl serde_json::ser::Formatter for Precise {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write!(w, "{v:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        self.write_f64(w, v as f64)
    }
}

pub fn render_json(v: &Value) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Precise);
    v.serialize(&mut ser).expect("in-memory serialization");
    String::from_utf8(out).expect("serde_json writes UTF-8")
}

fn render_text(v: &Value, path: &str, out: &mut String) {
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                let p = if path.is_empty() {
                    k.clone()
                } else {
                    format!("{path}.{k}")
                };
                render_text(x, &p, out);
            }
        }
        Value::Array(items) if items.iter().any(|x| x.is_object() || x.is_array()) => {
            for (i, x) in items.iter().enumerate() {
                render_text(x, &format!("{path}[{i}]"), out);
            }
        }
        other => {
            out.push_str(path);
            out.push_str(" = ");
            out.push_str(&render_json(other));
            out.push('\n');
        }
    }
}

pub fn render(v: &Value, format: Format) -> String {
    match format {
        Format::Json => render_json(v) + "\n",
        Format::Text => {
            let mut s = String::new();
            render_text(v, "", &mut s);
            s
        }
    }
}

fn read_input(path: &Option<PathBuf>) -> CliResult<Value> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p)
            .map_err(|e| CliError::Malformed(format!("{}: {e}", p.display())))?,
        None => {
            let mut s = String::new();
            io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| CliError::Malformed(e.to_string()))?;
            s
        }
    };
    serde_json::from_str(&text).map_err(|e| CliError::Malformed(format!("invalid JSON: {e}")))
}

/// Exit code and text to print.
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            return Outcome {
                code,
                stdout: if code == 0 {
                    e.to_string()
                } else {
                    String::new()
                },
                stderr: if code == 0 {
                    String::new()
                } else {
                    e.to_string()
                },
            };
        }
    };
    let format = cli.format;
    let fail = |e: CliError| Outcome {
        code: e.exit_code(),
        stdout: render(&json!({"schema": SCHEMA, "error": e.to_json()}), format),
        stderr: String::new(),
    };
    let tol = match Tolerance::new(cli.tol) {
        Ok(t) => t,
        Err(e) => return fail(CliError::Malformed(e.to_string())),
    };
    let cfg = CommandConfig {
        tol,
        cap: cli.cap,
        exp_bound: cli.exp_bound,
        branch_bound: cli.branch_bound,
        seed: cli.seed,
        samples: cli.samples,
    };
    let needs_input = !matches!(&cli.verb, Verb::ClassifySurface { kind: Some(_), .. });
    let input = if needs_input {
        match read_input(&cli.input) {
            Ok(v) => v,
            Err(e) => return fail(e),
        }
    } else {
        Value::Null
    };
    let result = match &cli.verb {
        Verb::Batch => match input {
            Value::Array(entries) => {
                Ok(json!({"schema": SCHEMA, "results": batch(&entries, &cfg, cli.parallel)}))
            }
            _ => Err(CliError::Malformed(
                "batch input must be a JSON array".into(),
            )),
        },
        verb => execute(verb, input, &cfg).map(|r| json!({"schema": SCHEMA, "result": r})),
    };
    match result {
        Ok(v) => Outcome {
            code: 0,
            stdout: render(&v, format),
            stderr: String::new(),
        },
        Err(e) => fail(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_seventeen_digits() {
        let v = json!({"x": 0.1, "y": [1.0, -2.5e-12]});
        assert_eq!(
            render_json(&v),
            r#"{"x":1.0000000000000001e-1,"y":[1.0000000000000000e0,-2.4999999999999998e-12]}"#
        );
        let back: Value = serde_json::from_str(&render_json(&v)).unwrap();
        assert_eq!(back["x"].as_f64(), Some(0.1));
    }

    #[test]
    fn verb_names_round_trip() {
        for name in [
            "recognize",
            "lattice-reduce",
            "bundle-trivial",
            "lift-aut",
            "classify-surface",
        ] {
            assert!(Verb::from_name(name).is_some(), "{name}");
        }
        assert!(Verb::from_name("batch").is_none());
    }

    #[test]
    fn text_rendering_flattens() {
        let s = render(&json!({"a": {"b": 1}, "c": "x"}), Format::Text);
        assert_eq!(s, "a.b = 1\nc = \"x\"\n");
    }
}
