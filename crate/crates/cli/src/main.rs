//! `cutloc`: cut values, symmetry reports and identity checks for planar
//! shapes given as JSON files or catalog names.

mod output;
mod verify;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cutloc_core::boundary::catalog::{self, ShapeSpec};
use cutloc_core::cutlocus::{cut_samples, write_samples_csv, CutSample};
use cutloc_core::distfield::{DistanceField, GridSpec, DEFAULT_RING_SAMPLES};
use cutloc_core::mk::{mk_verdict, vf_field, MkVerdict, ResidualStats, SourceField, WeakForm};
use cutloc_core::projection::ExactProjector;
use cutloc_core::symmetry::{criterion_report, inequality_chain_check, CriterionTolerances, SymmetryReport};
use cutloc_core::web::{teopartialweb_check, web_profile, DivergenceOperator, GammaArc, PartialWebRecord, WebProfile};
use cutloc_core::{BoundaryCurve, Error};
use serde::Serialize;

use output::{to_json, write_file};
use verify::{Check, Status};

/// Residual above which `web` exits with status 1.
const WEB_RESIDUAL_TOL: f64 = 1e-4;

#[derive(Parser, Debug)]
#[command(name = "cutloc", version, about = "Cut locus, criterion function and identity checks for planar domains")]
struct Cli {
    #[command(flatten)]
    config: RunArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
struct RunArgs {
    /// Shape JSON file, or the name of a catalog shape
    #[arg(long, global = true)]
    shape: Option<String>,
    /// Boundary samples, equispaced in arclength
    #[arg(long, global = true, default_value_t = 2048)]
    samples: usize,
    #[arg(long, global = true, default_value_t = 256)]
    grid_nx: usize,
    #[arg(long, global = true, default_value_t = 256)]
    grid_ny: usize,
    /// Grid margin around the bounding box (default 5% of its extent)
    #[arg(long, global = true)]
    margin: Option<f64>,
    /// Cut-value tolerance relative to the diameter, in (0, 1e-2)
    #[arg(long, global = true, default_value_t = 1e-6)]
    tol: f64,
    /// Directory for JSON and CSV files
    #[arg(long, global = true)]
    #[serde(skip)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, value_delimiter = ',', default_value = "csv,json")]
    #[serde(skip)]
    format: Vec<Format>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List catalog shapes and their parameters
    Shapes {
        name: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Criterion report with per-sample cut values
    Report,
    /// Run the identity suite; exits 1 if any identity misses its tolerance
    Verify,
    /// Rolling-layer field for a constant source
    Mk {
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        gamma: f64,
    },
    /// Web-function reduction on a boundary arc
    Web {
        /// `laplace` or `plap:<p>`
        #[arg(long, default_value = "laplace")]
        operator: String,
        /// Arclength interval `start,end` (default: the whole boundary)
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        gamma_arc: Option<Vec<f64>>,
        /// Collar widths
        #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.05, 0.025])]
        eps: Vec<f64>,
    },
}

enum Failure {
    Config(String),
    Run(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Configuration(_) | Error::Parse { .. } | Error::Construction(_) | Error::Domain(_) => {
                Failure::Config(e.to_string())
            }
            e => Failure::Run(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Run(format!("i/o error: {e}"))
    }
}

type Outcome = Result<bool, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Run(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("CUTLOC_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| format!("CUTLOC_THREADS must be a positive integer, got '{v}'"))?;
    if n == 0 {
        return Err("CUTLOC_THREADS must be positive".into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn run(cli: Cli) -> Outcome {
    let cfg = cli.config;
    if let Command::Shapes { name, json } = &cli.command {
        return cmd_shapes(name.as_deref(), *json);
    }
    validate(&cfg)?;
    let spec = load_shape(cfg.shape.as_deref())?;
    let curve = spec.build()?;
    let ctx = Context::new(&cfg, spec, &curve)?;
    match cli.command {
        Command::Shapes { .. } => unreachable!(),
        Command::Report => cmd_report(&ctx),
        Command::Verify => cmd_verify(&ctx),
        Command::Mk { gamma } => cmd_mk(&ctx, gamma),
        Command::Web { operator, gamma_arc, eps } => {
            let op = DivergenceOperator::parse(&operator)?;
            let arc = match gamma_arc.as_deref() {
                Some(&[a, b]) => GammaArc::new(a, b),
                Some(_) => return Err(Failure::Config("--gamma-arc takes start,end".into())),
                None => GammaArc::new(0.0, curve.length()),
            };
            if eps.is_empty() || eps.iter().any(|e| e.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater)) {
                return Err(Failure::Config("collar widths must be positive".into()));
            }
            cmd_web(&ctx, &op, arc, &eps)
        }
    }
}

fn validate(cfg: &RunArgs) -> Result<(), Failure> {
    if cfg.samples == 0 || cfg.grid_nx == 0 || cfg.grid_ny == 0 {
        return Err(Failure::Config("sample and grid counts must be positive".into()));
    }
    if !(cfg.tol > 0.0 && cfg.tol < 1e-2) {
        return Err(Failure::Config(format!("--tol must lie in (0, 1e-2), got {}", cfg.tol)));
    }
    if cfg.margin.is_some_and(|m| !(m > 0.0 && m.is_finite())) {
        return Err(Failure::Config("--margin must be positive".into()));
    }
    if cfg.format.is_empty() {
        return Err(Failure::Config("--format needs csv, json or both".into()));
    }
    Ok(())
}

/// A path to a JSON file, or failing that a catalog name.
fn load_shape(arg: Option<&str>) -> Result<ShapeSpec, Failure> {
    let arg = arg.ok_or_else(|| Failure::Config("--shape is required".into()))?;
    let path = Path::new(arg);
    if path.is_file() {
        let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{arg}: {e}")))?;
        return ShapeSpec::from_json(&text).map_err(|e| Failure::Config(format!("{arg}: {e}")));
    }
    catalog::representative_specs()
        .into_iter()
        .find(|s| s.name() == arg)
        .ok_or_else(|| Failure::Config(format!("{arg}: no such file or catalog shape")))
}

/// Parameter schema as a JSON object, keys in declaration order.
struct Schema<'a>(&'a [Parameter]);

impl Serialize for Schema<'_> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut m = s.serialize_map(Some(self.0.len()))?;
        for p in self.0 {
            m.serialize_entry(p.name, p.ty)?;
        }
        m.end()
    }
}

#[derive(Serialize)]
struct ShapeEntry {
    name: &'static str,
    parameters: Vec<Parameter>,
    example: ShapeSpec,
}

#[derive(Serialize)]
struct Parameter {
    name: &'static str,
    #[serde(rename = "type")]
    ty: &'static str,
}

fn cmd_shapes(name: Option<&str>, json: bool) -> Outcome {
    let examples = catalog::representative_specs();
    let entries: Vec<ShapeEntry> = catalog::schemas()
        .into_iter()
        .zip(examples)
        .map(|((name, params), example)| ShapeEntry {
            name,
            parameters: params.into_iter().map(|(name, ty)| Parameter { name, ty }).collect(),
            example,
        })
        .collect();
    match name {
        Some(n) => {
            let entry = entries
                .iter()
                .find(|e| e.name == n)
                .ok_or_else(|| Failure::Config(format!("unknown shape '{n}'")))?;
            print!("{}", to_json(&Schema(&entry.parameters)));
        }
        None if json => print!("{}", to_json(&entries)),
        None => {
            for e in &entries {
                let params: Vec<String> = e.parameters.iter().map(|p| format!("{}: {}", p.name, p.ty)).collect();
                println!("{:<16} {}", e.name, params.join(", "));
            }
        }
    }
    Ok(true)
}

/// Everything the subcommands share: the curve, its samples and the grid.
struct Context<'a> {
    cfg: &'a RunArgs,
    spec: ShapeSpec,
    curve: &'a BoundaryCurve,
    proj: ExactProjector<'a>,
    tols: CriterionTolerances,
    samples: Vec<CutSample>,
}

impl<'a> Context<'a> {
    fn new(cfg: &'a RunArgs, spec: ShapeSpec, curve: &'a BoundaryCurve) -> Result<Self, Failure> {
        let proj = ExactProjector::new(curve)?;
        let mut tols = CriterionTolerances::for_curve(curve);
        tols.cut_tol = cfg.tol * curve.diameter();
        let samples = cut_samples(&proj, cfg.samples, tols.cut_tol)?;
        Ok(Context { cfg, spec, curve, proj, tols, samples })
    }

    fn field(&self) -> Result<DistanceField, Failure> {
        let grid = GridSpec::covering(self.curve, self.cfg.grid_nx, self.cfg.grid_ny, self.cfg.margin)?;
        let ring = DEFAULT_RING_SAMPLES.max((self.curve.length() / grid.h).ceil() as usize);
        Ok(DistanceField::build(self.curve, grid, ring)?)
    }

    fn wants(&self, f: Format) -> bool {
        self.cfg.format.contains(&f)
    }

    /// Prints the JSON document and writes it, with any CSV side files, to
    /// the output directory.
    fn emit<T: Serialize>(&self, command: &str, result: &T, csv: &[(&str, &dyn CsvBody)]) -> Result<(), Failure> {
        let doc = Envelope { command, shape: &self.spec, config: self.cfg, tolerances: &self.tols, result };
        let text = to_json(&doc);
        print!("{text}");
        if let Some(dir) = &self.cfg.out {
            if self.wants(Format::Json) {
                write_file(dir, &format!("{command}.json"), |w| std::io::Write::write_all(w, text.as_bytes()))?;
            }
            if self.wants(Format::Csv) {
                for (name, body) in csv {
                    write_file(dir, name, |w| body.write(w))?;
                }
            }
        }
        Ok(())
    }

    fn samples_csv(&self) -> SamplesCsv<'_> {
        SamplesCsv(&self.samples)
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    command: &'a str,
    shape: &'a ShapeSpec,
    config: &'a RunArgs,
    tolerances: &'a CriterionTolerances,
    result: &'a T,
}

trait CsvBody {
    fn write(&self, w: &mut dyn std::io::Write) -> std::io::Result<()>;
}

struct SamplesCsv<'a>(&'a [CutSample]);

impl CsvBody for SamplesCsv<'_> {
    fn write(&self, w: &mut dyn std::io::Write) -> std::io::Result<()> {
        write_samples_csv(self.0, w)
    }
}

#[derive(Serialize)]
struct ChainSummary {
    curvature_link_failures: usize,
    phi_link: bool,
    bound_link: bool,
    holds: bool,
    first_failure: Option<String>,
}

#[derive(Serialize)]
struct ReportResult {
    report: SymmetryReport,
    chain: ChainSummary,
}

fn cmd_report(ctx: &Context) -> Outcome {
    let report = criterion_report(&ctx.proj, &ctx.samples, &ctx.tols)?;
    let chain = inequality_chain_check(&report, &ctx.samples, ctx.tols.cut_tol);
    let result = ReportResult {
        chain: ChainSummary {
            curvature_link_failures: chain.curvature_link_failures,
            phi_link: chain.phi_link,
            bound_link: chain.bound_link,
            holds: chain.holds,
            first_failure: chain.first_failure,
        },
        report,
    };
    ctx.emit("report", &result, &[("samples.csv", &ctx.samples_csv())])?;
    Ok(true)
}

fn cmd_verify(ctx: &Context) -> Outcome {
    let field = ctx.field()?;
    let checks: Vec<Check> = verify::run(&ctx.proj, &ctx.samples, &field, &ctx.tols)?;
    ctx.emit("verify", &checks, &[("samples.csv", &ctx.samples_csv())])?;
    for c in &checks {
        eprintln!("{:<22} {:?}", c.name, c.status);
    }
    Ok(checks.iter().all(|c| c.status != Status::Fail))
}

#[derive(Serialize)]
struct MkResult {
    verdict: MkVerdict,
    grid: GridSpec,
    max_v: f64,
    min_v: f64,
    complementarity: f64,
    max_jump: f64,
    residual: ResidualStats,
    weak_form: Option<WeakForm>,
}

struct MkCsv<'a>(&'a cutloc_core::mk::MKSolution);

impl CsvBody for MkCsv<'_> {
    fn write(&self, w: &mut dyn std::io::Write) -> std::io::Result<()> {
        self.0.write_csv(w)
    }
}

fn cmd_mk(ctx: &Context, gamma: f64) -> Outcome {
    let verdict = mk_verdict(&ctx.proj, gamma, &ctx.samples, &ctx.tols)?;
    let field = ctx.field()?;
    let source = SourceField::constant(gamma);
    let sol = vf_field(&field, &source, ctx.tols.cut_tol)?;
    // a collar of eight cells keeps the tent function resolved
    let weak_form = match sol.weak_form(&field, &source, 8.0 * field.h()) {
        Ok(w) => Some(w),
        Err(Error::OutOfScope(_) | Error::Inapplicable(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let result = MkResult {
        grid: sol.grid,
        max_v: sol.max_v(),
        min_v: sol.min_v(),
        complementarity: sol.complementarity(),
        max_jump: sol.max_jump(&field),
        residual: sol.residual_stats(),
        weak_form,
        verdict,
    };
    ctx.emit("mk", &result, &[("samples.csv", &ctx.samples_csv()), ("mk_field.csv", &MkCsv(&sol))])?;
    Ok(true)
}

#[derive(Serialize)]
struct WebResult {
    record: PartialWebRecord,
    /// Profile along the ray at the maximal-curvature point of `Γ`.
    profile: WebProfile,
    residual_tolerance: f64,
}

fn cmd_web(ctx: &Context, op: &DivergenceOperator, arc: GammaArc, eps: &[f64]) -> Outcome {
    let record = teopartialweb_check(&ctx.proj, &ctx.samples, &arc, op, eps, &ctx.tols)?;
    let t = &record.teo10;
    let depths: Vec<f64> = (0..=32).map(|k| t.lambda * k as f64 / 32.0).collect();
    let profile = web_profile(op, t.kappa, t.lambda, &depths)?;
    let ok = record.condition_i && record.teo10.residual <= WEB_RESIDUAL_TOL;
    let result = WebResult { record, profile, residual_tolerance: WEB_RESIDUAL_TOL };
    ctx.emit("web", &result, &[("samples.csv", &ctx.samples_csv())])?;
    Ok(ok)
}
