//! `mplan`: command-line front end for sphere planners, tube fibrations and
//! their verification.
//!
//! Exit codes: 0 success, 1 contract or certification failure, 2 bad input,
//! 3 lift failure (the failing `t` is printed).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use milnor_planner::fibration::{
    pullback_planner, rr_arm_workmap, LiftError, LiftingOracle, TaskingPlanner, WorkMap,
};
use milnor_planner::geometry::{PathExpr, SpherePoint};
use milnor_planner::milnor::{
    cycle_lengths, hopf_germ, monodromy_components, regularity_probe, sample_fiber, sample_link,
    tube_fibration, Germ, MilnorError,
};
use milnor_planner::sphere_planner::{build_planner, DEFAULT_MARGIN};
use milnor_planner::verify::{
    certify_sec, certify_tc, continuity_all, query_rng, run_contract_suite, Certificate, ContinuityTable,
    FibrationFacts, GoalConstraint, SuiteConfig, VerificationReport, DEFAULT_PAIRS,
};

/// Tolerance for user-supplied points that must lie on a sphere or tube.
const INPUT_TOL: f64 = 1e-6;

#[derive(Parser)]
#[command(name = "mplan", version, about = "Motion planning on spheres and Milnor tube fibrations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan between two points of the unit sphere S^m.
    PlanSphere(PlanSphereArgs),
    /// Plan on the tube of a germ (or builtin:hopf) towards a target on the base sphere.
    PlanTube(PlanTubeArgs),
    /// Plan a two-joint arm configuration towards a unit pointing direction.
    PlanArm(PlanArmArgs),
    /// Run the randomized contract suite.
    Verify(VerifyArgs),
    /// Sample a Milnor fiber and count its components.
    Fiber(FiberArgs),
    /// Sample the link f^{-1}(0) on the Milnor sphere.
    Link(SampledGermArgs),
    /// Permutation of fiber components induced by the full base loop.
    Monodromy(SampledGermArgs),
    /// TC (and, over the circle, sectional-number) certificates.
    Certify(CertifyArgs),
    /// Sampled regularity probe of f on the Milnor ball.
    Probe(SampledGermArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OracleChoice {
    Exact,
    Numeric,
}

#[derive(Args)]
struct Output {
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct PlanSphereArgs {
    /// Sphere dimension m (points live in R^{m+1}).
    #[arg(long)]
    dim: usize,
    /// Start point, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    from: String,
    /// Goal point, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    to: String,
    #[arg(long, default_value_t = DEFAULT_MARGIN)]
    margin: f64,
    /// Uniform path samples in the output.
    #[arg(long, default_value_t = 256)]
    samples: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct PlanTubeArgs {
    /// Germ JSON file, or builtin:hopf.
    #[arg(long)]
    germ: String,
    /// Start on the tube, comma separated; drawn from --seed when omitted.
    #[arg(long, allow_hyphen_values = true)]
    start: Option<String>,
    /// Target: an angle in radians for germs, a unit direction for builtin:hopf.
    #[arg(long, allow_hyphen_values = true)]
    target: String,
    #[arg(long, value_enum)]
    oracle: Option<OracleChoice>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_MARGIN)]
    margin: f64,
    #[arg(long, default_value_t = 256)]
    samples: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct PlanArmArgs {
    /// Joint angles alpha,beta.
    #[arg(long, allow_hyphen_values = true)]
    start: String,
    /// Unit pointing direction x,y,z.
    #[arg(long, allow_hyphen_values = true)]
    goal: String,
    #[arg(long, default_value_t = DEFAULT_MARGIN)]
    margin: f64,
    #[arg(long, default_value_t = 256)]
    samples: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct VerifyArgs {
    /// sphere:M, hopf, arm, or germ:PATH.
    #[arg(long)]
    case: String,
    #[arg(long, default_value_t = 1000)]
    queries: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_MARGIN)]
    margin: f64,
    #[arg(long, value_enum)]
    oracle: Option<OracleChoice>,
    /// Only sample goals at least this chordal distance from both poles.
    #[arg(long, conflicts_with = "near_pole")]
    clearance: Option<f64>,
    /// Only sample goals within this chordal distance of a pole.
    #[arg(long)]
    near_pole: Option<f64>,
    /// Also run the continuity probe (sphere cases only).
    #[arg(long)]
    continuity: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct FiberArgs {
    /// Germ JSON file.
    #[arg(long)]
    germ: PathBuf,
    /// Base angle of the fiber, in radians.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    angle: f64,
    /// Newton seeds.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SampledGermArgs {
    /// Germ JSON file.
    #[arg(long)]
    germ: PathBuf,
    /// Newton seeds or probe points.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct CertifyArgs {
    /// Germ JSON file, or builtin:hopf.
    #[arg(long)]
    germ: String,
    /// Newton seeds for fiber and link sampling.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[command(flatten)]
    output: Output,
}

enum Failure {
    Contract(String),
    Input(String),
    Lift { t: f64, reason: String },
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Contract(_) => 1,
            Failure::Input(_) => 2,
            Failure::Lift { .. } => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Contract(m) => write!(f, "contract failure: {m}"),
            Failure::Input(m) => write!(f, "error: {m}"),
            Failure::Lift { t, reason } => write!(f, "lift failure at t* = {t}: {reason}"),
        }
    }
}

impl From<LiftError> for Failure {
    fn from(e: LiftError) -> Self {
        match e {
            LiftError::LiftFailure { t, reason } => Failure::Lift { t, reason },
            other => Failure::Input(other.to_string()),
        }
    }
}

impl From<MilnorError> for Failure {
    fn from(e: MilnorError) -> Self {
        Failure::Input(e.to_string())
    }
}

fn input<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Input(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::PlanSphere(a) => plan_sphere(a),
        Command::PlanTube(a) => plan_tube(a),
        Command::PlanArm(a) => plan_arm(a),
        Command::Verify(a) => verify(a),
        Command::Fiber(a) => fiber(a),
        Command::Link(a) => link(a),
        Command::Monodromy(a) => monodromy(a),
        Command::Certify(a) => certify(a),
        Command::Probe(a) => probe(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}

fn parse_vec(s: &str) -> Result<Vec<f64>, Failure> {
    let v = s
        .split(',')
        .map(|c| c.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| Failure::Input(format!("cannot parse point {s:?}: {e}")))?;
    if v.iter().any(|c| !c.is_finite()) {
        return Err(Failure::Input(format!("non-finite coordinate in {s:?}")));
    }
    Ok(v)
}

/// Parses a point within `INPUT_TOL` of the unit sphere and renormalizes it.
fn parse_unit(s: &str, dim: usize) -> Result<SpherePoint, Failure> {
    let v = parse_vec(s)?;
    if v.len() != dim {
        return Err(Failure::Input(format!("expected {dim} coordinates, got {}", v.len())));
    }
    let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
    if (n - 1.0).abs() > INPUT_TOL {
        return Err(Failure::Input(format!("point {s:?} has norm {n}, not 1")));
    }
    SpherePoint::unit(v.iter().map(|c| c / n).collect()).map_err(input)
}

fn load_germ(path: &Path) -> Result<Germ, Failure> {
    Germ::load(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_map(source: &str) -> Result<WorkMap, Failure> {
    match source {
        "builtin:hopf" => Ok(hopf_germ()),
        _ => Ok(tube_fibration(&load_germ(Path::new(source))?)),
    }
}

fn choose_oracle(map: &WorkMap, choice: Option<OracleChoice>) -> LiftingOracle {
    match choice {
        None => LiftingOracle::for_map(map),
        Some(OracleChoice::Exact) => LiftingOracle::ExactCircleAction,
        Some(OracleChoice::Numeric) => LiftingOracle::numeric(),
    }
}

fn emit(out: &Output, json: &impl Serialize, csv: impl FnOnce() -> Result<String, Failure>) -> Result<(), Failure> {
    let text = match out.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(json).map_err(input)?;
            s.push('\n');
            s
        }
        Format::Csv => csv()?,
    };
    match &out.out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Input(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn samples_of(path: &PathExpr, n: usize) -> Result<Vec<Vec<f64>>, Failure> {
    if n < 2 {
        return Err(Failure::Input("--samples must be at least 2".into()));
    }
    Ok(path
        .sample(n)
        .map_err(input)?
        .into_iter()
        .map(|(t, x)| std::iter::once(t).chain(x).collect())
        .collect())
}

fn path_csv(path: &PathExpr, n: usize) -> Result<String, Failure> {
    if n < 2 {
        return Err(Failure::Input("--samples must be at least 2".into()));
    }
    path.to_csv(n).map_err(input)
}

#[derive(Serialize)]
struct SpherePlan {
    dim: usize,
    region: usize,
    path: PathExpr,
    /// Rows `[t, x_1, …]`.
    samples: Vec<Vec<f64>>,
}

fn plan_sphere(a: PlanSphereArgs) -> Result<(), Failure> {
    let planner = build_planner(a.dim, a.margin).map_err(input)?;
    let from = parse_unit(&a.from, a.dim + 1)?;
    let to = parse_unit(&a.to, a.dim + 1)?;
    let (region, path) = planner.plan(&from, &to).map_err(|e| Failure::Contract(e.to_string()))?;
    let doc = SpherePlan {
        dim: a.dim,
        region,
        samples: samples_of(&path, a.samples)?,
        path,
    };
    eprintln!("region {region}");
    emit(&a.output, &doc, || path_csv(&doc.path, a.samples))
}

#[derive(Serialize)]
struct TubePlan {
    map: String,
    region: usize,
    start: Vec<f64>,
    goal: Vec<f64>,
    endpoint: Vec<f64>,
    endpoint_error: f64,
    base: PathExpr,
    path: PathExpr,
    samples: Vec<Vec<f64>>,
}

fn run_tasking(
    planner: &TaskingPlanner,
    start: &[f64],
    goal: &[f64],
    samples: usize,
    output: &Output,
) -> Result<(), Failure> {
    let q = planner.plan_full(start, goal)?;
    let endpoint = q.path.end().map_err(|e| Failure::Contract(e.to_string()))?;
    let fe = planner.map().eval(&endpoint);
    let endpoint_error = fe.iter().zip(goal).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let tol = planner.oracle().lift_tol();
    let doc = TubePlan {
        map: planner.map().name(),
        region: q.region,
        start: start.to_vec(),
        goal: goal.to_vec(),
        endpoint,
        endpoint_error,
        base: q.base,
        samples: samples_of(&q.path, samples)?,
        path: q.path,
    };
    eprintln!("region {}", doc.region);
    emit(output, &doc, || path_csv(&doc.path, samples))?;
    if endpoint_error > tol {
        return Err(Failure::Contract(format!("endpoint error {endpoint_error:e} exceeds {tol:e}")));
    }
    Ok(())
}

fn plan_tube(a: PlanTubeArgs) -> Result<(), Failure> {
    let map = load_map(&a.germ)?;
    let eta = map.base_radius;
    let start = match &a.start {
        Some(s) => map.snap_to_tube(&parse_vec(s)?, INPUT_TOL)?,
        None => map.sample_start(&mut query_rng(a.seed, 0))?,
    };
    let goal: Vec<f64> = if map.codomain_dim() == 2 && !a.target.contains(',') {
        let phi: f64 = a.target.trim().parse().map_err(input)?;
        vec![eta * phi.cos(), eta * phi.sin()]
    } else {
        parse_unit(&a.target, map.codomain_dim())?
            .coords()
            .iter()
            .map(|c| eta * c)
            .collect()
    };
    let oracle = choose_oracle(&map, a.oracle);
    let base = build_planner(map.codomain_dim() - 1, a.margin).map_err(input)?;
    let planner = pullback_planner(map, base, oracle)?;
    run_tasking(&planner, &start, &goal, a.samples, &a.output)
}

fn plan_arm(a: PlanArmArgs) -> Result<(), Failure> {
    let map = rr_arm_workmap();
    let start = parse_vec(&a.start)?;
    let goal = parse_unit(&a.goal, 3)?.coords().to_vec();
    let base = build_planner(2, a.margin).map_err(input)?;
    let planner = pullback_planner(map, base, LiftingOracle::numeric())?;
    run_tasking(&planner, &start, &goal, a.samples, &a.output)
}

#[derive(Serialize)]
struct VerifyDoc {
    report: VerificationReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    continuity: Option<Vec<ContinuityTable>>,
}

fn verify(a: VerifyArgs) -> Result<(), Failure> {
    let goal = match (a.clearance, a.near_pole) {
        (Some(d), None) => GoalConstraint::PoleClearance { distance: d },
        (None, Some(d)) => GoalConstraint::NearPole { distance: d },
        _ => GoalConstraint::Any,
    };
    let cfg = SuiteConfig::new(a.queries, a.seed).with_goal(goal);
    let doc = if let Some(m) = a.case.strip_prefix("sphere:") {
        let m: usize = m.parse().map_err(|_| Failure::Input(format!("bad sphere dimension in {:?}", a.case)))?;
        let planner = build_planner(m, a.margin).map_err(input)?;
        let report = run_contract_suite(&planner, &cfg);
        let continuity = if a.continuity {
            Some(continuity_all(&planner, DEFAULT_PAIRS, a.seed).map_err(input)?)
        } else {
            None
        };
        VerifyDoc { report, continuity }
    } else {
        if a.continuity {
            return Err(Failure::Input("--continuity applies to sphere cases only".into()));
        }
        let map = match a.case.as_str() {
            "hopf" => hopf_germ(),
            "arm" => rr_arm_workmap(),
            other => match other.strip_prefix("germ:") {
                Some(p) => tube_fibration(&load_germ(Path::new(p))?),
                None => return Err(Failure::Input(format!("unknown case {other:?}"))),
            },
        };
        let oracle = choose_oracle(&map, a.oracle);
        let base = build_planner(map.codomain_dim() - 1, a.margin).map_err(input)?;
        let planner = pullback_planner(map, base, oracle)?;
        VerifyDoc {
            report: run_contract_suite(&planner, &cfg),
            continuity: None,
        }
    };
    let r = &doc.report;
    eprintln!(
        "{}: {}/{} succeeded, {} failures, max endpoint error {:e} ({:.2}s)",
        r.planner,
        r.succeeded,
        r.queries,
        r.failures.len(),
        r.max_endpoint_error,
        r.wall_time.as_secs_f64()
    );
    emit(&a.output, &doc, || {
        let mut s = String::from("query,seed,kind,t,detail\n");
        for f in &r.failures {
            let kind = serde_json::to_value(f.kind).map_err(input)?;
            let t = f.t.map(|t| t.to_string()).unwrap_or_default();
            let _ = writeln!(s, "{},{},{},{},\"{}\"", f.query, f.seed, kind.as_str().unwrap_or(""), t, f.detail.replace('"', "'"));
        }
        Ok(s)
    })?;
    if !r.passed() {
        return Err(Failure::Contract(format!("{} of {} queries failed", r.failures.len(), r.queries)));
    }
    if let Some(tables) = &doc.continuity {
        if let Some(t) = tables.iter().find(|t| !t.monotone) {
            return Err(Failure::Contract(format!("continuity probe of region {} is not monotone", t.region)));
        }
    }
    Ok(())
}

fn fiber(a: FiberArgs) -> Result<(), Failure> {
    let g = load_germ(&a.germ)?;
    let fs = sample_fiber(&g, a.angle, a.samples, a.seed)?;
    eprintln!("{} components from {}/{} converged seeds", fs.components, fs.converged, fs.seeds);
    emit(&a.output, &fs, || {
        let dim = fs.points.first().map_or(0, Vec::len);
        let mut s = String::from("label");
        for i in 1..=dim {
            let _ = write!(s, ",x{i}");
        }
        s.push('\n');
        for (l, p) in fs.labels.iter().zip(&fs.points) {
            let _ = write!(s, "{l}");
            for c in p {
                let _ = write!(s, ",{c:?}");
            }
            s.push('\n');
        }
        Ok(s)
    })
}

fn link(a: SampledGermArgs) -> Result<(), Failure> {
    let g = load_germ(&a.germ)?;
    let ls = sample_link(&g, a.samples, a.seed)?;
    eprintln!("link nonempty: {:?} ({}/{} converged)", ls.link_nonempty, ls.converged, ls.seeds);
    emit(&a.output, &ls, || {
        let mut s = String::new();
        for p in &ls.points {
            let row: Vec<String> = p.iter().map(|c| format!("{c:?}")).collect();
            let _ = writeln!(s, "{}", row.join(","));
        }
        Ok(s)
    })
}

#[derive(Serialize)]
struct MonodromyDoc {
    map: String,
    components: usize,
    permutation: Vec<usize>,
    cycles: Vec<usize>,
}

fn monodromy(a: SampledGermArgs) -> Result<(), Failure> {
    let g = load_germ(&a.germ)?;
    let fs = sample_fiber(&g, 0.0, a.samples, a.seed)?;
    let perm = monodromy_components(&g, &fs)?;
    let doc = MonodromyDoc {
        map: g.name.clone(),
        components: fs.components,
        cycles: cycle_lengths(&perm),
        permutation: perm,
    };
    emit(&a.output, &doc, || {
        let mut s = String::from("component,image\n");
        for (c, i) in doc.permutation.iter().enumerate() {
            let _ = writeln!(s, "{c},{i}");
        }
        Ok(s)
    })
}

#[derive(Serialize)]
struct CertifyDoc {
    tc: Certificate,
    #[serde(skip_serializing_if = "Option::is_none")]
    sec: Option<Certificate>,
}

fn certify(a: CertifyArgs) -> Result<(), Failure> {
    let map = load_map(&a.germ)?;
    let mut facts = FibrationFacts::from_workmap(&map).map_err(|e| Failure::Contract(e.to_string()))?;
    let germ = match &map.kind {
        milnor_planner::MapKind::Germ(g) => Some(g),
        _ => None,
    };
    if let Some(g) = germ {
        facts = facts.with_link_sample(&sample_link(g, a.samples, a.seed)?);
    }
    let tc = certify_tc(&facts).map_err(input)?;
    let sec = match germ {
        Some(g) => {
            let fs = sample_fiber(g, 0.0, a.samples, a.seed)?;
            Some(certify_sec(&facts, fs.components).map_err(input)?)
        }
        None => None,
    };
    let doc = CertifyDoc { tc, sec };
    eprintln!("TC in [{}, {}]", doc.tc.lower, doc.tc.upper);
    emit(&a.output, &doc, || {
        let mut s = String::from("quantity,lower,upper,exact,section_exists,tags\n");
        for c in std::iter::once(&doc.tc).chain(doc.sec.as_ref()) {
            let q = serde_json::to_value(c.quantity).map_err(input)?;
            let exact = c.exact.map(|e| e.to_string()).unwrap_or_default();
            let sec = match c.section_exists {
                Some(v) => serde_json::to_value(v).map_err(input)?.as_str().unwrap_or("").to_string(),
                None => String::new(),
            };
            let _ = writeln!(s, "{},{},{},{},{},{}", q.as_str().unwrap_or(""), c.lower, c.upper, exact, sec, c.tags.join(";"));
        }
        Ok(s)
    })?;
    if [Some(&doc.tc), doc.sec.as_ref()].into_iter().flatten().any(|c| !c.is_consistent()) {
        return Err(Failure::Contract("inconsistent certificate".into()));
    }
    Ok(())
}

fn probe(a: SampledGermArgs) -> Result<(), Failure> {
    let g = load_germ(&a.germ)?;
    let p = regularity_probe(&g, a.samples, a.seed)?;
    eprintln!("{}", p.note);
    emit(&a.output, &p, || {
        let fr = p.min_sigma_fr.map(|v| format!("{v:?}")).unwrap_or_default();
        Ok(format!(
            "samples,boundary_samples,min_sigma_f,min_sigma_fr,probably_regular\n{},{},{},{},{}\n",
            p.samples, p.boundary_samples, p.min_sigma_f, fr, p.probably_regular
        ))
    })
}
