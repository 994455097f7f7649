//! The `polypot` command line: `solve`, `verify`, `converge`, `mesh-info`.

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use polypot_core::math::{norm3, sub3, Vec3};
use serde::Serialize;

use crate::error::{PolypotError, Result};
use crate::geometry::{make_sphere_mesh, MeshStatistics, SurfaceMesh};
use crate::mesh_io::load_mesh;
use crate::operators::{EvalOptions, Integration};
use crate::solvers::{solve, BvpProblem, ProblemKind, SolveReport, SolverOptions};
use crate::verify::suites::{self, Check};
use crate::verify::{convergence_study, probe_points, write_csv, ConvergenceRecord, CsvRow, Manufactured, ProblemFamily};

#[derive(Debug, Parser, Serialize)]
#[command(name = "polypot", version, about = "Polyharmonic boundary value problems on triangulated surfaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Worker threads; the POLYPOT_THREADS environment variable overrides it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Directory for report.json and table.csv.
    #[arg(long, global = true, default_value = "polypot-out")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum Command {
    /// Solve one boundary value problem and tabulate it at interior probes.
    Solve(SolveArgs),
    /// Run check suites.
    Verify(VerifyArgs),
    /// Solve a manufactured problem on a sequence of sphere meshes.
    Converge(ConvergeArgs),
    /// Print mesh statistics.
    MeshInfo {
        #[arg(long)]
        mesh: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum KindArg {
    Dirichlet,
    Neumann,
    Regularity,
}

impl From<KindArg> for ProblemKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Dirichlet => ProblemKind::Dirichlet,
            KindArg::Neumann => ProblemKind::Neumann,
            KindArg::Regularity => ProblemKind::Regularity,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum IntegrationArg {
    Analytic,
    Quadrature,
}

#[derive(Debug, Args, Serialize)]
pub struct SolverArgs {
    #[arg(long, value_enum, default_value = "analytic")]
    pub integration: IntegrationArg,
    /// Relative stage residual above which a stage is flagged.
    #[arg(long)]
    pub residual_tol: Option<f64>,
    /// Relative mean allowed in the top Neumann datum.
    #[arg(long)]
    pub compat_tol: Option<f64>,
    /// Spectral cutoff for the first-kind regularity solve.
    #[arg(long)]
    pub cutoff: Option<f64>,
    /// Near-boundary exclusion band in mean panel diameters.
    #[arg(long)]
    pub exclusion: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct SolveArgs {
    #[arg(value_enum)]
    pub kind: KindArg,
    /// Mesh file or `sphere:<level>:<radius>`.
    #[arg(long)]
    pub mesh: String,
    #[arg(long)]
    pub m: usize,
    /// One per stage: `const:<v>`, `coord:<j>` or `expr:manufactured:<name>:<k>`.
    #[arg(long = "data")]
    pub data: Vec<String>,
    /// Manufactured solution used as the probe reference.
    #[arg(long)]
    pub reference: Option<String>,
    /// Relative probe error accepted when a reference is given.
    #[arg(long, default_value_t = 2e-2)]
    pub tolerance: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum Suite {
    Kernels,
    Gauss,
    Compatibility,
    All,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    #[arg(value_enum, default_value = "all")]
    pub suite: Suite,
    /// Sphere level for the mesh-based suites.
    #[arg(long, default_value_t = 3)]
    pub level: u32,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct ConvergeArgs {
    #[arg(value_enum)]
    pub kind: KindArg,
    #[arg(long)]
    pub m: usize,
    /// Manufactured solution name.
    #[arg(long)]
    pub reference: String,
    /// Comma-separated refinement levels.
    #[arg(long, value_delimiter = ',', default_value = "2,3,4")]
    pub levels: Vec<u32>,
    /// Relative probe error accepted at the finest level.
    #[arg(long, default_value_t = 2e-2)]
    pub tolerance: f64,
    /// Smallest accepted fitted order.
    #[arg(long, default_value_t = 1.0)]
    pub min_order: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
}

/// One boundary datum as given on the command line.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSpec {
    Const(f64),
    /// 1-based coordinate.
    Coord(usize),
    Manufactured(Manufactured, usize),
}

impl DataSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let bad = |msg: String| PolypotError::Config { field: "data".into(), message: msg };
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["const", v] => v.parse().map(Self::Const).map_err(|_| bad(format!("`{v}` is not a number"))),
            ["coord", j] => match j.parse::<usize>() {
                Ok(j @ 1..=3) => Ok(Self::Coord(j)),
                _ => Err(bad(format!("coordinate index must be 1, 2 or 3, got `{j}`"))),
            },
            ["expr", "manufactured", name, k] => {
                let sol = Manufactured::from_name(name).ok_or_else(|| bad(format!("unknown manufactured solution `{name}`")))?;
                let k = k.parse().map_err(|_| bad(format!("`{k}` is not a stage index")))?;
                Ok(Self::Manufactured(sol, k))
            }
            _ => Err(bad(format!("cannot parse `{s}`"))),
        }
    }

    pub fn sample(&self, kind: ProblemKind, mesh: &SurfaceMesh) -> Vec<f64> {
        match *self {
            Self::Const(v) => vec![v; mesh.len()],
            Self::Coord(j) => mesh.panels().iter().map(|p| p.centroid()[j - 1]).collect(),
            Self::Manufactured(s, k) => s.trace(kind, mesh, k),
        }
    }
}

/// Where a mesh comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum MeshSource {
    Sphere { level: u32, radius: f64 },
    File(PathBuf),
}

impl MeshSource {
    pub fn parse(s: &str) -> Result<Self> {
        let Some(rest) = s.strip_prefix("sphere:") else { return Ok(Self::File(s.into())) };
        let bad = |msg: String| PolypotError::Config { field: "mesh".into(), message: msg };
        let (l, r) = rest.split_once(':').ok_or_else(|| bad(format!("expected sphere:<level>:<radius>, got `{s}`")))?;
        let level = l.parse().map_err(|_| bad(format!("bad sphere level `{l}`")))?;
        let radius: f64 = r.parse().map_err(|_| bad(format!("bad sphere radius `{r}`")))?;
        if !(radius > 0.0) {
            return Err(bad(format!("sphere radius must be positive, got {radius}")));
        }
        Ok(Self::Sphere { level, radius })
    }

    pub fn load(&self) -> Result<SurfaceMesh> {
        match self {
            Self::Sphere { level, radius } => make_sphere_mesh(*level, *radius, [0.0; 3]),
            Self::File(p) => load_mesh(p),
        }
    }

    fn level(&self) -> u32 {
        match self {
            Self::Sphere { level, .. } => *level,
            Self::File(_) => 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeRow {
    pub probe: usize,
    pub x: Vec3,
    pub u: f64,
    pub laplacians: Vec<f64>,
    pub gradient: Vec3,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Phases {
    pub setup_s: f64,
    pub run_s: f64,
}

/// Everything a run writes to `report.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub config: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mesh: Option<MeshStatistics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub probes: Vec<ProbeRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceRecord>,
    pub verdicts: Vec<Check>,
    pub phases: Phases,
    #[serde(skip)]
    pub table: Vec<CsvRow>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|c| c.passed)
    }
}

fn solver_options(a: &SolverArgs) -> Result<SolverOptions> {
    let mut o = SolverOptions {
        integration: match a.integration {
            IntegrationArg::Analytic => Integration::Analytic,
            IntegrationArg::Quadrature => Integration::Quadrature,
        },
        spectral_cutoff: a.cutoff,
        ..SolverOptions::default()
    };
    let positive = |field: &str, v: f64| {
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(PolypotError::Config { field: field.into(), message: format!("must be positive, got {v}") })
        }
    };
    if let Some(t) = a.residual_tol {
        o.residual_tolerance = positive("residual-tol", t)?;
    }
    if let Some(t) = a.compat_tol {
        o.compatibility_tolerance = positive("compat-tol", t)?;
    }
    if let Some(c) = a.cutoff {
        positive("cutoff", c)?;
    }
    if let Some(e) = a.exclusion {
        if !(e >= 0.0) {
            return Err(PolypotError::Config { field: "exclusion".into(), message: format!("must be nonnegative, got {e}") });
        }
        o.eval = EvalOptions { exclusion: e };
    }
    Ok(o)
}

fn reference(name: &str) -> Result<Manufactured> {
    Manufactured::from_name(name).ok_or_else(|| PolypotError::Config {
        field: "reference".into(),
        message: format!("unknown manufactured solution `{name}`"),
    })
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check { name: name.into(), passed, detail, seconds: 0.0 }
}

fn run_solve(a: &SolveArgs, config: serde_json::Value) -> Result<RunReport> {
    let t0 = Instant::now();
    if a.m == 0 {
        return Err(PolypotError::Config { field: "m".into(), message: "order must be at least 1".into() });
    }
    if a.data.len() != a.m {
        return Err(PolypotError::Config {
            field: "data".into(),
            message: format!("{} entries given for order m = {}", a.data.len(), a.m),
        });
    }
    let specs = a.data.iter().map(|s| DataSpec::parse(s)).collect::<Result<Vec<_>>>()?;
    let refsol = a.reference.as_deref().map(reference).transpose()?;
    let opts = solver_options(&a.solver)?;
    let source = MeshSource::parse(&a.mesh)?;
    let mesh = source.load()?;
    let kind = ProblemKind::from(a.kind);
    let data = specs.iter().map(|s| s.sample(kind, &mesh)).collect();
    let setup_s = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let problem = BvpProblem::new(kind, &mesh, data)?;
    let sol = solve(&problem, &opts)?;
    let center = bounding_center(&mesh);
    let radius = match source {
        MeshSource::Sphere { radius, .. } => radius,
        MeshSource::File(_) => inradius(&mesh, center),
    };
    let mut probes = Vec::new();
    let mut table = Vec::new();
    let mut worst: Option<f64> = None;
    let quantities: Vec<String> = if kind == ProblemKind::Neumann {
        vec!["grad".into()]
    } else {
        std::iter::once("u".to_string()).chain(std::iter::once("grad".into())).chain((1..a.m).map(|k| format!("lap{k}"))).collect()
    };
    let points = probe_points(center, radius);
    let evals = points.iter().map(|&x| sol.evaluate(x)).collect::<Result<Vec<_>>>()?;
    for q in &quantities {
        let mut rows = Vec::new();
        for (i, (&x, e)) in points.iter().zip(&evals).enumerate() {
            let (value, reference, err) = match q.as_str() {
                "u" => (e.u, refsol.map(|s| s.u(x)), refsol.map(|s| (e.u - s.u(x)).abs())),
                "grad" => (
                    norm3(e.gradient),
                    refsol.map(|s| norm3(s.gradient(x))),
                    refsol.map(|s| norm3(sub3(e.gradient, s.gradient(x)))),
                ),
                lap => {
                    let k: usize = lap[3..].parse().expect("lapK");
                    let v = e.laplacians[k - 1];
                    (v, refsol.map(|s| s.laplacian(k, x)), refsol.map(|s| (v - s.laplacian(k, x)).abs()))
                }
            };
            rows.push((i, value, reference, err));
        }
        let scale = rows.iter().filter_map(|r| r.2).fold(0.0, |a: f64, b| a.max(b.abs()));
        for (probe, value, reference, err) in rows {
            let rel = err.map(|e| if scale > 0.0 { e / scale } else { e });
            if let Some(r) = rel {
                worst = Some(worst.map_or(r, |w: f64| w.max(r)));
            }
            table.push(CsvRow {
                level: source.level(),
                probe,
                quantity: q.clone(),
                value,
                reference: reference.unwrap_or(f64::NAN),
                abs_err: err.unwrap_or(f64::NAN),
                rel_err: rel.unwrap_or(f64::NAN),
            });
        }
    }
    for (i, (&x, e)) in points.iter().zip(evals).enumerate() {
        probes.push(ProbeRow { probe: i, x, u: e.u, laplacians: e.laplacians, gradient: e.gradient });
    }
    let report = sol.report().clone();
    let mut verdicts = vec![check(
        "stage residuals",
        report.all_stages_converged(),
        format!("max relative residual {:.2e}", report.max_residual()),
    )];
    if let Some(w) = worst {
        verdicts.push(check("probe error", w <= a.tolerance, format!("max rel err {w:.2e} (tolerance {:.1e})", a.tolerance)));
    }
    Ok(RunReport {
        config,
        mesh: Some(mesh.statistics()),
        solve: Some(report),
        probes,
        convergence: None,
        verdicts,
        phases: Phases { setup_s, run_s: t1.elapsed().as_secs_f64() },
        table,
    })
}

fn bounding_center(mesh: &SurfaceMesh) -> Vec3 {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for v in mesh.vertices() {
        for c in 0..3 {
            lo[c] = lo[c].min(v[c]);
            hi[c] = hi[c].max(v[c]);
        }
    }
    std::array::from_fn(|c| 0.5 * (lo[c] + hi[c]))
}

/// Radius of the probe ball: the distance from `center` to the surface.
fn inradius(mesh: &SurfaceMesh, center: Vec3) -> f64 {
    if mesh.contains(center) {
        mesh.distance(center)
    } else {
        0.0
    }
}

fn run_verify(a: &VerifyArgs, config: serde_json::Value) -> Result<RunReport> {
    let t0 = Instant::now();
    let mut verdicts = Vec::new();
    if matches!(a.suite, Suite::Kernels | Suite::All) {
        verdicts.extend(suites::kernel_suite(a.seed)?);
    }
    if matches!(a.suite, Suite::Gauss | Suite::All) {
        verdicts.extend(suites::gauss_jump(a.level)?);
    }
    if matches!(a.suite, Suite::Compatibility | Suite::All) {
        for m in [2, 3] {
            verdicts.push(suites::compatibility(a.level, m, a.seed)?);
        }
    }
    Ok(RunReport {
        config,
        mesh: None,
        solve: None,
        probes: vec![],
        convergence: None,
        verdicts,
        phases: Phases { setup_s: 0.0, run_s: t0.elapsed().as_secs_f64() },
        table: vec![],
    })
}

fn run_converge(a: &ConvergeArgs, config: serde_json::Value) -> Result<RunReport> {
    let t0 = Instant::now();
    if a.m == 0 {
        return Err(PolypotError::Config { field: "m".into(), message: "order must be at least 1".into() });
    }
    let sol = reference(&a.reference)?;
    if a.levels.is_empty() || a.levels.windows(2).any(|w| w[0] >= w[1]) || a.levels.iter().any(|&l| l > 5) {
        return Err(PolypotError::Config {
            field: "levels".into(),
            message: format!("levels must be strictly increasing and at most 5, got {:?}", a.levels),
        });
    }
    let opts = solver_options(&a.solver)?;
    let family = ProblemFamily::manufactured(a.kind.into(), sol, a.m);
    let rec = convergence_study(&family, &a.levels, &opts)?;
    let mut verdicts = Vec::new();
    for q in &rec.quantities {
        let last = *q.rel.last().expect("one level");
        verdicts.push(check(
            &format!("{} finest-level error", q.quantity),
            last <= a.tolerance,
            format!("rel err {last:.2e} (tolerance {:.1e})", a.tolerance),
        ));
        if a.levels.len() >= 2 && last > 1e-12 {
            let ok = q.fitted_order.is_some_and(|p| p >= a.min_order);
            verdicts.push(check(
                &format!("{} fitted order", q.quantity),
                ok,
                format!("order {:?} (minimum {})", q.fitted_order, a.min_order),
            ));
        }
    }
    let table = rec.rows.clone();
    Ok(RunReport {
        config,
        mesh: None,
        solve: None,
        probes: vec![],
        convergence: Some(rec),
        verdicts,
        phases: Phases { setup_s: 0.0, run_s: t0.elapsed().as_secs_f64() },
        table,
    })
}

/// Executes a parsed command line and writes its outputs.
pub fn run(cli: &Cli) -> Result<RunReport> {
    let config = serde_json::to_value(cli).expect("config serializes");
    let report = match &cli.command {
        Command::Solve(a) => run_solve(a, config)?,
        Command::Verify(a) => run_verify(a, config)?,
        Command::Converge(a) => run_converge(a, config)?,
        Command::MeshInfo { mesh } => {
            let m = MeshSource::parse(mesh)?.load()?;
            let stats = m.statistics();
            let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(&stats).expect("statistics serialize"));
            return Ok(RunReport {
                config,
                mesh: Some(stats),
                solve: None,
                probes: vec![],
                convergence: None,
                verdicts: vec![],
                phases: Phases::default(),
                table: vec![],
            });
        }
    };
    write_outputs(&cli.out, &report)?;
    Ok(report)
}

fn write_outputs(dir: &Path, report: &RunReport) -> Result<()> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| PolypotError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    if !report.table.is_empty() {
        let p = dir.join("table.csv");
        let mut f = std::fs::File::create(&p).map_err(io(&p))?;
        write_csv(&report.table, &mut f).map_err(io(&p))?;
    }
    let p = dir.join("report.json");
    let text = serde_json::to_string_pretty(report).expect("report serializes");
    std::fs::write(&p, text + "\n").map_err(io(&p))
}

fn init_threads(flag: Option<usize>) -> Result<()> {
    let threads = match std::env::var("POLYPOT_THREADS") {
        Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| PolypotError::Config {
            field: "POLYPOT_THREADS".into(),
            message: format!("`{v}` is not a thread count"),
        })?),
        Err(_) => flag,
    };
    if let Some(n) = threads {
        // a pool may already exist when called more than once in-process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Exit status for an error: 2 for bad input, 1 otherwise.
pub fn exit_code(e: &PolypotError) -> i32 {
    match e {
        PolypotError::Io { .. }
        | PolypotError::Parse { .. }
        | PolypotError::Config { .. }
        | PolypotError::IndexOutOfRange { .. }
        | PolypotError::DegenerateFace(_)
        | PolypotError::NonManifold(..)
        | PolypotError::Orientation(_)
        | PolypotError::LevelCap(_) => 2,
        _ => 1,
    }
}

/// Parses `args`, runs, prints verdicts and returns the exit status.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    if let Err(e) = init_threads(cli.threads) {
        eprintln!("error: {e}");
        return exit_code(&e);
    }
    match run(&cli) {
        Ok(report) => {
            for c in &report.verdicts {
                let _ = writeln!(std::io::stdout(), "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if report.passed() {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
