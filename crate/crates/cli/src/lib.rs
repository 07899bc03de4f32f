//! Experiment drivers behind the `igabem` command line tool.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use igabem::assembly::{
    assemble_dirichlet, collocation_points, cube_symmetries, point_orbits, policy_hash, verify_identities, write_dump,
    CollocationSet, Discretization, DumpHeader,
};
use igabem::geometry::{spheroid, spheroid_area, unit_sphere, MultipatchSurface, Vec3};
use igabem::postprocess::{
    analytic_traction_sphere, convergence_rate, eval_interior, l2_error, net_force_torque, Normalization,
    SplineVectorField, SpheroidFlow,
};
use igabem::quadrature::{QuadStats, QuadratureRule};

/// Failures of a command, each mapped to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Solver(igabem::Error),
    #[error(transparent)]
    Run(igabem::Error),
    #[error("check failed: {0}")]
    Check(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Run(_) | CliError::Check(_) => 1,
        }
    }
}

impl From<igabem::Error> for CliError {
    fn from(e: igabem::Error) -> Self {
        match e {
            igabem::Error::Solver(_) => CliError::Solver(e),
            e => CliError::Run(e),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Run(e.into())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Geometry {
    Sphere,
    Spheroid { a: f64, b: f64 },
}

impl Geometry {
    pub const DEFAULT_SPHEROID: Geometry = Geometry::Spheroid { a: 1.5, b: 1.0 };

    /// Parses `sphere`, `spheroid` or `spheroid:A,B`.
    pub fn parse(s: &str) -> CliResult<Self> {
        let bad = || CliError::Config(format!("unknown geometry '{s}' (expected sphere, spheroid or spheroid:A,B)"));
        match s {
            "sphere" => Ok(Geometry::Sphere),
            "spheroid" => Ok(Self::DEFAULT_SPHEROID),
            _ => {
                let rest = s.strip_prefix("spheroid:").ok_or_else(bad)?;
                let (a, b) = rest.split_once(',').ok_or_else(bad)?;
                let a = a.trim().parse().map_err(|_| bad())?;
                let b = b.trim().parse().map_err(|_| bad())?;
                Ok(Geometry::Spheroid { a, b })
            }
        }
    }

    pub fn surface(&self) -> CliResult<MultipatchSurface> {
        Ok(match *self {
            Geometry::Sphere => unit_sphere()?,
            Geometry::Spheroid { a, b } => spheroid(a, b)?,
        })
    }
}

/// Resolved settings of a run; echoed to `run_config.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: Geometry,
    pub degree: usize,
    /// Elements per direction on every patch, one entry per mesh.
    pub meshes: Vec<usize>,
    pub gamma: f64,
    pub alpha_extra_max: usize,
    pub eta: f64,
    pub omega: f64,
    pub out: PathBuf,
    /// Worker threads; 0 lets the runtime decide.
    pub threads: usize,
    /// Integrate only one collocation point per symmetry orbit in identity runs.
    pub symmetry: bool,
    /// Target points for `eval-interior`.
    pub points: Vec<[f64; 3]>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            geometry: Geometry::Sphere,
            degree: 2,
            meshes: vec![4, 6, 8, 10],
            gamma: 8.0,
            alpha_extra_max: 60,
            eta: 1.0,
            omega: 1.0,
            out: PathBuf::from("out"),
            threads: 0,
            symmetry: true,
            points: vec![[2.0, 0.0, 0.0], [0.0, 3.0, 1.0], [100.0, 0.0, 0.0]],
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> CliResult<()> {
        let fail = |m: String| Err(CliError::Config(m));
        if self.meshes.is_empty() {
            return fail("mesh list is empty".into());
        }
        if self.meshes.windows(2).any(|w| w[0] >= w[1]) || self.meshes[0] == 0 {
            return fail(format!("mesh list must be positive and strictly ascending, got {:?}", self.meshes));
        }
        if !(self.gamma >= 1.0) {
            return fail(format!("gamma must be at least 1, got {}", self.gamma));
        }
        if !(self.eta > 0.0) || !self.omega.is_finite() {
            return fail(format!("need eta > 0 and finite omega, got {} and {}", self.eta, self.omega));
        }
        if let Geometry::Spheroid { a, b } = self.geometry {
            if !(a > b && b > 0.0) {
                return fail(format!("spheroid needs a > b > 0, got a={a}, b={b}"));
            }
        }
        Ok(())
    }

    pub fn write_echo(&self) -> CliResult<()> {
        fs::create_dir_all(&self.out)?;
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::Run(e.into()))?;
        fs::write(self.out.join("run_config.json"), text + "\n")?;
        Ok(())
    }
}

/// Discretization, collocation points and quadrature rule of one mesh.
pub fn setup(cfg: &RunConfig, mesh: usize) -> CliResult<(Discretization, CollocationSet, QuadratureRule)> {
    let disc = Discretization::uniform(cfg.geometry.surface()?, cfg.degree, mesh)?;
    let colloc = collocation_points(&disc)?;
    let rule = disc.rule(cfg.gamma, cfg.alpha_extra_max)?;
    Ok((disc, colloc, rule))
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityRow {
    pub mesh: usize,
    pub dof: usize,
    pub mean_qp: f64,
    pub e_sl: f64,
    pub e_dl: f64,
    /// Collocation points actually integrated.
    pub evaluated: usize,
}

/// Identity errors on every mesh of the config.
pub fn identity_series(cfg: &RunConfig) -> CliResult<Vec<IdentityRow>> {
    let mut rows = Vec::new();
    for &mesh in &cfg.meshes {
        let (disc, colloc, rule) = setup(cfg, mesh)?;
        let orbits = if cfg.symmetry { Some(point_orbits(&colloc, &cube_symmetries(), 1e-12)?) } else { None };
        let rep = verify_identities(&disc, &colloc, &rule, orbits.as_ref())?;
        rows.push(IdentityRow {
            mesh,
            dof: disc.dof(),
            mean_qp: rep.mean_points,
            e_sl: rep.e_sl,
            e_dl: rep.e_dl,
            evaluated: rep.per_point.len(),
        });
    }
    Ok(rows)
}

pub fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

/// The closed-form flow a benchmark is measured against.
#[derive(Debug, Clone, Copy)]
pub enum Benchmark {
    RotatingSphere { eta: f64, omega: f64 },
    RisingSpheroid(SpheroidFlow),
}

impl Benchmark {
    pub fn for_config(cfg: &RunConfig) -> CliResult<Self> {
        Ok(match cfg.geometry {
            Geometry::Sphere => Benchmark::RotatingSphere { eta: cfg.eta, omega: cfg.omega },
            Geometry::Spheroid { a, b } => Benchmark::RisingSpheroid(SpheroidFlow::new(a, b, cfg.eta, cfg.omega)?),
        })
    }

    pub fn velocity(&self, x: &Vec3) -> Vec3 {
        match self {
            Benchmark::RotatingSphere { omega, .. } => Vec3::z().cross(x) * *omega,
            Benchmark::RisingSpheroid(f) => f.velocity(),
        }
    }

    pub fn traction(&self, x: &Vec3) -> igabem::Result<Vec3> {
        match self {
            Benchmark::RotatingSphere { eta, omega } => analytic_traction_sphere(x, *eta, *omega, 1.0),
            Benchmark::RisingSpheroid(f) => f.traction(x),
        }
    }

    pub fn normalization(&self) -> Normalization {
        match self {
            Benchmark::RotatingSphere { eta, omega } => Normalization::Max(3.0 * eta * omega.abs()),
            Benchmark::RisingSpheroid(_) => Normalization::Pointwise,
        }
    }

    pub fn area(&self) -> f64 {
        match self {
            Benchmark::RotatingSphere { .. } => 4.0 * PI,
            Benchmark::RisingSpheroid(f) => spheroid_area(f.a, f.b),
        }
    }

    /// Exact net force and torque.
    pub fn functionals(&self) -> (Vec3, Vec3) {
        match self {
            Benchmark::RotatingSphere { eta, omega } => (Vec3::zeros(), Vec3::new(0.0, 0.0, -8.0 * PI * eta * omega)),
            Benchmark::RisingSpheroid(f) => (Vec3::new(0.0, 0.0, f.f3()), Vec3::zeros()),
        }
    }
}

/// A solved Dirichlet problem on one mesh.
pub struct Solution {
    pub disc: Discretization,
    pub rule: QuadratureRule,
    pub traction: SplineVectorField,
    pub stats: QuadStats,
}

pub fn solve(cfg: &RunConfig, bench: &Benchmark, mesh: usize) -> CliResult<Solution> {
    let (disc, colloc, rule) = setup(cfg, mesh)?;
    let datum = |x: &Vec3| bench.velocity(x);
    let mut sys = assemble_dirichlet(&disc, &colloc, &rule, &datum, cfg.eta)?;
    let tau = sys.solve()?.clone();
    let traction = SplineVectorField::new(&disc, tau)?;
    Ok(Solution { disc, rule, traction, stats: sys.stats })
}

#[derive(Debug, Clone)]
pub struct BenchRow {
    pub mesh: usize,
    pub dof: usize,
    pub e_l2: f64,
    pub stats: QuadStats,
    pub force: Vec3,
    pub torque: Vec3,
    /// `(patch, u, v, e_t)`.
    pub samples: Vec<(usize, f64, f64, f64)>,
    pub seconds: f64,
}

pub const SAMPLES_PER_DIR: usize = 21;

pub fn bench_row(cfg: &RunConfig, bench: &Benchmark, mesh: usize) -> CliResult<BenchRow> {
    let start = Instant::now();
    let sol = solve(cfg, bench, mesh)?;
    let exact = |x: &Vec3| bench.traction(x);
    let rep = l2_error(&sol.disc, &sol.traction, &exact, bench.normalization(), Some(bench.area()), SAMPLES_PER_DIR)?;
    let (force, torque) = net_force_torque(&sol.disc, &sol.traction)?;
    Ok(BenchRow {
        mesh,
        dof: sol.disc.dof(),
        e_l2: rep.e_l2,
        stats: sol.stats,
        force,
        torque,
        samples: rep.samples,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Least-squares rate of `e_L2` against the scalar dof count.
pub fn rate_of(rows: &[BenchRow]) -> CliResult<f64> {
    Ok(convergence_rate(&rows.iter().map(|r| (r.dof, r.e_l2)).collect::<Vec<_>>())?)
}

/// Share of non-singular support integrals at the smallest node count.
pub fn minimal_share(stats: &QuadStats) -> f64 {
    let total: u64 = stats.histogram.values().sum();
    stats.histogram.values().next().map_or(0.0, |&c| c as f64 / total.max(1) as f64)
}

/// Histogram counts never grow with the node count, from the minimum upwards.
/// Node counts between the smallest and largest with no integrals count as
/// empty bins.
pub fn histogram_non_increasing(stats: &QuadStats) -> bool {
    let (Some((&lo, _)), Some((&hi, _))) = (stats.histogram.first_key_value(), stats.histogram.last_key_value()) else {
        return true;
    };
    let counts: Vec<u64> = (lo..=hi).map(|n| stats.histogram.get(&n).copied().unwrap_or(0)).collect();
    counts.windows(2).all(|w| w[1] <= w[0])
}

pub fn interior_values(cfg: &RunConfig, bench: &Benchmark, sol: &Solution) -> CliResult<Vec<(Vec3, Vec3, f64)>> {
    let datum = |x: &Vec3| bench.velocity(x);
    let mut out = Vec::new();
    for p in &cfg.points {
        let y = Vec3::new(p[0], p[1], p[2]);
        let (u, pr) = match eval_interior(&sol.disc, &sol.traction, &datum, &y, cfg.eta, &sol.rule) {
            Err(igabem::Error::TooClose(d)) => {
                return Err(CliError::Config(format!(
                    "point ({}, {}, {}) is {d:e} from the boundary; evaluation on or near the surface is refused",
                    p[0], p[1], p[2]
                )))
            }
            r => r?,
        };
        out.push((y, u, pr));
    }
    Ok(out)
}

pub fn dump_system(cfg: &RunConfig, bench: &Benchmark, mesh: usize, path: &Path) -> CliResult<DumpHeader> {
    let (disc, colloc, rule) = setup(cfg, mesh)?;
    let datum = |x: &Vec3| bench.velocity(x);
    let sys = assemble_dirichlet(&disc, &colloc, &rule, &datum, cfg.eta)?;
    let header = DumpHeader {
        rows: sys.s.nrows(),
        cols: sys.s.ncols(),
        degree: cfg.degree,
        mesh,
        policy_hash: policy_hash(&rule),
    };
    write_dump(path, &header, &sys.s, &sys.rhs())?;
    Ok(header)
}

/// CSV text; `f64` values use Rust's shortest round-trip formatting.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self { text: header.join(",") + "\n" }
    }

    pub fn row(&mut self, fields: &[&dyn std::fmt::Display]) {
        for (k, f) in fields.iter().enumerate() {
            if k > 0 {
                self.text.push(',');
            }
            let _ = write!(self.text, "{f}");
        }
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        fs::write(path, &self.text)?;
        Ok(())
    }
}

pub fn identities_csv(rows: &[IdentityRow]) -> Csv {
    let mut csv = Csv::new(&["mesh", "dof", "mean_qp", "e_sl", "e_dl"]);
    for r in rows {
        csv.row(&[&r.mesh, &r.dof, &r.mean_qp, &r.e_sl, &r.e_dl]);
    }
    csv
}

pub fn convergence_csv(rows: &[BenchRow], rate: Option<f64>) -> Csv {
    let mut csv = Csv::new(&["mesh", "dof", "e_l2", "mean_qp", "rate"]);
    let rate = rate.map_or(String::new(), |r| r.to_string());
    for r in rows {
        csv.row(&[&r.mesh, &r.dof, &r.e_l2, &r.stats.mean_points(), &rate]);
    }
    csv
}

pub fn pointwise_csv(rows: &[BenchRow]) -> Csv {
    let mut csv = Csv::new(&["mesh", "patch", "u", "v", "e_t"]);
    for r in rows {
        for (p, u, v, e) in &r.samples {
            csv.row(&[&r.mesh, p, u, v, e]);
        }
    }
    csv
}

pub fn histogram_csv(rows: &[BenchRow]) -> Csv {
    let mut csv = Csv::new(&["mesh", "nodes", "count", "percent"]);
    for r in rows {
        for (n, c, pct) in r.stats.histogram_rows() {
            csv.row(&[&r.mesh, &n, &c, &pct]);
        }
    }
    csv
}

pub fn forces_csv(rows: &[BenchRow], bench: &Benchmark) -> Csv {
    let (f0, t0) = bench.functionals();
    let mut csv = Csv::new(&["mesh", "fx", "fy", "fz", "tx", "ty", "tz", "force_rel_err", "torque_rel_err"]);
    let scale = f0.norm().max(t0.norm());
    for r in rows {
        let fe = (r.force - f0).norm() / scale;
        let te = (r.torque - t0).norm() / scale;
        csv.row(&[&r.mesh, &r.force.x, &r.force.y, &r.force.z, &r.torque.x, &r.torque.y, &r.torque.z, &fe, &te]);
    }
    csv
}

pub fn interior_csv(values: &[(Vec3, Vec3, f64)]) -> Csv {
    let mut csv = Csv::new(&["x", "y", "z", "u1", "u2", "u3", "p"]);
    for (y, u, p) in values {
        csv.row(&[&y.x, &y.y, &y.z, &u.x, &u.y, &u.z, p]);
    }
    csv
}
