use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use igabem_cli::*;

#[derive(Parser)]
#[command(name = "igabem", version, about = "Exterior Stokes flow by isogeometric collocation BEM")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mean errors of the two kernel identities on each mesh.
    VerifyIdentities(Common),
    /// Rotating sphere benchmark.
    BenchSphere(Common),
    /// Rising prolate spheroid benchmark.
    BenchSpheroid(Common),
    /// Velocity and pressure off the boundary, solved on the finest mesh.
    EvalInterior {
        #[command(flatten)]
        common: Common,
        /// CSV file of `x,y,z` target points (header optional).
        #[arg(long)]
        points: Option<PathBuf>,
    },
    /// Binary dump of the Dirichlet system on the finest mesh.
    DumpSystem(Common),
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// sphere, spheroid or spheroid:A,B
    #[arg(long)]
    geometry: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    degree: Option<i64>,
    /// Elements per direction; repeat or comma-separate for several meshes.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    mesh: Vec<i64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Integrate every collocation point in identity runs.
    #[arg(long)]
    no_symmetry: bool,
}

impl Common {
    fn resolve(&self, base: RunConfig) -> CliResult<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => base,
        };
        if let Some(g) = &self.geometry {
            cfg.geometry = Geometry::parse(g)?;
        }
        if let Some(d) = self.degree {
            cfg.degree = usize::try_from(d).map_err(|_| CliError::Config(format!("degree must be non-negative, got {d}")))?;
        }
        if !self.mesh.is_empty() {
            cfg.meshes = self
                .mesh
                .iter()
                .map(|&m| usize::try_from(m).map_err(|_| CliError::Config(format!("mesh sizes must be positive, got {m}"))))
                .collect::<CliResult<_>>()?;
        }
        if let Some(g) = self.gamma {
            cfg.gamma = g;
        }
        if let Some(t) = self.threads {
            cfg.threads = t;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        if self.no_symmetry {
            cfg.symmetry = false;
        }
        cfg.validate()?;
        if cfg.threads > 0 {
            rayon::ThreadPoolBuilder::new()
                .num_threads(cfg.threads)
                .build_global()
                .map_err(|e| CliError::Config(e.to_string()))?;
        }
        cfg.write_echo()?;
        Ok(cfg)
    }
}

fn read_points(path: &PathBuf) -> CliResult<Vec<[f64; 3]>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut pts = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let vals: Vec<_> = line.split(',').map(|s| s.trim().parse::<f64>()).collect();
        match vals.as_slice() {
            [Ok(x), Ok(y), Ok(z)] => pts.push([*x, *y, *z]),
            _ if k == 0 => {} // header
            _ => return Err(CliError::Config(format!("{}:{}: expected x,y,z", path.display(), k + 1))),
        }
    }
    Ok(pts)
}

fn run_benchmark(cfg: &RunConfig) -> CliResult<()> {
    let bench = Benchmark::for_config(cfg)?;
    let mut rows = Vec::new();
    for &mesh in &cfg.meshes {
        let row = bench_row(cfg, &bench, mesh)?;
        println!(
            "mesh {mesh}: dof {} e_L2 {:e} mean nodes {:.1} minimal share {:.1}% ({:.1} s)",
            row.dof,
            row.e_l2,
            row.stats.mean_points(),
            100.0 * minimal_share(&row.stats),
            row.seconds
        );
        rows.push(row);
    }
    let rate = if rows.len() >= 3 { Some(rate_of(&rows)?) } else { None };
    match rate {
        Some(r) => println!("convergence rate {r:.3}"),
        None => println!("convergence rate needs at least 3 meshes"),
    }
    convergence_csv(&rows, rate).write(&cfg.out.join("convergence.csv"))?;
    pointwise_csv(&rows).write(&cfg.out.join("pointwise_error.csv"))?;
    histogram_csv(&rows).write(&cfg.out.join("node_histogram.csv"))?;
    forces_csv(&rows, &bench).write(&cfg.out.join("forces.csv"))?;
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::VerifyIdentities(c) => {
            let cfg = c.resolve(RunConfig { degree: 0, meshes: vec![4, 8, 16, 32], ..Default::default() })?;
            let rows = identity_series(&cfg)?;
            for r in &rows {
                println!("mesh {}: dof {} e_sl {:e} e_dl {:e} mean nodes {:.1}", r.mesh, r.dof, r.e_sl, r.e_dl, r.mean_qp);
            }
            identities_csv(&rows).write(&cfg.out.join("identities.csv"))?;
            let sl: Vec<f64> = rows.iter().map(|r| r.e_sl).collect();
            let dl: Vec<f64> = rows.iter().map(|r| r.e_dl).collect();
            if !(strictly_decreasing(&sl) && strictly_decreasing(&dl)) {
                return Err(CliError::Check("identity errors do not decrease monotonically".into()));
            }
            Ok(())
        }
        Command::BenchSphere(c) => {
            let cfg = c.resolve(RunConfig::default())?;
            if cfg.geometry != Geometry::Sphere {
                return Err(CliError::Config("bench-sphere runs on the sphere only".into()));
            }
            run_benchmark(&cfg)
        }
        Command::BenchSpheroid(c) => {
            let cfg = c.resolve(RunConfig { geometry: Geometry::DEFAULT_SPHEROID, ..Default::default() })?;
            if !matches!(cfg.geometry, Geometry::Spheroid { .. }) {
                return Err(CliError::Config("bench-spheroid needs a spheroid geometry".into()));
            }
            run_benchmark(&cfg)
        }
        Command::EvalInterior { common, points } => {
            let mut base = RunConfig::default();
            if let Some(p) = &points {
                base.points = read_points(p)?;
            }
            let mut cfg = common.resolve(base)?;
            if let (Some(p), Some(_)) = (&points, &common.config) {
                cfg.points = read_points(p)?;
                cfg.write_echo()?;
            }
            let bench = Benchmark::for_config(&cfg)?;
            let mesh = *cfg.meshes.last().expect("validated non-empty");
            let sol = solve(&cfg, &bench, mesh)?;
            let values = interior_values(&cfg, &bench, &sol)?;
            for (y, u, p) in &values {
                println!("y = ({}, {}, {}): u = ({:e}, {:e}, {:e}), p = {:e}", y.x, y.y, y.z, u.x, u.y, u.z, p);
            }
            interior_csv(&values).write(&cfg.out.join("interior.csv"))
        }
        Command::DumpSystem(c) => {
            let cfg = c.resolve(RunConfig::default())?;
            let bench = Benchmark::for_config(&cfg)?;
            let mesh = *cfg.meshes.last().expect("validated non-empty");
            let path = cfg.out.join("system.bin");
            let h = dump_system(&cfg, &bench, mesh, &path)?;
            println!("wrote {}x{} system to {} (policy {})", h.rows, h.cols, path.display(), h.policy_hash);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("igabem: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
