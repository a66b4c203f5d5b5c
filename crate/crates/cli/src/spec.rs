//! Experiment description assembled from flags and an optional config file.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};

use fdcache_core::analytic::SelfInterference;
use fdcache_core::{db_to_linear, Level, ModelConfig, QuadratureSpec};

use crate::error::CliError;

pub const DEFAULT_LIBRARY_SIZE: usize = 1000;
pub const DEFAULT_ALPHA: f64 = 4.0;
pub const DEFAULT_BETA: f64 = 1e-5;
pub const DEFAULT_TRIALS: u64 = 100_000;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_THETA_DB: &str = "-10:30:1";
pub const DEFAULT_OUT: &str = "fdcache.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RunMode {
    Analytic,
    Simulate,
    Both,
}

impl RunMode {
    pub fn analytic(self) -> bool {
        matches!(self, RunMode::Analytic | RunMode::Both)
    }

    pub fn simulate(self) -> bool {
        matches!(self, RunMode::Simulate | RunMode::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SiModelArg {
    PerInterferer,
    Single,
}

impl From<SiModelArg> for SelfInterference {
    fn from(v: SiModelArg) -> Self {
        match v {
            SiModelArg::PerInterferer => SelfInterference::PerInterferer,
            SiModelArg::Single => SelfInterference::Single,
        }
    }
}

/// Success probability of cache-enabled full-duplex D2D networks: analytic
/// model, network simulation, or both.
#[derive(Debug, Parser)]
#[command(name = "fdcache", version)]
pub struct Cli {
    /// What to compute.
    #[arg(long, value_enum)]
    pub mode: Option<RunMode>,
    /// Number of users N.
    #[arg(long)]
    pub n_users: Option<usize>,
    /// Disk radius R in meters.
    #[arg(long)]
    pub radius: Option<f64>,
    /// Content library size m.
    #[arg(long)]
    pub library_size: Option<usize>,
    /// Zipf skew exponent.
    #[arg(long)]
    pub zipf: Option<f64>,
    /// Path-loss exponent (> 2).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Residual self-interference ratio in [0, 1].
    #[arg(long)]
    pub beta: Option<f64>,
    /// SIR threshold grid in dB, `start:stop:step`.
    #[arg(long, allow_hyphen_values = true)]
    pub theta_db: Option<String>,
    /// Sweep `param=v1,v2,...` over n_users, gamma_r, radius or beta; repeatable.
    #[arg(long)]
    pub sweep: Vec<String>,
    /// Monte Carlo trials.
    #[arg(long)]
    pub trials: Option<u64>,
    /// Master seed of the simulation.
    #[arg(long)]
    pub seed: Option<u64>,
    /// How self-interference scales with the number of interferers.
    #[arg(long, value_enum)]
    pub si_model: Option<SiModelArg>,
    /// Quadrature node overrides `level=k,...` for levels v, t, z0, angle, zi.
    #[arg(long)]
    pub quad_nodes: Option<String>,
    /// Output CSV path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Flat `key = value` file with defaults for any of the flags above.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Inclusive dB grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaGrid {
    pub start_db: f64,
    pub stop_db: f64,
    pub step_db: f64,
}

impl ThetaGrid {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let bad = || CliError::usage("--theta-db", format!("expected start:stop:step, got `{s}`"));
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, c] = parts.as_slice() else {
            return Err(bad());
        };
        let num = |x: &str| x.trim().parse::<f64>().map_err(|_| bad());
        let grid = ThetaGrid {
            start_db: num(a)?,
            stop_db: num(b)?,
            step_db: num(c)?,
        };
        if !(grid.start_db.is_finite() && grid.stop_db.is_finite()) {
            return Err(bad());
        }
        if !(grid.step_db > 0.0 && grid.step_db.is_finite()) {
            return Err(CliError::usage("--theta-db", "step must be positive"));
        }
        if grid.stop_db < grid.start_db {
            return Err(CliError::usage(
                "--theta-db",
                "stop must not be below start",
            ));
        }
        Ok(grid)
    }

    /// Grid points in dB; the stop value is included when the step divides
    /// the span.
    pub fn points_db(&self) -> Vec<f64> {
        let span = (self.stop_db - self.start_db) / self.step_db;
        let count = (span + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|i| {
                let x = self.start_db + i as f64 * self.step_db;
                (x * 1e9).round() / 1e9
            })
            .collect()
    }

    pub fn points_linear(&self) -> Vec<f64> {
        self.points_db().into_iter().map(db_to_linear).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SweepParam {
    NUsers,
    GammaR,
    Radius,
    Beta,
}

impl SweepParam {
    fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "n_users" | "n-users" => Some(SweepParam::NUsers),
            "gamma_r" | "zipf" => Some(SweepParam::GammaR),
            "radius" => Some(SweepParam::Radius),
            "beta" => Some(SweepParam::Beta),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::NUsers => "n_users",
            SweepParam::GammaR => "gamma_r",
            SweepParam::Radius => "radius",
            SweepParam::Beta => "beta",
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

impl Sweep {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let (name, values) = s.split_once('=').ok_or_else(|| {
            CliError::usage("--sweep", format!("expected param=v1,v2,..., got `{s}`"))
        })?;
        let param = SweepParam::parse(name).ok_or_else(|| {
            CliError::usage(
                "--sweep",
                format!("unknown parameter `{name}` (use n_users, gamma_r, radius or beta)"),
            )
        })?;
        let values = values
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| {
                        CliError::usage("--sweep", format!("bad value `{v}` for {param}"))
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        if param == SweepParam::NUsers && values.iter().any(|v| v.fract() != 0.0 || *v < 1.0) {
            return Err(CliError::usage(
                "--sweep",
                "n_users values must be positive integers",
            ));
        }
        Ok(Sweep { param, values })
    }
}

/// Scalar model parameters before validation into a [`ModelConfig`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelPoint {
    pub n_users: usize,
    pub gamma_r: f64,
    pub radius: f64,
    pub library_size: usize,
    pub alpha: f64,
    pub beta: f64,
    pub si_model: SelfInterference,
}

impl ModelPoint {
    pub fn to_config(&self) -> Result<ModelConfig, CliError> {
        if self.n_users > self.library_size {
            return Err(CliError::usage(
                "--n-users",
                format!(
                    "{} users exceed --library-size {}; every user caches a distinct content",
                    self.n_users, self.library_size
                ),
            ));
        }
        let cfg = ModelConfig::zipf(
            self.n_users,
            self.radius,
            self.library_size,
            self.gamma_r,
            self.alpha,
            self.beta,
        )
        .map_err(|e| CliError::usage(flag_for(&e), e.to_string()))?;
        let channel = cfg.channel().with_self_interference(self.si_model);
        Ok(cfg.with_channel(channel))
    }
}

fn flag_for(e: &fdcache_core::Error) -> &'static str {
    use fdcache_core::Error::*;
    match e {
        EmptyLibrary => "--library-size",
        InvalidSkew(_) => "--zipf",
        TooManyUsers { .. } | NoUsers => "--n-users",
        InvalidParameter { name, .. } => match *name {
            "radius" => "--radius",
            "alpha" => "--alpha",
            "beta" => "--beta",
            _ => "--config",
        },
        _ => "--config",
    }
}

/// Fully resolved experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub mode: RunMode,
    /// Base parameters; swept fields are overridden per sweep point.
    pub base: ModelPoint,
    pub trials: u64,
    pub seed: u64,
    pub theta_grid: ThetaGrid,
    pub sweep: Vec<Sweep>,
    pub quadrature: QuadratureSpec,
    pub output_path: PathBuf,
}

impl ExperimentSpec {
    /// Cartesian product of the sweeps, first sweep outermost.
    pub fn points(&self) -> Vec<ModelPoint> {
        let mut points = vec![self.base];
        for sweep in &self.sweep {
            points = points
                .into_iter()
                .flat_map(|p| {
                    sweep.values.iter().map(move |&v| {
                        let mut q = p;
                        match sweep.param {
                            SweepParam::NUsers => q.n_users = v as usize,
                            SweepParam::GammaR => q.gamma_r = v,
                            SweepParam::Radius => q.radius = v,
                            SweepParam::Beta => q.beta = v,
                        }
                        q
                    })
                })
                .collect();
        }
        points
    }
}

fn parse_quad_nodes(s: &str, mut spec: QuadratureSpec) -> Result<QuadratureSpec, CliError> {
    for item in s.split(',').filter(|x| !x.trim().is_empty()) {
        let (level, count) = item.split_once('=').ok_or_else(|| {
            CliError::usage("--quad-nodes", format!("expected level=k, got `{item}`"))
        })?;
        let level = Level::parse(level).ok_or_else(|| {
            CliError::usage(
                "--quad-nodes",
                format!("unknown level `{level}` (use v, t, z0, angle, zi)"),
            )
        })?;
        let count: usize = count
            .trim()
            .parse()
            .map_err(|_| CliError::usage("--quad-nodes", format!("bad node count `{count}`")))?;
        spec = spec
            .with_nodes(level, count)
            .map_err(|e| CliError::usage("--quad-nodes", e.to_string()))?;
    }
    Ok(spec)
}

/// Reads a flat `key = value` file; `#` starts a comment. Keys use the flag
/// names with either dashes or underscores; `sweep` may repeat.
pub fn read_config_file(text: &str) -> Result<BTreeMap<String, Vec<String>>, CliError> {
    const KEYS: &[&str] = &[
        "mode",
        "n_users",
        "radius",
        "library_size",
        "zipf",
        "gamma_r",
        "alpha",
        "beta",
        "theta_db",
        "sweep",
        "trials",
        "seed",
        "si_model",
        "quad_nodes",
        "out",
    ];
    let mut map: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::usage(
                "--config",
                format!("line {}: expected key = value", lineno + 1),
            )
        })?;
        let mut key = key.trim().replace('-', "_");
        if key == "gamma_r" {
            key = "zipf".to_string();
        }
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::usage(
                "--config",
                format!("line {}: unknown key `{key}`", lineno + 1),
            ));
        }
        map.entry(key).or_default().push(value.trim().to_string());
    }
    Ok(map)
}

fn from_file<T: std::str::FromStr>(
    file: &BTreeMap<String, Vec<String>>,
    key: &str,
    flag: &'static str,
) -> Result<Option<T>, CliError> {
    match file.get(key).and_then(|v| v.last()) {
        None => Ok(None),
        Some(v) => v
            .parse()
            .map(Some)
            .map_err(|_| CliError::usage(flag, format!("config value `{v}` is not valid"))),
    }
}

/// Parses command-line arguments (including the program name) into an
/// [`ExperimentSpec`]. Flags override values from `--config`.
pub fn parse_args<I, T>(argv: I) -> Result<ExperimentSpec, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)?;
    let file = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
            read_config_file(&text)?
        }
        None => BTreeMap::new(),
    };

    let mode = match cli.mode {
        Some(m) => m,
        None => match file.get("mode").and_then(|v| v.last()) {
            Some(v) => RunMode::from_str(v, true)
                .map_err(|_| CliError::usage("--mode", format!("unknown mode `{v}`")))?,
            None => RunMode::Analytic,
        },
    };
    let si_model = match cli.si_model {
        Some(m) => m.into(),
        None => match file.get("si_model").and_then(|v| v.last()) {
            Some(v) => SelfInterference::parse(v)
                .ok_or_else(|| CliError::usage("--si-model", format!("unknown model `{v}`")))?,
            None => SelfInterference::PerInterferer,
        },
    };

    let sweep_texts: Vec<String> = if cli.sweep.is_empty() {
        file.get("sweep").cloned().unwrap_or_default()
    } else {
        cli.sweep.clone()
    };
    let sweep = sweep_texts
        .iter()
        .map(|s| Sweep::parse(s))
        .collect::<Result<Vec<_>, _>>()?;
    let swept = |p: SweepParam| sweep.iter().any(|s| s.param == p);
    if let Some(dup) = sweep
        .iter()
        .enumerate()
        .find(|(i, s)| sweep[..*i].iter().any(|t| t.param == s.param))
    {
        return Err(CliError::usage(
            "--sweep",
            format!("{} swept twice", dup.1.param),
        ));
    }

    let n_users = cli.n_users.or(from_file(&file, "n_users", "--n-users")?);
    let radius = cli.radius.or(from_file(&file, "radius", "--radius")?);
    let gamma_r = cli.zipf.or(from_file(&file, "zipf", "--zipf")?);
    let require = |present: bool, param: SweepParam, flag: &'static str| {
        if present || swept(param) {
            Ok(())
        } else {
            Err(CliError::usage(
                flag,
                format!("missing required flag {flag}"),
            ))
        }
    };
    require(n_users.is_some(), SweepParam::NUsers, "--n-users")?;
    require(radius.is_some(), SweepParam::Radius, "--radius")?;
    require(gamma_r.is_some(), SweepParam::GammaR, "--zipf")?;

    let base = ModelPoint {
        n_users: n_users.unwrap_or(1),
        radius: radius.unwrap_or(1.0),
        gamma_r: gamma_r.unwrap_or(0.0),
        library_size: cli
            .library_size
            .or(from_file(&file, "library_size", "--library-size")?)
            .unwrap_or(DEFAULT_LIBRARY_SIZE),
        alpha: cli
            .alpha
            .or(from_file(&file, "alpha", "--alpha")?)
            .unwrap_or(DEFAULT_ALPHA),
        beta: cli
            .beta
            .or(from_file(&file, "beta", "--beta")?)
            .unwrap_or(DEFAULT_BETA),
        si_model,
    };

    let theta_text = cli
        .theta_db
        .clone()
        .or(file.get("theta_db").and_then(|v| v.last().cloned()))
        .unwrap_or_else(|| DEFAULT_THETA_DB.to_string());
    let theta_grid = ThetaGrid::parse(&theta_text)?;

    let trials = cli
        .trials
        .or(from_file(&file, "trials", "--trials")?)
        .unwrap_or(DEFAULT_TRIALS);
    if trials == 0 {
        return Err(CliError::usage(
            "--trials",
            "at least one trial is required",
        ));
    }
    let seed = cli
        .seed
        .or(from_file(&file, "seed", "--seed")?)
        .unwrap_or(DEFAULT_SEED);

    let mut quadrature = QuadratureSpec::default();
    if let Some(q) = file.get("quad_nodes").and_then(|v| v.last()) {
        quadrature = parse_quad_nodes(q, quadrature)?;
    }
    if let Some(q) = &cli.quad_nodes {
        quadrature = parse_quad_nodes(q, quadrature)?;
    }

    let output_path = cli
        .out
        .clone()
        .or(file.get("out").and_then(|v| v.last()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));

    let spec = ExperimentSpec {
        mode,
        base,
        trials,
        seed,
        theta_grid,
        sweep,
        quadrature,
        output_path,
    };
    // Surface N > m and out-of-range values before any work starts.
    for point in spec.points() {
        point.to_config()?;
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<ExperimentSpec, CliError> {
        parse_args(std::iter::once("fdcache").chain(args.iter().copied()))
    }

    #[test]
    fn single_point_run() {
        let spec = parse(&[
            "--mode",
            "analytic",
            "--n-users",
            "20",
            "--radius",
            "40",
            "--zipf",
            "0.8",
            "--theta-db",
            "-10:30:1",
        ])
        .unwrap();
        assert_eq!(spec.mode, RunMode::Analytic);
        assert_eq!(spec.base.n_users, 20);
        assert_eq!(spec.base.library_size, 1000);
        assert_eq!(spec.base.alpha, 4.0);
        assert_eq!(spec.base.beta, 1e-5);
        assert_eq!(spec.theta_grid.points_db().len(), 41);
        assert_eq!(spec.points().len(), 1);
    }

    #[test]
    fn user_count_sweep() {
        let spec = parse(&[
            "--sweep",
            "n_users=5,10,20,40",
            "--zipf",
            "1.2",
            "--radius",
            "30",
        ])
        .unwrap();
        let ns: Vec<usize> = spec.points().iter().map(|p| p.n_users).collect();
        assert_eq!(ns, vec![5, 10, 20, 40]);
    }

    #[test]
    fn missing_users_is_usage_error() {
        let err = parse(&["--radius", "30", "--zipf", "1.2"]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("--n-users"));
    }

    #[test]
    fn too_many_users() {
        let err = parse(&[
            "--n-users",
            "20",
            "--library-size",
            "10",
            "--radius",
            "30",
            "--zipf",
            "1",
        ])
        .unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("--n-users"), "{err}");
    }

    #[test]
    fn unknown_flag_and_bad_grid() {
        assert_eq!(parse(&["--frobnicate"]).unwrap_err().exit_code(), 2);
        for grid in ["1:2", "a:b:c", "0:10:0", "10:0:1", "0:10:-1"] {
            let err = parse(&[
                "--n-users",
                "5",
                "--radius",
                "30",
                "--zipf",
                "1",
                "--theta-db",
                grid,
            ])
            .unwrap_err();
            assert_eq!(err.exit_code(), 2);
            assert!(err.to_string().contains("--theta-db"), "{err}");
        }
    }

    #[test]
    fn grid_endpoints() {
        let g = ThetaGrid::parse("-10:30:2").unwrap();
        let pts = g.points_db();
        assert_eq!(pts.len(), 21);
        assert_eq!(pts[0], -10.0);
        assert_eq!(pts[20], 30.0);
        let g = ThetaGrid::parse("0:1:0.3").unwrap();
        assert_eq!(g.points_db(), vec![0.0, 0.3, 0.6, 0.9]);
        let g = ThetaGrid::parse("0:0.9:0.1").unwrap();
        assert_eq!(g.points_db().len(), 10);
    }

    #[test]
    fn sweep_parsing() {
        assert!(Sweep::parse("alpha=3,4").is_err());
        assert!(Sweep::parse("n_users=2.5").is_err());
        assert!(Sweep::parse("beta").is_err());
        let s = Sweep::parse("gamma_r=0.4,0.8,1.2").unwrap();
        assert_eq!(s.param, SweepParam::GammaR);
        assert_eq!(s.values, vec![0.4, 0.8, 1.2]);
        let spec = parse(&[
            "--n-users",
            "10",
            "--radius",
            "30",
            "--zipf",
            "1",
            "--sweep",
            "beta=0,1e-5",
            "--sweep",
            "radius=10,20,30",
        ])
        .unwrap();
        let pts = spec.points();
        assert_eq!(pts.len(), 6);
        assert_eq!((pts[0].beta, pts[0].radius), (0.0, 10.0));
        assert_eq!((pts[5].beta, pts[5].radius), (1e-5, 30.0));
    }

    #[test]
    fn quad_overrides() {
        let spec = parse(&[
            "--n-users",
            "10",
            "--radius",
            "30",
            "--zipf",
            "1",
            "--quad-nodes",
            "angle=48,zi=16",
        ])
        .unwrap();
        assert_eq!(spec.quadrature.nodes(Level::Angle), 48);
        assert_eq!(spec.quadrature.nodes(Level::Zi), 16);
        assert_eq!(spec.quadrature.nodes(Level::V), 24);
        let err = parse(&[
            "--n-users",
            "10",
            "--radius",
            "30",
            "--zipf",
            "1",
            "--quad-nodes",
            "q=4",
        ])
        .unwrap_err();
        assert!(err.to_string().contains("--quad-nodes"));
        let err = parse(&[
            "--n-users",
            "10",
            "--radius",
            "30",
            "--zipf",
            "1",
            "--quad-nodes",
            "v=2",
        ])
        .unwrap_err();
        assert!(err.to_string().contains("--quad-nodes"));
    }

    #[test]
    fn config_file_with_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(
            &path,
            "# user sweep\nmode = both\nn-users = 10\nradius = 30\nzipf = 1.2\ntrials = 500\nsweep = n_users=5,10\n",
        )
        .unwrap();
        let spec = parse(&["--config", path.to_str().unwrap(), "--trials", "700"]).unwrap();
        assert_eq!(spec.mode, RunMode::Both);
        assert_eq!(spec.trials, 700);
        assert_eq!(spec.base.radius, 30.0);
        assert_eq!(spec.points().len(), 2);

        std::fs::write(&path, "colour = blue\n").unwrap();
        let err = parse(&["--config", path.to_str().unwrap()]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let err = parse(&["--config", dir.path().join("missing").to_str().unwrap()]).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }
}
