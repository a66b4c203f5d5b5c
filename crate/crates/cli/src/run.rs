//! Executes an [`ExperimentSpec`] and formats its results.

use std::fmt::Write as _;
use std::io::Write;

use fdcache_core::analytic::success_curve;
use fdcache_core::simulator::run_experiment;
use fdcache_core::{ExperimentReport, ModeProbabilities, OperatingMode, SimConfig, SuccessCurve};

use crate::error::CliError;
use crate::spec::{ExperimentSpec, ModelPoint};

/// CSV header, in output order.
pub const CSV_COLUMNS: [&str; 14] = [
    "theta_db",
    "theta_linear",
    "p_cache",
    "p_sir_analytic",
    "p_total_analytic",
    "p_total_sim",
    "ci_halfwidth",
    "n_users",
    "gamma_r",
    "radius",
    "alpha",
    "beta",
    "trials",
    "seed",
];

/// One CSV line. `None` cells are written empty.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub theta_db: f64,
    pub theta_linear: f64,
    pub p_cache: f64,
    pub p_sir_analytic: Option<f64>,
    pub p_total_analytic: Option<f64>,
    pub p_total_sim: Option<f64>,
    pub ci_halfwidth: Option<f64>,
    pub n_users: usize,
    pub gamma_r: f64,
    pub radius: f64,
    pub alpha: f64,
    pub beta: f64,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
}

impl Row {
    /// Shortest round-trip decimal forms, so output is byte-stable.
    fn cells(&self) -> [String; 14] {
        fn opt<T: ToString>(v: Option<T>) -> String {
            v.map(|x| x.to_string()).unwrap_or_default()
        }
        [
            self.theta_db.to_string(),
            self.theta_linear.to_string(),
            self.p_cache.to_string(),
            opt(self.p_sir_analytic),
            opt(self.p_total_analytic),
            opt(self.p_total_sim),
            opt(self.ci_halfwidth),
            self.n_users.to_string(),
            self.gamma_r.to_string(),
            self.radius.to_string(),
            self.alpha.to_string(),
            self.beta.to_string(),
            opt(self.trials),
            opt(self.seed),
        ]
    }
}

/// Results for one sweep point.
#[derive(Debug, Clone)]
pub struct PointResult {
    pub point: ModelPoint,
    pub modes: ModeProbabilities,
    pub hitting_probability: f64,
    pub analytic: Option<SuccessCurve>,
    pub simulated: Option<ExperimentReport>,
}

impl PointResult {
    /// Largest `|analytic − simulated|` over the grid, when both ran.
    pub fn max_gap(&self) -> Option<f64> {
        let (a, s) = (self.analytic.as_ref()?, self.simulated.as_ref()?);
        Some(
            a.p_total
                .iter()
                .zip(&s.curve.p_total)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max),
        )
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub points: Vec<PointResult>,
    pub rows: Vec<Row>,
}

/// Runs every sweep point in order. Each point is internally parallel.
pub fn execute(spec: &ExperimentSpec) -> Result<RunOutput, CliError> {
    let thetas_db = spec.theta_grid.points_db();
    let thetas = spec.theta_grid.points_linear();
    let mut points = Vec::new();
    let mut rows = Vec::new();

    for point in spec.points() {
        let cfg = point.to_config()?;
        log::info!("evaluating {point:?}");
        let analytic = if spec.mode.analytic() {
            Some(success_curve(&cfg, &thetas, &spec.quadrature)?)
        } else {
            None
        };
        let simulated = if spec.mode.simulate() {
            let sim = SimConfig::new(spec.trials, spec.seed)?;
            Some(run_experiment(&cfg, &sim, &thetas)?)
        } else {
            None
        };

        for (k, (&db, &lin)) in thetas_db.iter().zip(&thetas).enumerate() {
            let sim_curve = simulated.as_ref().map(|r| &r.curve);
            let p_cache = analytic
                .as_ref()
                .or(sim_curve)
                .map(|c| c.p_cache)
                .unwrap_or_default();
            rows.push(Row {
                theta_db: db,
                theta_linear: lin,
                p_cache,
                p_sir_analytic: analytic.as_ref().map(|c| c.p_sir[k]),
                p_total_analytic: analytic.as_ref().map(|c| c.p_total[k]),
                p_total_sim: sim_curve.map(|c| c.p_total[k]),
                ci_halfwidth: sim_curve
                    .and_then(|c| c.ci_halfwidth.as_ref())
                    .map(|v| v[k]),
                n_users: point.n_users,
                gamma_r: point.gamma_r,
                radius: point.radius,
                alpha: point.alpha,
                beta: point.beta,
                trials: simulated.as_ref().map(|_| spec.trials),
                seed: simulated.as_ref().map(|_| spec.seed),
            });
        }

        points.push(PointResult {
            point,
            modes: cfg.mode_probabilities(),
            hitting_probability: cfg.hitting_probability(),
            analytic,
            simulated,
        });
    }
    Ok(RunOutput { points, rows })
}

/// Writes the header and rows as CSV.
pub fn write_csv<W: Write>(rows: &[Row], writer: W) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    w.write_record(CSV_COLUMNS)?;
    for row in rows {
        w.write_record(row.cells())?;
    }
    w.flush()?;
    Ok(())
}

/// Human-readable summary: mode probabilities and `P_TX` per sweep point,
/// plus the analytic/simulated gap when both were computed.
pub fn render_summary(spec: &ExperimentSpec, output: &RunOutput) -> String {
    let mut s = String::new();
    for result in &output.points {
        let p = &result.point;
        let _ = writeln!(
            s,
            "N={} gamma_r={} R={} m={} alpha={} beta={} si={}",
            p.n_users,
            p.gamma_r,
            p.radius,
            p.library_size,
            p.alpha,
            p.beta,
            p.si_model.name()
        );
        let _ = writeln!(s, "  {:<8} {:>12}", "mode", "probability");
        for mode in OperatingMode::ALL {
            let _ = writeln!(s, "  {:<8} {:>12.6e}", mode.label(), result.modes.of(mode));
        }
        let _ = writeln!(s, "  {:<8} {:>12.6e}", "FDTR", result.modes.p_fdtr);
        let _ = writeln!(
            s,
            "  P_hit = {:.6}  P_TX = {:.6}",
            result.hitting_probability, result.modes.p_tx
        );
        if let Some(curve) = &result.analytic {
            if let Some(mass) = curve.retained_mass {
                if mass < 1.0 - 1e-9 {
                    let _ = writeln!(s, "  transmitter-count mass retained: {mass:.12}");
                }
            }
        }
        if let Some(gap) = result.max_gap() {
            let _ = writeln!(
                s,
                "  max |analytic - simulated| = {gap:.6} ({} trials)",
                spec.trials
            );
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::parse_args;

    fn spec(args: &[&str]) -> ExperimentSpec {
        parse_args(std::iter::once("fdcache").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn analytic_only_leaves_sim_cells_empty() {
        let s = spec(&[
            "--n-users",
            "4",
            "--radius",
            "20",
            "--zipf",
            "1",
            "--theta-db",
            "0:10:5",
        ]);
        let out = execute(&s).unwrap();
        assert_eq!(out.rows.len(), 3);
        let mut buf = Vec::new();
        write_csv(&out.rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_COLUMNS.join(","));
        let cells: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(cells.len(), 14);
        assert_eq!(cells[0], "0");
        assert_eq!(cells[1], "1");
        assert!(cells[5].is_empty() && cells[6].is_empty());
        assert!(cells[12].is_empty() && cells[13].is_empty());
        assert_eq!(cells[7], "4");
    }

    #[test]
    fn both_mode_fills_everything() {
        let s = spec(&[
            "--mode",
            "both",
            "--n-users",
            "3",
            "--radius",
            "20",
            "--zipf",
            "1",
            "--theta-db",
            "0:0:1",
            "--trials",
            "200",
            "--seed",
            "9",
            "--sweep",
            "beta=0,1e-3",
        ]);
        let out = execute(&s).unwrap();
        assert_eq!(out.rows.len(), 2);
        for row in &out.rows {
            assert!(row.p_total_sim.is_some() && row.p_total_analytic.is_some());
            assert_eq!(row.trials, Some(200));
            assert_eq!(row.seed, Some(9));
        }
        assert_eq!(out.rows[1].beta, 1e-3);
        let summary = render_summary(&s, &out);
        assert!(summary.contains("P_TX"));
        assert!(summary.contains("max |analytic - simulated|"));
        assert!(summary.contains("HDRX") || summary.contains("HD-RX"));
    }

    #[test]
    fn rows_are_ordered_by_point_then_theta() {
        let s = spec(&[
            "--radius",
            "20",
            "--zipf",
            "1",
            "--sweep",
            "n_users=2,3",
            "--theta-db",
            "-5:5:5",
        ]);
        let out = execute(&s).unwrap();
        let keys: Vec<(usize, f64)> = out.rows.iter().map(|r| (r.n_users, r.theta_db)).collect();
        assert_eq!(
            keys,
            vec![(2, -5.0), (2, 0.0), (2, 5.0), (3, -5.0), (3, 0.0), (3, 5.0)]
        );
    }
}
