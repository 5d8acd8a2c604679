//! Scenario execution and file export.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::dynamics::{
    evaluate_objective_general, mild_solve, uniform_times, ControlSignal, ModelParams, PointwiseRule, Trajectory,
};
use crate::error::{Error, Result};
use crate::grid::{fmt_real, GridField};
use crate::lq_indefinite::{coercivity_constant, synthesize_p1, RiccatiModeSolution};
use crate::lq_targeting::{evaluate_j_h, project_target, sweep_uniform_targets, synthesize_p2, to_tracking_frame};
use crate::maximum_principle::{
    solve_budget_constrained, strategy_linear_reward_linear_cost, strategy_linear_reward_quadratic_cost,
    switching_time, DualArc,
};
use crate::scenario::{load_grid, ProblemKind, ScenarioConfig};
use crate::spectral::{Quadrature, SpectralField};
use crate::verification::{dp_refinement, fd_solve, gateaux_gradient_norm, relative_l2_error, ScalarLQInstance};

/// Spectral-vs-FD discrepancy accepted by the verify run.
pub const FD_TOLERANCE: f64 = 1e-3;
/// DP cross-check tolerance, relative.
pub const DP_TOLERANCE: f64 = 1e-6;

/// Summary of a completed run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub scenario: String,
    pub problem: ProblemKind,
    /// Named scalar results in insertion order.
    pub values: Vec<(String, f64)>,
    /// Free-form diagnostic lines (tables, oracle deltas, warnings).
    pub diagnostics: Vec<String>,
    /// Files written, relative to the output directory.
    pub files: Vec<PathBuf>,
    pub output_dir: PathBuf,
}

impl RunReport {
    fn new(cfg: &ScenarioConfig, output_dir: PathBuf) -> Self {
        Self {
            scenario: cfg.name.clone(),
            problem: cfg.problem,
            values: Vec::new(),
            diagnostics: Vec::new(),
            files: Vec::new(),
            output_dir,
        }
    }

    fn value(&mut self, key: &str, v: f64) {
        self.values.push((key.to_string(), v));
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.values.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "scenario = {}", self.scenario);
        let _ = writeln!(s, "problem = {}", self.problem);
        for (k, v) in &self.values {
            let _ = writeln!(s, "{k} = {}", fmt_real(*v));
        }
        if !self.diagnostics.is_empty() {
            s.push('\n');
            for d in &self.diagnostics {
                let _ = writeln!(s, "{d}");
            }
        }
        s.push_str("\nfiles:\n");
        for f in &self.files {
            let _ = writeln!(s, "  {}", f.display());
        }
        s
    }
}

/// Files produced by a run, written only after every solve succeeded.
#[derive(Default)]
struct Exports {
    files: Vec<(String, String)>,
}

impl Exports {
    fn add(&mut self, name: impl Into<String>, contents: String) {
        self.files.push((name.into(), contents));
    }

    fn trajectory(&mut self, traj: &Trajectory) {
        self.add("trajectory.csv", traj.to_csv());
    }

    fn control(&mut self, u: &ControlSignal, cfg: &ScenarioConfig) -> Result<()> {
        let csv = match u.to_mode_csv() {
            Some(csv) => csv,
            None => {
                let n = cfg.grid_resolution.min(21);
                u.to_pointwise_csv(&cfg.domain, cfg.time_steps.min(50), n, n)?
            }
        };
        self.add("control.csv", csv);
        Ok(())
    }

    fn snapshots(&mut self, traj: &Trajectory, cfg: &ScenarioConfig) -> Result<()> {
        for &t in &cfg.snapshots {
            let j = nearest(&traj.times, t);
            let g = GridField::from_spectral(&traj.states[j], cfg.grid_resolution, cfg.grid_resolution)?;
            self.add(format!("field_t{:.4}.grid", traj.times[j]), g.to_dump());
        }
        Ok(())
    }

    /// Write every file to a temporary name, then rename into place.
    fn commit(self, dir: &Path, report: &mut RunReport) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut staged = Vec::with_capacity(self.files.len() + 1);
        let mut files = self.files;
        report.files = files.iter().map(|(n, _)| PathBuf::from(n)).collect();
        report.files.push(PathBuf::from("report.txt"));
        files.push(("report.txt".into(), report.render()));
        for (name, contents) in &files {
            let tmp = dir.join(format!(".{name}.tmp"));
            if let Err(e) = fs::write(&tmp, contents) {
                for t in &staged {
                    let _ = fs::remove_file(t);
                }
                let _ = fs::remove_file(&tmp);
                return Err(Error::io(&tmp, e));
            }
            staged.push(tmp);
        }
        for ((name, _), tmp) in files.iter().zip(&staged) {
            let dest = dir.join(name);
            fs::rename(tmp, &dest).map_err(|e| Error::io(&dest, e))?;
        }
        Ok(())
    }
}

fn nearest(times: &[f64], t: f64) -> usize {
    times
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
        .map_or(0, |(i, _)| i)
}

/// Execute a scenario; `out` and `seed` override the config when given.
pub fn run(cfg: &ScenarioConfig, out: Option<&Path>, seed: Option<u64>) -> Result<RunReport> {
    let dir = out.map_or_else(|| resolve(cfg, &cfg.output_dir), Path::to_path_buf);
    let mut cfg = cfg.clone();
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let wrap = |e: Error| Error::Scenario {
        scenario: cfg.name.clone(),
        source: Box::new(e),
    };
    let mut report = RunReport::new(&cfg, dir.clone());
    let mut exports = Exports::default();
    execute(&cfg, &mut report, &mut exports).map_err(wrap)?;
    exports.commit(&dir, &mut report).map_err(wrap)?;
    log::info!("{} written to {}", cfg.problem, dir.display());
    Ok(report)
}

fn resolve(cfg: &ScenarioConfig, p: &Path) -> PathBuf {
    match &cfg.base_dir {
        Some(b) if p.is_relative() => b.join(p),
        _ => p.to_path_buf(),
    }
}

fn objective_rules(params: &ModelParams, linear_cost: bool) -> (PointwiseRule, PointwiseRule) {
    let phi0 = PointwiseRule::Linear { slope: 1.0 };
    let h0 = match (linear_cost, params.cap.is_finite()) {
        (true, _) => PointwiseRule::CappedLinear {
            slope: 1.0,
            cap: params.cap,
        },
        (false, true) => PointwiseRule::CappedQuadratic {
            weight: 0.5,
            cap: params.cap,
        },
        (false, false) => PointwiseRule::Quadratic { weight: 0.5 },
    };
    (phi0, h0)
}

fn target_field(cfg: &ScenarioConfig, report: &mut RunReport) -> Result<SpectralField> {
    let spec = cfg
        .target
        .as_ref()
        .ok_or_else(|| Error::config("this problem needs a [target] section"))?;
    if let Some(path) = &spec.grid_file {
        let grid = load_grid(path, cfg.base_dir.as_deref())?;
        let projected = project_target(&grid, &cfg.domain)?;
        report.value("target_tail_fraction", projected.tail_fraction);
        return Ok(projected.field);
    }
    spec.to_field(&cfg.domain, cfg.base_dir.as_deref())
}

fn execute(cfg: &ScenarioConfig, report: &mut RunReport, ex: &mut Exports) -> Result<()> {
    let params = cfg.model_params()?;
    params.validate()?;
    let times = uniform_times(params.horizon, cfg.time_steps);
    match cfg.problem {
        ProblemKind::Simulate => {
            let u = ControlSignal::stationary(&cfg.control.to_field(&cfg.domain, cfg.base_dir.as_deref())?, times.clone())?;
            let traj = mild_solve(&params, &u, &times)?;
            report.value("total_goodwill_T", traj.final_state().integral());
            report.value("energy", u.energy(&Quadrature::new(&cfg.domain))?);
            ex.trajectory(&traj);
            ex.control(&u, cfg)?;
            ex.snapshots(&traj, cfg)?;
        }
        ProblemKind::MpQuadratic | ProblemKind::MpLinear => {
            let linear = cfg.problem == ProblemKind::MpLinear;
            let u = if linear {
                strategy_linear_reward_linear_cost(&params, &DualArc::from_params(&params), times.clone())?
            } else {
                strategy_linear_reward_quadratic_cost(&params, times.clone())?
            };
            let traj = mild_solve(&params, &u, &times)?;
            let (phi0, h0) = objective_rules(&params, linear);
            report.value("objective", evaluate_objective_general(&params, &traj, &u, phi0, h0)?);
            report.value("total_goodwill_T", traj.final_state().integral());
            if linear {
                if let Some(b) = params.effectiveness.constant_value() {
                    match switching_time(b, params.rho, params.horizon) {
                        Some(t) => report.value("switching_time", t),
                        None => report.diagnostics.push("no switch: effort is zero on the whole horizon".into()),
                    }
                }
            }
            ex.trajectory(&traj);
            ex.control(&u, cfg)?;
            ex.snapshots(&traj, cfg)?;
        }
        ProblemKind::Budget => {
            let budget = cfg.budget.ok_or_else(|| Error::config("budget missing"))?;
            let sol = solve_budget_constrained(&params, budget, times.clone())?;
            let traj = mild_solve(&params, &sol.control, &times)?;
            report.value("lambda", sol.lambda);
            report.value("budget", budget);
            report.value("energy", sol.control.energy(&Quadrature::new(&cfg.domain))?);
            report.value("total_goodwill_T", traj.final_state().integral());
            ex.trajectory(&traj);
            ex.control(&sol.control, cfg)?;
            ex.snapshots(&traj, cfg)?;
        }
        ProblemKind::P1 => {
            let sol = synthesize_p1(&params, &times)?;
            report.value("margin", sol.margin);
            report.value("value", sol.value);
            report.diagnostics.push("m,n,mu_k,C_k,p_k(T)".into());
            for r in &sol.modes {
                report.diagnostics.push(format!(
                    "{},{},{},{},{}",
                    r.mode.m,
                    r.mode.n,
                    fmt_real(r.mu),
                    fmt_real(r.constant),
                    fmt_real(r.p_at_horizon)
                ));
            }
            ex.trajectory(&sol.trajectory);
            ex.control(&sol.control, cfg)?;
            ex.snapshots(&sol.trajectory, cfg)?;
        }
        ProblemKind::P2 => {
            let target = target_field(cfg, report)?;
            let sol = synthesize_p2(&params, &target, &times)?;
            report.value("value_formula", sol.value_formula);
            report.value("value_direct", sol.value_direct);
            report.value("terminal_miss", sol.terminal_miss());
            report.diagnostics.push("m,n,p_k(T),r_k(0)".into());
            for r in &sol.modes {
                report.diagnostics.push(format!(
                    "{},{},{},{}",
                    r.mode.m,
                    r.mode.n,
                    fmt_real(r.p_at_horizon),
                    fmt_real(r.r_at_zero)
                ));
            }
            ex.trajectory(&sol.x_trajectory);
            ex.control(&sol.control, cfg)?;
            ex.snapshots(&sol.x_trajectory, cfg)?;
        }
        ProblemKind::P2Sweep => {
            let rows = sweep_uniform_targets(&params, &cfg.levels, &times)?;
            let mut csv = String::from("k0,value,terminal_miss\n");
            for r in &rows {
                let _ = writeln!(csv, "{},{},{}", fmt_real(r.k0), fmt_real(r.value), fmt_real(r.terminal_miss));
            }
            report.value("levels", rows.len() as f64);
            ex.add("sweep.csv", csv);
        }
        ProblemKind::Verify => verify(cfg, &params, &times, report, ex)?,
    }
    Ok(())
}

fn verify(
    cfg: &ScenarioConfig,
    params: &ModelParams,
    times: &[f64],
    report: &mut RunReport,
    ex: &mut Exports,
) -> Result<()> {
    let control = cfg.control.to_field(&cfg.domain, cfg.base_dir.as_deref())?;
    let u = ControlSignal::stationary(&control, times.to_vec())?;
    let traj = mild_solve(params, &u, times)?;
    let fd = fd_solve(params, &u, cfg.fd_nx, cfg.fd_ny, cfg.fd_steps)?;
    let (_, last) = fd.last().expect("fd output");
    let fd_err = relative_l2_error(last, traj.final_state())?;
    report.value("fd_relative_l2_error", fd_err);
    report.diagnostics.push(format!(
        "fd check: {} (tolerance {FD_TOLERANCE})",
        if fd_err <= FD_TOLERANCE { "pass" } else { "FAIL" }
    ));
    ex.add(format!("field_t{:.4}.grid", params.horizon), last.to_dump());

    // per-mode DP cross-checks, restricted to the lowest modes
    let identity_b = params.effectiveness.constant_value() == Some(1.0);
    if !identity_b {
        report.diagnostics.push("dp checks skipped: effectiveness is not identically one".into());
        return Ok(());
    }
    let target = match &cfg.target {
        Some(_) => target_field(cfg, report)?,
        None => SpectralField::zeros(&cfg.domain),
    };
    let (y0, f) = to_tracking_frame(params, &target)?;
    let p2 = synthesize_p2(params, &target, times)?;
    let c = coercivity_constant(params.rho, params.horizon);
    let p1_ok = 1.0 - params.gamma * c > 0.0;
    let mut csv = String::from("problem,m,n,closed_form,dp_extrapolated,relative_delta\n");
    let mut worst: f64 = 0.0;
    for (k, idx) in cfg.domain.modes().enumerate().take(4) {
        let mu = params.mode_rate(idx);
        let adj = &p2.adjoints[k];
        let closed = p2.modes[k].p_at_horizon * y0.coeffs[k] * y0.coeffs[k]
            + 2.0 * p2.modes[k].r_at_zero * y0.coeffs[k]
            + adj.cost_integral();
        let inst = ScalarLQInstance {
            a: -mu,
            terminal_weight: params.gamma,
            target: 0.0,
            f: f.coeffs[k],
            horizon: params.horizon,
            steps: 0,
            x0: y0.coeffs[k],
        };
        let (_, dp) = dp_refinement(&inst, 4096, 4)?;
        let delta = rel(closed, dp);
        worst = worst.max(delta);
        let _ = writeln!(csv, "p2,{},{},{},{},{}", idx.m, idx.n, fmt_real(closed), fmt_real(dp), fmt_real(delta));
        if p1_ok {
            let sol = RiccatiModeSolution::p1(mu, params.gamma, params.horizon)?;
            let x0 = params.x0.coeffs[k];
            let closed = sol.eval(params.horizon)? * x0 * x0;
            let inst = ScalarLQInstance {
                a: -mu,
                terminal_weight: -params.gamma,
                f: 0.0,
                x0,
                ..inst
            };
            let (_, dp) = dp_refinement(&inst, 4096, 4)?;
            let delta = rel(closed, dp);
            worst = worst.max(delta);
            let _ = writeln!(csv, "p1,{},{},{},{},{}", idx.m, idx.n, fmt_real(closed), fmt_real(dp), fmt_real(delta));
        }
    }
    report.value("dp_worst_relative_delta", worst);
    report.diagnostics.push(format!(
        "dp check: {} (tolerance {DP_TOLERANCE})",
        if worst <= DP_TOLERANCE { "pass" } else { "FAIL" }
    ));
    ex.add("dp_deltas.csv", csv);

    if cfg.probe_directions > 0 {
        let quad = Quadrature::new(&cfg.domain);
        let scale = 1.0 + p2.control.norm(&quad)?;
        let g = gateaux_gradient_norm(
            |v| evaluate_j_h(params, &target, v),
            &p2.control,
            &quad,
            cfg.probe_directions,
            cfg.seed,
        )?;
        report.value("p2_gateaux_norm", g);
        report.value("p2_gateaux_scale", scale);
    }
    Ok(())
}

fn rel(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    if a.abs().max(b.abs()) > 1e-300 {
        d / a.abs().max(b.abs())
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::parse_config;

    fn cfg(kind_lines: &str, dir: &Path) -> ScenarioConfig {
        let text = format!(
            "[domain]\nlength = 1\nheight = 1\nmodes_m = 2\nmodes_n = 2\n[model]\nrho = 0.5\nhorizon = 1\n\
             [x0]\nconstant = 0.5\n[problem]\n{kind_lines}\ntime_steps = 40\n[output]\ndir = {}\n",
            dir.display()
        );
        parse_config(&text).unwrap()
    }

    #[test]
    fn simulate_mode_zero_column_decays() {
        let dir = tempfile::tempdir().unwrap();
        let report = run(&cfg("kind = simulate", dir.path()), None, None).unwrap();
        let csv = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
        let mut lines = csv.lines();
        assert!(lines.next().unwrap().starts_with("t,mode_00"));
        for line in lines {
            let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
            assert!((cols[1] - 0.5 * (-0.5 * cols[0]).exp()).abs() < 1e-12);
        }
        for f in &report.files {
            assert!(dir.path().join(f).exists(), "{f:?}");
        }
        assert!(dir.path().join("field_t1.0000.grid").exists());
    }

    #[test]
    fn sweep_writes_three_rows() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = cfg("kind = p2_sweep\nlevels = 0.5, 1.0, 2.0", dir.path());
        c.x0 = crate::scenario::FieldSpec::constant(0.0);
        run(&c, None, None).unwrap();
        let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
        let rows: Vec<Vec<f64>> = csv
            .lines()
            .skip(1)
            .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
            .collect();
        assert_eq!(rows.len(), 3);
        assert!(rows[0][1] < rows[1][1] && rows[1][1] < rows[2][1]);
    }

    #[test]
    fn ill_posed_p1_leaves_no_files() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        let mut c = cfg("kind = p1", &out);
        c.model.gamma = 5.0;
        let err = run(&c, None, None).unwrap_err();
        match err {
            Error::Scenario { source, .. } => assert!(matches!(*source, Error::IllPosed { .. })),
            other => panic!("unexpected {other:?}"),
        }
        assert!(!out.exists());
    }

    #[test]
    fn runs_are_deterministic() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let text = |d: &Path| cfg("kind = mp_quadratic", d);
        run(&text(a.path()), None, Some(3)).unwrap();
        run(&text(b.path()), None, Some(3)).unwrap();
        for f in ["trajectory.csv", "control.csv"] {
            assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap());
        }
    }
}
