//! Target tracking: minimise `J_h(u) = gamma |x(T) - h|^2 + int_0^T |u|^2 dt`
//! with `B = I`.
//!
//! In the distance variable `y = h - x` the problem becomes a regulator
//! with constant forcing `f = -A h`, solved by the feedback
//! `u*(t) = P(T - t) y(t) + r(t)` where `r` solves a backward linear
//! equation with `r(T) = 0`.

use std::sync::OnceLock;

use crate::dynamics::{mild_solve, ControlSignal, ControlValues, ExpStep, ModelParams, Trajectory};
use crate::error::{Error, Result};
use crate::grid::GridField;
use crate::lq_indefinite::{require_identity_b, RiccatiModeSolution};
use crate::spectral::{gauss_legendre, DomainSpec, ModeIndex, Quadrature, SpectralField};

/// Tail energy share above which a projected target triggers a warning.
pub const TAIL_WARNING_FRACTION: f64 = 0.01;

/// Target density together with its forcing `f^k = mu_k h^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSpec {
    pub target: SpectralField,
    pub f: SpectralField,
}

impl TargetSpec {
    pub fn new(params: &ModelParams, target: SpectralField) -> Result<Self> {
        if target.domain != *params.domain() {
            return Err(Error::config("target and model live on different domains"));
        }
        let mut f = target.clone();
        for (k, c) in f.coeffs.iter_mut().enumerate() {
            *c *= params.mode_rate(target.domain.mode_at(k));
        }
        Ok(Self { target, f })
    }
}

/// Result of projecting a grid-sampled target.
#[derive(Debug, Clone)]
pub struct ProjectedTarget {
    pub field: SpectralField,
    /// Share of the interpolant's L2 energy not captured by the retained modes.
    pub tail_fraction: f64,
}

/// Project a grid target and warn when the discarded tail is large.
pub fn project_target(grid: &GridField, domain: &DomainSpec) -> Result<ProjectedTarget> {
    let quad = Quadrature::new(domain);
    let values = grid.sample_nodes(&quad)?;
    let total = quad.integrate(&values.iter().map(|v| v * v).collect::<Vec<_>>());
    let field = quad.project_values(&values);
    let tail_fraction = if total > 0.0 {
        (1.0 - field.norm_squared() / total).max(0.0)
    } else {
        0.0
    };
    if tail_fraction > TAIL_WARNING_FRACTION {
        log::warn!(
            "target tail energy beyond the retained {}x{} modes is {:.2}% of the total",
            domain.modes_m + 1,
            domain.modes_n + 1,
            100.0 * tail_fraction
        );
    }
    Ok(ProjectedTarget { field, tail_fraction })
}

/// `y0 = h - x0` and `f = -A h`.
pub fn to_tracking_frame(params: &ModelParams, target: &SpectralField) -> Result<(SpectralField, SpectralField)> {
    let spec = TargetSpec::new(params, target.clone())?;
    Ok((target - &params.x0, spec.f))
}

/// `p_k(t)` for the tracking problem; always in `(0, gamma]`.
pub fn riccati_p2_mode(mu: f64, gamma: f64, t: f64) -> Result<f64> {
    RiccatiModeSolution::p2(mu, gamma, t.max(0.0))?.eval(t)
}

fn gl8() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(8))
}

/// Per-mode adjoint `r_k`, stored through `eta_k(s) = r_k(T - s)`.
///
/// `eta' = -(mu + p) eta + p f`, `eta(0) = 0`, is integrated with the factor
/// `exp(mu s) z(s)`: `eta(s) = f I(s) / z(s)` where
/// `I(s) = int_0^s exp(-mu (s - tau)) p(tau) z(tau) dtau`.
#[derive(Debug, Clone)]
pub struct AdjointModeSolution {
    pub mu: f64,
    pub gamma: f64,
    pub f: f64,
    pub riccati: RiccatiModeSolution,
    /// Increasing time-to-go grid covering `[0, T]`.
    s_grid: Vec<f64>,
    /// `I` at each entry of `s_grid`.
    integral: Vec<f64>,
    /// `r_k` on the forward time grid.
    pub samples: Vec<f64>,
    pub times: Vec<f64>,
}

impl AdjointModeSolution {
    #[inline]
    fn pz(&self, tau: f64) -> f64 {
        -2.0 * self.mu * self.riccati.constant * (-2.0 * self.mu * tau).exp()
    }

    /// `int_a^b exp(-mu (b - tau)) p z dtau` by 8-point Gauss-Legendre.
    fn step_integral(&self, a: f64, b: f64) -> f64 {
        let (x, w) = gl8();
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        x.iter()
            .zip(w)
            .map(|(&xi, &wi)| {
                let tau = mid + half * xi;
                wi * (-self.mu * (b - tau)).exp() * self.pz(tau)
            })
            .sum::<f64>()
            * half
    }

    /// `eta_k(s) = r_k(T - s)` for any `s in [0, T]`.
    pub fn eta(&self, s: f64) -> f64 {
        if self.f == 0.0 || s <= 0.0 {
            return 0.0;
        }
        let j = match self.s_grid.partition_point(|&g| g <= s) {
            0 => 0,
            p => p - 1,
        };
        let s0 = self.s_grid[j];
        let i = (-self.mu * (s - s0)).exp() * self.integral[j] + self.step_integral(s0, s);
        self.f * i / self.riccati.z(s)
    }

    /// `r_k(t)` for any `t in [0, T]`.
    pub fn eval(&self, t: f64) -> f64 {
        self.eta(self.riccati.horizon - t)
    }

    /// `int_0^T (2 r f - r^2) dt`, composite Gauss-Legendre over the grid.
    pub fn cost_integral(&self) -> f64 {
        if self.f == 0.0 {
            return 0.0;
        }
        let (x, w) = gl8();
        self.s_grid
            .windows(2)
            .map(|ab| {
                let half = 0.5 * (ab[1] - ab[0]);
                let mid = 0.5 * (ab[0] + ab[1]);
                x.iter()
                    .zip(w)
                    .map(|(&xi, &wi)| {
                        let r = self.eta(mid + half * xi);
                        wi * (2.0 * r * self.f - r * r)
                    })
                    .sum::<f64>()
                    * half
            })
            .sum()
    }
}

/// Adjoint for one mode on the forward grid `times` spanning `[0, T]`.
pub fn adjoint_r_mode(mu: f64, gamma: f64, f: f64, horizon: f64, times: &[f64]) -> Result<AdjointModeSolution> {
    let riccati = RiccatiModeSolution::p2(mu, gamma, horizon)?;
    if times.len() < 2 || times[0] != 0.0 || (times[times.len() - 1] - horizon).abs() > 1e-12 * horizon {
        return Err(Error::config("adjoint grid must cover [0, T]"));
    }
    let mut s_grid: Vec<f64> = times.iter().rev().map(|&t| (horizon - t).max(0.0)).collect();
    s_grid[0] = 0.0;
    let mut sol = AdjointModeSolution {
        mu,
        gamma,
        f,
        riccati,
        s_grid,
        integral: Vec::new(),
        samples: Vec::new(),
        times: times.to_vec(),
    };
    let mut integral = Vec::with_capacity(sol.s_grid.len());
    let mut acc = 0.0;
    integral.push(0.0);
    for ab in sol.s_grid.windows(2) {
        acc = (-mu * (ab[1] - ab[0])).exp() * acc + sol.step_integral(ab[0], ab[1]);
        integral.push(acc);
    }
    sol.integral = integral;
    let n = times.len();
    sol.samples = (0..n)
        .map(|j| {
            // times[j] corresponds to s_grid[n - 1 - j]
            let i = n - 1 - j;
            if f == 0.0 || i == 0 {
                0.0
            } else {
                f * sol.integral[i] / riccati.z(sol.s_grid[i])
            }
        })
        .collect();
    Ok(sol)
}

/// One row of the per-mode report table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct P2ModeRow {
    pub mode: ModeIndex,
    pub mu: f64,
    pub p_at_horizon: f64,
    pub r_at_zero: f64,
}

#[derive(Debug, Clone)]
pub struct P2Solution {
    pub target: TargetSpec,
    pub control: ControlSignal,
    pub y_trajectory: Trajectory,
    pub x_trajectory: Trajectory,
    /// `<P(T) y0, y0> + 2 <r(0), y0> + int (2 <r, f> - |r|^2)`
    pub value_formula: f64,
    /// `J_h(u*)` by mild solve and quadrature.
    pub value_direct: f64,
    pub adjoints: Vec<AdjointModeSolution>,
    pub modes: Vec<P2ModeRow>,
}

impl P2Solution {
    /// `|x*(T) - h|`.
    pub fn terminal_miss(&self) -> f64 {
        self.y_trajectory.final_state().norm()
    }
}

/// Optimal feedback control, both trajectories and the value, twice.
pub fn synthesize_p2(params: &ModelParams, target: &SpectralField, times: &[f64]) -> Result<P2Solution> {
    params.validate()?;
    require_identity_b(params)?;
    let spec = TargetSpec::new(params, target.clone())?;
    let (y0, f) = to_tracking_frame(params, target)?;
    let d = *params.domain();
    let horizon = params.horizon;
    let adjoints = d
        .modes()
        .enumerate()
        .map(|(k, idx)| adjoint_r_mode(params.mode_rate(idx), params.gamma, f.coeffs[k], horizon, times))
        .collect::<Result<Vec<_>>>()?;

    let nt = times.len();
    let nm = d.mode_count();
    let mut y = vec![vec![0.0; nm]; nt];
    let mut u = vec![vec![0.0; nm]; nt];
    for (k, adj) in adjoints.iter().enumerate() {
        let ric = &adj.riccati;
        let p_at = |t: f64| ric.eval_unchecked(horizon - t);
        y[0][k] = y0.coeffs[k];
        u[0][k] = p_at(times[0]) * y[0][k] + adj.samples[0];
        for j in 0..nt - 1 {
            // exponential step, implicit in u_{j+1} = p_{j+1} y_{j+1} + r_{j+1}
            let step = ExpStep::new(adj.mu, times[j + 1] - times[j]);
            let p1 = p_at(times[j + 1]);
            let r1 = adj.samples[j + 1];
            let rhs = step.decay * y[j][k] + (step.w0 + step.w1) * adj.f - step.w0 * u[j][k] - step.w1 * r1;
            y[j + 1][k] = rhs / (1.0 + step.w1 * p1);
            u[j + 1][k] = p1 * y[j + 1][k] + r1;
        }
    }
    let field = |c: Vec<f64>| SpectralField { domain: d, coeffs: c };
    let y_states: Vec<SpectralField> = y.into_iter().map(field).collect();
    let x_states = y_states.iter().map(|s| target - s).collect();
    let controls: Vec<SpectralField> = u.into_iter().map(field).collect();
    let control = ControlSignal::new(times.to_vec(), ControlValues::Spectral(controls))?;

    let modes: Vec<P2ModeRow> = d
        .modes()
        .zip(&adjoints)
        .map(|(mode, adj)| P2ModeRow {
            mode,
            mu: adj.mu,
            p_at_horizon: adj.riccati.eval_unchecked(horizon),
            r_at_zero: adj.eval(0.0),
        })
        .collect();
    let value_formula = modes
        .iter()
        .zip(&adjoints)
        .zip(&y0.coeffs)
        .map(|((row, adj), &yk)| row.p_at_horizon * yk * yk + 2.0 * row.r_at_zero * yk + adj.cost_integral())
        .sum();
    let value_direct = evaluate_j_h(params, target, &control)?;
    Ok(P2Solution {
        target: spec,
        control,
        y_trajectory: Trajectory {
            times: times.to_vec(),
            states: y_states,
        },
        x_trajectory: Trajectory {
            times: times.to_vec(),
            states: x_states,
        },
        value_formula,
        value_direct,
        adjoints,
        modes,
    })
}

/// `J_h(u) = gamma |x(T) - h|^2 + int |u|^2`, trapezoid in time.
pub fn evaluate_j_h(params: &ModelParams, target: &SpectralField, u: &ControlSignal) -> Result<f64> {
    let traj = mild_solve(params, u, &u.times)?;
    let quad = Quadrature::new(params.domain());
    let miss = (traj.final_state() - target).norm_squared();
    Ok(params.gamma * miss + u.energy(&quad)?)
}

/// One row of a uniform-target sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub k0: f64,
    pub value: f64,
    pub terminal_miss: f64,
}

/// Solve the tracking problem for the uniform targets `h = k0`.
pub fn sweep_uniform_targets(params: &ModelParams, levels: &[f64], times: &[f64]) -> Result<Vec<SweepRow>> {
    levels
        .iter()
        .map(|&k0| {
            let target = SpectralField::constant(params.domain(), k0);
            let sol = synthesize_p2(params, &target, times)?;
            Ok(SweepRow {
                k0,
                value: sol.value_formula,
                terminal_miss: sol.terminal_miss(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::uniform_times;
    use approx::assert_relative_eq;

    /// `eta(s) = -2 C f exp(-mu s) (1 - exp(-mu s)) / z(s)`, obtained by
    /// integrating `p z = z' + 2 mu z` exactly; used only as an oracle.
    fn eta_closed_form(adj: &AdjointModeSolution, s: f64) -> f64 {
        let e = (-adj.mu * s).exp();
        -2.0 * adj.riccati.constant * adj.f * e * (1.0 - e) / adj.riccati.z(s)
    }

    #[test]
    fn p2_riccati_examples() {
        assert_eq!(riccati_p2_mode(2.0, 3.0, 0.0).unwrap(), 3.0);
        let late = riccati_p2_mode(2.0, 3.0, 25.0).unwrap();
        assert!(late > 0.0 && late < 1e-20);
        let mut prev = 3.0;
        for i in 1..40 {
            let p = riccati_p2_mode(2.0, 3.0, i as f64 * 0.05).unwrap();
            assert!(p > 0.0 && p < prev);
            prev = p;
        }
    }

    #[test]
    fn tracking_frame_examples() {
        let d = DomainSpec::unit_square(2, 2);
        let x0 = SpectralField::constant(&d, 0.7);
        let p = ModelParams::new(x0.clone(), 1.0, 1.0);
        let (y0, _) = to_tracking_frame(&p, &x0).unwrap();
        assert_eq!(y0.norm(), 0.0);
        let (_, f) = to_tracking_frame(&p, &SpectralField::constant(&d, 2.0)).unwrap();
        assert_relative_eq!(f.coeffs[0], 2.0, max_relative = 1e-15);
        assert!(f.coeffs[1..].iter().all(|&c| c == 0.0));
        let e10 = SpectralField::basis_element(&d, ModeIndex::new(1, 0));
        let (_, f) = to_tracking_frame(&p, &e10).unwrap();
        assert_relative_eq!(f.get(ModeIndex::new(1, 0)), std::f64::consts::PI.powi(2) + 1.0, max_relative = 1e-14);
    }

    #[test]
    fn adjoint_matches_closed_form_and_terminal_condition() {
        let times = uniform_times(1.5, 300);
        for &(mu, gamma, f) in &[(0.4, 1.0, 1.3), (5.0, 10.0, -0.7), (60.0, 2.0, 3.0)] {
            let adj = adjoint_r_mode(mu, gamma, f, 1.5, &times).unwrap();
            assert_eq!(*adj.samples.last().unwrap(), 0.0);
            assert_eq!(adj.eval(1.5), 0.0);
            for (j, &t) in times.iter().enumerate() {
                let want = eta_closed_form(&adj, 1.5 - t);
                assert!((adj.samples[j] - want).abs() <= 1e-12 * (1.0 + want.abs()));
                let mid = t.min(1.5 - 1e-3) + 3.7e-4;
                let want = eta_closed_form(&adj, 1.5 - mid);
                assert!((adj.eval(mid) - want).abs() <= 1e-12 * (1.0 + want.abs()));
            }
        }
    }

    #[test]
    fn zero_forcing_gives_zero_adjoint() {
        let adj = adjoint_r_mode(2.0, 1.0, 0.0, 1.0, &uniform_times(1.0, 10)).unwrap();
        assert!(adj.samples.iter().all(|&r| r == 0.0));
        assert_eq!(adj.cost_integral(), 0.0);
    }

    #[test]
    fn adjoint_backward_equation_residual() {
        let adj = adjoint_r_mode(3.0, 4.0, 1.5, 1.0, &uniform_times(1.0, 50)).unwrap();
        let h = 1e-5;
        for i in 1..20 {
            let t = i as f64 * 0.05;
            let dr = (adj.eval(t + h) - adj.eval(t - h)) / (2.0 * h);
            let p = adj.riccati.eval_unchecked(1.0 - t);
            let res = dr - (adj.mu + p) * adj.eval(t) + p * adj.f;
            assert!(res.abs() <= 1e-6, "t {t}: {res}");
        }
    }

    #[test]
    fn trivial_instance_has_zero_control() {
        let d = DomainSpec::unit_square(2, 2);
        let p = ModelParams::new(SpectralField::zeros(&d), 1.0, 1.0).with_gamma(3.0);
        let sol = synthesize_p2(&p, &SpectralField::zeros(&d), &uniform_times(1.0, 20)).unwrap();
        assert_eq!(sol.value_formula, 0.0);
        assert_eq!(sol.value_direct, 0.0);
        assert!(sol.control.spectral_samples().unwrap().iter().all(|u| u.norm() == 0.0));
    }

    #[test]
    fn j_h_of_zero_control() {
        let d = DomainSpec::unit_square(1, 1);
        let p = ModelParams::new(SpectralField::zeros(&d), 0.3, 1.0).with_gamma(2.0);
        let zero = ControlSignal::zero(&d, uniform_times(1.0, 5)).unwrap();
        let j = evaluate_j_h(&p, &SpectralField::constant(&d, 1.5), &zero).unwrap();
        assert_relative_eq!(j, 2.0 * 1.5 * 1.5, max_relative = 1e-14);
    }

    #[test]
    fn frame_consistency_and_value_double_entry() {
        let d = DomainSpec::unit_square(2, 1);
        let mut x0 = SpectralField::constant(&d, 0.2);
        x0.set(ModeIndex::new(1, 1), 0.3);
        let mut target = SpectralField::constant(&d, 1.0);
        target.set(ModeIndex::new(2, 0), -0.4);
        let p = ModelParams::new(x0, 0.5, 1.0).with_gamma(5.0);
        let times = uniform_times(1.0, 4000);
        let sol = synthesize_p2(&p, &target, &times).unwrap();
        let direct = mild_solve(&p, &sol.control, &times).unwrap();
        assert!(direct.max_abs_diff(&sol.x_trajectory) <= 1e-8);
        let rel = (sol.value_formula - sol.value_direct).abs() / sol.value_formula.abs();
        assert!(rel <= 1e-6, "formula {} direct {}", sol.value_formula, sol.value_direct);
    }

    #[test]
    fn terminal_miss_shrinks_with_gamma() {
        let d = DomainSpec::unit_square(1, 1);
        let p = ModelParams::new(SpectralField::zeros(&d), 0.5, 1.0);
        let target = SpectralField::constant(&d, 1.0);
        let times = uniform_times(1.0, 200);
        let misses: Vec<f64> = [1.0, 10.0, 100.0]
            .iter()
            .map(|&g| synthesize_p2(&p.clone().with_gamma(g), &target, &times).unwrap().terminal_miss())
            .collect();
        assert!(misses[0] >= misses[1] && misses[1] >= misses[2]);
    }

    #[test]
    fn sweep_value_increases_with_level() {
        let d = DomainSpec::unit_square(1, 1);
        let p = ModelParams::new(SpectralField::zeros(&d), 0.5, 1.0).with_gamma(2.0);
        let rows = sweep_uniform_targets(&p, &[0.5, 1.0, 2.0], &uniform_times(1.0, 100)).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows[0].value < rows[1].value && rows[1].value < rows[2].value);
    }

    #[test]
    fn grid_target_tail_fraction() {
        let d = DomainSpec::with_modes(1.0, 1.0, 2, 2).unwrap();
        let smooth = GridField::from_fn(41, 41, 1.0, 1.0, |_, _| 1.0).unwrap();
        assert!(project_target(&smooth, &d).unwrap().tail_fraction < 1e-10);
        let rough = GridField::from_fn(41, 41, 1.0, 1.0, |x, _| if x < 0.5 { 0.0 } else { 1.0 }).unwrap();
        assert!(project_target(&rough, &d).unwrap().tail_fraction > TAIL_WARNING_FRACTION);
    }
}
