//! Closed-form strategies from the maximum principle.
//!
//! With linear terminal utility `phi0(x) = x` the dual arc solves
//! `p' + A p = 0, p(T) = 1`, hence `p(t, xi) = exp(-rho (T - t))`, and the
//! optimal effort maximises `zeta u - h(u)` pointwise at `zeta = b p`.

use std::sync::Arc;

use crate::dynamics::{ControlLaw, ControlSignal, Effectiveness, ModelParams};
use crate::error::{Error, Result};
use crate::spectral::{DomainSpec, Quadrature, SpectralField};

/// Terminal condition of the dual arc.
#[derive(Debug, Clone, PartialEq)]
pub enum DualTerminal {
    /// `p(T) = 1`.
    ConstantOne,
    Field(SpectralField),
}

/// Adjoint state solving `p' + A p = 0` backward from `p(T)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualArc {
    pub rho: f64,
    pub horizon: f64,
    pub terminal: DualTerminal,
    /// `A = Delta - rho` when true, `A = -rho` otherwise.
    pub diffusion: bool,
}

impl DualArc {
    pub fn constant_one(rho: f64, horizon: f64) -> Self {
        Self {
            rho,
            horizon,
            terminal: DualTerminal::ConstantOne,
            diffusion: true,
        }
    }

    pub fn from_params(params: &ModelParams) -> Self {
        Self {
            rho: params.rho,
            horizon: params.horizon,
            terminal: DualTerminal::ConstantOne,
            diffusion: params.diffusion,
        }
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if t < -1e-12 * self.horizon || t > self.horizon * (1.0 + 1e-12) {
            return Err(Error::config(format!(
                "dual arc evaluated at t = {t} outside [0, {}]",
                self.horizon
            )));
        }
        Ok(())
    }

    /// `p(t)` in eigen-coordinates for a field terminal.
    pub fn field_at(&self, t: f64) -> Result<Option<SpectralField>> {
        self.check_time(t)?;
        let DualTerminal::Field(terminal) = &self.terminal else {
            return Ok(None);
        };
        let d = terminal.domain;
        let s = self.horizon - t;
        let mut out = terminal.clone();
        for (k, c) in out.coeffs.iter_mut().enumerate() {
            let mu = if self.diffusion {
                d.a_eigenvalue(d.mode_at(k), self.rho)
            } else {
                self.rho
            };
            *c *= (-mu * s).exp();
        }
        Ok(Some(out))
    }

    /// Nodal values of `p(t)`.
    pub fn sample_nodes(&self, t: f64, quad: &Quadrature) -> Result<Vec<f64>> {
        match self.field_at(t)? {
            Some(f) => Ok(quad.synthesize(&f)),
            None => Ok(vec![(-self.rho * (self.horizon - t)).exp(); quad.node_count()]),
        }
    }
}

/// `p(t, xi)`.
pub fn dual_arc_eval(dual: &DualArc, t: f64, xi1: f64, xi2: f64) -> Result<f64> {
    match dual.field_at(t)? {
        Some(f) => f.eval(xi1, xi2),
        None => Ok((-dual.rho * (dual.horizon - t)).exp()),
    }
}

/// Running-cost shapes with an effort cap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CostRule {
    /// `u^2 / 2` on `[0, R]`
    QuadraticCapped { cap: f64 },
    /// `u` on `[0, R]`
    LinearCapped { cap: f64 },
}

impl CostRule {
    pub fn cap(&self) -> f64 {
        match *self {
            CostRule::QuadraticCapped { cap } | CostRule::LinearCapped { cap } => cap,
        }
    }

    /// A maximiser of `zeta u - h(u)` over `[0, R]`.
    pub fn argmax(&self, zeta: f64) -> f64 {
        match *self {
            CostRule::QuadraticCapped { cap } => argmax_quadratic_capped(zeta, cap),
            CostRule::LinearCapped { cap } => argmax_linear_capped(zeta, cap),
        }
    }

    /// `h*(zeta)`
    pub fn conjugate(&self, zeta: f64) -> f64 {
        match *self {
            CostRule::QuadraticCapped { cap } => conjugate_quadratic_capped(zeta, cap),
            CostRule::LinearCapped { cap } => cap * (zeta - 1.0).max(0.0),
        }
    }
}

/// Fenchel conjugate of `u^2 / 2` restricted to `[0, R]`.
pub fn conjugate_quadratic_capped(zeta: f64, cap: f64) -> f64 {
    if zeta < 0.0 {
        0.0
    } else if zeta <= cap {
        0.5 * zeta * zeta
    } else {
        zeta * cap - 0.5 * cap * cap
    }
}

pub fn argmax_quadratic_capped(zeta: f64, cap: f64) -> f64 {
    zeta.clamp(0.0, cap)
}

/// Bang-bang selection from the subdifferential of the conjugate of the
/// capped linear cost. The tie `zeta = 1` resolves to zero effort.
pub fn argmax_linear_capped(zeta: f64, cap: f64) -> f64 {
    if zeta > 1.0 {
        cap
    } else {
        0.0
    }
}

/// `u(t, xi) = argmax_u [ b(xi) p(t, xi) u - h(u) ]`.
#[derive(Debug, Clone)]
pub struct DualFeedback {
    pub dual: DualArc,
    pub effectiveness: Effectiveness,
    pub cost: CostRule,
}

impl ControlLaw for DualFeedback {
    fn value(&self, t: f64, xi1: f64, xi2: f64) -> Result<f64> {
        let zeta = self.effectiveness.eval(xi1, xi2)? * dual_arc_eval(&self.dual, t, xi1, xi2)?;
        Ok(self.cost.argmax(zeta))
    }

    fn sample_nodes(&self, t: f64, quad: &Quadrature) -> Result<Vec<f64>> {
        let b = self.effectiveness.sample_nodes(quad)?;
        let p = self.dual.sample_nodes(t, quad)?;
        Ok(b.iter().zip(&p).map(|(b, p)| self.cost.argmax(b * p)).collect())
    }

    fn name(&self) -> &'static str {
        match self.cost {
            CostRule::QuadraticCapped { .. } => "capped_dual_feedback",
            CostRule::LinearCapped { .. } => "bang_bang",
        }
    }
}

/// `u(t, xi) = scale * b(xi) * exp(-rate (T - t))`.
#[derive(Debug, Clone)]
pub struct DiscountedEffectiveness {
    pub effectiveness: Effectiveness,
    pub rate: f64,
    pub horizon: f64,
    pub scale: f64,
}

impl ControlLaw for DiscountedEffectiveness {
    fn value(&self, t: f64, xi1: f64, xi2: f64) -> Result<f64> {
        Ok(self.scale * self.effectiveness.eval(xi1, xi2)? * (-self.rate * (self.horizon - t)).exp())
    }

    fn sample_nodes(&self, t: f64, quad: &Quadrature) -> Result<Vec<f64>> {
        let f = self.scale * (-self.rate * (self.horizon - t)).exp();
        Ok(self.effectiveness.sample_nodes(quad)?.into_iter().map(|b| f * b).collect())
    }

    fn name(&self) -> &'static str {
        "discounted_effectiveness"
    }
}

/// Optimal effort for `phi0(x) = x`, `h0(u) = u^2 / 2` on `[0, R]`:
/// `u*(t, xi) = b(xi) exp(-rho (T - t)) ^ R`.
pub fn strategy_linear_reward_quadratic_cost(params: &ModelParams, times: Vec<f64>) -> Result<ControlSignal> {
    strategy_with_dual(params, DualArc::from_params(params), CostRule::QuadraticCapped { cap: params.cap }, times)
}

/// Bang-bang optimum for `phi0(x) = x`, `h0(u) = u` on `[0, R]`.
pub fn strategy_linear_reward_linear_cost(
    params: &ModelParams,
    dual: &DualArc,
    times: Vec<f64>,
) -> Result<ControlSignal> {
    if !params.cap.is_finite() {
        return Err(Error::config("linear cost needs a finite effort cap"));
    }
    strategy_with_dual(params, dual.clone(), CostRule::LinearCapped { cap: params.cap }, times)
}

/// Pointwise maximiser of the Hamiltonian for an arbitrary dual arc.
pub fn strategy_with_dual(
    params: &ModelParams,
    dual: DualArc,
    cost: CostRule,
    times: Vec<f64>,
) -> Result<ControlSignal> {
    params.validate()?;
    let law = DualFeedback {
        dual,
        effectiveness: params.effectiveness.clone(),
        cost,
    };
    ControlSignal::rule(Arc::new(law), times)
}

/// For constant `b` and `p(T) = 1`: the time after which `b p > 1`.
///
/// `None` when the effort is zero on the whole horizon; a negative value
/// means the effort is at the cap from the start.
pub fn switching_time(b: f64, rho: f64, horizon: f64) -> Option<f64> {
    if b <= 1.0 {
        return None;
    }
    Some(horizon - b.ln() / rho)
}

/// `C_{rho,T} = int_0^T exp(-2 rho (T - s)) ds`.
pub fn discount_energy(rho: f64, horizon: f64) -> f64 {
    -(-2.0 * rho * horizon).exp_m1() / (2.0 * rho)
}

/// Outcome of the budget-constrained problem.
#[derive(Debug, Clone)]
pub struct BudgetSolution {
    pub control: ControlSignal,
    /// Lagrange multiplier of the budget constraint.
    pub lambda: f64,
    /// `|| b exp(-rho (T - .)) ||^2` over space-time.
    pub g_norm_squared: f64,
}

/// Maximise `int x(T)` subject to `int int u^2 <= M`.
///
/// The penalised problem `min -<1, x(T)> + lambda ||u||^2` is solved by
/// `u = g / (2 lambda)` with `g = b exp(-rho (T - t))`, and the budget is
/// met with equality at `lambda = ||g|| / (2 sqrt(M))`.
pub fn solve_budget_constrained(params: &ModelParams, budget: f64, times: Vec<f64>) -> Result<BudgetSolution> {
    params.validate()?;
    if !(budget > 0.0 && budget.is_finite()) {
        return Err(Error::config(format!("budget must be positive, got {budget}")));
    }
    if params.cap.is_finite() {
        return Err(Error::config("the budget variant is defined without an effort cap"));
    }
    let domain: &DomainSpec = params.domain();
    let quad = Quadrature::new(domain);
    let b_sq = params.effectiveness.norm_squared(&quad)?;
    if b_sq <= 0.0 {
        return Err(Error::Infeasible(
            "effectiveness vanishes identically, no control reaches the state".into(),
        ));
    }
    let g_norm_squared = b_sq * discount_energy(params.rho, params.horizon);
    let lambda = g_norm_squared.sqrt() / (2.0 * budget.sqrt());
    let law = DiscountedEffectiveness {
        effectiveness: params.effectiveness.clone(),
        rate: params.rho,
        horizon: params.horizon,
        scale: 1.0 / (2.0 * lambda),
    };
    Ok(BudgetSolution {
        control: ControlSignal::rule(Arc::new(law), times)?,
        lambda,
        g_norm_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::uniform_times;
    use crate::spectral::ModeIndex;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn conjugate_examples() {
        assert_eq!(conjugate_quadratic_capped(-1.0, 1.0), 0.0);
        assert_eq!(conjugate_quadratic_capped(1.0, 1.0), 0.5);
        assert_eq!(conjugate_quadratic_capped(2.0, 1.0), 1.5);
        // brute force sup over a u-grid for the third example
        let brute = (0..=100_000)
            .map(|i| {
                let u = i as f64 / 100_000.0;
                2.0 * u - 0.5 * u * u
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert_relative_eq!(brute, 1.5, max_relative = 1e-12);
    }

    #[test]
    fn conjugate_is_continuous_at_cap() {
        for &r in &[0.3, 1.0, 4.0] {
            let below = conjugate_quadratic_capped(r * (1.0 - 1e-9), r);
            let above = conjugate_quadratic_capped(r * (1.0 + 1e-9), r);
            assert!((below - above).abs() < 1e-8 * r.max(1.0));
        }
    }

    #[test]
    fn argmax_examples() {
        assert_eq!(argmax_quadratic_capped(-0.3, 1.0), 0.0);
        assert_eq!(argmax_quadratic_capped(0.4, 1.0), 0.4);
        assert_eq!(argmax_quadratic_capped(7.0, 2.0), 2.0);
        assert_eq!(argmax_linear_capped(1.0, 3.0), 0.0);
        assert_eq!(argmax_linear_capped(1.0 + 1e-12, 3.0), 3.0);
    }

    fn unit_params(b: f64, rho: f64, t: f64, cap: f64) -> ModelParams {
        let d = DomainSpec::unit_square(2, 2);
        ModelParams::new(SpectralField::zeros(&d), rho, t)
            .with_effectiveness(Effectiveness::Constant(b))
            .with_cap(cap)
    }

    #[test]
    fn quadratic_cost_strategy_examples() {
        let p = unit_params(1.0, 1.0, 1.0, 2.0);
        let u = strategy_linear_reward_quadratic_cost(&p, uniform_times(1.0, 10)).unwrap();
        assert_relative_eq!(u.value_at(0.0, 0.3, 0.3).unwrap(), (-1f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(u.value_at(0.0, 0.3, 0.3).unwrap(), 0.3679, epsilon = 1e-4);
        let p = unit_params(1.0, 1.0, 1.0, 0.2);
        let u = strategy_linear_reward_quadratic_cost(&p, uniform_times(1.0, 10)).unwrap();
        assert_eq!(u.value_at(1.0, 0.5, 0.5).unwrap(), 0.2);
    }

    #[test]
    fn strategy_vanishes_where_b_vanishes() {
        let d = DomainSpec::unit_square(2, 2);
        // b = 1 + cos(pi xi1) vanishes on the edge xi1 = 1
        let mut b = SpectralField::constant(&d, 1.0);
        b.set(ModeIndex::new(1, 0), 1.0 / 2f64.sqrt());
        let p = ModelParams::new(SpectralField::zeros(&d), 0.5, 1.0)
            .with_effectiveness(Effectiveness::Field(b))
            .with_cap(5.0);
        let u = strategy_linear_reward_quadratic_cost(&p, uniform_times(1.0, 4)).unwrap();
        for &t in &[0.0, 0.5, 1.0] {
            assert!(u.value_at(t, 1.0, 0.4).unwrap().abs() < 1e-15);
            assert!(u.value_at(t, 0.2, 0.4).unwrap() > 0.0);
        }
    }

    #[test]
    fn bang_bang_examples() {
        let times = uniform_times(1.0, 20);
        let p = unit_params(1.0, 1.0, 1.0, 2.0);
        let dual = DualArc::from_params(&p);
        let u = strategy_linear_reward_linear_cost(&p, &dual, times.clone()).unwrap();
        for &t in &times[..times.len() - 1] {
            assert_eq!(u.value_at(t, 0.5, 0.5).unwrap(), 0.0);
        }
        // tie b p = 1 at t = T
        assert_eq!(u.value_at(1.0, 0.5, 0.5).unwrap(), 0.0);

        let p = unit_params(3.0, 1.0, 1.0, 2.0);
        let dual = DualArc::from_params(&p);
        let t_star = switching_time(3.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(t_star, 1.0 - 3f64.ln(), max_relative = 1e-15);
        assert!(t_star < 0.0);
        let u = strategy_linear_reward_linear_cost(&p, &dual, times.clone()).unwrap();
        assert!(times.iter().all(|&t| u.value_at(t, 0.1, 0.9).unwrap() == 2.0));

        let p = unit_params(1.5, 1.0, 1.0, 2.0);
        let dual = DualArc::from_params(&p);
        let t_star = switching_time(1.5, 1.0, 1.0).unwrap();
        let u = strategy_linear_reward_linear_cost(&p, &dual, times).unwrap();
        assert_eq!(u.value_at(t_star - 1e-6, 0.5, 0.5).unwrap(), 0.0);
        assert_eq!(u.value_at(t_star + 1e-6, 0.5, 0.5).unwrap(), 2.0);
        assert!(switching_time(0.8, 1.0, 1.0).is_none());
    }

    #[test]
    fn dual_arc_examples() {
        let dual = DualArc::constant_one(2.0, 1.0);
        assert_eq!(dual_arc_eval(&dual, 1.0, 0.2, 0.2).unwrap(), 1.0);
        assert_relative_eq!(dual_arc_eval(&dual, 0.0, 0.2, 0.2).unwrap(), 0.13534, epsilon = 1e-5);

        let d = DomainSpec::unit_square(2, 2);
        let e10 = SpectralField::basis_element(&d, ModeIndex::new(1, 0));
        let dual = DualArc {
            rho: 1.0,
            horizon: 1.0,
            terminal: DualTerminal::Field(e10.clone()),
            diffusion: true,
        };
        assert_eq!(dual.field_at(1.0).unwrap().unwrap(), e10);
        let t = 0.25;
        let want = e10.scaled((-(PI * PI + 1.0) * (1.0 - t)).exp());
        assert!(dual.field_at(t).unwrap().unwrap().max_abs_diff(&want) < 1e-16);
        assert!(dual_arc_eval(&dual, 1.5, 0.0, 0.0).is_err());
    }

    #[test]
    fn dual_arc_backward_equation_residual() {
        let d = DomainSpec::unit_square(2, 2);
        let mut terminal = SpectralField::zeros(&d);
        for (k, c) in terminal.coeffs.iter_mut().enumerate() {
            *c = 1.0 / (1.0 + k as f64);
        }
        let dual = DualArc {
            rho: 0.7,
            horizon: 1.0,
            terminal: DualTerminal::Field(terminal),
            diffusion: true,
        };
        let h = 1e-5;
        for &t in &[0.2, 0.5, 0.9] {
            let p = dual.field_at(t).unwrap().unwrap();
            let dp = (&dual.field_at(t + h).unwrap().unwrap() - &dual.field_at(t - h).unwrap().unwrap()).scaled(0.5 / h);
            for (k, idx) in d.modes().enumerate() {
                let mu = d.a_eigenvalue(idx, 0.7);
                // p' + A p = p' - mu p = 0
                let res = dp.coeffs[k] - mu * p.coeffs[k];
                assert!(res.abs() <= 1e-6, "mode {idx:?}: residual {res}");
            }
        }
    }

    #[test]
    fn budget_examples() {
        let p = unit_params(1.0, 0.5, 1.0, f64::INFINITY);
        let sol = solve_budget_constrained(&p, 1.0, uniform_times(1.0, 10)).unwrap();
        assert_relative_eq!(sol.g_norm_squared, 1.0 - (-1f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(sol.lambda, 0.63212f64.sqrt() / 2.0, epsilon = 1e-5);
        assert_relative_eq!(sol.lambda, 0.39753, epsilon = 1e-5);
        let twice = solve_budget_constrained(&p, 2.0, uniform_times(1.0, 10)).unwrap();
        assert_relative_eq!(twice.lambda, sol.lambda / 2f64.sqrt(), max_relative = 1e-14);
        let u1 = sol.control.value_at(0.3, 0.2, 0.2).unwrap();
        let u2 = twice.control.value_at(0.3, 0.2, 0.2).unwrap();
        assert_relative_eq!(u2, u1 * 2f64.sqrt(), max_relative = 1e-14);

        let zero = unit_params(0.0, 0.5, 1.0, f64::INFINITY);
        assert!(matches!(
            solve_budget_constrained(&zero, 1.0, uniform_times(1.0, 10)),
            Err(Error::Infeasible(_))
        ));
        let capped = unit_params(1.0, 0.5, 1.0, 1.0);
        assert!(solve_budget_constrained(&capped, 1.0, uniform_times(1.0, 10)).is_err());
    }
}
