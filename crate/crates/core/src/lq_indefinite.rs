//! Indefinite linear-quadratic problem: minimise
//! `J_i(u) = -gamma |x(T)|^2 + int_0^T |u(t)|^2 dt` with `B = I`.
//!
//! Projected on the eigenbasis the operator Riccati equation
//! `P' = 2 A P - P^2, P(0) = -gamma I` splits into scalar problems
//! `p_k' = -2 mu_k p_k - p_k^2`, solved in closed form through
//! `z_k = 1 / (p_k + 2 mu_k)`, which satisfies `z_k' = -2 mu_k z_k + 1`.

use std::sync::Arc;

use crate::dynamics::{mild_solve, trapezoid, ControlSignal, ControlValues, Effectiveness, ModelParams, Trajectory};
use crate::error::{Error, Result};
use crate::maximum_principle::{discount_energy, DiscountedEffectiveness};
use crate::spectral::{DomainSpec, ModeIndex, Quadrature, SpectralField};

/// Which terminal weight the Riccati solution starts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RiccatiSign {
    /// `p_k(0) = -gamma`
    P1Negative,
    /// `p_k(0) = +gamma`
    P2Positive,
}

/// Closed-form solution of `p' = -2 mu p - p^2`, `p(0) = -/+ gamma`:
/// `p(t) = -2 mu + 1 / z(t)` with `z(t) = 1 / (2 mu) + C exp(-2 mu t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiccatiModeSolution {
    pub mu: f64,
    pub gamma: f64,
    pub constant: f64,
    pub sign: RiccatiSign,
    pub horizon: f64,
    pub valid_on_horizon: bool,
}

impl RiccatiModeSolution {
    pub fn new(mu: f64, gamma: f64, sign: RiccatiSign, horizon: f64) -> Result<Self> {
        if !(mu > 0.0) || !(gamma > 0.0) {
            return Err(Error::config(format!(
                "Riccati mode needs mu > 0 and gamma > 0, got mu = {mu}, gamma = {gamma}"
            )));
        }
        let p0 = match sign {
            RiccatiSign::P1Negative => -gamma,
            RiccatiSign::P2Positive => gamma,
        };
        let denom = 2.0 * mu + p0;
        if denom.abs() <= 1e-14 * 2.0 * mu {
            return Err(Error::DegenerateConstant { mu, gamma });
        }
        let constant = -p0 / (2.0 * mu * denom);
        let mut sol = Self {
            mu,
            gamma,
            constant,
            sign,
            horizon,
            valid_on_horizon: true,
        };
        sol.valid_on_horizon = sol.blow_up_time().map_or(true, |t| t > horizon);
        Ok(sol)
    }

    pub fn p1(mu: f64, gamma: f64, horizon: f64) -> Result<Self> {
        Self::new(mu, gamma, RiccatiSign::P1Negative, horizon)
    }

    pub fn p2(mu: f64, gamma: f64, horizon: f64) -> Result<Self> {
        Self::new(mu, gamma, RiccatiSign::P2Positive, horizon)
    }

    pub fn initial_value(&self) -> f64 {
        match self.sign {
            RiccatiSign::P1Negative => -self.gamma,
            RiccatiSign::P2Positive => self.gamma,
        }
    }

    /// `z(t) = 1 / (p(t) + 2 mu)`.
    pub fn z(&self, t: f64) -> f64 {
        0.5 / self.mu + self.constant * (-2.0 * self.mu * t).exp()
    }

    /// First zero of `z`, where `p` escapes to `-inf`.
    pub fn blow_up_time(&self) -> Option<f64> {
        if self.constant >= 0.0 {
            return None;
        }
        let s = -2.0 * self.mu * self.constant;
        if s <= 1.0 {
            return None;
        }
        Some(s.ln() / (2.0 * self.mu))
    }

    /// `p(t)`, or a blow-up error when `z` vanishes on `[0, t]`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if let Some(tb) = self.blow_up_time() {
            if tb <= t {
                return Err(Error::BlowUp { mu: self.mu, time: tb });
            }
        }
        Ok(self.eval_unchecked(t))
    }

    /// `p(t) = -2 mu C exp(-2 mu t) / z(t)`, free of cancellation as `t` grows.
    pub fn eval_unchecked(&self, t: f64) -> f64 {
        if t == 0.0 {
            return self.initial_value();
        }
        let e = (-2.0 * self.mu * t).exp();
        -2.0 * self.mu * self.constant * e / self.z(t)
    }

    /// `int_a^b p(s) ds = ln(z(b) / z(a))`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        (self.z(b) / self.z(a)).ln()
    }
}

/// `p_k(t)` for the indefinite problem.
pub fn riccati_p1_mode(mu: f64, gamma: f64, t: f64) -> Result<f64> {
    RiccatiModeSolution::p1(mu, gamma, t)?.eval(t)
}

/// `C_{rho,T} = (1 - exp(-2 rho T)) / (2 rho)`.
pub fn coercivity_constant(rho: f64, horizon: f64) -> f64 {
    discount_energy(rho, horizon)
}

/// `eps = 1 - gamma C_{rho,T}`; the problem is accepted iff `eps > 0`.
pub fn wellposedness_margin(gamma: f64, rho: f64, horizon: f64) -> f64 {
    1.0 - gamma * coercivity_constant(rho, horizon)
}

/// Feedback `u*(t) = -P(T - t) x(t)`, diagonal in the eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackLaw {
    pub domain: DomainSpec,
    pub mode_solutions: Vec<RiccatiModeSolution>,
    pub horizon: f64,
}

impl FeedbackLaw {
    /// `P(s)` applied to a state.
    pub fn apply(&self, s: f64, y: &SpectralField) -> SpectralField {
        let mut out = y.clone();
        for (c, sol) in out.coeffs.iter_mut().zip(&self.mode_solutions) {
            *c *= sol.eval_unchecked(s);
        }
        out
    }

    /// `<P(s) y, y>`.
    pub fn quadratic_form(&self, s: f64, y: &SpectralField) -> f64 {
        self.apply(s, y).dot(y)
    }
}

/// One row of the per-mode report table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct P1ModeRow {
    pub mode: ModeIndex,
    pub mu: f64,
    pub constant: f64,
    pub p_at_horizon: f64,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct P1Solution {
    pub margin: f64,
    pub law: FeedbackLaw,
    pub trajectory: Trajectory,
    pub control: ControlSignal,
    /// `<P(T) x0, x0>`
    pub value: f64,
    pub modes: Vec<P1ModeRow>,
}

pub(crate) fn require_identity_b(params: &ModelParams) -> Result<()> {
    match params.effectiveness {
        Effectiveness::Constant(c) if c == 1.0 => Ok(()),
        _ => Err(Error::config("this problem assumes B = I, i.e. effectiveness b = 1")),
    }
}

/// Optimal feedback, trajectory, control and value of the indefinite problem.
pub fn synthesize_p1(params: &ModelParams, times: &[f64]) -> Result<P1Solution> {
    params.validate()?;
    require_identity_b(params)?;
    let margin = wellposedness_margin(params.gamma, params.rho, params.horizon);
    if !(margin > 0.0) {
        return Err(Error::IllPosed { margin });
    }
    let horizon = params.horizon;
    if times.first() != Some(&0.0) || (times.last().copied().unwrap_or(0.0) - horizon).abs() > 1e-12 * horizon {
        return Err(Error::config("time grid must span [0, T]"));
    }
    let d = *params.domain();
    let mode_solutions = d
        .modes()
        .map(|k| {
            let sol = RiccatiModeSolution::p1(params.mode_rate(k), params.gamma, horizon)?;
            if !sol.valid_on_horizon {
                return Err(Error::BlowUp {
                    mu: sol.mu,
                    time: sol.blow_up_time().unwrap_or(horizon),
                });
            }
            Ok(sol)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut states = Vec::with_capacity(times.len());
    let mut controls = Vec::with_capacity(times.len());
    for &t in times {
        let t = t.min(horizon);
        let mut x = SpectralField::zeros(&d);
        let mut u = SpectralField::zeros(&d);
        for (k, sol) in mode_solutions.iter().enumerate() {
            // x_k(t) = x_k(0) exp(-mu t - int_0^t p(T - s) ds)
            //        = x_k(0) exp(-mu t) z(T - t) / z(T)
            let xk = params.x0.coeffs[k] * (-sol.mu * t).exp() * sol.z(horizon - t) / sol.z(horizon);
            x.coeffs[k] = xk;
            u.coeffs[k] = -sol.eval_unchecked(horizon - t) * xk;
        }
        states.push(x);
        controls.push(u);
    }
    let modes: Vec<P1ModeRow> = d
        .modes()
        .zip(&mode_solutions)
        .map(|(mode, sol)| {
            let p_t = sol.eval_unchecked(horizon);
            let x0 = params.x0.get(mode);
            P1ModeRow {
                mode,
                mu: sol.mu,
                constant: sol.constant,
                p_at_horizon: p_t,
                value: p_t * x0 * x0,
            }
        })
        .collect();
    let value = modes.iter().map(|r| r.value).sum();
    Ok(P1Solution {
        margin,
        law: FeedbackLaw {
            domain: d,
            mode_solutions,
            horizon,
        },
        trajectory: Trajectory {
            times: times.to_vec(),
            states,
        },
        control: ControlSignal::new(times.to_vec(), ControlValues::Spectral(controls))?,
        value,
        modes,
    })
}

/// `J_i(u) = -gamma |x(T)|^2 + int |u|^2`, trapezoid in time.
pub fn evaluate_j_i(params: &ModelParams, u: &ControlSignal) -> Result<f64> {
    let traj = mild_solve(params, u, &u.times)?;
    let quad = Quadrature::new(params.domain());
    Ok(-params.gamma * traj.final_state().norm_squared() + u.energy(&quad)?)
}

/// The coercivity witness `v(s, xi) = exp(-rho (T - s))` together with
/// `<Psi v, v> = ||v||^2 - gamma |L_T v|^2 = |Xi| C (1 - gamma C)`.
pub fn coercivity_witness(
    domain: &DomainSpec,
    gamma: f64,
    rho: f64,
    horizon: f64,
    times: Vec<f64>,
) -> Result<(ControlSignal, f64)> {
    let c = coercivity_constant(rho, horizon);
    let law = DiscountedEffectiveness {
        effectiveness: Effectiveness::Constant(1.0),
        rate: rho,
        horizon,
        scale: 1.0,
    };
    let v = ControlSignal::rule(Arc::new(law), times)?;
    Ok((v, domain.area() * c * (1.0 - gamma * c)))
}

/// `int_0^T g` for samples on a grid.
pub fn time_integral(times: &[f64], values: &[f64]) -> f64 {
    trapezoid(times, values)
}
