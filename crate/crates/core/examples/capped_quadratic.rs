//! Maximum-principle strategy for linear reward and capped quadratic cost.
//!
//! The optimal effort is `b(xi) exp(-rho (T - t))` clipped at the cap, so it
//! grows towards the end of the horizon and saturates first where `b` is large.

use goodwill::dynamics::{evaluate_objective_general, mild_solve, uniform_times, Effectiveness, ModelParams, PointwiseRule};
use goodwill::maximum_principle::strategy_linear_reward_quadratic_cost;
use goodwill::spectral::{project, DomainSpec, SpectralField};

fn main() -> goodwill::Result<()> {
    let domain = DomainSpec::unit_square(8, 8);
    let cap = 0.7;
    let b = project(&domain, |x, y| 0.5 + x * y);
    let params = ModelParams::new(SpectralField::constant(&domain, 0.5), 0.8, 2.0)
        .with_effectiveness(Effectiveness::Field(b))
        .with_cap(cap);
    let times = uniform_times(params.horizon, 200);

    let u = strategy_linear_reward_quadratic_cost(&params, times.clone())?;
    let traj = mild_solve(&params, &u, &times)?;
    let phi0 = PointwiseRule::Linear { slope: 1.0 };
    let h0 = PointwiseRule::CappedQuadratic { weight: 0.5, cap };
    let best = evaluate_objective_general(&params, &traj, &u, phi0, h0)?;
    println!("optimal objective {best:.6}");

    for t in [0.0, 1.0, 1.5, 2.0] {
        let corner = u.value_at(t, 1.0, 1.0)?;
        let origin = u.value_at(t, 0.0, 0.0)?;
        println!("t = {t:.1}: u(0,0) = {origin:.4}, u(1,1) = {corner:.4}");
    }

    // scaling the optimum down never helps
    for s in [0.5, 0.9] {
        let quad = goodwill::spectral::Quadrature::new(&domain);
        let v = u.map_nodal(&quad, |x| s * x)?;
        let tv = mild_solve(&params, &v, &times)?;
        let j = evaluate_objective_general(&params, &tv, &v, phi0, h0)?;
        println!("scaled by {s}: objective {j:.6} (gap {:.2e})", best - j);
    }
    Ok(())
}
