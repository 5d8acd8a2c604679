//! Independent cross-checks: finite differences against the spectral
//! solver, discrete dynamic programming against the Riccati value, an
//! adaptive ODE integrator against the closed-form Riccati mode, and a
//! directional-derivative probe at the targeting optimum.

use goodwill::dynamics::{mild_solve, uniform_times, ControlSignal, ModelParams};
use goodwill::grid::GridField;
use goodwill::lq_indefinite::RiccatiModeSolution;
use goodwill::lq_targeting::{evaluate_j_h, synthesize_p2};
use goodwill::spectral::{project, DomainSpec, Quadrature, SpectralField};
use goodwill::verification::{
    dp_refinement, fd_solve, gateaux_gradient_norm, integrate_ode, relative_l2_error, ScalarLQInstance,
};

fn main() -> goodwill::Result<()> {
    let domain = DomainSpec::unit_square(8, 8);
    let x0 = project(&domain, |x, y| 1.0 + 0.3 * (std::f64::consts::PI * x).cos() * y);
    let params = ModelParams::new(x0, 0.5, 0.5);
    let times = uniform_times(params.horizon, 200);
    let u = ControlSignal::stationary(&SpectralField::constant(&domain, 0.2), times.clone())?;

    let spectral = mild_solve(&params, &u, &times)?;
    for n in [16, 32] {
        let fd = fd_solve(&params, &u, n, n, 200)?;
        let last: &GridField = &fd.last().expect("fd snapshots").1;
        let err = relative_l2_error(last, spectral.final_state())?;
        println!("fd {n}x{n}: relative L2 gap {err:.3e}");
    }

    let mu = 1.5;
    let sol = RiccatiModeSolution::p2(mu, 2.0, 1.0)?;
    let rk = integrate_ode(|_, p| -2.0 * mu * p - p * p, 0.0, 2.0, 1.0, 1e-12, 1e-14)?;
    println!("riccati closed form {:.14}, rk45 {:.14}", sol.eval(1.0)?, rk);

    let inst = ScalarLQInstance {
        a: -mu,
        terminal_weight: 2.0,
        target: 1.0,
        f: 0.0,
        horizon: 1.0,
        steps: 50,
        x0: 0.3,
    };
    let (rows, limit) = dp_refinement(&inst, 50, 5)?;
    for (steps, v) in &rows {
        println!("dp {steps:>5} steps: {v:.12}");
    }
    println!("dp extrapolated: {limit:.12}");

    let target = SpectralField::constant(&domain, 1.5);
    let times = uniform_times(0.5, 400);
    let p2 = synthesize_p2(&params.clone().with_gamma(2.0), &target, &times)?;
    let quad = Quadrature::new(&domain);
    let objective = |v: &ControlSignal| evaluate_j_h(&params.clone().with_gamma(2.0), &target, v);
    let g = gateaux_gradient_norm(objective, &p2.control, &quad, 8, 7)?;
    println!("gateaux derivative at the targeting optimum: {g:.3e}");
    Ok(())
}
