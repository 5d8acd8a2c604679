//! Maximise terminal goodwill under a total effort-energy budget.

use goodwill::dynamics::{mild_solve, uniform_times, Effectiveness, ModelParams};
use goodwill::maximum_principle::solve_budget_constrained;
use goodwill::spectral::{project, DomainSpec, Quadrature, SpectralField};

fn main() -> goodwill::Result<()> {
    let domain = DomainSpec::with_modes(3.0, 1.0, 10, 4)?;
    let b = project(&domain, |x, _| 1.0 + 0.5 * (std::f64::consts::PI * x / 3.0).cos());
    let params = ModelParams::new(SpectralField::constant(&domain, 0.2), 0.3, 1.5)
        .with_effectiveness(Effectiveness::Field(b));
    let times = uniform_times(params.horizon, 300);
    let quad = Quadrature::new(&domain);

    println!("{:>8} {:>12} {:>12} {:>14}", "budget", "lambda", "energy", "goodwill(T)");
    for budget in [0.5, 1.0, 2.0, 4.0, 8.0] {
        let sol = solve_budget_constrained(&params, budget, times.clone())?;
        let traj = mild_solve(&params, &sol.control, &times)?;
        println!(
            "{budget:>8.2} {:>12.6} {:>12.6} {:>14.6}",
            sol.lambda,
            sol.control.energy(&quad)?,
            traj.final_state().integral()
        );
    }
    Ok(())
}
