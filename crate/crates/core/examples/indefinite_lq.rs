//! Indefinite quadratic problem: quadratic effort cost against a quadratic
//! terminal reward. Solvable only while `gamma` stays below the
//! well-posedness threshold.

use goodwill::dynamics::{mild_solve, uniform_times, ModelParams};
use goodwill::lq_indefinite::{evaluate_j_i, synthesize_p1, wellposedness_margin};
use goodwill::spectral::{project, DomainSpec};

fn main() -> goodwill::Result<()> {
    let domain = DomainSpec::unit_square(6, 6);
    let x0 = project(&domain, |x, y| 1.0 + 0.5 * (3.0 * x).sin() * y);
    let (rho, horizon) = (1.0, 1.0);
    let times = uniform_times(horizon, 400);

    for gamma in [0.5, 1.5, 1.9, 2.5] {
        let params = ModelParams::new(x0.clone(), rho, horizon).with_gamma(gamma);
        let margin = wellposedness_margin(gamma, rho, horizon);
        match synthesize_p1(&params, &times) {
            Ok(sol) => {
                let replay = evaluate_j_i(&params, &sol.control)?;
                println!(
                    "gamma {gamma}: margin {margin:+.4}, value {:.6}, replayed cost {:.6}",
                    sol.value, replay
                );
                let lead = &sol.modes[0];
                println!("   mode (0,0): C = {:.5}, p(T) = {:.5}", lead.constant, lead.p_at_horizon);
                let drift = mild_solve(&params, &sol.control, &times)?;
                println!("   closed-loop goodwill at T: {:.6}", drift.final_state().integral());
            }
            Err(e) => println!("gamma {gamma}: margin {margin:+.4}, rejected: {e}"),
        }
    }
    Ok(())
}
