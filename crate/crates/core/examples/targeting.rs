//! Steer goodwill towards a target profile at the horizon, then sweep
//! uniform targets.

use goodwill::dynamics::{uniform_times, ModelParams};
use goodwill::grid::GridField;
use goodwill::lq_targeting::{evaluate_j_h, project_target, sweep_uniform_targets, synthesize_p2};
use goodwill::spectral::{DomainSpec, SpectralField};

fn main() -> goodwill::Result<()> {
    let domain = DomainSpec::unit_square(8, 8);
    let grid = GridField::from_fn(33, 33, 1.0, 1.0, |x, y| {
        1.0 + 0.8 * (-20.0 * ((x - 0.3).powi(2) + (y - 0.6).powi(2))).exp()
    })?;
    let projected = project_target(&grid, &domain)?;
    println!("target energy outside retained modes: {:.2e}", projected.tail_fraction);

    let times = uniform_times(1.0, 400);
    for gamma in [1.0, 4.0, 16.0] {
        let params = ModelParams::new(SpectralField::constant(&domain, 0.2), 0.5, 1.0).with_gamma(gamma);
        let sol = synthesize_p2(&params, &projected.field, &times)?;
        let replay = evaluate_j_h(&params, &projected.field, &sol.control)?;
        println!(
            "gamma {gamma:>4}: value {:.6} (replayed {:.6}), terminal miss {:.4}",
            sol.value_formula,
            replay,
            sol.terminal_miss()
        );
    }

    let params = ModelParams::new(SpectralField::constant(&domain, 0.5), 0.5, 1.0).with_gamma(2.0);
    println!("\n{:>6} {:>12} {:>12}", "level", "value", "miss");
    for row in sweep_uniform_targets(&params, &[0.5, 1.0, 1.5, 2.0], &times)? {
        println!("{:>6.2} {:>12.6} {:>12.6}", row.k0, row.value, row.terminal_miss);
    }
    Ok(())
}
