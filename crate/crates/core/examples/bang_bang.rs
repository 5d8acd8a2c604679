//! Linear reward with linear capped cost: effort is either zero or the cap.
//!
//! For constant effectiveness `b > 1` the switch happens at
//! `T - ln(b) / rho`.

use goodwill::dynamics::{mild_solve, uniform_times, Effectiveness, ModelParams};
use goodwill::maximum_principle::{strategy_linear_reward_linear_cost, switching_time, DualArc};
use goodwill::spectral::{DomainSpec, SpectralField};

fn main() -> goodwill::Result<()> {
    let domain = DomainSpec::unit_square(4, 4);
    let (rho, horizon, cap) = (1.0, 2.0, 1.5);
    for b in [0.8, 2.0, 5.0, 10.0] {
        let params = ModelParams::new(SpectralField::constant(&domain, 1.0), rho, horizon)
            .with_effectiveness(Effectiveness::Constant(b))
            .with_cap(cap);
        let times = uniform_times(horizon, 400);
        let dual = DualArc::constant_one(rho, horizon);
        let u = strategy_linear_reward_linear_cost(&params, &dual, times.clone())?;
        let traj = mild_solve(&params, &u, &times)?;

        let on = times.iter().position(|&t| u.value_at(t, 0.5, 0.5).unwrap() > 0.0);
        let predicted = switching_time(b, rho, horizon);
        println!(
            "b = {b:>4}: predicted switch {:>8}, first active sample {:>8}, total goodwill {:.5}",
            predicted.map_or("never".into(), |t| format!("{:.4}", t.max(0.0))),
            on.map_or("never".into(), |j| format!("{:.4}", times[j])),
            traj.final_state().integral()
        );
    }
    Ok(())
}
