//! Uncontrolled and controlled evolution of a goodwill bump.
//!
//! ```text
//! cargo run --example simulate
//! ```

use goodwill::dynamics::{average_goodwill, mild_solve, uniform_times, ControlSignal, ModelParams};
use goodwill::spectral::{project, DomainSpec, ModeIndex};

fn main() -> goodwill::Result<()> {
    let domain = DomainSpec::with_modes(2.0, 1.0, 12, 8)?;
    let x0 = project(&domain, |x, y| (-8.0 * ((x - 0.5).powi(2) + (y - 0.5).powi(2))).exp());
    let params = ModelParams::new(x0.clone(), 0.5, 2.0);
    let times = uniform_times(params.horizon, 200);

    let idle = ControlSignal::zero(&domain, times.clone())?;
    let free = mild_solve(&params, &idle, &times)?;

    // steady effort concentrated on the right half of the rectangle
    let effort = project(&domain, |x, _| if x > 1.0 { 0.4 } else { 0.0 });
    let pushed = mild_solve(&params, &ControlSignal::stationary(&effort, times.clone())?, &times)?;

    println!("{:>6} {:>14} {:>14}", "t", "free", "with effort");
    let (a, b) = (average_goodwill(&free), average_goodwill(&pushed));
    for j in (0..times.len()).step_by(40) {
        println!("{:>6.2} {:>14.6} {:>14.6}", times[j], a[j], b[j]);
    }

    let bump = ModeIndex::new(1, 0);
    println!(
        "mode (1,0): {:.4e} -> {:.4e}, rate {:.4}",
        x0.get(bump),
        free.final_state().get(bump),
        params.mode_rate(bump)
    );
    let (px, py) = (1.5, 0.5);
    println!(
        "x(T) at ({px}, {py}): free {:.5}, with effort {:.5}",
        free.final_state().eval(px, py)?,
        pushed.final_state().eval(px, py)?
    );
    Ok(())
}
