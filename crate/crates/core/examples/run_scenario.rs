//! Load a scenario file and run it, as the `goodwill-ctrl` binary does.
//!
//! ```text
//! cargo run --example run_scenario -- crates/core/examples/scenarios/p2.cfg
//! ```

use std::path::PathBuf;

use goodwill::runner::run;
use goodwill::scenario::load_config;

fn main() -> goodwill::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/scenarios/simulate.cfg")));
    let cfg = load_config(&path)?;
    let out = std::env::temp_dir().join(format!("goodwill-{}", cfg.name));
    let report = run(&cfg, Some(&out), None)?;
    print!("{}", report.render());
    println!("output in {}", out.display());
    Ok(())
}
