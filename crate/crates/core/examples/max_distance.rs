//! Longest fiber with a positive rate, passive against active.
//! Runs one optimisation per bisection step (a few minutes).

use fpqsdc::optimizer::{max_distance, max_distance_active, SearchSpace};
use fpqsdc::params::SystemParams;
use fpqsdc::pipeline::EvalOptions;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let system = SystemParams::default();
    let active = max_distance_active(&system)?;
    println!(
        "active:  {:.1} km ({:.3} dB)",
        active.distance_km, active.attenuation_db
    );
    let passive = max_distance(&system, &SearchSpace::default(), &EvalOptions::default())?;
    for s in &passive.steps {
        println!("  bracket [{:.3}, {:.3}] dB", s.lo_db, s.hi_db);
    }
    println!(
        "passive: {:.1} km ({:.3} dB)",
        passive.distance_km, passive.attenuation_db
    );
    println!("ratio    {:.3}", passive.distance_km / active.distance_km);
    Ok(())
}
