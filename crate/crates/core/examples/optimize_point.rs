//! Optimal (I, Δx, Δz) at one attenuation.
//!
//! cargo run --example optimize_point -- [attenuation_db]

use std::f64::consts::PI;
use std::time::Instant;

use fpqsdc::optimizer::{optimize, SearchSpace};
use fpqsdc::params::SystemParams;
use fpqsdc::pipeline::EvalOptions;
use fpqsdc::security::active_baseline_optimal;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let db: f64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(2.0);
    let system = SystemParams::default();
    let t = Instant::now();
    let r = optimize(
        &system,
        db,
        &SearchSpace::default(),
        &EvalOptions::default(),
    )?;
    println!("attenuation   {db} dB");
    println!("intensity     {:.4}", r.intensity);
    println!("delta_x       {:.4} pi", r.delta_x / PI);
    println!("delta_z       {:.4} pi", r.delta_z / PI);
    println!(
        "rate          {:.4e} (grid best {:.4e})",
        r.rate, r.grid_best_rate
    );
    println!(
        "evaluations   {} in {:.1} s",
        r.evaluations,
        t.elapsed().as_secs_f64()
    );
    let (mu, c) = active_baseline_optimal(db, &system)?;
    println!("active source {c:.4e} at mu = {mu:.4}");
    Ok(())
}
