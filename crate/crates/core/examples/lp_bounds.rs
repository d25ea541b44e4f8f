//! Decoy linear programs of one basis: dump, solve and compare with the
//! model's own single-photon yields.
//!
//! cargo run --example lp_bounds -- [attenuation_db] [--dump]

use std::f64::consts::PI;
use std::time::Instant;

use fpqsdc::lp::solve_lp;
use fpqsdc::params::{SourceParams, SystemParams};
use fpqsdc::pipeline::{BasisAnalysis, EvalOptions};
use fpqsdc::source::Basis;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let db: f64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(2.0);
    let dump = std::env::args().any(|a| a == "--dump");
    let system = SystemParams::default();
    let source = SourceParams::new(0.0895, 0.049 * PI, 0.0546 * PI);

    for basis in [Basis::Z, Basis::X] {
        let a = BasisAnalysis::build(&system, &source, basis, db, &EvalOptions::default())?;
        let lp = a.yield_lp()?;
        if dump {
            print!("{}", lp.dump());
        }
        let t = Instant::now();
        let sol = solve_lp(&lp).require_optimal("yield")?;
        let ms = t.elapsed().as_secs_f64() * 1e3;
        let signal = &a.union_ba[2];
        println!(
            "{} basis: Y1_min {:.6e} vs <Y1> {:.6e}  ({} pivots, {ms:.2} ms)",
            basis.name(),
            sol.objective,
            signal.yields[1],
            sol.iterations
        );
        for (lp, (state, stats)) in a.error_lps()?.iter().zip(&a.state_ba) {
            let sol = solve_lp(lp).require_optimal("error")?;
            println!(
                "  state {:?}: e1Y1_max {:.6e} vs <e1 Y1> {:.6e}",
                state, sol.objective, stats[2].error_yields[1]
            );
        }
        println!("  bounds {:?}", a.bounds()?);
    }
    Ok(())
}
