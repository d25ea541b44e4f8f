//! Capacity breakdown at one operating point.
//!
//! cargo run --example evaluate_point -- [attenuation_db] [intensity] [delta_x/pi] [delta_z/pi]

use std::f64::consts::PI;

use fpqsdc::params::{SourceParams, SystemParams};
use fpqsdc::pipeline::{evaluate, EvalOptions};
use fpqsdc::states::MatrixMode;

fn arg(i: usize, default: f64) -> f64 {
    std::env::args()
        .nth(i)
        .and_then(|s| s.parse().ok())
        .unwrap_or(default)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let db = arg(1, 2.0);
    let source = SourceParams::new(arg(2, 0.0895), arg(3, 0.0490) * PI, arg(4, 0.0546) * PI);
    let system = SystemParams::default();

    for mode in [MatrixMode::Full, MatrixMode::PaperDiagonal] {
        let opts = EvalOptions {
            mode,
            ..Default::default()
        };
        let r = evaluate(&system, &source, db, &opts)?;
        println!("{} dB ({:.2} km), mode {}", db, r.distance_km, mode.name());
        println!("basis  <P>        I(A:B)     I(A:E)     C_K        Y1_min     e1_max");
        for b in &r.bases {
            println!(
                "{:<6} {:<10.4e} {:<10.4e} {:<10.4e} {:<10.4e} {:<10.4e} {:.4}",
                b.basis.name(),
                b.p_select,
                b.i_ab,
                b.eve.total,
                b.capacity,
                b.bounds.y1_min,
                b.bounds.e1_max
            );
        }
        println!("rate C_s = {:.4e} bits/pulse\n", r.rate);
    }
    Ok(())
}
