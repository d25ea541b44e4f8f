//! Rate against attenuation at a fixed source setting, as CSV and SVG.
//!
//! cargo run --example sweep_plot -- [output_dir]

use std::path::PathBuf;

use fpqsdc::config::Config;
use fpqsdc::output::{reports_csv, run_id, svg_log_plot, Series};
use fpqsdc::pipeline::{evaluate, EvalOptions};
use fpqsdc::security::active_baseline_optimal;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(
        std::env::args()
            .nth(1)
            .unwrap_or_else(|| "target/example-out".into()),
    );
    std::fs::create_dir_all(&dir)?;
    let cfg = Config::default();
    let source = cfg.source.resolve();
    let opts = EvalOptions {
        mirror_y: true,
        ..Default::default()
    };

    let mut rows = Vec::new();
    let mut passive = Vec::new();
    let mut active = Vec::new();
    for db in cfg.sweep.points()? {
        let r = evaluate(&cfg.params, &source, db, &opts)?;
        passive.push((db, r.rate));
        active.push((db, active_baseline_optimal(db, &cfg.params)?.1));
        println!(
            "{db:>4.1} dB  passive {:.4e}  active {:.4e}",
            r.rate,
            active.last().unwrap().1
        );
        rows.push((r, None));
    }
    let id = run_id("example-sweep", &cfg.to_json(), 0);
    std::fs::write(dir.join("sweep.csv"), reports_csv(&id, &rows)?)?;
    let svg = svg_log_plot(
        "Fixed source setting",
        "channel attenuation (dB)",
        "rate (bits per pulse)",
        &[
            Series {
                label: "passive".into(),
                points: passive,
            },
            Series {
                label: "active reference".into(),
                points: active,
            },
        ],
    );
    std::fs::write(dir.join("sweep.svg"), svg)?;
    println!("wrote {}/sweep.csv and sweep.svg", dir.display());
    Ok(())
}
