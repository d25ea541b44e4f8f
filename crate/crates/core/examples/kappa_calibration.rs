//! Which eavesdropper advantage κ reproduces the reference rates best.

use fpqsdc::calibration::{calibrate_kappa, REFERENCE_POINTS};
use fpqsdc::params::SystemParams;
use fpqsdc::pipeline::EvalOptions;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let opts = EvalOptions {
        mirror_y: true,
        ..Default::default()
    };
    let cal = calibrate_kappa(&SystemParams::default(), &REFERENCE_POINTS, &opts)?;
    for c in cal.candidates.iter().chain(std::iter::once(&cal.fitted)) {
        let ratios: Vec<String> = c.ratios.iter().map(|r| format!("{r:.3}")).collect();
        println!(
            "kappa {:<24} = {:.3}: model/reference [{}]",
            c.label,
            c.kappa,
            ratios.join(", ")
        );
    }
    println!("best candidate: {}", cal.best().label);
    Ok(())
}
