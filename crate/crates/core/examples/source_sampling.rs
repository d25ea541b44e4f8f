//! The passive source: phase sampling against the closed-form density.

use std::f64::consts::PI;

use fpqsdc::params::SourceParams;
use fpqsdc::quadrature::QuadratureSpec;
use fpqsdc::source::{
    density, interval_probability, mc_interval_probability, mean_intensity, sample_source, Basis,
    IntensityClass, SelectionInterval,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let source = SourceParams::new(0.0895, 0.049 * PI, 0.0546 * PI);
    let spec = QuadratureSpec::default();
    let full = SelectionInterval::full_domain(&source);
    println!(
        "normalisation {:.12}",
        interval_probability(&source, &full, &spec)?
    );
    println!("mean intensity {:.6e}", mean_intensity(&source, &spec)?);
    println!(
        "f(I_s/2, pi/2) = {:.4}",
        density(&source, 0.5 * source.intensity_max, 0.5 * PI)?
    );

    let pulses = sample_source(&source, 42, 5);
    for p in &pulses {
        println!(
            "pulse I={:.4} theta={:.3} phi={:.3}",
            p.intensity, p.theta, p.phi
        );
    }

    for basis in Basis::ALL {
        for class in IntensityClass::ALL {
            let iv = SelectionInterval::for_basis(&source, basis, class);
            let p = interval_probability(&source, &iv, &spec)?;
            let mc = mc_interval_probability(&source, &iv, 7, 1_000_000);
            println!(
                "{} {:<2}  quadrature {:.5e}  sampled {:.5e} +- {:.1e}  ({:.2} sigma)",
                basis.name(),
                class.name(),
                p,
                mc.value,
                mc.std_error,
                mc.z_score(p)
            );
        }
    }
    Ok(())
}
