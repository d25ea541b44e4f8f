//! Closed-form gains and error rates against a photon-by-photon simulation.

use std::f64::consts::PI;

use fpqsdc::click::{
    gain_error_pointwise, interval_stats, mc_clicks_interval, mc_clicks_point, ClickModel,
};
use fpqsdc::params::{derive_channel, SourceParams, SystemParams};
use fpqsdc::quadrature::QuadratureSpec;
use fpqsdc::source::{Basis, IntensityClass, SelectionInterval, State};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let system = SystemParams::default();
    let (ba, bab) = derive_channel(&system, 2.0)?;
    let model = ClickModel::for_channel(&system, &ba);
    println!(
        "first-round efficiency {:.4}, round trip {:.4}",
        ba.efficiency, bab.efficiency
    );

    let (q, e) = gain_error_pointwise(0.1, 0.2, 1.0, State::D, &model);
    let c = mc_clicks_point(0.1, 0.2, 1.0, State::D, &model, 2_000_000, 3);
    println!(
        "point: Q {q:.5e} vs {:.5e} +- {:.1e}",
        c.gain(),
        c.gain_std_error()
    );
    println!(
        "       E {e:.5e} vs {:.5e} +- {:.1e}",
        c.error_fraction(),
        c.error_std_error()
    );

    let source = SourceParams::new(0.0895, 0.049 * PI, 0.0546 * PI);
    for basis in [Basis::Z, Basis::X] {
        let iv = SelectionInterval::for_basis(&source, basis, IntensityClass::S);
        let st = interval_stats(
            &source,
            &iv,
            &model,
            system.n_cut,
            &QuadratureSpec::default(),
        )?;
        let c = mc_clicks_interval(&source, &iv, &model, 4_000_000, 11);
        println!(
            "{} signal: <Q> {:.5e} vs {:.5e} +- {:.1e};  <EQ>/<Q> {:.4e} vs {:.4e} +- {:.1e}",
            basis.name(),
            st.q_gain,
            c.gain(),
            c.gain_std_error(),
            st.observed_error(),
            c.error_fraction(),
            c.error_std_error()
        );
    }
    Ok(())
}
