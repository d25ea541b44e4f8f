//! Post-selected photon-number states and the distances that couple the
//! decoy classes.

use std::f64::consts::PI;

use fpqsdc::params::SourceParams;
use fpqsdc::quadrature::QuadratureSpec;
use fpqsdc::source::{Basis, IntensityClass, SelectionInterval};
use fpqsdc::states::{density_matrix, trace_distance_table, union_density_matrix, MatrixMode};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let source = SourceParams::new(0.0895, 0.049 * PI, 0.0546 * PI);
    let spec = QuadratureSpec::default();

    let unions: Vec<_> = Basis::ALL
        .iter()
        .map(|&b| SelectionInterval::for_basis(&source, b, IntensityClass::S))
        .collect();
    let rho1 = union_density_matrix(&source, &unions, 1, MatrixMode::Full, &spec)?;
    println!("single-photon state over all bases:");
    for m in 0..2 {
        println!("  {:.6} {:.6}", rho1.get(m, 0), rho1.get(m, 1));
    }

    let x = SelectionInterval::for_basis(&source, Basis::X, IntensityClass::S);
    for mode in [MatrixMode::Full, MatrixMode::PaperDiagonal] {
        let rho2 = density_matrix(&source, &x, 2, mode, &spec)?;
        println!(
            "\nX-basis two-photon state ({}), eigenvalues {:.5?}",
            mode.name(),
            rho2.eigenvalues()?
        );
        for m in 0..3 {
            let row: Vec<String> = (0..3)
                .map(|k| format!("{:+.4}", rho2.get(m, k).re))
                .collect();
            println!("  {}", row.join(" "));
        }
    }

    let table = trace_distance_table(&source, Basis::X, None, 7, MatrixMode::Full, &spec)?;
    println!("\nX-basis trace distances between classes:");
    println!("  n   d1-d2      d1-s       d2-s");
    for n in 0..=7 {
        use IntensityClass::*;
        println!(
            "  {n}   {:.3e}  {:.3e}  {:.3e}",
            table.get(n, D1, D2),
            table.get(n, D1, S),
            table.get(n, D2, S)
        );
    }
    Ok(())
}
