//! Self-checks: every closed form against an independent estimate.
//!
//! Stochastic checks pass when the estimate lies within `sigma` standard
//! errors of the closed form; deterministic checks use fixed tolerances.

use std::f64::consts::PI;

use serde::Serialize;

use crate::click::{interval_stats, mc_clicks_interval, mc_clicks_point, ClickModel};
use crate::error::Result;
use crate::linalg::hermitian_eigen;
use crate::lp::{assignment_from_stats, solve_lp};
use crate::params::{derive_channel, SourceParams, SystemParams};
use crate::pipeline::{BasisAnalysis, EvalOptions};
use crate::quadrature::QuadratureSpec;
use crate::source::{
    interval_probability, mc_interval_probability, mean_intensity, sample_source, Basis, Cell,
    IntensityClass, PhiSet, SelectionInterval, State,
};
use crate::states::{density_matrix, union_density_matrix, MatrixMode};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationSettings {
    pub seed: u64,
    pub samples: usize,
    pub attenuation_db: f64,
    /// Pass threshold for stochastic checks, in standard errors.
    pub sigma: f64,
}

impl Default for ValidationSettings {
    fn default() -> Self {
        ValidationSettings {
            seed: 1,
            samples: 1_000_000,
            attenuation_db: 2.0,
            sigma: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Observed deviation (a z-score for stochastic checks).
    pub statistic: f64,
    pub threshold: f64,
    pub detail: String,
}

impl CheckResult {
    fn at_most(name: &str, statistic: f64, threshold: f64, detail: String) -> Self {
        CheckResult {
            name: name.to_string(),
            passed: statistic <= threshold,
            statistic,
            threshold,
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub settings: ValidationSettings,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn failed(&self) -> Vec<&CheckResult> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

fn z(a: f64, b: f64, se: f64) -> f64 {
    (a - b).abs() / se.max(f64::MIN_POSITIVE)
}

/// z-score of a sampled fraction `k / n` against probability `p`, with the
/// binomial standard error taken at `p`.
fn z_binomial(k: u64, n: u64, p: f64) -> f64 {
    let n = n.max(1) as f64;
    z(k as f64 / n, p, (p * (1.0 - p) / n).sqrt())
}

/// Runs every check at the configured operating point.
pub fn run_validation(
    system: &SystemParams,
    source: &SourceParams,
    mode: MatrixMode,
    settings: &ValidationSettings,
) -> Result<ValidationReport> {
    system.validate()?;
    source.validate()?;
    let spec = QuadratureSpec::default();
    let k = settings.sigma;
    let mut checks = Vec::new();

    // density
    let full = SelectionInterval::full_domain(source);
    let norm = interval_probability(source, &full, &spec)?;
    checks.push(CheckResult::at_most(
        "density_normalization",
        (norm - 1.0).abs(),
        1e-6,
        format!("integral {norm:.12}"),
    ));
    checks.push(histogram_check(source, settings, &spec)?);

    let support = source.i_support();
    let inside: Vec<f64> = sample_source(source, settings.seed.wrapping_add(11), settings.samples)
        .into_iter()
        .filter(|s| s.intensity <= support)
        .map(|s| s.intensity)
        .collect();
    let n = inside.len().max(2) as f64;
    let mean = inside.iter().sum::<f64>() / n;
    let var = inside.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let exact = mean_intensity(source, &spec)?;
    checks.push(CheckResult::at_most(
        "mc_mean_intensity",
        z(mean, exact, (var / n).sqrt()),
        k,
        format!("quadrature {exact:.8e}, sampled {mean:.8e}"),
    ));

    for (i, basis) in [Basis::Z, Basis::X].into_iter().enumerate() {
        let iv = SelectionInterval::for_basis(source, basis, IntensityClass::S);
        let p = interval_probability(source, &iv, &spec)?;
        let mc = mc_interval_probability(
            source,
            &iv,
            settings.seed.wrapping_add(100 + i as u64),
            settings.samples,
        );
        checks.push(CheckResult::at_most(
            &format!("mc_probability_{}", basis.name().to_lowercase()),
            mc.z_score(p),
            k,
            format!(
                "quadrature {p:.8e}, sampled {:.8e} +- {:.2e}",
                mc.value, mc.std_error
            ),
        ));
    }

    // clicks
    let (ba, _) = derive_channel(system, settings.attenuation_db)?;
    let model = ClickModel::for_channel(system, &ba);
    let (ip, tp, pp) = (0.1, 0.03 * PI, 0.4);
    let (q, e) = crate::click::gain_error_pointwise(ip, tp, pp, State::H, &model);
    let counts = mc_clicks_point(
        ip,
        tp,
        pp,
        State::H,
        &model,
        settings.samples as u64,
        settings.seed.wrapping_add(200),
    );
    checks.push(CheckResult::at_most(
        "click_point_gain",
        z_binomial(counts.single_k + counts.single_l, counts.selected, q),
        k,
        format!("closed form {q:.6e}, simulated {:.6e}", counts.gain()),
    ));
    checks.push(CheckResult::at_most(
        "click_point_error",
        z_binomial(counts.errors, counts.single_k + counts.single_l, e),
        k,
        format!(
            "closed form {e:.6e}, simulated {:.6e}",
            counts.error_fraction()
        ),
    ));
    for (i, basis) in [Basis::Z, Basis::X].into_iter().enumerate() {
        let iv = SelectionInterval::for_basis(source, basis, IntensityClass::S);
        let st = interval_stats(source, &iv, &model, system.n_cut, &spec)?;
        // post-selection keeps only a few percent of the pulses
        let trials = 10 * settings.samples as u64;
        let c = mc_clicks_interval(
            source,
            &iv,
            &model,
            trials,
            settings.seed.wrapping_add(300 + i as u64),
        );
        let b = basis.name().to_lowercase();
        checks.push(CheckResult::at_most(
            &format!("click_interval_gain_{b}"),
            z_binomial(c.single_k + c.single_l, c.selected, st.q_gain),
            k,
            format!(
                "closed form {:.6e}, simulated {:.6e} over {} pulses",
                st.q_gain,
                c.gain(),
                c.selected
            ),
        ));
        checks.push(CheckResult::at_most(
            &format!("click_interval_error_{b}"),
            z_binomial(c.errors, c.single_k + c.single_l, st.observed_error()),
            k,
            format!(
                "closed form {:.6e}, simulated {:.6e}",
                st.observed_error(),
                c.error_fraction()
            ),
        ));
    }

    // photon-number decomposition of the gain
    let iv = SelectionInterval::for_basis(source, Basis::Z, IntensityClass::S);
    let deep = interval_stats(source, &iv, &model, 40, &spec)?;
    let summed: f64 = (0..=40)
        .map(|n| deep.poisson[n] * deep.weighted_yields[n])
        .sum();
    checks.push(CheckResult::at_most(
        "gain_photon_sum",
        (summed - deep.q_gain).abs() / deep.q_gain,
        1e-9,
        format!("<Q> {:.10e}, sum over n {summed:.10e}", deep.q_gain),
    ));

    // states
    let unions: Vec<SelectionInterval> = Basis::ALL
        .iter()
        .map(|&b| SelectionInterval::for_basis(source, b, IntensityClass::S))
        .collect();
    let rho1 = union_density_matrix(source, &unions, 1, mode, &spec)?;
    let dev = [(0, 0, 0.5), (1, 1, 0.5), (0, 1, 0.0), (1, 0, 0.0)]
        .iter()
        .map(|&(a, b, w)| (rho1.get(a, b) - num_complex::Complex64::new(w, 0.0)).norm())
        .fold(0.0, f64::max);
    checks.push(CheckResult::at_most(
        "rho1_maximally_mixed",
        dev,
        1e-6,
        format!("max deviation {dev:.2e}"),
    ));

    let mut worst_res: f64 = 0.0;
    let mut count = 0;
    for basis in Basis::ALL {
        for class in IntensityClass::ALL {
            let iv = SelectionInterval::for_basis(source, basis, class);
            for n in 0..=system.n_cut {
                let rho = density_matrix(source, &iv, n, mode, &spec)?;
                let eig = hermitian_eigen(&rho.matrix)?;
                worst_res =
                    worst_res.max(eig.residual(&rho.matrix) / rho.matrix.frobenius().max(1.0));
                count += 1;
            }
        }
    }
    checks.push(CheckResult::at_most(
        "eigen_residual",
        worst_res,
        1e-10,
        format!("{count} matrices, worst relative residual {worst_res:.2e}"),
    ));

    // decoy programs
    let opts = EvalOptions {
        mode,
        ..Default::default()
    };
    let mut worst_triangle: f64 = f64::NEG_INFINITY;
    let mut worst_feas: f64 = 0.0;
    let mut worst_bound: f64 = f64::NEG_INFINITY;
    for basis in [Basis::Z, Basis::X] {
        let a = BasisAnalysis::build(system, source, basis, settings.attenuation_db, &opts)?;
        for table in std::iter::once(&a.union_table).chain(&a.state_tables) {
            for v in &table.values {
                for i in 0..3 {
                    for j in 0..3 {
                        for l in 0..3 {
                            worst_triangle = worst_triangle.max(v[i][l] - v[i][j] - v[j][l]);
                        }
                    }
                }
            }
        }
        let ylp = a.yield_lp()?;
        let x = assignment_from_stats(&a.union_classes(), a.n_cut, |s| &s.weighted_yields);
        worst_feas = worst_feas.max(ylp.max_violation(&x));
        let y1_min = solve_lp(&ylp).require_optimal("yield")?.objective;
        let signal = &a.union_ba[2];
        worst_bound = worst_bound.max(y1_min - signal.yields[1].min(signal.weighted_yields[1]));
        for (s, lp) in a.error_lps()?.iter().enumerate() {
            let x =
                assignment_from_stats(&a.state_classes(s), a.n_cut, |st| &st.weighted_error_yields);
            worst_feas = worst_feas.max(lp.max_violation(&x));
            let ey = solve_lp(lp).require_optimal(&lp.name)?.objective;
            let st = &a.state_ba[s].1[2];
            worst_bound = worst_bound.max(st.error_yields[1].max(st.weighted_error_yields[1]) - ey);
        }
    }
    checks.push(CheckResult::at_most(
        "trace_triangle",
        worst_triangle.max(0.0),
        1e-12,
        format!("largest d(a,c) - d(a,b) - d(b,c) = {worst_triangle:.2e}"),
    ));
    checks.push(CheckResult::at_most(
        "lp_theory_feasible",
        worst_feas,
        1e-9,
        format!("largest constraint violation of the theoretical yields {worst_feas:.2e}"),
    ));
    checks.push(CheckResult::at_most(
        "lp_bounds_sound",
        worst_bound.max(0.0),
        1e-12,
        format!("largest bound overshoot {worst_bound:.2e}"),
    ));

    let passed = checks.iter().all(|c| c.passed);
    Ok(ValidationReport {
        settings: settings.clone(),
        passed,
        checks,
    })
}

/// Sampled `(I, θ)` histogram against bin probabilities from quadrature.
fn histogram_check(
    source: &SourceParams,
    settings: &ValidationSettings,
    spec: &QuadratureSpec,
) -> Result<CheckResult> {
    const NI: usize = 5;
    const NT: usize = 6;
    let support = source.i_support();
    let mut counts = [[0usize; NT]; NI];
    let mut total = 0usize;
    for s in sample_source(source, settings.seed.wrapping_add(7), settings.samples) {
        if s.intensity > support {
            continue;
        }
        total += 1;
        let bi = (((s.intensity / support) * NI as f64).ceil() as usize).clamp(1, NI) - 1;
        let bt = ((s.theta / PI * NT as f64) as usize).min(NT - 1);
        counts[bi][bt] += 1;
    }
    let mut worst: f64 = 0.0;
    let mut where_ = (0, 0);
    for (bi, row) in counts.iter().enumerate() {
        for (bt, &c) in row.iter().enumerate() {
            let iv = SelectionInterval {
                basis: Basis::Z,
                class: None,
                i_range: (
                    support * bi as f64 / NI as f64,
                    support * (bi + 1) as f64 / NI as f64,
                ),
                cells: vec![Cell {
                    state: State::H,
                    theta: (PI * bt as f64 / NT as f64, PI * (bt + 1) as f64 / NT as f64),
                    phi: PhiSet::Full,
                }],
            };
            let p = interval_probability(source, &iv, spec)?;
            let zs = z_binomial(c as u64, total as u64, p);
            if zs > worst {
                worst = zs;
                where_ = (bi, bt);
            }
        }
    }
    Ok(CheckResult::at_most(
        "density_histogram",
        worst,
        settings.sigma,
        format!("{NI}x{NT} bins over {total} samples, worst bin {where_:?}"),
    ))
}
