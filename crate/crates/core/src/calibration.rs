//! Calibration of the eavesdropper advantage `κ` against reference rates.
//!
//! `I(A:E)` is linear in `κ`, so one evaluation per operating point at a known
//! `κ` gives the rate for every other `κ` without rerunning the pipeline.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{SourceParams, SystemParams};
use crate::pipeline::{evaluate, EvalOptions, SecrecyReport};

/// An operating point with a reference transmission rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferencePoint {
    pub attenuation_db: f64,
    pub intensity: f64,
    pub delta_x: f64,
    pub delta_z: f64,
    pub rate: f64,
}

impl ReferencePoint {
    pub fn source(&self) -> SourceParams {
        SourceParams::new(self.intensity, self.delta_x, self.delta_z)
    }
}

/// Reference optimum operating points and target rates at 2, 4 and 6 dB.
pub const REFERENCE_POINTS: [ReferencePoint; 3] = [
    ReferencePoint {
        attenuation_db: 2.0,
        intensity: 0.0895,
        delta_x: 0.0490 * PI,
        delta_z: 0.0546 * PI,
        rate: 5.76e-5,
    },
    ReferencePoint {
        attenuation_db: 4.0,
        intensity: 0.0471,
        delta_x: 0.0367 * PI,
        delta_z: 0.0408 * PI,
        rate: 9.92e-6,
    },
    ReferencePoint {
        attenuation_db: 6.0,
        intensity: 0.0168,
        delta_x: 0.0152 * PI,
        delta_z: 0.0214 * PI,
        rate: 4.99e-7,
    },
];

/// Rate of `report` had it been computed with advantage `kappa`.
pub fn rate_with_kappa(report: &SecrecyReport, kappa: f64) -> f64 {
    let scale = kappa / report.system.eve_advantage;
    report
        .bases
        .iter()
        .map(|b| b.p_select * (b.i_ab - scale * b.eve.total).max(0.0))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KappaCandidate {
    pub label: String,
    pub kappa: f64,
    /// Model rate over reference rate, per reference point.
    pub ratios: Vec<f64>,
    /// Largest `|ln ratio|`; smaller is better.
    pub worst_log_error: f64,
}

impl KappaCandidate {
    fn new(label: &str, kappa: f64, reports: &[SecrecyReport], points: &[ReferencePoint]) -> Self {
        let ratios: Vec<f64> = reports
            .iter()
            .zip(points)
            .map(|(r, p)| rate_with_kappa(r, kappa) / p.rate)
            .collect();
        let worst_log_error = ratios
            .iter()
            .map(|r| {
                if *r > 0.0 {
                    r.ln().abs()
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0, f64::max);
        KappaCandidate {
            label: label.to_string(),
            kappa,
            ratios,
            worst_log_error,
        }
    }

    pub fn max_relative_error(&self) -> f64 {
        self.ratios
            .iter()
            .map(|r| (r - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KappaCalibration {
    pub points: Vec<ReferencePoint>,
    pub candidates: Vec<KappaCandidate>,
    /// Index of the best of the three physically motivated candidates.
    pub best_candidate: usize,
    /// Best `κ >= 1` on a fine grid.
    pub fitted: KappaCandidate,
}

impl KappaCalibration {
    pub fn best(&self) -> &KappaCandidate {
        &self.candidates[self.best_candidate]
    }
}

/// Evaluates every point once and ranks `κ ∈ {1, 1/η_D, 1/(η_D η_opt^BA)}`,
/// then fits `κ` on a grid of step 1e-3 up to the largest candidate.
pub fn calibrate_kappa(
    system: &SystemParams,
    points: &[ReferencePoint],
    opts: &EvalOptions,
) -> Result<KappaCalibration> {
    if points.is_empty() {
        return Err(Error::invalid(
            "calibration needs at least one reference point",
        ));
    }
    let reports = points
        .iter()
        .map(|p| evaluate(system, &p.source(), p.attenuation_db, opts))
        .collect::<Result<Vec<_>>>()?;
    let named = [
        ("1", 1.0),
        ("1/eta_det", 1.0 / system.eta_det),
        (
            "1/(eta_det*eta_opt_ba)",
            1.0 / (system.eta_det * system.eta_opt_ba),
        ),
    ];
    let candidates: Vec<KappaCandidate> = named
        .iter()
        .map(|(l, k)| KappaCandidate::new(l, *k, &reports, points))
        .collect();
    let best_candidate = (0..candidates.len())
        .min_by(|&a, &b| {
            candidates[a]
                .worst_log_error
                .total_cmp(&candidates[b].worst_log_error)
        })
        .expect("three candidates");
    let k_max = named.iter().map(|n| n.1).fold(1.0, f64::max);
    let steps = ((k_max - 1.0) / 1e-3).ceil() as usize;
    let fitted = (0..=steps)
        .map(|s| KappaCandidate::new("fitted", 1.0 + 1e-3 * s as f64, &reports, points))
        .min_by(|a, b| a.worst_log_error.total_cmp(&b.worst_log_error))
        .expect("grid is non-empty");
    Ok(KappaCalibration {
        points: points.to_vec(),
        candidates,
        best_candidate,
        fitted,
    })
}
