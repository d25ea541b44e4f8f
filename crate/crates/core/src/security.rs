//! Wiretap secrecy capacity.
//!
//! Per basis `K`:
//!
//! ```text
//! C_K = <Q^BAB> [1 - h(<E^BAB>)] - Q_1^BAE h(2 e_1) - Q_{>=2}^BAE
//! ```
//!
//! Eve's single-photon and multi-photon gains are bounded by Alice's
//! first-round gain scaled by `κ = max{1, γ_E / γ_A}`:
//!
//! ```text
//! Q_1^BAE    = κ [P_1 (Y_1^min - Y_0^A)]^+
//! Q_{>=2}^BAE = κ [Q^BA - P_0 Y_0^A - P_1 Y_1^min - (1 - P_0 - P_1) Y_0^A]^+
//! ```
//!
//! with `Y_0^A = 2 Pd (1 - Pd)`. The transmission rate weighs each basis by
//! its post-selection probability, `C_s = Σ_K <P>_K C_K`.

use serde::Serialize;

use crate::click::{detector_gains, yield_pointwise, ClickModel, IntervalStats};
use crate::error::{Error, Result};
use crate::lp::SinglePhotonBounds;
use crate::params::{derive_channel, SystemParams};

/// Binary entropy in bits, `h(0) = h(1) = 0`.
pub fn binary_entropy(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
    }
}

/// `Q [1 - h(E)]` from the gain and error rate of the round trip.
pub fn mutual_info(q_gain: f64, e_rate: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&e_rate) {
        return Err(Error::invalid(format!(
            "error rate {e_rate} outside [0, 1]"
        )));
    }
    Ok(q_gain * (1.0 - binary_entropy(e_rate)))
}

/// `I(A:B)` of the signal interval in the round-trip statistics.
pub fn mutual_info_ab(stats_bab: &IntervalStats) -> Result<f64> {
    mutual_info(stats_bab.q_gain, stats_bab.e_rate)
}

/// First-round quantities that bound what Eve can receive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EveBoundInputs {
    /// `<Q^BA>` of the signal interval.
    pub q_ba: f64,
    pub p0: f64,
    pub p1: f64,
    /// Zero-photon yield at Alice.
    pub y0_alice: f64,
    pub kappa: f64,
}

impl EveBoundInputs {
    pub fn from_stats(stats_ba: &IntervalStats, params: &SystemParams) -> Self {
        EveBoundInputs {
            q_ba: stats_ba.q_gain,
            p0: stats_ba.poisson[0],
            p1: stats_ba.poisson[1],
            y0_alice: 2.0 * params.dark_count * (1.0 - params.dark_count),
            kappa: params.eve_advantage,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EveInfo {
    pub q_single: f64,
    pub q_multi: f64,
    /// Information per single-photon click, `h(2 e_1)` or 1 once `e_1 >= 1/4`.
    pub h_single: f64,
    pub total: f64,
}

/// `I(A:E) = Q_1 H_1 + Q_{>=2}`.
pub fn eve_info(bounds: &SinglePhotonBounds, inp: &EveBoundInputs) -> EveInfo {
    let y1 = bounds.y1_min;
    let q_single = (inp.p1 * (y1 - inp.y0_alice)).max(0.0) * inp.kappa;
    let q_multi =
        (inp.q_ba - inp.p0 * inp.y0_alice - inp.p1 * y1 - (1.0 - inp.p0 - inp.p1) * inp.y0_alice)
            .max(0.0)
            * inp.kappa;
    let h_single = if bounds.e1_max >= 0.25 {
        1.0
    } else {
        binary_entropy(2.0 * bounds.e1_max)
    };
    EveInfo {
        q_single,
        q_multi,
        h_single,
        total: q_single * h_single + q_multi,
    }
}

/// `max(0, I(A:B) - I(A:E))`.
pub fn capacity(i_ab: f64, eve: &EveInfo) -> f64 {
    (i_ab - eve.total).max(0.0)
}

/// `Σ_K <P>_K C_K`.
pub fn transmission_rate(per_basis: &[(f64, f64)]) -> f64 {
    per_basis.iter().map(|(p, c)| p * c).sum()
}

/// Capacity of the actively modulated reference source at mean photon number
/// `mu`: perfect states, a single Poisson intensity and exact single-photon
/// parameters (the infinite-decoy limit).
pub fn active_baseline(mu: f64, attenuation_db: f64, params: &SystemParams) -> Result<f64> {
    if !(mu > 0.0) {
        return Err(Error::invalid("baseline intensity must be positive"));
    }
    let (ba, bab) = derive_channel(params, attenuation_db)?;
    let m_bab = ClickModel::for_channel(params, &bab);
    let m_ba = ClickModel::for_channel(params, &ba);
    let (qk, ql) = detector_gains(mu, 1.0, &m_bab);
    let q = qk + ql;
    let e = (m_bab.misalignment * qk + (1.0 - m_bab.misalignment) * ql) / q;
    let i_ab = mutual_info(q, e)?;
    let (qk, ql) = detector_gains(mu, 1.0, &m_ba);
    let (y1, ey1) = yield_pointwise(1, 1.0, &m_ba);
    let bounds = SinglePhotonBounds::from_lp_values(y1, ey1);
    let inputs = EveBoundInputs {
        q_ba: qk + ql,
        p0: (-mu).exp(),
        p1: mu * (-mu).exp(),
        y0_alice: m_ba.vacuum_yield(),
        kappa: params.eve_advantage,
    };
    Ok(capacity(i_ab, &eve_info(&bounds, &inputs)))
}

/// Baseline capacity maximised over `mu`; returns `(mu, capacity)`.
pub fn active_baseline_optimal(attenuation_db: f64, params: &SystemParams) -> Result<(f64, f64)> {
    let eval = |ln_mu: f64| active_baseline(ln_mu.exp(), attenuation_db, params);
    let (lo, hi) = (1e-5f64.ln(), 2f64.ln());
    let steps = 120;
    let mut best = (lo, eval(lo)?);
    for k in 1..=steps {
        let x = lo + (hi - lo) * k as f64 / steps as f64;
        let v = eval(x)?;
        if v > best.1 {
            best = (x, v);
        }
    }
    if best.1 <= 0.0 {
        return Ok((best.0.exp(), 0.0));
    }
    // golden-section polish inside the neighbouring grid cells
    let h = (hi - lo) / steps as f64;
    let (mut a, mut b) = (best.0 - h, best.0 + h);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (eval(c)?, eval(d)?);
    for _ in 0..60 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = eval(d)?;
        }
    }
    let x = 0.5 * (a + b);
    let v = eval(x)?;
    Ok(if v >= best.1 {
        (x.exp(), v)
    } else {
        (best.0.exp(), best.1)
    })
}
