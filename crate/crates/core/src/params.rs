//! Device, channel and source parameters.
//!
//! Everything downstream reads its constants from here. Defaults are the
//! experimental values of the memory-based QSDC demonstration the model is
//! calibrated against: `eta_opt_ba = 0.21`, `eta_opt_bab = 0.088`,
//! `Pd = 8e-8`, `e_d^A = 0.0131`, `e_d^B = 0.0026`, `eta_D = 0.7`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Decoy boundary `I_vac` as a fraction of the signal upper bound.
pub const DEFAULT_VAC_RATIO: f64 = 0.05;
/// Decoy boundary `I_d` as a fraction of the signal upper bound.
pub const DEFAULT_DECOY_RATIO: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemParams {
    /// Intrinsic optical efficiency of the first (Bob to Alice) round.
    pub eta_opt_ba: f64,
    /// Intrinsic optical efficiency of the full round trip.
    pub eta_opt_bab: f64,
    /// Dark count probability per detector and pulse.
    pub dark_count: f64,
    /// Misalignment error at Alice (first round measurements).
    pub err_opt_a: f64,
    /// Misalignment error at Bob (round-trip measurements).
    pub err_opt_b: f64,
    pub eta_det: f64,
    /// One-way fiber loss in dB/km.
    pub fiber_loss_db_per_km: f64,
    /// `max{1, gamma_E / gamma_A}`: scales Alice-side gains into Eve's gains.
    pub eve_advantage: f64,
    /// Photon-number truncation of the decoy linear programs.
    pub n_cut: usize,
    /// Optional pulse repetition rate; when set, reports also carry bits/s.
    pub repetition_rate_hz: Option<f64>,
}

impl Default for SystemParams {
    fn default() -> Self {
        SystemParams {
            eta_opt_ba: 0.21,
            eta_opt_bab: 0.088,
            dark_count: 8e-8,
            err_opt_a: 0.0131,
            err_opt_b: 0.0026,
            eta_det: 0.7,
            fiber_loss_db_per_km: 0.2,
            eve_advantage: 1.0,
            n_cut: 7,
            repetition_rate_hz: None,
        }
    }
}

fn check(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::invalid(msg))
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        check(
            self.eta_opt_ba > 0.0 && self.eta_opt_ba <= 1.0,
            "eta_opt_ba must lie in (0, 1]",
        )?;
        check(
            self.eta_opt_bab > 0.0 && self.eta_opt_bab <= 1.0,
            "eta_opt_bab must lie in (0, 1]",
        )?;
        check(
            (0.0..1.0).contains(&self.dark_count),
            "dark_count must lie in [0, 1)",
        )?;
        check(
            (0.0..0.5).contains(&self.err_opt_a),
            "err_opt_a must lie in [0, 0.5)",
        )?;
        check(
            (0.0..0.5).contains(&self.err_opt_b),
            "err_opt_b must lie in [0, 0.5)",
        )?;
        check(
            self.eta_det > 0.0 && self.eta_det <= 1.0,
            "eta_det must lie in (0, 1]",
        )?;
        check(
            self.fiber_loss_db_per_km > 0.0 && self.fiber_loss_db_per_km.is_finite(),
            "fiber_loss_db_per_km must be positive",
        )?;
        check(
            self.eve_advantage >= 1.0 && self.eve_advantage.is_finite(),
            "eve_advantage must be >= 1",
        )?;
        check(self.n_cut >= 2, "n_cut must be >= 2")?;
        if let Some(rate) = self.repetition_rate_hz {
            check(
                rate > 0.0 && rate.is_finite(),
                "repetition_rate_hz must be positive",
            )?;
        }
        Ok(())
    }

    /// Misalignment error of whoever measures in `round`.
    pub fn misalignment(&self, round: Round) -> f64 {
        match round {
            Round::BA => self.err_opt_a,
            Round::BAB => self.err_opt_b,
        }
    }

    /// Fiber length (km) corresponding to a round-trip attenuation.
    pub fn distance_km(&self, total_attenuation_db: f64) -> f64 {
        total_attenuation_db / (2.0 * self.fiber_loss_db_per_km)
    }

    /// Round-trip attenuation (dB) of a fiber of `km` kilometres.
    pub fn attenuation_db(&self, km: f64) -> f64 {
        km * 2.0 * self.fiber_loss_db_per_km
    }
}

/// Post-selection geometry of the passive source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceParams {
    /// Upper boundary `I_s` of the signal interval.
    pub intensity_max: f64,
    pub i_vac: f64,
    pub i_d: f64,
    /// Half-width (rad) of the X/Y intervals in both theta and phi.
    pub delta_x: f64,
    /// Half-width (rad) of the Z intervals in theta.
    pub delta_z: f64,
    /// Product `v t`; the density is supported on `I in (0, 2 v t]`.
    pub vt_product: f64,
}

impl SourceParams {
    /// Source with the standard decoy boundaries `0.05 I`, `0.1 I` and `vt = I / 2`.
    pub fn new(intensity: f64, delta_x: f64, delta_z: f64) -> Self {
        SourceParams {
            intensity_max: intensity,
            i_vac: DEFAULT_VAC_RATIO * intensity,
            i_d: DEFAULT_DECOY_RATIO * intensity,
            delta_x,
            delta_z,
            vt_product: 0.5 * intensity,
        }
    }

    pub fn validate(&self) -> Result<()> {
        use std::f64::consts::FRAC_PI_2;
        check(self.delta_x > 0.0, "delta_x must be positive")?;
        check(self.delta_x < FRAC_PI_2, "delta_x must be below pi/2")?;
        check(self.delta_z > 0.0, "delta_z must be positive")?;
        check(self.delta_z < FRAC_PI_2, "delta_z must be below pi/2")?;
        check(
            self.intensity_max > 0.0 && self.intensity_max.is_finite(),
            "intensity_max must be positive",
        )?;
        check(
            0.0 <= self.i_vac && self.i_vac < self.i_d && self.i_d < self.intensity_max,
            "interval boundaries must satisfy 0 <= i_vac < i_d < intensity_max",
        )?;
        check(
            2.0 * self.vt_product >= self.intensity_max * (1.0 - 1e-12),
            "vt_product must satisfy 2 vt >= intensity_max",
        )?;
        Ok(())
    }

    /// Largest intensity the source can emit, `2 v t`.
    pub fn i_support(&self) -> f64 {
        2.0 * self.vt_product
    }
}

/// The two transmission rounds of the protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Round {
    /// Bob to Alice.
    BA,
    /// Bob to Alice and back to Bob.
    BAB,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub round: Round,
    pub attenuation_db: f64,
    /// Fiber transmittance `10^(-attenuation/10)`.
    pub transmittance: f64,
    /// Overall efficiency `t * eta_opt` (detector excluded).
    pub efficiency: f64,
}

/// Splits a round-trip attenuation into the BA (half) and BAB (full) channels.
pub fn derive_channel(
    params: &SystemParams,
    total_attenuation_db: f64,
) -> Result<(ChannelSpec, ChannelSpec)> {
    if !(total_attenuation_db >= 0.0) || !total_attenuation_db.is_finite() {
        return Err(Error::invalid(format!(
            "attenuation must be a non-negative dB figure, got {total_attenuation_db}"
        )));
    }
    let spec = |round, db: f64, eta_opt: f64| {
        let t = 10f64.powf(-db / 10.0);
        ChannelSpec {
            round,
            attenuation_db: db,
            transmittance: t,
            efficiency: t * eta_opt,
        }
    };
    Ok((
        spec(Round::BA, 0.5 * total_attenuation_db, params.eta_opt_ba),
        spec(Round::BAB, total_attenuation_db, params.eta_opt_bab),
    ))
}
