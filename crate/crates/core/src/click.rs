//! Detector clicks, gains and error rates.
//!
//! Two detectors sit behind a polarising beam splitter aligned with the
//! measured basis. A pulse prepared near state `k` sends each photon to
//! detector `k` with probability `|f(k)|²` and to the orthogonal detector
//! `l` with `|f(l)| ² = 1 - |f(k)|²`. Only single clicks count; a click on
//! `l` is an error, and misalignment flips the outcome with probability `e_d`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{ChannelSpec, SourceParams, SystemParams};
use crate::quadrature::QuadratureSpec;
use crate::source::{sample_source, CellNodes, SelectionInterval, State};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClickModel {
    pub eta_det: f64,
    pub dark_count: f64,
    /// Channel efficiency `η^chan` (fiber and optics, detector excluded).
    pub efficiency: f64,
    pub misalignment: f64,
}

impl ClickModel {
    /// The model seen by whoever measures at the end of `channel`.
    pub fn for_channel(params: &SystemParams, channel: &ChannelSpec) -> Self {
        ClickModel {
            eta_det: params.eta_det,
            dark_count: params.dark_count,
            efficiency: channel.efficiency,
            misalignment: params.misalignment(channel.round),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !(unit(self.eta_det) && unit(self.dark_count) && unit(self.efficiency)) {
            return Err(Error::invalid(
                "click model efficiencies must lie in [0, 1]",
            ));
        }
        if !(0.0..0.5).contains(&self.misalignment) {
            return Err(Error::invalid("misalignment must lie in [0, 0.5)"));
        }
        Ok(())
    }

    /// Detector-inclusive efficiency `η^chan η_D`.
    pub fn total_efficiency(&self) -> f64 {
        self.efficiency * self.eta_det
    }

    /// `2 Pd (1 - Pd)`: single-click probability of an empty pulse.
    pub fn vacuum_yield(&self) -> f64 {
        2.0 * self.dark_count * (1.0 - self.dark_count)
    }
}

/// Probabilities that `n` photons arriving at the detectors produce a click on
/// `k` only and on `l` only.
pub fn click_prob_state(n: u32, f2_k: f64, f2_l: f64, model: &ClickModel) -> Result<(f64, f64)> {
    if (f2_k + f2_l - 1.0).abs() > 1e-12 || f2_k < 0.0 || f2_l < 0.0 {
        return Err(Error::invalid(format!(
            "projection weights must be non-negative and sum to one, got {f2_k} + {f2_l}"
        )));
    }
    let nd = 1.0 - model.dark_count;
    let both_silent = nd * nd * (1.0 - model.eta_det).powi(n as i32);
    let pk = nd * (1.0 - f2_l * model.eta_det).powi(n as i32) - both_silent;
    let pl = nd * (1.0 - f2_k * model.eta_det).powi(n as i32) - both_silent;
    Ok((pk.clamp(0.0, 1.0), pl.clamp(0.0, 1.0)))
}

/// `(Q_k, Q_l)` for a coherent pulse of intensity `I` whose photons go to `k`
/// with probability `f2_k`.
#[inline]
pub fn detector_gains(intensity: f64, f2_k: f64, model: &ClickModel) -> (f64, f64) {
    let pd = model.dark_count;
    let m = intensity * model.total_efficiency();
    let (mk, ml) = (m * f2_k, m * (1.0 - f2_k));
    // Q_k = (1-Pd) e^{-m_l} (1 - (1-Pd) e^{-m_k}), written without cancellation
    let fires = |x: f64| -(-x).exp_m1() + pd * (-x).exp();
    let qk = (1.0 - pd) * (-ml).exp() * fires(mk);
    let ql = (1.0 - pd) * (-mk).exp() * fires(ml);
    (qk, ql)
}

/// Gain `Q` and error rate `E_k` of a pulse at `(I, θ, φ)` measured against `state`.
pub fn gain_error_pointwise(
    intensity: f64,
    theta: f64,
    phi: f64,
    state: State,
    model: &ClickModel,
) -> (f64, f64) {
    let (qk, ql) = detector_gains(intensity, state.projection(theta, phi), model);
    let q = qk + ql;
    let e = if q > 0.0 {
        (model.misalignment * qk + (1.0 - model.misalignment) * ql) / q
    } else {
        0.0
    };
    (q, e)
}

/// Theoretical `(Y_n, e_n Y_n)` of an `n`-photon emission.
#[inline]
pub fn yield_pointwise(n: u32, f2_k: f64, model: &ClickModel) -> (f64, f64) {
    let nd = 1.0 - model.dark_count;
    let eta = model.total_efficiency();
    let n = n as i32;
    let to_k = nd * (1.0 - eta * (1.0 - f2_k)).powi(n);
    let to_l = nd * (1.0 - eta * f2_k).powi(n);
    let silent = nd * nd * (1.0 - eta).powi(n);
    let ed = model.misalignment;
    (
        to_k + to_l - 2.0 * silent,
        ed * to_k + (1.0 - ed) * to_l - silent,
    )
}

/// Averages over one selection interval. Everything except `p_select` is
/// conditional on selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalStats {
    pub p_select: f64,
    pub q_gain: f64,
    /// Average of the pointwise error rate `E_k`.
    pub e_rate: f64,
    pub eq_product: f64,
    /// `<P_I(n)>` for `n = 0..=n_cut`.
    pub poisson: Vec<f64>,
    /// Plain averages `<Y_n>`.
    pub yields: Vec<f64>,
    /// Plain averages `<e_n Y_n>`.
    pub error_yields: Vec<f64>,
    /// `<P_I(n) Y_n> / <P_I(n)>`: the yields that make the factored gain
    /// sums exact.
    pub weighted_yields: Vec<f64>,
    pub weighted_error_yields: Vec<f64>,
}

impl IntervalStats {
    pub fn n_cut(&self) -> usize {
        self.poisson.len() - 1
    }

    /// `<EQ> / <Q>`: the error fraction an experiment would observe.
    pub fn observed_error(&self) -> f64 {
        if self.q_gain > 0.0 {
            self.eq_product / self.q_gain
        } else {
            0.0
        }
    }
}

/// Unnormalised interval sums; two of them add up to their union.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct RawStats {
    p: f64,
    q: f64,
    e: f64,
    eq: f64,
    pn: Vec<f64>,
    y: Vec<f64>,
    ey: Vec<f64>,
    py: Vec<f64>,
    pey: Vec<f64>,
}

impl RawStats {
    fn zero(n_cut: usize) -> Self {
        let z = vec![0.0; n_cut + 1];
        RawStats {
            p: 0.0,
            q: 0.0,
            e: 0.0,
            eq: 0.0,
            pn: z.clone(),
            y: z.clone(),
            ey: z.clone(),
            py: z.clone(),
            pey: z,
        }
    }

    pub fn merge(&mut self, other: &RawStats) {
        self.p += other.p;
        self.q += other.q;
        self.e += other.e;
        self.eq += other.eq;
        for (a, b) in [
            (&mut self.pn, &other.pn),
            (&mut self.y, &other.y),
            (&mut self.ey, &other.ey),
            (&mut self.py, &other.py),
            (&mut self.pey, &other.pey),
        ] {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }

    pub fn accumulate(cell: &CellNodes, model: &ClickModel, n_cut: usize) -> Self {
        let mut raw = RawStats::zero(n_cut);
        let state = cell.cell.state;
        let frac = cell.phi_fraction;
        match &cell.phi {
            None => {
                for &(i, t, w) in &cell.nodes {
                    raw.add_point(i, state.projection(t, 0.0), w * frac, model);
                }
            }
            Some(rule) => {
                for &(i, t, w) in &cell.nodes {
                    for (&phi, &wp) in rule.points.iter().zip(&rule.weights) {
                        raw.add_point(i, state.projection(t, phi), w * wp * frac, model);
                    }
                }
            }
        }
        raw
    }

    #[inline]
    fn add_point(&mut self, intensity: f64, f2_k: f64, w: f64, model: &ClickModel) {
        let (qk, ql) = detector_gains(intensity, f2_k, model);
        let q = qk + ql;
        let ed = model.misalignment;
        let eq = ed * qk + (1.0 - ed) * ql;
        self.p += w;
        self.q += w * q;
        self.eq += w * eq;
        if q > 0.0 {
            self.e += w * eq / q;
        }
        let nd = 1.0 - model.dark_count;
        let eta = model.total_efficiency();
        let (ak, al, a0) = (1.0 - eta * (1.0 - f2_k), 1.0 - eta * f2_k, 1.0 - eta);
        let (mut pk, mut pl, mut p0) = (nd, nd, nd * nd);
        let mut pois = (-intensity).exp();
        for n in 0..self.pn.len() {
            if n > 0 {
                pk *= ak;
                pl *= al;
                p0 *= a0;
                pois *= intensity / n as f64;
            }
            let y = pk + pl - 2.0 * p0;
            let ey = ed * pk + (1.0 - ed) * pl - p0;
            self.pn[n] += w * pois;
            self.y[n] += w * y;
            self.ey[n] += w * ey;
            self.py[n] += w * pois * y;
            self.pey[n] += w * pois * ey;
        }
    }

    pub fn finish(&self) -> Result<IntervalStats> {
        if !(self.p > 0.0) {
            return Err(Error::invalid("interval has zero selection probability"));
        }
        let norm = |v: &[f64]| v.iter().map(|x| x / self.p).collect::<Vec<_>>();
        let ratio = |num: &[f64]| {
            num.iter()
                .zip(&self.pn)
                .map(|(a, b)| if *b > 0.0 { a / b } else { 0.0 })
                .collect::<Vec<_>>()
        };
        Ok(IntervalStats {
            p_select: self.p,
            q_gain: self.q / self.p,
            e_rate: self.e / self.p,
            eq_product: self.eq / self.p,
            poisson: norm(&self.pn),
            yields: norm(&self.y),
            error_yields: norm(&self.ey),
            weighted_yields: ratio(&self.py),
            weighted_error_yields: ratio(&self.pey),
        })
    }
}

fn raw_interval(
    source: &SourceParams,
    interval: &SelectionInterval,
    model: &ClickModel,
    n_cut: usize,
    spec: &QuadratureSpec,
) -> Result<RawStats> {
    interval.validate(source)?;
    model.validate()?;
    spec.validate()?;
    let mut raw = RawStats::zero(n_cut);
    for cell in &interval.cells {
        let nodes = CellNodes::build(source, interval.i_range, cell, spec);
        raw.merge(&RawStats::accumulate(&nodes, model, n_cut));
    }
    Ok(raw)
}

/// Interval averages on a fixed quadrature rule.
pub fn interval_stats(
    source: &SourceParams,
    interval: &SelectionInterval,
    model: &ClickModel,
    n_cut: usize,
    spec: &QuadratureSpec,
) -> Result<IntervalStats> {
    raw_interval(source, interval, model, n_cut, spec)?.finish()
}

/// Interval averages refined by node doubling until the gain and the error
/// product settle to `spec.rel_tol`.
pub fn interval_stats_refined(
    source: &SourceParams,
    interval: &SelectionInterval,
    model: &ClickModel,
    n_cut: usize,
    spec: &QuadratureSpec,
) -> Result<IntervalStats> {
    let mut current = *spec;
    let mut prev = interval_stats(source, interval, model, n_cut, &current)?;
    for _ in 0..spec.max_refinements {
        current = current.doubled();
        let next = interval_stats(source, interval, model, n_cut, &current)?;
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(f64::MIN_POSITIVE);
        if rel(prev.q_gain, next.q_gain) <= spec.rel_tol
            && rel(prev.eq_product, next.eq_product) <= spec.rel_tol
        {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::QuadratureNonConvergence {
        previous: prev.q_gain,
        last: prev.q_gain,
        tolerance: spec.rel_tol,
    })
}

/// `(<Y_n>, <e_n Y_n>)` over an interval.
pub fn theoretical_yields(
    source: &SourceParams,
    interval: &SelectionInterval,
    model: &ClickModel,
    n: usize,
    spec: &QuadratureSpec,
) -> Result<(f64, f64)> {
    let s = interval_stats(source, interval, model, n, spec)?;
    Ok((s.yields[n], s.error_yields[n]))
}

/// Counts from a photon-level simulation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ClickCounts {
    pub trials: u64,
    /// Pulses that passed post-selection (equals `trials` for a fixed pulse).
    pub selected: u64,
    pub single_k: u64,
    pub single_l: u64,
    pub double: u64,
    /// Single clicks recorded as errors after misalignment flips.
    pub errors: u64,
}

impl ClickCounts {
    pub fn gain(&self) -> f64 {
        (self.single_k + self.single_l) as f64 / self.selected.max(1) as f64
    }

    pub fn gain_std_error(&self) -> f64 {
        let q = self.gain();
        (q * (1.0 - q) / self.selected.max(1) as f64).sqrt()
    }

    pub fn error_fraction(&self) -> f64 {
        self.errors as f64 / (self.single_k + self.single_l).max(1) as f64
    }

    pub fn error_std_error(&self) -> f64 {
        let e = self.error_fraction();
        (e * (1.0 - e) / (self.single_k + self.single_l).max(1) as f64).sqrt()
    }
}

fn simulate_pulse<R: Rng>(
    rng: &mut R,
    intensity: f64,
    f2_k: f64,
    model: &ClickModel,
    counts: &mut ClickCounts,
) {
    let photons = if intensity > 0.0 {
        Poisson::new(intensity)
            .map(|d| d.sample(rng) as u64)
            .unwrap_or(0)
    } else {
        0
    };
    let (mut click_k, mut click_l) = (false, false);
    for _ in 0..photons {
        if rng.random::<f64>() >= model.efficiency {
            continue;
        }
        let to_k = rng.random::<f64>() < f2_k;
        if rng.random::<f64>() < model.eta_det {
            if to_k {
                click_k = true;
            } else {
                click_l = true;
            }
        }
    }
    click_k |= rng.random::<f64>() < model.dark_count;
    click_l |= rng.random::<f64>() < model.dark_count;
    match (click_k, click_l) {
        (true, true) => counts.double += 1,
        (true, false) => {
            counts.single_k += 1;
            if rng.random::<f64>() < model.misalignment {
                counts.errors += 1;
            }
        }
        (false, true) => {
            counts.single_l += 1;
            if rng.random::<f64>() >= model.misalignment {
                counts.errors += 1;
            }
        }
        (false, false) => {}
    }
}

/// Photon-level simulation of one fixed pulse `(I, θ, φ)`.
pub fn mc_clicks_point(
    intensity: f64,
    theta: f64,
    phi: f64,
    state: State,
    model: &ClickModel,
    trials: u64,
    seed: u64,
) -> ClickCounts {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f2_k = state.projection(theta, phi);
    let mut counts = ClickCounts {
        trials,
        selected: trials,
        ..Default::default()
    };
    for _ in 0..trials {
        simulate_pulse(&mut rng, intensity, f2_k, model, &mut counts);
    }
    counts
}

/// Pulses drawn from the passive source, post-selected into `interval` and
/// detected photon by photon.
pub fn mc_clicks_interval(
    source: &SourceParams,
    interval: &SelectionInterval,
    model: &ClickModel,
    trials: u64,
    seed: u64,
) -> ClickCounts {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut counts = ClickCounts {
        trials,
        ..Default::default()
    };
    const BATCH: u64 = 1 << 16;
    let mut done = 0;
    let mut batch_seed = seed;
    while done < trials {
        let n = BATCH.min(trials - done);
        for pulse in sample_source(source, batch_seed, n as usize) {
            let Some(cell) = interval
                .cells
                .iter()
                .find(|c| c.contains(pulse.theta, pulse.phi))
            else {
                continue;
            };
            if !(pulse.intensity > interval.i_range.0 && pulse.intensity <= interval.i_range.1) {
                continue;
            }
            counts.selected += 1;
            let f2_k = cell.state.projection(pulse.theta, pulse.phi);
            simulate_pulse(&mut rng, pulse.intensity, f2_k, model, &mut counts);
        }
        done += n;
        batch_seed = batch_seed.wrapping_add(0x2545_f491_4f6c_dd1d);
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::derive_channel;
    use crate::source::{Basis, IntensityClass};
    use std::f64::consts::PI;

    fn table_model(eff: f64, ed: f64) -> ClickModel {
        ClickModel {
            eta_det: 0.7,
            dark_count: 8e-8,
            efficiency: eff,
            misalignment: ed,
        }
    }

    fn binomial(n: u32, k: u32) -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }

    #[test]
    fn click_prob_limits() {
        let m = ClickModel {
            eta_det: 0.7,
            dark_count: 0.0,
            efficiency: 1.0,
            misalignment: 0.0,
        };
        assert_eq!(click_prob_state(0, 0.5, 0.5, &m).unwrap(), (0.0, 0.0));
        let perfect = ClickModel { eta_det: 1.0, ..m };
        let (pk, pl) = click_prob_state(1, 1.0, 0.0, &perfect).unwrap();
        assert!((pk - 1.0).abs() < 1e-15 && pl == 0.0);
        assert!(click_prob_state(1, 0.6, 0.6, &m).is_err());
    }

    #[test]
    fn click_prob_matches_binomial_sum() {
        let m = table_model(1.0, 0.0);
        let (n, fk) = (3u32, 0.9_f64);
        let nd = 1.0 - m.dark_count;
        let mut pk = 0.0;
        for mk in 0..=n {
            let ml = n - mk;
            let weight = binomial(n, mk) * fk.powi(mk as i32) * (1.0 - fk).powi(ml as i32);
            let k_clicks = 1.0 - nd * (1.0 - m.eta_det).powi(mk as i32);
            let l_silent = nd * (1.0 - m.eta_det).powi(ml as i32);
            pk += weight * k_clicks * l_silent;
        }
        let (closed, _) = click_prob_state(n, fk, 1.0 - fk, &m).unwrap();
        assert!((closed - pk).abs() < 1e-14, "{closed} vs {pk}");
    }

    #[test]
    fn vacuum_and_pure_limits() {
        let m = table_model(0.21, 0.0131);
        let (q, _) = gain_error_pointwise(0.0, 1.0, 0.0, State::H, &m);
        assert!((q - m.vacuum_yield()).abs() < 1e-22);
        let clean = ClickModel {
            dark_count: 0.0,
            misalignment: 0.0,
            ..m
        };
        let (_, e) = gain_error_pointwise(0.3, 0.0, 0.0, State::H, &clean);
        assert_eq!(e, 0.0);
    }

    #[test]
    fn yields_limits() {
        let m = table_model(0.21, 0.0131);
        let (y0, _) = yield_pointwise(0, 0.7, &m);
        assert!((y0 - m.vacuum_yield()).abs() < 1e-15);
        let ideal = ClickModel {
            eta_det: 1.0,
            dark_count: 0.0,
            efficiency: 1.0,
            misalignment: 0.0,
        };
        assert!((yield_pointwise(1, 0.8, &ideal).0 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pointwise_gain_matches_photon_simulation() {
        let m = table_model(0.21, 0.0131);
        let (q, e) = gain_error_pointwise(0.1, 0.02 * PI, 0.0, State::H, &m);
        let c = mc_clicks_point(0.1, 0.02 * PI, 0.0, State::H, &m, 2_000_000, 3);
        assert!(
            (c.gain() - q).abs() < 3.5 * c.gain_std_error(),
            "{} vs {q}",
            c.gain()
        );
        assert!((c.error_fraction() - e).abs() < 3.5 * c.error_std_error().max(1e-4));
    }

    #[test]
    fn gain_decomposes_over_photon_numbers() {
        let m = table_model(0.5, 0.02);
        let i = 0.8;
        let fk = 0.93;
        let (qk, ql) = detector_gains(i, fk, &m);
        let mut sum = 0.0;
        let mut pois = (-i).exp();
        for n in 0..60u32 {
            if n > 0 {
                pois *= i / n as f64;
            }
            sum += pois * yield_pointwise(n, fk, &m).0;
        }
        assert!((sum - (qk + ql)).abs() < 1e-12);
    }

    fn paper_source() -> SourceParams {
        SourceParams::new(0.0895, 0.0490 * PI, 0.0546 * PI)
    }

    #[test]
    fn symmetric_states_share_gains() {
        let s = paper_source();
        let (ba, _) = derive_channel(&SystemParams::default(), 2.0).unwrap();
        let m = ClickModel::for_channel(&SystemParams::default(), &ba);
        let spec = QuadratureSpec::default();
        let g = |st| {
            interval_stats(
                &s,
                &SelectionInterval::for_state(&s, st, IntensityClass::S),
                &m,
                7,
                &spec,
            )
            .unwrap()
            .q_gain
        };
        assert!((g(State::H) - g(State::V)).abs() < 1e-9 * g(State::H));
        assert!((g(State::D) - g(State::A)).abs() < 1e-9 * g(State::D));
    }

    #[test]
    fn thin_interval_error_is_misalignment() {
        let s = SourceParams::new(0.2, 1e-4, 1e-4);
        let m = table_model(0.3, 0.0131);
        let st = interval_stats(
            &s,
            &SelectionInterval::for_state(&s, State::H, IntensityClass::S),
            &m,
            7,
            &QuadratureSpec::default(),
        )
        .unwrap();
        assert!((st.e_rate - 0.0131).abs() < 1e-4, "{}", st.e_rate);
    }

    #[test]
    fn weighted_yields_reproduce_gain() {
        let s = paper_source();
        let m = table_model(0.15, 0.0131);
        for basis in [Basis::Z, Basis::X] {
            let iv = SelectionInterval::for_basis(&s, basis, IntensityClass::S);
            let st = interval_stats(&s, &iv, &m, 12, &QuadratureSpec::default()).unwrap();
            let q: f64 = st
                .poisson
                .iter()
                .zip(&st.weighted_yields)
                .map(|(p, y)| p * y)
                .sum();
            let eq: f64 = st
                .poisson
                .iter()
                .zip(&st.weighted_error_yields)
                .map(|(p, y)| p * y)
                .sum();
            assert!((q - st.q_gain).abs() < 1e-12, "{basis:?}");
            assert!((eq - st.eq_product).abs() < 1e-12, "{basis:?}");
            assert!(st.eq_product <= st.q_gain);
        }
    }

    #[test]
    fn refined_stats_converge() {
        let s = paper_source();
        let m = table_model(0.15, 0.0131);
        let iv = SelectionInterval::for_state(&s, State::H, IntensityClass::S);
        let spec = QuadratureSpec {
            rel_tol: 1e-6,
            ..Default::default()
        };
        let fine = interval_stats_refined(&s, &iv, &m, 7, &spec).unwrap();
        let coarse = interval_stats(&s, &iv, &m, 7, &spec).unwrap();
        assert!((fine.q_gain - coarse.q_gain).abs() < 1e-6 * fine.q_gain);
    }
}
