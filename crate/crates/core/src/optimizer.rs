//! Operating-point search.
//!
//! The Z capacity depends only on `(I, Δz)` and the X/Y capacities only on
//! `(I, Δx)`, so a 3-D grid needs just two 2-D tables of basis evaluations.
//! The best grid point seeds a Nelder–Mead search in log coordinates. This is
//! a heuristic: no global optimality is claimed.
//!
//! Beyond the cutoff every rate is zero, which leaves nothing to climb. The
//! search therefore ranks points by the rate when it is positive and by the
//! best weighted capacity margin `<P>_K (I(A:B) - I(A:E))` otherwise; the two
//! meet continuously at zero.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{SourceParams, SystemParams};
use crate::pipeline::{basis_report, EvalOptions};
use crate::security::active_baseline_optimal;
use crate::source::Basis;

/// Parameters are snapped to this grid before evaluation and caching.
pub const SNAP: f64 = 1e-6;

fn snap_key(x: f64) -> i64 {
    (x / SNAP).round() as i64
}

fn snapped(x: f64) -> f64 {
    snap_key(x) as f64 * SNAP
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchSpace {
    pub intensity: (f64, f64),
    pub delta_x: (f64, f64),
    pub delta_z: (f64, f64),
    /// Log-spaced grid resolution along `(I, Δx, Δz)`.
    pub grid: [usize; 3],
    pub nm_iterations: usize,
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            intensity: (2e-3, 0.5),
            delta_x: (0.005 * PI, 0.15 * PI),
            delta_z: (0.005 * PI, 0.15 * PI),
            grid: [12, 10, 10],
            nm_iterations: 60,
        }
    }
}

impl SearchSpace {
    pub fn validate(&self) -> Result<()> {
        let ok = |r: (f64, f64), max: f64| r.0 > 0.0 && r.0 < r.1 && r.1 <= max;
        if !ok(self.intensity, 0.5 + 1e-12) {
            return Err(Error::invalid(
                "intensity search range must lie in (0, 0.5]",
            ));
        }
        if !ok(self.delta_x, 0.15 * PI + 1e-12) || !ok(self.delta_z, 0.15 * PI + 1e-12) {
            return Err(Error::invalid(
                "interval half-width search ranges must lie in (0, 0.15 pi]",
            ));
        }
        if self.grid.iter().any(|&g| g < 2) {
            return Err(Error::invalid("grid needs at least two points per axis"));
        }
        Ok(())
    }

    fn axis(range: (f64, f64), n: usize) -> Vec<f64> {
        let r = range.1 / range.0;
        (0..n)
            .map(|k| snapped(range.0 * r.powf(k as f64 / (n - 1) as f64)))
            .collect()
    }

    fn bounds_log(&self) -> [(f64, f64); 3] {
        [self.intensity, self.delta_x, self.delta_z].map(|(a, b)| (a.ln(), b.ln()))
    }

    pub fn contains(&self, i: f64, dx: f64, dz: f64) -> bool {
        let inside = |v: f64, r: (f64, f64)| v >= r.0 * (1.0 - 1e-9) && v <= r.1 * (1.0 + 1e-9);
        inside(i, self.intensity) && inside(dx, self.delta_x) && inside(dz, self.delta_z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
struct BasisValue {
    /// `<P>_K C_K`
    weighted: f64,
    /// `<P>_K (I(A:B) - I(A:E))`
    margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointValue {
    pub rate: f64,
    /// Search objective: the rate when positive, otherwise the best margin.
    pub score: f64,
}

/// Cached rate evaluator at one attenuation.
pub struct Objective<'a> {
    pub system: &'a SystemParams,
    pub attenuation_db: f64,
    pub opts: &'a EvalOptions,
    cache: Mutex<HashMap<(Basis, i64, i64), BasisValue>>,
    evaluations: AtomicUsize,
    failures: AtomicUsize,
}

impl<'a> Objective<'a> {
    pub fn new(system: &'a SystemParams, attenuation_db: f64, opts: &'a EvalOptions) -> Self {
        Objective {
            system,
            attenuation_db,
            opts,
            cache: Mutex::new(HashMap::new()),
            evaluations: AtomicUsize::new(0),
            failures: AtomicUsize::new(0),
        }
    }

    fn basis(&self, basis: Basis, intensity: f64, delta: f64) -> BasisValue {
        let key = (basis, snap_key(intensity), snap_key(delta));
        if let Some(v) = self.cache.lock().unwrap().get(&key) {
            return *v;
        }
        let (i, d) = (key.1 as f64 * SNAP, key.2 as f64 * SNAP);
        let source = SourceParams::new(i, d, d);
        self.evaluations.fetch_add(1, Ordering::Relaxed);
        let value = match basis_report(self.system, &source, basis, self.attenuation_db, self.opts)
        {
            Ok(r) => BasisValue {
                weighted: r.p_select * r.capacity,
                margin: r.p_select * r.margin,
            },
            Err(_) => {
                self.failures.fetch_add(1, Ordering::Relaxed);
                BasisValue {
                    weighted: 0.0,
                    margin: f64::NEG_INFINITY,
                }
            }
        };
        self.cache.lock().unwrap().insert(key, value);
        value
    }

    /// Rate `P_Z C_Z + 2 P_X C_X` at `(I, Δx, Δz)`; Y mirrors X.
    pub fn value(&self, intensity: f64, delta_x: f64, delta_z: f64) -> PointValue {
        let z = self.basis(Basis::Z, intensity, delta_z);
        let x = self.basis(Basis::X, intensity, delta_x);
        let rate = z.weighted + 2.0 * x.weighted;
        let score = if rate > 0.0 {
            rate
        } else {
            z.margin.max(x.margin).min(0.0)
        };
        PointValue { rate, score }
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations.load(Ordering::Relaxed)
    }

    pub fn failures(&self) -> usize {
        self.failures.load(Ordering::Relaxed)
    }

    /// Fills the cache for a set of basis evaluations in parallel.
    fn prefetch(&self, jobs: &[(Basis, f64, f64)]) {
        jobs.par_iter().for_each(|&(b, i, d)| {
            self.basis(b, i, d);
        });
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub step: usize,
    pub phase: &'static str,
    pub intensity: f64,
    pub delta_x: f64,
    pub delta_z: f64,
    pub rate: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptResult {
    pub attenuation_db: f64,
    pub intensity: f64,
    pub delta_x: f64,
    pub delta_z: f64,
    pub rate: f64,
    pub grid_best_rate: f64,
    /// Basis evaluations actually computed (cache misses).
    pub evaluations: usize,
    pub failed_evaluations: usize,
    /// No positive rate anywhere in the search.
    pub beyond_cutoff: bool,
    #[serde(skip)]
    pub trace: Vec<TraceRow>,
}

/// Grid scan followed by Nelder–Mead from the best grid point.
pub fn optimize(
    system: &SystemParams,
    attenuation_db: f64,
    space: &SearchSpace,
    opts: &EvalOptions,
) -> Result<OptResult> {
    system.validate()?;
    space.validate()?;
    let obj = Objective::new(system, attenuation_db, opts);
    let is = SearchSpace::axis(space.intensity, space.grid[0]);
    let dxs = SearchSpace::axis(space.delta_x, space.grid[1]);
    let dzs = SearchSpace::axis(space.delta_z, space.grid[2]);
    let mut jobs = Vec::new();
    for &i in &is {
        jobs.extend(dzs.iter().map(|&d| (Basis::Z, i, d)));
        jobs.extend(dxs.iter().map(|&d| (Basis::X, i, d)));
    }
    obj.prefetch(&jobs);

    let mut trace = Vec::new();
    let mut best: Option<([f64; 3], PointValue)> = None;
    let consider = |p: [f64; 3], v: PointValue, best: &mut Option<([f64; 3], PointValue)>| {
        if best.is_none_or(|b| v.score > b.1.score) {
            *best = Some((p, v));
        }
    };
    for &i in &is {
        for &dx in &dxs {
            for &dz in &dzs {
                let v = obj.value(i, dx, dz);
                trace.push(TraceRow {
                    step: trace.len(),
                    phase: "grid",
                    intensity: i,
                    delta_x: dx,
                    delta_z: dz,
                    rate: v.rate,
                    score: v.score,
                });
                consider([i, dx, dz], v, &mut best);
            }
        }
    }
    let (grid_point, grid_value) = best.expect("grid is non-empty");

    let bounds = space.bounds_log();
    let to_point = |u: &[f64; 3]| -> [f64; 3] {
        std::array::from_fn(|k| snapped(u[k].clamp(bounds[k].0, bounds[k].1).exp()))
    };
    let eval_u =
        |u: &[f64; 3], trace: &mut Vec<TraceRow>, best: &mut Option<([f64; 3], PointValue)>| {
            let p = to_point(u);
            let v = obj.value(p[0], p[1], p[2]);
            trace.push(TraceRow {
                step: trace.len(),
                phase: "simplex",
                intensity: p[0],
                delta_x: p[1],
                delta_z: p[2],
                rate: v.rate,
                score: v.score,
            });
            consider(p, v, best);
            -v.score
        };
    let start: [f64; 3] = std::array::from_fn(|k| grid_point[k].ln());
    let steps = [
        (bounds[0].1 - bounds[0].0) / (space.grid[0] - 1) as f64,
        (bounds[1].1 - bounds[1].0) / (space.grid[1] - 1) as f64,
        (bounds[2].1 - bounds[2].0) / (space.grid[2] - 1) as f64,
    ];
    let mut simplex: Vec<([f64; 3], f64)> = Vec::with_capacity(4);
    simplex.push((start, -grid_value.score));
    for k in 0..3 {
        let mut u = start;
        // step toward the interior of the box
        u[k] += if start[k] + steps[k] <= bounds[k].1 {
            steps[k]
        } else {
            -steps[k]
        };
        let f = eval_u(&u, &mut trace, &mut best);
        simplex.push((u, f));
    }
    for _ in 0..space.nm_iterations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let centroid: [f64; 3] =
            std::array::from_fn(|k| simplex[..3].iter().map(|s| s.0[k]).sum::<f64>() / 3.0);
        let worst = simplex[3];
        let along = |t: f64| -> [f64; 3] {
            std::array::from_fn(|k| centroid[k] + t * (worst.0[k] - centroid[k]))
        };
        let xr = along(-1.0);
        let fr = eval_u(&xr, &mut trace, &mut best);
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = eval_u(&xe, &mut trace, &mut best);
            simplex[3] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[2].1 {
            simplex[3] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst.1 {
                let xc = along(-0.5);
                (xc, eval_u(&xc, &mut trace, &mut best))
            } else {
                let xc = along(0.5);
                (xc, eval_u(&xc, &mut trace, &mut best))
            };
            if fc < worst.1.min(fr) {
                simplex[3] = (xc, fc);
            } else {
                let b = simplex[0].0;
                for s in simplex.iter_mut().skip(1) {
                    let u: [f64; 3] = std::array::from_fn(|k| b[k] + 0.5 * (s.0[k] - b[k]));
                    *s = (u, eval_u(&u, &mut trace, &mut best));
                }
            }
        }
    }

    let (p, v) = best.expect("at least the grid was evaluated");
    Ok(OptResult {
        attenuation_db,
        intensity: p[0],
        delta_x: p[1],
        delta_z: p[2],
        rate: v.rate,
        grid_best_rate: grid_value.rate,
        evaluations: obj.evaluations(),
        failed_evaluations: obj.failures(),
        beyond_cutoff: !(v.rate > 0.0),
        trace,
    })
}

/// Rate of the passive source at a fixed operating point, using the same
/// evaluation path (and snapping) as the optimiser.
pub fn rate_at(
    system: &SystemParams,
    attenuation_db: f64,
    intensity: f64,
    delta_x: f64,
    delta_z: f64,
    opts: &EvalOptions,
) -> f64 {
    Objective::new(system, attenuation_db, opts)
        .value(intensity, delta_x, delta_z)
        .rate
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BisectionStep {
    pub lo_db: f64,
    pub hi_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceResult {
    /// Largest attenuation with a positive rate found by the bisection.
    pub attenuation_db: f64,
    pub distance_km: f64,
    pub steps: Vec<BisectionStep>,
}

/// Bisection for the last attenuation where `positive` holds, to `tol_db`.
pub fn bisect_cutoff(
    mut positive: impl FnMut(f64) -> Result<bool>,
    lo_db: f64,
    hi_db: f64,
    tol_db: f64,
) -> Result<(f64, Vec<BisectionStep>)> {
    if !positive(lo_db)? {
        return Err(Error::invalid(format!(
            "rate is already zero at {lo_db} dB"
        )));
    }
    let mut hi = hi_db;
    while positive(hi)? {
        hi += 4.0;
        if hi > 60.0 {
            return Err(Error::invalid("no cutoff below 60 dB"));
        }
    }
    let mut lo = lo_db;
    let mut steps = vec![BisectionStep {
        lo_db: lo,
        hi_db: hi,
    }];
    while hi - lo > tol_db {
        let mid = 0.5 * (lo + hi);
        if positive(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
        steps.push(BisectionStep {
            lo_db: lo,
            hi_db: hi,
        });
    }
    Ok((lo, steps))
}

/// Longest fiber with a positive optimised passive rate, to 0.1 km.
pub fn max_distance(
    system: &SystemParams,
    space: &SearchSpace,
    opts: &EvalOptions,
) -> Result<DistanceResult> {
    let tol_db = system.attenuation_db(0.1);
    let (db, steps) = bisect_cutoff(
        |db| Ok(optimize(system, db, space, opts)?.rate > 0.0),
        2.0,
        12.0,
        tol_db,
    )?;
    Ok(DistanceResult {
        attenuation_db: db,
        distance_km: system.distance_km(db),
        steps,
    })
}

/// Same for the actively modulated reference.
pub fn max_distance_active(system: &SystemParams) -> Result<DistanceResult> {
    let tol_db = system.attenuation_db(0.1);
    let (db, steps) = bisect_cutoff(
        |db| Ok(active_baseline_optimal(db, system)?.1 > 0.0),
        2.0,
        12.0,
        tol_db,
    )?;
    Ok(DistanceResult {
        attenuation_db: db,
        distance_km: system.distance_km(db),
        steps,
    })
}
