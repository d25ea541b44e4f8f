//! End-to-end evaluation of one operating point.
//!
//! For each basis the six cells (two states × three intensity classes) are
//! discretised once; gains, photon-number moments and density matrices of
//! both rounds are read off the same nodes.

use serde::Serialize;

use crate::click::{ClickModel, IntervalStats, RawStats};
use crate::error::Result;
use crate::lp::{
    build_error_lp, build_yield_lp, solve_lp, ClassStats, LpProblem, SinglePhotonBounds,
};
use crate::params::{derive_channel, SourceParams, SystemParams};
use crate::quadrature::QuadratureSpec;
use crate::security::{capacity, eve_info, mutual_info_ab, EveBoundInputs, EveInfo};
use crate::source::{Basis, Cell, CellNodes, IntensityClass, State};
use crate::states::{table_from_moments, CellMoments, MatrixMode, TraceDistanceTable};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalOptions {
    pub mode: MatrixMode,
    pub quadrature: QuadratureSpec,
    /// Reuse the X-basis result for Y instead of integrating it again.
    pub mirror_y: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            mode: MatrixMode::Full,
            quadrature: QuadratureSpec::default(),
            mirror_y: false,
        }
    }
}

/// Everything the decoy programs of one basis consume.
#[derive(Debug, Clone)]
pub struct BasisAnalysis {
    pub basis: Basis,
    pub attenuation_db: f64,
    /// First-round statistics of the basis union, classes d1, d2, s.
    pub union_ba: Vec<IntervalStats>,
    /// First-round statistics per state, classes d1, d2, s.
    pub state_ba: Vec<(State, Vec<IntervalStats>)>,
    /// Round-trip statistics of the signal union.
    pub bab: IntervalStats,
    pub union_table: TraceDistanceTable,
    pub state_tables: Vec<TraceDistanceTable>,
    pub n_cut: usize,
}

impl BasisAnalysis {
    pub fn build(
        system: &SystemParams,
        source: &SourceParams,
        basis: Basis,
        attenuation_db: f64,
        opts: &EvalOptions,
    ) -> Result<Self> {
        system.validate()?;
        source.validate()?;
        opts.quadrature.validate()?;
        let (ba, bab) = derive_channel(system, attenuation_db)?;
        let m_ba = ClickModel::for_channel(system, &ba);
        let m_bab = ClickModel::for_channel(system, &bab);
        let n_cut = system.n_cut;
        let states = basis.states();

        // nodes[state][class]
        let nodes: Vec<Vec<CellNodes>> = states
            .iter()
            .map(|&st| {
                let cell = Cell::for_state(st, source);
                IntensityClass::ALL
                    .iter()
                    .map(|c| CellNodes::build(source, c.range(source), &cell, &opts.quadrature))
                    .collect()
            })
            .collect();
        let raw_ba: Vec<Vec<RawStats>> = nodes
            .iter()
            .map(|row| {
                row.iter()
                    .map(|c| RawStats::accumulate(c, &m_ba, n_cut))
                    .collect()
            })
            .collect();
        let moments: Vec<Vec<CellMoments>> = nodes
            .iter()
            .map(|row| {
                row.iter()
                    .map(|c| CellMoments::from_nodes(c, n_cut))
                    .collect()
            })
            .collect();

        let mut union_ba = Vec::with_capacity(3);
        for k in 0..3 {
            let mut u = raw_ba[0][k].clone();
            u.merge(&raw_ba[1][k]);
            union_ba.push(u.finish()?);
        }
        let state_ba = states
            .iter()
            .enumerate()
            .map(|(s, &st)| {
                Ok((
                    st,
                    raw_ba[s]
                        .iter()
                        .map(RawStats::finish)
                        .collect::<Result<Vec<_>>>()?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;

        let signal = 2;
        let mut raw_bab = RawStats::accumulate(&nodes[0][signal], &m_bab, n_cut);
        raw_bab.merge(&RawStats::accumulate(&nodes[1][signal], &m_bab, n_cut));
        let bab = raw_bab.finish()?;

        let union_cells: [Vec<&CellMoments>; 3] =
            std::array::from_fn(|k| vec![&moments[0][k], &moments[1][k]]);
        let union_table = table_from_moments(basis, None, &union_cells, n_cut, opts.mode)?;
        let state_tables = states
            .iter()
            .enumerate()
            .map(|(s, &st)| {
                let cells: [Vec<&CellMoments>; 3] = std::array::from_fn(|k| vec![&moments[s][k]]);
                table_from_moments(basis, Some(st), &cells, n_cut, opts.mode)
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(BasisAnalysis {
            basis,
            attenuation_db,
            union_ba,
            state_ba,
            bab,
            union_table,
            state_tables,
            n_cut,
        })
    }

    fn classes(stats: &[IntervalStats]) -> Vec<ClassStats<'_>> {
        IntensityClass::ALL
            .iter()
            .zip(stats)
            .map(|(&class, stats)| ClassStats { class, stats })
            .collect()
    }

    pub fn union_classes(&self) -> Vec<ClassStats<'_>> {
        Self::classes(&self.union_ba)
    }

    pub fn state_classes(&self, index: usize) -> Vec<ClassStats<'_>> {
        Self::classes(&self.state_ba[index].1)
    }

    pub fn yield_lp(&self) -> Result<LpProblem> {
        build_yield_lp(&self.union_classes(), &self.union_table, self.n_cut)
    }

    pub fn error_lps(&self) -> Result<Vec<LpProblem>> {
        (0..self.state_ba.len())
            .map(|s| build_error_lp(&self.state_classes(s), &self.state_tables[s], self.n_cut))
            .collect()
    }

    /// Solves both programs; the error bound is the worst of the two states.
    pub fn bounds(&self) -> Result<SinglePhotonBounds> {
        let y = solve_lp(&self.yield_lp()?).require_optimal("yield")?;
        let mut ey_max: f64 = 0.0;
        for lp in self.error_lps()? {
            let name = lp.name.clone();
            ey_max = ey_max.max(solve_lp(&lp).require_optimal(&name)?.objective);
        }
        Ok(SinglePhotonBounds::from_lp_values(y.objective, ey_max))
    }

    pub fn report(&self, system: &SystemParams) -> Result<BasisReport> {
        let bounds = self.bounds()?;
        let signal = &self.union_ba[2];
        let inputs = EveBoundInputs::from_stats(signal, system);
        let eve = eve_info(&bounds, &inputs);
        let i_ab = mutual_info_ab(&self.bab)?;
        Ok(BasisReport {
            basis: self.basis,
            p_select: self.bab.p_select,
            capacity: capacity(i_ab, &eve),
            margin: i_ab - eve.total,
            i_ab,
            eve,
            bounds,
            q_ba: signal.q_gain,
            e_ba: signal.observed_error(),
            q_bab: self.bab.q_gain,
            e_bab: self.bab.e_rate,
            y1_theory: signal.yields[1],
            e1y1_theory: self
                .state_ba
                .iter()
                .map(|(_, s)| s[2].error_yields[1])
                .fold(0.0, f64::max),
        })
    }
}

/// Capacity and its ingredients for one basis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasisReport {
    pub basis: Basis,
    /// Selection probability of the signal interval (both states).
    pub p_select: f64,
    pub capacity: f64,
    /// `I(A:B) - I(A:E)` before clamping; negative beyond the cutoff.
    pub margin: f64,
    pub i_ab: f64,
    pub eve: EveInfo,
    pub bounds: SinglePhotonBounds,
    pub q_ba: f64,
    /// Observed first-round error fraction `<EQ>/<Q>` (the security-check figure).
    pub e_ba: f64,
    pub q_bab: f64,
    pub e_bab: f64,
    pub y1_theory: f64,
    pub e1y1_theory: f64,
}

/// Capacity report of one basis at one operating point.
pub fn basis_report(
    system: &SystemParams,
    source: &SourceParams,
    basis: Basis,
    attenuation_db: f64,
    opts: &EvalOptions,
) -> Result<BasisReport> {
    BasisAnalysis::build(system, source, basis, attenuation_db, opts)?.report(system)
}

/// Full result at one operating point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecrecyReport {
    pub attenuation_db: f64,
    pub distance_km: f64,
    pub source: SourceParams,
    pub system: SystemParams,
    pub mode: MatrixMode,
    pub bases: Vec<BasisReport>,
    /// Secrecy message transmission rate, bits per emitted pulse.
    pub rate: f64,
    pub rate_bits_per_s: Option<f64>,
}

impl SecrecyReport {
    pub fn basis(&self, b: Basis) -> Option<&BasisReport> {
        self.bases.iter().find(|r| r.basis == b)
    }

    pub fn from_bases(
        system: &SystemParams,
        source: &SourceParams,
        attenuation_db: f64,
        mode: MatrixMode,
        bases: Vec<BasisReport>,
    ) -> Self {
        let rate = bases.iter().map(|b| b.p_select * b.capacity).sum::<f64>();
        SecrecyReport {
            attenuation_db,
            distance_km: system.distance_km(attenuation_db),
            source: *source,
            system: *system,
            mode,
            bases,
            rate,
            rate_bits_per_s: system.repetition_rate_hz.map(|r| r * rate),
        }
    }
}

/// Evaluates the X, Y and Z bases at one operating point.
pub fn evaluate(
    system: &SystemParams,
    source: &SourceParams,
    attenuation_db: f64,
    opts: &EvalOptions,
) -> Result<SecrecyReport> {
    let mut bases = Vec::with_capacity(3);
    for b in Basis::ALL {
        if b == Basis::Y && opts.mirror_y {
            let x: &BasisReport = bases
                .iter()
                .find(|r: &&BasisReport| r.basis == Basis::X)
                .expect("X precedes Y");
            bases.push(BasisReport {
                basis: Basis::Y,
                ..x.clone()
            });
        } else {
            bases.push(basis_report(system, source, b, attenuation_db, opts)?);
        }
    }
    Ok(SecrecyReport::from_bases(
        system,
        source,
        attenuation_db,
        opts.mode,
        bases,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::assignment_from_stats;
    use std::f64::consts::PI;

    #[test]
    fn paper_two_db_point() {
        let system = SystemParams::default();
        let source = SourceParams::new(0.0895, 0.0490 * PI, 0.0546 * PI);
        let r = evaluate(&system, &source, 2.0, &EvalOptions::default()).unwrap();
        let (x, y, z) = (
            r.basis(Basis::X).unwrap(),
            r.basis(Basis::Y).unwrap(),
            r.basis(Basis::Z).unwrap(),
        );
        assert!(x.capacity > 0.0 && z.capacity > 0.0);
        assert!((x.capacity - y.capacity).abs() <= 1e-9 * x.capacity);
        assert!(r.rate > 2.88e-5 && r.rate < 1.152e-4, "{}", r.rate);
        assert!(z.bounds.e1_max < 0.25);
    }

    #[test]
    fn weighted_theory_is_feasible() {
        let system = SystemParams::default();
        let source = SourceParams::new(0.0895, 0.0490 * PI, 0.0546 * PI);
        let a =
            BasisAnalysis::build(&system, &source, Basis::Z, 2.0, &EvalOptions::default()).unwrap();
        let lp = a.yield_lp().unwrap();
        let x = assignment_from_stats(&a.union_classes(), a.n_cut, |s| &s.weighted_yields);
        assert!(lp.max_violation(&x) < 1e-9, "{}", lp.max_violation(&x));
        let b = a.bounds().unwrap();
        assert!(b.y1_min <= a.union_ba[2].yields[1] + 1e-12);
    }
}
