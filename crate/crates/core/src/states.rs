//! Post-selected photon-number states.
//!
//! An `n`-photon pulse in mode `a†(θ, φ)` has amplitude
//! `sqrt(C(n,m)) cos^m(θ/2) (e^{iφ} sin(θ/2))^{n-m}` on `|m⟩_H |n-m⟩_V`, so
//!
//! ```text
//! ρ(m1, m2) = sqrt(C(n,m1) C(n,m2)) <cos^{m1+m2}(θ/2) sin^{2n-m1-m2}(θ/2)> <e^{-iφ(m1-m2)}>
//! ```
//!
//! The `(I, θ)` average uses the source density and the φ average is done in
//! closed form per cell: `e^{-ikφc} sin(kΔ)/(kΔ)` on an arc, `δ_k0` on a full
//! circle.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, CMatrix};
use crate::params::SourceParams;
use crate::quadrature::QuadratureSpec;
use crate::source::{Basis, CellNodes, IntensityClass, PhiSet, SelectionInterval, State};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixMode {
    #[default]
    Full,
    /// Off-diagonal entries dropped.
    PaperDiagonal,
}

impl std::str::FromStr for MatrixMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(MatrixMode::Full),
            "paper_diagonal" => Ok(MatrixMode::PaperDiagonal),
            other => Err(Error::invalid(format!(
                "unknown matrix mode `{other}` (expected full or paper_diagonal)"
            ))),
        }
    }
}

impl MatrixMode {
    pub fn name(self) -> &'static str {
        match self {
            MatrixMode::Full => "full",
            MatrixMode::PaperDiagonal => "paper_diagonal",
        }
    }
}

/// Normalised `(n+1) × (n+1)` density matrix; row index `m` counts H photons.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonDensityMatrix {
    pub n: usize,
    pub matrix: CMatrix,
}

impl PhotonDensityMatrix {
    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn get(&self, m1: usize, m2: usize) -> Complex64 {
        self.matrix.get(m1, m2)
    }

    /// Rows of `[re, im]` pairs.
    pub fn to_pairs(&self) -> Vec<Vec<[f64; 2]>> {
        let d = self.matrix.dim;
        (0..d)
            .map(|r| {
                (0..d)
                    .map(|c| [self.get(r, c).re, self.get(r, c).im])
                    .collect()
            })
            .collect()
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(hermitian_eigen(&self.matrix)?.values)
    }
}

impl Serialize for PhotonDensityMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("PhotonDensityMatrix", 2)?;
        st.serialize_field("n", &self.n)?;
        st.serialize_field("entries", &self.to_pairs())?;
        st.end()
    }
}

/// θ-moments of one cell: `mass` and `moments[n][a] = Σ w cos^a sin^{2n-a}`,
/// both already scaled by the cell's φ fraction.
#[derive(Debug, Clone)]
pub(crate) struct CellMoments {
    pub phi: PhiSet,
    pub mass: f64,
    pub moments: Vec<Vec<f64>>,
}

impl CellMoments {
    pub fn from_nodes(cell: &CellNodes, n_cut: usize) -> Self {
        let mut moments: Vec<Vec<f64>> = (0..=n_cut).map(|n| vec![0.0; 2 * n + 1]).collect();
        let mut mass = 0.0;
        let mut cp = vec![1.0; 2 * n_cut + 1];
        let mut sp = vec![1.0; 2 * n_cut + 1];
        for &(_, t, w) in &cell.nodes {
            let (s, c) = (0.5 * t).sin_cos();
            for a in 1..cp.len() {
                cp[a] = cp[a - 1] * c;
                sp[a] = sp[a - 1] * s;
            }
            mass += w;
            for (n, row) in moments.iter_mut().enumerate() {
                for (a, m) in row.iter_mut().enumerate() {
                    *m += w * cp[a] * sp[2 * n - a];
                }
            }
        }
        let f = cell.phi_fraction;
        moments.iter_mut().flatten().for_each(|m| *m *= f);
        CellMoments {
            phi: cell.cell.phi,
            mass: mass * f,
            moments,
        }
    }
}

/// `<e^{-ikφ}>` over a cell's φ set.
fn phi_average(phi: &PhiSet, k: i64) -> Complex64 {
    if k == 0 {
        return Complex64::new(1.0, 0.0);
    }
    match *phi {
        PhiSet::Full => Complex64::new(0.0, 0.0),
        PhiSet::Arc { center, half_width } => {
            let kd = k as f64 * half_width;
            Complex64::from_polar(kd.sin() / kd, -(k as f64) * center)
        }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub(crate) fn matrix_from_moments(
    cells: &[&CellMoments],
    n: usize,
    mode: MatrixMode,
) -> Result<PhotonDensityMatrix> {
    let mass: f64 = cells.iter().map(|c| c.mass).sum();
    if !(mass > 0.0) {
        return Err(Error::invalid(
            "density matrix of an interval with zero probability",
        ));
    }
    let matrix = CMatrix::from_fn(n + 1, |m1, m2| {
        if mode == MatrixMode::PaperDiagonal && m1 != m2 {
            return Complex64::new(0.0, 0.0);
        }
        let k = m1 as i64 - m2 as i64;
        let coef = (binomial(n, m1) * binomial(n, m2)).sqrt() / mass;
        cells
            .iter()
            .map(|c| phi_average(&c.phi, k) * c.moments[n][m1 + m2])
            .sum::<Complex64>()
            * coef
    });
    Ok(PhotonDensityMatrix { n, matrix })
}

fn interval_moments(
    source: &SourceParams,
    interval: &SelectionInterval,
    n: usize,
    spec: &QuadratureSpec,
) -> Result<Vec<CellMoments>> {
    interval.validate(source)?;
    spec.validate()?;
    Ok(interval
        .cells
        .iter()
        .map(|c| CellMoments::from_nodes(&CellNodes::build(source, interval.i_range, c, spec), n))
        .collect())
}

/// Normalised `n`-photon state of the pulses selected by `interval`.
pub fn density_matrix(
    source: &SourceParams,
    interval: &SelectionInterval,
    n: usize,
    mode: MatrixMode,
    spec: &QuadratureSpec,
) -> Result<PhotonDensityMatrix> {
    let cells = interval_moments(source, interval, n, spec)?;
    matrix_from_moments(&cells.iter().collect::<Vec<_>>(), n, mode)
}

/// Normalised state over a union of intervals (e.g. all three bases).
pub fn union_density_matrix(
    source: &SourceParams,
    intervals: &[SelectionInterval],
    n: usize,
    mode: MatrixMode,
    spec: &QuadratureSpec,
) -> Result<PhotonDensityMatrix> {
    let mut all = Vec::new();
    for iv in intervals {
        all.extend(interval_moments(source, iv, n, spec)?);
    }
    matrix_from_moments(&all.iter().collect::<Vec<_>>(), n, mode)
}

/// `Σ |λ|` of `a - b`.
pub fn trace_distance(a: &PhotonDensityMatrix, b: &PhotonDensityMatrix) -> Result<f64> {
    if a.n != b.n {
        return Err(Error::invalid(format!(
            "trace distance between {}- and {}-photon states",
            a.n, b.n
        )));
    }
    let diff = a.matrix.sub(&b.matrix);
    Ok(hermitian_eigen(&diff)?.values.iter().map(|l| l.abs()).sum())
}

/// Trace distances between the three intensity classes of one basis (or one state).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceDistanceTable {
    pub basis: Basis,
    /// `None` for basis unions.
    pub state: Option<State>,
    pub mode: MatrixMode,
    /// `values[n][i][j]`, classes in the order d1, d2, s.
    pub values: Vec<[[f64; 3]; 3]>,
}

impl TraceDistanceTable {
    pub fn get(&self, n: usize, i: IntensityClass, j: IntensityClass) -> f64 {
        self.values[n][class_index(i)][class_index(j)]
    }

    pub fn n_cut(&self) -> usize {
        self.values.len() - 1
    }

    /// Every entry multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut t = self.clone();
        t.values
            .iter_mut()
            .flatten()
            .flatten()
            .for_each(|v| *v *= factor);
        t
    }

    /// Flat `(n, i, j, value)` listing for dumps.
    pub fn entries(&self) -> BTreeMap<String, f64> {
        let mut out = BTreeMap::new();
        for (n, m) in self.values.iter().enumerate() {
            for (a, i) in IntensityClass::ALL.iter().enumerate() {
                for (b, j) in IntensityClass::ALL.iter().enumerate().skip(a + 1) {
                    out.insert(format!("n{n}:{}-{}", i.name(), j.name()), m[a][b]);
                }
            }
        }
        out
    }
}

pub(crate) fn class_index(c: IntensityClass) -> usize {
    match c {
        IntensityClass::D1 => 0,
        IntensityClass::D2 => 1,
        IntensityClass::S => 2,
    }
}

/// Builds a table from per-class cell moments (union or single state).
pub(crate) fn table_from_moments(
    basis: Basis,
    state: Option<State>,
    per_class: &[Vec<&CellMoments>; 3],
    n_cut: usize,
    mode: MatrixMode,
) -> Result<TraceDistanceTable> {
    let mut values = vec![[[0.0; 3]; 3]; n_cut + 1];
    for (n, table) in values.iter_mut().enumerate() {
        let rhos = per_class
            .iter()
            .map(|cells| matrix_from_moments(cells, n, mode))
            .collect::<Result<Vec<_>>>()?;
        for i in 0..3 {
            for j in i + 1..3 {
                let d = trace_distance(&rhos[i], &rhos[j])?;
                table[i][j] = d;
                table[j][i] = d;
            }
        }
    }
    Ok(TraceDistanceTable {
        basis,
        state,
        mode,
        values,
    })
}

/// Distances between the d1, d2 and s selections of `basis`, restricted to
/// `state` when given.
pub fn trace_distance_table(
    source: &SourceParams,
    basis: Basis,
    state: Option<State>,
    n_cut: usize,
    mode: MatrixMode,
    spec: &QuadratureSpec,
) -> Result<TraceDistanceTable> {
    let moments = IntensityClass::ALL
        .iter()
        .map(|&c| {
            let iv = match state {
                Some(st) => SelectionInterval::for_state(source, st, c),
                None => SelectionInterval::for_basis(source, basis, c),
            };
            interval_moments(source, &iv, n_cut, spec)
        })
        .collect::<Result<Vec<_>>>()?;
    let refs: [Vec<&CellMoments>; 3] = [
        moments[0].iter().collect(),
        moments[1].iter().collect(),
        moments[2].iter().collect(),
    ];
    table_from_moments(basis, state, &refs, n_cut, mode)
}

/// Two-photon state of a union of intervals in the closed diagonal form
/// `((1+cos²θ)/4, sin²θ/2, (1+cos²θ)/4)` averaged over the selected pulses.
/// The form assumes each cell is symmetric under `θ → π - θ` or paired with
/// its mirror cell, as the standard basis geometry is.
pub fn two_photon_matrix(
    source: &SourceParams,
    intervals: &[SelectionInterval],
    spec: &QuadratureSpec,
) -> Result<PhotonDensityMatrix> {
    let (mut mass, mut outer, mut middle) = (0.0, 0.0, 0.0);
    for iv in intervals {
        iv.validate(source)?;
        for cell in &iv.cells {
            let nodes = CellNodes::build(source, iv.i_range, cell, spec);
            for &(_, t, w) in &nodes.nodes {
                let w = w * nodes.phi_fraction;
                let c2 = t.cos().powi(2);
                mass += w;
                outer += w * (1.0 + c2) / 4.0;
                middle += w * (1.0 - c2) / 2.0;
            }
        }
    }
    if !(mass > 0.0) {
        return Err(Error::invalid("two-photon state of an empty selection"));
    }
    let diag = [outer / mass, middle / mass, outer / mass];
    Ok(PhotonDensityMatrix {
        n: 2,
        matrix: CMatrix::from_fn(3, |r, c| {
            if r == c {
                Complex64::new(diag[r], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn paper_source() -> SourceParams {
        SourceParams::new(0.0895, 0.0490 * PI, 0.0546 * PI)
    }

    fn signal_union(s: &SourceParams) -> Vec<SelectionInterval> {
        Basis::ALL
            .iter()
            .map(|&b| SelectionInterval::for_basis(s, b, IntensityClass::S))
            .collect()
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn vacuum_matrix_is_one() {
        let s = paper_source();
        let iv = SelectionInterval::for_state(&s, State::D, IntensityClass::S);
        let r = density_matrix(&s, &iv, 0, MatrixMode::Full, &QuadratureSpec::default()).unwrap();
        assert!((r.get(0, 0) - c(1.0)).norm() < 1e-12);
    }

    #[test]
    fn single_photon_union_is_maximally_mixed() {
        let s = paper_source();
        let r = union_density_matrix(
            &s,
            &signal_union(&s),
            1,
            MatrixMode::Full,
            &QuadratureSpec::default(),
        )
        .unwrap();
        for (m1, m2, want) in [(0, 0, 0.5), (1, 1, 0.5), (0, 1, 0.0), (1, 0, 0.0)] {
            assert!((r.get(m1, m2) - c(want)).norm() < 1e-9, "({m1},{m2})");
        }
    }

    #[test]
    fn z_matrices_are_diagonal() {
        let s = paper_source();
        for n in 1..5 {
            let iv = SelectionInterval::for_basis(&s, Basis::Z, IntensityClass::D2);
            let r =
                density_matrix(&s, &iv, n, MatrixMode::Full, &QuadratureSpec::default()).unwrap();
            for m1 in 0..=n {
                for m2 in 0..=n {
                    if m1 != m2 {
                        assert_eq!(r.get(m1, m2), c(0.0));
                    }
                }
            }
            assert!((r.trace() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn matrices_are_hermitian_psd_unit_trace() {
        let s = paper_source();
        let spec = QuadratureSpec::default();
        for st in [State::H, State::D, State::R] {
            for n in 0..=7 {
                let iv = SelectionInterval::for_state(&s, st, IntensityClass::S);
                let r = density_matrix(&s, &iv, n, MatrixMode::Full, &spec).unwrap();
                assert!(r.matrix.hermiticity_defect() < 1e-12);
                assert!((r.trace() - 1.0).abs() < 1e-12);
                assert!(r.eigenvalues().unwrap()[0] > -1e-10);
            }
        }
    }

    #[test]
    fn analytic_trace_distance() {
        let diag = |a: f64| PhotonDensityMatrix {
            n: 1,
            matrix: CMatrix::from_fn(2, |r, k| match (r, k) {
                (0, 0) => c(a),
                (1, 1) => c(1.0 - a),
                _ => c(0.0),
            }),
        };
        assert!((trace_distance(&diag(0.3), &diag(0.7)).unwrap() - 0.8).abs() < 1e-14);
        assert_eq!(trace_distance(&diag(0.3), &diag(0.3)).unwrap(), 0.0);
    }

    #[test]
    fn table_properties() {
        let s = paper_source();
        let t = trace_distance_table(
            &s,
            Basis::X,
            None,
            7,
            MatrixMode::Full,
            &QuadratureSpec::default(),
        )
        .unwrap();
        for n in 0..=7 {
            for i in 0..3 {
                assert_eq!(t.values[n][i][i], 0.0);
                for j in 0..3 {
                    assert_eq!(t.values[n][i][j], t.values[n][j][i]);
                    assert!(t.values[n][i][j] >= 0.0 && t.values[n][i][j] <= 2.0);
                    for k in 0..3 {
                        assert!(t.values[n][i][k] <= t.values[n][i][j] + t.values[n][j][k] + 1e-9);
                    }
                }
            }
        }
        assert!(t.values[0][0][2] < 1e-12);
    }

    #[test]
    fn two_photon_form_matches_diagonal_matrix() {
        let s = paper_source();
        let spec = QuadratureSpec::default();
        let union = signal_union(&s);
        let direct = two_photon_matrix(&s, &union, &spec).unwrap();
        let diag = union_density_matrix(&s, &union, 2, MatrixMode::PaperDiagonal, &spec).unwrap();
        for m in 0..3 {
            assert!((direct.get(m, m) - diag.get(m, m)).norm() < 1e-9, "m={m}");
        }
        assert!((direct.trace() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn modes_differ_only_in_even_offdiagonals() {
        let s = paper_source();
        let spec = QuadratureSpec::default();
        let iv = SelectionInterval::for_basis(&s, Basis::X, IntensityClass::S);
        let full = density_matrix(&s, &iv, 2, MatrixMode::Full, &spec).unwrap();
        let diag = density_matrix(&s, &iv, 2, MatrixMode::PaperDiagonal, &spec).unwrap();
        for m1 in 0..3 {
            for m2 in 0..3 {
                let d = (full.get(m1, m2) - diag.get(m1, m2)).norm();
                if (m1, m2) == (0, 2) || (m1, m2) == (2, 0) {
                    assert!(d > 1e-3);
                } else {
                    assert!(d < 1e-14, "({m1},{m2})");
                }
            }
        }
    }

    #[test]
    fn thin_interval_two_photon_limit() {
        let s = SourceParams::new(0.05, 1e-5, 1e-5);
        let spec = QuadratureSpec::default();
        let z = two_photon_matrix(
            &s,
            &[SelectionInterval::for_basis(
                &s,
                Basis::Z,
                IntensityClass::S,
            )],
            &spec,
        )
        .unwrap();
        let x = two_photon_matrix(
            &s,
            &[SelectionInterval::for_basis(
                &s,
                Basis::X,
                IntensityClass::S,
            )],
            &spec,
        )
        .unwrap();
        let close = |m: &PhotonDensityMatrix, w: [f64; 3]| {
            (0..3).all(|k| (m.get(k, k).re - w[k]).abs() < 1e-6)
        };
        assert!(close(&z, [0.5, 0.0, 0.5]));
        assert!(close(&x, [0.25, 0.5, 0.25]));
    }
}
