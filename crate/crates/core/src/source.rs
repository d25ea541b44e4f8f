//! The fully passive source.
//!
//! Four phase-randomised coherent pulses of equal intensity `v` interfere
//! on two beam splitters and are recombined on a PBS, producing a coherent
//! pulse of intensity `I` in the polarisation mode
//! `a†(θ, φ) = cos(θ/2) a_H† + e^{iφ} sin(θ/2) a_V†`. With
//! `θ1 = (α-β)/2`, `θ2 = (γ-δ)/2`:
//!
//! ```text
//! I         = 2 v t (cos²θ1 + cos²θ2)
//! cos(θ/2)  = cos θ1 / sqrt(cos²θ1 + cos²θ2)
//! φ         = (γ+δ)/2 - (α+β)/2
//! ```
//!
//! On `I ∈ (0, 2vt]`, `θ ∈ [0, π]` the joint density is
//! `f(I,θ) = 1 / (vt π² sqrt(1 - I/(2vt) cos²(θ/2)) sqrt(1 - I/(2vt) sin²(θ/2)))`,
//! normalised to one on that support, and `φ` is uniform. Post-selection
//! keeps pulses whose `(I, θ, φ)` falls into a [`SelectionInterval`].

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::SourceParams;
use crate::quadrature::{
    integrate_2d, Axis, AxisMap, Grading, Integrand2D, QuadratureSpec, Rule1D, TensorRule,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Basis {
    X,
    Y,
    Z,
}

impl Basis {
    pub const ALL: [Basis; 3] = [Basis::X, Basis::Y, Basis::Z];

    /// The two states of the basis, "k" first.
    pub fn states(self) -> [State; 2] {
        match self {
            Basis::X => [State::D, State::A],
            Basis::Y => [State::R, State::L],
            Basis::Z => [State::H, State::V],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Basis::X => "X",
            Basis::Y => "Y",
            Basis::Z => "Z",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum State {
    H,
    V,
    D,
    A,
    R,
    L,
}

impl State {
    pub fn basis(self) -> Basis {
        match self {
            State::H | State::V => Basis::Z,
            State::D | State::A => Basis::X,
            State::R | State::L => Basis::Y,
        }
    }

    /// Bloch vector `(x, y, z)` of the target polarisation.
    pub fn bloch(self) -> [f64; 3] {
        match self {
            State::H => [0.0, 0.0, 1.0],
            State::V => [0.0, 0.0, -1.0],
            State::D => [1.0, 0.0, 0.0],
            State::A => [-1.0, 0.0, 0.0],
            State::R => [0.0, 1.0, 0.0],
            State::L => [0.0, -1.0, 0.0],
        }
    }

    /// Centre `(θ, φ)` of the state on the Bloch sphere.
    pub fn center(self) -> (f64, f64) {
        match self {
            State::H => (0.0, 0.0),
            State::V => (PI, 0.0),
            State::D => (FRAC_PI_2, 0.0),
            State::A => (FRAC_PI_2, PI),
            State::R => (FRAC_PI_2, FRAC_PI_2),
            State::L => (FRAC_PI_2, 1.5 * PI),
        }
    }

    /// `|f(k)|² = (1 + n·s_k) / 2`: weight of this state in `a†(θ, φ)`.
    pub fn projection(self, theta: f64, phi: f64) -> f64 {
        let [sx, sy, sz] = self.bloch();
        let st = theta.sin();
        let n_dot = sx * st * phi.cos() + sy * st * phi.sin() + sz * theta.cos();
        (0.5 * (1.0 + n_dot)).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum IntensityClass {
    /// `[0, I_vac]`
    D1,
    /// `(I_vac, I_d]`
    D2,
    /// `(I_d, I_s]`
    S,
}

impl IntensityClass {
    pub const ALL: [IntensityClass; 3] =
        [IntensityClass::D1, IntensityClass::D2, IntensityClass::S];

    pub fn range(self, source: &SourceParams) -> (f64, f64) {
        match self {
            IntensityClass::D1 => (0.0, source.i_vac),
            IntensityClass::D2 => (source.i_vac, source.i_d),
            IntensityClass::S => (source.i_d, source.intensity_max),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            IntensityClass::D1 => "d1",
            IntensityClass::D2 => "d2",
            IntensityClass::S => "s",
        }
    }
}

/// Azimuthal acceptance of a cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PhiSet {
    Full,
    /// Closed arc `[center - half_width, center + half_width]` (mod 2π).
    Arc {
        center: f64,
        half_width: f64,
    },
}

impl PhiSet {
    pub fn measure(&self) -> f64 {
        match *self {
            PhiSet::Full => TAU,
            PhiSet::Arc { half_width, .. } => 2.0 * half_width,
        }
    }

    pub fn contains(&self, phi: f64) -> bool {
        match *self {
            PhiSet::Full => true,
            PhiSet::Arc { center, half_width } => {
                let d = (phi - center).rem_euclid(TAU);
                d.min(TAU - d) <= half_width
            }
        }
    }
}

/// One state's acceptance region in `(θ, φ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub state: State,
    pub theta: (f64, f64),
    pub phi: PhiSet,
}

impl Cell {
    /// The acceptance cell of `state` with half-widths taken from `source`.
    pub fn for_state(state: State, source: &SourceParams) -> Cell {
        let (tc, pc) = state.center();
        match state.basis() {
            Basis::Z => {
                let dz = source.delta_z;
                let theta = if tc == 0.0 { (0.0, dz) } else { (PI - dz, PI) };
                Cell {
                    state,
                    theta,
                    phi: PhiSet::Full,
                }
            }
            Basis::X | Basis::Y => {
                let dx = source.delta_x;
                Cell {
                    state,
                    theta: (tc - dx, tc + dx),
                    phi: PhiSet::Arc {
                        center: pc,
                        half_width: dx,
                    },
                }
            }
        }
    }

    pub fn contains(&self, theta: f64, phi: f64) -> bool {
        theta >= self.theta.0 && theta <= self.theta.1 && self.phi.contains(phi)
    }
}

/// A post-selection region: an intensity window times a union of cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionInterval {
    pub basis: Basis,
    /// `None` for custom intensity windows.
    pub class: Option<IntensityClass>,
    /// Half-open `(lo, hi]`.
    pub i_range: (f64, f64),
    pub cells: Vec<Cell>,
}

impl SelectionInterval {
    /// `S_{K,k}^i`: one state, one intensity class.
    pub fn for_state(source: &SourceParams, state: State, class: IntensityClass) -> Self {
        SelectionInterval {
            basis: state.basis(),
            class: Some(class),
            i_range: class.range(source),
            cells: vec![Cell::for_state(state, source)],
        }
    }

    /// `S_K^i`: both states of a basis.
    pub fn for_basis(source: &SourceParams, basis: Basis, class: IntensityClass) -> Self {
        SelectionInterval {
            basis,
            class: Some(class),
            i_range: class.range(source),
            cells: basis
                .states()
                .iter()
                .map(|&s| Cell::for_state(s, source))
                .collect(),
        }
    }

    /// Both states of a basis over every intensity class, `(0, I_s]`.
    pub fn basis_all_intensities(source: &SourceParams, basis: Basis) -> Self {
        SelectionInterval {
            class: None,
            i_range: (0.0, source.intensity_max),
            ..Self::for_basis(source, basis, IntensityClass::S)
        }
    }

    /// The whole support `(0, 2vt] × [0, π] × [0, 2π)`.
    pub fn full_domain(source: &SourceParams) -> Self {
        SelectionInterval {
            basis: Basis::Z,
            class: None,
            i_range: (0.0, source.i_support()),
            cells: vec![Cell {
                state: State::H,
                theta: (0.0, PI),
                phi: PhiSet::Full,
            }],
        }
    }

    pub fn with_i_range(mut self, lo: f64, hi: f64) -> Self {
        self.i_range = (lo, hi);
        self.class = None;
        self
    }

    pub fn contains(&self, s: &BlochSample) -> bool {
        s.intensity > self.i_range.0
            && s.intensity <= self.i_range.1
            && self.cells.iter().any(|c| c.contains(s.theta, s.phi))
    }

    pub fn validate(&self, source: &SourceParams) -> Result<()> {
        let (lo, hi) = self.i_range;
        if !(lo >= 0.0 && lo <= hi && hi <= source.i_support() * (1.0 + 1e-12)) {
            return Err(Error::invalid(format!(
                "intensity range ({lo}, {hi}] is not inside (0, {}]",
                source.i_support()
            )));
        }
        for c in &self.cells {
            if !(c.theta.0 >= 0.0 && c.theta.0 <= c.theta.1 && c.theta.1 <= PI) {
                return Err(Error::invalid("theta range must lie in [0, pi]"));
            }
            if matches!(c.phi, PhiSet::Full) && c.state.basis() != Basis::Z {
                return Err(Error::invalid(
                    "a full phi circle is only meaningful for Z states",
                ));
            }
        }
        Ok(())
    }
}

/// One emitted pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochSample {
    pub intensity: f64,
    pub theta: f64,
    pub phi: f64,
    /// Global phase; carried but unused by the statistics.
    pub psi: f64,
}

/// `f(I, θ)` in the reduced variable `x = I / 2vt`, without the `1/(2vt)` Jacobian.
#[inline]
pub(crate) fn reduced_density(x: f64, theta: f64) -> f64 {
    let c2 = (0.5 * theta).cos().powi(2);
    let s2 = 1.0 - c2;
    2.0 / (PI * PI * ((1.0 - x * c2) * (1.0 - x * s2)).sqrt())
}

/// Joint density `f(I, θ)` of the source on its support.
pub fn density(source: &SourceParams, intensity: f64, theta: f64) -> Result<f64> {
    let vt = source.vt_product;
    let inside = intensity > 0.0 && intensity <= 2.0 * vt && (0.0..=PI).contains(&theta);
    let value = if inside {
        reduced_density(intensity / (2.0 * vt), theta) / (2.0 * vt)
    } else {
        f64::NAN
    };
    if inside && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::OutsideSupport {
            i: intensity,
            theta,
            i_max: 2.0 * vt,
        })
    }
}

/// Integration axes for one cell; the intensity axis is mapped and graded
/// when the cell reaches the singular corner `I = 2vt, θ ∈ {0, π}`.
pub(crate) fn cell_axes(source: &SourceParams, i_range: (f64, f64), cell: &Cell) -> (Axis, Axis) {
    let support = source.i_support();
    let (lo, hi) = (i_range.0, i_range.1.min(support));
    let touches_pole = cell.theta.0 <= 0.0 || cell.theta.1 >= PI;
    let at_edge = hi >= support * (1.0 - 1e-12);
    let i_axis = if at_edge && touches_pole {
        Axis {
            lo,
            hi: support,
            grading: Grading::High,
            map: AxisMap::SinSquared { scale: support },
        }
    } else {
        Axis::plain(lo, hi)
    };
    let grading = match (cell.theta.0 <= 0.0, cell.theta.1 >= PI) {
        (true, true) => Grading::Both,
        (true, false) => Grading::Low,
        (false, true) => Grading::High,
        (false, false) => Grading::Uniform,
    };
    let theta_axis = if at_edge && touches_pole {
        Axis::graded(cell.theta.0, cell.theta.1, grading)
    } else {
        Axis::plain(cell.theta.0, cell.theta.1)
    };
    (i_axis, theta_axis)
}

/// Quadrature nodes of one cell, ready for moment accumulation.
pub(crate) struct CellNodes {
    pub cell: Cell,
    /// `(I, θ, weight × f(I, θ))`
    pub nodes: Vec<(f64, f64, f64)>,
    /// Conditional φ rule (weights sum to one); `None` for a full circle.
    pub phi: Option<Rule1D>,
    /// `φ-measure / 2π`.
    pub phi_fraction: f64,
}

impl CellNodes {
    pub fn build(
        source: &SourceParams,
        i_range: (f64, f64),
        cell: &Cell,
        spec: &QuadratureSpec,
    ) -> Self {
        let (ia, ta) = cell_axes(source, i_range, cell);
        let rule = TensorRule::new(&ia, &ta, spec);
        let two_vt = source.i_support();
        let mut nodes = Vec::with_capacity(rule.x.len() * rule.y.len());
        rule.for_each(|i, t, w| {
            nodes.push((i, t, w * reduced_density(i / two_vt, t) / two_vt));
        });
        let phi = match cell.phi {
            PhiSet::Full => None,
            PhiSet::Arc { center, half_width } => {
                let mut r = Rule1D::composite(
                    center - half_width,
                    center + half_width,
                    spec.nodes,
                    spec.panels,
                    Grading::Uniform,
                );
                let total = 2.0 * half_width;
                r.weights.iter_mut().for_each(|w| *w /= total);
                Some(r)
            }
        };
        CellNodes {
            cell: *cell,
            nodes,
            phi,
            phi_fraction: cell.phi.measure() / TAU,
        }
    }
}

fn cell_integral<F: Fn(f64, f64) -> f64>(
    source: &SourceParams,
    i_range: (f64, f64),
    cell: &Cell,
    spec: &QuadratureSpec,
    g: F,
) -> Result<f64> {
    let (ia, ta) = cell_axes(source, i_range, cell);
    let two_vt = source.i_support();
    let integrand = Integrand2D::new(
        |i: f64, t: f64| g(i, t) * reduced_density(i / two_vt, t) / two_vt,
        ia,
        ta,
    );
    integrate_2d(&integrand, spec)
}

/// `<P>`: unconditional probability that a pulse lands in `interval`.
pub fn interval_probability(
    source: &SourceParams,
    interval: &SelectionInterval,
    spec: &QuadratureSpec,
) -> Result<f64> {
    interval.validate(source)?;
    let mut total = 0.0;
    for cell in &interval.cells {
        let mass = cell_integral(source, interval.i_range, cell, spec, |_, _| 1.0)?;
        total += mass * cell.phi.measure() / TAU;
    }
    Ok(total)
}

/// Poisson photon-number probability `e^{-I} I^n / n!`.
pub fn poisson(intensity: f64, n: usize) -> f64 {
    let mut p = (-intensity).exp();
    for k in 1..=n {
        p *= intensity / k as f64;
    }
    p
}

/// `<P_I(n)>`: photon-number probability averaged over the interval.
pub fn poisson_moment(
    source: &SourceParams,
    interval: &SelectionInterval,
    n: usize,
    spec: &QuadratureSpec,
) -> Result<f64> {
    interval.validate(source)?;
    let (mut num, mut den) = (0.0, 0.0);
    for cell in &interval.cells {
        let frac = cell.phi.measure() / TAU;
        num += frac * cell_integral(source, interval.i_range, cell, spec, |i, _| poisson(i, n))?;
        den += frac * cell_integral(source, interval.i_range, cell, spec, |_, _| 1.0)?;
    }
    if den <= 0.0 {
        return Err(Error::invalid("poisson moment over an empty interval"));
    }
    Ok(num / den)
}

/// Mean intensity `∫∫ I f dI dθ` over the full support.
pub fn mean_intensity(source: &SourceParams, spec: &QuadratureSpec) -> Result<f64> {
    let full = SelectionInterval::full_domain(source);
    cell_integral(source, full.i_range, &full.cells[0], spec, |i, _| i)
}

/// Maps four interferometer phases onto `(I, θ, φ, ψ)`.
pub fn pulse_from_phases(vt: f64, alpha: f64, beta: f64, gamma: f64, delta: f64) -> BlochSample {
    let c1 = (0.5 * (alpha - beta)).cos();
    let c2 = (0.5 * (gamma - delta)).cos();
    let intensity = 2.0 * vt * (c1 * c1 + c2 * c2);
    let theta = 2.0 * c2.abs().atan2(c1.abs());
    // negative amplitudes are absorbed as a π phase
    let sign = |c: f64| if c < 0.0 { PI } else { 0.0 };
    let psi = (0.5 * (alpha + beta) + sign(c1)).rem_euclid(TAU);
    let phi = (0.5 * (gamma + delta) - 0.5 * (alpha + beta) + sign(c2) - sign(c1)).rem_euclid(TAU);
    BlochSample {
        intensity,
        theta,
        phi,
        psi,
    }
}

/// Draws `count` pulses from four independent uniform phases. Samples cover
/// the full physical range `I ∈ [0, 4vt]`; the density model describes the
/// part with `I <= 2vt`.
pub fn sample_source(source: &SourceParams, seed: u64, count: usize) -> Vec<BlochSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut ph = || rng.random::<f64>() * TAU;
            let (a, b, c, d) = (ph(), ph(), ph(), ph());
            pulse_from_phases(source.vt_product, a, b, c, d)
        })
        .collect()
}

/// Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    /// Samples that fell inside the density's support.
    pub samples: usize,
}

impl McEstimate {
    /// `|value - reference|` in units of the standard error.
    pub fn z_score(&self, reference: f64) -> f64 {
        (self.value - reference).abs() / self.std_error.max(f64::MIN_POSITIVE)
    }
}

/// Sampling estimate of [`interval_probability`], conditioned on the support.
pub fn mc_interval_probability(
    source: &SourceParams,
    interval: &SelectionInterval,
    seed: u64,
    count: usize,
) -> McEstimate {
    let support = source.i_support();
    let (mut inside, mut hits) = (0usize, 0usize);
    for s in sample_source(source, seed, count) {
        if s.intensity > support {
            continue;
        }
        inside += 1;
        if interval.contains(&s) {
            hits += 1;
        }
    }
    let n = inside.max(1) as f64;
    let p = hits as f64 / n;
    McEstimate {
        value: p,
        std_error: (p * (1.0 - p) / n).sqrt().max(1.0 / n),
        samples: inside,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper_2db() -> SourceParams {
        SourceParams::new(0.0895, 0.0490 * PI, 0.0546 * PI)
    }

    #[test]
    fn density_limits() {
        let s = SourceParams {
            vt_product: 0.5,
            ..SourceParams::new(1.0, 0.1, 0.1)
        };
        let f0 = density(&s, 1e-12, 1.0).unwrap();
        assert!((f0 - 2.0 / (PI * PI)).abs() < 1e-10);
        let fm = density(&s, 1.0, FRAC_PI_2).unwrap();
        assert!((fm - 1.0 / (0.5 * PI * PI * 0.5)).abs() < 1e-12);
        assert!(density(&s, 1.5, 1.0).is_err());
        assert!(density(&s, 0.0, 1.0).is_err());
        assert!(density(&s, 1.0, 0.0).is_err());
        assert!(density(&s, 0.5, -0.1).is_err());
    }

    #[test]
    fn full_domain_normalised() {
        let s = paper_2db();
        let p = interval_probability(
            &s,
            &SelectionInterval::full_domain(&s),
            &QuadratureSpec::default(),
        )
        .unwrap();
        assert!((p - 1.0).abs() < 1e-6, "{p}");
    }

    #[test]
    fn zero_width_theta_is_zero() {
        let s = paper_2db();
        let mut iv = SelectionInterval::for_state(&s, State::H, IntensityClass::S);
        iv.cells[0].theta = (0.0, 0.0);
        assert_eq!(
            interval_probability(&s, &iv, &QuadratureSpec::default()).unwrap(),
            0.0
        );
    }

    #[test]
    fn thin_z_interval_converges_inside_unit() {
        let s = paper_2db();
        let mut iv = SelectionInterval::for_state(&s, State::H, IntensityClass::S)
            .with_i_range(0.0, s.i_support());
        iv.cells[0].theta = (0.0, 0.05 * PI);
        let p = interval_probability(&s, &iv, &QuadratureSpec::default()).unwrap();
        assert!(p > 0.0 && p < 1.0);
    }

    #[test]
    fn state_symmetry() {
        let s = paper_2db();
        let spec = QuadratureSpec::default();
        for class in IntensityClass::ALL {
            let p = |st| {
                interval_probability(&s, &SelectionInterval::for_state(&s, st, class), &spec)
                    .unwrap()
            };
            assert!((p(State::H) - p(State::V)).abs() < 1e-9);
            let d = p(State::D);
            for st in [State::A, State::R, State::L] {
                assert!((p(st) - d).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn classes_partition_additively() {
        let s = paper_2db();
        let spec = QuadratureSpec::default();
        for basis in Basis::ALL {
            let parts: f64 = IntensityClass::ALL
                .iter()
                .map(|&c| {
                    interval_probability(&s, &SelectionInterval::for_basis(&s, basis, c), &spec)
                        .unwrap()
                })
                .sum();
            let whole = interval_probability(
                &s,
                &SelectionInterval::basis_all_intensities(&s, basis),
                &spec,
            )
            .unwrap();
            assert!(
                (parts - whole).abs() < 1e-9 * whole.max(1e-3),
                "{basis:?}: {parts} vs {whole}"
            );
        }
    }

    #[test]
    fn phase_map_examples() {
        let p = pulse_from_phases(0.25, 0.3, 0.3, 1.1, 1.1);
        assert!((p.intensity - 1.0).abs() < 1e-15);
        assert!((p.theta - FRAC_PI_2).abs() < 1e-15);
        let p = pulse_from_phases(0.25, PI, 0.0, 0.7, 0.7);
        assert!((p.theta - PI).abs() < 1e-12);
    }

    #[test]
    fn phase_map_reproduces_mode_amplitudes() {
        // cos(θ/2) e^{iψ} and e^{i(ψ+φ)} sin(θ/2) must match the two PBS inputs.
        let vt = 0.3;
        for (a, b, c, d) in [
            (0.1, 2.9, 4.0, 0.4),
            (5.0, 1.0, 2.0, 6.0),
            (3.0, 0.2, 0.5, 5.5),
        ] {
            let p = pulse_from_phases(vt, a, b, c, d);
            let amp = (p.intensity / (2.0 * vt)).sqrt();
            let h = num_complex::Complex64::from_polar(amp * (0.5 * p.theta).cos(), p.psi);
            let v = num_complex::Complex64::from_polar(amp * (0.5 * p.theta).sin(), p.psi + p.phi);
            let h_ref = num_complex::Complex64::from_polar((0.5 * (a - b)).cos(), 0.5 * (a + b));
            let v_ref = num_complex::Complex64::from_polar((0.5 * (c - d)).cos(), 0.5 * (c + d));
            assert!((h - h_ref).norm() < 1e-12 && (v - v_ref).norm() < 1e-12);
        }
    }

    #[test]
    fn poisson_point_mass_limit() {
        let s = SourceParams::new(0.5, 0.1, 0.1);
        let mu = 0.3;
        let iv = SelectionInterval::for_basis(&s, Basis::X, IntensityClass::S)
            .with_i_range(mu - 1e-7, mu);
        for n in 0..5 {
            let m = poisson_moment(&s, &iv, n, &QuadratureSpec::default()).unwrap();
            assert!((m - poisson(mu, n)).abs() < 1e-6, "n={n}");
        }
    }

    #[test]
    fn poisson_moments_sum_to_one() {
        let s = paper_2db();
        let spec = QuadratureSpec::default();
        let iv = SelectionInterval::for_basis(&s, Basis::Z, IntensityClass::S);
        let total: f64 = (0..=50)
            .map(|n| poisson_moment(&s, &iv, n, &spec).unwrap())
            .sum();
        assert!((total - 1.0).abs() < 1e-9, "{total}");
        let p0 = poisson_moment(&s, &iv, 0, &spec).unwrap();
        assert!(p0 >= (-s.i_support()).exp());
    }

    #[test]
    fn sampler_is_deterministic() {
        let s = paper_2db();
        assert_eq!(sample_source(&s, 7, 100), sample_source(&s, 7, 100));
        assert_ne!(sample_source(&s, 7, 100), sample_source(&s, 8, 100));
    }

    #[test]
    fn phi_arc_wraps() {
        let arc = PhiSet::Arc {
            center: 0.0,
            half_width: 0.2,
        };
        assert!(arc.contains(TAU - 0.1));
        assert!(arc.contains(0.15));
        assert!(!arc.contains(0.3));
    }
}
