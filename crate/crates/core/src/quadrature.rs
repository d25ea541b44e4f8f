//! Tensor Gauss–Legendre quadrature with geometric grading.
//!
//! The passive-source density has inverse-square-root edges at `I = 2vt`
//! that meet the `theta = 0, pi` edges in a corner. Two devices keep the
//! rules accurate there: the `SinSquared` axis map removes the divergence
//! along the intensity axis, and panels graded geometrically toward an edge
//! resolve the remaining corner kink. All rules are open (nodes strictly
//! inside each panel), so no integrand is ever evaluated on an edge.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pn1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Where panels cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grading {
    Uniform,
    /// Panels halve in width toward the lower end.
    Low,
    /// Panels halve in width toward the upper end.
    High,
    Both,
}

/// Change of variable applied along one axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AxisMap {
    Identity,
    /// `x = scale * sin^2(u)`; tames `(scale - x)^(-1/2)` behaviour at `x = scale`.
    SinSquared {
        scale: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub grading: Grading,
    pub map: AxisMap,
}

impl Axis {
    pub fn plain(lo: f64, hi: f64) -> Self {
        Axis {
            lo,
            hi,
            grading: Grading::Uniform,
            map: AxisMap::Identity,
        }
    }

    pub fn graded(lo: f64, hi: f64, grading: Grading) -> Self {
        Axis {
            lo,
            hi,
            grading,
            map: AxisMap::Identity,
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Gauss nodes per panel.
    pub nodes: usize,
    /// Number of geometric halvings on graded axes.
    pub levels: usize,
    /// Number of equal panels on uniform axes.
    pub panels: usize,
    /// Relative change between successive refinements accepted as converged.
    pub rel_tol: f64,
    /// Maximum number of node doublings in [`refine_until`].
    pub max_refinements: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            nodes: 16,
            levels: 8,
            panels: 2,
            rel_tol: 1e-7,
            max_refinements: 4,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.nodes < 8 {
            return Err(Error::invalid("quadrature needs at least 8 nodes per axis"));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::invalid("quadrature tolerance must be positive"));
        }
        Ok(())
    }

    /// Same rule with the per-panel node count doubled.
    pub fn doubled(&self) -> Self {
        QuadratureSpec {
            nodes: self.nodes * 2,
            ..*self
        }
    }
}

/// A one-dimensional rule: integral ~ sum w_i f(x_i).
#[derive(Debug, Clone, Default)]
pub struct Rule1D {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

fn panel_edges(lo: f64, hi: f64, levels: usize, grading: Grading) -> Vec<f64> {
    let levels = levels.max(1);
    match grading {
        // `levels` is the panel count here
        Grading::Uniform => (0..=levels)
            .map(|k| lo + (hi - lo) * k as f64 / levels as f64)
            .collect(),
        Grading::Low => {
            let mut e = vec![lo];
            for k in (0..=levels).rev() {
                e.push(lo + (hi - lo) * 0.5f64.powi(k as i32));
            }
            e
        }
        Grading::High => {
            let mut e: Vec<f64> = panel_edges(0.0, 1.0, levels, Grading::Low)
                .into_iter()
                .map(|s| hi - (hi - lo) * s)
                .collect();
            e.reverse();
            e
        }
        Grading::Both => {
            let mid = 0.5 * (lo + hi);
            let mut e = panel_edges(lo, mid, levels, Grading::Low);
            e.pop();
            e.extend(panel_edges(mid, hi, levels, Grading::High));
            e
        }
    }
}

impl Rule1D {
    /// Composite Gauss–Legendre rule on `[lo, hi]`. `levels` counts panels
    /// for a uniform rule and halvings for a graded one.
    pub fn composite(lo: f64, hi: f64, nodes: usize, levels: usize, grading: Grading) -> Rule1D {
        let (gx, gw) = gauss_legendre(nodes);
        let edges = panel_edges(lo, hi, levels, grading);
        let mut rule = Rule1D::default();
        for pair in edges.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let half = 0.5 * (b - a);
            if half <= 0.0 {
                continue;
            }
            for (x, w) in gx.iter().zip(&gw) {
                rule.points.push(a + half * (x + 1.0));
                rule.weights.push(half * w);
            }
        }
        rule
    }

    /// Rule for a (possibly mapped) axis, with weights in the original variable.
    pub fn for_axis(axis: &Axis, spec: &QuadratureSpec) -> Rule1D {
        if axis.width() <= 0.0 {
            return Rule1D::default();
        }
        let levels = match axis.grading {
            Grading::Uniform => spec.panels,
            _ => spec.levels,
        };
        match axis.map {
            AxisMap::Identity => {
                Rule1D::composite(axis.lo, axis.hi, spec.nodes, levels, axis.grading)
            }
            AxisMap::SinSquared { scale } => {
                let to_u = |x: f64| (x / scale).clamp(0.0, 1.0).sqrt().asin();
                let u = Rule1D::composite(
                    to_u(axis.lo),
                    to_u(axis.hi),
                    spec.nodes,
                    levels,
                    axis.grading,
                );
                let mut rule = Rule1D::default();
                for (ui, wi) in u.points.iter().zip(&u.weights) {
                    let s = ui.sin();
                    rule.points.push(scale * s * s);
                    rule.weights.push(wi * scale * (2.0 * ui).sin());
                }
                rule
            }
        }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Tensor product of two axis rules.
#[derive(Debug, Clone)]
pub struct TensorRule {
    pub x: Rule1D,
    pub y: Rule1D,
}

impl TensorRule {
    pub fn new(x: &Axis, y: &Axis, spec: &QuadratureSpec) -> Self {
        TensorRule {
            x: Rule1D::for_axis(x, spec),
            y: Rule1D::for_axis(y, spec),
        }
    }

    /// Visits every node in a fixed order as `(x, y, weight)`.
    pub fn for_each(&self, mut visit: impl FnMut(f64, f64, f64)) {
        for (&x, &wx) in self.x.points.iter().zip(&self.x.weights) {
            for (&y, &wy) in self.y.points.iter().zip(&self.y.weights) {
                visit(x, y, wx * wy);
            }
        }
    }

    pub fn integrate(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        let mut acc = 0.0;
        self.for_each(|x, y, w| acc += w * f(x, y));
        acc
    }
}

/// A real integrand on a rectangle.
pub struct Integrand2D<F: Fn(f64, f64) -> f64> {
    pub f: F,
    pub x: Axis,
    pub y: Axis,
}

impl<F: Fn(f64, f64) -> f64> Integrand2D<F> {
    pub fn new(f: F, x: Axis, y: Axis) -> Self {
        Integrand2D { f, x, y }
    }

    fn estimate(&self, spec: &QuadratureSpec) -> f64 {
        TensorRule::new(&self.x, &self.y, spec).integrate(&self.f)
    }
}

/// Integrates `g`, doubling the per-panel node count until two successive
/// estimates agree to `spec.rel_tol`.
pub fn integrate_2d<F: Fn(f64, f64) -> f64>(
    g: &Integrand2D<F>,
    spec: &QuadratureSpec,
) -> Result<f64> {
    refine_until(g, spec).map(|(v, _)| v)
}

/// Like [`integrate_2d`] but also returns the achieved relative change.
pub fn refine_until<F: Fn(f64, f64) -> f64>(
    g: &Integrand2D<F>,
    spec: &QuadratureSpec,
) -> Result<(f64, f64)> {
    spec.validate()?;
    if g.x.width() <= 0.0 || g.y.width() <= 0.0 {
        return Ok((0.0, 0.0));
    }
    let mut current = *spec;
    let mut prev = g.estimate(&current);
    for _ in 0..spec.max_refinements {
        current = current.doubled();
        let next = g.estimate(&current);
        let scale = next.abs().max(f64::MIN_POSITIVE);
        let delta = (next - prev).abs() / scale;
        if delta <= spec.rel_tol || (next - prev).abs() < 1e-300 {
            return Ok((next, delta));
        }
        prev = next;
    }
    let last = g.estimate(&current.doubled());
    Err(Error::QuadratureNonConvergence {
        previous: prev,
        last,
        tolerance: spec.rel_tol,
    })
}
