//! Decoy-state linear programs.
//!
//! The yield program bounds the single-photon yield of the signal class from
//! below, the error program bounds its single-photon error yield from above.
//! Both couple the three intensity classes through trace distances: a
//! detector that cannot tell two `n`-photon states apart beyond `D` cannot
//! give them yields differing by more than `D`.
//!
//! Solver: dense two-phase tableau simplex with Bland's rule, so a given
//! problem always produces the same pivots and the same answer.

use std::fmt::{self, Write as _};

use serde::Serialize;

use crate::click::IntervalStats;
use crate::error::{Error, Result};
use crate::source::IntensityClass;
use crate::states::{class_index, TraceDistanceTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RowKind {
    Le,
    Ge,
    Eq,
}

impl RowKind {
    fn symbol(self) -> &'static str {
        match self {
            RowKind::Le => "<=",
            RowKind::Ge => ">=",
            RowKind::Eq => "=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Constraint {
    pub name: String,
    /// Sparse `(variable, coefficient)` pairs.
    pub coeffs: Vec<(usize, f64)>,
    pub kind: RowKind,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpProblem {
    pub name: String,
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub var_names: Vec<String>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<Constraint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

impl fmt::Display for LpStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LpStatus::Optimal => "optimal",
            LpStatus::Infeasible => "infeasible",
            LpStatus::Unbounded => "unbounded",
            LpStatus::IterationLimit => "stopped at the iteration limit",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    pub x: Vec<f64>,
    pub iterations: usize,
}

impl LpSolution {
    pub fn require_optimal(self, name: &str) -> Result<LpSolution> {
        if self.status == LpStatus::Optimal {
            Ok(self)
        } else {
            Err(Error::LpStatus {
                name: name.to_string(),
                status: self.status.to_string(),
            })
        }
    }
}

impl LpProblem {
    pub fn new(name: impl Into<String>, sense: Sense) -> Self {
        LpProblem {
            name: name.into(),
            sense,
            objective: Vec::new(),
            var_names: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, lo: f64, hi: f64, cost: f64) -> usize {
        self.var_names.push(name.into());
        self.lower.push(lo);
        self.upper.push(hi);
        self.objective.push(cost);
        self.var_names.len() - 1
    }

    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        coeffs: Vec<(usize, f64)>,
        kind: RowKind,
        rhs: f64,
    ) {
        self.rows.push(Constraint {
            name: name.into(),
            coeffs,
            kind,
            rhs,
        });
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        let finite = self
            .objective
            .iter()
            .chain(&self.lower)
            .all(|v| v.is_finite())
            && self.rows.iter().all(|r| {
                r.rhs.is_finite() && r.coeffs.iter().all(|(j, a)| *j < n && a.is_finite())
            });
        if !finite || self.lower.len() != n || self.upper.len() != n {
            return Err(Error::invalid(format!(
                "linear program `{}` is malformed",
                self.name
            )));
        }
        if self.lower.iter().zip(&self.upper).any(|(l, u)| l > u) {
            return Err(Error::invalid(format!(
                "linear program `{}` has an empty box",
                self.name
            )));
        }
        Ok(())
    }

    /// Largest constraint or bound violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        for r in &self.rows {
            let lhs: f64 = r.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
            let v = match r.kind {
                RowKind::Le => lhs - r.rhs,
                RowKind::Ge => r.rhs - lhs,
                RowKind::Eq => (lhs - r.rhs).abs(),
            };
            worst = worst.max(v);
        }
        worst
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Plain-text tableau, see `docs/lp_dump.md`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let sense = match self.sense {
            Sense::Minimize => "min",
            Sense::Maximize => "max",
        };
        let _ = writeln!(out, "lp {}", self.name);
        let _ = writeln!(out, "sense {sense}");
        let terms: Vec<String> = self
            .objective
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(j, c)| format!("{c:+.17e} {}", self.var_names[j]))
            .collect();
        let _ = writeln!(out, "objective {}", terms.join(" "));
        let _ = writeln!(out, "vars {}", self.num_vars());
        for j in 0..self.num_vars() {
            let _ = writeln!(
                out,
                "var {j} {} {:.17e} {:.17e}",
                self.var_names[j], self.lower[j], self.upper[j]
            );
        }
        let _ = writeln!(out, "rows {}", self.rows.len());
        for (i, r) in self.rows.iter().enumerate() {
            let terms: Vec<String> = r
                .coeffs
                .iter()
                .map(|&(j, a)| format!("{a:+.17e} {}", self.var_names[j]))
                .collect();
            let _ = writeln!(
                out,
                "row {i} {} {} {:.17e} : {}",
                r.name,
                r.kind.symbol(),
                r.rhs,
                terms.join(" ")
            );
        }
        out
    }
}

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-13;
const FEAS_TOL: f64 = 1e-12;
const MAX_ITER: usize = 20_000;

struct Tableau {
    /// `rows × (cols + 1)`; the last column is the right-hand side.
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
    iterations: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
    Limit,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.t[i][self.cols]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c];
        self.t[r].iter_mut().for_each(|v| *v /= p);
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                row.iter_mut()
                    .zip(&pivot_row)
                    .for_each(|(v, p)| *v -= f * p);
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
        self.iterations += 1;
    }

    /// Minimises `cost · x` over columns with `allowed[j]`.
    fn run(&mut self, cost: &[f64], allowed: &[bool]) -> Outcome {
        loop {
            if self.iterations >= MAX_ITER {
                return Outcome::Limit;
            }
            let mut entering = None;
            for j in 0..self.cols {
                if !allowed[j] || self.basis.contains(&j) {
                    continue;
                }
                let reduced = cost[j]
                    - (0..self.t.len())
                        .map(|i| cost[self.basis[i]] * self.t[i][j])
                        .sum::<f64>();
                if reduced < -COST_TOL {
                    entering = Some(j);
                    break;
                }
            }
            let Some(c) = entering else {
                return Outcome::Optimal;
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.t.len() {
                let a = self.t[i][c];
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i).max(0.0) / a;
                    let better = match leave {
                        None => true,
                        Some((li, lr)) => {
                            ratio < lr || (ratio == lr && self.basis[i] < self.basis[li])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, c),
                None => return Outcome::Unbounded,
            }
        }
    }
}

/// Solves `p` with the two-phase simplex.
pub fn solve_lp(p: &LpProblem) -> LpSolution {
    let n = p.num_vars();
    // shift to x' = x - lo >= 0; finite upper bounds become rows
    let mut rows: Vec<(Vec<f64>, RowKind, f64)> = Vec::new();
    for r in &p.rows {
        let mut dense = vec![0.0; n];
        let mut rhs = r.rhs;
        for &(j, a) in &r.coeffs {
            dense[j] += a;
            rhs -= a * p.lower[j];
        }
        rows.push((dense, r.kind, rhs));
    }
    for j in 0..n {
        if p.upper[j].is_finite() {
            let mut dense = vec![0.0; n];
            dense[j] = 1.0;
            rows.push((dense, RowKind::Le, p.upper[j] - p.lower[j]));
        }
    }
    for row in rows.iter_mut() {
        if row.2 < 0.0 {
            row.0.iter_mut().for_each(|v| *v = -*v);
            row.2 = -row.2;
            row.1 = match row.1 {
                RowKind::Le => RowKind::Ge,
                RowKind::Ge => RowKind::Le,
                RowKind::Eq => RowKind::Eq,
            };
        }
    }
    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.1 != RowKind::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != RowKind::Le).count();
    let cols = n + n_slack + n_art;
    let mut t = vec![vec![0.0; cols + 1]; m];
    let mut basis = vec![0; m];
    let (mut s, mut a) = (n, n + n_slack);
    for (i, (dense, kind, rhs)) in rows.iter().enumerate() {
        t[i][..n].copy_from_slice(dense);
        t[i][cols] = *rhs;
        match kind {
            RowKind::Le => {
                t[i][s] = 1.0;
                basis[i] = s;
                s += 1;
            }
            RowKind::Ge => {
                t[i][s] = -1.0;
                t[i][a] = 1.0;
                basis[i] = a;
                s += 1;
                a += 1;
            }
            RowKind::Eq => {
                t[i][a] = 1.0;
                basis[i] = a;
                a += 1;
            }
        }
    }
    let art_start = n + n_slack;
    let mut tab = Tableau {
        t,
        basis,
        cols,
        iterations: 0,
    };
    let fail = |status, iterations| LpSolution {
        status,
        objective: f64::NAN,
        x: vec![f64::NAN; n],
        iterations,
    };

    let phase1_cost: Vec<f64> = (0..cols)
        .map(|j| if j >= art_start { 1.0 } else { 0.0 })
        .collect();
    let all = vec![true; cols];
    if let Outcome::Limit = tab.run(&phase1_cost, &all) {
        return fail(LpStatus::IterationLimit, tab.iterations);
    }
    let scale = 1.0 + rows.iter().map(|r| r.2.abs()).fold(0.0, f64::max);
    let infeasibility: f64 = (0..m)
        .filter(|&i| tab.basis[i] >= art_start)
        .map(|i| tab.rhs(i))
        .sum();
    if infeasibility > FEAS_TOL * scale {
        return fail(LpStatus::Infeasible, tab.iterations);
    }
    // drive remaining artificials out of the basis; rows with no pivot are redundant
    let mut i = 0;
    while i < tab.t.len() {
        if tab.basis[i] >= art_start {
            match (0..art_start).find(|&j| tab.t[i][j].abs() > PIVOT_TOL && !tab.basis.contains(&j))
            {
                Some(j) => tab.pivot(i, j),
                None => {
                    tab.t.remove(i);
                    tab.basis.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }

    let sign = match p.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut cost = vec![0.0; cols];
    for j in 0..n {
        cost[j] = sign * p.objective[j];
    }
    let allowed: Vec<bool> = (0..cols).map(|j| j < art_start).collect();
    match tab.run(&cost, &allowed) {
        Outcome::Unbounded => return fail(LpStatus::Unbounded, tab.iterations),
        Outcome::Limit => return fail(LpStatus::IterationLimit, tab.iterations),
        Outcome::Optimal => {}
    }
    let mut x = p.lower.clone();
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < n {
            x[b] += tab.rhs(i).max(0.0);
        }
    }
    for j in 0..n {
        x[j] = x[j].clamp(p.lower[j], p.upper[j]);
    }
    LpSolution {
        status: LpStatus::Optimal,
        objective: p.objective_value(&x),
        x,
        iterations: tab.iterations,
    }
}

/// Statistics of the classes entering one decoy program, in class order.
#[derive(Debug, Clone)]
pub struct ClassStats<'a> {
    pub class: IntensityClass,
    pub stats: &'a IntervalStats,
}

fn var_name(prefix: &str, class: IntensityClass, n: usize) -> String {
    format!("{prefix}{n}_{}", class.name())
}

fn build_decoy_lp(
    name: &str,
    prefix: &str,
    sense: Sense,
    classes: &[ClassStats<'_>],
    distances: &TraceDistanceTable,
    n_cut: usize,
    gain: impl Fn(&IntervalStats) -> f64,
    tied: &[usize],
) -> Result<LpProblem> {
    if classes.is_empty() {
        return Err(Error::MissingStats(format!("{name}: no intensity classes")));
    }
    if !classes.iter().any(|c| c.class == IntensityClass::S) {
        return Err(Error::MissingStats(format!("{name}: signal class")));
    }
    if distances.n_cut() < n_cut {
        return Err(Error::MissingStats(format!(
            "{name}: trace distances up to n = {n_cut}"
        )));
    }
    for c in classes {
        if c.stats.n_cut() < n_cut {
            return Err(Error::MissingStats(format!(
                "{name}: Poisson moments of class {} up to n = {n_cut}",
                c.class.name()
            )));
        }
    }
    let width = n_cut + 1;
    let mut p = LpProblem::new(name, sense);
    for c in classes {
        for n in 0..width {
            let cost = if c.class == IntensityClass::S && n == 1 {
                1.0
            } else {
                0.0
            };
            p.add_var(var_name(prefix, c.class, n), 0.0, 1.0, cost);
        }
    }
    let var = |k: usize, n: usize| k * width + n;
    for (k, c) in classes.iter().enumerate() {
        let coeffs: Vec<(usize, f64)> = (0..width)
            .map(|n| (var(k, n), c.stats.poisson[n]))
            .collect();
        let g = gain(c.stats);
        let tail = 1.0 - c.stats.poisson[..width].iter().sum::<f64>();
        p.add_row(
            format!("gain_lo_{}", c.class.name()),
            coeffs.clone(),
            RowKind::Le,
            g,
        );
        p.add_row(
            format!("gain_hi_{}", c.class.name()),
            coeffs,
            RowKind::Ge,
            g - tail,
        );
    }
    let coupled_from = tied.iter().max().map_or(0, |m| m + 1);
    for a in 0..classes.len() {
        for b in a + 1..classes.len() {
            let (ca, cb) = (classes[a].class, classes[b].class);
            for n in coupled_from..width {
                let d = distances.values[n][class_index(ca)][class_index(cb)];
                let coeffs = vec![(var(a, n), 1.0), (var(b, n), -1.0)];
                p.add_row(
                    format!("dist_{n}_{}_{}", ca.name(), cb.name()),
                    coeffs.clone(),
                    RowKind::Le,
                    d,
                );
                p.add_row(
                    format!("dist_{n}_{}_{}", cb.name(), ca.name()),
                    coeffs,
                    RowKind::Ge,
                    -d,
                );
            }
        }
    }
    let s = classes
        .iter()
        .position(|c| c.class == IntensityClass::S)
        .unwrap();
    for (k, c) in classes.iter().enumerate() {
        if k == s {
            continue;
        }
        for &n in tied {
            p.add_row(
                format!("tie_{n}_{}", c.class.name()),
                vec![(var(k, n), 1.0), (var(s, n), -1.0)],
                RowKind::Eq,
                0.0,
            );
        }
    }
    Ok(p)
}

/// `min <Y_1>` of the signal class; `<Y_0>` and `<Y_1>` are shared by all classes.
pub fn build_yield_lp(
    classes: &[ClassStats<'_>],
    distances: &TraceDistanceTable,
    n_cut: usize,
) -> Result<LpProblem> {
    build_decoy_lp(
        "yield",
        "y",
        Sense::Minimize,
        classes,
        distances,
        n_cut,
        |s| s.q_gain,
        &[0, 1],
    )
}

/// `max <e_1 Y_1>` of the signal class of one state; `<e_0 Y_0>` is shared.
pub fn build_error_lp(
    classes: &[ClassStats<'_>],
    distances: &TraceDistanceTable,
    n_cut: usize,
) -> Result<LpProblem> {
    build_decoy_lp(
        "error_yield",
        "ey",
        Sense::Maximize,
        classes,
        distances,
        n_cut,
        |s| s.eq_product,
        &[0],
    )
}

/// Variable vector of a program built over `classes` filled from `field`.
pub fn assignment_from_stats(
    classes: &[ClassStats<'_>],
    n_cut: usize,
    field: impl Fn(&IntervalStats) -> &[f64],
) -> Vec<f64> {
    classes
        .iter()
        .flat_map(|c| field(c.stats)[..=n_cut].to_vec())
        .collect()
}

/// Single-photon guarantees of one basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SinglePhotonBounds {
    pub y1_min: f64,
    pub e1y1_max: f64,
    /// `e1y1_max / y1_min` clamped to `[0, 0.5]`; 0.5 without a yield guarantee.
    pub e1_max: f64,
    pub guaranteed: bool,
}

impl SinglePhotonBounds {
    pub fn from_lp_values(y1_min: f64, e1y1_max: f64) -> Self {
        let guaranteed = y1_min > 0.0;
        let e1_max = if guaranteed {
            (e1y1_max / y1_min).clamp(0.0, 0.5)
        } else {
            0.5
        };
        SinglePhotonBounds {
            y1_min: y1_min.max(0.0),
            e1y1_max,
            e1_max,
            guaranteed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_box() {
        let mut p = LpProblem::new("box", Sense::Minimize);
        p.add_var("x", 0.0, 1.0, 1.0);
        let s = solve_lp(&p);
        assert_eq!(s.status, LpStatus::Optimal);
        assert_eq!(s.objective, 0.0);
    }

    #[test]
    fn sandwich_corner() {
        let mut p = LpProblem::new("corner", Sense::Minimize);
        let y0 = p.add_var("y0", 0.0, 1.0, 0.0);
        let y1 = p.add_var("y1", 0.0, 1.0, 1.0);
        p.add_row("lo", vec![(y0, 0.3), (y1, 0.7)], RowKind::Ge, 0.5);
        p.add_row("hi", vec![(y0, 0.3), (y1, 0.7)], RowKind::Le, 0.6);
        let s = solve_lp(&p);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 0.2 / 0.7).abs() < 1e-12);
        assert!(p.max_violation(&s.x) < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut p = LpProblem::new("bad", Sense::Minimize);
        let x = p.add_var("x", 0.0, 1.0, 1.0);
        p.add_row("r", vec![(x, 1.0)], RowKind::Ge, 2.0);
        assert_eq!(solve_lp(&p).status, LpStatus::Infeasible);
        assert!(solve_lp(&p).require_optimal("bad").is_err());
        let mut q = LpProblem::new("free", Sense::Maximize);
        q.add_var("x", 0.0, f64::INFINITY, 1.0);
        assert_eq!(solve_lp(&q).status, LpStatus::Unbounded);
    }

    #[test]
    fn equality_and_negative_rhs() {
        let mut p = LpProblem::new("eq", Sense::Maximize);
        let a = p.add_var("a", 0.0, 5.0, 1.0);
        let b = p.add_var("b", 1.0, 5.0, 2.0);
        p.add_row("sum", vec![(a, 1.0), (b, 1.0)], RowKind::Eq, 4.0);
        p.add_row("diff", vec![(a, -1.0), (b, 1.0)], RowKind::Le, -1.0);
        let s = solve_lp(&p);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[a] - 2.5).abs() < 1e-12 && (s.x[b] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn redundant_equalities() {
        let mut p = LpProblem::new("dup", Sense::Minimize);
        let a = p.add_var("a", 0.0, 1.0, 1.0);
        let b = p.add_var("b", 0.0, 1.0, 0.0);
        p.add_row("e1", vec![(a, 1.0), (b, -1.0)], RowKind::Eq, 0.0);
        p.add_row("e2", vec![(a, 2.0), (b, -2.0)], RowKind::Eq, 0.0);
        p.add_row("g", vec![(b, 1.0)], RowKind::Ge, 0.25);
        let s = solve_lp(&p);
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 0.25).abs() < 1e-12);
    }

    #[test]
    fn deterministic_solutions() {
        let mut p = LpProblem::new("det", Sense::Maximize);
        let v: Vec<usize> = (0..6)
            .map(|j| p.add_var(format!("v{j}"), 0.0, 1.0, 1.0 + j as f64 * 0.1))
            .collect();
        p.add_row(
            "cap",
            v.iter().map(|&j| (j, 1.0)).collect(),
            RowKind::Le,
            2.5,
        );
        let a = solve_lp(&p);
        let b = solve_lp(&p);
        assert_eq!(a, b);
        assert!((a.objective - (1.5 + 1.4 + 0.5 * 1.3)).abs() < 1e-12);
    }

    #[test]
    fn dump_lists_every_row() {
        let mut p = LpProblem::new("d", Sense::Minimize);
        let x = p.add_var("x", 0.0, 1.0, 1.0);
        p.add_row("r0", vec![(x, 1.0)], RowKind::Ge, 0.1);
        let text = p.dump();
        assert!(text.starts_with("lp d\nsense min\n"));
        assert!(text.contains("row 0 r0 >= "));
    }
}
