//! Dense two-phase primal simplex.
//!
//! Problems are stated as: minimize `c·v` subject to `a·v <= b` rows, `a·v = b`
//! rows, and per-variable bounds `lo <= v_j <= hi` (either side may be
//! infinite). The solver converts to standard form (shifting, mirroring or
//! splitting each variable so it is non-negative, turning finite upper bounds
//! into rows), runs phase one on artificial variables to find a basic
//! feasible point, then phase two on the real objective. Bland's rule picks
//! entering and leaving variables, which rules out cycling.

use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    objective: Vec<f64>,
    inequalities: Vec<Constraint>,
    equalities: Vec<Constraint>,
    bounds: Vec<(f64, f64)>,
}

impl LinearProgram {
    /// `vars` free variables with a zero objective.
    pub fn new(vars: usize) -> Self {
        Self {
            objective: vec![0.0; vars],
            inequalities: Vec::new(),
            equalities: Vec::new(),
            bounds: vec![(f64::NEG_INFINITY, f64::INFINITY); vars],
        }
    }

    pub fn var_count(&self) -> usize {
        self.objective.len()
    }

    pub fn set_objective(&mut self, objective: Vec<f64>) -> &mut Self {
        self.objective = objective;
        self
    }

    pub fn set_bounds(&mut self, var: usize, lo: f64, hi: f64) -> &mut Self {
        self.bounds[var] = (lo, hi);
        self
    }

    /// `coeffs · v <= rhs`
    pub fn add_le(&mut self, coeffs: Vec<f64>, rhs: f64) -> &mut Self {
        self.inequalities.push(Constraint { coeffs, rhs });
        self
    }

    /// `coeffs · v >= rhs`, stored as its negation.
    pub fn add_ge(&mut self, coeffs: Vec<f64>, rhs: f64) -> &mut Self {
        self.add_le(coeffs.into_iter().map(|a| -a).collect(), -rhs)
    }

    pub fn add_eq(&mut self, coeffs: Vec<f64>, rhs: f64) -> &mut Self {
        self.equalities.push(Constraint { coeffs, rhs });
        self
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn inequalities(&self) -> &[Constraint] {
        &self.inequalities
    }

    pub fn equalities(&self) -> &[Constraint] {
        &self.equalities
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.var_count();
        if self.bounds.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} bounds for {n} variables",
                self.bounds.len()
            )));
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("objective".into()));
        }
        for (kind, rows) in [("inequality", &self.inequalities), ("equality", &self.equalities)] {
            for (i, row) in rows.iter().enumerate() {
                if row.coeffs.len() != n {
                    return Err(Error::DimensionMismatch(format!(
                        "{kind} row {i} has {} coefficients for {n} variables",
                        row.coeffs.len()
                    )));
                }
                if !row.rhs.is_finite() || row.coeffs.iter().any(|a| !a.is_finite()) {
                    return Err(Error::NonFinite(format!("{kind} row {i}")));
                }
            }
        }
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(Error::InvalidParameter(format!(
                    "variable {j} has bounds [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, v: &[f64]) -> f64 {
        dot(&self.objective, v)
    }

    /// Largest violation of any row or bound at `v`; 0 when feasible.
    pub fn max_violation(&self, v: &[f64]) -> f64 {
        let rows = self
            .inequalities
            .iter()
            .map(|r| dot(&r.coeffs, v) - r.rhs)
            .chain(self.equalities.iter().map(|r| (dot(&r.coeffs, v) - r.rhs).abs()));
        let bounds = self
            .bounds
            .iter()
            .zip(v)
            .flat_map(|(&(lo, hi), &x)| [lo - x, x - hi]);
        rows.chain(bounds).fold(0.0, f64::max)
    }

    /// Plain-text dump, one item per line:
    ///
    /// ```text
    /// vars <n>
    /// min <c_0> ... <c_{n-1}>
    /// bound <j> <lo> <hi>
    /// le <a_0> ... <a_{n-1}> <rhs>
    /// eq <a_0> ... <a_{n-1}> <rhs>
    /// ```
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(" ");
        let _ = writeln!(out, "vars {}", self.var_count());
        let _ = writeln!(out, "min {}", join(&self.objective));
        for (j, (lo, hi)) in self.bounds.iter().enumerate() {
            let _ = writeln!(out, "bound {j} {lo:e} {hi:e}");
        }
        for r in &self.inequalities {
            let _ = writeln!(out, "le {} {:e}", join(&r.coeffs), r.rhs);
        }
        for r in &self.equalities {
            let _ = writeln!(out, "eq {} {:e}", join(&r.coeffs), r.rhs);
        }
        out
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Optimal point; empty unless `status` is `Optimal`.
    pub x: Vec<f64>,
    /// Objective at `x`; NaN unless `status` is `Optimal`.
    pub objective: f64,
    /// Pivots performed over both phases.
    pub iterations: usize,
}

impl LpSolution {
    fn without_point(status: LpStatus, iterations: usize) -> Self {
        Self {
            status,
            x: Vec::new(),
            objective: f64::NAN,
            iterations,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Phase-one objective above this means infeasible.
    pub feasibility_tol: f64,
    /// Smallest magnitude accepted as a pivot element or a negative reduced cost.
    pub pivot_tol: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            feasibility_tol: 1e-7,
            pivot_tol: 1e-9,
            max_iterations: 50_000,
        }
    }
}

pub fn solve(lp: &LinearProgram) -> Result<LpSolution> {
    solve_with(lp, &SolverOptions::default())
}

pub fn solve_with(lp: &LinearProgram, opts: &SolverOptions) -> Result<LpSolution> {
    lp.validate()?;
    let std = StandardForm::build(lp);
    let mut tab = std.tableau;
    let mut iterations = 0;

    if std.art_start < tab.cols {
        let mut cost = vec![0.0; tab.cols + 1];
        cost[std.art_start..tab.cols].fill(1.0);
        tab.price_out(&mut cost);
        let allowed = |_j: usize| true;
        tab.run(&mut cost, &allowed, opts, &mut iterations)?;
        // cost[rhs] holds -objective
        if -cost[tab.cols] > opts.feasibility_tol {
            return Ok(LpSolution::without_point(LpStatus::Infeasible, iterations));
        }
        tab.drive_out_artificials(std.art_start, opts.pivot_tol);
    }

    let mut cost = vec![0.0; tab.cols + 1];
    cost[..std.structural_cost.len()].copy_from_slice(&std.structural_cost);
    tab.price_out(&mut cost);
    let allowed = |j: usize| j < std.art_start;
    if tab.run(&mut cost, &allowed, opts, &mut iterations)? == PhaseEnd::Unbounded {
        return Ok(LpSolution::without_point(LpStatus::Unbounded, iterations));
    }

    let mut y = vec![0.0; std.structural_cost.len()];
    for (r, &b) in tab.basis.iter().enumerate() {
        if b < y.len() {
            y[b] = tab.rhs(r).max(0.0);
        }
    }
    let x: Vec<f64> = std
        .mapping
        .iter()
        .map(|m| match *m {
            VarMap::Shift { col, lo } => lo + y[col],
            VarMap::Mirror { col, hi } => hi - y[col],
            VarMap::Split { pos, neg } => y[pos] - y[neg],
        })
        .collect();
    let objective = lp.objective_value(&x);
    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        objective,
        iterations,
    })
}

/// How an original variable is expressed through non-negative columns.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// `v = lo + y`
    Shift { col: usize, lo: f64 },
    /// `v = hi - y`
    Mirror { col: usize, hi: f64 },
    /// `v = y⁺ - y⁻`
    Split { pos: usize, neg: usize },
}

struct StandardForm {
    tableau: Tableau,
    mapping: Vec<VarMap>,
    structural_cost: Vec<f64>,
    /// First artificial column; equals the column count when there are none.
    art_start: usize,
}

impl StandardForm {
    fn build(lp: &LinearProgram) -> Self {
        let mut mapping = Vec::with_capacity(lp.var_count());
        let mut ny = 0;
        for &(lo, hi) in &lp.bounds {
            let m = if lo.is_finite() {
                VarMap::Shift { col: ny, lo }
            } else if hi.is_finite() {
                VarMap::Mirror { col: ny, hi }
            } else {
                ny += 1;
                VarMap::Split { pos: ny - 1, neg: ny }
            };
            ny += 1;
            mapping.push(m);
        }

        let mut structural_cost = vec![0.0; ny];
        for (m, &c) in mapping.iter().zip(&lp.objective) {
            match *m {
                VarMap::Shift { col, .. } => structural_cost[col] += c,
                VarMap::Mirror { col, .. } => structural_cost[col] -= c,
                VarMap::Split { pos, neg } => {
                    structural_cost[pos] += c;
                    structural_cost[neg] -= c;
                }
            }
        }

        // (coefficients over y, rhs, has slack)
        let mut rows: Vec<(Vec<f64>, f64, bool)> = Vec::new();
        let translate = |coeffs: &[f64], rhs: f64| {
            let mut out = vec![0.0; ny];
            let mut rhs = rhs;
            for (m, &a) in mapping.iter().zip(coeffs) {
                if a == 0.0 {
                    continue;
                }
                match *m {
                    VarMap::Shift { col, lo } => {
                        out[col] += a;
                        rhs -= a * lo;
                    }
                    VarMap::Mirror { col, hi } => {
                        out[col] -= a;
                        rhs -= a * hi;
                    }
                    VarMap::Split { pos, neg } => {
                        out[pos] += a;
                        out[neg] -= a;
                    }
                }
            }
            (out, rhs)
        };
        for r in &lp.inequalities {
            let (c, b) = translate(&r.coeffs, r.rhs);
            rows.push((c, b, true));
        }
        for r in &lp.equalities {
            let (c, b) = translate(&r.coeffs, r.rhs);
            rows.push((c, b, false));
        }
        for (m, &(lo, hi)) in mapping.iter().zip(&lp.bounds) {
            if let VarMap::Shift { col, .. } = *m {
                if hi.is_finite() {
                    let mut c = vec![0.0; ny];
                    c[col] = 1.0;
                    rows.push((c, hi - lo, true));
                }
            }
        }

        let slack_count = rows.iter().filter(|r| r.2).count();
        let needs_art: Vec<bool> = rows.iter().map(|(_, b, slack)| !*slack || *b < 0.0).collect();
        let art_count = needs_art.iter().filter(|&&a| a).count();
        let art_start = ny + slack_count;
        let cols = art_start + art_count;
        let width = cols + 1;

        let mut data = vec![0.0; rows.len() * width];
        let mut basis = Vec::with_capacity(rows.len());
        let (mut next_slack, mut next_art) = (ny, art_start);
        for (r, (coeffs, rhs, has_slack)) in rows.into_iter().enumerate() {
            let row = &mut data[r * width..(r + 1) * width];
            let sign = if rhs < 0.0 { -1.0 } else { 1.0 };
            for (dst, a) in row.iter_mut().zip(&coeffs) {
                *dst = sign * a;
            }
            row[cols] = sign * rhs;
            if has_slack {
                row[next_slack] = sign;
                if sign > 0.0 {
                    basis.push(next_slack);
                }
                next_slack += 1;
            }
            if needs_art[r] {
                row[next_art] = 1.0;
                basis.push(next_art);
                next_art += 1;
            }
        }

        Self {
            tableau: Tableau {
                rows: basis.len(),
                cols,
                data,
                basis,
            },
            mapping,
            structural_cost,
            art_start,
        }
    }
}

#[derive(Debug, PartialEq, Eq)]
enum PhaseEnd {
    Optimal,
    Unbounded,
}

/// Dense tableau, row-major, each row `cols` coefficients followed by the rhs.
struct Tableau {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn width(&self) -> usize {
        self.cols + 1
    }

    fn row(&self, r: usize) -> &[f64] {
        let w = self.width();
        &self.data[r * w..(r + 1) * w]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.data[r * self.width() + self.cols]
    }

    /// Turns raw costs (with a zero rhs slot) into reduced costs for the
    /// current basis.
    fn price_out(&self, cost: &mut [f64]) {
        for r in 0..self.rows {
            let cb = cost[self.basis[r]];
            if cb != 0.0 {
                for (c, a) in cost.iter_mut().zip(self.row(r)) {
                    *c -= cb * a;
                }
            }
        }
    }

    fn pivot(&mut self, pr: usize, pc: usize, cost: &mut [f64]) {
        let w = self.width();
        let inv = 1.0 / self.data[pr * w + pc];
        for v in &mut self.data[pr * w..(pr + 1) * w] {
            *v *= inv;
        }
        self.data[pr * w + pc] = 1.0;
        let (before, rest) = self.data.split_at_mut(pr * w);
        let (pivot_row, after) = rest.split_at_mut(w);
        for row in before.chunks_exact_mut(w).chain(after.chunks_exact_mut(w)) {
            let f = row[pc];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(pivot_row.iter()) {
                    *v -= f * p;
                }
                row[pc] = 0.0;
            }
        }
        let f = cost[pc];
        if f != 0.0 {
            for (v, p) in cost.iter_mut().zip(pivot_row.iter()) {
                *v -= f * p;
            }
            cost[pc] = 0.0;
        }
        self.basis[pr] = pc;
    }

    /// Bland's rule: lowest-index improving column enters; among rows tied on
    /// the ratio test, the one whose basic variable has the lowest index leaves.
    fn run(
        &mut self,
        cost: &mut [f64],
        allowed: &dyn Fn(usize) -> bool,
        opts: &SolverOptions,
        iterations: &mut usize,
    ) -> Result<PhaseEnd> {
        let w = self.width();
        loop {
            let Some(enter) = (0..self.cols).find(|&j| allowed(j) && cost[j] < -opts.pivot_tol) else {
                return Ok(PhaseEnd::Optimal);
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.data[r * w + enter];
                if a <= opts.pivot_tol {
                    continue;
                }
                let ratio = self.data[r * w + self.cols].max(0.0) / a;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((br, best)) => {
                        let tie = (ratio - best).abs() <= 1e-12 * best.abs().max(1.0);
                        if (!tie && ratio < best) || (tie && self.basis[r] < self.basis[br]) {
                            Some((r, ratio))
                        } else {
                            Some((br, best))
                        }
                    }
                };
            }
            let Some((pr, _)) = leave else {
                return Ok(PhaseEnd::Unbounded);
            };
            if *iterations >= opts.max_iterations {
                return Err(Error::IterationLimit(opts.max_iterations));
            }
            *iterations += 1;
            self.pivot(pr, enter, cost);
        }
    }

    /// After a feasible phase one, pivots every artificial out of the basis,
    /// dropping rows that turn out to be redundant.
    fn drive_out_artificials(&mut self, art_start: usize, pivot_tol: f64) {
        let mut r = 0;
        let mut scratch = vec![0.0; self.width()];
        while r < self.rows {
            if self.basis[r] < art_start {
                r += 1;
                continue;
            }
            let row = self.row(r);
            match (0..art_start).find(|&j| row[j].abs() > pivot_tol) {
                Some(j) => {
                    self.pivot(r, j, &mut scratch);
                    r += 1;
                }
                None => {
                    let w = self.width();
                    self.data.drain(r * w..(r + 1) * w);
                    self.basis.remove(r);
                    self.rows -= 1;
                }
            }
        }
    }
}
