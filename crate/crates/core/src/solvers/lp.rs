//! Dense two-phase tableau simplex.
//!
//! The tableau carries one artificial column per row for the whole solve;
//! artificials never re-enter the basis after phase one, but their reduced
//! costs give `c_B^T B^{-1}` and therefore the row duals.

use serde::{Deserialize, Serialize};

use crate::error::{CmwError, Result};

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-11;
const FEASIBILITY_TOL: f64 = 1e-9;
const DEGENERATE_RUN: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum VarBound {
    NonNegative,
    Free,
    Boxed { lower: f64, upper: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub sense: Sense,
    pub rhs: f64,
}

/// `minimize c^T x` subject to linear rows and per-variable bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    objective: Vec<f64>,
    constraints: Vec<Constraint>,
    bounds: Vec<VarBound>,
}

impl LinearProgram {
    /// All variables start nonnegative.
    pub fn minimize(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            objective,
            constraints: Vec::new(),
            bounds: vec![VarBound::NonNegative; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn bounds(&self) -> &[VarBound] {
        &self.bounds
    }

    pub fn set_bound(&mut self, var: usize, bound: VarBound) -> Result<()> {
        if var >= self.num_vars() {
            return Err(CmwError::InvalidArgument(format!(
                "variable {var} out of range"
            )));
        }
        if let VarBound::Boxed { lower, upper } = bound {
            if !(lower.is_finite() && upper.is_finite() && lower <= upper) {
                return Err(CmwError::InvalidArgument(format!(
                    "bad box [{lower}, {upper}] on variable {var}"
                )));
            }
        }
        self.bounds[var] = bound;
        Ok(())
    }

    pub fn add_constraint(&mut self, coeffs: Vec<f64>, sense: Sense, rhs: f64) -> Result<()> {
        if coeffs.len() != self.num_vars() {
            return Err(CmwError::InvalidArgument(format!(
                "constraint has {} coefficients, expected {}",
                coeffs.len(),
                self.num_vars()
            )));
        }
        if !rhs.is_finite() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(CmwError::InvalidArgument("non-finite constraint data".into()));
        }
        self.constraints.push(Constraint { coeffs, sense, rhs });
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub primal: Vec<f64>,
    pub objective: f64,
    /// `d(objective)/d(rhs_i)` for each user constraint: `>= 0` on `Ge`
    /// rows, `<= 0` on `Le` rows, free on `Eq` rows.
    pub duals: Vec<f64>,
    pub iterations: usize,
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// row-major, `cols + 1` entries per row, rhs last
    a: Vec<f64>,
    phase1: Vec<f64>,
    phase2: Vec<f64>,
    basis: Vec<usize>,
    first_artificial: usize,
    iterations: usize,
    min_pivot: f64,
    /// largest objective coefficient magnitude, at least one
    cost_scale: f64,
}

impl Tableau {
    fn width(&self) -> usize {
        self.cols + 1
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        self.a[r * self.width() + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width();
        let piv = self.a[pr * w + pc];
        self.min_pivot = self.min_pivot.min(piv.abs());
        let inv = 1.0 / piv;
        for v in &mut self.a[pr * w..(pr + 1) * w] {
            *v *= inv;
        }
        let pivot_row: Vec<f64> = self.a[pr * w..(pr + 1) * w].to_vec();
        for r in 0..self.rows {
            if r == pr {
                continue;
            }
            let f = self.a[r * w + pc];
            if f != 0.0 {
                let row = &mut self.a[r * w..(r + 1) * w];
                for (x, p) in row.iter_mut().zip(&pivot_row) {
                    *x -= f * p;
                }
                row[pc] = 0.0;
            }
        }
        for cost in [&mut self.phase1, &mut self.phase2] {
            let f = cost[pc];
            if f != 0.0 {
                for (x, p) in cost.iter_mut().zip(&pivot_row) {
                    *x -= f * p;
                }
                cost[pc] = 0.0;
            }
        }
        self.basis[pr] = pc;
        self.iterations += 1;
    }

    /// Dantzig pricing with ratio ties broken toward the larger pivot. A run
    /// of `DEGENERATE_RUN` pivots without progress switches to Bland's rule
    /// until the objective moves again, which rules out cycling.
    fn run(&mut self, phase_one: bool, max_iter: usize) -> Result<()> {
        let mut stalled = 0usize;
        loop {
            if self.iterations >= max_iter {
                return Err(CmwError::LpIterationLimit(max_iter));
            }
            let bland = stalled >= DEGENERATE_RUN;
            let (cost, tol) = if phase_one {
                (&self.phase1, COST_TOL)
            } else {
                (&self.phase2, COST_TOL * self.cost_scale)
            };
            let candidates = (0..self.first_artificial).filter(|&j| cost[j] < -tol);
            let enter = if bland {
                candidates.min()
            } else {
                candidates.min_by(|&a, &b| cost[a].total_cmp(&cost[b]))
            };
            let Some(enter) = enter else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, enter);
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs(r).max(0.0) / a;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((lr, lratio)) => {
                        let better = if ratio < lratio - 1e-14 {
                            true
                        } else if ratio <= lratio + 1e-14 {
                            if bland {
                                self.basis[r] < self.basis[lr]
                            } else {
                                a > self.at(lr, enter)
                            }
                        } else {
                            false
                        };
                        if better { Some((r, ratio)) } else { Some((lr, lratio)) }
                    }
                };
            }
            match leave {
                Some((r, ratio)) => {
                    if ratio > 1e-14 {
                        stalled = 0;
                    } else {
                        stalled += 1;
                    }
                    self.pivot(r, enter)
                }
                None => return Err(CmwError::LpUnbounded { column: enter }),
            }
        }
    }
}

enum Column {
    Plain(usize),
    Split(usize, usize),
}

/// Solves the program with the dense two-phase simplex.
pub fn lp_solve(lp: &LinearProgram) -> Result<LpSolution> {
    let n = lp.num_vars();

    // standard-form variable layout
    let mut columns = Vec::with_capacity(n);
    let mut shift = vec![0.0; n];
    let mut ncols = 0;
    let mut bound_rows: Vec<(usize, f64)> = Vec::new();
    for (j, b) in lp.bounds.iter().enumerate() {
        match *b {
            VarBound::NonNegative => {
                columns.push(Column::Plain(ncols));
                ncols += 1;
            }
            VarBound::Free => {
                columns.push(Column::Split(ncols, ncols + 1));
                ncols += 2;
            }
            VarBound::Boxed { lower, upper } => {
                shift[j] = lower;
                columns.push(Column::Plain(ncols));
                bound_rows.push((ncols, upper - lower));
                ncols += 1;
            }
        }
    }
    let structural = ncols;

    let user_rows = lp.constraints.len();
    let rows = user_rows + bound_rows.len();
    let slack_count = lp
        .constraints
        .iter()
        .filter(|c| c.sense != Sense::Eq)
        .count()
        + bound_rows.len();
    let first_artificial = structural + slack_count;
    let cols = first_artificial + rows;
    let width = cols + 1;

    let mut a = vec![0.0; rows * width];
    let mut flip = vec![1.0; rows];
    let mut slack = structural;
    for (r, con) in lp.constraints.iter().enumerate() {
        let row = &mut a[r * width..(r + 1) * width];
        let mut rhs = con.rhs;
        for (j, &coef) in con.coeffs.iter().enumerate() {
            if coef == 0.0 {
                continue;
            }
            rhs -= coef * shift[j];
            match columns[j] {
                Column::Plain(c) => row[c] += coef,
                Column::Split(p, q) => {
                    row[p] += coef;
                    row[q] -= coef;
                }
            }
        }
        match con.sense {
            Sense::Le => {
                row[slack] = 1.0;
                slack += 1;
            }
            Sense::Ge => {
                row[slack] = -1.0;
                slack += 1;
            }
            Sense::Eq => {}
        }
        row[cols] = rhs;
    }
    for (k, &(c, cap)) in bound_rows.iter().enumerate() {
        let r = user_rows + k;
        let row = &mut a[r * width..(r + 1) * width];
        row[c] = 1.0;
        row[slack] = 1.0;
        slack += 1;
        row[cols] = cap;
    }
    for r in 0..rows {
        let row = &mut a[r * width..(r + 1) * width];
        if row[cols] < 0.0 {
            flip[r] = -1.0;
            for v in row[..first_artificial].iter_mut() {
                *v = -*v;
            }
            row[cols] = -row[cols];
        }
        row[first_artificial + r] = 1.0;
    }

    let mut phase2 = vec![0.0; width];
    for (j, &c) in lp.objective.iter().enumerate() {
        match columns[j] {
            Column::Plain(k) => phase2[k] += c,
            Column::Split(p, q) => {
                phase2[p] += c;
                phase2[q] -= c;
            }
        }
    }
    let mut phase1 = vec![0.0; width];
    for r in 0..rows {
        for c in 0..first_artificial {
            phase1[c] -= a[r * width + c];
        }
        phase1[cols] -= a[r * width + cols];
    }

    let mut t = Tableau {
        rows,
        cols,
        a,
        phase1,
        phase2,
        basis: (first_artificial..cols).collect(),
        first_artificial,
        iterations: 0,
        min_pivot: f64::INFINITY,
        cost_scale: lp.objective.iter().fold(1.0, |a, c| a.max(c.abs())),
    };
    let max_iter = 50 * (rows + cols) + 1000;

    t.run(true, max_iter)?;
    let scale = 1.0 + (0..rows).map(|r| t.rhs(r).abs()).fold(0.0, f64::max);
    let residual = -t.phase1[cols];
    if residual > FEASIBILITY_TOL * scale {
        return Err(CmwError::LpInfeasible { residual });
    }
    // drive zero-level artificials out where possible; rows left behind are redundant
    for r in 0..rows {
        if t.basis[r] >= first_artificial {
            if let Some(c) = (0..first_artificial).find(|&c| t.at(r, c).abs() > PIVOT_TOL) {
                t.pivot(r, c);
            }
        }
    }
    t.run(false, max_iter)?;

    let mut values = vec![0.0; cols];
    for r in 0..rows {
        values[t.basis[r]] = t.rhs(r);
    }
    let primal: Vec<f64> = (0..n)
        .map(|j| {
            shift[j]
                + match columns[j] {
                    Column::Plain(c) => values[c],
                    Column::Split(p, q) => values[p] - values[q],
                }
        })
        .collect();
    let duals: Vec<f64> = (0..user_rows)
        .map(|r| -t.phase2[first_artificial + r] * flip[r])
        .collect();
    let objective = lp.objective.iter().zip(&primal).map(|(c, x)| c * x).sum();

    // residual check on the recovered primal
    let mut worst = 0.0f64;
    for con in &lp.constraints {
        let lhs: f64 = con.coeffs.iter().zip(&primal).map(|(a, x)| a * x).sum();
        let viol = match con.sense {
            Sense::Le => lhs - con.rhs,
            Sense::Ge => con.rhs - lhs,
            Sense::Eq => (lhs - con.rhs).abs(),
        };
        worst = worst.max(viol);
    }
    if worst > 1e-6 * scale {
        return Err(CmwError::LpSingular(format!(
            "constraint residual {worst:e} after {} pivots, smallest pivot {:e}",
            t.iterations, t.min_pivot
        )));
    }

    Ok(LpSolution {
        primal,
        objective,
        duals,
        iterations: t.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_lower_bound() {
        let mut lp = LinearProgram::minimize(vec![1.0]);
        lp.add_constraint(vec![1.0], Sense::Ge, 1.0).unwrap();
        let s = lp_solve(&lp).unwrap();
        assert!((s.primal[0] - 1.0).abs() < 1e-12);
        assert!((s.duals[0] - 1.0).abs() < 1e-12);
        assert!((s.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_dimensional_minmax_of_two_lines() {
        // variables (xi, q), both free
        let mut lp = LinearProgram::minimize(vec![1.0, 0.0]);
        lp.set_bound(0, VarBound::Free).unwrap();
        lp.set_bound(1, VarBound::Free).unwrap();
        lp.add_constraint(vec![1.0, 0.5], Sense::Ge, 0.25).unwrap();
        lp.add_constraint(vec![1.0, -0.5], Sense::Ge, 0.25).unwrap();
        let s = lp_solve(&lp).unwrap();
        assert!((s.primal[0] - 0.25).abs() < 1e-12);
        assert!(s.primal[1].abs() < 1e-12);
        assert!((s.duals[0] - 0.5).abs() < 1e-12);
        assert!((s.duals[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::minimize(vec![1.0]);
        lp.add_constraint(vec![1.0], Sense::Le, -1.0).unwrap();
        assert!(matches!(lp_solve(&lp), Err(CmwError::LpInfeasible { .. })));

        let mut lp = LinearProgram::minimize(vec![-1.0, 0.0]);
        lp.add_constraint(vec![1.0, -1.0], Sense::Le, 1.0).unwrap();
        assert!(matches!(lp_solve(&lp), Err(CmwError::LpUnbounded { .. })));
    }

    #[test]
    fn boxed_and_redundant_rows() {
        // max x + y, x in [1, 2], y in [-1, 3], x + y = x + y duplicate equality rows
        let mut lp = LinearProgram::minimize(vec![-1.0, -1.0]);
        lp.set_bound(0, VarBound::Boxed { lower: 1.0, upper: 2.0 }).unwrap();
        lp.set_bound(1, VarBound::Boxed { lower: -1.0, upper: 3.0 }).unwrap();
        lp.add_constraint(vec![1.0, -1.0], Sense::Eq, 0.0).unwrap();
        lp.add_constraint(vec![2.0, -2.0], Sense::Eq, 0.0).unwrap();
        let s = lp_solve(&lp).unwrap();
        assert!((s.primal[0] - 2.0).abs() < 1e-12);
        assert!((s.primal[1] - 2.0).abs() < 1e-12);
        assert!((s.objective + 4.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's example cycles under Dantzig's rule without anti-cycling
        let mut lp = LinearProgram::minimize(vec![-0.75, 150.0, -0.02, 6.0]);
        lp.add_constraint(vec![0.25, -60.0, -0.04, 9.0], Sense::Le, 0.0).unwrap();
        lp.add_constraint(vec![0.5, -90.0, -0.02, 3.0], Sense::Le, 0.0).unwrap();
        lp.add_constraint(vec![0.0, 0.0, 1.0, 0.0], Sense::Le, 1.0).unwrap();
        let s = lp_solve(&lp).unwrap();
        assert!((s.objective + 0.05).abs() < 1e-12);
    }

    /// Vertex enumeration: every `n`-subset of the rows (including `x >= 0`)
    /// solved as equalities, filtered for feasibility.
    fn vertex_oracle(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> f64 {
        let n = c.len();
        let mut rows: Vec<(Vec<f64>, f64)> = a.iter().cloned().zip(b.iter().copied()).collect();
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = -1.0;
            rows.push((e, 0.0));
        }
        let k = rows.len();
        let mut best = f64::INFINITY;
        let mut idx: Vec<usize> = (0..n).collect();
        loop {
            let mat = nalgebra::DMatrix::from_fn(n, n, |r, col| rows[idx[r]].0[col]);
            let rhs = nalgebra::DVector::from_fn(n, |r, _| rows[idx[r]].1);
            if let Some(x) = mat.lu().solve(&rhs) {
                let feasible = rows.iter().all(|(row, bb)| {
                    row.iter().zip(x.iter()).map(|(p, q)| p * q).sum::<f64>() <= bb + 1e-9
                });
                if feasible {
                    best = best.min(c.iter().zip(x.iter()).map(|(p, q)| p * q).sum());
                }
            }
            // next combination
            let mut i = n;
            while i > 0 && idx[i - 1] == k - n + i - 1 {
                i -= 1;
            }
            if i == 0 {
                return best;
            }
            idx[i - 1] += 1;
            for j in i..n {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }

    #[test]
    fn random_lps_match_vertex_enumeration_with_strong_duality() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for inst in 0..40 {
            let n = rng.gen_range(2..=6);
            let k = if inst < 8 { 20 } else { rng.gen_range(n..=12) };
            let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..2.0)).collect();
            let mut a = Vec::new();
            let mut b = Vec::new();
            for r in 0..k {
                let row: Vec<f64> = if r < n {
                    // cap each coordinate to keep the region bounded
                    (0..n).map(|j| if j == r { 1.0 } else { 0.0 }).collect()
                } else {
                    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
                };
                let lhs: f64 = row.iter().zip(&x0).map(|(p, q)| p * q).sum();
                b.push(lhs + rng.gen_range(0.0..1.0));
                a.push(row);
            }
            let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut lp = LinearProgram::minimize(c.clone());
            for (row, bb) in a.iter().zip(&b) {
                lp.add_constraint(row.clone(), Sense::Le, *bb).unwrap();
            }
            let s = lp_solve(&lp).unwrap();
            let oracle = vertex_oracle(&c, &a, &b);
            assert!((s.objective - oracle).abs() < 1e-8, "inst {inst}: {} vs {oracle}", s.objective);
            // dual feasibility: y <= 0 on Le rows, reduced costs c - A^T y >= 0
            let dual_obj: f64 = s.duals.iter().zip(&b).map(|(y, bb)| y * bb).sum();
            for y in &s.duals {
                assert!(*y <= 1e-12);
            }
            for j in 0..n {
                let rc = c[j] - (0..k).map(|r| a[r][j] * s.duals[r]).sum::<f64>();
                assert!(rc >= -1e-9);
            }
            assert!((s.objective - dual_obj).abs() <= 1e-8 * (1.0 + s.objective.abs()));
        }
    }
}
