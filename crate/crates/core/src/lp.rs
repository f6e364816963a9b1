//! Dense two-phase tableau simplex for small linear programs.
//!
//! Variables are nonnegative. Pivoting is Dantzig's rule, switching to
//! Bland's rule after a run of degenerate pivots, so results are
//! deterministic and cycling cannot occur.

use thiserror::Error;

/// Feasibility tolerance on the phase-one objective.
pub const FEAS_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-11;
const DEGENERATE_STREAK: usize = 50;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("infeasible (phase-one residual {0:.3e})")]
    Infeasible(f64),
    #[error("unbounded")]
    Unbounded,
    #[error("iteration limit {0} reached")]
    IterationLimit(usize),
    #[error("malformed program: {0}")]
    Malformed(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug)]
struct Row {
    coeffs: Vec<f64>,
    rel: Relation,
    rhs: f64,
}

/// `optimize c·x` subject to rows `a·x (≤|≥|=) b` and `x ≥ 0`.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    n_vars: usize,
    sense: Sense,
    objective: Vec<f64>,
    rows: Vec<Row>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Shadow prices `∂objective/∂b_i`, one per constraint in insertion order.
    pub duals: Vec<f64>,
}

impl LinearProgram {
    pub fn new(n_vars: usize, sense: Sense) -> Self {
        LinearProgram {
            n_vars,
            sense,
            objective: vec![0.0; n_vars],
            rows: Vec::new(),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn n_constraints(&self) -> usize {
        self.rows.len()
    }

    pub fn set_objective(&mut self, c: Vec<f64>) -> &mut Self {
        assert_eq!(c.len(), self.n_vars, "objective length");
        self.objective = c;
        self
    }

    pub fn set_cost(&mut self, var: usize, c: f64) -> &mut Self {
        self.objective[var] = c;
        self
    }

    pub fn add_constraint(&mut self, coeffs: Vec<f64>, rel: Relation, rhs: f64) -> &mut Self {
        assert_eq!(coeffs.len(), self.n_vars, "constraint length");
        self.rows.push(Row { coeffs, rel, rhs });
        self
    }

    pub fn add_sparse(&mut self, terms: &[(usize, f64)], rel: Relation, rhs: f64) -> &mut Self {
        let mut coeffs = vec![0.0; self.n_vars];
        for &(j, v) in terms {
            coeffs[j] += v;
        }
        self.rows.push(Row { coeffs, rel, rhs });
        self
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        if self
            .objective
            .iter()
            .chain(self.rows.iter().flat_map(|r| r.coeffs.iter()))
            .any(|v| !v.is_finite())
            || self.rows.iter().any(|r| !r.rhs.is_finite())
        {
            return Err(LpError::Malformed("non-finite coefficient".into()));
        }
        Tableau::build(self).run(self)
    }
}

struct Tableau {
    m: usize,
    width: usize,
    /// `m` rows of `width` entries; the last entry of each row is the rhs.
    a: Vec<f64>,
    d: Vec<f64>,
    basis: Vec<usize>,
    n_struct: usize,
    art_start: usize,
    /// Column holding `+e_i` of each (sign-normalized) row.
    id_col: Vec<usize>,
    sign: Vec<f64>,
    bland: bool,
    streak: usize,
    iterations: usize,
    max_iterations: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Tableau {
        let m = lp.rows.len();
        let n = lp.n_vars;
        let mut sign = Vec::with_capacity(m);
        let mut rels = Vec::with_capacity(m);
        for r in &lp.rows {
            if r.rhs < 0.0 {
                sign.push(-1.0);
                rels.push(match r.rel {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                });
            } else {
                sign.push(1.0);
                rels.push(r.rel);
            }
        }
        let n_slack = rels.iter().filter(|r| **r != Relation::Eq).count();
        let n_art = rels.iter().filter(|r| **r != Relation::Le).count();
        let art_start = n + n_slack;
        let cols = art_start + n_art;
        let width = cols + 1;
        let mut a = vec![0.0; m * width];
        let mut basis = vec![0; m];
        let mut id_col = vec![0; m];
        let (mut s, mut art) = (n, art_start);
        for (i, r) in lp.rows.iter().enumerate() {
            let row = &mut a[i * width..(i + 1) * width];
            for j in 0..n {
                row[j] = sign[i] * r.coeffs[j];
            }
            row[cols] = sign[i] * r.rhs;
            match rels[i] {
                Relation::Le => {
                    row[s] = 1.0;
                    basis[i] = s;
                    id_col[i] = s;
                    s += 1;
                }
                Relation::Ge => {
                    row[s] = -1.0;
                    s += 1;
                    row[art] = 1.0;
                    basis[i] = art;
                    id_col[i] = art;
                    art += 1;
                }
                Relation::Eq => {
                    row[art] = 1.0;
                    basis[i] = art;
                    id_col[i] = art;
                    art += 1;
                }
            }
        }
        Tableau {
            m,
            width,
            a,
            d: vec![0.0; width],
            basis,
            n_struct: n,
            art_start,
            id_col,
            sign,
            bland: false,
            streak: 0,
            iterations: 0,
            max_iterations: 50_000 + 200 * (m + cols),
        }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.width + j]
    }

    fn rhs_col(&self) -> usize {
        self.width - 1
    }

    /// Reduced costs for column costs `c` (length `width-1`).
    fn price(&mut self, c: &[f64]) {
        let w = self.width;
        self.d[..w - 1].copy_from_slice(c);
        self.d[w - 1] = 0.0;
        for i in 0..self.m {
            let cb = c[self.basis[i]];
            if cb != 0.0 {
                let row = &self.a[i * w..(i + 1) * w];
                for (dj, aij) in self.d.iter_mut().zip(row) {
                    *dj -= cb * aij;
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, e: usize) {
        let w = self.width;
        let p = self.at(r, e);
        {
            let row = &mut self.a[r * w..(r + 1) * w];
            for v in row.iter_mut() {
                *v /= p;
            }
            row[e] = 1.0;
        }
        let (before, rest) = self.a.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        for other in before.chunks_exact_mut(w).chain(after.chunks_exact_mut(w)) {
            let f = other[e];
            if f != 0.0 {
                for (o, pv) in other.iter_mut().zip(prow.iter()) {
                    *o -= f * pv;
                }
                other[e] = 0.0;
            }
        }
        let f = self.d[e];
        if f != 0.0 {
            for (o, pv) in self.d.iter_mut().zip(prow.iter()) {
                *o -= f * pv;
            }
            self.d[e] = 0.0;
        }
        self.basis[r] = e;
    }

    /// Runs simplex iterations on the current reduced costs. Columns at or
    /// beyond `enter_limit` never enter.
    fn iterate(&mut self, enter_limit: usize) -> Result<(), LpError> {
        let rc = self.rhs_col();
        let scale = self.d[..enter_limit]
            .iter()
            .fold(1.0_f64, |m, v| m.max(v.abs()));
        loop {
            let tol = COST_TOL * scale;
            let entering = if self.bland {
                (0..enter_limit).find(|&j| self.d[j] < -tol)
            } else {
                let mut best = None;
                let mut best_v = -tol;
                for j in 0..enter_limit {
                    if self.d[j] < best_v {
                        best_v = self.d[j];
                        best = Some(j);
                    }
                }
                best
            };
            let Some(e) = entering else { return Ok(()) };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let aie = self.at(i, e);
                if aie > PIVOT_TOL {
                    let ratio = self.at(i, rc).max(0.0) / aie;
                    match leave {
                        None => leave = Some((i, ratio)),
                        Some((li, lr)) => {
                            let better = ratio < lr - 1e-13 * lr.max(1.0)
                                || (ratio <= lr + 1e-13 * lr.max(1.0)
                                    && self.basis[i] < self.basis[li]);
                            if better {
                                leave = Some((i, ratio));
                            }
                        }
                    }
                }
            }
            let Some((r, ratio)) = leave else {
                return Err(LpError::Unbounded);
            };
            if ratio <= 1e-13 {
                self.streak += 1;
                if self.streak >= DEGENERATE_STREAK {
                    self.bland = true;
                }
            } else {
                self.streak = 0;
            }
            self.pivot(r, e);
            self.iterations += 1;
            if self.iterations > self.max_iterations {
                return Err(LpError::IterationLimit(self.max_iterations));
            }
        }
    }

    fn run(mut self, lp: &LinearProgram) -> Result<LpSolution, LpError> {
        let cols = self.width - 1;
        let rc = self.rhs_col();
        let rhs_scale = (0..self.m).fold(1.0_f64, |s, i| s.max(self.at(i, rc).abs()));

        if self.art_start < cols {
            let mut c1 = vec![0.0; cols];
            for c in c1.iter_mut().skip(self.art_start) {
                *c = 1.0;
            }
            self.price(&c1);
            self.iterate(self.art_start)?;
            let residual: f64 = (0..self.m)
                .filter(|&i| self.basis[i] >= self.art_start)
                .map(|i| self.at(i, rc).max(0.0))
                .sum();
            if residual > FEAS_TOL * rhs_scale {
                return Err(LpError::Infeasible(residual));
            }
            // drive remaining artificials out of the basis; rows that cannot be
            // cleared are redundant and stay inert
            for i in 0..self.m {
                if self.basis[i] >= self.art_start {
                    let mut best: Option<(usize, f64)> = None;
                    for j in 0..self.art_start {
                        let v = self.at(i, j).abs();
                        if v > 1e-9 && best.is_none_or(|(_, bv)| v > bv) {
                            best = Some((j, v));
                        }
                    }
                    if let Some((j, _)) = best {
                        self.pivot(i, j);
                    }
                }
            }
            self.bland = false;
            self.streak = 0;
        }

        let flip = if lp.sense == Sense::Maximize {
            -1.0
        } else {
            1.0
        };
        let mut c2 = vec![0.0; cols];
        for (j, c) in lp.objective.iter().enumerate() {
            c2[j] = flip * c;
        }
        self.price(&c2);
        self.iterate(self.art_start)?;

        let mut x = vec![0.0; self.n_struct];
        for i in 0..self.m {
            let b = self.basis[i];
            if b < self.n_struct {
                x[b] = self.at(i, rc).max(0.0);
            }
        }
        let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        let duals = (0..self.m)
            .map(|i| flip * self.sign[i] * (c2[self.id_col[i]] - self.d[self.id_col[i]]))
            .collect();
        Ok(LpSolution {
            x,
            objective,
            duals,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y; x ≤ 4; 2y ≤ 12; 3x + 2y ≤ 18 → (2, 6), value 36
        let mut lp = LinearProgram::new(2, Sense::Maximize);
        lp.set_objective(vec![3.0, 5.0])
            .add_constraint(vec![1.0, 0.0], Relation::Le, 4.0)
            .add_constraint(vec![0.0, 2.0], Relation::Le, 12.0)
            .add_constraint(vec![3.0, 2.0], Relation::Le, 18.0);
        let s = lp.solve().unwrap();
        assert!(close(s.objective, 36.0));
        assert!(close(s.x[0], 2.0) && close(s.x[1], 6.0));
        // known shadow prices (0, 1.5, 1)
        assert!(
            close(s.duals[0], 0.0) && close(s.duals[1], 1.5) && close(s.duals[2], 1.0),
            "{:?}",
            s.duals
        );
    }

    #[test]
    fn minimization_with_ge_and_eq() {
        // min x + 2y + 3z; x + y + z = 1; y + z ≥ 0.5 → y = 0.5, x = 0.5, value 1.5
        let mut lp = LinearProgram::new(3, Sense::Minimize);
        lp.set_objective(vec![1.0, 2.0, 3.0])
            .add_constraint(vec![1.0, 1.0, 1.0], Relation::Eq, 1.0)
            .add_constraint(vec![0.0, 1.0, 1.0], Relation::Ge, 0.5);
        let s = lp.solve().unwrap();
        assert!(close(s.objective, 1.5));
        assert!(
            close(s.duals[0], 1.0) && close(s.duals[1], 1.0),
            "{:?}",
            s.duals
        );
    }

    #[test]
    fn negative_rhs_rows() {
        // -x ≤ -2 means x ≥ 2; min x
        let mut lp = LinearProgram::new(1, Sense::Minimize);
        lp.set_objective(vec![1.0])
            .add_constraint(vec![-1.0], Relation::Le, -2.0);
        let s = lp.solve().unwrap();
        assert!(close(s.x[0], 2.0));
        assert!(close(s.duals[0], -1.0), "{:?}", s.duals);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(1, Sense::Minimize);
        lp.add_constraint(vec![1.0], Relation::Ge, 2.0)
            .add_constraint(vec![1.0], Relation::Le, 1.0);
        assert!(matches!(lp.solve(), Err(LpError::Infeasible(_))));
        let mut lp = LinearProgram::new(2, Sense::Maximize);
        lp.set_objective(vec![1.0, 0.0])
            .add_constraint(vec![1.0, -1.0], Relation::Le, 1.0);
        assert_eq!(lp.solve(), Err(LpError::Unbounded));
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new(2, Sense::Maximize);
        lp.set_objective(vec![1.0, 1.0])
            .add_constraint(vec![1.0, 1.0], Relation::Eq, 1.0)
            .add_constraint(vec![2.0, 2.0], Relation::Eq, 2.0)
            .add_constraint(vec![1.0, 0.0], Relation::Le, 0.3);
        let s = lp.solve().unwrap();
        assert!(close(s.objective, 1.0));
        assert!(close(s.x[0] + s.x[1], 1.0));
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's cycling example; Dantzig without anti-cycling loops forever
        let mut lp = LinearProgram::new(4, Sense::Minimize);
        lp.set_objective(vec![-0.75, 150.0, -0.02, 6.0])
            .add_constraint(vec![0.25, -60.0, -0.04, 9.0], Relation::Le, 0.0)
            .add_constraint(vec![0.5, -90.0, -0.02, 3.0], Relation::Le, 0.0)
            .add_constraint(vec![0.0, 0.0, 1.0, 0.0], Relation::Le, 1.0);
        let s = lp.solve().unwrap();
        assert!(close(s.objective, -0.05), "{}", s.objective);
    }
}
