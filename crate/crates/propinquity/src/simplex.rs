//! Dense two-phase simplex on a full tableau with Bland's rule.
//!
//! Determinism matters more than speed at desk scale, so there is no pricing
//! heuristic, no sparsity, and a fixed pivot tolerance. Free variables are
//! split into positive and negative parts, inequalities get slacks, and
//! phase one drives an artificial basis to zero.

use crate::error::{Error, Result};
use crate::linalg::RVec;

/// Pivot tolerance: entries smaller than this never become pivots.
pub const PIVOT_TOL: f64 = 1e-11;

/// Reduced-cost threshold for entering columns; looser than the pivot
/// tolerance so that accumulated roundoff in the objective row cannot
/// masquerade as an improving direction.
const ENTER_TOL: f64 = 1e-9;

const MAX_PIVOTS: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Free,
    NonNeg,
}

/// maximize `objective · y` subject to `row · y <= rhs` and `row · y = rhs`.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub vars: Vec<VarKind>,
    pub objective: Vec<f64>,
    pub ineqs: Vec<(Vec<f64>, f64)>,
    pub eqs: Vec<(Vec<f64>, f64)>,
}

impl LpProblem {
    pub fn new(vars: Vec<VarKind>, objective: Vec<f64>) -> LpProblem {
        assert_eq!(vars.len(), objective.len());
        LpProblem {
            vars,
            objective,
            ineqs: Vec::new(),
            eqs: Vec::new(),
        }
    }

    pub fn leq(&mut self, row: Vec<f64>, rhs: f64) {
        assert_eq!(row.len(), self.vars.len());
        self.ineqs.push((row, rhs));
    }

    pub fn eq(&mut self, row: Vec<f64>, rhs: f64) {
        assert_eq!(row.len(), self.vars.len());
        self.eqs.push((row, rhs));
    }
}

#[derive(Debug, Clone)]
pub enum LpOutcome {
    Optimal { value: f64, solution: RVec },
    Infeasible,
    Unbounded,
}

struct Tableau {
    // rows[i] has ncols entries: structural columns then rhs
    rows: Vec<Vec<f64>>,
    obj: Vec<f64>, // reduced-cost row, same width, last entry = -objective value
    basis: Vec<usize>,
    ncols: usize, // structural columns (excludes rhs)
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.ncols]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let piv = self.rows[row][col];
        debug_assert!(piv.abs() > PIVOT_TOL);
        let inv = 1.0 / piv;
        for v in self.rows[row].iter_mut() {
            *v *= inv;
        }
        let pivot_row = self.rows[row].clone();
        for (i, r) in self.rows.iter_mut().enumerate() {
            if i != row {
                let f = r[col];
                if f != 0.0 {
                    for (v, p) in r.iter_mut().zip(pivot_row.iter()) {
                        *v -= f * p;
                    }
                    r[col] = 0.0;
                }
            }
        }
        let f = self.obj[col];
        if f != 0.0 {
            for (v, p) in self.obj.iter_mut().zip(pivot_row.iter()) {
                *v -= f * p;
            }
            self.obj[col] = 0.0;
        }
        self.basis[row] = col;
    }

    /// True when row `i` precedes row `li` in the lexicographic ratio order
    /// for entering column `j`: compares the scaled right-hand sides first,
    /// then the scaled rows column by column. The lexicographic rule is the
    /// classic anti-cycling device and keeps the pivot sequence deterministic.
    fn lex_less(&self, i: usize, li: usize, j: usize) -> bool {
        let ai = self.rows[i][j];
        let al = self.rows[li][j];
        let ri = self.rhs(i) / ai;
        let rl = self.rhs(li) / al;
        if (ri - rl).abs() > PIVOT_TOL {
            return ri < rl;
        }
        for k in 0..self.ncols {
            let vi = self.rows[i][k] / ai;
            let vl = self.rows[li][k] / al;
            if (vi - vl).abs() > PIVOT_TOL {
                return vi < vl;
            }
        }
        false
    }

    /// Runs simplex iterations on the current objective row; `allowed` masks
    /// the columns eligible to enter. Pricing is largest reduced cost (fast
    /// and deterministic); the leaving row is chosen by the lexicographic
    /// ratio test, which rules out cycling on degenerate instances.
    fn iterate(&mut self, allowed: &[bool]) -> Result<bool> {
        for _ in 0..MAX_PIVOTS {
            let mut enter = None;
            let mut best = ENTER_TOL;
            for j in 0..self.ncols {
                if allowed[j] && self.obj[j] > best {
                    best = self.obj[j];
                    enter = Some(j);
                }
            }
            let Some(j) = enter else { return Ok(true) };
            let mut leave: Option<usize> = None;
            for i in 0..self.rows.len() {
                if self.rows[i][j] > PIVOT_TOL {
                    match leave {
                        None => leave = Some(i),
                        Some(li) => {
                            if self.lex_less(i, li, j) {
                                leave = Some(i);
                            }
                        }
                    }
                }
            }
            match leave {
                Some(i) => self.pivot(i, j),
                None => return Ok(false), // unbounded along column j
            }
        }
        Err(Error::Solver("simplex pivot budget exhausted".into()))
    }
}

/// Solves the LP. Exact up to the pivot tolerance on desk-scale instances.
pub fn solve(p: &LpProblem) -> Result<LpOutcome> {
    let n = p.vars.len();
    // column layout: one column per NonNeg var, two (plus/minus) per Free var,
    // then one slack per inequality, then one artificial per row.
    let mut col_of_var: Vec<(usize, Option<usize>)> = Vec::with_capacity(n);
    let mut ncols = 0;
    for k in &p.vars {
        match k {
            VarKind::NonNeg => {
                col_of_var.push((ncols, None));
                ncols += 1;
            }
            VarKind::Free => {
                col_of_var.push((ncols, Some(ncols + 1)));
                ncols += 2;
            }
        }
    }
    let slack_base = ncols;
    ncols += p.ineqs.len();
    let m = p.ineqs.len() + p.eqs.len();
    let art_base = ncols;
    let total = ncols + m;

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let expand = |row: &[f64], out: &mut Vec<f64>| {
        for (v, &(cp, cm)) in row.iter().zip(col_of_var.iter()) {
            if *v != 0.0 {
                out[cp] += *v;
                if let Some(cm) = cm {
                    out[cm] -= *v;
                }
            }
        }
    };

    for (idx, (row, rhs)) in p.ineqs.iter().enumerate() {
        let mut r = vec![0.0; total + 1];
        expand(row, &mut r);
        r[slack_base + idx] = 1.0;
        r[total] = *rhs;
        rows.push(r);
    }
    for (row, rhs) in &p.eqs {
        let mut r = vec![0.0; total + 1];
        expand(row, &mut r);
        r[total] = *rhs;
        rows.push(r);
    }
    // normalize signs so every rhs is nonnegative, then install artificials
    for (i, r) in rows.iter_mut().enumerate() {
        if r[total] < 0.0 {
            for v in r.iter_mut() {
                *v = -*v;
            }
        }
        r[art_base + i] = 1.0;
        basis.push(art_base + i);
    }

    // phase 1: maximize -(sum of artificials)
    let mut obj = vec![0.0; total + 1];
    for i in 0..m {
        obj[art_base + i] = -1.0;
    }
    // express the objective in terms of the nonbasic columns
    for r in &rows {
        for (j, v) in r.iter().enumerate() {
            obj[j] += v;
        }
    }
    for i in 0..m {
        obj[art_base + i] = 0.0;
    }

    let mut t = Tableau {
        rows,
        obj,
        basis,
        ncols: total,
    };
    let allowed_all = vec![true; total];
    let converged = t.iterate(&allowed_all)?;
    // objective-row rhs tracks the negated value; phase-1 optimum is zero
    // exactly when the artificials are driven out of the solution
    let phase1_val = -t.obj[total];
    if !converged && phase1_val.abs() > 1e-7 {
        // the phase-1 objective is bounded by zero; an unbounded verdict away
        // from zero can only be a numerical breakdown
        return Err(Error::Inconsistency("phase-1 objective unbounded".into()));
    }
    if phase1_val.abs() > 1e-7 {
        return Ok(LpOutcome::Infeasible);
    }
    // drive remaining artificials out of the basis or drop redundant rows
    let mut drop_rows = Vec::new();
    for i in 0..t.rows.len() {
        if t.basis[i] >= art_base {
            let mut found = None;
            for j in 0..art_base {
                if t.rows[i][j].abs() > PIVOT_TOL {
                    found = Some(j);
                    break;
                }
            }
            match found {
                Some(j) => t.pivot(i, j),
                None => drop_rows.push(i),
            }
        }
    }
    for &i in drop_rows.iter().rev() {
        t.rows.remove(i);
        t.basis.remove(i);
    }

    // phase 2: original objective, artificial columns barred from entering
    let mut allowed = vec![true; total];
    for a in allowed.iter_mut().skip(art_base) {
        *a = false;
    }
    let mut obj = vec![0.0; total + 1];
    for (v, &(cp, cm)) in p.objective.iter().zip(col_of_var.iter()) {
        if *v != 0.0 {
            obj[cp] += *v;
            if let Some(cm) = cm {
                obj[cm] -= *v;
            }
        }
    }
    // reduce against the current basis
    for (i, r) in t.rows.iter().enumerate() {
        let cb = obj[t.basis[i]];
        if cb != 0.0 {
            for (v, p) in obj.iter_mut().zip(r.iter()) {
                *v -= cb * p;
            }
        }
    }
    t.obj = obj;
    if !t.iterate(&allowed)? {
        return Ok(LpOutcome::Unbounded);
    }

    let mut x = vec![0.0; total];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < total {
            x[b] = t.rhs(i);
        }
    }
    let mut y = RVec::zeros(n);
    for (v, &(cp, cm)) in y.iter_mut().zip(col_of_var.iter()) {
        *v = match cm {
            Some(cm) => x[cp] - x[cm],
            None => x[cp],
        };
    }
    let value = p.objective.iter().zip(y.iter()).map(|(c, v)| c * v).sum();
    Ok(LpOutcome::Optimal { value, solution: y })
}
