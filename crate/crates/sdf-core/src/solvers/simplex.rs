//! Two-phase revised simplex for `min ||lambda||_1 s.t. F lambda = 1`,
//! solved on the split-variable form
//! `min 1'(u + v) s.t. F(u - v) = 1, u, v >= 0`.
//!
//! The solver always terminates at a basic optimal solution, so at most
//! `T` of the `2P` split variables are basic and the recovered `lambda`
//! has support size at most `T`. Pricing uses reduced costs scaled by
//! static column norms, with a switch to Bland's rule if a long
//! degenerate stall is detected. Tie-breaking is by lowest column index
//! throughout, which pins the selected vertex on degenerate instances.

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::solvers::{Diagnostics, SolverOptions};

const PIVOT_TOL: f64 = 1e-11;
const REFACTOR_EVERY: usize = 64;

/// Removes linearly dependent rows by modified Gram-Schmidt on the
/// augmented rows `[f_i | b_i]`. A dependent row whose right-hand side is
/// inconsistent makes the whole system infeasible.
fn independent_rows(f: &ArrayView2<f64>, rhs: &Array1<f64>) -> Result<Vec<usize>> {
    let (t, p) = (f.nrows(), f.ncols());
    let mut kept = Vec::new();
    // orthonormalized augmented rows
    let mut basis: Vec<(Array1<f64>, f64)> = Vec::new();
    for i in 0..t {
        let mut a = f.row(i).to_owned();
        let mut c = rhs[i];
        let orig_norm = (a.dot(&a) + 1.0).sqrt();
        for (qa, qc) in &basis {
            let coef = a.dot(qa) + c * qc;
            a.scaled_add(-coef, qa);
            c -= coef * qc;
        }
        let row_part = a.dot(&a).sqrt();
        let full = (row_part * row_part + c * c).sqrt();
        if full <= 1e-10 * orig_norm {
            continue; // consistent dependent row
        }
        if row_part <= 1e-10 * orig_norm {
            return Err(Error::Infeasible(format!(
                "row {i} is linearly dependent with inconsistent unit payoff"
            )));
        }
        // keep; store the normalized augmented vector
        let mut qa = f.row(i).to_owned();
        let mut qc = rhs[i];
        for (ba, bc) in &basis {
            let coef = qa.dot(ba) + qc * bc;
            qa.scaled_add(-coef, ba);
            qc -= coef * bc;
        }
        let norm = (qa.dot(&qa) + qc * qc).sqrt();
        qa.mapv_inplace(|v| v / norm);
        qc /= norm;
        basis.push((qa, qc));
        kept.push(i);
        if kept.len() == p.min(t) {
            // cannot exceed column count; remaining rows are dependent,
            // but they still need the consistency check
            for i2 in (i + 1)..t {
                let mut a2 = f.row(i2).to_owned();
                let mut c2 = rhs[i2];
                let orig2 = (a2.dot(&a2) + 1.0).sqrt();
                for (qa2, qc2) in &basis {
                    let coef = a2.dot(qa2) + c2 * qc2;
                    a2.scaled_add(-coef, qa2);
                    c2 -= coef * qc2;
                }
                let rp = a2.dot(&a2).sqrt();
                let fl = (rp * rp + c2 * c2).sqrt();
                if fl > 1e-10 * orig2 && rp <= 1e-10 * orig2 {
                    return Err(Error::Infeasible(format!(
                        "row {i2} is linearly dependent with inconsistent unit payoff"
                    )));
                }
            }
            break;
        }
    }
    Ok(kept)
}

struct State {
    /// r x p working matrix (independent rows of F)
    w: Array2<f64>,
    r: usize,
    p: usize,
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    binv: Array2<f64>,
    xb: Array1<f64>,
    /// right-hand side of the retained rows
    b: Array1<f64>,
    /// signs of the artificial columns, matching the rhs signs
    art_sign: Vec<f64>,
    col_norm: Vec<f64>,
    pivots: usize,
    bland: bool,
}

impl State {
    fn column(&self, var: usize, out: &mut Array1<f64>) {
        if var < self.p {
            out.assign(&self.w.column(var));
        } else if var < 2 * self.p {
            out.assign(&self.w.column(var - self.p));
            out.mapv_inplace(|v| -v);
        } else {
            out.fill(0.0);
            out[var - 2 * self.p] = self.art_sign[var - 2 * self.p];
        }
    }

    fn refactor(&mut self) -> Result<()> {
        let r = self.r;
        let mut b = Array2::<f64>::zeros((r, r));
        let mut col = Array1::<f64>::zeros(r);
        for (k, &var) in self.basis.iter().enumerate() {
            self.column(var, &mut col);
            b.column_mut(k).assign(&col);
        }
        self.binv = crate::linalg::invert(&b)
            .map_err(|_| Error::Internal("singular simplex basis during refactorization".into()))?;
        self.xb = self.binv.dot(&self.b);
        for v in self.xb.iter_mut() {
            if *v < 0.0 && *v > -1e-9 {
                *v = 0.0;
            }
        }
        Ok(())
    }

    /// One pivot: `enter` becomes basic in row `leave_row`.
    fn pivot(&mut self, enter: usize, leave_row: usize, d: &Array1<f64>) {
        let dl = d[leave_row];
        let ratio = self.xb[leave_row] / dl;
        for i in 0..self.r {
            if i != leave_row {
                self.xb[i] -= ratio * d[i];
                if self.xb[i] < 0.0 && self.xb[i] > -1e-9 {
                    self.xb[i] = 0.0;
                }
            }
        }
        self.xb[leave_row] = ratio;
        // binv <- E binv
        let pivot_row = self.binv.row(leave_row).to_owned();
        for i in 0..self.r {
            if i == leave_row {
                continue;
            }
            let factor = d[i] / dl;
            if factor != 0.0 {
                let mut row = self.binv.row_mut(i);
                for k in 0..pivot_row.len() {
                    row[k] -= factor * pivot_row[k];
                }
            }
        }
        {
            let mut row = self.binv.row_mut(leave_row);
            for k in 0..row.len() {
                row[k] /= dl;
            }
        }
        self.in_basis[self.basis[leave_row]] = false;
        self.in_basis[enter] = true;
        self.basis[leave_row] = enter;
        self.pivots += 1;
    }

    /// Entering variable for the current phase, or None at optimality.
    fn price(&self, phase1: bool, opt_tol: f64) -> Option<usize> {
        // y = binv' c_B
        let r = self.r;
        let mut y = Array1::<f64>::zeros(r);
        for k in 0..r {
            let c = if phase1 {
                if self.basis[k] >= 2 * self.p {
                    1.0
                } else {
                    0.0
                }
            } else {
                1.0
            };
            if c != 0.0 {
                y.scaled_add(c, &self.binv.row(k));
            }
        }
        let z = self.w.t().dot(&y);
        let c_struct = if phase1 { 0.0 } else { 1.0 };
        let mut best: Option<(f64, usize)> = None;
        for j in 0..(2 * self.p) {
            if self.in_basis[j] {
                continue;
            }
            let rc = if j < self.p {
                c_struct - z[j]
            } else {
                c_struct + z[j - self.p]
            };
            if rc < -opt_tol {
                if self.bland {
                    return Some(j);
                }
                let norm = self.col_norm[j % self.p];
                let score = rc / norm;
                match best {
                    Some((s, _)) if s <= score => {}
                    _ => best = Some((score, j)),
                }
            }
        }
        best.map(|(_, j)| j)
    }

    /// Ratio test; returns the leaving row.
    fn ratio_test(&self, d: &Array1<f64>) -> Option<usize> {
        let mut best: Option<(f64, usize)> = None;
        for i in 0..self.r {
            if d[i] > PIVOT_TOL {
                let ratio = self.xb[i].max(0.0) / d[i];
                match best {
                    None => best = Some((ratio, i)),
                    Some((br, bi)) => {
                        if ratio < br - 1e-12 {
                            best = Some((ratio, i));
                        } else if (ratio - br).abs() <= 1e-12 {
                            let better = if self.bland {
                                self.basis[i] < self.basis[bi]
                            } else {
                                // expel artificials first, then lowest id
                                let art_i = self.basis[i] >= 2 * self.p;
                                let art_b = self.basis[bi] >= 2 * self.p;
                                match (art_i, art_b) {
                                    (true, false) => true,
                                    (false, true) => false,
                                    _ => self.basis[i] < self.basis[bi],
                                }
                            };
                            if better {
                                best = Some((ratio, i));
                            }
                        }
                    }
                }
            }
        }
        best.map(|(_, i)| i)
    }
}

pub(crate) fn solve_min_l1(
    f: &ArrayView2<f64>,
    rhs: &Array1<f64>,
    opts: &SolverOptions,
) -> Result<(Array1<f64>, Diagnostics)> {
    let (t, p) = (f.nrows(), f.ncols());
    if t == 0 || p == 0 {
        return Err(Error::validation("basis_pursuit: empty factor matrix"));
    }
    if rhs.len() != t {
        return Err(Error::Dimension {
            expected: t,
            got: rhs.len(),
            context: "solve_min_l1: right-hand side length".into(),
        });
    }
    let kept = independent_rows(f, rhs)?;
    let r = kept.len();
    let mut w = Array2::<f64>::zeros((r, p));
    let mut b = Array1::<f64>::zeros(r);
    for (k, &i) in kept.iter().enumerate() {
        w.row_mut(k).assign(&f.row(i));
        b[k] = rhs[i];
    }
    let art_sign: Vec<f64> = b.iter().map(|&v| if v < 0.0 { -1.0 } else { 1.0 }).collect();
    let xb0 = b.mapv(f64::abs);
    let col_norm: Vec<f64> = (0..p)
        .map(|j| w.column(j).dot(&w.column(j)).sqrt().max(1e-12))
        .collect();

    let mut st = State {
        w,
        r,
        p,
        basis: (0..r).map(|i| 2 * p + i).collect(),
        in_basis: {
            let mut v = vec![false; 2 * p + r];
            for i in 0..r {
                v[2 * p + i] = true;
            }
            v
        },
        // initial basis is the signed artificial identity, so its inverse
        // is the same diagonal
        binv: Array2::from_diag(&Array1::from_vec(art_sign.clone())),
        xb: xb0,
        b,
        art_sign,
        col_norm,
        pivots: 0,
        bland: false,
    };
    let bland_after = 2_000 + 100 * r;
    let mut diag = Diagnostics {
        redundant_rows: t - r,
        ..Diagnostics::default()
    };

    let mut d = Array1::<f64>::zeros(r);
    for phase1 in [true, false] {
        loop {
            if st.pivots > opts.max_pivots {
                return Err(Error::Diverged {
                    iterations: st.pivots,
                    msg: "simplex pivot limit exceeded".into(),
                });
            }
            if !st.bland && st.pivots > bland_after {
                st.bland = true;
                diag.bland_activated = true;
            }
            let enter = match st.price(phase1, opts.opt_tol) {
                Some(j) => j,
                None => break,
            };
            st.column(enter, &mut d);
            let dv = st.binv.dot(&d);
            let leave = st.ratio_test(&dv).ok_or_else(|| {
                Error::Internal("unbounded direction in a nonnegative-objective LP".into())
            })?;
            st.pivot(enter, leave, &dv);
            if st.pivots % REFACTOR_EVERY == 0 {
                st.refactor()?;
            }
        }
        if phase1 {
            diag.phase1_iterations = st.pivots;
            let art_level: f64 = st
                .basis
                .iter()
                .zip(st.xb.iter())
                .filter(|(v, _)| **v >= 2 * p)
                .map(|(_, x)| x.max(0.0))
                .sum();
            if art_level > opts.feas_tol {
                return Err(Error::Infeasible(format!(
                    "phase-1 artificial level {art_level:.3e} above {:.3e}",
                    opts.feas_tol
                )));
            }
            drive_out_artificials(&mut st)?;
        }
    }
    diag.iterations = st.pivots;

    let mut lambda = Array1::<f64>::zeros(p);
    for (i, &var) in st.basis.iter().enumerate() {
        let x = st.xb[i].max(0.0);
        if var < p {
            lambda[var] += x;
        } else if var < 2 * p {
            lambda[var - p] -= x;
        }
    }
    Ok((lambda, diag))
}

/// Pivots any zero-level artificial out of the basis; possible whenever the
/// retained rows are independent.
fn drive_out_artificials(st: &mut State) -> Result<()> {
    let p = st.p;
    let rows: Vec<usize> = (0..st.r).filter(|&i| st.basis[i] >= 2 * p).collect();
    let mut d = Array1::<f64>::zeros(st.r);
    for i in rows {
        if st.basis[i] < 2 * p {
            continue;
        }
        let coeffs = st.w.t().dot(&st.binv.row(i));
        let mut entered = false;
        for j in 0..p {
            if coeffs[j].abs() <= 1e-9 {
                continue;
            }
            let var = if !st.in_basis[j] {
                j
            } else if !st.in_basis[j + p] {
                j + p
            } else {
                continue;
            };
            st.column(var, &mut d);
            let dv = st.binv.dot(&d);
            if dv[i].abs() <= PIVOT_TOL {
                continue;
            }
            st.pivot(var, i, &dv);
            entered = true;
            break;
        }
        if !entered {
            return Err(Error::Internal(
                "could not remove zero-level artificial from basis".into(),
            ));
        }
    }
    Ok(())
}
