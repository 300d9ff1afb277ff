//! Interpolating SDF solvers: minimum-l1 (basis pursuit), minimum-l2
//! (ridgeless), and the penalized ridge / l1 paths used to verify both
//! limits.

mod simplex;

use ndarray::{Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Method {
    BasisPursuit,
    Ridgeless,
    Ridge(f64),
    L1(f64),
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Method::BasisPursuit => write!(f, "BasisPursuit"),
            Method::Ridgeless => write!(f, "Ridgeless"),
            Method::Ridge(a) => write!(f, "Ridge({a})"),
            Method::L1(a) => write!(f, "L1({a})"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// interpolation feasibility tolerance
    pub feas_tol: f64,
    /// reduced-cost / optimality tolerance
    pub opt_tol: f64,
    /// duality-gap tolerance reported in diagnostics checks
    pub gap_tol: f64,
    /// |lambda_p| above this counts as support
    pub support_tol: f64,
    /// Gram condition estimate above this switches ridgeless to a
    /// pseudoinverse solve
    pub cond_threshold: f64,
    pub max_pivots: usize,
    /// coordinate-descent convergence: successive-iterate max change
    pub cd_tol: f64,
    pub cd_max_iters: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            feas_tol: 1e-8,
            opt_tol: 1e-9,
            gap_tol: 1e-9,
            support_tol: 1e-9,
            cond_threshold: 1e12,
            max_pivots: 200_000,
            cd_tol: 1e-10,
            cd_max_iters: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    /// simplex pivots (phase 1 + phase 2) or descent sweeps
    pub iterations: usize,
    pub phase1_iterations: usize,
    pub used_pseudoinverse: bool,
    pub redundant_rows: usize,
    pub bland_activated: bool,
    /// least-squares branch taken because T > P or interpolation impossible
    pub underdetermined_fallback: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SdfSolution {
    pub lambda: Vec<f64>,
    pub method: Method,
    pub support: Vec<usize>,
    pub l1_norm: f64,
    pub l2_norm: f64,
    pub residual_inf: f64,
    pub diagnostics: Diagnostics,
}

impl SdfSolution {
    pub fn from_lambda(
        lambda: Array1<f64>,
        method: Method,
        f: &ArrayView2<f64>,
        opts: &SolverOptions,
        diagnostics: Diagnostics,
    ) -> Self {
        let support: Vec<usize> = lambda
            .iter()
            .enumerate()
            .filter(|(_, v)| v.abs() > opts.support_tol)
            .map(|(i, _)| i)
            .collect();
        let l1_norm = lambda.iter().map(|v| v.abs()).sum();
        let l2_norm = lambda.dot(&lambda).sqrt();
        let residual_inf = linalg::residual_inf(f, &lambda.view());
        SdfSolution {
            lambda: lambda.to_vec(),
            method,
            support,
            l1_norm,
            l2_norm,
            residual_inf,
            diagnostics,
        }
    }

    pub fn lambda_array(&self) -> Array1<f64> {
        Array1::from_vec(self.lambda.clone())
    }
}

/// Minimum-l2 interpolator `F'(FF')^{-1} 1`.
///
/// On ill-conditioned Gram matrices the solve falls back to a
/// pseudoinverse and flags diagnostics. For `T > P` interpolation is
/// impossible; the least-squares solution is returned tagged `Ridge(0)`.
pub fn ridgeless(f: &ArrayView2<f64>, opts: &SolverOptions) -> Result<SdfSolution> {
    let (t, p) = (f.nrows(), f.ncols());
    if t == 0 || p == 0 {
        return Err(Error::validation("ridgeless: empty factor matrix"));
    }
    let mut diag = Diagnostics::default();
    if t > p {
        // underdetermined in the interpolation sense: least squares on F'F
        diag.underdetermined_fallback = true;
        let gram = f.t().dot(f);
        let rhs = f.t().dot(&Array1::<f64>::ones(t));
        let lambda = match linalg::cholesky(&gram.view(), 0.0) {
            Some(l) if chol_cond_ok(&l, opts.cond_threshold) => {
                linalg::chol_solve(&l, &rhs.view())
            }
            _ => {
                diag.used_pseudoinverse = true;
                linalg::pinv_solve(&gram.view(), &rhs.view(), 1e-12)
            }
        };
        return Ok(SdfSolution::from_lambda(
            lambda,
            Method::Ridge(0.0),
            f,
            opts,
            diag,
        ));
    }
    let gram = f.dot(&f.t());
    let ones = Array1::<f64>::ones(t);
    let y = match linalg::cholesky(&gram.view(), 0.0) {
        Some(l) if chol_cond_ok(&l, opts.cond_threshold) => linalg::chol_solve(&l, &ones.view()),
        _ => {
            diag.used_pseudoinverse = true;
            linalg::pinv_solve(&gram.view(), &ones.view(), 1e-12)
        }
    };
    let lambda = f.t().dot(&y);
    Ok(SdfSolution::from_lambda(
        lambda,
        Method::Ridgeless,
        f,
        opts,
        diag,
    ))
}

/// Rough condition estimate from the Cholesky diagonal.
fn chol_cond_ok(l: &Array2<f64>, threshold: f64) -> bool {
    let mut dmin = f64::INFINITY;
    let mut dmax = 0.0f64;
    for i in 0..l.nrows() {
        let d = l[[i, i]];
        dmin = dmin.min(d);
        dmax = dmax.max(d);
    }
    if dmin <= 0.0 {
        return false;
    }
    (dmax / dmin).powi(2) < threshold
}

/// Minimum-l1 interpolator via the split-variable linear program, solved by
/// two-phase revised simplex. The returned solution is basic, so its
/// support size is at most `T`.
pub fn basis_pursuit(f: &ArrayView2<f64>, opts: &SolverOptions) -> Result<SdfSolution> {
    let ones = Array1::<f64>::ones(f.nrows());
    let (lambda, diag) = simplex::solve_min_l1(f, &ones, opts)?;
    Ok(SdfSolution::from_lambda(
        lambda,
        Method::BasisPursuit,
        f,
        opts,
        diag,
    ))
}

/// Minimum-l1 solution of `F lambda = target` for an arbitrary attainable
/// target vector. Used when interpolation of the unit payoff is impossible
/// (`P < T`): the target is then the least-squares fitted value vector, the
/// closest point of `col(F)` to the unit payoff. `residual_inf` in the
/// returned solution is still measured against the unit payoff.
pub fn min_l1_with_target(
    f: &ArrayView2<f64>,
    target: &Array1<f64>,
    opts: &SolverOptions,
) -> Result<SdfSolution> {
    let (lambda, diag) = simplex::solve_min_l1(f, target, opts)?;
    Ok(SdfSolution::from_lambda(
        lambda,
        Method::BasisPursuit,
        f,
        opts,
        diag,
    ))
}

/// Ridge solution of `(1/2T)||1 - F lambda||^2 + alpha ||lambda||_2^2` in
/// closed form; verification oracle for the ridgeless limit.
pub fn ridge(f: &ArrayView2<f64>, alpha: f64, opts: &SolverOptions) -> Result<SdfSolution> {
    if !(alpha > 0.0) {
        return Err(Error::validation("ridge: alpha must be > 0"));
    }
    let (t, p) = (f.nrows(), f.ncols());
    let reg = 2.0 * t as f64 * alpha;
    let lambda = if p >= t {
        // dual form: lambda = F'(FF' + 2T alpha I)^{-1} 1
        let mut gram = f.dot(&f.t());
        for i in 0..t {
            gram[[i, i]] += reg;
        }
        let l = linalg::cholesky(&gram.view(), 0.0)
            .ok_or_else(|| Error::Internal("ridge Gram not PD".into()))?;
        let y = linalg::chol_solve(&l, &Array1::<f64>::ones(t).view());
        f.t().dot(&y)
    } else {
        let mut gram = f.t().dot(f);
        for j in 0..p {
            gram[[j, j]] += reg;
        }
        let rhs = f.t().dot(&Array1::<f64>::ones(t));
        let l = linalg::cholesky(&gram.view(), 0.0)
            .ok_or_else(|| Error::Internal("ridge Gram not PD".into()))?;
        linalg::chol_solve(&l, &rhs.view())
    };
    Ok(SdfSolution::from_lambda(
        lambda,
        Method::Ridge(alpha),
        f,
        opts,
        Diagnostics::default(),
    ))
}

/// Coordinate-descent solution of
/// `(1/2T)||1 - F lambda||^2 + alpha ||lambda||_1`;
/// verification oracle for the basis-pursuit limit and the low-c branch.
pub fn l1_path(f: &ArrayView2<f64>, alpha: f64, opts: &SolverOptions) -> Result<SdfSolution> {
    if !(alpha > 0.0) {
        return Err(Error::validation("l1_path: alpha must be > 0"));
    }
    let (t, p) = (f.nrows(), f.ncols());
    let tf = t as f64;
    let col_sq: Vec<f64> = (0..p).map(|j| f.column(j).dot(&f.column(j)) / tf).collect();
    let mut lambda = Array1::<f64>::zeros(p);
    let mut resid = Array1::<f64>::ones(t); // 1 - F lambda
    let mut sweeps = 0usize;

    // pathwise continuation: start at the penalty that zeroes everything
    // and anneal down to the target, warm-starting each stage; plain
    // cyclic descent stalls when started cold at a tiny penalty
    let alpha_max = (0..p)
        .map(|j| (f.column(j).sum() / tf).abs())
        .fold(0.0f64, f64::max);
    let mut stages = vec![alpha];
    if t > p {
        // overdetermined: the normal equations are well posed, so start
        // at the least-squares solution, which the tiny-penalty optimum
        // hugs; cold-started descent crawls on these instances
        let gram = f.t().dot(f) / tf;
        if let Some(l) = linalg::cholesky(&gram.view(), 0.0) {
            let rhs = f.t().dot(&resid) / tf;
            lambda = linalg::chol_solve(&l, &rhs.view());
            resid = Array1::<f64>::ones(t) - f.dot(&lambda);
        }
    } else if alpha < alpha_max {
        let mut a = alpha_max * 0.5;
        while a > alpha {
            stages.push(a);
            a *= 0.2;
        }
        stages.sort_by(|x, y| y.partial_cmp(x).unwrap());
    }

    for (si, &stage_alpha) in stages.iter().enumerate() {
        let last = si + 1 == stages.len();
        // intermediate stages only need to hand over a good warm start
        let tol = if last {
            opts.cd_tol
        } else {
            (stage_alpha * 1e-4).max(opts.cd_tol)
        };
        loop {
            let mut max_change = 0.0f64;
            for j in 0..p {
                let a = col_sq[j];
                if a <= 0.0 {
                    continue;
                }
                let old = lambda[j];
                let rho = f.column(j).dot(&resid) / tf + a * old;
                let new = soft_threshold(rho, stage_alpha) / a;
                if new != old {
                    let delta = old - new;
                    resid.scaled_add(delta, &f.column(j));
                    lambda[j] = new;
                    max_change = max_change.max(delta.abs());
                }
            }
            sweeps += 1;
            if max_change <= tol {
                break;
            }
            if sweeps >= opts.cd_max_iters {
                return Err(Error::Diverged {
                    iterations: sweeps,
                    msg: format!(
                        "l1_path: max change {max_change:.3e} above {tol:.3e}"
                    ),
                });
            }
        }
    }
    let diag = Diagnostics {
        iterations: sweeps,
        ..Diagnostics::default()
    };
    Ok(SdfSolution::from_lambda(
        lambda,
        Method::L1(alpha),
        f,
        opts,
        diag,
    ))
}

fn soft_threshold(x: f64, a: f64) -> f64 {
    if x > a {
        x - a
    } else if x < -a {
        x + a
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use rand::Rng;

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    fn random_matrix(t: usize, p: usize, seed: u64) -> Array2<f64> {
        let mut rng = crate::seed::rng(seed, 1234, 0);
        let mut f = Array2::<f64>::zeros((t, p));
        for v in f.iter_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
        f
    }

    #[test]
    fn ridgeless_symmetric_minimum_norm() {
        let f = array![[1.0, 1.0]];
        let sol = ridgeless(&f.view(), &opts()).unwrap();
        assert!((sol.lambda[0] - 0.5).abs() < 1e-12);
        assert!((sol.lambda[1] - 0.5).abs() < 1e-12);
        assert!(sol.residual_inf <= 1e-8);
    }

    #[test]
    fn ridgeless_single_row_closed_form() {
        let f = array![[2.0, 0.0, 0.0]];
        let sol = ridgeless(&f.view(), &opts()).unwrap();
        assert!((sol.lambda[0] - 0.5).abs() < 1e-12);
        assert!(sol.lambda[1].abs() < 1e-12);
        assert!(sol.lambda[2].abs() < 1e-12);
    }

    #[test]
    fn ridgeless_matches_small_alpha_ridge() {
        // [DERIVED] ridge-limit oracle on a random 3x7 instance
        let f = random_matrix(3, 7, 1);
        let rl = ridgeless(&f.view(), &opts()).unwrap();
        let rd = ridge(&f.view(), 1e-10, &opts()).unwrap();
        let diff: f64 = rl
            .lambda
            .iter()
            .zip(&rd.lambda)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(diff / rl.l2_norm <= 1e-4, "relative gap {}", diff / rl.l2_norm);
    }

    #[test]
    fn ridgeless_underdetermined_tags_ridge_zero() {
        let f = random_matrix(6, 3, 2);
        let sol = ridgeless(&f.view(), &opts()).unwrap();
        assert_eq!(sol.method, Method::Ridge(0.0));
        assert!(sol.diagnostics.underdetermined_fallback);
        // least-squares normal equations satisfied
        let lam = sol.lambda_array();
        let grad = f.t().dot(&(f.dot(&lam) - Array1::<f64>::ones(6)));
        assert!(grad.iter().all(|g| g.abs() < 1e-9));
    }

    #[test]
    fn ridgeless_rank_deficient_uses_pseudoinverse() {
        // duplicated row
        let mut f = random_matrix(3, 8, 3);
        let row = f.row(0).to_owned();
        f.row_mut(2).assign(&row);
        let sol = ridgeless(&f.view(), &opts()).unwrap();
        assert!(sol.diagnostics.used_pseudoinverse);
        assert!(sol.residual_inf <= 1e-7, "residual {}", sol.residual_inf);
    }

    #[test]
    fn ridge_shrinkage_bound() {
        let f = random_matrix(4, 9, 4);
        let alpha = 1e4;
        let sol = ridge(&f.view(), alpha, &opts()).unwrap();
        let ft1 = f.t().dot(&Array1::<f64>::ones(4));
        let bound = ft1.dot(&ft1).sqrt() / (2.0 * 4.0 * alpha);
        assert!(sol.l2_norm <= bound * (1.0 + 1e-9));
    }

    #[test]
    fn ridge_small_alpha_limit_of_symmetric_case() {
        let f = array![[1.0, 1.0]];
        let sol = ridge(&f.view(), 1e-12, &opts()).unwrap();
        assert!((sol.lambda[0] - 0.5).abs() < 1e-6);
        assert!((sol.lambda[1] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn ridge_path_converges_monotonically_to_ridgeless() {
        // [DERIVED] limit-path check on a random 4x9 instance
        let f = random_matrix(4, 9, 5);
        let rl = ridgeless(&f.view(), &opts()).unwrap().lambda_array();
        let mut last = f64::INFINITY;
        for k in 1..=5 {
            let alpha = 10f64.powi(-2 * k);
            let sol = ridge(&f.view(), alpha, &opts()).unwrap();
            let d = (&sol.lambda_array() - &rl).mapv(|v| v * v).sum().sqrt();
            assert!(d <= last * (1.0 + 1e-9), "not monotone at alpha={alpha}");
            last = d;
        }
        assert!(last < 1e-6);
    }

    #[test]
    fn bp_cheapest_column_dominates() {
        let f = array![[2.0, 1.0]];
        let sol = basis_pursuit(&f.view(), &opts()).unwrap();
        assert!((sol.lambda[0] - 0.5).abs() < 1e-10);
        assert!(sol.lambda[1].abs() < 1e-12);
        assert!((sol.l1_norm - 0.5).abs() < 1e-10);
    }

    #[test]
    fn bp_tie_prefers_lowest_index() {
        let f = array![[1.0, 1.0]];
        let sol = basis_pursuit(&f.view(), &opts()).unwrap();
        assert!((sol.lambda[0] - 1.0).abs() < 1e-10);
        assert!(sol.lambda[1].abs() < 1e-12);
        assert!((sol.l1_norm - 1.0).abs() < 1e-10);
    }

    /// Exhaustive enumeration of basic solutions: all size-T column subsets
    /// with an invertible submatrix, solved exactly.
    fn enumerate_min_l1(f: &Array2<f64>) -> f64 {
        let t = f.nrows();
        let mut best = f64::INFINITY;
        let mut subset = vec![0usize; t];
        fn rec(
            f: &Array2<f64>,
            subset: &mut Vec<usize>,
            depth: usize,
            start: usize,
            best: &mut f64,
        ) {
            let (t, p) = (f.nrows(), f.ncols());
            if depth == t {
                let mut sub = Array2::<f64>::zeros((t, t));
                for (k, &j) in subset.iter().enumerate() {
                    for i in 0..t {
                        sub[[i, k]] = f[[i, j]];
                    }
                }
                if let Ok(inv) = crate::linalg::invert(&sub) {
                    if inv.iter().all(|v| v.is_finite()) {
                        let x = inv.dot(&Array1::<f64>::ones(t));
                        let check = sub.dot(&x);
                        if check.iter().all(|v| (v - 1.0).abs() < 1e-7) {
                            let l1: f64 = x.iter().map(|v| v.abs()).sum();
                            if l1 < *best {
                                *best = l1;
                            }
                        }
                    }
                }
                return;
            }
            for j in start..p {
                subset[depth] = j;
                rec(f, subset, depth + 1, j + 1, best);
            }
        }
        rec(f, &mut subset, 0, 0, &mut best);
        best
    }

    #[test]
    fn bp_matches_enumeration_oracle() {
        // [DERIVED] basic-solution enumeration on random T=2, P=5 instances
        for seed in 0..10 {
            let f = random_matrix(2, 5, 100 + seed);
            let sol = basis_pursuit(&f.view(), &opts()).unwrap();
            let oracle = enumerate_min_l1(&f);
            assert!(
                (sol.l1_norm - oracle).abs() <= 1e-9,
                "seed {seed}: {} vs {oracle}",
                sol.l1_norm
            );
        }
    }

    #[test]
    fn bp_support_bounded_and_interpolates() {
        for seed in 0..8 {
            let t = 3 + (seed as usize % 3);
            let f = random_matrix(t, 6 * t, 200 + seed);
            let sol = basis_pursuit(&f.view(), &opts()).unwrap();
            assert!(sol.support.len() <= t);
            assert!(sol.residual_inf <= 1e-8);
            // l1 never above ridgeless l1
            let rl = ridgeless(&f.view(), &opts()).unwrap();
            assert!(sol.l1_norm <= rl.l1_norm + 1e-9);
        }
    }

    #[test]
    fn bp_handles_redundant_rows() {
        let mut f = random_matrix(4, 10, 7);
        let row = f.row(1).to_owned();
        f.row_mut(3).assign(&row);
        let sol = basis_pursuit(&f.view(), &opts()).unwrap();
        assert_eq!(sol.diagnostics.redundant_rows, 1);
        assert!(sol.residual_inf <= 1e-8);
        assert!(sol.support.len() <= 3);
    }

    #[test]
    fn bp_detects_infeasible() {
        // row and its negation: requires both +1 and -1 as rhs
        let f = array![[1.0, 2.0], [-1.0, -2.0]];
        match basis_pursuit(&f.view(), &opts()) {
            Err(Error::Infeasible(_)) => {}
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn bp_deterministic() {
        let f = random_matrix(5, 40, 11);
        let a = basis_pursuit(&f.view(), &opts()).unwrap();
        let b = basis_pursuit(&f.view(), &opts()).unwrap();
        assert_eq!(a.lambda, b.lambda);
        assert_eq!(a.support, b.support);
    }

    #[test]
    fn l1_path_full_shrinkage() {
        let f = random_matrix(3, 6, 12);
        let sol = l1_path(&f.view(), 1e6, &opts()).unwrap();
        assert!(sol.lambda.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn l1_path_limit_of_cheapest_column() {
        let f = array![[2.0, 1.0]];
        let sol = l1_path(&f.view(), 1e-10, &opts()).unwrap();
        assert!((sol.lambda[0] - 0.5).abs() < 1e-5);
        assert!(sol.lambda[1].abs() < 1e-5);
    }

    #[test]
    fn l1_path_approaches_basis_pursuit() {
        // [DERIVED] BP-limit oracle on a random 3x8 instance
        let f = random_matrix(3, 8, 13);
        let bp = basis_pursuit(&f.view(), &opts()).unwrap();
        let l1 = l1_path(&f.view(), 1e-9, &opts()).unwrap();
        assert!(
            (l1.l1_norm - bp.l1_norm).abs() <= 1e-4,
            "{} vs {}",
            l1.l1_norm,
            bp.l1_norm
        );
    }

    #[test]
    fn solution_norms_consistent() {
        let f = random_matrix(3, 9, 14);
        let sol = basis_pursuit(&f.view(), &opts()).unwrap();
        let l1: f64 = sol.lambda.iter().map(|v| v.abs()).sum();
        let l2: f64 = sol.lambda.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((l1 - sol.l1_norm).abs() <= 1e-12);
        assert!((l2 - sol.l2_norm).abs() <= 1e-12);
        assert!(sol.l2_norm <= sol.l1_norm + 1e-12);
    }
}
