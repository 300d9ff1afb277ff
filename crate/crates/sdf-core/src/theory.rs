//! Executable verification of the structural results behind the sparse vs
//! dense comparison: row/kernel projector decompositions, the mean-return
//! gap identity, its complexity-sweep conditions, and the volatility scale
//! chain.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::solvers::{SdfSolution, SolverOptions};

/// Projectors are materialized as dense P x P matrices only up to this
/// size; beyond it they are applied as operators against the Cholesky
/// factor of FF'.
pub const MATERIALIZE_CAP: usize = 2000;

/// Orthogonal decomposition of a mean vector against `row(F)` / `ker(F)`.
#[derive(Debug, Clone)]
pub struct ProjectorDecomposition {
    /// P x P row-space projector, when P <= MATERIALIZE_CAP
    pub row_projector: Option<Array2<f64>>,
    /// P x P kernel projector `I - Pi`, when materialized
    pub kernel_projector: Option<Array2<f64>>,
    pub mu: Array1<f64>,
    pub mu_par: Array1<f64>,
    pub mu_perp: Array1<f64>,
    f: Array2<f64>,
    chol: Array2<f64>,
}

impl ProjectorDecomposition {
    /// Applies the row-space projector `F'(FF')^{-1}F` as an operator.
    pub fn apply_row(&self, v: &ArrayView1<f64>) -> Array1<f64> {
        let fv = self.f.dot(v);
        let y = linalg::chol_solve(&self.chol, &fv.view());
        self.f.t().dot(&y)
    }

    /// Applies the kernel projector `I - Pi`.
    pub fn apply_kernel(&self, v: &ArrayView1<f64>) -> Array1<f64> {
        v.to_owned() - self.apply_row(v)
    }
}

/// Builds the decomposition. Requires `F` to have full row rank; a
/// rank-deficient Gram matrix is an error because the identity checks
/// presume exact rank.
pub fn decompose(f: &ArrayView2<f64>, mu: &ArrayView1<f64>) -> Result<ProjectorDecomposition> {
    let (t, p) = (f.nrows(), f.ncols());
    if mu.len() != p {
        return Err(Error::Dimension {
            expected: p,
            got: mu.len(),
            context: "decompose: mean vector length".into(),
        });
    }
    let gram = f.dot(&f.t());
    let chol = linalg::cholesky(&gram.view(), 0.0).ok_or_else(|| {
        Error::validation("decompose: FF' is not positive definite (rank deficient F)")
    })?;
    // cheap conditioning guard; theory checks need exact rank
    let mut dmin = f64::INFINITY;
    let mut dmax = 0.0f64;
    for i in 0..t {
        dmin = dmin.min(chol[[i, i]]);
        dmax = dmax.max(chol[[i, i]]);
    }
    if dmin <= 0.0 || (dmax / dmin).powi(2) > 1e13 {
        return Err(Error::validation(
            "decompose: FF' numerically rank deficient",
        ));
    }
    let mut decomp = ProjectorDecomposition {
        row_projector: None,
        kernel_projector: None,
        mu: mu.to_owned(),
        mu_par: Array1::zeros(p),
        mu_perp: Array1::zeros(p),
        f: f.to_owned(),
        chol,
    };
    decomp.mu_par = decomp.apply_row(mu);
    decomp.mu_perp = &decomp.mu - &decomp.mu_par;
    if p <= MATERIALIZE_CAP {
        // Pi = F' Y with (FF') Y = F
        let mut y = Array2::<f64>::zeros((t, p));
        for j in 0..p {
            let fj = decomp.f.column(j).to_owned();
            let yj = linalg::chol_solve(&decomp.chol, &fj.view());
            y.column_mut(j).assign(&yj);
        }
        let pi = decomp.f.t().dot(&y);
        let mut m = Array2::<f64>::eye(p);
        m -= &pi;
        decomp.row_projector = Some(pi);
        decomp.kernel_projector = Some(m);
    }
    // orthogonality invariant
    let cross = decomp.mu_par.dot(&decomp.mu_perp);
    let scale = decomp.mu.dot(&decomp.mu);
    if cross.abs() > 1e-8 * scale.max(1.0) {
        return Err(Error::Internal(format!(
            "projector orthogonality violated: mu_par'mu_perp = {cross:.3e}"
        )));
    }
    Ok(decomp)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapReport {
    /// mean-return difference computed directly from the two solutions
    pub gap_direct: f64,
    /// the same gap through the kernel-component identity
    pub gap_identity: f64,
    pub h_norm: f64,
    pub mu_perp_norm: f64,
    pub cos_theta: f64,
    /// max |F h|, must vanish since both solutions interpolate
    pub kernel_residual: f64,
    /// set when either norm is below 1e-12 and cos_theta is reported as 0
    pub degenerate: bool,
}

/// Computes the mean-return gap both directly and through the identity
/// `gap = mu_perp' h = ||mu_perp|| ||h|| cos(theta)`.
pub fn mean_gap(
    f: &ArrayView2<f64>,
    mu: &ArrayView1<f64>,
    bp: &SdfSolution,
    rl: &SdfSolution,
    opts: &SolverOptions,
) -> Result<GapReport> {
    let bp_l = bp.lambda_array();
    let rl_l = rl.lambda_array();
    for (name, lam) in [("sparse", &bp_l), ("dense", &rl_l)] {
        let resid = linalg::residual_inf(f, &lam.view());
        if resid > opts.feas_tol {
            return Err(Error::validation(format!(
                "mean_gap: {name} solution does not interpolate (residual {resid:.3e})"
            )));
        }
    }
    let decomp = decompose(f, mu)?;
    let h = &bp_l - &rl_l;
    let gap_direct = mu.dot(&bp_l) - mu.dot(&rl_l);
    let gap_identity = decomp.mu_perp.dot(&h);
    let h_norm = h.dot(&h).sqrt();
    let mu_perp_norm = decomp.mu_perp.dot(&decomp.mu_perp).sqrt();
    let kernel_residual = f
        .dot(&h)
        .iter()
        .map(|v| v.abs())
        .fold(0.0, f64::max);
    let degenerate = h_norm < 1e-12 || mu_perp_norm < 1e-12;
    let cos_theta = if degenerate {
        0.0
    } else {
        gap_identity / (h_norm * mu_perp_norm)
    };
    Ok(GapReport {
        gap_direct,
        gap_identity,
        h_norm,
        mu_perp_norm,
        cos_theta,
        kernel_residual,
        degenerate,
    })
}

/// Per-complexity-level mean oracle.
pub trait MeanOracle {
    /// The length-P population (or long-sample) factor mean at level P.
    fn mu(&self, p: usize) -> Array1<f64>;
    fn description(&self) -> &'static str;
}

/// Analytic planted mean: prefix of a fixed full-length vector.
pub struct PlantedMean(pub Array1<f64>);

impl MeanOracle for PlantedMean {
    fn mu(&self, p: usize) -> Array1<f64> {
        self.0.slice(ndarray::s![..p]).to_owned()
    }
    fn description(&self) -> &'static str {
        "planted"
    }
}

/// Sample mean of held-out factor realizations (rows = months).
pub struct SampleMean(pub Array2<f64>);

impl MeanOracle for SampleMean {
    fn mu(&self, p: usize) -> Array1<f64> {
        let n = self.0.nrows() as f64;
        self.0.slice(ndarray::s![.., ..p]).sum_axis(ndarray::Axis(0)) / n
    }
    fn description(&self) -> &'static str {
        "sample"
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapRecord {
    pub p: usize,
    pub mu_perp_norm: f64,
    pub h_norm: f64,
    pub cos_theta: f64,
    pub gap: f64,
    /// implied lower bound `h_lower * rho_lower * ||mu_perp||`
    pub bound: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComplexityGapReport {
    pub records: Vec<GapRecord>,
    /// ||mu_perp|| weakly increasing across the sweep
    pub condition_i: bool,
    /// kernel displacement bounded away from zero
    pub condition_ii: bool,
    /// alignment cosine positive throughout
    pub condition_iii: bool,
    pub h_lower: f64,
    pub rho_lower: f64,
    pub mu_oracle: String,
}

/// Runs the gap identity across a nested complexity sequence and reports
/// whether the three sufficient conditions hold empirically. `f_by_p` must
/// be literal column-prefix slices of one factor matrix (nesting is
/// verified), since the monotonicity arguments compare levels that share
/// their leading columns.
pub fn complexity_gap_bound(
    f_by_p: &[Array2<f64>],
    mu_oracle: &dyn MeanOracle,
    opts: &SolverOptions,
) -> Result<ComplexityGapReport> {
    if f_by_p.len() < 2 {
        return Err(Error::validation(
            "complexity_gap_bound: need at least 2 complexity levels",
        ));
    }
    for pair in f_by_p.windows(2) {
        let (small, big) = (&pair[0], &pair[1]);
        if small.ncols() > big.ncols() || small.nrows() != big.nrows() {
            return Err(Error::validation(
                "complexity_gap_bound: instances are not nested",
            ));
        }
        let prefix = big.slice(ndarray::s![.., ..small.ncols()]);
        if small
            .iter()
            .zip(prefix.iter())
            .any(|(a, b)| (a - b).abs() > 1e-12 * a.abs().max(1.0))
        {
            return Err(Error::validation(
                "complexity_gap_bound: instances are not column prefixes of each other",
            ));
        }
    }
    let mut records = Vec::with_capacity(f_by_p.len());
    for f in f_by_p {
        let p = f.ncols();
        let mu = mu_oracle.mu(p);
        let bp = crate::solvers::basis_pursuit(&f.view(), opts)?;
        let rl = crate::solvers::ridgeless(&f.view(), opts)?;
        let rep = mean_gap(&f.view(), &mu.view(), &bp, &rl, opts)?;
        records.push(GapRecord {
            p,
            mu_perp_norm: rep.mu_perp_norm,
            h_norm: rep.h_norm,
            cos_theta: rep.cos_theta,
            gap: rep.gap_direct,
            bound: 0.0,
        });
    }
    let condition_i = records
        .windows(2)
        .all(|w| w[1].mu_perp_norm >= w[0].mu_perp_norm - 1e-10);
    let h_lower = records.iter().map(|r| r.h_norm).fold(f64::INFINITY, f64::min);
    let rho_lower = records
        .iter()
        .map(|r| r.cos_theta)
        .fold(f64::INFINITY, f64::min);
    let condition_ii = h_lower > 1e-12;
    let condition_iii = rho_lower > 0.0;
    let claim_bound = condition_ii && condition_iii;
    for r in records.iter_mut() {
        r.bound = if claim_bound {
            h_lower * rho_lower * r.mu_perp_norm
        } else {
            0.0
        };
    }
    Ok(ComplexityGapReport {
        records,
        condition_i,
        condition_ii,
        condition_iii,
        h_lower: if h_lower.is_finite() { h_lower } else { 0.0 },
        rho_lower: if rho_lower.is_finite() { rho_lower } else { 0.0 },
        mu_oracle: mu_oracle.description().to_string(),
    })
}

/// Portfolio volatility `sqrt(lambda' Sigma lambda)` and the scale bound
/// `sqrt(lambda_max(Sigma)) * ||lambda||_1`.
pub fn scale_chain(bp: &SdfSolution, sigma: &ArrayView2<f64>) -> Result<(f64, f64)> {
    let p = bp.lambda.len();
    if sigma.nrows() != p || sigma.ncols() != p {
        return Err(Error::Dimension {
            expected: p,
            got: sigma.nrows(),
            context: "scale_chain: covariance dimension".into(),
        });
    }
    let scale = sigma.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0);
    for i in 0..p {
        for j in (i + 1)..p {
            if (sigma[[i, j]] - sigma[[j, i]]).abs() > 1e-10 * scale {
                return Err(Error::validation("scale_chain: Sigma is not symmetric"));
            }
        }
    }
    let lam = bp.lambda_array();
    let quad = lam.dot(&sigma.dot(&lam));
    let vol = quad.max(0.0).sqrt();
    let top = linalg::max_eigenvalue(sigma).max(0.0);
    let bound = top.sqrt() * bp.l1_norm;
    if vol > bound + 1e-10 {
        return Err(Error::Internal(format!(
            "scale chain violated: vol {vol} > bound {bound}"
        )));
    }
    Ok((vol, bound))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::{basis_pursuit, ridgeless, SolverOptions};
    use ndarray::{array, s};
    use rand::Rng;

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    fn random_matrix(t: usize, p: usize, seed: u64) -> Array2<f64> {
        let mut rng = crate::seed::rng(seed, 777, 0);
        let mut f = Array2::<f64>::zeros((t, p));
        for v in f.iter_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
        f
    }

    #[test]
    fn axis_aligned_projection() {
        let f = array![
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0]
        ];
        let mu = array![1.0, 2.0, 3.0, 4.0];
        let d = decompose(&f.view(), &mu.view()).unwrap();
        assert!((d.mu_par[0] - 1.0).abs() < 1e-12);
        assert!((d.mu_par[1] - 2.0).abs() < 1e-12);
        assert!(d.mu_par[2].abs() < 1e-12);
        assert!((d.mu_perp[2] - 3.0).abs() < 1e-12);
        assert!((d.mu_perp[3] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn row_space_mean_has_no_kernel_part() {
        let f = random_matrix(3, 8, 1);
        let y = array![0.4, -1.2, 0.7];
        let mu = f.t().dot(&y);
        let d = decompose(&f.view(), &mu.view()).unwrap();
        let norm = mu.dot(&mu).sqrt();
        assert!(d.mu_perp.dot(&d.mu_perp).sqrt() <= 1e-8 * norm);
    }

    #[test]
    fn projector_matches_gram_schmidt_oracle() {
        // [DERIVED] orthonormal-basis construction of the projector
        let f = random_matrix(3, 6, 2);
        let mu = random_matrix(1, 6, 3).row(0).to_owned();
        let d = decompose(&f.view(), &mu.view()).unwrap();
        let pi = d.row_projector.as_ref().unwrap();
        // Gram-Schmidt on the rows of F
        let mut basis: Vec<ndarray::Array1<f64>> = Vec::new();
        for i in 0..3 {
            let mut v = f.row(i).to_owned();
            for q in &basis {
                let c = v.dot(q);
                v.scaled_add(-c, q);
            }
            let n = v.dot(&v).sqrt();
            v.mapv_inplace(|x| x / n);
            basis.push(v);
        }
        let mut oracle = Array2::<f64>::zeros((6, 6));
        for q in &basis {
            for i in 0..6 {
                for j in 0..6 {
                    oracle[[i, j]] += q[i] * q[j];
                }
            }
        }
        for (a, b) in pi.iter().zip(oracle.iter()) {
            assert!((a - b).abs() < 1e-8);
        }
        // idempotence and complementarity
        let pi2 = pi.dot(pi);
        for (a, b) in pi2.iter().zip(pi.iter()) {
            assert!((a - b).abs() < 1e-8);
        }
        let m = d.kernel_projector.as_ref().unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let s = pi[[i, j]] + m[[i, j]];
                let id = if i == j { 1.0 } else { 0.0 };
                assert!((s - id).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn decompose_rejects_rank_deficiency() {
        let mut f = random_matrix(3, 6, 4);
        let r = f.row(0).to_owned();
        f.row_mut(2).assign(&r);
        let mu = Array1::zeros(6);
        assert!(decompose(&f.view(), &mu.view()).is_err());
    }

    #[test]
    fn gap_zero_when_mean_in_row_space() {
        let f = random_matrix(3, 9, 5);
        let y = array![1.0, -0.5, 0.25];
        let mu = f.t().dot(&y);
        let bp = basis_pursuit(&f.view(), &opts()).unwrap();
        let rl = ridgeless(&f.view(), &opts()).unwrap();
        let rep = mean_gap(&f.view(), &mu.view(), &bp, &rl, &opts()).unwrap();
        assert!(rep.gap_direct.abs() <= 1e-10 * mu.dot(&mu).sqrt().max(1.0));
    }

    #[test]
    fn perfectly_aligned_construction() {
        let f = random_matrix(3, 10, 6);
        let bp = basis_pursuit(&f.view(), &opts()).unwrap();
        let rl = ridgeless(&f.view(), &opts()).unwrap();
        let h = &bp.lambda_array() - &rl.lambda_array();
        // mu = mu0 + M h with mu0 in row space
        let mu0 = f.t().dot(&array![0.3, 0.1, -0.2]);
        let d0 = decompose(&f.view(), &mu0.view()).unwrap();
        let mh = d0.apply_kernel(&h.view());
        let mu = &mu0 + &mh;
        let rep = mean_gap(&f.view(), &mu.view(), &bp, &rl, &opts()).unwrap();
        assert!((rep.cos_theta - 1.0).abs() < 1e-8, "cos = {}", rep.cos_theta);
        assert!((rep.gap_direct - rep.mu_perp_norm * rep.h_norm).abs() < 1e-8);
    }

    #[test]
    fn identity_two_sided_on_random_instances() {
        // [DERIVED] both routes computed independently
        for seed in 0..10 {
            let f = random_matrix(4, 12, 100 + seed);
            let mu = random_matrix(1, 12, 200 + seed).row(0).to_owned();
            let bp = basis_pursuit(&f.view(), &opts()).unwrap();
            let rl = ridgeless(&f.view(), &opts()).unwrap();
            let rep = mean_gap(&f.view(), &mu.view(), &bp, &rl, &opts()).unwrap();
            assert!(
                (rep.gap_direct - rep.gap_identity).abs()
                    <= 1e-10 * rep.gap_direct.abs().max(1.0),
                "seed {seed}"
            );
            assert!(rep.kernel_residual <= 1e-8);
            if !rep.degenerate {
                let recomposed = rep.mu_perp_norm * rep.h_norm * rep.cos_theta;
                assert!((rep.gap_identity - recomposed).abs() <= 1e-10 * recomposed.abs().max(1e-12));
            }
        }
    }

    #[test]
    fn complexity_sweep_zero_mean() {
        let f = random_matrix(3, 24, 7);
        let levels = vec![
            f.slice(s![.., ..6]).to_owned(),
            f.slice(s![.., ..12]).to_owned(),
            f.slice(s![.., ..24]).to_owned(),
        ];
        let oracle = PlantedMean(Array1::zeros(24));
        let rep = complexity_gap_bound(&levels, &oracle, &opts()).unwrap();
        for r in &rep.records {
            assert!(r.gap.abs() < 1e-12);
            assert!(r.bound.abs() < 1e-12);
        }
    }

    #[test]
    fn complexity_sweep_flags_negative_alignment() {
        // find a seed/mu with cos < 0 at some level and check the flag
        let f = random_matrix(3, 16, 8);
        let levels = vec![
            f.slice(s![.., ..8]).to_owned(),
            f.slice(s![.., ..16]).to_owned(),
        ];
        let mut mu_full = Array1::<f64>::zeros(16);
        // force mu_perp anti-aligned with h at the top level
        let bp = basis_pursuit(&f.view(), &opts()).unwrap();
        let rl = ridgeless(&f.view(), &opts()).unwrap();
        let h = &bp.lambda_array() - &rl.lambda_array();
        let d = decompose(&f.view(), &mu_full.view()).unwrap();
        let mh = d.apply_kernel(&h.view());
        mu_full = -&mh;
        let oracle = PlantedMean(mu_full);
        let rep = complexity_gap_bound(&levels, &oracle, &opts()).unwrap();
        assert!(!rep.condition_iii);
        assert!(rep.records.iter().all(|r| r.bound == 0.0));
    }

    #[test]
    fn complexity_sweep_rejects_non_nested() {
        let a = random_matrix(3, 6, 9);
        let b = random_matrix(3, 12, 10);
        let oracle = PlantedMean(Array1::zeros(12));
        assert!(complexity_gap_bound(&[a, b], &oracle, &opts()).is_err());
    }

    #[test]
    fn complexity_sweep_needs_two_levels() {
        let a = random_matrix(3, 6, 11);
        let oracle = PlantedMean(Array1::zeros(6));
        assert!(complexity_gap_bound(&[a], &oracle, &opts()).is_err());
    }

    #[test]
    fn kernel_shifts_stay_feasible() {
        // every lambda_rl + M g interpolates
        let f = random_matrix(4, 14, 20);
        let rl = ridgeless(&f.view(), &opts()).unwrap();
        let d = decompose(&f.view(), &Array1::zeros(14).view()).unwrap();
        let mut rng = crate::seed::rng(21, 777, 0);
        for _ in 0..50 {
            let g = Array1::from_iter((0..14).map(|_| rng.gen_range(-2.0..2.0f64)));
            let h = d.apply_kernel(&g.view());
            let lam = &rl.lambda_array() + &h;
            let resid = crate::linalg::residual_inf(&f.view(), &lam.view());
            assert!(resid <= 1e-8, "residual {resid}");
        }
    }

    #[test]
    fn row_space_channel_is_orthogonal_to_feasible_moves() {
        // mu_par'(lambda - lambda_rl) vanishes for every feasible lambda
        let f = random_matrix(4, 14, 22);
        let rl = ridgeless(&f.view(), &opts()).unwrap();
        let mu = random_matrix(1, 14, 23).row(0).to_owned();
        let d = decompose(&f.view(), &mu.view()).unwrap();
        let mut rng = crate::seed::rng(24, 777, 0);
        let scale = d.mu_par.dot(&d.mu_par).sqrt().max(1.0);
        for _ in 0..50 {
            let g = Array1::from_iter((0..14).map(|_| rng.gen_range(-2.0..2.0f64)));
            let diff = d.apply_kernel(&g.view());
            assert!(d.mu_par.dot(&diff).abs() <= 1e-8 * scale);
        }
        let bp = basis_pursuit(&f.view(), &opts()).unwrap();
        let diff = &bp.lambda_array() - &rl.lambda_array();
        assert!(d.mu_par.dot(&diff).abs() <= 1e-8 * scale);
    }

    #[test]
    fn scale_chain_identity_covariance() {
        let f = array![[1.0, 1.0]];
        let mut bp = basis_pursuit(&f.view(), &opts()).unwrap();
        bp.lambda = vec![0.6, -0.8];
        bp.l1_norm = 1.4;
        bp.l2_norm = 1.0;
        let sigma = Array2::<f64>::eye(2);
        let (vol, bound) = scale_chain(&bp, &sigma.view()).unwrap();
        assert!((vol - 1.0).abs() < 1e-12);
        assert!((bound - 1.4).abs() < 1e-12);
    }

    #[test]
    fn scale_chain_degenerate_covariance() {
        let f = array![[1.0, 1.0]];
        let bp = basis_pursuit(&f.view(), &opts()).unwrap();
        let sigma = Array2::<f64>::zeros((2, 2));
        let (vol, bound) = scale_chain(&bp, &sigma.view()).unwrap();
        assert_eq!(vol, 0.0);
        assert!(vol <= bound);
    }

    #[test]
    fn scale_chain_random_psd_with_power_iteration_oracle() {
        // [DERIVED] power-iteration largest-eigenvalue oracle
        let mut rng = crate::seed::rng(12, 777, 0);
        let p = 6;
        let mut a = Array2::<f64>::zeros((p, p));
        for v in a.iter_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
        let sigma = a.t().dot(&a); // PSD
        let f = random_matrix(2, p, 13);
        let bp = basis_pursuit(&f.view(), &opts()).unwrap();
        let (vol, bound) = scale_chain(&bp, &sigma.view()).unwrap();
        assert!(vol <= bound + 1e-10);
        // independent power iteration
        let mut v = Array1::<f64>::ones(p);
        for _ in 0..500 {
            v = sigma.dot(&v);
            let n = v.dot(&v).sqrt();
            v.mapv_inplace(|x| x / n);
        }
        let top = v.dot(&sigma.dot(&v));
        let implied = bound / bp.l1_norm;
        assert!((implied - top.sqrt()).abs() < 1e-6 * top.sqrt());
    }

    #[test]
    fn scale_chain_rejects_asymmetric() {
        let f = array![[1.0, 1.0]];
        let bp = basis_pursuit(&f.view(), &opts()).unwrap();
        let sigma = array![[1.0, 0.5], [0.2, 1.0]];
        assert!(scale_chain(&bp, &sigma.view()).is_err());
    }
}
