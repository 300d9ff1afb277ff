//! Performance and welfare metrics over out-of-sample return series.

use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

pub const DEFAULT_Q_GRID: [f64; 9] = [0.01, 0.05, 0.10, 0.25, 0.50, 0.75, 0.90, 0.95, 0.99];
pub const DEFAULT_GAMMA_GRID: [f64; 3] = [1.0, 2.0, 5.0];

/// Relative eigenvalue cutoff for the HJ-distance pseudoinverse.
pub const HJD_CUTOFF_REL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailPoint {
    pub q: f64,
    /// empirical q-quantile (k = ceil(qN) order statistic)
    pub var: f64,
    /// mean of returns <= the quantile; lower tail only (q <= 0.5)
    pub es: Option<f64>,
    /// mean of returns >= the quantile; upper tail only (q > 0.5)
    pub utm: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mean: f64,
    pub vol: f64,
    /// None flags an undefined ratio (zero volatility)
    pub sharpe: Option<f64>,
    pub hjd: Option<f64>,
    pub tail_curves: Vec<TailPoint>,
    /// (gamma, certainty equivalent); None when a gross return <= 0
    pub ce_curve: Vec<(f64, Option<f64>)>,
    pub n_obs: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DominanceReport {
    /// fraction of months where a strictly exceeds b
    pub pathwise_rate: f64,
    /// fraction of the q grid where Q_q(a) >= Q_q(b)
    pub quantile_rate: f64,
}

/// Sample mean, N-1 volatility, and Sharpe ratio. Zero volatility yields
/// `sharpe = None` rather than an infinity.
pub fn sharpe(returns: &[f64]) -> Result<(f64, f64, Option<f64>)> {
    let n = returns.len();
    if n < 2 {
        return Err(Error::validation("sharpe: need at least 2 observations"));
    }
    let nf = n as f64;
    let mean = returns.iter().sum::<f64>() / nf;
    // a constant series has exactly zero variance; bypass the fp residual
    let vol = if returns.iter().all(|r| *r == returns[0]) {
        0.0
    } else {
        (returns.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (nf - 1.0)).sqrt()
    };
    let sr = if vol > 0.0 { Some(mean / vol) } else { None };
    Ok((mean, vol, sr))
}

/// Hansen-Jagannathan distance `E[MF]' E[FF']^+ E[MF]` over the
/// out-of-sample months, computed through the eigendecomposition of the
/// N x N month Gram matrix so the P x P second-moment matrix is never
/// materialized.
pub fn hj_distance(m_hat: &ArrayView1<f64>, f_oos: &ArrayView2<f64>) -> Result<f64> {
    let n = m_hat.len();
    if f_oos.nrows() != n {
        return Err(Error::Dimension {
            expected: n,
            got: f_oos.nrows(),
            context: "hj_distance: SDF realizations vs factor rows".into(),
        });
    }
    if n == 0 {
        return Err(Error::validation("hj_distance: empty sample"));
    }
    if m_hat.iter().any(|v| !v.is_finite()) || f_oos.iter().any(|v| !v.is_finite()) {
        return Err(Error::validation("hj_distance: non-finite input"));
    }
    let h = f_oos.dot(&f_oos.t()) / n as f64;
    let (w, u) = linalg::eigh(&h.view());
    let wmax = w.iter().fold(0.0f64, |a, &b| a.max(b));
    if wmax <= 0.0 {
        return Ok(0.0);
    }
    let cutoff = HJD_CUTOFF_REL * wmax;
    let mut acc = 0.0;
    for k in 0..n {
        if w[k] > cutoff {
            let proj = u.column(k).dot(m_hat);
            acc += proj * proj;
        }
    }
    Ok(acc / n as f64)
}

/// The k = ceil(qN) order statistic of the series (lower empirical
/// quantile convention).
pub fn empirical_quantile(returns: &[f64], q: f64) -> f64 {
    let n = returns.len();
    let mut sorted = returns.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let k = ((q * n as f64).ceil() as usize).clamp(1, n);
    sorted[k - 1]
}

/// VaR / ES / upper-tail-mean curves over a percentile grid.
pub fn tail_curves(returns: &[f64], q_grid: &[f64]) -> Result<Vec<TailPoint>> {
    let n = returns.len();
    if n < 5 {
        return Err(Error::validation("tail_curves: need at least 5 observations"));
    }
    if q_grid.iter().any(|&q| !(q > 0.0 && q < 1.0)) {
        return Err(Error::validation("tail_curves: percentiles must lie in (0,1)"));
    }
    let mut sorted = returns.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out = Vec::with_capacity(q_grid.len());
    for &q in q_grid {
        let k = ((q * n as f64).ceil() as usize).clamp(1, n);
        let quantile = sorted[k - 1];
        // tails are summed in sorted order so results are independent of
        // the input permutation
        let es = if q <= 0.5 {
            let count = sorted.partition_point(|x| *x <= quantile);
            Some(sorted[..count].iter().sum::<f64>() / count as f64)
        } else {
            None
        };
        let utm = if q > 0.5 {
            let start = sorted.partition_point(|x| *x < quantile);
            let tail = &sorted[start..];
            Some(tail.iter().sum::<f64>() / tail.len() as f64)
        } else {
            None
        };
        out.push(TailPoint {
            q,
            var: quantile,
            es,
            utm,
        });
    }
    Ok(out)
}

/// CRRA certainty-equivalent return; `gamma = 1` uses the log-utility
/// (geometric-mean) limit.
pub fn certainty_equivalent(returns: &[f64], gamma: f64) -> Result<f64> {
    if !(gamma >= 0.0) {
        return Err(Error::validation("certainty_equivalent: gamma must be >= 0"));
    }
    if returns.is_empty() {
        return Err(Error::validation("certainty_equivalent: empty series"));
    }
    for (i, r) in returns.iter().enumerate() {
        if !(1.0 + r > 0.0) {
            return Err(Error::Domain(format!(
                "certainty_equivalent: gross return <= 0 at observation {i} (r = {r})"
            )));
        }
    }
    let nf = returns.len() as f64;
    let ce_gross = if gamma == 1.0 {
        (returns.iter().map(|r| (1.0 + r).ln()).sum::<f64>() / nf).exp()
    } else {
        let e = 1.0 - gamma;
        let mean_pow = returns.iter().map(|r| (1.0 + r).powf(e)).sum::<f64>() / nf;
        mean_pow.powf(1.0 / e)
    };
    Ok(ce_gross - 1.0)
}

/// Pathwise and quantile dominance rates of series `a` over series `b`.
/// Pathwise uses strict inequality; the quantile curve uses weak.
pub fn dominance_summary(a: &[f64], b: &[f64], q_grid: &[f64]) -> Result<DominanceReport> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::validation(
            "dominance_summary: series must be non-empty and aligned",
        ));
    }
    let n = a.len() as f64;
    let pathwise = a.iter().zip(b).filter(|(x, y)| x > y).count() as f64 / n;
    let mut qwins = 0usize;
    for &q in q_grid {
        if empirical_quantile(a, q) >= empirical_quantile(b, q) {
            qwins += 1;
        }
    }
    Ok(DominanceReport {
        pathwise_rate: pathwise,
        quantile_rate: qwins as f64 / q_grid.len().max(1) as f64,
    })
}

/// Full report over a series. HJ distance needs factor realizations and is
/// attached by the caller when available.
pub fn report(returns: &[f64], q_grid: &[f64], gamma_grid: &[f64]) -> Result<MetricsReport> {
    let (mean, vol, sr) = sharpe(returns)?;
    let tails = tail_curves(returns, q_grid)?;
    let ce_curve = gamma_grid
        .iter()
        .map(|&g| (g, certainty_equivalent(returns, g).ok()))
        .collect();
    Ok(MetricsReport {
        mean,
        vol,
        sharpe: sr,
        hjd: None,
        tail_curves: tails,
        ce_curve,
        n_obs: returns.len(),
    })
}
