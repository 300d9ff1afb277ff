//! Rolling-window out-of-sample sweep across complexity levels, feature
//! draws, and solver methods, plus result persistence.

use std::path::Path;
use std::time::Instant;

use ndarray::{s, Array1, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factors;
use crate::features::{draw_features, FeatureSpec};
use crate::metrics::{self, MetricsReport};
use crate::panel::CharacteristicPanel;
use crate::solvers::{self, Method, SolverOptions};

fn default_q_grid() -> Vec<f64> {
    metrics::DEFAULT_Q_GRID.to_vec()
}
fn default_gamma_grid() -> Vec<f64> {
    metrics::DEFAULT_GAMMA_GRID.to_vec()
}
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfig {
    /// training window length in months
    pub t: usize,
    /// complexity ratios c = P/T, strictly increasing
    pub c_grid: Vec<f64>,
    pub n_draws: usize,
    pub methods: Vec<Method>,
    /// first evaluation month id (format yyyymm)
    pub oos_start: u32,
    /// last evaluation month id, inclusive
    pub oos_end: u32,
    pub seed: u64,
    pub bandwidth_grid: Vec<f64>,
    #[serde(default = "default_q_grid")]
    pub q_grid: Vec<f64>,
    #[serde(default = "default_gamma_grid")]
    pub gamma_grid: Vec<f64>,
    #[serde(default)]
    pub solver: SolverOptions,
}

/// P = round(c * T) with ties to even.
pub fn p_for(c: f64, t: usize) -> usize {
    (c * t as f64).round_ties_even() as usize
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.t < 2 {
            return Err(Error::validation("sweep: window length must be >= 2"));
        }
        if self.c_grid.is_empty() {
            return Err(Error::validation("sweep: empty c grid"));
        }
        if self.c_grid.iter().any(|&c| c <= 0.0 || !c.is_finite()) {
            return Err(Error::validation("sweep: c grid must be positive and finite"));
        }
        if self.c_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::validation("sweep: c grid must be strictly increasing"));
        }
        if self.c_grid.iter().any(|&c| p_for(c, self.t) < 1) {
            return Err(Error::validation("sweep: some c yields P = round(c*T) < 1"));
        }
        if self.n_draws == 0 {
            return Err(Error::validation("sweep: n_draws must be >= 1"));
        }
        if self.methods.is_empty() {
            return Err(Error::validation("sweep: no methods selected"));
        }
        for m in &self.methods {
            if !matches!(m, Method::BasisPursuit | Method::Ridgeless) {
                return Err(Error::validation(format!(
                    "sweep: method {m} is not a sweep method"
                )));
            }
        }
        if self.oos_start > self.oos_end {
            return Err(Error::validation("sweep: oos_start exceeds oos_end"));
        }
        if self.bandwidth_grid.is_empty() || self.bandwidth_grid.iter().any(|&b| b <= 0.0) {
            return Err(Error::validation("sweep: bandwidth grid must be positive"));
        }
        if self.q_grid.iter().any(|&q| q <= 0.0 || q >= 1.0) {
            return Err(Error::validation("sweep: q grid must lie in (0,1)"));
        }
        Ok(())
    }
}

/// Return series for one (c, draw, method) cell. Months that failed for
/// any method within the same (c, draw) are excluded from every method's
/// series so lengths stay aligned.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellSeries {
    pub c: f64,
    pub p: usize,
    pub draw: usize,
    pub method: Method,
    /// evaluation (formation) month ids
    pub months: Vec<u32>,
    pub returns: Vec<f64>,
    pub supports: Vec<usize>,
    pub failed_windows: usize,
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryRow {
    pub c: f64,
    pub p: usize,
    pub method: Method,
    /// draw-averaged metrics; absent when series are too short
    pub metrics: Option<MetricsReport>,
    pub mean_support: f64,
    pub failed_windows: usize,
    pub total_windows: usize,
    pub draws_used: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub cells: Vec<CellSeries>,
    pub summaries: Vec<SummaryRow>,
    pub total_failed_windows: usize,
    pub total_windows: usize,
}

/// Field-wise average of per-draw metric reports. Optional entries are
/// averaged over the draws where they are defined.
pub fn average_reports(reports: &[&MetricsReport]) -> Option<MetricsReport> {
    let first = *reports.first()?;
    let n = reports.len() as f64;
    let avg_opt = |get: &dyn Fn(&MetricsReport) -> Option<f64>| {
        let vals: Vec<f64> = reports.iter().filter_map(|r| get(r)).collect();
        if vals.is_empty() {
            None
        } else {
            Some(vals.iter().sum::<f64>() / vals.len() as f64)
        }
    };
    let tail_curves = first
        .tail_curves
        .iter()
        .enumerate()
        .map(|(i, tp)| metrics::TailPoint {
            q: tp.q,
            var: reports.iter().map(|r| r.tail_curves[i].var).sum::<f64>() / n,
            es: avg_opt(&|r: &MetricsReport| r.tail_curves[i].es),
            utm: avg_opt(&|r: &MetricsReport| r.tail_curves[i].utm),
        })
        .collect();
    let ce_curve = first
        .ce_curve
        .iter()
        .enumerate()
        .map(|(i, (g, _))| (*g, avg_opt(&|r: &MetricsReport| r.ce_curve[i].1)))
        .collect();
    Some(MetricsReport {
        mean: reports.iter().map(|r| r.mean).sum::<f64>() / n,
        vol: reports.iter().map(|r| r.vol).sum::<f64>() / n,
        sharpe: avg_opt(&|r: &MetricsReport| r.sharpe),
        hjd: avg_opt(&|r: &MetricsReport| r.hjd),
        tail_curves,
        ce_curve,
        n_obs: reports.iter().map(|r| r.n_obs).min().unwrap_or(0),
    })
}

struct DrawLevel {
    /// per-method series over surviving windows
    months: Vec<u32>,
    returns: Vec<Vec<f64>>,
    supports: Vec<Vec<usize>>,
    elapsed_ms: Vec<u64>,
    /// OOS factor rows for surviving windows, for the HJ distance
    f_eval: Array2<f64>,
    failed_windows: usize,
}

/// One (draw, c) block: solves every window for every method.
fn run_draw_level(
    panel: &CharacteristicPanel,
    config: &SweepConfig,
    fm_top: &Array2<f64>,
    p: usize,
    p_top: usize,
    i0: usize,
    n_windows: usize,
) -> DrawLevel {
    let t = config.t;
    let scale = (p_top as f64 / p as f64).sqrt();
    let fm = fm_top.slice(s![.., ..p]).mapv(|v| v * scale);
    let n_methods = config.methods.len();
    let mut months = Vec::with_capacity(n_windows);
    let mut returns = vec![Vec::with_capacity(n_windows); n_methods];
    let mut supports = vec![Vec::with_capacity(n_windows); n_methods];
    let mut elapsed_ms = vec![0u64; n_methods];
    let mut eval_rows: Vec<usize> = Vec::with_capacity(n_windows);
    let mut failed_windows = 0usize;

    for w in 0..n_windows {
        // row k in fm corresponds to panel month index i0 - t + k
        let k_eval = t + w;
        let f_in = fm.slice(s![k_eval - t..k_eval, ..]);
        let f_out = fm.row(k_eval);
        let mut window_rets = Vec::with_capacity(n_methods);
        let mut window_sups = Vec::with_capacity(n_methods);
        let mut window_ok = true;
        let mut window_ms = vec![0u64; n_methods];
        for (mi, method) in config.methods.iter().enumerate() {
            let started = Instant::now();
            let solved = match method {
                Method::Ridgeless => solvers::ridgeless(&f_in, &config.solver),
                Method::BasisPursuit => {
                    if p >= t {
                        solvers::basis_pursuit(&f_in, &config.solver)
                    } else {
                        // interpolation is impossible below P = T; take the
                        // minimum-l1 representation of the least-squares fit
                        solvers::ridgeless(&f_in, &config.solver).and_then(|ls| {
                            let target = f_in.dot(&ls.lambda_array());
                            solvers::min_l1_with_target(&f_in, &target, &config.solver).map(
                                |mut sol| {
                                    sol.diagnostics.underdetermined_fallback = true;
                                    sol
                                },
                            )
                        })
                    }
                }
                _ => unreachable!("validated methods"),
            };
            window_ms[mi] = started.elapsed().as_millis() as u64;
            match solved {
                Ok(sol) => {
                    let lam = sol.lambda_array();
                    window_rets.push(lam.dot(&f_out));
                    window_sups.push(sol.support.len());
                }
                Err(_) => {
                    window_ok = false;
                    break;
                }
            }
        }
        for (mi, ms) in window_ms.iter().enumerate() {
            elapsed_ms[mi] += ms;
        }
        if window_ok {
            months.push(panel.months[i0 + w].month_id);
            eval_rows.push(k_eval);
            for mi in 0..n_methods {
                returns[mi].push(window_rets[mi]);
                supports[mi].push(window_sups[mi]);
            }
        } else {
            failed_windows += 1;
        }
    }

    let mut f_eval = Array2::<f64>::zeros((eval_rows.len(), p));
    for (row, &k) in eval_rows.iter().enumerate() {
        f_eval.row_mut(row).assign(&fm.row(k));
    }
    DrawLevel {
        months,
        returns,
        supports,
        elapsed_ms,
        f_eval,
        failed_windows,
    }
}

/// Runs the full sweep. Deterministic given `config`; draws and
/// complexity levels are processed as a parallel map with an ordered
/// reduction.
pub fn run_sweep(panel: &CharacteristicPanel, config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    let t = config.t;
    let i0 = panel.index_of(config.oos_start).ok_or_else(|| {
        Error::validation(format!("sweep: month {} not in panel", config.oos_start))
    })?;
    let i1 = panel.index_of(config.oos_end).ok_or_else(|| {
        Error::validation(format!("sweep: month {} not in panel", config.oos_end))
    })?;
    if i1 < i0 {
        return Err(Error::validation("sweep: oos range is empty in the panel"));
    }
    if i0 < t {
        return Err(Error::validation(format!(
            "sweep: need {} formation months before {}, panel supplies {}",
            t, config.oos_start, i0
        )));
    }
    let n_windows = i1 - i0 + 1;
    let p_list: Vec<usize> = config.c_grid.iter().map(|&c| p_for(c, t)).collect();
    let p_top = *p_list.iter().max().unwrap();

    // (draw, c-level) tasks; each draw expands features once at the top
    // width and reuses rescaled column prefixes for the smaller levels
    let tasks: Vec<(usize, usize)> = (0..config.n_draws)
        .flat_map(|d| (0..config.c_grid.len()).map(move |ci| (d, ci)))
        .collect();
    let draw_factors: Vec<Array2<f64>> = (0..config.n_draws)
        .into_par_iter()
        .map(|d| -> Result<Array2<f64>> {
            let spec = FeatureSpec {
                p: p_top,
                d: panel.d,
                bandwidth_grid: config.bandwidth_grid.clone(),
                seed: config.seed,
                draw_index: d as u32,
            };
            let draw = draw_features(&spec)?;
            let mut fm = Array2::<f64>::zeros((t + n_windows, p_top));
            for k in 0..(t + n_windows) {
                let row = factors::oos_factor(panel, &draw, i0 - t + k)?;
                fm.row_mut(k).assign(&row);
            }
            Ok(fm)
        })
        .collect::<Result<Vec<_>>>()?;

    let levels: Vec<((usize, usize), DrawLevel)> = tasks
        .par_iter()
        .map(|&(d, ci)| {
            let level = run_draw_level(
                panel,
                config,
                &draw_factors[d],
                p_list[ci],
                p_top,
                i0,
                n_windows,
            );
            ((d, ci), level)
        })
        .collect();

    let mut cells = Vec::new();
    let mut summaries = Vec::new();
    let mut total_failed_windows = 0usize;
    let n_methods = config.methods.len();
    for (ci, (&c, &p)) in config.c_grid.iter().zip(&p_list).enumerate() {
        let mut per_method_reports: Vec<Vec<MetricsReport>> = vec![Vec::new(); n_methods];
        let mut per_method_support: Vec<(f64, usize)> = vec![(0.0, 0); n_methods];
        let mut failed_at_c = 0usize;
        for d in 0..config.n_draws {
            let level = &levels
                .iter()
                .find(|((ld, lci), _)| *ld == d && *lci == ci)
                .unwrap()
                .1;
            failed_at_c += level.failed_windows;
            for (mi, method) in config.methods.iter().enumerate() {
                let rets = &level.returns[mi];
                if let Ok(mut rep) = metrics::report(rets, &config.q_grid, &config.gamma_grid) {
                    let m_hat: Array1<f64> = Array1::from_iter(rets.iter().map(|r| 1.0 - r));
                    rep.hjd = metrics::hj_distance(&m_hat.view(), &level.f_eval.view()).ok();
                    per_method_reports[mi].push(rep);
                }
                let (acc, cnt) = &mut per_method_support[mi];
                *acc += level.supports[mi].iter().sum::<usize>() as f64;
                *cnt += level.supports[mi].len();
                cells.push(CellSeries {
                    c,
                    p,
                    draw: d,
                    method: *method,
                    months: level.months.clone(),
                    returns: rets.clone(),
                    supports: level.supports[mi].clone(),
                    failed_windows: level.failed_windows,
                    elapsed_ms: level.elapsed_ms[mi],
                });
            }
        }
        // failed windows are counted once per method they would have fed
        total_failed_windows += failed_at_c * n_methods;
        let windows_at_c = n_windows * config.n_draws;
        if failed_at_c * 2 > windows_at_c {
            return Err(Error::Diverged {
                iterations: failed_at_c,
                msg: format!("sweep: more than half the windows failed at c = {c}"),
            });
        }
        for (mi, method) in config.methods.iter().enumerate() {
            let refs: Vec<&MetricsReport> = per_method_reports[mi].iter().collect();
            let (acc, cnt) = per_method_support[mi];
            summaries.push(SummaryRow {
                c,
                p,
                method: *method,
                metrics: average_reports(&refs),
                mean_support: if cnt > 0 { acc / cnt as f64 } else { 0.0 },
                failed_windows: failed_at_c,
                total_windows: windows_at_c,
                draws_used: per_method_reports[mi].len(),
            });
        }
    }
    Ok(SweepResult {
        config: config.clone(),
        cells,
        summaries,
        total_failed_windows,
        total_windows: n_windows * config.n_draws * config.c_grid.len() * n_methods,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SupportPoint {
    pub c: f64,
    pub mean: f64,
    pub sd: f64,
    pub max: usize,
}

/// Mean and spread of the sparse method's active-factor count per c.
pub fn support_curve(result: &SweepResult) -> Result<Vec<SupportPoint>> {
    let mut out = Vec::new();
    for &c in &result.config.c_grid {
        let counts: Vec<usize> = result
            .cells
            .iter()
            .filter(|cell| cell.method == Method::BasisPursuit && cell.c == c)
            .flat_map(|cell| cell.supports.iter().copied())
            .collect();
        if counts.is_empty() {
            continue;
        }
        let n = counts.len() as f64;
        let mean = counts.iter().sum::<usize>() as f64 / n;
        let var = counts
            .iter()
            .map(|&k| (k as f64 - mean).powi(2))
            .sum::<f64>()
            / n;
        out.push(SupportPoint {
            c,
            mean,
            sd: var.sqrt(),
            max: *counts.iter().max().unwrap(),
        });
    }
    if out.is_empty() {
        return Err(Error::validation(
            "support_curve: result contains no sparse-method cells",
        ));
    }
    Ok(out)
}

fn fmt_c(c: f64) -> String {
    format!("{c}").replace('.', "p").replace('-', "m")
}

/// Persists a sweep as a directory: `summary.json`, one
/// `returns_<c>_<method>.csv` per (c, method), `supports.csv`, and
/// `meta.json`.
pub fn write_result(result: &SweepResult, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let summary = serde_json::to_string_pretty(&result.summaries)?;
    std::fs::write(dir.join("summary.json"), summary + "\n")?;

    for &c in &result.config.c_grid {
        for method in &result.config.methods {
            let mut wtr = csv::Writer::from_path(
                dir.join(format!("returns_{}_{}.csv", fmt_c(c), method)),
            )?;
            wtr.write_record(["month", "draw", "ret"])?;
            for cell in result
                .cells
                .iter()
                .filter(|cell| cell.c == c && cell.method == *method)
            {
                for (m, r) in cell.months.iter().zip(&cell.returns) {
                    wtr.write_record([m.to_string(), cell.draw.to_string(), r.to_string()])?;
                }
            }
            wtr.flush()?;
        }
    }

    let mut wtr = csv::Writer::from_path(dir.join("supports.csv"))?;
    wtr.write_record(["c", "method", "draw", "month", "support"])?;
    for cell in &result.cells {
        for (m, k) in cell.months.iter().zip(&cell.supports) {
            wtr.write_record([
                cell.c.to_string(),
                cell.method.to_string(),
                cell.draw.to_string(),
                m.to_string(),
                k.to_string(),
            ])?;
        }
    }
    wtr.flush()?;

    let meta = serde_json::json!({
        "seed": result.config.seed,
        "code_version": env!("CARGO_PKG_VERSION"),
        "solver": result.config.solver,
        "conventions": {
            "p_rounding": "round(c*T), ties to even",
            "low_c_branch": "P < T takes the minimum-l1 representation of the least-squares fit",
            "draw_averaging": "metrics computed per draw, then averaged across draws",
            "failed_windows": "excluded from averages, counts disclosed",
        },
        "total_windows": result.total_windows,
        "total_failed_windows": result.total_failed_windows,
    });
    std::fs::write(
        dir.join("meta.json"),
        serde_json::to_string_pretty(&meta)? + "\n",
    )?;
    Ok(())
}

/// Writes the plot-ready per-(c, method) curve table: mean, vol, sharpe,
/// HJ distance, one column per tail-q and per gamma.
pub fn write_curves(result: &SweepResult, path: &Path) -> Result<()> {
    let q_grid = &result.config.q_grid;
    let gamma_grid = &result.config.gamma_grid;
    let mut header: Vec<String> = ["c", "method", "mean", "vol", "sharpe", "hjd"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for q in q_grid {
        header.push(format!("var_{q}"));
        if *q <= 0.5 {
            header.push(format!("es_{q}"));
        } else {
            header.push(format!("utm_{q}"));
        }
    }
    for g in gamma_grid {
        header.push(format!("ce_{g}"));
    }
    let mut wtr = csv::Writer::from_path(path)?;
    wtr.write_record(&header)?;
    let blank = || String::new();
    for row in &result.summaries {
        let mut rec = vec![row.c.to_string(), row.method.to_string()];
        match &row.metrics {
            Some(m) => {
                rec.push(m.mean.to_string());
                rec.push(m.vol.to_string());
                rec.push(m.sharpe.map(|v| v.to_string()).unwrap_or_else(blank));
                rec.push(m.hjd.map(|v| v.to_string()).unwrap_or_else(blank));
                for tp in &m.tail_curves {
                    rec.push(tp.var.to_string());
                    let side = if tp.q <= 0.5 { tp.es } else { tp.utm };
                    rec.push(side.map(|v| v.to_string()).unwrap_or_else(blank));
                }
                for (_, ce) in &m.ce_curve {
                    rec.push(ce.map(|v| v.to_string()).unwrap_or_else(blank));
                }
            }
            None => {
                for _ in 0..(4 + 2 * q_grid.len() + gamma_grid.len()) {
                    rec.push(blank());
                }
            }
        }
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}
