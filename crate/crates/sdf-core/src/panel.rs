//! Characteristic/return panels: CSV ingestion, rank standardization, and
//! synthetic panels with a planted sparse pricing kernel.

use std::path::Path;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{self, FeatureSpec};
use crate::seed::{self, label};

/// One month of the panel: `Z` holds characteristics observed at the month,
/// `r_next` the excess returns realized over the following month.
#[derive(Debug, Clone, PartialEq)]
pub struct MonthSlice {
    pub month_id: u32,
    /// N_t x D
    pub z: Array2<f64>,
    /// length N_t
    pub r_next: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicPanel {
    pub months: Vec<MonthSlice>,
    pub d: usize,
}

impl CharacteristicPanel {
    pub fn new(months: Vec<MonthSlice>, d: usize) -> Result<Self> {
        let mut last: Option<u32> = None;
        for m in &months {
            if m.z.nrows() == 0 {
                return Err(Error::validation(format!(
                    "month {} has zero assets",
                    m.month_id
                )));
            }
            if m.z.ncols() != d {
                return Err(Error::Dimension {
                    expected: d,
                    got: m.z.ncols(),
                    context: format!("characteristic count in month {}", m.month_id),
                });
            }
            if m.r_next.len() != m.z.nrows() {
                return Err(Error::Dimension {
                    expected: m.z.nrows(),
                    got: m.r_next.len(),
                    context: format!("return count in month {}", m.month_id),
                });
            }
            if m.z.iter().any(|v| !v.is_finite()) || m.r_next.iter().any(|v| !v.is_finite()) {
                return Err(Error::validation(format!(
                    "non-finite value in month {}",
                    m.month_id
                )));
            }
            if let Some(prev) = last {
                if m.month_id <= prev {
                    return Err(Error::validation(format!(
                        "months not strictly increasing at {}",
                        m.month_id
                    )));
                }
            }
            last = Some(m.month_id);
        }
        Ok(CharacteristicPanel { months, d })
    }

    pub fn n_months(&self) -> usize {
        self.months.len()
    }

    /// Index of the slice with the given month id.
    pub fn index_of(&self, month_id: u32) -> Option<usize> {
        self.months.iter().position(|m| m.month_id == month_id)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoadOptions {
    /// drop an asset-month when its missing fraction exceeds this
    pub missing_cutoff: f64,
    /// number of characteristic columns expected in the file
    pub d: usize,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            missing_cutoff: 0.30,
            d: 0,
        }
    }
}

/// Loads a panel from CSV (`month,asset_id,ret_next,c1,...,cD`).
///
/// Asset-months with more than `missing_cutoff` of characteristics missing
/// are dropped; remaining missing cells are imputed to the per-month
/// cross-sectional median of the characteristic. Standardization is not
/// applied here.
pub fn load_panel(path: &Path, options: &LoadOptions) -> Result<CharacteristicPanel> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    {
        let headers = reader.headers()?;
        let expected = 3 + options.d;
        if headers.len() != expected {
            return Err(Error::validation(format!(
                "header has {} columns, expected {} for D={}",
                headers.len(),
                expected,
                options.d
            )));
        }
    }

    // month_id -> rows of (ret, chars)
    let mut by_month: std::collections::BTreeMap<u32, Vec<(f64, Vec<Option<f64>>)>> =
        std::collections::BTreeMap::new();
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let parse_err = |msg: String| Error::Parse { line, msg };
        if rec.len() != 3 + options.d {
            return Err(parse_err(format!("expected {} fields", 3 + options.d)));
        }
        let month: u32 = rec[0]
            .trim()
            .parse()
            .map_err(|e| parse_err(format!("bad month: {e}")))?;
        let ret: f64 = rec[2]
            .trim()
            .parse()
            .map_err(|e| parse_err(format!("bad ret_next: {e}")))?;
        if !ret.is_finite() {
            return Err(parse_err("non-finite ret_next".into()));
        }
        let mut chars = Vec::with_capacity(options.d);
        for k in 0..options.d {
            let cell = rec[3 + k].trim();
            if cell.is_empty() {
                chars.push(None);
            } else {
                let v: f64 = cell
                    .parse()
                    .map_err(|e| parse_err(format!("bad c{}: {e}", k + 1)))?;
                if !v.is_finite() {
                    return Err(parse_err(format!("non-finite c{}", k + 1)));
                }
                chars.push(Some(v));
            }
        }
        by_month.entry(month).or_default().push((ret, chars));
    }

    let mut months = Vec::with_capacity(by_month.len());
    for (month_id, rows) in by_month {
        // drop asset-months above the missing cutoff
        let kept: Vec<&(f64, Vec<Option<f64>>)> = rows
            .iter()
            .filter(|(_, chars)| {
                let missing = chars.iter().filter(|c| c.is_none()).count();
                (missing as f64) / (options.d as f64) <= options.missing_cutoff
            })
            .collect();
        if kept.is_empty() {
            return Err(Error::validation(format!(
                "month {month_id} has zero surviving assets"
            )));
        }
        let n = kept.len();
        let mut z = Array2::<f64>::zeros((n, options.d));
        let mut r = Array1::<f64>::zeros(n);
        for k in 0..options.d {
            let mut observed: Vec<f64> = kept.iter().filter_map(|(_, c)| c[k]).collect();
            let med = if observed.is_empty() {
                return Err(Error::validation(format!(
                    "month {month_id}: characteristic c{} has no observed values",
                    k + 1
                )));
            } else {
                observed.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let m = observed.len();
                if m % 2 == 1 {
                    observed[m / 2]
                } else {
                    0.5 * (observed[m / 2 - 1] + observed[m / 2])
                }
            };
            for (i, (_, chars)) in kept.iter().enumerate() {
                z[[i, k]] = chars[k].unwrap_or(med);
            }
        }
        for (i, (ret, _)) in kept.iter().enumerate() {
            r[i] = *ret;
        }
        months.push(MonthSlice {
            month_id,
            z,
            r_next: r,
        });
    }
    CharacteristicPanel::new(months, options.d)
}

/// Average ranks of a column (1-based, ties averaged).
fn average_ranks(col: &[f64]) -> Vec<f64> {
    let n = col.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| col[a].partial_cmp(&col[b]).unwrap());
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && col[order[j + 1]] == col[order[i]] {
            j += 1;
        }
        // positions i..=j share the value; average rank
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            ranks[order[k]] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Per-month, per-characteristic rank standardization onto [-0.5, 0.5].
/// A single-asset month maps to 0.0.
pub fn rank_standardize(panel: &CharacteristicPanel) -> CharacteristicPanel {
    let months = panel
        .months
        .iter()
        .map(|m| {
            let n = m.z.nrows();
            let mut z = m.z.clone();
            for k in 0..panel.d {
                let col: Vec<f64> = (0..n).map(|i| m.z[[i, k]]).collect();
                if n == 1 {
                    z[[0, k]] = 0.0;
                    continue;
                }
                let ranks = average_ranks(&col);
                for i in 0..n {
                    z[[i, k]] = (ranks[i] - 1.0) / (n as f64 - 1.0) - 0.5;
                }
            }
            MonthSlice {
                month_id: m.month_id,
                z,
                r_next: m.r_next.clone(),
            }
        })
        .collect();
    CharacteristicPanel {
        months,
        d: panel.d,
    }
}

/// Specification of a synthetic panel with a planted sparse pricing kernel.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlantedKernelSpec {
    pub k_true: usize,
    /// the P_max-dimensional expansion in which the true kernel lives
    pub support_space: FeatureSpec,
    /// mean loading magnitude
    pub signal_scale: f64,
    /// idiosyncratic return volatility
    pub noise_vol: f64,
    pub seed: u64,
}

impl PlantedKernelSpec {
    fn validate(&self, t_total: usize) -> Result<()> {
        self.support_space.validate()?;
        if self.k_true == 0 {
            return Err(Error::validation("k_true must be >= 1"));
        }
        if self.k_true > t_total {
            return Err(Error::validation(format!(
                "k_true = {} exceeds T = {t_total}",
                self.k_true
            )));
        }
        if self.k_true > self.support_space.p {
            return Err(Error::validation(format!(
                "k_true = {} exceeds P_max = {}",
                self.k_true, self.support_space.p
            )));
        }
        if !(self.signal_scale > 0.0) {
            return Err(Error::validation("signal_scale must be > 0"));
        }
        if !(self.noise_vol >= 0.0) {
            return Err(Error::validation("noise_vol must be >= 0"));
        }
        Ok(())
    }
}

fn next_month_id(id: u32) -> u32 {
    let (y, m) = (id / 100, id % 100);
    if m >= 12 {
        (y + 1) * 100 + 1
    } else {
        id + 1
    }
}

/// The planted coefficient vector for a spec: `k_true` distinct support
/// indices with loadings of magnitude around `signal_scale` and random sign.
pub fn planted_lambda(spec: &PlantedKernelSpec) -> Array1<f64> {
    let p_max = spec.support_space.p;
    let mut rng = seed::rng(spec.seed, label::SYNTH_LAMBDA, 0);
    let mut support = Vec::with_capacity(spec.k_true);
    while support.len() < spec.k_true {
        let idx = rng.gen_range(0..p_max);
        if !support.contains(&idx) {
            support.push(idx);
        }
    }
    support.sort_unstable();
    let mut lambda = Array1::<f64>::zeros(p_max);
    for &idx in &support {
        let mag = spec.signal_scale * rng.gen_range(0.5..1.5);
        let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        lambda[idx] = sign * mag;
    }
    lambda
}

/// Generates a synthetic panel whose returns follow a planted sparse kernel:
/// `R_{t+1} = S_t lambda_true + eps` with `S_t` the `P_max`-feature
/// expansion of the standardized characteristics. Pure function of its
/// arguments.
pub fn synth_panel(
    spec: &PlantedKernelSpec,
    t_total: usize,
    n: usize,
    d: usize,
) -> Result<(CharacteristicPanel, Array1<f64>)> {
    if t_total < 2 {
        return Err(Error::validation("T_total must be >= 2"));
    }
    if n < d {
        return Err(Error::validation(format!("need N >= D, got N={n}, D={d}")));
    }
    if spec.support_space.d != d {
        return Err(Error::Dimension {
            expected: d,
            got: spec.support_space.d,
            context: "support_space input dimension".into(),
        });
    }
    spec.validate(t_total)?;

    let lambda_true = planted_lambda(spec);
    let draw = features::draw_features(&spec.support_space)?;

    let mut months = Vec::with_capacity(t_total);
    let mut month_id = 200001;
    for t in 0..t_total {
        let mut rng = seed::rng(spec.seed, label::SYNTH_CHARS, t as u64);
        let mut z = Array2::<f64>::zeros((n, d));
        for i in 0..n {
            for k in 0..d {
                z[[i, k]] = rng.gen_range(0.0..1.0);
            }
        }
        months.push(MonthSlice {
            month_id,
            z,
            r_next: Array1::zeros(n),
        });
        month_id = next_month_id(month_id);
    }
    let raw = CharacteristicPanel::new(months, d)?;
    let mut panel = rank_standardize(&raw);
    for (t, m) in panel.months.iter_mut().enumerate() {
        let s = features::expand(&draw, &m.z.view())?;
        let mut r = s.dot(&lambda_true);
        if spec.noise_vol > 0.0 {
            let mut rng = seed::rng(spec.seed, label::SYNTH_NOISE, t as u64);
            for v in r.iter_mut() {
                let g: f64 = rng.sample(StandardNormal);
                *v += spec.noise_vol * g;
            }
        }
        m.r_next = r;
    }
    Ok((panel, lambda_true))
}

/// Writes a panel in the input CSV schema.
pub fn write_panel_csv(panel: &CharacteristicPanel, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["month".to_string(), "asset_id".to_string(), "ret_next".to_string()];
    for k in 0..panel.d {
        header.push(format!("c{}", k + 1));
    }
    w.write_record(&header)?;
    for m in &panel.months {
        for i in 0..m.z.nrows() {
            let mut rec = vec![
                m.month_id.to_string(),
                format!("a{i}"),
                format!("{}", m.r_next[i]),
            ];
            for k in 0..panel.d {
                rec.push(format!("{}", m.z[[i, k]]));
            }
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}
