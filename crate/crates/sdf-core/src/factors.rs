//! Characteristic-managed factor returns and rolling factor matrices.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::features::{self, FeatureDraw};
use crate::panel::CharacteristicPanel;

/// In-sample managed-factor matrix for one training window.
#[derive(Debug, Clone)]
pub struct FactorMatrix {
    /// T x P, row j is the managed-factor return realized after formation
    /// month `t_start + j`
    pub f_in: Array2<f64>,
    pub t: usize,
    pub p: usize,
}

/// `S'R / sqrt(N_t)` for one month's cross-section.
pub fn managed_factor(s: &ArrayView2<f64>, r_next: &ArrayView1<f64>) -> Result<Array1<f64>> {
    let n = s.nrows();
    if r_next.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: r_next.len(),
            context: "managed_factor: rows of S vs length of R".into(),
        });
    }
    if n == 0 {
        return Err(Error::validation("managed_factor: empty cross-section"));
    }
    Ok(s.t().dot(r_next) / (n as f64).sqrt())
}

/// Builds the `T x P` in-sample factor matrix from formation months
/// `t_start .. t_start + T - 1` (month indices into the panel). Each slice
/// already pairs month-`t` characteristics with month-`t+1` returns, so no
/// evaluation-month information can enter.
pub fn build_window(
    panel: &CharacteristicPanel,
    draw: &FeatureDraw,
    t_start: usize,
    t_len: usize,
) -> Result<FactorMatrix> {
    if t_start + t_len > panel.n_months() {
        return Err(Error::validation(format!(
            "window [{t_start}, {}) needs {} months, panel has {}",
            t_start + t_len,
            t_len,
            panel.n_months() - t_start.min(panel.n_months())
        )));
    }
    let p = draw.omegas.nrows();
    let mut f_in = Array2::<f64>::zeros((t_len, p));
    for j in 0..t_len {
        let m = &panel.months[t_start + j];
        let s = features::expand(draw, &m.z.view())?;
        let f = managed_factor(&s.view(), &m.r_next.view())?;
        f_in.row_mut(j).assign(&f);
    }
    Ok(FactorMatrix { f_in, t: t_len, p })
}

/// Out-of-sample factor vector for one evaluation slice: month-`t_index`
/// characteristics against the returns realized the following month.
pub fn oos_factor(
    panel: &CharacteristicPanel,
    draw: &FeatureDraw,
    t_index: usize,
) -> Result<Array1<f64>> {
    let m = panel
        .months
        .get(t_index)
        .ok_or_else(|| Error::validation(format!("month index {t_index} out of range")))?;
    let s = features::expand(draw, &m.z.view())?;
    managed_factor(&s.view(), &m.r_next.view())
}
