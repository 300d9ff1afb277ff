//! Random Fourier feature expansions of standardized characteristics.
//!
//! Feature `p` of input `z` is `sqrt(2/P) * cos(omega_p' z + b_p)` with
//! `omega_p ~ N(0, sigma^2 I)` and `b_p ~ Uniform[0, 2pi)`. Each feature's
//! randomness comes from its own derived stream, so a `P`-feature draw is
//! always an exact prefix of the `P'`-feature draw for the same
//! `(seed, draw_index)` and any `P <= P'`. The bandwidth `sigma` is drawn
//! once per `draw_index` (not per `P`), which is what keeps draws nested.

use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{self, label};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    /// feature count P
    pub p: usize,
    /// input dimension D
    pub d: usize,
    pub bandwidth_grid: Vec<f64>,
    pub seed: u64,
    pub draw_index: u32,
}

impl FeatureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.p < 1 {
            return Err(Error::validation("feature count P must be >= 1"));
        }
        if self.d < 1 {
            return Err(Error::validation("input dimension D must be >= 1"));
        }
        if self.bandwidth_grid.is_empty() {
            return Err(Error::validation("bandwidth grid must be non-empty"));
        }
        if self.bandwidth_grid.iter().any(|&b| !(b > 0.0)) {
            return Err(Error::validation("bandwidth grid entries must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FeatureDraw {
    /// P x D frequency matrix
    pub omegas: Array2<f64>,
    /// length-P phases in [0, 2pi)
    pub phases: Array1<f64>,
    /// the sigma realized for this draw_index
    pub bandwidth: f64,
    /// spec this draw was generated from (sufficient to regenerate it)
    pub spec: FeatureSpec,
}

/// Generates the frozen feature draw for a spec.
pub fn draw_features(spec: &FeatureSpec) -> Result<FeatureDraw> {
    spec.validate()?;
    let mut bw_rng = seed::rng(spec.seed, label::BANDWIDTH, spec.draw_index as u64);
    let bandwidth = spec.bandwidth_grid[bw_rng.gen_range(0..spec.bandwidth_grid.len())];

    let stream = seed::derive(spec.seed, label::FEATURE, spec.draw_index as u64);
    let mut omegas = Array2::<f64>::zeros((spec.p, spec.d));
    let mut phases = Array1::<f64>::zeros(spec.p);
    for p in 0..spec.p {
        let mut rng = seed::rng(stream, label::FEATURE, p as u64);
        for d in 0..spec.d {
            let g: f64 = rng.sample(StandardNormal);
            omegas[[p, d]] = bandwidth * g;
        }
        phases[p] = rng.gen_range(0.0..std::f64::consts::TAU);
    }
    Ok(FeatureDraw {
        omegas,
        phases,
        bandwidth,
        spec: spec.clone(),
    })
}

/// Applies the expansion to an `N x D` matrix, producing `N x P`.
pub fn expand(draw: &FeatureDraw, z: &ArrayView2<f64>) -> Result<Array2<f64>> {
    let (p, d) = draw.omegas.dim();
    if z.ncols() != d {
        return Err(Error::Dimension {
            expected: d,
            got: z.ncols(),
            context: "expand: Z column count vs feature input dimension".into(),
        });
    }
    let scale = (2.0 / p as f64).sqrt();
    // S = sqrt(2/P) cos(Z omega' + b), row-wise
    let mut s = z.dot(&draw.omegas.t());
    for (i, mut row) in s.rows_mut().into_iter().enumerate() {
        let _ = i;
        for (j, v) in row.iter_mut().enumerate() {
            *v = scale * (*v + draw.phases[j]).cos();
        }
    }
    Ok(s)
}

/// True iff `small` is an exact prefix of `big` (same bandwidth, and the
/// first `P_small` frequencies/phases agree elementwise).
pub fn nest(small: &FeatureDraw, big: &FeatureDraw) -> bool {
    let ps = small.omegas.nrows();
    let pb = big.omegas.nrows();
    if ps > pb || small.omegas.ncols() != big.omegas.ncols() {
        return false;
    }
    if small.bandwidth != big.bandwidth {
        return false;
    }
    for p in 0..ps {
        if small.phases[p] != big.phases[p] {
            return false;
        }
        for d in 0..small.omegas.ncols() {
            if small.omegas[[p, d]] != big.omegas[[p, d]] {
                return false;
            }
        }
    }
    true
}

/// Sidecar form: enough to regenerate the draw, never the raw matrices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureSidecar {
    pub spec: FeatureSpec,
    pub bandwidth: f64,
}

impl FeatureDraw {
    pub fn sidecar(&self) -> FeatureSidecar {
        FeatureSidecar {
            spec: self.spec.clone(),
            bandwidth: self.bandwidth,
        }
    }
}

impl FeatureSidecar {
    /// Regenerates the draw and checks the recorded bandwidth matches.
    pub fn regenerate(&self) -> Result<FeatureDraw> {
        let draw = draw_features(&self.spec)?;
        if draw.bandwidth != self.bandwidth {
            return Err(Error::validation(
                "sidecar bandwidth does not match regenerated draw",
            ));
        }
        Ok(draw)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn spec(p: usize, seed: u64, draw_index: u32) -> FeatureSpec {
        FeatureSpec {
            p,
            d: 3,
            bandwidth_grid: vec![0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
            seed,
            draw_index,
        }
    }

    #[test]
    fn draw_is_deterministic() {
        let a = draw_features(&spec(16, 42, 1)).unwrap();
        let b = draw_features(&spec(16, 42, 1)).unwrap();
        assert_eq!(a.bandwidth, b.bandwidth);
        assert_eq!(a.omegas, b.omegas);
        assert_eq!(a.phases, b.phases);
    }

    #[test]
    fn nesting_by_construction() {
        let small = draw_features(&spec(8, 42, 1)).unwrap();
        let big = draw_features(&spec(16, 42, 1)).unwrap();
        assert!(nest(&small, &big));
        let other = draw_features(&spec(8, 43, 1)).unwrap();
        assert!(!nest(&other, &big));
    }

    #[test]
    fn prefix_matches_direct_draw() {
        // [DERIVED] prefix-equality check
        let small = draw_features(&spec(8, 9, 2)).unwrap();
        let big = draw_features(&spec(16, 9, 2)).unwrap();
        for p in 0..8 {
            assert_eq!(small.phases[p], big.phases[p]);
            for d in 0..3 {
                assert_eq!(small.omegas[[p, d]], big.omegas[[p, d]]);
            }
        }
    }

    #[test]
    fn bandwidth_grid_frequencies_uniform() {
        // [PAPER] grid {0.5..1.0}: each value selected with frequency 1/6 +- 0.02
        let grid = vec![0.5, 0.6, 0.7, 0.8, 0.9, 1.0];
        let mut counts = [0usize; 6];
        for i in 0..6000u32 {
            let s = FeatureSpec {
                p: 1,
                d: 1,
                bandwidth_grid: grid.clone(),
                seed: 123,
                draw_index: i,
            };
            let d = draw_features(&s).unwrap();
            let k = grid.iter().position(|&g| g == d.bandwidth).unwrap();
            counts[k] += 1;
        }
        for &c in &counts {
            let freq = c as f64 / 6000.0;
            assert!(
                (freq - 1.0 / 6.0).abs() < 0.02,
                "bandwidth frequency off: {freq}"
            );
        }
    }

    #[test]
    fn omega_moments_match_bandwidth() {
        // [DERIVED] Monte Carlo moment check: sd of omegas with sigma=0.7
        let s = FeatureSpec {
            p: 20_000,
            d: 5,
            bandwidth_grid: vec![0.7],
            seed: 5,
            draw_index: 0,
        };
        let d = draw_features(&s).unwrap();
        let n = (s.p * s.d) as f64;
        let mean = d.omegas.iter().sum::<f64>() / n;
        let var = d.omegas.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        assert!((var.sqrt() - 0.7).abs() < 0.01, "sd = {}", var.sqrt());
    }

    #[test]
    fn expand_constant_columns() {
        let mut d = draw_features(&spec(4, 1, 0)).unwrap();
        d.omegas.fill(0.0);
        d.phases.fill(0.0);
        d.phases[1] = std::f64::consts::PI;
        let z = array![[0.1, -0.2, 0.3], [0.0, 0.5, -0.5]];
        let s = expand(&d, &z.view()).unwrap();
        let amp = (2.0f64 / 4.0).sqrt();
        for i in 0..2 {
            assert!((s[[i, 0]] - amp).abs() < 1e-15);
            assert!((s[[i, 1]] + amp).abs() < 1e-12);
        }
    }

    #[test]
    fn expand_matches_scalar_loop() {
        // [DERIVED] scalar-loop oracle on a random 3x2 input with P=4
        let s = FeatureSpec {
            p: 4,
            d: 2,
            bandwidth_grid: vec![0.9],
            seed: 77,
            draw_index: 0,
        };
        let draw = draw_features(&s).unwrap();
        let z = array![[0.3, -0.1], [-0.4, 0.2], [0.0, 0.45]];
        let fast = expand(&draw, &z.view()).unwrap();
        let scale = (2.0f64 / 4.0).sqrt();
        for i in 0..3 {
            for p in 0..4 {
                let mut dot = 0.0;
                for k in 0..2 {
                    dot += draw.omegas[[p, k]] * z[[i, k]];
                }
                let want = scale * (dot + draw.phases[p]).cos();
                assert!((fast[[i, p]] - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn expand_rejects_dimension_mismatch() {
        let d = draw_features(&spec(4, 1, 0)).unwrap();
        let z = array![[0.1, 0.2]];
        assert!(expand(&d, &z.view()).is_err());
    }

    #[test]
    fn sidecar_roundtrip() {
        let d = draw_features(&spec(8, 11, 3)).unwrap();
        let json = serde_json::to_string(&d.sidecar()).unwrap();
        let sc: FeatureSidecar = serde_json::from_str(&json).unwrap();
        let d2 = sc.regenerate().unwrap();
        assert_eq!(d.omegas, d2.omegas);
        assert_eq!(d.phases, d2.phases);
    }
}
