//! Shared instance generation for the benchmark suite.

use ndarray::Array2;
use rand::Rng;

/// Dense random factor matrix at a fixed seed, for benchmarking only.
pub fn bench_instance(t: usize, p: usize, seed: u64) -> Array2<f64> {
    let mut rng = sdf_core::seed::rng(seed, 0xBE, 0);
    let mut f = Array2::<f64>::zeros((t, p));
    for v in f.iter_mut() {
        *v = rng.gen_range(-1.0..1.0);
    }
    f
}
