//! Fixtures shared by the benchmarks.

use sparse_rank::harness::{generate, DistConfig, Model, SpecConfig};
use sparse_rank::{ModelSpec, SparseMatrix};

/// Poisson(d) variable degrees, fixed check degree k.
pub fn poisson_spec(d: f64, k: u32, q: u32) -> ModelSpec {
    SpecConfig {
        ddist: DistConfig::Poisson { mean: d, tol: 1e-12 },
        kdist: DistConfig::Fixed { value: k },
        q,
        chi: None,
    }
    .build()
    .expect("valid spec")
}

/// One simple-model sample with n columns.
pub fn sample(spec: &ModelSpec, n: usize, seed: u64) -> SparseMatrix {
    generate(spec, n, seed, Model::Simple, None).expect("sample").1
}
