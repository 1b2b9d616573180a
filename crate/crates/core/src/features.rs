//! Precomputed state feature tables `φ: S → ℝ^d` with `‖φ(s)‖ ≤ 1`.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
#[allow(unused_imports)] // float math for no_std; unused when std is linked
use num_traits::Float;

use crate::error::{param_err, Result};
use crate::linalg::{dot, norm, rank};

/// Slack allowed on the unit-norm bound.
pub const NORM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    CenteredOnehot,
    RandomBounded,
    Custom,
}

impl FeatureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::CenteredOnehot => "centered_onehot",
            FeatureKind::RandomBounded => "random_bounded",
            FeatureKind::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    n_states: usize,
    dim: usize,
    /// Row `s` is `φ(s)`.
    table: Vec<f64>,
    kind: FeatureKind,
}

impl FeatureMap {
    /// Wraps a user table (row-major, `n_states × dim`).
    pub fn custom(n_states: usize, dim: usize, table: Vec<f64>) -> Result<Self> {
        Self::with_kind(n_states, dim, table, FeatureKind::Custom)
    }

    pub fn with_kind(n_states: usize, dim: usize, table: Vec<f64>, kind: FeatureKind) -> Result<Self> {
        if n_states == 0 || dim == 0 {
            return Err(param_err!("feature table needs positive shape, got {n_states}x{dim}"));
        }
        if table.len() != n_states * dim {
            return Err(param_err!("feature table has {} entries, expected {}", table.len(), n_states * dim));
        }
        if table.iter().any(|v| !v.is_finite()) {
            return Err(param_err!("feature table contains non-finite values"));
        }
        for (s, row) in table.chunks(dim).enumerate() {
            let n = norm(row);
            if n > 1.0 + NORM_TOLERANCE {
                return Err(param_err!("feature row {s} has norm {n} > 1"));
            }
        }
        Ok(Self {
            n_states,
            dim,
            table,
            kind,
        })
    }

    pub fn from_nested(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(param_err!("feature rows have unequal lengths"));
        }
        Self::custom(rows.len(), dim, rows.concat())
    }

    /// Unit-norm centered indicators written in an orthonormal (Helmert)
    /// basis of the mean-zero subspace, so `d = n − 1`.
    ///
    /// Row `s` is the projection of `e_s` onto `1^⊥` scaled to unit length.
    /// The rows sum to zero and the table has full column rank, so the span is
    /// exactly the mean-zero vectors. For `n = 2` this is the map `(+1, −1)`.
    pub fn centered_onehot(n_states: usize) -> Result<Self> {
        if n_states < 2 {
            return Err(param_err!("centered one-hot features need at least 2 states"));
        }
        let n = n_states as f64;
        let dim = n_states - 1;
        let scale = 1.0 / (1.0 - 1.0 / n).sqrt();
        let mut table = vec![0.0; n_states * dim];
        // Basis vector k (1-based) is (1, .., 1, −k, 0, ..) / sqrt(k(k+1)) with k ones.
        for k in 1..n_states {
            let norm_k = ((k * (k + 1)) as f64).sqrt();
            for s in 0..k {
                table[s * dim + (k - 1)] = scale / norm_k;
            }
            table[k * dim + (k - 1)] = -(k as f64) * scale / norm_k;
        }
        Self::with_kind(n_states, dim, table, FeatureKind::CenteredOnehot)
    }

    /// Plain one-hot features. These keep the constant direction, so `A_θ` is
    /// singular for them.
    pub fn onehot(n_states: usize) -> Result<Self> {
        let mut table = vec![0.0; n_states * n_states];
        for s in 0..n_states {
            table[s * n_states + s] = 1.0;
        }
        Self::custom(n_states, n_states, table)
    }

    /// Standard normal rows scaled to unit norm.
    pub fn random_bounded(n_states: usize, dim: usize, seed: u64) -> Result<Self> {
        if n_states == 0 || dim == 0 {
            return Err(param_err!("random features need positive shape, got {n_states}x{dim}"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut table = vec![0.0; n_states * dim];
        for row in table.chunks_mut(dim) {
            loop {
                for x in row.iter_mut() {
                    *x = StandardNormal.sample(&mut rng);
                }
                let n = norm(row);
                if n > 0.0 {
                    row.iter_mut().for_each(|x| *x /= n);
                    break;
                }
            }
        }
        Self::with_kind(n_states, dim, table, FeatureKind::RandomBounded)
    }

    /// The scalar map `φ(0) = +1`, `φ(1) = −1` used with the two-state fixture.
    pub fn two_state_scalar() -> Self {
        Self::custom(2, 1, vec![1.0, -1.0]).expect("fixture is well formed")
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn nested(&self) -> Vec<Vec<f64>> {
        self.table.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    /// `φ(s)`.
    pub fn phi(&self, s: usize) -> Result<&[f64]> {
        if s >= self.n_states {
            return Err(param_err!("state {s} out of range (n_states = {})", self.n_states));
        }
        Ok(self.row(s))
    }

    /// Unchecked `φ(s)`; panics when `s` is out of range.
    #[inline]
    pub fn row(&self, s: usize) -> &[f64] {
        &self.table[s * self.dim..(s + 1) * self.dim]
    }

    /// `φ(s)ᵀ ω`.
    #[inline]
    pub fn value(&self, s: usize, omega: &[f64]) -> f64 {
        dot(self.row(s), omega)
    }

    pub fn as_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n_states, self.dim, &self.table)
    }

    pub fn rank(&self) -> usize {
        rank(&self.as_matrix(), 1e-10)
    }

    /// `‖tableᵀ 1‖`, zero when the rows sum to the zero vector.
    pub fn column_sum_norm(&self) -> f64 {
        let mut sums = vec![0.0; self.dim];
        for s in 0..self.n_states {
            for (acc, x) in sums.iter_mut().zip(self.row(s)) {
                *acc += x;
            }
        }
        norm(&sums)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn centered_two_states() {
        let map = FeatureMap::centered_onehot(2).unwrap();
        assert_eq!(map.dim(), 1);
        assert!((map.phi(0).unwrap()[0] - 1.0).abs() < 1e-15);
        assert!((map.phi(1).unwrap()[0] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn centered_rows_unit_and_mean_zero() {
        for n in 2..12 {
            let map = FeatureMap::centered_onehot(n).unwrap();
            for s in 0..n {
                assert!((norm(map.row(s)) - 1.0).abs() <= 1e-12);
            }
            assert!(map.column_sum_norm() <= 1e-10);
            assert_eq!(map.dim(), n - 1);
            assert_eq!(map.rank(), n - 1);
            // Gram matrix of centered indicators: 1 on the diagonal, −1/(n−1) off it.
            for s in 0..n {
                for u in 0..n {
                    let expect = if s == u { 1.0 } else { -1.0 / (n as f64 - 1.0) };
                    assert!((dot(map.row(s), map.row(u)) - expect).abs() <= 1e-12);
                }
            }
        }
        assert!(FeatureMap::centered_onehot(1).is_err());
    }

    #[test]
    fn random_rows_are_unit_and_reproducible() {
        let a = FeatureMap::random_bounded(5, 2, 3).unwrap();
        let b = FeatureMap::random_bounded(5, 2, 3).unwrap();
        assert_eq!(a, b);
        for s in 0..5 {
            assert!((norm(a.row(s)) - 1.0).abs() <= 1e-12);
        }
        assert_eq!(FeatureMap::random_bounded(5, 5, 1).unwrap().rank(), 5);
    }

    #[test]
    fn scalar_fixture_and_lookup() {
        let map = FeatureMap::two_state_scalar();
        assert_eq!(map.phi(0).unwrap(), &[1.0]);
        assert_eq!(map.phi(1).unwrap(), &[-1.0]);
        assert!(map.phi(2).is_err());
        let c3 = FeatureMap::centered_onehot(3).unwrap();
        assert_eq!(c3.phi(0).unwrap(), &c3.table()[0..2]);
    }

    #[test]
    fn oversized_rows_rejected() {
        assert!(FeatureMap::custom(1, 2, vec![1.0, 0.1]).is_err());
        assert!(FeatureMap::custom(1, 2, vec![0.6, 0.8]).is_ok());
    }

    proptest! {
        #[test]
        fn constructors_respect_norm_bound(n in 1usize..12, d in 1usize..6, seed in 0u64..1000) {
            let map = FeatureMap::random_bounded(n, d, seed).unwrap();
            for s in 0..n { prop_assert!(norm(map.row(s)) <= 1.0 + 1e-12); }
            if n >= 2 {
                let c = FeatureMap::centered_onehot(n).unwrap();
                for s in 0..n { prop_assert!(norm(c.row(s)) <= 1.0 + 1e-12); }
            }
        }
    }
}
