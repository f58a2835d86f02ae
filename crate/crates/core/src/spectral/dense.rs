//! Full eigendecomposition of the symmetrised generator.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::glauber::{assemble_dense_sym, SiteChain};

/// Eigenpairs of `−ℒ_sym` in ascending order, with the stationary mode marked.
#[derive(Debug, Clone)]
pub struct DenseSpectrum {
    pub values: Vec<f64>,
    /// Column `k` is the unit eigenvector for `values[k]`.
    pub vectors: DMatrix<f64>,
    pub sqrt_pi: Vec<f64>,
    /// Index of the eigenvector closest to `√π`.
    pub stationary: usize,
}

impl DenseSpectrum {
    pub fn new(chain: &impl SiteChain, pi: &[f64]) -> Result<Self> {
        let a = assemble_dense_sym(chain)?;
        if pi.len() != a.nrows() {
            return Err(Error::BadParams(format!(
                "stationary law has {} entries, need {}",
                pi.len(),
                a.nrows()
            )));
        }
        let eig = SymmetricEigen::new(a);
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = eig.eigenvectors.select_columns(&order);
        let sqrt_pi: Vec<f64> = pi.iter().map(|p| p.sqrt()).collect();
        let d = DVector::from_column_slice(&sqrt_pi);
        let stationary = (0..values.len())
            .max_by(|&i, &j| {
                let oi = vectors.column(i).dot(&d).abs();
                let oj = vectors.column(j).dot(&d).abs();
                oi.total_cmp(&oj)
            })
            .unwrap_or(0);
        Ok(DenseSpectrum {
            values,
            vectors,
            sqrt_pi,
            stationary,
        })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Smallest eigenvalue other than the stationary one, and its index.
    pub fn gap(&self) -> (f64, usize) {
        let k = if self.stationary == 0 { 1 } else { 0 };
        if k >= self.dim() {
            return (f64::INFINITY, k);
        }
        (self.values[k], k)
    }

    /// `P_t f = D^{-1/2} Q e^{-tΛ} Qᵀ D^{1/2} f`.
    pub fn propagate(&self, f: &[f64], t: f64) -> Vec<f64> {
        let g = DVector::from_iterator(self.dim(), f.iter().zip(&self.sqrt_pi).map(|(a, s)| a * s));
        let mut c = self.vectors.tr_mul(&g);
        for (k, ck) in c.iter_mut().enumerate() {
            *ck *= (-t * self.values[k]).exp();
        }
        let out = &self.vectors * c;
        out.iter().zip(&self.sqrt_pi).map(|(a, s)| a / s).collect()
    }

    /// `max_σ Σ_σ' |P_t(σ, σ') − π(σ')|`, i.e. `max_σ ‖h_t^σ − 1‖_{L¹(π)}`.
    pub fn mixing_distance(&self, t: f64) -> f64 {
        let dim = self.dim();
        let mut w = self.vectors.clone();
        for k in 0..dim {
            let s = if k == self.stationary {
                0.0
            } else {
                (-t * self.values[k]).exp()
            };
            w.column_mut(k).scale_mut(s);
        }
        let kmat = w * self.vectors.transpose();
        let mut worst = 0.0f64;
        for s in 0..dim {
            let mut acc = 0.0;
            for s2 in 0..dim {
                acc += (self.sqrt_pi[s2] / self.sqrt_pi[s] * kmat[(s, s2)]).abs();
            }
            worst = worst.max(acc);
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Coin;

    impl SiteChain for Coin {
        fn sites(&self) -> usize {
            1
        }
        fn prob_plus(&self, _: u64, _: usize) -> f64 {
            0.5
        }
    }

    #[test]
    fn two_state_spectrum() {
        let s = DenseSpectrum::new(&Coin, &[0.5, 0.5]).unwrap();
        assert!(s.values[0].abs() < 1e-14);
        assert!((s.gap().0 - 1.0).abs() < 1e-14);
        for t in [0.1, 1.0, 3.0] {
            assert!((s.mixing_distance(t) - (-t).exp()).abs() < 1e-13);
        }
        let p = s.propagate(&[-1.0, 1.0], 2.0);
        assert!((p[1] - (-2.0f64).exp()).abs() < 1e-13);
    }
}
