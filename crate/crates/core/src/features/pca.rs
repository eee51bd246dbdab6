//! Principal component analysis over per-site channel vectors.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Mean-centred linear projection onto the top `k` principal components.
#[derive(Clone, Debug, PartialEq)]
pub struct PcaProjection {
    mean: Vec<f64>,
    /// `k` rows of length `dim`, orthonormal, ordered by decreasing variance.
    basis: Vec<Vec<f64>>,
    explained_variance: Vec<f64>,
}

impl PcaProjection {
    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn components(&self) -> usize {
        self.basis.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    /// Variance of the samples along each retained component.
    pub fn explained_variance(&self) -> &[f64] {
        &self.explained_variance
    }

    /// Scores of one sample.
    pub fn project_vector(&self, x: &[f64]) -> Vec<f64> {
        self.basis
            .iter()
            .map(|b| b.iter().zip(x).zip(&self.mean).map(|((b, x), m)| b * (x - m)).sum())
            .collect()
    }

    /// Projects every spatial site of a tensor; the output has `k` channels.
    pub fn project(&self, t: &Tensor) -> Result<Tensor> {
        if t.channels() != self.input_dim() {
            return Err(Error::Dimension(format!(
                "projection expects {} channels, tensor has {}",
                self.input_dim(),
                t.channels()
            )));
        }
        let n = t.plane_len();
        let mut out = Tensor::zeros(self.components(), t.height(), t.width());
        let mut acc = vec![0.0f64; n];
        for (k, b) in self.basis.iter().enumerate() {
            acc.fill(0.0);
            for (c, (&w, &m)) in b.iter().zip(&self.mean).enumerate() {
                for (a, &v) in acc.iter_mut().zip(t.channel(c)) {
                    *a += w * (v as f64 - m);
                }
            }
            for (o, a) in out.channel_mut(k).iter_mut().zip(&acc) {
                *o = *a as f32;
            }
        }
        Ok(out)
    }
}

/// Fits a PCA on `samples`, a row-major `n x dim` matrix.
///
/// Components are the top-`k` eigenvectors of the (biased) sample covariance.
/// Each component's largest-magnitude coefficient is made positive so the
/// result is deterministic. Fewer than `k` samples is accepted: the surplus
/// components then carry zero variance.
pub fn fit_pca(samples: &[f64], dim: usize, k: usize) -> Result<PcaProjection> {
    if dim == 0 || k == 0 {
        return Err(Error::Argument("PCA needs dim >= 1 and k >= 1".into()));
    }
    if k > dim {
        return Err(Error::Argument(format!(
            "cannot keep {k} components of {dim}-dimensional data"
        )));
    }
    if samples.is_empty() || !samples.len().is_multiple_of(dim) {
        return Err(Error::Dimension(format!(
            "{} values do not form a non-empty n x {dim} sample matrix",
            samples.len()
        )));
    }
    let n = samples.len() / dim;

    let mut mean = vec![0.0f64; dim];
    for row in samples.chunks_exact(dim) {
        for (m, &v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);

    let centred: Vec<f64> = samples
        .chunks_exact(dim)
        .flat_map(|row| row.iter().zip(&mean).map(|(v, m)| v - m))
        .collect();
    let mut cov = vec![0.0f64; dim * dim];
    // SAFETY: `centred` is n x dim row-major; reading it transposed gives the
    // dim x n left operand. `cov` is dim x dim row-major.
    unsafe {
        matrixmultiply::dgemm(
            dim,
            n,
            dim,
            1.0 / n as f64,
            centred.as_ptr(),
            1,
            dim as isize,
            centred.as_ptr(),
            dim as isize,
            1,
            0.0,
            cov.as_mut_ptr(),
            dim as isize,
            1,
        );
    }
    // Symmetrise away rounding asymmetry before the eigensolver.
    for i in 0..dim {
        for j in i + 1..dim {
            let v = 0.5 * (cov[i * dim + j] + cov[j * dim + i]);
            cov[i * dim + j] = v;
            cov[j * dim + i] = v;
        }
    }

    let eig = SymmetricEigen::new(DMatrix::from_row_slice(dim, dim, &cov));
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });

    let mut basis = Vec::with_capacity(k);
    let mut explained_variance = Vec::with_capacity(k);
    for &i in order.iter().take(k) {
        let mut v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        let pivot = v
            .iter()
            .enumerate()
            .fold(0, |best, (j, x)| if x.abs() > v[best].abs() { j } else { best });
        if v[pivot] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        basis.push(v);
        explained_variance.push(eig.eigenvalues[i].max(0.0));
    }
    Ok(PcaProjection {
        mean,
        basis,
        explained_variance,
    })
}

/// Fits a PCA whose samples are the spatial sites of `t` (one channel vector each).
pub fn fit_pca_sites(t: &Tensor, k: usize) -> Result<PcaProjection> {
    let (c, h, w) = t.shape();
    let mut samples = vec![0.0f64; h * w * c];
    for ch in 0..c {
        for (site, &v) in t.channel(ch).iter().enumerate() {
            samples[site * c + ch] = v as f64;
        }
    }
    fit_pca(&samples, c, k)
}
