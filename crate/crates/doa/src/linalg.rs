//! Hermitian eigendecomposition and the small matrix helpers the estimators
//! lean on.
//!
//! Every covariance inversion in the crate funnels through
//! [`HermitianEigen`], so the reconstruction and orthonormality guarantees
//! asserted here carry over to the estimators built on top.

use crate::{CMat, CVec, DoaError, Result, C64};

/// Relative Frobenius tolerance for accepting a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues are real and sorted descending; eigenvectors are the matching
/// orthonormal columns, so `R = V diag(values) V^H`.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Eigenvalues, descending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors, one column per eigenvalue.
    pub vectors: CMat,
}

impl HermitianEigen {
    /// Decomposes `r`, which must be Hermitian within [`HERMITIAN_TOL`]
    /// (relative Frobenius).
    pub fn new(r: &CMat) -> Result<Self> {
        if r.nrows() != r.ncols() {
            return Err(DoaError::Dimension(format!(
                "eigendecomposition needs a square matrix, got {}x{}",
                r.nrows(),
                r.ncols()
            )));
        }
        if !is_hermitian(r, HERMITIAN_TOL) {
            return Err(DoaError::Numerical(
                "matrix is not Hermitian within tolerance".into(),
            ));
        }
        // Symmetrize first so roundoff in the strictly-upper part cannot leak
        // imaginary components into the eigenvalues.
        let h = hermitian_part(r);
        let se = nalgebra::SymmetricEigen::new(h);
        let n = se.eigenvalues.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| se.eigenvalues[j].partial_cmp(&se.eigenvalues[i]).unwrap());
        let values: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
        let mut vectors = CMat::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            vectors.set_column(dst, &se.eigenvectors.column(src));
        }
        Ok(Self { values, vectors })
    }

    /// Rebuilds `V f(λ) V^H` for a scalar spectral map `f`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> CMat {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (j, &v) in self.values.iter().enumerate() {
            let s = C64::new(f(v), 0.0);
            for i in 0..n {
                scaled[(i, j)] *= s;
            }
        }
        let out = &scaled * self.vectors.adjoint();
        hermitian_part(&out)
    }

    /// Largest eigenvalue magnitude.
    pub fn spectral_radius(&self) -> f64 {
        self.values
            .iter()
            .fold(0.0f64, |acc, &v| acc.max(v.abs()))
    }
}

/// `(A + A^H) / 2`, exact fixed point for Hermitian input.
pub fn hermitian_part(a: &CMat) -> CMat {
    let n = a.nrows();
    let mut out = CMat::zeros(n, n);
    for i in 0..n {
        out[(i, i)] = C64::new(a[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let v = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            out[(i, j)] = v;
            out[(j, i)] = v.conj();
        }
    }
    out
}

/// Checks `‖A − A^H‖_F ≤ tol·max(‖A‖_F, 1)`.
pub fn is_hermitian(a: &CMat, tol: f64) -> bool {
    if a.nrows() != a.ncols() {
        return false;
    }
    let diff = (a - a.adjoint()).norm();
    diff <= tol * a.norm().max(1.0)
}

/// Hermitian quadratic form `x^H A x`, returned as its real part.
pub fn quad_form(a: &CMat, x: &CVec) -> f64 {
    (x.adjoint() * a * x)[(0, 0)].re
}

/// Unit-gain minimum-variance weight `B a / (a^H B a)` for a Hermitian `B`.
///
/// Returns `None` when the normalizer is non-positive or non-finite, which
/// callers treat as a per-angle numerical fault.
pub fn mv_weight(b: &CMat, a: &CVec) -> Option<CVec> {
    let ba = b * a;
    let denom = a.dotc(&ba).re;
    if !(denom.is_finite() && denom > 0.0) {
        return None;
    }
    Some(ba / C64::new(denom, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;

    fn random_hermitian(n: usize, seed: u64) -> CMat {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let a = CMat::from_fn(n, n, |_, _| {
            C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        hermitian_part(&a)
    }

    #[test]
    fn eigen_reconstructs_and_is_orthonormal() {
        for seed in 0..5 {
            let n = 16;
            let h = random_hermitian(n, seed);
            let eig = HermitianEigen::new(&h).unwrap();
            let recon = eig.map_spectrum(|x| x);
            assert!((&recon - &h).norm() <= 1e-9 * h.norm().max(1.0));
            let gram = eig.vectors.adjoint() * &eig.vectors;
            let eye = CMat::identity(n, n);
            assert!((&gram - &eye).norm() <= 1e-10);
            for w in eig.values.windows(2) {
                assert!(w[0] >= w[1]);
            }
        }
    }

    #[test]
    fn eigen_rejects_non_hermitian() {
        let mut h = random_hermitian(4, 9);
        h[(0, 1)] += C64::new(0.5, 0.0);
        assert!(HermitianEigen::new(&h).is_err());
    }

    #[test]
    fn mv_weight_has_unit_gain() {
        let n = 8;
        let h = random_hermitian(n, 3);
        let eig = HermitianEigen::new(&h).unwrap();
        let b = eig.map_spectrum(|x| x.abs() + 0.5);
        let a = CVec::from_fn(n, |i, _| C64::new(1.0, i as f64 * 0.1));
        let w = mv_weight(&b, &a).unwrap();
        let gain = w.dotc(&a);
        assert!((gain.re - 1.0).abs() < 1e-12 && gain.im.abs() < 1e-12);
    }
}
