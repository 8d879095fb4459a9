//! Covariance bookkeeping shared by every estimator variant.
//!
//! Holds the exponentially weighted sample covariance and its regularized
//! inverse, forward/backward averaging (FBA) smoothing, and the
//! matrix-inversion-lemma recursions that track covariance inverses without
//! explicit inversion.
//!
//! FBA smoothing `½(R + Π R* Π)` is the projection of a Hermitian matrix onto
//! the persymmetric cone; it is idempotent and decorrelates coherent source
//! pairs on a uniform linear array. Its fixed-point and oracle behavior is
//! what the test suite pins down.

use crate::linalg::{hermitian_part, is_hermitian, HermitianEigen, HERMITIAN_TOL};
use crate::{CMat, CVec, DoaError, Result, C64};

/// Condition-number threshold separating direct inversion from the
/// pseudoinverse fallback.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Diagonal loading policy for covariance inversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Loading {
    /// No loading; singular matrices fall back to the pseudoinverse.
    Zero,
    /// Absolute loading `γ` added to the diagonal.
    Fixed(f64),
    /// Loading proportional to the mean diagonal power, `scale·tr(R)/M`.
    /// Keeps the spectrum invariant under data rescaling.
    RelativeTrace(f64),
}

impl Loading {
    /// Default policy: `10⁻³·tr(R)/M`.
    pub const AUTO: Loading = Loading::RelativeTrace(1e-3);

    /// Resolves the policy to a concrete `γ` for a given matrix.
    pub fn gamma(&self, r: &CMat) -> f64 {
        match *self {
            Loading::Zero => 0.0,
            Loading::Fixed(g) => g,
            Loading::RelativeTrace(scale) => {
                let m = r.nrows().max(1) as f64;
                let trace: f64 = (0..r.nrows()).map(|i| r[(i, i)].re).sum();
                scale * trace / m
            }
        }
    }
}

/// Which branch produced an inverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InverseRoute {
    /// Well-conditioned `(R + γI)⁻¹`.
    Loaded,
    /// Moore-Penrose pseudoinverse of `R` itself.
    Pseudo,
}

/// `(R + γI)⁻¹` when well conditioned, otherwise the pseudoinverse of `R`.
///
/// The input must be Hermitian within tolerance. The result is Hermitian by
/// construction either way.
pub fn regularized_inverse(r: &CMat, gamma: f64) -> Result<(CMat, InverseRoute)> {
    if r.nrows() != r.ncols() {
        return Err(DoaError::Dimension("covariance must be square".into()));
    }
    if !is_hermitian(r, HERMITIAN_TOL) {
        return Err(DoaError::Numerical(
            "regularized_inverse expects a Hermitian matrix".into(),
        ));
    }
    if gamma < 0.0 || !gamma.is_finite() {
        return Err(DoaError::Domain(format!("loading must be >= 0, got {gamma}")));
    }
    let m = r.nrows();
    let loaded = r + CMat::identity(m, m) * C64::new(gamma, 0.0);
    let eig = HermitianEigen::new(&loaded)?;
    let max = eig.spectral_radius();
    let min = eig.values[m - 1];
    if min > 0.0 && max / min < CONDITION_LIMIT {
        return Ok((eig.map_spectrum(|v| 1.0 / v), InverseRoute::Loaded));
    }
    // Rank-revealing pseudoinverse of the unloaded matrix.
    let eig = if gamma == 0.0 { eig } else { HermitianEigen::new(r)? };
    let cutoff = eig.spectral_radius() * m as f64 * f64::EPSILON;
    let pinv = eig.map_spectrum(|v| if v.abs() > cutoff { 1.0 / v } else { 0.0 });
    Ok((pinv, InverseRoute::Pseudo))
}

/// Exponentially weighted covariance `R(i) = α·R(i-1) + x(i)x(i)^H`.
#[derive(Debug, Clone)]
pub struct CovarianceState {
    r_hat: CMat,
    alpha: f64,
    count: usize,
}

impl CovarianceState {
    /// Fresh state `R(0) = initial_diag·I`.
    ///
    /// Batch processing starts from zero; matched comparisons against the RLS
    /// recursion start from `δ⁻¹·I`.
    pub fn new(dim: usize, alpha: f64, initial_diag: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(DoaError::Domain(format!(
                "forgetting factor must lie in (0, 1], got {alpha}"
            )));
        }
        if initial_diag < 0.0 || !initial_diag.is_finite() {
            return Err(DoaError::Domain("initial diagonal must be >= 0".into()));
        }
        Ok(Self {
            r_hat: CMat::identity(dim, dim) * C64::new(initial_diag, 0.0),
            alpha,
            count: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.r_hat.nrows()
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn matrix(&self) -> &CMat {
        &self.r_hat
    }

    /// Applies one update. The Hermitian structure is preserved exactly by
    /// writing conjugate pairs.
    pub fn update(&mut self, x: &CVec) -> Result<()> {
        self.update_weighted(x, 1.0)
    }

    /// Update with an extra weight on the outer product: `R ← αR + w·xx^H`.
    ///
    /// Forward/backward averaging feeds the mirrored snapshot with `w = ½`.
    pub fn update_weighted(&mut self, x: &CVec, weight: f64) -> Result<()> {
        self.decay();
        self.add_outer(x, weight)?;
        self.count += 1;
        Ok(())
    }

    /// One forward/backward averaged update:
    /// `R ← αR + ½(x_f x_f^H + x_b x_b^H)`.
    ///
    /// The two outer products are averaged element-wise before the single
    /// accumulation, so when `x_b` equals `x_f` (conjugate-centrosymmetric
    /// snapshots) the update is bit-identical to [`CovarianceState::update`].
    pub fn update_forward_backward(&mut self, x_f: &CVec, x_b: &CVec) -> Result<()> {
        let m = self.dim();
        if x_f.len() != m || x_b.len() != m {
            return Err(DoaError::Dimension(format!(
                "snapshots have lengths {} and {}, covariance is {m}x{m}",
                x_f.len(),
                x_b.len()
            )));
        }
        self.decay();
        for i in 0..m {
            let d = 0.5 * (x_f[i].norm_sqr() + x_b[i].norm_sqr());
            self.r_hat[(i, i)] += C64::new(d, 0.0);
            for j in (i + 1)..m {
                let v = (x_f[i] * x_f[j].conj() + x_b[i] * x_b[j].conj()) * 0.5;
                self.r_hat[(i, j)] += v;
                self.r_hat[(j, i)] += v.conj();
            }
        }
        self.count += 1;
        Ok(())
    }

    /// Adds `w·xx^H` without applying the forgetting factor. Used to fold the
    /// mirrored half of a forward/backward pair into the same time step.
    pub fn add_outer(&mut self, x: &CVec, weight: f64) -> Result<()> {
        let m = self.dim();
        if x.len() != m {
            return Err(DoaError::Dimension(format!(
                "snapshot has length {}, covariance is {m}x{m}",
                x.len()
            )));
        }
        for i in 0..m {
            let xi = x[i];
            self.r_hat[(i, i)] += C64::new(weight * xi.norm_sqr(), 0.0);
            for j in (i + 1)..m {
                let v = xi * x[j].conj() * weight;
                self.r_hat[(i, j)] += v;
                self.r_hat[(j, i)] += v.conj();
            }
        }
        Ok(())
    }

    fn decay(&mut self) {
        if self.alpha != 1.0 {
            let alpha = C64::new(self.alpha, 0.0);
            self.r_hat.iter_mut().for_each(|v| *v *= alpha);
        }
    }
}

/// Exchange matrix `Π_M`: ones on the antidiagonal.
pub fn exchange_matrix(m: usize) -> CMat {
    CMat::from_fn(m, m, |i, j| {
        if i + j == m - 1 {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Mirrored conjugate snapshot `Π x*`.
pub fn mirror_conjugate(x: &CVec) -> CVec {
    let m = x.len();
    CVec::from_fn(m, |i, _| x[m - 1 - i].conj())
}

/// `Π A* Π` without materializing the exchange matrix.
fn exchanged_conjugate(a: &CMat) -> CMat {
    let m = a.nrows();
    CMat::from_fn(m, m, |i, j| a[(m - 1 - i, m - 1 - j)].conj())
}

/// Forward/backward average `½(R + Π R* Π)`.
///
/// Output is Hermitian and persymmetric; persymmetric inputs pass through
/// unchanged.
pub fn fba_smooth(r: &CMat) -> Result<CMat> {
    if r.nrows() != r.ncols() {
        return Err(DoaError::Dimension("FBA smoothing needs a square matrix".into()));
    }
    if !is_hermitian(r, HERMITIAN_TOL) {
        return Err(DoaError::Numerical("FBA smoothing expects a Hermitian matrix".into()));
    }
    let smoothed = (r + exchanged_conjugate(r)) * C64::new(0.5, 0.0);
    Ok(hermitian_part(&smoothed))
}

/// Checks `Π A* Π = A` within a relative Frobenius tolerance.
pub fn is_persymmetric(a: &CMat, tol: f64) -> bool {
    if a.nrows() != a.ncols() {
        return false;
    }
    let diff = (a - exchanged_conjugate(a)).norm();
    diff <= tol * a.norm().max(1.0)
}

/// Inverse-covariance state advanced by the matrix inversion lemma.
///
/// `phi(0) = δ·I`, so after `i` regular updates `phi` is the exact inverse of
/// `α^i δ⁻¹ I + Σ_l α^{i-l} x(l) x(l)^H`.
#[derive(Debug, Clone)]
pub struct InverseState {
    phi: CMat,
    alpha: f64,
    delta: f64,
}

impl InverseState {
    pub fn new(dim: usize, alpha: f64, delta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(DoaError::Domain(format!(
                "forgetting factor must lie in (0, 1], got {alpha}"
            )));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(DoaError::Domain(format!(
                "inverse initialization must be positive, got {delta}"
            )));
        }
        Ok(Self {
            phi: CMat::identity(dim, dim) * C64::new(delta, 0.0),
            alpha,
            delta,
        })
    }

    pub fn dim(&self) -> usize {
        self.phi.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.phi
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Rank-one update with the state's forgetting factor. Returns the gain
    /// vector `k(i)`.
    pub fn update(&mut self, x: &CVec) -> Result<CVec> {
        self.update_with_forgetting(x, self.alpha)
    }

    /// Rank-one update with an explicit forgetting factor.
    ///
    /// The forward/backward pair of a smoothed update reuses this with the
    /// factor applied once: `(x_f/√2, α)` then `(x_b/√2, 1)`.
    ///
    /// On breakdown (non-positive denominator) the state is left untouched
    /// and a fault is reported.
    pub fn update_with_forgetting(&mut self, x: &CVec, forget: f64) -> Result<CVec> {
        let m = self.dim();
        if x.len() != m {
            return Err(DoaError::Dimension(format!(
                "snapshot has length {}, inverse state is {m}x{m}",
                x.len()
            )));
        }
        if !(forget > 0.0 && forget <= 1.0) {
            return Err(DoaError::Domain(format!(
                "forgetting factor must lie in (0, 1], got {forget}"
            )));
        }
        let inv_forget = 1.0 / forget;
        let phi_x = &self.phi * x;
        let denom = 1.0 + inv_forget * x.dotc(&phi_x).re;
        if !(denom.is_finite() && denom > 0.0) {
            return Err(DoaError::Numerical(format!(
                "inversion-lemma breakdown: denominator {denom}"
            )));
        }
        let gain = phi_x.map(|v| v * (inv_forget / denom));
        // phi ← forget⁻¹·(phi − k·(phi x)^H), then re-symmetrized: the lemma
        // is exact in exact arithmetic but drifts over long runs otherwise.
        let mut next = &self.phi - &gain * phi_x.adjoint();
        next *= C64::new(inv_forget, 0.0);
        self.phi = hermitian_part(&next);
        Ok(gain)
    }
}

/// Route taken by an FBA inverse computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FbaRoute {
    /// Two-sided correction with one Hermitian solve.
    Correction,
    /// Inner term was not positive definite; the smoothed covariance was
    /// inverted directly instead.
    DirectFallback,
}

/// Inverse of the FBA-smoothed covariance, computed from the inverse `Φ` of
/// the unsmoothed covariance.
///
/// Uses `Φ_fb = 2[Φ − Φ(Φ + ΠΦ*Π)⁻¹Φ]`, which is algebraically exact:
/// `½(R + ΠR*Π)` has inverse `2(A + B)⁻¹` with `A⁻¹ = Φ`, `B⁻¹ = ΠΦ*Π`, and
/// the two-PD-term identity `(A+B)⁻¹ = A⁻¹ − A⁻¹(A⁻¹+B⁻¹)⁻¹A⁻¹` applies.
pub fn fba_inverse_full(phi: &CMat) -> Result<(CMat, FbaRoute)> {
    if !is_hermitian(phi, HERMITIAN_TOL) {
        return Err(DoaError::Numerical("FBA inverse expects a Hermitian matrix".into()));
    }
    let inner = hermitian_part(&(phi + exchanged_conjugate(phi)));
    if let Some(chol) = inner.clone().cholesky() {
        let solved = chol.solve(phi); // (Φ + ΠΦ*Π)⁻¹ Φ
        let corrected = (phi - phi * solved) * C64::new(2.0, 0.0);
        return Ok((hermitian_part(&corrected), FbaRoute::Correction));
    }
    // Inner term lost positive definiteness; invert the smoothed covariance
    // directly and report the fallback.
    let (r, _) = regularized_inverse(phi, 0.0)?;
    let smoothed = fba_smooth(&r)?;
    let (out, _) = regularized_inverse(&smoothed, 0.0)?;
    Ok((out, FbaRoute::DirectFallback))
}

/// Reduced-space counterpart of [`fba_inverse_full`].
///
/// The backward term of the reduced covariance is not recoverable from
/// `(Φ̄, T)` alone, so it is modeled by the conjugate covariance weighted by
/// the per-column energy of the projected exchange, `c = ‖Π^H T‖_F²/r`:
/// the result inverts `½(R̄ + c·R̄*)` with `R̄ = Φ̄⁻¹`. For rank-reduction
/// matrices with conjugate-centrosymmetric unit-norm columns this equals the
/// exact inverse of `T^H R_fb T`.
pub fn fba_inverse_reduced(phi_bar: &CMat, t: &CMat) -> Result<(CMat, FbaRoute)> {
    let r = phi_bar.nrows();
    if t.ncols() != r {
        return Err(DoaError::Dimension(format!(
            "rank-reduction matrix has {} columns, reduced inverse is {r}x{r}",
            t.ncols()
        )));
    }
    if !is_hermitian(phi_bar, HERMITIAN_TOL) {
        return Err(DoaError::Numerical("FBA inverse expects a Hermitian matrix".into()));
    }
    // ‖Π^H T‖_F = ‖T‖_F since the exchange matrix is unitary.
    let c = t.norm_squared() / r as f64;
    let (r_bar, _) = regularized_inverse(phi_bar, 0.0)?;
    let mixed = (&r_bar + r_bar.map(|z| z.conj()) * C64::new(c, 0.0)) * C64::new(0.5, 0.0);
    let smoothed = hermitian_part(&mixed);
    if let Some(chol) = smoothed.clone().cholesky() {
        let eye = CMat::identity(r, r);
        return Ok((hermitian_part(&chol.solve(&eye)), FbaRoute::Correction));
    }
    let (out, _) = regularized_inverse(&smoothed, 0.0)?;
    Ok((out, FbaRoute::DirectFallback))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_vec(rng: &mut ChaCha8Rng, m: usize) -> CVec {
        CVec::from_fn(m, |_, _| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
    }

    fn random_pd(rng: &mut ChaCha8Rng, m: usize) -> CMat {
        let a = CMat::from_fn(m, m, |_, _| {
            C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        hermitian_part(&(&a * a.adjoint())) + CMat::identity(m, m) * C64::new(0.3, 0.0)
    }

    #[test]
    fn covariance_single_outer_product() {
        let mut st = CovarianceState::new(3, 1.0, 0.0).unwrap();
        let e1 = CVec::from_fn(3, |i, _| C64::new(if i == 0 { 1.0 } else { 0.0 }, 0.0));
        st.update(&e1).unwrap();
        let mut expect = CMat::zeros(3, 3);
        expect[(0, 0)] = C64::new(1.0, 0.0);
        assert!((st.matrix() - expect).norm() < 1e-15);
        assert_eq!(st.count(), 1);
    }

    #[test]
    fn covariance_pure_decay() {
        let mut st = CovarianceState::new(2, 0.5, 1.0).unwrap();
        st.update(&CVec::zeros(2)).unwrap();
        let expect = CMat::identity(2, 2) * C64::new(0.5, 0.0);
        assert!((st.matrix() - expect).norm() < 1e-15);
    }

    #[test]
    fn recursive_covariance_matches_batch_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &(alpha, n) in &[(1.0, 40usize), (0.97, 1000usize)] {
            let m = 5;
            let mut st = CovarianceState::new(m, alpha, 0.0).unwrap();
            let xs: Vec<CVec> = (0..n).map(|_| random_vec(&mut rng, m)).collect();
            for x in &xs {
                st.update(x).unwrap();
            }
            let mut batch = CMat::zeros(m, m);
            for (l, x) in xs.iter().enumerate() {
                let w = alpha.powi((n - 1 - l) as i32);
                batch += (x * x.adjoint()) * C64::new(w, 0.0);
            }
            let rel = (st.matrix() - &batch).norm() / batch.norm();
            assert!(rel < 1e-12, "alpha={alpha} n={n} rel={rel:.2e}");
            assert!(is_hermitian(st.matrix(), 1e-12));
        }
    }

    #[test]
    fn regularized_inverse_of_scalar_matrix() {
        let r = CMat::identity(3, 3) * C64::new(2.0, 0.0);
        let (inv, route) = regularized_inverse(&r, 0.0).unwrap();
        assert_eq!(route, InverseRoute::Loaded);
        assert!((inv - CMat::identity(3, 3) * C64::new(0.5, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn regularized_inverse_applies_diagonal_loading() {
        let mut r = CMat::zeros(2, 2);
        r[(0, 0)] = C64::new(1.0, 0.0);
        let (inv, route) = regularized_inverse(&r, 0.1).unwrap();
        assert_eq!(route, InverseRoute::Loaded);
        assert!((inv[(0, 0)].re - 1.0 / 1.1).abs() < 1e-12);
        assert!((inv[(1, 1)].re - 10.0).abs() < 1e-10);
        assert!(inv[(0, 1)].norm() < 1e-14);
    }

    #[test]
    fn rank_deficient_matrix_gets_a_penrose_pseudoinverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        // Rank-3 PSD 6x6.
        let b = CMat::from_fn(6, 3, |_, _| {
            C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        let r = hermitian_part(&(&b * b.adjoint()));
        let (x, route) = regularized_inverse(&r, 0.0).unwrap();
        assert_eq!(route, InverseRoute::Pseudo);
        let rxr = &r * &x * &r;
        assert!((&rxr - &r).norm() < 1e-9 * r.norm());
        let xrx = &x * &r * &x;
        assert!((&xrx - &x).norm() < 1e-9 * x.norm());
    }

    #[test]
    fn loading_policy_scales_with_trace() {
        let r = CMat::identity(4, 4) * C64::new(8.0, 0.0);
        assert!((Loading::AUTO.gamma(&r) - 8.0e-3).abs() < 1e-15);
        assert_eq!(Loading::Zero.gamma(&r), 0.0);
        assert_eq!(Loading::Fixed(0.25).gamma(&r), 0.25);
    }

    #[test]
    fn fba_smooth_fixes_identity_and_persymmetric_inputs() {
        let eye = CMat::identity(4, 4);
        assert!((fba_smooth(&eye).unwrap() - &eye).norm() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let r = random_pd(&mut rng, 5);
        let once = fba_smooth(&r).unwrap();
        let twice = fba_smooth(&once).unwrap();
        assert!((&twice - &once).norm() < 1e-14 * once.norm());
        assert!(is_persymmetric(&once, 1e-12));
        assert!(is_hermitian(&once, 1e-12));
        // Real spectrum comes with the Hermitian structure.
        let eig = HermitianEigen::new(&once).unwrap();
        assert_eq!(eig.values.len(), 5);
    }

    #[test]
    fn rls_decay_only_update() {
        let mut st = InverseState::new(3, 0.5, 2.0).unwrap();
        st.update(&CVec::zeros(3)).unwrap();
        let expect = CMat::identity(3, 3) * C64::new(4.0, 0.0);
        assert!((st.matrix() - expect).norm() < 1e-12);
    }

    #[test]
    fn rls_single_basis_update_matches_direct_inverse() {
        let mut st = InverseState::new(2, 1.0, 1.0).unwrap();
        let e1 = CVec::from_fn(2, |i, _| C64::new(if i == 0 { 1.0 } else { 0.0 }, 0.0));
        st.update(&e1).unwrap();
        // Inverse of I + e1 e1^H.
        assert!((st.matrix()[(0, 0)].re - 0.5).abs() < 1e-14);
        assert!((st.matrix()[(1, 1)].re - 1.0).abs() < 1e-14);
        assert!(st.matrix()[(0, 1)].norm() < 1e-14);
    }

    #[test]
    fn rls_tracks_the_implied_weighted_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for &(alpha, delta, n) in &[(0.998, 1e-3, 50usize), (1.0, 1e-3, 1000usize)] {
            let m = 4;
            let mut st = InverseState::new(m, alpha, delta).unwrap();
            let mut implied = CMat::identity(m, m) * C64::new(1.0 / delta, 0.0);
            for _ in 0..n {
                let x = random_vec(&mut rng, m);
                implied = implied * C64::new(alpha, 0.0) + &x * x.adjoint();
                st.update(&x).unwrap();
            }
            let err = (st.matrix() * &implied - CMat::identity(m, m)).norm();
            assert!(err < 1e-6, "alpha={alpha} n={n} err={err:.2e}");
            assert!(is_hermitian(st.matrix(), 1e-12));
        }
    }

    #[test]
    fn rls_breakdown_leaves_state_untouched() {
        let mut st = InverseState::new(2, 1.0, 1.0).unwrap();
        // Corrupt the state into an indefinite matrix to force a breakdown.
        st.phi = CMat::identity(2, 2) * C64::new(-1.0, 0.0);
        let before = st.phi.clone();
        let x = CVec::from_fn(2, |_, _| C64::new(1.0, 0.0));
        assert!(st.update(&x).is_err());
        assert!((st.phi - before).norm() == 0.0);
    }

    #[test]
    fn fba_inverse_full_is_identity_on_identity() {
        let eye = CMat::identity(4, 4);
        let (out, route) = fba_inverse_full(&eye).unwrap();
        assert_eq!(route, FbaRoute::Correction);
        assert!((out - &eye).norm() < 1e-13);
    }

    #[test]
    fn fba_inverse_full_fixes_persymmetric_inverses() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let r = fba_smooth(&random_pd(&mut rng, 5)).unwrap();
        let (phi, _) = regularized_inverse(&r, 0.0).unwrap();
        let (out, _) = fba_inverse_full(&phi).unwrap();
        assert!((&out - &phi).norm() < 1e-10 * phi.norm());
    }

    #[test]
    fn fba_inverse_full_matches_direct_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for _ in 0..10 {
            let r = random_pd(&mut rng, 6);
            let (phi, _) = regularized_inverse(&r, 0.0).unwrap();
            let (fast, route) = fba_inverse_full(&phi).unwrap();
            assert_eq!(route, FbaRoute::Correction);
            // Direct route: invert, smooth, invert back.
            let smoothed = fba_smooth(&r).unwrap();
            let (oracle, _) = regularized_inverse(&smoothed, 0.0).unwrap();
            let rel = (&fast - &oracle).norm() / oracle.norm();
            assert!(rel < 1e-8, "rel={rel:.2e}");
        }
    }

    /// Orthonormal rank-reduction matrix whose columns are conjugate
    /// centrosymmetric (`Π t* = t`), the regime where the reduced FBA
    /// correction is exact.
    fn centrosymmetric_basis(m: usize, r: usize) -> CMat {
        let mut t = CMat::zeros(m, r);
        for k in 0..r {
            let mut col = CVec::zeros(m);
            // Symmetric cosine profiles are conjugate centrosymmetric and
            // mutually orthogonal.
            for i in 0..m {
                let x = (i as f64 + 0.5) / m as f64;
                col[i] = C64::new((std::f64::consts::PI * (2 * k) as f64 * x).cos(), 0.0);
            }
            let norm = col.norm();
            t.set_column(k, &(col / C64::new(norm, 0.0)));
        }
        t
    }

    #[test]
    fn fba_inverse_reduced_embedding_case() {
        let m = 6;
        let r = 2;
        let t = CMat::identity(m, r);
        let phi_bar = CMat::identity(r, r);
        let (out, _) = fba_inverse_reduced(&phi_bar, &t).unwrap();
        // Full construction: fba_inverse_full(I_M) = I_M, leading block I_r.
        assert!((out - CMat::identity(r, r)).norm() < 1e-12);
    }

    #[test]
    fn fba_inverse_reduced_scalar_formula() {
        let m = 5;
        let mut t = CMat::zeros(m, 1);
        t[(0, 0)] = C64::new(1.2, 0.4);
        t[(2, 0)] = C64::new(-0.3, 0.0);
        let c = t.norm_squared();
        let phi = 0.7;
        let phi_bar = CMat::from_element(1, 1, C64::new(phi, 0.0));
        let (out, _) = fba_inverse_reduced(&phi_bar, &t).unwrap();
        let expect = 2.0 * (phi - phi * phi * c / (phi + c * phi));
        assert!((out[(0, 0)].re - expect).abs() < 1e-12);
    }

    #[test]
    fn fba_inverse_reduced_fixed_point_on_consistent_inputs() {
        // Real reduced covariance seen through unit-norm columns: the
        // modeled exchange equals the forward term and nothing changes.
        let t = centrosymmetric_basis(8, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let a = nalgebra::DMatrix::<f64>::from_fn(3, 3, |_, _| rng.gen::<f64>() - 0.5);
        let spd = &a * a.transpose() + nalgebra::DMatrix::<f64>::identity(3, 3);
        let phi_bar = CMat::from_fn(3, 3, |i, j| C64::new(spd[(i, j)], 0.0));
        let (out, _) = fba_inverse_reduced(&phi_bar, &t).unwrap();
        assert!((&out - &phi_bar).norm() < 1e-10 * phi_bar.norm());
    }

    #[test]
    fn fba_inverse_reduced_matches_projection_oracle() {
        // With conjugate-centrosymmetric columns the exchange term projects
        // to the conjugate reduced covariance exactly, so the operation must
        // reproduce the direct inverse of T^H R_fb T.
        let m = 8;
        let rk = 3;
        let t = centrosymmetric_basis(m, rk);
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        for _ in 0..5 {
            let r_full = random_pd(&mut rng, m);
            let r_bar = hermitian_part(&(t.adjoint() * &r_full * &t));
            let (phi_bar, _) = regularized_inverse(&r_bar, 0.0).unwrap();
            let (fast, _) = fba_inverse_reduced(&phi_bar, &t).unwrap();
            let smoothed = fba_smooth(&r_full).unwrap();
            let projected = hermitian_part(&(t.adjoint() * &smoothed * &t));
            let (oracle, _) = regularized_inverse(&projected, 0.0).unwrap();
            let rel = (&fast - &oracle).norm() / oracle.norm();
            assert!(rel < 1e-8, "rel={rel:.2e}");
        }
    }

    #[test]
    fn mirror_conjugate_flips_and_conjugates() {
        let x = CVec::from_vec(vec![C64::new(1.0, 2.0), C64::new(3.0, -1.0)]);
        let y = mirror_conjugate(&x);
        assert_eq!(y[0], C64::new(3.0, 1.0));
        assert_eq!(y[1], C64::new(1.0, -2.0));
        let pi = exchange_matrix(2);
        let via_matrix = &pi * x.map(|z| z.conj());
        assert!((y - via_matrix).norm() < 1e-15);
        assert!((&pi * &pi - CMat::identity(2, 2)).norm() < 1e-15);
    }
}
