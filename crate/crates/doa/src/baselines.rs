//! Reference estimators: Capon's minimum-variance method and spectral MUSIC.
//!
//! [`capon_spectrum`] runs the same exponentially weighted, regularized
//! covariance pipeline as the reduced-rank estimators, written out in scalar
//! form. It is algebraically the rank-one specialization of the joint
//! recursion, and the test suite holds the two implementations to agreement
//! at every grid angle. [`capon_power_spectrum`] is the textbook quadratic
//! form `P(θ) = 1/(a^H R⁻¹ a)` straight from a covariance matrix.
//!
//! MUSIC takes the assumed source count explicitly (possibly wrong) so the
//! model-order sensitivity experiments can dial in `q_w ≠ q`.

pub use crate::linalg::HermitianEigen;

use crate::cov::{regularized_inverse, CovarianceState, Loading};
use crate::jio::{SpectrumKind, SpectrumResult};
use crate::linalg::mv_weight;
use crate::search::ScanGrid;
use crate::signal::{steering_vector, ArrayGeometry, SnapshotMatrix};
use crate::{CMat, CVec, DoaError, Result, C64};

fn empty_result(grid: &ScanGrid, kind: SpectrumKind) -> SpectrumResult {
    let n = grid.len();
    SpectrumResult {
        angles_deg: grid.angles_deg().to_vec(),
        power: vec![0.0; n],
        q_values: vec![0.0; n],
        rank_used: vec![1; n],
        valid: vec![false; n],
        kind,
        faults: 0,
        max_constraint_residual: 0.0,
    }
}

/// Capon spectrum over the scan grid, sharing the covariance and
/// regularization conventions of the reduced-rank recursion.
///
/// Per snapshot the unit-gain weight `w = B a / (a^H B a)` is refreshed from
/// the regularized inverse of the running covariance, and the scalar output
/// power accumulates as `ρ ← α·ρ + |w^H x|²`; the spectrum reports the final
/// regularized `ρ`.
pub fn capon_spectrum(
    data: &SnapshotMatrix,
    grid: &ScanGrid,
    alpha: f64,
    loading: Loading,
) -> Result<SpectrumResult> {
    let m = data.num_sensors();
    let n = data.num_snapshots();
    // Full-rank inverses are angle independent: compute once per snapshot.
    let mut cov = CovarianceState::new(m, alpha, 0.0)?;
    let mut inverses = Vec::with_capacity(n);
    for i in 0..n {
        let x = CVec::from_column_slice(data.data.column(i).as_slice());
        cov.update(&x)?;
        let gamma = loading.gamma(cov.matrix());
        inverses.push(regularized_inverse(cov.matrix(), gamma)?.0);
    }

    let angles = grid.angles_deg();
    let reduced_scale = 1e-3;
    let outcomes = crate::par::indexed_map(angles.len(), |idx| -> Result<(f64, f64, bool)> {
        let a = steering_vector(&data.geometry, angles[idx])?;
        let mut weight = CVec::zeros(m);
        weight[0] = C64::new(1.0, 0.0);
        let mut rho = 0.0f64;
        let mut last = None;
        for i in 0..n {
            let x = CVec::from_column_slice(data.data.column(i).as_slice());
            let filtered = weight.dotc(&x);
            let gain = weight.dotc(&a);
            rho = alpha * rho + filtered.norm_sqr();
            let loaded = rho + reduced_scale * rho;
            let inv = if loaded > 0.0 { 1.0 / loaded } else { 0.0 };
            let q = gain.norm_sqr() * inv;
            if !(q.is_finite() && q > 0.0) {
                return Ok((0.0, 0.0, false));
            }
            last = Some(q);
            // Auxiliary scalar is pinned by the unit-gain constraint; the
            // composite weight stays the MV direction times its conjugate.
            let g = C64::new(inv, 0.0) * gain / q;
            let s = g.conj() / g.norm_sqr();
            weight = match mv_weight(&inverses[i], &a) {
                Some(f) => f.map(|v| v * s),
                None => return Ok((0.0, 0.0, false)),
            };
        }
        match last {
            Some(q) => Ok((1.0 / q, q, true)),
            None => Ok((0.0, 0.0, false)),
        }
    });

    let mut result = empty_result(grid, SpectrumKind::Capon);
    for (i, o) in outcomes.into_iter().enumerate() {
        let (p, q, ok) = o?;
        result.power[i] = p;
        result.q_values[i] = q;
        result.valid[i] = ok;
        if !ok {
            result.faults += 1;
        }
    }
    Ok(result)
}

/// Textbook Capon power `P(θ) = 1/(a^H B a)` from a fixed covariance.
pub fn capon_power_spectrum(
    r: &CMat,
    geometry: &ArrayGeometry,
    grid: &ScanGrid,
    loading: Loading,
) -> Result<SpectrumResult> {
    if r.nrows() != geometry.num_sensors {
        return Err(DoaError::Dimension(format!(
            "covariance is {}x{} but the array has {} sensors",
            r.nrows(),
            r.ncols(),
            geometry.num_sensors
        )));
    }
    let gamma = loading.gamma(r);
    let (inv, _) = regularized_inverse(r, gamma)?;
    let mut result = empty_result(grid, SpectrumKind::Capon);
    for (i, &theta) in grid.angles_deg().iter().enumerate() {
        let a = steering_vector(geometry, theta)?;
        let q = (a.adjoint() * &inv * &a)[(0, 0)].re;
        if q.is_finite() && q > 0.0 {
            result.power[i] = 1.0 / q;
            result.q_values[i] = q;
            result.valid[i] = true;
        } else {
            result.faults += 1;
        }
    }
    Ok(result)
}

/// Spectral MUSIC with an explicitly assumed source count.
///
/// The covariance is the unweighted snapshot sum; `assumed_sources` sets the
/// signal-subspace dimension and may deliberately differ from the true count.
pub fn music_spectrum(
    data: &SnapshotMatrix,
    grid: &ScanGrid,
    assumed_sources: usize,
    loading: Loading,
) -> Result<SpectrumResult> {
    let m = data.num_sensors();
    let mut cov = CovarianceState::new(m, 1.0, 0.0)?;
    for i in 0..data.num_snapshots() {
        let x = CVec::from_column_slice(data.data.column(i).as_slice());
        cov.update(&x)?;
    }
    music_spectrum_from_covariance(cov.matrix(), &data.geometry, grid, assumed_sources, loading)
}

/// MUSIC on a covariance supplied directly.
pub fn music_spectrum_from_covariance(
    r: &CMat,
    geometry: &ArrayGeometry,
    grid: &ScanGrid,
    assumed_sources: usize,
    loading: Loading,
) -> Result<SpectrumResult> {
    let m = geometry.num_sensors;
    if assumed_sources == 0 || assumed_sources >= m {
        return Err(DoaError::Domain(format!(
            "assumed source count must satisfy 1 <= q < {m}, got {assumed_sources}"
        )));
    }
    if r.nrows() != m {
        return Err(DoaError::Dimension(format!(
            "covariance is {}x{} but the array has {m} sensors",
            r.nrows(),
            r.ncols()
        )));
    }
    // Loading only shifts the spectrum; the subspaces are unchanged.
    let gamma = loading.gamma(r);
    let loaded = r + CMat::identity(m, m) * C64::new(gamma, 0.0);
    let eig = HermitianEigen::new(&loaded)?;
    let noise_dim = m - assumed_sources;
    let mut noise_basis = CMat::zeros(m, noise_dim);
    for k in 0..noise_dim {
        noise_basis.set_column(k, &eig.vectors.column(assumed_sources + k));
    }
    let mut result = empty_result(grid, SpectrumKind::Music);
    for (i, &theta) in grid.angles_deg().iter().enumerate() {
        let a = steering_vector(geometry, theta)?;
        let projected = noise_basis.adjoint() * &a;
        let q = projected.norm_squared();
        if q.is_finite() && q > 0.0 {
            result.power[i] = 1.0 / q;
            result.q_values[i] = q;
            result.valid[i] = true;
        } else if q == 0.0 {
            // Exact-null angle: report a spectral line rather than a fault.
            result.power[i] = f64::MAX;
            result.q_values[i] = 0.0;
            result.valid[i] = true;
        } else {
            result.faults += 1;
        }
    }
    Ok(result)
}
