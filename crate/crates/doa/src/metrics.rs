//! Trial scoring: the resolution event, RMSE aggregation in dB, and the
//! stochastic Cramér-Rao bound reference curve.
//!
//! Estimates are matched to truths by sorting both lists and pairing in
//! order, which reproduces the usual two-source resolution definition and is
//! adequate for well-separated truths (interleaved failures can mispair; the
//! squared error then dominates anyway). A trial resolves when every matched
//! error stays strictly below half the minimum pairwise truth separation.

use nalgebra::DMatrix;

use crate::signal::{steering_derivative, steering_matrix, ArrayGeometry, SourceScenario};
use crate::{CMat, DoaError, Result, C64};

/// Zero-error RMSE floor, in dB of degrees.
pub const RMSE_FLOOR_DB: f64 = -120.0;

/// Per-trial outcome of one estimator.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    /// Estimated DOAs, degrees.
    pub estimates: Vec<f64>,
    /// True DOAs, degrees.
    pub truths: Vec<f64>,
    pub resolved: bool,
    /// Sum over matched pairs of squared angular error, degrees².
    pub squared_error_sum: f64,
    pub num_matched: usize,
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut out = v.to_vec();
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out
}

fn half_min_separation(truths: &[f64]) -> f64 {
    let mut min_sep = f64::INFINITY;
    for i in 0..truths.len() {
        for j in (i + 1)..truths.len() {
            min_sep = min_sep.min((truths[i] - truths[j]).abs());
        }
    }
    min_sep / 2.0
}

/// Scores one trial: sorted-order matching, resolution flag and squared
/// errors in a single pass.
pub fn score_trial(estimates: &[f64], truths: &[f64]) -> Result<TrialOutcome> {
    if truths.is_empty() {
        return Err(DoaError::Domain("need at least one true DOA".into()));
    }
    let est = sorted(estimates);
    let tru = sorted(truths);
    let matched = est.len().min(tru.len());
    let radius = half_min_separation(&tru);
    let mut sq_sum = 0.0;
    let mut within = true;
    for k in 0..matched {
        let err = est[k] - tru[k];
        sq_sum += err * err;
        if !(err.abs() < radius) {
            within = false;
        }
    }
    let resolved = within && matched == tru.len();
    Ok(TrialOutcome {
        estimates: est,
        truths: tru,
        resolved,
        squared_error_sum: sq_sum,
        num_matched: matched,
    })
}

/// True when every matched estimate sits strictly within half the minimum
/// truth separation.
pub fn resolution_event(estimates: &[f64], truths: &[f64]) -> Result<bool> {
    Ok(score_trial(estimates, truths)?.resolved)
}

/// RMSE over trials in dB of degrees: `10·log10(Σ sq_err / (trials·q))`,
/// floored at [`RMSE_FLOOR_DB`]. All trials enter the average.
pub fn rmse_db(outcomes: &[TrialOutcome]) -> Result<f64> {
    rmse_db_filtered(outcomes, false)
}

/// RMSE with an optional restriction to resolved trials.
pub fn rmse_db_filtered(outcomes: &[TrialOutcome], resolved_only: bool) -> Result<f64> {
    if outcomes.is_empty() {
        return Err(DoaError::Domain("need at least one trial outcome".into()));
    }
    let q = outcomes[0].truths.len().max(1);
    let mut sum = 0.0;
    let mut trials = 0usize;
    for o in outcomes {
        if resolved_only && !o.resolved {
            continue;
        }
        sum += o.squared_error_sum;
        trials += 1;
    }
    if trials == 0 {
        return Ok(RMSE_FLOOR_DB);
    }
    let mean = sum / (trials * q) as f64;
    if mean <= 0.0 {
        return Ok(RMSE_FLOOR_DB);
    }
    Ok((10.0 * mean.log10()).max(RMSE_FLOOR_DB))
}

/// Source covariance implied by a scenario: `σ_s²` on the diagonal with
/// `τ·σ_s²` coupling the first pair.
fn source_covariance(scenario: &SourceScenario) -> DMatrix<f64> {
    let q = scenario.num_sources();
    let mut rs = DMatrix::<f64>::identity(q, q) * scenario.source_power;
    if scenario.correlation > 0.0 && q >= 2 {
        let c = scenario.correlation * scenario.source_power;
        rs[(0, 1)] = c;
        rs[(1, 0)] = c;
    }
    rs
}

/// Stochastic (unconditional, known noise power) Cramér-Rao bound on each
/// DOA, in degrees².
///
/// `CRB = (σ_n²/2N) · {Re[(D^H Π_A^⊥ D) ⊙ (R_s A^H R⁻¹ A R_s)^T]}⁻¹` with `D`
/// the per-source steering derivative in radians and `Π_A^⊥` the projector
/// onto the orthogonal complement of the steering span; the diagonal is
/// converted to degrees².
pub fn stochastic_crb(scenario: &SourceScenario, geometry: &ArrayGeometry) -> Result<Vec<f64>> {
    scenario.validate()?;
    let q = scenario.num_sources();
    let m = geometry.num_sensors;
    if q >= m {
        return Err(DoaError::Domain(format!(
            "bound needs q < M, got q={q}, M={m}"
        )));
    }
    if scenario.noise_power <= 0.0 {
        return Err(DoaError::Domain("bound needs positive noise power".into()));
    }
    let n = scenario.num_snapshots as f64;

    let a = steering_matrix(geometry, &scenario.doas_deg)?;
    let mut d = CMat::zeros(m, q);
    for (k, &theta) in scenario.doas_deg.iter().enumerate() {
        d.set_column(k, &steering_derivative(geometry, theta)?);
    }
    let rs_real = source_covariance(scenario);
    let rs = CMat::from_fn(q, q, |i, j| C64::new(rs_real[(i, j)], 0.0));

    // R = A R_s A^H + σ_n² I and the projector complement of span(A).
    let r = &a * &rs * a.adjoint()
        + CMat::identity(m, m) * C64::new(scenario.noise_power, 0.0);
    let gram = a.adjoint() * &a;
    let gram_inv = gram.clone().try_inverse().ok_or_else(|| {
        DoaError::Numerical("steering Gram matrix is singular".into())
    })?;
    let projector = CMat::identity(m, m) - &a * gram_inv * a.adjoint();
    let r_inv = r.clone().try_inverse().ok_or_else(|| {
        DoaError::Numerical("model covariance is singular".into())
    })?;

    let left = d.adjoint() * &projector * &d;
    let right = &rs * a.adjoint() * &r_inv * &a * &rs;
    let mut fisher = DMatrix::<f64>::zeros(q, q);
    for i in 0..q {
        for j in 0..q {
            fisher[(i, j)] = (left[(i, j)] * right[(j, i)]).re;
        }
    }
    fisher *= 2.0 * n / scenario.noise_power;

    let fisher_inv = fisher.try_inverse().ok_or_else(|| {
        DoaError::Numerical("Fisher information is singular; bound unbounded".into())
    })?;
    let rad_to_deg_sq = (180.0 / std::f64::consts::PI).powi(2);
    let mut bounds = Vec::with_capacity(q);
    for k in 0..q {
        let v = fisher_inv[(k, k)];
        if !(v.is_finite() && v > 0.0) {
            return Err(DoaError::Numerical(
                "Fisher information is indefinite; bound unbounded".into(),
            ));
        }
        bounds.push(v * rad_to_deg_sq);
    }
    Ok(bounds)
}

/// Mean CRB across sources in dB of degrees, comparable to [`rmse_db`].
pub fn crb_db(scenario: &SourceScenario, geometry: &ArrayGeometry) -> Result<f64> {
    let bounds = stochastic_crb(scenario, geometry)?;
    let mean = bounds.iter().sum::<f64>() / bounds.len() as f64;
    Ok(10.0 * mean.log10())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::Modulation;

    fn scenario(doas: Vec<f64>, noise_power: f64, snapshots: usize) -> SourceScenario {
        SourceScenario {
            doas_deg: doas,
            source_power: 1.0,
            correlation: 0.0,
            modulation: Modulation::Gaussian,
            num_snapshots: snapshots,
            noise_power,
        }
    }

    #[test]
    fn exact_estimates_resolve() {
        assert!(resolution_event(&[88.5, 91.5], &[88.5, 91.5]).unwrap());
    }

    #[test]
    fn the_threshold_is_strict_at_half_separation() {
        // Truths 3 degrees apart: radius 1.5, an error of 1.6 fails.
        assert!(!resolution_event(&[88.5, 93.1], &[88.5, 91.5]).unwrap());
        // 1.4 degrees passes.
        assert!(resolution_event(&[88.5, 92.9], &[88.5, 91.5]).unwrap());
    }

    #[test]
    fn shortfall_never_resolves() {
        assert!(!resolution_event(&[90.0], &[88.5, 91.5]).unwrap());
        assert!(resolution_event(&[], &[90.0]).is_ok());
        assert!(resolution_event(&[90.0], &[]).is_err());
    }

    #[test]
    fn resolution_is_permutation_invariant() {
        let a = resolution_event(&[91.2, 88.4], &[88.5, 91.5]).unwrap();
        let b = resolution_event(&[88.4, 91.2], &[91.5, 88.5]).unwrap();
        assert_eq!(a, b);
        assert!(a);
    }

    #[test]
    fn rmse_of_one_degree_errors_is_zero_db() {
        let o = score_trial(&[89.5, 92.5], &[88.5, 91.5]).unwrap();
        let db = rmse_db(&[o]).unwrap();
        assert!(db.abs() < 1e-12);
    }

    #[test]
    fn rmse_of_exact_estimates_hits_the_floor() {
        let o = score_trial(&[88.5, 91.5], &[88.5, 91.5]).unwrap();
        assert_eq!(rmse_db(&[o]).unwrap(), RMSE_FLOOR_DB);
    }

    #[test]
    fn rmse_matches_hand_arithmetic() {
        // Errors 1 and 2 degrees, q = 2: mean square 2.5.
        let o = score_trial(&[89.5, 93.5], &[88.5, 91.5]).unwrap();
        let db = rmse_db(&[o]).unwrap();
        assert!((db - 10.0 * 2.5f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn rmse_detects_a_constant_bias() {
        let clean = score_trial(&[88.5, 91.5], &[88.5, 91.5]).unwrap();
        let biased = score_trial(&[89.0, 92.0], &[88.5, 91.5]).unwrap();
        assert!(rmse_db(&[biased]).unwrap() > rmse_db(&[clean]).unwrap());
    }

    #[test]
    fn crb_halves_when_snapshots_double() {
        let g = ArrayGeometry::half_wavelength(12).unwrap();
        let b1 = stochastic_crb(&scenario(vec![88.5, 91.5], 0.1, 20), &g).unwrap();
        let b2 = stochastic_crb(&scenario(vec![88.5, 91.5], 0.1, 40), &g).unwrap();
        for (x, y) in b1.iter().zip(b2.iter()) {
            assert!((x / y - 2.0).abs() < 1e-12, "{x} vs {y}");
        }
    }

    #[test]
    fn crb_shrinks_with_array_size() {
        let mut last = f64::INFINITY;
        for m in [6, 10, 16, 24, 40] {
            let g = ArrayGeometry::half_wavelength(m).unwrap();
            let b = stochastic_crb(&scenario(vec![75.0], 0.1, 20), &g).unwrap();
            assert!(b[0] < last, "M={m}: {} !< {last}", b[0]);
            last = b[0];
        }
    }

    #[test]
    fn crb_decreases_monotonically_in_snr() {
        let g = ArrayGeometry::half_wavelength(20).unwrap();
        let mut last = f64::INFINITY;
        for snr_db in [-5.0f64, 0.0, 5.0, 10.0, 15.0] {
            let noise = 10f64.powf(-snr_db / 10.0);
            let b = stochastic_crb(&scenario(vec![88.5, 91.5], noise, 20), &g).unwrap();
            let mean = (b[0] + b[1]) / 2.0;
            assert!(mean < last, "snr {snr_db}: {mean} !< {last}");
            last = mean;
        }
    }
}
