//! DOA extraction from a spectrum: grid peak picking and polynomial rooting.
//!
//! The rooting shortcut rewrites the inverse power `Q(θ) = ā^H R̄⁻¹ ā` as a
//! conjugate-symmetric Laurent polynomial in `z = exp(-2πj(d/λ)cos θ)` whose
//! coefficients are diagonal sums of `C = T R̄⁻¹ T^H`. Scaled by `z^{M-1}`
//! it becomes an ordinary polynomial of degree `2(M-1)` whose roots come in
//! `(z, 1/z̄)` pairs; the roots hugging the unit circle from inside carry the
//! source angles.

use crate::jio::{jio_spectrum_with_states, JioConfig, SpectrumResult};
use crate::linalg::is_hermitian;
use crate::signal::SnapshotMatrix;
use crate::{CMat, DoaError, Result, C64};

/// Uniform scan grid `θ_n = n·Δ` strictly inside (0°, 180°).
///
/// `180/Δ` must be an integer; the endpoint `180°` itself is excluded since
/// endfire steering vectors are conjugate symmetric and rank deficient.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanGrid {
    step_deg: f64,
    angles_deg: Vec<f64>,
}

impl ScanGrid {
    pub fn new(step_deg: f64) -> Result<Self> {
        if !(step_deg.is_finite() && step_deg > 0.0) {
            return Err(DoaError::Domain(format!(
                "grid step must be positive, got {step_deg}"
            )));
        }
        let count = 180.0 / step_deg;
        if (count - count.round()).abs() > 1e-9 || count.round() < 2.0 {
            return Err(DoaError::Domain(format!(
                "180/step must be an integer >= 2, got {count}"
            )));
        }
        let count = count.round() as usize;
        let angles_deg = (1..count).map(|n| n as f64 * step_deg).collect();
        Ok(Self {
            step_deg,
            angles_deg,
        })
    }

    pub fn step_deg(&self) -> f64 {
        self.step_deg
    }

    pub fn angles_deg(&self) -> &[f64] {
        &self.angles_deg
    }

    pub fn len(&self) -> usize {
        self.angles_deg.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles_deg.is_empty()
    }
}

/// Up to `q` strict interior local maxima of the spectrum, strongest first
/// selected, returned sorted by angle.
///
/// Boundary grid points and invalid angles never qualify. Fewer than `q`
/// maxima simply yields a shorter list; the caller decides whether that
/// counts as a resolution failure.
pub fn find_peaks(spectrum: &SpectrumResult, q: usize) -> Result<Vec<f64>> {
    if q == 0 {
        return Err(DoaError::Domain("need at least one peak".into()));
    }
    let n = spectrum.len();
    if q > n {
        return Err(DoaError::Domain(format!(
            "asked for {q} peaks from a {n}-point spectrum"
        )));
    }
    let mut candidates: Vec<(f64, f64)> = Vec::new();
    for i in 1..n.saturating_sub(1) {
        if !(spectrum.valid[i] && spectrum.valid[i - 1] && spectrum.valid[i + 1]) {
            continue;
        }
        let p = spectrum.power[i];
        if p > spectrum.power[i - 1] && p > spectrum.power[i + 1] {
            candidates.push((p, spectrum.angles_deg[i]));
        }
    }
    candidates.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let mut picked: Vec<f64> = candidates.into_iter().take(q).map(|(_, th)| th).collect();
    picked.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(picked)
}

/// Conjugate-symmetric rooting polynomial for one scanning angle.
#[derive(Debug, Clone)]
pub struct RootingPolynomial {
    /// Coefficient of `z^{k}` for `k = -(M-1)..=M-1`, stored at `k + M - 1`.
    coeffs: Vec<C64>,
    num_sensors: usize,
}

/// Builds `Q(z) = Σ_k c_k z^k` from the terminal `(T, R̄⁻¹)` pair, where
/// `c_k` sums the `k`-th diagonal of `C = T R̄⁻¹ T^H`.
pub fn build_rooting_polynomial(t: &CMat, reduced_inv: &CMat) -> Result<RootingPolynomial> {
    let m = t.nrows();
    let r = t.ncols();
    if reduced_inv.nrows() != r || reduced_inv.ncols() != r {
        return Err(DoaError::Dimension(format!(
            "reduced inverse is {}x{}, expected {r}x{r}",
            reduced_inv.nrows(),
            reduced_inv.ncols()
        )));
    }
    if !is_hermitian(reduced_inv, 1e-10) {
        return Err(DoaError::Numerical(
            "reduced inverse must be Hermitian to root".into(),
        ));
    }
    let c = t * reduced_inv * t.adjoint();
    let mut coeffs = vec![C64::new(0.0, 0.0); 2 * m - 1];
    for row in 0..m {
        for col in 0..m {
            let k = col as isize - row as isize;
            coeffs[(k + m as isize - 1) as usize] += c[(row, col)];
        }
    }
    // Enforce exact conjugate symmetry; Hermitian C guarantees it up to
    // rounding.
    for k in 1..m {
        let hi = coeffs[m - 1 + k];
        let lo = coeffs[m - 1 - k];
        let avg = (hi + lo.conj()) * 0.5;
        coeffs[m - 1 + k] = avg;
        coeffs[m - 1 - k] = avg.conj();
    }
    coeffs[m - 1] = C64::new(coeffs[m - 1].re, 0.0);
    Ok(RootingPolynomial {
        coeffs,
        num_sensors: m,
    })
}

impl RootingPolynomial {
    pub fn num_sensors(&self) -> usize {
        self.num_sensors
    }

    /// Laurent coefficient `c_k`.
    pub fn coefficient(&self, k: isize) -> C64 {
        let m = self.num_sensors as isize;
        assert!(k > -m && k < m, "coefficient index out of range");
        self.coeffs[(k + m - 1) as usize]
    }

    /// Evaluates `Q` at `z = exp(-2πj(d/λ)cos θ)`.
    pub fn evaluate_at_angle(&self, theta_deg: f64, d_over_lambda: f64) -> C64 {
        let phase = -2.0 * std::f64::consts::PI * d_over_lambda * theta_deg.to_radians().cos();
        self.evaluate(C64::from_polar(1.0, phase))
    }

    /// Evaluates the Laurent sum at an arbitrary nonzero `z`.
    pub fn evaluate(&self, z: C64) -> C64 {
        // Horner on p(z) = z^{M-1} Q(z), then divide by z^{M-1}.
        let mut p = C64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            p = p * z + c;
        }
        let m = self.num_sensors as i32;
        p * z.powi(1 - m)
    }

    /// Coefficients of `p(z) = z^{M-1} Q(z)` in ascending degree order.
    pub fn lifted_coefficients(&self) -> &[C64] {
        &self.coeffs
    }
}

/// Roots of a complex polynomial given ascending coefficients, by the
/// Aberth-Ehrlich simultaneous iteration.
///
/// Exact degree-count output: leading zero coefficients reduce the degree,
/// trailing zeros contribute roots at the origin.
pub fn polynomial_roots(coeffs: &[C64]) -> Result<Vec<C64>> {
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
    if scale == 0.0 {
        return Err(DoaError::Numerical("zero polynomial has no roots".into()));
    }
    let tiny = scale * 1e-300f64.max(f64::EPSILON * 1e-2);
    let mut hi = coeffs.len();
    while hi > 0 && coeffs[hi - 1].norm() <= tiny {
        hi -= 1;
    }
    let mut lo = 0usize;
    while lo < hi && coeffs[lo].norm() <= tiny {
        lo += 1;
    }
    if hi - lo <= 1 {
        // Constant (after stripping): only origin roots remain.
        return Ok(vec![C64::new(0.0, 0.0); lo]);
    }
    let work: Vec<C64> = coeffs[lo..hi].iter().map(|c| c / scale).collect();
    let n = work.len() - 1;

    // Initial guesses on a circle sized by the coefficient ratio.
    let radius = (work[0].norm() / work[n].norm()).powf(1.0 / n as f64);
    let radius = if radius.is_finite() && radius > 1e-6 {
        radius
    } else {
        1.0
    };
    let mut z: Vec<C64> = (0..n)
        .map(|i| {
            let angle = 2.0 * std::f64::consts::PI * (i as f64 + 0.37) / n as f64 + 0.5;
            C64::from_polar(radius, angle)
        })
        .collect();

    let eval = |x: C64| -> (C64, C64) {
        let mut p = C64::new(0.0, 0.0);
        let mut dp = C64::new(0.0, 0.0);
        for &c in work.iter().rev() {
            dp = dp * x + p;
            p = p * x + c;
        }
        (p, dp)
    };

    let tol = 1e-14;
    for _ in 0..400 {
        let mut moved = 0.0f64;
        for i in 0..n {
            let (p, dp) = eval(z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let newton = if dp.norm() > 0.0 { p / dp } else { C64::new(tol, 0.0) };
            let mut repel = C64::new(0.0, 0.0);
            for j in 0..n {
                if j != i {
                    let d = z[i] - z[j];
                    if d.norm() > 1e-300 {
                        repel += C64::new(1.0, 0.0) / d;
                    }
                }
            }
            let denom = C64::new(1.0, 0.0) - newton * repel;
            let step = if denom.norm() > 1e-300 { newton / denom } else { newton };
            z[i] -= step;
            moved = moved.max(step.norm() / z[i].norm().max(1.0));
        }
        if moved < tol {
            break;
        }
    }
    let mut roots = vec![C64::new(0.0, 0.0); lo];
    roots.extend(z);
    Ok(roots)
}

/// Root-derived DOAs plus a flag when fewer than requested were admissible.
#[derive(Debug, Clone)]
pub struct RootedDoas {
    pub doas_deg: Vec<f64>,
    pub shortfall: bool,
}

/// Extracts `q` DOAs from the roots of `z^{M-1} Q(z)`.
///
/// Admissible roots lie strictly inside the unit circle and map to an angle
/// inside (0°, 180°) via `θ = arccos(−arg z / (2π d/λ))`; the `q` closest to
/// the circle win, sorted ascending.
pub fn roots_to_doas(
    poly: &RootingPolynomial,
    q: usize,
    d_over_lambda: f64,
) -> Result<RootedDoas> {
    if q == 0 {
        return Err(DoaError::Domain("need at least one DOA".into()));
    }
    let roots = polynomial_roots(poly.lifted_coefficients())?;
    let mut admissible: Vec<(f64, f64)> = Vec::new(); // (distance to circle, θ)
    for z in roots {
        let r = z.norm();
        if !(r > 1e-12 && r < 1.0 - 1e-12) {
            continue;
        }
        let cos_theta = -z.arg() / (2.0 * std::f64::consts::PI * d_over_lambda);
        if cos_theta.abs() > 1.0 {
            continue;
        }
        let theta = cos_theta.acos().to_degrees();
        if theta <= 0.0 || theta >= 180.0 {
            continue;
        }
        admissible.push((1.0 - r, theta));
    }
    admissible.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let shortfall = admissible.len() < q;
    let mut doas_deg: Vec<f64> = admissible.into_iter().take(q).map(|(_, th)| th).collect();
    doas_deg.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(RootedDoas { doas_deg, shortfall })
}

/// Number of rooting probes blended by [`rooted_refine`].
const MAX_PROBES: usize = 24;

/// Coarse grid scan followed by polynomial-rooting refinement.
///
/// The rank-reduction matrix is a rank-one outer product, so the rooting
/// matrix `C = T R̄⁻¹ T^H` built at a scanning angle is proportional to
/// `f f^H` with `f` that angle's unit-gain minimum-variance weight. At an
/// angle away from every source, `f` places adaptive nulls on all of them,
/// and those nulls are exactly the near-unit-circle roots of `Q(z)`. The
/// refinement therefore roots the polynomial of the *quietest* scanned angle
/// and matches its `q` best roots to the coarse peaks in sorted order; peaks
/// with no admissible root keep their grid value.
pub fn rooted_refine(
    data: &SnapshotMatrix,
    coarse_grid: &ScanGrid,
    cfg: &JioConfig,
    q: usize,
) -> Result<Vec<f64>> {
    let (spectrum, states) = jio_spectrum_with_states(data, coarse_grid, cfg)?;
    let mut peaks = find_peaks(&spectrum, q)?;
    if peaks.is_empty() {
        return Ok(peaks);
    }

    // Quiet, well-separated probe angles. Each contributes one root set;
    // true-source nulls recur across probes, pattern nulls do not.
    let mut order: Vec<usize> = (0..spectrum.len())
        .filter(|&i| spectrum.valid[i] && states[i].is_some())
        .collect();
    order.sort_by(|&a, &b| spectrum.power[a].partial_cmp(&spectrum.power[b]).unwrap());
    let mut probes: Vec<usize> = Vec::new();
    for idx in order {
        if probes.len() >= MAX_PROBES {
            break;
        }
        let theta = spectrum.angles_deg[idx];
        if probes
            .iter()
            .all(|&p| (spectrum.angles_deg[p] - theta).abs() >= 3.0)
        {
            probes.push(idx);
        }
    }

    // Per peak, collect each probe's nearest admissible root inside a tight
    // acceptance window; the trimmed mean of the candidates is the refined
    // estimate.
    let window = (1.5 * coarse_grid.step_deg()).max(1.0);
    let mut candidates: Vec<Vec<f64>> = vec![Vec::new(); peaks.len()];
    for &idx in &probes {
        let state = states[idx].as_ref().expect("probe filter checked states");
        let Ok(poly) = build_rooting_polynomial(&state.t, &state.reduced_inv) else {
            continue;
        };
        let Ok(rooted) = roots_to_doas(&poly, q, data.geometry.spacing_ratio) else {
            continue;
        };
        for (k, &peak) in peaks.iter().enumerate() {
            let nearest = rooted
                .doas_deg
                .iter()
                .copied()
                .min_by(|a, b| (a - peak).abs().partial_cmp(&(b - peak).abs()).unwrap());
            if let Some(root) = nearest {
                if (root - peak).abs() <= window {
                    candidates[k].push(root);
                }
            }
        }
    }
    for (slot, cand) in peaks.iter_mut().zip(candidates.iter_mut()) {
        if cand.is_empty() {
            continue;
        }
        cand.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // Drop the outer quartiles, average the middle.
        let lo = cand.len() / 4;
        let hi = cand.len() - lo;
        let kept = &cand[lo..hi];
        *slot = kept.iter().sum::<f64>() / kept.len() as f64;
    }
    peaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(peaks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jio::SpectrumKind;
    use crate::linalg::hermitian_part;
    use crate::signal::{steering_vector, ArrayGeometry};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn grid_excludes_both_endpoints() {
        let g = ScanGrid::new(0.5).unwrap();
        assert_eq!(g.len(), 359);
        assert_eq!(g.angles_deg()[0], 0.5);
        assert_eq!(*g.angles_deg().last().unwrap(), 179.5);
        assert!(ScanGrid::new(7.0).is_err());
        assert!(ScanGrid::new(-1.0).is_err());
    }

    fn synthetic_spectrum(angles: Vec<f64>, power: Vec<f64>) -> SpectrumResult {
        let n = angles.len();
        SpectrumResult {
            angles_deg: angles,
            q_values: power.iter().map(|p| 1.0 / p).collect(),
            power,
            rank_used: vec![1; n],
            valid: vec![true; n],
            kind: SpectrumKind::Jio,
            faults: 0,
            max_constraint_residual: 0.0,
        }
    }

    #[test]
    fn find_peaks_locates_two_bumps() {
        let angles: Vec<f64> = (1..180).map(|n| n as f64).collect();
        let power: Vec<f64> = angles
            .iter()
            .map(|&a| {
                let bump = |c: f64, w: f64| (-((a - c) / w).powi(2)).exp();
                1.0 + 5.0 * bump(88.0, 1.2) + 4.0 * bump(91.0, 1.2)
            })
            .collect();
        let s = synthetic_spectrum(angles, power);
        let peaks = find_peaks(&s, 2).unwrap();
        assert_eq!(peaks, vec![88.0, 91.0]);
    }

    #[test]
    fn monotone_spectrum_has_no_peaks() {
        let angles: Vec<f64> = (1..50).map(|n| n as f64).collect();
        let power: Vec<f64> = (1..50).map(|n| n as f64).collect();
        let s = synthetic_spectrum(angles, power);
        assert!(find_peaks(&s, 2).unwrap().is_empty());
    }

    #[test]
    fn flat_source_matrix_gives_a_constant_polynomial() {
        let m = 6;
        let t = CMat::identity(m, m);
        let poly = build_rooting_polynomial(&t, &CMat::identity(m, m)).unwrap();
        assert!((poly.coefficient(0) - C64::new(m as f64, 0.0)).norm() < 1e-12);
        for k in 1..m as isize {
            assert!(poly.coefficient(k).norm() < 1e-12);
            assert!(poly.coefficient(-k).norm() < 1e-12);
        }
        let q = poly.evaluate_at_angle(73.0, 0.5);
        assert!((q - C64::new(m as f64, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn polynomial_evaluation_matches_the_quadratic_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let geometry = ArrayGeometry::half_wavelength(6).unwrap();
        let t = CMat::from_fn(6, 3, |_, _| {
            C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        let b = CMat::from_fn(3, 3, |_, _| {
            C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        let reduced_inv = hermitian_part(&(&b * b.adjoint())) + CMat::identity(3, 3);
        let poly = build_rooting_polynomial(&t, &reduced_inv).unwrap();
        for _ in 0..50 {
            let theta = 1.0 + rng.gen::<f64>() * 178.0;
            let a = steering_vector(&geometry, theta).unwrap();
            let a_bar = t.adjoint() * &a;
            let direct = (a_bar.adjoint() * &reduced_inv * &a_bar)[(0, 0)];
            let via_poly = poly.evaluate_at_angle(theta, 0.5);
            assert!(
                (via_poly - direct).norm() <= 1e-10 * direct.norm().max(1.0),
                "theta={theta}: poly {via_poly} direct {direct}"
            );
            // Real on the unit circle thanks to conjugate symmetry.
            assert!(via_poly.im.abs() <= 1e-10 * direct.norm().max(1.0));
        }
    }

    #[test]
    fn roots_pair_up_across_the_unit_circle() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let t = CMat::from_fn(5, 2, |_, _| {
            C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        let b = CMat::from_fn(2, 2, |_, _| {
            C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        let reduced_inv = hermitian_part(&(&b * b.adjoint())) + CMat::identity(2, 2) * C64::new(0.2, 0.0);
        let poly = build_rooting_polynomial(&t, &reduced_inv).unwrap();
        let roots = polynomial_roots(poly.lifted_coefficients()).unwrap();
        assert_eq!(roots.len(), 8);
        for &z in &roots {
            if z.norm() < 1e-9 {
                continue;
            }
            let mirror = C64::new(1.0, 0.0) / z.conj();
            let partner = roots
                .iter()
                .map(|&w| (w - mirror).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(partner < 1e-6, "root {z} lacks its mirror partner");
        }
    }

    #[test]
    fn aberth_recovers_a_known_factorization() {
        // (z - 0.5)(z - (0.2+0.3j))(z + 2j) expanded.
        let r1 = C64::new(0.5, 0.0);
        let r2 = C64::new(0.2, 0.3);
        let r3 = C64::new(0.0, -2.0);
        let c0 = -(r1 * r2 * r3);
        let c1 = r1 * r2 + r1 * r3 + r2 * r3;
        let c2 = -(r1 + r2 + r3);
        let coeffs = [c0, c1, c2, C64::new(1.0, 0.0)];
        let mut roots = polynomial_roots(&coeffs).unwrap();
        roots.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        let mut expect = [r1, r2, r3];
        expect.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        for (z, e) in roots.iter().zip(expect.iter()) {
            assert!((z - e).norm() < 1e-10, "{z} vs {e}");
        }
    }

    #[test]
    fn exact_single_source_roots_at_the_true_angle() {
        let m = 8;
        let geometry = ArrayGeometry::half_wavelength(m).unwrap();
        let theta0 = 63.4;
        let a0 = steering_vector(&geometry, theta0).unwrap();
        let gamma = 1e-4;
        // Exact loaded covariance of one unit source.
        let r = &a0 * a0.adjoint() + CMat::identity(m, m) * C64::new(gamma, 0.0);
        let (inv, _) = crate::cov::regularized_inverse(&r, 0.0).unwrap();
        let t = CMat::identity(m, m);
        let poly = build_rooting_polynomial(&t, &inv).unwrap();
        let rooted = roots_to_doas(&poly, 1, 0.5).unwrap();
        assert!(!rooted.shortfall);
        assert!(
            (rooted.doas_deg[0] - theta0).abs() < 1e-6,
            "recovered {} vs {theta0}",
            rooted.doas_deg[0]
        );
    }

    #[test]
    fn flat_polynomial_reports_a_shortfall() {
        let m = 6;
        let poly = build_rooting_polynomial(&CMat::identity(m, m), &CMat::identity(m, m)).unwrap();
        let rooted = roots_to_doas(&poly, 2, 0.5).unwrap();
        assert!(rooted.shortfall);
    }
}
