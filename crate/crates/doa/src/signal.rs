//! Uniform linear array data model: steering vectors, source symbol streams
//! and noisy snapshot matrices.
//!
//! Angles are measured so that a plane wave from `θ` produces the phase
//! progression `exp(-2πj·m·(d/λ)·cos θ)` across the sensors, with `θ` in the
//! open interval (0°, 180°). Source symbols are real-valued amplitudes; the
//! sensor noise is circular complex Gaussian with independent real and
//! imaginary parts of variance `σ_n²/2` each.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::{CMat, CVec, DoaError, Result, C64};

/// Uniform linear array description.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    /// Number of sensors `M`.
    pub num_sensors: usize,
    /// Inter-element spacing over wavelength, `d/λ`.
    pub spacing_ratio: f64,
}

impl ArrayGeometry {
    /// Half-wavelength spacing for `m` sensors.
    pub fn half_wavelength(m: usize) -> Result<Self> {
        Self::new(m, 0.5)
    }

    pub fn new(num_sensors: usize, spacing_ratio: f64) -> Result<Self> {
        if num_sensors == 0 {
            return Err(DoaError::Domain("array needs at least one sensor".into()));
        }
        if !(spacing_ratio.is_finite() && spacing_ratio > 0.0) {
            return Err(DoaError::Domain(format!(
                "spacing ratio must be positive and finite, got {spacing_ratio}"
            )));
        }
        Ok(Self {
            num_sensors,
            spacing_ratio,
        })
    }

    /// True when the spacing exceeds λ/2 and grating lobes become possible.
    pub fn aliases(&self) -> bool {
        self.spacing_ratio > 0.5
    }
}

/// Source amplitude distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modulation {
    /// Symbols drawn i.i.d. uniform from `{+σ_s, −σ_s}`.
    Bpsk,
    /// Zero-mean Gaussian amplitudes of variance `σ_s²`.
    Gaussian,
}

/// One emitter configuration: DOAs, powers, correlation and snapshot count.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceScenario {
    /// Source DOAs in degrees, strictly inside (0, 180), pairwise distinct.
    pub doas_deg: Vec<f64>,
    /// Per-source symbol power `σ_s²`.
    pub source_power: f64,
    /// Correlation `τ ∈ [0, 1]` between the first two sources (Gaussian mode).
    pub correlation: f64,
    pub modulation: Modulation,
    /// Number of snapshots `N`.
    pub num_snapshots: usize,
    /// Per-sensor noise power `σ_n²`.
    pub noise_power: f64,
}

impl SourceScenario {
    pub fn num_sources(&self) -> usize {
        self.doas_deg.len()
    }

    /// Validates field domains and cross-field constraints.
    pub fn validate(&self) -> Result<()> {
        if self.doas_deg.is_empty() {
            return Err(DoaError::Domain("scenario needs at least one source".into()));
        }
        for &theta in &self.doas_deg {
            check_angle(theta)?;
        }
        for i in 0..self.doas_deg.len() {
            for j in (i + 1)..self.doas_deg.len() {
                if self.doas_deg[i] == self.doas_deg[j] {
                    return Err(DoaError::Domain(format!(
                        "duplicate DOA {} deg; steering vectors must stay independent",
                        self.doas_deg[i]
                    )));
                }
            }
        }
        if !(self.source_power.is_finite() && self.source_power >= 0.0) {
            return Err(DoaError::Domain("source power must be >= 0".into()));
        }
        if !(self.noise_power.is_finite() && self.noise_power >= 0.0) {
            return Err(DoaError::Domain("noise power must be >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.correlation) {
            return Err(DoaError::Domain(format!(
                "correlation must lie in [0, 1], got {}",
                self.correlation
            )));
        }
        if self.correlation > 0.0 {
            if self.num_sources() < 2 {
                return Err(DoaError::Domain(
                    "correlation applies to the first source pair; need q >= 2".into(),
                ));
            }
            if self.modulation == Modulation::Bpsk {
                return Err(DoaError::Domain(
                    "correlated sources are defined for Gaussian amplitudes only".into(),
                ));
            }
        }
        if self.num_snapshots == 0 {
            return Err(DoaError::Domain("need at least one snapshot".into()));
        }
        Ok(())
    }
}

/// Complex `M×N` observation block plus the geometry that produced it.
#[derive(Debug, Clone)]
pub struct SnapshotMatrix {
    pub data: CMat,
    pub geometry: ArrayGeometry,
}

impl SnapshotMatrix {
    /// Wraps raw observations, checking shape against the geometry and that
    /// every entry is finite.
    pub fn new(data: CMat, geometry: ArrayGeometry) -> Result<Self> {
        if data.nrows() != geometry.num_sensors {
            return Err(DoaError::Dimension(format!(
                "data has {} rows but the array has {} sensors",
                data.nrows(),
                geometry.num_sensors
            )));
        }
        if data.ncols() == 0 {
            return Err(DoaError::Domain("need at least one snapshot".into()));
        }
        if data.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(DoaError::Domain("snapshot matrix has non-finite entries".into()));
        }
        Ok(Self { data, geometry })
    }

    pub fn num_sensors(&self) -> usize {
        self.data.nrows()
    }

    pub fn num_snapshots(&self) -> usize {
        self.data.ncols()
    }

    /// Returns a copy with every entry scaled by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            data: self.data.map(|z| z * c),
            geometry: self.geometry,
        }
    }
}

fn check_angle(theta_deg: f64) -> Result<()> {
    if !(theta_deg.is_finite() && theta_deg > 0.0 && theta_deg < 180.0) {
        return Err(DoaError::Domain(format!(
            "angle must lie strictly inside (0, 180) degrees, got {theta_deg}"
        )));
    }
    Ok(())
}

/// Array response `a(θ)` with entries `exp(-2πj·m·(d/λ)·cos θ)`, `m = 0..M-1`.
pub fn steering_vector(geometry: &ArrayGeometry, theta_deg: f64) -> Result<CVec> {
    check_angle(theta_deg)?;
    let phase_step = -2.0 * std::f64::consts::PI
        * geometry.spacing_ratio
        * theta_deg.to_radians().cos();
    Ok(CVec::from_fn(geometry.num_sensors, |m, _| {
        C64::from_polar(1.0, phase_step * m as f64)
    }))
}

/// Element-wise derivative `da(θ)/dθ` with `θ` in radians.
///
/// Feeds the Fisher information blocks of the Cramér-Rao bound.
pub fn steering_derivative(geometry: &ArrayGeometry, theta_deg: f64) -> Result<CVec> {
    let a = steering_vector(geometry, theta_deg)?;
    let theta = theta_deg.to_radians();
    let scale = 2.0 * std::f64::consts::PI * geometry.spacing_ratio * theta.sin();
    Ok(CVec::from_fn(geometry.num_sensors, |m, _| {
        a[m] * C64::new(0.0, scale * m as f64)
    }))
}

/// Steering matrix `A(θ) = [a(θ_1) … a(θ_q)]`.
pub fn steering_matrix(geometry: &ArrayGeometry, doas_deg: &[f64]) -> Result<CMat> {
    let mut a = CMat::zeros(geometry.num_sensors, doas_deg.len());
    for (k, &theta) in doas_deg.iter().enumerate() {
        a.set_column(k, &steering_vector(geometry, theta)?);
    }
    Ok(a)
}

/// Draws the real `q×N` symbol matrix for a scenario.
///
/// In Gaussian mode with `τ > 0` the second row is `τ·s₁ + √(1−τ²)·s₃` for an
/// independent third stream, so the first pair has correlation `τ` while
/// keeping power `σ_s²`. Remaining rows are independent.
pub fn generate_sources<R: Rng>(
    scenario: &SourceScenario,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    scenario.validate()?;
    let q = scenario.num_sources();
    let n = scenario.num_snapshots;
    let amplitude = scenario.source_power.sqrt();
    let mut s = DMatrix::<f64>::zeros(q, n);
    match scenario.modulation {
        Modulation::Bpsk => {
            for j in 0..n {
                for i in 0..q {
                    let bit: bool = rng.gen();
                    s[(i, j)] = if bit { amplitude } else { -amplitude };
                }
            }
        }
        Modulation::Gaussian => {
            for j in 0..n {
                for i in 0..q {
                    let z: f64 = rng.sample(StandardNormal);
                    s[(i, j)] = amplitude * z;
                }
            }
            let tau = scenario.correlation;
            if tau > 0.0 {
                let mix = (1.0 - tau * tau).sqrt();
                for j in 0..n {
                    let extra: f64 = rng.sample(StandardNormal);
                    s[(1, j)] = tau * s[(0, j)] + mix * amplitude * extra;
                }
            }
        }
    }
    Ok(s)
}

/// Generates `X = A(θ)·S + noise` for one trial.
///
/// Deterministic given the generator state; the symbol draw happens before
/// the noise draw, column-major in both cases.
pub fn generate_snapshots<R: Rng>(
    scenario: &SourceScenario,
    geometry: &ArrayGeometry,
    rng: &mut R,
) -> Result<SnapshotMatrix> {
    scenario.validate()?;
    let q = scenario.num_sources();
    let m = geometry.num_sensors;
    if q > m {
        return Err(DoaError::config(
            "scenario.doas_deg",
            format!("{q} sources exceed the {m}-sensor array"),
        ));
    }
    let a = steering_matrix(geometry, &scenario.doas_deg)?;
    let s = generate_sources(scenario, rng)?;
    let n = scenario.num_snapshots;
    let mut x = CMat::zeros(m, n);
    for j in 0..n {
        for i in 0..m {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..q {
                acc += a[(i, k)] * s[(k, j)];
            }
            x[(i, j)] = acc;
        }
    }
    if scenario.noise_power > 0.0 {
        let sigma = (scenario.noise_power / 2.0).sqrt();
        for j in 0..n {
            for i in 0..m {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                x[(i, j)] += C64::new(sigma * re, sigma * im);
            }
        }
    }
    SnapshotMatrix::new(x, *geometry)
}
