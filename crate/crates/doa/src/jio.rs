//! Joint iterative reduced-rank spectrum estimation.
//!
//! For every scanning angle `θ` the estimator alternates two closed-form
//! minimum-variance updates over the snapshot stream:
//!
//! * the rank-reduction matrix `T` (tall, `M×r`), the minimum-Frobenius-norm
//!   solution of the constrained problem given the auxiliary filter, and
//! * the auxiliary reduced-rank filter `ḡ` (`r`-dimensional), the
//!   unit-gain minimum-variance filter in the reduced space.
//!
//! The output power at `θ` is `P(θ) = 1/(ā^H R̄⁻¹ ā)` with `ā = T^H a(θ)` and
//! `R̄` the exponentially weighted reduced covariance. Four variants share the
//! recursion and differ only in how covariance inverses are produced:
//!
//! | variant      | full-rank inverse                | reduced inverse            |
//! |--------------|----------------------------------|----------------------------|
//! | `Jio`        | regularized inverse per snapshot | regularized inverse        |
//! | `JioFba`     | inverse of the FBA-smoothed covariance | forward + mirrored snapshot pair |
//! | `JioRls`     | inversion-lemma recursion        | inversion-lemma recursion  |
//! | `JioRlsFba`  | FBA correction of the lemma state | lemma над forward/backward pair |
//!
//! The full-rank statistics do not depend on the scanning angle, so they are
//! computed once per snapshot and shared across the whole grid; per-angle
//! work stays in the reduced dimension.

use crate::cov::{
    fba_inverse_full, fba_smooth, mirror_conjugate, regularized_inverse, CovarianceState,
    InverseState, Loading,
};
use crate::linalg::{hermitian_part, mv_weight};
use crate::rank::{select_rank, RankCosts};
use crate::search::ScanGrid;
use crate::signal::{steering_vector, SnapshotMatrix};
use crate::{CMat, CVec, DoaError, Result, C64};

/// Which member of the estimator family to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JioVariant {
    /// Batch recursion with explicit regularized inverses.
    Jio,
    /// Batch recursion on forward/backward averaged statistics.
    JioFba,
    /// Matrix-inversion-lemma recursion, no explicit inverse.
    JioRls,
    /// Lemma recursion on forward/backward averaged statistics.
    JioRlsFba,
}

impl JioVariant {
    pub fn is_rls(self) -> bool {
        matches!(self, JioVariant::JioRls | JioVariant::JioRlsFba)
    }

    pub fn is_fba(self) -> bool {
        matches!(self, JioVariant::JioFba | JioVariant::JioRlsFba)
    }
}

/// Operating rank: fixed, or selected per angle by the a-posteriori
/// minimum-variance cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankMode {
    Fixed(usize),
    Adaptive { min: usize, max: usize },
}

impl RankMode {
    pub fn max_rank(&self) -> usize {
        match *self {
            RankMode::Fixed(r) => r,
            RankMode::Adaptive { max, .. } => max,
        }
    }

    pub fn min_rank(&self) -> usize {
        match *self {
            RankMode::Fixed(r) => r,
            RankMode::Adaptive { min, .. } => min,
        }
    }
}

/// Estimator configuration. `delta`/`delta_bar` seed the RLS inverse states
/// (`Φ(0) = δI`); `init_full_diag`/`init_reduced_diag` seed the batch
/// covariances and exist so batch and RLS runs can be matched exactly
/// (`R(0) = δ⁻¹I`).
#[derive(Debug, Clone)]
pub struct JioConfig {
    pub variant: JioVariant,
    pub rank: RankMode,
    /// Forgetting factor `α ∈ (0, 1]`.
    pub alpha: f64,
    /// Loading policy for batch full-rank inversions.
    pub loading: Loading,
    /// Loading policy for batch reduced inversions; covers the first few
    /// snapshots where the reduced covariance is rank deficient.
    pub reduced_loading: Loading,
    /// RLS full-rank initialization `δ > 0`.
    pub delta: f64,
    /// RLS reduced initialization `δ̄ > 0`.
    pub delta_bar: f64,
    /// Batch full covariance starts from `init_full_diag·I`.
    pub init_full_diag: f64,
    /// Batch reduced covariance starts from `init_reduced_diag·I`.
    pub init_reduced_diag: f64,
    /// Exponential weight for rank selection; defaults to `alpha`.
    pub rank_weight: Option<f64>,
    /// Keep the joint state across scanning angles instead of re-initializing
    /// per angle. Off by default; per-angle resets keep angles independent.
    pub persist_across_angles: bool,
}

impl JioConfig {
    pub fn new(variant: JioVariant, rank: usize) -> Self {
        Self {
            variant,
            rank: RankMode::Fixed(rank),
            alpha: 0.998,
            loading: Loading::AUTO,
            reduced_loading: Loading::RelativeTrace(1e-3),
            delta: 1e-3,
            delta_bar: 1e-3,
            init_full_diag: 0.0,
            init_reduced_diag: 0.0,
            rank_weight: None,
            persist_across_angles: false,
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_rank_range(mut self, min: usize, max: usize) -> Self {
        self.rank = RankMode::Adaptive { min, max };
        self
    }

    fn validate(&self, num_sensors: usize) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(DoaError::Domain(format!(
                "forgetting factor must lie in (0, 1], got {}",
                self.alpha
            )));
        }
        let (lo, hi) = (self.rank.min_rank(), self.rank.max_rank());
        if lo == 0 || lo > hi || hi > num_sensors {
            return Err(DoaError::Domain(format!(
                "rank range [{lo}, {hi}] must satisfy 1 <= min <= max <= {num_sensors}"
            )));
        }
        if self.variant.is_rls() && !(self.delta > 0.0 && self.delta_bar > 0.0) {
            return Err(DoaError::Domain(
                "RLS initialization constants must be positive".into(),
            ));
        }
        if self.init_full_diag < 0.0 || self.init_reduced_diag < 0.0 {
            return Err(DoaError::Domain("covariance seeds must be >= 0".into()));
        }
        if let Some(w) = self.rank_weight {
            if !(w > 0.0 && w <= 1.0) {
                return Err(DoaError::Domain(format!(
                    "rank-selection weight must lie in (0, 1], got {w}"
                )));
            }
        }
        Ok(())
    }
}

/// Label captured in spectrum results.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumKind {
    Jio,
    JioFba,
    JioRls,
    JioRlsFba,
    Capon,
    Music,
}

impl From<JioVariant> for SpectrumKind {
    fn from(v: JioVariant) -> Self {
        match v {
            JioVariant::Jio => SpectrumKind::Jio,
            JioVariant::JioFba => SpectrumKind::JioFba,
            JioVariant::JioRls => SpectrumKind::JioRls,
            JioVariant::JioRlsFba => SpectrumKind::JioRlsFba,
        }
    }
}

/// Output power spectrum over a scan grid.
///
/// `power[n]·q_values[n] = 1` at every valid angle; angles that hit a
/// numerical fault are flagged invalid and excluded from peak search.
#[derive(Debug, Clone)]
pub struct SpectrumResult {
    pub angles_deg: Vec<f64>,
    pub power: Vec<f64>,
    pub q_values: Vec<f64>,
    pub rank_used: Vec<usize>,
    pub valid: Vec<bool>,
    pub kind: SpectrumKind,
    /// Number of angles that faulted.
    pub faults: usize,
    /// Largest observed `|ḡ^H T^H a − 1|` across angles and snapshots.
    pub max_constraint_residual: f64,
}

impl SpectrumResult {
    pub fn len(&self) -> usize {
        self.angles_deg.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles_deg.is_empty()
    }

    pub fn mean_rank(&self) -> f64 {
        let mut sum = 0.0;
        let mut n = 0usize;
        for (r, &ok) in self.rank_used.iter().zip(&self.valid) {
            if ok {
                sum += *r as f64;
                n += 1;
            }
        }
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    }
}

/// Rank-reduction update (the tall factor), given the current full-rank
/// inverse and auxiliary filter:
///
/// `T = (B a / a^H B a) · (ḡ^H / ‖ḡ‖²)`
///
/// This is the minimum-Frobenius-norm solution of `T ḡ = B a / (a^H B a)`
/// and therefore always rank one.
pub fn update_rank_reduction(full_inv: &CMat, a: &CVec, g_bar: &CVec) -> Result<CMat> {
    let g_norm_sq = g_bar.norm_squared();
    if g_norm_sq == 0.0 || !g_norm_sq.is_finite() {
        return Err(DoaError::Numerical(
            "auxiliary filter is degenerate (zero norm)".into(),
        ));
    }
    let f = mv_weight(full_inv, a).ok_or_else(|| {
        DoaError::Numerical("a^H B a is not positive; cannot form the MV direction".into())
    })?;
    Ok(&f * (g_bar.adjoint() / C64::new(g_norm_sq, 0.0)))
}

/// Auxiliary filter update: the unit-gain minimum-variance filter in the
/// reduced space, `ḡ = B̄ ā / (ā^H B̄ ā)`.
pub fn update_auxiliary(reduced_inv: &CMat, a_bar: &CVec) -> Result<CVec> {
    if a_bar.norm_squared() == 0.0 {
        return Err(DoaError::Numerical(
            "reduced steering vector vanished; angle must be skipped".into(),
        ));
    }
    mv_weight(reduced_inv, a_bar).ok_or_else(|| {
        DoaError::Numerical("ā^H B̄ ā is not positive; reduced statistics degenerate".into())
    })
}

/// Terminal per-angle state, enough to build the rooting polynomial.
#[derive(Debug, Clone)]
pub struct AngleState {
    /// Rank-reduction matrix truncated to the operating rank.
    pub t: CMat,
    /// Reduced-covariance inverse used for the output power.
    pub reduced_inv: CMat,
    pub rank: usize,
}

#[derive(Debug, Clone)]
struct AngleOutcome {
    power: f64,
    q_value: f64,
    rank_used: usize,
    valid: bool,
    residual: f64,
    state: Option<AngleState>,
}

impl AngleOutcome {
    fn fault() -> Self {
        Self {
            power: 0.0,
            q_value: 0.0,
            rank_used: 0,
            valid: false,
            residual: 0.0,
            state: None,
        }
    }
}

/// Per-snapshot full-rank inverses, shared by all scanning angles.
struct FullTrack {
    inv: Vec<CMat>,
}

fn precompute_full_track(data: &SnapshotMatrix, cfg: &JioConfig) -> Result<FullTrack> {
    let m = data.num_sensors();
    let n = data.num_snapshots();
    let mut inv = Vec::with_capacity(n);
    if cfg.variant.is_rls() {
        let mut phi = InverseState::new(m, cfg.alpha, cfg.delta)?;
        for i in 0..n {
            let x = CVec::from_column_slice(data.data.column(i).as_slice());
            phi.update(&x)?;
            if cfg.variant.is_fba() {
                let (corrected, _) = fba_inverse_full(phi.matrix())?;
                inv.push(corrected);
            } else {
                inv.push(phi.matrix().clone());
            }
        }
    } else {
        let mut cov = CovarianceState::new(m, cfg.alpha, cfg.init_full_diag)?;
        for i in 0..n {
            let x = CVec::from_column_slice(data.data.column(i).as_slice());
            cov.update(&x)?;
            let r = if cfg.variant.is_fba() {
                fba_smooth(cov.matrix())?
            } else {
                cov.matrix().clone()
            };
            let gamma = cfg.loading.gamma(&r);
            let (b, _) = regularized_inverse(&r, gamma)?;
            inv.push(b);
        }
    }
    Ok(FullTrack { inv })
}

/// Reduced-space statistic: weighted covariance (batch) or lemma-tracked
/// inverse (RLS).
enum ReducedStat {
    Batch(CovarianceState),
    Rls(InverseState),
}

impl ReducedStat {
    fn new_with_rank(cfg: &JioConfig, rank: usize) -> Result<Self> {
        if cfg.variant.is_rls() {
            Ok(ReducedStat::Rls(InverseState::new(
                rank,
                cfg.alpha,
                cfg.delta_bar,
            )?))
        } else {
            Ok(ReducedStat::Batch(CovarianceState::new(
                rank,
                cfg.alpha,
                cfg.init_reduced_diag,
            )?))
        }
    }

    /// Absorbs one snapshot. FBA variants fold in the mirrored conjugate
    /// snapshot with half weight each, which reproduces the smoothed
    /// covariance exactly and leaves plain data untouched when the snapshots
    /// are conjugate centrosymmetric.
    fn absorb(&mut self, x_bar: &CVec, x_bar_mirror: Option<&CVec>) -> Result<()> {
        match self {
            ReducedStat::Batch(cov) => match x_bar_mirror {
                None => cov.update(x_bar),
                Some(xb) => cov.update_forward_backward(x_bar, xb),
            },
            ReducedStat::Rls(phi) => match x_bar_mirror {
                None => phi.update(x_bar).map(|_| ()),
                Some(xb) => {
                    let half = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                    let alpha = phi.alpha();
                    phi.update_with_forgetting(&x_bar.map(|v| v * half), alpha)?;
                    phi.update_with_forgetting(&xb.map(|v| v * half), 1.0)?;
                    Ok(())
                }
            },
        }
    }

    /// Inverse of the current reduced covariance under the configured policy.
    fn inverse(&self, cfg: &JioConfig) -> Result<CMat> {
        match self {
            ReducedStat::Batch(cov) => {
                let gamma = cfg.reduced_loading.gamma(cov.matrix());
                Ok(regularized_inverse(cov.matrix(), gamma)?.0)
            }
            ReducedStat::Rls(phi) => Ok(phi.matrix().clone()),
        }
    }
}

fn initial_projection(m: usize, r_max: usize) -> CMat {
    CMat::from_fn(m, r_max, |i, j| {
        if i == j {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// One reduced-rank recursion at a fixed rank.
struct RankLane {
    rank: usize,
    t: CMat,
    reduced: ReducedStat,
    prev_g: Option<CVec>,
    last_a_bar: Option<CVec>,
    last_reduced_inv: Option<CMat>,
}

impl RankLane {
    fn new(cfg: &JioConfig, m: usize, rank: usize) -> Result<Self> {
        Ok(Self {
            rank,
            t: initial_projection(m, rank),
            reduced: ReducedStat::new_with_rank(cfg, rank)?,
            prev_g: None,
            last_a_bar: None,
            last_reduced_inv: None,
        })
    }

    /// One joint update. Returns the constraint residual, or `None` on a
    /// numerical fault.
    fn step(
        &mut self,
        cfg: &JioConfig,
        full_inv: &CMat,
        a: &CVec,
        x: &CVec,
        x_mirror: Option<&CVec>,
    ) -> Result<Option<f64>> {
        let x_bar = self.t.adjoint() * x;
        let a_bar = self.t.adjoint() * a;
        let mirrored = x_mirror.map(|xm| self.t.adjoint() * xm);
        self.reduced.absorb(&x_bar, mirrored.as_ref())?;
        let reduced_inv = self.reduced.inverse(cfg)?;
        let g = match update_auxiliary(&reduced_inv, &a_bar) {
            Ok(g) => g,
            Err(_) => return Ok(None),
        };
        let t = match update_rank_reduction(full_inv, a, &g) {
            Ok(t) => t,
            Err(_) => return Ok(None),
        };
        let residual = (g.dotc(&(t.adjoint() * a)) - C64::new(1.0, 0.0)).norm();
        self.t = t;
        self.prev_g = Some(g);
        self.last_a_bar = Some(a_bar);
        self.last_reduced_inv = Some(reduced_inv);
        Ok(Some(residual))
    }

    /// Output power from the terminal state of this lane.
    fn output(&self) -> Option<(f64, f64)> {
        let (a_bar, b) = match (&self.last_a_bar, &self.last_reduced_inv) {
            (Some(a), Some(b)) => (a, b),
            _ => return None,
        };
        let q = (a_bar.adjoint() * b * a_bar)[(0, 0)].re;
        if q.is_finite() && q > 0.0 {
            Some((1.0 / q, q))
        } else {
            None
        }
    }
}

/// Per-angle driver: one lane per candidate rank (a single lane for fixed
/// rank), all sharing the precomputed full-rank inverse stream.
///
/// Rank selection follows the exponentially weighted a-posteriori MV cost of
/// the truncated maximal state: the cost of rank `r` accumulates
/// `|ḡ^{(r)H} T^{(r)H} x|²` with `(T^{(r)}, ḡ^{(r)})` the leading columns and
/// entries of the widest lane. The selected rank's own lane provides the
/// output power, so the reported spectrum is always a self-consistent rank-r
/// recursion.
struct AngleRunner<'a> {
    cfg: &'a JioConfig,
    data: &'a SnapshotMatrix,
    full: &'a FullTrack,
    a: CVec,
    lanes: Vec<RankLane>,
    costs: Option<RankCosts>,
    selected_rank: usize,
    max_residual: f64,
}

impl<'a> AngleRunner<'a> {
    fn new(
        cfg: &'a JioConfig,
        data: &'a SnapshotMatrix,
        full: &'a FullTrack,
        theta_deg: f64,
    ) -> Result<Self> {
        let m = data.num_sensors();
        let a = steering_vector(&data.geometry, theta_deg)?;
        let (lanes, costs) = match cfg.rank {
            RankMode::Fixed(r) => (vec![RankLane::new(cfg, m, r)?], None),
            RankMode::Adaptive { min, max } => {
                let lanes = (min..=max)
                    .map(|r| RankLane::new(cfg, m, r))
                    .collect::<Result<Vec<_>>>()?;
                let costs = RankCosts::new(min, max, cfg.rank_weight.unwrap_or(cfg.alpha))?;
                (lanes, Some(costs))
            }
        };
        Ok(Self {
            cfg,
            data,
            full,
            a,
            lanes,
            costs,
            selected_rank: cfg.rank.min_rank(),
            max_residual: 0.0,
        })
    }

    /// Runs the joint recursion over all snapshots. Returns `None` on a
    /// numerical fault (angle flagged invalid by the caller).
    fn run(&mut self) -> Result<Option<()>> {
        let n = self.data.num_snapshots();
        let fba = self.cfg.variant.is_fba();
        for i in 0..n {
            let x = CVec::from_column_slice(self.data.data.column(i).as_slice());
            let x_mirror = fba.then(|| mirror_conjugate(&x));

            if let Some(costs) = self.costs.as_mut() {
                // Widest lane carries the maximal state the truncated costs
                // are defined on.
                let widest = self.lanes.last().expect("at least one lane");
                if let Some(g_prev) = widest.prev_g.as_ref() {
                    let x_bar = widest.t.adjoint() * &x;
                    costs.absorb(g_prev, &x_bar);
                    self.selected_rank = select_rank(costs.values(), costs.min_rank())?;
                }
            }

            for lane in &mut self.lanes {
                match lane.step(self.cfg, &self.full.inv[i], &self.a, &x, x_mirror.as_ref())? {
                    Some(residual) => self.max_residual = self.max_residual.max(residual),
                    None => return Ok(None),
                }
            }
        }
        Ok(Some(()))
    }

    fn selected_lane(&self) -> &RankLane {
        match self.cfg.rank {
            RankMode::Fixed(_) => &self.lanes[0],
            RankMode::Adaptive { min, .. } => &self.lanes[self.selected_rank - min],
        }
    }

    /// Output power from the selected lane's terminal state.
    fn finish(&self, want_state: bool) -> Result<AngleOutcome> {
        let lane = self.selected_lane();
        let (power, q) = match lane.output() {
            Some(pq) => pq,
            None => return Ok(AngleOutcome::fault()),
        };
        let state = want_state.then(|| AngleState {
            t: lane.t.clone(),
            reduced_inv: hermitian_part(
                lane.last_reduced_inv.as_ref().expect("output succeeded"),
            ),
            rank: lane.rank,
        });
        Ok(AngleOutcome {
            power,
            q_value: q,
            rank_used: lane.rank,
            valid: true,
            residual: self.max_residual,
            state,
        })
    }
}

fn run_spectrum(
    data: &SnapshotMatrix,
    grid: &ScanGrid,
    cfg: &JioConfig,
    want_states: bool,
) -> Result<(SpectrumResult, Vec<Option<AngleState>>)> {
    cfg.validate(data.num_sensors())?;
    let full = precompute_full_track(data, cfg)?;
    let angles = grid.angles_deg();

    let run_one = |theta: f64| -> Result<AngleOutcome> {
        let mut runner = AngleRunner::new(cfg, data, &full, theta)?;
        match runner.run()? {
            Some(()) => runner.finish(want_states),
            None => Ok(AngleOutcome::fault()),
        }
    };

    let outcomes: Vec<Result<AngleOutcome>> = if cfg.persist_across_angles {
        // Single initialization for the whole scan: the joint state carries
        // over from angle to angle, so the sweep is inherently sequential.
        let mut acc = Vec::with_capacity(angles.len());
        let mut carried: Option<Vec<RankLane>> = None;
        for &theta in angles {
            let mut runner = match AngleRunner::new(cfg, data, &full, theta) {
                Ok(r) => r,
                Err(e) => {
                    acc.push(Err(e));
                    continue;
                }
            };
            if let Some(lanes) = carried.take() {
                runner.lanes = lanes;
            }
            let out = match runner.run() {
                Ok(Some(())) => runner.finish(want_states),
                Ok(None) => Ok(AngleOutcome::fault()),
                Err(e) => Err(e),
            };
            carried = Some(std::mem::take(&mut runner.lanes));
            acc.push(out);
        }
        acc
    } else {
        crate::par::indexed_map(angles.len(), |idx| run_one(angles[idx]))
    };

    let mut result = SpectrumResult {
        angles_deg: angles.to_vec(),
        power: Vec::with_capacity(angles.len()),
        q_values: Vec::with_capacity(angles.len()),
        rank_used: Vec::with_capacity(angles.len()),
        valid: Vec::with_capacity(angles.len()),
        kind: cfg.variant.into(),
        faults: 0,
        max_constraint_residual: 0.0,
    };
    let mut states = Vec::with_capacity(angles.len());
    for outcome in outcomes {
        let o = outcome?;
        if !o.valid {
            result.faults += 1;
        }
        result.power.push(o.power);
        result.q_values.push(o.q_value);
        result.rank_used.push(o.rank_used);
        result.valid.push(o.valid);
        result.max_constraint_residual = result.max_constraint_residual.max(o.residual);
        states.push(o.state);
    }
    Ok((result, states))
}

/// Output power spectrum of the configured variant over the scan grid.
pub fn jio_spectrum(
    data: &SnapshotMatrix,
    grid: &ScanGrid,
    cfg: &JioConfig,
) -> Result<SpectrumResult> {
    run_spectrum(data, grid, cfg, false).map(|(s, _)| s)
}

/// Like [`jio_spectrum`] but also returns the terminal per-angle state, which
/// the polynomial-rooting refinement consumes.
pub fn jio_spectrum_with_states(
    data: &SnapshotMatrix,
    grid: &ScanGrid,
    cfg: &JioConfig,
) -> Result<(SpectrumResult, Vec<Option<AngleState>>)> {
    run_spectrum(data, grid, cfg, true)
}
