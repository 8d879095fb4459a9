//! Model-order selection for the reduced-rank estimators.
//!
//! One maximal-rank state is adapted per angle; candidate ranks share it by
//! truncation (leading columns of the rank-reduction matrix, leading entries
//! of the auxiliary filter). Each candidate keeps an exponentially weighted
//! a-posteriori minimum-variance cost, updated from prefix inner products so
//! a whole sweep costs `O(r_max)` per snapshot, and the operating rank is the
//! smallest cost argmin.

use crate::{CVec, DoaError, Result, C64};

/// Exponentially weighted MV costs for ranks `r_min..=r_max`.
#[derive(Debug, Clone)]
pub struct RankCosts {
    r_min: usize,
    r_max: usize,
    weight: f64,
    costs: Vec<f64>,
}

impl RankCosts {
    pub fn new(r_min: usize, r_max: usize, weight: f64) -> Result<Self> {
        if r_min == 0 || r_min > r_max {
            return Err(DoaError::Domain(format!(
                "invalid rank range [{r_min}, {r_max}]"
            )));
        }
        if !(weight > 0.0 && weight <= 1.0) {
            return Err(DoaError::Domain(format!(
                "cost weight must lie in (0, 1], got {weight}"
            )));
        }
        Ok(Self {
            r_min,
            r_max,
            weight,
            costs: vec![0.0; r_max - r_min + 1],
        })
    }

    pub fn min_rank(&self) -> usize {
        self.r_min
    }

    pub fn values(&self) -> &[f64] {
        &self.costs
    }

    /// Decays every candidate cost and adds `|ḡ^{(r)H} T^{(r)H} x|²`, where
    /// the truncated products are prefix sums of `conj(ḡ_k)·(T^H x)_k`.
    pub fn absorb(&mut self, g_bar: &CVec, x_bar: &CVec) {
        let mut running = C64::new(0.0, 0.0);
        let upto = self.r_max.min(g_bar.len()).min(x_bar.len());
        for k in 0..upto {
            running += g_bar[k].conj() * x_bar[k];
            let rank = k + 1;
            if rank >= self.r_min {
                let idx = rank - self.r_min;
                self.costs[idx] = self.weight * self.costs[idx] + running.norm_sqr();
            }
        }
    }
}

/// Smallest rank attaining the minimum cost. `costs[i]` belongs to rank
/// `r_min + i`.
pub fn select_rank(costs: &[f64], r_min: usize) -> Result<usize> {
    if costs.is_empty() {
        return Err(DoaError::Domain("empty rank range".into()));
    }
    let mut best = 0usize;
    for (i, &c) in costs.iter().enumerate() {
        if c < costs[best] {
            best = i;
        }
    }
    Ok(r_min + best)
}

/// Batch form of the a-posteriori MV cost for one frozen `(T, ḡ)` pair:
/// `Σ_l ϱ^{i-l} |ḡ^H T^H x(l)|²` over the provided snapshots.
///
/// The recursive bookkeeping in [`RankCosts`] reproduces this exactly when
/// the state is held fixed; the estimator instead refreshes the state each
/// snapshot, so its running costs weight each term by the state that was
/// current when the snapshot arrived.
pub fn posterior_mv_cost(
    t: &crate::CMat,
    g_bar: &CVec,
    snapshots: &[CVec],
    weight: f64,
) -> Result<f64> {
    if t.ncols() != g_bar.len() {
        return Err(DoaError::Dimension(format!(
            "auxiliary filter has {} entries but the projection has {} columns",
            g_bar.len(),
            t.ncols()
        )));
    }
    if !(weight > 0.0 && weight <= 1.0) {
        return Err(DoaError::Domain(format!(
            "cost weight must lie in (0, 1], got {weight}"
        )));
    }
    let n = snapshots.len();
    let composite = t * g_bar; // T ḡ, applied as (T ḡ)^H x
    let mut cost = 0.0;
    for (l, x) in snapshots.iter().enumerate() {
        if x.len() != t.nrows() {
            return Err(DoaError::Dimension("snapshot length mismatch".into()));
        }
        let y = composite.dotc(x);
        cost += weight.powi((n - 1 - l) as i32) * y.norm_sqr();
    }
    Ok(cost)
}
