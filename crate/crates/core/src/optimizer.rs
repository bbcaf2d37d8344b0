//! One-dimensional searches over scenarios: modulation variance, maximal
//! distance and the positive-rate frontier in the `(L_AC, L_BC)` plane.

use log::{debug, warn};
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::estimation::{simulate_protocol_estimates, Sampler};
use crate::finite_size::{
    asymptotic_key_rate, finite_key_rate, EstimationMode, FiniteSizeParams, KeyRateOptions, KeyRateReport,
};
use crate::protocol::ProtocolParams;

/// Default variance search interval in SNU.
pub const DEFAULT_VARIANCE_RANGE: (f64, f64) = (0.1, 1e6);
/// Points in the log-spaced bracketing scan before golden-section refinement.
pub const COARSE_SCAN_POINTS: usize = 40;
/// Relative tolerance on the optimal variance.
pub const VARIANCE_REL_TOL: f64 = 1e-4;
/// Relative rate difference under which the upper bound counts as optimal.
pub const PLATEAU_REL_TOL: f64 = 1e-4;
/// Default upper bracket for distance searches, km.
pub const DEFAULT_DISTANCE_BOUND_KM: f64 = 200.0;
/// Step of the monotonicity scan preceding bisection, km.
pub const DISTANCE_SCAN_STEP_KM: f64 = 1.0;
/// Final bracket width of the distance bisection, km.
pub const DISTANCE_TOL_KM: f64 = 1e-3;

/// Seeded estimation from simulated data instead of model values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sampling {
    pub seed: u64,
    pub trial: u64,
    pub sampler: Sampler,
}

/// A complete evaluation setup. `finite == None` means the asymptotic rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub protocol: ProtocolParams,
    pub finite: Option<FiniteSizeParams>,
    pub options: KeyRateOptions,
    pub sampling: Option<Sampling>,
}

impl Scenario {
    pub fn theory(protocol: ProtocolParams, finite: Option<FiniteSizeParams>) -> Self {
        Self {
            protocol,
            finite,
            options: KeyRateOptions::default(),
            sampling: None,
        }
    }

    pub fn key_rate(&self) -> Result<KeyRateReport> {
        let Some(fs) = &self.finite else {
            return asymptotic_key_rate(&self.protocol);
        };
        let mode = match self.sampling {
            None => EstimationMode::Theory,
            Some(s) => {
                fs.validate()?;
                let m = fs.estimation_signals().round() as u64;
                EstimationMode::FromSamples(simulate_protocol_estimates(&self.protocol, m, s.seed, s.trial, s.sampler)?)
            }
        };
        finite_key_rate(&self.protocol, fs, &mode, &self.options)
    }

    /// Copy with one axis set to `value`.
    pub fn with(&self, axis: SweepVariable, value: f64) -> Result<Scenario> {
        let mut s = *self;
        match axis {
            SweepVariable::DistanceAc => s.protocol.l_ac = value,
            SweepVariable::DistanceBc => s.protocol.l_bc = value,
            SweepVariable::Variance => s.protocol = s.protocol.with_modulation(value),
            SweepVariable::BlockLength => {
                let fs = s
                    .finite
                    .as_mut()
                    .ok_or_else(|| invalid("n_total", value, "block-length sweep needs finite-size parameters"))?;
                if !(value >= 2.0 && value.is_finite()) {
                    return Err(invalid("n_total", value, "need at least 2 signals"));
                }
                fs.n_total = value.round() as u64;
            }
        }
        Ok(s)
    }

    fn rate(&self) -> Result<f64> {
        self.key_rate().map(|r| r.k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    DistanceAc,
    DistanceBc,
    Variance,
    BlockLength,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::DistanceAc => "distance_ac",
            SweepVariable::DistanceBc => "distance_bc",
            SweepVariable::Variance => "variance",
            SweepVariable::BlockLength => "block_length",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Self::DistanceAc, Self::DistanceBc, Self::Variance, Self::BlockLength]
            .into_iter()
            .find(|v| v.name() == s)
    }

    /// Log spacing for the multiplicative axes.
    pub fn default_log(self) -> bool {
        matches!(self, SweepVariable::Variance | SweepVariable::BlockLength)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    pub log_spaced: bool,
}

impl SweepSpec {
    pub fn new(variable: SweepVariable, lo: f64, hi: f64, points: usize) -> Self {
        Self {
            variable,
            lo,
            hi,
            points,
            log_spaced: variable.default_log(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo < self.hi) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(invalid("range", self.lo, "need finite lo < hi"));
        }
        if self.points < 2 {
            return Err(invalid("points", self.points as f64, "need at least 2 points"));
        }
        if self.log_spaced && self.lo <= 0.0 {
            return Err(invalid("range", self.lo, "log spacing needs a positive lower bound"));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                let f = i as f64 / last;
                match (i, self.log_spaced) {
                    (0, _) => self.lo,
                    (i, _) if i == self.points - 1 => self.hi,
                    (_, true) => (self.lo.ln() + f * (self.hi / self.lo).ln()).exp(),
                    (_, false) => self.lo + f * (self.hi - self.lo),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub scenario: Scenario,
    pub report: KeyRateReport,
}

/// Evaluates the rate along one axis; points run in parallel, output in input order.
pub fn sweep(base: &Scenario, spec: &SweepSpec) -> Result<Vec<SweepPoint>> {
    spec.validate()?;
    spec.values()
        .into_par_iter()
        .map(|value| {
            let scenario = base.with(spec.variable, value)?;
            Ok(SweepPoint {
                value,
                scenario,
                report: scenario.key_rate()?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceOptimum {
    pub v_star: f64,
    pub k_star: f64,
    pub report: KeyRateReport,
    /// The rate is still flat or rising at the upper bound of the range.
    pub unbounded: bool,
}

/// Maximises the rate over `V_A = V_B` in `[v_lo, v_hi]`.
///
/// A log-spaced scan brackets the best point; golden-section search in
/// `ln v` refines it. If the upper bound is within [`PLATEAU_REL_TOL`] of the
/// best rate found, the upper bound is returned with `unbounded` set.
pub fn optimal_modulation(base: &Scenario, v_lo: f64, v_hi: f64) -> Result<VarianceOptimum> {
    if !(v_lo > 0.0 && v_lo <= v_hi && v_hi.is_finite()) {
        return Err(invalid("v_range", v_lo, "need 0 < lo <= hi"));
    }
    let eval = |ln_v: f64| -> Result<(f64, KeyRateReport)> {
        let v = ln_v.exp().clamp(v_lo, v_hi);
        Ok((v, base.with(SweepVariable::Variance, v)?.key_rate()?))
    };
    if v_lo == v_hi {
        let (v, report) = eval(v_lo.ln())?;
        return Ok(VarianceOptimum {
            v_star: v,
            k_star: report.k,
            report,
            unbounded: false,
        });
    }

    let (a, b) = (v_lo.ln(), v_hi.ln());
    let grid: Vec<f64> = (0..COARSE_SCAN_POINTS)
        .map(|i| a + (b - a) * i as f64 / (COARSE_SCAN_POINTS - 1) as f64)
        .collect();
    let scanned: Vec<Option<(f64, KeyRateReport)>> = grid
        .par_iter()
        .map(|&x| match eval(x) {
            Ok(r) => Some(r),
            Err(e) => {
                debug!("variance scan point {} skipped: {e}", x.exp());
                None
            }
        })
        .collect();
    let mut best_i = None;
    for (i, s) in scanned.iter().enumerate() {
        if let Some((_, r)) = s {
            if best_i.is_none_or(|j: usize| r.k > scanned[j].unwrap().1.k) {
                best_i = Some(i);
            }
        }
    }
    let best_i = best_i.ok_or_else(|| Error::EstimationFailure("no evaluable variance in range".into()))?;
    let (mut best_v, mut best) = scanned[best_i].unwrap();

    let (mut lo, mut hi) = (grid[best_i.saturating_sub(1)], grid[(best_i + 1).min(grid.len() - 1)]);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let rate_at = |x: f64| eval(x).ok();
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = rate_at(x1);
    let mut f2 = rate_at(x2);
    let k_of = |f: &Option<(f64, KeyRateReport)>| f.map_or(f64::NEG_INFINITY, |(_, r)| r.k);
    while hi - lo > VARIANCE_REL_TOL.ln_1p() {
        if k_of(&f1) >= k_of(&f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = rate_at(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = rate_at(x2);
        }
        for (v, r) in [f1, f2].into_iter().flatten() {
            if r.k > best.k {
                best = r;
                best_v = v;
            }
        }
    }

    let top = scanned.last().copied().flatten();
    let unbounded = top.is_some_and(|(_, r)| r.k >= best.k - PLATEAU_REL_TOL * best.k.abs());
    if unbounded {
        let (v, r) = top.unwrap();
        return Ok(VarianceOptimum {
            v_star: v,
            k_star: r.k,
            report: r,
            unbounded: true,
        });
    }
    if best.k <= 0.0 {
        warn!("no positive key rate for V in [{v_lo}, {v_hi}]; best is {} at V = {best_v}", best.k);
    }
    Ok(VarianceOptimum {
        v_star: best_v,
        k_star: best.k,
        report: best,
        unbounded: false,
    })
}

/// Outcome of a distance search.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceResult {
    pub distance_km: f64,
    /// Set when the rate was never positive or stayed positive up to the bound.
    pub diagnostic: Option<String>,
}

fn distance_search(
    base: &Scenario,
    axis: SweepVariable,
    bound_km: f64,
    rate: impl Fn(&Scenario) -> Result<f64> + Sync,
) -> Result<DistanceResult> {
    if !matches!(axis, SweepVariable::DistanceAc | SweepVariable::DistanceBc) {
        return Err(invalid("axis", 0.0, "distance search runs along a distance axis"));
    }
    if !(bound_km > 0.0 && bound_km.is_finite()) {
        return Err(invalid("search_hi", bound_km, "must be a positive distance"));
    }
    let k_at = |l: f64| base.with(axis, l).and_then(|s| rate(&s));
    let k0 = k_at(0.0)?;
    if k0 <= 0.0 {
        return Ok(DistanceResult {
            distance_km: 0.0,
            diagnostic: Some(format!("key rate {k0:.3e} is not positive at zero distance")),
        });
    }
    let (mut prev_l, mut prev_k) = (0.0, k0);
    loop {
        let l = (prev_l + DISTANCE_SCAN_STEP_KM).min(bound_km);
        let k = k_at(l)?;
        if k >= prev_k {
            return Err(Error::NonMonotone {
                quantity: "key rate versus distance",
                at: l,
                detail: format!("k({prev_l}) = {prev_k:e} but k({l}) = {k:e}"),
            });
        }
        if k <= 0.0 {
            let (mut lo, mut hi) = (prev_l, l);
            while hi - lo > DISTANCE_TOL_KM {
                let mid = 0.5 * (lo + hi);
                if k_at(mid)? > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(DistanceResult {
                distance_km: lo,
                diagnostic: None,
            });
        }
        if l >= bound_km {
            return Ok(DistanceResult {
                distance_km: bound_km,
                diagnostic: Some(format!("key rate still positive at the {bound_km} km search bound")),
            });
        }
        (prev_l, prev_k) = (l, k);
    }
}

/// Largest distance along `axis` with positive key rate at the scenario's variance.
///
/// The rate is sampled every [`DISTANCE_SCAN_STEP_KM`] and must decrease
/// strictly until it turns nonpositive; the crossing is then bisected.
pub fn max_distance(base: &Scenario, axis: SweepVariable, bound_km: f64) -> Result<DistanceResult> {
    distance_search(base, axis, bound_km, Scenario::rate)
}

/// As [`max_distance`], with the variance re-optimised at every distance.
pub fn max_distance_optimal_modulation(
    base: &Scenario,
    axis: SweepVariable,
    bound_km: f64,
    v_range: (f64, f64),
) -> Result<DistanceResult> {
    distance_search(base, axis, bound_km, |s| {
        optimal_modulation(s, v_range.0, v_range.1).map(|o| o.k_star)
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontierPoint {
    pub l_bc: f64,
    pub l_ac_max: f64,
}

/// Maximal `L_AC` for each `L_BC` in `grid`, computed in parallel.
///
/// Fails with [`Error::NonMonotone`] if the boundary rises with `L_BC`
/// by more than the bisection tolerance.
pub fn distance_frontier(base: &Scenario, grid: &[f64], bound_km: f64) -> Result<Vec<FrontierPoint>> {
    if grid.is_empty() {
        return Err(invalid("grid", 0.0, "need at least one L_BC value"));
    }
    let points: Vec<FrontierPoint> = grid
        .par_iter()
        .map(|&l_bc| {
            let s = base.with(SweepVariable::DistanceBc, l_bc)?;
            let r = max_distance(&s, SweepVariable::DistanceAc, bound_km)?;
            Ok(FrontierPoint {
                l_bc,
                l_ac_max: r.distance_km,
            })
        })
        .collect::<Result<_>>()?;
    let mut sorted: Vec<&FrontierPoint> = points.iter().collect();
    sorted.sort_by(|a, b| a.l_bc.total_cmp(&b.l_bc));
    for w in sorted.windows(2) {
        if w[1].l_ac_max > w[0].l_ac_max + DISTANCE_TOL_KM {
            return Err(Error::NonMonotone {
                quantity: "frontier",
                at: w[1].l_bc,
                detail: format!(
                    "max L_AC rose from {} km at L_BC = {} to {} km",
                    w[0].l_ac_max, w[0].l_bc, w[1].l_ac_max
                ),
            });
        }
    }
    Ok(points)
}

/// Largest `L_BC` with positive rate when Charlie sits at Alice (`L_AC = 0`).
pub fn frontier_terminal(base: &Scenario, bound_km: f64) -> Result<DistanceResult> {
    max_distance(&base.with(SweepVariable::DistanceAc, 0.0)?, SweepVariable::DistanceBc, bound_km)
}
