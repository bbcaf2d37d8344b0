//! Finite-size key rate.
//!
//! Of the `N` exchanged signals, `m = est_fraction·N` are disclosed for
//! parameter estimation and `n = N − m` feed the key. The rate is
//!
//! ```text
//! k = (n/N) · [β·I_AB − χ_BE^worst − Δ(n)]
//! ```
//!
//! where `χ_BE^worst` is Eve's Holevo information maximised over the corners
//! of the confidence region around the estimated channel parameters, and
//! `Δ(n)` is the privacy-amplification penalty.

use std::fmt;

use log::warn;

use crate::error::{invalid, Error, Result};
use crate::gaussian::{holevo_bound, mutual_information, TwoModeCov};
use crate::protocol::{equivalent_one_way, one_way_two_mode_cov, DetectorModel, OneWayEquivalent, ProtocolParams};

/// Default value of `ε_PE`, `ε̄` and `ε_PA`.
pub const DEFAULT_EPSILON: f64 = 1e-10;

/// Block-length and security-parameter budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteSizeParams {
    /// Total number of exchanged signals `N`.
    pub n_total: u64,
    /// Fraction of `N` disclosed for parameter estimation.
    pub est_fraction: f64,
    /// Parameter-estimation failure probability `ε_PE`.
    pub eps_pe: f64,
    /// Smoothing parameter `ε̄`.
    pub eps_smooth: f64,
    /// Privacy-amplification failure probability `ε_PA`.
    pub eps_pa: f64,
    /// Dimension of the raw-key alphabet's Hilbert space.
    pub dim_hx: u32,
}

impl FiniteSizeParams {
    /// Half of the block used for estimation, all ε at 1e-10, `dim H_X = 2`.
    pub fn new(n_total: u64) -> Self {
        Self {
            n_total,
            est_fraction: 0.5,
            eps_pe: DEFAULT_EPSILON,
            eps_smooth: DEFAULT_EPSILON,
            eps_pa: DEFAULT_EPSILON,
            dim_hx: 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_total < 2 {
            return Err(invalid("n_total", self.n_total as f64, "need at least 2 signals"));
        }
        if !(self.est_fraction > 0.0 && self.est_fraction < 1.0) {
            return Err(invalid("est_fraction", self.est_fraction, "must lie in (0, 1)"));
        }
        for (name, eps) in [
            ("eps_pe", self.eps_pe),
            ("eps_smooth", self.eps_smooth),
            ("eps_pa", self.eps_pa),
        ] {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(invalid(name, eps, "probability must lie in (0, 1)"));
            }
        }
        if self.dim_hx != 2 {
            return Err(invalid("dim_hx", self.dim_hx as f64, "raw-key Hilbert space dimension is 2"));
        }
        Ok(())
    }

    /// `m`, the number of signals sacrificed for estimation.
    pub fn estimation_signals(&self) -> f64 {
        self.est_fraction * self.n_total as f64
    }

    /// `n = N − m`, the number of signals that feed the key.
    pub fn key_signals(&self) -> f64 {
        self.n_total as f64 - self.estimation_signals()
    }
}

/// Privacy-amplification penalty for `n` key signals:
/// `(2·dim H_X + 3)·√(log2(2/ε̄)/n) + (2/n)·log2(1/ε_PA)`.
pub fn delta_n_at(n: f64, eps_smooth: f64, eps_pa: f64, dim_hx: u32) -> Result<f64> {
    if !(n >= 1.0) {
        return Err(invalid("n", n, "need at least one key signal"));
    }
    let smoothing = (2.0 * dim_hx as f64 + 3.0) * ((2.0 / eps_smooth).log2() / n).sqrt();
    Ok(smoothing + 2.0 / n * (1.0 / eps_pa).log2())
}

/// `Δ(n)` for the key part of the block described by `fs`.
pub fn delta_n(fs: &FiniteSizeParams) -> Result<f64> {
    delta_n_at(fs.key_signals(), fs.eps_smooth, fs.eps_pa, fs.dim_hx)
}

/// Two-sided Gaussian quantile: the `z` with `erfc(z/√2) = eps_pe`, i.e. tail
/// mass `eps_pe/2` on each side.
pub fn z_quantile(eps_pe: f64) -> Result<f64> {
    if !(eps_pe > 0.0 && eps_pe < 1.0) {
        return Err(Error::Domain {
            function: "z_quantile",
            detail: format!("probability must lie in (0, 1), got {eps_pe}"),
        });
    }
    Ok(std::f64::consts::SQRT_2 * statrs::function::erf::erfc_inv(eps_pe))
}

/// The six quantities estimated from the disclosed signals: pre-beam-splitter
/// amplitudes `t′_i`, noise variances `σ′_i²` (SNU) and modulation variances.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EstimatedParams {
    pub t1p: f64,
    pub t2p: f64,
    pub s1p2: f64,
    pub s2p2: f64,
    pub va: f64,
    pub vb: f64,
}

impl EstimatedParams {
    /// True model values: `t′_i = √T_i`, `σ′_i² = 1 + T_i·ε_i`.
    pub fn from_protocol(p: &ProtocolParams) -> Self {
        let (t1, t2) = (p.t1(), p.t2());
        Self {
            t1p: t1.sqrt(),
            t2p: t2.sqrt(),
            s1p2: 1.0 + t1 * p.eps1,
            s2p2: 1.0 + t2 * p.eps2,
            va: p.v_a,
            vb: p.v_b,
        }
    }

    /// Clamps `t′` to `(0, 1]` and `σ′²` to the vacuum floor, logging each clamp.
    pub fn clamp_physical(mut self) -> Self {
        for (name, t) in [("t1p", &mut self.t1p), ("t2p", &mut self.t2p)] {
            if *t > 1.0 {
                warn!("estimated {name} = {t} exceeds 1; clamped");
                *t = 1.0;
            }
        }
        for (name, s) in [("s1p2", &mut self.s1p2), ("s2p2", &mut self.s2p2)] {
            if *s < 1.0 {
                warn!("estimated {name} = {s} below the vacuum noise floor; clamped to 1");
                *s = 1.0;
            }
        }
        self
    }
}

/// Central estimates with confidence-interval half-widths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelEstimate {
    pub center: EstimatedParams,
    pub half_widths: EstimatedParams,
}

impl ChannelEstimate {
    /// Zero-width region around `center`.
    pub fn exact(center: EstimatedParams) -> Self {
        Self {
            center,
            half_widths: EstimatedParams::default(),
        }
    }
}

/// Fills confidence-interval half-widths for `m` estimation signals:
/// `Δt′ = z·√(σ̂′²/(m·V))`, `Δσ′² = z·σ̂′²·√2/√m`, `ΔV = z·V̂·√2/√m`.
///
/// Each channel's `Δt′` uses that channel's own modulation variance.
pub fn confidence_deltas(center: &EstimatedParams, m: f64, eps_pe: f64) -> Result<ChannelEstimate> {
    if !(m >= 2.0) {
        return Err(Error::InsufficientSamples {
            required: 2,
            got: m.max(0.0) as u64,
        });
    }
    let z = z_quantile(eps_pe)?;
    let chi2_width = z * std::f64::consts::SQRT_2 / m.sqrt();
    let slope_width = |s2: f64, v: f64| {
        if v > 0.0 {
            z * (s2 / (m * v)).sqrt()
        } else {
            f64::INFINITY
        }
    };
    Ok(ChannelEstimate {
        center: *center,
        half_widths: EstimatedParams {
            t1p: slope_width(center.s1p2, center.va),
            t2p: slope_width(center.s2p2, center.vb),
            s1p2: center.s1p2 * chi2_width,
            s2p2: center.s2p2 * chi2_width,
            va: center.va * chi2_width,
            vb: center.vb * chi2_width,
        },
    })
}

/// Optional confidence half-widths for the detector calibration.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DetectorUncertainty {
    pub eta_half_width: f64,
    pub v_el_half_width: f64,
}

/// Whether the modulation variances are part of the confidence region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ModulationMode {
    /// `V_A`, `V_B` are exactly known (trusted calibration).
    Exact,
    /// `V_A`, `V_B` range over their estimation intervals.
    #[default]
    Estimated,
}

/// Parameters at which `I_AB` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MutualInfoMode {
    #[default]
    Central,
    WorstCase,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KeyRateOptions {
    pub modulation: ModulationMode,
    pub mutual_info: MutualInfoMode,
    pub detector_uncertainty: Option<DetectorUncertainty>,
}

/// Where the true parameters are centred.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimationMode {
    /// Estimator centres equal the true model values; only interval widening applies.
    Theory,
    /// Centres come from measured data, e.g. [`crate::estimation::mle_estimate`].
    FromSamples(EstimatedParams),
}

/// Which endpoint of an interval a corner takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    Lower,
    Center,
    Upper,
}

impl Endpoint {
    fn symbol(self) -> char {
        match self {
            Endpoint::Lower => '-',
            Endpoint::Center => '0',
            Endpoint::Upper => '+',
        }
    }
}

/// Names of the searched axes, in corner-code order.
pub const CORNER_AXES: [&str; 8] = ["t1p", "t2p", "s1p2", "s2p2", "va", "vb", "eta", "v_el"];

/// A vertex of the confidence box. Displays as an 8-character code over
/// `-`, `0`, `+` in [`CORNER_AXES`] order; `0` marks a zero-width axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Corner(pub [Endpoint; 8]);

impl Corner {
    pub const CENTRAL: Corner = Corner([Endpoint::Center; 8]);

    pub fn is_central(&self) -> bool {
        *self == Self::CENTRAL
    }

    pub fn endpoint(&self, axis: &str) -> Option<Endpoint> {
        CORNER_AXES.iter().position(|a| *a == axis).map(|i| self.0[i])
    }
}

impl fmt::Display for Corner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|e| write!(f, "{}", e.symbol()))
    }
}

/// Equivalent one-way protocol implied by estimated parameters.
///
/// With `k = V_B/(V_B+2)`: `T = (t′1²/t′2²)·k/η` and
/// `T·ε′ = k·(σ′1² + σ′2² − 2t′2² + 2χ3)/(η·t′2²)`; for ideal detectors
/// (`η = 1`, `χ3 = 0`) this is the estimator form of the one-way covariance.
pub fn one_way_from_estimates(p: &EstimatedParams, detector: Option<&DetectorModel>) -> Result<OneWayEquivalent> {
    let (eta, chi3) = detector.map_or((1.0, 0.0), |d| (d.eta, d.chi3()));
    if !(p.t1p > 0.0 && p.t2p > 0.0) {
        return Err(Error::DegenerateChannel {
            name: if p.t1p > 0.0 { "t2p" } else { "t1p" },
        });
    }
    if !(p.vb > 0.0) {
        return Err(Error::DegenerateGain);
    }
    let k = p.vb / (p.vb + 2.0);
    let t2sq = p.t2p * p.t2p;
    let t = (p.t1p * p.t1p / t2sq) * k / eta;
    let t_eps = k * (p.s1p2 + p.s2p2 - 2.0 * t2sq + 2.0 * chi3) / (eta * t2sq);
    let g = (2.0 * k / (eta * t2sq)).sqrt();
    Ok(OneWayEquivalent::new(t, t_eps / t, g))
}

/// Alice–Bob covariance expressed through estimated parameters.
pub fn covariance_from_estimates(p: &EstimatedParams, detector: Option<&DetectorModel>) -> Result<TwoModeCov> {
    let ow = one_way_from_estimates(p, detector)?;
    let a = p.va + 1.0;
    let c = (ow.t * p.va * (p.va + 2.0)).sqrt();
    let b = ow.t * p.va + 1.0 + ow.t * ow.eps_prime;
    TwoModeCov::new(a, b, c)
}

/// Result of the corner search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorstCase {
    pub cov: TwoModeCov,
    pub corner: Corner,
    pub params: EstimatedParams,
    pub detector: Option<DetectorModel>,
    pub chi_be: f64,
}

fn axis_values(center: f64, half_width: f64, enabled: bool, lo: f64, hi: f64) -> Vec<(Endpoint, f64)> {
    if !enabled || half_width <= 0.0 {
        return vec![(Endpoint::Center, center)];
    }
    vec![
        (Endpoint::Lower, (center - half_width).max(lo)),
        (Endpoint::Upper, (center + half_width).min(hi)),
    ]
}

/// Maximises Eve's Holevo information over every vertex of the confidence box.
///
/// Corners are visited in lexicographic order (first axis most significant,
/// lower endpoint first) and the first maximum wins. Corners whose clamped
/// values do not form a physical covariance are skipped.
pub fn worst_case_cov(
    est: &ChannelEstimate,
    detector: Option<&DetectorModel>,
    opts: &KeyRateOptions,
) -> Result<WorstCase> {
    let (c, w) = (&est.center, &est.half_widths);
    let modulation = opts.modulation == ModulationMode::Estimated;
    // Lower clamps of 0 for t′, V and η make the corner degenerate and it is skipped.
    let mut axes = vec![
        axis_values(c.t1p, w.t1p, true, 0.0, 1.0),
        axis_values(c.t2p, w.t2p, true, 0.0, 1.0),
        axis_values(c.s1p2, w.s1p2, true, 1.0, f64::INFINITY),
        axis_values(c.s2p2, w.s2p2, true, 1.0, f64::INFINITY),
        axis_values(c.va, w.va, modulation, 0.0, f64::INFINITY),
        axis_values(c.vb, w.vb, modulation, 0.0, f64::INFINITY),
    ];
    match (detector, opts.detector_uncertainty) {
        (Some(d), Some(u)) => {
            axes.push(axis_values(d.eta, u.eta_half_width, true, 0.0, 1.0));
            axes.push(axis_values(d.v_el, u.v_el_half_width, true, 0.0, f64::INFINITY));
        }
        (Some(d), None) => {
            axes.push(vec![(Endpoint::Center, d.eta)]);
            axes.push(vec![(Endpoint::Center, d.v_el)]);
        }
        (None, _) => {
            axes.push(vec![(Endpoint::Center, 1.0)]);
            axes.push(vec![(Endpoint::Center, 0.0)]);
        }
    }

    let total: usize = axes.iter().map(Vec::len).product();
    let mut best: Option<WorstCase> = None;
    let mut last_error = None;
    for index in 0..total {
        let mut rem = index;
        let mut picks = [(Endpoint::Center, 0.0); 8];
        for (slot, values) in picks.iter_mut().zip(&axes).rev() {
            *slot = values[rem % values.len()];
            rem /= values.len();
        }
        let params = EstimatedParams {
            t1p: picks[0].1,
            t2p: picks[1].1,
            s1p2: picks[2].1,
            s2p2: picks[3].1,
            va: picks[4].1,
            vb: picks[5].1,
        };
        let det = match detector {
            Some(_) => match DetectorModel::new(picks[6].1, picks[7].1) {
                Ok(d) => Some(d),
                Err(e) => {
                    last_error = Some(e);
                    continue;
                }
            },
            None => None,
        };
        let evaluated = covariance_from_estimates(&params, det.as_ref())
            .and_then(|cov| holevo_bound(&cov).map(|chi| (cov, chi)));
        match evaluated {
            Ok((cov, chi_be)) => {
                if best.is_none_or(|b| chi_be > b.chi_be) {
                    let corner = Corner(std::array::from_fn(|i| picks[i].0));
                    best = Some(WorstCase {
                        cov,
                        corner,
                        params,
                        detector: det,
                        chi_be,
                    });
                }
            }
            Err(e) => last_error = Some(e),
        }
    }
    best.ok_or_else(|| {
        Error::EstimationFailure(format!(
            "no physical covariance in the confidence region ({})",
            last_error.map_or_else(|| "empty region".to_string(), |e| e.to_string())
        ))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeyStatus {
    Positive,
    Nonpositive,
}

impl KeyStatus {
    pub fn of(k: f64) -> Self {
        if k > 0.0 {
            KeyStatus::Positive
        } else {
            KeyStatus::Nonpositive
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            KeyStatus::Positive => "positive",
            KeyStatus::Nonpositive => "nonpositive",
        }
    }
}

impl fmt::Display for KeyStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Breakdown of a key-rate evaluation, in bits per channel use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyRateReport {
    pub i_ab: f64,
    pub chi_be_worst: f64,
    pub delta_n: f64,
    /// `n/N`; 1 in the asymptotic regime.
    pub key_fraction: f64,
    pub k: f64,
    pub worst_corner: Corner,
    pub status: KeyStatus,
}

impl KeyRateReport {
    fn assemble(beta: f64, i_ab: f64, chi_be_worst: f64, delta_n: f64, key_fraction: f64, worst_corner: Corner) -> Self {
        let k = key_fraction * (beta * i_ab - chi_be_worst - delta_n);
        Self {
            i_ab,
            chi_be_worst,
            delta_n,
            key_fraction,
            k,
            worst_corner,
            status: KeyStatus::of(k),
        }
    }
}

fn mutual_info_of(ow: &OneWayEquivalent, va: f64) -> Result<f64> {
    mutual_information(ow.t, ow.chi, va + 1.0)
}

/// Finite-size secret key rate against collective attacks.
pub fn finite_key_rate(
    p: &ProtocolParams,
    fs: &FiniteSizeParams,
    mode: &EstimationMode,
    opts: &KeyRateOptions,
) -> Result<KeyRateReport> {
    p.validate()?;
    fs.validate()?;
    let center = match mode {
        EstimationMode::Theory => EstimatedParams::from_protocol(p),
        EstimationMode::FromSamples(measured) => measured.clamp_physical(),
    };
    let est = confidence_deltas(&center, fs.estimation_signals(), fs.eps_pe)?;
    let worst = worst_case_cov(&est, p.detector.as_ref(), opts)?;
    let i_ab = match opts.mutual_info {
        MutualInfoMode::Central => mutual_info_of(&one_way_from_estimates(&center, p.detector.as_ref())?, center.va)?,
        MutualInfoMode::WorstCase => {
            mutual_info_of(&one_way_from_estimates(&worst.params, worst.detector.as_ref())?, worst.params.va)?
        }
    };
    Ok(KeyRateReport::assemble(
        p.beta,
        i_ab,
        worst.chi_be,
        delta_n(fs)?,
        fs.key_signals() / fs.n_total as f64,
        worst.corner,
    ))
}

/// Key rate with exact parameters, `n/N → 1` and `Δ → 0`.
pub fn asymptotic_key_rate(p: &ProtocolParams) -> Result<KeyRateReport> {
    p.validate()?;
    let ow = equivalent_one_way(p)?;
    let cov = one_way_two_mode_cov(p.v_a, &ow)?;
    Ok(KeyRateReport::assemble(
        p.beta,
        mutual_info_of(&ow, p.v_a)?,
        holevo_bound(&cov)?,
        0.0,
        1.0,
        Corner::CENTRAL,
    ))
}
