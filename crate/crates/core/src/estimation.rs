//! Monte Carlo sampling of the pre-beam-splitter linear channel
//! `y′ = t′·x + z` and the maximum-likelihood estimators of its parameters.
//!
//! Every draw comes from a ChaCha8 stream keyed by `(seed, stream)`, so
//! results are bit-reproducible across platforms. Trial `i` of an experiment
//! uses stream `2i` for channel 1 and `2i + 1` for channel 2, so adding
//! trials never perturbs earlier ones.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::finite_size::{confidence_deltas, EstimatedParams};
use crate::protocol::ProtocolParams;

/// Above this many pairs, [`Sampler::Auto`] switches to sufficient statistics.
pub const RAW_SAMPLE_LIMIT: u64 = 10_000_000;

/// Correlated sender/receiver samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub seed: u64,
}

impl SampleSet {
    pub fn m(&self) -> usize {
        self.x.len()
    }
}

/// MLE values `t̂′ = Σxy/Σx²`, `σ̂′² = (1/m)Σ(y − t̂′x)²`, `V̂ = (1/m)Σx²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimationResult {
    pub t_hat: f64,
    pub sigma2_hat: f64,
    pub v_hat: f64,
}

/// How an estimate is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sampler {
    /// Generate every pair and apply the estimators.
    Raw,
    /// Draw `(Σx², Σxy, residual)` from their exact joint law.
    SufficientStatistics,
    /// Raw up to [`RAW_SAMPLE_LIMIT`] pairs, sufficient statistics beyond.
    #[default]
    Auto,
}

fn check_channel(t_prime: f64, sigma2: f64, v_mod: f64, m: u64) -> Result<()> {
    if !t_prime.is_finite() {
        return Err(invalid("t_prime", t_prime, "must be finite"));
    }
    if !(sigma2 >= 0.0 && sigma2.is_finite()) {
        return Err(invalid("sigma2", sigma2, "noise variance must be nonnegative"));
    }
    if !(v_mod > 0.0 && v_mod.is_finite()) {
        return Err(invalid("v_mod", v_mod, "modulation variance must be positive"));
    }
    if m < 2 {
        return Err(Error::InsufficientSamples { required: 2, got: m });
    }
    Ok(())
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws `m` pairs with `x ~ N(0, V)` and `y′ = t′x + z`, `z ~ N(0, σ′²)`,
/// on stream 0 of `seed`.
pub fn generate_samples(t_prime: f64, sigma2: f64, v_mod: f64, m: u64, seed: u64) -> Result<SampleSet> {
    generate_samples_on_stream(t_prime, sigma2, v_mod, m, seed, 0)
}

pub fn generate_samples_on_stream(
    t_prime: f64,
    sigma2: f64,
    v_mod: f64,
    m: u64,
    seed: u64,
    stream: u64,
) -> Result<SampleSet> {
    check_channel(t_prime, sigma2, v_mod, m)?;
    let mut rng = stream_rng(seed, stream);
    let (sx, sz) = (v_mod.sqrt(), sigma2.sqrt());
    let mut x = Vec::with_capacity(m as usize);
    let mut y = Vec::with_capacity(m as usize);
    for _ in 0..m {
        let xi = sx * rng.sample::<f64, _>(StandardNormal);
        let zi: f64 = rng.sample(StandardNormal);
        x.push(xi);
        y.push(if sigma2 == 0.0 { t_prime * xi } else { t_prime * xi + sz * zi });
    }
    Ok(SampleSet { x, y, seed })
}

pub fn mle_estimate(s: &SampleSet) -> Result<EstimationResult> {
    if s.x.len() != s.y.len() {
        return Err(Error::Domain {
            function: "mle_estimate",
            detail: format!("x has {} samples, y has {}", s.x.len(), s.y.len()),
        });
    }
    let m = s.m();
    if m < 2 {
        return Err(Error::InsufficientSamples {
            required: 2,
            got: m as u64,
        });
    }
    let sxx: f64 = s.x.iter().map(|x| x * x).sum();
    if sxx <= 0.0 {
        return Err(Error::Domain {
            function: "mle_estimate",
            detail: "sender samples are all zero".into(),
        });
    }
    let sxy: f64 = s.x.iter().zip(&s.y).map(|(x, y)| x * y).sum();
    let t_hat = sxy / sxx;
    let rss: f64 = s.x.iter().zip(&s.y).map(|(x, y)| (y - t_hat * x).powi(2)).sum();
    Ok(EstimationResult {
        t_hat,
        sigma2_hat: rss / m as f64,
        v_hat: sxx / m as f64,
    })
}

/// Estimator values drawn from their exact joint law without materialising samples:
/// `Σx² ~ V·χ²(m)`, `t̂′ | Σx² ~ N(t′, σ′²/Σx²)`, `m·σ̂′² ~ σ′²·χ²(m−1)` independent.
pub fn sample_estimates(t_prime: f64, sigma2: f64, v_mod: f64, m: u64, seed: u64, stream: u64) -> Result<EstimationResult> {
    check_channel(t_prime, sigma2, v_mod, m)?;
    let mut rng = stream_rng(seed, stream);
    let chi2 = |k: u64| ChiSquared::new(k as f64).map_err(|e| Error::Domain {
        function: "sample_estimates",
        detail: e.to_string(),
    });
    let sxx = v_mod * chi2(m)?.sample(&mut rng);
    let slope_noise: f64 = rng.sample(StandardNormal);
    let rss = sigma2 * chi2(m - 1)?.sample(&mut rng);
    Ok(EstimationResult {
        t_hat: t_prime + (sigma2 / sxx).sqrt() * slope_noise,
        sigma2_hat: rss / m as f64,
        v_hat: sxx / m as f64,
    })
}

/// One channel's estimate with the chosen sampler.
pub fn estimate_channel(
    t_prime: f64,
    sigma2: f64,
    v_mod: f64,
    m: u64,
    seed: u64,
    stream: u64,
    sampler: Sampler,
) -> Result<EstimationResult> {
    let raw = match sampler {
        Sampler::Raw => true,
        Sampler::SufficientStatistics => false,
        Sampler::Auto => m <= RAW_SAMPLE_LIMIT,
    };
    if raw {
        mle_estimate(&generate_samples_on_stream(t_prime, sigma2, v_mod, m, seed, stream)?)
    } else {
        sample_estimates(t_prime, sigma2, v_mod, m, seed, stream)
    }
}

/// Transmittance and excess noise implied by one channel's estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedEstimates {
    pub t1: f64,
    pub t2: f64,
    /// Raw value; may be negative before downstream clamping.
    pub eps1: f64,
    pub eps2: f64,
}

/// `T = t̂′²`, `ε = (σ̂′² − 1)/t̂′²` for each channel.
pub fn derived_channel_estimates(e1: &EstimationResult, e2: &EstimationResult) -> Result<DerivedEstimates> {
    let one = |e: &EstimationResult, name| {
        if e.t_hat == 0.0 {
            return Err(Error::DegenerateChannel { name });
        }
        let t = e.t_hat * e.t_hat;
        Ok((t, (e.sigma2_hat - 1.0) / t))
    };
    let (t1, eps1) = one(e1, "t1_hat")?;
    let (t2, eps2) = one(e2, "t2_hat")?;
    Ok(DerivedEstimates { t1, t2, eps1, eps2 })
}

/// Samples both channels of `truth` for trial `trial` and returns raw estimates
/// (`V_A`, `V_B` estimated from the respective sender data).
pub fn simulate_estimates(truth: &EstimatedParams, m: u64, seed: u64, trial: u64, sampler: Sampler) -> Result<EstimatedParams> {
    let e1 = estimate_channel(truth.t1p, truth.s1p2, truth.va, m, seed, 2 * trial, sampler)?;
    let e2 = estimate_channel(truth.t2p, truth.s2p2, truth.vb, m, seed, 2 * trial + 1, sampler)?;
    Ok(EstimatedParams {
        t1p: e1.t_hat,
        t2p: e2.t_hat,
        s1p2: e1.sigma2_hat,
        s2p2: e2.sigma2_hat,
        va: e1.v_hat,
        vb: e2.v_hat,
    })
}

/// Same as [`simulate_estimates`] with the true values taken from a scenario.
pub fn simulate_protocol_estimates(p: &ProtocolParams, m: u64, seed: u64, trial: u64, sampler: Sampler) -> Result<EstimatedParams> {
    simulate_estimates(&EstimatedParams::from_protocol(p), m, seed, trial, sampler)
}

/// Fraction of trials whose confidence interval contains the true value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageRecord {
    pub trials: u64,
    pub fractions: EstimatedParams,
}

impl CoverageRecord {
    pub fn iter(&self) -> impl Iterator<Item = (&'static str, f64)> {
        let f = self.fractions;
        [
            ("t1p", f.t1p),
            ("t2p", f.t2p),
            ("s1p2", f.s1p2),
            ("s2p2", f.s2p2),
            ("va", f.va),
            ("vb", f.vb),
        ]
        .into_iter()
    }
}

/// Repeats estimation `trials` times and counts how often each interval
/// (centred on the estimate, widths from the estimate) covers the truth.
pub fn coverage_experiment(
    truth: &EstimatedParams,
    m: u64,
    eps_pe: f64,
    trials: u64,
    seed: u64,
    sampler: Sampler,
) -> Result<CoverageRecord> {
    if trials < 100 {
        return Err(invalid("trials", trials as f64, "need at least 100 trials"));
    }
    let hits = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let est = simulate_estimates(truth, m, seed, trial, sampler)?;
            let ci = confidence_deltas(&est, m as f64, eps_pe)?;
            let (c, w) = (ci.center, ci.half_widths);
            let covered = |truth: f64, center: f64, width: f64| ((truth - center).abs() <= width) as u64;
            Ok([
                covered(truth.t1p, c.t1p, w.t1p),
                covered(truth.t2p, c.t2p, w.t2p),
                covered(truth.s1p2, c.s1p2, w.s1p2),
                covered(truth.s2p2, c.s2p2, w.s2p2),
                covered(truth.va, c.va, w.va),
                covered(truth.vb, c.vb, w.vb),
            ])
        })
        .try_reduce(|| [0; 6], |a, b| Ok(std::array::from_fn(|i| a[i] + b[i])))?;
    let frac = |i: usize| hits[i] as f64 / trials as f64;
    Ok(CoverageRecord {
        trials,
        fractions: EstimatedParams {
            t1p: frac(0),
            t2p: frac(1),
            s1p2: frac(2),
            s2p2: frac(3),
            va: frac(4),
            vb: frac(5),
        },
    })
}

/// Writes `x,y` rows with round-trip precision.
pub fn write_samples<W: Write>(s: &SampleSet, mut out: W) -> io::Result<()> {
    writeln!(out, "x,y")?;
    for (x, y) in s.x.iter().zip(&s.y) {
        writeln!(out, "{x:e},{y:e}")?;
    }
    out.flush()
}
