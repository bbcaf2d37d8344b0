//! Physical scenario: fiber channels, Charlie's detectors, the four-mode
//! entanglement-based covariance, and its reduction to an equivalent one-way
//! protocol with heterodyne detection.

use crate::error::{invalid, Error, Result};
use crate::gaussian::TwoModeCov;

/// Standard telecom fiber loss.
pub const DEFAULT_ALPHA_DB_PER_KM: f64 = 0.2;

/// Power transmittance `10^(−α·L/10)` of a fiber of `length_km`.
pub fn fiber_transmittance(length_km: f64, alpha_db_per_km: f64) -> f64 {
    10f64.powf(-alpha_db_per_km * length_km / 10.0)
}

/// Imperfect homodyne detector: a beam splitter of transmittance `eta` mixing
/// in a thermal state, plus electronic noise `v_el` (SNU).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorModel {
    pub eta: f64,
    pub v_el: f64,
}

impl DetectorModel {
    pub fn new(eta: f64, v_el: f64) -> Result<Self> {
        let d = Self { eta, v_el };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(invalid("eta", self.eta, "detection efficiency must lie in (0, 1]"));
        }
        if !(self.v_el >= 0.0) {
            return Err(invalid("v_el", self.v_el, "electronic noise must be nonnegative"));
        }
        Ok(())
    }

    /// `v = 1 + v_el/(1 − η)`; undefined for a unit-efficiency detector.
    pub fn thermal_variance(&self) -> Option<f64> {
        (self.eta < 1.0).then(|| 1.0 + self.v_el / (1.0 - self.eta))
    }

    /// Detection-added noise referred to the input, `χ3 = (1−η)/η + v_el/η`.
    pub fn chi3(&self) -> f64 {
        (1.0 - self.eta) / self.eta + self.v_el / self.eta
    }
}

/// The physical scenario shared by Alice, Bob and Charlie.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolParams {
    /// Alice's modulation variance `V_A` (SNU).
    pub v_a: f64,
    /// Bob's modulation variance `V_B` (SNU).
    pub v_b: f64,
    /// Alice–Charlie fiber length (km).
    pub l_ac: f64,
    /// Bob–Charlie fiber length (km).
    pub l_bc: f64,
    /// Fiber loss (dB/km).
    pub alpha: f64,
    /// Excess noise of the Alice–Charlie channel (SNU, input-referred).
    pub eps1: f64,
    /// Excess noise of the Bob–Charlie channel (SNU, input-referred).
    pub eps2: f64,
    /// Reconciliation efficiency.
    pub beta: f64,
    pub detector: Option<DetectorModel>,
}

impl Default for ProtocolParams {
    /// The asymmetric reference scenario: `V_A = V_B = 10⁵`, `ε1 = ε2 = 0.002`,
    /// `β = 1`, Charlie co-located with Bob, ideal detectors.
    fn default() -> Self {
        Self {
            v_a: 1e5,
            v_b: 1e5,
            l_ac: 0.0,
            l_bc: 0.0,
            alpha: DEFAULT_ALPHA_DB_PER_KM,
            eps1: 0.002,
            eps2: 0.002,
            beta: 1.0,
            detector: None,
        }
    }
}

impl ProtocolParams {
    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("v_a", self.v_a),
            ("v_b", self.v_b),
            ("l_ac", self.l_ac),
            ("l_bc", self.l_bc),
            ("eps1", self.eps1),
            ("eps2", self.eps2),
        ];
        for (name, value) in nonneg {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(invalid(name, value, "must be finite and nonnegative"));
            }
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(invalid("alpha", self.alpha, "fiber loss must be positive"));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(invalid("beta", self.beta, "reconciliation efficiency must lie in [0, 1]"));
        }
        if let Some(d) = &self.detector {
            d.validate()?;
        }
        Ok(())
    }

    /// Sets `V_A = V_B = v`.
    pub fn with_modulation(mut self, v: f64) -> Self {
        self.v_a = v;
        self.v_b = v;
        self
    }

    /// Alice–Charlie transmittance `T1`.
    pub fn t1(&self) -> f64 {
        fiber_transmittance(self.l_ac, self.alpha)
    }

    /// Bob–Charlie transmittance `T2`.
    pub fn t2(&self) -> f64 {
        fiber_transmittance(self.l_bc, self.alpha)
    }

    /// Input-referred total noise `χ_i = 1/T_i − 1 + ε_i` of both channels.
    pub fn channel_noises(&self) -> (f64, f64) {
        (
            1.0 / self.t1() - 1.0 + self.eps1,
            1.0 / self.t2() - 1.0 + self.eps2,
        )
    }
}

/// Covariance of modes `(A1, C, D, B1)` before Charlie's homodynes.
///
/// The scalar generators are authoritative; [`FourModeCov::matrix`] is derived
/// from them on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct FourModeCov {
    pub v1: f64,
    pub v2: f64,
    pub t1: f64,
    pub t2: f64,
    pub chi1: f64,
    pub chi2: f64,
    matrix: [[f64; 8]; 8],
}

/// Mode indices into [`FourModeCov::block`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    A1 = 0,
    C = 1,
    D = 2,
    B1 = 3,
}

impl FourModeCov {
    pub fn from_scalars(v1: f64, v2: f64, t1: f64, t2: f64, chi1: f64, chi2: f64) -> Self {
        let corr_a = (0.5 * t1 * (v1 * v1 - 1.0)).sqrt();
        let corr_b = (0.5 * t2 * (v2 * v2 - 1.0)).sqrt();
        let arm1 = 0.5 * t1 * (v1 + chi1);
        let arm2 = 0.5 * t2 * (v2 + chi2);
        // Block coefficients; `true` marks a σz block, `false` a multiple of I.
        let blocks: [[(f64, bool); 4]; 4] = [
            [(v1, false), (corr_a, true), (corr_a, true), (0.0, false)],
            [(corr_a, true), (arm1 + arm2, false), (arm1 - arm2, false), (corr_b, true)],
            [(corr_a, true), (arm1 - arm2, false), (arm1 + arm2, false), (-corr_b, true)],
            [(0.0, false), (corr_b, true), (-corr_b, true), (v2, false)],
        ];
        let mut matrix = [[0.0; 8]; 8];
        for (i, row) in blocks.iter().enumerate() {
            for (j, &(coef, is_sigma_z)) in row.iter().enumerate() {
                matrix[2 * i][2 * j] = coef;
                matrix[2 * i + 1][2 * j + 1] = if is_sigma_z { -coef } else { coef };
            }
        }
        Self {
            v1,
            v2,
            t1,
            t2,
            chi1,
            chi2,
            matrix,
        }
    }

    pub fn matrix(&self) -> &[[f64; 8]; 8] {
        &self.matrix
    }

    /// The 2×2 block coupling modes `row` and `col`.
    pub fn block(&self, row: Mode, col: Mode) -> [[f64; 2]; 2] {
        let (r, c) = (2 * row as usize, 2 * col as usize);
        [
            [self.matrix[r][c], self.matrix[r][c + 1]],
            [self.matrix[r + 1][c], self.matrix[r + 1][c + 1]],
        ]
    }
}

/// Builds the four-mode covariance with `V1 = V_A + 1`, `V2 = V_B + 1`.
pub fn build_four_mode_cov(p: &ProtocolParams) -> Result<FourModeCov> {
    p.validate()?;
    let (t1, t2) = (p.t1(), p.t2());
    if t1 <= 0.0 {
        return Err(Error::DegenerateChannel { name: "T1" });
    }
    if t2 <= 0.0 {
        return Err(Error::DegenerateChannel { name: "T2" });
    }
    let (chi1, chi2) = p.channel_noises();
    Ok(FourModeCov::from_scalars(p.v_a + 1.0, p.v_b + 1.0, t1, t2, chi1, chi2))
}

/// Second moments available to Alice, Bob and Charlie's published data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondMoments {
    pub x1x1: f64,
    pub x2x2: f64,
    pub y1y1: f64,
    pub y2y2: f64,
    pub x1y1: f64,
    pub x2y2: f64,
    pub y1y2: f64,
}

/// Prepare-and-measure second moments; with a detector model, Charlie's outputs
/// are attenuated by `η` and pick up `v_el` of electronic noise.
pub fn observed_second_moments(p: &ProtocolParams) -> Result<SecondMoments> {
    p.validate()?;
    let (t1, t2) = (p.t1(), p.t2());
    let (eta, v_el) = p.detector.map_or((1.0, 0.0), |d| (d.eta, d.v_el));
    let signal_sum = 0.5 * eta * (t1 * p.v_a + t2 * p.v_b);
    let noise_sum = 0.5 * eta * (t1 * p.eps1 + t2 * p.eps2);
    let y_var = signal_sum + noise_sum + 1.0 + v_el;
    Ok(SecondMoments {
        x1x1: p.v_a,
        x2x2: p.v_b,
        y1y1: y_var,
        y2y2: y_var,
        x1y1: (eta * t1 / 2.0).sqrt() * p.v_a,
        x2y2: (eta * t2 / 2.0).sqrt() * p.v_b,
        y1y2: 0.5 * eta * (t1 * p.v_a - t2 * p.v_b) + 0.5 * eta * (t1 * p.eps1 - t2 * p.eps2),
    })
}

/// Undoes Charlie's balanced beam splitter: `((y1+y2)/√2, (y1−y2)/√2)`.
pub fn pre_bs_transform(y1: f64, y2: f64) -> (f64, f64) {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ((y1 + y2) * s, (y1 - y2) * s)
}

/// The one-way protocol obtained by letting Eve control Bob's EPR source and
/// displacement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneWayEquivalent {
    /// Equivalent transmittance `T = T1·g²/2`. Exceeds 1 when Charlie sits
    /// closer to Alice than to Bob.
    pub t: f64,
    /// Equivalent excess noise `ε′` (SNU).
    pub eps_prime: f64,
    /// Displacement gain.
    pub g: f64,
    /// Total noise `χ = 1/T − 1 + ε′`.
    pub chi: f64,
}

impl OneWayEquivalent {
    pub fn new(t: f64, eps_prime: f64, g: f64) -> Self {
        Self {
            t,
            eps_prime,
            g,
            chi: 1.0 / t - 1.0 + eps_prime,
        }
    }
}

/// Gain that minimises `ε′`: `g = √(2/(η·T2)) · √(V_B/(V_B+2))`.
pub fn optimal_gain(t2: f64, v_b: f64, eta: f64) -> f64 {
    (2.0 / (eta * t2)).sqrt() * (v_b / (v_b + 2.0)).sqrt()
}

/// Equivalent excess noise for an arbitrary displacement gain `g` (ideal detectors).
///
/// Minimised by [`optimal_gain`], where it reduces to
/// `ε′ = ε1 + [T2(ε2 − 2) + 2]/T1`.
pub fn excess_noise_at_gain(p: &ProtocolParams, g: f64) -> f64 {
    let (t1, t2) = (p.t1(), p.t2());
    let mismatch = std::f64::consts::SQRT_2 / g * p.v_b.sqrt() - t2.sqrt() * (p.v_b + 2.0).sqrt();
    1.0 + (2.0 + t2 * (p.eps2 - 2.0) + t1 * (p.eps1 - 1.0)) / t1 + mismatch * mismatch / t1
}

/// Reduces the MDI scenario to its equivalent one-way protocol at the optimal gain.
pub fn equivalent_one_way(p: &ProtocolParams) -> Result<OneWayEquivalent> {
    p.validate()?;
    let (t1, t2) = (p.t1(), p.t2());
    if t1 <= 0.0 {
        return Err(Error::DegenerateChannel { name: "T1" });
    }
    if t2 <= 0.0 {
        return Err(Error::DegenerateChannel { name: "T2" });
    }
    if p.v_b <= 0.0 {
        return Err(Error::DegenerateGain);
    }
    let ow = match p.detector {
        None => {
            let g = optimal_gain(t2, p.v_b, 1.0);
            let eps_prime = p.eps1 + (t2 * (p.eps2 - 2.0) + 2.0) / t1;
            OneWayEquivalent::new(t1 * g * g / 2.0, eps_prime, g)
        }
        Some(det) => {
            let g = optimal_gain(t2, p.v_b, det.eta);
            let (chi1, chi2) = p.channel_noises();
            let eps_prime = 1.0 + (t1 * chi1 + t2 * chi2 - t2) / t1 + 2.0 * det.chi3() / t1;
            OneWayEquivalent::new(t1 * g * g / 2.0, eps_prime, g)
        }
    };
    Ok(ow)
}

/// Alice–Bob covariance of the equivalent one-way protocol:
/// `a = V_A + 1`, `b = T·V_A + 1 + T·ε′`, `c = √(T(a² − 1))`.
pub fn one_way_two_mode_cov(v_a: f64, ow: &OneWayEquivalent) -> Result<TwoModeCov> {
    if !(v_a >= 0.0) {
        return Err(invalid("v_a", v_a, "modulation variance must be nonnegative"));
    }
    if !(ow.t > 0.0) {
        return Err(Error::Unphysical {
            parameter: "T",
            detail: format!("equivalent transmittance {} is not positive", ow.t),
        });
    }
    if ow.eps_prime < -crate::gaussian::PHYSICALITY_TOL {
        return Err(Error::Unphysical {
            parameter: "eps_prime",
            detail: format!("equivalent excess noise {} is negative", ow.eps_prime),
        });
    }
    let a = v_a + 1.0;
    let b = ow.t * v_a + 1.0 + ow.t * ow.eps_prime;
    let c = (ow.t * v_a * (v_a + 2.0)).sqrt();
    TwoModeCov::new(a, b, c).map_err(|e| match e {
        Error::Unphysical { detail, .. } => Error::Unphysical {
            parameter: "T",
            detail: format!("T = {}, eps' = {}: {detail}", ow.t, ow.eps_prime),
        },
        other => other,
    })
}
