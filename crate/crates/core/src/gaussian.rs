//! Entropic primitives for two-mode Gaussian states in standard form.
//!
//! Every covariance handled here has the shape
//!
//! ```text
//! | a·I   c·σz |
//! | c·σz  b·I  |
//! ```
//!
//! in shot-noise units, with mode A held by Alice and mode B by Bob. Entropies
//! are in bits. Eve's information on Bob's heterodyne outcome is obtained by
//! purification: the entropy of the joint state minus the entropy of Alice's
//! mode conditioned on Bob's measurement.

use crate::error::{Error, Result};

/// Absolute tolerance on symplectic eigenvalues and physicality checks.
pub const PHYSICALITY_TOL: f64 = 1e-9;

/// Bosonic entropy function `G(x) = (x+1)·log2(x+1) − x·log2(x)`, with `G(0) = 0`.
///
/// `G(x)` is the von Neumann entropy (bits) of a thermal state with mean
/// photon number `x`.
pub fn g_func(x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain {
            function: "g_func",
            detail: format!("argument must be finite and nonnegative, got {x}"),
        });
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    // log2(x+1) + x·log2(1 + 1/x): no cancellation for large x.
    Ok(((x + 1.0).ln() + x * (1.0 / x).ln_1p()) / std::f64::consts::LN_2)
}

/// Standard-form two-mode covariance `(a, b, c)` in SNU.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoModeCov {
    a: f64,
    b: f64,
    c: f64,
}

impl TwoModeCov {
    /// Validates the Heisenberg bound on each mode and the bona fide condition
    /// `c² ≤ (a−1)(b+1)`, `c² ≤ (a+1)(b−1)`.
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && c.is_finite()) {
            return Err(Error::Unphysical {
                parameter: "entries",
                detail: format!("non-finite entry in ({a}, {b}, {c})"),
            });
        }
        if a < 1.0 - PHYSICALITY_TOL {
            return Err(Error::Unphysical {
                parameter: "a",
                detail: format!("variance of mode A is {a} < 1"),
            });
        }
        if b < 1.0 - PHYSICALITY_TOL {
            return Err(Error::Unphysical {
                parameter: "b",
                detail: format!("variance of mode B is {b} < 1"),
            });
        }
        let c2 = c * c;
        let slack = PHYSICALITY_TOL * c2.max(a * b).max(1.0);
        if c2 - (a - 1.0) * (b + 1.0) > slack {
            return Err(Error::Unphysical {
                parameter: "c",
                detail: format!("c² = {c2} exceeds (a−1)(b+1) = {}", (a - 1.0) * (b + 1.0)),
            });
        }
        if c2 - (a + 1.0) * (b - 1.0) > slack {
            return Err(Error::Unphysical {
                parameter: "c",
                detail: format!("c² = {c2} exceeds (a+1)(b−1) = {}", (a + 1.0) * (b - 1.0)),
            });
        }
        Ok(Self { a, b, c })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// `ab − c²`, the square root of the determinant.
    pub fn det_sqrt(&self) -> f64 {
        self.a * self.b - self.c * self.c
    }

    /// The full 4×4 matrix in `(x_A, p_A, x_B, p_B)` ordering.
    pub fn to_matrix(&self) -> [[f64; 4]; 4] {
        let (a, b, c) = (self.a, self.b, self.c);
        [
            [a, 0.0, c, 0.0],
            [0.0, a, 0.0, -c],
            [c, 0.0, b, 0.0],
            [0.0, -c, 0.0, b],
        ]
    }
}

/// Symplectic spectrum of a [`TwoModeCov`] plus the conditional eigenvalue of
/// mode A after heterodyne detection of mode B.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymplecticSpectrum {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3_cond: f64,
}

impl SymplecticSpectrum {
    pub fn of(cov: &TwoModeCov) -> Result<Self> {
        let (lambda1, lambda2) = symplectic_eigenvalues(cov)?;
        Ok(Self {
            lambda1,
            lambda2,
            lambda3_cond: conditional_eigenvalue_heterodyne(cov)?,
        })
    }
}

fn snap_to_vacuum(lambda: f64) -> Result<f64> {
    if lambda < 1.0 - PHYSICALITY_TOL {
        return Err(Error::Unphysical {
            parameter: "eigenvalue",
            detail: format!("symplectic eigenvalue {lambda} < 1"),
        });
    }
    Ok(if lambda < 1.0 + PHYSICALITY_TOL {
        1.0
    } else {
        lambda
    })
}

/// Symplectic eigenvalues `(λ1, λ2)` with `λ1 ≥ λ2`.
///
/// Uses `Δ² − 4D² = (a−b)²·((a+b)² − 4c²)` and `λ2 = D/λ1` so that large
/// modulation variances do not lose the small eigenvalue to cancellation.
pub fn symplectic_eigenvalues(cov: &TwoModeCov) -> Result<(f64, f64)> {
    let (a, b, c) = (cov.a, cov.b, cov.c);
    let sum_term = (a + b) * (a + b) - 4.0 * c * c;
    if sum_term < -PHYSICALITY_TOL * (a + b) * (a + b) {
        return Err(Error::NumericalPhysicality {
            discriminant: (a - b) * (a - b) * sum_term,
        });
    }
    let root = (a - b).abs() * sum_term.max(0.0).sqrt();
    let delta = a * a + b * b - 2.0 * c * c;
    let lambda1 = ((delta + root) / 2.0).sqrt();
    let lambda2 = cov.det_sqrt() / lambda1;
    Ok((snap_to_vacuum(lambda1)?, snap_to_vacuum(lambda2)?))
}

/// `λ3 = a − c²/(b+1)`: the symplectic eigenvalue of mode A conditioned on a
/// heterodyne measurement of mode B.
pub fn conditional_eigenvalue_heterodyne(cov: &TwoModeCov) -> Result<f64> {
    snap_to_vacuum(cov.a - cov.c * cov.c / (cov.b + 1.0))
}

/// Eve's Holevo information on Bob's heterodyne data (reverse reconciliation):
/// `G((λ1−1)/2) + G((λ2−1)/2) − G((λ3−1)/2)`.
pub fn holevo_bound(cov: &TwoModeCov) -> Result<f64> {
    let s = SymplecticSpectrum::of(cov)?;
    Ok(g_func((s.lambda1 - 1.0) / 2.0)? + g_func((s.lambda2 - 1.0) / 2.0)?
        - g_func((s.lambda3_cond - 1.0) / 2.0)?)
}

/// Alice–Bob mutual information `log2[(T(V+χ)+1) / (T(1+χ)+1)]`, with `V = V_A + 1`.
pub fn mutual_information(t: f64, chi: f64, v: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain {
            function: "mutual_information",
            detail: format!("transmittance must be positive, got {t}"),
        });
    }
    if !(v >= 1.0) {
        return Err(Error::Domain {
            function: "mutual_information",
            detail: format!("variance must be at least 1 SNU, got {v}"),
        });
    }
    let num = t * (v + chi) + 1.0;
    let den = t * (1.0 + chi) + 1.0;
    if !(num > 0.0 && den > 0.0) {
        return Err(Error::Domain {
            function: "mutual_information",
            detail: format!("nonpositive log argument {num}/{den}"),
        });
    }
    Ok((num / den).log2().max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{Matrix4, SymmetricEigen};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Brute-force symplectic spectrum: eigenvalues of `√γ Ωᵀ γ Ω √γ` are `λ_k²`,
    /// each doubly degenerate.
    fn oracle_symplectic(cov: &TwoModeCov) -> (f64, f64) {
        let g = Matrix4::from_fn(|i, j| cov.to_matrix()[i][j]);
        let eig = SymmetricEigen::new(g);
        let sqrt_g = eig.eigenvectors
            * Matrix4::from_diagonal(&eig.eigenvalues.map(f64::sqrt))
            * eig.eigenvectors.transpose();
        let omega = Matrix4::new(
            0.0, 1.0, 0.0, 0.0, //
            -1.0, 0.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, 1.0, //
            0.0, 0.0, -1.0, 0.0,
        );
        let m = sqrt_g * omega.transpose() * g * omega * sqrt_g;
        let m = (m + m.transpose()) * 0.5;
        let mut ev: Vec<f64> = SymmetricEigen::new(m)
            .eigenvalues
            .iter()
            .map(|x| x.sqrt())
            .collect();
        ev.sort_by(|x, y| y.partial_cmp(x).unwrap());
        (ev[0], ev[2])
    }

    fn random_physical(rng: &mut ChaCha8Rng) -> TwoModeCov {
        let a = 1.0 + rng.random::<f64>() * 50.0;
        let b = 1.0 + rng.random::<f64>() * 50.0;
        let cmax = ((a - 1.0) * (b + 1.0)).min((a + 1.0) * (b - 1.0)).sqrt();
        TwoModeCov::new(a, b, rng.random::<f64>() * cmax).unwrap()
    }

    #[test]
    fn g_func_values() {
        assert_eq!(g_func(0.0).unwrap(), 0.0);
        assert_relative_eq!(g_func(1.0).unwrap(), 2.0, epsilon = 1e-15);
        assert_relative_eq!(g_func(0.5).unwrap(), 1.377_443_751_081_734_3, epsilon = 1e-14);
        assert!(g_func(-1e-3).is_err());
        assert!(g_func(f64::NAN).is_err());
    }

    #[test]
    fn g_func_strictly_increasing() {
        let mut x = 0.0;
        let mut prev = g_func(0.0).unwrap();
        while x < 1e6 {
            x = x * 1.7 + 1e-6;
            let next = g_func(x).unwrap();
            assert!(next > prev, "G not increasing at {x}");
            prev = next;
        }
    }

    #[test]
    fn eigenvalue_examples() {
        let (l1, l2) = symplectic_eigenvalues(&TwoModeCov::new(1.0, 1.0, 0.0).unwrap()).unwrap();
        assert_eq!((l1, l2), (1.0, 1.0));
        let (l1, l2) = symplectic_eigenvalues(&TwoModeCov::new(2.0, 2.0, 0.0).unwrap()).unwrap();
        assert_relative_eq!(l1, 2.0, epsilon = 1e-14);
        assert_relative_eq!(l2, 2.0, epsilon = 1e-14);

        let pure = TwoModeCov::new(2.0, 2.0, 3f64.sqrt()).unwrap();
        let (l1, l2) = symplectic_eigenvalues(&pure).unwrap();
        assert_relative_eq!(l1 * l2, 1.0, epsilon = 1e-12);
        let (o1, o2) = oracle_symplectic(&pure);
        assert_relative_eq!(l1, o1, epsilon = 1e-7);
        assert_relative_eq!(l2, o2, epsilon = 1e-7);
    }

    #[test]
    fn eigenvalues_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let cov = random_physical(&mut rng);
            let (l1, l2) = symplectic_eigenvalues(&cov).unwrap();
            let (o1, o2) = oracle_symplectic(&cov);
            assert_relative_eq!(l1, o1, max_relative = 1e-8);
            assert_relative_eq!(l2, o2.max(1.0), max_relative = 1e-6);
            assert!(l1 >= l2);
            let d = cov.det_sqrt();
            assert_relative_eq!(l1 * l1 * l2 * l2, d * d, max_relative = 1e-9);
        }
    }

    #[test]
    fn conditional_eigenvalue_examples() {
        let f = |a, b, c| conditional_eigenvalue_heterodyne(&TwoModeCov::new(a, b, c).unwrap()).unwrap();
        assert_eq!(f(1.0, 1.0, 0.0), 1.0);
        assert_eq!(f(2.0, 3.0, 0.0), 2.0);
        assert_relative_eq!(f(3.0, 3.0, 8f64.sqrt()), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn holevo_examples() {
        let h = |a, b, c| holevo_bound(&TwoModeCov::new(a, b, c).unwrap()).unwrap();
        assert_eq!(h(1.0, 1.0, 0.0), 0.0);
        assert_relative_eq!(h(1.0, 3.0, 0.0), 2.0, epsilon = 1e-14);
        // 40-digit mpmath evaluation of the same formulas.
        let (t, eps, va) = (0.1, 0.05, 100.0);
        let cov = TwoModeCov::new(va + 1.0, t * va + 1.0 + t * eps, (t * ((va + 1.0f64).powi(2) - 1.0)).sqrt())
            .unwrap();
        assert_relative_eq!(holevo_bound(&cov).unwrap(), 2.533_071_890_371_959, epsilon = 1e-12);
        let s = SymplecticSpectrum::of(&cov).unwrap();
        assert_relative_eq!(s.lambda1, 91.000_543_445_515_65, epsilon = 1e-10);
        assert_relative_eq!(s.lambda2, 1.005_543_445_515_645_6, epsilon = 1e-12);
        assert_relative_eq!(s.lambda3_cond, 16.035_401_915_868_39, epsilon = 1e-10);
    }

    #[test]
    fn holevo_with_no_correlation_is_g_of_b() {
        for b in [1.0, 1.5, 4.0, 1e3] {
            let cov = TwoModeCov::new(7.0, b, 0.0).unwrap();
            assert_relative_eq!(
                holevo_bound(&cov).unwrap(),
                g_func((b - 1.0) / 2.0).unwrap(),
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn holevo_nonincreasing_in_correlation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let cov = random_physical(&mut rng);
            let (a, b) = (cov.a(), cov.b());
            let cmax = ((a - 1.0) * (b + 1.0)).min((a + 1.0) * (b - 1.0)).sqrt();
            let h = 1e-6 * cmax.max(1e-3);
            let c = cov.c().clamp(h, cmax - h);
            let lo = holevo_bound(&TwoModeCov::new(a, b, c - h).unwrap()).unwrap();
            let hi = holevo_bound(&TwoModeCov::new(a, b, c + h).unwrap()).unwrap();
            assert!(hi <= lo + 1e-9, "holevo increased with c at ({a}, {b}, {c})");
        }
    }

    /// Alice-Bob matrix of a channel `y = t·x + z` with noise variance `σ²`.
    fn linear_channel(v_a: f64, t: f64, s2: f64) -> TwoModeCov {
        TwoModeCov::new(v_a + 1.0, t * t * v_a + s2, t * (v_a * v_a + 2.0 * v_a).sqrt()).unwrap()
    }

    #[test]
    fn noise_and_transmission_sensitivities() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let h = 1e-5;
        for _ in 0..50 {
            let v_a = 10f64.powf(rng.random_range(0.0..5.0));
            let tr: f64 = rng.random_range(0.01..1.0);
            let eps: f64 = rng.random_range(0.0..0.5);
            let (t, s2) = (tr.sqrt() - 2.0 * h, 1.0 + tr * eps + 2.0 * h);
            let chi = |t: f64, s2: f64| holevo_bound(&linear_channel(v_a, t, s2)).unwrap();
            let rate = |t: f64, s2: f64| {
                mutual_information(t * t, (s2 - t * t) / (t * t), v_a + 1.0).unwrap() - chi(t, s2)
            };
            assert!(chi(t, s2 + h) > chi(t, s2 - h), "dχ/dσ² at V={v_a}, T={tr}");
            assert!(rate(t + h, s2) > rate(t - h, s2), "dk/dt at V={v_a}, T={tr}");
        }
    }

    #[test]
    fn unphysical_inputs_rejected() {
        assert!(TwoModeCov::new(0.5, 1.0, 0.0).is_err());
        assert!(TwoModeCov::new(1.0, 0.9, 0.0).is_err());
        assert!(TwoModeCov::new(2.0, 2.0, 2.0).is_err());
        match TwoModeCov::new(2.0, 2.0, 1.8) {
            Err(Error::Unphysical { parameter, .. }) => assert_eq!(parameter, "c"),
            other => panic!("expected unphysical c, got {other:?}"),
        }
    }

    #[test]
    fn mutual_information_examples() {
        assert_eq!(mutual_information(1.0, 0.0, 1.0).unwrap(), 0.0);
        assert_relative_eq!(mutual_information(1.0, 0.0, 3.0).unwrap(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(
            mutual_information(0.5, 1.1, 101.0).unwrap(),
            (52.05f64 / 2.05).log2(),
            epsilon = 1e-13
        );
        assert_relative_eq!(mutual_information(0.5, 1.1, 101.0).unwrap(), 4.6663, epsilon = 1e-4);
        assert!(mutual_information(0.0, 1.0, 2.0).is_err());
        assert!(mutual_information(0.5, -10.0, 2.0).is_err());
    }
}
