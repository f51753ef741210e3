//! Constitutive functions of the strut: the stored-energy density `kappa` of
//! the natural curvature, the rate function `f` driving natural-curvature
//! evolution, and the activation threshold `theta`.
//!
//! Each family is validated when built through its constructor. Fields stay
//! public so hand-assembled (possibly invalid) sets can still be inspected
//! with [`ConstitutiveSet::validate`].

use std::fmt;

use crate::error::ConstitutiveError;

/// Stored energy of the natural curvature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kappa {
    /// `kappa(x) = (k/2) x^2`
    Quadratic { k: f64 },
    /// `kappa(x) = k x^2 (x^2 - mu1^2)^2 / mu1^4`, with zero-energy wells at `0` and `±mu1`.
    TripleWell { k: f64, mu1: f64 },
}

impl Kappa {
    pub fn quadratic(k: f64) -> Result<Self, ConstitutiveError> {
        check_positive("k", k)?;
        Ok(Kappa::Quadratic { k })
    }

    pub fn triple_well(k: f64, mu1: f64) -> Result<Self, ConstitutiveError> {
        check_positive("k", k)?;
        check_positive("mu1", mu1)?;
        Ok(Kappa::TripleWell { k, mu1 })
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Kappa::Quadratic { k } => 0.5 * k * x * x,
            Kappa::TripleWell { k, mu1 } => {
                let m2 = mu1 * mu1;
                let d = x * x - m2;
                k * x * x * d * d / (m2 * m2)
            }
        }
    }

    pub fn prime(&self, x: f64) -> f64 {
        match *self {
            Kappa::Quadratic { k } => k * x,
            Kappa::TripleWell { k, mu1 } => {
                let m2 = mu1 * mu1;
                let x2 = x * x;
                2.0 * k * x * (x2 - m2) * (3.0 * x2 - m2) / (m2 * m2)
            }
        }
    }

    pub fn second(&self, x: f64) -> f64 {
        match *self {
            Kappa::Quadratic { k } => k,
            Kappa::TripleWell { k, mu1 } => {
                let m2 = mu1 * mu1;
                let x2 = x * x;
                k * (30.0 * x2 * x2 - 24.0 * m2 * x2 + 2.0 * m2 * m2) / (m2 * m2)
            }
        }
    }
}

/// Power-law rate `f(x) = c max(x, 0)^p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rate {
    pub c: f64,
    pub p: f64,
}

impl Rate {
    pub fn new(c: f64, p: f64) -> Result<Self, ConstitutiveError> {
        check_positive("c", c)?;
        if !(p.is_finite() && p >= 2.0) {
            return Err(ConstitutiveError::InvalidParameter {
                name: "p",
                value: p,
                reason: "exponent must satisfy p >= 2",
            });
        }
        Ok(Rate { c, p })
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            self.c * x.powf(self.p)
        }
    }

    pub fn prime(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            self.c * self.p * x.powf(self.p - 1.0)
        }
    }
}

/// Activation threshold `theta(x) = theta_a + theta_b x^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    pub theta_a: f64,
    pub theta_b: f64,
}

impl Threshold {
    pub fn new(theta_a: f64, theta_b: f64) -> Result<Self, ConstitutiveError> {
        if !(theta_a.is_finite() && theta_a > 0.0) {
            return Err(ConstitutiveError::Hypothesis {
                hypothesis: Hypothesis::ThresholdBoundedBelow,
                witness: theta_a,
            });
        }
        if !(theta_b.is_finite() && theta_b >= 0.0) {
            return Err(ConstitutiveError::InvalidParameter {
                name: "theta_b",
                value: theta_b,
                reason: "curvature coefficient must be non-negative",
            });
        }
        Ok(Threshold { theta_a, theta_b })
    }

    pub fn constant(theta_a: f64) -> Result<Self, ConstitutiveError> {
        Self::new(theta_a, 0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.theta_a + self.theta_b * x * x
    }

    pub fn prime(&self, x: f64) -> f64 {
        2.0 * self.theta_b * x
    }

    /// Infimum over the real line.
    pub fn infimum(&self) -> f64 {
        self.theta_a
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstitutiveSet {
    pub kappa: Kappa,
    pub rate: Rate,
    pub threshold: Threshold,
}

impl Default for ConstitutiveSet {
    /// Quadratic `kappa` with `k = 1`, quadratic rate with `c = 1`, constant threshold `0.1`.
    fn default() -> Self {
        ConstitutiveSet {
            kappa: Kappa::Quadratic { k: 1.0 },
            rate: Rate { c: 1.0, p: 2.0 },
            threshold: Threshold {
                theta_a: 0.1,
                theta_b: 0.0,
            },
        }
    }
}

/// A hypothesis on the constitutive functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    KappaNonNegative,
    KappaEven,
    KappaVanishesAtOrigin,
    KappaGrowth,
    KappaWells,
    ThresholdEven,
    ThresholdBoundedBelow,
    RateNonNegative,
    RateVanishesOnNonPositive,
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Hypothesis::KappaNonNegative => "kappa >= 0",
            Hypothesis::KappaEven => "kappa even",
            Hypothesis::KappaVanishesAtOrigin => "kappa(0) = kappa'(0) = 0",
            Hypothesis::KappaGrowth => "kappa grows at infinity",
            Hypothesis::KappaWells => "kappa(±mu1) = kappa'(±mu1) = 0",
            Hypothesis::ThresholdEven => "theta even",
            Hypothesis::ThresholdBoundedBelow => "inf theta > 0",
            Hypothesis::RateNonNegative => "f >= 0",
            Hypothesis::RateVanishesOnNonPositive => "f = 0 on x <= 0",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub hypothesis: Hypothesis,
    /// Sample point at which the hypothesis failed.
    pub witness: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// Well locations confirmed for a triple-well `kappa`.
    pub confirmed_wells: Vec<f64>,
    pub samples: usize,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl ConstitutiveSet {
    pub fn new(kappa: Kappa, rate: Rate, threshold: Threshold) -> Self {
        ConstitutiveSet {
            kappa,
            rate,
            threshold,
        }
    }

    /// Samples `[lo, hi]` at `n_samples` uniform points and checks every
    /// hypothesis the dynamics relies on.
    pub fn validate(&self, range: (f64, f64), n_samples: usize) -> ValidationReport {
        assert!(n_samples >= 2, "validation needs at least two samples");
        let (lo, hi) = range;
        let mut report = ValidationReport {
            samples: n_samples,
            ..Default::default()
        };
        let mut flag = |hypothesis, witness| {
            // one entry per hypothesis is enough to witness it
            if !report.violations.iter().any(|v| v.hypothesis == hypothesis) {
                report.violations.push(Violation {
                    hypothesis,
                    witness,
                });
            }
        };

        let scale_tol = |a: f64, b: f64| 1e-12 * (1.0 + a.abs().max(b.abs()));
        for i in 0..n_samples {
            let x = lo + (hi - lo) * i as f64 / (n_samples - 1) as f64;
            let kx = self.kappa.eval(x);
            let kmx = self.kappa.eval(-x);
            if !(kx >= 0.0) {
                flag(Hypothesis::KappaNonNegative, x);
            }
            if (kx - kmx).abs() > scale_tol(kx, kmx) {
                flag(Hypothesis::KappaEven, x);
            }
            let tx = self.threshold.eval(x);
            let tmx = self.threshold.eval(-x);
            if (tx - tmx).abs() > scale_tol(tx, tmx) {
                flag(Hypothesis::ThresholdEven, x);
            }
            if !(tx > 0.0 && tx >= self.threshold.theta_a) {
                flag(Hypothesis::ThresholdBoundedBelow, x);
            }
            let fx = self.rate.eval(x);
            if !(fx >= 0.0) {
                flag(Hypothesis::RateNonNegative, x);
            }
            if self.rate.eval(x.min(0.0)) != 0.0 {
                flag(Hypothesis::RateVanishesOnNonPositive, x);
            }
        }
        if !(self.threshold.theta_a > 0.0) {
            flag(Hypothesis::ThresholdBoundedBelow, 0.0);
        }
        if self.kappa.eval(0.0) != 0.0 || self.kappa.prime(0.0) != 0.0 {
            flag(Hypothesis::KappaVanishesAtOrigin, 0.0);
        }
        let mid = 0.5 * (lo + hi);
        let k_mid = self.kappa.eval(mid);
        for end in [lo, hi] {
            if !(self.kappa.eval(end) > k_mid) {
                flag(Hypothesis::KappaGrowth, end);
            }
        }
        if let Kappa::TripleWell { mu1, .. } = self.kappa {
            for well in [-mu1, mu1] {
                let tol = 1e-12 * (1.0 + self.kappa.second(well).abs());
                if self.kappa.eval(well).abs() <= tol && self.kappa.prime(well).abs() <= tol {
                    report.confirmed_wells.push(well);
                } else {
                    flag(Hypothesis::KappaWells, well);
                }
            }
        }
        report
    }
}

fn check_positive(name: &'static str, value: f64) -> Result<(), ConstitutiveError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(ConstitutiveError::InvalidParameter {
            name,
            value,
            reason: "must be finite and positive",
        })
    }
}
