//! PT-symmetric dimer: two modes at a shared energy `ε` with balanced
//! gain and loss `γ`, coupled through `b` and `c = b*`.
//!
//! Active dimer: `E± = ε ± ½√(4|b|² - γ²)`, real below the threshold
//! `γ = 2|b|` and a complex-conjugate pair above it.
//!
//! Passive dimer (vanishing gain): `Ẽ± = ε - iγ/2 ± ½√(4|b|² - γ²/4)`.
//! The common shift `-iγ/2` is linear in `γ`; the remainder is real below
//! `γ = 4|b|`.
//!
//! Matrix conventions are chosen so that the explicit matrices have
//! exactly these spectra: [`PtDimer::matrix`] is
//! `[[ε - iγ/2, b], [b*, ε + iγ/2]]` (loss on mode 1, gain on mode 2) and
//! [`PtDimer::passive_matrix`] is `[[ε - iγ/4, b], [b*, ε - 3iγ/4]]`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::ComplexMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PtError {
    #[error("gain/loss rate must be finite and non-negative, got {0}")]
    NegativeGamma(f64),
    #[error("parameters must be finite")]
    NonFinite,
    #[error("coupling b is zero, the dimer has no symmetry-breaking threshold")]
    ZeroCoupling,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PtDimer {
    epsilon: f64,
    gamma: f64,
    b: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PtPhaseKind {
    Symmetric,
    Broken,
    Threshold,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PtPhase {
    pub kind: PtPhaseKind,
    /// `4|b|² - γ²` (active) or `4|b|² - γ²/4` (passive).
    pub margin: f64,
}

impl PtDimer {
    pub fn new(epsilon: f64, gamma: f64, b: Complex64) -> Result<Self, PtError> {
        if !(epsilon.is_finite() && b.re.is_finite() && b.im.is_finite()) {
            return Err(PtError::NonFinite);
        }
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(PtError::NegativeGamma(gamma));
        }
        Ok(Self { epsilon, gamma, b })
    }

    /// No validation; a negative `γ` swaps gain and loss.
    pub(crate) fn unchecked(epsilon: f64, gamma: f64, b: Complex64) -> Self {
        Self { epsilon, gamma, b }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn b(&self) -> Complex64 {
        self.b
    }

    /// `c = b*`, never stored.
    pub fn c(&self) -> Complex64 {
        self.b.conj()
    }

    fn coupling_sq4(&self) -> f64 {
        4.0 * self.b.norm_sqr()
    }

    fn margin(&self, passive: bool) -> f64 {
        let g2 = self.gamma * self.gamma;
        if passive {
            self.coupling_sq4() - g2 / 4.0
        } else {
            self.coupling_sq4() - g2
        }
    }

    fn tol(&self) -> f64 {
        1e-12 * self.coupling_sq4().max(self.gamma * self.gamma).max(1.0)
    }

    pub fn matrix(&self) -> ComplexMatrix {
        let half = 0.5 * self.gamma;
        ComplexMatrix::from_row_major(
            2,
            vec![
                Complex64::new(self.epsilon, -half),
                self.b,
                self.c(),
                Complex64::new(self.epsilon, half),
            ],
        )
        .expect("2x2 is a valid shape")
    }

    pub fn passive_matrix(&self) -> ComplexMatrix {
        let q = 0.25 * self.gamma;
        ComplexMatrix::from_row_major(
            2,
            vec![
                Complex64::new(self.epsilon, -q),
                self.b,
                self.c(),
                Complex64::new(self.epsilon, -3.0 * q),
            ],
        )
        .expect("2x2 is a valid shape")
    }
}

/// `center ± ½√margin`, exactly degenerate inside the threshold band.
fn split(center: Complex64, margin: f64, tol: f64) -> (Complex64, Complex64) {
    if margin.abs() <= tol {
        (center, center)
    } else if margin > 0.0 {
        let h = 0.5 * margin.sqrt();
        (
            Complex64::new(center.re + h, center.im),
            Complex64::new(center.re - h, center.im),
        )
    } else {
        let h = 0.5 * (-margin).sqrt();
        (
            Complex64::new(center.re, center.im + h),
            Complex64::new(center.re, center.im - h),
        )
    }
}

/// Active dimer eigenvalues `(E+, E-)`.
pub fn pt_eigenvalues(d: &PtDimer) -> (Complex64, Complex64) {
    split(Complex64::new(d.epsilon, 0.0), d.margin(false), d.tol())
}

/// Passive dimer eigenvalues `(Ẽ+, Ẽ-)`; both carry `Im = -γ/2` below
/// the passive threshold.
pub fn passive_eigenvalues(d: &PtDimer) -> (Complex64, Complex64) {
    split(Complex64::new(d.epsilon, -0.5 * d.gamma), d.margin(true), d.tol())
}

pub fn pt_phase(d: &PtDimer, passive: bool) -> PtPhase {
    let margin = d.margin(passive);
    let tol = d.tol();
    let kind = if margin > tol {
        PtPhaseKind::Symmetric
    } else if margin < -tol {
        PtPhaseKind::Broken
    } else {
        PtPhaseKind::Threshold
    };
    PtPhase { kind, margin }
}

/// Gain/loss rates `(2|b|, 4|b|)` at which the active and passive dimers
/// leave the symmetric phase.
pub fn pt_breaking_threshold(b: Complex64) -> Result<(f64, f64), PtError> {
    if b == Complex64::new(0.0, 0.0) {
        return Err(PtError::ZeroCoupling);
    }
    if !(b.re.is_finite() && b.im.is_finite()) {
        return Err(PtError::NonFinite);
    }
    let m = b.norm();
    Ok((2.0 * m, 4.0 * m))
}
