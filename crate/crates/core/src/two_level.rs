//! Closed-form two-level system `[[ε₁, ω], [ω, ε₂]]` with complex entries.
//!
//! The eigenvalues are `E± = (ε₁+ε₂)/2 ± ½√((ε₁-ε₂)² + 4ω²)` using the
//! principal square root. `E+` and `E-` are therefore branch labels:
//! following a level continuously across a parameter sweep is the job of
//! the trajectory module.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::{bilinear, inner, norm, ComplexMatrix};
use crate::spectral::{biorthonormalize, ComplexEigenvalue, Eigensystem};

/// Below this `distance_to_ep` the closed-form eigenvectors are treated as
/// coalesced.
pub const EP_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TwoLevelError {
    #[error("open-system energies need Im ε ≤ 0, got ε₁ = {eps1}, ε₂ = {eps2}")]
    GainingState { eps1: Complex64, eps2: Complex64 },
    #[error("parameters must be finite")]
    NonFinite,
    #[error("coupling ω is zero, crossing ratio undefined (discriminant {discriminant})")]
    ZeroCoupling { discriminant: Complex64 },
    #[error("exceptional point: eigenvalue {eigenvalue} with a single self-orthogonal eigenvector")]
    AtExceptionalPoint {
        eigenvalue: Complex64,
        vector: [Complex64; 2],
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoLevelSystem {
    pub eps1: Complex64,
    pub eps2: Complex64,
    pub omega: Complex64,
}

/// Distance of a two-level system from its crossing condition
/// `(ε₁-ε₂)/(2ω) = ±i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingDiagnostic {
    pub ratio: Complex64,
    pub distance_to_ep: f64,
    pub discriminant: Complex64,
    /// All parameters real and not trivially degenerate: a true crossing
    /// cannot occur.
    pub crossing_impossible: bool,
}

fn principal_sqrt(z: Complex64) -> Complex64 {
    let r = z.sqrt();
    // keep arg in (-π/2, π/2]
    if r.re < 0.0 || (r.re == 0.0 && r.im < 0.0) {
        -r
    } else {
        r
    }
}

impl TwoLevelSystem {
    /// Unchecked general system.
    pub fn new(eps1: Complex64, eps2: Complex64, omega: Complex64) -> Self {
        Self { eps1, eps2, omega }
    }

    /// Open quantum system: both unperturbed states may only decay.
    pub fn open(eps1: Complex64, eps2: Complex64, omega: Complex64) -> Result<Self, TwoLevelError> {
        let finite = [eps1, eps2, omega]
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite());
        if !finite {
            return Err(TwoLevelError::NonFinite);
        }
        if eps1.im > 0.0 || eps2.im > 0.0 {
            return Err(TwoLevelError::GainingState { eps1, eps2 });
        }
        Ok(Self::new(eps1, eps2, omega))
    }

    pub fn matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_row_major(2, vec![self.eps1, self.omega, self.omega, self.eps2])
            .expect("2x2 is a valid shape")
    }

    /// `(ε₁-ε₂)² + 4ω²`.
    pub fn discriminant(&self) -> Complex64 {
        let d = self.eps1 - self.eps2;
        d * d + 4.0 * self.omega * self.omega
    }

    fn is_real(&self) -> bool {
        self.eps1.im == 0.0 && self.eps2.im == 0.0 && self.omega.im == 0.0
    }

    /// Ratio `(ε₁-ε₂)/(2ω)` or `None` for `ω = 0`.
    fn ratio(&self) -> Option<Complex64> {
        if self.omega == Complex64::new(0.0, 0.0) {
            None
        } else {
            Some((self.eps1 - self.eps2) / (2.0 * self.omega))
        }
    }

    fn distance_to_ep(&self) -> f64 {
        match self.ratio() {
            Some(q) => {
                let i = Complex64::i();
                (q - i).norm().min((q + i).norm())
            }
            None => f64::INFINITY,
        }
    }

    /// Unnormalized eigenvector for eigenvalue `e`, picking whichever of the
    /// two row-kernel forms is better conditioned.
    fn raw_vector(&self, e: Complex64) -> [Complex64; 2] {
        let a = [self.omega, e - self.eps1];
        let b = [e - self.eps2, self.omega];
        if norm(&a) >= norm(&b) {
            a
        } else {
            b
        }
    }
}

/// Closed-form eigenvalues `(E+, E-)`.
pub fn eigenvalues2(s: &TwoLevelSystem) -> (Complex64, Complex64) {
    let mean = (s.eps1 + s.eps2) * 0.5;
    let half_root = principal_sqrt(s.discriminant()) * 0.5;
    (mean + half_root, mean - half_root)
}

/// Closed-form crossing diagnostic. Errors only when `ω = 0`.
pub fn crossing_diagnostic(s: &TwoLevelSystem) -> Result<CrossingDiagnostic, TwoLevelError> {
    let discriminant = s.discriminant();
    let ratio = s.ratio().ok_or(TwoLevelError::ZeroCoupling { discriminant })?;
    Ok(CrossingDiagnostic {
        ratio,
        distance_to_ep: s.distance_to_ep(),
        discriminant,
        crossing_impossible: s.is_real() && (s.eps1 != s.eps2 || s.omega != Complex64::new(0.0, 0.0)),
    })
}

/// Biorthonormalized eigensystem ordered `[E+, E-]`.
///
/// At the exceptional point the two eigenvectors coincide; the single
/// unnormalized vector is returned inside the error.
pub fn eigenvectors2(s: &TwoLevelSystem) -> Result<Eigensystem, TwoLevelError> {
    let (ep, em) = eigenvalues2(s);
    if s.distance_to_ep() <= EP_TOL {
        return Err(TwoLevelError::AtExceptionalPoint {
            eigenvalue: (ep + em) * 0.5,
            vector: s.raw_vector(ep),
        });
    }
    let right: Vec<Vec<Complex64>> = [ep, em].iter().map(|&e| s.raw_vector(e).to_vec()).collect();
    let left = right.iter().map(|v| v.iter().map(|c| c.conj()).collect()).collect();
    let es = Eigensystem {
        eigenvalues: vec![ComplexEigenvalue(ep), ComplexEigenvalue(em)],
        right_vectors: right,
        left_vectors: left,
        residual_norm: 0.0,
        symmetric: true,
        normalized: vec![true; 2],
        sweeps: 0,
    };
    Ok(biorthonormalize(es))
}

/// Closed-form phase rigidities `(r+, r-)`, each `|φ·φ| / ‖φ‖²`. Returns
/// `(0, 0)` inside the error at the exceptional point.
pub fn phase_rigidity2(s: &TwoLevelSystem) -> Result<(f64, f64), TwoLevelError> {
    let (ep, em) = eigenvalues2(s);
    if s.distance_to_ep() <= EP_TOL {
        return Err(TwoLevelError::AtExceptionalPoint {
            eigenvalue: (ep + em) * 0.5,
            vector: s.raw_vector(ep),
        });
    }
    let r = |e: Complex64| {
        let v = s.raw_vector(e);
        let n2 = norm(&v).powi(2);
        (bilinear(&v, &v).norm() / n2).min(1.0)
    };
    Ok((r(ep), r(em)))
}

/// Normalized Hermitian overlap `|⟨φ+|φ-⟩| / (‖φ+‖ ‖φ-‖)`; tends to 1 at
/// the exceptional point, where the eigenvectors become linearly dependent.
pub fn eigenvector_overlap(s: &TwoLevelSystem) -> f64 {
    let (ep, em) = eigenvalues2(s);
    let a = s.raw_vector(ep);
    let b = s.raw_vector(em);
    (inner(&a, &b).norm() / (norm(&a) * norm(&b))).min(1.0)
}

/// Phase of the component ratio `φ₂/φ₁` for `(φ+, φ-)`. Diagnostic only:
/// it is gauge invariant, so comparing values on either side of the
/// crossing shows the phase jump of the eigenfunctions.
pub fn component_phase(s: &TwoLevelSystem) -> (f64, f64) {
    let (ep, em) = eigenvalues2(s);
    let arg = |e: Complex64| {
        let v = s.raw_vector(e);
        (v[1] / v[0]).arg()
    };
    (arg(ep), arg(em))
}
