//! Dense eigendecomposition of small non-Hermitian matrices together with
//! the biorthogonal diagnostics built on top of it.
//!
//! Two inner products appear throughout and are kept apart on purpose:
//!
//! * the *bilinear* overlap `⟨ψ_λ|φ_μ⟩` with `ψ_λ = φ_λ*` for complex
//!   symmetric `H`, which evaluates to `Σ_i φ_λ,i φ_μ,i` (no conjugation).
//!   Eigenvectors are normalized so that this is `δ_λμ`.
//! * the *Hermitian* overlap `⟨φ_λ|φ_μ⟩ = Σ_i conj(φ_λ,i) φ_μ,i`, which
//!   defines the mixing coefficients `A_λ` and `B_λμ`.
//!
//! For matrices that are not complex symmetric the left vectors are
//! computed separately, and each biorthogonal pair is balanced so that
//! `‖ψ_λ‖ = ‖φ_λ‖`. With that choice `r_λ = 1/A_λ` holds for both cases.

mod schur;

use std::cmp::Ordering;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::{bilinear, inner, norm, ComplexMatrix, MatrixError};

/// Self-overlap (of a unit vector) below which biorthogonal normalization
/// is considered singular.
pub const SINGULAR_OVERLAP: f64 = 1e-14;

/// Eigenvalues closer than this (relative to `max(1, |z|max)`) form a
/// degenerate cluster.
pub const DEGENERACY_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error("QR iteration did not converge after {sweeps} sweeps ({unconverged} eigenvalues left)")]
    NonConvergence { sweeps: usize, unconverged: usize },
    #[error("biorthogonal normalization of eigenvector {index} is singular (exceptional point?)")]
    NormalizationSingular { index: usize },
}

/// `z = E - (i/2) Γ`.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ComplexEigenvalue(pub Complex64);

impl ComplexEigenvalue {
    pub fn value(self) -> Complex64 {
        self.0
    }

    /// Resonance energy `E = Re z`.
    pub fn energy(self) -> f64 {
        self.0.re
    }

    /// Decay width `Γ = -2 Im z`.
    pub fn width(self) -> f64 {
        -2.0 * self.0.im
    }
}

impl fmt::Debug for ComplexEigenvalue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:+}i", self.0.re, self.0.im)
    }
}

impl From<Complex64> for ComplexEigenvalue {
    fn from(z: Complex64) -> Self {
        Self(z)
    }
}

/// Eigenpairs of a square matrix, ordered by (real part, imaginary part).
#[derive(Debug, Clone)]
pub struct Eigensystem {
    pub eigenvalues: Vec<ComplexEigenvalue>,
    /// Right eigenvectors `φ_λ`.
    pub right_vectors: Vec<Vec<Complex64>>,
    /// Kets `ψ_λ` whose bras are the left eigenvectors, `ψ_λᴴ H = z_λ ψ_λᴴ`.
    pub left_vectors: Vec<Vec<Complex64>>,
    /// `max_λ ‖H φ_λ - z_λ φ_λ‖ / (‖H‖ ‖φ_λ‖)`.
    pub residual_norm: f64,
    /// Whether the input was complex symmetric, so that `ψ_λ = φ_λ*`.
    pub symmetric: bool,
    /// Per-pair flag: `false` when biorthogonal normalization was singular.
    pub normalized: Vec<bool>,
    /// QR sweeps spent.
    pub sweeps: usize,
}

impl Eigensystem {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn values(&self) -> Vec<Complex64> {
        self.eigenvalues.iter().map(|z| z.0).collect()
    }

    pub fn widths(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|z| z.width()).collect()
    }

    pub fn all_normalized(&self) -> bool {
        self.normalized.iter().all(|&ok| ok)
    }

    /// Fails with the first pair whose normalization was singular.
    pub fn check_normalized(&self) -> Result<(), SpectralError> {
        match self.normalized.iter().position(|&ok| !ok) {
            Some(index) => Err(SpectralError::NormalizationSingular { index }),
            None => Ok(()),
        }
    }

    /// Largest deviation of `⟨ψ_λ|φ_μ⟩` from `δ_λμ`.
    pub fn biorthogonality_error(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for l in 0..n {
            for m in 0..n {
                let target = if l == m { 1.0 } else { 0.0 };
                let o = inner(&self.left_vectors[l], &self.right_vectors[m]);
                worst = worst.max((o - target).norm());
            }
        }
        worst
    }
}

pub fn eigenvalue_order(a: &Complex64, b: &Complex64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// Full eigendecomposition of `h`, biorthonormalized where possible.
///
/// Singular normalization (an exceptional point within round-off) is not
/// an error here: the eigenvalues are returned and the affected pairs are
/// flagged in [`Eigensystem::normalized`].
pub fn eigendecompose(h: &ComplexMatrix) -> Result<Eigensystem, SpectralError> {
    h.check_finite()?;
    let n = h.dim();
    let symmetric = h.is_symmetric();
    let s = schur::schur(n, h.as_slice()).map_err(|e| SpectralError::NonConvergence {
        sweeps: e.sweeps,
        unconverged: e.unconverged,
    })?;
    let raw = s.eigenvalues();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eigenvalue_order(&raw[a], &raw[b]));

    let mut eigenvalues = Vec::with_capacity(n);
    let mut right_vectors = Vec::with_capacity(n);
    let mut left_vectors = Vec::with_capacity(n);
    for &k in &order {
        eigenvalues.push(ComplexEigenvalue(raw[k]));
        let phi = s.right_vector(k);
        let psi = if symmetric {
            phi.iter().map(|c| c.conj()).collect()
        } else {
            s.left_vector(k)
        };
        right_vectors.push(phi);
        left_vectors.push(psi);
    }

    let es = Eigensystem {
        eigenvalues,
        right_vectors,
        left_vectors,
        residual_norm: 0.0,
        symmetric,
        normalized: vec![true; n],
        sweeps: s.sweeps,
    };
    let mut es = biorthonormalize(es);
    es.residual_norm = residual(h, &es);
    Ok(es)
}

fn residual(h: &ComplexMatrix, es: &Eigensystem) -> f64 {
    let hn = h.frobenius_norm();
    if hn == 0.0 {
        return 0.0;
    }
    es.eigenvalues
        .iter()
        .zip(&es.right_vectors)
        .map(|(z, phi)| {
            let hp = h.matvec(phi);
            let r: Vec<Complex64> = hp.iter().zip(phi).map(|(a, p)| a - z.0 * p).collect();
            norm(&r) / (hn * norm(phi))
        })
        .fold(0.0, f64::max)
}

/// Groups indices whose eigenvalues coincide within [`DEGENERACY_TOL`].
fn degenerate_clusters(values: &[ComplexEigenvalue]) -> Vec<Vec<usize>> {
    let n = values.len();
    let scale = values.iter().map(|z| z.0.norm()).fold(1.0, f64::max);
    let tol = DEGENERACY_TOL * scale;
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if (values[i].0 - values[j].0).norm() < tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let root = find(&mut parent, i);
        if slot[root] == usize::MAX {
            slot[root] = clusters.len();
            clusters.push(Vec::new());
        }
        clusters[slot[root]].push(i);
    }
    clusters
}

fn largest_component(v: &[Complex64]) -> usize {
    let mut best = 0;
    let mut best_abs = -1.0;
    for (i, c) in v.iter().enumerate() {
        let a = c.norm();
        if a > best_abs * (1.0 + 1e-12) {
            best = i;
            best_abs = a;
        }
    }
    best
}

/// Normalizes each pair so that `⟨ψ_λ|φ_μ⟩ = δ_λμ`.
///
/// The residual freedom is fixed by making the largest-magnitude
/// component of `φ_λ` real and positive. For complex symmetric input only
/// a sign is left after the bilinear normalization, so there the
/// component is made to have non-negative real part instead.
///
/// Degenerate clusters are orthogonalized within the cluster. Pairs whose
/// self-overlap falls below [`SINGULAR_OVERLAP`] are left at unit
/// Hermitian norm and flagged.
pub fn biorthonormalize(mut es: Eigensystem) -> Eigensystem {
    let n = es.dim();
    es.normalized = vec![true; n];
    for cluster in degenerate_clusters(&es.eigenvalues) {
        let mut done: Vec<usize> = Vec::with_capacity(cluster.len());
        for &j in &cluster {
            let ok = if es.symmetric {
                normalize_symmetric(&mut es.right_vectors, &done, j)
            } else {
                normalize_general(&mut es.right_vectors, &mut es.left_vectors, &done, j)
            };
            es.normalized[j] = ok;
            if ok {
                done.push(j);
            }
        }
    }
    for j in 0..n {
        apply_gauge(&mut es, j);
    }
    es
}

fn normalize_symmetric(phi: &mut [Vec<Complex64>], done: &[usize], j: usize) -> bool {
    let mut v = std::mem::take(&mut phi[j]);
    schur::normalize_unit(&mut v);
    for &i in done {
        let o = bilinear(&phi[i], &v);
        for (x, p) in v.iter_mut().zip(&phi[i]) {
            *x -= o * p;
        }
    }
    schur::normalize_unit(&mut v);
    let s = bilinear(&v, &v);
    let ok = s.norm() >= SINGULAR_OVERLAP;
    if ok {
        let root = s.sqrt();
        v.iter_mut().for_each(|x| *x /= root);
    }
    phi[j] = v;
    ok
}

fn normalize_general(
    phi: &mut [Vec<Complex64>],
    psi: &mut [Vec<Complex64>],
    done: &[usize],
    j: usize,
) -> bool {
    let mut v = std::mem::take(&mut phi[j]);
    let mut w = std::mem::take(&mut psi[j]);
    schur::normalize_unit(&mut v);
    schur::normalize_unit(&mut w);
    for &i in done {
        let ov = inner(&psi[i], &v);
        for (x, p) in v.iter_mut().zip(&phi[i]) {
            *x -= ov * p;
        }
        let ow = inner(&phi[i], &w);
        for (x, p) in w.iter_mut().zip(&psi[i]) {
            *x -= ow * p;
        }
    }
    schur::normalize_unit(&mut v);
    schur::normalize_unit(&mut w);
    let s = inner(&w, &v);
    let ok = s.norm() >= SINGULAR_OVERLAP;
    if ok {
        let a = (1.0 / s.norm()).sqrt();
        let b = Complex64::new(1.0, 0.0) / (a * s.conj());
        v.iter_mut().for_each(|x| *x *= a);
        w.iter_mut().for_each(|x| *x *= b);
    }
    phi[j] = v;
    psi[j] = w;
    ok
}

fn apply_gauge(es: &mut Eigensystem, j: usize) {
    let phi = &es.right_vectors[j];
    let m = largest_component(phi);
    let c = phi[m];
    if c.norm() == 0.0 {
        return;
    }
    if es.symmetric {
        if c.re < 0.0 || (c.re == 0.0 && c.im < 0.0) {
            es.right_vectors[j].iter_mut().for_each(|x| *x = -*x);
        }
        es.left_vectors[j] = es.right_vectors[j].iter().map(|x| x.conj()).collect();
    } else {
        let phase = c.conj() / c.norm();
        es.right_vectors[j].iter_mut().for_each(|x| *x *= phase);
        es.left_vectors[j].iter_mut().for_each(|x| *x *= phase);
    }
}

/// `A_λ = ⟨φ_λ|φ_λ⟩` and `B[λ][μ] = |⟨φ_λ|φ_μ⟩|` (Hermitian overlaps).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingCoefficients {
    pub a: Vec<f64>,
    /// Zero on the diagonal.
    pub b: Vec<Vec<f64>>,
}

/// Mixing coefficients of a biorthonormalized system. Pairs flagged as
/// singular get `A = ∞` and infinite off-diagonal entries.
pub fn mixing_coefficients(es: &Eigensystem) -> MixingCoefficients {
    let n = es.dim();
    let a = (0..n)
        .map(|l| {
            if es.normalized[l] {
                inner(&es.right_vectors[l], &es.right_vectors[l]).re
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let b = (0..n)
        .map(|l| {
            (0..n)
                .map(|m| {
                    if l == m {
                        0.0
                    } else if es.normalized[l] && es.normalized[m] {
                        inner(&es.right_vectors[l], &es.right_vectors[m]).norm()
                    } else {
                        f64::INFINITY
                    }
                })
                .collect()
        })
        .collect();
    MixingCoefficients { a, b }
}

/// Phase rigidity `r_λ = |⟨ψ_λ|φ_λ⟩| / (‖ψ_λ‖ ‖φ_λ‖)`, which equals
/// `1/A_λ` under the normalization of [`biorthonormalize`].
pub fn phase_rigidity(es: &Eigensystem) -> Vec<f64> {
    (0..es.dim())
        .map(|l| {
            if !es.normalized[l] {
                return 0.0;
            }
            let phi = &es.right_vectors[l];
            let psi = &es.left_vectors[l];
            let denom = norm(phi) * norm(psi);
            if denom == 0.0 {
                0.0
            } else {
                (inner(psi, phi).norm() / denom).min(1.0)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn real(rows: &[Vec<f64>]) -> ComplexMatrix {
        ComplexMatrix::from_real_rows(rows).unwrap()
    }

    #[test]
    fn diagonal_matrix() {
        let es = eigendecompose(&real(&[vec![1.0, 0.0], vec![0.0, 2.0]])).unwrap();
        assert_eq!(es.values(), vec![c(1.0, 0.0), c(2.0, 0.0)]);
        assert_eq!(es.right_vectors[0], vec![c(1.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(es.right_vectors[1], vec![c(0.0, 0.0), c(1.0, 0.0)]);
    }

    #[test]
    fn exchange_matrix() {
        let es = eigendecompose(&real(&[vec![0.0, 1.0], vec![1.0, 0.0]])).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((es.eigenvalues[0].0 - c(-1.0, 0.0)).norm() < 1e-15);
        assert!((es.eigenvalues[1].0 - c(1.0, 0.0)).norm() < 1e-15);
        let v0 = &es.right_vectors[0];
        let v1 = &es.right_vectors[1];
        // proportional to (1, -1) and (1, 1), sign fixed by the gauge
        assert!((v0[0] + v0[1]).norm() < 1e-15 && (v0[0].norm() - h).abs() < 1e-15);
        assert!((v1[0] - v1[1]).norm() < 1e-15 && (v1[0] - c(h, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn real_symmetric_limits() {
        let h = real(&[
            vec![1.0, 0.3, -0.2],
            vec![0.3, -0.5, 0.7],
            vec![-0.2, 0.7, 0.1],
        ]);
        let es = eigendecompose(&h).unwrap();
        let mix = mixing_coefficients(&es);
        for (l, r) in phase_rigidity(&es).into_iter().enumerate() {
            assert!((r - 1.0).abs() < 1e-12);
            assert!(es.eigenvalues[l].0.im.abs() < 1e-10);
            assert!((mix.a[l] - 1.0).abs() < 1e-12);
            for m in 0..3 {
                assert!(mix.b[l][m] < 1e-10);
            }
        }
    }

    #[test]
    fn left_vectors_of_symmetric_input_are_conjugates() {
        let h = ComplexMatrix::from_rows(&[
            vec![c(1.0, -0.5), c(0.0, -0.5)],
            vec![c(0.0, -0.5), c(-1.0, -0.5)],
        ])
        .unwrap();
        let es = eigendecompose(&h).unwrap();
        assert!(es.symmetric);
        for (phi, psi) in es.right_vectors.iter().zip(&es.left_vectors) {
            for (a, b) in phi.iter().zip(psi) {
                assert_eq!(a.conj(), *b);
            }
        }
        assert!(es.biorthogonality_error() < 1e-12);
    }

    #[test]
    fn general_matrix_biorthonormal() {
        let h = ComplexMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(2.0, 1.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.5), c(1.0, 0.0)],
            vec![c(0.3, 0.0), c(0.0, 0.0), c(-1.0, 0.0)],
        ])
        .unwrap();
        let es = eigendecompose(&h).unwrap();
        assert!(!es.symmetric);
        assert!(es.all_normalized());
        assert!(es.biorthogonality_error() < 1e-12);
        assert!(es.residual_norm < 1e-14);
        let mix = mixing_coefficients(&es);
        for (r, a) in phase_rigidity(&es).iter().zip(&mix.a) {
            assert!((r - 1.0 / a).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_ep_is_flagged() {
        // Jordan-type symmetric matrix [[i, 1], [1, -i]] has a double eigenvalue 0
        let h = ComplexMatrix::from_rows(&[vec![c(0.0, 1.0), c(1.0, 0.0)], vec![c(1.0, 0.0), c(0.0, -1.0)]])
            .unwrap();
        let es = eigendecompose(&h).unwrap();
        for z in &es.eigenvalues {
            assert!(z.0.norm() < 1e-7);
        }
        assert!(!es.all_normalized());
        assert!(matches!(es.check_normalized(), Err(SpectralError::NormalizationSingular { .. })));
        let r = phase_rigidity(&es);
        assert!(r.iter().all(|&x| x < 1e-6));
    }

    #[test]
    fn hermitian_degeneracy_is_normalized() {
        let es = eigendecompose(&ComplexMatrix::identity(3).unwrap()).unwrap();
        assert!(es.all_normalized());
        assert!(phase_rigidity(&es).iter().all(|&r| (r - 1.0).abs() < 1e-15));
    }

    #[test]
    fn rescaled_vectors_normalize_to_the_same_result() {
        let h = ComplexMatrix::from_rows(&[
            vec![c(0.2, -0.1), c(0.5, 0.0), c(0.1, -0.3)],
            vec![c(0.5, 0.0), c(-0.4, -0.6), c(0.0, 0.2)],
            vec![c(0.1, -0.3), c(0.0, 0.2), c(1.0, 0.0)],
        ])
        .unwrap();
        let es = eigendecompose(&h).unwrap();
        let mut scaled = es.clone();
        let factors = [c(3.0, -2.0), c(-0.01, 0.0), c(0.0, 7.5)];
        for (v, f) in scaled.right_vectors.iter_mut().zip(factors) {
            v.iter_mut().for_each(|x| *x *= f);
        }
        let again = biorthonormalize(scaled);
        for (a, b) in es.right_vectors.iter().zip(&again.right_vectors) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn widths_follow_sign_convention() {
        let z = ComplexEigenvalue(c(2.0, -0.25));
        assert_eq!(z.energy(), 2.0);
        assert_eq!(z.width(), 0.5);
    }

    #[test]
    fn rejects_non_finite_input() {
        let mut h = ComplexMatrix::identity(2).unwrap();
        h[(0, 1)] = c(f64::INFINITY, 0.0);
        assert!(matches!(eigendecompose(&h), Err(SpectralError::Matrix(MatrixError::NonFinite { .. }))));
    }
}
