//! Open N-level systems `H_eff = H_B - iα V Vᵀ` coupled to K decay
//! channels, in the constant-width (energy-independent) approximation.
//!
//! `H_B` is real symmetric and `V` real, so `H_eff` is complex symmetric
//! and its anti-Hermitian part `-α V Vᵀ` has rank at most K. Sweeping `α`
//! shows resonance trapping: K states take nearly all of the total width
//! `2α Tr(V Vᵀ)` while the others become long-lived. Symmetric systems can
//! hold states with exactly zero width.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::ComplexMatrix;
use crate::rng::SplitMix64;
use crate::spectral::{eigendecompose, eigenvalue_order, SpectralError};
use crate::trajectory::{
    detect_avoided_crossings, track_states, AvoidedCrossing, ParamFamily, State, SweepOptions, TrajectoryError,
};

pub const SYMMETRY_TOL: f64 = 1e-14;
pub const COMMUTATOR_TOL: f64 = 1e-12;
/// BIC threshold relative to the largest width at the same `α`.
pub const BIC_REL_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EffectiveError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("internal Hamiltonian is not symmetric: |h[{row}][{col}] - h[{col}][{row}]| = {diff:e}")]
    NotSymmetric { row: usize, col: usize, diff: f64 },
    #[error("need at least 2 levels, got {0}")]
    TooFewLevels(usize),
    #[error("need at least one channel")]
    NoChannels,
    #[error("{channels} channels for {levels} levels: trapping needs fewer channels than levels")]
    TooManyChannels { levels: usize, channels: usize },
    #[error("coupling strength must be finite and non-negative, got {0}")]
    InvalidAlpha(f64),
    #[error("non-finite matrix entry")]
    NonFinite,
    #[error("invalid coupling grid: {0}")]
    InvalidGrid(String),
    #[error("symmetry does not commute with H_B: deviation {deviation:e}")]
    SymmetryViolation { deviation: f64 },
    #[error("invalid symmetry permutation: {0}")]
    InvalidPermutation(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveHamiltonian {
    h_b: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    alpha: f64,
}

impl EffectiveHamiltonian {
    /// `h_b` is N×N, `v` is N×K (one row per level).
    pub fn new(h_b: Vec<Vec<f64>>, v: Vec<Vec<f64>>, alpha: f64) -> Result<Self, EffectiveError> {
        let n = h_b.len();
        if n < 2 {
            return Err(EffectiveError::TooFewLevels(n));
        }
        if let Some(i) = h_b.iter().position(|r| r.len() != n) {
            return Err(EffectiveError::DimensionMismatch(format!(
                "row {i} of H_B has {} entries, expected {n}",
                h_b[i].len()
            )));
        }
        if v.len() != n {
            return Err(EffectiveError::DimensionMismatch(format!("V has {} rows, H_B has {n}", v.len())));
        }
        let k = v[0].len();
        if let Some(i) = v.iter().position(|r| r.len() != k) {
            return Err(EffectiveError::DimensionMismatch(format!(
                "row {i} of V has {} entries, row 0 has {k}",
                v[i].len()
            )));
        }
        if k == 0 {
            return Err(EffectiveError::NoChannels);
        }
        if k >= n {
            return Err(EffectiveError::TooManyChannels { levels: n, channels: k });
        }
        if h_b.iter().chain(&v).flatten().any(|x| !x.is_finite()) {
            return Err(EffectiveError::NonFinite);
        }
        let mut h = h_b;
        for i in 0..n {
            for j in i + 1..n {
                let diff = (h[i][j] - h[j][i]).abs();
                if diff > SYMMETRY_TOL {
                    return Err(EffectiveError::NotSymmetric { row: i, col: j, diff });
                }
                let m = 0.5 * (h[i][j] + h[j][i]);
                h[i][j] = m;
                h[j][i] = m;
            }
        }
        Self { h_b: h, v, alpha: 0.0 }.with_alpha(alpha)
    }

    /// GOE-like `H_B` (diagonal `N(0,1)`, off-diagonal `N(0,1/2)`) and
    /// `N(0,1)` couplings, drawn from [`SplitMix64`] in row-major order,
    /// `H_B` upper triangle first.
    pub fn random(levels: usize, channels: usize, seed: u64) -> Result<Self, EffectiveError> {
        let mut rng = SplitMix64::new(seed);
        let mut h = vec![vec![0.0; levels]; levels];
        for i in 0..levels {
            for j in i..levels {
                let x = if i == j { rng.normal() } else { rng.normal() * 0.5f64.sqrt() };
                h[i][j] = x;
                h[j][i] = x;
            }
        }
        let v = (0..levels).map(|_| (0..channels).map(|_| rng.normal()).collect()).collect();
        Self::new(h, v, 1.0)
    }

    pub fn with_alpha(mut self, alpha: f64) -> Result<Self, EffectiveError> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(EffectiveError::InvalidAlpha(alpha));
        }
        self.alpha = alpha;
        Ok(self)
    }

    pub fn levels(&self) -> usize {
        self.h_b.len()
    }

    pub fn channels(&self) -> usize {
        self.v[0].len()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn h_b(&self) -> &[Vec<f64>] {
        &self.h_b
    }

    pub fn v(&self) -> &[Vec<f64>] {
        &self.v
    }

    /// `(V Vᵀ)_ij`.
    fn coupling(&self, i: usize, j: usize) -> f64 {
        self.v[i].iter().zip(&self.v[j]).map(|(a, b)| a * b).sum()
    }

    /// `Tr(V Vᵀ)`.
    pub fn coupling_trace(&self) -> f64 {
        self.v.iter().flatten().map(|x| x * x).sum()
    }

    pub fn assemble(&self) -> ComplexMatrix {
        let n = self.levels();
        let mut m = ComplexMatrix::zeros(n).expect("validated dimension");
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = Complex64::new(self.h_b[i][j], -self.alpha * self.coupling(i, j));
            }
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrappingPoint {
    /// Position in the coupling grid.
    pub index: usize,
    pub alpha: f64,
    /// Branch order.
    pub eigenvalues: Vec<Complex64>,
    pub widths: Vec<f64>,
    pub rigidity: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BicCandidate {
    pub alpha: f64,
    pub index: usize,
    pub branch: usize,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlaggedPoint {
    pub index: usize,
    pub alpha: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrappingReport {
    pub alphas: Vec<f64>,
    /// Widths at each `α`, largest first; empty at flagged points.
    pub widths: Vec<Vec<f64>>,
    /// Labeled spectra at the points that decomposed.
    pub points: Vec<TrappingPoint>,
    /// Branches whose width grows over the top decade of `α`.
    pub broad_count: usize,
    /// Mean log-log slope of the trapped widths over the top decade.
    pub trapped_widths_slope: Option<f64>,
    /// Per-branch log-log slopes over the top decade (`None` when a width
    /// there is not positive).
    pub branch_slopes: Vec<Option<f64>>,
    pub bic_candidates: Vec<BicCandidate>,
    /// Branch indices by decreasing width, per point.
    pub ordering: Vec<Vec<usize>>,
    pub avoided_crossings: Vec<AvoidedCrossing>,
    pub flagged: Vec<FlaggedPoint>,
}

fn check_grid(alphas: &[f64]) -> Result<(), EffectiveError> {
    if alphas.len() < 3 {
        return Err(EffectiveError::InvalidGrid(format!("need at least 3 points, got {}", alphas.len())));
    }
    if alphas.iter().any(|a| !a.is_finite() || *a < 0.0) {
        return Err(EffectiveError::InvalidGrid("coupling strengths must be finite and non-negative".into()));
    }
    if let Some(k) = alphas.windows(2).position(|w| w[1] <= w[0]) {
        return Err(EffectiveError::InvalidGrid(format!("not strictly increasing at index {}", k + 1)));
    }
    let lo = alphas.iter().copied().find(|&a| a > 0.0).unwrap_or(0.0);
    let hi = alphas[alphas.len() - 1];
    if lo == 0.0 || hi < 100.0 * lo {
        return Err(EffectiveError::InvalidGrid(format!(
            "grid must span at least two decades, got [{lo}, {hi}]"
        )));
    }
    Ok(())
}

/// Least-squares slope of `y` against `x`.
fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn family_for(eh: &EffectiveHamiltonian) -> ParamFamily {
    let base = eh.clone();
    ParamFamily::new(1, eh.levels(), "effective Hamiltonian over coupling strength", move |p| {
        let mut h = base.clone();
        h.alpha = p[0];
        h.assemble()
    })
}

pub fn coupling_sweep(eh: &EffectiveHamiltonian, alphas: &[f64]) -> Result<TrappingReport, EffectiveError> {
    check_grid(alphas)?;
    let family = family_for(eh);
    let mut widths = Vec::with_capacity(alphas.len());
    let mut ok_grid = Vec::new();
    let mut ok_index = Vec::new();
    let mut raw = Vec::new();
    let mut flagged = Vec::new();
    for (k, &alpha) in alphas.iter().enumerate() {
        match family.eigensystem(&[alpha]) {
            Ok(es) => {
                let mut w = es.widths();
                w.sort_by(|a, b| b.total_cmp(a));
                widths.push(w);
                ok_grid.push(vec![alpha]);
                ok_index.push(k);
                raw.push(State::from_eigensystem(&es));
            }
            Err(e) => {
                widths.push(Vec::new());
                flagged.push(FlaggedPoint {
                    index: k,
                    alpha,
                    reason: e.to_string(),
                });
            }
        }
    }
    if ok_grid.len() < 2 {
        return Err(EffectiveError::InvalidGrid("fewer than two grid points could be decomposed".into()));
    }
    let tb = track_states(&family, &ok_grid, raw, SweepOptions { keep_vectors: false })?;
    let n = eh.levels();
    let points: Vec<TrappingPoint> = ok_index
        .iter()
        .enumerate()
        .map(|(j, &k)| {
            let eigenvalues: Vec<Complex64> = (0..n).map(|l| tb.branches[l][j]).collect();
            TrappingPoint {
                index: k,
                alpha: alphas[k],
                widths: eigenvalues.iter().map(|z| -2.0 * z.im).collect(),
                rigidity: (0..n).map(|l| tb.rigidity[l][j]).collect(),
                eigenvalues,
            }
        })
        .collect();
    let ordering = points
        .iter()
        .map(|p| {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| p.widths[b].total_cmp(&p.widths[a]).then(a.cmp(&b)));
            idx
        })
        .collect();

    let alpha_max = alphas[alphas.len() - 1];
    let mut top: Vec<&TrappingPoint> = points.iter().filter(|p| p.alpha >= alpha_max / 10.0 && p.alpha > 0.0).collect();
    if top.len() < 2 {
        top = points.iter().rev().take(2).collect();
        top.reverse();
    }
    let log_alpha: Vec<f64> = top.iter().map(|p| p.alpha.ln()).collect();
    let branch_slopes: Vec<Option<f64>> = (0..n)
        .map(|l| {
            let floor = |p: &TrappingPoint| BIC_REL_TOL * p.widths.iter().cloned().fold(0.0, f64::max);
            if top.iter().any(|p| !(p.widths[l] > floor(p))) {
                return None;
            }
            let lw: Vec<f64> = top.iter().map(|p| p.widths[l].ln()).collect();
            Some(slope(&log_alpha, &lw))
        })
        .collect();
    let broad_count = branch_slopes.iter().filter(|s| matches!(s, Some(x) if *x > 0.0)).count();
    let trapped: Vec<f64> = branch_slopes.iter().filter_map(|s| s.filter(|x| *x <= 0.0)).collect();
    let trapped_widths_slope = (!trapped.is_empty()).then(|| trapped.iter().sum::<f64>() / trapped.len() as f64);

    let mut bic_candidates = Vec::new();
    for p in &points {
        let wmax = p.widths.iter().cloned().fold(0.0, f64::max);
        if p.alpha == 0.0 || wmax <= 0.0 {
            continue;
        }
        for (l, &w) in p.widths.iter().enumerate() {
            if w < BIC_REL_TOL * wmax {
                bic_candidates.push(BicCandidate {
                    alpha: p.alpha,
                    index: p.index,
                    branch: l,
                    width: w,
                });
            }
        }
    }
    let mut avoided_crossings = detect_avoided_crossings(&tb, f64::INFINITY);
    for ac in &mut avoided_crossings {
        ac.index = ok_index[ac.index];
    }
    Ok(TrappingReport {
        alphas: alphas.to_vec(),
        widths,
        points,
        broad_count,
        trapped_widths_slope,
        branch_slopes,
        bic_candidates,
        ordering,
        avoided_crossings,
        flagged,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bic {
    pub alpha: f64,
    /// Position in the sorted spectrum at this `α`.
    pub index: usize,
    pub energy: f64,
    pub width: f64,
    /// Protected by the supplied symmetry: width exactly zero.
    pub certified: bool,
}

/// Orthonormal real basis of the parity sector `sign` of an involution.
fn sector_basis(perm: &[usize], sign: f64) -> Vec<Vec<f64>> {
    let n = perm.len();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut basis = Vec::new();
    for i in 0..n {
        let j = perm[i];
        if j == i {
            if sign > 0.0 {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                basis.push(e);
            }
        } else if i < j {
            let mut e = vec![0.0; n];
            e[i] = h;
            e[j] = sign * h;
            basis.push(e);
        }
    }
    basis
}

fn check_permutation(perm: &[usize], n: usize) -> Result<(), EffectiveError> {
    if perm.len() != n {
        return Err(EffectiveError::InvalidPermutation(format!("length {} for {n} levels", perm.len())));
    }
    let mut seen = vec![false; n];
    for &j in perm {
        if j >= n || seen[j] {
            return Err(EffectiveError::InvalidPermutation(format!("{perm:?} is not a permutation")));
        }
        seen[j] = true;
    }
    if (0..n).any(|i| perm[perm[i]] != i) {
        return Err(EffectiveError::InvalidPermutation(format!("{perm:?} is not an involution")));
    }
    Ok(())
}

/// Zero-width states over the coupling grid. With an involutive level
/// permutation `P` that commutes with `H_B` and maps every coupling vector
/// to `±` itself (one common sign), the opposite-parity sector never
/// couples to the channels and its states are reported with width `0.0`.
/// Otherwise states with `Γ < 1e-10 · max Γ` are returned.
pub fn find_bics(eh: &EffectiveHamiltonian, alphas: &[f64], symmetry: Option<&[usize]>) -> Result<Vec<Bic>, EffectiveError> {
    check_grid(alphas)?;
    let n = eh.levels();
    if let Some(perm) = symmetry {
        check_permutation(perm, n)?;
        let mut deviation = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                deviation = deviation.max((eh.h_b[perm[i]][perm[j]] - eh.h_b[i][j]).abs());
            }
        }
        if deviation > COMMUTATOR_TOL {
            return Err(EffectiveError::SymmetryViolation { deviation });
        }
        let parity = |s: f64| (0..n).all(|i| (0..eh.channels()).all(|c| (eh.v[perm[i]][c] - s * eh.v[i][c]).abs() <= COMMUTATOR_TOL));
        let coupled = if parity(1.0) {
            Some(1.0)
        } else if parity(-1.0) {
            Some(-1.0)
        } else {
            None
        };
        if let Some(s) = coupled {
            let basis = sector_basis(perm, -s);
            return certified_bics(eh, alphas, &basis);
        }
    }
    let report = coupling_sweep(eh, alphas)?;
    Ok(report
        .bic_candidates
        .iter()
        .map(|c| {
            let p = report.points.iter().find(|p| p.index == c.index).expect("candidate from a decomposed point");
            let z = p.eigenvalues[c.branch];
            let mut sorted = p.eigenvalues.clone();
            sorted.sort_by(eigenvalue_order);
            Bic {
                alpha: c.alpha,
                index: sorted.iter().position(|x| *x == z).unwrap_or(c.branch),
                energy: z.re,
                width: c.width,
                certified: false,
            }
        })
        .collect())
}

fn certified_bics(eh: &EffectiveHamiltonian, alphas: &[f64], basis: &[Vec<f64>]) -> Result<Vec<Bic>, EffectiveError> {
    if basis.is_empty() {
        return Ok(Vec::new());
    }
    let m = basis.len();
    let n = eh.levels();
    let mut block = ComplexMatrix::zeros(m).map_err(SpectralError::from)?;
    for a in 0..m {
        for b in 0..m {
            let mut x = 0.0;
            for i in 0..n {
                for j in 0..n {
                    x += basis[a][i] * eh.h_b[i][j] * basis[b][j];
                }
            }
            block[(a, b)] = Complex64::new(x, 0.0);
        }
    }
    let energies: Vec<f64> = eigendecompose(&block)?.values().iter().map(|z| z.re).collect();
    let mut out = Vec::new();
    for &alpha in alphas {
        let z = eigendecompose(&eh.clone().with_alpha(alpha)?.assemble())?.values();
        for &e in &energies {
            let index = (0..z.len())
                .min_by(|&a, &b| (z[a] - e).norm().total_cmp(&(z[b] - e).norm()))
                .expect("non-empty spectrum");
            out.push(Bic {
                alpha,
                index,
                energy: e,
                width: 0.0,
                certified: true,
            });
        }
    }
    Ok(out)
}
