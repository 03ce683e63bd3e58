//! Continuity-labeled eigenvalue trajectories over one- or two-parameter
//! families, avoided-crossing detection, EP location and EP encircling.
//!
//! Consecutive eigenvalue sets are matched by the assignment minimizing
//! `Σ|z_ref,λ - z_new,μ|`, where `z_ref` is the previous point linearly
//! extrapolated along the path once two points are known. Extrapolation
//! keeps the labels of decoupled levels through exact crossings even when
//! the grid straddles the crossing. Steps whose best and second-best
//! assignments are closer than [`AMBIGUITY_TOL`] are bisected.

pub mod assignment;
mod ep;

pub use ep::{encircle_ep, ep_function, find_ep, EpOptions, EpResult, LoopRecord, Monodromy};

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::{inner, ComplexMatrix};
use crate::spectral::{eigendecompose, phase_rigidity, Eigensystem, SpectralError};

pub const AMBIGUITY_TOL: f64 = 1e-12;
pub const MAX_REFINEMENTS: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrajectoryError {
    #[error("grid needs at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("parameter vector has {got} components, family expects {expected}")]
    ParameterCount { expected: usize, got: usize },
    #[error("family returned a {got}x{got} matrix, expected {expected}x{expected}")]
    DimensionChanged { expected: usize, got: usize },
    #[error("eigendecomposition failed at {point:?}: {source}")]
    Spectral { point: Vec<f64>, source: SpectralError },
    #[error("assignment between steps {step} and {} stays ambiguous after {MAX_REFINEMENTS} refinements", step + 1)]
    AmbiguousMatching { step: usize },
    #[error("step {step}: matching cost {cost:.3e} exceeds half the local gap {gap:.3e}")]
    RadiusTooSmall { step: usize, cost: f64, gap: f64 },
    #[error("EP search did not converge after {iterations} iterations, best residual {residual:.3e} at {location:?}")]
    NoConvergence { location: Vec<f64>, residual: f64, iterations: usize },
    #[error("converged point {location:?} has residual {residual:.3e}, not an EP")]
    NotAnEp { location: Vec<f64>, residual: f64, iterations: usize },
    #[error("{0}")]
    InvalidArgument(String),
}

type Evaluator = dyn Fn(&[f64]) -> ComplexMatrix + Send + Sync;

/// A matrix-valued map of one or two real parameters.
pub struct ParamFamily {
    params: usize,
    dim: usize,
    description: String,
    evaluator: Box<Evaluator>,
}

impl ParamFamily {
    pub fn new<F>(params: usize, dim: usize, description: impl Into<String>, evaluator: F) -> Self
    where
        F: Fn(&[f64]) -> ComplexMatrix + Send + Sync + 'static,
    {
        Self {
            params,
            dim,
            description: description.into(),
            evaluator: Box::new(evaluator),
        }
    }

    pub fn params(&self) -> usize {
        self.params
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn evaluate(&self, p: &[f64]) -> Result<ComplexMatrix, TrajectoryError> {
        if p.len() != self.params {
            return Err(TrajectoryError::ParameterCount {
                expected: self.params,
                got: p.len(),
            });
        }
        let m = (self.evaluator)(p);
        if m.dim() != self.dim {
            return Err(TrajectoryError::DimensionChanged {
                expected: self.dim,
                got: m.dim(),
            });
        }
        Ok(m)
    }

    pub fn eigensystem(&self, p: &[f64]) -> Result<Eigensystem, TrajectoryError> {
        let m = self.evaluate(p)?;
        eigendecompose(&m).map_err(|source| TrajectoryError::Spectral {
            point: p.to_vec(),
            source,
        })
    }
}

impl fmt::Debug for ParamFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParamFamily")
            .field("params", &self.params)
            .field("dim", &self.dim)
            .field("description", &self.description)
            .finish()
    }
}

/// Eigenpairs at one point, indexed by branch.
#[derive(Debug, Clone)]
pub(crate) struct State {
    pub values: Vec<Complex64>,
    pub right: Vec<Vec<Complex64>>,
    pub left: Vec<Vec<Complex64>>,
    pub rigidity: Vec<f64>,
    pub symmetric: bool,
}

impl State {
    pub fn from_eigensystem(es: &Eigensystem) -> Self {
        Self {
            values: es.values(),
            right: es.right_vectors.clone(),
            left: es.left_vectors.clone(),
            rigidity: phase_rigidity(es),
            symmetric: es.symmetric,
        }
    }

    fn permuted(&self, columns: &[usize]) -> Self {
        Self {
            values: columns.iter().map(|&j| self.values[j]).collect(),
            right: columns.iter().map(|&j| self.right[j].clone()).collect(),
            left: columns.iter().map(|&j| self.left[j].clone()).collect(),
            rigidity: columns.iter().map(|&j| self.rigidity[j]).collect(),
            symmetric: self.symmetric,
        }
    }

    /// Parallel transport: rotate each pair so `Re⟨φ_prev|φ⟩` is maximal.
    /// Complex symmetric pairs only admit a sign.
    fn align_to(&mut self, prev: &State) {
        for l in 0..self.values.len() {
            let o = inner(&prev.right[l], &self.right[l]);
            if o.norm() == 0.0 {
                continue;
            }
            let phase = if self.symmetric {
                if o.re < 0.0 {
                    Complex64::new(-1.0, 0.0)
                } else {
                    continue;
                }
            } else {
                o.conj() / o.norm()
            };
            for x in self.right[l].iter_mut() {
                *x *= phase;
            }
            // ψ is a ket whose bra is the left vector, so it takes the same
            // phase to keep ⟨ψ|φ⟩ unchanged
            for x in self.left[l].iter_mut() {
                *x *= phase;
            }
        }
    }
}

/// Matching between consecutive points along a path `t -> p(t)`.
pub(crate) struct Tracker<'a> {
    pub family: &'a ParamFamily,
    pub path: &'a dyn Fn(f64) -> Vec<f64>,
    pub evaluations: usize,
}

/// Labeled state with the point it was taken at.
#[derive(Debug, Clone)]
pub(crate) struct Node {
    pub t: f64,
    pub p: Vec<f64>,
    pub state: State,
}

pub(crate) struct StepOutcome {
    pub node: Node,
    pub ambiguous: bool,
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn cost_matrix(reference: &[Complex64], new: &[Complex64]) -> Vec<Vec<f64>> {
    reference
        .iter()
        .map(|r| new.iter().map(|z| (r - z).norm()).collect())
        .collect()
}

/// Best assignment and, when a materially different one is within
/// [`AMBIGUITY_TOL`] of it, that competitor.
fn best_assignment(reference: &[Complex64], new: &[Complex64]) -> (Vec<usize>, Option<Vec<usize>>) {
    let cost = cost_matrix(reference, new);
    let best = assignment::solve(&cost);
    if new.len() > assignment::EXACT_LIMIT {
        return (best.columns, None);
    }
    let scale = new.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let rival = match assignment::second_best(&cost, &best) {
        Some(alt)
            if alt.cost - best.cost < AMBIGUITY_TOL * scale
                && best
                    .columns
                    .iter()
                    .zip(&alt.columns)
                    .any(|(&a, &b)| (new[a] - new[b]).norm() > AMBIGUITY_TOL * scale) =>
        {
            Some(alt.columns)
        }
        _ => None,
    };
    (best.columns, rival)
}

/// Pairs whose order in `prev` is reversed by `columns` (new states are
/// indexed in sorted order).
fn inversions(prev: &[Complex64], columns: &[usize]) -> usize {
    let n = columns.len();
    let mut count = 0;
    for i in 0..n {
        for j in 0..n {
            let before = crate::spectral::eigenvalue_order(&prev[i], &prev[j]).then(i.cmp(&j));
            if before.is_lt() && columns[i] > columns[j] {
                count += 1;
            }
        }
    }
    count
}

fn extrapolate(prev: &Node, before: Option<&Node>, p_new: &[f64]) -> Vec<Complex64> {
    match before {
        Some(b) => {
            let h0 = distance(&b.p, &prev.p);
            if h0 == 0.0 {
                return prev.state.values.clone();
            }
            let ratio = distance(&prev.p, p_new) / h0;
            prev.state
                .values
                .iter()
                .zip(&b.state.values)
                .map(|(z1, z0)| z1 + (z1 - z0) * ratio)
                .collect()
        }
        None => prev.state.values.clone(),
    }
}

impl<'a> Tracker<'a> {
    pub fn new(family: &'a ParamFamily, path: &'a dyn Fn(f64) -> Vec<f64>) -> Self {
        Self {
            family,
            path,
            evaluations: 0,
        }
    }

    pub fn raw(&mut self, t: f64) -> Result<(Vec<f64>, State), TrajectoryError> {
        let p = (self.path)(t);
        let es = self.family.eigensystem(&p)?;
        self.evaluations += 1;
        Ok((p, State::from_eigensystem(&es)))
    }

    /// Starting node with branches in sorted eigenvalue order.
    pub fn start(&mut self, t: f64) -> Result<Node, TrajectoryError> {
        let (p, state) = self.raw(t)?;
        Ok(Node { t, p, state })
    }

    /// Labels the unlabeled `new` state at `t_new` relative to `prev`,
    /// bisecting while the assignment stays ambiguous.
    pub fn advance(
        &mut self,
        prev: &Node,
        before: Option<&Node>,
        t_new: f64,
        p_new: Vec<f64>,
        new: State,
        depth: usize,
    ) -> Result<StepOutcome, TrajectoryError> {
        let reference = extrapolate(prev, before, &p_new);
        let (best, rival) = best_assignment(&reference, &new.values);
        let ambiguous = rival.is_some();
        if !ambiguous || depth >= MAX_REFINEMENTS {
            // an unresolved tie (a branch point) keeps the previous order
            let columns = match rival {
                Some(alt) if inversions(&prev.state.values, &alt) < inversions(&prev.state.values, &best) => alt,
                _ => best,
            };
            let mut state = new.permuted(&columns);
            state.align_to(&prev.state);
            return Ok(StepOutcome {
                node: Node {
                    t: t_new,
                    p: p_new,
                    state,
                },
                ambiguous,
            });
        }
        let t_mid = 0.5 * (prev.t + t_new);
        let (p_mid, mid) = self.raw(t_mid)?;
        let first = self.advance(prev, before, t_mid, p_mid, mid, depth + 1)?;
        let second = self.advance(&first.node, Some(prev), t_new, p_new, new, depth + 1)?;
        Ok(StepOutcome {
            node: second.node,
            ambiguous: first.ambiguous || second.ambiguous,
        })
    }
}

/// Labeled eigenvalue trajectories on a parameter grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryBundle {
    pub grid: Vec<Vec<f64>>,
    /// `branches[λ][k] = z_λ(x_k)`.
    pub branches: Vec<Vec<Complex64>>,
    /// `vectors[λ][k]`: transported right eigenvector, when kept.
    pub vectors: Option<Vec<Vec<Vec<Complex64>>>>,
    /// `rigidity[λ][k] = r_λ(x_k)`.
    pub rigidity: Vec<Vec<f64>>,
    /// `Σ_λ |z_λ(x_{k+1}) - z_λ(x_k)|` per step.
    pub matching_cost: Vec<f64>,
    /// Steps `k -> k+1` whose labeling stayed ambiguous after refinement.
    pub flagged: Vec<usize>,
}

impl TrajectoryBundle {
    pub fn dim(&self) -> usize {
        self.branches.len()
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Eigenvalues at grid point `k` in branch order.
    pub fn values_at(&self, k: usize) -> Vec<Complex64> {
        self.branches.iter().map(|b| b[k]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepOptions {
    pub keep_vectors: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { keep_vectors: true }
    }
}

/// Sweep with eigenvectors kept.
pub fn sweep(f: &ParamFamily, grid: &[Vec<f64>]) -> Result<TrajectoryBundle, TrajectoryError> {
    sweep_with(f, grid, SweepOptions::default())
}

pub fn sweep_with(f: &ParamFamily, grid: &[Vec<f64>], opts: SweepOptions) -> Result<TrajectoryBundle, TrajectoryError> {
    if grid.len() < 2 {
        return Err(TrajectoryError::TooFewPoints {
            needed: 2,
            got: grid.len(),
        });
    }
    // decompositions are independent of the labeling
    let mut raw = Vec::with_capacity(grid.len());
    for p in grid {
        let es = f.eigensystem(p)?;
        raw.push(State::from_eigensystem(&es));
    }
    track_states(f, grid, raw, opts)
}

/// Labels precomputed decompositions `raw[k]` taken at `grid[k]`.
pub(crate) fn track_states(
    f: &ParamFamily,
    grid: &[Vec<f64>],
    raw: Vec<State>,
    opts: SweepOptions,
) -> Result<TrajectoryBundle, TrajectoryError> {
    if grid.len() < 2 || raw.len() != grid.len() {
        return Err(TrajectoryError::TooFewPoints {
            needed: 2,
            got: grid.len().min(raw.len()),
        });
    }
    let path = |t: f64| -> Vec<f64> {
        let k = (t.floor() as usize).min(grid.len() - 2);
        let s = t - k as f64;
        if s == 0.0 {
            return grid[k].clone();
        }
        if s == 1.0 {
            return grid[k + 1].clone();
        }
        grid[k].iter().zip(&grid[k + 1]).map(|(a, b)| a + s * (b - a)).collect()
    };
    let mut tracker = Tracker::new(f, &path);
    let mut nodes: Vec<Node> = Vec::with_capacity(grid.len());
    let mut flagged = Vec::new();
    let mut raw = raw.into_iter();
    nodes.push(Node {
        t: 0.0,
        p: grid[0].clone(),
        state: raw.next().expect("grid has at least two points"),
    });
    for (k, state) in raw.enumerate() {
        let out = {
            let prev = &nodes[k];
            let before = if k > 0 { Some(&nodes[k - 1]) } else { None };
            tracker.advance(prev, before, (k + 1) as f64, grid[k + 1].clone(), state, 0)?
        };
        if out.ambiguous {
            flagged.push(k);
        }
        nodes.push(out.node);
    }
    Ok(bundle_from_nodes(grid.to_vec(), &nodes, flagged, opts.keep_vectors))
}

fn bundle_from_nodes(grid: Vec<Vec<f64>>, nodes: &[Node], flagged: Vec<usize>, keep_vectors: bool) -> TrajectoryBundle {
    let dim = nodes[0].state.values.len();
    let branches: Vec<Vec<Complex64>> = (0..dim).map(|l| nodes.iter().map(|n| n.state.values[l]).collect()).collect();
    let rigidity = (0..dim).map(|l| nodes.iter().map(|n| n.state.rigidity[l]).collect()).collect();
    let vectors = keep_vectors.then(|| {
        (0..dim)
            .map(|l| nodes.iter().map(|n| n.state.right[l].clone()).collect())
            .collect()
    });
    let matching_cost = nodes
        .windows(2)
        .map(|w| {
            w[0].state
                .values
                .iter()
                .zip(&w[1].state.values)
                .map(|(a, b)| (a - b).norm())
                .sum()
        })
        .collect();
    TrajectoryBundle {
        grid,
        branches,
        vectors,
        rigidity,
        matching_cost,
        flagged,
    }
}

/// One-parameter grid helper: `[[x0], [x1], ...]`.
pub fn scalar_grid(xs: &[f64]) -> Vec<Vec<f64>> {
    xs.iter().map(|&x| vec![x]).collect()
}

pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..count)
            .map(|i| {
                if i == count - 1 {
                    stop
                } else {
                    start + (stop - start) * i as f64 / (count - 1) as f64
                }
            })
            .collect(),
    }
}

pub fn logspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    let (a, b) = (start.log10(), stop.log10());
    let mut out: Vec<f64> = linspace(a, b, count).into_iter().map(|e| 10f64.powf(e)).collect();
    if let Some(first) = out.first_mut() {
        *first = start;
    }
    if let Some(last) = out.last_mut() {
        *last = stop;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvoidedCrossing {
    pub pair: (usize, usize),
    /// Grid index of the gap minimum.
    pub index: usize,
    pub x_min: Vec<f64>,
    pub gap_min: f64,
    /// Smallest rigidity of the pair within two grid steps of the minimum.
    pub rigidity_dip: f64,
}

/// Distance from the origin to the segment `[a, b]`.
fn segment_distance(a: Complex64, b: Complex64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return a.norm();
    }
    let t = (-(a.conj() * d).re / len2).clamp(0.0, 1.0);
    (a + d * t).norm()
}

/// Interior local minima of `|z_λ - z_μ|` below `threshold`. Minima with a
/// vanishing gap are coalescences, not avoided crossings, and are skipped,
/// as are minima where the branch difference passes linearly through zero
/// between grid points (true crossings the grid straddles).
pub fn detect_avoided_crossings(tb: &TrajectoryBundle, threshold: f64) -> Vec<AvoidedCrossing> {
    let n = tb.len();
    let mut out = Vec::new();
    if n < 3 {
        return out;
    }
    let scale = tb
        .branches
        .iter()
        .flatten()
        .map(|z| z.norm())
        .fold(1.0, f64::max);
    for l in 0..tb.dim() {
        for m in l + 1..tb.dim() {
            let gap: Vec<f64> = (0..n).map(|k| (tb.branches[l][k] - tb.branches[m][k]).norm()).collect();
            let mut k = 1;
            while k + 1 < n {
                // plateaus count once, at their first point
                let mut end = k;
                while end + 1 < n && gap[end + 1] == gap[k] {
                    end += 1;
                }
                if end + 1 < n && gap[k] < gap[k - 1] && gap[k] < gap[end + 1] && gap[k] < threshold {
                    let d = |j: usize| tb.branches[l][j] - tb.branches[m][j];
                    let through_zero = segment_distance(d(k - 1), d(k)).min(segment_distance(d(end), d(end + 1)))
                        <= 1e-9 * (gap[k - 1] + gap[end + 1]);
                    if gap[k] > 1e-8 * scale && !through_zero {
                        let lo = k.saturating_sub(2);
                        let hi = (end + 2).min(n - 1);
                        let dip = (lo..=hi)
                            .map(|j| tb.rigidity[l][j].min(tb.rigidity[m][j]))
                            .fold(f64::INFINITY, f64::min);
                        out.push(AvoidedCrossing {
                            pair: (l, m),
                            index: k,
                            x_min: tb.grid[k].clone(),
                            gap_min: gap[k],
                            rigidity_dip: dip,
                        });
                    }
                }
                k = end + 1;
            }
        }
    }
    out.sort_by(|a, b| a.index.cmp(&b.index).then(a.pair.cmp(&b.pair)));
    out
}
