use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Node, ParamFamily, Tracker, TrajectoryError};
use crate::matrix::inner;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpOptions {
    pub max_iterations: usize,
    /// Relative finite-difference step.
    pub fd_step: f64,
    pub max_halvings: usize,
    /// Residual at which iteration stops.
    pub tol: f64,
    /// Largest residual still reported as an EP.
    pub accept: f64,
}

impl Default for EpOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            fd_step: 1e-6,
            max_halvings: 30,
            tol: 1e-10,
            accept: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpResult {
    pub location: Vec<f64>,
    /// `|D|` at `location`.
    pub residual: f64,
    pub iterations: usize,
}

/// `D = (a - d)² + 4bc` for 2×2 families; above that, `(z_λ - z_μ)²` of the
/// closest eigenvalue pair.
pub fn ep_function(f: &ParamFamily, p: &[f64]) -> Result<Complex64, TrajectoryError> {
    if f.dim() == 2 {
        let m = f.evaluate(p)?;
        let diff = m[(0, 0)] - m[(1, 1)];
        return Ok(diff * diff + 4.0 * m[(0, 1)] * m[(1, 0)]);
    }
    if f.dim() < 2 {
        return Err(TrajectoryError::InvalidArgument("EP search needs dim >= 2".into()));
    }
    let z = f.eigensystem(p)?.values();
    let mut best = Complex64::new(f64::INFINITY, 0.0);
    for i in 0..z.len() {
        for j in i + 1..z.len() {
            let d = z[i] - z[j];
            if d.norm() < best.norm() {
                best = d;
            }
        }
    }
    Ok(best * best)
}

fn jacobian(f: &ParamFamily, p: &[f64], rel: f64) -> Result<[[f64; 2]; 2], TrajectoryError> {
    let mut j = [[0.0; 2]; 2];
    for i in 0..2 {
        let h = rel * p[i].abs().max(1.0);
        let mut plus = p.to_vec();
        let mut minus = p.to_vec();
        plus[i] += h;
        minus[i] -= h;
        let d = (ep_function(f, &plus)? - ep_function(f, &minus)?) / (2.0 * h);
        j[0][i] = d.re;
        j[1][i] = d.im;
    }
    Ok(j)
}

/// Newton step `-J⁺F`; falls back to the rank-1 pseudo-inverse when `J`
/// is numerically singular.
fn newton_step(j: &[[f64; 2]; 2], fval: [f64; 2]) -> Option<[f64; 2]> {
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let fro2 = j.iter().flatten().map(|x| x * x).sum::<f64>();
    if fro2 == 0.0 {
        return None;
    }
    if det.abs() > 1e-12 * fro2 {
        let dx = -(j[1][1] * fval[0] - j[0][1] * fval[1]) / det;
        let dy = -(-j[1][0] * fval[0] + j[0][0] * fval[1]) / det;
        return Some([dx, dy]);
    }
    // dominant right singular vector from JᵀJ
    let a = j[0][0] * j[0][0] + j[1][0] * j[1][0];
    let b = j[0][0] * j[0][1] + j[1][0] * j[1][1];
    let c = j[0][1] * j[0][1] + j[1][1] * j[1][1];
    let lmax = 0.5 * (a + c) + (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let v = if b.abs() > 0.0 {
        let (x, y) = (b, lmax - a);
        let n = (x * x + y * y).sqrt();
        [x / n, y / n]
    } else if a >= c {
        [1.0, 0.0]
    } else {
        [0.0, 1.0]
    };
    let jv = [j[0][0] * v[0] + j[0][1] * v[1], j[1][0] * v[0] + j[1][1] * v[1]];
    let s2 = jv[0] * jv[0] + jv[1] * jv[1];
    if s2 == 0.0 {
        return None;
    }
    let k = -(jv[0] * fval[0] + jv[1] * fval[1]) / s2;
    Some([k * v[0], k * v[1]])
}

/// Damped Newton on `Re D = Im D = 0` over a two-parameter family.
pub fn find_ep(f: &ParamFamily, seed: &[f64], opts: &EpOptions) -> Result<EpResult, TrajectoryError> {
    if f.params() != 2 || seed.len() != 2 {
        return Err(TrajectoryError::InvalidArgument(
            "EP search needs a two-parameter family and a two-component seed".into(),
        ));
    }
    let mut p = seed.to_vec();
    let mut d = ep_function(f, &p)?;
    let mut iterations = 0;
    let mut stalled = false;
    while d.norm() > opts.tol {
        if iterations == opts.max_iterations {
            break;
        }
        iterations += 1;
        let j = jacobian(f, &p, opts.fd_step)?;
        let Some(step) = newton_step(&j, [d.re, d.im]) else {
            stalled = true;
            break;
        };
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial = vec![p[0] + t * step[0], p[1] + t * step[1]];
            if let Ok(dt) = ep_function(f, &trial) {
                if dt.norm() < d.norm() {
                    accepted = Some((trial, dt));
                    break;
                }
            }
            t *= 0.5;
        }
        match accepted {
            Some((trial, dt)) => {
                p = trial;
                d = dt;
            }
            None => {
                stalled = true;
                break;
            }
        }
    }
    let residual = d.norm();
    if residual <= opts.accept {
        return Ok(EpResult {
            location: p,
            residual,
            iterations,
        });
    }
    if stalled {
        Err(TrajectoryError::NotAnEp {
            location: p,
            residual,
            iterations,
        })
    } else {
        Err(TrajectoryError::NoConvergence {
            location: p,
            residual,
            iterations,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopRecord {
    pub loops: usize,
    /// Branch `λ` ends on the initial eigenpair `permutation[λ]`.
    pub permutation: Vec<usize>,
    /// `⟨ψ_initial(permutation[λ])|φ_final(λ)⟩`.
    pub overlaps: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monodromy {
    pub center: Vec<f64>,
    pub radius: f64,
    pub steps: usize,
    /// After all loops.
    pub permutation: Vec<usize>,
    pub overlaps: Vec<Complex64>,
    /// One record per completed loop.
    pub per_loop: Vec<LoopRecord>,
}

fn min_gap(z: &[Complex64]) -> f64 {
    let mut g = f64::INFINITY;
    for i in 0..z.len() {
        for j in i + 1..z.len() {
            g = g.min((z[i] - z[j]).norm());
        }
    }
    g
}

fn record(start: &Node, cur: &Node, loops: usize) -> LoopRecord {
    let n = start.state.values.len();
    let mut permutation = Vec::with_capacity(n);
    let mut overlaps = Vec::with_capacity(n);
    for l in 0..n {
        let z = cur.state.values[l];
        let m = (0..n)
            .min_by(|&a, &b| {
                (start.state.values[a] - z)
                    .norm()
                    .total_cmp(&(start.state.values[b] - z).norm())
            })
            .expect("non-empty spectrum");
        permutation.push(m);
        overlaps.push(inner(&start.state.left[m], &cur.state.right[l]));
    }
    LoopRecord {
        loops,
        permutation,
        overlaps,
    }
}

/// Transports all eigenpairs around `loops` turns of a circle with `steps`
/// points per turn, starting at angle 0 and running counter-clockwise.
pub fn encircle_ep(
    f: &ParamFamily,
    center: &[f64],
    radius: f64,
    steps: usize,
    loops: usize,
) -> Result<Monodromy, TrajectoryError> {
    if f.params() != 2 || center.len() != 2 {
        return Err(TrajectoryError::InvalidArgument(
            "encircling needs a two-parameter family and a two-component center".into(),
        ));
    }
    if steps < 64 {
        return Err(TrajectoryError::InvalidArgument(format!("need at least 64 steps per loop, got {steps}")));
    }
    if loops == 0 {
        return Err(TrajectoryError::InvalidArgument("need at least one loop".into()));
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(TrajectoryError::RadiusTooSmall {
            step: 0,
            cost: 0.0,
            gap: radius,
        });
    }
    let (cx, cy) = (center[0], center[1]);
    let per = steps as f64;
    let path = move |t: f64| -> Vec<f64> {
        let theta = 2.0 * PI * t.rem_euclid(per) / per;
        vec![cx + radius * theta.cos(), cy + radius * theta.sin()]
    };
    let mut tracker = Tracker::new(f, &path);
    let start = tracker.start(0.0)?;
    let mut before: Option<Node> = None;
    let mut prev = start.clone();
    let mut per_loop = Vec::with_capacity(loops);
    for j in 1..=steps * loops {
        let t = j as f64;
        let (p, state) = tracker.raw(t)?;
        let out = tracker.advance(&prev, before.as_ref(), t, p, state, 0)?;
        if out.ambiguous {
            return Err(TrajectoryError::AmbiguousMatching { step: j - 1 });
        }
        let cost: f64 = prev
            .state
            .values
            .iter()
            .zip(&out.node.state.values)
            .map(|(a, b)| (a - b).norm())
            .sum();
        let gap = min_gap(&out.node.state.values).min(min_gap(&prev.state.values));
        if cost > 0.5 * gap {
            return Err(TrajectoryError::RadiusTooSmall { step: j - 1, cost, gap });
        }
        before = Some(std::mem::replace(&mut prev, out.node));
        if j % steps == 0 {
            per_loop.push(record(&start, &prev, j / steps));
        }
    }
    let last = per_loop.last().expect("at least one loop").clone();
    Ok(Monodromy {
        center: center.to_vec(),
        radius,
        steps,
        permutation: last.permutation,
        overlaps: last.overlaps,
        per_loop,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pt_dimer::PtDimer;
    use crate::spectral::phase_rigidity;
    use crate::two_level::TwoLevelSystem;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn canonical() -> ParamFamily {
        ParamFamily::new(2, 2, "eps1 = X - iY, eps2 = 0, omega = 0.5", |p| {
            TwoLevelSystem::new(c(p[0], -p[1]), c(0.0, 0.0), c(0.5, 0.0)).matrix()
        })
    }

    #[test]
    fn locates_canonical_ep() {
        let f = canonical();
        let ep = find_ep(&f, &[0.2, 0.8], &EpOptions::default()).unwrap();
        assert!(ep.residual <= 1e-10);
        assert!(ep.location[0].abs() < 1e-8 && (ep.location[1] - 1.0).abs() < 1e-8);
        let s = TwoLevelSystem::new(c(ep.location[0], -ep.location[1]), c(0.0, 0.0), c(0.5, 0.0));
        let ratio = (s.eps1 - s.eps2) / (2.0 * s.omega);
        assert!((ratio - c(0.0, 1.0)).norm().min((ratio + c(0.0, 1.0)).norm()) <= 1e-8);
    }

    #[test]
    fn locates_pt_threshold_curve() {
        let f = ParamFamily::new(2, 2, "PT dimer over (gamma, b)", |p| {
            PtDimer::new(0.0, p[0].abs(), c(p[1], 0.0)).unwrap().matrix()
        });
        let ep = find_ep(&f, &[1.8, 1.0], &EpOptions::default()).unwrap();
        assert!((ep.location[0] - 2.0 * ep.location[1]).abs() <= 1e-8);
    }

    #[test]
    fn three_level_ep_collapses_rigidity() {
        // two levels coupled to one channel through a third, tuned by (X, Y)
        let f = ParamFamily::new(2, 3, "three-level, one channel", |p| {
            let h = crate::matrix::ComplexMatrix::from_rows(&[
                vec![c(p[0], -p[1]), c(0.5, 0.0), c(0.1, 0.0)],
                vec![c(0.5, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
                vec![c(0.1, 0.0), c(0.0, 0.0), c(3.0, 0.0)],
            ])
            .unwrap();
            h
        });
        let ep = find_ep(&f, &[0.1, 0.9], &EpOptions::default()).unwrap();
        assert!(ep.residual <= 1e-10);
        let p = [ep.location[0] + 1e-8, ep.location[1]];
        let r = phase_rigidity(&f.eigensystem(&p).unwrap());
        let rmin = r.iter().cloned().fold(1.0, f64::min);
        assert!(rmin < 1e-3, "r = {r:?}");
    }

    #[test]
    fn no_ep_for_real_parameters() {
        let f = ParamFamily::new(2, 2, "real two-level", |p| {
            TwoLevelSystem::new(c(p[0], 0.0), c(-p[0], 0.0), c(0.5 + p[1] * p[1], 0.0)).matrix()
        });
        let err = find_ep(&f, &[0.3, 0.2], &EpOptions::default()).unwrap_err();
        assert!(matches!(err, TrajectoryError::NotAnEp { .. } | TrajectoryError::NoConvergence { .. }));
    }

    #[test]
    fn monodromy_of_canonical_ep() {
        let f = canonical();
        let m = encircle_ep(&f, &[0.0, 1.0], 0.3, 128, 4).unwrap();
        assert_eq!(m.per_loop[0].permutation, vec![1, 0]);
        assert_eq!(m.per_loop[1].permutation, vec![0, 1]);
        assert_eq!(m.per_loop[2].permutation, vec![1, 0]);
        assert_eq!(m.per_loop[3].permutation, vec![0, 1]);
        for o in &m.per_loop[1].overlaps {
            assert!((o + 1.0).norm() < 1e-6, "{o}");
        }
        for o in &m.per_loop[3].overlaps {
            assert!((o - 1.0).norm() < 1e-6, "{o}");
        }
    }

    #[test]
    fn loop_composition_and_step_doubling() {
        let f = canonical();
        let one = encircle_ep(&f, &[0.0, 1.0], 0.3, 64, 1).unwrap();
        for k in 1..=3 {
            let many = encircle_ep(&f, &[0.0, 1.0], 0.3, 64, 2 * k).unwrap();
            let mut composed: Vec<usize> = (0..2).collect();
            for _ in 0..2 * k {
                composed = composed.iter().map(|&i| one.permutation[i]).collect();
            }
            assert_eq!(many.permutation, composed);
        }
        let fine = encircle_ep(&f, &[0.0, 1.0], 0.3, 256, 2).unwrap();
        let coarse = encircle_ep(&f, &[0.0, 1.0], 0.3, 128, 2).unwrap();
        assert_eq!(fine.permutation, coarse.permutation);
        for (a, b) in fine.overlaps.iter().zip(&coarse.overlaps) {
            assert!((a - b).norm() < 1e-6);
        }
    }

    #[test]
    fn loop_without_ep_is_trivial() {
        let f = canonical();
        let m = encircle_ep(&f, &[1.0, 0.0], 0.3, 64, 1).unwrap();
        assert_eq!(m.permutation, vec![0, 1]);
        for o in &m.overlaps {
            assert!((o - 1.0).norm() < 1e-6);
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let f = canonical();
        assert!(matches!(
            encircle_ep(&f, &[0.0, 1.0], 0.3, 32, 1),
            Err(TrajectoryError::InvalidArgument(_))
        ));
        assert!(matches!(
            encircle_ep(&f, &[0.0, 1.0], 0.0, 64, 1),
            Err(TrajectoryError::RadiusTooSmall { .. })
        ));
    }
}
