//! Complex Schur decomposition: Householder reduction to upper Hessenberg
//! form followed by implicitly shifted single-shift QR sweeps, then
//! triangular back substitution for right and left eigenvectors.

use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `A = Z T Zᴴ` with `T` upper triangular and `Z` unitary, both row-major.
pub(crate) struct Schur {
    pub n: usize,
    pub t: Vec<Complex64>,
    pub z: Vec<Complex64>,
    pub sweeps: usize,
}

#[derive(Debug)]
pub(crate) struct NoConvergence {
    pub sweeps: usize,
    pub unconverged: usize,
}

fn cabs1(z: Complex64) -> f64 {
    z.re.abs() + z.im.abs()
}

/// Givens rotation `[c s; -s̄ c]` mapping `(x, y)` to `(r, 0)`.
fn givens(x: Complex64, y: Complex64) -> (f64, Complex64, Complex64) {
    let ax = x.norm();
    let ay = y.norm();
    if ay == 0.0 {
        return (1.0, ZERO, x);
    }
    if ax == 0.0 {
        return (0.0, ONE, y);
    }
    let r = ax.hypot(ay);
    let phase = x / ax;
    let c = ax / r;
    let s = phase * y.conj() / r;
    (c, s, phase * r)
}

fn hessenberg(n: usize, h: &mut [Complex64], z: &mut [Complex64]) {
    let mut v = vec![ZERO; n];
    for k in 0..n.saturating_sub(2) {
        let len = n - k - 1;
        let tail: f64 = (k + 2..n).map(|i| h[i * n + k].norm_sqr()).sum();
        if tail == 0.0 {
            continue;
        }
        let x0 = h[(k + 1) * n + k];
        let xnorm = (tail + x0.norm_sqr()).sqrt();
        let phase = if x0.norm() == 0.0 { ONE } else { x0 / x0.norm() };
        let alpha = -phase * xnorm;
        for i in 0..len {
            v[i] = h[(k + 1 + i) * n + k];
        }
        v[0] -= alpha;
        let vnorm = v[..len].iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        v[..len].iter_mut().for_each(|c| *c /= vnorm);

        // H <- P H on rows k+1.., P = I - 2 v vᴴ
        for col in k..n {
            let s: Complex64 = (0..len).map(|i| v[i].conj() * h[(k + 1 + i) * n + col]).sum();
            for i in 0..len {
                h[(k + 1 + i) * n + col] -= 2.0 * v[i] * s;
            }
        }
        // H <- H P and Z <- Z P on columns k+1..
        for m in [&mut *h, &mut *z] {
            for row in 0..n {
                let s: Complex64 = (0..len).map(|i| m[row * n + k + 1 + i] * v[i]).sum();
                for i in 0..len {
                    m[row * n + k + 1 + i] -= 2.0 * s * v[i].conj();
                }
            }
        }
        h[(k + 1) * n + k] = alpha;
        for i in k + 2..n {
            h[i * n + k] = ZERO;
        }
    }
}

/// Eigenvalue of the 2x2 block `[[a, b], [c, d]]` closest to `d`.
fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let half = (a - d) * 0.5;
    let root = (half * half + b * c).sqrt();
    let mean = (a + d) * 0.5;
    let s1 = mean + root;
    let s2 = mean - root;
    if (s1 - d).norm() <= (s2 - d).norm() {
        s1
    } else {
        s2
    }
}

pub(crate) fn schur(n: usize, a: &[Complex64]) -> Result<Schur, NoConvergence> {
    let mut h = a.to_vec();
    let mut z = vec![ZERO; n * n];
    for i in 0..n {
        z[i * n + i] = ONE;
    }
    hessenberg(n, &mut h, &mut z);

    let eps = f64::EPSILON;
    let cap = 100 * n;
    let mut sweeps = 0;
    let mut hi = n - 1;
    let mut its = 0usize;
    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let sub = cabs1(h[l * n + l - 1]);
            let mut tst = cabs1(h[(l - 1) * n + l - 1]) + cabs1(h[l * n + l]);
            if tst == 0.0 {
                if l >= 2 {
                    tst += h[(l - 1) * n + l - 2].re.abs();
                }
                if l + 1 < n {
                    tst += h[(l + 1) * n + l].re.abs();
                }
            }
            if sub <= eps * tst {
                break;
            }
            l -= 1;
        }
        if l > 0 {
            h[l * n + l - 1] = ZERO;
        }
        if l == hi {
            hi -= 1;
            its = 0;
            continue;
        }
        if sweeps >= cap {
            return Err(NoConvergence {
                sweeps,
                unconverged: hi + 1,
            });
        }
        sweeps += 1;
        its += 1;

        let shift = if its.is_multiple_of(10) {
            // exceptional shift breaks cycles
            h[hi * n + hi] + 0.75 * h[hi * n + hi - 1].norm()
        } else {
            wilkinson_shift(
                h[(hi - 1) * n + hi - 1],
                h[(hi - 1) * n + hi],
                h[hi * n + hi - 1],
                h[hi * n + hi],
            )
        };

        for k in l..hi {
            let (x, y) = if k == l {
                (h[l * n + l] - shift, h[(l + 1) * n + l])
            } else {
                (h[k * n + k - 1], h[(k + 1) * n + k - 1])
            };
            let (c, s, r) = givens(x, y);
            let start = if k == l { l } else { k - 1 };
            if k > l {
                h[k * n + k - 1] = r;
                h[(k + 1) * n + k - 1] = ZERO;
            }
            let first = if k == l { start } else { start + 1 };
            for j in first..n {
                let p = h[k * n + j];
                let q = h[(k + 1) * n + j];
                h[k * n + j] = c * p + s * q;
                h[(k + 1) * n + j] = -s.conj() * p + c * q;
            }
            let last = (k + 2).min(hi);
            for i in 0..=last {
                let p = h[i * n + k];
                let q = h[i * n + k + 1];
                h[i * n + k] = c * p + s.conj() * q;
                h[i * n + k + 1] = -s * p + c * q;
            }
            for i in 0..n {
                let p = z[i * n + k];
                let q = z[i * n + k + 1];
                z[i * n + k] = c * p + s.conj() * q;
                z[i * n + k + 1] = -s * p + c * q;
            }
        }
    }
    // strictly lower part is zero up to deflation round-off
    for i in 1..n {
        for j in 0..i {
            h[i * n + j] = ZERO;
        }
    }
    Ok(Schur {
        n,
        t: h,
        z,
        sweeps,
    })
}

impl Schur {
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        (0..self.n).map(|i| self.t[i * self.n + i]).collect()
    }

    fn smin(&self, lambda: Complex64) -> f64 {
        let tnorm = self.t.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        (f64::EPSILON * lambda.norm().max(tnorm)).max(f64::MIN_POSITIVE * 1e20)
    }

    /// Unit-norm right eigenvector for the k-th diagonal entry of `T`.
    pub fn right_vector(&self, k: usize) -> Vec<Complex64> {
        let n = self.n;
        let t = &self.t;
        let lambda = t[k * n + k];
        let smin = self.smin(lambda);
        let mut x = vec![ZERO; n];
        x[k] = ONE;
        for j in (0..k).rev() {
            let s: Complex64 = (j + 1..=k).map(|m| t[j * n + m] * x[m]).sum();
            let mut d = t[j * n + j] - lambda;
            if d.norm() < smin {
                d = Complex64::new(smin, 0.0);
            }
            x[j] = -s / d;
            rescale_if_large(&mut x[j..=k]);
        }
        let mut v: Vec<Complex64> = (0..n)
            .map(|i| (0..=k).map(|m| self.z[i * n + m] * x[m]).sum())
            .collect();
        normalize_unit(&mut v);
        v
    }

    /// Unit-norm ket `ψ` whose bra is the left eigenvector: `ψᴴ A = λ ψᴴ`.
    pub fn left_vector(&self, k: usize) -> Vec<Complex64> {
        let n = self.n;
        let t = &self.t;
        let lambda = t[k * n + k];
        let smin = self.smin(lambda);
        // uᵀ T = λ uᵀ with u_j = 0 for j < k
        let mut u = vec![ZERO; n];
        u[k] = ONE;
        for j in k + 1..n {
            let s: Complex64 = (k..j).map(|i| u[i] * t[i * n + j]).sum();
            let mut d = t[j * n + j] - lambda;
            if d.norm() < smin {
                d = Complex64::new(smin, 0.0);
            }
            u[j] = -s / d;
            rescale_if_large(&mut u[k..=j]);
        }
        let mut w: Vec<Complex64> = (0..n)
            .map(|i| (k..n).map(|m| self.z[i * n + m] * u[m].conj()).sum())
            .collect();
        normalize_unit(&mut w);
        w
    }
}

fn rescale_if_large(x: &mut [Complex64]) {
    let big = x.iter().map(|c| cabs1(*c)).fold(0.0, f64::max);
    if big > 1e150 {
        x.iter_mut().for_each(|c| *c /= big);
    }
}

pub(crate) fn normalize_unit(v: &mut [Complex64]) {
    let nrm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if nrm > 0.0 {
        v.iter_mut().for_each(|c| *c /= nrm);
    }
}
