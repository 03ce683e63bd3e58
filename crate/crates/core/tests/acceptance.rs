//! Acceptance gate: one line per criterion, non-zero exit if any fails.

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;

use ep_spectra::effective::{coupling_sweep, find_bics, EffectiveHamiltonian};
use ep_spectra::matrix::ComplexMatrix;
use ep_spectra::pt_dimer::{passive_eigenvalues, PtDimer};
use ep_spectra::rng::SplitMix64;
use ep_spectra::spectral::{eigendecompose, phase_rigidity};
use ep_spectra::trajectory::{encircle_ep, find_ep, linspace, logspace, scalar_grid, sweep, EpOptions, ParamFamily};
use ep_spectra::two_level::{eigenvalues2, eigenvector_overlap, TwoLevelSystem};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn random_c(rng: &mut SplitMix64, scale: f64) -> Complex64 {
    c(rng.uniform_in(-scale, scale), rng.uniform_in(-scale, scale))
}

fn canonical() -> ParamFamily {
    ParamFamily::new(2, 2, "eps1 = X - iY, eps2 = 0, omega = 0.5", |p| {
        TwoLevelSystem::new(c(p[0], -p[1]), c(0.0, 0.0), c(0.5, 0.0)).matrix()
    })
}

fn pt_family() -> ParamFamily {
    ParamFamily::new(2, 2, "PT dimer over (gamma, b)", |p| {
        ComplexMatrix::from_rows(&[vec![c(0.0, -0.5 * p[0]), c(p[1], 0.0)], vec![c(p[1], 0.0), c(0.0, 0.5 * p[0])]])
            .expect("2x2")
    })
}

fn closed_form_vs_numeric() -> Verdict {
    let mut rng = SplitMix64::new(1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let s = TwoLevelSystem::new(random_c(&mut rng, 2.0), random_c(&mut rng, 2.0), random_c(&mut rng, 1.0));
        let (ep, em) = eigenvalues2(&s);
        let es = match eigendecompose(&s.matrix()) {
            Ok(es) => es,
            Err(e) => return verdict(false, format!("eigendecompose failed: {e}")),
        };
        let z = es.values();
        let straight = (z[0] - ep).norm().max((z[1] - em).norm());
        let swapped = (z[0] - em).norm().max((z[1] - ep).norm());
        let scale = ep.norm().max(em.norm());
        worst = worst.max(straight.min(swapped) / scale);
    }
    verdict(worst <= 1e-10, format!("1000 systems, worst relative error {worst:.2e} (tol 1e-10)"))
}

fn crossing_condition() -> Verdict {
    let mut rng = SplitMix64::new(2);
    let dyadic = |rng: &mut SplitMix64| (rng.next_u64() % 4097) as f64 / 1024.0 - 2.0;
    let (mut gap, mut overlap) = (0.0f64, 1.0f64);
    let mut n = 0;
    while n < 100 {
        let eps2 = c(dyadic(&mut rng), dyadic(&mut rng));
        let omega = c(dyadic(&mut rng), dyadic(&mut rng));
        if omega.norm() < 1e-3 {
            continue;
        }
        n += 1;
        let s = TwoLevelSystem::new(eps2 + c(0.0, 2.0) * omega, eps2, omega);
        let (ep, em) = eigenvalues2(&s);
        gap = gap.max((ep - em).norm());
        overlap = overlap.min(eigenvector_overlap(&s));
    }
    verdict(
        gap <= 1e-10 && overlap >= 1.0 - 1e-6,
        format!("100 systems, max |E+ - E-| = {gap:.2e} (tol 1e-10), min overlap {overlap:.12} (tol 1 - 1e-6)"),
    )
}

fn phase_rigidity_limits() -> Verdict {
    let mut rng = SplitMix64::new(3);
    let mut out_of_range = 0usize;
    let mut tested = 0usize;
    let mut check = |r: &[f64]| {
        tested += r.len();
        out_of_range += r.iter().filter(|x| !(0.0..=1.0).contains(*x)).count();
    };
    for _ in 0..500 {
        let s = TwoLevelSystem::new(random_c(&mut rng, 2.0), random_c(&mut rng, 2.0), random_c(&mut rng, 1.0));
        check(&phase_rigidity(&eigendecompose(&s.matrix()).expect("decomposes")));
    }
    for _ in 0..100 {
        let b = random_c(&mut rng, 2.0);
        let d = PtDimer::new(0.0, rng.uniform_in(0.0, 6.0), b).expect("valid dimer");
        check(&phase_rigidity(&eigendecompose(&d.matrix()).expect("decomposes")));
    }
    for seed in 0..10 {
        let eh = EffectiveHamiltonian::random(8, 2, seed).expect("valid");
        for alpha in [0.01, 0.3, 1.0, 5.0, 100.0] {
            let h = eh.clone().with_alpha(alpha).expect("valid").assemble();
            check(&phase_rigidity(&eigendecompose(&h).expect("decomposes")));
        }
    }

    let mut real_dev = 0.0f64;
    for k in 0..200 {
        let n = 2 + k % 7;
        let mut rows = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i..n {
                let x = rng.uniform_in(-1.0, 1.0);
                rows[i][j] = x;
                rows[j][i] = x;
            }
        }
        let h = ComplexMatrix::from_real_rows(&rows).expect("square");
        for r in phase_rigidity(&eigendecompose(&h).expect("decomposes")) {
            real_dev = real_dev.max((r - 1.0).abs());
        }
    }

    let mut ep_worst = 0.0f64;
    let mut located = Vec::new();
    for (family, seed) in [(canonical(), [0.2, 0.8]), (pt_family(), [1.8, 1.0])] {
        let ep = match find_ep(&family, &seed, &EpOptions::default()) {
            Ok(ep) => ep,
            Err(e) => return verdict(false, format!("EP search failed on {}: {e}", family.description())),
        };
        let mut worst = 0.0f64;
        for k in 0..32 {
            let t = std::f64::consts::TAU * k as f64 / 32.0;
            let p = [ep.location[0] + 1e-6 * t.cos(), ep.location[1] + 1e-6 * t.sin()];
            let es = family.eigensystem(&p).expect("decomposes");
            worst = worst.max(phase_rigidity(&es).into_iter().fold(0.0, f64::max));
        }
        located.push(format!("({:.6}, {:.6}) max r {worst:.3e}", ep.location[0], ep.location[1]));
        ep_worst = ep_worst.max(worst);
    }

    verdict(
        out_of_range == 0 && real_dev <= 1e-12 && ep_worst <= 1e-3,
        format!(
            "{out_of_range}/{tested} rigidities outside [0,1]; real symmetric max |r - 1| = {real_dev:.1e} (tol 1e-12); \
             at distance 1e-6 from EPs {} (tol 1e-3)",
            located.join(", ")
        ),
    )
}

fn pt_threshold() -> Verdict {
    let mut rng = SplitMix64::new(4);
    let (mut below, mut pair_err, mut min_im_above) = (0.0f64, 0.0f64, f64::INFINITY);
    let mut passive_exact = true;
    for _ in 0..100 {
        let b = Complex64::from_polar(rng.uniform_in(0.2, 2.0), rng.uniform_in(0.0, std::f64::consts::TAU));
        let g0 = 2.0 * b.norm();
        let mut gammas = linspace(0.0, 2.0 * g0, 80);
        gammas.extend([g0 * (1.0 - 1e-6), g0 * (1.0 + 1e-6)]);
        gammas.sort_by(f64::total_cmp);
        let family = ParamFamily::new(1, 2, "PT dimer over gamma", move |p| {
            PtDimer::new(0.0, p[0], b).expect("gamma >= 0").matrix()
        });
        let tb = match sweep(&family, &scalar_grid(&gammas)) {
            Ok(tb) => tb,
            Err(e) => return verdict(false, format!("sweep failed for b = {b}: {e}")),
        };
        for (k, &g) in gammas.iter().enumerate() {
            let z = tb.values_at(k);
            if g < g0 * (1.0 - 1e-6) {
                below = below.max(z[0].im.abs()).max(z[1].im.abs());
            } else if g > g0 * (1.0 + 1e-6) {
                pair_err = pair_err.max((z[0] - z[1].conj()).norm());
                min_im_above = min_im_above.min(z[0].im.abs());
            }
        }
        for g in linspace(0.0, 2.0 * g0 * (1.0 - 1e-6), 50) {
            let (p, m) = passive_eigenvalues(&PtDimer::new(0.0, g, b).expect("valid"));
            passive_exact &= p.im == -0.5 * g && m.im == -0.5 * g;
        }
    }
    verdict(
        below <= 1e-12 && pair_err <= 1e-12 && min_im_above > 1e-12 && passive_exact,
        format!(
            "100 couplings: max |Im E| below threshold {below:.1e} (tol 1e-12); conjugate-pair error above {pair_err:.1e}, \
             min |Im E| above {min_im_above:.2e}; passive Im = -gamma/2 exactly: {passive_exact}"
        ),
    )
}

fn sum_rules() -> Verdict {
    let alphas = logspace(1e-2, 1e2, 61);
    let (mut trace_err, mut width_err) = (0.0f64, 0.0f64);
    for (seed, n, k) in [(5u64, 10, 1), (6, 10, 1), (7, 8, 3), (8, 12, 2), (9, 6, 5)] {
        let base = EffectiveHamiltonian::random(n, k, seed).expect("valid");
        for &alpha in &alphas {
            let eh = base.clone().with_alpha(alpha).expect("valid");
            let h = eh.assemble();
            let es = eigendecompose(&h).expect("decomposes");
            let sum: Complex64 = es.values().iter().sum();
            let tr = h.trace();
            trace_err = trace_err.max((sum - tr).norm() / tr.norm());
            let widths: f64 = es.widths().iter().sum();
            let expected = 2.0 * alpha * eh.coupling_trace();
            width_err = width_err.max((widths - expected).abs() / expected);
        }
    }
    verdict(
        trace_err <= 1e-10 && width_err <= 1e-10,
        format!("5 instances x 61 couplings: trace {trace_err:.1e}, widths {width_err:.1e} (tol 1e-10 relative)"),
    )
}

fn resonance_trapping() -> Verdict {
    let alphas = logspace(1e-2, 1e2, 61);
    let mut failures = Vec::new();
    let mut slopes = Vec::new();
    for seed in 0..20u64 {
        let eh = EffectiveHamiltonian::random(10, 1, seed).expect("valid");
        let report = match coupling_sweep(&eh, &alphas) {
            Ok(r) => r,
            Err(e) => {
                failures.push(format!("seed {seed}: {e}"));
                continue;
            }
        };
        let slope = report.trapped_widths_slope.unwrap_or(f64::NAN);
        slopes.push(slope);
        if report.broad_count != 1 || !((slope + 1.0).abs() <= 0.1) {
            failures.push(format!("seed {seed}: broad_count {} slope {slope:.3}", report.broad_count));
        }
    }
    let (lo, hi) = slopes
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &s| (a.min(s), b.max(s)));
    verdict(
        failures.is_empty(),
        if failures.is_empty() {
            format!("20 instances: broad_count 1, trapped slopes in [{lo:.4}, {hi:.4}] (target -1 +/- 0.1)")
        } else {
            failures.join("; ")
        },
    )
}

fn bound_states() -> Verdict {
    let alphas = logspace(1e-2, 1e2, 41);
    let s = 0.5f64.sqrt();
    let cases: [(Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<usize>); 2] = [
        (vec![vec![0.0, 0.7], vec![0.7, 0.0]], vec![vec![s], vec![s]], vec![1, 0]),
        (
            vec![vec![0.2, 0.5, 0.1], vec![0.5, -0.3, 0.5], vec![0.1, 0.5, 0.2]],
            vec![vec![0.6], vec![0.8], vec![0.6]],
            vec![2, 1, 0],
        ),
    ];
    let mut notes = Vec::new();
    let mut pass = true;
    for (h_b, v, perm) in &cases {
        let n = h_b.len();
        let eh = EffectiveHamiltonian::new(h_b.clone(), v.clone(), 1.0).expect("valid");
        let bics = match find_bics(&eh, &alphas, Some(perm)) {
            Ok(b) => b,
            Err(e) => return verdict(false, format!("{n}-level: {e}")),
        };
        let covered = alphas
            .iter()
            .all(|&a| bics.iter().any(|b| b.alpha == a && b.width < 1e-14));
        let numeric = coupling_sweep(&eh, &alphas).expect("sweeps");
        let numeric_max = numeric
            .widths
            .iter()
            .map(|w| w.iter().copied().fold(f64::INFINITY, f64::min))
            .fold(0.0f64, f64::max);

        let mut broken_v = v.clone();
        broken_v[0][0] += 1e-3;
        let broken = EffectiveHamiltonian::new(h_b.clone(), broken_v, 1.0).expect("valid");
        let report = coupling_sweep(&broken, &alphas).expect("sweeps");
        let broken_min = report.widths.iter().flatten().copied().fold(f64::INFINITY, f64::min);

        pass &= covered && broken_min > 0.0;
        notes.push(format!(
            "{n}-level: width < 1e-14 at all {} couplings: {covered} (unprotected numeric max {numeric_max:.1e}), \
             broken min width {broken_min:.2e}",
            alphas.len()
        ));
    }
    verdict(pass, notes.join("; "))
}

fn monodromy() -> Verdict {
    let f = canonical();
    let near = |o: &[Complex64], target: f64| o.iter().map(|z| (z - target).norm()).fold(0.0f64, f64::max);
    let mut notes = Vec::new();
    let mut results = Vec::new();
    for steps in [128, 256] {
        let m = match encircle_ep(&f, &[0.0, 1.0], 0.3, steps, 4) {
            Ok(m) => m,
            Err(e) => return verdict(false, format!("{steps} steps: {e}")),
        };
        let one = &m.per_loop[0];
        let two = &m.per_loop[1];
        let four = &m.per_loop[3];
        let ok = one.permutation == [1, 0]
            && two.permutation == [0, 1]
            && four.permutation == [0, 1]
            && near(&two.overlaps, -1.0) <= 1e-6
            && near(&four.overlaps, 1.0) <= 1e-6;
        notes.push(format!(
            "{steps} steps: 1 loop {:?}, 2 loops |o + 1| {:.1e}, 4 loops |o - 1| {:.1e}",
            one.permutation,
            near(&two.overlaps, -1.0),
            near(&four.overlaps, 1.0)
        ));
        results.push((ok, m));
    }
    let stable = results[0]
        .1
        .per_loop
        .iter()
        .zip(&results[1].1.per_loop)
        .all(|(a, b)| a.permutation == b.permutation && near(&a.overlaps.iter().zip(&b.overlaps).map(|(x, y)| x - y).collect::<Vec<_>>(), 0.0) <= 1e-6);
    verdict(
        results.iter().all(|r| r.0) && stable,
        format!("{}; stable under step doubling: {stable}", notes.join("; ")),
    )
}

fn cli_determinism() -> Verdict {
    let dir = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => return verdict(false, format!("tempdir: {e}")),
    };
    let inst = Path::new(env!("CARGO_MANIFEST_DIR")).join("instances");
    let run = |args: &[&str]| ep_spectra::cli::run(std::iter::once("ep-spectra").chain(args.iter().copied()));
    let p = |name: &str| dir.path().join(name).to_string_lossy().into_owned();

    let mut identical = true;
    for (file, format) in [("two_level_avoided.json", "csv"), ("pt_dimer_gamma.json", "json")] {
        let src = inst.join(file).to_string_lossy().into_owned();
        let (a, b) = (p(&format!("a.{format}")), p(&format!("b.{format}")));
        for out in [&a, &b] {
            if run(&["sweep", "--instance", &src, "--out", out, "--format", format, "--no-timestamp"]) != 0 {
                return verdict(false, format!("sweep of {file} failed"));
            }
        }
        identical &= std::fs::read(&a).ok() == std::fs::read(&b).ok();
    }

    let malformed = [
        "{ \"kind\": \"two_level\", ",
        "[1, 2, 3]",
        r#"{ "kind": "three_level", "params": {} }"#,
        r#"{ "kind": "two_level", "params": { "eps1": [0, 0], "eps2": [0, 0], "omega": [1, 0] }, "extra": true }"#,
        r#"{ "kind": "two_level", "params": { "eps1": [0, 0], "eps2": [0, 0], "omega": [1, 0] },
             "sweep": { "path": [ { "param": "eps1.re" } ], "grid": { "start": 0, "stop": 1, "count": 1 } } }"#,
        r#"{ "kind": "pt_dimer", "params": { "epsilon": 0, "gamma": -1, "b": [1, 0] },
             "sweep": { "path": [ { "param": "b.re" } ], "grid": { "start": 0, "stop": 1, "count": 5 } } }"#,
    ];
    let mut rejected = 0;
    for (i, text) in malformed.iter().enumerate() {
        let src = p(&format!("bad{i}.json"));
        let out = p(&format!("bad{i}.csv"));
        if std::fs::write(&src, text).is_err() {
            return verdict(false, "could not write instance");
        }
        if run(&["sweep", "--instance", &src, "--out", &out]) == 2 && !Path::new(&out).exists() {
            rejected += 1;
        }
    }
    verdict(
        identical && rejected == malformed.len(),
        format!(
            "repeated sweeps byte-identical: {identical}; malformed instances exiting 2 without output: {rejected}/{}",
            malformed.len()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 9] = [
        ("closed-form vs numeric eigenvalues", closed_form_vs_numeric),
        ("crossing condition", crossing_condition),
        ("phase rigidity bounds and limits", phase_rigidity_limits),
        ("PT threshold", pt_threshold),
        ("trace and width sum rules", sum_rules),
        ("resonance trapping", resonance_trapping),
        ("bound states in the continuum", bound_states),
        ("EP monodromy", monodromy),
        ("CLI determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let v = check();
        failed += usize::from(!v.pass);
        println!(
            "{} {}. {name}: {} [{:.2}s]",
            if v.pass { "PASS" } else { "FAIL" },
            i + 1,
            v.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
