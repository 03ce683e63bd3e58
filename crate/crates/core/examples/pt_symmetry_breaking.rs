//! Gain/loss dimer: real spectrum below `γ = 2|b|`, complex-conjugate pair
//! above it, and the passive variant whose widths grow linearly with `γ`.

use num_complex::Complex64;

use ep_spectra::pt_dimer::{passive_eigenvalues, pt_breaking_threshold, pt_eigenvalues, pt_phase, PtDimer};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let b = Complex64::new(1.0, 0.0);
    let (active, passive) = pt_breaking_threshold(b)?;
    println!("thresholds: active gamma = {active}, passive gamma = {passive}\n");
    println!("{:>6} {:>26} {:>26} {:>10}", "gamma", "E+", "passive E+", "phase");
    for k in 0..=12 {
        let gamma = 0.5 * k as f64;
        let d = PtDimer::new(0.0, gamma, b)?;
        let (ep, _) = pt_eigenvalues(&d);
        let (pp, _) = passive_eigenvalues(&d);
        println!(
            "{gamma:>6.2} {:>26} {:>26} {:>10?}",
            format!("{:+.6} {:+.6}i", ep.re, ep.im),
            format!("{:+.6} {:+.6}i", pp.re, pp.im),
            pt_phase(&d, false).kind
        );
    }
    Ok(())
}
