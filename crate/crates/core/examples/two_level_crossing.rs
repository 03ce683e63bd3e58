//! Closed-form two-level spectra against the dense solver, and the
//! coalescence of both eigenvalues and eigenvectors at the crossing
//! condition `(ε₁ - ε₂) / 2ω = ±i`.

use num_complex::Complex64;

use ep_spectra::spectral::eigendecompose;
use ep_spectra::two_level::{crossing_diagnostic, eigenvalues2, eigenvector_overlap, TwoLevelSystem};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let c = Complex64::new;
    let s = TwoLevelSystem::open(c(1.0, -0.2), c(-0.5, -0.05), c(0.3, 0.0))?;
    let (ep, em) = eigenvalues2(&s);
    println!("closed form  E+ = {ep:.12}  E- = {em:.12}");
    let es = eigendecompose(&s.matrix())?;
    for z in es.values() {
        println!("numeric      z  = {z:.12}");
    }

    println!("\napproaching eps1 = eps2 + 2i omega with omega = 0.5:");
    println!("{:>10} {:>14} {:>14} {:>12}", "delta", "|E+ - E-|", "overlap", "distance");
    for delta in [1e-1, 1e-2, 1e-4, 1e-6, 0.0] {
        let s = TwoLevelSystem::new(c(delta, 1.0), c(0.0, 0.0), c(0.5, 0.0));
        let (ep, em) = eigenvalues2(&s);
        let d = crossing_diagnostic(&s)?;
        println!(
            "{delta:>10.0e} {:>14.3e} {:>14.10} {:>12.3e}",
            (ep - em).norm(),
            eigenvector_overlap(&s),
            d.distance_to_ep
        );
    }

    let real = TwoLevelSystem::new(c(0.4, 0.0), c(-0.1, 0.0), c(0.2, 0.0));
    println!("\nreal parameters, crossing impossible: {}", crossing_diagnostic(&real)?.crossing_impossible);
    Ok(())
}
