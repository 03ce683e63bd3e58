//! Damped Newton search for exceptional points in two-parameter families.

use num_complex::Complex64;

use ep_spectra::matrix::ComplexMatrix;
use ep_spectra::spectral::phase_rigidity;
use ep_spectra::trajectory::{find_ep, EpOptions, ParamFamily};
use ep_spectra::two_level::TwoLevelSystem;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let c = Complex64::new;
    let two_level = ParamFamily::new(2, 2, "eps1 = X - iY, eps2 = 0, omega = 0.5", move |p| {
        TwoLevelSystem::new(c(p[0], -p[1]), c(0.0, 0.0), c(0.5, 0.0)).matrix()
    });
    let dimer = ParamFamily::new(2, 2, "gain/loss dimer over (gamma, b)", move |p| {
        ComplexMatrix::from_rows(&[vec![c(0.0, -0.5 * p[0]), c(p[1], 0.0)], vec![c(p[1], 0.0), c(0.0, 0.5 * p[0])]])
            .expect("2x2")
    });
    let chain = ParamFamily::new(2, 3, "three levels, middle one decaying at rate Y, couplings X", move |p| {
        ComplexMatrix::from_rows(&[
            vec![c(0.0, 0.0), c(p[0], 0.0), c(0.0, 0.0)],
            vec![c(p[0], 0.0), c(0.0, -p[1]), c(p[0], 0.0)],
            vec![c(0.0, 0.0), c(p[0], 0.0), c(0.0, 0.0)],
        ])
        .expect("3x3")
    });

    for (family, seed) in [(&two_level, [0.2, 0.8]), (&dimer, [1.8, 1.0]), (&chain, [0.5, 1.5])] {
        let ep = find_ep(family, &seed, &EpOptions::default())?;
        let probe = [ep.location[0] + 1e-6, ep.location[1]];
        let r = phase_rigidity(&family.eigensystem(&probe)?).into_iter().fold(1.0, f64::min);
        println!("{}", family.description());
        println!(
            "  location ({:.10}, {:.10})  residual {:.2e}  iterations {}",
            ep.location[0], ep.location[1], ep.residual, ep.iterations
        );
        println!("  smallest rigidity 1e-6 away: {r:.3e}");
    }
    Ok(())
}
