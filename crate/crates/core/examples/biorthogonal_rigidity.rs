//! Biorthonormal eigenvectors and phase rigidity. The rigidity is 1 for a
//! real symmetric matrix and collapses as `√δ` next to an exceptional point.

use num_complex::Complex64;

use ep_spectra::matrix::ComplexMatrix;
use ep_spectra::spectral::{eigendecompose, mixing_coefficients, phase_rigidity};
use ep_spectra::two_level::TwoLevelSystem;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let h = ComplexMatrix::from_real_rows(&[vec![1.0, 0.3, 0.0], vec![0.3, -0.2, 0.5], vec![0.0, 0.5, 0.4]])?;
    let es = eigendecompose(&h)?;
    println!("real symmetric: r = {:?}", phase_rigidity(&es));
    println!("biorthogonality error {:.1e}\n", es.biorthogonality_error());

    let c = Complex64::new;
    println!("{:>10} {:>14} {:>14} {:>12}", "delta", "r", "sqrt(2 delta)", "A");
    for delta in [1e-1, 1e-2, 1e-3, 1e-4, 1e-6, 1e-8] {
        let s = TwoLevelSystem::new(c(delta, -1.0), c(0.0, 0.0), c(0.5, 0.0));
        let es = eigendecompose(&s.matrix())?;
        let r = phase_rigidity(&es);
        let mix = mixing_coefficients(&es);
        println!(
            "{delta:>10.0e} {:>14.6e} {:>14.6e} {:>12.4e}",
            r[0],
            (2.0 * delta).sqrt(),
            mix.a[0]
        );
    }
    Ok(())
}
