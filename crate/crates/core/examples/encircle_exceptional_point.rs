//! Parallel transport around an exceptional point: one loop exchanges the
//! two eigenpairs, two loops return them with a sign flip, four loops
//! restore them.

use num_complex::Complex64;

use ep_spectra::trajectory::{encircle_ep, ParamFamily};
use ep_spectra::two_level::TwoLevelSystem;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let c = Complex64::new;
    let family = ParamFamily::new(2, 2, "eps1 = X - iY, eps2 = 0, omega = 0.5", move |p| {
        TwoLevelSystem::new(c(p[0], -p[1]), c(0.0, 0.0), c(0.5, 0.0)).matrix()
    });

    let m = encircle_ep(&family, &[0.0, 1.0], 0.3, 128, 4)?;
    for rec in &m.per_loop {
        let o: Vec<String> = rec.overlaps.iter().map(|z| format!("{:+.9} {:+.1e}i", z.re, z.im)).collect();
        println!("{} loop(s): permutation {:?}  overlaps [{}]", rec.loops, rec.permutation, o.join(", "));
    }

    let away = encircle_ep(&family, &[0.0, 2.0], 0.3, 128, 1)?;
    println!("\nloop not enclosing the point: permutation {:?}", away.permutation);
    Ok(())
}
