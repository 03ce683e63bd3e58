//! Labeled eigenvalue trajectories through an avoided crossing, with the
//! gap minimum and the rigidity dip next to it.

use num_complex::Complex64;

use ep_spectra::trajectory::{detect_avoided_crossings, linspace, scalar_grid, sweep, ParamFamily};
use ep_spectra::two_level::TwoLevelSystem;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let family = ParamFamily::new(1, 2, "eps1 = x - 0.1i, eps2 = -x, omega = 0.2", |p| {
        TwoLevelSystem::new(Complex64::new(p[0], -0.1), Complex64::new(-p[0], 0.0), Complex64::new(0.2, 0.0)).matrix()
    });
    let xs = linspace(-1.0, 1.0, 41);
    let tb = sweep(&family, &scalar_grid(&xs))?;

    println!("{:>6} {:>24} {:>24} {:>8}", "x", "z_0", "z_1", "r_0");
    for (k, x) in xs.iter().enumerate().step_by(4) {
        let z = tb.values_at(k);
        println!(
            "{x:>6.2} {:>24} {:>24} {:>8.4}",
            format!("{:+.5} {:+.5}i", z[0].re, z[0].im),
            format!("{:+.5} {:+.5}i", z[1].re, z[1].im),
            tb.rigidity[0][k]
        );
    }
    for ac in detect_avoided_crossings(&tb, 0.5) {
        println!(
            "\navoided crossing of {:?} at x = {:.3}: gap {:.4}, rigidity dip {:.4}",
            ac.pair, ac.x_min[0], ac.gap_min, ac.rigidity_dip
        );
    }
    println!("total matching cost {:.4}", tb.matching_cost.iter().sum::<f64>());
    Ok(())
}
