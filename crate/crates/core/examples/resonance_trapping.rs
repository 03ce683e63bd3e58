//! Width bifurcation in a random open system. With one channel a single
//! state takes almost all of the width at strong coupling, while the others
//! become long-lived with widths falling off as `1/α`.

use ep_spectra::effective::{coupling_sweep, EffectiveHamiltonian};
use ep_spectra::trajectory::logspace;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map_or(Ok(2024), |s| s.parse())?;
    let eh = EffectiveHamiltonian::random(10, 1, seed)?;
    let alphas = logspace(1e-2, 1e2, 61);
    let report = coupling_sweep(&eh, &alphas)?;

    println!("{:>10} {:>12} {:>12} {:>12}", "alpha", "widest", "second", "narrowest");
    for (a, w) in report.alphas.iter().zip(&report.widths).step_by(6) {
        println!("{a:>10.3e} {:>12.4e} {:>12.4e} {:>12.4e}", w[0], w[1], w[w.len() - 1]);
    }
    println!("\nbroad states: {}", report.broad_count);
    if let Some(s) = report.trapped_widths_slope {
        println!("trapped widths slope over the top decade: {s:.4}");
    }
    println!("avoided crossings seen: {}", report.avoided_crossings.len());
    Ok(())
}
