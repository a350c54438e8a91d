//! `d_mu j^mu = i (m'^2 - m^2) psi phi*` for two plane waves, spectrally
//! and with centred differences on refined grids.

use histlat::current::Deriv;
use histlat::experiments::{fit_order, plane_wave_divergence};

fn main() -> histlat::Result<()> {
    println!("spectral residual {:.3e}", plane_wave_divergence(256, Deriv::Spectral, true)?);
    let ns = [256, 512, 1024];
    let errs: Vec<f64> = ns.iter().map(|&n| plane_wave_divergence(n, Deriv::Centered, true)).collect::<histlat::Result<_>>()?;
    for (n, e) in ns.iter().zip(&errs) {
        println!("centered n = {n:<5} residual {e:.3e}");
    }
    let h: Vec<f64> = ns.iter().map(|&n| 1.0 / n as f64).collect();
    println!("fitted order {:.3}", fit_order(&h, &errs));
    Ok(())
}
