//! Boosting a history state and then reading off its Wigner amplitude
//! agrees with boosting the Wigner amplitude directly.

use histlat::onshell::{build_onshell, from_wigner, gaussian_amplitude, to_wigner, wigner_boost, Normalization, OnShellSpec};
use histlat::{boost, Branch, DeltaKernel, Grid4, Rapidity};

fn main() -> histlat::Result<()> {
    let grid = Grid4::new(4096, [1024, 1, 1], 0.25, [0.5, 1.0, 1.0])?;
    let kernel = DeltaKernel::gaussian(20.0);
    let mut a = gaussian_amplitude(&grid, [0.2, 0.0, 0.0], 0.5);
    for (j, v) in a.iter_mut().enumerate() {
        if grid.spatial_p(j)[0].abs() > 4.0 {
            *v = Default::default();
        }
    }
    let psi = build_onshell(&OnShellSpec::new(1.0, Branch::Plus, a, Normalization::InvariantM2), &grid, &kernel)?;
    let w = to_wigner(&psi)?;
    let back = from_wigner(&w, &grid, &kernel)?;
    println!("round trip |Psi' - Psi| / |Psi| = {:.3e}", back.rel_dist(&psi));
    for rapidity in [0.1, 0.3, 0.5] {
        let r = Rapidity::along_x(rapidity);
        let lattice = to_wigner(&boost(&psi, &r)?)?;
        let direct = wigner_boost(&w, &r);
        let top = direct.a.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let dev = lattice.a.iter().zip(&direct.a).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / top;
        println!("w = {rapidity}: diagram deviation {dev:.3e}, norms {:.12} {:.12}", lattice.norm(), w.norm());
    }
    Ok(())
}
