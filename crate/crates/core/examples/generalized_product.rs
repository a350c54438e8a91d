//! The potential-weighted product differs from the plain one by `1/c^2`.

use histlat::nonrel::generalized_product;
use histlat::onshell::{build_onshell, gaussian_amplitude, Normalization, OnShellSpec};
use histlat::products::inner4;
use histlat::{Branch, DeltaKernel, Grid4};

fn main() -> histlat::Result<()> {
    let grid = Grid4::new(512, [64, 1, 1], 0.5, [0.5, 1.0, 1.0])?;
    let k = DeltaKernel::gaussian(20.0);
    let mut a = gaussian_amplitude(&grid, [0.3, 0.0, 0.0], 0.5);
    for (j, v) in a.iter_mut().enumerate() {
        if grid.spatial_p(j)[0].abs() > 1.5 {
            *v = Default::default();
        }
    }
    let psi = build_onshell(&OnShellSpec::new(1.0, Branch::Plus, a, Normalization::InvariantM2), &grid, &k)?;
    let phi: Vec<f64> = (0..grid.len()).map(|i| -0.5 * (-grid.x_vec(i)[1].powi(2) / 8.0).exp()).collect();
    let base = inner4(&psi, &psi)?;
    for c in [1.0, 2.0, 4.0, 8.0, 16.0] {
        let d = (generalized_product(&psi, &psi, &phi, c)? - base).norm();
        println!("c = {c:<5} |(Psi|Psi) - <Psi|Psi>| = {d:.6e}   times c^2 = {:.6e}", d * c * c);
    }
    Ok(())
}
