//! The 4D norm of an on-shell Gaussian approaches the Klein-Gordon norm as
//! the kernel window grows.

use histlat::onshell::{build_onshell, gaussian_amplitude, Normalization, OnShellSpec};
use histlat::products::mass_overlap;
use histlat::{Branch, DeltaKernel, Grid4};

fn main() -> histlat::Result<()> {
    let grid = Grid4::new(8192, [64, 1, 1], 0.5, [0.5, 1.0, 1.0])?;
    let a = gaussian_amplitude(&grid, [0.0; 3], 0.5);
    println!("{:>6} {:>24} {:>12}", "T", "q_estimate", "error");
    for t in [25.0, 50.0, 100.0, 200.0] {
        let kernel = DeltaKernel::sinc(t);
        let spec = OnShellSpec::new(1.0, Branch::Plus, a.clone(), Normalization::InvariantM2);
        let psi = build_onshell(&spec, &grid, &kernel)?;
        let q = mass_overlap(&psi, &psi, &kernel)?.q_estimate;
        println!("{t:>6} {:>24.16} {:>12.3e}", q.re, (q - 1.0).norm());
    }
    Ok(())
}
