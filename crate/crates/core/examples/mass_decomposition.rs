//! Split a generic history state into mass cells and p0 signs, and project
//! onto one mass shell.

use histlat::products::{decompose, MassGrid};
use histlat::propagator::{idempotency_defect, project_mass};
use histlat::{Branch, DeltaKernel, Grid4, HistoryState};
use num_complex::Complex64;

fn main() -> histlat::Result<()> {
    let grid = Grid4::new(128, [64, 1, 1], 0.25, [0.5, 1.0, 1.0])?;
    let psi = HistoryState::from_fn(grid, |p| Complex64::new((-(p[0] - 1.0).powi(2) - 0.5 * p[1] * p[1]).exp(), 0.0));
    let d = decompose(&psi, MassGrid::covering(&grid))?;
    println!("weights: m2>=0 (+) {:.4}  (-) {:.4}  m2<0 (+) {:.4}  (-) {:.4}", d.regions[0], d.regions[1], d.regions[2], d.regions[3]);
    println!("mean and spread of m2 (+): {:.4} {:.4}", d.moments_plus.0, d.moments_plus.1);
    println!("reconstruction error {:.2e}", d.reconstruct().rel_dist(&psi));
    let k = DeltaKernel::gaussian(10.0);
    let shell = project_mass(&psi, 1.0, Some(Branch::Plus), &k)?;
    println!("projected weight {:.4e}, idempotency defect {:.3e}", shell.norm_sq() / psi.norm_sq(), idempotency_defect(&psi, 1.0, Some(Branch::Plus), &k)?);
    Ok(())
}
