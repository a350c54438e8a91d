//! The Klein-Gordon propagator three ways: radial quadrature, the Bessel
//! closed form at equal times, and the mass projector summed over a large
//! virtual lattice.

use histlat::propagator::{propagator_d, propagator_d_with, LatticePropagator, QuadOptions};
use histlat::special::equal_time_d;
use histlat::{DeltaKernel, Grid4};

fn main() -> histlat::Result<()> {
    let m = 1.0;
    println!("equal time:");
    for r in [0.5, 1.0, 2.0, 4.0] {
        let d = propagator_d([0.0, r, 0.0, 0.0], m)?;
        println!("  r = {r:<4} quadrature {:.15e}  bessel {:.15e}", d.re, equal_time_d(m, r));
    }
    let grid = Grid4::new(1 << 20, [128; 3], 0.12, [0.125; 3])?;
    let lat = LatticePropagator::new(grid, DeltaKernel::gaussian(400.0), m * m, 1.0)?;
    let opt = QuadOptions { dim: 3, eps: 1.0, tol: 1e-12 };
    println!("regulated, lattice against quadrature:");
    for sep in [[0.0, 1.0, 0.0, 0.0], [1.0, 0.5, 0.0, 0.0], [3.0, 1.0, 0.0, 0.0]] {
        let a = lat.value(sep);
        let b = propagator_d_with(sep, m, &opt)?;
        println!("  (t, x) = ({}, {})  {a:.6e}  {b:.6e}  rel {:.2e}", sep[0], sep[1], (a - b).norm() / b.norm());
    }
    Ok(())
}
