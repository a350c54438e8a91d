//! Convolving two propagators of different mass gives the kernel times a
//! propagator of the mean mass. The error shrinks as window and grid grow.

use histlat::propagator::convolution_identity_check;
use histlat::{DeltaKernel, Grid4};

fn main() -> histlat::Result<()> {
    for (t, n) in [(20.0, 1024), (40.0, 2048)] {
        let grid = Grid4::new(n, [n, 1, 1], 0.5, [0.5, 1.0, 1.0])?;
        let k = DeltaKernel::gaussian(t);
        let r = convolution_identity_check([0.0; 4], [1.0, 0.5, 0.0, 0.0], 1.0, 1.1, &k, &grid, 2.0)?;
        println!("T = {t:<4} n = {n:<5} lhs {:.6e}  rhs {:.6e}  rel {:.3e}", r.lhs, r.rhs, r.rel_err);
    }
    Ok(())
}
