//! The mass projector as a proper-time integral of `e^{i tau (J - m2)}`.

use histlat::propagator::{project_mass, proper_time_projector};
use histlat::{DeltaKernel, Grid4, HistoryState};
use num_complex::Complex64;

// Fewer nodes than the phase per panel allows are rejected as aliased, so
// the ladder starts at the smallest resolved count.
fn main() -> histlat::Result<()> {
    let grid = Grid4::new(256, [32, 1, 1], 0.25, [0.5, 1.0, 1.0])?;
    let psi = HistoryState::from_fn(grid, |p| Complex64::new((-(p[0] - 1.2).powi(2) - p[1] * p[1]).exp(), 0.1 * p[0]));
    for (k, nodes) in [(DeltaKernel::sinc(20.0), [4096, 8192, 16384]), (DeltaKernel::gaussian(8.0), [16384, 32768, 65536])] {
        let exact = project_mass(&psi, 1.0, None, &k)?;
        for n in nodes {
            let pt = proper_time_projector(&psi, 1.0, k.tau_support(), n, &k)?;
            println!("{:?} n_tau = {n:<6} rel {:.3e}", k.shape, pt.rel_dist(&exact));
        }
    }
    Ok(())
}
