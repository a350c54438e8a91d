//! A slow packet: the history-state norm against the Schroedinger norm and
//! the Jacobian bound, and free Schroedinger motion of the centroid.

use histlat::nonrel::{centroid, jacobian_norm, nonrel_evolution, nonrel_history, nonrel_mass_overlap, slice_norm, velocity_bound, NonrelShell};
use histlat::onshell::gaussian_amplitude;
use histlat::{DeltaKernel, Grid4};

fn main() -> histlat::Result<()> {
    let m = 10.0;
    let shell = NonrelShell::new(m);
    let grid = Grid4::new(2048, [128, 1, 1], 0.2, [0.25, 1.0, 1.0])?;
    let k = DeltaKernel::gaussian(40.0);
    let mut a = gaussian_amplitude(&grid, [0.5, 0.0, 0.0], 0.3);
    let s = (a.iter().map(|v| v.norm_sqr()).sum::<f64>() * grid.spatial_p_measure()).sqrt();
    a.iter_mut().for_each(|v| *v /= s);
    let psi = nonrel_history(shell, &a, &grid, &k)?;
    let q = nonrel_mass_overlap(&psi, m, &psi, m, &k)?.q_estimate.re;
    println!("history norm {q:.12}, Jacobian norm {:.12}", jacobian_norm(&grid, m, &a));
    println!("Schroedinger norm {:.12}, bound max p^2/2m^2 = {:.3e}", slice_norm(&nonrel_evolution(&grid, shell, &a, 0.0)), velocity_bound(&grid, m, &a));
    for t in [0.0, 10.0, 20.0] {
        println!("t = {t:<4} centroid {:.6}", centroid(&nonrel_evolution(&grid, shell, &a, t), 1));
    }
    Ok(())
}
