//! A truncated extended Fock space over a boost orbit of modes: the
//! algebra, the constraint, boosts and two-particle time structure.

use histlat::fock::{boost_operators, commutator_check, constraint_commutators, two_particle_history, CMat, ModeSet, TimeStructureOptions};
use histlat::{DeltaKernel, Rapidity};
use num_complex::Complex64;

fn main() -> histlat::Result<()> {
    let r = Rapidity::along_x(0.5);
    let ms = ModeSet::boost_orbit([1.0, 0.0, 0.0, 0.0], &r, 4, 0.1, 0.2, 2)?;
    println!("Fock dimension {}", ms.dimension());
    println!("{:?}", commutator_check(&ms, 1.0));
    for c in constraint_commutators(&ms, 1.0) {
        println!("p^2 - m^2 = {:+.2e}  |[J, c+]| = {:.2e}", c.p2_minus_m2, c.size);
    }
    let map = boost_operators(&ms, &r)?;
    println!("mode 0 -> {:?}, on-shell factor {:.15} (sqrt cosh w = {:.15})", map.image[0], map.onshell_factor(&ms, 0, 1.0)?, 0.5f64.cosh().sqrt());
    let k = DeltaKernel::gaussian(20.0);
    let mut a = CMat::zeros(4, 4);
    a[(0, 1)] = Complex64::new(1.0, 0.0);
    a[(1, 0)] = Complex64::new(1.0, 0.0);
    let (_, rep) = two_particle_history(&ms, 1.0, &a, &k, TimeStructureOptions::default())?;
    println!("symmetrized pair: rank {}, off-diagonal weight {:.3}", rep.rank, rep.off_diagonal);
    Ok(())
}
