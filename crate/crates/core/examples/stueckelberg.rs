//! On-shell states are stationary under proper-time evolution.

use histlat::onshell::stueckelberg_check;
use histlat::{Grid4, HistoryState};
use num_complex::Complex64;

fn main() -> histlat::Result<()> {
    let grid = Grid4::new(64, [64, 1, 1], 0.5, [0.5, 1.0, 1.0])?;
    let (it, ix) = (5, 3);
    let psi = HistoryState::peak(grid, grid.index([it, ix, 0, 0]), Complex64::new(1.0, 0.0));
    let m2 = grid.p_at(0, it).powi(2) - grid.p_at(1, ix).powi(2);
    for shift in [0.0, 0.01, 0.1] {
        let r = stueckelberg_check(&psi, m2 + shift, &[1.0, 10.0, 100.0]);
        println!("m2 offset {shift:<5} generator {:.3e}  evolution {:.3e}", r.generator, r.evolution);
    }
    Ok(())
}
