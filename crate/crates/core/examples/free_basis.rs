//! Mass-squared spread of a mode history in the free basis: the kernel
//! width for a free mode, much more for a bound mode.

use histlat::extfield::{free_basis_content, solve_modes, Boundary, ExternalField, Line, ScanOptions};
use histlat::{Branch, DeltaKernel, Grid4};

fn main() -> histlat::Result<()> {
    let k = DeltaKernel::gaussian(40.0);
    let grid = Grid4::new(1024, [128, 1, 1], 0.5, [0.1, 1.0, 1.0])?;
    let scan = ScanOptions { e_lo: 0.3, e_hi: 1.3, steps: 60, branches: 3 };
    for depth in [0.0, 0.15, 0.3, 0.6] {
        let line = Line::new(128, 0.1, Boundary::Periodic)?;
        let field = if depth == 0.0 { ExternalField::zero(line) } else { ExternalField::square_well(line, 1.0, 6.4, 2.0, depth) };
        let modes = solve_modes(&field, 1.0, &scan)?;
        let d = free_basis_content(&field, &modes[0], &k, &grid, None)?;
        println!("depth {depth:<5} E = {:.6}  width / kernel width = {:.3}", modes[0].e, d.width(Branch::Plus) / k.width());
    }
    Ok(())
}
