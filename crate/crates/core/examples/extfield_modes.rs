//! Bound modes of a square well: energies at fixed mass, `dE/dm2` two ways
//! and the mass-changing orthogonality identity.

use histlat::extfield::{extended_orthogonality_check, line_inner, modes_at_energy, solve_modes, Boundary, ExternalField, Line, ScanOptions};

fn main() -> histlat::Result<()> {
    let line = Line::new(120, 0.1, Boundary::Dirichlet)?;
    let field = ExternalField::square_well(line, 1.0, 6.05, 2.0, 0.3);
    let scan = ScanOptions { e_lo: 0.6, e_hi: 1.3, steps: 60, branches: 6 };
    let mut all = Vec::new();
    for m2 in [1.0, 1.1] {
        let modes = solve_modes(&field, m2, &scan)?;
        for m in &modes {
            println!("m2 = {m2}  k = {}  E = {:.12}  dE/dm2 = {:.10} (fd {:.10})  Q_A = {:+}", m.k, m.e, m.de_dm2, m.de_dm2_fd, m.qa);
        }
        all.extend(modes);
    }
    let r = extended_orthogonality_check(&field, &all[0], &all[all.len() - 1]);
    println!("(m_b^2 - m_a^2)<a|b> = {:.6e}, (E_b - E_a) Q_A = {:.6e}, residual {:.2e}", r.lhs, r.rhs, r.residual);
    let pair = modes_at_energy(&field, all[0].e, &[0, 1])?;
    println!("equal E, m2 = {:.6} and {:.6}: <a|b> = {:.2e}", pair[0].m2, pair[1].m2, line_inner(&field, &pair[0].psi, &pair[1].psi).norm());
    Ok(())
}
