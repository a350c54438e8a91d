//! Static external field on a line: the `F(E)` eigenproblem
//! `[(E - eA0)^2 - (P + eA)^2] psi = m^2 psi`, mode catalogs at fixed mass,
//! the orthogonality identities between modes, and the free-mass content
//! of interacting modes.
//!
//! Covariant derivatives are `D_t = d_t + i e A0`, `D_x = d_x + i e A`, so
//! that `-i D_x = P + eA` and the gauge map is `psi -> e^{-ie chi} psi`,
//! `A -> A + d chi`.

use crate::error::{Error, Result};
use crate::fft::spatial_to_momentum;
use crate::grid::{Grid4, HistoryState};
use crate::kernel::{Branch, DeltaKernel, ShellTag};
use crate::products::{decompose, MassGrid, MassSpectralDecomposition};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Periodic line with spectral derivatives.
    Periodic,
    /// Zero at both ends of the box, second-order differences.
    Dirichlet,
}

/// Sample points of the line. Periodic: `x_j = j h`, `j < n`.
/// Dirichlet: interior points `x_j = (j + 1) h` of the box `[0, (n + 1) h]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub n: usize,
    pub h: f64,
    pub bc: Boundary,
}

impl Line {
    pub fn new(n: usize, h: f64, bc: Boundary) -> Result<Self> {
        if n < 2 || !(h > 0.0) {
            return Err(Error::Invalid(format!("bad line: n = {n}, h = {h}")));
        }
        Ok(Self { n, h, bc })
    }

    pub fn x(&self, j: usize) -> f64 {
        match self.bc {
            Boundary::Periodic => j as f64 * self.h,
            Boundary::Dirichlet => (j + 1) as f64 * self.h,
        }
    }

    pub fn length(&self) -> f64 {
        match self.bc {
            Boundary::Periodic => self.n as f64 * self.h,
            Boundary::Dirichlet => (self.n + 1) as f64 * self.h,
        }
    }

    /// Points of the periodic lattice that carries this line in a history state.
    pub fn lattice_points(&self) -> usize {
        match self.bc {
            Boundary::Periodic => self.n,
            Boundary::Dirichlet => self.n + 1,
        }
    }
}

/// Static, mass-independent potentials sampled on a line.
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalField {
    pub line: Line,
    pub a0: Vec<f64>,
    pub ax: Vec<f64>,
    pub e: f64,
}

impl ExternalField {
    pub fn from_fn<F: Fn(f64) -> (f64, f64)>(line: Line, e: f64, f: F) -> Self {
        let (a0, ax) = (0..line.n).map(|j| f(line.x(j))).unzip();
        Self { line, a0, ax, e }
    }

    pub fn zero(line: Line) -> Self {
        Self::from_fn(line, 1.0, |_| (0.0, 0.0))
    }

    pub fn constant(line: Line, e: f64, a: f64) -> Self {
        Self::from_fn(line, e, |_| (a, 0.0))
    }

    /// `A0 = -depth` on `|x - center| < half_width`, zero elsewhere.
    pub fn square_well(line: Line, e: f64, center: f64, half_width: f64, depth: f64) -> Self {
        Self::from_fn(line, e, |x| {
            (
                if (x - center).abs() < half_width {
                    -depth
                } else {
                    0.0
                },
                0.0,
            )
        })
    }

    pub fn gaussian_well(line: Line, e: f64, center: f64, width: f64, depth: f64) -> Self {
        Self::from_fn(line, e, |x| {
            (
                -depth * (-(x - center).powi(2) / (2.0 * width * width)).exp(),
                0.0,
            )
        })
    }

    pub fn linear(line: Line, e: f64, center: f64, slope: f64) -> Self {
        Self::from_fn(line, e, |x| (slope * (x - center), 0.0))
    }

    /// Tabulated `(x, A0, A_x)` rows, linearly interpolated onto the line
    /// (held constant beyond the table ends).
    pub fn from_table(line: Line, e: f64, rows: &[(f64, f64, f64)]) -> Result<Self> {
        if rows.len() < 2 || rows.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::Invalid(
                "field table needs at least two rows with increasing x".into(),
            ));
        }
        Ok(Self::from_fn(line, e, |x| {
            let k = rows.partition_point(|r| r.0 <= x);
            if k == 0 {
                return (rows[0].1, rows[0].2);
            }
            if k == rows.len() {
                let r = rows[rows.len() - 1];
                return (r.1, r.2);
            }
            let (a, b) = (rows[k - 1], rows[k]);
            let s = (x - a.0) / (b.0 - a.0);
            (a.1 + s * (b.1 - a.1), a.2 + s * (b.2 - a.2))
        }))
    }

    /// Same field with `A0 -> A0 + c`.
    pub fn shifted(&self, c: f64) -> Self {
        Self {
            a0: self.a0.iter().map(|v| v + c).collect(),
            ..self.clone()
        }
    }

    /// Single-slice lattice carrying the line on its first spatial axis.
    pub fn line_grid(&self) -> Result<Grid4> {
        Grid4::new(
            2,
            [self.line.lattice_points(), 1, 1],
            1.0,
            [self.line.h, 1.0, 1.0],
        )
    }

    fn check_grid(&self, grid: &Grid4) -> Result<usize> {
        let line = self.line;
        if grid.n[1] != line.lattice_points()
            || grid.n[2] != 1
            || grid.n[3] != 1
            || (grid.d[1] - line.h).abs() > 1e-12 * line.h
        {
            return Err(Error::GridMismatch);
        }
        Ok(if line.bc == Boundary::Dirichlet { 1 } else { 0 })
    }

    /// Place line samples on one slice of `grid` (boundary node zero).
    pub fn embed(&self, v: &[Complex64], grid: &Grid4) -> Result<Vec<Complex64>> {
        let off = self.check_grid(grid)?;
        let mut x = vec![Complex64::default(); grid.spatial_len()];
        x[off..off + v.len()].copy_from_slice(v);
        Ok(x)
    }

    pub fn embed_real(&self, v: &[f64], grid: &Grid4) -> Result<Vec<f64>> {
        let off = self.check_grid(grid)?;
        let mut x = vec![0.0; grid.spatial_len()];
        x[off..off + v.len()].copy_from_slice(v);
        Ok(x)
    }

    /// `(P + eA)^2` as a Hermitian matrix.
    pub fn kinetic(&self) -> DMatrix<Complex64> {
        let n = self.line.n;
        let h = self.line.h;
        let e = self.e;
        match self.line.bc {
            Boundary::Periodic => {
                let dk = 2.0 * PI / (n as f64 * h);
                // P_{jl} = (1/n) sum_k k e^{i k (x_j - x_l)}
                let ks: Vec<f64> = (0..n).map(|k| if k < n.div_ceil(2) { k as f64 } else { k as f64 - n as f64 } * dk).collect();
                let mut p = DMatrix::<Complex64>::zeros(n, n);
                for j in 0..n {
                    for l in 0..n {
                        let s: Complex64 = ks
                            .iter()
                            .map(|&k| Complex64::from_polar(k, k * (j as f64 - l as f64) * h))
                            .sum();
                        p[(j, l)] = s / n as f64;
                    }
                }
                for j in 0..n {
                    p[(j, j)] += e * self.ax[j];
                }
                &p * &p
            }
            Boundary::Dirichlet => {
                let mut k = DMatrix::<Complex64>::zeros(n, n);
                for j in 0..n {
                    k[(j, j)] = Complex64::new(2.0 / (h * h), 0.0);
                    if j + 1 < n {
                        let a = 0.5 * (self.ax[j] + self.ax[j + 1]);
                        let u = Complex64::from_polar(1.0 / (h * h), e * a * h);
                        k[(j, j + 1)] = -u;
                        k[(j + 1, j)] = -u.conj();
                    }
                }
                k
            }
        }
    }

    /// `F(E)` as a Hermitian matrix.
    pub fn f_matrix(&self, energy: f64) -> DMatrix<Complex64> {
        self.f_with_kinetic(energy, &self.kinetic())
    }

    fn f_with_kinetic(&self, energy: f64, k: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let mut f = -k.clone();
        for j in 0..self.line.n {
            f[(j, j)] += (energy - self.e * self.a0[j]).powi(2);
        }
        f
    }
}

/// Eigenpairs of `F(E)`, masses squared in descending order; vectors are
/// orthonormal with respect to `sum conj(f) g h`.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub energy: f64,
    pub m2: Vec<f64>,
    pub psi: Vec<Vec<Complex64>>,
}

fn eig_sorted(f: DMatrix<Complex64>, h: f64) -> Result<(Vec<f64>, Vec<Vec<Complex64>>)> {
    let n = f.nrows();
    let eig = nalgebra::SymmetricEigen::try_new(f, 1e-15, 10_000)
        .ok_or_else(|| Error::SolverFailure("Hermitian eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let s = 1.0 / h.sqrt();
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vecs = order
        .iter()
        .map(|&k| {
            let c = eig.eigenvectors.column(k);
            // fix the global phase: largest component real positive
            let big = c.iter().fold(Complex64::default(), |acc, v| {
                if v.norm() > acc.norm() {
                    *v
                } else {
                    acc
                }
            });
            let ph = if big.norm() > 0.0 {
                big.conj() / big.norm()
            } else {
                Complex64::new(1.0, 0.0)
            };
            c.iter().map(|v| v * ph * s).collect()
        })
        .collect();
    Ok((vals, vecs))
}

pub fn f_of_e_spectrum(field: &ExternalField, energy: f64) -> Result<Spectrum> {
    let (m2, psi) = eig_sorted(field.f_matrix(energy), field.line.h)?;
    Ok(Spectrum { energy, m2, psi })
}

fn eigenvalues(f: DMatrix<Complex64>) -> Result<Vec<f64>> {
    let mut v: Vec<f64> = f.symmetric_eigenvalues().iter().copied().collect();
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::SolverFailure("non-finite eigenvalue".into()));
    }
    v.sort_by(|a, b| b.total_cmp(a));
    Ok(v)
}

/// A solved mode of the external-field problem.
#[derive(Debug, Clone)]
pub struct ModeSolution {
    /// Branch index: position of `m2` in the descending spectrum of `F(E)`.
    pub k: usize,
    pub m2: f64,
    pub e: f64,
    /// Spatial eigenfunction scaled to `|Q_A| = 1`.
    pub psi: Vec<Complex64>,
    /// `dE/dm2` from the implicit-function relation `dm2/dE = Q_A / |psi|^2`.
    pub de_dm2: f64,
    /// `dE/dm2` from centred differences of the root in `m2`.
    pub de_dm2_fd: f64,
    pub qa: f64,
    pub sk: f64,
    pub residual: f64,
    /// `dE/dm2` too close to zero for the sign to be meaningful.
    pub critical: bool,
    /// Another branch has the same energy at this mass.
    pub degenerate: bool,
}

/// Inner product `sum conj(a) b h` on the line.
pub fn line_inner(field: &ExternalField, a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.conj() * y)
        .sum::<Complex64>()
        * field.line.h
}

/// `Q_A` between two stationary modes `psi_a e^{-i E_a t}` and
/// `psi_b e^{-i E_b t}` at `t = 0`: `sum conj(a) b (E_a + E_b - 2 e A0) h`.
pub fn qa_modes(
    field: &ExternalField,
    a: &[Complex64],
    ea: f64,
    b: &[Complex64],
    eb: f64,
) -> Complex64 {
    a.iter()
        .zip(b)
        .zip(&field.a0)
        .map(|((x, y), &v)| x.conj() * y * (ea + eb - 2.0 * field.e * v))
        .sum::<Complex64>()
        * field.line.h
}

/// Options of the energy scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    pub e_lo: f64,
    pub e_hi: f64,
    pub steps: usize,
    /// Only branches `k < branches` are tracked.
    pub branches: usize,
}

fn root_in<F: Fn(f64) -> Result<f64>>(
    g: F,
    mut a: f64,
    mut b: f64,
    mut fa: f64,
    mut fb: f64,
) -> Result<f64> {
    // Illinois-modified regula falsi with bisection fallback.
    let mut side = 0;
    for _ in 0..200 {
        let mut c = (a * fb - b * fa) / (fb - fa);
        if !(c > a.min(b) && c < a.max(b)) {
            c = 0.5 * (a + b);
        }
        let fc = g(c)?;
        if fc == 0.0 || (b - a).abs() < 1e-15 * (1.0 + c.abs()) {
            return Ok(c);
        }
        if fc * fb < 0.0 {
            a = b;
            fa = fb;
            side = 0;
        } else {
            fa *= if side == 1 { 0.5 } else { 1.0 };
            side = 1;
        }
        b = c;
        fb = fc;
        if (b - a).abs() < 4e-16 * (1.0 + b.abs()) {
            return Ok(b);
        }
    }
    Ok(b)
}

/// Solve `m2_k(E) = m2` on every tracked branch inside the energy window.
/// Returned modes are sorted by `(k, E)`.
pub fn solve_modes(
    field: &ExternalField,
    m2: f64,
    scan: &ScanOptions,
) -> Result<Vec<ModeSolution>> {
    let kin = field.kinetic();
    let nb = scan.branches.min(field.line.n);
    let es: Vec<f64> = (0..=scan.steps)
        .map(|i| scan.e_lo + (scan.e_hi - scan.e_lo) * i as f64 / scan.steps as f64)
        .collect();
    let spectra: Vec<Vec<f64>> = es
        .par_iter()
        .map(|&e| eigenvalues(field.f_with_kinetic(e, &kin)))
        .collect::<Result<_>>()?;
    let mut found = Vec::new();
    for k in 0..nb {
        for i in 0..scan.steps {
            let (fa, fb) = (spectra[i][k] - m2, spectra[i + 1][k] - m2);
            if fa == 0.0 || fa * fb < 0.0 {
                found.push((k, es[i], es[i + 1], fa, fb));
            }
        }
    }
    if found.is_empty() {
        return Err(Error::RootBracketFailure(format!(
            "no branch crosses m2 = {m2} in [{}, {}]",
            scan.e_lo, scan.e_hi
        )));
    }
    let mut modes: Vec<ModeSolution> = found
        .par_iter()
        .map(|&(k, a, b, fa, fb)| polish(field, &kin, m2, k, a, b, fa, fb))
        .collect::<Result<_>>()?;
    modes.sort_by(|x, y| x.e.total_cmp(&y.e).then(x.k.cmp(&y.k)));
    let mut i = 0;
    while i < modes.len() {
        let mut j = i + 1;
        while j < modes.len() && (modes[j].e - modes[i].e).abs() < 1e-9 * (1.0 + modes[i].e.abs()) {
            j += 1;
        }
        if j - i > 1 {
            reorthogonalize(field, &mut modes[i..j]);
        }
        i = j;
    }
    Ok(modes)
}

// Gram-Schmidt in the Q_A product inside a block of equal-energy modes.
fn reorthogonalize(field: &ExternalField, block: &mut [ModeSolution]) {
    for a in 0..block.len() {
        block[a].degenerate = true;
        for b in 0..a {
            let (lo, hi) = block.split_at_mut(a);
            let (pb, pa) = (&lo[b], &mut hi[0]);
            let c = qa_modes(field, &pb.psi, pb.e, &pa.psi, pa.e) * pb.qa;
            for (x, y) in pa.psi.iter_mut().zip(&pb.psi) {
                *x -= c * y;
            }
        }
        let pa = &mut block[a];
        let q = qa_modes(field, &pa.psi, pa.e, &pa.psi, pa.e).re;
        let s = 1.0 / q.abs().sqrt();
        pa.psi.iter_mut().for_each(|v| *v *= s);
        pa.qa = q.signum();
    }
}

fn branch_root(
    field: &ExternalField,
    kin: &DMatrix<Complex64>,
    m2: f64,
    k: usize,
    a: f64,
    b: f64,
) -> Result<f64> {
    let g = |e: f64| -> Result<f64> { Ok(eigenvalues(field.f_with_kinetic(e, kin))?[k] - m2) };
    let (fa, fb) = (g(a)?, g(b)?);
    if fa * fb > 0.0 {
        return Err(Error::RootBracketFailure(format!(
            "branch {k} lost its bracket near m2 = {m2}"
        )));
    }
    root_in(g, a, b, fa, fb)
}

#[allow(clippy::too_many_arguments)]
fn polish(
    field: &ExternalField,
    kin: &DMatrix<Complex64>,
    m2: f64,
    k: usize,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
) -> Result<ModeSolution> {
    let g = |e: f64| -> Result<f64> { Ok(eigenvalues(field.f_with_kinetic(e, kin))?[k] - m2) };
    let e = root_in(g, a, b, fa, fb)?;
    mode_at(field, kin, m2, k, e, Some((a, b)))
}

fn mode_at(
    field: &ExternalField,
    kin: &DMatrix<Complex64>,
    m2: f64,
    k: usize,
    e: f64,
    bracket: Option<(f64, f64)>,
) -> Result<ModeSolution> {
    let f = field.f_with_kinetic(e, kin);
    let (vals, vecs) = eig_sorted(f.clone(), field.line.h)?;
    let mut psi = vecs[k].clone();
    let qa = qa_modes(field, &psi, e, &psi, e).re;
    let critical = qa.abs() < 1e-8;
    let s = 1.0 / qa.abs().max(f64::MIN_POSITIVE).sqrt();
    psi.iter_mut().for_each(|v| *v *= s);
    let norm2 = line_inner(field, &psi, &psi).re;
    let de_dm2 = norm2 / qa.signum();
    // residual of [F(E) - m2] psi
    let v = DVector::from_vec(psi.clone());
    let r = &f * &v - &v * Complex64::new(m2, 0.0);
    let residual = r.norm() / v.norm() / vals[0].abs().max(1.0);
    // centred difference in m2
    let de_dm2_fd = match bracket {
        Some((a, b)) => {
            let dm = 1e-4 * m2.abs().max(1.0);
            let w = (b - a).max(1e-3);
            let ep = branch_root(field, kin, m2 + dm, k, e - w, e + w);
            let em = branch_root(field, kin, m2 - dm, k, e - w, e + w);
            match (ep, em) {
                (Ok(ep), Ok(em)) => (ep - em) / (2.0 * dm),
                _ => f64::NAN,
            }
        }
        None => f64::NAN,
    };
    Ok(ModeSolution {
        k,
        m2,
        e,
        psi,
        de_dm2,
        de_dm2_fd,
        qa: qa.signum(),
        sk: de_dm2.signum(),
        residual,
        critical,
        degenerate: false,
    })
}

/// Modes at fixed energy: every eigenpair of `F(E)` is a mode of mass
/// `m2_j` and energy `E`.
pub fn modes_at_energy(
    field: &ExternalField,
    energy: f64,
    ks: &[usize],
) -> Result<Vec<ModeSolution>> {
    let kin = field.kinetic();
    let (vals, _) = eig_sorted(field.f_with_kinetic(energy, &kin), field.line.h)?;
    ks.iter()
        .map(|&k| mode_at(field, &kin, vals[k], k, energy, None))
        .collect()
}

/// Report of the mass-changing orthogonality identity
/// `(m_b^2 - m_a^2) <a|b> = (E_b - E_a) Q_A(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrthogonalityReport {
    pub lhs: Complex64,
    pub rhs: Complex64,
    /// `|lhs - rhs|` over `max(|m2 diff|, |E diff|) |a| |b|`.
    pub residual: f64,
    pub overlap: Complex64,
    pub qa: Complex64,
}

pub fn extended_orthogonality_check(
    field: &ExternalField,
    a: &ModeSolution,
    b: &ModeSolution,
) -> OrthogonalityReport {
    let overlap = line_inner(field, &a.psi, &b.psi);
    let qa = qa_modes(field, &a.psi, a.e, &b.psi, b.e);
    let lhs = overlap * (b.m2 - a.m2);
    let rhs = qa * (b.e - a.e);
    let na = line_inner(field, &a.psi, &a.psi).re.sqrt();
    let nb = line_inner(field, &b.psi, &b.psi).re.sqrt();
    let scale = (b.m2 - a.m2)
        .abs()
        .max((b.e - a.e).abs() * (a.e.abs() + b.e.abs() + 1.0))
        .max(1e-300)
        * na
        * nb;
    OrthogonalityReport {
        lhs,
        rhs,
        residual: (lhs - rhs).norm() / scale,
        overlap,
        qa,
    }
}

/// History state `sum_k c_k N_k delta_T(N_k (p0 - E_k)) psi_k(p)` with
/// `N_k = |dm2/dE|`, on a grid whose first spatial axis carries the line.
pub fn mode_history(
    field: &ExternalField,
    modes: &[(Complex64, &ModeSolution)],
    grid: &Grid4,
    kernel: &DeltaKernel,
) -> Result<HistoryState> {
    field.check_grid(grid)?;
    let m2 = modes
        .first()
        .map(|m| m.1.m2)
        .ok_or_else(|| Error::Invalid("no modes".into()))?;
    let ns = grid.spatial_len();
    let mut parts = Vec::new();
    for (c, m) in modes {
        if m.critical {
            return Err(Error::Invalid(format!("mode {} is critical", m.k)));
        }
        let nk = 1.0 / m.de_dm2.abs();
        let w = kernel.p0_width(1.0) * 2.0 / nk;
        if w < 1.5 * grid.dp(0) {
            return Err(Error::Resolution(format!(
                "mode band width {w:.3e} below 1.5 dp0"
            )));
        }
        parts.push((
            *c,
            nk,
            m.e,
            spatial_to_momentum(grid, &field.embed(&m.psi, grid)?),
        ));
    }
    let cut = kernel.cutoff();
    let amp = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let p0 = grid.p_vec(i)[0];
            parts
                .iter()
                .map(|(c, nk, e, pt)| {
                    let u = nk * (p0 - e);
                    if u.abs() > cut {
                        Complex64::default()
                    } else {
                        c * pt[i % ns] * (nk * kernel.value(u))
                    }
                })
                .sum()
        })
        .collect();
    let branch = if modes[0].1.e >= 0.0 {
        Branch::Plus
    } else {
        Branch::Minus
    };
    Ok(HistoryState {
        grid: *grid,
        amp,
        shell: Some(ShellTag {
            m2,
            branch,
            kernel: *kernel,
        }),
    })
}

/// Free-mass decomposition of a single-mode history state.
pub fn free_basis_content(
    field: &ExternalField,
    mode: &ModeSolution,
    kernel: &DeltaKernel,
    grid: &Grid4,
    mass_grid: Option<MassGrid>,
) -> Result<MassSpectralDecomposition> {
    let psi = mode_history(field, &[(Complex64::new(1.0, 0.0), mode)], grid, kernel)?;
    decompose(&psi, mass_grid.unwrap_or_else(|| MassGrid::covering(grid)))
}
