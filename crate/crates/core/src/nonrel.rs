//! Non-relativistic history states with a kernel in the mass `M`, the
//! Schroedinger norm that follows from mass orthogonality, and the
//! generalized product `<Phi|(1 + phi/c^2)|Psi>`.
//!
//! The shell is `p0 = p^2/2M + M + offset`; the rest-energy offset is a
//! mass-independent constant, zero by default.

use crate::error::{Error, Result};
use crate::extfield::{Boundary, Line};
use crate::fft::{spatial_to_momentum, spatial_to_position};
use crate::grid::{Grid4, HistoryState};
use crate::kernel::{Branch, DeltaKernel, ShellTag};
use crate::products::{inner4, Slice};
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Mass and rest-energy offset of a non-relativistic shell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonrelShell {
    pub m: f64,
    pub offset: f64,
}

impl NonrelShell {
    pub fn new(m: f64) -> Self {
        Self { m, offset: 0.0 }
    }

    pub fn energy(&self, p2: f64) -> f64 {
        p2 / (2.0 * self.m) + self.m + self.offset
    }

    /// The mass `M(p0, p)` on the branch through the rest point, if real.
    pub fn mass_of(&self, p0: f64, p2: f64) -> Option<f64> {
        let q = p0 - self.offset;
        let disc = q * q - 2.0 * p2;
        (q > 0.0 && disc >= 0.0).then(|| 0.5 * (q + disc.sqrt()))
    }
}

fn p2_of(p: [f64; 3]) -> f64 {
    p[0] * p[0] + p[1] * p[1] + p[2] * p[2]
}

/// Fraction of `sum |a|^2` inside `|p| < m/5`.
pub fn concentration(grid: &Grid4, m: f64, a: &[Complex64]) -> f64 {
    let tot: f64 = a.iter().map(|v| v.norm_sqr()).sum();
    let inside: f64 = a
        .iter()
        .enumerate()
        .filter(|(j, _)| p2_of(grid.spatial_p(*j)).sqrt() < m / 5.0)
        .map(|(_, v)| v.norm_sqr())
        .sum();
    inside / tot
}

/// `Psi(p0, p) = a(p) |dM/dp0| delta_T(M(p0, p) - m)`. Entries of `a`
/// with `|a|^2` below `1e-30` of the largest are dropped.
pub fn nonrel_history(
    shell: NonrelShell,
    a: &[Complex64],
    grid: &Grid4,
    kernel: &DeltaKernel,
) -> Result<HistoryState> {
    if a.len() != grid.spatial_len() {
        return Err(Error::GridMismatch);
    }
    let top = a.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
    let a: Vec<Complex64> = a
        .iter()
        .map(|v| {
            if v.norm_sqr() > 1e-30 * top {
                *v
            } else {
                Complex64::default()
            }
        })
        .collect();
    let a = &a[..];
    let frac = concentration(grid, shell.m, a);
    if frac < 0.99 {
        return Err(Error::RegimeViolation(frac));
    }
    let e_max = a
        .iter()
        .enumerate()
        .filter(|(_, v)| v.norm_sqr() > 0.0)
        .map(|(j, _)| shell.energy(p2_of(grid.spatial_p(j))))
        .fold(0.0, f64::max);
    let w = kernel.width();
    if w < 1.5 * grid.dp(0) {
        return Err(Error::Resolution(format!(
            "mass kernel width {w:.3e} below 1.5 dp0 = {:.3e}",
            1.5 * grid.dp(0)
        )));
    }
    if e_max + 4.0 * w > PI / grid.d[0] {
        return Err(Error::Resolution(format!(
            "energy {e_max:.3} beyond the p0 lattice edge {:.3}",
            PI / grid.d[0]
        )));
    }
    let ns = grid.spatial_len();
    let cut = kernel.cutoff();
    let amp = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let p = grid.p_vec(i);
            let v = a[i % ns];
            let p2 = p[1] * p[1] + p[2] * p[2] + p[3] * p[3];
            match shell.mass_of(p[0], p2) {
                Some(mm) if v.norm_sqr() > 0.0 && (mm - shell.m).abs() <= cut => {
                    let jac = 1.0 / (1.0 - p2 / (2.0 * mm * mm)).abs();
                    v * (jac * kernel.value(mm - shell.m))
                }
                _ => Complex64::default(),
            }
        })
        .collect();
    Ok(HistoryState {
        grid: *grid,
        amp,
        shell: Some(ShellTag {
            m2: shell.m * shell.m,
            branch: Branch::Plus,
            kernel: *kernel,
        }),
    })
}

/// Kernel-normalized overlap of two states built by [`nonrel_history`]
/// with masses `ma` and `mb`: `raw / overlap(ma - mb)`.
pub fn nonrel_mass_overlap(
    a: &HistoryState,
    ma: f64,
    b: &HistoryState,
    mb: f64,
    kernel: &DeltaKernel,
) -> Result<crate::products::MassOverlap> {
    for s in [a, b] {
        match s.shell {
            Some(t) if t.kernel == *kernel => {}
            _ => return Err(Error::KernelMismatch),
        }
    }
    let raw = inner4(a, b)?;
    Ok(crate::products::MassOverlap {
        raw,
        q_estimate: raw / kernel.overlap(ma - mb),
    })
}

/// `sum d^dp |a|^2 / |1 - p^2/2m^2|`, the exact limit of the overlap for
/// equal masses.
pub fn jacobian_norm(grid: &Grid4, m: f64, a: &[Complex64]) -> f64 {
    a.iter()
        .enumerate()
        .map(|(j, v)| v.norm_sqr() / (1.0 - p2_of(grid.spatial_p(j)) / (2.0 * m * m)).abs())
        .sum::<f64>()
        * grid.spatial_p_measure()
}

/// `max p^2/2m^2` over the support of `a`.
pub fn velocity_bound(grid: &Grid4, m: f64, a: &[Complex64]) -> f64 {
    let top = a.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
    a.iter()
        .enumerate()
        .filter(|(_, v)| v.norm_sqr() > 1e-30 * top)
        .map(|(j, _)| p2_of(grid.spatial_p(j)) / (2.0 * m * m))
        .fold(0.0, f64::max)
}

/// Largest deviation from one of the lattice sum `sum dp0 |dM/dp0| delta_T(M - m)`
/// over the support of `a`.
pub fn kernel_area_error(
    shell: NonrelShell,
    grid: &Grid4,
    a: &[Complex64],
    kernel: &DeltaKernel,
) -> f64 {
    let dp0 = grid.dp(0);
    let top = a.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
    (0..grid.spatial_len())
        .filter(|&j| a[j].norm_sqr() > 1e-30 * top)
        .map(|j| {
            let p2 = p2_of(grid.spatial_p(j));
            let s: f64 = (0..grid.n[0])
                .filter_map(|it| {
                    let p0 = grid.p_at(0, it);
                    shell
                        .mass_of(p0, p2)
                        .map(|mm| kernel.value(mm - shell.m) / (1.0 - p2 / (2.0 * mm * mm)).abs())
                })
                .sum();
            (s * dp0 - 1.0).abs()
        })
        .fold(0.0, f64::max)
}

/// Exact Schroedinger evolution `sum a(p) e^{-i E_p t} |p>` of a shell amplitude.
pub fn nonrel_evolution(grid: &Grid4, shell: NonrelShell, a: &[Complex64], t: f64) -> Slice {
    let mut f = vec![Complex64::default(); a.len()];
    let mut df = vec![Complex64::default(); a.len()];
    for (j, v) in a.iter().enumerate() {
        let e = shell.energy(p2_of(grid.spatial_p(j)));
        f[j] = v * Complex64::from_polar(1.0, -e * t);
        df[j] = f[j] * Complex64::new(0.0, -e);
    }
    Slice {
        grid: *grid,
        t,
        psi: spatial_to_position(grid, &f),
        dt_psi: spatial_to_position(grid, &df),
    }
}

/// `|(i d_t - p^2/2m - m - offset) psi| / |psi|`, spatial part spectral.
pub fn schrodinger_residual(slice: &Slice, shell: NonrelShell) -> f64 {
    let g = &slice.grid;
    let hp: Vec<Complex64> = spatial_to_momentum(g, &slice.psi)
        .iter()
        .enumerate()
        .map(|(j, v)| v * shell.energy(p2_of(g.spatial_p(j))))
        .collect();
    let h = spatial_to_position(g, &hp);
    let num: f64 = slice
        .dt_psi
        .iter()
        .zip(&h)
        .map(|(d, hv)| (Complex64::new(0.0, 1.0) * d - hv).norm_sqr())
        .sum();
    let den: f64 = slice.psi.iter().map(|v| v.norm_sqr()).sum();
    (num / den).sqrt()
}

/// `int |psi|^2 d^dx` of a slice.
pub fn slice_norm(slice: &Slice) -> f64 {
    slice.psi.iter().map(|v| v.norm_sqr()).sum::<f64>() * slice.grid.spatial_x_measure()
}

/// Centroid of `|psi|^2` along spatial axis `axis` (1..=3).
pub fn centroid(slice: &Slice, axis: usize) -> f64 {
    let g = &slice.grid;
    let (mut num, mut den) = (0.0, 0.0);
    for (j, v) in slice.psi.iter().enumerate() {
        let w = v.norm_sqr();
        num += w * g.spatial_x(j)[axis - 1];
        den += w;
    }
    num / den
}

/// `<Phi|Psi> + c^{-2} int phi(x) conj(Phi(x)) Psi(x) d^4x`, with `phi`
/// sampled on the position lattice.
pub fn generalized_product(
    a: &HistoryState,
    b: &HistoryState,
    phi: &[f64],
    c: f64,
) -> Result<Complex64> {
    if a.grid != b.grid || phi.len() != a.grid.len() {
        return Err(Error::GridMismatch);
    }
    let c2 = c * c;
    if let Some(w) = phi.iter().map(|v| 1.0 + v / c2).find(|w| !(*w > 0.0)) {
        return Err(Error::IndefiniteWeight(w));
    }
    let base = inner4(a, b)?;
    if phi.iter().all(|v| *v == 0.0) {
        return Ok(base);
    }
    let (fa, fb) = (a.to_position(), b.to_position());
    let s: Complex64 = crate::par_sum(fa.len(), |i| fa[i].conj() * fb[i] * phi[i]);
    Ok(base + s * a.grid.x_measure() / c2)
}

/// Energy-degenerate pair of eigenfunctions of `H(M) = -lap/2M + M phi + M`
/// on a Dirichlet line at two different masses, and the weighted overlap
/// that mass orthogonality predicts to vanish up to `<p^2>/(2 m m')`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassPairReport {
    pub m: f64,
    pub m_prime: f64,
    pub energy: f64,
    /// `int psi_j (1 + phi) psi_k dx`.
    pub weighted_overlap: f64,
    /// `int psi_j (-lap) psi_k dx / (2 m m')`.
    pub correction: f64,
}

fn h_matrix(line: &Line, phi: &[f64], m: f64) -> DMatrix<f64> {
    let n = line.n;
    let h2 = line.h * line.h;
    let mut h = DMatrix::zeros(n, n);
    for j in 0..n {
        h[(j, j)] = 1.0 / (m * h2) + m * phi[j] + m;
        if j + 1 < n {
            h[(j, j + 1)] = -0.5 / (m * h2);
            h[(j + 1, j)] = -0.5 / (m * h2);
        }
    }
    h
}

fn eig_asc(line: &Line, phi: &[f64], m: f64) -> (Vec<f64>, Vec<Vec<f64>>) {
    let e = SymmetricEigen::new(h_matrix(line, phi, m));
    let mut order: Vec<usize> = (0..line.n).collect();
    order.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
    let s = 1.0 / line.h.sqrt();
    (
        order.iter().map(|&k| e.eigenvalues[k]).collect(),
        order
            .iter()
            .map(|&k| e.eigenvectors.column(k).iter().map(|v| v * s).collect())
            .collect(),
    )
}

/// Level `k` at mass `m` against level `k + 1` at the lighter mass `m'`
/// chosen so that both energies agree.
pub fn mass_dependent_pair(line: Line, phi: &[f64], m: f64, k: usize) -> Result<MassPairReport> {
    if line.bc != Boundary::Dirichlet || phi.len() != line.n {
        return Err(Error::Invalid(
            "mass-dependent pair needs a Dirichlet line and phi on it".into(),
        ));
    }
    let (ek, vk) = eig_asc(&line, phi, m);
    let target = ek[k];
    let g = |mm: f64| eig_asc(&line, phi, mm).0[k + 1] - target;
    let (mut lo, mut hi) = (0.5 * m, m);
    if g(lo) * g(hi) > 0.0 {
        return Err(Error::RootBracketFailure(format!(
            "no mass below {m} puts level {} at E = {target}",
            k + 1
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(lo) * g(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-15 * m {
            break;
        }
    }
    let mp = 0.5 * (lo + hi);
    let (_, vj) = eig_asc(&line, phi, mp);
    let (a, b) = (&vj[k + 1], &vk[k]);
    let h = line.h;
    let weighted_overlap: f64 = (0..line.n)
        .map(|j| a[j] * (1.0 + phi[j]) * b[j])
        .sum::<f64>()
        * h;
    let lap: f64 = (0..line.n)
        .map(|j| {
            let up = if j + 1 < line.n { b[j + 1] } else { 0.0 };
            let dn = if j > 0 { b[j - 1] } else { 0.0 };
            a[j] * (2.0 * b[j] - up - dn) / (h * h)
        })
        .sum::<f64>()
        * h;
    Ok(MassPairReport {
        m,
        m_prime: mp,
        energy: target,
        weighted_overlap,
        correction: lap / (2.0 * m * mp),
    })
}
