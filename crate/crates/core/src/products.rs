//! Inner products: the 4D canonical product, the Klein-Gordon product on a
//! time slice and its gauged form, kernel-normalized mass overlaps, and the
//! split of a state into mass and p0-sign sectors.

use crate::error::{Error, Result};
use crate::grid::{Grid4, HistoryState};
use crate::kernel::{Branch, DeltaKernel};
use num_complex::Complex64;
use std::f64::consts::PI;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `<Phi|Psi> = sum_p conj(Phi) Psi prod dp`.
pub fn inner4(phi: &HistoryState, psi: &HistoryState) -> Result<Complex64> {
    if phi.grid != psi.grid {
        return Err(Error::GridMismatch);
    }
    let s: Complex64 = crate::par_sum(phi.amp.len(), |i| phi.amp[i].conj() * psi.amp[i]);
    Ok(s * phi.grid.p_measure())
}

/// The same product evaluated from position-space fields.
pub fn inner4_position(phi: &HistoryState, psi: &HistoryState) -> Result<Complex64> {
    if phi.grid != psi.grid {
        return Err(Error::GridMismatch);
    }
    let (a, b) = (phi.to_position(), psi.to_position());
    let s: Complex64 = crate::par_sum(a.len(), |i| a[i].conj() * b[i]);
    Ok(s * phi.grid.x_measure())
}

/// A spatial field and its time derivative at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Slice {
    pub grid: Grid4,
    pub t: f64,
    pub psi: Vec<Complex64>,
    pub dt_psi: Vec<Complex64>,
}

/// `Q(phi, psi) = i int d^dx (phi* d_t psi - psi d_t phi*)`.
pub fn kg_product(phi: &Slice, psi: &Slice) -> Result<Complex64> {
    kg_core(phi, psi, None)
}

/// Gauged product with `D_0 = d_t + i e A0`:
/// `Q_A = i int (phi* D_0 psi - psi (D_0 phi)*)`. `a0` is sampled on the
/// slice points; a static vector potential does not enter.
pub fn kg_product_gauged(phi: &Slice, psi: &Slice, e: f64, a0: &[f64]) -> Result<Complex64> {
    if a0.len() != psi.psi.len() {
        return Err(Error::GridMismatch);
    }
    kg_core(phi, psi, Some((e, a0)))
}

fn kg_core(phi: &Slice, psi: &Slice, field: Option<(f64, &[f64])>) -> Result<Complex64> {
    if phi.grid.n[1..] != psi.grid.n[1..]
        || phi.grid.d[1..] != psi.grid.d[1..]
        || phi.psi.len() != psi.psi.len()
    {
        return Err(Error::GridMismatch);
    }
    let mut s = Complex64::default();
    for j in 0..psi.psi.len() {
        let (f, df, g, dg) = (phi.psi[j], phi.dt_psi[j], psi.psi[j], psi.dt_psi[j]);
        s += f.conj() * dg - g * df.conj();
        if let Some((e, a0)) = field {
            // i e A0 (phi* psi + psi phi*)
            s += 2.0 * I * e * a0[j] * f.conj() * g;
        }
    }
    Ok(I * s * phi.grid.spatial_x_measure())
}

/// Raw kernel-regularized overlap and its delta-normalized estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassOverlap {
    pub raw: Complex64,
    pub q_estimate: Complex64,
}

/// `raw = <A|B>` and `q_estimate = raw / delta_T(m2_A - m2_B)` where the
/// kernel of the overlap of two regularized shells is used.
pub fn mass_overlap(
    a: &HistoryState,
    b: &HistoryState,
    kernel: &DeltaKernel,
) -> Result<MassOverlap> {
    let (ta, tb) = match (a.shell, b.shell) {
        (Some(x), Some(y)) => (x, y),
        _ => return Err(Error::KernelMismatch),
    };
    if ta.kernel != *kernel || tb.kernel != *kernel {
        return Err(Error::KernelMismatch);
    }
    let raw = inner4(a, b)?;
    Ok(MassOverlap {
        raw,
        q_estimate: raw / kernel.overlap(ta.m2 - tb.m2),
    })
}

/// Multiplication by `p0`.
pub fn apply_p0(psi: &HistoryState) -> HistoryState {
    let mut out = psi.map_p(|p, a| a * p[0]);
    out.shell = psi.shell;
    out
}

/// Uniform cells in mass squared.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassGrid {
    pub lo: f64,
    pub hi: f64,
    pub cells: usize,
}

impl MassGrid {
    pub fn new(lo: f64, hi: f64, cells: usize) -> Result<Self> {
        if !(hi > lo) || cells == 0 {
            return Err(Error::Invalid(format!(
                "bad mass grid [{lo}, {hi}] x {cells}"
            )));
        }
        Ok(Self { lo, hi, cells })
    }

    /// Cells of width about `2 p0 dp0` spanning the whole lattice dispersion.
    pub fn covering(grid: &Grid4) -> Self {
        let p0max = PI / grid.d[0];
        let pmax2: f64 = (1..4)
            .filter(|&a| grid.active(a))
            .map(|a| (PI / grid.d[a]).powi(2))
            .sum();
        let cell = 2.0 * 0.5 * p0max * grid.dp(0);
        let lo = -pmax2 * 1.0001;
        let hi = p0max * p0max * 1.0001;
        Self {
            lo,
            hi,
            cells: (((hi - lo) / cell).ceil() as usize).max(1),
        }
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.cells as f64
    }

    pub fn center(&self, c: usize) -> f64 {
        self.lo + (c as f64 + 0.5) * self.width()
    }

    pub fn cell_of(&self, m2: f64) -> Option<usize> {
        if m2 < self.lo || m2 >= self.hi {
            return None;
        }
        Some((((m2 - self.lo) / self.width()) as usize).min(self.cells - 1))
    }
}

/// Weights of a state across mass cells and `p0` signs. `p0 = 0` points are
/// counted in the `+` sector.
#[derive(Debug, Clone)]
pub struct MassSpectralDecomposition {
    pub mass_grid: MassGrid,
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    /// Densities with `sum |phi|^2 dm2 = 1` per sign (zero if the sign is empty).
    pub phi_plus: Vec<Complex64>,
    pub phi_minus: Vec<Complex64>,
    /// Squared norms of the four regions: (m2>=0,+), (m2>=0,-), (m2<0,+), (m2<0,-).
    pub regions: [f64; 4],
    /// Mean and standard deviation of `p^2` over `|Psi|^2`, per sign.
    pub moments_plus: (f64, f64),
    pub moments_minus: (f64, f64),
    state: HistoryState,
    cell: Vec<u32>,
}

fn m2_of(p: [f64; 4]) -> f64 {
    p[0] * p[0] - p[1] * p[1] - p[2] * p[2] - p[3] * p[3]
}

fn plus(p0: f64) -> bool {
    p0 >= 0.0
}

pub fn decompose(psi: &HistoryState, mass_grid: MassGrid) -> Result<MassSpectralDecomposition> {
    let g = psi.grid;
    let dv = g.p_measure();
    let mut cell = vec![u32::MAX; g.len()];
    let mut wp = vec![0.0; mass_grid.cells];
    let mut wm = vec![0.0; mass_grid.cells];
    let mut regions = [0.0; 4];
    let mut missed = 0.0;
    let mut mom = [[0.0; 3]; 2];
    for (i, a) in psi.amp.iter().enumerate() {
        let w = a.norm_sqr() * dv;
        let p = g.p_vec(i);
        let m2 = m2_of(p);
        let s = if plus(p[0]) { 0 } else { 1 };
        match mass_grid.cell_of(m2) {
            Some(c) => {
                cell[i] = c as u32;
                if s == 0 {
                    wp[c] += w;
                } else {
                    wm[c] += w;
                }
            }
            None => missed += w,
        }
        if w > 0.0 {
            regions[s + if m2 >= 0.0 { 0 } else { 2 }] += w;
            mom[s][0] += w;
            mom[s][1] += w * m2;
            mom[s][2] += w * m2 * m2;
        }
    }
    let total: f64 = regions.iter().sum();
    if missed > 0.0 {
        return Err(Error::Coverage(missed / total.max(f64::MIN_POSITIVE)));
    }
    let gp2: f64 = wp.iter().sum();
    let gm2: f64 = wm.iter().sum();
    let dens = |w: &[f64], g2: f64| -> Vec<Complex64> {
        w.iter()
            .map(|&x| {
                if g2 > 0.0 {
                    Complex64::new((x / (g2 * mass_grid.width())).sqrt(), 0.0)
                } else {
                    Complex64::default()
                }
            })
            .collect()
    };
    let moments = |m: [f64; 3]| {
        if m[0] > 0.0 {
            let mean = m[1] / m[0];
            (mean, (m[2] / m[0] - mean * mean).max(0.0).sqrt())
        } else {
            (0.0, 0.0)
        }
    };
    Ok(MassSpectralDecomposition {
        mass_grid,
        gamma_plus: gp2.sqrt(),
        gamma_minus: gm2.sqrt(),
        phi_plus: dens(&wp, gp2),
        phi_minus: dens(&wm, gm2),
        regions,
        moments_plus: moments(mom[0]),
        moments_minus: moments(mom[1]),
        state: psi.clone(),
        cell,
    })
}

impl MassSpectralDecomposition {
    /// Restriction of the state to one (cell, sign) sector.
    pub fn sector(&self, c: usize, branch: Branch) -> HistoryState {
        let g = self.state.grid;
        let mut out = HistoryState::zeros(g);
        for (i, a) in self.state.amp.iter().enumerate() {
            let p0 = g.p_vec(i)[0];
            if self.cell[i] == c as u32 && (plus(p0) == (branch == Branch::Plus)) {
                out.amp[i] = *a;
            }
        }
        out
    }

    /// Shell amplitude `a_{m2}(p)` of a sector on the spatial lattice, such
    /// that the sector is `int dm2 (2pi)^{-d/2} a_{m2}(p) delta(p^2 - m2)`.
    pub fn sector_amplitude(&self, c: usize, branch: Branch) -> Vec<Complex64> {
        let g = self.state.grid;
        let ns = g.spatial_len();
        let d = g.spatial_dim() as f64;
        let f = (2.0 * PI).powf(0.5 * d) * g.dp(0) / self.mass_grid.width();
        let mut out = vec![Complex64::default(); ns];
        for (i, a) in self.state.amp.iter().enumerate() {
            let p0 = g.p_vec(i)[0];
            if self.cell[i] == c as u32 && (plus(p0) == (branch == Branch::Plus)) {
                out[i % ns] += a * (2.0 * p0.abs() * f);
            }
        }
        out
    }

    /// Sum of all sector restrictions, assembled in one pass.
    pub fn reconstruct(&self) -> HistoryState {
        let mut out = HistoryState::zeros(self.state.grid);
        for (i, a) in self.state.amp.iter().enumerate() {
            if self.cell[i] != u32::MAX {
                out.amp[i] += a;
            }
        }
        out
    }

    /// Squared norm of one (cell, sign) sector.
    pub fn weight(&self, c: usize, branch: Branch) -> f64 {
        let (g, phi) = match branch {
            Branch::Plus => (self.gamma_plus, &self.phi_plus),
            Branch::Minus => (self.gamma_minus, &self.phi_minus),
        };
        g * g * phi[c].norm_sqr() * self.mass_grid.width()
    }

    /// Spread (standard deviation) of mass squared in one sign sector.
    pub fn width(&self, branch: Branch) -> f64 {
        match branch {
            Branch::Plus => self.moments_plus.1,
            Branch::Minus => self.moments_minus.1,
        }
    }
}
