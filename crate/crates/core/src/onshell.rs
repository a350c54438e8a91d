//! Fixed-mass history states, the Wigner correspondence, conditioned
//! (fixed-time) states and the Stueckelberg stationarity check.

use crate::error::{Error, Result};
use crate::fft::spatial_to_position;
use crate::grid::{boost, Grid4, HistoryState, Rapidity};
use crate::kernel::{Branch, DeltaKernel, ShellTag};
use crate::products::Slice;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// How the shell amplitude `a(p)` is scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// `sum d^dp |a|^2 / ((2pi)^d 2E) = 1`, i.e. `|Q| = 1`.
    InvariantM2,
    /// `|Q| = 2m`, so the density `j0 / 2m` integrates to one.
    InvariantM,
    /// Use `a` as given.
    None,
}

/// Mass squared, branch and shell amplitude on the spatial lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct OnShellSpec {
    pub m2: f64,
    pub branch: Branch,
    pub a: Vec<Complex64>,
    pub norm: Normalization,
}

pub fn energy(m2: f64, p: [f64; 3]) -> f64 {
    (p[0] * p[0] + p[1] * p[1] + p[2] * p[2] + m2).sqrt()
}

/// `sum d^dp |a|^2 / ((2pi)^d 2E)`.
pub fn invariant_norm(grid: &Grid4, m2: f64, a: &[Complex64]) -> f64 {
    let d = grid.spatial_dim() as f64;
    let s: f64 = a
        .iter()
        .enumerate()
        .filter(|(_, v)| v.norm_sqr() > 0.0)
        .map(|(j, v)| v.norm_sqr() / (2.0 * energy(m2, grid.spatial_p(j))))
        .sum();
    s * grid.spatial_p_measure() / (2.0 * PI).powf(d)
}

/// Sample `f(p)` on the spatial lattice of `grid`.
pub fn sample_spatial<F: Fn([f64; 3]) -> Complex64>(grid: &Grid4, f: F) -> Vec<Complex64> {
    (0..grid.spatial_len())
        .map(|j| f(grid.spatial_p(j)))
        .collect()
}

/// Gaussian shell amplitude `exp(-|p - p_c|^2 / (4 sigma^2))` on the
/// spatial lattice.
pub fn gaussian_amplitude(grid: &Grid4, center: [f64; 3], sigma: f64) -> Vec<Complex64> {
    sample_spatial(grid, |p| {
        let r2: f64 = (0..3).map(|k| (p[k] - center[k]).powi(2)).sum();
        Complex64::new((-r2 / (4.0 * sigma * sigma)).exp(), 0.0)
    })
}

impl OnShellSpec {
    pub fn new(m2: f64, branch: Branch, a: Vec<Complex64>, norm: Normalization) -> Self {
        Self {
            m2,
            branch,
            a,
            norm,
        }
    }

    /// Amplitude after applying the normalization convention.
    pub fn normalized(&self, grid: &Grid4) -> Result<Vec<Complex64>> {
        let target = match self.norm {
            Normalization::None => return Ok(self.a.clone()),
            Normalization::InvariantM2 => 1.0,
            Normalization::InvariantM => {
                if self.m2 <= 0.0 {
                    return Err(Error::Invalid(
                        "invariant-m normalization needs m2 > 0".into(),
                    ));
                }
                2.0 * self.m2.sqrt()
            }
        };
        let q = invariant_norm(grid, self.m2, &self.a);
        if !(q > 0.0) {
            return Err(Error::Invalid("shell amplitude is zero".into()));
        }
        let s = (target / q).sqrt();
        Ok(self.a.iter().map(|v| v * s).collect())
    }
}

/// `Psi(p) = (2pi)^{-d/2} a(p) delta_T(p^2 - m^2) H(+-p0)`. Entries of
/// the normalized `a` with `|a|^2` below `1e-30` of the largest are dropped.
pub fn build_onshell(
    spec: &OnShellSpec,
    grid: &Grid4,
    kernel: &DeltaKernel,
) -> Result<HistoryState> {
    if spec.a.len() != grid.spatial_len() {
        return Err(Error::GridMismatch);
    }
    let mut a = spec.normalized(grid)?;
    let top = a.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
    a.iter_mut()
        .filter(|v| v.norm_sqr() <= 1e-30 * top)
        .for_each(|v| *v = Complex64::default());
    let mut e_max: f64 = 0.0;
    for (j, v) in a.iter().enumerate() {
        if v.norm_sqr() == 0.0 {
            continue;
        }
        let p = grid.spatial_p(j);
        let p2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
        if p2 + spec.m2 <= 0.0 {
            return Err(Error::Invalid(format!(
                "amplitude nonzero inside |p|^2 <= -m2 at |p|^2 = {p2}"
            )));
        }
        e_max = e_max.max((p2 + spec.m2).sqrt());
    }
    kernel.check_resolution(grid, e_max)?;
    let d = grid.spatial_dim() as f64;
    let c = (2.0 * PI).powf(-0.5 * d);
    let ns = grid.spatial_len();
    let cut = kernel.cutoff();
    let amp = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let p = grid.p_vec(i);
            let v = a[i % ns];
            if v.norm_sqr() == 0.0 || !spec.branch.contains(p[0]) {
                return Complex64::default();
            }
            let u = p[0] * p[0] - p[1] * p[1] - p[2] * p[2] - p[3] * p[3] - spec.m2;
            if u.abs() > cut {
                return Complex64::default();
            }
            v * (c * kernel.value(u))
        })
        .collect();
    Ok(HistoryState {
        grid: *grid,
        amp,
        shell: Some(ShellTag {
            m2: spec.m2,
            branch: spec.branch,
            kernel: *kernel,
        }),
    })
}

/// `|(box + m^2) Psi| / |Psi|`, evaluated spectrally.
pub fn kg_residual(psi: &HistoryState, m2: f64) -> f64 {
    let r = psi.map_p(|p, a| a * (p[0] * p[0] - p[1] * p[1] - p[2] * p[2] - p[3] * p[3] - m2));
    (r.norm_sq() / psi.norm_sq()).sqrt()
}

/// Single-particle state in `L^2(d^dp / ((2pi)^d 2E))`.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerState {
    pub grid: Grid4,
    pub m2: f64,
    pub a: Vec<Complex64>,
}

impl WignerState {
    pub fn norm(&self) -> f64 {
        invariant_norm(&self.grid, self.m2, &self.a)
    }
}

/// Shell amplitude of a positive-branch state. At each `p` the profile
/// `Psi(p0, p)` is fitted by `delta_T(u) (a + b u + c u^2)` over the band
/// `|u| <= 3 width` of the kernel, `u = p^2 - m^2`, and `a` is the on-shell
/// value. Data that is constant along the profile is reproduced exactly.
pub fn to_wigner(psi: &HistoryState) -> Result<WignerState> {
    let tag = psi
        .shell
        .ok_or_else(|| Error::Invalid("state carries no mass shell".into()))?;
    if tag.branch != Branch::Plus {
        return Err(Error::Branch);
    }
    let g = psi.grid;
    let ns = g.spatial_len();
    let d = g.spatial_dim() as f64;
    let c = (2.0 * PI).powf(0.5 * d);
    let w = tag.kernel.width();
    // normal equations per spatial point, in the scaled variable u / w
    let mut gram = vec![[0.0f64; 9]; ns];
    let mut rhs = vec![[Complex64::default(); 3]; ns];
    let mut count = vec![0usize; ns];
    for (i, v) in psi.amp.iter().enumerate() {
        let p = g.p_vec(i);
        if !tag.branch.contains(p[0]) {
            continue;
        }
        let u = p[0] * p[0] - p[1] * p[1] - p[2] * p[2] - p[3] * p[3] - tag.m2;
        if u.abs() > 3.0 * w {
            continue;
        }
        let k = tag.kernel.value(u);
        let s = u / w;
        let basis = [k, k * s, k * s * s];
        let j = i % ns;
        for r in 0..3 {
            for q in 0..3 {
                gram[j][3 * r + q] += basis[r] * basis[q];
            }
            rhs[j][r] += v * basis[r];
        }
        count[j] += 1;
    }
    let a = (0..ns)
        .map(|j| {
            let gm = &gram[j];
            let b = &rhs[j];
            if gm[0] <= 0.0 {
                return Complex64::default();
            }
            if count[j] >= 3 {
                let m = nalgebra::Matrix3::from_row_slice(gm);
                if let Some(inv) = m.try_inverse() {
                    let sol = (0..3).map(|q| inv[(0, q)] * b[q]).sum::<Complex64>();
                    return sol * c;
                }
            }
            b[0] * (c / gm[0])
        })
        .collect();
    Ok(WignerState {
        grid: g,
        m2: tag.m2,
        a,
    })
}

pub fn from_wigner(w: &WignerState, grid: &Grid4, kernel: &DeltaKernel) -> Result<HistoryState> {
    if grid.n[1..] != w.grid.n[1..] || grid.d[1..] != w.grid.d[1..] {
        return Err(Error::GridMismatch);
    }
    build_onshell(
        &OnShellSpec::new(w.m2, Branch::Plus, w.a.clone(), Normalization::None),
        grid,
        kernel,
    )
}

/// Wigner-law boost `a'(p) = a(L^{-1} p)` with `p` on the shell, by cubic
/// interpolation on the spatial lattice.
pub fn wigner_boost(w: &WignerState, r: &Rapidity) -> WignerState {
    let g = w.grid;
    let mut src = HistoryState::zeros(Grid4 {
        n: [1, g.n[1], g.n[2], g.n[3]],
        d: [1.0, g.d[1], g.d[2], g.d[3]],
    });
    src.amp.copy_from_slice(&w.a);
    let inv = r.inverse();
    let a = (0..g.spatial_len())
        .map(|j| {
            let p = g.spatial_p(j);
            let q = inv.apply([energy(w.m2, p), p[0], p[1], p[2]]);
            spatial_interp(&src, [q[1], q[2], q[3]])
        })
        .collect();
    WignerState {
        grid: g,
        m2: w.m2,
        a,
    }
}

fn spatial_interp(src: &HistoryState, q: [f64; 3]) -> Complex64 {
    let g = src.grid;
    let mut base = [0usize; 4];
    let mut acc = Complex64::default();
    let mut ks = [(0i64, [0.0; 4]); 3];
    for a in 0..3 {
        if g.active(a + 1) {
            let k = q[a] / g.dp(a + 1);
            let fl = k.floor();
            ks[a] = (fl as i64, lagrange(k - fl));
        } else {
            ks[a] = (0, [0.0, 1.0, 0.0, 0.0]);
        }
    }
    for i0 in 0..4 {
        for i1 in 0..4 {
            for i2 in 0..4 {
                let w = ks[0].1[i0] * ks[1].1[i1] * ks[2].1[i2];
                if w == 0.0 {
                    continue;
                }
                let mut ok = true;
                for (a, o) in [(0, i0), (1, i1), (2, i2)] {
                    match g.index_of_wavenumber(a + 1, ks[a].0 + o as i64 - 1) {
                        Some(ix) => base[a + 1] = ix,
                        None => ok = false,
                    }
                }
                if ok {
                    acc += src.amp[g.index(base)] * w;
                }
            }
        }
    }
    acc
}

fn lagrange(f: f64) -> [f64; 4] {
    [
        -f * (f - 1.0) * (f - 2.0) / 6.0,
        (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0,
        -(f + 1.0) * f * (f - 2.0) / 2.0,
        (f + 1.0) * f * (f - 1.0) / 6.0,
    ]
}

/// Boost in history space followed by [`to_wigner`].
pub fn boost_then_wigner(psi: &HistoryState, r: &Rapidity) -> Result<WignerState> {
    to_wigner(&boost(psi, r)?)
}

/// Time index of `t` on the lattice (periodic, centred coordinates).
pub fn time_index(grid: &Grid4, t: f64) -> Result<usize> {
    let k = t / grid.d[0];
    let kr = k.round();
    if (k - kr).abs() > 1e-9 {
        return Err(Error::OffLattice(t));
    }
    grid.index_of_wavenumber(0, kr as i64)
        .ok_or(Error::OffLattice(t))
}

/// Conditioned states `psi(t) = sqrt(2pi) <t|Psi>` with their spectral time
/// derivatives, at the requested times.
pub fn conditioned_states(psi: &HistoryState, times: &[f64]) -> Result<Vec<Slice>> {
    let g = psi.grid;
    let idx = times
        .iter()
        .map(|&t| time_index(&g, t))
        .collect::<Result<Vec<_>>>()?;
    let f = psi.to_position();
    let df = psi
        .map_p(|p, a| a * Complex64::new(0.0, -p[0]))
        .to_position();
    let ns = g.spatial_len();
    let r = (2.0 * PI).sqrt();
    Ok(idx
        .iter()
        .zip(times)
        .map(|(&it, &t)| Slice {
            grid: g,
            t,
            psi: f[it * ns..(it + 1) * ns].iter().map(|v| v * r).collect(),
            dt_psi: df[it * ns..(it + 1) * ns].iter().map(|v| v * r).collect(),
        })
        .collect())
}

pub fn conditioned_state(psi: &HistoryState, t: f64) -> Result<Slice> {
    Ok(conditioned_states(psi, &[t])?.remove(0))
}

/// Exact free evolution of a shell amplitude:
/// `psi(t, x) = (2pi)^{-d} sum d^dp a(p)/(2E) e^{-+iEt + ip.x}`.
pub fn free_evolution(grid: &Grid4, m2: f64, branch: Branch, a: &[Complex64], t: f64) -> Slice {
    let d = grid.spatial_dim() as f64;
    let c = (2.0 * PI).powf(-0.5 * d);
    let s = branch.sign();
    let mut f = vec![Complex64::default(); a.len()];
    let mut df = vec![Complex64::default(); a.len()];
    for (j, v) in a.iter().enumerate() {
        if v.norm_sqr() == 0.0 {
            continue;
        }
        let e = energy(m2, grid.spatial_p(j));
        let ph = Complex64::from_polar(c / (2.0 * e), -s * e * t);
        f[j] = v * ph;
        df[j] = v * ph * Complex64::new(0.0, -s * e);
    }
    Slice {
        grid: *grid,
        t,
        psi: spatial_to_position(grid, &f),
        dt_psi: spatial_to_position(grid, &df),
    }
}

/// Residuals of the Stueckelberg stationarity check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StueckelbergReport {
    /// `|R Psi - (m^2/2) Psi| / |Psi|` with `R = P^mu P_mu / 2`.
    pub generator: f64,
    /// `max_tau |e^{-iR tau} Psi - e^{-i m^2 tau/2} Psi| / |Psi|`.
    pub evolution: f64,
}

pub fn stueckelberg_check(psi: &HistoryState, m2: f64, taus: &[f64]) -> StueckelbergReport {
    let generator = 0.5 * kg_residual(psi, m2);
    let n = psi.norm_sq();
    let evolution = taus
        .iter()
        .map(|&tau| {
            let g = psi.grid;
            let s: f64 = psi
                .amp
                .iter()
                .enumerate()
                .map(|(i, a)| {
                    let p = g.p_vec(i);
                    let r = 0.5 * (p[0] * p[0] - p[1] * p[1] - p[2] * p[2] - p[3] * p[3]);
                    (a * (Complex64::from_polar(1.0, -r * tau)
                        - Complex64::from_polar(1.0, -0.5 * m2 * tau)))
                    .norm_sqr()
                })
                .sum();
            (s * g.p_measure() / n).sqrt()
        })
        .fold(0.0, f64::max);
    StueckelbergReport {
        generator,
        evolution,
    }
}
