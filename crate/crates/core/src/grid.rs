//! Truncated spacetime/momentum lattices, history states and boosts.
//!
//! Momentum amplitudes are stored in FFT order on all four axes, time
//! first. The position view uses
//! `Psi(x) = (2pi)^{-D/2} sum_p e^{-i p.x} Psi(p) prod dp` with
//! `p.x = p0 t - p.x`, where `D` counts the time axis plus the active
//! spatial axes. A spatial axis with a single point is collapsed: it carries
//! only `p = 0`, no measure factor and no `2pi` factor.

use crate::error::{Error, Result};
use crate::fft::fft_axis;
use crate::kernel::ShellTag;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftDirection;
use std::f64::consts::PI;

/// Point counts and spacings of a 4D lattice (axis 0 is time).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid4 {
    pub n: [usize; 4],
    pub d: [f64; 4],
}

impl Grid4 {
    pub fn new(n_t: usize, n_x: [usize; 3], dt: f64, dx: [f64; 3]) -> Result<Self> {
        let n = [n_t, n_x[0], n_x[1], n_x[2]];
        let d = [dt, dx[0], dx[1], dx[2]];
        if n_t < 2 {
            return Err(Error::InvalidGrid(format!("n_t = {n_t} < 2")));
        }
        if let Some(k) = n.iter().position(|&k| k == 0) {
            return Err(Error::InvalidGrid(format!("axis {k} has no points")));
        }
        if let Some(k) = d.iter().position(|&h| !(h > 0.0 && h.is_finite())) {
            return Err(Error::InvalidGrid(format!(
                "spacing on axis {k} is {}",
                d[k]
            )));
        }
        Ok(Self { n, d })
    }

    pub fn len(&self) -> usize {
        self.n.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of points on one time slice.
    pub fn spatial_len(&self) -> usize {
        self.n[1] * self.n[2] * self.n[3]
    }

    pub fn active(&self, axis: usize) -> bool {
        self.n[axis] > 1
    }

    /// Number of active spatial axes.
    pub fn spatial_dim(&self) -> usize {
        (1..4).filter(|&a| self.active(a)).count()
    }

    pub fn dp(&self, axis: usize) -> f64 {
        2.0 * PI / (self.n[axis] as f64 * self.d[axis])
    }

    /// Signed integer wave number of FFT-ordered index `i`.
    pub fn wavenumber(&self, axis: usize, i: usize) -> i64 {
        let n = self.n[axis];
        if i < n.div_ceil(2) {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }

    pub fn p_at(&self, axis: usize, i: usize) -> f64 {
        if !self.active(axis) {
            return 0.0;
        }
        self.wavenumber(axis, i) as f64 * self.dp(axis)
    }

    /// Periodic coordinate of index `i`, in the same centred order as momenta.
    pub fn x_at(&self, axis: usize, i: usize) -> f64 {
        if !self.active(axis) {
            return 0.0;
        }
        self.wavenumber(axis, i) as f64 * self.d[axis]
    }

    /// FFT-ordered index of a signed wave number, if on the lattice.
    pub fn index_of_wavenumber(&self, axis: usize, k: i64) -> Option<usize> {
        let n = self.n[axis] as i64;
        let lo = -(n / 2);
        let hi = (n - 1) / 2;
        if n == 1 {
            return (k == 0).then_some(0);
        }
        (k >= lo && k <= hi).then(|| k.rem_euclid(n) as usize)
    }

    /// Momentum cell volume `prod dp` over time and active spatial axes.
    pub fn p_measure(&self) -> f64 {
        (0..4)
            .filter(|&a| self.active(a))
            .map(|a| self.dp(a))
            .product()
    }

    pub fn x_measure(&self) -> f64 {
        (0..4)
            .filter(|&a| self.active(a))
            .map(|a| self.d[a])
            .product()
    }

    pub fn spatial_p_measure(&self) -> f64 {
        (1..4)
            .filter(|&a| self.active(a))
            .map(|a| self.dp(a))
            .product()
    }

    pub fn spatial_x_measure(&self) -> f64 {
        (1..4)
            .filter(|&a| self.active(a))
            .map(|a| self.d[a])
            .product()
    }

    pub fn t_extent(&self) -> f64 {
        self.n[0] as f64 * self.d[0]
    }

    pub fn index(&self, i: [usize; 4]) -> usize {
        ((i[0] * self.n[1] + i[1]) * self.n[2] + i[2]) * self.n[3] + i[3]
    }

    pub fn coords(&self, mut idx: usize) -> [usize; 4] {
        let mut c = [0; 4];
        for a in (0..4).rev() {
            c[a] = idx % self.n[a];
            idx /= self.n[a];
        }
        c
    }

    /// Four-momentum `(p0, px, py, pz)` of a lattice point.
    pub fn p_vec(&self, idx: usize) -> [f64; 4] {
        let c = self.coords(idx);
        [
            self.p_at(0, c[0]),
            self.p_at(1, c[1]),
            self.p_at(2, c[2]),
            self.p_at(3, c[3]),
        ]
    }

    pub fn x_vec(&self, idx: usize) -> [f64; 4] {
        let c = self.coords(idx);
        [
            self.x_at(0, c[0]),
            self.x_at(1, c[1]),
            self.x_at(2, c[2]),
            self.x_at(3, c[3]),
        ]
    }

    /// Spatial momentum of a point of a time slice.
    pub fn spatial_p(&self, sidx: usize) -> [f64; 3] {
        let p = self.p_vec(sidx);
        [p[1], p[2], p[3]]
    }

    pub fn spatial_x(&self, sidx: usize) -> [f64; 3] {
        let x = self.x_vec(sidx);
        [x[1], x[2], x[3]]
    }

    /// `(2pi)^{-D/2}` with `D` the number of active axes.
    pub fn transform_prefactor(&self) -> f64 {
        let dim = 1 + self.spatial_dim();
        (2.0 * PI).powf(-(dim as f64) / 2.0)
    }

    fn same(&self, other: &Grid4) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// Discretized history state, stored in momentum space.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryState {
    pub grid: Grid4,
    pub amp: Vec<Complex64>,
    /// Mass shell and kernel the state was built on, if any.
    pub shell: Option<ShellTag>,
}

impl HistoryState {
    pub fn zeros(grid: Grid4) -> Self {
        Self {
            grid,
            amp: vec![Complex64::default(); grid.len()],
            shell: None,
        }
    }

    pub fn from_fn<F>(grid: Grid4, f: F) -> Self
    where
        F: Fn([f64; 4]) -> Complex64 + Sync,
    {
        let amp = (0..grid.len())
            .into_par_iter()
            .map(|i| f(grid.p_vec(i)))
            .collect();
        Self {
            grid,
            amp,
            shell: None,
        }
    }

    /// A single occupied momentum cell with value `value`.
    pub fn peak(grid: Grid4, idx: usize, value: Complex64) -> Self {
        let mut s = Self::zeros(grid);
        s.amp[idx] = value;
        s
    }

    /// Event state `|x>`: amplitude `(2pi)^{-D/2} e^{i p.x}`.
    pub fn event(grid: Grid4, x: [f64; 4]) -> Self {
        let c = grid.transform_prefactor();
        Self::from_fn(grid, |p| {
            let px = p[0] * x[0] - p[1] * x[1] - p[2] * x[2] - p[3] * x[3];
            Complex64::from_polar(c, px)
        })
    }

    pub fn norm_sq(&self) -> f64 {
        self.amp.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.p_measure()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            grid: self.grid,
            amp: self.amp.iter().map(|a| a * s).collect(),
            shell: self.shell,
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.grid.same(&other.grid)?;
        Ok(Self {
            grid: self.grid,
            amp: self
                .amp
                .iter()
                .zip(&other.amp)
                .map(|(a, b)| a + b)
                .collect(),
            shell: if self.shell == other.shell {
                self.shell
            } else {
                None
            },
        })
    }

    /// Multiply pointwise by `f(p)`.
    pub fn map_p<F>(&self, f: F) -> Self
    where
        F: Fn([f64; 4], Complex64) -> Complex64 + Sync,
    {
        let g = self.grid;
        let amp = self
            .amp
            .par_iter()
            .enumerate()
            .map(|(i, &a)| f(g.p_vec(i), a))
            .collect();
        Self {
            grid: g,
            amp,
            shell: None,
        }
    }

    /// Relative L2 distance `|self - other| / |other|`.
    pub fn rel_dist(&self, other: &Self) -> f64 {
        let num: f64 = self
            .amp
            .iter()
            .zip(&other.amp)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        let den: f64 = other.amp.iter().map(|b| b.norm_sqr()).sum();
        (num / den).sqrt()
    }

    /// Position-space field `Psi(t, x)` on the lattice, in row-major order.
    pub fn to_position(&self) -> Vec<Complex64> {
        let g = self.grid;
        let mut data = self.amp.clone();
        fft_axis(&mut data, &g.n, 0, FftDirection::Forward);
        for a in 1..4 {
            fft_axis(&mut data, &g.n, a, FftDirection::Inverse);
        }
        let s = g.transform_prefactor() * g.p_measure();
        data.par_iter_mut().for_each(|v| *v *= s);
        data
    }

    /// Inverse of [`HistoryState::to_position`].
    pub fn from_position(grid: Grid4, field: &[Complex64]) -> Result<Self> {
        if field.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        let mut data = field.to_vec();
        fft_axis(&mut data, &grid.n, 0, FftDirection::Inverse);
        for a in 1..4 {
            fft_axis(&mut data, &grid.n, a, FftDirection::Forward);
        }
        let s = grid.transform_prefactor() * grid.x_measure();
        data.par_iter_mut().for_each(|v| *v *= s);
        Ok(Self {
            grid,
            amp: data,
            shell: None,
        })
    }
}

/// Boost parameters: unit direction and rapidity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rapidity {
    pub direction: [f64; 3],
    pub w: f64,
}

impl Rapidity {
    pub fn new(direction: [f64; 3], w: f64) -> Result<Self> {
        let n = direction.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !(n > 0.0) || !w.is_finite() {
            return Err(Error::Invalid("boost direction must be nonzero".into()));
        }
        Ok(Self {
            direction: direction.map(|c| c / n),
            w,
        })
    }

    pub fn along_x(w: f64) -> Self {
        Self {
            direction: [1.0, 0.0, 0.0],
            w,
        }
    }

    pub fn inverse(&self) -> Self {
        Self {
            direction: self.direction,
            w: -self.w,
        }
    }

    /// Apply the boost to a four-vector.
    pub fn apply(&self, p: [f64; 4]) -> [f64; 4] {
        let n = self.direction;
        let (ch, sh) = (self.w.cosh(), self.w.sinh());
        let par = n[0] * p[1] + n[1] * p[2] + n[2] * p[3];
        let p0 = ch * p[0] + sh * par;
        let dpar = (ch - 1.0) * par + sh * p[0];
        [
            p0,
            p[1] + dpar * n[0],
            p[2] + dpar * n[1],
            p[3] + dpar * n[2],
        ]
    }
}

fn lagrange4(f: f64) -> [f64; 4] {
    // nodes -1, 0, 1, 2
    [
        -f * (f - 1.0) * (f - 2.0) / 6.0,
        (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0,
        -(f + 1.0) * f * (f - 2.0) / 2.0,
        (f + 1.0) * f * (f - 1.0) / 6.0,
    ]
}

/// `Psi'(p) = Psi(L^{-1} p)` by cubic Lagrange interpolation on the momentum
/// lattice. Points outside the lattice read as zero.
pub fn boost(psi: &HistoryState, r: &Rapidity) -> Result<HistoryState> {
    if r.w == 0.0 {
        return Ok(psi.clone());
    }
    let g = psi.grid;
    for a in 1..4 {
        if !g.active(a) && r.direction[a - 1] != 0.0 {
            return Err(Error::Invalid(format!(
                "boost direction has a component along collapsed axis {a}"
            )));
        }
    }
    // weight carried out of range by the forward map
    let total: f64 = psi.amp.iter().map(|a| a.norm_sqr()).sum();
    let lost: f64 = crate::par_sum(psi.amp.len(), |i| {
        let a = psi.amp[i];
        if a.norm_sqr() > 0.0 && !in_lattice(&g, r.apply(g.p_vec(i))) {
            a.norm_sqr()
        } else {
            0.0
        }
    });
    let frac = if total > 0.0 { lost / total } else { 0.0 };
    if frac >= 1e-6 {
        return Err(Error::SupportEscape { fraction: frac });
    }
    let inv = r.inverse();
    let moving: Vec<usize> = (0..4)
        .filter(|&a| g.active(a) && (a == 0 || r.direction[a - 1] != 0.0))
        .collect();
    let amp = (0..g.len())
        .into_par_iter()
        .map(|i| {
            let q = inv.apply(g.p_vec(i));
            interpolate(psi, &g, &moving, g.coords(i), q)
        })
        .collect();
    Ok(HistoryState {
        grid: g,
        amp,
        shell: psi.shell,
    })
}

fn in_lattice(g: &Grid4, q: [f64; 4]) -> bool {
    (0..4).all(|a| {
        if !g.active(a) {
            return true;
        }
        let k = q[a] / g.dp(a);
        let n = g.n[a] as f64;
        k >= -(n / 2.0).floor() && k <= ((n - 1.0) / 2.0).floor()
    })
}

fn interpolate(
    psi: &HistoryState,
    g: &Grid4,
    moving: &[usize],
    base: [usize; 4],
    q: [f64; 4],
) -> Complex64 {
    let mut k0 = [0i64; 4];
    let mut w = [[0.0; 4]; 4];
    for &a in moving {
        let k = q[a] / g.dp(a);
        let fl = k.floor();
        k0[a] = fl as i64;
        w[a] = lagrange4(k - fl);
    }
    let m = moving.len();
    let mut acc = Complex64::default();
    for combo in 0..4usize.pow(m as u32) {
        let mut c = base;
        let mut wt = 1.0;
        let mut code = combo;
        let mut ok = true;
        for &a in moving {
            let o = (code % 4) as i64 - 1;
            code /= 4;
            match g.index_of_wavenumber(a, k0[a] + o) {
                Some(ix) => c[a] = ix,
                None => {
                    ok = false;
                    break;
                }
            }
            wt *= w[a][(o + 1) as usize];
        }
        if ok && wt != 0.0 {
            acc += psi.amp[g.index(c)] * wt;
        }
    }
    acc
}
