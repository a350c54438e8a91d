//! Mass projectors, projected events, the Klein-Gordon propagation
//! amplitude `D` by quadrature and by lattice sums, the convolution
//! identity and the proper-time form of the projector.
//!
//! Event states may be regulated by `e^{-eps |P0| / 2}`. The overlap of two
//! regulated events is then `D` at complex time `t - i eps`, which the
//! quadrature route evaluates directly. `eps = 0` is the bare amplitude.

use crate::error::{Error, Result};
use crate::grid::{Grid4, HistoryState};
use crate::kernel::{Branch, DeltaKernel, KernelShape, ShellTag};
use crate::quad;
use num_complex::Complex64;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::f64::consts::PI;

fn u_of(p: [f64; 4], m2: f64) -> f64 {
    p[0] * p[0] - p[1] * p[1] - p[2] * p[2] - p[3] * p[3] - m2
}

fn selected(branch: Option<Branch>, p0: f64) -> bool {
    branch.is_none_or(|b| b.contains(p0))
}

/// `Pi_{m2}` (optionally followed by `P^+-`): multiplication by
/// `delta_T(p^2 - m^2)` in momentum space.
pub fn project_mass(
    psi: &HistoryState,
    m2: f64,
    branch: Option<Branch>,
    kernel: &DeltaKernel,
) -> Result<HistoryState> {
    if let Some(tag) = psi.shell {
        if tag.kernel != *kernel {
            return Err(Error::KernelMismatch);
        }
    }
    let mut out = psi.map_p(|p, a| {
        if selected(branch, p[0]) {
            a * kernel.value(u_of(p, m2))
        } else {
            Complex64::default()
        }
    });
    out.shell = branch.map(|b| ShellTag {
        m2,
        branch: b,
        kernel: *kernel,
    });
    Ok(out)
}

/// `|Pi Pi Psi - delta_T(0) Pi Psi| / |delta_T(0) Pi Psi|`.
pub fn idempotency_defect(
    psi: &HistoryState,
    m2: f64,
    branch: Option<Branch>,
    kernel: &DeltaKernel,
) -> Result<f64> {
    let once = project_mass(psi, m2, branch, kernel)?;
    let mut untagged = once.clone();
    untagged.shell = None;
    let twice = project_mass(&untagged, m2, branch, kernel)?;
    let ref_ = once.scale(Complex64::new(kernel.delta0(), 0.0));
    Ok(twice.rel_dist(&ref_))
}

/// Event state with the `e^{-eps |p0| / 2}` regulator.
pub fn regulated_event(grid: Grid4, x: [f64; 4], eps: f64) -> HistoryState {
    HistoryState::event(grid, x).map_p(|p, a| a * (-0.5 * eps * p[0].abs()).exp())
}

/// Options for the quadrature route.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    /// Number of spatial dimensions, 1 or 3.
    pub dim: usize,
    /// Imaginary time shift of the regulated amplitude.
    pub eps: f64,
    /// Absolute tolerance.
    pub tol: f64,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            dim: 3,
            eps: 0.0,
            tol: 1e-8,
        }
    }
}

/// `D(y - x) = int d^3p / ((2pi)^3 2E) e^{-iEt + i p.r}` for `sep = y - x`,
/// by radial quadrature with default options.
pub fn propagator_d(sep: [f64; 4], m: f64) -> Result<Complex64> {
    propagator_d_with(sep, m, &QuadOptions::default())
}

pub fn propagator_d_with(sep: [f64; 4], m: f64, opt: &QuadOptions) -> Result<Complex64> {
    if !(m > 0.0) {
        return Err(Error::Invalid("mass must be positive".into()));
    }
    let t = sep[0];
    let r = (sep[1] * sep[1] + sep[2] * sep[2] + sep[3] * sep[3]).sqrt();
    match (opt.dim, opt.eps > 0.0) {
        (3, true) | (1, true) => regulated_radial(t, r, m, opt),
        (3, false) => bare_3d(t, r, m, opt.tol),
        (1, false) => Err(Error::Invalid(
            "bare 1+1D amplitude is not implemented; use eps > 0".into(),
        )),
        _ => Err(Error::Invalid(format!("unsupported dimension {}", opt.dim))),
    }
}

fn regulated_radial(t: f64, r: f64, m: f64, opt: &QuadOptions) -> Result<Complex64> {
    let z = Complex64::new(opt.eps, t);
    let pmax = (60.0 / opt.eps).max(10.0 * m);
    let panels = ((pmax * (r + t.abs() + 1.0) / PI).ceil() as usize).max(16);
    let max_panels = 64 * panels + 10_000;
    match opt.dim {
        3 if r > 0.0 => {
            let f = |p: f64| {
                let e = (p * p + m * m).sqrt();
                (-z * e).exp() * (p * (p * r).sin() / e)
            };
            let (v, _) = quad::integrate(
                f,
                0.0,
                pmax,
                panels,
                opt.tol * 4.0 * PI * PI * r,
                max_panels,
            )?;
            Ok(v / (4.0 * PI * PI * r))
        }
        3 => {
            let f = |p: f64| {
                let e = (p * p + m * m).sqrt();
                (-z * e).exp() * (p * p / e)
            };
            let (v, _) =
                quad::integrate(f, 0.0, pmax, panels, opt.tol * 4.0 * PI * PI, max_panels)?;
            Ok(v / (4.0 * PI * PI))
        }
        _ => {
            let f = |p: f64| {
                let e = (p * p + m * m).sqrt();
                (-z * e).exp() * ((p * r).cos() / e)
            };
            let (v, _) = quad::integrate(f, 0.0, pmax, panels, opt.tol * 2.0 * PI, max_panels)?;
            Ok(v / (2.0 * PI))
        }
    }
}

fn bare_3d(t: f64, r: f64, m: f64, tol: f64) -> Result<Complex64> {
    let s2 = t * t - r * r;
    if s2.abs() <= 1e-12 * (t * t + r * r) || (t == 0.0 && r == 0.0) {
        return Err(Error::Divergent);
    }
    if s2 < 0.0 {
        let sigma = (-s2).sqrt();
        Ok(Complex64::new(spacelike(sigma, m, tol)?, 0.0))
    } else {
        let tau = s2.sqrt();
        let d = timelike(tau, m, tol)?;
        Ok(if t > 0.0 { d } else { d.conj() })
    }
}

/// `D(0, sigma) = (1/(4 pi^2 sigma)) [1/sigma - int_0^inf (1 - p/E) sin(p sigma) dp]`.
/// The oscillatory tail is summed half-period by half-period and the
/// alternating partial sums are Euler-averaged.
fn spacelike(sigma: f64, m: f64, tol: f64) -> Result<f64> {
    let f = |p: f64| {
        let e = (p * p + m * m).sqrt();
        // 1 - p/E without cancellation
        let g = m * m / (e * (e + p));
        Complex64::new(g * (p * sigma).sin(), 0.0)
    };
    let half = PI / sigma;
    // non-asymptotic part: up to a zero of sin beyond 30 m
    let k0 = ((30.0 * m) / half).ceil().max(1.0) as usize;
    let scale = 4.0 * PI * PI * sigma * sigma;
    let (head, _) = quad::integrate(f, 0.0, k0 as f64 * half, k0, tol * scale * 0.1, 200_000)?;
    let nterms = 40;
    let mut partial = Vec::with_capacity(nterms);
    let mut acc = head.re;
    for k in 0..nterms {
        let a = (k0 + k) as f64 * half;
        let (v, _) = quad::integrate(f, a, a + half, 1, tol * scale * 1e-3, 1000)?;
        acc += v.re;
        partial.push(acc);
    }
    // repeated averaging of consecutive partial sums
    let mut s = partial;
    while s.len() > 1 {
        s = s.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    }
    let integral = s[0];
    Ok((1.0 / sigma - integral) / (4.0 * PI * PI * sigma))
}

/// Rest-frame amplitude for proper time `tau > 0`, after rotating the radial
/// contour: `D = m^2/(4 pi^2) [ i int_0^{pi/2} sin^2(f) e^{-i m tau cos f} df
/// - int_0^inf cosh^2(u) e^{-m tau sinh u} du ]`.
fn timelike(tau: f64, m: f64, tol: f64) -> Result<Complex64> {
    let x = m * tau;
    let scale = 4.0 * PI * PI / (m * m);
    let osc = |f: f64| Complex64::from_polar(f.sin().powi(2), -x * f.cos());
    let panels = ((x / PI).ceil() as usize).max(4);
    let (a, _) = quad::integrate(osc, 0.0, 0.5 * PI, panels, tol * scale * 0.5, 100_000)?;
    // integrand below 1e-300 beyond u where sinh u = 700/x
    let umax = (700.0 / x).asinh() + 1.0;
    let dec = |u: f64| Complex64::new(u.cosh().powi(2) * (-x * u.sinh()).exp(), 0.0);
    let (b, _) = quad::integrate(dec, 0.0, umax, 32, tol * scale * 0.5, 100_000)?;
    Ok(Complex64::new(m * m / (4.0 * PI * PI), 0.0) * (Complex64::new(0.0, 1.0) * a - b))
}

/// Lattice evaluation of `2pi <y|Pi^+_{m2}|x>` between regulated events.
///
/// The lattice may be far too large to store; sums run over momentum
/// points directly. Spatial momenta are grouped by `|p|^2`, and for each
/// group the `p0` sum covers only the cells inside the kernel cutoff.
#[derive(Debug, Clone)]
pub struct LatticePropagator {
    pub grid: Grid4,
    pub kernel: DeltaKernel,
    pub m2: f64,
    pub eps: f64,
    groups: Vec<(f64, Vec<usize>)>,
}

impl LatticePropagator {
    pub fn new(grid: Grid4, kernel: DeltaKernel, m2: f64, eps: f64) -> Result<Self> {
        if kernel.shape != KernelShape::Gaussian {
            return Err(Error::Invalid(
                "lattice propagator needs a kernel with a finite cutoff".into(),
            ));
        }
        if !(eps > 0.0) {
            return Err(Error::Invalid("lattice propagator needs eps > 0".into()));
        }
        let mut map: BTreeMap<u64, (f64, Vec<usize>)> = BTreeMap::new();
        for j in 0..grid.spatial_len() {
            let p = grid.spatial_p(j);
            let p2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
            let key = (p2 * 1e9).round() as u64;
            map.entry(key).or_insert_with(|| (p2, Vec::new())).1.push(j);
        }
        let groups: Vec<_> = map.into_values().collect();
        // resolution: the band must be resolved wherever the regulator leaves
        // more than 1e-10 of the weight
        let e_cut = 23.0 / eps;
        let p0max = PI / grid.d[0];
        let e_top = groups
            .iter()
            .map(|g| (g.0 + m2).sqrt())
            .fold(0.0, f64::max)
            .min(e_cut);
        if kernel.p0_width(e_top) < 1.5 * grid.dp(0) {
            return Err(Error::Resolution(format!(
                "band at E = {e_top:.2} spans fewer than 1.5 p0 cells"
            )));
        }
        if e_top + kernel.cutoff() / (2.0 * e_top) > p0max && (-eps * p0max).exp() > 1e-10 {
            return Err(Error::Resolution(format!(
                "p0 lattice edge {p0max:.2} cuts the regulated band"
            )));
        }
        Ok(Self {
            grid,
            kernel,
            m2,
            eps,
            groups,
        })
    }

    /// `g(t) = sum_{p0 > 0} dp0 delta_T(p0^2 - E^2) e^{-eps p0} e^{-i p0 t}`.
    fn band_sum(&self, e2: f64, t: f64) -> Complex64 {
        let dp0 = self.grid.dp(0);
        let cut = self.kernel.cutoff();
        let lo = (e2 - cut).max(0.0).sqrt();
        let hi = (e2 + cut).sqrt().min(PI / self.grid.d[0]);
        let k_lo = (lo / dp0).floor().max(1.0) as i64;
        let k_hi = (hi / dp0).ceil() as i64;
        let mut s = Complex64::default();
        for k in k_lo..=k_hi {
            let p0 = k as f64 * dp0;
            if self.grid.index_of_wavenumber(0, k).is_none() {
                continue;
            }
            let w = self.kernel.value(p0 * p0 - e2) * (-self.eps * p0).exp();
            s += Complex64::from_polar(w, -p0 * t);
        }
        s * dp0
    }

    pub fn value(&self, sep: [f64; 4]) -> Complex64 {
        let g = &self.grid;
        let dim = 1 + g.spatial_dim();
        let pre = 2.0 * PI * (2.0 * PI).powi(-(dim as i32)) * g.spatial_p_measure();
        let s: Complex64 = crate::par_sum(self.groups.len(), |gi| {
            let (p2, members) = &self.groups[gi];
            let b = self.band_sum(p2 + self.m2, sep[0]);
            if b == Complex64::default() {
                return b;
            }
            let mut acc = Complex64::default();
            for &j in members {
                let p = g.spatial_p(j);
                let ph = p[0] * sep[1] + p[1] * sep[2] + p[2] * sep[3];
                acc += Complex64::from_polar(1.0, ph);
            }
            b * acc
        });
        s * pre
    }
}

/// Result of the convolution identity check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvolutionReport {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub rel_err: f64,
}

/// Lattice field `D_lat(z) = 2pi <z|Pi^+_{m2}|0>_eps` over the whole grid.
pub fn lattice_d_field(
    grid: &Grid4,
    m2: f64,
    kernel: &DeltaKernel,
    eps: f64,
) -> Result<Vec<Complex64>> {
    let ev = regulated_event(*grid, [0.0; 4], 2.0 * eps);
    let pr = project_mass(&ev, m2, Some(Branch::Plus), kernel)?;
    let mut f = pr.to_position();
    f.par_iter_mut().for_each(|v| *v *= 2.0 * PI);
    Ok(f)
}

fn lattice_index(grid: &Grid4, x: [f64; 4]) -> Result<[i64; 4]> {
    let mut k = [0i64; 4];
    for a in 0..4 {
        if !grid.active(a) {
            if x[a] != 0.0 {
                return Err(Error::OffLattice(x[a]));
            }
            continue;
        }
        let v = x[a] / grid.d[a];
        if (v - v.round()).abs() > 1e-9 {
            return Err(Error::OffLattice(x[a]));
        }
        k[a] = v.round() as i64;
    }
    Ok(k)
}

/// `int d^4z D_{m'2}(y - z) D_{m2}(z - x)` as a direct lattice sum against
/// `2pi delta_T(m2 - m'2) D_{mbar}(y - x)` from quadrature, where the events
/// carry the `eps` regulator (so the right side is regulated by `2 eps`)
/// and `mbar^2` is the mean of the two masses squared.
pub fn convolution_identity_check(
    x: [f64; 4],
    y: [f64; 4],
    m2: f64,
    m2p: f64,
    kernel: &DeltaKernel,
    grid: &Grid4,
    eps: f64,
) -> Result<ConvolutionReport> {
    if kernel.shape != KernelShape::Gaussian {
        return Err(Error::Invalid(
            "convolution check needs the Gaussian kernel".into(),
        ));
    }
    let kx = lattice_index(grid, x)?;
    let ky = lattice_index(grid, y)?;
    let d = lattice_d_field(grid, m2, kernel, eps)?;
    let dp = if m2p == m2 {
        d.clone()
    } else {
        lattice_d_field(grid, m2p, kernel, eps)?
    };
    for f in [&d, &dp] {
        let leak = boundary_ratio(grid, f);
        if leak > 1e-4 {
            return Err(Error::BoundaryLeak(leak));
        }
    }
    let g = *grid;
    let shifted = |k: [i64; 4], c: [usize; 4], sign: i64| -> usize {
        let mut i = [0usize; 4];
        for a in 0..4 {
            let n = g.n[a] as i64;
            i[a] = (sign * (k[a] - c[a] as i64)).rem_euclid(n) as usize;
        }
        g.index(i)
    };
    let lhs: Complex64 = crate::par_sum(g.len(), |iz| {
        let c = g.coords(iz);
        // y - z and z - x
        dp[shifted(ky, c, 1)] * d[shifted(kx, c, -1)]
    }) * g.x_measure();
    let sep = [y[0] - x[0], y[1] - x[1], y[2] - x[2], y[3] - x[3]];
    let mbar = (0.5 * (m2 + m2p)).sqrt();
    let opt = QuadOptions {
        dim: g.spatial_dim(),
        eps: 2.0 * eps,
        tol: 1e-12,
    };
    let rhs = propagator_d_with(sep, mbar, &opt)? * (2.0 * PI * kernel.overlap(m2 - m2p));
    Ok(ConvolutionReport {
        lhs,
        rhs,
        rel_err: (lhs - rhs).norm() / rhs.norm(),
    })
}

fn boundary_ratio(grid: &Grid4, f: &[Complex64]) -> f64 {
    let peak = f.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut edge: f64 = 0.0;
    for (i, v) in f.iter().enumerate() {
        let c = grid.coords(i);
        if (0..4).any(|a| grid.active(a) && c[a] == grid.n[a] / 2) {
            edge = edge.max(v.norm());
        }
    }
    edge / peak
}

/// `(2pi)^{-1} int dtau w(tau) e^{i tau (J - m2)} Psi` with composite
/// 16-point Gauss-Legendre panels over `[-tau_max, tau_max]`, where `w` is
/// the window of `kernel`. With `n_tau = 1` the rule is the single midpoint.
pub fn proper_time_projector(
    psi: &HistoryState,
    m2: f64,
    tau_max: f64,
    n_tau: usize,
    kernel: &DeltaKernel,
) -> Result<HistoryState> {
    proper_time_core(psi, m2, -tau_max, tau_max, n_tau, kernel, 0.0)
}

/// Experimental: the half-range `tau > 0` integral with a fixed `1e-3`
/// softening `e^{-1e-3 tau}`, a Feynman-like resolvent.
pub fn proper_time_half_range(
    psi: &HistoryState,
    m2: f64,
    tau_max: f64,
    n_tau: usize,
) -> Result<HistoryState> {
    proper_time_core(
        psi,
        m2,
        0.0,
        tau_max,
        n_tau,
        &DeltaKernel::sinc(2.0 * tau_max),
        1e-3,
    )
}

fn proper_time_core(
    psi: &HistoryState,
    m2: f64,
    a: f64,
    b: f64,
    n_tau: usize,
    kern: &DeltaKernel,
    soft: f64,
) -> Result<HistoryState> {
    if n_tau == 0 || !(b > a) {
        return Err(Error::Invalid(
            "need n_tau >= 1 and a nonempty tau range".into(),
        ));
    }
    let g = psi.grid;
    let (nodes, weights) = if n_tau == 1 {
        (vec![0.5 * (a + b)], vec![b - a])
    } else {
        let per = n_tau.min(16);
        let panels = n_tau.div_ceil(16);
        let (x, w) = quad::gauss_legendre(per);
        let h = (b - a) / panels as f64;
        let rho = psi
            .amp
            .iter()
            .enumerate()
            .filter(|(_, v)| v.norm_sqr() > 0.0)
            .map(|(i, _)| u_of(g.p_vec(i), m2).abs())
            .fold(0.0, f64::max);
        if h * rho > 4.0 * PI && per == 16 || per < 16 && h * rho > per as f64 {
            return Err(Error::Aliasing(format!(
                "panel phase {:.2} exceeds the rule's range",
                h * rho
            )));
        }
        let mut nodes = Vec::with_capacity(panels * per);
        let mut weights = Vec::with_capacity(panels * per);
        for k in 0..panels {
            let c = a + (k as f64 + 0.5) * h;
            for j in 0..per {
                nodes.push(c + 0.5 * h * x[j]);
                weights.push(0.5 * h * w[j]);
            }
        }
        (nodes, weights)
    };
    let coef: Vec<f64> = nodes
        .iter()
        .zip(&weights)
        .map(|(&t, &w)| w * kern.window(t) * (-soft * t).exp() / (2.0 * PI))
        .collect();
    let mut out = psi.map_p(|p, v| {
        if v.norm_sqr() == 0.0 {
            return Complex64::default();
        }
        let u = u_of(p, m2);
        let s: Complex64 = nodes
            .iter()
            .zip(&coef)
            .map(|(&t, &c)| Complex64::from_polar(c, t * u))
            .sum();
        v * s
    });
    out.shell = None;
    Ok(out)
}
