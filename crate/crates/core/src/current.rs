//! Klein-Gordon current `j^mu = i (phi* D^mu psi - psi (D^mu phi)*)`, its
//! divergence identity between different masses, and the two evaluations
//! of the gauged charge on a time slice.
//!
//! `D_mu = d_mu + i e A_mu`; with the mostly-minus metric `D^0 = D_0` and
//! `D^k = -D_k`.

use crate::error::{Error, Result};
use crate::extfield::{ExternalField, ModeSolution};
use crate::fft::spatial_to_position;
use crate::grid::{Grid4, HistoryState};
use crate::products::{kg_product_gauged, Slice};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// How derivatives on the position lattice are taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Deriv {
    Spectral,
    /// Second-order centred differences with periodic wrap.
    Centered,
}

/// Covariant components `A_mu` sampled on every point of a 4D lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct Gauge {
    pub e: f64,
    pub a: [Vec<f64>; 4],
}

impl Gauge {
    pub fn from_fn<F: Fn([f64; 4]) -> [f64; 4]>(grid: &Grid4, e: f64, f: F) -> Self {
        let vals: Vec<[f64; 4]> = (0..grid.len()).map(|i| f(grid.x_vec(i))).collect();
        let a = std::array::from_fn(|mu| vals.iter().map(|v| v[mu]).collect());
        Self { e, a }
    }

    /// Static line field placed on the first spatial axis, using the same
    /// point layout as [`crate::extfield::mode_history`].
    pub fn from_field(field: &ExternalField, grid: &Grid4) -> Result<Self> {
        let a0 = field.embed_real(&field.a0, grid)?;
        let ax = field.embed_real(&field.ax, grid)?;
        let ns = grid.spatial_len();
        let a0: Vec<f64> = (0..grid.len()).map(|i| a0[i % ns]).collect();
        let ax: Vec<f64> = (0..grid.len()).map(|i| ax[i % ns]).collect();
        Ok(Self {
            e: field.e,
            a: [a0, ax, vec![0.0; grid.len()], vec![0.0; grid.len()]],
        })
    }
}

fn derivative(grid: &Grid4, f: &[Complex64], axis: usize, how: Deriv) -> Vec<Complex64> {
    if !grid.active(axis) {
        return vec![Complex64::default(); f.len()];
    }
    match how {
        Deriv::Spectral => {
            let s = if axis == 0 { -1.0 } else { 1.0 };
            let h = HistoryState::from_position(*grid, f).expect("field on grid");
            h.map_p(|p, a| a * Complex64::new(0.0, s * p[axis]))
                .to_position()
        }
        Deriv::Centered => {
            let n = grid.n[axis];
            let stride: usize = grid.n[axis + 1..].iter().product();
            let inv = 0.5 / grid.d[axis];
            (0..f.len())
                .into_par_iter()
                .map(|i| {
                    let k = (i / stride) % n;
                    let base = i - k * stride;
                    let up = base + ((k + 1) % n) * stride;
                    let dn = base + ((k + n - 1) % n) * stride;
                    (f[up] - f[dn]) * inv
                })
                .collect()
        }
    }
}

fn covariant(
    grid: &Grid4,
    f: &[Complex64],
    gauge: Option<&Gauge>,
    how: Deriv,
) -> [Vec<Complex64>; 4] {
    std::array::from_fn(|mu| {
        let mut d = derivative(grid, f, mu, how);
        if let Some(g) = gauge {
            d.par_iter_mut()
                .zip(f)
                .zip(&g.a[mu])
                .for_each(|((d, v), a)| *d += I * g.e * a * v);
        }
        d
    })
}

/// `j^mu` on the position lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct CurrentField {
    pub grid: Grid4,
    pub j: [Vec<Complex64>; 4],
}

fn check_gauge(grid: &Grid4, gauge: Option<&Gauge>) -> Result<()> {
    match gauge {
        Some(g) if g.a.iter().any(|a| a.len() != grid.len()) => Err(Error::GridMismatch),
        _ => Ok(()),
    }
}

fn current_from_fields(
    grid: &Grid4,
    f: &[Complex64],
    g: &[Complex64],
    gauge: Option<&Gauge>,
    how: Deriv,
) -> CurrentField {
    let df = covariant(grid, f, gauge, how);
    let dg = covariant(grid, g, gauge, how);
    let j = std::array::from_fn(|mu| {
        let s = if mu == 0 { 1.0 } else { -1.0 };
        (0..f.len())
            .into_par_iter()
            .map(|i| I * s * (f[i].conj() * dg[mu][i] - g[i] * df[mu][i].conj()))
            .collect()
    });
    CurrentField { grid: *grid, j }
}

pub fn current_density(
    phi: &HistoryState,
    psi: &HistoryState,
    gauge: Option<&Gauge>,
    how: Deriv,
) -> Result<CurrentField> {
    if phi.grid != psi.grid {
        return Err(Error::GridMismatch);
    }
    check_gauge(&psi.grid, gauge)?;
    Ok(current_from_fields(
        &psi.grid,
        &phi.to_position(),
        &psi.to_position(),
        gauge,
        how,
    ))
}

impl CurrentField {
    /// `d_mu j^mu` by the given route.
    pub fn divergence(&self, how: Deriv) -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); self.grid.len()];
        for mu in 0..4 {
            let d = derivative(&self.grid, &self.j[mu], mu, how);
            out.par_iter_mut().zip(&d).for_each(|(o, v)| *o += v);
        }
        out
    }

    /// `int j^0 d^dx` on the slice at time index `it`.
    pub fn charge(&self, it: usize) -> Complex64 {
        let ns = self.grid.spatial_len();
        self.j[0][it * ns..(it + 1) * ns].iter().sum::<Complex64>() * self.grid.spatial_x_measure()
    }
}

/// `max |D^mu D_mu psi + m2 psi| / (max(1, m2) max |psi|)` with spectral derivatives.
pub fn kg_operator_residual(psi: &HistoryState, m2: f64, gauge: Option<&Gauge>) -> Result<f64> {
    check_gauge(&psi.grid, gauge)?;
    let g = &psi.grid;
    let f = psi.to_position();
    let d = covariant(g, &f, gauge, Deriv::Spectral);
    let mut r: Vec<Complex64> = f.iter().map(|v| v * m2).collect();
    for mu in 0..4 {
        let s = if mu == 0 { 1.0 } else { -1.0 };
        let mut dd = derivative(g, &d[mu], mu, Deriv::Spectral);
        if let Some(ga) = gauge {
            dd.iter_mut()
                .zip(&d[mu])
                .zip(&ga.a[mu])
                .for_each(|((x, v), a)| *x += I * ga.e * a * v);
        }
        r.iter_mut().zip(&dd).for_each(|(r, v)| *r += v * s);
    }
    let top = f.iter().map(|v| v.norm()).fold(0.0, f64::max);
    Ok(r.iter().map(|v| v.norm()).fold(0.0, f64::max) / (m2.abs().max(1.0) * top))
}

/// Residual of `d_mu j^mu(phi, psi) = i (m'^2 - m^2) psi phi*`.
#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceReport {
    pub residual: Vec<Complex64>,
    /// Largest residual over `max |phi| max |psi| max(1, m^2, m'^2)`.
    pub max_err: f64,
}

pub fn divergence_identity_check(
    phi: &HistoryState,
    m2p: f64,
    psi: &HistoryState,
    m2: f64,
    gauge: Option<&Gauge>,
    how: Deriv,
) -> Result<DivergenceReport> {
    if phi.grid != psi.grid {
        return Err(Error::GridMismatch);
    }
    for (s, m) in [(phi, m2p), (psi, m2)] {
        let r = kg_operator_residual(s, m, gauge)?;
        if r > 1e-6 {
            return Err(Error::NotEigenmode(r));
        }
    }
    let g = &psi.grid;
    let (f, h) = (phi.to_position(), psi.to_position());
    let div = current_from_fields(g, &f, &h, gauge, how).divergence(how);
    let residual: Vec<Complex64> = (0..g.len())
        .map(|i| div[i] - I * (m2p - m2) * h[i] * f[i].conj())
        .collect();
    let top = |v: &[Complex64]| v.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let scale = top(&f) * top(&h) * m2.abs().max(m2p.abs()).max(1.0);
    let max_err = top(&residual) / scale;
    Ok(DivergenceReport { residual, max_err })
}

/// The gauged charge at time `t` evaluated from conditioned slices and from
/// the operator form `2pi <Phi| Pi(t)(P0 - eA0) + (P0 - eA0) Pi(t) |Psi>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChargeRoutes {
    pub direct: Complex64,
    pub operator_form: Complex64,
}

/// `g(p) = (2pi)^{-1/2} sum_p0 e^{-i p0 t} f(p0, p) dp0` for one slice.
fn time_projection(psi: &HistoryState, t: f64, weight: impl Fn(f64) -> f64) -> Vec<Complex64> {
    let g = psi.grid;
    let ns = g.spatial_len();
    let c = g.dp(0) / (2.0 * PI).sqrt();
    let mut out = vec![Complex64::default(); ns];
    for it in 0..g.n[0] {
        let p0 = g.p_at(0, it);
        let ph = Complex64::from_polar(c * weight(p0), -p0 * t);
        for (o, a) in out.iter_mut().zip(&psi.amp[it * ns..(it + 1) * ns]) {
            *o += a * ph;
        }
    }
    out
}

/// `a0` holds `A0` on one slice (length `spatial_len`); `t` may be any real time.
pub fn qa_operator_form_check(
    phi: &HistoryState,
    psi: &HistoryState,
    t: f64,
    e: f64,
    a0: &[f64],
) -> Result<ChargeRoutes> {
    if phi.grid != psi.grid || a0.len() != psi.grid.spatial_len() {
        return Err(Error::GridMismatch);
    }
    let g = psi.grid;
    let dx = g.spatial_p_measure();
    let dot = |a: &[Complex64], b: &[Complex64]| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.conj() * y)
            .sum::<Complex64>()
    };
    let (f, f0) = (
        time_projection(phi, t, |_| 1.0),
        time_projection(phi, t, |p0| p0),
    );
    let (h, h0) = (
        time_projection(psi, t, |_| 1.0),
        time_projection(psi, t, |p0| p0),
    );
    let (fx, hx) = (spatial_to_position(&g, &f), spatial_to_position(&g, &h));
    let pot: Complex64 = fx
        .iter()
        .zip(&hx)
        .zip(a0)
        .map(|((a, b), v)| a.conj() * b * *v)
        .sum::<Complex64>()
        * g.spatial_x_measure();
    let operator_form = 2.0 * PI * ((dot(&f, &h0) + dot(&f0, &h)) * dx - 2.0 * e * pot);
    // direct route: slices at t by explicit summation, then the slice formula
    let r = (2.0 * PI).sqrt();
    let dt = |s: &[Complex64], s0: &[Complex64]| -> (Vec<Complex64>, Vec<Complex64>) {
        let psi: Vec<Complex64> = spatial_to_position(&g, s)
            .into_iter()
            .map(|v| v * r)
            .collect();
        let d: Vec<Complex64> = spatial_to_position(&g, s0)
            .into_iter()
            .map(|v| v * (-I * r))
            .collect();
        (psi, d)
    };
    let (fp, fd) = dt(&f, &f0);
    let (hp, hd) = dt(&h, &h0);
    let direct = kg_product_gauged(
        &Slice {
            grid: g,
            t,
            psi: fp,
            dt_psi: fd,
        },
        &Slice {
            grid: g,
            t,
            psi: hp,
            dt_psi: hd,
        },
        e,
        a0,
    )?;
    Ok(ChargeRoutes {
        direct,
        operator_form,
    })
}

/// Largest relative change of `Q_A(t)` over `times` for the stationary
/// superposition `sum_k c_k psi_k e^{-i E_k t}` of modes of one field,
/// evaluated with the slice formula.
pub fn qa_drift(
    field: &ExternalField,
    modes: &[(Complex64, &ModeSolution)],
    times: &[f64],
) -> Result<f64> {
    let grid = field.line_grid()?;
    let a0 = field.embed_real(&field.a0, &grid)?;
    let parts: Vec<(Complex64, f64, Vec<Complex64>)> = modes
        .iter()
        .map(|(c, m)| Ok((*c, m.e, field.embed(&m.psi, &grid)?)))
        .collect::<Result<_>>()?;
    let ns = grid.spatial_len();
    let q = |t: f64| -> Result<Complex64> {
        let mut psi = vec![Complex64::default(); ns];
        let mut dt_psi = vec![Complex64::default(); ns];
        for (c, e, v) in &parts {
            let ph = c * Complex64::from_polar(1.0, -e * t);
            for j in 0..ns {
                psi[j] += ph * v[j];
                dt_psi[j] += -I * e * ph * v[j];
            }
        }
        let s = Slice {
            grid,
            t,
            psi,
            dt_psi,
        };
        kg_product_gauged(&s, &s, field.e, &a0)
    };
    let q0 = q(times.first().copied().unwrap_or(0.0))?;
    let mut worst = 0.0f64;
    for &t in times {
        worst = worst.max((q(t)? - q0).norm());
    }
    Ok(worst / q0.norm().max(1e-300))
}
