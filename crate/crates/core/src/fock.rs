//! Finite-mode bosonic Fock space over discrete 4-momentum cells.
//!
//! A cell of volume `vol` carries `c = a / sqrt(vol)`, so the continuum
//! delta in `[c_p, c_p'^+]` becomes `1/vol`. On-shell operators are
//! `c^(m)_p = sqrt((2pi)^d / 2E) c_p`.

use crate::error::{Error, Result};
use crate::grid::Rapidity;
use crate::kernel::DeltaKernel;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::collections::HashMap;
use std::f64::consts::PI;

pub type CMat = DMatrix<Complex64>;

/// One momentum cell with time-momentum side `dp0` and spatial volume `dps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub p: [f64; 4],
    pub dp0: f64,
    pub dps: f64,
}

impl Mode {
    pub fn new(p: [f64; 4], dp0: f64, dps: f64) -> Self {
        Self { p, dp0, dps }
    }

    pub fn vol(&self) -> f64 {
        self.dp0 * self.dps
    }

    pub fn p2(&self) -> f64 {
        let p = self.p;
        p[0] * p[0] - p[1] * p[1] - p[2] * p[2] - p[3] * p[3]
    }
}

/// Modes, truncation and the occupation-number basis.
#[derive(Debug, Clone)]
pub struct ModeSet {
    pub modes: Vec<Mode>,
    pub n_max: usize,
    /// Number of spatial dimensions in the `(2pi)^d` factors.
    pub dim: usize,
    basis: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
}

impl ModeSet {
    pub fn new(modes: Vec<Mode>, n_max: usize) -> Result<Self> {
        if modes.is_empty() || modes.len() > 8 || n_max == 0 || n_max > 4 {
            return Err(Error::Invalid(format!(
                "{} modes with N = {n_max} unsupported",
                modes.len()
            )));
        }
        if let Some(m) = modes.iter().find(|m| !(m.dp0 > 0.0 && m.dps > 0.0)) {
            return Err(Error::Invalid(format!(
                "cell sides {} x {} not positive",
                m.dp0, m.dps
            )));
        }
        for (i, a) in modes.iter().enumerate() {
            for b in &modes[..i] {
                if (0..4).all(|k| (a.p[k] - b.p[k]).abs() <= 1e-12 * (1.0 + a.p[k].abs())) {
                    return Err(Error::Invalid(format!("duplicate mode {:?}", a.p)));
                }
            }
        }
        let mut basis = Vec::new();
        for total in 0..=n_max {
            let mut occ = vec![0u8; modes.len()];
            collect(&mut occ, 0, total, &mut basis);
        }
        let index = basis
            .iter()
            .enumerate()
            .map(|(i, b)| (b.clone(), i))
            .collect();
        Ok(Self {
            modes,
            n_max,
            dim: 3,
            basis,
            index,
        })
    }

    /// Modes `Lambda^k p` for `k = 0..count` along one rapidity, all with
    /// the same cells.
    pub fn boost_orbit(
        p: [f64; 4],
        r: &Rapidity,
        count: usize,
        dp0: f64,
        dps: f64,
        n_max: usize,
    ) -> Result<Self> {
        let mut modes = Vec::with_capacity(count);
        let mut q = p;
        for _ in 0..count {
            modes.push(Mode { p: q, dp0, dps });
            q = r.apply(q);
        }
        Self::new(modes, n_max)
    }

    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    pub fn occupation(&self, i: usize) -> &[u8] {
        &self.basis[i]
    }

    pub fn index_of(&self, occ: &[u8]) -> Option<usize> {
        self.index.get(occ).copied()
    }

    /// Truncated `a_i`.
    pub fn lowering(&self, i: usize) -> CMat {
        let d = self.dimension();
        let mut m = CMat::zeros(d, d);
        for (col, occ) in self.basis.iter().enumerate() {
            if occ[i] > 0 {
                let mut o = occ.clone();
                o[i] -= 1;
                m[(self.index[&o], col)] = Complex64::new((occ[i] as f64).sqrt(), 0.0);
            }
        }
        m
    }

    /// `c_i = a_i / sqrt(vol_i)`.
    pub fn c(&self, i: usize) -> CMat {
        self.lowering(i) / Complex64::new(self.modes[i].vol().sqrt(), 0.0)
    }

    pub fn c_dag(&self, i: usize) -> CMat {
        self.c(i).adjoint()
    }

    pub fn energy(&self, i: usize, m2: f64) -> f64 {
        let p = self.modes[i].p;
        (p[1] * p[1] + p[2] * p[2] + p[3] * p[3] + m2).sqrt()
    }

    /// `sqrt((2pi)^d / 2E)` at mass squared `m2`.
    pub fn onshell_factor(&self, i: usize, m2: f64) -> f64 {
        ((2.0 * PI).powi(self.dim as i32) / (2.0 * self.energy(i, m2))).sqrt()
    }

    pub fn c_onshell(&self, i: usize, m2: f64) -> CMat {
        self.c(i) * Complex64::new(self.onshell_factor(i, m2), 0.0)
    }

    /// Projector onto basis states with fewer than `n_max` particles.
    pub fn below_top(&self) -> CMat {
        let d = self.dimension();
        CMat::from_fn(d, d, |r, c| {
            if r == c && self.basis[r].iter().map(|&v| v as usize).sum::<usize>() < self.n_max {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::default()
            }
        })
    }

    /// `J = sum vol (p^2 - m^2) c^+ c`.
    pub fn constraint(&self, m2: f64) -> CMat {
        let d = self.dimension();
        let mut j = CMat::zeros(d, d);
        for (i, m) in self.modes.iter().enumerate() {
            j += self.c_dag(i) * self.c(i) * Complex64::new(m.vol() * (m.p2() - m2), 0.0);
        }
        j
    }

    pub fn vacuum(&self) -> DVector<Complex64> {
        let mut v = DVector::zeros(self.dimension());
        v[0] = Complex64::new(1.0, 0.0);
        v
    }
}

fn collect(occ: &mut Vec<u8>, k: usize, left: usize, out: &mut Vec<Vec<u8>>) {
    if k + 1 == occ.len() {
        occ[k] = left as u8;
        out.push(occ.clone());
        occ[k] = 0;
        return;
    }
    for n in (0..=left).rev() {
        occ[k] = n as u8;
        collect(occ, k + 1, left - n, out);
    }
    occ[k] = 0;
}

fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// Entrywise deviations of the discretized algebra.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommutatorReport {
    /// `max |[c_i, c_j^+] - delta_ij / vol_i|` below the top occupation
    /// level, in units of `1/sqrt(vol_i vol_j)`.
    pub canonical: f64,
    /// `max |[c_i, c_j]|`.
    pub annihilators: f64,
    /// Largest deviation anywhere (truncation acts on the top level), same units.
    pub top_level: f64,
    /// `max |[c^(m)_i, c^(m)+_j] - delta_ij (2pi)^d / (2E vol_i)|` below the
    /// top level, against the cell form `(2pi)^d / (d^dp 2E dp0)` of the
    /// on-shell delta.
    pub onshell: f64,
}

pub fn commutator_check(ms: &ModeSet, m2: f64) -> CommutatorReport {
    let below = ms.below_top();
    let d = ms.dimension();
    let id = CMat::identity(d, d);
    let (mut canonical, mut annihilators, mut top_level, mut onshell) =
        (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let cs: Vec<CMat> = (0..ms.modes.len()).map(|i| ms.c(i)).collect();
    let cm: Vec<CMat> = (0..ms.modes.len()).map(|i| ms.c_onshell(i, m2)).collect();
    for i in 0..ms.modes.len() {
        for j in 0..ms.modes.len() {
            let want = if i == j {
                &id / Complex64::new(ms.modes[i].vol(), 0.0)
            } else {
                CMat::zeros(d, d)
            };
            let dev = commutator(&cs[i], &cs[j].adjoint()) - &want;
            let w = (ms.modes[i].vol() * ms.modes[j].vol()).sqrt();
            canonical = canonical.max(max_abs(&(&below * &dev * &below)) * w);
            top_level = top_level.max(max_abs(&dev) * w);
            annihilators = annihilators.max(max_abs(&commutator(&cs[i], &cs[j])));
            let mode = ms.modes[i];
            let e = ms.energy(i, m2);
            let cell = (2.0 * PI).powi(ms.dim as i32) / (mode.dps * 2.0 * e * mode.dp0);
            let want = if i == j {
                &id * Complex64::new(cell, 0.0)
            } else {
                CMat::zeros(d, d)
            };
            let dev = commutator(&cm[i], &cm[j].adjoint()) - want;
            onshell = onshell.max(max_abs(&(&below * &dev * &below)) / cell);
        }
    }
    CommutatorReport {
        canonical,
        annihilators,
        top_level,
        onshell,
    }
}

/// Per-mode result of `[J, c_p^+] = (p^2 - m^2) c_p^+`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintCommutator {
    pub p2_minus_m2: f64,
    /// `max |[J, c^+] - (p^2 - m^2) c^+|`.
    pub defect: f64,
    /// `max |[J, c^+]|`.
    pub size: f64,
}

pub fn constraint_commutators(ms: &ModeSet, m2: f64) -> Vec<ConstraintCommutator> {
    let j = ms.constraint(m2);
    (0..ms.modes.len())
        .map(|i| {
            let cd = ms.c_dag(i);
            let k = commutator(&j, &cd);
            let s = ms.modes[i].p2() - m2;
            ConstraintCommutator {
                p2_minus_m2: s,
                defect: max_abs(&(&k - &cd * Complex64::new(s, 0.0))),
                size: max_abs(&k),
            }
        })
        .collect()
}

/// Action of a boost on a mode set: modes whose image is in the set are
/// relabelled, the rest escape.
#[derive(Debug, Clone)]
pub struct BoostMap {
    pub rapidity: Rapidity,
    pub image: Vec<Option<usize>>,
    /// Fock-space operator `U |n> = |n relabelled>` on occupations of
    /// non-escaping modes, zero elsewhere.
    pub u: CMat,
}

pub fn boost_operators(ms: &ModeSet, r: &Rapidity) -> Result<BoostMap> {
    let image: Vec<Option<usize>> = ms
        .modes
        .iter()
        .map(|m| {
            let q = r.apply(m.p);
            ms.modes.iter().position(|n| {
                (0..4).all(|k| (n.p[k] - q[k]).abs() <= 1e-9 * (1.0 + q[k].abs()))
                    && (n.vol() - m.vol()).abs() <= 1e-12 * m.vol()
            })
        })
        .collect();
    let d = ms.dimension();
    let mut u = CMat::zeros(d, d);
    for (col, occ) in ms.basis.iter().enumerate() {
        if occ.iter().zip(&image).any(|(&n, im)| n > 0 && im.is_none()) {
            continue;
        }
        let mut o = vec![0u8; occ.len()];
        for (k, &n) in occ.iter().enumerate() {
            if let Some(t) = image[k] {
                o[t] += n;
            }
        }
        u[(ms.index[&o], col)] = Complex64::new(1.0, 0.0);
    }
    Ok(BoostMap {
        rapidity: *r,
        image,
        u,
    })
}

impl BoostMap {
    /// `U c_i U^+`, which equals `c_{Lambda i}` on the image subspace.
    pub fn conjugate(&self, op: &CMat) -> CMat {
        &self.u * op * self.u.adjoint()
    }

    pub fn target(&self, i: usize) -> Result<usize> {
        self.image[i].ok_or(Error::ModeEscape(i))
    }

    /// `sqrt(E_{Lambda p} / E_p)` for an on-shell mode.
    pub fn onshell_factor(&self, ms: &ModeSet, i: usize, m2: f64) -> Result<f64> {
        let t = self.target(i)?;
        Ok((ms.energy(t, m2) / ms.energy(i, m2)).sqrt())
    }

    /// `U U^+`, the projector onto the image subspace.
    pub fn range(&self) -> CMat {
        &self.u * self.u.adjoint()
    }

    /// Projector onto occupations of non-escaping modes.
    pub fn domain(&self, ms: &ModeSet) -> CMat {
        let d = ms.dimension();
        CMat::from_fn(d, d, |r, c| {
            if r == c
                && ms.basis[r]
                    .iter()
                    .zip(&self.image)
                    .all(|(&n, im)| n == 0 || im.is_some())
            {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::default()
            }
        })
    }
}

/// A vector of the truncated Fock space.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    pub amp: DVector<Complex64>,
}

impl FockState {
    pub fn norm_sq(&self) -> f64 {
        self.amp.norm_squared()
    }

    /// Amplitudes of the one-particle sector, mode by mode.
    pub fn one_particle(&self, ms: &ModeSet) -> Vec<Complex64> {
        (0..ms.modes.len())
            .map(|i| {
                let mut o = vec![0u8; ms.modes.len()];
                o[i] = 1;
                self.amp[ms.index[&o]]
            })
            .collect()
    }
}

/// `sum_i f_i c^(m)+_i |0>`.
pub fn one_particle_state(ms: &ModeSet, m2: f64, f: &[Complex64]) -> FockState {
    let mut v = DVector::zeros(ms.dimension());
    let vac = ms.vacuum();
    for (i, fi) in f.iter().enumerate() {
        v += ms.c_onshell(i, m2).adjoint() * &vac * *fi;
    }
    FockState { amp: v }
}

/// Spatial momenta and Wigner amplitudes `a(p)` of a one-particle state
/// whose modes all lie in one mass cell: `a_i = f_i (2pi)^d / (d^dp sqrt(dp0))`,
/// so that `sum d^dp |a|^2 / ((2pi)^d 2E)` equals the Fock norm.
pub fn wigner_amplitudes(ms: &ModeSet, f: &[Complex64]) -> Vec<([f64; 3], Complex64)> {
    ms.modes
        .iter()
        .zip(f)
        .map(|(m, fi)| {
            (
                [m.p[1], m.p[2], m.p[3]],
                fi * (2.0 * PI).powi(ms.dim as i32) / (m.dps * m.dp0.sqrt()),
            )
        })
        .collect()
}

/// Options of the time-structure analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeStructureOptions {
    /// Time samples per particle.
    pub n_t: usize,
    /// Cells `|k1 - k2| <= band` count as the equal-time diagonal.
    pub band: usize,
    /// Half-length of the sampled time interval; by default the window
    /// support of the most energetic mode.
    pub t_half: Option<f64>,
}

impl Default for TimeStructureOptions {
    fn default() -> Self {
        Self {
            n_t: 65,
            band: 0,
            t_half: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeStructureReport {
    /// Singular values of `Psi[(t1, i), (t2, j)]`, descending.
    pub singular_values: Vec<f64>,
    /// Singular values above `1e-6` of the leading one.
    pub rank: usize,
    /// Weight outside the diagonal band.
    pub off_diagonal: f64,
    /// Weight inside the diagonal band.
    pub diagonal_fidelity: f64,
}

/// Two-particle state `(1/2) sum a_ij c^(m)+_i c^(m)+_j |0>` and its
/// `(t1, t2)` structure. Each particle's time profile is the Fourier
/// transform of `delta_T(p^2 - m^2)` in `p0` on the positive branch,
/// `e^{-iEt} w(t/2E) / (2E sqrt(2pi))`.
pub fn two_particle_history(
    ms: &ModeSet,
    m2: f64,
    a: &CMat,
    kernel: &DeltaKernel,
    opt: TimeStructureOptions,
) -> Result<(FockState, TimeStructureReport)> {
    let n = ms.modes.len();
    if ms.n_max < 2 {
        return Err(Error::Invalid("two-particle states need N >= 2".into()));
    }
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::GridMismatch);
    }
    let asym = max_abs(&(a - a.transpose()));
    if asym > 1e-12 * max_abs(a).max(1e-300) {
        return Err(Error::AsymmetricAmplitude(asym));
    }
    let vac = ms.vacuum();
    let cd: Vec<CMat> = (0..n).map(|i| ms.c_onshell(i, m2).adjoint()).collect();
    let mut v = DVector::zeros(ms.dimension());
    for i in 0..n {
        for j in 0..n {
            if a[(i, j)] != Complex64::default() {
                v += &cd[i] * (&cd[j] * &vac) * (a[(i, j)] * 0.5);
            }
        }
    }
    let e: Vec<f64> = (0..n).map(|i| ms.energy(i, m2)).collect();
    let report = time_structure(a, &e, kernel, opt, |i| ms.onshell_factor(i, m2))?;
    Ok((FockState { amp: v }, report))
}

/// `(t1, t2)` analysis of a symmetric amplitude over modes with energies
/// `e`; `scale(i)` multiplies the profile of mode `i`.
pub fn time_structure<F: Fn(usize) -> f64>(
    a: &CMat,
    e: &[f64],
    kernel: &DeltaKernel,
    opt: TimeStructureOptions,
    scale: F,
) -> Result<TimeStructureReport> {
    let n = e.len();
    let nt = opt.n_t;
    let e_max = e.iter().copied().fold(0.0, f64::max);
    let half = opt.t_half.unwrap_or(kernel.tau_support() * 2.0 * e_max);
    let dt = 2.0 * half / (nt.max(2) - 1) as f64;
    let prof = |i: usize, k: usize| -> Complex64 {
        let t = -half + k as f64 * dt;
        Complex64::from_polar(
            scale(i) * kernel.window(t / (2.0 * e[i])) / (2.0 * e[i] * (2.0 * PI).sqrt()),
            -e[i] * t,
        )
    };
    let m = CMat::from_fn(nt * n, nt * n, |r, c| {
        let (k1, i) = (r / n, r % n);
        let (k2, j) = (c / n, c % n);
        a[(i, j)] * prof(i, k1) * prof(j, k2)
    });
    let total: f64 = m.iter().map(|v| v.norm_sqr()).sum();
    if !(total > 0.0) {
        return Err(Error::Invalid("two-particle amplitude vanishes".into()));
    }
    let mut diag = 0.0;
    for r in 0..nt * n {
        for c in 0..nt * n {
            if (r / n).abs_diff(c / n) <= opt.band {
                diag += m[(r, c)].norm_sqr();
            }
        }
    }
    let svd = m.svd(false, false);
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    let rank = sv.iter().filter(|&&s| s > 1e-6 * sv[0]).count();
    Ok(TimeStructureReport {
        singular_values: sv,
        rank,
        off_diagonal: 1.0 - diag / total,
        diagonal_fidelity: diag / total,
    })
}

/// Amplitude of the boosted two-particle state: `a'_{Lambda i, Lambda j} =
/// a_ij sqrt(E_{Lambda i} E_{Lambda j} / (E_i E_j))`.
pub fn boost_amplitude(ms: &ModeSet, map: &BoostMap, m2: f64, a: &CMat) -> Result<CMat> {
    let n = ms.modes.len();
    let mut out = CMat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if a[(i, j)] == Complex64::default() {
                continue;
            }
            let (ti, tj) = (map.target(i)?, map.target(j)?);
            out[(ti, tj)] +=
                a[(i, j)] * map.onshell_factor(ms, i, m2)? * map.onshell_factor(ms, j, m2)?;
        }
    }
    Ok(out)
}
