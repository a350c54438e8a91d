//! Named verification experiments. Each one runs a fixed chain of library
//! operations and reports rows of measured value, expected value and
//! tolerance. The runner and the acceptance tests share this registry.

use crate::current::{self, Deriv};
use crate::extfield::{self, Boundary, ExternalField, Line, ModeSolution, ScanOptions};
use crate::fock::{self, CMat, ModeSet, TimeStructureOptions};
use crate::grid::{boost, Grid4, HistoryState, Rapidity};
use crate::kernel::{Branch, DeltaKernel, KernelShape};
use crate::nonrel::{self, NonrelShell};
use crate::onshell::{self, Normalization, OnShellSpec};
use crate::products;
use crate::propagator::{self, LatticePropagator, QuadOptions};
use crate::{special, Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// How `measured` is compared with `expected`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    /// `|measured - expected| <= tolerance`.
    Within,
    /// `measured >= expected`.
    AtLeast,
    /// `measured <= expected`.
    AtMost,
}

impl Relation {
    pub fn as_str(self) -> &'static str {
        match self {
            Relation::Within => "within",
            Relation::AtLeast => "at_least",
            Relation::AtMost => "at_most",
        }
    }
}

/// One checked quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub check: String,
    pub relation: Relation,
    pub measured: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Row {
    pub fn within(check: &str, measured: f64, expected: f64, tolerance: f64) -> Self {
        let pass = (measured - expected).abs() <= tolerance;
        Self { check: check.into(), relation: Relation::Within, measured, expected, tolerance, pass }
    }

    pub fn at_least(check: &str, measured: f64, bound: f64) -> Self {
        Self { check: check.into(), relation: Relation::AtLeast, measured, expected: bound, tolerance: 0.0, pass: measured >= bound }
    }

    pub fn at_most(check: &str, measured: f64, bound: f64) -> Self {
        Self { check: check.into(), relation: Relation::AtMost, measured, expected: bound, tolerance: 0.0, pass: measured <= bound }
    }
}

/// A declared parameter with its default.
#[derive(Debug, Clone, Copy)]
pub struct ParamSpec {
    pub key: &'static str,
    pub default: &'static str,
    pub doc: &'static str,
}

const fn p(key: &'static str, default: &'static str, doc: &'static str) -> ParamSpec {
    ParamSpec { key, default, doc }
}

/// Parameter values of one experiment run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Params {
    values: BTreeMap<String, String>,
    order: Vec<String>,
}

impl Params {
    pub fn defaults(specs: &[ParamSpec]) -> Self {
        let mut out = Self::default();
        for s in specs {
            out.values.insert(s.key.into(), s.default.into());
            out.order.push(s.key.into());
        }
        out
    }

    pub fn contains(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    /// Replace a declared value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match self.values.get_mut(key) {
            Some(v) => {
                *v = value.trim().to_string();
                Ok(())
            }
            None => Err(Error::Invalid(format!("unknown parameter `{key}`"))),
        }
    }

    pub fn str(&self, key: &str) -> Result<&str> {
        self.values.get(key).map(|s| s.as_str()).ok_or_else(|| Error::Invalid(format!("missing parameter `{key}`")))
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        let s = self.str(key)?;
        s.parse().map_err(|_| Error::Invalid(format!("`{key}` = `{s}` is not a number")))
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        let s = self.str(key)?;
        s.parse().map_err(|_| Error::Invalid(format!("`{key}` = `{s}` is not a non-negative integer")))
    }

    pub fn u64(&self, key: &str) -> Result<u64> {
        let s = self.str(key)?;
        s.parse().map_err(|_| Error::Invalid(format!("`{key}` = `{s}` is not a non-negative integer")))
    }

    fn kernel(&self, shape_key: &str, t_key: &str) -> Result<DeltaKernel> {
        let shape = match self.str(shape_key)? {
            "sinc" => KernelShape::Sinc,
            "gaussian" => KernelShape::Gaussian,
            other => return Err(Error::Invalid(format!("`{shape_key}` = `{other}`: expected sinc or gaussian"))),
        };
        DeltaKernel::new(self.f64(t_key)?, shape)
    }

    /// `k=v;k=v` in declaration order.
    pub fn describe(&self) -> String {
        self.order.iter().map(|k| format!("{k}={}", self.values[k])).collect::<Vec<_>>().join(";")
    }
}

/// A registered experiment.
#[derive(Debug, Clone, Copy)]
pub struct Experiment {
    pub name: &'static str,
    /// Library operations the experiment runs, in order.
    pub chain: &'static str,
    pub params: &'static [ParamSpec],
    pub run: fn(&Params) -> Result<Vec<Row>>,
}

impl Experiment {
    pub fn defaults(&self) -> Params {
        Params::defaults(self.params)
    }
}

pub fn registry() -> &'static [Experiment] {
    REGISTRY
}

pub fn find(name: &str) -> Option<&'static Experiment> {
    REGISTRY.iter().find(|e| e.name == name)
}

static REGISTRY: &[Experiment] = &[
    Experiment {
        name: "free_norm",
        chain: "onshell::gaussian_amplitude -> onshell::build_onshell(+, -) -> products::mass_overlap, repeated at T/4, T/2, T",
        params: &[
            p("m2", "1", "mass squared"),
            p("T", "200", "largest kernel window"),
            p("kernel", "sinc", "sinc or gaussian"),
            p("sigma", "0.5", "momentum width of the Gaussian amplitude"),
            p("n_t", "8192", "time points"),
            p("dt", "0.5", "time step"),
            p("n_x", "64", "points on the spatial axis"),
            p("dx", "0.5", "spatial step"),
        ],
        run: free_norm,
    },
    Experiment {
        name: "branch_orthogonality",
        chain: "onshell::build_onshell(+) , onshell::build_onshell(-) -> products::inner4",
        params: &[
            p("m2", "1", "mass squared"),
            p("T", "20", "kernel window"),
            p("kernel", "gaussian", "sinc or gaussian"),
            p("n_t", "1024", "time points"),
            p("dt", "0.5", "time step"),
            p("n_x", "64", "points on the spatial axis"),
            p("dx", "0.5", "spatial step"),
        ],
        run: branch_orthogonality,
    },
    Experiment {
        name: "wigner",
        chain: "onshell::build_onshell -> onshell::to_wigner -> onshell::from_wigner -> onshell::to_wigner; grid::boost -> onshell::to_wigner against onshell::wigner_boost",
        params: &[
            p("m2", "1", "mass squared"),
            p("T", "20", "Gaussian kernel window"),
            p("rapidity", "0.3", "boost rapidity along x"),
            p("center", "0.2", "amplitude center in p_x"),
            p("sigma", "0.5", "amplitude width"),
            p("p_cut", "4", "amplitude set to zero beyond |p| = p_cut"),
            p("n_t", "8192", "time points"),
            p("dt", "0.25", "time step"),
            p("n_x", "2048", "points on the spatial axis"),
            p("dx", "0.5", "spatial step"),
        ],
        run: wigner,
    },
    Experiment {
        name: "propagator",
        chain: "propagator::LatticePropagator::value against propagator::propagator_d_with at 10 separations; propagator::propagator_d(0, r) against special::equal_time_d",
        params: &[
            p("m2", "1", "mass squared"),
            p("T", "400", "Gaussian kernel window"),
            p("eps", "1", "regulator e^{-eps p0}"),
            p("n_t", "1048576", "time points of the virtual lattice"),
            p("dt", "0.12", "time step"),
            p("n_x", "128", "points per spatial axis (three axes)"),
            p("dx", "0.125", "spatial step"),
        ],
        run: propagator_dual_route,
    },
    Experiment {
        name: "convolution",
        chain: "propagator::convolution_identity_check at (T, n) and, if refine = 1, at (2T, 2n)",
        params: &[
            p("m2", "1", "first mass squared"),
            p("m2p", "1.1", "second mass squared"),
            p("T", "40", "Gaussian kernel window"),
            p("eps", "2", "event regulator"),
            p("n", "2048", "points on the time and space axes"),
            p("d", "0.5", "lattice spacing on both axes"),
            p("refine", "1", "1 to repeat with doubled window and grid"),
        ],
        run: convolution,
    },
    Experiment {
        name: "proper_time",
        chain: "propagator::proper_time_projector against propagator::project_mass, sinc and Gaussian windows",
        params: &[
            p("m2", "1", "mass squared"),
            p("T_sinc", "20", "sinc window"),
            p("n_tau_sinc", "4096", "proper-time nodes for the sinc window"),
            p("T_gauss", "8", "Gaussian window"),
            p("n_tau_gauss", "16384", "proper-time nodes for the Gaussian window"),
        ],
        run: proper_time,
    },
    Experiment {
        name: "extfield_identities",
        chain: "extfield::solve_modes at three masses -> extfield::extended_orthogonality_check on 10 pairs; extfield::modes_at_energy -> extfield::line_inner",
        params: &[
            p("m2", "1", "reference mass squared"),
            p("dm2", "0.1", "spacing of the two further masses"),
            p("depth", "0.3", "square-well depth"),
            p("half_width", "2", "square-well half width"),
            p("n", "120", "interior points of the Dirichlet line"),
            p("h", "0.1", "line spacing"),
            p("e_lo", "0.6", "energy window start"),
            p("e_hi", "1.3", "energy window end"),
        ],
        run: extfield_identities,
    },
    Experiment {
        name: "free_basis_spread",
        chain: "extfield::solve_modes -> extfield::free_basis_content -> products::MassSpectralDecomposition::width, free and bound",
        params: &[
            p("m2", "1", "mass squared"),
            p("depth", "0.3", "square-well depth of the bound case"),
            p("T", "40", "Gaussian kernel window"),
            p("n", "128", "points of the periodic line"),
            p("h", "0.1", "line spacing"),
            p("n_t", "1024", "time points"),
            p("dt", "0.5", "time step"),
        ],
        run: free_basis_spread,
    },
    Experiment {
        name: "current_identities",
        chain: "current::divergence_identity_check (spectral, centered at n, 2n, 4n); extfield::solve_modes -> current::qa_drift; extfield::mode_history -> current::qa_operator_form_check",
        params: &[
            p("n", "256", "points per axis of the 1+1 plane-wave grid"),
            p("depth", "0.3", "square-well depth for the mode checks"),
        ],
        run: current_identities,
    },
    Experiment {
        name: "nonrel_norm",
        chain: "nonrel::nonrel_history -> nonrel::nonrel_mass_overlap against nonrel::nonrel_evolution -> nonrel::slice_norm; single lattice mode against nonrel::jacobian_norm",
        params: &[
            p("m", "10", "mass"),
            p("center", "0.5", "amplitude center in p_x"),
            p("sigma", "0.3", "amplitude width"),
            p("T", "40", "Gaussian kernel window of the packet"),
            p("T_mode", "400", "Gaussian kernel window of the single-mode check"),
            p("n_t", "2048", "time points of the packet grid"),
            p("n_t_mode", "16384", "time points of the single-mode grid"),
            p("dt", "0.2", "time step"),
            p("n_x", "128", "points on the spatial axis"),
            p("dx", "0.25", "spatial step"),
        ],
        run: nonrel_norm,
    },
    Experiment {
        name: "generalized_product",
        chain: "onshell::build_onshell -> nonrel::generalized_product over a geometric c scan -> log-log slope; nonrel::mass_dependent_pair",
        params: &[
            p("c", "1", "smallest c of the scan"),
            p("ratio", "2", "factor between scanned c values"),
            p("points", "5", "number of c values"),
            p("phi_depth", "0.5", "depth of the Gaussian potential well"),
        ],
        run: generalized_product,
    },
    Experiment {
        name: "fock_algebra",
        chain: "fock::ModeSet::boost_orbit -> fock::commutator_check, fock::constraint_commutators, fock::boost_operators, fock::one_particle_state, fock::two_particle_history",
        params: &[
            p("m2", "1", "mass squared"),
            p("rapidity", "0.5", "orbit rapidity"),
            p("modes", "4", "modes in the orbit"),
            p("n_max", "2", "occupation truncation"),
            p("dp0", "0.1", "energy side of a mode cell"),
            p("dps", "0.2", "spatial volume of a mode cell"),
            p("T", "20", "Gaussian kernel window of the time profiles"),
        ],
        run: fock_algebra,
    },
    Experiment {
        name: "stueckelberg",
        chain: "grid::HistoryState::peak on shell -> onshell::stueckelberg_check",
        params: &[p("kx", "3", "spatial wavenumber"), p("kt", "5", "time wavenumber")],
        run: stueckelberg,
    },
    Experiment {
        name: "random_properties",
        chain: "seeded random fields, states and amplitudes -> extfield::ExternalField::f_matrix, products::inner4, products::inner4_position, current::current_density, fock::boost_operators",
        params: &[p("seed", "7", "ChaCha8 seed; the --seed flag overrides it"), p("trials", "8", "random draws per property")],
        run: random_properties,
    },
];

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

fn line_grid_1d(p: &Params, nt: &str, dt: &str, nx: &str, dx: &str) -> Result<Grid4> {
    Grid4::new(p.usize(nt)?, [p.usize(nx)?, 1, 1], p.f64(dt)?, [p.f64(dx)?, 1.0, 1.0])
}

fn free_norm(p: &Params) -> Result<Vec<Row>> {
    let g = line_grid_1d(p, "n_t", "dt", "n_x", "dx")?;
    let m2 = p.f64("m2")?;
    let t = p.f64("T")?;
    let a = onshell::gaussian_amplitude(&g, [0.0; 3], p.f64("sigma")?);
    let mut errs = Vec::new();
    let mut minus = 0.0;
    for s in [0.25, 0.5, 1.0] {
        let mut q = p.clone();
        q.set("T", &(t * s).to_string())?;
        let k = q.kernel("kernel", "T")?;
        let spec = OnShellSpec::new(m2, Branch::Plus, a.clone(), Normalization::InvariantM2);
        let psi = onshell::build_onshell(&spec, &g, &k)?;
        errs.push((products::mass_overlap(&psi, &psi, &k)?.q_estimate - 1.0).norm());
        if s == 1.0 {
            let spec = OnShellSpec::new(m2, Branch::Minus, a.clone(), Normalization::InvariantM2);
            let neg = onshell::build_onshell(&spec, &g, &k)?;
            minus = (products::mass_overlap(&neg, &neg, &k)?.q_estimate - 1.0).norm();
        }
    }
    let decreasing = errs.windows(2).all(|w| w[1] < w[0]);
    Ok(vec![
        Row::within("q_estimate_error_T/4", errs[0], 0.0, f64::INFINITY),
        Row::within("q_estimate_error_T/2", errs[1], 0.0, f64::INFINITY),
        Row::within("q_estimate_error", errs[2], 0.0, 1e-3),
        Row::within("q_estimate_error_minus_branch", minus, 0.0, 1e-3),
        Row::at_least("error_strictly_decreasing", decreasing as u8 as f64, 1.0),
    ])
}

fn branch_orthogonality(p: &Params) -> Result<Vec<Row>> {
    let g = line_grid_1d(p, "n_t", "dt", "n_x", "dx")?;
    let k = p.kernel("kernel", "T")?;
    let m2 = p.f64("m2")?;
    let a = truncated_gaussian(&g, 0.3, 0.6, 3.0);
    let plus = onshell::build_onshell(&OnShellSpec::new(m2, Branch::Plus, a.clone(), Normalization::InvariantM2), &g, &k)?;
    let minus = onshell::build_onshell(&OnShellSpec::new(m2, Branch::Minus, a, Normalization::InvariantM2), &g, &k)?;
    let ov = products::inner4(&plus, &minus)?.norm() / (plus.norm_sq() * minus.norm_sq()).sqrt();
    Ok(vec![Row::within("inner4_plus_minus", ov, 0.0, 1e-12)])
}

/// Gaussian amplitude along `p_x`, zero beyond `|p| = cut`.
fn truncated_gaussian(g: &Grid4, center: f64, sigma: f64, cut: f64) -> Vec<Complex64> {
    let mut a = onshell::gaussian_amplitude(g, [center, 0.0, 0.0], sigma);
    for (j, v) in a.iter_mut().enumerate() {
        if g.spatial_p(j)[0].abs() > cut {
            *v = Complex64::default();
        }
    }
    a
}

fn max_dev(a: &[Complex64], b: &[Complex64]) -> f64 {
    let top = b.iter().map(|v| v.norm()).fold(0.0, f64::max);
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / top.max(1e-300)
}

fn wigner(p: &Params) -> Result<Vec<Row>> {
    let g = line_grid_1d(p, "n_t", "dt", "n_x", "dx")?;
    let k = DeltaKernel::gaussian(p.f64("T")?);
    let m2 = p.f64("m2")?;
    let cut = p.f64("p_cut")?;
    let a = truncated_gaussian(&g, p.f64("center")?, p.f64("sigma")?, cut);
    let psi = onshell::build_onshell(&OnShellSpec::new(m2, Branch::Plus, a, Normalization::InvariantM2), &g, &k)?;
    let w = onshell::to_wigner(&psi)?;
    let back = onshell::from_wigner(&w, &g, &k)?;
    let w2 = onshell::to_wigner(&back)?;
    let round_state = max_dev(&back.amp, &psi.amp);
    let round_wigner = max_dev(&w2.a, &w.a);
    let r = Rapidity::along_x(p.f64("rapidity")?);
    let route_a = onshell::to_wigner(&boost(&psi, &r)?)?;
    let route_b = onshell::wigner_boost(&w, &r);
    Ok(vec![
        Row::within("round_trip_state", round_state, 0.0, 1e-12),
        Row::within("round_trip_wigner", round_wigner, 0.0, 1e-12),
        Row::within("boost_diagram", max_dev(&route_a.a, &route_b.a), 0.0, 1e-5),
        Row::within("boosted_norm", route_a.norm(), w.norm(), 1e-5 * w.norm()),
    ])
}

/// Separations `(t, r)` along `x`, timelike and spacelike.
pub const PROPAGATOR_SEPARATIONS: [[f64; 2]; 10] =
    [[0.0, 1.0], [0.0, 2.5], [0.5, 1.5], [1.0, 0.5], [2.0, 0.25], [3.0, 1.0], [0.25, 3.0], [4.0, 2.0], [2.0, 3.0], [1.5, 0.75]];

fn propagator_dual_route(p: &Params) -> Result<Vec<Row>> {
    let n = p.usize("n_x")?;
    let dx = p.f64("dx")?;
    let g = Grid4::new(p.usize("n_t")?, [n, n, n], p.f64("dt")?, [dx; 3])?;
    let m2 = p.f64("m2")?;
    let eps = p.f64("eps")?;
    let lat = LatticePropagator::new(g, DeltaKernel::gaussian(p.f64("T")?), m2, eps)?;
    let opt = QuadOptions { dim: 3, eps, tol: 1e-12 };
    let mut worst: f64 = 0.0;
    for s in PROPAGATOR_SEPARATIONS {
        let sep = [s[0], s[1], 0.0, 0.0];
        worst = worst.max(rel(lat.value(sep), propagator::propagator_d_with(sep, m2.sqrt(), &opt)?));
    }
    let mut bessel: f64 = 0.0;
    for r in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0] {
        let d = propagator::propagator_d([0.0, r, 0.0, 0.0], m2.sqrt())?;
        bessel = bessel.max(rel(d, Complex64::new(special::equal_time_d(m2.sqrt(), r), 0.0)));
    }
    Ok(vec![Row::within("lattice_vs_quadrature", worst, 0.0, 1e-3), Row::within("equal_time_vs_bessel", bessel, 0.0, 1e-6)])
}

/// Event pairs of the convolution check, on the lattice for spacing 0.5.
pub const CONVOLUTION_PAIRS: [([f64; 4], [f64; 4]); 2] = [([0.0; 4], [1.0, 0.5, 0.0, 0.0]), ([0.0; 4], [0.5, 2.0, 0.0, 0.0])];

fn convolution(p: &Params) -> Result<Vec<Row>> {
    let (m2, m2p, eps) = (p.f64("m2")?, p.f64("m2p")?, p.f64("eps")?);
    let t = p.f64("T")?;
    let n = p.usize("n")?;
    let d = p.f64("d")?;
    let at = |t: f64, n: usize| -> Result<f64> {
        let g = Grid4::new(n, [n, 1, 1], d, [d, 1.0, 1.0])?;
        let k = DeltaKernel::gaussian(t);
        let mut worst: f64 = 0.0;
        for (x, y) in CONVOLUTION_PAIRS {
            worst = worst.max(propagator::convolution_identity_check(x, y, m2, m2p, &k, &g, eps)?.rel_err);
        }
        Ok(worst)
    };
    let e1 = at(t, n)?;
    let mut rows = vec![Row::within("relative_error", e1, 0.0, 1e-2)];
    if p.usize("refine")? == 1 {
        let e2 = at(2.0 * t, 2 * n)?;
        rows.push(Row::within("relative_error_refined", e2, 0.0, f64::INFINITY));
        rows.push(Row::at_most("refinement_ratio", e2 / e1, 0.5));
    }
    Ok(rows)
}

fn proper_time(p: &Params) -> Result<Vec<Row>> {
    let g = Grid4::new(256, [32, 1, 1], 0.25, [0.5, 1.0, 1.0])?;
    let m2 = p.f64("m2")?;
    let psi = HistoryState::from_fn(g, |q| Complex64::new((-(q[0] - 1.2).powi(2) - q[1] * q[1]).exp(), 0.1 * q[0]));
    let mut rows = Vec::new();
    for (name, k, nt) in [
        ("sinc", DeltaKernel::sinc(p.f64("T_sinc")?), p.usize("n_tau_sinc")?),
        ("gaussian", DeltaKernel::gaussian(p.f64("T_gauss")?), p.usize("n_tau_gauss")?),
    ] {
        let exact = propagator::project_mass(&psi, m2, None, &k)?;
        let pt = propagator::proper_time_projector(&psi, m2, k.tau_support(), nt, &k)?;
        rows.push(Row::within(&format!("proper_time_vs_projector_{name}"), pt.rel_dist(&exact), 0.0, 1e-6));
    }
    Ok(rows)
}

fn well_line(p: &Params) -> Result<ExternalField> {
    let n = p.usize("n")?;
    let h = p.f64("h")?;
    let line = Line::new(n, h, Boundary::Dirichlet)?;
    let center = 0.5 * (n + 1) as f64 * h;
    Ok(ExternalField::square_well(line, 1.0, center, p.f64("half_width")?, p.f64("depth")?))
}

fn extfield_identities(p: &Params) -> Result<Vec<Row>> {
    let field = well_line(p)?;
    let m2 = p.f64("m2")?;
    let dm2 = p.f64("dm2")?;
    let scan = ScanOptions { e_lo: p.f64("e_lo")?, e_hi: p.f64("e_hi")?, steps: 60, branches: 6 };
    let mut modes: Vec<ModeSolution> = Vec::new();
    for mm in [m2, m2 + dm2, m2 + 2.0 * dm2] {
        modes.extend(extfield::solve_modes(&field, mm, &scan)?);
    }
    // (a) |psi|^2 against (dE/dm2) Q_A with dE/dm2 from finite differences
    let mut hf: f64 = 0.0;
    let mut qa_norm: f64 = 0.0;
    for m in &modes {
        let n2 = extfield::line_inner(&field, &m.psi, &m.psi).re;
        hf = hf.max((n2 - m.de_dm2_fd * m.qa).abs() / n2);
        qa_norm = qa_norm.max((extfield::qa_modes(&field, &m.psi, m.e, &m.psi, m.e).norm() - 1.0).abs());
    }
    // (b) mass-changing identity on the first 10 pairs that differ in both m2 and E
    let mut pairs = 0;
    let mut worst: f64 = 0.0;
    'outer: for (i, a) in modes.iter().enumerate() {
        for b in &modes[i + 1..] {
            if a.m2 == b.m2 || (a.e - b.e).abs() < 1e-9 {
                continue;
            }
            worst = worst.max(extfield::extended_orthogonality_check(&field, a, b).residual);
            pairs += 1;
            if pairs == 10 {
                break 'outer;
            }
        }
    }
    // (c) two eigenvectors of F(E) at one energy carry different m2 and are orthogonal
    let e0 = modes[0].e;
    let eq = extfield::modes_at_energy(&field, e0, &[0, 1])?;
    let plain = extfield::line_inner(&field, &eq[0].psi, &eq[1].psi).norm();
    Ok(vec![
        Row::within("norm_vs_de_dm2_qa", hf, 0.0, 1e-6),
        Row::at_least("mass_changing_pairs", pairs as f64, 10.0),
        Row::within("mass_changing_identity", worst, 0.0, 1e-8),
        Row::within("equal_energy_plain_overlap", plain, 0.0, 1e-6),
        Row::within("equal_energy_m2_gap", (eq[0].m2 - eq[1].m2).abs(), 0.0, f64::INFINITY),
        Row::within("qa_normalization", qa_norm, 0.0, 1e-10),
    ])
}

fn free_basis_spread(p: &Params) -> Result<Vec<Row>> {
    let k = DeltaKernel::gaussian(p.f64("T")?);
    let m2 = p.f64("m2")?;
    let n = p.usize("n")?;
    let h = p.f64("h")?;
    let g = Grid4::new(p.usize("n_t")?, [n, 1, 1], p.f64("dt")?, [h, 1.0, 1.0])?;
    let scan = ScanOptions { e_lo: 0.3, e_hi: 1.3, steps: 60, branches: 3 };
    let ratio = |depth: f64| -> Result<f64> {
        let line = Line::new(n, h, Boundary::Periodic)?;
        let field = if depth == 0.0 {
            ExternalField::zero(line)
        } else {
            ExternalField::square_well(line, 1.0, 0.5 * n as f64 * h, 2.0, depth)
        };
        let modes = extfield::solve_modes(&field, m2, &scan)?;
        let d = extfield::free_basis_content(&field, &modes[0], &k, &g, None)?;
        Ok(d.width(Branch::Plus) / k.width())
    };
    Ok(vec![Row::within("free_width_over_kernel", ratio(0.0)?, 1.0, 0.1), Row::at_least("bound_width_over_kernel", ratio(p.f64("depth")?)?, 3.0)])
}

/// Single lattice plane wave with wavenumbers `(kt, kx)`.
fn plane_wave(g: Grid4, kt: i64, kx: i64) -> Result<HistoryState> {
    let it = g.index_of_wavenumber(0, kt).ok_or_else(|| Error::Invalid("time wavenumber off lattice".into()))?;
    let ix = g.index_of_wavenumber(1, kx).ok_or_else(|| Error::Invalid("space wavenumber off lattice".into()))?;
    Ok(HistoryState::peak(g, g.index([it, ix, 0, 0]), Complex64::new(1.0, 0.0)))
}

/// Divergence residuals of two free plane waves, `E = 1.25, p = 0.75`
/// (`m2 = 1`) and `E = 1.3, p = 0.7` (`m2 = 1.2`), in a box of length `40 pi`.
pub fn plane_wave_divergence(n: usize, how: Deriv, cross: bool) -> Result<f64> {
    let d = 40.0 * PI / n as f64;
    let g = Grid4::new(n, [n, 1, 1], d, [d, 1.0, 1.0])?;
    let psi = plane_wave(g, 25, 15)?;
    let (phi, m2p) = if cross { (plane_wave(g, 26, 14)?, 1.2) } else { (plane_wave(g, 25, -15)?, 1.0) };
    Ok(current::divergence_identity_check(&phi, m2p, &psi, 1.0, None, how)?.max_err)
}

fn current_identities(p: &Params) -> Result<Vec<Row>> {
    let n = p.usize("n")?;
    let cross = plane_wave_divergence(n, Deriv::Spectral, true)?;
    let equal = plane_wave_divergence(n, Deriv::Spectral, false)?;
    let fd: Vec<f64> = [n, 2 * n, 4 * n].iter().map(|&m| plane_wave_divergence(m, Deriv::Centered, true)).collect::<Result<_>>()?;
    let order = fit_order(&[1.0, 0.5, 0.25], &fd);
    // charge of a two-mode superposition in a static well
    let mut q = Params::defaults(find("extfield_identities").map(|e| e.params).unwrap_or(&[]));
    q.set("depth", p.str("depth")?)?;
    let field = well_line(&q)?;
    let scan = ScanOptions { e_lo: 0.6, e_hi: 1.3, steps: 60, branches: 6 };
    let modes = extfield::solve_modes(&field, 1.0, &scan)?;
    if modes.len() < 2 {
        return Err(Error::Invalid("need two modes for the charge checks".into()));
    }
    let sup = [(Complex64::new(1.0, 0.0), &modes[0]), (Complex64::new(0.6, 0.3), &modes[1])];
    let times: Vec<f64> = (0..=20).map(|i| i as f64 * 2.5).collect();
    let drift = current::qa_drift(&field, &sup, &times)?;
    let g = Grid4::new(1024, [field.line.lattice_points(), 1, 1], 0.5, [field.line.h, 1.0, 1.0])?;
    let k = DeltaKernel::gaussian(40.0);
    let hist = extfield::mode_history(&field, &sup, &g, &k)?;
    let a0 = field.embed_real(&field.a0, &g)?;
    let ns = g.spatial_len();
    let mut op: f64 = 0.0;
    for t in [0.0, 3.7, 11.2] {
        let r = current::qa_operator_form_check(&hist, &hist, t, field.e, &a0[..ns])?;
        op = op.max(rel(r.operator_form, r.direct));
    }
    Ok(vec![
        Row::within("divergence_spectral_cross_mass", cross, 0.0, 1e-8),
        Row::within("divergence_spectral_equal_mass", equal, 0.0, 1e-8),
        Row::within("divergence_centered_n", fd[0], 0.0, f64::INFINITY),
        Row::at_least("centered_order", order, 1.9),
        Row::within("qa_drift", drift, 0.0, 1e-8),
        Row::within("qa_operator_form", op, 0.0, 1e-10),
    ])
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn fit_order(x: &[f64], y: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = x.iter().zip(y).filter(|(a, b)| **a > 0.0 && **b > 0.0).map(|(a, b)| (a.ln(), b.ln())).collect();
    let n = pts.len() as f64;
    if n < 2.0 {
        return f64::NAN;
    }
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |s, p| (s.0 + p.0, s.1 + p.1));
    let (mx, my) = (sx / n, sy / n);
    let (num, den) = pts.iter().fold((0.0, 0.0), |s, p| (s.0 + (p.0 - mx) * (p.1 - my), s.1 + (p.0 - mx).powi(2)));
    num / den
}

fn nonrel_norm(p: &Params) -> Result<Vec<Row>> {
    let m = p.f64("m")?;
    let shell = NonrelShell::new(m);
    let g = line_grid_1d(p, "n_t", "dt", "n_x", "dx")?;
    let k = DeltaKernel::gaussian(p.f64("T")?);
    let mut a = onshell::gaussian_amplitude(&g, [p.f64("center")?, 0.0, 0.0], p.f64("sigma")?);
    let s = (a.iter().map(|v| v.norm_sqr()).sum::<f64>() * g.spatial_p_measure()).sqrt();
    a.iter_mut().for_each(|v| *v /= s);
    let psi = nonrel::nonrel_history(shell, &a, &g, &k)?;
    let q = nonrel::nonrel_mass_overlap(&psi, m, &psi, m, &k)?.q_estimate.re;
    let schr = nonrel::nonrel_evolution(&g, shell, &a, 0.0);
    let norm = nonrel::slice_norm(&schr);
    let bound = nonrel::velocity_bound(&g, m, &a) + nonrel::kernel_area_error(shell, &g, &a, &k);
    let jac = nonrel::jacobian_norm(&g, m, &a);
    // exact Schroedinger evolution and the group velocity
    let t = 20.0;
    let later = nonrel::nonrel_evolution(&g, shell, &a, t);
    let res = nonrel::schrodinger_residual(&later, shell);
    let x0 = nonrel::centroid(&schr, 1);
    let v = (nonrel::centroid(&later, 1) - x0) / t;
    let v_expected = p.f64("center")? / m;
    // one lattice mode with a long window
    let gm = line_grid_1d(p, "n_t_mode", "dt", "n_x", "dx")?;
    let km = DeltaKernel::gaussian(p.f64("T_mode")?);
    let ix = gm.index_of_wavenumber(1, 8).ok_or_else(|| Error::Invalid("mode off lattice".into()))?;
    let mut single = vec![Complex64::default(); gm.spatial_len()];
    single[ix] = Complex64::new(1.0 / gm.spatial_p_measure().sqrt(), 0.0);
    let one = nonrel::nonrel_history(shell, &single, &gm, &km)?;
    let q1 = nonrel::nonrel_mass_overlap(&one, m, &one, m, &km)?.q_estimate.re;
    let j1 = nonrel::jacobian_norm(&gm, m, &single);
    Ok(vec![
        Row::within("schrodinger_norm_vs_history_norm", (q / norm - 1.0).abs(), 0.0, bound),
        Row::within("history_norm_vs_jacobian", (q - jac).abs() / jac, 0.0, f64::INFINITY),
        Row::within("single_mode_jacobian", (q1 - j1).abs() / j1, 0.0, 1e-8),
        Row::within("schrodinger_residual", res, 0.0, 1e-8),
        Row::within("group_velocity", v, v_expected, 1e-2 * v_expected),
    ])
}

fn generalized_product(p: &Params) -> Result<Vec<Row>> {
    let g = Grid4::new(512, [64, 1, 1], 0.5, [0.5, 1.0, 1.0])?;
    let k = DeltaKernel::gaussian(20.0);
    let a = truncated_gaussian(&g, 0.3, 0.5, 1.5);
    let psi = onshell::build_onshell(&OnShellSpec::new(1.0, Branch::Plus, a, Normalization::InvariantM2), &g, &k)?;
    let depth = p.f64("phi_depth")?;
    let phi: Vec<f64> = (0..g.len()).map(|i| -depth * (-g.x_vec(i)[1].powi(2) / 8.0).exp()).collect();
    let base = products::inner4(&psi, &psi)?;
    let (c0, ratio, n) = (p.f64("c")?, p.f64("ratio")?, p.usize("points")?);
    let cs: Vec<f64> = (0..n).map(|i| c0 * ratio.powi(i as i32)).collect();
    let diffs: Vec<f64> = cs.iter().map(|&c| Ok((nonrel::generalized_product(&psi, &psi, &phi, c)? - base).norm())).collect::<Result<_>>()?;
    let slope = fit_order(&cs, &diffs);
    let zero = vec![0.0; g.len()];
    let same = nonrel::generalized_product(&psi, &psi, &zero, 1.0)? == base;
    let line = Line::new(200, 0.1, Boundary::Dirichlet)?;
    let well: Vec<f64> = (0..line.n).map(|j| -0.02 * (-(line.x(j) - 10.05).powi(2) / 4.0).exp()).collect();
    let pair = nonrel::mass_dependent_pair(line, &well, 5.0, 0)?;
    Ok(vec![
        Row::within("loglog_slope", slope, -2.0, 0.1),
        Row::within("difference_at_smallest_c", diffs[0], 0.0, f64::INFINITY),
        Row::at_least("zero_potential_exact", same as u8 as f64, 1.0),
        Row::within("mass_pair_weighted_overlap", (pair.weighted_overlap - pair.correction).abs(), 0.0, 1e-10),
    ])
}

fn fock_algebra(p: &Params) -> Result<Vec<Row>> {
    let m2 = p.f64("m2")?;
    let w = p.f64("rapidity")?;
    let r = Rapidity::along_x(w);
    let ms = ModeSet::boost_orbit([m2.sqrt(), 0.0, 0.0, 0.0], &r, p.usize("modes")?, p.f64("dp0")?, p.f64("dps")?, p.usize("n_max")?)?;
    let rep = fock::commutator_check(&ms, m2);
    // [J, c+] = (p^2 - m^2) c+: zero on shell, exact eigen-relation off shell
    let cons = fock::constraint_commutators(&ms, m2);
    let on = cons.iter().map(|c| c.size).fold(0.0, f64::max);
    let off_ms = ModeSet::new(
        vec![fock::Mode::new([1.5, 0.3, 0.0, 0.0], 0.1, 0.2), fock::Mode::new([1.2, 0.0, 0.2, 0.0], 0.1, 0.2)],
        ms.n_max,
    )?;
    let off = fock::constraint_commutators(&off_ms, m2);
    let off_defect = off.iter().map(|c| c.defect / c.size).fold(0.0, f64::max);
    let off_size = off.iter().map(|c| c.size).fold(f64::INFINITY, f64::min);
    // boost: relabelling, on-shell factor, conjugation and isometry on the domain
    let map = fock::boost_operators(&ms, &r)?;
    let factor = map.onshell_factor(&ms, 0, m2)?;
    let t0 = map.target(0)?;
    let range = map.range();
    let conj = &range * (map.conjugate(&ms.c(0)) - ms.c(t0)) * &range;
    let conj_err = conj.iter().map(|v| v.norm()).fold(0.0, f64::max) * ms.modes[0].vol().sqrt();
    let iso = map.u.adjoint() * &map.u - map.domain(&ms);
    let iso_err = iso.iter().map(|v| v.norm()).fold(0.0, f64::max);
    // one-particle Fock norm against the Wigner norm
    let f: Vec<Complex64> = (0..ms.modes.len()).map(|i| Complex64::new(1.0 / (1.0 + i as f64), 0.2 * i as f64)).collect();
    let st = fock::one_particle_state(&ms, m2, &f);
    let wig: f64 = fock::wigner_amplitudes(&ms, &f)
        .iter()
        .zip(&ms.modes)
        .map(|((q, a), m)| m.dps * a.norm_sqr() / ((2.0 * PI).powi(ms.dim as i32) * 2.0 * onshell::energy(m2, *q)))
        .sum();
    // two-particle time structure
    let k = DeltaKernel::gaussian(p.f64("T")?);
    let n = ms.modes.len();
    let mut amp = CMat::zeros(n, n);
    amp[(0, 1)] = Complex64::new(1.0, 0.0);
    amp[(1, 0)] = Complex64::new(1.0, 0.0);
    let (_, generic) = fock::two_particle_history(&ms, m2, &amp, &k, TimeStructureOptions::default())?;
    let mut single = CMat::zeros(n, n);
    single[(0, 0)] = Complex64::new(1.0, 0.0);
    let (_, prod) = fock::two_particle_history(&ms, m2, &single, &k, TimeStructureOptions::default())?;
    Ok(vec![
        Row::within("canonical_commutator", rep.canonical, 0.0, 1e-12),
        Row::within("annihilators_commute", rep.annihilators, 0.0, 1e-12),
        Row::within("onshell_commutator", rep.onshell, 0.0, 1e-12),
        Row::within("constraint_onshell", on, 0.0, 1e-12),
        Row::within("constraint_offshell_defect", off_defect, 0.0, 1e-12),
        Row::at_least("constraint_offshell_size", off_size, 1e-3),
        Row::within("boost_onshell_factor", factor, w.cosh().sqrt(), 1e-12),
        Row::within("boost_conjugation", conj_err, 0.0, 1e-12),
        Row::within("boost_isometry", iso_err, 0.0, 1e-12),
        Row::within("wigner_fock_norm", (st.norm_sq() - wig).abs() / wig, 0.0, 1e-12),
        Row::at_least("symmetrized_pair_rank", generic.rank as f64, 2.0),
        Row::within("single_mode_pair_rank", prod.rank as f64, 1.0, 0.0),
        Row::at_least("symmetrized_pair_off_diagonal", generic.off_diagonal, 0.1),
    ])
}

fn stueckelberg(p: &Params) -> Result<Vec<Row>> {
    let g = Grid4::new(64, [64, 1, 1], 0.5, [0.5, 1.0, 1.0])?;
    let (kt, kx) = (p.usize("kt")? as i64, p.usize("kx")? as i64);
    let psi = plane_wave(g, kt, kx)?;
    let (p0, px) = (kt as f64 * g.dp(0), kx as f64 * g.dp(1));
    let m2 = p0 * p0 - px * px;
    let rep = onshell::stueckelberg_check(&psi, m2, &[0.5, 5.0, 50.0]);
    let off = onshell::stueckelberg_check(&psi, m2 + 0.1, &[]);
    Ok(vec![
        Row::within("generator_residual", rep.generator, 0.0, 1e-12),
        Row::within("evolution_residual", rep.evolution, 0.0, 1e-12),
        Row::within("off_shell_generator", off.generator, 0.05, 1e-12),
    ])
}

fn random_c(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

fn random_properties(p: &Params) -> Result<Vec<Row>> {
    let mut rng = ChaCha8Rng::seed_from_u64(p.u64("seed")?);
    let trials = p.usize("trials")?;
    let mut herm: f64 = 0.0;
    let mut sesq: f64 = 0.0;
    let mut parseval: f64 = 0.0;
    let mut conj_j: f64 = 0.0;
    let mut iso: f64 = 0.0;
    for _ in 0..trials {
        // F(E) of a random static field on a random boundary
        let bc = if rng.random_bool(0.5) { Boundary::Periodic } else { Boundary::Dirichlet };
        let line = Line::new(rng.random_range(8..24), rng.random_range(0.05..0.5), bc)?;
        let coef: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let field = ExternalField::from_fn(line, rng.random_range(0.1..2.0), |x| ((coef[0] * x).sin() * coef[1], (coef[2] * x).cos() * coef[3]));
        let f = field.f_matrix(rng.random_range(-2.0..2.0));
        let top = f.iter().map(|v| v.norm()).fold(0.0, f64::max);
        herm = herm.max((&f - f.adjoint()).iter().map(|v| v.norm()).fold(0.0, f64::max) / top);
        // random states on a small grid
        let g = Grid4::new(8, [8, 4, 1], 0.5, [0.5, 0.7, 1.0])?;
        let st = |rng: &mut ChaCha8Rng| HistoryState { grid: g, amp: (0..g.len()).map(|_| random_c(rng)).collect(), shell: None };
        let (a, b, c) = (st(&mut rng), st(&mut rng), st(&mut rng));
        let (x, y) = (random_c(&mut rng), random_c(&mut rng));
        let lin = a.scale(x).add(&b.scale(y))?;
        let lhs = products::inner4(&lin, &c)?;
        let rhs = x.conj() * products::inner4(&a, &c)? + y.conj() * products::inner4(&b, &c)?;
        sesq = sesq.max(rel(lhs, rhs));
        parseval = parseval.max(rel(products::inner4_position(&a, &b)?, products::inner4(&a, &b)?));
        // j[phi, psi] = conj(j[psi, phi])
        let j1 = current::current_density(&a, &b, None, Deriv::Spectral)?;
        let j2 = current::current_density(&b, &a, None, Deriv::Spectral)?;
        let top = j1.j.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max);
        for mu in 0..4 {
            for (u, v) in j1.j[mu].iter().zip(&j2.j[mu]) {
                conj_j = conj_j.max((u - v.conj()).norm() / top);
            }
        }
        // random boost of a random orbit: U+U is the domain projector
        let w = rng.random_range(0.1..1.0);
        let ms = ModeSet::boost_orbit([1.0, 0.0, 0.0, 0.0], &Rapidity::along_x(w), rng.random_range(2..5), 0.1, 0.2, rng.random_range(1..4))?;
        let map = fock::boost_operators(&ms, &Rapidity::along_x(w))?;
        let d: DMatrix<Complex64> = map.u.adjoint() * &map.u - map.domain(&ms);
        iso = iso.max(d.iter().map(|v| v.norm()).fold(0.0, f64::max));
    }
    Ok(vec![
        Row::within("f_matrix_hermitian", herm, 0.0, 1e-12),
        Row::within("inner4_sesquilinear", sesq, 0.0, 1e-12),
        Row::within("inner4_parseval", parseval, 0.0, 1e-12),
        Row::within("current_conjugation", conj_j, 0.0, 1e-12),
        Row::within("boost_isometry", iso, 0.0, 1e-12),
    ])
}
