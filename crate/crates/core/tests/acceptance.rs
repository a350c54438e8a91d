//! Acceptance suite: one line per criterion, judged here from the measured
//! values with the tolerances pinned below, not from the experiments' own
//! pass flags. The full suite runs twice; the second run is only used for
//! the byte-for-byte determinism check.

use histlat::experiments::{registry, PROPAGATOR_SEPARATIONS};
use histlat::runner::{run, RunConfig, RunOptions, Summary};
use std::fs;
use std::path::Path;
use std::time::Instant;

const NORM_TOL: f64 = 1e-3;
const BRANCH_TOL: f64 = 1e-12;
const ROUND_TRIP_TOL: f64 = 1e-12;
const DIAGRAM_TOL: f64 = 1e-5;
const PROPAGATOR_TOL: f64 = 1e-3;
const PROPAGATOR_POINTS: usize = 10;
const BESSEL_TOL: f64 = 1e-6;
const CONVOLUTION_TOL: f64 = 1e-2;
const CONVOLUTION_RATIO: f64 = 0.5;
const PROPER_TIME_TOL: f64 = 1e-6;
const HF_TOL: f64 = 1e-6;
const MASS_PAIR_TOL: f64 = 1e-8;
const MASS_PAIRS: f64 = 10.0;
const EQUAL_E_TOL: f64 = 1e-6;
const QA_NORM_TOL: f64 = 1e-10;
const BOUND_SPREAD: f64 = 3.0;
const FREE_SPREAD: f64 = 0.1;
const DIVERGENCE_TOL: f64 = 1e-8;
const FD_ORDER: f64 = 1.9;
const DRIFT_TOL: f64 = 1e-8;
const VELOCITY: f64 = 0.05;
const JACOBIAN_TOL: f64 = 1e-8;
const SLOPE: f64 = -2.0;
const SLOPE_REL: f64 = 0.05;
const FOCK_TOL: f64 = 1e-12;
const PAIR_RANK: f64 = 2.0;
const STUECKELBERG_TOL: f64 = 1e-12;

struct Judge<'a> {
    s: &'a Summary,
    failed: usize,
}

impl Judge<'_> {
    fn get(&self, exp: &str, check: &str) -> f64 {
        let r = self.s.results.iter().find(|r| r.name == exp).unwrap_or_else(|| panic!("{exp} did not run"));
        if let Some(e) = &r.error {
            eprintln!("{exp}: {e}");
            return f64::NAN;
        }
        r.rows.iter().find(|x| x.check == check).map(|x| x.measured).unwrap_or(f64::NAN)
    }

    fn tolerance(&self, exp: &str, check: &str) -> f64 {
        let r = self.s.results.iter().find(|r| r.name == exp).unwrap();
        r.rows.iter().find(|x| x.check == check).map(|x| x.tolerance).unwrap_or(f64::NAN)
    }

    fn report(&mut self, n: usize, title: &str, ok: bool, detail: String) {
        println!("[{}] {n:>2} {title}: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failed += 1;
        }
    }
}

fn full_config() -> RunConfig {
    RunConfig { experiments: registry().iter().map(|e| (e.name.to_string(), e.defaults())).collect(), seed: Some(7) }
}

fn run_into(dir: &Path) -> Summary {
    let opt = RunOptions { out: dir.to_path_buf(), workers: 1, seed: None };
    run(&full_config(), &opt).expect("suite run")
}

fn main() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let t0 = Instant::now();
    let s = run_into(&a);
    let first = t0.elapsed().as_secs_f64();
    let mut j = Judge { s: &s, failed: 0 };

    let (e4, e2, e1) = (
        j.get("free_norm", "q_estimate_error_T/4"),
        j.get("free_norm", "q_estimate_error_T/2"),
        j.get("free_norm", "q_estimate_error"),
    );
    let minus = j.get("free_norm", "q_estimate_error_minus_branch");
    j.report(
        1,
        "norm emergence",
        e1 <= NORM_TOL && minus <= NORM_TOL && e4 > e2 && e2 > e1,
        format!("|q-1| = {e4:.3e}, {e2:.3e}, {e1:.3e} at T = 50, 100, 200 (minus branch {minus:.3e}); tol {NORM_TOL:e}, strictly decreasing"),
    );

    let ip = j.get("branch_orthogonality", "inner4_plus_minus");
    j.report(2, "branch orthogonality", ip <= BRANCH_TOL, format!("|<+|->| = {ip:.3e}; tol {BRANCH_TOL:e}"));

    let (rs, rw, dg) = (
        j.get("wigner", "round_trip_state"),
        j.get("wigner", "round_trip_wigner"),
        j.get("wigner", "boost_diagram"),
    );
    j.report(
        3,
        "Wigner correspondence",
        rs <= ROUND_TRIP_TOL && rw <= ROUND_TRIP_TOL && dg <= DIAGRAM_TOL,
        format!("round trips {rs:.3e}, {rw:.3e} (tol {ROUND_TRIP_TOL:e}); boost diagram {dg:.3e} (tol {DIAGRAM_TOL:e})"),
    );

    let (lq, eb) = (j.get("propagator", "lattice_vs_quadrature"), j.get("propagator", "equal_time_vs_bessel"));
    let timelike = PROPAGATOR_SEPARATIONS.iter().filter(|s| s[0].abs() > s[1].abs()).count();
    let mixed = timelike > 0 && timelike < PROPAGATOR_SEPARATIONS.len();
    j.report(
        4,
        "propagator dual route",
        lq <= PROPAGATOR_TOL && eb <= BESSEL_TOL && PROPAGATOR_SEPARATIONS.len() == PROPAGATOR_POINTS && mixed,
        format!(
            "lattice vs quadrature {lq:.3e} over {} separations ({timelike} timelike), tol {PROPAGATOR_TOL:e}; equal time vs K1 {eb:.3e}, tol {BESSEL_TOL:e}",
            PROPAGATOR_SEPARATIONS.len()
        ),
    );

    let (c0, c1) = (j.get("convolution", "relative_error"), j.get("convolution", "relative_error_refined"));
    j.report(
        5,
        "convolution identity",
        c0 <= CONVOLUTION_TOL && c1 <= CONVOLUTION_RATIO * c0,
        format!("{c0:.3e} (tol {CONVOLUTION_TOL:e}), refined {c1:.3e}, ratio {:.3} (at most {CONVOLUTION_RATIO})", c1 / c0),
    );

    let (ps, pg) = (j.get("proper_time", "proper_time_vs_projector_sinc"), j.get("proper_time", "proper_time_vs_projector_gaussian"));
    j.report(
        6,
        "proper-time route",
        ps <= PROPER_TIME_TOL && pg <= PROPER_TIME_TOL,
        format!("sinc {ps:.3e}, gaussian {pg:.3e}; tol {PROPER_TIME_TOL:e}"),
    );

    let x = "extfield_identities";
    let (hf, np, mi, eo, qa) = (
        j.get(x, "norm_vs_de_dm2_qa"),
        j.get(x, "mass_changing_pairs"),
        j.get(x, "mass_changing_identity"),
        j.get(x, "equal_energy_plain_overlap"),
        j.get(x, "qa_normalization"),
    );
    j.report(
        7,
        "external-field identities",
        hf <= HF_TOL && np >= MASS_PAIRS && mi <= MASS_PAIR_TOL && eo <= EQUAL_E_TOL && qa <= QA_NORM_TOL,
        format!("(a) {hf:.3e} (b) {mi:.3e} over {np} pairs (c) {eo:.3e} (d) {qa:.3e}; tol {HF_TOL:e}, {MASS_PAIR_TOL:e}, {EQUAL_E_TOL:e}, {QA_NORM_TOL:e}"),
    );

    let (fr, br) = (j.get("free_basis_spread", "free_width_over_kernel"), j.get("free_basis_spread", "bound_width_over_kernel"));
    j.report(
        8,
        "free-basis mass spread",
        br > BOUND_SPREAD && (fr - 1.0).abs() <= FREE_SPREAD,
        format!("bound/kernel {br:.3} (> {BOUND_SPREAD}), free/kernel {fr:.4} (within {FREE_SPREAD})"),
    );

    let x = "current_identities";
    let (dc, de, ord, dr) = (
        j.get(x, "divergence_spectral_cross_mass"),
        j.get(x, "divergence_spectral_equal_mass"),
        j.get(x, "centered_order"),
        j.get(x, "qa_drift"),
    );
    j.report(
        9,
        "current identities",
        dc <= DIVERGENCE_TOL && de <= DIVERGENCE_TOL && ord >= FD_ORDER && dr <= DRIFT_TOL,
        format!("spectral divergence {dc:.3e}, {de:.3e} (tol {DIVERGENCE_TOL:e}); FD order {ord:.3} (>= {FD_ORDER}); Q_A drift {dr:.3e} (tol {DRIFT_TOL:e})"),
    );

    let x = "nonrel_norm";
    let (nn, bound, jac, v) = (
        j.get(x, "schrodinger_norm_vs_history_norm"),
        j.tolerance(x, "schrodinger_norm_vs_history_norm"),
        j.get(x, "single_mode_jacobian"),
        j.get(x, "group_velocity"),
    );
    j.report(
        10,
        "non-relativistic norm",
        nn <= bound && jac <= JACOBIAN_TOL && (v - VELOCITY).abs() <= 1e-2 * VELOCITY,
        format!("|N-1| = {nn:.3e} within computed bound {bound:.3e}; Jacobian {jac:.3e} (tol {JACOBIAN_TOL:e}); p/m = {v:.4}"),
    );

    let sl = j.get("generalized_product", "loglog_slope");
    j.report(
        11,
        "generalized product scaling",
        (sl - SLOPE).abs() <= SLOPE_REL * SLOPE.abs(),
        format!("slope {sl:.4} vs {SLOPE} within {}%", SLOPE_REL * 100.0),
    );

    let x = "fock_algebra";
    let exact = [
        "canonical_commutator",
        "annihilators_commute",
        "onshell_commutator",
        "constraint_onshell",
        "constraint_offshell_defect",
        "boost_conjugation",
        "boost_isometry",
        "wigner_fock_norm",
    ];
    let worst = exact.iter().map(|c| j.get(x, c)).fold(0.0, f64::max);
    let off = j.get(x, "constraint_offshell_size");
    let rank = j.get(x, "symmetrized_pair_rank");
    j.report(
        12,
        "Fock algebra",
        worst <= FOCK_TOL && off > 1e3 * FOCK_TOL && rank >= PAIR_RANK,
        format!("worst commutator deviation {worst:.3e} (tol {FOCK_TOL:e}); off-shell [J,c+] size {off:.3}; pair rank {rank} (>= {PAIR_RANK})"),
    );

    let (g, e) = (j.get("stueckelberg", "generator_residual"), j.get("stueckelberg", "evolution_residual"));
    j.report(
        13,
        "Stueckelberg stationarity",
        g <= STUECKELBERG_TOL && e <= STUECKELBERG_TOL,
        format!("generator {g:.3e}, evolution {e:.3e}; tol {STUECKELBERG_TOL:e}"),
    );

    run_into(&b);
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    let differing: Vec<String> = names
        .iter()
        .filter(|n| fs::read(a.join(n)).ok() != fs::read(b.join(n)).ok())
        .map(|n| n.to_string_lossy().into_owned())
        .collect();
    j.report(
        14,
        "determinism",
        differing.is_empty() && names.len() == registry().len() + 1,
        format!("{} CSV files compared byte for byte, {} differ {:?}", names.len(), differing.len(), differing),
    );

    println!("suite time {first:.1} s per run");
    if j.failed > 0 {
        eprintln!("{} acceptance criteria failed", j.failed);
        std::process::exit(1);
    }
}
