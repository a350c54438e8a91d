//! Library results against independently coded references: Bessel series,
//! a shooting solver, closed-form lattice spectra and quadrature rules.
//! Reference numbers were computed outside this crate and frozen here.

use histlat::extfield::{solve_modes, Boundary, ExternalField, Line, ScanOptions};
use histlat::propagator::propagator_d;
use histlat::quad::gauss_legendre;
use histlat::special::{bessel_k1, equal_time_d};
use std::f64::consts::PI;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `(J1(x), Y1(x))` from their power series.
fn j1_y1(x: f64) -> (f64, f64) {
    let (mut term, mut psi, mut j1, mut tail) = (0.5 * x, 1.0 - 2.0 * EULER_GAMMA, 0.0, 0.0);
    for k in 0..80 {
        let sgn = if k % 2 == 0 { 1.0 } else { -1.0 };
        j1 += sgn * term;
        tail += sgn * psi * term;
        let kf = k as f64;
        term *= 0.25 * x * x / ((kf + 1.0) * (kf + 2.0));
        psi += 1.0 / (kf + 1.0) + 1.0 / (kf + 2.0);
    }
    (j1, 2.0 / PI * j1 * (0.5 * x).ln() - 2.0 / (PI * x) - tail / PI)
}

// scipy.special.k1, j1, y1
const K1_TABLE: [(f64, f64); 6] = [
    (0.1, 9.853844780870606),
    (0.5, 1.6564411200033007),
    (1.0, 0.6019072301972346),
    (2.0, 0.13986588181652243),
    (5.0, 0.0040446134454521655),
    (10.0, 1.8648773453825585e-05),
];
const J1_TABLE: [(f64, f64); 3] = [(1.0, 0.44005058574493355), (2.0, 0.5767248077568734), (5.0, -0.3275791375914652)];
const Y1_TABLE: [(f64, f64); 3] = [(1.0, -0.7812128213002887), (2.0, -0.10703243154093754), (5.0, 0.14786314339122683)];

#[test]
fn k1_matches_reference_values() {
    for (x, v) in K1_TABLE {
        assert!((bessel_k1(x) - v).abs() <= 1e-14 * v, "K1({x}) = {} vs {v}", bessel_k1(x));
    }
}

#[test]
fn k1_branches_agree_at_the_switch() {
    // series up to 1, integral representation above
    let below = bessel_k1(1.0);
    let above = bessel_k1(1.0 + 1e-15);
    assert!((below - above).abs() < 1e-14 * below);
    // K1(x) ~ sqrt(pi/2x) e^{-x} (1 + 3/(8x)) far out
    let x: f64 = 40.0;
    let lead = (PI / (2.0 * x)).sqrt() * (-x).exp() * (1.0 + 3.0 / (8.0 * x));
    assert!((bessel_k1(x) / lead - 1.0).abs() < 1e-3);
}

#[test]
fn j1_y1_series_match_reference_values() {
    for ((x, j), (_, y)) in J1_TABLE.iter().zip(Y1_TABLE) {
        let (jj, yy) = j1_y1(*x);
        assert!((jj - j).abs() < 1e-14, "J1({x})");
        assert!((yy - y).abs() < 1e-14, "Y1({x})");
    }
}

#[test]
fn equal_time_propagator_is_bessel() {
    for m in [0.5, 1.0, 2.0] {
        for r in [0.2, 0.7, 1.5, 3.0] {
            let q = propagator_d([0.0, r, 0.0, 0.0], m).unwrap();
            let o = equal_time_d(m, r);
            assert!((q.re - o).abs() <= 1e-6 * o && q.im.abs() <= 1e-6 * o, "m={m} r={r}: {q} vs {o}");
        }
    }
}

#[test]
fn timelike_propagator_is_hankel() {
    // continuation of the spacelike form to t > r > 0:
    // D = m (Y1(ms) + i J1(ms)) / (8 pi s), s = sqrt(t^2 - r^2)
    for (t, r) in [(1.0f64, 0.5f64), (2.0, 1.0), (3.0, 0.0), (4.0, 2.0), (2.5, 2.0)] {
        let m = 1.0;
        let s = (t * t - r * r).sqrt();
        let (j, y) = j1_y1(m * s);
        let c = m / (8.0 * PI * s);
        let q = propagator_d([t, r, 0.0, 0.0], m).unwrap();
        let o = num_complex::Complex64::new(c * y, c * j);
        assert!((q - o).norm() <= 1e-6 * o.norm(), "t={t} r={r}: {q} vs {o}");
    }
}

/// Energies at which the Dirichlet recurrence
/// `psi_{j+1} = (2 - h^2 ((E - V_j)^2 - m^2)) psi_j - psi_{j-1}` vanishes
/// at the far wall, bracketed by sign changes on a fine scan.
fn shooting_energies(v: &[f64], h: f64, m2: f64, e_lo: f64, e_hi: f64) -> Vec<f64> {
    let end = |e: f64| {
        let (mut prev, mut cur) = (0.0f64, 1.0f64);
        for vj in v {
            let next = (2.0 - h * h * ((e - vj).powi(2) - m2)) * cur - prev;
            prev = cur;
            cur = next;
            // keep the magnitude bounded without changing the sign
            let s = cur.abs().max(prev.abs());
            if s > 1e100 {
                cur /= s;
                prev /= s;
            }
        }
        // psi at the far wall
        cur
    };
    let steps = 4000;
    let mut out = Vec::new();
    let mut a = e_lo;
    let mut fa = end(a);
    for i in 1..=steps {
        let b = e_lo + (e_hi - e_lo) * i as f64 / steps as f64;
        let fb = end(b);
        if fa * fb < 0.0 {
            let (mut lo, mut hi, mut flo) = (a, b, fa);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let fm = end(mid);
                if fm * flo <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            out.push(0.5 * (lo + hi));
        }
        a = b;
        fa = fb;
    }
    out
}

#[test]
fn square_well_energies_match_shooting() {
    let line = Line::new(120, 0.1, Boundary::Dirichlet).unwrap();
    let field = ExternalField::square_well(line, 1.0, 6.05, 2.0, 0.3);
    let v: Vec<f64> = field.a0.iter().map(|a| field.e * a).collect();
    let scan = ScanOptions { e_lo: 0.6, e_hi: 1.3, steps: 60, branches: 6 };
    for m2 in [0.9, 1.0, 1.2] {
        let mut got: Vec<f64> = solve_modes(&field, m2, &scan).unwrap().iter().map(|m| m.e).collect();
        got.sort_by(f64::total_cmp);
        let want = shooting_energies(&v, 0.1, m2, 0.6, 1.3);
        assert_eq!(got.len(), want.len(), "m2 = {m2}: {got:?} vs {want:?}");
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-10, "m2 = {m2}: {a} vs {b}");
        }
    }
}

#[test]
fn free_dirichlet_spectrum_is_closed_form() {
    // A = 0: m2_k(E) = E^2 - (2/h)^2 sin^2(k pi / (2(n+1))), so at fixed m2
    // the energies are sqrt(m2 + lambda_k).
    let (n, h) = (40, 0.25);
    let line = Line::new(n, h, Boundary::Dirichlet).unwrap();
    let field = ExternalField::zero(line);
    let scan = ScanOptions { e_lo: 0.5, e_hi: 2.0, steps: 200, branches: 40 };
    let mut got: Vec<f64> = solve_modes(&field, 1.0, &scan).unwrap().iter().map(|m| m.e).collect();
    got.sort_by(f64::total_cmp);
    let want: Vec<f64> = (1..=n)
        .map(|k| (1.0 + (2.0 / h * (k as f64 * PI / (2.0 * (n + 1) as f64)).sin()).powi(2)).sqrt())
        .filter(|e| *e < 2.0)
        .collect();
    assert_eq!(got.len(), want.len());
    for (a, b) in got.iter().zip(&want) {
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
}

#[test]
fn gauss_legendre_three_points() {
    let (x, w) = gauss_legendre(3);
    let mut pts: Vec<(f64, f64)> = x.into_iter().zip(w).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let r = (0.6f64).sqrt();
    let want = [(-r, 5.0 / 9.0), (0.0, 8.0 / 9.0), (r, 5.0 / 9.0)];
    for ((a, wa), (b, wb)) in pts.iter().zip(want) {
        assert!((a - b).abs() < 1e-15 && (wa - wb).abs() < 1e-15);
    }
}

#[test]
fn gauss_legendre_integrates_polynomials_exactly() {
    for n in [4, 8, 16] {
        let (x, w) = gauss_legendre(n);
        for deg in 0..2 * n {
            let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            assert!((s - exact).abs() < 1e-14, "n={n} deg={deg}");
        }
    }
}
