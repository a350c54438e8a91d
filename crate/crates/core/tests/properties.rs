//! Randomized invariants: products, gauge covariance, Lorentz maps, charge
//! routes, Fock commutators and kernel normalization.

use histlat::current::{current_density, Deriv};
use histlat::experiments::fit_order;
use histlat::extfield::{f_of_e_spectrum, Boundary, ExternalField, Line};
use histlat::fock::{commutator_check, ModeSet};
use histlat::grid::{Grid4, HistoryState, Rapidity};
use histlat::kernel::DeltaKernel;
use histlat::onshell::{conditioned_state, time_index};
use histlat::products::{inner4, inner4_position, kg_product};
use num_complex::Complex64;
use proptest::prelude::*;

fn small_grid() -> Grid4 {
    Grid4::new(8, [6, 4, 1], 0.5, [0.7, 0.9, 1.0]).unwrap()
}

fn state(grid: Grid4, re: &[f64], im: &[f64]) -> HistoryState {
    let mut s = HistoryState::zeros(grid);
    for (i, a) in s.amp.iter_mut().enumerate() {
        *a = Complex64::new(re[i % re.len()], im[(3 * i + 1) % im.len()]);
    }
    s
}

fn amps() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 7..23)
}

fn field(n: usize, bc: Boundary, coef: &[f64]) -> ExternalField {
    let line = Line::new(n, 0.3, bc).unwrap();
    let l = line.length();
    ExternalField::from_fn(line, 0.8, |x| {
        let u = 2.0 * std::f64::consts::PI * x / l;
        (coef[0] * u.sin() + coef[1] * (2.0 * u).cos(), coef[2] * u.cos())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn inner4_is_conjugate_symmetric_and_sesquilinear(
        a in amps(), b in amps(), c in amps(), cr in -2.0f64..2.0, ci in -2.0f64..2.0,
    ) {
        let g = small_grid();
        let (phi, psi, chi) = (state(g, &a, &b), state(g, &b, &c), state(g, &c, &a));
        let k = Complex64::new(cr, ci);
        let ab = inner4(&phi, &psi).unwrap();
        let ba = inner4(&psi, &phi).unwrap();
        prop_assert!((ab - ba.conj()).norm() <= 1e-12 * (1.0 + ab.norm()));
        let lhs = inner4(&phi, &psi.scale(k).add(&chi).unwrap()).unwrap();
        let rhs = k * ab + inner4(&phi, &chi).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()));
        let anti = inner4(&phi.scale(k), &psi).unwrap();
        prop_assert!((anti - k.conj() * ab).norm() <= 1e-12 * (1.0 + anti.norm()));
        prop_assert!(inner4(&phi, &phi).unwrap().re >= 0.0);
    }

    #[test]
    fn momentum_and_position_products_agree(a in amps(), b in amps()) {
        let g = small_grid();
        let (phi, psi) = (state(g, &a, &b), state(g, &b, &a));
        let p = inner4(&phi, &psi).unwrap();
        let x = inner4_position(&phi, &psi).unwrap();
        prop_assert!((p - x).norm() <= 1e-12 * (1.0 + p.norm()), "{} vs {}", p, x);
    }

    #[test]
    fn f_matrix_is_hermitian(c in prop::collection::vec(-1.0f64..1.0, 3), e in -2.0f64..2.0, periodic in any::<bool>()) {
        let bc = if periodic { Boundary::Periodic } else { Boundary::Dirichlet };
        let f = field(12, bc, &c).f_matrix(e);
        let dev = (&f - f.adjoint()).iter().map(|v| v.norm()).fold(0.0, f64::max);
        let top = f.iter().map(|v| v.norm()).fold(0.0, f64::max);
        prop_assert!(dev <= 1e-13 * top, "{}", dev);
    }

    #[test]
    fn constant_potential_shift_moves_energies(
        c in prop::collection::vec(-1.0f64..1.0, 3), e in -1.5f64..1.5, shift in -1.0f64..1.0, periodic in any::<bool>(),
    ) {
        let bc = if periodic { Boundary::Periodic } else { Boundary::Dirichlet };
        let f = field(10, bc, &c);
        let a = f_of_e_spectrum(&f, e).unwrap();
        let b = f_of_e_spectrum(&f.shifted(shift), e + f.e * shift).unwrap();
        let scale = a.m2.iter().fold(1.0f64, |s, v| s.max(v.abs()));
        for (x, y) in a.m2.iter().zip(&b.m2) {
            prop_assert!((x - y).abs() <= 1e-11 * scale, "{} vs {}", x, y);
        }
    }

    #[test]
    fn boosts_preserve_the_interval_and_invert(
        p in prop::array::uniform4(-3.0f64..3.0), d in prop::array::uniform3(-1.0f64..1.0), w in -2.0f64..2.0,
    ) {
        prop_assume!(d.iter().map(|c| c * c).sum::<f64>() > 1e-3);
        let r = Rapidity::new(d, w).unwrap();
        let q = r.apply(p);
        let sq = |v: [f64; 4]| v[0] * v[0] - v[1] * v[1] - v[2] * v[2] - v[3] * v[3];
        let big = q.iter().chain(&p).fold(1.0f64, |s, v| s.max(v.abs()));
        prop_assert!((sq(p) - sq(q)).abs() <= 1e-12 * big * big);
        let back = r.inverse().apply(q);
        for k in 0..4 {
            prop_assert!((back[k] - p[k]).abs() <= 1e-12 * big);
        }
    }

    #[test]
    fn charge_matches_the_slice_product(a in amps(), b in amps(), k in -3i64..4) {
        // conditioned states carry sqrt(2pi) each, so Q = 2pi times the charge
        let g = small_grid();
        let (phi, psi) = (state(g, &a, &b), state(g, &b, &a));
        let t = k as f64 * g.d[0];
        let it = time_index(&g, t).unwrap();
        let j = current_density(&phi, &psi, None, Deriv::Spectral).unwrap();
        let q = kg_product(&conditioned_state(&phi, t).unwrap(), &conditioned_state(&psi, t).unwrap()).unwrap();
        let want = j.charge(it) * 2.0 * std::f64::consts::PI;
        prop_assert!((q - want).norm() <= 1e-12 * (1.0 + q.norm()), "{} vs {}", q, want);
    }

    #[test]
    fn current_of_a_state_with_itself_is_real(a in amps(), b in amps()) {
        let g = small_grid();
        let psi = state(g, &a, &b);
        let j = current_density(&psi, &psi, None, Deriv::Centered).unwrap();
        let top = j.j.iter().flatten().fold(1e-300f64, |s, v| s.max(v.norm()));
        for comp in &j.j {
            for v in comp {
                prop_assert!(v.im.abs() <= 1e-13 * top);
            }
        }
    }

    #[test]
    fn canonical_commutators_hold_on_boost_orbits(
        px in -1.0f64..1.0, py in -1.0f64..1.0, w in 0.05f64..0.6, count in 1usize..4, n_max in 1usize..4,
        dp0 in 0.05f64..0.5, dps in 0.05f64..0.5,
    ) {
        let m2 = 1.0;
        let e = (m2 + px * px + py * py).sqrt();
        let r = Rapidity::new([1.0, 0.3, 0.0], w).unwrap();
        let ms = ModeSet::boost_orbit([e, px, py, 0.0], &r, count, dp0, dps, n_max).unwrap();
        let rep = commutator_check(&ms, m2);
        prop_assert!(rep.canonical <= 1e-12, "{:?}", rep);
        prop_assert!(rep.annihilators <= 1e-12, "{:?}", rep);
        prop_assert!(rep.onshell <= 1e-12, "{:?}", rep);
    }

    #[test]
    fn fit_order_recovers_power_laws(k in -4.0f64..4.0, c in 0.1f64..10.0, x0 in 0.1f64..2.0) {
        let x: Vec<f64> = (0..6).map(|i| x0 * 1.5f64.powi(i)).collect();
        let y: Vec<f64> = x.iter().map(|v| c * v.powf(k)).collect();
        prop_assert!((fit_order(&x, &y) - k).abs() <= 1e-10);
    }

    #[test]
    fn gaussian_kernel_has_unit_area_and_its_overlap_is_a_convolution(t in 2.0f64..60.0, a in -0.2f64..0.2) {
        let k = DeltaKernel::gaussian(t);
        let cut = k.cutoff();
        let n = 4000;
        let du = 2.0 * cut / n as f64;
        let u = |i: usize| -cut + i as f64 * du;
        let area: f64 = (0..=n).map(|i| k.value(u(i))).sum::<f64>() * du;
        prop_assert!((area - 1.0).abs() <= 1e-10, "{}", area);
        let b = a * k.width();
        let conv: f64 = (0..=n).map(|i| k.value(u(i)) * k.value(u(i) - b)).sum::<f64>() * du;
        prop_assert!((conv - k.overlap(b)).abs() <= 1e-10 * k.overlap(0.0), "{} vs {}", conv, k.overlap(b));
    }
}
