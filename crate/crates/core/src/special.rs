//! Modified Bessel function `K1`, coded from its power series and its
//! integral representation so that it shares nothing with the propagator
//! quadrature.

use std::f64::consts::PI;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `K1(x)` for `x > 0`: power series up to `x = 1`, above that the
/// trapezoid rule on `int_0^inf e^{-x cosh t} cosh t dt`. The integrand is
/// even and entire, so the rule converges faster than any power of the step.
pub fn bessel_k1(x: f64) -> f64 {
    assert!(x > 0.0, "K1 needs x > 0");
    if x <= 1.0 {
        k1_series(x)
    } else {
        k1_integral(x)
    }
}

fn k1_series(x: f64) -> f64 {
    let y = 0.25 * x * x;
    // term_k = (x/2)^{2k+1} / (k! (k+1)!)
    let mut term = 0.5 * x;
    // psi(k+1) + psi(k+2)
    let mut psi_sum = -2.0 * EULER_GAMMA + 1.0;
    let mut i1 = 0.0;
    let mut tail = 0.0;
    for k in 0..200 {
        i1 += term;
        tail += psi_sum * term;
        let kf = k as f64;
        term *= y / ((kf + 1.0) * (kf + 2.0));
        psi_sum += 1.0 / (kf + 1.0) + 1.0 / (kf + 2.0);
        if term < 1e-18 * i1 {
            break;
        }
    }
    1.0 / x + i1 * (0.5 * x).ln() - 0.5 * tail
}

fn k1_integral(x: f64) -> f64 {
    // the peak at t = 0 has width ~ 1/sqrt(x)
    let h = 0.1 / (x.sqrt() / 3.0).max(1.0);
    // scale out e^{-x} to keep large x representable
    let f = |t: f64| (-x * (t.cosh() - 1.0)).exp() * t.cosh();
    let mut s = 0.5 * f(0.0);
    let mut k = 1;
    loop {
        let v = f(k as f64 * h);
        s += v;
        if v < 1e-18 * s {
            break;
        }
        k += 1;
    }
    s * h * (-x).exp()
}

/// Equal-time propagator `D(0, r) = m K1(m r) / (4 pi^2 r)` in three
/// spatial dimensions.
pub fn equal_time_d(m: f64, r: f64) -> f64 {
    m * bessel_k1(m * r) / (4.0 * PI * PI * r)
}
