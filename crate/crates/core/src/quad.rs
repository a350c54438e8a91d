//! Adaptive Gauss-Kronrod quadrature and Gauss-Legendre rules.

use crate::error::{Error, Result};
use num_complex::Complex64;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One 15-point Kronrod panel: (integral, error estimate).
pub fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += s * WGK[j];
        if j % 2 == 1 {
            g += s * WG[j / 2];
        }
    }
    let err = ((k - g) * h).norm();
    (k * h, err)
}

/// Globally adaptive integration of `f` over `[a, b]`, starting from
/// `panels` equal subintervals and bisecting the worst panel until the
/// summed error estimate is below `tol`.
pub fn integrate<F: Fn(f64) -> Complex64>(
    f: F,
    a: f64,
    b: f64,
    panels: usize,
    tol: f64,
    max_panels: usize,
) -> Result<(Complex64, f64)> {
    let n = panels.max(1);
    let h = (b - a) / n as f64;
    let mut work: Vec<(f64, f64, Complex64, f64)> = (0..n)
        .map(|i| {
            let (lo, hi) = (a + i as f64 * h, a + (i + 1) as f64 * h);
            let (v, e) = gk15(&f, lo, hi);
            (lo, hi, v, e)
        })
        .collect();
    loop {
        let err: f64 = work.iter().map(|w| w.3).sum();
        if err <= tol {
            let v = work.iter().map(|w| w.2).sum();
            return Ok((v, err));
        }
        if work.len() >= max_panels {
            return Err(Error::QuadratureFailure { tol, estimate: err });
        }
        let (k, _) =
            work.iter().enumerate().fold(
                (0, -1.0),
                |acc, (i, w)| if w.3 > acc.1 { (i, w.3) } else { acc },
            );
        let (lo, hi, _, _) = work.swap_remove(k);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        work.push((lo, mid, v1, e1));
        work.push((mid, hi, v2, e2));
    }
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 {
                1.0
            } else if n == 1 {
                z
            } else {
                p1
            };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        if n == 1 {
            z = 0.0;
            dp = 1.0;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n == 1 {
        w[0] = 2.0;
    }
    (x, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_integrates_polynomials_exactly() {
        for n in [1, 2, 5, 16] {
            let (x, w) = gauss_legendre(n);
            for deg in 0..2 * n {
                let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 {
                    0.0
                } else {
                    2.0 / (deg as f64 + 1.0)
                };
                assert!((s - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn adaptive_oscillatory() {
        // int_0^10 cos(20x) e^{-x} dx
        let (v, _) = integrate(
            |x| Complex64::new((20.0 * x).cos() * (-x).exp(), 0.0),
            0.0,
            10.0,
            4,
            1e-12,
            10_000,
        )
        .unwrap();
        let exact = (1.0 - (-10.0f64).exp() * ((200.0f64).cos() - 20.0 * (200.0f64).sin())) / 401.0;
        assert!((v.re - exact).abs() < 1e-11);
    }
}
