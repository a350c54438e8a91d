//! Finite-window regularization of the mass-shell delta function.
//!
//! The window acts on the proper-time variable conjugate to the mass
//! operator: `delta_w(u) = (2pi)^{-1} int dtau w(tau) e^{i tau u}`. A hard
//! window of length `T` gives the sinc kernel `sin(T u/2)/(pi u)`; the
//! Gaussian window `exp(-pi tau^2/T^2)` has the same area and the same
//! `delta(0) = T/2pi`.

use crate::grid::Grid4;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelShape {
    Sinc,
    Gaussian,
}

/// Sign of `p0` on a mass shell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }

    /// Heaviside selector `H(+-p0)`; `p0 = 0` belongs to neither branch.
    pub fn contains(self, p0: f64) -> bool {
        self.sign() * p0 > 0.0
    }
}

/// Where an on-shell history state came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShellTag {
    pub m2: f64,
    pub branch: Branch,
    pub kernel: DeltaKernel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaKernel {
    pub t: f64,
    pub shape: KernelShape,
}

impl DeltaKernel {
    pub fn new(t: f64, shape: KernelShape) -> crate::Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(crate::Error::Invalid(format!(
                "kernel window must be positive, got {t}"
            )));
        }
        Ok(Self { t, shape })
    }

    pub fn sinc(t: f64) -> Self {
        Self {
            t,
            shape: KernelShape::Sinc,
        }
    }

    pub fn gaussian(t: f64) -> Self {
        Self {
            t,
            shape: KernelShape::Gaussian,
        }
    }

    fn s(&self) -> f64 {
        self.t / (2.0 * PI).sqrt()
    }

    /// Window in proper time.
    pub fn window(&self, tau: f64) -> f64 {
        match self.shape {
            KernelShape::Sinc => {
                if tau.abs() <= 0.5 * self.t {
                    1.0
                } else {
                    0.0
                }
            }
            KernelShape::Gaussian => (-PI * tau * tau / (self.t * self.t)).exp(),
        }
    }

    /// Half-length of the proper-time interval outside which the window
    /// vanishes (or drops below 1e-16).
    pub fn tau_support(&self) -> f64 {
        match self.shape {
            KernelShape::Sinc => 0.5 * self.t,
            KernelShape::Gaussian => self.t * (37.0 / PI).sqrt(),
        }
    }

    pub fn delta0(&self) -> f64 {
        self.t / (2.0 * PI)
    }

    /// Regularized `delta(u)`.
    pub fn value(&self, u: f64) -> f64 {
        match self.shape {
            KernelShape::Sinc => sinc_kernel(self.t, u),
            KernelShape::Gaussian => gauss_kernel(self.s(), u),
        }
    }

    /// Kernel of the squared window, i.e. what the overlap of two states
    /// regularized with this kernel converges to: `int du d(u-a) d(u-b)` is
    /// `overlap(a-b)`.
    pub fn overlap(&self, u: f64) -> f64 {
        match self.shape {
            KernelShape::Sinc => sinc_kernel(self.t, u),
            KernelShape::Gaussian => gauss_kernel(self.s() / 2f64.sqrt(), u),
        }
    }

    /// Width of the kernel in its argument. Gaussian: standard deviation of
    /// the normalized `|delta|^2` profile. Sinc: distance to the first zero.
    pub fn width(&self) -> f64 {
        match self.shape {
            KernelShape::Sinc => 2.0 * PI / self.t,
            KernelShape::Gaussian => 1.0 / (self.s() * 2f64.sqrt()),
        }
    }

    /// Argument beyond which the kernel is treated as zero (Gaussian only;
    /// the sinc kernel has no cutoff).
    pub fn cutoff(&self) -> f64 {
        match self.shape {
            KernelShape::Sinc => f64::INFINITY,
            KernelShape::Gaussian => 9.0 / self.s(),
        }
    }

    /// Width in `p0` of the on-shell band at energy `e` (the mass-squared
    /// width divided by `2e`).
    pub fn p0_width(&self, e: f64) -> f64 {
        let w = match self.shape {
            KernelShape::Sinc => 2.0 * PI / self.t,
            KernelShape::Gaussian => 1.0 / self.s(),
        };
        w / (2.0 * e.abs())
    }

    /// Check that the band at energy `e_max` spans at least 1.5 cells of the
    /// time-momentum lattice.
    pub fn check_resolution(&self, grid: &Grid4, e_max: f64) -> crate::Result<()> {
        let w = self.p0_width(e_max);
        let dp0 = grid.dp(0);
        if w < 1.5 * dp0 {
            return Err(crate::Error::Resolution(format!(
                "band width {w:.3e} at E = {e_max:.3} is below 1.5 dp0 = {:.3e}",
                1.5 * dp0
            )));
        }
        if e_max + 4.0 * w > PI / grid.d[0] {
            return Err(crate::Error::Resolution(format!(
                "energy {e_max:.3} beyond the p0 lattice edge {:.3}",
                PI / grid.d[0]
            )));
        }
        Ok(())
    }
}

fn sinc_kernel(t: f64, u: f64) -> f64 {
    let x = 0.5 * t * u;
    if x.abs() < 1e-6 {
        t / (2.0 * PI) * (1.0 - x * x / 6.0)
    } else {
        (x).sin() / (PI * u)
    }
}

fn gauss_kernel(s: f64, u: f64) -> f64 {
    s / (2.0 * PI).sqrt() * (-0.5 * s * s * u * u).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    // Trapezoid sum of (2pi)^{-1} int w(tau) e^{i tau u} dtau.
    fn window_transform(k: &DeltaKernel, u: f64) -> f64 {
        let a = k.tau_support();
        let n = 200_000;
        let h = 2.0 * a / n as f64;
        let mut s = 0.0;
        for i in 0..=n {
            let tau = -a + i as f64 * h;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            s += w * k.window(tau) * (tau * u).cos();
        }
        s * h / (2.0 * PI)
    }

    #[test]
    fn kernels_are_window_transforms() {
        for k in [DeltaKernel::sinc(20.0), DeltaKernel::gaussian(20.0)] {
            for u in [0.0, 0.05, 0.31, 1.7] {
                let direct = window_transform(&k, u);
                assert!((direct - k.value(u)).abs() < 2e-4 * k.delta0(), "{k:?} {u}");
            }
            assert!((k.value(0.0) - k.delta0()).abs() < 1e-15);
        }
    }

    #[test]
    fn gaussian_overlap_is_product_integral() {
        let k = DeltaKernel::gaussian(30.0);
        let (a, b) = (0.02, -0.03);
        let n = 40_000;
        let h = 2.0 / n as f64;
        let s: f64 = (0..=n)
            .map(|i| {
                let u = -1.0 + i as f64 * h;
                k.value(u - a) * k.value(u - b)
            })
            .sum::<f64>()
            * h;
        assert!((s - k.overlap(a - b)).abs() < 1e-10 * k.delta0());
    }

    #[test]
    fn unit_area() {
        // Gaussian: closed-form area over +-cutoff.
        let k = DeltaKernel::gaussian(50.0);
        let c = k.cutoff();
        let n = 20_000;
        let h = 2.0 * c / n as f64;
        let s: f64 = (0..=n).map(|i| k.value(-c + i as f64 * h)).sum::<f64>() * h;
        assert!((s - 1.0).abs() < 1e-6);
    }
}
