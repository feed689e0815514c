//! Law of `z = Σ αᵢ zᵢ` for independent Lévy areas, by numerical convolution.

use super::closed_form::{levy_area_cdf, levy_area_density};
use rustfft::{num_complex::Complex, FftPlanner};

/// Density of `Σ αᵢ zᵢ_t` where each `zᵢ_t` has the sech law at time `t`.
///
/// All factors but the widest are convolved on a uniform grid by FFT; the widest
/// is then integrated against that grid exactly, so evaluation at any `z` is a
/// trapezoid sum of an analytic integrand.
#[derive(Clone, Debug)]
pub struct ConvolvedDensity {
    /// Scale `αᵢt` of the factor kept in closed form.
    last: f64,
    /// Grid `y_j = y0 + j·h` and the convolved density of the other factors.
    y0: f64,
    h: f64,
    inner: Vec<f64>,
}

/// Half-width beyond which the density of scale `s` drops below `1e−12`.
fn extent(s: f64) -> f64 {
    // (2/s)e^{-π|z|/s} < 1e-12.
    (s / std::f64::consts::PI) * (2e12 / s).ln().max(1.0)
}

fn fft_convolve(a: &[f64], b: &[f64], h: f64) -> Vec<f64> {
    let n = (a.len() + b.len() - 1).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let lift = |v: &[f64]| {
        let mut out: Vec<Complex<f64>> = v.iter().map(|&x| Complex::new(x, 0.0)).collect();
        out.resize(n, Complex::new(0.0, 0.0));
        out
    };
    let (mut fa, mut fb) = (lift(a), lift(b));
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= *y;
    }
    inv.process(&mut fa);
    let scale = h / n as f64;
    fa[..a.len() + b.len() - 1].iter().map(|c| c.re * scale).collect()
}

impl ConvolvedDensity {
    /// Grid spacing `min(α)·t/200`; each factor truncated where its density
    /// falls below `1e−12`.
    pub fn new(weights: &[f64], t: f64) -> Self {
        assert!(!weights.is_empty() && t > 0.0);
        let mut scales: Vec<f64> = weights.iter().map(|a| a * t).collect();
        scales.sort_by(f64::total_cmp);
        let last = scales.pop().unwrap();
        if scales.is_empty() {
            return ConvolvedDensity { last, y0: 0.0, h: 1.0, inner: Vec::new() };
        }
        let h = scales[0] / 200.0;
        let sample = |s: f64| {
            let m = (extent(s) / h).ceil() as i64;
            let v: Vec<f64> = (-m..=m).map(|j| levy_area_density(s, j as f64 * h)).collect();
            (m, v)
        };
        let (mut m, mut inner) = sample(scales[0]);
        for &s in &scales[1..] {
            let (ms, vs) = sample(s);
            inner = fft_convolve(&inner, &vs, h);
            m += ms;
        }
        ConvolvedDensity { last, y0: -(m as f64) * h, h, inner }
    }

    pub fn density(&self, z: f64) -> f64 {
        if self.inner.is_empty() {
            return levy_area_density(self.last, z);
        }
        self.sum(|y| levy_area_density(self.last, z - y))
    }

    pub fn cdf(&self, z: f64) -> f64 {
        if self.inner.is_empty() {
            return levy_area_cdf(self.last, z);
        }
        self.sum(|y| levy_area_cdf(self.last, z - y)).clamp(0.0, 1.0)
    }

    fn sum(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.inner.iter().enumerate().map(|(j, g)| g * f(self.y0 + j as f64 * self.h)).sum::<f64>() * self.h
    }

    /// Half-width of the region carrying all but `~1e−12` of the mass.
    pub fn support(&self) -> f64 {
        -self.y0 + extent(self.last)
    }
}

/// Density at `z` of `Σ αᵢ zᵢ_t`; see [`ConvolvedDensity`] for repeated evaluation.
pub fn nonisotropic_density(weights: &[f64], t: f64, z: f64) -> f64 {
    ConvolvedDensity::new(weights, t).density(z)
}
