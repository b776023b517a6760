// Float helpers backed by libm so results are identical with and without std.

pub(crate) use libm::{ceil, erfc, exp, floor, log as ln, pow, round, sqrt};

pub(crate) const SQRT_2: f64 = core::f64::consts::SQRT_2;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
pub(crate) fn norm_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * exp(-0.5 * z * z)
}

/// Standard normal distribution function.
pub(crate) fn norm_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// Mean and population variance.
pub(crate) fn mean_var(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var)
}

/// Draws a standard normal variate with the Box-Muller transform.
pub(crate) fn standard_normal<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen::<f64>();
    sqrt(-2.0 * ln(u1)) * libm::cos(2.0 * core::f64::consts::PI * u2)
}
