//! Standard normal density, CDF and quantile.

use statrs::distribution::{ContinuousCDF, Normal};


pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

pub fn cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Upper tail `1 - cdf(z)` without cancellation.
pub fn sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

pub fn quantile(u: f64) -> f64 {
    thread_local! {
        static STD: Normal = Normal::new(0.0, 1.0).expect("unit normal");
    }
    STD.with(|n| n.inverse_cdf(u))
}

/// Probability of `(a, b]` under the standard normal, accurate in both tails.
pub fn interval_mass(a: f64, b: f64) -> f64 {
    if a >= 0.0 {
        sf(a) - sf(b)
    } else {
        cdf(b) - cdf(a)
    }
}
