//! Standard normal helpers that stay accurate deep in the lower tail.

use std::f64::consts::{PI, SQRT_2};

/// Below this point the Mills-ratio continued fraction replaces `erfc`.
const TAIL: f64 = -6.0;

pub fn pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

pub fn cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

/// `Φ(−x)/φ(x)` for `x > 0`, by the Laplace continued fraction.
fn mills_ratio(x: f64) -> f64 {
    let mut acc = x;
    for k in (1..=60).rev() {
        acc = x + k as f64 / acc;
    }
    1.0 / acc
}

pub fn log_cdf(z: f64) -> f64 {
    if z < TAIL {
        -0.5 * z * z - 0.5 * (2.0 * PI).ln() + mills_ratio(-z).ln()
    } else {
        cdf(z).ln()
    }
}

/// `φ(z)/Φ(z)`.
pub fn pdf_over_cdf(z: f64) -> f64 {
    if z < TAIL {
        1.0 / mills_ratio(-z)
    } else {
        pdf(z) / cdf(z)
    }
}
