use statrs::function::erf;
use statrs::function::gamma;

pub fn erfc(x: f64) -> f64 {
    erf::erfc(x)
}

/// Upper regularized incomplete gamma `Q(a, x)`.
pub fn igamc(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x.is_infinite() {
        0.0
    } else {
        gamma::gamma_ur(a, x).clamp(0.0, 1.0)
    }
}

/// Standard normal CDF.
pub fn phi(x: f64) -> f64 {
    0.5 * erf::erfc(-x / std::f64::consts::SQRT_2)
}
