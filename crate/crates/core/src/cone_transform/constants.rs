//! Dimensional constants attached to cones in `R^{n+1}`.

use crate::linalg::ln_factorial;

fn c(n: usize) -> f64 {
    let m = (n + 1) as f64;
    m * (m / std::f64::consts::E).ln()
}

/// `J = κ_mahler(n) + log s̄(T_x)`: `2 log n! - (n+1) log((n+1)/e)`.
pub fn kappa_mahler(n: usize) -> f64 {
    2.0 * ln_factorial(n) - c(n)
}

/// Floating-body level: `(n+1) log((n+1)/e) - log (n+1)!`.
pub fn kappa_float(n: usize) -> f64 {
    c(n) - ln_factorial(n + 1)
}

/// Self-convolution offset: `log(2^n (n+1)!) - (n+1) log((n+1)/e)`.
pub fn kappa_conv(n: usize) -> f64 {
    n as f64 * 2f64.ln() + ln_factorial(n + 1) - c(n)
}

/// `log κ_iso(n)` with `κ_iso(n) = (n+1)^{n+1} (n+2)^n / (n!)^2`.
pub fn ln_kappa_iso(n: usize) -> f64 {
    let nf = n as f64;
    (nf + 1.0) * (nf + 1.0).ln() + nf * (nf + 2.0).ln() - 2.0 * ln_factorial(n)
}

/// `s(Δ^n) = (n+1)^{n+1} / (n!)^2`.
pub fn simplex_mahler(n: usize) -> f64 {
    let nf = n as f64;
    ((nf + 1.0) * (nf + 1.0).ln() - 2.0 * ln_factorial(n)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_values() {
        assert!((simplex_mahler(2) - 27.0 / 4.0).abs() < 1e-12);
        // On the orthant J = n + 1, so the simplex Mahler volume follows.
        for n in 1..6 {
            assert!((kappa_mahler(n) + simplex_mahler(n).ln() - (n + 1) as f64).abs() < 1e-12);
        }
    }
}
