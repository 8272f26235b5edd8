use crate::error::{Error, Result};

/// `n!!` for `n >= -1`, with `(-1)!! = 0!! = 1`.
pub fn double_factorial(n: i64) -> f64 {
    let mut acc = 1.0;
    let mut k = n;
    while k > 1 {
        acc *= k as f64;
        k -= 2;
    }
    acc
}

/// `E[Z^n]` for a standard normal `Z`.
pub fn gaussian_moment(n: u32) -> f64 {
    if n % 2 == 1 {
        0.0
    } else {
        double_factorial(n as i64 - 1)
    }
}

/// Average of `ω^β` over the uniform probability measure on S².
pub fn sphere_average(beta: [u32; 3]) -> f64 {
    if beta.iter().any(|b| b % 2 == 1) {
        return 0.0;
    }
    let total: u32 = beta.iter().sum();
    beta.iter()
        .map(|&b| double_factorial(b as i64 - 1))
        .product::<f64>()
        / double_factorial(total as i64 + 1)
}

/// `E|η|^p` for a standard 3-D Gaussian vector, i.e.
/// `2^{p/2} Γ((p+3)/2) / Γ(3/2)`, for integer `p >= -2`.
pub fn radial_moment(p: i32) -> Result<f64> {
    if p < -2 {
        return Err(Error::NonIntegrableRadialPower(p));
    }
    if p % 2 == 0 {
        // 2^k Γ(k + 3/2)/Γ(3/2) = (2k+1)!!
        if p >= 0 {
            Ok(double_factorial(p as i64 + 1))
        } else {
            // p = -2: 2^{-1} Γ(1/2)/Γ(3/2) = 1
            Ok(1.0)
        }
    } else {
        // p = 2m - 3 + ... : Γ((p+3)/2) = ((p+1)/2)! with (p+3)/2 integer
        let n = ((p + 3) / 2) as u32; // Γ(n) = (n-1)!
        let fact: f64 = (1..n).map(|k| k as f64).product();
        let gamma_three_halves = std::f64::consts::PI.sqrt() / 2.0;
        Ok(2f64.powf(p as f64 / 2.0) * fact / gamma_three_halves)
    }
}
