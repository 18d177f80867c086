//! Thin wrappers over `libm`, so results are identical with and without `std`.

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn expm1(x: f64) -> f64 {
    libm::expm1(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn ln_1p(x: f64) -> f64 {
    libm::log1p(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn sinh(x: f64) -> f64 {
    libm::sinh(x)
}

#[inline]
pub fn cosh(x: f64) -> f64 {
    libm::cosh(x)
}

#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub fn powi(x: f64, n: i32) -> f64 {
    let mut base = if n < 0 { 1.0 / x } else { x };
    let mut k = n.unsigned_abs();
    let mut acc = 1.0;
    while k > 0 {
        if k & 1 == 1 {
            acc *= base;
        }
        base *= base;
        k >>= 1;
    }
    acc
}

#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub fn tgamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// `cosh x − 1` without cancellation.
#[inline]
pub fn cosh_m1(x: f64) -> f64 {
    let h = sinh(0.5 * x);
    2.0 * h * h
}

/// `cosh a − cosh b` without cancellation when `a ≈ ±b`.
#[inline]
pub fn cosh_diff(a: f64, b: f64) -> f64 {
    2.0 * sinh(0.5 * (a + b)) * sinh(0.5 * (a - b))
}

/// `arccosh(1 + y)` for `y ≥ 0`, accurate when `y` is small.
#[inline]
pub fn acosh_1p(y: f64) -> f64 {
    let y = if y > 0.0 { y } else { 0.0 };
    ln_1p(y + sqrt(y * (y + 2.0)))
}

/// Volume of the Euclidean unit ball in `ℝⁿ` (`1` for `n = 0`).
pub fn unit_ball_volume(n: u32) -> f64 {
    let half = 0.5 * f64::from(n);
    powf(core::f64::consts::PI, half) / tgamma(half + 1.0)
}

/// Area of the unit sphere `Sⁿ⁻¹ ⊂ ℝⁿ` (`2` for `n = 1`).
pub fn unit_sphere_area(n: u32) -> f64 {
    f64::from(n) * unit_ball_volume(n)
}
