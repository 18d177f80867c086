//! Adaptive Gauss–Kronrod (7/15) quadrature on finite intervals.
//!
//! Integrands with algebraic endpoint singularities are expected to be
//! regularised by the caller through a substitution; the rule itself only
//! sees smooth (or at worst kinked) functions.

use alloc::vec::Vec;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

/// Tolerances and the interval budget for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Tolerance {
    pub const fn relative(rel: f64) -> Self {
        Tolerance {
            abs: 0.0,
            rel,
            max_intervals: 2000,
        }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs: 1e-300,
            rel: 1e-10,
            max_intervals: 2000,
        }
    }
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Integrates `f` over `[a, b]`, bisecting the interval with the largest
/// error estimate until the total error meets `tol` or the budget runs out.
///
/// The returned error is the sum of the per-interval Kronrod–Gauss
/// differences, which is conservative for smooth integrands.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Estimate {
    if a == b {
        return Estimate {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        };
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let (v0, e0) = gk15(&mut f, lo, hi);
    let mut pieces: Vec<(f64, f64, f64, f64)> = Vec::with_capacity(64);
    pieces.push((lo, hi, v0, e0));
    let mut value = v0;
    let mut error = e0;
    let mut evaluations = 15;
    while error > tol.abs.max(tol.rel * value.abs()) && pieces.len() < tol.max_intervals {
        let (worst, _) = pieces
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, p)| if p.3 > best.1 { (i, p.3) } else { best });
        let (a0, b0, v, e) = pieces.swap_remove(worst);
        let m = 0.5 * (a0 + b0);
        if m <= a0 || m >= b0 {
            // interval no longer splittable in floating point
            pieces.push((a0, b0, v, 0.0));
            error -= e;
            continue;
        }
        let (vl, el) = gk15(&mut f, a0, m);
        let (vr, er) = gk15(&mut f, m, b0);
        evaluations += 30;
        value += vl + vr - v;
        error += el + er - e;
        pieces.push((a0, m, vl, el));
        pieces.push((m, b0, vr, er));
    }
    // re-sum to shed the drift of the running updates
    let value: f64 = pieces.iter().map(|p| p.2).sum();
    let error: f64 = pieces.iter().map(|p| p.3).sum();
    Estimate {
        value: sign * value,
        error,
        evaluations,
    }
}

/// [`integrate`] over consecutive subintervals `[pts[i], pts[i+1]]`.
///
/// Used when the integrand has known kinks; each piece gets the full
/// interval budget.
pub fn integrate_pieces<F: FnMut(f64) -> f64>(mut f: F, pts: &[f64], tol: Tolerance) -> Estimate {
    let mut out = Estimate {
        value: 0.0,
        error: 0.0,
        evaluations: 0,
    };
    for w in pts.windows(2) {
        let e = integrate(&mut f, w[0], w[1], tol);
        out.value += e.value;
        out.error += e.error;
        out.evaluations += e.evaluations;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math;

    #[test]
    fn polynomials_are_exact() {
        // GK15 integrates degree ≤ 22 polynomials exactly on one panel.
        let e = integrate(|x| x.powi(20) - 3.0 * x.powi(7) + 1.0, -1.0, 2.0, Tolerance::default());
        let exact = (2f64.powi(21) + 1.0) / 21.0 - 3.0 * (2f64.powi(8) - 1.0) / 8.0 + 3.0;
        assert!((e.value - exact).abs() < 1e-9 * exact.abs());
    }

    #[test]
    fn transcendental_and_reversed() {
        let e = integrate(math::sinh, 0.0, 3.0, Tolerance::relative(1e-12));
        assert!((e.value - (math::cosh(3.0) - 1.0)).abs() < 1e-11);
        let r = integrate(math::sinh, 3.0, 0.0, Tolerance::relative(1e-12));
        assert!((r.value + e.value).abs() < 1e-12);
    }

    #[test]
    fn kinked_integrand_with_breakpoint() {
        let f = |x: f64| (x - 0.3).abs();
        let e = integrate_pieces(f, &[0.0, 0.3, 1.0], Tolerance::relative(1e-13));
        assert!((e.value - (0.045 + 0.245)).abs() < 1e-13);
    }

    #[test]
    fn sqrt_singularity_converges_slowly_but_correctly() {
        let e = integrate(math::sqrt, 0.0, 1.0, Tolerance::relative(1e-9));
        assert!((e.value - 2.0 / 3.0).abs() < 1e-9);
    }
}
