//! Rank-one geometry in horospherical coordinates.
//!
//! A point `n̄(v, w) a(s)·o` has Cartan radius `t` given by
//! `cosh²t = (cosh s + eˢ|v|²)² + e²ˢ|w|²`, and the invariant measure in these
//! coordinates is `e^{2ρs} dv dw ds`. All normalising constants of the
//! Cartan and Iwasawa integral formulas are taken to be `1`.

use alloc::vec::Vec;

use crate::math;
use crate::quad::{self, Tolerance};
use crate::{Error, Result};

/// Root multiplicities `(m1, m2)` of a rank-one space and `ρ = (m1 + 2·m2)/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceParams {
    m1: u32,
    m2: u32,
    rho: f64,
}

impl SpaceParams {
    pub fn new(m1: u32, m2: u32) -> Result<Self> {
        if m1 < 1 {
            return Err(Error::InvalidSpace(alloc::format!("m1 must be at least 1 (got {m1})")));
        }
        Ok(SpaceParams {
            m1,
            m2,
            rho: 0.5 * (f64::from(m1) + 2.0 * f64::from(m2)),
        })
    }

    pub fn m1(&self) -> u32 {
        self.m1
    }

    pub fn m2(&self) -> u32 {
        self.m2
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Real dimension `m1 + m2 + 1` of the space.
    pub fn dim(&self) -> u32 {
        self.m1 + self.m2 + 1
    }

    pub(crate) fn require_real_hyperbolic(&self) -> Result<()> {
        if self.m2 == 0 {
            Ok(())
        } else {
            Err(Error::RequiresRealHyperbolic { m2: self.m2 })
        }
    }
}

impl core::fmt::Display for SpaceParams {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "(m1={}, m2={})", self.m1, self.m2)
    }
}

/// Builds a [`SpaceParams`] from possibly out-of-range integers.
pub fn make_space(m1: i64, m2: i64) -> Result<SpaceParams> {
    if m1 < 1 || m2 < 0 {
        return Err(Error::InvalidSpace(alloc::format!(
            "need m1 >= 1 and m2 >= 0 (got m1 = {m1}, m2 = {m2})"
        )));
    }
    let m1 = u32::try_from(m1).map_err(|_| Error::InvalidSpace("m1 too large".into()))?;
    let m2 = u32::try_from(m2).map_err(|_| Error::InvalidSpace("m2 too large".into()))?;
    SpaceParams::new(m1, m2)
}

/// The point `n̄(v, w) a(s)·o`.
#[derive(Debug, Clone, PartialEq)]
pub struct IwasawaPoint {
    pub v: Vec<f64>,
    pub w: Vec<f64>,
    pub s: f64,
}

impl IwasawaPoint {
    pub fn new(sp: &SpaceParams, v: Vec<f64>, w: Vec<f64>, s: f64) -> Result<Self> {
        let p = IwasawaPoint { v, w, s };
        p.check(sp)?;
        Ok(p)
    }

    /// The point `a(s)·o` on the `A`-orbit.
    pub fn on_axis(sp: &SpaceParams, s: f64) -> Self {
        IwasawaPoint {
            v: alloc::vec![0.0; sp.m1 as usize],
            w: alloc::vec![0.0; sp.m2 as usize],
            s,
        }
    }

    pub fn check(&self, sp: &SpaceParams) -> Result<()> {
        if self.v.len() != sp.m1 as usize {
            return Err(Error::DimensionMismatch {
                expected: sp.m1 as usize,
                got: self.v.len(),
            });
        }
        if self.w.len() != sp.m2 as usize {
            return Err(Error::DimensionMismatch {
                expected: sp.m2 as usize,
                got: self.w.len(),
            });
        }
        Ok(())
    }

    pub fn v_norm_sq(&self) -> f64 {
        self.v.iter().map(|x| x * x).sum()
    }

    pub fn w_norm_sq(&self) -> f64 {
        self.w.iter().map(|x| x * x).sum()
    }
}

/// Cartan radius from `|v|²`, `|w|²` and `s`; always `≥ |s|`.
///
/// Evaluates `cosh t − 1` as a sum of nonnegative terms so that `t ≈ |s|`
/// and `t ≈ 0` keep full relative accuracy.
pub fn cartan_radius_of(v2: f64, w2: f64, s: f64) -> f64 {
    let es = math::exp(s);
    let ev = es * v2;
    let a = math::cosh(s) + ev;
    let b = es * es * w2;
    let extra = if b > 0.0 { b / (math::sqrt(a * a + b) + a) } else { 0.0 };
    let y = math::cosh_m1(s) + ev + extra;
    math::acosh_1p(y).max(s.abs())
}

/// Cartan radius `t ≥ 0` of `p`.
pub fn cartan_radius(sp: &SpaceParams, p: &IwasawaPoint) -> Result<f64> {
    p.check(sp)?;
    Ok(cartan_radius_of(p.v_norm_sq(), p.w_norm_sq(), p.s))
}

/// `a(s0) n̄(v, w) a(−s0) = n̄(e^{−s0}v, e^{−2s0}w)`, keeping `s`.
pub fn conjugate_by_a(p: &IwasawaPoint, s0: f64) -> IwasawaPoint {
    let e1 = math::exp(-s0);
    let e2 = e1 * e1;
    IwasawaPoint {
        v: p.v.iter().map(|x| e1 * x).collect(),
        w: p.w.iter().map(|x| e2 * x).collect(),
        s: p.s,
    }
}

/// Distance between `n̄(v)a(s)·o` and `n̄(v')a(s')·o` when `m2 = 0`, from
/// `|v' − v|²`, `s` and `s'`: `cosh d = cosh(s' − s) + e^{s+s'}|v' − v|²`.
#[inline]
pub fn distance_of(dv2: f64, s: f64, s2: f64) -> f64 {
    let es = math::exp(s);
    cartan_radius_of(es * es * dv2, 0.0, s2 - s)
}

/// Geodesic distance; defined for real hyperbolic spaces only.
pub fn distance(sp: &SpaceParams, z: &IwasawaPoint, z2: &IwasawaPoint) -> Result<f64> {
    sp.require_real_hyperbolic()?;
    z.check(sp)?;
    z2.check(sp)?;
    let dv2: f64 = z.v.iter().zip(&z2.v).map(|(a, b)| (b - a) * (b - a)).sum();
    // symmetrised so that d(z, z') and d(z', z) agree to the last bit
    Ok(0.5 * (distance_of(dv2, z.s, z2.s) + distance_of(dv2, z2.s, z.s)))
}

/// `(sinh t)^{m1} (sinh 2t)^{m2}`.
pub fn radial_density(sp: &SpaceParams, t: f64) -> f64 {
    math::powi(math::sinh(t), sp.m1 as i32) * math::powi(math::sinh(2.0 * t), sp.m2 as i32)
}

/// `e^{2ρs}`.
pub fn iwasawa_weight(sp: &SpaceParams, s: f64) -> f64 {
    math::exp(2.0 * sp.rho * s)
}

const VOLUME_TOL: Tolerance = Tolerance {
    abs: 0.0,
    rel: 1e-13,
    max_intervals: 400,
};

/// `∫₀^r radial_density(t) dt`.
pub fn ball_volume(sp: &SpaceParams, r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    quad::integrate(|t| radial_density(sp, t), 0.0, r, VOLUME_TOL).value
}

/// Measure of `B(o, r)` in the Iwasawa coordinates `e^{2ρs} dv ds` (`m2 = 0`).
///
/// Equals `ball_volume` times a constant depending only on `m1`.
pub fn iwasawa_ball_measure(sp: &SpaceParams, r: f64) -> Result<f64> {
    sp.require_real_hyperbolic()?;
    if r <= 0.0 {
        return Ok(0.0);
    }
    let m1 = sp.m1;
    let vb = math::unit_ball_volume(m1);
    let half = 0.5 * f64::from(m1);
    let two_rho = 2.0 * sp.rho;
    let ch = math::cosh(r);
    // s = r sin θ keeps the (cosh r − cosh s)^{m1/2} endpoint behaviour smooth
    let f = |theta: f64| {
        let s = r * libm::sin(theta);
        let ds = r * libm::cos(theta);
        let rv2 = (math::exp(-s) * (ch - math::cosh(s))).max(0.0);
        vb * math::powf(rv2, half) * math::exp(two_rho * s) * ds
    };
    let hp = core::f64::consts::FRAC_PI_2;
    Ok(quad::integrate(f, -hp, hp, VOLUME_TOL).value)
}

/// Half-widths of the smallest coordinate box around `B(n̄(v_c)a(s_c)·o, r)`:
/// `(e^{−s_c} sinh r / √2, r)` in `(v, s)`.
pub fn ball_box_half_widths(s_center: f64, r: f64) -> (f64, f64) {
    (
        math::exp(-s_center) * math::sinh(r) * core::f64::consts::FRAC_1_SQRT_2,
        r,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn sp(m1: u32, m2: u32) -> SpaceParams {
        SpaceParams::new(m1, m2).unwrap()
    }

    #[test]
    fn make_space_examples() {
        assert_eq!(make_space(1, 0).unwrap().rho(), 0.5);
        assert_eq!(make_space(2, 1).unwrap().rho(), 2.0);
        assert!(make_space(0, 3).is_err());
        assert!(make_space(1, -1).is_err());
    }

    #[test]
    fn cartan_radius_examples() {
        let s20 = sp(2, 0);
        let p = IwasawaPoint::new(&s20, vec![0.0, 0.0], vec![], 1.5).unwrap();
        assert!((cartan_radius(&s20, &p).unwrap() - 1.5).abs() < 1e-15);
        let p = IwasawaPoint::new(&s20, vec![1.0, 0.0], vec![], 0.0).unwrap();
        assert!((cartan_radius(&s20, &p).unwrap() - 2f64.acosh()).abs() < 1e-14);
        let s21 = sp(2, 1);
        let p = IwasawaPoint::new(&s21, vec![0.6, 0.8], vec![1.0], 0.0).unwrap();
        assert!((cartan_radius(&s21, &p).unwrap() - 5f64.sqrt().acosh()).abs() < 1e-14);
        assert!(IwasawaPoint::new(&s21, vec![0.6], vec![1.0], 0.0).is_err());
    }

    #[test]
    fn cartan_radius_agrees_with_naive_formula_away_from_cancellation() {
        for &(v2, w2, s) in &[(0.3, 0.7, -0.4), (2.0, 0.0, 1.1), (0.0, 5.0, 0.2), (1.0, 1.0, -2.0)] {
            let a = f64::cosh(s) + f64::exp(s) * v2;
            let naive = (a * a + f64::exp(2.0 * s) * w2).sqrt().acosh();
            assert!((cartan_radius_of(v2, w2, s) - naive).abs() < 1e-12);
        }
    }

    #[test]
    fn cartan_radius_near_the_orbit() {
        // cosh t − cosh s = eˢ|v|², so t − s ≈ eˢ|v|² / sinh s
        let (s, v2) = (1.0f64, 1e-12);
        let t = cartan_radius_of(v2, 0.0, s);
        let expected = s.exp() * v2 / s.sinh();
        assert!(((t - s) - expected).abs() < 1e-3 * expected);
        let t0 = cartan_radius_of(1e-20, 0.0, 0.0);
        assert!((t0 - (2e-20f64).sqrt()).abs() < 1e-24);
    }

    #[test]
    fn conjugation_examples() {
        let s21 = sp(2, 1);
        let p = IwasawaPoint::new(&s21, vec![1.0, -2.0], vec![3.0], 0.7).unwrap();
        assert_eq!(conjugate_by_a(&p, 0.0), p);
        let q = conjugate_by_a(&p, 2f64.ln());
        assert!((q.v[0] - 0.5).abs() < 1e-15 && (q.w[0] - 0.75).abs() < 1e-15);
        let back = conjugate_by_a(&q, -2f64.ln());
        for (a, b) in back.v.iter().chain(&back.w).zip(p.v.iter().chain(&p.w)) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn distance_examples() {
        let s20 = sp(2, 0);
        let o = IwasawaPoint::on_axis(&s20, 0.0);
        let a = IwasawaPoint::on_axis(&s20, -1.3);
        assert!((distance(&s20, &o, &a).unwrap() - 1.3).abs() < 1e-15);
        let z = IwasawaPoint::new(&s20, vec![1.0, 0.0], vec![], 0.0).unwrap();
        assert!((distance(&s20, &z, &o).unwrap() - 2f64.acosh()).abs() < 1e-14);
        let s21 = sp(2, 1);
        let e = distance(
            &s21,
            &IwasawaPoint::on_axis(&s21, 0.0),
            &IwasawaPoint::on_axis(&s21, 1.0),
        );
        assert_eq!(e, Err(Error::RequiresRealHyperbolic { m2: 1 }));
    }

    #[test]
    fn density_and_weight_examples() {
        assert_eq!(radial_density(&sp(1, 0), 0.0), 0.0);
        assert!((radial_density(&sp(1, 0), 1.0) - 1f64.sinh()).abs() < 1e-15);
        let d = 0.5f64.sinh().powi(2) * 1f64.sinh();
        assert!((radial_density(&sp(2, 1), 0.5) - d).abs() < 1e-15);
        assert_eq!(iwasawa_weight(&sp(2, 0), 0.0), 1.0);
        assert!((iwasawa_weight(&sp(2, 0), 1.0) - 1f64.exp().powi(2)).abs() < 1e-14);
        let s = sp(3, 2);
        assert!((iwasawa_weight(&s, 0.8) * iwasawa_weight(&s, -0.8) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn ball_volume_closed_forms() {
        let s20 = sp(2, 0);
        assert_eq!(ball_volume(&s20, 0.0), 0.0);
        let exact = |r: f64| (r.sinh() * r.cosh() - r) / 2.0;
        assert!((ball_volume(&s20, 1.0) - exact(1.0)).abs() < 1e-14);
        // ∫ sinh t dt = cosh r − 1 for (1,0); ∫ sinh³ t = cosh³/3 − cosh + 2/3 for (3,0)
        assert!((ball_volume(&sp(1, 0), 2.0) - (2f64.cosh() - 1.0)).abs() < 1e-13);
        let c = 1.5f64.cosh();
        let v3 = c.powi(3) / 3.0 - c + 2.0 / 3.0;
        assert!((ball_volume(&sp(3, 0), 1.5) - v3).abs() < 1e-13);
        // exponential growth: |B_r| e^{−2r} settles to 1/8 for (2,0)
        let ratios: Vec<f64> = (2..=10)
            .map(|r| ball_volume(&s20, f64::from(r)) / (2.0 * f64::from(r)).exp())
            .collect();
        let (lo, hi) = ratios
            .iter()
            .fold((f64::MAX, 0.0f64), |(l, h), &x| (l.min(x), h.max(x)));
        assert!(lo > 0.1 && hi < 0.13, "{ratios:?}");
    }

    #[test]
    fn iwasawa_measure_is_a_fixed_multiple_of_ball_volume() {
        let s20 = sp(2, 0);
        for &r in &[0.3, 1.0, 2.5, 4.0] {
            let ratio = iwasawa_ball_measure(&s20, r).unwrap() / ball_volume(&s20, r);
            assert!((ratio - 2.0 * core::f64::consts::PI).abs() < 1e-9, "{r}: {ratio}");
        }
        let s10 = sp(1, 0);
        let c = iwasawa_ball_measure(&s10, 1.0).unwrap() / ball_volume(&s10, 1.0);
        for &r in &[0.2, 2.0, 3.5] {
            let ratio = iwasawa_ball_measure(&s10, r).unwrap() / ball_volume(&s10, r);
            assert!((ratio / c - 1.0).abs() < 1e-8, "{r}: {ratio} vs {c}");
        }
    }

    #[test]
    fn ball_box_contains_the_ball() {
        let (hv, hs) = ball_box_half_widths(0.0, 1.7);
        // |v|² = e^{−s}(cosh r − cosh s) is maximal at e^{−s} = cosh r
        let s_star = -(1.7f64.cosh().ln());
        let v_star = ((-s_star).exp() * (1.7f64.cosh() - s_star.cosh())).sqrt();
        assert!((hv - v_star).abs() < 1e-13);
        assert_eq!(hs, 1.7);
    }

    fn real_hyperbolic_point(m1: usize) -> impl Strategy<Value = (Vec<f64>, f64)> {
        (prop::collection::vec(-3.0..3.0f64, m1), -3.0..3.0f64)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]

        #[test]
        fn cartan_radius_dominates_abs_s(v2 in 0.0..50.0f64, w2 in 0.0..50.0f64, s in -6.0..6.0f64) {
            prop_assert!(cartan_radius_of(v2, w2, s) >= s.abs());
        }

        #[test]
        fn distance_is_symmetric(a in real_hyperbolic_point(2), b in real_hyperbolic_point(2)) {
            let s20 = sp(2, 0);
            let z = IwasawaPoint::new(&s20, a.0, vec![], a.1).unwrap();
            let z2 = IwasawaPoint::new(&s20, b.0, vec![], b.1).unwrap();
            let d1 = distance(&s20, &z, &z2).unwrap();
            let d2 = distance(&s20, &z2, &z).unwrap();
            prop_assert!((d1 - d2).abs() < 1e-10);
            prop_assert!(d1 >= 0.0);
        }

        #[test]
        fn distance_is_left_invariant(
            a in real_hyperbolic_point(3),
            b in real_hyperbolic_point(3),
            u in prop::collection::vec(-2.0..2.0f64, 3),
            sigma in -2.0..2.0f64,
        ) {
            let s30 = sp(3, 0);
            let z = IwasawaPoint::new(&s30, a.0, vec![], a.1).unwrap();
            let z2 = IwasawaPoint::new(&s30, b.0, vec![], b.1).unwrap();
            let d = distance(&s30, &z, &z2).unwrap();
            // n̄(u)a(σ)·n̄(v)a(s) = n̄(u + e^{−σ}v) a(σ + s)
            let act = |p: &IwasawaPoint| {
                let q = conjugate_by_a(p, sigma);
                IwasawaPoint { v: q.v.iter().zip(&u).map(|(x, y)| x + y).collect(), w: vec![], s: p.s + sigma }
            };
            let d2 = distance(&s30, &act(&z), &act(&z2)).unwrap();
            prop_assert!((d - d2).abs() < 1e-10 * d.max(1.0), "{d} vs {d2}");
        }

        #[test]
        fn triangle_inequality(a in real_hyperbolic_point(1), b in real_hyperbolic_point(1), c in real_hyperbolic_point(1)) {
            let s10 = sp(1, 0);
            let p = |x: (Vec<f64>, f64)| IwasawaPoint::new(&s10, x.0, vec![], x.1).unwrap();
            let (x, y, z) = (p(a), p(b), p(c));
            let dxz = distance(&s10, &x, &z).unwrap();
            let dxy = distance(&s10, &x, &y).unwrap();
            let dyz = distance(&s10, &y, &z).unwrap();
            prop_assert!(dxz <= dxy + dyz + 1e-10);
        }

        #[test]
        fn ball_volume_derivative_is_the_density(r in 0.05..6.0f64, m1 in 1u32..4, m2 in 0u32..3) {
            let s = sp(m1, m2);
            let h = 1e-5 * r;
            let fd = (ball_volume(&s, r + h) - ball_volume(&s, r - h)) / (2.0 * h);
            let d = radial_density(&s, r);
            prop_assert!((fd - d).abs() <= 1e-6 * d, "{fd} vs {d}");
            prop_assert!(ball_volume(&s, r + h) > ball_volume(&s, r));
        }
    }
}
