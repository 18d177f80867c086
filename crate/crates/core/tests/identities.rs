//! Identities that tie the modules together, each checked against an
//! independent computation.

use proptest::prelude::*;
use rank1ks_core::convolution::{self, BiInvariantTriple};
use rank1ks_core::geometry::{self, SpaceParams};
use rank1ks_core::kernel::{self, RadialFunction};
use rank1ks_core::maximal::{BallSpec, FieldGrid, GridModel};
use rank1ks_core::quad::{self, Tolerance};
use rank1ks_core::rearrange::{decreasing_rearrangement, l21_norm, weak_l2_norm, WeightedSamples};
use rank1ks_core::IwasawaPoint;

fn sp(m1: u32) -> SpaceParams {
    SpaceParams::new(m1, 0).unwrap()
}

/// `κ ∫ e^{ρs} Abel(χ_{[0,R]})(s) ds = |B(o, R)|`: integrating the Abel
/// transform over heights recovers the Iwasawa measure of the ball.
#[test]
fn abel_transform_integrates_to_ball_measure() {
    for m1 in 1..=3 {
        let sp = sp(m1);
        for r in [0.5, 1.0, 2.5] {
            let ball = RadialFunction::ball(r).unwrap();
            // s = R sin θ smooths the endpoint behaviour at s = ±R
            let f = |theta: f64| {
                let s = r * theta.sin();
                (sp.rho() * s).exp() * kernel::abel_transform(&sp, &ball, s) * r * theta.cos()
            };
            let tol = Tolerance {
                abs: 0.0,
                rel: 1e-9,
                max_intervals: 200,
            };
            let h = std::f64::consts::FRAC_PI_2;
            let lhs = kernel::kappa_analytic(&sp) * quad::integrate(f, -h, h, tol).value;
            let rhs = geometry::iwasawa_ball_measure(&sp, r).unwrap();
            assert!((lhs / rhs - 1.0).abs() < 1e-7, "m1 = {m1}, R = {r}: {lhs} vs {rhs}");
        }
    }
}

/// With `g ≡ 1` on every distance the pair of supports can realise,
/// `T(f, g, h) = ∫f ∫h`.
#[test]
fn trilinear_form_factorises_when_g_is_constant() {
    for m1 in [1, 2] {
        let sp = sp(m1);
        let (rf, rh) = (1.0, 1.5);
        let triple = BiInvariantTriple {
            f: RadialFunction::ball(rf).unwrap(),
            g: RadialFunction::ball(rf + rh + 0.5).unwrap(),
            h: RadialFunction::ball(rh).unwrap(),
        };
        let est = convolution::trilinear_mc(&sp, &triple, None, 200_000, 17).unwrap();
        let exact = convolution::radial_integral(&sp, &triple.f).unwrap()
            * convolution::radial_integral(&sp, &triple.h).unwrap();
        assert!(
            (est.estimate - exact).abs() <= 4.0 * est.stderr + 1e-9 * exact,
            "m1 = {m1}: {est:?} vs {exact}"
        );
        assert!(est.rel_stderr() < 0.01);
    }
}

#[test]
fn radial_norms_of_balls_follow_the_ball_measure() {
    for m1 in 1..=3 {
        let sp = sp(m1);
        for r in [0.3, 1.0, 4.0] {
            let ball = RadialFunction::ball(r).unwrap();
            let m = geometry::iwasawa_ball_measure(&sp, r).unwrap();
            let l21 = convolution::radial_l21_norm(&sp, &ball).unwrap();
            let l2 = convolution::radial_l2_norm(&sp, &ball).unwrap();
            assert!((l21 / (2.0 * m.sqrt()) - 1.0).abs() < 1e-12);
            assert!((l2 * l2 / m - 1.0).abs() < 1e-12);
        }
    }
}

/// The grid indicator of a ball has the Lorentz norms of a set of the
/// grid ball's measure, and that measure approximates the continuum one.
#[test]
fn grid_ball_norms_match_the_continuum() {
    let sp = sp(1);
    let model = GridModel::new(&sp, 6.0, 3.0, 384, 256).unwrap();
    let ball = BallSpec::new(&model, IwasawaPoint::on_axis(&sp, 0.0), 1.0).unwrap();
    let f = FieldGrid::indicator_of_balls(model.clone(), &[ball]).unwrap();
    let samples = f.samples();
    let m = samples.entries().iter().filter(|e| e.0 > 0.0).map(|e| e.1).sum::<f64>();
    assert!((l21_norm(&samples) / (2.0 * m.sqrt()) - 1.0).abs() < 1e-12);
    assert!((weak_l2_norm(&samples) / m.sqrt() - 1.0).abs() < 1e-12);
    let exact = geometry::iwasawa_ball_measure(&sp, 1.0).unwrap();
    assert!((m / exact - 1.0).abs() < 0.03, "{m} vs {exact}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    /// `‖f‖_{2,∞} ≤ ‖f‖_{L²} ≤ ½‖f‖_{2,1}` and `‖f‖_{2,2} = ‖f‖_{L²}`.
    #[test]
    fn lorentz_scale_is_ordered(entries in prop::collection::vec((0.0..10.0f64, 0.01..5.0f64), 1..40)) {
        let s = WeightedSamples::new(entries.clone()).unwrap();
        let l2 = entries.iter().map(|(v, w)| v * v * w).sum::<f64>().sqrt();
        let p = decreasing_rearrangement(&s);
        let l22 = p.lorentz_norm(2.0, 2.0).unwrap();
        prop_assert!((l22 - l2).abs() <= 1e-10 * l2.max(1e-300));
        let (weak, l21) = (weak_l2_norm(&s), l21_norm(&s));
        prop_assert!(weak <= l2 * (1.0 + 1e-12));
        prop_assert!(l2 <= 0.5 * l21 * (1.0 + 1e-12));
        let l21_direct = p.lorentz_norm(2.0, 1.0).unwrap();
        prop_assert!((l21_direct - l21).abs() <= 1e-10 * l21.max(1e-300));
    }

    /// The distance of the Iwasawa model is a metric.
    #[test]
    fn distance_is_a_metric(
        a in (-3.0..3.0f64, -2.0..2.0f64),
        b in (-3.0..3.0f64, -2.0..2.0f64),
        c in (-3.0..3.0f64, -2.0..2.0f64),
    ) {
        let sp = sp(1);
        let p = |(v, s): (f64, f64)| IwasawaPoint::new(&sp, vec![v], Vec::new(), s).unwrap();
        let (x, y, z) = (p(a), p(b), p(c));
        let d = |u: &IwasawaPoint, w: &IwasawaPoint| geometry::distance(&sp, u, w).unwrap();
        prop_assert_eq!(d(&x, &y), d(&y, &x));
        prop_assert!(d(&x, &x).abs() < 1e-7);
        prop_assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z) + 1e-9);
    }
}
