//! Sweeps used to choose the pinned constants. Seeds here are disjoint from
//! the ones used by the acceptance suite.
//!
//! `cargo run --release -p rank1ks-core --example pin_constants`

use rank1ks_core::convolution::{self, chain, DiscreteModel, ModelConfig, PsiCells};
use rank1ks_core::kernel::{self, RadialFunction};
use rank1ks_core::maximal::{self, GridModel, StencilTable};
use rank1ks_core::par;
use rank1ks_core::SpaceParams;

fn space(m1: u32, m2: u32) -> SpaceParams {
    SpaceParams::new(m1, m2).unwrap()
}

fn comparator() {
    for (m1, m2) in [(1, 0), (2, 0), (3, 0), (2, 1), (4, 3)] {
        let sp = space(m1, m2);
        let r = kernel::comparator_ratio_range(&sp, 10.0, 5.0, 0.05, 0.01, 1e-8);
        println!(
            "comparator {sp}: [{:.6}, {:.6}] C = {:.6}",
            r.min,
            r.max,
            r.two_sided_constant()
        );
    }
}

fn abel_l21() {
    for (m1, m2) in [(2, 0), (2, 1)] {
        let sp = space(m1, m2);
        let mut worst = 0.0f64;
        for seed in 1000..3000u64 {
            let mut rng = par::stream_rng(seed, 0);
            let f = random_indicator(&mut rng);
            let (lhs, rhs) = kernel::abel_l21_bound(&sp, &f, 200).unwrap();
            if rhs > 0.0 {
                worst = worst.max(lhs / rhs);
            }
        }
        let mut balls = 0.0f64;
        for i in 0..=190 {
            let r = 1.0 + 0.1 * i as f64;
            let (lhs, rhs) = kernel::abel_l21_bound(&sp, &RadialFunction::ball(r).unwrap(), 200).unwrap();
            balls = balls.max(lhs / rhs);
        }
        println!("abel_l21 {sp}: random max {worst:.6}, ball max {balls:.6}");
    }
}

fn random_indicator(rng: &mut impl rand::Rng) -> RadialFunction {
    let n = rng.random_range(1..6);
    let mut iv = Vec::new();
    for _ in 0..n {
        let a = rng.random::<f64>() * 15.0;
        iv.push((a, a + 0.05 + rng.random::<f64>() * 4.0));
    }
    RadialFunction::union_of(&iv).unwrap()
}

fn chain_constants() {
    let cfg = ModelConfig::default();
    for (m1, m2) in [(1, 0), (2, 0), (3, 0), (2, 1), (4, 3)] {
        let sp = space(m1, m2);
        let t0 = std::time::Instant::now();
        let psi = PsiCells::build(&sp, &cfg, 1e-10).unwrap();
        let build = t0.elapsed();
        let (mut c12, mut c23, mut c34) = (0.0f64, 0.0f64, 0.0f64);
        for seed in 5000..5400u64 {
            let m = DiscreteModel::random(&sp, cfg, seed).unwrap();
            let s1 = chain::chain_step1_bound(&m, &psi).unwrap();
            let s2 = chain::chain_step2_bound(&m, &psi).unwrap().total();
            let s3 = chain::chain_step3_bound(&m, &sp).unwrap();
            let data = m.rearranged(&sp).unwrap();
            let split = chain::split_optimize(&data, &sp, data.norms(&sp), 0.25).unwrap();
            if s2 > 0.0 {
                c12 = c12.max(s1 / s2);
            }
            if s3 > 0.0 {
                c23 = c23.max(s2 / s3);
                c34 = c34.max(s3 / split.bound);
            }
        }
        println!(
            "chain {sp}: psi build {build:?}, total {:?}: C12 {c12:.6} C23 {c23:.6} step3/split {c34:.6}",
            t0.elapsed()
        );
    }
}

fn phi_sup() {
    for (m1, m2) in [(1, 0), (2, 0), (3, 0), (2, 1), (4, 3)] {
        let sp = space(m1, m2);
        let mut worst = 0.0f64;
        for i in 1..=120 {
            let u = 0.05 * i as f64;
            worst = worst.max(kernel::phi_sup_identity_check(&sp, u, 400).unwrap().ratio);
        }
        let tail: Vec<f64> = [0.001, 0.01, 10.0, 15.0, 20.0]
            .iter()
            .map(|&u| kernel::phi_sup_identity_check(&sp, u, 400).unwrap().ratio)
            .collect();
        println!("phi-sup {sp}: max ratio {worst:.6}, at u = 0.001, 0.01, 10, 15, 20: {tail:.4?}");
    }
}

fn endpoint() {
    let sp = space(2, 0);
    let t0 = std::time::Instant::now();
    let rows =
        convolution::endpoint_ratio_sweep(&sp, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0], 2_000_000, 77).unwrap();
    for r in rows {
        println!(
            "endpoint R={} ratio {:.6} rel_stderr {:.4}",
            r.radius,
            r.ratio,
            r.t.rel_stderr()
        );
    }
    println!("endpoint time {:?}", t0.elapsed());
    let r: f64 = std::env::var("PROBE_R")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(6.0);
    let rows = convolution::sharpness_probe(&sp, r, 10, 2_000_000, 78).unwrap();
    for r in rows {
        println!(
            "probe J={} ratio_l2 {:.6} ratio_l21 {:.6} rel {:.4}",
            r.layers,
            r.ratio_l2,
            r.ratio_l21,
            r.t.rel_stderr()
        );
    }
}

fn domination_case(m1: u32, v: f64, s: f64, n: (usize, usize), radii: &[f64], seeds: std::ops::Range<u64>) -> f64 {
    let sp = space(m1, 0);
    let m = GridModel::new(&sp, v, s, n.0, n.1).unwrap();
    let table = StencilTable::new(&m, radii).unwrap();
    let us = maximal::default_u_list(&m);
    let r_max = radii.iter().copied().fold(0.0, f64::max);
    let t0 = std::time::Instant::now();
    let mut worst = 0.0f64;
    let unit = maximal::FieldGrid::indicator_of_balls(
        m.clone(),
        &[maximal::BallSpec::new(&m, rank1ks_core::IwasawaPoint::on_axis(&sp, 0.0), 1.0).unwrap()],
    )
    .unwrap();
    let rep = maximal::pointwise_domination_check(&unit, &table, &us).unwrap();
    println!(
        "domination m1={m1} {n:?} unit ball ratio {:.6} bound {:.6} resolved {} flagged {}",
        rep.max_ratio, rep.bound, rep.resolved, rep.flagged
    );
    for seed in seeds {
        let f = maximal::random_multi_ball_indicator(&m, 1 + (seed % 6) as usize, (0.2, 1.0), r_max, seed).unwrap();
        let rep = maximal::pointwise_domination_check(&f, &table, &us).unwrap();
        assert!(rep.flagged == 0 && rep.resolved);
        worst = worst.max(rep.max_ratio);
    }
    println!(
        "domination m1={m1} {n:?} random worst {worst:.6} time {:?}",
        t0.elapsed()
    );
    rep.max_ratio
}

fn maximal_constants() {
    let r1 = maximal::quarter_octave_radii(1.0, 2.0);
    let a = domination_case(1, 10.0, 4.0, (320, 256), &r1, 9000..9050);
    let b = domination_case(1, 10.0, 4.0, (480, 384), &r1, 9000..9005);
    println!("domination m1=1 refinement change {:.4}", b / a - 1.0);
    let r2 = maximal::quarter_octave_radii(1.0, 1.5);
    let a = domination_case(2, 6.0, 3.0, (64, 64), &r2, 9100..9150);
    let b = domination_case(2, 6.0, 3.0, (96, 96), &r2, 9100..9103);
    println!("domination m1=2 refinement change {:.4}", b / a - 1.0);

    let sp = space(1, 0);
    let m = GridModel::new(&sp, 24.0, 5.0, 256, 128).unwrap();
    let f = maximal::random_multi_ball_indicator(&m, 6, (0.3, 1.0), 0.0, 9200).unwrap();
    let rep = maximal::split_comparison(&f, &[1.0, 1.25, 1.5]).unwrap();
    println!(
        "split ratio {:.6} enumerated {:.6} pairs {}",
        rep.max_ratio, rep.enumerated_constant, rep.pairs
    );

    let t0 = std::time::Instant::now();
    let rows = maximal::separation_sweep(&sp, &maximal::SeparationConfig::default()).unwrap();
    for r in &rows {
        println!(
            "separation k={} weak {:.6e} l21 {:.6e} ratio {:.6} ratio_l2 {:.6}",
            r.instance, r.weak_norm, r.l21_norm, r.ratio, r.ratio_l2
        );
    }
    println!("separation time {:?}", t0.elapsed());

    let t0 = std::time::Instant::now();
    let m = GridModel::new(&sp, 40.0, 6.0, 256, 256).unwrap();
    let mut worst = 0.0f64;
    let mut worst_union = 0.0f64;
    for seed in 9300..9400u64 {
        let n = 10 + (seed % 41) as usize;
        let balls = maximal::random_balls(&m, n, (1.0, 4.0), 0.0, seed).unwrap();
        let rep = maximal::covering_select(&m, &balls).unwrap();
        worst = worst.max(rep.overlap_ratio);
        worst_union = worst_union.max(rep.union_ratio);
    }
    println!(
        "covering worst overlap {worst:.6} union {worst_union:.6} time {:?}",
        t0.elapsed()
    );

    let t0 = std::time::Instant::now();
    for r in maximal::shells_probe(&sp, &maximal::ShellsConfig::default()).unwrap() {
        println!(
            "shells J={} ratio {:.6} ratio_l2 {:.6}",
            r.instance, r.ratio, r.ratio_l2
        );
    }
    println!("shells time {:?}", t0.elapsed());
}

fn main() {
    let which: Vec<String> = std::env::args().skip(1).collect();
    let want = |s: &str| which.is_empty() || which.iter().any(|w| w == s);
    if want("comparator") {
        comparator();
    }
    if want("abel_l21") {
        abel_l21();
    }
    if want("chain") {
        chain_constants();
    }
    if want("phi") {
        phi_sup();
    }
    if want("maximal") {
        maximal_constants();
    }
    if want("endpoint") {
        endpoint();
    }
}
