//! The verification suites, one per acceptance criterion.
//!
//! A suite draws every random quantity from `child_seed(seed, criterion)`,
//! writes one or more tables and a [`Summary`]. `max_ratio` and
//! `pinned_constant` in the summary are the measured quantity and constant of
//! the check that came closest to its pin; the tables hold every case.

use std::f64::consts::SQRT_2;
use std::sync::Arc;

use rand::Rng;
use rank1ks_core::convolution::{self, chain, DiscreteModel, ModelConfig, PsiCells, ThreeFunctionModel};
use rank1ks_core::kernel::{self, RadialFunction};
use rank1ks_core::maximal::{self, BallSpec, FieldGrid, GridModel, SeparationConfig, StencilTable};
use rank1ks_core::par::{self, child_seed, stream_rng};
use rank1ks_core::pinned;
use rank1ks_core::rearrange::{self, WeightedMatrix};
use rank1ks_core::{IwasawaPoint, SpaceParams};

use crate::config::RunConfig;
use crate::output::{Summary, Table};
use crate::{row, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, clap::ValueEnum)]
pub enum Suite {
    Kernel,
    Surface,
    AbelL21,
    Rearrange,
    Chain,
    Endpoint,
    Theorem8,
    Maximal,
    Covering,
    Determinism,
}

impl Suite {
    pub const ALL: [Suite; 10] = [
        Suite::Kernel,
        Suite::Surface,
        Suite::AbelL21,
        Suite::Rearrange,
        Suite::Chain,
        Suite::Endpoint,
        Suite::Theorem8,
        Suite::Maximal,
        Suite::Covering,
        Suite::Determinism,
    ];

    pub fn criterion(self) -> u64 {
        Suite::ALL.iter().position(|&s| s == self).unwrap() as u64 + 1
    }

    pub fn name(self) -> &'static str {
        match self {
            Suite::Kernel => "kernel",
            Suite::Surface => "surface",
            Suite::AbelL21 => "abel_l21",
            Suite::Rearrange => "rearrange",
            Suite::Chain => "chain",
            Suite::Endpoint => "endpoint",
            Suite::Theorem8 => "theorem8",
            Suite::Maximal => "maximal",
            Suite::Covering => "covering",
            Suite::Determinism => "determinism",
        }
    }

    /// Suites whose output depends on the seed.
    pub fn is_randomized(self) -> bool {
        !matches!(self, Suite::Kernel | Suite::Determinism)
    }

    fn seed(self, cfg: &RunConfig) -> u64 {
        child_seed(cfg.seed, self.criterion())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub suite: Suite,
    pub summary: Summary,
    pub tables: Vec<Table>,
    /// One human-readable line: the failures if any, else the headline.
    pub detail: String,
}

impl SuiteResult {
    pub fn status_line(&self) -> String {
        let s = &self.summary;
        format!(
            "criterion {:>2} {:<11} {}  measured {} pinned {} cases {}  {}",
            self.suite.criterion(),
            self.suite.name(),
            if s.pass { "PASS" } else { "FAIL" },
            number(s.max_ratio),
            number(s.pinned_constant),
            s.cases,
            self.detail
        )
    }
}

/// Six decimals, or three significant digits below `1e-3`.
pub(crate) fn number(x: f64) -> String {
    if x != 0.0 && x.abs() < 1e-3 {
        format!("{x:.3e}")
    } else {
        format!("{x:.6}")
    }
}

/// Pass/fail bookkeeping of a suite.
struct Outcome {
    suite: Suite,
    cases: u64,
    /// `(measured, pinned)` of the check closest to its pin.
    headline: Option<(f64, f64)>,
    failures: Vec<String>,
    failure_count: usize,
}

impl Outcome {
    fn new(suite: Suite) -> Self {
        Outcome {
            suite,
            cases: 0,
            headline: None,
            failures: Vec::new(),
            failure_count: 0,
        }
    }

    fn track(&mut self, measured: f64, pinned: f64) {
        let worse = match self.headline {
            None => true,
            Some((m, p)) => !(measured / pinned <= m / p),
        };
        if worse {
            self.headline = Some((measured, pinned));
        }
    }

    fn require(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.failure_count += 1;
            if self.failures.len() < 3 {
                self.failures.push(msg());
            }
        }
    }

    fn finish(self, tables: Vec<Table>, note: String) -> SuiteResult {
        let (max_ratio, pinned_constant) = self.headline.unwrap_or((0.0, 0.0));
        let pass = self.failure_count == 0;
        let detail = if pass {
            note
        } else {
            let more = self.failure_count - self.failures.len();
            let mut d = self.failures.join("; ");
            if more > 0 {
                d.push_str(&format!("; and {more} more"));
            }
            d
        };
        SuiteResult {
            suite: self.suite,
            summary: Summary {
                suite: self.suite.name().to_owned(),
                cases: self.cases,
                max_ratio,
                pinned_constant,
                pass,
            },
            tables,
            detail,
        }
    }
}

fn space(m1: u32, m2: u32) -> SpaceParams {
    SpaceParams::new(m1, m2).expect("test spaces are valid")
}

/// The five test spaces of the kernel, chain and theorem8 suites.
pub fn test_spaces() -> [SpaceParams; 5] {
    [space(1, 0), space(2, 0), space(3, 0), space(2, 1), space(4, 3)]
}

fn rel_diff(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Runs `which` in order. A determinism entry reruns the randomized suites
/// that ran before it in this call (all of them when none did) and compares
/// the tables byte for byte.
pub fn run_suites(
    which: &[Suite],
    cfg: &RunConfig,
    mut progress: impl FnMut(&SuiteResult),
) -> Result<Vec<SuiteResult>, CliError> {
    let mut out: Vec<SuiteResult> = Vec::new();
    for &s in which {
        let r = if s == Suite::Determinism {
            let mut first: Vec<SuiteResult> = out.iter().filter(|r| r.suite.is_randomized()).cloned().collect();
            if first.is_empty() {
                for t in Suite::ALL.into_iter().filter(|t| t.is_randomized()) {
                    first.push(run_suite(t, cfg)?);
                }
            }
            determinism(cfg, &first)?
        } else {
            run_suite(s, cfg)?
        };
        progress(&r);
        out.push(r);
    }
    Ok(out)
}

pub fn run_suite(s: Suite, cfg: &RunConfig) -> Result<SuiteResult, CliError> {
    match s {
        Suite::Kernel => kernel_suite(cfg),
        Suite::Surface => surface(cfg),
        Suite::AbelL21 => abel_l21(cfg),
        Suite::Rearrange => rearrange_suite(cfg),
        Suite::Chain => chain_suite(cfg),
        Suite::Endpoint => endpoint(cfg),
        Suite::Theorem8 => theorem8(cfg),
        Suite::Maximal => maximal_suite(cfg),
        Suite::Covering => covering(cfg),
        Suite::Determinism => determinism(cfg, &[]),
    }
}

fn kernel_suite(cfg: &RunConfig) -> Result<SuiteResult, CliError> {
    let mut o = Outcome::new(Suite::Kernel);
    let mut t = Table::new(
        "kernel",
        &[
            "m1",
            "m2",
            "ratio_min",
            "ratio_max",
            "ratio_min_half_tol",
            "ratio_max_half_tol",
            "points",
            "constant",
            "endpoint_drift",
        ],
    );
    let step = cfg.verify.kernel_step;
    let ranges = par::map_indexed(10, |i| {
        let sp = test_spaces()[i / 2];
        let tol = if i % 2 == 0 { 1e-8 } else { 5e-9 };
        kernel::comparator_ratio_range(&sp, 10.0, 5.0, step, 0.01, tol)
    });
    for (sp, pair) in test_spaces().iter().zip(ranges.chunks(2)) {
        let (a, b) = (pair[0], pair[1]);
        let c = a.two_sided_constant().max(b.two_sided_constant());
        let drift = rel_diff(a.min, b.min).max(rel_diff(a.max, b.max));
        o.cases += a.points as u64;
        o.track(c, pinned::KERNEL_C_STAR);
        o.require(c <= pinned::KERNEL_C_STAR, || {
            format!("{sp}: constant {c:.6} exceeds {}", pinned::KERNEL_C_STAR)
        });
        o.require(a.points > 0, || format!("{sp}: empty grid"));
        o.require(drift < pinned::KERNEL_ENDPOINT_DRIFT, || {
            format!("{sp}: endpoints drift by {drift:.3e}")
        });
        t.push(row![sp.m1(), sp.m2(), a.min, a.max, b.min, b.max, a.points, c, drift]);
    }
    Ok(o.finish(vec![t], "all five spaces share one interval".into()))
}

fn surface(cfg: &RunConfig) -> Result<SuiteResult, CliError> {
    let mut o = Outcome::new(Suite::Surface);
    let seed = Suite::Surface.seed(cfg);
    let s_values = [0.0, 0.5, 1.0];
    let bins = [(1.5, 1.9), (2.3, 2.7), (3.1, 3.5)];
    let mut b_t = Table::new(
        "surface_bins",
        &[
            "m1", "m2", "s", "t_lo", "t_hi", "estimate", "stderr", "psi_mean", "ratio", "z",
        ],
    );
    let mut k_t = Table::new(
        "surface_kappa",
        &[
            "m1",
            "m2",
            "kappa",
            "kappa_stderr",
            "kappa_analytic",
            "max_z",
            "max_rel_dev",
        ],
    );
    for (i, sp) in test_spaces().iter().enumerate() {
        let fit = kernel::fit_kappa(
            sp,
            &s_values,
            &bins,
            cfg.verify.kappa_samples,
            child_seed(seed, i as u64),
        )?;
        for b in &fit.bins {
            let z = (b.estimate - fit.kappa * b.psi_mean).abs() / b.stderr;
            b_t.push(row![
                sp.m1(),
                sp.m2(),
                b.s,
                b.t_lo,
                b.t_hi,
                b.estimate,
                b.stderr,
                b.psi_mean,
                b.ratio(),
                z
            ]);
        }
        let (z, dev) = (fit.max_z(), fit.max_rel_dev());
        o.cases += fit.bins.len() as u64;
        o.track(z, pinned::KAPPA_MAX_Z);
        o.require(z <= pinned::KAPPA_MAX_Z, || {
            format!("{sp}: a bin is {z:.2} standard errors off")
        });
        o.require(dev <= pinned::KAPPA_SPREAD, || {
            format!("{sp}: per-bin kappa spread {dev:.4}")
        });
        k_t.push(row![
            sp.m1(),
            sp.m2(),
            fit.kappa,
            fit.kappa_stderr,
            kernel::kappa_analytic(sp),
            z,
            dev
        ]);
    }
    Ok(o.finish(vec![b_t, k_t], "one kappa per space fits every bin".into()))
}

/// A union of one to five intervals inside `[0, 10]`.
fn random_radial_indicator(rng: &mut impl Rng) -> Result<RadialFunction, CliError> {
    let n = rng.random_range(1..=5);
    let iv: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            let a = 10.0 * rng.random::<f64>();
            (a, (a + 0.05 + 4.0 * rng.random::<f64>()).min(10.0))
        })
        .collect();
    Ok(RadialFunction::union_of(&iv)?)
}

fn abel_l21(cfg: &RunConfig) -> Result<SuiteResult, CliError> {
    let mut o = Outcome::new(Suite::AbelL21);
    let seed = Suite::AbelL21.seed(cfg);
    let mut t = Table::new(
        "abel_l21",
        &["m1", "m2", "family", "index", "radius", "sup_abel", "l21_norm", "ratio"],
    );
    let mut tail_t = Table::new("abel_l21_tail", &["m1", "m2", "max_r_le_10", "max_r_le_20", "growth"]);
    let n_random = cfg.verify.abel_random;
    for (si, sp) in [space(2, 0), space(2, 1)].iter().enumerate() {
        let c = pinned::abel_l21_constant(sp).expect("pinned for both spaces");
        let sub = child_seed(seed, si as u64);
        let random = par::map_indexed(n_random, |i| -> Result<(f64, f64), CliError> {
            let f = random_radial_indicator(&mut stream_rng(sub, i as u64))?;
            Ok(kernel::abel_l21_bound(sp, &f, 200)?)
        });
        let balls = par::map_indexed(191, |i| -> Result<(f64, f64, f64), CliError> {
            let r = 1.0 + 0.1 * i as f64;
            let (lhs, rhs) = kernel::abel_l21_bound(sp, &RadialFunction::ball(r)?, 200)?;
            Ok((r, lhs, rhs))
        });
        let check = |o: &mut Outcome, what: &str, lhs: f64, rhs: f64| {
            let ratio = lhs / rhs;
            o.cases += 1;
            o.track(ratio, c);
            o.require(ratio.is_finite() && ratio <= c, || {
                format!("{sp}: {what} ratio {ratio:.6} exceeds {c}")
            });
            ratio
        };
        for (i, r) in random.into_iter().enumerate() {
            let (lhs, rhs) = r?;
            let ratio = check(&mut o, "random indicator", lhs, rhs);
            t.push(row![sp.m1(), sp.m2(), "random", i, 0.0, lhs, rhs, ratio]);
        }
        let (mut near, mut far) = (0.0f64, 0.0f64);
        for (i, b) in balls.into_iter().enumerate() {
            let (r, lhs, rhs) = b?;
            let ratio = check(&mut o, "ball", lhs, rhs);
            if i <= 90 {
                near = near.max(ratio);
            }
            far = far.max(ratio);
            t.push(row![sp.m1(), sp.m2(), "ball", i, r, lhs, rhs, ratio]);
        }
        let growth = far / near - 1.0;
        o.require(growth < pinned::ABEL_TAIL_GROWTH, || {
            format!("{sp}: ball family grows {growth:.4} past R = 10")
        });
        tail_t.push(row![sp.m1(), sp.m2(), near, far, growth]);
    }
    Ok(o.finish(vec![t, tail_t], "ball family saturates by R = 10".into()))
}

fn random_matrix(rng: &mut impl Rng) -> Result<WeightedMatrix, CliError> {
    let (r, c) = (rng.random_range(1..=8), rng.random_range(1..=8));
    let data = (0..r * c)
        .map(|_| {
            if rng.random::<f64>() < 0.3 {
                0.0
            } else {
                rng.random::<f64>()
            }
        })
        .collect();
    let rw = (0..r).map(|_| 0.5 + rng.random::<f64>()).collect();
    let cw = (0..c).map(|_| 0.5 + rng.random::<f64>()).collect();
    Ok(WeightedMatrix::new(r, c, data, rw, cw)?)
}

fn random_subset(rng: &mut impl Rng, n: usize) -> Vec<usize> {
    (0..n).filter(|_| rng.random::<f64>() < 0.5).collect()
}

fn rearrange_suite(cfg: &RunConfig) -> Result<SuiteResult, CliError> {
    let mut o = Outcome::new(Suite::Rearrange);
    let seed = Suite::Rearrange.seed(cfg);

    let mut dom_t = Table::new(
        "rearrange_domination",
        &["case", "rows", "cols", "integral", "conservation_error", "lhs", "rhs"],
    );
    let s0 = child_seed(seed, 0);
    let cases = par::map_indexed(cfg.verify.rearrange_cases, |i| -> Result<_, CliError> {
        let mut rng = stream_rng(s0, i as u64);
        let a = random_matrix(&mut rng)?;
        let (d, e) = (random_subset(&mut rng, a.rows()), random_subset(&mut rng, a.cols()));
        let integral = a.integral();
        let err = (rearrange::double_rearrangement(&a).integral() - integral).abs();
        let (lhs, rhs) = rearrange::rectangle_domination_check(&a, &d, &e)?;
        Ok((a.rows(), a.cols(), integral, err, lhs, rhs))
    });
    for (i, c) in cases.into_iter().enumerate() {
        let (r, cols, integral, err, lhs, rhs) = c?;
        o.cases += 1;
        o.require(err <= pinned::CONSERVATION_TOL, || {
            format!("case {i}: conservation error {err:.3e}")
        });
        o.require(lhs <= rhs * (1.0 + 1e-12), || {
            format!("case {i}: rectangle integral {lhs} above {rhs}")
        });
        dom_t.push(row![i, r, cols, integral, err, lhs, rhs]);
    }

    let mut exp_t = Table::new(
        "rearrange_exp_embedding",
        &["case", "prefix", "delta", "lhs", "rhs", "constant"],
    );
    let s1 = child_seed(seed, 1);
    let n_exp = cfg.verify.row_embedding_cases;
    let cases = par::map_indexed(n_exp, |i| -> Result<_, CliError> {
        let mut rng = stream_rng(s1, i as u64);
        let delta = (0.1 + 2.9 * rng.random::<f64>()) * if rng.random::<bool>() { 1.0 } else { -1.0 };
        let g = if i % 2 == 0 {
            RadialFunction::indicator(0.0, 0.05 + 9.95 * rng.random::<f64>())?
        } else {
            random_radial_indicator(&mut rng)?
        };
        let prefix = g.edges()[0] == 0.0 && g.values().len() == 1;
        let (lhs, rhs) = rearrange::exp_embedding_check(&g, delta)?;
        Ok((prefix, delta, lhs, rhs))
    });
    for (i, c) in cases.into_iter().enumerate() {
        let (prefix, delta, lhs, rhs) = c?;
        // the constant that would make this case an equality
        let constant = SQRT_2 * lhs / rhs;
        o.cases += 1;
        o.track(constant, pinned::EXP_EMBEDDING_C);
        if prefix {
            o.require(rel_diff(lhs, rhs) <= 1e-12, || {
                format!("exp case {i}: prefix indicator not an equality ({lhs} vs {rhs})")
            });
        } else {
            o.require(lhs < rhs, || format!("exp case {i}: {lhs} not below {rhs}"));
        }
        exp_t.push(row![i, prefix, delta, lhs, rhs, constant]);
    }

    let mut row_t = Table::new("rearrange_row_l21", &["case", "rows", "cols", "lhs", "norm", "ratio"]);
    let s2 = child_seed(seed, 2);
    let cases = par::map_indexed(cfg.verify.row_embedding_cases, |i| -> Result<_, CliError> {
        let h = random_matrix(&mut stream_rng(s2, i as u64))?;
        let (lhs, norm) = rearrange::row_l21_embedding_check(&h);
        Ok((h.rows(), h.cols(), lhs, norm))
    });
    for (i, c) in cases.into_iter().enumerate() {
        let (r, cols, lhs, norm) = c?;
        let ratio = if norm > 0.0 { lhs / norm } else { 0.0 };
        o.cases += 1;
        o.track(ratio, pinned::ROW_EMBEDDING_C);
        o.require(ratio <= pinned::ROW_EMBEDDING_C + pinned::ROW_EMBEDDING_SLACK, || {
            format!("row case {i}: ratio {ratio:.12}")
        });
        row_t.push(row![i, r, cols, lhs, norm, ratio]);
    }
    Ok(o.finish(
        vec![dom_t, exp_t, row_t],
        "conservation, domination and both embeddings hold".into(),
    ))
}

fn chain_suite(cfg: &RunConfig) -> Result<SuiteResult, CliError> {
    let mut o = Outcome::new(Suite::Chain);
    let seed = Suite::Chain.seed(cfg);
    let mc = ModelConfig::default();
    let mut t = Table::new(
        "chain",
        &[
            "m1",
            "m2",
            "model",
            "step1",
            "step2",
            "step3",
            "split_bound",
            "step1_over_step2",
            "step2_over_step3",
            "step3_over_split",
        ],
    );
    let mut abel_t = Table::new(
        "chain_abel",
        &["m1", "m2", "model", "step2_cells", "step2_abel", "rel_diff"],
    );
    for (si, sp) in test_spaces().iter().enumerate() {
        let c23 = pinned::c23(sp).expect("pinned for every test space");
        let psi = PsiCells::build(sp, &mc, 1e-10)?;
        let sub = child_seed(seed, si as u64);
        let rows = par::map_indexed(cfg.verify.chain_models, |i| -> Result<_, CliError> {
            let m = DiscreteModel::random(sp, mc, child_seed(sub, i as u64))?;
            let s1 = chain::chain_step1_bound(&m, &psi)?;
            let s2 = chain::chain_step2_bound(&m, &psi)?.total();
            let s3 = chain::chain_step3_bound(&m, sp)?;
            let data = m.rearranged(sp)?;
            let split = chain::split_optimize(&data, sp, data.norms(sp), pinned::SPLIT_C)?;
            Ok((s1, s2, s3, split))
        });
        let ratio = |a: f64, b: f64| if a == 0.0 { 0.0 } else { a / b };
        for (i, r) in rows.into_iter().enumerate() {
            let (s1, s2, s3, split) = r?;
            let (r12, r23, r3s) = (ratio(s1, s2), ratio(s2, s3), ratio(s3, split.bound));
            o.cases += 1;
            o.track(r12, pinned::C12);
            o.track(r23, c23);
            o.require(s1 <= pinned::C12 * s2, || {
                format!("{sp} model {i}: step1/step2 = {r12:.6}")
            });
            o.require(s2 <= c23 * s3, || {
                format!("{sp} model {i}: step2/step3 = {r23:.6} above {c23}")
            });
            o.require(split.holds(), || format!("{sp} model {i}: step3/split = {r3s:.6}"));
            t.push(row![sp.m1(), sp.m2(), i, s1, s2, s3, split.bound, r12, r23, r3s]);
        }

        let one = ModelConfig { n_k: 1, ..mc };
        let psi1 = PsiCells::build(sp, &one, 1e-10)?;
        let sub1 = child_seed(sub, u64::MAX);
        let rows = par::map_indexed(20, |i| -> Result<_, CliError> {
            let m = DiscreteModel::random_bi_invariant(sp, one, child_seed(sub1, i as u64))?;
            let a = chain::chain_step2_bound(&m, &psi1)?.total();
            let b = chain::chain_step2_via_abel(&m, sp, 1e-12)?.total();
            Ok((a, b))
        });
        for (i, r) in rows.into_iter().enumerate() {
            let (a, b) = r?;
            let d = rel_diff(a, b);
            o.cases += 1;
            o.require(d <= 1e-8, || {
                format!("{sp} bi-invariant model {i}: routes differ by {d:.3e}")
            });
            abel_t.push(row![sp.m1(), sp.m2(), i, a, b, d]);
        }
    }
    Ok(o.finish(vec![t, abel_t], "every link of the chain holds".into()))
}

fn endpoint(cfg: &RunConfig) -> Result<SuiteResult, CliError> {
    let mut o = Outcome::new(Suite::Endpoint);
    let seed = Suite::Endpoint.seed(cfg);
    let sp = space(2, 0);
    let radii: Vec<f64> = (1..=8).map(f64::from).collect();
    let rows = convolution::endpoint_ratio_sweep(&sp, &radii, cfg.verify.endpoint_samples, child_seed(seed, 0))?;
    let mut t = Table::new(
        "endpoint_sweep",
        &["radius", "estimate", "stderr", "rel_stderr", "norm_product", "ratio"],
    );
    for r in &rows {
        let rel = r.t.rel_stderr();
        o.cases += 1;
        o.require(r.ratio.is_finite() && r.ratio > 0.0, || {
            format!("R = {}: ratio {}", r.radius, r.ratio)
        });
        o.require(rel < pinned::ENDPOINT_REL_STDERR, || {
            format!("R = {}: relative stderr {rel:.3}", r.radius)
        });
        t.push(row![r.radius, r.t.estimate, r.t.stderr, rel, r.norm_product, r.ratio]);
    }
    let growth = rows[7].ratio / rows[3].ratio;
    o.track(growth, pinned::ENDPOINT_GROWTH);
    o.require(growth <= pinned::ENDPOINT_GROWTH, || {
        format!("ratio(8)/ratio(4) = {growth:.4}")
    });

    let probe = convolution::sharpness_probe(
        &sp,
        cfg.verify.probe_radius,
        cfg.verify.probe_layers,
        cfg.verify.probe_samples,
        child_seed(seed, 1),
    )?;
    let mut p = Table::new(
        "endpoint_probe",
        &["layers", "estimate", "stderr", "g_l2", "g_l21", "ratio_l2", "ratio_l21"],
    );
    for (w, r) in probe.iter().zip(probe.iter().skip(1)).enumerate() {
        let (a, b) = r;
        o.require(b.ratio_l2 > a.ratio_l2, || {
            format!("probe ratio falls from J = {} to J = {}", w + 1, w + 2)
        });
    }
    for r in &probe {
        o.cases += 1;
        p.push(row![
            r.layers,
            r.t.estimate,
            r.t.stderr,
            r.g_l2,
            r.g_l21,
            r.ratio_l2,
            r.ratio_l21
        ]);
    }
    let note = format!(
        "L2 probe rises {:.4} -> {:.4} over J = 1..{}",
        probe[0].ratio_l2,
        probe[probe.len() - 1].ratio_l2,
        probe.len()
    );
    Ok(o.finish(vec![t, p], note))
}

fn theorem8(cfg: &RunConfig) -> Result<SuiteResult, CliError> {
    let mut o = Outcome::new(Suite::Theorem8);
    let seed = Suite::Theorem8.seed(cfg);
    let mc = ModelConfig::default();
    let tol = pinned::THEOREM8_TOL;
    let mut agree_t = Table::new(
        "theorem8_indicators",
        &["m1", "m2", "model", "step3", "theorem8", "rel_diff"],
    );
    let mut add_t = Table::new(
        "theorem8_additivity",
        &["m1", "m2", "model", "fstar_rel_diff", "bound_rel_diff"],
    );
    let mut phi_t = Table::new(
        "theorem8_phi",
        &["m1", "m2", "points", "max_phi_over_exp", "cells_equal_above_one"],
    );
    for (si, sp) in test_spaces().iter().enumerate() {
        let sub = child_seed(seed, si as u64);
        let rows = par::map_indexed(cfg.verify.theorem8_models, |i| -> Result<_, CliError> {
            let s = child_seed(sub, i as u64);
            let tf = ThreeFunctionModel::random(sp, mc, 3, true, s)?;
            let s3 = chain::chain_step3_bound(&tf.to_discrete(s)?, sp)?;
            let t8 = chain::theorem8_bound(sp, &tf.rearranged(sp)?);
            Ok((s3, t8))
        });
        for (i, r) in rows.into_iter().enumerate() {
            let (s3, t8) = r?;
            let d = rel_diff(s3, t8);
            o.cases += 1;
            o.track(d, tol);
            o.require(d <= tol, || format!("{sp} model {i}: step3 {s3} vs bound {t8}"));
            agree_t.push(row![sp.m1(), sp.m2(), i, s3, t8, d]);
        }

        let sub1 = child_seed(sub, u64::MAX);
        let rows = par::map_indexed(cfg.verify.theorem8_models, |i| -> Result<_, CliError> {
            let s = child_seed(sub1, i as u64);
            let base = ThreeFunctionModel::random(sp, mc, 2, true, s)?;
            let mut rng = stream_rng(s, 9);
            let inner: Vec<f64> = base
                .f
                .iter()
                .map(|&x| if x > 0.0 && rng.random::<f64>() < 0.5 { 1.0 } else { 0.0 })
                .collect();
            let layered: Vec<f64> = base.f.iter().zip(&inner).map(|(a, b)| 2.0 * a + 3.0 * b).collect();
            let with = |f: Vec<f64>| ThreeFunctionModel { f, ..base.clone() };
            let (d_base, d_inner, d_layered) = (
                base.rearranged(sp)?,
                with(inner).rearranged(sp)?,
                with(layered).rearranged(sp)?,
            );
            let mut xs: Vec<f64> = [&d_base, &d_inner, &d_layered]
                .iter()
                .flat_map(|d| d.fstar.breakpoints().iter().copied())
                .collect();
            xs.sort_by(f64::total_cmp);
            xs.dedup();
            let (mut err, mut scale) = (0.0f64, 0.0f64);
            let mut x0 = 0.0;
            for &x1 in &xs {
                let x = 0.5 * (x0 + x1);
                let want = 2.0 * d_base.fstar.eval(x) + 3.0 * d_inner.fstar.eval(x);
                err = err.max((d_layered.fstar.eval(x) - want).abs());
                scale = scale.max(want.abs());
                x0 = x1;
            }
            let fstar_diff = if scale > 0.0 { err / scale } else { err };
            let want = 2.0 * chain::theorem8_bound(sp, &d_base) + 3.0 * chain::theorem8_bound(sp, &d_inner);
            Ok((fstar_diff, rel_diff(chain::theorem8_bound(sp, &d_layered), want)))
        });
        for (i, r) in rows.into_iter().enumerate() {
            let (df, db) = r?;
            o.cases += 1;
            o.track(df.max(db), tol);
            o.require(df <= tol && db <= tol, || {
                format!("{sp} layered model {i}: F* off by {df:.3e}, bound by {db:.3e}")
            });
            add_t.push(row![sp.m1(), sp.m2(), i, df, db]);
        }

        let mut worst = 0.0f64;
        let points = 2001;
        for k in 0..points {
            let u = 0.005 * k as f64;
            let e = (sp.rho() * u).exp();
            let phi = kernel::phi_weight(sp, u);
            worst = worst.max(phi / e);
            // equality above u = 1, up to the last bit of `exp`
            o.require(phi <= e * (1.0 + 1e-15), || {
                format!("{sp}: phi({u}) = {phi} above e^(rho u) = {e}")
            });
        }
        let (phi_c, exp_c) = (chain::phi_cell_weights(sp, &mc), chain::exp_cell_weights(sp, &mc));
        let mut equal = true;
        for l in 0..mc.n_u {
            o.require(phi_c[l] <= exp_c[l], || {
                format!("{sp}: cell {l} phi weight above exp weight")
            });
            if mc.u_cell(l).0 >= 1.0 {
                equal &= phi_c[l] == exp_c[l];
            }
        }
        o.require(equal, || format!("{sp}: phi and exp cell weights differ above u = 1"));
        o.cases += points as u64;
        phi_t.push(row![sp.m1(), sp.m2(), points, worst, equal]);
    }
    Ok(o.finish(
        vec![agree_t, add_t, phi_t],
        "indicator bound exact, layers additive, phi below exp".into(),
    ))
}

struct DominationGrid {
    m1: u32,
    v_half: f64,
    s_half: f64,
    coarse: (usize, usize),
    fine: (usize, usize),
    r_max: f64,
}

const DOMINATION_GRIDS: [DominationGrid; 2] = [
    DominationGrid {
        m1: 1,
        v_half: 10.0,
        s_half: 4.0,
        coarse: (320, 256),
        fine: (480, 384),
        r_max: 2.0,
    },
    DominationGrid {
        m1: 2,
        v_half: 6.0,
        s_half: 3.0,
        coarse: (64, 64),
        fine: (96, 96),
        r_max: 1.5,
    },
];

fn unit_ball(model: &Arc<GridModel>) -> Result<FieldGrid, CliError> {
    let b = BallSpec::new(model, IwasawaPoint::on_axis(model.space(), 0.0), 1.0)?;
    Ok(FieldGrid::indicator_of_balls(model.clone(), &[b])?)
}

fn domination_fields(model: &Arc<GridModel>, n: usize, r_max: f64, seed: u64) -> Result<Vec<FieldGrid>, CliError> {
    let mut out = vec![unit_ball(model)?];
    for i in 0..n {
        out.push(maximal::random_multi_ball_indicator(
            model,
            1 + i % 6,
            (0.2, 1.0),
            r_max,
            child_seed(seed, i as u64),
        )?);
    }
    Ok(out)
}

fn maximal_suite(cfg: &RunConfig) -> Result<SuiteResult, CliError> {
    let mut o = Outcome::new(Suite::Maximal);
    let seed = Suite::Maximal.seed(cfg);
    let mut dom_t = Table::new(
        "maximal_domination",
        &[
            "m1",
            "m2",
            "field",
            "n_v",
            "n_s",
            "max_ratio",
            "bound",
            "interior_cells",
            "flagged",
            "resolved",
        ],
    );
    let mut ref_t = Table::new(
        "maximal_refinement",
        &["m1", "m2", "coarse_ratio", "fine_ratio", "change"],
    );
    let mut ord_t = Table::new(
        "maximal_order",
        &[
            "m1",
            "m2",
            "field",
            "cells_m1_defined",
            "cells_m2_defined",
            "violations",
        ],
    );
    for (gi, g) in DOMINATION_GRIDS.iter().enumerate() {
        let sp = space(g.m1, 0);
        let c3 = pinned::c3(&sp).expect("pinned for both grids");
        let radii = maximal::quarter_octave_radii(1.0, g.r_max);
        let model = GridModel::new(&sp, g.v_half, g.s_half, g.coarse.0, g.coarse.1)?;
        let table = StencilTable::new(&model, &radii)?;
        let us = maximal::default_u_list(&model);
        let fields = domination_fields(&model, cfg.verify.maximal_fields, g.r_max, child_seed(seed, gi as u64))?;
        let mut coarse_unit = 0.0;
        for (i, f) in fields.iter().enumerate() {
            let rep = maximal::pointwise_domination_check(f, &table, &us)?;
            if i == 0 {
                coarse_unit = rep.max_ratio;
            }
            o.cases += 1;
            o.track(rep.max_ratio, c3);
            o.require(rep.max_ratio <= c3, || {
                format!("{sp} field {i}: ratio {:.6} above {c3}", rep.max_ratio)
            });
            o.require(rep.flagged == 0, || {
                format!("{sp} field {i}: {} cells with lhs > 0 = rhs", rep.flagged)
            });
            o.require(rep.resolved, || {
                format!("{sp} field {i}: nilpotent windows do not resolve the balls")
            });
            dom_t.push(row![
                sp.m1(),
                sp.m2(),
                i,
                g.coarse.0,
                g.coarse.1,
                rep.max_ratio,
                rep.bound,
                rep.interior_cells,
                rep.flagged,
                rep.resolved
            ]);
        }

        let fine = GridModel::new(&sp, g.v_half, g.s_half, g.fine.0, g.fine.1)?;
        let rep = maximal::pointwise_domination_check(
            &unit_ball(&fine)?,
            &StencilTable::new(&fine, &radii)?,
            &maximal::default_u_list(&fine),
        )?;
        let change = rep.max_ratio / coarse_unit - 1.0;
        o.require(change.abs() <= pinned::REFINEMENT_TOL, || {
            format!("{sp}: refinement moves the ratio by {change:.4}")
        });
        ref_t.push(row![sp.m1(), sp.m2(), coarse_unit, rep.max_ratio, change]);

        for (i, f) in fields.iter().take(4).enumerate() {
            let (a, b) = (maximal::m1_field(f, &table), maximal::m2_field(f, &table));
            let mut violations = 0usize;
            for (x, y) in a.iter().zip(&b) {
                if let Some(x) = x {
                    if !matches!(y, Some(y) if x <= y) {
                        violations += 1;
                    }
                }
            }
            o.require(violations == 0, || {
                format!("{sp} field {i}: M1 > M2 on {violations} cells")
            });
            let count = |m: &maximal::MaximalField| m.iter().filter(|x| x.is_some()).count();
            ord_t.push(row![sp.m1(), sp.m2(), i, count(&a), count(&b), violations]);
        }
    }

    let sp = space(1, 0);
    let sep = SeparationConfig {
        counts: (1..=16).collect(),
        ..SeparationConfig::default()
    };
    let rows = maximal::separation_sweep(&sp, &sep)?;
    let mut sep_t = Table::new(
        "maximal_separation",
        &[
            "k",
            "weak_norm",
            "l21_norm",
            "l2_norm",
            "ratio",
            "ratio_l2",
            "ratio_over_single",
        ],
    );
    let base = rows[0].ratio;
    let mut spread = 1.0f64;
    for r in &rows {
        let q = r.ratio / base;
        spread = spread.max(q).max(1.0 / q);
        sep_t.push(row![
            r.instance,
            r.weak_norm,
            r.l21_norm,
            r.l2_norm,
            r.ratio,
            r.ratio_l2,
            q
        ]);
    }
    o.cases += rows.len() as u64;
    o.track(spread, pinned::SEPARATION_FACTOR);
    o.require(spread <= pinned::SEPARATION_FACTOR, || {
        format!("separation family drifts by a factor {spread:.4}")
    });

    let model = GridModel::new(&sp, 24.0, 5.0, 256, 128)?;
    let f = maximal::random_multi_ball_indicator(&model, 6, (0.3, 1.0), 0.0, child_seed(seed, 7))?;
    let split = maximal::split_comparison(&f, &[1.0, 1.25, 1.5])?;
    o.cases += split.pairs as u64;
    o.track(split.max_ratio, pinned::SPLIT_MAXIMAL_C);
    o.require(split.max_ratio <= pinned::SPLIT_MAXIMAL_C, || {
        format!("ball average {:.6} times M2~", split.max_ratio)
    });
    let mut split_t = Table::new("maximal_split", &["pairs", "max_ratio", "enumerated_constant"]);
    split_t.push(row![split.pairs, split.max_ratio, split.enumerated_constant]);

    let note = format!("separation spread {spread:.4}, split ratio {:.4}", split.max_ratio);
    Ok(o.finish(vec![dom_t, ref_t, ord_t, sep_t, split_t], note))
}

fn covering(cfg: &RunConfig) -> Result<SuiteResult, CliError> {
    let mut o = Outcome::new(Suite::Covering);
    let seed = Suite::Covering.seed(cfg);
    let c = &cfg.covering;
    let model = GridModel::new(&space(1, 0), c.v_half, c.s_half, c.n_v, c.n_s)?;
    let mut t = Table::new(
        "covering",
        &[
            "family",
            "balls",
            "selected",
            "second_phase",
            "union_all",
            "union_selected",
            "union_ratio",
            "overlap_ratio",
            "max_multiplicity",
        ],
    );
    let rows = par::map_indexed(cfg.verify.covering_families, |i| -> Result<_, CliError> {
        let mut rng = stream_rng(seed, i as u64);
        let n = rng.random_range(c.balls_min..=c.balls_max);
        let balls = maximal::random_balls(&model, n, (c.r_min, c.r_max), 0.0, child_seed(seed, i as u64))?;
        Ok((n, maximal::covering_select(&model, &balls)?))
    });
    for (i, r) in rows.into_iter().enumerate() {
        let (n, rep) = r?;
        o.cases += 1;
        o.track(rep.overlap_ratio, pinned::C4);
        o.require(rep.union_ratio <= pinned::COVERING_UNION, || {
            format!("family {i}: union ratio {:.6}", rep.union_ratio)
        });
        o.require(rep.overlap_ratio <= pinned::C4, || {
            format!("family {i}: overlap ratio {:.6}", rep.overlap_ratio)
        });
        t.push(row![
            i,
            n,
            rep.selected.len(),
            rep.second_phase,
            rep.union_all,
            rep.union_selected,
            rep.union_ratio,
            rep.overlap_ratio,
            rep.max_multiplicity
        ]);
    }
    Ok(o.finish(vec![t], "selection covers half the union".into()))
}

/// Reruns each suite of `first` in a pool of a different size and compares
/// every table byte for byte.
fn determinism(cfg: &RunConfig, first: &[SuiteResult]) -> Result<SuiteResult, CliError> {
    let mut o = Outcome::new(Suite::Determinism);
    let current = rayon::current_num_threads();
    // a different pool size, without exceeding an explicit cap
    let capped = std::env::var_os(crate::THREADS_ENV).is_some();
    let threads = if current == 1 && !capped {
        2
    } else {
        (current / 2).max(1)
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("cannot build a {threads}-thread pool: {e}")))?;
    let mut t = Table::new("determinism", &["suite", "table", "bytes", "identical"]);
    for r in first {
        let again = pool.install(|| run_suite(r.suite, cfg))?;
        o.require(again.summary == r.summary, || {
            format!("{}: summaries differ", r.suite.name())
        });
        o.require(again.tables.len() == r.tables.len(), || {
            format!("{}: table count differs", r.suite.name())
        });
        for (a, b) in r.tables.iter().zip(&again.tables) {
            let (x, y) = (a.to_csv(), b.to_csv());
            let same = x == y;
            o.cases += 1;
            o.require(same, || format!("{}: table {} differs", r.suite.name(), a.name));
            t.push(row![r.suite.name(), a.name.as_str(), x.len(), same]);
        }
    }
    o.headline = Some((0.0, 0.0));
    let note = format!(
        "{} suites rerun on {threads} threads (first run on {current})",
        first.len()
    );
    Ok(o.finish(vec![t], note))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn criteria_are_numbered_in_order() {
        for (i, s) in Suite::ALL.iter().enumerate() {
            assert_eq!(s.criterion(), i as u64 + 1);
        }
    }

    #[test]
    fn outcome_keeps_the_check_closest_to_its_pin() {
        let mut o = Outcome::new(Suite::Kernel);
        o.track(0.5, 1.0);
        o.track(1.2, 3.0);
        o.track(0.9, 1.0);
        o.track(0.1, 1.0);
        assert_eq!(o.headline, Some((0.9, 1.0)));
        o.require(false, || "a".into());
        let r = o.finish(Vec::new(), "fine".into());
        assert!(!r.summary.pass);
        assert_eq!(r.detail, "a");
    }

    #[test]
    fn radial_indicators_stay_in_range() {
        let mut rng = stream_rng(1, 0);
        for _ in 0..200 {
            let f = random_radial_indicator(&mut rng).unwrap();
            assert!(f.support_max() <= 10.0);
            assert!(f.is_indicator());
        }
    }
}
