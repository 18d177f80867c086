//! The trilinear form `T(f, g, h) = ∬ f(z) g(z⁻¹z') h(z') dz' dz`.
//!
//! Two tiers are provided. On real hyperbolic spaces `T` is sampled directly
//! in Iwasawa coordinates for bi-invariant triples ([`trilinear_mc`]). For
//! general rank-one spaces the rearrangement chain that bounds `T` is
//! evaluated on a finite surrogate in which `K` is a set of uniform atoms and
//! the kernel is the real `ψ` ([`chain`]).

use alloc::vec::Vec;

use rand::Rng;

use crate::geometry::{self, SpaceParams};
use crate::kernel::RadialFunction;
use crate::math;
use crate::par::{self, Accumulator};
use crate::{Error, Result};

pub mod chain;
mod sweep;

pub use chain::{DiscreteModel, ModelConfig, PsiCells, RearrangedData, SplitBound, Step2Terms, ThreeFunctionModel};
pub use sweep::{endpoint_ratio_sweep, sharpness_probe, EndpointRow, SharpnessRow};

/// Three radial functions `(f, g, h)`; `g` is evaluated at the Cartan radius
/// of `z⁻¹z'`.
#[derive(Debug, Clone, PartialEq)]
pub struct BiInvariantTriple {
    pub f: RadialFunction,
    pub g: RadialFunction,
    pub h: RadialFunction,
}

/// Radii of the balls `B(o, r_f)` and `B(o, r_h)` from which `z` and `z'`
/// are drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingBox {
    pub r_f: f64,
    pub r_h: f64,
}

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
}

impl McEstimate {
    pub fn rel_stderr(&self) -> f64 {
        if self.estimate == 0.0 {
            f64::INFINITY
        } else {
            self.stderr / self.estimate.abs()
        }
    }
}

/// `∑_{n, n'} a(n) b(n' − n) c(n')` and `(∑ b)·min(∑ a, ∑ c)` on `ℤ/nℤ`.
pub fn min_young_check(a: &[f64], b: &[f64], c: &[f64]) -> Result<(f64, f64)> {
    let n = a.len();
    if b.len() != n || c.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: if b.len() != n { b.len() } else { c.len() },
        });
    }
    if a.iter().chain(b).chain(c).any(|x| !(0.0..=1.0).contains(x)) {
        return Err(Error::arg("a/b/c", "values must lie in [0, 1]"));
    }
    let mut lhs = 0.0;
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0.0 {
            continue;
        }
        for (j, &cj) in c.iter().enumerate() {
            lhs += ai * b[(j + n - i) % n] * cj;
        }
    }
    let (sa, sb, sc): (f64, f64, f64) = (a.iter().sum(), b.iter().sum(), c.iter().sum());
    Ok((lhs, sb * sa.min(sc)))
}

/// Draws `(v, t)` from `B(o, r)` with weight `e^{2ρt} dv dt / proposal`.
///
/// `t` follows a piecewise-constant proposal matched cell by cell to the
/// exact marginal `e^{2ρt} V_{m1} r_v(t)^{m1}`, `r_v(t)² = e^{−t}(cosh r − cosh t)`,
/// so the weights stay close to `|B(o, r)|`; `v` is uniform in the slice.
struct BallSampler {
    r: f64,
    m1: usize,
    cell: f64,
    cdf: Vec<f64>,
    density_scale: Vec<f64>,
    two_rho: f64,
    ball_const: f64,
    cosh_r: f64,
}

const SAMPLER_CELLS: usize = 1024;

impl BallSampler {
    fn new(sp: &SpaceParams, r: f64) -> Self {
        let m1 = sp.m1() as usize;
        let mut s = BallSampler {
            r,
            m1,
            cell: 2.0 * r / SAMPLER_CELLS as f64,
            cdf: Vec::with_capacity(SAMPLER_CELLS),
            density_scale: Vec::with_capacity(SAMPLER_CELLS),
            two_rho: 2.0 * sp.rho(),
            ball_const: math::unit_ball_volume(sp.m1()),
            cosh_r: math::cosh(r),
        };
        let tol = crate::quad::Tolerance {
            abs: 0.0,
            rel: 1e-8,
            max_intervals: 50,
        };
        let mut masses = Vec::with_capacity(SAMPLER_CELLS);
        for j in 0..SAMPLER_CELLS {
            let a = -r + j as f64 * s.cell;
            masses.push(
                crate::quad::integrate(|t| s.density(t), a, a + s.cell, tol)
                    .value
                    .max(0.0),
            );
        }
        let total: f64 = masses.iter().sum();
        let mut acc = 0.0;
        for &m in &masses {
            acc += m;
            s.cdf.push(acc / total);
            // weight = density · cell · total / mass
            s.density_scale.push(if m > 0.0 { s.cell * total / m } else { 0.0 });
        }
        s
    }

    fn slice_radius_sq(&self, t: f64) -> f64 {
        (math::exp(-t) * (self.cosh_r - math::cosh(t))).max(0.0)
    }

    fn density(&self, t: f64) -> f64 {
        let rv2 = self.slice_radius_sq(t);
        math::exp(self.two_rho * t) * self.ball_const * math::powf(rv2, 0.5 * self.m1 as f64)
    }

    fn draw<R: Rng>(&self, rng: &mut R, v: &mut [f64]) -> (f64, f64) {
        let u: f64 = rng.random();
        let j = self.cdf.partition_point(|&c| c <= u).min(SAMPLER_CELLS - 1);
        let t = (-self.r + (j as f64 + rng.random::<f64>()) * self.cell).clamp(-self.r, self.r);
        let rv = math::sqrt(self.slice_radius_sq(t));
        // uniform point in the m1-ball by rejection from the cube
        loop {
            let mut n2 = 0.0;
            for x in v.iter_mut() {
                *x = 2.0 * rng.random::<f64>() - 1.0;
                n2 += *x * *x;
            }
            if n2 < 1.0 {
                break;
            }
        }
        for x in v.iter_mut() {
            *x *= rv;
        }
        (t, self.density(t) * self.density_scale[j])
    }
}

const TRILINEAR_BATCH: u64 = 1 << 15;

fn check_box(
    sp: &SpaceParams,
    f: &RadialFunction,
    h: &RadialFunction,
    sbox: Option<SamplingBox>,
) -> Result<SamplingBox> {
    sp.require_real_hyperbolic()?;
    let need = SamplingBox {
        r_f: f.support_max(),
        r_h: h.support_max(),
    };
    let b = sbox.unwrap_or(need);
    if b.r_f < need.r_f || b.r_h < need.r_h {
        return Err(Error::arg(
            "box",
            alloc::format!(
                "sampling radii ({}, {}) do not cover the supports ({}, {})",
                b.r_f,
                b.r_h,
                need.r_f,
                need.r_h
            ),
        ));
    }
    Ok(b)
}

/// Monte Carlo estimate of `T(f, g, h)` on a real hyperbolic space.
///
/// `z = n̄(v)a(t)` is drawn from `B(o, r_f)` and `z'` from `B(o, r_h)`;
/// `z⁻¹z' = n̄(e^t(v' − v)) a(t' − t)`, so `g` is evaluated at the
/// corresponding Cartan radius. The default box is the pair of support radii.
pub fn trilinear_mc(
    sp: &SpaceParams,
    triple: &BiInvariantTriple,
    sbox: Option<SamplingBox>,
    n_samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    let out = trilinear_mc_multi(
        sp,
        &triple.f,
        core::slice::from_ref(&triple.g),
        &triple.h,
        sbox,
        n_samples,
        seed,
    )?;
    Ok(out[0])
}

/// [`trilinear_mc`] for several `g` on common samples; the estimates are
/// therefore monotone in `g`.
pub fn trilinear_mc_multi(
    sp: &SpaceParams,
    f: &RadialFunction,
    gs: &[RadialFunction],
    h: &RadialFunction,
    sbox: Option<SamplingBox>,
    n_samples: u64,
    seed: u64,
) -> Result<Vec<McEstimate>> {
    let b = check_box(sp, f, h, sbox)?;
    if n_samples < 2 {
        return Err(Error::arg("n_samples", "need at least 2 samples"));
    }
    let m1 = sp.m1() as usize;
    let sf = BallSampler::new(sp, b.r_f);
    let sh = BallSampler::new(sp, b.r_h);
    let sizes = par::batches(n_samples, TRILINEAR_BATCH);
    let parts = par::map_indexed(sizes.len(), |k| {
        let mut rng = par::stream_rng(seed, k as u64);
        let mut acc = alloc::vec![Accumulator::default(); gs.len()];
        let mut v = alloc::vec![0.0; m1];
        let mut v2 = alloc::vec![0.0; m1];
        for _ in 0..sizes[k] {
            let (t, w) = sf.draw(&mut rng, &mut v);
            let (t2, w2) = sh.draw(&mut rng, &mut v2);
            let fv = f.eval(geometry::cartan_radius_of(v.iter().map(|x| x * x).sum(), 0.0, t));
            let hv = h.eval(geometry::cartan_radius_of(v2.iter().map(|x| x * x).sum(), 0.0, t2));
            let base = fv * hv * w * w2;
            if base == 0.0 {
                for a in acc.iter_mut() {
                    a.push(0.0);
                }
                continue;
            }
            let dv2: f64 = v.iter().zip(&v2).map(|(a, b)| (b - a) * (b - a)).sum();
            let d = geometry::distance_of(dv2, t, t2);
            for (a, g) in acc.iter_mut().zip(gs) {
                a.push(base * g.eval(d));
            }
        }
        acc
    });
    let mut total = alloc::vec![Accumulator::default(); gs.len()];
    for p in &parts {
        for (t, a) in total.iter_mut().zip(p) {
            t.merge(a);
        }
    }
    Ok(total
        .iter()
        .map(|a| McEstimate {
            estimate: a.mean(),
            stderr: a.stderr(),
        })
        .collect())
}

/// `∫ F(cartan(z)) dz` in Iwasawa coordinates (`m2 = 0`).
pub fn radial_integral(sp: &SpaceParams, f: &RadialFunction) -> Result<f64> {
    let mut total = 0.0;
    for (a, b, v) in f.steps() {
        if v > 0.0 {
            total += v * (geometry::iwasawa_ball_measure(sp, b)? - geometry::iwasawa_ball_measure(sp, a)?);
        }
    }
    Ok(total)
}

/// `‖F‖_{2,1}` of a radial step function with respect to the Iwasawa measure.
pub fn radial_l21_norm(sp: &SpaceParams, f: &RadialFunction) -> Result<f64> {
    let mut entries = Vec::new();
    for (a, b, v) in f.steps() {
        let m = geometry::iwasawa_ball_measure(sp, b)? - geometry::iwasawa_ball_measure(sp, a)?;
        if m > 0.0 {
            entries.push((v, m));
        }
    }
    if entries.is_empty() {
        return Ok(0.0);
    }
    Ok(crate::rearrange::l21_norm(&crate::rearrange::WeightedSamples::new(
        entries,
    )?))
}

/// `‖F‖_{L²}` with respect to the Iwasawa measure.
pub fn radial_l2_norm(sp: &SpaceParams, f: &RadialFunction) -> Result<f64> {
    let mut total = 0.0;
    for (a, b, v) in f.steps() {
        if v > 0.0 {
            total += v * v * (geometry::iwasawa_ball_measure(sp, b)? - geometry::iwasawa_ball_measure(sp, a)?);
        }
    }
    Ok(math::sqrt(total))
}
