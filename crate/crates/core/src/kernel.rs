//! The Abel kernel `ψ(t, s)`.
//!
//! `ψ` is the density of the horocyclic slice `n̄ ↦ n̄a(s)·o` with respect to
//! the Cartan radius, normalised with unit constant:
//!
//! * `m2 = 0`: `ψ = sinh t (cosh t − cosh s)^{(m1−2)/2}`;
//! * `m2 ≥ 1`: `ψ = sinh t (cosh t)^{m2} ∫_{L}^{1} (u cosh t − cosh s)^{(m1−2)/2}
//!   (1 − u²)^{(m2−2)/2} du` with `L = cosh s / cosh t`.
//!
//! The true geometric density is `κ·ψ` with `κ` depending on `(m1, m2)` only;
//! [`surface_mc`] measures it and [`kappa_analytic`] gives its value.

use alloc::vec::Vec;

use rand::Rng;

use crate::geometry::{self, SpaceParams};
use crate::math;
use crate::par::{self, Accumulator};
use crate::quad::{self, Tolerance};
use crate::{Error, Result};

/// Default relative tolerance for ψ and the Abel transform.
pub const DEFAULT_REL_TOL: f64 = 1e-8;

/// A nonnegative step function of the Cartan radius: `values[i]` on
/// `[edges[i], edges[i+1])`, zero elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialFunction {
    edges: Vec<f64>,
    values: Vec<f64>,
}

impl RadialFunction {
    pub fn new(edges: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if edges.len() != values.len() + 1 {
            return Err(Error::arg("edges", "need exactly one more edge than values"));
        }
        if edges.first().is_some_and(|&e| !(e >= 0.0)) {
            return Err(Error::arg("edges", "must start at t >= 0"));
        }
        if edges.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(Error::arg("edges", "must be finite and strictly increasing"));
        }
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::arg("values", "must be finite and nonnegative"));
        }
        Ok(RadialFunction { edges, values })
    }

    pub fn zero() -> Self {
        RadialFunction {
            edges: alloc::vec![0.0],
            values: Vec::new(),
        }
    }

    /// `χ_[a, b)`.
    pub fn indicator(a: f64, b: f64) -> Result<Self> {
        Self::new(alloc::vec![a, b], alloc::vec![1.0])
    }

    /// The profile of the ball indicator `χ_{B(o, r)}`.
    pub fn ball(r: f64) -> Result<Self> {
        Self::indicator(0.0, r)
    }

    /// Indicator of a finite union of intervals, merged and sorted.
    pub fn union_of(intervals: &[(f64, f64)]) -> Result<Self> {
        let mut iv: Vec<(f64, f64)> = intervals.iter().copied().filter(|(a, b)| b > a).collect();
        if iv.iter().any(|&(a, b)| !(a >= 0.0) || !b.is_finite()) {
            return Err(Error::arg("intervals", "must lie in [0, ∞) and be finite"));
        }
        iv.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (a, b) in iv {
            match merged.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        if merged.is_empty() {
            return Ok(Self::zero());
        }
        let mut edges = alloc::vec![merged[0].0];
        let mut values = Vec::new();
        for (i, &(a, b)) in merged.iter().enumerate() {
            if i > 0 {
                edges.push(a);
                values.push(0.0);
            }
            edges.push(b);
            values.push(1.0);
        }
        Self::new(edges, values)
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `(a, b, value)` for every step.
    pub fn steps(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.edges.windows(2).zip(&self.values).map(|(w, &v)| (w[0], w[1], v))
    }

    pub fn eval(&self, t: f64) -> f64 {
        // first edge > t, minus one
        let i = self.edges.partition_point(|&e| e <= t);
        if i == 0 || i == self.edges.len() {
            0.0
        } else {
            self.values[i - 1]
        }
    }

    /// Right end of the support (`0` for the zero function).
    pub fn support_max(&self) -> f64 {
        self.steps().filter(|s| s.2 > 0.0).map(|s| s.1).fold(0.0, f64::max)
    }

    pub fn is_indicator(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.edges.clone(), self.values.iter().map(|v| v * c).collect())
    }

    /// Pointwise sum on the common refinement.
    pub fn add(&self, other: &RadialFunction) -> Self {
        let mut edges: Vec<f64> = self.edges.iter().chain(&other.edges).copied().collect();
        edges.sort_by(f64::total_cmp);
        edges.dedup();
        if edges.len() < 2 {
            return Self::zero();
        }
        let values = edges.windows(2).map(|w| self.eval(w[0]) + other.eval(w[0])).collect();
        RadialFunction { edges, values }
    }

    /// `∫ F(t) (sinh t)^{m1} (sinh 2t)^{m2} dt`: the measure of the set when
    /// `F` is an indicator.
    pub fn mass(&self, sp: &SpaceParams) -> f64 {
        self.steps()
            .filter(|s| s.2 > 0.0)
            .map(|(a, b, v)| v * (geometry::ball_volume(sp, b) - geometry::ball_volume(sp, a)))
            .sum()
    }
}

/// How a [`KernelTable`] was filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelMethod {
    ClosedFormM2Zero,
    Quadrature,
    MonteCarlo,
}

impl KernelMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            KernelMethod::ClosedFormM2Zero => "closed_form_m2_0",
            KernelMethod::Quadrature => "quadrature",
            KernelMethod::MonteCarlo => "monte_carlo",
        }
    }
}

/// `ψ(t, s)` sampled on a `(t, s)` grid; `values[i][j] = ψ(t_grid[i], s_grid[j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    pub sp: SpaceParams,
    pub t_grid: Vec<f64>,
    pub s_grid: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub method: KernelMethod,
}

impl KernelTable {
    /// Deterministic table: closed form when `m2 = 0`, quadrature otherwise.
    pub fn build(sp: &SpaceParams, t_grid: &[f64], s_grid: &[f64], rel_tol: f64) -> Self {
        let method = if sp.m2() == 0 {
            KernelMethod::ClosedFormM2Zero
        } else {
            KernelMethod::Quadrature
        };
        let values = par::map_indexed(t_grid.len(), |i| {
            s_grid
                .iter()
                .map(|&s| psi_with_tol(sp, t_grid[i], s, rel_tol))
                .collect()
        });
        KernelTable {
            sp: *sp,
            t_grid: t_grid.to_vec(),
            s_grid: s_grid.to_vec(),
            values,
            method,
        }
    }

    /// Monte Carlo table: each entry is the [`surface_mc`] bin average over
    /// `[t − half_width, t + half_width)`, divided by [`kappa_analytic`].
    pub fn monte_carlo(
        sp: &SpaceParams,
        t_grid: &[f64],
        s_grid: &[f64],
        half_width: f64,
        n_samples: u64,
        seed: u64,
    ) -> Result<Self> {
        let kappa = kappa_analytic(sp);
        let mut values = Vec::with_capacity(t_grid.len());
        for (i, &t) in t_grid.iter().enumerate() {
            let mut row = Vec::with_capacity(s_grid.len());
            for (j, &s) in s_grid.iter().enumerate() {
                let sub = par::child_seed(seed, (i * s_grid.len() + j) as u64);
                let (est, _) = surface_mc(sp, ((t - half_width).max(0.0), t + half_width), s, n_samples, sub)?;
                row.push(est / kappa);
            }
            values.push(row);
        }
        Ok(KernelTable {
            sp: *sp,
            t_grid: t_grid.to_vec(),
            s_grid: s_grid.to_vec(),
            values,
            method: KernelMethod::MonteCarlo,
        })
    }
}

/// `ψ(t, s)` at the default tolerance.
pub fn psi(sp: &SpaceParams, t: f64, s: f64) -> f64 {
    psi_with_tol(sp, t, s, DEFAULT_REL_TOL)
}

/// `ψ(t, s)`; zero for `t < |s|`, even in `s`.
///
/// At `t = |s|` the value is the one-sided limit: `0` when
/// `m1 + m2 > 2`, finite when `m1 + m2 = 2` and `+∞` for `(1, 0)`.
pub fn psi_with_tol(sp: &SpaceParams, t: f64, s: f64, rel_tol: f64) -> f64 {
    let s = s.abs();
    if !(t >= s) {
        return 0.0;
    }
    let d = math::cosh_diff(t, s);
    let sh = math::sinh(t);
    let (m1, m2) = (sp.m1(), sp.m2());
    if m2 == 0 {
        return match m1 {
            1 => {
                if d > 0.0 {
                    sh / math::sqrt(d)
                } else {
                    f64::INFINITY
                }
            }
            2 => sh,
            _ => sh * math::powf(d, 0.5 * f64::from(m1) - 1.0),
        };
    }
    let c_big = math::cosh(t);
    if !(d > 0.0) {
        return if m1 + m2 == 2 {
            // (1,1): J → π / √(2C)
            core::f64::consts::PI * sh * math::sqrt(0.5 * c_big)
        } else {
            0.0
        };
    }
    sh * math::powi(c_big, m2 as i32) * u_integral(m1, m2, c_big, d, rel_tol)
}

/// `J = ∫_L^1 (uC − c)^α (1 − u²)^β du` for `m2 ≥ 1`, `D = C − c > 0`.
///
/// Split at the midpoint of `[L, 1]`; `u = L + x²` on the lower half and
/// `u = 1 − y²` on the upper half leave smooth integrands on `[0, √h]`,
/// `h = D/(2C)`.
fn u_integral(m1: u32, m2: u32, c_big: f64, d: f64, rel_tol: f64) -> f64 {
    let alpha = 0.5 * f64::from(m1) - 1.0;
    let beta = 0.5 * f64::from(m2) - 1.0;
    let l = (c_big - d) / c_big;
    let d_over_c = d / c_big;
    let h = 0.5 * d_over_c;
    let root_h = math::sqrt(h);
    let c_alpha = math::powf(c_big, alpha);
    let pow = |x: f64, e: f64| if e == 0.0 { 1.0 } else { math::powf(x, e) };
    let lower = |x: f64| {
        let x2 = x * x;
        2.0 * c_alpha * math::powi(x, m1 as i32 - 1) * pow((d_over_c - x2) * (1.0 + l + x2), beta)
    };
    let upper = |y: f64| {
        let y2 = y * y;
        2.0 * pow(d - y2 * c_big, alpha) * pow(2.0 - y2, beta) * math::powi(y, m2 as i32 - 1)
    };
    let tol = Tolerance {
        abs: 0.0,
        rel: rel_tol,
        max_intervals: 200,
    };
    quad::integrate(lower, 0.0, root_h, tol).value + quad::integrate(upper, 0.0, root_h, tol).value
}

/// The comparator `sinh t (cosh t)^{m2/2} (cosh t − cosh s)^{(m1+m2−2)/2}`.
///
/// At `t = |s|` the exponent decides: positive gives `0`, zero gives
/// `sinh t (cosh t)^{m2/2}`, negative gives `+∞` except at `t = s = 0`
/// where `sinh t / √(cosh t − 1) → √2`.
pub fn psi_comparator(sp: &SpaceParams, t: f64, s: f64) -> Result<f64> {
    let s = s.abs();
    if !(t >= s) {
        return Err(Error::Domain(alloc::format!(
            "comparator needs t >= |s| (t = {t}, s = {s})"
        )));
    }
    let e = 0.5 * f64::from(sp.m1() + sp.m2()) - 1.0;
    let d = math::cosh_diff(t, s);
    let sh = math::sinh(t);
    let front = sh * math::powf(math::cosh(t), 0.5 * f64::from(sp.m2()));
    if d > 0.0 {
        return Ok(front * math::powf(d, e));
    }
    Ok(if e > 0.0 {
        0.0
    } else if e == 0.0 {
        front
    } else if t == 0.0 {
        core::f64::consts::SQRT_2
    } else {
        f64::INFINITY
    })
}

/// Extremes of `ψ / comparator` over a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioRange {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl RatioRange {
    /// The smallest `C` with `[min, max] ⊂ [1/C, C]`.
    pub fn two_sided_constant(&self) -> f64 {
        self.max.max(1.0 / self.min)
    }
}

/// `ψ / comparator` over `t ∈ [|s| + band, t_max]`, `s ∈ [−s_max, s_max]`,
/// both with spacing `step`.
pub fn comparator_ratio_range(
    sp: &SpaceParams,
    t_max: f64,
    s_max: f64,
    step: f64,
    band: f64,
    rel_tol: f64,
) -> RatioRange {
    let ns = math::floor(2.0 * s_max / step + 0.5) as usize;
    let rows = par::map_indexed(ns + 1, |j| {
        let s = -s_max + step * j as f64;
        let t0 = s.abs() + band;
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        let mut n = 0usize;
        let mut i = 0usize;
        loop {
            let t = t0 + step * i as f64;
            if t > t_max + 1e-12 {
                break;
            }
            let r = psi_with_tol(sp, t, s, rel_tol) / psi_comparator(sp, t, s).unwrap_or(f64::NAN);
            lo = lo.min(r);
            hi = hi.max(r);
            n += 1;
            i += 1;
        }
        (lo, hi, n)
    });
    rows.iter().fold(
        RatioRange {
            min: f64::INFINITY,
            max: 0.0,
            points: 0,
        },
        |acc, r| RatioRange {
            min: acc.min.min(r.0),
            max: acc.max.max(r.1),
            points: acc.points + r.2,
        },
    )
}

/// The constant `κ` with `κ·ψ` equal to the geometric slice density:
/// `|S^{m1−1}|/2` for `m2 = 0` and `|S^{m1−1}|·|S^{m2−1}|/2` otherwise.
pub fn kappa_analytic(sp: &SpaceParams) -> f64 {
    let a = math::unit_sphere_area(sp.m1());
    if sp.m2() == 0 {
        0.5 * a
    } else {
        0.5 * a * math::unit_sphere_area(sp.m2())
    }
}

const MC_BATCH: u64 = 1 << 16;

/// Monte Carlo estimate of `e^{ρs}·vol{(v, w) : a ≤ t(v, w, s) < b} / (b − a)`,
/// the bin average of `κ·ψ(·, s)`, with its standard error.
///
/// Points are drawn uniformly from the product of the two balls that enclose
/// `{t < b}`: `|v|² ≤ e^{−s}(cosh b − cosh s)` and
/// `|w|² ≤ e^{−2s}(cosh²b − cosh²s)`.
pub fn surface_mc(sp: &SpaceParams, t_bin: (f64, f64), s: f64, n_samples: u64, seed: u64) -> Result<(f64, f64)> {
    let (a, b) = t_bin;
    if !(b > a) {
        return Err(Error::arg("t_bin", alloc::format!("empty bin [{a}, {b})")));
    }
    if n_samples < 1000 {
        return Err(Error::arg("n_samples", "need at least 1000 samples"));
    }
    if b <= s.abs() {
        return Ok((0.0, 0.0));
    }
    let (m1, m2) = (sp.m1(), sp.m2());
    let cs = math::cosh(s);
    let cb = math::cosh(b);
    let rv2 = math::exp(-s) * math::cosh_diff(b, s);
    let rw2 = if m2 > 0 {
        math::exp(-2.0 * s) * math::cosh_diff(b, s) * (cb + cs)
    } else {
        0.0
    };
    let vol = math::unit_ball_volume(m1)
        * math::powf(rv2, 0.5 * f64::from(m1))
        * math::unit_ball_volume(m2)
        * math::powf(rw2, 0.5 * f64::from(m2));
    let ev = 2.0 / f64::from(m1);
    let ew = if m2 > 0 { 2.0 / f64::from(m2) } else { 0.0 };
    let sizes = par::batches(n_samples, MC_BATCH);
    let parts = par::map_indexed(sizes.len(), |k| {
        let mut rng = par::stream_rng(seed, k as u64);
        let mut acc = Accumulator::default();
        for _ in 0..sizes[k] {
            let v2 = rv2 * math::powf(rng.random::<f64>(), ev);
            let w2 = if m2 > 0 {
                rw2 * math::powf(rng.random::<f64>(), ew)
            } else {
                0.0
            };
            let t = geometry::cartan_radius_of(v2, w2, s);
            acc.push(if t >= a && t < b { 1.0 } else { 0.0 });
        }
        acc
    });
    let mut acc = Accumulator::default();
    for p in &parts {
        acc.merge(p);
    }
    let scale = math::exp(sp.rho() * s) * vol / (b - a);
    Ok((scale * acc.mean(), scale * acc.stderr()))
}

/// One bin of a [`fit_kappa`] run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaBin {
    pub s: f64,
    pub t_lo: f64,
    pub t_hi: f64,
    pub estimate: f64,
    pub stderr: f64,
    /// Bin average of ψ by quadrature.
    pub psi_mean: f64,
}

impl KappaBin {
    pub fn ratio(&self) -> f64 {
        self.estimate / self.psi_mean
    }

    pub fn ratio_stderr(&self) -> f64 {
        self.stderr / self.psi_mean
    }
}

/// Inverse-variance fit of one constant `κ` to Monte Carlo bins.
#[derive(Debug, Clone, PartialEq)]
pub struct KappaFit {
    pub kappa: f64,
    pub kappa_stderr: f64,
    pub bins: Vec<KappaBin>,
}

impl KappaFit {
    /// Largest `|estimate − κ·ψ̄| / stderr` over the bins.
    pub fn max_z(&self) -> f64 {
        self.bins
            .iter()
            .map(|b| (b.estimate - self.kappa * b.psi_mean).abs() / b.stderr)
            .fold(0.0, f64::max)
    }

    /// Largest relative deviation of a per-bin ratio from `κ`.
    pub fn max_rel_dev(&self) -> f64 {
        self.bins
            .iter()
            .map(|b| (b.ratio() / self.kappa - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Runs [`surface_mc`] on every `(s, bin)` pair and fits `κ`.
pub fn fit_kappa(
    sp: &SpaceParams,
    s_values: &[f64],
    bins: &[(f64, f64)],
    n_samples: u64,
    seed: u64,
) -> Result<KappaFit> {
    let mut out = Vec::with_capacity(s_values.len() * bins.len());
    for (i, &s) in s_values.iter().enumerate() {
        for (j, &(lo, hi)) in bins.iter().enumerate() {
            let sub = par::child_seed(seed, (i * bins.len() + j) as u64);
            let (estimate, stderr) = surface_mc(sp, (lo, hi), s, n_samples, sub)?;
            let psi_mean = abel_transform(sp, &RadialFunction::indicator(lo, hi)?, s) / (hi - lo);
            out.push(KappaBin {
                s,
                t_lo: lo,
                t_hi: hi,
                estimate,
                stderr,
                psi_mean,
            });
        }
    }
    let (mut num, mut den) = (0.0, 0.0);
    for b in &out {
        if b.stderr > 0.0 {
            let w = 1.0 / (b.ratio_stderr() * b.ratio_stderr());
            num += w * b.ratio();
            den += w;
        }
    }
    if den == 0.0 {
        return Err(Error::Domain("no bin carried Monte Carlo hits".into()));
    }
    Ok(KappaFit {
        kappa: num / den,
        kappa_stderr: math::sqrt(1.0 / den),
        bins: out,
    })
}

/// `∫_{|s|}^∞ F(t) ψ(t, s) dt` at the default tolerance.
pub fn abel_transform(sp: &SpaceParams, f: &RadialFunction, s: f64) -> f64 {
    abel_transform_with_tol(sp, f, s, DEFAULT_REL_TOL)
}

/// `∫_{|s|}^∞ F(t) ψ(t, s) dt`.
///
/// For `m2 = 0` each step integrates in closed form. For `m2 ≥ 1` the
/// substitution `y = cosh t` and a swap of the order of integration turn
/// `∫_a^b ψ dt` into a single integral over `x ∈ [cosh s, cosh b]`, which
/// never evaluates ψ itself.
pub fn abel_transform_with_tol(sp: &SpaceParams, f: &RadialFunction, s: f64, rel_tol: f64) -> f64 {
    let s = s.abs();
    f.steps()
        .filter(|&(_, b, v)| v > 0.0 && b > s)
        .map(|(a, b, v)| v * psi_step_integral(sp, a.max(s), b, s, rel_tol))
        .sum()
}

/// `∫_a^b ψ(t, s) dt` for `|s| ≤ a < b`, without evaluating ψ.
fn psi_step_integral(sp: &SpaceParams, a: f64, b: f64, s: f64, rel_tol: f64) -> f64 {
    let m1 = sp.m1();
    let m2 = sp.m2();
    if m2 == 0 {
        let half = 0.5 * f64::from(m1);
        let da = math::cosh_diff(a, s);
        let db = math::cosh_diff(b, s);
        return (math::powf(db, half) - math::powf(da, half)) / half;
    }
    // ∫_c^{yb} (x − c)^α [(yb² − x²)^{m2/2} − (max(x, ya)² − x²)^{m2/2}] dx / m2
    let alpha = 0.5 * f64::from(m1) - 1.0;
    let half2 = 0.5 * f64::from(m2);
    let c = math::cosh(s);
    let ya = math::cosh(a);
    let yb = math::cosh(b);
    // offsets from c, kept separately to avoid cancellation near t = |s|
    let oa = math::cosh_diff(a, s);
    let ob = math::cosh_diff(b, s);
    let tol = Tolerance {
        abs: 0.0,
        rel: 0.1 * rel_tol,
        max_intervals: 400,
    };
    let pw = |x: f64, e: f64| if e == 0.0 { 1.0 } else { math::powf(x, e) };
    // x = c + p, with (yb² − x²) = (ob − p)(yb + x)
    let outer = |p: f64, lower_piece: bool| {
        let x = c + p;
        let big = pw(((ob - p) * (yb + x)).max(0.0), half2);
        let small = if lower_piece {
            pw(((oa - p) * (ya + x)).max(0.0), half2)
        } else {
            0.0
        };
        pw(p.max(0.0), alpha) * (big - small) / f64::from(m2)
    };
    // x − p₀ = (p₁ − p₀)(1 − cos θ)/2 smooths half-integer powers at both ends
    let piece = |p0: f64, p1: f64, lower_piece: bool| {
        if p1 <= p0 {
            return 0.0;
        }
        let w = p1 - p0;
        let g = |theta: f64| {
            let p = p0 + 0.5 * w * (1.0 - libm::cos(theta));
            outer(p, lower_piece) * 0.5 * w * libm::sin(theta)
        };
        quad::integrate(g, 0.0, core::f64::consts::PI, tol).value
    };
    piece(0.0, oa, true) + piece(oa, ob, false)
}

/// `(sup_s Abel F, ‖F‖)` for an indicator `F`: the supremum runs over
/// `n_s + 1` equally spaced `s ∈ [0, support_max]` and the norm is
/// `(∫ F (sinh t)^{m1} (sinh 2t)^{m2} dt)^{1/2}`.
pub fn abel_l21_bound(sp: &SpaceParams, f: &RadialFunction, n_s: usize) -> Result<(f64, f64)> {
    if !f.is_indicator() {
        return Err(Error::arg("F", "must be {0,1}-valued"));
    }
    let top = f.support_max();
    if top == 0.0 {
        return Ok((0.0, 0.0));
    }
    let n_s = n_s.max(1);
    let lhs = (0..=n_s)
        .map(|j| abel_transform(sp, f, top * j as f64 / n_s as f64))
        .fold(0.0, f64::max);
    Ok((lhs, math::sqrt(f.mass(sp))))
}

/// `φ(u) = u^{m1+m2}` for `u ≤ 1` and `e^{ρu}` for `u > 1`.
pub fn phi_weight(sp: &SpaceParams, u: f64) -> f64 {
    if u <= 1.0 {
        math::powi(u, (sp.m1() + sp.m2()) as i32)
    } else {
        math::exp(sp.rho() * u)
    }
}

/// Result of [`phi_sup_identity_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiSupCheck {
    pub u: f64,
    /// `sup_r e^{−ρr} ∫_{−u}^{r} ψ(u, s) e^{ρs} ds` over the r-grid.
    pub lhs: f64,
    pub phi: f64,
    pub ratio: f64,
}

/// Evaluates `sup_{r ∈ [−u, u]} e^{−ρr} ∫_{s ≤ r, |s| ≤ u} ψ(u, s) e^{ρs} ds`
/// on `n_r + 1` equally spaced `r` and compares it with `φ(u)`.
pub fn phi_sup_identity_check(sp: &SpaceParams, u: f64, n_r: usize) -> Result<PhiSupCheck> {
    if !(u > 0.0) {
        return Err(Error::arg("u", "must be positive"));
    }
    let n_r = n_r.max(2);
    let rho = sp.rho();
    // s = u sin θ absorbs the endpoint behaviour of ψ(u, ·) at s = ±u
    let integrand = |theta: f64| {
        let s = u * libm::sin(theta);
        psi(sp, u, s) * math::exp(rho * s) * u * libm::cos(theta)
    };
    let tol = Tolerance {
        abs: 0.0,
        rel: 1e-10,
        max_intervals: 200,
    };
    let theta_of = |r: f64| libm::asin((r / u).clamp(-1.0, 1.0));
    let mut cumulative = 0.0;
    let mut best = 0.0f64;
    let mut prev = -core::f64::consts::FRAC_PI_2;
    for i in 1..=n_r {
        let r = -u + 2.0 * u * i as f64 / n_r as f64;
        let th = theta_of(r);
        cumulative += quad::integrate(integrand, prev, th, tol).value;
        prev = th;
        best = best.max(math::exp(-rho * r) * cumulative);
    }
    let phi = phi_weight(sp, u);
    Ok(PhiSupCheck {
        u,
        lhs: best,
        phi,
        ratio: best / phi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn sp(m1: u32, m2: u32) -> SpaceParams {
        SpaceParams::new(m1, m2).unwrap()
    }

    /// ψ for m2 ≥ 1 straight from the u-integral with a plain tanh-sinh rule,
    /// sharing no code with the split-substitution evaluation.
    fn psi_tanh_sinh(m1: u32, m2: u32, t: f64, s: f64) -> f64 {
        let (c_big, c) = (t.cosh(), s.cosh());
        let (l, alpha, beta) = (c / c_big, 0.5 * f64::from(m1) - 1.0, 0.5 * f64::from(m2) - 1.0);
        let half = 0.5 * (1.0 - l);
        let mid = 0.5 * (1.0 + l);
        let h = 1.0 / 64.0;
        let mut sum = 0.0;
        for k in -400..=400 {
            let x = f64::from(k) * h;
            let q = std::f64::consts::FRAC_PI_2 * x.sinh();
            let z = q.tanh();
            let w = std::f64::consts::FRAC_PI_2 * x.cosh() / (q.cosh() * q.cosh());
            // distances to both ends without cancellation: 1 ± tanh q = e^{±q}/cosh q
            let (to_lo, to_hi) = (half * q.exp() / q.cosh(), half * (-q).exp() / q.cosh());
            let u = mid + half * z;
            if to_lo <= 0.0 || to_hi <= 0.0 {
                continue;
            }
            let f = (to_lo * c_big).powf(alpha) * (to_hi * (1.0 + u)).powf(beta);
            sum += w * f;
        }
        t.sinh() * c_big.powi(m2 as i32) * sum * h * half
    }

    #[test]
    fn vanishes_below_the_orbit_and_is_even() {
        for (m1, m2) in [(1, 0), (2, 0), (3, 0), (2, 1), (4, 3)] {
            let s = sp(m1, m2);
            assert_eq!(psi(&s, 0.5, 1.0), 0.0);
            assert_eq!(psi(&s, 0.5, -1.0), 0.0);
            for &(t, x) in &[(2.0, 0.7), (1.3, 1.2), (6.0, 0.0)] {
                assert_eq!(psi(&s, t, x), psi(&s, t, -x));
            }
        }
    }

    #[test]
    fn closed_form_examples() {
        let s20 = sp(2, 0);
        for &s in &[0.0, 1.0, -2.0] {
            assert!((psi(&s20, 2.0, s) - 2f64.sinh()).abs() < 1e-15);
        }
        let s30 = sp(3, 0);
        let expected = 2f64.sinh() * (2f64.cosh() - 0.5f64.cosh()).sqrt();
        assert!((psi(&s30, 2.0, 0.5) - expected).abs() < 1e-13);
    }

    #[test]
    fn quadrature_matches_independent_tanh_sinh() {
        for (m1, m2) in [(2, 1), (1, 1), (4, 3), (1, 2), (3, 2)] {
            let s = sp(m1, m2);
            for &(t, x) in &[(2.0, 0.0), (0.3, 0.1), (4.0, 3.9), (6.5, -2.0), (1.0, 0.999)] {
                let a = psi(&s, t, x);
                let b = psi_tanh_sinh(m1, m2, t, x);
                assert!((a / b - 1.0).abs() < 1e-7, "({m1},{m2}) t={t} s={x}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn m2_one_m1_two_has_a_closed_form() {
        // α = 0, β = −1/2: J = arccos(L), so ψ = sinh t cosh t arccos(cosh s / cosh t)
        let s = sp(2, 1);
        for &(t, x) in &[(2.0, 0.0), (0.5, 0.2), (5.0, 4.0)] {
            let exact = f64::sinh(t) * f64::cosh(t) * (f64::cosh(x) / f64::cosh(t)).acos();
            assert!((psi(&s, t, x) / exact - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn comparator_examples() {
        let s20 = sp(2, 0);
        assert!((psi_comparator(&s20, 2.0, 0.0).unwrap() - 2f64.sinh()).abs() < 1e-15);
        assert_eq!(psi_comparator(&sp(3, 0), 1.0, 1.0).unwrap(), 0.0);
        assert_eq!(psi_comparator(&sp(1, 0), 1.0, 1.0).unwrap(), f64::INFINITY);
        assert_eq!(psi_comparator(&sp(1, 0), 0.0, 0.0).unwrap(), std::f64::consts::SQRT_2);
        assert!(psi_comparator(&s20, 0.5, 1.0).is_err());
        // m2 = 0: the comparator is ψ itself
        for m1 in 1..=4 {
            let s = sp(m1, 0);
            let r = psi(&s, 3.2, 1.1) / psi_comparator(&s, 3.2, 1.1).unwrap();
            assert!((r - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn abel_transform_examples() {
        let s20 = sp(2, 0);
        let f = RadialFunction::ball(3.0).unwrap();
        assert!((abel_transform(&s20, &f, 1.2) - (3f64.cosh() - 1.2f64.cosh())).abs() < 1e-12);
        assert_eq!(abel_transform(&s20, &f, 3.5), 0.0);
        let one = RadialFunction::ball(1.0).unwrap();
        assert!((abel_transform(&s20, &one, 0.0) - 0.543_080_634_815_243_7).abs() < 1e-15);
    }

    #[test]
    fn swapped_order_abel_matches_integrated_psi() {
        for (m1, m2) in [(2, 1), (1, 1), (4, 3), (1, 2)] {
            let s = sp(m1, m2);
            for &(a, b, x) in &[
                (0.0f64, 1.0f64, 0.0f64),
                (0.5, 2.5, 0.4),
                (3.0, 3.2, 1.0),
                (0.0, 4.0, -3.9),
            ] {
                let lo = a.max(f64::abs(x));
                let w = b - lo;
                // cosine substitution for the ψ endpoint behaviour at t = |s|
                let g = |th: f64| psi(&s, lo + 0.5 * w * (1.0 - th.cos()), x) * 0.5 * w * th.sin();
                let direct = quad::integrate(g, 0.0, std::f64::consts::PI, Tolerance::relative(1e-11)).value;
                let abel = abel_transform(&s, &RadialFunction::indicator(a, b).unwrap(), x);
                assert!(
                    (abel / direct - 1.0).abs() < 1e-8,
                    "({m1},{m2}) [{a},{b}) s={x}: {abel} vs {direct}"
                );
            }
        }
    }

    #[test]
    fn surface_mc_examples_and_scaling() {
        let s20 = sp(2, 0);
        assert_eq!(surface_mc(&s20, (0.2, 0.8), 1.0, 10_000, 1).unwrap(), (0.0, 0.0));
        assert!(surface_mc(&s20, (1.0, 1.0), 0.0, 10_000, 1).is_err());
        assert!(surface_mc(&s20, (1.0, 2.0), 0.0, 999, 1).is_err());
        let (e1, se1) = surface_mc(&s20, (1.9, 2.1), 0.0, 200_000, 3).unwrap();
        let (_, se2) = surface_mc(&s20, (1.9, 2.1), 0.0, 400_000, 4).unwrap();
        let ratio = se1 / se2;
        assert!((ratio - std::f64::consts::SQRT_2).abs() < 0.1, "{ratio}");
        let psi_bar = abel_transform(&s20, &RadialFunction::indicator(1.9, 2.1).unwrap(), 0.0) / 0.2;
        assert!((e1 - std::f64::consts::PI * psi_bar).abs() < 4.0 * se1);
        // same seed, same answer
        assert_eq!(surface_mc(&s20, (1.9, 2.1), 0.0, 200_000, 3).unwrap().0, e1);
    }

    #[test]
    fn kappa_fit_recovers_sphere_constants() {
        for (m1, m2) in [(1, 0), (2, 1)] {
            let s = sp(m1, m2);
            let fit = fit_kappa(&s, &[0.0, 1.0], &[(1.6, 2.0), (2.4, 2.8)], 200_000, 11).unwrap();
            let k = kappa_analytic(&s);
            assert!(
                (fit.kappa - k).abs() < 4.0 * fit.kappa_stderr,
                "({m1},{m2}): {} vs {k}",
                fit.kappa
            );
        }
    }

    #[test]
    fn abel_l21_bound_examples() {
        let s20 = sp(2, 0);
        assert_eq!(abel_l21_bound(&s20, &RadialFunction::zero(), 10).unwrap(), (0.0, 0.0));
        let (lhs, rhs) = abel_l21_bound(&s20, &RadialFunction::ball(1.0).unwrap(), 50).unwrap();
        assert!((lhs - (1f64.cosh() - 1.0)).abs() < 1e-14);
        assert!((rhs - ((1f64.sinh() * 1f64.cosh() - 1.0) / 2.0).sqrt()).abs() < 1e-13);
        assert!(abel_l21_bound(&s20, &RadialFunction::new(vec![0.0, 1.0], vec![2.0]).unwrap(), 5).is_err());
    }

    #[test]
    fn phi_examples() {
        assert!((phi_weight(&sp(2, 1), 0.5) - 0.125).abs() < 1e-16);
        assert!((phi_weight(&sp(2, 0), 2.0) - 2f64.exp()).abs() < 1e-14);
        let s = sp(3, 1);
        assert_eq!(phi_weight(&s, 1.0), 1.0);
        assert!((phi_weight(&s, 1.0 + 1e-12) - s.rho().exp()).abs() < 1e-10);
    }

    #[test]
    fn phi_sup_identity_is_bounded_and_refinement_stable() {
        let s20 = sp(2, 0);
        for &u in &[0.1, 0.5, 1.0, 2.0, 4.0] {
            let a = phi_sup_identity_check(&s20, u, 200).unwrap();
            let b = phi_sup_identity_check(&s20, u, 400).unwrap();
            assert!(a.ratio > 0.1 && a.ratio < 10.0, "{u}: {}", a.ratio);
            assert!((a.ratio / b.ratio - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn radial_function_construction() {
        let f = RadialFunction::union_of(&[(3.0, 4.0), (0.5, 1.0), (0.8, 2.0)]).unwrap();
        assert_eq!(f.edges(), &[0.5, 2.0, 3.0, 4.0]);
        assert_eq!(f.values(), &[1.0, 0.0, 1.0]);
        assert_eq!(f.eval(0.4), 0.0);
        assert_eq!(f.eval(0.5), 1.0);
        assert_eq!(f.eval(2.5), 0.0);
        assert_eq!(f.eval(4.0), 0.0);
        assert_eq!(f.support_max(), 4.0);
        assert!(RadialFunction::new(vec![1.0, 0.5], vec![1.0]).is_err());
        assert!(RadialFunction::new(vec![0.0, 1.0], vec![-1.0]).is_err());
    }

    fn step_function() -> impl Strategy<Value = RadialFunction> {
        prop::collection::vec((0.05..1.0f64, 0.0..3.0f64), 1..6).prop_map(|steps| {
            let mut edges = vec![0.0];
            let mut values = vec![];
            for (w, v) in steps {
                edges.push(edges.last().unwrap() + w);
                values.push(v);
            }
            RadialFunction::new(edges, values).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn abel_is_linear_and_monotone(f in step_function(), g in step_function(), s in -3.0..3.0f64, m in 0usize..3) {
            let space = [sp(2, 0), sp(1, 0), sp(2, 1)][m];
            let af = abel_transform(&space, &f, s);
            let ag = abel_transform(&space, &g, s);
            let sum = abel_transform(&space, &f.add(&g), s);
            prop_assert!((sum - af - ag).abs() <= 1e-8 * sum.max(1e-300));
            prop_assert!(sum >= af.max(ag) * (1.0 - 1e-9));
            let doubled = abel_transform(&space, &f.scaled(2.0).unwrap(), s);
            prop_assert!((doubled - 2.0 * af).abs() <= 1e-12 * doubled.max(1e-300));
        }

        #[test]
        fn psi_is_nonnegative(t in 0.0..10.0f64, s in -5.0..5.0f64, m in 0usize..5) {
            let space = [sp(1, 0), sp(2, 0), sp(3, 0), sp(2, 1), sp(4, 3)][m];
            let v = psi(&space, t, s);
            prop_assert!(v >= 0.0);
            if t < s.abs() { prop_assert_eq!(v, 0.0); }
        }
    }
}
