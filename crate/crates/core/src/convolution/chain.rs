//! The rearrangement chain bounding the trilinear form, on a finite
//! surrogate.
//!
//! `K` is replaced by `n_k` atoms of weight `1/n_k`, the `A`-variable by the
//! grid `t_i = −T + i h` (`h = 2T/(n_t − 1)`, rectangle weights `h`), and the
//! Cartan variable `u` by the cells `[l h, (l + 1) h)`. With this alignment
//! `u ≥ |s|` holds on a whole cell or on none of it, so the kernel enters
//! only through the cell integrals `Ψ(l, d) = ∫_{cell l} ψ(u, d h) du`.
//!
//! The chain is
//!
//! * step 1: `∑ min[F₁(k, t), H₁(k', t')] G₁(k, k', u, t' − t) ψ(u, t' − t) e^{ρ(t + t')}`;
//! * step 2: `∑ G₁ ψ · min(F(k)² e^{ρs}, H(k')² e^{−ρs})` with
//!   `F(k)² = ∑_t h F₁(k, t) e^{2ρt}`, split at `e^{ρs} = H/F`;
//! * step 3: `∑_l E_l ∫∫ F*(x) H*(y) G**(x, y, l)`, `E_l = ∫_{cell l} e^{ρu} du`;
//! * step 4: `2C ‖f‖ ‖g‖ ‖h‖` at the optimal split level.
//!
//! `G₁(k, k', ·, s)` is a convex combination of translates
//! `g̃(k + σ, k' + τ, ·)` of the profile `g̃` over `ℤ/n_k`, which is the
//! property of the `N̄`-averages that step 3 relies on.

use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::Rng;

use crate::geometry::SpaceParams;
use crate::kernel::{self, RadialFunction};
use crate::math;
use crate::par;
use crate::quad::{self, Tolerance};
use crate::rearrange::{self, DoubleProfile, StepProfile, WeightedMatrix, WeightedSamples};
use crate::{Error, Result};

/// Grid sizes of a surrogate model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    pub n_k: usize,
    pub n_t: usize,
    pub t_max: f64,
    pub n_u: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            n_k: 8,
            n_t: 64,
            t_max: 3.0,
            n_u: 64,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_k == 0 {
            return Err(Error::arg("n_k", "must be positive"));
        }
        if self.n_t < 2 || self.n_u == 0 {
            return Err(Error::arg("n_t/n_u", "need n_t >= 2 and n_u >= 1"));
        }
        if !(self.t_max > 0.0) || !self.t_max.is_finite() {
            return Err(Error::arg("t_max", "must be positive and finite"));
        }
        Ok(())
    }

    /// Grid step `h`.
    pub fn step(&self) -> f64 {
        2.0 * self.t_max / (self.n_t - 1) as f64
    }

    pub fn t(&self, i: usize) -> f64 {
        -self.t_max + i as f64 * self.step()
    }

    pub fn u_cell(&self, l: usize) -> (f64, f64) {
        let h = self.step();
        (l as f64 * h, (l + 1) as f64 * h)
    }

    /// Number of offsets `d = j − i` in `[−(n_t − 1), n_t − 1]`.
    fn n_offsets(&self) -> usize {
        2 * self.n_t - 1
    }

    /// The first cell lying entirely in `u ≥ 1`.
    pub fn first_cell_above_one(&self) -> usize {
        (0..self.n_u).find(|&l| self.u_cell(l).0 >= 1.0).unwrap_or(self.n_u)
    }
}

/// `Ψ(l, d) = ∫_{lh}^{(l+1)h} ψ(u, d h) du` for `l ≥ |d|`, by nested
/// quadrature of the kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiCells {
    sp: SpaceParams,
    h: f64,
    n_u: usize,
    n_d: usize,
    data: Vec<f64>,
}

impl PsiCells {
    pub fn build(sp: &SpaceParams, cfg: &ModelConfig, rel_tol: f64) -> Result<Arc<Self>> {
        cfg.validate()?;
        let h = cfg.step();
        let (n_u, n_d) = (cfg.n_u, cfg.n_t);
        let rows = par::map_indexed(n_d, |d| {
            (0..n_u)
                .map(|l| {
                    if l < d {
                        0.0
                    } else {
                        psi_cell_integral(sp, l as f64 * h, (l + 1) as f64 * h, d as f64 * h, rel_tol)
                    }
                })
                .collect::<Vec<_>>()
        });
        Ok(Arc::new(PsiCells {
            sp: *sp,
            h,
            n_u,
            n_d,
            data: rows.concat(),
        }))
    }

    pub fn space(&self) -> &SpaceParams {
        &self.sp
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    /// `Ψ(l, d)`; zero for `l < |d|` and outside the table.
    pub fn get(&self, l: usize, d: isize) -> f64 {
        let d = d.unsigned_abs();
        if d >= self.n_d || l >= self.n_u {
            return 0.0;
        }
        self.data[d * self.n_u + l]
    }

    fn matches(&self, cfg: &ModelConfig) -> Result<()> {
        if self.n_u < cfg.n_u || self.n_d < cfg.n_t || (self.h - cfg.step()).abs() > 1e-15 * self.h {
            return Err(Error::arg("psi", "cell table does not match the model grid"));
        }
        Ok(())
    }
}

/// `∫_a^b ψ(u, s) du` for `|s| ≤ a`, through pointwise evaluations of ψ.
fn psi_cell_integral(sp: &SpaceParams, a: f64, b: f64, s: f64, rel_tol: f64) -> f64 {
    let w = b - a;
    // u − a = w(1 − cos θ)/2 absorbs the (u − |s|)^{−1/2} edge when a = |s|
    let f = |theta: f64| {
        let u = a + 0.5 * w * (1.0 - libm::cos(theta));
        kernel::psi_with_tol(sp, u, s, 0.1 * rel_tol) * 0.5 * w * libm::sin(theta)
    };
    let tol = Tolerance {
        abs: 0.0,
        rel: rel_tol,
        max_intervals: 200,
    };
    quad::integrate(f, 0.0, core::f64::consts::PI, tol).value
}

/// `∫_{cell} e^{ρu} du`.
fn exp_cell(rho: f64, a: f64, b: f64) -> f64 {
    math::exp(rho * a) * math::expm1(rho * (b - a)) / rho
}

/// `E_l = ∫_{cell l} e^{ρu} du` for every cell.
pub fn exp_cell_weights(sp: &SpaceParams, cfg: &ModelConfig) -> Vec<f64> {
    (0..cfg.n_u)
        .map(|l| {
            let (a, b) = cfg.u_cell(l);
            exp_cell(sp.rho(), a, b)
        })
        .collect()
}

/// `Φ_l = ∫_{cell l} φ(u) du`; equal to `E_l` on cells in `u ≥ 1`.
pub fn phi_cell_weights(sp: &SpaceParams, cfg: &ModelConfig) -> Vec<f64> {
    let n = (sp.m1() + sp.m2()) as i32;
    (0..cfg.n_u)
        .map(|l| {
            let (a, b) = cfg.u_cell(l);
            if a >= 1.0 {
                return exp_cell(sp.rho(), a, b);
            }
            let top = b.min(1.0);
            let poly = (math::powi(top, n + 1) - math::powi(a, n + 1)) / f64::from(n + 1);
            if b > 1.0 {
                poly + exp_cell(sp.rho(), 1.0, b)
            } else {
                poly
            }
        })
        .collect()
}

/// `∫_{cell} e^{2ρu} du`.
fn exp2_cell_weights(sp: &SpaceParams, cfg: &ModelConfig) -> Vec<f64> {
    (0..cfg.n_u)
        .map(|l| {
            let (a, b) = cfg.u_cell(l);
            exp_cell(2.0 * sp.rho(), a, b)
        })
        .collect()
}

/// A surrogate `(F₁, H₁, g̃, G₁)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteModel {
    cfg: ModelConfig,
    f1: Vec<f64>,
    h1: Vec<f64>,
    g_tilde: Vec<f64>,
    g1: Vec<f64>,
}

/// The two integrals of step 2: `e^{ρs} ≤ H/F` and `e^{ρs} > H/F`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Step2Terms {
    pub first: f64,
    pub second: f64,
}

impl Step2Terms {
    pub fn total(&self) -> f64 {
        self.first + self.second
    }
}

fn check_nonneg(name: &'static str, xs: &[f64], len: usize, unit: bool) -> Result<()> {
    if xs.len() != len {
        return Err(Error::DimensionMismatch {
            expected: len,
            got: xs.len(),
        });
    }
    let bad = |x: f64| !(x >= 0.0) || !x.is_finite() || (unit && x > 1.0);
    if xs.iter().any(|&x| bad(x)) {
        return Err(Error::arg(
            name,
            if unit {
                "values must lie in [0, 1]"
            } else {
                "values must be finite and nonnegative"
            },
        ));
    }
    Ok(())
}

impl DiscreteModel {
    /// `f1`, `h1` are `n_k × n_t` row-major; `g_tilde` is `n_k × n_k × n_u`;
    /// `g1` is `n_k × n_k × n_u × (2 n_t − 1)` with the offset `d` stored at
    /// `d + n_t − 1`.
    pub fn new(cfg: ModelConfig, f1: Vec<f64>, h1: Vec<f64>, g_tilde: Vec<f64>, g1: Vec<f64>) -> Result<Self> {
        cfg.validate()?;
        let (nk, nt, nu) = (cfg.n_k, cfg.n_t, cfg.n_u);
        check_nonneg("F1", &f1, nk * nt, false)?;
        check_nonneg("H1", &h1, nk * nt, false)?;
        check_nonneg("g_tilde", &g_tilde, nk * nk * nu, true)?;
        check_nonneg("G1", &g1, nk * nk * nu * cfg.n_offsets(), true)?;
        let m = DiscreteModel {
            cfg,
            f1,
            h1,
            g_tilde,
            g1,
        };
        for k in 0..nk {
            for k2 in 0..nk {
                for l in 0..nu {
                    for d in -(nt as isize - 1)..nt as isize {
                        if (l as isize) < d.abs() && m.g1(k, k2, l, d) != 0.0 {
                            return Err(Error::arg("G1", "must vanish for u < |s|"));
                        }
                    }
                }
            }
        }
        Ok(m)
    }

    /// Builds `G₁` as random two-term mixtures of translates of `g̃`, one
    /// mixture per `(u, s)` cell.
    pub fn from_mixture(cfg: ModelConfig, f1: Vec<f64>, h1: Vec<f64>, g_tilde: Vec<f64>, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let (nk, nt, nu, nd) = (cfg.n_k, cfg.n_t, cfg.n_u, cfg.n_offsets());
        check_nonneg("g_tilde", &g_tilde, nk * nk * nu, true)?;
        let mut rng = par::stream_rng(seed, 1);
        let mut g1 = alloc::vec![0.0; nk * nk * nu * nd];
        for l in 0..nu {
            for dd in 0..nd {
                let d = dd as isize - (nt as isize - 1);
                let (s1, t1, s2, t2) = (
                    rng.random_range(0..nk),
                    rng.random_range(0..nk),
                    rng.random_range(0..nk),
                    rng.random_range(0..nk),
                );
                let lam: f64 = rng.random();
                if (l as isize) < d.abs() {
                    continue;
                }
                for k in 0..nk {
                    for k2 in 0..nk {
                        let a = g_tilde[(((k + s1) % nk) * nk + (k2 + t1) % nk) * nu + l];
                        let b = g_tilde[(((k + s2) % nk) * nk + (k2 + t2) % nk) * nu + l];
                        g1[((k * nk + k2) * nu + l) * nd + dd] = (lam * a + (1.0 - lam) * b).min(1.0);
                    }
                }
            }
        }
        Self::new(cfg, f1, h1, g_tilde, g1)
    }

    /// `n_k = 1` with `G₁(u, s) = g(u)` for `u ≥ |s|`: the `K`-bi-invariant
    /// case.
    pub fn bi_invariant(cfg: ModelConfig, f1: Vec<f64>, h1: Vec<f64>, g_profile: Vec<f64>) -> Result<Self> {
        if cfg.n_k != 1 {
            return Err(Error::arg("n_k", "the bi-invariant model has one K-atom"));
        }
        cfg.validate()?;
        let (nt, nu, nd) = (cfg.n_t, cfg.n_u, cfg.n_offsets());
        check_nonneg("g", &g_profile, nu, true)?;
        let mut g1 = alloc::vec![0.0; nu * nd];
        for (l, &g) in g_profile.iter().enumerate() {
            for dd in 0..nd {
                if (dd as isize - (nt as isize - 1)).unsigned_abs() <= l {
                    g1[l * nd + dd] = g;
                }
            }
        }
        Self::new(cfg, f1, h1, g_profile, g1)
    }

    /// A random model with dyadic row scales `e^{ρm}`, `m ∈ [−8, 8]`, some
    /// zero rows, and an indicator `g̃` supported in `u ≥ 1`.
    pub fn random(sp: &SpaceParams, cfg: ModelConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = par::stream_rng(seed, 0);
        let f1 = random_rows(sp, &cfg, &mut rng);
        let h1 = random_rows(sp, &cfg, &mut rng);
        let g_tilde = random_profile(&cfg, &mut rng);
        Self::from_mixture(cfg, f1, h1, g_tilde, seed)
    }

    /// A random [`bi_invariant`](Self::bi_invariant) model; `cfg.n_k` is
    /// forced to 1 and `g` is an indicator over the whole `u`-grid.
    pub fn random_bi_invariant(sp: &SpaceParams, cfg: ModelConfig, seed: u64) -> Result<Self> {
        let cfg = ModelConfig { n_k: 1, ..cfg };
        cfg.validate()?;
        let mut rng = par::stream_rng(seed, 1);
        let f1 = random_rows(sp, &cfg, &mut rng);
        let h1 = random_rows(sp, &cfg, &mut rng);
        let g = (0..cfg.n_u)
            .map(|_| if rng.random::<f64>() < 0.5 { 1.0 } else { 0.0 })
            .collect();
        Self::bi_invariant(cfg, f1, h1, g)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn f1(&self, k: usize, i: usize) -> f64 {
        self.f1[k * self.cfg.n_t + i]
    }

    pub fn h1(&self, k: usize, i: usize) -> f64 {
        self.h1[k * self.cfg.n_t + i]
    }

    pub fn g_tilde(&self, k: usize, k2: usize, l: usize) -> f64 {
        self.g_tilde[(k * self.cfg.n_k + k2) * self.cfg.n_u + l]
    }

    pub fn g1(&self, k: usize, k2: usize, l: usize, d: isize) -> f64 {
        let nd = self.cfg.n_offsets();
        let dd = (d + self.cfg.n_t as isize - 1) as usize;
        self.g1[((k * self.cfg.n_k + k2) * self.cfg.n_u + l) * nd + dd]
    }

    /// Multiplies `G₁` and `g̃` by `c`, capping at 1.
    pub fn with_scaled_g(&self, c: f64) -> Self {
        let mut m = self.clone();
        for x in m.g1.iter_mut().chain(m.g_tilde.iter_mut()) {
            *x = (*x * c).min(1.0);
        }
        m
    }

    /// `F(k) = (∑_t h F₁(k, t) e^{2ρt})^{1/2}`.
    pub fn f_norms(&self, sp: &SpaceParams) -> Vec<f64> {
        self.row_norms(sp, &self.f1)
    }

    pub fn h_norms(&self, sp: &SpaceParams) -> Vec<f64> {
        self.row_norms(sp, &self.h1)
    }

    fn row_norms(&self, sp: &SpaceParams, rows: &[f64]) -> Vec<f64> {
        let (h, two_rho) = (self.cfg.step(), 2.0 * sp.rho());
        rows.chunks(self.cfg.n_t)
            .map(|r| {
                let s: f64 = r
                    .iter()
                    .enumerate()
                    .map(|(i, &x)| x * math::exp(two_rho * self.cfg.t(i)))
                    .sum();
                math::sqrt(h * s)
            })
            .collect()
    }

    /// `W(k, k', d) = ∑_l G₁(k, k', l, d) Ψ(l, d)`.
    fn w_table(&self, psi: &PsiCells) -> Vec<f64> {
        let (nk, nt, nu, nd) = (self.cfg.n_k, self.cfg.n_t, self.cfg.n_u, self.cfg.n_offsets());
        let mut w = alloc::vec![0.0; nk * nk * nd];
        for pair in 0..nk * nk {
            for dd in 0..nd {
                let d = dd as isize - (nt as isize - 1);
                let mut acc = 0.0;
                for l in d.unsigned_abs()..nu {
                    let g = self.g1[(pair * nu + l) * nd + dd];
                    if g > 0.0 {
                        acc += g * psi.get(l, d);
                    }
                }
                w[pair * nd + dd] = acc;
            }
        }
        w
    }

    fn step2_with(&self, sp: &SpaceParams, w: impl Fn(usize, isize) -> f64) -> Step2Terms {
        let (nk, nt) = (self.cfg.n_k, self.cfg.n_t);
        let h = self.cfg.step();
        let rho = sp.rho();
        let fk = self.f_norms(sp);
        let hk = self.h_norms(sp);
        let ww = 1.0 / (nk * nk) as f64;
        let mut out = Step2Terms::default();
        for (k, &f) in fk.iter().enumerate() {
            for (k2, &hh) in hk.iter().enumerate() {
                // the sets F = 0 and H = 0 contribute nothing
                if f == 0.0 || hh == 0.0 {
                    continue;
                }
                let threshold = math::ln(hh / f) / rho;
                for d in -(nt as isize - 1)..nt as isize {
                    let wv = w(k * nk + k2, d);
                    if wv == 0.0 {
                        continue;
                    }
                    let s = d as f64 * h;
                    if s <= threshold {
                        out.first += ww * h * f * f * math::exp(rho * s) * wv;
                    } else {
                        out.second += ww * h * hh * hh * math::exp(-rho * s) * wv;
                    }
                }
            }
        }
        out
    }

    /// Rearranged data for step 3: `F*`, `H*` from `F(k)`, `H(k')` and `G**`
    /// from `g̃`.
    pub fn rearranged(&self, sp: &SpaceParams) -> Result<RearrangedData> {
        let nk = self.cfg.n_k;
        let w = 1.0 / nk as f64;
        let fstar = rearrange::decreasing_rearrangement(&WeightedSamples::uniform(&self.f_norms(sp), w)?);
        let hstar = rearrange::decreasing_rearrangement(&WeightedSamples::uniform(&self.h_norms(sp), w)?);
        RearrangedData::new(self.cfg, fstar, hstar, g_double_profiles(&self.cfg, &self.g_tilde)?)
    }
}

fn g_double_profiles(cfg: &ModelConfig, g_tilde: &[f64]) -> Result<Vec<DoubleProfile>> {
    let (nk, nu) = (cfg.n_k, cfg.n_u);
    (0..nu)
        .map(|l| {
            let slice = (0..nk * nk).map(|p| g_tilde[p * nu + l]).collect();
            Ok(rearrange::double_rearrangement(&WeightedMatrix::uniform(nk, slice)?))
        })
        .collect()
}

fn random_rows<R: Rng>(sp: &SpaceParams, cfg: &ModelConfig, rng: &mut R) -> Vec<f64> {
    let nt = cfg.n_t;
    let mut out = alloc::vec![0.0; cfg.n_k * nt];
    for row in out.chunks_mut(nt) {
        if rng.random::<f64>() < 0.125 {
            continue;
        }
        let scale = math::exp(sp.rho() * f64::from(rng.random_range(-8i32..=8)));
        let a = rng.random_range(0..nt);
        let b = rng.random_range(a..nt);
        for x in &mut row[a..=b] {
            if rng.random::<f64>() < 0.8 {
                *x = scale * (0.25 + 0.75 * rng.random::<f64>());
            }
        }
    }
    out
}

fn random_profile<R: Rng>(cfg: &ModelConfig, rng: &mut R) -> Vec<f64> {
    let (nk, nu) = (cfg.n_k, cfg.n_u);
    let lo = cfg.first_cell_above_one().min(nu - 1);
    let mut out = alloc::vec![0.0; nk * nk * nu];
    for pair in out.chunks_mut(nu) {
        if rng.random::<f64>() < 0.15 {
            continue;
        }
        let a = rng.random_range(lo..nu);
        let b = rng.random_range(a..nu);
        let p = 0.3 + 0.7 * rng.random::<f64>();
        for x in &mut pair[a..=b] {
            if rng.random::<f64>() < p {
                *x = 1.0;
            }
        }
    }
    out
}

/// `F*`, `H*` on `(0, 1]` and `G**(·, ·, l)` for each `u`-cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RearrangedData {
    cfg: ModelConfig,
    pub fstar: StepProfile,
    pub hstar: StepProfile,
    pub gstar: Vec<DoubleProfile>,
}

impl RearrangedData {
    pub fn new(cfg: ModelConfig, fstar: StepProfile, hstar: StepProfile, gstar: Vec<DoubleProfile>) -> Result<Self> {
        if gstar.len() != cfg.n_u {
            return Err(Error::DimensionMismatch {
                expected: cfg.n_u,
                got: gstar.len(),
            });
        }
        if gstar.iter().any(|g| !g.is_bimonotone()) {
            return Err(Error::arg("gstar", "every slice must be bimonotone"));
        }
        Ok(RearrangedData {
            cfg,
            fstar,
            hstar,
            gstar,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    /// `∑_l weights[l] ∫∫ F* H* G**(·, ·, l)`.
    pub fn weighted_integral(&self, weights: &[f64]) -> f64 {
        self.gstar
            .iter()
            .zip(weights)
            .filter(|(_, &w)| w != 0.0)
            .map(|(g, &w)| w * g.integrate_against(&self.fstar, &self.hstar))
            .sum()
    }

    /// `(‖f‖, ‖g‖, ‖h‖)` with `‖f‖ = 2 (∫ F*²)^{1/2}` and
    /// `‖g‖ = 2 (∑_l ∫_{cell l} e^{2ρu} du ∫∫ G**)^{1/2}`.
    pub fn norms(&self, sp: &SpaceParams) -> (f64, f64, f64) {
        let sq = |p: &StepProfile| 2.0 * math::sqrt(p.steps().map(|(a, b, v)| v * v * (b - a)).sum::<f64>());
        let e2 = exp2_cell_weights(sp, &self.cfg);
        let g: f64 = self.gstar.iter().zip(&e2).map(|(g, w)| w * g.integral()).sum();
        (sq(&self.fstar), 2.0 * math::sqrt(g), sq(&self.hstar))
    }
}

/// The step-1 sum.
pub fn chain_step1_bound(model: &DiscreteModel, psi: &PsiCells) -> Result<f64> {
    let cfg = model.cfg;
    psi.matches(&cfg)?;
    let (nk, nt, nd) = (cfg.n_k, cfg.n_t, cfg.n_offsets());
    let h = cfg.step();
    let rho = psi.space().rho();
    let w = model.w_table(psi);
    let e: Vec<f64> = (0..nt).map(|i| math::exp(rho * cfg.t(i))).collect();
    let mut total = 0.0;
    for k in 0..nk {
        for k2 in 0..nk {
            let pair = k * nk + k2;
            let mut acc = 0.0;
            for i in 0..nt {
                let f = model.f1(k, i);
                if f == 0.0 {
                    continue;
                }
                for j in 0..nt {
                    let m = f.min(model.h1(k2, j));
                    if m > 0.0 {
                        acc += m * w[pair * nd + (j + nt - 1 - i)] * e[i] * e[j];
                    }
                }
            }
            total += acc;
        }
    }
    Ok(total * h * h / (nk * nk) as f64)
}

/// The two step-2 integrals.
pub fn chain_step2_bound(model: &DiscreteModel, psi: &PsiCells) -> Result<Step2Terms> {
    psi.matches(&model.cfg)?;
    let w = model.w_table(psi);
    let (nt, nd) = (model.cfg.n_t, model.cfg.n_offsets());
    Ok(model.step2_with(psi.space(), |pair, d| w[pair * nd + (d + nt as isize - 1) as usize]))
}

/// Step 2 of a bi-invariant model with `∑_l g(l) Ψ(l, d)` replaced by the
/// Abel transform of the radial profile of `g`.
pub fn chain_step2_via_abel(model: &DiscreteModel, sp: &SpaceParams, rel_tol: f64) -> Result<Step2Terms> {
    let cfg = model.cfg;
    if cfg.n_k != 1 {
        return Err(Error::arg("n_k", "the Abel route needs a bi-invariant model"));
    }
    let edges: Vec<f64> = (0..=cfg.n_u).map(|l| l as f64 * cfg.step()).collect();
    let g = RadialFunction::new(edges, (0..cfg.n_u).map(|l| model.g_tilde(0, 0, l)).collect())?;
    let w: Vec<f64> = (0..cfg.n_t)
        .map(|d| kernel::abel_transform_with_tol(sp, &g, d as f64 * cfg.step(), rel_tol))
        .collect();
    Ok(model.step2_with(sp, |_, d| w[d.unsigned_abs()]))
}

/// The step-3 integral `∑_l E_l ∫∫ F* H* G**`.
pub fn chain_step3_bound(model: &DiscreteModel, sp: &SpaceParams) -> Result<f64> {
    let data = model.rearranged(sp)?;
    Ok(data.weighted_integral(&exp_cell_weights(sp, &model.cfg)))
}

/// The step-4 split at `𝒦 = ‖f‖ ‖h‖ / ‖g‖`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitBound {
    pub kappa: f64,
    /// `∑ over {F*H* ≤ 𝒦 e^{ρu}}` of the step-3 integrand.
    pub u_part: f64,
    /// The rest of the step-3 integral.
    pub v_part: f64,
    /// `C 𝒦 ‖g‖² + C ‖f‖² ‖h‖² / 𝒦 = 2C ‖f‖ ‖g‖ ‖h‖`.
    pub bound: f64,
    pub step3: f64,
}

impl SplitBound {
    pub fn holds(&self) -> bool {
        self.step3 <= self.bound * (1.0 + 1e-12)
    }
}

/// Evaluates the step-4 split with constant `c` on `data`.
pub fn split_optimize(data: &RearrangedData, sp: &SpaceParams, norms: (f64, f64, f64), c: f64) -> Result<SplitBound> {
    let (nf, ng, nh) = norms;
    if !(nf > 0.0 && ng > 0.0 && nh > 0.0) {
        return Err(Error::arg("norms", "all three norms must be positive"));
    }
    let kappa = nf * nh / ng;
    let rho = sp.rho();
    let e = exp_cell_weights(sp, &data.cfg);
    let mut u_part = 0.0;
    let mut v_part = 0.0;
    for (l, g) in data.gstar.iter().enumerate() {
        let (a, b) = data.cfg.u_cell(l);
        // pieces of the cell where F*H* ≤ 𝒦 e^{ρu}, per (x, y) cell
        for (i, row) in g.values.iter().enumerate() {
            let (x0, x1) = (if i == 0 { 0.0 } else { g.x_breaks[i - 1] }, g.x_breaks[i]);
            for (j, &gv) in row.iter().enumerate() {
                if gv == 0.0 {
                    continue;
                }
                let (y0, y1) = (if j == 0 { 0.0 } else { g.y_breaks[j - 1] }, g.y_breaks[j]);
                for (fx0, fx1, fv) in clip_steps(&data.fstar, x0, x1) {
                    for (hy0, hy1, hv) in clip_steps(&data.hstar, y0, y1) {
                        let prod = fv * hv;
                        if prod == 0.0 {
                            continue;
                        }
                        let area = (fx1 - fx0) * (hy1 - hy0) * gv * prod;
                        let split = (math::ln(prod / kappa) / rho).clamp(a, b);
                        v_part += area * exp_cell(rho, a, split).max(0.0);
                        u_part += area * exp_cell(rho, split, b).max(0.0);
                    }
                }
            }
        }
    }
    let step3 = data.weighted_integral(&e);
    Ok(SplitBound {
        kappa,
        u_part,
        v_part,
        bound: 2.0 * c * nf * ng * nh,
        step3,
    })
}

/// Steps of `p` restricted to `[x0, x1)`.
fn clip_steps(p: &StepProfile, x0: f64, x1: f64) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
    p.steps().filter_map(move |(a, b, v)| {
        let (lo, hi) = (a.max(x0), b.min(x1));
        (hi > lo).then_some((lo, hi, v))
    })
}

/// `∑_l Φ_l ∫∫ F* H* G**`, `Φ_l = ∫_{cell l} φ(u) du`.
pub fn theorem8_bound(sp: &SpaceParams, data: &RearrangedData) -> f64 {
    data.weighted_integral(&phi_cell_weights(sp, &data.cfg))
}

/// Nonnegative `f`, `h` on `K × (N̄A)` and a profile `g̃` on `K × K × u`.
///
/// The `N̄A` grid is the product of the `t`-grid with `n_v` cells of widths
/// `v_widths` in one `N̄`-direction; cell `(i, c)` has measure
/// `h e^{2ρt_i} v_widths[c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThreeFunctionModel {
    pub cfg: ModelConfig,
    pub v_widths: Vec<f64>,
    /// `n_k × n_t × n_v`.
    pub f: Vec<f64>,
    pub h: Vec<f64>,
    /// `n_k × n_k × n_u`, values in `[0, 1]`.
    pub g_tilde: Vec<f64>,
}

impl ThreeFunctionModel {
    pub fn new(cfg: ModelConfig, v_widths: Vec<f64>, f: Vec<f64>, h: Vec<f64>, g_tilde: Vec<f64>) -> Result<Self> {
        cfg.validate()?;
        if v_widths.is_empty() || v_widths.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::arg("v_widths", "need at least one positive width"));
        }
        let n = cfg.n_k * cfg.n_t * v_widths.len();
        check_nonneg("f", &f, n, false)?;
        check_nonneg("h", &h, n, false)?;
        check_nonneg("g_tilde", &g_tilde, cfg.n_k * cfg.n_k * cfg.n_u, true)?;
        Ok(ThreeFunctionModel {
            cfg,
            v_widths,
            f,
            h,
            g_tilde,
        })
    }

    /// Random simple functions with dyadic levels; `{0, 1}`-valued when
    /// `indicators` is set.
    pub fn random(sp: &SpaceParams, cfg: ModelConfig, n_v: usize, indicators: bool, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = par::stream_rng(seed, 2);
        let v_widths: Vec<f64> = (0..n_v.max(1)).map(|_| 0.5 + rng.random::<f64>()).collect();
        let n = cfg.n_k * cfg.n_t * v_widths.len();
        let draw = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
            (0..n)
                .map(|_| {
                    if rng.random::<f64>() < 0.6 {
                        0.0
                    } else if indicators {
                        1.0
                    } else {
                        math::exp(sp.rho() * f64::from(rng.random_range(-8i32..=8)))
                    }
                })
                .collect()
        };
        let f = draw(&mut rng);
        let h = draw(&mut rng);
        let g_tilde = random_profile(&cfg, &mut rng);
        Self::new(cfg, v_widths, f, h, g_tilde)
    }

    fn cell_weights(&self, sp: &SpaceParams) -> Vec<f64> {
        let h = self.cfg.step();
        let mut out = Vec::with_capacity(self.cfg.n_t * self.v_widths.len());
        for i in 0..self.cfg.n_t {
            let e = h * math::exp(2.0 * sp.rho() * self.cfg.t(i));
            out.extend(self.v_widths.iter().map(|w| e * w));
        }
        out
    }

    fn slices(&self, x: &[f64]) -> Vec<Vec<f64>> {
        x.chunks(self.cfg.n_t * self.v_widths.len())
            .map(<[f64]>::to_vec)
            .collect()
    }

    /// `F₁(k, t_i) = ∑_c f(k, i, c) v_widths[c]`, with `G₁` mixed from `g̃`.
    pub fn to_discrete(&self, seed: u64) -> Result<DiscreteModel> {
        let nv = self.v_widths.len();
        let collapse = |x: &[f64]| -> Vec<f64> {
            x.chunks(nv)
                .map(|c| c.iter().zip(&self.v_widths).map(|(a, w)| a * w).sum())
                .collect()
        };
        DiscreteModel::from_mixture(
            self.cfg,
            collapse(&self.f),
            collapse(&self.h),
            self.g_tilde.clone(),
            seed,
        )
    }

    /// `F*`, `H*` through the general radial profile and `G**` from `g̃`.
    pub fn rearranged(&self, sp: &SpaceParams) -> Result<RearrangedData> {
        let cw = self.cell_weights(sp);
        let kw = alloc::vec![1.0 / self.cfg.n_k as f64; self.cfg.n_k];
        let fstar = rearrange::general_radial_profile(&self.slices(&self.f), &kw, &cw)?;
        let hstar = rearrange::general_radial_profile(&self.slices(&self.h), &kw, &cw)?;
        RearrangedData::new(self.cfg, fstar, hstar, g_double_profiles(&self.cfg, &self.g_tilde)?)
    }
}
