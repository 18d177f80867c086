//! Domination of `M̃2` by `M3`, the local/global split, and weak-type sweeps.

use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::Rng;

use super::grid::{ball_cells, BallSpec, FieldGrid, GridModel, StencilTable};
use super::operators::{m2_tilde_field, m3_field, MaximalField};
use crate::rearrange::{l21_norm, weak_l2_norm, WeightedSamples};
use crate::{math, Error, IwasawaPoint, Result, SpaceParams};

#[derive(Debug, Clone, PartialEq)]
pub struct DominationReport {
    /// `max lhs/rhs` over interior cells with `lhs > 0`; 0 when there are none.
    pub max_ratio: f64,
    /// The provable constant for this grid, `q^{m1} max (cosh r)^{m1/2} |B|^{−1/2}`.
    pub bound: f64,
    pub interior_cells: usize,
    /// Interior cells with `rhs = 0 < lhs`.
    pub flagged: usize,
    /// Whether every ball slice is at least as wide as the smallest window,
    /// the condition under which `bound` is proven.
    pub resolved: bool,
}

/// Compares `M̃2 f(z)` with `e^{−ρt} Σ_j M3 f(v̄, s_j) e^{−ρ s_j} ∫_{cell j} e^{2ρs} ds`
/// on every cell where all radii fit.
pub fn pointwise_domination_check(f: &FieldGrid, table: &StencilTable, us: &[f64]) -> Result<DominationReport> {
    let model = f.model();
    let rho = model.space().rho();
    let m1 = model.m1() as f64;
    let lhs = m2_tilde_field(f, table)?;
    let m3 = m3_field(f, us)?;
    let u_min = us.iter().copied().fold(f64::INFINITY, f64::min);
    let q = us.windows(2).map(|w| w[1] / w[0]).fold(1.0f64, f64::max).max(1.0);
    if us.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::arg("us", "must be strictly increasing"));
    }
    let slice_len = model.slice_len();
    let n_k = table.radii.len();

    // Column sums Σ_j M3(v̄, s_j) e^{−ρ s_j} w_j.
    let weights: Vec<f64> = (0..model.n_s())
        .map(|j| math::exp(-rho * model.s_center(j)) * model.slice_weight(j))
        .collect();
    let mut column = alloc::vec![0.0f64; slice_len];
    for (j, w) in weights.iter().enumerate() {
        for (c, m) in column.iter_mut().zip(&m3[j * slice_len..(j + 1) * slice_len]) {
            *c += m * w;
        }
    }

    let mut report = DominationReport {
        max_ratio: 0.0,
        bound: 0.0,
        interior_cells: 0,
        flagged: 0,
        resolved: true,
    };
    for jc in 0..model.n_s() {
        let stencils: Option<Vec<_>> = (0..n_k).map(|k| table.get(k, jc)).collect();
        let Some(stencils) = stencils else { continue };
        let s_c = model.s_center(jc);
        for st in &stencils {
            let r = st.radius;
            report.bound = report
                .bound
                .max(math::powf(q, m1) * math::powf(math::cosh(r), 0.5 * m1) / st.measure.sqrt());
            let top = st.runs.iter().map(|run| run.0).max().unwrap_or(0);
            let s_top = model.s_center((jc as i64 + i64::from(top)) as usize);
            let u_need = math::sqrt(math::cosh(r)) * math::exp(-0.5 * (s_top + s_c));
            if u_need < u_min {
                report.resolved = false;
            }
        }
        let decay = math::exp(-rho * s_c);
        for pos in 0..slice_len {
            let (i1, i2) = (pos % model.n_v(), pos / model.n_v());
            if !stencils.iter().all(|st| st.fits(model, i1, i2)) {
                continue;
            }
            report.interior_cells += 1;
            let l = lhs[jc * slice_len + pos].unwrap_or(0.0);
            let r = decay * column[pos];
            if l > 0.0 {
                if r > 0.0 {
                    report.max_ratio = report.max_ratio.max(l / r);
                } else {
                    report.flagged += 1;
                }
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitReport {
    /// `max |B|⁻¹∫_B f / M̃2 f(z)` over checked pairs `z ∈ B`.
    pub max_ratio: f64,
    /// `max |B(z, 2r)|^{1/2} / |B|` over the same pairs, by enumeration of
    /// cell measures.
    pub enumerated_constant: f64,
    pub pairs: usize,
}

/// Checks `|B|⁻¹ ∫_B f ≤ C M̃2 f(z)` for subgrid-centred balls `B` of radius
/// `r ≥ 1` and every cell `z ∈ B` at which `B(z, 2r)` fits. `M̃2` uses the
/// radii and their doubles.
pub fn split_comparison(f: &FieldGrid, radii: &[f64]) -> Result<SplitReport> {
    let model = f.model();
    if radii.iter().any(|r| !(*r >= 1.0)) {
        return Err(Error::arg("radii", "the global part uses radii of at least 1"));
    }
    let mut all: Vec<f64> = radii.to_vec();
    all.extend(radii.iter().map(|r| 2.0 * r));
    let table = StencilTable::new(model, &all)?;
    let mt = m2_tilde_field(f, &table)?;
    let n = radii.len();
    let prefix = f.prefix();
    let stride = super::operators::SUBGRID_STRIDE;
    let mut report = SplitReport {
        max_ratio: 0.0,
        enumerated_constant: 0.0,
        pairs: 0,
    };
    for k in 0..n {
        for jc in (stride / 2..model.n_s()).step_by(stride) {
            let Some(st) = table.get(k, jc) else { continue };
            for i2 in (0..model.rows_per_slice()).filter(|i| model.m1() == 1 || i % stride == stride / 2) {
                for i1 in (stride / 2..model.n_v()).step_by(stride) {
                    if !st.fits(model, i1, i2) {
                        continue;
                    }
                    let avg = st.integral(model, &prefix, i1, i2) / st.measure;
                    for run in st.runs_at(model, i1, i2) {
                        for i in run.lo..run.hi {
                            let z = run.row * model.n_v() + i;
                            let Some(big) = table.fitting(model, n + k, z) else {
                                continue;
                            };
                            report.pairs += 1;
                            report.enumerated_constant =
                                report.enumerated_constant.max(big.measure.sqrt() / st.measure);
                            let m = mt[z].unwrap_or(0.0);
                            if avg > 0.0 {
                                report.max_ratio = report.max_ratio.max(if m > 0.0 { avg / m } else { f64::INFINITY });
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(report)
}

/// `‖M̃2 f‖_{2,∞}` (cell measures as weights) against `‖f‖_{2,1}` and `‖f‖₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakTypeRow {
    pub instance: usize,
    pub weak_norm: f64,
    pub l21_norm: f64,
    pub l2_norm: f64,
    pub ratio: f64,
    pub ratio_l2: f64,
}

fn field_samples(model: &GridModel, values: &MaximalField) -> WeightedSamples {
    let entries = values
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.filter(|x| *x > 0.0).map(|x| (x, model.cell_measure(i))))
        .collect();
    WeightedSamples::new(entries).expect("maximal values are finite and nonnegative")
}

pub fn weak_type_row(instance: usize, f: &FieldGrid, table: &StencilTable) -> Result<WeakTypeRow> {
    let mt = m2_tilde_field(f, table)?;
    let weak = weak_l2_norm(&field_samples(f.model(), &mt));
    let fs = f.samples();
    let l21 = l21_norm(&fs);
    let l2 = math::sqrt(fs.entries().iter().map(|(v, w)| v * v * w).sum());
    let div = |a: f64, b: f64| if b > 0.0 { a / b } else { 0.0 };
    Ok(WeakTypeRow {
        instance,
        weak_norm: weak,
        l21_norm: l21,
        l2_norm: l2,
        ratio: div(weak, l21),
        ratio_l2: div(weak, l2),
    })
}

/// Unit balls at `s = 0` along the first `v`-axis.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparationConfig {
    /// Instance sizes `k`.
    pub counts: Vec<usize>,
    /// Minimum pairwise distance of the ball centres.
    pub min_distance: f64,
    /// Largest `M̃2` radius; radii are `2^{j/4} ∈ [1, r_max]`.
    pub r_max: f64,
    pub dv: f64,
    pub n_s: usize,
}

impl Default for SeparationConfig {
    fn default() -> Self {
        SeparationConfig {
            counts: alloc::vec![1, 2, 4, 8, 16],
            min_distance: 10.0,
            r_max: 2.0,
            dv: 0.1,
            n_s: 128,
        }
    }
}

/// The grid and the `k`-ball indicators of the separation family.
pub fn separation_family(sp: &SpaceParams, cfg: &SeparationConfig) -> Result<(Arc<GridModel>, Vec<FieldGrid>)> {
    if sp.m1() != 1 || sp.m2() != 0 {
        return Err(Error::arg(
            "space",
            "the separation family is built on (m1, m2) = (1, 0)",
        ));
    }
    let k_max = cfg
        .counts
        .iter()
        .copied()
        .max()
        .ok_or(Error::arg("counts", "must not be empty"))?;
    if cfg.counts.contains(&0) {
        return Err(Error::arg("counts", "instances need at least one ball"));
    }
    // Centres (a, 0) and (b, 0) are at distance acosh(1 + (a − b)²).
    // An even number of cells, so every centre sits at the same offset from the grid.
    let spacing = 2.0 * libm::ceil(0.5 * math::sqrt(math::cosh_m1(cfg.min_distance)) / cfg.dv) * cfg.dv;
    let s_half = 1.0 + 2.0 * cfg.r_max;
    // Cells within reach of a ball have `|s| < 1 + r_max` and their balls
    // reach `e^{1 + r_max} sinh(r_max)/√2` in `v`.
    let margin = math::sinh(1.0 + cfg.r_max) + math::exp(1.0 + cfg.r_max) * math::sinh(cfg.r_max);
    let n_v = 2 * libm::ceil((0.5 * (k_max - 1) as f64 * spacing + margin) / cfg.dv) as usize;
    let v_half = 0.5 * n_v as f64 * cfg.dv;
    let model = GridModel::new(sp, v_half, s_half, n_v, cfg.n_s)?;
    let fields = cfg
        .counts
        .iter()
        .map(|&k| {
            let balls: Result<Vec<BallSpec>> = (0..k)
                .map(|i| {
                    let v = (i as f64 - 0.5 * (k - 1) as f64) * spacing;
                    BallSpec::new(
                        &model,
                        IwasawaPoint {
                            v: alloc::vec![v],
                            w: Vec::new(),
                            s: 0.0,
                        },
                        1.0,
                    )
                })
                .collect();
            FieldGrid::indicator_of_balls(model.clone(), &balls?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((model, fields))
}

pub fn separation_sweep(sp: &SpaceParams, cfg: &SeparationConfig) -> Result<Vec<WeakTypeRow>> {
    let (model, fields) = separation_family(sp, cfg)?;
    let table = StencilTable::new(&model, &super::grid::quarter_octave_radii(1.0, cfg.r_max))?;
    cfg.counts
        .iter()
        .zip(&fields)
        .map(|(&k, f)| weak_type_row(k, f, &table))
        .collect()
}

/// Radial shells `f = Σ_{j ≤ J} a_j χ_{B(o, j+1) ∖ B(o, j)}`, `a_j = e^{−ρj}/(1+j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShellsConfig {
    pub max_shells: usize,
    pub r_max: f64,
    pub v_half: f64,
    pub s_half: f64,
    pub n_v: usize,
    pub n_s: usize,
}

impl Default for ShellsConfig {
    fn default() -> Self {
        ShellsConfig {
            max_shells: 2,
            r_max: core::f64::consts::SQRT_2,
            v_half: 40.0,
            s_half: 5.0,
            n_v: 2048,
            n_s: 160,
        }
    }
}

/// One row per `J = 0..=max_shells`; `ratio` and `ratio_l2` are reported as
/// a trend.
pub fn shells_probe(sp: &SpaceParams, cfg: &ShellsConfig) -> Result<Vec<WeakTypeRow>> {
    let model = GridModel::new(sp, cfg.v_half, cfg.s_half, cfg.n_v, cfg.n_s)?;
    let table = StencilTable::new(&model, &super::grid::quarter_octave_radii(1.0, cfg.r_max))?;
    let origin = IwasawaPoint::on_axis(sp, 0.0);
    let shells: Vec<(f64, super::grid::BallCells)> = (0..=cfg.max_shells)
        .map(|j| {
            let b = BallSpec::new(&model, origin.clone(), (j + 1) as f64)?;
            Ok((
                math::exp(-sp.rho() * j as f64) / (1 + j) as f64,
                ball_cells(&model, &b)?,
            ))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut values = alloc::vec![0.0f64; model.n_cells()];
    let mut covered = alloc::vec![false; model.n_cells()];
    for (j, (a, cells)) in shells.iter().enumerate() {
        for idx in cells.cells(&model) {
            if !covered[idx] {
                covered[idx] = true;
                values[idx] = *a;
            }
        }
        let f = FieldGrid::new(model.clone(), values.clone())?;
        rows.push(weak_type_row(j, &f, &table)?);
    }
    Ok(rows)
}

/// The indicator of `n` random balls with radii in `radii`, each placed so
/// that its `margin`-enlargement lies in the box.
pub fn random_multi_ball_indicator(
    model: &Arc<GridModel>,
    n: usize,
    radii: (f64, f64),
    margin: f64,
    seed: u64,
) -> Result<FieldGrid> {
    let balls = random_balls(model, n, radii, margin, seed)?;
    FieldGrid::indicator_of_balls(model.clone(), &balls)
}

/// `n` balls with radii uniform in `radii` and centres uniform in the box,
/// resampled until the ball enlarged by `margin` fits.
pub fn random_balls(model: &GridModel, n: usize, radii: (f64, f64), margin: f64, seed: u64) -> Result<Vec<BallSpec>> {
    if !(radii.0 > 0.0 && radii.1 >= radii.0) {
        return Err(Error::arg("radii", "need 0 < lo <= hi"));
    }
    let mut rng = crate::par::stream_rng(seed, 3);
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0usize;
    while out.len() < n {
        attempts += 1;
        if attempts > 10_000 * (n + 1) {
            return Err(Error::arg("radii", "no ball of the requested size fits in the box"));
        }
        let r = rng.random_range(radii.0..=radii.1);
        let s = rng.random_range(-model.s_half()..model.s_half());
        let v = (0..model.m1())
            .map(|_| rng.random_range(-model.v_half()..model.v_half()))
            .collect();
        let center = IwasawaPoint { v, w: Vec::new(), s };
        if model.contains_ball(&center, r + margin) {
            out.push(BallSpec::new(model, center, r)?);
        }
    }
    Ok(out)
}
