//! Uniform grids on a box in `(v, s)` with the measure `e^{2ρs} dv ds`.
//!
//! Cells are stored slice by slice: index `(j · n_v^{m1−1} + i₂) · n_v + i₁`.
//! A row is a line of cells along `v₁` at fixed `(i₂, j)`. Ball geometry is
//! evaluated in index units, so a ball centred on a cell has exactly the cell
//! set of the corresponding [`Stencil`].

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::geometry::{IwasawaPoint, SpaceParams};
use crate::math;
use crate::{Error, Result};

/// `(i₂, lo, hi)`: cells `lo..hi` along `i₁` in row `i₂`.
pub(crate) type WindowRow = (i64, i64, i64);

/// Fractional indices within this distance of an integer are snapped to it.
const SNAP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct GridModel {
    sp: SpaceParams,
    v_half: f64,
    s_half: f64,
    n_v: usize,
    n_s: usize,
    dv: f64,
    ds: f64,
    slice_weight: Vec<f64>,
    v_volume: f64,
}

/// A maximal run of cells `lo..hi` in one row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Run {
    pub row: usize,
    pub lo: usize,
    pub hi: usize,
}

/// A run in absolute slice and `v₂` indices and possibly out-of-range `v₁`
/// indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct RawRun {
    pub j: i64,
    pub i2: i64,
    pub lo: i64,
    pub hi: i64,
}

impl GridModel {
    /// The box `[−v_half, v_half]^{m1} × [−s_half, s_half]` with `n_v` cells per
    /// `v`-axis and `n_s` cells in `s`.
    pub fn new(sp: &SpaceParams, v_half: f64, s_half: f64, n_v: usize, n_s: usize) -> Result<Arc<Self>> {
        sp.require_real_hyperbolic()?;
        if !(1..=2).contains(&sp.m1()) {
            return Err(Error::arg("m1", "grid models cover m1 = 1 and m1 = 2"));
        }
        if !(v_half > 0.0 && s_half > 0.0) || !v_half.is_finite() || !s_half.is_finite() {
            return Err(Error::arg("box", "half-widths must be positive and finite"));
        }
        if n_v == 0 || n_s == 0 {
            return Err(Error::arg("resolution", "need at least one cell per axis"));
        }
        let dv = 2.0 * v_half / n_v as f64;
        let ds = 2.0 * s_half / n_s as f64;
        let two_rho = 2.0 * sp.rho();
        let slice_weight = (0..n_s)
            .map(|j| {
                let a = -s_half + j as f64 * ds;
                math::exp(two_rho * a) * math::expm1(two_rho * ds) / two_rho
            })
            .collect();
        Ok(Arc::new(GridModel {
            sp: *sp,
            v_half,
            s_half,
            n_v,
            n_s,
            dv,
            ds,
            slice_weight,
            v_volume: math::powi(dv, sp.m1() as i32),
        }))
    }

    pub fn space(&self) -> &SpaceParams {
        &self.sp
    }

    pub fn m1(&self) -> usize {
        self.sp.m1() as usize
    }

    pub fn n_v(&self) -> usize {
        self.n_v
    }

    pub fn n_s(&self) -> usize {
        self.n_s
    }

    pub fn dv(&self) -> f64 {
        self.dv
    }

    pub fn ds(&self) -> f64 {
        self.ds
    }

    pub fn v_half(&self) -> f64 {
        self.v_half
    }

    pub fn s_half(&self) -> f64 {
        self.s_half
    }

    pub fn rows_per_slice(&self) -> usize {
        if self.m1() == 2 {
            self.n_v
        } else {
            1
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_s * self.rows_per_slice()
    }

    pub fn n_cells(&self) -> usize {
        self.n_rows() * self.n_v
    }

    pub fn slice_len(&self) -> usize {
        self.rows_per_slice() * self.n_v
    }

    pub fn index(&self, i1: usize, i2: usize, j: usize) -> usize {
        (j * self.rows_per_slice() + i2) * self.n_v + i1
    }

    /// `(i₁, i₂, j)` of a cell; `i₂ = 0` when `m1 = 1`.
    pub fn coords(&self, idx: usize) -> (usize, usize, usize) {
        let row = idx / self.n_v;
        (idx % self.n_v, row % self.rows_per_slice(), row / self.rows_per_slice())
    }

    pub fn row_slice(&self, row: usize) -> usize {
        row / self.rows_per_slice()
    }

    pub fn v_center(&self, i: usize) -> f64 {
        -self.v_half + (i as f64 + 0.5) * self.dv
    }

    pub fn s_center(&self, j: usize) -> f64 {
        -self.s_half + (j as f64 + 0.5) * self.ds
    }

    /// `∫_{cell j} e^{2ρs} ds`.
    pub fn slice_weight(&self, j: usize) -> f64 {
        self.slice_weight[j]
    }

    /// Measure of any cell in slice `j`.
    pub fn slice_cell_measure(&self, j: usize) -> f64 {
        self.v_volume * self.slice_weight[j]
    }

    pub fn cell_measure(&self, idx: usize) -> f64 {
        self.slice_cell_measure(self.coords(idx).2)
    }

    /// `dv^{m1}`, the Lebesgue measure of a cell's `v`-section.
    pub fn v_volume(&self) -> f64 {
        self.v_volume
    }

    pub fn total_measure(&self) -> f64 {
        self.slice_weight.iter().sum::<f64>() * self.v_volume * (self.slice_len() as f64)
    }

    pub fn cell_point(&self, idx: usize) -> IwasawaPoint {
        let (i1, i2, j) = self.coords(idx);
        let mut v = alloc::vec![self.v_center(i1)];
        if self.m1() == 2 {
            v.push(self.v_center(i2));
        }
        IwasawaPoint {
            v,
            w: Vec::new(),
            s: self.s_center(j),
        }
    }

    /// The cell containing `p`, if `p` lies in the box.
    pub fn cell_of(&self, p: &IwasawaPoint) -> Option<usize> {
        p.check(&self.sp).ok()?;
        let axis = |x: f64, half: f64, step: f64, n: usize| {
            let k = math::floor((x + half) / step);
            (k >= 0.0 && (k as usize) < n).then_some(k as usize)
        };
        let j = axis(p.s, self.s_half, self.ds, self.n_s)?;
        let i1 = axis(p.v[0], self.v_half, self.dv, self.n_v)?;
        let i2 = if self.m1() == 2 {
            axis(p.v[1], self.v_half, self.dv, self.n_v)?
        } else {
            0
        };
        Some(self.index(i1, i2, j))
    }

    /// Whether `B(center, r)` lies in the box.
    pub fn contains_ball(&self, center: &IwasawaPoint, r: f64) -> bool {
        let half = math::exp(-center.s) * math::sinh(r) * core::f64::consts::FRAC_1_SQRT_2;
        center.s.abs() + r <= self.s_half && center.v.iter().all(|x| x.abs() + half <= self.v_half)
    }

    /// Fractional cell index of a coordinate, snapped to integers.
    pub(crate) fn frac_index(x: f64, half: f64, step: f64) -> f64 {
        let f = (x + half) / step - 0.5;
        let r = libm::round(f);
        if (f - r).abs() < SNAP {
            r
        } else {
            f
        }
    }

    /// Indices `i` with `((i − x) dv)² < q` (or `≤ q` when `closed`).
    fn index_interval(&self, x: f64, q: f64, closed: bool) -> Option<(i64, i64)> {
        let pred = |i: i64| {
            let d = (i as f64 - x) * self.dv;
            if closed {
                d * d <= q
            } else {
                d * d < q
            }
        };
        let c = libm::round(x) as i64;
        if !pred(c) {
            return None;
        }
        let w = math::sqrt(q.max(0.0)) / self.dv;
        let mut lo = (libm::ceil(x - w) as i64).min(c);
        while pred(lo - 1) {
            lo -= 1;
        }
        while !pred(lo) {
            lo += 1;
        }
        let mut hi = (libm::floor(x + w) as i64).max(c);
        while pred(hi + 1) {
            hi += 1;
        }
        while !pred(hi) {
            hi -= 1;
        }
        Some((lo, hi + 1))
    }

    /// Cells whose centres lie within distance `< r` of the point with
    /// fractional indices `(x₁, x₂, y)`, before any clipping.
    pub(crate) fn raw_ball(&self, x: [f64; 2], y: f64, r: f64) -> Vec<RawRun> {
        let mut out = Vec::new();
        let reach = r / self.ds;
        let j_lo = libm::floor(y - reach) as i64 - 1;
        let j_hi = libm::ceil(y + reach) as i64 + 1;
        for j in j_lo..=j_hi {
            let sigma = (j as f64 - y) * self.ds;
            if !(sigma.abs() < r) {
                continue;
            }
            let s_sum = -2.0 * self.s_half + (j as f64 + y + 1.0) * self.ds;
            // |Δv|² < e^{−(s + s_c)} (cosh r − cosh(s − s_c))
            let q = math::exp(-s_sum) * math::cosh_diff(r, sigma);
            if !(q > 0.0) {
                continue;
            }
            if self.m1() == 1 {
                if let Some((lo, hi)) = self.index_interval(x[0], q, false) {
                    out.push(RawRun { j, i2: 0, lo, hi });
                }
            } else if let Some((a, b)) = self.index_interval(x[1], q, false) {
                for i2 in a..b {
                    let d2 = (i2 as f64 - x[1]) * self.dv;
                    if let Some((lo, hi)) = self.index_interval(x[0], q - d2 * d2, false) {
                        out.push(RawRun { j, i2, lo, hi });
                    }
                }
            }
        }
        out
    }

    /// The closed `v`-ball `|m| ≤ u` around fractional `v`-indices `x`, as
    /// `(Δi₂, lo, hi)` rows.
    pub(crate) fn raw_window(&self, x: [f64; 2], u: f64) -> Vec<WindowRow> {
        let q = u * u;
        if self.m1() == 1 {
            return self
                .index_interval(x[0], q, true)
                .map(|(lo, hi)| alloc::vec![(0, lo, hi)])
                .unwrap_or_default();
        }
        let mut out = Vec::new();
        if let Some((a, b)) = self.index_interval(x[1], q, true) {
            for i2 in a..b {
                let d2 = (i2 as f64 - x[1]) * self.dv;
                if let Some((lo, hi)) = self.index_interval(x[0], q - d2 * d2, true) {
                    out.push((i2, lo, hi));
                }
            }
        }
        out
    }

    /// Converts in-range raw runs to [`Run`]s; `None` if any cell is outside
    /// the grid.
    pub(crate) fn exact_runs(&self, raw: &[RawRun]) -> Option<Vec<Run>> {
        let (nv, ns) = (self.n_v as i64, self.n_s as i64);
        let rows_ok = |r: &RawRun| r.j >= 0 && r.j < ns && r.i2 >= 0 && r.i2 < self.rows_per_slice() as i64;
        if raw.iter().any(|r| !rows_ok(r) || r.lo < 0 || r.hi > nv) {
            return None;
        }
        Some(
            raw.iter()
                .map(|r| Run {
                    row: r.j as usize * self.rows_per_slice() + r.i2 as usize,
                    lo: r.lo as usize,
                    hi: r.hi as usize,
                })
                .collect(),
        )
    }

    pub(crate) fn point_frac(&self, p: &IwasawaPoint) -> ([f64; 2], f64) {
        let x1 = Self::frac_index(p.v[0], self.v_half, self.dv);
        let x2 = if self.m1() == 2 {
            Self::frac_index(p.v[1], self.v_half, self.dv)
        } else {
            0.0
        };
        ([x1, x2], Self::frac_index(p.s, self.s_half, self.ds))
    }
}

/// A ball contained in the box of a [`GridModel`].
#[derive(Debug, Clone, PartialEq)]
pub struct BallSpec {
    pub center: IwasawaPoint,
    pub radius: f64,
}

impl BallSpec {
    pub fn new(model: &GridModel, center: IwasawaPoint, radius: f64) -> Result<Self> {
        center.check(model.space())?;
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::arg("radius", "must be positive and finite"));
        }
        if !model.contains_ball(&center, radius) {
            return Err(Error::NotContained {
                radius,
                center_s: center.s,
            });
        }
        Ok(BallSpec { center, radius })
    }
}

/// The cells of a ball and their total measure.
#[derive(Debug, Clone, PartialEq)]
pub struct BallCells {
    pub runs: Vec<Run>,
    pub measure: f64,
}

impl BallCells {
    pub fn cell_count(&self) -> usize {
        self.runs.iter().map(|r| r.hi - r.lo).sum()
    }

    pub fn contains(&self, model: &GridModel, idx: usize) -> bool {
        let row = idx / model.n_v();
        let i = idx % model.n_v();
        self.runs.iter().any(|r| r.row == row && (r.lo..r.hi).contains(&i))
    }

    pub fn cells(&self, model: &GridModel) -> impl Iterator<Item = usize> + '_ {
        let nv = model.n_v();
        self.runs
            .iter()
            .flat_map(move |r| (r.lo..r.hi).map(move |i| r.row * nv + i))
    }
}

fn runs_measure(model: &GridModel, runs: &[Run]) -> f64 {
    runs.iter()
        .map(|r| model.slice_cell_measure(model.row_slice(r.row)) * (r.hi - r.lo) as f64)
        .sum()
}

/// Cells whose centres lie in the ball. A ball that contains no cell centre
/// is represented by the cell containing its centre.
pub fn ball_cells(model: &GridModel, b: &BallSpec) -> Result<BallCells> {
    if !model.contains_ball(&b.center, b.radius) {
        return Err(Error::NotContained {
            radius: b.radius,
            center_s: b.center.s,
        });
    }
    let (x, y) = model.point_frac(&b.center);
    let mut runs = model
        .exact_runs(&model.raw_ball(x, y, b.radius))
        .ok_or(Error::NotContained {
            radius: b.radius,
            center_s: b.center.s,
        })?;
    if runs.is_empty() {
        let idx = model.cell_of(&b.center).ok_or(Error::NotContained {
            radius: b.radius,
            center_s: b.center.s,
        })?;
        let (i1, _, _) = model.coords(idx);
        runs.push(Run {
            row: idx / model.n_v(),
            lo: i1,
            hi: i1 + 1,
        });
    }
    let measure = runs_measure(model, &runs);
    Ok(BallCells { runs, measure })
}

/// Nonnegative values on the cells of a model.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    model: Arc<GridModel>,
    values: Vec<f64>,
}

impl FieldGrid {
    pub fn new(model: Arc<GridModel>, values: Vec<f64>) -> Result<Self> {
        if values.len() != model.n_cells() {
            return Err(Error::DimensionMismatch {
                expected: model.n_cells(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::arg("values", "must be finite and nonnegative"));
        }
        Ok(FieldGrid { model, values })
    }

    pub fn zeros(model: Arc<GridModel>) -> Self {
        let n = model.n_cells();
        FieldGrid {
            model,
            values: alloc::vec![0.0; n],
        }
    }

    pub fn constant(model: Arc<GridModel>, c: f64) -> Result<Self> {
        let n = model.n_cells();
        Self::new(model, alloc::vec![c; n])
    }

    /// The indicator of the union of the balls' cell sets.
    pub fn indicator_of_balls(model: Arc<GridModel>, balls: &[BallSpec]) -> Result<Self> {
        let mut f = Self::zeros(model);
        for b in balls {
            let cells = ball_cells(&f.model, b)?;
            for idx in cells.cells(&f.model) {
                f.values[idx] = 1.0;
            }
        }
        Ok(f)
    }

    pub fn model(&self) -> &Arc<GridModel> {
        &self.model
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.model.clone(), self.values.iter().map(|v| v * c).collect())
    }

    pub fn add(&self, other: &FieldGrid) -> Result<Self> {
        if !Arc::ptr_eq(&self.model, &other.model) && *self.model != *other.model {
            return Err(Error::arg("other", "fields live on different grids"));
        }
        Self::new(
            self.model.clone(),
            self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        )
    }

    /// `∫_B f` over a cell set.
    pub fn integrate(&self, cells: &BallCells) -> f64 {
        let nv = self.model.n_v();
        cells
            .runs
            .iter()
            .map(|r| {
                let w = self.model.slice_cell_measure(self.model.row_slice(r.row));
                w * self.values[r.row * nv + r.lo..r.row * nv + r.hi].iter().sum::<f64>()
            })
            .sum()
    }

    /// `(value, cell measure)` of the nonzero cells.
    pub fn samples(&self) -> crate::rearrange::WeightedSamples {
        let entries = self
            .values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v > 0.0)
            .map(|(i, &v)| (v, self.model.cell_measure(i)))
            .collect();
        crate::rearrange::WeightedSamples::new(entries).expect("field values are validated")
    }

    pub(crate) fn prefix(&self) -> Prefix {
        let nv = self.model.n_v();
        let mut data = Vec::with_capacity(self.model.n_rows() * (nv + 1));
        for row in self.values.chunks(nv) {
            let mut acc = 0.0;
            data.push(0.0);
            for &x in row {
                acc += x;
                data.push(acc);
            }
        }
        Prefix { stride: nv + 1, data }
    }
}

/// Per-row prefix sums of field values.
pub(crate) struct Prefix {
    stride: usize,
    data: Vec<f64>,
}

impl Prefix {
    #[inline]
    pub fn range(&self, row: usize, lo: usize, hi: usize) -> f64 {
        let base = row * self.stride;
        self.data[base + hi] - self.data[base + lo]
    }
}

/// The cell set of `B(z, r)` for a cell-centred `z` in slice `jc`, as
/// offsets from the centre cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    pub radius: f64,
    pub center_slice: usize,
    /// `(Δj, Δi₂, lo, hi)` with `Δi₁ ∈ lo..hi`.
    pub runs: Vec<(i32, i32, i32, i32)>,
    pub measure: f64,
    /// `e^{−s_c} sinh r / √2`.
    pub v_reach: f64,
}

impl Stencil {
    /// `None` when `B(z, r)` leaves the box in `s`.
    pub fn new(model: &GridModel, jc: usize, r: f64) -> Option<Self> {
        let s_c = model.s_center(jc);
        if s_c.abs() + r > model.s_half() {
            return None;
        }
        let raw = model.raw_ball([0.0, 0.0], jc as f64, r);
        let mut runs = Vec::with_capacity(raw.len());
        let mut measure = 0.0;
        for rr in &raw {
            runs.push(((rr.j - jc as i64) as i32, rr.i2 as i32, rr.lo as i32, rr.hi as i32));
            measure += model.slice_cell_measure(rr.j as usize) * (rr.hi - rr.lo) as f64;
        }
        Some(Stencil {
            radius: r,
            center_slice: jc,
            runs,
            measure,
            v_reach: math::exp(-s_c) * math::sinh(r) * core::f64::consts::FRAC_1_SQRT_2,
        })
    }

    /// Whether the ball around cell `(i₁, i₂)` of the centre slice lies in
    /// the box.
    pub fn fits(&self, model: &GridModel, i1: usize, i2: usize) -> bool {
        let ok = |i: usize| model.v_center(i).abs() + self.v_reach <= model.v_half();
        ok(i1) && (model.m1() == 1 || ok(i2))
    }

    /// `∫_B f` for the ball centred at `(i₁, i₂, jc)`; the ball must fit.
    pub(crate) fn integral(&self, model: &GridModel, prefix: &Prefix, i1: usize, i2: usize) -> f64 {
        let rps = model.rows_per_slice();
        let mut total = 0.0;
        let mut cur_j = i32::MIN;
        let mut w = 0.0;
        for &(dj, di2, lo, hi) in &self.runs {
            if dj != cur_j {
                cur_j = dj;
                w = model.slice_cell_measure((self.center_slice as i64 + dj as i64) as usize);
            }
            let j = (self.center_slice as i64 + dj as i64) as usize;
            let row = j * rps + (i2 as i64 + di2 as i64) as usize;
            total += w * prefix.range(row, (i1 as i64 + lo as i64) as usize, (i1 as i64 + hi as i64) as usize);
        }
        total
    }

    /// Absolute runs of the ball centred at `(i₁, i₂, jc)`.
    pub fn runs_at(&self, model: &GridModel, i1: usize, i2: usize) -> impl Iterator<Item = Run> + '_ {
        let rps = model.rows_per_slice();
        let jc = self.center_slice as i64;
        self.runs.iter().map(move |&(dj, di2, lo, hi)| Run {
            row: (jc + dj as i64) as usize * rps + (i2 as i64 + di2 as i64) as usize,
            lo: (i1 as i64 + lo as i64) as usize,
            hi: (i1 as i64 + hi as i64) as usize,
        })
    }
}

/// Stencils for every centre slice and every radius of a list.
#[derive(Debug, Clone, PartialEq)]
pub struct StencilTable {
    pub radii: Vec<f64>,
    /// `[k][jc]`.
    table: Vec<Vec<Option<Stencil>>>,
}

impl StencilTable {
    pub fn new(model: &GridModel, radii: &[f64]) -> Result<Self> {
        if radii.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
            return Err(Error::arg("radii", "must be positive and finite"));
        }
        let table = radii
            .iter()
            .map(|&r| crate::par::map_indexed(model.n_s(), |jc| Stencil::new(model, jc, r)))
            .collect();
        Ok(StencilTable {
            radii: radii.to_vec(),
            table,
        })
    }

    pub fn get(&self, k: usize, jc: usize) -> Option<&Stencil> {
        self.table[k][jc].as_ref()
    }

    /// The stencil for radius `k` at the cell, if the ball fits.
    pub fn fitting(&self, model: &GridModel, k: usize, idx: usize) -> Option<&Stencil> {
        let (i1, i2, j) = model.coords(idx);
        self.get(k, j).filter(|st| st.fits(model, i1, i2))
    }
}

/// `r_k = 2^{k/4}` for all `k` with `lo ≤ r_k ≤ hi`.
pub fn quarter_octave_radii(lo: f64, hi: f64) -> Vec<f64> {
    let k0 = libm::ceil(4.0 * libm::log2(lo) - 1e-9) as i32;
    let k1 = libm::floor(4.0 * libm::log2(hi) + 1e-9) as i32;
    (k0..=k1).map(|k| libm::exp2(f64::from(k) / 4.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{distance, iwasawa_ball_measure};
    use alloc::vec;

    fn sp(m1: u32) -> SpaceParams {
        SpaceParams::new(m1, 0).unwrap()
    }

    fn pt(v: Vec<f64>, s: f64) -> IwasawaPoint {
        IwasawaPoint { v, w: vec![], s }
    }

    #[test]
    fn rejects_unsupported_models() {
        assert!(GridModel::new(&SpaceParams::new(2, 1).unwrap(), 1.0, 1.0, 8, 8).is_err());
        assert!(GridModel::new(&sp(3), 1.0, 1.0, 8, 8).is_err());
        assert!(GridModel::new(&sp(1), 0.0, 1.0, 8, 8).is_err());
        assert!(GridModel::new(&sp(1), 1.0, 1.0, 0, 8).is_err());
    }

    #[test]
    fn cell_measures_sum_to_box_measure() {
        for m1 in [1, 2] {
            let s = sp(m1);
            let m = GridModel::new(&s, 1.5, 2.0, 24, 32).unwrap();
            let total: f64 = (0..m.n_cells()).map(|i| m.cell_measure(i)).sum();
            let rho2 = 2.0 * s.rho();
            let exact = libm::pow(3.0, m1 as f64) * (libm::exp(rho2 * 2.0) - libm::exp(-rho2 * 2.0)) / rho2;
            assert!((total / exact - 1.0).abs() < 1e-12);
            assert!((m.total_measure() / exact - 1.0).abs() < 1e-12);
            for i in [0, 17, m.n_cells() - 1] {
                assert_eq!(m.cell_of(&m.cell_point(i)), Some(i));
            }
        }
    }

    #[test]
    fn ball_measure_matches_quadrature_and_improves() {
        let s = sp(1);
        let exact = iwasawa_ball_measure(&s, 1.0).unwrap();
        let err = |n: usize| {
            let m = GridModel::new(&s, 1.0, 1.0, n, n).unwrap();
            let b = BallSpec::new(&m, pt(vec![0.0], 0.0), 1.0).unwrap();
            (ball_cells(&m, &b).unwrap().measure / exact - 1.0).abs()
        };
        let (e128, e256) = (err(128), err(256));
        assert!(e256 < 0.03, "relative error {e256}");
        assert!(e256 < e128);

        let s2 = sp(2);
        let m = GridModel::new(&s2, 1.0, 1.0, 96, 96).unwrap();
        let b = BallSpec::new(&m, pt(vec![0.0, 0.0], 0.0), 1.0).unwrap();
        let rel = ball_cells(&m, &b).unwrap().measure / iwasawa_ball_measure(&s2, 1.0).unwrap() - 1.0;
        assert!(rel.abs() < 0.03, "relative error {rel}");
    }

    #[test]
    fn ball_measure_is_translation_invariant() {
        let s = sp(1);
        let m = GridModel::new(&s, 2.0, 1.0, 512, 256).unwrap();
        let base = ball_cells(&m, &BallSpec::new(&m, pt(vec![0.0], 0.0), 1.0).unwrap())
            .unwrap()
            .measure;
        for u in [0.013, 0.25, 0.7, -1.1] {
            let moved = ball_cells(&m, &BallSpec::new(&m, pt(vec![u], 0.0), 1.0).unwrap())
                .unwrap()
                .measure;
            assert!((moved / base - 1.0).abs() < 0.01, "shift {u}: {moved} vs {base}");
        }
    }

    #[test]
    fn ball_cells_agree_with_distance_oracle() {
        for (m1, n) in [(1, 64), (2, 24)] {
            let s = sp(m1);
            let m = GridModel::new(&s, 1.5, 1.5, n, n).unwrap();
            let c = pt(vec![0.21; m1 as usize], -0.17);
            let b = BallSpec::new(&m, c.clone(), 0.9).unwrap();
            let cells = ball_cells(&m, &b).unwrap();
            let mut count = 0;
            for idx in 0..m.n_cells() {
                let d = distance(&s, &c, &m.cell_point(idx)).unwrap();
                let inside = cells.contains(&m, idx);
                count += usize::from(inside);
                if inside != (d < 0.9) {
                    assert!((d - 0.9).abs() < 1e-9, "cell {idx} at distance {d}");
                }
            }
            assert_eq!(count, cells.cell_count());
        }
    }

    #[test]
    fn tiny_ball_is_its_containing_cell() {
        let m = GridModel::new(&sp(1), 1.0, 1.0, 8, 8).unwrap();
        let c = pt(vec![0.1], 0.05);
        let cells = ball_cells(&m, &BallSpec::new(&m, c.clone(), 1e-3).unwrap()).unwrap();
        assert_eq!(cells.cell_count(), 1);
        let idx = m.cell_of(&c).unwrap();
        assert!(cells.contains(&m, idx));
        assert_eq!(cells.measure, m.cell_measure(idx));
    }

    #[test]
    fn uncontained_balls_are_rejected() {
        let m = GridModel::new(&sp(1), 1.0, 1.0, 8, 8).unwrap();
        assert!(matches!(
            BallSpec::new(&m, pt(vec![0.0], 0.5), 0.6),
            Err(Error::NotContained { .. })
        ));
        assert!(BallSpec::new(&m, pt(vec![0.9], 0.0), 0.3).is_err());
        assert!(BallSpec::new(&m, pt(vec![0.0, 0.0], 0.0), 0.3).is_err());
        assert!(BallSpec::new(&m, pt(vec![0.0], 0.0), -1.0).is_err());
    }

    #[test]
    fn stencils_reproduce_cell_centred_balls() {
        for (m1, n) in [(1, 40), (2, 16)] {
            let m = GridModel::new(&sp(m1), 2.0, 1.5, n, n).unwrap();
            let table = StencilTable::new(&m, &[0.5, 1.0]).unwrap();
            for idx in (0..m.n_cells()).step_by(7) {
                for k in 0..2 {
                    let r = table.radii[k];
                    let via_spec = BallSpec::new(&m, m.cell_point(idx), r).ok();
                    let via_stencil = table.fitting(&m, k, idx);
                    assert_eq!(via_spec.is_some(), via_stencil.is_some());
                    if let (Some(b), Some(st)) = (via_spec, via_stencil) {
                        let cells = ball_cells(&m, &b).unwrap();
                        let (i1, i2, _) = m.coords(idx);
                        let runs: Vec<Run> = st.runs_at(&m, i1, i2).collect();
                        assert_eq!(runs, cells.runs);
                        assert_eq!(st.measure, cells.measure);
                    }
                }
            }
        }
    }

    #[test]
    fn field_validation_and_integrals() {
        let m = GridModel::new(&sp(1), 1.0, 1.0, 16, 16).unwrap();
        assert!(FieldGrid::new(m.clone(), vec![0.0; 3]).is_err());
        let mut bad = vec![0.0; m.n_cells()];
        bad[4] = -1.0;
        assert!(FieldGrid::new(m.clone(), bad).is_err());
        let one = FieldGrid::constant(m.clone(), 2.0).unwrap();
        let b = BallSpec::new(&m, pt(vec![0.0], 0.0), 0.7).unwrap();
        let cells = ball_cells(&m, &b).unwrap();
        assert!((one.integrate(&cells) - 2.0 * cells.measure).abs() < 1e-14);
        let ind = FieldGrid::indicator_of_balls(m.clone(), &[b]).unwrap();
        assert!((ind.samples().total_mass() - cells.measure).abs() < 1e-14);
    }

    #[test]
    fn quarter_octave_radii_examples() {
        let r = quarter_octave_radii(1.0, 2.0);
        assert_eq!(r.len(), 5);
        assert_eq!(r[0], 1.0);
        assert_eq!(r[4], 2.0);
        assert!(quarter_octave_radii(1.1, 1.15).is_empty());
    }
}
