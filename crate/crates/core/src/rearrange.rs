//! Nonincreasing rearrangements and Lorentz quasinorms on finite measure
//! spaces.
//!
//! Functions are carried as finitely many `(value, weight)` atoms. The
//! rearrangement `f*` is a nonincreasing step function on `(0, M]` with
//! `|{f > λ}| = |{f* > λ}|` for every `λ ≥ 0`, and
//! `‖f‖_{p,q} = (∫₀^M [t^{1/p} f*(t)]^q dt/t)^{1/q}`.

use alloc::vec::Vec;

use crate::kernel::RadialFunction;
use crate::math;
use crate::{Error, Result};

/// Nonnegative values with positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSamples {
    entries: Vec<(f64, f64)>,
}

impl WeightedSamples {
    pub fn new(entries: Vec<(f64, f64)>) -> Result<Self> {
        for &(v, w) in &entries {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::arg(
                    "values",
                    alloc::format!("must be finite and nonnegative (got {v})"),
                ));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::arg(
                    "weights",
                    alloc::format!("must be finite and positive (got {w})"),
                ));
            }
        }
        Ok(WeightedSamples { entries })
    }

    /// Values with one common weight.
    pub fn uniform(values: &[f64], weight: f64) -> Result<Self> {
        Self::new(values.iter().map(|&v| (v, weight)).collect())
    }

    pub fn entries(&self) -> &[(f64, f64)] {
        &self.entries
    }

    pub fn total_mass(&self) -> f64 {
        self.entries.iter().map(|e| e.1).sum()
    }

    /// `μ{f > λ}`.
    pub fn distribution(&self, lambda: f64) -> f64 {
        self.entries.iter().filter(|e| e.0 > lambda).map(|e| e.1).sum()
    }

    pub fn integral(&self) -> f64 {
        self.entries.iter().map(|e| e.0 * e.1).sum()
    }
}

/// A nonincreasing step function on `(0, M]`: `values[i]` on
/// `[breakpoints[i−1], breakpoints[i])` with `breakpoints[−1] = 0` and
/// `breakpoints.last() = M`.
///
/// Adjacent steps always carry distinct values.
#[derive(Debug, Clone, PartialEq)]
pub struct StepProfile {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl StepProfile {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breakpoints.len() != values.len() {
            return Err(Error::arg("breakpoints", "need one breakpoint per value"));
        }
        let mut prev = 0.0;
        for &b in &breakpoints {
            if !(b > prev) || !b.is_finite() {
                return Err(Error::arg(
                    "breakpoints",
                    "must be finite, positive and strictly increasing",
                ));
            }
            prev = b;
        }
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::arg("values", "must be finite and nonnegative"));
        }
        if values.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::arg("values", "must be nonincreasing"));
        }
        Ok(Self::canonical(breakpoints, values))
    }

    /// The zero function on `(0, mass]`, or the empty profile for `mass = 0`.
    pub fn zero(mass: f64) -> Self {
        if mass > 0.0 {
            StepProfile {
                breakpoints: alloc::vec![mass],
                values: alloc::vec![0.0],
            }
        } else {
            StepProfile {
                breakpoints: Vec::new(),
                values: Vec::new(),
            }
        }
    }

    fn canonical(breakpoints: Vec<f64>, values: Vec<f64>) -> Self {
        let mut b_out: Vec<f64> = Vec::with_capacity(breakpoints.len());
        let mut v_out: Vec<f64> = Vec::with_capacity(values.len());
        for (b, v) in breakpoints.into_iter().zip(values) {
            if v_out.last() == Some(&v) {
                *b_out.last_mut().unwrap() = b;
            } else {
                b_out.push(b);
                v_out.push(v);
            }
        }
        StepProfile {
            breakpoints: b_out,
            values: v_out,
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn total_mass(&self) -> f64 {
        self.breakpoints.last().copied().unwrap_or(0.0)
    }

    /// `(a, b, value)` for each step.
    pub fn steps(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.breakpoints
            .iter()
            .enumerate()
            .map(move |(i, &b)| (if i == 0 { 0.0 } else { self.breakpoints[i - 1] }, b, self.values[i]))
    }

    /// Right-continuous evaluation; `0` outside `(0, M)`.
    pub fn eval(&self, x: f64) -> f64 {
        if !(x > 0.0) {
            return self.values.first().copied().unwrap_or(0.0);
        }
        let i = self.breakpoints.partition_point(|&b| b <= x);
        self.values.get(i).copied().unwrap_or(0.0)
    }

    /// `|{x : f*(x) > λ}|`.
    pub fn distribution(&self, lambda: f64) -> f64 {
        self.steps().filter(|s| s.2 > lambda).map(|s| s.1).fold(0.0, f64::max)
    }

    pub fn integral(&self) -> f64 {
        self.steps().map(|(a, b, v)| v * (b - a)).sum()
    }

    pub fn scaled(&self, c: f64) -> Self {
        if c == 0.0 {
            return Self::zero(self.total_mass());
        }
        StepProfile {
            breakpoints: self.breakpoints.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// Pointwise sum of two nonincreasing profiles on the common refinement.
    pub fn add(&self, other: &StepProfile) -> Self {
        let mut breaks = merge_breaks(&[self.breakpoints.as_slice(), other.breakpoints.as_slice()]);
        breaks.retain(|&b| b > 0.0);
        let mut prev = 0.0;
        let values = breaks
            .iter()
            .map(|&b| {
                let mid = 0.5 * (prev + b);
                prev = b;
                self.eval(mid) + other.eval(mid)
            })
            .collect();
        Self::canonical(breaks, values)
    }

    /// `(∫₀^M [t^{1/p} f*(t)]^q dt/t)^{1/q}`, or `sup_t t^{1/p} f*(t)` for
    /// `q = ∞`, integrated in closed form on each step.
    pub fn lorentz_norm(&self, p: f64, q: f64) -> Result<f64> {
        lorentz_norm(self, p, q)
    }
}

/// Sorted union of several breakpoint lists, with near-duplicates merged.
fn merge_breaks(lists: &[&[f64]]) -> Vec<f64> {
    let mut all: Vec<f64> = lists.iter().flat_map(|l| l.iter().copied()).collect();
    all.sort_by(f64::total_cmp);
    let scale = all.last().copied().unwrap_or(0.0).abs().max(f64::MIN_POSITIVE);
    let mut out: Vec<f64> = Vec::with_capacity(all.len());
    for b in all {
        match out.last_mut() {
            Some(last) if b - *last <= 1e-13 * scale => *last = b,
            _ => out.push(b),
        }
    }
    out
}

/// The nonincreasing rearrangement of `f`.
///
/// Ties are ordered by original index; the output does not depend on the
/// tie order since tied atoms merge into one step.
pub fn decreasing_rearrangement(f: &WeightedSamples) -> StepProfile {
    let mut idx: Vec<usize> = (0..f.entries.len()).collect();
    idx.sort_by(|&i, &j| f.entries[j].0.total_cmp(&f.entries[i].0).then(i.cmp(&j)));
    let mut breaks = Vec::with_capacity(idx.len());
    let mut values = Vec::with_capacity(idx.len());
    let mut acc = 0.0;
    let mut k = 0;
    while k < idx.len() {
        let v = f.entries[idx[k]].0;
        // accumulate the whole tie group before emitting a breakpoint
        while k < idx.len() && f.entries[idx[k]].0 == v {
            acc += f.entries[idx[k]].1;
            k += 1;
        }
        breaks.push(acc);
        values.push(v);
    }
    StepProfile {
        breakpoints: breaks,
        values,
    }
}

/// Lorentz quasinorm of a rearranged function.
pub fn lorentz_norm(p: &StepProfile, p_exp: f64, q_exp: f64) -> Result<f64> {
    if !(p_exp > 0.0) || !p_exp.is_finite() {
        return Err(Error::arg("p", "must be in (0, ∞)"));
    }
    if !(q_exp > 0.0) {
        return Err(Error::arg("q", "must be in (0, ∞]"));
    }
    let inv_p = 1.0 / p_exp;
    if q_exp == f64::INFINITY {
        return Ok(p.steps().map(|(_, b, v)| v * math::powf(b, inv_p)).fold(0.0, f64::max));
    }
    let e = q_exp * inv_p;
    let sum: f64 = p
        .steps()
        .filter(|s| s.2 > 0.0)
        .map(|(a, b, v)| math::powf(v, q_exp) * (math::powf(b, e) - math::powf(a, e)) / e)
        .sum();
    Ok(if q_exp == 1.0 {
        sum
    } else {
        math::powf(sum, 1.0 / q_exp)
    })
}

/// `‖f‖_{2,∞} = sup_λ λ·μ{f > λ}^{1/2}`.
pub fn weak_l2_norm(f: &WeightedSamples) -> f64 {
    decreasing_rearrangement(f)
        .steps()
        .map(|(_, b, v)| v * math::sqrt(b))
        .fold(0.0, f64::max)
}

/// `‖f‖_{2,1} = 2 ∫₀^∞ μ{f > λ}^{1/2} dλ`.
pub fn l21_norm(f: &WeightedSamples) -> f64 {
    let p = decreasing_rearrangement(f);
    p.steps()
        .map(|(a, b, v)| 2.0 * v * (math::sqrt(b) - math::sqrt(a)))
        .sum()
}

/// A nonnegative matrix over `U × V` with positive row and column weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    row_weights: Vec<f64>,
    col_weights: Vec<f64>,
}

impl WeightedMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>, row_weights: Vec<f64>, col_weights: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols || row_weights.len() != rows || col_weights.len() != cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        if data.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::arg("data", "must be finite and nonnegative"));
        }
        if row_weights
            .iter()
            .chain(&col_weights)
            .any(|w| !(*w > 0.0) || !w.is_finite())
        {
            return Err(Error::arg("weights", "must be finite and positive"));
        }
        Ok(WeightedMatrix {
            rows,
            cols,
            data,
            row_weights,
            col_weights,
        })
    }

    /// Square matrix over `n` uniform probability atoms on each side.
    pub fn uniform(n: usize, data: Vec<f64>) -> Result<Self> {
        let w = 1.0 / n as f64;
        Self::new(n, n, data, alloc::vec![w; n], alloc::vec![w; n])
    }

    /// From nested rows with unit weights.
    pub fn from_rows_unit(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::arg("rows", "ragged matrix"));
        }
        Self::new(r, c, rows.concat(), alloc::vec![1.0; r], alloc::vec![1.0; c])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row_weights(&self) -> &[f64] {
        &self.row_weights
    }

    pub fn col_weights(&self) -> &[f64] {
        &self.col_weights
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// `∫∫ a`.
    pub fn integral(&self) -> f64 {
        (0..self.rows)
            .map(|i| {
                self.row_weights[i]
                    * self
                        .row(i)
                        .iter()
                        .zip(&self.col_weights)
                        .map(|(a, w)| a * w)
                        .sum::<f64>()
            })
            .sum()
    }

    fn row_samples(&self, i: usize) -> WeightedSamples {
        WeightedSamples {
            entries: self
                .row(i)
                .iter()
                .copied()
                .zip(self.col_weights.iter().copied())
                .collect(),
        }
    }

    /// All entries with product weights.
    pub fn as_samples(&self) -> WeightedSamples {
        let mut entries = Vec::with_capacity(self.data.len());
        for i in 0..self.rows {
            for j in 0..self.cols {
                entries.push((self.get(i, j), self.row_weights[i] * self.col_weights[j]));
            }
        }
        WeightedSamples { entries }
    }
}

/// A step function on `(0, X] × (0, Y]`, nonincreasing in both variables.
/// `values[i][j]` is the value on x-cell `i` and y-cell `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct DoubleProfile {
    pub x_breaks: Vec<f64>,
    pub y_breaks: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

fn cell_bounds(breaks: &[f64], i: usize) -> (f64, f64) {
    (if i == 0 { 0.0 } else { breaks[i - 1] }, breaks[i])
}

impl DoubleProfile {
    pub fn x_mass(&self) -> f64 {
        self.x_breaks.last().copied().unwrap_or(0.0)
    }

    pub fn y_mass(&self) -> f64 {
        self.y_breaks.last().copied().unwrap_or(0.0)
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let i = self.x_breaks.partition_point(|&b| b <= x);
        let j = self.y_breaks.partition_point(|&b| b <= y);
        if i < self.x_breaks.len() && j < self.y_breaks.len() {
            self.values[i][j]
        } else {
            0.0
        }
    }

    /// `∫₀^X ∫₀^Y a**`, with partial cells at the edges.
    pub fn rectangle_integral(&self, x: f64, y: f64) -> f64 {
        let mut total = 0.0;
        for (i, row) in self.values.iter().enumerate() {
            let (x0, x1) = cell_bounds(&self.x_breaks, i);
            let wx = (x1.min(x) - x0).max(0.0);
            if wx == 0.0 {
                break;
            }
            for (j, &v) in row.iter().enumerate() {
                let (y0, y1) = cell_bounds(&self.y_breaks, j);
                let wy = (y1.min(y) - y0).max(0.0);
                if wy == 0.0 {
                    break;
                }
                total += v * wx * wy;
            }
        }
        total
    }

    pub fn integral(&self) -> f64 {
        self.rectangle_integral(self.x_mass(), self.y_mass())
    }

    /// `∫∫ F*(x) H*(y) a**(x, y) dx dy` on the common refinement.
    pub fn integrate_against(&self, f: &StepProfile, h: &StepProfile) -> f64 {
        let xs = merge_breaks(&[self.x_breaks.as_slice(), f.breakpoints()]);
        let ys = merge_breaks(&[self.y_breaks.as_slice(), h.breakpoints()]);
        let hy: Vec<(f64, f64, f64)> = ys
            .iter()
            .enumerate()
            .map(|(j, &y1)| {
                let y0 = if j == 0 { 0.0 } else { ys[j - 1] };
                let mid = 0.5 * (y0 + y1);
                (mid, y1 - y0, h.eval(mid))
            })
            .filter(|c| c.2 > 0.0)
            .collect();
        let mut total = 0.0;
        let mut x0 = 0.0;
        for &x1 in &xs {
            let mx = 0.5 * (x0 + x1);
            let fx = f.eval(mx);
            if fx > 0.0 {
                let mut inner = 0.0;
                for &(my, wy, hv) in &hy {
                    inner += hv * wy * self.eval(mx, my);
                }
                total += fx * (x1 - x0) * inner;
            }
            x0 = x1;
        }
        total
    }

    /// `values` are nonincreasing along both axes.
    pub fn is_bimonotone(&self) -> bool {
        let rows_ok = self.values.iter().all(|r| r.windows(2).all(|w| w[1] <= w[0]));
        let cols_ok = self
            .values
            .windows(2)
            .all(|p| p[0].iter().zip(&p[1]).all(|(a, b)| b <= a));
        rows_ok && cols_ok
    }
}

/// Rearranges over rows a family of per-row profiles sharing one variable.
fn rearrange_columns(rows: &[StepProfile], row_weights: &[f64]) -> DoubleProfile {
    let lists: Vec<&[f64]> = rows.iter().map(StepProfile::breakpoints).collect();
    let y_breaks = merge_breaks(&lists);
    let mut columns: Vec<StepProfile> = Vec::with_capacity(y_breaks.len());
    let mut y0 = 0.0;
    for &y1 in &y_breaks {
        let mid = 0.5 * (y0 + y1);
        let samples = WeightedSamples {
            entries: rows.iter().zip(row_weights).map(|(r, &w)| (r.eval(mid), w)).collect(),
        };
        columns.push(decreasing_rearrangement(&samples));
        y0 = y1;
    }
    let col_lists: Vec<&[f64]> = columns.iter().map(StepProfile::breakpoints).collect();
    let x_breaks = merge_breaks(&col_lists);
    let mut values = Vec::with_capacity(x_breaks.len());
    let mut x0 = 0.0;
    for &x1 in &x_breaks {
        let mid = 0.5 * (x0 + x1);
        values.push(columns.iter().map(|c| c.eval(mid)).collect());
        x0 = x1;
    }
    DoubleProfile {
        x_breaks,
        y_breaks,
        values,
    }
}

/// `a**`: each row is rearranged in the column variable, then each
/// resulting column is rearranged in the row variable.
pub fn double_rearrangement(a: &WeightedMatrix) -> DoubleProfile {
    let rows: Vec<StepProfile> = (0..a.rows)
        .map(|i| decreasing_rearrangement(&a.row_samples(i)))
        .collect();
    rearrange_columns(&rows, &a.row_weights)
}

/// `(∫_D ∫_E a, ∫₀^{|D|} ∫₀^{|E|} a**)` for row set `D` and column set `E`.
pub fn rectangle_domination_check(a: &WeightedMatrix, d: &[usize], e: &[usize]) -> Result<(f64, f64)> {
    if d.iter().any(|&i| i >= a.rows) || e.iter().any(|&j| j >= a.cols) {
        return Err(Error::arg("D/E", "index out of range"));
    }
    let mut lhs = 0.0;
    for &i in d {
        for &j in e {
            lhs += a.get(i, j) * a.row_weights[i] * a.col_weights[j];
        }
    }
    let dm: f64 = d.iter().map(|&i| a.row_weights[i]).sum();
    let em: f64 = e.iter().map(|&j| a.col_weights[j]).sum();
    let rhs = if d.is_empty() || e.is_empty() {
        0.0
    } else {
        double_rearrangement(a).rectangle_integral(dm, em)
    };
    Ok((lhs, rhs))
}

/// Both sides of the exponential-weight embedding for an indicator `g` on
/// `ℝ₊` and rate `δ ≠ 0`:
/// `lhs = |δ|⁻¹ ∫ g`, `rhs = (2/|δ|)^{1/2} (|δ|⁻¹ ∫ g(s) s ds)^{1/2}`.
///
/// `lhs ≤ rhs` always, with equality exactly for `g = χ_[0, λ]`.
pub fn exp_embedding_check(g: &RadialFunction, delta: f64) -> Result<(f64, f64)> {
    if !(delta != 0.0) || !delta.is_finite() {
        return Err(Error::arg("delta", "must be finite and nonzero"));
    }
    if !g.is_indicator() {
        return Err(Error::arg("g", "must be {0,1}-valued"));
    }
    let d = delta.abs();
    let (mass, moment) = g.steps().filter(|s| s.2 > 0.0).fold((0.0, 0.0), |(m, mo), (a, b, _)| {
        (m + (b - a), mo + 0.5 * (b - a) * (b + a))
    });
    Ok((mass / d, math::sqrt(2.0 / d) * math::sqrt(moment / d)))
}

/// Both sides of the row-wise `L^{2,1}` embedding:
/// `lhs = (Σ_u w_u ‖H(u, ·)‖²_{2,1})^{1/2}` and `norm = ‖H‖_{L^{2,1}(U×V)}`.
pub fn row_l21_embedding_check(h: &WeightedMatrix) -> (f64, f64) {
    let lhs_sq: f64 = (0..h.rows)
        .map(|i| {
            let n = l21_norm(&h.row_samples(i));
            h.row_weights[i] * n * n
        })
        .sum();
    (math::sqrt(lhs_sq), l21_norm(&h.as_samples()))
}

/// The radial profile of a function on `K × (N̄A)`.
///
/// `values[k][c]` is the function on atom `k` of `K` (weight
/// `k_weights[k]`) and cell `c` of the `N̄A` grid (weight `cell_weights[c]`,
/// the measure `e^{2ρs} dv ds` of the cell). Each `k`-slice is rearranged
/// over the cells, giving `f̃(k, r)`; each `r` is rearranged over `K`, giving
/// `F̃(x, r)`; then `F*(x) = ½ ∫₀^∞ F̃(x, r) r^{−1/2} dr`.
pub fn general_radial_profile(values: &[Vec<f64>], k_weights: &[f64], cell_weights: &[f64]) -> Result<StepProfile> {
    if values.len() != k_weights.len() {
        return Err(Error::DimensionMismatch {
            expected: k_weights.len(),
            got: values.len(),
        });
    }
    let mut rows = Vec::with_capacity(values.len());
    for row in values {
        if row.len() != cell_weights.len() {
            return Err(Error::DimensionMismatch {
                expected: cell_weights.len(),
                got: row.len(),
            });
        }
        let s = WeightedSamples::new(row.iter().copied().zip(cell_weights.iter().copied()).collect())?;
        rows.push(decreasing_rearrangement(&s));
    }
    if k_weights.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::arg("k_weights", "must be positive"));
    }
    let k_mass: f64 = k_weights.iter().sum();
    let dp = rearrange_columns(&rows, k_weights);
    if dp.x_breaks.is_empty() {
        return Ok(StepProfile::zero(k_mass));
    }
    let mut out = Vec::with_capacity(dp.x_breaks.len());
    for row in &dp.values {
        let mut acc = 0.0;
        for (j, &v) in row.iter().enumerate() {
            if v > 0.0 {
                let (r0, r1) = cell_bounds(&dp.y_breaks, j);
                acc += v * (math::sqrt(r1) - math::sqrt(r0));
            }
        }
        out.push(acc);
    }
    Ok(StepProfile::canonical(dp.x_breaks, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn ws(pairs: &[(f64, f64)]) -> WeightedSamples {
        WeightedSamples::new(pairs.to_vec()).unwrap()
    }

    #[test]
    fn rearrangement_examples() {
        let p = decreasing_rearrangement(&ws(&[(3.0, 2.0)]));
        assert_eq!((p.breakpoints(), p.values()), (&[2.0][..], &[3.0][..]));
        let p = decreasing_rearrangement(&ws(&[(1.0, 1.0), (2.0, 1.0)]));
        assert_eq!((p.breakpoints(), p.values()), (&[1.0, 2.0][..], &[2.0, 1.0][..]));
        assert_eq!(p.eval(0.5), 2.0);
        assert_eq!(p.eval(1.0), 1.0);
        assert_eq!(p.eval(2.0), 0.0);
        let tied = decreasing_rearrangement(&ws(&[(1.0, 0.5), (1.0, 0.25), (0.0, 1.0)]));
        assert_eq!(tied.breakpoints(), &[0.75, 1.75]);
    }

    #[test]
    fn lorentz_examples() {
        let ind = StepProfile::new(vec![4.0], vec![1.0]).unwrap();
        assert!((ind.lorentz_norm(2.0, 1.0).unwrap() - 4.0).abs() < 1e-15);
        assert!((ind.lorentz_norm(2.0, f64::INFINITY).unwrap() - 2.0).abs() < 1e-15);
        let two = StepProfile::new(vec![1.0, 4.0], vec![2.0, 1.0]).unwrap();
        assert!((two.lorentz_norm(2.0, f64::INFINITY).unwrap() - 2.0).abs() < 1e-15);
        // L^{p,p} is L^p: ‖f‖_2² = 4·1 + 1·3
        assert!((two.lorentz_norm(2.0, 2.0).unwrap() - 7f64.sqrt()).abs() < 1e-14);
        assert!(two.lorentz_norm(0.0, 1.0).is_err());
        assert!(two.lorentz_norm(2.0, 0.0).is_err());
        assert!(StepProfile::new(vec![1.0, 2.0], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn weak_norm_examples() {
        assert!((weak_l2_norm(&ws(&[(1.0, 9.0)])) - 3.0).abs() < 1e-15);
        let f = ws(&[(3.0, 0.2), (1.0, 2.0), (0.5, 5.0)]);
        let g = ws(&[(6.0, 0.2), (2.0, 2.0), (1.0, 5.0)]);
        assert!((weak_l2_norm(&g) - 2.0 * weak_l2_norm(&f)).abs() < 1e-14);
    }

    #[test]
    fn double_rearrangement_examples() {
        let a = WeightedMatrix::uniform(2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let d = double_rearrangement(&a);
        assert_eq!(d.x_breaks, vec![1.0]);
        assert_eq!(d.y_breaks, vec![0.5, 1.0]);
        assert_eq!(d.values, vec![vec![1.0, 0.0]]);
        let (lhs, rhs) = rectangle_domination_check(&a, &[0], &[0]).unwrap();
        assert!((lhs - 0.25).abs() < 1e-16 && (rhs - 0.25).abs() < 1e-16);
        assert_eq!(rectangle_domination_check(&a, &[], &[0]).unwrap(), (0.0, 0.0));
        let c = double_rearrangement(&WeightedMatrix::uniform(3, vec![2.5; 9]).unwrap());
        assert_eq!(c.values, vec![vec![2.5]]);
    }

    #[test]
    fn exp_embedding_examples() {
        let (l, r) = exp_embedding_check(&RadialFunction::indicator(0.0, 1.0).unwrap(), 1.0).unwrap();
        assert!((l - 1.0).abs() < 1e-15 && (r - 1.0).abs() < 1e-15);
        let (l, r) = exp_embedding_check(&RadialFunction::indicator(1.0, 2.0).unwrap(), 1.0).unwrap();
        assert!((l - 1.0).abs() < 1e-15 && (r - 3f64.sqrt()).abs() < 1e-15);
        let (l, r) = exp_embedding_check(&RadialFunction::indicator(0.0, 3.0).unwrap(), -0.25).unwrap();
        assert!((l / r - 1.0).abs() < 1e-15);
        assert!(exp_embedding_check(&RadialFunction::indicator(0.0, 1.0).unwrap(), 0.0).is_err());
    }

    /// `‖f‖_{L¹(e^{δt}dt)}` against `‖f‖_{L^{2,1}(e^{2δt}dt)}` for an
    /// indicator of a union of t-intervals, integrated directly in t.
    #[test]
    fn substituted_form_matches_the_exponential_measures() {
        for &delta in &[1.0f64, 0.5, -2.0] {
            let t_intervals = [(-1.0f64, 0.3), (0.9, 1.4)];
            let l1: f64 = t_intervals
                .iter()
                .map(|&(a, b)| ((delta * b).exp() - (delta * a).exp()) / delta)
                .map(f64::abs)
                .sum();
            let m2: f64 = t_intervals
                .iter()
                .map(|&(a, b)| ((2.0 * delta * b).exp() - (2.0 * delta * a).exp()) / (2.0 * delta))
                .map(f64::abs)
                .sum();
            let s_iv: Vec<(f64, f64)> = t_intervals
                .iter()
                .map(|&(a, b)| {
                    let (x, y) = ((delta * a).exp(), (delta * b).exp());
                    (x.min(y), x.max(y))
                })
                .collect();
            let (lhs, rhs) = exp_embedding_check(&RadialFunction::union_of(&s_iv).unwrap(), delta).unwrap();
            assert!((lhs - l1).abs() < 1e-12);
            // ‖χ‖_{2,1} = 2 m^{1/2}, so rhs = C_δ·‖χ‖_{2,1} with C_δ = (2|δ|)^{−1/2}
            let c_delta = 1.0 / (2.0 * delta.abs()).sqrt();
            assert!((rhs - c_delta * 2.0 * m2.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn row_embedding_examples() {
        let one = WeightedMatrix::from_rows_unit(&[vec![1.0]]).unwrap();
        let (l, n) = row_l21_embedding_check(&one);
        assert!((l - 2.0).abs() < 1e-15 && (n - 2.0).abs() < 1e-15);
        let pair = WeightedMatrix::from_rows_unit(&[vec![1.0, 1.0]]).unwrap();
        let (l, n) = row_l21_embedding_check(&pair);
        assert!((l - 8f64.sqrt()).abs() < 1e-14 && (n - 8f64.sqrt()).abs() < 1e-14);
        let diag = WeightedMatrix::from_rows_unit(&[vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let (l, n) = row_l21_embedding_check(&diag);
        assert!((l - 20f64.sqrt()).abs() < 1e-14);
        assert!((n - (2.0 + 2.0 * 2f64.sqrt())).abs() < 1e-14);
    }

    #[test]
    fn radial_profile_of_indicators_is_root_mass() {
        // k-slices of masses 0.5, 2.0, 0 and 1.25 under cell weights
        let cells = [0.25, 0.25, 0.75, 1.0];
        let f = vec![
            vec![1.0, 1.0, 0.0, 0.0],
            vec![0.0, 1.0, 1.0, 1.0],
            vec![0.0; 4],
            vec![1.0, 0.0, 0.0, 1.0],
        ];
        let kw = [0.25; 4];
        let p = general_radial_profile(&f, &kw, &cells).unwrap();
        let masses: Vec<f64> = f
            .iter()
            .map(|r| r.iter().zip(&cells).map(|(a, w)| a * w).sum::<f64>())
            .collect();
        let direct = decreasing_rearrangement(
            &WeightedSamples::uniform(&masses.iter().map(|m| m.sqrt()).collect::<Vec<_>>(), 0.25).unwrap(),
        );
        for x in [0.1, 0.3, 0.6, 0.9] {
            assert!((p.eval(x) - direct.eval(x)).abs() < 1e-10);
        }
        let zero = general_radial_profile(&[vec![0.0; 4], vec![0.0; 4]], &[0.5, 0.5], &cells).unwrap();
        assert!(zero.values().iter().all(|&v| v == 0.0));
    }

    fn samples() -> impl Strategy<Value = WeightedSamples> {
        prop::collection::vec((prop_oneof![Just(0.0), 0.0..5.0f64, Just(1.0)], 0.01..2.0f64), 1..40)
            .prop_map(|e| WeightedSamples::new(e).unwrap())
    }

    fn matrix(max: usize) -> impl Strategy<Value = WeightedMatrix> {
        (1..=max, 1..=max).prop_flat_map(|(r, c)| {
            (
                prop::collection::vec(prop_oneof![Just(0.0), 0.0..3.0f64], r * c),
                prop::collection::vec(0.05..1.0f64, r),
                prop::collection::vec(0.05..1.0f64, c),
            )
                .prop_map(move |(d, rw, cw)| WeightedMatrix::new(r, c, d, rw, cw).unwrap())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        #[test]
        fn distribution_is_preserved(f in samples()) {
            let p = decreasing_rearrangement(&f);
            for i in 0..100 {
                let lambda = 5.0 * f64::from(i) / 100.0;
                prop_assert!((f.distribution(lambda) - p.distribution(lambda)).abs() <= 1e-12 * f.total_mass());
            }
            prop_assert!((f.integral() - p.integral()).abs() <= 1e-12 * f.integral().max(1.0));
        }

        #[test]
        fn tie_order_does_not_matter(f in samples(), seed in any::<u64>()) {
            let mut e = f.entries().to_vec();
            let n = e.len();
            let mut x = seed | 1;
            for i in (1..n).rev() {
                x ^= x << 13; x ^= x >> 7; x ^= x << 17;
                e.swap(i, (x % (i as u64 + 1)) as usize);
            }
            let a = decreasing_rearrangement(&f);
            let b = decreasing_rearrangement(&WeightedSamples::new(e).unwrap());
            prop_assert_eq!(a.values(), b.values());
            for (x, y) in a.breakpoints().iter().zip(b.breakpoints()) {
                prop_assert!((x - y).abs() <= 1e-12 * f.total_mass());
            }
        }

        #[test]
        fn weak_norm_is_the_sup_over_levels(f in samples()) {
            let direct = (0..1000)
                .map(|i| {
                    let lambda = 5.0 * f64::from(i) / 1000.0;
                    lambda * f.distribution(lambda).sqrt()
                })
                .fold(0.0, f64::max);
            let w = weak_l2_norm(&f);
            prop_assert!(w >= direct - 1e-12);
            // the sup is attained as λ increases to one of the values
            let exact = f
                .entries()
                .iter()
                .map(|&(v, _)| v * f.entries().iter().filter(|e| e.0 >= v).map(|e| e.1).sum::<f64>().sqrt())
                .fold(0.0, f64::max);
            prop_assert!((w - exact).abs() <= 1e-9 * w.max(1.0));
        }

        #[test]
        fn lorentz_is_homogeneous_and_monotone(f in samples(), c in 0.0..4.0f64, p in 0.5..4.0f64, q in 0.5..4.0f64) {
            let a = decreasing_rearrangement(&f);
            let n = a.lorentz_norm(p, q).unwrap();
            prop_assert!((a.scaled(c).lorentz_norm(p, q).unwrap() - c * n).abs() <= 1e-10 * (c * n).max(1e-300));
            let bigger = WeightedSamples::new(f.entries().iter().map(|&(v, w)| (v + 0.5, w)).collect()).unwrap();
            prop_assert!(decreasing_rearrangement(&bigger).lorentz_norm(p, q).unwrap() >= n);
        }

        #[test]
        fn double_rearrangement_conserves_and_is_bimonotone(a in matrix(8)) {
            let d = double_rearrangement(&a);
            prop_assert!((d.integral() - a.integral()).abs() <= 1e-12 * a.integral().max(1.0));
            prop_assert!(d.is_bimonotone());
        }

        #[test]
        fn rectangles_are_dominated(a in matrix(6), dm in any::<u8>(), em in any::<u8>()) {
            let d: Vec<usize> = (0..a.rows()).filter(|i| dm >> i & 1 == 1).collect();
            let e: Vec<usize> = (0..a.cols()).filter(|j| em >> j & 1 == 1).collect();
            let (lhs, rhs) = rectangle_domination_check(&a, &d, &e).unwrap();
            prop_assert!(lhs <= rhs + 1e-12);
        }

        #[test]
        fn product_indicators_attain_equality(r in 1usize..6, c in 1usize..6, dm in 1u8..32, em in 1u8..32) {
            let d: Vec<usize> = (0..r).filter(|i| dm >> i & 1 == 1).collect();
            let e: Vec<usize> = (0..c).filter(|j| em >> j & 1 == 1).collect();
            let data = (0..r * c).map(|x| if d.contains(&(x / c)) && e.contains(&(x % c)) { 1.0 } else { 0.0 }).collect();
            let a = WeightedMatrix::new(r, c, data, vec![1.0 / r as f64; r], vec![1.0 / c as f64; c]).unwrap();
            let (lhs, rhs) = rectangle_domination_check(&a, &d, &e).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-14);
        }

        #[test]
        fn exp_embedding_holds(iv in prop::collection::vec((0.0..10.0f64, 0.01..3.0f64), 1..6), delta in prop_oneof![-3.0..-0.1f64, 0.1..3.0f64]) {
            let g = RadialFunction::union_of(&iv.iter().map(|&(a, w)| (a, a + w)).collect::<Vec<_>>()).unwrap();
            let (lhs, rhs) = exp_embedding_check(&g, delta).unwrap();
            prop_assert!(lhs <= rhs * (1.0 + 1e-12));
            let prefix = g.edges()[0] == 0.0 && g.values().len() == 1;
            if !prefix { prop_assert!(lhs < rhs); }
        }

        #[test]
        fn row_embedding_constant_is_one(h in matrix(16)) {
            let (lhs, norm) = row_l21_embedding_check(&h);
            prop_assert!(lhs <= norm * (1.0 + 1e-9) + 1e-300);
        }

        #[test]
        fn nested_layers_add(
            mask1 in prop::collection::vec(any::<bool>(), 24),
            mask2 in prop::collection::vec(any::<bool>(), 24),
            c1 in 0.1..3.0f64, c2 in 0.1..3.0f64,
        ) {
            // U₂ ⊂ U₁ over 4 K-atoms × 6 cells
            let u1: Vec<f64> = mask1.iter().zip(&mask2).map(|(&a, &b)| if a || b { 1.0 } else { 0.0 }).collect();
            let u2: Vec<f64> = mask2.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
            let cells = [0.3, 0.1, 0.7, 0.2, 1.1, 0.5];
            let kw = [0.25; 4];
            let rows = |v: &[f64]| v.chunks(6).map(<[f64]>::to_vec).collect::<Vec<_>>();
            let f: Vec<f64> = u1.iter().zip(&u2).map(|(a, b)| c1 * a + c2 * b).collect();
            let pf = general_radial_profile(&rows(&f), &kw, &cells).unwrap();
            let p1 = general_radial_profile(&rows(&u1), &kw, &cells).unwrap().scaled(c1);
            let p2 = general_radial_profile(&rows(&u2), &kw, &cells).unwrap().scaled(c2);
            let sum = p1.add(&p2);
            for i in 0..40 {
                let x = (f64::from(i) + 0.5) / 40.0;
                prop_assert!((pf.eval(x) - sum.eval(x)).abs() <= 1e-10, "x = {x}");
            }
        }
    }
}
