//! The maximal operators, per cell and over whole grids.
//!
//! Per-cell evaluations go through [`ball_cells`] and direct summation.
//! Field evaluations go through [`StencilTable`]s and row prefix sums. The
//! two routes share ball geometry but not arithmetic.

use alloc::vec::Vec;

use super::grid::{ball_cells, BallSpec, FieldGrid, GridModel, StencilTable, WindowRow};
use crate::{Error, Result};

/// Spacing of the subgrid of noncentred ball centres, in cells per axis.
pub const SUBGRID_STRIDE: usize = 4;

fn check_radii(radii: &[f64], min: f64) -> Result<()> {
    if radii.is_empty() {
        return Err(Error::arg("radii", "must not be empty"));
    }
    if radii.iter().any(|r| !(*r >= min) || !r.is_finite()) {
        return Err(Error::arg("radii", alloc::format!("must be finite and at least {min}")));
    }
    Ok(())
}

fn cell_ball(model: &GridModel, z: usize, r: f64) -> Result<BallSpec> {
    if z >= model.n_cells() {
        return Err(Error::arg("z", "cell index out of range"));
    }
    BallSpec::new(model, model.cell_point(z), r)
}

/// `max_r |B(z, r)|⁻¹ ∫_{B(z,r)} f`; every ball must be contained.
pub fn m1_centered(f: &FieldGrid, z: usize, radii: &[f64]) -> Result<f64> {
    check_radii(radii, 0.0)?;
    let model = f.model();
    let mut best = 0.0f64;
    for &r in radii {
        let cells = ball_cells(model, &cell_ball(model, z, r)?)?;
        best = best.max(f.integrate(&cells) / cells.measure);
    }
    Ok(best)
}

/// `max_B |B|⁻¹ ∫_B f` over candidate balls, each of which must contain `z`.
pub fn m2_noncentered(f: &FieldGrid, z: usize, candidates: &[BallSpec]) -> Result<f64> {
    let model = f.model();
    let mut best = 0.0f64;
    for b in candidates {
        let cells = ball_cells(model, b)?;
        if !cells.contains(model, z) {
            return Err(Error::arg("candidates", "every candidate ball must contain z"));
        }
        best = best.max(f.integrate(&cells) / cells.measure);
    }
    Ok(best)
}

/// `max_{r ≥ 1} |B(z, r)|^{−1/2} ∫_{B(z,r)} f`.
pub fn m2_tilde(f: &FieldGrid, z: usize, radii: &[f64]) -> Result<f64> {
    check_radii(radii, 1.0)?;
    let model = f.model();
    let mut best = 0.0f64;
    for &r in radii {
        let cells = ball_cells(model, &cell_ball(model, z, r)?)?;
        best = best.max(f.integrate(&cells) / cells.measure.sqrt());
    }
    Ok(best)
}

/// `max_u u^{−m1} ∫_{|m| ≤ u} f(v̄ − m, s) dm` on the slice of `z`; every
/// window must lie in the box.
pub fn m3_nilpotent(f: &FieldGrid, z: usize, us: &[f64]) -> Result<f64> {
    check_radii(us, 0.0)?;
    let model = f.model();
    if z >= model.n_cells() {
        return Err(Error::arg("z", "cell index out of range"));
    }
    let p = model.cell_point(z);
    let (x, _) = model.point_frac(&p);
    let (_, i2, j) = model.coords(z);
    let mut best = 0.0f64;
    for &u in us {
        if p.v.iter().any(|c| c.abs() + u > model.v_half()) {
            return Err(Error::arg("us", alloc::format!("window of radius {u} leaves the box")));
        }
        let mut sum = 0.0;
        for (row2, lo, hi) in model.raw_window(x, u) {
            let i2w = if model.m1() == 2 { row2 as usize } else { i2 };
            for i in lo as usize..hi as usize {
                sum += f.get(model.index(i, i2w, j));
            }
        }
        best = best.max(sum * model.v_volume() / libm::pow(u, model.m1() as f64));
    }
    Ok(best)
}

/// The centred ball and the subgrid-centred balls of the given radii that
/// contain `z` and lie in the box.
pub fn m2_candidates(model: &GridModel, z: usize, radii: &[f64]) -> Result<Vec<BallSpec>> {
    check_radii(radii, 0.0)?;
    let (i1, i2, j) = model.coords(z);
    let mut out = Vec::new();
    for &r in radii {
        if let Ok(b) = cell_ball(model, z, r) {
            out.push(b);
        }
        let reach_s = (r / model.ds()) as usize + 1;
        let j_lo = j.saturating_sub(reach_s);
        let j_hi = (j + reach_s).min(model.n_s() - 1);
        for jc in (j_lo..=j_hi).filter(|jc| jc % SUBGRID_STRIDE == SUBGRID_STRIDE / 2) {
            let reach_v = (libm::exp(-model.s_center(jc)) * libm::sinh(r) / model.dv()) as usize + 1;
            let range = |i: usize| i.saturating_sub(reach_v)..=(i + reach_v).min(model.n_v() - 1);
            let i2s: Vec<usize> = if model.m1() == 2 {
                range(i2).collect()
            } else {
                alloc::vec![0]
            };
            for &c2 in &i2s {
                if model.m1() == 2 && c2 % SUBGRID_STRIDE != SUBGRID_STRIDE / 2 {
                    continue;
                }
                for c1 in range(i1).filter(|c| c % SUBGRID_STRIDE == SUBGRID_STRIDE / 2) {
                    let c = model.index(c1, c2, jc);
                    if c == z {
                        continue;
                    }
                    if let Ok(b) = cell_ball(model, c, r) {
                        if ball_cells(model, &b)?.contains(model, z) {
                            out.push(b);
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

fn is_subgrid(model: &GridModel, i1: usize, i2: usize, j: usize) -> bool {
    let on = |i: usize| i % SUBGRID_STRIDE == SUBGRID_STRIDE / 2;
    on(i1) && on(j) && (model.m1() == 1 || on(i2))
}

/// Values of a maximal operator on every cell; `None` where no ball of the
/// radius list fits in the box.
pub type MaximalField = Vec<Option<f64>>;

/// Per-slice evaluation of `best over fitting radii of φ(∫_B f, |B|)`.
fn centred_field(f: &FieldGrid, table: &StencilTable, value: impl Fn(f64, f64) -> f64 + Sync) -> MaximalField {
    let model = f.model();
    let prefix = f.prefix();
    let rps = model.rows_per_slice();
    let nv = model.n_v();
    let slices = crate::par::map_indexed(model.n_s(), |j| {
        let mut out = alloc::vec![None; model.slice_len()];
        for k in 0..table.radii.len() {
            let Some(st) = table.get(k, j) else { continue };
            for i2 in 0..rps {
                for i1 in 0..nv {
                    if !st.fits(model, i1, i2) {
                        continue;
                    }
                    let v = value(st.integral(model, &prefix, i1, i2), st.measure);
                    let slot: &mut Option<f64> = &mut out[i2 * nv + i1];
                    *slot = Some(slot.map_or(v, |w: f64| w.max(v)));
                }
            }
        }
        out
    });
    slices.into_iter().flatten().collect()
}

/// [`m1_centered`] on every cell, over the radii that fit at each cell.
pub fn m1_field(f: &FieldGrid, table: &StencilTable) -> MaximalField {
    centred_field(f, table, |integral, measure| integral / measure)
}

/// [`m2_tilde`] on every cell, over the radii (all `≥ 1`) that fit.
pub fn m2_tilde_field(f: &FieldGrid, table: &StencilTable) -> Result<MaximalField> {
    check_radii(&table.radii, 1.0)?;
    Ok(centred_field(f, table, |integral, measure| integral / measure.sqrt()))
}

/// [`m2_noncentered`] on every cell with the candidates of [`m2_candidates`],
/// restricted to balls that fit. Starts from the centred values, so
/// `M1 ≤ M2` holds exactly.
pub fn m2_field(f: &FieldGrid, table: &StencilTable) -> MaximalField {
    let model = f.model();
    let centred = m1_field(f, table);
    let prefix = f.prefix();
    let rps = model.rows_per_slice();
    let nv = model.n_v();
    // Averages of the subgrid-centred balls, `[k][centre cell]`.
    let averages: Vec<Vec<(usize, f64)>> = (0..table.radii.len())
        .map(|k| {
            let per_slice = crate::par::map_indexed(model.n_s(), |jc| {
                let mut out = Vec::new();
                let Some(st) = table.get(k, jc) else { return out };
                for i2 in 0..rps {
                    for i1 in 0..nv {
                        if is_subgrid(model, i1, i2, jc) && st.fits(model, i1, i2) {
                            out.push((
                                model.index(i1, i2, jc),
                                st.integral(model, &prefix, i1, i2) / st.measure,
                            ));
                        }
                    }
                }
                out
            });
            per_slice.into_iter().flatten().collect()
        })
        .collect();
    let slice_len = model.slice_len();
    let slices = crate::par::map_indexed(model.n_s(), |j| {
        let mut out: Vec<Option<f64>> = centred[j * slice_len..(j + 1) * slice_len].to_vec();
        for (k, avgs) in averages.iter().enumerate() {
            for &(c, avg) in avgs {
                let (c1, c2, jc) = model.coords(c);
                let st = table.get(k, jc).expect("averaged balls have stencils");
                let dj = j as i64 - jc as i64;
                for &(sdj, di2, lo, hi) in &st.runs {
                    if i64::from(sdj) != dj {
                        continue;
                    }
                    let row = (c2 as i64 + i64::from(di2)) as usize;
                    let lo = (c1 as i64 + i64::from(lo)) as usize;
                    let hi = (c1 as i64 + i64::from(hi)) as usize;
                    for slot in &mut out[row * nv + lo..row * nv + hi] {
                        *slot = Some(slot.map_or(avg, |w| w.max(avg)));
                    }
                }
            }
        }
        out
    });
    slices.into_iter().flatten().collect()
}

/// Window radii `u_min·2^{k/4}` from `u_min = dv/2` until one window covers
/// the whole `v`-section from any cell.
pub fn default_u_list(model: &GridModel) -> Vec<f64> {
    let u_min = 0.5 * model.dv();
    let u_max = 2.0 * model.v_half() * libm::sqrt(model.m1() as f64);
    let q = libm::exp2(0.25);
    let mut out = alloc::vec![u_min];
    while *out.last().expect("nonempty") < u_max {
        let next = out.last().expect("nonempty") * q;
        out.push(next);
    }
    out
}

/// [`m3_nilpotent`] on every cell with `f` extended by zero outside the box.
pub fn m3_field(f: &FieldGrid, us: &[f64]) -> Result<Vec<f64>> {
    check_radii(us, 0.0)?;
    let model = f.model();
    let prefix = f.prefix();
    let nv = model.n_v() as i64;
    let rps = model.rows_per_slice();
    let m1 = model.m1() as f64;
    // Windows around v-index 0, as (Δi₂, lo, hi).
    let windows: Vec<(f64, Vec<WindowRow>)> = us
        .iter()
        .map(|&u| (model.v_volume() / libm::pow(u, m1), model.raw_window([0.0, 0.0], u)))
        .collect();
    let slices = crate::par::map_indexed(model.n_s(), |j| {
        let mut out = alloc::vec![0.0f64; model.slice_len()];
        for i2 in 0..rps {
            for i1 in 0..nv {
                let mut best = 0.0f64;
                for (scale, win) in &windows {
                    let mut sum = 0.0;
                    for &(d2, lo, hi) in win {
                        let r2 = i2 as i64 + d2;
                        if r2 < 0 || r2 >= rps as i64 {
                            continue;
                        }
                        let lo = (i1 + lo).clamp(0, nv) as usize;
                        let hi = (i1 + hi).clamp(0, nv) as usize;
                        if lo < hi {
                            sum += prefix.range(j * rps + r2 as usize, lo, hi);
                        }
                    }
                    best = best.max(sum * scale);
                }
                out[i2 * nv as usize + i1 as usize] = best;
            }
        }
        out
    });
    Ok(slices.into_iter().flatten().collect())
}
