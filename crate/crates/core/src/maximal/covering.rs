//! Greedy selection of a subfamily of balls with a comparable union and
//! bounded overlap.
//!
//! Phase one visits balls by decreasing measure and keeps a ball when at
//! least half of its measure is not yet covered by the kept balls. Phase two
//! adds, while the kept union is less than half the full union, the ball
//! with the most uncovered measure. Afterwards `|∪I| ≤ 2|∪J|`.

use alloc::vec::Vec;

use super::grid::{ball_cells, BallCells, BallSpec, GridModel};
use crate::rearrange::{weak_l2_norm, WeightedSamples};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct CoveringReport {
    /// Indices into the input family, in selection order.
    pub selected: Vec<usize>,
    /// How many of `selected` were added by the second phase.
    pub second_phase: usize,
    pub union_all: f64,
    pub union_selected: f64,
    /// `|∪_I B_i| / |∪_J B_j|`.
    pub union_ratio: f64,
    /// `‖Σ_J χ_{B_j}‖_{2,∞} / |∪_I B_i|^{1/2}`.
    pub overlap_ratio: f64,
    pub max_multiplicity: u32,
}

fn new_measure(model: &GridModel, cells: &BallCells, covered: &[bool]) -> f64 {
    cells
        .runs
        .iter()
        .map(|r| {
            let row = &covered[r.row * model.n_v() + r.lo..r.row * model.n_v() + r.hi];
            row.iter().filter(|c| !**c).count() as f64 * model.slice_cell_measure(model.row_slice(r.row))
        })
        .sum()
}

struct Selection {
    covered: Vec<bool>,
    count: Vec<u32>,
    taken: Vec<bool>,
    selected: Vec<usize>,
    union: f64,
}

impl Selection {
    fn take(&mut self, model: &GridModel, i: usize, cells: &BallCells) {
        self.union += new_measure(model, cells, &self.covered);
        for idx in cells.cells(model) {
            self.covered[idx] = true;
            self.count[idx] += 1;
        }
        self.taken[i] = true;
        self.selected.push(i);
    }
}

pub fn covering_select(model: &GridModel, balls: &[BallSpec]) -> Result<CoveringReport> {
    let cells: Vec<BallCells> = balls.iter().map(|b| ball_cells(model, b)).collect::<Result<_>>()?;
    let n = model.n_cells();
    let mut in_all = alloc::vec![false; n];
    for c in &cells {
        for idx in c.cells(model) {
            in_all[idx] = true;
        }
    }
    let union_all: f64 = in_all
        .iter()
        .enumerate()
        .filter(|(_, c)| **c)
        .map(|(i, _)| model.cell_measure(i))
        .sum();

    let mut order: Vec<usize> = (0..balls.len()).collect();
    order.sort_by(|&a, &b| cells[b].measure.total_cmp(&cells[a].measure).then(a.cmp(&b)));
    let mut state = Selection {
        covered: alloc::vec![false; n],
        count: alloc::vec![0u32; n],
        taken: alloc::vec![false; balls.len()],
        selected: Vec::new(),
        union: 0.0,
    };
    for &i in &order {
        if 2.0 * new_measure(model, &cells[i], &state.covered) >= cells[i].measure {
            state.take(model, i, &cells[i]);
        }
    }
    let first_phase = state.selected.len();
    while union_all > 2.0 * state.union {
        let best = order
            .iter()
            .copied()
            .filter(|&i| !state.taken[i])
            .map(|i| (i, new_measure(model, &cells[i], &state.covered)))
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));
        match best {
            Some((i, _)) => state.take(model, i, &cells[i]),
            None => break,
        }
    }
    let Selection {
        count,
        selected,
        union: union_selected,
        ..
    } = state;
    let second_phase = selected.len() - first_phase;

    let entries: Vec<(f64, f64)> = count
        .iter()
        .enumerate()
        .filter(|(_, c)| **c > 0)
        .map(|(i, &c)| (f64::from(c), model.cell_measure(i)))
        .collect();
    let max_multiplicity = count.iter().copied().max().unwrap_or(0);
    let overlap = weak_l2_norm(&WeightedSamples::new(entries).expect("counts are positive"));
    let div = |a: f64, b: f64| if b > 0.0 { a / b } else { 1.0 };
    Ok(CoveringReport {
        second_phase,
        union_all,
        union_selected,
        union_ratio: div(union_all, union_selected),
        overlap_ratio: div(overlap, union_all.sqrt()),
        max_multiplicity,
        selected,
    })
}
