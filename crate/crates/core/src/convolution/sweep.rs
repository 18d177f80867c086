//! Ratio sweeps of the trilinear form against Lorentz norms.

use alloc::vec::Vec;

use super::{radial_l21_norm, radial_l2_norm, trilinear_mc_multi, McEstimate};
use crate::geometry::SpaceParams;
use crate::kernel::RadialFunction;
use crate::math;
use crate::par;
use crate::{Error, Result};

/// One radius of [`endpoint_ratio_sweep`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndpointRow {
    pub radius: f64,
    pub t: McEstimate,
    pub norm_product: f64,
    pub ratio: f64,
    /// The relative standard error exceeds 10%.
    pub flagged: bool,
}

/// `T(χ_{B_R}, χ_{B_R}, χ_{B_R}) / ‖χ_{B_R}‖³_{2,1}` for each `R`.
pub fn endpoint_ratio_sweep(sp: &SpaceParams, radii: &[f64], n_samples: u64, seed: u64) -> Result<Vec<EndpointRow>> {
    sp.require_real_hyperbolic()?;
    radii
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let ball = RadialFunction::ball(r)?;
            let t = trilinear_mc_multi(
                sp,
                &ball,
                core::slice::from_ref(&ball),
                &ball,
                None,
                n_samples,
                par::child_seed(seed, i as u64),
            )?[0];
            let norm = radial_l21_norm(sp, &ball)?;
            let norm_product = norm * norm * norm;
            Ok(EndpointRow {
                radius: r,
                t,
                norm_product,
                ratio: t.estimate / norm_product,
                flagged: t.rel_stderr() > 0.1,
            })
        })
        .collect()
}

/// One truncation level of [`sharpness_probe`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SharpnessRow {
    pub layers: usize,
    pub t: McEstimate,
    pub g_l2: f64,
    pub g_l21: f64,
    /// `T / (‖f‖_{2,1} ‖g‖_{L²} ‖h‖_{2,1})`.
    pub ratio_l2: f64,
    /// `T / (‖f‖_{2,1} ‖g‖_{2,1} ‖h‖_{2,1})`.
    pub ratio_l21: f64,
}

/// `g_J = ∑_{j<J} e^{−ρj}(1 + j)^{−1} χ_{[j, j+1)}` against `f = h = χ_{B_R}`
/// for `J = 1..=max_layers`, all on common samples.
pub fn sharpness_probe(
    sp: &SpaceParams,
    radius: f64,
    max_layers: usize,
    n_samples: u64,
    seed: u64,
) -> Result<Vec<SharpnessRow>> {
    sp.require_real_hyperbolic()?;
    if max_layers == 0 {
        return Err(Error::arg("max_layers", "must be positive"));
    }
    let amp = |j: usize| math::exp(-sp.rho() * j as f64) / (1.0 + j as f64);
    let gs: Vec<RadialFunction> = (1..=max_layers)
        .map(|n| {
            let edges = (0..=n).map(|j| j as f64).collect();
            RadialFunction::new(edges, (0..n).map(amp).collect())
        })
        .collect::<Result<_>>()?;
    let ball = RadialFunction::ball(radius)?;
    let est = trilinear_mc_multi(sp, &ball, &gs, &ball, None, n_samples, seed)?;
    let fh = radial_l21_norm(sp, &ball)?.powi(2);
    gs.iter()
        .zip(est)
        .enumerate()
        .map(|(i, (g, t))| {
            let g_l2 = radial_l2_norm(sp, g)?;
            let g_l21 = radial_l21_norm(sp, g)?;
            Ok(SharpnessRow {
                layers: i + 1,
                t,
                g_l2,
                g_l21,
                ratio_l2: t.estimate / (fh * g_l2),
                ratio_l21: t.estimate / (fh * g_l21),
            })
        })
        .collect()
}
