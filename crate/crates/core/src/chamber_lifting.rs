//! Chamber lifting: the isometry U sending a function on R^N to the
//! |G|-vector of its reflected restrictions on the fundamental chamber, and
//! the lifted matrix kernels whose only singularity is the chamber diagonal.

use crate::error::{LabError, Result};
use crate::linalg::dist;
use crate::reflection_geometry::ChamberAtlas;
use crate::scale_kernels::{KernelLab, QuadConfig};
use crate::symbols::SymbolB;

/// Wall margin for chamber grids: every node keeps a well-defined stack of
/// reflected copies.
pub const WALL_MARGIN: f64 = 1e-3;

/// Discrete chamber grid with reflection-invariant omega-weights.
#[derive(Clone, Debug)]
pub struct ChamberGrid {
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl ChamberGrid {
    /// Tensor cell-center nodes of `[-l, l]^N` restricted to the chamber
    /// interior (wall margin enforced); weight = w(node) * cell volume, which
    /// is reflection-invariant because the Dunkl weight is.
    pub fn new(atlas: &ChamberAtlas, l: f64, per_axis: usize) -> Self {
        let n = atlas.spec.dimension;
        let h = 2.0 * l / per_axis as f64;
        let measure = crate::dunkl_measure::MeasureContext::new(atlas.spec.clone());
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        let total = per_axis.pow(n as u32);
        for idx in 0..total {
            let mut rem = idx;
            let mut x = vec![0.0; n];
            for k in 0..n {
                x[k] = -l + (rem % per_axis) as f64 * h + h / 2.0;
                rem /= per_axis;
            }
            if atlas.in_chamber(&x, 0.0) && atlas.spec.wall_distance(&x) >= WALL_MARGIN {
                weights.push(measure.weight(&x) * h.powi(n as i32));
                nodes.push(x);
            }
        }
        ChamberGrid { nodes, weights }
    }
}

/// A function lifted to the chamber: one |G|-vector per grid node, component
/// rho holding the value at `sigma_rho x`.
#[derive(Clone, Debug)]
pub struct LiftedFunction {
    pub grid: ChamberGrid,
    /// `values[node][rho]`.
    pub values: Vec<Vec<f64>>,
}

/// `U f` sampled on the chamber grid.
pub fn lift<F: Fn(&[f64]) -> f64>(atlas: &ChamberAtlas, f: F, grid: &ChamberGrid) -> LiftedFunction {
    let values = grid
        .nodes
        .iter()
        .map(|x| atlas.group.elements.iter().map(|g| f(&g.apply(x))).collect())
        .collect();
    LiftedFunction { grid: grid.clone(), values }
}

/// `U^{-1}` at an off-wall point: find the chamber representative and read the
/// stored component.
pub fn unlift(atlas: &ChamberAtlas, lifted: &LiftedFunction, x: &[f64]) -> Result<f64> {
    let (rho, rep) = atlas.chamber_of(x, true)?;
    let idx = lifted
        .grid
        .nodes
        .iter()
        .position(|node| dist(node, &rep) < 1e-9)
        .ok_or_else(|| LabError::Domain("point is not on the lifted grid".into()))?;
    Ok(lifted.values[idx][rho])
}

/// Discrete `L^p(C; l^p_M)` norm of a lifted function (`p = inf` as `None`).
pub fn lifted_norm(lifted: &LiftedFunction, p: Option<f64>) -> f64 {
    match p {
        None => lifted
            .values
            .iter()
            .flat_map(|v| v.iter())
            .fold(0.0f64, |a, &v| a.max(v.abs())),
        Some(p) => {
            let acc: f64 = lifted
                .values
                .iter()
                .zip(&lifted.grid.weights)
                .map(|(v, &w)| w * v.iter().map(|&t| t.abs().powf(p)).sum::<f64>())
                .sum();
            acc.powf(1.0 / p)
        }
    }
}

/// Discrete full-space `L^p` norm of `f` over the orbit of the chamber grid,
/// with the transported weights.
pub fn full_norm<F: Fn(&[f64]) -> f64>(
    atlas: &ChamberAtlas,
    f: F,
    grid: &ChamberGrid,
    p: Option<f64>,
) -> f64 {
    match p {
        None => grid
            .nodes
            .iter()
            .flat_map(|x| atlas.group.elements.iter().map(move |g| g.apply(x)))
            .fold(0.0f64, |a, y| a.max(f(&y).abs())),
        Some(p) => {
            let acc: f64 = grid
                .nodes
                .iter()
                .zip(&grid.weights)
                .map(|(x, &w)| {
                    atlas
                        .group
                        .elements
                        .iter()
                        .map(|g| f(&g.apply(x)).abs().powf(p) * w)
                        .sum::<f64>()
                })
                .sum();
            acc.powf(1.0 / p)
        }
    }
}

fn check_chamber_identity(atlas: &ChamberAtlas, xr: &[f64], yr: &[f64], x: &[f64], y: &[f64]) {
    debug_assert!(
        (atlas.group.orbit_distance(xr, yr) - dist(x, y)).abs() <= 1e-10,
        "chamber identity violated: d(sigma_rho x, sigma_tau y) != |x - y|"
    );
}

/// Lifted scale kernel entry `theta_s(sigma_rho x, sigma_tau y)` for chamber
/// points `x`, `y`.
#[allow(clippy::too_many_arguments)]
pub fn lifted_theta(
    lab: &KernelLab,
    atlas: &ChamberAtlas,
    b: &SymbolB,
    s: f64,
    i: usize,
    j: usize,
    rho: usize,
    tau: usize,
    x: &[f64],
    y: &[f64],
) -> Result<f64> {
    let xr = atlas.group.elements[rho].apply(x);
    let yr = atlas.group.elements[tau].apply(y);
    check_chamber_identity(atlas, &xr, &yr, x, y);
    Ok(lab.theta(b, s, i, j, &xr, &yr)?.value)
}

/// Lifted integrated kernel entry `K_b(sigma_rho x, sigma_tau y)`; singular
/// only on the chamber diagonal.
#[allow(clippy::too_many_arguments)]
pub fn lifted_k(
    lab: &KernelLab,
    atlas: &ChamberAtlas,
    b: &SymbolB,
    i: usize,
    j: usize,
    rho: usize,
    tau: usize,
    x: &[f64],
    y: &[f64],
    quad: &QuadConfig,
) -> Result<f64> {
    let sep = dist(x, y);
    if sep <= 1e-6 {
        return Err(LabError::OrbitDiagonal(sep));
    }
    let xr = atlas.group.elements[rho].apply(x);
    let yr = atlas.group.elements[tau].apply(y);
    check_chamber_identity(atlas, &xr, &yr, x, y);
    Ok(lab.integrated_kernel(b, i, j, &xr, &yr, quad)?.value)
}

/// Fitted two-sided constants for the volume transfer
/// `V(sigma_rho x, sigma_tau y, r) ~ V_C(x, y, r)` over chamber samples.
pub fn volume_transfer_constants(
    lab: &KernelLab,
    atlas: &ChamberAtlas,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    use rand::Rng;
    let mut rng = crate::sampling::seeded_rng(seed);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for _ in 0..samples {
        let x = crate::sampling::sample_chamber_interior(&mut rng, atlas, 3.0, WALL_MARGIN);
        let y = crate::sampling::sample_chamber_interior(&mut rng, atlas, 3.0, WALL_MARGIN);
        let r = 10f64.powf(rng.gen_range(-1.0..0.7));
        let rho = rng.gen_range(0..atlas.order());
        let tau = rng.gen_range(0..atlas.order());
        let xr = atlas.group.elements[rho].apply(&x);
        let yr = atlas.group.elements[tau].apply(&y);
        let full = lab.measure.volume_max(&xr, &yr, r)?;
        let chamber = lab
            .measure
            .chamber_volume_max(atlas, &x, &y, r)?;
        let ratio = full / chamber;
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    Ok((lo, hi))
}

/// 1-d helper used by tests: symmetric full-space cell-center grid whose node
/// set is exactly the orbit of the matching chamber grid.
pub fn symmetric_grid_1d(l: f64, per_axis: usize) -> Vec<f64> {
    let h = 2.0 * l / per_axis as f64;
    (0..per_axis).map(|k| -l + k as f64 * h + h / 2.0).collect()
}
