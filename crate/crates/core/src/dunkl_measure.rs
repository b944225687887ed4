//! The Dunkl weight and ball-volume estimators: true volumes by quadrature or
//! Monte Carlo, the closed-form volume comparand, and the max-volume
//! quantities used to normalize every kernel bound.

use rand::Rng;

use crate::error::{LabError, Result};
use crate::linalg::dot;
use crate::quadrature::{integrate, integrate_piecewise, merge_intervals};
use crate::reflection_geometry::{ChamberAtlas, ReflectionGroup, RootSystemSpec};

#[derive(Clone, Debug)]
pub struct QuadSettings {
    /// Outer angular nodes for 2-d ball integrals.
    pub outer_nodes: usize,
    /// Nodes per smooth piece of inner 1-d integrals.
    pub inner_nodes: usize,
    /// Stratified Monte Carlo budget for N >= 3.
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for QuadSettings {
    fn default() -> Self {
        QuadSettings { outer_nodes: 128, inner_nodes: 48, mc_samples: 200_000, seed: 20_2406 }
    }
}

/// Measure context: the root system plus estimator settings.
#[derive(Clone, Debug)]
pub struct MeasureContext {
    pub spec: RootSystemSpec,
    pub quad: QuadSettings,
}

impl MeasureContext {
    pub fn new(spec: RootSystemSpec) -> Self {
        MeasureContext { spec, quad: QuadSettings::default() }
    }

    /// Homogeneous dimension `N + sum kappa(alpha)`.
    pub fn homogeneous_dimension(&self) -> f64 {
        self.spec.dimension as f64 + self.spec.kappa_sum()
    }

    /// The Dunkl weight `w(x) = prod |<x, alpha>|^kappa(alpha)`.
    pub fn weight(&self, x: &[f64]) -> f64 {
        let mut w = 1.0;
        for (alpha, &k) in self.spec.roots.iter().zip(&self.spec.kappa) {
            if k > 0.0 {
                w *= dot(x, alpha).abs().powf(k);
            }
        }
        w
    }

    /// `omega(B(x, r))`.
    pub fn ball_volume(&self, x: &[f64], r: f64) -> Result<f64> {
        assert!(r > 0.0, "ball_volume needs r > 0");
        match self.spec.dimension {
            1 => Ok(self.interval_mass(x[0] - r, x[0] + r)),
            2 => self.union_volume_2d(&[x.to_vec()], r, None),
            _ => self.mc_ball_volume(x, r).map(|(v, _)| v),
        }
    }

    /// Closed-form comparand `r^N prod (|<x, alpha>| + r)^kappa(alpha)`.
    pub fn ball_volume_model(&self, x: &[f64], r: f64) -> f64 {
        assert!(r > 0.0);
        let mut v = r.powi(self.spec.dimension as i32);
        for (alpha, &k) in self.spec.roots.iter().zip(&self.spec.kappa) {
            if k > 0.0 {
                v *= (dot(x, alpha).abs() + r).powf(k);
            }
        }
        v
    }

    /// `V(x, y, r) = max of the two ball volumes`.
    pub fn volume_max(&self, x: &[f64], y: &[f64], r: f64) -> Result<f64> {
        Ok(self.ball_volume(x, r)?.max(self.ball_volume(y, r)?))
    }

    /// `omega(B(x, r) ∩ C)` for `x` in the closed chamber.
    pub fn chamber_ball_volume(&self, atlas: &ChamberAtlas, x: &[f64], r: f64) -> Result<f64> {
        assert!(r > 0.0);
        match self.spec.dimension {
            1 => {
                // The fundamental chamber of any 1-d system is a half-line.
                let lo = (x[0] - r).max(0.0);
                let hi = x[0] + r;
                if hi <= lo {
                    Ok(0.0)
                } else {
                    Ok(self.interval_mass(lo, hi))
                }
            }
            2 => self.union_volume_2d(&[x.to_vec()], r, Some(atlas)),
            _ => Err(LabError::Domain(
                "chamber volumes implemented for N <= 2".into(),
            )),
        }
    }

    /// `V_C(x, y, r)` for chamber points.
    pub fn chamber_volume_max(
        &self,
        atlas: &ChamberAtlas,
        x: &[f64],
        y: &[f64],
        r: f64,
    ) -> Result<f64> {
        Ok(self
            .chamber_ball_volume(atlas, x, r)?
            .max(self.chamber_ball_volume(atlas, y, r)?))
    }

    /// `omega(O(B(x, r)))`, the volume of the orbit of a ball.
    pub fn orbit_ball_volume(&self, group: &ReflectionGroup, x: &[f64], r: f64) -> Result<f64> {
        let centers: Vec<Vec<f64>> = group.elements.iter().map(|g| g.apply(x)).collect();
        match self.spec.dimension {
            1 => {
                let iv = merge_intervals(
                    centers.iter().map(|c| (c[0] - r, c[0] + r)).collect(),
                );
                Ok(iv.iter().map(|&(a, b)| self.interval_mass(a, b)).sum())
            }
            2 => self.union_volume_2d(&centers, r, None),
            _ => Err(LabError::Domain("orbit ball volumes implemented for N <= 2".into())),
        }
    }

    /// Mass of a 1-d interval under the weight; closed form.
    ///
    /// In one dimension the weight is `c |u|^K` with `K` the total
    /// multiplicity, so the primitive is explicit.
    fn interval_mass(&self, a: f64, b: f64) -> f64 {
        debug_assert_eq!(self.spec.dimension, 1);
        let total_k = self.spec.kappa_sum();
        let scale = std::f64::consts::SQRT_2.powf(total_k);
        let prim = |u: f64| u.signum() * u.abs().powf(total_k + 1.0) / (total_k + 1.0);
        scale * (prim(b) - prim(a))
    }

    /// 2-d mass of a union of congruent balls, optionally intersected with the
    /// fundamental chamber. Iterated integral: angular substitution in the
    /// first coordinate, exact interval geometry in the second.
    fn union_volume_2d(
        &self,
        centers: &[Vec<f64>],
        r: f64,
        chamber: Option<&ChamberAtlas>,
    ) -> Result<f64> {
        let coarse = self.union_volume_2d_at(
            centers,
            r,
            chamber,
            self.quad.outer_nodes / 2,
            self.quad.inner_nodes / 2,
        );
        let fine = self.union_volume_2d_at(
            centers,
            r,
            chamber,
            self.quad.outer_nodes,
            self.quad.inner_nodes,
        );
        let indicator = if fine == 0.0 { 0.0 } else { ((fine - coarse) / fine).abs() };
        if indicator > 1e-3 {
            return Err(LabError::QuadratureFailure { indicator, tol: 1e-3 });
        }
        Ok(fine)
    }

    fn union_volume_2d_at(
        &self,
        centers: &[Vec<f64>],
        r: f64,
        chamber: Option<&ChamberAtlas>,
        outer_nodes: usize,
        inner_nodes: usize,
    ) -> f64 {
        let lo = centers.iter().map(|c| c[0]).fold(f64::INFINITY, f64::min) - r;
        let hi = centers.iter().map(|c| c[0]).fold(f64::NEG_INFINITY, f64::max) + r;
        // Outer breakpoints: chord endpoints of each ball and vertical walls.
        let mut cuts: Vec<f64> = Vec::new();
        for c in centers {
            cuts.push(c[0] - r);
            cuts.push(c[0] + r);
        }
        for alpha in &self.spec.roots {
            if alpha[1].abs() < 1e-14 {
                cuts.push(0.0);
            }
        }
        let inner = |x1: f64| self.inner_mass_2d(centers, r, chamber, x1, inner_nodes);
        let mut acc = 0.0;
        let mut pieces: Vec<f64> = cuts.iter().copied().filter(|&c| c > lo && c < hi).collect();
        pieces.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pieces.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
        let mut prev = lo;
        for cut in pieces.into_iter().chain(std::iter::once(hi)) {
            if cut > prev {
                // sin substitution removes the sqrt endpoint singularity of
                // the chord length.
                let (a, b) = (prev, cut);
                acc += integrate(
                    |t| {
                        let x1 = 0.5 * (a + b) + 0.5 * (b - a) * t.sin() / 1f64.sin();
                        let dx1 = 0.5 * (b - a) * t.cos() / 1f64.sin();
                        inner(x1) * dx1
                    },
                    -1.0,
                    1.0,
                    outer_nodes,
                );
                prev = cut;
            }
        }
        acc
    }

    /// `int w(x1, x2) dx2` over the union of ball chords at abscissa `x1`,
    /// optionally clipped to the chamber.
    fn inner_mass_2d(
        &self,
        centers: &[Vec<f64>],
        r: f64,
        chamber: Option<&ChamberAtlas>,
        x1: f64,
        inner_nodes: usize,
    ) -> f64 {
        let mut chords: Vec<(f64, f64)> = Vec::new();
        for c in centers {
            let dx = x1 - c[0];
            if dx.abs() < r {
                let g = (r * r - dx * dx).sqrt();
                chords.push((c[1] - g, c[1] + g));
            }
        }
        let mut segs = merge_intervals(chords);
        if let Some(atlas) = chamber {
            // Each positive-root constraint is a half-plane; in x2 it is a
            // half-line (or all/nothing when the wall is vertical).
            for alpha in &atlas.positive_roots {
                if alpha[1].abs() < 1e-14 {
                    if alpha[0] * x1 < 0.0 {
                        return 0.0;
                    }
                    continue;
                }
                let bound = -alpha[0] * x1 / alpha[1];
                segs = segs
                    .into_iter()
                    .filter_map(|(a, b)| {
                        if alpha[1] > 0.0 {
                            let a2 = a.max(bound);
                            (b > a2).then_some((a2, b))
                        } else {
                            let b2 = b.min(bound);
                            (b2 > a).then_some((a, b2))
                        }
                    })
                    .collect();
            }
        }
        // Kinks of the weight along the segment: root-line crossings.
        let mut kinks: Vec<f64> = Vec::new();
        for alpha in &self.spec.roots {
            if alpha[1].abs() > 1e-14 {
                kinks.push(-alpha[0] * x1 / alpha[1]);
            }
        }
        segs.iter()
            .map(|&(a, b)| {
                integrate_piecewise(|x2| self.weight(&[x1, x2]), a, b, &kinks, inner_nodes)
            })
            .sum()
    }

    /// Stratified (jittered-grid) Monte Carlo for N >= 3.
    /// Returns (estimate, standard error).
    pub fn mc_ball_volume(&self, x: &[f64], r: f64) -> Result<(f64, f64)> {
        let n = self.spec.dimension;
        let m = (self.quad.mc_samples as f64).powf(1.0 / n as f64).floor() as usize;
        let m = m.max(2);
        let cells = m.pow(n as u32);
        let cell = 2.0 * r / m as f64;
        let vol_box = (2.0 * r).powi(n as i32);
        let mut rng = crate::sampling::seeded_rng(self.quad.seed);
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for idx in 0..cells {
            let mut rem = idx;
            let mut y = vec![0.0; n];
            for k in 0..n {
                let cidx = rem % m;
                rem /= m;
                y[k] = x[k] - r + (cidx as f64 + rng.gen::<f64>()) * cell;
            }
            let inside = crate::linalg::dist(&y, x) < r;
            let v = if inside { self.weight(&y) } else { 0.0 };
            sum += v;
            sum_sq += v * v;
        }
        let mean = sum / cells as f64;
        let var = (sum_sq / cells as f64 - mean * mean).max(0.0);
        let est = mean * vol_box;
        let se = (var / cells as f64).sqrt() * vol_box;
        Ok((est, se))
    }
}
