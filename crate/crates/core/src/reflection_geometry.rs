//! Finite reflection groups, root systems, orbit distance, Weyl chambers,
//! wall distances and chamber cutoffs.

use serde::Deserialize;

use crate::error::{LabError, Result};
use crate::linalg::{dist, dot, reflection_matrix, Mat};

pub const DEFAULT_GROUP_CAP: usize = 1024;
/// Matrices closer than this are identified during group enumeration.
const MATRIX_EQ_TOL: f64 = 1e-9;

/// A normalized root system with multiplicities.
///
/// Roots are stored with both signs and squared length 2; `kappa[k]` is the
/// multiplicity of `roots[k]`.
#[derive(Clone, Debug)]
pub struct RootSystemSpec {
    pub dimension: usize,
    pub roots: Vec<Vec<f64>>,
    pub kappa: Vec<f64>,
}

impl RootSystemSpec {
    /// `Z_2^N` with per-coordinate multiplicities.
    pub fn z2n(kappa: &[f64]) -> Self {
        let n = kappa.len();
        let mut roots = Vec::new();
        let mut mult = Vec::new();
        for k in 0..n {
            for sign in [1.0, -1.0] {
                let mut r = vec![0.0; n];
                r[k] = sign * std::f64::consts::SQRT_2;
                roots.push(r);
                mult.push(kappa[k]);
            }
        }
        RootSystemSpec { dimension: n, roots, kappa: mult }
    }

    /// Dihedral group `I_2(m)`: `2m` roots at angles `k*pi/m`.
    ///
    /// `kappa` must have one entry (m odd: single orbit) or two (m even:
    /// alternating orbits, `kappa[k % 2]`).
    pub fn dihedral(m: usize, kappa: &[f64]) -> Result<Self> {
        if m < 2 || m > 8 {
            return Err(LabError::Config(format!("I2(m) supports 2 <= m <= 8, got {m}")));
        }
        let orbits = if m % 2 == 0 { 2 } else { 1 };
        if kappa.len() != orbits {
            return Err(LabError::Config(format!(
                "I2({m}) needs {orbits} multiplicity value(s), got {}",
                kappa.len()
            )));
        }
        let mut roots = Vec::new();
        let mut mult = Vec::new();
        for k in 0..2 * m {
            let phi = std::f64::consts::PI * k as f64 / m as f64;
            roots.push(vec![
                std::f64::consts::SQRT_2 * phi.cos(),
                std::f64::consts::SQRT_2 * phi.sin(),
            ]);
            mult.push(kappa[k % orbits]);
        }
        Ok(RootSystemSpec { dimension: 2, roots, kappa: mult })
    }

    /// Named presets used throughout the test corpus.
    pub fn preset(name: &str, kappa: &[f64]) -> Result<Self> {
        match name {
            "z2" => {
                let k = if kappa.is_empty() { vec![1.0] } else { kappa.to_vec() };
                if k.len() != 1 {
                    return Err(LabError::Config("z2 takes one kappa".into()));
                }
                Ok(Self::z2n(&k))
            }
            "z2xz2" => {
                let k = if kappa.is_empty() { vec![1.0, 1.0] } else { kappa.to_vec() };
                if k.len() != 2 {
                    return Err(LabError::Config("z2xz2 takes two kappas".into()));
                }
                Ok(Self::z2n(&k))
            }
            "b2" => {
                let k = if kappa.is_empty() { vec![1.0, 1.0] } else { kappa.to_vec() };
                Self::dihedral(4, &k)
            }
            "i2_6" => {
                let k = if kappa.is_empty() { vec![1.0, 1.0] } else { kappa.to_vec() };
                Self::dihedral(6, &k)
            }
            other => Err(LabError::Config(format!("unknown preset `{other}`"))),
        }
    }

    /// Parse the structured text form
    /// `{"dimension": N, "type": "Z2^N" | "I2(m)", "kappa": [...]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            dimension: usize,
            #[serde(rename = "type")]
            kind: String,
            kappa: Vec<f64>,
        }
        let raw: Raw = serde_json::from_str(text)?;
        if raw.kind == "Z2^N" {
            if raw.kappa.len() != raw.dimension {
                return Err(LabError::Config("Z2^N needs one kappa per coordinate".into()));
            }
            Ok(Self::z2n(&raw.kappa))
        } else if let Some(mstr) = raw.kind.strip_prefix("I2(").and_then(|s| s.strip_suffix(')')) {
            if raw.dimension != 2 {
                return Err(LabError::Config("I2(m) requires dimension 2".into()));
            }
            let m: usize = mstr
                .parse()
                .map_err(|_| LabError::Config(format!("bad I2 order `{mstr}`")))?;
            Self::dihedral(m, &raw.kappa)
        } else {
            Err(LabError::Config(format!("unknown root system type `{}`", raw.kind)))
        }
    }

    /// Check closure under negation, G-invariance of kappa, normalization.
    pub fn validate(&self) -> Result<()> {
        let tol = 1e-12;
        for (k, alpha) in self.roots.iter().enumerate() {
            if (dot(alpha, alpha) - 2.0).abs() > tol {
                return Err(LabError::Config(format!(
                    "root {k} has squared norm {} != 2",
                    dot(alpha, alpha)
                )));
            }
            let neg: Vec<f64> = alpha.iter().map(|v| -v).collect();
            let (m, d) = self.closest_root(&neg);
            if d > MATRIX_EQ_TOL || (self.kappa[m] - self.kappa[k]).abs() > tol {
                return Err(LabError::Config(format!("root {k}: -alpha missing or kappa mismatch")));
            }
            for beta_idx in 0..self.roots.len() {
                let image = crate::linalg::reflect(alpha, &self.roots[beta_idx]);
                let (m, d) = self.closest_root(&image);
                if d > MATRIX_EQ_TOL {
                    return Err(LabError::Config(format!(
                        "reflection of root {beta_idx} by root {k} leaves the system"
                    )));
                }
                if (self.kappa[m] - self.kappa[beta_idx]).abs() > tol {
                    return Err(LabError::Config("kappa is not G-invariant".into()));
                }
            }
        }
        Ok(())
    }

    fn closest_root(&self, v: &[f64]) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (k, r) in self.roots.iter().enumerate() {
            let d = dist(r, v);
            if d < best.1 {
                best = (k, d);
            }
        }
        best
    }

    /// Distance from `x` to the union of reflecting hyperplanes.
    pub fn wall_distance(&self, x: &[f64]) -> f64 {
        self.roots
            .iter()
            .map(|alpha| dot(x, alpha).abs() / crate::linalg::norm(alpha))
            .fold(f64::INFINITY, f64::min)
    }

    /// Sum of all multiplicities (over both signs), i.e. `N_hom - N`.
    pub fn kappa_sum(&self) -> f64 {
        self.kappa.iter().sum()
    }
}

/// Wall-layer function `m_s(x) = min{1, s / wall_distance(x)}`.
pub fn wall_layer(spec: &RootSystemSpec, s: f64, x: &[f64]) -> f64 {
    assert!(s > 0.0, "wall_layer needs s > 0");
    let delta = spec.wall_distance(x);
    if delta <= 0.0 {
        1.0
    } else {
        (s / delta).min(1.0)
    }
}

/// The finite group generated by the root reflections.
#[derive(Clone, Debug)]
pub struct ReflectionGroup {
    pub dimension: usize,
    pub elements: Vec<Mat>,
}

/// Enumerate the group by closing the generating reflections under products.
///
/// Ordering is deterministic: identity first, then lexicographic on matrix
/// entries.
pub fn build_group(spec: &RootSystemSpec) -> Result<ReflectionGroup> {
    build_group_capped(spec, DEFAULT_GROUP_CAP)
}

pub fn build_group_capped(spec: &RootSystemSpec, cap: usize) -> Result<ReflectionGroup> {
    let n = spec.dimension;
    let gens: Vec<Mat> = spec.roots.iter().map(|a| reflection_matrix(a)).collect();
    let mut elements = vec![Mat::identity(n)];
    let mut frontier = vec![Mat::identity(n)];
    while let Some(g) = frontier.pop() {
        for gen in &gens {
            let h = gen.mul(&g);
            if !elements.iter().any(|e| e.max_abs_diff(&h) < MATRIX_EQ_TOL) {
                if elements.len() >= cap {
                    return Err(LabError::GroupTooLarge { cap });
                }
                elements.push(h.clone());
                frontier.push(h);
            }
        }
    }
    elements.sort_by(|a, b| {
        a.data
            .iter()
            .zip(&b.data)
            .find_map(|(x, y)| {
                if (x - y).abs() < MATRIX_EQ_TOL {
                    None
                } else {
                    x.partial_cmp(y)
                }
            })
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let id_pos = elements
        .iter()
        .position(|e| e.is_identity(MATRIX_EQ_TOL))
        .expect("identity is in the closure");
    let id = elements.remove(id_pos);
    elements.insert(0, id);
    Ok(ReflectionGroup { dimension: n, elements })
}

impl ReflectionGroup {
    pub fn order(&self) -> usize {
        self.elements.len()
    }

    /// Orbit distance `d(x, y) = min over sigma of |x - sigma y|`.
    pub fn orbit_distance(&self, x: &[f64], y: &[f64]) -> f64 {
        self.elements
            .iter()
            .map(|g| dist(x, &g.apply(y)))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Quintic smoothstep cutoff: 0 on `(-inf, 1]`, 1 on `[2, inf)`.
pub fn smoothstep(u: f64) -> f64 {
    if u <= 1.0 {
        0.0
    } else if u >= 2.0 {
        1.0
    } else {
        let v = u - 1.0;
        v * v * v * (10.0 + v * (-15.0 + 6.0 * v))
    }
}

/// Fundamental chamber, chamber enumeration and membership.
#[derive(Clone, Debug)]
pub struct ChamberAtlas {
    pub spec: RootSystemSpec,
    pub group: ReflectionGroup,
    /// Positive roots defining the fundamental chamber.
    pub positive_roots: Vec<Vec<f64>>,
}

impl ChamberAtlas {
    pub fn new(spec: RootSystemSpec) -> Result<Self> {
        spec.validate()?;
        let group = build_group(&spec)?;
        // A generic direction with nonzero pairing against every root picks
        // the positive subsystem.
        let n = spec.dimension;
        let mut dir = vec![0.0; n];
        for k in 0..n {
            dir[k] = 1.0 / (1.0 + k as f64 * 0.61803398875);
        }
        for alpha in &spec.roots {
            if dot(alpha, &dir).abs() < 1e-9 {
                return Err(LabError::Config(
                    "degenerate chamber direction; perturb the root system".into(),
                ));
            }
        }
        let positive_roots: Vec<Vec<f64>> = spec
            .roots
            .iter()
            .filter(|alpha| dot(alpha, &dir) > 0.0)
            .cloned()
            .collect();
        Ok(ChamberAtlas { spec, group, positive_roots })
    }

    pub fn order(&self) -> usize {
        self.group.order()
    }

    /// Is `x` in the closed fundamental chamber (within `tol`)?
    pub fn in_chamber(&self, x: &[f64], tol: f64) -> bool {
        self.positive_roots.iter().all(|alpha| dot(alpha, x) >= -tol)
    }

    /// Chamber index and canonical representative: `x = sigma_rho x*`,
    /// `x*` in the closed chamber.
    ///
    /// On a wall the smallest index whose closed chamber contains `x` is
    /// returned unless `strict` is set.
    pub fn chamber_of(&self, x: &[f64], strict: bool) -> Result<(usize, Vec<f64>)> {
        let tol = 1e-9;
        if strict {
            let d = self.spec.wall_distance(x);
            if d <= tol {
                return Err(LabError::OnWall { dist: d, tol });
            }
        }
        for (rho, g) in self.group.elements.iter().enumerate() {
            let rep = g.transpose().apply(x); // sigma_rho^{-1} x
            if self.in_chamber(&rep, tol) {
                return Ok((rho, rep));
            }
        }
        unreachable!("chambers tile the space");
    }

    /// Signed scaled distances `l_{tau,alpha}(x) = <x, alpha>/|alpha|` over the
    /// positive system of chamber `tau`.
    fn chamber_levels(&self, tau: usize, x: &[f64]) -> impl Iterator<Item = f64> + '_ {
        let g = self.group.elements[tau].clone();
        let x = x.to_vec();
        self.positive_roots.iter().map(move |alpha| {
            let rotated = g.apply(alpha); // positive root of Omega_tau
            dot(&rotated, &x) / crate::linalg::norm(&rotated)
        })
    }

    /// Smooth chamber cutoff `eta_{tau,s}(x)`.
    pub fn chamber_cutoff(&self, tau: usize, s: f64, x: &[f64]) -> f64 {
        assert!(s > 0.0, "chamber_cutoff needs s > 0");
        self.chamber_levels(tau, x)
            .map(|l| smoothstep(l / s))
            .product()
    }

    /// Indicator of the closed chamber `Omega_tau`.
    pub fn chamber_indicator(&self, tau: usize, x: &[f64]) -> f64 {
        if self
            .chamber_levels(tau, x)
            .all(|l| l >= 0.0)
        {
            1.0
        } else {
            0.0
        }
    }
}
