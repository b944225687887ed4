//! Symbol functions b for the commutator kernels: a small builtin corpus,
//! empirical orbit-Lipschitz seminorm estimation, and invariance-preserving
//! mollification.

use std::sync::Arc;

use rand::Rng;

use crate::error::{LabError, Result};
use crate::reflection_geometry::ReflectionGroup;
use crate::sampling;

type EvalFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
pub struct SymbolB {
    pub name: String,
    eval: EvalFn,
    pub gradient: Option<GradFn>,
    /// Declared orbit-Lipschitz bound; `None` means "estimate it".
    pub declared_lipd: Option<f64>,
    /// Whether the symbol claims reflection invariance.
    pub invariant: bool,
}

impl std::fmt::Debug for SymbolB {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SymbolB")
            .field("name", &self.name)
            .field("declared_lipd", &self.declared_lipd)
            .field("invariant", &self.invariant)
            .finish()
    }
}

impl SymbolB {
    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    /// `lambda * b`, for homogeneity checks.
    pub fn scaled(&self, lambda: f64) -> SymbolB {
        let inner = self.eval.clone();
        SymbolB {
            name: format!("{}*{}", lambda, self.name),
            eval: Arc::new(move |x| lambda * inner(x)),
            gradient: self.gradient.as_ref().map(|g| {
                let g = g.clone();
                let f: GradFn =
                    Arc::new(move |x: &[f64]| g(x).into_iter().map(|v| lambda * v).collect());
                f
            }),
            declared_lipd: self.declared_lipd.map(|l| l * lambda.abs()),
            invariant: self.invariant,
        }
    }
}

/// Construct a builtin symbol by name. Parameters arrive as JSON so the CLI
/// config can reference symbols directly.
pub fn builtin_symbol(
    name: &str,
    params: &serde_json::Value,
    group: &ReflectionGroup,
) -> Result<SymbolB> {
    let n = group.dimension;
    match name {
        "smooth_invariant" => {
            let coeffs: Vec<f64> = params
                .get("coeffs")
                .and_then(|v| serde_json::from_value(v.clone()).ok())
                .unwrap_or_else(|| vec![1.0; n]);
            assert_eq!(coeffs.len(), n, "need one coefficient per coordinate");
            let lip = coeffs.iter().map(|c| c.abs()).sum();
            let c2 = coeffs.clone();
            let grad: GradFn = Arc::new(move |x: &[f64]| {
                x.iter()
                    .zip(&c2)
                    .map(|(&xi, &ci)| ci * xi / (1.0 + xi * xi).sqrt())
                    .collect()
            });
            Ok(SymbolB {
                name: "smooth_invariant".into(),
                eval: Arc::new(move |x| {
                    x.iter()
                        .zip(&coeffs)
                        .map(|(&xi, &ci)| ci * (1.0 + xi * xi).sqrt())
                        .sum()
                }),
                gradient: Some(grad),
                declared_lipd: Some(lip),
                invariant: true,
            })
        }
        "orbit_dist" => {
            let center: Vec<f64> = params
                .get("center")
                .and_then(|v| serde_json::from_value(v.clone()).ok())
                .unwrap_or_else(|| vec![0.0; n]);
            assert_eq!(center.len(), n);
            let g = group.clone();
            Ok(SymbolB {
                name: "orbit_dist".into(),
                eval: Arc::new(move |x| g.orbit_distance(x, &center)),
                gradient: None,
                declared_lipd: Some(1.0),
                invariant: true,
            })
        }
        "coordinate_noninvariant" => Ok(SymbolB {
            name: "coordinate_noninvariant".into(),
            eval: Arc::new(|x| x[0]),
            gradient: Some(Arc::new(|x: &[f64]| {
                let mut g = vec![0.0; x.len()];
                g[0] = 1.0;
                g
            })),
            declared_lipd: None,
            invariant: false,
        }),
        "constant" => {
            let c = params.get("value").and_then(|v| v.as_f64()).unwrap_or(1.0);
            Ok(SymbolB {
                name: "constant".into(),
                eval: Arc::new(move |_| c),
                gradient: Some(Arc::new(|x: &[f64]| vec![0.0; x.len()])),
                declared_lipd: Some(0.0),
                invariant: true,
            })
        }
        other => Err(LabError::UnknownSymbol(other.into())),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Seminorm {
    Finite(f64),
    /// A same-orbit pair with differing values: not orbit-Lipschitz at all.
    Infinite,
}

impl Seminorm {
    pub fn finite_value(self) -> Option<f64> {
        match self {
            Seminorm::Finite(v) => Some(v),
            Seminorm::Infinite => None,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SeminormSampler {
    pub pairs: usize,
    pub box_half_width: f64,
    pub seed: u64,
}

impl Default for SeminormSampler {
    fn default() -> Self {
        SeminormSampler { pairs: 100_000, box_half_width: 5.0, seed: 11 }
    }
}

/// Empirical orbit-Lipschitz seminorm: sup |b(x)-b(y)|/d(x,y) over random
/// pairs, plus a same-orbit violation scan that yields the infinity flag.
pub fn lipd_seminorm(b: &SymbolB, group: &ReflectionGroup, sampler: &SeminormSampler) -> Seminorm {
    let n = group.dimension;
    let l = sampler.box_half_width;
    let mut rng = sampling::seeded_rng(sampler.seed);
    // Same-orbit violation scan: d(x, sigma x) = 0 while b may differ.
    for _ in 0..1000 {
        let x = sampling::sample_box(&mut rng, n, l);
        let bx = b.eval(&x);
        for g in &group.elements[1..] {
            if (b.eval(&g.apply(&x)) - bx).abs() > 1e-8 {
                return Seminorm::Infinite;
            }
        }
    }
    let mut sup = 0.0f64;
    for k in 0..sampler.pairs {
        let x = sampling::sample_box(&mut rng, n, l);
        // Alternate plain pairs with near-orbit pairs y = sigma x + noise,
        // which stress the d -> 0 cancellation structure.
        let y = if k % 2 == 0 {
            sampling::sample_box(&mut rng, n, l)
        } else {
            let g = &group.elements[rng.gen_range(0..group.order())];
            let eps = 10f64.powf(rng.gen_range(-6.0..-1.0));
            g.apply(&x)
                .into_iter()
                .map(|v| v + rng.gen_range(-eps..eps))
                .collect()
        };
        let d = group.orbit_distance(&x, &y);
        if d > 1e-8 {
            sup = sup.max((b.eval(&x) - b.eval(&y)).abs() / d);
        }
    }
    Seminorm::Finite(sup)
}

/// The effective Lipschitz scale used to normalize kernel ratios: declared
/// when available, estimated otherwise; non-admissible symbols get `None`.
pub fn lip_scale(b: &SymbolB, group: &ReflectionGroup) -> Option<f64> {
    if let Some(l) = b.declared_lipd {
        return Some(if l == 0.0 { 0.0 } else { l });
    }
    lipd_seminorm(b, group, &SeminormSampler::default()).finite_value()
}

/// Radial mollification at scale `eps`: a fixed 16-direction x 8-radius
/// average whose direction set is closed under the sign group, so reflection
/// invariance survives. Constants are reproduced exactly (weights sum to 1).
pub fn mollify(b: &SymbolB, eps: f64) -> SymbolB {
    assert!(eps > 0.0);
    let inner = b.eval.clone();
    let name = format!("mollify({}, {eps})", b.name);
    let declared = b.declared_lipd;
    let invariant = b.invariant;
    let radii: Vec<f64> = (0..8).map(|k| eps * (k as f64 + 0.5) / 8.0).collect();
    SymbolB {
        name,
        eval: Arc::new(move |x: &[f64]| {
            let n = x.len();
            let dirs: Vec<Vec<f64>> = if n == 1 {
                vec![vec![1.0], vec![-1.0]]
            } else {
                (0..16)
                    .map(|k| {
                        let a = (k as f64 + 0.5) * std::f64::consts::TAU / 16.0;
                        let mut d = vec![0.0; n];
                        d[0] = a.cos();
                        d[1] = a.sin();
                        d
                    })
                    .collect()
            };
            let mut acc = 0.0;
            let mut wsum = 0.0;
            for &r in &radii {
                let u = r / eps;
                let w = r.powi(n as i32 - 1) * (1.0 - u * u).powi(2);
                for d in &dirs {
                    let y: Vec<f64> = x.iter().zip(d).map(|(xi, di)| xi + r * di).collect();
                    acc += w * inner(&y);
                    wsum += w;
                }
            }
            acc / wsum
        }),
        gradient: None,
        declared_lipd: declared,
        invariant,
    }
}
