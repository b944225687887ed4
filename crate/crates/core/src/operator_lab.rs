//! Discretized truncated commutator operators on box grids: assembly with
//! per-entry heat-time quadrature, weighted operator norms, empirical L^p
//! ratios, bilinear-form convergence against the integrated kernel on
//! separated supports, and the chamber-block (lifted) reindexing.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::chamber_lifting::lifted_k;
use crate::error::{LabError, Result};
use crate::linalg::dist;
use crate::reflection_geometry::{ChamberAtlas, RootSystemSpec};
use crate::scale_kernels::{KernelLab, QuadConfig};
use crate::symbols::SymbolB;

/// Dense-matrix node cap.
pub const GRID_CAP: usize = 4000;
/// Grid nodes keep this distance from every reflecting hyperplane.
pub const GRID_WALL_MARGIN: f64 = 1e-3;

#[derive(Clone, Debug, Serialize)]
pub struct OperatorMeta {
    pub eps: f64,
    pub big_r: f64,
    pub i: usize,
    pub j: usize,
    pub symbol: String,
}

/// Dense discretization of the truncated commutator: entry `(a, c)` is
/// `w_c (b(x_a) - b(x_c)) int_eps^R A_t(x_a, x_c) dt/sqrt(t)`, diagonal
/// exactly zero.
#[derive(Clone, Debug)]
pub struct GridOperator {
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// Row-major `n x n`, column weights folded in.
    pub matrix: Vec<f64>,
    pub metadata: OperatorMeta,
}

impl GridOperator {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn entry(&self, a: usize, c: usize) -> f64 {
        self.matrix[a * self.len() + c]
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let n = self.len();
        assert_eq!(f.len(), n);
        (0..n)
            .map(|a| {
                let row = &self.matrix[a * n..(a + 1) * n];
                row.iter().zip(f).map(|(m, v)| m * v).sum()
            })
            .collect()
    }

    /// Persist as a JSON header (metadata + grid) plus a CSV matrix with a
    /// header row.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let header = serde_json::json!({
            "metadata": self.metadata,
            "nodes": self.nodes,
            "weights": self.weights,
            "matrix_csv": format!("{stem}.csv"),
        });
        std::fs::write(
            dir.join(format!("{stem}.json")),
            serde_json::to_string_pretty(&header)? + "\n",
        )?;
        let n = self.len();
        let mut out = std::io::BufWriter::new(std::fs::File::create(
            dir.join(format!("{stem}.csv")),
        )?);
        let cols: Vec<String> = (0..n).map(|c| format!("col{c}")).collect();
        writeln!(out, "{}", cols.join(","))?;
        for a in 0..n {
            let row: Vec<String> = (0..n).map(|c| format!("{:e}", self.entry(a, c))).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Convergence report for the bilinear pairing against the integrated kernel.
#[derive(Clone, Debug, Serialize)]
pub struct PairingReport {
    pub rungs: Vec<(f64, f64)>,
    /// Relative gap `|<C_{eps,R} f, g> - pairing| / (|pairing| + 1e-12)`.
    pub gaps: Vec<f64>,
    pub kernel_pairing: f64,
}

/// Chamber-block reindexing of a full-space grid operator.
#[derive(Clone, Debug)]
pub struct LiftedOperator {
    /// Chamber representatives shared by all blocks.
    pub chamber_nodes: Vec<Vec<f64>>,
    /// Group order M.
    pub order: usize,
    /// `index[rho][a]`: full-grid index of `sigma_rho * chamber_nodes[a]`.
    pub index: Vec<Vec<usize>>,
    /// `blocks[rho * M + tau]`: row-major `n_c x n_c` block.
    pub blocks: Vec<Vec<f64>>,
}

impl LiftedOperator {
    /// Apply to a lifted function given as `components[tau][a]`.
    pub fn apply(&self, components: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let m = self.order;
        let n = self.chamber_nodes.len();
        (0..m)
            .map(|rho| {
                (0..n)
                    .map(|a| {
                        (0..m)
                            .map(|tau| {
                                let block = &self.blocks[rho * m + tau];
                                (0..n).map(|c| block[a * n + c] * components[tau][c]).sum::<f64>()
                            })
                            .sum()
                    })
                    .collect()
            })
            .collect()
    }
}

/// Smooth compactly supported bump `exp(1 - 1/(1 - u^2))`, `u = |x - c|/r`.
#[derive(Clone, Debug)]
pub struct SeparatedBump {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl SeparatedBump {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let u = dist(x, &self.center) / self.radius;
        if u >= 1.0 {
            0.0
        } else {
            (1.0 - 1.0 / (1.0 - u * u)).exp()
        }
    }
}

/// Heat-time panels for the `[eps, R]` log window, sized for ~1e-7 relative
/// accuracy per entry.
fn panels_for(eps: f64, big_r: f64) -> usize {
    ((big_r / eps).ln() * 12.0).ceil() as usize + 16
}

pub struct OperatorLab {
    pub lab: KernelLab,
    pub atlas: ChamberAtlas,
}

impl OperatorLab {
    pub fn new(spec: RootSystemSpec) -> Result<Self> {
        let lab = KernelLab::new(spec.clone())?;
        let atlas = ChamberAtlas::new(spec)?;
        Ok(OperatorLab { lab, atlas })
    }

    /// Cell-centered tensor grid on `[-l, l]^N` with midpoint omega-weights;
    /// nodes closer than the wall margin are dropped.
    pub fn box_grid(&self, l: f64, per_axis: usize) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
        let n = self.lab.spec.dimension;
        let count = per_axis.pow(n as u32);
        if count > GRID_CAP {
            return Err(LabError::GridTooLarge { nodes: count, cap: GRID_CAP });
        }
        let h = 2.0 * l / per_axis as f64;
        let axis: Vec<f64> = (0..per_axis).map(|k| -l + (k as f64 + 0.5) * h).collect();
        let mut nodes = vec![Vec::new()];
        for _ in 0..n {
            let mut next = Vec::with_capacity(nodes.len() * per_axis);
            for stub in &nodes {
                for &a in &axis {
                    let mut p = stub.clone();
                    p.push(a);
                    next.push(p);
                }
            }
            nodes = next;
        }
        nodes.retain(|p| self.lab.spec.wall_distance(p) >= GRID_WALL_MARGIN);
        let cell = h.powi(n as i32);
        let weights = nodes.iter().map(|p| self.lab.measure.weight(p) * cell).collect();
        Ok((nodes, weights))
    }

    /// Truncated-kernel entry without the column weight:
    /// `(b(x) - b(y)) int_eps^R A_t(x, y) dt/sqrt(t)`.
    fn truncated_kernel(
        &self,
        b: &SymbolB,
        i: usize,
        j: usize,
        x: &[f64],
        y: &[f64],
        eps: f64,
        big_r: f64,
        panels: usize,
    ) -> f64 {
        (b.eval(x) - b.eval(y)) * self.lab.a_time_integral(i, j, x, y, eps, big_r, panels, 4)
    }

    pub fn assemble(
        &self,
        b: &SymbolB,
        i: usize,
        j: usize,
        eps: f64,
        big_r: f64,
        nodes: &[Vec<f64>],
        weights: &[f64],
    ) -> Result<GridOperator> {
        assert!(eps > 0.0 && big_r > eps, "needs 0 < eps < R");
        let n = nodes.len();
        if n > GRID_CAP {
            return Err(LabError::GridTooLarge { nodes: n, cap: GRID_CAP });
        }
        let panels = panels_for(eps, big_r);
        let mut matrix = vec![0.0; n * n];
        for a in 0..n {
            for c in (a + 1)..n {
                // The time integral is symmetric in (x, y); the b-difference
                // supplies the antisymmetry.
                let integral =
                    self.lab.a_time_integral(i, j, &nodes[a], &nodes[c], eps, big_r, panels, 4);
                let diff = b.eval(&nodes[a]) - b.eval(&nodes[c]);
                matrix[a * n + c] = weights[c] * diff * integral;
                matrix[c * n + a] = -weights[a] * diff * integral;
            }
        }
        // Spot-check the entry quadrature against panel doubling.
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for (a, c) in [(0, n / 2), (n / 3, 2 * n / 3), (n / 4, n - 1)] {
            if a == c || a >= n || c >= n {
                continue;
            }
            let base =
                self.lab.a_time_integral(i, j, &nodes[a], &nodes[c], eps, big_r, panels, 4);
            let fine =
                self.lab.a_time_integral(i, j, &nodes[a], &nodes[c], eps, big_r, 2 * panels, 4);
            worst = worst.max((base - fine).abs());
            scale = scale.max(fine.abs());
        }
        if scale > 0.0 && worst > 1e-7 * scale {
            return Err(LabError::QuadratureFailure { indicator: worst / scale, tol: 1e-7 });
        }
        Ok(GridOperator {
            nodes: nodes.to_vec(),
            weights: weights.to_vec(),
            matrix,
            metadata: OperatorMeta { eps, big_r, i, j, symbol: b.name.clone() },
        })
    }

    /// Deterministic trial corpus: Gaussian bumps, modulated bumps
    /// (frequency <= 8), and chamber indicators mollified at scale 0.05.
    /// None of them is reflection invariant in general.
    pub fn trial_corpus(&self, nodes: &[Vec<f64>], count: usize, seed: u64) -> Vec<Vec<f64>> {
        use rand::Rng;
        let mut rng = crate::sampling::seeded_rng(seed);
        let dim = self.lab.spec.dimension;
        let spread = nodes
            .iter()
            .flat_map(|p| p.iter().map(|v| v.abs()))
            .fold(0.0f64, f64::max);
        (0..count)
            .map(|k| {
                let center = crate::sampling::sample_box(&mut rng, dim, 0.7 * spread);
                let width = rng.gen_range(0.2..1.5) * spread / 4.0;
                let bump = |p: &[f64]| {
                    let d = dist(p, &center);
                    (-d * d / (2.0 * width * width)).exp()
                };
                match k % 3 {
                    0 => nodes.iter().map(|p| bump(p)).collect(),
                    1 => {
                        let freq: Vec<f64> =
                            (0..dim).map(|_| rng.gen_range(-8.0..8.0)).collect();
                        let phase = rng.gen_range(0.0..std::f64::consts::TAU);
                        nodes
                            .iter()
                            .map(|p| {
                                (crate::linalg::dot(p, &freq) + phase).cos() * bump(p)
                            })
                            .collect()
                    }
                    _ => {
                        let tau = rng.gen_range(0..self.atlas.order());
                        nodes
                            .iter()
                            .map(|p| self.atlas.chamber_cutoff(tau, 0.05, p))
                            .collect()
                    }
                }
            })
            .collect()
    }

    /// Empirical `sup ||C f||_p / ||f||_p` over the trials, divided by the
    /// Lipschitz normalization.
    pub fn lp_ratio(&self, op: &GridOperator, p: f64, trials: &[Vec<f64>], lip: f64) -> f64 {
        assert!(p > 1.0, "needs p in (1, infinity)");
        assert!(lip > 0.0);
        let mut sup = 0.0f64;
        for f in trials {
            let nf = lp_norm(&op.weights, f, p);
            if nf == 0.0 {
                continue;
            }
            let out = op.apply(f);
            sup = sup.max(lp_norm(&op.weights, &out, p) / nf);
        }
        sup / lip
    }

    /// `<C_{eps,R} f, g>` and the double kernel integral on the same grid,
    /// restricted to the bump supports, for every ladder rung.
    #[allow(clippy::too_many_arguments)]
    pub fn pairing_convergence(
        &self,
        b: &SymbolB,
        i: usize,
        j: usize,
        f: &SeparatedBump,
        g: &SeparatedBump,
        nodes: &[Vec<f64>],
        weights: &[f64],
        ladder: &[(f64, f64)],
    ) -> Result<PairingReport> {
        let sep = self.lab.group.orbit_distance(&f.center, &g.center) - f.radius - g.radius;
        if sep <= 0.0 {
            return Err(LabError::SupportsNotSeparated(sep));
        }
        let support = |bump: &SeparatedBump| -> Vec<(usize, f64)> {
            nodes
                .iter()
                .enumerate()
                .filter_map(|(k, p)| {
                    let v = bump.eval(p);
                    (v != 0.0).then_some((k, v))
                })
                .collect()
        };
        let fs = support(f);
        let gs = support(g);
        let quad = QuadConfig::default();
        let mut kernel_pairing = 0.0;
        for &(a, gv) in &gs {
            for &(c, fv) in &fs {
                let k = self
                    .lab
                    .integrated_kernel(b, i, j, &nodes[a], &nodes[c], &quad)?
                    .value;
                kernel_pairing += weights[a] * weights[c] * gv * k * fv;
            }
        }
        let mut gaps = Vec::with_capacity(ladder.len());
        for &(eps, big_r) in ladder {
            let panels = panels_for(eps, big_r);
            let mut pairing = 0.0;
            for &(a, gv) in &gs {
                for &(c, fv) in &fs {
                    let k = self.truncated_kernel(
                        b, i, j, &nodes[a], &nodes[c], eps, big_r, panels,
                    );
                    pairing += weights[a] * weights[c] * gv * k * fv;
                }
            }
            gaps.push((pairing - kernel_pairing).abs() / (kernel_pairing.abs() + 1e-12));
        }
        Ok(PairingReport { rungs: ladder.to_vec(), gaps, kernel_pairing })
    }

    /// Reindex a full-space operator into chamber blocks. The grid must be
    /// closed under the group action.
    pub fn lifted_operator(&self, op: &GridOperator) -> Result<LiftedOperator> {
        let m = self.atlas.order();
        let n = op.len();
        if n % m != 0 {
            return Err(LabError::GridNotSymmetric);
        }
        let n_c = n / m;
        let mut chamber_nodes: Vec<Vec<f64>> = Vec::with_capacity(n_c);
        let mut index = vec![vec![usize::MAX; n_c]; m];
        for (k, p) in op.nodes.iter().enumerate() {
            let (rho, rep) = self.atlas.chamber_of(p, true)?;
            let slot = match chamber_nodes.iter().position(|q| dist(q, &rep) < 1e-9) {
                Some(s) => s,
                None => {
                    chamber_nodes.push(rep);
                    chamber_nodes.len() - 1
                }
            };
            if slot >= n_c || index[rho][slot] != usize::MAX {
                return Err(LabError::GridNotSymmetric);
            }
            index[rho][slot] = k;
        }
        if index.iter().flatten().any(|&k| k == usize::MAX) {
            return Err(LabError::GridNotSymmetric);
        }
        let mut blocks = Vec::with_capacity(m * m);
        for rho in 0..m {
            for tau in 0..m {
                let mut block = vec![0.0; n_c * n_c];
                for a in 0..n_c {
                    for c in 0..n_c {
                        block[a * n_c + c] = op.entry(index[rho][a], index[tau][c]);
                    }
                }
                blocks.push(block);
            }
        }
        Ok(LiftedOperator { chamber_nodes, order: m, index, blocks })
    }

    /// Max relative defect between lifted blocks of a wide truncation and the
    /// untruncated lifted kernel, over separated chamber node pairs.
    pub fn lifted_block_defect(
        &self,
        op: &GridOperator,
        lifted: &LiftedOperator,
        b: &SymbolB,
    ) -> Result<f64> {
        let quad = QuadConfig::default();
        let m = lifted.order;
        let n_c = lifted.chamber_nodes.len();
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for rho in 0..m {
            for tau in 0..m {
                let block = &lifted.blocks[rho * m + tau];
                for a in (0..n_c).step_by(3) {
                    for c in (0..n_c).step_by(3) {
                        let x = &lifted.chamber_nodes[a];
                        let y = &lifted.chamber_nodes[c];
                        if dist(x, y) < 0.3 {
                            continue;
                        }
                        let w = op.weights[lifted.index[tau][c]];
                        let want = w
                            * lifted_k(
                                &self.lab,
                                &self.atlas,
                                b,
                                op.metadata.i,
                                op.metadata.j,
                                rho,
                                tau,
                                x,
                                y,
                                &quad,
                            )?;
                        worst = worst.max((block[a * n_c + c] - want).abs());
                        scale = scale.max(want.abs());
                    }
                }
            }
        }
        Ok(if scale == 0.0 { 0.0 } else { worst / scale })
    }
}

/// Discrete `L^p(omega)` norm; `p = infinity` gives the max norm.
pub fn lp_norm(weights: &[f64], f: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        f.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    } else {
        weights
            .iter()
            .zip(f)
            .map(|(w, v)| w * v.abs().powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    }
}

/// Largest singular value of the omega-weighted operator: power iteration on
/// the normal matrix of `S = W^{1/2} A W^{1/2}`.
pub fn l2_norm(op: &GridOperator) -> Result<f64> {
    let n = op.len();
    let sqrt_w: Vec<f64> = op.weights.iter().map(|w| w.sqrt()).collect();
    // s[a][c] = matrix[a][c] * sqrt(w_a) / sqrt(w_c)  (column weight folded in).
    let s: Vec<f64> = (0..n * n)
        .map(|k| op.matrix[k] * sqrt_w[k / n] / sqrt_w[k % n])
        .collect();
    if s.iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    let matvec = |m: &[f64], v: &[f64], transpose: bool| -> Vec<f64> {
        let mut out = vec![0.0; n];
        for a in 0..n {
            for c in 0..n {
                if transpose {
                    out[c] += m[a * n + c] * v[a];
                } else {
                    out[a] += m[a * n + c] * v[c];
                }
            }
        }
        out
    };
    use rand::Rng;
    let mut rng = crate::sampling::seeded_rng(42);
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut prev = 0.0f64;
    for iter in 0..10_000 {
        let sv = matvec(&s, &v, false);
        let stsv = matvec(&s, &sv, true);
        let norm: f64 = stsv.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Ok(0.0);
        }
        let rayleigh: f64 = v.iter().zip(&stsv).map(|(a, c)| a * c).sum::<f64>()
            / v.iter().map(|a| a * a).sum::<f64>();
        let est = rayleigh.max(0.0).sqrt();
        if iter > 0 && (est - prev).abs() <= 1e-8 * est.max(1e-300) {
            return Ok(est);
        }
        prev = est;
        v = stsv.iter().map(|x| x / norm).collect();
    }
    Err(LabError::NoConvergence(10_000))
}
