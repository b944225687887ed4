//! Scale kernels `theta_s`, the integrated commutator kernel `K_b`, and the
//! Calderon-Zygmund bound probes that normalize them against the expected
//! volume/Gaussian envelopes.

use serde::Serialize;

use crate::dunkl_measure::MeasureContext;
use crate::error::{LabError, Result};
use crate::heat_kernel::HeatContext;
use crate::linalg::dist;
use crate::quadrature::integrate_composite;
use crate::reflection_geometry::{build_group, ReflectionGroup, RootSystemSpec};
use crate::symbols::SymbolB;

/// Gaussian decay constant used in every normalized ratio: deliberately
/// below the true 1/4 decay of the heat kernel so envelope checks keep slack.
pub const GAUSS_C: f64 = 1.0 / 16.0;

/// Orbit-diagonal exclusion threshold for integrated kernels.
pub const DIAGONAL_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug)]
pub struct QuadConfig {
    /// Half-width of the log-time window `u in [-U, U]`, `t = d^2 e^u`.
    pub u_half_width: f64,
    pub panels: usize,
    pub nodes_per_panel: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig { u_half_width: 30.0, panels: 512, nodes_per_panel: 4 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum ProbeScale {
    Scale(f64),
    Integrated,
}

/// One kernel evaluation with its normalization bookkeeping.
#[derive(Clone, Debug, Serialize)]
pub struct KernelProbe {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub scale: ProbeScale,
    pub value: f64,
    /// `V(x, y, s)` or `V(x, y, d)`.
    pub volume_factor: f64,
    /// `e^{-c d^2/s^2}` (scale mode) or `1/V` shorthand recorded as the
    /// inverse volume (integrated mode).
    pub gaussian_factor: f64,
    pub lip_factor: f64,
    /// `|value|` divided by the expected bound envelope.
    pub ratio: f64,
}

/// Context bundle for kernel work: heat kernel + measure + group.
#[derive(Clone, Debug)]
pub struct KernelLab {
    pub spec: RootSystemSpec,
    pub heat: HeatContext,
    pub measure: MeasureContext,
    pub group: ReflectionGroup,
}

impl KernelLab {
    pub fn new(spec: RootSystemSpec) -> Result<Self> {
        let heat = HeatContext::new(&spec)?;
        let group = build_group(&spec)?;
        let measure = MeasureContext::new(spec.clone());
        Ok(KernelLab { spec, heat, measure, group })
    }

    /// Lipschitz scale for ratio normalization: the declared orbit-Lipschitz
    /// bound, or 1 (plain Euclidean normalization) for non-admissible symbols
    /// such as the negative control.
    pub fn lip_factor(&self, b: &SymbolB) -> f64 {
        b.declared_lipd.unwrap_or(1.0)
    }

    /// `V(x, y, r)`: true volume for N <= 2, the closed-form model beyond
    /// (Monte Carlo volumes are too slow per probe).
    pub fn volume(&self, x: &[f64], y: &[f64], r: f64) -> Result<f64> {
        if self.spec.dimension <= 2 {
            self.measure.volume_max(x, y, r)
        } else {
            Ok(self.measure.ball_volume_model(x, r).max(self.measure.ball_volume_model(y, r)))
        }
    }

    fn envelope_ratio(&self, value: f64, volume: f64, log_gauss: f64, lip: f64) -> f64 {
        if value == 0.0 || lip == 0.0 {
            return 0.0;
        }
        let log_ratio = value.abs().ln() + volume.ln() + log_gauss - lip.ln();
        if log_ratio > 700.0 {
            f64::INFINITY
        } else {
            log_ratio.exp()
        }
    }

    /// `theta_s(x, y) = s (b(x) - b(y)) A_{s^2}^{ij}(x, y)` with its
    /// size-bound ratio `|theta| V(x,y,s) e^{+c d^2/s^2} / lip`.
    pub fn theta(
        &self,
        b: &SymbolB,
        s: f64,
        i: usize,
        j: usize,
        x: &[f64],
        y: &[f64],
    ) -> Result<KernelProbe> {
        assert!(s > 0.0, "theta needs s > 0");
        let value = s * (b.eval(x) - b.eval(y)) * self.heat.heat_aij(s * s, x, y, i, j)?;
        let d = self.group.orbit_distance(x, y);
        let volume = self.volume(x, y, s)?;
        let lip = self.lip_factor(b);
        let log_gauss = GAUSS_C * d * d / (s * s);
        Ok(KernelProbe {
            x: x.to_vec(),
            y: y.to_vec(),
            scale: ProbeScale::Scale(s),
            value,
            volume_factor: volume,
            gaussian_factor: (-log_gauss).exp(),
            lip_factor: lip,
            ratio: self.envelope_ratio(value, volume, log_gauss, lip),
        })
    }

    /// `int_lo^hi A_t^{ij}(x, y) dt/sqrt(t)` by composite Gauss in `u = ln t`.
    pub fn a_time_integral(
        &self,
        i: usize,
        j: usize,
        x: &[f64],
        y: &[f64],
        t_lo: f64,
        t_hi: f64,
        panels: usize,
        nodes: usize,
    ) -> f64 {
        assert!(t_lo > 0.0 && t_hi > t_lo);
        integrate_composite(
            |u: f64| {
                let t = u.exp();
                // dt/sqrt(t) = sqrt(t) du
                t.sqrt() * self.heat.heat_aij(t, x, y, i, j).expect("t > 0")
            },
            t_lo.ln(),
            t_hi.ln(),
            panels,
            nodes,
        )
    }

    /// `K_b^{ij}(x, y) = (b(x) - b(y)) int_0^infty A_t^{ij}(x, y) dt/sqrt(t)`
    /// with its size ratio `|K| V(x,y,d) / lip`.
    pub fn integrated_kernel(
        &self,
        b: &SymbolB,
        i: usize,
        j: usize,
        x: &[f64],
        y: &[f64],
        quad: &QuadConfig,
    ) -> Result<KernelProbe> {
        let d = self.group.orbit_distance(x, y);
        if d <= DIAGONAL_TOL {
            return Err(LabError::OrbitDiagonal(d));
        }
        let d2 = d * d;
        let u = quad.u_half_width;
        let integral = self.a_time_integral(
            i,
            j,
            x,
            y,
            d2 * (-u).exp(),
            d2 * u.exp(),
            quad.panels,
            quad.nodes_per_panel,
        );
        // Upper-tail truncation indicator: the integrand decays like
        // e^{-N u/2} in u, so the omitted mass is ~ integrand(U) * 2/N.
        let hom_dim = self.measure.homogeneous_dimension();
        let t_hi = d2 * u.exp();
        let tail = (t_hi.sqrt() * self.heat.heat_aij(t_hi, x, y, i, j)?).abs() * 2.0 / hom_dim;
        if integral != 0.0 && tail > 1e-7 * integral.abs() {
            return Err(LabError::QuadratureFailure {
                indicator: tail / integral.abs(),
                tol: 1e-7,
            });
        }
        let value = (b.eval(x) - b.eval(y)) * integral;
        let volume = self.volume(x, y, d)?;
        let lip = self.lip_factor(b);
        Ok(KernelProbe {
            x: x.to_vec(),
            y: y.to_vec(),
            scale: ProbeScale::Integrated,
            value,
            volume_factor: volume,
            gaussian_factor: 1.0 / volume,
            lip_factor: lip,
            ratio: self.envelope_ratio(value, volume, 0.0, lip),
        })
    }

    /// First-variable regularity ratio: the kernel difference normalized by
    /// the expected right-hand side. `mode = Scale(s)` requires
    /// `|x - x'| <= s`; `Integrated` requires `|x - x'| <= d(x,y)/4`.
    #[allow(clippy::too_many_arguments)]
    pub fn regularity_probe(
        &self,
        b: &SymbolB,
        i: usize,
        j: usize,
        x: &[f64],
        x_prime: &[f64],
        y: &[f64],
        mode: ProbeScale,
        quad: &QuadConfig,
    ) -> Result<f64> {
        let shift = dist(x, x_prime);
        let lip = self.lip_factor(b);
        match mode {
            ProbeScale::Scale(s) => {
                if shift > s {
                    return Err(LabError::PreconditionViolated(format!(
                        "|x - x'| = {shift} exceeds s = {s}"
                    )));
                }
                let diff = self.theta(b, s, i, j, x, y)?.value
                    - self.theta(b, s, i, j, x_prime, y)?.value;
                if diff == 0.0 || lip == 0.0 || shift == 0.0 {
                    return Ok(0.0);
                }
                let d = self.group.orbit_distance(x, y);
                let volume = self.volume(x, y, s)?;
                let log_gauss = GAUSS_C * d * d / (s * s);
                Ok(self.envelope_ratio(diff, volume, log_gauss, lip * shift / s))
            }
            ProbeScale::Integrated => {
                let d = self.group.orbit_distance(x, y);
                if shift > d / 4.0 {
                    return Err(LabError::PreconditionViolated(format!(
                        "|x - x'| = {shift} exceeds d/4 = {}",
                        d / 4.0
                    )));
                }
                let diff = self.integrated_kernel(b, i, j, x, y, quad)?.value
                    - self.integrated_kernel(b, i, j, x_prime, y, quad)?.value;
                if diff == 0.0 || lip == 0.0 || shift == 0.0 {
                    return Ok(0.0);
                }
                let volume = self.volume(x, y, d)?;
                Ok(self.envelope_ratio(diff, volume, 0.0, lip * shift / d))
            }
        }
    }

    /// Second-variable regularity via the symmetry conventions: swap the
    /// arguments and reuse the first-variable probe.
    #[allow(clippy::too_many_arguments)]
    pub fn regularity_probe_second(
        &self,
        b: &SymbolB,
        i: usize,
        j: usize,
        x: &[f64],
        y: &[f64],
        y_prime: &[f64],
        mode: ProbeScale,
        quad: &QuadConfig,
    ) -> Result<f64> {
        self.regularity_probe(b, i, j, y, y_prime, x, mode, quad)
    }

    /// Evaluate both heat-parameter integral bounds and report the LHS/RHS
    /// ratios (`c = 1/16` in the Gaussian).
    pub fn heat_parameter_integral_check(
        &self,
        x: &[f64],
        y: &[f64],
        delta: f64,
    ) -> Result<BasicIntegralReport> {
        let r = self.group.orbit_distance(x, y);
        assert!(r > 0.0, "needs separated points");
        assert!(delta > 0.0 && delta <= r / 4.0, "needs 0 < delta <= r/4");
        let vol = |t: f64| self.volume(x, y, t.sqrt()).expect("volume");
        let gauss = |t: f64| (-GAUSS_C * r * r / t).exp();
        fn in_log(lo: f64, hi: f64, f: &dyn Fn(f64) -> f64) -> f64 {
            integrate_composite(
                |u: f64| {
                    let t = u.exp();
                    t * f(t)
                },
                lo.ln(),
                hi.ln(),
                192,
                6,
            )
        }
        let r2 = r * r;
        let t_min = r2 * (-40f64).exp();
        let t_max = r2 * 40f64.exp();
        let global_lhs =
            r * in_log(t_min, t_max, &|t| t.powf(-1.5) * gauss(t) / vol(t));
        let global_ratio = global_lhs * vol(r2);
        let short = in_log(t_min, delta * delta, &|t| t.powf(-1.5) * gauss(t) / vol(t));
        let long = delta * in_log(delta * delta, t_max, &|t| t.powi(-2) * gauss(t) / vol(t));
        let perturbative_ratio = (short + long) * r2 * vol(r2) / delta;
        Ok(BasicIntegralReport { r, delta, global_ratio, perturbative_ratio })
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct BasicIntegralReport {
    pub r: f64,
    pub delta: f64,
    /// LHS of the global bound divided by `V(x,y,r)^{-1}`.
    pub global_ratio: f64,
    /// LHS of the perturbative bound divided by `delta/(r^2 V(x,y,r))`.
    pub perturbative_ratio: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::builtin_symbol;

    fn lab_1d(kappa: f64) -> KernelLab {
        KernelLab::new(RootSystemSpec::z2n(&[kappa])).unwrap()
    }

    fn smooth_b(lab: &KernelLab) -> SymbolB {
        let coeffs = vec![1.0; lab.spec.dimension];
        builtin_symbol("smooth_invariant", &serde_json::json!({ "coeffs": coeffs }), &lab.group)
            .unwrap()
    }

    #[test]
    fn theta_trivial_cases() {
        let lab = lab_1d(1.0);
        let c = builtin_symbol("constant", &serde_json::json!({"value": 4.0}), &lab.group).unwrap();
        let p = lab.theta(&c, 0.5, 0, 0, &[1.0], &[2.0]).unwrap();
        assert_eq!(p.value, 0.0);
        assert_eq!(p.ratio, 0.0);
        let b = smooth_b(&lab);
        let q = lab.theta(&b, 0.5, 0, 0, &[1.3], &[1.3]).unwrap();
        assert_eq!(q.value, 0.0);
    }

    #[test]
    fn theta_linear_in_b() {
        let lab = lab_1d(1.0);
        let b = smooth_b(&lab);
        let b2 = b.scaled(2.0);
        let p = lab.theta(&b, 0.7, 0, 0, &[0.4], &[1.9]).unwrap();
        let p2 = lab.theta(&b2, 0.7, 0, 0, &[0.4], &[1.9]).unwrap();
        assert!((p2.value - 2.0 * p.value).abs() <= 1e-14 * p.value.abs());
    }

    #[test]
    fn integrated_kernel_classical_closed_form() {
        // kappa = 0, N = 1: int_0^infty d_x^2 G_t dt/sqrt t = 1/(sqrt(pi) r^2).
        let lab = lab_1d(0.0);
        let b = smooth_b(&lab);
        let (x, y) = ([0.3], [1.7]);
        let probe = lab.integrated_kernel(&b, 0, 0, &x, &y, &QuadConfig::default()).unwrap();
        let r = y[0] - x[0];
        let expect =
            (b.eval(&x) - b.eval(&y)) / (std::f64::consts::PI.sqrt() * r * r);
        assert!(
            (probe.value - expect).abs() < 1e-7 * expect.abs(),
            "{} vs {expect}",
            probe.value
        );
    }

    #[test]
    fn integrated_kernel_rejects_orbit_diagonal() {
        let lab = lab_1d(1.0);
        let b = smooth_b(&lab);
        let err = lab
            .integrated_kernel(&b, 0, 0, &[1.0], &[-1.0 + 1e-8], &QuadConfig::default())
            .unwrap_err();
        assert!(matches!(err, LabError::OrbitDiagonal(_)));
    }

    #[test]
    fn integrated_kernel_grid_doubling_converges() {
        let lab = lab_1d(1.3);
        let b = smooth_b(&lab);
        let (x, y) = ([0.6], [2.1]);
        let base = lab.integrated_kernel(&b, 0, 0, &x, &y, &QuadConfig::default()).unwrap();
        let fine = lab
            .integrated_kernel(
                &b,
                0,
                0,
                &x,
                &y,
                &QuadConfig { panels: 1024, ..Default::default() },
            )
            .unwrap();
        assert!((base.value - fine.value).abs() <= 1e-7 * fine.value.abs());
    }

    #[test]
    fn kernel_antisymmetry_in_arguments() {
        let lab = lab_1d(1.0);
        let b = smooth_b(&lab);
        let quad = QuadConfig::default();
        for &(x, y) in &[([0.3], [1.4]), ([2.0], [-0.9]), ([0.2], [4.0])] {
            let pq = lab.integrated_kernel(&b, 0, 0, &x, &y, &quad).unwrap().value;
            let qp = lab.integrated_kernel(&b, 0, 0, &y, &x, &quad).unwrap().value;
            assert!(
                (pq + qp).abs() <= 1e-8 * pq.abs().max(1e-12),
                "x={x:?} y={y:?}: {pq} vs {qp}"
            );
        }
    }

    #[test]
    fn regularity_probe_trivial_and_preconditions() {
        let lab = lab_1d(1.0);
        let b = smooth_b(&lab);
        let quad = QuadConfig::default();
        let same = lab
            .regularity_probe(&b, 0, 0, &[0.8], &[0.8], &[2.0], ProbeScale::Scale(0.5), &quad)
            .unwrap();
        assert_eq!(same, 0.0);
        let err = lab
            .regularity_probe(&b, 0, 0, &[0.8], &[2.2], &[4.0], ProbeScale::Scale(0.5), &quad)
            .unwrap_err();
        assert!(matches!(err, LabError::PreconditionViolated(_)));
        let err2 = lab
            .regularity_probe(&b, 0, 0, &[0.8], &[1.5], &[2.0], ProbeScale::Integrated, &quad)
            .unwrap_err();
        assert!(matches!(err2, LabError::PreconditionViolated(_)));
    }

    #[test]
    fn basic_integral_classical_ratio_is_sixteen() {
        // kappa = 0, N = 1 closed form: global LHS = 1/(2 c r), RHS = 1/(2r),
        // ratio = 1/c = 16.
        let lab = lab_1d(0.0);
        let rep = lab.heat_parameter_integral_check(&[0.0], &[2.0], 0.5).unwrap();
        assert!((rep.global_ratio - 16.0).abs() < 1e-6 * 16.0, "{}", rep.global_ratio);
    }

    #[test]
    fn basic_integral_scale_invariance_classical() {
        let lab = lab_1d(0.0);
        let a = lab.heat_parameter_integral_check(&[0.0], &[1.0], 0.25).unwrap();
        let b = lab.heat_parameter_integral_check(&[0.0], &[3.0], 0.75).unwrap();
        assert!((a.global_ratio - b.global_ratio).abs() < 1e-6 * a.global_ratio);
        assert!((a.perturbative_ratio - b.perturbative_ratio).abs() < 1e-6 * a.perturbative_ratio);
    }

    #[test]
    fn perturbative_bound_linear_in_delta() {
        // The perturbative LHS scales linearly in delta as delta -> 0, so the
        // reported ratio flattens: check the log-log slope of the raw LHS.
        let lab = lab_1d(1.0);
        let (x, y) = ([0.5], [3.0]);
        let mut pts = Vec::new();
        for &delta in &[0.2, 0.1, 0.05, 0.025] {
            let rep = lab.heat_parameter_integral_check(&x, &y, delta).unwrap();
            // raw LHS = ratio * delta / (r^2 V); ratio ~ const means slope 1.
            let r = rep.r;
            let v = lab.volume(&x, &y, r).unwrap();
            let lhs = rep.perturbative_ratio * delta / (r * r * v);
            pts.push((delta.ln(), lhs.ln()));
        }
        let n = pts.len() as f64;
        let (sx, sy): (f64, f64) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        assert!((slope - 1.0).abs() <= 0.05, "slope {slope}");
    }

    #[test]
    fn theta_ratio_finite_on_sample() {
        let lab = lab_1d(1.0);
        let b = smooth_b(&lab);
        let mut rng = crate::sampling::seeded_rng(17);
        use rand::Rng;
        let mut sup = 0.0f64;
        for _ in 0..500 {
            let s = 10f64.powf(rng.gen_range(-1.0..1.0));
            let x = crate::sampling::sample_box(&mut rng, 1, 3.0);
            let y = crate::sampling::sample_box(&mut rng, 1, 3.0);
            let p = lab.theta(&b, s, 0, 0, &x, &y).unwrap();
            assert!(p.ratio.is_finite());
            sup = sup.max(p.ratio);
        }
        assert!(sup > 0.0 && sup < 1e3, "sup {sup}");
    }
}
