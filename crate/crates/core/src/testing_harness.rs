//! Carleson-type testing machinery: wall-layer measure and Carleson checks,
//! orbit-Gaussian averages, component testing of the scale operators against
//! chamber indicators, the first-order vertical square function, and gradient
//! Carleson sweeps.

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::heat_kernel::z2n_multiplicities;
use crate::linalg::dist;
use crate::quadrature::{
    gauss_legendre, integrate_piecewise, log_grid, merge_intervals, trapezoid_log,
};
use crate::reflection_geometry::{wall_layer, ChamberAtlas, RootSystemSpec};
use crate::scale_kernels::{KernelLab, GAUSS_C};
use crate::symbols::SymbolB;

/// Spatial truncation radius of smoothing integrals, in units of the scale
/// `s`. Sized for the wide orbit-Gaussian envelope `e^{-d^2/(16 s^2)}`,
/// whose omitted tail mass at `12 s` is ~2e-5.
pub const WINDOW_RADIUS: f64 = 12.0;

/// Truncation radius for windows around the heat kernel itself, whose
/// `e^{-d^2/(4 s^2)}` profile leaves tail mass ~1e-7 beyond `8 s`.
pub const THETA_WINDOW_RADIUS: f64 = 8.0;

#[derive(Clone, Debug, Serialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64) -> Self {
        assert!(radius > 0.0, "ball radius must be positive");
        Ball { center, radius }
    }
}

/// Per-ball normalized Carleson integrals and their supremum constant.
#[derive(Clone, Debug, Serialize)]
pub struct CarlesonReport {
    pub balls: Vec<Ball>,
    /// `int_0^r int_B (.) domega ds/s / omega(B)` per ball.
    pub values: Vec<f64>,
    /// Max normalized value divided by the relevant normalization square
    /// (Lipschitz or sup norm of the tested symbol).
    pub sup: f64,
    pub settings: serde_json::Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct WallLayerReport {
    pub lambdas: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Log-log slope of ratio vs lambda (the measured layer exponent).
    pub slope: f64,
}

/// Least-squares slope of `ln y` against `ln x` over points with `y > 0`.
pub fn fit_loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|&(_, &y)| y > 0.0)
        .map(|(&x, &y)| (x.ln(), y.ln()))
        .collect();
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Testing context: kernel lab plus chamber atlas and resolution knobs.
pub struct TestingLab {
    pub lab: KernelLab,
    pub atlas: ChamberAtlas,
    /// Subgroup generated by the roots with positive multiplicity: the heat
    /// kernel only localizes near this orbit (zero-multiplicity reflections
    /// contribute no reflected kernel terms), so smoothing windows and
    /// Gaussian averages use it. With all multiplicities positive it equals
    /// the full group; with all zero it is trivial and everything reduces to
    /// the classical single-Gaussian picture.
    active_group: crate::reflection_geometry::ReflectionGroup,
    /// Geometric s-grid density. The refinement-stability checks double this.
    pub s_per_decade: usize,
    /// Multiplier on all spatial quadrature node counts.
    pub spatial_factor: usize,
}

impl TestingLab {
    pub fn new(spec: RootSystemSpec) -> Result<Self> {
        let lab = KernelLab::new(spec.clone())?;
        let atlas = ChamberAtlas::new(spec.clone())?;
        let mut active = spec;
        let keep: Vec<usize> = (0..active.roots.len())
            .filter(|&k| active.kappa[k] > 0.0)
            .collect();
        active.roots = keep.iter().map(|&k| active.roots[k].clone()).collect();
        active.kappa = keep.iter().map(|&k| active.kappa[k]).collect();
        let active_group = crate::reflection_geometry::build_group(&active)?;
        Ok(TestingLab { lab, atlas, active_group, s_per_decade: 16, spatial_factor: 1 })
    }

    pub fn refined(spec: RootSystemSpec, s_per_decade: usize, spatial_factor: usize) -> Result<Self> {
        let mut t = TestingLab::new(spec)?;
        t.s_per_decade = s_per_decade;
        t.spatial_factor = spatial_factor;
        Ok(t)
    }

    fn dim(&self) -> usize {
        self.lab.spec.dimension
    }

    /// Standard stress family: 3 center types (deep-chamber, wall-adjacent,
    /// wall-centered) at radii spanning two decades.
    pub fn standard_ball_family(&self) -> Vec<Ball> {
        let n = self.dim();
        let mut out = Vec::new();
        for &r in &[0.1, 0.3, 1.0, 3.0, 10.0] {
            let deep = vec![3.0 * r; n];
            let mut adjacent = vec![3.0 * r; n];
            adjacent[0] = 1.25 * r;
            let mut centered = vec![3.0 * r; n];
            centered[0] = 0.0;
            out.push(Ball::new(deep, r));
            out.push(Ball::new(adjacent, r));
            out.push(Ball::new(centered, r));
        }
        out
    }

    // ---- ball quadrature -------------------------------------------------

    /// Gauss nodes/weights on `[a, b]` split into `panels` equal panels.
    fn seg_nodes(a: f64, b: f64, panels: usize, n: usize) -> Vec<(f64, f64)> {
        let (xs, ws) = gauss_legendre(n);
        let h = (b - a) / panels as f64;
        let mut out = Vec::with_capacity(panels * n);
        for p in 0..panels {
            let lo = a + p as f64 * h;
            let mid = lo + 0.5 * h;
            for (&x, &w) in xs.iter().zip(ws) {
                out.push((mid + 0.5 * h * x, 0.5 * h * w));
            }
        }
        out
    }

    /// Nodes on `[a, b]` split at the interior breakpoints.
    fn split_nodes(a: f64, b: f64, cuts: &[f64], panels: usize, n: usize) -> Vec<(f64, f64)> {
        let mut edges: Vec<f64> = cuts.iter().copied().filter(|&c| c > a && c < b).collect();
        edges.sort_by(|x, y| x.partial_cmp(y).unwrap());
        edges.push(b);
        let mut out = Vec::new();
        let mut lo = a;
        let total = b - a;
        for hi in edges {
            if hi > lo {
                let p = ((hi - lo) / total * panels as f64).ceil().max(1.0) as usize;
                out.extend(Self::seg_nodes(lo, hi, p, n));
                lo = hi;
            }
        }
        out
    }

    /// Quadrature nodes for `int_B f domega`: pairs (point, omega-weight).
    ///
    /// Euclidean balls; walls are supplied as breakpoints so the weight's
    /// kinks never straddle a Gauss panel. Supported for N <= 2.
    pub fn ball_nodes(&self, ball: &Ball) -> Result<Vec<(Vec<f64>, f64)>> {
        let c = &ball.center;
        let r = ball.radius;
        let sf = self.spatial_factor;
        match self.dim() {
            1 => {
                let nodes = Self::split_nodes(c[0] - r, c[0] + r, &[0.0], 12 * sf, 6);
                Ok(nodes
                    .into_iter()
                    .map(|(x, w)| {
                        let p = vec![x];
                        let wx = self.lab.measure.weight(&p);
                        (p, w * wx)
                    })
                    .collect())
            }
            2 => {
                // Outer variable x1 = c1 + r sin(phi): removes the sqrt
                // endpoint singularity of the chord width.
                let half_pi = std::f64::consts::FRAC_PI_2;
                let mut cuts = Vec::new();
                if c[0].abs() < r {
                    cuts.push((-c[0] / r).asin());
                }
                let outer = Self::split_nodes(-half_pi, half_pi, &cuts, 5 * sf, 4);
                let mut out = Vec::new();
                for (phi, wphi) in outer {
                    let x1 = c[0] + r * phi.sin();
                    let half = r * phi.cos();
                    let jac = half; // dx1 = r cos(phi) dphi
                    let inner =
                        Self::split_nodes(c[1] - half, c[1] + half, &[0.0], 4 * sf, 4);
                    for (x2, w2) in inner {
                        let p = vec![x1, x2];
                        let wx = self.lab.measure.weight(&p);
                        out.push((p, wphi * jac * w2 * wx));
                    }
                }
                Ok(out)
            }
            n => Err(LabError::Domain(format!(
                "ball quadrature supports N <= 2, got N = {n}"
            ))),
        }
    }

    // ---- wall layers -----------------------------------------------------

    /// Per-axis weight masses for sign-change groups: the weight factors as a
    /// product of `2^{k_j} |u|^{2 k_j}` over the axes.
    fn axis_primitive(kappa: f64, u: f64) -> f64 {
        let e = 2.0 * kappa + 1.0;
        2f64.powf(kappa) * u.signum() * u.abs().powf(e) / e
    }

    fn axis_mass(kappa: f64, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            0.0
        } else {
            Self::axis_primitive(kappa, hi) - Self::axis_primitive(kappa, lo)
        }
    }

    /// Mass of `B cap {|x1| <= clip1} cap {|x2| <= clip2}` for a rank-two
    /// sign-change group, by outer quadrature with an exact inner primitive.
    fn clipped_ball_mass_2d(&self, ball: &Ball, clip: [Option<f64>; 2], kappa: &[f64]) -> f64 {
        let c = &ball.center;
        let r = ball.radius;
        let (mut lo1, mut hi1) = (c[0] - r, c[0] + r);
        if let Some(l) = clip[0] {
            lo1 = lo1.max(-l);
            hi1 = hi1.min(l);
        }
        if hi1 <= lo1 {
            return 0.0;
        }
        let phi_of = |x: f64| ((x - c[0]) / r).clamp(-1.0, 1.0).asin();
        let (plo, phi_hi) = (phi_of(lo1), phi_of(hi1));
        let cuts = [phi_of(0.0)];
        integrate_piecewise(
            |phi: f64| {
                let x1 = c[0] + r * phi.sin();
                let half = r * phi.cos();
                let (mut a2, mut b2) = (c[1] - half, c[1] + half);
                if let Some(l) = clip[1] {
                    a2 = a2.max(-l);
                    b2 = b2.min(l);
                }
                let w1 = 2f64.powf(kappa[0]) * x1.abs().powf(2.0 * kappa[0]);
                r * phi.cos() * w1 * Self::axis_mass(kappa[1], a2, b2)
            },
            plo,
            phi_hi,
            &cuts,
            64,
        )
    }

    /// Relative mass of the wall layer `{dist(., walls) <= lambda r}` inside
    /// the ball, on each grid value, with the fitted log-log slope.
    pub fn wall_layer_measure_check(
        &self,
        ball: &Ball,
        lambdas: &[f64],
    ) -> Result<WallLayerReport> {
        assert!(
            lambdas.iter().all(|&l| l > 0.0 && l <= 1.0),
            "lambda grid must lie in (0, 1]"
        );
        let kappa = z2n_multiplicities(&self.lab.spec)?;
        let total = self.lab.measure.ball_volume(&ball.center, ball.radius)?;
        let layer_mass = |lam: f64| -> f64 {
            let t = lam * ball.radius;
            match self.dim() {
                1 => {
                    let (a, b) = (ball.center[0] - ball.radius, ball.center[0] + ball.radius);
                    Self::axis_mass(kappa[0], a.max(-t), b.min(t))
                }
                _ => {
                    let m1 = self.clipped_ball_mass_2d(ball, [Some(t), None], &kappa);
                    let m2 = self.clipped_ball_mass_2d(ball, [None, Some(t)], &kappa);
                    let m12 = self.clipped_ball_mass_2d(ball, [Some(t), Some(t)], &kappa);
                    m1 + m2 - m12
                }
            }
        };
        if self.dim() > 2 {
            return Err(LabError::Domain(
                "wall layer measure check supports N <= 2".into(),
            ));
        }
        let ratios: Vec<f64> = lambdas.iter().map(|&l| layer_mass(l) / total).collect();
        let slope = fit_loglog_slope(lambdas, &ratios);
        Ok(WallLayerReport { lambdas: lambdas.to_vec(), ratios, slope })
    }

    /// `int_0^r int_B m_s(x)^2 domega(x) ds/s / omega(B)` with the s-range
    /// truncated to `[1e-4 r, r]` on a geometric grid.
    pub fn wall_layer_carleson(&self, ball: &Ball) -> Result<f64> {
        let nodes = self.ball_nodes(ball)?;
        let total = self.lab.measure.ball_volume(&ball.center, ball.radius)?;
        let grid = log_grid(1e-4 * ball.radius, ball.radius, self.s_per_decade);
        let val = trapezoid_log(&grid, |s| {
            nodes
                .iter()
                .map(|(x, w)| {
                    let m = wall_layer(&self.lab.spec, s, x);
                    w * m * m
                })
                .sum::<f64>()
        }) / total;
        if !val.is_finite() {
            return Err(LabError::QuadratureFailure { indicator: val, tol: f64::INFINITY });
        }
        Ok(val)
    }

    // ---- orbit-window smoothing integrals --------------------------------

    /// `int f(y) w(y) dy` over the union of boxes of half-width `12 s`
    /// centered at the orbit of `x`, with walls as quadrature breakpoints.
    pub fn window_integral(&self, s: f64, x: &[f64], f: &dyn Fn(&[f64]) -> f64) -> f64 {
        self.window_integral_r(s, WINDOW_RADIUS, x, f)
    }

    fn window_integral_r(
        &self,
        s: f64,
        radius_units: f64,
        x: &[f64],
        f: &dyn Fn(&[f64]) -> f64,
    ) -> f64 {
        assert!(s > 0.0, "window integral needs s > 0");
        let h = radius_units * s;
        let images: Vec<Vec<f64>> =
            self.active_group.elements.iter().map(|g| g.apply(x)).collect();
        let sf = self.spatial_factor;
        match self.dim() {
            1 => {
                let ivs = merge_intervals(
                    images.iter().map(|p| (p[0] - h, p[0] + h)).collect(),
                );
                let mut acc = 0.0;
                for (a, b) in ivs {
                    let panels = (((b - a) / s).ceil() as usize).clamp(8, 48) * sf;
                    for (y, w) in Self::split_nodes(a, b, &[0.0], panels, 4) {
                        let p = [y];
                        acc += w * self.lab.measure.weight(&p) * f(&p);
                    }
                }
                acc
            }
            2 => {
                // Strip decomposition of the box union: exact, no double
                // counting where reflected windows overlap.
                let boxes: Vec<([f64; 2], [f64; 2])> = images
                    .iter()
                    .map(|p| ([p[0] - h, p[1] - h], [p[0] + h, p[1] + h]))
                    .collect();
                let mut edges: Vec<f64> = boxes
                    .iter()
                    .flat_map(|(lo, hi)| [lo[0], hi[0]])
                    .chain(std::iter::once(0.0))
                    .collect();
                edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
                edges.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
                let mut acc = 0.0;
                for win in edges.windows(2) {
                    let (u, v) = (win[0], win[1]);
                    let mid = 0.5 * (u + v);
                    let active: Vec<(f64, f64)> = boxes
                        .iter()
                        .filter(|(lo, hi)| lo[0] <= mid && hi[0] >= mid)
                        .map(|(lo, hi)| (lo[1], hi[1]))
                        .collect();
                    if active.is_empty() {
                        continue;
                    }
                    let inner_ivs = merge_intervals(active);
                    // Two Gauss points per kernel width keep the cost of the
                    // node product manageable in rank two.
                    let panels = (((v - u) / (2.0 * s)).ceil() as usize).clamp(1, 12) * sf;
                    for (y1, w1) in Self::seg_nodes(u, v, panels, 4) {
                        for &(a, b) in &inner_ivs {
                            let ip = (((b - a) / (2.0 * s)).ceil() as usize).clamp(2, 16) * sf;
                            for (y2, w2) in Self::split_nodes(a, b, &[0.0], ip, 4) {
                                let p = [y1, y2];
                                acc += w1 * w2 * self.lab.measure.weight(&p) * f(&p);
                            }
                        }
                    }
                }
                acc
            }
            n => panic!("window integral supports N <= 2, got N = {n}"),
        }
    }

    /// Orbit-Gaussian average
    /// `G_s F(x) = int V(x,y,s)^{-1} e^{-c d(x,y)^2/s^2} F(y) domega(y)`.
    pub fn gaussian_average(&self, s: f64, f: &dyn Fn(&[f64]) -> f64, x: &[f64]) -> f64 {
        self.window_integral(s, x, &|y| {
            let d = self.active_group.orbit_distance(x, y);
            let vol = if self.dim() == 1 {
                self.lab.volume(x, y, s).expect("volume")
            } else {
                // Model volumes above rank one: a per-node exact volume
                // quadrature would dominate the cost of the average.
                self.lab
                    .measure
                    .ball_volume_model(x, s)
                    .max(self.lab.measure.ball_volume_model(y, s))
            };
            (-GAUSS_C * d * d / (s * s)).exp() / vol * f(y)
        })
    }

    // ---- component testing -----------------------------------------------

    /// `Theta_s chi_tau(x)`: the scale operator applied to the chamber
    /// indicator by spatial quadrature over the orbit window.
    pub fn theta_on_indicator(
        &self,
        b: &SymbolB,
        tau: usize,
        s: f64,
        i: usize,
        j: usize,
        x: &[f64],
    ) -> f64 {
        let bx = b.eval(x);
        self.window_integral_r(s, THETA_WINDOW_RADIUS, x, &|y| {
            if self.atlas.chamber_indicator(tau, y) == 0.0 {
                0.0
            } else {
                s * (bx - b.eval(y)) * self.lab.heat.heat_aij(s * s, x, y, i, j).expect("s > 0")
            }
        })
    }

    /// Normalized Carleson integrals of `|Theta_s chi_tau|^2` over the ball
    /// family; `sup` is the max value divided by the squared Lipschitz scale.
    pub fn component_testing(
        &self,
        b: &SymbolB,
        tau: usize,
        balls: &[Ball],
        i: usize,
        j: usize,
    ) -> Result<CarlesonReport> {
        let mut values = Vec::with_capacity(balls.len());
        for ball in balls {
            let nodes = self.ball_nodes(ball)?;
            let total = self.lab.measure.ball_volume(&ball.center, ball.radius)?;
            let grid = log_grid(1e-3 * ball.radius, ball.radius, self.s_per_decade);
            let val = trapezoid_log(&grid, |s| {
                nodes
                    .iter()
                    .map(|(x, w)| {
                        let th = self.theta_on_indicator(b, tau, s, i, j, x);
                        w * th * th
                    })
                    .sum::<f64>()
            }) / total;
            if !val.is_finite() {
                return Err(LabError::QuadratureFailure {
                    indicator: val,
                    tol: f64::INFINITY,
                });
            }
            values.push(val);
        }
        let lip = self.lab.lip_factor(b);
        let max = values.iter().cloned().fold(0.0, f64::max);
        let sup = if max == 0.0 { 0.0 } else { max / (lip * lip) };
        Ok(CarlesonReport {
            balls: balls.to_vec(),
            values,
            sup,
            settings: serde_json::json!({
                "s_per_decade": self.s_per_decade,
                "s_range": "[1e-3 r, r]",
                "spatial_factor": self.spatial_factor,
                "window_radius": WINDOW_RADIUS,
            }),
        })
    }

    /// Max defect of the adjoint identity on probe pairs: the transpose of
    /// the scale kernel equals minus the kernel itself for real symbols,
    /// relative to the largest kernel magnitude seen.
    pub fn adjoint_defect(
        &self,
        b: &SymbolB,
        s: f64,
        i: usize,
        j: usize,
        pairs: &[(Vec<f64>, Vec<f64>)],
    ) -> Result<f64> {
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for (x, y) in pairs {
            let fwd = self.lab.theta(b, s, i, j, x, y)?.value;
            let bwd = self.lab.theta(b, s, i, j, y, x)?.value;
            worst = worst.max((fwd + bwd).abs());
            scale = scale.max(fwd.abs()).max(bwd.abs());
        }
        Ok(if scale == 0.0 { 0.0 } else { worst / scale })
    }

    // ---- vertical square function ----------------------------------------

    /// `int_0^infty ||s T_l H_{s^2} f||^2 ds/s / ||f||^2` on a discrete grid,
    /// with the exact first-derivative kernel and a geometric s-grid over
    /// `[1e-3, 1e3]`.
    pub fn vertical_square_function(
        &self,
        nodes: &[Vec<f64>],
        weights: &[f64],
        values: &[f64],
        ell: usize,
    ) -> Result<f64> {
        assert_eq!(nodes.len(), weights.len());
        assert_eq!(nodes.len(), values.len());
        let norm2: f64 = weights.iter().zip(values).map(|(w, v)| w * v * v).sum();
        if norm2 == 0.0 {
            return Ok(0.0);
        }
        // Below the node spacing the discrete heat sum no longer resolves the
        // kernel, so start the scale integration at the grid's own resolution.
        let mut spacing = f64::INFINITY;
        for (a, xa) in nodes.iter().enumerate() {
            for yb in nodes.iter().skip(a + 1) {
                spacing = spacing.min(dist(xa, yb));
            }
        }
        let s_lo = 1e-3f64.max(spacing);
        let grid = log_grid(s_lo, 1e3, self.s_per_decade);
        let total = trapezoid_log(&grid, |s| {
            let t = s * s;
            let mut acc = 0.0;
            for (xa, wa) in nodes.iter().zip(weights) {
                let mut val = 0.0;
                for ((yb, wb), fb) in nodes.iter().zip(weights).zip(values) {
                    if *fb == 0.0 {
                        continue;
                    }
                    val += s
                        * self.lab.heat.heat_tj(t, xa, yb, ell).expect("t > 0")
                        * wb
                        * fb;
                }
                acc += wa * val * val;
            }
            acc
        });
        Ok(total / norm2)
    }

    /// Cell-centered tensor grid on `[-l, l]^N` with midpoint omega-weights;
    /// even `per_axis` keeps every node strictly off the coordinate walls.
    pub fn uniform_grid(&self, l: f64, per_axis: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        assert!(per_axis % 2 == 0, "even per_axis keeps nodes off the walls");
        let n = self.dim();
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
        let cell = h.powi(n as i32);
        let weights = nodes.iter().map(|p| self.lab.measure.weight(p) * cell).collect();
        (nodes, weights)
    }

    // ---- gradient Carleson ------------------------------------------------

    /// `s T_l H_{s^2} g(x)` by orbit-window quadrature with the exact
    /// first-derivative kernel.
    pub fn smoothed_gradient(
        &self,
        g: &dyn Fn(&[f64]) -> f64,
        s: f64,
        ell: usize,
        x: &[f64],
    ) -> f64 {
        self.window_integral(s, x, &|y| {
            s * self.lab.heat.heat_tj(s * s, x, y, ell).expect("s > 0") * g(y)
        })
    }

    /// Normalized Carleson integrals of `|s T_l H_{s^2} g|^2`; `sup` divides
    /// by the squared sup norm of `g`.
    pub fn gradient_carleson(
        &self,
        g: &dyn Fn(&[f64]) -> f64,
        g_sup: f64,
        balls: &[Ball],
        ell: usize,
    ) -> Result<CarlesonReport> {
        assert!(g_sup > 0.0, "needs a positive sup-norm bound");
        let mut values = Vec::with_capacity(balls.len());
        for ball in balls {
            let nodes = self.ball_nodes(ball)?;
            let total = self.lab.measure.ball_volume(&ball.center, ball.radius)?;
            let grid = log_grid(1e-3 * ball.radius, ball.radius, self.s_per_decade);
            let val = trapezoid_log(&grid, |s| {
                nodes
                    .iter()
                    .map(|(x, w)| {
                        let v = self.smoothed_gradient(g, s, ell, x);
                        w * v * v
                    })
                    .sum::<f64>()
            }) / total;
            if !val.is_finite() {
                return Err(LabError::QuadratureFailure {
                    indicator: val,
                    tol: f64::INFINITY,
                });
            }
            values.push(val);
        }
        let sup = values.iter().cloned().fold(0.0, f64::max) / (g_sup * g_sup);
        Ok(CarlesonReport {
            balls: balls.to_vec(),
            values,
            sup,
            settings: serde_json::json!({
                "s_per_decade": self.s_per_decade,
                "s_range": "[1e-3 r, r]",
                "spatial_factor": self.spatial_factor,
                "window_radius": WINDOW_RADIUS,
            }),
        })
    }
}
