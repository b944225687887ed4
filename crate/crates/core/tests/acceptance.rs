//! End-to-end acceptance checks for the laboratory. Each test pins one
//! verification target with a fixed tolerance and prints a single pass/fail
//! line (visible with `--nocapture` or on failure).

use dunkl_czo_lab::chamber_lifting::{full_norm, lift, lifted_norm, unlift, ChamberGrid};
use dunkl_czo_lab::dunkl_calculus::{dunkl_apply, dunkl_apply_second, DunklOracleConfig};
use dunkl_czo_lab::heat_kernel::{z2n_multiplicities, HeatContext};
use dunkl_czo_lab::linalg::dist;
use dunkl_czo_lab::operator_lab::{l2_norm, OperatorLab, SeparatedBump};
use dunkl_czo_lab::quadrature::integrate_composite;
use dunkl_czo_lab::reflection_geometry::{ChamberAtlas, RootSystemSpec};
use dunkl_czo_lab::sampling::{sample_box, sample_chamber_interior, sample_off_wall, seeded_rng};
use dunkl_czo_lab::scale_kernels::{KernelLab, ProbeScale, QuadConfig};
use dunkl_czo_lab::symbols::{builtin_symbol, lipd_seminorm, Seminorm, SeminormSampler, SymbolB};
use dunkl_czo_lab::testing_harness::{Ball, TestingLab};
use rand::Rng;

const SEED: u64 = 20260823;

/// Print the one-line verdict and assert it.
fn verdict(name: &str, pass: bool, detail: &str) {
    println!("{}: {} [{}]", if pass { "PASS" } else { "FAIL" }, name, detail);
    assert!(pass, "{name} failed: {detail}");
}

fn invariant_symbol(lab: &KernelLab) -> SymbolB {
    let coeffs: Vec<f64> = vec![1.0; lab.spec.dimension];
    builtin_symbol("smooth_invariant", &serde_json::json!({ "coeffs": coeffs }), &lab.group)
        .expect("builtin symbol")
}

// ---------------------------------------------------------------------------
// 1. Chamber representative identity
// ---------------------------------------------------------------------------

#[test]
fn a01_chamber_representative_identity() {
    let mut worst = 0.0f64;
    for (name, kappa) in [
        ("z2", vec![0.7]),
        ("z2xz2", vec![0.7, 0.9]),
        ("b2", vec![0.7, 0.9]),
        ("i2_6", vec![0.7, 0.9]),
    ] {
        let spec = RootSystemSpec::preset(name, &kappa).expect("preset");
        let atlas = ChamberAtlas::new(spec).expect("atlas");
        let m = atlas.order();
        let mut rng = seeded_rng(SEED);
        for _ in 0..10_000 {
            let x = sample_chamber_interior(&mut rng, &atlas, 3.0, 1e-9);
            let y = sample_chamber_interior(&mut rng, &atlas, 3.0, 1e-9);
            let e = dist(&x, &y);
            for rho in 0..m {
                let xr = atlas.group.elements[rho].apply(&x);
                for tau in 0..m {
                    let yr = atlas.group.elements[tau].apply(&y);
                    worst = worst.max((atlas.group.orbit_distance(&xr, &yr) - e).abs());
                }
            }
        }
    }
    verdict(
        "chamber-representative-identity",
        worst <= 1e-10,
        &format!("worst |d(sx,ty) - |x-y|| = {worst:.3e}, tol 1e-10"),
    );
}

// ---------------------------------------------------------------------------
// 2. Lifting isometry
// ---------------------------------------------------------------------------

#[test]
fn a02_lifting_isometry() {
    let mut worst = 0.0f64;
    for (name, kappa, per_axis) in [("z2", vec![1.0], 24), ("b2", vec![0.7, 0.9], 12)] {
        let spec = RootSystemSpec::preset(name, &kappa).expect("preset");
        let atlas = ChamberAtlas::new(spec).expect("atlas");
        let grid = ChamberGrid::new(&atlas, 2.0, per_axis);
        let n = atlas.spec.dimension;
        let mut rng = seeded_rng(SEED ^ 2);
        for _ in 0..100 {
            let a = sample_box(&mut rng, n, 3.0);
            let c: f64 = rng.gen_range(-1.0..1.0);
            let f =
                |x: &[f64]| (a.iter().zip(x).map(|(u, v)| u * v).sum::<f64>()).sin() + c;
            let lifted = lift(&atlas, f, &grid);
            for &p in &[Some(1.0), Some(2.0), Some(4.0), None] {
                let lp = lifted_norm(&lifted, p);
                let fp = full_norm(&atlas, f, &grid, p);
                worst = worst.max((lp - fp).abs() / fp.max(1e-300));
            }
        }
        // Round trip at reflected nodes (consistency of the identification).
        let g = |x: &[f64]| x.iter().map(|v| v * v * v).sum::<f64>();
        let lifted = lift(&atlas, g, &grid);
        for x in grid.nodes.iter().take(50) {
            for e in &atlas.group.elements {
                let y = e.apply(x);
                let rt = (unlift(&atlas, &lifted, &y).expect("unlift") - g(&y)).abs();
                assert!(rt <= 1e-12, "round trip defect {rt}");
            }
        }
    }
    verdict(
        "lifting-isometry",
        worst <= 1e-13,
        &format!("worst relative norm defect = {worst:.3e}, tol 1e-13"),
    );
}

// ---------------------------------------------------------------------------
// 3 & 4. Heat kernel derivative identities vs. finite-difference oracles
// ---------------------------------------------------------------------------

fn derivative_devs(probes_per_case: usize) -> (f64, f64) {
    let oracle = DunklOracleConfig::default();
    let (mut tj_dev, mut aij_dev) = (0.0f64, 0.0f64);
    for n in [1usize, 2] {
        for &k in &[0.0, 0.5, 1.0, 2.3] {
            let spec = RootSystemSpec::z2n(&vec![k; n]);
            let heat = HeatContext::new(&spec).expect("heat context");
            let mut rng = seeded_rng(SEED ^ 3 ^ (n as u64) ^ k.to_bits());
            let mut done = 0;
            while done < probes_per_case {
                let x = sample_off_wall(&mut rng, &spec, 3.0, 0.05);
                let y = sample_box(&mut rng, n, 3.0);
                let t = 10f64.powf(rng.gen_range(-1.0..0.5));
                let i = rng.gen_range(0..n);
                let j = rng.gen_range(0..n);
                let h = |p: &[f64]| heat.heat_eval(t, p, &y).expect("t > 0");
                let mut xi = vec![0.0; n];
                xi[j] = 1.0;
                let scale = heat.heat_eval(t, &x, &x).expect("t > 0") / t.sqrt();
                let Ok(fd) = dunkl_apply(&oracle, &spec, h, &xi, &x) else { continue };
                tj_dev =
                    tj_dev.max((fd - heat.heat_tj(t, &x, &y, j).unwrap()).abs() / scale);
                if let Ok(fd2) = dunkl_apply_second(&oracle, &spec, h, i, j, &x) {
                    aij_dev = aij_dev.max(
                        (fd2 - heat.heat_aij(t, &x, &y, i, j).unwrap()).abs()
                            / (scale / t.sqrt()),
                    );
                }
                done += 1;
            }
        }
    }
    (tj_dev, aij_dev)
}

#[test]
fn a03_first_derivative_identity() {
    // 8 (dimension, multiplicity) cases x 140 probes >= 10^3 total.
    let (tj_dev, _) = derivative_devs(140);
    verdict(
        "heat-first-derivative-identity",
        tj_dev <= 1e-5,
        &format!("worst normalized deviation = {tj_dev:.3e}, tol 1e-5"),
    );
}

#[test]
fn a04_second_derivative_structure() {
    let (_, aij_dev) = derivative_devs(140);
    // Zero-multiplicity case: the structure formula must coincide with the
    // classical Gaussian Hessian in closed form.
    let mut gauss_dev = 0.0f64;
    for n in [1usize, 2] {
        let spec = RootSystemSpec::z2n(&vec![0.0; n]);
        let heat = HeatContext::new(&spec).expect("heat context");
        let mut rng = seeded_rng(SEED ^ 4 ^ (n as u64));
        for _ in 0..300 {
            let x = sample_box(&mut rng, n, 3.0);
            let y = sample_box(&mut rng, n, 3.0);
            let t = 10f64.powf(rng.gen_range(-1.0..0.5));
            let d2: f64 = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum();
            let g = (-d2 / (4.0 * t)).exp()
                / (4.0 * std::f64::consts::PI * t).powf(n as f64 / 2.0);
            for i in 0..n {
                for j in 0..n {
                    let delta = if i == j { 1.0 } else { 0.0 };
                    let hess =
                        ((y[i] - x[i]) * (y[j] - x[j]) / (4.0 * t * t) - delta / (2.0 * t)) * g;
                    let scale = heat.heat_eval(t, &x, &x).unwrap() / t;
                    gauss_dev = gauss_dev
                        .max((heat.heat_aij(t, &x, &y, i, j).unwrap() - hess).abs() / scale);
                }
            }
        }
    }
    let pass = aij_dev <= 1e-4 && gauss_dev <= 1e-10;
    verdict(
        "heat-second-derivative-structure",
        pass,
        &format!(
            "oracle deviation = {aij_dev:.3e} (tol 1e-4), Gaussian Hessian deviation = {gauss_dev:.3e} (tol 1e-10)"
        ),
    );
}

// ---------------------------------------------------------------------------
// 5. Heat semigroup sanity
// ---------------------------------------------------------------------------

#[test]
fn a05_heat_semigroup_sanity() {
    let mut mass_dev = 0.0f64;
    let mut semi_dev = 0.0f64;
    for kappa in [vec![1.0], vec![1.0, 0.5]] {
        let n = kappa.len();
        let spec = RootSystemSpec::z2n(&kappa);
        let heat = HeatContext::new(&spec).expect("heat context");
        let mult = z2n_multiplicities(&spec).unwrap();
        let mut rng = seeded_rng(SEED ^ 5);
        for _ in 0..60 {
            let x = sample_box(&mut rng, n, 3.0);
            for &t in &[0.05, 0.5, 2.0] {
                let mass: f64 = (0..n).map(|k| heat.factor_mass(k, t, x[k])).product();
                mass_dev = mass_dev.max((mass - 1.0).abs());
            }
        }
        // Per-axis composition h_t * h_t = h_{2t} by weighted 1D quadrature.
        for _ in 0..20 {
            let x = sample_box(&mut rng, n, 2.0);
            let y = sample_box(&mut rng, n, 2.0);
            for &t in &[0.1f64, 1.0] {
                for axis in 0..n {
                    let k = mult[axis];
                    let l = x[axis].abs().max(y[axis].abs()) + 14.0 * (2.0 * t).sqrt();
                    let w = |z: f64| 2f64.powf(k) * z.abs().powf(2.0 * k);
                    let f = |z: f64| {
                        heat.factor(axis, t, x[axis], z) * heat.factor(axis, t, z, y[axis]) * w(z)
                    };
                    let panels = ((l / (0.4 * t.sqrt())).ceil() as usize).clamp(24, 400);
                    let composed = integrate_composite(f, -l, 0.0, panels, 10)
                        + integrate_composite(f, 0.0, l, panels, 10);
                    let target = heat.factor(axis, 2.0 * t, x[axis], y[axis]);
                    let scale = heat.factor(axis, 2.0 * t, x[axis], x[axis]).max(target.abs());
                    semi_dev = semi_dev.max((composed - target).abs() / scale);
                }
            }
        }
    }
    // Zero multiplicity reduces to the classical Gaussian kernel.
    let mut gauss_dev = 0.0f64;
    for n in [1usize, 2] {
        let zero = HeatContext::new(&RootSystemSpec::z2n(&vec![0.0; n])).unwrap();
        let mut rng = seeded_rng(SEED ^ 6);
        for _ in 0..200 {
            let x = sample_box(&mut rng, n, 3.0);
            let y = sample_box(&mut rng, n, 3.0);
            let t = 10f64.powf(rng.gen_range(-1.5..0.5));
            let d2: f64 = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum();
            let g = (-d2 / (4.0 * t)).exp()
                / (4.0 * std::f64::consts::PI * t).powf(n as f64 / 2.0);
            gauss_dev = gauss_dev.max((zero.heat_eval(t, &x, &y).unwrap() - g).abs() / g);
        }
    }
    let pass = mass_dev <= 1e-6 && semi_dev <= 1e-5 && gauss_dev <= 1e-12;
    verdict(
        "heat-semigroup-sanity",
        pass,
        &format!(
            "mass = {mass_dev:.3e} (tol 1e-6), composition = {semi_dev:.3e} (tol 1e-5), gaussian = {gauss_dev:.3e} (tol 1e-12)"
        ),
    );
}

// ---------------------------------------------------------------------------
// 6. Scale-kernel size and regularity envelopes
// ---------------------------------------------------------------------------

#[test]
fn a06_scale_kernel_envelopes() {
    let lab = KernelLab::new(RootSystemSpec::z2n(&[1.0])).expect("lab");
    let b = invariant_symbol(&lab);
    let quad = QuadConfig::default();
    let mut rng = seeded_rng(SEED ^ 7);

    // Size envelope over 2 * 10^4 probes, first half as the drift baseline.
    let (mut sup_half, mut sup_full) = (0.0f64, 0.0f64);
    for k in 0..20_000 {
        let x = sample_box(&mut rng, 1, 3.0);
        let y = sample_box(&mut rng, 1, 3.0);
        let s = 10f64.powf(rng.gen_range(-1.5..1.0));
        let p = lab.theta(&b, s, 0, 0, &x, &y).expect("theta");
        if k < 10_000 {
            sup_half = sup_half.max(p.ratio);
        }
        sup_full = sup_full.max(p.ratio);
    }
    let size_drift = (sup_full - sup_half) / sup_half;

    // First- and second-variable regularity ratios with the same doubling.
    let mut reg = [[0.0f64; 2]; 2]; // [variable][half/full]
    for k in 0..10_000 {
        let x = sample_box(&mut rng, 1, 3.0);
        let y = sample_box(&mut rng, 1, 3.0);
        let s = 10f64.powf(rng.gen_range(-1.0..0.7));
        let shift = s * 10f64.powf(rng.gen_range(-2.0..0.0));
        let mut xp = x.clone();
        xp[0] += shift;
        let mut yp = y.clone();
        yp[0] += shift;
        let r1 = lab
            .regularity_probe(&b, 0, 0, &x, &xp, &y, ProbeScale::Scale(s), &quad)
            .expect("regularity");
        let r2 = lab
            .regularity_probe_second(&b, 0, 0, &x, &y, &yp, ProbeScale::Scale(s), &quad)
            .expect("regularity");
        if k < 5_000 {
            reg[0][0] = reg[0][0].max(r1);
            reg[1][0] = reg[1][0].max(r2);
        }
        reg[0][1] = reg[0][1].max(r1);
        reg[1][1] = reg[1][1].max(r2);
    }
    let reg_drift =
        ((reg[0][1] - reg[0][0]) / reg[0][0]).max((reg[1][1] - reg[1][0]) / reg[1][0]);

    let pass = sup_full.is_finite()
        && sup_full <= 1e3
        && size_drift <= 0.05
        && reg[0][1] <= 1e3
        && reg[1][1] <= 1e3
        && reg_drift <= 0.05;
    verdict(
        "scale-kernel-envelopes",
        pass,
        &format!(
            "size sup = {sup_full:.3e} drift {size_drift:.2e}, regularity sups = {:.3e}/{:.3e} drift {reg_drift:.2e} (tol 5%)",
            reg[0][1], reg[1][1]
        ),
    );
}

// ---------------------------------------------------------------------------
// 7. Integrated-kernel size and regularity envelopes
// ---------------------------------------------------------------------------

#[test]
fn a07_integrated_kernel_envelopes() {
    let quad = QuadConfig::default();
    let mut pass = true;
    let mut details = Vec::new();
    for (kappa, size_count, reg_count) in
        [(vec![1.0], 600usize, 160usize), (vec![1.0, 0.5], 900, 60)]
    {
        let n = kappa.len();
        let lab = KernelLab::new(RootSystemSpec::z2n(&kappa)).expect("lab");
        let b = invariant_symbol(&lab);
        let (i, j) = (0, n - 1);
        let mut rng = seeded_rng(SEED ^ 8 ^ n as u64);

        let (mut half, mut full) = (0.0f64, 0.0f64);
        let mut got = 0;
        while got < size_count {
            let x = sample_box(&mut rng, n, 3.0);
            let y = sample_box(&mut rng, n, 3.0);
            if lab.group.orbit_distance(&x, &y) < 0.05 {
                continue;
            }
            let p = lab.integrated_kernel(&b, i, j, &x, &y, &quad).expect("kernel");
            if got < size_count / 2 {
                half = half.max(p.ratio);
            }
            full = full.max(p.ratio);
            got += 1;
        }
        let drift = (full - half) / half;

        // Both regularity ratios under the quarter-separation precondition.
        let mut reg1 = 0.0f64;
        let mut reg2 = 0.0f64;
        let mut got = 0;
        while got < reg_count {
            let x = sample_box(&mut rng, n, 3.0);
            let y = sample_box(&mut rng, n, 3.0);
            let d = lab.group.orbit_distance(&x, &y);
            if d < 0.1 {
                continue;
            }
            let shift = (d / 4.0) * 10f64.powf(rng.gen_range(-1.5..0.0));
            let axis = rng.gen_range(0..n);
            let mut xp = x.clone();
            xp[axis] += shift;
            let mut yp = y.clone();
            yp[axis] += shift;
            if lab.group.orbit_distance(&xp, &y) < 0.05
                || lab.group.orbit_distance(&x, &yp) < 0.05
                || dist(&x, &xp) > d / 4.0
            {
                continue;
            }
            reg1 = reg1.max(
                lab.regularity_probe(&b, i, j, &x, &xp, &y, ProbeScale::Integrated, &quad)
                    .expect("regularity"),
            );
            reg2 = reg2.max(
                lab.regularity_probe_second(&b, i, j, &x, &y, &yp, ProbeScale::Integrated, &quad)
                    .expect("regularity"),
            );
            got += 1;
        }
        pass &= full.is_finite() && full <= 1e3 && drift <= 0.05 && reg1 <= 1e3 && reg2 <= 1e3;
        details.push(format!(
            "N={n}: size sup {full:.3e} drift {drift:.2e}, regularity {reg1:.3e}/{reg2:.3e}"
        ));
    }
    verdict("integrated-kernel-envelopes", pass, &details.join("; "));
}

// ---------------------------------------------------------------------------
// 8. Homogeneity in the symbol (exact gates)
// ---------------------------------------------------------------------------

#[test]
fn a08_symbol_homogeneity_exact() {
    let olab = OperatorLab::new(RootSystemSpec::z2n(&[1.0])).expect("lab");
    let lab = &olab.lab;
    let b = invariant_symbol(lab);
    let scaled = b.scaled(2.0);
    let constant =
        builtin_symbol("constant", &serde_json::json!({"value": 3.0}), &lab.group).unwrap();
    let quad = QuadConfig::default();
    let mut rng = seeded_rng(SEED ^ 9);

    let mut dev = 0.0f64;
    let mut got = 0;
    while got < 60 {
        let x = sample_box(&mut rng, 1, 3.0);
        let y = sample_box(&mut rng, 1, 3.0);
        if lab.group.orbit_distance(&x, &y) < 0.05 {
            continue;
        }
        let s = 10f64.powf(rng.gen_range(-1.0..0.5));
        let t1 = lab.theta(&b, s, 0, 0, &x, &y).unwrap().value;
        let t2 = lab.theta(&scaled, s, 0, 0, &x, &y).unwrap().value;
        dev = dev.max((t2 - 2.0 * t1).abs() / t1.abs().max(1e-300));
        dev = dev.max(lab.theta(&constant, s, 0, 0, &x, &y).unwrap().value.abs());
        let k1 = lab.integrated_kernel(&b, 0, 0, &x, &y, &quad).unwrap().value;
        let k2 = lab.integrated_kernel(&scaled, 0, 0, &x, &y, &quad).unwrap().value;
        dev = dev.max((k2 - 2.0 * k1).abs() / k1.abs().max(1e-300));
        got += 1;
    }

    // Discretized operators inherit the same linearity entrywise.
    let (nodes, weights) = olab.box_grid(3.0, 12).unwrap();
    let op1 = olab.assemble(&b, 0, 0, 1e-2, 1e2, &nodes, &weights).unwrap();
    let op2 = olab.assemble(&scaled, 0, 0, 1e-2, 1e2, &nodes, &weights).unwrap();
    let opc = olab.assemble(&constant, 0, 0, 1e-2, 1e2, &nodes, &weights).unwrap();
    for a in 0..nodes.len() {
        for c in 0..nodes.len() {
            let (e1, e2) = (op1.entry(a, c), op2.entry(a, c));
            dev = dev.max((e2 - 2.0 * e1).abs() / e1.abs().max(1e-300));
            dev = dev.max(opc.entry(a, c).abs());
        }
    }
    verdict(
        "symbol-homogeneity-exact",
        dev <= 1e-14,
        &format!("worst linearity/annihilation defect = {dev:.3e}, tol 1e-14"),
    );
}

// ---------------------------------------------------------------------------
// 9. Wall-layer slope and Carleson stability
// ---------------------------------------------------------------------------

#[test]
fn a09_wall_layer_slope_and_carleson() {
    let tlab = TestingLab::new(RootSystemSpec::z2n(&[1.0])).expect("lab");
    let lambdas: Vec<f64> = (0..7).map(|k| 1e-3 * 10f64.powf(k as f64 / 3.0)).collect();
    let ball = Ball::new(vec![0.0], 1.0);
    let report = tlab.wall_layer_measure_check(&ball, &lambdas).expect("wall layer");
    let slope_dev = (report.slope - 3.0).abs();

    // Normalized layer Carleson content: finite over the standard family and
    // stable under a finer scale grid.
    let mut finite = true;
    for ball in tlab.standard_ball_family() {
        let v = tlab.wall_layer_carleson(&ball).expect("carleson");
        finite &= v.is_finite() && v <= 1e3;
    }
    let tfine = TestingLab::refined(RootSystemSpec::z2n(&[1.0]), 32, 1).expect("lab");
    let base = tlab.wall_layer_carleson(&ball).unwrap();
    let fine = tfine.wall_layer_carleson(&ball).unwrap();
    let drift = (fine - base).abs() / base;

    // Finiteness also in two dimensions.
    let tlab2 = TestingLab::new(RootSystemSpec::z2n(&[1.0, 0.5])).expect("lab");
    for ball in tlab2.standard_ball_family().into_iter().take(3) {
        let v = tlab2.wall_layer_carleson(&ball).expect("carleson");
        finite &= v.is_finite() && v <= 1e3;
    }

    let pass = slope_dev <= 0.02 && finite && drift <= 0.05;
    verdict(
        "wall-layer-slope-and-carleson",
        pass,
        &format!(
            "slope = {:.4} (target 3.00 +/- 0.02), carleson finite = {finite}, refinement drift = {drift:.2e}",
            report.slope
        ),
    );
}

// ---------------------------------------------------------------------------
// 10. Vertical square function bound
// ---------------------------------------------------------------------------

#[test]
fn a10_vertical_square_function() {
    let tlab = TestingLab::new(RootSystemSpec::z2n(&[1.0])).expect("lab");
    // The scale integration starts at the node spacing, so the grid must be
    // fine enough to retain the high-frequency trial's small-scale content.
    let (nodes, weights) = tlab.uniform_grid(6.0, 600);
    let bump = |x: &[f64]| (-x[0] * x[0]).exp();
    let modulated = |x: &[f64]| (6.0 * x[0]).cos() * (-x[0] * x[0] / 4.0).exp();
    let slow = |x: &[f64]| (1.5 * x[0]).cos() * (-x[0] * x[0] / 2.0).exp();
    let mut sup = 0.0f64;
    let mut high_freq = 0.0f64;
    for (k, f) in [&bump as &dyn Fn(&[f64]) -> f64, &modulated, &slow].iter().enumerate() {
        let values: Vec<f64> = nodes.iter().map(|p| f(p)).collect();
        let ratio = tlab.vertical_square_function(&nodes, &weights, &values, 0).unwrap();
        sup = sup.max(ratio);
        if k == 1 {
            high_freq = ratio;
        }
    }
    // Two-dimensional trial stays under the same cap.
    let tlab2 = TestingLab::new(RootSystemSpec::z2n(&[1.0, 0.5])).expect("lab");
    let (nodes2, weights2) = tlab2.uniform_grid(3.0, 16);
    let values2: Vec<f64> =
        nodes2.iter().map(|p| (-(p[0] * p[0] + p[1] * p[1])).exp()).collect();
    sup = sup.max(tlab2.vertical_square_function(&nodes2, &weights2, &values2, 0).unwrap());

    let pass = sup <= 0.2625 && (high_freq - 0.25).abs() / 0.25 <= 0.10;
    verdict(
        "vertical-square-function",
        pass,
        &format!("sup ratio = {sup:.4} (cap 0.2625), high-frequency ratio = {high_freq:.4} (target 0.25 +/- 10%)"),
    );
}

// ---------------------------------------------------------------------------
// 11. Component Carleson testing and the adjoint identity
// ---------------------------------------------------------------------------

#[test]
fn a11_component_carleson_and_adjoint() {
    let spec = RootSystemSpec::z2n(&[1.0]);
    let tlab = TestingLab::new(spec.clone()).expect("lab");
    let b = invariant_symbol(&tlab.lab);
    let balls: Vec<Ball> = tlab
        .standard_ball_family()
        .into_iter()
        .filter(|ball| ball.radius >= 0.3 && ball.radius <= 3.0)
        .collect();
    let mut sup = 0.0f64;
    for tau in 0..2 {
        let report = tlab.component_testing(&b, tau, &balls, 0, 0).expect("testing");
        sup = sup.max(report.sup);
    }

    // Refinement drift on one wall-adjacent ball.
    let probe = vec![Ball::new(vec![1.0], 1.0)];
    let base = tlab.component_testing(&b, 0, &probe, 0, 0).unwrap().sup;
    let tfine = TestingLab::refined(spec.clone(), 32, 1).expect("lab");
    let fine = tfine.component_testing(&b, 0, &probe, 0, 0).unwrap().sup;
    let drift = (fine - base).abs() / base;

    // Adjoint identity on random probe pairs at two scales.
    let mut rng = seeded_rng(SEED ^ 11);
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..40)
        .map(|_| (sample_box(&mut rng, 1, 2.0), sample_box(&mut rng, 1, 2.0)))
        .collect();
    let mut adjoint = 0.0f64;
    for &s in &[0.3, 1.0] {
        adjoint = adjoint.max(tlab.adjoint_defect(&b, s, 0, 0, &pairs).unwrap());
    }

    let pass = sup.is_finite() && sup <= 1e3 && drift <= 0.05 && adjoint <= 1e-6;
    verdict(
        "component-carleson-and-adjoint",
        pass,
        &format!("sup = {sup:.3e}, refinement drift = {drift:.2e} (tol 5%), adjoint defect = {adjoint:.3e} (tol 1e-6)"),
    );
}

// ---------------------------------------------------------------------------
// 12. Pairing with the integrated kernel on separated supports
// ---------------------------------------------------------------------------

#[test]
fn a12_separated_pairing_convergence() {
    let ladder = [(1e-2, 1e2), (1e-3, 1e3), (1e-4, 1e4), (1e-6, 1e6)];
    let mut worst_final = 0.0f64;
    let mut monotone = true;
    let mut pairs_checked = 0;
    for kappa in [vec![1.0], vec![1.0, 0.5]] {
        let n = kappa.len();
        let olab = OperatorLab::new(RootSystemSpec::z2n(&kappa)).expect("lab");
        let b = invariant_symbol(&olab.lab);
        let per_axis = if n == 1 { 32 } else { 8 };
        let (nodes, weights) = olab.box_grid(3.0, per_axis).unwrap();
        for k in 0..10 {
            let (f, g) = if n == 1 {
                (
                    SeparatedBump { center: vec![0.8 + 0.05 * k as f64], radius: 0.45 },
                    SeparatedBump { center: vec![2.5 + 0.03 * k as f64], radius: 0.5 },
                )
            } else {
                (
                    SeparatedBump { center: vec![0.7 + 0.04 * k as f64, 0.8], radius: 0.65 },
                    SeparatedBump { center: vec![2.3, 2.2], radius: 0.75 },
                )
            };
            let report = olab
                .pairing_convergence(&b, 0, n - 1, &f, &g, &nodes, &weights, &ladder)
                .expect("pairing");
            for w in report.gaps.windows(2).skip(1) {
                monotone &= w[1] <= w[0] + 1e-10;
            }
            worst_final = worst_final.max(*report.gaps.last().unwrap());
            pairs_checked += 1;
        }
    }
    let pass = pairs_checked == 20 && monotone && worst_final <= 1e-4;
    verdict(
        "separated-pairing-convergence",
        pass,
        &format!("{pairs_checked} pairs, monotone after first rung = {monotone}, worst final gap = {worst_final:.3e} (tol 1e-4)"),
    );
}

// ---------------------------------------------------------------------------
// 13. Uniform truncation ladder
// ---------------------------------------------------------------------------

#[test]
fn a13_uniform_truncation_ladder() {
    let olab = OperatorLab::new(RootSystemSpec::z2n(&[1.0])).expect("lab");
    let b = invariant_symbol(&olab.lab);
    let lip = olab.lab.lip_factor(&b);
    let (nodes, weights) = olab.box_grid(3.0, 64).unwrap();
    let trials = olab.trial_corpus(&nodes, 45, SEED);

    // 16 rungs enumerated from the narrowest window outward: the lower
    // endpoint descends, the upper endpoint ascends within each level.
    let eps_list = [1e-1, 1e-2, 1e-3, 1e-4];
    let big_r_list = [1e1, 1e2, 1e3, 1e4];
    let mut rungs: Vec<(f64, f64)> = Vec::new();
    for &eps in &eps_list {
        for &big_r in &big_r_list {
            rungs.push((eps, big_r));
        }
    }

    let mut norms = Vec::new();
    let mut converged_lp: Vec<(f64, f64)> = Vec::new();
    for &(eps, big_r) in &rungs {
        let op = olab.assemble(&b, 0, 0, eps, big_r, &nodes, &weights).expect("assemble");
        norms.push(l2_norm(&op).unwrap() / lip);
        // The grid's closest node pairs sit at orbit distance ~0.094, so the
        // time window resolves every pair once eps clears d^2 ~ 9e-3 by two
        // orders; only the finest lower-endpoint rungs are fully converged
        // (their norms match an eps = 1e-5 continuation to 7 digits) and
        // those are where truncation stability is asserted.
        if eps <= 1.5e-4 {
            converged_lp.push((
                olab.lp_ratio(&op, 1.5, &trials, lip),
                olab.lp_ratio(&op, 3.0, &trials, lip),
            ));
        }
    }
    let bounded = norms.iter().all(|v| v.is_finite() && *v <= 1e3);
    let gaps: Vec<f64> = norms.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let flattening = *gaps.last().unwrap() <= 0.2 * gaps[0];

    let spread = |vals: Vec<f64>| -> f64 {
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(0.0f64, f64::max);
        (hi - lo) / lo
    };
    let s15 = spread(converged_lp.iter().map(|p| p.0).collect());
    let s3 = spread(converged_lp.iter().map(|p| p.1).collect());
    let stable = s15 <= 0.10 && s3 <= 0.10;

    let pass = bounded && flattening && stable;
    verdict(
        "uniform-truncation-ladder",
        pass,
        &format!(
            "16 rungs, norm range [{:.4}, {:.4}], first/last gaps {:.3e}/{:.3e}, p-ratio spreads {s15:.2e}/{s3:.2e} (tol 10%)",
            norms.iter().cloned().fold(f64::INFINITY, f64::min),
            norms.iter().cloned().fold(0.0f64, f64::max),
            gaps[0],
            gaps.last().unwrap()
        ),
    );
}

// ---------------------------------------------------------------------------
// 14. Negative control: the coordinate symbol
// ---------------------------------------------------------------------------

#[test]
fn a14_negative_control_coordinate_symbol() {
    let olab = OperatorLab::new(RootSystemSpec::z2n(&[1.0])).expect("lab");
    let lab = &olab.lab;
    let bad =
        builtin_symbol("coordinate_noninvariant", &serde_json::Value::Null, &lab.group).unwrap();
    let good = invariant_symbol(lab);
    let sampler = SeminormSampler { pairs: 2000, ..Default::default() };

    // (a) The orbit-distance Lipschitz seminorm flags the coordinate symbol
    // as infinite while the invariant control stays finite.
    let bad_infinite = matches!(lipd_seminorm(&bad, &lab.group, &sampler), Seminorm::Infinite);
    let good_finite = matches!(lipd_seminorm(&good, &lab.group, &sampler), Seminorm::Finite(_));

    // (b) Size-envelope ratio blows up approaching a reflected diagonal for
    // the coordinate symbol relative to the invariant one.
    let quad = QuadConfig::default();
    let ratio_at = |b: &SymbolB, d: f64| -> f64 {
        lab.integrated_kernel(b, 0, 0, &[1.0], &[-1.0 + d], &quad).expect("kernel").ratio
    };
    let far = ratio_at(&bad, 0.5) / ratio_at(&good, 0.5);
    let near = ratio_at(&bad, 0.02) / ratio_at(&good, 0.02);
    let blow_up = near / far;

    // (c) Resolving the reflected diagonals in scale (shrinking the lower
    // truncation on a fixed grid) inflates the coordinate symbol's operator
    // norm while the invariant control stays put.
    let (nodes, weights) = olab.box_grid(3.0, 32).unwrap();
    let norm = |b: &SymbolB, eps: f64| -> f64 {
        l2_norm(&olab.assemble(b, 0, 0, eps, 1e2, &nodes, &weights).unwrap()).unwrap()
    };
    let bad_growth = norm(&bad, 1e-10) / norm(&bad, 1e-4);
    let good_growth = norm(&good, 1e-10) / norm(&good, 1e-4);

    let pass = bad_infinite
        && good_finite
        && blow_up >= 10.0
        && bad_growth >= 3.0
        && (good_growth - 1.0).abs() <= 0.10;
    verdict(
        "negative-control-coordinate-symbol",
        pass,
        &format!(
            "seminorm infinite = {bad_infinite} (control finite = {good_finite}), near-diagonal blow-up = {blow_up:.1}x (tol 10x), norm growth = {bad_growth:.2}x (tol 3x) vs control {good_growth:.3}x"
        ),
    );
}
