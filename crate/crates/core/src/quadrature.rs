//! Gauss–Legendre rules and the piecewise/composite drivers shared by the
//! volume, kernel and Carleson integrals.

use std::sync::Mutex;

use std::collections::HashMap;
use std::sync::OnceLock;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
///
/// Computed by Newton iteration on the Legendre recurrence and cached.
pub fn gauss_legendre(n: usize) -> &'static (Vec<f64>, Vec<f64>) {
    static CACHE: OnceLock<Mutex<HashMap<usize, &'static (Vec<f64>, Vec<f64>)>>> =
        OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    if let Some(rule) = guard.get(&n) {
        return rule;
    }
    let rule: &'static _ = Box::leak(Box::new(compute_gauss_legendre(n)));
    guard.insert(n, rule);
    rule
}

fn compute_gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        // Chebyshev-based initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre P_n(x) and derivative by recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// `n`-point Gauss–Legendre integral of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let (nodes, weights) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for (&x, &w) in nodes.iter().zip(weights) {
        acc += w * f(mid + half * x);
    }
    acc * half
}

/// Integrate over `[a, b]` split at the interior breakpoints, `n` nodes per piece.
pub fn integrate_piecewise<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    n: usize,
) -> f64 {
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&c| c > a && c < b)
        .collect();
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup_by(|x, y| (*x - *y).abs() < 1e-14);
    let mut acc = 0.0;
    let mut lo = a;
    for c in cuts.into_iter().chain(std::iter::once(b)) {
        if c > lo {
            acc += integrate(&f, lo, c, n);
            lo = c;
        }
    }
    acc
}

/// Composite Gauss over `[a, b]` with `panels` equal panels, `n` nodes each.
pub fn integrate_composite<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    panels: usize,
    n: usize,
) -> f64 {
    let h = (b - a) / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        acc += integrate(&f, a + p as f64 * h, a + (p + 1) as f64 * h, n);
    }
    acc
}

/// Geometric grid of `per_decade` points per decade over `[lo, hi]`, endpoints
/// included; used as trapezoid nodes in `log s`.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo);
    let decades = (hi / lo).log10();
    let count = (decades * per_decade as f64).ceil() as usize + 1;
    (0..count)
        .map(|k| lo * 10f64.powf(decades * k as f64 / (count - 1) as f64))
        .collect()
}

/// Trapezoid rule in `log s` over the grid values of `g(s)`, i.e. an
/// approximation of `int g(s) ds/s`.
pub fn trapezoid_log<F: Fn(f64) -> f64>(grid: &[f64], g: F) -> f64 {
    let vals: Vec<f64> = grid.iter().map(|&s| g(s)).collect();
    let mut acc = 0.0;
    for k in 1..grid.len() {
        let du = (grid[k] / grid[k - 1]).ln();
        acc += 0.5 * (vals[k] + vals[k - 1]) * du;
    }
    acc
}

/// Merge a list of closed intervals into disjoint sorted intervals.
pub fn merge_intervals(mut v: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    v.retain(|&(a, b)| b > a);
    v.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (a, b) in v {
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_is_exact_on_polynomials() {
        // 8-point rule integrates degree-15 polynomials exactly.
        let v = integrate(|x| x.powi(15) + 3.0 * x.powi(4), -1.0, 2.0, 8);
        let exact = (2f64.powi(16) - 1.0) / 16.0 + 3.0 * (2f64.powi(5) + 1.0) / 5.0;
        assert!((v - exact).abs() < 1e-10 * exact.abs());
    }

    #[test]
    fn piecewise_handles_kinks() {
        let v = integrate_piecewise(|x| x.abs(), -1.0, 2.0, &[0.0], 16);
        assert!((v - 2.5).abs() < 1e-13);
    }

    #[test]
    fn trapezoid_log_integrates_powers() {
        // int_{0.1}^{10} s^2 ds/s = (100 - 0.01)/2.
        let grid = log_grid(0.1, 10.0, 512);
        let v = trapezoid_log(&grid, |s| s * s);
        assert!((v - 49.995).abs() < 1e-3);
    }

    #[test]
    fn merge_intervals_merges_overlaps() {
        let m = merge_intervals(vec![(0.0, 1.0), (0.5, 2.0), (3.0, 4.0)]);
        assert_eq!(m, vec![(0.0, 2.0), (3.0, 4.0)]);
    }
}
