//! Independent numerical oracles shared by the integration tests.
#![allow(dead_code)]

/// Composite Simpson rule with `n` (rounded up to even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let x = a + i as f64 * h;
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    s * h / 3.0
}

/// Simpson on `[a, b] ⊂ (0, ∞)` in the variable `t = ln x`.
pub fn simpson_log<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    simpson(
        |t| {
            let x = t.exp();
            f(x) * x
        },
        a.ln(),
        b.ln(),
        n,
    )
}

/// Cumulative trapezoid table of `f` on a geometric grid from `a` to `b`:
/// returns `(x_i, ∫_a^{x_i} f)`.
pub fn cumulative_log(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let (la, lb) = (a.ln(), b.ln());
    let h = (lb - la) / n as f64;
    let xs: Vec<f64> = (0..=n).map(|i| (la + i as f64 * h).exp()).collect();
    let g: Vec<f64> = xs.iter().map(|&x| f(x) * x).collect();
    let mut c = vec![0.0; n + 1];
    for i in 1..=n {
        c[i] = c[i - 1] + 0.5 * h * (g[i - 1] + g[i]);
    }
    (xs, c)
}

/// Solve `½ s(x)² f'' + m(x) f' = −q(x)` on `[l, r]` with `f(l) = f(r) = 0`
/// by central differences on a uniform grid of `n` interior points.
/// Returns the grid and the solution.
pub fn solve_bvp(s: impl Fn(f64) -> f64, m: impl Fn(f64) -> f64, q: impl Fn(f64) -> f64, l: f64, r: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let h = (r - l) / (n + 1) as f64;
    let xs: Vec<f64> = (1..=n).map(|i| l + i as f64 * h).collect();
    // tridiagonal system, Thomas algorithm
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    for (i, &x) in xs.iter().enumerate() {
        let diff = 0.5 * s(x).powi(2) / (h * h);
        let adv = m(x) / (2.0 * h);
        a[i] = diff - adv;
        b[i] = -2.0 * diff;
        c[i] = diff + adv;
        d[i] = -q(x);
    }
    for i in 1..n {
        let w = a[i] / b[i - 1];
        b[i] -= w * c[i - 1];
        d[i] -= w * d[i - 1];
    }
    let mut f = vec![0.0; n];
    f[n - 1] = d[n - 1] / b[n - 1];
    for i in (0..n - 1).rev() {
        f[i] = (d[i] - c[i] * f[i + 1]) / b[i];
    }
    (xs, f)
}

/// Linear interpolation in a sorted table.
pub fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let i = xs.partition_point(|&v| v < x).clamp(1, xs.len() - 1);
    let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    ys[i - 1] + t * (ys[i] - ys[i - 1])
}
