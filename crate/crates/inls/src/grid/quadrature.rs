//! End corrections for the staggered radial rule.
//!
//! For an integrand `g(s) = Σ_e c_e s^e` near `s = 0`, the midpoint sum
//! `h Σ_j g((j+½)h)` misses `∫₀^∞ g` by `Σ_e c_e ζ(−e, ½) h^{e+1}`. Weights `d_i`
//! on the first few samples cancel the leading terms of a known exponent family.

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

const BERNOULLI_2K: [f64; 8] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
];

/// Riemann zeta for real `s ≠ 1`.
pub fn riemann_zeta(s: f64) -> f64 {
    if s < 0.0 {
        // reflection onto s > 1
        let t = 1.0 - s;
        return 2f64.powf(s) * PI.powf(s - 1.0) * (PI * s / 2.0).sin() * gamma(t) * riemann_zeta(t);
    }
    // Euler–Maclaurin, valid for s ≥ 0, s ≠ 1
    let m = 16.0_f64;
    let mut sum = 0.0;
    for k in 1..16 {
        sum += (k as f64).powf(-s);
    }
    sum += m.powf(1.0 - s) / (s - 1.0) + 0.5 * m.powf(-s);
    let mut rising = s; // s(s+1)…(s+2k−2)
    let mut fact = 2.0; // (2k)!
    let mut mpow = m.powf(-s - 1.0);
    for (k, b2k) in BERNOULLI_2K.iter().enumerate() {
        let k = k + 1;
        sum += b2k / fact * rising * mpow;
        let kk = 2.0 * k as f64;
        rising *= (s + kk - 1.0) * (s + kk);
        fact *= (kk + 1.0) * (kk + 2.0);
        mpow /= m * m;
    }
    sum
}

/// `ζ(s, ½) = (2^s − 1) ζ(s)`.
pub fn hurwitz_half(s: f64) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    (2f64.powf(s) - 1.0) * riemann_zeta(s)
}

/// First `count` members of `{base + m·step + 2k : m, k ≥ 0}`, sorted, deduplicated.
pub fn exponent_family(base: f64, step: f64, count: usize) -> Vec<f64> {
    let mut all = Vec::new();
    for m in 0..=count {
        for k in 0..=count {
            all.push(base + m as f64 * step + 2.0 * k as f64);
        }
    }
    all.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out: Vec<f64> = Vec::with_capacity(count);
    for e in all {
        if out.last().is_none_or(|&l| e - l > 1e-9) {
            out.push(e);
        }
        if out.len() == count {
            break;
        }
    }
    out
}

fn is_even_integer(e: f64) -> bool {
    let r = e.round();
    (e - r).abs() < 1e-12 && (r as i64) % 2 == 0 && r >= 0.0
}

/// Weights `d_i`, `i < exps.len()`, solving `Σ_i d_i (i+½)^e = −ζ(−e, ½)` for each `e`.
///
/// Even integer exponents stay in the system with zero right-hand side.
pub fn correction_weights(exps: &[f64]) -> Vec<f64> {
    let k = exps.len();
    let mut a = vec![vec![0.0; k + 1]; k];
    for (row, &e) in exps.iter().enumerate() {
        for i in 0..k {
            a[row][i] = (i as f64 + 0.5).powf(e);
        }
        a[row][k] = if is_even_integer(e) { 0.0 } else { -hurwitz_half(-e) };
    }
    solve_dense(a)
}

/// Gaussian elimination with partial pivoting on an augmented `k × (k+1)` matrix.
fn solve_dense(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let k = a.len();
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, piv);
        for row in col + 1..k {
            let f = a[row][col] / a[col][col];
            for c in col..=k {
                a[row][c] -= f * a[col][c];
            }
        }
    }
    let mut x = vec![0.0; k];
    for row in (0..k).rev() {
        let mut v = a[row][k];
        for c in row + 1..k {
            v -= a[row][c] * x[c];
        }
        x[row] = v / a[row][row];
    }
    x
}
