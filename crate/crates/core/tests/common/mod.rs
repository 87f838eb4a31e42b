#![allow(dead_code)]

/// Mean hitting time of `x` from 0 for the chain with up-probabilities `p`
/// (`p[0]` = 1), by solving `t_k = 1 + p_k t_{k+1} + q_k t_{k-1}`, `t_x = 0`.
///
/// Rows are eliminated from `x - 1` down to 0, writing `t_k = a_k + (1 - g_k) t_{k-1}`.
/// Carrying `g_k` instead of `1 - g_k` keeps every update a sum of positive
/// terms, so strongly drifting chains do not cancel.
pub fn hitting_time_linear_solve(p: &[f64], x: usize) -> f64 {
    assert!(x >= 1 && p.len() >= x);
    let (mut a, mut g) = (0.0, 1.0);
    for k in (1..x).rev() {
        let d = (1.0 - p[k]) + p[k] * g;
        a = (1.0 + p[k] * a) / d;
        g = p[k] * g / d;
    }
    // Row 0 reflects: t_0 = 1 + t_1.
    (1.0 + a) / g
}

/// Compensated sum.
pub fn kahan(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let y = v - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}
