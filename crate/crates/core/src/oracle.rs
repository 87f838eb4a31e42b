//! Exact small-horizon ground truth: enumeration of every reinforced path,
//! annealed Beta-mixture path probabilities, the `Θ` martingale and the
//! alternating sums `s_j(x)`.
//!
//! Computations run either in `f64` or, when every weight is rational
//! (integer `alpha`), in exact big-rational arithmetic.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::environment::beta_params;
use crate::error::{domain, Error, Result};
use crate::scheme::WalkConfig;
use crate::simulator::Move;
use crate::special::log_beta;

/// Largest horizon accepted by [`enumerate_lerrw`].
pub const MAX_ENUMERATION_STEPS: usize = 20;
/// Largest horizon accepted by [`martingale_check`].
pub const MAX_MARTINGALE_STEPS: usize = 16;

/// A nearest-neighbour path from the origin, stored as one bit per step
/// (set = up).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Path {
    bits: u32,
    len: u32,
}

impl Path {
    pub const MAX_LEN: usize = 32;

    pub fn from_moves(moves: &[Move]) -> Result<Self> {
        if moves.len() > Self::MAX_LEN {
            return Err(Error::SizeLimit(format!(
                "paths are limited to {} steps",
                Self::MAX_LEN
            )));
        }
        let mut bits = 0u32;
        let mut pos = 0i64;
        for (i, &m) in moves.iter().enumerate() {
            match m {
                Move::Up => {
                    bits |= 1 << i;
                    pos += 1;
                }
                Move::Down => {
                    pos -= 1;
                    if pos < 0 {
                        return domain(format!("path leaves the half-line at step {}", i + 1));
                    }
                }
            }
        }
        Ok(Path {
            bits,
            len: moves.len() as u32,
        })
    }

    /// Build a path from its vertex sequence `(0, i_1, ..., i_n)`.
    pub fn from_vertices(vertices: &[u64]) -> Result<Self> {
        match vertices.first() {
            Some(0) => {}
            _ => return domain("a path must start at 0"),
        }
        let moves = vertices
            .windows(2)
            .map(|w| {
                if w[1] == w[0] + 1 {
                    Ok(Move::Up)
                } else if w[0] > 0 && w[1] == w[0] - 1 {
                    Ok(Move::Down)
                } else {
                    domain(format!("{} -> {} is not a nearest-neighbour step", w[0], w[1]))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_moves(&moves)
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn step(&self, i: usize) -> Move {
        if self.bits >> i & 1 == 1 {
            Move::Up
        } else {
            Move::Down
        }
    }

    pub fn moves(&self) -> impl Iterator<Item = Move> + '_ {
        (0..self.len()).map(|i| self.step(i))
    }

    pub fn vertices(&self) -> Vec<u64> {
        let mut v = Vec::with_capacity(self.len() + 1);
        let mut pos = 0u64;
        v.push(pos);
        for m in self.moves() {
            match m {
                Move::Up => pos += 1,
                Move::Down => pos -= 1,
            }
            v.push(pos);
        }
        v
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.vertices();
        for (i, x) in v.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{x}")?;
        }
        Ok(())
    }
}

impl FromStr for Path {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let vertices = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<u64>()
                    .map_err(|_| Error::Domain(format!("bad vertex {t:?} in path")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_vertices(&vertices)
    }
}

/// Choice of arithmetic for oracle computations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arithmetic {
    /// Exact when `alpha` is an integer, floating otherwise.
    #[default]
    Auto,
    Float,
    Exact,
}

impl Arithmetic {
    fn is_exact(self, cfg: &WalkConfig) -> Result<bool> {
        match self {
            Arithmetic::Float => Ok(false),
            Arithmetic::Auto => Ok(cfg.has_integer_alpha()),
            Arithmetic::Exact if cfg.has_integer_alpha() => Ok(true),
            Arithmetic::Exact => Err(Error::InvalidConfig(format!(
                "exact arithmetic needs an integer alpha, got {}",
                cfg.alpha()
            ))),
        }
    }
}

trait Scalar: Clone {
    fn nil() -> Self;
    fn unit() -> Self;
    fn count(v: u64) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn magnitude(&self) -> Self;
    fn approx(&self) -> f64;
}

impl Scalar for f64 {
    fn nil() -> Self {
        0.0
    }
    fn unit() -> Self {
        1.0
    }
    fn count(v: u64) -> Self {
        v as f64
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn magnitude(&self) -> Self {
        f64::abs(*self)
    }
    fn approx(&self) -> f64 {
        *self
    }
}

impl Scalar for BigRational {
    fn nil() -> Self {
        Zero::zero()
    }
    fn unit() -> Self {
        One::one()
    }
    fn count(v: u64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn magnitude(&self) -> Self {
        Signed::abs(self)
    }
    fn approx(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// `f(ell, x)` for `x <= max_x` in a chosen arithmetic.
struct Weights<S> {
    initial: Vec<S>,
    delta: S,
}

impl<S: Scalar> Weights<S> {
    fn get(&self, ell: u64, x: usize) -> S {
        self.initial[x].add(&self.delta.mul(&S::count(ell)))
    }
}

fn float_weights(cfg: &WalkConfig, max_x: usize) -> Weights<f64> {
    Weights {
        initial: (0..=max_x as u64).map(|x| cfg.initial_weight(x)).collect(),
        delta: cfg.delta(),
    }
}

fn exact_delta(cfg: &WalkConfig) -> BigRational {
    BigRational::from_float(cfg.delta()).expect("delta is finite")
}

fn exact_weights(cfg: &WalkConfig, max_x: usize) -> Weights<BigRational> {
    let power = cfg.alpha().abs() as u32;
    let initial = (0..=max_x as u64)
        .map(|x| {
            if x == 0 {
                return BigRational::one();
            }
            let p = BigRational::from_integer(num_traits::pow(BigInt::from(x), power as usize));
            if cfg.alpha() < 0.0 {
                p.recip()
            } else {
                p
            }
        })
        .collect();
    Weights {
        initial,
        delta: exact_delta(cfg),
    }
}

fn rational_string(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathProbability {
    pub path: Path,
    pub probability: f64,
    /// The exact value, in rational mode.
    pub rational: Option<BigRational>,
}

/// Law of the first `horizon` steps over all admissible paths, in
/// lexicographic order of the vertex sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct PathDistribution {
    horizon: usize,
    exact: bool,
    entries: Vec<PathProbability>,
}

impl PathDistribution {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn entries(&self) -> &[PathProbability] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, path: &Path) -> Option<&PathProbability> {
        self.entries.iter().find(|e| e.path == *path)
    }

    pub fn total(&self) -> f64 {
        neumaier_sum(self.entries.iter().map(|e| e.probability))
    }

    pub fn exact_total(&self) -> Option<BigRational> {
        if !self.exact {
            return None;
        }
        Some(
            self.entries
                .iter()
                .filter_map(|e| e.rational.as_ref())
                .fold(BigRational::zero(), |acc, r| acc + r),
        )
    }

    pub fn to_json(&self) -> Value {
        let mut paths = Map::new();
        for e in &self.entries {
            let mut entry = Map::new();
            entry.insert("probability".into(), json!(e.probability));
            if let Some(r) = &e.rational {
                entry.insert("rational".into(), json!(rational_string(r)));
            }
            paths.insert(e.path.to_string(), Value::Object(entry));
        }
        json!({
            "horizon": self.horizon,
            "exact": self.exact,
            "paths": paths,
        })
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut out, &self.to_json())?;
        writeln!(out)?;
        Ok(())
    }
}

fn descend<S: Scalar>(
    w: &Weights<S>,
    n: usize,
    depth: usize,
    pos: usize,
    bits: u32,
    prob: S,
    phi: &mut [u64],
    out: &mut Vec<(Path, S)>,
) {
    if depth == n {
        out.push((
            Path {
                bits,
                len: n as u32,
            },
            prob,
        ));
        return;
    }
    let up_bits = bits | 1 << depth;
    if pos == 0 {
        phi[0] += 1;
        descend(w, n, depth + 1, 1, up_bits, prob, phi, out);
        phi[0] -= 1;
        return;
    }
    let up = w.get(phi[pos], pos);
    let down = w.get(phi[pos - 1], pos - 1);
    let total = up.add(&down);
    phi[pos - 1] += 1;
    descend(w, n, depth + 1, pos - 1, bits, prob.mul(&down.div(&total)), phi, out);
    phi[pos - 1] -= 1;
    phi[pos] += 1;
    descend(w, n, depth + 1, pos + 1, up_bits, prob.mul(&up.div(&total)), phi, out);
    phi[pos] -= 1;
}

fn enumerate_with<S: Scalar>(w: &Weights<S>, n: usize) -> Vec<(Path, S)> {
    let mut out = Vec::new();
    let mut phi = vec![0u64; n + 1];
    descend(w, n, 0, 0, 0, S::unit(), &mut phi, &mut out);
    out
}

fn check_horizon(n: usize, max: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidConfig("horizon must be at least 1".into()));
    }
    if n > max {
        return Err(Error::SizeLimit(format!("horizon {n} exceeds the limit {max}")));
    }
    Ok(())
}

/// Probability of every path of length `n` under the reinforced kernel.
pub fn enumerate_lerrw(cfg: &WalkConfig, n: usize, mode: Arithmetic) -> Result<PathDistribution> {
    check_horizon(n, MAX_ENUMERATION_STEPS)?;
    let exact = mode.is_exact(cfg)?;
    let entries = if exact {
        enumerate_with(&exact_weights(cfg, n), n)
            .into_iter()
            .map(|(path, r)| PathProbability {
                path,
                probability: r.approx(),
                rational: Some(r),
            })
            .collect()
    } else {
        enumerate_with(&float_weights(cfg, n), n)
            .into_iter()
            .map(|(path, p)| PathProbability {
                path,
                probability: p,
                rational: None,
            })
            .collect()
    };
    Ok(PathDistribution {
        horizon: n,
        exact,
        entries,
    })
}

/// Up and down move counts out of each vertex along `path`.
fn departures(path: &Path) -> Vec<(u64, u64)> {
    let mut counts = vec![(0u64, 0u64); path.len() + 1];
    let mut pos = 0usize;
    for m in path.moves() {
        match m {
            Move::Up => {
                counts[pos].0 += 1;
                pos += 1;
            }
            Move::Down => {
                counts[pos].1 += 1;
                pos -= 1;
            }
        }
    }
    counts
}

fn rising(a: &BigRational, k: u64) -> BigRational {
    (0..k).fold(BigRational::one(), |acc, j| acc * (a + BigRational::from_integer(BigInt::from(j))))
}

/// Annealed probability of `path` in the Beta environment:
/// `prod_i B(a_i + u_i, b_i + d_i) / B(a_i, b_i)` over sites `i >= 1`.
pub fn annealed_path_prob(cfg: &WalkConfig, path: &Path) -> Result<f64> {
    let mut log_p = 0.0;
    for (i, &(u, d)) in departures(path).iter().enumerate().skip(1) {
        if u + d == 0 {
            continue;
        }
        let bp = beta_params(cfg, i as u64)?;
        log_p += log_beta(bp.a + u as f64, bp.b + d as f64)? - log_beta(bp.a, bp.b)?;
    }
    Ok(log_p.exp())
}

/// Exact annealed probability via rising factorials
/// `(a)_u (b)_d / (a + b)_{u + d}`.
pub fn annealed_path_prob_exact(cfg: &WalkConfig, path: &Path) -> Result<BigRational> {
    Arithmetic::Exact.is_exact(cfg)?;
    if !(cfg.delta() > 0.0) {
        return domain("the Beta environment requires delta > 0");
    }
    let counts = departures(path);
    let w = exact_weights(cfg, counts.len());
    let two_delta = &w.delta + &w.delta;
    let mut prob = BigRational::one();
    for (i, &(u, d)) in counts.iter().enumerate().skip(1) {
        if u + d == 0 {
            continue;
        }
        let a = &w.initial[i] / &two_delta;
        let b = (&w.initial[i - 1] + &w.delta) / &two_delta;
        let ab = &a + &b;
        prob = prob * rising(&a, u) * rising(&b, d) / rising(&ab, u + d);
    }
    Ok(prob)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equivalence {
    pub horizon: usize,
    pub exact: bool,
    /// Total-variation distance between the two path laws.
    pub distance: f64,
    /// Annealed probabilities summed over the enumerated support.
    pub annealed_total: f64,
}

/// Total-variation distance between the enumerated reinforced law and the
/// annealed Beta-mixture law on paths of length `n`.
pub fn equivalence_distance(cfg: &WalkConfig, n: usize, mode: Arithmetic) -> Result<Equivalence> {
    let dist = enumerate_lerrw(cfg, n, mode)?;
    if dist.exact {
        let mut tv = BigRational::zero();
        let mut total = BigRational::zero();
        for e in &dist.entries {
            let q = annealed_path_prob_exact(cfg, &e.path)?;
            let p = e.rational.as_ref().expect("exact entries carry rationals");
            tv += Signed::abs(&(p - &q));
            total += q;
        }
        tv /= BigRational::from_integer(BigInt::from(2));
        return Ok(Equivalence {
            horizon: n,
            exact: true,
            distance: tv.approx(),
            annealed_total: total.approx(),
        });
    }
    let mut diffs = Vec::with_capacity(dist.len());
    let mut qs = Vec::with_capacity(dist.len());
    for e in &dist.entries {
        let q = annealed_path_prob(cfg, &e.path)?;
        diffs.push((e.probability - q).abs());
        qs.push(q);
    }
    Ok(Equivalence {
        horizon: n,
        exact: false,
        distance: 0.5 * neumaier_sum(diffs),
        annealed_total: neumaier_sum(qs),
    })
}

/// The alternating sums `s_j(x) = sum_{l<j} (-1)^l / f(l, x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SValues {
    pub x: u64,
    /// `values[j] = s_j(x)` for `j = 0..=j_max`.
    pub values: Vec<f64>,
    /// `[s_{2k}, s_{2k±1}]`, the tightest bracket of `s_∞(x)` in the table.
    pub bracket: (f64, f64),
}

impl SValues {
    /// Number of `k` for which `s_{2k} <= s_{2k+2} <= s_{2k+1} <= s_{2k-1}`
    /// fails (the last inequality is skipped at `k = 0`).
    pub fn interleaving_violations(&self) -> usize {
        let s = &self.values;
        let mut bad = 0;
        let mut k = 0;
        while 2 * k + 2 < s.len() {
            let ok = s[2 * k] <= s[2 * k + 2]
                && s[2 * k + 2] <= s[2 * k + 1]
                && (k == 0 || s[2 * k + 1] <= s[2 * k - 1]);
            if !ok {
                bad += 1;
            }
            k += 1;
        }
        bad
    }
}

fn alternating_sum<S: Scalar>(w: &Weights<S>, x: usize, j: u64) -> S {
    let mut s = S::nil();
    for ell in 0..j {
        let term = S::unit().div(&w.get(ell, x));
        s = if ell % 2 == 0 { s.add(&term) } else { s.sub(&term) };
    }
    s
}

pub fn s_values(cfg: &WalkConfig, x: u64, j_max: u64) -> Result<SValues> {
    if j_max == 0 {
        return domain("j_max must be at least 1");
    }
    let f0 = cfg.initial_weight(x);
    let mut values = Vec::with_capacity(j_max as usize + 1);
    let mut s = 0.0;
    values.push(s);
    for ell in 0..j_max {
        let term = 1.0 / (f0 + ell as f64 * cfg.delta());
        s = if ell % 2 == 0 { s + term } else { s - term };
        values.push(s);
    }
    let even = (j_max - j_max % 2) as usize;
    let hi = if even < j_max as usize {
        values[even + 1]
    } else {
        values[even - 1]
    };
    Ok(SValues {
        x,
        bracket: (values[even], hi),
        values,
    })
}

/// `1 / (2 f(0, x) + delta)`.
pub fn s_inf_lower_bound(cfg: &WalkConfig, x: u64) -> f64 {
    1.0 / (2.0 * cfg.initial_weight(x) + cfg.delta())
}

/// `Θ_n`, `M_n` and the vertex decomposition of `Θ_n` along one path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathFunctionals {
    pub steps: usize,
    pub theta: f64,
    pub m_value: f64,
    /// First return time to the origin, if within the path.
    pub tau: Option<usize>,
    /// `s_{φ_n(x)}(x)` for `x < X_n`, only before the return.
    pub vertex_terms: Option<Vec<f64>>,
    /// `sum_x s_{φ_n(x)}(x)` over every edge, only before the return.
    pub full_sum: Option<f64>,
    /// `theta` as `"num/den"` in exact mode.
    pub theta_rational: Option<String>,
}

impl PathFunctionals {
    pub fn vertex_sum(&self) -> Option<f64> {
        self.vertex_terms.as_ref().map(|t| neumaier_sum(t.iter().copied()))
    }
}

struct Trace<S> {
    theta: S,
    m_value: S,
    tau: Option<usize>,
    phi: Vec<u64>,
    pos: usize,
}

fn m_value<S: Scalar>(w: &Weights<S>, phi: &[u64], pos: usize, returned: bool) -> S {
    if returned {
        return S::nil();
    }
    (0..pos).fold(S::nil(), |acc, x| acc.add(&S::unit().div(&w.get(phi[x], x))))
}

fn trace<S: Scalar>(w: &Weights<S>, path: &Path) -> Trace<S> {
    let mut phi = vec![0u64; path.len() + 1];
    let mut pos = 0usize;
    let mut theta = S::nil();
    let mut tau = None;
    for (m, mv) in path.moves().enumerate() {
        match mv {
            Move::Up => {
                if tau.is_none() {
                    theta = theta.add(&S::unit().div(&w.get(phi[pos], pos)));
                }
                phi[pos] += 1;
                pos += 1;
            }
            Move::Down => {
                if tau.is_none() {
                    theta = theta.sub(&S::unit().div(&w.get(phi[pos - 1], pos - 1)));
                }
                phi[pos - 1] += 1;
                pos -= 1;
                if pos == 0 && tau.is_none() {
                    tau = Some(m + 1);
                }
            }
        }
    }
    let m_value = m_value(w, &phi, pos, tau.is_some());
    Trace {
        theta,
        m_value,
        tau,
        phi,
        pos,
    }
}

/// `Θ_n` accumulated from its stepwise increments (frozen after the first
/// return to 0), together with `M_n`.
pub fn theta_along(cfg: &WalkConfig, path: &Path, mode: Arithmetic) -> Result<PathFunctionals> {
    let exact = mode.is_exact(cfg)?;
    let n = path.len();
    let float_w = float_weights(cfg, n);
    let vertex_terms = |phi: &[u64], pos: usize, tau: Option<usize>| {
        tau.is_none().then(|| {
            (0..pos)
                .map(|x| alternating_sum(&float_w, x, phi[x]))
                .collect::<Vec<_>>()
        })
    };
    let full_sum = |phi: &[u64], tau: Option<usize>| {
        tau.is_none()
            .then(|| neumaier_sum((0..phi.len()).map(|x| alternating_sum(&float_w, x, phi[x]))))
    };
    if exact {
        let t = trace(&exact_weights(cfg, n), path);
        Ok(PathFunctionals {
            steps: n,
            theta: t.theta.approx(),
            m_value: t.m_value.approx(),
            tau: t.tau,
            vertex_terms: vertex_terms(&t.phi, t.pos, t.tau),
            full_sum: full_sum(&t.phi, t.tau),
            theta_rational: Some(rational_string(&t.theta)),
        })
    } else {
        let t = trace(&float_w, path);
        Ok(PathFunctionals {
            steps: n,
            theta: t.theta,
            m_value: t.m_value,
            tau: t.tau,
            vertex_terms: vertex_terms(&t.phi, t.pos, t.tau),
            full_sum: full_sum(&t.phi, t.tau),
            theta_rational: None,
        })
    }
}

/// Result of checking the martingale property of `Θ` over a whole path tree.
///
/// `Θ_0 = 0` while `E[Θ_1] = 1/f(0, 0)`, so conditional expectations are
/// checked at internal nodes of depth `m >= 1`; the same holds for the
/// supermartingale `M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleReport {
    pub horizon: usize,
    pub exact: bool,
    /// Internal nodes at depth `>= 1`.
    pub internal_nodes: usize,
    /// Nodes before the first return to 0, including the root.
    pub pre_return_nodes: usize,
    /// `max |E[Θ_{m+1} | node] - Θ_m|`.
    pub max_deviation: f64,
    /// `max |Θ_m - sum_{x < X_m} s_{φ_m(x)}(x)|` over pre-return nodes.
    ///
    /// Edges above the walker that were crossed an even number of times
    /// still carry `s_{φ(x)}(x) > 0`, so this is nonzero as soon as a
    /// pre-return path backs down from a new maximum.
    pub max_vertex_sum_deviation: f64,
    /// `max |Θ_m - sum_x s_{φ_m(x)}(x)|` with the sum over every edge.
    pub max_full_sum_deviation: f64,
    /// `max (E[M_{m+1} | node] - M_m)`; non-positive for a supermartingale.
    pub max_supermartingale_excess: f64,
}

impl MartingaleReport {
    /// Martingale, supermartingale and all-edge decomposition checks.
    pub fn passed(&self, tolerance: f64) -> bool {
        self.max_deviation <= tolerance
            && self.max_full_sum_deviation <= tolerance
            && self.max_supermartingale_excess <= tolerance
    }

    /// The decomposition restricted to edges below the walker.
    pub fn vertex_sum_holds(&self, tolerance: f64) -> bool {
        self.max_vertex_sum_deviation <= tolerance
    }
}

struct TreeStats<S> {
    internal: usize,
    pre_return: usize,
    max_dev: S,
    max_vertex_dev: S,
    max_full_dev: S,
    max_excess: Option<S>,
}

fn larger<S: Scalar>(a: S, b: S) -> S {
    if b.approx() > a.approx() || (b.sub(&a).approx() > 0.0) {
        b
    } else {
        a
    }
}

struct Node<S> {
    theta: S,
    pos: usize,
    returned: bool,
}

fn child<S: Scalar>(w: &Weights<S>, node: &Node<S>, phi: &mut [u64], mv: Move) -> (Node<S>, usize) {
    let (edge, pos) = match mv {
        Move::Up => (node.pos, node.pos + 1),
        Move::Down => (node.pos - 1, node.pos - 1),
    };
    let theta = if node.returned {
        node.theta.clone()
    } else {
        let inc = S::unit().div(&w.get(phi[edge], edge));
        match mv {
            Move::Up => node.theta.add(&inc),
            Move::Down => node.theta.sub(&inc),
        }
    };
    phi[edge] += 1;
    (
        Node {
            theta,
            pos,
            returned: node.returned || pos == 0,
        },
        edge,
    )
}

fn walk_tree<S: Scalar>(
    w: &Weights<S>,
    n: usize,
    depth: usize,
    node: &Node<S>,
    phi: &mut [u64],
    stats: &mut TreeStats<S>,
) {
    if !node.returned {
        stats.pre_return += 1;
        let sum = (0..node.pos).fold(S::nil(), |acc, x| acc.add(&alternating_sum(w, x, phi[x])));
        let dev = node.theta.sub(&sum).magnitude();
        let full = (node.pos..phi.len())
            .fold(sum, |acc, x| acc.add(&alternating_sum(w, x, phi[x])));
        let full_dev = node.theta.sub(&full).magnitude();
        stats.max_full_dev = larger(stats.max_full_dev.clone(), full_dev);
        stats.max_vertex_dev = larger(stats.max_vertex_dev.clone(), dev);
    }
    if depth == n {
        return;
    }
    let moves: &[Move] = if node.pos == 0 {
        &[Move::Up]
    } else {
        &[Move::Down, Move::Up]
    };
    let (p_up, p_down) = if node.pos == 0 {
        (S::unit(), S::nil())
    } else {
        let up = w.get(phi[node.pos], node.pos);
        let down = w.get(phi[node.pos - 1], node.pos - 1);
        let total = up.add(&down);
        (up.div(&total), down.div(&total))
    };
    let m_here = m_value(w, phi, node.pos, node.returned);
    let mut e_theta = S::nil();
    let mut e_m = S::nil();
    for &mv in moves {
        let (next, edge) = child(w, node, phi, mv);
        let p = if mv == Move::Up { &p_up } else { &p_down };
        e_theta = e_theta.add(&p.mul(&next.theta));
        e_m = e_m.add(&p.mul(&m_value(w, phi, next.pos, next.returned)));
        walk_tree(w, n, depth + 1, &next, phi, stats);
        phi[edge] -= 1;
    }
    if depth >= 1 {
        stats.internal += 1;
        let dev = e_theta.sub(&node.theta).magnitude();
        stats.max_dev = larger(stats.max_dev.clone(), dev);
        let excess = e_m.sub(&m_here);
        stats.max_excess = Some(match stats.max_excess.take() {
            Some(cur) => larger(cur, excess),
            None => excess,
        });
    }
}

fn martingale_with<S: Scalar>(w: &Weights<S>, n: usize) -> TreeStats<S> {
    let mut stats = TreeStats {
        internal: 0,
        pre_return: 0,
        max_dev: S::nil(),
        max_vertex_dev: S::nil(),
        max_full_dev: S::nil(),
        max_excess: None,
    };
    let mut phi = vec![0u64; n + 1];
    let root = Node {
        theta: S::nil(),
        pos: 0,
        returned: false,
    };
    walk_tree(w, n, 0, &root, &mut phi, &mut stats);
    stats
}

/// Enumerate the path tree of depth `n` and measure how far `Θ` is from a
/// martingale, `M` from a supermartingale, and `Θ` from its vertex
/// decomposition.
pub fn martingale_check(cfg: &WalkConfig, n: usize, mode: Arithmetic) -> Result<MartingaleReport> {
    check_horizon(n, MAX_MARTINGALE_STEPS)?;
    let exact = mode.is_exact(cfg)?;
    fn report<S: Scalar>(n: usize, exact: bool, s: TreeStats<S>) -> MartingaleReport {
        MartingaleReport {
            horizon: n,
            exact,
            internal_nodes: s.internal,
            pre_return_nodes: s.pre_return,
            max_deviation: s.max_dev.approx(),
            max_vertex_sum_deviation: s.max_vertex_dev.approx(),
            max_full_sum_deviation: s.max_full_dev.approx(),
            max_supermartingale_excess: s.max_excess.map_or(0.0, |e| e.approx()),
        }
    }
    Ok(if exact {
        report(n, true, martingale_with(&exact_weights(cfg, n), n))
    } else {
        report(n, false, martingale_with(&float_weights(cfg, n), n))
    })
}
