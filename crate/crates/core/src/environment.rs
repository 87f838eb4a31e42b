//! The Beta random environment and quantities of the birth–death chain it
//! defines: log-resistances `S_x`, resistances `γ_x`, the harmonic function
//! `h`, the reversible measure `π`, and the quenched expected hitting time
//! `T(x)`.
//!
//! Site `i >= 1` has an up-probability `p_i ~ Beta(a_i, b_i)` with
//! `a_i = w_0(i)/(2Δ)` and `b_i = (w_0(i−1) + Δ)/(2Δ)`; site 0 reflects
//! (`p_0 = 1`). The value at site `i` is a pure function of the environment
//! seed and `i`, so an [`Environment`] is a cache over that function.
//!
//! Resistances overflow `f64` quickly (`S_x` grows like `x^{1−α}`), so every
//! prefix quantity is stored in log form and exponentiated on request.

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::rng;
use crate::scheme::WalkConfig;

/// Parameters of the Beta law at one site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaParams {
    pub a: f64,
    pub b: f64,
}

impl BetaParams {
    pub fn mean(&self) -> f64 {
        self.a / (self.a + self.b)
    }
}

/// Beta parameters of site `i >= 1`.
pub fn beta_params(cfg: &WalkConfig, i: u64) -> Result<BetaParams> {
    let delta = cfg.delta();
    if !(delta > 0.0) {
        return domain("the Beta environment requires delta > 0");
    }
    if i == 0 {
        return domain("site 0 is reflecting and has no Beta law");
    }
    let two_delta = 2.0 * delta;
    Ok(BetaParams {
        a: cfg.initial_weight(i) / two_delta,
        b: (cfg.initial_weight(i - 1) + delta) / two_delta,
    })
}

/// A uniform variate in the open interval (0, 1).
fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    ((rng.random::<u64>() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// `ln G` for `G ~ Gamma(shape, 1)`.
///
/// Marsaglia–Tsang for `shape >= 1`; smaller shapes use
/// `G_a = G_{a+1} U^{1/a}`, applied in log space so that tiny shapes do not
/// underflow to `G = 0`.
pub fn ln_gamma_variate<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    debug_assert!(shape > 0.0);
    if shape < 1.0 {
        let u = open01(rng);
        return ln_gamma_variate(shape + 1.0, rng) + u.ln() / shape;
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x: f64 = rng.sample(StandardNormal);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u = open01(rng);
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d.ln() + v.ln();
        }
    }
}

/// One materialized site: the up-probability and `ζ = ln((1 − p)/p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub p: f64,
    pub zeta: f64,
}

impl Site {
    const REFLECTING: Site = Site {
        p: 1.0,
        zeta: f64::NEG_INFINITY,
    };

    fn from_zeta(zeta: f64) -> Self {
        // p = 1 / (1 + e^ζ), kept strictly inside (0, 1).
        let p = if zeta > 0.0 {
            let e = (-zeta).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + zeta.exp())
        };
        Site {
            p: p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0),
            zeta,
        }
    }

    fn from_p(p: f64) -> Self {
        Site {
            p,
            zeta: (-p).ln_1p() - p.ln(),
        }
    }
}

/// Draw site `i` of the environment keyed by `key`.
pub fn sample_site(cfg: &WalkConfig, key: [u8; 32], i: u64) -> Result<Site> {
    if i == 0 {
        return Ok(Site::REFLECTING);
    }
    let bp = beta_params(cfg, i)?;
    let mut stream = rng::stream_from_key(key, i);
    let ln_ga = ln_gamma_variate(bp.a, &mut stream);
    let ln_gb = ln_gamma_variate(bp.b, &mut stream);
    Ok(Site::from_zeta(ln_gb - ln_ga))
}

#[derive(Debug, Clone)]
enum Source {
    Beta {
        cfg: WalkConfig,
        seed: u64,
        key: [u8; 32],
    },
    /// Explicit `p_1, p_2, ...`, then `tail` for every later site.
    Fixed { p: Vec<f64>, tail: f64 },
}

impl Source {
    fn site(&self, i: u64) -> Site {
        if i == 0 {
            return Site::REFLECTING;
        }
        match self {
            Source::Beta { cfg, key, .. } => {
                sample_site(cfg, *key, i).expect("configuration validated at construction")
            }
            Source::Fixed { p, tail } => {
                Site::from_p(p.get(i as usize - 1).copied().unwrap_or(*tail))
            }
        }
    }
}

/// Whether `Z = Σ π_x` is finite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Summability {
    Summable,
    Diverges,
    /// Fixed environments carry no analytic verdict.
    Unknown,
}

/// Analytic verdict for the Beta environment: `Z < ∞` a.s. iff
/// `alpha < 1` (with `Δ > 0`) or `alpha = 1` with `Δ > 2`.
pub fn summability(cfg: &WalkConfig) -> Summability {
    let (alpha, delta) = (cfg.alpha(), cfg.delta());
    if (alpha < 1.0 && delta > 0.0) || (alpha == 1.0 && delta > 2.0) {
        Summability::Summable
    } else {
        Summability::Diverges
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    /// `Σ_{i <= cutoff} π_i`.
    pub partial_sum: f64,
    pub cutoff: u64,
    pub verdict: Summability,
}

/// Bounds on `T(x)` from the resistance profile, stored as logarithms since
/// both sides routinely exceed the `f64` range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HittingBounds {
    /// `ln max(h(x), max_{i<x} γ_i)`.
    pub log_lower: f64,
    /// `ln(2 x² max_{i<x} γ_i max_{j<x} 1/γ_j)`.
    pub log_upper: f64,
    /// `ln(Z_partial · h(x))`, only when `Z` is known to be finite.
    pub log_upper_posrec: Option<f64>,
}

impl HittingBounds {
    pub fn lower(&self) -> f64 {
        self.log_lower.exp()
    }

    pub fn upper(&self) -> f64 {
        self.log_upper.exp()
    }

    pub fn upper_posrec(&self) -> Option<f64> {
        self.log_upper_posrec.map(f64::exp)
    }

    /// Whether `ln T(x) = log_t` lies within every bound, up to `slack` in log units.
    pub fn brackets(&self, log_t: f64, slack: f64) -> bool {
        self.log_lower <= log_t + slack
            && log_t <= self.log_upper + slack
            && self.log_upper_posrec.is_none_or(|u| log_t <= u + slack)
    }
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// A lazily materialized environment with cached prefix data.
///
/// Mutation happens only through `&mut self` extension; the `&self` accessors
/// are safe to share across threads once the environment has been extended
/// to the horizon of interest.
#[derive(Debug, Clone)]
pub struct Environment {
    source: Source,
    sites: Vec<Site>,
    /// `S_x` for `x = 0..len`.
    log_gamma: Vec<f64>,
    /// `ln h(x)` for `x = 0..=len`.
    log_h: Vec<f64>,
    /// `ln Σ_{j<=x} π_j` for `x = 0..len`.
    log_pi_cum: Vec<f64>,
    /// `ln T(x)` for `x = 0..=len`.
    log_t: Vec<f64>,
}

impl Environment {
    fn with_source(source: Source) -> Self {
        let mut env = Environment {
            source,
            sites: Vec::new(),
            log_gamma: Vec::new(),
            log_h: vec![f64::NEG_INFINITY],
            log_pi_cum: Vec::new(),
            log_t: vec![f64::NEG_INFINITY],
        };
        env.extend_to(0);
        env
    }

    /// The Beta environment of `cfg` drawn with `seed`. Requires `Δ > 0`.
    pub fn sampled(cfg: WalkConfig, seed: u64) -> Result<Self> {
        if !(cfg.delta() > 0.0) {
            return Err(Error::InvalidConfig(
                "the Beta environment requires delta > 0".into(),
            ));
        }
        Ok(Self::with_source(Source::Beta {
            cfg,
            seed,
            key: rng::key(seed),
        }))
    }

    /// A fixed environment: `p[0]` is the up-probability of site 1, and so
    /// on; every site past the list uses `tail`.
    pub fn fixed(p: Vec<f64>, tail: f64) -> Result<Self> {
        if let Some(bad) = p.iter().chain([&tail]).find(|&&v| !(v > 0.0 && v < 1.0)) {
            return Err(Error::InvalidConfig(format!(
                "site probabilities must lie in (0, 1), got {bad}"
            )));
        }
        Ok(Self::with_source(Source::Fixed { p, tail }))
    }

    /// The symmetric environment `p_i = 1/2`, `γ_i = 1`.
    pub fn unit() -> Self {
        Self::with_source(Source::Fixed {
            p: Vec::new(),
            tail: 0.5,
        })
    }

    pub fn config(&self) -> Option<&WalkConfig> {
        match &self.source {
            Source::Beta { cfg, .. } => Some(cfg),
            Source::Fixed { .. } => None,
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match &self.source {
            Source::Beta { seed, .. } => Some(*seed),
            Source::Fixed { .. } => None,
        }
    }

    /// Highest materialized site index.
    pub fn horizon(&self) -> u64 {
        self.sites.len() as u64 - 1
    }

    /// Materialize sites `0..=x` and their prefix data.
    pub fn extend_to(&mut self, x: u64) {
        let x = x as usize;
        if x < self.sites.len() {
            return;
        }
        let extra = x + 1 - self.sites.len();
        self.sites.reserve(extra);
        self.log_gamma.reserve(extra);
        self.log_h.reserve(extra);
        self.log_pi_cum.reserve(extra);
        self.log_t.reserve(extra);
        for i in self.sites.len()..=x {
            let site = self.source.site(i as u64);
            let s = if i == 0 { 0.0 } else { self.log_gamma[i - 1] + site.zeta };
            // ln π_i = ln(w_{i−1} + w_i), w = e^{−S}
            let log_pi = if i == 0 {
                0.0
            } else {
                log_add_exp(-self.log_gamma[i - 1], -s)
            };
            let log_pi_cum = if i == 0 {
                log_pi
            } else {
                log_add_exp(self.log_pi_cum[i - 1], log_pi)
            };
            self.sites.push(site);
            self.log_gamma.push(s);
            self.log_pi_cum.push(log_pi_cum);
            self.log_h.push(log_add_exp(self.log_h[i], s));
            self.log_t.push(log_add_exp(self.log_t[i], s + log_pi_cum));
        }
    }

    /// Site `i`, from the cache when materialized, otherwise computed afresh
    /// without touching the cache.
    pub fn site(&self, i: u64) -> Site {
        match self.sites.get(i as usize) {
            Some(s) => *s,
            None => self.source.site(i),
        }
    }

    /// Up-probability `p_i`; read-only and order-independent.
    pub fn p(&self, i: u64) -> f64 {
        self.site(i).p
    }

    /// Up-probability `p_i`, materializing the prefix up to `i`.
    pub fn sample_p(&mut self, i: u64) -> f64 {
        self.extend_to(i);
        self.sites[i as usize].p
    }

    /// Materialized up-probabilities `p_0..=p_horizon`.
    pub fn probabilities(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        self.sites.iter().map(|s| s.p)
    }

    /// `S_x = Σ_{i=1}^x ln((1 − p_i)/p_i)`.
    pub fn log_resistance(&mut self, x: u64) -> f64 {
        self.extend_to(x);
        self.log_gamma[x as usize]
    }

    /// `γ_x = e^{S_x}` (may overflow to infinity).
    pub fn resistance(&mut self, x: u64) -> f64 {
        self.log_resistance(x).exp()
    }

    pub fn log_harmonic(&mut self, x: u64) -> f64 {
        self.extend_to(x);
        self.log_h[x as usize]
    }

    /// `h(x) = Σ_{i<x} γ_i`.
    pub fn harmonic(&mut self, x: u64) -> f64 {
        self.log_harmonic(x).exp()
    }

    /// `π_x = w_{x−1} + w_x` with `w = 1/γ` and `w_{−1} = 0`.
    pub fn reversible_mass(&mut self, x: u64) -> f64 {
        self.extend_to(x);
        let i = x as usize;
        if i == 0 {
            1.0
        } else {
            log_add_exp(-self.log_gamma[i - 1], -self.log_gamma[i]).exp()
        }
    }

    pub fn log_reversible_mass_cumulative(&mut self, x: u64) -> f64 {
        self.extend_to(x);
        self.log_pi_cum[x as usize]
    }

    /// Partial sum of `π` up to `cutoff` with the analytic summability verdict.
    pub fn normalizer(&mut self, cutoff: u64) -> Normalizer {
        let verdict = match &self.source {
            Source::Beta { cfg, .. } => summability(cfg),
            Source::Fixed { .. } => Summability::Unknown,
        };
        Normalizer {
            partial_sum: self.log_reversible_mass_cumulative(cutoff).exp(),
            cutoff,
            verdict,
        }
    }

    pub fn log_expected_hitting_time(&mut self, x: u64) -> f64 {
        self.extend_to(x);
        self.log_t[x as usize]
    }

    /// `T(x) = Σ_{i<x} γ_i Σ_{j<=i} π_j`, the mean time to reach `x` from 0.
    pub fn expected_hitting_time(&mut self, x: u64) -> f64 {
        self.log_expected_hitting_time(x).exp()
    }

    /// Lower and upper bounds on `T(x)`. `z_cutoff` is raised to `x − 1` if
    /// smaller, which keeps the positive-recurrent bound valid.
    pub fn hitting_bounds(&mut self, x: u64, z_cutoff: u64) -> Result<HittingBounds> {
        if x == 0 {
            return domain("hitting_bounds requires x >= 1");
        }
        self.extend_to(x.max(z_cutoff));
        let prefix = &self.log_gamma[..x as usize];
        let max_s = prefix.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min_s = prefix.iter().copied().fold(f64::INFINITY, f64::min);
        let log_h = self.log_h[x as usize];
        let xf = x as f64;
        let norm = self.normalizer(z_cutoff.max(x - 1));
        Ok(HittingBounds {
            log_lower: log_h.max(max_s),
            log_upper: (2.0 * xf * xf).ln() + max_s - min_s,
            log_upper_posrec: (norm.verdict == Summability::Summable)
                .then(|| norm.partial_sum.ln() + log_h),
        })
    }

    /// Write `i,p_i,S_i,h_i,T_i` for `i = 0..=x_max` as CSV.
    pub fn write_snapshot_csv<W: Write>(&mut self, x_max: u64, out: W) -> Result<()> {
        self.extend_to(x_max);
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["i", "p_i", "S_i", "h_i", "T_i"])?;
        for i in 0..=x_max as usize {
            w.serialize((
                i,
                self.sites[i].p,
                self.log_gamma[i],
                self.log_h[i].exp(),
                self.log_t[i].exp(),
            ))?;
        }
        w.flush()?;
        Ok(())
    }
}
