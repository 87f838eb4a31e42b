//! Step-by-step simulation of the reinforced walk and of the walk in a fixed
//! environment.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::environment::Environment;
use crate::error::{domain, Error, Result};
use crate::rng::{self, Purpose};
use crate::scheme::WalkConfig;

/// Default step budget for hitting-time runs.
pub const DEFAULT_HIT_BUDGET: u64 = 10_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Move {
    Up,
    Down,
}

/// The reinforced walker: position, per-edge traversal counts and clocks.
///
/// Edge `x` is `{x, x+1}`; its current weight is always recomputed from its
/// traversal count as `f(0, x) + φ(x) Δ`.
#[derive(Debug, Clone)]
pub struct WalkState {
    cfg: WalkConfig,
    position: u64,
    phi: Vec<u64>,
    initial: Vec<f64>,
    n: u64,
    max_position: u64,
    first_return: Option<u64>,
}

impl WalkState {
    pub fn new(cfg: WalkConfig) -> Self {
        WalkState {
            cfg,
            position: 0,
            phi: vec![0],
            initial: vec![cfg.initial_weight(0)],
            n: 0,
            max_position: 0,
            first_return: None,
        }
    }

    pub fn config(&self) -> &WalkConfig {
        &self.cfg
    }

    pub fn position(&self) -> u64 {
        self.position
    }

    pub fn steps(&self) -> u64 {
        self.n
    }

    pub fn max_position(&self) -> u64 {
        self.max_position
    }

    /// Traversal counts `φ_n(x)` for the edges seen so far.
    pub fn phi(&self) -> &[u64] {
        &self.phi
    }

    pub fn traversals(&self, x: u64) -> u64 {
        self.phi.get(x as usize).copied().unwrap_or(0)
    }

    /// Time of the first return to the origin, if it has happened.
    pub fn first_return(&self) -> Option<u64> {
        self.first_return
    }

    /// Current weight `w_n(x)` of edge `x`.
    pub fn weight(&self, x: u64) -> f64 {
        self.cfg.scheme_weight(self.traversals(x), x)
    }

    /// Probability that the next step goes up.
    pub fn up_probability(&self) -> f64 {
        if self.position == 0 {
            return 1.0;
        }
        let x = self.position as usize;
        let up = self.edge_weight(x);
        let down = self.edge_weight(x - 1);
        up / (up + down)
    }

    #[inline]
    fn edge_weight(&self, x: usize) -> f64 {
        self.initial[x] + self.phi[x] as f64 * self.cfg.delta()
    }

    /// Apply a move chosen by the caller.
    pub fn apply(&mut self, mv: Move) -> Result<()> {
        if mv == Move::Down && self.position == 0 {
            return domain("cannot step below the origin");
        }
        self.commit(mv);
        Ok(())
    }

    #[inline]
    fn commit(&mut self, mv: Move) {
        let x = self.position as usize;
        self.n += 1;
        match mv {
            Move::Up => {
                self.phi[x] += 1;
                self.position += 1;
                if self.position > self.max_position {
                    self.max_position = self.position;
                    self.phi.push(0);
                    self.initial.push(self.cfg.initial_weight(self.position));
                }
            }
            Move::Down => {
                self.phi[x - 1] += 1;
                self.position -= 1;
                if self.position == 0 && self.first_return.is_none() {
                    self.first_return = Some(self.n);
                }
            }
        }
    }

    /// One step of the reinforced kernel.
    #[inline]
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Move {
        let x = self.position as usize;
        let mv = if x == 0 {
            Move::Up
        } else {
            let up = self.edge_weight(x);
            let down = self.edge_weight(x - 1);
            let u: f64 = rng.random();
            if u * (up + down) < up {
                Move::Up
            } else {
                Move::Down
            }
        };
        self.commit(mv);
        mv
    }
}

/// Times at which a run records its state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckpointSchedule(Vec<u64>);

impl CheckpointSchedule {
    /// `⌈first · ratio^k⌉` for `k = 0, 1, ...` up to `n_max`, plus `n_max`.
    pub fn geometric(first: u64, ratio: f64, n_max: u64) -> Result<Self> {
        if first == 0 || !(ratio > 1.0) || n_max < first {
            return Err(Error::InvalidConfig(format!(
                "bad geometric schedule: first={first} ratio={ratio} n_max={n_max}"
            )));
        }
        let mut points = Vec::new();
        let mut t = first as f64;
        while t.ceil() <= n_max as f64 {
            let p = t.ceil() as u64;
            if points.last() != Some(&p) {
                points.push(p);
            }
            t *= ratio;
        }
        if points.last() != Some(&n_max) {
            points.push(n_max);
        }
        Ok(Self(points))
    }

    /// The default `⌈1.5^k⌉` schedule.
    pub fn default_for(n_max: u64) -> Self {
        Self::geometric(1, 1.5, n_max.max(1)).expect("valid default schedule")
    }

    pub fn explicit(mut points: Vec<u64>) -> Result<Self> {
        points.sort_unstable();
        points.dedup();
        if points.first() == Some(&0) || points.is_empty() {
            return Err(Error::InvalidConfig("checkpoints must be positive".into()));
        }
        Ok(Self(points))
    }

    pub fn points(&self) -> &[u64] {
        &self.0
    }

    pub fn last(&self) -> u64 {
        *self.0.last().expect("schedule is never empty")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub n: u64,
    pub position: u64,
    pub max_position: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunOptions {
    pub record_returns: bool,
    pub record_occupation: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub checkpoints: Vec<Checkpoint>,
    /// Times `n > 0` with `X_n = 0` (only with `record_returns`).
    pub return_times: Vec<u64>,
    /// Final per-edge traversal counts (only with `record_occupation`).
    pub occupation: Option<Vec<u64>>,
}

impl Trajectory {
    pub fn final_checkpoint(&self) -> Option<&Checkpoint> {
        self.checkpoints.last()
    }
}

/// Random stream used by [`lerrw_run`] and [`quenched_run`] for `seed`.
pub fn walk_stream(seed: u64) -> rand_chacha::ChaCha8Rng {
    rng::stream(seed, Purpose::Walk as u64)
}

/// Run the reinforced walk for `n_steps`, recording at each checkpoint
/// (checkpoints past `n_steps` are ignored).
pub fn lerrw_run(
    cfg: WalkConfig,
    seed: u64,
    n_steps: u64,
    schedule: &CheckpointSchedule,
    opts: RunOptions,
) -> Result<Trajectory> {
    if n_steps == 0 {
        return Err(Error::InvalidConfig("n_steps must be at least 1".into()));
    }
    let mut rng = walk_stream(seed);
    let mut state = WalkState::new(cfg);
    let mut traj = Trajectory::default();
    let mut done = 0u64;
    for &cp in schedule.points().iter().filter(|&&cp| cp <= n_steps) {
        if opts.record_returns {
            while done < cp {
                state.step(&mut rng);
                done += 1;
                if state.position == 0 {
                    traj.return_times.push(done);
                }
            }
        } else {
            for _ in done..cp {
                state.step(&mut rng);
            }
            done = cp;
        }
        traj.checkpoints.push(Checkpoint {
            n: cp,
            position: state.position,
            max_position: state.max_position,
        });
    }
    while done < n_steps {
        state.step(&mut rng);
        done += 1;
        if opts.record_returns && state.position == 0 {
            traj.return_times.push(done);
        }
    }
    if opts.record_occupation {
        traj.occupation = Some(state.phi.clone());
    }
    Ok(traj)
}

/// One step of the walk in a fixed environment.
#[inline]
pub fn quenched_step<R: Rng + ?Sized>(env: &Environment, position: u64, rng: &mut R) -> Move {
    step_with_p(env.p(position), rng)
}

#[inline]
fn step_with_p<R: Rng + ?Sized>(p: f64, rng: &mut R) -> Move {
    if p >= 1.0 || rng.random::<f64>() < p {
        Move::Up
    } else {
        Move::Down
    }
}

/// Up-probabilities for sites `0..len`, extended on demand from `env`.
struct SiteTable<'a> {
    env: &'a Environment,
    p: Vec<f64>,
}

impl<'a> SiteTable<'a> {
    fn new(env: &'a Environment, len: u64) -> Self {
        let p = (0..len.max(1)).map(|i| env.p(i)).collect();
        SiteTable { env, p }
    }

    #[inline]
    fn get(&mut self, i: u64) -> f64 {
        let i = i as usize;
        while i >= self.p.len() {
            let next = self.p.len() as u64;
            self.p.push(self.env.p(next));
        }
        self.p[i]
    }
}

/// Run the walk in `env` for `n_steps`, recording checkpoints.
pub fn quenched_run(
    env: &Environment,
    seed: u64,
    n_steps: u64,
    schedule: &CheckpointSchedule,
    opts: RunOptions,
) -> Result<Trajectory> {
    if n_steps == 0 {
        return Err(Error::InvalidConfig("n_steps must be at least 1".into()));
    }
    let mut rng = walk_stream(seed);
    let mut table = SiteTable::new(env, env.horizon() + 1);
    let mut position = 0u64;
    let mut max_position = 0u64;
    let mut occupation = vec![0u64];
    let mut traj = Trajectory::default();
    let mut points = schedule.points().iter().copied().filter(|&cp| cp <= n_steps).peekable();
    for n in 1..=n_steps {
        match step_with_p(table.get(position), &mut rng) {
            Move::Up => {
                if opts.record_occupation {
                    occupation[position as usize] += 1;
                }
                position += 1;
                if position > max_position {
                    max_position = position;
                    if opts.record_occupation {
                        occupation.push(0);
                    }
                }
            }
            Move::Down => {
                position -= 1;
                if opts.record_occupation {
                    occupation[position as usize] += 1;
                }
                if position == 0 && opts.record_returns {
                    traj.return_times.push(n);
                }
            }
        }
        if points.peek() == Some(&n) {
            points.next();
            traj.checkpoints.push(Checkpoint {
                n,
                position,
                max_position,
            });
        }
    }
    if opts.record_occupation {
        traj.occupation = Some(occupation);
    }
    Ok(traj)
}

/// First time the walk in `env` started at 0 reaches `target`, drawing from
/// the stream of `seed`.
pub fn quenched_hit(env: &Environment, seed: u64, target: u64, budget: u64) -> Result<u64> {
    quenched_hit_with(env, target, budget, &mut walk_stream(seed))
}

/// As [`quenched_hit`] with a caller-supplied random stream.
pub fn quenched_hit_with<R: Rng + ?Sized>(
    env: &Environment,
    target: u64,
    budget: u64,
    rng: &mut R,
) -> Result<u64> {
    if target == 0 {
        return Ok(0);
    }
    let p: Vec<f64> = (0..target).map(|i| env.p(i)).collect();
    let mut position = 0usize;
    let target = target as usize;
    let mut n = 0u64;
    while position < target {
        if n == budget {
            return Err(Error::BudgetExceeded {
                steps: n,
                target: target as u64,
            });
        }
        n += 1;
        let pi = p[position];
        if pi >= 1.0 || rng.random::<f64>() < pi {
            position += 1;
        } else {
            position -= 1;
        }
    }
    Ok(n)
}

/// Write checkpoints of several runs as `seed,n,position,max_position`.
pub fn write_trajectories_csv<'a, W, I>(runs: I, out: W) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = (u64, &'a Trajectory)>,
{
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["seed", "n", "position", "max_position"])?;
    for (seed, traj) in runs {
        for cp in &traj.checkpoints {
            w.serialize((seed, cp.n, cp.position, cp.max_position))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Per-run summary for JSON export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub seed: u64,
    pub steps: u64,
    pub final_position: u64,
    pub max_position: u64,
    pub returns: Option<usize>,
}

impl TrajectorySummary {
    pub fn new(seed: u64, traj: &Trajectory, opts: RunOptions) -> Option<Self> {
        let last = traj.final_checkpoint()?;
        Some(TrajectorySummary {
            seed,
            steps: last.n,
            final_position: last.position,
            max_position: last.max_position,
            returns: opts.record_returns.then_some(traj.return_times.len()),
        })
    }
}
