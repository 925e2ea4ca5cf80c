//! Surrogate level-based Lagrangian coordination of the truck subproblems,
//! the exact dual bound, and a classical subgradient-level baseline.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Compiled;
use crate::lpfeas::window_is_feasible;
use crate::model::{penalty_terms, CostBreakdown, Usage, ViolationVector};
use crate::scalar::Scalar;
use crate::schedule::{Footprint, TruckSchedule};
use crate::subproblem::{solve_exact, solve_surrogate, Pricing, PricingMode};

/// Dual vector: port-demand block, depot-demand block, then one
/// non-negative entry per (charger, period).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Multipliers<F> {
    pub values: Vec<F>,
    pub capacity_offset: usize,
}

impl<F: Scalar> Multipliers<F> {
    pub fn zeros(c: &Compiled) -> Self {
        Multipliers {
            values: vec![F::zero(); c.dual_dim()],
            capacity_offset: c.capacity_offset(),
        }
    }

    pub fn from_values(values: Vec<F>, capacity_offset: usize) -> Self {
        let mut m = Multipliers {
            values,
            capacity_offset,
        };
        m.project();
        m
    }

    pub fn demand(&self) -> &[F] {
        &self.values[..self.capacity_offset]
    }

    pub fn capacity(&self) -> &[F] {
        &self.values[self.capacity_offset..]
    }

    /// Clamp the capacity block to the non-negative orthant.
    pub fn project(&mut self) {
        for x in &mut self.values[self.capacity_offset..] {
            if *x < F::zero() {
                *x = F::zero();
            }
        }
    }

    /// `Λ + αH`, then projection.
    pub fn updated(&self, alpha: &F, h: &[F]) -> Result<Self> {
        if h.len() != self.values.len() {
            return Err(Error::Dimension {
                expected: self.values.len(),
                got: h.len(),
            });
        }
        let values = self
            .values
            .iter()
            .zip(h)
            .map(|(l, g)| l.clone() + alpha.clone() * g.clone())
            .collect();
        Ok(Self::from_values(values, self.capacity_offset))
    }
}

impl Multipliers<f64> {
    /// Uniform draw in `[lo, hi]` per entry, capacity block projected.
    pub fn uniform(c: &Compiled, seed: u64, lo: f64, hi: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..c.dual_dim()).map(|_| rng.gen_range(lo..=hi)).collect();
        Self::from_values(values, c.capacity_offset())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepError {
    /// `H = 0`: the iterate is feasible, no step is taken.
    ZeroViolation,
    /// The level does not exceed the surrogate dual value.
    LevelTooLow,
}

/// `α = ζ·(1/V)·(q̄ − L)/‖H‖²`.
pub fn stepsize<F: Scalar>(zeta: &F, trucks: usize, level: &F, l: &F, h_sq: &F) -> std::result::Result<F, StepError> {
    if h_sq.is_zero() {
        return Err(StepError::ZeroViolation);
    }
    let gap = level.clone() - l.clone();
    if gap < F::zero() {
        return Err(StepError::LevelTooLow);
    }
    let v = F::from_usize(trucks).expect("fleet size is representable");
    Ok(zeta.clone() * gap / (v * h_sq.clone()))
}

/// `q̂ = α·V·‖H‖² + L`.
pub fn level_candidate<F: Scalar>(alpha: &F, trucks: usize, h_sq: &F, l: &F) -> F {
    let v = F::from_usize(trucks).expect("fleet size is representable");
    alpha.clone() * v * h_sq.clone() + l.clone()
}

/// Level value, running candidate maximum and the multiplier window used
/// for divergence detection.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelState<F> {
    pub level: F,
    pub q_max: Option<F>,
    pub window: Vec<Vec<F>>,
    pub capacity: usize,
    pub updates: usize,
}

impl<F: Scalar> LevelState<F> {
    pub fn new(level: F, start: Vec<F>, capacity: usize) -> Self {
        LevelState {
            level,
            q_max: None,
            window: vec![start],
            capacity: capacity.max(2),
            updates: 0,
        }
    }

    pub fn observe(&mut self, candidate: F) {
        if self.q_max.as_ref().is_none_or(|m| *m < candidate) {
            self.q_max = Some(candidate);
        }
    }

    pub fn push(&mut self, lambda: Vec<F>) {
        self.window.push(lambda);
        if self.window.len() > self.capacity {
            self.window.remove(0);
        }
    }

    /// If no point is approached by every step of the window, the level is
    /// too high: replace it with the running candidate maximum and restart
    /// the window at the latest multipliers.
    pub fn maybe_update(&mut self) -> bool {
        if self.window.len() < 2 || window_is_feasible(&self.window) {
            return false;
        }
        if let Some(m) = self.q_max.take() {
            self.level = m;
        }
        let last = self.window.pop().expect("non-empty window");
        self.window = vec![last];
        self.updates += 1;
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Strategy {
    Slblr,
    #[serde(rename = "lr")]
    BaselineLr,
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Strategy::Slblr => "slblr",
            Strategy::BaselineLr => "lr",
        })
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "slblr" => Ok(Strategy::Slblr),
            "lr" | "baselineLR" => Ok(Strategy::BaselineLr),
            _ => Err(Error::Argument(format!("unknown strategy {s:?} (slblr | lr)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "mode")]
pub enum Init {
    Zeros,
    Uniform { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct Config {
    pub zeta: f64,
    pub rho0: f64,
    pub beta: f64,
    pub init: Init,
    pub seed: u64,
    pub strategy: Strategy,
    pub max_iterations: u64,
    pub time_limit_s: Option<f64>,
    /// Stop once a feasible cost at or below this value is recorded.
    pub target_cost: Option<f64>,
    /// Multiplier window length for divergence detection.
    pub window: usize,
    /// Relative margin of the bootstrap level above the surrogate dual value.
    pub bootstrap_delta: f64,
    /// Before the first level update, the level is raised whenever it sits
    /// within this fraction of the bootstrap margin above `L`.
    pub stall_fraction: f64,
    /// Initial level offset of the baseline; `None` uses `max(1, |q₀|)`.
    pub baseline_delta0: Option<f64>,
    /// Path-length budget after which the baseline halves its level offset.
    pub baseline_path_bound: f64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            zeta: 0.5,
            rho0: 5.0,
            beta: 1.05,
            init: Init::Zeros,
            seed: 0,
            strategy: Strategy::Slblr,
            max_iterations: 2000,
            time_limit_s: None,
            target_cost: None,
            window: 30,
            bootstrap_delta: 0.1,
            stall_fraction: 0.5,
            baseline_delta0: None,
            baseline_path_bound: 100.0,
        }
    }
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Argument(m.to_string()));
        if !(self.zeta > 0.0 && self.zeta < 1.0) {
            return bad("zeta must lie in (0, 1)");
        }
        if self.beta <= 1.0 {
            return bad("beta must exceed 1");
        }
        if !(0.0..1.0).contains(&self.stall_fraction) {
            return bad("stall fraction must lie in [0, 1)");
        }
        if self.rho0 <= 0.0 {
            return bad("rho0 must be positive");
        }
        if let Init::Uniform { lo, hi } = self.init {
            if lo > hi {
                return bad("uniform init needs lo <= hi");
            }
        }
        Ok(())
    }

    fn initial_multipliers(&self, c: &Compiled) -> Multipliers<f64> {
        match self.init {
            Init::Zeros => Multipliers::zeros(c),
            Init::Uniform { lo, hi } => Multipliers::uniform(c, self.seed, lo, hi),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Event {
    LevelUpdate,
    Feasible,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub k: u64,
    pub v: usize,
    #[serde(rename = "L_rho")]
    pub l_rho: f64,
    #[serde(rename = "H_l1")]
    pub h_l1: i64,
    #[serde(rename = "H_l2sq")]
    pub h_l2sq: i64,
    pub alpha: f64,
    pub q_max: Option<f64>,
    pub q_bar: f64,
    pub rho: f64,
    pub best_feasible: Option<f64>,
    pub event: Event,
}

/// A new best feasible cost, the fleet that achieved it, and the effort
/// spent to reach it.
#[derive(Debug, Clone, PartialEq)]
pub struct Improvement {
    pub iteration: u64,
    pub solves: u64,
    pub cost: f64,
    pub schedules: Vec<TruckSchedule>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum RunStatus {
    Feasible,
    NoFeasible,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub strategy: Strategy,
    pub status: RunStatus,
    pub best_cost: Option<CostBreakdown>,
    pub best_schedules: Option<Vec<TruckSchedule>>,
    pub multipliers: Vec<f64>,
    pub iterations: u64,
    /// Subproblem invocations, surrogate or exact.
    pub subproblem_solves: u64,
    pub labels: u64,
    pub level_updates: usize,
    pub feasible_iterations: u64,
    pub improvements: Vec<Improvement>,
    /// Smallest `‖H‖₁` seen; explains a `NoFeasible` status.
    pub min_violation: i64,
    pub wall_time_s: f64,
    pub trace: Vec<TraceRow>,
}

impl RunResult {
    pub fn best_total(&self) -> Option<f64> {
        self.best_cost.map(|c| c.total)
    }

    /// Solves spent until a feasible cost within `tol` of `target` was first
    /// recorded.
    pub fn solves_to_reach(&self, target: f64, tol: f64) -> Option<u64> {
        self.improvements.iter().find(|i| i.cost <= target + tol).map(|i| i.solves)
    }

    pub fn write_trace<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.trace {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Fleet-wide bookkeeping shared by both strategies.
struct Fleet<'a> {
    c: &'a Compiled,
    schedules: Vec<TruckSchedule>,
    footprints: Vec<Footprint>,
    own: Vec<f64>,
}

impl<'a> Fleet<'a> {
    fn idle(c: &'a Compiled) -> Self {
        let n = c.trucks.len();
        let mut f = Fleet {
            c,
            schedules: vec![TruckSchedule::idle(); n],
            footprints: Vec::with_capacity(n),
            own: vec![0.0; n],
        };
        f.footprints = (0..n).map(|v| f.schedules[v].footprint(c, v)).collect();
        f
    }

    fn set(&mut self, v: usize, s: TruckSchedule) {
        self.footprints[v] = s.footprint(self.c, v);
        self.own[v] = s.own_cost(self.c, v);
        self.schedules[v] = s;
    }

    fn usage(&self) -> Usage {
        Usage::from_footprints(self.c, &self.footprints)
    }

    fn usage_without(&self, v: usize) -> Usage {
        Usage::from_footprints(
            self.c,
            self.footprints.iter().enumerate().filter(|(i, _)| *i != v).map(|(_, f)| f),
        )
    }

    fn cost(&self, usage: &Usage) -> CostBreakdown {
        let labor: f64 = self.schedules.iter().enumerate().map(|(v, s)| s.labor(self.c, v)).sum();
        let charging: f64 = self.schedules.iter().map(|s| s.charging_cost(self.c)).sum();
        CostBreakdown::new(labor, charging, usage.tardiness_cost(self.c))
    }
}

struct Recorder {
    start: Instant,
    best: Option<(CostBreakdown, Vec<TruckSchedule>)>,
    improvements: Vec<Improvement>,
    feasible_iterations: u64,
    min_violation: i64,
    trace: Vec<TraceRow>,
}

impl Recorder {
    fn new() -> Self {
        Recorder {
            start: Instant::now(),
            best: None,
            improvements: Vec::new(),
            feasible_iterations: 0,
            min_violation: i64::MAX,
            trace: Vec::new(),
        }
    }

    fn best_total(&self) -> Option<f64> {
        self.best.as_ref().map(|(c, _)| c.total)
    }

    fn observe(&mut self, h: &ViolationVector, fleet: &Fleet, usage: &Usage, k: u64, solves: u64) -> bool {
        self.min_violation = self.min_violation.min(h.l1());
        if !h.is_zero() {
            return false;
        }
        self.feasible_iterations += 1;
        let cost = fleet.cost(usage);
        if self.best_total().is_none_or(|b| cost.total < b) {
            self.best = Some((cost, fleet.schedules.clone()));
            self.improvements.push(Improvement {
                iteration: k,
                solves,
                cost: cost.total,
                schedules: fleet.schedules.clone(),
            });
        }
        true
    }

    fn done(&self, cfg: &Config, k: u64) -> bool {
        if k >= cfg.max_iterations {
            return true;
        }
        if let Some(limit) = cfg.time_limit_s {
            if self.start.elapsed().as_secs_f64() >= limit {
                return true;
            }
        }
        matches!((cfg.target_cost, self.best_total()), (Some(t), Some(b)) if b <= t + 1e-9)
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(self, strategy: Strategy, lambda: Vec<f64>, k: u64, solves: u64, labels: u64, level_updates: usize) -> RunResult {
        let (best_cost, best_schedules) = match self.best {
            Some((c, s)) => (Some(c), Some(s)),
            None => (None, None),
        };
        RunResult {
            strategy,
            status: if best_cost.is_some() {
                RunStatus::Feasible
            } else {
                RunStatus::NoFeasible
            },
            best_cost,
            best_schedules,
            multipliers: lambda,
            iterations: k,
            subproblem_solves: solves,
            labels,
            level_updates,
            feasible_iterations: self.feasible_iterations,
            improvements: self.improvements,
            min_violation: self.min_violation,
            wall_time_s: self.start.elapsed().as_secs_f64(),
            trace: self.trace,
        }
    }
}

fn as_f64(h: &ViolationVector) -> Vec<f64> {
    h.0.iter().map(|&x| x as f64).collect()
}

/// Run the configured strategy.
pub fn run(c: &Compiled, cfg: &Config) -> Result<RunResult> {
    cfg.validate()?;
    match cfg.strategy {
        Strategy::Slblr => run_slblr(c, cfg),
        Strategy::BaselineLr => run_baseline_lr(c, cfg),
    }
}

/// Surrogate level-based Lagrangian relaxation: one truck per iteration in
/// round-robin order, each solved only until it beats its re-priced
/// incumbent.
pub fn run_slblr(c: &Compiled, cfg: &Config) -> Result<RunResult> {
    cfg.validate()?;
    let n = c.trucks.len();
    let mut lambda = cfg.initial_multipliers(c);
    let mut rho = cfg.rho0;
    let mut fleet = Fleet::idle(c);
    let mut rec = Recorder::new();
    let (mut solves, mut labels) = (0u64, 0u64);

    // first pass: every truck answers the initial prices in turn
    for v in 0..n {
        let pricing = Pricing::for_truck(c, v, &lambda.values, rho, &fleet.usage_without(v), PricingMode::Surrogate);
        let sol = solve_surrogate(c, v, &pricing, None);
        solves += 1;
        labels += sol.labels;
        fleet.set(v, sol.schedule);
    }
    let usage = fleet.usage();
    let h = usage.violations(c);
    let l0 = fleet.own.iter().sum::<f64>() + usage.tardiness_cost(c) + penalty_terms(&h, &lambda.values, rho);
    rec.observe(&h, &fleet, &usage, 0, solves);
    let mut gap = cfg.bootstrap_delta * l0.abs().max(1.0);
    let mut level = LevelState::new(l0 + gap, lambda.values.clone(), cfg.window);

    let mut k = 0u64;
    while !rec.done(cfg, k) {
        k += 1;
        let v = ((k - 1) % n as u64) as usize;
        let others = fleet.usage_without(v);
        let pricing = Pricing::for_truck(c, v, &lambda.values, rho, &others, PricingMode::Surrogate);
        let sol = solve_surrogate(c, v, &pricing, Some(&fleet.schedules[v]));
        solves += 1;
        labels += sol.labels;
        fleet.set(v, sol.schedule);

        let usage = fleet.usage();
        let h = usage.violations(c);
        let l = fleet.own.iter().sum::<f64>() + usage.tardiness_cost(c) + penalty_terms(&h, &lambda.values, rho);
        let h_sq = h.l2_squared() as f64;
        let mut alpha = 0.0;
        let mut event = Event::None;
        if rec.observe(&h, &fleet, &usage, k, solves) {
            rho /= cfg.beta;
            event = Event::Feasible;
        } else {
            // until divergence has produced a real level, a bootstrap level
            // close to the surrogate dual value stalls the steps: raise it by
            // a growing margin
            if level.updates == 0 && level.level - l < cfg.stall_fraction * gap {
                gap *= 2.0;
                level.level = l + gap;
            }
            alpha = stepsize(&cfg.zeta, n, &level.level, &l, &h_sq).unwrap_or(0.0);
            lambda = lambda.updated(&alpha, &as_f64(&h))?;
            level.observe(level_candidate(&alpha, n, &h_sq, &l));
            level.push(lambda.values.clone());
            if level.maybe_update() {
                event = Event::LevelUpdate;
            }
        }
        rec.trace.push(TraceRow {
            k,
            v,
            l_rho: l,
            h_l1: h.l1(),
            h_l2sq: h.l2_squared(),
            alpha,
            q_max: level.q_max,
            q_bar: level.level,
            rho,
            best_feasible: rec.best_total(),
            event,
        });
    }
    let updates = level.updates;
    Ok(rec.finish(Strategy::Slblr, lambda.values, k, solves, labels, updates))
}

/// Per-truck exact minima in linear slack form, reduced in truck order.
fn exact_pass(c: &Compiled, lambda: &[f64]) -> Vec<crate::subproblem::Solution> {
    let empty = Usage::empty(c);
    (0..c.trucks.len())
        .into_par_iter()
        .map(|v| {
            let pricing = Pricing::for_truck(c, v, lambda, 0.0, &empty, PricingMode::Dual);
            solve_exact(c, v, &pricing)
        })
        .collect()
}

fn dual_constant(c: &Compiled, lambda: &[f64]) -> f64 {
    let mut k = 0.0;
    for (pr, prod) in c.products.iter().enumerate() {
        k -= lambda[c.demand_index(pr)] * f64::from(prod.quantity);
    }
    for (s, &n) in c.charger_nodes.iter().enumerate() {
        for p in 1..=c.horizon {
            k -= lambda[c.capacity_index(s, p)] * f64::from(c.capacity(n));
        }
    }
    k
}

/// `q(Λ)` with `ρ = 0`: every truck solved exactly, capacity multipliers
/// projected to be non-negative. A valid lower bound on the optimal cost.
pub fn dual_lower_bound(c: &Compiled, lambda: &[f64]) -> Result<f64> {
    if lambda.len() != c.dual_dim() {
        return Err(Error::Dimension {
            expected: c.dual_dim(),
            got: lambda.len(),
        });
    }
    let projected = Multipliers::from_values(lambda.to_vec(), c.capacity_offset()).values;
    let sols = exact_pass(c, &projected);
    Ok(sols.iter().map(|s| s.value).sum::<f64>() + dual_constant(c, &projected))
}

/// Classical Lagrangian relaxation: all trucks solved exactly each
/// iteration, true subgradient, Polyak step towards a level that is
/// lowered whenever the multipliers travel too far without progress.
pub fn run_baseline_lr(c: &Compiled, cfg: &Config) -> Result<RunResult> {
    cfg.validate()?;
    let n = c.trucks.len();
    let mut lambda = cfg.initial_multipliers(c);
    let mut fleet = Fleet::idle(c);
    let mut rec = Recorder::new();
    let (mut solves, mut labels) = (0u64, 0u64);
    let mut best_dual = f64::NEG_INFINITY;
    let mut delta: Option<f64> = cfg.baseline_delta0;
    let mut group_best = f64::NEG_INFINITY;
    let mut path = 0.0;
    let mut level_updates = 0;

    let mut k = 0u64;
    while !rec.done(cfg, k) {
        k += 1;
        let sols = exact_pass(c, &lambda.values);
        solves += n as u64;
        let q = sols.iter().map(|s| s.value).sum::<f64>() + dual_constant(c, &lambda.values);
        for (v, s) in sols.into_iter().enumerate() {
            labels += s.labels;
            fleet.set(v, s.schedule);
        }
        let usage = fleet.usage();
        let h = usage.violations(c);
        let mut event = Event::None;
        if rec.observe(&h, &fleet, &usage, k, solves) {
            event = Event::Feasible;
        }

        // subgradient of the slack-form dual
        let mut g = as_f64(&h);
        for (s, &node) in c.charger_nodes.iter().enumerate() {
            for p in 1..=c.horizon {
                let i = c.capacity_index(s, p);
                let slack = (usage.occupancy[s][(p - 1) as usize] - i64::from(c.capacity(node))) as f64;
                // projected direction: no pull below zero on a clamped multiplier
                g[i] = if lambda.values[i] <= 0.0 && slack < 0.0 { 0.0 } else { slack };
            }
        }
        let d = *delta.get_or_insert_with(|| q.abs().max(1.0));
        if group_best == f64::NEG_INFINITY {
            group_best = q;
        }
        if q >= group_best + d / 2.0 {
            group_best = q;
            path = 0.0;
            if event == Event::None {
                event = Event::LevelUpdate;
            }
            level_updates += 1;
        } else if path > cfg.baseline_path_bound {
            delta = Some(d / 2.0);
            path = 0.0;
            if event == Event::None {
                event = Event::LevelUpdate;
            }
            level_updates += 1;
        }
        best_dual = best_dual.max(q);
        group_best = group_best.max(q);
        let d = delta.expect("set above");
        let target = group_best + d;
        let g_sq: f64 = g.iter().map(|x| x * x).sum();
        let alpha = if g_sq > 0.0 { (target - q) / g_sq } else { 0.0 };
        path += alpha * g_sq.sqrt();
        lambda = lambda.updated(&alpha, &g)?;

        rec.trace.push(TraceRow {
            k,
            v: n,
            l_rho: q,
            h_l1: h.l1(),
            h_l2sq: h.l2_squared(),
            alpha,
            q_max: Some(best_dual),
            q_bar: target,
            rho: 0.0,
            best_feasible: rec.best_total(),
            event,
        });
        if g_sq == 0.0 {
            // the relaxed optimum is primal feasible and complementary
            break;
        }
    }
    Ok(rec.finish(Strategy::BaselineLr, lambda.values, k, solves, labels, level_updates))
}
