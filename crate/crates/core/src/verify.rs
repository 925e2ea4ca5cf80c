//! Independent ground truth: a direct interpreter of the logical model
//! (implications instead of big-M rows) and a brute-force optimizer for tiny
//! instances.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Compiled, Direction};
use crate::model::{Assignment, CostBreakdown, VariableCatalog};
use crate::schedule::TruckSchedule;
use crate::subproblem::{enumerate_schedules, Terminal};

/// Outcome of checking an assignment against the logical constraints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub feasible: bool,
    /// Columns outside their declared domain.
    pub bound_violations: Vec<usize>,
    /// Number of violated checks per constraint tag.
    pub violations: BTreeMap<String, usize>,
    /// Total excess per coupling family (demand shortfall or surplus,
    /// charger oversubscription); only violated families appear.
    pub coupling: BTreeMap<String, i64>,
    pub cost: CostBreakdown,
}

struct Checker<'a> {
    c: &'a Compiled,
    cat: &'a VariableCatalog,
    x: &'a Assignment,
    violations: BTreeMap<String, usize>,
    coupling: BTreeMap<String, i64>,
}

impl Checker<'_> {
    fn val(&self, col: usize) -> i64 {
        self.x.get(col)
    }

    fn on(&self, col: usize) -> bool {
        self.x.get(col) == 1
    }

    fn check(&mut self, ok: bool, tag: &str) {
        if !ok {
            *self.violations.entry(tag.to_string()).or_default() += 1;
        }
    }

    fn excess(&mut self, amount: i64, tag: &str) {
        if amount != 0 {
            *self.coupling.entry(tag.to_string()).or_default() += amount.abs();
        }
    }

    /// `cond ⇒ sum == 1`, reported per side.
    fn exactly_one(&mut self, cond: bool, sum: i64, tag: &str) {
        if cond {
            self.check(sum <= 1, &format!("{tag}-le"));
            self.check(sum >= 1, &format!("{tag}-ge"));
        }
    }
}

/// Check `x` against the logical model. Coupling constraints (demand and
/// charger capacity) are included when `with_coupling` is set.
pub fn verify(c: &Compiled, x: &Assignment, with_coupling: bool) -> Result<VerificationReport> {
    let cat = VariableCatalog::new(c);
    if x.values.len() != cat.len() {
        return Err(Error::Dimension {
            expected: cat.len(),
            got: x.values.len(),
        });
    }
    let bound_violations: Vec<usize> = (0..cat.len())
        .filter(|&col| {
            let (lo, hi) = cat.bounds(col);
            !(lo..=hi).contains(&x.get(col))
        })
        .collect();

    let mut ck = Checker {
        c,
        cat: &cat,
        x,
        violations: BTreeMap::new(),
        coupling: BTreeMap::new(),
    };
    for v in 0..c.trucks.len() {
        check_truck(&mut ck, v);
    }
    for (pr, prod) in c.products.iter().enumerate() {
        let tard = ck.val(cat.tardiness(pr));
        let ubar = ck.val(cat.latest_unload(pr));
        ck.check(tard >= ubar - i64::from(prod.due), "eq29");
    }
    if with_coupling {
        check_coupling(&mut ck);
    }

    let cost = logical_cost(c, &cat, x);
    let (violations, coupling) = (ck.violations, ck.coupling);
    Ok(VerificationReport {
        feasible: bound_violations.is_empty() && violations.is_empty() && coupling.is_empty(),
        bound_violations,
        violations,
        coupling,
        cost,
    })
}

fn check_truck(ck: &mut Checker, v: usize) {
    let (c, cat) = (ck.c, ck.cat);
    let tr = &c.trucks[v];
    let horizon = c.horizon;
    let nodes = c.node_count();
    let slots = c.charger_nodes.len();

    if c.trips > 0 {
        let s0 = c.trip_start(v, 0);
        if ck.on(cat.trip(v, 0)) {
            ck.check(ck.val(cat.depart_time(v, s0, 0)) >= i64::from(tr.available), "eq1-bigM");
        }
        ck.check(ck.val(cat.soc(v, s0, 0)) == i64::from(tr.initial_soc), "soc-init");
    }

    for t in 0..c.trips {
        let trip_on = ck.on(cat.trip(v, t));
        let ld = ck.on(cat.load(v, t));
        let start = c.trip_start(v, t);
        let end = c.trip_end(v, t);

        // one event of each kind per period, one per node (slot) per trip
        for p in 1..=horizon {
            let dep: i64 = (0..nodes).map(|n| ck.val(cat.depart(v, n, t, p))).sum();
            let arr: i64 = (0..nodes).map(|n| ck.val(cat.arrive(v, n, t, p))).sum();
            let bgn: i64 = (0..slots).map(|k| ck.val(cat.charge_begin(v, k, t, p))).sum();
            let cmp: i64 = (0..slots).map(|k| ck.val(cat.charge_complete(v, k, t, p))).sum();
            ck.check(dep <= 1, "eq3-dep");
            ck.check(arr <= 1, "eq3-arr");
            ck.check(bgn <= 1, "eq3-bgn");
            ck.check(cmp <= 1, "eq3-cmplt");
        }
        let count = |ck: &Checker, f: &dyn Fn(u32) -> usize| (1..=horizon).map(|p| ck.val(f(p))).sum::<i64>();
        let when = |ck: &Checker, f: &dyn Fn(u32) -> usize| (1..=horizon).map(|p| i64::from(p) * ck.val(f(p))).sum::<i64>();
        for n in 0..nodes {
            let ndep = count(ck, &|p| cat.depart(v, n, t, p));
            let narr = count(ck, &|p| cat.arrive(v, n, t, p));
            ck.check(ndep <= 1, "eq4-dep");
            ck.check(narr <= 1, "eq4-arr");
            let d = when(ck, &|p| cat.depart(v, n, t, p));
            let a = when(ck, &|p| cat.arrive(v, n, t, p));
            ck.check(ck.val(cat.depart_time(v, n, t)) == d, "eq5-dep");
            ck.check(ck.val(cat.arrive_time(v, n, t)) == a, "eq5-arr");
        }
        for k in 0..slots {
            ck.check(count(ck, &|p| cat.charge_begin(v, k, t, p)) <= 1, "eq4-bgn");
            ck.check(count(ck, &|p| cat.charge_complete(v, k, t, p)) <= 1, "eq4-cmplt");
            let b = when(ck, &|p| cat.charge_begin(v, k, t, p));
            let e = when(ck, &|p| cat.charge_complete(v, k, t, p));
            ck.check(ck.val(cat.begin_time(v, k, t)) == b, "eq5-bgn");
            ck.check(ck.val(cat.complete_time(v, k, t)) == e, "eq5-cmplt");
        }

        // flow: every departure lands somewhere, every arrival came from somewhere
        for n in 0..nodes {
            for p in 1..=horizon {
                if ck.on(cat.depart(v, n, t, p)) {
                    let landed: i64 = c.out_arcs[n]
                        .iter()
                        .filter_map(|&a| {
                            let arc = &c.arcs[a];
                            arc.arrival(p, horizon).map(|q| ck.val(cat.arrive(v, arc.to, t, q)))
                        })
                        .sum();
                    ck.exactly_one(true, landed, "eq6-bigM");
                }
                if ck.on(cat.arrive(v, n, t, p)) {
                    let mut came = 0;
                    for &a in &c.in_arcs[n] {
                        let arc = &c.arcs[a];
                        for pd in (1..=p).filter(|&pd| arc.arrival(pd, horizon) == Some(p)) {
                            came += ck.val(cat.depart(v, arc.from, t, pd));
                        }
                    }
                    ck.exactly_one(true, came, "eq7-bigM");
                    if n != tr.depot && n != tr.port {
                        let left: i64 = (p + 1..=horizon).map(|q| ck.val(cat.depart(v, n, t, q))).sum();
                        ck.exactly_one(true, left, "eq8-bigM");
                    }
                }
            }
        }

        // battery along each traversed arc
        for arc in &c.arcs {
            let gained = match c.charger_slot(arc.to) {
                Some(k) => i64::from(tr.charge_rate) * count(ck, &|p| cat.charge(v, k, t, p)),
                None => 0,
            };
            let charger = c.is_charger(arc.to);
            let s_src = ck.val(cat.soc(v, arc.from, t));
            let s_dst = ck.val(cat.soc(v, arc.to, t));
            for p in 1..=horizon {
                let Some(q) = arc.arrival(p, horizon) else { continue };
                if !(ck.on(cat.depart(v, arc.from, t, p)) && ck.on(cat.arrive(v, arc.to, t, q))) {
                    continue;
                }
                let drop = i64::from(tr.discharge(arc.segment, ld)) * i64::from(arc.time(p));
                let (le, ge, arr) = match (ld, charger) {
                    (true, false) => ("eq9-bigM-le", "eq9-bigM-ge", "soc-arrival-loaded"),
                    (true, true) => ("eq11-bigM-le", "eq11-bigM-ge", "soc-arrival-loaded"),
                    (false, false) => ("eq10-bigM-le", "eq10-bigM-ge", "soc-arrival-empty"),
                    (false, true) => ("eq11-empty-bigM-le", "eq11-empty-bigM-ge", "soc-arrival-empty"),
                };
                ck.check(s_dst <= s_src - drop + gained, le);
                ck.check(s_dst >= s_src - drop, ge);
                ck.check(s_src - drop >= 0, arr);
            }
        }

        // charging windows
        for (k, &n) in c.charger_nodes.iter().enumerate() {
            for p in 1..=horizon {
                let chg = ck.val(cat.charge(v, k, t, p));
                let prev = if p > 1 { ck.val(cat.charge(v, k, t, p - 1)) } else { 0 };
                let next = if p < horizon { ck.val(cat.charge(v, k, t, p + 1)) } else { 0 };
                let arrived_before: i64 = (1..p).map(|q| ck.val(cat.arrive(v, n, t, q))).sum();
                let departed_by: i64 = (1..=p).map(|q| ck.val(cat.depart(v, n, t, q))).sum();
                ck.check(arrived_before >= chg, "eq12");
                ck.check(departed_by + chg <= 1, "eq13");
                ck.check(ck.val(cat.charge_begin(v, k, t, p)) >= chg - prev, "eq14");
                ck.check(ck.val(cat.charge_complete(v, k, t, p)) >= chg - next, "eq15");
            }
        }

        // unloading
        if c.trip_product(v, t).is_some() {
            if ld {
                let u = ck.val(cat.unload(v, t));
                let a = ck.val(cat.arrive_time(v, end, t));
                ck.check(u <= a, "eq16-bigM-le");
                ck.check(u >= a, "eq16-bigM-ge");
            }
        } else {
            ck.check(!ld && ck.val(cat.load(v, t)) <= 0, "ld-requires-product");
        }

        // hand-over to the next trip at the connecting node
        if t + 1 < c.trips {
            let k = c.charger_slot(end).expect("trip ends host chargers");
            let next_on = ck.on(cat.trip(v, t + 1));
            let d_next = ck.val(cat.depart_time(v, end, t + 1));
            let a_now = ck.val(cat.arrive_time(v, end, t));
            let c_now = ck.val(cat.complete_time(v, k, t));
            let charged = count(ck, &|p| cat.charge(v, k, t, p));
            let completed = count(ck, &|p| cat.charge_complete(v, k, t, p));
            let s_now = ck.val(cat.soc(v, end, t));
            let s_next = ck.val(cat.soc(v, end, t + 1));
            let mut keyed = vec![(next_on, "eq17-bigM", "eq18-bigM", "eq21-bigM")];
            if end == tr.port {
                keyed.push((trip_on, "eq19-bigM", "eq20-bigM", "eq22-bigM"));
            }
            for (cond, idle_tag, charged_tag, soc_tag) in keyed {
                if !cond {
                    continue;
                }
                if charged == 0 {
                    ck.check(d_next > a_now, idle_tag);
                }
                if completed == 1 {
                    ck.check(d_next > c_now, charged_tag);
                }
                ck.check(s_next <= s_now, &format!("{soc_tag}-le"));
                ck.check(s_next >= s_now, &format!("{soc_tag}-ge"));
            }
            ck.check(ck.val(cat.trip(v, t + 1)) <= ck.val(cat.trip(v, t)), "eq24");
        } else if end == tr.port {
            ck.check(!trip_on && ck.val(cat.trip(v, t)) <= 0, "eq19-horizon");
        }

        ck.check(ck.val(cat.load(v, t)) <= ck.val(cat.trip(v, t)), "eq23");
        if let Some(pr) = c.trip_product(v, t) {
            ck.check(ck.val(cat.latest_unload(pr)) >= ck.val(cat.unload(v, t)), "eq28");
        }
        ck.check(
            ck.val(cat.latest_arrival(v)) >= ck.val(cat.arrive_time(v, tr.depot, t)),
            "eq31",
        );

        // trip structure
        let trip_val = ck.val(cat.trip(v, t));
        ck.check(count(ck, &|p| cat.depart(v, start, t, p)) == trip_val, "link-trip-start");
        ck.check(count(ck, &|p| cat.arrive(v, end, t, p)) == trip_val, "link-trip-end");
        ck.check(count(ck, &|p| cat.arrive(v, start, t, p)) == 0, "link-no-return");
        ck.check(count(ck, &|p| cat.depart(v, end, t, p)) == 0, "link-no-depart-end");
        if !trip_on {
            let any: i64 = (0..nodes).map(|n| count(ck, &|p| cat.depart(v, n, t, p))).sum();
            ck.check(any == 0, "link-trip-idle");
        }
    }
}

fn check_coupling(ck: &mut Checker) {
    let (c, cat) = (ck.c, ck.cat);
    for (pr, prod) in c.products.iter().enumerate() {
        let mut delivered = 0;
        for &v in &prod.eligible {
            for t in (0..c.trips).filter(|&t| c.trip_product(v, t) == Some(pr)) {
                delivered += ck.val(cat.load(v, t));
            }
        }
        let tag = match prod.direction {
            Direction::Export => "eq25",
            Direction::Import => "eq26",
        };
        ck.excess(delivered - i64::from(prod.quantity), tag);
    }
    for (k, &n) in c.charger_nodes.iter().enumerate() {
        for p in 1..=c.horizon {
            let busy: i64 = (0..c.trucks.len())
                .flat_map(|v| (0..c.trips).map(move |t| (v, t)))
                .map(|(v, t)| ck.val(cat.charge(v, k, t, p)))
                .sum();
            ck.excess((busy - i64::from(c.capacity(n))).max(0), "eq27");
        }
    }
}

fn logical_cost(c: &Compiled, cat: &VariableCatalog, x: &Assignment) -> CostBreakdown {
    let mut labor = 0.0;
    let mut charging = 0.0;
    for v in 0..c.trucks.len() {
        if c.trips > 0 {
            let span = x.get(cat.latest_arrival(v)) - x.get(cat.depart_time(v, c.trip_start(v, 0), 0));
            labor += c.labor_cost * span as f64;
        }
        for t in 0..c.trips {
            for (k, &n) in c.charger_nodes.iter().enumerate() {
                for p in 1..=c.horizon {
                    if x.get(cat.charge(v, k, t, p)) != 0 {
                        charging += c.charger_price(n, p) * x.get(cat.charge(v, k, t, p)) as f64;
                    }
                }
            }
        }
    }
    let tardiness = c
        .products
        .iter()
        .enumerate()
        .map(|(pr, prod)| prod.penalty * x.get(cat.tardiness(pr)) as f64)
        .sum();
    CostBreakdown::new(labor, charging, tardiness)
}

/// Size limits for [`brute_force_optimum`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleLimits {
    pub max_trucks: usize,
    pub max_nodes: usize,
    pub max_periods: u32,
    /// Labels per truck during schedule enumeration.
    pub label_budget: u64,
    /// Partial fleet combinations visited.
    pub combination_budget: u64,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits {
            max_trucks: 2,
            max_nodes: 5,
            max_periods: 20,
            label_budget: 2_000_000,
            combination_budget: 50_000_000,
        }
    }
}

#[derive(Debug, Clone)]
pub enum OracleOutcome {
    Optimal { cost: CostBreakdown, schedules: Vec<TruckSchedule> },
    Infeasible,
    BudgetExceeded,
}

impl OracleOutcome {
    pub fn total(&self) -> Option<f64> {
        match self {
            OracleOutcome::Optimal { cost, .. } => Some(cost.total),
            _ => None,
        }
    }
}

/// Exact optimum by exhaustive search: every truck's non-dominated complete
/// schedules are enumerated, then combined depth-first under the demand and
/// capacity constraints, with a cost bound and symmetry breaking between
/// interchangeable trucks.
pub fn brute_force_optimum(c: &Compiled, limits: &OracleLimits) -> OracleOutcome {
    if c.trucks.len() > limits.max_trucks || c.node_count() > limits.max_nodes || c.horizon > limits.max_periods {
        return OracleOutcome::BudgetExceeded;
    }
    let mut options: Vec<Vec<Terminal>> = Vec::with_capacity(c.trucks.len());
    for v in 0..c.trucks.len() {
        match enumerate_schedules(c, v, limits.label_budget) {
            Some(mut t) => {
                t.sort_by(|a, b| a.cost.total_cmp(&b.cost));
                options.push(t);
            }
            None => return OracleOutcome::BudgetExceeded,
        }
    }
    let mut search = Combine::new(c, &options, limits.combination_budget);
    search.descend(0, 0.0);
    if search.exhausted {
        return OracleOutcome::BudgetExceeded;
    }
    match search.best.take() {
        None => OracleOutcome::Infeasible,
        Some((_, picks)) => {
            let schedules: Vec<TruckSchedule> = picks
                .iter()
                .enumerate()
                .map(|(v, &i)| options[v][i].schedule.clone())
                .collect();
            let labor: f64 = schedules.iter().enumerate().map(|(v, s)| s.labor(c, v)).sum();
            let charging: f64 = schedules.iter().map(|s| s.charging_cost(c)).sum();
            let tardiness = search.tardiness(&picks);
            OracleOutcome::Optimal {
                cost: CostBreakdown::new(labor, charging, tardiness),
                schedules,
            }
        }
    }
}

struct Combine<'a> {
    c: &'a Compiled,
    options: &'a [Vec<Terminal>],
    /// Cheapest schedule cost of trucks `v..`.
    tail_cost: Vec<f64>,
    /// Most loads trucks `v..` can still add, per product.
    tail_loads: Vec<Vec<i64>>,
    /// Truck `v` is interchangeable with truck `v - 1`.
    same_as_prev: Vec<bool>,
    loads: Vec<i64>,
    occupancy: Vec<u32>,
    picks: Vec<usize>,
    best: Option<(f64, Vec<usize>)>,
    visited: u64,
    budget: u64,
    exhausted: bool,
}

impl<'a> Combine<'a> {
    fn new(c: &'a Compiled, options: &'a [Vec<Terminal>], budget: u64) -> Self {
        let n = options.len();
        let mut tail_cost = vec![0.0; n + 1];
        let mut tail_loads = vec![vec![0i64; c.products.len()]; n + 1];
        for v in (0..n).rev() {
            let cheapest = options[v].iter().map(|t| t.cost).fold(f64::INFINITY, f64::min);
            tail_cost[v] = tail_cost[v + 1] + cheapest;
            tail_loads[v] = tail_loads[v + 1].clone();
            for (i, pr) in products_of(c, v).into_iter().enumerate() {
                if let Some(pr) = pr {
                    let most = options[v].iter().map(|t| i64::from(t.counts[i])).max().unwrap_or(0);
                    tail_loads[v][pr] += most;
                }
            }
        }
        let same_as_prev = (0..n)
            .map(|v| v > 0 && interchangeable(c, v - 1, v))
            .collect();
        Combine {
            c,
            options,
            tail_cost,
            tail_loads,
            same_as_prev,
            loads: vec![0; c.products.len()],
            occupancy: vec![0; c.charger_nodes.len() * c.horizon as usize],
            picks: Vec::with_capacity(n),
            best: None,
            visited: 0,
            budget,
            exhausted: false,
        }
    }

    fn tardiness(&self, picks: &[usize]) -> f64 {
        let mut latest = vec![0u32; self.c.products.len()];
        for (v, &i) in picks.iter().enumerate() {
            let t = &self.options[v][i];
            for (slot, pr) in products_of(self.c, v).into_iter().enumerate() {
                if let Some(pr) = pr {
                    latest[pr] = latest[pr].max(t.latest[slot]);
                }
            }
        }
        self.c
            .products
            .iter()
            .zip(latest)
            .map(|(p, u)| p.penalty * f64::from(u.saturating_sub(p.due)))
            .sum()
    }

    fn descend(&mut self, v: usize, cost: f64) {
        if self.exhausted {
            return;
        }
        self.visited += 1;
        if self.visited > self.budget {
            self.exhausted = true;
            return;
        }
        if let Some((best, _)) = &self.best {
            if cost + self.tail_cost[v] >= *best {
                return;
            }
        }
        for (pr, prod) in self.c.products.iter().enumerate() {
            let need = i64::from(prod.quantity);
            if self.loads[pr] > need || self.loads[pr] + self.tail_loads[v][pr] < need {
                return;
            }
        }
        if v == self.options.len() {
            let total = cost + self.tardiness(&self.picks);
            if self.best.as_ref().is_none_or(|(b, _)| total < *b) {
                self.best = Some((total, self.picks.clone()));
            }
            return;
        }
        let first = if self.same_as_prev[v] { self.picks[v - 1] } else { 0 };
        let horizon = self.c.horizon as usize;
        let slots = products_of(self.c, v);
        for i in first..self.options[v].len() {
            let t = &self.options[v][i];
            let cells: Vec<usize> = (0..128).filter(|b| t.charges >> b & 1 == 1).collect();
            let fits = cells.iter().all(|&b| {
                let node = self.c.charger_nodes[b / horizon];
                self.occupancy[b] < self.c.capacity(node)
            });
            if !fits {
                continue;
            }
            for &b in &cells {
                self.occupancy[b] += 1;
            }
            for (s, pr) in slots.iter().enumerate() {
                if let Some(pr) = pr {
                    self.loads[*pr] += i64::from(t.counts[s]);
                }
            }
            self.picks.push(i);
            self.descend(v + 1, cost + t.cost);
            self.picks.pop();
            for (s, pr) in slots.iter().enumerate() {
                if let Some(pr) = pr {
                    self.loads[*pr] -= i64::from(t.counts[s]);
                }
            }
            for &b in &cells {
                self.occupancy[b] -= 1;
            }
            if self.exhausted {
                return;
            }
        }
    }
}

fn products_of(c: &Compiled, v: usize) -> [Option<usize>; 2] {
    [c.trucks[v].export_product, c.trucks[v].import_product]
}

fn interchangeable(c: &Compiled, a: usize, b: usize) -> bool {
    let (x, y) = (&c.trucks[a], &c.trucks[b]);
    x.depot == y.depot
        && x.port == y.port
        && x.available == y.available
        && x.charge_rate == y.charge_rate
        && x.discharge_loaded == y.discharge_loaded
        && x.discharge_empty == y.discharge_empty
        && x.initial_soc == y.initial_soc
        && x.export_product == y.export_product
        && x.import_product == y.import_product
}
