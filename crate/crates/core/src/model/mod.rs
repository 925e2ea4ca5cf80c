//! The time-expanded mixed-integer model: variable catalog, linearized
//! (big-M) constraint rows, objective, coupling violations and the
//! absolute-value Lagrangian.

mod catalog;
mod mps;
mod rows;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use catalog::{Family, VariableCatalog};
pub use mps::to_mps;
pub use rows::{build_model, coupling_rows, CanonicalModel, Row, Sense};

use crate::error::{Error, Result};
use crate::instance::{Compiled, FULL_SOC_BP};
use crate::schedule::{Footprint, TruckSchedule};

/// Integer value for every catalog column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub values: Vec<i64>,
}

impl Assignment {
    pub fn zeros(cat: &VariableCatalog) -> Self {
        Assignment {
            values: vec![0; cat.len()],
        }
    }

    pub fn get(&self, column: usize) -> i64 {
        self.values[column]
    }

    /// Lower per-truck schedules onto the full catalog, deriving times, SOC,
    /// unloading, latest-arrival and tardiness values.
    pub fn from_schedules(c: &Compiled, cat: &VariableCatalog, schedules: &[TruckSchedule]) -> Result<Self> {
        if schedules.len() != c.trucks.len() {
            return Err(Error::Dimension {
                expected: c.trucks.len(),
                got: schedules.len(),
            });
        }
        let mut x = Self::zeros(cat);
        let full = i64::from(FULL_SOC_BP);
        let mut latest = vec![0i64; c.products.len()];
        for (v, sched) in schedules.iter().enumerate() {
            let tr = &c.trucks[v];
            if sched.trips.len() > c.trips {
                return Err(Error::MalformedSolution(format!("truck {} takes too many trips", tr.id)));
            }
            if c.trips > 0 {
                x.values[cat.soc(v, c.trip_start(v, 0), 0)] = i64::from(tr.initial_soc);
            }
            let mut soc = i64::from(tr.initial_soc);
            let mut abar = 0;
            for (t, trip) in sched.trips.iter().enumerate() {
                x.values[cat.trip(v, t)] = 1;
                x.values[cat.load(v, t)] = i64::from(trip.loaded);
                x.values[cat.soc(v, c.trip_start(v, t), t)] = soc;
                for block in &trip.charges {
                    let k = c
                        .charger_slot(block.node)
                        .ok_or_else(|| Error::MalformedSolution("charging at a node without chargers".into()))?;
                    if block.periods == 0 || block.start == 0 || block.end() > c.horizon {
                        return Err(Error::MalformedSolution("charge block outside horizon".into()));
                    }
                    for p in block.occupied() {
                        x.values[cat.charge(v, k, t, p)] = 1;
                    }
                    x.values[cat.charge_begin(v, k, t, block.start)] = 1;
                    x.values[cat.charge_complete(v, k, t, block.end())] = 1;
                    x.values[cat.begin_time(v, k, t)] = i64::from(block.start);
                    x.values[cat.complete_time(v, k, t)] = i64::from(block.end());
                }
                let mut arrival = 0;
                for leg in &trip.legs {
                    let arc = c
                        .arcs
                        .get(leg.arc)
                        .ok_or_else(|| Error::MalformedSolution(format!("unknown arc {}", leg.arc)))?;
                    if leg.depart == 0 || leg.depart > c.horizon {
                        return Err(Error::MalformedSolution(format!("departure {} outside horizon", leg.depart)));
                    }
                    let q = arc
                        .arrival(leg.depart, c.horizon)
                        .ok_or_else(|| Error::MalformedSolution("arrival beyond horizon".into()))?;
                    x.values[cat.depart(v, arc.from, t, leg.depart)] = 1;
                    x.values[cat.arrive(v, arc.to, t, q)] = 1;
                    x.values[cat.depart_time(v, arc.from, t)] = i64::from(leg.depart);
                    x.values[cat.arrive_time(v, arc.to, t)] = i64::from(q);
                    let drop = i64::from(tr.discharge(arc.segment, trip.loaded)) * i64::from(arc.time(leg.depart));
                    let gained: i64 = trip
                        .charges
                        .iter()
                        .filter(|b| b.node == arc.to)
                        .map(|b| i64::from(b.periods) * i64::from(tr.charge_rate))
                        .sum();
                    soc = (soc - drop + gained).clamp(0, full);
                    x.values[cat.soc(v, arc.to, t)] = soc;
                    arrival = i64::from(q);
                }
                if trip.loaded {
                    x.values[cat.unload(v, t)] = arrival;
                    if let Some(pr) = c.trip_product(v, t) {
                        latest[pr] = latest[pr].max(arrival);
                    }
                }
                if trip.legs.last().is_some_and(|l| c.arcs[l.arc].to == tr.depot) {
                    abar = abar.max(arrival);
                }
            }
            x.values[cat.latest_arrival(v)] = abar;
        }
        for (pr, prod) in c.products.iter().enumerate() {
            x.values[cat.latest_unload(pr)] = latest[pr];
            x.values[cat.tardiness(pr)] = (latest[pr] - i64::from(prod.due)).max(0);
        }
        Ok(x)
    }
}

/// Outcome of checking an assignment against the linearized rows.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evaluation {
    pub feasible: bool,
    /// Columns outside their bounds.
    pub bound_violations: Vec<usize>,
    /// Summed residual per row tag (only violated tags appear).
    pub residuals: BTreeMap<String, i64>,
    pub violated_rows: usize,
}

pub fn evaluate(model: &CanonicalModel, x: &Assignment) -> Result<Evaluation> {
    let cat = &model.catalog;
    if x.values.len() != cat.len() {
        return Err(Error::Dimension {
            expected: cat.len(),
            got: x.values.len(),
        });
    }
    let mut ev = Evaluation::default();
    for (col, &val) in x.values.iter().enumerate() {
        let (lo, hi) = cat.bounds(col);
        if val < lo || val > hi {
            ev.bound_violations.push(col);
        }
    }
    for row in &model.rows {
        let r = row.residual(&x.values);
        if r != 0 {
            *ev.residuals.entry(row.tag.to_string()).or_insert(0) += r;
            ev.violated_rows += 1;
        }
    }
    ev.feasible = ev.bound_violations.is_empty() && ev.violated_rows == 0;
    Ok(ev)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub labor: f64,
    pub charging: f64,
    pub tardiness: f64,
    pub total: f64,
}

impl CostBreakdown {
    pub fn new(labor: f64, charging: f64, tardiness: f64) -> Self {
        CostBreakdown {
            labor,
            charging,
            tardiness,
            total: labor + charging + tardiness,
        }
    }
}

pub fn objective(c: &Compiled, cat: &VariableCatalog, x: &Assignment) -> CostBreakdown {
    let mut labor = 0.0;
    let mut charging = 0.0;
    for v in 0..c.trucks.len() {
        if c.trips > 0 && x.get(cat.trip(v, 0)) == 1 {
            let span = x.get(cat.latest_arrival(v)) - x.get(cat.depart_time(v, c.trip_start(v, 0), 0));
            labor += c.labor_cost * span as f64;
        }
        for t in 0..c.trips {
            for (k, &n) in c.charger_nodes.iter().enumerate() {
                for p in 1..=c.horizon {
                    charging += c.charger_price(n, p) * x.get(cat.charge(v, k, t, p)) as f64;
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

/// Relaxed-constraint residuals `H`: demand blocks first (port products,
/// then depot products), then one capacity entry per charger node and period.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViolationVector(pub Vec<i64>);

impl ViolationVector {
    pub fn l1(&self) -> i64 {
        self.0.iter().map(|h| h.abs()).sum()
    }

    pub fn l2_squared(&self) -> i64 {
        self.0.iter().map(|h| h * h).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&h| h == 0)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Aggregate loads and charger occupancy of the whole fleet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Usage {
    /// Loaded trips per product index.
    pub loads: Vec<i64>,
    /// Occupancy per charger slot, index 0 = period 1.
    pub occupancy: Vec<Vec<i64>>,
    /// Latest unloading start per product (0 when nothing delivered).
    pub latest_unload: Vec<u32>,
}

impl Usage {
    pub fn empty(c: &Compiled) -> Self {
        Usage {
            loads: vec![0; c.products.len()],
            occupancy: vec![vec![0; c.horizon as usize]; c.charger_nodes.len()],
            latest_unload: vec![0; c.products.len()],
        }
    }

    pub fn from_footprints<'a>(c: &Compiled, fps: impl IntoIterator<Item = &'a Footprint>) -> Self {
        let mut u = Self::empty(c);
        for fp in fps {
            u.add(c, fp);
        }
        u
    }

    pub fn add(&mut self, c: &Compiled, fp: &Footprint) {
        for &(pr, n) in &fp.loads {
            self.loads[pr] += i64::from(n);
        }
        for &(node, p) in &fp.charging {
            if let Some(k) = c.charger_slot(node) {
                self.occupancy[k][(p - 1) as usize] += 1;
            }
        }
        for &(pr, at) in &fp.latest_unload {
            self.latest_unload[pr] = self.latest_unload[pr].max(at);
        }
    }

    pub fn from_assignment(c: &Compiled, cat: &VariableCatalog, x: &Assignment) -> Self {
        let mut u = Self::empty(c);
        for v in 0..c.trucks.len() {
            for t in 0..c.trips {
                if let Some(pr) = c.trip_product(v, t) {
                    if c.products[pr].eligible.contains(&v) {
                        u.loads[pr] += x.get(cat.load(v, t));
                    }
                }
                for k in 0..c.charger_nodes.len() {
                    for p in 1..=c.horizon {
                        u.occupancy[k][(p - 1) as usize] += x.get(cat.charge(v, k, t, p));
                    }
                }
            }
        }
        for pr in 0..c.products.len() {
            u.latest_unload[pr] = x.get(cat.latest_unload(pr)).max(0) as u32;
        }
        u
    }

    pub fn violations(&self, c: &Compiled) -> ViolationVector {
        let mut h = vec![0; c.dual_dim()];
        for (pr, prod) in c.products.iter().enumerate() {
            h[c.demand_index(pr)] = self.loads[pr] - i64::from(prod.quantity);
        }
        for (k, &n) in c.charger_nodes.iter().enumerate() {
            let cap = i64::from(c.capacity(n));
            for p in 1..=c.horizon {
                h[c.capacity_index(k, p)] = (self.occupancy[k][(p - 1) as usize] - cap).max(0);
            }
        }
        ViolationVector(h)
    }

    pub fn tardiness_cost(&self, c: &Compiled) -> f64 {
        c.products
            .iter()
            .zip(&self.latest_unload)
            .map(|(prod, &u)| prod.penalty * f64::from(u.saturating_sub(prod.due)))
            .sum()
    }
}

pub fn coupling_violations(c: &Compiled, cat: &VariableCatalog, x: &Assignment) -> ViolationVector {
    Usage::from_assignment(c, cat, x).violations(c)
}

/// `Σ_v O_v + O_pr(tard) + Λ·H + ρ·‖H‖₁` for a fleet of schedules, with
/// tardiness taken from the joint latest unloading times.
pub fn lagrangian_value(c: &Compiled, schedules: &[TruckSchedule], lambda: &[f64], rho: f64) -> Result<f64> {
    if lambda.len() != c.dual_dim() {
        return Err(Error::Dimension {
            expected: c.dual_dim(),
            got: lambda.len(),
        });
    }
    let fps: Vec<Footprint> = schedules.iter().enumerate().map(|(v, s)| s.footprint(c, v)).collect();
    let usage = Usage::from_footprints(c, &fps);
    let own: f64 = schedules.iter().enumerate().map(|(v, s)| s.own_cost(c, v)).sum();
    let h = usage.violations(c);
    Ok(own + usage.tardiness_cost(c) + penalty_terms(&h, lambda, rho))
}

/// `Λ·H + ρ·‖H‖₁`.
pub fn penalty_terms(h: &ViolationVector, lambda: &[f64], rho: f64) -> f64 {
    let dot: f64 = h.0.iter().zip(lambda).map(|(&hi, &l)| hi as f64 * l).sum();
    dot + rho * h.l1() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::two_node_instance;
    use crate::instance::{Price, Rate};
    use crate::schedule::{ChargeBlock, Leg, Trip};

    fn leg(arc: usize, depart: u32) -> Leg {
        Leg { arc, depart }
    }

    /// One loaded round trip on the 2-node toy with travel 4, charging three
    /// periods at the port at price 2; import due 9 with penalty 5.
    fn priced_round_trip() -> (Compiled, Vec<TruckSchedule>) {
        let mut inst = two_node_instance(4, 20);
        inst.trips = 4;
        inst.demands[0].quantity = 2;
        inst.demands[1].quantity = 2;
        inst.demands[1].due = 9;
        inst.demands[1].tardiness_penalty = 5.0;
        for c in inst.chargers.iter_mut() {
            c.price = Price::Constant(2.0);
        }
        let c = inst.compile().unwrap();
        let sched = TruckSchedule {
            trips: vec![
                Trip {
                    loaded: false,
                    legs: vec![leg(0, 1)],
                    charges: vec![ChargeBlock {
                        node: 1,
                        start: 5,
                        periods: 3,
                    }],
                },
                Trip {
                    loaded: true,
                    legs: vec![leg(1, 8)],
                    charges: vec![],
                },
            ],
        };
        (c, vec![sched])
    }

    #[test]
    fn objective_breakdown_example() {
        let (c, s) = priced_round_trip();
        let cat = VariableCatalog::new(&c);
        let x = Assignment::from_schedules(&c, &cat, &s).unwrap();
        let cost = objective(&c, &cat, &x);
        assert_eq!((cost.labor, cost.charging, cost.tardiness, cost.total), (10.0, 6.0, 10.0, 26.0));
        let ev = evaluate(&build_model(&c, false), &x).unwrap();
        assert!(ev.feasible, "{ev:?}");
    }

    #[test]
    fn idle_objective_is_zero() {
        let mut inst = two_node_instance(1, 6);
        inst.demands.iter_mut().for_each(|d| d.quantity = 0);
        let c = inst.compile().unwrap();
        let cat = VariableCatalog::new(&c);
        let x = Assignment::from_schedules(&c, &cat, &[TruckSchedule::idle()]).unwrap();
        assert_eq!(objective(&c, &cat, &x).total, 0.0);
        assert!(evaluate(&build_model(&c, true), &x).unwrap().feasible);
        assert!(coupling_violations(&c, &cat, &x).is_zero());
    }

    #[test]
    fn lagrangian_adds_penalty() {
        let (c, s) = priced_round_trip();
        let zero = vec![0.0; c.dual_dim()];
        let h = Usage::from_footprints(&c, &[s[0].footprint(&c, 0)]).violations(&c);
        assert_eq!(h.l1(), 3);
        assert_eq!(lagrangian_value(&c, &s, &zero, 1.0).unwrap(), 29.0);
        assert_eq!(lagrangian_value(&c, &s, &zero, 0.0).unwrap(), 26.0);
        assert!(matches!(lagrangian_value(&c, &s, &[0.0], 1.0), Err(Error::Dimension { .. })));
    }

    #[test]
    fn lagrangian_equals_objective_when_feasible() {
        let mut inst = two_node_instance(1, 6);
        inst.demands[1].due = 1;
        let c = inst.compile().unwrap();
        let s = vec![TruckSchedule {
            trips: vec![
                Trip {
                    loaded: true,
                    legs: vec![leg(0, 1)],
                    charges: vec![],
                },
                Trip {
                    loaded: true,
                    legs: vec![leg(1, 3)],
                    charges: vec![],
                },
            ],
        }];
        let cat = VariableCatalog::new(&c);
        let x = Assignment::from_schedules(&c, &cat, &s).unwrap();
        assert!(coupling_violations(&c, &cat, &x).is_zero());
        let lambda: Vec<f64> = (0..c.dual_dim()).map(|i| i as f64 - 3.5).collect();
        let obj = objective(&c, &cat, &x).total;
        // span 3-1, tardiness 3-1 at penalty 1
        assert_eq!(obj, 4.0);
        assert_eq!(lagrangian_value(&c, &s, &lambda, 0.0).unwrap(), obj);
        assert!(evaluate(&build_model(&c, true), &x).unwrap().feasible);
    }

    #[test]
    fn lagrangian_two_truck_hand_value() {
        // two trucks, both charge at the port (capacity 1) in period 3
        let mut inst = two_node_instance(1, 8);
        let mut t2 = inst.trucks[0].clone();
        t2.id = 2;
        inst.trucks.push(t2);
        inst.demands[0].quantity = 2;
        let c = inst.compile().unwrap();
        let trip_out = |loaded| Trip {
            loaded,
            legs: vec![leg(0, 1)],
            charges: vec![ChargeBlock {
                node: 1,
                start: 2,
                periods: 2,
            }],
        };
        let back = Trip {
            loaded: false,
            legs: vec![leg(1, 4)],
            charges: vec![],
        };
        let s = vec![
            TruckSchedule {
                trips: vec![trip_out(true), back.clone()],
            },
            TruckSchedule {
                trips: vec![trip_out(false), back],
            },
        ];
        // H: export 1-2 = -1, import 0-1 = -1, port capacity (2-1) in periods 2 and 3
        let mut lambda = vec![0.0; c.dual_dim()];
        lambda[0] = 4.0;
        lambda[1] = -2.0;
        let port_slot = c.charger_slot(1).unwrap();
        lambda[c.capacity_index(port_slot, 2)] = 0.5;
        lambda[c.capacity_index(port_slot, 3)] = 1.5;
        // own costs: labor 3 each, charging 2 each -> 10; tardiness 0
        // Λ·H = -4 + 2 + 0.5 + 1.5 = 0; ρ‖H‖₁ = 2 * 4 = 8
        assert_eq!(lagrangian_value(&c, &s, &lambda, 2.0).unwrap(), 18.0);
    }

    #[test]
    fn coupling_components() {
        let mut inst = two_node_instance(1, 8);
        let mut t2 = inst.trucks[0].clone();
        t2.id = 2;
        inst.trucks.push(t2);
        inst.demands[0].quantity = 2;
        let c = inst.compile().unwrap();
        let mut u = Usage::empty(&c);
        u.loads[0] = 1;
        u.loads[1] = 1;
        u.occupancy[0][4] = 2;
        let h = u.violations(&c);
        assert_eq!(h.0[c.demand_index(0)], -1);
        assert_eq!(h.0[c.demand_index(1)], 0);
        assert_eq!(h.0[c.capacity_index(0, 5)], 1);
        assert_eq!(h.l1(), 2);
    }

    #[test]
    fn eq1_availability_rows() {
        let mut inst = two_node_instance(1, 6);
        inst.trucks[0].available = 3;
        let c = inst.compile().unwrap();
        let m = build_model(&c, false);
        let cat = &m.catalog;
        let row = m.rows_tagged("eq1-bigM").next().unwrap();
        assert_eq!(row.big_m, Some(7));
        let mut x = Assignment::zeros(cat);
        x.values[cat.trip(0, 0)] = 1;
        x.values[cat.depart_time(0, 0, 0)] = 2;
        assert_eq!(row.residual(&x.values), 1);
        x.values[cat.depart_time(0, 0, 0)] = 3;
        assert_eq!(row.residual(&x.values), 0);
        x.values[cat.trip(0, 0)] = 0;
        x.values[cat.depart_time(0, 0, 0)] = 0;
        assert_eq!(row.residual(&x.values), 0);
    }

    #[test]
    fn eq6_expands_to_pair() {
        let c = two_node_instance(1, 6).compile().unwrap();
        let m = build_model(&c, false);
        let cat = &m.catalog;
        let dep = cat.depart(0, 0, 0, 2);
        let arr = cat.arrive(0, 1, 0, 2);
        let pair: Vec<&Row> = m
            .rows
            .iter()
            .filter(|r| r.tag.starts_with("eq6") && r.terms.iter().any(|&(col, _)| col == dep))
            .collect();
        assert_eq!(pair.len(), 2);
        assert_eq!(pair[0].tag, "eq6-bigM-le");
        assert_eq!(pair[1].tag, "eq6-bigM-ge");
        // Σ arr − 1 ≤ M(1 − dep) and Σ arr − 1 ≥ −M(1 − dep) with M = 1
        assert_eq!(pair[0].terms, vec![(dep, 1), (arr, 1)]);
        assert_eq!((pair[0].sense, pair[0].rhs), (Sense::Le, 2));
        assert_eq!((pair[1].sense, pair[1].rhs), (Sense::Ge, 0));
        let mut x = Assignment::zeros(cat);
        x.values[dep] = 1;
        assert_eq!(pair[1].residual(&x.values), 1);
        x.values[arr] = 1;
        assert!(pair.iter().all(|r| r.residual(&x.values) == 0));
        x.values[dep] = 0;
        assert!(pair.iter().all(|r| r.residual(&x.values) == 0));
    }

    #[test]
    fn soc_rows_use_segment_rates() {
        let mut inst = two_node_instance(2, 8);
        inst.trucks[0].discharge_loaded_bp = Rate::Uniform(500);
        let c = inst.compile().unwrap();
        let m = build_model(&c, false);
        // loaded arrival row: s_src ≥ drop when dep, arr, ld all set → rhs = drop − 3M
        let row = m.rows_tagged("soc-arrival-loaded").next().unwrap();
        let big = row.big_m.unwrap();
        assert_eq!(big, 10_000 + 1000);
        assert_eq!(row.rhs, 1000 - 3 * big);
    }

    #[test]
    fn toy_row_count_matches_hand_enumeration() {
        // V=1, N=2 (both charger sites), T=2, P=4, travel 1: every arc fits
        let c = two_node_instance(1, 4).compile().unwrap();
        let m = build_model(&c, false);
        let by_tag = m.count_by_tag();
        let expect: &[(&str, usize)] = &[
            ("eq1-bigM", 1),
            ("soc-init", 1),
            // one per (t, p)
            ("eq3-dep", 8),
            ("eq3-arr", 8),
            ("eq3-bgn", 8),
            ("eq3-cmplt", 8),
            // one per (n, t)
            ("eq4-dep", 4),
            ("eq4-arr", 4),
            ("eq5-dep", 4),
            ("eq5-arr", 4),
            ("eq4-bgn", 4),
            ("eq4-cmplt", 4),
            ("eq5-bgn", 4),
            ("eq5-cmplt", 4),
            // one pair per (n, t, p); no intermediate nodes for eq8
            ("eq6-bigM-le", 16),
            ("eq6-bigM-ge", 16),
            ("eq7-bigM-le", 16),
            ("eq7-bigM-ge", 16),
            // per (arc, t, p): both ends host chargers
            ("eq11-bigM-le", 16),
            ("eq11-bigM-ge", 16),
            ("eq11-empty-bigM-le", 16),
            ("eq11-empty-bigM-ge", 16),
            ("soc-arrival-loaded", 16),
            ("soc-arrival-empty", 16),
            // per (charger, t, p)
            ("eq12", 16),
            ("eq13", 16),
            ("eq14", 16),
            ("eq15", 16),
            ("eq16-bigM-le", 2),
            ("eq16-bigM-ge", 2),
            // trip 1 ends at the port, trip 2 at the depot
            ("eq17-bigM", 1),
            ("eq18-bigM", 1),
            ("eq19-bigM", 1),
            ("eq20-bigM", 1),
            ("eq21-bigM-le", 1),
            ("eq21-bigM-ge", 1),
            ("eq22-bigM-le", 1),
            ("eq22-bigM-ge", 1),
            ("eq23", 2),
            ("eq24", 1),
            ("eq28", 2),
            ("eq29", 2),
            ("eq31", 2),
            ("link-trip-start", 2),
            ("link-trip-end", 2),
            ("link-no-return", 2),
            ("link-no-depart-end", 2),
            ("link-trip-idle", 2),
        ];
        let expected: BTreeMap<&str, usize> = expect.iter().copied().collect();
        assert_eq!(by_tag, expected);
        assert_eq!(m.rows.len(), 321);
        let with = build_model(&c, true);
        assert_eq!(with.rows.len(), 321 + 2 + 8);
    }

    #[test]
    fn mps_export_names_rows_and_columns() {
        let c = two_node_instance(1, 3).compile().unwrap();
        let m = build_model(&c, false);
        let text = to_mps(&m, "toy");
        assert!(text.starts_with("NAME toy\nROWS\n N COST\n"));
        assert!(text.contains(" E R1_soc_init\n"));
        assert!(text.contains(" BV BND xdep_0_0_1_1\n"));
        assert!(text.contains(" UI BND s_0_0_1 10000\n"));
        assert!(text.trim_end().ends_with("ENDATA"));
        assert_eq!(text.lines().filter(|l| l.starts_with(" L ") || l.starts_with(" G ") || l.starts_with(" E ")).count(), m.rows.len());
    }
}
