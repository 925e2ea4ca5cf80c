//! Instance generators: toy fixtures, seeded random tiny instances, the
//! five-node Example 1 network, detour variants, the Example 3 topology
//! family and resource sweeps.
//!
//! Travel times of the published examples exist only in figures, so every
//! generator that invents them stamps `non_paper_data = true` in metadata.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::instance::{
    derive_horizon, derive_trip_count, minimum_horizon, ChargerSite, Demand, Instance, Node, NodeKind, Price, Rate,
    Segment, TravelTime, Truck, TripParity, DEFAULT_CUSHION, FULL_SOC_BP, SCHEMA,
};

fn base(nodes: Vec<Node>, segments: Vec<Segment>, horizon: u32, trips: u32) -> Instance {
    Instance {
        schema: SCHEMA.to_string(),
        nodes,
        segments,
        chargers: Vec::new(),
        trucks: Vec::new(),
        demands: Vec::new(),
        horizon,
        trips,
        labor_cost: 1.0,
        trip_parity: TripParity::OddOutbound,
        metadata: BTreeMap::new(),
    }
}

fn seg(from: u32, to: u32, time: u32) -> Segment {
    Segment {
        from,
        to,
        forward: TravelTime::Constant(time),
        backward: None,
    }
}

fn site(node: u32, chargers: u32, price: f64) -> ChargerSite {
    ChargerSite {
        node,
        chargers,
        price: Price::Constant(price),
    }
}

fn truck(id: u32, depot: u32, port: u32) -> Truck {
    Truck {
        id,
        home_depot: depot,
        port,
        available: 1,
        charge_rate_bp: 1700,
        discharge_loaded_bp: Rate::Uniform(500),
        discharge_empty_bp: Rate::Uniform(250),
        initial_soc_bp: FULL_SOC_BP,
    }
}

fn demand(product: u32, origin: u32, destination: u32, quantity: u32, due: u32) -> Demand {
    Demand {
        product,
        origin,
        destination,
        quantity,
        due,
        tardiness_penalty: 1.0,
    }
}

/// Depot 1 and port 2 joined by one segment; one truck, one unit each way.
pub fn two_node_instance(travel: u32, horizon: u32) -> Instance {
    let mut inst = base(
        vec![
            Node { id: 1, kind: NodeKind::Depot },
            Node { id: 2, kind: NodeKind::Port },
        ],
        vec![seg(1, 2, travel)],
        horizon,
        2,
    );
    inst.chargers = vec![site(1, 1, 1.0), site(2, 1, 1.0)];
    inst.trucks = vec![truck(1, 1, 2)];
    inst.demands = vec![demand(1, 1, 2, 1, horizon), demand(2, 2, 1, 1, horizon)];
    inst
}

/// Depot, plain intermediates, port on a line with the given segment times.
pub fn line_instance(times: &[u32], trips: u32, horizon: u32) -> Instance {
    let n = times.len() as u32 + 1;
    let nodes = (1..=n)
        .map(|id| Node {
            id,
            kind: match id {
                1 => NodeKind::Depot,
                x if x == n => NodeKind::Port,
                _ => NodeKind::Plain,
            },
        })
        .collect();
    let segments = times.iter().enumerate().map(|(i, &t)| seg(i as u32 + 1, i as u32 + 2, t)).collect();
    let mut inst = base(nodes, segments, horizon, trips);
    inst.chargers = vec![site(1, 1, 1.0), site(n, 1, 1.0)];
    inst.trucks = vec![truck(1, 1, n)];
    inst.demands = vec![demand(1, 1, n, 1, horizon), demand(2, n, 1, 1, horizon)];
    inst
}

/// Bounds for [`random_tiny`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TinyLimits {
    pub max_trucks: u32,
    pub max_nodes: u32,
    pub max_periods: u32,
    pub max_travel: u32,
}

impl Default for TinyLimits {
    fn default() -> Self {
        TinyLimits {
            max_trucks: 2,
            max_nodes: 4,
            max_periods: 20,
            max_travel: 2,
        }
    }
}

/// Seeded random instance with one depot, one port, two trips and at most
/// `limits` trucks/nodes/periods. Always passes validation.
pub fn random_tiny(seed: u64, limits: TinyLimits) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let inst = draw_tiny(&mut rng, limits);
        if inst.validate().is_pass() && inst.horizon <= limits.max_periods {
            return inst;
        }
    }
}

fn draw_tiny(rng: &mut ChaCha8Rng, limits: TinyLimits) -> Instance {
    let n = rng.gen_range(2..=limits.max_nodes.max(2));
    let nodes: Vec<Node> = (1..=n)
        .map(|id| Node {
            id,
            kind: match id {
                1 => NodeKind::Depot,
                x if x == n => NodeKind::Port,
                _ => NodeKind::Plain,
            },
        })
        .collect();
    let mut segments = Vec::new();
    let mut pairs = BTreeSet::new();
    for id in 1..n {
        segments.push(seg(id, id + 1, rng.gen_range(1..=limits.max_travel)));
        pairs.insert((id, id + 1));
    }
    for a in 1..=n {
        for b in a + 2..=n {
            if rng.gen_bool(0.4) && pairs.insert((a, b)) {
                segments.push(seg(a, b, rng.gen_range(1..=limits.max_travel + 1)));
            }
        }
    }
    let mut inst = base(nodes, segments, 1, 2);
    inst.labor_cost = f64::from(rng.gen_range(1..=2));
    for id in 1..=n {
        let hosted = id == 1 || id == n || rng.gen_bool(0.5);
        if hosted {
            let price = if rng.gen_bool(0.3) {
                Price::PerPeriod(Vec::new())
            } else {
                Price::Constant(f64::from(rng.gen_range(1..=3)))
            };
            inst.chargers.push(ChargerSite {
                node: id,
                chargers: rng.gen_range(1..=2),
                price,
            });
        }
    }
    let fleet = rng.gen_range(1..=limits.max_trucks.max(1));
    let charge = 500 * rng.gen_range(4..=10);
    let loaded = 500 * rng.gen_range(3..=7);
    let empty = 500 * rng.gen_range(2..=loaded / 500);
    let initial = 1000 * rng.gen_range(6..=10);
    for id in 1..=fleet {
        inst.trucks.push(Truck {
            id,
            home_depot: 1,
            port: n,
            available: rng.gen_range(1..=2),
            charge_rate_bp: charge,
            discharge_loaded_bp: Rate::Uniform(loaded),
            discharge_empty_bp: Rate::Uniform(empty),
            initial_soc_bp: initial,
        });
    }
    let cushion = rng.gen_range(1..=4);
    let horizon = derive_horizon(&inst, 2, cushion)
        .unwrap_or(limits.max_periods)
        .clamp(minimum_horizon(&inst).max(2), limits.max_periods);
    inst.horizon = horizon;
    for c in inst.chargers.iter_mut() {
        if let Price::PerPeriod(v) = &mut c.price {
            *v = (0..horizon).map(|_| f64::from(rng.gen_range(1..=3))).collect();
        }
    }
    let export = rng.gen_range(0..=fleet);
    let import = rng.gen_range(0..=fleet);
    let due = |rng: &mut ChaCha8Rng| rng.gen_range(horizon / 2..=horizon);
    let (d1, d2) = (due(rng), due(rng));
    inst.demands = vec![
        Demand {
            product: 1,
            origin: 1,
            destination: n,
            quantity: export,
            due: d1,
            tardiness_penalty: f64::from(rng.gen_range(1..=3)),
        },
        Demand {
            product: 2,
            origin: n,
            destination: 1,
            quantity: import,
            due: d2,
            tardiness_penalty: f64::from(rng.gen_range(1..=3)),
        },
    ];
    inst
}

/// Undirected segment times keyed by `(min id, max id)`.
pub type TravelTable = BTreeMap<(u32, u32), u32>;

/// The five-node Example 1 road graph with placeholder travel times. The
/// longest depot-port path 1→2→3→4→5 takes 15 periods, matching the horizon
/// sizing reported for that example.
pub fn example1_default_travel() -> TravelTable {
    BTreeMap::from([((1, 2), 4), ((1, 3), 5), ((2, 3), 3), ((3, 4), 4), ((3, 5), 6), ((4, 5), 4)])
}

/// Compact travel table used by the desk-scale benchmark: same graph, short
/// segments so the horizon stays small.
pub fn example1_compact_travel() -> TravelTable {
    BTreeMap::from([((1, 2), 1), ((1, 3), 2), ((2, 3), 1), ((3, 4), 1), ((3, 5), 2), ((4, 5), 1)])
}

/// Scenario knobs for [`example1`]; `None` keeps the published default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Example1Overrides {
    pub trucks: Option<u32>,
    pub export_demand: Option<u32>,
    pub import_demand: Option<u32>,
    pub trips: Option<u32>,
    pub horizon: Option<u32>,
    pub cushion: Option<u32>,
    pub labor_cost: Option<f64>,
    pub charge_price: Option<f64>,
    pub tardiness_penalty: Option<f64>,
    pub export_due: Option<u32>,
    pub import_due: Option<u32>,
}

pub const EXAMPLE1_EDGES: [(u32, u32); 6] = [(1, 2), (1, 3), (2, 3), (3, 4), (3, 5), (4, 5)];

/// Five-node network: depot 1, port 5; capacities {2,2,1,2,2}; charging
/// 1700 bp/period, discharge 500/250 bp/period; due 20 (export) / 45
/// (import); five trucks moving 3 units to the port and 8 back by default.
pub fn example1(travel: &TravelTable, o: &Example1Overrides) -> Result<Instance> {
    let mut segments = Vec::new();
    for (a, b) in EXAMPLE1_EDGES {
        let t = *travel
            .get(&(a, b))
            .ok_or_else(|| Error::Missing(format!("travel time for segment {a}-{b}")))?;
        segments.push(seg(a, b, t));
    }
    let nodes = (1..=5)
        .map(|id| Node {
            id,
            kind: match id {
                1 => NodeKind::Depot,
                5 => NodeKind::Port,
                _ => NodeKind::Plain,
            },
        })
        .collect();
    let mut inst = base(nodes, segments, 1, 0);
    let price = o.charge_price.unwrap_or(1.0);
    inst.chargers = [2, 2, 1, 2, 2]
        .iter()
        .enumerate()
        .map(|(i, &cap)| site(i as u32 + 1, cap, price))
        .collect();
    let fleet = o.trucks.unwrap_or(5);
    inst.trucks = (1..=fleet).map(|id| truck(id, 1, 5)).collect();
    let (export, import) = (o.export_demand.unwrap_or(3), o.import_demand.unwrap_or(8));
    let penalty = o.tardiness_penalty.unwrap_or(1.0);
    inst.demands = vec![
        Demand {
            tardiness_penalty: penalty,
            ..demand(1, 1, 5, export, o.export_due.unwrap_or(20))
        },
        Demand {
            tardiness_penalty: penalty,
            ..demand(2, 5, 1, import, o.import_due.unwrap_or(45))
        },
    ];
    inst.labor_cost = o.labor_cost.unwrap_or(1.0);
    inst.trips = match o.trips {
        Some(t) => t,
        None => derive_trip_count(export.max(import), fleet)?,
    };
    inst.horizon = match o.horizon {
        Some(h) => h,
        None => derive_horizon(&inst, inst.trips, o.cushion.unwrap_or(DEFAULT_CUSHION))?,
    };
    inst.metadata.insert("non_paper_data".into(), json!(true));
    inst.metadata.insert(
        "travel_times".into(),
        json!(travel.iter().map(|(&(a, b), &t)| json!([a, b, t])).collect::<Vec<_>>()),
    );
    Ok(inst)
}

/// Add a plain node `id` joined to `a` and `b` with the given times.
pub fn with_detour(inst: &Instance, id: u32, a: (u32, u32), b: (u32, u32), charger: Option<(u32, f64)>) -> Instance {
    let mut out = inst.clone();
    out.nodes.push(Node { id, kind: NodeKind::Plain });
    out.segments.push(seg(a.0, id, a.1));
    out.segments.push(seg(id, b.0, b.1));
    if let Some((count, price)) = charger {
        out.chargers.push(site(id, count, price));
    }
    sync_per_segment_rates(&mut out, inst.segments.len());
    out
}

fn sync_per_segment_rates(inst: &mut Instance, original: usize) {
    let added = inst.segments.len().saturating_sub(original);
    for t in inst.trucks.iter_mut() {
        for r in [&mut t.discharge_loaded_bp, &mut t.discharge_empty_bp] {
            if let Rate::PerSegment(v) = r {
                let fill = v.iter().copied().max().unwrap_or(1);
                v.extend(std::iter::repeat_n(fill, added));
            }
        }
    }
}

/// Keep only nodes lying on some minimum-time depot→port path of a
/// designated pair (constant travel times assumed; per-period tables use
/// their minimum).
pub fn shortest_path_restriction(inst: &Instance) -> Instance {
    let mut adj: BTreeMap<u32, Vec<(u32, u32)>> = BTreeMap::new();
    for s in &inst.segments {
        adj.entry(s.from).or_default().push((s.to, s.forward.min()));
        adj.entry(s.to).or_default().push((s.from, s.backward_time().min()));
    }
    let dist_from = |src: u32| {
        let mut dist: BTreeMap<u32, u32> = BTreeMap::from([(src, 0)]);
        let mut frontier = BTreeSet::from([(0u32, src)]);
        while let Some((d, n)) = frontier.pop_first() {
            if dist.get(&n).is_some_and(|&b| b < d) {
                continue;
            }
            for &(m, w) in adj.get(&n).into_iter().flatten() {
                if dist.get(&m).is_none_or(|&old| d + w < old) {
                    dist.insert(m, d + w);
                    frontier.insert((d + w, m));
                }
            }
        }
        dist
    };
    let mut keep = BTreeSet::new();
    for t in &inst.trucks {
        let (from_depot, from_port) = (dist_from(t.home_depot), dist_from(t.port));
        let Some(&best) = from_depot.get(&t.port) else { continue };
        for n in &inst.nodes {
            if let (Some(a), Some(b)) = (from_depot.get(&n.id), from_port.get(&n.id)) {
                if a + b == best {
                    keep.insert(n.id);
                }
            }
        }
    }
    let mut out = inst.clone();
    out.nodes.retain(|n| keep.contains(&n.id));
    let kept: Vec<bool> = inst
        .segments
        .iter()
        .map(|s| keep.contains(&s.from) && keep.contains(&s.to))
        .collect();
    out.segments = inst
        .segments
        .iter()
        .zip(&kept)
        .filter(|(_, &k)| k)
        .map(|(s, _)| s.clone())
        .collect();
    for t in out.trucks.iter_mut() {
        for r in [&mut t.discharge_loaded_bp, &mut t.discharge_empty_bp] {
            if let Rate::PerSegment(v) = r {
                *v = v.iter().zip(&kept).filter(|(_, &k)| k).map(|(&x, _)| x).collect();
            }
        }
    }
    out.chargers.retain(|c| keep.contains(&c.node));
    out
}

/// Two trucks that must charge two periods mid-route at the single-charger
/// node 2 on the direct route 1→2→4; node 3 offers a second charger on a
/// path one period longer. Restricting to shortest paths forces the second
/// truck to queue two periods instead of detouring for one.
pub fn contended_detour_instance() -> Instance {
    let nodes = vec![
        Node { id: 1, kind: NodeKind::Depot },
        Node { id: 2, kind: NodeKind::Plain },
        Node { id: 3, kind: NodeKind::Plain },
        Node { id: 4, kind: NodeKind::Port },
    ];
    let segments = vec![seg(1, 2, 1), seg(2, 4, 1), seg(1, 3, 1), seg(3, 4, 2)];
    let mut inst = base(nodes, segments, 12, 2);
    inst.chargers = vec![site(1, 1, 1.0), site(2, 1, 1.0), site(3, 1, 1.0), site(4, 2, 1.0)];
    inst.trucks = (1..=2)
        .map(|id| Truck {
            initial_soc_bp: 3000,
            charge_rate_bp: 2000,
            discharge_loaded_bp: Rate::PerSegment(vec![3000, 3000, 3000, 1500]),
            discharge_empty_bp: Rate::PerSegment(vec![2000, 2000, 2000, 1000]),
            ..truck(id, 1, 4)
        })
        .collect();
    inst.demands = vec![demand(1, 1, 4, 2, 4), demand(2, 4, 1, 0, 12)];
    inst.demands[0].tardiness_penalty = 3.0;
    inst.labor_cost = 1.0;
    inst.metadata.insert("non_paper_data".into(), json!(true));
    inst
}

/// Hand-authored road network for the Example 3 family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub nodes: Vec<Node>,
    /// `(from, to, miles)`.
    pub roads: Vec<(u32, u32, f64)>,
    /// Average driving speed, miles per hour.
    pub speed_mph: f64,
}

impl Topology {
    pub fn from_json(text: &str) -> Result<Self> {
        let t: Topology = serde_json::from_str(text)?;
        if t.roads.iter().any(|r| !(r.2.is_finite() && r.2 > 0.0)) || !(t.speed_mph > 0.0) {
            return Err(Error::Argument("topology distances and speed must be positive".into()));
        }
        Ok(t)
    }

    /// A seven-node placeholder resembling the published map: port 1,
    /// warehouses 4, 6, 7.
    pub fn la_placeholder() -> Self {
        let kinds = [
            NodeKind::Port,
            NodeKind::Plain,
            NodeKind::Plain,
            NodeKind::Depot,
            NodeKind::Plain,
            NodeKind::Depot,
            NodeKind::Depot,
        ];
        Topology {
            nodes: kinds
                .iter()
                .enumerate()
                .map(|(i, &kind)| Node { id: i as u32 + 1, kind })
                .collect(),
            roads: vec![
                (1, 2, 18.0),
                (1, 3, 14.0),
                (2, 3, 10.0),
                (2, 4, 9.0),
                (3, 5, 12.0),
                (4, 5, 11.0),
                (5, 6, 8.0),
                (3, 6, 16.0),
                (6, 7, 24.0),
                (5, 7, 30.0),
            ],
            speed_mph: 40.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Example3Case {
    Base,
    /// One charger (instead of three) at the given node.
    FewerChargers(u32),
    /// Every truck carries the long-range battery.
    LongRange,
    /// Chargers deliver twice the base power.
    FastCharging,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example3Scenario {
    pub case: Example3Case,
    /// Minutes per period; the published study never states it.
    pub period_minutes: f64,
    #[serde(default = "default_price")]
    pub charge_price: f64,
    #[serde(default = "default_labor")]
    pub labor_cost: f64,
    #[serde(default)]
    pub cushion: Option<u32>,
}

fn default_price() -> f64 {
    1.0
}

fn default_labor() -> f64 {
    1.0
}

pub const EX3_BATTERY_KWH: (f64, f64) = (250.0, 600.0);
pub const EX3_POWER_KW: (f64, f64) = (350.0, 700.0);
pub const EX3_KWH_PER_MILE: (f64, f64) = (2.267, 1.617);
pub const EX3_FLEET: [u32; 3] = [17, 13, 20];
pub const EX3_IMPORTS: [u32; 3] = [39, 35, 33];
pub const EX3_EXPORTS: [u32; 3] = [32, 20, 25];

/// Basis points of SOC gained (or spent) per period at `kw` for a battery of
/// `kwh`, rounded to the nearest integer.
pub fn rate_bp(kw: f64, period_hours: f64, kwh: f64) -> u32 {
    (kw * period_hours / kwh * f64::from(FULL_SOC_BP)).round().max(1.0) as u32
}

pub fn example3(topo: &Topology, scenario: &Example3Scenario) -> Result<Instance> {
    if !(scenario.period_minutes > 0.0) {
        return Err(Error::Argument("period length must be positive".into()));
    }
    let hours = scenario.period_minutes / 60.0;
    let depots: Vec<u32> = topo.nodes.iter().filter(|n| n.kind == NodeKind::Depot).map(|n| n.id).collect();
    let port = topo
        .nodes
        .iter()
        .find(|n| n.kind == NodeKind::Port)
        .map(|n| n.id)
        .ok_or_else(|| Error::Argument("topology needs a port".into()))?;
    if depots.len() != 3 {
        return Err(Error::Argument(format!("topology needs three warehouses, found {}", depots.len())));
    }
    let miles_per_period = topo.speed_mph * hours;
    let segments: Vec<Segment> = topo
        .roads
        .iter()
        .map(|&(a, b, miles)| seg(a, b, (miles / miles_per_period).ceil().max(1.0) as u32))
        .collect();
    let mut inst = base(topo.nodes.clone(), segments, 1, 2);
    inst.labor_cost = scenario.labor_cost;
    inst.chargers = topo
        .nodes
        .iter()
        .map(|n| {
            let count = match scenario.case {
                Example3Case::FewerChargers(id) if id == n.id => 1,
                _ => 3,
            };
            site(n.id, count, scenario.charge_price)
        })
        .collect();
    let power = match scenario.case {
        Example3Case::FastCharging => EX3_POWER_KW.1,
        _ => EX3_POWER_KW.0,
    };
    let mut id = 1;
    let mut rounding = Vec::new();
    for (i, &depot) in depots.iter().enumerate() {
        let battery = match (scenario.case, i) {
            (Example3Case::LongRange, _) => EX3_BATTERY_KWH.1,
            (_, 0) => EX3_BATTERY_KWH.0,
            _ => EX3_BATTERY_KWH.1,
        };
        // per-segment discharge: energy of the whole segment spread over its periods
        let per_segment = |kwh_per_mile: f64| {
            topo.roads
                .iter()
                .zip(&inst.segments)
                .map(|(&(_, _, miles), s)| {
                    let periods = f64::from(s.forward.max());
                    rate_bp(kwh_per_mile * miles / periods, 1.0, battery)
                })
                .collect::<Vec<_>>()
        };
        let charge = rate_bp(power, hours, battery);
        rounding.push(json!({
            "depot": depot,
            "battery_kwh": battery,
            "charge_rate_bp": charge,
            "charge_rate_exact_bp": power * hours / battery * f64::from(FULL_SOC_BP),
        }));
        let (loaded, empty) = (per_segment(EX3_KWH_PER_MILE.0), per_segment(EX3_KWH_PER_MILE.1));
        for _ in 0..EX3_FLEET[i] {
            inst.trucks.push(Truck {
                id,
                home_depot: depot,
                port,
                available: 1,
                charge_rate_bp: charge,
                discharge_loaded_bp: Rate::PerSegment(loaded.clone()),
                discharge_empty_bp: Rate::PerSegment(empty.clone()),
                initial_soc_bp: FULL_SOC_BP,
            });
            id += 1;
        }
    }
    let mut trips = 2;
    for (i, &depot) in depots.iter().enumerate() {
        inst.demands.push(demand(2 * i as u32 + 1, depot, port, EX3_EXPORTS[i], 0));
        inst.demands.push(demand(2 * i as u32 + 2, port, depot, EX3_IMPORTS[i], 0));
        trips = trips.max(derive_trip_count(EX3_EXPORTS[i].max(EX3_IMPORTS[i]), EX3_FLEET[i])?);
    }
    inst.trips = trips;
    inst.horizon = derive_horizon(&inst, trips, scenario.cushion.unwrap_or(DEFAULT_CUSHION))?;
    for d in inst.demands.iter_mut() {
        d.due = inst.horizon * 3 / 4;
    }
    inst.metadata.insert("non_paper_data".into(), json!(true));
    inst.metadata.insert("period_minutes".into(), json!(scenario.period_minutes));
    inst.metadata.insert("rate_rounding".into(), json!(rounding));
    Ok(inst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum SweepParameter {
    BatteryCapacityScale,
    ChargePowerScale,
    ChargersPerNode,
}

impl std::str::FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "batteryCapacityScale" | "battery" => Ok(Self::BatteryCapacityScale),
            "chargePowerScale" | "power" => Ok(Self::ChargePowerScale),
            "chargersPerNode" | "chargers" => Ok(Self::ChargersPerNode),
            other => Err(Error::Argument(format!("unknown sweep parameter {other}"))),
        }
    }
}

/// Physical base values a tiny sweep instance is derived from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalTruck {
    pub battery_kwh: f64,
    pub power_kw: f64,
    /// Energy spent per period of driving.
    pub loaded_kwh: f64,
    pub empty_kwh: f64,
    pub period_hours: f64,
}

impl Default for PhysicalTruck {
    fn default() -> Self {
        PhysicalTruck {
            battery_kwh: 250.0,
            power_kw: 350.0,
            loaded_kwh: 90.0,
            empty_kwh: 60.0,
            period_hours: 0.25,
        }
    }
}

/// Re-derive every truck's rates from physical parameters scaled by
/// `factor` (battery capacity or charging power), or set every site's
/// charger count to `factor`.
pub fn apply_sweep(inst: &Instance, base: &PhysicalTruck, param: SweepParameter, factor: f64) -> Result<Instance> {
    if !(factor > 0.0) {
        return Err(Error::Argument("scale factors must be positive".into()));
    }
    let mut out = inst.clone();
    let (battery, power) = match param {
        SweepParameter::BatteryCapacityScale => (base.battery_kwh * factor, base.power_kw),
        SweepParameter::ChargePowerScale => (base.battery_kwh, base.power_kw * factor),
        SweepParameter::ChargersPerNode => {
            for c in out.chargers.iter_mut() {
                c.chargers = factor.round().max(1.0) as u32;
            }
            (base.battery_kwh, base.power_kw)
        }
    };
    let charge = rate_bp(power, base.period_hours, battery);
    let loaded = rate_bp(base.loaded_kwh, 1.0, battery);
    let empty = rate_bp(base.empty_kwh, 1.0, battery);
    for t in out.trucks.iter_mut() {
        t.charge_rate_bp = charge;
        t.discharge_loaded_bp = Rate::Uniform(loaded);
        t.discharge_empty_bp = Rate::Uniform(empty);
    }
    out.metadata.insert(
        "sweep".into(),
        json!({ "parameter": param, "factor": factor, "charge_rate_bp": charge, "loaded_bp": loaded, "empty_bp": empty }),
    );
    Ok(out)
}
