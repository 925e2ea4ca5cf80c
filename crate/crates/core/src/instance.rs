//! Problem data: network, fleet, demands and horizon, plus validation and the
//! trip-count / horizon sizing rules.
//!
//! Periods are 1-based (`1..=horizon`). State of charge is kept in integer
//! basis points (10000 bp = full battery). Trips are 1-based in the
//! serialized form and 0-based in the compiled index.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SCHEMA: &str = "jrc-instance/1";
pub const FULL_SOC_BP: u32 = 10_000;
pub const DEFAULT_CUSHION: u32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Depot,
    Port,
    Plain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: u32,
    pub kind: NodeKind,
}

/// Whole periods; a scalar or one entry per departure period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TravelTime {
    Constant(u32),
    PerPeriod(Vec<u32>),
}

impl TravelTime {
    pub fn at(&self, period: u32) -> u32 {
        match self {
            TravelTime::Constant(t) => *t,
            TravelTime::PerPeriod(v) => v[(period - 1) as usize],
        }
    }

    pub fn max(&self) -> u32 {
        match self {
            TravelTime::Constant(t) => *t,
            TravelTime::PerPeriod(v) => v.iter().copied().max().unwrap_or(0),
        }
    }

    pub fn min(&self) -> u32 {
        match self {
            TravelTime::Constant(t) => *t,
            TravelTime::PerPeriod(v) => v.iter().copied().min().unwrap_or(0),
        }
    }

    fn values(&self) -> Vec<u32> {
        match self {
            TravelTime::Constant(t) => vec![*t],
            TravelTime::PerPeriod(v) => v.clone(),
        }
    }
}

/// Bidirectional road segment. `backward` defaults to `forward`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub from: u32,
    pub to: u32,
    pub forward: TravelTime,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backward: Option<TravelTime>,
}

impl Segment {
    pub fn backward_time(&self) -> &TravelTime {
        self.backward.as_ref().unwrap_or(&self.forward)
    }
}

/// Cost units per charging period, scalar or one entry per period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Price {
    Constant(f64),
    PerPeriod(Vec<f64>),
}

impl Price {
    pub fn at(&self, period: u32) -> f64 {
        match self {
            Price::Constant(c) => *c,
            Price::PerPeriod(v) => v[(period - 1) as usize],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargerSite {
    pub node: u32,
    pub chargers: u32,
    pub price: Price,
}

/// Basis points per period, uniform or one entry per segment (in segment order).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Rate {
    Uniform(u32),
    PerSegment(Vec<u32>),
}

impl Rate {
    pub fn on(&self, segment: usize) -> u32 {
        match self {
            Rate::Uniform(r) => *r,
            Rate::PerSegment(v) => v[segment],
        }
    }

    fn values(&self) -> Vec<u32> {
        match self {
            Rate::Uniform(r) => vec![*r],
            Rate::PerSegment(v) => v.clone(),
        }
    }
}

fn full_soc() -> u32 {
    FULL_SOC_BP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truck {
    pub id: u32,
    pub home_depot: u32,
    pub port: u32,
    pub available: u32,
    pub charge_rate_bp: u32,
    pub discharge_loaded_bp: Rate,
    pub discharge_empty_bp: Rate,
    #[serde(default = "full_soc")]
    pub initial_soc_bp: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Demand {
    pub product: u32,
    pub origin: u32,
    pub destination: u32,
    pub quantity: u32,
    pub due: u32,
    pub tardiness_penalty: f64,
}

/// Which trip numbers run depot to port.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TripParity {
    #[default]
    OddOutbound,
    OddInbound,
}

impl TripParity {
    /// `trip` is 0-based.
    pub fn is_outbound(self, trip: usize) -> bool {
        let odd_number = trip.is_multiple_of(2);
        match self {
            TripParity::OddOutbound => odd_number,
            TripParity::OddInbound => !odd_number,
        }
    }
}

fn schema_tag() -> String {
    SCHEMA.to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    #[serde(default = "schema_tag")]
    pub schema: String,
    pub nodes: Vec<Node>,
    pub segments: Vec<Segment>,
    pub chargers: Vec<ChargerSite>,
    pub trucks: Vec<Truck>,
    pub demands: Vec<Demand>,
    pub horizon: u32,
    pub trips: u32,
    pub labor_cost: f64,
    #[serde(default)]
    pub trip_parity: TripParity,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, serde_json::Value>,
}

impl Instance {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Sorted keys, pretty printed, trailing newline.
    pub fn to_canonical_json(&self) -> Result<String> {
        let value = serde_json::to_value(self)?;
        let mut text = serde_json::to_string_pretty(&value)?;
        text.push('\n');
        Ok(text)
    }

    pub fn node(&self, id: u32) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn validate(&self) -> ValidationReport {
        validate(self)
    }

    pub fn compile(&self) -> Result<Compiled> {
        let report = self.validate();
        if !report.is_pass() {
            return Err(Error::Invalid(report));
        }
        Ok(Compiled::build(self))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_pass(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn mentions(&self, needle: &str) -> bool {
        self.issues.iter().any(|i| i.message.contains(needle))
    }

    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.issues.push(Issue {
            path: path.into(),
            message: message.into(),
        });
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.issues.is_empty() {
            return write!(f, "pass");
        }
        for issue in &self.issues {
            writeln!(f, "{}: {}", issue.path, issue.message)?;
        }
        Ok(())
    }
}

pub fn validate(inst: &Instance) -> ValidationReport {
    let mut rep = ValidationReport::default();
    if inst.schema != SCHEMA {
        rep.push("schema", format!("unsupported schema {:?}", inst.schema));
    }
    if inst.horizon == 0 {
        rep.push("horizon", "horizon must be at least one period");
    }
    if !inst.trips.is_multiple_of(2) {
        rep.push("trips", "trip count must be even");
    }
    if !(inst.labor_cost.is_finite() && inst.labor_cost >= 0.0) {
        rep.push("labor_cost", "labor cost must be finite and non-negative");
    }

    let mut kinds: HashMap<u32, NodeKind> = HashMap::new();
    for (i, n) in inst.nodes.iter().enumerate() {
        if kinds.insert(n.id, n.kind).is_some() {
            rep.push(format!("nodes[{i}].id"), format!("duplicate node id {}", n.id));
        }
    }
    if !inst.nodes.iter().any(|n| n.kind == NodeKind::Depot) {
        rep.push("nodes", "at least one depot is required");
    }
    if !inst.nodes.iter().any(|n| n.kind == NodeKind::Port) {
        rep.push("nodes", "at least one port is required");
    }
    if inst.nodes.len() > 64 {
        rep.push("nodes", "at most 64 nodes are supported");
    }

    let mut pairs = BTreeSet::new();
    for (i, s) in inst.segments.iter().enumerate() {
        let path = format!("segments[{i}]");
        for end in [s.from, s.to] {
            if !kinds.contains_key(&end) {
                rep.push(&path, format!("unknown node {end}"));
            }
        }
        if s.from == s.to {
            rep.push(&path, "segment endpoints must be distinct");
        }
        if !pairs.insert((s.from.min(s.to), s.from.max(s.to))) {
            rep.push(&path, "duplicate segment between the same nodes");
        }
        for (dir, tt) in [("forward", &s.forward), ("backward", s.backward_time())] {
            if let TravelTime::PerPeriod(v) = tt {
                if v.len() != inst.horizon as usize {
                    rep.push(format!("{path}.{dir}"), "per-period travel times must cover the horizon");
                }
            }
            if tt.values().contains(&0) {
                rep.push(format!("{path}.{dir}"), "travel times must be at least one period");
            }
        }
    }

    let mut sites: HashMap<u32, u32> = HashMap::new();
    for (i, c) in inst.chargers.iter().enumerate() {
        let path = format!("chargers[{i}]");
        if !kinds.contains_key(&c.node) {
            rep.push(&path, format!("unknown node {}", c.node));
        }
        if sites.insert(c.node, c.chargers).is_some() {
            rep.push(&path, "duplicate charger site");
        }
        if c.chargers == 0 {
            rep.push(format!("{path}.chargers"), "charger count must be positive");
        }
        let prices = match &c.price {
            Price::Constant(p) => vec![*p],
            Price::PerPeriod(v) => {
                if v.len() != inst.horizon as usize {
                    rep.push(format!("{path}.price"), "per-period prices must cover the horizon");
                }
                v.clone()
            }
        };
        if prices.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            rep.push(format!("{path}.price"), "prices must be finite and non-negative");
        }
    }
    for n in &inst.nodes {
        if n.kind == NodeKind::Port && !sites.contains_key(&n.id) {
            rep.push(format!("nodes[id={}]", n.id), "port must host charger");
        }
        if n.kind == NodeKind::Depot && !sites.contains_key(&n.id) {
            rep.push(format!("nodes[id={}]", n.id), "depot must host charger");
        }
    }

    let adjacency = adjacency_by_id(inst);
    let mut truck_ids = BTreeSet::new();
    for (i, tr) in inst.trucks.iter().enumerate() {
        let path = format!("trucks[{i}]");
        if !truck_ids.insert(tr.id) {
            rep.push(format!("{path}.id"), "duplicate truck id");
        }
        if kinds.get(&tr.home_depot) != Some(&NodeKind::Depot) {
            rep.push(format!("{path}.home_depot"), "home depot must be a depot node");
        }
        if kinds.get(&tr.port) != Some(&NodeKind::Port) {
            rep.push(format!("{path}.port"), "designated port must be a port node");
        }
        let mut rates = vec![tr.charge_rate_bp];
        for r in [&tr.discharge_loaded_bp, &tr.discharge_empty_bp] {
            if let Rate::PerSegment(v) = r {
                if v.len() != inst.segments.len() {
                    rep.push(&path, "per-segment rates must cover every segment");
                }
            }
            rates.extend(r.values());
        }
        if rates.contains(&0) {
            rep.push(&path, "rates must be positive");
        }
        if tr.initial_soc_bp > FULL_SOC_BP {
            rep.push(format!("{path}.initial_soc_bp"), "initial state of charge exceeds full battery");
        }
        if tr.available > inst.horizon {
            rep.push(format!("{path}.available"), "available time beyond horizon");
        }
        if kinds.contains_key(&tr.home_depot)
            && kinds.contains_key(&tr.port)
            && !connected(&adjacency, tr.home_depot, tr.port)
        {
            rep.push(&path, "home depot is not connected to designated port");
        }
    }

    let mut products = BTreeSet::new();
    let mut lanes = BTreeSet::new();
    for (i, d) in inst.demands.iter().enumerate() {
        let path = format!("demands[{i}]");
        if !products.insert(d.product) {
            rep.push(format!("{path}.product"), "duplicate product id");
        }
        let dest = kinds.get(&d.destination).copied();
        let origin = kinds.get(&d.origin).copied();
        match (origin, dest) {
            (Some(NodeKind::Depot), Some(NodeKind::Port)) | (Some(NodeKind::Port), Some(NodeKind::Depot)) => {}
            _ => rep.push(&path, "demand must run between a depot and a port"),
        }
        if !lanes.insert((d.origin, d.destination)) {
            rep.push(&path, "at most one product per origin-destination lane");
        }
        if !(d.tardiness_penalty.is_finite() && d.tardiness_penalty >= 0.0) {
            rep.push(format!("{path}.tardiness_penalty"), "penalty must be finite and non-negative");
        }
        let eligible = inst
            .trucks
            .iter()
            .filter(|t| lane_matches(t, d, dest))
            .count() as u64;
        if u64::from(d.quantity) > eligible * u64::from(inst.trips / 2) {
            rep.push(
                format!("{path}.quantity"),
                "demand exceeds eligible trucks times round trips",
            );
        }
    }

    if rep.is_pass() && inst.demands.iter().any(|d| d.quantity > 0) {
        let min = minimum_horizon(inst);
        if inst.horizon < min {
            rep.push("horizon", format!("horizon shorter than the minimum round trip ({min})"));
        }
    }
    rep
}

fn lane_matches(truck: &Truck, demand: &Demand, dest_kind: Option<NodeKind>) -> bool {
    match dest_kind {
        Some(NodeKind::Port) => truck.home_depot == demand.origin && truck.port == demand.destination,
        Some(NodeKind::Depot) => truck.port == demand.origin && truck.home_depot == demand.destination,
        _ => false,
    }
}

fn adjacency_by_id(inst: &Instance) -> BTreeMap<u32, Vec<(u32, u32, u32)>> {
    // node -> (neighbor, max travel time, min travel time)
    let mut adj: BTreeMap<u32, Vec<(u32, u32, u32)>> = BTreeMap::new();
    for s in &inst.segments {
        adj.entry(s.from)
            .or_default()
            .push((s.to, s.forward.max(), s.forward.min()));
        let back = s.backward_time();
        adj.entry(s.to).or_default().push((s.from, back.max(), back.min()));
    }
    adj
}

fn connected(adj: &BTreeMap<u32, Vec<(u32, u32, u32)>>, a: u32, b: u32) -> bool {
    let mut seen = BTreeSet::from([a]);
    let mut stack = vec![a];
    while let Some(n) = stack.pop() {
        if n == b {
            return true;
        }
        for &(m, _, _) in adj.get(&n).into_iter().flatten() {
            if seen.insert(m) {
                stack.push(m);
            }
        }
    }
    false
}

fn longest_simple_path(adj: &BTreeMap<u32, Vec<(u32, u32, u32)>>, from: u32, to: u32) -> Option<u32> {
    fn dfs(
        adj: &BTreeMap<u32, Vec<(u32, u32, u32)>>,
        at: u32,
        to: u32,
        visited: &mut BTreeSet<u32>,
        length: u32,
        best: &mut Option<u32>,
    ) {
        if at == to {
            *best = Some(best.map_or(length, |b| b.max(length)));
            return;
        }
        for &(next, t, _) in adj.get(&at).into_iter().flatten() {
            if visited.insert(next) {
                dfs(adj, next, to, visited, length + t, best);
                visited.remove(&next);
            }
        }
    }
    let mut best = None;
    let mut visited = BTreeSet::from([from]);
    dfs(adj, from, to, &mut visited, 0, &mut best);
    best
}

fn shortest_path(adj: &BTreeMap<u32, Vec<(u32, u32, u32)>>, from: u32, to: u32) -> Option<u32> {
    let mut dist: BTreeMap<u32, u32> = BTreeMap::from([(from, 0)]);
    let mut frontier = BTreeSet::from([(0u32, from)]);
    while let Some((d, n)) = frontier.pop_first() {
        if n == to {
            return Some(d);
        }
        if dist.get(&n).is_some_and(|&best| best < d) {
            continue;
        }
        for &(m, _, tmin) in adj.get(&n).into_iter().flatten() {
            let nd = d + tmin;
            if dist.get(&m).is_none_or(|&old| nd < old) {
                dist.insert(m, nd);
                frontier.insert((nd, m));
            }
        }
    }
    None
}

/// Shortest depot-port-depot round trip over all designated pairs; a horizon
/// below this cannot deliver anything.
pub fn minimum_horizon(inst: &Instance) -> u32 {
    let adj = adjacency_by_id(inst);
    inst.trucks
        .iter()
        .filter_map(|t| {
            let out = shortest_path(&adj, t.home_depot, t.port)?;
            let back = shortest_path(&adj, t.port, t.home_depot)?;
            // arrival at the port ends a period; departure back starts the next
            Some(out + back)
        })
        .min()
        .unwrap_or(0)
}

/// Twice the number of round trips needed to cover the largest demand with
/// the whole fleet.
pub fn derive_trip_count(max_demand: u32, fleet_size: u32) -> Result<u32> {
    if fleet_size == 0 {
        return Err(Error::EmptyFleet);
    }
    Ok(2 * max_demand.div_ceil(fleet_size))
}

pub fn derive_trip_count_for(inst: &Instance) -> Result<u32> {
    let max = inst.demands.iter().map(|d| d.quantity).max().unwrap_or(0);
    derive_trip_count(max, inst.trucks.len() as u32)
}

/// Longest loop-free depot/port path duration (either direction, over all
/// designated pairs) times the trip count, plus a cushion.
pub fn derive_horizon(inst: &Instance, trips: u32, cushion: u32) -> Result<u32> {
    let adj = adjacency_by_id(inst);
    let mut pairs: BTreeSet<(u32, u32)> = inst.trucks.iter().map(|t| (t.home_depot, t.port)).collect();
    if pairs.is_empty() {
        for d in inst.nodes.iter().filter(|n| n.kind == NodeKind::Depot) {
            for p in inst.nodes.iter().filter(|n| n.kind == NodeKind::Port) {
                pairs.insert((d.id, p.id));
            }
        }
    }
    let mut longest = 0;
    for (d, p) in pairs {
        let out = longest_simple_path(&adj, d, p).ok_or(Error::Disconnected(d, p))?;
        let back = longest_simple_path(&adj, p, d).ok_or(Error::Disconnected(p, d))?;
        longest = longest.max(out).max(back);
    }
    Ok(longest * trips + cushion)
}

/// Trucks whose depot/port pair serves the product's lane.
pub fn eligible_trucks(inst: &Instance, product: u32) -> Result<BTreeSet<u32>> {
    let demand = inst
        .demands
        .iter()
        .find(|d| d.product == product)
        .ok_or(Error::UnknownProduct(product))?;
    let kind = inst.node(demand.destination).map(|n| n.kind);
    Ok(inst
        .trucks
        .iter()
        .filter(|t| lane_matches(t, demand, kind))
        .map(|t| t.id)
        .collect())
}

/// Directed arc derived from a segment.
#[derive(Debug, Clone)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
    pub segment: usize,
    /// Travel time indexed by departure period (index 0 = period 1).
    pub times: Vec<u32>,
}

impl Arc {
    pub fn time(&self, depart: u32) -> u32 {
        self.times[(depart - 1) as usize]
    }

    /// Arrival period, or `None` when the arc would end past the horizon.
    pub fn arrival(&self, depart: u32, horizon: u32) -> Option<u32> {
        let a = depart + self.time(depart) - 1;
        (a <= horizon).then_some(a)
    }
}

#[derive(Debug, Clone)]
pub struct Charger {
    pub capacity: u32,
    /// Index 0 = period 1.
    pub prices: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Depot to port.
    Export,
    /// Port to depot.
    Import,
}

#[derive(Debug, Clone)]
pub struct Product {
    pub id: u32,
    pub origin: usize,
    pub destination: usize,
    pub direction: Direction,
    pub quantity: u32,
    pub due: u32,
    pub penalty: f64,
    pub eligible: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct CompiledTruck {
    pub id: u32,
    pub depot: usize,
    pub port: usize,
    pub available: u32,
    pub charge_rate: u32,
    pub discharge_loaded: Vec<u32>,
    pub discharge_empty: Vec<u32>,
    pub initial_soc: u32,
    pub export_product: Option<usize>,
    pub import_product: Option<usize>,
}

impl CompiledTruck {
    pub fn discharge(&self, segment: usize, loaded: bool) -> u32 {
        if loaded {
            self.discharge_loaded[segment]
        } else {
            self.discharge_empty[segment]
        }
    }
}

/// Index-based view of a validated instance used by every algorithm.
#[derive(Debug, Clone)]
pub struct Compiled {
    pub instance: Instance,
    pub node_ids: Vec<u32>,
    pub kinds: Vec<NodeKind>,
    pub arcs: Vec<Arc>,
    pub out_arcs: Vec<Vec<usize>>,
    pub in_arcs: Vec<Vec<usize>>,
    pub chargers: Vec<Option<Charger>>,
    /// Node indices hosting chargers, in node order.
    pub charger_nodes: Vec<usize>,
    pub trucks: Vec<CompiledTruck>,
    pub products: Vec<Product>,
    /// Products delivered to ports, then products delivered to depots.
    pub port_products: Vec<usize>,
    pub depot_products: Vec<usize>,
    pub horizon: u32,
    pub trips: usize,
    pub labor_cost: f64,
    pub parity: TripParity,
}

impl Compiled {
    fn build(inst: &Instance) -> Self {
        let node_ids: Vec<u32> = inst.nodes.iter().map(|n| n.id).collect();
        let index: HashMap<u32, usize> = node_ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let n = node_ids.len();
        let horizon = inst.horizon;
        let expand = |tt: &TravelTime| (1..=horizon).map(|p| tt.at(p)).collect::<Vec<_>>();
        let mut arcs = Vec::new();
        for (si, s) in inst.segments.iter().enumerate() {
            arcs.push(Arc {
                from: index[&s.from],
                to: index[&s.to],
                segment: si,
                times: expand(&s.forward),
            });
            arcs.push(Arc {
                from: index[&s.to],
                to: index[&s.from],
                segment: si,
                times: expand(s.backward_time()),
            });
        }
        let mut out_arcs = vec![Vec::new(); n];
        let mut in_arcs = vec![Vec::new(); n];
        for (ai, a) in arcs.iter().enumerate() {
            out_arcs[a.from].push(ai);
            in_arcs[a.to].push(ai);
        }
        for list in out_arcs.iter_mut() {
            list.sort_by_key(|&a| arcs[a].to);
        }
        for list in in_arcs.iter_mut() {
            list.sort_by_key(|&a| arcs[a].from);
        }
        let mut chargers = vec![None; n];
        for c in &inst.chargers {
            chargers[index[&c.node]] = Some(Charger {
                capacity: c.chargers,
                prices: (1..=horizon).map(|p| c.price.at(p)).collect(),
            });
        }
        let charger_nodes = (0..n).filter(|&i| chargers[i].is_some()).collect();
        let kinds: Vec<NodeKind> = inst.nodes.iter().map(|n| n.kind).collect();

        let mut products = Vec::new();
        for d in &inst.demands {
            let destination = index[&d.destination];
            let origin = index[&d.origin];
            let direction = if kinds[destination] == NodeKind::Port {
                Direction::Export
            } else {
                Direction::Import
            };
            let eligible = inst
                .trucks
                .iter()
                .enumerate()
                .filter(|(_, t)| lane_matches(t, d, Some(kinds[destination])))
                .map(|(i, _)| i)
                .collect();
            products.push(Product {
                id: d.product,
                origin,
                destination,
                direction,
                quantity: d.quantity,
                due: d.due,
                penalty: d.tardiness_penalty,
                eligible,
            });
        }
        let port_products: Vec<usize> =
            (0..products.len()).filter(|&i| products[i].direction == Direction::Export).collect();
        let depot_products: Vec<usize> =
            (0..products.len()).filter(|&i| products[i].direction == Direction::Import).collect();

        let nseg = inst.segments.len();
        let trucks = inst
            .trucks
            .iter()
            .enumerate()
            .map(|(ti, t)| {
                let find = |dir: Direction| {
                    products
                        .iter()
                        .position(|p| p.direction == dir && p.eligible.contains(&ti))
                };
                CompiledTruck {
                    id: t.id,
                    depot: index[&t.home_depot],
                    port: index[&t.port],
                    available: t.available,
                    charge_rate: t.charge_rate_bp,
                    discharge_loaded: (0..nseg).map(|s| t.discharge_loaded_bp.on(s)).collect(),
                    discharge_empty: (0..nseg).map(|s| t.discharge_empty_bp.on(s)).collect(),
                    initial_soc: t.initial_soc_bp,
                    export_product: find(Direction::Export),
                    import_product: find(Direction::Import),
                }
            })
            .collect();

        Compiled {
            instance: inst.clone(),
            node_ids,
            kinds,
            arcs,
            out_arcs,
            in_arcs,
            chargers,
            charger_nodes,
            trucks,
            products,
            port_products,
            depot_products,
            horizon,
            trips: inst.trips as usize,
            labor_cost: inst.labor_cost,
            parity: inst.trip_parity,
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_ids.len()
    }

    pub fn is_outbound(&self, trip: usize) -> bool {
        self.parity.is_outbound(trip)
    }

    /// Start node of a trip for a truck.
    pub fn trip_start(&self, truck: usize, trip: usize) -> usize {
        let t = &self.trucks[truck];
        if self.is_outbound(trip) {
            t.depot
        } else {
            t.port
        }
    }

    pub fn trip_end(&self, truck: usize, trip: usize) -> usize {
        let t = &self.trucks[truck];
        if self.is_outbound(trip) {
            t.port
        } else {
            t.depot
        }
    }

    /// Product carried when the truck is loaded on this trip.
    pub fn trip_product(&self, truck: usize, trip: usize) -> Option<usize> {
        let t = &self.trucks[truck];
        if self.is_outbound(trip) {
            t.export_product
        } else {
            t.import_product
        }
    }

    pub fn charger_price(&self, node: usize, period: u32) -> f64 {
        self.chargers[node]
            .as_ref()
            .map_or(0.0, |c| c.prices[(period - 1) as usize])
    }

    pub fn capacity(&self, node: usize) -> u32 {
        self.chargers[node].as_ref().map_or(0, |c| c.capacity)
    }

    pub fn is_charger(&self, node: usize) -> bool {
        self.chargers[node].is_some()
    }

    /// Position of a charger node within `charger_nodes`.
    pub fn charger_slot(&self, node: usize) -> Option<usize> {
        self.charger_nodes.iter().position(|&c| c == node)
    }

    /// Length of the multiplier / violation vector.
    pub fn dual_dim(&self) -> usize {
        self.port_products.len() + self.depot_products.len() + self.charger_nodes.len() * self.horizon as usize
    }

    /// Index of a product's demand component.
    pub fn demand_index(&self, product: usize) -> usize {
        if let Some(i) = self.port_products.iter().position(|&p| p == product) {
            i
        } else {
            self.port_products.len()
                + self
                    .depot_products
                    .iter()
                    .position(|&p| p == product)
                    .expect("product is registered")
        }
    }

    pub fn capacity_offset(&self) -> usize {
        self.port_products.len() + self.depot_products.len()
    }

    /// Index of the capacity component for a charger node and 1-based period.
    pub fn capacity_index(&self, charger_slot: usize, period: u32) -> usize {
        self.capacity_offset() + charger_slot * self.horizon as usize + (period - 1) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{line_instance, two_node_instance};

    #[test]
    fn trip_count_examples() {
        assert_eq!(derive_trip_count(18, 10).unwrap(), 4);
        assert_eq!(derive_trip_count(0, 5).unwrap(), 0);
        assert_eq!(derive_trip_count(7, 3).unwrap(), 6);
        assert!(matches!(derive_trip_count(3, 0), Err(Error::EmptyFleet)));
    }

    #[test]
    fn horizon_examples() {
        // 3-node line, both segments take 2 periods
        let inst = line_instance(&[2, 2], 2, 9);
        assert_eq!(derive_horizon(&inst, 2, 1).unwrap(), 9);
        assert_eq!(derive_horizon(&inst, 0, 1).unwrap(), 1);
    }

    #[test]
    fn horizon_disconnected_pair() {
        let mut inst = two_node_instance(1, 10);
        inst.segments.clear();
        assert!(matches!(derive_horizon(&inst, 2, 0), Err(Error::Disconnected(..))));
    }

    #[test]
    fn validation_flags_missing_port_charger() {
        let mut inst = two_node_instance(1, 10);
        assert!(inst.validate().is_pass(), "{}", inst.validate());
        inst.chargers.retain(|c| c.node != 2);
        let rep = inst.validate();
        assert!(rep.mentions("port must host charger"), "{rep}");
    }

    #[test]
    fn validation_flags_zero_rate() {
        let mut inst = two_node_instance(1, 10);
        inst.trucks[0].discharge_loaded_bp = Rate::Uniform(0);
        assert!(inst.validate().mentions("rates must be positive"));
    }

    #[test]
    fn validation_flags_excess_demand() {
        let mut inst = two_node_instance(1, 10);
        inst.demands[0].quantity = 2;
        assert!(inst.validate().mentions("demand exceeds"));
    }

    #[test]
    fn eligible_truck_sets() {
        let mut inst = two_node_instance(1, 10);
        inst.nodes.push(Node { id: 3, kind: NodeKind::Depot });
        inst.segments.push(Segment {
            from: 3,
            to: 2,
            forward: TravelTime::Constant(1),
            backward: None,
        });
        inst.chargers.push(ChargerSite {
            node: 3,
            chargers: 1,
            price: Price::Constant(1.0),
        });
        let mut t2 = inst.trucks[0].clone();
        t2.id = 2;
        let mut t3 = inst.trucks[0].clone();
        t3.id = 3;
        t3.home_depot = 3;
        inst.trucks.push(t2);
        inst.trucks.push(t3);
        assert!(inst.validate().is_pass(), "{}", inst.validate());
        let export = inst.demands[0].product;
        assert_eq!(eligible_trucks(&inst, export).unwrap(), BTreeSet::from([1, 2]));
        assert!(matches!(eligible_trucks(&inst, 99), Err(Error::UnknownProduct(99))));
    }

    #[test]
    fn canonical_json_round_trip() {
        let inst = line_instance(&[2, 3], 2, 12);
        let text = inst.to_canonical_json().unwrap();
        let back = Instance::from_json(&text).unwrap();
        assert_eq!(back, inst);
        assert_eq!(back.to_canonical_json().unwrap(), text);
        assert_eq!(back.validate(), inst.validate());
    }

    #[test]
    fn scalar_travel_time_shorthand() {
        let seg: Segment = serde_json::from_str(r#"{"from":1,"to":2,"forward":3,"backward":[1,2]}"#).unwrap();
        assert_eq!(seg.forward.at(7), 3);
        assert_eq!(seg.backward_time().at(2), 2);
    }
}
