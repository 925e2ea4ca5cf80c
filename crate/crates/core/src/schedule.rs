//! Compact per-truck schedules and their derived quantities.
//!
//! A schedule lists the trips a truck takes (always a prefix of `1..=T`),
//! each as a sequence of driving legs plus contiguous charging blocks.
//! Everything else in the variable catalog (times, SOC, unloading, ...) is
//! derived from it by [`crate::model::Assignment::from_schedules`].

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Compiled, FULL_SOC_BP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Leg {
    pub arc: usize,
    pub depart: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChargeBlock {
    pub node: usize,
    pub start: u32,
    pub periods: u32,
}

impl ChargeBlock {
    pub fn end(&self) -> u32 {
        self.start + self.periods - 1
    }

    pub fn occupied(&self) -> impl Iterator<Item = u32> {
        self.start..self.start + self.periods
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Trip {
    pub loaded: bool,
    pub legs: Vec<Leg>,
    pub charges: Vec<ChargeBlock>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct TruckSchedule {
    pub trips: Vec<Trip>,
}

/// What a truck contributes to the coupling constraints.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Footprint {
    /// Loaded trips counted per product index.
    pub loads: Vec<(usize, u32)>,
    /// Occupied (node, period) charger slots.
    pub charging: Vec<(usize, u32)>,
    /// Latest unloading start per product index.
    pub latest_unload: Vec<(usize, u32)>,
}

impl TruckSchedule {
    pub fn idle() -> Self {
        Self::default()
    }

    pub fn is_idle(&self) -> bool {
        self.trips.is_empty()
    }

    pub fn first_departure(&self) -> Option<u32> {
        self.trips.first().and_then(|t| t.legs.first()).map(|l| l.depart)
    }

    fn arrival(c: &Compiled, leg: &Leg) -> u32 {
        let arc = &c.arcs[leg.arc];
        leg.depart + arc.time(leg.depart) - 1
    }

    /// Arrival period at the end of a trip.
    pub fn trip_arrival(c: &Compiled, trip: &Trip) -> Option<u32> {
        trip.legs.last().map(|l| Self::arrival(c, l))
    }

    /// Latest arrival at the truck's home depot.
    pub fn last_depot_arrival(&self, c: &Compiled, truck: usize) -> Option<u32> {
        let depot = c.trucks[truck].depot;
        self.trips
            .iter()
            .filter_map(|t| {
                let last = t.legs.last()?;
                (c.arcs[last.arc].to == depot).then(|| Self::arrival(c, last))
            })
            .max()
    }

    pub fn labor(&self, c: &Compiled, truck: usize) -> f64 {
        match (self.first_departure(), self.last_depot_arrival(c, truck)) {
            (Some(d), Some(a)) => c.labor_cost * (f64::from(a) - f64::from(d)),
            _ => 0.0,
        }
    }

    pub fn charging_cost(&self, c: &Compiled) -> f64 {
        self.trips
            .iter()
            .flat_map(|t| t.charges.iter())
            .flat_map(|b| b.occupied().map(move |p| c.charger_price(b.node, p)))
            .sum()
    }

    /// Labor plus charging cost of this truck alone.
    pub fn own_cost(&self, c: &Compiled, truck: usize) -> f64 {
        self.labor(c, truck) + self.charging_cost(c)
    }

    pub fn footprint(&self, c: &Compiled, truck: usize) -> Footprint {
        let mut fp = Footprint::default();
        for (ti, trip) in self.trips.iter().enumerate() {
            if trip.loaded {
                if let Some(pr) = c.trip_product(truck, ti) {
                    match fp.loads.iter_mut().find(|(p, _)| *p == pr) {
                        Some(entry) => entry.1 += 1,
                        None => fp.loads.push((pr, 1)),
                    }
                    let at = Self::trip_arrival(c, trip).unwrap_or(0);
                    match fp.latest_unload.iter_mut().find(|(p, _)| *p == pr) {
                        Some(entry) => entry.1 = entry.1.max(at),
                        None => fp.latest_unload.push((pr, at)),
                    }
                }
            }
            for b in &trip.charges {
                fp.charging.extend(b.occupied().map(|p| (b.node, p)));
            }
        }
        fp.charging.sort_unstable();
        fp
    }

    pub fn charging_slots(&self) -> BTreeSet<(usize, u32)> {
        self.trips
            .iter()
            .flat_map(|t| t.charges.iter())
            .flat_map(|b| b.occupied().map(move |p| (b.node, p)))
            .collect()
    }

    /// SOC at each node visited, per trip, in visiting order (start node first).
    /// Returns `None` when the battery would run below zero on some leg.
    pub fn soc_trace(&self, c: &Compiled, truck: usize) -> Option<Vec<Vec<(usize, u32)>>> {
        let tr = &c.trucks[truck];
        let mut soc = tr.initial_soc;
        let mut out = Vec::with_capacity(self.trips.len());
        for (ti, trip) in self.trips.iter().enumerate() {
            let mut visits = vec![(c.trip_start(truck, ti), soc)];
            for leg in &trip.legs {
                let arc = &c.arcs[leg.arc];
                let drop = tr.discharge(arc.segment, trip.loaded) * arc.time(leg.depart);
                soc = soc.checked_sub(drop)?;
                let gained: u32 = trip
                    .charges
                    .iter()
                    .filter(|b| b.node == arc.to)
                    .map(|b| b.periods * tr.charge_rate)
                    .sum();
                soc = (soc + gained).min(FULL_SOC_BP);
                visits.push((arc.to, soc));
            }
            out.push(visits);
        }
        Some(out)
    }
}

/// Serialized schedule form: node ids instead of indices, 1-based trips implied
/// by order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LegRecord {
    pub from: u32,
    pub to: u32,
    pub depart: u32,
    pub arrive: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChargeRecord {
    pub node: u32,
    pub start: u32,
    pub periods: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripRecord {
    pub loaded: bool,
    pub legs: Vec<LegRecord>,
    #[serde(default)]
    pub charges: Vec<ChargeRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruckRecord {
    pub truck: u32,
    pub trips: Vec<TripRecord>,
}

pub fn to_records(c: &Compiled, schedules: &[TruckSchedule]) -> Vec<TruckRecord> {
    schedules
        .iter()
        .enumerate()
        .map(|(v, s)| TruckRecord {
            truck: c.trucks[v].id,
            trips: s
                .trips
                .iter()
                .map(|t| TripRecord {
                    loaded: t.loaded,
                    legs: t
                        .legs
                        .iter()
                        .map(|l| {
                            let arc = &c.arcs[l.arc];
                            LegRecord {
                                from: c.node_ids[arc.from],
                                to: c.node_ids[arc.to],
                                depart: l.depart,
                                arrive: l.depart + arc.time(l.depart) - 1,
                            }
                        })
                        .collect(),
                    charges: t
                        .charges
                        .iter()
                        .map(|b| ChargeRecord {
                            node: c.node_ids[b.node],
                            start: b.start,
                            periods: b.periods,
                        })
                        .collect(),
                })
                .collect(),
        })
        .collect()
}

pub fn from_records(c: &Compiled, records: &[TruckRecord]) -> Result<Vec<TruckSchedule>> {
    let node = |id: u32| {
        c.node_ids
            .iter()
            .position(|&n| n == id)
            .ok_or_else(|| Error::MalformedSolution(format!("unknown node {id}")))
    };
    let mut out = vec![TruckSchedule::idle(); c.trucks.len()];
    let mut seen = BTreeSet::new();
    for rec in records {
        let v = c
            .trucks
            .iter()
            .position(|t| t.id == rec.truck)
            .ok_or_else(|| Error::MalformedSolution(format!("unknown truck {}", rec.truck)))?;
        if !seen.insert(v) {
            return Err(Error::MalformedSolution(format!("truck {} listed twice", rec.truck)));
        }
        let mut trips = Vec::new();
        for t in &rec.trips {
            let mut legs = Vec::new();
            for l in &t.legs {
                let (from, to) = (node(l.from)?, node(l.to)?);
                let arc = c.out_arcs[from]
                    .iter()
                    .copied()
                    .find(|&a| c.arcs[a].to == to)
                    .ok_or_else(|| Error::MalformedSolution(format!("no segment {} -> {}", l.from, l.to)))?;
                if l.depart == 0 || l.depart > c.horizon {
                    return Err(Error::MalformedSolution(format!("departure {} outside horizon", l.depart)));
                }
                legs.push(Leg { arc, depart: l.depart });
            }
            let mut charges = Vec::new();
            for b in &t.charges {
                if b.periods == 0 || b.start == 0 || b.start + b.periods - 1 > c.horizon {
                    return Err(Error::MalformedSolution("charge block outside horizon".into()));
                }
                charges.push(ChargeBlock {
                    node: node(b.node)?,
                    start: b.start,
                    periods: b.periods,
                });
            }
            trips.push(Trip {
                loaded: t.loaded,
                legs,
                charges,
            });
        }
        if trips.len() > c.trips {
            return Err(Error::MalformedSolution(format!("truck {} takes too many trips", rec.truck)));
        }
        out[v] = TruckSchedule { trips };
    }
    Ok(out)
}
