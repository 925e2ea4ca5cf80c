use serde::{Deserialize, Serialize};

use crate::instance::{Compiled, FULL_SOC_BP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    Depart,
    Arrive,
    Charge,
    ChargeBegin,
    ChargeComplete,
    Trip,
    Load,
    DepartTime,
    ArriveTime,
    Soc,
    BeginTime,
    CompleteTime,
    Unload,
    LatestArrival,
    LatestUnload,
    Tardiness,
}

impl Family {
    pub const ALL: [Family; 16] = [
        Family::Depart,
        Family::Arrive,
        Family::Charge,
        Family::ChargeBegin,
        Family::ChargeComplete,
        Family::Trip,
        Family::Load,
        Family::DepartTime,
        Family::ArriveTime,
        Family::Soc,
        Family::BeginTime,
        Family::CompleteTime,
        Family::Unload,
        Family::LatestArrival,
        Family::LatestUnload,
        Family::Tardiness,
    ];

    pub fn is_binary(self) -> bool {
        matches!(
            self,
            Family::Depart
                | Family::Arrive
                | Family::Charge
                | Family::ChargeBegin
                | Family::ChargeComplete
                | Family::Trip
                | Family::Load
        )
    }

    pub fn short(self) -> &'static str {
        match self {
            Family::Depart => "xdep",
            Family::Arrive => "xarr",
            Family::Charge => "xchg",
            Family::ChargeBegin => "xbgn",
            Family::ChargeComplete => "xcmp",
            Family::Trip => "xtrip",
            Family::Load => "xld",
            Family::DepartTime => "d",
            Family::ArriveTime => "a",
            Family::Soc => "s",
            Family::BeginTime => "b",
            Family::CompleteTime => "c",
            Family::Unload => "u",
            Family::LatestArrival => "abar",
            Family::LatestUnload => "ubar",
            Family::Tardiness => "tard",
        }
    }
}

/// Dense column layout for every decision variable family.
///
/// Index order inside a family is truck, node (or charger slot), trip, period.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableCatalog {
    pub trucks: usize,
    pub nodes: usize,
    pub charger_slots: usize,
    pub periods: usize,
    pub trips: usize,
    pub products: usize,
    offsets: [usize; 17],
}

impl VariableCatalog {
    pub fn new(c: &Compiled) -> Self {
        let (v, n, k, p, t, r) = (
            c.trucks.len(),
            c.node_count(),
            c.charger_nodes.len(),
            c.horizon as usize,
            c.trips,
            c.products.len(),
        );
        let sizes = [
            v * n * t * p,
            v * n * t * p,
            v * k * t * p,
            v * k * t * p,
            v * k * t * p,
            v * t,
            v * t,
            v * n * t,
            v * n * t,
            v * n * t,
            v * k * t,
            v * k * t,
            v * t,
            v,
            r,
            r,
        ];
        let mut offsets = [0; 17];
        for (i, s) in sizes.iter().enumerate() {
            offsets[i + 1] = offsets[i] + s;
        }
        VariableCatalog {
            trucks: v,
            nodes: n,
            charger_slots: k,
            periods: p,
            trips: t,
            products: r,
            offsets,
        }
    }

    pub fn len(&self) -> usize {
        self.offsets[16]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn base(&self, f: Family) -> usize {
        self.offsets[f as usize]
    }

    pub fn family_range(&self, f: Family) -> std::ops::Range<usize> {
        self.offsets[f as usize]..self.offsets[f as usize + 1]
    }

    pub fn family_of(&self, column: usize) -> Family {
        let i = self.offsets.partition_point(|&o| o <= column) - 1;
        Family::ALL[i]
    }

    /// Inclusive value bounds of a column.
    pub fn bounds(&self, column: usize) -> (i64, i64) {
        match self.family_of(column) {
            f if f.is_binary() => (0, 1),
            Family::Soc => (0, i64::from(FULL_SOC_BP)),
            _ => (0, self.periods as i64),
        }
    }

    fn vntp(&self, f: Family, v: usize, n: usize, t: usize, p: u32) -> usize {
        debug_assert!(p >= 1 && p as usize <= self.periods);
        self.base(f) + ((v * self.nodes + n) * self.trips + t) * self.periods + (p as usize - 1)
    }

    fn vktp(&self, f: Family, v: usize, k: usize, t: usize, p: u32) -> usize {
        debug_assert!(p >= 1 && p as usize <= self.periods);
        self.base(f) + ((v * self.charger_slots + k) * self.trips + t) * self.periods + (p as usize - 1)
    }

    pub fn depart(&self, v: usize, n: usize, t: usize, p: u32) -> usize {
        self.vntp(Family::Depart, v, n, t, p)
    }

    pub fn arrive(&self, v: usize, n: usize, t: usize, p: u32) -> usize {
        self.vntp(Family::Arrive, v, n, t, p)
    }

    pub fn charge(&self, v: usize, k: usize, t: usize, p: u32) -> usize {
        self.vktp(Family::Charge, v, k, t, p)
    }

    pub fn charge_begin(&self, v: usize, k: usize, t: usize, p: u32) -> usize {
        self.vktp(Family::ChargeBegin, v, k, t, p)
    }

    pub fn charge_complete(&self, v: usize, k: usize, t: usize, p: u32) -> usize {
        self.vktp(Family::ChargeComplete, v, k, t, p)
    }

    pub fn trip(&self, v: usize, t: usize) -> usize {
        self.base(Family::Trip) + v * self.trips + t
    }

    pub fn load(&self, v: usize, t: usize) -> usize {
        self.base(Family::Load) + v * self.trips + t
    }

    pub fn depart_time(&self, v: usize, n: usize, t: usize) -> usize {
        self.base(Family::DepartTime) + (v * self.nodes + n) * self.trips + t
    }

    pub fn arrive_time(&self, v: usize, n: usize, t: usize) -> usize {
        self.base(Family::ArriveTime) + (v * self.nodes + n) * self.trips + t
    }

    pub fn soc(&self, v: usize, n: usize, t: usize) -> usize {
        self.base(Family::Soc) + (v * self.nodes + n) * self.trips + t
    }

    pub fn begin_time(&self, v: usize, k: usize, t: usize) -> usize {
        self.base(Family::BeginTime) + (v * self.charger_slots + k) * self.trips + t
    }

    pub fn complete_time(&self, v: usize, k: usize, t: usize) -> usize {
        self.base(Family::CompleteTime) + (v * self.charger_slots + k) * self.trips + t
    }

    pub fn unload(&self, v: usize, t: usize) -> usize {
        self.base(Family::Unload) + v * self.trips + t
    }

    pub fn latest_arrival(&self, v: usize) -> usize {
        self.base(Family::LatestArrival) + v
    }

    pub fn latest_unload(&self, pr: usize) -> usize {
        self.base(Family::LatestUnload) + pr
    }

    pub fn tardiness(&self, pr: usize) -> usize {
        self.base(Family::Tardiness) + pr
    }

    /// Human readable column name, used by the MPS export.
    pub fn name(&self, column: usize) -> String {
        let f = self.family_of(column);
        let off = column - self.base(f);
        let (n, k, t, p) = (self.nodes, self.charger_slots, self.trips, self.periods);
        let s = f.short();
        match f {
            Family::Depart | Family::Arrive => {
                let (rest, pp) = (off / p, off % p);
                let (rest, tt) = (rest / t, rest % t);
                format!("{s}_{}_{}_{}_{}", rest / n, rest % n, tt + 1, pp + 1)
            }
            Family::Charge | Family::ChargeBegin | Family::ChargeComplete => {
                let (rest, pp) = (off / p, off % p);
                let (rest, tt) = (rest / t, rest % t);
                format!("{s}_{}_{}_{}_{}", rest / k, rest % k, tt + 1, pp + 1)
            }
            Family::DepartTime | Family::ArriveTime | Family::Soc => {
                let (rest, tt) = (off / t, off % t);
                format!("{s}_{}_{}_{}", rest / n, rest % n, tt + 1)
            }
            Family::BeginTime | Family::CompleteTime => {
                let (rest, tt) = (off / t, off % t);
                format!("{s}_{}_{}_{}", rest / k, rest % k, tt + 1)
            }
            Family::Trip | Family::Load | Family::Unload => format!("{s}_{}_{}", off / t, off % t + 1),
            Family::LatestArrival | Family::LatestUnload | Family::Tardiness => format!("{s}_{off}"),
        }
    }
}
