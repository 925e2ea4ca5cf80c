use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::catalog::VariableCatalog;
use crate::instance::{Compiled, FULL_SOC_BP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Row {
    pub tag: &'static str,
    pub terms: Vec<(usize, i64)>,
    pub sense: Sense,
    pub rhs: i64,
    pub big_m: Option<i64>,
}

impl Row {
    pub fn activity(&self, values: &[i64]) -> i64 {
        self.terms.iter().map(|&(c, a)| a * values[c]).sum()
    }

    /// Amount by which the row is violated (0 when satisfied).
    pub fn residual(&self, values: &[i64]) -> i64 {
        let lhs = self.activity(values);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0),
            Sense::Ge => (self.rhs - lhs).max(0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// Linearized constraint system over the variable catalog.
#[derive(Debug, Clone)]
pub struct CanonicalModel {
    pub catalog: VariableCatalog,
    pub rows: Vec<Row>,
    /// Linear objective (labor written as `C·ā − C·d₁`, exact for idle trucks
    /// whenever `ā` is at its minimum).
    pub objective: Vec<(usize, f64)>,
}

impl CanonicalModel {
    /// `(row index, M)` for every big-M row.
    pub fn big_m_registry(&self) -> Vec<(usize, i64)> {
        self.rows
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.big_m.map(|m| (i, m)))
            .collect()
    }

    pub fn count_by_tag(&self) -> BTreeMap<&'static str, usize> {
        let mut out = BTreeMap::new();
        for r in &self.rows {
            *out.entry(r.tag).or_insert(0) += 1;
        }
        out
    }

    pub fn rows_tagged<'a>(&'a self, tag: &'a str) -> impl Iterator<Item = &'a Row> + 'a {
        self.rows.iter().filter(move |r| r.tag == tag)
    }
}

struct Builder {
    rows: Vec<Row>,
}

impl Builder {
    fn push(&mut self, tag: &'static str, terms: Vec<(usize, i64)>, sense: Sense, rhs: i64, big_m: Option<i64>) {
        let mut merged: BTreeMap<usize, i64> = BTreeMap::new();
        for (c, a) in terms {
            *merged.entry(c).or_insert(0) += a;
        }
        let terms = merged.into_iter().filter(|&(_, a)| a != 0).collect();
        self.rows.push(Row {
            tag,
            terms,
            sense,
            rhs,
            big_m,
        });
    }
}

/// Assemble the linearized trip-wise system. Coupling rows (demand and
/// charger capacity) are appended only when `with_coupling` is set.
pub fn build_model(c: &Compiled, with_coupling: bool) -> CanonicalModel {
    let cat = VariableCatalog::new(c);
    let mut b = Builder { rows: Vec::new() };
    let p_max = c.horizon;
    let big_t = i64::from(p_max) + 1;
    let n_nodes = c.node_count();
    let full = i64::from(FULL_SOC_BP);
    let periods = || 1..=p_max;

    for (v, tr) in c.trucks.iter().enumerate() {
        let s0 = c.trip_start(v, 0);
        if c.trips > 0 {
            b.push(
                "eq1-bigM",
                vec![(cat.depart_time(v, s0, 0), 1), (cat.trip(v, 0), -big_t)],
                Sense::Ge,
                i64::from(tr.available) - big_t,
                Some(big_t),
            );
            b.push("soc-init", vec![(cat.soc(v, s0, 0), 1)], Sense::Eq, i64::from(tr.initial_soc), None);
        }

        for t in 0..c.trips {
            for p in periods() {
                let row = |f: &dyn Fn(usize) -> usize, n: usize| (0..n).map(|i| (f(i), 1)).collect::<Vec<_>>();
                b.push("eq3-dep", row(&|n| cat.depart(v, n, t, p), n_nodes), Sense::Le, 1, None);
                b.push("eq3-arr", row(&|n| cat.arrive(v, n, t, p), n_nodes), Sense::Le, 1, None);
                let k = c.charger_nodes.len();
                b.push("eq3-bgn", row(&|s| cat.charge_begin(v, s, t, p), k), Sense::Le, 1, None);
                b.push("eq3-cmplt", row(&|s| cat.charge_complete(v, s, t, p), k), Sense::Le, 1, None);
            }
            for n in 0..n_nodes {
                let ones = |f: &dyn Fn(u32) -> usize| periods().map(|p| (f(p), 1)).collect::<Vec<_>>();
                let timed = |f: &dyn Fn(u32) -> usize, var: usize| {
                    let mut v: Vec<_> = periods().map(|p| (f(p), i64::from(p))).collect();
                    v.push((var, -1));
                    v
                };
                b.push("eq4-dep", ones(&|p| cat.depart(v, n, t, p)), Sense::Le, 1, None);
                b.push("eq4-arr", ones(&|p| cat.arrive(v, n, t, p)), Sense::Le, 1, None);
                b.push("eq5-dep", timed(&|p| cat.depart(v, n, t, p), cat.depart_time(v, n, t)), Sense::Eq, 0, None);
                b.push("eq5-arr", timed(&|p| cat.arrive(v, n, t, p), cat.arrive_time(v, n, t)), Sense::Eq, 0, None);
            }
            for k in 0..c.charger_nodes.len() {
                let ones = |f: &dyn Fn(u32) -> usize| periods().map(|p| (f(p), 1)).collect::<Vec<_>>();
                let timed = |f: &dyn Fn(u32) -> usize, var: usize| {
                    let mut v: Vec<_> = periods().map(|p| (f(p), i64::from(p))).collect();
                    v.push((var, -1));
                    v
                };
                b.push("eq4-bgn", ones(&|p| cat.charge_begin(v, k, t, p)), Sense::Le, 1, None);
                b.push("eq4-cmplt", ones(&|p| cat.charge_complete(v, k, t, p)), Sense::Le, 1, None);
                b.push("eq5-bgn", timed(&|p| cat.charge_begin(v, k, t, p), cat.begin_time(v, k, t)), Sense::Eq, 0, None);
                b.push(
                    "eq5-cmplt",
                    timed(&|p| cat.charge_complete(v, k, t, p), cat.complete_time(v, k, t)),
                    Sense::Eq,
                    0,
                    None,
                );
            }

            // departure => arrival at the far end of exactly one outgoing arc
            for n in 0..n_nodes {
                for p in periods() {
                    let terms: Vec<(usize, i64)> = c.out_arcs[n]
                        .iter()
                        .filter_map(|&a| {
                            let arc = &c.arcs[a];
                            arc.arrival(p, p_max).map(|q| (cat.arrive(v, arc.to, t, q), 1))
                        })
                        .collect();
                    let m = (terms.len() as i64).max(1);
                    let x = cat.depart(v, n, t, p);
                    implication_eq(&mut b, "eq6-bigM", terms, x, m);
                }
            }
            // arrival => matching departure from exactly one incoming arc
            for n in 0..n_nodes {
                for p in periods() {
                    let mut terms = Vec::new();
                    for &a in &c.in_arcs[n] {
                        let arc = &c.arcs[a];
                        for pd in 1..=p {
                            if arc.arrival(pd, p_max) == Some(p) {
                                terms.push((cat.depart(v, arc.from, t, pd), 1));
                            }
                        }
                    }
                    let m = (terms.len() as i64).max(1);
                    let x = cat.arrive(v, n, t, p);
                    implication_eq(&mut b, "eq7-bigM", terms, x, m);
                }
            }
            // arrival at an intermediate node => a later departure from it
            for n in (0..n_nodes).filter(|&n| n != tr.depot && n != tr.port) {
                for p in periods() {
                    let terms: Vec<(usize, i64)> = (p + 1..=p_max).map(|q| (cat.depart(v, n, t, q), 1)).collect();
                    let m = (terms.len() as i64).max(1);
                    implication_eq(&mut b, "eq8-bigM", terms, cat.arrive(v, n, t, p), m);
                }
            }

            // state of charge along each arc
            for arc in &c.arcs {
                let slot = c.charger_slot(arc.to);
                for p in periods() {
                    let Some(q) = arc.arrival(p, p_max) else { continue };
                    let (x_dep, x_arr, x_ld) = (cat.depart(v, arc.from, t, p), cat.arrive(v, arc.to, t, q), cat.load(v, t));
                    let (s_src, s_dst) = (cat.soc(v, arc.from, t), cat.soc(v, arc.to, t));
                    let charge: Vec<(usize, i64)> = match slot {
                        Some(k) => periods()
                            .map(|pp| (cat.charge(v, k, t, pp), -i64::from(tr.charge_rate)))
                            .collect(),
                        None => Vec::new(),
                    };
                    for loaded in [true, false] {
                        let drop = i64::from(tr.discharge(arc.segment, loaded)) * i64::from(arc.time(p));
                        let m = full + drop;
                        // condition slack = m*(2 - dep - arr) + m*(1 - ld) (loaded) or + m*ld (empty)
                        let (ld_coef, base) = if loaded { (m, 3 * m) } else { (-m, 2 * m) };
                        let (tag_le, tag_ge, tag_arr) = match (loaded, slot.is_some()) {
                            (true, false) => ("eq9-bigM-le", "eq9-bigM-ge", "soc-arrival-loaded"),
                            (true, true) => ("eq11-bigM-le", "eq11-bigM-ge", "soc-arrival-loaded"),
                            (false, false) => ("eq10-bigM-le", "eq10-bigM-ge", "soc-arrival-empty"),
                            (false, true) => ("eq11-empty-bigM-le", "eq11-empty-bigM-ge", "soc-arrival-empty"),
                        };
                        let mut le = vec![(s_dst, 1), (s_src, -1), (x_dep, m), (x_arr, m), (x_ld, ld_coef)];
                        le.extend(charge.iter().copied());
                        b.push(tag_le, le, Sense::Le, base - drop, Some(m));
                        b.push(
                            tag_ge,
                            vec![(s_dst, 1), (s_src, -1), (x_dep, -m), (x_arr, -m), (x_ld, -ld_coef)],
                            Sense::Ge,
                            -base - drop,
                            Some(m),
                        );
                        b.push(
                            tag_arr,
                            vec![(s_src, 1), (x_dep, -m), (x_arr, -m), (x_ld, -ld_coef)],
                            Sense::Ge,
                            drop - base,
                            Some(m),
                        );
                    }
                }
            }

            for (k, &n) in c.charger_nodes.iter().enumerate() {
                for p in periods() {
                    let x = cat.charge(v, k, t, p);
                    let mut arrived: Vec<(usize, i64)> = (1..p).map(|q| (cat.arrive(v, n, t, q), 1)).collect();
                    arrived.push((x, -1));
                    b.push("eq12", arrived, Sense::Ge, 0, None);
                    let mut departed: Vec<(usize, i64)> = (1..=p).map(|q| (cat.depart(v, n, t, q), 1)).collect();
                    departed.push((x, 1));
                    b.push("eq13", departed, Sense::Le, 1, None);
                    let mut begin = vec![(cat.charge_begin(v, k, t, p), 1), (x, -1)];
                    if p > 1 {
                        begin.push((cat.charge(v, k, t, p - 1), 1));
                    }
                    b.push("eq14", begin, Sense::Ge, 0, None);
                    let complete = if p < p_max {
                        vec![(cat.charge_complete(v, k, t, p), 1), (x, -1), (cat.charge(v, k, t, p + 1), 1)]
                    } else {
                        vec![(cat.charge_complete(v, k, t, p), 1), (x, -1)]
                    };
                    b.push("eq15", complete, Sense::Ge, 0, None);
                }
            }

            let end = c.trip_end(v, t);
            let start = c.trip_start(v, t);
            if c.trip_product(v, t).is_some() {
                let (u, a, ld) = (cat.unload(v, t), cat.arrive_time(v, end, t), cat.load(v, t));
                b.push("eq16-bigM-le", vec![(u, 1), (a, -1), (ld, big_t)], Sense::Le, big_t, Some(big_t));
                b.push("eq16-bigM-ge", vec![(u, 1), (a, -1), (ld, -big_t)], Sense::Ge, -big_t, Some(big_t));
            } else {
                b.push("ld-requires-product", vec![(cat.load(v, t), 1)], Sense::Le, 0, None);
            }

            if t + 1 < c.trips {
                let k = c.charger_slot(end).expect("trip ends host chargers");
                let d_next = cat.depart_time(v, end, t + 1);
                let a_now = cat.arrive_time(v, end, t);
                let c_now = cat.complete_time(v, k, t);
                let charged: Vec<(usize, i64)> = periods().map(|p| (cat.charge(v, k, t, p), big_t)).collect();
                let completed: Vec<(usize, i64)> =
                    periods().map(|p| (cat.charge_complete(v, k, t, p), -big_t)).collect();
                let conditions: &[(usize, &'static str, &'static str)] = if end == tr.port {
                    &[(t + 1, "eq17-bigM", "eq18-bigM"), (t, "eq19-bigM", "eq20-bigM")]
                } else {
                    &[(t + 1, "eq17-bigM", "eq18-bigM")]
                };
                for &(trip_idx, tag_a, tag_c) in conditions {
                    let trip_var = cat.trip(v, trip_idx);
                    let mut no_charge = vec![(d_next, 1), (a_now, -1), (trip_var, -big_t)];
                    no_charge.extend(charged.iter().copied());
                    b.push(tag_a, no_charge, Sense::Ge, 1 - big_t, Some(big_t));
                    let mut with_charge = vec![(d_next, 1), (c_now, -1), (trip_var, -big_t)];
                    with_charge.extend(completed.iter().copied());
                    b.push(tag_c, with_charge, Sense::Ge, 1 - 2 * big_t, Some(big_t));
                }
                let (s_now, s_next) = (cat.soc(v, end, t), cat.soc(v, end, t + 1));
                let carry: &[(usize, &'static str, &'static str)] = if end == tr.port {
                    &[(t + 1, "eq21-bigM-le", "eq21-bigM-ge"), (t, "eq22-bigM-le", "eq22-bigM-ge")]
                } else {
                    &[(t + 1, "eq21-bigM-le", "eq21-bigM-ge")]
                };
                for &(trip_idx, le, ge) in carry {
                    let trip_var = cat.trip(v, trip_idx);
                    b.push(le, vec![(s_next, 1), (s_now, -1), (trip_var, full)], Sense::Le, full, Some(full));
                    b.push(ge, vec![(s_next, 1), (s_now, -1), (trip_var, -full)], Sense::Ge, -full, Some(full));
                }
                b.push("eq24", vec![(cat.trip(v, t + 1), 1), (cat.trip(v, t), -1)], Sense::Le, 0, None);
            } else if end == tr.port {
                b.push("eq19-horizon", vec![(cat.trip(v, t), 1)], Sense::Le, 0, None);
            }

            b.push("eq23", vec![(cat.load(v, t), 1), (cat.trip(v, t), -1)], Sense::Le, 0, None);
            if let Some(pr) = c.trip_product(v, t) {
                b.push(
                    "eq28",
                    vec![(cat.latest_unload(pr), 1), (cat.unload(v, t), -1)],
                    Sense::Ge,
                    0,
                    None,
                );
            }
            b.push(
                "eq31",
                vec![(cat.latest_arrival(v), 1), (cat.arrive_time(v, tr.depot, t), -1)],
                Sense::Ge,
                0,
                None,
            );

            let trip_var = cat.trip(v, t);
            let mut starts: Vec<(usize, i64)> = periods().map(|p| (cat.depart(v, start, t, p), 1)).collect();
            starts.push((trip_var, -1));
            b.push("link-trip-start", starts, Sense::Eq, 0, None);
            let mut ends: Vec<(usize, i64)> = periods().map(|p| (cat.arrive(v, end, t, p), 1)).collect();
            ends.push((trip_var, -1));
            b.push("link-trip-end", ends, Sense::Eq, 0, None);
            b.push(
                "link-no-return",
                periods().map(|p| (cat.arrive(v, start, t, p), 1)).collect(),
                Sense::Le,
                0,
                None,
            );
            b.push(
                "link-no-depart-end",
                periods().map(|p| (cat.depart(v, end, t, p), 1)).collect(),
                Sense::Le,
                0,
                None,
            );
            let mut any: Vec<(usize, i64)> = (0..n_nodes)
                .flat_map(|n| periods().map(move |p| (n, p)))
                .map(|(n, p)| (cat.depart(v, n, t, p), 1))
                .collect();
            any.push((trip_var, -(n_nodes as i64)));
            b.push("link-trip-idle", any, Sense::Le, 0, None);
        }
    }

    for (pr, prod) in c.products.iter().enumerate() {
        b.push(
            "eq29",
            vec![(cat.tardiness(pr), 1), (cat.latest_unload(pr), -1)],
            Sense::Ge,
            -i64::from(prod.due),
            None,
        );
    }

    if with_coupling {
        b.rows.extend(coupling_rows(c, &cat));
    }

    let mut objective = Vec::new();
    for v in 0..c.trucks.len() {
        if c.trips > 0 {
            objective.push((cat.latest_arrival(v), c.labor_cost));
            objective.push((cat.depart_time(v, c.trip_start(v, 0), 0), -c.labor_cost));
        }
        for t in 0..c.trips {
            for (k, &n) in c.charger_nodes.iter().enumerate() {
                for p in 1..=p_max {
                    objective.push((cat.charge(v, k, t, p), c.charger_price(n, p)));
                }
            }
        }
    }
    for (pr, prod) in c.products.iter().enumerate() {
        objective.push((cat.tardiness(pr), prod.penalty));
    }

    CanonicalModel {
        catalog: cat,
        rows: b.rows,
        objective,
    }
}

/// Demand satisfaction and charger capacity rows.
pub fn coupling_rows(c: &Compiled, cat: &VariableCatalog) -> Vec<Row> {
    let mut b = Builder { rows: Vec::new() };
    for (pr, prod) in c.products.iter().enumerate() {
        let mut terms = Vec::new();
        for &v in &prod.eligible {
            for t in 0..c.trips {
                if c.trip_product(v, t) == Some(pr) {
                    terms.push((cat.load(v, t), 1));
                }
            }
        }
        let tag = match prod.direction {
            crate::instance::Direction::Export => "eq25",
            crate::instance::Direction::Import => "eq26",
        };
        b.push(tag, terms, Sense::Eq, i64::from(prod.quantity), None);
    }
    for (k, &n) in c.charger_nodes.iter().enumerate() {
        for p in 1..=c.horizon {
            let terms = (0..c.trucks.len())
                .flat_map(|v| (0..c.trips).map(move |t| (v, t)))
                .map(|(v, t)| (cat.charge(v, k, t, p), 1))
                .collect();
            b.push("eq27", terms, Sense::Le, i64::from(c.capacity(n)), None);
        }
    }
    b.rows
}

/// `x = 1 ⇒ Σ terms = 1` as the ≤/≥ big-M pair.
fn implication_eq(b: &mut Builder, tag: &'static str, terms: Vec<(usize, i64)>, x: usize, m: i64) {
    let (tag_le, tag_ge) = match tag {
        "eq6-bigM" => ("eq6-bigM-le", "eq6-bigM-ge"),
        "eq7-bigM" => ("eq7-bigM-le", "eq7-bigM-ge"),
        _ => ("eq8-bigM-le", "eq8-bigM-ge"),
    };
    let mut le = terms.clone();
    le.push((x, m));
    b.push(tag_le, le, Sense::Le, 1 + m, Some(m));
    let mut ge = terms;
    ge.push((x, -m));
    b.push(tag_ge, ge, Sense::Ge, 1 - m, Some(m));
}
