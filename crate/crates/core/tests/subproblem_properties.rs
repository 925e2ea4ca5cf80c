use jrc::coordinator::Multipliers;
use jrc::gen::{random_tiny, TinyLimits};
use jrc::model::{Assignment, Usage, VariableCatalog};
use jrc::schedule::TruckSchedule;
use jrc::subproblem::{
    enumerate_schedules, price_schedule, solve_exact, solve_exact_with, solve_surrogate, Pricing, PricingMode,
    SearchOptions, SolveFlag,
};
use jrc::verify::verify;
use jrc::Compiled;

const TOL: f64 = 1e-9;

/// Fifty (instance, truck, prices) toys.
fn toys() -> Vec<(Compiled, usize, Pricing)> {
    let lim = TinyLimits {
        max_trucks: 2,
        max_nodes: 4,
        max_periods: 14,
        max_travel: 2,
    };
    let mut out = Vec::new();
    let mut seed = 100;
    while out.len() < 50 {
        let c = random_tiny(seed, lim).compile().unwrap();
        let lambda = Multipliers::uniform(&c, seed, -8.0, 8.0).values;
        let mode = if seed % 2 == 0 { PricingMode::Surrogate } else { PricingMode::Dual };
        for v in 0..c.trucks.len() {
            if out.len() < 50 {
                let p = Pricing::for_truck(&c, v, &lambda, 1.5, &Usage::empty(&c), mode);
                out.push((c.clone(), v, p));
            }
        }
        seed += 1;
    }
    out
}

#[test]
fn dominance_pruning_keeps_the_optimum() {
    for (i, (c, v, p)) in toys().iter().enumerate() {
        let on = solve_exact_with(c, *v, p, SearchOptions { dominance: true });
        let off = solve_exact_with(c, *v, p, SearchOptions { dominance: false });
        assert!((on.value - off.value).abs() < TOL, "toy {i}: {} vs {}", on.value, off.value);
        assert!(on.labels <= off.labels, "toy {i}");
    }
}

#[test]
fn exact_value_is_the_enumerated_minimum() {
    for (i, (c, v, p)) in toys().iter().enumerate() {
        let exact = solve_exact(c, *v, p);
        assert_eq!(exact.flag, SolveFlag::ExactOptimal);
        let pool = enumerate_schedules(c, *v, 2_000_000).expect("tiny enumeration");
        let min = pool
            .iter()
            .map(|t| price_schedule(c, *v, &t.schedule, p))
            .fold(f64::INFINITY, f64::min);
        assert!(exact.value <= min + TOL, "toy {i}: exact {} above enumeration {min}", exact.value);
        assert!(exact.value >= min - TOL, "toy {i}: exact {} below every schedule {min}", exact.value);
        assert!((price_schedule(c, *v, &exact.schedule, p) - exact.value).abs() < TOL, "toy {i}");
    }
}

#[test]
fn returned_schedules_are_trip_feasible() {
    for (i, (c, v, p)) in toys().iter().enumerate() {
        let sol = solve_exact(c, *v, p);
        let mut fleet = vec![TruckSchedule::idle(); c.trucks.len()];
        fleet[*v] = sol.schedule;
        let x = Assignment::from_schedules(c, &VariableCatalog::new(c), &fleet).unwrap();
        let report = verify(c, &x, false).unwrap();
        assert!(report.feasible, "toy {i}: {:?}", report.violations);
    }
}

#[test]
fn surrogate_answers_beat_the_incumbent() {
    for (i, (c, v, p)) in toys().iter().enumerate() {
        let idle = TruckSchedule::idle();
        let incumbent_value = price_schedule(c, *v, &idle, p);
        let sol = solve_surrogate(c, *v, p, Some(&idle));
        let exact = solve_exact(c, *v, p);
        match sol.flag {
            SolveFlag::Improved => assert!(sol.value < incumbent_value - 1e-12, "toy {i}"),
            SolveFlag::ExactOptimal => assert!((sol.value - exact.value).abs() < TOL, "toy {i}"),
        }
        assert!(sol.value >= exact.value - TOL, "toy {i}");
    }
}

#[test]
fn enumerated_schedules_never_shadow_another_arc() {
    // seed 1 has arc 1→3 as long as 1→2→3, so a tight 1→2→3 run would read
    // as a second traversal of 1→3
    let lim = TinyLimits {
        max_trucks: 2,
        max_nodes: 5,
        max_periods: 20,
        max_travel: 2,
    };
    for seed in [1, 3, 4] {
        let c = random_tiny(seed, lim).compile().unwrap();
        let cat = VariableCatalog::new(&c);
        for v in 0..c.trucks.len() {
            for t in enumerate_schedules(&c, v, 2_000_000).expect("tiny enumeration") {
                let mut fleet = vec![TruckSchedule::idle(); c.trucks.len()];
                fleet[v] = t.schedule;
                let x = Assignment::from_schedules(&c, &cat, &fleet).unwrap();
                let report = verify(&c, &x, false).unwrap();
                assert!(report.feasible, "seed {seed} truck {v}: {:?}", report.violations);
            }
        }
    }
}
