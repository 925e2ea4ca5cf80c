#![allow(dead_code)]

use jrc::gen::{contended_detour_instance, random_tiny, TinyLimits};
use jrc::lpfeas::{is_feasible, linearize_window, window_is_feasible, LinearSystem};
use jrc::model::{build_model, evaluate, Assignment, VariableCatalog};
use jrc::schedule::TruckSchedule;
use jrc::subproblem::enumerate_schedules;
use jrc::verify::verify;
use jrc::Compiled;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TINY: TinyLimits = TinyLimits {
    max_trucks: 2,
    max_nodes: 5,
    max_periods: 20,
    max_travel: 2,
};

pub const SMALL: TinyLimits = TinyLimits {
    max_trucks: 2,
    max_nodes: 4,
    max_periods: 14,
    max_travel: 2,
};

#[derive(Debug, Default)]
pub struct FuzzTally {
    pub cases: usize,
    pub feasible: usize,
    pub disagreements: usize,
}

/// Random fleet built from enumerated schedules, then a few column edits.
fn fuzzed(c: &Compiled, cat: &VariableCatalog, pools: &[Vec<TruckSchedule>], rng: &mut ChaCha8Rng) -> Assignment {
    let pick: Vec<_> = pools.iter().map(|p| p[rng.gen_range(0..p.len())].clone()).collect();
    let mut x = Assignment::from_schedules(c, cat, &pick).unwrap();
    if rng.gen_bool(0.35) {
        return x;
    }
    for _ in 0..rng.gen_range(1..=3) {
        let col = rng.gen_range(0..cat.len());
        let (lo, hi) = cat.bounds(col);
        x.values[col] = match rng.gen_range(0..10) {
            0..=5 => x.values[col] + if rng.gen_bool(0.5) { 1 } else { -1 },
            6..=8 => rng.gen_range(lo..=hi),
            _ => {
                if rng.gen_bool(0.5) {
                    hi + 1
                } else {
                    lo - 1
                }
            }
        };
    }
    x
}

/// `per_instance` fuzzed assignments on each of nine random tiny instances
/// and the contended detour instance, checked by both verifiers.
pub fn verifier_fuzz(per_instance: usize, seed: u64) -> FuzzTally {
    let lim = TinyLimits {
        max_periods: 12,
        ..SMALL
    };
    let mut instances: Vec<Compiled> = (1..=9).map(|s| random_tiny(s, lim).compile().unwrap()).collect();
    instances.push(contended_detour_instance().compile().unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = FuzzTally::default();
    for c in &instances {
        let model = build_model(c, true);
        let pools: Vec<Vec<TruckSchedule>> = (0..c.trucks.len())
            .map(|v| {
                enumerate_schedules(c, v, 1_000_000)
                    .expect("tiny enumeration")
                    .into_iter()
                    .map(|t| t.schedule)
                    .collect()
            })
            .collect();
        for _ in 0..per_instance {
            let x = fuzzed(c, &model.catalog, &pools, &mut rng);
            let linear = evaluate(&model, &x).unwrap().feasible;
            let logical = verify(c, &x, true).unwrap().feasible;
            tally.cases += 1;
            tally.feasible += usize::from(logical);
            tally.disagreements += usize::from(linear != logical);
        }
    }
    tally
}

const GRID_BOX: f64 = 10.0;
const MARGIN: i64 = 1;

fn rat(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

/// Window rows with every right-hand side moved by `shift`, optionally
/// intersected with the box `|Λ_j| ≤ bound`.
fn shifted(window: &[Vec<f64>], shift: i64, bound: Option<f64>) -> LinearSystem<BigRational> {
    let exact: Vec<Vec<BigRational>> = window.iter().map(|w| w.iter().map(|&x| rat(x)).collect()).collect();
    let mut sys = linearize_window(&exact).unwrap();
    for (_, b) in sys.rows.iter_mut() {
        *b = b.clone() + BigRational::from_integer(shift.into());
    }
    if let Some(bound) = bound {
        for j in 0..sys.dim {
            for sign in [1, -1] {
                let mut a = vec![BigRational::from_integer(0.into()); sys.dim];
                a[j] = BigRational::from_integer(sign.into());
                sys.rows.push((a, rat(bound)));
            }
        }
    }
    sys
}

/// Whether the verdict is robust: feasible with unit slack inside a shrunk
/// box, or infeasible even with every row loosened by one.
fn decidable(window: &[Vec<f64>]) -> bool {
    let tight = is_feasible(&shifted(window, -MARGIN, Some(GRID_BOX - 1.0))).is_feasible();
    let loose = is_feasible(&shifted(window, MARGIN, None)).is_feasible();
    tight == loose
}

fn holds(window: &[Vec<f64>], p: &[f64]) -> bool {
    let dist = |w: &[f64]| p.iter().zip(w).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    window.windows(2).all(|pair| dist(&pair[1]) <= dist(&pair[0]))
}

/// Exhaustive grid search of the original quadratic inequalities.
pub fn grid_feasible(window: &[Vec<f64>]) -> bool {
    let d = window[0].len();
    let step = if d == 1 { 0.01 } else { 0.05 };
    let n = (2.0 * GRID_BOX / step).round() as i64;
    let coord = |i: i64| -GRID_BOX + i as f64 * step;
    match d {
        1 => (0..=n).any(|i| holds(window, &[coord(i)])),
        2 => (0..=n).any(|i| (0..=n).any(|j| holds(window, &[coord(i), coord(j)]))),
        _ => unreachable!("grid oracle covers one and two dimensions"),
    }
}

fn random_window(rng: &mut ChaCha8Rng, d: usize) -> Vec<Vec<f64>> {
    let len = rng.gen_range(3..=5);
    let half = |rng: &mut ChaCha8Rng| f64::from(rng.gen_range(-8i32..=8)) / 2.0;
    if rng.gen_bool(0.5) {
        (0..len).map(|_| (0..d).map(|_| half(rng)).collect()).collect()
    } else {
        // steps shrinking toward a common target
        let target: Vec<f64> = (0..d).map(|_| half(rng)).collect();
        let mut p: Vec<f64> = (0..d).map(|_| half(rng)).collect();
        let mut out = vec![p.clone()];
        for _ in 1..len {
            p = p.iter().zip(&target).map(|(x, t)| x + (t - x) / 2.0).collect();
            out.push(p.clone());
        }
        out
    }
}

#[derive(Debug, Default)]
pub struct GridTally {
    pub windows: usize,
    pub feasible: usize,
    pub disagreements: usize,
    pub exact_disagreements: usize,
}

/// `count` robustly decidable random windows, half one-dimensional and half
/// two-dimensional, compared against the grid oracle.
pub fn grid_agreement(count: usize, seed: u64) -> GridTally {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = GridTally::default();
    while tally.windows < count {
        let d = if tally.windows < count / 2 { 1 } else { 2 };
        let window = random_window(&mut rng, d);
        if !decidable(&window) {
            continue;
        }
        let grid = grid_feasible(&window);
        let lp = window_is_feasible(&window);
        let exact: Vec<Vec<BigRational>> = window.iter().map(|w| w.iter().map(|&x| rat(x)).collect()).collect();
        tally.windows += 1;
        tally.feasible += usize::from(grid);
        tally.disagreements += usize::from(lp != grid);
        tally.exact_disagreements += usize::from(window_is_feasible(&exact) != grid);
    }
    tally
}
