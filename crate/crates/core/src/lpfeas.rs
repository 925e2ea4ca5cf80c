//! Feasibility of the multiplier-divergence system.
//!
//! A window `Λ⁰, Λ¹, …` asks whether some point `Λ` is approached
//! non-increasingly by every consecutive step,
//! `‖Λ − Λⁱ⁺¹‖² ≤ ‖Λ − Λⁱ‖²`. The quadratic terms cancel, leaving the
//! half-space `2(Λⁱ − Λⁱ⁺¹)·Λ ≤ ‖Λⁱ‖² − ‖Λⁱ⁺¹‖²`. Feasibility of the
//! resulting system is decided by phase 1 of a dense simplex with Bland's
//! rule.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Rows `a·Λ ≤ b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem<F> {
    pub dim: usize,
    pub rows: Vec<(Vec<F>, F)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict<F> {
    Feasible(Vec<F>),
    Infeasible,
}

impl<F> Verdict<F> {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Verdict::Feasible(_))
    }
}

fn dot<F: Scalar>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).fold(F::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

/// One half-space per consecutive pair of the window.
pub fn linearize_window<F: Scalar>(window: &[Vec<F>]) -> Result<LinearSystem<F>> {
    if window.len() < 2 {
        return Err(Error::ShortWindow(window.len()));
    }
    let dim = window[0].len();
    if let Some(bad) = window.iter().find(|w| w.len() != dim) {
        return Err(Error::Dimension {
            expected: dim,
            got: bad.len(),
        });
    }
    let two = F::one() + F::one();
    let rows = window
        .windows(2)
        .map(|pair| {
            let (from, to) = (&pair[0], &pair[1]);
            let coef = from
                .iter()
                .zip(to)
                .map(|(a, b)| two.clone() * (a.clone() - b.clone()))
                .collect();
            (coef, dot(from, from) - dot(to, to))
        })
        .collect();
    Ok(LinearSystem { dim, rows })
}

/// Check the original quadratic inequalities at `point`.
pub fn window_holds<F: Scalar>(window: &[Vec<F>], point: &[F]) -> bool {
    let dist = |w: &[F]| {
        let d: Vec<F> = point.iter().zip(w).map(|(p, x)| p.clone() - x.clone()).collect();
        dot(&d, &d)
    };
    // relative slack for floats; exact for rationals
    window.windows(2).all(|pair| {
        let (near, far) = (dist(&pair[1]), dist(&pair[0]));
        let scale = F::one() + Scalar::max_of(near.abs(), far.abs());
        !(near - far - F::tolerance() * scale).is_positive_tol()
    })
}

/// Phase-1 simplex on `a·(x⁺ − x⁻) + s = b`, artificials on rows with
/// negative right-hand side.
pub fn is_feasible<F: Scalar>(system: &LinearSystem<F>) -> Verdict<F> {
    let d = system.dim;
    let mut rows: Vec<(Vec<F>, F)> = Vec::new();
    for (a, b) in &system.rows {
        let scale = a.iter().fold(F::zero(), |m, x| Scalar::max_of(m, x.abs()));
        if scale.is_zero_tol() {
            if b.is_negative_tol() {
                return Verdict::Infeasible;
            }
            continue;
        }
        // normalize so the tolerance means the same thing on every row
        let (a, b) = if F::is_exact() {
            (a.clone(), b.clone())
        } else {
            (a.iter().map(|x| x.clone() / scale.clone()).collect(), b.clone() / scale.clone())
        };
        rows.push((a, b));
    }
    if rows.is_empty() {
        return Verdict::Feasible(vec![F::zero(); d]);
    }

    let m = rows.len();
    let negatives: Vec<usize> = (0..m).filter(|&i| rows[i].1 < F::zero()).collect();
    let n_struct = 2 * d;
    let n_slack = m;
    let n_cols = n_struct + n_slack + negatives.len();
    let mut tab: Vec<Vec<F>> = Vec::with_capacity(m);
    let mut basis = vec![0usize; m];
    let mut art = 0;
    for (i, (a, b)) in rows.iter().enumerate() {
        let mut r = vec![F::zero(); n_cols + 1];
        for j in 0..d {
            r[j] = a[j].clone();
            r[d + j] = -a[j].clone();
        }
        r[n_struct + i] = F::one();
        r[n_cols] = b.clone();
        if *b < F::zero() {
            for x in r.iter_mut() {
                *x = -x.clone();
            }
            let col = n_struct + n_slack + art;
            r[col] = F::one();
            basis[i] = col;
            art += 1;
        } else {
            basis[i] = n_struct + i;
        }
        tab.push(r);
    }
    let is_art = |j: usize| j >= n_struct + n_slack;

    // reduced costs of the phase-1 objective Σ artificials
    let mut obj = vec![F::zero(); n_cols + 1];
    for j in (n_struct + n_slack)..n_cols {
        obj[j] = F::one();
    }
    for i in 0..m {
        if is_art(basis[i]) {
            for j in 0..=n_cols {
                obj[j] = obj[j].clone() - tab[i][j].clone();
            }
        }
    }

    loop {
        // Bland: lowest-index improving column
        let Some(enter) = (0..n_cols).find(|&j| obj[j].is_negative_tol()) else { break };
        let mut leave: Option<(usize, F)> = None;
        for i in 0..m {
            if tab[i][enter].is_positive_tol() {
                let ratio = tab[i][n_cols].clone() / tab[i][enter].clone();
                let better = match &leave {
                    None => true,
                    Some((li, best)) => {
                        let diff = ratio.clone() - best.clone();
                        diff.is_negative_tol() || (diff.is_zero_tol() && basis[i] < basis[*li])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        // phase 1 is bounded below by zero, so a pivot row always exists
        let Some((r, _)) = leave else { break };
        let piv = tab[r][enter].clone();
        for x in tab[r].iter_mut() {
            *x = x.clone() / piv.clone();
        }
        let pivot_row = tab[r].clone();
        for (i, row) in tab.iter_mut().enumerate() {
            if i != r && !row[enter].is_zero() {
                let f = row[enter].clone();
                for j in 0..=n_cols {
                    row[j] = row[j].clone() - f.clone() * pivot_row[j].clone();
                }
            }
        }
        if !obj[enter].is_zero() {
            let f = obj[enter].clone();
            for j in 0..=n_cols {
                obj[j] = obj[j].clone() - f.clone() * pivot_row[j].clone();
            }
        }
        basis[r] = enter;
    }

    // objective value is -obj[rhs]
    let infeasibility = -obj[n_cols].clone();
    if infeasibility.is_positive_tol() {
        return Verdict::Infeasible;
    }
    let mut x = vec![F::zero(); d];
    for i in 0..m {
        let j = basis[i];
        if j < d {
            x[j] = x[j].clone() + tab[i][n_cols].clone();
        } else if j < n_struct {
            x[j - d] = x[j - d].clone() - tab[i][n_cols].clone();
        }
    }
    Verdict::Feasible(x)
}

/// Whether the window's divergence system admits a point.
pub fn window_is_feasible<F: Scalar>(window: &[Vec<F>]) -> bool {
    if window.len() < 2 {
        return true;
    }
    linearize_window(window).map(|s| is_feasible(&s).is_feasible()).unwrap_or(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn one_dim_pair_gives_lower_bound() {
        let sys = linearize_window(&[vec![0.0], vec![2.0]]).unwrap();
        assert_eq!(sys.rows, vec![(vec![-4.0], -4.0)]);
    }

    #[test]
    fn identical_points_are_vacuous() {
        let sys = linearize_window(&[vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap();
        assert_eq!(sys.rows, vec![(vec![0.0, 0.0], 0.0)]);
        assert!(is_feasible(&sys).is_feasible());
    }

    #[test]
    fn two_dim_pair() {
        let sys = linearize_window(&[vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(sys.rows, vec![(vec![-2.0, -2.0], -2.0)]);
    }

    #[test]
    fn short_window_is_an_error() {
        assert!(linearize_window::<f64>(&[vec![0.0]]).is_err());
        assert!(linearize_window::<f64>(&[]).is_err());
    }

    #[test]
    fn disjoint_interval_is_infeasible() {
        // Λ ≥ 1 and Λ ≤ 0.5
        let sys = LinearSystem {
            dim: 1,
            rows: vec![(vec![-1.0], -1.0), (vec![1.0], 0.5)],
        };
        assert_eq!(is_feasible(&sys), Verdict::Infeasible);
        assert!(!window_is_feasible(&[vec![0.0], vec![2.0], vec![-1.0]]));
        assert!(!window_is_feasible(&[vec![q(0, 1)], vec![q(2, 1)], vec![q(-1, 1)]]));
    }

    #[test]
    fn touching_interval_has_witness() {
        let sys = LinearSystem {
            dim: 1,
            rows: vec![(vec![q(-1, 1)], q(-1, 2)), (vec![q(1, 1)], q(1, 2))],
        };
        assert_eq!(is_feasible(&sys), Verdict::Feasible(vec![q(1, 2)]));
        assert!(window_is_feasible(&[vec![0.0], vec![1.0]]));
    }

    #[test]
    fn empty_system_is_feasible_at_origin() {
        let sys: LinearSystem<f64> = LinearSystem { dim: 3, rows: vec![] };
        assert_eq!(is_feasible(&sys), Verdict::Feasible(vec![0.0; 3]));
    }

    #[test]
    fn witness_satisfies_quadratics() {
        let window = vec![vec![0.0, 0.0], vec![1.0, 0.5], vec![1.5, 1.0], vec![1.7, 1.6]];
        let Verdict::Feasible(w) = is_feasible(&linearize_window(&window).unwrap()) else {
            panic!("converging window must be feasible")
        };
        assert!(window_holds(&window, &w));
    }

    #[test]
    fn f32_agrees_on_small_cases() {
        assert!(!window_is_feasible(&[vec![0.0f32], vec![2.0], vec![-1.0]]));
        assert!(window_is_feasible(&[vec![0.0f32], vec![1.0]]));
    }
}
