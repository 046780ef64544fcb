//! Exact rational feasibility LP.
//!
//! Decides `{ x ≥ 0 : A x = b }` with a dense phase-one simplex over
//! [`BigRational`], using Bland's rule so that degenerate pivots cannot
//! cycle. On infeasibility the optimal phase-one duals give a Farkas vector
//! `y` with `yᵀA ≤ 0` and `yᵀb > 0`.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

#[derive(Clone, Debug, PartialEq)]
pub enum Feasibility {
    /// A basic feasible point.
    Feasible(Vec<BigRational>),
    /// Farkas multipliers, one per row of the original system.
    Infeasible(Vec<BigRational>),
}

/// Solves the feasibility problem for `a` (row-major, `m × n`) and `b`.
pub fn feasibility(a: &[Vec<BigRational>], b: &[BigRational]) -> Feasibility {
    let m = a.len();
    assert_eq!(m, b.len(), "row count mismatch");
    let n = a.first().map_or(0, Vec::len);
    assert!(a.iter().all(|row| row.len() == n), "ragged constraint matrix");

    // Rows with negative right-hand side are negated so the artificial
    // basis starts feasible; `sign` undoes this on the duals.
    let sign: Vec<bool> = b.iter().map(|v| v.is_negative()).collect();
    let width = n + m + 1;
    let mut tableau: Vec<Vec<BigRational>> = (0..m)
        .map(|i| {
            let mut row = vec![BigRational::zero(); width];
            for j in 0..n {
                row[j] = if sign[i] { -&a[i][j] } else { a[i][j].clone() };
            }
            row[n + i] = BigRational::one();
            row[width - 1] = b[i].abs();
            row
        })
        .collect();
    let mut basis: Vec<usize> = (n..n + m).collect();

    // Reduced costs of the phase-one objective (sum of artificials); the
    // last entry holds minus the objective value.
    let mut cost = vec![BigRational::zero(); width];
    for row in &tableau {
        for j in 0..n {
            cost[j] -= &row[j];
        }
        cost[width - 1] -= &row[width - 1];
    }

    while let Some(enter) = (0..n + m).find(|&j| cost[j].is_negative()) {
        let mut leave: Option<(usize, BigRational)> = None;
        for i in 0..m {
            if !tableau[i][enter].is_positive() {
                continue;
            }
            let ratio = &tableau[i][width - 1] / &tableau[i][enter];
            let better = match &leave {
                None => true,
                Some((li, best)) => ratio < *best || (ratio == *best && basis[i] < basis[*li]),
            };
            if better {
                leave = Some((i, ratio));
            }
        }
        // The phase-one objective is bounded below by zero, so some row
        // always blocks the entering column.
        let (pivot_row, _) = leave.expect("phase-one simplex cannot be unbounded");
        pivot(&mut tableau, &mut cost, pivot_row, enter);
        basis[pivot_row] = enter;
    }

    let objective = -&cost[width - 1];
    if objective.is_zero() {
        let mut x = vec![BigRational::zero(); n];
        for (i, &var) in basis.iter().enumerate() {
            if var < n {
                x[var] = tableau[i][width - 1].clone();
            }
        }
        Feasibility::Feasible(x)
    } else {
        // Reduced cost of artificial i is 1 - y_i.
        let y = (0..m)
            .map(|i| {
                let yi = BigRational::one() - &cost[n + i];
                if sign[i] {
                    -yi
                } else {
                    yi
                }
            })
            .collect();
        Feasibility::Infeasible(y)
    }
}

fn pivot(tableau: &mut [Vec<BigRational>], cost: &mut [BigRational], row: usize, col: usize) {
    let inv = BigRational::one() / &tableau[row][col];
    for v in tableau[row].iter_mut() {
        *v *= &inv;
    }
    let pivot_row = tableau[row].clone();
    for (i, r) in tableau.iter_mut().enumerate() {
        if i == row || r[col].is_zero() {
            continue;
        }
        let factor = r[col].clone();
        for (v, p) in r.iter_mut().zip(&pivot_row) {
            if !p.is_zero() {
                *v -= &factor * p;
            }
        }
    }
    if !cost[col].is_zero() {
        let factor = cost[col].clone();
        for (v, p) in cost.iter_mut().zip(&pivot_row) {
            if !p.is_zero() {
                *v -= &factor * p;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(n))
    }

    fn check_farkas(a: &[Vec<BigRational>], b: &[BigRational], y: &[BigRational]) {
        for j in 0..a[0].len() {
            let col: BigRational = (0..a.len()).map(|i| &y[i] * &a[i][j]).sum();
            assert!(!col.is_positive(), "yᵀA_{j} = {col} > 0");
        }
        let yb: BigRational = y.iter().zip(b).map(|(u, v)| u * v).sum();
        assert!(yb.is_positive());
    }

    #[test]
    fn feasible_simplex_point() {
        // x1 + x2 = 1, x1 - x2 = 0
        let a = vec![vec![q(1), q(1)], vec![q(1), q(-1)]];
        let b = vec![q(1), q(0)];
        match feasibility(&a, &b) {
            Feasibility::Feasible(x) => {
                assert_eq!(x, vec![BigRational::new(1.into(), 2.into()); 2]);
            }
            other => panic!("expected feasible, got {other:?}"),
        }
    }

    #[test]
    fn infeasible_with_certificate() {
        // x1 + x2 = 1 and x1 + x2 = 2
        let a = vec![vec![q(1), q(1)], vec![q(1), q(1)]];
        let b = vec![q(1), q(2)];
        match feasibility(&a, &b) {
            Feasibility::Infeasible(y) => check_farkas(&a, &b, &y),
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn negative_rhs_rows() {
        // x1 = -1 has no nonnegative solution
        let a = vec![vec![q(1)]];
        let b = vec![q(-1)];
        match feasibility(&a, &b) {
            Feasibility::Infeasible(y) => check_farkas(&a, &b, &y),
            other => panic!("expected infeasible, got {other:?}"),
        }
        // -x1 = -3 does
        let a = vec![vec![q(-1)]];
        let b = vec![q(-3)];
        assert_eq!(feasibility(&a, &b), Feasibility::Feasible(vec![q(3)]));
    }

    #[test]
    fn degenerate_system_terminates() {
        // Redundant rows and zero right-hand sides.
        let a = vec![
            vec![q(1), q(-1), q(0), q(0)],
            vec![q(1), q(-1), q(0), q(0)],
            vec![q(0), q(1), q(-1), q(0)],
            vec![q(1), q(0), q(-1), q(0)],
            vec![q(1), q(1), q(1), q(1)],
        ];
        let b = vec![q(0), q(0), q(0), q(0), q(4)];
        match feasibility(&a, &b) {
            Feasibility::Feasible(x) => {
                for (i, row) in a.iter().enumerate() {
                    let lhs: BigRational = row.iter().zip(&x).map(|(u, v)| u * v).sum();
                    assert_eq!(lhs, b[i]);
                }
            }
            other => panic!("expected feasible, got {other:?}"),
        }
    }
}
