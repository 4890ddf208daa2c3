use super::*;
use crate::scp::{RowKind, RowTag};

fn system(cols: usize, rows: &[(&[f64], f64)]) -> ConstraintSystem {
    let names = (0..cols).map(|j| format!("x{j}")).collect();
    let mut cs = ConstraintSystem::new(names);
    for (i, (a, u)) in rows.iter().enumerate() {
        cs.push_row(a, *u, RowTag::new(RowKind::Custom, i as u64)).unwrap();
    }
    cs
}

fn small_sets() -> LpOptions {
    LpOptions { initial_rows: 1, cuts_per_round: 1, ..Default::default() }
}

#[test]
fn single_lower_bound() {
    // K >= 3
    let cs = system(1, &[(&[-1.0], -3.0)]);
    let sol = solve(&cs, &LpOptions::default()).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    assert!((sol.objective.unwrap() - 3.0).abs() < 1e-12);
    assert_eq!(sol.active_rows, vec![0]);
}

#[test]
fn two_dimensional_vertex() {
    // min K s.t. K >= x, K >= 2 - x, 0 <= x <= 5  ->  K = 1 at x = 1
    let mut cs = system(2, &[(&[-1.0, 1.0], 0.0), (&[-1.0, -1.0], -2.0)]);
    cs.set_bounds(vec![f64::NEG_INFINITY, 0.0], vec![f64::INFINITY, 5.0]).unwrap();
    for opts in [LpOptions::default(), small_sets()] {
        let sol = solve(&cs, &opts).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        let d = sol.d_star.unwrap();
        assert!((d[0] - 1.0).abs() < 1e-12 && (d[1] - 1.0).abs() < 1e-12, "{d:?}");
        assert!(sol.max_residual.unwrap() <= 1e-12);
    }
}

#[test]
fn infeasible_with_certificate() {
    // x <= 1 and x >= 2
    let cs = system(2, &[(&[-1.0, 0.0], 0.0), (&[0.0, 1.0], 1.0), (&[0.0, -1.0], -2.0)]);
    let sol = solve(&cs, &LpOptions::default()).unwrap();
    assert_eq!(sol.status, LpStatus::Infeasible);
    assert!(sol.d_star.is_none());
    assert_eq!(sol.certificate_rows, vec![1, 2]);
}

#[test]
fn unbounded_objective() {
    let cs = system(2, &[(&[-1.0, 1.0], 0.0), (&[0.0, 1.0], 4.0)]);
    let sol = solve(&cs, &small_sets()).unwrap();
    assert_eq!(sol.status, LpStatus::Unbounded);
}

#[test]
fn row_scaling_does_not_move_optimum() {
    let rows: Vec<(Vec<f64>, f64)> = vec![
        (vec![-1.0, 2.0, 0.5], 1.0),
        (vec![-1.0, -1.0, 1.0], 0.0),
        (vec![-1.0, 0.3, -2.0], 2.0),
        (vec![0.0, 1.0, 0.0], 3.0),
        (vec![0.0, -1.0, 0.0], 3.0),
        (vec![0.0, 0.0, 1.0], 3.0),
        (vec![0.0, 0.0, -1.0], 3.0),
    ];
    let build = |f: &dyn Fn(usize) -> f64| {
        let scaled: Vec<(Vec<f64>, f64)> = rows
            .iter()
            .enumerate()
            .map(|(i, (a, u))| (a.iter().map(|v| v * f(i)).collect(), u * f(i)))
            .collect();
        let refs: Vec<(&[f64], f64)> = scaled.iter().map(|(a, u)| (a.as_slice(), *u)).collect();
        system(3, &refs)
    };
    let base = solve(&build(&|_| 1.0), &LpOptions::default()).unwrap();
    let scaled = solve(&build(&|i| 10f64.powi(i as i32 * 2 - 6)), &LpOptions::default()).unwrap();
    assert_eq!(base.status, LpStatus::Optimal);
    assert!((base.objective.unwrap() - scaled.objective.unwrap()).abs() < 1e-9);
}

#[test]
fn solution_is_deterministic() {
    let mut state = 11u64;
    let mut rows = Vec::new();
    for _ in 0..3000 {
        let mut a = vec![-1.0];
        for _ in 0..3 {
            state = splitmix64(state);
            a.push((state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0);
        }
        state = splitmix64(state);
        rows.push((a, (state >> 11) as f64 / (1u64 << 53) as f64));
    }
    let refs: Vec<(&[f64], f64)> = rows.iter().map(|(a, u)| (a.as_slice(), *u)).collect();
    let mut cs = system(4, &refs);
    cs.set_bounds(vec![f64::NEG_INFINITY, -1.0, -1.0, -1.0], vec![f64::INFINITY, 1.0, 1.0, 1.0]).unwrap();
    let opts = LpOptions { initial_rows: 100, cuts_per_round: 8, ..Default::default() };
    let a = solve(&cs, &opts).unwrap();
    let b = solve(&cs, &opts).unwrap();
    assert_eq!(a, b);
    assert!(a.outer_iterations > 0);
    let full = solve(&cs, &LpOptions::default()).unwrap();
    assert!((a.objective.unwrap() - full.objective.unwrap()).abs() < 1e-9);
}

#[test]
fn most_violated_orders_and_breaks_ties() {
    let cs = system(1, &[(&[1.0], 0.0), (&[2.0], 0.0), (&[1.0], 0.0), (&[-1.0], 0.0)]);
    let v = most_violated(&cs, &[1.0], 2, 0.0);
    assert_eq!(v, vec![(0, 1.0), (1, 1.0)]);
    assert!(most_violated(&cs, &[-1.0], 5, 0.0).iter().all(|x| x.0 == 3));
}

#[test]
fn iteration_cap_reports_limit() {
    let mut cs = system(2, &[(&[-1.0, 1.0], 0.0), (&[-1.0, -1.0], -2.0)]);
    cs.set_bounds(vec![f64::NEG_INFINITY, 0.0], vec![f64::INFINITY, 5.0]).unwrap();
    let sol = solve(&cs, &LpOptions { max_pivots: 1, ..Default::default() }).unwrap();
    assert_eq!(sol.status, LpStatus::IterationLimit);
}

#[test]
fn rejects_bad_input() {
    let cs = system(1, &[(&[f64::NAN], 0.0)]);
    assert!(solve(&cs, &LpOptions::default()).is_err());
    let cs = system(1, &[(&[1.0], 0.0)]);
    assert!(solve(&cs, &LpOptions { cuts_per_round: 0, ..Default::default() }).is_err());
}
