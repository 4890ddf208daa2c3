use super::*;
use crate::domain::Region;
use crate::sampling::Successors;
use crate::systems::noise::{splitmix64, unit_uniform};

fn problem() -> VerificationProblem {
    VerificationProblem {
        state_region: Region::interval(17.0, 30.0).unwrap(),
        initial_region: Region::interval(17.0, 18.0).unwrap(),
        unsafe_region: Region::interval(28.0, 30.0).unwrap(),
        horizon: 3,
        rho: 0.1,
        beta: 0.005,
        beta_s: 0.005,
        delta: 0.015,
        mu: -1e-3,
        epsilon: 0.03,
        lipschitz_bound: 2160.0,
        variance_bound: 0.005,
    }
}

fn raw_dataset(samples: &[f64], succ: &[f64], n_hat: usize) -> ScenarioDataset {
    ScenarioDataset::from_parts(1, n_hat, 0, samples.to_vec(), Successors::Raw(succ.to_vec())).unwrap()
}

fn rand_in(state: &mut u64, lo: f64, hi: f64) -> f64 {
    *state = splitmix64(*state);
    lo + (hi - lo) * unit_uniform(*state)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[test]
fn rows_match_direct_formulas() {
    let p = problem();
    let basis = MonomialBasis::new(1, 2).unwrap();
    let mut s = 7u64;
    for _ in 0..100 {
        let x = rand_in(&mut s, 17.0, 30.0);
        let succ: Vec<f64> = (0..3).map(|_| rand_in(&mut s, 17.0, 30.0)).collect();
        let ds = raw_dataset(&[x], &succ, 3);
        let t = rand_in(&mut s, 0.0, 0.1);
        let cs = assemble(&p, &basis, &ds, &ScpOptions { tighten: t, ..Default::default() }).unwrap();
        let d: Vec<f64> = (0..6).map(|_| rand_in(&mut s, -2.0, 2.0)).collect();
        let (k, lam, c, b) = (d[0], d[1], d[2], &d[3..]);
        let bx = b[0] * x * x + b[1] * x + b[2];
        let eb = succ.iter().map(|y| b[0] * y * y + b[1] * y + b[2]).sum::<f64>() / 3.0;
        for i in 0..cs.num_rows() {
            let lhs = dot(cs.row_coefficients(i), &d);
            let expected = match cs.tag(i).kind {
                RowKind::Nonnegative => (-bx - k, -t),
                RowKind::Initial => (bx - k, 1.0 - t),
                RowKind::Unsafe => (-bx + lam - k, -t),
                RowKind::Expectation => (eb - bx - c - k, -p.delta - t),
                RowKind::Horizon => (30.0 * c - lam - k, -10.0 + p.mu),
                RowKind::LowerBound | RowKind::UpperBound => continue,
                other => panic!("unexpected {other:?}"),
            };
            assert!((lhs - expected.0).abs() <= 1e-9 * (1.0 + expected.0.abs()), "{}", cs.tag(i));
            assert_eq!(cs.rhs(i), expected.1);
        }
    }
}

#[test]
fn indicator_rows_follow_membership() {
    let p = problem();
    let basis = MonomialBasis::new(1, 2).unwrap();
    let xs = [17.0, 17.5, 18.0, 18.0001, 25.0, 27.9999, 28.0, 30.0];
    let ds = raw_dataset(&xs, &xs, 1);
    let cs = assemble(&p, &basis, &ds, &ScpOptions::default()).unwrap();
    assert_eq!(cs.count_kind(RowKind::Nonnegative), 8);
    assert_eq!(cs.count_kind(RowKind::Expectation), 8);
    assert_eq!(cs.count_kind(RowKind::Initial), 3);
    assert_eq!(cs.count_kind(RowKind::Unsafe), 2);
    assert_eq!(cs.count_kind(RowKind::Horizon), 1);
    for i in 0..cs.num_rows() {
        let tag = cs.tag(i);
        let x = xs.get(tag.index as usize).copied();
        match tag.kind {
            RowKind::Initial => assert!(x.unwrap() <= 18.0),
            RowKind::Unsafe => assert!(x.unwrap() >= 28.0),
            _ => {}
        }
    }
}

#[test]
fn tightening_shrinks_feasible_set() {
    let p = problem();
    let basis = MonomialBasis::new(1, 2).unwrap();
    let mut s = 99u64;
    let xs: Vec<f64> = (0..20).map(|_| rand_in(&mut s, 17.0, 30.0)).collect();
    let ds = raw_dataset(&xs, &xs, 1);
    let plain = assemble(&p, &basis, &ds, &ScpOptions::default()).unwrap();
    let tight = assemble(&p, &basis, &ds, &ScpOptions { tighten: 0.05, ..Default::default() }).unwrap();
    assert_eq!(plain.num_rows(), tight.num_rows());
    for _ in 0..2000 {
        let d: Vec<f64> = (0..6).map(|_| rand_in(&mut s, -3.0, 3.0)).collect();
        let ok_plain = evaluate_constraints(&plain, &d).unwrap().is_feasible(0.0);
        let ok_tight = evaluate_constraints(&tight, &d).unwrap().is_feasible(0.0);
        assert!(!ok_tight || ok_plain);
    }
}

#[test]
fn horizon_row_example() {
    let mut p = problem();
    p.mu = -1.0;
    let basis = MonomialBasis::new(1, 2).unwrap();
    let ds = raw_dataset(&[20.0], &[20.0], 1);
    let cs = assemble(&p, &basis, &ds, &ScpOptions::default()).unwrap();
    let i = (0..cs.num_rows()).find(|&i| cs.tag(i).kind == RowKind::Horizon).unwrap();
    assert_eq!(&cs.row_coefficients(i)[..3], &[-1.0, -1.0, 30.0]);
    assert!((cs.rhs(i) + 11.0).abs() < 1e-12);
}

#[test]
fn reported_multipliers_against_horizon_row() {
    let p = problem();
    let basis = MonomialBasis::new(1, 2).unwrap();
    let ds = raw_dataset(&[20.0], &[20.0], 1);
    let cs = assemble(&p, &basis, &ds, &ScpOptions::default()).unwrap();
    let i = (0..cs.num_rows()).find(|&i| cs.tag(i).kind == RowKind::Horizon).unwrap();
    let d = [-0.0761, 18.7479, 0.2891, 0.0872, -2.1528, 11.9027];
    let lhs = dot(cs.row_coefficients(i), &d);
    assert!((lhs + 9.9988).abs() < 1e-9, "{lhs}");
    // the row only closes for mu above roughly +0.0012
    assert!(lhs > cs.rhs(i));
}

#[test]
fn evaluate_reports_worst_row() {
    let mut cs = ConstraintSystem::new(vec!["K".into(), "x".into()]);
    assert!(evaluate_constraints(&cs, &[0.0, 0.0]).unwrap().is_vacuous());
    assert_eq!(evaluate_constraints(&cs, &[0.0, 0.0]).unwrap().max_violation, f64::NEG_INFINITY);
    cs.push_row(&[0.0, 1.0], 1.0, RowTag::new(RowKind::Custom, 0)).unwrap();
    cs.push_row(&[0.0, 2.0], 1.0, RowTag::new(RowKind::Custom, 1)).unwrap();
    let e = evaluate_constraints(&cs, &[0.0, 1.0]).unwrap();
    assert_eq!(e.max_violation, 1.0);
    assert_eq!(e.worst, Some(RowTag::new(RowKind::Custom, 1)));
    assert!(evaluate_constraints(&cs, &[0.0]).is_err());
}

#[test]
fn gershgorin_rows_bound_spectrum() {
    let basis = MonomialBasis::new(1, 2).unwrap();
    let rows = gershgorin_rows(&basis, 12.0).unwrap();
    assert_eq!(rows.len(), 8);
    let mut s = 3u64;
    for _ in 0..500 {
        let b: Vec<f64> = (0..3).map(|_| rand_in(&mut s, -15.0, 15.0)).collect();
        let inside = rows.iter().all(|(a, u)| dot(a, &b) <= *u);
        let r0 = b[0].abs() + b[1].abs() / 2.0;
        let r1 = b[2].abs() + b[1].abs() / 2.0;
        assert_eq!(inside, r0.max(r1) <= 12.0);
        if inside {
            let lm = crate::domain::symmetric_lambda_max(&[vec![b[0], b[1] / 2.0], vec![b[1] / 2.0, b[2]]]);
            assert!(lm <= 12.0 + 1e-12);
        }
    }
    assert!(gershgorin_rows(&MonomialBasis::new(1, 4).unwrap(), 1.0).is_err());
    assert_eq!(gershgorin_rows(&MonomialBasis::new(2, 2).unwrap(), 1.0).unwrap().len(), 3 * 8);
}

#[test]
fn p_max_replaces_coefficient_box() {
    let p = problem();
    let basis = MonomialBasis::new(1, 2).unwrap();
    let ds = raw_dataset(&[20.0], &[20.0], 1);
    let cs = assemble(&p, &basis, &ds, &ScpOptions { p_max: Some(12.0), ..Default::default() }).unwrap();
    assert_eq!(cs.count_kind(RowKind::Gershgorin), 8);
    assert!(cs.upper_bounds()[COL_B..].iter().all(|u| u.is_infinite()));
    let boxed = assemble(&p, &basis, &ds, &ScpOptions::default()).unwrap();
    assert_eq!(boxed.upper_bounds()[COL_B], 1e3);
    assert_eq!(boxed.lower_bounds()[COL_LAMBDA], 1.0 + 1e-6);
    assert_eq!(boxed.lower_bounds()[COL_C], 0.0);
}

#[test]
fn lp_text_round_trip() {
    let p = problem();
    let basis = MonomialBasis::new(1, 2).unwrap();
    let mut s = 5u64;
    let xs: Vec<f64> = (0..15).map(|_| rand_in(&mut s, 17.0, 30.0)).collect();
    let succ: Vec<f64> = (0..30).map(|_| rand_in(&mut s, 17.0, 30.0)).collect();
    let ds = raw_dataset(&xs, &succ, 2);
    for opts in [ScpOptions::default(), ScpOptions { p_max: Some(12.0), tighten: 0.01, ..Default::default() }] {
        let cs = assemble(&p, &basis, &ds, &opts).unwrap();
        let mut buf = Vec::new();
        write_lp(&cs, &mut buf).unwrap();
        let back = parse_lp(&buf[..]).unwrap();
        assert_eq!(back, cs);
    }
}

#[test]
fn lp_parser_accepts_hand_written_input() {
    let text = "\\ comment\nMinimize\n obj: K\nSubject To
 row_0: - K + 2 x\n   >= -3\n x - K <= 4\nBounds\n K free\n x <= 5\nEnd\n";
    let cs = parse_lp(text.as_bytes()).unwrap();
    assert_eq!(cs.columns(), &["K".to_string(), "x".to_string()]);
    assert_eq!(cs.num_constraint_rows(), 2);
    assert_eq!(cs.row_coefficients(0), &[1.0, -2.0]);
    assert_eq!(cs.rhs(0), 3.0);
    assert_eq!(cs.tag(1), RowTag::new(RowKind::Custom, 1));
    assert_eq!(cs.lower_bounds(), &[f64::NEG_INFINITY, 0.0]);
    assert_eq!(cs.upper_bounds(), &[f64::INFINITY, 5.0]);
}

#[test]
fn lp_parser_reports_line_numbers() {
    let bad = "Minimize\n obj: K\nSubject To\n g1_s0: K + 3 3 <= 1\nEnd\n";
    match parse_lp(bad.as_bytes()) {
        Err(Error::LpFormat { line, .. }) => assert_eq!(line, 4),
        other => panic!("{other:?}"),
    }
    let eq = "Minimize\n obj: K\nSubject To\n K = 1\nEnd\n";
    assert!(parse_lp(eq.as_bytes()).is_err());
}

#[test]
fn row_names_round_trip() {
    for tag in [
        RowTag::new(RowKind::Nonnegative, 12),
        RowTag::new(RowKind::Initial, 0),
        RowTag::new(RowKind::Unsafe, 3),
        RowTag::new(RowKind::Horizon, 0),
        RowTag::new(RowKind::Expectation, 99),
        RowTag::new(RowKind::Gershgorin, 7),
        RowTag::new(RowKind::Custom, 4),
    ] {
        assert_eq!(RowTag::parse(&tag.to_string()), Some(tag));
    }
}
