//! Independent oracles shared by the integration tests. Nothing here calls
//! into the code paths it is used to check.

#![allow(dead_code)]

use std::path::PathBuf;

use num_bigint::BigUint;
use num_traits::{Float, One, ToPrimitive};

use databc::scp::ConstraintSystem;

pub fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

/// xorshift64* for choosing test cases.
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) | 1)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 ^= self.0 >> 12;
        self.0 ^= self.0 << 25;
        self.0 ^= self.0 >> 27;
        self.0.wrapping_mul(0x2545_f491_4f6c_dd1d)
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n
    }
}

/// `ln Σ_{i=0}^{min(limit,n)} C(n,i) e^i (1-e)^(n-i)` in exact integer
/// arithmetic, `e` taken as the exact binary value of the float.
pub fn exact_ln_tail(n: u64, e: f64, limit: u64) -> f64 {
    let (mantissa, exponent, sign) = e.integer_decode();
    assert!(sign > 0 && exponent < 0 && e < 1.0);
    let shift = (-exponent) as u64;
    let m = BigUint::from(mantissa);
    let d = BigUint::one() << shift;
    let rest = &d - &m;
    let top = limit.min(n);

    // C(n,i) m^i rest^(n-i), built from i = top downwards
    let mut rest_pow = rest.pow((n - top) as u32);
    let mut m_pows = vec![BigUint::one()];
    for i in 1..=top {
        let next = &m_pows[i as usize - 1] * &m;
        m_pows.push(next);
    }
    let mut choose = vec![BigUint::one()];
    for i in 1..=top {
        let next = &choose[i as usize - 1] * BigUint::from(n - i + 1) / BigUint::from(i);
        choose.push(next);
    }
    let mut sum = BigUint::default();
    for i in (0..=top).rev() {
        sum += &choose[i as usize] * &m_pows[i as usize] * &rest_pow;
        if i > 0 {
            rest_pow *= &rest;
        }
    }
    // sum / 2^(shift n) = frac · 2^k with frac in [1/2, 1) and k an exact
    // integer, so nothing large cancels in floating point
    let bits = sum.bits();
    let drop = bits.saturating_sub(64);
    let frac = (&sum >> drop).to_f64().unwrap() / 2f64.powi((bits - drop) as i32);
    let k = bits as i64 - (shift * n) as i64;
    frac.ln() + k as f64 * std::f64::consts::LN_2
}

/// Same tail in linear space via the term ratio
/// `t_{i+1} / t_i = (n-i)/(i+1) · e/(1-e)`.
pub fn ratio_tail(n: u64, e: f64, limit: u64) -> f64 {
    let mut t = (n as f64 * (-e).ln_1p()).exp();
    let mut sum = t;
    let r = e / (1.0 - e);
    for i in 0..limit.min(n) {
        t *= (n - i) as f64 / (i + 1) as f64 * r;
        sum += t;
    }
    sum
}

/// Gauss-Jordan with full pivoting on the `n - 1` equations held row-major
/// in `a` (`(n - 1) × n`) with right-hand side `b`, both overwritten. On
/// success `x` holds a particular solution and `v` a unit max-norm
/// direction spanning the solution line; false when the rows are (nearly)
/// dependent.
pub fn solution_line(a: &mut [f64], b: &mut [f64], n: usize, x: &mut [f64], v: &mut [f64]) -> bool {
    let m = n - 1;
    let mut used = [false; 16];
    let mut pivot_col = [0usize; 16];
    assert!(n <= 16);
    for k in 0..m {
        let (mut br, mut bc, mut mag) = (k, 0, 0.0f64);
        for r in k..m {
            for c in (0..n).filter(|&c| !used[c]) {
                if a[r * n + c].abs() > mag {
                    (br, bc, mag) = (r, c, a[r * n + c].abs());
                }
            }
        }
        if mag < 1e-9 {
            return false;
        }
        if br != k {
            for j in 0..n {
                a.swap(k * n + j, br * n + j);
            }
            b.swap(k, br);
        }
        let p = a[k * n + bc];
        for j in 0..n {
            a[k * n + j] /= p;
        }
        b[k] /= p;
        for i in (0..m).filter(|&i| i != k) {
            let f = a[i * n + bc];
            if f != 0.0 {
                for j in 0..n {
                    a[i * n + j] -= f * a[k * n + j];
                }
                b[i] -= f * b[k];
            }
        }
        used[bc] = true;
        pivot_col[k] = bc;
    }
    let free = (0..n).find(|&c| !used[c]).expect("one free column");
    x[..n].fill(0.0);
    v[..n].fill(0.0);
    v[free] = 1.0;
    for k in 0..m {
        x[pivot_col[k]] = b[k];
        v[pivot_col[k]] = -a[k * n + free];
    }
    let scale = v[..n].iter().fold(0.0f64, |acc, t| acc.max(t.abs()));
    v[..n].iter_mut().for_each(|t| *t /= scale);
    true
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

/// `min d[0]` over the polytope `{d : a_i·d <= u_i}` by exhaustive vertex
/// enumeration. Every vertex is an endpoint of the feasible segment of a
/// line cut out by `n - 1` independent rows, so the segments of all
/// `(n - 1)`-subsets visit every vertex. Rows are normalized to unit
/// max-norm; `tol` is the allowed violation of a parallel row and the
/// allowed overlap of a segment collapsing to a point. `None` when no
/// vertex is feasible; the polytope must be bounded.
pub fn vertex_enumeration_min(cs: &ConstraintSystem, tol: f64) -> Option<f64> {
    let n = cs.num_columns();
    let m = cs.num_rows();
    assert!(n >= 2 && m >= n);
    let mut coeffs = Vec::with_capacity(m * n);
    let mut rhs = Vec::with_capacity(m);
    for i in 0..m {
        let a = cs.row_coefficients(i);
        let s = a.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        coeffs.extend(a.iter().map(|v| v / s));
        rhs.push(cs.rhs(i) / s);
    }
    let mut order: Vec<usize> = (0..m).filter(|&i| cs.tag(i).is_bound()).collect();
    order.extend((0..m).filter(|&i| !cs.tag(i).is_bound()));
    let k = n - 1;
    let mut best: Option<f64> = None;
    let mut idx: Vec<usize> = (0..k).collect();
    let (mut a, mut b) = (vec![0.0; k * n], vec![0.0; k]);
    let (mut x, mut v) = (vec![0.0; n], vec![0.0; n]);
    loop {
        for (r, &i) in idx.iter().enumerate() {
            a[r * n..(r + 1) * n].copy_from_slice(&coeffs[i * n..(i + 1) * n]);
            b[r] = rhs[i];
        }
        if solution_line(&mut a, &mut b, n, &mut x, &mut v) {
            let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
            let mut alive = true;
            // scan in `order` (box rows first) and stop as soon as the
            // segment is empty or cannot beat `best`
            for &i in &order {
                let row = &coeffs[i * n..(i + 1) * n];
                let along = dot(row, &v);
                let room = rhs[i] - dot(row, &x);
                if along.abs() < 1e-12 {
                    alive = room >= -tol;
                } else if along > 0.0 {
                    hi = hi.min(room / along);
                } else {
                    lo = lo.max(room / along);
                }
                alive &= lo <= hi + tol;
                if let (true, Some(b)) = (alive, best) {
                    let reach = if v[0] > 0.0 { lo } else { hi };
                    alive = reach.is_infinite() || x[0] + reach * v[0] < b;
                }
                if !alive {
                    break;
                }
            }
            if alive {
                assert!(lo.is_finite() && hi.is_finite(), "unbounded polytope");
                let end = (x[0] + lo * v[0]).min(x[0] + hi * v[0]);
                best = Some(best.map_or(end, |b: f64| b.min(end)));
            }
        }
        let mut j = k;
        loop {
            if j == 0 {
                return best;
            }
            j -= 1;
            if idx[j] < m - k + j {
                break;
            }
        }
        idx[j] += 1;
        for t in j + 1..k {
            idx[t] = idx[t - 1] + 1;
        }
    }
}

/// Random feasible LP in five variables with the box `|d| <= 10` and
/// `extra` further rows, some of them tight at a common point. With
/// `infeasible` two contradictory rows are appended.
pub fn random_lp(rng: &mut Rng, extra: usize, infeasible: bool) -> ConstraintSystem {
    use databc::scp::{RowKind, RowTag};
    let n = 5;
    let mut cs = ConstraintSystem::new((0..n).map(|i| format!("x{i}")).collect());
    cs.set_bounds(vec![-10.0; n], vec![10.0; n]).unwrap();
    let z: Vec<f64> = (0..n).map(|_| rng.range(-5.0, 5.0)).collect();
    let mut pushed = 0;
    while pushed < extra {
        let a: Vec<f64> = (0..n).map(|_| rng.range(-1.0, 1.0)).collect();
        let dot: f64 = a.iter().zip(&z).map(|(p, q)| p * q).sum();
        let slack = if rng.uniform() < 0.2 { 0.0 } else { rng.range(0.0, 2.0) };
        if infeasible && pushed + 2 == extra {
            cs.push_row(&a, dot - 1.0, RowTag::new(RowKind::Custom, pushed as u64)).unwrap();
            let neg: Vec<f64> = a.iter().map(|v| -v).collect();
            cs.push_row(&neg, -dot - 1.0, RowTag::new(RowKind::Custom, pushed as u64 + 1)).unwrap();
            pushed += 2;
            continue;
        }
        cs.push_row(&a, dot + slack, RowTag::new(RowKind::Custom, pushed as u64)).unwrap();
        pushed += 1;
    }
    cs
}
