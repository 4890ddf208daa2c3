use serde::{Deserialize, Serialize};

use crate::error::{check_dimension, Error, Result};

/// All monomials `x_1^e_1 ... x_n^e_n` with total degree at most `degree`,
/// in graded lexicographic order (highest total degree first, ties broken by
/// descending exponent tuple). For `n = 1, k = 2` the order is `x², x, 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawBasis", into = "RawBasis")]
pub struct MonomialBasis {
    dimension: usize,
    degree: u32,
    exponents: Vec<Vec<u32>>,
}

#[derive(Serialize, Deserialize)]
struct RawBasis {
    dimension: usize,
    degree: u32,
}

impl TryFrom<RawBasis> for MonomialBasis {
    type Error = Error;

    fn try_from(raw: RawBasis) -> Result<Self> {
        MonomialBasis::new(raw.dimension, raw.degree)
    }
}

impl From<MonomialBasis> for RawBasis {
    fn from(b: MonomialBasis) -> Self {
        RawBasis {
            dimension: b.dimension,
            degree: b.degree,
        }
    }
}

impl MonomialBasis {
    pub fn new(dimension: usize, degree: u32) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::invalid("basis dimension must be positive"));
        }
        let mut exponents = Vec::new();
        let mut current = vec![0u32; dimension];
        enumerate(&mut current, 0, degree, &mut exponents);
        exponents.sort_by(|a, b| {
            let da: u32 = a.iter().sum();
            let db: u32 = b.iter().sum();
            db.cmp(&da).then_with(|| b.cmp(a))
        });
        Ok(MonomialBasis {
            dimension,
            degree,
            exponents,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// Number of monomials, `Q = binomial(n + k, k)`.
    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn exponents(&self) -> &[Vec<u32>] {
        &self.exponents
    }

    /// Position of the constant monomial (always last).
    pub fn constant_index(&self) -> usize {
        self.exponents.len() - 1
    }

    pub fn index_of(&self, exponent: &[u32]) -> Option<usize> {
        self.exponents.iter().position(|e| e.as_slice() == exponent)
    }

    /// Column name used in constraint dumps, e.g. `b_2` or `b_1_0`.
    pub fn monomial_name(&self, index: usize) -> String {
        let mut name = String::from("b");
        for e in &self.exponents[index] {
            name.push('_');
            name.push_str(&e.to_string());
        }
        name
    }

    pub fn features(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dimension(self.dimension, x.len())?;
        let mut out = vec![0.0; self.len()];
        self.features_into(x, &mut out);
        Ok(out)
    }

    /// Writes monomial values into `out`; `x` and `out` must already have the
    /// basis dimension and length.
    pub(crate) fn features_into(&self, x: &[f64], out: &mut [f64]) {
        for (slot, exps) in out.iter_mut().zip(&self.exponents) {
            let mut v = 1.0;
            for (xi, &e) in x.iter().zip(exps) {
                if e > 0 {
                    v *= xi.powi(e as i32);
                }
            }
            *slot = v;
        }
    }

    /// Adds monomial values of `x` onto `acc`.
    pub(crate) fn accumulate_features(&self, x: &[f64], acc: &mut [f64]) {
        for (slot, exps) in acc.iter_mut().zip(&self.exponents) {
            let mut v = 1.0;
            for (xi, &e) in x.iter().zip(exps) {
                if e > 0 {
                    v *= xi.powi(e as i32);
                }
            }
            *slot += v;
        }
    }
}

fn enumerate(current: &mut Vec<u32>, pos: usize, remaining: u32, out: &mut Vec<Vec<u32>>) {
    if pos == current.len() {
        out.push(current.clone());
        return;
    }
    for e in 0..=remaining {
        current[pos] = e;
        enumerate(current, pos + 1, remaining - e, out);
    }
    current[pos] = 0;
}
