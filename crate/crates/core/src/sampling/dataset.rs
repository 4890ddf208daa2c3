use rayon::prelude::*;

use crate::domain::{MonomialBasis, Region};
use crate::error::{check_dimension, Error, Result};
use crate::systems::noise::{realization_seed, state_seed, unit_uniform};
use crate::systems::BlackBoxSystem;

/// What is stored per sample next to the state itself.
#[derive(Debug, Clone, PartialEq)]
pub enum Successors {
    /// `N × N̂ × n` successor states.
    Raw(Vec<f64>),
    /// `N × Q` empirical means of the successor features.
    MeanFeatures { basis: MonomialBasis, values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioDataset {
    dimension: usize,
    n_hat: usize,
    run_seed: u64,
    samples: Vec<f64>,
    successors: Successors,
}

impl ScenarioDataset {
    pub fn from_parts(
        dimension: usize,
        n_hat: usize,
        run_seed: u64,
        samples: Vec<f64>,
        successors: Successors,
    ) -> Result<Self> {
        if dimension == 0 || n_hat == 0 {
            return Err(Error::invalid("dataset needs positive dimension and N̂"));
        }
        if samples.len() % dimension != 0 {
            return Err(Error::invalid("sample buffer is not a multiple of the dimension"));
        }
        let count = samples.len() / dimension;
        let expected = match &successors {
            Successors::Raw(v) => (v.len(), count * n_hat * dimension),
            Successors::MeanFeatures { basis, values } => {
                check_dimension(dimension, basis.dimension())?;
                (values.len(), count * basis.len())
            }
        };
        if expected.0 != expected.1 {
            return Err(Error::invalid(format!(
                "successor buffer has {} values, expected {}",
                expected.0, expected.1
            )));
        }
        Ok(ScenarioDataset {
            dimension,
            n_hat,
            run_seed,
            samples,
            successors,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len() / self.dimension
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn n_hat(&self) -> usize {
        self.n_hat
    }

    pub fn run_seed(&self) -> u64 {
        self.run_seed
    }

    pub fn is_compact(&self) -> bool {
        matches!(self.successors, Successors::MeanFeatures { .. })
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.samples[i * self.dimension..(i + 1) * self.dimension]
    }

    pub fn samples(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.samples.chunks_exact(self.dimension)
    }

    pub fn successors(&self) -> &Successors {
        &self.successors
    }

    /// Raw successors of sample `i` (`N̂ × n` values), if stored.
    pub fn raw_successors(&self, i: usize) -> Option<&[f64]> {
        match &self.successors {
            Successors::Raw(v) => {
                let stride = self.n_hat * self.dimension;
                Some(&v[i * stride..(i + 1) * stride])
            }
            Successors::MeanFeatures { .. } => None,
        }
    }

    /// `(1/N̂) Σ_j features(f(x̂_i, ŵ_j))`, the vector that makes the
    /// empirical expectation row affine in the barrier coefficients.
    pub fn empirical_successor_features(&self, basis: &MonomialBasis, i: usize) -> Result<Vec<f64>> {
        if i >= self.len() {
            return Err(Error::invalid(format!(
                "sample index {i} out of range for {} samples",
                self.len()
            )));
        }
        check_dimension(self.dimension, basis.dimension())?;
        match &self.successors {
            Successors::Raw(_) => Ok(mean_features(
                basis,
                self.raw_successors(i).expect("raw"),
                self.dimension,
            )),
            Successors::MeanFeatures { basis: stored, values } => {
                if stored != basis {
                    return Err(Error::invalid(format!(
                        "compact dataset stores degree-{} features, degree {} requested",
                        stored.degree(),
                        basis.degree()
                    )));
                }
                let q = stored.len();
                Ok(values[i * q..(i + 1) * q].to_vec())
            }
        }
    }

    pub fn count_in(&self, region: &Region) -> usize {
        self.samples().filter(|x| region.contains_point(x)).count()
    }
}

/// Mean of the monomial features over back-to-back states in `states`.
pub fn mean_features(basis: &MonomialBasis, states: &[f64], dimension: usize) -> Vec<f64> {
    let mut acc = vec![0.0; basis.len()];
    let count = states.len() / dimension;
    for s in states.chunks_exact(dimension) {
        basis.accumulate_features(s, &mut acc);
    }
    let scale = 1.0 / count as f64;
    acc.iter_mut().for_each(|v| *v *= scale);
    acc
}

/// State sample `index`, uniform over the box and keyed by the run seed.
pub fn draw_state(region: &Region, run_seed: u64, index: u64) -> Vec<f64> {
    region
        .lower()
        .iter()
        .zip(region.upper())
        .enumerate()
        .map(|(d, (lo, hi))| {
            if lo == hi {
                *lo
            } else {
                lo + (hi - lo) * unit_uniform(state_seed(run_seed, index, d as u64))
            }
        })
        .collect()
}

pub fn draw_states(region: &Region, n: usize, run_seed: u64) -> Result<Vec<Vec<f64>>> {
    if n == 0 {
        return Err(Error::invalid("at least one state sample is required"));
    }
    Ok((0..n as u64)
        .into_par_iter()
        .map(|i| draw_state(region, run_seed, i))
        .collect())
}

/// Simulates the `n_hat` successors of `state` (sample `index`), writing
/// the per-sample payload: raw successors, or their mean features.
pub(crate) fn sample_payload<S: BlackBoxSystem + ?Sized>(
    sys: &S,
    state: &[f64],
    index: u64,
    n_hat: usize,
    run_seed: u64,
    compact: Option<&MonomialBasis>,
) -> Result<Vec<f64>> {
    let n = state.len();
    let seeds: Vec<u64> = (0..n_hat as u64)
        .map(|j| realization_seed(run_seed, index, j))
        .collect();
    let mut succ = vec![0.0; n_hat * n];
    sys.step_many_into(state, &seeds, &mut succ)?;
    if let Some(bad) = succ.iter().find(|v| !v.is_finite()) {
        return Err(Error::Plugin(format!(
            "system returned non-finite successor {bad} for sample {index}"
        )));
    }
    Ok(match compact {
        Some(basis) => mean_features(basis, &succ, n),
        None => succ,
    })
}

fn collect<S: BlackBoxSystem + ?Sized>(
    sys: &S,
    samples: &[Vec<f64>],
    n_hat: usize,
    run_seed: u64,
    compact: Option<&MonomialBasis>,
) -> Result<ScenarioDataset> {
    if n_hat == 0 {
        return Err(Error::invalid("n_hat must be at least 1"));
    }
    if samples.is_empty() {
        return Err(Error::invalid("no state samples"));
    }
    let n = sys.state_dimension();
    for s in samples {
        check_dimension(n, s.len())?;
    }
    let payloads: Vec<Vec<f64>> = samples
        .par_iter()
        .enumerate()
        .map(|(i, s)| sample_payload(sys, s, i as u64, n_hat, run_seed, compact))
        .collect::<Result<_>>()?;
    let flat_samples = samples.concat();
    let flat = payloads.concat();
    let successors = match compact {
        Some(basis) => Successors::MeanFeatures {
            basis: basis.clone(),
            values: flat,
        },
        None => Successors::Raw(flat),
    };
    ScenarioDataset::from_parts(n, n_hat, run_seed, flat_samples, successors)
}

/// Raw dataset: `successors[i][j] = step(x̂_i, realization_seed(run_seed, i, j))`.
pub fn collect_successors<S: BlackBoxSystem + ?Sized>(
    sys: &S,
    samples: &[Vec<f64>],
    n_hat: usize,
    run_seed: u64,
) -> Result<ScenarioDataset> {
    collect(sys, samples, n_hat, run_seed, None)
}

/// Compact dataset storing only the mean successor features per sample.
pub fn collect_mean_features<S: BlackBoxSystem + ?Sized>(
    sys: &S,
    samples: &[Vec<f64>],
    n_hat: usize,
    run_seed: u64,
    basis: &MonomialBasis,
) -> Result<ScenarioDataset> {
    check_dimension(sys.state_dimension(), basis.dimension())?;
    collect(sys, samples, n_hat, run_seed, Some(basis))
}

/// Draws `n` states and collects their successors in one go.
pub fn build_dataset<S: BlackBoxSystem + ?Sized>(
    sys: &S,
    region: &Region,
    n: usize,
    n_hat: usize,
    run_seed: u64,
    compact: Option<&MonomialBasis>,
) -> Result<ScenarioDataset> {
    check_dimension(sys.state_dimension(), region.dimension())?;
    let samples = draw_states(region, n, run_seed)?;
    collect(sys, &samples, n_hat, run_seed, compact)
}
