//! Stochastic perturbation search for closed-loop weights and bit labels.
//!
//! The weight search solves
//!
//! ```text
//! maximize   min_{i != j} |w_i h_i - w_j h_j|
//! subject to sum_i |w_i|^2 = 2^k
//! ```
//!
//! starting from unit weights. Each trial perturbs one uniformly chosen
//! weight by a point drawn uniformly from a disk, rescales the whole vector
//! back onto the power surface and keeps the candidate only if the minimum
//! distance strictly improves. The disk radius shrinks geometrically every
//! `decay_every` accepted steps down to `min_radius`.
//!
//! The labeling search uses the same accept-if-better loop with label swaps
//! as moves and a Hamming cost over the closest point pairs.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constellation::{
    min_distance_of, min_distance_sqr, ComplexScalar, Constellation, Provenance, WeightVector,
};
use crate::error::{MbmError, Result};
use crate::rng::{derive_seed, domain, substream, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSchedule {
    /// Radius of the disk perturbations are drawn from.
    pub initial_radius: f64,
    pub decay_factor: f64,
    /// Accepted steps between radius decays.
    pub decay_every: u64,
    pub min_radius: f64,
    pub max_trials: u64,
    /// Consecutive rejections that end the search.
    pub stall_limit: u64,
}

impl Default for PerturbationSchedule {
    fn default() -> Self {
        PerturbationSchedule {
            initial_radius: 0.5,
            decay_factor: 0.9,
            decay_every: 50,
            min_radius: 1e-4,
            max_trials: 20_000,
            stall_limit: 3_000,
        }
    }
}

impl PerturbationSchedule {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(MbmError::param(format!("invalid schedule: {m}")));
        if !(self.initial_radius.is_finite() && self.initial_radius > 0.0) {
            return bad("initial_radius must be positive");
        }
        if !(self.min_radius.is_finite() && self.min_radius > 0.0) {
            return bad("min_radius must be positive");
        }
        if self.min_radius > self.initial_radius {
            return bad("min_radius exceeds initial_radius");
        }
        if !(self.decay_factor > 0.0 && self.decay_factor <= 1.0) {
            return bad("decay_factor must lie in (0, 1]");
        }
        if self.decay_every == 0 {
            return bad("decay_every must be positive");
        }
        if self.stall_limit == 0 {
            return bad("stall_limit must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialRecord {
    pub trial: u64,
    pub accepted: bool,
    /// Objective of the candidate evaluated at this trial.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationTrace {
    pub iterations: Vec<TrialRecord>,
    pub final_weights: WeightVector,
    pub initial_dmin: f64,
    pub final_dmin: f64,
}

impl OptimizationTrace {
    pub fn accepted_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.iterations
            .iter()
            .filter(|r| r.accepted)
            .map(|r| r.value)
    }
}

/// Minimum pairwise distance of the weighted points `{w_i h_i}`.
pub fn evaluate_metric(points: &[ComplexScalar]) -> Result<f64> {
    Ok(min_distance_of(points)?.d_min)
}

fn weighted_min_distance(
    h: &[ComplexScalar],
    w: &[ComplexScalar],
    buf: &mut Vec<ComplexScalar>,
) -> f64 {
    buf.clear();
    buf.extend(h.iter().zip(w).map(|(h, w)| w * h));
    min_distance_sqr(buf).map_or(0.0, |(d2, _)| d2.sqrt())
}

/// Uniform point in the disk of radius `r` (uniform in area).
fn disk_sample(rng: &mut StreamRng, radius: f64) -> Complex64 {
    let rho = radius * rng.random::<f64>().sqrt();
    let theta = 2.0 * PI * rng.random::<f64>();
    Complex64::from_polar(rho, theta)
}

fn require_open_loop(c: &Constellation) -> Result<()> {
    match c.provenance() {
        Provenance::OpenLoopDraw { .. } => Ok(()),
        other => Err(MbmError::param(format!(
            "weight optimization needs an open-loop draw, got {}",
            other.name()
        ))),
    }
}

/// Runs the perturbation search on the channel states of `c`.
pub fn optimize_weights(
    c: &Constellation,
    sched: &PerturbationSchedule,
    seed: u64,
) -> Result<OptimizationTrace> {
    optimize_weights_observed(c, sched, seed, |_, _| {})
}

/// [`optimize_weights`] with a hook that sees every trial record together
/// with the normalized candidate weights evaluated at that trial.
pub fn optimize_weights_observed<F>(
    c: &Constellation,
    sched: &PerturbationSchedule,
    seed: u64,
    mut observe: F,
) -> Result<OptimizationTrace>
where
    F: FnMut(&TrialRecord, &[ComplexScalar]),
{
    sched.validate()?;
    require_open_loop(c)?;
    let h = c.points();
    let m = h.len();
    if m < 2 {
        return Err(MbmError::param("need at least 2 points"));
    }
    let target = m as f64;
    let mut rng = substream(seed, &[domain::WEIGHT_SEARCH]);

    let mut buf = Vec::with_capacity(m);
    let mut incumbent = vec![Complex64::new(1.0, 0.0); m];
    let initial_dmin = weighted_min_distance(h, &incumbent, &mut buf);
    let mut best = initial_dmin;
    let mut candidate = incumbent.clone();
    let mut radius = sched.initial_radius;
    let mut accepted_steps = 0u64;
    let mut stall = 0u64;
    let mut iterations = Vec::new();

    for trial in 0..sched.max_trials {
        let idx = rng.random_range(0..m);
        let delta = disk_sample(&mut rng, radius);
        candidate.copy_from_slice(&incumbent);
        candidate[idx] += delta;
        let power: f64 = candidate.iter().map(|w| w.norm_sqr()).sum();
        if !(power.is_finite() && power > 0.0) {
            return Err(MbmError::Numeric {
                trial,
                reason: format!("weight power {power}"),
            });
        }
        let alpha = (target / power).sqrt();
        candidate.iter_mut().for_each(|w| *w *= alpha);
        let value = weighted_min_distance(h, &candidate, &mut buf);
        if !value.is_finite() {
            return Err(MbmError::Numeric {
                trial,
                reason: format!("objective {value}"),
            });
        }
        let record = TrialRecord {
            trial,
            accepted: value > best,
            value,
        };
        observe(&record, &candidate);
        iterations.push(record);
        if record.accepted {
            std::mem::swap(&mut incumbent, &mut candidate);
            best = value;
            stall = 0;
            accepted_steps += 1;
            if accepted_steps.is_multiple_of(sched.decay_every) {
                radius = (radius * sched.decay_factor).max(sched.min_radius);
            }
        } else {
            stall += 1;
            if stall >= sched.stall_limit {
                break;
            }
        }
    }

    Ok(OptimizationTrace {
        iterations,
        final_weights: WeightVector::new(c.k(), incumbent)?,
        initial_dmin,
        final_dmin: best,
    })
}

/// Independent restarts with seeds derived from `seed`; returns the run with
/// the largest final distance (earliest restart on ties).
pub fn optimize_weights_multistart(
    c: &Constellation,
    sched: &PerturbationSchedule,
    seed: u64,
    restarts: usize,
) -> Result<OptimizationTrace> {
    if restarts == 0 {
        return Err(MbmError::param("restarts must be positive"));
    }
    let runs = (0..restarts as u64)
        .into_par_iter()
        .map(|r| optimize_weights(c, sched, derive_seed(seed, &[domain::MULTI_START, r])))
        .collect::<Result<Vec<_>>>()?;
    let mut best = None::<OptimizationTrace>;
    for run in runs {
        if best.as_ref().is_none_or(|b| run.final_dmin > b.final_dmin) {
            best = Some(run);
        }
    }
    Ok(best.expect("restarts > 0"))
}

/// Bijection from constellation index to a `k`-bit label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMapping {
    k: u32,
    label_of: Vec<u32>,
}

impl BitMapping {
    pub fn new(k: u32, label_of: Vec<u32>) -> Result<Self> {
        let m = 1usize << k;
        if k == 0 || k > crate::constellation::MAX_BITS || label_of.len() != m {
            return Err(MbmError::param(format!(
                "mapping for k = {k} needs {m} labels, got {}",
                label_of.len()
            )));
        }
        let mut seen = vec![false; m];
        for &l in &label_of {
            let slot = seen
                .get_mut(l as usize)
                .ok_or_else(|| MbmError::param(format!("label {l} out of range")))?;
            if *slot {
                return Err(MbmError::param(format!("label {l} used twice")));
            }
            *slot = true;
        }
        Ok(BitMapping { k, label_of })
    }

    /// Point `i` carries label `i`.
    pub fn natural(k: u32) -> Result<Self> {
        Self::new(k, (0..1u32 << k).collect())
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn label_of(&self) -> &[u32] {
        &self.label_of
    }

    pub fn label(&self, index: usize) -> u32 {
        self.label_of[index]
    }

    /// Bits in which the labels of points `i` and `j` differ.
    pub fn hamming(&self, i: usize, j: usize) -> u32 {
        (self.label_of[i] ^ self.label_of[j]).count_ones()
    }
}

/// The `2^k` closest point pairs (all pairs when fewer exist), ordered by
/// distance with lexicographic index order breaking ties.
pub fn nearest_pairs(points: &[ComplexScalar]) -> Vec<(usize, usize)> {
    let n = points.len();
    let mut pairs: Vec<(f64, usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .map(|(i, j)| ((points[i] - points[j]).norm_sqr(), i, j))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    pairs.truncate(n);
    pairs.into_iter().map(|(_, i, j)| (i, j)).collect()
}

/// Sum of label Hamming distances over `pairs`.
pub fn hamming_cost(labels: &[u32], pairs: &[(usize, usize)]) -> u64 {
    pairs
        .iter()
        .map(|&(i, j)| (labels[i] ^ labels[j]).count_ones() as u64)
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MappingTrace {
    /// `value` holds the Hamming cost of each candidate.
    pub iterations: Vec<TrialRecord>,
    pub mapping: BitMapping,
    pub initial_cost: u64,
    pub final_cost: u64,
}

/// Swap search for a labeling that keeps the closest points at small
/// Hamming distance. Only `max_trials` and `stall_limit` of the schedule
/// apply here.
pub fn optimize_bit_mapping(
    c: &Constellation,
    sched: &PerturbationSchedule,
    seed: u64,
) -> Result<MappingTrace> {
    sched.validate()?;
    let m = c.len();
    let pairs = nearest_pairs(c.points());
    let mut labels: Vec<u32> = (0..m as u32).collect();
    let initial_cost = hamming_cost(&labels, &pairs);
    let mut best = initial_cost;
    let mut iterations = Vec::new();
    let mut rng = substream(seed, &[domain::MAPPING_SEARCH]);
    let mut stall = 0u64;

    for trial in 0..sched.max_trials {
        if best == 0 || m < 2 {
            break;
        }
        let a = rng.random_range(0..m);
        let mut b = rng.random_range(0..m - 1);
        if b >= a {
            b += 1;
        }
        labels.swap(a, b);
        let cost = hamming_cost(&labels, &pairs);
        let accepted = cost < best;
        iterations.push(TrialRecord {
            trial,
            accepted,
            value: cost as f64,
        });
        if accepted {
            best = cost;
            stall = 0;
        } else {
            labels.swap(a, b);
            stall += 1;
            if stall >= sched.stall_limit {
                break;
            }
        }
    }

    Ok(MappingTrace {
        iterations,
        mapping: BitMapping::new(c.k(), labels)?,
        initial_cost,
        final_cost: best,
    })
}
