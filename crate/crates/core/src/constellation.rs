//! Constellations, weight vectors and the exact minimum-distance kernel.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{MbmError, Result};
use crate::rng::{domain, substream};

/// Complex amplitude; every constellation point and weight is one of these.
pub type ComplexScalar = Complex64;

/// Largest supported bits-per-symbol. Pair scans are `O(4^k)`.
pub const MAX_BITS: u32 = 16;

/// Relative tolerance on `sum |w_i|^2 == 2^k`.
pub const POWER_TOLERANCE: f64 = 1e-9;

/// Tolerance on the unit average energy of reference grids.
pub const REFERENCE_ENERGY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Raw channel states drawn i.i.d. `CN(0, 1)` from the given seed.
    OpenLoopDraw {
        seed: u64,
    },
    /// Weighted states `w_i * h_i`; carries the seed of the source draw if known.
    ClosedLoop {
        source_seed: Option<u64>,
    },
    ReferenceQam,
    ReferencePsk,
}

impl Provenance {
    pub fn name(&self) -> &'static str {
        match self {
            Provenance::OpenLoopDraw { .. } => "open_loop_draw",
            Provenance::ClosedLoop { .. } => "closed_loop",
            Provenance::ReferenceQam => "reference_qam",
            Provenance::ReferencePsk => "reference_psk",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match *self {
            Provenance::OpenLoopDraw { seed } => Some(seed),
            Provenance::ClosedLoop { source_seed } => source_seed,
            _ => None,
        }
    }

    pub fn is_reference(&self) -> bool {
        matches!(self, Provenance::ReferenceQam | Provenance::ReferencePsk)
    }
}

fn check_bits(k: u32) -> Result<usize> {
    if k == 0 || k > MAX_BITS {
        return Err(MbmError::param(format!(
            "bits per symbol k must be in 1..={MAX_BITS}, got {k}"
        )));
    }
    Ok(1usize << k)
}

fn check_finite(points: &[ComplexScalar], what: &str) -> Result<()> {
    match points
        .iter()
        .position(|p| !p.re.is_finite() || !p.im.is_finite())
    {
        Some(i) => Err(MbmError::param(format!("{what} {i} is not finite"))),
        None => Ok(()),
    }
}

/// Average energy `(1/M) sum |p_i|^2`.
pub fn average_energy(points: &[ComplexScalar]) -> f64 {
    points.iter().map(|p| p.norm_sqr()).sum::<f64>() / points.len() as f64
}

/// An ordered set of `2^k` finite complex points.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    k: u32,
    points: Vec<ComplexScalar>,
    provenance: Provenance,
}

impl Constellation {
    pub fn new(k: u32, points: Vec<ComplexScalar>, provenance: Provenance) -> Result<Self> {
        let m = check_bits(k)?;
        if points.len() != m {
            return Err(MbmError::param(format!(
                "k = {k} requires {m} points, got {}",
                points.len()
            )));
        }
        check_finite(&points, "point")?;
        if provenance.is_reference() {
            let es = average_energy(&points);
            if (es - 1.0).abs() > REFERENCE_ENERGY_TOLERANCE {
                return Err(MbmError::param(format!(
                    "reference constellation must have unit average energy, got {es}"
                )));
            }
        }
        Ok(Constellation {
            k,
            points,
            provenance,
        })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[ComplexScalar] {
        &self.points
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn average_energy(&self) -> f64 {
        average_energy(&self.points)
    }
}

/// Complex weights satisfying `sum |w_i|^2 = 2^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    k: u32,
    weights: Vec<ComplexScalar>,
}

impl WeightVector {
    pub fn new(k: u32, weights: Vec<ComplexScalar>) -> Result<Self> {
        let m = check_bits(k)?;
        if weights.len() != m {
            return Err(MbmError::param(format!(
                "k = {k} requires {m} weights, got {}",
                weights.len()
            )));
        }
        check_finite(&weights, "weight")?;
        let power: f64 = weights.iter().map(|w| w.norm_sqr()).sum();
        let target = m as f64;
        if ((power - target) / target).abs() > POWER_TOLERANCE {
            return Err(MbmError::param(format!(
                "weight power {power} violates sum |w|^2 = {target}"
            )));
        }
        Ok(WeightVector { k, weights })
    }

    /// All-ones weights, the open-loop configuration.
    pub fn unit(k: u32) -> Result<Self> {
        let m = check_bits(k)?;
        Ok(WeightVector {
            k,
            weights: vec![Complex64::new(1.0, 0.0); m],
        })
    }

    /// Rescales arbitrary nonzero weights onto the power-equality surface.
    pub fn normalized(k: u32, mut weights: Vec<ComplexScalar>) -> Result<Self> {
        let m = check_bits(k)?;
        let power: f64 = weights.iter().map(|w| w.norm_sqr()).sum();
        if !(power.is_finite() && power > 0.0) {
            return Err(MbmError::param("weights must have finite nonzero power"));
        }
        let alpha = (m as f64 / power).sqrt();
        weights.iter_mut().for_each(|w| *w *= alpha);
        Self::new(k, weights)
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn weights(&self) -> &[ComplexScalar] {
        &self.weights
    }

    pub fn power(&self) -> f64 {
        self.weights.iter().map(|w| w.norm_sqr()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceReport {
    pub d_min: f64,
    /// Lexicographically smallest `(i, j)`, `i < j`, attaining `d_min`.
    pub argmin_pair: (usize, usize),
    pub all_pairs_count: usize,
}

/// Draws `2^k` i.i.d. `CN(0, 1)` channel states.
///
/// Point `i` takes the `2i`-th and `2i+1`-th standard normals of the
/// `OPEN_LOOP_DRAW` substream for `seed`, scaled by `1/sqrt(2)`.
pub fn draw_open_loop(k: u32, seed: u64) -> Result<Constellation> {
    let m = check_bits(k)?;
    let points = draw_cn_points(m, &mut substream(seed, &[domain::OPEN_LOOP_DRAW]));
    Constellation::new(k, points, Provenance::OpenLoopDraw { seed })
}

pub(crate) fn draw_cn_points<R: rand::Rng>(m: usize, rng: &mut R) -> Vec<ComplexScalar> {
    (0..m)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
        })
        .collect()
}

/// Squared minimum distance and its lexicographically first pair.
///
/// Works on squared norms so ties are decided without a square root.
pub fn min_distance_sqr(points: &[ComplexScalar]) -> Option<(f64, (usize, usize))> {
    let mut best: Option<(f64, (usize, usize))> = None;
    for (i, a) in points.iter().enumerate() {
        for (j, b) in points.iter().enumerate().skip(i + 1) {
            let d2 = (a - b).norm_sqr();
            if best.is_none_or(|(b2, _)| d2 < b2) {
                best = Some((d2, (i, j)));
            }
        }
    }
    best
}

/// Exact minimum pairwise Euclidean distance of a point list.
pub fn min_distance_of(points: &[ComplexScalar]) -> Result<DistanceReport> {
    let n = points.len();
    let (d2, pair) = min_distance_sqr(points)
        .ok_or_else(|| MbmError::param(format!("need at least 2 points, got {n}")))?;
    Ok(DistanceReport {
        d_min: d2.sqrt(),
        argmin_pair: pair,
        all_pairs_count: n * (n - 1) / 2,
    })
}

pub fn min_pairwise_distance(c: &Constellation) -> Result<DistanceReport> {
    min_distance_of(c.points())
}

/// Closed-loop constellation `{w_i h_i}`.
pub fn apply_weights(c: &Constellation, w: &WeightVector) -> Result<Constellation> {
    if c.k() != w.k() {
        return Err(MbmError::param(format!(
            "constellation has k = {} but weights have k = {}",
            c.k(),
            w.k()
        )));
    }
    let source_seed = match c.provenance() {
        Provenance::OpenLoopDraw { seed } => Some(seed),
        other => {
            return Err(MbmError::param(format!(
                "weights apply to open-loop draws, not {}",
                other.name()
            )))
        }
    };
    let points = c
        .points()
        .iter()
        .zip(w.weights())
        .map(|(h, w)| w * h)
        .collect();
    Constellation::new(c.k(), points, Provenance::ClosedLoop { source_seed })
}

/// Square M-QAM with unit average energy, row-major over
/// in-phase then quadrature levels `-(m-1), ..., m-1`.
pub fn reference_qam(k: u32) -> Result<Constellation> {
    if !matches!(k, 2 | 4 | 6) {
        return Err(MbmError::param(format!(
            "square QAM needs k in {{2, 4, 6}}, got {k}"
        )));
    }
    let side = 1usize << (k / 2);
    let m = side * side;
    let scale = (2.0 * (m as f64 - 1.0) / 3.0).sqrt();
    let level = |i: usize| (2.0 * i as f64 - (side as f64 - 1.0)) / scale;
    let points = (0..side)
        .flat_map(|i| (0..side).map(move |q| Complex64::new(level(i), level(q))))
        .collect();
    Constellation::new(k, points, Provenance::ReferenceQam)
}

/// Unit-energy M-PSK, point `i` at phase `2 pi i / M` (plus `pi/4` for QPSK).
pub fn reference_psk(k: u32) -> Result<Constellation> {
    let m = check_bits(k)?;
    let offset = if m == 4 { PI / 4.0 } else { 0.0 };
    let points = (0..m)
        .map(|i| Complex64::from_polar(1.0, offset + 2.0 * PI * i as f64 / m as f64))
        .collect();
    Constellation::new(k, points, Provenance::ReferencePsk)
}
