//! Monte Carlo symbol- and bit-error-rate simulation with ML detection.
//!
//! Trials at each SNR point are cut into fixed blocks of [`BLOCK_TRIALS`].
//! Block `b` of SNR point `p` draws from its own substream
//! `(seed, SIMULATION, p, b)`, so the counts do not depend on how blocks are
//! spread over shards. Shards process blocks in rounds; the reduction walks
//! blocks in index order and applies the early-stop rule after each one,
//! discarding speculative work past the stopping block.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constellation::{
    apply_weights, average_energy, draw_open_loop, ComplexScalar, Constellation, Provenance,
};
use crate::error::{MbmError, Result};
use crate::optimizer::{optimize_weights, BitMapping, PerturbationSchedule};
use crate::rng::{derive_seed, domain, substream, StreamRng};

pub const BLOCK_TRIALS: u64 = 1024;
pub const DEFAULT_MIN_ERRORS: u64 = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    /// Raw channel states as the constellation, additive noise only.
    RayleighMbmOpen,
    /// Weighted channel states as the constellation, additive noise only.
    RayleighMbmClosed,
    /// Fresh `CN(0, 1)` fade per symbol, coherent detection.
    RayleighQam,
    AwgnQam,
    /// Any fixed constellation over AWGN.
    AwgnMbmShaped,
}

impl ChannelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ChannelKind::RayleighMbmOpen => "rayleigh_mbm_open",
            ChannelKind::RayleighMbmClosed => "rayleigh_mbm_closed",
            ChannelKind::RayleighQam => "rayleigh_qam",
            ChannelKind::AwgnQam => "awgn_qam",
            ChannelKind::AwgnMbmShaped => "awgn_mbm_shaped",
        }
    }

    pub fn fast_fading(&self) -> bool {
        matches!(self, ChannelKind::RayleighQam)
    }
}

impl std::str::FromStr for ChannelKind {
    type Err = MbmError;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_owned()))
            .map_err(|_| MbmError::param(format!("unknown channel '{s}'")))
    }
}

/// Energy that sets `N0 = Es / snr` when averaging over channel draws.
///
/// A single constellation is always simulated at its own average energy;
/// the choice only matters for [`average_over_channels`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnrReference {
    /// Mean received energy over all symbols and all draws of the run, so
    /// every draw shares one `N0` per SNR point.
    #[default]
    Ensemble,
    /// Each draw normalized to its own average energy.
    Constellation,
}

fn default_min_errors() -> u64 {
    DEFAULT_MIN_ERRORS
}

fn default_shards() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Es/N0 grid in dB, strictly increasing.
    pub snr_grid_db: Vec<f64>,
    pub trials_per_point: u64,
    /// Early-stop floor; `0` disables early stopping.
    #[serde(default = "default_min_errors")]
    pub min_errors: u64,
    pub channel: ChannelKind,
    pub seed: u64,
    #[serde(default = "default_shards")]
    pub shards: usize,
    #[serde(default)]
    pub snr_reference: SnrReference,
}

impl SimConfig {
    pub fn new(
        snr_grid_db: Vec<f64>,
        trials_per_point: u64,
        channel: ChannelKind,
        seed: u64,
    ) -> Self {
        SimConfig {
            snr_grid_db,
            trials_per_point,
            min_errors: DEFAULT_MIN_ERRORS,
            channel,
            seed,
            shards: 1,
            snr_reference: SnrReference::Ensemble,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials_per_point == 0 {
            return Err(MbmError::param("trials_per_point must be positive"));
        }
        if self.shards == 0 {
            return Err(MbmError::param("shards must be positive"));
        }
        if self.snr_grid_db.is_empty() {
            return Err(MbmError::param("SNR grid is empty"));
        }
        if self.snr_grid_db.iter().any(|s| !s.is_finite()) {
            return Err(MbmError::param("SNR grid contains non-finite values"));
        }
        if self.snr_grid_db.windows(2).any(|w| w[1] <= w[0]) {
            return Err(MbmError::param("SNR grid must be strictly increasing"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SerRow {
    pub snr_db: f64,
    pub errors: u64,
    pub trials: u64,
    /// `errors / trials`.
    pub rate: f64,
}

impl SerRow {
    fn new(snr_db: f64, errors: u64, trials: u64) -> Self {
        SerRow {
            snr_db,
            errors,
            trials,
            rate: errors as f64 / trials as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SerCurve {
    pub rows: Vec<SerRow>,
    pub label: String,
    /// Average energy of each simulated constellation.
    pub symbol_energies: Vec<f64>,
    /// Energy `Es` that set `N0 = Es / snr`, one entry per constellation.
    pub reference_energies: Vec<f64>,
}

impl SerCurve {
    /// SNR at which the curve crosses `target`, interpolating linearly in
    /// `log10(rate)` between the first bracketing pair of rows.
    pub fn snr_at_rate(&self, target: f64) -> Option<f64> {
        self.rows.windows(2).find_map(|w| {
            let (a, b) = (w[0], w[1]);
            if a.rate >= target && b.rate < target {
                if b.rate <= 0.0 {
                    return Some(b.snr_db);
                }
                let (la, lb, lt) = (a.rate.log10(), b.rate.log10(), target.log10());
                Some(a.snr_db + (lt - la) / (lb - la) * (b.snr_db - a.snr_db))
            } else {
                None
            }
        })
    }

    pub fn rates(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.rate).collect()
    }
}

/// Index of the point closest to `y`; lowest index on ties.
#[inline]
pub fn ml_detect(points: &[ComplexScalar], y: ComplexScalar) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, p) in points.iter().enumerate() {
        let d = (y - p).norm_sqr();
        if d < best_d {
            best_d = d;
            best = j;
        }
    }
    best
}

/// Same as [`ml_detect`] for the faded constellation `{h p_j}`.
#[inline]
fn ml_detect_faded(points: &[ComplexScalar], h: ComplexScalar, y: ComplexScalar) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, p) in points.iter().enumerate() {
        let d = (y - h * p).norm_sqr();
        if d < best_d {
            best_d = d;
            best = j;
        }
    }
    best
}

#[inline]
fn complex_gaussian(rng: &mut StreamRng, sigma: f64) -> ComplexScalar {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    ComplexScalar::new(re * sigma, im * sigma)
}

/// Noise power for an Es/N0 given in dB.
pub fn noise_power(symbol_energy: f64, snr_db: f64) -> f64 {
    symbol_energy / 10f64.powf(snr_db / 10.0)
}

#[derive(Clone, Copy)]
enum Counting<'a> {
    Symbols,
    Bits(&'a BitMapping),
}

impl Counting<'_> {
    #[inline]
    fn errors(&self, tx: usize, rx: usize) -> u64 {
        match self {
            Counting::Symbols => (tx != rx) as u64,
            Counting::Bits(m) => m.hamming(tx, rx) as u64,
        }
    }

    fn units_per_trial(&self) -> u64 {
        match self {
            Counting::Symbols => 1,
            Counting::Bits(m) => m.k() as u64,
        }
    }
}

struct PointJob<'a> {
    points: &'a [ComplexScalar],
    fading: bool,
    n0: f64,
    seed: u64,
    point_index: u64,
    counting: Counting<'a>,
}

impl PointJob<'_> {
    fn run_block(&self, block: u64, trials: u64) -> u64 {
        let mut rng = substream(self.seed, &[domain::SIMULATION, self.point_index, block]);
        let sigma = (self.n0 / 2.0).sqrt();
        let m = self.points.len();
        let mut errors = 0;
        for _ in 0..trials {
            let tx = rng.random_range(0..m);
            let rx = if self.fading {
                let h = complex_gaussian(&mut rng, std::f64::consts::FRAC_1_SQRT_2);
                let y = h * self.points[tx] + complex_gaussian(&mut rng, sigma);
                ml_detect_faded(self.points, h, y)
            } else {
                let y = self.points[tx] + complex_gaussian(&mut rng, sigma);
                ml_detect(self.points, y)
            };
            errors += self.counting.errors(tx, rx);
        }
        errors
    }
}

/// Returns `(errors, trials)` for one SNR point.
fn run_point(job: &PointJob<'_>, trials: u64, min_errors: u64, shards: usize) -> (u64, u64) {
    let blocks = trials.div_ceil(BLOCK_TRIALS);
    let block_len = |b: u64| BLOCK_TRIALS.min(trials - b * BLOCK_TRIALS);
    let (mut errors, mut done) = (0u64, 0u64);
    let mut next = 0u64;
    while next < blocks {
        let end = (next + shards as u64).min(blocks);
        let round: Vec<u64> = (next..end)
            .into_par_iter()
            .map(|b| job.run_block(b, block_len(b)))
            .collect();
        for (b, e) in (next..end).zip(round) {
            errors += e;
            done += block_len(b);
            if min_errors > 0 && errors >= min_errors && done * 10 >= trials {
                return (errors, done);
            }
        }
        next = end;
    }
    (errors, done)
}

fn check_channel(c: &Constellation, channel: ChannelKind) -> Result<()> {
    let ok = match channel {
        ChannelKind::RayleighMbmOpen => matches!(c.provenance(), Provenance::OpenLoopDraw { .. }),
        ChannelKind::RayleighMbmClosed => matches!(c.provenance(), Provenance::ClosedLoop { .. }),
        _ => true,
    };
    if ok {
        Ok(())
    } else {
        Err(MbmError::param(format!(
            "channel {} cannot simulate a {} constellation",
            channel.name(),
            c.provenance().name()
        )))
    }
}

fn simulate(
    c: &Constellation,
    cfg: &SimConfig,
    counting: Counting<'_>,
    reference: Option<f64>,
    label: String,
) -> Result<SerCurve> {
    cfg.validate()?;
    if c.len() < 2 {
        return Err(MbmError::param("constellation needs at least 2 points"));
    }
    check_channel(c, cfg.channel)?;
    let es = average_energy(c.points());
    let reference = reference.unwrap_or(es);
    if !(reference.is_finite() && reference > 0.0) {
        return Err(MbmError::param(format!(
            "symbol energy must be positive, got {reference}"
        )));
    }
    let units = counting.units_per_trial();
    let rows = cfg
        .snr_grid_db
        .iter()
        .enumerate()
        .map(|(p, &snr)| {
            let job = PointJob {
                points: c.points(),
                fading: cfg.channel.fast_fading(),
                n0: noise_power(reference, snr),
                seed: cfg.seed,
                point_index: p as u64,
                counting,
            };
            let (errors, trials) =
                run_point(&job, cfg.trials_per_point, cfg.min_errors, cfg.shards);
            SerRow::new(snr, errors, trials * units)
        })
        .collect();
    Ok(SerCurve {
        rows,
        label,
        symbol_energies: vec![es],
        reference_energies: vec![reference],
    })
}

fn ser_label(cfg: &SimConfig, k: u32) -> String {
    format!("ser_{}_k{}", cfg.channel.name(), k)
}

/// Symbol error rate of `c` on the configured channel, with noise set from
/// the average energy of `c`.
pub fn simulate_ser(c: &Constellation, cfg: &SimConfig) -> Result<SerCurve> {
    simulate(c, cfg, Counting::Symbols, None, ser_label(cfg, c.k()))
}

/// Uncoded bit error rate; `trials` counts transmitted bits.
pub fn simulate_ber_uncoded(
    c: &Constellation,
    mapping: &BitMapping,
    cfg: &SimConfig,
) -> Result<SerCurve> {
    if mapping.k() != c.k() {
        return Err(MbmError::param(format!(
            "mapping has k = {} but constellation has k = {}",
            mapping.k(),
            c.k()
        )));
    }
    simulate(
        c,
        cfg,
        Counting::Bits(mapping),
        None,
        format!("ber_{}_k{}", cfg.channel.name(), c.k()),
    )
}

/// Seeds used for channel draw `d` of an averaged run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DrawSeeds {
    pub channel: u64,
    pub optimizer: u64,
    pub noise: u64,
}

pub fn draw_seeds(seed: u64, draw: u64) -> DrawSeeds {
    DrawSeeds {
        channel: derive_seed(seed, &[domain::CHANNEL_DRAW, draw]),
        optimizer: derive_seed(seed, &[domain::WEIGHT_SEARCH, draw]),
        noise: derive_seed(seed, &[domain::SIMULATION, draw]),
    }
}

/// Pooled SER over `draws` seeded open-loop constellations, optionally
/// shaped by the weight optimizer with the default schedule.
pub fn average_over_channels(
    k: u32,
    cfg: &SimConfig,
    draws: u64,
    optimize: bool,
) -> Result<SerCurve> {
    let sched = optimize.then(PerturbationSchedule::default);
    average_over_channels_with(k, cfg, draws, sched.as_ref())
}

/// As [`average_over_channels`] with an explicit schedule; `None` keeps the
/// open-loop constellations.
///
/// Every draw runs the full `trials_per_point` (no early stop) so that the
/// pooled rate is the plain mean of per-draw rates. Noise follows
/// `cfg.snr_reference`.
pub fn average_over_channels_with(
    k: u32,
    cfg: &SimConfig,
    draws: u64,
    sched: Option<&PerturbationSchedule>,
) -> Result<SerCurve> {
    cfg.validate()?;
    if draws == 0 {
        return Err(MbmError::param("draws must be positive"));
    }
    let expected = if sched.is_some() {
        ChannelKind::RayleighMbmClosed
    } else {
        ChannelKind::RayleighMbmOpen
    };
    if cfg.channel != expected {
        return Err(MbmError::param(format!(
            "averaging over channel draws with this setting needs channel {}, got {}",
            expected.name(),
            cfg.channel.name()
        )));
    }
    let constellations = (0..draws)
        .into_par_iter()
        .map(|d| {
            let seeds = draw_seeds(cfg.seed, d);
            let open = draw_open_loop(k, seeds.channel)?;
            match sched {
                Some(s) => apply_weights(
                    &open,
                    &optimize_weights(&open, s, seeds.optimizer)?.final_weights,
                ),
                None => Ok(open),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let ensemble = match cfg.snr_reference {
        SnrReference::Ensemble => Some(
            constellations
                .iter()
                .map(Constellation::average_energy)
                .sum::<f64>()
                / draws as f64,
        ),
        SnrReference::Constellation => None,
    };
    let per_draw = constellations
        .par_iter()
        .enumerate()
        .map(|(d, c)| {
            let draw_cfg = SimConfig {
                seed: draw_seeds(cfg.seed, d as u64).noise,
                min_errors: 0,
                ..cfg.clone()
            };
            simulate(c, &draw_cfg, Counting::Symbols, ensemble, ser_label(cfg, k))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows: Vec<SerRow> = cfg
        .snr_grid_db
        .iter()
        .map(|&s| SerRow::new(s, 0, 0))
        .collect();
    let mut energies = Vec::with_capacity(per_draw.len());
    let mut references = Vec::with_capacity(per_draw.len());
    for curve in &per_draw {
        for (acc, r) in rows.iter_mut().zip(&curve.rows) {
            acc.errors += r.errors;
            acc.trials += r.trials;
        }
        energies.extend_from_slice(&curve.symbol_energies);
        references.extend_from_slice(&curve.reference_energies);
    }
    let rows = rows
        .into_iter()
        .map(|r| SerRow::new(r.snr_db, r.errors, r.trials))
        .collect();
    Ok(SerCurve {
        rows,
        label: format!("ser_{}_k{}_avg{}", cfg.channel.name(), k, draws),
        symbol_energies: energies,
        reference_energies: references,
    })
}
