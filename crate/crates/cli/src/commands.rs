use std::path::Path;

use mbm_core::analytic;
use mbm_core::channel::{self, ChannelKind, SimConfig};
use mbm_core::io::{self, MappingFile, PdfRow, WeightFile};
use mbm_core::optimizer::{self, BitMapping, PerturbationSchedule};
use mbm_core::stats::{self, DminMode, Histogram};
use mbm_core::{apply_weights, draw_open_loop, reference_qam, Constellation, MbmError};
use serde::Serialize;
use serde_json::json;

use crate::args::{
    AnalyticArgs, DminStatsArgs, GenArgs, MetricArg, ModeArg, OptimizeArgs, SimulateArgs,
    StatisticArg,
};
use crate::error::{usage, Result};
use crate::manifest::{read_file, sibling, RunManifest};

/// Channel draws averaged by `simulate` when `--draws` is omitted.
const DEFAULT_DRAWS: u64 = 100;
/// Resolution of the analytic overlay written by `dmin-stats`.
const PDF_POINTS: usize = 400;

/// Drops the directory part of argv[0] so manifests do not depend on where
/// the binary lives.
fn normalized_argv(argv: &[String]) -> Vec<String> {
    let mut out = argv.to_vec();
    if let Some(first) = out.first_mut() {
        *first = "mbm".to_owned();
    }
    out
}

fn to_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).unwrap_or(serde_json::Value::Null)
}

fn load_constellation(path: &Path) -> Result<Constellation> {
    Ok(io::constellation_from_json(&read_file(path)?)?)
}

/// Accepts inline JSON (anything starting with `{`) or a path to a JSON file.
pub fn load_schedule(spec: Option<&str>) -> Result<PerturbationSchedule> {
    let Some(spec) = spec else {
        return Ok(PerturbationSchedule::default());
    };
    let text = if spec.trim_start().starts_with('{') {
        spec.to_owned()
    } else {
        read_file(Path::new(spec))?
    };
    let sched: PerturbationSchedule = io::from_json(&text)?;
    sched.validate()?;
    Ok(sched)
}

/// `lo:step:hi` (inclusive of `hi` when it lies on the grid), `a,b,c`, or a
/// single value.
pub fn parse_snr_grid(spec: &str) -> Result<Vec<f64>> {
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| usage(format!("invalid SNR value '{s}'")))
    };
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        [lo, step, hi] => {
            let (lo, step, hi) = (num(lo)?, num(step)?, num(hi)?);
            if !(step > 0.0 && step.is_finite()) || !lo.is_finite() || !hi.is_finite() || hi < lo {
                return Err(usage(format!("invalid SNR range '{spec}'")));
            }
            let n = ((hi - lo) / step + 1e-9).floor() as usize;
            Ok((0..=n).map(|i| lo + i as f64 * step).collect())
        }
        [single] => single.split(',').map(num).collect(),
        _ => Err(usage(format!("invalid SNR grid '{spec}'"))),
    }
}

pub fn gen(a: &GenArgs, argv: &[String]) -> Result<()> {
    let c = draw_open_loop(a.k, a.seed)?;
    let mut m = RunManifest::new(&normalized_argv(argv), json!({ "k": a.k }), vec![a.seed]);
    m.emit(&a.out, &io::constellation_to_json(&c)?)?;
    m.finish(&a.out)?;
    Ok(())
}

pub fn optimize(a: &OptimizeArgs, argv: &[String]) -> Result<()> {
    let sched = load_schedule(a.schedule_json.as_deref())?;
    let input = load_constellation(&a.input)?;
    let config = json!({
        "metric": a.metric,
        "schedule": sched,
        "restarts": a.restarts,
    });
    let mut m = RunManifest::new(&normalized_argv(argv), config, vec![a.seed]);

    match a.metric {
        MetricArg::Euclidean => {
            if a.weights.is_some() {
                return Err(usage("--weights only applies to --metric hamming"));
            }
            let trace = if a.restarts == 1 {
                optimizer::optimize_weights(&input, &sched, a.seed)?
            } else {
                optimizer::optimize_weights_multistart(&input, &sched, a.seed, a.restarts)?
            };
            let file = WeightFile::new(&trace.final_weights, trace.final_dmin);
            m.emit(&a.out, &io::to_json(&file)?)?;
            if let Some(t) = &a.trace {
                m.emit(t, &io::trace_to_csv(&trace.iterations)?)?;
            }
            println!(
                "d_min {:.6} -> {:.6} after {} trials",
                trace.initial_dmin,
                trace.final_dmin,
                trace.iterations.len()
            );
        }
        MetricArg::Hamming => {
            if a.restarts != 1 {
                return Err(usage("--restarts only applies to --metric euclidean"));
            }
            let shaped = match &a.weights {
                Some(p) => {
                    let w: WeightFile = io::from_json(&read_file(p)?)?;
                    apply_weights(&input, &w.weight_vector()?)?
                }
                None => input,
            };
            let trace = optimizer::optimize_bit_mapping(&shaped, &sched, a.seed)?;
            let file = MappingFile::new(&trace.mapping, trace.final_cost);
            m.emit(&a.out, &io::to_json(&file)?)?;
            if let Some(t) = &a.trace {
                m.emit(t, &io::trace_to_csv(&trace.iterations)?)?;
            }
            println!(
                "hamming cost {} -> {} after {} trials",
                trace.initial_cost,
                trace.final_cost,
                trace.iterations.len()
            );
        }
    }
    m.finish(&a.out)?;
    Ok(())
}

fn sim_config(a: &SimulateArgs) -> Result<SimConfig> {
    let base: Option<SimConfig> = match &a.config {
        Some(p) => Some(io::from_json(&read_file(p)?)?),
        None => None,
    };
    let grid = match (&a.snr, &base) {
        (Some(s), _) => parse_snr_grid(s)?,
        (None, Some(b)) => b.snr_grid_db.clone(),
        (None, None) => return Err(usage("--snr is required")),
    };
    let channel: ChannelKind = match (a.channel, &base) {
        (Some(c), _) => c.into(),
        (None, Some(b)) => b.channel,
        (None, None) => return Err(usage("--channel is required")),
    };
    let trials = match (a.trials, &base) {
        (Some(t), _) => t,
        (None, Some(b)) => b.trials_per_point,
        (None, None) => return Err(usage("--trials is required")),
    };
    let mut cfg = base.unwrap_or_else(|| SimConfig::new(Vec::new(), 0, channel, 0));
    cfg.snr_grid_db = grid;
    cfg.channel = channel;
    cfg.trials_per_point = trials;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(s) = a.shards {
        cfg.shards = s;
    }
    if let Some(e) = a.min_errors {
        cfg.min_errors = e;
    }
    if let Some(r) = a.snr_reference {
        cfg.snr_reference = r.into();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_mapping(path: Option<&Path>) -> Result<Option<BitMapping>> {
    path.map(|p| -> Result<BitMapping> {
        let f: MappingFile = io::from_json(&read_file(p)?)?;
        Ok(f.mapping()?)
    })
    .transpose()
}

fn run_single(
    c: &Constellation,
    mapping: Option<&BitMapping>,
    cfg: &SimConfig,
) -> Result<channel::SerCurve> {
    Ok(match mapping {
        Some(m) => channel::simulate_ber_uncoded(c, m, cfg)?,
        None => channel::simulate_ser(c, cfg)?,
    })
}

pub fn simulate(a: &SimulateArgs, argv: &[String]) -> Result<()> {
    let cfg = sim_config(a)?;
    let mapping = load_mapping(a.mapping.as_deref())?;
    let mut extra = serde_json::Map::new();

    let curve = match &a.constellation {
        Some(path) => {
            if a.draws.is_some() {
                return Err(usage("--draws does not apply with --const"));
            }
            let mut c = load_constellation(path)?;
            if let Some(k) = a.k.filter(|&k| k != c.k()) {
                return Err(usage(format!(
                    "--k {k} disagrees with constellation k = {}",
                    c.k()
                )));
            }
            if let Some(wp) = &a.weights {
                if cfg.channel != ChannelKind::RayleighMbmClosed {
                    return Err(usage("--weights requires --channel rayleigh_mbm_closed"));
                }
                let w: WeightFile = io::from_json(&read_file(wp)?)?;
                c = apply_weights(&c, &w.weight_vector()?)?;
            }
            run_single(&c, mapping.as_ref(), &cfg)?
        }
        None => {
            let k =
                a.k.ok_or_else(|| usage("--k is required without --const"))?;
            if a.weights.is_some() {
                return Err(usage("--weights requires --const"));
            }
            match cfg.channel {
                ChannelKind::RayleighQam | ChannelKind::AwgnQam => {
                    if a.draws.is_some() {
                        return Err(usage("--draws only applies to MBM channels"));
                    }
                    run_single(&reference_qam(k)?, mapping.as_ref(), &cfg)?
                }
                ChannelKind::RayleighMbmOpen | ChannelKind::RayleighMbmClosed => {
                    if mapping.is_some() {
                        return Err(usage("--mapping requires --const"));
                    }
                    let draws = a.draws.unwrap_or(DEFAULT_DRAWS);
                    let sched = match cfg.channel {
                        ChannelKind::RayleighMbmClosed => {
                            Some(load_schedule(a.schedule_json.as_deref())?)
                        }
                        _ => None,
                    };
                    extra.insert("draws".into(), json!(draws));
                    if let Some(s) = &sched {
                        extra.insert("schedule".into(), to_value(s));
                    }
                    channel::average_over_channels_with(k, &cfg, draws, sched.as_ref())?
                }
                ChannelKind::AwgnMbmShaped => {
                    return Err(usage("--channel awgn_mbm_shaped requires --const"));
                }
            }
        }
    };

    let mut config = json!({ "sim": cfg });
    if let Some(obj) = config.as_object_mut() {
        obj.extend(extra);
    }
    let mut m = RunManifest::new(&normalized_argv(argv), config, vec![cfg.seed]);
    m.emit(&a.out, &io::curves_to_csv(std::slice::from_ref(&curve))?)?;
    m.finish(&a.out)?;
    for r in &curve.rows {
        println!(
            "{:>8.3} dB  {:>10} / {:<10} {:.6e}",
            r.snr_db, r.errors, r.trials, r.rate
        );
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct AnalyticReport {
    k: u32,
    mean_dmin_bound: f64,
    qam_rayleigh_dmin: f64,
    eta_bound: f64,
    eta_limit: f64,
}

pub fn analytic(a: &AnalyticArgs) -> Result<()> {
    let r = AnalyticReport {
        k: a.k,
        mean_dmin_bound: analytic::analytic_mean_dmin_bound(a.k)?,
        qam_rayleigh_dmin: analytic::analytic_qam_rayleigh_dmin(a.k)?,
        eta_bound: analytic::analytic_eta_bound(a.k)?,
        eta_limit: analytic::eta_limit(),
    };
    if a.json {
        print!("{}", io::to_json(&r)?);
    } else {
        println!("k = {}", r.k);
        println!("mean_dmin_bound = {}", r.mean_dmin_bound);
        println!("qam_rayleigh_dmin = {}", r.qam_rayleigh_dmin);
        println!("eta_bound = {}", r.eta_bound);
        println!("eta_limit = {}", r.eta_limit);
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct DminSummary {
    k: u32,
    draws: u64,
    statistic: StatisticArg,
    mode: ModeArg,
    mean: f64,
    median: f64,
    std_dev: f64,
    analytic_mean_dmin_bound: f64,
    /// KS distance to the closed-form CDF of the paired statistic.
    ks_paired_cdf: Option<f64>,
}

pub fn dmin_stats(a: &DminStatsArgs, argv: &[String]) -> Result<()> {
    let samples = match (a.statistic, a.mode) {
        (StatisticArg::Paired, ModeArg::Closed) => {
            return Err(usage("--statistic paired is only defined for --mode open"));
        }
        (StatisticArg::Paired, ModeArg::Open) => stats::sample_paired_do(a.k, a.draws, a.seed)?,
        (StatisticArg::Dmin, ModeArg::Open) => {
            stats::sample_dmin(a.k, a.draws, a.seed, &DminMode::OpenLoop)?
        }
        (StatisticArg::Dmin, ModeArg::Closed) => {
            let sched = load_schedule(a.schedule_json.as_deref())?;
            stats::sample_dmin(a.k, a.draws, a.seed, &DminMode::ClosedLoop(sched))?
        }
    };
    let hist = Histogram::from_samples(&samples, a.bins)?;
    let top = *hist.edges().last().expect("histogram has edges");
    let pdf = (0..=PDF_POINTS)
        .map(|i| {
            let d = top * i as f64 / PDF_POINTS as f64;
            Ok(PdfRow {
                d,
                pdf: analytic::analytic_do_pdf(a.k, d)?,
            })
        })
        .collect::<std::result::Result<Vec<_>, MbmError>>()?;
    let ks_paired_cdf = match a.statistic {
        StatisticArg::Paired if samples.len() >= stats::MIN_KS_SAMPLES => {
            let k = a.k;
            Some(stats::ks_statistic(&samples, |d| {
                analytic::analytic_do_cdf(k, d).unwrap_or(f64::NAN)
            })?)
        }
        _ => None,
    };
    let summary = DminSummary {
        k: a.k,
        draws: a.draws,
        statistic: a.statistic,
        mode: a.mode,
        mean: stats::mean(&samples),
        median: stats::median(&samples),
        std_dev: stats::std_dev(&samples),
        analytic_mean_dmin_bound: analytic::analytic_mean_dmin_bound(a.k)?,
        ks_paired_cdf,
    };

    let config = json!({
        "k": a.k,
        "draws": a.draws,
        "mode": a.mode,
        "statistic": a.statistic,
        "bins": a.bins,
    });
    let mut m = RunManifest::new(&normalized_argv(argv), config, vec![a.seed]);
    m.emit(&a.out, &io::histogram_to_csv(&hist, &hist.density())?)?;
    m.emit(
        &sibling(&a.out, "scaled.csv", false),
        &io::histogram_to_csv(&hist, &hist.scaled_density())?,
    )?;
    m.emit(&sibling(&a.out, "pdf.csv", false), &io::pdf_to_csv(&pdf)?)?;
    m.emit(
        &sibling(&a.out, "summary.json", false),
        &io::to_json(&summary)?,
    )?;
    m.finish(&a.out)?;
    println!(
        "mean {:.6}  median {:.6}  std {:.6}  bound {:.6}",
        summary.mean, summary.median, summary.std_dev, summary.analytic_mean_dmin_bound
    );
    Ok(())
}
