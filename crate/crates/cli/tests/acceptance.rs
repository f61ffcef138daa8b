//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Every tolerance, sample size and seed is fixed below.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use mbm_core::channel::{
    average_over_channels, simulate_ber_uncoded, simulate_ser, ChannelKind, SerCurve, SimConfig,
};
use mbm_core::optimizer::{
    optimize_bit_mapping, optimize_weights, optimize_weights_observed, BitMapping,
    PerturbationSchedule,
};
use mbm_core::stats::{
    ks_statistic, mean, median, sample_dmin, sample_paired_do, std_dev, DminMode,
};
use mbm_core::{apply_weights, draw_open_loop, reference_qam, ComplexScalar};
use statrs::function::erf::erfc;

type Check = std::result::Result<String, String>;

fn bound(k: u32) -> f64 {
    PI.sqrt() * 2f64.powf(-(k as f64) / 2.0)
}

fn q(x: f64) -> f64 {
    0.5 * erfc(x / 2f64.sqrt())
}

fn grid(lo: f64, step: f64, hi: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|i| lo + i as f64 * step).collect()
}

fn verdict(pass: bool, detail: String) -> Check {
    if pass {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn crossing(curve: &SerCurve, target: f64) -> std::result::Result<f64, String> {
    curve
        .snr_at_rate(target)
        .ok_or_else(|| format!("{} never crosses {target:e}", curve.label))
}

fn c1_paired_mean() -> Check {
    const DRAWS: u64 = 100_000;
    const REL_TOL: f64 = 0.01;
    let mut parts = Vec::new();
    let mut pass = true;
    for k in [2, 3, 4] {
        let m = mean(&sample_paired_do(k, DRAWS, 101).map_err(|e| e.to_string())?);
        let rel = (m / bound(k) - 1.0).abs();
        pass &= rel < REL_TOL;
        parts.push(format!(
            "k={k} mean {m:.5} vs {:.5} (rel {rel:.2e})",
            bound(k)
        ));
    }
    verdict(pass, parts.join("; "))
}

fn c2_dmin_below_bound() -> Check {
    const DRAWS: u64 = 100_000;
    let mut parts = Vec::new();
    let mut pass = true;
    for k in [2, 3, 4, 5] {
        let s = sample_dmin(k, DRAWS, 202, &DminMode::OpenLoop).map_err(|e| e.to_string())?;
        let m = mean(&s);
        let se = std_dev(&s) / (s.len() as f64).sqrt();
        pass &= m <= bound(k) + 3.0 * se;
        parts.push(format!("k={k} {m:.4} <= {:.4}+3*{se:.1e}", bound(k)));
    }
    verdict(pass, parts.join("; "))
}

fn c3_pairwise_rayleigh() -> Check {
    const DRAWS: u64 = 100_000;
    const KS_MAX: f64 = 0.01;
    let s = sample_dmin(1, DRAWS, 303, &DminMode::OpenLoop).map_err(|e| e.to_string())?;
    let ks = ks_statistic(&s, |d| 1.0 - (-d * d / 2.0).exp()).map_err(|e| e.to_string())?;
    verdict(ks < KS_MAX, format!("KS {ks:.5} < {KS_MAX}"))
}

fn c4_optimizer_gain() -> Check {
    const RUNS: u64 = 100;
    const MEDIAN_RATIO: f64 = 2.0;
    const POWER_TOL: f64 = 1e-9;
    let sched = PerturbationSchedule::default();
    let mut ratios = Vec::new();
    let mut improved = 0;
    let mut worst_power = 0.0f64;
    for seed in 0..RUNS {
        let c = draw_open_loop(4, seed).map_err(|e| e.to_string())?;
        let trace = optimize_weights_observed(&c, &sched, seed, |rec, w: &[ComplexScalar]| {
            if rec.accepted {
                let p: f64 = w.iter().map(|x| x.norm_sqr()).sum();
                worst_power = worst_power.max((p - 16.0).abs());
            }
        })
        .map_err(|e| e.to_string())?;
        if trace.final_dmin > trace.initial_dmin {
            improved += 1;
        }
        ratios.push(trace.final_dmin / trace.initial_dmin);
    }
    let med = median(&ratios);
    verdict(
        improved == RUNS && med >= MEDIAN_RATIO && worst_power <= POWER_TOL,
        format!("improved {improved}/{RUNS}, median ratio {med:.3} >= {MEDIAN_RATIO}, max |power-16| {worst_power:.1e}"),
    )
}

fn c5_mbm4_vs_qpsk() -> Check {
    const DRAWS: u64 = 4_000;
    const TRIALS_PER_DRAW: u64 = 2_000;
    const TARGET: f64 = 1e-2;
    const MIN_ERRORS: u64 = 200;
    let snr = grid(10.0, 1.0, 30.0);
    let mut qcfg = SimConfig::new(snr.clone(), 4_000_000, ChannelKind::RayleighQam, 505);
    qcfg.min_errors = 2_000;
    let qpsk = simulate_ser(&reference_qam(2).map_err(|e| e.to_string())?, &qcfg)
        .map_err(|e| e.to_string())?;
    let mcfg = SimConfig::new(snr, TRIALS_PER_DRAW, ChannelKind::RayleighMbmOpen, 505);
    let mbm = average_over_channels(2, &mcfg, DRAWS, false).map_err(|e| e.to_string())?;
    let fewest = qpsk
        .rows
        .iter()
        .chain(&mbm.rows)
        .map(|r| r.errors)
        .min()
        .unwrap_or(0);
    let gap = crossing(&mbm, TARGET)? - crossing(&qpsk, TARGET)?;
    verdict(
        (gap - 2.0).abs() <= 1.0 && fewest >= MIN_ERRORS,
        format!(
            "gap {gap:.2} dB in 2 +/- 1 dB over {DRAWS} draws, fewest errors per point {fewest}"
        ),
    )
}

struct K4Curves {
    qam: SerCurve,
    open: SerCurve,
    closed: SerCurve,
}

fn k4_curves() -> std::result::Result<K4Curves, String> {
    const DRAWS: u64 = 1_000;
    const TRIALS_PER_DRAW: u64 = 4_000;
    let snr = grid(0.0, 2.0, 44.0);
    let mut qcfg = SimConfig::new(snr.clone(), 4_000_000, ChannelKind::RayleighQam, 606);
    qcfg.min_errors = 2_000;
    let qam = simulate_ser(&reference_qam(4).map_err(|e| e.to_string())?, &qcfg)
        .map_err(|e| e.to_string())?;
    let mut cfg = SimConfig::new(snr, TRIALS_PER_DRAW, ChannelKind::RayleighMbmOpen, 606);
    let open = average_over_channels(4, &cfg, DRAWS, false).map_err(|e| e.to_string())?;
    cfg.channel = ChannelKind::RayleighMbmClosed;
    let closed = average_over_channels(4, &cfg, DRAWS, true).map_err(|e| e.to_string())?;
    Ok(K4Curves { qam, open, closed })
}

fn c6_mbm16_vs_qam16(c: &K4Curves) -> Check {
    const TARGET: f64 = 1e-2;
    const MAX_GAP: f64 = 1.5;
    let gap = crossing(&c.open, TARGET)? - crossing(&c.qam, TARGET)?;
    verdict(gap < MAX_GAP, format!("gap {gap:.2} dB < {MAX_GAP} dB"))
}

fn c7_closed_dominates(c: &K4Curves) -> Check {
    const FROM_DB: f64 = 5.0;
    const TARGET: f64 = 1e-3;
    const MIN_GAP: f64 = 3.0;
    let below = c
        .open
        .rows
        .iter()
        .zip(&c.closed.rows)
        .filter(|(o, _)| o.snr_db >= FROM_DB)
        .all(|(o, cl)| cl.rate < o.rate);
    let gap = crossing(&c.open, TARGET)? - crossing(&c.closed, TARGET)?;
    verdict(
        below && gap >= MIN_GAP,
        format!("closed below open at every point >= {FROM_DB} dB: {below}; gap at {TARGET:e} {gap:.2} dB >= {MIN_GAP} dB"),
    )
}

fn c8_awgn_oracle() -> Check {
    const REL_TOL: f64 = 0.03;
    const MIN_ERRORS: u64 = 200;
    let mut cfg = SimConfig::new(vec![6.0, 8.0, 10.0], 50_000_000, ChannelKind::AwgnQam, 808);
    // Enough errors that 3% is many standard errors wide.
    cfg.min_errors = 40_000;
    let curve = simulate_ser(&reference_qam(2).map_err(|e| e.to_string())?, &cfg)
        .map_err(|e| e.to_string())?;
    let mut pass = true;
    let mut parts = Vec::new();
    for r in &curve.rows {
        let g = 10f64.powf(r.snr_db / 10.0).sqrt();
        let exact = 2.0 * q(g) - q(g) * q(g);
        let rel = (r.rate / exact - 1.0).abs();
        pass &= rel < REL_TOL && r.errors >= MIN_ERRORS;
        parts.push(format!(
            "{} dB {:.4e} vs {exact:.4e} (rel {rel:.2e}, {} errors)",
            r.snr_db, r.rate, r.errors
        ));
    }
    verdict(pass, parts.join("; "))
}

fn exhaustive_cost(points: &[ComplexScalar]) -> u64 {
    let mut pairs = Vec::new();
    for i in 0..4 {
        for j in i + 1..4 {
            pairs.push(((points[i] - points[j]).norm_sqr(), i, j));
        }
    }
    pairs.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    pairs.truncate(4);
    let mut best = u64::MAX;
    for a in 0..4u32 {
        for b in 0..4u32 {
            for c in 0..4u32 {
                for d in 0..4u32 {
                    let labels = [a, b, c, d];
                    let distinct = (0..4).all(|i| (i + 1..4).all(|j| labels[i] != labels[j]));
                    if distinct {
                        let cost = pairs
                            .iter()
                            .map(|&(_, i, j)| (labels[i] ^ labels[j]).count_ones() as u64)
                            .sum();
                        best = best.min(cost);
                    }
                }
            }
        }
    }
    best
}

fn c9_bit_mapping() -> Check {
    const SMALL_RUNS: u64 = 20;
    const SHAPED_RUNS: u64 = 5;
    let sched = PerturbationSchedule::default();
    let mut matched = 0;
    for seed in 0..SMALL_RUNS {
        let c = draw_open_loop(2, 900 + seed).map_err(|e| e.to_string())?;
        let t = optimize_bit_mapping(&c, &sched, seed).map_err(|e| e.to_string())?;
        if t.final_cost == exhaustive_cost(c.points()) {
            matched += 1;
        }
    }
    let mut ber_ok = 0;
    for seed in 0..SHAPED_RUNS {
        let open = draw_open_loop(4, 950 + seed).map_err(|e| e.to_string())?;
        let w = optimize_weights(&open, &sched, seed).map_err(|e| e.to_string())?;
        let shaped = apply_weights(&open, &w.final_weights).map_err(|e| e.to_string())?;
        let m = optimize_bit_mapping(&shaped, &sched, seed).map_err(|e| e.to_string())?;
        let mut cfg = SimConfig::new(
            grid(0.0, 3.0, 21.0),
            200_000,
            ChannelKind::RayleighMbmClosed,
            990 + seed,
        );
        cfg.min_errors = 0;
        let natural = BitMapping::natural(4).map_err(|e| e.to_string())?;
        let base = simulate_ber_uncoded(&shaped, &natural, &cfg).map_err(|e| e.to_string())?;
        let opt = simulate_ber_uncoded(&shaped, &m.mapping, &cfg).map_err(|e| e.to_string())?;
        if opt
            .rows
            .iter()
            .zip(&base.rows)
            .all(|(o, b)| o.rate <= b.rate)
        {
            ber_ok += 1;
        }
    }
    verdict(
        matched == SMALL_RUNS && ber_ok == SHAPED_RUNS,
        format!("exhaustive optimum {matched}/{SMALL_RUNS}; optimized BER <= natural on {ber_ok}/{SHAPED_RUNS} shaped 16-MBM"),
    )
}

fn run_cli(dir: &Path, args: &[&str]) -> std::result::Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_mbm"))
        .args(args)
        .current_dir(dir)
        .env_remove("MBM_SEED")
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "mbm {args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(out.stdout)
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .expect("temp dir readable")
        .map(|e| {
            let e = e.expect("dir entry");
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).expect("file readable"),
            )
        })
        .collect()
}

const SCRIPT: &[&[&str]] = &[
    &["gen", "--k", "4", "--seed", "7", "--out", "c.json"],
    &[
        "optimize", "--in", "c.json", "--seed", "3", "--out", "w.json", "--trace", "w.csv",
    ],
    &[
        "optimize",
        "--in",
        "c.json",
        "--weights",
        "w.json",
        "--metric",
        "hamming",
        "--seed",
        "3",
        "--out",
        "m.json",
        "--trace",
        "m.csv",
    ],
    &[
        "simulate",
        "--const",
        "c.json",
        "--weights",
        "w.json",
        "--channel",
        "rayleigh_mbm_closed",
        "--snr",
        "0:4:20",
        "--trials",
        "20000",
        "--seed",
        "1",
        "--out",
        "closed.csv",
    ],
    &[
        "simulate",
        "--const",
        "c.json",
        "--weights",
        "w.json",
        "--mapping",
        "m.json",
        "--channel",
        "rayleigh_mbm_closed",
        "--snr",
        "0:4:20",
        "--trials",
        "20000",
        "--seed",
        "1",
        "--out",
        "ber.csv",
    ],
    &[
        "simulate",
        "--channel",
        "rayleigh_mbm_open",
        "--k",
        "2",
        "--draws",
        "20",
        "--snr",
        "0:5:30",
        "--trials",
        "2000",
        "--seed",
        "2",
        "--out",
        "open.csv",
    ],
    &[
        "simulate",
        "--channel",
        "awgn_qam",
        "--k",
        "2",
        "--snr",
        "6,8,10",
        "--trials",
        "100000",
        "--seed",
        "2",
        "--out",
        "awgn.csv",
    ],
    &[
        "dmin-stats",
        "--k",
        "2",
        "--draws",
        "5000",
        "--statistic",
        "paired",
        "--seed",
        "5",
        "--out",
        "paired.csv",
    ],
    &[
        "dmin-stats",
        "--k",
        "3",
        "--draws",
        "50",
        "--mode",
        "closed",
        "--seed",
        "5",
        "--out",
        "closedd.csv",
    ],
    &["analytic", "--k", "3", "--json"],
];

fn c10_determinism() -> Check {
    let a = tempfile::TempDir::new().map_err(|e| e.to_string())?;
    let b = tempfile::TempDir::new().map_err(|e| e.to_string())?;
    let mut stdout_same = true;
    for args in SCRIPT {
        stdout_same &= run_cli(a.path(), args)? == run_cli(b.path(), args)?;
    }
    let (sa, sb) = (snapshot(a.path()), snapshot(b.path()));
    let differing: Vec<&String> = sa.keys().filter(|k| sa.get(*k) != sb.get(*k)).collect();

    let mut shard_runs = Vec::new();
    for shards in ["1", "8"] {
        let mut args = SCRIPT[5].to_vec();
        let out = format!("shards{shards}.csv");
        args.extend(["--shards", shards]);
        let last = args.len();
        args[last - 3] = &out;
        run_cli(a.path(), &args)?;
        shard_runs.push(fs::read(a.path().join(&out)).map_err(|e| e.to_string())?);
        let mut closed = SCRIPT[3].to_vec();
        let out = format!("closed_shards{shards}.csv");
        closed.extend(["--shards", shards]);
        let last = closed.len();
        closed[last - 3] = &out;
        run_cli(a.path(), &closed)?;
        shard_runs.push(fs::read(a.path().join(&out)).map_err(|e| e.to_string())?);
    }
    let shards_same = shard_runs[0] == shard_runs[2] && shard_runs[1] == shard_runs[3];
    verdict(
        differing.is_empty() && stdout_same && shards_same && sa.len() == sb.len(),
        format!(
            "{} files byte-identical across reruns (differing: {differing:?}), stdout identical: {stdout_same}, shards 1 vs 8 identical: {shards_same}",
            sa.len()
        ),
    )
}

fn main() {
    // `cargo test -- --list` and filtered runs probe test binaries; this
    // suite has no named sub-tests to offer.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    println!("acceptance suite");
    let mut failures = 0;
    let mut report = |id: &str, budget: Duration, check: &mut dyn FnMut() -> Check| {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let (pass, detail) = match result {
            Ok(d) => (elapsed <= budget, d),
            Err(d) => (false, d),
        };
        if !pass {
            failures += 1;
        }
        println!(
            "[{}] {id}: {detail} ({:.1}s, budget {}s)",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    };
    let min = |m: u64| Duration::from_secs(60 * m);

    report("C1 paired-distance mean", min(1), &mut c1_paired_mean);
    report("C2 mean d_min bound", min(2), &mut c2_dmin_below_bound);
    report(
        "C3 pairwise-distance law",
        min(1),
        &mut c3_pairwise_rayleigh,
    );
    report("C4 optimizer improvement", min(5), &mut c4_optimizer_gain);
    report("C5 4-MBM vs QPSK gap", min(10), &mut c5_mbm4_vs_qpsk);

    // C6 and C7 read the same 16-point curves; C6 pays for computing them.
    let mut k4: Option<std::result::Result<K4Curves, String>> = None;
    report("C6 16-MBM vs 16-QAM gap", min(10), &mut || {
        k4.get_or_insert_with(k4_curves)
            .as_ref()
            .map_err(Clone::clone)
            .and_then(c6_mbm16_vs_qam16)
    });
    report("C7 closed-loop dominance", min(10), &mut || {
        k4.get_or_insert_with(k4_curves)
            .as_ref()
            .map_err(Clone::clone)
            .and_then(c7_closed_dominates)
    });
    report("C8 AWGN closed form", min(5), &mut c8_awgn_oracle);
    report("C9 bit mapping", min(5), &mut c9_bit_mapping);
    report("C10 determinism", min(5), &mut c10_determinism);

    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}
