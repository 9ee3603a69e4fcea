use std::io::Write;
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use super::manifest::{sha256_file, Command, RunManifest, SweepAxis, MANIFEST_FILE};
use super::{f6, CsvOut};
use crate::config::ExperimentConfig;
use crate::env::{Env, EpisodeCsvWriter, RewardWeights, Scenario};
use crate::error::{Error, Result};
use crate::extractor::{
    compression_report, extract, load_fixtures, media_type_for, Backend, CompressionReport, ExtractionRequest,
    MockBackend, RemoteBackend, SemanticMessage,
};
use crate::oracle::{best_single_step, enumerate_feasible, evaluate_all, histogram, Optimum};
use crate::par;
use crate::rl::{evaluate_policy, evaluate_random, Checkpoint, EvalReport, EpisodeTrace, Trainer};

/// Final greedy evaluation of one seed (or one random-baseline run).
#[derive(Debug, Clone, PartialEq)]
pub struct SeedResult {
    pub seed: u64,
    pub mean_return: f64,
    pub mean_qoe: f64,
    pub steps_to_demand: Vec<f64>,
    pub met_fraction: Vec<f64>,
    /// Delivered words per step, summed over pairs.
    pub words_per_step: f64,
}

fn words_per_step(trace: &EpisodeTrace, demand: f64) -> f64 {
    let delivered: f64 = trace
        .records
        .last()
        .map_or(0.0, |r| r.remaining_words.iter().map(|&w| demand.max(0.0) - w).sum());
    delivered / trace.summary.length.max(1) as f64
}

impl SeedResult {
    fn from_report(seed: u64, report: &EvalReport, demand: f64) -> Self {
        let n = report.episodes.len().max(1) as f64;
        SeedResult {
            seed,
            mean_return: report.mean_return,
            mean_qoe: report.mean_qoe,
            steps_to_demand: report.mean_steps_to_demand.clone(),
            met_fraction: report.met_fraction.clone(),
            words_per_step: report.episodes.iter().map(|e| words_per_step(e, demand)).sum::<f64>() / n,
        }
    }
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub results: Vec<SeedResult>,
    pub manifest: RunManifest,
}

fn scenario_for(cfg: &ExperimentConfig) -> Result<Arc<Scenario>> {
    Scenario::new(cfg.scenario.clone(), RewardWeights::from_train(&cfg.rl))
}

fn prepare_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))
}

/// File names one seed of training writes, in order.
fn seed_files(cfg: &ExperimentConfig, prefix: &str, seed: u64) -> (String, Vec<(usize, String)>, String) {
    let iters = cfg.rl.iterations;
    let every = cfg.rl.checkpoint_every;
    let mut ckpts: Vec<usize> = (1..=iters).filter(|i| i % every == 0).collect();
    if ckpts.last() != Some(&iters) {
        ckpts.push(iters);
    }
    (
        format!("{prefix}train_seed{seed}.csv"),
        ckpts
            .into_iter()
            .map(|i| (i, format!("{prefix}checkpoint_seed{seed}_it{i:04}.json")))
            .collect(),
        format!("{prefix}eval_seed{seed}.csv"),
    )
}

fn train_one_seed(cfg: &ExperimentConfig, out: &Path, prefix: &str, seed: u64, hash: &str) -> Result<SeedResult> {
    let scenario = scenario_for(cfg)?;
    let (log_name, ckpts, eval_name) = seed_files(cfg, prefix, seed);
    let mut log = CsvOut::create(
        &out.join(&log_name),
        hash,
        &["iteration", "mean_return", "actor_loss", "critic_loss", "kl", "lr", "wallclock_s"],
    )?;
    let started = Instant::now();
    let mut trainer = Trainer::new(scenario.clone(), cfg.rl.clone(), seed)?;
    trainer.train(|t, m| {
        let wall = if cfg.rl.record_wallclock {
            started.elapsed().as_secs_f64()
        } else {
            0.0
        };
        log.row([
            m.iteration.to_string(),
            f6(m.mean_return),
            f6(m.actor_loss),
            f6(m.critic_loss),
            f6(m.kl),
            format!("{:.6e}", m.lr),
            format!("{wall:.3}"),
        ])?;
        if let Some((_, name)) = ckpts.iter().find(|(i, _)| *i == t.iteration) {
            let mut ck = Checkpoint::from_trainer(t);
            ck.config = cfg.clone();
            ck.config_hash = hash.to_string();
            ck.save(&out.join(name))?;
        }
        Ok(())
    })?;
    log.finish()?;

    let report = evaluate_policy(&scenario, &trainer.agent, cfg.rl.eval_episodes, seed)?;
    write_demand_csv(&out.join(eval_name), hash, &report)?;
    Ok(SeedResult::from_report(seed, &report, cfg.scenario.demand_words))
}

fn write_demand_csv(path: &Path, hash: &str, report: &EvalReport) -> Result<()> {
    let mut csv = CsvOut::create(
        path,
        hash,
        &["vehicle", "mean_steps_to_demand", "met_fraction", "mean_return", "mean_qoe"],
    )?;
    for (v, (steps, met)) in report.mean_steps_to_demand.iter().zip(&report.met_fraction).enumerate() {
        csv.row([
            v.to_string(),
            f6(*steps),
            f6(*met),
            f6(report.mean_return),
            f6(report.mean_qoe),
        ])?;
    }
    csv.finish()
}

fn write_summary(path: &Path, hash: &str, method: &str, results: &[SeedResult]) -> Result<()> {
    let mut csv = CsvOut::create(
        path,
        hash,
        &["seed", "method", "mean_return", "mean_qoe", "mean_steps_to_demand", "words_per_step"],
    )?;
    for r in results {
        let steps = r.steps_to_demand.iter().sum::<f64>() / r.steps_to_demand.len().max(1) as f64;
        csv.row([
            r.seed.to_string(),
            method.to_string(),
            f6(r.mean_return),
            f6(r.mean_qoe),
            f6(steps),
            f6(r.words_per_step),
        ])?;
    }
    csv.finish()
}

/// Trains every seed (in parallel), writing per-seed logs, checkpoints and
/// demand CSVs plus `eval_summary.csv` and the manifest.
pub fn run_train(cfg: &ExperimentConfig, seeds: &[u64], out: &Path) -> Result<TrainOutcome> {
    cfg.validate()?;
    prepare_dir(out)?;
    let mut manifest = RunManifest::new(Command::Train, cfg.clone(), seeds.to_vec(), out);
    let hash = manifest.config_hash.clone();
    for &s in seeds {
        let (log, ckpts, eval) = seed_files(cfg, "", s);
        manifest.add_file(log);
        for (_, c) in ckpts {
            manifest.add_file(c);
        }
        manifest.add_file(eval);
    }
    let results = par::map_range(seeds.len(), |i| train_one_seed(cfg, out, "", seeds[i], &hash))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let summary = manifest.add_file("eval_summary.csv");
    write_summary(&summary, &hash, cfg.rl.method_label(), &results)?;
    let logs: Vec<String> = seeds.iter().map(|&s| seed_files(cfg, "", s).0).collect();
    write_text(&manifest.add_file("plot.gp"), &training_plot(&logs))?;
    manifest.finish()?;
    Ok(TrainOutcome { results, manifest })
}

/// Greedy evaluation of a checkpoint: per-vehicle demand CSV (one row per
/// V2V pair), per-episode CSV and a per-step trace.
pub fn run_eval(checkpoint: &Path, episodes: usize, eval_seed: u64, out: &Path) -> Result<(EvalReport, RunManifest)> {
    let ck = Checkpoint::load(checkpoint)?;
    prepare_dir(out)?;
    let command = Command::Eval {
        checkpoint: checkpoint.to_path_buf(),
        checkpoint_sha256: sha256_file(checkpoint)?,
        episodes,
        eval_seed,
    };
    let mut manifest = RunManifest::new(command, ck.config.clone(), vec![ck.seed], out);
    let hash = manifest.config_hash.clone();
    let scenario = ck.scenario()?;
    let agent = ck.agent()?;
    let report = evaluate_policy(&scenario, &agent, episodes, eval_seed)?;

    write_demand_csv(&manifest.add_file("eval_demand.csv"), &hash, &report)?;

    let mut per_ep = CsvOut::create(
        &manifest.add_file("eval_episodes.csv"),
        &hash,
        &["episode", "length", "return", "qoe", "mean_similarity", "words_per_step"],
    )?;
    for (e, tr) in report.episodes.iter().enumerate() {
        per_ep.row([
            e.to_string(),
            tr.summary.length.to_string(),
            f6(tr.summary.cumulative_reward),
            f6(tr.summary.cumulative_qoe),
            tr.summary.mean_similarity.map_or_else(String::new, f6),
            f6(words_per_step(tr, ck.config.scenario.demand_words)),
        ])?;
    }
    per_ep.finish()?;

    let trace_path = manifest.add_file("eval_trace.csv");
    let mut file = std::fs::File::create(&trace_path).map_err(|e| Error::io(&trace_path, e))?;
    writeln!(file, "# manifest: {MANIFEST_FILE} config_sha256={hash}").map_err(|e| Error::io(&trace_path, e))?;
    let mut trace = EpisodeCsvWriter::new(file)?;
    for (e, tr) in report.episodes.iter().enumerate() {
        for (t, rec) in tr.records.iter().enumerate() {
            trace.write_step(e, t, rec)?;
        }
    }
    trace.finish()?;
    manifest.finish()?;
    Ok((report, manifest))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

const GP_PREAMBLE: &str = "set datafile separator ','\nset datafile commentschars '#'\nset key autotitle columnhead\nset grid\n";

fn training_plot(logs: &[String]) -> String {
    format!(
        "{GP_PREAMBLE}set terminal pngcairo size 900,600\nset output 'training.png'\n\
         set xlabel 'iteration'\nset ylabel 'mean episode return'\n\
         files = \"{}\"\nplot for [f in files] f using 1:2 with lines title f\n",
        logs.join(" ")
    )
}

fn sweep_plot(axis: SweepAxis, methods: &[String]) -> String {
    let lines: Vec<String> = methods
        .iter()
        .map(|m| format!("'sweep.csv' using 1:(strcol(2) eq '{m}' ? $3 : 1/0):4 with yerrorlines title '{m}'"))
        .collect();
    format!(
        "{GP_PREAMBLE}set terminal pngcairo size 900,600\nset output 'sweep.png'\n\
         set xlabel '{}'\nset ylabel 'mean QoE per episode'\nplot {}\n",
        axis.name(),
        lines.join(", \\\n     ")
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub axis_value: u32,
    pub method: String,
    pub seed: u64,
    pub result: std::result::Result<SeedResult, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub axis_value: u32,
    pub method: String,
    pub n: usize,
    pub mean_qoe: f64,
    pub ci95: f64,
    pub mean_return: f64,
    pub words_per_step: f64,
}

/// Half-width of a normal-approximation 95% interval (sample std); 0 for n < 2.
pub fn ci95(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    1.96 * var.sqrt() / (n as f64).sqrt()
}

/// Groups successful points by (axis value, method), in first-seen order.
pub fn aggregate_rows(points: &[SweepPoint]) -> Vec<AggregateRow> {
    let mut keys: Vec<(u32, String)> = Vec::new();
    for p in points {
        let k = (p.axis_value, p.method.clone());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .filter_map(|(v, m)| {
            let ok: Vec<&SeedResult> = points
                .iter()
                .filter(|p| p.axis_value == v && p.method == m)
                .filter_map(|p| p.result.as_ref().ok())
                .collect();
            if ok.is_empty() {
                return None;
            }
            let n = ok.len() as f64;
            let qoe: Vec<f64> = ok.iter().map(|r| r.mean_qoe).collect();
            Some(AggregateRow {
                axis_value: v,
                n: ok.len(),
                mean_qoe: qoe.iter().sum::<f64>() / n,
                ci95: ci95(&qoe),
                mean_return: ok.iter().map(|r| r.mean_return).sum::<f64>() / n,
                words_per_step: ok.iter().map(|r| r.words_per_step).sum::<f64>() / n,
                method: m,
            })
        })
        .collect()
}

fn method_config(base: &ExperimentConfig, method: &str) -> Result<Option<ExperimentConfig>> {
    let mut cfg = base.clone();
    match method {
        "gae-ppo" => {
            if cfg.rl.gae_lambda == 0.0 {
                return Err(Error::invalid("methods", "gae-ppo needs rl.gae_lambda > 0"));
            }
        }
        "ppo" => cfg.rl.gae_lambda = 0.0,
        "random" => return Ok(None),
        _ => return Err(Error::invalid("methods", format!("unknown method `{method}` (gae-ppo | ppo | random)"))),
    }
    Ok(Some(cfg))
}

/// One run per (value, method, seed). A failing point is logged to
/// `sweep_failures.csv` and the sweep continues.
pub fn run_sweep(
    cfg: &ExperimentConfig,
    axis: SweepAxis,
    values: &[u32],
    methods: &[String],
    seeds: &[u64],
    out: &Path,
) -> Result<(Vec<SweepPoint>, Vec<AggregateRow>, RunManifest)> {
    for m in methods {
        method_config(cfg, m)?;
    }
    prepare_dir(out)?;
    let command = Command::Sweep {
        axis,
        values: values.to_vec(),
        methods: methods.to_vec(),
    };
    let mut manifest = RunManifest::new(command, cfg.clone(), seeds.to_vec(), out);
    let hash = manifest.config_hash.clone();

    let mut jobs = Vec::new();
    for &v in values {
        for m in methods {
            for &s in seeds {
                jobs.push((v, m.clone(), s));
            }
        }
    }
    let mut point_cfgs = Vec::new();
    for (v, m, s) in &jobs {
        let mut c = cfg.clone();
        axis.apply(&mut c, *v);
        let prefix = format!("{}{v}_{m}_", axis.name());
        let trained = method_config(&c, m)?;
        if let Some(tc) = &trained {
            let (log, ckpts, eval) = seed_files(tc, &prefix, *s);
            manifest.add_file(log);
            for (_, name) in ckpts {
                manifest.add_file(name);
            }
            manifest.add_file(eval);
        }
        point_cfgs.push((c, trained, prefix));
    }

    let results = par::map_range(jobs.len(), |j| {
        let (v, m, s) = &jobs[j];
        let (base, trained, prefix) = &point_cfgs[j];
        let run = || -> Result<SeedResult> {
            match trained {
                Some(tc) => train_one_seed(tc, out, prefix, *s, &hash),
                None => {
                    let sc = scenario_for(base)?;
                    let report = evaluate_random(&sc, base.rl.eval_episodes, *s)?;
                    Ok(SeedResult::from_report(*s, &report, base.scenario.demand_words))
                }
            }
        };
        SweepPoint {
            axis_value: *v,
            method: m.clone(),
            seed: *s,
            result: run().map_err(|e| e.to_string()),
        }
    });

    // Failed points may have left partial files; keep the manifest honest.
    for (j, p) in results.iter().enumerate() {
        if p.result.is_err() {
            if let Some(tc) = &point_cfgs[j].1 {
                let (log, ckpts, eval) = seed_files(tc, &point_cfgs[j].2, p.seed);
                let names: Vec<String> = std::iter::once(log)
                    .chain(ckpts.into_iter().map(|(_, n)| n))
                    .chain(std::iter::once(eval))
                    .collect();
                for n in names {
                    let _ = std::fs::remove_file(out.join(&n));
                    manifest.files.retain(|f| *f != n);
                }
            }
        }
    }

    let rows = aggregate_rows(&results);
    let mut agg = CsvOut::create(
        &manifest.add_file("sweep.csv"),
        &hash,
        &["axis_value", "method", "mean_qoe", "ci95"],
    )?;
    for r in &rows {
        agg.row([r.axis_value.to_string(), r.method.clone(), f6(r.mean_qoe), f6(r.ci95)])?;
    }
    agg.finish()?;

    let mut thr = CsvOut::create(
        &manifest.add_file("sweep_throughput.csv"),
        &hash,
        &["axis_value", "method", "n", "mean_qoe", "mean_return", "words_per_step"],
    )?;
    for r in &rows {
        thr.row([
            r.axis_value.to_string(),
            r.method.clone(),
            r.n.to_string(),
            f6(r.mean_qoe),
            f6(r.mean_return),
            f6(r.words_per_step),
        ])?;
    }
    thr.finish()?;

    let mut fail = CsvOut::create(
        &manifest.add_file("sweep_failures.csv"),
        &hash,
        &["axis_value", "method", "seed", "error"],
    )?;
    for p in &results {
        if let Err(e) = &p.result {
            fail.row([p.axis_value.to_string(), p.method.clone(), p.seed.to_string(), e.clone()])?;
        }
    }
    fail.finish()?;
    write_text(&manifest.add_file("plot.gp"), &sweep_plot(axis, methods))?;
    manifest.finish()?;
    Ok((results, rows, manifest))
}

/// Exhaustive single-step search on the channel drawn by `Env::new(channel_seed)`.
pub fn run_oracle(cfg: &ExperimentConfig, channel_seed: u64, bins: usize, out: &Path) -> Result<(Optimum, RunManifest)> {
    cfg.validate()?;
    if bins == 0 {
        return Err(Error::invalid("bins", "must be >= 1"));
    }
    let index = enumerate_feasible(&cfg.scenario)?;
    prepare_dir(out)?;
    let mut manifest = RunManifest::new(Command::Oracle { channel_seed, bins }, cfg.clone(), vec![channel_seed], out);
    let hash = manifest.config_hash.clone();
    let scenario = scenario_for(cfg)?;
    let env = Env::new(scenario.clone(), channel_seed);
    let values = evaluate_all(&scenario, env.channel(), &index, None);
    let best = best_single_step(&scenario, env.channel(), &index, None);

    let mut csv = CsvOut::create(&manifest.add_file("oracle_values.csv"), &hash, &["index", "reward"])?;
    for (i, v) in values.iter().enumerate() {
        csv.row([i.to_string(), f6(*v)])?;
    }
    csv.finish()?;

    let mut csv = CsvOut::create(&manifest.add_file("oracle_histogram.csv"), &hash, &["bin_lo", "bin_hi", "count"])?;
    for (lo, hi, c) in histogram(&values, bins) {
        csv.row([f6(lo), f6(hi), c.to_string()])?;
    }
    csv.finish()?;

    let mut csv = CsvOut::create(
        &manifest.add_file("oracle_optimum.csv"),
        &hash,
        &["index", "reward", "num_actions", "pair", "subband", "power_dbm", "u"],
    )?;
    for q in 0..best.action.num_pairs() {
        csv.row([
            best.index.to_string(),
            f6(best.reward),
            index.len().to_string(),
            q.to_string(),
            best.action.subband[q].map_or_else(|| "silent".to_string(), |w| w.to_string()),
            f6(cfg.scenario.v2v_power_levels_dbm[best.action.power_level[q]]),
            best.action.u[q].to_string(),
        ])?;
    }
    csv.finish()?;
    manifest.finish()?;
    Ok((best, manifest))
}

#[derive(Debug)]
pub struct ExtractOutcome {
    pub messages: Vec<(String, SemanticMessage)>,
    pub report: CompressionReport,
    pub manifest: RunManifest,
}

/// Runs every fixture through the mock (or a remote endpoint) and writes the
/// per-image ratios plus the compression summary.
pub fn run_extract(
    fixtures: &Path,
    l_max: usize,
    remote: Option<&str>,
    timeout_s: f64,
    out: &Path,
) -> Result<ExtractOutcome> {
    let list = load_fixtures(fixtures)?;
    let backend: Box<dyn Backend + Sync> = match remote {
        None => Box::new(MockBackend::from_fixtures(&list)?),
        Some(url) => Box::new(RemoteBackend::from_env(url, Duration::from_secs_f64(timeout_s))),
    };
    prepare_dir(out)?;
    let command = Command::Extract {
        fixtures: fixtures.to_path_buf(),
        l_max,
        remote: remote.map(str::to_string),
        timeout_s,
    };
    let mut manifest = RunManifest::new(command, ExperimentConfig::default(), Vec::new(), out);
    let hash = manifest.config_hash.clone();

    let mut messages = Vec::new();
    for f in &list {
        let image = std::fs::read(&f.image_path).map_err(|e| Error::io(&f.image_path, e))?;
        let mut req = ExtractionRequest::new(image, media_type_for(&f.image_path));
        req.l_max = l_max;
        messages.push((f.id.clone(), extract(&req, backend.as_ref())?));
    }
    let msgs: Vec<SemanticMessage> = messages.iter().map(|(_, m)| m.clone()).collect();
    let report = compression_report(&msgs)?;

    let mut csv = CsvOut::create(
        &manifest.add_file("compression.csv"),
        &hash,
        &["id", "image_bytes", "text_bytes", "ratio", "words", "latency_s"],
    )?;
    for (id, m) in &messages {
        csv.row([
            id.clone(),
            m.source_bytes.to_string(),
            m.text_bytes.to_string(),
            f6(m.compression_ratio()),
            m.word_count.to_string(),
            format!("{:.3}", m.latency_s),
        ])?;
    }
    csv.finish()?;

    let mut csv = CsvOut::create(
        &manifest.add_file("compression_summary.csv"),
        &hash,
        &["count", "mean_ratio", "min_ratio", "max_ratio", "pass"],
    )?;
    csv.row([
        report.count.to_string(),
        f6(report.mean_ratio),
        f6(report.min_ratio),
        f6(report.max_ratio),
        report.pass.to_string(),
    ])?;
    csv.finish()?;
    manifest.finish()?;
    Ok(ExtractOutcome {
        messages,
        report,
        manifest,
    })
}

/// Re-executes the command recorded in a manifest into `out`.
pub fn rerun(manifest_path: &Path, out: &Path) -> Result<RunManifest> {
    let m = RunManifest::load(manifest_path)?;
    if out == m.out_dir {
        return Err(Error::invalid("out", "rerun must write to a different directory"));
    }
    match &m.command {
        Command::Train => Ok(run_train(&m.config, &m.seeds, out)?.manifest),
        Command::Eval {
            checkpoint,
            checkpoint_sha256,
            episodes,
            eval_seed,
        } => {
            if sha256_file(checkpoint)? != *checkpoint_sha256 {
                return Err(Error::invalid("checkpoint", format!("{} changed since the run", checkpoint.display())));
            }
            Ok(run_eval(checkpoint, *episodes, *eval_seed, out)?.1)
        }
        Command::Sweep { axis, values, methods } => Ok(run_sweep(&m.config, *axis, values, methods, &m.seeds, out)?.2),
        Command::Oracle { channel_seed, bins } => Ok(run_oracle(&m.config, *channel_seed, *bins, out)?.1),
        Command::Extract {
            fixtures,
            l_max,
            remote,
            timeout_s,
        } => Ok(run_extract(fixtures, *l_max, remote.as_deref(), *timeout_s, out)?.manifest),
    }
}
