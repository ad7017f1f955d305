use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, ensure, Context, Result};
use dswgan::dswgan::{train_with_progress, DsWganModel, TrainingLog};
use dswgan::epochs::{simulate_epochs, EpochMode};
use dswgan::io::{read_counts_path, read_epochs, read_json, write_counts_path, write_epochs, write_json, Sidecar};
use dswgan::queueing::{
    checkpoints_every, interval_average_waits, run_infinite_server, run_many_server, staffing_power, staffing_sqrt,
    summarize_runs, ReportKind,
};
use dswgan::stats::{ci_bands, clean_outliers, split as split_days, summarize, Band};
use dswgan::synthetic::{simulate_cir_days, Pgnorta};
use dswgan::{par, EpochList, Horizon, RngStream};
use log::info;
use serde::Serialize;

use crate::config::{
    load, CleanConfig, EpochsConfig, QueueConfig, QueueMode, SampleConfig, SplitConfig, Staffing, StatsConfig,
    SynthConfig, SynthModel, TrainConfig,
};
use crate::{
    CleanArgs, EpochModeArg, EpochsArgs, Global, ModelKind, QueueArgs, QueueModeArg, SampleArgs, SplitArgs,
    StaffingArg, StatsArgs, SynthArgs, TrainArgs,
};

// stream ids per command
const SYNTH_STREAM: u64 = 100;
const SPLIT_STREAM: u64 = 101;
const SAMPLE_STREAM: u64 = 102;
const EPOCHS_STREAM: u64 = 103;
const QUEUE_STREAM: u64 = 104;
const BANDS_STREAM: u64 = 105;

fn out_path(g: &Global, default: &str) -> PathBuf {
    g.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn seed_or(g: &Global, seed: u64) -> u64 {
    g.seed.unwrap_or(seed)
}

fn sidecar<T: Serialize>(command: &str, seed: u64, config: &T, out: &Path) -> Result<()> {
    Sidecar::new(command, seed, config)
        .write_beside(out)
        .with_context(|| format!("writing provenance for {}", out.display()))
}

fn read_data(path: &Path, hours: f64) -> Result<dswgan::CountMatrix> {
    read_counts_path(path, hours).with_context(|| format!("reading counts from {}", path.display()))
}

fn day_file(dir: &Path, day: usize) -> PathBuf {
    dir.join(format!("day_{:05}.csv", day + 1))
}

fn write_day_epochs(dir: &Path, all: &[EpochList]) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for (i, e) in all.iter().enumerate() {
        let path = day_file(dir, i);
        let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        write_epochs(BufWriter::new(f), e)?;
    }
    Ok(())
}

pub fn synth(g: &Global, a: &SynthArgs) -> Result<()> {
    let mut cfg: SynthConfig = load(g.config.as_deref())?;
    if let Some(m) = a.model {
        cfg.model = match m {
            ModelKind::Cir => SynthModel::Cir,
            ModelKind::Pgnorta => SynthModel::Pgnorta,
        };
    }
    if let Some(d) = a.days {
        cfg.days = d;
    }
    cfg.seed = seed_or(g, cfg.seed);
    ensure!(cfg.days > 0, "--days must be at least 1");
    let stream = RngStream::new(cfg.seed, SYNTH_STREAM);
    let out = out_path(g, "counts.csv");

    let counts = match cfg.model {
        SynthModel::Cir => {
            let (counts, epochs) = simulate_cir_days(&cfg.cir, cfg.days, &stream)?;
            if let Some(dir) = &a.epochs_dir {
                write_day_epochs(dir, &epochs)?;
            }
            counts
        }
        SynthModel::Pgnorta => {
            ensure!(a.epochs_dir.is_none(), "the PGnorta model produces counts only; --epochs-dir needs --model cir");
            let horizon = Horizon::new(cfg.pgnorta.hours, cfg.pgnorta.model.base_rates.len())?;
            Pgnorta::new(cfg.pgnorta.model.clone())?.simulate_days(horizon, cfg.days, &stream)?
        }
    };
    write_counts_path(&out, &counts)?;
    sidecar("synth", cfg.seed, &cfg, &out)?;
    info!("wrote {} days × {} intervals to {}", counts.n_days(), counts.p(), out.display());
    Ok(())
}

pub fn clean(g: &Global, a: &CleanArgs) -> Result<()> {
    let mut cfg: CleanConfig = load(g.config.as_deref())?;
    cfg.lower = a.lower.unwrap_or(cfg.lower);
    cfg.upper = a.upper.unwrap_or(cfg.upper);
    cfg.hours = a.hours.unwrap_or(cfg.hours);
    ensure!(
        (0.0..=1.0).contains(&cfg.lower) && (0.0..=1.0).contains(&cfg.upper) && cfg.lower <= cfg.upper,
        "percentiles must satisfy 0 ≤ lower ≤ upper ≤ 1"
    );
    let data = read_data(&a.data, cfg.hours)?;
    let (kept, removed) = clean_outliers(&data, cfg.lower, cfg.upper)?;
    let out = out_path(g, "clean.csv");
    write_counts_path(&out, &kept)?;
    sidecar("clean", g.seed.unwrap_or(0), &cfg, &out)?;
    if let Some(path) = &a.removed {
        let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
        writeln!(w, "row")?;
        for r in &removed {
            writeln!(w, "{r}")?;
        }
        w.flush()?;
    }
    info!("kept {} of {} days, removed {}", kept.n_days(), data.n_days(), removed.len());
    Ok(())
}

fn parse_ratio(s: &str) -> Result<(u32, u32)> {
    let (a, b) = s.split_once(':').ok_or_else(|| anyhow!("ratio must look like 2:1, got {s:?}"))?;
    Ok((
        a.trim().parse().with_context(|| format!("bad ratio {s:?}"))?,
        b.trim().parse().with_context(|| format!("bad ratio {s:?}"))?,
    ))
}

pub fn split(g: &Global, a: &SplitArgs) -> Result<()> {
    let mut cfg: SplitConfig = load(g.config.as_deref())?;
    if let Some(r) = &a.ratio {
        cfg.ratio = parse_ratio(r)?;
    }
    cfg.hours = a.hours.unwrap_or(cfg.hours);
    cfg.seed = seed_or(g, cfg.seed);
    let data = read_data(&a.data, cfg.hours)?;
    let (train, test) = split_days(&data, cfg.ratio, &mut RngStream::new(cfg.seed, SPLIT_STREAM))?;
    let out = out_path(g, "train.csv");
    let test_out = a.test.clone().unwrap_or_else(|| out.with_file_name("test.csv"));
    ensure!(out != test_out, "train and test outputs must differ");
    write_counts_path(&out, &train)?;
    write_counts_path(&test_out, &test)?;
    sidecar("split", cfg.seed, &cfg, &out)?;
    sidecar("split", cfg.seed, &cfg, &test_out)?;
    info!("train {} days, test {} days", train.n_days(), test.n_days());
    Ok(())
}

fn write_log(path: &Path, log: &TrainingLog) -> Result<()> {
    let mut w = csv_writer(path)?;
    for row in &log.rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))
}

pub fn train(g: &Global, a: &TrainArgs) -> Result<()> {
    let mut cfg: TrainConfig = load(g.config.as_deref())?;
    let t = &mut cfg.training;
    t.iterations = a.iterations.unwrap_or(t.iterations);
    t.batch_size = a.batch_size.unwrap_or(t.batch_size);
    t.n_critic = a.n_critic.unwrap_or(t.n_critic);
    t.zeta = a.zeta.unwrap_or(t.zeta);
    t.lr_start = a.lr_start.unwrap_or(t.lr_start);
    t.lr_end = a.lr_end.unwrap_or(t.lr_end);
    if let Some(h) = &a.hidden {
        t.generator_hidden = h.clone();
        t.discriminator_hidden = h.clone();
    }
    t.seed = seed_or(g, t.seed);
    cfg.hours = a.hours.unwrap_or(cfg.hours);
    t.validate()?;

    let data = read_data(&a.data, cfg.hours)?;
    let every = (cfg.training.iterations / 20).max(1);
    let (model, log) = train_with_progress(&data, &cfg.training, |row| {
        if row.iteration % every == 0 {
            info!(
                "iteration {:>6}: critic {:.3}, generator {:.3}, penalty {:.3}, lr {:.2e}",
                row.iteration, row.critic_loss, row.generator_loss, row.penalty, row.learning_rate
            );
        }
    })?;
    let out = out_path(g, "model.json");
    write_json(&out, &model)?;
    sidecar("train", cfg.training.seed, &cfg, &out)?;
    let log_path = a.log.clone().unwrap_or_else(|| out.with_extension("log.csv"));
    write_log(&log_path, &log)?;
    info!("wrote model to {} and training log to {}", out.display(), log_path.display());
    Ok(())
}

fn read_model(path: &Path) -> Result<DsWganModel> {
    ensure!(path.exists(), "model file {} does not exist", path.display());
    read_json(path).with_context(|| format!("loading model {}", path.display()))
}

pub fn sample(g: &Global, a: &SampleArgs) -> Result<()> {
    let mut cfg: SampleConfig = load(g.config.as_deref())?;
    cfg.days = a.days.unwrap_or(cfg.days);
    cfg.scale = a.scale.unwrap_or(cfg.scale);
    cfg.seed = seed_or(g, cfg.seed);
    let model = read_model(&a.model)?;
    let days = model.sample(cfg.days, cfg.scale, &RngStream::new(cfg.seed, SAMPLE_STREAM))?;
    let out = out_path(g, "samples.csv");
    write_counts_path(&out, &days)?;
    #[derive(Serialize)]
    struct Provenance<'a> {
        #[serde(flatten)]
        sample: &'a SampleConfig,
        model: String,
        model_config_hash: &'a str,
    }
    let prov = Provenance {
        sample: &cfg,
        model: a.model.display().to_string(),
        model_config_hash: &model.metadata.config_hash,
    };
    sidecar("sample", cfg.seed, &prov, &out)?;
    info!("wrote {} days to {}", days.n_days(), out.display());
    Ok(())
}

pub fn epochs(g: &Global, a: &EpochsArgs) -> Result<()> {
    let mut cfg: EpochsConfig = load(g.config.as_deref())?;
    if let Some(m) = a.mode {
        cfg.mode = match m {
            EpochModeArg::Pwc => EpochMode::Pwc,
            EpochModeArg::Pwl => EpochMode::Pwl,
        };
    }
    cfg.hours = a.hours.unwrap_or(cfg.hours);
    cfg.seed = seed_or(g, cfg.seed);
    let dir = a
        .out_dir
        .clone()
        .or_else(|| g.out.clone())
        .unwrap_or_else(|| PathBuf::from("epochs"));
    let data = read_data(&a.counts, cfg.hours)?;
    let horizon = data.horizon();
    let stream = RngStream::new(cfg.seed, EPOCHS_STREAM);
    let all = par::map_indexed(data.n_days(), |i| {
        simulate_epochs(cfg.mode, data.row(i), &horizon, &mut stream.substream(i as u64))
    });
    write_day_epochs(&dir, &all)?;
    sidecar("epochs", cfg.seed, &cfg, &dir.join("epochs"))?;
    info!("wrote {} epoch files to {}", all.len(), dir.display());
    Ok(())
}

fn csv_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .map(|e| Ok(e?.path()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "csv"))
        .collect();
    files.sort();
    Ok(files)
}

/// Epoch files grouped into macro-replications: one group per
/// subdirectory if there are any, otherwise the sorted files split into
/// `macro_reps` contiguous groups of equal size.
fn macro_groups(dir: &Path, macro_reps: usize) -> Result<Vec<Vec<PathBuf>>> {
    let mut subdirs: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .map(|e| Ok(e?.path()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|p| p.is_dir())
        .collect();
    subdirs.sort();
    let groups = if subdirs.is_empty() {
        let files = csv_files(dir)?;
        ensure!(macro_reps >= 2, "need at least two macro-replications");
        ensure!(
            files.len() >= macro_reps,
            "{} epoch files cannot fill {macro_reps} macro-replications",
            files.len()
        );
        let per = files.len() / macro_reps;
        if files.len() % macro_reps != 0 {
            log::warn!("dropping {} epoch files to balance macro-replications", files.len() % macro_reps);
        }
        files.chunks(per).take(macro_reps).map(|c| c.to_vec()).collect()
    } else {
        subdirs.iter().map(|d| csv_files(d)).collect::<Result<Vec<_>>>()?
    };
    ensure!(groups.iter().all(|g| !g.is_empty()), "every macro-replication needs at least one epoch file");
    Ok(groups)
}

fn load_epochs(path: &Path) -> Result<EpochList> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_epochs(f).with_context(|| format!("reading epochs from {}", path.display()))
}

pub fn queue(g: &Global, a: &QueueArgs) -> Result<()> {
    let mut cfg: QueueConfig = load(g.config.as_deref())?;
    if let Some(m) = a.mode {
        cfg.mode = match m {
            QueueModeArg::Infinite => QueueMode::Infinite,
            QueueModeArg::Many => QueueMode::Many,
        };
    }
    if a.service_mean.is_some() || a.service_var.is_some() {
        let (mean, variance) = match cfg.service {
            dswgan::queueing::ServiceSpec::Lognormal { mean, variance } => (mean, variance),
            other => (other.mean(), 0.1),
        };
        cfg.service = dswgan::queueing::ServiceSpec::Lognormal {
            mean: a.service_mean.unwrap_or(mean),
            variance: a.service_var.unwrap_or(variance),
        };
    }
    if let Some(s) = a.staffing {
        cfg.staffing = match s {
            StaffingArg::Sqrt => Staffing::Sqrt,
            StaffingArg::Power => Staffing::Power,
        };
    }
    cfg.beta = a.beta.unwrap_or(cfg.beta);
    cfg.alpha = a.alpha.unwrap_or(cfg.alpha);
    cfg.macro_reps = a.macro_reps.unwrap_or(cfg.macro_reps);
    cfg.checkpoint_step = a.checkpoint_step.unwrap_or(cfg.checkpoint_step);
    cfg.hours = a.hours.unwrap_or(cfg.hours);
    cfg.intervals = a.intervals.unwrap_or(cfg.intervals);
    cfg.seed = seed_or(g, cfg.seed);
    cfg.service.validate()?;
    cfg.profile.validate()?;
    ensure!(cfg.checkpoint_step > 0.0, "checkpoint step must be positive");
    let horizon = Horizon::new(cfg.hours, cfg.intervals)?;

    let groups = macro_groups(&a.epochs_dir, cfg.macro_reps)?;
    let offsets: Vec<usize> = groups
        .iter()
        .scan(0, |acc, g| {
            let start = *acc;
            *acc += g.len();
            Some(start)
        })
        .collect();
    let stream = RngStream::new(cfg.seed, QUEUE_STREAM);
    let (kind, runs) = match cfg.mode {
        QueueMode::Infinite => {
            let checkpoints = checkpoints_every(&horizon, cfg.checkpoint_step);
            let runs = groups
                .iter()
                .zip(&offsets)
                .map(|(files, &off)| {
                    par::map_indexed(files.len(), |k| -> Result<Vec<f64>> {
                        let e = load_epochs(&files[k])?;
                        let v = run_infinite_server(&e, &cfg.service, &checkpoints, &mut stream.substream((off + k) as u64))?;
                        Ok(v.into_iter().map(f64::from).collect())
                    })
                    .into_iter()
                    .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            (ReportKind::Occupancy, runs)
        }
        QueueMode::Many => {
            let rates = cfg.profile.interval_integrals(&horizon);
            let es = cfg.service.mean();
            let plan = match cfg.staffing {
                Staffing::Sqrt => staffing_sqrt(&rates, es, cfg.beta)?,
                Staffing::Power => staffing_power(&rates, es, cfg.beta, cfg.alpha)?,
            };
            info!("staffing plan {:?}", plan.0);
            let runs = groups
                .iter()
                .zip(&offsets)
                .map(|(files, &off)| {
                    par::map_indexed(files.len(), |k| -> Result<Vec<f64>> {
                        let e = load_epochs(&files[k])?;
                        let run =
                            run_many_server(&e, &cfg.service, &plan, &horizon, &mut stream.substream((off + k) as u64))?;
                        Ok(interval_average_waits(&e, &run.waits, &horizon))
                    })
                    .into_iter()
                    .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            (ReportKind::Waiting, runs)
        }
    };
    let report = summarize_runs(&runs, kind)?;
    let out = out_path(g, "report.csv");
    let f = File::create(&out).with_context(|| format!("creating {}", out.display()))?;
    report.write_csv(BufWriter::new(f))?;
    sidecar("queue", cfg.seed, &cfg, &out)?;
    info!("wrote {:?} report over {} macro-replications to {}", kind, runs.len(), out.display());
    Ok(())
}

fn fmt(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        v.to_string()
    }
}

pub fn stats(g: &Global, a: &StatsArgs) -> Result<()> {
    let mut cfg: StatsConfig = load(g.config.as_deref())?;
    cfg.hours = a.hours.unwrap_or(cfg.hours);
    cfg.days = a.days.unwrap_or(cfg.days);
    cfg.macro_reps = a.macro_reps.unwrap_or(cfg.macro_reps);
    cfg.scale = a.scale.unwrap_or(cfg.scale);
    cfg.seed = seed_or(g, cfg.seed);
    let out = out_path(g, "summary.csv");
    let mut w = csv_writer(&out)?;

    if let Some(model_path) = &a.model {
        let model = read_model(model_path)?;
        let stream = RngStream::new(cfg.seed, BANDS_STREAM);
        let bands = ci_bands(|r, n| model.sample(n, cfg.scale, &stream.substream(r as u64)), cfg.days, cfg.macro_reps)?;
        w.write_record(["statistic", "index", "mean", "ci_lo", "ci_hi", "pct_lo", "pct_hi"])?;
        let named: [(&str, &Band); 3] = [
            ("mean", &bands.marginal_mean),
            ("variance", &bands.marginal_variance),
            ("past_future_corr", &bands.past_future_corr),
        ];
        for (name, b) in named {
            for j in 0..b.mean.len() {
                w.write_record([
                    name.to_string(),
                    (j + 1).to_string(),
                    fmt(b.mean[j]),
                    fmt(b.ci_lo[j]),
                    fmt(b.ci_hi[j]),
                    fmt(b.pct_lo[j]),
                    fmt(b.pct_hi[j]),
                ])?;
            }
        }
    } else {
        let path = a.data.as_ref().ok_or_else(|| anyhow!("--data or --model is required"))?;
        let data = read_data(path, cfg.hours)?;
        let s = summarize(&data)?;
        w.write_record(["interval", "mean", "variance", "past_future_corr", "corr_degenerate"])?;
        for j in 0..data.p() {
            let (corr, degenerate) = match s.past_future_corr.get(j) {
                Some(&c) => (c.to_string(), s.corr_degenerate[j].to_string()),
                None => (String::new(), String::new()),
            };
            w.write_record([
                (j + 1).to_string(),
                s.marginal_mean[j].to_string(),
                s.marginal_variance[j].to_string(),
                corr,
                degenerate,
            ])?;
        }
    }
    w.flush()?;
    sidecar("stats", cfg.seed, &cfg, &out)?;
    info!("wrote {}", out.display());
    Ok(())
}
