//! Subcommand bodies. Each builds all of its outputs in memory and commits
//! them at the end.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use esnlab::experiments::{
    compare as compare_networks, evaluate_network, run_evolution_experiment, run_sweep_with, write_generation_best,
    write_records_csv, write_run_log, EvalRecord, Source, Subject,
};
use esnlab::infotheory::network_info_measures;
use esnlab::neuroevo::{decode_to_network, TaskFitness};
use esnlab::reservoir::NetworkDocument;
use esnlab::seed::derive_seed;
use esnlab::substrate::{generate_local_esn, golden_spiral, random_spiral, LocalEsnConfig};
use esnlab::{classify_dynamics, lyapunov_exponent, ReservoirNetwork};
use serde::Serialize;

use crate::config::{load, load_network_config, CompareFile, EvalFile, EvolveFile, InfoFile, LyapunovFile, NetworkSpec, SweepFile};
use crate::output::{Outputs, RunInfo};
use crate::{CliError, Common, Format, SubstrateArgs};

const STREAM_EVAL: u64 = 50;
const STREAM_LYAPUNOV: u64 = 51;
const STREAM_INFO: u64 = 52;
const STREAM_COMPARE: u64 = 53;
const STREAM_SUBSTRATE: u64 = 54;

/// `--seed` wins over the config's `seed`, which wins over 0.
fn master_seed(flag: Option<u64>, file: Option<u64>) -> u64 {
    flag.or(file).unwrap_or(0)
}

fn add_records(out: &mut Outputs, format: Format, records: &[EvalRecord]) -> Result<(), CliError> {
    match format {
        Format::Csv => out.add_csv("records.csv", |w| write_records_csv(w, records)),
        Format::Json => out.add_json("records.json", records),
    }
}

fn finish(out: Outputs, c: &Common, name: &str, seed: u64, config: &[u8], threads: usize, start: Instant) -> Result<(), CliError> {
    let info = RunInfo {
        subcommand: name,
        seed: Some(seed),
        config: Some(config),
        threads,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    let names: Vec<String> = out.names().map(String::from).collect();
    out.commit(&c.out, &info)?;
    eprintln!("{name}: wrote {} to {}", names.join(", "), c.out.display());
    Ok(())
}

pub fn sweep(c: &Common, threads: usize) -> Result<(), CliError> {
    let start = Instant::now();
    let file = load::<SweepFile>(&c.config)?;
    let seed = master_seed(c.seed, file.value.seed);
    let cfg = file.value.to_config(seed)?;
    let total = cfg.log_sigma_grid().len() * cfg.nets_per_sigma;
    let done = AtomicUsize::new(0);
    let step = (total / 20).max(1);
    let records = run_sweep_with(&cfg, |_| {
        let k = done.fetch_add(1, Ordering::Relaxed) + 1;
        if k.is_multiple_of(step) || k == total {
            eprintln!("sweep: {k}/{total} networks");
        }
    })
    .map_err(CliError::Runtime)?;
    let failed = records.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        eprintln!("sweep: {failed} networks recorded errors");
    }
    let mut out = Outputs::default();
    add_records(&mut out, c.format, &records)?;
    finish(out, c, "sweep", seed, &file.bytes, threads, start)
}

#[derive(Serialize)]
struct BestGenome<'a> {
    run: usize,
    omega: f64,
    genome: &'a esnlab::neuroevo::CppnGenome,
    network: NetworkDocument,
}

#[derive(Serialize)]
struct FailedRun {
    run: usize,
    error: String,
}

pub fn evolve(c: &Common, threads: usize) -> Result<(), CliError> {
    let start = Instant::now();
    let file = load::<EvolveFile>(&c.config)?;
    file.value.validate()?;
    let f = &file.value;
    let seed = master_seed(c.seed, f.seed);
    let outcomes = run_evolution_experiment(
        &f.evolution,
        &TaskFitness::default(),
        f.runs,
        f.n_neurons,
        &f.monitor(),
        seed,
        |run, r| eprintln!("evolve: run {run} generation {} best {:.4} species {}", r.generation, r.best_fitness, r.species_count),
    );
    let mut best = Vec::new();
    let mut failed = Vec::new();
    for o in &outcomes {
        match &o.result {
            Ok(run) => {
                if let Some(g) = run.overall_best() {
                    let net = decode_to_network(g, &o.substrate, &f.evolution.decode())
                        .map_err(|e| CliError::Runtime(format!("run {}: {e}", o.run)))?;
                    best.push(BestGenome { run: o.run, omega: o.substrate.omega, genome: g, network: net.into() });
                }
            }
            Err(e) => {
                eprintln!("evolve: run {} failed: {e}", o.run);
                failed.push(FailedRun { run: o.run, error: e.clone() });
            }
        }
    }
    if failed.len() == outcomes.len() {
        return Err(CliError::Runtime("every evolution run failed".into()));
    }
    let mut out = Outputs::default();
    out.add_csv("run_log.csv", |w| write_run_log(w, &outcomes))?;
    out.add_csv("generation_best.csv", |w| write_generation_best(w, &outcomes))?;
    out.add_json("best_genomes.json", &best)?;
    if !failed.is_empty() {
        out.add_json("failed_runs.json", &failed)?;
    }
    finish(out, c, "evolve", seed, &file.bytes, threads, start)
}

fn subject(spec: &NetworkSpec) -> (Source, Subject) {
    let source = if spec.local_max_length.is_some() { Source::Local } else { Source::Sweep };
    match spec.sigma {
        Some(s) => (source, Subject::Sigma(s)),
        None => (source, Subject::Genome("file".into())),
    }
}

pub fn eval(c: &Common, threads: usize) -> Result<(), CliError> {
    let start = Instant::now();
    let file = load_network_config::<EvalFile>(&c.config)?;
    let f = &file.value;
    let seed = master_seed(c.seed, f.seed);
    let tasks = f.tasks()?;
    let net = f.network.build(&file.dir, seed, 0)?;
    let (source, subj) = subject(&f.network);
    let records: Vec<EvalRecord> = (0..f.evaluations as u64)
        .map(|e| {
            let s = derive_seed(seed, &[STREAM_EVAL, e]);
            let mut r = EvalRecord::new(source, subj.clone(), s);
            evaluate_network(&net, &mut r, &tasks, &f.lyapunov, f.measure_info.then_some(&f.info), s);
            r
        })
        .collect();
    for r in &records {
        if let Some(e) = &r.error {
            eprintln!("eval: {e}");
        }
    }
    if records.iter().all(|r| r.error.is_some()) {
        return Err(CliError::Runtime("every evaluation failed".into()));
    }
    let mut out = Outputs::default();
    add_records(&mut out, c.format, &records)?;
    finish(out, c, "eval", seed, &file.bytes, threads, start)
}

#[derive(Serialize)]
struct LyapunovReport {
    lambda: f64,
    dynamics: esnlab::DynamicsClass,
    estimate: esnlab::LyapunovEstimate,
}

pub fn lyapunov(c: &Common, threads: usize) -> Result<(), CliError> {
    let start = Instant::now();
    let file = load_network_config::<LyapunovFile>(&c.config)?;
    let f = &file.value;
    let seed = master_seed(c.seed, f.seed);
    f.lyapunov.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let net = f.network.build(&file.dir, seed, 0)?;
    let est = lyapunov_exponent(&net, &f.lyapunov, derive_seed(seed, &[STREAM_LYAPUNOV]))
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    println!("lambda = {}", est.lambda);
    let report = LyapunovReport { lambda: est.lambda, dynamics: classify_dynamics(est.lambda, 0.0), estimate: est };
    let mut out = Outputs::default();
    out.add_json("lyapunov.json", &report)?;
    finish(out, c, "lyapunov", seed, &file.bytes, threads, start)
}

pub fn info(c: &Common, threads: usize) -> Result<(), CliError> {
    let start = Instant::now();
    let file = load_network_config::<InfoFile>(&c.config)?;
    let f = &file.value;
    let seed = master_seed(c.seed, f.seed);
    let net = f.network.build(&file.dir, seed, 0)?;
    let m = network_info_measures(&net, &f.info, derive_seed(seed, &[STREAM_INFO])).map_err(|e| CliError::Runtime(e.to_string()))?;
    match m.te_mean {
        Some(te) => println!("ais = {}, te = {te}", m.ais_mean),
        None => println!("ais = {}, te = n/a (no connections)", m.ais_mean),
    }
    let mut out = Outputs::default();
    out.add_json("info.json", &m)?;
    finish(out, c, "info", seed, &file.bytes, threads, start)
}

pub fn compare(c: &Common, threads: usize) -> Result<(), CliError> {
    let start = Instant::now();
    let file = load::<CompareFile>(&c.config)?;
    let f = &file.value;
    let seed = master_seed(c.seed, f.seed);
    let tasks = f.task_specs()?;
    let a = f.a.build(&file.dir, seed, 0)?;
    let b = f.b.build(&file.dir, seed, 1)?;
    let report = compare_networks(&a, &b, f.cycles, &tasks, f.test, derive_seed(seed, &[STREAM_COMPARE]))
        .map_err(CliError::Runtime)?;
    for m in &report.metrics {
        println!(
            "{}: a {:.4} (sd {:.4}), b {:.4} (sd {:.4}), p = {:.4} ({})",
            m.metric.name(),
            m.mean_a,
            m.std_a,
            m.mean_b,
            m.std_b,
            m.p_value,
            m.test
        );
    }
    let mut out = Outputs::default();
    out.add_json("comparison.json", &report)?;
    if c.format == Format::Csv {
        out.add_csv("comparison.csv", |w| {
            let mut w = csv::Writer::from_writer(w);
            w.write_record(["metric", "mean_a", "std_a", "mean_b", "std_b", "t", "df", "p_value", "test"])?;
            for m in &report.metrics {
                w.write_record([
                    m.metric.name().to_string(),
                    m.mean_a.to_string(),
                    m.std_a.to_string(),
                    m.mean_b.to_string(),
                    m.std_b.to_string(),
                    m.t.map(|t| t.to_string()).unwrap_or_default(),
                    m.df.to_string(),
                    m.p_value.to_string(),
                    m.test.clone(),
                ])?;
            }
            w.flush()?;
            Ok(())
        })?;
    }
    finish(out, c, "compare", seed, &file.bytes, threads, start)
}

pub fn substrate(args: &SubstrateArgs, threads: usize) -> Result<(), CliError> {
    let start = Instant::now();
    if args.n < 2 {
        return Err(CliError::Config("--n must be at least 2".into()));
    }
    if args.omega.is_some_and(|w| !w.is_finite()) {
        return Err(CliError::Config("--omega must be finite".into()));
    }
    let seed = args.seed.unwrap_or(0);
    let sub = match args.omega {
        Some(w) => golden_spiral(args.n, w),
        None => random_spiral(args.n, derive_seed(seed, &[STREAM_SUBSTRATE])),
    };
    let mut out = Outputs::default();
    out.add_csv("substrate.csv", |w| sub.write_csv(w))?;
    if let Some(len) = args.max_length {
        if !(len >= 0.0 && args.sigma > 0.0) {
            return Err(CliError::Config("--max-length must be non-negative and --sigma positive".into()));
        }
        let net: ReservoirNetwork =
            generate_local_esn(&sub, &LocalEsnConfig::new(len, args.sigma), derive_seed(seed, &[STREAM_SUBSTRATE, 1]));
        out.add_csv("edges.csv", |w| sub.write_edges_csv(&net, w))?;
        out.add_json("network.json", &NetworkDocument::from(net))?;
    }
    // The parameters stand in for a config file in the manifest hash.
    let params = format!("n={} omega={:?} max_length={:?} sigma={}", args.n, args.omega, args.max_length, args.sigma);
    let info = RunInfo {
        subcommand: "substrate",
        seed: Some(seed),
        config: Some(params.as_bytes()),
        threads,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    out.commit(&args.out, &info)?;
    eprintln!("substrate: wrote {} neurons to {}", args.n, args.out.display());
    Ok(())
}
