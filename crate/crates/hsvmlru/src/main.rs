//! Command-line driver: trace/history generation, labeling, training,
//! evaluation, simulation, sweeps, workload suites, and report merging.

use clap::{Args, Parser, Subcommand};
use hsvmlru::cache::Classifier;
use hsvmlru::cluster::{parse_cluster_config, ClusterConfig, Policy};
use hsvmlru::error::{Error, Result};
use hsvmlru::experiments::{
    model_runtime, report_from_records, run_simulation_with_delay, run_workload_suite,
    sweep_cache_sizes, write_report_csv, write_report_dats, CostModel, Report, ScenarioSpec,
    SimRecord, SuiteClassifier,
};
use hsvmlru::features::{
    build_history_dataset, build_online_dataset, parse_dataset_csv, remove_outliers, split_dataset,
    Dataset,
};
use hsvmlru::labeling::{
    label_history, parse_history, parse_labeled_csv, synthesize_history, write_history,
    write_labeled_csv, LABELED_CSV_HEADER,
};
use hsvmlru::svm::{
    auto_gamma, evaluate, parse_model, select_kernel, train_pipeline, write_model, KernelSpec,
    SvmModel, TrainConfig,
};
use hsvmlru::workload::{
    attach_oracle_labels, fig2_spec, generate_trace, parse_catalog, parse_trace, table8_suite,
    write_catalog, write_trace, Trace, WorkloadSpec,
};
use hsvmlru::Label;
use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "hsvmlru",
    about = "Trace-driven HDFS cache simulator comparing no-cache, LRU, and SVM-assisted LRU",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic trace (blocks.jsonl + trace.jsonl) from a workload spec.
    GenTrace(GenTraceArgs),
    /// Generate a synthetic job history (history.jsonl) from a workload spec.
    GenHistory(GenHistoryArgs),
    /// Derive reuse labels from a job history into labeled.csv.
    Label(LabelArgs),
    /// Train an SVM classifier and write model.json.
    Train(TrainArgs),
    /// Evaluate a model on a dataset and print the confusion report.
    Eval(EvalArgs),
    /// Replay a trace under one policy and write result.json.
    Simulate(SimulateArgs),
    /// Run all scenarios over a range of cache sizes and write a report.
    Sweep(SweepArgs),
    /// Run the multi-application workload suite and write a report.
    Suite(SuiteArgs),
    /// Merge result.json files from a directory into report.csv (+ .dat series).
    Report(ReportArgs),
}

#[derive(Args)]
struct GenTraceArgs {
    /// Workload spec JSON file, or the built-in name "fig2".
    #[arg(long)]
    spec: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for blocks.jsonl and trace.jsonl.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenHistoryArgs {
    #[arg(long)]
    spec: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for history.jsonl.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct LabelArgs {
    /// history.jsonl produced by gen-history.
    #[arg(long)]
    history: PathBuf,
    /// Output labeled.csv path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// labeled.csv or dataset.csv input (schema detected from the header).
    #[arg(long, conflicts_with_all = ["trace", "blocks"])]
    data: Option<PathBuf>,
    /// Alternatively, build an online dataset from a labeled trace.
    #[arg(long, requires = "blocks")]
    trace: Option<PathBuf>,
    #[arg(long, requires = "trace")]
    blocks: Option<PathBuf>,
    /// Kernel: linear, poly, rbf, sigmoid, or auto (pick by accuracy).
    #[arg(long, default_value = "rbf")]
    kernel: String,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// RBF/poly/sigmoid gamma; default is 1/(n_features*var).
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value_t = 3)]
    degree: u32,
    #[arg(long, default_value_t = 0.0)]
    coef0: f64,
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    #[arg(long, default_value_t = 50)]
    max_passes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    /// Test dataset (labeled.csv or dataset.csv).
    #[arg(long)]
    data: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    trace: PathBuf,
    #[arg(long)]
    blocks: PathBuf,
    #[arg(long)]
    cluster: PathBuf,
    /// nocache, lru, or hsvmlru.
    #[arg(long)]
    policy: String,
    /// hsvmlru classifier: model:PATH, oracle, const:0, or const:1.
    #[arg(long)]
    classifier: Option<String>,
    /// Cost model "t_cache,t_disk,t_cpu" in ms per block.
    #[arg(long)]
    cost: Option<String>,
    /// Requests per cache report; 0 reconciles synchronously.
    #[arg(long, default_value_t = 0)]
    report_delay: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    trace: PathBuf,
    #[arg(long)]
    blocks: PathBuf,
    #[arg(long)]
    cluster: PathBuf,
    /// Cache sizes as start:end:step (inclusive). Defaults to 6:24:2 for
    /// 64 MB blocks and 6:12:2 for 128 MB blocks.
    #[arg(long)]
    sizes: Option<String>,
    #[arg(long)]
    classifier: Option<String>,
    #[arg(long)]
    cost: Option<String>,
    /// Output report CSV; .dat series are written next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SuiteArgs {
    /// Workload list JSON file, or the built-in name "table8".
    #[arg(long)]
    workloads: String,
    #[arg(long)]
    cluster: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// oracle, const:0, const:1, or trained (per-workload online model).
    #[arg(long, default_value = "trained")]
    classifier: String,
    #[arg(long)]
    cost: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory scanned for simulate result .json files.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    cost: Option<String>,
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))
}

fn open_reader(path: &Path) -> Result<BufReader<fs::File>> {
    Ok(BufReader::new(
        fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?,
    ))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent.display().to_string(), e))?;
        }
    }
    fs::write(path, bytes).map_err(|e| Error::io(path.display().to_string(), e))
}

fn load_spec(arg: &str) -> Result<WorkloadSpec> {
    if arg == "fig2" {
        return Ok(fig2_spec());
    }
    let text = read_file(Path::new(arg))?;
    let spec: WorkloadSpec = serde_json::from_str(&text)?;
    spec.validate()?;
    Ok(spec)
}

fn load_trace_files(blocks: &Path, trace: &Path) -> Result<Trace> {
    let catalog = parse_catalog(open_reader(blocks)?)?;
    parse_trace(open_reader(trace)?, catalog)
}

fn parse_cost(arg: &Option<String>, block_mb: u64) -> Result<CostModel> {
    match arg {
        None => Ok(CostModel::default_for_block_size(block_mb)),
        Some(text) => {
            let parts: Vec<&str> = text.split(',').collect();
            if parts.len() != 3 {
                return Err(Error::InvalidArgument(format!(
                    "cost must be t_cache,t_disk,t_cpu, got {text}"
                )));
            }
            let nums: Vec<f64> = parts
                .iter()
                .map(|p| {
                    p.trim()
                        .parse()
                        .map_err(|_| Error::InvalidArgument(format!("bad cost term {p}")))
                })
                .collect::<Result<_>>()?;
            CostModel::new(nums[0], nums[1], nums[2])
        }
    }
}

fn parse_classifier(arg: &Option<String>) -> Result<Classifier> {
    let text = arg.as_deref().unwrap_or("oracle");
    if let Some(path) = text.strip_prefix("model:") {
        let model = parse_model(open_reader(Path::new(path))?)?;
        return Ok(Classifier::Model(model));
    }
    match text {
        "oracle" => Ok(Classifier::Oracle),
        "const:0" => Ok(Classifier::Constant(Label::NotReused)),
        "const:1" => Ok(Classifier::Constant(Label::Reused)),
        other => Err(Error::InvalidArgument(format!(
            "classifier must be model:PATH, oracle, const:0, or const:1; got {other}"
        ))),
    }
}

fn parse_sizes(text: &str) -> Result<Vec<usize>> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || Error::InvalidArgument(format!("sizes must be start:end:step, got {text}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums: Vec<usize> = parts
        .iter()
        .map(|p| p.parse().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let (start, end, step) = (nums[0], nums[1], nums[2]);
    if step == 0 || start == 0 || end < start {
        return Err(bad());
    }
    Ok((start..=end).step_by(step).collect())
}

/// Loads a training input: dataset CSV, labeled-history CSV, or a labeled
/// trace, detected by header/extension.
fn load_dataset(args: &TrainArgs) -> Result<Dataset> {
    if let (Some(trace_path), Some(blocks_path)) = (&args.trace, &args.blocks) {
        let trace = load_trace_files(blocks_path, trace_path)?;
        return build_online_dataset(&trace);
    }
    let path = args
        .data
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("train needs --data or --trace/--blocks".into()))?;
    load_dataset_file(path)
}

fn load_dataset_file(path: &Path) -> Result<Dataset> {
    let text = read_file(path)?;
    let first_line = text.lines().next().unwrap_or("");
    if first_line.trim() == LABELED_CSV_HEADER {
        let rows = parse_labeled_csv(text.as_bytes())?;
        Ok(build_history_dataset(&rows))
    } else {
        parse_dataset_csv(text.as_bytes())
    }
}

fn kernel_candidates(gamma: f64, degree: u32, coef0: f64) -> Vec<KernelSpec> {
    vec![
        KernelSpec::linear(),
        KernelSpec::polynomial(gamma, degree, coef0),
        KernelSpec::rbf(gamma),
        KernelSpec::sigmoid(gamma, coef0),
    ]
}

fn cmd_gen_trace(args: &GenTraceArgs) -> Result<()> {
    let spec = load_spec(&args.spec)?;
    let trace = attach_oracle_labels(&generate_trace(&spec, args.seed)?);
    let mut blocks_buf = Vec::new();
    write_catalog(&trace.catalog, &mut blocks_buf)?;
    let mut trace_buf = Vec::new();
    write_trace(&trace, &mut trace_buf)?;
    write_file(&args.out.join("blocks.jsonl"), &blocks_buf)?;
    write_file(&args.out.join("trace.jsonl"), &trace_buf)?;
    println!(
        "wrote {} blocks and {} requests to {}",
        trace.catalog.len(),
        trace.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_gen_history(args: &GenHistoryArgs) -> Result<()> {
    let spec = load_spec(&args.spec)?;
    let history = synthesize_history(&spec, args.seed)?;
    let mut buf = Vec::new();
    write_history(&history, &mut buf)?;
    write_file(&args.out.join("history.jsonl"), &buf)?;
    println!(
        "wrote {} jobs ({} task records) to {}",
        history.jobs.len(),
        history.tasks.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_label(args: &LabelArgs) -> Result<()> {
    let history = parse_history(open_reader(&args.history)?)?;
    let rows = label_history(&history)?;
    let mut buf = Vec::new();
    write_labeled_csv(&rows, &mut buf)?;
    write_file(&args.out, &buf)?;
    let reused = rows.iter().filter(|r| r.label == Label::Reused).count();
    println!(
        "wrote {} labeled rows ({} reused / {} not) to {}",
        rows.len(),
        reused,
        rows.len() - reused,
        args.out.display()
    );
    Ok(())
}

fn cmd_train(args: &TrainArgs) -> Result<()> {
    let raw = load_dataset(args)?;
    let (clean, dropped) = remove_outliers(&raw);
    if dropped > 0 {
        println!("dropped {dropped} outlier rows of {}", raw.len());
    }
    let (train_raw, test_raw) = split_dataset(&clean, 0.75, args.seed)?;
    let gamma = match args.gamma {
        Some(g) => g,
        None => auto_gamma(&train_raw)?,
    };

    let mut cfg = TrainConfig {
        c: args.c,
        tol: args.tol,
        max_passes: args.max_passes,
        kernel: KernelSpec::rbf(gamma),
        seed: args.seed,
    };
    cfg.kernel = match args.kernel.as_str() {
        "linear" => KernelSpec::linear(),
        "poly" => KernelSpec::polynomial(gamma, args.degree, args.coef0),
        "rbf" => KernelSpec::rbf(gamma),
        "sigmoid" => KernelSpec::sigmoid(gamma, args.coef0),
        "auto" => {
            let candidates = kernel_candidates(gamma, args.degree, args.coef0);
            let (best, reports) = select_kernel(&clean, &candidates, &cfg, args.seed)?;
            for r in &reports {
                match (&r.report, &r.error) {
                    (Some(rep), _) => {
                        println!(
                            "kernel {:10} accuracy {:.4}",
                            r.spec.kind_name(),
                            rep.accuracy
                        );
                        for m in &rep.per_class {
                            println!(
                                "  class {}  precision {:.4}  recall {:.4}  f1 {:.4}",
                                m.class, m.precision, m.recall, m.f1
                            );
                        }
                    }
                    (None, Some(err)) => println!("kernel {:10} failed: {err}", r.spec.kind_name()),
                    _ => {}
                }
            }
            println!("selected kernel: {}", best.kind_name());
            best
        }
        other => {
            return Err(Error::InvalidArgument(format!(
                "kernel must be linear, poly, rbf, sigmoid, or auto; got {other}"
            )))
        }
    };

    let model = train_pipeline(&train_raw, &cfg)?;
    let report = evaluate(&model, &test_raw)?;
    println!(
        "trained {} kernel on {} rows, {} support vectors",
        cfg.kernel.kind_name(),
        train_raw.len(),
        model.support_vectors.len()
    );
    println!("held-out evaluation on {} rows:\n{report}", test_raw.len());

    let mut buf = Vec::new();
    write_model(&model, &mut buf)?;
    write_file(&args.out, &buf)?;
    println!("wrote model to {}", args.out.display());
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let model: SvmModel = parse_model(open_reader(&args.model)?)?;
    let data = load_dataset_file(&args.data)?;
    let report = evaluate(&model, &data)?;
    println!("{report}");
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let trace = load_trace_files(&args.blocks, &args.trace)?;
    let cluster: ClusterConfig = parse_cluster_config(&read_file(&args.cluster)?)?;
    let policy = Policy::parse(&args.policy)?;
    let classifier = match policy {
        Policy::HsvmLru => Some(parse_classifier(&args.classifier)?),
        _ => None,
    };
    let cm = parse_cost(&args.cost, cluster.block_size_mb)?;
    let result = run_simulation_with_delay(
        &trace,
        &cluster,
        policy,
        classifier.as_ref(),
        args.report_delay,
    )?;
    let workload = args
        .trace
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "trace".into());
    let record = SimRecord::from_result(
        &result,
        &workload,
        cluster.cache_capacity_blocks,
        cluster.block_size_mb,
    )?;
    let mut buf = serde_json::to_vec_pretty(&record)?;
    buf.push(b'\n');
    write_file(&args.out, &buf)?;
    println!(
        "{}: {} requests, {} hits, {} misses, hit ratio {:.4}, modeled runtime {:.1} ms",
        result.scenario,
        record.requests,
        record.hits,
        record.misses,
        record.hit_ratio,
        model_runtime(&result, &cm)
    );
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let trace = load_trace_files(&args.blocks, &args.trace)?;
    let cluster = parse_cluster_config(&read_file(&args.cluster)?)?;
    let sizes = match &args.sizes {
        Some(text) => parse_sizes(text)?,
        None if cluster.block_size_mb >= 128 => parse_sizes("6:12:2")?,
        None => parse_sizes("6:24:2")?,
    };
    let classifier = parse_classifier(&args.classifier)?;
    let cm = parse_cost(&args.cost, cluster.block_size_mb)?;
    let scenarios = [
        ScenarioSpec::NoCache,
        ScenarioSpec::Lru,
        ScenarioSpec::HsvmLru(&classifier),
    ];
    let report = sweep_cache_sizes(&trace, &cluster, &sizes, &scenarios, &cm)?;
    emit_report(&report, &args.out)?;
    Ok(())
}

fn cmd_suite(args: &SuiteArgs) -> Result<()> {
    let specs: Vec<WorkloadSpec> = if args.workloads == "table8" {
        table8_suite(40, 2.0)
    } else {
        let text = read_file(Path::new(&args.workloads))?;
        serde_json::from_str(&text)?
    };
    let cluster = parse_cluster_config(&read_file(&args.cluster)?)?;
    let cm = parse_cost(&args.cost, cluster.block_size_mb)?;
    let mode = match args.classifier.as_str() {
        "oracle" => SuiteClassifier::Oracle,
        "const:0" => SuiteClassifier::Constant(Label::NotReused),
        "const:1" => SuiteClassifier::Constant(Label::Reused),
        "trained" => SuiteClassifier::Trained(TrainConfig {
            c: 10.0,
            kernel: KernelSpec::rbf(1.0),
            seed: args.seed,
            ..TrainConfig::default()
        }),
        other => {
            return Err(Error::InvalidArgument(format!(
                "suite classifier must be oracle, const:0, const:1, or trained; got {other}"
            )))
        }
    };
    let report = run_workload_suite(&specs, &cluster, &cm, args.seed, &mode)?;
    emit_report(&report, &args.out)?;
    Ok(())
}

fn cmd_report(args: &ReportArgs) -> Result<()> {
    let mut records: Vec<SimRecord> = Vec::new();
    let dir =
        fs::read_dir(&args.input).map_err(|e| Error::io(args.input.display().to_string(), e))?;
    let mut paths: Vec<PathBuf> = dir
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().map(|e| e == "json").unwrap_or(false))
        .collect();
    paths.sort();
    for path in &paths {
        let text = read_file(path)?;
        match serde_json::from_str::<SimRecord>(&text) {
            Ok(record) => records.push(record),
            Err(_) => continue, // unrelated json files are skipped
        }
    }
    if records.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no result records found under {}",
            args.input.display()
        )));
    }
    let block_mb = records[0].block_mb;
    let cm = parse_cost(&args.cost, block_mb)?;
    let report = report_from_records(&records, &cm)?;
    emit_report(&report, &args.out)?;
    Ok(())
}

fn emit_report(report: &Report, out: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_report_csv(report, &mut buf)?;
    write_file(out, &buf)?;
    let dir = out.parent().map(Path::to_path_buf).unwrap_or_default();
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "report".into());
    let dats = write_report_dats(report, &dir, &stem)?;
    println!("wrote {} rows to {}", report.rows.len(), out.display());
    for dat in dats {
        println!("wrote series {}", dat.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::GenTrace(args) => cmd_gen_trace(args),
        Command::GenHistory(args) => cmd_gen_history(args),
        Command::Label(args) => cmd_label(args),
        Command::Train(args) => cmd_train(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Suite(args) => cmd_suite(args),
        Command::Report(args) => cmd_report(args),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        let mut stderr = std::io::stderr();
        let _ = writeln!(stderr, "error: {e}");
        std::process::exit(e.exit_code());
    }
}
