//! The `monosoup` command line.
//!
//! ```text
//! monosoup [--threads N] [--config job.json] <command>
//!   edit            --pre P --ft F [--rule effective|energy:R] [--vectors pass|wise:L] --out O [--report R]
//!   merge uniform   --pool pool.json --out O
//!   merge stock     --pre P --ft1 A --ft2 B --out O [--report R]
//!   merge greedy    --pool pool.json (--scores S | --eval-cmd CMD) --out O [--report R]
//!   merge sfgs      --pre P --pool pool.json --delta D --out O [--report R]
//!   merge wiseft    --pre P --ft F --lambda L --out O
//!   merge lines     --pre P --ft F [--alpha A] [--beta B] [--block-map M] --out O
//!   inspect spectrum   --pre P --ft F [--energies R,..] --out report.{json,csv}
//!   inspect alignment  --pre P --pool pool.json --out table.{json,csv} [--histograms H]
//!   inspect lambdas    --report edit.json [--grouping layer_index|name_prefix] --out T
//!   sweep truncate  --pre P --ft F --energies R,.. --out-dir D [--table T]
//!   cka             --x X --y Y
//! ```
//!
//! A pool manifest is a JSON list of `{"id": .., "path": .., <score fields>}`
//! objects; relative paths resolve against the manifest's directory and
//! `--rank-by` picks the score field (default `score`).
//!
//! `--config job.json` supplies flags as a JSON object keyed by flag name,
//! plus an optional `"command"` such as `"merge sfgs"`. Flags given on the
//! command line win. Logging goes to standard error and is controlled by
//! `MONOSOUP_LOG` (`error`, `warn`, `info`, `debug`).
//!
//! Exit codes: 0 success, 1 other failure, 2 usage or parameter error,
//! 3 schema, format or I/O error, 4 numerical degeneracy.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::checkpoint::{read_archive, write_archive, Checkpoint};
use crate::diagnostics::{
    alignment_histograms, emit_report, lambda_distribution, linear_cka, pairwise_alignment,
    read_activations, read_json_report, spectrum_report, truncation_sweep, Grouping, ReportFormat,
    Tabular, DEFAULT_BINS,
};
use crate::edit::{edit_checkpoint_with, EditReport, RankRule, VectorPolicy};
use crate::error::{Error, Result};
use crate::merge::{
    greedy_soup, lines, model_stock, sfgs, uniform_soup, wise_ft, BlockMap, CandidatePool,
    Evaluator, Selection, SelectionStep,
};

#[derive(Debug, Parser)]
#[command(
    name = "monosoup",
    version,
    about = "Spectral editing and merging of checkpoints",
    args_override_self = true
)]
struct Cli {
    /// Worker threads (defaults to the available parallelism).
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Spectrally edit a fine-tuned checkpoint against its pre-trained base.
    Edit(EditArgs),
    /// Combine several checkpoints.
    #[command(subcommand)]
    Merge(MergeCommand),
    /// Write analysis reports.
    #[command(subcommand)]
    Inspect(InspectCommand),
    /// Parameter sweeps.
    #[command(subcommand)]
    Sweep(SweepCommand),
    /// Linear CKA between two activation archives; prints the value.
    Cka(CkaArgs),
}

#[derive(Debug, Args)]
struct EditArgs {
    #[arg(long)]
    pre: PathBuf,
    #[arg(long)]
    ft: PathBuf,
    /// `effective` or `energy:<R>` with 0 < R < 1.
    #[arg(long, default_value = "effective", value_parser = parse_arg::<RankRule>)]
    rule: RankRule,
    /// `pass` or `wise:<lambda>` for tensors without a matrix view.
    #[arg(long, default_value = "pass", value_parser = parse_arg::<VectorPolicy>)]
    vectors: VectorPolicy,
    #[arg(long)]
    out: PathBuf,
    /// Per-layer report; CSV if the path ends in `.csv`, JSON otherwise.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum MergeCommand {
    /// Elementwise mean of every candidate.
    Uniform {
        #[command(flatten)]
        pool: PoolArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Model Stock merge of two fine-tuned models.
    Stock {
        #[arg(long)]
        pre: PathBuf,
        #[arg(long)]
        ft1: PathBuf,
        #[arg(long)]
        ft2: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Greedy soup driven by validation scores.
    Greedy {
        #[command(flatten)]
        pool: PoolArgs,
        /// JSON map from comma-joined sorted id sets to scores.
        #[arg(
            long,
            conflicts_with = "eval_cmd",
            required_unless_present = "eval_cmd"
        )]
        scores: Option<PathBuf>,
        /// Shell command printing the score of the soup at `{path}`.
        #[arg(long)]
        eval_cmd: Option<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Similarity-filtered greedy soup.
    Sfgs {
        #[command(flatten)]
        pool: PoolArgs,
        /// Inclusion threshold on the mean task-vector cosine, in [-1, 1].
        #[arg(long, allow_negative_numbers = true)]
        delta: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Linear interpolation between pre-trained and fine-tuned weights.
    Wiseft {
        #[arg(long)]
        pre: PathBuf,
        #[arg(long)]
        ft: PathBuf,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Depth-linear scaling of the task vector.
    Lines {
        #[arg(long)]
        pre: PathBuf,
        #[arg(long)]
        ft: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
        #[arg(long, default_value_t = 0.9)]
        beta: f64,
        /// JSON map from tensor name to block index.
        #[arg(long)]
        block_map: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct PoolArgs {
    /// Pre-trained checkpoint shared by the candidates.
    #[arg(long)]
    pre: Option<PathBuf>,
    /// Pool manifest.
    #[arg(long)]
    pool: PathBuf,
    /// Manifest field used to rank candidates (higher first).
    #[arg(long, default_value = "score")]
    rank_by: String,
}

#[derive(Debug, Subcommand)]
enum InspectCommand {
    /// Singular spectra and rank statistics of every layer update.
    Spectrum {
        #[arg(long)]
        pre: PathBuf,
        #[arg(long)]
        ft: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = [0.5, 0.8, 0.9, 0.95])]
        energies: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pairwise mean task-vector cosines across a pool.
    Alignment {
        #[command(flatten)]
        pool: PoolArgs,
        #[arg(long)]
        out: PathBuf,
        /// Also write per-pair histograms of per-layer cosines.
        #[arg(long)]
        histograms: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_BINS)]
        bins: usize,
    },
    /// Mixing-coefficient statistics from an edit report.
    Lambdas {
        /// JSON report written by `edit --report`.
        #[arg(long)]
        report: PathBuf,
        #[arg(long, default_value = "layer_index", value_parser = parse_arg::<Grouping>)]
        grouping: Grouping,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
enum SweepCommand {
    /// Write one checkpoint per energy fraction, keeping only each layer's
    /// top directions.
    Truncate {
        #[arg(long)]
        pre: PathBuf,
        #[arg(long)]
        ft: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        energies: Vec<f64>,
        #[arg(long)]
        out_dir: PathBuf,
        /// Defaults to `<out-dir>/sweep.csv`.
        #[arg(long)]
        table: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct CkaArgs {
    #[arg(long)]
    x: PathBuf,
    #[arg(long)]
    y: PathBuf,
}

fn parse_arg<T: std::str::FromStr<Err = Error>>(s: &str) -> std::result::Result<T, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    init_logging();
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let argv = match apply_config(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("monosoup: {e}");
            return exit_code(&e);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("monosoup: {e}");
            exit_code(&e)
        }
    }
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or("MONOSOUP_LOG", "warn");
    let _ = env_logger::Builder::from_env(env)
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .try_init();
}

/// Maps an error to the documented exit codes.
pub fn exit_code(err: &Error) -> i32 {
    match err.root() {
        Error::InvalidArgument(_) | Error::OutOfRange { .. } | Error::EmptyPool => 2,
        Error::MalformedHeader(_)
        | Error::OffsetOverlap(_)
        | Error::UnsupportedDtype(_)
        | Error::InvalidTensor { .. }
        | Error::Io { .. }
        | Error::SchemaMismatch { .. }
        | Error::ShapeMismatch(_)
        | Error::InvalidPool(_)
        | Error::UnknownBlockStructure(_)
        | Error::SampleCountMismatch { .. }
        | Error::Serialization(_) => 3,
        Error::NonFiniteInput
        | Error::AllZeroSpectrum
        | Error::IndexOutOfRange { .. }
        | Error::ConvergenceFailure(_)
        | Error::DegenerateAngle { .. } => 4,
        Error::EvaluatorFailure { .. } | Error::Layer { .. } => 1,
    }
}

const SUBCOMMANDS: &[&str] = &[
    "edit",
    "merge",
    "inspect",
    "sweep",
    "cka",
    "uniform",
    "stock",
    "greedy",
    "sfgs",
    "wiseft",
    "lines",
    "spectrum",
    "alignment",
    "lambdas",
    "truncate",
];

/// Splices flags from `--config <file>` in front of the command-line flags.
fn apply_config(argv: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut rest = Vec::with_capacity(argv.len());
    let mut config = None;
    let mut iter = argv.into_iter();
    let program = iter.next().unwrap_or_else(|| "monosoup".into());
    while let Some(arg) = iter.next() {
        let text = arg.to_string_lossy();
        if text == "--config" {
            let path = iter
                .next()
                .ok_or_else(|| Error::InvalidArgument("--config needs a path".into()))?;
            config = Some(PathBuf::from(path));
        } else if let Some(path) = text.strip_prefix("--config=") {
            config = Some(PathBuf::from(path));
        } else {
            rest.push(arg);
        }
    }
    let Some(path) = config else {
        return Ok(std::iter::once(program).chain(rest).collect());
    };
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let Value::Object(map) = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))?
    else {
        return Err(Error::InvalidArgument(format!(
            "{}: expected a JSON object",
            path.display()
        )));
    };

    // Leading global flags, then the subcommand words, then everything else.
    let mut globals = Vec::new();
    let mut i = 0;
    while i < rest.len() {
        let t = rest[i].to_string_lossy();
        if t == "--threads" && i + 1 < rest.len() {
            globals.extend_from_slice(&rest[i..i + 2]);
            i += 2;
        } else if t.starts_with("--threads=") {
            globals.push(rest[i].clone());
            i += 1;
        } else {
            break;
        }
    }
    let mut words = Vec::new();
    while i < rest.len() && SUBCOMMANDS.contains(&rest[i].to_string_lossy().as_ref()) {
        words.push(rest[i].clone());
        i += 1;
    }
    let user_flags = &rest[i..];

    let mut from_file = Vec::new();
    let mut file_words = Vec::new();
    for (key, value) in map {
        if key == "command" {
            let text = match value {
                Value::String(s) => s,
                Value::Array(parts) => parts
                    .iter()
                    .map(|p| p.as_str().map(str::to_string))
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| Error::InvalidArgument("\"command\" must hold strings".into()))?
                    .join(" "),
                _ => {
                    return Err(Error::InvalidArgument(
                        "\"command\" must be a string".into(),
                    ))
                }
            };
            file_words = text.split_whitespace().map(OsString::from).collect();
            continue;
        }
        let flag = format!("--{}", key.replace('_', "-"));
        match value {
            Value::Bool(true) => from_file.push(flag.into()),
            Value::Bool(false) | Value::Null => {}
            Value::Array(items) => {
                let joined = items
                    .iter()
                    .map(scalar_text)
                    .collect::<Result<Vec<_>>>()?
                    .join(",");
                from_file.push(flag.into());
                from_file.push(joined.into());
            }
            other => {
                from_file.push(flag.into());
                from_file.push(scalar_text(&other)?.into());
            }
        }
    }
    if words.is_empty() {
        words = file_words;
    }
    let (file_globals, file_local): (Vec<_>, Vec<_>) = split_threads(from_file);
    Ok(std::iter::once(program)
        .chain(file_globals)
        .chain(globals)
        .chain(words)
        .chain(file_local)
        .chain(user_flags.iter().cloned())
        .collect())
}

fn split_threads(flags: Vec<OsString>) -> (Vec<OsString>, Vec<OsString>) {
    let mut globals = Vec::new();
    let mut local = Vec::new();
    let mut iter = flags.into_iter();
    while let Some(f) = iter.next() {
        if f == "--threads" {
            globals.push(f);
            globals.extend(iter.next());
        } else {
            local.push(f);
        }
    }
    (globals, local)
}

fn scalar_text(value: &Value) -> Result<String> {
    match value {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        Value::Bool(b) => Ok(b.to_string()),
        other => Err(Error::InvalidArgument(format!(
            "unsupported config value {other}"
        ))),
    }
}

fn execute(cli: Cli) -> Result<()> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        builder = builder.num_threads(n as usize);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    pool.install(|| dispatch(cli.command))
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Edit(args) => edit(args),
        Command::Merge(m) => merge(m),
        Command::Inspect(i) => inspect(i),
        Command::Sweep(SweepCommand::Truncate {
            pre,
            ft,
            energies,
            out_dir,
            table,
        }) => {
            check_fractions(&energies)?;
            let (pre, ft) = (load(&pre)?, load(&ft)?);
            let sweep = truncation_sweep(&pre, &ft, &energies, &out_dir)?;
            let table = table.unwrap_or_else(|| out_dir.join("sweep.csv"));
            emit(&sweep, &table)?;
            for out in &sweep.outputs {
                println!("{}\t{}", out.r, out.path.display());
            }
            Ok(())
        }
        Command::Cka(CkaArgs { x, y }) => {
            let value = linear_cka(&read_activations(&x)?, &read_activations(&y)?)?;
            println!("{value}");
            Ok(())
        }
    }
}

fn load(path: &Path) -> Result<Checkpoint> {
    log::info!("reading {}", path.display());
    read_archive(path)
}

fn save(ckpt: &Checkpoint, path: &Path) -> Result<()> {
    write_archive(ckpt, path)?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn emit<T: Serialize + Tabular>(doc: &T, path: &Path) -> Result<()> {
    emit_report(doc, ReportFormat::from_path(path), path)
}

fn check_fractions(rs: &[f64]) -> Result<()> {
    match rs.iter().find(|&&r| !(r > 0.0 && r <= 1.0)) {
        Some(&r) => Err(Error::OutOfRange {
            what: "energy fraction R",
            value: r,
        }),
        None => Ok(()),
    }
}

fn check_unit(what: &'static str, value: f64, low: f64) -> Result<()> {
    if (low..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::OutOfRange { what, value })
    }
}

fn edit(args: EditArgs) -> Result<()> {
    let pre = load(&args.pre)?;
    let ft = load(&args.ft)?;
    let (edited, report) = edit_checkpoint_with(&pre, &ft, args.rule, args.vectors)?;
    save(&edited, &args.out)?;
    let t = report.totals;
    log::info!(
        "edited {} layers, {} vectors passed through, {} zero updates",
        t.edited,
        t.pass_through_vector,
        t.degenerate_zero_delta
    );
    if let Some(path) = args.report {
        emit(&report, &path)?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct StockReport {
    layers: Vec<StockLayer>,
    mean_cos: f64,
}

#[derive(Debug, Serialize)]
struct StockLayer {
    name: String,
    cos: f64,
    lambda: f64,
    clamped: bool,
}

impl Tabular for StockReport {
    fn columns(&self) -> Vec<&'static str> {
        vec!["name", "cos", "lambda", "clamped"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.layers
            .iter()
            .map(|l| {
                vec![
                    l.name.clone(),
                    l.cos.to_string(),
                    l.lambda.to_string(),
                    l.clamped.to_string(),
                ]
            })
            .collect()
    }
}

#[derive(Debug, Serialize)]
struct SelectionReport {
    method: &'static str,
    selected: Vec<String>,
    steps: Vec<SelectionStep>,
}

impl SelectionReport {
    fn new(method: &'static str, selection: &Selection) -> Self {
        Self {
            method,
            selected: selection.selected.clone(),
            steps: selection.steps.clone(),
        }
    }
}

impl Tabular for SelectionReport {
    fn columns(&self) -> Vec<&'static str> {
        vec!["id", "score", "accepted"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.steps
            .iter()
            .map(|s| {
                vec![
                    s.id.clone(),
                    s.score.map(|x| x.to_string()).unwrap_or_default(),
                    s.accepted.to_string(),
                ]
            })
            .collect()
    }
}

fn merge(command: MergeCommand) -> Result<()> {
    match command {
        MergeCommand::Uniform { pool, out } => {
            let pool = load_pool(&pool, false)?;
            save(&uniform_soup(&pool)?, &out)
        }
        MergeCommand::Stock {
            pre,
            ft1,
            ft2,
            out,
            report,
        } => {
            let stock = model_stock(&load(&pre)?, &load(&ft1)?, &load(&ft2)?)?;
            save(&stock.merged, &out)?;
            if let Some(path) = report {
                let layers = stock
                    .alignment
                    .per_layer
                    .iter()
                    .map(|(name, &cos)| StockLayer {
                        name: name.clone(),
                        cos,
                        lambda: stock.lambdas[name],
                        clamped: stock.clamped.contains(name),
                    })
                    .collect();
                emit(
                    &StockReport {
                        layers,
                        mean_cos: stock.alignment.mean,
                    },
                    &path,
                )?;
            }
            Ok(())
        }
        MergeCommand::Greedy {
            pool,
            scores,
            eval_cmd,
            out,
            report,
        } => {
            let mut evaluator = match (scores, eval_cmd) {
                (Some(path), _) => Evaluator::ScoresFile(read_json(&path)?),
                (None, Some(cmd)) => Evaluator::ExternalCommand(cmd),
                (None, None) => {
                    return Err(Error::InvalidArgument(
                        "greedy needs --scores or --eval-cmd".into(),
                    ))
                }
            };
            let pool = load_pool(&pool, true)?;
            let selection = greedy_soup(&pool, &mut evaluator)?;
            finish_selection("greedy", &selection, &out, report.as_deref())
        }
        MergeCommand::Sfgs {
            pool,
            delta,
            out,
            report,
        } => {
            check_unit("SFGS threshold delta", delta, -1.0)?;
            if pool.pre.is_none() {
                return Err(Error::InvalidArgument("sfgs needs --pre".into()));
            }
            let pool = load_pool(&pool, true)?;
            let selection = sfgs(&pool, delta)?;
            finish_selection("sfgs", &selection, &out, report.as_deref())
        }
        MergeCommand::Wiseft {
            pre,
            ft,
            lambda,
            out,
        } => {
            check_unit("Wise-FT lambda", lambda, 0.0)?;
            save(&wise_ft(&load(&pre)?, &load(&ft)?, lambda)?, &out)
        }
        MergeCommand::Lines {
            pre,
            ft,
            alpha,
            beta,
            block_map,
            out,
        } => {
            check_unit("LiNeS alpha", alpha, 0.0)?;
            check_unit("LiNeS beta", beta, alpha)?;
            let map = block_map
                .map(|p| BlockMap::from_labels(read_json(&p)?))
                .transpose()?;
            save(
                &lines(&load(&pre)?, &load(&ft)?, alpha, beta, map.as_ref())?,
                &out,
            )
        }
    }
}

fn finish_selection(
    method: &'static str,
    selection: &Selection,
    out: &Path,
    report: Option<&Path>,
) -> Result<()> {
    save(&selection.soup, out)?;
    if let Some(path) = report {
        emit(&SelectionReport::new(method, selection), path)?;
    }
    println!("{}", selection.selected.join(","));
    Ok(())
}

fn inspect(command: InspectCommand) -> Result<()> {
    match command {
        InspectCommand::Spectrum {
            pre,
            ft,
            energies,
            out,
        } => {
            check_fractions(&energies)?;
            let report = spectrum_report(&load(&pre)?, &load(&ft)?, &energies)?;
            emit(&report, &out)
        }
        InspectCommand::Alignment {
            pool,
            out,
            histograms,
            bins,
        } => {
            if bins == 0 {
                return Err(Error::InvalidArgument("--bins must be positive".into()));
            }
            if pool.pre.is_none() {
                return Err(Error::InvalidArgument("alignment needs --pre".into()));
            }
            let pool = load_pool(&pool, false)?;
            emit(&pairwise_alignment(&pool)?, &out)?;
            if let Some(path) = histograms {
                emit(&alignment_histograms(&pool, bins)?, &path)?;
            }
            Ok(())
        }
        InspectCommand::Lambdas {
            report,
            grouping,
            out,
        } => {
            let report: EditReport = read_json_report(&report)?;
            emit(&lambda_distribution(&report, grouping), &out)
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    read_json_report(path)
}

/// One manifest entry: `id`, `path` and any number of numeric score fields.
#[derive(Debug, Deserialize)]
struct ManifestEntry {
    id: String,
    path: PathBuf,
    #[serde(flatten)]
    fields: BTreeMap<String, Value>,
}

fn load_pool(args: &PoolArgs, ranked: bool) -> Result<CandidatePool> {
    let entries: Vec<ManifestEntry> = read_json(&args.pool)?;
    let base = args.pool.parent().unwrap_or(Path::new(""));
    let mut candidates = Vec::with_capacity(entries.len());
    let mut ranking = BTreeMap::new();
    for entry in &entries {
        if let Some(score) = entry.fields.get(&args.rank_by) {
            let score = score.as_f64().ok_or_else(|| {
                Error::InvalidPool(format!("{}: {:?} is not a number", entry.id, args.rank_by))
            })?;
            ranking.insert(entry.id.clone(), score);
        }
    }
    for entry in entries {
        let path = if entry.path.is_absolute() {
            entry.path
        } else {
            base.join(entry.path)
        };
        candidates.push((entry.id, load(&path)?));
    }
    let pool = match &args.pre {
        Some(pre) => CandidatePool::new(load(pre)?, candidates)?,
        None => CandidatePool::from_candidates(candidates)?,
    };
    if ranked {
        pool.with_ranking(ranking)
    } else {
        Ok(pool)
    }
}
