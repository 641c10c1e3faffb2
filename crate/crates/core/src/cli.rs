//! Command-line front end. Each subcommand is one pipeline stage and writes
//! its artifacts plus a `config.snapshot.json` into `--out-dir`.
//!
//! Exit codes: 0 success, 1 usage error, 2 data/validation error, 3 I/O error.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use crate::analysis::{
    coverage_csv, coverage_table, coverage_text_table, proxy_domain_fit_with_order, selection_frequencies,
};
use crate::corpus::{self, load_parallel, load_sentences, preprocess, read_id_list, Corpus, PairId};
use crate::error::{Error, Result};
use crate::ngram_lm::{build_vocabulary, train_lm, NGramLm, Smoothing};
use crate::scoring::{
    compute_ced, import_external_scores, random_ranking, rank_bitext, rank_with_origin, read_scores, validate_scores,
    write_scores, Ranking, RankingOrigin, ScoringModels,
};
use crate::selection::{
    build_epoch_manifests, compute_sampling_weights, emit_epoch_text, read_manifests, relative_training_time,
    summary_json, write_manifests, Budget, Method, SelectionSchedule,
};

pub const SNAPSHOT_FILE: &str = "config.snapshot.json";
pub const LM_FILES: [&str; 4] = ["lm_if.arpa", "lm_gf.arpa", "lm_ie.arpa", "lm_ge.arpa"];

#[derive(Debug, Parser)]
#[command(
    name = "dynsel",
    version,
    about = "Cross-entropy difference ranking and dynamic data selection"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load, filter and lowercase both bitexts; sample a general subset sized like the in-domain corpus.
    Prep(PrepArgs),
    /// Train the in-domain and general source/target language models.
    TrainLm(TrainLmArgs),
    /// Score and rank the general bitext (or import external scores).
    Rank(RankArgs),
    /// Build per-epoch manifests with the static, sampling or gradual method.
    Select(SelectArgs),
    /// Coverage, selection-frequency and training-time statistics for manifests.
    Stats(StatsArgs),
    /// Target-side language-model fit of a selection on in-domain dev data.
    EvalProxy(EvalProxyArgs),
}

#[derive(Debug, Args)]
pub struct BitextArgs {
    #[arg(long)]
    pub general_src: PathBuf,
    #[arg(long)]
    pub general_tgt: PathBuf,
}

#[derive(Debug, Args)]
pub struct PrepArgs {
    #[arg(long)]
    pub in_domain_src: PathBuf,
    #[arg(long)]
    pub in_domain_tgt: PathBuf,
    #[command(flatten)]
    pub general: BitextArgs,
    #[arg(long, default_value_t = 50)]
    pub max_len: usize,
    #[arg(long)]
    pub no_lowercase: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainLmArgs {
    #[arg(long)]
    pub in_domain_src: PathBuf,
    #[arg(long)]
    pub in_domain_tgt: PathBuf,
    /// General-domain sample used for the general models.
    #[command(flatten)]
    pub general: BitextArgs,
    #[arg(long, default_value_t = 5)]
    pub order: usize,
    #[arg(long, default_value_t = 2)]
    pub min_count: usize,
    #[arg(long, default_value = "kn")]
    pub smoothing: String,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    #[command(flatten)]
    pub general: BitextArgs,
    /// Directory holding lm_if/lm_gf/lm_ie/lm_ge.arpa (defaults to --out-dir).
    #[arg(long)]
    pub lm_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long)]
    pub import_scores: Option<PathBuf>,
    /// Rank randomly instead of by relevance (requires --seed).
    #[arg(long)]
    pub random: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub general: BitextArgs,
    #[arg(long)]
    pub method: String,
    /// Ranking file (defaults to <out-dir>/ranking.txt).
    #[arg(long)]
    pub ranking: Option<PathBuf>,
    /// Scores TSV for sampling weights (defaults to <out-dir>/scores.tsv).
    #[arg(long)]
    pub scores: Option<PathBuf>,
    #[arg(long)]
    pub budget_tokens: Option<u64>,
    #[arg(long)]
    pub budget_sentences: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub eta: Option<usize>,
    #[arg(long, default_value_t = 16)]
    pub epochs: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub emit_text: bool,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub general: BitextArgs,
    /// Manifest files; repeat to compare methods.
    #[arg(long, required = true)]
    pub manifest: Vec<PathBuf>,
    /// Test-set source files; repeat for several test sets.
    #[arg(long)]
    pub test_src: Vec<PathBuf>,
    /// Baseline epochs for relative training time.
    #[arg(long, default_value_t = 16)]
    pub baseline_epochs: usize,
    /// Also write coverage.csv.
    #[arg(long)]
    pub csv: bool,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalProxyArgs {
    #[command(flatten)]
    pub general: BitextArgs,
    /// Manifest whose union of selected pairs is evaluated.
    #[arg(long, required_unless_present = "ids")]
    pub manifest: Option<PathBuf>,
    /// Plain id-list file, as an alternative to --manifest.
    #[arg(long, conflicts_with = "manifest")]
    pub ids: Option<PathBuf>,
    #[arg(long)]
    pub dev_src: PathBuf,
    #[arg(long)]
    pub dev_tgt: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub order: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
}

/// Parses `args` (including the program name) and runs the subcommand,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: &Command) -> Result<()> {
    match command {
        Command::Prep(a) => prep(a),
        Command::TrainLm(a) => train(a),
        Command::Rank(a) => rank(a),
        Command::Select(a) => select(a),
        Command::Stats(a) => stats(a),
        Command::EvalProxy(a) => eval_proxy(a),
    }
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}

fn ensure_out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("json value serializes") + "\n";
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

/// Merges this command's resolved configuration into the directory's
/// snapshot, keyed by subcommand.
fn write_snapshot(out_dir: &Path, command: &str, config: Value) -> Result<()> {
    let path = out_dir.join(SNAPSHOT_FILE);
    let mut commands = Map::new();
    if let Ok(text) = fs::read_to_string(&path) {
        if let Ok(Value::Object(mut old)) = serde_json::from_str::<Value>(&text) {
            if let Some(Value::Object(c)) = old.remove("commands") {
                commands = c;
            }
        }
    }
    commands.insert(command.to_string(), config);
    write_json(
        &path,
        &json!({
            "tool": crate::VERSION,
            "commands": commands,
        }),
    )
}

/// Id sidecar for a corpus file: `dir/name.src` -> `dir/name.ids`.
pub fn ids_sidecar(source_path: &Path) -> PathBuf {
    source_path.with_extension("ids")
}

/// Loads a bitext and, when an `.ids` sidecar exists next to the source
/// file, restores the original pair ids from it.
pub fn load_bitext(source: &Path, target: &Path) -> Result<Corpus> {
    let corpus = load_parallel(source, target)?;
    let sidecar = ids_sidecar(source);
    if !sidecar.exists() {
        return Ok(corpus);
    }
    let ids = read_id_list(&sidecar)?;
    if ids.len() != corpus.len() {
        return Err(Error::Validation(format!(
            "{} lists {} ids for {} pairs",
            sidecar.display(),
            ids.len(),
            corpus.len()
        )));
    }
    let pairs = corpus
        .pairs()
        .iter()
        .zip(ids)
        .map(|(p, id)| corpus::SentencePair::new(id, p.source.clone(), p.target.clone()))
        .collect();
    Corpus::new(corpus.name().to_string(), pairs)
}

fn prep(a: &PrepArgs) -> Result<()> {
    let seed = a
        .seed
        .ok_or_else(|| usage("prep samples the general corpus and requires --seed"))?;
    ensure_out_dir(&a.out_dir)?;
    let lowercase = !a.no_lowercase;
    let in_domain = preprocess(
        &load_parallel(&a.in_domain_src, &a.in_domain_tgt)?,
        a.max_len,
        lowercase,
    );
    let general = preprocess(
        &load_parallel(&a.general.general_src, &a.general.general_tgt)?,
        a.max_len,
        lowercase,
    );
    let sample = corpus::sample_general_subset(&general, in_domain.total_source_tokens(), seed);

    let out = |stem: &str, c: &Corpus| -> Result<()> {
        c.write(
            &a.out_dir.join(format!("{stem}.src")),
            &a.out_dir.join(format!("{stem}.tgt")),
            &a.out_dir.join(format!("{stem}.ids")),
        )
    };
    out("in_domain", &in_domain)?;
    out("general", &general)?;
    out("general_sample", &sample)?;
    eprintln!(
        "prep: in-domain {} pairs / {} tokens, general {} pairs / {} tokens, sample {} pairs / {} tokens",
        in_domain.len(),
        in_domain.total_source_tokens(),
        general.len(),
        general.total_source_tokens(),
        sample.len(),
        sample.total_source_tokens()
    );
    write_snapshot(
        &a.out_dir,
        "prep",
        json!({
            "in_domain_src": path_str(&a.in_domain_src),
            "in_domain_tgt": path_str(&a.in_domain_tgt),
            "general_src": path_str(&a.general.general_src),
            "general_tgt": path_str(&a.general.general_tgt),
            "max_len": a.max_len,
            "lowercase": lowercase,
            "seed": seed,
            "sample_target_tokens": in_domain.total_source_tokens(),
            "out_dir": path_str(&a.out_dir),
        }),
    )
}

fn train(a: &TrainLmArgs) -> Result<()> {
    let smoothing: Smoothing = a.smoothing.parse().map_err(|e: Error| usage(e.to_string()))?;
    if a.order < 1 {
        return Err(usage("--order must be at least 1"));
    }
    ensure_out_dir(&a.out_dir)?;
    let in_domain = load_bitext(&a.in_domain_src, &a.in_domain_tgt)?;
    let general = load_bitext(&a.general.general_src, &a.general.general_tgt)?;
    let src_vocab = build_vocabulary(in_domain.source_side(), a.min_count);
    let tgt_vocab = build_vocabulary(in_domain.target_side(), a.min_count);

    let jobs: [(&Corpus, bool, &str); 4] = [
        (&in_domain, true, LM_FILES[0]),
        (&general, true, LM_FILES[1]),
        (&in_domain, false, LM_FILES[2]),
        (&general, false, LM_FILES[3]),
    ];
    let results: Vec<Result<()>> = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|&(corpus, source_side, file)| {
                let vocab = if source_side { &src_vocab } else { &tgt_vocab };
                let out = a.out_dir.join(file);
                scope.spawn(move || -> Result<()> {
                    let lm = if source_side {
                        train_lm(corpus.source_side(), vocab, a.order, smoothing)?
                    } else {
                        train_lm(corpus.target_side(), vocab, a.order, smoothing)?
                    };
                    lm.save(&out)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("training thread panicked"))
            .collect()
    });
    for r in results {
        r?;
    }
    eprintln!(
        "train-lm: source vocabulary {} words, target vocabulary {} words (min count {})",
        src_vocab.content_len(),
        tgt_vocab.content_len(),
        a.min_count
    );
    write_snapshot(
        &a.out_dir,
        "train-lm",
        json!({
            "in_domain_src": path_str(&a.in_domain_src),
            "in_domain_tgt": path_str(&a.in_domain_tgt),
            "general_src": path_str(&a.general.general_src),
            "general_tgt": path_str(&a.general.general_tgt),
            "order": a.order,
            "min_count": a.min_count,
            "smoothing": smoothing.tag(),
            "out_dir": path_str(&a.out_dir),
        }),
    )
}

fn rank(a: &RankArgs) -> Result<()> {
    if a.random && a.import_scores.is_some() {
        return Err(usage("--random and --import-scores cannot be combined"));
    }
    if a.random && a.seed.is_none() {
        return Err(usage("--random requires --seed"));
    }
    if !a.random && a.seed.is_some() {
        return Err(usage("--seed is only used with --random"));
    }
    if a.workers < 1 {
        return Err(usage("--workers must be at least 1"));
    }
    ensure_out_dir(&a.out_dir)?;
    let bitext = load_bitext(&a.general.general_src, &a.general.general_tgt)?;
    let lm_dir = a.lm_dir.clone().unwrap_or_else(|| a.out_dir.clone());

    let ranking = if let (true, Some(seed)) = (a.random, a.seed) {
        if bitext.is_empty() {
            return Err(Error::Parameter("cannot rank an empty bitext".into()));
        }
        random_ranking(&bitext, seed)
    } else if let Some(path) = &a.import_scores {
        let records = import_external_scores(path, &bitext)?;
        write_scores(&a.out_dir.join("scores.tsv"), &records)?;
        rank_with_origin(&records, RankingOrigin::Imported)
    } else {
        let lms = LM_FILES
            .iter()
            .map(|f| NGramLm::load(&lm_dir.join(f)))
            .collect::<Result<Vec<_>>>()?;
        let models = ScoringModels {
            in_source: &lms[0],
            general_source: &lms[1],
            in_target: &lms[2],
            general_target: &lms[3],
        };
        let records = compute_ced(&bitext, models, a.workers)?;
        write_scores(&a.out_dir.join("scores.tsv"), &records)?;
        rank_bitext(&records)
    };
    ranking.write(&a.out_dir.join("ranking.txt"))?;
    eprintln!("rank: {} pairs ranked ({})", ranking.len(), ranking.origin);
    write_snapshot(
        &a.out_dir,
        "rank",
        json!({
            "general_src": path_str(&a.general.general_src),
            "general_tgt": path_str(&a.general.general_tgt),
            "lm_dir": path_str(&lm_dir),
            "workers": a.workers,
            "import_scores": a.import_scores.as_deref().map(path_str),
            "origin": ranking.origin.to_string(),
            "seed": a.seed,
            "out_dir": path_str(&a.out_dir),
        }),
    )
}

fn budget_from(a: &SelectArgs) -> Result<Budget> {
    match (a.budget_tokens, a.budget_sentences) {
        (Some(t), None) => Ok(Budget::Tokens(t)),
        (None, Some(n)) => Ok(Budget::Sentences(n)),
        (Some(_), Some(_)) => Err(usage("give only one of --budget-tokens and --budget-sentences")),
        (None, None) => Err(usage(format!(
            "--method {} requires --budget-tokens or --budget-sentences",
            a.method
        ))),
    }
}

/// Resolves the selection flags into a schedule, rejecting flags that do
/// not belong to the chosen method.
pub fn schedule_from(a: &SelectArgs) -> Result<SelectionSchedule> {
    let reject = |present: bool, flag: &str| -> Result<()> {
        if present {
            Err(usage(format!("{flag} is not used by --method {}", a.method)))
        } else {
            Ok(())
        }
    };
    let method = match a.method.as_str() {
        "static" => {
            reject(a.alpha.is_some(), "--alpha")?;
            reject(a.beta.is_some(), "--beta")?;
            reject(a.eta.is_some(), "--eta")?;
            reject(a.seed.is_some(), "--seed")?;
            Method::Static {
                budget: budget_from(a)?,
            }
        }
        "sampling" => {
            reject(a.alpha.is_some(), "--alpha")?;
            reject(a.beta.is_some(), "--beta")?;
            reject(a.eta.is_some(), "--eta")?;
            let seed = a.seed.ok_or_else(|| usage("--method sampling requires --seed"))?;
            Method::Sampling {
                budget: budget_from(a)?,
                seed,
            }
        }
        "gradual" => {
            reject(a.budget_tokens.is_some(), "--budget-tokens")?;
            reject(a.budget_sentences.is_some(), "--budget-sentences")?;
            reject(a.seed.is_some(), "--seed")?;
            let need = |v: Option<f64>, flag: &str| v.ok_or_else(|| usage(format!("--method gradual requires {flag}")));
            Method::Gradual {
                alpha: need(a.alpha, "--alpha")?,
                beta: need(a.beta, "--beta")?,
                eta: a.eta.ok_or_else(|| usage("--method gradual requires --eta"))?,
            }
        }
        other => {
            return Err(usage(format!(
                "unknown --method '{other}' (expected static, sampling or gradual)"
            )))
        }
    };
    SelectionSchedule::new(method, a.epochs).map_err(|e| usage(e.to_string()))
}

fn select(a: &SelectArgs) -> Result<()> {
    let schedule = schedule_from(a)?;
    ensure_out_dir(&a.out_dir)?;
    let bitext = load_bitext(&a.general.general_src, &a.general.general_tgt)?;
    let ranking_path = a.ranking.clone().unwrap_or_else(|| a.out_dir.join("ranking.txt"));
    let ranking = Ranking::read(&ranking_path)?;

    let scores_path = a.scores.clone().unwrap_or_else(|| a.out_dir.join("scores.tsv"));
    let weights = match schedule.method {
        Method::Sampling { .. } => {
            let records = validate_scores(read_scores(&scores_path)?, &bitext)?;
            Some(compute_sampling_weights(&records)?)
        }
        _ => None,
    };
    let manifests = build_epoch_manifests(&ranking, &bitext, &schedule, weights.as_ref())?;
    if let Method::Static {
        budget: Budget::Tokens(0),
    }
    | Method::Sampling {
        budget: Budget::Tokens(0),
        ..
    } = schedule.method
    {
        eprintln!("warning: a budget of 0 tokens selects no pairs; every epoch is empty");
    } else if manifests.iter().any(|m| m.pair_ids.is_empty()) {
        eprintln!("warning: some epochs select no pairs");
    }

    write_manifests(&a.out_dir.join("manifest.jsonl"), &manifests, &schedule)?;
    let summary = summary_json(&manifests, &schedule, &bitext, a.epochs)?;
    write_json(&a.out_dir.join("summary.json"), &summary)?;
    if a.emit_text {
        emit_epoch_text(&a.out_dir, &manifests, &bitext)?;
    }
    eprintln!(
        "select: {} epochs, relative training time {:.4}",
        manifests.len(),
        summary["relative_training_time"].as_f64().unwrap_or(f64::NAN)
    );
    write_snapshot(
        &a.out_dir,
        "select",
        json!({
            "general_src": path_str(&a.general.general_src),
            "general_tgt": path_str(&a.general.general_tgt),
            "ranking": path_str(&ranking_path),
            "scores": weights.as_ref().map(|_| path_str(&scores_path)),
            "method": a.method,
            "budget_tokens": a.budget_tokens,
            "budget_sentences": a.budget_sentences,
            "alpha": a.alpha,
            "beta": a.beta,
            "eta": a.eta,
            "epochs": a.epochs,
            "seed": a.seed,
            "emit_text": a.emit_text,
            "out_dir": path_str(&a.out_dir),
        }),
    )
}

fn manifest_label(path: &Path, method: &str) -> String {
    let stem = path
        .parent()
        .and_then(|p| p.file_name())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    if stem.is_empty() {
        method.to_string()
    } else {
        format!("{method}:{stem}")
    }
}

fn stats(a: &StatsArgs) -> Result<()> {
    if a.baseline_epochs < 1 {
        return Err(usage("--baseline-epochs must be at least 1"));
    }
    ensure_out_dir(&a.out_dir)?;
    let bitext = load_bitext(&a.general.general_src, &a.general.general_tgt)?;
    let mut methods = Vec::new();
    for path in &a.manifest {
        let loaded = read_manifests(path)?;
        methods.push((manifest_label(path, &loaded.method), loaded.manifests));
    }
    let full = vec![crate::selection::EpochManifest {
        epoch: 1,
        pair_ids: bitext.ids().collect(),
        source_tokens: bitext.total_source_tokens(),
        cumulative_source_tokens: bitext.total_source_tokens(),
    }];
    let mut with_baseline = vec![("complete-bitext".to_string(), full)];
    with_baseline.extend(methods.iter().cloned());

    let mut method_stats = Vec::new();
    for (label, manifests) in &methods {
        let freq = selection_frequencies(manifests)?;
        let distinct = freq.counts.len();
        method_stats.push(json!({
            "method": label,
            "epochs": manifests.len(),
            "relative_training_time": relative_training_time(manifests, &bitext, a.baseline_epochs)?,
            "distinct_pairs": distinct,
            "epoch_sizes": manifests.iter().map(|m| m.pair_ids.len()).collect::<Vec<_>>(),
            "frequency_histogram": histogram(&freq.counts.values().copied().collect::<Vec<_>>(), manifests.len(), bitext.len() - distinct),
        }));
    }

    let mut coverage = Vec::new();
    let mut text = String::new();
    let mut csv = String::new();
    for test in &a.test_src {
        let sentences = load_sentences(test)?;
        let reports = coverage_table(&sentences, &with_baseline, &bitext)?;
        text.push_str(&format!("# test set {}\n", test.display()));
        text.push_str(&coverage_text_table(&reports));
        text.push('\n');
        for line in coverage_csv(&reports).lines().skip(if csv.is_empty() { 0 } else { 1 }) {
            if csv.is_empty() {
                csv.push_str("test_set,");
            } else {
                csv.push_str(&format!("{},", test.display()));
            }
            csv.push_str(line);
            csv.push('\n');
        }
        coverage.push(json!({"test_set": path_str(test), "reports": reports}));
    }

    let report = json!({"methods": method_stats, "coverage": coverage});
    write_json(&a.out_dir.join("stats.json"), &report)?;
    fs::write(a.out_dir.join("stats.txt"), &text).map_err(|e| Error::io(a.out_dir.join("stats.txt"), e))?;
    if a.csv {
        let path = a.out_dir.join("coverage.csv");
        fs::write(&path, &csv).map_err(|e| Error::io(&path, e))?;
    }
    eprint!("{text}");
    write_snapshot(
        &a.out_dir,
        "stats",
        json!({
            "general_src": path_str(&a.general.general_src),
            "general_tgt": path_str(&a.general.general_tgt),
            "manifest": a.manifest.iter().map(|p| path_str(p)).collect::<Vec<_>>(),
            "test_src": a.test_src.iter().map(|p| path_str(p)).collect::<Vec<_>>(),
            "baseline_epochs": a.baseline_epochs,
            "csv": a.csv,
            "out_dir": path_str(&a.out_dir),
        }),
    )
}

/// Number of pairs selected in exactly k epochs, for k = 0..=epochs.
fn histogram(freqs: &[usize], epochs: usize, never: usize) -> Vec<usize> {
    let mut h = vec![0; epochs + 1];
    h[0] = never;
    for &f in freqs {
        h[f.min(epochs)] += 1;
    }
    h
}

fn eval_proxy(a: &EvalProxyArgs) -> Result<()> {
    if a.order < 1 {
        return Err(usage("--order must be at least 1"));
    }
    ensure_out_dir(&a.out_dir)?;
    let bitext = load_bitext(&a.general.general_src, &a.general.general_tgt)?;
    let dev = load_parallel(&a.dev_src, &a.dev_tgt)?;
    let selected: Vec<PairId> = match (&a.manifest, &a.ids) {
        (Some(m), _) => {
            let mut ids: Vec<PairId> = read_manifests(m)?
                .manifests
                .into_iter()
                .flat_map(|m| m.pair_ids)
                .collect();
            ids.sort_unstable();
            ids.dedup();
            ids
        }
        (None, Some(p)) => read_id_list(p)?,
        (None, None) => return Err(usage("eval-proxy requires --manifest or --ids")),
    };
    let fit = proxy_domain_fit_with_order(&selected, &bitext, &dev, a.order)?;
    eprintln!(
        "eval-proxy: {} pairs, dev cross-entropy {fit:.6} nats/token",
        selected.len()
    );
    write_json(
        &a.out_dir.join("proxy.json"),
        &json!({
            "selected_pairs": selected.len(),
            "order": a.order,
            "dev_cross_entropy_nats": fit,
            "dev_perplexity": fit.exp(),
        }),
    )?;
    write_snapshot(
        &a.out_dir,
        "eval-proxy",
        json!({
            "general_src": path_str(&a.general.general_src),
            "general_tgt": path_str(&a.general.general_tgt),
            "manifest": a.manifest.as_deref().map(path_str),
            "ids": a.ids.as_deref().map(path_str),
            "dev_src": path_str(&a.dev_src),
            "dev_tgt": path_str(&a.dev_tgt),
            "order": a.order,
            "out_dir": path_str(&a.out_dir),
        }),
    )
}
