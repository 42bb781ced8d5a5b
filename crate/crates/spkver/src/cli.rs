//! Command-line front end.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use spkver_core::adaptation::{adapt_means, supervector_from_stats, AdaptationStats, Normalization, Supervector};
use spkver_core::diagnostics::{avg_between_class_distance, distance_matrix, map_mismatch, split_llrs};
use spkver_core::eval::{compute_eer, det_points, LlrBatchScorer, ScoreRecord, ScoreSet, Trial};
use spkver_core::features::{FeatureSequence, MFCC_DIM};
use spkver_core::gmm::{pool_frames, train_em, DiagonalGmm};
use spkver_core::partition::plan_partitions;
use spkver_core::adaptation::partition_stats;
use spkver_core::svm::{census, decision_value, vapnik_bound, SvmModel};
use spkver_core::synth::make_corpus;

use crate::config::ExperimentConfig;
use crate::corpus::{sha256_hex, write_corpus, DiskCorpus};
use crate::formats::csv::{format_diagnostics, DiagnosticsRow};
use crate::formats::models::{read_gmm_file, read_svm_file, write_gmm_file, write_svm_file};
use crate::formats::svec::{meta_path, read_svec_file, write_svec_file};
use crate::formats::trials::{format_det, read_scores_file, read_trials_file, write_scores_file};
use crate::formats::{read_file, write_file};
use crate::pipeline::train_client_svms;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

const RUN_RECORD: &str = "run.txt";
const SVM_SUFFIX: &str = ".svm.json";

#[derive(Debug, Parser)]
#[command(name = "spkver", version, about = "GMM-UBM and GMM-SVM speaker verification experiments")]
pub struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Configuration file, or `default`. Commands reading a corpus default to its embedded configuration.
    #[arg(long, global = true)]
    pub config: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum System {
    GmmUbm,
    GmmSvm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormalizationArg {
    Raw,
    #[value(alias = "kl_normalized")]
    KlNormalized,
}

impl From<NormalizationArg> for Normalization {
    fn from(n: NormalizationArg) -> Self {
        match n {
            NormalizationArg::Raw => Normalization::Raw,
            NormalizationArg::KlNormalized => Normalization::KlNormalized,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a seeded synthetic corpus.
    Synth {
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a UBM on the background speakers of a corpus.
    TrainUbm {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        order: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// MAP-adapt every client's training utterance, cut into P partitions.
    BuildSupervectors {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        ubm: PathBuf,
        #[arg(long, default_value_t = 1)]
        partitions: usize,
        #[arg(long, value_enum)]
        normalization: Option<NormalizationArg>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one-vs-rest SVMs, one model file per speaker.
    TrainSvm {
        #[arg(long)]
        supervectors: PathBuf,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Score a trial list.
    Score {
        #[arg(long, value_enum)]
        system: System,
        #[arg(long)]
        trials: PathBuf,
        /// UBM file (gmm-ubm) or SVM model directory (gmm-svm).
        #[arg(long)]
        models: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        /// UBM file; required by gmm-svm.
        #[arg(long)]
        ubm: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the EER of a score file and write its DET curve.
    Eval {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        det_out: PathBuf,
    },
    /// Distance, support-vector and (with --corpus and --ubm) zone/mismatch diagnostics.
    Diagnose {
        #[arg(long)]
        supervectors: PathBuf,
        #[arg(long)]
        models: PathBuf,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        ubm: Option<PathBuf>,
        /// Test duration for τ and mismatch; defaults to the shortest.
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
}

enum Failure {
    Usage(String),
    Data(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Data(e.into())
    }
}

type CmdResult = std::result::Result<(), Failure>;

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            EXIT_DATA
        }
    }
}

fn execute(cli: Cli) -> CmdResult {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Failure::Usage("--jobs must be at least 1".into()));
        }
        // A second build in the same process keeps the existing pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    let config = cli.config.as_deref();
    match cli.command {
        Command::Synth { out } => synth(config, &out),
        Command::TrainUbm { corpus, order, out } => train_ubm(config, &corpus, order, &out),
        Command::BuildSupervectors { corpus, ubm, partitions, normalization, out } => {
            build_supervectors(config, &corpus, &ubm, partitions, normalization.map(Into::into), &out)
        }
        Command::TrainSvm { supervectors, c, out_dir } => train_svm(config, &supervectors, c, &out_dir),
        Command::Score { system, trials, models, corpus, ubm, out } => {
            score(config, system, &trials, &models, &corpus, ubm.as_deref(), &out)
        }
        Command::Eval { scores, det_out } => eval(&scores, &det_out),
        Command::Diagnose { supervectors, models, epsilon, corpus, ubm, duration, out } => diagnose(
            config,
            &DiagnoseArgs {
                supervectors: &supervectors,
                models: &models,
                epsilon,
                corpus: corpus.as_deref(),
                ubm: ubm.as_deref(),
                duration,
                out: &out,
            },
        ),
    }
}

fn resolve_config(explicit: Option<&str>, corpus: Option<&DiskCorpus>) -> anyhow::Result<ExperimentConfig> {
    match (explicit, corpus) {
        (Some(s), _) => ExperimentConfig::load(s).context("loading configuration"),
        (None, Some(c)) => Ok(c.config.clone()),
        (None, None) => Ok(ExperimentConfig::default()),
    }
}

fn open_corpus(dir: &Path) -> anyhow::Result<DiskCorpus> {
    DiskCorpus::open(dir).with_context(|| format!("opening corpus {}", dir.display()))
}

/// Hash of a file, or of every file (sorted by name) in a directory.
fn hash_input(path: &Path) -> anyhow::Result<String> {
    if path.is_dir() {
        let mut names: Vec<PathBuf> = std::fs::read_dir(path)
            .with_context(|| format!("listing {}", path.display()))?
            .map(|e| e.map(|e| e.path()))
            .collect::<std::io::Result<_>>()?;
        names.retain(|p| p.is_file());
        names.sort();
        let mut joined = String::new();
        for p in names {
            let name = p.file_name().unwrap_or_default().to_string_lossy().into_owned();
            writeln!(joined, "{name} {}", sha256_hex(&read_file(&p)?)).expect("string write");
        }
        Ok(sha256_hex(joined.as_bytes()))
    } else {
        Ok(sha256_hex(&read_file(path)?))
    }
}

/// Resolved configuration plus the hash of every input, written next to an output.
fn write_run_record(record: &Path, command: &str, cfg: &ExperimentConfig, inputs: &[(&str, &Path)]) -> anyhow::Result<()> {
    let mut text = format!("# spkver {command}\n");
    for (label, path) in inputs {
        let name = path.file_name().unwrap_or_default().to_string_lossy();
        writeln!(text, "# input {label} {name} sha256={}", hash_input(path)?).expect("string write");
    }
    text.push_str(&cfg.to_text());
    write_file(record, text.as_bytes())?;
    Ok(())
}

fn record_for(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".run.txt");
    PathBuf::from(name)
}

fn synth(config: Option<&str>, out: &Path) -> CmdResult {
    let cfg = resolve_config(config, None)?;
    let corpus = make_corpus(&cfg.corpus_config()).context("generating corpus")?;
    write_corpus(out, &corpus, &cfg)?;
    let inputs: Vec<(&str, &Path)> = match config {
        Some(c) if c != "default" => vec![("config", Path::new(c))],
        _ => vec![],
    };
    write_run_record(&out.join(RUN_RECORD), "synth", &cfg, &inputs)?;
    log::info!("wrote {} utterances to {}", corpus.utterances.len(), out.display());
    Ok(())
}

fn train_ubm(config: Option<&str>, corpus_dir: &Path, order: usize, out: &Path) -> CmdResult {
    if order == 0 {
        return Err(Failure::Usage("--order must be at least 1".into()));
    }
    let corpus = open_corpus(corpus_dir)?;
    let cfg = resolve_config(config, Some(&corpus))?;
    let background: Vec<FeatureSequence> = corpus
        .background_ids()
        .par_iter()
        .map(|id| corpus.train_features(id))
        .collect::<crate::formats::Result<_>>()?;
    let pool = pool_frames(background.iter(), "ubm_pool").map_err(anyhow::Error::from)?;
    let em = cfg.em_config();
    let ubm = train_em(&pool, order, &em).context("training UBM")?;
    write_gmm_file(out, &ubm, Some(&em))?;
    write_run_record(&record_for(out), "train-ubm", &cfg, &[("corpus", &corpus.manifest_path())])?;
    Ok(())
}

fn load_ubm(path: &Path) -> anyhow::Result<DiagonalGmm> {
    Ok(read_gmm_file(path).with_context(|| format!("reading UBM {}", path.display()))?.0)
}

fn build_supervectors(
    config: Option<&str>,
    corpus_dir: &Path,
    ubm_path: &Path,
    partitions: usize,
    normalization: Option<Normalization>,
    out: &Path,
) -> CmdResult {
    if partitions == 0 {
        return Err(Failure::Usage("--partitions must be at least 1".into()));
    }
    let corpus = open_corpus(corpus_dir)?;
    let mut cfg = resolve_config(config, Some(&corpus))?;
    if let Some(n) = normalization {
        cfg.normalization = n;
    }
    let ubm = load_ubm(ubm_path)?;
    let fp = ubm.fingerprint();
    let per_client: Vec<Vec<Supervector>> = corpus
        .client_ids()
        .par_iter()
        .map(|id| -> anyhow::Result<Vec<Supervector>> {
            let x = corpus.train_features(id)?;
            let plan = plan_partitions(x.len(), partitions)?;
            let stats = partition_stats(&ubm, &x, std::slice::from_ref(&plan))?;
            stats[0]
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    Ok(supervector_from_stats(&ubm, fp, s, &cfg.map, cfg.normalization)?.with_label(*id, i as u32))
                })
                .collect()
        })
        .collect::<anyhow::Result<_>>()?;
    let svs: Vec<Supervector> = per_client.into_iter().flatten().collect();
    write_svec_file(out, &svs)?;
    write_run_record(
        &record_for(out),
        &format!("build-supervectors --partitions {partitions}"),
        &cfg,
        &[("corpus", &corpus.manifest_path()), ("ubm", ubm_path)],
    )?;
    Ok(())
}

/// Supervectors grouped by speaker, speakers in sorted order.
fn group_by_speaker(svs: Vec<Supervector>) -> (Vec<String>, Vec<Vec<Supervector>>) {
    let mut groups: BTreeMap<String, Vec<Supervector>> = BTreeMap::new();
    for s in svs {
        groups.entry(s.speaker_id.clone()).or_default().push(s);
    }
    groups.into_iter().unzip()
}

fn read_supervectors(path: &Path) -> anyhow::Result<Vec<Supervector>> {
    let svs = read_svec_file(path).with_context(|| format!("reading supervectors {}", path.display()))?;
    if svs.is_empty() {
        bail!("{} holds no supervectors", path.display());
    }
    Ok(svs)
}

fn train_svm(config: Option<&str>, svec: &Path, c: Option<f64>, out_dir: &Path) -> CmdResult {
    let mut cfg = resolve_config(config, None)?;
    if let Some(c) = c {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Failure::Usage("--c must be positive".into()));
        }
        cfg.svm.c = c;
    }
    let (speakers, per_speaker) = group_by_speaker(read_supervectors(svec)?);
    if speakers.len() < 2 {
        return Err(Failure::Data(anyhow::anyhow!("one-vs-rest training needs at least two speakers")));
    }
    let models = train_client_svms(&speakers, &per_speaker, &cfg.svm).context("training SVMs")?;
    for m in &models {
        write_svm_file(&out_dir.join(format!("{}{SVM_SUFFIX}", m.target_speaker)), m)?;
    }
    write_run_record(&out_dir.join(RUN_RECORD), "train-svm", &cfg, &[("supervectors", svec), ("supervectors-meta", &meta_path(svec))])?;
    Ok(())
}

fn read_svm_dir(dir: &Path) -> anyhow::Result<BTreeMap<String, SvmModel>> {
    let mut models = BTreeMap::new();
    let entries = std::fs::read_dir(dir).with_context(|| format!("listing models in {}", dir.display()))?;
    for e in entries {
        let path = e?.path();
        if path.to_string_lossy().ends_with(SVM_SUFFIX) {
            let m = read_svm_file(&path)?;
            models.insert(m.target_speaker.clone(), m);
        }
    }
    if models.is_empty() {
        bail!("no SVM models in {}", dir.display());
    }
    Ok(models)
}

/// Features of every distinct test utterance in `trials`.
fn load_utterances(corpus: &DiskCorpus, ids: &[&str]) -> anyhow::Result<BTreeMap<String, FeatureSequence>> {
    let seqs: Vec<(String, FeatureSequence)> =
        ids.par_iter().map(|id| Ok(((*id).to_owned(), corpus.features(id)?))).collect::<anyhow::Result<_>>()?;
    Ok(seqs.into_iter().collect())
}

/// Trial indices grouped by test utterance.
fn group_trials(trials: &[Trial]) -> Vec<(&str, Vec<usize>)> {
    let mut by_utt: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, t) in trials.iter().enumerate() {
        by_utt.entry(t.test_utterance.as_str()).or_default().push(i);
    }
    by_utt.into_iter().collect()
}

fn collect_scores(trials: &[Trial], groups: &[(&str, Vec<usize>)], per_group: Vec<Vec<f64>>) -> anyhow::Result<ScoreSet> {
    let mut scores = vec![0.0; trials.len()];
    for ((_, idx), s) in groups.iter().zip(per_group) {
        for (&i, v) in idx.iter().zip(s) {
            scores[i] = v;
        }
    }
    Ok(ScoreSet::new(trials.iter().zip(scores).map(|(t, score)| ScoreRecord { trial: t.clone(), score }).collect())?)
}

fn speaker_models(
    corpus: &DiskCorpus,
    ubm: &DiagonalGmm,
    cfg: &ExperimentConfig,
    speakers: &[&str],
) -> anyhow::Result<Vec<(DiagonalGmm, AdaptationStats)>> {
    speakers
        .par_iter()
        .map(|s| {
            let stats = AdaptationStats::collect(ubm, &corpus.train_features(s)?)?;
            Ok((adapt_means(ubm, &stats, &cfg.map)?, stats))
        })
        .collect()
}

fn score(
    config: Option<&str>,
    system: System,
    trials_path: &Path,
    models: &Path,
    corpus_dir: &Path,
    ubm_path: Option<&Path>,
    out: &Path,
) -> CmdResult {
    let corpus = open_corpus(corpus_dir)?;
    let cfg = resolve_config(config, Some(&corpus))?;
    let trials = read_trials_file(trials_path)?;
    let groups = group_trials(&trials);
    let utt_ids: Vec<&str> = groups.iter().map(|(u, _)| *u).collect();
    let utterances = load_utterances(&corpus, &utt_ids)?;

    let (scores, ubm_input) = match system {
        System::GmmUbm => {
            let ubm = load_ubm(models)?;
            let mut speakers: Vec<&str> = trials.iter().map(|t| t.target_speaker.as_str()).collect();
            speakers.sort_unstable();
            speakers.dedup();
            let gmms: Vec<DiagonalGmm> = speaker_models(&corpus, &ubm, &cfg, &speakers)?.into_iter().map(|(g, _)| g).collect();
            let batch = LlrBatchScorer::new(&ubm, &gmms)?;
            let index: BTreeMap<&str, usize> = speakers.iter().enumerate().map(|(i, s)| (*s, i)).collect();
            let per_group = groups
                .par_iter()
                .map(|(utt, idx)| {
                    let targets: Vec<usize> = idx.iter().map(|&i| index[trials[i].target_speaker.as_str()]).collect();
                    batch.score_for(&utterances[*utt], &targets)
                })
                .collect::<spkver_core::Result<Vec<_>>>()?;
            (collect_scores(&trials, &groups, per_group)?, models)
        }
        System::GmmSvm => {
            let ubm_path = ubm_path.ok_or_else(|| Failure::Usage("--system gmm-svm requires --ubm".into()))?;
            let ubm = load_ubm(ubm_path)?;
            let svms = read_svm_dir(models)?;
            let first = svms.values().next().expect("non-empty");
            let fp = ubm.fingerprint();
            if first.ubm_fingerprint != fp {
                return Err(Failure::Data(anyhow::anyhow!("SVM models were trained against a different UBM")));
            }
            let mode = first.normalization;
            let per_group = groups
                .par_iter()
                .map(|(utt, idx)| {
                    let stats = AdaptationStats::collect(&ubm, &utterances[*utt])?;
                    let x = supervector_from_stats(&ubm, fp, &stats, &cfg.map, mode)?;
                    idx.iter()
                        .map(|&i| {
                            let t = &trials[i].target_speaker;
                            let m = svms.get(t).ok_or_else(|| anyhow::anyhow!("no SVM model for speaker {t}"))?;
                            Ok(decision_value(m, &x)?)
                        })
                        .collect::<anyhow::Result<Vec<f64>>>()
                })
                .collect::<anyhow::Result<Vec<_>>>()?;
            (collect_scores(&trials, &groups, per_group)?, ubm_path)
        }
    };
    write_scores_file(out, &scores)?;
    let system_name = match system {
        System::GmmUbm => "gmm-ubm",
        System::GmmSvm => "gmm-svm",
    };
    write_run_record(
        &record_for(out),
        &format!("score --system {system_name}"),
        &cfg,
        &[("trials", trials_path), ("models", models), ("ubm", ubm_input), ("corpus", &corpus.manifest_path())],
    )?;
    Ok(())
}

fn eval(scores_path: &Path, det_out: &Path) -> CmdResult {
    let scores = read_scores_file(scores_path)?;
    let (t, n) = scores.counts();
    if t == 0 || n == 0 {
        return Err(Failure::Data(anyhow::anyhow!("score file needs both target and nontarget trials")));
    }
    let curve = det_points(&scores)?;
    let eer = compute_eer(&scores)?;
    write_file(det_out, format_det(&curve).as_bytes())?;
    println!("EER {:.2}% ({t} target, {n} nontarget trials)", 100.0 * eer);
    Ok(())
}

struct DiagnoseArgs<'a> {
    supervectors: &'a Path,
    models: &'a Path,
    epsilon: Option<f64>,
    corpus: Option<&'a Path>,
    ubm: Option<&'a Path>,
    duration: Option<f64>,
    out: &'a Path,
}

fn diagnose(config: Option<&str>, a: &DiagnoseArgs<'_>) -> CmdResult {
    let corpus = match (a.corpus, a.ubm) {
        (Some(c), Some(_)) => Some(open_corpus(c)?),
        (None, None) => None,
        _ => return Err(Failure::Usage("--corpus and --ubm must be given together".into())),
    };
    let mut cfg = resolve_config(config, corpus.as_ref())?;
    if let Some(e) = a.epsilon {
        if !(e > 0.0) {
            return Err(Failure::Usage("--epsilon must be positive".into()));
        }
        cfg.epsilon = e;
    }
    let svs = read_supervectors(a.supervectors)?;
    let normalization = svs[0].normalization;
    let dim = corpus.as_ref().map_or(MFCC_DIM, |c| c.manifest.dim);
    let partitions = svs.iter().map(|s| s.partition_index as usize + 1).max().unwrap_or(1);
    let (speakers, per_speaker) = group_by_speaker(svs);

    // Class supervector: mean over the speaker's partitions.
    let centroids: Vec<Vec<f64>> = per_speaker
        .iter()
        .map(|g| {
            let mut c = vec![0.0; g[0].dim()];
            for s in g {
                for (ci, v) in c.iter_mut().zip(&s.values) {
                    *ci += v / g.len() as f64;
                }
            }
            c
        })
        .collect();
    let rows: Vec<&[f64]> = centroids.iter().map(Vec::as_slice).collect();
    let avg_distance = if rows.len() >= 2 { Some(avg_between_class_distance(&distance_matrix(&rows)?)?) } else { None };

    let models = read_svm_dir(a.models)?;
    let n = models.len() as f64;
    let (mut pos, mut neg, mut bound) = (0.0, 0.0, 0.0);
    for m in models.values() {
        let c = census(m);
        pos += c.positive_sv_count as f64;
        neg += c.negative_sv_count as f64;
        bound += vapnik_bound(c.total() as f64, m.samples.len())?;
    }
    let (pos, neg, bound) = (pos / n, neg / n, bound / n);

    let (mut mean_tau, mut mean_mismatch) = (None, None);
    if let (Some(corpus), Some(ubm_path)) = (&corpus, a.ubm) {
        let ubm = load_ubm(ubm_path)?;
        let fp = ubm.fingerprint();
        let durations = &corpus.config.corpus.test_durations;
        let duration = a.duration.unwrap_or_else(|| durations.iter().copied().fold(f64::INFINITY, f64::min));
        let tests: Vec<&str> = corpus
            .manifest
            .utterances
            .iter()
            .filter(|u| u.duration == Some(duration) && speakers.contains(&u.speaker))
            .map(|u| u.id.as_str())
            .collect();
        if tests.is_empty() {
            return Err(Failure::Data(anyhow::anyhow!("no test segments of {duration} s for these speakers")));
        }
        let spk: Vec<&str> = speakers.iter().map(String::as_str).collect();
        let adapted = speaker_models(corpus, &ubm, &cfg, &spk)?;
        let index: BTreeMap<&str, usize> = spk.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        let ubm_sv = spkver_core::adaptation::ubm_supervector(&ubm, normalization);
        let per_test: Vec<(f64, f64)> = tests
            .par_iter()
            .map(|id| {
                let u = corpus.utterance(id).expect("listed utterance");
                let y = corpus.features(id)?;
                let (gmm, train_stats) = &adapted[index[u.speaker.as_str()]];
                let llrs = spkver_core::eval::frame_llrs(gmm, &ubm, &y)?;
                let tau = split_llrs(&llrs, cfg.epsilon).tau();
                let train_sv = supervector_from_stats(&ubm, fp, train_stats, &cfg.map, normalization)?;
                let test_sv = supervector_from_stats(&ubm, fp, &AdaptationStats::collect(&ubm, &y)?, &cfg.map, normalization)?;
                Ok((tau, map_mismatch(&train_sv, &test_sv, &ubm_sv)?.mismatch))
            })
            .collect::<anyhow::Result<_>>()?;
        let finite: Vec<f64> = per_test.iter().map(|p| p.0).filter(|t| t.is_finite()).collect();
        mean_tau = Some(if finite.is_empty() { f64::INFINITY } else { finite.iter().sum::<f64>() / finite.len() as f64 });
        mean_mismatch = Some(per_test.iter().map(|p| p.1).sum::<f64>() / per_test.len() as f64);
    }

    let row = DiagnosticsRow {
        order: per_speaker[0][0].dim() / dim,
        partitions,
        normalization,
        avg_between_class_distance: avg_distance,
        mean_tau,
        mean_mismatch,
        mean_positive_sv: Some(pos),
        mean_negative_sv: Some(neg),
        vapnik_bound: Some(bound),
    };
    write_file(a.out, format_diagnostics(&[row]).as_bytes())?;
    let mut inputs: Vec<(&str, &Path)> = vec![("supervectors", a.supervectors), ("models", a.models)];
    let manifest = corpus.as_ref().map(DiskCorpus::manifest_path);
    if let (Some(m), Some(u)) = (&manifest, a.ubm) {
        inputs.push(("corpus", m));
        inputs.push(("ubm", u));
    }
    write_run_record(&record_for(a.out), "diagnose", &cfg, &inputs)?;
    Ok(())
}
