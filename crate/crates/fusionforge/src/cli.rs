//! The `fusionforge` command line.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use fusionforge_core::denoise::{denoise_decide, TranscriptTriple, DEFAULT_THRESHOLD};
use fusionforge_core::ensemble::{ensemble_predict, labeled_split, rank_models};
use fusionforge_core::fusion::{train, FusionMode};
use fusionforge_core::metrics::{confusion, report};
use fusionforge_core::mining::{HistoryEntry, Miner, MiningRun};
use fusionforge_core::synth::{generate, SynthConfig};
use fusionforge_core::{GroupSpec, ModalityId, ModalitySpec, Split};
use serde::Serialize;
use unicode_normalization::UnicodeNormalization;

use crate::config::{EnsembleConfig, LabelVocab, ModalityDecl, RunConfig};
use crate::error::{Error, Result};
use crate::io::{self, CsvTable};
use crate::parallel::Threads;

#[derive(Debug, Parser)]
#[command(name = "fusionforge", version, about = "Multimodal late-fusion emotion recognition pipeline")]
pub struct Cli {
    /// Upper bound on worker threads (defaults to available cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic multimodal dataset.
    Synth(SynthArgs),
    /// Train one fusion branch on the train split.
    Train(TrainArgs),
    /// Score a model on a split and print a JSON report.
    Eval(EvalArgs),
    /// Run iterative four-learner pseudo-label mining.
    Mine(MineArgs),
    /// Rank models and combine their predictions by mode voting.
    Ensemble(EnsembleArgs),
    /// Choose between separated and original audio from transcripts.
    DenoiseSelect(DenoiseArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 6)]
    pub classes: usize,
    #[arg(long, default_value_t = 200)]
    pub labeled: usize,
    #[arg(long, default_value_t = 2000)]
    pub unlabeled: usize,
    #[arg(long, default_value_t = 300)]
    pub val: usize,
    #[arg(long, default_value_t = 300)]
    pub test: usize,
    /// Fraction of samples with one modality drawn from a wrong class.
    #[arg(long, default_value_t = 0.15)]
    pub conflict: f64,
    #[arg(long, default_value_t = 0.0)]
    pub label_noise: f64,
    /// Within-class standard deviation.
    #[arg(long, default_value_t = 1.5)]
    pub noise: f64,
    /// Distance between class means.
    #[arg(long, default_value_t = 4.0)]
    pub separation: f64,
    /// Comma-separated modality ids.
    #[arg(long, default_value = "audio,text,vision,joint_at", value_delimiter = ',')]
    pub modalities: Vec<ModalityId>,
    /// Dimension of every generated modality.
    #[arg(long, default_value_t = 32)]
    pub dim: usize,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output model file; a JSON sidecar is written next to it.
    #[arg(long)]
    pub out: PathBuf,
    /// Group spec such as `audio,text,vision`; defaults to the first configured one.
    #[arg(long)]
    pub group: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub fusion: Option<FusionMode>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value = "val")]
    pub split: Split,
    /// Sealed label file used to score splits without manifest labels.
    #[arg(long)]
    pub answers: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MineArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Deal pseudo-labels to learners class by class.
    #[arg(long)]
    pub stratify: bool,
}

#[derive(Debug, Args)]
pub struct EnsembleArgs {
    /// Comma-separated model files.
    #[arg(long, value_delimiter = ',', required = true)]
    pub models: Vec<PathBuf>,
    /// Dataset directory containing `config.json`.
    #[arg(long, conflicts_with = "config")]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "test")]
    pub split: Split,
    /// Split used to rank the models (defaults to the config's `ensemble.rank_split`).
    #[arg(long)]
    pub rank_split: Option<Split>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct DenoiseArgs {
    /// CSV with header `sample_id,text_temp,text_id0,text_id1`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
    /// NFC-normalize and collapse whitespace before comparing.
    #[arg(long)]
    pub normalize: bool,
}

/// Parses `argv`, runs the subcommand and returns the process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let threads = cli.threads.map_or_else(Threads::available, Threads::new);
    match cli.command {
        Command::Synth(a) => synth(a),
        Command::Train(a) => train_cmd(a),
        Command::Eval(a) => eval(a),
        Command::Mine(a) => mine(a, threads),
        Command::Ensemble(a) => ensemble(a),
        Command::DenoiseSelect(a) => denoise(a),
    }
}

fn require_config(config: Option<&Path>) -> Result<RunConfig> {
    let path = config.ok_or_else(|| Error::Usage("missing required flag --config".into()))?;
    RunConfig::load(path)
}

fn synth(a: SynthArgs) -> Result<()> {
    let config = SynthConfig {
        classes: a.classes,
        modalities: a
            .modalities
            .iter()
            .map(|id| ModalitySpec {
                id: id.clone(),
                dim: a.dim,
            })
            .collect(),
        separation: a.separation,
        noise: a.noise,
        conflict_rate: a.conflict,
        label_noise: a.label_noise,
        labeled: a.labeled,
        unlabeled: a.unlabeled,
        val: a.val,
        test: a.test,
        seed: a.seed,
        ..SynthConfig::default()
    };
    let out = generate(&config)?;
    let dir = &a.out;

    let mut decls = Vec::new();
    for (spec, records) in out.modalities.iter().zip(&out.records) {
        let file = PathBuf::from(format!("{}.mmf", spec.id));
        io::write_feature_file(records, spec.dim, &dir.join(&file))?;
        decls.push(ModalityDecl {
            id: spec.id.clone(),
            dim: spec.dim,
            file,
        });
    }
    io::write_manifest(&dir.join("manifest.csv"), &out.manifest, &out.label_vocab)?;

    let mut answers = CsvTable::create(&dir.join("answers.csv"), &io::ANSWERS_HEADER)?;
    for ans in &out.answers {
        let conflict = ans.conflict.map_or("", |(m, _)| out.modalities[m].id.as_str());
        answers.row([
            ans.sample_id.as_str(),
            ans.split.as_str(),
            out.label_vocab[ans.label].as_str(),
            conflict,
        ])?;
    }
    answers.finish()?;

    let canonical: Vec<ModalityId> = ModalityId::canonical().into();
    let group_specs = if canonical.iter().all(|m| a.modalities.contains(m)) {
        fusionforge_core::mining::default_group_specs()
    } else {
        vec![GroupSpec::new(a.modalities.clone())?]
    };
    let run = RunConfig {
        manifest: "manifest.csv".into(),
        modalities: decls,
        label_vocab: LabelVocab::Labels(out.label_vocab.clone()),
        pooling: Default::default(),
        group_specs,
        train: fusionforge_core::TrainConfig {
            seed: a.seed,
            d_model: 32,
            d_z: 32,
            learning_rate: 3e-3,
            epochs: 60,
            weight_decay: 0.1,
            ..Default::default()
        },
        mining: Default::default(),
        ensemble: EnsembleConfig::default(),
        seed: Some(a.seed),
        answers: None,
    };
    io::write_json(&dir.join("config.json"), &run)?;
    io::write_json(&dir.join("synth.json"), &config)
}

fn apply_seed(config: &mut RunConfig, seed: Option<u64>) {
    if let Some(s) = seed {
        config.set_seed(s);
    }
}

fn train_cmd(a: TrainArgs) -> Result<()> {
    let mut config = require_config(a.config.as_deref())?;
    apply_seed(&mut config, a.seed);
    if let Some(e) = a.epochs {
        config.train.epochs = e;
    }
    if let Some(f) = a.fusion {
        config.train.fusion = f;
    }
    let spec = match &a.group {
        Some(g) => GroupSpec::parse(g)?,
        None => config
            .group_specs
            .first()
            .cloned()
            .ok_or_else(|| Error::Usage("no --group given and no group_specs configured".into()))?,
    };
    let dataset = config.dataset()?;
    let model = train(&dataset, &spec, &config.train)?;
    io::save_model(&model, &a.out)
}

#[derive(Debug, Serialize)]
struct ClassReport<'a> {
    name: &'a str,
    precision: f64,
    recall: f64,
    f1: f64,
    support: u64,
}

#[derive(Debug, Serialize)]
struct EvalReport<'a> {
    waf: f64,
    accuracy: f64,
    per_class: Vec<ClassReport<'a>>,
}

fn eval(a: EvalArgs) -> Result<()> {
    let config = require_config(a.config.as_deref())?;
    let dataset = config.dataset_with_answers(a.answers.as_deref())?;
    let model = io::load_model(&a.model)?;
    model.check_dataset(&dataset)?;
    let (indices, truth) = labeled_split(&dataset, a.split)?;
    let pred = model.predict_labels(&dataset, &indices)?;
    let r = report(&confusion(&truth, &pred, dataset.num_classes())?)?;
    let out = EvalReport {
        waf: r.waf,
        accuracy: r.accuracy,
        per_class: r
            .per_class
            .iter()
            .zip(dataset.label_vocab())
            .map(|(c, name)| ClassReport {
                name,
                precision: c.precision,
                recall: c.recall,
                f1: c.f1,
                support: c.support,
            })
            .collect(),
    };
    let json = io::to_json_pretty(&out);
    match &a.out {
        Some(path) => io::write_bytes(path, json.as_bytes()),
        None => {
            print!("{json}");
            Ok(())
        }
    }
}

#[derive(Debug, Serialize)]
struct History<'a> {
    group_specs: Vec<String>,
    iterations: &'a [HistoryEntry],
}

fn save_learners(dir: &Path, run: &MiningRun) -> Result<()> {
    for (j, m) in run.learners.iter().enumerate() {
        io::save_model(m, &dir.join(format!("learner_{}.bin", j + 1)))?;
    }
    Ok(())
}

fn mine(a: MineArgs, threads: Threads) -> Result<()> {
    let mut config = require_config(a.config.as_deref())?;
    apply_seed(&mut config, a.seed);
    if let Some(n) = a.iterations {
        config.mining.iterations = n;
    }
    if a.stratify {
        config.mining.stratify = true;
    }
    let dataset = config.dataset()?;
    let miner = Miner::new(&dataset, config.group_specs.clone(), config.train.clone(), config.mining.clone())?;

    let iteration_err = |iteration: usize| {
        move |e: fusionforge_core::Error| {
            Error::Core(fusionforge_core::Error::Iteration {
                iteration,
                source: Box::new(e),
            })
        }
    };
    let mut run = miner.initial(&threads).map_err(iteration_err(0))?;
    save_learners(&a.out.join("iter_0"), &run)?;
    for it in 1..=config.mining.iterations {
        run = miner.iterate(&run, &threads).map_err(iteration_err(it))?;
        save_learners(&a.out.join(format!("iter_{it}")), &run)?;
    }

    io::write_json(
        &a.out.join("history.json"),
        &History {
            group_specs: config.group_specs.iter().map(ToString::to_string).collect(),
            iterations: &run.state.history,
        },
    )?;
    let vocab = dataset.label_vocab();
    let mut table = CsvTable::create(
        &a.out.join("pseudo_labels.csv"),
        &["sample_id", "label", "agreement", "iteration"],
    )?;
    for p in run.state.pseudo_labels() {
        table.row([
            p.sample_id.clone(),
            vocab[p.label].clone(),
            p.agreement.to_string(),
            p.iteration.to_string(),
        ])?;
    }
    table.finish()
}

fn ensemble(a: EnsembleArgs) -> Result<()> {
    let config_path = match (&a.data, &a.config) {
        (Some(dir), _) => dir.join("config.json"),
        (None, Some(c)) => c.clone(),
        (None, None) => return Err(Error::Usage("missing required flag --data or --config".into())),
    };
    let mut config = RunConfig::load(&config_path)?;
    apply_seed(&mut config, a.seed);
    let dataset = config.dataset()?;
    let models = a
        .models
        .iter()
        .map(|p| io::load_model(p).map(|m| (p.display().to_string(), m)))
        .collect::<Result<Vec<_>>>()?;
    for (_, m) in &models {
        m.check_dataset(&dataset)?;
    }
    let rank_split = a.rank_split.unwrap_or(config.ensemble.rank_split);
    let ranked = rank_models(&models, &dataset, rank_split)?;
    let out = ensemble_predict(&ranked, &models, &dataset, a.split)?;

    let vocab = dataset.label_vocab();
    let mut table = CsvTable::create(&a.out, &["sample_id", "label", "rounds_used"])?;
    for ((id, label), trace) in out.sample_ids.iter().zip(&out.labels).zip(&out.traces) {
        table.row([id.clone(), vocab[*label].clone(), trace.rounds.len().to_string()])?;
    }
    table.finish()
}

/// NFC normalization with runs of whitespace collapsed to one space and trimmed.
pub fn normalize_transcript(text: &str) -> String {
    let nfc: String = text.nfc().collect();
    nfc.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub const DENOISE_INPUT_HEADER: [&str; 4] = ["sample_id", "text_temp", "text_id0", "text_id1"];

fn denoise(a: DenoiseArgs) -> Result<()> {
    if !(a.threshold >= 0.0) {
        return Err(Error::Usage(format!("--threshold {} must be non-negative", a.threshold)));
    }
    let rows = io::read_csv_rows(&a.input, &DENOISE_INPUT_HEADER)?;
    let prep = |s: &str| {
        if a.normalize {
            normalize_transcript(s)
        } else {
            s.to_string()
        }
    };
    let mut table = CsvTable::create(&a.out, &["sample_id", "choice", "sim0", "sim1"])?;
    for row in rows {
        let triple = TranscriptTriple {
            text_temp: prep(&row[1]),
            text_id0: prep(&row[2]),
            text_id1: prep(&row[3]),
        };
        let d = denoise_decide(&triple, a.threshold)?;
        table.row([
            row[0].clone(),
            d.choice.to_string(),
            format!("{:.6}", d.sim0),
            format!("{:.6}", d.sim1),
        ])?;
    }
    table.finish()
}
