//! `clamp`: train and use contrastive crystal–text embeddings.
//!
//! Exit codes: 0 success, 1 usage or config error, 2 data error, 3 numeric failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use clamp_core::corpus::{load_manifest, synth_corpus, validate, SyntheticSpec, ValidationPolicy};
use clamp_core::pipeline::{
    classify, embed_records, evaluate, load_usable, save_embeddings, train, Checkpoint, Modality, PipelineError, RunConfig,
};

#[derive(Parser)]
#[command(name = "clamp", version, about = "Contrastive crystal-text embeddings")]
struct Cli {
    /// Worker threads for validation and graph building.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Policy {
    Default,
    ExcludePartial,
}

impl From<Policy> for ValidationPolicy {
    fn from(p: Policy) -> Self {
        match p {
            Policy::Default => ValidationPolicy::Default,
            Policy::ExcludePartial => ValidationPolicy::ExcludePartial,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModalityArg {
    Crystal,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Check every CIF in a manifest and write a JSON report.
    Validate {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, value_enum, default_value = "default")]
        policy: Policy,
        /// Report path; printed to standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train from scratch; writes final.ckpt, best.ckpt, metrics.json and timing.json.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the config's manifest.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Export unit embeddings for every record.
    Embed {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "crystal")]
        modality: ModalityArg,
        /// Leave out records that fail validation instead of failing.
        #[arg(long)]
        skip_bad: bool,
        #[arg(long, value_enum)]
        policy: Option<Policy>,
    },
    /// Rank prompts against one crystal; prints `rank<TAB>score<TAB>prompt`.
    Classify {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        cif: PathBuf,
        /// One prompt per line.
        #[arg(long)]
        prompts: PathBuf,
    },
    /// Pair-matching accuracy and recall@{1,5,10} over a manifest.
    Eval {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        /// Report path; printed to standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        skip_bad: bool,
        #[arg(long, value_enum)]
        policy: Option<Policy>,
    },
    /// Generate a synthetic corpus: manifest.jsonl, cifs/ and prompts.txt.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 8)]
        classes: usize,
        #[arg(long, default_value_t = 64)]
        per_class: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn read(path: &Path) -> Result<String, PipelineError> {
    std::fs::read_to_string(path).map_err(|e| PipelineError::Io { path: path.into(), source: e })
}

fn emit_json<S: serde::Serialize>(value: &S, out: Option<&Path>) -> Result<(), PipelineError> {
    let text = serde_json::to_string_pretty(value).expect("report serializes") + "\n";
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| PipelineError::Io { path: p.into(), source: e }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<u8, PipelineError> {
    if cli.threads == 0 {
        return Err(PipelineError::Usage("--threads must be >= 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
        .map_err(|e| PipelineError::Usage(e.to_string()))?;

    match cli.command {
        Command::Validate { manifest, policy, out } => {
            let records = load_manifest(&manifest)?;
            let base = manifest.parent().unwrap_or(Path::new("."));
            let (report, _) = validate(&records, base, policy.into());
            emit_json(&report, out.as_deref())?;
            Ok(if report.excluded > 0 { 2 } else { 0 })
        }
        Command::Train { config, manifest, seed, out } => {
            let mut cfg = match &config {
                Some(p) => RunConfig::load(p)?,
                None => RunConfig::default(),
            };
            if let Some(s) = seed {
                cfg.train.seed = s;
            }
            let manifest = manifest
                .or(cfg.data.manifest.clone())
                .ok_or_else(|| PipelineError::Usage("no manifest: pass --manifest or set data.manifest".into()))?;
            cfg.data.manifest = Some(manifest.clone());
            let outcome = train(&cfg, &manifest, &mut |line| eprintln!("{line}"))?;
            outcome.write(&out)?;
            eprintln!("best epoch {}; wrote {}", outcome.report.best_epoch, out.display());
            Ok(0)
        }
        Command::Embed { ckpt, manifest, out, modality, skip_bad, policy } => {
            let ckpt = Checkpoint::load(&ckpt)?;
            let policy = policy.map(Into::into).unwrap_or(ckpt.config.data.policy);
            let usable = load_usable(&manifest, policy, &ckpt.config.graph, !skip_bad)?;
            let modality = match modality {
                ModalityArg::Crystal => Modality::Crystal,
                ModalityArg::Text => Modality::Text,
            };
            let m = embed_records(&ckpt, &usable, modality)?;
            save_embeddings(&out, &m, modality)?;
            Ok(0)
        }
        Command::Classify { ckpt, cif, prompts } => {
            let ckpt = Checkpoint::load(&ckpt)?;
            let prompts: Vec<String> = read(&prompts)?.lines().filter(|l| !l.trim().is_empty()).map(str::to_string).collect();
            let result = classify(&ckpt, &read(&cif)?, &prompts)?;
            for (rank, (i, score)) in result.ranking.iter().enumerate() {
                println!("{}\t{score:.6}\t{}", rank + 1, prompts[*i]);
            }
            Ok(0)
        }
        Command::Eval { ckpt, manifest, out, skip_bad, policy } => {
            let ckpt = Checkpoint::load(&ckpt)?;
            let policy = policy.map(Into::into).unwrap_or(ckpt.config.data.policy);
            let usable = load_usable(&manifest, policy, &ckpt.config.graph, !skip_bad)?;
            emit_json(&evaluate(&ckpt, &usable)?, out.as_deref())?;
            Ok(0)
        }
        Command::Synth { out, classes, per_class, seed } => {
            let spec = SyntheticSpec::standard(classes, per_class, seed);
            spec.validate().map_err(|e| PipelineError::Usage(e.to_string()))?;
            synth_corpus(&spec, &out)?;
            Ok(0)
        }
    }
}
