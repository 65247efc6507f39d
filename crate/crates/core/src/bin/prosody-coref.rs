use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use prosody_coref::annotation::{nuclear_table, select_view, LabelSource};
use prosody_coref::cache::cached_document_frames;
use prosody_coref::coref::{
    apply_chains, chains_from_tree, decode, load_coref_model, save_coref_model, train_coref,
    FeatureConfig, ProsodyFeature, Scope,
};
use prosody_coref::corpus::{
    attach_audio, parse_corpus, read_manifest, serialize_corpus, Document,
};
use prosody_coref::detector::{
    annotate_document, evaluate_detector, labelled_windows, load_model, save_model, train,
    EventKind, TrainConfig, W_MAX,
};
use prosody_coref::experiment::{report, rows_to_tsv, run, ExperimentSpec};
use prosody_coref::metrics::score_documents;
use prosody_coref::synth::{generate, write_corpus, GenConfig, MANIFEST_FILE};
use prosody_coref::{Error, Result};

#[derive(Parser)]
#[command(
    name = "prosody-coref",
    version,
    about = "Prosodic event detection and prosody-aware coreference"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a pitch-accent or phrase-boundary detector on a corpus with audio.
    TrainProsody {
        #[arg(long)]
        event: EventKind,
        #[arg(long)]
        corpus: PathBuf,
        /// doc_id<TAB>wav manifest; defaults to audio.manifest next to the corpus.
        #[arg(long)]
        audio_manifest: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        epochs: usize,
        #[arg(long, default_value_t = 0.01)]
        learning_rate: f64,
        #[arg(long, default_value_t = 32)]
        batch_size: usize,
        #[arg(long, default_value_t = 1e-5)]
        l2: f64,
        /// PCF1 file reused across runs; created when missing.
        #[arg(long)]
        feature_cache: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fill the prediction columns of a corpus with detector output.
    PredictProsody {
        /// One model per event kind; repeat for both.
        #[arg(long, required = true)]
        model: Vec<PathBuf>,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        audio_manifest: Option<PathBuf>,
        #[arg(long)]
        feature_cache: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare predicted columns against gold labels.
    EvalProsody {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gold: PathBuf,
    },
    /// Add a nuclear-accent column derived from accent and boundary labels.
    DeriveNuclear {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value = "gold")]
        source: LabelSource,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a coreference model.
    TrainCoref {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value = "none")]
        prosody: ProsodyFeature,
        #[arg(long, default_value = "short")]
        scope: Scope,
        #[arg(long, default_value = "gold")]
        source: LabelSource,
        #[arg(long, default_value_t = 10)]
        epochs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Resolve coreference and write the predicted chains.
    PredictCoref {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        /// Labels feeding the prosodic feature; defaults to the training source.
        #[arg(long)]
        source: Option<LabelSource>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score response chains against key chains (MUC, B3, CEAFe, CoNLL).
    Score {
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        response: PathBuf,
    },
    /// Generate a synthetic corpus with audio.
    GenCorpus {
        /// Flat key = value file; omitted keys keep their defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Run the experiment grid and write the report.
    RunExperiments {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Machine-readable rows; defaults to the report path with a .tsv extension.
        #[arg(long)]
        rows: Option<PathBuf>,
    },
}

fn load_with_audio(corpus: &Path, manifest: Option<&Path>) -> Result<Vec<Document>> {
    let mut docs = parse_corpus(corpus)?;
    let default = corpus.with_file_name(MANIFEST_FILE);
    let manifest = match manifest {
        Some(m) => Some(m.to_path_buf()),
        None if default.exists() => Some(default),
        None => None,
    };
    if let Some(m) = manifest {
        attach_audio(&mut docs, &read_manifest(m)?);
    }
    Ok(docs)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::TrainProsody {
            event,
            corpus,
            audio_manifest,
            seed,
            epochs,
            learning_rate,
            batch_size,
            l2,
            feature_cache,
            out,
        } => {
            let docs = load_with_audio(&corpus, audio_manifest.as_deref())?;
            let frames = cached_document_frames(&docs, feature_cache.as_deref())?;
            let mut data = Vec::new();
            for (d, f) in docs.iter().zip(&frames) {
                data.extend(labelled_windows(d, f, event, W_MAX)?);
            }
            let cfg = TrainConfig {
                epochs,
                learning_rate,
                batch_size,
                seed,
                l2,
                ..TrainConfig::default()
            };
            let model = train(&data, event, &cfg)?;
            save_model(&model, &out)?;
            println!(
                "trained {event} detector on {} words, saved to {}",
                data.len(),
                out.display()
            );
        }
        Command::PredictProsody {
            model,
            corpus,
            audio_manifest,
            feature_cache,
            out,
        } => {
            let models = model.iter().map(load_model).collect::<Result<Vec<_>>>()?;
            let mut docs = load_with_audio(&corpus, audio_manifest.as_deref())?;
            let frames = cached_document_frames(&docs, feature_cache.as_deref())?;
            for (d, f) in docs.iter_mut().zip(&frames) {
                for m in &models {
                    annotate_document(m, d, f)?;
                }
            }
            serialize_corpus(&docs, &out)?;
        }
        Command::EvalProsody { pred, gold } => {
            let pred = parse_corpus(pred)?;
            let gold = parse_corpus(gold)?;
            if pred.len() != gold.len() {
                return Err(Error::LengthMismatch(pred.len(), gold.len()));
            }
            for kind in [EventKind::Accent, EventKind::Boundary] {
                let mut p = Vec::new();
                let mut g = Vec::new();
                for (pd, gd) in pred.iter().zip(&gold) {
                    if pd.doc_id != gd.doc_id || pd.tokens.len() != gd.tokens.len() {
                        return Err(Error::Config(format!(
                            "documents {} and {} do not align",
                            pd.doc_id, gd.doc_id
                        )));
                    }
                    for (i, (pt, gt)) in pd.tokens.iter().zip(&gd.tokens).enumerate() {
                        p.push(kind.pred(pt).ok_or_else(|| Error::MissingPrediction {
                            doc_id: pd.doc_id.clone(),
                            token: i,
                            column: if kind == EventKind::Accent {
                                "accent"
                            } else {
                                "boundary"
                            },
                        })?);
                        g.push(kind.gold(gt));
                    }
                }
                let s = evaluate_detector(&p, &g)?;
                println!(
                    "{kind}\taccuracy={:.4}\tevent={:.4}\tno_event={:.4}\tn={}",
                    s.accuracy, s.positive, s.negative, s.n
                );
            }
        }
        Command::DeriveNuclear {
            corpus,
            source,
            out,
        } => {
            let docs = parse_corpus(corpus)?;
            write_text(&out, &nuclear_table(&docs, source)?)?;
        }
        Command::TrainCoref {
            corpus,
            prosody,
            scope,
            source,
            epochs,
            seed,
            out,
        } => {
            let docs = parse_corpus(corpus)?;
            let cfg = FeatureConfig {
                prosody_feature: prosody,
                scope,
                label_source: source,
            };
            let views = docs
                .iter()
                .map(|d| match prosody {
                    ProsodyFeature::None => Ok(None),
                    _ => select_view(d, source).map(Some),
                })
                .collect::<Result<Vec<_>>>()?;
            let report = train_coref(&docs, &views, &cfg, epochs, seed)?;
            save_coref_model(&report.model, &out)?;
            println!(
                "trained on {} documents, {} features, tree errors in last epoch: {}",
                docs.len(),
                report.model.registry.len(),
                report.tree_errors_per_epoch.last().copied().unwrap_or(0)
            );
        }
        Command::PredictCoref {
            model,
            corpus,
            source,
            out,
        } => {
            let model = load_coref_model(model)?;
            let source = source.unwrap_or(model.config.label_source);
            let mut docs = parse_corpus(corpus)?;
            for d in &mut docs {
                let view = match model.config.prosody_feature {
                    ProsodyFeature::None => None,
                    _ => Some(select_view(d, source)?),
                };
                let tree = decode(&model, d, view.as_ref());
                apply_chains(d, &chains_from_tree(&tree));
            }
            serialize_corpus(&docs, &out)?;
        }
        Command::Score { key, response } => {
            let r = score_documents(&parse_corpus(key)?, &parse_corpus(response)?)?;
            println!("{r}");
            println!("{}", r.summary_line());
        }
        Command::GenCorpus { config, out_dir } => {
            let cfg = match config {
                Some(p) => GenConfig::parse(
                    &fs::read_to_string(&p).map_err(|e| Error::Io { path: p, source: e })?,
                )?,
                None => GenConfig::default(),
            };
            let mut corpus = generate(&cfg)?;
            write_corpus(&mut corpus, &out_dir)?;
            println!(
                "wrote {} documents to {}",
                corpus.docs.len(),
                out_dir.display()
            );
        }
        Command::RunExperiments { spec, out, rows } => {
            let spec = ExperimentSpec::load(spec)?;
            let result = run(&spec)?;
            let text = report(&result);
            write_text(&out, &text)?;
            write_text(
                &rows.unwrap_or_else(|| out.with_extension("tsv")),
                &rows_to_tsv(&result),
            )?;
            print!("{text}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
