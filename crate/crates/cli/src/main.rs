use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Value};

use bridgeqa::decode::{self, DecodeConfig, LogitsRecord, NoAnswerPolicy, PredictionRecord};
use bridgeqa::eval::{self, EvalReport};
use bridgeqa::mentionmap::{self, MentionRecord, TimeLexicon};
use bridgeqa::mock::{self, MockConfig};
use bridgeqa::qagen::{self, ContextWindow, DatasetStats, QAInstance};
use bridgeqa::quasigen::{self, ExtractConfig, GenerationConfig, QuasiBridgingInstance};
use bridgeqa::{io, Error, Result};

/// Bridging anaphora resolution as question answering: data generation,
/// constrained decoding, mention mapping and scoring.
#[derive(Debug, Parser)]
#[command(name = "bridgeqa", version)]
struct Cli {
    /// TOML settings file. Flags given on the command line override it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Worker threads for parallel stages (default 1). Output does not
    /// depend on it.
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate quasi-bridging pairs from a directory of bracketed trees.
    QuasiGen {
        /// Directory of tree files, one document per file (id = file stem).
        #[arg(long)]
        trees: PathBuf,
        /// Output JSONL, one pair per line.
        #[arg(long)]
        out: PathBuf,
        /// Also write the pairs as a QA dataset (extended SQuAD JSON).
        #[arg(long, value_name = "FILE")]
        qa_out: Option<PathBuf>,
        /// Write generation counters (JSON).
        #[arg(long, value_name = "FILE")]
        stats: Option<PathBuf>,
        /// Comma-separated prepositions allowed in "X prep Y" (default: any).
        #[arg(long, value_delimiter = ',')]
        prepositions: Option<Vec<String>>,
    },
    /// Draw a seeded sample of pairs as a TSV sheet for manual scoring.
    AuditSample {
        /// Pairs JSONL written by quasi-gen.
        #[arg(long)]
        instances: PathBuf,
        /// Number of pairs to draw.
        #[arg(long)]
        size: usize,
        /// Sampling seed (default 0).
        #[arg(long)]
        seed: Option<u64>,
        /// Output TSV.
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarize a scored audit sheet (score column 0, 1 or 2).
    AuditSummary {
        #[arg(long)]
        sheet: PathBuf,
    },
    /// Build a QA dataset from bridging annotations or quasi-bridging pairs.
    BuildQa {
        /// Annotation TSV: doc_id, anaphor_id, anaphor, antecedents.
        #[arg(long, requires = "trees", conflicts_with = "quasi")]
        annotations: Option<PathBuf>,
        /// Directory of tree files the annotations refer to.
        #[arg(long)]
        trees: Option<PathBuf>,
        /// Pairs JSONL written by quasi-gen.
        #[arg(long)]
        quasi: Option<PathBuf>,
        /// Output dataset (extended SQuAD JSON).
        #[arg(long)]
        out: PathBuf,
        /// Write dataset counters (JSON).
        #[arg(long, value_name = "FILE")]
        stats: Option<PathBuf>,
        /// Sentences before the anaphor's sentence in the context (default 2).
        #[arg(long)]
        previous_sentences: Option<usize>,
        /// Whether the document's first sentence opens every context (default true).
        #[arg(long)]
        include_first_sentence: Option<bool>,
    },
    /// Decode ranked antecedent spans from a logits file.
    Decode {
        /// Logits JSONL, one record per dataset instance.
        #[arg(long)]
        logits: PathBuf,
        /// Dataset the logits were computed for.
        #[arg(long)]
        dataset: PathBuf,
        /// Output predictions JSONL.
        #[arg(long)]
        out: PathBuf,
        /// Candidates kept per instance (default 20).
        #[arg(long)]
        k: Option<usize>,
        /// Maximum words per span (default 5).
        #[arg(long)]
        l: Option<usize>,
        /// File of function words, one per line; spans made only of them
        /// are dropped (default: a, an, the, this, that).
        #[arg(long, value_name = "FILE")]
        prune_list: Option<PathBuf>,
        /// How "no answer" competes with spans.
        #[arg(long, value_enum)]
        no_answer: Option<NoAnswerArg>,
    },
    /// Map decoded spans onto mentions and pick one antecedent per anaphor.
    MapMentions {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        trees: PathBuf,
        /// Mentions JSONL; without it every NP of the trees is a candidate.
        #[arg(long)]
        mentions: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Time-word lexicon, one word per line (default: built-in list).
        #[arg(long, value_name = "FILE")]
        time_lexicon: Option<PathBuf>,
    },
    /// Write every NP of the trees as a mentions JSONL file.
    ExtractMentions {
        #[arg(long)]
        trees: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_name = "FILE")]
        time_lexicon: Option<PathBuf>,
    },
    /// Score top-1 predictions with strict and lenient accuracy.
    Score {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        /// Report JSON.
        #[arg(long)]
        out: PathBuf,
        /// Also write the text table here (it always goes to stdout).
        #[arg(long, value_name = "FILE")]
        table: Option<PathBuf>,
    },
    /// Per-anaphor flips and accuracy deltas between two reports.
    Compare {
        #[arg(long)]
        before: PathBuf,
        #[arg(long)]
        after: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a dataset, logits, predictions, mentions or pairs file.
    Validate {
        file: PathBuf,
        /// File kind; guessed from the content when omitted.
        #[arg(long, value_enum)]
        kind: Option<Kind>,
        /// Dataset to check logits or predictions offsets against.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Write seeded random logits for a dataset (no model needed).
    MockLogits {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Seed (default 0).
        #[arg(long)]
        seed: Option<u64>,
        /// Added to the first gold answer's start and end scores.
        #[arg(long)]
        gold_bias: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum NoAnswerArg {
    EmptyListOnly,
    ScoreThreshold,
}

impl From<NoAnswerArg> for NoAnswerPolicy {
    fn from(a: NoAnswerArg) -> Self {
        match a {
            NoAnswerArg::EmptyListOnly => NoAnswerPolicy::EmptyListOnly,
            NoAnswerArg::ScoreThreshold => NoAnswerPolicy::ScoreThreshold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    Dataset,
    Logits,
    Predictions,
    Mentions,
    Quasi,
}

/// Settings file. Paths are relative to the file's directory.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    workers: Option<usize>,
    k: Option<usize>,
    l: Option<usize>,
    prune: Option<Vec<String>>,
    prune_list: Option<PathBuf>,
    no_answer: Option<NoAnswerArg>,
    time_lexicon: Option<PathBuf>,
    previous_sentences: Option<usize>,
    include_first_sentence: Option<bool>,
    prepositions: Option<Vec<String>>,
    seed: Option<u64>,
    gold_bias: Option<f64>,
}

impl FileConfig {
    fn load(path: &Path) -> Result<Self> {
        let text = io::read_string(path)?;
        let mut cfg: FileConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.prune_list, &mut cfg.time_lexicon].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

fn word_list(path: &Path) -> Result<Vec<String>> {
    Ok(io::read_string(path)?
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim().to_string())
        .filter(|w| !w.is_empty())
        .collect())
}

struct Settings {
    file: FileConfig,
    workers: usize,
}

impl Settings {
    fn new(cli: &Cli) -> Result<Self> {
        let file = match &cli.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let workers = cli.workers.or(file.workers).unwrap_or(1);
        if workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        Ok(Settings { file, workers })
    }

    fn decode(
        &self,
        k: Option<usize>,
        l: Option<usize>,
        prune_list: Option<&Path>,
        no_answer: Option<NoAnswerArg>,
    ) -> Result<DecodeConfig> {
        let mut cfg = DecodeConfig::default();
        cfg.k = k.or(self.file.k).unwrap_or(cfg.k);
        cfg.l = l.or(self.file.l).unwrap_or(cfg.l);
        if let Some(words) = &self.file.prune {
            cfg.prune = words.clone();
        }
        if let Some(p) = prune_list.or(self.file.prune_list.as_deref()) {
            cfg.prune = word_list(p)?;
        }
        if let Some(n) = no_answer.or(self.file.no_answer) {
            cfg.no_answer = n.into();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn lexicon(&self, flag: Option<&Path>) -> Result<TimeLexicon> {
        match flag.or(self.file.time_lexicon.as_deref()) {
            Some(p) => Ok(TimeLexicon::parse(&io::read_string(p)?)),
            None => Ok(TimeLexicon::default()),
        }
    }

    fn window(&self, previous: Option<usize>, first: Option<bool>) -> ContextWindow {
        let d = ContextWindow::default();
        ContextWindow {
            previous_sentences: previous.or(self.file.previous_sentences).unwrap_or(d.previous_sentences),
            include_first_sentence: first.or(self.file.include_first_sentence).unwrap_or(d.include_first_sentence),
        }
    }

    fn seed(&self, flag: Option<u64>) -> u64 {
        flag.or(self.file.seed).unwrap_or(0)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn load_dataset(path: &Path) -> Result<Vec<QAInstance>> {
    qagen::load_squad_json(&io::read_string(path)?).map_err(|e| match e {
        Error::Format { message, .. } => Error::format(path.display().to_string(), message),
        other => other,
    })
}

fn run(cli: Cli) -> Result<Value> {
    let settings = Settings::new(&cli)?;
    match cli.command {
        Command::QuasiGen {
            trees,
            out,
            qa_out,
            stats,
            prepositions,
        } => {
            let extract = match prepositions.or_else(|| settings.file.prepositions.clone()) {
                Some(words) => ExtractConfig::with_prepositions(words),
                None => ExtractConfig::default(),
            };
            let config = GenerationConfig {
                extract,
                workers: settings.workers,
            };
            let mut writer = create(&out)?;
            let mut kept: Vec<QuasiBridgingInstance> = Vec::new();
            let counters = quasigen::generate_from_dir(&trees, &config, |instance| {
                serde_json::to_writer(&mut writer, &instance).map_err(|e| Error::format(out.display().to_string(), e))?;
                writer.write_all(b"\n").map_err(|e| Error::io(&out, e))?;
                if qa_out.is_some() {
                    kept.push(instance);
                }
                Ok(())
            })?;
            writer.flush().map_err(|e| Error::io(&out, e))?;
            if let Some(path) = &qa_out {
                let qa: Vec<QAInstance> = kept.iter().map(qagen::quasi_to_qa).collect::<Result<_>>()?;
                io::write_string(path, &qagen::emit_squad_json(&qa))?;
            }
            if let Some(path) = &stats {
                io::write_json(path, &counters)?;
            }
            Ok(serde_json::to_value(&counters).expect("stats serialize"))
        }

        Command::AuditSample {
            instances,
            size,
            seed,
            out,
        } => {
            let all: Vec<QuasiBridgingInstance> = io::read_jsonl(&instances)?;
            let picked = quasigen::sample_for_audit(&all, size, settings.seed(seed))?;
            io::write_string(&out, &quasigen::audit_tsv(&picked))?;
            Ok(json!({ "sampled": picked.len(), "available": all.len() }))
        }

        Command::AuditSummary { sheet } => {
            let summary = quasigen::summarize_audit(&io::read_string(&sheet)?)?;
            Ok(serde_json::to_value(summary).expect("summary serializes"))
        }

        Command::BuildQa {
            annotations,
            trees,
            quasi,
            out,
            stats,
            previous_sentences,
            include_first_sentence,
        } => {
            let (instances, ingest) = match (annotations, trees, quasi) {
                (Some(ann), Some(trees), None) => {
                    let docs = io::read_tree_dir(&trees)?;
                    let records = qagen::parse_annotations(&io::read_string(&ann)?)?;
                    let (annotations, ingest) = qagen::resolve_annotations(&records, &docs)?;
                    let window = settings.window(previous_sentences, include_first_sentence);
                    let instances = annotations
                        .iter()
                        .map(|a| qagen::build_instance(a, &docs[&a.doc_id], &window))
                        .collect::<Result<Vec<_>>>()?;
                    (instances, Some(ingest))
                }
                (None, _, Some(quasi)) => {
                    let pairs: Vec<QuasiBridgingInstance> = io::read_jsonl(&quasi)?;
                    let instances = pairs.iter().map(qagen::quasi_to_qa).collect::<Result<Vec<_>>>()?;
                    (instances, None)
                }
                _ => {
                    return Err(Error::Config(
                        "build-qa needs --annotations with --trees, or --quasi".into(),
                    ))
                }
            };
            io::write_string(&out, &qagen::emit_squad_json(&instances))?;
            let mut summary = serde_json::to_value(DatasetStats::of(&instances)).expect("stats serialize");
            if let Some(ingest) = ingest {
                summary["ingest"] = serde_json::to_value(ingest).expect("stats serialize");
            }
            if let Some(path) = &stats {
                io::write_json(path, &summary)?;
            }
            Ok(summary)
        }

        Command::Decode {
            logits,
            dataset,
            out,
            k,
            l,
            prune_list,
            no_answer,
        } => {
            let config = settings.decode(k, l, prune_list.as_deref(), no_answer)?;
            let records: Vec<LogitsRecord> = io::read_jsonl(&logits)?;
            let dataset = load_dataset(&dataset)?;
            let predictions = bridgeqa::with_workers(settings.workers, || {
                decode::batch_decode(&records, &dataset, &config)
            })??;
            io::write_jsonl(&out, &predictions)?;
            let answered = predictions.iter().filter(|p| p.answer_text().is_some()).count();
            Ok(json!({ "instances": predictions.len(), "answered": answered }))
        }

        Command::MapMentions {
            predictions,
            dataset,
            trees,
            mentions,
            out,
            time_lexicon,
        } => {
            let lexicon = settings.lexicon(time_lexicon.as_deref())?;
            let predictions: Vec<PredictionRecord> = io::read_jsonl(&predictions)?;
            let dataset = load_dataset(&dataset)?;
            let docs = io::read_tree_dir(&trees)?;
            let records: Vec<MentionRecord> = match &mentions {
                Some(p) => io::read_jsonl(p)?,
                None => docs.values().flat_map(|d| mentionmap::extract_mentions(d, &lexicon)).collect(),
            };
            let index = mentionmap::index_mentions(&records, &docs, &lexicon)?;
            let (mapped, stats) = mentionmap::map_predictions(&predictions, &dataset, &docs, &index, &lexicon)?;
            io::write_jsonl(&out, &mapped)?;
            Ok(serde_json::to_value(stats).expect("stats serialize"))
        }

        Command::ExtractMentions {
            trees,
            out,
            time_lexicon,
        } => {
            let lexicon = settings.lexicon(time_lexicon.as_deref())?;
            let docs = io::read_tree_dir(&trees)?;
            let records: Vec<MentionRecord> = docs
                .values()
                .flat_map(|d| mentionmap::extract_mentions(d, &lexicon))
                .collect();
            io::write_jsonl(&out, &records)?;
            Ok(json!({ "documents": docs.len(), "mentions": records.len() }))
        }

        Command::Score {
            predictions,
            dataset,
            out,
            table,
        } => {
            let predictions: Vec<PredictionRecord> = io::read_jsonl(&predictions)?;
            let dataset = load_dataset(&dataset)?;
            let report = eval::score(&predictions, &dataset)?;
            io::write_json(&out, &report)?;
            let text = report.to_table();
            if let Some(path) = &table {
                io::write_string(path, &text)?;
            }
            print!("{text}");
            Ok(Value::Null)
        }

        Command::Compare { before, after, out } => {
            let a: EvalReport = io::read_json(&before)?;
            let b: EvalReport = io::read_json(&after)?;
            let diff = eval::compare_reports(&a, &b)?;
            if let Some(path) = &out {
                io::write_json(path, &diff)?;
            }
            Ok(serde_json::to_value(diff).expect("diff serializes"))
        }

        Command::Validate { file, kind, dataset } => {
            let dataset = dataset.as_deref().map(load_dataset).transpose()?;
            validate(&file, kind, dataset.as_deref())
        }

        Command::MockLogits {
            dataset,
            out,
            seed,
            gold_bias,
        } => {
            let dataset = load_dataset(&dataset)?;
            let config = MockConfig {
                seed: settings.seed(seed),
                gold_bias: gold_bias.or(settings.file.gold_bias),
            };
            let records: Vec<LogitsRecord> = dataset.iter().map(|q| mock::mock_logits(q, &config)).collect();
            io::write_jsonl(&out, &records)?;
            Ok(json!({ "records": records.len() }))
        }
    }
}

fn guess_kind(path: &Path) -> Result<Kind> {
    let text = io::read_string(path)?;
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    if let Ok(Value::Object(map)) = serde_json::from_str::<Value>(first) {
        let has = |k: &str| map.contains_key(k);
        return Ok(if has("start_scores") {
            Kind::Logits
        } else if has("predictions") {
            Kind::Predictions
        } else if has("s_y") {
            Kind::Quasi
        } else if has("head") {
            Kind::Mentions
        } else {
            return Err(Error::format(path.display().to_string(), "unrecognized record; pass --kind"));
        });
    }
    Ok(Kind::Dataset)
}

fn validate(path: &Path, kind: Option<Kind>, dataset: Option<&[QAInstance]>) -> Result<Value> {
    let kind = match kind {
        Some(k) => k,
        None => guess_kind(path)?,
    };
    let context_of = |id: &str| -> Result<Option<&str>> {
        match dataset {
            None => Ok(None),
            Some(d) => d
                .iter()
                .find(|q| q.id == id)
                .map(|q| Some(q.context.as_str()))
                .ok_or_else(|| Error::UnknownId(id.to_string())),
        }
    };
    let (name, count) = match kind {
        Kind::Dataset => ("dataset", load_dataset(path)?.len()),
        Kind::Logits => {
            let records: Vec<LogitsRecord> = io::read_jsonl(path)?;
            for r in &records {
                r.validate(context_of(&r.instance_id)?)?;
            }
            if let Some(d) = dataset {
                decode::reconcile(&records, d)?;
            }
            ("logits", records.len())
        }
        Kind::Predictions => {
            let records: Vec<PredictionRecord> = io::read_jsonl(path)?;
            for r in &records {
                r.validate(context_of(&r.instance_id)?)?;
            }
            ("predictions", records.len())
        }
        Kind::Mentions => {
            let records: Vec<MentionRecord> = io::read_jsonl(path)?;
            ("mentions", records.len())
        }
        Kind::Quasi => {
            let records: Vec<QuasiBridgingInstance> = io::read_jsonl(path)?;
            for r in &records {
                r.validate()?;
            }
            ("quasi", records.len())
        }
    };
    Ok(json!({ "valid": true, "kind": name, "records": count }))
}

fn fail(class: &str, message: &str) -> ExitCode {
    eprintln!("{}", json!({ "error": class, "message": message }));
    ExitCode::FAILURE
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.to_string();
            let first = message.lines().next().unwrap_or("").trim_start_matches("error: ");
            return fail("usage", first);
        }
    };
    match run(cli) {
        Ok(Value::Null) => ExitCode::SUCCESS,
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => fail(e.class(), &e.to_string()),
    }
}
