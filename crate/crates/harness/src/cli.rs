//! Command-line interface.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use lfa_core::corpus::{build_trial_set, validate_trial_set, Corpus, TrialLimits, TrialPolicy};
use lfa_core::mock::{generate_mock_pool, generate_synthetic_corpus, SynthParams, VOICE_DIM};
use lfa_core::prompt::Granularity;
use lfa_core::windowing::SegmentMode;
use serde_json::json;

use crate::anonymizer::{anonymize_trials, AlignmentRecord, AnonymizerConfig, Strategy};
use crate::attacks::{attack_curve, Channel};
use crate::backends::{BackendSet, MockWorld, ResponseCache};
use crate::config::Config;
use crate::evaluation::{corpus_utility, detect_curve, pooled_naturalness, summarize_utility, DetectorKind};
use crate::manifest::{load_manifest, load_pool, load_trial_set, manifest_bytes, records_bytes, trial_set_bytes};
use crate::report::{attack_csv, curves_long, detect_csv, parse_records, render_table, utility_csv, ResultRecord};
use crate::run::{OutputDir, RunManifest};
use crate::error::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "lfa", version, about = "Long-form voice and content anonymization experiments")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Response cache directory; defaults to `<out>/cache`.
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    /// Keep responses in memory only.
    #[arg(long, global = true)]
    pub no_cache: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a corpus manifest and store it in canonical form.
    Ingest {
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build and validate a trial set.
    Trials {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value = "hard")]
        policy: TrialPolicy,
        #[arg(long)]
        max_positives: Option<usize>,
        #[arg(long)]
        max_negatives: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic styled-speaker corpus and a speaker pool.
    SynthCorpus {
        #[arg(long, default_value_t = 40)]
        speakers: usize,
        #[arg(long, default_value_t = 2)]
        convs_per_speaker: usize,
        #[arg(long, default_value_t = 8)]
        topics: usize,
        #[arg(long, default_value_t = 64)]
        utts_per_conv: usize,
        #[arg(long, default_value_t = 64)]
        pool_size: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Anonymize the test side of every trial.
    Anonymize {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        trials: PathBuf,
        #[arg(long)]
        strategy: Strategy,
        /// Speaker pool for pseudo speakers.
        #[arg(long)]
        pool: Option<PathBuf>,
        #[arg(long)]
        granularity: Option<Granularity>,
        #[arg(long)]
        conserve_fraction: Option<f64>,
        /// Segment by token budget instead of utterance count.
        #[arg(long)]
        token_budget: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// EER of a voice or content attack as a function of k.
    Attack {
        /// Corpus holding the enrollment sides.
        #[arg(long)]
        corpus: PathBuf,
        /// Corpus holding the test sides; defaults to `--corpus`.
        #[arg(long)]
        test: Option<PathBuf>,
        #[arg(long)]
        trials: PathBuf,
        #[arg(long)]
        channel: Channel,
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16,32,64")]
        ks: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Semantic similarity, utterance length, and naturalness.
    Utility {
        #[arg(long)]
        original: PathBuf,
        #[arg(long)]
        anonymized: PathBuf,
        /// System label for the summary record.
        #[arg(long, default_value = "system")]
        system: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Detectability of synthetic speech or text as a function of k.
    Detect {
        #[arg(long)]
        original: PathBuf,
        #[arg(long)]
        anonymized: PathBuf,
        #[arg(long)]
        detector: DetectorKind,
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16,32,64")]
        ks: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render result records as a table.
    Report {
        records: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

struct Session {
    config: Config,
    out: OutputDir,
    manifest: RunManifest,
}

impl Session {
    fn open(global: &GlobalArgs, command: &str, out: &Path) -> Result<Self> {
        let mut config = match &global.config {
            Some(p) => Config::load(p)?,
            None => Config::default(),
        };
        if let Some(seed) = global.seed {
            config.seed = seed;
        }
        if let Some(dir) = &global.cache_dir {
            config.cache_dir = Some(dir.clone());
        }
        let out = OutputDir::open(out)?;
        let mut manifest = RunManifest::new(command, &config);
        if let Some(p) = &global.config {
            manifest.input(p)?;
        }
        Ok(Self { config, out, manifest })
    }

    fn backends(&self, global: &GlobalArgs, world: &Corpus) -> Result<BackendSet> {
        let cache = if global.no_cache {
            ResponseCache::in_memory()
        } else {
            let dir = self.config.cache_dir.clone().unwrap_or_else(|| self.out.path().join("cache"));
            ResponseCache::persistent(dir)?
        };
        let endpoints = self.config.endpoints(|k| std::env::var(k).ok());
        BackendSet::from_endpoints(&endpoints, Arc::new(cache), Some(Arc::new(MockWorld::from_corpus(world))))
    }

    fn load_corpus(&mut self, path: &Path) -> Result<Corpus> {
        self.manifest.input(path)?;
        load_manifest(path)
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let artifact = self.out.write(name, bytes)?;
        self.manifest.outputs.push(artifact);
        Ok(())
    }

    fn finish(mut self, backends: Option<&BackendSet>) -> Result<()> {
        if let Some(b) = backends {
            self.manifest.record_backends(b);
        }
        self.out.append_manifest(&mut self.manifest)
    }
}

fn pretty(value: &impl serde::Serialize) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("serializable");
    v.push(b'\n');
    v
}

/// Runs one subcommand.
pub fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    match cli.command {
        Command::Ingest { manifest, out } => {
            let mut s = Session::open(g, "ingest", &out)?;
            let corpus = s.load_corpus(&manifest)?;
            s.write("corpus.jsonl", &manifest_bytes(&corpus))?;
            let summary = json!({
                "conversations": corpus.len(),
                "speakers": corpus.speaker_count(),
                "topics": corpus.topic_count(),
                "utterances": corpus.utterance_count(),
            });
            s.write("summary.json", &pretty(&summary))?;
            s.finish(None)
        }
        Command::Trials { corpus, policy, max_positives, max_negatives, out } => {
            let mut s = Session::open(g, "trials", &out)?;
            let c = s.load_corpus(&corpus)?;
            let ts = build_trial_set(&c, policy, TrialLimits { max_positives, max_negatives }, s.config.seed)?;
            let report = validate_trial_set(&ts, &c)?;
            s.write("trials.jsonl", &trial_set_bytes(&ts))?;
            s.write("validation.json", &pretty(&report))?;
            s.manifest.param("policy", policy.name());
            let clean = report.is_clean();
            let violations = report.violations.len();
            s.finish(None)?;
            if clean {
                Ok(())
            } else {
                Err(Error::Validation(format!("{violations} trial policy violations")))
            }
        }
        Command::SynthCorpus { speakers, convs_per_speaker, topics, utts_per_conv, pool_size, out } => {
            let mut s = Session::open(g, "synth-corpus", &out)?;
            let seed = s.config.seed;
            let corpus = generate_synthetic_corpus(SynthParams {
                n_speakers: speakers,
                convs_per_speaker,
                topics,
                utts_per_conv,
                seed,
            })?;
            let pool = generate_mock_pool(pool_size, VOICE_DIM, seed)?;
            s.write("corpus.jsonl", &manifest_bytes(&corpus))?;
            s.write("pool.jsonl", &records_bytes(&pool))?;
            s.manifest
                .param("speakers", speakers)
                .param("convs_per_speaker", convs_per_speaker)
                .param("topics", topics)
                .param("utts_per_conv", utts_per_conv)
                .param("pool_size", pool_size);
            s.finish(None)
        }
        Command::Anonymize { corpus, trials, strategy, pool, granularity, conserve_fraction, token_budget, out } => {
            let mut s = Session::open(g, "anonymize", &out)?;
            let c = s.load_corpus(&corpus)?;
            s.manifest.input(&trials)?;
            let ts = load_trial_set(&trials)?;
            let pool = match &pool {
                Some(p) => {
                    s.manifest.input(p)?;
                    Some(load_pool(p)?)
                }
                None => None,
            };
            let mut policy = s.config.policy.clone();
            if let Some(gr) = granularity {
                policy.granularity = gr;
            }
            if let Some(f) = conserve_fraction {
                policy.conserve_fraction = f;
            }
            let segment_mode = match token_budget {
                Some(budget) => SegmentMode::ByTokens { budget },
                None => s.config.segment_mode,
            };
            let cfg = AnonymizerConfig {
                strategy,
                policy,
                segment_mode,
                context_size: s.config.context_size,
                seed: s.config.seed,
            };
            let backends = s.backends(g, &c)?;
            let result = anonymize_trials(&c, &ts, &cfg, &backends, pool.as_deref());
            let run = match result {
                Ok(run) => run,
                Err(e) => {
                    // the cache already holds every completed call
                    s.finish(Some(&backends))?;
                    return Err(e);
                }
            };
            s.write("anonymized.jsonl", &manifest_bytes(&run.corpus()?))?;
            s.write("alignments.jsonl", &records_bytes(run.conversations.iter().map(AlignmentRecord::from)))?;
            s.write("pseudo_speakers.json", &pretty(&run.pseudo_speakers))?;
            s.manifest
                .param("strategy", strategy)
                .param("segment_mode", serde_json::to_string(&segment_mode).expect("serializable"))
                .param("context_size", cfg.context_size);
            s.finish(Some(&backends))
        }
        Command::Attack { corpus, test, trials, channel, ks, out } => {
            let mut s = Session::open(g, "attack", &out)?;
            let enrollment = s.load_corpus(&corpus)?;
            let test_corpus = match &test {
                Some(p) => Some(s.load_corpus(p)?),
                None => None,
            };
            s.manifest.input(&trials)?;
            let ts = load_trial_set(&trials)?;
            let backends = s.backends(g, &enrollment)?;
            let curve = attack_curve(&ts, &enrollment, test_corpus.as_ref().unwrap_or(&enrollment), channel, &ks, &backends)?;
            s.write(&format!("attack_{channel}.csv"), &attack_csv(&curve))?;
            s.write(&format!("attack_{channel}_long.csv"), &curves_long([(channel.name(), &curve)]))?;
            s.manifest.param("channel", channel);
            s.finish(Some(&backends))
        }
        Command::Utility { original, anonymized, system, out } => {
            let mut s = Session::open(g, "utility", &out)?;
            let orig = s.load_corpus(&original)?;
            let anon = s.load_corpus(&anonymized)?;
            let backends = s.backends(g, &orig)?;
            let records = corpus_utility(&orig, &anon, &backends)?;
            let mut results = vec![ResultRecord::Utility(summarize_utility(&system, &records)?)];
            let originals = anon.conversations().map(|a| orig.require(&a.id)).collect::<Result<Vec<_>, _>>()?;
            let conditions = [
                ("anonymized", pooled_naturalness(anon.conversations(), &backends)?),
                ("original", pooled_naturalness(originals, &backends)?),
            ];
            for (condition, utmos) in conditions {
                if let Some(utmos) = utmos {
                    results.push(ResultRecord::Naturalness { condition: condition.into(), utmos });
                }
            }
            s.write("utility.csv", &utility_csv(&records))?;
            s.write("results.jsonl", &records_bytes(&results))?;
            s.manifest.param("system", &system);
            s.finish(Some(&backends))
        }
        Command::Detect { original, anonymized, detector, ks, out } => {
            let mut s = Session::open(g, "detect", &out)?;
            let orig = s.load_corpus(&original)?;
            let anon = s.load_corpus(&anonymized)?;
            let backends = s.backends(g, &orig)?;
            let curve = detect_curve(&orig, &anon, detector, &ks, &backends)?;
            s.write(&format!("detect_{detector}.csv"), &detect_csv(&curve, detector.name()))?;
            s.write(&format!("detect_{detector}_long.csv"), &curves_long([(detector.name(), &curve)]))?;
            s.manifest.param("detector", detector);
            s.finish(Some(&backends))
        }
        Command::Report { records, out } => {
            let mut all = Vec::new();
            for p in &records {
                let f = std::fs::File::open(p).map_err(|e| Error::io(p, e))?;
                all.extend(parse_records(f, &p.display().to_string())?);
            }
            let table = render_table(&all);
            print!("{table}");
            if let Some(out) = out {
                let mut s = Session::open(g, "report", &out)?;
                for p in &records {
                    s.manifest.input(p)?;
                }
                s.write("table.txt", table.as_bytes())?;
                s.finish(None)?;
            }
            Ok(())
        }
    }
}

/// Machine-readable error record for stderr.
pub fn error_record(e: &Error) -> serde_json::Value {
    json!({ "error": e.kind(), "exit_code": e.exit_code(), "message": e.to_string() })
}
