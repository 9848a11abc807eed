//! Line-delimited JSON file formats: corpus manifests, trial sets, and
//! pseudo-speaker pools.

use std::fs;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use lfa_core::corpus::{Conversation, Corpus, Trial, TrialCounts, TrialPolicy, TrialSet, UtteranceRecord};
use lfa_core::pseudo::PoolEntry;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// One manifest line: a whole conversation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConversationRecord {
    pub id: String,
    pub speaker: String,
    pub topic: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gender: Option<String>,
    pub utterances: Vec<UtteranceRecord>,
}

impl From<&Conversation> for ConversationRecord {
    fn from(c: &Conversation) -> Self {
        Self {
            id: c.id.0.clone(),
            speaker: c.speaker.0.clone(),
            topic: c.topic.0.clone(),
            gender: c.gender.clone(),
            utterances: c.records(),
        }
    }
}

const CONVERSATION_FIELDS: &[&str] = &["id", "speaker", "topic", "utterances"];
const UTTERANCE_FIELDS: &[&str] = &["index", "text"];

fn parse_error(path: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse { path: path.to_string(), line, message: message.into() }
}

fn require_fields(value: &Value, fields: &[&str], what: &str) -> std::result::Result<(), String> {
    let obj = value.as_object().ok_or_else(|| format!("{what} must be a JSON object"))?;
    match fields.iter().find(|f| !obj.contains_key(**f)) {
        Some(f) => Err(format!("missing required field `{f}` in {what}")),
        None => Ok(()),
    }
}

/// Non-blank lines with their 1-based line numbers.
fn json_lines<R: BufRead>(reader: R, name: &str) -> Result<Vec<(usize, Value)>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| parse_error(name, i + 1, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(&line).map_err(|e| parse_error(name, i + 1, e.to_string()))?;
        out.push((i + 1, value));
    }
    Ok(out)
}

pub fn parse_manifest<R: Read>(reader: R, name: &str) -> Result<Corpus> {
    let mut corpus = Corpus::new();
    for (line, value) in json_lines(BufReader::new(reader), name)? {
        require_fields(&value, CONVERSATION_FIELDS, "conversation").map_err(|m| parse_error(name, line, m))?;
        if let Some(utts) = value["utterances"].as_array() {
            for u in utts {
                require_fields(u, UTTERANCE_FIELDS, "utterance").map_err(|m| parse_error(name, line, m))?;
            }
        }
        let rec: ConversationRecord =
            serde_json::from_value(value).map_err(|e| parse_error(name, line, e.to_string()))?;
        let conv = Conversation::new(rec.id.into(), rec.speaker.into(), rec.topic.into(), rec.gender, rec.utterances)
            .map_err(|e| parse_error(name, line, e.to_string()))?;
        corpus.insert(conv).map_err(|e| parse_error(name, line, e.to_string()))?;
    }
    Ok(corpus)
}

pub fn load_manifest(path: &Path) -> Result<Corpus> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_manifest(file, &path.display().to_string())
}

pub fn manifest_bytes(corpus: &Corpus) -> Vec<u8> {
    records_bytes(corpus.conversations().map(ConversationRecord::from))
}

pub fn records_bytes<T: Serialize>(records: impl IntoIterator<Item = T>) -> Vec<u8> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, &r).expect("in-memory serialization");
        out.push(b'\n');
    }
    out
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum TrialLine {
    Header { policy: TrialPolicy, seed: u64, counts: TrialCounts, reference_counts: TrialCounts },
    Trial(Trial),
}

pub fn trial_set_bytes(ts: &TrialSet) -> Vec<u8> {
    let header = TrialLine::Header {
        policy: ts.policy,
        seed: ts.seed,
        counts: ts.counts,
        reference_counts: ts.policy.reference_counts(),
    };
    records_bytes(std::iter::once(header).chain(ts.trials.iter().cloned().map(TrialLine::Trial)))
}

pub fn parse_trial_set<R: Read>(reader: R, name: &str) -> Result<TrialSet> {
    let mut header = None;
    let mut trials = Vec::new();
    for (line, value) in json_lines(BufReader::new(reader), name)? {
        match serde_json::from_value(value).map_err(|e| parse_error(name, line, e.to_string()))? {
            TrialLine::Header { policy, seed, counts, .. } => {
                if header.replace((policy, seed, counts)).is_some() {
                    return Err(parse_error(name, line, "duplicate header record"));
                }
            }
            TrialLine::Trial(t) => trials.push(t),
        }
    }
    let (policy, seed, counts) = header.ok_or_else(|| parse_error(name, 1, "missing header record"))?;
    Ok(TrialSet { policy, seed, counts, trials })
}

pub fn load_trial_set(path: &Path) -> Result<TrialSet> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_trial_set(file, &path.display().to_string())
}

pub fn load_pool(path: &Path) -> Result<Vec<PoolEntry>> {
    let name = path.display().to_string();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    json_lines(BufReader::new(file), &name)?
        .into_iter()
        .map(|(line, v)| {
            require_fields(&v, &["id", "embedding"], "pool entry").map_err(|m| parse_error(&name, line, m))?;
            serde_json::from_value(v).map_err(|e| parse_error(&name, line, e.to_string()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use lfa_core::corpus::{build_trial_set, TrialLimits};

    #[test]
    fn one_line_two_utterances() {
        let line = r#"{"id":"c1","speaker":"s1","topic":"t1","utterances":[{"index":0,"text":"Hi there."},{"index":1,"text":"Bye","audio_ref":"a.wav#1"}]}"#;
        let corpus = parse_manifest(line.as_bytes(), "m").unwrap();
        assert_eq!(corpus.len(), 1);
        assert_eq!(corpus.utterance_count(), 2);
        let c = corpus.get(&"c1".into()).unwrap();
        assert_eq!(c.utterances[1].audio_ref.as_deref(), Some("a.wav#1"));
    }

    #[test]
    fn empty_file() {
        assert!(parse_manifest(&b""[..], "m").unwrap().is_empty());
    }

    #[test]
    fn duplicate_id_names_it() {
        let line = r#"{"id":"dup","speaker":"s","topic":"t","utterances":[]}"#;
        let text = format!("{line}\n{line}\n");
        let err = parse_manifest(text.as_bytes(), "m").unwrap_err().to_string();
        assert!(err.contains("m:2") && err.contains("dup"), "{err}");
    }

    #[test]
    fn missing_topic_is_an_error() {
        let line = r#"{"id":"c","speaker":"s","utterances":[]}"#;
        let err = parse_manifest(line.as_bytes(), "m").unwrap_err().to_string();
        assert!(err.contains("m:1") && err.contains("`topic`"), "{err}");
    }

    #[test]
    fn malformed_json_reports_line() {
        let text = "\n{\"id\":";
        let err = parse_manifest(text.as_bytes(), "m").unwrap_err().to_string();
        assert!(err.starts_with("m:2:"), "{err}");
    }

    #[test]
    fn manifest_round_trip() {
        let text = r#"{"id":"c1","speaker":"s1","topic":"t1","gender":"f","utterances":[{"index":0,"text":"Hi."}]}"#;
        let corpus = parse_manifest(text.as_bytes(), "m").unwrap();
        let bytes = manifest_bytes(&corpus);
        assert_eq!(String::from_utf8(bytes.clone()).unwrap().trim_end(), text);
        assert_eq!(parse_manifest(&bytes[..], "m").unwrap(), corpus);
    }

    #[test]
    fn trial_set_round_trip() {
        let corpus = lfa_core::mock::generate_synthetic_corpus(lfa_core::mock::SynthParams {
            n_speakers: 3,
            convs_per_speaker: 2,
            topics: 3,
            utts_per_conv: 2,
            seed: 2,
        })
        .unwrap();
        let ts = build_trial_set(&corpus, TrialPolicy::Hard, TrialLimits::default(), 4).unwrap();
        let bytes = trial_set_bytes(&ts);
        let first = String::from_utf8(bytes.clone()).unwrap();
        assert!(first.starts_with(r#"{"record":"header","policy":"hard","seed":4"#), "{first}");
        assert!(first.contains(r#""reference_counts":{"total":1944,"positives":959,"negatives":985}"#));
        assert_eq!(parse_trial_set(&bytes[..], "t").unwrap(), ts);
    }

    #[test]
    fn trial_set_without_header() {
        let line = r#"{"record":"trial","id":"t","enrollment":"a","test":"b","label":"same-speaker"}"#;
        assert!(parse_trial_set(line.as_bytes(), "t").is_err());
    }
}
