#![allow(dead_code)]

use std::sync::Arc;

use lfa::backends::{BackendSet, MockWorld, ResponseCache};
use lfa_core::corpus::{Conversation, Corpus, UtteranceRecord};

pub fn conversation(id: &str, speaker: &str, topic: &str, texts: &[&str]) -> Conversation {
    let records = texts
        .iter()
        .enumerate()
        .map(|(i, t)| UtteranceRecord {
            index: i,
            text: t.to_string(),
            audio_ref: Some(format!("mock://orig/{speaker}/{id}/{i}")),
        })
        .collect();
    Conversation::new(id.into(), speaker.into(), topic.into(), Some("f".into()), records).unwrap()
}

/// Two speakers, each with one conversation on each of two topics.
pub fn toy_corpus() -> Corpus {
    let lines = [
        "Well, I think so.",
        "Uh, we went to the lake last summer and it was really nice.",
        "Yeah.",
        "My brother Tom works there, you know.",
    ];
    Corpus::from_conversations([
        conversation("a-t1", "a", "t1", &lines),
        conversation("a-t2", "a", "t2", &lines[1..]),
        conversation("b-t1", "b", "t1", &lines[..3]),
        conversation("b-t2", "b", "t2", &["Okay.", "So, like, I basically agree with that."]),
    ])
    .unwrap()
}

pub fn mock_backends(corpus: &Corpus) -> BackendSet {
    BackendSet::mock(Arc::new(MockWorld::from_corpus(corpus)), Arc::new(ResponseCache::in_memory()))
}
