//! Drives the built `attrib` binary over files in a temp dir.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use attrib_core::jsonl::write_records;
use attrib_core::simulate::QaInput;
use attrib_core::{AttributionExample, AttributionLabel, Prediction, PromptVariant};
use serde::Serialize;

use crate::common;

pub fn attrib<S: AsRef<std::ffi::OsStr>>(args: &[S]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_attrib"))
        .args(args)
        .output()
        .expect("run attrib")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Runs and panics with stderr unless the exit code is 0.
pub fn ok<S: AsRef<std::ffi::OsStr>>(args: &[S]) -> Output {
    let o = attrib(args);
    assert!(o.status.success(), "attrib failed: {}", stderr(&o));
    o
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) {
    write_records(path, records).unwrap();
}

pub fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

pub struct Pipeline {
    pub qa: PathBuf,
    pub corpus: PathBuf,
    pub index: PathBuf,
    pub mock: PathBuf,
}

/// QA lines, corpus and a one-line mock table for `n` synthetic records.
pub fn pipeline_inputs(dir: &Path, n: usize) -> Pipeline {
    let (records, corpus) = common::synthetic_qa(n);
    let inputs: Vec<QaInput> = records
        .into_iter()
        .map(|r| QaInput {
            id: r.id,
            question: r.question,
            answers: r.gold_answers,
            positive_context: Some(r.positive_context),
            source: r.source,
        })
        .collect();
    let p = Pipeline {
        qa: dir.join("qa.jsonl"),
        corpus: dir.join("corpus.jsonl"),
        index: dir.join("index.json"),
        mock: dir.join("substituter.jsonl"),
    };
    write_jsonl(&p.qa, &inputs);
    write_jsonl(&p.corpus, &corpus);
    std::fs::write(&p.mock, "{\"default\": \"Someone Else\"}\n").unwrap();
    p
}

pub fn example(id: &str, label: Option<AttributionLabel>) -> AttributionExample {
    AttributionExample {
        id: id.into(),
        query: format!("question {id}?"),
        answer: format!("answer {id}"),
        reference: format!("reference text for {id}"),
        label,
        source: "test".into(),
        meta: Default::default(),
    }
}

/// Gold and predicted labels of the ten-example metrics fixture.
pub fn metrics_fixture() -> (Vec<AttributionExample>, Vec<Prediction>) {
    use AttributionLabel::*;
    let pairs = [
        (Attributable, Some(Attributable)),
        (Attributable, Some(Attributable)),
        (Attributable, Some(Attributable)),
        (Attributable, Some(Extrapolatory)),
        (Contradictory, Some(Contradictory)),
        (Contradictory, Some(Contradictory)),
        (Contradictory, Some(Attributable)),
        (Extrapolatory, Some(Extrapolatory)),
        (Extrapolatory, Some(Extrapolatory)),
        (Extrapolatory, None),
    ];
    let gold = pairs
        .iter()
        .enumerate()
        .map(|(i, (g, _))| example(&format!("m{i}"), Some(*g)))
        .collect();
    let preds = pairs
        .iter()
        .enumerate()
        .map(|(i, (_, p))| Prediction {
            example_id: format!("m{i}"),
            predicted: *p,
            raw_response: p.map_or("unsure".into(), |l| format!("{}.", l.as_str())),
            prompt_variant: PromptVariant::Attribution,
            model_id: "fixture".into(),
            shots: 0,
            error: None,
        })
        .collect();
    (gold, preds)
}
