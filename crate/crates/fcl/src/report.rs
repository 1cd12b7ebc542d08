//! JSON reports with a fixed field order, so identical inputs produce
//! byte-identical output.
//!
//! Schema: `{"check": name, "holds": bool, "witness": {...} | null,
//! "stats": {...}}`. Words are arrays of rendered symbols; lassos are
//! objects `{"prefix": [...], "cycle": [...]}`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::alphabet::Symbol;
use crate::cfsm::CfsmViolation;
use crate::chaut::RealisationReport;
use crate::lang::{BaWitness, CuiWitness, PropWitness, WitnessWord};
use crate::word::Word;
use crate::Verdict;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum WordJson {
    Finite(Vec<String>),
    Lasso {
        prefix: Vec<String>,
        cycle: Vec<String>,
    },
}

impl WordJson {
    pub fn of<S: Symbol>(w: &Word<S>) -> WordJson {
        match w {
            Word::Finite(v) => WordJson::Finite(v.iter().map(|s| s.to_string()).collect()),
            Word::Lasso { prefix, cycle } => WordJson::Lasso {
                prefix: prefix.iter().map(|s| s.to_string()).collect(),
                cycle: cycle.iter().map(|s| s.to_string()).collect(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum WitnessJson {
    #[serde(rename = "cui")]
    Cui {
        alpha: String,
        w1: WordJson,
        w2: WordJson,
        w: WordJson,
    },
    #[serde(rename = "ba")]
    Ba {
        participant: String,
        w1: WordJson,
        w2: WordJson,
    },
    #[serde(rename = "property")]
    Property {
        property: String,
        participant: String,
        scope: String,
        word: WordJson,
        note: String,
    },
    #[serde(rename = "cfsm")]
    Cfsm {
        property: String,
        configuration: String,
        participant: String,
        trace: WordJson,
    },
    #[serde(rename = "word")]
    Word { word: WordJson },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Report {
    pub check: String,
    pub holds: bool,
    pub witness: Option<WitnessJson>,
    pub stats: BTreeMap<String, u64>,
}

impl Report {
    fn new(check: &str, witness: Option<WitnessJson>) -> Report {
        Report {
            check: check.to_owned(),
            holds: witness.is_none(),
            witness,
            stats: BTreeMap::new(),
        }
    }

    pub fn with_stat(mut self, key: &str, value: u64) -> Report {
        self.stats.insert(key.to_owned(), value);
        self
    }

    pub fn cui(verdict: &Verdict<CuiWitness>) -> Report {
        Report::new(
            "cui",
            verdict.witness().map(|w| WitnessJson::Cui {
                alpha: w.alpha.to_string(),
                w1: WordJson::of(&w.w1),
                w2: WordJson::of(&w.w2),
                w: WordJson::of(&w.w),
            }),
        )
    }

    pub fn ba(verdict: &Verdict<BaWitness>) -> Report {
        Report::new(
            "ba",
            verdict.witness().map(|w| WitnessJson::Ba {
                participant: w.participant.to_string(),
                w1: WordJson::of(&w.w1),
                w2: WordJson::of(&w.w2),
            }),
        )
    }

    pub fn property(name: &str, verdict: &Verdict<PropWitness>) -> Report {
        Report::new(
            name,
            verdict.witness().map(|w| WitnessJson::Property {
                property: w.property.to_string(),
                participant: w.participant.to_string(),
                scope: match &w.word {
                    WitnessWord::Global(_) => "global".to_owned(),
                    WitnessWord::Local(_) => "local".to_owned(),
                },
                word: match &w.word {
                    WitnessWord::Global(w) => WordJson::of(w),
                    WitnessWord::Local(w) => WordJson::of(w),
                },
                note: w.note.clone(),
            }),
        )
    }

    pub fn cfsm_property(name: &str, verdict: &Verdict<CfsmViolation>) -> Report {
        Report::new(
            name,
            verdict.witness().map(|v| WitnessJson::Cfsm {
                property: v.property.to_string(),
                configuration: v.configuration.clone(),
                participant: v.participant.to_string(),
                trace: WordJson::of(&v.trace),
            }),
        )
    }

    pub fn realisation(report: &RealisationReport) -> Report {
        let mut out = Report::new(
            "realise",
            report.correct.witness().map(|w| WitnessJson::Word {
                word: WordJson::of(w),
            }),
        );
        out.stats
            .insert("complete".to_owned(), report.complete as u64);
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialisation")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{glang_l0, int, iword, liw};
    use crate::DEFAULT_BUDGET;

    #[test]
    fn cui_report_for_l0() {
        let verdict = glang_l0().check_cui(DEFAULT_BUDGET).unwrap();
        let report = Report::cui(&verdict);
        assert!(!report.holds);
        let json = report.to_json();
        assert!(json.contains("\"alpha\": \"A->B:g\""));
        // identical inputs give identical bytes
        assert_eq!(json, Report::cui(&verdict).to_json());
    }

    #[test]
    fn holds_report_has_null_witness() {
        let report = Report::cui(&Verdict::Holds);
        assert!(report.holds);
        assert!(report.to_json().contains("\"witness\": null"));
    }

    #[test]
    fn lasso_words_serialise_structurally() {
        let w = liw("A->B:m", "C->D:n");
        let json = serde_json::to_string(&WordJson::of(&w)).unwrap();
        assert_eq!(json, r#"{"prefix":["A->B:m"],"cycle":["C->D:n"]}"#);
        let f = iword("A->B:m . C->D:n");
        let json = serde_json::to_string(&WordJson::of(&f)).unwrap();
        assert_eq!(json, r#"["A->B:m","C->D:n"]"#);
        let _ = int("A->B:m");
    }
}
