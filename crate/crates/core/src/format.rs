//! TOML frame and machine files.
//!
//! A frame file:
//!
//! ```toml
//! data = ["0", "1"]
//!
//! [[location]]
//! name = "src"
//! traces = [["a:0"], ["a:1"]]        # maximal traces; prefixes are implied
//!
//! [[location]]
//! name = "relay"
//! initial = "s"
//! transitions = [["s", "a:0", "g0"], ["g0", "b:0", "t"]]
//!
//! [[channel]]
//! name = "a"
//! from = "src"
//! to = "relay"
//!
//! [sets]
//! inputs = ["a"]
//!
//! [blurs.coarse]
//! kind = "all"
//! ```
//!
//! A machine file lists `domains`, `influence` pairs, `actions` as
//! `[name, domain]`, `outputs`, `states`, `initial`, `transitions` as
//! `[from, action, to]` and `obs` as `[state, domain, output]`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::blur::BlurSpec;
use crate::frame::{BehaviorSpec, ChanSet, ChannelSpec, Frame, FrameSpec, LocationSpec, LtsSpec};
use crate::purge::MachineSpec;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("{0}")]
    Document(String),
    #[error("location {location}: {message}")]
    Location { location: String, message: String },
    #[error("bad label {0:?}; expected channel:value")]
    Label(String),
    #[error("invalid frame: {0}")]
    Invalid(String),
    #[error("set {set}: {message}")]
    Set { set: String, message: String },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFrame {
    data: Vec<String>,
    #[serde(default, rename = "location")]
    locations: Vec<RawLocation>,
    #[serde(default, rename = "channel")]
    channels: Vec<RawChannel>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    sets: BTreeMap<String, Vec<String>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    blurs: BTreeMap<String, BlurSpec>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLocation {
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    traces: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    initial: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    states: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    transitions: Option<Vec<[String; 3]>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChannel {
    name: String,
    from: String,
    to: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMachine {
    domains: Vec<String>,
    influence: Vec<[String; 2]>,
    actions: Vec<[String; 2]>,
    outputs: Vec<String>,
    states: Vec<String>,
    initial: String,
    transitions: Vec<[String; 3]>,
    obs: Vec<[String; 3]>,
}

/// A parsed frame file.
#[derive(Clone, Debug)]
pub struct FrameDocument {
    pub frame: Frame,
    pub sets: BTreeMap<String, Vec<String>>,
    pub blurs: BTreeMap<String, BlurSpec>,
}

impl FrameDocument {
    /// Resolves a set name, or a comma-separated list of channel names.
    pub fn channels(&self, name: &str) -> Result<ChanSet, FormatError> {
        let names: Vec<String> = match self.sets.get(name) {
            Some(list) => list.clone(),
            None => name.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect(),
        };
        self.frame.chan_set(&names).map_err(|c| FormatError::Set {
            set: name.to_string(),
            message: format!("no set or channel named {c}"),
        })
    }

    /// Set contents by name, or the comma-separated list itself.
    pub fn channel_names(&self, name: &str) -> Result<Vec<String>, FormatError> {
        let set = self.channels(name)?;
        Ok(self.frame.chan_names(&set))
    }
}

fn syntax(text: &str, err: toml::de::Error) -> FormatError {
    let message = err.message().to_string();
    match err.span() {
        Some(span) => {
            let before = &text[..span.start.min(text.len())];
            let line = before.matches('\n').count() + 1;
            let column = before.len() - before.rfind('\n').map(|i| i + 1).unwrap_or(0) + 1;
            FormatError::Syntax { line, column, message }
        }
        None => FormatError::Document(message),
    }
}

fn label(text: &str) -> Result<(String, String), FormatError> {
    match text.split_once(':') {
        Some((c, v)) if !c.is_empty() && !v.is_empty() => Ok((c.to_string(), v.to_string())),
        _ => Err(FormatError::Label(text.to_string())),
    }
}

fn location_spec(raw: RawLocation) -> Result<LocationSpec, FormatError> {
    let err = |m: &str| FormatError::Location { location: raw.name.clone(), message: m.to_string() };
    let behavior = match (&raw.traces, &raw.transitions) {
        (Some(traces), None) => {
            if raw.initial.is_some() || raw.states.is_some() {
                return Err(err("traces cannot be combined with initial or states"));
            }
            let mut all = BTreeSet::new();
            for t in traces {
                let labels = t.iter().map(|l| label(l)).collect::<Result<Vec<_>, _>>()?;
                for k in 0..=labels.len() {
                    all.insert(labels[..k].to_vec());
                }
            }
            all.insert(Vec::new());
            BehaviorSpec::Explicit(all.into_iter().collect())
        }
        (None, Some(transitions)) => {
            let initial = raw.initial.clone().ok_or_else(|| err("a transition system needs an initial state"))?;
            let mut states = raw.states.clone().unwrap_or_default();
            if raw.states.is_none() {
                let mut seen = BTreeSet::new();
                for s in std::iter::once(&initial).chain(transitions.iter().flat_map(|[a, _, b]| [a, b])) {
                    if seen.insert(s.clone()) {
                        states.push(s.clone());
                    }
                }
            }
            let transitions = transitions
                .iter()
                .map(|[a, l, b]| label(l).map(|(c, v)| (a.clone(), c, v, b.clone())))
                .collect::<Result<Vec<_>, _>>()?;
            BehaviorSpec::Lts(LtsSpec { states, initial, transitions })
        }
        (Some(_), Some(_)) => return Err(err("give either traces or transitions, not both")),
        (None, None) => return Err(err("missing traces or transitions")),
    };
    Ok(LocationSpec { name: raw.name, behavior })
}

/// Parses and validates a frame file.
pub fn parse_frame(text: &str) -> Result<FrameDocument, FormatError> {
    let raw: RawFrame = toml::from_str(text).map_err(|e| syntax(text, e))?;
    let locations = raw.locations.into_iter().map(location_spec).collect::<Result<Vec<_>, _>>()?;
    let channels = raw
        .channels
        .into_iter()
        .map(|c| ChannelSpec { name: c.name, sender: c.from, recipient: c.to })
        .collect();
    let frame = Frame::from_spec(&FrameSpec { data: raw.data, locations, channels })
        .map_err(|r| FormatError::Invalid(r.to_string()))?;
    for (name, list) in &raw.sets {
        frame.chan_set(list).map_err(|c| FormatError::Set { set: name.clone(), message: format!("unknown channel {c}") })?;
    }
    Ok(FrameDocument { frame, sets: raw.sets, blurs: raw.blurs })
}

fn label_text(c: &str, v: &str) -> String {
    format!("{c}:{v}")
}

/// Renders a frame file. Explicit trace sets are written as their maximal
/// traces.
pub fn write_frame(frame: &Frame, sets: &BTreeMap<String, Vec<String>>, blurs: &BTreeMap<String, BlurSpec>) -> String {
    let spec = frame.to_spec();
    let locations = spec
        .locations
        .into_iter()
        .map(|l| match l.behavior {
            BehaviorSpec::Explicit(traces) => {
                let all: BTreeSet<Vec<(String, String)>> = traces.into_iter().collect();
                let maximal: Vec<Vec<String>> = all
                    .iter()
                    .filter(|t| !all.iter().any(|u| u.len() > t.len() && u.starts_with(t)))
                    .map(|t| t.iter().map(|(c, v)| label_text(c, v)).collect())
                    .collect();
                RawLocation { name: l.name, traces: Some(maximal), initial: None, states: None, transitions: None }
            }
            BehaviorSpec::Lts(lts) => RawLocation {
                name: l.name,
                traces: None,
                initial: Some(lts.initial),
                states: Some(lts.states),
                transitions: Some(lts.transitions.into_iter().map(|(a, c, v, b)| [a, label_text(&c, &v), b]).collect()),
            },
        })
        .collect();
    let raw = RawFrame {
        data: spec.data,
        locations,
        channels: spec.channels.into_iter().map(|c| RawChannel { name: c.name, from: c.sender, to: c.recipient }).collect(),
        sets: sets.clone(),
        blurs: blurs.clone(),
    };
    toml::to_string(&raw).expect("frame documents serialize")
}

/// Parses a machine file. Validation happens in [`crate::purge::Machine::new`].
pub fn parse_machine(text: &str) -> Result<MachineSpec, FormatError> {
    let raw: RawMachine = toml::from_str(text).map_err(|e| syntax(text, e))?;
    let pair = |[a, b]: [String; 2]| (a, b);
    let triple = |[a, b, c]: [String; 3]| (a, b, c);
    Ok(MachineSpec {
        domains: raw.domains,
        influence: raw.influence.into_iter().map(pair).collect(),
        actions: raw.actions.into_iter().map(pair).collect(),
        outputs: raw.outputs,
        states: raw.states,
        initial: raw.initial,
        transitions: raw.transitions.into_iter().map(triple).collect(),
        obs: raw.obs.into_iter().map(triple).collect(),
    })
}

pub fn write_machine(m: &MachineSpec) -> String {
    let pair = |(a, b): &(String, String)| [a.clone(), b.clone()];
    let triple = |(a, b, c): &(String, String, String)| [a.clone(), b.clone(), c.clone()];
    let raw = RawMachine {
        domains: m.domains.clone(),
        influence: m.influence.iter().map(pair).collect(),
        actions: m.actions.iter().map(pair).collect(),
        outputs: m.outputs.clone(),
        states: m.states.clone(),
        initial: m.initial.clone(),
        transitions: m.transitions.iter().map(triple).collect(),
        obs: m.obs.iter().map(triple).collect(),
    };
    toml::to_string(&raw).expect("machines serialize")
}

impl fmt::Display for FrameDocument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&write_frame(&self.frame, &self.sets, &self.blurs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::{build_firewall, build_voting, FirewallParams, VotingParams};

    const RELAY: &str = r#"
data = ["0", "1"]

[[location]]
name = "src"
traces = [["a:0"], ["a:1"]]

[[location]]
name = "relay"
initial = "s"
transitions = [["s", "a:0", "g0"], ["s", "a:1", "g1"], ["g0", "b:0", "t"], ["g1", "b:1", "t"]]

[[location]]
name = "sink"
traces = [["b:0"], ["b:1"]]

[[channel]]
name = "a"
from = "src"
to = "relay"

[[channel]]
name = "b"
from = "relay"
to = "sink"

[sets]
input = ["a"]

[blurs.coarse]
kind = "all"
"#;

    #[test]
    fn parses_relay() {
        let doc = parse_frame(RELAY).unwrap();
        assert_eq!(doc.frame.num_locations(), 3);
        assert_eq!(doc.channels("input").unwrap(), doc.frame.chan_set(&["a"]).unwrap());
        assert_eq!(doc.channels("a,b").unwrap().len(), 2);
        assert!(doc.channels("nope").is_err());
        assert_eq!(doc.blurs["coarse"], BlurSpec::All);
    }

    #[test]
    fn unknown_key_reports_position() {
        let text = RELAY.replace("to = \"sink\"", "to = \"sink\"\ncolour = \"red\"");
        match parse_frame(&text) {
            Err(FormatError::Syntax { line, column, message }) => {
                assert_eq!(text.lines().nth(line - 1).unwrap(), "colour = \"red\"");
                assert_eq!(column, 1);
                assert!(message.contains("colour"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn semantic_errors() {
        let bad = RELAY.replace("\"a:0\"], [\"a:1\"]", "\"a0\"]");
        assert!(matches!(parse_frame(&bad), Err(FormatError::Label(_))));
        let bad = RELAY.replace("to = \"sink\"", "to = \"nowhere\"");
        assert!(matches!(parse_frame(&bad), Err(FormatError::Invalid(_))));
        let bad = RELAY.replace("input = [\"a\"]", "input = [\"q\"]");
        assert!(matches!(parse_frame(&bad), Err(FormatError::Set { .. })));
    }

    #[test]
    fn scenarios_round_trip() {
        let v = build_voting(&VotingParams { precincts: vec![2, 1], ..VotingParams::default() }).unwrap();
        let f = build_firewall(&FirewallParams::default()).unwrap();
        for s in [v, f] {
            let text = write_frame(&s.frame, &s.sets, &s.blurs);
            let doc = parse_frame(&text).unwrap();
            assert_eq!(doc.frame.to_spec(), s.frame.to_spec());
            assert_eq!(doc.sets, s.sets);
            assert_eq!(doc.blurs, s.blurs);
            assert_eq!(write_frame(&doc.frame, &doc.sets, &doc.blurs), text);
        }
    }

    #[test]
    fn explicit_round_trip() {
        let doc = parse_frame(RELAY).unwrap();
        let again = parse_frame(&doc.to_string()).unwrap();
        assert_eq!(again.frame.to_spec(), doc.frame.to_spec());
    }

    #[test]
    fn machine_round_trip() {
        let m = crate::purge::tests::echo();
        let text = write_machine(&m);
        assert_eq!(parse_machine(&text).unwrap(), m);
        assert!(parse_machine("domains = 3").is_err());
    }
}
