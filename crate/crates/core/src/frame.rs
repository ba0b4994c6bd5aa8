//! Static frames: locations with prefix-closed trace sets, one-directional
//! channels between them, and a finite data domain.
//!
//! A [`FrameSpec`] is the unresolved, name-based form produced by parsers and
//! builders. [`validate_frame`] lists every well-formedness violation of a spec;
//! [`Frame::from_spec`] resolves a spec that has none.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use petgraph::graph::{DiGraph, UnGraph};

use crate::automaton::Dfa;

macro_rules! id_type {
    ($(#[$m:meta])* $name:ident) => {
        $(#[$m])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub u32);

        impl $name {
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }
    };
}

id_type!(
    /// Index of a location in its frame.
    LocId
);
id_type!(
    /// Index of a channel in its frame.
    ChanId
);
id_type!(
    /// Index of a data value in its frame's domain.
    ValId
);

pub type ChanSet = BTreeSet<ChanId>;

/// A (channel, value) pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label {
    pub chan: ChanId,
    pub value: ValId,
}

/// Classification of a label relative to a location.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LabelKind {
    Local,
    Transmission,
    Reception,
}

/// One end of a channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Endpoint {
    Entry(ChanId),
    Exit(ChanId),
}

/// Unresolved frame description, keyed by names.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FrameSpec {
    pub data: Vec<String>,
    pub locations: Vec<LocationSpec>,
    pub channels: Vec<ChannelSpec>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocationSpec {
    pub name: String,
    pub behavior: BehaviorSpec,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BehaviorSpec {
    /// Finite trace set; each label is (channel, value).
    Explicit(Vec<Vec<(String, String)>>),
    Lts(LtsSpec),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LtsSpec {
    pub states: Vec<String>,
    pub initial: String,
    /// (from, channel, value, to)
    pub transitions: Vec<(String, String, String, String)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChannelSpec {
    pub name: String,
    pub sender: String,
    pub recipient: String,
}

/// A single well-formedness violation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    BadName(String),
    DuplicateValue(String),
    DuplicateLocation(String),
    DuplicateChannel(String),
    DanglingEndpoint { channel: String, location: String },
    UnknownChannel { location: String, channel: String },
    ForeignLabel { location: String, channel: String },
    ValueOutsideDomain { location: String, value: String },
    NotPrefixClosed { location: String, trace: String },
    UnknownState { location: String, state: String },
    DuplicateState { location: String, state: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::BadName(n) => write!(f, "illegal name {n:?}"),
            Violation::DuplicateValue(v) => write!(f, "duplicate data value {v}"),
            Violation::DuplicateLocation(l) => write!(f, "duplicate location {l}"),
            Violation::DuplicateChannel(c) => write!(f, "duplicate channel {c} (endpoint owned twice)"),
            Violation::DanglingEndpoint { channel, location } => {
                write!(f, "channel {channel} names undeclared location {location}")
            }
            Violation::UnknownChannel { location, channel } => {
                write!(f, "location {location} uses undeclared channel {channel}")
            }
            Violation::ForeignLabel { location, channel } => {
                write!(f, "location {location} uses channel {channel} it has no endpoint of")
            }
            Violation::ValueOutsideDomain { location, value } => {
                write!(f, "location {location} uses value {value} outside the data domain")
            }
            Violation::NotPrefixClosed { location, trace } => {
                write!(f, "traces of {location} not prefix-closed: missing {trace}")
            }
            Violation::UnknownState { location, state } => {
                write!(f, "location {location} references undeclared state {state}")
            }
            Violation::DuplicateState { location, state } => {
                write!(f, "location {location} declares state {state} twice")
            }
        }
    }
}

/// Result of [`validate_frame`]; empty iff the spec is well formed.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "well-formed");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationReport {}

/// Names are identifiers over `[A-Za-z0-9_.-]`.
pub fn is_valid_name(name: &str) -> bool {
    !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-'))
}

/// Lists every violated well-formedness condition of `spec`.
pub fn validate_frame(spec: &FrameSpec) -> ValidationReport {
    let mut out = Vec::new();
    let mut values = BTreeSet::new();
    for v in &spec.data {
        if !is_valid_name(v) {
            out.push(Violation::BadName(v.clone()));
        }
        if !values.insert(v.as_str()) {
            out.push(Violation::DuplicateValue(v.clone()));
        }
    }
    let mut locs = BTreeSet::new();
    for l in &spec.locations {
        if !is_valid_name(&l.name) {
            out.push(Violation::BadName(l.name.clone()));
        }
        if !locs.insert(l.name.as_str()) {
            out.push(Violation::DuplicateLocation(l.name.clone()));
        }
    }
    let mut chans: BTreeMap<&str, &ChannelSpec> = BTreeMap::new();
    for c in &spec.channels {
        if !is_valid_name(&c.name) {
            out.push(Violation::BadName(c.name.clone()));
        }
        if chans.insert(c.name.as_str(), c).is_some() {
            out.push(Violation::DuplicateChannel(c.name.clone()));
        }
        for end in [&c.sender, &c.recipient] {
            if !locs.contains(end.as_str()) {
                out.push(Violation::DanglingEndpoint { channel: c.name.clone(), location: end.clone() });
            }
        }
    }
    for l in &spec.locations {
        let check_label = |chan: &str, value: &str, out: &mut Vec<Violation>| match chans.get(chan) {
            None => out.push(Violation::UnknownChannel { location: l.name.clone(), channel: chan.to_string() }),
            Some(c) => {
                if c.sender != l.name && c.recipient != l.name {
                    out.push(Violation::ForeignLabel { location: l.name.clone(), channel: chan.to_string() });
                }
                if !values.contains(value) {
                    out.push(Violation::ValueOutsideDomain { location: l.name.clone(), value: value.to_string() });
                }
            }
        };
        match &l.behavior {
            BehaviorSpec::Explicit(traces) => {
                let set: BTreeSet<&[(String, String)]> = traces.iter().map(|t| t.as_slice()).collect();
                let mut missing = BTreeSet::new();
                for t in &set {
                    for (c, v) in t.iter() {
                        check_label(c, v, &mut out);
                    }
                    for k in 0..t.len() {
                        if !set.contains(&t[..k]) {
                            missing.insert(&t[..k]);
                        }
                    }
                }
                if !set.contains(&[][..]) {
                    missing.insert(&[][..]);
                }
                for m in missing {
                    out.push(Violation::NotPrefixClosed { location: l.name.clone(), trace: trace_text(m) });
                }
            }
            BehaviorSpec::Lts(lts) => {
                let mut states = BTreeSet::new();
                for s in &lts.states {
                    if !states.insert(s.as_str()) {
                        out.push(Violation::DuplicateState { location: l.name.clone(), state: s.clone() });
                    }
                }
                let check_state = |s: &str, out: &mut Vec<Violation>| {
                    if !states.contains(s) {
                        out.push(Violation::UnknownState { location: l.name.clone(), state: s.to_string() });
                    }
                };
                check_state(&lts.initial, &mut out);
                for (a, c, v, b) in &lts.transitions {
                    check_state(a, &mut out);
                    check_state(b, &mut out);
                    check_label(c, v, &mut out);
                }
            }
        }
    }
    dedup_keep_order(&mut out);
    ValidationReport { violations: out }
}

fn dedup_keep_order(v: &mut Vec<Violation>) {
    let mut seen = Vec::new();
    v.retain(|x| {
        if seen.contains(x) {
            false
        } else {
            seen.push(x.clone());
            true
        }
    });
}

fn trace_text(t: &[(String, String)]) -> String {
    if t.is_empty() {
        return "<empty>".to_string();
    }
    t.iter().map(|(c, v)| format!("{c}:{v}")).collect::<Vec<_>>().join(" ")
}

/// Resolved behavior of a location.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TraceSpec {
    Explicit(BTreeSet<Vec<Label>>),
    Lts(Lts),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lts {
    pub states: Vec<String>,
    pub initial: u32,
    pub transitions: Vec<(u32, Label, u32)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Location {
    pub name: String,
    pub behavior: TraceSpec,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Channel {
    pub name: String,
    pub sender: LocId,
    pub recipient: LocId,
}

impl Channel {
    pub fn is_self_loop(&self) -> bool {
        self.sender == self.recipient
    }
}

/// A validated frame. Immutable; all derived indexes are computed once.
#[derive(Clone, Debug)]
pub struct Frame {
    data: Vec<String>,
    locations: Vec<Location>,
    channels: Vec<Channel>,
    chans_of: Vec<Vec<ChanId>>,
    dfas: Vec<Dfa>,
    loc_index: HashMap<String, LocId>,
    chan_index: HashMap<String, ChanId>,
    val_index: HashMap<String, ValId>,
}

impl PartialEq for Frame {
    fn eq(&self, other: &Self) -> bool {
        self.data == other.data && self.locations == other.locations && self.channels == other.channels
    }
}

impl Eq for Frame {}

impl Frame {
    /// Resolves a well-formed spec.
    pub fn from_spec(spec: &FrameSpec) -> Result<Frame, ValidationReport> {
        let report = validate_frame(spec);
        if !report.is_ok() {
            return Err(report);
        }
        let val_index: HashMap<String, ValId> =
            spec.data.iter().enumerate().map(|(i, v)| (v.clone(), ValId(i as u32))).collect();
        let loc_index: HashMap<String, LocId> =
            spec.locations.iter().enumerate().map(|(i, l)| (l.name.clone(), LocId(i as u32))).collect();
        let chan_index: HashMap<String, ChanId> =
            spec.channels.iter().enumerate().map(|(i, c)| (c.name.clone(), ChanId(i as u32))).collect();
        let channels: Vec<Channel> = spec
            .channels
            .iter()
            .map(|c| Channel { name: c.name.clone(), sender: loc_index[&c.sender], recipient: loc_index[&c.recipient] })
            .collect();
        let label = |c: &str, v: &str| Label { chan: chan_index[c], value: val_index[v] };
        let locations: Vec<Location> = spec
            .locations
            .iter()
            .map(|l| {
                let behavior = match &l.behavior {
                    BehaviorSpec::Explicit(traces) => TraceSpec::Explicit(
                        traces.iter().map(|t| t.iter().map(|(c, v)| label(c, v)).collect()).collect(),
                    ),
                    BehaviorSpec::Lts(lts) => {
                        let sidx: HashMap<&str, u32> =
                            lts.states.iter().enumerate().map(|(i, s)| (s.as_str(), i as u32)).collect();
                        TraceSpec::Lts(Lts {
                            states: lts.states.clone(),
                            initial: sidx[lts.initial.as_str()],
                            transitions: lts
                                .transitions
                                .iter()
                                .map(|(a, c, v, b)| (sidx[a.as_str()], label(c, v), sidx[b.as_str()]))
                                .collect(),
                        })
                    }
                };
                Location { name: l.name.clone(), behavior }
            })
            .collect();
        Ok(Frame::assemble(spec.data.clone(), locations, channels, loc_index, chan_index, val_index))
    }

    fn assemble(
        data: Vec<String>,
        locations: Vec<Location>,
        channels: Vec<Channel>,
        loc_index: HashMap<String, LocId>,
        chan_index: HashMap<String, ChanId>,
        val_index: HashMap<String, ValId>,
    ) -> Frame {
        let mut chans_of = vec![Vec::new(); locations.len()];
        for (i, c) in channels.iter().enumerate() {
            chans_of[c.sender.index()].push(ChanId(i as u32));
            if c.recipient != c.sender {
                chans_of[c.recipient.index()].push(ChanId(i as u32));
            }
        }
        let dfas = locations
            .iter()
            .map(|l| match &l.behavior {
                TraceSpec::Explicit(set) => Dfa::from_traces(set.iter()),
                TraceSpec::Lts(lts) => Dfa::from_lts(lts.initial, &lts.transitions),
            })
            .collect();
        Frame { data, locations, channels, chans_of, dfas, loc_index, chan_index, val_index }
    }

    /// The name-based form of this frame.
    pub fn to_spec(&self) -> FrameSpec {
        let lab = |l: &Label| (self.channel(l.chan).name.clone(), self.value_name(l.value).to_string());
        FrameSpec {
            data: self.data.clone(),
            locations: self
                .locations
                .iter()
                .map(|l| LocationSpec {
                    name: l.name.clone(),
                    behavior: match &l.behavior {
                        TraceSpec::Explicit(set) => {
                            BehaviorSpec::Explicit(set.iter().map(|t| t.iter().map(lab).collect()).collect())
                        }
                        TraceSpec::Lts(lts) => BehaviorSpec::Lts(LtsSpec {
                            states: lts.states.clone(),
                            initial: lts.states[lts.initial as usize].clone(),
                            transitions: lts
                                .transitions
                                .iter()
                                .map(|(a, l, b)| {
                                    let (c, v) = lab(l);
                                    (lts.states[*a as usize].clone(), c, v, lts.states[*b as usize].clone())
                                })
                                .collect(),
                        }),
                    },
                })
                .collect(),
            channels: self
                .channels
                .iter()
                .map(|c| ChannelSpec {
                    name: c.name.clone(),
                    sender: self.location(c.sender).name.clone(),
                    recipient: self.location(c.recipient).name.clone(),
                })
                .collect(),
        }
    }

    pub fn data(&self) -> &[String] {
        &self.data
    }

    pub fn locations(&self) -> &[Location] {
        &self.locations
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn num_locations(&self) -> usize {
        self.locations.len()
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn location(&self, l: LocId) -> &Location {
        &self.locations[l.index()]
    }

    pub fn channel(&self, c: ChanId) -> &Channel {
        &self.channels[c.index()]
    }

    pub fn value_name(&self, v: ValId) -> &str {
        &self.data[v.index()]
    }

    pub fn loc_ids(&self) -> impl Iterator<Item = LocId> {
        (0..self.locations.len() as u32).map(LocId)
    }

    pub fn chan_ids(&self) -> impl Iterator<Item = ChanId> {
        (0..self.channels.len() as u32).map(ChanId)
    }

    pub fn all_channels(&self) -> ChanSet {
        self.chan_ids().collect()
    }

    pub fn loc_id(&self, name: &str) -> Option<LocId> {
        self.loc_index.get(name).copied()
    }

    pub fn chan_id(&self, name: &str) -> Option<ChanId> {
        self.chan_index.get(name).copied()
    }

    pub fn val_id(&self, name: &str) -> Option<ValId> {
        self.val_index.get(name).copied()
    }

    /// chans(ℓ): channels with an endpoint at ℓ.
    pub fn chans(&self, l: LocId) -> &[ChanId] {
        &self.chans_of[l.index()]
    }

    /// chans(L) for a location set.
    pub fn chans_of_locations<I: IntoIterator<Item = LocId>>(&self, locs: I) -> ChanSet {
        locs.into_iter().flat_map(|l| self.chans(l).iter().copied()).collect()
    }

    /// pends(ℓ): the channel endpoints held by ℓ.
    pub fn pends(&self, l: LocId) -> BTreeSet<Endpoint> {
        let mut out = BTreeSet::new();
        for &c in self.chans(l) {
            let ch = self.channel(c);
            if ch.sender == l {
                out.insert(Endpoint::Entry(c));
            }
            if ch.recipient == l {
                out.insert(Endpoint::Exit(c));
            }
        }
        out
    }

    /// Locations holding an endpoint of some channel in `chans`.
    pub fn endpoint_locations(&self, chans: &ChanSet) -> BTreeSet<LocId> {
        chans.iter().flat_map(|&c| [self.channel(c).sender, self.channel(c).recipient]).collect()
    }

    pub fn label_kind(&self, l: LocId, label: Label) -> Option<LabelKind> {
        let c = self.channel(label.chan);
        match (c.sender == l, c.recipient == l) {
            (true, true) => Some(LabelKind::Local),
            (true, false) => Some(LabelKind::Transmission),
            (false, true) => Some(LabelKind::Reception),
            (false, false) => None,
        }
    }

    pub fn dfa(&self, l: LocId) -> &Dfa {
        &self.dfas[l.index()]
    }

    pub fn label_text(&self, l: Label) -> String {
        format!("{}:{}", self.channel(l.chan).name, self.value_name(l.value))
    }

    pub fn trace_text(&self, t: &[Label]) -> String {
        if t.is_empty() {
            return "<empty>".to_string();
        }
        t.iter().map(|&l| self.label_text(l)).collect::<Vec<_>>().join(" ")
    }

    /// Resolves channel names.
    pub fn chan_set<S: AsRef<str>>(&self, names: &[S]) -> Result<ChanSet, String> {
        names
            .iter()
            .map(|n| self.chan_id(n.as_ref()).ok_or_else(|| n.as_ref().to_string()))
            .collect()
    }

    /// Resolves location names.
    pub fn loc_set<S: AsRef<str>>(&self, names: &[S]) -> Result<BTreeSet<LocId>, String> {
        names
            .iter()
            .map(|n| self.loc_id(n.as_ref()).ok_or_else(|| n.as_ref().to_string()))
            .collect()
    }

    pub fn chan_names(&self, set: &ChanSet) -> Vec<String> {
        set.iter().map(|&c| self.channel(c).name.clone()).collect()
    }
}

/// gr(F): one vertex per location (in id order), one edge per channel.
pub fn frame_graph(frame: &Frame) -> DiGraph<String, String> {
    let mut g = DiGraph::new();
    let nodes: Vec<_> = frame.locations().iter().map(|l| g.add_node(l.name.clone())).collect();
    for c in frame.channels() {
        g.add_edge(nodes[c.sender.index()], nodes[c.recipient.index()], c.name.clone());
    }
    g
}

/// ugr(F): the symmetrized multigraph.
pub fn undirected_frame_graph(frame: &Frame) -> UnGraph<String, String> {
    let mut g = UnGraph::new_undirected();
    let nodes: Vec<_> = frame.locations().iter().map(|l| g.add_node(l.name.clone())).collect();
    for c in frame.channels() {
        g.add_edge(nodes[c.sender.index()], nodes[c.recipient.index()], c.name.clone());
    }
    g
}

/// Label sequences of length at most `max_len` in traces(ℓ).
pub fn location_language(frame: &Frame, l: LocId, max_len: usize) -> BTreeSet<Vec<Label>> {
    frame.dfa(l).language(max_len)
}
