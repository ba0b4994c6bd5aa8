//! State machines as star-shaped frames: purge functions, noninterference,
//! nondeducibility, and the blur a purge induces on input runs.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::blur::{f_limits_flow, CompiledBlur};
use crate::enumerate::{Bound, EnumError, OrderSemantics, Universe};
use crate::events::{project, CanonicalRun, EventSystem};
use crate::frame::{
    is_valid_name, BehaviorSpec, ChanId, ChanSet, ChannelSpec, Frame, FrameSpec, Label, LocationSpec, LtsSpec,
};

/// A possibly nondeterministic machine over security domains.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MachineSpec {
    pub domains: Vec<String>,
    /// Pairs `(a, b)` meaning domain `a` may influence domain `b`.
    pub influence: Vec<(String, String)>,
    /// Action name and its domain.
    pub actions: Vec<(String, String)>,
    pub outputs: Vec<String>,
    pub states: Vec<String>,
    pub initial: String,
    pub transitions: Vec<(String, String, String)>,
    /// `(state, domain, output)`, one entry per state and domain.
    pub obs: Vec<(String, String, String)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum MachineError {
    #[error("invalid name {0:?}")]
    BadName(String),
    #[error("{kind} {name} declared twice")]
    Duplicate { kind: &'static str, name: String },
    #[error("unknown {kind} {name}")]
    Unknown { kind: &'static str, name: String },
    #[error("influence is not reflexive at {0}")]
    NotReflexive(String),
    #[error("obs has no entry for state {state} and domain {domain}")]
    MissingObs { state: String, domain: String },
    #[error("obs has two entries for state {state} and domain {domain}")]
    DuplicateObs { state: String, domain: String },
    #[error("machine needs at least one domain")]
    NoDomains,
    #[error("star frame is invalid: {0}")]
    Frame(String),
    #[error(transparent)]
    Enum(#[from] EnumError),
}

/// A validated machine with interned names.
#[derive(Clone, Debug)]
pub struct Machine {
    spec: MachineSpec,
    /// `influences[a][b]` iff a ↪ b.
    influences: Vec<Vec<bool>>,
    action_domain: BTreeMap<String, usize>,
}

fn check_names<'a>(kind: &'static str, names: impl IntoIterator<Item = &'a String>) -> Result<BTreeSet<&'a str>, MachineError> {
    let mut seen = BTreeSet::new();
    for n in names {
        if !is_valid_name(n) {
            return Err(MachineError::BadName(n.clone()));
        }
        if !seen.insert(n.as_str()) {
            return Err(MachineError::Duplicate { kind, name: n.clone() });
        }
    }
    Ok(seen)
}

impl Machine {
    pub fn new(spec: MachineSpec) -> Result<Machine, MachineError> {
        if spec.domains.is_empty() {
            return Err(MachineError::NoDomains);
        }
        check_names("domain", &spec.domains)?;
        check_names("action", spec.actions.iter().map(|(a, _)| a))?;
        check_names("output", &spec.outputs)?;
        let states = check_names("state", &spec.states)?;
        let unknown = |kind, name: &String| MachineError::Unknown { kind, name: name.clone() };
        let dom_index = |d: &String| spec.domains.iter().position(|x| x == d).ok_or_else(|| unknown("domain", d));
        let k = spec.domains.len();
        let mut influences = vec![vec![false; k]; k];
        for (a, b) in &spec.influence {
            influences[dom_index(a)?][dom_index(b)?] = true;
        }
        if let Some(i) = (0..k).find(|&i| !influences[i][i]) {
            return Err(MachineError::NotReflexive(spec.domains[i].clone()));
        }
        let mut action_domain = BTreeMap::new();
        for (a, d) in &spec.actions {
            action_domain.insert(a.clone(), dom_index(d)?);
        }
        if !states.contains(spec.initial.as_str()) {
            return Err(unknown("state", &spec.initial));
        }
        for (s, a, t) in &spec.transitions {
            for st in [s, t] {
                if !states.contains(st.as_str()) {
                    return Err(unknown("state", st));
                }
            }
            if !action_domain.contains_key(a) {
                return Err(unknown("action", a));
            }
        }
        let mut obs = BTreeSet::new();
        for (s, d, o) in &spec.obs {
            if !states.contains(s.as_str()) {
                return Err(unknown("state", s));
            }
            dom_index(d)?;
            if !spec.outputs.contains(o) {
                return Err(unknown("output", o));
            }
            if !obs.insert((s.as_str(), d.as_str())) {
                return Err(MachineError::DuplicateObs { state: s.clone(), domain: d.clone() });
            }
        }
        for s in &spec.states {
            for d in &spec.domains {
                if !obs.contains(&(s.as_str(), d.as_str())) {
                    return Err(MachineError::MissingObs { state: s.clone(), domain: d.clone() });
                }
            }
        }
        Ok(Machine { spec, influences, action_domain })
    }

    pub fn spec(&self) -> &MachineSpec {
        &self.spec
    }

    pub fn num_domains(&self) -> usize {
        self.spec.domains.len()
    }

    pub fn domain_index(&self, name: &str) -> Option<usize> {
        self.spec.domains.iter().position(|d| d == name)
    }

    pub fn influences(&self, a: usize, b: usize) -> bool {
        self.influences[a][b]
    }

    pub fn is_transitive(&self) -> bool {
        let k = self.num_domains();
        (0..k).all(|a| (0..k).all(|b| (0..k).all(|c| !(self.influences[a][b] && self.influences[b][c]) || self.influences[a][c])))
    }

    /// Domains that observe an input of domain `d`, in index order.
    pub fn audience(&self, d: usize) -> Vec<usize> {
        (0..self.num_domains()).filter(|&i| self.influences[d][i]).collect()
    }

    fn obs_of(&self, state: &str, domain: usize) -> &str {
        let d = &self.spec.domains[domain];
        &self.spec.obs.iter().find(|(s, x, _)| s == state && x == d).expect("obs is total").2
    }

    /// Total-event bound admitting `inputs` inputs and their outputs.
    pub fn bound_for(&self, inputs: usize) -> Bound {
        let widest = (0..self.num_domains()).map(|d| self.audience(d).len()).max().unwrap_or(0);
        Bound::total(inputs * (1 + widest))
    }
}

pub fn in_channel(domain: &str) -> String {
    format!("{domain}_in")
}

pub fn out_channel(domain: &str) -> String {
    format!("{domain}_out")
}

/// The machine `M` as a hub with one input and one output channel per
/// domain. After each input `a` of domain `d`, `M` delivers its new
/// observation to every domain that `d` may influence, in index order, before
/// accepting another input.
pub fn star_frame(m: &Machine) -> Result<Frame, MachineError> {
    let spec = &m.spec;
    let mut data: Vec<String> = spec.actions.iter().map(|(a, _)| a.clone()).collect();
    for o in &spec.outputs {
        if !data.contains(o) {
            data.push(o.clone());
        }
    }
    let mut channels = Vec::new();
    for d in &spec.domains {
        channels.push(ChannelSpec { name: in_channel(d), sender: d.clone(), recipient: "M".into() });
        channels.push(ChannelSpec { name: out_channel(d), sender: "M".into(), recipient: d.clone() });
    }
    let pending = |s: &str, d: usize, k: usize| format!("{s}.{}.{k}", spec.domains[d]);
    let mut states: Vec<String> = spec.states.clone();
    let mut transitions = Vec::new();
    for (s, a, t) in &spec.transitions {
        let d = m.action_domain[a];
        let audience = m.audience(d);
        let first = if audience.is_empty() { t.clone() } else { pending(t, d, 0) };
        transitions.push((s.clone(), in_channel(&spec.domains[d]), a.clone(), first));
    }
    for t in &spec.states {
        for d in 0..m.num_domains() {
            let audience = m.audience(d);
            for (k, &target) in audience.iter().enumerate() {
                let here = pending(t, d, k);
                let next = if k + 1 == audience.len() { t.clone() } else { pending(t, d, k + 1) };
                transitions.push((here.clone(), out_channel(&spec.domains[target]), m.obs_of(t, target).to_string(), next));
                states.push(here);
            }
        }
    }
    let mut locations =
        vec![LocationSpec { name: "M".into(), behavior: BehaviorSpec::Lts(LtsSpec { states, initial: spec.initial.clone(), transitions }) }];
    for (i, d) in spec.domains.iter().enumerate() {
        let mut tr = Vec::new();
        for (a, _) in spec.actions.iter().filter(|(a, _)| m.action_domain[a] == i) {
            tr.push(("s".to_string(), in_channel(d), a.clone(), "s".to_string()));
        }
        for o in &spec.outputs {
            tr.push(("s".to_string(), out_channel(d), o.clone(), "s".to_string()));
        }
        locations.push(LocationSpec {
            name: d.clone(),
            behavior: BehaviorSpec::Lts(LtsSpec { states: vec!["s".into()], initial: "s".into(), transitions: tr }),
        });
    }
    if spec.domains.iter().any(|d| d == "M") {
        return Err(MachineError::Frame("a domain may not be named M".into()));
    }
    Frame::from_spec(&FrameSpec { data, locations, channels }).map_err(|r| MachineError::Frame(r.to_string()))
}

/// The star frame of a machine and its executions at a bound, keeping only
/// those in which `M` has delivered every pending output.
#[derive(Debug)]
pub struct MachineUniverse {
    pub machine: Machine,
    pub universe: Universe,
    inputs: ChanSet,
}

impl MachineUniverse {
    pub fn new(machine: Machine, bound: Bound) -> Result<MachineUniverse, MachineError> {
        let frame = star_frame(&machine)?;
        let mut universe = Universe::new(frame, bound, OrderSemantics::Minimal)?;
        let f = universe.frame().clone();
        universe.retain(|e| {
            let mut owed: isize = 0;
            for ev in e.events() {
                let ch = f.channel(ev.chan);
                match machine.domain_index(&f.location(ch.sender).name) {
                    Some(d) => owed += machine.audience(d).len() as isize,
                    None => owed -= 1,
                }
            }
            owed == 0
        });
        let inputs = machine.spec.domains.iter().map(|d| f.chan_id(&in_channel(d)).expect("input channel")).collect();
        Ok(MachineUniverse { machine, universe, inputs })
    }

    pub fn frame(&self) -> &Frame {
        self.universe.frame()
    }

    /// IN: every input channel.
    pub fn inputs(&self) -> &ChanSet {
        &self.inputs
    }

    /// C_i: the input and output channel of domain `d`.
    pub fn view(&self, d: usize) -> ChanSet {
        let name = &self.machine.spec.domains[d];
        let f = self.frame();
        [in_channel(name), out_channel(name)].iter().map(|c| f.chan_id(c).expect("domain channel")).collect()
    }

    /// vis(d): input channels of domains that may influence `d`.
    pub fn visible(&self, d: usize) -> ChanSet {
        let f = self.frame();
        (0..self.machine.num_domains())
            .filter(|&j| self.machine.influences(j, d))
            .map(|j| f.chan_id(&in_channel(&self.machine.spec.domains[j])).expect("input channel"))
            .collect()
    }

    fn domain_of(&self, c: ChanId) -> usize {
        let f = self.frame();
        self.machine.domain_index(&f.location(f.channel(c).sender).name).expect("input channels leave a domain")
    }

    /// The input events of an execution, in order.
    pub fn input_sequence(&self, e: &EventSystem) -> Vec<Label> {
        let f = self.frame();
        let m_loc = f.loc_id("M").expect("star frame has M");
        project(e, f, m_loc).expect("executions project linearly").into_iter().filter(|l| self.inputs.contains(&l.chan)).collect()
    }

    /// Applies `kind` for target domain `d` to an input sequence.
    pub fn purge(&self, kind: PurgeKind, d: usize, inputs: &[Label]) -> Vec<Label> {
        match kind {
            PurgeKind::Gm => inputs.iter().copied().filter(|l| self.machine.influences(self.domain_of(l.chan), d)).collect(),
            PurgeKind::HaighYoung => {
                let mut sources = BTreeSet::from([d]);
                let mut kept = Vec::new();
                for l in inputs.iter().rev() {
                    let from = self.domain_of(l.chan);
                    if sources.iter().any(|&s| self.machine.influences(from, s)) {
                        sources.insert(from);
                        kept.push(*l);
                    }
                }
                kept.reverse();
                kept
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PurgeKind {
    /// Keeps inputs of domains that may influence the target.
    Gm,
    /// Keeps inputs that reach the target through a chain of later inputs,
    /// each step permitted by the influence relation.
    HaighYoung,
}

/// Outcome of [`validate_purge`]. Witnesses are execution indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PurgeValidation {
    /// Equal inputs give equal purges.
    pub inputs_only: bool,
    /// Equal purges give equal visible inputs.
    pub visible_inputs: bool,
    pub witness: Option<(usize, usize)>,
}

impl PurgeValidation {
    pub fn is_purge(&self) -> bool {
        self.inputs_only && self.visible_inputs
    }
}

/// Checks both purge conditions for `purge` (a function of the execution)
/// over every pair of executions.
pub fn validate_purge<P: Fn(&EventSystem) -> Vec<Label>>(mu: &MachineUniverse, d: usize, purge: P) -> PurgeValidation {
    let u = &mu.universe;
    let inp = u.runs(mu.inputs());
    let vis = u.runs(&mu.visible(d));
    let values: Vec<Vec<Label>> = u.executions().iter().map(&purge).collect();
    let mut by_input: BTreeMap<u32, usize> = BTreeMap::new();
    let mut by_value: BTreeMap<&[Label], usize> = BTreeMap::new();
    let mut result = PurgeValidation { inputs_only: true, visible_inputs: true, witness: None };
    for (k, value) in values.iter().enumerate() {
        let first = *by_input.entry(inp.of_exec[k]).or_insert(k);
        if values[first] != *value && result.inputs_only {
            result.inputs_only = false;
            result.witness.get_or_insert((first, k));
        }
        let first = *by_value.entry(value.as_slice()).or_insert(k);
        if vis.of_exec[first] != vis.of_exec[k] && result.visible_inputs {
            result.visible_inputs = false;
            result.witness.get_or_insert((first, k));
        }
    }
    result
}

/// Executions grouped by purge value.
fn purge_classes(mu: &MachineUniverse, kind: PurgeKind, d: usize) -> Vec<Vec<usize>> {
    let mut groups: BTreeMap<Vec<Label>, Vec<usize>> = BTreeMap::new();
    for (k, e) in mu.universe.executions().iter().enumerate() {
        groups.entry(mu.purge(kind, d, &mu.input_sequence(e))).or_default().push(k);
    }
    groups.into_values().collect()
}

/// Verdict of [`check_ni`] or [`check_nd`]: two executions with equal purge
/// violating the property, rendered as runs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PurgeVerdict {
    pub holds: bool,
    pub counterexample: Option<(CanonicalRun, CanonicalRun)>,
}

fn verdict(mu: &MachineUniverse, pair: Option<(usize, usize)>) -> PurgeVerdict {
    let run = |k: usize| mu.universe.executions()[k].canonicalize().expect("executions chain");
    PurgeVerdict { holds: pair.is_none(), counterexample: pair.map(|(a, b)| (run(a), run(b))) }
}

/// Equal purges imply equal views of domain `d`.
pub fn check_ni(mu: &MachineUniverse, kind: PurgeKind, d: usize) -> PurgeVerdict {
    let view = mu.universe.runs(&mu.view(d));
    let pair = purge_classes(mu, kind, d).into_iter().find_map(|g| {
        let first = g[0];
        g.iter().find(|&&k| view.of_exec[k] != view.of_exec[first]).map(|&k| (first, k))
    });
    verdict(mu, pair)
}

/// Equal purges imply that the inputs of one execution are compatible with
/// the view of the other.
pub fn check_nd(mu: &MachineUniverse, kind: PurgeKind, d: usize) -> PurgeVerdict {
    let u = &mu.universe;
    let view_chans = mu.view(d);
    let view = u.runs(&view_chans);
    let inp = u.runs(mu.inputs());
    let compat = u.compat_map(&view_chans, mu.inputs());
    let pair = purge_classes(mu, kind, d).into_iter().find_map(|g| {
        g.iter().find_map(|&a| {
            let ok = &compat[&view.of_exec[a]];
            g.iter().find(|&&b| !ok.contains(&inp.of_exec[b])).map(|&b| (a, b))
        })
    });
    verdict(mu, pair)
}

/// The partition of IN-runs by purge value.
pub fn purge_blur(mu: &MachineUniverse, kind: PurgeKind, d: usize) -> CompiledBlur {
    let table = mu.universe.runs(mu.inputs());
    let keys: Vec<Vec<Label>> = table
        .runs
        .iter()
        .map(|r| {
            let sys = r.to_event_system();
            let seq: Vec<Label> = sys.linear_extension().into_iter().map(|i| sys.events()[i].label()).collect();
            mu.purge(kind, d, &seq)
        })
        .collect();
    CompiledBlur::from_classes(&keys)
}

/// Nondeducibility and purge-blurred flow from IN to the view of `d`.
pub fn nd_blur_agreement(mu: &MachineUniverse, kind: PurgeKind, d: usize) -> (bool, bool) {
    let blur = purge_blur(mu, kind, d);
    let flow = f_limits_flow(&mu.universe, mu.inputs(), &mu.view(d), &blur);
    (check_nd(mu, kind, d).holds, flow.holds)
}
