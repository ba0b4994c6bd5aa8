//! Bounded exhaustive enumeration of executions and local runs.
//!
//! The search is a depth-first walk over global configurations. A label
//! `(c, v)` fires when it is enabled at the sender of `c` and at its recipient
//! at once; self-loop channels involve a single location.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::events::{canonical_of, CanonicalRun, Event, EventSystem, Mask, MAX_EVENTS};
use crate::frame::{ChanSet, Frame, Label, LocId};

/// Size limits defining the bounded execution universe.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bound {
    pub max_total_events: usize,
    pub max_events_per_location: Option<usize>,
}

impl Bound {
    pub fn total(n: usize) -> Bound {
        Bound { max_total_events: n, max_events_per_location: None }
    }

    pub fn with_per_location(self, n: usize) -> Bound {
        Bound { max_events_per_location: Some(n), ..self }
    }
}

impl Default for Bound {
    fn default() -> Bound {
        Bound::total(6)
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "total<={}", self.max_total_events)?;
        if let Some(p) = self.max_events_per_location {
            write!(f, ", per-location<={p}")?;
        }
        Ok(())
    }
}

/// Which execution orders make up the universe.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderSemantics {
    /// The least order making every location projection a chain.
    #[default]
    Minimal,
    /// Totally ordered executions: one per global interleaving.
    Total,
}

impl fmt::Display for OrderSemantics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OrderSemantics::Minimal => "minimal",
            OrderSemantics::Total => "total",
        })
    }
}

/// Refuses universes larger than this many executions.
pub const MAX_EXECUTIONS: usize = 3_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EnumError {
    #[error("bound {0} exceeds the {MAX_EVENTS}-event limit")]
    BoundTooLarge(usize),
    #[error("per-location bound {per} exceeds total bound {total}")]
    InconsistentBound { per: usize, total: usize },
    #[error("more than {MAX_EXECUTIONS} executions within the bound")]
    TooManyExecutions,
}

/// All executions within a bound, pairwise non-isomorphic, sorted by
/// canonical form.
#[derive(Clone, Debug)]
pub struct ExecutionSet {
    pub executions: Vec<EventSystem>,
}

pub fn enumerate_executions(frame: &Frame, bound: Bound, semantics: OrderSemantics) -> Result<ExecutionSet, EnumError> {
    let mut executions = search(frame, bound, semantics)?;
    executions.sort_by_cached_key(|e| e.canonicalize().expect("executions have chained channels"));
    Ok(ExecutionSet { executions })
}

/// lruns_C(F) at the bound, sorted.
pub fn enumerate_runs(
    frame: &Frame,
    chans: &ChanSet,
    bound: Bound,
    semantics: OrderSemantics,
) -> Result<Vec<CanonicalRun>, EnumError> {
    let u = Universe::new(frame.clone(), bound, semantics)?;
    Ok(u.runs(chans).runs.clone())
}

fn check_bound(bound: Bound) -> Result<(), EnumError> {
    if bound.max_total_events > MAX_EVENTS {
        return Err(EnumError::BoundTooLarge(bound.max_total_events));
    }
    if let Some(per) = bound.max_events_per_location {
        if per > bound.max_total_events {
            return Err(EnumError::InconsistentBound { per, total: bound.max_total_events });
        }
    }
    Ok(())
}

struct Search<'a> {
    frame: &'a Frame,
    bound: Bound,
    semantics: OrderSemantics,
    state: Vec<u32>,
    hist: Vec<Vec<Label>>,
    last: Vec<Option<usize>>,
    events: Vec<Event>,
    below: Vec<Mask>,
    visited: HashSet<Vec<u32>>,
    out: Vec<EventSystem>,
    overflow: bool,
}

fn search(frame: &Frame, bound: Bound, semantics: OrderSemantics) -> Result<Vec<EventSystem>, EnumError> {
    check_bound(bound)?;
    let n = frame.num_locations();
    let mut s = Search {
        frame,
        bound,
        semantics,
        state: frame.loc_ids().map(|l| frame.dfa(l).initial()).collect(),
        hist: vec![Vec::new(); n],
        last: vec![None; n],
        events: Vec::new(),
        below: Vec::new(),
        visited: HashSet::new(),
        out: Vec::new(),
        overflow: false,
    };
    s.dfs();
    if s.overflow {
        return Err(EnumError::TooManyExecutions);
    }
    Ok(s.out)
}

impl Search<'_> {
    fn key(&self) -> Vec<u32> {
        let mut k = Vec::with_capacity(self.events.len() * 2 + self.hist.len());
        for h in &self.hist {
            k.extend(h.iter().map(|l| l.chan.0 << 16 | l.value.0));
            k.push(u32::MAX);
        }
        k
    }

    fn dfs(&mut self) {
        if self.out.len() >= MAX_EXECUTIONS {
            self.overflow = true;
            return;
        }
        self.out.push(EventSystem::from_closure(self.events.clone(), self.below.clone()));
        if self.events.len() >= self.bound.max_total_events {
            return;
        }
        let frame = self.frame;
        for sender in frame.loc_ids() {
            let moves: Vec<(Label, u32)> = frame
                .dfa(sender)
                .enabled(self.state[sender.index()])
                .filter(|(l, _)| frame.channel(l.chan).sender == sender)
                .collect();
            for (label, next_s) in moves {
                let recipient = frame.channel(label.chan).recipient;
                let next_r = if recipient == sender {
                    next_s
                } else {
                    match frame.dfa(recipient).step(self.state[recipient.index()], label) {
                        Some(t) => t,
                        None => continue,
                    }
                };
                if let Some(per) = self.bound.max_events_per_location {
                    if self.hist[sender.index()].len() >= per || self.hist[recipient.index()].len() >= per {
                        continue;
                    }
                }
                self.fire(label, sender, recipient, next_s, next_r);
                if self.overflow {
                    return;
                }
            }
        }
    }

    fn fire(&mut self, label: Label, s: LocId, r: LocId, next_s: u32, next_r: u32) {
        let idx = self.events.len();
        let below = match self.semantics {
            OrderSemantics::Total => {
                if idx == 0 {
                    0
                } else {
                    Mask::MAX >> (128 - idx)
                }
            }
            OrderSemantics::Minimal => [self.last[s.index()], self.last[r.index()]]
                .into_iter()
                .flatten()
                .fold(0, |m, p| m | self.below[p] | 1 << p),
        };
        let saved = (self.state[s.index()], self.state[r.index()], self.last[s.index()], self.last[r.index()]);
        self.events.push(Event { chan: label.chan, msg: label.value });
        self.below.push(below);
        self.state[s.index()] = next_s;
        self.state[r.index()] = next_r;
        self.last[s.index()] = Some(idx);
        self.last[r.index()] = Some(idx);
        self.hist[s.index()].push(label);
        if r != s {
            self.hist[r.index()].push(label);
        }
        let fresh = match self.semantics {
            OrderSemantics::Total => true,
            OrderSemantics::Minimal => {
                let k = self.key();
                self.visited.insert(k)
            }
        };
        if fresh {
            self.dfs();
        }
        self.hist[s.index()].pop();
        if r != s {
            self.hist[r.index()].pop();
        }
        self.state[s.index()] = saved.0;
        self.state[r.index()] = saved.1;
        self.last[s.index()] = saved.2;
        self.last[r.index()] = saved.3;
        self.events.pop();
        self.below.pop();
    }
}

/// Local runs at one channel set, with each execution's run.
#[derive(Clone, Debug)]
pub struct RunTable {
    /// Distinct runs, sorted.
    pub runs: Vec<CanonicalRun>,
    /// Index into `runs` for every execution of the universe.
    pub of_exec: Vec<u32>,
}

impl RunTable {
    pub fn index_of(&self, run: &CanonicalRun) -> Option<u32> {
        self.runs.binary_search(run).ok().map(|i| i as u32)
    }

    pub fn len(&self) -> usize {
        self.runs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }
}

/// The bounded execution universe of a frame, with cached run tables.
pub struct Universe {
    frame: Frame,
    bound: Bound,
    semantics: OrderSemantics,
    executions: Vec<EventSystem>,
    tables: Mutex<HashMap<ChanSet, Arc<RunTable>>>,
}

impl fmt::Debug for Universe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Universe")
            .field("bound", &self.bound)
            .field("semantics", &self.semantics)
            .field("executions", &self.executions.len())
            .finish()
    }
}

impl Universe {
    pub fn new(frame: Frame, bound: Bound, semantics: OrderSemantics) -> Result<Universe, EnumError> {
        let executions = search(&frame, bound, semantics)?;
        Ok(Universe { frame, bound, semantics, executions, tables: Mutex::new(HashMap::new()) })
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn bound(&self) -> Bound {
        self.bound
    }

    pub fn semantics(&self) -> OrderSemantics {
        self.semantics
    }

    pub fn executions(&self) -> &[EventSystem] {
        &self.executions
    }

    pub fn len(&self) -> usize {
        self.executions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.executions.is_empty()
    }

    /// Drops executions failing `keep`. Cached tables are discarded.
    pub fn retain<F: Fn(&EventSystem) -> bool>(&mut self, keep: F) {
        self.executions.retain(|e| keep(e));
        self.tables.lock().expect("table cache poisoned").clear();
    }

    pub fn runs(&self, chans: &ChanSet) -> Arc<RunTable> {
        if let Some(t) = self.tables.lock().expect("table cache poisoned").get(chans) {
            return t.clone();
        }
        let table = Arc::new(self.build_table(chans));
        self.tables.lock().expect("table cache poisoned").insert(chans.clone(), table.clone());
        table
    }

    fn build_table(&self, chans: &ChanSet) -> RunTable {
        let mut ids: HashMap<CanonicalRun, u32> = HashMap::new();
        let mut raw = Vec::with_capacity(self.executions.len());
        for e in &self.executions {
            let run = canonical_of(e, |c| chans.contains(&c)).expect("executions have chained channels");
            let next = ids.len() as u32;
            raw.push(*ids.entry(run).or_insert(next));
        }
        let mut runs: Vec<(CanonicalRun, u32)> = ids.into_iter().collect();
        runs.sort();
        let mut remap = vec![0u32; runs.len()];
        for (new, (_, old)) in runs.iter().enumerate() {
            remap[*old as usize] = new as u32;
        }
        RunTable {
            runs: runs.into_iter().map(|(r, _)| r).collect(),
            of_exec: raw.into_iter().map(|i| remap[i as usize]).collect(),
        }
    }

    /// Pairs (C-run index, C'-run index) realized by a common execution.
    pub fn joint(&self, c: &ChanSet, c2: &ChanSet) -> BTreeSet<(u32, u32)> {
        let a = self.runs(c);
        let b = self.runs(c2);
        a.of_exec.iter().zip(&b.of_exec).map(|(&x, &y)| (x, y)).collect()
    }

    /// For each C-run index, the set of compatible C'-run indices.
    pub fn compat_map(&self, c: &ChanSet, c2: &ChanSet) -> BTreeMap<u32, BTreeSet<u32>> {
        let mut m: BTreeMap<u32, BTreeSet<u32>> = BTreeMap::new();
        for (x, y) in self.joint(c, c2) {
            m.entry(x).or_default().insert(y);
        }
        m
    }
}
