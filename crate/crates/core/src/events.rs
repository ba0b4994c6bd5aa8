//! Finite labelled posets of events, execution checking, restriction and the
//! canonical encoding of local runs.
//!
//! Orders are stored as their strict transitive closure, one predecessor
//! bitmask per event, which bounds systems to [`MAX_EVENTS`] events.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::frame::{ChanId, ChanSet, Frame, Label, LocId, ValId};

pub const MAX_EVENTS: usize = 128;

pub(crate) type Mask = u128;

pub(crate) fn bits(mut m: Mask) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if m == 0 {
            None
        } else {
            let i = m.trailing_zeros() as usize;
            m &= m - 1;
            Some(i)
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Event {
    pub chan: ChanId,
    pub msg: ValId,
}

impl Event {
    pub fn label(self) -> Label {
        Label { chan: self.chan, value: self.msg }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EventError {
    #[error("event systems are limited to {MAX_EVENTS} events, got {0}")]
    TooManyEvents(usize),
    #[error("order relation is cyclic")]
    Cyclic,
    #[error("order pair references missing event {0}")]
    BadIndex(usize),
    #[error("events {0} and {1} on the same channel are unordered")]
    SameChannelUnordered(usize, usize),
    #[error("event {0} uses a channel or value unknown to the frame")]
    UnknownReference(usize),
}

/// A finite set of events with a strict partial order.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct EventSystem {
    events: Vec<Event>,
    below: Vec<Mask>,
}

impl EventSystem {
    pub fn empty() -> EventSystem {
        EventSystem::default()
    }

    /// Builds a system from events and generating pairs `(a, b)` meaning a ≺ b.
    pub fn new(events: Vec<Event>, pairs: &[(usize, usize)]) -> Result<EventSystem, EventError> {
        let n = events.len();
        if n > MAX_EVENTS {
            return Err(EventError::TooManyEvents(n));
        }
        let mut preds: Vec<Mask> = vec![0; n];
        for &(a, b) in pairs {
            if a >= n {
                return Err(EventError::BadIndex(a));
            }
            if b >= n {
                return Err(EventError::BadIndex(b));
            }
            if a == b {
                return Err(EventError::Cyclic);
            }
            preds[b] |= 1 << a;
        }
        let below = close(&preds).ok_or(EventError::Cyclic)?;
        Ok(EventSystem { events, below })
    }

    pub(crate) fn from_closure(events: Vec<Event>, below: Vec<Mask>) -> EventSystem {
        debug_assert_eq!(events.len(), below.len());
        EventSystem { events, below }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub(crate) fn below(&self, i: usize) -> Mask {
        self.below[i]
    }

    /// Strict order: `a ≺ b`.
    pub fn precedes(&self, a: usize, b: usize) -> bool {
        self.below[b] >> a & 1 == 1
    }

    pub fn comparable(&self, a: usize, b: usize) -> bool {
        a == b || self.precedes(a, b) || self.precedes(b, a)
    }

    /// All strict order pairs.
    pub fn order_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for b in 0..self.len() {
            for a in bits(self.below[b]) {
                out.push((a, b));
            }
        }
        out
    }

    /// Keeps the events selected by `keep`, with the induced order.
    pub fn select<F: Fn(&Event) -> bool>(&self, keep: F) -> EventSystem {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| keep(&self.events[i])).collect();
        let mut pos = vec![usize::MAX; self.len()];
        for (k, &i) in idx.iter().enumerate() {
            pos[i] = k;
        }
        let events = idx.iter().map(|&i| self.events[i]).collect();
        let below = idx
            .iter()
            .map(|&i| bits(self.below[i]).filter(|&j| pos[j] != usize::MAX).fold(0, |m, j| m | 1 << pos[j]))
            .collect();
        EventSystem { events, below }
    }

    /// B↾C: events on channels in `chans`, order induced.
    pub fn restrict(&self, chans: &ChanSet) -> EventSystem {
        self.select(|e| chans.contains(&e.chan))
    }

    /// Events in an order-compatible sequence (a linear extension).
    pub fn linear_extension(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by_key(|&i| (self.below[i].count_ones(), i));
        idx
    }

    pub fn canonicalize(&self) -> Result<CanonicalRun, EventError> {
        canonical_of(self, |_| true)
    }
}

/// Strict transitive closure of a predecessor relation; `None` if cyclic.
pub(crate) fn close(preds: &[Mask]) -> Option<Vec<Mask>> {
    let n = preds.len();
    let mut indeg: Vec<u32> = preds.iter().map(|m| m.count_ones()).collect();
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (b, &m) in preds.iter().enumerate() {
        for a in bits(m) {
            succ[a].push(b);
        }
    }
    let mut ready: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut below = vec![0 as Mask; n];
    let mut done = 0;
    while let Some(a) = ready.pop() {
        done += 1;
        for &b in &succ[a] {
            below[b] |= below[a] | 1 << a;
            indeg[b] -= 1;
            if indeg[b] == 0 {
                ready.push(b);
            }
        }
    }
    (done == n).then_some(below)
}

/// Why a location's projection is not acceptable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProjectionFailure {
    /// Two events at the location are incomparable.
    Linearity(usize, usize),
    /// The projected label sequence is not a trace of the location.
    TraceMembership(Vec<Label>),
}

/// proj(B, ℓ) as a label sequence.
pub fn project(sys: &EventSystem, frame: &Frame, loc: LocId) -> Result<Vec<Label>, ProjectionFailure> {
    let idx = location_events(sys, frame, loc);
    for (k, &a) in idx.iter().enumerate() {
        for &b in &idx[k + 1..] {
            if !sys.comparable(a, b) {
                return Err(ProjectionFailure::Linearity(a, b));
            }
        }
    }
    Ok(idx.iter().map(|&i| sys.events[i].label()).collect())
}

fn location_events(sys: &EventSystem, frame: &Frame, loc: LocId) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..sys.len())
        .filter(|&i| {
            let c = frame.channel(sys.events[i].chan);
            c.sender == loc || c.recipient == loc
        })
        .collect();
    idx.sort_by_key(|&i| (sys.below[i].count_ones(), i));
    idx
}

/// Outcome of [`is_execution`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExecutionCheck {
    /// First failing location and reason, if any.
    pub failure: Option<(LocId, ProjectionFailure)>,
}

impl ExecutionCheck {
    pub fn ok(&self) -> bool {
        self.failure.is_none()
    }
}

/// Checks per-location linearity and trace membership.
pub fn is_execution(sys: &EventSystem, frame: &Frame) -> Result<ExecutionCheck, EventError> {
    for (i, e) in sys.events.iter().enumerate() {
        if e.chan.index() >= frame.num_channels() || e.msg.index() >= frame.data().len() {
            return Err(EventError::UnknownReference(i));
        }
    }
    for loc in frame.loc_ids() {
        match project(sys, frame, loc) {
            Err(f) => return Ok(ExecutionCheck { failure: Some((loc, f)) }),
            Ok(trace) => {
                if !frame.dfa(loc).accepts(&trace) {
                    return Ok(ExecutionCheck { failure: Some((loc, ProjectionFailure::TraceMembership(trace))) });
                }
            }
        }
    }
    Ok(ExecutionCheck { failure: None })
}

/// Identity of an event within a run: its channel and position on that channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalId {
    pub chan: ChanId,
    pub ordinal: u32,
}

/// Isomorphism-invariant encoding of a system whose same-channel events are
/// totally ordered: per-channel message sequences plus the cross-channel
/// pairs of the transitive reduction.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalRun {
    seqs: Vec<(ChanId, Vec<ValId>)>,
    order: Vec<(CanonicalId, CanonicalId)>,
}

pub(crate) fn canonical_of<F: Fn(ChanId) -> bool>(sys: &EventSystem, keep: F) -> Result<CanonicalRun, EventError> {
    let idx: Vec<usize> = (0..sys.len()).filter(|&i| keep(sys.events[i].chan)).collect();
    let sub: Mask = idx.iter().fold(0, |m, &i| m | 1 << i);
    let mut ord = vec![0u32; sys.len()];
    for &i in &idx {
        let c = sys.events[i].chan;
        let mut k = 0;
        for &j in &idx {
            if j != i && sys.events[j].chan == c {
                if sys.precedes(j, i) {
                    k += 1;
                } else if !sys.precedes(i, j) {
                    return Err(EventError::SameChannelUnordered(j.min(i), j.max(i)));
                }
            }
        }
        ord[i] = k;
    }
    let mut per: BTreeMap<ChanId, Vec<(u32, ValId)>> = BTreeMap::new();
    for &i in &idx {
        per.entry(sys.events[i].chan).or_default().push((ord[i], sys.events[i].msg));
    }
    let seqs = per
        .into_iter()
        .map(|(c, mut v)| {
            v.sort();
            (c, v.into_iter().map(|(_, m)| m).collect())
        })
        .collect();
    let id = |i: usize| CanonicalId { chan: sys.events[i].chan, ordinal: ord[i] };
    let mut order = Vec::new();
    for &i in &idx {
        let b = sys.below[i] & sub;
        let covered = bits(b).fold(0, |m, p| m | (sys.below[p] & sub));
        for p in bits(b & !covered) {
            if sys.events[p].chan != sys.events[i].chan {
                order.push((id(p), id(i)));
            }
        }
    }
    order.sort();
    Ok(CanonicalRun { seqs, order })
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum RunParseError {
    #[error("malformed run text near {0:?}")]
    Syntax(String),
    #[error("unknown channel {0}")]
    UnknownChannel(String),
    #[error("unknown value {0}")]
    UnknownValue(String),
    #[error("order pair references missing event {0}")]
    MissingEvent(String),
    #[error(transparent)]
    Order(#[from] EventError),
}

impl CanonicalRun {
    pub fn empty() -> CanonicalRun {
        CanonicalRun::default()
    }

    pub fn is_empty(&self) -> bool {
        self.seqs.is_empty()
    }

    pub fn seqs(&self) -> &[(ChanId, Vec<ValId>)] {
        &self.seqs
    }

    pub fn order(&self) -> &[(CanonicalId, CanonicalId)] {
        &self.order
    }

    pub fn event_count(&self) -> usize {
        self.seqs.iter().map(|(_, v)| v.len()).sum()
    }

    pub fn channels(&self) -> ChanSet {
        self.seqs.iter().map(|(c, _)| *c).collect()
    }

    /// Messages on one channel, in order.
    pub fn on(&self, chan: ChanId) -> &[ValId] {
        self.seqs.iter().find(|(c, _)| *c == chan).map(|(_, v)| v.as_slice()).unwrap_or(&[])
    }

    /// Events listed by canonical id.
    pub fn ids(&self) -> Vec<(CanonicalId, ValId)> {
        self.seqs
            .iter()
            .flat_map(|(c, vs)| {
                vs.iter().enumerate().map(move |(k, &v)| (CanonicalId { chan: *c, ordinal: k as u32 }, v))
            })
            .collect()
    }

    /// An event system realizing this run; events are in canonical id order.
    pub fn to_event_system(&self) -> EventSystem {
        let ids = self.ids();
        let pos: BTreeMap<CanonicalId, usize> = ids.iter().enumerate().map(|(i, (id, _))| (*id, i)).collect();
        let events: Vec<Event> = ids.iter().map(|(id, v)| Event { chan: id.chan, msg: *v }).collect();
        let mut pairs = Vec::new();
        for w in ids.windows(2) {
            if w[0].0.chan == w[1].0.chan {
                pairs.push((pos[&w[0].0], pos[&w[1].0]));
            }
        }
        for (a, b) in &self.order {
            pairs.push((pos[a], pos[b]));
        }
        EventSystem::new(events, &pairs).expect("canonical runs encode acyclic orders")
    }

    pub fn restrict(&self, chans: &ChanSet) -> CanonicalRun {
        canonical_of(&self.to_event_system(), |c| chans.contains(&c)).expect("runs have chained channels")
    }

    /// Moves every event on channel `c` to channel `map(c)`. `map` must be
    /// injective on this run's channels.
    pub fn rename_channels<F: Fn(ChanId) -> ChanId>(&self, map: F) -> CanonicalRun {
        let mut seqs: Vec<(ChanId, Vec<ValId>)> = self.seqs.iter().map(|(c, v)| (map(*c), v.clone())).collect();
        seqs.sort();
        let m = |id: CanonicalId| CanonicalId { chan: map(id.chan), ordinal: id.ordinal };
        let mut order: Vec<_> = self.order.iter().map(|&(a, b)| (m(a), m(b))).collect();
        order.sort();
        CanonicalRun { seqs, order }
    }

    /// Re-expresses a run of `from` in `to`, matching channels and values by name.
    pub fn translate(&self, from: &Frame, to: &Frame) -> Option<CanonicalRun> {
        let chan = |c: ChanId| to.chan_id(&from.channel(c).name);
        let mut seqs = Vec::new();
        for (c, vs) in &self.seqs {
            let vals: Option<Vec<ValId>> = vs.iter().map(|&v| to.val_id(from.value_name(v))).collect();
            seqs.push((chan(*c)?, vals?));
        }
        seqs.sort();
        let mut order = Vec::new();
        for (a, b) in &self.order {
            order.push((
                CanonicalId { chan: chan(a.chan)?, ordinal: a.ordinal },
                CanonicalId { chan: chan(b.chan)?, ordinal: b.ordinal },
            ));
        }
        order.sort();
        Some(CanonicalRun { seqs, order })
    }

    pub fn display<'a>(&'a self, frame: &'a Frame) -> RunDisplay<'a> {
        RunDisplay { run: self, frame }
    }

    /// Parses the textual form produced by [`CanonicalRun::display`], e.g.
    /// `a=[x,y] b=[z] | a#0<b#0` or `<empty>`.
    pub fn parse(frame: &Frame, text: &str) -> Result<CanonicalRun, RunParseError> {
        let text = text.trim();
        if text == "<empty>" || text.is_empty() {
            return Ok(CanonicalRun::empty());
        }
        let (left, right) = match text.split_once('|') {
            Some((l, r)) => (l, r),
            None => (text, ""),
        };
        let mut events = Vec::new();
        let mut index: BTreeMap<CanonicalId, usize> = BTreeMap::new();
        let mut pairs = Vec::new();
        for tok in left.split_whitespace() {
            let (name, rest) = tok.split_once('=').ok_or_else(|| RunParseError::Syntax(tok.into()))?;
            let inner = rest
                .strip_prefix('[')
                .and_then(|r| r.strip_suffix(']'))
                .ok_or_else(|| RunParseError::Syntax(tok.into()))?;
            let c = frame.chan_id(name).ok_or_else(|| RunParseError::UnknownChannel(name.into()))?;
            let vals: Vec<&str> = inner.split(',').filter(|s| !s.is_empty()).collect();
            for (k, v) in vals.iter().enumerate() {
                let msg = frame.val_id(v).ok_or_else(|| RunParseError::UnknownValue(v.to_string()))?;
                let id = CanonicalId { chan: c, ordinal: k as u32 };
                if index.insert(id, events.len()).is_some() {
                    return Err(RunParseError::Syntax(tok.into()));
                }
                if k > 0 {
                    pairs.push((events.len() - 1, events.len()));
                }
                events.push(Event { chan: c, msg });
            }
        }
        let parse_id = |s: &str| -> Result<usize, RunParseError> {
            let (name, ord) = s.split_once('#').ok_or_else(|| RunParseError::Syntax(s.into()))?;
            let c = frame.chan_id(name).ok_or_else(|| RunParseError::UnknownChannel(name.into()))?;
            let ordinal: u32 = ord.parse().map_err(|_| RunParseError::Syntax(s.into()))?;
            index.get(&CanonicalId { chan: c, ordinal }).copied().ok_or_else(|| RunParseError::MissingEvent(s.into()))
        };
        for tok in right.split_whitespace() {
            let (a, b) = tok.split_once('<').ok_or_else(|| RunParseError::Syntax(tok.into()))?;
            pairs.push((parse_id(a)?, parse_id(b)?));
        }
        Ok(EventSystem::new(events, &pairs)?.canonicalize()?)
    }
}

pub struct RunDisplay<'a> {
    run: &'a CanonicalRun,
    frame: &'a Frame,
}

impl fmt::Display for RunDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fr = self.frame;
        if self.run.is_empty() {
            return write!(f, "<empty>");
        }
        let seqs: Vec<String> = self
            .run
            .seqs
            .iter()
            .map(|(c, vs)| {
                let vals: Vec<&str> = vs.iter().map(|&v| fr.value_name(v)).collect();
                format!("{}=[{}]", fr.channel(*c).name, vals.join(","))
            })
            .collect();
        write!(f, "{}", seqs.join(" "))?;
        if !self.run.order.is_empty() {
            let id = |i: &CanonicalId| format!("{}#{}", fr.channel(i.chan).name, i.ordinal);
            let pairs: Vec<String> = self.run.order.iter().map(|(a, b)| format!("{}<{}", id(a), id(b))).collect();
            write!(f, " | {}", pairs.join(" "))?;
        }
        Ok(())
    }
}

/// True iff `sub` is (isomorphic to) a downward-closed, order-induced part of `sup`.
pub fn is_initial_substructure(sub: &EventSystem, sup: &EventSystem) -> Result<bool, EventError> {
    let a = sub.canonicalize()?;
    let b = sup.canonicalize()?;
    let sup_ids = b.ids();
    let pos: BTreeMap<CanonicalId, usize> = sup_ids.iter().enumerate().map(|(i, (id, _))| (*id, i)).collect();
    let sup_sys = b.to_event_system();
    let sub_sys = a.to_event_system();
    let mut map = Vec::new();
    for (id, v) in a.ids() {
        match pos.get(&id) {
            Some(&j) if sup_ids[j].1 == v => map.push(j),
            _ => return Ok(false),
        }
    }
    let image: Mask = map.iter().fold(0, |m, &j| m | 1 << j);
    for (i, &j) in map.iter().enumerate() {
        if sup_sys.below(j) & !image != 0 {
            return Ok(false);
        }
        for (k, &l) in map.iter().enumerate() {
            if sub_sys.precedes(k, i) != sup_sys.precedes(l, j) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{BehaviorSpec, ChannelSpec, FrameSpec, LocationSpec};

    fn ev(c: u32, v: u32) -> Event {
        Event { chan: ChanId(c), msg: ValId(v) }
    }

    fn self_loop_frame(traces: Vec<Vec<(&str, &str)>>) -> Frame {
        let spec = FrameSpec {
            data: vec!["v".into(), "w".into()],
            locations: vec![LocationSpec {
                name: "l".into(),
                behavior: BehaviorSpec::Explicit(
                    traces.into_iter().map(|t| t.into_iter().map(|(c, v)| (c.into(), v.into())).collect()).collect(),
                ),
            }],
            channels: vec![
                ChannelSpec { name: "c".into(), sender: "l".into(), recipient: "l".into() },
                ChannelSpec { name: "d".into(), sender: "l".into(), recipient: "l".into() },
            ],
        };
        Frame::from_spec(&spec).unwrap()
    }

    #[test]
    fn empty_system_is_an_execution() {
        let f = self_loop_frame(vec![vec![]]);
        assert!(is_execution(&EventSystem::empty(), &f).unwrap().ok());
    }

    #[test]
    fn trace_membership_failure() {
        let f = self_loop_frame(vec![vec![]]);
        let sys = EventSystem::new(vec![ev(0, 0)], &[]).unwrap();
        let check = is_execution(&sys, &f).unwrap();
        assert!(matches!(check.failure, Some((LocId(0), ProjectionFailure::TraceMembership(_)))));
    }

    #[test]
    fn linearity_failure() {
        let f = self_loop_frame(vec![vec![], vec![("c", "v")], vec![("c", "v"), ("d", "v")]]);
        let sys = EventSystem::new(vec![ev(0, 0), ev(1, 0)], &[]).unwrap();
        let check = is_execution(&sys, &f).unwrap();
        assert!(matches!(check.failure, Some((LocId(0), ProjectionFailure::Linearity(0, 1)))));
        let ordered = EventSystem::new(vec![ev(0, 0), ev(1, 0)], &[(0, 1)]).unwrap();
        assert!(is_execution(&ordered, &f).unwrap().ok());
    }

    #[test]
    fn cycles_rejected() {
        assert_eq!(EventSystem::new(vec![ev(0, 0), ev(1, 0)], &[(0, 1), (1, 0)]), Err(EventError::Cyclic));
    }

    #[test]
    fn closure_is_transitive() {
        let s = EventSystem::new(vec![ev(0, 0), ev(1, 0), ev(2, 0)], &[(0, 1), (1, 2)]).unwrap();
        assert!(s.precedes(0, 2));
        assert!(!s.precedes(2, 0));
    }

    #[test]
    fn canonical_form_ignores_carrier() {
        let a = EventSystem::new(vec![ev(0, 0), ev(1, 1)], &[(0, 1)]).unwrap();
        let b = EventSystem::new(vec![ev(1, 1), ev(0, 0)], &[(1, 0)]).unwrap();
        assert_eq!(a.canonicalize().unwrap(), b.canonicalize().unwrap());
    }

    #[test]
    fn canonical_form_sees_cross_order() {
        let a = EventSystem::new(vec![ev(0, 0), ev(1, 1)], &[(0, 1)]).unwrap();
        let b = EventSystem::new(vec![ev(0, 0), ev(1, 1)], &[(1, 0)]).unwrap();
        let c = EventSystem::new(vec![ev(0, 0), ev(1, 1)], &[]).unwrap();
        let (a, b, c) = (a.canonicalize().unwrap(), b.canonicalize().unwrap(), c.canonicalize().unwrap());
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_ne!(b, c);
    }

    #[test]
    fn unordered_same_channel_rejected() {
        let s = EventSystem::new(vec![ev(0, 0), ev(0, 1)], &[]).unwrap();
        assert!(matches!(s.canonicalize(), Err(EventError::SameChannelUnordered(0, 1))));
    }

    #[test]
    fn restriction_keeps_induced_order() {
        // c0 ≺ c1 ≺ c2; restricting to {c0, c2} keeps c0 ≺ c2.
        let s = EventSystem::new(vec![ev(0, 0), ev(1, 0), ev(2, 0)], &[(0, 1), (1, 2)]).unwrap();
        let r = s.restrict(&[ChanId(0), ChanId(2)].into_iter().collect());
        assert_eq!(r.len(), 2);
        assert!(r.precedes(0, 1));
        assert!(s.restrict(&ChanSet::new()).is_empty());
    }

    #[test]
    fn text_round_trip() {
        let f = self_loop_frame(vec![vec![]]);
        let s = EventSystem::new(vec![ev(0, 0), ev(1, 1), ev(0, 1)], &[(0, 1), (1, 2)]).unwrap();
        let run = s.canonicalize().unwrap();
        let text = run.display(&f).to_string();
        assert_eq!(text, "c=[v,w] d=[w] | c#0<d#0 d#0<c#1");
        assert_eq!(CanonicalRun::parse(&f, &text).unwrap(), run);
        assert_eq!(CanonicalRun::parse(&f, "<empty>").unwrap(), CanonicalRun::empty());
        assert!(CanonicalRun::parse(&f, "zz=[v]").is_err());
    }

    #[test]
    fn substructures() {
        let s = EventSystem::new(vec![ev(0, 0), ev(1, 1), ev(0, 1)], &[(0, 1), (1, 2)]).unwrap();
        let prefix = EventSystem::new(vec![ev(0, 0), ev(1, 1)], &[(0, 1)]).unwrap();
        let gap = EventSystem::new(vec![ev(1, 1)], &[]).unwrap();
        assert!(is_initial_substructure(&EventSystem::empty(), &s).unwrap());
        assert!(is_initial_substructure(&s, &s).unwrap());
        assert!(is_initial_substructure(&prefix, &s).unwrap());
        assert!(!is_initial_substructure(&gap, &s).unwrap());
    }

    #[test]
    fn rename_moves_whole_channels() {
        let s = EventSystem::new(vec![ev(0, 0), ev(1, 1)], &[(0, 1)]).unwrap();
        let run = s.canonicalize().unwrap();
        let swapped = run.rename_channels(|c| ChanId(1 - c.0));
        let expect = EventSystem::new(vec![ev(1, 0), ev(0, 1)], &[(0, 1)]).unwrap().canonicalize().unwrap();
        assert_eq!(swapped, expect);
    }
}
