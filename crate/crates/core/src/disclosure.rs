//! Compatibility sets, no-disclosure, observational equivalence, cut
//! propagation checks and the merge of two runs agreeing on a cut.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::cuts::ChannelSetTriple;
use crate::events::{is_execution, CanonicalId, CanonicalRun, Event, EventError, EventSystem};
use crate::enumerate::Universe;
use crate::frame::{ChanSet, Frame, ValId};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum DisclosureError {
    #[error("{0} is not a local run of the channel set within the bound")]
    NotARun(&'static str),
}

/// cmpt_{observed→source}(run): the source runs realized together with `run`.
/// Empty when `run` is not an observed run.
pub fn compatible_runs(u: &Universe, observed: &ChanSet, source: &ChanSet, run: &CanonicalRun) -> Vec<CanonicalRun> {
    let obs = u.runs(observed);
    let src = u.runs(source);
    let Some(idx) = obs.index_of(run) else {
        return Vec::new();
    };
    let hits: BTreeSet<u32> =
        obs.of_exec.iter().zip(&src.of_exec).filter(|(o, _)| **o == idx).map(|(_, s)| *s).collect();
    hits.into_iter().map(|i| src.runs[i as usize].clone()).collect()
}

/// Outcome of [`no_disclosure`]. On failure, `counterexample` holds a C-run
/// and a C'-run that no execution realizes together.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DisclosureVerdict {
    pub holds: bool,
    pub counterexample: Option<(CanonicalRun, CanonicalRun)>,
    pub runs_c: usize,
    pub runs_c2: usize,
}

/// No disclosure from C to C2: every C-run is compatible with every C2-run.
pub fn no_disclosure(u: &Universe, c: &ChanSet, c2: &ChanSet) -> DisclosureVerdict {
    let a = u.runs(c);
    let b = u.runs(c2);
    let joint = u.joint(c, c2);
    let holds = joint.len() == a.len() * b.len();
    let counterexample = if holds {
        None
    } else {
        (0..a.len() as u32)
            .flat_map(|x| (0..b.len() as u32).map(move |y| (x, y)))
            .find(|p| !joint.contains(p))
            .map(|(x, y)| (a.runs[x as usize].clone(), b.runs[y as usize].clone()))
    };
    DisclosureVerdict { holds, counterexample, runs_c: a.len(), runs_c2: b.len() }
}

/// Verdicts for both directions; they always agree.
pub fn check_symmetry(u: &Universe, c: &ChanSet, c2: &ChanSet) -> (bool, bool) {
    (no_disclosure(u, c, c2).holds, no_disclosure(u, c2, c).holds)
}

/// Two source runs are observationally equivalent when every observed run is
/// compatible with both or with neither.
pub fn obs_equivalent(
    u: &Universe,
    source: &ChanSet,
    observed: &ChanSet,
    b1: &CanonicalRun,
    b2: &CanonicalRun,
) -> Result<bool, DisclosureError> {
    let src = u.runs(source);
    let i1 = src.index_of(b1).ok_or(DisclosureError::NotARun("first run"))?;
    let i2 = src.index_of(b2).ok_or(DisclosureError::NotARun("second run"))?;
    let by_src = u.compat_map(source, observed);
    Ok(by_src.get(&i1) == by_src.get(&i2))
}

/// Partition of the source runs into observational-equivalence classes.
pub fn obs_classes(u: &Universe, source: &ChanSet, observed: &ChanSet) -> Vec<Vec<CanonicalRun>> {
    let src = u.runs(source);
    let mut classes: BTreeMap<BTreeSet<u32>, Vec<CanonicalRun>> = BTreeMap::new();
    for (s, obs) in u.compat_map(source, observed) {
        classes.entry(obs).or_default().push(src.runs[s as usize].clone());
    }
    let mut out: Vec<_> = classes.into_values().collect();
    out.sort();
    out
}

/// Result of comparing cmpt_{C1→C3}(B1) with the union over intermediate runs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropagationCheck {
    /// The inclusion direct ⊆ via-intermediate holds for every C1-run.
    pub inclusion: bool,
    /// Both sides are equal for every C1-run.
    pub equality: bool,
    /// A C1-run and a C3-run on which the inclusion fails.
    pub counterexample: Option<(CanonicalRun, CanonicalRun)>,
    /// A C1-run and a C3-run reachable through C2 but not directly compatible.
    pub strictness_witness: Option<(CanonicalRun, CanonicalRun)>,
}

/// For all C1-runs B1: cmpt_{C1→C3}(B1) ⊆ ⋃_{B2 ∈ cmpt_{C1→C2}(B1)} cmpt_{C2→C3}(B2).
pub fn cmpt_propagation_check(u: &Universe, c1: &ChanSet, c2: &ChanSet, c3: &ChanSet) -> PropagationCheck {
    let r1 = u.runs(c1);
    let r3 = u.runs(c3);
    let direct = u.compat_map(c1, c3);
    let m12 = u.compat_map(c1, c2);
    let m23 = u.compat_map(c2, c3);
    let mut check = PropagationCheck { inclusion: true, equality: true, counterexample: None, strictness_witness: None };
    let empty = BTreeSet::new();
    for (b1, d) in &direct {
        let via: BTreeSet<u32> =
            m12.get(b1).unwrap_or(&empty).iter().flat_map(|b2| m23.get(b2).unwrap_or(&empty).iter().copied()).collect();
        if let Some(x) = d.difference(&via).next() {
            check.inclusion = false;
            check.equality = false;
            check
                .counterexample
                .get_or_insert_with(|| (r1.runs[*b1 as usize].clone(), r3.runs[*x as usize].clone()));
        }
        if let Some(x) = via.difference(d).next() {
            check.equality = false;
            check
                .strictness_witness
                .get_or_insert_with(|| (r1.runs[*b1 as usize].clone(), r3.runs[*x as usize].clone()));
        }
    }
    check
}

/// Checks cmpt_{obs→src}(Bo) = ⋃_{Bc ∈ cmpt_{obs→cut}(Bo)} cmpt_{cut→src}(Bc)
/// for every observed run Bo.
pub fn cut_lemma_check(u: &Universe, t: &ChannelSetTriple) -> PropagationCheck {
    cmpt_propagation_check(u, &t.sink, &t.cut, &t.source)
}

/// Antecedent and consequent of no-disclosure propagation across a cut:
/// no disclosure source↔cut, and no disclosure source↔sink.
pub fn cut_no_disclosure_check(u: &Universe, t: &ChannelSetTriple) -> (bool, bool) {
    (no_disclosure(u, &t.source, &t.cut).holds, no_disclosure(u, &t.source, &t.sink).holds)
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum MergeError {
    #[error("channel {0} of the left run has no counterpart in the target frame")]
    Untranslatable(String),
    #[error("the two runs disagree on the cut")]
    CutDisagreement,
    #[error("the runs overlap outside the cut on channel {0}")]
    Overlap(String),
    #[error("merged order is cyclic")]
    Cyclic,
    #[error("merged structure is not an execution of the target frame: {0}")]
    NotAnExecution(String),
    #[error(transparent)]
    Event(#[from] EventError),
}

/// Combines a run of `left` and a run of `right` that agree on `cut` into one
/// execution of `right`: events are the union (identified on the cut by
/// canonical id) and the order is the least one extending both.
///
/// `cut` is given in `right`'s channel ids; channels of `b_left` are matched
/// to `right` by name.
pub fn merge_across_cut(
    left: &Frame,
    right: &Frame,
    cut: &ChanSet,
    b_left: &CanonicalRun,
    b_right: &CanonicalRun,
) -> Result<EventSystem, MergeError> {
    let bl = b_left.translate(left, right).ok_or_else(|| {
        let missing = b_left
            .channels()
            .into_iter()
            .find(|&c| right.chan_id(&left.channel(c).name).is_none())
            .map(|c| left.channel(c).name.clone())
            .unwrap_or_default();
        MergeError::Untranslatable(missing)
    })?;
    if bl.restrict(cut) != b_right.restrict(cut) {
        return Err(MergeError::CutDisagreement);
    }
    for c in bl.channels().intersection(&b_right.channels()) {
        if !cut.contains(c) {
            return Err(MergeError::Overlap(right.channel(*c).name.clone()));
        }
    }
    let mut ids: BTreeMap<CanonicalId, ValId> = BTreeMap::new();
    ids.extend(bl.ids());
    ids.extend(b_right.ids());
    let pos: BTreeMap<CanonicalId, usize> = ids.keys().enumerate().map(|(i, id)| (*id, i)).collect();
    let events: Vec<Event> = ids.iter().map(|(id, v)| Event { chan: id.chan, msg: *v }).collect();
    let mut pairs = Vec::new();
    let keys: Vec<&CanonicalId> = ids.keys().collect();
    for w in keys.windows(2) {
        if w[0].chan == w[1].chan {
            pairs.push((pos[w[0]], pos[w[1]]));
        }
    }
    for (a, b) in bl.order().iter().chain(b_right.order()) {
        pairs.push((pos[a], pos[b]));
    }
    let sys = match EventSystem::new(events, &pairs) {
        Ok(s) => s,
        Err(EventError::Cyclic) => return Err(MergeError::Cyclic),
        Err(e) => return Err(e.into()),
    };
    let check = is_execution(&sys, right)?;
    if let Some((loc, why)) = check.failure {
        return Err(MergeError::NotAnExecution(format!("{} ({why:?})", right.location(loc).name)));
    }
    Ok(sys)
}
