//! Location sets shared between two frames, and transfer of blur-limited flow
//! from one frame to the other across the shared boundary.
//!
//! Channels and values of the two frames are matched by name.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::automaton::Difference;
use crate::blur::{compile_in, f_limits_flow, BlurError, BlurSpec, FlowVerdict};
use crate::disclosure::{merge_across_cut, MergeError};
use crate::enumerate::Universe;
use crate::events::{CanonicalRun, EventSystem};
use crate::frame::{ChanSet, Endpoint, Frame, Label, LocId};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum CoreError {
    #[error("location {0} is missing from the {1} frame")]
    MissingLocation(String, &'static str),
    #[error("location {location} has different endpoints in the two frames")]
    EndpointMismatch { location: String },
    #[error("location {location} has different traces; first difference: {trace}")]
    TraceMismatch { location: String, trace: String },
    #[error("channel {0} is not in the expected part of the frame")]
    Misplaced(String),
    #[error("unknown channel {0}")]
    UnknownChannel(String),
    #[error("the lcut runs of the second frame are not all runs of the first; e.g. {0}")]
    SideCondition(String),
    #[error(transparent)]
    Blur(#[from] BlurError),
    #[error(transparent)]
    Merge(#[from] MergeError),
}

/// A location set L0 common to two frames, and the channel partition it
/// induces. Channel sets are stored by name.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SharedCore {
    pub core: Vec<String>,
    /// Channels with both endpoints in L0.
    pub left: Vec<String>,
    /// Channels with exactly one endpoint in L0.
    pub lcut: Vec<String>,
    /// Channels of the first frame with no endpoint in L0.
    pub right1: Vec<String>,
    /// Channels of the second frame with no endpoint in L0.
    pub right2: Vec<String>,
    /// A second-frame lcut run that the first frame lacks, if any.
    pub new_cut_run: Option<String>,
}

impl SharedCore {
    /// lruns_{lcut}(F2) ⊆ lruns_{lcut}(F1) at the bound.
    pub fn side_condition(&self) -> bool {
        self.new_cut_run.is_none()
    }

    pub fn lcut_in(&self, frame: &Frame) -> ChanSet {
        frame.chan_set(&self.lcut).expect("core channels exist in both frames")
    }

    pub fn left_in(&self, frame: &Frame) -> ChanSet {
        frame.chan_set(&self.left).expect("core channels exist in both frames")
    }
}

fn endpoint_names(f: &Frame, l: LocId) -> BTreeSet<(bool, String)> {
    f.pends(l)
        .into_iter()
        .map(|e| match e {
            Endpoint::Entry(c) => (true, f.channel(c).name.clone()),
            Endpoint::Exit(c) => (false, f.channel(c).name.clone()),
        })
        .collect()
}

fn partition(f: &Frame, core: &BTreeSet<LocId>) -> (Vec<String>, Vec<String>, Vec<String>) {
    let (mut left, mut cut, mut right) = (Vec::new(), Vec::new(), Vec::new());
    for ch in f.channels() {
        let inside = [ch.sender, ch.recipient].iter().filter(|l| core.contains(l)).count();
        let target = if ch.is_self_loop() {
            if inside > 0 { &mut left } else { &mut right }
        } else {
            match inside {
                2 => &mut left,
                1 => &mut cut,
                _ => &mut right,
            }
        };
        target.push(ch.name.clone());
    }
    (left, cut, right)
}

/// Validates that the locations `core` have the same endpoints and traces in
/// both frames, derives the channel partition, and checks that the second
/// frame has no lcut runs the first lacks.
pub fn build_shared_core(u1: &Universe, u2: &Universe, core: &[String]) -> Result<SharedCore, CoreError> {
    let (f1, f2) = (u1.frame(), u2.frame());
    let mut l1 = BTreeSet::new();
    let mut l2 = BTreeSet::new();
    for name in core {
        let a = f1.loc_id(name).ok_or_else(|| CoreError::MissingLocation(name.clone(), "first"))?;
        let b = f2.loc_id(name).ok_or_else(|| CoreError::MissingLocation(name.clone(), "second"))?;
        if endpoint_names(f1, a) != endpoint_names(f2, b) {
            return Err(CoreError::EndpointMismatch { location: name.clone() });
        }
        let map = |l: Label| {
            Some(Label { chan: f2.chan_id(&f1.channel(l.chan).name)?, value: f2.val_id(f1.value_name(l.value))? })
        };
        if let Some(d) = f1.dfa(a).difference(f2.dfa(b), map) {
            let trace = match d {
                Difference::OnlyLeft(t) => format!("{} only in the first frame", f1.trace_text(&t)),
                Difference::OnlyRight { prefix, label } => {
                    let mut text = f1.trace_text(&prefix);
                    if prefix.is_empty() {
                        text.clear();
                    } else {
                        text.push(' ');
                    }
                    format!("{text}{} only in the second frame", f2.label_text(label))
                }
            };
            return Err(CoreError::TraceMismatch { location: name.clone(), trace });
        }
        l1.insert(a);
        l2.insert(b);
    }
    let (left, lcut, right1) = partition(f1, &l1);
    let (left2, lcut2, right2) = partition(f2, &l2);
    debug_assert_eq!(left.iter().collect::<BTreeSet<_>>(), left2.iter().collect::<BTreeSet<_>>());
    debug_assert_eq!(lcut.iter().collect::<BTreeSet<_>>(), lcut2.iter().collect::<BTreeSet<_>>());
    let cut1 = f1.chan_set(&lcut).map_err(CoreError::UnknownChannel)?;
    let cut2 = f2.chan_set(&lcut).map_err(CoreError::UnknownChannel)?;
    let runs1 = u1.runs(&cut1);
    let new_cut_run = u2.runs(&cut2).runs.iter().find_map(|r| {
        let back = r.translate(f2, f1);
        match back {
            Some(b) if runs1.index_of(&b).is_some() => None,
            _ => Some(r.display(f2).to_string()),
        }
    });
    Ok(SharedCore { core: core.to_vec(), left, lcut, right1, right2, new_cut_run })
}

fn resolve(f: &Frame, names: &[String]) -> Result<ChanSet, CoreError> {
    f.chan_set(names).map_err(CoreError::UnknownChannel)
}

/// Both halves of the compositional check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompositionVerdict {
    pub side_condition: bool,
    /// f-limited flow in the first frame from source to lcut.
    pub antecedent: FlowVerdict,
    /// f-limited flow in the second frame from source to observed.
    pub consequent: FlowVerdict,
}

impl CompositionVerdict {
    pub fn implication_holds(&self) -> bool {
        !(self.side_condition && self.antecedent.holds) || self.consequent.holds
    }
}

/// Checks f-limited flow source→lcut in the first frame and source→observed
/// in the second. `source` must lie in LEFT and `observed` in RIGHT2.
pub fn verify_composition(
    core: &SharedCore,
    u1: &Universe,
    u2: &Universe,
    source: &[String],
    observed: &[String],
    blur: &BlurSpec,
) -> Result<CompositionVerdict, CoreError> {
    for s in source {
        if !core.left.contains(s) {
            return Err(CoreError::Misplaced(s.clone()));
        }
    }
    for o in observed {
        if !core.right2.contains(o) {
            return Err(CoreError::Misplaced(o.clone()));
        }
    }
    let (f1, f2) = (u1.frame(), u2.frame());
    let src1 = resolve(f1, source)?;
    let src2 = resolve(f2, source)?;
    let obs2 = resolve(f2, observed)?;
    let b1 = compile_in(u1, blur, &src1)?;
    let b2 = compile_in(u2, blur, &src2)?;
    Ok(CompositionVerdict {
        side_condition: core.side_condition(),
        antecedent: f_limits_flow(u1, &src1, &core.lcut_in(f1), &b1),
        consequent: f_limits_flow(u2, &src2, &obs2, &b2),
    })
}

/// For every lcut run of the second frame, its compatible source runs agree
/// in both frames. Returns a disagreeing cut run on failure.
pub fn two_frame_locality(
    core: &SharedCore,
    u1: &Universe,
    u2: &Universe,
    source: &[String],
) -> Result<Option<CanonicalRun>, CoreError> {
    let (f1, f2) = (u1.frame(), u2.frame());
    let (src1, src2) = (resolve(f1, source)?, resolve(f2, source)?);
    let (cut1, cut2) = (core.lcut_in(f1), core.lcut_in(f2));
    let t1 = u1.runs(&cut1);
    let m1 = u1.compat_map(&cut1, &src1);
    let m2 = u2.compat_map(&cut2, &src2);
    let (s1, s2) = (u1.runs(&src1), u2.runs(&src2));
    let c2 = u2.runs(&cut2);
    for (bc, srcs) in &m2 {
        let run = &c2.runs[*bc as usize];
        let in1: BTreeSet<CanonicalRun> = run
            .translate(f2, f1)
            .and_then(|r| t1.index_of(&r))
            .and_then(|i| m1.get(&i))
            .map(|set| set.iter().map(|&i| s1.runs[i as usize].clone()).collect())
            .unwrap_or_default();
        let in2: BTreeSet<CanonicalRun> = srcs
            .iter()
            .map(|&i| s2.runs[i as usize].translate(f2, f1).expect("core channels exist in both frames"))
            .collect();
        if in1 != in2 {
            return Ok(Some(run.clone()));
        }
    }
    Ok(None)
}

/// Merges a first-frame run over LEFT ∪ lcut with a second-frame run over
/// RIGHT2 ∪ lcut into an execution of the second frame.
pub fn merge_with_core(
    core: &SharedCore,
    f1: &Frame,
    f2: &Frame,
    b_left: &CanonicalRun,
    b_right: &CanonicalRun,
) -> Result<EventSystem, CoreError> {
    Ok(merge_across_cut(f1, f2, &core.lcut_in(f2), b_left, b_right)?)
}
