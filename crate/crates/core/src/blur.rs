//! Blur operators over a bounded universe of local runs, blur validation and
//! f-limited flow.
//!
//! A [`BlurSpec`] is declarative and name-based. [`compile`] resolves it
//! against a frame and the universe lruns_C at the source channel set C,
//! producing a [`CompiledBlur`] that works on run indices into that universe.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cuts::{is_cut, ChannelSetTriple, CutError};
use crate::enumerate::Universe;
use crate::events::CanonicalRun;
use crate::frame::{ChanId, ChanSet, Frame, ValId};

/// Declarative blur description.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BlurSpec {
    /// f_id: S ↦ S.
    Identity,
    /// f_all: S ↦ the whole universe (for nonempty S).
    All,
    /// Runs are equivalent when their restrictions to `channels` coincide.
    Restriction { channels: Vec<String> },
    /// Explicit classes of runs (textual form); unlisted runs are singletons.
    Classes { classes: Vec<Vec<String>> },
    /// An equivalence relation given by its non-identity pairs.
    Relation { pairs: Vec<(String, String)> },
    /// Runs related by a permutation of the voter locations, moving each
    /// voter's events onto another voter's channel. Permutations fix the
    /// `fixed` voters and, when `blocks` is nonempty, stay within blocks.
    Permutation {
        voters: Vec<String>,
        #[serde(default)]
        fixed: Vec<String>,
        #[serde(default)]
        blocks: Vec<Vec<String>>,
    },
    /// Runs are equivalent when their selected events are isomorphic. An
    /// event is selected when its channel and its value are both admitted;
    /// an absent list admits everything.
    Selection {
        #[serde(default)]
        channels: Option<Vec<String>>,
        #[serde(default)]
        values: Option<Vec<String>>,
    },
    /// f({a}) listed explicitly; unlisted runs map to themselves.
    Table { entries: Vec<TableEntry> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableEntry {
    pub run: String,
    pub image: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum BlurError {
    #[error("unknown channel {0}")]
    UnknownChannel(String),
    #[error("unknown location {0}")]
    UnknownLocation(String),
    #[error("unknown value {0}")]
    UnknownValue(String),
    #[error("cannot parse run {0:?}: {1}")]
    RunParse(String, String),
    #[error("run {0} is outside the blur universe")]
    RunOutsideUniverse(String),
    #[error("run {0} appears in two classes")]
    OverlappingClasses(String),
    #[error("relation is not an equivalence: missing ({0}, {1})")]
    NotEquivalence(String, String),
    #[error("voter {voter} must have exactly one source channel, found {found}")]
    VoterChannel { voter: String, found: usize },
    #[error("permuting run {0} leaves the universe")]
    EscapesUniverse(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Repr {
    /// Class id per run, plus members per class.
    Partition { class_of: Vec<u32>, members: Vec<Vec<u32>> },
    /// Sorted image of each singleton.
    Table { images: Vec<Vec<u32>> },
}

/// A blur resolved to run indices of a fixed universe.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompiledBlur {
    size: usize,
    repr: Repr,
}

impl CompiledBlur {
    /// Partition blur from a class label per run.
    pub fn from_classes<K: Ord + Clone>(keys: &[K]) -> CompiledBlur {
        let mut ids: BTreeMap<K, u32> = BTreeMap::new();
        for k in keys {
            let next = ids.len() as u32;
            ids.entry(k.clone()).or_insert(next);
        }
        let class_of: Vec<u32> = keys.iter().map(|k| ids[k]).collect();
        let mut members = vec![Vec::new(); ids.len()];
        for (i, &c) in class_of.iter().enumerate() {
            members[c as usize].push(i as u32);
        }
        CompiledBlur { size: keys.len(), repr: Repr::Partition { class_of, members } }
    }

    /// Blur extending `images[a] = f({a})` by union.
    pub fn from_images(images: Vec<BTreeSet<u32>>) -> CompiledBlur {
        CompiledBlur {
            size: images.len(),
            repr: Repr::Table { images: images.into_iter().map(|s| s.into_iter().collect()).collect() },
        }
    }

    pub fn identity(size: usize) -> CompiledBlur {
        CompiledBlur::from_classes(&(0..size).collect::<Vec<_>>())
    }

    pub fn all(size: usize) -> CompiledBlur {
        CompiledBlur::from_classes(&vec![0u8; size])
    }

    pub fn universe_size(&self) -> usize {
        self.size
    }

    pub fn is_partition(&self) -> bool {
        matches!(self.repr, Repr::Partition { .. })
    }

    /// The equivalence classes, when partition-generated by construction.
    pub fn classes(&self) -> Option<&[Vec<u32>]> {
        match &self.repr {
            Repr::Partition { members, .. } => Some(members),
            Repr::Table { .. } => None,
        }
    }

    /// f({a}).
    pub fn image(&self, a: u32) -> &[u32] {
        match &self.repr {
            Repr::Partition { class_of, members } => &members[class_of[a as usize] as usize],
            Repr::Table { images } => &images[a as usize],
        }
    }

    /// f(S) = ⋃_{a∈S} f({a}).
    pub fn apply(&self, s: &BTreeSet<u32>) -> BTreeSet<u32> {
        match &self.repr {
            Repr::Partition { class_of, members } => {
                let classes: BTreeSet<u32> = s.iter().map(|&a| class_of[a as usize]).collect();
                classes.iter().flat_map(|&c| members[c as usize].iter().copied()).collect()
            }
            Repr::Table { images } => s.iter().flat_map(|&a| images[a as usize].iter().copied()).collect(),
        }
    }

    /// Some element of f(S) \ S, if S is not f-blurred.
    pub fn unblurred(&self, s: &BTreeSet<u32>) -> Option<u32> {
        s.iter().flat_map(|&a| self.image(a).iter().copied()).find(|b| !s.contains(b))
    }

    /// Whether f({a}) ∋ b ⇔ f({b}) ∋ a for all a, b: a blur satisfying the
    /// axioms is then generated by the partition a ~ b ⇔ b ∈ f({a}).
    pub fn is_partition_generated(&self) -> bool {
        match &self.repr {
            Repr::Partition { .. } => true,
            Repr::Table { images } => {
                let idem = (0..self.size as u32).all(|a| {
                    let img: BTreeSet<u32> = self.image(a).iter().copied().collect();
                    self.apply(&img) == img
                });
                let incl = (0..self.size as u32).all(|a| self.image(a).contains(&a));
                idem && incl
                    && images
                        .iter()
                        .enumerate()
                        .all(|(a, img)| img.iter().all(|&b| images[b as usize].contains(&(a as u32))))
            }
        }
    }
}

fn parse_run(frame: &Frame, text: &str) -> Result<CanonicalRun, BlurError> {
    CanonicalRun::parse(frame, text).map_err(|e| BlurError::RunParse(text.to_string(), e.to_string()))
}

fn locate(universe: &[CanonicalRun], frame: &Frame, run: &CanonicalRun) -> Result<u32, BlurError> {
    universe
        .binary_search(run)
        .map(|i| i as u32)
        .map_err(|_| BlurError::RunOutsideUniverse(run.display(frame).to_string()))
}

fn channel_set(frame: &Frame, names: &[String]) -> Result<ChanSet, BlurError> {
    frame.chan_set(names).map_err(BlurError::UnknownChannel)
}

/// Resolves `spec` over `universe`, the sorted runs at `source`.
pub fn compile(
    spec: &BlurSpec,
    frame: &Frame,
    source: &ChanSet,
    universe: &[CanonicalRun],
) -> Result<CompiledBlur, BlurError> {
    let n = universe.len();
    match spec {
        BlurSpec::Identity => Ok(CompiledBlur::identity(n)),
        BlurSpec::All => Ok(CompiledBlur::all(n)),
        BlurSpec::Restriction { channels } => {
            let keep = channel_set(frame, channels)?;
            let keys: Vec<CanonicalRun> = universe.iter().map(|r| r.restrict(&keep)).collect();
            Ok(CompiledBlur::from_classes(&keys))
        }
        BlurSpec::Classes { classes } => {
            let mut key: Vec<usize> = (0..n).collect();
            let mut seen = BTreeSet::new();
            for (k, class) in classes.iter().enumerate() {
                for text in class {
                    let i = locate(universe, frame, &parse_run(frame, text)?)?;
                    if !seen.insert(i) {
                        return Err(BlurError::OverlappingClasses(text.clone()));
                    }
                    key[i as usize] = n + k;
                }
            }
            Ok(CompiledBlur::from_classes(&key))
        }
        BlurSpec::Relation { pairs } => {
            let mut rel: BTreeSet<(u32, u32)> = (0..n as u32).map(|i| (i, i)).collect();
            for (a, b) in pairs {
                let a = locate(universe, frame, &parse_run(frame, a)?)?;
                let b = locate(universe, frame, &parse_run(frame, b)?)?;
                rel.insert((a, b));
            }
            let name = |i: u32| universe[i as usize].display(frame).to_string();
            for &(a, b) in &rel {
                if !rel.contains(&(b, a)) {
                    return Err(BlurError::NotEquivalence(name(b), name(a)));
                }
                for &(_, c) in rel.range((b, 0)..=(b, u32::MAX)) {
                    if !rel.contains(&(a, c)) {
                        return Err(BlurError::NotEquivalence(name(a), name(c)));
                    }
                }
            }
            let keys: Vec<u32> = (0..n as u32).map(|a| rel.range((a, 0)..).next().map(|p| p.1).unwrap_or(a)).collect();
            Ok(CompiledBlur::from_classes(&keys))
        }
        BlurSpec::Permutation { voters, fixed, blocks } => permutation_blur(frame, source, universe, voters, fixed, blocks),
        BlurSpec::Selection { channels, values } => {
            let chans = channels.as_ref().map(|c| channel_set(frame, c)).transpose()?;
            let vals: Option<BTreeSet<ValId>> = values
                .as_ref()
                .map(|vs| vs.iter().map(|v| frame.val_id(v).ok_or_else(|| BlurError::UnknownValue(v.clone()))).collect())
                .transpose()?;
            let keys: Vec<CanonicalRun> = universe
                .iter()
                .map(|r| {
                    r.to_event_system()
                        .select(|e| {
                            chans.as_ref().is_none_or(|c| c.contains(&e.chan))
                                && vals.as_ref().is_none_or(|v| v.contains(&e.msg))
                        })
                        .canonicalize()
                        .expect("selections of runs have chained channels")
                })
                .collect();
            Ok(CompiledBlur::from_classes(&keys))
        }
        BlurSpec::Table { entries } => {
            let mut images: Vec<BTreeSet<u32>> = (0..n as u32).map(|i| BTreeSet::from([i])).collect();
            for e in entries {
                let a = locate(universe, frame, &parse_run(frame, &e.run)?)?;
                let mut img = BTreeSet::new();
                for t in &e.image {
                    img.insert(locate(universe, frame, &parse_run(frame, t)?)?);
                }
                images[a as usize] = img;
            }
            Ok(CompiledBlur::from_images(images))
        }
    }
}

fn permutation_blur(
    frame: &Frame,
    source: &ChanSet,
    universe: &[CanonicalRun],
    voters: &[String],
    fixed: &[String],
    blocks: &[Vec<String>],
) -> Result<CompiledBlur, BlurError> {
    let mut chan_of: BTreeMap<&str, ChanId> = BTreeMap::new();
    for v in voters {
        let l = frame.loc_id(v).ok_or_else(|| BlurError::UnknownLocation(v.clone()))?;
        let mine: Vec<ChanId> = frame.chans(l).iter().copied().filter(|c| source.contains(c)).collect();
        if mine.len() != 1 {
            return Err(BlurError::VoterChannel { voter: v.clone(), found: mine.len() });
        }
        chan_of.insert(v.as_str(), mine[0]);
    }
    for v in fixed.iter().chain(blocks.iter().flatten()) {
        if !chan_of.contains_key(v.as_str()) {
            return Err(BlurError::UnknownLocation(v.clone()));
        }
    }
    let fixed: BTreeSet<&str> = fixed.iter().map(String::as_str).collect();
    let groups: Vec<Vec<&str>> = if blocks.is_empty() {
        vec![voters.iter().map(String::as_str).collect()]
    } else {
        blocks.iter().map(|b| b.iter().map(String::as_str).collect()).collect()
    };
    let mut swaps: Vec<(ChanId, ChanId)> = Vec::new();
    for g in &groups {
        let free: Vec<&str> = g.iter().copied().filter(|v| !fixed.contains(v)).collect();
        for (i, a) in free.iter().enumerate() {
            for b in &free[i + 1..] {
                swaps.push((chan_of[a], chan_of[b]));
            }
        }
    }
    let mut class: Vec<Option<u32>> = vec![None; universe.len()];
    for start in 0..universe.len() {
        if class[start].is_some() {
            continue;
        }
        class[start] = Some(start as u32);
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            for &(a, b) in &swaps {
                let moved = universe[i].rename_channels(|c| if c == a { b } else if c == b { a } else { c });
                let j = universe
                    .binary_search(&moved)
                    .map_err(|_| BlurError::EscapesUniverse(universe[i].display(frame).to_string()))?;
                if class[j].is_none() {
                    class[j] = Some(start as u32);
                    queue.push_back(j);
                }
            }
        }
    }
    let keys: Vec<u32> = class.into_iter().map(|c| c.expect("every run is classified")).collect();
    Ok(CompiledBlur::from_classes(&keys))
}

/// Outcome of [`validate_blur`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BlurValidation {
    pub inclusion: bool,
    pub idempotence: bool,
    pub union: bool,
    pub partition_generated: bool,
    pub sets_checked: usize,
    /// Descriptions of the first failures, as run-index sets.
    pub failures: Vec<String>,
}

impl BlurValidation {
    pub fn is_blur(&self) -> bool {
        self.inclusion && self.idempotence && self.union
    }
}

/// Checks Inclusion, Idempotence and Union on every singleton, on every subset
/// when the universe has at most 10 runs, and otherwise on `samples` random
/// subsets drawn with `seed`.
pub fn validate_blur(blur: &CompiledBlur, samples: usize, seed: u64) -> BlurValidation {
    let n = blur.universe_size();
    let mut sets: Vec<BTreeSet<u32>> = (0..n as u32).map(|i| BTreeSet::from([i])).collect();
    if n <= 10 {
        sets.extend((0u32..1 << n).map(|m| (0..n as u32).filter(|i| m >> i & 1 == 1).collect()));
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..samples {
            let p: f64 = rng.random_range(0.05..0.5);
            sets.push((0..n as u32).filter(|_| rng.random_bool(p)).collect());
        }
    }
    let mut v = BlurValidation {
        inclusion: true,
        idempotence: true,
        union: true,
        partition_generated: blur.is_partition_generated(),
        sets_checked: sets.len(),
        failures: Vec::new(),
    };
    let fs: Vec<BTreeSet<u32>> = sets.iter().map(|s| blur.apply(s)).collect();
    for (s, f) in sets.iter().zip(&fs) {
        if !s.is_subset(f) {
            v.inclusion = false;
            v.failures.push(format!("inclusion fails on {s:?}"));
        }
        if blur.apply(f) != *f {
            v.idempotence = false;
            v.failures.push(format!("idempotence fails on {s:?}"));
        }
    }
    for i in 0..sets.len().min(64) {
        let j = (i * 7 + 3) % sets.len();
        let joined: BTreeSet<u32> = sets[i].union(&sets[j]).copied().collect();
        let expect: BTreeSet<u32> = fs[i].union(&fs[j]).copied().collect();
        if blur.apply(&joined) != expect {
            v.union = false;
            v.failures.push(format!("union fails on {:?} and {:?}", sets[i], sets[j]));
        }
    }
    v.failures.truncate(8);
    v
}

/// Outcome of an f-limited flow check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowVerdict {
    pub holds: bool,
    /// An observed run whose compatible set is not blurred, and a run in the
    /// blur of that set but outside it.
    pub counterexample: Option<(CanonicalRun, CanonicalRun)>,
    pub observed_runs: usize,
}

/// Whether every cmpt_{observed→source}(Bo) is f-blurred. `blur` must be
/// compiled over the runs of `source` in `u`.
pub fn f_limits_flow(u: &Universe, source: &ChanSet, observed: &ChanSet, blur: &CompiledBlur) -> FlowVerdict {
    let src = u.runs(source);
    let obs = u.runs(observed);
    assert_eq!(blur.universe_size(), src.len(), "blur compiled over a different universe");
    let by_obs = u.compat_map(observed, source);
    for (o, s) in &by_obs {
        if let Some(x) = blur.unblurred(s) {
            return FlowVerdict {
                holds: false,
                counterexample: Some((obs.runs[*o as usize].clone(), src.runs[x as usize].clone())),
                observed_runs: obs.len(),
            };
        }
    }
    FlowVerdict { holds: true, counterexample: None, observed_runs: obs.len() }
}

/// Compiles `spec` over `u`'s runs at `source`.
pub fn compile_in(u: &Universe, spec: &BlurSpec, source: &ChanSet) -> Result<CompiledBlur, BlurError> {
    compile(spec, u.frame(), source, &u.runs(source).runs)
}

/// Antecedent and consequent of the cut-blur principle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CutBlurVerdict {
    pub antecedent: FlowVerdict,
    pub consequent: FlowVerdict,
}

impl CutBlurVerdict {
    pub fn implication_holds(&self) -> bool {
        !self.antecedent.holds || self.consequent.holds
    }
}

/// f-limited flow source→cut, and source→sink; `t` must be a cut.
pub fn verify_cut_blur(u: &Universe, t: &ChannelSetTriple, blur: &CompiledBlur) -> Result<CutBlurVerdict, CutError> {
    let check = is_cut(u.frame(), t)?;
    if !check.holds {
        let w = check.witness.expect("failed cut checks carry a witness");
        return Err(CutError::NotACut(w.locations));
    }
    Ok(CutBlurVerdict {
        antecedent: f_limits_flow(u, &t.source, &t.cut, blur),
        consequent: f_limits_flow(u, &t.source, &t.sink, blur),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(images: &[&[u32]]) -> CompiledBlur {
        CompiledBlur::from_images(images.iter().map(|i| i.iter().copied().collect()).collect())
    }

    #[test]
    fn identity_and_all() {
        let id = CompiledBlur::identity(4);
        let s = BTreeSet::from([1, 3]);
        assert_eq!(id.apply(&s), s);
        assert_eq!(CompiledBlur::all(4).apply(&s), (0..4).collect());
        assert!(CompiledBlur::all(4).apply(&BTreeSet::new()).is_empty());
    }

    #[test]
    fn asymmetric_table_is_a_blur_but_not_a_partition() {
        let f = table(&[&[0], &[0, 1]]);
        let v = validate_blur(&f, 0, 1);
        assert!(v.is_blur());
        assert!(!v.partition_generated);
    }

    #[test]
    fn inclusion_failure_detected() {
        let f = table(&[&[1], &[1]]);
        let v = validate_blur(&f, 0, 1);
        assert!(!v.inclusion);
    }

    #[test]
    fn idempotence_failure_detected() {
        let f = table(&[&[0, 1], &[1, 2], &[2]]);
        let v = validate_blur(&f, 0, 1);
        assert!(v.inclusion);
        assert!(!v.idempotence);
    }

    #[test]
    fn symmetric_table_is_partition_generated() {
        let f = table(&[&[0, 1], &[0, 1], &[2]]);
        assert!(f.is_partition_generated());
    }

    #[test]
    fn unblurred_witness() {
        let f = CompiledBlur::from_classes(&[0, 0, 1]);
        assert_eq!(f.unblurred(&BTreeSet::from([0])), Some(1));
        assert_eq!(f.unblurred(&BTreeSet::from([0, 1])), None);
    }
}
