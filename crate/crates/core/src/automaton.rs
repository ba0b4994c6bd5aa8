//! Deterministic automata over labels, compiled from either trace form.
//!
//! Every state is accepting: the languages are prefix-closed trace sets.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use crate::frame::Label;

#[derive(Clone, Debug, Default)]
pub struct Dfa {
    trans: Vec<BTreeMap<Label, u32>>,
}

impl Dfa {
    /// Builds the trie of a finite trace set. State 0 is the empty trace.
    pub fn from_traces<'a, I>(traces: I) -> Dfa
    where
        I: IntoIterator<Item = &'a Vec<Label>>,
    {
        let mut trans = vec![BTreeMap::new()];
        for trace in traces {
            let mut s = 0usize;
            for &l in trace {
                let next = match trans[s].get(&l) {
                    Some(&n) => n as usize,
                    None => {
                        let n = trans.len();
                        trans.push(BTreeMap::new());
                        trans[s].insert(l, n as u32);
                        n
                    }
                };
                s = next;
            }
        }
        Dfa { trans }
    }

    /// Subset construction over the reachable part of a labelled transition system.
    pub fn from_lts(initial: u32, transitions: &[(u32, Label, u32)]) -> Dfa {
        let mut succ: HashMap<u32, Vec<(Label, u32)>> = HashMap::new();
        for &(a, l, b) in transitions {
            succ.entry(a).or_default().push((l, b));
        }
        let start = vec![initial];
        let mut ids: HashMap<Vec<u32>, u32> = HashMap::new();
        ids.insert(start.clone(), 0);
        let mut trans = vec![BTreeMap::new()];
        let mut queue = VecDeque::from([start]);
        while let Some(set) = queue.pop_front() {
            let id = ids[&set] as usize;
            let mut moves: BTreeMap<Label, BTreeSet<u32>> = BTreeMap::new();
            for s in &set {
                if let Some(out) = succ.get(s) {
                    for &(l, t) in out {
                        moves.entry(l).or_default().insert(t);
                    }
                }
            }
            for (l, targets) in moves {
                let key: Vec<u32> = targets.into_iter().collect();
                let tid = match ids.get(&key) {
                    Some(&t) => t,
                    None => {
                        let t = trans.len() as u32;
                        ids.insert(key.clone(), t);
                        trans.push(BTreeMap::new());
                        queue.push_back(key);
                        t
                    }
                };
                trans[id].insert(l, tid);
            }
        }
        Dfa { trans }
    }

    pub fn initial(&self) -> u32 {
        0
    }

    pub fn num_states(&self) -> usize {
        self.trans.len()
    }

    pub fn step(&self, s: u32, l: Label) -> Option<u32> {
        self.trans[s as usize].get(&l).copied()
    }

    pub fn enabled(&self, s: u32) -> impl Iterator<Item = (Label, u32)> + '_ {
        self.trans[s as usize].iter().map(|(&l, &t)| (l, t))
    }

    pub fn run(&self, seq: &[Label]) -> Option<u32> {
        seq.iter().try_fold(self.initial(), |s, &l| self.step(s, l))
    }

    pub fn accepts(&self, seq: &[Label]) -> bool {
        self.run(seq).is_some()
    }

    /// All accepted sequences of length at most `max_len`.
    pub fn language(&self, max_len: usize) -> BTreeSet<Vec<Label>> {
        let mut out = BTreeSet::new();
        let mut stack = vec![(self.initial(), Vec::new())];
        while let Some((s, seq)) = stack.pop() {
            if seq.len() < max_len {
                for (l, t) in self.enabled(s) {
                    let mut next = seq.clone();
                    next.push(l);
                    stack.push((t, next));
                }
            }
            out.insert(seq);
        }
        out
    }

    /// Compares the languages of two automata whose labels are related by `map`
    /// (a label of `self` to the corresponding label of `other`).
    /// Returns the shortest trace accepted by exactly one side, expressed in
    /// `self`'s labels when possible.
    pub fn difference<F>(&self, other: &Dfa, map: F) -> Option<Difference>
    where
        F: Fn(Label) -> Option<Label>,
    {
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([(self.initial(), other.initial(), Vec::new())]);
        seen.insert((self.initial(), other.initial()));
        while let Some((a, b, path)) = queue.pop_front() {
            let mut mapped_here = BTreeSet::new();
            for (l, ta) in self.enabled(a) {
                let Some(m) = map(l) else {
                    let mut p = path.clone();
                    p.push(l);
                    return Some(Difference::OnlyLeft(p));
                };
                mapped_here.insert(m);
                match other.step(b, m) {
                    None => {
                        let mut p = path.clone();
                        p.push(l);
                        return Some(Difference::OnlyLeft(p));
                    }
                    Some(tb) => {
                        if seen.insert((ta, tb)) {
                            let mut p = path.clone();
                            p.push(l);
                            queue.push_back((ta, tb, p));
                        }
                    }
                }
            }
            for (m, _) in other.enabled(b) {
                if !mapped_here.contains(&m) {
                    return Some(Difference::OnlyRight { prefix: path, label: m });
                }
            }
        }
        None
    }
}

/// A trace separating two automata.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Difference {
    /// Accepted by the left automaton only.
    OnlyLeft(Vec<Label>),
    /// `prefix` (left labels) extended by `label` (right label) is accepted by the right only.
    OnlyRight { prefix: Vec<Label>, label: Label },
}
