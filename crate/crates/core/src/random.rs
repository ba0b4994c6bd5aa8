//! Seeded generators for small frames, cut triples and machines.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::cuts::ChannelSetTriple;
use crate::frame::{BehaviorSpec, ChanSet, ChannelSpec, Frame, FrameSpec, LocationSpec, LtsSpec};
use crate::purge::MachineSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FrameShape {
    pub max_locations: usize,
    pub max_channels: usize,
    pub max_values: usize,
    pub max_states: usize,
}

impl Default for FrameShape {
    fn default() -> Self {
        FrameShape { max_locations: 4, max_channels: 6, max_values: 2, max_states: 3 }
    }
}

fn lts_for<R: Rng>(rng: &mut R, chans: &[String], values: &[String], max_states: usize) -> BehaviorSpec {
    let n = rng.random_range(1..=max_states.max(1));
    let states: Vec<String> = (0..n).map(|i| format!("q{i}")).collect();
    let mut transitions = Vec::new();
    for s in &states {
        for c in chans {
            for v in values {
                if rng.random_bool(0.4) {
                    let t = states[rng.random_range(0..n)].clone();
                    transitions.push((s.clone(), c.clone(), v.clone(), t));
                }
            }
        }
    }
    if !chans.is_empty() && !transitions.iter().any(|t| t.0 == states[0]) {
        let c = chans[rng.random_range(0..chans.len())].clone();
        let v = values[rng.random_range(0..values.len())].clone();
        let t = states[rng.random_range(0..n)].clone();
        transitions.push((states[0].clone(), c, v, t));
    }
    BehaviorSpec::Lts(LtsSpec { states: states.clone(), initial: states[0].clone(), transitions })
}

fn assemble<R: Rng>(
    rng: &mut R,
    locs: &[String],
    channels: Vec<ChannelSpec>,
    values: Vec<String>,
    max_states: usize,
) -> Frame {
    let locations = locs
        .iter()
        .map(|l| {
            let mine: Vec<String> =
                channels.iter().filter(|c| &c.sender == l || &c.recipient == l).map(|c| c.name.clone()).collect();
            LocationSpec { name: l.clone(), behavior: lts_for(rng, &mine, &values, max_states) }
        })
        .collect();
    Frame::from_spec(&FrameSpec { data: values, locations, channels }).expect("generated frames are well formed")
}

/// A frame with 2..=max locations, 1..=max channels (self-loops allowed) and
/// random LTS behaviors.
pub fn random_frame<R: Rng>(rng: &mut R, shape: FrameShape) -> Frame {
    let nl = rng.random_range(2..=shape.max_locations.max(2));
    let nc = rng.random_range(1..=shape.max_channels.max(1));
    let nv = rng.random_range(1..=shape.max_values.max(1));
    let locs: Vec<String> = (0..nl).map(|i| format!("l{i}")).collect();
    let values: Vec<String> = (0..nv).map(|i| format!("v{i}")).collect();
    let channels = (0..nc)
        .map(|i| ChannelSpec {
            name: format!("c{i}"),
            sender: locs[rng.random_range(0..nl)].clone(),
            recipient: locs[rng.random_range(0..nl)].clone(),
        })
        .collect();
    assemble(rng, &locs, channels, values, shape.max_states)
}

/// A frame made of two components with no channel between them, together
/// with the channels of each component.
pub fn random_disconnected_frame<R: Rng>(rng: &mut R, shape: FrameShape) -> (Frame, ChanSet, ChanSet) {
    let nv = rng.random_range(1..=shape.max_values.max(1));
    let values: Vec<String> = (0..nv).map(|i| format!("v{i}")).collect();
    let sizes = [rng.random_range(1..=2), rng.random_range(1..=2)];
    let mut locs = Vec::new();
    let mut channels = Vec::new();
    let mut sides: [Vec<String>; 2] = Default::default();
    for (side, &n) in sizes.iter().enumerate() {
        let mine: Vec<String> = (0..n).map(|i| format!("p{side}_{i}")).collect();
        for i in 0..rng.random_range(1..=3) {
            let name = format!("c{side}_{i}");
            channels.push(ChannelSpec {
                name: name.clone(),
                sender: mine[rng.random_range(0..n)].clone(),
                recipient: mine[rng.random_range(0..n)].clone(),
            });
            sides[side].push(name);
        }
        locs.extend(mine);
    }
    let frame = assemble(rng, &locs, channels, values, shape.max_states);
    let a = frame.chan_set(&sides[0]).expect("generated channels");
    let b = frame.chan_set(&sides[1]).expect("generated channels");
    (frame, a, b)
}

/// Splits the locations in two and takes the crossing channels as the cut,
/// plus optionally a few more. Source and sink are nonempty sets of channels
/// internal to either side. `None` if the split leaves a side without
/// internal channels.
pub fn random_cut_triple<R: Rng>(rng: &mut R, frame: &Frame) -> Option<ChannelSetTriple> {
    let n = frame.num_locations();
    let mut side: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
    side[0] = true;
    side[n - 1] = false;
    let mut inner = [Vec::new(), Vec::new()];
    let mut cut = ChanSet::new();
    for c in frame.chan_ids() {
        let ch = frame.channel(c);
        let (a, b) = (side[ch.sender.index()], side[ch.recipient.index()]);
        if a != b {
            cut.insert(c);
        } else {
            inner[a as usize].push(c);
        }
    }
    if inner[0].is_empty() || inner[1].is_empty() {
        return None;
    }
    let mut pick = |chans: &mut Vec<_>| -> ChanSet {
        chans.shuffle(rng);
        let k = rng.random_range(1..=chans.len());
        let (taken, rest) = chans.split_at(k);
        let taken: ChanSet = taken.iter().copied().collect();
        let spare: Vec<_> = rest.to_vec();
        *chans = spare;
        taken
    };
    let source = pick(&mut inner[1]);
    let sink = pick(&mut inner[0]);
    for rest in &inner {
        for &c in rest {
            if rng.random_bool(0.25) {
                cut.insert(c);
            }
        }
    }
    Some(ChannelSetTriple { source, cut, sink })
}

/// A random class label for each of `n` runs, at most `k` classes.
pub fn random_partition<R: Rng>(rng: &mut R, n: usize, k: usize) -> Vec<u32> {
    (0..n).map(|_| rng.random_range(0..k.max(1) as u32)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MachineShape {
    pub max_domains: usize,
    pub max_states: usize,
    pub max_actions: usize,
    pub max_outputs: usize,
    /// Close the influence relation under composition.
    pub transitive: bool,
}

impl Default for MachineShape {
    fn default() -> Self {
        MachineShape { max_domains: 3, max_states: 3, max_actions: 3, max_outputs: 2, transitive: false }
    }
}

/// A random machine; every state has at least one transition.
pub fn random_machine<R: Rng>(rng: &mut R, shape: MachineShape) -> MachineSpec {
    let k = rng.random_range(1..=shape.max_domains.max(1));
    let ns = rng.random_range(1..=shape.max_states.max(1));
    let na = rng.random_range(1..=shape.max_actions.max(1));
    let no = rng.random_range(1..=shape.max_outputs.max(1));
    let domains: Vec<String> = (0..k).map(|i| format!("d{i}")).collect();
    let states: Vec<String> = (0..ns).map(|i| format!("s{i}")).collect();
    let outputs: Vec<String> = (0..no).map(|i| format!("o{i}")).collect();
    let actions: Vec<(String, String)> =
        (0..na).map(|i| (format!("a{i}"), domains[rng.random_range(0..k)].clone())).collect();
    let mut flows = vec![vec![false; k]; k];
    for (a, row) in flows.iter_mut().enumerate() {
        for (b, cell) in row.iter_mut().enumerate() {
            *cell = a == b || rng.random_bool(0.4);
        }
    }
    if shape.transitive {
        for m in 0..k {
            for a in 0..k {
                for b in 0..k {
                    if flows[a][m] && flows[m][b] {
                        flows[a][b] = true;
                    }
                }
            }
        }
    }
    let influence = (0..k)
        .flat_map(|a| (0..k).map(move |b| (a, b)))
        .filter(|&(a, b)| flows[a][b])
        .map(|(a, b)| (domains[a].clone(), domains[b].clone()))
        .collect();
    let mut transitions = Vec::new();
    for s in &states {
        for (a, _) in &actions {
            for t in &states {
                if rng.random_bool(0.35) {
                    transitions.push((s.clone(), a.clone(), t.clone()));
                }
            }
        }
        if !transitions.iter().any(|(x, _, _)| x == s) {
            let (a, _) = &actions[rng.random_range(0..na)];
            transitions.push((s.clone(), a.clone(), states[rng.random_range(0..ns)].clone()));
        }
    }
    let obs = states
        .iter()
        .flat_map(|s| domains.iter().map(move |d| (s.clone(), d.clone())))
        .map(|(s, d)| (s, d, outputs[rng.random_range(0..no)].clone()))
        .collect();
    MachineSpec { domains, influence, actions, outputs, initial: states[0].clone(), states, transitions, obs }
}
