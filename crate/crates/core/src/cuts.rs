//! Undirected channel cuts in the frame graph: checking and minimum-cut search.

use std::collections::{BTreeSet, VecDeque};

use petgraph::algo::ford_fulkerson;
use petgraph::dot::{Config, Dot};
use petgraph::graph::{DiGraph, NodeIndex};
use serde::Serialize;
use thiserror::Error;

use crate::frame::{frame_graph, ChanId, ChanSet, Frame, LocId};

/// Source, cut and sink channel sets.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ChannelSetTriple {
    pub source: ChanSet,
    pub cut: ChanSet,
    pub sink: ChanSet,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum CutError {
    #[error("channel index {0} is not in the frame")]
    UnknownChannel(u32),
    #[error("channel sets overlap on {0:?}")]
    NotDisjoint(Vec<String>),
    #[error("not a cut: path through {0:?} avoids it")]
    NotACut(Vec<String>),
}

/// An undirected path avoiding the cut: `locations[k]` and `locations[k+1]`
/// are joined by `channels[k]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CutWitness {
    pub locations: Vec<String>,
    pub channels: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CutCheck {
    pub holds: bool,
    pub witness: Option<CutWitness>,
}

fn check_known(frame: &Frame, sets: &[&ChanSet]) -> Result<(), CutError> {
    for s in sets {
        if let Some(c) = s.iter().find(|c| c.index() >= frame.num_channels()) {
            return Err(CutError::UnknownChannel(c.0));
        }
    }
    Ok(())
}

fn check_disjoint(frame: &Frame, sets: &[&ChanSet]) -> Result<(), CutError> {
    let mut shared = BTreeSet::new();
    for (i, a) in sets.iter().enumerate() {
        for b in &sets[i + 1..] {
            shared.extend(a.intersection(b).copied());
        }
    }
    if shared.is_empty() {
        Ok(())
    } else {
        Err(CutError::NotDisjoint(frame.chan_names(&shared)))
    }
}

/// Checks that every undirected path from an endpoint location of `sink` to an
/// endpoint location of `source` uses a channel of `cut`.
pub fn is_cut(frame: &Frame, t: &ChannelSetTriple) -> Result<CutCheck, CutError> {
    let sets = [&t.source, &t.cut, &t.sink];
    check_known(frame, &sets)?;
    check_disjoint(frame, &sets)?;
    let targets = frame.endpoint_locations(&t.source);
    let n = frame.num_locations();
    let mut prev: Vec<Option<(LocId, ChanId)>> = vec![None; n];
    let mut seen = vec![false; n];
    let mut queue = VecDeque::new();
    for l in frame.endpoint_locations(&t.sink) {
        seen[l.index()] = true;
        queue.push_back(l);
    }
    while let Some(l) = queue.pop_front() {
        if targets.contains(&l) {
            let mut locs = vec![l];
            let mut chans = Vec::new();
            let mut cur = l;
            while let Some((p, c)) = prev[cur.index()] {
                locs.push(p);
                chans.push(c);
                cur = p;
            }
            locs.reverse();
            chans.reverse();
            return Ok(CutCheck {
                holds: false,
                witness: Some(CutWitness {
                    locations: locs.iter().map(|&l| frame.location(l).name.clone()).collect(),
                    channels: chans.iter().map(|&c| frame.channel(c).name.clone()).collect(),
                }),
            });
        }
        for &c in frame.chans(l) {
            if t.cut.contains(&c) {
                continue;
            }
            let ch = frame.channel(c);
            let other = if ch.sender == l { ch.recipient } else { ch.sender };
            if !seen[other.index()] {
                seen[other.index()] = true;
                prev[other.index()] = Some((l, c));
                queue.push_back(other);
            }
        }
    }
    Ok(CutCheck { holds: true, witness: None })
}

/// Result of [`find_min_cut`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MinCut {
    Found(ChanSet),
    /// No channel set separates the two sides (they share a location, or are
    /// joined by source and sink channels alone).
    Impossible,
}

/// A minimum-cardinality cut between `source` and `sink`, never using their
/// own channels. Unit-capacity max-flow over the location multigraph.
pub fn find_min_cut(frame: &Frame, source: &ChanSet, sink: &ChanSet) -> Result<MinCut, CutError> {
    check_known(frame, &[source, sink])?;
    check_disjoint(frame, &[source, sink])?;
    let src_locs = frame.endpoint_locations(source);
    let snk_locs = frame.endpoint_locations(sink);
    if src_locs.intersection(&snk_locs).next().is_some() {
        return Ok(MinCut::Impossible);
    }
    let n = frame.num_locations();
    let fixed = source | sink;
    let big = (frame.num_channels() + 1) as u32;
    let inf = big * 4;
    let mut g: DiGraph<(), u32> = DiGraph::new();
    let nodes: Vec<NodeIndex> = (0..n).map(|_| g.add_node(())).collect();
    let s = g.add_node(());
    let t = g.add_node(());
    let mut chan_arcs = Vec::new();
    for c in frame.chan_ids() {
        let ch = frame.channel(c);
        if ch.is_self_loop() {
            continue;
        }
        let cap = if fixed.contains(&c) { big } else { 1 };
        let (a, b) = (nodes[ch.sender.index()], nodes[ch.recipient.index()]);
        chan_arcs.push((c, g.add_edge(a, b, cap), g.add_edge(b, a, cap)));
    }
    for &l in &src_locs {
        g.add_edge(s, nodes[l.index()], inf);
    }
    for &l in &snk_locs {
        g.add_edge(nodes[l.index()], t, inf);
    }
    let (flow, flows) = ford_fulkerson(&g, s, t);
    if flow >= big {
        return Ok(MinCut::Impossible);
    }
    let residual = |e: petgraph::graph::EdgeIndex| g[e] - flows[e.index()];
    let mut reach = vec![false; g.node_count()];
    reach[s.index()] = true;
    let mut queue = VecDeque::from([s]);
    while let Some(u) = queue.pop_front() {
        for e in g.edge_indices() {
            let (a, b) = g.edge_endpoints(e).expect("edge exists");
            let step = if a == u && residual(e) > 0 {
                Some(b)
            } else if b == u && flows[e.index()] > 0 {
                Some(a)
            } else {
                None
            };
            if let Some(v) = step {
                if !reach[v.index()] {
                    reach[v.index()] = true;
                    queue.push_back(v);
                }
            }
        }
    }
    let mut cut = ChanSet::new();
    for (c, fwd, _) in chan_arcs {
        let (a, b) = g.edge_endpoints(fwd).expect("edge exists");
        if reach[a.index()] != reach[b.index()] {
            cut.insert(c);
        }
    }
    Ok(MinCut::Found(cut))
}

/// Graphviz rendering of gr(F).
pub fn to_dot(frame: &Frame) -> String {
    let g = frame_graph(frame);
    let body = format!("{}", Dot::with_config(&g, &[Config::GraphContentOnly]));
    format!("digraph frame {{\n{body}}}\n")
}
