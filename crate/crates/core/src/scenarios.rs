//! Builders for the two running examples: a precinct voting system and a
//! two-router firewall, each with its named channel sets and blurs.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

use crate::blur::BlurSpec;
use crate::disclosure::merge_across_cut;
use crate::enumerate::Universe;
use crate::events::CanonicalRun;
use crate::frame::{BehaviorSpec, ChanId, ChanSet, ChannelSpec, Frame, FrameSpec, LocationSpec, LtsSpec};

/// A frame together with the channel sets and blurs its analyses refer to.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub frame: Frame,
    pub sets: BTreeMap<String, Vec<String>>,
    pub blurs: BTreeMap<String, BlurSpec>,
}

impl Scenario {
    pub fn set(&self, name: &str) -> ChanSet {
        self.frame.chan_set(&self.sets[name]).expect("scenario sets name frame channels")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error("invalid parameters: {0}")]
    Params(String),
}

/// Accumulates an LTS by state name.
#[derive(Default)]
struct LtsBuilder {
    states: Vec<String>,
    seen: BTreeSet<String>,
    transitions: Vec<(String, String, String, String)>,
}

impl LtsBuilder {
    fn state(&mut self, s: &str) {
        if self.seen.insert(s.to_string()) {
            self.states.push(s.to_string());
        }
    }

    fn add(&mut self, from: &str, chan: &str, value: &str, to: &str) {
        self.state(from);
        self.state(to);
        self.transitions.push((from.into(), chan.into(), value.into(), to.into()));
    }

    fn build(mut self, initial: &str) -> BehaviorSpec {
        self.state(initial);
        BehaviorSpec::Lts(LtsSpec { states: self.states, initial: initial.into(), transitions: self.transitions })
    }
}

fn channel(name: &str, sender: &str, recipient: &str) -> ChannelSpec {
    ChannelSpec { name: name.into(), sender: sender.into(), recipient: recipient.into() }
}

// ---------------------------------------------------------------- voting

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VotingParams {
    /// Number of voters in each precinct.
    pub precincts: Vec<usize>,
    pub candidates: usize,
    /// Voters whose votes a restricted permutation blur keeps in place.
    pub commissioners: Vec<String>,
}

impl Default for VotingParams {
    fn default() -> Self {
        VotingParams { precincts: vec![2], candidates: 2, commissioners: Vec::new() }
    }
}

pub fn voter_name(precinct: usize, i: usize) -> String {
    format!("v{precinct}_{i}")
}

pub fn ballot_channel(precinct: usize, i: usize) -> String {
    format!("b{precinct}_{i}")
}

fn tally_token(counts: &[usize]) -> String {
    let parts: Vec<String> = counts.iter().map(|c| c.to_string()).collect();
    format!("t_{}", parts.join("_"))
}

fn result_token(counts: &[usize]) -> String {
    let parts: Vec<String> = counts.iter().map(|c| c.to_string()).collect();
    format!("r_{}", parts.join("_"))
}

/// Count vectors over `m` candidates summing to `n`.
fn compositions(n: usize, m: usize) -> Vec<Vec<usize>> {
    if m == 1 {
        return vec![vec![n]];
    }
    (0..=n)
        .rev()
        .flat_map(|k| {
            compositions(n - k, m - 1).into_iter().map(move |mut rest| {
                rest.insert(0, k);
                rest
            })
        })
        .collect()
}

/// Voters send one vote each to their precinct's ballot box `BB<p>`, which
/// emits the tally on `c<p>` once every voter has voted. `EC` waits for all
/// tallies and publishes the summed result on `p` to `Pub`.
pub fn build_voting(params: &VotingParams) -> Result<Scenario, ScenarioError> {
    let m = params.candidates;
    if params.precincts.is_empty() || params.precincts.contains(&0) || m == 0 {
        return Err(ScenarioError::Params("need at least one precinct, voter and candidate".into()));
    }
    let votes: Vec<String> = (0..m).map(|k| format!("v{k}")).collect();
    let total: usize = params.precincts.iter().sum();
    if params.precincts.len() > 8 || params.precincts.iter().any(|&k| k > 6) {
        return Err(ScenarioError::Params("at most 8 precincts of at most 6 voters".into()));
    }
    let mut data: Vec<String> = votes.clone();
    let mut tallies = BTreeSet::new();
    for &k in &params.precincts {
        for c in compositions(k, m) {
            tallies.insert(c);
        }
    }
    data.extend(tallies.iter().map(|c| tally_token(c)));
    data.extend(compositions(total, m).iter().map(|c| result_token(c)));

    let mut locations = Vec::new();
    let mut channels = Vec::new();
    let mut sets: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut all_voters = Vec::new();
    let mut blocks = Vec::new();
    for (pi, &k) in params.precincts.iter().enumerate() {
        let p = pi + 1;
        let bb = format!("BB{p}");
        let mut block = Vec::new();
        for i in 1..=k {
            let v = voter_name(p, i);
            let ch = ballot_channel(p, i);
            let mut lts = LtsBuilder::default();
            for val in &votes {
                lts.add("ready", &ch, val, "done");
            }
            locations.push(LocationSpec { name: v.clone(), behavior: lts.build("ready") });
            channels.push(channel(&ch, &v, &bb));
            sets.entry(format!("voters{p}")).or_default().push(ch.clone());
            sets.entry("voters".into()).or_default().push(ch);
            block.push(v.clone());
            all_voters.push(v);
        }
        blocks.push(block);
        // Ballot box state: which voters have voted, and the running counts.
        let mut lts = LtsBuilder::default();
        let name = |mask: u32, counts: &[usize]| {
            let c: Vec<String> = counts.iter().map(|x| x.to_string()).collect();
            format!("m{mask}_{}", c.join("_"))
        };
        let mut queue = VecDeque::from([(0u32, vec![0usize; m])]);
        let mut seen = BTreeSet::new();
        while let Some((mask, counts)) = queue.pop_front() {
            if !seen.insert((mask, counts.clone())) {
                continue;
            }
            let here = name(mask, &counts);
            if mask.count_ones() as usize == k {
                lts.add(&here, &format!("c{p}"), &tally_token(&counts), "sent");
                continue;
            }
            for i in 0..k {
                if mask >> i & 1 == 0 {
                    for (vi, val) in votes.iter().enumerate() {
                        let mut next = counts.clone();
                        next[vi] += 1;
                        let nmask = mask | 1 << i;
                        lts.add(&here, &ballot_channel(p, i + 1), val, &name(nmask, &next));
                        queue.push_back((nmask, next));
                    }
                }
            }
        }
        locations.push(LocationSpec { name: bb.clone(), behavior: lts.build(&name(0, &vec![0; m])) });
        channels.push(channel(&format!("c{p}"), &bb, "EC"));
        sets.insert(format!("c{p}"), vec![format!("c{p}")]);
    }
    // Election commission: precincts received so far and the summed counts.
    let n = params.precincts.len();
    let mut lts = LtsBuilder::default();
    let name = |mask: u32, counts: &[usize]| {
        let c: Vec<String> = counts.iter().map(|x| x.to_string()).collect();
        format!("m{mask}_{}", c.join("_"))
    };
    let mut queue = VecDeque::from([(0u32, vec![0usize; m])]);
    let mut seen = BTreeSet::new();
    while let Some((mask, counts)) = queue.pop_front() {
        if !seen.insert((mask, counts.clone())) {
            continue;
        }
        let here = name(mask, &counts);
        if mask.count_ones() as usize == n {
            lts.add(&here, "p", &result_token(&counts), "published");
            continue;
        }
        for (pi, &k) in params.precincts.iter().enumerate() {
            if mask >> pi & 1 == 0 {
                for t in compositions(k, m) {
                    let next: Vec<usize> = counts.iter().zip(&t).map(|(a, b)| a + b).collect();
                    let nmask = mask | 1 << pi;
                    lts.add(&here, &format!("c{}", pi + 1), &tally_token(&t), &name(nmask, &next));
                    queue.push_back((nmask, next));
                }
            }
        }
    }
    locations.push(LocationSpec { name: "EC".into(), behavior: lts.build(&name(0, &vec![0; m])) });
    let mut pub_lts = LtsBuilder::default();
    for c in compositions(total, m) {
        pub_lts.add("idle", "p", &result_token(&c), "seen");
    }
    locations.push(LocationSpec { name: "Pub".into(), behavior: pub_lts.build("idle") });
    channels.push(channel("p", "EC", "Pub"));
    sets.insert("p".into(), vec!["p".into()]);

    let spec = FrameSpec { data, locations, channels };
    let frame = Frame::from_spec(&spec).map_err(|r| ScenarioError::Params(format!("{r}")))?;

    let mut blurs = BTreeMap::new();
    blurs.insert("f0".into(), BlurSpec::Permutation { voters: all_voters.clone(), fixed: vec![], blocks: vec![] });
    blurs.insert("per_precinct".into(), BlurSpec::Permutation { voters: all_voters.clone(), fixed: vec![], blocks });
    for (pi, _) in params.precincts.iter().enumerate() {
        let p = pi + 1;
        let vs: Vec<String> = (1..=params.precincts[pi]).map(|i| voter_name(p, i)).collect();
        blurs.insert(format!("f_precinct{p}"), BlurSpec::Permutation { voters: vs, fixed: vec![], blocks: vec![] });
    }
    for c in &params.commissioners {
        if !all_voters.contains(c) {
            return Err(ScenarioError::Params(format!("commissioner {c} is not a voter")));
        }
    }
    if !params.commissioners.is_empty() {
        blurs.insert(
            "f1".into(),
            BlurSpec::Permutation { voters: all_voters, fixed: params.commissioners.clone(), blocks: vec![] },
        );
    }
    Ok(Scenario { frame, sets, blurs })
}

/// Outcome of [`check_joint_permutation`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JointPermutationCheck {
    pub holds: bool,
    pub executions_checked: usize,
    pub permutation_pairs: usize,
    pub failure: Option<String>,
}

fn permutations(items: &[ChanId]) -> Vec<Vec<ChanId>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let x = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

/// In a two-precinct voting universe: for every execution and every pair of
/// within-precinct vote permutations, builds (by two merges across `c1` and
/// `c2`) an execution whose voter runs are jointly permuted and whose
/// publication at `p` is unchanged.
pub fn check_joint_permutation(u: &Universe) -> JointPermutationCheck {
    let f = u.frame();
    let set = |names: &[String]| f.chan_set(names).expect("voting channels exist");
    let precinct_chans = |p: usize| -> Vec<ChanId> {
        f.chan_ids().filter(|&c| f.channel(c).name.starts_with(&format!("b{p}_"))).collect()
    };
    let v1 = precinct_chans(1);
    let v2 = precinct_chans(2);
    let c1 = set(&["c1".into()]);
    let c2 = set(&["c2".into()]);
    let p = set(&["p".into()]);
    let all = f.all_channels();
    let v1set: ChanSet = v1.iter().copied().collect();
    let v2set: ChanSet = v2.iter().copied().collect();
    let voters: ChanSet = &v1set | &v2set;
    let perms1 = permutations(&v1);
    let perms2 = permutations(&v2);
    let rename = |run: &CanonicalRun, from: &[ChanId], to: &[ChanId]| {
        run.rename_channels(|c| from.iter().position(|&x| x == c).map(|i| to[i]).unwrap_or(c))
    };
    for e in u.executions() {
        let a = e.canonicalize().expect("executions have chained channels");
        for pi1 in &perms1 {
            for pi2 in &perms2 {
                let step = |run: &CanonicalRun, vs: &ChanSet, vlist: &[ChanId], pi: &[ChanId], cut: &ChanSet| {
                    let local = rename(&run.restrict(&(vs | cut)), vlist, pi);
                    let rest = run.restrict(&all.difference(vs).copied().collect());
                    merge_across_cut(f, f, cut, &local, &rest).map(|m| m.canonicalize().expect("merged runs chain"))
                };
                let result = step(&a, &v1set, &v1, pi1, &c1).and_then(|a1| step(&a1, &v2set, &v2, pi2, &c2));
                let fail = |why: String| JointPermutationCheck {
                    holds: false,
                    executions_checked: u.len(),
                    permutation_pairs: perms1.len() * perms2.len(),
                    failure: Some(format!("{} : {why}", a.display(f))),
                };
                let a2 = match result {
                    Ok(x) => x,
                    Err(err) => return fail(err.to_string()),
                };
                let expect = rename(&rename(&a.restrict(&voters), &v1, pi1), &v2, pi2);
                if a2.restrict(&voters) != expect {
                    return fail("voter runs not jointly permuted".into());
                }
                if a2.restrict(&p) != a.restrict(&p) {
                    return fail("publication changed".into());
                }
            }
        }
    }
    JointPermutationCheck {
        holds: true,
        executions_checked: u.len(),
        permutation_pairs: perms1.len() * perms2.len(),
        failure: None,
    }
}

// -------------------------------------------------------------- firewall

/// Port classes: web (80/443), high (≥1024), other.
pub const PORT_CLASSES: [&str; 3] = ["W", "H", "O"];

/// A datagram reduced to addresses and port classes.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Datagram {
    pub src: String,
    pub dst: String,
    pub sport: String,
    pub dport: String,
}

impl Datagram {
    pub fn new(src: &str, dst: &str, sport: &str, dport: &str) -> Datagram {
        Datagram { src: src.into(), dst: dst.into(), sport: sport.into(), dport: dport.into() }
    }

    pub fn name(&self) -> String {
        format!("{}.{}.{}.{}", self.src, self.dst, self.sport, self.dport)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FirewallParams {
    pub external: Vec<String>,
    pub n1: Vec<String>,
    pub n2: Vec<String>,
    /// The web server; must be an address of `n1`.
    pub www: String,
    /// Datagrams each region may originate; `None` uses the default catalog.
    pub catalogs: Option<[Vec<Datagram>; 3]>,
    /// Datagrams each region may originate in one execution.
    pub budget: usize,
    /// Buffer capacity of routers and interfaces.
    pub capacity: usize,
    /// Inbound interfaces of r1 and outbound interfaces of r2 drop everything.
    pub discard_all: bool,
}

impl Default for FirewallParams {
    fn default() -> Self {
        FirewallParams {
            external: vec!["ext".into()],
            n1: vec!["www".into()],
            n2: vec!["h2".into()],
            www: "www".into(),
            catalogs: None,
            budget: 1,
            capacity: 1,
            discard_all: false,
        }
    }
}

/// Classification of datagrams under the standard filtering policy.
pub struct Policy<'a> {
    params: &'a FirewallParams,
}

impl Policy<'_> {
    fn external(&self, a: &str) -> bool {
        self.params.external.iter().any(|x| x == a)
    }

    fn internal(&self, a: &str) -> bool {
        self.params.n1.iter().chain(&self.params.n2).any(|x| x == a)
    }

    pub fn importable(&self, d: &Datagram) -> bool {
        self.external(&d.src)
            && ((d.dst == self.params.www && d.dport == "W")
                || (self.internal(&d.dst) && d.sport == "W" && d.dport == "H"))
    }

    pub fn exportable(&self, d: &Datagram) -> bool {
        self.external(&d.dst)
            && ((d.src == self.params.www && d.sport == "W")
                || (self.internal(&d.src) && d.dport == "W" && d.sport == "H"))
    }
}

/// Default catalogs: for each region a few representative datagrams of each
/// kind (crossing, blocked, region-local).
fn default_catalogs(p: &FirewallParams) -> [Vec<Datagram>; 3] {
    let ext = &p.external[0];
    let www = &p.www;
    let h2 = &p.n2[0];
    [
        vec![
            Datagram::new(ext, www, "H", "W"),
            Datagram::new(ext, h2, "W", "H"),
            Datagram::new(ext, www, "H", "O"),
            Datagram::new(ext, ext, "H", "H"),
        ],
        vec![
            Datagram::new(www, ext, "W", "H"),
            Datagram::new(www, ext, "O", "O"),
            Datagram::new(www, h2, "H", "H"),
            Datagram::new(www, www, "H", "H"),
        ],
        vec![Datagram::new(h2, ext, "H", "W"), Datagram::new(h2, ext, "H", "O"), Datagram::new(h2, h2, "H", "H")],
    ]
}

type Filter = Box<dyn Fn(&Datagram) -> bool>;

struct Interface {
    name: &'static str,
    input: &'static str,
    output: &'static str,
    filter: Filter,
}

/// The expanded two-router firewall: regions `i`, `n1`, `n2` with self-loops;
/// routers `r1`, `r2`; one location per interface and direction. The cut
/// channels are `c1` (into r1 from below) and `c2` (into r2 from above).
pub fn build_firewall(params: &FirewallParams) -> Result<Scenario, ScenarioError> {
    let p = params;
    if p.external.is_empty() || p.n1.is_empty() || p.n2.is_empty() {
        return Err(ScenarioError::Params("every region needs an address".into()));
    }
    if !p.n1.contains(&p.www) {
        return Err(ScenarioError::Params("www must be an address of n1".into()));
    }
    let mut addrs = BTreeSet::new();
    for a in p.external.iter().chain(&p.n1).chain(&p.n2) {
        if !addrs.insert(a.as_str()) {
            return Err(ScenarioError::Params(format!("address {a} appears twice")));
        }
    }
    if p.capacity == 0 {
        return Err(ScenarioError::Params("buffer capacity must be positive".into()));
    }
    let catalogs = p.catalogs.clone().unwrap_or_else(|| default_catalogs(p));
    let regions: [(&str, &Vec<String>, &str, &str, &str); 3] = [
        ("i", &p.external, "i_loop", "i_A", "B_i"),
        ("n1", &p.n1, "n1_loop", "n1_n1in", "n1out_n1"),
        ("n2", &p.n2, "n2_loop", "n2_n2in", "n2out_n2"),
    ];
    for (k, (region, own, ..)) in regions.iter().enumerate() {
        for d in &catalogs[k] {
            if !own.contains(&d.src) || !addrs.contains(d.dst.as_str()) {
                return Err(ScenarioError::Params(format!("{} cannot originate in {region}", d.name())));
            }
            if !PORT_CLASSES.contains(&d.sport.as_str()) || !PORT_CLASSES.contains(&d.dport.as_str()) {
                return Err(ScenarioError::Params(format!("{} uses an unknown port class", d.name())));
            }
        }
    }
    let ext: BTreeSet<String> = p.external.iter().cloned().collect();
    let n1: BTreeSet<String> = p.n1.iter().cloned().collect();
    let n2: BTreeSet<String> = p.n2.iter().cloned().collect();
    let internal: BTreeSet<String> = n1.union(&n2).cloned().collect();
    let www = p.www.clone();
    let drop = p.discard_all;
    let pass_all = |dropping: bool| -> Filter { if dropping { Box::new(|_| false) } else { Box::new(|_| true) } };
    let (e1, i1) = (ext.clone(), internal.clone());
    let if_a: Filter = if drop { Box::new(|_| false) } else { Box::new(move |d| e1.contains(&d.src) && i1.contains(&d.dst)) };
    let w1 = www.clone();
    let if_d: Filter = Box::new(move |d| (d.dst == w1 && d.dport == "W") || (d.sport == "W" && d.dport == "H"));
    let w2 = www.clone();
    let if_f: Filter = if drop {
        Box::new(|_| false)
    } else {
        Box::new(move |d| (d.src == w2 && d.sport == "W") || (d.sport == "H" && d.dport == "W"))
    };
    let (e2, i2) = (ext.clone(), internal.clone());
    let (e3, i3) = (ext.clone(), internal.clone());
    let interfaces = vec![
        Interface { name: "ifA", input: "i_A", output: "A_r1", filter: if_a },
        Interface { name: "ifB", input: "r1_B", output: "B_i", filter: pass_all(false) },
        Interface { name: "ifC", input: "r1_C", output: "C_D", filter: pass_all(false) },
        Interface { name: "ifD", input: "C_D", output: "c2", filter: if_d },
        Interface { name: "ifE", input: "r2_E", output: "E_F", filter: pass_all(drop) },
        Interface { name: "ifF", input: "E_F", output: "c1", filter: if_f },
        Interface {
            name: "n1in",
            input: "n1_n1in",
            output: "n1in_r2",
            filter: Box::new(move |d| i2.contains(&d.src) && e2.contains(&d.dst)),
        },
        Interface { name: "n1out", input: "r2_n1out", output: "n1out_n1", filter: pass_all(drop) },
        Interface {
            name: "n2in",
            input: "n2_n2in",
            output: "n2in_r2",
            filter: Box::new(move |d| i3.contains(&d.src) && e3.contains(&d.dst)),
        },
        Interface { name: "n2out", input: "r2_n2out", output: "n2out_n2", filter: pass_all(drop) },
    ];
    let (ext_r1, n1_r2, n2_r2) = (ext.clone(), n1.clone(), n2.clone());
    let route_r1 = move |d: &Datagram| if ext_r1.contains(&d.dst) { "r1_B" } else { "r1_C" };
    let route_r2 = move |d: &Datagram| {
        if n1_r2.contains(&d.dst) {
            "r2_n1out"
        } else if n2_r2.contains(&d.dst) {
            "r2_n2out"
        } else {
            "r2_E"
        }
    };
    type Route<'a> = &'a dyn Fn(&Datagram) -> &'static str;
    let routers: [(&str, [&str; 3], Route); 2] =
        [("r1", ["A_r1", "c1", ""], &route_r1), ("r2", ["c2", "n1in_r2", "n2in_r2"], &route_r2)];

    // Datagrams that may traverse each channel.
    let mut flows: BTreeMap<&str, BTreeSet<Datagram>> = BTreeMap::new();
    for (k, (_, own, lp, out, _)) in regions.iter().enumerate() {
        for d in &catalogs[k] {
            let ch = if own.contains(&d.dst) { *lp } else { *out };
            flows.entry(ch).or_default().insert(d.clone());
        }
    }
    loop {
        let mut changed = false;
        for itf in &interfaces {
            let incoming: Vec<Datagram> = flows.get(itf.input).into_iter().flatten().cloned().collect();
            for d in incoming {
                if (itf.filter)(&d) {
                    changed |= flows.entry(itf.output).or_default().insert(d);
                }
            }
        }
        for (_, ins, route) in &routers {
            for input in ins.iter().filter(|s| !s.is_empty()) {
                let incoming: Vec<Datagram> = flows.get(input).into_iter().flatten().cloned().collect();
                for d in incoming {
                    changed |= flows.entry(route(&d)).or_default().insert(d);
                }
            }
        }
        if !changed {
            break;
        }
    }
    let carried = |ch: &str| -> Vec<Datagram> { flows.get(ch).into_iter().flatten().cloned().collect() };

    let mut data: BTreeSet<String> = BTreeSet::new();
    for set in flows.values() {
        data.extend(set.iter().map(Datagram::name));
    }
    let mut locations = Vec::new();
    let mut channels = vec![
        channel("i_loop", "i", "i"),
        channel("i_A", "i", "ifA"),
        channel("A_r1", "ifA", "r1"),
        channel("r1_B", "r1", "ifB"),
        channel("B_i", "ifB", "i"),
        channel("r1_C", "r1", "ifC"),
        channel("C_D", "ifC", "ifD"),
        channel("c2", "ifD", "r2"),
        channel("r2_E", "r2", "ifE"),
        channel("E_F", "ifE", "ifF"),
        channel("c1", "ifF", "r1"),
        channel("r2_n1out", "r2", "n1out"),
        channel("n1out_n1", "n1out", "n1"),
        channel("n1_n1in", "n1", "n1in"),
        channel("n1in_r2", "n1in", "r2"),
        channel("n1_loop", "n1", "n1"),
        channel("r2_n2out", "r2", "n2out"),
        channel("n2out_n2", "n2out", "n2"),
        channel("n2_n2in", "n2", "n2in"),
        channel("n2in_r2", "n2in", "r2"),
        channel("n2_loop", "n2", "n2"),
    ];
    channels.sort_by(|a, b| a.name.cmp(&b.name));

    for (k, (region, own, lp, out, inc)) in regions.iter().enumerate() {
        let mut lts = LtsBuilder::default();
        for g in 0..=p.budget {
            let here = format!("g{g}");
            lts.state(&here);
            if g < p.budget {
                for d in &catalogs[k] {
                    let ch = if own.contains(&d.dst) { *lp } else { *out };
                    lts.add(&here, ch, &d.name(), &format!("g{}", g + 1));
                }
            }
            for d in carried(inc) {
                lts.add(&here, inc, &d.name(), &here);
            }
        }
        locations.push(LocationSpec { name: region.to_string(), behavior: lts.build("g0") });
    }
    let buffer_name = |buf: &[Datagram]| {
        if buf.is_empty() {
            "empty".to_string()
        } else {
            buf.iter().map(Datagram::name).collect::<Vec<_>>().join("+")
        }
    };
    for (name, ins, route) in &routers {
        let inputs: Vec<(&str, Vec<Datagram>)> =
            ins.iter().filter(|s| !s.is_empty()).map(|s| (*s, carried(s))).collect();
        let mut lts = LtsBuilder::default();
        let mut queue = VecDeque::from([Vec::<Datagram>::new()]);
        let mut seen = BTreeSet::new();
        while let Some(buf) = queue.pop_front() {
            if !seen.insert(buf.clone()) {
                continue;
            }
            let here = buffer_name(&buf);
            lts.state(&here);
            if buf.len() < p.capacity {
                for (input, ds) in &inputs {
                    for d in ds {
                        let mut next = buf.clone();
                        next.push(d.clone());
                        next.sort();
                        lts.add(&here, input, &d.name(), &buffer_name(&next));
                        queue.push_back(next);
                    }
                }
            }
            for (k, d) in buf.iter().enumerate() {
                if k > 0 && buf[k - 1] == *d {
                    continue;
                }
                let mut next = buf.clone();
                next.remove(k);
                lts.add(&here, route(d), &d.name(), &buffer_name(&next));
                queue.push_back(next);
            }
        }
        locations.push(LocationSpec { name: name.to_string(), behavior: lts.build("empty") });
    }
    for itf in &interfaces {
        let incoming = carried(itf.input);
        let mut lts = LtsBuilder::default();
        let mut queue = VecDeque::from([Vec::<Datagram>::new()]);
        let mut seen = BTreeSet::new();
        while let Some(buf) = queue.pop_front() {
            if !seen.insert(buf.clone()) {
                continue;
            }
            let here = buffer_name(&buf);
            lts.state(&here);
            for d in incoming.iter().filter(|_| buf.len() < p.capacity) {
                if !(itf.filter)(d) {
                    lts.add(&here, itf.input, &d.name(), &here);
                } else {
                    let mut next = buf.clone();
                    next.push(d.clone());
                    next.sort();
                    lts.add(&here, itf.input, &d.name(), &buffer_name(&next));
                    queue.push_back(next);
                }
            }
            for (k, d) in buf.iter().enumerate() {
                if k > 0 && buf[k - 1] == *d {
                    continue;
                }
                let mut next = buf.clone();
                next.remove(k);
                lts.add(&here, itf.output, &d.name(), &buffer_name(&next));
                queue.push_back(next);
            }
        }
        locations.push(LocationSpec { name: itf.name.to_string(), behavior: lts.build("empty") });
    }
    let spec = FrameSpec { data: data.into_iter().collect(), locations, channels };
    let frame = Frame::from_spec(&spec).map_err(|r| ScenarioError::Params(format!("{r}")))?;

    let mut sets = BTreeMap::new();
    let names = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    sets.insert("chans_i".to_string(), names(&["B_i", "i_A", "i_loop"]));
    sets.insert(
        "chans_n".to_string(),
        names(&["n1_loop", "n1_n1in", "n1out_n1", "n2_loop", "n2_n2in", "n2out_n2"]),
    );
    sets.insert("cut".to_string(), names(&["c1", "c2"]));
    sets.insert("c1".to_string(), names(&["c1"]));

    let policy = Policy { params: p };
    let all: Vec<Datagram> = flows.values().flatten().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let pick = |keep: &dyn Fn(&Datagram) -> bool| -> Vec<String> {
        all.iter().filter(|d| keep(d)).map(Datagram::name).collect()
    };
    let imp = pick(&|d| policy.importable(d));
    let exp = pick(&|d| policy.exportable(d));
    let crossing = pick(&|d| policy.importable(d) || policy.exportable(d));
    let mut blurs = BTreeMap::new();
    blurs.insert("f_i".into(), BlurSpec::Selection { channels: None, values: Some(crossing.clone()) });
    blurs.insert("f_e".into(), BlurSpec::Selection { channels: None, values: Some(crossing) });
    blurs.insert("f_i_literal".into(), BlurSpec::Selection { channels: None, values: Some(imp) });
    blurs.insert("f_e_literal".into(), BlurSpec::Selection { channels: None, values: Some(exp) });
    Ok(Scenario { frame, sets, blurs })
}

/// Importable and exportable datagrams of the default firewall, by name.
pub fn firewall_classes(params: &FirewallParams) -> (Vec<String>, Vec<String>) {
    let policy = Policy { params };
    let cats = params.catalogs.clone().unwrap_or_else(|| default_catalogs(params));
    let all: BTreeSet<&Datagram> = cats.iter().flatten().collect();
    (
        all.iter().filter(|d| policy.importable(d)).map(|d| d.name()).collect(),
        all.iter().filter(|d| policy.exportable(d)).map(|d| d.name()).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blur::{compile_in, f_limits_flow, verify_cut_blur};
    use crate::cuts::ChannelSetTriple;
    use crate::enumerate::{Bound, OrderSemantics};
    use crate::frame::{frame_graph, location_language, validate_frame};

    #[test]
    fn voting_frame_is_well_formed() {
        let s = build_voting(&VotingParams::default()).unwrap();
        assert!(validate_frame(&s.frame.to_spec()).is_ok());
        let v = s.frame.loc_id("v1_1").unwrap();
        assert_eq!(location_language(&s.frame, v, 3).len(), 3);
    }

    #[test]
    fn single_precinct_voter_runs() {
        let s = build_voting(&VotingParams::default()).unwrap();
        let u = Universe::new(s.frame.clone(), Bound::total(16), OrderSemantics::Minimal).unwrap();
        // none; one of two voters with one of two votes; both, in either
        // order at the ballot box, with any votes
        assert_eq!(u.runs(&s.set("voters")).len(), 1 + 2 * 2 + 2 * 2 * 2);
    }

    #[test]
    fn tally_hides_order_and_identity() {
        let s = build_voting(&VotingParams::default()).unwrap();
        let u = Universe::new(s.frame.clone(), Bound::total(16), OrderSemantics::Minimal).unwrap();
        let f = u.frame();
        let obs = CanonicalRun::parse(f, "c1=[t_1_1]").unwrap();
        let got = crate::disclosure::compatible_runs(&u, &s.set("c1"), &s.set("voters"), &obs);
        let texts: BTreeSet<String> = got.iter().map(|r| r.display(f).to_string()).collect();
        let expect: BTreeSet<String> = [
            "b1_1=[v0] b1_2=[v1] | b1_1#0<b1_2#0",
            "b1_1=[v0] b1_2=[v1] | b1_2#0<b1_1#0",
            "b1_1=[v1] b1_2=[v0] | b1_1#0<b1_2#0",
            "b1_1=[v1] b1_2=[v0] | b1_2#0<b1_1#0",
        ]
        .into_iter()
        .map(String::from)
        .collect();
        assert_eq!(texts, expect);
        let f0 = compile_in(&u, &s.blurs["f0"], &s.set("voters")).unwrap();
        assert!(f_limits_flow(&u, &s.set("voters"), &s.set("c1"), &f0).holds);
        assert!(f_limits_flow(&u, &s.set("voters"), &s.set("p"), &f0).holds);
    }

    #[test]
    fn import_and_export_are_disjoint() {
        let p = FirewallParams::default();
        let policy = Policy { params: &p };
        let addrs: Vec<&String> = p.external.iter().chain(&p.n1).chain(&p.n2).chain([&p.www]).collect();
        let mut crossing = 0;
        for src in &addrs {
            for dst in &addrs {
                for sport in PORT_CLASSES {
                    for dport in PORT_CLASSES {
                        let d = Datagram { src: src.to_string(), dst: dst.to_string(), sport: sport.into(), dport: dport.into() };
                        assert!(!(policy.importable(&d) && policy.exportable(&d)), "{}", d.name());
                        crossing += (policy.importable(&d) || policy.exportable(&d)) as usize;
                    }
                }
            }
        }
        assert!(crossing > 0);
    }

    #[test]
    fn firewall_topology() {
        let s = build_firewall(&FirewallParams::default()).unwrap();
        assert!(validate_frame(&s.frame.to_spec()).is_ok());
        assert_eq!(s.frame.num_locations(), 15);
        assert_eq!(s.frame.num_channels(), 21);
        let g = frame_graph(&s.frame);
        assert_eq!(g.edge_count(), 21);
        let (imp, exp) = firewall_classes(&FirewallParams::default());
        assert!(imp.iter().all(|d| !exp.contains(d)));
        assert!(!imp.is_empty() && !exp.is_empty());
    }

    #[test]
    fn discard_all_silences_the_cut() {
        let params = FirewallParams { discard_all: true, ..FirewallParams::default() };
        let s = build_firewall(&params).unwrap();
        let u = Universe::new(s.frame.clone(), Bound::total(24).with_per_location(6), OrderSemantics::Minimal).unwrap();
        let runs = u.runs(&s.set("cut"));
        assert_eq!(runs.runs, vec![CanonicalRun::empty()]);
    }

    fn firewall_universe(params: &FirewallParams) -> (Scenario, Universe) {
        let s = build_firewall(params).unwrap();
        let bound = Bound::total(24).with_per_location(6);
        let u = Universe::new(s.frame.clone(), bound, OrderSemantics::Minimal).unwrap();
        (s, u)
    }

    #[test]
    fn firewall_crossing_blurs_limit_flow() {
        let (s, u) = firewall_universe(&FirewallParams::default());
        let (ci, cn, cut) = (s.set("chans_i"), s.set("chans_n"), s.set("cut"));
        let fi = compile_in(&u, &s.blurs["f_i"], &ci).unwrap();
        let fe = compile_in(&u, &s.blurs["f_e"], &cn).unwrap();
        let down = ChannelSetTriple { source: ci.clone(), cut: cut.clone(), sink: cn.clone() };
        let up = ChannelSetTriple { source: cn.clone(), cut: cut.clone(), sink: ci.clone() };
        let a = verify_cut_blur(&u, &down, &fi).unwrap();
        let b = verify_cut_blur(&u, &up, &fe).unwrap();
        assert!(a.antecedent.holds && a.consequent.holds);
        assert!(b.antecedent.holds && b.consequent.holds);
    }

    #[test]
    fn importable_only_selection_is_too_fine() {
        let (s, u) = firewall_universe(&FirewallParams::default());
        let (ci, cn, cut) = (s.set("chans_i"), s.set("chans_n"), s.set("cut"));
        let li = compile_in(&u, &s.blurs["f_i_literal"], &ci).unwrap();
        let le = compile_in(&u, &s.blurs["f_e_literal"], &cn).unwrap();
        let a = f_limits_flow(&u, &ci, &cut, &li);
        let b = f_limits_flow(&u, &cn, &cut, &le);
        assert!(!a.holds && !b.holds);
    }

    #[test]
    fn firewall_without_filters_discloses() {
        let (s, u) = firewall_universe(&FirewallParams::default());
        let verdict = crate::disclosure::no_disclosure(&u, &s.set("chans_i"), &s.set("cut"));
        assert!(!verdict.holds);
        let (s, u) = firewall_universe(&FirewallParams { discard_all: true, ..FirewallParams::default() });
        assert!(crate::disclosure::no_disclosure(&u, &s.set("chans_i"), &s.set("cut")).holds);
    }

    #[test]
    fn firewall_min_cut_is_the_two_links() {
        let s = build_firewall(&FirewallParams::default()).unwrap();
        let got = crate::cuts::find_min_cut(&s.frame, &s.set("chans_i"), &s.set("chans_n")).unwrap();
        let crate::cuts::MinCut::Found(cut) = got else { panic!("a cut exists") };
        assert_eq!(cut.len(), 2);
        let t = ChannelSetTriple { source: s.set("chans_i"), cut, sink: s.set("chans_n") };
        assert!(crate::cuts::is_cut(&s.frame, &t).unwrap().holds);
        let named = ChannelSetTriple { cut: s.set("cut"), ..t };
        assert!(crate::cuts::is_cut(&s.frame, &named).unwrap().holds);
        let half = ChannelSetTriple { source: s.set("chans_i"), cut: s.set("c1"), sink: s.set("chans_n") };
        assert!(!crate::cuts::is_cut(&s.frame, &half).unwrap().holds);
    }

    #[test]
    fn firewall_params_rejected() {
        let bad = FirewallParams { www: "h2".into(), ..FirewallParams::default() };
        assert!(build_firewall(&bad).is_err());
        let dup = FirewallParams { n2: vec!["ext".into()], ..FirewallParams::default() };
        assert!(build_firewall(&dup).is_err());
        let mut cats = default_catalogs(&FirewallParams::default());
        cats[1].push(Datagram::new("ext", "www", "W", "W"));
        assert!(build_firewall(&FirewallParams { catalogs: Some(cats), ..FirewallParams::default() }).is_err());
    }

    #[test]
    fn two_precinct_composition() {
        let f1 = build_voting(&VotingParams::default()).unwrap();
        let f2 = build_voting(&VotingParams { precincts: vec![2, 2], ..VotingParams::default() }).unwrap();
        let u1 = Universe::new(f1.frame.clone(), Bound::total(16), OrderSemantics::Minimal).unwrap();
        let u2 = Universe::new(f2.frame.clone(), Bound::total(16), OrderSemantics::Minimal).unwrap();
        let core = crate::compose::build_shared_core(&u1, &u2, &["v1_1".into(), "v1_2".into(), "BB1".into()]).unwrap();
        assert_eq!(core.lcut, vec!["c1".to_string()]);
        assert!(core.side_condition());
        let v = crate::compose::verify_composition(
            &core,
            &u1,
            &u2,
            &f1.sets["voters1"],
            &["p".into()],
            &f2.blurs["f_precinct1"],
        )
        .unwrap();
        assert!(v.antecedent.holds && v.consequent.holds);
        let j = check_joint_permutation(&u2);
        assert!(j.holds, "{:?}", j.failure);
        assert_eq!(j.permutation_pairs, 4);
    }
}
