//! Acceptance run: one line per criterion, nonzero exit if any fails.
//!
//! All checks are discrete, so every tolerance is exact: a single
//! counterexample fails its criterion.

use std::process::ExitCode;
use std::time::Instant;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cutblur::blur::{compile_in, validate_blur, verify_cut_blur, BlurSpec, CompiledBlur, TableEntry};
use cutblur::compose::{build_shared_core, verify_composition};
use cutblur::cuts::{is_cut, ChannelSetTriple};
use cutblur::disclosure::{check_symmetry, cmpt_propagation_check, compatible_runs, cut_lemma_check, no_disclosure};
use cutblur::enumerate::{Bound, OrderSemantics, Universe};
use cutblur::events::{CanonicalRun, EventSystem};
use cutblur::format::parse_frame;
use cutblur::frame::{ChanSet, Frame, Label};
use cutblur::purge::{check_nd, check_ni, nd_blur_agreement, validate_purge, Machine, MachineUniverse, PurgeKind};
use cutblur::random::{
    random_cut_triple, random_disconnected_frame, random_frame, random_machine, random_partition, FrameShape, MachineShape,
};
use cutblur::scenarios::{build_firewall, build_voting, check_joint_permutation, FirewallParams, VotingParams};

const SEED: u64 = 20_240_601;
const RANDOM_BOUND: usize = 5;
const CUT_PER_LOCATION: usize = 2;
const FIREWALL_BOUND: usize = 24;
const FIREWALL_PER_LOCATION: usize = 6;
const VOTING_BOUND: usize = 16;
const BLUR_SAMPLES: usize = 300;

type Outcome = Result<String, String>;
type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_subset<R: Rng>(rng: &mut R, f: &Frame) -> ChanSet {
    f.chan_ids().filter(|_| rng.random_bool(0.4)).collect()
}

/// Per-location bound with a total that never binds. Any binding total cuts
/// off executions that merge two bounded ones across a cut.
fn cut_bound(f: &Frame) -> Bound {
    Bound::total(CUT_PER_LOCATION * f.num_locations()).with_per_location(CUT_PER_LOCATION)
}

fn show(f: &Frame, r: &CanonicalRun) -> String {
    r.display(f).to_string()
}

/// The frames shared by the lemma suite and the naive cross-check.
fn lemma_frames() -> Vec<Frame> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    (0..50).map(|_| random_frame(&mut rng, FrameShape::default())).collect()
}

fn criterion_1(frames: &[Frame]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let mut shrink_instances = 0;
    for (k, f) in frames.iter().enumerate() {
        let u = Universe::new(f.clone(), Bound::total(RANDOM_BOUND), OrderSemantics::Minimal).map_err(|e| e.to_string())?;
        for _ in 0..4 {
            let (c, c2, c3) = (random_subset(&mut rng, f), random_subset(&mut rng, f), random_subset(&mut rng, f));
            let (rc, rc2) = (u.runs(&c), u.runs(&c2));
            for b in &rc.runs {
                for b2 in compatible_runs(&u, &c, &c2, b) {
                    ensure(compatible_runs(&u, &c2, &c, &b2).contains(b), || {
                        format!("frame {k}: witness symmetry fails for {} / {}", show(f, b), show(f, &b2))
                    })?;
                }
            }
            for b2 in &rc2.runs {
                for b in compatible_runs(&u, &c2, &c, b2) {
                    ensure(compatible_runs(&u, &c, &c2, &b).contains(b2), || format!("frame {k}: witness symmetry, reverse"))?;
                }
            }
            let (fwd, back) = check_symmetry(&u, &c, &c2);
            ensure(fwd == back, || format!("frame {k}: no-disclosure is not symmetric"))?;
            if fwd {
                shrink_instances += 1;
                for _ in 0..3 {
                    let c0: ChanSet = c.iter().copied().filter(|_| rng.random_bool(0.5)).collect();
                    let c02: ChanSet = c2.iter().copied().filter(|_| rng.random_bool(0.5)).collect();
                    ensure(no_disclosure(&u, &c0, &c02).holds, || format!("frame {k}: shrinking loses no-disclosure"))?;
                }
            }
            let p = cmpt_propagation_check(&u, &c, &c2, &c3);
            ensure(p.inclusion, || format!("frame {k}: propagation inclusion fails: {:?}", p.counterexample))?;
            ensure(cmpt_propagation_check(&u, &c, &c, &c3).equality, || format!("frame {k}: C2 = C1 is not an equality"))?;
            let all = compatible_runs(&u, &ChanSet::new(), &c, &CanonicalRun::empty());
            ensure(all == rc.runs, || format!("frame {k}: cmpt from the empty run is not lruns"))?;
            for b in &rc.runs {
                ensure(compatible_runs(&u, &c, &c, b) == vec![b.clone()], || format!("frame {k}: cmpt(C,C,B) != {{B}}"))?;
            }
            if let Some(&ch) = c.iter().next() {
                let long = vec![f.data()[0].clone(); RANDOM_BOUND + 1].join(",");
                let bogus = CanonicalRun::parse(f, &format!("{}=[{long}]", f.channel(ch).name)).map_err(|e| e.to_string())?;
                ensure(compatible_runs(&u, &c, &c2, &bogus).is_empty(), || format!("frame {k}: non-run has compatible runs"))?;
            }
        }
    }
    Ok(format!("50 frames x 4 channel-set triples, {shrink_instances} shrinking instances, 0 counterexamples"))
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let (mut done, mut antecedents) = (0, 0);
    while done < 30 {
        let f = random_frame(&mut rng, FrameShape::default());
        let Some(t) = random_cut_triple(&mut rng, &f) else { continue };
        ensure(is_cut(&f, &t).map_err(|e| e.to_string())?.holds, || "generated triple is not a cut".into())?;
        let u = Universe::new(f.clone(), cut_bound(&f), OrderSemantics::Total).map_err(|e| e.to_string())?;
        let c = cut_lemma_check(&u, &t);
        ensure(c.inclusion && c.equality, || format!("cut lemma fails on triple {done}: {:?}", c.counterexample.or(c.strictness_witness)))?;
        if no_disclosure(&u, &t.source, &t.cut).holds {
            antecedents += 1;
            ensure(no_disclosure(&u, &t.source, &t.sink).holds, || format!("no-disclosure does not cross the cut on triple {done}"))?;
        }
        done += 1;
    }
    for k in 0..10 {
        let (f, a, b) = random_disconnected_frame(&mut rng, FrameShape::default());
        let u = Universe::new(f.clone(), cut_bound(&f), OrderSemantics::Total).map_err(|e| e.to_string())?;
        ensure(no_disclosure(&u, &a, &b).holds, || format!("disconnected frame {k} discloses"))?;
    }
    Ok(format!("30 cut triples (total order, per-location<={CUT_PER_LOCATION}), {antecedents} with no disclosure into the cut; 10 disconnected frames"))
}

const TABLE_FRAME: &str = r#"
data = ["0", "1"]

[[location]]
name = "src"
traces = [["a:0"], ["a:1"]]

[[location]]
name = "dst"
traces = [["a:0"], ["a:1"]]

[[channel]]
name = "a"
from = "src"
to = "dst"

[blurs.lopsided]
kind = "table"
entries = [{ run = "a=[0]", image = ["a=[0]"] }, { run = "a=[1]", image = ["a=[0]", "a=[1]"] }]

[blurs.halves]
kind = "restriction"
channels = []

[blurs.bits]
kind = "classes"
classes = [["a=[0]", "a=[1]"]]
"#;

fn check_laws(name: &str, blur: &CompiledBlur) -> Result<(), String> {
    let v = validate_blur(blur, BLUR_SAMPLES, SEED);
    ensure(v.is_blur(), || format!("{name} fails the blur laws: {:?}", v.failures))?;
    ensure(!blur.is_partition() || v.partition_generated, || format!("{name}: partition not partition-generated"))
}

fn criterion_3() -> Outcome {
    let doc = parse_frame(TABLE_FRAME).map_err(|e| e.to_string())?;
    let u = Universe::new(doc.frame.clone(), Bound::total(2), OrderSemantics::Minimal).map_err(|e| e.to_string())?;
    let a = doc.frame.chan_set(&["a"]).map_err(|e| e.to_string())?;
    for (name, spec) in [
        ("identity", BlurSpec::Identity),
        ("all", BlurSpec::All),
        ("restriction", doc.blurs["halves"].clone()),
        ("classes", doc.blurs["bits"].clone()),
    ] {
        check_laws(name, &compile_in(&u, &spec, &a).map_err(|e| e.to_string())?)?;
    }
    let table = compile_in(&u, &doc.blurs["lopsided"], &a).map_err(|e| e.to_string())?;
    let v = validate_blur(&table, BLUR_SAMPLES, SEED);
    ensure(v.is_blur() && !v.partition_generated, || format!("lopsided table: {v:?}"))?;
    let bad = compile_in(
        &u,
        &BlurSpec::Table { entries: vec![TableEntry { run: "a=[0]".into(), image: vec!["a=[1]".into()] }] },
        &a,
    );
    let rejected = match bad {
        Err(_) => true,
        Ok(b) => !validate_blur(&b, BLUR_SAMPLES, SEED).inclusion,
    };
    ensure(rejected, || "a table without inclusion was accepted".into())?;

    let vote = build_voting(&VotingParams { commissioners: vec!["v1_1".into()], ..VotingParams::default() })
        .map_err(|e| e.to_string())?;
    let uv = Universe::new(vote.frame.clone(), Bound::total(6), OrderSemantics::Minimal).map_err(|e| e.to_string())?;
    let voters = vote.set("voters");
    for (name, spec) in &vote.blurs {
        check_laws(name, &compile_in(&uv, spec, &voters).map_err(|e| e.to_string())?)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let n = uv.runs(&voters).len();
    check_laws("random partition", &CompiledBlur::from_classes(&random_partition(&mut rng, n, 4)))?;

    let fw = build_firewall(&FirewallParams::default()).map_err(|e| e.to_string())?;
    let bound = Bound::total(FIREWALL_BOUND).with_per_location(FIREWALL_PER_LOCATION);
    let uf = Universe::new(fw.frame.clone(), bound, OrderSemantics::Minimal).map_err(|e| e.to_string())?;
    for (name, set) in [("f_i", "chans_i"), ("f_e", "chans_n")] {
        check_laws(name, &compile_in(&uf, &fw.blurs[name], &fw.set(set)).map_err(|e| e.to_string())?)?;
    }
    Ok(format!(
        "identity, all, restriction, classes, permutation ({} voting blurs), random partition, selection f_i/f_e pass; lopsided table is a blur, not partition-generated",
        vote.blurs.len()
    ))
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 4);
    let (mut found, mut tries) = (0, 0);
    while found < 30 {
        tries += 1;
        ensure(tries < 20_000, || format!("only {found} triples with the antecedent after {tries} tries"))?;
        let f = random_frame(&mut rng, FrameShape::default());
        let Some(t) = random_cut_triple(&mut rng, &f) else { continue };
        let u = Universe::new(f.clone(), cut_bound(&f), OrderSemantics::Total).map_err(|e| e.to_string())?;
        let n = u.runs(&t.source).len();
        let k = rng.random_range(1..=n.max(1));
        let blur = CompiledBlur::from_classes(&random_partition(&mut rng, n, k));
        let v = verify_cut_blur(&u, &t, &blur).map_err(|e| e.to_string())?;
        if !v.antecedent.holds || v.antecedent.observed_runs == 0 || k == 1 {
            continue;
        }
        ensure(v.consequent.holds, || format!("consequent fails on triple {found}: {:?}", v.consequent.counterexample))?;
        found += 1;
    }
    Ok(format!("30 of {tries} random (frame, cut, partition) triples meet the antecedent; consequent holds in 30/30"))
}

fn criterion_5() -> Outcome {
    let f1 = build_voting(&VotingParams::default()).map_err(|e| e.to_string())?;
    let f2 = build_voting(&VotingParams { precincts: vec![2, 2], ..VotingParams::default() }).map_err(|e| e.to_string())?;
    let bound = Bound::total(VOTING_BOUND);
    let u1 = Universe::new(f1.frame.clone(), bound, OrderSemantics::Minimal).map_err(|e| e.to_string())?;
    let u2 = Universe::new(f2.frame.clone(), bound, OrderSemantics::Minimal).map_err(|e| e.to_string())?;
    let core =
        build_shared_core(&u1, &u2, &["v1_1".into(), "v1_2".into(), "BB1".into()]).map_err(|e| e.to_string())?;
    ensure(core.lcut == ["c1"], || format!("lcut is {:?}", core.lcut))?;
    ensure(core.side_condition(), || format!("new cut run {:?}", core.new_cut_run))?;
    let v = verify_composition(&core, &u1, &u2, &f1.sets["voters1"], &["p".into()], &f2.blurs["f_precinct1"])
        .map_err(|e| e.to_string())?;
    ensure(v.antecedent.holds, || format!("precinct blur fails at c1: {:?}", v.antecedent.counterexample))?;
    ensure(v.consequent.holds, || format!("precinct blur fails at p: {:?}", v.consequent.counterexample))?;
    let j = check_joint_permutation(&u2);
    ensure(j.holds, || format!("joint permutation fails: {:?}", j.failure))?;
    Ok(format!(
        "executions {} / {}; lcut [c1] inclusion holds; f_precinct1 limits flow at c1 and p; joint permutation over {} pairs",
        u1.len(),
        u2.len(),
        j.permutation_pairs
    ))
}

fn criterion_6() -> Outcome {
    let bound = Bound::total(FIREWALL_BOUND).with_per_location(FIREWALL_PER_LOCATION);
    let closed = build_firewall(&FirewallParams { discard_all: true, ..FirewallParams::default() }).map_err(|e| e.to_string())?;
    let uc = Universe::new(closed.frame.clone(), bound, OrderSemantics::Minimal).map_err(|e| e.to_string())?;
    let cut = closed.set("cut");
    ensure(uc.runs(&cut).runs == vec![CanonicalRun::empty()], || "discard-all cut has non-empty runs".into())?;
    ensure(check_symmetry(&uc, &closed.set("chans_i"), &cut) == (true, true), || "discard-all discloses".into())?;

    let s = build_firewall(&FirewallParams::default()).map_err(|e| e.to_string())?;
    let u = Universe::new(s.frame.clone(), bound, OrderSemantics::Minimal).map_err(|e| e.to_string())?;
    let (ci, cn, cut) = (s.set("chans_i"), s.set("chans_n"), s.set("cut"));
    let fi = compile_in(&u, &s.blurs["f_i"], &ci).map_err(|e| e.to_string())?;
    let fe = compile_in(&u, &s.blurs["f_e"], &cn).map_err(|e| e.to_string())?;
    let down = ChannelSetTriple { source: ci.clone(), cut: cut.clone(), sink: cn.clone() };
    let up = ChannelSetTriple { source: cn.clone(), cut: cut.clone(), sink: ci.clone() };
    for (name, t, blur) in [("f_i", &down, &fi), ("f_e", &up, &fe)] {
        let v = verify_cut_blur(&u, t, blur).map_err(|e| e.to_string())?;
        ensure(v.antecedent.holds, || format!("{name} does not limit flow into the cut: {:?}", v.antecedent.counterexample))?;
        ensure(v.consequent.holds, || format!("{name} does not limit flow beyond the cut: {:?}", v.consequent.counterexample))?;
    }
    ensure(!no_disclosure(&u, &ci, &cut).holds, || "filtered firewall shows no disclosure at all".into())?;
    Ok(format!(
        "discard-all: lruns(cut) = {{empty}}, no disclosure both ways ({} executions); filters: f_i and f_e limit flow at the cut and beyond ({} executions, {bound}, minimal order)",
        uc.len(),
        u.len()
    ))
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 7);
    let (mut ni_count, mut transitive) = (0, 0);
    for k in 0..20 {
        let shape = MachineShape { transitive: k % 2 == 0, ..MachineShape::default() };
        let machine = Machine::new(random_machine(&mut rng, shape)).map_err(|e| e.to_string())?;
        let bound = machine.bound_for(2);
        let mu = MachineUniverse::new(machine, bound).map_err(|e| e.to_string())?;
        for d in 0..mu.machine.num_domains() {
            for kind in [PurgeKind::Gm, PurgeKind::HaighYoung] {
                let v = validate_purge(&mu, d, |e| mu.purge(kind, d, &mu.input_sequence(e)));
                ensure(v.is_purge(), || format!("machine {k}, domain {d}: {kind:?} is not a purge: {v:?}"))?;
                let ni = check_ni(&mu, kind, d);
                let nd = check_nd(&mu, kind, d);
                ensure(!ni.holds || nd.holds, || format!("machine {k}, domain {d}: NI without ND under {kind:?}"))?;
                ni_count += ni.holds as usize;
                let (nd2, flow) = nd_blur_agreement(&mu, kind, d);
                ensure(nd2 == nd.holds && nd2 == flow, || format!("machine {k}, domain {d}: ND {nd2} vs blur flow {flow}"))?;
            }
            if mu.machine.is_transitive() {
                for e in mu.universe.executions() {
                    let seq = mu.input_sequence(e);
                    ensure(mu.purge(PurgeKind::Gm, d, &seq) == mu.purge(PurgeKind::HaighYoung, d, &seq), || {
                        format!("machine {k}, domain {d}: purges differ under transitive influence")
                    })?;
                }
            }
        }
        transitive += mu.machine.is_transitive() as usize;
    }
    Ok(format!("20 machines ({transitive} transitive), {ni_count} NI verdicts, 0 counterexamples"))
}

/// A finite labelled poset: events and the strict order as a matrix.
#[derive(Clone)]
struct Poset {
    labels: Vec<Label>,
    below: Vec<Vec<bool>>,
}

impl Poset {
    fn restrict(&self, keep: &ChanSet) -> Poset {
        let idx: Vec<usize> = (0..self.labels.len()).filter(|&i| keep.contains(&self.labels[i].chan)).collect();
        Poset {
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            below: idx.iter().map(|&i| idx.iter().map(|&j| self.below[i][j]).collect()).collect(),
        }
    }

    fn from_system(sys: &EventSystem) -> Poset {
        let n = sys.len();
        Poset {
            labels: sys.events().iter().map(|e| e.label()).collect(),
            below: (0..n).map(|i| (0..n).map(|j| sys.precedes(i, j)).collect()).collect(),
        }
    }

    fn key(&self) -> (Vec<Label>, usize) {
        let mut l = self.labels.clone();
        l.sort();
        (l, self.below.iter().flatten().filter(|&&b| b).count())
    }

    fn isomorphic(&self, other: &Poset) -> bool {
        fn extend(a: &Poset, b: &Poset, map: &mut Vec<usize>, used: &mut Vec<bool>) -> bool {
            let i = map.len();
            if i == a.labels.len() {
                return true;
            }
            for j in 0..b.labels.len() {
                if used[j] || a.labels[i] != b.labels[j] {
                    continue;
                }
                if (0..i).any(|p| a.below[p][i] != b.below[map[p]][j] || a.below[i][p] != b.below[j][map[p]]) {
                    continue;
                }
                map.push(j);
                used[j] = true;
                if extend(a, b, map, used) {
                    return true;
                }
                map.pop();
                used[j] = false;
            }
            false
        }
        self.key() == other.key() && extend(self, other, &mut Vec::new(), &mut vec![false; other.labels.len()])
    }
}

fn insert_distinct(set: &mut Vec<Poset>, p: Poset) {
    if !set.iter().any(|q| q.isomorphic(&p)) {
        set.push(p);
    }
}

/// Every minimal-order execution within `bound`, found by extending global
/// label sequences and ordering events that share a location.
fn naive_executions(f: &Frame, bound: usize) -> Vec<Poset> {
    fn go(f: &Frame, bound: usize, states: &mut Vec<u32>, seq: &mut Vec<Label>, out: &mut Vec<Poset>) {
        let n = seq.len();
        let touches = |l: Label| {
            let c = f.channel(l.chan);
            [c.sender, c.recipient]
        };
        let mut below = vec![vec![false; n]; n];
        for j in 0..n {
            for i in 0..j {
                let (a, b) = (touches(seq[i]), touches(seq[j]));
                if a.iter().any(|x| b.contains(x)) {
                    below[i][j] = true;
                }
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if below[i][k] && below[k][j] {
                        below[i][j] = true;
                    }
                }
            }
        }
        out.push(Poset { labels: seq.clone(), below });
        if n == bound {
            return;
        }
        for c in f.chan_ids() {
            for v in 0..f.data().len() {
                let label = Label { chan: c, value: f.val_id(&f.data()[v]).expect("value") };
                let ch = f.channel(c);
                let mut ends = vec![ch.sender];
                if ch.recipient != ch.sender {
                    ends.push(ch.recipient);
                }
                let next: Option<Vec<u32>> =
                    ends.iter().map(|l| f.dfa(*l).step(states[l.index()], label)).collect();
                let Some(next) = next else { continue };
                let saved: Vec<u32> = ends.iter().map(|l| states[l.index()]).collect();
                for (l, s) in ends.iter().zip(&next) {
                    states[l.index()] = *s;
                }
                seq.push(label);
                go(f, bound, states, seq, out);
                seq.pop();
                for (l, s) in ends.iter().zip(saved) {
                    states[l.index()] = s;
                }
            }
        }
    }
    let mut states: Vec<u32> = f.loc_ids().map(|l| f.dfa(l).initial()).collect();
    let mut out = Vec::new();
    go(f, bound, &mut states, &mut Vec::new(), &mut out);
    out
}

fn criterion_8(frames: &[Frame]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 8);
    let mut queries = 0;
    for (k, f) in frames.iter().enumerate() {
        let u = Universe::new(f.clone(), Bound::total(RANDOM_BOUND), OrderSemantics::Minimal).map_err(|e| e.to_string())?;
        let naive = naive_executions(f, RANDOM_BOUND);
        let chans: Vec<_> = f.chan_ids().collect();
        for _ in 0..3 {
            let obs: ChanSet = random_subset(&mut rng, f);
            let src: ChanSet = if rng.random_bool(0.2) {
                obs.clone()
            } else {
                let mut s = random_subset(&mut rng, f);
                s.insert(*chans.choose(&mut rng).expect("frames have channels"));
                s
            };
            let mut observed: Vec<Poset> = Vec::new();
            for e in &naive {
                insert_distinct(&mut observed, e.restrict(&obs));
            }
            let pipeline_obs = u.runs(&obs);
            ensure(observed.len() == pipeline_obs.len(), || {
                format!("frame {k}: {} naive observed runs vs {}", observed.len(), pipeline_obs.len())
            })?;
            for run in &pipeline_obs.runs {
                let target = Poset::from_system(&run.to_event_system());
                let mut expect: Vec<Poset> = Vec::new();
                for e in &naive {
                    if e.restrict(&obs).isomorphic(&target) {
                        insert_distinct(&mut expect, e.restrict(&src));
                    }
                }
                let got: Vec<Poset> =
                    compatible_runs(&u, &obs, &src, run).iter().map(|r| Poset::from_system(&r.to_event_system())).collect();
                let same = got.len() == expect.len() && got.iter().all(|g| expect.iter().any(|x| x.isomorphic(g)));
                ensure(same, || format!("frame {k}: compatible runs of {} differ from the naive oracle", show(f, run)))?;
                queries += 1;
            }
        }
    }
    Ok(format!("{queries} compatibility queries on 50 frames agree with brute-force isomorphism"))
}

fn run_cli(args: &[&str]) -> (i32, Vec<u8>) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = cutblur::cli::run(std::iter::once("cutblur").chain(args.iter().copied()), &mut out, &mut err);
    (code, out)
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = |n: &str| dir.path().join(n).display().to_string();
    let (vote, fw, fw_closed, machine) = (path("voting.toml"), path("fw.toml"), path("fw_closed.toml"), path("m.toml"));
    run_cli(&["scenario", "voting", "--out", &vote]);
    run_cli(&["scenario", "firewall", "--out", &fw]);
    run_cli(&["scenario", "firewall", "--discard-all", "--out", &fw_closed]);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 9);
    let spec = random_machine(&mut rng, MachineShape::default());
    std::fs::write(&machine, cutblur::format::write_machine(&spec)).map_err(|e| e.to_string())?;
    let target = spec.domains[0].clone();
    let commands: Vec<Vec<&str>> = vec![
        vec!["validate", &vote, "--dot"],
        vec!["enumerate", &vote, "--bound", "6"],
        vec!["runs", &vote, "--channels", "p", "--bound", "6"],
        vec!["cmpt", &vote, "--observed", "c1", "--source", "voters", "--run", "c1=[t_1_1]", "--bound", "6"],
        vec!["nodisclosure", &fw_closed, "--source", "chans_i", "--observed", "cut", "--bound", "4"],
        vec!["check-blur", &vote, "--blur", "f0", "--source", "voters", "--observed", "p", "--samples", "50", "--seed", "5"],
        vec!["check-cut", &fw, "--source", "chans_i", "--cut", "cut", "--sink", "chans_n"],
        vec!["min-cut", &fw, "--source", "chans_i", "--sink", "chans_n"],
        vec!["verify-cutblur", &vote, "--source", "voters", "--cut", "c1", "--sink", "p", "--blur", "f0", "--bound", "6"],
        vec!["ni", &machine, "--target", &target, "--bound", "4"],
        vec!["nd", &machine, "--target", &target, "--purge", "haigh-young", "--bound", "4"],
        vec!["purge-blur", &machine, "--target", &target, "--bound", "4"],
        vec!["scenario", "voting", "--precincts", "2,1"],
    ];
    for cmd in &commands {
        let mut args = vec!["--json"];
        args.extend(cmd.iter().copied());
        let (c1, o1) = run_cli(&args);
        let (c2, o2) = run_cli(&args);
        ensure(c1 != 2, || format!("{} failed to run", cmd.join(" ")))?;
        ensure(c1 == c2 && o1 == o2, || format!("{} is not deterministic", cmd.join(" ")))?;
    }
    let bin = env!("CARGO_BIN_EXE_cutblur");
    let spawn = || {
        std::process::Command::new(bin)
            .args(["--json", "check-blur", &vote, "--blur", "per_precinct", "--source", "voters", "--bound", "6", "--seed", "11"])
            .output()
            .map_err(|e| e.to_string())
    };
    let (a, b) = (spawn()?, spawn()?);
    ensure(a.status.code() == Some(0) && a.stdout == b.stdout, || "binary output differs between runs".into())?;
    let (_, in_process) = run_cli(&["--json", "check-blur", &vote, "--blur", "per_precinct", "--source", "voters", "--bound", "6", "--seed", "11"]);
    ensure(in_process == a.stdout, || "binary and library reports differ".into())?;
    Ok(format!("{} commands twice each plus the binary: byte-identical reports", commands.len()))
}

fn main() -> ExitCode {
    let frames = lemma_frames();
    let criteria: Vec<(&str, Check)> = vec![
        ("1 definition and lemma suite", Box::new(|| criterion_1(&frames))),
        ("2 cut machinery", Box::new(criterion_2)),
        ("3 blur axioms", Box::new(criterion_3)),
        ("4 cut-blur principle", Box::new(criterion_4)),
        ("5 composition (voting)", Box::new(criterion_5)),
        ("6 firewall reproduction", Box::new(criterion_6)),
        ("7 purges, NI and ND", Box::new(criterion_7)),
        ("8 naive oracle cross-check", Box::new(|| criterion_8(&frames))),
        ("9 CLI determinism", Box::new(criterion_9)),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in &criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.starts_with(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS criterion {name} ({secs:.1}s): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {name} ({secs:.1}s): {why}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
