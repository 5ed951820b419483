//! Process discovery: directly-follows graphs, an inductive miner, and the
//! translation of process trees into workflow nets.
//!
//! The miner detects cuts on the directly-follows graph in the priority order
//! exclusive-choice, sequence, parallel, loop; its base cases are the single
//! activity leaf and the choice-with-tau for logs containing empty traces.
//! When no cut applies it falls back to the flower model `loop(tau, a1..ak)`.
//! All partitioning is deterministic: groups are ordered by their smallest
//! member activity.

use crate::ocel::SimpleEventLog;
use crate::petri::Net;
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

/// A block-structured process model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProcessTree {
    /// Visible activity leaf.
    Leaf(String),
    /// Silent leaf.
    Tau,
    /// Sequence of the children.
    Seq(Vec<ProcessTree>),
    /// Exclusive choice between the children.
    Xor(Vec<ProcessTree>),
    /// Parallel (interleaved) execution of the children.
    And(Vec<ProcessTree>),
    /// Loop: first child is the do-part, the rest are redo-parts.
    Loop(Vec<ProcessTree>),
}

impl fmt::Display for ProcessTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn join(f: &mut fmt::Formatter<'_>, op: &str, cs: &[ProcessTree]) -> fmt::Result {
            write!(f, "{op}(")?;
            for (i, c) in cs.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{c}")?;
            }
            write!(f, ")")
        }
        match self {
            ProcessTree::Leaf(a) => write!(f, "{a}"),
            ProcessTree::Tau => write!(f, "tau"),
            ProcessTree::Seq(cs) => join(f, "->", cs),
            ProcessTree::Xor(cs) => join(f, "x", cs),
            ProcessTree::And(cs) => join(f, "+", cs),
            ProcessTree::Loop(cs) => join(f, "loop", cs),
        }
    }
}

/// Directly-follows graph of a flattened log.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dfg {
    pub activities: BTreeSet<String>,
    pub edges: BTreeSet<(String, String)>,
    pub start: BTreeSet<String>,
    pub end: BTreeSet<String>,
}

impl Dfg {
    /// Builds the DFG of the non-empty traces of `log`.
    pub fn from_log(log: &SimpleEventLog) -> Dfg {
        let mut dfg = Dfg::default();
        for trace in &log.traces {
            if trace.is_empty() {
                continue;
            }
            dfg.start.insert(trace[0].clone());
            dfg.end.insert(trace[trace.len() - 1].clone());
            for a in trace {
                dfg.activities.insert(a.clone());
            }
            for w in trace.windows(2) {
                dfg.edges.insert((w[0].clone(), w[1].clone()));
            }
        }
        dfg
    }

    fn has_edge(&self, a: &str, b: &str) -> bool {
        self.edges.contains(&(a.to_string(), b.to_string()))
    }
}

/// Deterministically ordered partition: groups sorted by smallest member.
fn sort_groups(mut groups: Vec<BTreeSet<String>>) -> Vec<BTreeSet<String>> {
    groups.sort_by(|a, b| a.iter().next().cmp(&b.iter().next()));
    groups
}

/// Connected components of `activities` under the symmetric closure of `connected`.
fn components(
    activities: &BTreeSet<String>,
    connected: impl Fn(&str, &str) -> bool,
) -> Vec<BTreeSet<String>> {
    let acts: Vec<&String> = activities.iter().collect();
    let mut comp: Vec<Option<usize>> = vec![None; acts.len()];
    let mut groups: Vec<BTreeSet<String>> = Vec::new();
    for i in 0..acts.len() {
        if comp[i].is_some() {
            continue;
        }
        let id = groups.len();
        groups.push(BTreeSet::new());
        let mut queue = VecDeque::from([i]);
        comp[i] = Some(id);
        while let Some(x) = queue.pop_front() {
            groups[id].insert(acts[x].clone());
            for y in 0..acts.len() {
                if comp[y].is_none()
                    && (connected(acts[x], acts[y]) || connected(acts[y], acts[x]))
                {
                    comp[y] = Some(id);
                    queue.push_back(y);
                }
            }
        }
    }
    sort_groups(groups)
}

/// Exclusive-choice cut: connected components of the undirected DFG.
fn xor_cut(dfg: &Dfg) -> Option<Vec<BTreeSet<String>>> {
    let groups = components(&dfg.activities, |a, b| dfg.has_edge(a, b));
    (groups.len() >= 2).then_some(groups)
}

/// Sequence cut: strongly connected components condensed, mutually unreachable
/// components merged, and the result ordered by reachability.
fn seq_cut(dfg: &Dfg) -> Option<Vec<BTreeSet<String>>> {
    let acts: Vec<String> = dfg.activities.iter().cloned().collect();
    let n = acts.len();
    let idx: BTreeMap<&str, usize> = acts.iter().map(|a| a.as_str()).zip(0..).collect();
    // Reachability closure (Floyd-Warshall style; alphabets are small).
    let mut reach = vec![vec![false; n]; n];
    for (a, b) in &dfg.edges {
        reach[idx[a.as_str()]][idx[b.as_str()]] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    // Merge into groups: same SCC (mutual reach) or mutually unreachable.
    let together = |i: usize, j: usize| {
        (reach[i][j] && reach[j][i]) || (!reach[i][j] && !reach[j][i])
    };
    let mut group_of: Vec<Option<usize>> = vec![None; n];
    let mut groups: Vec<BTreeSet<usize>> = Vec::new();
    for i in 0..n {
        if group_of[i].is_some() {
            continue;
        }
        let id = groups.len();
        groups.push(BTreeSet::from([i]));
        group_of[i] = Some(id);
        // Union transitively: membership via any existing member.
        let mut changed = true;
        while changed {
            changed = false;
            for j in 0..n {
                if group_of[j].is_none() && groups[id].iter().any(|&m| together(m, j)) {
                    groups[id].insert(j);
                    group_of[j] = Some(id);
                    changed = true;
                }
            }
        }
    }
    if groups.len() < 2 {
        return None;
    }
    // Validate a strict total order between groups and sort by it.
    let before = |g: &BTreeSet<usize>, h: &BTreeSet<usize>| {
        g.iter().all(|&i| h.iter().all(|&j| reach[i][j] && !reach[j][i]))
    };
    let mut ordered: Vec<BTreeSet<usize>> = groups.clone();
    ordered.sort_by(|g, h| {
        if before(g, h) {
            std::cmp::Ordering::Less
        } else {
            std::cmp::Ordering::Greater
        }
    });
    for w in ordered.windows(2) {
        if !before(&w[0], &w[1]) {
            return None;
        }
    }
    Some(
        ordered
            .into_iter()
            .map(|g| g.into_iter().map(|i| acts[i].clone()).collect())
            .collect(),
    )
}

/// Parallel cut: components of the complement of the mutual-edge relation,
/// where every group must contain a start and an end activity.
fn and_cut(dfg: &Dfg) -> Option<Vec<BTreeSet<String>>> {
    let groups = components(&dfg.activities, |a, b| {
        !(dfg.has_edge(a, b) && dfg.has_edge(b, a))
    });
    if groups.len() < 2 {
        return None;
    }
    let ok = groups.iter().all(|g| {
        g.iter().any(|a| dfg.start.contains(a)) && g.iter().any(|a| dfg.end.contains(a))
    });
    ok.then(|| sort_groups(groups))
}

/// Loop cut: the do-part contains all start and end activities; the remaining
/// components are redo-parts if they re-enter only via start activities and
/// are entered only from end activities.
fn loop_cut(dfg: &Dfg) -> Option<Vec<BTreeSet<String>>> {
    let mut body: BTreeSet<String> = dfg.start.union(&dfg.end).cloned().collect();
    let rest: BTreeSet<String> = dfg.activities.difference(&body).cloned().collect();
    if rest.is_empty() {
        return None;
    }
    let mut candidates = components(&rest, |a, b| dfg.has_edge(a, b));
    // Components violating the redo conditions merge into the do-part.
    loop {
        let mut changed = false;
        candidates.retain(|comp| {
            let valid = comp.iter().all(|r| {
                dfg.edges.iter().all(|(x, y)| {
                    let into = y == r && body.contains(x);
                    let outof = x == r && body.contains(y);
                    (!into || dfg.end.contains(x)) && (!outof || dfg.start.contains(y))
                })
            });
            if !valid {
                body.extend(comp.iter().cloned());
                changed = true;
            }
            valid
        });
        if !changed {
            break;
        }
        // Body grew: previously valid components may now touch non-end/non-start
        // body activities, so re-check from scratch.
    }
    if candidates.is_empty() {
        return None;
    }
    let mut groups = vec![body];
    groups.extend(sort_groups(candidates));
    Some(groups)
}

fn group_index(groups: &[BTreeSet<String>], a: &str) -> usize {
    groups
        .iter()
        .position(|g| g.contains(a))
        .expect("cut groups partition the alphabet")
}

/// The inductive miner.
pub fn inductive_miner(log: &SimpleEventLog) -> ProcessTree {
    mine(log.traces.clone())
}

fn mine(traces: Vec<Vec<String>>) -> ProcessTree {
    if traces.is_empty() || traces.iter().all(|t| t.is_empty()) {
        return ProcessTree::Tau;
    }
    if traces.iter().any(|t| t.is_empty()) {
        let nonempty: Vec<Vec<String>> = traces.into_iter().filter(|t| !t.is_empty()).collect();
        return ProcessTree::Xor(vec![ProcessTree::Tau, mine(nonempty)]);
    }
    // Base case: every trace is the same single activity, once.
    let alphabet: BTreeSet<&String> = traces.iter().flatten().collect();
    if alphabet.len() == 1 && traces.iter().all(|t| t.len() == 1) {
        return ProcessTree::Leaf((*alphabet.iter().next().unwrap()).clone());
    }
    let dfg = Dfg::from_log(&SimpleEventLog::new(traces.clone()));
    if let Some(groups) = xor_cut(&dfg) {
        let children = groups
            .iter()
            .map(|g| {
                mine(
                    traces
                        .iter()
                        .filter(|t| g.contains(&t[0]))
                        .cloned()
                        .collect(),
                )
            })
            .collect();
        return ProcessTree::Xor(children);
    }
    if let Some(groups) = seq_cut(&dfg) {
        let children = groups
            .iter()
            .map(|g| {
                mine(
                    traces
                        .iter()
                        .map(|t| t.iter().filter(|a| g.contains(*a)).cloned().collect())
                        .collect(),
                )
            })
            .collect();
        return ProcessTree::Seq(children);
    }
    if let Some(groups) = and_cut(&dfg) {
        let children = groups
            .iter()
            .map(|g| {
                mine(
                    traces
                        .iter()
                        .map(|t| t.iter().filter(|a| g.contains(*a)).cloned().collect())
                        .collect(),
                )
            })
            .collect();
        return ProcessTree::And(children);
    }
    if let Some(groups) = loop_cut(&dfg) {
        // Split every trace into maximal segments per group; segment logs feed
        // the do-child (group 0) and the redo-children.
        let mut sublogs: Vec<Vec<Vec<String>>> = vec![Vec::new(); groups.len()];
        for t in &traces {
            let mut seg_group = group_index(&groups, &t[0]);
            let mut seg: Vec<String> = Vec::new();
            for a in t {
                let g = group_index(&groups, a);
                if g != seg_group {
                    sublogs[seg_group].push(std::mem::take(&mut seg));
                    // Passing between two redo groups without touching the
                    // do-part would mean a DFG edge between them, which would
                    // have merged the components; so alternation with the
                    // do-part is guaranteed.
                    seg_group = g;
                }
                seg.push(a.clone());
            }
            sublogs[seg_group].push(seg);
            // Traces start with a start activity and end with an end activity,
            // both in the do-part, so the first and last segments are do-segments.
        }
        let children = sublogs.into_iter().map(mine).collect();
        return ProcessTree::Loop(children);
    }
    // Flower fallback.
    let mut children = vec![ProcessTree::Tau];
    children.extend(
        alphabet
            .into_iter()
            .map(|a| ProcessTree::Leaf(a.clone())),
    );
    ProcessTree::Loop(children)
}

/// Translates a process tree into a workflow net.
///
/// Node ids are namespaced by `ns`: places `"{ns}p{k}"`, silent transitions
/// `"{ns}tau{k}"`, and visible transitions `"{ns}{activity}"`. Loop nodes are
/// translated without guard transitions wherever their entry/exit places are
/// private to the loop's context (sequence and parallel positions); guards are
/// inserted when the loop sits at the root or under an exclusive choice, where
/// redo arcs on shared places would change the language or break the
/// workflow-net structure.
pub fn tree_to_wf_net(tree: &ProcessTree, ns: &str) -> Net {
    let mut b = Builder { net: Net::default(), ns: ns.to_string(), places: 0, taus: 0 };
    let source = b.fresh_place();
    let sink = b.fresh_place();
    b.build(tree, source, sink, true, true);
    b.net.m_init.insert(source, 1);
    b.net.m_final.insert(sink, 1);
    b.net
}

struct Builder {
    net: Net,
    ns: String,
    places: usize,
    taus: usize,
}

impl Builder {
    fn fresh_place(&mut self) -> usize {
        let id = format!("{}p{}", self.ns, self.places);
        self.places += 1;
        self.net.add_place(id)
    }

    fn silent(&mut self, pre: BTreeSet<usize>, post: BTreeSet<usize>) {
        let id = format!("{}tau{}", self.ns, self.taus);
        self.taus += 1;
        self.net.add_transition(id, None, pre, post);
    }

    /// Builds `node` between `pin` and `pout`. The protection flags say whether
    /// the respective place is shared with siblings (XOR) or is the net
    /// source/sink, in which case loops must not attach redo arcs to it.
    fn build(&mut self, node: &ProcessTree, pin: usize, pout: usize, pin_prot: bool, pout_prot: bool) {
        match node {
            ProcessTree::Leaf(a) => {
                let id = format!("{}{}", self.ns, a);
                self.net.add_transition(
                    id,
                    Some(a.clone()),
                    BTreeSet::from([pin]),
                    BTreeSet::from([pout]),
                );
            }
            ProcessTree::Tau => self.silent(BTreeSet::from([pin]), BTreeSet::from([pout])),
            ProcessTree::Seq(cs) => {
                let mut current = pin;
                for (i, c) in cs.iter().enumerate() {
                    let last = i + 1 == cs.len();
                    let next = if last { pout } else { self.fresh_place() };
                    self.build(
                        c,
                        current,
                        next,
                        if i == 0 { pin_prot } else { false },
                        if last { pout_prot } else { false },
                    );
                    current = next;
                }
            }
            ProcessTree::Xor(cs) => {
                for c in cs {
                    self.build(c, pin, pout, true, true);
                }
            }
            ProcessTree::And(cs) => {
                let mut entries = BTreeSet::new();
                let mut exits = BTreeSet::new();
                let mut bounds = Vec::new();
                for _ in cs {
                    let e = self.fresh_place();
                    let x = self.fresh_place();
                    entries.insert(e);
                    exits.insert(x);
                    bounds.push((e, x));
                }
                self.silent(BTreeSet::from([pin]), entries);
                self.silent(exits, BTreeSet::from([pout]));
                for (c, (e, x)) in cs.iter().zip(bounds) {
                    self.build(c, e, x, false, false);
                }
            }
            ProcessTree::Loop(cs) => {
                let pa = if pin_prot {
                    let pa = self.fresh_place();
                    self.silent(BTreeSet::from([pin]), BTreeSet::from([pa]));
                    pa
                } else {
                    pin
                };
                let pb = if pout_prot {
                    let pb = self.fresh_place();
                    self.silent(BTreeSet::from([pb]), BTreeSet::from([pout]));
                    pb
                } else {
                    pout
                };
                self.build(&cs[0], pa, pb, false, false);
                for redo in &cs[1..] {
                    self.build(redo, pb, pa, false, false);
                }
            }
        }
    }
}
