//! Classical place/transition nets, workflow-net checks, soundness, and token replay.
//!
//! Markings are multisets of places. Soundness is decided by explicit state-space
//! exploration with a configurable marking cap; hitting the cap yields an
//! `Unknown` verdict instead of a wrong answer.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use thiserror::Error;

/// Default exploration cap (number of distinct markings).
pub const DEFAULT_MAX_MARKINGS: usize = 100_000;

/// A transition: silent iff `label` is `None`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub id: String,
    pub label: Option<String>,
}

impl Transition {
    pub fn is_silent(&self) -> bool {
        self.label.is_none()
    }
}

/// Multiset of places, keyed by place index.
pub type Marking = BTreeMap<usize, u32>;

/// Errors raised while building or parsing a net.
#[derive(Debug, Error)]
pub enum NetError {
    #[error("malformed net document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("duplicate node id {0:?}")]
    DuplicateNode(String),
    #[error("arc endpoint {0:?} is not a known node id")]
    UnknownNode(String),
    #[error("arc ({0:?}, {1:?}) does not connect a place and a transition")]
    NotBipartite(String, String),
    #[error("marking references unknown place {0:?}")]
    UnknownPlace(String),
}

/// A place/transition net with initial and final markings.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Net {
    pub places: Vec<String>,
    pub transitions: Vec<Transition>,
    /// `pre[t]` = input places of transition `t`.
    pub pre: Vec<BTreeSet<usize>>,
    /// `post[t]` = output places of transition `t`.
    pub post: Vec<BTreeSet<usize>>,
    pub m_init: Marking,
    pub m_final: Marking,
}

/// Soundness verdict of a bounded exploration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Soundness {
    Sound,
    /// A witness explains which property failed.
    Unsound(UnsoundWitness),
    /// The exploration cap was hit before a verdict was certain.
    Unknown(String),
}

/// Explanation attached to an `Unsound` verdict.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct UnsoundWitness {
    pub reason: String,
    /// Transition ids that can never fire.
    pub dead_transitions: Vec<String>,
    /// Transition ids that fired somewhere in the explored state space.
    pub fired_transitions: Vec<String>,
    /// A reachable marking (place ids with counts) from which the final
    /// marking is unreachable, if that is the failure.
    pub stuck_marking: Option<Vec<(String, u32)>>,
}

impl Net {
    pub fn add_place(&mut self, id: impl Into<String>) -> usize {
        self.places.push(id.into());
        self.places.len() - 1
    }

    pub fn add_transition(
        &mut self,
        id: impl Into<String>,
        label: Option<String>,
        pre: BTreeSet<usize>,
        post: BTreeSet<usize>,
    ) -> usize {
        self.transitions.push(Transition { id: id.into(), label });
        self.pre.push(pre);
        self.post.push(post);
        self.transitions.len() - 1
    }

    pub fn place_index(&self, id: &str) -> Option<usize> {
        self.places.iter().position(|p| p == id)
    }

    pub fn transition_index(&self, id: &str) -> Option<usize> {
        self.transitions.iter().position(|t| t.id == id)
    }

    /// Input transitions of a place.
    pub fn place_pre(&self, p: usize) -> BTreeSet<usize> {
        (0..self.transitions.len())
            .filter(|&t| self.post[t].contains(&p))
            .collect()
    }

    /// Output transitions of a place.
    pub fn place_post(&self, p: usize) -> BTreeSet<usize> {
        (0..self.transitions.len())
            .filter(|&t| self.pre[t].contains(&p))
            .collect()
    }

    fn enabled(&self, m: &Marking, t: usize) -> bool {
        self.pre[t].iter().all(|p| m.get(p).copied().unwrap_or(0) >= 1)
    }

    fn fire(&self, m: &Marking, t: usize) -> Marking {
        let mut out = m.clone();
        for p in &self.pre[t] {
            let c = out.get_mut(p).expect("enabled transition consumes present token");
            *c -= 1;
            if *c == 0 {
                out.remove(p);
            }
        }
        for p in &self.post[t] {
            *out.entry(*p).or_insert(0) += 1;
        }
        out
    }

    /// Workflow-net check: unique source place (empty preset), unique sink place
    /// (empty postset), and every node on a path from source to sink.
    pub fn is_wf_net(&self) -> bool {
        self.wf_net_sources_sinks().is_some()
    }

    /// Source and sink place indices if the net is a WF-net.
    pub fn wf_net_sources_sinks(&self) -> Option<(usize, usize)> {
        let sources: Vec<usize> = (0..self.places.len())
            .filter(|&p| self.place_pre(p).is_empty())
            .collect();
        let sinks: Vec<usize> = (0..self.places.len())
            .filter(|&p| self.place_post(p).is_empty())
            .collect();
        let (&[source], &[sink]) = (&sources[..], &sinks[..]) else {
            return None;
        };
        if source == sink && self.transitions.is_empty() {
            return None;
        }
        // Graph reachability over nodes (places 0..P, transitions P..P+T).
        let np = self.places.len();
        let node_count = np + self.transitions.len();
        let mut fwd = vec![Vec::new(); node_count];
        let mut bwd = vec![Vec::new(); node_count];
        for t in 0..self.transitions.len() {
            for &p in &self.pre[t] {
                fwd[p].push(np + t);
                bwd[np + t].push(p);
            }
            for &p in &self.post[t] {
                fwd[np + t].push(p);
                bwd[p].push(np + t);
            }
        }
        let reach = |start: usize, adj: &Vec<Vec<usize>>| -> Vec<bool> {
            let mut seen = vec![false; node_count];
            let mut queue = VecDeque::from([start]);
            seen[start] = true;
            while let Some(x) = queue.pop_front() {
                for &y in &adj[x] {
                    if !seen[y] {
                        seen[y] = true;
                        queue.push_back(y);
                    }
                }
            }
            seen
        };
        let from_source = reach(source, &fwd);
        let to_sink = reach(sink, &bwd);
        let all_on_path = (0..node_count).all(|x| from_source[x] && to_sink[x]);
        all_on_path.then_some((source, sink))
    }

    /// Classical soundness: option to complete, proper completion, and no dead
    /// transitions, decided by exploration from `m_init` capped at
    /// `max_markings` distinct markings.
    pub fn soundness(&self, max_markings: usize) -> Soundness {
        let mut states: BTreeMap<Marking, usize> = BTreeMap::new();
        let mut list: Vec<Marking> = Vec::new();
        let mut edges: Vec<Vec<(usize, usize)>> = Vec::new(); // state -> (transition, state)
        let mut queue = VecDeque::new();
        states.insert(self.m_init.clone(), 0);
        list.push(self.m_init.clone());
        edges.push(Vec::new());
        queue.push_back(0usize);
        let mut fired: BTreeSet<usize> = BTreeSet::new();
        while let Some(s) = queue.pop_front() {
            let m = list[s].clone();
            for t in 0..self.transitions.len() {
                if !self.enabled(&m, t) {
                    continue;
                }
                fired.insert(t);
                let m2 = self.fire(&m, t);
                let next = *states.entry(m2.clone()).or_insert_with(|| {
                    list.push(m2.clone());
                    edges.push(Vec::new());
                    queue.push_back(list.len() - 1);
                    list.len() - 1
                });
                edges[s].push((t, next));
            }
            if states.len() > max_markings {
                return Soundness::Unknown(format!(
                    "exploration cap of {max_markings} markings exceeded"
                ));
            }
        }
        let fired_ids: Vec<String> =
            fired.iter().map(|&t| self.transitions[t].id.clone()).collect();
        // Proper completion: no reachable marking strictly covers m_final.
        for m in &list {
            let covers = self
                .m_final
                .iter()
                .all(|(p, c)| m.get(p).copied().unwrap_or(0) >= *c);
            if covers && m != &self.m_final {
                return Soundness::Unsound(UnsoundWitness {
                    reason: "a reachable marking strictly covers the final marking".into(),
                    fired_transitions: fired_ids,
                    stuck_marking: Some(self.marking_ids(m)),
                    ..Default::default()
                });
            }
        }
        // Option to complete: every reachable marking can still reach m_final.
        let Some(&final_state) = states.get(&self.m_final) else {
            return Soundness::Unsound(UnsoundWitness {
                reason: "the final marking is unreachable".into(),
                fired_transitions: fired_ids,
                stuck_marking: Some(self.marking_ids(&self.m_init)),
                ..Default::default()
            });
        };
        let mut redges = vec![Vec::new(); list.len()];
        for (s, outs) in edges.iter().enumerate() {
            for &(_, d) in outs {
                redges[d].push(s);
            }
        }
        let mut can_finish = vec![false; list.len()];
        let mut queue = VecDeque::from([final_state]);
        can_finish[final_state] = true;
        while let Some(s) = queue.pop_front() {
            for &p in &redges[s] {
                if !can_finish[p] {
                    can_finish[p] = true;
                    queue.push_back(p);
                }
            }
        }
        if let Some(stuck) = (0..list.len()).find(|&s| !can_finish[s]) {
            return Soundness::Unsound(UnsoundWitness {
                reason: "a reachable marking cannot complete to the final marking".into(),
                fired_transitions: fired_ids,
                stuck_marking: Some(self.marking_ids(&list[stuck])),
                ..Default::default()
            });
        }
        let dead: Vec<String> = (0..self.transitions.len())
            .filter(|t| !fired.contains(t))
            .map(|t| self.transitions[t].id.clone())
            .collect();
        if !dead.is_empty() {
            return Soundness::Unsound(UnsoundWitness {
                reason: "the net contains dead transitions".into(),
                dead_transitions: dead,
                fired_transitions: fired_ids,
                stuck_marking: None,
            });
        }
        Soundness::Sound
    }

    fn marking_ids(&self, m: &Marking) -> Vec<(String, u32)> {
        m.iter().map(|(&p, &c)| (self.places[p].clone(), c)).collect()
    }

    /// Token replay of a single activity trace: silent transitions may fire
    /// freely between (and after) the visible steps; success requires ending
    /// exactly in `m_final`. Bounded breadth-first search.
    pub fn replays_trace(&self, trace: &[String], max_markings: usize) -> bool {
        let mut frontier: BTreeSet<Marking> = BTreeSet::from([self.m_init.clone()]);
        for step in trace {
            frontier = self.silent_closure(frontier, max_markings);
            let mut next: BTreeSet<Marking> = BTreeSet::new();
            for m in &frontier {
                for t in 0..self.transitions.len() {
                    if self.transitions[t].label.as_deref() == Some(step.as_str())
                        && self.enabled(m, t)
                    {
                        next.insert(self.fire(m, t));
                    }
                }
            }
            if next.is_empty() {
                return false;
            }
            frontier = next;
        }
        self.silent_closure(frontier, max_markings).contains(&self.m_final)
    }

    /// All markings reachable from `frontier` by silent transitions only
    /// (including the frontier itself), bounded by `max_markings`.
    fn silent_closure(
        &self,
        frontier: BTreeSet<Marking>,
        max_markings: usize,
    ) -> BTreeSet<Marking> {
        let mut seen = frontier.clone();
        let mut queue: VecDeque<Marking> = frontier.into_iter().collect();
        while let Some(m) = queue.pop_front() {
            if seen.len() > max_markings {
                break;
            }
            for t in 0..self.transitions.len() {
                if self.transitions[t].is_silent() && self.enabled(&m, t) {
                    let m2 = self.fire(&m, t);
                    if seen.insert(m2.clone()) {
                        queue.push_back(m2);
                    }
                }
            }
        }
        seen
    }

    /// Parses the JSON interchange format.
    pub fn from_json_str(s: &str) -> Result<Self, NetError> {
        let doc: NetDoc = serde_json::from_str(s)?;
        doc.into_net()
    }

    /// Serializes to the JSON interchange format.
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&NetDoc::from_net(self))
            .expect("net serialization cannot fail")
    }
}

#[derive(Serialize, Deserialize)]
struct PlaceDoc {
    id: String,
}

#[derive(Serialize, Deserialize)]
pub(crate) struct NetDoc {
    places: Vec<PlaceDoc>,
    transitions: Vec<Transition>,
    arcs: Vec<(String, String)>,
    m_init: BTreeMap<String, u32>,
    m_final: BTreeMap<String, u32>,
}

impl NetDoc {
    fn from_net(net: &Net) -> Self {
        let mut arcs = Vec::new();
        for t in 0..net.transitions.len() {
            for &p in &net.pre[t] {
                arcs.push((net.places[p].clone(), net.transitions[t].id.clone()));
            }
            for &p in &net.post[t] {
                arcs.push((net.transitions[t].id.clone(), net.places[p].clone()));
            }
        }
        arcs.sort();
        let ids = |m: &Marking| {
            m.iter()
                .map(|(&p, &c)| (net.places[p].clone(), c))
                .collect::<BTreeMap<_, _>>()
        };
        NetDoc {
            places: net.places.iter().map(|p| PlaceDoc { id: p.clone() }).collect(),
            transitions: net.transitions.clone(),
            arcs,
            m_init: ids(&net.m_init),
            m_final: ids(&net.m_final),
        }
    }

    fn into_net(self) -> Result<Net, NetError> {
        let mut net = Net::default();
        let mut seen: BTreeSet<String> = BTreeSet::new();
        for p in &self.places {
            if !seen.insert(p.id.clone()) {
                return Err(NetError::DuplicateNode(p.id.clone()));
            }
            net.add_place(p.id.clone());
        }
        for t in &self.transitions {
            if !seen.insert(t.id.clone()) {
                return Err(NetError::DuplicateNode(t.id.clone()));
            }
            net.add_transition(t.id.clone(), t.label.clone(), BTreeSet::new(), BTreeSet::new());
        }
        for (from, to) in &self.arcs {
            let fp = net.place_index(from);
            let tp = net.place_index(to);
            let ft = net.transition_index(from);
            let tt = net.transition_index(to);
            match (fp, tt, ft, tp) {
                (Some(p), Some(t), _, _) => {
                    net.pre[t].insert(p);
                }
                (_, _, Some(t), Some(p)) => {
                    net.post[t].insert(p);
                }
                _ if fp.is_none() && ft.is_none() => {
                    return Err(NetError::UnknownNode(from.clone()))
                }
                _ if tp.is_none() && tt.is_none() => {
                    return Err(NetError::UnknownNode(to.clone()))
                }
                _ => return Err(NetError::NotBipartite(from.clone(), to.clone())),
            }
        }
        for (marking, doc) in [(&mut net.m_init, &self.m_init), (&mut net.m_final, &self.m_final)]
        {
            for (pid, &c) in doc {
                let p = net
                    .places
                    .iter()
                    .position(|x| x == pid)
                    .ok_or_else(|| NetError::UnknownPlace(pid.clone()))?;
                marking.insert(p, c);
            }
        }
        Ok(net)
    }
}
