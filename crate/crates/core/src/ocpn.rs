//! Object-centric Petri nets: typed places, variable arcs, binding semantics,
//! object-centric workflow-net checks, soundness, and log replay.
//!
//! A marking is a multiset of `(place, object)` tokens where the object's type
//! matches the place type. A binding assigns to every adjacent object type a
//! set of objects: exactly one for non-variable types, a nonempty set for
//! variable types. Soundness is decided over the binding-execution state space
//! with the fixed object population of the initial marking.

use crate::ocel::{EventLog, ObjectId, ObjectType};
use crate::petri::{Net, Soundness, Transition, UnsoundWitness};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use thiserror::Error;

/// Default cap on enumerated subsets per variable-adjacent type.
pub const DEFAULT_MAX_BINDING_SUBSETS: usize = 256;

/// A typed place.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OcPlace {
    pub id: String,
    pub object_type: ObjectType,
}

/// Multiset of `(place, object)` tokens.
pub type OcMarking = BTreeMap<(usize, ObjectId), u32>;

/// Object population by type.
pub type Population = BTreeMap<ObjectType, BTreeSet<ObjectId>>;

/// A transition together with a concrete object assignment.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Binding {
    pub transition: usize,
    pub assignment: BTreeMap<ObjectType, BTreeSet<ObjectId>>,
}

/// Errors raised while building or parsing an object-centric net.
#[derive(Debug, Error)]
pub enum OcpnError {
    #[error("malformed net document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("duplicate node id {0:?}")]
    DuplicateNode(String),
    #[error("arc endpoint {0:?} is not a known node id")]
    UnknownNode(String),
    #[error("arc ({0:?}, {1:?}) does not connect a place and a transition")]
    NotBipartite(String, String),
    #[error("place {0:?} has no declared type")]
    UntypedPlace(String),
    #[error("variable arc ({0:?}, {1:?}) does not exist in the net")]
    UnknownVariableArc(String, String),
    #[error("marking references unknown place {0:?}")]
    UnknownPlace(String),
}

/// An object-centric Petri net with initial and final markings.
#[derive(Debug, Clone, PartialEq)]
pub struct Ocpn {
    pub places: Vec<OcPlace>,
    pub transitions: Vec<Transition>,
    /// `pre[t]` = input places of transition `t`.
    pub pre: Vec<BTreeSet<usize>>,
    /// `post[t]` = output places of transition `t`.
    pub post: Vec<BTreeSet<usize>>,
    /// Variable input arcs `(transition, place)`.
    pub var_pre: BTreeSet<(usize, usize)>,
    /// Variable output arcs `(transition, place)`.
    pub var_post: BTreeSet<(usize, usize)>,
    pub m_init: OcMarking,
    pub m_final: OcMarking,
}

impl Default for Ocpn {
    fn default() -> Self {
        Ocpn {
            places: Vec::new(),
            transitions: Vec::new(),
            pre: Vec::new(),
            post: Vec::new(),
            var_pre: BTreeSet::new(),
            var_post: BTreeSet::new(),
            m_init: BTreeMap::new(),
            m_final: BTreeMap::new(),
        }
    }
}

/// Outcome of replaying a log on a net.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayReport {
    pub success: bool,
    /// Id of the first event with no enabled firing, if any.
    pub first_failing_event: Option<String>,
    /// `(event id, had an enabled firing)` in replay order. Events after the
    /// first failure are not attempted.
    pub event_results: Vec<(String, bool)>,
}

impl Ocpn {
    pub fn add_place(&mut self, id: impl Into<String>, object_type: impl Into<String>) -> usize {
        self.places.push(OcPlace { id: id.into(), object_type: object_type.into() });
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
        self.places.iter().position(|p| p.id == id)
    }

    pub fn transition_index(&self, id: &str) -> Option<usize> {
        self.transitions.iter().position(|t| t.id == id)
    }

    /// Object types adjacent to transition `t` (types of its pre/post places).
    pub fn adjacent_types(&self, t: usize) -> BTreeSet<ObjectType> {
        self.pre[t]
            .iter()
            .chain(self.post[t].iter())
            .map(|&p| self.places[p].object_type.clone())
            .collect()
    }

    /// Types with at least one variable arc at `t`.
    pub fn variable_types(&self, t: usize) -> BTreeSet<ObjectType> {
        let mut out = BTreeSet::new();
        for &(tt, p) in self.var_pre.iter().chain(self.var_post.iter()) {
            if tt == t {
                out.insert(self.places[p].object_type.clone());
            }
        }
        out
    }

    /// Types with at least one non-variable arc at `t`.
    pub fn non_variable_types(&self, t: usize) -> BTreeSet<ObjectType> {
        let mut out = BTreeSet::new();
        for &p in &self.pre[t] {
            if !self.var_pre.contains(&(t, p)) {
                out.insert(self.places[p].object_type.clone());
            }
        }
        for &p in &self.post[t] {
            if !self.var_post.contains(&(t, p)) {
                out.insert(self.places[p].object_type.clone());
            }
        }
        out
    }

    /// Well-formedness: no transition has a type that is adjacent through both
    /// a variable and a non-variable arc.
    pub fn is_well_formed(&self) -> bool {
        (0..self.transitions.len())
            .all(|t| self.variable_types(t).is_disjoint(&self.non_variable_types(t)))
    }

    /// Input places of `t` with the given type.
    fn typed_inputs(&self, t: usize, ot: &str) -> Vec<usize> {
        self.pre[t]
            .iter()
            .copied()
            .filter(|&p| self.places[p].object_type == ot)
            .collect()
    }

    /// Objects of type `ot` that are present in every place of `inputs` under `m`.
    fn available(&self, m: &OcMarking, inputs: &[usize], ot: &str, population: &Population) -> BTreeSet<ObjectId> {
        if inputs.is_empty() {
            return population.get(ot).cloned().unwrap_or_default();
        }
        let mut candidates: Option<BTreeSet<ObjectId>> = None;
        for &p in inputs {
            let here: BTreeSet<ObjectId> = m
                .iter()
                .filter(|(&(pp, _), &c)| pp == p && c > 0)
                .map(|((_, o), _)| o.clone())
                .collect();
            candidates = Some(match candidates {
                None => here,
                Some(prev) => prev.intersection(&here).cloned().collect(),
            });
        }
        candidates.unwrap_or_default()
    }

    /// All bindings of all transitions enabled in `m`.
    ///
    /// Variable types range over nonempty subsets of the available objects,
    /// capped at `max_subsets` subsets per type.
    pub fn enabled_bindings(
        &self,
        m: &OcMarking,
        population: &Population,
        max_subsets: usize,
    ) -> Vec<Binding> {
        let mut out = Vec::new();
        for t in 0..self.transitions.len() {
            let variable = self.variable_types(t);
            let mut per_type: Vec<(ObjectType, Vec<BTreeSet<ObjectId>>)> = Vec::new();
            let mut possible = true;
            for ot in self.adjacent_types(t) {
                let inputs = self.typed_inputs(t, &ot);
                let avail = self.available(m, &inputs, &ot, population);
                let options: Vec<BTreeSet<ObjectId>> = if variable.contains(&ot) {
                    nonempty_subsets(&avail, max_subsets)
                } else {
                    avail.iter().map(|o| BTreeSet::from([o.clone()])).collect()
                };
                if options.is_empty() {
                    possible = false;
                    break;
                }
                per_type.push((ot, options));
            }
            if !possible {
                continue;
            }
            let mut partial: Vec<BTreeMap<ObjectType, BTreeSet<ObjectId>>> =
                vec![BTreeMap::new()];
            for (ot, options) in per_type {
                let mut next = Vec::new();
                for base in &partial {
                    for opt in &options {
                        let mut b = base.clone();
                        b.insert(ot.clone(), opt.clone());
                        next.push(b);
                    }
                }
                partial = next;
            }
            for assignment in partial {
                out.push(Binding { transition: t, assignment });
            }
        }
        out
    }

    /// Fires a binding: consumes `b(ot)` from every ot-typed input place and
    /// produces `b(ot)` into every ot-typed output place. Panics if not enabled
    /// (callers obtain bindings from `enabled_bindings`).
    pub fn fire_binding(&self, m: &OcMarking, b: &Binding) -> OcMarking {
        let mut out = m.clone();
        let t = b.transition;
        for &p in &self.pre[t] {
            let ot = &self.places[p].object_type;
            if let Some(objs) = b.assignment.get(ot) {
                for o in objs {
                    let c = out
                        .get_mut(&(p, o.clone()))
                        .expect("enabled binding consumes a present token");
                    *c -= 1;
                    if *c == 0 {
                        out.remove(&(p, o.clone()));
                    }
                }
            }
        }
        for &p in &self.post[t] {
            let ot = &self.places[p].object_type;
            if let Some(objs) = b.assignment.get(ot) {
                for o in objs {
                    *out.entry((p, o.clone())).or_insert(0) += 1;
                }
            }
        }
        out
    }

    /// Object population of a marking.
    pub fn population_of(&self, m: &OcMarking) -> Population {
        let mut pop: Population = BTreeMap::new();
        for ((p, o), _) in m {
            pop.entry(self.places[*p].object_type.clone())
                .or_default()
                .insert(o.clone());
        }
        pop
    }

    /// Object types of the net's places.
    pub fn object_types(&self) -> BTreeSet<ObjectType> {
        self.places.iter().map(|p| p.object_type.clone()).collect()
    }

    /// Projection onto one object type: its places, the transitions adjacent to
    /// them, and the arcs between the two; markings restricted to that type.
    pub fn project(&self, ot: &str) -> Net {
        let mut net = Net::default();
        let mut pmap: BTreeMap<usize, usize> = BTreeMap::new();
        for (p, place) in self.places.iter().enumerate() {
            if place.object_type == ot {
                pmap.insert(p, net.add_place(place.id.clone()));
            }
        }
        for t in 0..self.transitions.len() {
            let pre: BTreeSet<usize> = self.pre[t]
                .iter()
                .filter_map(|p| pmap.get(p).copied())
                .collect();
            let post: BTreeSet<usize> = self.post[t]
                .iter()
                .filter_map(|p| pmap.get(p).copied())
                .collect();
            if !pre.is_empty() || !post.is_empty() {
                net.add_transition(
                    self.transitions[t].id.clone(),
                    self.transitions[t].label.clone(),
                    pre,
                    post,
                );
            }
        }
        for ((p, _), c) in &self.m_init {
            if let Some(&np) = pmap.get(p) {
                *net.m_init.entry(np).or_insert(0) += c;
            }
        }
        for ((p, _), c) in &self.m_final {
            if let Some(&np) = pmap.get(p) {
                *net.m_final.entry(np).or_insert(0) += c;
            }
        }
        net
    }

    /// Object-centric workflow net: every type projection is a workflow net and
    /// the whole net is weakly connected.
    pub fn is_oc_wf_net(&self) -> bool {
        self.object_types().iter().all(|ot| self.project(ot).is_wf_net())
            && self.is_weakly_connected()
    }

    fn is_weakly_connected(&self) -> bool {
        let np = self.places.len();
        let n = np + self.transitions.len();
        if n == 0 {
            return true;
        }
        let mut adj = vec![Vec::new(); n];
        for t in 0..self.transitions.len() {
            for &p in self.pre[t].iter().chain(self.post[t].iter()) {
                adj[p].push(np + t);
                adj[np + t].push(p);
            }
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(x) = queue.pop_front() {
            for &y in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    count += 1;
                    queue.push_back(y);
                }
            }
        }
        count == n
    }

    /// Object-centric soundness relative to the object population of `m_init`:
    /// (a) the initial/final markings mark only source/sink places,
    /// (b) every reachable marking can still reach `m_final` exactly,
    /// (c) no transition is dead.
    pub fn is_oc_sound(&self, max_markings: usize, max_subsets: usize) -> Soundness {
        // (a) structural marking check.
        for (&(p, _), _) in &self.m_init {
            if !self.place_has_empty_preset(p) {
                return Soundness::Unsound(UnsoundWitness {
                    reason: format!(
                        "initial marking marks non-source place {:?}",
                        self.places[p].id
                    ),
                    ..Default::default()
                });
            }
        }
        for (&(p, _), _) in &self.m_final {
            if !self.place_has_empty_postset(p) {
                return Soundness::Unsound(UnsoundWitness {
                    reason: format!(
                        "final marking marks non-sink place {:?}",
                        self.places[p].id
                    ),
                    ..Default::default()
                });
            }
        }
        let population = self.population_of(&self.m_init);
        let mut states: BTreeMap<OcMarking, usize> = BTreeMap::new();
        let mut list: Vec<OcMarking> = Vec::new();
        let mut edges: Vec<Vec<(usize, usize)>> = Vec::new();
        states.insert(self.m_init.clone(), 0);
        list.push(self.m_init.clone());
        edges.push(Vec::new());
        let mut queue = VecDeque::from([0usize]);
        let mut fired: BTreeSet<usize> = BTreeSet::new();
        while let Some(s) = queue.pop_front() {
            let m = list[s].clone();
            for b in self.enabled_bindings(&m, &population, max_subsets) {
                fired.insert(b.transition);
                let m2 = self.fire_binding(&m, &b);
                let next = *states.entry(m2.clone()).or_insert_with(|| {
                    list.push(m2);
                    edges.push(Vec::new());
                    queue.push_back(list.len() - 1);
                    list.len() - 1
                });
                edges[s].push((b.transition, next));
            }
            if states.len() > max_markings {
                return Soundness::Unknown(format!(
                    "exploration cap of {max_markings} markings exceeded"
                ));
            }
        }
        let fired_ids: Vec<String> =
            fired.iter().map(|&t| self.transitions[t].id.clone()).collect();
        let Some(&final_state) = states.get(&self.m_final) else {
            return Soundness::Unsound(UnsoundWitness {
                reason: "the final marking is unreachable".into(),
                fired_transitions: fired_ids,
                dead_transitions: self.never_fired(&fired),
                stuck_marking: Some(self.marking_ids(&self.m_init)),
            });
        };
        let mut redges = vec![Vec::new(); list.len()];
        for (s, outs) in edges.iter().enumerate() {
            for &(_, d) in outs {
                redges[d].push(s);
            }
        }
        let mut can_finish = vec![false; list.len()];
        let mut bfs = VecDeque::from([final_state]);
        can_finish[final_state] = true;
        while let Some(s) = bfs.pop_front() {
            for &p in &redges[s] {
                if !can_finish[p] {
                    can_finish[p] = true;
                    bfs.push_back(p);
                }
            }
        }
        if let Some(stuck) = (0..list.len()).find(|&s| !can_finish[s]) {
            return Soundness::Unsound(UnsoundWitness {
                reason: "a reachable marking cannot complete to the final marking".into(),
                fired_transitions: fired_ids,
                dead_transitions: self.never_fired(&fired),
                stuck_marking: Some(self.marking_ids(&list[stuck])),
            });
        }
        let dead = self.never_fired(&fired);
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

    fn never_fired(&self, fired: &BTreeSet<usize>) -> Vec<String> {
        (0..self.transitions.len())
            .filter(|t| !fired.contains(t))
            .map(|t| self.transitions[t].id.clone())
            .collect()
    }

    fn marking_ids(&self, m: &OcMarking) -> Vec<(String, u32)> {
        m.iter()
            .map(|((p, o), &c)| (format!("{}[{}]", self.places[*p].id, o), c))
            .collect()
    }

    fn place_has_empty_preset(&self, p: usize) -> bool {
        (0..self.transitions.len()).all(|t| !self.post[t].contains(&p))
    }

    fn place_has_empty_postset(&self, p: usize) -> bool {
        (0..self.transitions.len()).all(|t| !self.pre[t].contains(&p))
    }

    /// Replays a log: events are taken in linearized order; each event fires a
    /// transition carrying its activity label. Types adjacent to the transition
    /// but absent from the event's omap are completed by borrowing an available
    /// object from the transition's input places (branching over candidates);
    /// if no candidate is available the type sits out of the firing. Silent
    /// transitions may fire freely between events. Success requires ending
    /// exactly in `m_final`.
    pub fn replay(&self, log: &EventLog, max_markings: usize, max_subsets: usize) -> ReplayReport {
        let population = self.population_of(&self.m_init);
        let mut frontier: BTreeSet<OcMarking> = BTreeSet::from([self.m_init.clone()]);
        let mut event_results = Vec::new();
        for event in log.events() {
            frontier = self.silent_closure(frontier, &population, max_markings, max_subsets);
            let mut next: BTreeSet<OcMarking> = BTreeSet::new();
            for m in &frontier {
                for t in 0..self.transitions.len() {
                    if self.transitions[t].label.as_deref() != Some(event.activity.as_str()) {
                        continue;
                    }
                    for assignment in self.replay_assignments(m, t, event, &population) {
                        let b = Binding { transition: t, assignment };
                        next.insert(self.fire_binding(m, &b));
                    }
                }
            }
            let ok = !next.is_empty();
            event_results.push((event.id.clone(), ok));
            if !ok {
                return ReplayReport {
                    success: false,
                    first_failing_event: Some(event.id.clone()),
                    event_results,
                };
            }
            frontier = next;
        }
        let closure = self.silent_closure(frontier, &population, max_markings, max_subsets);
        ReplayReport {
            success: closure.contains(&self.m_final),
            first_failing_event: None,
            event_results,
        }
    }

    /// Enabled assignments for replaying `event` through `t` at marking `m`.
    fn replay_assignments(
        &self,
        m: &OcMarking,
        t: usize,
        event: &crate::ocel::Event,
        population: &Population,
    ) -> Vec<BTreeMap<ObjectType, BTreeSet<ObjectId>>> {
        let variable = self.variable_types(t);
        let mut partial: Vec<BTreeMap<ObjectType, BTreeSet<ObjectId>>> = vec![BTreeMap::new()];
        for ot in self.adjacent_types(t) {
            let inputs = self.typed_inputs(t, &ot);
            let avail = self.available(m, &inputs, &ot, population);
            let options: Vec<Option<BTreeSet<ObjectId>>> = if event.touches(&ot) {
                // Mandatory: the event's objects must all be available.
                let objs = event.objects(&ot);
                let card_ok = if variable.contains(&ot) {
                    !objs.is_empty()
                } else {
                    objs.len() == 1
                };
                if card_ok && objs.iter().all(|o| avail.contains(o)) {
                    vec![Some(objs)]
                } else {
                    return Vec::new();
                }
            } else if avail.is_empty() {
                // Nothing to borrow: the type sits out of this firing.
                vec![None]
            } else if variable.contains(&ot) {
                vec![Some(avail)]
            } else {
                avail.iter().map(|o| Some(BTreeSet::from([o.clone()]))).collect()
            };
            let mut next = Vec::new();
            for base in &partial {
                for opt in &options {
                    let mut b = base.clone();
                    if let Some(objs) = opt {
                        b.insert(ot.clone(), objs.clone());
                    }
                    next.push(b);
                }
            }
            partial = next;
        }
        partial
    }

    /// Markings reachable from `frontier` by strict silent-transition bindings.
    fn silent_closure(
        &self,
        frontier: BTreeSet<OcMarking>,
        population: &Population,
        max_markings: usize,
        max_subsets: usize,
    ) -> BTreeSet<OcMarking> {
        let mut seen = frontier.clone();
        let mut queue: VecDeque<OcMarking> = frontier.into_iter().collect();
        while let Some(m) = queue.pop_front() {
            if seen.len() > max_markings {
                break;
            }
            for b in self.enabled_bindings(&m, population, max_subsets) {
                if !self.transitions[b.transition].is_silent() {
                    continue;
                }
                let m2 = self.fire_binding(&m, &b);
                if seen.insert(m2.clone()) {
                    queue.push_back(m2);
                }
            }
        }
        seen
    }

    /// Parses the JSON interchange format.
    pub fn from_json_str(s: &str) -> Result<Self, OcpnError> {
        let doc: OcpnDoc = serde_json::from_str(s)?;
        doc.into_ocpn()
    }

    /// Serializes to the JSON interchange format.
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&OcpnDoc::from_ocpn(self))
            .expect("net serialization cannot fail")
    }

    /// Graphviz DOT rendering: places as circles filled by a per-type colour,
    /// silent transitions as filled rectangles, variable arcs doubled, and
    /// final-marking places carrying a red superscript.
    pub fn to_dot(&self) -> String {
        const PALETTE: [&str; 8] = [
            "#a6cee3", "#b2df8a", "#fdbf6f", "#cab2d6", "#fb9a99", "#ffff99", "#1f78b4",
            "#33a02c",
        ];
        let types: Vec<ObjectType> = self.object_types().into_iter().collect();
        let colour = |ot: &str| {
            let i = types.iter().position(|t| t == ot).unwrap_or(0);
            PALETTE[i % PALETTE.len()]
        };
        let mut dot = String::from("digraph ocpn {\n  rankdir=LR;\n");
        let finals: BTreeSet<usize> = self.m_final.keys().map(|(p, _)| *p).collect();
        for (i, p) in self.places.iter().enumerate() {
            let sup = if finals.contains(&i) {
                "<font color=\"red\"><sup>f</sup></font>"
            } else {
                ""
            };
            dot.push_str(&format!(
                "  \"{}\" [shape=circle, style=filled, fillcolor=\"{}\", label=<{}{}>]\n",
                p.id,
                colour(&p.object_type),
                html_escape(&p.id),
                sup
            ));
        }
        for (t, tr) in self.transitions.iter().enumerate() {
            match &tr.label {
                Some(l) => dot.push_str(&format!(
                    "  \"{}\" [shape=box, label=\"{}\"]\n",
                    tr.id, l
                )),
                None => dot.push_str(&format!(
                    "  \"{}\" [shape=box, style=filled, fillcolor=black, label=\"\"]\n",
                    tr.id
                )),
            }
            for &p in &self.pre[t] {
                let style = if self.var_pre.contains(&(t, p)) {
                    " [color=\"black:invis:black\"]"
                } else {
                    ""
                };
                dot.push_str(&format!("  \"{}\" -> \"{}\"{}\n", self.places[p].id, tr.id, style));
            }
            for &p in &self.post[t] {
                let style = if self.var_post.contains(&(t, p)) {
                    " [color=\"black:invis:black\"]"
                } else {
                    ""
                };
                dot.push_str(&format!("  \"{}\" -> \"{}\"{}\n", tr.id, self.places[p].id, style));
            }
        }
        dot.push_str("}\n");
        dot
    }
}

fn html_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Nonempty subsets of `set` in deterministic order, capped at `cap`.
fn nonempty_subsets(set: &BTreeSet<ObjectId>, cap: usize) -> Vec<BTreeSet<ObjectId>> {
    let items: Vec<&ObjectId> = set.iter().collect();
    let mut out = Vec::new();
    if items.len() > 20 {
        // Enumerating 2^n is pointless; take the full set as the single option.
        return vec![set.clone()];
    }
    for mask in 1u32..(1u32 << items.len()) {
        if out.len() >= cap {
            break;
        }
        let subset: BTreeSet<ObjectId> = items
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, o)| (*o).clone())
            .collect();
        out.push(subset);
    }
    out
}

#[derive(Serialize, Deserialize)]
struct OcpnDoc {
    places: Vec<PlaceEntry>,
    transitions: Vec<Transition>,
    arcs: Vec<(String, String)>,
    place_types: BTreeMap<String, String>,
    variable_arcs: Vec<(String, String)>,
    m_init: Vec<(String, String)>,
    m_final: Vec<(String, String)>,
}

#[derive(Serialize, Deserialize)]
struct PlaceEntry {
    id: String,
}

impl OcpnDoc {
    fn from_ocpn(net: &Ocpn) -> Self {
        let mut arcs = Vec::new();
        let mut variable_arcs = Vec::new();
        for t in 0..net.transitions.len() {
            for &p in &net.pre[t] {
                let arc = (net.places[p].id.clone(), net.transitions[t].id.clone());
                if net.var_pre.contains(&(t, p)) {
                    variable_arcs.push(arc.clone());
                }
                arcs.push(arc);
            }
            for &p in &net.post[t] {
                let arc = (net.transitions[t].id.clone(), net.places[p].id.clone());
                if net.var_post.contains(&(t, p)) {
                    variable_arcs.push(arc.clone());
                }
                arcs.push(arc);
            }
        }
        arcs.sort();
        variable_arcs.sort();
        let marking = |m: &OcMarking| {
            let mut out = Vec::new();
            for ((p, o), &c) in m {
                for _ in 0..c {
                    out.push((net.places[*p].id.clone(), o.clone()));
                }
            }
            out
        };
        OcpnDoc {
            places: net.places.iter().map(|p| PlaceEntry { id: p.id.clone() }).collect(),
            transitions: net.transitions.clone(),
            arcs,
            place_types: net
                .places
                .iter()
                .map(|p| (p.id.clone(), p.object_type.clone()))
                .collect(),
            variable_arcs,
            m_init: marking(&net.m_init),
            m_final: marking(&net.m_final),
        }
    }

    fn into_ocpn(self) -> Result<Ocpn, OcpnError> {
        let mut net = Ocpn::default();
        let mut seen = BTreeSet::new();
        for p in &self.places {
            if !seen.insert(p.id.clone()) {
                return Err(OcpnError::DuplicateNode(p.id.clone()));
            }
            let ot = self
                .place_types
                .get(&p.id)
                .ok_or_else(|| OcpnError::UntypedPlace(p.id.clone()))?;
            net.add_place(p.id.clone(), ot.clone());
        }
        for t in &self.transitions {
            if !seen.insert(t.id.clone()) {
                return Err(OcpnError::DuplicateNode(t.id.clone()));
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
                    return Err(OcpnError::UnknownNode(from.clone()))
                }
                _ if tp.is_none() && tt.is_none() => {
                    return Err(OcpnError::UnknownNode(to.clone()))
                }
                _ => return Err(OcpnError::NotBipartite(from.clone(), to.clone())),
            }
        }
        for (from, to) in &self.variable_arcs {
            if let (Some(p), Some(t)) = (net.place_index(from), net.transition_index(to)) {
                if !net.pre[t].contains(&p) {
                    return Err(OcpnError::UnknownVariableArc(from.clone(), to.clone()));
                }
                net.var_pre.insert((t, p));
            } else if let (Some(t), Some(p)) = (net.transition_index(from), net.place_index(to)) {
                if !net.post[t].contains(&p) {
                    return Err(OcpnError::UnknownVariableArc(from.clone(), to.clone()));
                }
                net.var_post.insert((t, p));
            } else {
                return Err(OcpnError::UnknownVariableArc(from.clone(), to.clone()));
            }
        }
        for (marking, doc) in [(&mut net.m_init, &self.m_init), (&mut net.m_final, &self.m_final)]
        {
            for (pid, oid) in doc {
                let p = net
                    .places
                    .iter()
                    .position(|x| &x.id == pid)
                    .ok_or_else(|| OcpnError::UnknownPlace(pid.clone()))?;
                *marking.entry((p, oid.clone())).or_insert(0) += 1;
            }
        }
        Ok(net)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two-type net: `src_a -> t -> sink_a` and `src_b -> t -> sink_b`.
    fn sync_net() -> Ocpn {
        let mut n = Ocpn::default();
        let sa = n.add_place("src_a", "A");
        let ka = n.add_place("sink_a", "A");
        let sb = n.add_place("src_b", "B");
        let kb = n.add_place("sink_b", "B");
        n.add_transition("t", Some("t".into()), BTreeSet::from([sa, sb]), BTreeSet::from([ka, kb]));
        n.m_init.insert((sa, "a1".into()), 1);
        n.m_init.insert((sb, "b1".into()), 1);
        n.m_final.insert((ka, "a1".into()), 1);
        n.m_final.insert((kb, "b1".into()), 1);
        n
    }

    #[test]
    fn bindings_and_firing() {
        let n = sync_net();
        let pop = n.population_of(&n.m_init);
        let bs = n.enabled_bindings(&n.m_init, &pop, DEFAULT_MAX_BINDING_SUBSETS);
        assert_eq!(bs.len(), 1);
        let m2 = n.fire_binding(&n.m_init, &bs[0]);
        assert_eq!(m2, n.m_final);
        // Token conservation per type for non-variable firings.
        let count = |m: &OcMarking| m.values().sum::<u32>();
        assert_eq!(count(&n.m_init), count(&m2));
    }

    #[test]
    fn sync_net_is_sound_and_wf() {
        let n = sync_net();
        assert!(n.is_well_formed());
        assert!(n.is_oc_wf_net());
        assert_eq!(n.is_oc_sound(10_000, 64), Soundness::Sound);
    }

    #[test]
    fn variable_arc_binds_nonempty_subsets() {
        let mut n = Ocpn::default();
        let s = n.add_place("s", "A");
        let k = n.add_place("k", "A");
        let t = n.add_transition("t", Some("t".into()), BTreeSet::from([s]), BTreeSet::from([k]));
        n.var_pre.insert((t, s));
        n.var_post.insert((t, k));
        n.m_init.insert((s, "a1".into()), 1);
        n.m_init.insert((s, "a2".into()), 1);
        n.m_final.insert((k, "a1".into()), 1);
        n.m_final.insert((k, "a2".into()), 1);
        assert!(n.is_well_formed());
        let pop = n.population_of(&n.m_init);
        let bs = n.enabled_bindings(&n.m_init, &pop, DEFAULT_MAX_BINDING_SUBSETS);
        // {a1}, {a2}, {a1,a2}
        assert_eq!(bs.len(), 3);
        // Firing the full set reaches the final marking in one step.
        let full = bs
            .iter()
            .find(|b| b.assignment["A"].len() == 2)
            .expect("full subset enumerated");
        assert_eq!(n.fire_binding(&n.m_init, full), n.m_final);
    }

    #[test]
    fn mixed_variability_is_ill_formed() {
        let mut n = Ocpn::default();
        let s = n.add_place("s", "A");
        let k = n.add_place("k", "A");
        let t = n.add_transition("t", Some("t".into()), BTreeSet::from([s]), BTreeSet::from([k]));
        n.var_pre.insert((t, s));
        assert!(!n.is_well_formed());
    }

    #[test]
    fn projection_restricts_to_type() {
        let n = sync_net();
        let a = n.project("A");
        assert_eq!(a.places, vec!["src_a", "sink_a"]);
        assert_eq!(a.transitions.len(), 1);
        assert!(a.is_wf_net());
    }

    #[test]
    fn json_round_trip() {
        let mut n = sync_net();
        let t = 0;
        let s = n.place_index("src_a").unwrap();
        n.var_pre.insert((t, s));
        n.var_post.insert((t, n.place_index("sink_a").unwrap()));
        let parsed = Ocpn::from_json_str(&n.to_json_string()).unwrap();
        assert_eq!(parsed, n);
    }

    #[test]
    fn dot_marks_silent_and_variable() {
        let mut n = sync_net();
        n.add_transition("tau0", None, BTreeSet::new(), BTreeSet::new());
        n.var_pre.insert((0, n.place_index("src_a").unwrap()));
        let dot = n.to_dot();
        assert!(dot.contains("fillcolor=black"));
        assert!(dot.contains("black:invis:black"));
        assert!(dot.contains("<sup>f</sup>"));
    }
}
