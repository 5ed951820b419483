//! The base object-centric discovery pipeline: per-type flattening and
//! inductive mining, variable-arc identification, merging of the per-type
//! workflow nets on shared visible labels, and finalization of the
//! object-level initial and final markings.

use crate::discovery::{inductive_miner, tree_to_wf_net, ProcessTree};
use crate::ocel::{EventLog, ObjectType};
use crate::ocpn::Ocpn;
use crate::petri::Net;
use std::collections::{BTreeMap, BTreeSet};

/// The per-type intermediate artifacts of the pipeline.
#[derive(Debug, Clone)]
pub struct PerTypeDiscovery {
    pub object_type: ObjectType,
    pub tree: ProcessTree,
    pub net: Net,
}

/// Result of the base pipeline: the merged net plus the per-type parts.
#[derive(Debug, Clone)]
pub struct BaseDiscovery {
    pub ocpn: Ocpn,
    pub parts: Vec<PerTypeDiscovery>,
}

/// Flattens the log per object type and mines one workflow net per type.
///
/// Node ids are namespaced per type: places `{type}::p{k}`, silent
/// transitions `{type}::tau{k}`, and visible transitions `{type}::{label}`.
pub fn disc_per_type(log: &EventLog) -> Vec<PerTypeDiscovery> {
    log.object_types()
        .into_iter()
        .map(|ot| {
            let flat = log.flatten(&ot);
            let tree = inductive_miner(&flat);
            let net = tree_to_wf_net(&tree, &format!("{ot}::"));
            PerTypeDiscovery { object_type: ot, tree, net }
        })
        .collect()
}

/// `(activity, type)` pairs where some event with that activity references
/// two or more objects of that type. Arcs between a transition with that
/// label and places of that type become variable.
pub fn identify_variable_arcs(log: &EventLog) -> BTreeSet<(String, ObjectType)> {
    let mut out = BTreeSet::new();
    for event in log.events() {
        for (ot, objs) in &event.omap {
            if objs.len() >= 2 {
                out.insert((event.activity.clone(), ot.clone()));
            }
        }
    }
    out
}

/// Merges the per-type nets into one object-centric net.
///
/// Places and silent transitions are copied verbatim (their namespaced ids are
/// already unique). Visible transitions with the same label are unified into a
/// single transition whose id is the label itself; its arcs are the union of
/// the per-type arcs. Markings are left empty; see [`finalize`].
pub fn merge(parts: &[PerTypeDiscovery], variable: &BTreeSet<(String, ObjectType)>) -> Ocpn {
    let mut ocpn = Ocpn::default();
    // (label -> merged transition index) for visible transitions.
    let mut by_label: BTreeMap<String, usize> = BTreeMap::new();
    for part in parts {
        let mut pmap: BTreeMap<usize, usize> = BTreeMap::new();
        for (p, id) in part.net.places.iter().enumerate() {
            pmap.insert(p, ocpn.add_place(id.clone(), part.object_type.clone()));
        }
        for (t, tr) in part.net.transitions.iter().enumerate() {
            let pre: BTreeSet<usize> = part.net.pre[t].iter().map(|p| pmap[p]).collect();
            let post: BTreeSet<usize> = part.net.post[t].iter().map(|p| pmap[p]).collect();
            let idx = match &tr.label {
                None => ocpn.add_transition(tr.id.clone(), None, pre.clone(), post.clone()),
                Some(label) => match by_label.get(label) {
                    Some(&idx) => {
                        ocpn.pre[idx].extend(pre.iter().copied());
                        ocpn.post[idx].extend(post.iter().copied());
                        idx
                    }
                    None => {
                        let idx = ocpn.add_transition(
                            label.clone(),
                            Some(label.clone()),
                            pre.clone(),
                            post.clone(),
                        );
                        by_label.insert(label.clone(), idx);
                        idx
                    }
                },
            };
            if let Some(label) = &tr.label {
                if variable.contains(&(label.clone(), part.object_type.clone())) {
                    for &p in &pre {
                        ocpn.var_pre.insert((idx, p));
                    }
                    for &p in &post {
                        ocpn.var_post.insert((idx, p));
                    }
                }
            }
        }
    }
    ocpn
}

/// Sets the object-level markings: one token per log object of each type on
/// that type's source place, and symmetrically on the sink place.
pub fn finalize(mut ocpn: Ocpn, parts: &[PerTypeDiscovery], log: &EventLog) -> Ocpn {
    ocpn.m_init.clear();
    ocpn.m_final.clear();
    for part in parts {
        let (source, sink) = part
            .net
            .wf_net_sources_sinks()
            .expect("per-type nets are workflow nets");
        let src = ocpn
            .place_index(&part.net.places[source])
            .expect("merged net keeps per-type places");
        let snk = ocpn
            .place_index(&part.net.places[sink])
            .expect("merged net keeps per-type places");
        for obj in log.objects_of_type(&part.object_type) {
            ocpn.m_init.insert((src, obj.clone()), 1);
            ocpn.m_final.insert((snk, obj), 1);
        }
    }
    ocpn
}

/// The full base pipeline: per-type discovery, merge, finalize.
pub fn ocpd_base(log: &EventLog) -> BaseDiscovery {
    let parts = disc_per_type(log);
    let variable = identify_variable_arcs(log);
    let ocpn = finalize(merge(&parts, &variable), &parts, log);
    BaseDiscovery { ocpn, parts }
}

/// Structural isomorphism of two nets up to renaming, where visible
/// transitions must match by label. Places and silent transitions are matched
/// by a canonical refinement of their arc signatures; this is sound for the
/// nets produced by the pipeline, whose visible labels are injective.
pub fn label_isomorphic(a: &Net, b: &Net) -> bool {
    if a.places.len() != b.places.len() || a.transitions.len() != b.transitions.len() {
        return false;
    }
    canonical_signature(a) == canonical_signature(b)
}

/// Iteratively refined colouring of the net, starting from labels and
/// marking membership, hashed into a multiset signature.
fn canonical_signature(net: &Net) -> Vec<String> {
    let np = net.places.len();
    let n = np + net.transitions.len();
    let mut colour: Vec<String> = Vec::with_capacity(n);
    for p in 0..np {
        // Only which places are marked matters: projections of object-level
        // markings carry one token per object, per-type nets carry one total.
        let init = net.m_init.get(&p).copied().unwrap_or(0) > 0;
        let fin = net.m_final.get(&p).copied().unwrap_or(0) > 0;
        colour.push(format!("P:{init}:{fin}"));
    }
    for t in &net.transitions {
        colour.push(format!("T:{:?}", t.label));
    }
    // Node adjacency with arc direction, over place/transition indices.
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut pred: Vec<Vec<usize>> = vec![Vec::new(); n];
    for t in 0..net.transitions.len() {
        for &p in &net.pre[t] {
            succ[p].push(np + t);
            pred[np + t].push(p);
        }
        for &p in &net.post[t] {
            succ[np + t].push(p);
            pred[p].push(np + t);
        }
    }
    for _ in 0..n {
        let mut next = Vec::with_capacity(n);
        for v in 0..n {
            let mut ins: Vec<&String> = pred[v].iter().map(|&u| &colour[u]).collect();
            let mut outs: Vec<&String> = succ[v].iter().map(|&u| &colour[u]).collect();
            ins.sort();
            outs.sort();
            next.push(format!("{}|i{:?}|o{:?}", colour[v], ins, outs));
        }
        colour = next;
    }
    colour.sort();
    colour
}
