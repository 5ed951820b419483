//! Repair pipelines that discover sound nets for logs containing the loop
//! and spurious-interaction patterns: different-activity relabeling,
//! the similar-activity net transformation, and spurious-interaction
//! relabeling. Each pipeline returns the repaired net together with an audit
//! trail of what it changed.

use crate::ocel::{EventLog, EventId};
use crate::ocpn::Ocpn;
use crate::patterns::{detect_oiwl, detect_spurious, PatternMatch};
use crate::pipeline::ocpd_base;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// Which repair pipeline produced a trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepairVariant {
    Da,
    Sa,
    Si,
}

/// One net edit performed by a repair pipeline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "edit")]
pub enum NetEdit {
    AddPlace { id: String, object_type: String },
    AddTransition { id: String, silent: bool },
    AddArc { from: String, to: String },
    RemoveArc { from: String, to: String },
}

/// Audit trail of a repair pipeline run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairTrace {
    pub variant: RepairVariant,
    /// Pattern matches the pipeline consumed (deduplicated).
    pub matches: Vec<PatternMatch>,
    /// Original activity → fresh label introduced during relabeling.
    pub fresh_labels: BTreeMap<String, String>,
    /// Ordered net edits (populated by the similar-activity transform).
    pub edits: Vec<NetEdit>,
}

impl RepairTrace {
    fn new(variant: RepairVariant) -> Self {
        RepairTrace {
            variant,
            matches: Vec::new(),
            fresh_labels: BTreeMap::new(),
            edits: Vec::new(),
        }
    }
}

/// Errors raised by the similar-activity transform.
#[derive(Debug, Error)]
pub enum ExtensionError {
    #[error("no transition labeled {act:?} adjacent to a place of type {ot:?}")]
    MissingTransition { act: String, ot: String },
}

/// Smallest `k` making `"{act}#{k}"` absent from `used`; the fresh label is
/// added to `used`.
fn fresh_label(act: &str, used: &mut BTreeSet<String>) -> String {
    let mut k = 0;
    loop {
        let candidate = format!("{act}#{k}");
        if used.insert(candidate.clone()) {
            return candidate;
        }
        k += 1;
    }
}

/// Deduplicates matches by `(act1, act2, ot1, ot2)`, keeping the smallest
/// witness per group, sorted deterministically.
fn dedupe(matches: BTreeSet<PatternMatch>) -> Vec<PatternMatch> {
    let mut by_group: BTreeMap<(String, Option<String>, String, String), PatternMatch> =
        BTreeMap::new();
    for m in matches {
        by_group
            .entry((m.act1.clone(), m.act2.clone(), m.ot1.clone(), m.ot2.clone()))
            .or_insert(m);
    }
    by_group.into_values().collect()
}

/// Relabels every transition carrying a fresh label back to its original
/// activity. The transition ids keep the fresh label, so the result may carry
/// several transitions with the same visible label.
fn relabel_back(ocpn: &mut Ocpn, fresh: &BTreeMap<String, String>) {
    let reverse: BTreeMap<&String, &String> = fresh.iter().map(|(o, f)| (f, o)).collect();
    for t in &mut ocpn.transitions {
        if let Some(label) = &t.label {
            if let Some(original) = reverse.get(label) {
                t.label = Some((*original).clone());
            }
        }
    }
}

/// Different-activity pipeline: relabel the first DO-part execution (the
/// `e1` role) of every loop-pattern witness to a fresh activity, rediscover,
/// and relabel the affected transitions back. Pattern-free logs pass through
/// unchanged.
pub fn ocpd_da(log: &EventLog) -> (Ocpn, RepairTrace) {
    let mut trace = RepairTrace::new(RepairVariant::Da);
    let all = detect_oiwl(log);
    if all.is_empty() {
        return (ocpd_base(log).ocpn, trace);
    }
    let groups = dedupe(all.clone());
    let mut used: BTreeSet<String> =
        log.events().iter().map(|e| e.activity.clone()).collect();
    let mut relabeled = log.clone();
    for group in &groups {
        // Every e1-role event across witnesses of the same quadruple.
        let e1s: BTreeSet<EventId> = all
            .iter()
            .filter(|m| {
                m.act1 == group.act1
                    && m.act2 == group.act2
                    && m.ot1 == group.ot1
                    && m.ot2 == group.ot2
            })
            .map(|m| m.events[0].clone())
            .collect();
        let fresh = fresh_label(&group.act1, &mut used);
        relabeled = relabeled.relabel_events(&e1s, &fresh);
        trace.fresh_labels.insert(group.act1.clone(), fresh);
    }
    trace.matches = groups;
    let mut ocpn = ocpd_base(&relabeled).ocpn;
    relabel_back(&mut ocpn, &trace.fresh_labels);
    (ocpn, trace)
}

/// Similar-activity pipeline: base discovery followed by the net transform,
/// applied once per deduplicated loop-pattern match in deterministic order.
pub fn ocpd_sa(log: &EventLog) -> Result<(Ocpn, RepairTrace), ExtensionError> {
    let mut trace = RepairTrace::new(RepairVariant::Sa);
    let mut ocpn = ocpd_base(log).ocpn;
    let groups = dedupe(detect_oiwl(log));
    for m in &groups {
        let act2 = m.act2.as_deref().expect("loop matches carry act2");
        let edits = similar_activity_transform(&mut ocpn, &m.ot1, &m.ot2, &m.act1, act2)?;
        trace.edits.extend(edits);
    }
    trace.matches = groups;
    Ok((ocpn, trace))
}

/// Rewrites the net so that the `ot2` workflow can participate in every
/// cycle of the `ot1` loop carried by `act1`/`act2` and both types exit the
/// loop together.
///
/// The rewrite adds one `ot1`-typed place and two silent transitions: the
/// `act1` transition now produces into the new place only, a silent exit
/// transition moves both types from inside the loop to the original
/// post-places of `act1`, a silent entry transition readies `ot2` for the
/// first `act1` occurrence, and the `act2` transition takes its `ot1` input
/// from the new place.
pub fn similar_activity_transform(
    ocpn: &mut Ocpn,
    ot1: &str,
    ot2: &str,
    act1: &str,
    act2: &str,
) -> Result<Vec<NetEdit>, ExtensionError> {
    let typed = |ocpn: &Ocpn, set: &BTreeSet<usize>, ot: &str| -> Vec<usize> {
        set.iter().copied().filter(|&p| ocpn.places[p].object_type == ot).collect()
    };
    let find = |ocpn: &Ocpn, act: &str, ot: &str| -> Result<usize, ExtensionError> {
        (0..ocpn.transitions.len())
            .find(|&t| {
                ocpn.transitions[t].label.as_deref() == Some(act)
                    && ocpn.adjacent_types(t).contains(ot)
            })
            .ok_or_else(|| ExtensionError::MissingTransition {
                act: act.to_string(),
                ot: ot.to_string(),
            })
    };
    let te1 = find(ocpn, act1, ot1)?;
    let te2 = find(ocpn, act2, ot1)?;
    let mut edits = Vec::new();

    let next_free = |ocpn: &Ocpn, pattern: &dyn Fn(usize) -> String| -> String {
        (0..)
            .map(pattern)
            .find(|id| ocpn.place_index(id).is_none() && ocpn.transition_index(id).is_none())
            .unwrap()
    };
    let p1_id = next_free(ocpn, &|k| format!("sa::p{k}"));
    let p1 = ocpn.add_place(p1_id.clone(), ot1);
    edits.push(NetEdit::AddPlace { id: p1_id.clone(), object_type: ot1.to_string() });
    let t1_id = next_free(ocpn, &|k| format!("sa::tau{k}"));
    let t1 = ocpn.add_transition(t1_id.clone(), None, BTreeSet::new(), BTreeSet::new());
    edits.push(NetEdit::AddTransition { id: t1_id.clone(), silent: true });
    let t2_id = next_free(ocpn, &|k| format!("sa::tau{k}"));
    let t2 = ocpn.add_transition(t2_id.clone(), None, BTreeSet::new(), BTreeSet::new());
    edits.push(NetEdit::AddTransition { id: t2_id.clone(), silent: true });

    let te1_post_ot1 = typed(ocpn, &ocpn.post[te1], ot1);
    let te1_post_ot2 = typed(ocpn, &ocpn.post[te1], ot2);
    let te1_pre_ot2 = typed(ocpn, &ocpn.pre[te1], ot2);
    let te2_pre_ot1 = typed(ocpn, &ocpn.pre[te2], ot1);
    let te2_pre_ot2 = typed(ocpn, &ocpn.pre[te2], ot2);

    // te1 keeps its variability per type; the new arcs inherit it.
    let te1_var_ot1 = te1_post_ot1.iter().any(|&p| ocpn.var_post.contains(&(te1, p)));
    let te1_var_ot2 = te1_post_ot2.iter().any(|&p| ocpn.var_post.contains(&(te1, p)));
    let te2_var_ot1 = te2_pre_ot1.iter().any(|&p| ocpn.var_pre.contains(&(te2, p)));

    let remove_post = |ocpn: &mut Ocpn, t: usize, p: usize, edits: &mut Vec<NetEdit>| {
        ocpn.post[t].remove(&p);
        ocpn.var_post.remove(&(t, p));
        edits.push(NetEdit::RemoveArc {
            from: ocpn.transitions[t].id.clone(),
            to: ocpn.places[p].id.clone(),
        });
    };
    // act1 no longer produces into its original loop-side places of either
    // pattern type; the silent exit takes over that role.
    for &p in te1_post_ot1.iter().chain(te1_post_ot2.iter()) {
        remove_post(ocpn, te1, p, &mut edits);
    }

    let add_arc =
        |ocpn: &mut Ocpn, from_t: bool, t: usize, p: usize, var: bool, edits: &mut Vec<NetEdit>| {
            if from_t {
                ocpn.post[t].insert(p);
                if var {
                    ocpn.var_post.insert((t, p));
                }
                edits.push(NetEdit::AddArc {
                    from: ocpn.transitions[t].id.clone(),
                    to: ocpn.places[p].id.clone(),
                });
            } else {
                ocpn.pre[t].insert(p);
                if var {
                    ocpn.var_pre.insert((t, p));
                }
                edits.push(NetEdit::AddArc {
                    from: ocpn.places[p].id.clone(),
                    to: ocpn.transitions[t].id.clone(),
                });
            }
        };

    // act1 produces into the new place; the silent exit consumes it and
    // restores the original ot1/ot2 post-places of act1.
    add_arc(ocpn, true, te1, p1, te1_var_ot1, &mut edits);
    add_arc(ocpn, false, t1, p1, te1_var_ot1, &mut edits);
    for &p in &te1_post_ot1 {
        add_arc(ocpn, true, t1, p, te1_var_ot1, &mut edits);
    }
    for &p in &te1_post_ot2 {
        add_arc(ocpn, true, t1, p, te1_var_ot2, &mut edits);
    }
    // The ot2 place before act2 also feeds the silent exit and entry; the
    // entry readies ot2 for the first act1 occurrence.
    for &p in &te2_pre_ot2 {
        add_arc(ocpn, false, t1, p, false, &mut edits);
        add_arc(ocpn, false, t2, p, false, &mut edits);
    }
    for &p in &te1_pre_ot2 {
        add_arc(ocpn, true, t2, p, false, &mut edits);
    }
    // act1 hands ot2 back to the place before act2, closing the loop.
    for &p in &te2_pre_ot2 {
        add_arc(ocpn, true, te1, p, te1_var_ot2, &mut edits);
    }
    // act2 takes its ot1 input from the new place instead of the loop-side
    // place it consumed before.
    for &p in &te2_pre_ot1.clone() {
        ocpn.pre[te2].remove(&p);
        ocpn.var_pre.remove(&(te2, p));
        edits.push(NetEdit::RemoveArc {
            from: ocpn.places[p].id.clone(),
            to: ocpn.transitions[te2].id.clone(),
        });
    }
    add_arc(ocpn, false, te2, p1, te2_var_ot1, &mut edits);
    Ok(edits)
}

/// Spurious-interaction pipeline: for every deduplicated spurious match,
/// relabel the event class on the lexicographically larger type's side to a
/// fresh label, rediscover, and relabel back — splitting the merged
/// transition in two.
pub fn ocpd_si(log: &EventLog) -> (Ocpn, RepairTrace) {
    let mut trace = RepairTrace::new(RepairVariant::Si);
    let all = detect_spurious(log);
    if all.is_empty() {
        return (ocpd_base(log).ocpn, trace);
    }
    // Normalize type pairs so symmetric witnesses collapse; the larger type
    // name takes the relabeled side.
    let mut groups: BTreeMap<(String, String, String), PatternMatch> = BTreeMap::new();
    for m in dedupe(all) {
        let (small, large) = if m.ot1 < m.ot2 {
            (m.ot1.clone(), m.ot2.clone())
        } else {
            (m.ot2.clone(), m.ot1.clone())
        };
        groups.entry((m.act1.clone(), small, large)).or_insert(m);
    }
    let mut used: BTreeSet<String> =
        log.events().iter().map(|e| e.activity.clone()).collect();
    let mut relabeled = log.clone();
    for ((act, small, large), m) in &groups {
        let class: BTreeSet<EventId> = log
            .events()
            .iter()
            .filter(|e| e.activity == *act && e.touches(large) && !e.touches(small))
            .map(|e| e.id.clone())
            .collect();
        let fresh = fresh_label(act, &mut used);
        relabeled = relabeled.relabel_events(&class, &fresh);
        trace.fresh_labels.insert(act.clone(), fresh);
        trace.matches.push(m.clone());
    }
    let mut ocpn = ocpd_base(&relabeled).ocpn;
    relabel_back(&mut ocpn, &trace.fresh_labels);
    (ocpn, trace)
}
