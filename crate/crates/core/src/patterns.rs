//! Detection of the two event-log patterns that break the base discovery
//! pipeline — object interactions with loops (and its provable subpattern)
//! and spurious interactions — plus construction of the pattern-free
//! remainder log.

use crate::ocel::{Event, EventLog, LogOrder};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Marker used in a witness when the loop pattern's fourth-event role is
/// satisfied vacuously and no concrete filler event exists.
pub const NO_EVENT: &str = "none";

/// Which pattern a witness belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternKind {
    Oiwl,
    OiwlSub,
    Spurious,
}

/// A witness tuple for one pattern instance.
///
/// For the loop patterns `events` is `[e1, e2, e4, e3]` (table order; `e4`
/// may be [`NO_EVENT`]); for the spurious pattern it is `[e1, e2]` and
/// `act2` is absent.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PatternMatch {
    pub kind: PatternKind,
    pub events: Vec<String>,
    pub ot1: String,
    pub ot2: String,
    pub act1: String,
    pub act2: Option<String>,
}

/// Objects of type `ot` shared by both events.
fn shared(a: &Event, b: &Event, ot: &str) -> bool {
    !a.objects(ot).is_disjoint(&b.objects(ot))
}

/// Loop-of-length-one core shared by the pattern and the subpattern:
/// conditions on `(e1, e2, e3)` alone for the candidate types.
fn loop_core(log: &EventLog, e1: &Event, e2: &Event, e3: &Event, ot1: &str, ot2: &str) -> bool {
    if ot1 == ot2 || e1.activity == e2.activity || e1.activity != e3.activity {
        return false;
    }
    // (ii) e1 ⪯ e2 ⪯ e3 with strictly increasing timestamps.
    if !(log.precedes(&e1.id, &e2.id)
        && log.precedes(&e2.id, &e3.id)
        && e1.timestamp < e2.timestamp
        && e2.timestamp < e3.timestamp)
    {
        return false;
    }
    // (iii) the three events share an object of type ot1.
    let triple_ot1 = e1
        .objects(ot1)
        .intersection(&e2.objects(ot1))
        .any(|o| e3.objects(ot1).contains(o));
    if !triple_ot1 {
        return false;
    }
    // (iv) no object of type ot2 is shared by all three, and
    // (v) e2 and e3 share an object of type ot2.
    let triple_ot2 = e1
        .objects(ot2)
        .intersection(&e2.objects(ot2))
        .any(|o| e3.objects(ot2).contains(o));
    !triple_ot2 && shared(e2, e3, ot2)
}

/// The fourth-event filler role: an event inside the `[e1, e3]` window that
/// extends exactly one of the two object workflows without interacting with
/// the other type.
fn is_filler(log: &EventLog, e4: &Event, e1: &Event, e2: &Event, e3: &Event, ot1: &str, ot2: &str) -> bool {
    e4.id != e1.id
        && e4.id != e2.id
        && e4.id != e3.id
        && log.precedes(&e1.id, &e4.id)
        && log.precedes(&e4.id, &e3.id)
        && e1.timestamp < e4.timestamp
        && e4.timestamp < e3.timestamp
        && ((shared(e4, e1, ot1) && !e4.touches(ot2))
            || (shared(e4, e2, ot2) && !e4.touches(ot1)))
}

/// Detects the object-interactions-with-loops pattern.
///
/// One canonical witness is returned per `(e1, e2, e3, ot1, ot2)`: the fourth
/// event is the earliest filler inside the loop window, or [`NO_EVENT`] when
/// the universally quantified fourth-event condition holds vacuously.
pub fn detect_oiwl(log: &EventLog) -> BTreeSet<PatternMatch> {
    let mut out = BTreeSet::new();
    let events = log.events();
    let types: Vec<String> = log.object_types().into_iter().collect();
    for e1 in events {
        for e2 in events {
            for e3 in events {
                if e1.id == e2.id || e2.id == e3.id || e1.id == e3.id {
                    continue;
                }
                for ot1 in &types {
                    for ot2 in &types {
                        if !loop_core(log, e1, e2, e3, ot1, ot2) {
                            continue;
                        }
                        // Universal fourth-event condition: earlier act1
                        // events never share ot2 objects with e2.
                        let universal = events.iter().all(|e| {
                            e.activity != e1.activity
                                || !log.precedes(&e.id, &e2.id)
                                || !shared(e, e2, ot2)
                        });
                        if !universal {
                            continue;
                        }
                        let e4 = events
                            .iter()
                            .find(|e4| is_filler(log, e4, e1, e2, e3, ot1, ot2))
                            .map(|e| e.id.clone())
                            .unwrap_or_else(|| NO_EVENT.to_string());
                        out.insert(PatternMatch {
                            kind: PatternKind::Oiwl,
                            events: vec![e1.id.clone(), e2.id.clone(), e4, e3.id.clone()],
                            ot1: ot1.clone(),
                            ot2: ot2.clone(),
                            act1: e1.activity.clone(),
                            act2: Some(e2.activity.clone()),
                        });
                    }
                }
            }
        }
    }
    out
}

/// Detects the loop subpattern: the loop core plus activity isolation and a
/// closed loop window.
///
/// Beyond the core, the subpattern requires a concrete distinct fourth event
/// extending one workflow inside the window, that no event outside the
/// witness carries `act1` or `act2`, and that events outside the `[e1, e3]`
/// window share no activity with events inside it.
pub fn detect_oiwl_sub(log: &EventLog) -> BTreeSet<PatternMatch> {
    let mut out = BTreeSet::new();
    let events = log.events();
    let types: Vec<String> = log.object_types().into_iter().collect();
    for e1 in events {
        for e2 in events {
            for e3 in events {
                if e1.id == e2.id || e2.id == e3.id || e1.id == e3.id {
                    continue;
                }
                for ot1 in &types {
                    for ot2 in &types {
                        if !loop_core(log, e1, e2, e3, ot1, ot2) {
                            continue;
                        }
                        for e4 in events {
                            if !is_filler(log, e4, e1, e2, e3, ot1, ot2)
                                || e4.activity == e1.activity
                                || e4.activity == e2.activity
                            {
                                continue;
                            }
                            let bound = [&e1.id, &e2.id, &e3.id];
                            // (vi) act1/act2 occur only in the witness.
                            let isolated = events.iter().all(|e| {
                                bound.contains(&&e.id)
                                    || (e.activity != e1.activity && e.activity != e2.activity)
                            });
                            if !isolated {
                                continue;
                            }
                            // (vii) the window is activity-closed.
                            let inside: BTreeSet<&String> = events
                                .iter()
                                .filter(|e| {
                                    e1.timestamp <= e.timestamp && e.timestamp <= e3.timestamp
                                })
                                .map(|e| &e.activity)
                                .collect();
                            let closed = events.iter().all(|e| {
                                (e1.timestamp <= e.timestamp && e.timestamp <= e3.timestamp)
                                    || !inside.contains(&e.activity)
                            });
                            if !closed {
                                continue;
                            }
                            out.insert(PatternMatch {
                                kind: PatternKind::OiwlSub,
                                events: vec![
                                    e1.id.clone(),
                                    e2.id.clone(),
                                    e4.id.clone(),
                                    e3.id.clone(),
                                ],
                                ot1: ot1.clone(),
                                ot2: ot2.clone(),
                                act1: e1.activity.clone(),
                                act2: Some(e2.activity.clone()),
                            });
                        }
                    }
                }
            }
        }
    }
    out
}

/// Detects spurious interactions: two same-labeled events touching two
/// different types exclusively, with no third same-labeled event relating
/// both types.
pub fn detect_spurious(log: &EventLog) -> BTreeSet<PatternMatch> {
    let mut out = BTreeSet::new();
    let events = log.events();
    let types: Vec<String> = log.object_types().into_iter().collect();
    for e1 in events {
        for e2 in events {
            if e1.id == e2.id || e1.activity != e2.activity || !log.precedes(&e1.id, &e2.id) {
                continue;
            }
            for ot1 in &types {
                for ot2 in &types {
                    if ot1 == ot2
                        || !e1.touches(ot1)
                        || e1.touches(ot2)
                        || !e2.touches(ot2)
                        || e2.touches(ot1)
                    {
                        continue;
                    }
                    // No other same-labeled event relates both types.
                    let refuted = events.iter().any(|e3| {
                        e3.activity == e1.activity && e3.touches(ot1) && e3.touches(ot2)
                    });
                    if refuted {
                        continue;
                    }
                    out.insert(PatternMatch {
                        kind: PatternKind::Spurious,
                        events: vec![e1.id.clone(), e2.id.clone()],
                        ot1: ot1.clone(),
                        ot2: ot2.clone(),
                        act1: e1.activity.clone(),
                        act2: None,
                    });
                }
            }
        }
    }
    out
}

fn detect(log: &EventLog, kind: PatternKind) -> BTreeSet<PatternMatch> {
    match kind {
        PatternKind::Oiwl => detect_oiwl(log),
        PatternKind::OiwlSub => detect_oiwl_sub(log),
        PatternKind::Spurious => detect_spurious(log),
    }
}

/// The pattern-free remainder: repeatedly removes every event occurring in a
/// witness of `kind` until the detector finds nothing.
pub fn log_without(log: &EventLog, kind: PatternKind) -> EventLog {
    let mut current = log.clone();
    loop {
        let matches = detect(&current, kind);
        if matches.is_empty() {
            return current;
        }
        let doomed: BTreeSet<String> = matches
            .iter()
            .flat_map(|m| m.events.iter())
            .filter(|id| id.as_str() != NO_EVENT)
            .cloned()
            .collect();
        let keep: Vec<Event> = current
            .events()
            .iter()
            .filter(|e| !doomed.contains(&e.id))
            .cloned()
            .collect();
        let order = match current.order() {
            LogOrder::Timestamp => LogOrder::Timestamp,
            LogOrder::Explicit(pairs) => LogOrder::Explicit(
                pairs
                    .iter()
                    .filter(|(a, b)| !doomed.contains(a) && !doomed.contains(b))
                    .cloned()
                    .collect(),
            ),
        };
        current = EventLog::new(keep, order).expect("removing events keeps the log valid");
    }
}
