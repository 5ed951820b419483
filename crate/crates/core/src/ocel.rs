//! Object-centric event logs: data model, JSON ingestion, ordering, and flattening.
//!
//! An event carries an id, an activity, an RFC 3339 timestamp, an object map
//! (`omap`) from object-type names to sets of object ids, and a scalar value map
//! (`vmap`). A log is a set of events together with a partial order over them that
//! is consistent with the timestamps. Flattening projects the log onto a single
//! object type and yields a classical event log: one activity trace per object.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::cmp::Reverse;
use thiserror::Error;

/// Object-type name (e.g. `"coordinator"`).
pub type ObjectType = String;
/// Object identifier (e.g. `"151a3"`).
pub type ObjectId = String;
/// Event identifier.
pub type EventId = String;

/// A single object-centric event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub id: EventId,
    pub activity: String,
    pub timestamp: DateTime<Utc>,
    /// Object map: which objects of which types the event refers to.
    /// Types mapped to an empty set are dropped on construction.
    pub omap: BTreeMap<ObjectType, BTreeSet<ObjectId>>,
    /// Scalar event attributes.
    #[serde(default)]
    pub vmap: BTreeMap<String, serde_json::Value>,
}

impl Event {
    /// Objects of `ot` the event refers to (empty set if none).
    pub fn objects(&self, ot: &str) -> BTreeSet<ObjectId> {
        self.omap.get(ot).cloned().unwrap_or_default()
    }

    /// Whether the event refers to at least one object of `ot`.
    pub fn touches(&self, ot: &str) -> bool {
        self.omap.get(ot).map_or(false, |s| !s.is_empty())
    }
}

/// How the order of a log document is declared.
#[derive(Debug, Clone, PartialEq)]
pub enum LogOrder {
    /// Reflexive-transitive closure of strict timestamp precedence,
    /// ties broken by lexicographic event-id order (a total order).
    Timestamp,
    /// Explicit precedence edges `(earlier, later)`, taken under
    /// reflexive-transitive closure.
    Explicit(Vec<(EventId, EventId)>),
}

/// Errors raised while building or parsing a log.
#[derive(Debug, Error)]
pub enum LogError {
    #[error("malformed log document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("duplicate event id {0:?}")]
    DuplicateEvent(EventId),
    #[error("order edge references unknown event id {0:?}")]
    UnknownEvent(EventId),
    #[error("order declaration {0:?} is not supported (expected \"timestamp\" or an edge list)")]
    UnknownOrder(String),
    #[error("order edge ({0:?}, {1:?}) contradicts the timestamps")]
    OrderTimestampConflict(EventId, EventId),
    #[error("declared order contains a cycle through event {0:?}")]
    OrderCycle(EventId),
    #[error("event {0:?} attribute {1:?} is not a scalar value")]
    NonScalarAttribute(EventId, String),
}

/// An object-centric event log with a validated event order.
///
/// Events are stored in a canonical linearization of the declared order
/// (timestamp, then event id, adjusted to respect explicit edges).
#[derive(Debug, Clone, PartialEq)]
pub struct EventLog {
    events: Vec<Event>,
    order: LogOrder,
    index: BTreeMap<EventId, usize>,
    /// `closure[a]` contains every event index strictly after `a` in the order.
    /// For `LogOrder::Timestamp` this is left empty and precedence is computed
    /// from timestamps directly.
    closure: Vec<BTreeSet<usize>>,
}

impl EventLog {
    /// Builds a log from events and an order declaration, validating both.
    pub fn new(mut events: Vec<Event>, order: LogOrder) -> Result<Self, LogError> {
        for e in &mut events {
            e.omap.retain(|_, objs| !objs.is_empty());
            for (key, value) in &e.vmap {
                if value.is_array() || value.is_object() {
                    return Err(LogError::NonScalarAttribute(e.id.clone(), key.clone()));
                }
            }
        }
        events.sort_by(|a, b| (a.timestamp, &a.id).cmp(&(b.timestamp, &b.id)));
        let mut index = BTreeMap::new();
        for (i, e) in events.iter().enumerate() {
            if index.insert(e.id.clone(), i).is_some() {
                return Err(LogError::DuplicateEvent(e.id.clone()));
            }
        }
        let mut log = EventLog { events, order, index, closure: Vec::new() };
        if let LogOrder::Explicit(edges) = log.order.clone() {
            log.validate_explicit(&edges)?;
        }
        Ok(log)
    }

    /// Validates explicit edges, linearizes the events accordingly, and
    /// precomputes the transitive closure of the declared order.
    fn validate_explicit(&mut self, edges: &[(EventId, EventId)]) -> Result<(), LogError> {
        let n = self.events.len();
        let mut succ: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for (a, b) in edges {
            let ia = *self.index.get(a).ok_or_else(|| LogError::UnknownEvent(a.clone()))?;
            let ib = *self.index.get(b).ok_or_else(|| LogError::UnknownEvent(b.clone()))?;
            if self.events[ia].timestamp > self.events[ib].timestamp {
                return Err(LogError::OrderTimestampConflict(a.clone(), b.clone()));
            }
            if ia != ib {
                succ[ia].insert(ib);
            }
        }
        // Kahn linearization with (timestamp, id) as the tie-breaking priority.
        let mut indeg = vec![0usize; n];
        for outs in &succ {
            for &b in outs {
                indeg[b] += 1;
            }
        }
        let key = |i: usize| (self.events[i].timestamp, self.events[i].id.clone());
        let mut heap: BinaryHeap<Reverse<(DateTime<Utc>, EventId, usize)>> = BinaryHeap::new();
        for i in 0..n {
            if indeg[i] == 0 {
                let (t, id) = key(i);
                heap.push(Reverse((t, id, i)));
            }
        }
        let mut linear = Vec::with_capacity(n);
        while let Some(Reverse((_, _, i))) = heap.pop() {
            linear.push(i);
            for &b in &succ[i] {
                indeg[b] -= 1;
                if indeg[b] == 0 {
                    let (t, id) = key(b);
                    heap.push(Reverse((t, id, b)));
                }
            }
        }
        if linear.len() != n {
            let stuck = (0..n).find(|&i| indeg[i] > 0).unwrap();
            return Err(LogError::OrderCycle(self.events[stuck].id.clone()));
        }
        // Reorder events into the linearization and remap the edge set.
        let old_events = std::mem::take(&mut self.events);
        let mut remap = vec![0usize; n];
        for (new_pos, &old_pos) in linear.iter().enumerate() {
            remap[old_pos] = new_pos;
        }
        let mut new_events: Vec<Option<Event>> = vec![None; n];
        for (old_pos, e) in old_events.into_iter().enumerate() {
            new_events[remap[old_pos]] = Some(e);
        }
        self.events = new_events.into_iter().map(Option::unwrap).collect();
        self.index = self
            .events
            .iter()
            .enumerate()
            .map(|(i, e)| (e.id.clone(), i))
            .collect();
        // Transitive closure over the remapped edges (events are few; the
        // quadratic sweep is fine at this scale).
        let mut closure: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for outs_old in succ.iter().enumerate() {
            for &b in outs_old.1 {
                closure[remap[outs_old.0]].insert(remap[b]);
            }
        }
        // Process in reverse linearization order so successor sets are complete.
        for i in (0..n).rev() {
            let direct: Vec<usize> = closure[i].iter().copied().collect();
            for j in direct {
                let extend: Vec<usize> = closure[j].iter().copied().collect();
                closure[i].extend(extend);
            }
        }
        self.closure = closure;
        Ok(())
    }

    /// Parses the JSON interchange format.
    pub fn from_json_str(s: &str) -> Result<Self, LogError> {
        #[derive(Deserialize)]
        struct Doc {
            events: Vec<Event>,
            order: OrderDoc,
        }
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum OrderDoc {
            Keyword(String),
            Edges(Vec<(EventId, EventId)>),
        }
        let doc: Doc = serde_json::from_str(s)?;
        let order = match doc.order {
            OrderDoc::Keyword(k) if k == "timestamp" => LogOrder::Timestamp,
            OrderDoc::Keyword(k) => return Err(LogError::UnknownOrder(k)),
            OrderDoc::Edges(edges) => LogOrder::Explicit(edges),
        };
        EventLog::new(doc.events, order)
    }

    /// Serializes to the JSON interchange format.
    pub fn to_json_string(&self) -> String {
        let order = match &self.order {
            LogOrder::Timestamp => serde_json::json!("timestamp"),
            LogOrder::Explicit(edges) => serde_json::json!(edges),
        };
        serde_json::to_string_pretty(&serde_json::json!({
            "events": self.events,
            "order": order,
        }))
        .expect("log serialization cannot fail")
    }

    /// Events in canonical linearized order.
    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn order(&self) -> &LogOrder {
        &self.order
    }

    pub fn event_by_id(&self, id: &str) -> Option<&Event> {
        self.index.get(id).map(|&i| &self.events[i])
    }

    /// Whether `a` strictly precedes `b` in the declared order.
    pub fn strictly_precedes(&self, a: &str, b: &str) -> bool {
        let (Some(&ia), Some(&ib)) = (self.index.get(a), self.index.get(b)) else {
            return false;
        };
        if ia == ib {
            return false;
        }
        match &self.order {
            LogOrder::Timestamp => {
                let (ea, eb) = (&self.events[ia], &self.events[ib]);
                (ea.timestamp, &ea.id) < (eb.timestamp, &eb.id)
            }
            LogOrder::Explicit(_) => self.closure[ia].contains(&ib),
        }
    }

    /// Whether `a` precedes or equals `b` in the declared order.
    pub fn precedes(&self, a: &str, b: &str) -> bool {
        a == b || self.strictly_precedes(a, b)
    }

    /// All object types referenced by the log, sorted.
    pub fn object_types(&self) -> BTreeSet<ObjectType> {
        self.events
            .iter()
            .flat_map(|e| e.omap.keys().cloned())
            .collect()
    }

    /// All objects of `ot` referenced by the log, sorted.
    pub fn objects_of_type(&self, ot: &str) -> BTreeSet<ObjectId> {
        self.events
            .iter()
            .flat_map(|e| e.objects(ot))
            .collect()
    }

    /// Restriction of the log to the given event ids (sublog).
    pub fn restrict(&self, ids: &BTreeSet<EventId>) -> EventLog {
        let events: Vec<Event> = self
            .events
            .iter()
            .filter(|e| ids.contains(&e.id))
            .cloned()
            .collect();
        let order = match &self.order {
            LogOrder::Timestamp => LogOrder::Timestamp,
            LogOrder::Explicit(edges) => LogOrder::Explicit(
                edges
                    .iter()
                    .filter(|(a, b)| ids.contains(a) && ids.contains(b))
                    .cloned()
                    .collect(),
            ),
        };
        EventLog::new(events, order).expect("restriction of a valid log stays valid")
    }

    /// Copy of the log with the activity of the selected events replaced.
    pub fn relabel_events(&self, ids: &BTreeSet<EventId>, new_activity: &str) -> EventLog {
        let events: Vec<Event> = self
            .events
            .iter()
            .map(|e| {
                let mut e = e.clone();
                if ids.contains(&e.id) {
                    e.activity = new_activity.to_string();
                }
                e
            })
            .collect();
        EventLog::new(events, self.order.clone()).expect("relabeling preserves validity")
    }

    /// Flattens the log onto one object type: one trace per object of that type,
    /// listing the activities of the object's events in linearized order.
    pub fn flatten(&self, ot: &str) -> SimpleEventLog {
        let mut traces = Vec::new();
        for obj in self.objects_of_type(ot) {
            let trace: Vec<String> = self
                .events
                .iter()
                .filter(|e| e.objects(ot).contains(&obj))
                .map(|e| e.activity.clone())
                .collect();
            traces.push(trace);
        }
        SimpleEventLog { traces }
    }
}

/// A classical (flattened) event log: a multiset of activity traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimpleEventLog {
    pub traces: Vec<Vec<String>>,
}

impl SimpleEventLog {
    pub fn new(traces: Vec<Vec<String>>) -> Self {
        SimpleEventLog { traces }
    }

    /// All activities occurring in the log, sorted.
    pub fn activities(&self) -> BTreeSet<String> {
        self.traces.iter().flatten().cloned().collect()
    }
}
