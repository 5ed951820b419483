//! Fixture builders and seeded random generators for property testing:
//! the two shipped example logs, recipe-driven object-centric logs with
//! optional pattern injection, plain trace logs, and random accepting
//! object-centric Petri nets.

use crate::ocel::{Event, EventLog, LogOrder, SimpleEventLog};
use crate::ocpn::Ocpn;
use crate::patterns::{detect_oiwl_sub, detect_spurious};
use chrono::{DateTime, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

fn event(
    id: &str,
    activity: &str,
    timestamp: DateTime<Utc>,
    omap: &[(&str, &[&str])],
) -> Event {
    Event {
        id: id.to_string(),
        activity: activity.to_string(),
        timestamp,
        omap: omap
            .iter()
            .map(|(ot, objs)| (ot.to_string(), objs.iter().map(|o| o.to_string()).collect()))
            .collect(),
        vmap: BTreeMap::new(),
    }
}

fn ts(s: &str) -> DateTime<Utc> {
    s.parse().expect("fixture timestamps are valid")
}

/// The six-event coordinator/customer/service-provider log.
pub fn fixture_l1() -> EventLog {
    let events = vec![
        event("0ab63", "initialize", ts("2023-03-10T15:55:28Z"), &[("coordinator", &["151a3"])]),
        event(
            "6b0b9",
            "receive request",
            ts("2023-03-10T15:55:29Z"),
            &[("coordinator", &["151a3"]), ("customer", &["0a3a3"])],
        ),
        event(
            "ddf21",
            "delegate request",
            ts("2023-03-10T15:55:30Z"),
            &[("coordinator", &["151a3"]), ("service provider", &["ec135"])],
        ),
        event(
            "kj875",
            "fail on request",
            ts("2023-03-11T11:00:31Z"),
            &[("service provider", &["ec135"])],
        ),
        event(
            "9c7f8",
            "receive request",
            ts("2023-03-11T11:00:32Z"),
            &[("coordinator", &["151a3"]), ("service provider", &["ec135"])],
        ),
        event(
            "207f2",
            "escalate request",
            ts("2023-03-11T11:00:33Z"),
            &[("coordinator", &["151a3"])],
        ),
    ];
    EventLog::new(events, LogOrder::Timestamp).expect("fixture is valid")
}

/// The three-event retail/corporate credit log.
pub fn fixture_l2() -> EventLog {
    let events = vec![
        event(
            "b2589",
            "check statement",
            ts("2023-03-12T15:50:25Z"),
            &[("retail credit", &["a0287"])],
        ),
        event(
            "9e602",
            "check statement",
            ts("2023-03-12T15:50:26Z"),
            &[("corporate credit", &["677f7"])],
        ),
        event(
            "65145",
            "report to authority",
            ts("2023-03-12T15:50:37Z"),
            &[("retail credit", &["a0287"]), ("corporate credit", &["677f7"])],
        ),
    ];
    EventLog::new(events, LogOrder::Timestamp).expect("fixture is valid")
}

/// A recipe for generating an object-centric event log.
///
/// Each declared type follows its activity template in order; activities
/// listed in `interactions` are recorded as a single event shared by all
/// listed types. Pattern injection appends canonical pattern blocks with
/// fresh activities.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogRecipe {
    /// Declared object types, in roster order.
    pub types: Vec<String>,
    /// Activity template per type; interaction activities may occur at most
    /// once per template.
    pub templates: BTreeMap<String, Vec<String>>,
    /// `(activity, participating types)` interaction points.
    pub interactions: Vec<(String, Vec<String>)>,
    pub inject_loop: bool,
    pub inject_spurious: bool,
    pub seed: u64,
}

/// Errors raised by [`gen_log`].
#[derive(Debug, Error)]
pub enum RecipeError {
    #[error("recipe declares no object types")]
    NoTypes,
    #[error("template for type {0:?} is missing or empty")]
    EmptyTemplate(String),
    #[error("interaction references undeclared type {0:?}")]
    UndeclaredType(String),
    #[error("interaction activity {0:?} is missing from template of type {1:?}")]
    MissingInteractionActivity(String, String),
    #[error("templates deadlock on interaction ordering at activity {0:?}")]
    OrderingDeadlock(String),
    #[error("recipe cannot realize the requested pattern profile: {0}")]
    PatternImpossible(String),
}

/// Generates a deterministic log from a recipe.
///
/// Private activities of different types interleave pseudo-randomly from the
/// seed; interaction events synchronize all participating types. With loop
/// injection the log satisfies the loop subpattern, with spurious injection
/// the spurious pattern; with both flags off both detectors return nothing
/// (verified post-generation).
pub fn gen_log(recipe: &LogRecipe) -> Result<EventLog, RecipeError> {
    if recipe.types.is_empty() {
        return Err(RecipeError::NoTypes);
    }
    for ot in &recipe.types {
        if recipe.templates.get(ot).map_or(true, |t| t.is_empty()) {
            return Err(RecipeError::EmptyTemplate(ot.clone()));
        }
    }
    let mut interaction: BTreeMap<&String, &Vec<String>> = BTreeMap::new();
    for (act, parts) in &recipe.interactions {
        for ot in parts {
            if !recipe.types.contains(ot) {
                return Err(RecipeError::UndeclaredType(ot.clone()));
            }
            if !recipe.templates[ot].contains(act) {
                return Err(RecipeError::MissingInteractionActivity(act.clone(), ot.clone()));
            }
        }
        interaction.insert(act, parts);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(recipe.seed);
    let object: BTreeMap<&String, String> =
        recipe.types.iter().map(|ot| (ot, format!("{ot}0"))).collect();
    let mut cursors: BTreeMap<&String, usize> = recipe.types.iter().map(|ot| (ot, 0)).collect();
    let epoch = Utc.with_ymd_and_hms(2023, 1, 1, 0, 0, 0).unwrap();
    let mut events: Vec<Event> = Vec::new();
    let mut counter = 0usize;
    let emit = |events: &mut Vec<Event>, counter: &mut usize, act: &str, types: &[&String]| {
        events.push(Event {
            id: format!("e{:03}", *counter),
            activity: act.to_string(),
            timestamp: epoch + chrono::Duration::seconds(*counter as i64),
            omap: types
                .iter()
                .map(|ot| ((*ot).clone(), BTreeSet::from([object[*ot].clone()])))
                .collect(),
            vmap: BTreeMap::new(),
        });
        *counter += 1;
    };
    loop {
        // A type is ready when its next activity is private, or is an
        // interaction whose every participant has it up next.
        let ready: Vec<&String> = recipe
            .types
            .iter()
            .filter(|ot| {
                let i = cursors[*ot];
                let template = &recipe.templates[*ot];
                if i >= template.len() {
                    return false;
                }
                match interaction.get(&template[i]) {
                    None => true,
                    Some(parts) => parts.iter().all(|p| {
                        recipe.templates[p].get(cursors[&p]) == Some(&template[i])
                    }),
                }
            })
            .collect();
        if ready.is_empty() {
            if let Some(stuck) = recipe
                .types
                .iter()
                .find(|ot| cursors[*ot] < recipe.templates[*ot].len())
            {
                return Err(RecipeError::OrderingDeadlock(
                    recipe.templates[stuck][cursors[stuck]].clone(),
                ));
            }
            break;
        }
        let ot = ready[rng.gen_range(0..ready.len())];
        let act = recipe.templates[ot][cursors[ot]].clone();
        match interaction.get(&act) {
            None => {
                emit(&mut events, &mut counter, &act, &[ot]);
                *cursors.get_mut(ot).unwrap() += 1;
            }
            Some(parts) => {
                let refs: Vec<&String> = parts.iter().collect();
                emit(&mut events, &mut counter, &act, &refs);
                for p in parts.iter() {
                    *cursors.get_mut(p).unwrap() += 1;
                }
            }
        }
    }
    let all_acts: BTreeSet<String> = recipe.templates.values().flatten().cloned().collect();
    let fresh_act = |base: &str| -> String {
        if all_acts.contains(base) {
            format!("{base}'")
        } else {
            base.to_string()
        }
    };
    if recipe.inject_loop {
        if recipe.types.len() < 2 {
            return Err(RecipeError::PatternImpossible(
                "loop injection needs two object types".into(),
            ));
        }
        let t1 = &recipe.types[0];
        let t2 = &recipe.types[1];
        let act1 = fresh_act("loop do");
        let act2 = fresh_act("loop redo");
        let act4 = fresh_act("loop fill");
        emit(&mut events, &mut counter, &act1, &[t1]);
        emit(&mut events, &mut counter, &act2, &[t1, t2]);
        emit(&mut events, &mut counter, &act4, &[t2]);
        // Shared event closing the loop: same activity as the opener.
        emit(&mut events, &mut counter, &act1, &[t1, t2]);
    }
    if recipe.inject_spurious {
        if recipe.types.len() < 2 {
            return Err(RecipeError::PatternImpossible(
                "spurious injection needs two object types".into(),
            ));
        }
        let t1 = &recipe.types[0];
        let t2 = &recipe.types[1];
        let act = fresh_act("spurious act");
        emit(&mut events, &mut counter, &act, &[t1]);
        emit(&mut events, &mut counter, &act, &[t2]);
    }
    let log = EventLog::new(events, LogOrder::Timestamp).expect("generated events are valid");
    let has_loop = !detect_oiwl_sub(&log).is_empty();
    if has_loop != recipe.inject_loop {
        return Err(RecipeError::PatternImpossible(format!(
            "loop subpattern detected={has_loop}, requested={}",
            recipe.inject_loop
        )));
    }
    let has_spurious = !detect_spurious(&log).is_empty();
    if has_spurious != recipe.inject_spurious {
        return Err(RecipeError::PatternImpossible(format!(
            "spurious pattern detected={has_spurious}, requested={}",
            recipe.inject_spurious
        )));
    }
    Ok(log)
}

/// A seeded random trace log: up to 6 activities, up to 8 traces of length
/// up to 10.
pub fn gen_simple_log(seed: u64) -> SimpleEventLog {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alphabet = ["a", "b", "c", "d", "e", "f"];
    let n_acts = rng.gen_range(1..=6);
    let n_traces = rng.gen_range(1..=8);
    let traces = (0..n_traces)
        .map(|_| {
            let len = rng.gen_range(1..=10);
            (0..len)
                .map(|_| alphabet[rng.gen_range(0..n_acts)].to_string())
                .collect()
        })
        .collect();
    SimpleEventLog { traces }
}

/// A seeded random accepting object-centric Petri net with at most 3 objects
/// and 12 places.
///
/// Each type carries a marked chain of places; mutations (shared synchronizing
/// transitions, skip arcs, variable arcs, dead appendages) produce a mix of
/// sound and unsound instances with small state spaces.
pub fn gen_ocpn(seed: u64) -> Ocpn {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = Ocpn::default();
    let n_types = rng.gen_range(1..=2);
    let mut chains: Vec<Vec<usize>> = Vec::new();
    let mut label_counter = 0;
    for ty in 0..n_types {
        let ot = format!("T{ty}");
        let len = rng.gen_range(2..=4);
        let chain: Vec<usize> =
            (0..len).map(|k| net.add_place(format!("{ot}::p{k}"), ot.clone())).collect();
        for w in chain.windows(2) {
            let label = format!("act{label_counter}");
            label_counter += 1;
            net.add_transition(
                label.clone(),
                Some(label),
                BTreeSet::from([w[0]]),
                BTreeSet::from([w[1]]),
            );
        }
        let n_objects = rng.gen_range(1..=if n_types == 1 { 3 } else { 1 });
        for o in 0..n_objects {
            net.m_init.insert((chain[0], format!("{ot}_o{o}")), 1);
            net.m_final.insert((chain[len - 1], format!("{ot}_o{o}")), 1);
        }
        chains.push(chain);
    }
    // Synchronize the two chains on one shared transition.
    if n_types == 2 && rng.gen_bool(0.4) {
        let a = chains[0][0];
        let b = chains[1][0];
        let label = format!("act{label_counter}");
        label_counter += 1;
        net.add_transition(
            label.clone(),
            Some(label),
            BTreeSet::from([a, b]),
            BTreeSet::from([chains[0][1], chains[1][1]]),
        );
    }
    // A skip transition over the first chain introduces alternative paths
    // and can leave the chain's own step dead.
    if chains[0].len() >= 3 && rng.gen_bool(0.4) {
        let label = format!("act{label_counter}");
        label_counter += 1;
        net.add_transition(
            label.clone(),
            Some(label),
            BTreeSet::from([chains[0][0]]),
            BTreeSet::from([chains[0][2]]),
        );
    }
    // A dead appendage: a transition from an always-empty fresh place.
    if rng.gen_bool(0.3) {
        let ot = net.places[0].object_type.clone();
        let limbo = net.add_place("limbo", ot);
        let label = format!("act{label_counter}");
        net.add_transition(
            label.clone(),
            Some(label),
            BTreeSet::from([limbo]),
            BTreeSet::from([chains[0][chains[0].len() - 1]]),
        );
    }
    // Make one chain step variable on both sides (stays well-formed).
    if rng.gen_bool(0.3) {
        let t = 0;
        let pre = net.pre[t].clone();
        let post = net.post[t].clone();
        for p in pre {
            net.var_pre.insert((t, p));
        }
        for p in post {
            net.var_post.insert((t, p));
        }
    }
    net
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patterns::detect_oiwl;
    use crate::pipeline::ocpd_base;
    use crate::petri::Soundness;

    #[test]
    fn fixtures_have_the_published_shapes() {
        let l1 = fixture_l1();
        assert_eq!(l1.events().len(), 6);
        assert_eq!(l1.events()[0].id, "0ab63");
        let l2 = fixture_l2();
        assert_eq!(l2.events().len(), 3);
        let last = &l2.events()[2];
        assert!(last.touches("retail credit") && last.touches("corporate credit"));
    }

    fn base_recipe() -> LogRecipe {
        LogRecipe {
            types: vec!["alpha".into(), "beta".into()],
            templates: BTreeMap::from([
                ("alpha".to_string(), vec!["start".into(), "sync".into(), "finish".into()]),
                ("beta".to_string(), vec!["prepare".into(), "sync".into(), "close".into()]),
            ]),
            interactions: vec![("sync".into(), vec!["alpha".into(), "beta".into()])],
            inject_loop: false,
            inject_spurious: false,
            seed: 7,
        }
    }

    #[test]
    fn generator_is_deterministic() {
        let a = gen_log(&base_recipe()).unwrap();
        let b = gen_log(&base_recipe()).unwrap();
        assert_eq!(a.events(), b.events());
    }

    #[test]
    fn pattern_free_recipe_detects_nothing_and_is_sound() {
        let log = gen_log(&base_recipe()).unwrap();
        assert!(detect_oiwl(&log).is_empty());
        assert!(detect_spurious(&log).is_empty());
        let base = ocpd_base(&log);
        assert_eq!(base.ocpn.is_oc_sound(100_000, 256), Soundness::Sound);
    }

    #[test]
    fn loop_injection_satisfies_the_subpattern() {
        let mut recipe = base_recipe();
        recipe.inject_loop = true;
        let log = gen_log(&recipe).unwrap();
        assert!(!detect_oiwl_sub(&log).is_empty());
    }

    #[test]
    fn spurious_injection_satisfies_the_pattern() {
        let mut recipe = base_recipe();
        recipe.inject_spurious = true;
        let log = gen_log(&recipe).unwrap();
        assert!(!detect_spurious(&log).is_empty());
    }

    #[test]
    fn invalid_recipes_error() {
        let mut recipe = base_recipe();
        recipe.templates.get_mut("alpha").unwrap().clear();
        assert!(matches!(gen_log(&recipe), Err(RecipeError::EmptyTemplate(_))));
        let mut recipe = base_recipe();
        recipe.interactions.push(("sync".into(), vec!["gamma".into()]));
        assert!(matches!(gen_log(&recipe), Err(RecipeError::UndeclaredType(_))));
        let mut recipe = base_recipe();
        recipe.types.truncate(1);
        recipe.templates.remove("beta");
        recipe.interactions.clear();
        recipe.inject_loop = true;
        assert!(matches!(gen_log(&recipe), Err(RecipeError::PatternImpossible(_))));
    }

    #[test]
    fn random_nets_are_small_and_deterministic() {
        for seed in 0..20 {
            let net = gen_ocpn(seed);
            assert!(net.places.len() <= 12);
            assert!(net.population_of(&net.m_init).values().map(|s| s.len()).sum::<usize>() <= 3);
            assert_eq!(net, gen_ocpn(seed));
            assert!(net.is_well_formed());
        }
    }

    #[test]
    fn simple_logs_respect_bounds() {
        for seed in 0..20 {
            let log = gen_simple_log(seed);
            assert!(!log.traces.is_empty() && log.traces.len() <= 8);
            assert!(log.traces.iter().all(|t| !t.is_empty() && t.len() <= 10));
            assert!(log.activities().len() <= 6);
        }
    }
}
