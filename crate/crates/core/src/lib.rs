//! Object-centric process discovery and Petri-net soundness checking.
//!
//! The crate turns object-centric event logs into object-centric Petri nets:
//! per-object-type flattening, inductive mining of process trees, translation
//! to workflow nets, merging on shared activity labels, and finalization with
//! object-level markings. On top of the base pipeline it offers soundness
//! checking, log replay, detection of interaction patterns that break
//! soundness, and log-repair pipelines that discover sound nets in their
//! presence.

pub mod discovery;
pub mod extensions;
pub mod ocel;
pub mod ocpn;
pub mod petri;
pub mod patterns;
pub mod pipeline;
pub mod testkit;
