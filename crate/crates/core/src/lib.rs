//! Verified temporal composition of neural-network controllers.
//!
//! A co-safe LTL task is translated into a DFA, each DFA edge becomes a
//! reach-avoid problem over named workspace regions, and a depth-first search
//! chains controllers whose sampled, padded reachable sets certify the edges.

pub mod automaton;
pub mod controller;
pub mod dynamics;
pub mod export;
pub mod geometry;
pub mod ltl;
pub mod pipeline;
pub mod reach;
pub mod registry;
pub mod rng;
pub mod scenario;
pub mod synthesis;
pub mod workspace;
