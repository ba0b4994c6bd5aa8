//! Bounded information-flow analysis of message-passing frames.
//!
//! A frame is a graph of locations exchanging values over one-directional
//! channels. This crate enumerates a frame's executions up to a size bound
//! and decides disclosure, blur-limited flow, cut propagation, composition and
//! purge-based noninterference by exhaustive search.

pub mod automaton;
pub mod enumerate;
pub mod events;
pub mod format;
pub mod frame;
pub mod cuts;
pub mod disclosure;
pub mod blur;
pub mod cli;
pub mod compose;
pub mod purge;
pub mod random;
pub mod report;
pub mod scenarios;
