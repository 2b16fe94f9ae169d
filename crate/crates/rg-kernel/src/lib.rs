//! An executable kernel for rely/guarantee refinement checking.
//!
//! Commands from a wide-spectrum language (tests, atomic program and
//! environment steps, sequential/parallel/conjunctive composition, fixed
//! points) are denoted as finite sets of labelled traces over an enumerated
//! state space, bounded by a step depth. On top of that sit decision
//! procedures for refinement, Hoare-style triples, stability and
//! interference tolerance, a catalogue of algebraic laws that is checked
//! semantically, proof-rule checkers for loops and recursion, and a
//! concurrent set-removal case study.
//!
//! Start with the `examples/` directory; each example exercises one layer.

pub mod command;
pub mod dsl;
pub mod enum_engine;
pub mod graph_engine;
pub mod laws;
pub mod refine;
pub mod remove;
pub mod runner;
pub mod state;
pub mod trace;
