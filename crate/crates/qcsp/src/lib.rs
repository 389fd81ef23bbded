//! Quantified constraint satisfaction on partially reflexive forests.
//!
//! The crate bundles the pieces needed to study QCSP templates that are
//! forests with arbitrary self-loop placements: graph and sentence
//! representations, a brute-force evaluator that serves as ground truth,
//! the NL/NP-hard/Pspace-complete classifier for paths and forests with
//! machine-verified witnesses, majority-polymorphism constructions and
//! search, explicit surjective homomorphisms between graph powers, and
//! NAE3SAT reduction compilers checked against independent oracles.

pub mod classify;
pub mod enumerate;
pub mod graphs;
pub mod logic;
pub mod polymorph;
pub mod reduce;
pub mod solver;
pub mod surject;
pub mod survey;

pub use graphs::{PRGraph, PathForm, RootedTree, SearchOutcome, VertexMap};
pub use logic::{PHSentence, Quantifier, SentenceSampler};
pub use solver::{eval, eval_csp, EvalConfig, Propagation};
