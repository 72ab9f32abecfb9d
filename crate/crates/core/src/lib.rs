//! Rubik's Cube Cayley-graph toolkit: exact cube group, random-walk training
//! data, a message-passing distance classifier, and A* search guided by a
//! consistent heuristic built from the classifier's predictions.

pub mod bench;
pub mod cube;
pub mod error;
pub mod gnn;
pub mod oracle;
pub mod search;
pub mod walk;

pub use cube::{CubeState, Face, Move, StateKey};
pub use error::{Error, Result};
