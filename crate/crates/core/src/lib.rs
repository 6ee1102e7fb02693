//! Incrementally maintained Datalog join rules evaluated with leapfrog
//! triejoin over versioned relations.

pub mod cli;
pub mod error;
pub mod heads;
pub mod interval;
pub mod key;
pub mod lftj;
pub mod maintain;
pub mod rule;
pub mod scan;
pub mod store;

pub use error::{Error, Result};
pub use key::{Delta, Key, Tuple, Value};
