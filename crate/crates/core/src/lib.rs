pub mod error;
pub mod matcore;
pub mod pauli;
pub mod focus;
pub mod net;
pub mod commutator;
pub mod fit;
pub mod lemmas;
pub mod run;
pub mod sk;

pub use error::{Error, Result};
