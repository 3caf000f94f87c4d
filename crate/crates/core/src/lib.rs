//! Game definitions and value engines for the d-outcome communication game
//! `G_d` and its Bell-inequality counterpart.

pub mod classical;
pub mod engine;
pub mod error;
pub mod game;
pub mod npa;
pub mod quantum;
pub mod report;
pub mod seesaw;
pub mod simulate;
pub mod verify;

pub use engine::{Cell, EngineContext, EngineRegistry, ValueEngine};
pub use error::{CoreError, Result};
pub use game::{Behavior, GameInput, GameSpec};
