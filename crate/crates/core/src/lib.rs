//! Explicit-state model checking for epistemic strategy logic.
//!
//! The crate is `no_std` (with `alloc`); the `std` feature only matters for
//! the optional `parallel` feature.

#![cfg_attr(not(any(test, feature = "std")), no_std)]

extern crate alloc;

pub mod atel;
pub mod check;
pub mod env;
pub mod formula;
pub mod game;
pub mod kbp;
pub mod qbf;
pub mod space;
pub mod strategy;
#[cfg(any(test, feature = "testkit"))]
pub mod testkit;

pub use check::{check, CheckError, CheckOptions, Checker, Context, Engine, Instance, Verdict};
pub use env::{Environment, EnvironmentBuilder, Violation};
pub use formula::{Formula, Fragment};
pub use space::{AgentTag, GlobalState, Space};
pub use strategy::{ActionSet, Strategy, StrategyClass, StrategyProfile};
