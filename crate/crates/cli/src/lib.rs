//! File formats, machine records and command implementations for the
//! `esl` binary.

pub mod erasure;
pub mod format;
pub mod record;
pub mod run;
