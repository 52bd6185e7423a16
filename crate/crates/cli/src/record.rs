//! The machine record: one JSON object per invocation. Field names are a
//! stable interface; every field is always present, `null` when it does
//! not apply.

use std::collections::BTreeMap;

use esl_core::check::Stats;
use esl_core::env::StateId;
use esl_core::{Environment, GlobalState, StrategyProfile};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::format::render_env;

/// `agent -> state -> enabled actions`.
pub type ProfileRecord = BTreeMap<String, BTreeMap<String, Vec<String>>>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlobalStateRecord {
    pub state: String,
    pub profile: ProfileRecord,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsRecord {
    pub states_explored: usize,
    pub profiles_enumerated: usize,
    pub memo_hits: usize,
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Record {
    pub command: String,
    /// SHA-256 of the environment in canonical rendering, so comments and
    /// layout do not change it.
    pub env_digest: Option<String>,
    pub formula: Option<String>,
    pub class: Option<String>,
    pub engine: Option<String>,
    pub fragment: Option<String>,
    pub bindings: Option<BTreeMap<String, GlobalStateRecord>>,
    pub holds: Option<bool>,
    pub exit_code: i32,
    pub witness: Option<GlobalStateRecord>,
    pub stats: Option<StatsRecord>,
    pub error: Option<String>,
    /// Command-specific extras (per-state ATEL results, implementation
    /// lists, generated files).
    pub details: Option<serde_json::Value>,
}

impl Record {
    pub fn new(command: &str) -> Self {
        Record {
            command: command.into(),
            ..Record::default()
        }
    }
}

pub fn env_digest(env: &Environment) -> String {
    Sha256::digest(render_env(env).as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn profile_record(env: &Environment, profile: &StrategyProfile) -> ProfileRecord {
    profile
        .0
        .iter()
        .enumerate()
        .map(|(i, strategy)| {
            let agent = i as u32;
            let table = (0..env.num_states() as StateId)
                .map(|s| {
                    let acts = strategy
                        .enabled(s)
                        .iter()
                        .map(|a| env.actions(agent).name(a).to_string())
                        .collect();
                    (env.state_name(s).to_string(), acts)
                })
                .collect();
            (env.agent_name(agent).to_string(), table)
        })
        .collect()
}

pub fn global_state_record(env: &Environment, g: &GlobalState) -> GlobalStateRecord {
    GlobalStateRecord {
        state: env.state_name(g.state).to_string(),
        profile: profile_record(env, &g.profile),
    }
}

pub fn stats_record(stats: &Stats, elapsed_ms: u64) -> StatsRecord {
    StatsRecord {
        states_explored: stats.states_explored,
        profiles_enumerated: stats.profiles_enumerated,
        memo_hits: stats.memo_hits,
        elapsed_ms,
    }
}
