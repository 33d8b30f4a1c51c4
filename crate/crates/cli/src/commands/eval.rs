use std::path::Path;

use ottr_core::trainer::evaluate;
use ottr_core::{envs, PolicyTable, Rng};

use crate::error::CliResult;
use crate::io::{read_json, seed_override};

pub fn run(policy: &Path, env: &str, episodes: usize, seed: Option<u64>) -> CliResult<()> {
    let env = envs::by_name(env)?;
    let policy: PolicyTable = read_json(policy)?;
    let mut rng = Rng::new(seed_override(seed)?.unwrap_or(0));
    let summary = evaluate(&env, &policy, &mut rng, episodes)?;
    println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
    Ok(())
}
