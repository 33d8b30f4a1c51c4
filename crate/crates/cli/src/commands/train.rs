use std::path::Path;

use ottr_core::trainer::{train, RunLog, TrainConfig};

use crate::error::{CliError, CliResult};
use crate::io::{prepare_out_dir, read_text, seed_override, write_atomic, write_json};

/// Parses a config file and applies the seed override.
pub fn load_config(path: &Path, seed: Option<u64>) -> CliResult<TrainConfig> {
    let mut config = TrainConfig::parse(&read_text(path)?)?;
    if let Some(seed) = seed_override(seed)? {
        config.seed = seed;
    }
    Ok(config)
}

fn write_log(dir: &Path, log: &RunLog) -> CliResult<()> {
    write_atomic(&dir.join("log.csv"), log.to_csv()?.as_bytes())
}

pub fn run(config: &Path, out: &Path, seed: Option<u64>, force: bool, verbose: u8) -> CliResult<()> {
    let config = load_config(config, seed)?;
    prepare_out_dir(out, force)?;
    let resolved = config.resolved()?;
    write_atomic(&out.join("config.toml"), resolved.to_toml()?.as_bytes())?;
    let output = match train(&config) {
        Ok(o) => o,
        Err(failure) => {
            // keep what was logged so the failing iteration can be inspected
            write_log(out, &failure.log)?;
            if let Some(trace) = &failure.trace {
                write_json(&out.join("trace.json"), trace)?;
            }
            return Err(CliError::Core(failure.error));
        }
    };
    write_log(out, &output.log)?;
    write_json(&out.join("summary.json"), &output.summary)?;
    write_json(&out.join("policy.json"), &output.policy)?;
    if let Some(trace) = &output.trace {
        write_json(&out.join("trace.json"), trace)?;
    }
    if verbose > 0 {
        for r in &output.log.records {
            println!("k {:>5}  beta {:>12.6}  return {:>10.3}", r.k, r.beta, r.j_sampled);
        }
    }
    let s = &output.summary;
    println!(
        "{} {} seed {}: {} iterations, final return {:.3}{}",
        s.env,
        s.update,
        s.seed,
        s.iterations,
        s.final_return,
        s.final_j_exact.map_or(String::new(), |j| format!(", exact J {j:.6}")),
    );
    println!("wrote {}", out.display());
    Ok(())
}
