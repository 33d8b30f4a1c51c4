use std::path::Path;

use ottr_core::trainer::{sweep, SweepAxis, SweepResult};

use super::train::load_config;
use crate::error::{CliError, CliResult};
use crate::io::{prepare_out_dir, write_atomic, write_json};

fn csv_bytes(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::Usage(format!("csv: {e}"));
    w.write_record(header).map_err(fail)?;
    for r in rows {
        w.write_record(&r).map_err(fail)?;
    }
    w.into_inner().map_err(|e| CliError::Usage(format!("csv: {e}")))
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

fn write_tables(out: &Path, result: &SweepResult) -> CliResult<()> {
    let aggregates = csv_bytes(
        &["value", "median_final_return", "median_wall_ms"],
        result.aggregates.iter().map(|a| {
            vec![a.value.to_string(), a.median_final_return.to_string(), a.median_wall_ms.to_string()]
        }),
    )?;
    write_atomic(&out.join("aggregates.csv"), &aggregates)?;
    let runs = csv_bytes(
        &["value", "seed", "final_return", "final_j_exact", "final_vgap_inf", "mean_beta", "total_wall_ms"],
        result.rows.iter().map(|r| {
            let s = &r.summary;
            vec![
                r.value.to_string(),
                r.seed.to_string(),
                s.final_return.to_string(),
                opt(s.final_j_exact),
                opt(s.final_vgap_inf),
                s.mean_beta.to_string(),
                s.total_wall_ms.to_string(),
            ]
        }),
    )?;
    write_atomic(&out.join("runs.csv"), &runs)?;
    let curves = csv_bytes(
        &["value", "seed", "k", "return"],
        result.rows.iter().flat_map(|r| {
            r.curve
                .iter()
                .enumerate()
                .map(|(k, g)| vec![r.value.to_string(), r.seed.to_string(), k.to_string(), g.to_string()])
        }),
    )?;
    write_atomic(&out.join("curves.csv"), &curves)
}

pub struct SweepArgs<'a> {
    pub config: &'a Path,
    pub axis: &'a str,
    pub values: &'a [f64],
    pub seeds: &'a [u64],
    pub jobs: Option<usize>,
    pub out: &'a Path,
    pub force: bool,
}

pub fn run(args: SweepArgs) -> CliResult<()> {
    let base = load_config(args.config, None)?;
    let axis: SweepAxis = args.axis.parse()?;
    prepare_out_dir(args.out, args.force)?;
    write_atomic(&args.out.join("config.toml"), base.resolved()?.to_toml()?.as_bytes())?;
    let result = sweep(&base, axis, args.values, args.seeds, args.jobs).map_err(|f| CliError::Core(f.error))?;
    write_json(&args.out.join("sweep.json"), &result)?;
    write_tables(args.out, &result)?;
    println!("{:>12} {:>20} {:>16}", "value", "median final return", "median wall ms");
    for a in &result.aggregates {
        println!("{:>12} {:>20.3} {:>16.1}", a.value, a.median_final_return, a.median_wall_ms);
    }
    println!("wrote {}", args.out.display());
    Ok(())
}
