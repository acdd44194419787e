//! Results-file emission: a commented metadata header (tool version,
//! master seed, the fully resolved config, spec labels) followed by one
//! CSV record per (spec, run, round).
//!
//! A results file is self-describing: extracting the embedded config and
//! re-running the tool reproduces the table byte for byte. Within each
//! specification all runs are aligned to the longest one; carried-forward
//! rows are marked in the `padded` column.

use std::fs;
use std::io;
use std::path::Path;

use crate::engine::RoundMetrics;
use crate::montecarlo::{BatchConfig, BatchResult};
use crate::Real;

/// Marker for lines holding the embedded config inside the header.
const CONFIG_PREFIX: &str = "# | ";

/// Renders the complete results file. Pure, so identical inputs give
/// identical bytes.
pub fn render_results<F: Real>(
    batch: &BatchConfig<F>,
    result: &BatchResult<F>,
    tool_version: &str,
) -> String {
    let mut out = String::new();
    out.push_str("# swarmloc results v1\n");
    out.push_str(&format!("# tool_version = \"{tool_version}\"\n"));
    out.push_str(&format!("# master_seed = {}\n", batch.scenario.master_seed));
    out.push_str(&format!("# num_runs = {}\n", batch.num_runs));
    out.push_str(&format!("# specs = {}\n", result.specs.len()));
    for spec in &result.specs {
        out.push_str(&format!(
            "# spec {} = {:?} (digest {})\n",
            spec.descriptor.index,
            spec.descriptor.label,
            spec.descriptor.config.digest(),
        ));
    }
    out.push_str("# resolved config follows; strip the leading '# | ' to re-run it:\n");
    let config_toml = toml::to_string_pretty(batch).expect("batch config serializes");
    for line in config_toml.lines() {
        out.push_str(CONFIG_PREFIX);
        out.push_str(line);
        out.push('\n');
    }
    out.push_str(
        "spec,run,round,mean_true_distance,min_true_distance,swarm_best_est,cumulative_tx,padded\n",
    );

    for spec in &result.specs {
        let horizon = spec.runs.iter().map(|r| r.metrics.len()).max().unwrap_or(0);
        for (run_index, run) in spec.runs.iter().enumerate() {
            for t in 1..=horizon {
                let (m, padded): (&RoundMetrics<F>, bool) = if t <= run.metrics.len() {
                    (&run.metrics[t - 1], false)
                } else {
                    (run.metrics.last().unwrap_or(&run.initial), true)
                };
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    spec.descriptor.index,
                    run_index,
                    t,
                    m.mean_true_distance,
                    m.min_true_distance,
                    m.swarm_best_est,
                    m.cumulative_tx,
                    padded,
                ));
            }
        }
    }
    out
}

/// Extracts the embedded config document from a rendered results file.
pub fn embedded_config(results: &str) -> String {
    results
        .lines()
        .filter_map(|l| l.strip_prefix(CONFIG_PREFIX))
        .map(|l| format!("{l}\n"))
        .collect()
}

/// Writes the results file atomically: the content goes to a temporary
/// sibling first and is renamed into place, so a failed write never
/// leaves a partial file behind.
pub fn write_results<F: Real>(
    path: &Path,
    batch: &BatchConfig<F>,
    result: &BatchResult<F>,
    tool_version: &str,
) -> io::Result<()> {
    let rendered = render_results(batch, result, tool_version);
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = path.with_file_name(format!(
        ".{}.tmp-{}",
        path.file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "results".to_string()),
        std::process::id(),
    ));
    if let Some(dir) = dir {
        fs::create_dir_all(dir)?;
    }
    if let Err(e) = fs::write(&tmp, rendered.as_bytes()) {
        let _ = fs::remove_file(&tmp);
        return Err(e);
    }
    if let Err(e) = fs::rename(&tmp, path) {
        let _ = fs::remove_file(&tmp);
        return Err(e);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comms::CommScheme;
    use crate::config::parse_batch_config;
    use crate::montecarlo::run_batch_with_threads;
    use crate::scenarios::scenario;

    fn small_batch() -> BatchConfig {
        let mut batch = scenario("default").unwrap();
        batch.num_runs = 3;
        batch.scenario.agent_count = 6;
        batch.scenario.max_rounds = 8;
        batch
    }

    #[test]
    fn rendering_is_reproducible_and_well_formed() {
        let batch = small_batch();
        let result = run_batch_with_threads(&batch, Some(2)).unwrap();
        let a = render_results(&batch, &result, "test");
        let b = render_results(&batch, &result, "test");
        assert_eq!(a, b);

        let header = "spec,run,round,mean_true_distance,min_true_distance,\
                      swarm_best_est,cumulative_tx,padded";
        assert!(a.lines().any(|l| l == header));
        // 3 runs x 8 rounds, nothing padded for a constant-cost scheme
        let records: Vec<&str> = a.lines().filter(|l| !l.starts_with('#') && *l != header).collect();
        assert_eq!(records.len(), 24);
        assert!(records.iter().all(|r| r.ends_with(",false")));
    }

    #[test]
    fn embedded_config_reproduces_the_run() {
        let batch = small_batch();
        let result = run_batch_with_threads(&batch, Some(2)).unwrap();
        let rendered = render_results(&batch, &result, "test");

        let recovered: BatchConfig = parse_batch_config(&embedded_config(&rendered), &[]).unwrap();
        assert_eq!(recovered, batch);
        let re_run = run_batch_with_threads(&recovered, Some(1)).unwrap();
        assert_eq!(render_results(&recovered, &re_run, "test"), rendered);
    }

    #[test]
    fn padded_rows_are_marked() {
        let mut batch = small_batch();
        batch.scenario.scheme = CommScheme::D2d { radius_r: 200.0 };
        batch.scenario.tx_budget = Some(500);
        batch.scenario.max_rounds = 40;
        batch.num_runs = 8;
        let result = run_batch_with_threads(&batch, Some(2)).unwrap();
        let rendered = render_results(&batch, &result, "test");
        assert!(
            rendered.lines().any(|l| l.ends_with(",true")),
            "expected at least one padded row"
        );
    }

    #[test]
    fn write_is_atomic_and_leaves_no_temp_files() {
        let batch = small_batch();
        let result = run_batch_with_threads(&batch, Some(2)).unwrap();
        let dir = std::env::temp_dir().join(format!("swarmloc-results-{}", std::process::id()));
        let path = dir.join("out.csv");
        write_results(&path, &batch, &result, "test").unwrap();
        let written = fs::read_to_string(&path).unwrap();
        assert_eq!(written, render_results(&batch, &result, "test"));
        assert_eq!(fs::read_dir(&dir).unwrap().count(), 1);
        fs::remove_dir_all(&dir).unwrap();
    }
}
