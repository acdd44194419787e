//! Config-file loading with dotted-key command-line overrides.
//!
//! A config file is a TOML document deserializing into
//! [`BatchConfig`]: a `[scenario]` table (only `scheme` and
//! `agent_count` are mandatory), an optional `num_runs`, and optional
//! `[[sweep]]` axes. Unknown keys are rejected. Overrides of the form
//! `path.to.key=value` are applied to the parsed document before
//! deserialization, last writer wins.

use std::fs;
use std::path::Path;

use thiserror::Error;
use toml::{Table, Value};

use crate::engine::InvalidConfig;
use crate::montecarlo::{materialize_specs, BatchConfig, BatchError};
use crate::Real;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid override {spec:?}: {reason}")]
    Override { spec: String, reason: String },
    #[error("{0}")]
    Invalid(#[from] InvalidConfig),
    #[error("{0}")]
    Batch(#[from] BatchError),
}

/// Loads a batch config from `path`, applies `overrides` in order, and
/// validates every specification the sweep expands to.
pub fn load_batch_config<F: Real>(
    path: &Path,
    overrides: &[String],
) -> Result<BatchConfig<F>, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_batch_config(&text, overrides)
}

/// Same as [`load_batch_config`] but from an in-memory document.
pub fn parse_batch_config<F: Real>(
    text: &str,
    overrides: &[String],
) -> Result<BatchConfig<F>, ConfigError> {
    let mut table: Table = text.parse()?;
    for spec in overrides {
        apply_override(&mut table, spec)?;
    }
    let batch: BatchConfig<F> = Value::Table(table).try_into()?;
    materialize_specs(&batch)?;
    Ok(batch)
}

/// Sets `path.to.key = value` inside the document. The value is parsed as
/// a TOML value (so numbers, booleans, arrays and inline tables work) and
/// falls back to a plain string, which lets enum constants be written
/// without quotes.
fn apply_override(table: &mut Table, spec: &str) -> Result<(), ConfigError> {
    let err = |reason: &str| ConfigError::Override {
        spec: spec.to_string(),
        reason: reason.to_string(),
    };
    let (path, raw_value) = spec.split_once('=').ok_or_else(|| err("missing '='"))?;
    let path = path.trim();
    if path.is_empty() {
        return Err(err("empty key path"));
    }
    let value = parse_toml_value(raw_value.trim());

    let mut segments = path.split('.').peekable();
    let mut current = table;
    loop {
        let segment = segments.next().expect("split yields at least one segment");
        if segment.is_empty() {
            return Err(err("empty key segment"));
        }
        if segments.peek().is_none() {
            current.insert(segment.to_string(), value);
            return Ok(());
        }
        let entry = current
            .entry(segment.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        if !entry.is_table() {
            // Descending through a scalar: the override replaces it.
            *entry = Value::Table(Table::new());
        }
        current = entry.as_table_mut().expect("just ensured a table");
    }
}

fn parse_toml_value(raw: &str) -> Value {
    // A bare word like `gaussian` is not valid TOML; treat it as a string.
    format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comms::{CommScheme, PartnerCount};
    use crate::montecarlo::SweepAxis;

    const MINIMAL: &str = "\
[scenario]
agent_count = 50

[scenario.scheme]
kind = \"digital_twin\"
";

    #[test]
    fn minimal_config_fills_every_default() {
        let batch: BatchConfig = parse_batch_config(MINIMAL, &[]).unwrap();
        assert_eq!(batch.num_runs, 1);
        assert!(batch.sweep.is_empty());
        let s = &batch.scenario;
        assert_eq!(s.agent_count, 50);
        assert_eq!(s.map_width, 640.0);
        assert_eq!(s.map_height, 600.0);
        assert_eq!(s.target, crate::Vec2::new(400.0, 300.0));
        assert_eq!(s.sigma, 1.0);
        assert_eq!(s.v_max, 5.0);
        assert_eq!(s.max_rounds, 300);
        assert_eq!(s.tx_budget, None);
        assert_eq!(s.master_seed, 42);
        assert_eq!(s.coeffs.c1, 2.0);
        assert_eq!(s.coeffs.c2, 2.0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{MINIMAL}\n[scenario.typo]\nx = 1\n");
        assert!(matches!(
            parse_batch_config::<f64>(&text, &[]),
            Err(ConfigError::Parse(_))
        ));
        let text = "speling_err = 3\n".to_string() + MINIMAL;
        assert!(parse_batch_config::<f64>(&text, &[]).is_err());
    }

    #[test]
    fn missing_required_fields_are_rejected() {
        assert!(parse_batch_config::<f64>("[scenario]\nagent_count = 5\n", &[]).is_err());
        assert!(parse_batch_config::<f64>(
            "[scenario]\n[scenario.scheme]\nkind = \"digital_twin\"\n",
            &[]
        )
        .is_err());
    }

    #[test]
    fn overrides_apply_after_the_file() {
        let batch: BatchConfig = parse_batch_config(
            MINIMAL,
            &[
                "scenario.agent_count=1".into(),
                "scenario.sigma=2.5".into(),
                "num_runs=7".into(),
                "scenario.weighting=gaussian".into(),
            ],
        )
        .unwrap();
        assert_eq!(batch.scenario.agent_count, 1);
        assert_eq!(batch.scenario.sigma, 2.5);
        assert_eq!(batch.num_runs, 7);
        assert_eq!(
            batch.scenario.weighting,
            crate::pso::RandomWeighting::Gaussian
        );
    }

    #[test]
    fn last_override_wins() {
        let batch: BatchConfig = parse_batch_config(
            MINIMAL,
            &["scenario.sigma=2.0".into(), "scenario.sigma=3.0".into()],
        )
        .unwrap();
        assert_eq!(batch.scenario.sigma, 3.0);
    }

    #[test]
    fn overrides_can_replace_whole_subtables() {
        let batch: BatchConfig = parse_batch_config(
            MINIMAL,
            &["scenario.scheme={ kind = \"cellular\", partners_k = \"max\" }".into()],
        )
        .unwrap();
        assert_eq!(
            batch.scenario.scheme,
            CommScheme::Cellular {
                partners_k: PartnerCount::AllOthers
            }
        );
    }

    #[test]
    fn malformed_overrides_are_rejected() {
        assert!(matches!(
            parse_batch_config::<f64>(MINIMAL, &["scenario.sigma".into()]),
            Err(ConfigError::Override { .. })
        ));
        assert!(matches!(
            parse_batch_config::<f64>(MINIMAL, &["=3".into()]),
            Err(ConfigError::Override { .. })
        ));
    }

    #[test]
    fn bound_violations_surface_at_load_time() {
        let err = parse_batch_config::<f64>(MINIMAL, &["scenario.v_max=0".into()]).unwrap_err();
        assert!(err.to_string().contains("v_max"));
    }

    #[test]
    fn sweep_axes_parse_from_toml() {
        let text = format!(
            "{MINIMAL}\n[[sweep]]\nparam = \"radius_r\"\nvalues = [50.0, 100.0]\n"
        );
        // radius sweep over a digital-twin base is rejected at load time
        assert!(parse_batch_config::<f64>(&text, &[]).is_err());

        let batch: BatchConfig = parse_batch_config(
            &text,
            &["scenario.scheme={ kind = \"d2d\", radius_r = 900.0 }".into()],
        )
        .unwrap();
        assert_eq!(batch.sweep, vec![SweepAxis::RadiusR(vec![50.0, 100.0])]);
    }
}
