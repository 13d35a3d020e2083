//! `ablation`: run the full pipeline once per configuration variant and
//! tabulate the posture benchmark AuC.
//!
//! Each variant is `NAME` or `NAME:key=value,key=value` where the keys
//! are ordinary config keys; commas inside a value (curriculum fractions,
//! neighbor counts) are kept with their assignment. Every variant runs
//! isolated under `out.dir/NAME/` from data synthesis through evaluation,
//! including `bootstrap.rounds` mining/retraining rounds. One variant
//! failing marks its row and the rest still run; the summary lands in
//! `ablation.csv`.

use poseforge_core::exec::JobRunner;

use crate::config::{ConfigError, PipelineConfig};
use crate::formats::csvout::write_csv;

use super::artifacts::RunManifest;
use super::{curriculum, eval_posture, flow, mine_reps, sample, synth, train, CommandError};
use super::{CHECKPOINT_NAME, MINED_TUPLES_NAME};

pub const CSV_NAME: &str = "ablation.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct VariantSpec {
    pub name: String,
    pub overrides: Vec<String>,
}

/// Splits `NAME:key=value,key=value`. A comma only separates assignments
/// when the next piece contains `=`; otherwise it belongs to the value.
pub fn parse_variant(spec: &str) -> Result<VariantSpec, ConfigError> {
    let (name, rest) = match spec.split_once(':') {
        Some((n, r)) => (n, Some(r)),
        None => (spec, None),
    };
    let name = name.trim();
    if name.is_empty() {
        return Err(ConfigError::Invalid {
            key: "variant".to_string(),
            why: format!("`{spec}` has no name before the colon"),
        });
    }
    if !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
        return Err(ConfigError::Invalid {
            key: "variant".to_string(),
            why: format!("name `{name}` must be alphanumeric with `-` or `_`"),
        });
    }
    let mut overrides: Vec<String> = Vec::new();
    if let Some(rest) = rest {
        for piece in rest.split(',') {
            if piece.contains('=') {
                overrides.push(piece.to_string());
            } else if let Some(last) = overrides.last_mut() {
                last.push(',');
                last.push_str(piece);
            } else {
                return Err(ConfigError::Invalid {
                    key: "variant".to_string(),
                    why: format!("`{piece}` in `{spec}` is not a key=value assignment"),
                });
            }
        }
    }
    Ok(VariantSpec {
        name: name.to_string(),
        overrides,
    })
}

/// Full pipeline for one variant, rooted under its own directory.
fn run_variant(
    base: &PipelineConfig,
    spec: &VariantSpec,
    runner: &dyn JobRunner,
) -> Result<f64, CommandError> {
    let variant_dir = base.out_dir.join(&spec.name);
    let mut config = base.clone();
    config.out_dir = variant_dir.clone();
    config.data_dir = variant_dir.join("data");
    config.apply_overrides(&spec.overrides)?;
    config.validate()?;

    synth::run(&config)?;
    flow::run(&config, runner)?;
    curriculum::run(&config)?;
    sample::run(&config)?;
    train::run(&config)?;

    for round in 0..config.bootstrap_rounds {
        let round_dir = variant_dir.join(format!("round{round}"));
        let mut mine_cfg = config.clone();
        mine_cfg.out_dir = round_dir.clone();
        mine_cfg.checkpoint = variant_dir.join(CHECKPOINT_NAME);
        mine_reps::run(&mine_cfg, runner)?;

        // Retraining keeps the variant dir so it finds the schedule and
        // tuples there; the checkpoint it resumes from is read fully
        // before the new one replaces it.
        let mut retrain_cfg = config.clone();
        retrain_cfg.resume = variant_dir.join(CHECKPOINT_NAME);
        retrain_cfg.mined_tuples = round_dir.join(MINED_TUPLES_NAME);
        retrain_cfg.train.total_iterations = config.retrain_iterations;
        train::run(&retrain_cfg)?;
    }

    let (auc, _) = eval_posture::evaluate(&config)?;
    Ok(auc)
}

fn one_line(err: &CommandError) -> String {
    err.to_string()
        .chars()
        .map(|c| match c {
            ',' => ';',
            '\n' | '\r' => ' ',
            c => c,
        })
        .collect()
}

pub fn run(
    config: &PipelineConfig,
    variants: &[String],
    runner: &dyn JobRunner,
) -> Result<(), CommandError> {
    let specs: Vec<VariantSpec> = variants
        .iter()
        .map(|s| parse_variant(s))
        .collect::<Result<_, _>>()?;
    for (i, a) in specs.iter().enumerate() {
        if specs[..i].iter().any(|b| b.name == a.name) {
            return Err(ConfigError::Invalid {
                key: "variant".to_string(),
                why: format!("duplicate name `{}`", a.name),
            }
            .into());
        }
    }

    let mut rows = Vec::with_capacity(specs.len());
    for spec in &specs {
        match run_variant(config, spec, runner) {
            Ok(auc) => {
                println!("ablation: variant {} average AuC {auc:.4}", spec.name);
                rows.push(vec![spec.name.clone(), auc.to_string(), "ok".to_string()]);
            }
            Err(err) => {
                eprintln!("ablation: variant {} failed: {err}", spec.name);
                rows.push(vec![
                    spec.name.clone(),
                    String::new(),
                    format!("failed: {}", one_line(&err)),
                ]);
            }
        }
    }

    let csv_path = config.out_dir.join(CSV_NAME);
    write_csv(&csv_path, &["variant", "average_auc", "status"], &rows)?;

    let mut manifest = RunManifest::new("ablation", &config.out_dir);
    manifest.record(&config.out_dir, &csv_path)?;
    manifest.write(config)?;
    println!("ablation: {} variants into {}", specs.len(), csv_path.display());
    Ok(())
}
