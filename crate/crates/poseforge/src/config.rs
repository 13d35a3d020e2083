//! Flat dotted-key configuration: defaults, file parsing, and `--set`
//! overrides. Unknown keys are rejected so typos fail loudly, and the
//! full effective config can be echoed back for run manifests.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use poseforge_core::curriculum::{DESK_UPDATE_INTERVAL, DEFAULT_FRACTIONS};
use poseforge_core::eval::RetrievalConfig;
use poseforge_core::flow::FlowParams;
use poseforge_core::net::{TaskSelection, TrainConfig};
use poseforge_core::repetition::MinerConfig;
use poseforge_core::sampling::SamplerConfig;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {reason}")]
    Unreadable { path: String, reason: String },
    #[error("config line {line}: expected `key = value`, got `{text}`")]
    Malformed { line: usize, text: String },
    #[error("unknown config key `{key}`")]
    UnknownKey { key: String },
    #[error("config key `{key}`: cannot parse `{value}` as {expected}")]
    BadValue {
        key: String,
        value: String,
        expected: &'static str,
    },
    #[error("config key `{key}`: {why}")]
    Invalid { key: String, why: String },
}

/// Synthesis settings for the `synth` command. Per-clip amplitude sweeps
/// linearly from `amplitude_min` to `amplitude_max` so a generated
/// dataset spans easy through hard motion.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSection {
    pub clips: u32,
    pub n_frames: u32,
    pub image_size: u32,
    pub period: u32,
    pub amplitude_min: f32,
    pub amplitude_max: f32,
    pub background_motion: f32,
    pub noise_sigma: f32,
}

impl Default for SynthSection {
    fn default() -> Self {
        Self {
            clips: 4,
            n_frames: 200,
            image_size: 64,
            period: 20,
            amplitude_min: 6.0,
            amplitude_max: 12.0,
            background_motion: 0.5,
            noise_sigma: 10.0,
        }
    }
}

/// Everything the pipeline commands read, with paper-anchored defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub seed: u64,
    /// Dataset directory (holds manifest.tsv, frame files, gt.tsv).
    pub data_dir: PathBuf,
    /// All artifacts are written below this directory.
    pub out_dir: PathBuf,
    pub synth: SynthSection,
    pub flow: FlowParams,
    /// Also write per-pair flow caches, not only motion scores.
    pub flow_cache: bool,
    pub fractions: Vec<u32>,
    pub update_interval: u32,
    pub sampler: SamplerConfig,
    pub anchor_stride: u32,
    pub spatial_stride: u32,
    pub train: TrainConfig,
    /// Checkpoint to continue from (empty: fresh initialization).
    pub resume: PathBuf,
    /// Extra temporal tuples joined into the earliest curriculum block
    /// (empty: none).
    pub mined_tuples: PathBuf,
    /// Model the mining, embedding, and eval commands load (empty: the
    /// checkpoint the train command writes under out.dir).
    pub checkpoint: PathBuf,
    pub miner: MinerConfig,
    /// Mining/retraining rounds run by the ablation command after the
    /// base training (0: train only).
    pub bootstrap_rounds: u32,
    /// Iterations per ablation retraining round.
    pub retrain_iterations: u32,
    /// Dump per-video self-similarity matrices next to the groups.
    pub dump_ssm: bool,
    pub retrieval: RetrievalConfig,
    pub n_queries: usize,
    pub exemplars_per_clip: usize,
    /// Also write an SVG plot of the retrieval metrics over K.
    pub svg: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            data_dir: PathBuf::from("data"),
            out_dir: PathBuf::from("out"),
            synth: SynthSection::default(),
            flow: FlowParams::default(),
            flow_cache: false,
            fractions: DEFAULT_FRACTIONS.to_vec(),
            update_interval: DESK_UPDATE_INTERVAL,
            sampler: SamplerConfig::default(),
            anchor_stride: 4,
            spatial_stride: 8,
            train: TrainConfig::default(),
            resume: PathBuf::new(),
            mined_tuples: PathBuf::new(),
            checkpoint: PathBuf::new(),
            miner: MinerConfig::default(),
            bootstrap_rounds: 0,
            retrain_iterations: 800,
            dump_ssm: false,
            retrieval: RetrievalConfig::default(),
            n_queries: 50,
            exemplars_per_clip: 5,
            svg: false,
        }
    }
}

fn parse<T: std::str::FromStr>(
    key: &str,
    value: &str,
    expected: &'static str,
) -> Result<T, ConfigError> {
    value.trim().parse().map_err(|_| ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        expected,
    })
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(ConfigError::BadValue {
            key: key.to_string(),
            value: value.to_string(),
            expected: "bool (true/false)",
        }),
    }
}

fn parse_list<T: std::str::FromStr>(
    key: &str,
    value: &str,
    expected: &'static str,
) -> Result<Vec<T>, ConfigError> {
    value
        .split(',')
        .map(|item| parse(key, item, expected))
        .collect()
}

impl PipelineConfig {
    /// Applies one `key = value` pair. The key table below is exhaustive;
    /// anything else is an error.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value.trim();
        match key {
            "seed" => {
                self.seed = parse(key, v, "u64")?;
                self.sampler.seed = self.seed;
                self.train.seed = self.seed;
            }
            "data.dir" => self.data_dir = PathBuf::from(v),
            "out.dir" => self.out_dir = PathBuf::from(v),

            "synth.clips" => self.synth.clips = parse(key, v, "u32")?,
            "synth.n_frames" => self.synth.n_frames = parse(key, v, "u32")?,
            "synth.image_size" => self.synth.image_size = parse(key, v, "u32")?,
            "synth.period" => self.synth.period = parse(key, v, "u32")?,
            "synth.amplitude_min" => self.synth.amplitude_min = parse(key, v, "f32")?,
            "synth.amplitude_max" => self.synth.amplitude_max = parse(key, v, "f32")?,
            "synth.background_motion" => self.synth.background_motion = parse(key, v, "f32")?,
            "synth.noise_sigma" => self.synth.noise_sigma = parse(key, v, "f32")?,

            "flow.alpha" => self.flow.alpha = parse(key, v, "f32")?,
            "flow.n_iter" => self.flow.n_iter = parse(key, v, "u32")?,
            "flow.cache" => self.flow_cache = parse_bool(key, v)?,

            "curriculum.fractions" => self.fractions = parse_list(key, v, "u32 list")?,
            "curriculum.update_interval" => self.update_interval = parse(key, v, "u32")?,

            "sampler.tau_plus" => self.sampler.tau_plus = parse(key, v, "u32")?,
            "sampler.tau_neg_min" => self.sampler.tau_neg_min = parse(key, v, "u32")?,
            "sampler.tau_neg_max" => self.sampler.tau_neg_max = parse(key, v, "u32")?,
            "sampler.sigma_pos_lo" => self.sampler.sigma_pos.0 = parse(key, v, "f32")?,
            "sampler.sigma_pos_hi" => self.sampler.sigma_pos.1 = parse(key, v, "f32")?,
            "sampler.sigma_neg_lo" => self.sampler.sigma_neg.0 = parse(key, v, "f32")?,
            "sampler.sigma_neg_hi" => self.sampler.sigma_neg.1 = parse(key, v, "f32")?,
            "sampler.negatives_per_positive" => {
                self.sampler.negatives_per_positive = parse(key, v, "usize")?
            }
            "sampler.max_crop_attempts" => {
                self.sampler.max_crop_attempts = parse(key, v, "usize")?
            }
            "sample.anchor_stride" => self.anchor_stride = parse(key, v, "u32")?,
            "sample.spatial_stride" => self.spatial_stride = parse(key, v, "u32")?,

            "train.batch_size" => self.train.batch_size = parse(key, v, "usize")?,
            "train.negatives_per_positive" => {
                self.train.negatives_per_positive = parse(key, v, "usize")?
            }
            "train.base_lr" => self.train.base_lr = parse(key, v, "f64")?,
            "train.conv_lr" => self.train.conv_lr = parse(key, v, "f64")?,
            "train.spatial_loss_weight" => {
                self.train.spatial_loss_weight = parse(key, v, "f64")?
            }
            "train.total_iterations" => self.train.total_iterations = parse(key, v, "u32")?,
            "train.leaky_slope" => self.train.leaky_slope = parse(key, v, "f64")?,
            "train.bn_momentum" => self.train.bn_momentum = parse(key, v, "f64")?,
            "train.bn_epsilon" => self.train.bn_epsilon = parse(key, v, "f64")?,
            "train.beta1" => self.train.beta1 = parse(key, v, "f64")?,
            "train.beta2" => self.train.beta2 = parse(key, v, "f64")?,
            "train.adam_epsilon" => self.train.adam_epsilon = parse(key, v, "f64")?,
            "train.tasks" => {
                self.train.tasks = match v {
                    "temporal" => TaskSelection::Temporal,
                    "spatial" => TaskSelection::Spatial,
                    "both" => TaskSelection::Both,
                    _ => {
                        return Err(ConfigError::BadValue {
                            key: key.to_string(),
                            value: value.to_string(),
                            expected: "temporal | spatial | both",
                        })
                    }
                }
            }
            "train.resume" => self.resume = PathBuf::from(v),
            "train.mined_tuples" => self.mined_tuples = PathBuf::from(v),
            "checkpoint" => self.checkpoint = PathBuf::from(v),
            "bootstrap.rounds" => self.bootstrap_rounds = parse(key, v, "u32")?,
            "bootstrap.retrain_iterations" => {
                self.retrain_iterations = parse(key, v, "u32")?
            }

            "miner.kernel_size" => self.miner.kernel_size = parse(key, v, "usize")?,
            "miner.band" => self.miner.band = parse(key, v, "usize")?,
            "miner.threshold_percentile" => {
                self.miner.threshold_percentile = parse(key, v, "f64")?
            }
            "miner.min_separation" => self.miner.min_separation = parse(key, v, "usize")?,
            "miner.group_gap" => self.miner.group_gap = parse(key, v, "usize")?,
            "miner.dump_ssm" => self.dump_ssm = parse_bool(key, v)?,

            "retrieval.k_values" => self.retrieval.k_values = parse_list(key, v, "usize list")?,
            "retrieval.nn_rank_cutoff" => {
                self.retrieval.nn_rank_cutoff = parse(key, v, "usize")?
            }
            "retrieval.rel_margin" => self.retrieval.rel_margin = parse(key, v, "f64")?,
            "retrieval.pcp_fraction" => self.retrieval.pcp_fraction = parse(key, v, "f64")?,
            "retrieval.pckh_fraction" => self.retrieval.pckh_fraction = parse(key, v, "f64")?,
            "eval.n_queries" => self.n_queries = parse(key, v, "usize")?,
            "eval.exemplars_per_clip" => self.exemplars_per_clip = parse(key, v, "usize")?,
            "eval.svg" => self.svg = parse_bool(key, v)?,

            _ => {
                return Err(ConfigError::UnknownKey {
                    key: key.to_string(),
                })
            }
        }
        Ok(())
    }

    /// Parses a config file: `key = value` lines, `#` comments, blanks.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Unreadable {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Malformed {
                line: i + 1,
                text: raw.to_string(),
            })?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    /// Applies `--set key=value` overrides in order.
    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<(), ConfigError> {
        for item in overrides {
            let (key, value) = item.split_once('=').ok_or_else(|| ConfigError::Malformed {
                line: 0,
                text: item.clone(),
            })?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    /// Cross-field checks that individual setters cannot see.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |key: &str, why: String| Err(ConfigError::Invalid { key: key.to_string(), why });
        if self.synth.clips == 0 {
            return bad("synth.clips", "must be at least 1".into());
        }
        if self.synth.amplitude_min > self.synth.amplitude_max {
            return bad(
                "synth.amplitude_min",
                format!(
                    "exceeds synth.amplitude_max ({} > {})",
                    self.synth.amplitude_min, self.synth.amplitude_max
                ),
            );
        }
        if self.anchor_stride == 0 || self.spatial_stride == 0 {
            return bad("sample.anchor_stride", "strides must be at least 1".into());
        }
        if self.n_queries == 0 {
            return bad("eval.n_queries", "must be at least 1".into());
        }
        Ok(())
    }

    /// The full effective configuration as sorted `key = value` lines,
    /// suitable for run manifests and reparsing.
    pub fn echo(&self) -> String {
        let join = |xs: &[u32]| {
            xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
        };
        let tasks = match self.train.tasks {
            TaskSelection::Temporal => "temporal",
            TaskSelection::Spatial => "spatial",
            TaskSelection::Both => "both",
        };
        let mut pairs: Vec<(String, String)> = vec![
            ("seed".into(), self.seed.to_string()),
            ("data.dir".into(), self.data_dir.display().to_string()),
            ("out.dir".into(), self.out_dir.display().to_string()),
            ("synth.clips".into(), self.synth.clips.to_string()),
            ("synth.n_frames".into(), self.synth.n_frames.to_string()),
            ("synth.image_size".into(), self.synth.image_size.to_string()),
            ("synth.period".into(), self.synth.period.to_string()),
            ("synth.amplitude_min".into(), self.synth.amplitude_min.to_string()),
            ("synth.amplitude_max".into(), self.synth.amplitude_max.to_string()),
            ("synth.background_motion".into(), self.synth.background_motion.to_string()),
            ("synth.noise_sigma".into(), self.synth.noise_sigma.to_string()),
            ("flow.alpha".into(), self.flow.alpha.to_string()),
            ("flow.n_iter".into(), self.flow.n_iter.to_string()),
            ("flow.cache".into(), self.flow_cache.to_string()),
            ("curriculum.fractions".into(), join(&self.fractions)),
            ("curriculum.update_interval".into(), self.update_interval.to_string()),
            ("sampler.tau_plus".into(), self.sampler.tau_plus.to_string()),
            ("sampler.tau_neg_min".into(), self.sampler.tau_neg_min.to_string()),
            ("sampler.tau_neg_max".into(), self.sampler.tau_neg_max.to_string()),
            ("sampler.sigma_pos_lo".into(), self.sampler.sigma_pos.0.to_string()),
            ("sampler.sigma_pos_hi".into(), self.sampler.sigma_pos.1.to_string()),
            ("sampler.sigma_neg_lo".into(), self.sampler.sigma_neg.0.to_string()),
            ("sampler.sigma_neg_hi".into(), self.sampler.sigma_neg.1.to_string()),
            (
                "sampler.negatives_per_positive".into(),
                self.sampler.negatives_per_positive.to_string(),
            ),
            ("sampler.max_crop_attempts".into(), self.sampler.max_crop_attempts.to_string()),
            ("sample.anchor_stride".into(), self.anchor_stride.to_string()),
            ("sample.spatial_stride".into(), self.spatial_stride.to_string()),
            ("train.batch_size".into(), self.train.batch_size.to_string()),
            (
                "train.negatives_per_positive".into(),
                self.train.negatives_per_positive.to_string(),
            ),
            ("train.base_lr".into(), self.train.base_lr.to_string()),
            ("train.conv_lr".into(), self.train.conv_lr.to_string()),
            ("train.spatial_loss_weight".into(), self.train.spatial_loss_weight.to_string()),
            ("train.total_iterations".into(), self.train.total_iterations.to_string()),
            ("train.leaky_slope".into(), self.train.leaky_slope.to_string()),
            ("train.bn_momentum".into(), self.train.bn_momentum.to_string()),
            ("train.bn_epsilon".into(), self.train.bn_epsilon.to_string()),
            ("train.beta1".into(), self.train.beta1.to_string()),
            ("train.beta2".into(), self.train.beta2.to_string()),
            ("train.adam_epsilon".into(), self.train.adam_epsilon.to_string()),
            ("train.tasks".into(), tasks.to_string()),
            ("train.resume".into(), self.resume.display().to_string()),
            ("train.mined_tuples".into(), self.mined_tuples.display().to_string()),
            ("checkpoint".into(), self.checkpoint.display().to_string()),
            ("bootstrap.rounds".into(), self.bootstrap_rounds.to_string()),
            ("bootstrap.retrain_iterations".into(), self.retrain_iterations.to_string()),
            ("miner.kernel_size".into(), self.miner.kernel_size.to_string()),
            ("miner.band".into(), self.miner.band.to_string()),
            ("miner.threshold_percentile".into(), self.miner.threshold_percentile.to_string()),
            ("miner.min_separation".into(), self.miner.min_separation.to_string()),
            ("miner.group_gap".into(), self.miner.group_gap.to_string()),
            ("miner.dump_ssm".into(), self.dump_ssm.to_string()),
            (
                "retrieval.k_values".into(),
                self.retrieval
                    .k_values
                    .iter()
                    .map(|k| k.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            ("retrieval.nn_rank_cutoff".into(), self.retrieval.nn_rank_cutoff.to_string()),
            ("retrieval.rel_margin".into(), self.retrieval.rel_margin.to_string()),
            ("retrieval.pcp_fraction".into(), self.retrieval.pcp_fraction.to_string()),
            ("retrieval.pckh_fraction".into(), self.retrieval.pckh_fraction.to_string()),
            ("eval.n_queries".into(), self.n_queries.to_string()),
            ("eval.exemplars_per_clip".into(), self.exemplars_per_clip.to_string()),
            ("eval.svg".into(), self.svg.to_string()),
        ];
        pairs.sort();
        let mut out = String::new();
        for (k, v) in pairs {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}
