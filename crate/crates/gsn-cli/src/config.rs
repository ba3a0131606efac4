//! Flat key=value run configuration.
//!
//! One `key = value` pair per line, `#` starts a comment, blank lines are
//! ignored. Every key is declared in [`SCHEMA`] with its default and a
//! one-line description; unknown and duplicate keys are rejected at parse
//! time. The fully resolved configuration (defaults merged with the file
//! and any flag overrides) is printed at the start of every run and
//! written next to the run's outputs, and is itself a loadable config.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};

/// Every known key: (name, default, description). An empty default means
/// the key has no value until the config file or a flag provides one;
/// commands that need such a key report it by name when it is missing.
pub const SCHEMA: &[(&str, &str, &str)] = &[
    ("seed", "0", "master seed; model init, training, sampling and verify use separate streams"),
    ("dataset", "", "path to the training/evaluation data"),
    ("dataset_format", "csv", "csv | idx"),
    ("value_kind", "binary", "binary | unit | real; data validation and the visible unit type"),
    ("binarize", "true", "threshold idx pixels at 0.5 after scaling to [0, 1]"),
    ("hidden_sizes", "64", "comma-separated hidden layer widths, e.g. 48,64"),
    ("eta", "1.0", "injected noise std for hidden layers above the first (layer 1 is noise-free)"),
    ("corruption", "0.1", "salt-and-pepper flip probability (binary) or additive noise std (real)"),
    ("walkback_steps", "auto", "unrolled reconstruction steps per example; auto = twice the depth"),
    ("corrupt_every_step", "true", "corrupt the resampled visible at every unrolled step"),
    ("start_parity", "odd", "odd | even; which hidden-layer group updates on step 0"),
    ("epochs", "100", "training epochs; 0 saves the freshly initialized model"),
    ("learning_rate", "0.25", "initial SGD learning rate"),
    ("momentum", "0.5", "classical momentum coefficient"),
    ("lr_decay", "0.99", "per-epoch multiplicative learning-rate decay"),
    ("minibatch", "32", "examples per gradient step"),
    ("checkpoint", "", "saved model to load (sample, inpaint, eval-parzen, analyze-chain)"),
    ("num_samples", "100", "rows to collect from the sampling chain"),
    ("burn_in", "1000", "chain steps discarded before collection"),
    ("thinning", "1", "chain steps per collected row"),
    ("mean_field", "false", "collect reconstruction means instead of sampled states (sample only)"),
    ("img_rows", "auto", "PGM tile height; auto = square if the dimension is a perfect square"),
    ("img_cols", "auto", "PGM tile width"),
    ("grid_cols", "10", "tiles per PGM grid row"),
    ("clamp_mask", "", "CSV row of 0/1 flags, 1 = hold that coordinate fixed (inpaint)"),
    ("clamp_image", "", "CSV row of values for the held coordinates (inpaint)"),
    ("samples", "", "CSV of generated samples to score (eval-parzen)"),
    ("validation_fraction", "0.1", "leading fraction of the dataset used to pick the bandwidth"),
    ("bandwidth", "auto", "Parzen kernel std; auto = grid search on the validation slice"),
    ("table", "", "CSV row of 2^d target probabilities to compare against (analyze-chain)"),
    ("perturb_eps", "0", "mix the operator toward uniform by eps and report the perturbation bound"),
    ("trials", "200", "verify: random perturbation-bound trials"),
    ("max_states", "16", "verify: largest random chain size"),
    ("gibbs_trials", "20", "verify: random joint-chain constructions"),
    ("depnet_trials", "5", "verify: random consistent dependency-network checks"),
    ("inject_counterexample", "false", "verify: add a period-2 chain mislabeled ergodic; must be caught"),
];

#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl RunConfig {
    /// Configuration with every key at its schema default.
    pub fn empty() -> RunConfig {
        RunConfig::default()
    }

    pub fn from_file(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let mut config = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key = value, got {raw:?}", lineno + 1))?;
            let (key, value) = (key.trim(), value.trim());
            if !SCHEMA.iter().any(|(k, _, _)| *k == key) {
                bail!("line {}: unknown config key {key:?}", lineno + 1);
            }
            if config.values.insert(key.to_string(), value.to_string()).is_some() {
                bail!("line {}: duplicate config key {key:?}", lineno + 1);
            }
        }
        Ok(config)
    }

    /// Flag overrides land here after the file is parsed.
    pub fn set(&mut self, key: &str, value: impl ToString) {
        assert!(SCHEMA.iter().any(|(k, _, _)| *k == key), "unknown override key {key:?}");
        self.values.insert(key.to_string(), value.to_string());
    }

    /// Effective value: explicit setting, else schema default, else None.
    pub fn get(&self, key: &str) -> Option<&str> {
        if let Some(v) = self.values.get(key) {
            return Some(v.as_str());
        }
        let (_, default, _) = SCHEMA.iter().find(|(k, _, _)| *k == key)?;
        if default.is_empty() {
            None
        } else {
            Some(default)
        }
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| anyhow!("config key {key:?} is required for this command"))
    }

    pub fn path(&self, key: &str) -> Result<PathBuf> {
        Ok(PathBuf::from(self.require(key)?))
    }

    pub fn u64(&self, key: &str) -> Result<u64> {
        let v = self.require(key)?;
        v.parse().with_context(|| format!("config key {key:?}: {v:?} is not a whole number"))
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        let v = self.require(key)?;
        v.parse().with_context(|| format!("config key {key:?}: {v:?} is not a whole number"))
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        let v = self.require(key)?;
        v.parse().with_context(|| format!("config key {key:?}: {v:?} is not a number"))
    }

    pub fn bool(&self, key: &str) -> Result<bool> {
        match self.require(key)? {
            "true" => Ok(true),
            "false" => Ok(false),
            v => bail!("config key {key:?}: expected true or false, got {v:?}"),
        }
    }

    pub fn usize_list(&self, key: &str) -> Result<Vec<usize>> {
        let v = self.require(key)?;
        v.split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .with_context(|| format!("config key {key:?}: {s:?} is not a whole number"))
            })
            .collect()
    }

    /// usize-valued key that also accepts the literal `auto`.
    pub fn usize_or_auto(&self, key: &str) -> Result<Option<usize>> {
        match self.require(key)? {
            "auto" => Ok(None),
            v => Ok(Some(v.parse().with_context(|| {
                format!("config key {key:?}: {v:?} is neither auto nor a whole number")
            })?)),
        }
    }

    /// f64-valued key that also accepts the literal `auto`.
    pub fn f64_or_auto(&self, key: &str) -> Result<Option<f64>> {
        match self.require(key)? {
            "auto" => Ok(None),
            v => Ok(Some(v.parse().with_context(|| {
                format!("config key {key:?}: {v:?} is neither auto nor a number")
            })?)),
        }
    }

    /// Full configuration in schema order; unset keys without defaults
    /// appear as comments so the text stays loadable.
    pub fn resolved_text(&self) -> String {
        let mut out = String::new();
        for (key, _, _) in SCHEMA {
            match self.get(key) {
                Some(v) => writeln!(out, "{key} = {v}").expect("string write"),
                None => writeln!(out, "# {key} is unset").expect("string write"),
            }
        }
        out
    }
}
