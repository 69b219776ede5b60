//! Experiment configuration: `key = value` lines, every key also a flag.

use std::collections::BTreeSet;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use sha2::{Digest, Sha256};

use driftlab::generator::{CovariateDistance, CovariateSearch};
use driftlab::{AttributeSchema, DistanceFunction, DriftKind, DriftSpec, LearnerKind, TaxonomyParams};

pub struct Key {
    pub name: &'static str,
    pub default: &'static str,
    pub help: &'static str,
}

macro_rules! keys {
    ($($name:literal = $default:literal : $help:literal),* $(,)?) => {
        pub const KEYS: &[Key] = &[$(Key { name: $name, default: $default, help: $help }),*];
    };
}

keys! {
    "kind" = "pure-class" : "drift kind: pure-class, pure-covariate or none",
    "target_magnitude" = "0.5" : "drift magnitude for generate",
    "magnitudes" = "0,0.25,0.5,0.75,1" : "magnitude grid for evaluate",
    "drift_time" = "10000" : "last step drawn from the initial concept",
    "length" = "30000" : "stream length in steps",
    "n_attributes" = "5" : "number of attributes",
    "arity" = "3" : "values per attribute",
    "n_classes" = "3" : "number of classes",
    "seed" = "1" : "master seed",
    "replicates" = "20" : "streams per magnitude",
    "covariate_distance" = "paper" : "covariate search distance: paper or standard",
    "covariate_tol" = "0.001" : "covariate search tolerance",
    "max_restarts" = "20" : "covariate search restarts",
    "distance" = "hellinger-joint" : "distance for measure and classify",
    "grid" = "1024" : "grid steps for path length and taxonomy checks",
    "rate_n" = "1000" : "n in the finite drift rate",
    "phi" = "1" : "minimum stable duration",
    "delta" = "1" : "maximum abrupt duration",
    "beta" = "1" : "maximum blip duration",
    "gamma" = "0.5" : "minor/major threshold",
    "nu" = "1" : "gradual window",
    "mu" = "0.1" : "gradual step bound",
    "eps_zero" = "1e-9" : "distance treated as zero",
    "cycle_i" = "2" : "concepts per cycle",
    "cycle_m" = "0" : "fixed cycle duration",
    "eps_time" = "0" : "time equality tolerance",
    "probabilistic_tol" = "1e-9" : "mixture fit residual tolerance",
    "sample_step" = "1" : "segmentation sampling step",
    "learners" = "naive-bayes,lookup-table,majority" : "learners for evaluate; 'external' runs external_learner",
    "alpha" = "1" : "Laplace smoothing for naive-bayes",
    "window" = "1000" : "error curve window",
    "recovery_eps" = "0.02" : "recovery band around the pre-drift error",
    "external_learner" = "" : "command line of an external learner",
    "output" = "driftlab-out" : "output directory",
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LearnerChoice {
    Builtin(LearnerKind),
    External,
}

impl LearnerChoice {
    pub fn id(&self) -> &str {
        match self {
            LearnerChoice::Builtin(k) => k.id(),
            LearnerChoice::External => "external",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: DriftKind,
    pub target_magnitude: f64,
    pub magnitudes: Vec<f64>,
    pub drift_time: u64,
    pub length: u64,
    pub n_attributes: usize,
    pub arity: usize,
    pub n_classes: usize,
    pub seed: u64,
    pub replicates: usize,
    pub covariate_distance: CovariateDistance,
    pub covariate_tol: f64,
    pub max_restarts: usize,
    pub distance: DistanceFunction,
    pub grid: usize,
    pub rate_n: f64,
    pub taxonomy: TaxonomyParams,
    pub sample_step: f64,
    pub learners: Vec<LearnerChoice>,
    pub alpha: f64,
    pub window: usize,
    pub recovery_eps: f64,
    pub external_learner: Vec<String>,
    pub output: PathBuf,
    /// Raw value of every key, defaults included.
    values: Vec<(&'static str, String)>,
    /// Keys set by a config file or flag.
    explicit: BTreeSet<&'static str>,
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| anyhow!("{key}: cannot parse '{v}'"))
}

fn list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',').filter(|s| !s.trim().is_empty()).map(|s| num(key, s)).collect()
}

impl ExperimentConfig {
    pub fn defaults() -> Self {
        let mut c = ExperimentConfig {
            kind: DriftKind::PureClass,
            target_magnitude: 0.0,
            magnitudes: Vec::new(),
            drift_time: 0,
            length: 0,
            n_attributes: 0,
            arity: 0,
            n_classes: 0,
            seed: 0,
            replicates: 0,
            covariate_distance: CovariateDistance::Paper,
            covariate_tol: 0.0,
            max_restarts: 0,
            distance: DistanceFunction::HellingerJoint,
            grid: 0,
            rate_n: 0.0,
            taxonomy: TaxonomyParams::default(),
            sample_step: 0.0,
            learners: Vec::new(),
            alpha: 0.0,
            window: 0,
            recovery_eps: 0.0,
            external_learner: Vec::new(),
            output: PathBuf::new(),
            values: Vec::new(),
            explicit: BTreeSet::new(),
        };
        for k in KEYS {
            c.apply(k.name, k.default).expect("defaults parse");
        }
        c.explicit.clear();
        c
    }

    /// Set one key; unknown keys are errors.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let k = KEYS
            .iter()
            .find(|k| k.name == key)
            .ok_or_else(|| anyhow!("unknown config key '{key}'"))?;
        self.apply(k.name, value)?;
        self.explicit.insert(k.name);
        Ok(())
    }

    fn apply(&mut self, key: &'static str, value: &str) -> Result<()> {
        let v = value.trim();
        let t = &mut self.taxonomy;
        match key {
            "kind" => self.kind = v.parse()?,
            "target_magnitude" => self.target_magnitude = num(key, v)?,
            "magnitudes" => self.magnitudes = list(key, v)?,
            "drift_time" => self.drift_time = num(key, v)?,
            "length" => self.length = num(key, v)?,
            "n_attributes" => self.n_attributes = num(key, v)?,
            "arity" => self.arity = num(key, v)?,
            "n_classes" => self.n_classes = num(key, v)?,
            "seed" => self.seed = num(key, v)?,
            "replicates" => self.replicates = num(key, v)?,
            "covariate_distance" => self.covariate_distance = v.parse()?,
            "covariate_tol" => self.covariate_tol = num(key, v)?,
            "max_restarts" => self.max_restarts = num(key, v)?,
            "distance" => self.distance = v.parse()?,
            "grid" => self.grid = num(key, v)?,
            "rate_n" => self.rate_n = num(key, v)?,
            "phi" => t.phi = num(key, v)?,
            "delta" => t.delta = num(key, v)?,
            "beta" => t.beta = num(key, v)?,
            "gamma" => t.gamma = num(key, v)?,
            "nu" => t.nu = num(key, v)?,
            "mu" => t.mu = num(key, v)?,
            "eps_zero" => t.eps_zero = num(key, v)?,
            "cycle_i" => t.cycle_i = num(key, v)?,
            "cycle_m" => t.cycle_m = num(key, v)?,
            "eps_time" => t.eps_time = num(key, v)?,
            "probabilistic_tol" => t.probabilistic_tol = num(key, v)?,
            "sample_step" => self.sample_step = num(key, v)?,
            "learners" => {
                self.learners = v
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| match s.trim() {
                        "external" => Ok(LearnerChoice::External),
                        other => Ok(LearnerChoice::Builtin(other.parse()?)),
                    })
                    .collect::<Result<_>>()?
            }
            "alpha" => self.alpha = num(key, v)?,
            "window" => self.window = num(key, v)?,
            "recovery_eps" => self.recovery_eps = num(key, v)?,
            "external_learner" => self.external_learner = v.split_whitespace().map(String::from).collect(),
            "output" => self.output = PathBuf::from(v),
            _ => unreachable!("key table and parser disagree on '{key}'"),
        }
        match self.values.iter_mut().find(|(k, _)| *k == key) {
            Some(slot) => slot.1 = v.to_string(),
            None => self.values.push((key, v.to_string())),
        }
        Ok(())
    }

    /// Read `key = value` lines; `#` starts a comment.
    pub fn load_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key = value", i + 1))?;
            self.set(k.trim(), v.trim()).with_context(|| format!("line {}", i + 1))?;
        }
        Ok(())
    }

    pub fn load_file(&mut self, path: &std::path::Path) -> Result<()> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        self.load_text(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn is_explicit(&self, key: &str) -> bool {
        self.explicit.contains(key)
    }

    pub fn value(&self, key: &str) -> &str {
        self.values
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| v.as_str())
            .unwrap_or("")
    }

    /// Every key in table order, as a config file. The output directory is
    /// left out so a run reproduces byte for byte wherever it is written.
    pub fn canonical(&self) -> String {
        KEYS.iter()
            .filter(|k| k.name != "output")
            .map(|k| format!("{} = {}\n", k.name, self.value(k.name)))
            .collect()
    }

    /// sha256 over the canonical config plus anything else the output
    /// depends on (command name, input file contents).
    pub fn hash(&self, extra: &[&[u8]]) -> String {
        let mut h = Sha256::new();
        h.update(self.canonical().as_bytes());
        for e in extra {
            h.update([0u8]);
            h.update(e);
        }
        hex::encode(h.finalize())
    }

    pub fn schema(&self) -> Result<AttributeSchema> {
        Ok(AttributeSchema::new(self.n_attributes, self.arity, self.n_classes)?)
    }

    pub fn drift_spec(&self, target: f64) -> Result<DriftSpec> {
        let spec = DriftSpec {
            kind: self.kind,
            target_magnitude: target,
            drift_time: self.drift_time,
            length: self.length,
            schema: self.schema()?,
            seed: self.seed,
            replicate_count: self.replicates,
            covariate_search: CovariateSearch {
                distance: self.covariate_distance,
                tol: self.covariate_tol,
                max_restarts: self.max_restarts,
            },
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Taxonomy thresholds: `base` where given, overridden by explicit keys.
    pub fn taxonomy_params(&self, base: Option<TaxonomyParams>) -> Result<TaxonomyParams> {
        let p = match base {
            None => self.taxonomy,
            Some(mut b) => {
                let t = &self.taxonomy;
                let pick = |key: &str, mine: f64, theirs: &mut f64| {
                    if self.is_explicit(key) {
                        *theirs = mine;
                    }
                };
                pick("phi", t.phi, &mut b.phi);
                pick("delta", t.delta, &mut b.delta);
                pick("beta", t.beta, &mut b.beta);
                pick("gamma", t.gamma, &mut b.gamma);
                pick("nu", t.nu, &mut b.nu);
                pick("mu", t.mu, &mut b.mu);
                pick("eps_zero", t.eps_zero, &mut b.eps_zero);
                pick("cycle_m", t.cycle_m, &mut b.cycle_m);
                pick("eps_time", t.eps_time, &mut b.eps_time);
                pick("probabilistic_tol", t.probabilistic_tol, &mut b.probabilistic_tol);
                if self.is_explicit("cycle_i") {
                    b.cycle_i = t.cycle_i;
                }
                b
            }
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate_evaluation(&self) -> Result<()> {
        if self.window == 0 {
            bail!("window must be >= 1");
        }
        if self.learners.is_empty() {
            bail!("no learners selected");
        }
        if self.magnitudes.is_empty() {
            bail!("no magnitudes selected");
        }
        if self.learners.contains(&LearnerChoice::External) && self.external_learner.is_empty() {
            bail!("learner 'external' needs external_learner to be set");
        }
        Ok(())
    }
}
