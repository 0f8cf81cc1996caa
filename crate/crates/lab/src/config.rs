//! Experiment configuration: JSON, one experiment per file, unknown keys
//! rejected. A file may carry a `profiles` object whose entries are partial
//! configs deep-merged over the base when selected with `--profile`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{config_err, LabError, LabResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    SpectralBias,
    Robustness,
    ManifoldRegression,
    ManifoldClassification,
    NoiseInjection,
    KernelNoise,
    Ablation,
    VolumeMc,
    KnnCompare,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 9] = [
        ExperimentKind::SpectralBias,
        ExperimentKind::Robustness,
        ExperimentKind::ManifoldRegression,
        ExperimentKind::ManifoldClassification,
        ExperimentKind::NoiseInjection,
        ExperimentKind::KernelNoise,
        ExperimentKind::Ablation,
        ExperimentKind::VolumeMc,
        ExperimentKind::KnnCompare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::SpectralBias => "spectral-bias",
            ExperimentKind::Robustness => "robustness",
            ExperimentKind::ManifoldRegression => "manifold-regression",
            ExperimentKind::ManifoldClassification => "manifold-classification",
            ExperimentKind::NoiseInjection => "noise-injection",
            ExperimentKind::KernelNoise => "kernel-noise",
            ExperimentKind::Ablation => "ablation",
            ExperimentKind::VolumeMc => "volume-mc",
            ExperimentKind::KnnCompare => "knn-compare",
        }
    }

    /// Kinds that train a network and so need `steps`/`eval_every`.
    pub fn trains(self) -> bool {
        !matches!(self, ExperimentKind::VolumeMc)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Ci,
    Paper,
}

impl Profile {
    pub fn name(self) -> &'static str {
        match self {
            Profile::Ci => "ci",
            Profile::Paper => "paper",
        }
    }
}

impl FromStr for Profile {
    type Err = LabError;
    fn from_str(s: &str) -> LabResult<Self> {
        match s {
            "ci" => Ok(Profile::Ci),
            "paper" => Ok(Profile::Paper),
            other => config_err(format!("unknown profile {other:?} (expected ci or paper)")),
        }
    }
}

/// Hidden layer widths; input and output dimensions follow from the task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub hidden: Vec<usize>,
    /// Elementwise parameter clamp `[-K, K]` after every update.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_clip: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSpec {
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
}

fn default_lr() -> f64 {
    3e-4
}
fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_eps() -> f64 {
    1e-8
}

impl Default for OptimizerSpec {
    fn default() -> Self {
        Self {
            lr: default_lr(),
            beta1: default_beta1(),
            beta2: default_beta2(),
            eps: default_eps(),
        }
    }
}

/// Sum of sinusoids `Σ A_i sin(2πk_i z + φ_i)` on an `N`-point grid;
/// phases are drawn per seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    pub frequencies: Vec<usize>,
    /// One per frequency; all ones when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Vec<f64>>,
    pub samples: usize,
}

impl TargetSpec {
    pub fn amplitudes(&self) -> Vec<f64> {
        self.amplitudes
            .clone()
            .unwrap_or_else(|| vec![1.0; self.frequencies.len()])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldSpec {
    /// Petal counts `L` of the flower curves.
    pub petals: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeltaScale {
    /// `δ = c·‖θ*‖`.
    Norm,
    /// `δ = c·‖θ*‖/√P`.
    Rms,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobustnessSpec {
    /// Relative magnitudes `c`; the absolute perturbation norm is `c` times
    /// the reference scale.
    pub deltas: Vec<f64>,
    pub directions: usize,
    pub scale: DeltaScale,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    /// Radial-wave frequencies `k` of `ψ_k(x) = sin(k‖x‖)`.
    pub frequencies: Vec<f64>,
    pub betas: Vec<f64>,
    pub dim: usize,
    pub per_class: usize,
    pub separation: f64,
    pub data_seed: u64,
    /// Fraction of samples used for training; the rest validate.
    pub train_fraction: f64,
    pub split_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub points: usize,
    pub sigma: f64,
    pub gamma: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AblationAxis {
    Depth,
    Width,
    Clip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AblationSpec {
    pub axis: AblationAxis,
    /// Depths or widths (integers) or clip values.
    pub values: Vec<f64>,
    pub samples: usize,
    pub position: f64,
    pub amplitude: f64,
    /// Normalized magnitude a frequency must reach to count as fitted.
    pub fit_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VolumeSpec {
    pub samples: usize,
    pub epsilon: f64,
    /// Radius `K` of the parameter box `[-K, K]^P`.
    pub bound: f64,
    pub cutoffs: Vec<usize>,
    pub grid: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnnSpec {
    pub neighbours: Vec<usize>,
    pub frequency: usize,
    pub petals: usize,
    pub samples: usize,
    pub resolution: usize,
    /// `[x0, y0, x1, y1]`.
    pub bounds: [f64; 4],
    /// First annulus of the slope fit.
    pub fit_from: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network: Option<NetworkSpec>,
    #[serde(default)]
    pub optimizer: OptimizerSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_every: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifold: Option<ManifoldSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub robustness: Option<RobustnessSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ablation: Option<AblationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub volume: Option<VolumeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub knn: Option<KnnSpec>,
    /// Output directory; `--out` overrides.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn req<'a, T>(v: &'a Option<T>, what: &str, kind: ExperimentKind) -> LabResult<&'a T> {
    v.as_ref()
        .ok_or_else(|| LabError::Config(format!("{kind} needs a `{what}` section")))
}

fn positive(v: f64, what: &str) -> LabResult<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        config_err(format!("{what} must be positive and finite, got {v}"))
    }
}

fn nonempty<T>(v: &[T], what: &str) -> LabResult<()> {
    if v.is_empty() {
        config_err(format!("{what} must not be empty"))
    } else {
        Ok(())
    }
}

impl ExperimentConfig {
    /// Parses JSON text, applying the named profile overlay if given.
    pub fn from_json_str(text: &str, profile: Option<Profile>) -> LabResult<Self> {
        let mut base: Value = serde_json::from_str(text)?;
        let obj = base
            .as_object_mut()
            .ok_or_else(|| LabError::Config("config must be a JSON object".into()))?;
        let profiles = obj.remove("profiles");
        if let Some(p) = profile {
            let overlay = profiles
                .as_ref()
                .and_then(|v| v.get(p.name()))
                .cloned()
                .unwrap_or(Value::Object(Default::default()));
            if !overlay.is_object() {
                return config_err(format!("profile {:?} must be an object", p.name()));
            }
            merge(&mut base, overlay);
        } else if let Some(v) = &profiles {
            if !v.is_object() {
                return config_err("`profiles` must be an object");
            }
        }
        let cfg: ExperimentConfig =
            serde_json::from_value(base).map_err(|e| LabError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, profile: Option<Profile>) -> LabResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        Self::from_json_str(&text, profile)
    }

    pub fn steps(&self) -> usize {
        self.steps.unwrap_or(0)
    }

    pub fn eval_every(&self) -> usize {
        self.eval_every.unwrap_or(1)
    }

    /// Checks counts and that every section the kind reads is present.
    pub fn validate(&self) -> LabResult<()> {
        let kind = self.kind;
        nonempty(&self.seeds, "seeds")?;
        let mut seen = self.seeds.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return config_err("seeds must be distinct");
        }
        let o = &self.optimizer;
        positive(o.lr, "optimizer.lr")?;
        positive(o.eps, "optimizer.eps")?;
        if !(0.0..1.0).contains(&o.beta1) || !(0.0..1.0).contains(&o.beta2) {
            return config_err("optimizer betas must lie in [0, 1)");
        }
        let net = req(&self.network, "network", kind)?;
        nonempty(&net.hidden, "network.hidden")?;
        if net.hidden.contains(&0) {
            return config_err("network.hidden widths must be positive");
        }
        if let Some(k) = net.weight_clip {
            positive(k, "network.weight_clip")?;
        }
        if kind.trains() {
            let steps = self.steps.ok_or_else(|| LabError::Config(format!("{kind} needs `steps`")))?;
            let every = self
                .eval_every
                .ok_or_else(|| LabError::Config(format!("{kind} needs `eval_every`")))?;
            if steps == 0 || every == 0 {
                return config_err("steps and eval_every must be positive");
            }
        }
        let target_check = |t: &TargetSpec| -> LabResult<()> {
            nonempty(&t.frequencies, "target.frequencies")?;
            if t.samples < 2 {
                return config_err("target.samples must be at least 2");
            }
            if let Some(a) = &t.amplitudes {
                if a.len() != t.frequencies.len() {
                    return config_err("target.amplitudes must match target.frequencies");
                }
                for &v in a {
                    positive(v, "target amplitude")?;
                }
            }
            if let Some(&k) = t.frequencies.iter().find(|&&k| k == 0 || 2 * k > t.samples) {
                return config_err(format!("frequency {k} outside 1..=samples/2"));
            }
            Ok(())
        };
        match kind {
            ExperimentKind::SpectralBias => target_check(req(&self.target, "target", kind)?)?,
            ExperimentKind::Robustness => {
                target_check(req(&self.target, "target", kind)?)?;
                let r = req(&self.robustness, "robustness", kind)?;
                nonempty(&r.deltas, "robustness.deltas")?;
                if r.deltas.iter().any(|d| !(*d >= 0.0 && d.is_finite())) {
                    return config_err("robustness.deltas must be non-negative");
                }
                if r.directions == 0 {
                    return config_err("robustness.directions must be positive");
                }
            }
            ExperimentKind::ManifoldRegression | ExperimentKind::ManifoldClassification => {
                target_check(req(&self.target, "target", kind)?)?;
                nonempty(&req(&self.manifold, "manifold", kind)?.petals, "manifold.petals")?;
            }
            ExperimentKind::NoiseInjection => {
                let n = req(&self.noise, "noise", kind)?;
                nonempty(&n.frequencies, "noise.frequencies")?;
                nonempty(&n.betas, "noise.betas")?;
                if n.frequencies.iter().any(|k| !(*k >= 0.0 && k.is_finite()))
                    || n.betas.iter().any(|b| !(*b >= 0.0 && b.is_finite()))
                {
                    return config_err("noise frequencies and betas must be non-negative");
                }
                if n.dim < 2 || n.per_class == 0 {
                    return config_err("noise.dim must be >= 2 and noise.per_class positive");
                }
                if !(n.train_fraction > 0.0 && n.train_fraction < 1.0) {
                    return config_err("noise.train_fraction must lie in (0, 1)");
                }
            }
            ExperimentKind::KernelNoise => {
                let t = req(&self.target, "target", kind)?;
                let k = req(&self.kernel, "kernel", kind)?;
                if t.samples != k.points {
                    return config_err("kernel.points must equal target.samples");
                }
                target_check(t)?;
                positive(k.sigma, "kernel.sigma")?;
                if !(k.gamma >= 0.0 && k.beta >= 0.0) {
                    return config_err("kernel.gamma and kernel.beta must be non-negative");
                }
            }
            ExperimentKind::Ablation => {
                let a = req(&self.ablation, "ablation", kind)?;
                nonempty(&a.values, "ablation.values")?;
                for &v in &a.values {
                    positive(v, "ablation value")?;
                    if a.axis != AblationAxis::Clip && v.fract() != 0.0 {
                        return config_err("depth and width ablation values must be integers");
                    }
                }
                if a.samples < 4 || !(0.0..1.0).contains(&a.position) {
                    return config_err("ablation needs samples >= 4 and position in [0, 1)");
                }
                positive(a.amplitude, "ablation.amplitude")?;
                positive(a.fit_threshold, "ablation.fit_threshold")?;
            }
            ExperimentKind::VolumeMc => {
                let v = req(&self.volume, "volume", kind)?;
                if v.samples < 100 {
                    return config_err("volume.samples must be at least 100");
                }
                positive(v.epsilon, "volume.epsilon")?;
                positive(v.bound, "volume.bound")?;
                nonempty(&v.cutoffs, "volume.cutoffs")?;
                if v.grid < 4 {
                    return config_err("volume.grid must be at least 4");
                }
            }
            ExperimentKind::KnnCompare => {
                let k = req(&self.knn, "knn", kind)?;
                nonempty(&k.neighbours, "knn.neighbours")?;
                if k.neighbours.iter().any(|&n| n == 0 || n > k.samples) {
                    return config_err("knn.neighbours must lie in 1..=samples");
                }
                if k.resolution < 8 || k.fit_from == 0 || 2 * k.fit_from >= k.resolution {
                    return config_err("knn needs resolution >= 8 and 1 <= fit_from < resolution/2");
                }
                if 2 * k.frequency > k.samples {
                    return config_err("knn.frequency exceeds the sample Nyquist limit");
                }
                let b = k.bounds;
                if !(b[2] > b[0] && b[3] > b[1]) {
                    return config_err("knn.bounds must be [x0, y0, x1, y1] with x1 > x0, y1 > y0");
                }
            }
        }
        Ok(())
    }

    /// Canonical JSON (struct field order, no profiles, no output dir).
    pub fn canonical_json(&self) -> String {
        let mut c = self.clone();
        c.out = None;
        serde_json::to_string(&c).expect("config serializes")
    }

    /// SHA-256 of [`canonical_json`](Self::canonical_json), hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Deep merge: objects merge key by key, anything else replaces.
pub fn merge(base: &mut Value, overlay: Value) {
    match (base, overlay) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Parses `--seeds 1,2,3`.
pub fn parse_seeds(s: &str) -> LabResult<Vec<u64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<u64>()
                .map_err(|_| LabError::Config(format!("bad seed {t:?}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "kind": "spectral-bias",
        "seeds": [0, 1],
        "network": {"hidden": [8, 8]},
        "steps": 10, "eval_every": 5,
        "target": {"frequencies": [1, 2], "samples": 16},
        "profiles": {"ci": {"steps": 4, "network": {"weight_clip": 1.0}}}
    }"#;

    #[test]
    fn profile_overlay_merges_deeply() {
        let base = ExperimentConfig::from_json_str(MINIMAL, None).unwrap();
        assert_eq!(base.steps, Some(10));
        let ci = ExperimentConfig::from_json_str(MINIMAL, Some(Profile::Ci)).unwrap();
        assert_eq!(ci.steps, Some(4));
        let net = ci.network.unwrap();
        assert_eq!(net.hidden, vec![8, 8]);
        assert_eq!(net.weight_clip, Some(1.0));
        let paper = ExperimentConfig::from_json_str(MINIMAL, Some(Profile::Paper)).unwrap();
        assert_eq!(paper, base);
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = MINIMAL.replace("\"eval_every\"", "\"eval_evry\"");
        assert!(matches!(ExperimentConfig::from_json_str(&bad, None), Err(LabError::Config(_))));
        let bad = MINIMAL.replace("\"samples\": 16", "\"samples\": 16, \"extra\": 1");
        assert!(ExperimentConfig::from_json_str(&bad, None).is_err());
        let bad = MINIMAL.replace("spectral-bias", "spectral-bais");
        assert!(ExperimentConfig::from_json_str(&bad, None).is_err());
    }

    #[test]
    fn missing_section_rejected() {
        let bad = MINIMAL.replace("\"kind\": \"spectral-bias\"", "\"kind\": \"robustness\"");
        let e = ExperimentConfig::from_json_str(&bad, None).unwrap_err();
        assert!(e.to_string().contains("robustness"), "{e}");
        assert_eq!(e.exit_code(), crate::error::EXIT_INVALID);
        let bad = MINIMAL.replace("\"steps\": 10", "\"steps\": 0");
        assert!(ExperimentConfig::from_json_str(&bad, None).is_err());
        let bad = MINIMAL.replace("[1, 2]", "[1, 9]");
        assert!(ExperimentConfig::from_json_str(&bad, None).is_err());
    }

    #[test]
    fn hash_ignores_output_dir_only() {
        let mut a = ExperimentConfig::from_json_str(MINIMAL, None).unwrap();
        let h = a.hash();
        assert_eq!(h.len(), 64);
        a.out = Some("elsewhere".into());
        assert_eq!(a.hash(), h);
        a.seeds = vec![3];
        assert_ne!(a.hash(), h);
    }

    #[test]
    fn seed_lists() {
        assert_eq!(parse_seeds("1, 2,3").unwrap(), vec![1, 2, 3]);
        assert!(parse_seeds("1,x").is_err());
    }
}
