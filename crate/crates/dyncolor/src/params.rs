//! Global parameter set shared by every module.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// Constants exactly as the analysis states them.
    Paper,
    /// Rescaled constants so that thresholds are reachable at n ≤ 10⁴.
    Desk,
}

impl std::str::FromStr for Profile {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "paper" => Ok(Profile::Paper),
            "desk" => Ok(Profile::Desk),
            other => Err(format!("unknown profile '{other}' (expected paper or desk)")),
        }
    }
}

impl std::fmt::Display for Profile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Profile::Paper => "paper",
            Profile::Desk => "desk",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("epsilon must lie in (0, 1), got {0}")]
    Epsilon(f64),
    #[error("tau must lie in (0, epsilon], got tau = {tau}, epsilon = {epsilon}")]
    Tau { tau: f64, epsilon: f64 },
    #[error("paper profile requires epsilon < 3/50 and tau = epsilon/3 (epsilon = {epsilon}, tau = {tau})")]
    PaperProfile { epsilon: f64, tau: f64 },
    #[error("{name} must be at least 1")]
    Zero { name: &'static str },
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
}

/// Every tunable of the algorithm. Derived integers (`phase_len_t`,
/// `sample_count_k`, `friend_window`, `cap_samples`) are filled in by the
/// profile constructors and may be overridden afterwards.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    pub profile: Profile,
    pub seed: u64,
    pub epsilon: f64,
    pub tau: f64,
    /// Sparse moves a clique absorbs (as a fraction of Δ) before it collapses.
    pub nu: f64,
    /// Approximation slack of the dynamic matching black box. Recorded only;
    /// the maintained maximal matching is exact 2-approximate.
    pub delta_matching: f64,
    /// Confidence constant c in k = 12c·ln n/τ².
    pub confidence_c: f64,
    /// Lower-bound constant α in Δ+1 > α·log n/ε².
    pub alpha: f64,
    pub phase_len_t: usize,
    pub sample_count_k: usize,
    /// Direct/indirect counter value that fires an Update (τΔ/8).
    pub friend_window: usize,
    /// Sample ceiling for every rejection loop.
    pub cap_samples: usize,
    /// Match uses Random-Match once |M_N| ≥ dispatch_frac·Δ.
    pub dispatch_frac: f64,
    /// Color c is heavy for C when T_C(c) > heavy_frac·Δ.
    pub heavy_frac: f64,
    /// Cliques with |M_N| < small_matching_frac·ε²Δ use the small-matching regime.
    pub small_matching_frac: f64,
    /// Excess-color floor factor: floor_frac·ε²Δ available colors after color_sparse.
    pub floor_frac: f64,
    /// Phase length factor: t = phase_frac·ε²Δ.
    pub phase_frac: f64,
}

const E6: f64 = 403.428_793_492_735_1; // e⁶

impl ParamSet {
    /// Constants as stated by the analysis: τ = ε/3, k = ⌈12c·ln n/τ²⌉,
    /// window τΔ/8, phase length ε²Δ/(18e⁶).
    pub fn paper(n: usize, delta: usize, epsilon: f64, seed: u64) -> Self {
        let tau = epsilon / 3.0;
        let confidence_c = 3.0;
        let phase_frac = 1.0 / (18.0 * E6);
        ParamSet {
            profile: Profile::Paper,
            seed,
            epsilon,
            tau,
            nu: epsilon,
            delta_matching: 1.0 / 6.0,
            confidence_c,
            alpha: 1.0,
            phase_len_t: phase_len(phase_frac, epsilon, delta),
            sample_count_k: confident_sample_count(n, tau, confidence_c),
            friend_window: ((tau * delta as f64 / 8.0).floor() as usize).max(1),
            cap_samples: default_cap(n),
            dispatch_frac: 0.1,
            heavy_frac: 0.01,
            small_matching_frac: 1.0,
            floor_frac: 1.0 / (9.0 * E6),
            phase_frac,
        }
    }

    /// Desk-scale profile: pinned sample count, rescaled phase length and floor.
    pub fn desk(n: usize, delta: usize, epsilon: f64, seed: u64) -> Self {
        let tau = epsilon / 3.0;
        let phase_frac = 0.25;
        ParamSet {
            profile: Profile::Desk,
            sample_count_k: 32,
            phase_len_t: phase_len(phase_frac, epsilon, delta),
            friend_window: ((tau * delta as f64 / 8.0).round() as usize).max(1),
            floor_frac: 0.25,
            phase_frac,
            ..ParamSet::paper(n, delta, epsilon, seed)
        }
    }

    pub fn for_profile(profile: Profile, n: usize, delta: usize, epsilon: f64, seed: u64) -> Self {
        match profile {
            Profile::Paper => ParamSet::paper(n, delta, epsilon, seed),
            Profile::Desk => ParamSet::desk(n, delta, epsilon, seed),
        }
    }

    /// Recomputes the integers that depend on ε, τ or the constants.
    pub fn rederive(&mut self, n: usize, delta: usize) {
        self.phase_len_t = phase_len(self.phase_frac, self.epsilon, delta);
        match self.profile {
            Profile::Paper => {
                self.sample_count_k = confident_sample_count(n, self.tau, self.confidence_c);
                self.friend_window = ((self.tau * delta as f64 / 8.0).floor() as usize).max(1);
            }
            Profile::Desk => {
                self.friend_window = ((self.tau * delta as f64 / 8.0).round() as usize).max(1);
            }
        }
        self.cap_samples = default_cap(n);
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(ParamError::Epsilon(self.epsilon));
        }
        if !(self.tau > 0.0 && self.tau <= self.epsilon) {
            return Err(ParamError::Tau { tau: self.tau, epsilon: self.epsilon });
        }
        if self.profile == Profile::Paper
            && !(self.epsilon < 3.0 / 50.0 && (self.tau - self.epsilon / 3.0).abs() <= 1e-12 * self.epsilon)
        {
            return Err(ParamError::PaperProfile { epsilon: self.epsilon, tau: self.tau });
        }
        for (name, value) in [
            ("phase_len_t", self.phase_len_t),
            ("sample_count_k", self.sample_count_k),
            ("friend_window", self.friend_window),
            ("cap_samples", self.cap_samples),
        ] {
            if value == 0 {
                return Err(ParamError::Zero { name });
            }
        }
        for (name, value) in [
            ("nu", self.nu),
            ("dispatch_frac", self.dispatch_frac),
            ("heavy_frac", self.heavy_frac),
            ("small_matching_frac", self.small_matching_frac),
        ] {
            if value.is_nan() || value <= 0.0 {
                return Err(ParamError::NonPositive { name, value });
            }
        }
        Ok(())
    }

    /// c_i = iε + τ.
    #[inline]
    pub fn c(&self, i: usize) -> f64 {
        i as f64 * self.epsilon + self.tau
    }
}

/// Whether the engine runs the full algorithm or the trivial recoloring rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineMode {
    Engine,
    Baseline,
}

impl std::str::FromStr for EngineMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "engine" => Ok(EngineMode::Engine),
            "baseline" => Ok(EngineMode::Baseline),
            other => Err(format!("unknown mode '{other}' (expected engine or baseline)")),
        }
    }
}

impl std::fmt::Display for EngineMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EngineMode::Engine => "engine",
            EngineMode::Baseline => "baseline",
        })
    }
}

/// Keys accepted by [`ParamSet::set_key`], in the order [`ParamSet::pairs`] emits them.
pub const PARAM_KEYS: &[&str] = &[
    "profile",
    "seed",
    "epsilon",
    "tau",
    "nu",
    "delta_matching",
    "confidence_c",
    "alpha",
    "phase_len_t",
    "sample_count_k",
    "friend_window",
    "cap_samples",
    "dispatch_frac",
    "heavy_frac",
    "small_matching_frac",
    "floor_frac",
    "phase_frac",
];

impl ParamSet {
    /// `key=value` rendering of every field. Floats use the shortest
    /// representation that parses back to the same bits.
    pub fn pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("profile", self.profile.to_string()),
            ("seed", self.seed.to_string()),
            ("epsilon", self.epsilon.to_string()),
            ("tau", self.tau.to_string()),
            ("nu", self.nu.to_string()),
            ("delta_matching", self.delta_matching.to_string()),
            ("confidence_c", self.confidence_c.to_string()),
            ("alpha", self.alpha.to_string()),
            ("phase_len_t", self.phase_len_t.to_string()),
            ("sample_count_k", self.sample_count_k.to_string()),
            ("friend_window", self.friend_window.to_string()),
            ("cap_samples", self.cap_samples.to_string()),
            ("dispatch_frac", self.dispatch_frac.to_string()),
            ("heavy_frac", self.heavy_frac.to_string()),
            ("small_matching_frac", self.small_matching_frac.to_string()),
            ("floor_frac", self.floor_frac.to_string()),
            ("phase_frac", self.phase_frac.to_string()),
        ]
    }

    /// Overrides one field from its textual form.
    pub fn set_key(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
            value.trim().parse().map_err(|_| format!("invalid value '{value}' for {key}"))
        }
        match key {
            "profile" => self.profile = value.trim().parse()?,
            "seed" => self.seed = num(key, value)?,
            "epsilon" => self.epsilon = num(key, value)?,
            "tau" => self.tau = num(key, value)?,
            "nu" => self.nu = num(key, value)?,
            "delta_matching" => self.delta_matching = num(key, value)?,
            "confidence_c" => self.confidence_c = num(key, value)?,
            "alpha" => self.alpha = num(key, value)?,
            "phase_len_t" => self.phase_len_t = num(key, value)?,
            "sample_count_k" => self.sample_count_k = num(key, value)?,
            "friend_window" => self.friend_window = num(key, value)?,
            "cap_samples" => self.cap_samples = num(key, value)?,
            "dispatch_frac" => self.dispatch_frac = num(key, value)?,
            "heavy_frac" => self.heavy_frac = num(key, value)?,
            "small_matching_frac" => self.small_matching_frac = num(key, value)?,
            "floor_frac" => self.floor_frac = num(key, value)?,
            "phase_frac" => self.phase_frac = num(key, value)?,
            other => return Err(format!("unknown parameter '{other}'")),
        }
        Ok(())
    }
}

/// t = max(1, ⌊phase_frac·ε²Δ⌋).
pub fn phase_len(phase_frac: f64, epsilon: f64, delta: usize) -> usize {
    ((phase_frac * epsilon * epsilon * delta as f64).floor() as usize).max(1)
}

/// k = ⌈12c·ln n/τ²⌉.
pub fn confident_sample_count(n: usize, tau: f64, c: f64) -> usize {
    ((12.0 * c * (n.max(2) as f64).ln()) / (tau * tau)).ceil() as usize
}

/// 64·⌈log₂(n+2)⌉.
pub fn default_cap(n: usize) -> usize {
    64 * ((n + 2) as f64).log2().ceil() as usize
}
