//! Binary support-vector classifier trained by sequential minimal
//! optimization, plus standardization and repeated stratified
//! cross-validation.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum SvmError {
    #[error("training data must contain both classes")]
    SingleClass,
    #[error("no samples")]
    Empty,
    #[error("sample {index} has a non-finite feature")]
    NonFinite { index: usize },
    #[error("label must be -1 or +1, got {0}")]
    BadLabel(i8),
    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid hyperparameter: {0}")]
    InvalidParam(String),
    #[error("class {label:+} has {count} samples, fewer than k = {k} folds")]
    ClassTooSmall { label: i8, count: usize, k: usize },
    #[error("model file {path}: {reason}")]
    ModelFile { path: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: Vec<f64>,
    /// -1 or +1
    pub label: i8,
}

impl Sample {
    pub fn new(features: Vec<f64>, label: i8) -> Result<Self, SvmError> {
        if label != -1 && label != 1 {
            return Err(SvmError::BadLabel(label));
        }
        Ok(Self { features, label })
    }
}

fn check_samples(samples: &[Sample]) -> Result<usize, SvmError> {
    let d = samples.first().ok_or(SvmError::Empty)?.features.len();
    for (index, s) in samples.iter().enumerate() {
        if s.label != -1 && s.label != 1 {
            return Err(SvmError::BadLabel(s.label));
        }
        if s.features.len() != d {
            return Err(SvmError::DimensionMismatch {
                expected: d,
                got: s.features.len(),
            });
        }
        if s.features.iter().any(|v| !v.is_finite()) {
            return Err(SvmError::NonFinite { index });
        }
    }
    Ok(d)
}

/// Per-feature z-score parameters (population standard deviation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardization {
    pub fn fit(train: &[Sample]) -> Result<Self, SvmError> {
        let d = check_samples(train)?;
        let n = train.len() as f64;
        let mut mean = vec![0.0; d];
        for s in train {
            for (m, v) in mean.iter_mut().zip(&s.features) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for s in train {
            for ((acc, v), m) in var.iter_mut().zip(&s.features).zip(&mean) {
                *acc += (v - m) * (v - m);
            }
        }
        let std = var.into_iter().map(|v| (v / n).sqrt()).collect();
        Ok(Self { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Zero-variance features map to 0.
    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((v, m), s)| if *s > 0.0 { (v - m) / s } else { 0.0 })
            .collect()
    }

    pub fn apply(&self, samples: &[Sample]) -> Vec<Sample> {
        samples
            .iter()
            .map(|s| Sample {
                features: self.transform(&s.features),
                label: s.label,
            })
            .collect()
    }
}

pub fn standardize_fit(train: &[Sample]) -> Result<Standardization, SvmError> {
    Standardization::fit(train)
}

pub fn standardize_apply(stdz: &Standardization, samples: &[Sample]) -> Vec<Sample> {
    stdz.apply(samples)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelSpec {
    Linear,
    Rbf { gamma: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<(), SvmError> {
        match *self {
            KernelSpec::Rbf { gamma } if !(gamma > 0.0 && gamma.is_finite()) => Err(
                SvmError::InvalidParam(format!("rbf gamma must be positive, got {gamma}")),
            ),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            KernelSpec::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            KernelSpec::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
        }
    }
}

/// How the RBF width is chosen for a training set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GammaMode {
    /// `1 / (d * mean feature variance)` of the (standardized) training data.
    Scale,
    Fixed(f64),
}

/// Kernel family plus the rule that fixes its parameters per training set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelChoice {
    Linear,
    Rbf { gamma: GammaMode },
}

impl KernelChoice {
    pub const fn name(&self) -> &'static str {
        match self {
            KernelChoice::Linear => "linear",
            KernelChoice::Rbf { .. } => "rbf",
        }
    }

    pub fn resolve(&self, standardized: &[Sample]) -> KernelSpec {
        match *self {
            KernelChoice::Linear => KernelSpec::Linear,
            KernelChoice::Rbf {
                gamma: GammaMode::Fixed(gamma),
            } => KernelSpec::Rbf { gamma },
            KernelChoice::Rbf {
                gamma: GammaMode::Scale,
            } => {
                let d = standardized.first().map_or(1, |s| s.features.len()).max(1);
                let mean_var = Standardization::fit(standardized)
                    .map(|s| s.std.iter().map(|v| v * v).sum::<f64>() / d as f64)
                    .unwrap_or(0.0);
                let gamma = if mean_var > 0.0 {
                    1.0 / (d as f64 * mean_var)
                } else {
                    1.0
                };
                KernelSpec::Rbf { gamma }
            }
        }
    }
}

impl fmt::Display for KernelChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoParams {
    pub c: f64,
    pub tol: f64,
    pub max_passes: usize,
    pub seed: u64,
}

impl Default for SmoParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            tol: 1e-3,
            max_passes: 20,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub kernel: KernelSpec,
    pub c: f64,
    /// Support vectors in standardized coordinates.
    pub support_vectors: Vec<Vec<f64>>,
    /// `alpha_i * y_i` per support vector.
    pub coefficients: Vec<f64>,
    pub bias: f64,
    pub standardization: Standardization,
}

/// A trained model plus the full dual solution over its training set.
#[derive(Debug, Clone)]
pub struct Trained {
    pub model: SvmModel,
    /// One multiplier per training sample, in input order.
    pub alphas: Vec<f64>,
    /// Training set after standardization.
    pub standardized: Vec<Sample>,
    pub objective: f64,
    pub passes: usize,
    pub converged: bool,
}

impl SvmModel {
    /// Decision value for a raw (unstandardized) input.
    pub fn decision_value(&self, x: &[f64]) -> Result<f64, SvmError> {
        if x.len() != self.standardization.dim() {
            return Err(SvmError::DimensionMismatch {
                expected: self.standardization.dim(),
                got: x.len(),
            });
        }
        let z = self.standardization.transform(x);
        Ok(self.decision_standardized(&z))
    }

    pub fn decision_standardized(&self, z: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.coefficients)
            .map(|(sv, c)| c * self.kernel.eval(sv, z))
            .sum::<f64>()
            + self.bias
    }

    /// Sign of the decision value; an exact zero is +1.
    pub fn predict(&self, x: &[f64]) -> Result<i8, SvmError> {
        Ok(if self.decision_value(x)? >= 0.0 { 1 } else { -1 })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ModelFile {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            model: self.clone(),
        })
        .expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
        if file.format != MODEL_FORMAT {
            return Err(format!("unexpected format tag `{}`", file.format));
        }
        if file.version != MODEL_VERSION {
            return Err(format!("unsupported model version {}", file.version));
        }
        let m = file.model;
        if m.support_vectors.len() != m.coefficients.len() {
            return Err("support vector and coefficient counts differ".into());
        }
        if m.support_vectors
            .iter()
            .any(|sv| sv.len() != m.standardization.dim())
        {
            return Err("support vector dimension does not match standardization".into());
        }
        m.kernel.validate().map_err(|e| e.to_string())?;
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<(), SvmError> {
        std::fs::write(path, self.to_json()).map_err(|e| SvmError::ModelFile {
            path: path.display().to_string(),
            reason: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, SvmError> {
        let err = |reason: String| SvmError::ModelFile {
            path: path.display().to_string(),
            reason,
        };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        Self::from_json(&text).map_err(err)
    }
}

const MODEL_FORMAT: &str = "cmcgrasp-svm";
const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    #[serde(flatten)]
    model: SvmModel,
}

/// SVM dual objective `sum(a) - 1/2 sum_ij a_i a_j y_i y_j K_ij`.
pub fn dual_objective(kernel: &KernelSpec, samples: &[Sample], alphas: &[f64]) -> f64 {
    let mut quad = 0.0;
    for (i, si) in samples.iter().enumerate() {
        if alphas[i] == 0.0 {
            continue;
        }
        for (j, sj) in samples.iter().enumerate() {
            quad += alphas[i]
                * alphas[j]
                * f64::from(si.label * sj.label)
                * kernel.eval(&si.features, &sj.features);
        }
    }
    alphas.iter().sum::<f64>() - 0.5 * quad
}

struct Smo<'a> {
    y: Vec<f64>,
    k: Vec<f64>,
    n: usize,
    c: f64,
    tol: f64,
    alpha: Vec<f64>,
    err: Vec<f64>,
    b: f64,
    rng: &'a mut ChaCha8Rng,
}

const STEP_EPS: f64 = 1e-12;

impl Smo<'_> {
    fn kij(&self, i: usize, j: usize) -> f64 {
        self.k[i * self.n + j]
    }

    fn non_bound(&self, i: usize) -> bool {
        self.alpha[i] > 0.0 && self.alpha[i] < self.c
    }

    fn snap(&self, a: f64) -> f64 {
        if a < STEP_EPS * self.c {
            0.0
        } else if a > self.c * (1.0 - STEP_EPS) {
            self.c
        } else {
            a
        }
    }

    fn take_step(&mut self, i1: usize, i2: usize) -> bool {
        if i1 == i2 {
            return false;
        }
        let (a1, a2) = (self.alpha[i1], self.alpha[i2]);
        let (y1, y2) = (self.y[i1], self.y[i2]);
        let (e1, e2) = (self.err[i1], self.err[i2]);
        let s = y1 * y2;
        let (lo, hi) = if y1 != y2 {
            ((a2 - a1).max(0.0), (self.c + a2 - a1).min(self.c))
        } else {
            ((a1 + a2 - self.c).max(0.0), (a1 + a2).min(self.c))
        };
        if hi - lo <= STEP_EPS * self.c {
            return false;
        }
        let (k11, k12, k22) = (self.kij(i1, i1), self.kij(i1, i2), self.kij(i2, i2));
        let eta = k11 + k22 - 2.0 * k12;
        let mut a2_new = if eta > 0.0 {
            (a2 + y2 * (e1 - e2) / eta).clamp(lo, hi)
        } else {
            // objective along the constraint line at both ends
            let f1 = y1 * e1 - a1 * k11 - s * a2 * k12;
            let f2 = y2 * e2 - s * a1 * k12 - a2 * k22;
            let end = |a2e: f64| {
                let a1e = a1 + s * (a2 - a2e);
                a1e * f1 + a2e * f2 + 0.5 * a1e * a1e * k11 + 0.5 * a2e * a2e * k22
                    + s * a2e * a1e * k12
            };
            let (l_obj, h_obj) = (end(lo), end(hi));
            if l_obj < h_obj - 1e-12 {
                lo
            } else if l_obj > h_obj + 1e-12 {
                hi
            } else {
                a2
            }
        };
        a2_new = self.snap(a2_new);
        if (a2_new - a2).abs() < STEP_EPS * (a2_new + a2 + STEP_EPS) {
            return false;
        }
        let a1_new = self.snap(a1 + s * (a2 - a2_new));
        let (d1, d2) = (y1 * (a1_new - a1), y2 * (a2_new - a2));
        let b1 = self.b - e1 - d1 * k11 - d2 * k12;
        let b2 = self.b - e2 - d1 * k12 - d2 * k22;
        let new_b = if a1_new > 0.0 && a1_new < self.c {
            b1
        } else if a2_new > 0.0 && a2_new < self.c {
            b2
        } else {
            0.5 * (b1 + b2)
        };
        let db = new_b - self.b;
        for i in 0..self.n {
            self.err[i] += d1 * self.kij(i1, i) + d2 * self.kij(i2, i) + db;
        }
        self.alpha[i1] = a1_new;
        self.alpha[i2] = a2_new;
        self.b = new_b;
        true
    }

    fn violates(&self, i: usize) -> bool {
        let r = self.err[i] * self.y[i];
        (r < -self.tol && self.alpha[i] < self.c) || (r > self.tol && self.alpha[i] > 0.0)
    }

    fn examine(&mut self, i2: usize) -> bool {
        if !self.violates(i2) {
            return false;
        }
        let e2 = self.err[i2];
        let non_bound: Vec<usize> = (0..self.n).filter(|&i| self.non_bound(i)).collect();
        if non_bound.len() > 1 {
            let i1 = non_bound
                .iter()
                .copied()
                .max_by(|&a, &b| (self.err[a] - e2).abs().total_cmp(&(self.err[b] - e2).abs()))
                .expect("non-empty");
            if self.take_step(i1, i2) {
                return true;
            }
        }
        if !non_bound.is_empty() {
            let start = self.rng.random_range(0..non_bound.len());
            for off in 0..non_bound.len() {
                let i1 = non_bound[(start + off) % non_bound.len()];
                if self.take_step(i1, i2) {
                    return true;
                }
            }
        }
        let start = self.rng.random_range(0..self.n);
        for off in 0..self.n {
            if self.take_step((start + off) % self.n, i2) {
                return true;
            }
        }
        false
    }

    /// Exact decision errors from the current multipliers.
    fn refresh_errors(&mut self) {
        for i in 0..self.n {
            let f: f64 = (0..self.n)
                .filter(|&j| self.alpha[j] != 0.0)
                .map(|j| self.alpha[j] * self.y[j] * self.kij(j, i))
                .sum();
            self.err[i] = f + self.b - self.y[i];
        }
    }

    /// Bias from the free multipliers, or the middle of the feasible
    /// interval when every multiplier sits at a bound.
    fn refit_bias(&mut self) {
        self.refresh_errors();
        let free: Vec<usize> = (0..self.n).filter(|&i| self.non_bound(i)).collect();
        let target = if free.is_empty() {
            let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
            for i in 0..self.n {
                // g = f - b; constraint on b from y_i (g_i + b) >= 1 or <= 1
                let g = self.err[i] + self.y[i] - self.b;
                let at_zero = self.alpha[i] == 0.0;
                let need_ge = (self.y[i] > 0.0) == at_zero;
                let bound = self.y[i] - g;
                if need_ge {
                    lo = lo.max(bound);
                } else {
                    hi = hi.min(bound);
                }
            }
            match (lo.is_finite(), hi.is_finite()) {
                (true, true) => 0.5 * (lo + hi),
                (true, false) => lo,
                (false, true) => hi,
                _ => self.b,
            }
        } else {
            free.iter()
                .map(|&i| self.y[i] - (self.err[i] + self.y[i] - self.b))
                .sum::<f64>()
                / free.len() as f64
        };
        let db = target - self.b;
        self.b = target;
        self.err.iter_mut().for_each(|e| *e += db);
    }
}

/// Platt-style SMO on standardized features.
pub fn train_smo(samples: &[Sample], kernel: KernelSpec, params: &SmoParams) -> Result<Trained, SvmError> {
    check_samples(samples)?;
    kernel.validate()?;
    if !(params.c > 0.0 && params.c.is_finite()) {
        return Err(SvmError::InvalidParam(format!("C must be positive, got {}", params.c)));
    }
    if !(params.tol >= 0.0) {
        return Err(SvmError::InvalidParam(format!("tol must be non-negative, got {}", params.tol)));
    }
    if !(samples.iter().any(|s| s.label > 0) && samples.iter().any(|s| s.label < 0)) {
        return Err(SvmError::SingleClass);
    }
    let standardization = Standardization::fit(samples)?;
    let standardized = standardization.apply(samples);
    let n = standardized.len();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = kernel.eval(&standardized[i].features, &standardized[j].features);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    let y: Vec<f64> = standardized.iter().map(|s| f64::from(s.label)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut smo = Smo {
        err: y.iter().map(|v| -v).collect(),
        y,
        k,
        n,
        c: params.c,
        tol: params.tol,
        alpha: vec![0.0; n],
        b: 0.0,
        rng: &mut rng,
    };

    let mut passes = 0;
    let mut examine_all = true;
    let mut converged = false;
    // Bounds the inner (non-bound) sweeps between full passes.
    let inner_cap = 50 * n.max(10);
    while passes < params.max_passes {
        let mut changed = 0usize;
        if examine_all {
            passes += 1;
            let start = smo.rng.random_range(0..n);
            for off in 0..n {
                changed += usize::from(smo.examine((start + off) % n));
            }
        } else {
            let mut inner = 0;
            loop {
                let nb: Vec<usize> = (0..n).filter(|&i| smo.non_bound(i)).collect();
                let mut c = 0;
                for i in nb {
                    c += usize::from(smo.examine(i));
                }
                changed += c;
                inner += 1;
                if c == 0 || inner >= inner_cap {
                    break;
                }
            }
        }
        if examine_all {
            if changed == 0 {
                smo.refit_bias();
                if (0..n).all(|i| !smo.violates(i)) {
                    converged = true;
                    break;
                }
            }
            examine_all = false;
        } else {
            examine_all = true;
        }
    }
    smo.refresh_errors();

    let alphas = smo.alpha.clone();
    let (support_vectors, coefficients) = alphas
        .iter()
        .enumerate()
        .filter(|(_, &a)| a > 0.0)
        .map(|(i, &a)| (standardized[i].features.clone(), a * smo.y[i]))
        .unzip();
    let objective = dual_objective(&kernel, &standardized, &alphas);
    let model = SvmModel {
        kernel,
        c: params.c,
        support_vectors,
        coefficients,
        bias: smo.b,
        standardization,
    };
    Ok(Trained {
        model,
        alphas,
        standardized,
        objective,
        passes,
        converged,
    })
}

pub fn predict(model: &SvmModel, x: &[f64]) -> Result<i8, SvmError> {
    model.predict(x)
}

/// Accuracies of every fold of a repeated stratified cross-validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub fold_accuracies: Vec<f64>,
    pub balanced_accuracies: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    pub balanced_mean: f64,
    pub k: usize,
    pub reps: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvParams {
    pub k: usize,
    pub reps: usize,
}

impl Default for CvParams {
    fn default() -> Self {
        Self { k: 5, reps: 10 }
    }
}

/// Fraction of correct predictions.
pub fn accuracy(correct: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        correct as f64 / total as f64
    }
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Stratified fold assignment: each class is shuffled and dealt
/// round-robin into `k` folds.
pub fn stratified_folds(labels: &[i8], k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut fold = vec![0; labels.len()];
    for class in [-1i8, 1] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(rng);
        for (pos, i) in idx.into_iter().enumerate() {
            fold[i] = pos % k;
        }
    }
    fold
}

pub fn cross_validate(
    samples: &[Sample],
    kernel: KernelChoice,
    smo: &SmoParams,
    cv: CvParams,
    seed: u64,
) -> Result<CvReport, SvmError> {
    check_samples(samples)?;
    if cv.k < 2 || cv.reps == 0 {
        return Err(SvmError::InvalidParam(format!(
            "need k >= 2 and reps >= 1, got k = {}, reps = {}",
            cv.k, cv.reps
        )));
    }
    let labels: Vec<i8> = samples.iter().map(|s| s.label).collect();
    for class in [-1i8, 1] {
        let count = labels.iter().filter(|&&l| l == class).count();
        if count < cv.k {
            return Err(SvmError::ClassTooSmall {
                label: class,
                count,
                k: cv.k,
            });
        }
    }
    let mut fold_accuracies = Vec::with_capacity(cv.k * cv.reps);
    let mut balanced_accuracies = Vec::with_capacity(cv.k * cv.reps);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for rep in 0..cv.reps {
        let folds = stratified_folds(&labels, cv.k, &mut rng);
        for f in 0..cv.k {
            let (train, test): (Vec<_>, Vec<_>) = samples
                .iter()
                .zip(&folds)
                .partition(|(_, &fi)| fi != f);
            let train: Vec<Sample> = train.into_iter().map(|(s, _)| s.clone()).collect();
            let test: Vec<&Sample> = test.into_iter().map(|(s, _)| s).collect();
            let stdz = Standardization::fit(&train)?;
            let spec = kernel.resolve(&stdz.apply(&train));
            let params = SmoParams {
                seed: seed ^ ((rep * cv.k + f) as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
                ..*smo
            };
            let trained = train_smo(&train, spec, &params)?;
            let mut correct = [0usize; 2];
            let mut total = [0usize; 2];
            for s in &test {
                let c = usize::from(s.label > 0);
                total[c] += 1;
                if trained.model.predict(&s.features)? == s.label {
                    correct[c] += 1;
                }
            }
            fold_accuracies.push(accuracy(correct[0] + correct[1], total[0] + total[1]));
            balanced_accuracies.push(
                0.5 * (accuracy(correct[0], total[0]) + accuracy(correct[1], total[1])),
            );
        }
    }
    let (mean, std) = mean_std(&fold_accuracies);
    let (balanced_mean, _) = mean_std(&balanced_accuracies);
    Ok(CvReport {
        fold_accuracies,
        balanced_accuracies,
        mean,
        std,
        balanced_mean,
        k: cv.k,
        reps: cv.reps,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(x: &[f64], y: i8) -> Sample {
        Sample::new(x.to_vec(), y).unwrap()
    }

    #[test]
    fn standardize_examples() {
        let train = vec![s(&[1.0, 7.0], -1), s(&[3.0, 7.0], 1)];
        let st = standardize_fit(&train).unwrap();
        let out = standardize_apply(&st, &train);
        assert_eq!(out[0].features, vec![-1.0, 0.0]);
        assert_eq!(out[1].features, vec![1.0, 0.0]);
    }

    #[test]
    fn symmetric_pair() {
        let data = vec![s(&[-1.0], -1), s(&[1.0], 1)];
        let t = train_smo(&data, KernelSpec::Linear, &SmoParams::default()).unwrap();
        assert!(t.converged);
        assert_eq!(t.model.predict(&[-1.0]).unwrap(), -1);
        assert_eq!(t.model.predict(&[1.0]).unwrap(), 1);
        assert_eq!(t.model.predict(&[-0.3]).unwrap(), -1);
        assert_eq!(t.model.predict(&[0.3]).unwrap(), 1);
        // tie at the origin resolves to +1
        assert_eq!(t.model.decision_value(&[0.0]).unwrap(), 0.0);
        assert_eq!(t.model.predict(&[0.0]).unwrap(), 1);
    }

    #[test]
    fn rejects_bad_inputs() {
        let one_class = vec![s(&[1.0], 1), s(&[2.0], 1)];
        assert!(matches!(
            train_smo(&one_class, KernelSpec::Linear, &SmoParams::default()),
            Err(SvmError::SingleClass)
        ));
        let nan = vec![s(&[1.0], 1), s(&[f64::NAN], -1)];
        assert!(matches!(
            train_smo(&nan, KernelSpec::Linear, &SmoParams::default()),
            Err(SvmError::NonFinite { index: 1 })
        ));
        assert!(Sample::new(vec![0.0], 0).is_err());
        let ok = vec![s(&[-1.0], -1), s(&[1.0], 1)];
        let bad_c = SmoParams {
            c: 0.0,
            ..SmoParams::default()
        };
        assert!(train_smo(&ok, KernelSpec::Linear, &bad_c).is_err());
        assert!(train_smo(&ok, KernelSpec::Rbf { gamma: -1.0 }, &SmoParams::default()).is_err());
        let t = train_smo(&ok, KernelSpec::Linear, &SmoParams::default()).unwrap();
        assert!(matches!(
            t.model.predict(&[1.0, 2.0]),
            Err(SvmError::DimensionMismatch { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn accuracy_ratio() {
        assert_eq!(accuracy(47, 50), 0.94);
    }

    #[test]
    fn class_too_small_for_folds() {
        let data: Vec<_> = (0..10)
            .map(|i| s(&[i as f64], if i < 3 { -1 } else { 1 }))
            .collect();
        assert!(matches!(
            cross_validate(&data, KernelChoice::Linear, &SmoParams::default(), CvParams::default(), 1),
            Err(SvmError::ClassTooSmall { label: -1, count: 3, k: 5 })
        ));
    }

    #[test]
    fn folds_are_stratified() {
        let labels: Vec<i8> = (0..23).map(|i| if i < 8 { -1 } else { 1 }).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let folds = stratified_folds(&labels, 5, &mut rng);
        for f in 0..5 {
            let neg = (0..23).filter(|&i| folds[i] == f && labels[i] < 0).count();
            let pos = (0..23).filter(|&i| folds[i] == f && labels[i] > 0).count();
            assert!((1..=2).contains(&neg), "fold {f}: {neg}");
            assert!(pos == 3);
        }
    }

    #[test]
    fn model_file_round_trip() {
        let data = vec![s(&[-1.0, 0.5], -1), s(&[1.0, 0.2], 1), s(&[0.8, -0.1], 1)];
        let t = train_smo(&data, KernelSpec::Rbf { gamma: 0.5 }, &SmoParams::default()).unwrap();
        let text = t.model.to_json();
        assert!(text.contains("\"format\": \"cmcgrasp-svm\""));
        assert_eq!(SvmModel::from_json(&text).unwrap(), t.model);
        let tampered = text.replace("\"version\": 1", "\"version\": 9");
        assert!(SvmModel::from_json(&tampered).is_err());
    }
}
