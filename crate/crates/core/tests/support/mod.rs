#![allow(dead_code)]

use cmcgrasp::svm::{dual_objective, KernelSpec, Sample, Trained};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub const FS: f64 = 500.0;

/// Envelope rising linearly around 1.0 s and falling around 3.0 s.
pub fn trapezoid(rise: f64, fall: f64, ramp: f64, len_s: f64) -> Vec<f64> {
    let n = (len_s * FS) as usize;
    (0..n)
        .map(|i| {
            let t = i as f64 / FS;
            let up = ((t - (rise - ramp / 2.0)) / ramp).clamp(0.0, 1.0);
            let down = (((fall + ramp / 2.0) - t) / ramp).clamp(0.0, 1.0);
            up.min(down)
        })
        .collect()
}

/// Longest all-true interval by checking every (start, end) pair; earliest
/// wins ties.
pub fn brute_longest(mask: &[bool]) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for s in 0..mask.len() {
        for e in s + 1..=mask.len() {
            if mask[s..e].iter().all(|&b| b) && best.is_none_or(|(bs, be)| e - s > be - bs) {
                best = Some((s, e));
            }
        }
    }
    best
}

pub fn gaussian_blobs(n: usize, dim: usize, sep: f64, rng: &mut ChaCha8Rng) -> Vec<Sample> {
    (0..n)
        .map(|i| {
            let label = if i % 2 == 0 { 1 } else { -1 };
            let features = (0..dim)
                .map(|d| {
                    let centre = if d == 0 { f64::from(label) * sep / 2.0 } else { 0.0 };
                    centre + rng.sample::<f64, _>(StandardNormal)
                })
                .collect();
            Sample::new(features, label).unwrap()
        })
        .collect()
}

/// Two blobs whose projections on the first axis are at least `margin` apart.
pub fn separable_blobs(n: usize, margin: f64, rng: &mut ChaCha8Rng) -> Vec<Sample> {
    (0..n)
        .map(|i| {
            let label: i8 = if i % 2 == 0 { 1 } else { -1 };
            let x0 = f64::from(label) * (margin / 2.0 + rng.random::<f64>() * 2.0);
            let x1 = 2.0 * rng.sample::<f64, _>(StandardNormal);
            Sample::new(vec![x0, x1], label).unwrap()
        })
        .collect()
}

pub fn training_accuracy(t: &Trained, samples: &[Sample]) -> f64 {
    let ok = samples
        .iter()
        .filter(|s| t.model.predict(&s.features).unwrap() == s.label)
        .count();
    ok as f64 / samples.len() as f64
}

/// Exact dual maximum by enumerating every assignment of each multiplier to
/// {0, C, free} and solving the free-variable KKT system.
pub fn dual_maximum(kernel: &KernelSpec, s: &[Sample], c: f64) -> f64 {
    let n = s.len();
    let y: Vec<f64> = s.iter().map(|v| f64::from(v.label)).collect();
    let k = DMatrix::from_fn(n, n, |i, j| kernel.eval(&s[i].features, &s[j].features));
    let mut best = f64::NEG_INFINITY;
    let mut status = vec![0u8; n];
    for code in 0..3usize.pow(n as u32) {
        let mut r = code;
        for st in status.iter_mut() {
            *st = (r % 3) as u8;
            r /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| status[i] == 2).collect();
        let at_c: Vec<usize> = (0..n).filter(|&i| status[i] == 1).collect();
        let m = free.len();
        // unknowns: alpha_free, b
        let mut a = DMatrix::zeros(m + 1, m + 1);
        let mut rhs = DVector::zeros(m + 1);
        for (r, &i) in free.iter().enumerate() {
            for (col, &j) in free.iter().enumerate() {
                a[(r, col)] = y[j] * k[(i, j)];
            }
            a[(r, m)] = 1.0;
            rhs[r] = y[i] - at_c.iter().map(|&j| c * y[j] * k[(i, j)]).sum::<f64>();
        }
        for (col, &j) in free.iter().enumerate() {
            a[(m, col)] = y[j];
        }
        rhs[m] = -at_c.iter().map(|&j| c * y[j]).sum::<f64>();
        let alpha_free = if m == 0 {
            if rhs[0].abs() > 1e-12 {
                continue;
            }
            Vec::new()
        } else {
            match a.lu().solve(&rhs) {
                Some(sol) => sol.iter().take(m).copied().collect(),
                None => continue,
            }
        };
        if alpha_free.iter().any(|&v| !(-1e-12..=c + 1e-12).contains(&v)) {
            continue;
        }
        let mut alphas = vec![0.0; n];
        for &i in &at_c {
            alphas[i] = c;
        }
        for (&i, &v) in free.iter().zip(&alpha_free) {
            alphas[i] = v.clamp(0.0, c);
        }
        best = best.max(dual_objective(kernel, s, &alphas));
    }
    best
}
