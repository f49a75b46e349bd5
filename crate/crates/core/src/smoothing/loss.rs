use serde::{Deserialize, Serialize};

use super::refine::{matvec, softmax, RefinementMatrix};
use crate::error::{Error, Result};
use crate::graph::DenseMatrix;

/// Predicted probabilities are clamped to this before taking logs.
pub const LOG_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossMode {
    /// Cross-entropy against the one-hot label.
    Plain,
    /// Uniform label smoothing.
    Ls,
    /// Adaptive label smoothing with a refined soft target.
    Als,
}

/// How a smoothed label is composed from `y` and a soft distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmoothMode {
    /// `(1 − α)·y + α/C`.
    UniformLs,
    /// `(1 − α)·y + α·y_soft` with `y_soft = Softmax(W·y_k)`.
    Als,
    /// `y_soft` is the propagated row itself, renormalized; zero rows fall
    /// back to uniform.
    AblateRefinement,
    /// `y_soft = Softmax(W·y)` from the one-hot label; composes like `Als`.
    AblatePropagation,
}

/// Per-term batch means of the objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub total: f64,
    /// Mean `H(y, ŷ)`.
    pub ce_hard: f64,
    /// Mean `H(y_soft, ŷ)` (uniform target in LS mode, 0 in plain mode).
    pub ce_soft: f64,
    /// Mean `KL(y_soft ‖ 1/C)`.
    pub kl_term: f64,
}

/// Source of the soft target in ALS mode.
#[derive(Debug, Clone, Copy)]
pub enum SoftTarget<'a> {
    /// `y_soft = Softmax(W · row)` per node; `W` is trained.
    Refined {
        w: &'a RefinementMatrix,
        inputs: &'a DenseMatrix,
    },
    /// `y_soft` = row renormalized (uniform for zero rows); nothing trained.
    Direct { inputs: &'a DenseMatrix },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub mode: LossMode,
    /// Smoothing strength `α_t`; ignored in plain mode.
    pub alpha: f64,
    /// KL weight `γ`; only used in ALS mode.
    pub gamma: f64,
    /// Treat `y_soft` as a constant inside `α·H(y_soft, ŷ)` when
    /// differentiating with respect to `W`, leaving only the KL gradient.
    pub detach_soft_target: bool,
}

impl LossConfig {
    pub fn plain() -> Self {
        Self {
            mode: LossMode::Plain,
            alpha: 0.0,
            gamma: 0.0,
            detach_soft_target: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LossOutput {
    pub breakdown: LossBreakdown,
    /// `∂total/∂logits`, one row per batch training node.
    pub dlogits: DenseMatrix,
    /// `∂total/∂W`; zero unless the soft target is [`SoftTarget::Refined`].
    pub dw: DenseMatrix,
    /// Multiply-adds spent on the refinement path.
    pub refinement_ops: u64,
}

fn is_distribution(p: &[f64]) -> bool {
    p.iter().all(|&v| v >= 0.0 && v.is_finite()) && (p.iter().sum::<f64>() - 1.0).abs() <= 1e-9
}

/// `KL(p ‖ 1/C) = Σ p_c·ln(p_c·C)`, with `0·ln 0 = 0`.
pub fn kl_to_uniform(p: &[f64]) -> Result<f64> {
    if p.is_empty() || !is_distribution(p) {
        return Err(Error::InvalidArgument("KL input is not a distribution".into()));
    }
    Ok(kl_unchecked(p))
}

fn kl_unchecked(p: &[f64]) -> f64 {
    let c = p.len() as f64;
    p.iter().filter(|&&v| v > 0.0).map(|&v| v * (v * c).ln()).sum()
}

/// Renormalize a propagated row into a distribution; zero rows become
/// uniform.
pub fn normalize_or_uniform(row: &[f64]) -> Vec<f64> {
    let s: f64 = row.iter().sum();
    if s > 0.0 {
        row.iter().map(|v| v / s).collect()
    } else {
        vec![1.0 / row.len() as f64; row.len()]
    }
}

/// Compose the smoothed label for one node.
pub fn smooth_label(y: &[f64], y_soft: &[f64], alpha: f64, mode: SmoothMode) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} must lie in [0, 1]")));
    }
    if y.len() != y_soft.len() {
        return Err(Error::DimensionMismatch("label and soft label lengths differ".into()));
    }
    let c = y.len();
    let soft: Vec<f64> = match mode {
        SmoothMode::UniformLs => vec![1.0 / c as f64; c],
        SmoothMode::Als | SmoothMode::AblatePropagation => y_soft.to_vec(),
        SmoothMode::AblateRefinement => normalize_or_uniform(y_soft),
    };
    Ok(y.iter().zip(&soft).map(|(a, s)| (1.0 - alpha) * a + alpha * s).collect())
}

/// Batch objective and its gradients.
///
/// `logits` and `labels` hold only the batch's training nodes. In ALS mode
/// `soft` must be given; its input rows align with `logits`.
///
/// `total = mean_i[(1 − α)·H(y_i, ŷ_i) + α·H(y_soft_i, ŷ_i)] + γ·mean_i KL(y_soft_i ‖ 1/C)`
pub fn loss_and_grads(
    logits: &DenseMatrix,
    labels: &[usize],
    soft: Option<SoftTarget<'_>>,
    cfg: &LossConfig,
) -> Result<LossOutput> {
    let n = logits.rows();
    let c = logits.cols();
    if n == 0 {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    if labels.len() != n {
        return Err(Error::DimensionMismatch(format!("{} labels for {n} logit rows", labels.len())));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= c) {
        return Err(Error::InvalidArgument(format!("label {bad} out of range for {c} classes")));
    }
    if !(cfg.alpha >= 0.0 && cfg.alpha <= 1.0) || !(cfg.gamma >= 0.0) || !cfg.gamma.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "alpha = {} must lie in [0, 1] and gamma = {} must be nonnegative",
            cfg.alpha, cfg.gamma
        )));
    }
    let soft = match (cfg.mode, soft) {
        (LossMode::Als, None) => {
            return Err(Error::InvalidArgument("ALS mode needs a soft target".into()));
        }
        (LossMode::Als, Some(s)) => {
            let inputs = match s {
                SoftTarget::Refined { w, inputs } => {
                    if w.num_classes() != c {
                        return Err(Error::DimensionMismatch("refinement matrix size".into()));
                    }
                    inputs
                }
                SoftTarget::Direct { inputs } => inputs,
            };
            if inputs.rows() != n || inputs.cols() != c {
                return Err(Error::DimensionMismatch(format!(
                    "soft inputs are {}x{}, expected {n}x{c}",
                    inputs.rows(),
                    inputs.cols()
                )));
            }
            Some(s)
        }
        _ => None,
    };

    let (alpha, gamma) = match cfg.mode {
        LossMode::Plain => (0.0, 0.0),
        LossMode::Ls => (cfg.alpha, 0.0),
        LossMode::Als => (cfg.alpha, cfg.gamma),
    };
    let inv_n = 1.0 / n as f64;
    let uniform = vec![1.0 / c as f64; c];
    let zeros = vec![0.0; c];

    let mut dlogits = DenseMatrix::zeros(n, c);
    let mut dw = DenseMatrix::zeros(c, c);
    let mut ops = 0u64;
    let (mut sum_obj, mut sum_hard, mut sum_soft, mut sum_kl) = (0.0, 0.0, 0.0, 0.0);

    for i in 0..n {
        let p = softmax(logits.row(i));
        let logp: Vec<f64> = p.iter().map(|&v| v.max(LOG_CLAMP).ln()).collect();

        let y_soft: Vec<f64> = match (cfg.mode, soft) {
            (LossMode::Plain, _) => zeros.clone(),
            (LossMode::Ls, _) => uniform.clone(),
            (LossMode::Als, Some(SoftTarget::Refined { w, inputs })) => {
                ops += (c * c) as u64;
                softmax(&matvec(&w.w, inputs.row(i)))
            }
            (LossMode::Als, Some(SoftTarget::Direct { inputs })) => normalize_or_uniform(inputs.row(i)),
            (LossMode::Als, None) => unreachable!(),
        };

        let h_hard = -logp[labels[i]];
        let h_soft: f64 = -y_soft.iter().zip(&logp).map(|(s, l)| s * l).sum::<f64>();
        let kl = if cfg.mode == LossMode::Als { kl_unchecked(&y_soft) } else { 0.0 };

        sum_obj += (1.0 - alpha) * h_hard + alpha * h_soft;
        sum_hard += h_hard;
        sum_soft += h_soft;
        sum_kl += kl;

        for (k, d) in dlogits.row_mut(i).iter_mut().enumerate() {
            let y = if k == labels[i] { 1.0 } else { 0.0 };
            let target = (1.0 - alpha) * y + alpha * y_soft[k];
            *d = (p[k] - target) * inv_n;
        }

        if let Some(SoftTarget::Refined { inputs, .. }) = soft {
            // ∂obj_i/∂y_soft, then through the softmax to W·y_k
            let g: Vec<f64> = (0..c)
                .map(|k| {
                    let ce = if cfg.detach_soft_target { 0.0 } else { -alpha * logp[k] };
                    let kl = if y_soft[k] > 0.0 { gamma * ((y_soft[k] * c as f64).ln() + 1.0) } else { 0.0 };
                    ce + kl
                })
                .collect();
            let sg: f64 = y_soft.iter().zip(&g).map(|(s, g)| s * g).sum();
            let yk = inputs.row(i);
            for k in 0..c {
                let da = y_soft[k] * (g[k] - sg) * inv_n;
                if da == 0.0 {
                    continue;
                }
                for (dst, &x) in dw.row_mut(k).iter_mut().zip(yk) {
                    *dst += da * x;
                }
            }
            ops += (c * c) as u64;
        }
    }

    let breakdown = LossBreakdown {
        total: sum_obj * inv_n + gamma * (sum_kl * inv_n),
        ce_hard: sum_hard * inv_n,
        ce_soft: sum_soft * inv_n,
        kl_term: sum_kl * inv_n,
    };
    if !breakdown.total.is_finite() {
        return Err(Error::NonFinite("batch loss".into()));
    }
    Ok(LossOutput {
        breakdown,
        dlogits,
        dw,
        refinement_ops: ops,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_matrix(rows: usize, cols: usize, scale: f64, seed: u64) -> DenseMatrix {
        let mut rng = crate::rng::stream(seed, &[0xF00D]);
        DenseMatrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.random_range(-scale..scale)).collect()).unwrap()
    }

    fn random_soft_rows(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut rng = crate::rng::stream(seed, &[0xBEEF]);
        let mut m = DenseMatrix::zeros(rows, cols);
        for r in 0..rows {
            let mass: f64 = rng.random_range(0.0..1.0);
            let w: Vec<f64> = (0..cols).map(|_| rng.random_range(0.0..1.0)).collect();
            let s: f64 = w.iter().sum();
            for k in 0..cols {
                m.set(r, k, mass * w[k] / s);
            }
        }
        m
    }

    fn random_labels(n: usize, c: usize, seed: u64) -> Vec<usize> {
        let mut rng = crate::rng::stream(seed, &[0xCAFE]);
        (0..n).map(|_| rng.random_range(0..c)).collect()
    }

    fn als(alpha: f64, gamma: f64) -> LossConfig {
        LossConfig {
            mode: LossMode::Als,
            alpha,
            gamma,
            detach_soft_target: false,
        }
    }

    #[test]
    fn smoothing_examples() {
        let y = [0.0, 1.0, 0.0, 0.0];
        let soft = [0.1, 0.2, 0.3, 0.4];
        assert_eq!(smooth_label(&y, &soft, 0.0, SmoothMode::Als).unwrap(), y.to_vec());
        let ls = smooth_label(&[1.0, 0.0, 0.0, 0.0], &soft, 0.1, SmoothMode::UniformLs).unwrap();
        for (a, b) in ls.iter().zip([0.925, 0.025, 0.025, 0.025]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(smooth_label(&y, &soft, 1.0, SmoothMode::Als).unwrap(), soft.to_vec());
        let r = smooth_label(&y, &[0.0, 0.2, 0.2, 0.0], 1.0, SmoothMode::AblateRefinement).unwrap();
        assert_eq!(r, vec![0.0, 0.5, 0.5, 0.0]);
        let r = smooth_label(&y, &[0.0; 4], 1.0, SmoothMode::AblateRefinement).unwrap();
        assert_eq!(r, vec![0.25; 4]);
        assert!(smooth_label(&y, &soft, 1.5, SmoothMode::Als).is_err());
        assert!(smooth_label(&y, &soft, -0.1, SmoothMode::Als).is_err());
    }

    #[test]
    fn smoothed_labels_are_distributions() {
        let y = [0.0, 0.0, 1.0];
        for mode in [SmoothMode::UniformLs, SmoothMode::Als, SmoothMode::AblateRefinement, SmoothMode::AblatePropagation] {
            let out = smooth_label(&y, &[0.2, 0.5, 0.3], 0.37, mode).unwrap();
            assert!(out.iter().all(|&v| v >= 0.0));
            assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl_to_uniform(&[0.25; 4]).unwrap(), 0.0);
        assert!((kl_to_uniform(&[0.0, 1.0, 0.0]).unwrap() - 3f64.ln()).abs() < 1e-15);
        let direct = 0.7 * 1.4f64.ln() + 0.3 * 0.6f64.ln();
        let got = kl_to_uniform(&[0.7, 0.3]).unwrap();
        assert!((got - direct).abs() < 1e-15);
        assert!((got - 0.08228).abs() < 1e-5);
        assert!(kl_to_uniform(&[0.7, 0.7]).is_err());
        assert!(kl_to_uniform(&[1.2, -0.2]).is_err());
    }

    #[test]
    fn plain_uniform_prediction() {
        let logits = DenseMatrix::zeros(3, 5);
        let out = loss_and_grads(&logits, &[0, 2, 4], None, &LossConfig::plain()).unwrap();
        assert!((out.breakdown.total - 5f64.ln()).abs() < 1e-15);
        for row in out.dlogits.row_iter() {
            assert!(row.iter().sum::<f64>().abs() < 1e-15);
        }
        assert_eq!(out.dw, DenseMatrix::zeros(5, 5));
    }

    #[test]
    fn matching_target_gives_zero_gradient() {
        // ŷ = softmax(logits) equals y_ALS when logits = ln(y_ALS)
        let alpha = 0.3;
        let w = RefinementMatrix::random(3, 5);
        let inputs = random_soft_rows(2, 3, 5);
        let labels = [1, 2];
        let mut logits = DenseMatrix::zeros(2, 3);
        for i in 0..2 {
            let soft = refine_target(&w, inputs.row(i));
            let mut y = vec![0.0; 3];
            y[labels[i]] = 1.0;
            let t = smooth_label(&y, &soft, alpha, SmoothMode::Als).unwrap();
            for k in 0..3 {
                logits.set(i, k, t[k].ln());
            }
        }
        let out = loss_and_grads(
            &logits,
            &labels,
            Some(SoftTarget::Refined { w: &w, inputs: &inputs }),
            &als(alpha, 0.01),
        )
        .unwrap();
        assert!(out.dlogits.values().iter().all(|v| v.abs() < 1e-15));
    }

    fn refine_target(w: &RefinementMatrix, row: &[f64]) -> Vec<f64> {
        super::super::refine_soft_label(w, row).unwrap()
    }

    #[test]
    fn error_paths() {
        let logits = DenseMatrix::zeros(0, 3);
        assert!(loss_and_grads(&logits, &[], None, &LossConfig::plain()).is_err());
        let logits = DenseMatrix::zeros(2, 3);
        assert!(loss_and_grads(&logits, &[0, 1], None, &als(0.1, 0.1)).is_err());
        let mut cfg = als(0.1, -1.0);
        cfg.mode = LossMode::Ls;
        assert!(loss_and_grads(&logits, &[0, 1], None, &cfg).is_err());
        cfg.gamma = 0.0;
        cfg.alpha = -0.1;
        assert!(loss_and_grads(&logits, &[0, 1], None, &cfg).is_err());
        assert!(loss_and_grads(&logits, &[0, 3], None, &LossConfig::plain()).is_err());
    }

    /// Central differences of the total with respect to logits and `W`.
    fn finite_difference_check(seed: u64, detach: bool) {
        let (n, c, h) = (7, 5, 1e-5);
        let logits = random_matrix(n, c, 2.0, seed);
        let labels = random_labels(n, c, seed);
        let inputs = random_soft_rows(n, c, seed);
        let mut w = RefinementMatrix::from_weights(random_matrix(c, c, 1.5, seed + 100)).unwrap();
        let cfg = LossConfig {
            detach_soft_target: detach,
            ..als(0.35, 0.2)
        };
        let eval = |logits: &DenseMatrix, w: &RefinementMatrix| {
            loss_and_grads(logits, &labels, Some(SoftTarget::Refined { w, inputs: &inputs }), &cfg).unwrap()
        };
        let out = eval(&logits, &w);
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-4);

        for idx in 0..n * c {
            let mut plus = logits.clone();
            plus.values_mut()[idx] += h;
            let mut minus = logits.clone();
            minus.values_mut()[idx] -= h;
            let fd = (eval(&plus, &w).breakdown.total - eval(&minus, &w).breakdown.total) / (2.0 * h);
            assert!(rel(fd, out.dlogits.values()[idx]) < 1e-6, "dlogits[{idx}]: {fd} vs {}", out.dlogits.values()[idx]);
        }
        if detach {
            return;
        }
        for idx in 0..c * c {
            let orig = w.w.values()[idx];
            w.w.values_mut()[idx] = orig + h;
            let up = eval(&logits, &w).breakdown.total;
            w.w.values_mut()[idx] = orig - h;
            let down = eval(&logits, &w).breakdown.total;
            w.w.values_mut()[idx] = orig;
            let fd = (up - down) / (2.0 * h);
            assert!(rel(fd, out.dw.values()[idx]) < 1e-6, "dW[{idx}]: {fd} vs {}", out.dw.values()[idx]);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        for seed in 0..5 {
            finite_difference_check(seed, false);
        }
        finite_difference_check(9, true);
    }

    #[test]
    fn detached_gradient_is_kl_only() {
        let (n, c) = (4, 3);
        let logits = random_matrix(n, c, 1.0, 1);
        let labels = random_labels(n, c, 1);
        let inputs = random_soft_rows(n, c, 1);
        let w = RefinementMatrix::from_weights(random_matrix(c, c, 1.0, 2)).unwrap();
        let detached = LossConfig { detach_soft_target: true, ..als(0.4, 0.0) };
        let out = loss_and_grads(&logits, &labels, Some(SoftTarget::Refined { w: &w, inputs: &inputs }), &detached).unwrap();
        assert!(out.dw.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn breakdown_identity() {
        for seed in 0..20 {
            let (n, c) = (6, 4);
            let logits = random_matrix(n, c, 3.0, seed);
            let labels = random_labels(n, c, seed);
            let inputs = random_soft_rows(n, c, seed);
            let w = RefinementMatrix::from_weights(random_matrix(c, c, 1.0, seed)).unwrap();
            let cfg = als(0.2, 0.05);
            let b = loss_and_grads(&logits, &labels, Some(SoftTarget::Refined { w: &w, inputs: &inputs }), &cfg)
                .unwrap()
                .breakdown;
            let recomposed = (1.0 - 0.2) * b.ce_hard + 0.2 * b.ce_soft + 0.05 * b.kl_term;
            assert!((b.total - recomposed).abs() < 1e-12);
        }
    }

    #[test]
    fn refinement_cost_is_quadratic_in_classes() {
        for (n, c) in [(10, 4), (10, 16), (40, 16), (25, 32)] {
            let logits = random_matrix(n, c, 1.0, 3);
            let labels = random_labels(n, c, 3);
            let inputs = random_soft_rows(n, c, 3);
            let w = RefinementMatrix::random(c, 3);
            let out = loss_and_grads(&logits, &labels, Some(SoftTarget::Refined { w: &w, inputs: &inputs }), &als(0.1, 0.1)).unwrap();
            assert_eq!(out.refinement_ops, 2 * (n * c * c) as u64);
            let plain = loss_and_grads(&logits, &labels, None, &LossConfig::plain()).unwrap();
            assert_eq!(plain.refinement_ops, 0);
        }
    }
}
