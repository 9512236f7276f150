//! Maximum-likelihood training with an L2 penalty.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use log::debug;
use rayon::prelude::*;

use super::inference::marginals_with_log_z;
use super::{emission_scores, CrfModel, FeatureAlphabet, LabelAlphabet};
use crate::features::SparseFeatureVector;
use crate::{Error, Result};

// Fixed so that the summation order, and therefore the result, never depends on the
// number of worker threads.
const GRADIENT_CHUNKS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Optimizer {
    Lbfgs,
    GradientDescent,
}

impl fmt::Display for Optimizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Optimizer::Lbfgs => "lbfgs",
            Optimizer::GradientDescent => "gradient_descent",
        })
    }
}

impl FromStr for Optimizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lbfgs" => Ok(Optimizer::Lbfgs),
            "gradient_descent" | "gd" => Ok(Optimizer::GradientDescent),
            _ => Err(Error::Config(format!("unknown optimizer `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Penalty is Σw² / (2σ²).
    pub l2_sigma: f64,
    pub max_iterations: usize,
    /// Stop once the relative objective change of an iteration falls below this.
    pub convergence_tol: f64,
    pub optimizer: Optimizer,
    /// Fixed step for gradient descent.
    pub learning_rate: f64,
    pub lbfgs_history: usize,
    /// Features seen at fewer positions than this are left out of the model.
    pub min_feature_count: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            l2_sigma: 1.0,
            max_iterations: 200,
            convergence_tol: 1e-6,
            optimizer: Optimizer::Lbfgs,
            learning_rate: 0.01,
            lbfgs_history: 10,
            min_feature_count: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.l2_sigma)
            || !positive(self.convergence_tol)
            || !positive(self.learning_rate)
        {
            return Err(Error::Config(
                "l2_sigma, convergence_tol and learning_rate must be positive".into(),
            ));
        }
        if self.lbfgs_history == 0 {
            return Err(Error::Config("lbfgs_history must be >= 1".into()));
        }
        Ok(())
    }

    pub(crate) fn echo(&self) -> Vec<(&'static str, String)> {
        vec![
            ("l2_sigma", self.l2_sigma.to_string()),
            ("max_iterations", self.max_iterations.to_string()),
            ("convergence_tol", self.convergence_tol.to_string()),
            ("optimizer", self.optimizer.to_string()),
            ("learning_rate", self.learning_rate.to_string()),
            ("lbfgs_history", self.lbfgs_history.to_string()),
            ("min_feature_count", self.min_feature_count.to_string()),
        ]
    }
}

/// A sentence with features and gold labels resolved to indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub features: Vec<Vec<(usize, f64)>>,
    pub labels: Vec<usize>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Accumulates one sentence's log-likelihood and its gradient into `grad`.
fn accumulate(inst: &Instance, weights: &[f64], n_labels: usize, grad: &mut [f64]) -> f64 {
    let t_len = inst.labels.len();
    if t_len == 0 {
        return 0.0;
    }
    let l = n_labels;
    let trans_off = weights.len() - l * l;
    let em = emission_scores(weights, l, &inst.features);
    let tr = ndarray::ArrayView2::from_shape((l, l), &weights[trans_off..]).expect("L×L block");
    let tr = tr.to_owned();
    let (node, edge, log_z) = marginals_with_log_z(&em, &tr);

    let mut gold = 0.0;
    for (t, &y) in inst.labels.iter().enumerate() {
        gold += em[[t, y]];
        if t > 0 {
            gold += tr[[inst.labels[t - 1], y]];
        }
    }
    for (t, feats) in inst.features.iter().enumerate() {
        let y_gold = inst.labels[t];
        for &(f, v) in feats {
            let base = f * l;
            grad[base + y_gold] += v;
            for y in 0..l {
                grad[base + y] -= v * node[[t, y]];
            }
        }
    }
    for t in 1..t_len {
        grad[trans_off + inst.labels[t - 1] * l + inst.labels[t]] += 1.0;
        for p in 0..l {
            for y in 0..l {
                grad[trans_off + p * l + y] -= edge[[t - 1, p, y]];
            }
        }
    }
    gold - log_z
}

/// Penalized conditional log-likelihood and its gradient (to be maximized).
///
/// `weights` holds `n_features · n_labels` emission weights followed by `n_labels²`
/// transition weights. `l2_sigma = None` disables the penalty.
pub fn log_likelihood_and_gradient(
    data: &[Instance],
    weights: &[f64],
    n_labels: usize,
    l2_sigma: Option<f64>,
) -> (f64, Vec<f64>) {
    let chunk = data.len().div_ceil(GRADIENT_CHUNKS).max(1);
    let partials: Vec<(f64, Vec<f64>)> = data
        .par_chunks(chunk)
        .map(|part| {
            let mut grad = vec![0.0; weights.len()];
            let ll = part
                .iter()
                .map(|inst| accumulate(inst, weights, n_labels, &mut grad))
                .sum::<f64>();
            (ll, grad)
        })
        .collect();

    let mut objective = 0.0;
    let mut grad = vec![0.0; weights.len()];
    for (ll, g) in partials {
        objective += ll;
        for (a, b) in grad.iter_mut().zip(&g) {
            *a += b;
        }
    }
    if let Some(sigma) = l2_sigma {
        let inv = 1.0 / (sigma * sigma);
        objective -= 0.5 * inv * dot(weights, weights);
        for (g, w) in grad.iter_mut().zip(weights) {
            *g -= inv * w;
        }
    }
    (objective, grad)
}

impl CrfModel {
    /// Resolves a labelled sentence against this model's alphabets. Unknown features are
    /// skipped; unknown labels are an error.
    pub fn instance<S: AsRef<str>>(
        &self,
        sentence: &[SparseFeatureVector],
        labels: &[S],
    ) -> Result<Instance> {
        if sentence.len() != labels.len() {
            return Err(Error::LengthMismatch {
                left: sentence.len(),
                right: labels.len(),
            });
        }
        let labels = labels
            .iter()
            .map(|l| {
                self.labels
                    .get(l.as_ref())
                    .ok_or_else(|| Error::UnknownGoldLabel(l.as_ref().to_string()))
            })
            .collect::<Result<_>>()?;
        Ok(Instance {
            features: self.compile(sentence),
            labels,
        })
    }

    /// Objective and gradient of this model's current weights on `data`.
    pub fn log_likelihood_and_gradient<S: AsRef<str>>(
        &self,
        data: &[(Vec<SparseFeatureVector>, Vec<S>)],
        l2_sigma: Option<f64>,
    ) -> Result<(f64, Vec<f64>)> {
        let instances = data
            .iter()
            .map(|(x, y)| self.instance(x, y))
            .collect::<Result<Vec<_>>>()?;
        Ok(log_likelihood_and_gradient(
            &instances,
            &self.weights,
            self.labels.len(),
            l2_sigma,
        ))
    }
}

/// Trains a model; see [`train_traced`].
pub fn train<S: AsRef<str>>(
    data: &[(Vec<SparseFeatureVector>, Vec<S>)],
    template_fingerprint: &str,
    config: &TrainConfig,
) -> Result<CrfModel> {
    train_traced(data, template_fingerprint, config).map(|(m, _)| m)
}

/// Builds alphabets from `data`, optimizes, and returns the model together with the objective
/// after each iteration (the first entry is the objective at zero weights).
pub fn train_traced<S: AsRef<str>>(
    data: &[(Vec<SparseFeatureVector>, Vec<S>)],
    template_fingerprint: &str,
    config: &TrainConfig,
) -> Result<(CrfModel, Vec<f64>)> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::NoData);
    }
    let mut labels = LabelAlphabet::new();
    let mut seen: HashMap<&str, usize> = HashMap::new();
    let mut order: Vec<&str> = Vec::new();
    for (x, y) in data {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: y.len(),
            });
        }
        for l in y {
            labels.intern(l.as_ref());
        }
        for fv in x {
            for (name, _) in fv.iter() {
                let c = seen.entry(name).or_insert_with(|| {
                    order.push(name);
                    0
                });
                *c += 1;
            }
        }
    }
    let features: FeatureAlphabet = order
        .into_iter()
        .filter(|n| seen[n] >= config.min_feature_count)
        .collect();

    let mut model = CrfModel::zeros(labels, features, template_fingerprint);
    let instances = data
        .iter()
        .map(|(x, y)| model.instance(x, y))
        .collect::<Result<Vec<_>>>()?;
    let n_labels = model.labels.len();
    let sigma = Some(config.l2_sigma);
    let objective = |w: &[f64]| log_likelihood_and_gradient(&instances, w, n_labels, sigma);

    let x0 = vec![0.0; model.weights.len()];
    let (weights, trace) = match config.optimizer {
        Optimizer::Lbfgs => maximize_lbfgs(objective, x0, config)?,
        Optimizer::GradientDescent => maximize_gradient_descent(objective, x0, config)?,
    };
    model.weights = weights;

    for (k, v) in config.echo() {
        model.metadata.insert(format!("train.{k}"), v);
    }
    model
        .metadata
        .insert("train.iterations".into(), (trace.len() - 1).to_string());
    model.metadata.insert(
        "train.final_objective".into(),
        trace
            .last()
            .expect("trace has the initial value")
            .to_string(),
    );
    model
        .metadata
        .insert("train.sentences".into(), data.len().to_string());
    Ok((model, trace))
}

fn relative_change(old: f64, new: f64) -> f64 {
    (new - old).abs() / old.abs().max(new.abs()).max(1.0)
}

fn maximize_gradient_descent<F>(
    f: F,
    mut x: Vec<f64>,
    config: &TrainConfig,
) -> Result<(Vec<f64>, Vec<f64>)>
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let (mut fx, mut g) = f(&x);
    if !fx.is_finite() {
        return Err(Error::NonFiniteObjective);
    }
    let mut trace = vec![fx];
    for it in 0..config.max_iterations {
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi += config.learning_rate * gi;
        }
        let (fn_, gn) = f(&x);
        if !fn_.is_finite() {
            return Err(Error::NonFiniteObjective);
        }
        trace.push(fn_);
        debug!("gd iteration {}: objective {fn_}", it + 1);
        let done = relative_change(fx, fn_) < config.convergence_tol;
        fx = fn_;
        g = gn;
        if done {
            break;
        }
    }
    Ok((x, trace))
}

/// L-BFGS with a backtracking (Armijo) line search, applied to the negated objective.
fn maximize_lbfgs<F>(f: F, mut x: Vec<f64>, config: &TrainConfig) -> Result<(Vec<f64>, Vec<f64>)>
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let neg = |w: &[f64]| {
        let (v, g) = f(w);
        (-v, g.into_iter().map(|x| -x).collect::<Vec<_>>())
    };
    let (mut fx, mut g) = neg(&x);
    if !fx.is_finite() {
        return Err(Error::NonFiniteObjective);
    }
    let mut trace = vec![-fx];
    // (s, y, 1 / yᵀs)
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();

    for it in 0..config.max_iterations {
        let g_norm = dot(&g, &g).sqrt();
        if g_norm < 1e-12 {
            break;
        }

        // two-loop recursion: r ≈ H⁻¹ g
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let a = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= a * yi;
            }
            alphas.push(a);
        }
        let gamma = match history.back() {
            Some((s, y, _)) => dot(s, y) / dot(y, y),
            None => 1.0 / g_norm,
        };
        for qi in &mut q {
            *qi *= gamma;
        }
        for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += si * (a - b);
            }
        }
        let mut dir: Vec<f64> = q.into_iter().map(|v| -v).collect();
        let mut slope = dot(&g, &dir);
        if slope >= 0.0 {
            history.clear();
            dir = g.iter().map(|v| -v / g_norm).collect();
            slope = dot(&g, &dir);
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let xn: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + step * d).collect();
            let (fn_, gn) = neg(&xn);
            if fn_.is_finite() && fn_ <= fx + 1e-4 * step * slope {
                accepted = Some((xn, fn_, gn));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else {
            debug!("lbfgs line search made no progress at iteration {}", it + 1);
            break;
        };

        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-10 {
            history.push_back((s, y, 1.0 / sy));
            if history.len() > config.lbfgs_history {
                history.pop_front();
            }
        }
        let change = relative_change(fx, fn_);
        x = xn;
        fx = fn_;
        g = gn;
        trace.push(-fx);
        debug!("lbfgs iteration {}: objective {}", it + 1, -fx);
        if change < config.convergence_tol {
            break;
        }
    }
    Ok((x, trace))
}
