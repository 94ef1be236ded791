use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::TabularDataset;

const GRAD_TOL: f64 = 1e-6;
const MAX_ITER: usize = 100;

/// Linear classifier over the classes present at fit time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LogisticModel {
    /// Fewer than two classes in the training data.
    Constant { class: usize },
    /// `P(classes[1] | x) = sigmoid(w . x + b)`.
    Binary { classes: [usize; 2], weights: Vec<f64>, intercept: f64 },
    /// Softmax over `classes`; the last class has intercept zero.
    Multinomial { classes: Vec<usize>, weights: Vec<Vec<f64>>, intercepts: Vec<f64> },
}

impl LogisticModel {
    pub fn predict(&self, x: &[f64]) -> usize {
        match self {
            Self::Constant { class } => *class,
            Self::Binary { classes, weights, intercept } => {
                if dot(weights, x) + intercept > 0.0 {
                    classes[1]
                } else {
                    classes[0]
                }
            }
            Self::Multinomial { classes, weights, intercepts } => {
                let mut best = 0;
                let mut best_score = f64::NEG_INFINITY;
                for (k, (w, b)) in weights.iter().zip(intercepts).enumerate() {
                    let s = dot(w, x) + b;
                    if s > best_score {
                        best = k;
                        best_score = s;
                    }
                }
                classes[best]
            }
        }
    }

    pub fn accuracy(&self, ds: &TabularDataset) -> f64 {
        if ds.n_rows() == 0 {
            return 0.0;
        }
        let correct = (0..ds.n_rows()).filter(|&i| self.predict(ds.row(i)) == ds.labels()[i]).count();
        correct as f64 / ds.n_rows() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticFit {
    pub model: LogisticModel,
    pub iterations: usize,
    pub gradient_norm: f64,
    /// Penalized negative log-likelihood after each accepted step, starting
    /// from the zero model.
    pub objective_trace: Vec<f64>,
}

impl LogisticFit {
    pub fn objective(&self) -> f64 {
        self.objective_trace.last().copied().unwrap_or(0.0)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `log(1 + exp(z))` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Objective, gradient and Hessian of a smooth problem in a flat parameter
/// vector.
trait Problem {
    fn dim(&self) -> usize;
    fn value(&self, p: &DVector<f64>) -> f64;
    fn grad_hess(&self, p: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>);
}

/// Binary problem with parameters `[w_1..w_d, b]`; labels are 0/1.
struct BinaryProblem<'a> {
    x: &'a TabularDataset,
    y: Vec<f64>,
}

impl Problem for BinaryProblem<'_> {
    fn dim(&self) -> usize {
        self.x.n_features() + 1
    }

    fn value(&self, p: &DVector<f64>) -> f64 {
        let d = self.x.n_features();
        let w = &p.as_slice()[..d];
        let mut f = 0.5 * w.iter().map(|v| v * v).sum::<f64>();
        for (i, &y) in self.y.iter().enumerate() {
            let z = dot(w, self.x.row(i)) + p[d];
            f += softplus(z) - y * z;
        }
        f
    }

    fn grad_hess(&self, p: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let d = self.x.n_features();
        let w = &p.as_slice()[..d];
        let mut g = DVector::zeros(d + 1);
        let mut h = DMatrix::zeros(d + 1, d + 1);
        let mut row = vec![0.0; d + 1];
        for (i, &y) in self.y.iter().enumerate() {
            row[..d].copy_from_slice(self.x.row(i));
            row[d] = 1.0;
            let mu = sigmoid(dot(w, self.x.row(i)) + p[d]);
            let s = mu * (1.0 - mu);
            for a in 0..=d {
                g[a] += (mu - y) * row[a];
                for b in 0..=a {
                    h[(a, b)] += s * row[a] * row[b];
                }
            }
        }
        for a in 0..d {
            g[a] += w[a];
            h[(a, a)] += 1.0;
        }
        symmetrize(&mut h);
        (g, h)
    }
}

/// Softmax problem over `c` classes. Parameters are the `c * d` weights
/// (class-major) followed by `c - 1` intercepts.
struct SoftmaxProblem<'a> {
    x: &'a TabularDataset,
    y: Vec<usize>,
    c: usize,
}

impl SoftmaxProblem<'_> {
    fn scores(&self, p: &DVector<f64>, x: &[f64], out: &mut [f64]) {
        let d = self.x.n_features();
        for k in 0..self.c {
            let b = if k + 1 < self.c { p[self.c * d + k] } else { 0.0 };
            out[k] = dot(&p.as_slice()[k * d..(k + 1) * d], x) + b;
        }
    }
}

impl Problem for SoftmaxProblem<'_> {
    fn dim(&self) -> usize {
        self.c * self.x.n_features() + self.c - 1
    }

    fn value(&self, p: &DVector<f64>) -> f64 {
        let d = self.x.n_features();
        let mut f = 0.5 * p.as_slice()[..self.c * d].iter().map(|v| v * v).sum::<f64>();
        let mut s = vec![0.0; self.c];
        for (i, &y) in self.y.iter().enumerate() {
            self.scores(p, self.x.row(i), &mut s);
            let top = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = top + s.iter().map(|v| (v - top).exp()).sum::<f64>().ln();
            f += lse - s[y];
        }
        f
    }

    fn grad_hess(&self, p: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let d = self.x.n_features();
        let c = self.c;
        let dim = self.dim();
        // parameter index of feature a (d = intercept) for class k
        let idx = |k: usize, a: usize| -> Option<usize> {
            if a < d {
                Some(k * d + a)
            } else if k + 1 < c {
                Some(c * d + k)
            } else {
                None
            }
        };
        let mut g = DVector::zeros(dim);
        let mut h = DMatrix::zeros(dim, dim);
        let mut s = vec![0.0; c];
        let mut row = vec![0.0; d + 1];
        for (i, &y) in self.y.iter().enumerate() {
            row[..d].copy_from_slice(self.x.row(i));
            row[d] = 1.0;
            self.scores(p, self.x.row(i), &mut s);
            let top = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = s.iter().map(|v| (v - top).exp()).sum();
            let pr: Vec<f64> = s.iter().map(|v| (v - top).exp() / z).collect();
            for k in 0..c {
                let r = pr[k] - f64::from(u8::from(k == y));
                for a in 0..=d {
                    let Some(u) = idx(k, a) else { continue };
                    g[u] += r * row[a];
                    for l in 0..c {
                        let cov = pr[k] * (f64::from(u8::from(k == l)) - pr[l]);
                        for b in 0..=d {
                            let Some(v) = idx(l, b) else { continue };
                            if v <= u {
                                h[(u, v)] += cov * row[a] * row[b];
                            }
                        }
                    }
                }
            }
        }
        for u in 0..c * d {
            g[u] += p[u];
            h[(u, u)] += 1.0;
        }
        symmetrize(&mut h);
        (g, h)
    }
}

fn symmetrize(h: &mut DMatrix<f64>) {
    let n = h.nrows();
    for a in 0..n {
        for b in 0..a {
            h[(b, a)] = h[(a, b)];
        }
    }
}

struct NewtonResult {
    params: DVector<f64>,
    iterations: usize,
    gradient_norm: f64,
    trace: Vec<f64>,
}

/// Damped Newton iterations with Armijo backtracking.
fn newton(problem: &dyn Problem) -> NewtonResult {
    let mut p = DVector::zeros(problem.dim());
    let mut f = problem.value(&p);
    let mut trace = vec![f];
    let mut iterations = 0;
    let mut gradient_norm;
    loop {
        let (g, h) = problem.grad_hess(&p);
        gradient_norm = g.norm();
        if gradient_norm < GRAD_TOL || iterations >= MAX_ITER {
            break;
        }
        let Some(chol) = h.cholesky() else {
            log::warn!("logistic Hessian not positive definite; stopping early");
            break;
        };
        let step = chol.solve(&g);
        let slope = g.dot(&step);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let cand = &p - &step * t;
            let fc = problem.value(&cand);
            if fc <= f - 1e-4 * t * slope {
                accepted = Some((cand, fc));
                break;
            }
            t *= 0.5;
        }
        iterations += 1;
        match accepted {
            Some((cand, fc)) if fc < f => {
                p = cand;
                f = fc;
                trace.push(f);
            }
            // no further decrease is representable
            _ => {
                gradient_norm = problem.grad_hess(&p).0.norm();
                break;
            }
        }
    }
    NewtonResult {
        params: p,
        iterations,
        gradient_norm,
        trace,
    }
}

/// L2-penalized (strength 1, intercepts unpenalized) logistic regression fit
/// by Newton's method to gradient norm `1e-6` or 100 iterations. Two classes
/// use a single sigmoid; more use softmax. Classes absent from `train` are
/// never predicted.
pub fn logistic_fit(train: &TabularDataset) -> LogisticFit {
    let freq = train.class_frequencies();
    let present: Vec<usize> = (0..freq.len()).filter(|&c| freq[c] > 0).collect();
    if present.len() < 2 {
        return LogisticFit {
            model: LogisticModel::Constant {
                class: present.first().copied().unwrap_or(0),
            },
            iterations: 0,
            gradient_norm: 0.0,
            objective_trace: Vec::new(),
        };
    }
    let d = train.n_features();
    if present.len() == 2 {
        let y = train.labels().iter().map(|&l| f64::from(u8::from(l == present[1]))).collect();
        let r = newton(&BinaryProblem { x: train, y });
        return LogisticFit {
            model: LogisticModel::Binary {
                classes: [present[0], present[1]],
                weights: r.params.as_slice()[..d].to_vec(),
                intercept: r.params[d],
            },
            iterations: r.iterations,
            gradient_norm: r.gradient_norm,
            objective_trace: r.trace,
        };
    }
    let mut position = vec![0; freq.len()];
    for (k, &c) in present.iter().enumerate() {
        position[c] = k;
    }
    let c = present.len();
    let y = train.labels().iter().map(|&l| position[l]).collect();
    let r = newton(&SoftmaxProblem { x: train, y, c });
    let ps = r.params.as_slice();
    LogisticFit {
        model: LogisticModel::Multinomial {
            classes: present,
            weights: (0..c).map(|k| ps[k * d..(k + 1) * d].to_vec()).collect(),
            intercepts: (0..c).map(|k| if k + 1 < c { ps[c * d + k] } else { 0.0 }).collect(),
        },
        iterations: r.iterations,
        gradient_norm: r.gradient_norm,
        objective_trace: r.trace,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_pair() {
        let ds = TabularDataset::new(vec![-1.0, 1.0], 1, vec![0, 1], 2).unwrap();
        let fit = logistic_fit(&ds);
        assert_eq!(fit.model.accuracy(&ds), 1.0);
        assert!(fit.gradient_norm < 1e-6);
    }

    #[test]
    fn single_class_is_constant() {
        let train = TabularDataset::new(vec![0.0, 1.0, 2.0], 1, vec![2, 2, 2], 3).unwrap();
        let test = TabularDataset::new(vec![0.0, 1.0, 2.0, 3.0], 1, vec![2, 0, 2, 1], 3).unwrap();
        let fit = logistic_fit(&train);
        assert_eq!(fit.model, LogisticModel::Constant { class: 2 });
        assert_eq!(fit.model.accuracy(&test), 0.5);
    }

    #[test]
    fn objective_strictly_decreases() {
        let xs: Vec<f64> = (0..40).map(|i| ((i * 37) % 11) as f64 / 5.0 - 1.0).collect();
        let ys: Vec<usize> = (0..20).map(|i| usize::from(xs[2 * i] + 0.3 * xs[2 * i + 1] > 0.1) ^ usize::from(i % 7 == 0)).collect();
        let ds = TabularDataset::new(xs, 2, ys, 2).unwrap();
        let fit = logistic_fit(&ds);
        assert!(fit.objective_trace.windows(2).all(|w| w[1] < w[0]));
        assert!(fit.gradient_norm < 1e-6);
    }

    #[test]
    fn three_classes_on_a_line() {
        let xs: Vec<f64> = (0..30).map(|i| f64::from(i) / 3.0).collect();
        let ys: Vec<usize> = (0..30).map(|i| i / 10).collect();
        let ds = TabularDataset::new(xs, 1, ys, 3).unwrap();
        let fit = logistic_fit(&ds);
        assert!(fit.gradient_norm < 1e-6, "{}", fit.gradient_norm);
        assert!(fit.model.accuracy(&ds) >= 0.9);
    }

    #[test]
    fn absent_class_is_never_predicted() {
        let ds = TabularDataset::new(vec![0.0, 0.2, 2.0, 2.2], 1, vec![0, 0, 2, 2], 3).unwrap();
        let fit = logistic_fit(&ds);
        for x in [-5.0, 1.0, 5.0] {
            assert_ne!(fit.model.predict(&[x]), 1);
        }
    }
}
