//! Robustness margin: the smallest singular value of the stack `S(x)`
//! minimised over unit directions. It is zero exactly where the span test
//! fails, so a clearly positive value is numeric evidence of phase retrieval.
//! It is a heuristic estimate: sampling plus local descent, no bound on what
//! was missed.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ProjectionFamily;
use crate::linalg::numeric::{normalize, FMatrix};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessMargin {
    pub value: f64,
    pub argmin_x: Vec<f64>,
    pub samples: usize,
    pub starts: usize,
    pub seed: u64,
    /// Every evaluated value, only when [`MarginOptions::keep_trace`] is set.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<f64>,
    /// End points of the local descents, best first, as `(value, x)`.
    #[serde(skip)]
    pub minima: Vec<(f64, Vec<f64>)>,
}

#[derive(Clone, Debug)]
pub struct MarginOptions {
    pub samples: usize,
    /// Local minimisations, started from the best samples. `None` means `8n`.
    pub starts: Option<usize>,
    pub seed: u64,
    pub max_iters: usize,
    /// Extra start points, minimised in addition to `starts`.
    pub extra_starts: Vec<Vec<f64>>,
    pub keep_trace: bool,
}

impl Default for MarginOptions {
    fn default() -> Self {
        MarginOptions {
            samples: 1000,
            starts: None,
            seed: 0,
            max_iters: 200,
            extra_starts: Vec::new(),
            keep_trace: false,
        }
    }
}

/// Generator for stream `index` of `seed`; results never depend on how work
/// is split across threads.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        if normalize(&mut v) > 1e-12 {
            return v;
        }
    }
}

pub fn margin(family: &ProjectionFamily, samples: usize, starts: usize, seed: u64) -> RobustnessMargin {
    margin_with(family, &MarginOptions { samples, starts: Some(starts), seed, ..Default::default() })
}

pub fn margin_with(family: &ProjectionFamily, opts: &MarginOptions) -> RobustnessMargin {
    let projectors: Vec<FMatrix> = family.subspaces().iter().map(|w| w.projector_f64().clone()).collect();
    margin_of_projectors(&projectors, family.ambient_dim(), opts)
}

/// `σ_min` of the stack of `P_i x̂`, `x̂ = x/‖x‖`.
pub fn sigma_at(projectors: &[FMatrix], n: usize, x: &[f64]) -> f64 {
    sigma_and_gradient(projectors, n, x).0
}

/// `σ_min` through the smallest eigenpair `(λ, w)` of `Σ_i (P_i x̂)(P_i x̂)ᵀ`,
/// together with `∇λ = 2 Σ_i ⟨P_i x̂, w⟩ P_i w`, which points the same way
/// as the gradient of `σ_min = √λ`.
pub fn sigma_and_gradient(projectors: &[FMatrix], n: usize, x: &[f64]) -> (f64, Vec<f64>) {
    let mut u = x.to_vec();
    normalize(&mut u);
    let images: Vec<Vec<f64>> = projectors.iter().map(|p| p.mul_vec(&u)).collect();
    let mut gram = DMatrix::<f64>::zeros(n, n);
    for v in &images {
        for a in 0..n {
            for b in a..n {
                gram[(a, b)] += v[a] * v[b];
            }
        }
    }
    for a in 0..n {
        for b in 0..a {
            gram[(a, b)] = gram[(b, a)];
        }
    }
    let eig = SymmetricEigen::new(gram);
    let k = eig.eigenvalues.imin();
    let lambda = eig.eigenvalues[k].max(0.0);
    let w: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
    let mut grad = vec![0.0; n];
    for (p, v) in projectors.iter().zip(&images) {
        let c: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
        if c != 0.0 {
            for (g, pw) in grad.iter_mut().zip(p.mul_vec(&w)) {
                *g += 2.0 * c * pw;
            }
        }
    }
    (lambda.sqrt(), grad)
}

#[derive(Clone, Debug)]
struct Best {
    value: f64,
    x: Vec<f64>,
    trace: Vec<f64>,
}

impl Best {
    fn new() -> Self {
        Best { value: f64::INFINITY, x: Vec::new(), trace: Vec::new() }
    }

    fn record(&mut self, value: f64, x: &[f64], keep: bool) {
        if keep {
            self.trace.push(value);
        }
        if value < self.value {
            self.value = value;
            self.x = x.to_vec();
            normalize(&mut self.x);
        }
    }

    fn merge(mut self, other: Best) -> Best {
        self.trace.extend(other.trace);
        if other.value < self.value {
            self.value = other.value;
            self.x = other.x;
        }
        self
    }
}

/// Margin over explicit numeric projectors (used directly by the search).
pub fn margin_of_projectors(projectors: &[FMatrix], n: usize, opts: &MarginOptions) -> RobustnessMargin {
    let starts = opts.starts.unwrap_or(8 * n);
    let keep = opts.keep_trace;
    let f = |x: &[f64]| sigma_and_gradient(projectors, n, x);

    let sampled: Vec<(f64, Vec<f64>)> = (0..opts.samples)
        .into_par_iter()
        .map(|k| {
            let x = random_unit(&mut stream_rng(opts.seed, k as u64), n);
            (sigma_at(projectors, n, &x), x)
        })
        .collect();

    let mut best = Best::new();
    for (v, x) in &sampled {
        best.record(*v, x, keep);
    }

    let mut order: Vec<usize> = (0..sampled.len()).collect();
    order.sort_by(|&a, &b| sampled[a].0.total_cmp(&sampled[b].0).then(a.cmp(&b)));
    let mut seeds: Vec<Vec<f64>> = order.iter().take(starts).map(|&k| sampled[k].1.clone()).collect();
    let mut extra = opts.samples as u64;
    while seeds.len() < starts {
        seeds.push(random_unit(&mut stream_rng(opts.seed, extra), n));
        extra += 1;
    }
    seeds.extend(opts.extra_starts.iter().cloned());

    let runs: Vec<Best> = seeds.par_iter().map(|x0| descend(&f, x0, opts.max_iters, keep)).collect();
    let mut minima: Vec<(f64, Vec<f64>)> =
        runs.iter().filter(|b| !b.x.is_empty()).map(|b| (b.value, b.x.clone())).collect();
    minima.sort_by(|a, b| a.0.total_cmp(&b.0));
    let best = best.merge(runs.into_iter().fold(Best::new(), Best::merge));

    RobustnessMargin {
        value: best.value,
        argmin_x: best.x,
        samples: opts.samples,
        starts,
        seed: opts.seed,
        trace: best.trace,
        minima,
    }
}

/// Gradient descent on the unit sphere with step doubling and halving.
fn descend(f: &impl Fn(&[f64]) -> (f64, Vec<f64>), x0: &[f64], max_iters: usize, keep: bool) -> Best {
    let mut best = Best::new();
    let mut x = x0.to_vec();
    if normalize(&mut x) == 0.0 {
        return best;
    }
    let (mut fx, mut g) = f(&x);
    best.record(fx, &x, keep);
    let mut step = 0.1;
    for _ in 0..max_iters {
        let radial: f64 = g.iter().zip(&x).map(|(a, b)| a * b).sum();
        g.iter_mut().zip(&x).for_each(|(gi, xi)| *gi -= radial * xi);
        let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if gnorm < 1e-14 {
            break;
        }
        let mut moved = false;
        while step > 1e-12 {
            let mut cand: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - step * b / gnorm).collect();
            normalize(&mut cand);
            let (fc, gc) = f(&cand);
            best.record(fc, &cand, keep);
            if fc < fx {
                x = cand;
                fx = fc;
                g = gc;
                moved = true;
                step *= 2.0;
                break;
            }
            step /= 2.0;
        }
        if !moved {
            break;
        }
    }
    best
}
