//! Generators, augmentation of subspaces by one dimension, lifts to target
//! dimensions, and a stochastic search for families with a large margin.

use num_bigint::BigInt;
use num_traits::Zero;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::numeric::{orthonormal_rows, projector_from_orthonormal, FMatrix};
use crate::linalg::{RMatrix, Rational};
use crate::projection::{
    decide, hyperplane_falsify, margin_of_projectors, margin_with, stream_rng, DecideOptions, Decision, MarginOptions,
    ProjectionFamily, RobustnessMargin, SpanDeficiencyWitness, Subspace, Tier, Verdict,
};

/// Random entries are rounded to multiples of `1 / RATIONAL_SCALE`.
pub const RATIONAL_SCALE: i64 = 1_000_000;

/// Ambient dimension and subspace dimensions `0 < r_i < n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimProfile {
    ambient: usize,
    dims: Vec<usize>,
}

impl DimProfile {
    pub fn new(ambient: usize, dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidProfile("no subspaces".into()));
        }
        if let Some((i, r)) = dims.iter().enumerate().find(|(_, &r)| r == 0 || r >= ambient) {
            return Err(Error::InvalidProfile(format!(
                "dimension {r} of subspace {} is outside 1..{ambient} (ambient {ambient})",
                i + 1
            )));
        }
        Ok(DimProfile { ambient, dims })
    }

    pub fn uniform(ambient: usize, m: usize, r: usize) -> Result<Self> {
        Self::new(ambient, vec![r; m])
    }

    pub fn hyperplanes(ambient: usize, m: usize) -> Result<Self> {
        Self::uniform(ambient, m, ambient.saturating_sub(1))
    }

    pub fn of(family: &ProjectionFamily) -> Self {
        DimProfile { ambient: family.ambient_dim(), dims: family.dims() }
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn is_all_hyperplanes(&self) -> bool {
        self.dims.iter().all(|&r| r + 1 == self.ambient)
    }
}

fn gaussian_rows(rng: &mut ChaCha8Rng, r: usize, n: usize) -> Vec<Vec<f64>> {
    (0..r).map(|_| (0..n).map(|_| StandardNormal.sample(rng)).collect()).collect()
}

/// Exact rational nearest to `v` on the `1 / RATIONAL_SCALE` grid.
pub fn rationalize(v: f64) -> Rational {
    Rational::new(BigInt::from((v * RATIONAL_SCALE as f64).round() as i64), BigInt::from(RATIONAL_SCALE))
}

fn exact_subspace(rows: &[Vec<f64>], n: usize) -> Result<Subspace> {
    let exact = rows.iter().map(|r| r.iter().map(|&v| rationalize(v)).collect()).collect();
    Subspace::new(RMatrix::from_rows(n, exact)?)
}

/// Subspace `i` is spanned by Gaussian rows drawn from stream `i` of `seed`,
/// rationalized, and redrawn until independent.
pub fn random_family(profile: &DimProfile, seed: u64) -> ProjectionFamily {
    let n = profile.ambient;
    let subspaces = profile
        .dims
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let mut rng = stream_rng(seed, i as u64);
            loop {
                if let Ok(w) = exact_subspace(&gaussian_rows(&mut rng, r, n), n) {
                    return w;
                }
            }
        })
        .collect();
    ProjectionFamily::new(n, subspaces).expect("profile dimensions are valid")
}

#[derive(Clone, Debug)]
pub struct AugmentOptions {
    pub max_attempts: usize,
    /// Options of the sample-tier verification after each attempt.
    pub decide: DecideOptions,
}

impl Default for AugmentOptions {
    fn default() -> Self {
        AugmentOptions { max_attempts: 8, decide: DecideOptions::default() }
    }
}

#[derive(Clone, Debug)]
pub struct Augmentation {
    pub family: ProjectionFamily,
    pub index: usize,
    /// Attempts used, 1 when the first random direction worked.
    pub attempts: usize,
    pub decision: Decision,
}

/// Replaces `W_index` by `W_index + span{z}` for a random `z ∈ W_index⊥`,
/// retrying until the sample tier accepts the new family.
pub fn augment<R: Rng + ?Sized>(
    family: &ProjectionFamily,
    index: usize,
    rng: &mut R,
    opts: &AugmentOptions,
) -> Result<Augmentation> {
    check_index(family, index)?;
    check_room(family, index)?;
    let before = decide(family, Tier::Sample, &opts.decide)?;
    if before.verdict == Verdict::Fails {
        return Err(Error::InputFails);
    }
    augment_unchecked(family, index, rng, opts)
}

fn check_index(family: &ProjectionFamily, index: usize) -> Result<()> {
    if index >= family.len() {
        return Err(Error::Precondition(format!("subspace index {} out of range 1..={}", index + 1, family.len())));
    }
    Ok(())
}

fn check_room(family: &ProjectionFamily, index: usize) -> Result<()> {
    let codim = family.ambient_dim() - family.subspaces()[index].dim();
    if codim < 2 {
        return Err(Error::NoRoom { index, codim });
    }
    Ok(())
}

fn augment_unchecked<R: Rng + ?Sized>(
    family: &ProjectionFamily,
    index: usize,
    rng: &mut R,
    opts: &AugmentOptions,
) -> Result<Augmentation> {
    let w = &family.subspaces()[index];
    let perp = w.complement_basis();
    if perp.rows() < 2 {
        return Err(Error::NoRoom { index, codim: perp.rows() });
    }
    let n = family.ambient_dim();
    let k = perp.rows();
    let b = nalgebra::DMatrix::from_row_iterator(k, n, perp.to_f64_rows().into_iter().flatten());
    let q = orthonormal_rows(&perp.to_f64_rows());
    let gram = (&b * b.transpose()).lu();
    for attempt in 1..=opts.max_attempts {
        // Uniform direction in W⊥, written in the exact complement basis
        // with rationalized coefficients so that z stays exactly in W⊥.
        let z = loop {
            let g: Vec<f64> = (0..q.len()).map(|_| StandardNormal.sample(rng)).collect();
            let zf = nalgebra::DVector::from_fn(n, |j, _| q.iter().zip(&g).map(|(row, gr)| row[j] * gr).sum());
            let Some(c) = gram.solve(&(&b * zf)) else { continue };
            let c: Vec<Rational> = c.iter().map(|&v| rationalize(v)).collect();
            if c.iter().all(|v| v.is_zero()) {
                continue;
            }
            let mut z = vec![Rational::from_integer(0.into()); n];
            for (row, ck) in perp.row_iter().zip(&c) {
                for (zj, pj) in z.iter_mut().zip(row) {
                    *zj += pj * ck;
                }
            }
            break z;
        };
        let candidate = family.with_subspace(index, w.extended_by(&z)?)?;
        let decision = decide(&candidate, Tier::Sample, &opts.decide)?;
        if decision.verdict.passes() {
            return Ok(Augmentation { family: candidate, index, attempts: attempt, decision });
        }
    }
    Err(Error::AugmentationFailed { index, attempts: opts.max_attempts })
}

#[derive(Clone, Debug)]
pub struct LiftStep {
    pub index: usize,
    pub new_dim: usize,
    pub attempts: usize,
    pub margin: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct Lift {
    pub family: ProjectionFamily,
    pub steps: Vec<LiftStep>,
}

impl Lift {
    pub fn first_attempt_everywhere(&self) -> bool {
        self.steps.iter().all(|s| s.attempts == 1)
    }
}

/// Augments subspaces in index order until every `W_i` has dimension
/// `target.dims()[i]`. Every intermediate family is verified by the sample
/// tier, and the result is checked to contain the original subspaces.
pub fn lift_to_dims<R: Rng + ?Sized>(
    family: &ProjectionFamily,
    target: &DimProfile,
    rng: &mut R,
    opts: &AugmentOptions,
) -> Result<Lift> {
    if target.ambient != family.ambient_dim() || target.len() != family.len() {
        return Err(Error::Precondition(format!(
            "target profile has {} subspaces in R^{}, family has {} in R^{}",
            target.len(),
            target.ambient,
            family.len(),
            family.ambient_dim()
        )));
    }
    let dims = family.dims();
    if let Some(i) = (0..dims.len()).find(|&i| target.dims[i] < dims[i]) {
        return Err(Error::Precondition(format!(
            "target dimension {} of subspace {} is below its current dimension {}",
            target.dims[i],
            i + 1,
            dims[i]
        )));
    }
    let initial = decide(family, Tier::Sample, &opts.decide)?;
    match initial.verdict {
        Verdict::Fails => return Err(Error::InputFails),
        Verdict::Unknown => {
            return Err(Error::Precondition("input family is not accepted by the sample tier".into()));
        }
        _ => {}
    }

    let mut current = family.clone();
    let mut steps = Vec::new();
    for (i, &want) in target.dims.iter().enumerate() {
        while current.subspaces()[i].dim() < want {
            let aug = augment_unchecked(&current, i, rng, opts)?;
            steps.push(LiftStep {
                index: i,
                new_dim: aug.family.subspaces()[i].dim(),
                attempts: aug.attempts,
                margin: aug.decision.margin.as_ref().map(|m| m.value),
            });
            current = aug.family;
        }
    }
    let nested = family.subspaces().iter().zip(current.subspaces()).all(|(w, w2)| w2.contains(w));
    if !nested {
        return Err(Error::Precondition("lifted family does not contain the input subspaces".into()));
    }
    Ok(Lift { family: current, steps })
}

#[derive(Clone, Debug)]
pub struct SearchOptions {
    pub iterations: usize,
    pub seed: u64,
    /// Independent chains, run in parallel; the best one is returned.
    pub chains: usize,
    /// Sphere samples and local starts of the in-loop objective.
    pub eval_samples: usize,
    pub eval_starts: usize,
    pub eval_iters: usize,
    /// Local minima of the current family reused as starts.
    pub tracked_minima: usize,
    /// Options of the final margin on the returned family.
    pub final_margin: MarginOptions,
    /// Iterations without improvement before a restart.
    pub stagnation: usize,
    pub initial_noise: f64,
    /// Stop as soon as the final margin of the current best exceeds this.
    pub stop_at: Option<f64>,
    /// Trajectory points are recorded every this many iterations.
    pub record_every: usize,
    /// Floor used to call a search successful.
    pub margin_floor: f64,
    /// Resume from this family instead of a random start (chain 0 only).
    pub start: Option<ProjectionFamily>,
    pub start_iteration: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            iterations: 10_000,
            seed: 0,
            chains: 1,
            eval_samples: 256,
            eval_starts: 2,
            eval_iters: 30,
            tracked_minima: 12,
            final_margin: MarginOptions::default(),
            stagnation: 400,
            initial_noise: 0.3,
            stop_at: None,
            record_every: 100,
            margin_floor: 1e-4,
            start: None,
            start_iteration: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SearchState {
    pub family: ProjectionFamily,
    pub margin: RobustnessMargin,
    /// Iteration at which this family was found.
    pub iteration: usize,
    /// Iterations run by the chain that found it.
    pub iterations_run: usize,
    pub seed: u64,
    pub chain: usize,
    pub restarts: usize,
    /// `(iteration, in-loop objective of the best family so far)`.
    pub trajectory: Vec<(usize, f64)>,
    /// Exact failure of the returned family, if the intersection probes find one.
    pub falsified: Option<SpanDeficiencyWitness>,
    /// Lower bounds that are assumed rather than proven for this profile.
    pub hypothesis: Option<String>,
}

impl SearchState {
    /// Margin above `floor` and no exact failure.
    pub fn succeeded(&self, floor: f64) -> bool {
        self.falsified.is_none() && self.margin.value > floor
    }
}

type Bases = Vec<Vec<Vec<f64>>>;

fn projectors_of(bases: &Bases, n: usize) -> Option<Vec<FMatrix>> {
    bases
        .iter()
        .map(|b| {
            let q = orthonormal_rows(b);
            (q.len() == b.len()).then(|| projector_from_orthonormal(&q, n))
        })
        .collect()
}

fn exact_family(bases: &Bases, n: usize) -> Option<ProjectionFamily> {
    let subspaces = bases.iter().map(|b| exact_subspace(b, n)).collect::<Result<Vec<_>>>().ok()?;
    ProjectionFamily::new(n, subspaces).ok()
}

fn float_bases(family: &ProjectionFamily) -> Bases {
    family.subspaces().iter().map(|w| w.basis().to_f64_rows()).collect()
}

/// Basin hopping on the margin over families of a fixed profile: perturb one
/// subspace basis with Gaussian noise, keep the move if the in-loop margin
/// grows, adapt the noise scale, and restart after a stagnation period.
///
/// For all-hyperplane profiles `m ≥ 2n − 2` is required, since fewer
/// hyperplanes always fail. Other profiles are searched without a lower
/// bound and the report says so.
pub fn search_min(profile: &DimProfile, opts: &SearchOptions) -> Result<SearchState> {
    search_min_observed(profile, opts, |_, _, _| {})
}

/// [`search_min`] with `observe(chain, iteration, best)` called at every
/// recorded trajectory point.
pub fn search_min_observed(
    profile: &DimProfile,
    opts: &SearchOptions,
    observe: impl Fn(usize, usize, f64) + Sync,
) -> Result<SearchState> {
    let n = profile.ambient;
    let m = profile.len();
    if profile.is_all_hyperplanes() && m + 2 < 2 * n {
        return Err(Error::Precondition(format!("{m} hyperplanes in R^{n} always fail; need at least {}", 2 * n - 2)));
    }
    if let Some(start) = &opts.start {
        if DimProfile::of(start) != *profile {
            return Err(Error::Precondition("resume family does not match the profile".into()));
        }
    }
    let chains = opts.chains.max(1);
    let results: Vec<Result<SearchState>> =
        (0..chains).into_par_iter().map(|c| run_chain(profile, opts, c, &observe)).collect();
    let mut best: Option<SearchState> = None;
    for r in results {
        let s = r?;
        let better = match &best {
            None => true,
            Some(b) => (s.falsified.is_none(), s.margin.value) > (b.falsified.is_none(), b.margin.value),
        };
        if better {
            best = Some(s);
        }
    }
    Ok(best.expect("at least one chain"))
}

fn hypothesis_note(profile: &DimProfile) -> Option<String> {
    if profile.is_all_hyperplanes() {
        return None;
    }
    Some(format!(
        "for dims {:?} the lower bound m >= 2n-2 = {} is a hypothesis; it is not enforced",
        profile.dims,
        2 * profile.ambient - 2
    ))
}

fn run_chain(
    profile: &DimProfile,
    opts: &SearchOptions,
    chain: usize,
    observe: &(impl Fn(usize, usize, f64) + Sync),
) -> Result<SearchState> {
    let n = profile.ambient;
    // chain c draws from streams (c + 1) << 32 onward; restarts take the next stream
    let stream = |k: u64| stream_rng(opts.seed, ((chain as u64 + 1) << 32) + k);
    let mut rng = stream(0);
    let eval = MarginOptions {
        samples: opts.eval_samples,
        starts: Some(opts.eval_starts),
        seed: opts.seed ^ 0x9e37_79b9_7f4a_7c15,
        max_iters: opts.eval_iters,
        ..Default::default()
    };
    // Deficient directions are isolated, so random samples rarely land on
    // them. Local minima of the current family are carried over as extra
    // starts: a small perturbation moves them only slightly.
    let objective = |b: &Bases, track: &[Vec<f64>]| {
        let p = projectors_of(b, n)?;
        let o = MarginOptions { extra_starts: track.to_vec(), ..eval.clone() };
        Some(margin_of_projectors(&p, n, &o))
    };
    let tracked = |r: &RobustnessMargin| -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = Vec::new();
        for (_, x) in &r.minima {
            let near = out.iter().any(|y| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>().abs() > 1.0 - 1e-6);
            if !near {
                out.push(x.clone());
            }
            if out.len() == opts.tracked_minima {
                break;
            }
        }
        out
    };
    let fresh = |seed_stream: u64| -> Bases {
        float_bases(&random_family(profile, opts.seed.wrapping_add(seed_stream).wrapping_add(chain as u64 * 7919)))
    };
    let mut restarts = 0;
    let mut cur = match (&opts.start, chain) {
        (Some(f), 0) => float_bases(f),
        _ => fresh(0),
    };
    let start = objective(&cur, &[]);
    let mut cur_val = start.as_ref().map_or(0.0, |r| r.value);
    let mut track = start.as_ref().map(&tracked).unwrap_or_default();
    let mut best = (cur_val, cur.clone(), opts.start_iteration);
    let mut noise = opts.initial_noise;
    let mut since_improvement = 0;
    let mut trajectory = Vec::new();
    let mut checked_at = f64::NEG_INFINITY;
    let mut iterations_run = 0;

    for it in 1..=opts.iterations {
        let iteration = opts.start_iteration + it;
        iterations_run = it;
        let i = rng.random_range(0..cur.len());
        let mut cand = cur.clone();
        for row in cand[i].iter_mut() {
            for v in row.iter_mut() {
                let g: f64 = StandardNormal.sample(&mut rng);
                *v += noise * g;
            }
        }
        match objective(&cand, &track) {
            Some(r) if r.value > cur_val => {
                let v = r.value;
                track = tracked(&r);
                cur = cand;
                cur_val = v;
                noise = (noise * 1.5).min(1.0);
                if v > best.0 {
                    best = (v, cur.clone(), iteration);
                    since_improvement = 0;
                } else {
                    since_improvement += 1;
                }
            }
            _ => {
                noise = (noise * 0.95).max(1e-4);
                since_improvement += 1;
            }
        }
        if since_improvement >= opts.stagnation {
            restarts += 1;
            cur = fresh(restarts as u64 * 1_000_003);
            let r = objective(&cur, &[]);
            cur_val = r.as_ref().map_or(0.0, |r| r.value);
            track = r.as_ref().map(&tracked).unwrap_or_default();
            noise = opts.initial_noise;
            since_improvement = 0;
            rng = stream(restarts as u64);
        }
        if opts.record_every > 0 && it % opts.record_every == 0 {
            trajectory.push((iteration, best.0));
            observe(chain, iteration, best.0);
        }
        if let Some(target) = opts.stop_at {
            // the in-loop objective over-estimates; confirm with the full margin
            if best.0 > target && best.0 > checked_at {
                checked_at = best.0;
                if let Some(f) = exact_family(&best.1, n) {
                    if margin_with(&f, &opts.final_margin).value > target && hyperplane_falsify(&f).is_none() {
                        break;
                    }
                }
            }
        }
    }

    let family = exact_family(&best.1, n)
        .or_else(|| exact_family(&fresh(u64::MAX / 2), n))
        .ok_or_else(|| Error::Precondition("could not rationalize the search result".into()))?;
    let mut margin = margin_with(&family, &opts.final_margin);
    let mut falsified = hyperplane_falsify(&family);
    let mut family = family;
    let mut iteration = best.2;
    // the in-loop margin can over-estimate, so a resumed chain keeps its start unless beaten
    if let (Some(start), 0) = (&opts.start, chain) {
        let start_margin = margin_with(start, &opts.final_margin);
        let start_falsified = hyperplane_falsify(start);
        if (start_falsified.is_none(), start_margin.value) >= (falsified.is_none(), margin.value) {
            family = start.clone();
            margin = start_margin;
            falsified = start_falsified;
            iteration = opts.start_iteration;
        }
    }
    Ok(SearchState {
        family,
        margin,
        iteration,
        iterations_run,
        seed: opts.seed,
        chain,
        restarts,
        trajectory,
        falsified,
        hypothesis: hypothesis_note(profile),
    })
}
