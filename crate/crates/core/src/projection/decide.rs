//! Tiered decision procedure for projection families.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::margin::{margin_with, stream_rng, MarginOptions, RobustnessMargin};
use super::{
    basis_union_test_with_cap, edidin_decide_exact_at, hyperplane_falsify_capped, random_rational_parts,
    residues_of_parts, signal_from_parts, witness_from_union_violation, EdidinOutcome, ProjectionFamily,
    SpanDeficiencyWitness,
};
use crate::certify::{box_cover_certify, CertifiedCover, CertifyOptions, CertifyOutcome, CoverBox};
use crate::error::{Error, Result};
use crate::frames::{ComplementOutcome, ComplementViolation};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    Falsify,
    Sample,
    Certify,
}

impl std::str::FromStr for Tier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "falsify" => Ok(Tier::Falsify),
            "sample" => Ok(Tier::Sample),
            "certify" => Ok(Tier::Certify),
            other => Err(Error::Precondition(format!("unknown tier {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Fails,
    ProbablyPasses,
    CertifiedPasses,
    Unknown,
}

impl Verdict {
    pub fn passes(self) -> bool {
        matches!(self, Verdict::ProbablyPasses | Verdict::CertifiedPasses)
    }
}

/// What the orthogonal-basis-union test concluded. It only ever proves
/// failure; a pass says nothing about success.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NecessaryTest {
    /// No complement violation; necessary condition only.
    Passed,
    Violated(ComplementViolation),
    Skipped(String),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Certificate {
    /// Exact point with deficient span.
    Witness(SpanDeficiencyWitness),
    /// Complement violation of the basis union plus the exact point it yields.
    UnionViolation {
        violation: ComplementViolation,
        witness: SpanDeficiencyWitness,
    },
    Margin(RobustnessMargin),
    Cover(CertifiedCover),
    /// Certification ran out of depth or budget on these boxes.
    Unresolved {
        remaining: Vec<CoverBox>,
        processed: usize,
        budget_exceeded: bool,
    },
    None,
}

impl Certificate {
    /// The exact witness behind a failure, if any.
    pub fn witness(&self) -> Option<&SpanDeficiencyWitness> {
        match self {
            Certificate::Witness(w) | Certificate::UnionViolation { witness: w, .. } => Some(w),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Decision {
    pub tier: Tier,
    pub verdict: Verdict,
    pub certificate: Certificate,
    pub necessary_test: NecessaryTest,
    /// Set whenever the margin was computed, even if it did not decide.
    pub margin: Option<RobustnessMargin>,
    pub random_points_tested: usize,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct DecideOptions {
    pub seed: u64,
    pub random_points: usize,
    /// Bound on numerators and denominators of random points.
    pub point_height: i64,
    pub falsify_subsets: usize,
    /// Largest basis union handled by exhaustive complement enumeration.
    pub union_cap: usize,
    pub margin: MarginOptions,
    pub margin_floor: f64,
    pub certify: CertifyOptions,
}

impl Default for DecideOptions {
    fn default() -> Self {
        DecideOptions {
            seed: 0,
            random_points: 10_000,
            point_height: 1000,
            falsify_subsets: super::DEFAULT_FALSIFY_SUBSETS,
            union_cap: crate::frames::DEFAULT_SUBSET_CAP,
            margin: MarginOptions::default(),
            margin_floor: 1e-4,
            certify: CertifyOptions::default(),
        }
    }
}

/// Random points use streams above this offset, away from margin streams.
const POINT_STREAM_BASE: u64 = 1 << 40;

pub fn decide(family: &ProjectionFamily, tier: Tier, opts: &DecideOptions) -> Result<Decision> {
    let mut d = Decision {
        tier,
        verdict: Verdict::Unknown,
        certificate: Certificate::None,
        necessary_test: NecessaryTest::Skipped("not reached".into()),
        margin: None,
        random_points_tested: 0,
        notes: Vec::new(),
    };

    if let Some(w) = hyperplane_falsify_capped(family, opts.falsify_subsets) {
        d.verdict = Verdict::Fails;
        d.certificate = Certificate::Witness(w);
        return Ok(d);
    }

    match basis_union_test_with_cap(family, opts.union_cap) {
        Ok(ComplementOutcome::Pass) => d.necessary_test = NecessaryTest::Passed,
        Ok(ComplementOutcome::Violation(v)) => {
            let witness = witness_from_union_violation(family, &v)?;
            d.necessary_test = NecessaryTest::Violated(v.clone());
            d.verdict = Verdict::Fails;
            d.certificate = Certificate::UnionViolation { violation: v, witness };
            return Ok(d);
        }
        Err(Error::TooManySubsets { m, cap }) => {
            d.necessary_test = NecessaryTest::Skipped(format!("basis union has {m} vectors, cap {cap}"));
        }
        Err(e) => return Err(e),
    }

    let n = family.ambient_dim();
    let hit = (0..opts.random_points).into_par_iter().find_map_first(|k| {
        let mut rng = stream_rng(opts.seed, POINT_STREAM_BASE + k as u64);
        let parts = random_rational_parts(&mut rng, n, opts.point_height);
        if family.full_span_mod(&residues_of_parts(&parts), 0..family.len()) {
            return None;
        }
        let x = signal_from_parts(&parts).ok()?;
        match edidin_decide_exact_at(family, &x) {
            Ok(EdidinOutcome::Deficient(w)) => Some(w),
            _ => None,
        }
    });
    d.random_points_tested = opts.random_points;
    if let Some(w) = hit {
        d.verdict = Verdict::Fails;
        d.certificate = Certificate::Witness(w);
        return Ok(d);
    }

    match tier {
        Tier::Falsify => {
            d.notes.push("no failure found; the falsify tier never proves success".into());
        }
        Tier::Sample => {
            let mopts = MarginOptions { seed: opts.seed, ..opts.margin.clone() };
            let m = margin_with(family, &mopts);
            d.verdict = if m.value > opts.margin_floor { Verdict::ProbablyPasses } else { Verdict::Unknown };
            if d.verdict == Verdict::Unknown {
                d.notes.push(format!("margin {:.3e} is not above floor {:.1e}", m.value, opts.margin_floor));
            }
            d.margin = Some(m.clone());
            d.certificate = Certificate::Margin(m);
        }
        Tier::Certify => match box_cover_certify(family, &opts.certify)? {
            CertifyOutcome::CertifiedPasses(cover) => {
                d.verdict = Verdict::CertifiedPasses;
                d.certificate = Certificate::Cover(cover);
            }
            CertifyOutcome::FailsAt(w) => {
                d.verdict = Verdict::Fails;
                d.certificate = Certificate::Witness(w);
            }
            CertifyOutcome::Unknown { remaining, processed, budget_exceeded } => {
                d.notes.push(format!("{} boxes unresolved after {processed} processed", remaining.len()));
                d.certificate = Certificate::Unresolved { remaining, processed, budget_exceeded };
            }
        },
    }
    Ok(d)
}
