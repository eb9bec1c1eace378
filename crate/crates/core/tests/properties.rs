use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use prframes::certify::{box_cover_certify, replay, CertifyOptions, CertifyOutcome};
use prframes::construct::{augment, random_family, search_min, AugmentOptions, DimProfile, SearchOptions};
use prframes::frames::{
    ambiguous_pair, complement_property, has_complement_violation, vandermonde_frame, ComplementOutcome,
    ComplementViolation, VectorFamily,
};
use prframes::linalg::exact::{rat, ratio};
use prframes::linalg::numeric::orthonormal_rows;
use prframes::linalg::{
    interval_minor, modular, nullspace_basis, projector, rank_exact, smallest_singular_value, FMatrix, Interval,
    IntervalMatrix, RMatrix, Rational, Signal,
};
use prframes::projection::{
    decide, edidin_decide_exact_at, random_rational_parts, random_rational_signal, sigma_at, signed_permutation,
    stack_matrix_f64, stream_rng, DecideOptions, EdidinOutcome, ProjectionFamily, Subspace, Tier, Verdict,
};

fn int_matrix(rows: usize, cols: usize, bound: i64) -> impl Strategy<Value = Vec<Vec<i64>>> {
    prop::collection::vec(prop::collection::vec(-bound..=bound, cols), rows)
}

fn shaped_matrix(bound: i64) -> impl Strategy<Value = Vec<Vec<i64>>> {
    (1usize..=6, 1usize..=6).prop_flat_map(move |(r, c)| int_matrix(r, c, bound))
}

fn to_rmatrix(rows: &[Vec<i64>]) -> RMatrix {
    let cols = rows[0].len();
    RMatrix::from_rows(cols, rows.iter().map(|r| r.iter().map(|&v| rat(v)).collect()).collect()).unwrap()
}

fn vectors(rows: &[Vec<i64>]) -> Option<VectorFamily> {
    let refs: Vec<&[i64]> = rows.iter().map(Vec::as_slice).collect();
    VectorFamily::from_i64(&refs).ok()
}

fn exact_rank(family: &VectorFamily, idx: &[usize]) -> usize {
    if idx.is_empty() {
        return 0;
    }
    let rows = idx.iter().map(|&i| family.vectors()[i].clone()).collect();
    rank_exact(&RMatrix::from_rows(family.ambient_dim(), rows).unwrap())
}

/// Every split, one bit per index, checked directly.
fn brute_force_violation(family: &VectorFamily) -> bool {
    let m = family.len();
    let n = family.ambient_dim();
    (0u32..1 << m).any(|mask| {
        let inside: Vec<usize> = (0..m).filter(|i| mask >> i & 1 == 1).collect();
        let outside: Vec<usize> = (0..m).filter(|i| mask >> i & 1 == 0).collect();
        exact_rank(family, &inside) < n && exact_rank(family, &outside) < n
    })
}

fn det_oracle(m: &[Vec<Rational>]) -> Rational {
    let k = m.len();
    if k == 1 {
        return m[0][0].clone();
    }
    let mut total = Rational::zero();
    for j in 0..k {
        let minor: Vec<Vec<Rational>> = m[1..]
            .iter()
            .map(|r| r.iter().enumerate().filter(|&(c, _)| c != j).map(|(_, v)| v.clone()).collect())
            .collect();
        let term = &m[0][j] * det_oracle(&minor);
        if j % 2 == 0 {
            total += term;
        } else {
            total -= term;
        }
    }
    total
}

fn lines_family(rows: &[Vec<i64>]) -> Option<ProjectionFamily> {
    ProjectionFamily::lines(&vectors(rows)?).ok()
}

fn quick_decide() -> DecideOptions {
    let mut o = DecideOptions { random_points: 200, ..Default::default() };
    o.margin.samples = 200;
    o
}

fn signed_perm() -> impl Strategy<Value = (Vec<usize>, Vec<i64>)> {
    (Just((0..3).collect::<Vec<usize>>()).prop_shuffle(), prop::collection::vec(prop::bool::ANY, 3))
        .prop_map(|(p, s)| (p, s.into_iter().map(|b| if b { -1 } else { 1 }).collect()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rank_plus_nullity_is_cols(rows in shaped_matrix(3)) {
        let m = to_rmatrix(&rows);
        let ns = nullspace_basis(&m);
        prop_assert_eq!(rank_exact(&m) + ns.rows(), m.cols());
        for v in ns.row_iter() {
            prop_assert!(m.mul_vec(v).iter().all(Zero::is_zero));
        }
    }

    #[test]
    fn modular_rank_agrees_on_small_entries(rows in shaped_matrix(3)) {
        let m = to_rmatrix(&rows);
        let flat = rows.iter().flatten().map(|&v| modular::from_i64(v)).collect();
        prop_assert_eq!(modular::rank(flat, rows.len(), rows[0].len()), rank_exact(&m));
    }

    #[test]
    fn projector_is_symmetric_and_idempotent(rows in (1usize..=3).prop_flat_map(|k| int_matrix(k, 4, 4))) {
        let b = to_rmatrix(&rows);
        prop_assume!(rank_exact(&b) == b.rows());
        let p = projector(&b).unwrap();
        prop_assert_eq!(&p, &p.transpose());
        prop_assert_eq!(&p.mul(&p).unwrap(), &p);
        for r in b.row_iter() {
            prop_assert_eq!(p.mul_vec(r), r.to_vec());
        }
    }

    #[test]
    fn smallest_singular_value_is_orthogonally_invariant(
        entries in prop::collection::vec(-1.0f64..1.0, 15),
        q_rows in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 5), 5),
    ) {
        let q = orthonormal_rows(&q_rows);
        prop_assume!(q.len() == 5);
        let m = FMatrix::new(5, 3, entries).unwrap();
        let q = FMatrix::from_rows(5, &q).unwrap();
        let a = smallest_singular_value(&m);
        let b = smallest_singular_value(&q.mul(&m));
        prop_assert!((a - b).abs() <= 1e-8 * m.frobenius_norm().max(1.0), "{a} vs {b}");
    }

    #[test]
    fn interval_minor_encloses_point_determinants(
        k in 1usize..=4,
        lo in prop::collection::vec(-3i64..=3, 16),
        width in prop::collection::vec(0i64..=2, 16),
        t in prop::collection::vec(0i64..=7, 16),
    ) {
        let entry = |i: usize, j: usize| i * 4 + j;
        let boxes: Vec<Interval> = (0..k * k)
            .map(|e| entry(e / k, e % k))
            .map(|e| Interval::new(lo[e] as f64, (lo[e] + width[e]) as f64).unwrap())
            .collect();
        let point: Vec<Vec<Rational>> = (0..k)
            .map(|i| (0..k).map(|j| entry(i, j)).map(|e| rat(lo[e]) + ratio(width[e] * t[e], 7)).collect())
            .collect();
        let im = IntervalMatrix::new(k, k, boxes).unwrap();
        let idx: Vec<usize> = (0..k).collect();
        let enclosure = interval_minor(&im, &idx, &idx).unwrap();
        prop_assert!(enclosure.contains_rational(&det_oracle(&point)));
    }

    #[test]
    fn sigma_at_matches_stack_singular_value(
        normals in int_matrix(5, 3, 3),
        x in prop::collection::vec(-1.0f64..1.0, 3),
    ) {
        prop_assume!(normals.iter().all(|r| r.iter().any(|&v| v != 0)));
        prop_assume!(x.iter().map(|v| v * v).sum::<f64>() > 1e-6);
        let bases = normals.iter().map(|w| nullspace_basis(&to_rmatrix(std::slice::from_ref(w)))).collect();
        let f = ProjectionFamily::from_bases(3, bases).unwrap();
        let projectors: Vec<FMatrix> = f.subspaces().iter().map(|w| w.projector_f64().clone()).collect();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let unit: Vec<f64> = x.iter().map(|v| v / norm).collect();
        let direct = smallest_singular_value(&stack_matrix_f64(&f, &unit));
        prop_assert!((sigma_at(&projectors, 3, &x) - direct).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn complement_pass_is_sound(rows in int_matrix(6, 3, 3), masks in prop::collection::vec(0u32..64, 20)) {
        let Some(f) = vectors(&rows) else { return Ok(()) };
        prop_assume!(complement_property(&f).unwrap().passes());
        for mask in masks {
            let subset: Vec<usize> = (0..6).filter(|i| mask >> i & 1 == 1).collect();
            let rest: Vec<usize> = (0..6).filter(|i| mask >> i & 1 == 0).collect();
            let (ri, ric) = (exact_rank(&f, &subset), exact_rank(&f, &rest));
            prop_assert!(ri == 3 || ric == 3);
            let claim = ComplementViolation { subset, rank_i: ri, rank_ic: ric };
            prop_assert!(ambiguous_pair(&f, &claim).is_err());
        }
    }

    #[test]
    fn complement_violation_is_sound(rows in int_matrix(5, 3, 2)) {
        let Some(f) = vectors(&rows) else { return Ok(()) };
        if let ComplementOutcome::Violation(v) = complement_property(&f).unwrap() {
            prop_assert!(v.holds_for(&f));
            prop_assert!(v.subset.contains(&0));
            prop_assert!(ambiguous_pair(&f, &v).unwrap().verify(&f));
        }
    }

    #[test]
    fn complement_agrees_with_brute_force(rows in (4usize..=7).prop_flat_map(|m| int_matrix(m, 3, 2))) {
        let Some(f) = vectors(&rows) else { return Ok(()) };
        let oracle = brute_force_violation(&f);
        prop_assert_eq!(has_complement_violation(&f), oracle);
        prop_assert_eq!(complement_property(&f).unwrap().passes(), !oracle);
    }

    #[test]
    fn complement_is_monotone_under_supersets(rows in int_matrix(6, 3, 3), extra in int_matrix(2, 3, 3)) {
        let Some(f) = vectors(&rows) else { return Ok(()) };
        let Some(g) = vectors(&[rows.clone(), extra].concat()) else { return Ok(()) };
        if complement_property(&f).unwrap().passes() {
            prop_assert!(complement_property(&g).unwrap().passes());
        }
    }

    #[test]
    fn too_few_vectors_always_fail(n in 2usize..=4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = rng.random_range(1..=2 * n - 2);
        let rows: Vec<Vec<i64>> = (0..m).map(|_| random_nonzero(&mut rng, n)).collect();
        let f = vectors(&rows).unwrap();
        prop_assert!(!complement_property(&f).unwrap().passes());
    }

    #[test]
    fn complement_is_invariant_under_signed_permutations(
        rows in int_matrix(5, 3, 3),
        (perm, signs) in signed_perm(),
        order in Just((0..5).collect::<Vec<usize>>()).prop_shuffle(),
    ) {
        let Some(f) = vectors(&rows) else { return Ok(()) };
        let q = signed_permutation(&perm, &signs);
        let shuffled: Vec<Vec<i64>> = order.iter().map(|&i| rows[i].clone()).collect();
        let base = complement_property(&f).unwrap().passes();
        prop_assert_eq!(complement_property(&f.transform(&q).unwrap()).unwrap().passes(), base);
        prop_assert_eq!(complement_property(&vectors(&shuffled).unwrap()).unwrap().passes(), base);
    }
}

fn random_nonzero(rng: &mut ChaCha8Rng, n: usize) -> Vec<i64> {
    loop {
        let v: Vec<i64> = (0..n).map(|_| rng.random_range(-3..=3)).collect();
        if v.iter().any(|&c| c != 0) {
            return v;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn decide_depends_only_on_the_subspaces(
        rows in int_matrix(8, 3, 3),
        mix in prop::collection::vec(1i64..=3, 8),
        scale in 1i64..=5,
    ) {
        // four planes, each spanned by two rows; the second basis mixes them
        let planes: Vec<RMatrix> = rows.chunks(2).map(to_rmatrix).collect();
        prop_assume!(planes.iter().all(|b| rank_exact(b) == 2));
        let mixed: Vec<RMatrix> = planes.iter().zip(mix.chunks(2)).map(|(b, c)| {
            let a = RMatrix::from_i64_rows(&[&[c[0], 1], &[1, -c[1]]]);
            a.mul(b).unwrap()
        }).collect();
        let f = ProjectionFamily::from_bases(3, planes).unwrap();
        let g = ProjectionFamily::from_bases(3, mixed).unwrap();
        prop_assert!(f.subspaces() == g.subspaces());
        let opts = quick_decide();
        let (a, b) = (decide(&f, Tier::Sample, &opts).unwrap(), decide(&g, Tier::Sample, &opts).unwrap());
        if let (Some(ma), Some(mb)) = (&a.margin, &b.margin) {
            prop_assert_eq!(ma.value, mb.value);
        }
        for d in [&a, &b] {
            if let Some(w) = d.certificate.witness() {
                prop_assert!(w.verify(&f) && w.verify(&g));
                let scaled: Vec<Rational> = w.x.coords().iter().map(|c| c * rat(-scale)).collect();
                let outcome = edidin_decide_exact_at(&f, &Signal::new(scaled).unwrap()).unwrap();
                prop_assert!(matches!(outcome, EdidinOutcome::Deficient(_)));
            }
        }
    }

    #[test]
    fn failure_witnesses_are_equivariant(rows in int_matrix(4, 3, 3), (perm, signs) in signed_perm()) {
        // four lines in R^3 always fail
        let Some(f) = lines_family(&rows) else { return Ok(()) };
        let d = decide(&f, Tier::Falsify, &quick_decide()).unwrap();
        prop_assert_eq!(d.verdict, Verdict::Fails);
        let w = d.certificate.witness().unwrap();
        let q = signed_permutation(&perm, &signs);
        let moved = Signal::new(q.mul_vec(w.x.coords())).unwrap();
        let qf = f.transform(&q).unwrap();
        prop_assert!(matches!(edidin_decide_exact_at(&qf, &moved).unwrap(), EdidinOutcome::Deficient(_)));
    }

    #[test]
    fn certified_covers_survive_probes_and_replay(rows in int_matrix(5, 3, 4), seed in any::<u64>()) {
        let Some(f) = lines_family(&rows) else { return Ok(()) };
        let CertifyOutcome::CertifiedPasses(cover) = box_cover_certify(&f, &CertifyOptions::default()).unwrap() else {
            return Ok(());
        };
        prop_assert!(replay(&f, &cover).is_ok());
        let mut rng = stream_rng(seed, 0);
        for _ in 0..50 {
            let x = random_rational_signal(&mut rng, 3, 50);
            prop_assert_eq!(edidin_decide_exact_at(&f, &x).unwrap(), EdidinOutcome::FullSpan);
        }
    }

    #[test]
    fn certification_is_monotone_in_depth(rows in int_matrix(5, 3, 4), depth in 4usize..=16) {
        let Some(f) = lines_family(&rows) else { return Ok(()) };
        let shallow = box_cover_certify(&f, &CertifyOptions { max_depth: depth, ..Default::default() }).unwrap();
        let deep = box_cover_certify(&f, &CertifyOptions { max_depth: depth + 4, ..Default::default() }).unwrap();
        if shallow.is_certified() {
            prop_assert!(deep.is_certified());
        }
        if let CertifyOutcome::FailsAt(w) = &shallow {
            prop_assert!(w.verify(&f));
            prop_assert!(!deep.is_certified());
        }
    }

    #[test]
    fn certification_mirrors_under_sign_flips(rows in int_matrix(5, 3, 4), flip in 0usize..3) {
        let Some(f) = lines_family(&rows) else { return Ok(()) };
        let mut signs = vec![1; 3];
        signs[flip] = -1;
        let g = f.transform(&signed_permutation(&[0, 1, 2], &signs)).unwrap();
        let opts = CertifyOptions::default();
        match (box_cover_certify(&f, &opts).unwrap(), box_cover_certify(&g, &opts).unwrap()) {
            (CertifyOutcome::CertifiedPasses(a), CertifyOutcome::CertifiedPasses(b)) => {
                prop_assert_eq!(a.boxes_certified, b.boxes_certified);
            }
            (CertifyOutcome::FailsAt(_), CertifyOutcome::FailsAt(_)) => {}
            (CertifyOutcome::Unknown { remaining: a, .. }, CertifyOutcome::Unknown { remaining: b, .. }) => {
                prop_assert_eq!(a.len(), b.len());
            }
            (a, b) => prop_assert!(false, "{a:?} vs {b:?}"),
        }
    }

    #[test]
    fn augmentation_strictly_grows_one_subspace(seed in 0u64..1000, index in 0usize..5) {
        let f = random_family(&DimProfile::uniform(3, 5, 1).unwrap(), seed);
        let opts = AugmentOptions { decide: quick_decide(), ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let Ok(aug) = augment(&f, index, &mut rng, &opts) else { return Ok(()) };
        let (old, new) = (&f.subspaces()[index], &aug.family.subspaces()[index]);
        prop_assert_eq!(new.dim(), old.dim() + 1);
        prop_assert!(new.contains(old) && !old.contains(new));
        for i in (0..5).filter(|&i| i != index) {
            prop_assert!(aug.family.subspaces()[i] == f.subspaces()[i]);
        }
    }

    #[test]
    fn search_success_is_never_falsified(seed in any::<u64>()) {
        let opts = SearchOptions {
            iterations: 20,
            seed,
            eval_samples: 64,
            final_margin: prframes::projection::MarginOptions { samples: 200, ..Default::default() },
            ..Default::default()
        };
        let s = search_min(&DimProfile::hyperplanes(3, 4).unwrap(), &opts).unwrap();
        if let Some(w) = &s.falsified {
            prop_assert!(w.verify(&s.family));
            prop_assert!(!s.succeeded(opts.margin_floor));
        }
        if s.succeeded(opts.margin_floor) {
            prop_assert_ne!(decide(&s.family, Tier::Falsify, &quick_decide()).unwrap().verdict, Verdict::Fails);
        }
    }

    #[test]
    fn generators_are_reproducible(seed in any::<u64>(), nodes in prop::collection::btree_set(-9i64..=9, 4..=7)) {
        let p = DimProfile::new(4, vec![1, 2, 3, 2, 1]).unwrap();
        prop_assert!(random_family(&p, seed).subspaces() == random_family(&p, seed).subspaces());
        let nodes: Vec<Rational> = nodes.into_iter().map(rat).collect();
        prop_assert_eq!(vandermonde_frame(4, &nodes).unwrap(), vandermonde_frame(4, &nodes).unwrap());
        let draw = || random_rational_parts(&mut stream_rng(seed, 7), 4, 1000);
        prop_assert_eq!(draw(), draw());
        prop_assert!(draw().iter().all(|&(_, d)| d > 0));
    }
}

#[test]
fn projector_of_a_line_is_the_outer_product() {
    let w = Subspace::from_i64_rows(&[&[1, 2, 2]]).unwrap();
    let p = w.projector();
    for i in 0..3 {
        for j in 0..3 {
            let (a, b) = ([1, 2, 2][i], [1, 2, 2][j]);
            assert_eq!(p.row(i)[j], ratio(a * b, 9));
        }
    }
    assert!(p.row(0).iter().map(|v| v * v).fold(Rational::zero(), |s, v| s + v) <= Rational::one());
}
