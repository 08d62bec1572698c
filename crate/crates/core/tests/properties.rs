use std::collections::BTreeSet;
use std::sync::OnceLock;

use frobtrace::catalog::{derivative, evaluate_polynomial, load_catalog, singular_points};
use frobtrace::counting::CountOptions;
use frobtrace::ffield::{is_prime, kronecker, primes_between, FiniteField, PrimeField, QuadraticExtension};
use frobtrace::lefschetz::{euler_ledger, trace_h3, LedgerMove};
use frobtrace::livne::{build_basis, check_cover, find_cover_set, frobenius_signature};
use frobtrace::pipeline::{betti_pipeline, match_pipeline, Congruence, MatchRequest, ResolutionRecipe};
use frobtrace::qexp::{f25, hecke_square_ok, multiplicative_ok};
use proptest::prelude::*;

const PRIMES: [u64; 8] = [3, 7, 11, 13, 101, 421, 65521, 2147483629];

fn f25_table() -> &'static frobtrace::qexp::QSeries {
    static SERIES: OnceLock<frobtrace::qexp::QSeries> = OnceLock::new();
    SERIES.get_or_init(|| f25(1600).unwrap())
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

proptest! {
    #[test]
    fn prime_field_inverses(pi in 0usize..PRIMES.len(), x in 1u64.., y in 1u64..) {
        let f = PrimeField::new(PRIMES[pi]).unwrap();
        let (x, y) = (f.from_int((x % f.order()) as i64), f.from_int((y % f.order()) as i64));
        prop_assume!(!f.is_zero(x) && !f.is_zero(y));
        prop_assert_eq!(f.mul(x, f.inv(x).unwrap()), f.one());
        prop_assert_eq!(f.mul(f.mul(x, y), f.inv(y).unwrap()), x);
    }

    #[test]
    fn extension_frobenius_is_an_involutive_automorphism(pi in 0usize..6, i in 0u64.., j in 0u64..) {
        let e = QuadraticExtension::new(PRIMES[pi]).unwrap();
        let (x, y) = (e.nth(i % e.order()), e.nth(j % e.order()));
        prop_assert_eq!(e.frobenius(e.mul(x, y)), e.mul(e.frobenius(x), e.frobenius(y)));
        prop_assert_eq!(e.frobenius(e.add(x, y)), e.add(e.frobenius(x), e.frobenius(y)));
        prop_assert_eq!(e.frobenius(e.frobenius(x)), x);
        prop_assert_eq!(e.frobenius(x), e.pow(x, PRIMES[pi]));
    }

    #[test]
    fn trace_is_linear_in_count_and_correction(n in 0u64..1_000_000, dn in 0u64..1000, c in -10_000i64..10_000, dc in -1000i64..1000, pi in 0usize..5, b2 in 0i64..200) {
        let p = PRIMES[pi];
        let t = trace_h3(n, p, b2, c);
        prop_assert_eq!(trace_h3(n + dn, p, b2, c) - t, -(dn as i64));
        prop_assert_eq!(trace_h3(n, p, b2, c + dc) - t, -dc);
        prop_assert_eq!(trace_h3(n, p, b2 + 1, c) - t, (p + p * p) as i64);
    }

    #[test]
    fn replace_and_contract_moves_commute(chi in -500i64..500, moves in proptest::collection::vec((0u8..3, 0i64..40, -20i64..20), 1..6), seed in any::<u64>()) {
        let to_move = |&(kind, a, b): &(u8, i64, i64)| match kind {
            0 => LedgerMove::ContractNodes { k: a },
            1 => LedgerMove::Replace { old_chi: b, new_chi: a - 20 },
            _ => LedgerMove::ResolveNodesBig { k: a },
        };
        let mut list: Vec<LedgerMove> = vec![LedgerMove::BaseChi { chi }];
        list.extend(moves.iter().map(to_move));
        let mut shuffled = list[1..].to_vec();
        // Deterministic shuffle from the seed.
        let mut s = seed;
        for i in (1..shuffled.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (s >> 33) as usize % (i + 1));
        }
        shuffled.insert(0, LedgerMove::BaseChi { chi });
        prop_assert_eq!(euler_ledger(&list).unwrap(), euler_ledger(&shuffled).unwrap());
    }

    #[test]
    fn signatures_are_multiplicative_in_the_discriminant(pi in 0usize..60, a in 0usize..4, b in 0usize..4) {
        let s: BTreeSet<u64> = [2, 3, 5, 7].into();
        let basis = build_basis(&s).unwrap();
        let primes: Vec<u64> = primes_between(11, 1000);
        let p = primes[pi * 2 % primes.len()];
        let sig = frobenius_signature(p, &basis).unwrap();
        let (d1, d2) = (basis.discriminants[a], basis.discriminants[b]);
        prop_assert_eq!(kronecker(d1 * d2, p as i64), sig.signs[a] * sig.signs[b]);
    }

    #[test]
    fn signatures_depend_only_on_the_residue_class(s_bits in 1u8..32, pi in 0usize..40, k in 1u64..30) {
        let pool = [2u64, 3, 5, 7, 11];
        let s: BTreeSet<u64> = pool.iter().enumerate().filter(|(i, _)| s_bits >> i & 1 == 1).map(|(_, &p)| p).collect();
        let modulus = 8 * s.iter().filter(|&&p| p != 2).product::<u64>();
        let basis = build_basis(&s).unwrap();
        let p = primes_between(13, 600)[pi];
        let q = (1..).map(|j| p + (k + j) * modulus).find(|&q| is_prime(q)).unwrap();
        prop_assert_eq!(frobenius_signature(p, &basis).unwrap(), frobenius_signature(q, &basis).unwrap());
    }

    #[test]
    fn found_cover_sets_are_complete(s_bits in 1u8..32) {
        let pool = [2u64, 3, 5, 7, 11];
        let s: BTreeSet<u64> = pool.iter().enumerate().filter(|(i, _)| s_bits >> i & 1 == 1).map(|(_, &p)| p).collect();
        if let Ok(t) = find_cover_set(&s, 2000) {
            prop_assert!(check_cover(&s, &t).unwrap().is_complete());
        }
    }

    #[test]
    fn f25_is_multiplicative_on_coprime_pairs(m in 1i64..40, n in 1i64..40) {
        prop_assume!(gcd(m, n) == 1);
        prop_assert!(multiplicative_ok(f25_table(), m, n).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn singular_points_do_not_depend_on_the_representative(pi in 0usize..3, l in 1i64..1000) {
        let p = [11u64, 31, 41][pi];
        let cat = load_catalog();
        let x = cat.get("schoen_x").unwrap();
        let f = PrimeField::new(p).unwrap();
        let lambda = f.from_int(l % p as i64);
        prop_assume!(!f.is_zero(lambda));
        let grads: Vec<_> = (0..5).map(|i| derivative(&x.equations[0], i)).collect();
        let points = singular_points(x, p).unwrap();
        prop_assert_eq!(points.len(), 125);
        for pt in &points {
            let scaled: Vec<_> = pt.iter().map(|&v| f.mul(lambda, f.from_int(v as i64))).collect();
            prop_assert!(f.is_zero(evaluate_polynomial(&f, &x.equations[0], &scaled)));
            for g in &grads {
                prop_assert!(f.is_zero(evaluate_polynomial(&f, g, &scaled)));
            }
        }
    }

    /// Adding primes to a request can break a match but never repair one.
    #[test]
    fn match_verdict_is_monotone(base in proptest::sample::subsequence(vec![3u64, 7, 13, 17, 19, 23, 29, 31], 1..5), extra in proptest::sample::subsequence(vec![3u64, 7, 13, 17, 19, 23, 29, 31, 41], 1..4)) {
        let cat = load_catalog();
        let opts = CountOptions::default();
        let small = match_pipeline(&cat, &MatchRequest::schoen_quotient(base.clone()), &opts).unwrap().report.overall;
        let mut all: Vec<u64> = base.iter().chain(&extra).copied().collect::<BTreeSet<_>>().into_iter().collect();
        all.sort();
        let big = match_pipeline(&cat, &MatchRequest::schoen_quotient(all), &opts).unwrap().report.overall;
        prop_assert!(!big || small);
    }
}

#[test]
fn hecke_relations_at_good_primes() {
    let f = f25(169).unwrap();
    for p in [2, 3, 7, 11, 13] {
        assert!(hecke_square_ok(&f, 4, p).unwrap(), "p = {p}");
    }
}

#[test]
fn kronecker_matches_squares_below_1000() {
    for p in primes_between(3, 1000) {
        let squares: BTreeSet<u64> = (1..p).map(|x| x * x % p).collect();
        for d in -50i64..50 {
            let r = d.rem_euclid(p as i64) as u64;
            if r == 0 {
                continue;
            }
            assert_eq!(kronecker(d, p as i64) == 1, squares.contains(&r), "({d}/{p})");
        }
    }
}

#[test]
fn betti_candidates_shrink_as_p_grows() {
    let cat = load_catalog();
    let recipe = ResolutionRecipe::schoen_quotient();
    let opts = CountOptions::default();
    let mut previous: Option<BTreeSet<(i64, i64)>> = None;
    for p in [41u64, 61, 101] {
        let (r, _) = betti_pipeline(&cat, "schoen_quotient", &recipe, p, 168, Some(Congruence::new(20, 1)), &opts).unwrap();
        let set: BTreeSet<(i64, i64)> = r.candidates.iter().map(|c| (c.b2, c.b3)).collect();
        assert!(set.contains(&(85, 4)), "p = {p}: {set:?}");
        if let Some(prev) = &previous {
            assert!(set.is_subset(prev), "p = {p}: {set:?} not inside {prev:?}");
        }
        previous = Some(set);
    }
    assert_eq!(previous.unwrap().len(), 1);
}
