use frobtrace::catalog::{load_catalog, Monomial};
use frobtrace::counting::CountOptions;
use frobtrace::ffield::primes_between;
use frobtrace::lefschetz::{analyze_nodes, elliptic_ap, elliptic_ap_square, node_correction, ramanujan_ok, Resolution};

fn eval(poly: &[Monomial], p: i64, x: &[i64]) -> i64 {
    poly.iter().fold(0, |acc, m| {
        let mut v = m.coefficient.rem_euclid(p);
        for (xi, &e) in x.iter().zip(&m.exponents) {
            for _ in 0..e {
                v = v * xi % p;
            }
        }
        (acc + v) % p
    })
}

fn diff(poly: &[Monomial], var: usize) -> Vec<Monomial> {
    poly.iter()
        .filter(|m| m.exponents[var] > 0)
        .map(|m| {
            let mut e = m.exponents.clone();
            e[var] -= 1;
            Monomial::new(m.coefficient * m.exponents[var] as i64, e)
        })
        .collect()
}

fn plane_points(p: i64) -> Vec<[i64; 3]> {
    let mut out = vec![[0, 0, 1]];
    for b in 0..p {
        out.push([0, 1, b]);
    }
    for b in 0..p {
        for c in 0..p {
            out.push([1, b, c]);
        }
    }
    out
}

/// `#E(F_p)` for the normalization of a nodal plane curve, by direct enumeration
/// of the curve and of the rational tangent directions at each singular point.
fn normalization_oracle(poly: &[Monomial], p: i64) -> i64 {
    let grads: Vec<Vec<Monomial>> = (0..3).map(|i| diff(poly, i)).collect();
    let mut total = 0;
    for x in plane_points(p) {
        if eval(poly, p, &x) != 0 {
            continue;
        }
        if grads.iter().any(|g| eval(g, p, &x) != 0) {
            total += 1;
            continue;
        }
        let k = x.iter().position(|&v| v != 0).unwrap();
        let others: Vec<usize> = (0..3).filter(|&i| i != k).collect();
        let h = |i: usize, j: usize| eval(&diff(&grads[i], j), p, &x);
        let q = |s: i64, t: i64| {
            let (a, b) = (others[0], others[1]);
            (h(a, a) * s * s + 2 * h(a, b) * s * t + h(b, b) * t * t).rem_euclid(p)
        };
        let mut roots = if q(1, 0) == 0 { 1 } else { 0 };
        roots += (0..p).filter(|&t| q(t, 1) == 0).count() as i64;
        assert!(roots == 0 || roots == 2, "cusp or worse at {x:?} mod {p}");
        total += roots;
    }
    total
}

#[test]
fn e_plane_matches_brute_force_normalization() {
    let cat = load_catalog();
    let e = cat.get("e_plane").unwrap();
    let opts = CountOptions::default();
    for p in primes_between(3, 100).into_iter().filter(|&p| p != 5) {
        let want = p as i64 + 1 - normalization_oracle(&e.equations[0], p as i64);
        let a = elliptic_ap(e, p, &opts).unwrap();
        assert_eq!(a, want, "p = {p}");
        assert!(ramanujan_ok(a, p, 2), "p = {p}");
    }
}

#[test]
fn e_plane_known_traces() {
    let cat = load_catalog();
    let e = cat.get("e_plane").unwrap();
    let opts = CountOptions::default();
    let known = [(3, -1), (7, -2), (11, -3), (13, 4), (17, 3), (19, 5), (23, -6), (29, 0), (31, 2), (41, -3)];
    for (p, a) in known {
        assert_eq!(elliptic_ap(e, p, &opts).unwrap(), a, "p = {p}");
    }
}

#[test]
fn e_plane_quadratic_extension_follows_hecke() {
    let cat = load_catalog();
    let e = cat.get("e_plane").unwrap();
    let opts = CountOptions::default();
    for p in [3u64, 7, 11] {
        let a = elliptic_ap(e, p, &opts).unwrap();
        assert_eq!(elliptic_ap_square(e, p, &opts).unwrap(), a * a - 2 * p as i64, "p = {p}");
    }
}

#[test]
fn e_plane_refuses_bad_primes() {
    let cat = load_catalog();
    let e = cat.get("e_plane").unwrap();
    let err = elliptic_ap(e, 5, &CountOptions::default()).unwrap_err();
    assert!(err.is_refusal());
}

#[test]
fn schoen_nodes() {
    let cat = load_catalog();
    let x = cat.get("schoen_x").unwrap();
    let opts = CountOptions::default();
    let n11 = analyze_nodes(x, 11, &opts).unwrap();
    assert_eq!(n11.len(), 125);
    assert!(n11.iter().all(|n| n.split));
    let n3 = analyze_nodes(x, 3, &opts).unwrap();
    assert_eq!(n3.len(), 1);
    assert!(!n3[0].split);
    for p in [3u64, 7, 11, 13, 19, 29, 31, 41] {
        let nodes = analyze_nodes(x, p, &opts).unwrap();
        let want = if p % 5 == 1 { 125 } else { 1 };
        assert_eq!(nodes.len(), want, "p = {p}");
        // The tangent cone splits exactly when 5 is a square mod p.
        let five_square = (1..p).any(|t| t * t % p == 5 % p);
        assert!(nodes.iter().all(|n| n.split == five_square), "p = {p}");
    }
    assert_eq!(node_correction(x, 3, Resolution::Big, 5, &opts).unwrap(), 9);
}
