use std::fs;
use std::path::{Path, PathBuf};

use frobtrace::catalog::{load_catalog, Monomial};
use frobtrace::counting::{read_records, CountOptions};
use frobtrace::manifest::{expand_series, run_manifest, run_manifest_file, RunManifest};
use frobtrace::pipeline::FormId;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("frobtrace-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn shipped(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../manifests").join(name)
}

/// Run a shipped manifest with its outputs redirected into `dir`.
fn run_shipped(name: &str, dir: &Path) -> frobtrace::Result<frobtrace::manifest::RunSummary> {
    let mut m = RunManifest::load(shipped(name)).unwrap();
    m.output_dir = dir.to_path_buf();
    run_manifest(&m, Path::new("."), &load_catalog(), &CountOptions::default())
}

fn brute_projective(poly: &[Monomial], n: usize, p: i64) -> u64 {
    let total = (p as usize).pow(n as u32);
    let mut count = 0;
    for mut k in 1..total {
        let mut x = vec![0i64; n];
        for xi in x.iter_mut() {
            *xi = (k % p as usize) as i64;
            k /= p as usize;
        }
        if x.iter().find(|&&v| v != 0) != Some(&1) {
            continue;
        }
        let v: i64 = poly
            .iter()
            .map(|m| {
                let mut t = m.coefficient.rem_euclid(p);
                for (xi, &e) in x.iter().zip(&m.exponents) {
                    for _ in 0..e {
                        t = t * xi % p;
                    }
                }
                t
            })
            .sum();
        if v % p == 0 {
            count += 1;
        }
    }
    count
}

#[test]
fn unknown_variety_names_the_id() {
    let text = r#"{"variety_id": "no_such_thing", "primes": [3], "output_dir": "x", "operations": [{"op": "count"}]}"#;
    let m = RunManifest::from_json(text).unwrap();
    let err = run_manifest(&m, &scratch("unknown"), &load_catalog(), &CountOptions::default()).unwrap_err();
    assert!(err.to_string().contains("no_such_thing"), "{err}");
    assert!(!err.is_refusal());
}

#[test]
fn malformed_manifests_are_rejected() {
    assert!(RunManifest::from_json(r#"{"variety_id": "schoen_x"}"#).is_err());
    assert!(RunManifest::from_json(r#"{"variety_id": "schoen_x", "output_dir": "x", "operations": [{"op": "paint"}]}"#).is_err());
    let cat = load_catalog();
    let bad = [
        r#"{"variety_id": "schoen_x", "primes": [5], "output_dir": "x", "operations": [{"op": "trace", "b2": 1}]}"#,
        r#"{"variety_id": "schoen_x", "primes": [9], "output_dir": "x", "operations": [{"op": "count"}]}"#,
        r#"{"variety_id": "schoen_x", "primes": [3, 3], "output_dir": "x", "operations": [{"op": "count"}]}"#,
        r#"{"variety_id": "schoen_x", "primes": [], "output_dir": "x", "operations": [{"op": "count"}]}"#,
        r#"{"variety_id": "schoen_x", "primes": [3], "output_dir": "x", "operations": [{"op": "count"}, {"op": "count"}]}"#,
        r#"{"variety_id": "schoen_x", "primes": [3], "output_dir": "x", "operations": [{"op": "count", "twist": "nope"}]}"#,
        r#"{"variety_id": "schoen_x", "primes": [3, 7], "output_dir": "x", "operations": [{"op": "match", "recipe": {"kind": "nodal_hypersurface", "resolution": "big", "defect_class": null}, "form": "f25", "companion": "none", "calibration_prime": 11}]}"#,
    ];
    for text in bad {
        let m = RunManifest::from_json(text).unwrap();
        assert!(m.validate(&cat).is_err(), "{text}");
    }
}

#[test]
fn counting_two_primes_gives_two_records() {
    let dir = scratch("count");
    let text = format!(
        r#"{{"variety_id": "schoen_x", "primes": [3, 7], "output_dir": {:?}, "operations": [{{"op": "count"}}]}}"#,
        dir.join("out")
    );
    let path = dir.join("m.json");
    fs::write(&path, text).unwrap();
    let summary = run_manifest_file(&path, &load_catalog(), &CountOptions::default()).unwrap();
    assert!(!summary.mismatch);
    let lines = fs::read_to_string(dir.join("out/counts.jsonl")).unwrap();
    let records = read_records(&lines).unwrap();
    let cat = load_catalog();
    let x = cat.get("schoen_x").unwrap();
    assert_eq!(records.len(), 2);
    for (r, p) in records.iter().zip([3u64, 7]) {
        assert_eq!(r.p, p);
        assert_eq!(r.count, brute_projective(&x.equations[0], 5, p as i64));
    }
    assert!(lines.lines().all(|l| l.contains("\"provenance\"")));
}

#[test]
fn schoen_manifest_reports_a_match() {
    let dir = scratch("schoen");
    let summary = run_shipped("schoen_match.json", &dir).unwrap();
    assert!(!summary.mismatch);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("match.json")).unwrap()).unwrap();
    assert_eq!(report["overall"], true);
    assert_eq!(report["calibration_prime"], 11);
    assert_eq!(report["rows"].as_array().unwrap().len(), 8);
    let eta: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("eta.json")).unwrap()).unwrap();
    assert_eq!(eta["coefficients"][0], 1);
    assert_eq!(eta["coefficients"][30], 42);
    assert!(fs::read_to_string(dir.join("match_trace.csv")).unwrap().starts_with("p,N_p,b2,correction,t3,candidate_ap,match\n"));
}

#[test]
fn quotient_manifest_runs_every_operation() {
    let dir = scratch("quotient");
    let summary = run_shipped("quotient_match.json", &dir).unwrap();
    assert!(!summary.mismatch);
    let ops: Vec<&str> = summary.operations.iter().map(|o| o.op.as_str()).collect();
    assert_eq!(ops, ["match", "euler", "livne"]);
    let euler: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("euler.json")).unwrap()).unwrap();
    assert_eq!(euler["chi"], 168);
    assert_eq!(euler["steps"], serde_json::json!([-200, -75, -39, -37, -42, 168]));
    let livne: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("livne.json")).unwrap()).unwrap();
    assert_eq!(livne["cover"]["status"], "complete");
    assert!(!livne["provenance"].as_array().unwrap().is_empty());
}

#[test]
fn betti_fallback_manifest_reports_unmet_congruence() {
    let dir = scratch("betti211");
    run_shipped("quotient_betti_211.json", &dir).unwrap();
    let betti: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("betti.json")).unwrap()).unwrap();
    let r = &betti["reports"][0];
    assert_eq!(r["unique"], false);
    assert_eq!(r["candidates"], serde_json::json!([]));
    assert_eq!(r["congruence_met"], false);
}

fn without_wall_time(text: &str) -> String {
    text.lines()
        .map(|l| {
            let mut v: serde_json::Value = serde_json::from_str(l).unwrap();
            v.as_object_mut().unwrap().remove("wall_time");
            v.to_string()
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn rerunning_a_manifest_reproduces_outputs() {
    let a = scratch("rerun-a");
    let b = scratch("rerun-b");
    run_shipped("quotient_match.json", &a).unwrap();
    let mut m = RunManifest::load(shipped("quotient_match.json")).unwrap();
    m.output_dir = b.clone();
    m.threads = Some(3);
    run_manifest(&m, Path::new("."), &load_catalog(), &CountOptions::default()).unwrap();
    for name in ["match.json", "match_trace.csv", "euler.json", "livne.json", "summary.json"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let ca = fs::read_to_string(a.join("counts.jsonl")).unwrap();
    let cb = fs::read_to_string(b.join("counts.jsonl")).unwrap();
    assert_eq!(without_wall_time(&ca), without_wall_time(&cb));
}

#[test]
fn wrong_companion_is_a_mismatch() {
    let dir = scratch("mismatch");
    let mut m = RunManifest::load(shipped("quotient_match.json")).unwrap();
    m.output_dir = dir.clone();
    m.operations.truncate(1);
    if let frobtrace::manifest::Operation::Match { companion, .. } = &mut m.operations[0] {
        *companion = "zero".parse().unwrap();
    }
    // Without the companion no defect reproduces the calibration trace.
    let err = run_manifest(&m, Path::new("."), &load_catalog(), &CountOptions::default()).unwrap_err();
    assert_eq!(err.kind(), "falsified");
}

#[test]
fn series_expansion() {
    let e = expand_series(10, Some(1), None).unwrap();
    assert_eq!(e.lead_num, 1);
    assert_eq!(e.coefficients, vec![1, -1, -1, 0, 0, 1, 0, 1, 0, 0]);
    let f = expand_series(6, None, Some(FormId::F25)).unwrap();
    assert_eq!(f.coefficients, vec![1, 1, 7, -7, 0, 7]);
    assert!(expand_series(0, None, None).is_err());
}
