use std::path::{Path, PathBuf};
use std::process::Command;

use kakeya_core::discrete_kakeya::{MinReport, RatioRow, VerifyReport};
use kakeya_core::euclid::{AreaEstimate, CoverCertificate, ElongationReport, MembershipReport};
use kakeya_core::homog::{GreatCircleCurve, Liftability, SphereLift, SweptReport};
use kakeya_core::liegroups::{GroupCoverCertificate, LiftReport};
use kakeya_core::topo_zero::ZeroCertificate;
use kakeya_lab::output::{Document, RunManifest};
use kakeya_lab::{run, CounterexampleReport, LiftFailure};
use proptest::prelude::*;
use serde::de::DeserializeOwned;
use tempfile::TempDir;

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name).display().to_string()
}

fn bin(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_kakeya-lab")).args(args).output().expect("binary runs");
    (out.status.code().expect("exit code"), String::from_utf8_lossy(&out.stdout).into_owned())
}

/// Runs in-process with `--out` into `dir` and returns the exit code and
/// document, if one was written.
fn run_doc(dir: &Path, args: &[&str]) -> (i32, Option<Document>) {
    let out = dir.join(format!("run{}.json", rand_suffix()));
    let mut argv = vec!["kakeya-lab".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    argv.push("--out".into());
    argv.push(out.display().to_string());
    let code = run(&argv);
    let doc = std::fs::read(&out).ok().map(|b| serde_json::from_slice(&b).expect("valid document"));
    (code, doc)
}

fn rand_suffix() -> u64 {
    use std::sync::atomic::{AtomicU64, Ordering};
    static N: AtomicU64 = AtomicU64::new(0);
    N.fetch_add(1, Ordering::Relaxed)
}

fn result<T: DeserializeOwned>(doc: &Document) -> T {
    serde_json::from_value(doc.result.clone()).expect("result matches its schema")
}

#[test]
fn cover_example_exits_zero() {
    let (code, stdout) = bin(&["cover", "--spec", &data("trig2.json"), "--target", "0,0"]);
    assert_eq!(code, 0);
    let doc: Document = serde_json::from_str(&stdout).unwrap();
    let cert: CoverCertificate = result(&doc);
    assert!(cert.is_covered());
    assert!(cert.residual <= 1e-9);
    assert_eq!(doc.manifest.subcommand, "cover");
}

#[test]
fn discrete_min_example() {
    let (code, stdout) = bin(&["discrete-min", "--group", "Z3xZ3"]);
    assert_eq!(code, 0);
    let doc: Document = serde_json::from_str(&stdout).unwrap();
    let r: MinReport = result(&doc);
    assert_eq!((r.min_size, r.ratio_exact.as_str(), r.optimal), (7, "7/9", true));
}

#[test]
fn membership_inside_tangent_circle_exits_two() {
    let (code, stdout) = bin(&["membership", "--spec", &data("tangent_circle_C1.json"), "--target", "0,0.5"]);
    assert_eq!(code, 2);
    let doc: Document = serde_json::from_str(&stdout).unwrap();
    let r: MembershipReport = result(&doc);
    assert!(!r.covered);
}

#[test]
fn parse_errors_and_help() {
    assert_eq!(bin(&["no-such-command"]).0, 1);
    assert_eq!(bin(&["cover", "--spec", &data("trig2.json")]).0, 1);
    assert_eq!(bin(&["--help"]).0, 0);
    assert_eq!(bin(&["--version"]).0, 0);
}

#[test]
fn thread_variable_is_validated() {
    let status = |v: &str| {
        Command::new(env!("CARGO_BIN_EXE_kakeya-lab"))
            .args(["discrete-min", "--group", "Z4"])
            .env("KAKEYA_LAB_THREADS", v)
            .output()
            .unwrap()
            .status
            .code()
            .unwrap()
    };
    assert_eq!(status("2"), 0);
    assert_eq!(status("0"), 1);
    assert_eq!(status("many"), 1);
}

/// An invocation, its expected exit code and a check that the result parses
/// as the owning type.
type Case = (Vec<String>, i32, fn(&Document));

fn cases() -> Vec<Case> {
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    vec![
        (s(&["zero", "--spec", &data("trig2.json")]), 0, |d| {
            assert!(result::<Option<ZeroCertificate>>(d).is_some());
        }),
        (s(&["zero", "--spec", &data("sphere_identity.json")]), 0, |d| {
            assert!(result::<Option<ZeroCertificate>>(d).is_some());
        }),
        (s(&["cover", "--spec", &data("trig2.json"), "--target", "-3.5,2"]), 0, |d| {
            assert!(result::<CoverCertificate>(d).is_covered());
        }),
        (s(&["lie-cover", "--spec", &data("heisenberg.json"), "--target", "1,-2,3"]), 0, |d| {
            assert!(result::<GroupCoverCertificate>(d).residual <= 1e-8);
        }),
        (s(&["lie-cover", "--spec", &data("torus_loop.json"), "--target", "1,2"]), 0, |d| {
            assert!(result::<GroupCoverCertificate>(d).lift.is_some());
        }),
        (s(&["cylinder-id", "--spec", &data("cylinder_one.json")]), 0, |d| {
            assert!(result::<GroupCoverCertificate>(d).is_covered());
        }),
        (s(&["torus-wind", "--spec", &data("torus_loop.json")]), 0, |d| {
            result::<LiftReport>(d);
        }),
        (s(&["counterexample", "--samples", "50"]), 0, |d| {
            let r: CounterexampleReport = result(d);
            assert!(r.holds && (r.line_distance - 1.0).abs() <= 1e-9);
        }),
        (s(&["membership", "--spec", &data("zero_needles.json"), "--target", "0.4,0", "--R", "1"]), 0, |d| {
            assert!(result::<MembershipReport>(d).covered);
        }),
        (s(&["membership", "--spec", &data("zero_needles.json"), "--target", "0.6,0", "--R", "1"]), 2, |d| {
            assert!(!result::<MembershipReport>(d).covered);
        }),
        (s(&["membership", "--spec", &data("sphere_cap.json"), "--target", "0,1,0"]), 0, |d| {
            assert!(result::<SweptReport>(d).covered);
        }),
        (s(&["elongation", "--spec", &data("trig2.json"), "--target", "2,1"]), 0, |d| {
            assert!(matches!(result::<ElongationReport>(d), ElongationReport::RequiredLength(_)));
        }),
        (s(&["elongation", "--spec", &data("zero_needles.json"), "--R", "2", "--samples", "5000"]), 0, |d| {
            assert!(matches!(result::<ElongationReport>(d), ElongationReport::Area(_)));
        }),
        (s(&["needle-area", "--spec", &data("zero_needles.json"), "--R", "0.5,1", "--samples", "5000"]), 0, |d| {
            assert_eq!(result::<Vec<AreaEstimate>>(d).len(), 2);
        }),
        (s(&["discrete-min", "--group", "Q8"]), 0, |d| {
            assert!(result::<MinReport>(d).optimal);
        }),
        (s(&["discrete-min", "--group", "Z3^3", "--budget-ms", "0", "--require-optimal"]), 2, |d| {
            assert!(!result::<MinReport>(d).optimal);
        }),
        (s(&["discrete-verify", "--group", "Z2xZ2", "--set", "0,1,2"]), 0, |d| {
            assert!(result::<VerifyReport>(d).ok);
        }),
        (s(&["discrete-verify", "--group", "Z2xZ2", "--set", "1,2"]), 2, |d| {
            assert!(!result::<VerifyReport>(d).ok);
        }),
        (s(&["ratio-table", "--group", "Z4,S3"]), 0, |d| {
            assert_eq!(result::<Vec<RatioRow>>(d).len(), 2);
        }),
        (s(&["degree", "--spec", &data("sphere_identity.json")]), 0, |d| {
            assert_eq!(result::<Liftability>(d).degree.degree, 1);
        }),
        (s(&["degree", "--spec", &data("sphere_identity.json"), "--depth", "0"]), 2, |d| {
            assert_eq!(result::<Liftability>(d).liftable(), None);
        }),
        (s(&["quotient-plot", "--axis", "0,0,1", "--base", "1,0,0"]), 0, |d| {
            assert!(result::<GreatCircleCurve>(d).great_circle);
        }),
        (s(&["lift", "--spec", &data("sphere_cap.json"), "--omitted", "0,0,-1", "--depth", "3"]), 0, |d| {
            assert!(result::<SphereLift>(d).max_residual <= 1e-9);
        }),
        (s(&["lift", "--spec", &data("sphere_identity.json"), "--omitted", "0,0,1", "--depth", "3"]), 2, |d| {
            assert!(!result::<LiftFailure>(d).lifted);
        }),
    ]
}

fn strip_timing(mut v: serde_json::Value) -> serde_json::Value {
    if let Some(o) = v.as_object_mut() {
        o.remove("elapsed_ms");
    }
    v
}

#[test]
fn every_subcommand_round_trips() {
    let dir = TempDir::new().unwrap();
    let mut seen = std::collections::BTreeSet::new();
    for (args, want, check) in cases() {
        let argv: Vec<&str> = args.iter().map(String::as_str).collect();
        let (code, doc) = run_doc(dir.path(), &argv);
        assert_eq!(code, want, "{args:?}");
        let doc = doc.unwrap_or_else(|| panic!("no document for {args:?}"));
        check(&doc);
        seen.insert(doc.manifest.subcommand.clone());

        // the manifest alone reproduces the run
        let rerun: Vec<&str> = doc.manifest.args.iter().map(String::as_str).take_while(|a| *a != "--out").collect();
        let (code2, doc2) = run_doc(dir.path(), &rerun);
        assert_eq!(code2, want);
        assert_eq!(strip_timing(doc.result), strip_timing(doc2.unwrap().result), "{args:?}");
    }
    assert_eq!(seen.len(), 15, "{seen:?}");
}

#[test]
fn seeded_runs_agree() {
    let dir = TempDir::new().unwrap();
    let args = ["needle-area", "--spec", &data("tangent_circle_C1.json"), "--R", "inf", "--box", "-2,2,-2,2", "--samples", "4000", "--seed", "11"];
    let a = run_doc(dir.path(), &args).1.unwrap();
    let b = run_doc(dir.path(), &args).1.unwrap();
    assert_eq!(a.result, b.result);
    assert_eq!(a.manifest.seed, Some(11));
    let mut other = args.to_vec();
    other[10] = "12";
    let c = run_doc(dir.path(), &other).1.unwrap();
    assert_ne!(a.result, c.result);
}

#[test]
fn artifacts_carry_manifests() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("ratios.csv");
    let svg = dir.path().join("cover.svg");
    let (code, _) = run_doc(dir.path(), &["ratio-table", "--group", "Z2xZ2,Z3xZ3", "--csv", csv.to_str().unwrap()]);
    assert_eq!(code, 0);
    let mut rd = csv::Reader::from_path(&csv).unwrap();
    let rows: Vec<RatioRow> = rd.deserialize().collect::<Result<_, _>>().unwrap();
    assert_eq!(rows.iter().map(|r| r.min_size).collect::<Vec<_>>(), vec![3, 7]);
    let side: PathBuf = kakeya_lab::output::sidecar(&csv);
    let m: RunManifest = serde_json::from_slice(&std::fs::read(side).unwrap()).unwrap();
    assert_eq!(m.subcommand, "ratio-table");
    assert!(m.outputs.iter().any(|o| o.ends_with("ratios.csv")));

    let (code, _) = run_doc(dir.path(), &["cover", "--spec", &data("trig2.json"), "--target", "1,1", "--plot", svg.to_str().unwrap()]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(&svg).unwrap();
    let start = text.find("<![CDATA[").unwrap() + 9;
    let end = text.find("]]></metadata>").unwrap();
    let m: RunManifest = serde_json::from_str(&text[start..end]).unwrap();
    assert_eq!(m.subcommand, "cover");
    assert!(m.spec_hash.is_some());
}

#[test]
fn unsupported_artifacts_are_input_errors() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("x.csv");
    let (code, doc) = run_doc(dir.path(), &["degree", "--spec", &data("sphere_identity.json"), "--csv", csv.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(doc.is_none() && !csv.exists());
}

/// Builds an invalid invocation of subcommand `k`.
fn broken(k: usize, bad_file: &str, tol: f64) -> Vec<String> {
    let tol = tol.to_string();
    let (trig, needles, cyl) = (data("trig2.json"), data("zero_needles.json"), data("cylinder_one.json"));
    let v: Vec<&str> = match k {
        0 => vec!["zero", "--spec", bad_file],
        1 => vec!["cover", "--spec", &trig, "--target", "0,0", "--tol", &tol],
        2 => vec!["lie-cover", "--spec", bad_file, "--target", "0,0,0"],
        3 => vec!["cylinder-id", "--spec", &cyl, "--tol", &tol],
        4 => vec!["torus-wind", "--spec", bad_file],
        5 => vec!["counterexample", "--samples", "3", "--tol", &tol],
        6 => vec!["membership", "--spec", &needles, "--target", "0,0", "--tol", &tol],
        7 => vec!["elongation", "--spec", &trig, "--target", "1,1", "--tol", &tol],
        8 => vec!["needle-area", "--spec", &needles, "--tol", &tol],
        9 => vec!["discrete-min", "--group", bad_file],
        10 => vec!["discrete-verify", "--group", "Z4", "--set", "0,x"],
        11 => vec!["ratio-table", "--group", "Z4,W9"],
        12 => vec!["degree", "--spec", bad_file],
        13 => vec!["quotient-plot", "--axis", "0,0,0"],
        _ => vec!["lift", "--spec", bad_file, "--omitted", "0,0,1"],
    };
    v.into_iter().map(str::to_string).collect()
}

/// Does `set ⊆ Z_n` contain a coset of every subgroup `dZ_n`?
fn cyclic_kakeya(n: usize, set: &[bool]) -> bool {
    (1..=n).filter(|d| n.is_multiple_of(*d)).all(|d| (0..d).any(|a| (0..n / d).all(|k| set[(a + k * d) % n])))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn input_errors_exit_one(k in 0usize..15, junk in "[a-z{}\\[\\]:,\" ]{0,40}", tol in prop_oneof![Just(0.0), -10.0f64..0.0]) {
        let dir = TempDir::new().unwrap();
        let bad = dir.path().join("bad.json");
        std::fs::write(&bad, format!("{{\"kind\": {junk}")).unwrap();
        let args = broken(k, bad.to_str().unwrap(), tol);
        let argv: Vec<&str> = args.iter().map(String::as_str).collect();
        let (code, doc) = run_doc(dir.path(), &argv);
        prop_assert_eq!(code, 1, "{:?}", args);
        prop_assert!(doc.is_none());
    }

    #[test]
    fn segment_membership_exit_codes(x in -2.0f64..2.0, y in -2.0f64..2.0, r in 0.2f64..3.0) {
        let d = x.hypot(y);
        prop_assume!((d - r / 2.0).abs() > 1e-6);
        let dir = TempDir::new().unwrap();
        let target = format!("{x},{y}");
        let rs = r.to_string();
        let (code, _) = run_doc(dir.path(), &["membership", "--spec", &data("zero_needles.json"), "--target", &target, "--R", &rs]);
        prop_assert_eq!(code, if d <= r / 2.0 { 0 } else { 2 });
    }

    #[test]
    fn verify_exit_codes_match_coset_oracle(n in 1usize..13, bits in any::<u16>()) {
        let set: Vec<bool> = (0..n).map(|i| bits >> i & 1 == 1).collect();
        let list: Vec<String> = (0..n).filter(|&i| set[i]).map(|i| i.to_string()).collect();
        prop_assume!(!list.is_empty());
        let dir = TempDir::new().unwrap();
        let group = format!("Z{n}");
        let (code, _) = run_doc(dir.path(), &["discrete-verify", "--group", &group, "--set", &list.join(",")]);
        prop_assert_eq!(code, if cyclic_kakeya(n, &set) { 0 } else { 2 });
    }

    #[test]
    fn unoriented_planar_cover_always_exits_zero(x in -10.0f64..10.0, y in -10.0f64..10.0) {
        let dir = TempDir::new().unwrap();
        let target = format!("{x},{y}");
        let (code, doc) = run_doc(dir.path(), &["cover", "--spec", &data("trig2.json"), "--target", &target]);
        prop_assert_eq!(code, 0);
        let cert: CoverCertificate = result(&doc.unwrap());
        prop_assert!(cert.residual <= 1e-9);
    }
}

#[test]
fn group_from_table_file() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("klein.json");
    let table: Vec<Vec<usize>> = (0..4).map(|a| (0..4).map(|b| a ^ b).collect()).collect();
    std::fs::write(&file, serde_json::json!({"kind": "table", "table": table, "name": "V4"}).to_string()).unwrap();
    let (code, doc) = run_doc(dir.path(), &["discrete-min", "--group", file.to_str().unwrap()]);
    assert_eq!(code, 0);
    let r: MinReport = result(&doc.unwrap());
    assert_eq!((r.group.as_str(), r.min_size), ("V4", 3));

    std::fs::write(&file, r#"{"kind": "table", "table": [[0, 1], [0, 1]]}"#).unwrap();
    assert_eq!(run_doc(dir.path(), &["discrete-min", "--group", file.to_str().unwrap()]).0, 1);
}
