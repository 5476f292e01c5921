use std::path::PathBuf;
use std::process::Command;

use redip::cas::{parse_closed_form, ClosedForm, Resolver};
use redip::equivalence::{verify_compositional, CheckOptions, Verdict, Witness};
use redip::syntax::parse;
use serde_json::Value;

fn program(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("programs").join(name).display().to_string()
}

fn redip(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_redip")).args(args).output().expect("binary runs");
    (
        out.status.code().expect("exit code"),
        String::from_utf8(out.stdout).expect("utf-8"),
        String::from_utf8(out.stderr).expect("utf-8"),
    )
}

fn temp(contents: &str) -> tempfile::NamedTempFile {
    let f = tempfile::Builder::new().suffix(".redip").tempfile().unwrap();
    std::fs::write(f.path(), contents).unwrap();
    f
}

#[test]
fn check_exit_codes_on_the_corpus() {
    for (name, code) in [
        ("path_tracing.redip", 0),
        ("n_geometric.redip", 0),
        ("n_geometric_mutated.redip", 1),
        ("complementary_binomials.redip", 0),
        ("dueling_cowboys.redip", 0),
        ("geometric.redip", 0),
        ("dice_sum.redip", 0),
        ("knuth_yao.redip", 0),
        ("sequential_loops.redip", 0),
        ("nested_loops.redip", 2),
        ("one_over_pi.redip", 2),
        ("random_walk.redip", 2),
    ] {
        let (c, out, err) = redip(&["check", &program(name)]);
        assert_eq!(c, code, "{name}: {out}{err}");
        if code == 0 {
            assert_eq!(out.lines().last(), Some("Equal"), "{name}");
        }
    }
}

#[test]
fn separate_invariant_file() {
    let loop_only = temp("vars n, c;\nwhile (n > 0) { {n := n - 1} [1/2] {c := c + 1} }\n");
    let spec = temp("c += iid(geometric(1/2), n); n := 0\n");
    let (code, out, _) = redip(&["check", loop_only.path().to_str().unwrap(), "--invariant", spec.path().to_str().unwrap()]);
    assert_eq!(code, 0, "{out}");
    let (code, out, _) = redip(&[
        "check",
        loop_only.path().to_str().unwrap(),
        "--invariant",
        spec.path().to_str().unwrap(),
        "--assume-uast",
    ]);
    assert_eq!(code, 0);
    assert!(out.contains("denote the same distribution transformer"), "{out}");
}

#[test]
fn refutation_json_round_trips() {
    let path = program("n_geometric_mutated.redip");
    let (code, out, _) = redip(&["check", &path, "--format", "json"]);
    assert_eq!(code, 1);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["verdict"], "NotEqual");
    assert_eq!(v["witness_state"]["n"], 1);
    for key in ["verdict", "witness_state", "discrepancy", "closed_form", "timings_ms", "parameters"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    let p = parse(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let printed = v["discrepancy"].as_str().unwrap();
    let back = parse_closed_form(printed, &Resolver::new(&p.vars, &p.params)).unwrap();
    let direct = match &verify_compositional(&p, CheckOptions::default()).unwrap()[0].verdict {
        Verdict::NotEqual(Witness::Found(c)) => c.discrepancy.clone(),
        v => panic!("{v}"),
    };
    assert!(back.cf_equal(&direct));
}

#[test]
fn check_reports_non_rectangular_guards() {
    let (code, _, err) = redip(&["check", &program("one_over_pi.redip")]);
    assert_eq!(code, 2);
    assert!(err.contains("non-rectangular guard"), "{err}");
    let (code, _, err) = redip(&["check", &program("random_walk.redip")]);
    assert_eq!(code, 2);
    assert!(err.contains("algebraic PGF unsupported"), "{err}");
}

#[test]
fn queries_on_the_binomial_split() {
    let path = program("complementary_binomials.redip");
    let (code, out, err) = redip(&["query", &path, "--input", "C^10", "--q", "P[m>7 & n<3]"]);
    assert_eq!((code, out.trim()), (0, "7/128"), "{err}");
    let (_, out, _) = redip(&["query", &path, "--input", "C^10", "--q", "E[m^3+2*m*n+n^2]"]);
    assert_eq!(out.trim(), "235");
    let (_, out, _) = redip(&["query", &path, "--input", "C^10", "--q", "mass"]);
    assert_eq!(out.trim(), "1");
    let (code, out, _) = redip(&["query", &path, "--input", "C^10", "--q", "marginal[m]", "--format", "json"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    let m: ClosedForm = v["answers"][0]["result"].as_str().unwrap().parse().unwrap();
    assert!(m.cf_equal(&"(1/2 + 1/2*M)^10".parse().unwrap()));
    let g: ClosedForm = v["closed_form"].as_str().unwrap().parse().unwrap();
    assert!(g.cf_equal(&"(1/2*M + 1/2*N)^10".parse().unwrap()));
}

#[test]
fn query_moments_and_parameters() {
    let (_, out, _) = redip(&["query", &program("n_geometric.redip"), "--input", "N^5", "--q", "E[c]", "--q", "Var[c]"]);
    assert_eq!(out, "E[c] = 5\nVar[c] = 10\n");
    let cowboys = program("dueling_cowboys.redip");
    let (code, out, _) = redip(&["query", &cowboys, "--input", "C", "--q", "P[t = 0]", "--param", "a=1/2", "--param", "b=1/2"]);
    assert_eq!((code, out.trim()), (0, "2/3"));
    let (code, out, _) = redip(&["query", &cowboys, "--input", "C", "--q", "P[t = 0]"]);
    assert_eq!(code, 0);
    let symbolic = parse_closed_form(out.trim(), &Resolver::new(&["c", "t"], &["a", "b"])).unwrap();
    let expect = parse_closed_form("a/(a + b - a*b)", &Resolver::new(&["c", "t"], &["a", "b"])).unwrap();
    assert!(symbolic.cf_equal(&expect), "{out}");
    let (code, _, err) = redip(&["query", &cowboys, "--q", "mass", "--param", "z=1"]);
    assert_eq!(code, 2, "{err}");
}

#[test]
fn query_errors_exit_2() {
    let path = program("n_geometric.redip");
    let (code, _, err) = redip(&["query", &path, "--q", "median[c]"]);
    assert_eq!(code, 2);
    assert!(err.contains("malformed query"), "{err}");
    let (code, _, _) = redip(&["query", &path, "--input", "Q^2", "--q", "mass"]);
    assert_eq!(code, 2);
}

#[test]
fn expansions() {
    let geo = temp("vars c;\nc := geometric(1/2)\n");
    let (code, out, _) = redip(&["expand", geo.path().to_str().unwrap(), "--degree", "3"]);
    assert_eq!((code, out.trim()), (0, "1/2 + 1/4*C + 1/8*C^2 + 1/16*C^3"));
    let skip = temp("vars x;\nskip\n");
    let (_, out, _) = redip(&["expand", skip.path().to_str().unwrap(), "--input", "X", "--degree", "4"]);
    assert_eq!(out.trim(), "X");
    let (_, out, _) = redip(&["expand", &program("complementary_binomials.redip"), "--input", "C^2", "--degree", "2"]);
    assert_eq!(out.trim(), "1/4*M^2 + 1/2*M*N + 1/4*N^2");
}

#[test]
fn sampling_is_reproducible() {
    let path = program("knuth_yao.redip");
    let args = ["sample", &path, "--event", "die = 6", "--samples", "20000", "--seed", "3", "--format", "json"];
    let (code, a, _) = redip(&args);
    let (_, b, _) = redip(&args);
    assert_eq!(code, 0);
    let (va, vb): (Value, Value) = (serde_json::from_str(&a).unwrap(), serde_json::from_str(&b).unwrap());
    assert_eq!(va["estimates"], vb["estimates"]);
    assert!(va["algorithm"].as_str().unwrap().contains("ChaCha8"));
    let f: f64 = {
        let s = va["estimates"][0]["frequency"].as_str().unwrap();
        let (n, d) = s.split_once('/').unwrap();
        n.parse::<f64>().unwrap() / d.parse::<f64>().unwrap()
    };
    assert!((f - 1.0 / 6.0).abs() < 4.0 * va["estimates"][0]["stderr"].as_f64().unwrap());
    let (code, _, err) = redip(&["sample", &program("dueling_cowboys.redip"), "--input", "c=1"]);
    assert_eq!(code, 2);
    assert!(err.contains("--param a="), "{err}");
}

#[test]
fn parse_and_usage() {
    let (code, out, _) = redip(&["parse", &program("n_geometric.redip"), "--core"]);
    assert_eq!(code, 0);
    assert!(out.contains("while") && out.contains("# core"), "{out}");
    let reparsed = parse(out.split("\n# core").next().unwrap()).unwrap();
    let original = parse(&std::fs::read_to_string(program("n_geometric.redip")).unwrap()).unwrap();
    assert_eq!(reparsed.body, original.body);
    let (code, _, _) = redip(&["frobnicate"]);
    assert_eq!(code, 2);
    let (code, _, err) = redip(&["check", "/nonexistent.redip"]);
    assert_eq!(code, 2);
    assert!(err.contains("nonexistent"));
    let (code, out, _) = redip(&["--help"]);
    assert_eq!(code, 0);
    for cmd in ["check", "query", "sample", "expand", "parse"] {
        assert!(out.contains(cmd), "{cmd} missing from help");
    }
}
