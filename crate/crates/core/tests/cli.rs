use std::path::PathBuf;

use fieldcomm::cli::{read_documents, run_with, TraceDocument};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn run(args: &[&str]) -> (i32, String, String) {
    let argv = std::iter::once("fieldcomm")
        .chain(args.iter().copied())
        .map(String::from);
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run_with(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fieldcomm-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn derive_pp_ends_in_zero() {
    let (code, out, _) = run(&["derive", "pp"]);
    assert_eq!(code, 0);
    assert!(out.trim_end().ends_with("result: 0"), "{out}");
    assert_eq!(
        out,
        std::fs::read_to_string(fixture("momentum_momentum.txt")).unwrap()
    );
}

#[test]
fn derive_pp_with_charges_is_a_residual() {
    let (code, out, _) = run(&["derive", "pp", "--charges"]);
    assert_eq!(code, 2);
    let last = out.lines().last().unwrap();
    assert!(last.starts_with("residual: "), "{last}");
    assert_eq!(last.matches("int(x)").count(), 2, "{last}");
}

#[test]
fn output_is_deterministic() {
    assert_eq!(run(&["derive", "jp"]).1, run(&["derive", "jp"]).1);
}

#[test]
fn ordering_oracle_rectangle() {
    let (code, out, _) = run(&["oracle", "ordering", "--family", "rectangle", "--a", "0.01"]);
    assert_eq!(code, 0);
    assert!(out.contains("transverse 100.000000000000"), "{out}");
    assert!(out.contains("axis integral 0.000e0"), "{out}");
}

#[test]
fn oracle_defaults_pass() {
    for check in ["flip", "ibp", "ordering"] {
        let (code, out, err) = run(&["oracle", check]);
        assert_eq!(code, 0, "{check}: {out}{err}");
    }
    let (code, _, err) = run(&["oracle", "flip", "--grid", "256"]);
    assert_eq!(code, 1);
    assert!(err.contains("grid too coarse"), "{err}");
}

#[test]
fn usage_errors() {
    assert_eq!(run(&["frobnicate"]).0, 64);
    assert_eq!(run(&["derive", "pp", "--fast"]).0, 64);
    assert_eq!(run(&["derive", "qq"]).0, 64);
    let (code, _, err) = run(&[]);
    assert_eq!(code, 64);
    assert!(err.contains("Usage"), "{err}");
}

#[test]
fn parse_errors_report_the_position() {
    let (code, _, err) = run(&["canon", "E[1](x"]);
    assert_eq!(code, 65);
    assert!(err.contains("byte 6"), "{err}");
    assert!(err.contains("        ^"), "{err}");
}

#[test]
fn canon_reads_files_and_text() {
    let (code, out, _) = run(&["canon", fixture("epsilon_pair.txt").to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(out.trim(), "-eps[i,l,j]*eps[n,s,j]");
    let (_, out, _) = run(&[
        "canon",
        "I*hbar*eps0*int(x)(E[1](x)*B[2](x) - E[2](x)*B[1](x))",
    ]);
    assert_eq!(
        out,
        std::fs::read_to_string(fixture("angular_momentum_rhs.txt")).unwrap()
    );
    let (_, out, _) = run(&["canon", "--concrete", "eps[1,k,l]*eps[k,2,l]"]);
    assert_eq!(out.trim(), "0");
}

#[test]
fn check_compares_and_enumerates() {
    assert_eq!(run(&["check", "E[1](x)*B[2](y)", "B[2](y)*E[1](x)"]).0, 2);
    assert_eq!(
        run(&["check", "eps[i,j,k]*E[k](x)", "-eps[j,i,k]*E[k](x)"]).0,
        0
    );
    let (code, out, _) = run(&[
        "check",
        "--enumerate",
        "eps[i,j,k]*eps[k,m,n]",
        "delta[i,m]*delta[j,n] - delta[i,n]*delta[j,m]",
    ]);
    assert_eq!(code, 0);
    assert!(out.contains("81"), "{out}");
    let (code, out, _) = run(&[
        "check",
        "--enumerate",
        "eps[i,j,k]*eps[k,m,n]",
        "delta[i,n]*delta[j,m] - delta[i,m]*delta[j,n]",
    ]);
    assert_eq!(code, 2);
    assert!(out.starts_with("counterexample"), "{out}");
}

#[test]
fn json_traces_replay() {
    for which in ["pp", "jp", "jj", "ordering"] {
        for charges in [false, true] {
            let path = scratch(&format!("{which}-{charges}.json"));
            let mut args = vec!["derive", which, "--json", path.to_str().unwrap()];
            if charges {
                args.push("--charges");
            }
            run(&args);
            let docs = read_documents(&path).unwrap();
            assert_eq!(docs.len(), 1);
            let check = docs[0].replay().unwrap();
            assert!(check.ok(), "{which} charges={charges}: {check:?}");
        }
    }
}

#[test]
fn tampered_trace_fails_replay() {
    let mut doc = read_documents(&fixture("momentum_momentum.json"))
        .unwrap()
        .remove(0);
    assert!(doc.replay().unwrap().ok());
    let n = doc.steps.len() - 2;
    doc.steps[n].expr_text = format!("-({})", doc.steps[n].expr_text);
    assert_eq!(doc.replay().unwrap().diverges_at, Some(n));

    let mut doc = read_documents(&fixture("momentum_momentum.json"))
        .unwrap()
        .remove(0);
    doc.verdict.kind = "residual".into();
    doc.verdict.residual = Some("I*hbar*eps0*int(x)(E[1](x)*B[2](x))".into());
    assert!(!doc.replay().unwrap().verdict_agrees);
}

#[test]
fn golden_trace_documents() {
    for (which, file) in [
        ("pp", "momentum_momentum.json"),
        ("jp", "angular_momentum.json"),
    ] {
        let path = scratch(file);
        run(&["derive", which, "--json", path.to_str().unwrap()]);
        let now = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            now,
            std::fs::read_to_string(fixture(file)).unwrap(),
            "{which}"
        );
    }
}

#[test]
fn unknown_fields_are_ignored() {
    let text = std::fs::read_to_string(fixture("momentum_momentum.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["added_later"] = serde_json::json!({"anything": 1});
    let doc: TraceDocument = serde_json::from_value(v).unwrap();
    assert!(doc.replay().unwrap().ok());
}

#[test]
fn latex_from_trace() {
    let (code, out, _) = run(&["latex", fixture("momentum_momentum.json").to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(
        out,
        std::fs::read_to_string(fixture("momentum_momentum.tex")).unwrap()
    );
    let blocks = out.matches("\\begin{align*}").count();
    let doc = read_documents(&fixture("momentum_momentum.json"))
        .unwrap()
        .remove(0);
    // the input plus one block per step
    assert_eq!(blocks, doc.steps.len() + 1);
    assert!(out
        .trim_end()
        .trim_end_matches("\\end{document}")
        .trim_end()
        .ends_with("&0\n\\end{align*}"));
}

#[test]
fn derive_all_writes_every_document() {
    let path = scratch("all.json");
    let tex = scratch("all.tex");
    let (code, _, _) = run(&[
        "derive",
        "all",
        "--json",
        path.to_str().unwrap(),
        "--latex",
        tex.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let docs = read_documents(&path).unwrap();
    let names: Vec<_> = docs.iter().map(|d| d.derivation.as_str()).collect();
    assert_eq!(names, ["PP", "JP", "JJ", "ORDERING"]);
    assert_eq!(
        std::fs::read_to_string(&tex)
            .unwrap()
            .matches("\\section*")
            .count(),
        4
    );
}
