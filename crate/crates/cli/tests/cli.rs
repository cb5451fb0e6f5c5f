use std::io::Write;
use std::process::{Command, Output};

use bmepoly::exact::format_rational;
use bmepoly::solver::additive_matrix;
use bmepoly::trees::parse_newick;
use num::BigRational;
use serde_json::Value;

fn bmepoly(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bmepoly"))
        .args(args)
        .env("BMEPOLY_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> Value {
    let v: Value = serde_json::from_str(&stdout(out)).expect("valid JSON");
    assert_eq!(v["schema"], "bmepoly/1");
    v
}

fn write_phylip(rows: &[Vec<String>]) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "{}", rows.len()).unwrap();
    for (i, r) in rows.iter().enumerate() {
        writeln!(f, "t{} {}", i + 1, r.join(" ")).unwrap();
    }
    f
}

fn additive_file(newick: &str) -> tempfile::NamedTempFile {
    let t = parse_newick(newick).unwrap();
    let lengths: Vec<BigRational> = (0..t.edge_count())
        .map(|k| BigRational::new((3 + (k * 5) % 7).into(), 2.into()))
        .collect();
    let d = additive_matrix(&t, &lengths).unwrap();
    let n = t.n();
    let rows: Vec<Vec<String>> = (1..=n)
        .map(|i| (1..=n).map(|j| if i == j { "0".into() } else { format_rational(&d.get(i, j)) }).collect())
        .collect();
    write_phylip(&rows)
}

#[test]
fn solve_recovers_an_additive_tree() {
    let f = additive_file("((1,5),((2,8),3),(4,(6,7)));");
    let v = json(&bmepoly(&["solve", "--method", "bnb", "--format", "json", f.path().to_str().unwrap()]));
    assert_eq!(v["tree"], "(t1,(((t2,t8),t3),(t4,(t6,t7))),t5);");
    assert_eq!(v["n"], 8);
}

#[test]
fn exhaustive_and_bnb_agree() {
    let rows: Vec<Vec<String>> = (1..=7usize)
        .map(|i| {
            (1..=7usize)
                .map(|j| if i == j { 0 } else { (i * j * 7 + i.min(j) * 13) % 23 + 1 })
                .map(|v| v.to_string())
                .collect()
        })
        .collect();
    let f = write_phylip(&rows);
    let p = f.path().to_str().unwrap();
    let a = json(&bmepoly(&["solve", "--method", "exhaustive", "--format", "json", p]));
    let b = json(&bmepoly(&["solve", "--format", "json", "--threshold", "4", "--log", p]));
    assert_eq!(a["value_x"], b["value_x"]);
    assert!(a["ties"].as_array().unwrap().contains(&b["tree"]));
    assert!(!b["log"].as_array().unwrap().is_empty());
}

#[test]
fn solve_default_output_and_three_taxa() {
    let f = write_phylip(&[
        vec!["0".into(), "1".into(), "2".into()],
        vec!["1".into(), "0".into(), "3".into()],
        vec!["2".into(), "3".into(), "0".into()],
    ]);
    let out = stdout(&bmepoly(&["solve", f.path().to_str().unwrap()]));
    let (first, rest) = out.split_once('\n').unwrap();
    assert_eq!(first, "(t1,t2,t3);");
    let v: Value = serde_json::from_str(rest).unwrap();
    assert_eq!(v["value_x"], "6");
}

#[test]
fn malformed_matrices_name_the_cell() {
    let f = write_phylip(&[
        vec!["0".into(), "1".into(), "2".into()],
        vec!["1".into(), "0".into(), "3".into()],
        vec!["2".into(), "4".into(), "0".into()],
    ]);
    let out = bmepoly(&["solve", f.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("(2,3)"));
    let neg = write_phylip(&[
        vec!["0".into(), "-1".into(), "2".into()],
        vec!["-1".into(), "0".into(), "3".into()],
        vec!["2".into(), "3".into(), "0".into()],
    ]);
    let out = bmepoly(&["solve", neg.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("(1,2)"));
}

#[test]
fn stats_reports_the_facet_table() {
    let v = json(&bmepoly(&["stats", "-n", "6", "--verify", "--format", "json"]));
    let fam = v["families"].as_array().unwrap();
    let counts: Vec<&str> = fam.iter().map(|f| f["count"].as_str().unwrap()).collect();
    assert_eq!(counts, ["15", "60", "10"]);
    let tight: Vec<u64> = fam.iter().map(|f| f["tight_observed"][0].as_u64().unwrap()).collect();
    assert_eq!(tight, [24, 30, 9]);
    let big = json(&bmepoly(&["stats", "-n", "20", "--format", "json"]));
    let want = (1u64 << 19) - 190 - 21;
    assert_eq!(big["split_facet_total"], want.to_string());
}

#[test]
fn certify_single_trees_and_errors() {
    let v = json(&bmepoly(&["certify", "((1,2),(3,4),(5,6));", "--format", "json"]));
    assert_eq!((v["formula_count"].as_u64(), v["dimension"].as_u64()), (Some(24), Some(9)));
    assert_eq!(v["certified"], true);
    let v = json(&bmepoly(&["certify", "((1,2),3,(4,(5,6)));", "--format", "json"]));
    assert_eq!(v["formula_count"], 21);
    assert_eq!(bmepoly(&["certify", "((1,2),3,4,(5,6));"]).status.code(), Some(3));
    assert_eq!(bmepoly(&["certify", "--all", "-n", "9"]).status.code(), Some(4));
}

#[test]
fn certify_all_reports_every_tree() {
    let v = json(&bmepoly(&["certify", "--all", "-n", "6", "--format", "json"]));
    assert_eq!((v["trees"].as_u64(), v["certified"].as_u64()), (Some(105), Some(105)));
    assert_eq!(v["count_agrees"], 105);
}

#[test]
fn phi_images_and_fibers() {
    assert_eq!(stdout(&bmepoly(&["phi", "(({1},{2}),{3})", "--root", "4"])).trim(), "(1,2,(3,4));");
    assert_eq!(stdout(&bmepoly(&["phi", "({1,2,3})", "--root", "4"])).trim(), "(1,2,3,4);");
    let v = json(&bmepoly(&["phi", "--fibers", "-n", "5", "--format", "json"]));
    let fibers = v["fibers"].as_array().unwrap();
    assert_eq!(fibers.len(), 15);
    assert!(fibers.iter().all(|f| f["size"] == 8));
    assert_eq!(bmepoly(&["phi", "(({1},{2})"]).status.code(), Some(3));
}

#[test]
fn facets_listing_and_tight_sets() {
    let out = stdout(&bmepoly(&["facets", "-n", "6", "--family", "split"]));
    let lines: Vec<&str> = out.lines().filter(|l| l.starts_with("split")).collect();
    assert_eq!(lines.len(), 10);
    assert!(lines.iter().all(|l| l.ends_with("<= 16")));
    let v = json(&bmepoly(&["facets", "-n", "6", "--tight", "((1,2),(3,4),(5,6));", "--format", "json"]));
    assert_eq!((v["tight_facets"].as_u64(), v["tight_cherry_clade"].as_u64()), (Some(24), Some(3)));
    let v = json(&bmepoly(&["facets", "-n", "5", "--family", "cyclic", "--format", "json"]));
    let qs = v["inequalities"].as_array().unwrap();
    assert_eq!(qs.len(), 12);
    assert!(qs.iter().all(|q| q["rhs"] == "13"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(bmepoly(&["stats"]).status.code(), Some(2));
    assert_eq!(bmepoly(&["nonsense"]).status.code(), Some(2));
}

#[test]
fn output_is_deterministic_across_thread_counts() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_bmepoly"))
            .args(["phi", "--fibers", "-n", "5", "--format", "json", "--threads", threads])
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(run("1"), run("4"));
}
