use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

const PACK: &str = r#"
[[scenario]]
id = "null"
model = "null"
p = 0.3
r = 250
s = 250

[[scenario]]
id = "rec"
model = "rec"
f0 = 0.01
f2 = 0.03
p = 0.3
r = 250
s = 250
"#;

fn write_pack(name: &str, text: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_casecontrol"));
    cmd.args(args);
    if let Some(n) = threads {
        cmd.env("RAYON_NUM_THREADS", n);
    }
    cmd.output().unwrap()
}

fn run_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_casecontrol"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Data rows of a CSV document, without the provenance header.
fn records(text: &str) -> Vec<csv::StringRecord> {
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    csv::Reader::from_reader(body.as_bytes()).records().map(Result::unwrap).collect()
}

fn power_args(pack: &Path) -> Vec<String> {
    ["power", "--scenarios", pack.to_str().unwrap(), "--seed", "42", "--b-null", "4000", "--b-power", "1000"]
        .map(String::from)
        .to_vec()
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let pack = write_pack("rerun.toml", PACK);
    let args = power_args(&pack);
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    let first = stdout(&run(&args, Some("1")));
    assert_eq!(first, stdout(&run(&args, Some("1"))));
    assert_eq!(first, stdout(&run(&args, Some("4"))));
    assert!(first.contains("# seed: 42\n"));
    assert!(first.contains("# scenarios_sha256: "));
}

#[test]
fn filtering_a_pack_does_not_change_results() {
    let pack = write_pack("filter.toml", PACK);
    let args = power_args(&pack);
    let mut only = args.clone();
    only.extend(["--only".into(), "rec".into()]);
    let all = records(&stdout(&run(&args.iter().map(String::as_str).collect::<Vec<_>>(), None)));
    let rec = records(&stdout(&run(&only.iter().map(String::as_str).collect::<Vec<_>>(), None)));
    let from_all: Vec<_> = all.into_iter().filter(|r| &r[0] == "rec").collect();
    assert_eq!(from_all, rec);
}

#[test]
fn analyze_reports_malformed_lines_and_fails() {
    let out = run_stdin(&["analyze"], "10 20 30 30 20 10\n1 2\n");
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn analyze_worked_example() {
    let out = stdout(&run_stdin(&["analyze", "--battery", "Z0,Z_HALF,MAX3,CHI2_2DF"], "10,20,30,30,20,10\n"));
    let rows = records(&out);
    let value = |q: &str| rows.iter().find(|r| &r[1] == q).unwrap()[2].parse::<f64>().unwrap();
    assert!((value("Z0") - 15f64.sqrt()).abs() < 1e-12);
    assert!((value("MAX3") - 20f64.sqrt()).abs() < 1e-12);
    assert!((value("CHI2_2DF") - 20.0).abs() < 1e-12);
}

#[test]
fn invalid_allele_frequency_is_rejected() {
    let pack = write_pack("bad.toml", &PACK.replace("p = 0.3\nr = 250\ns = 250\n\n[[scenario]]", "p = 1.2\nr = 250\ns = 250\n\n[[scenario]]"));
    let out = run(&["power", "--scenarios", pack.to_str().unwrap(), "--seed", "1"], None);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("`null`") && err.contains("1.2"), "{err}");
}

#[test]
fn crosstab_of_a_statistic_with_itself_is_diagonal() {
    let pack = write_pack("diag.toml", PACK);
    let out = stdout(&run(
        &[
            "crosstab", "--scenarios", pack.to_str().unwrap(), "--seed", "5", "--b-null", "4000", "--b-power",
            "800", "--stat-a", "MAX3", "--stat-b", "MAX3",
        ],
        None,
    ));
    for scenario in ["null", "rec"] {
        let rows: Vec<_> = records(&out).into_iter().filter(|r| &r[0] == scenario).collect();
        let total: u64 = rows.iter().map(|r| r[5].parse::<u64>().unwrap()).sum();
        assert_eq!(total, 800);
        for r in &rows {
            if r[3] != r[4] {
                assert_eq!(&r[5], "0", "{r:?}");
            }
        }
    }
}

#[test]
fn max3_p_values_are_smaller_than_chi2_under_additive() {
    let pack = write_pack("direction.toml", &PACK.replace("\"rec\"", "\"add\"").replace("f2 = 0.03", "f2 = 0.02"));
    let out = stdout(&run(
        &[
            "crosstab", "--scenarios", pack.to_str().unwrap(), "--only", "add", "--seed", "8", "--b-null", "20000",
            "--b-power", "2000",
        ],
        None,
    ));
    let bins = ["<0.01", "[0.01,0.05)", "[0.05,0.1)", ">=0.1"];
    let bin = |label: &str| bins.iter().position(|b| *b == label).unwrap();
    let (mut upper, mut lower) = (0u64, 0u64);
    for r in records(&out) {
        let count: u64 = r[5].parse().unwrap();
        match bin(&r[3]).cmp(&bin(&r[4])) {
            std::cmp::Ordering::Less => upper += count,
            std::cmp::Ordering::Greater => lower += count,
            std::cmp::Ordering::Equal => {}
        }
    }
    assert!(upper > lower, "{upper} vs {lower}");
}

#[test]
fn json_output_parses() {
    let pack = write_pack("json.toml", PACK);
    let out = stdout(&run(
        &["corr", "--scenarios", pack.to_str().unwrap(), "--seed", "3", "--b-power", "500", "--format", "json"],
        None,
    ));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["provenance"]["seed"], 3);
    assert_eq!(v["results"].as_array().unwrap().len(), 2);
}
