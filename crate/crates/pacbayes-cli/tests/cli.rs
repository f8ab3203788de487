//! End-to-end tests of the binary: every result must be bit-identical to
//! the corresponding library call, JSON output must parse back to the same
//! structs, and malformed input must exit 1 with a diagnostic naming the
//! offending flag.

use std::io::Write as _;
use std::process::Command;

use pacbayes::anytime::{make_anytime, BetaSchedule};
use pacbayes::bounded::{self, BoundContext, Certificate};
use pacbayes::lab::{coverage_experiment, preset, PosteriorRule};
use pacbayes::{CoverageReport, NatsValue, Probability};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_pacbayes"));
    // Tests control the seed env explicitly; scrub any ambient value.
    cmd.env_remove("PACBAYES_SEED");
    cmd
}

fn run_ok(args: &[&str]) -> String {
    let out = bin().args(args).output().expect("binary runs");
    assert!(
        out.status.success(),
        "expected success for {args:?}, stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf-8 stdout")
}

fn run_fail(args: &[&str]) -> (i32, String) {
    let out = bin().args(args).output().expect("binary runs");
    let code = out.status.code().expect("exit code");
    assert_ne!(code, 0, "expected failure for {args:?}");
    (code, String::from_utf8_lossy(&out.stderr).into_owned())
}

fn json(stdout: &str) -> serde_json::Value {
    serde_json::from_str(stdout).expect("stdout parses as JSON")
}

fn ctx(n: u64, beta: f64, kl: f64, emp: f64) -> BoundContext {
    BoundContext::new(n, beta, NatsValue::new(kl).unwrap(), Probability::new(emp).unwrap())
        .unwrap()
}

#[test]
fn certify_is_bit_identical_to_library() {
    let stdout = run_ok(&[
        "certify", "--bound", "mixed-rate", "--n", "1000", "--beta", "0.05", "--kl", "5",
        "--emp-risk", "0.1",
    ]);
    let v = json(&stdout);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["command"], "certify");
    let cli_cert: Certificate = serde_json::from_value(v["certificate"].clone()).unwrap();
    let lib_cert = bounded::mixed_rate(&ctx(1000, 0.05, 5.0, 0.1));
    assert_eq!(cli_cert, lib_cert);
}

#[test]
fn certify_json_round_trips() {
    let stdout = run_ok(&[
        "certify", "--bound", "seeger-langford", "--n", "200", "--beta", "0.01", "--kl", "3.5",
        "--emp-risk", "0.25",
    ]);
    let v = json(&stdout);
    let parsed: Certificate = serde_json::from_value(v["certificate"].clone()).unwrap();
    let reserialized = serde_json::to_value(&parsed).unwrap();
    assert_eq!(v["certificate"], reserialized);
}

#[test]
fn chernoff_without_budget_event_is_uninformative() {
    // kl far above n fails the cut-off event; with no --esssup the value is
    // unbounded, crossing JSON as null.
    let stdout = run_ok(&[
        "certify", "--bound", "chernoff", "--family", "subgaussian", "--sigma2", "1", "--n",
        "100", "--beta", "0.05", "--kl", "150", "--emp-risk", "0.1",
    ]);
    let v = json(&stdout);
    assert_eq!(v["certificate"]["informative"], false);
    assert!(v["certificate"]["value"].is_null());
    let parsed: Certificate = serde_json::from_value(v["certificate"].clone()).unwrap();
    assert!(parsed.value.is_infinite());
}

#[test]
fn log_inv_beta_matches_library_constructor() {
    let stdout = run_ok(&[
        "certify", "--bound", "seeger-langford", "--n", "500", "--log-inv-beta", "7", "--kl",
        "2", "--emp-risk", "0.2",
    ]);
    let cli_cert: Certificate =
        serde_json::from_value(json(&stdout)["certificate"].clone()).unwrap();
    let lib_ctx = BoundContext::with_log_inv_beta(
        500,
        7.0,
        NatsValue::new(2.0).unwrap(),
        Probability::new(0.2).unwrap(),
    )
    .unwrap();
    assert_eq!(cli_cert, bounded::seeger_langford(&lib_ctx));
}

#[test]
fn kl_bits_flag_converts_to_nats() {
    let bits = run_ok(&[
        "certify", "--bound", "mcallester", "--n", "100", "--beta", "0.1", "--kl", "1",
        "--kl-bits", "--emp-risk", "0.3",
    ]);
    // ln 2 in nats; the shortest decimal below parses to exactly f64 LN_2.
    let nats = run_ok(&[
        "certify", "--bound", "mcallester", "--n", "100", "--beta", "0.1", "--kl",
        "0.6931471805599453", "--emp-risk", "0.3",
    ]);
    assert_eq!(bits, nats);
}

#[test]
fn compare_rows_sorted_with_dominance_verdict() {
    let stdout = run_ok(&[
        "compare", "--n", "1000", "--beta", "0.05", "--kl", "5", "--emp-risk", "0.1",
    ]);
    let v = json(&stdout);
    assert_eq!(v["dominance"]["holds"], true);
    let rows: Vec<Certificate> = serde_json::from_value(v["rows"].clone()).unwrap();
    assert_eq!(rows.len(), 9);
    for pair in rows.windows(2) {
        assert!(pair[0].value <= pair[1].value, "rows must be sorted by value");
    }
    let seeger = rows
        .iter()
        .find(|c| c.bound_id.name() == "seeger-langford")
        .expect("table includes seeger-langford");
    for row in &rows {
        assert!(
            seeger.value <= row.value + 1e-9,
            "seeger-langford must lower-bound {}",
            row.bound_id
        );
    }
}

#[test]
fn compare_rows_match_library_bitwise() {
    let stdout = run_ok(&[
        "compare", "--n", "250", "--beta", "0.1", "--kl", "1.5", "--emp-risk", "0.05",
    ]);
    let rows: Vec<Certificate> =
        serde_json::from_value(json(&stdout)["rows"].clone()).unwrap();
    let c = ctx(250, 0.1, 1.5, 0.05);
    for row in rows {
        let lib = match row.bound_id.name() {
            "mcallester" => bounded::mcallester(&c),
            "seeger-langford" => bounded::seeger_langford(&c),
            "catoni-fixed" => bounded::catoni_fixed(&c, 250.0, false).unwrap(),
            "catoni-uniform" => bounded::catoni_uniform(&c),
            "fast-rate-strong" => bounded::fast_rate_strong(&c),
            "fast-rate-simple" => bounded::fast_rate_simple(&c),
            "mixed-rate" => bounded::mixed_rate(&c),
            "thiemann" => bounded::thiemann(&c),
            "rivasplata" => bounded::rivasplata(&c),
            other => panic!("unexpected row {other}"),
        };
        assert_eq!(row, lib);
    }
}

#[test]
fn compare_csv_prints_verdict_on_stderr() {
    let out = bin()
        .args(["compare", "--n", "1000", "--beta", "0.05", "--kl", "5", "--emp-risk", "0.1",
            "--format", "csv"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("bound,value,informative\n"));
    assert_eq!(stdout.lines().count(), 10, "header plus nine bounded rows");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("dominance chain holds"), "stderr: {stderr}");
}

#[test]
fn compare_includes_general_rows_with_family() {
    let stdout = run_ok(&[
        "compare", "--n", "1000", "--beta", "0.05", "--kl", "5", "--emp-risk", "0.1",
        "--family", "bounded", "--range-min", "0", "--range-max", "1", "--esssup", "1",
    ]);
    let rows: Vec<Certificate> =
        serde_json::from_value(json(&stdout)["rows"].clone()).unwrap();
    let names: Vec<&str> = rows.iter().map(|c| c.bound_id.name()).collect();
    for expected in [
        "chernoff",
        "chernoff-no-cutoff",
        "chernoff-linearized",
        "chernoff-loglog",
        "randomized-subsample",
    ] {
        assert!(names.contains(&expected), "missing {expected} in {names:?}");
    }
}

#[test]
fn coverage_matches_library_and_round_trips() {
    let problem = preset("bernoulli-pair").unwrap();
    let mut file = tempfile::NamedTempFile::new().unwrap();
    file.write_all(serde_json::to_string(&problem).unwrap().as_bytes()).unwrap();
    let path = file.path().to_str().unwrap();
    let stdout = run_ok(&[
        "coverage", "--problem", path, "--bound", "mcallester", "--rule", "gibbs", "--lambda",
        "2", "--n", "40", "--trials", "100", "--beta", "0.05", "--seed", "11",
    ]);
    let v = json(&stdout);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["reports"].as_array().unwrap().len(), 1);
    let cli_report: CoverageReport =
        serde_json::from_value(v["reports"][0]["report"].clone()).unwrap();
    let rule = PosteriorRule::Gibbs { lambda: 2.0, n_scaled: false };
    let lib_report = coverage_experiment(
        &problem,
        &rule,
        pacbayes::BoundId::Mcallester,
        40,
        0.05,
        100,
        11,
    )
    .unwrap();
    assert_eq!(cli_report, lib_report);
    let reserialized = serde_json::to_value(&cli_report).unwrap();
    assert_eq!(v["reports"][0]["report"], reserialized);
}

#[test]
fn coverage_seed_comes_from_env_when_flag_absent() {
    let args = [
        "coverage", "--preset", "bernoulli-single", "--bound", "seeger-langford", "--n", "30",
        "--trials", "50", "--beta", "0.1",
    ];
    let with_env = bin().args(args).env("PACBAYES_SEED", "123").output().unwrap();
    assert!(with_env.status.success());
    let with_flag = run_ok(&[
        "coverage", "--preset", "bernoulli-single", "--bound", "seeger-langford", "--n", "30",
        "--trials", "50", "--beta", "0.1", "--seed", "123",
    ]);
    assert_eq!(String::from_utf8(with_env.stdout).unwrap(), with_flag);
    // An explicit flag wins over the environment.
    let flag_beats_env = bin()
        .args([
            "coverage", "--preset", "bernoulli-single", "--bound", "seeger-langford", "--n",
            "30", "--trials", "50", "--beta", "0.1", "--seed", "123",
        ])
        .env("PACBAYES_SEED", "999")
        .output()
        .unwrap();
    assert!(flag_beats_env.status.success());
    assert_eq!(String::from_utf8(flag_beats_env.stdout).unwrap(), with_flag);
}

#[test]
fn coverage_is_thread_count_invariant() {
    let base = [
        "coverage", "--preset", "gibbs-ten", "--bound", "catoni-uniform,mcallester", "--n",
        "25", "--trials", "60", "--beta", "0.05", "--seed", "5", "--format", "csv",
    ];
    let one = run_ok(&[&base[..], &["--threads", "1"]].concat());
    let four = run_ok(&[&base[..], &["--threads", "4"]].concat());
    assert_eq!(one, four);
}

#[test]
fn anytime_matches_library_schedule() {
    let stdout = run_ok(&[
        "anytime", "--bound", "mcallester", "--schedule", "basel", "--horizon", "4", "--kl",
        "1", "--emp-risk", "0.2", "--beta", "0.05",
    ]);
    let v = json(&stdout);
    let cli_certs: Vec<Certificate> =
        serde_json::from_value(v["certificates"].clone()).unwrap();
    let kl = NatsValue::new(1.0).unwrap();
    let emp = Probability::new(0.2).unwrap();
    let schedule = BetaSchedule::basel(0.05).unwrap();
    let lib_certs = make_anytime(
        |n, beta_n| Ok(bounded::mcallester(&BoundContext::new(n, beta_n, kl, emp)?)),
        &schedule,
        4,
    )
    .unwrap();
    assert_eq!(cli_certs, lib_certs);
}

#[test]
fn anytime_csv_has_one_row_per_step() {
    let stdout = run_ok(&[
        "anytime", "--bound", "seeger-langford", "--schedule", "kaufmann-koolen", "--horizon",
        "6", "--kl", "0.5", "--emp-risk", "0.1", "--beta", "0.1", "--format", "csv",
    ]);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], "n,beta_n,value,informative");
    assert_eq!(lines.len(), 7);
    assert!(lines[1].starts_with("1,"));
    assert!(lines[6].starts_with("6,"));
}

#[test]
fn anytime_rejects_general_bounds() {
    let (code, stderr) = run_fail(&[
        "anytime", "--bound", "chernoff", "--horizon", "5", "--kl", "1", "--emp-risk", "0.1",
        "--beta", "0.05",
    ]);
    assert_eq!(code, 1);
    assert!(stderr.contains("--bound"), "stderr: {stderr}");
}

#[test]
fn sweep_csv_is_bit_identical_to_library() {
    let stdout = run_ok(&[
        "sweep", "--bound", "mcallester", "--vary", "kl", "--from", "0", "--to", "5",
        "--steps", "6", "--n", "400", "--beta", "0.05", "--emp-risk", "0.1",
    ]);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], "kl,value,informative");
    assert_eq!(lines.len(), 7);
    for line in &lines[1..] {
        let fields: Vec<&str> = line.split(',').collect();
        let kl: f64 = fields[0].parse().unwrap();
        let value: f64 = fields[1].parse().unwrap();
        let lib = bounded::mcallester(&ctx(400, 0.05, kl, 0.1));
        assert_eq!(value, lib.value, "kl = {kl}");
    }
}

#[test]
fn sweep_varies_n_with_integer_labels() {
    let stdout = run_ok(&[
        "sweep", "--bound", "seeger-langford", "--vary", "n", "--from", "100", "--to",
        "10000", "--steps", "3", "--log", "--beta", "0.05", "--kl", "2", "--emp-risk", "0.15",
    ]);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], "n,value,informative");
    let first: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(first[0], "100");
    let last: Vec<&str> = lines[3].split(',').collect();
    assert_eq!(last[0], "10000");
    let n_mid: u64 = lines[2].split(',').next().unwrap().parse().unwrap();
    let value_mid: f64 = lines[2].split(',').nth(1).unwrap().parse().unwrap();
    let lib = bounded::seeger_langford(&ctx(n_mid, 0.05, 2.0, 0.15));
    assert_eq!(value_mid, lib.value);
}

#[test]
fn sweep_rejects_flag_for_varied_field() {
    let (code, stderr) = run_fail(&[
        "sweep", "--bound", "mcallester", "--vary", "beta", "--from", "0.01", "--to", "0.2",
        "--steps", "4", "--n", "100", "--beta", "0.05", "--kl", "1", "--emp-risk", "0.1",
    ]);
    assert_eq!(code, 1);
    assert!(stderr.contains("--vary beta"), "stderr: {stderr}");
}

#[test]
fn custom_cgf_table_file_loads_with_header() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    writeln!(file, "lambda,psi").unwrap();
    for i in 0..=40 {
        let l = i as f64 * 0.1;
        writeln!(file, "{},{}", l, l * l / 2.0).unwrap();
    }
    let path = file.path().to_str().unwrap();
    let table = run_ok(&[
        "certify", "--bound", "chernoff-no-cutoff", "--family", "custom", "--cgf-table", path,
        "--n", "500", "--beta", "0.1", "--kl", "2", "--emp-risk", "0.05",
    ]);
    let closed = run_ok(&[
        "certify", "--bound", "chernoff-no-cutoff", "--family", "subgaussian", "--sigma2",
        "1", "--n", "500", "--beta", "0.1", "--kl", "2", "--emp-risk", "0.05",
    ]);
    let vt = json(&table)["certificate"]["value"].as_f64().unwrap();
    let vc = json(&closed)["certificate"]["value"].as_f64().unwrap();
    assert!((vt - vc).abs() < 1e-2, "table {vt} vs closed form {vc}");
}

#[test]
fn martingale_does_not_need_emp_risk() {
    let stdout = run_ok(&[
        "certify", "--bound", "martingale", "--n", "100", "--beta", "0.05", "--kl", "1",
        "--var-empirical", "25", "--var-predictable", "25",
    ]);
    let cert: Certificate =
        serde_json::from_value(json(&stdout)["certificate"].clone()).unwrap();
    assert!(cert.value.is_finite());
}

#[test]
fn validation_errors_exit_one_and_name_the_flag() {
    let cases: &[(&[&str], &str)] = &[
        (
            &["certify", "--bound", "mixed-rate", "--n", "0", "--beta", "0.05", "--kl", "1",
                "--emp-risk", "0.1"],
            "--n",
        ),
        (
            &["certify", "--bound", "mixed-rate", "--n", "100", "--beta", "2", "--kl", "1",
                "--emp-risk", "0.1"],
            "--beta",
        ),
        (
            &["certify", "--bound", "second-moment", "--n", "100", "--beta", "0.05", "--kl",
                "1", "--emp-risk", "0.1"],
            "--sigma2-n",
        ),
        (
            &["certify", "--bound", "catoni-fixed", "--n", "100", "--beta", "0.05", "--kl",
                "1", "--emp-risk", "0.1"],
            "--lambda",
        ),
        (
            &["certify", "--bound", "nonsense", "--n", "100", "--beta", "0.05", "--kl", "1",
                "--emp-risk", "0.1"],
            "--bound",
        ),
        (
            &["coverage", "--problem", "/nonexistent/problem.json", "--beta", "0.05"],
            "--problem",
        ),
        (&["coverage", "--preset", "bernoulli-pair"], "--beta"),
        (
            &["certify", "--bound", "mixed-rate", "--n", "100", "--beta", "0.05",
                "--log-inv-beta", "3", "--kl", "1", "--emp-risk", "0.1"],
            "--log-inv-beta",
        ),
    ];
    for (args, flag) in cases {
        let (code, stderr) = run_fail(args);
        assert_eq!(code, 1, "args {args:?}");
        let first_line = stderr.lines().next().unwrap_or_default();
        assert!(
            first_line.contains(flag),
            "diagnostic for {args:?} must name {flag}, got: {first_line}"
        );
    }
}

#[test]
fn unknown_flag_exits_one_with_single_line() {
    let (code, stderr) = run_fail(&["certify", "--bogus"]);
    assert_eq!(code, 1);
    assert_eq!(stderr.trim_end().lines().count(), 1);
    assert!(stderr.contains("--bogus"));
}

#[test]
fn env_seed_must_be_numeric() {
    let out = bin()
        .args(["coverage", "--preset", "bernoulli-single", "--n", "10", "--trials", "10",
            "--beta", "0.1"])
        .env("PACBAYES_SEED", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("PACBAYES_SEED"));
}

#[test]
fn help_lists_every_documented_flag() {
    let expectations: &[(&str, &[&str])] = &[
        (
            "certify",
            &["--bound", "--n", "--beta", "--log-inv-beta", "--kl", "--kl-bits", "--emp-risk",
                "--family", "--range-min", "--range-max", "--sigma2", "--scale-c",
                "--cgf-table", "--cgf-expr", "--cgf-domain", "--lambda", "--use-xi",
                "--esssup", "--k-max", "--sigma2-n", "--var-empirical", "--var-predictable",
                "--format"],
        ),
        (
            "compare",
            &["--n", "--beta", "--log-inv-beta", "--kl", "--kl-bits", "--emp-risk",
                "--family", "--lambda", "--esssup", "--sigma2-n", "--format"],
        ),
        (
            "coverage",
            &["--problem", "--preset", "--bound", "--rule", "--lambda", "--n-scaled",
                "--temperature", "--posterior", "--n", "--trials", "--beta",
                "--log-inv-beta", "--seed", "--threads", "--format"],
        ),
        (
            "anytime",
            &["--bound", "--schedule", "--horizon", "--kl", "--kl-bits", "--emp-risk",
                "--beta", "--log-inv-beta", "--lambda", "--use-xi", "--format"],
        ),
        (
            "sweep",
            &["--bound", "--vary", "--from", "--to", "--steps", "--log", "--n", "--beta",
                "--log-inv-beta", "--kl", "--kl-bits", "--emp-risk", "--format"],
        ),
    ];
    for (sub, flags) in expectations {
        let help = run_ok(&[sub, "--help"]);
        for flag in *flags {
            assert!(help.contains(flag), "{sub} --help must mention {flag}");
        }
    }
}

#[test]
fn version_flag_exits_zero() {
    let out = bin().arg("--version").output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("pacbayes"));
}
