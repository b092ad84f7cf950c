use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn cw(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cw"))
        .args(args)
        .arg("--output-dir")
        .arg(dir)
        .env_remove("CW_OUTPUT_DIR")
        .output()
        .expect("failed to start cw")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("killed by signal")
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap()
}

/// Header and data rows of one of our CSV files, after the comment line.
fn table(path: PathBuf) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(&path).unwrap();
    let (comment, body) = text.split_once('\n').unwrap();
    assert!(
        comment.starts_with("# "),
        "{} lacks the parameter comment",
        path.display()
    );
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let header = reader.headers().unwrap().iter().map(String::from).collect();
    let rows = reader
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let i = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

#[test]
fn run_writes_history_snapshots_and_outcome() {
    let dir = tempfile::tempdir().unwrap();
    let out = cw(dir.path(), &["run", "--set", "lambda=10"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let outcome = json(dir.path().join("outcome.json"));
    assert_eq!(outcome["outcome"]["status"], "BlewUp");
    assert_eq!(outcome["params"]["lambda"], 10.0);
    let (header, rows) = table(dir.path().join("history.csv"));
    assert_eq!(header[..3], ["n", "t", "tau_n"]);
    assert_eq!(
        rows.len(),
        outcome["outcome"]["n_final"].as_u64().unwrap() as usize + 1
    );
    let snaps: Vec<_> = fs::read_dir(dir.path().join("snapshots"))
        .unwrap()
        .collect();
    assert!(snaps.len() >= 2);
    let first = fs::read_to_string(dir.path().join("snapshots/step_000000.csv")).unwrap();
    assert!(first.lines().nth(1).unwrap() == "x,u");
}

#[test]
fn config_file_and_initial_table_are_read() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("case.cfg");
    fs::write(dir.path().join("u0.csv"), "x,u0\n-1,0\n0,20\n1,0\n").unwrap();
    fs::write(&cfg, "p = 3\nq = 1\ninitial = file:u0.csv\n").unwrap();
    let out = cw(
        &dir.path().join("out"),
        &["run", "--config", cfg.to_str().unwrap()],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let outcome = json(dir.path().join("out/outcome.json"));
    assert_eq!(outcome["initial"], "file");
    assert_eq!(outcome["outcome"]["initial_sup_norm"], 20.0);
}

#[test]
fn missing_config_exits_2_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let out = cw(dir.path(), &["run", "--config", "/nonexistent/cw.cfg"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/cw.cfg"));
}

#[test]
fn inadmissible_q_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = cw(dir.path(), &["run", "--set", "q=1.8", "p=2"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("q = 1.8"));
    assert!(!dir.path().join("outcome.json").exists());
}

#[test]
fn overrides_reject_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&cw(dir.path(), &["run", "--set", "initial=sine"])), 2);
    assert_eq!(code(&cw(dir.path(), &["run", "--set", "gamma=1"])), 2);
}

#[test]
fn solver_error_exits_3() {
    // One step of size tau * u^p overflows.
    let dir = tempfile::tempdir().unwrap();
    let out = cw(
        dir.path(),
        &["run", "--set", "tau=1e300", "lambda=1e11", "h=2"],
    );
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("non-finite"));
    assert_eq!(
        json(dir.path().join("outcome.json"))["outcome"]["status"],
        "SolverError"
    );
}

#[test]
fn classify_reports_neighbours_for_p2_q1() {
    let dir = tempfile::tempdir().unwrap();
    let out = cw(dir.path(), &["classify", "--set", "p=2", "q=1", "h=0.5"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(dir.path().join("blowup_report.json"));
    let verdict = |k: i64| {
        report["offsets"]
            .as_array()
            .unwrap()
            .iter()
            .find(|o| o["offset"] == k)
            .map(|o| o["verdict"].as_str().unwrap().to_string())
            .unwrap()
    };
    assert_eq!(verdict(-1), "BlowsUp");
    assert_eq!(verdict(1), "BlowsUp");
    assert_eq!(verdict(-2), "Bounded");
    assert_eq!(report["matches_theory"], true);
}

#[test]
fn classify_without_blowup_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        code(&cw(dir.path(), &["classify", "--set", "max_steps=5"])),
        3
    );
}

#[test]
fn time_table_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = cw(dir.path(), &["time-table", "--lambdas", "100,10000"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = table(dir.path().join("time_table.csv"));
    assert_eq!(
        header,
        [
            "lambda",
            "g_lambda",
            "T_num",
            "tail",
            "T_star_star",
            "sandwich_ok",
            "status"
        ]
    );
    let g = column(&header, &rows, "g_lambda");
    let t = column(&header, &rows, "T_num");
    assert!((g[0] - 5e-5).abs() <= 1e-20);
    assert!((g[1] - 5e-9).abs() <= 1e-24);
    assert!(t[0] >= g[0] && t[1] >= g[1]);
    // Reference blow-up times 5.068e-5 and 5.075e-9 come from runs with unknown tau and h.
    assert!((t[0] / 5.068e-5 - 1.0).abs() < 0.25);
    assert!((t[1] / 5.075e-9 - 1.0).abs() < 0.25);
}

#[test]
fn empty_lambda_list_gives_header_only_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = cw(dir.path(), &["time-table", "--lambdas"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = table(dir.path().join("time_table.csv"));
    assert_eq!(header.len(), 7);
    assert!(rows.is_empty());
}

#[test]
fn time_table_records_failures_in_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = cw(
        dir.path(),
        &["time-table", "--lambdas", "10,100", "--set", "max_steps=20"],
    );
    assert_eq!(code(&out), 0);
    let (_, rows) = table(dir.path().join("time_table.csv"));
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert_eq!(r[2], "");
        assert_eq!(r[5], "false");
        assert!(r[6].contains("BudgetExhausted"), "{r:?}");
    }
}

#[test]
fn converge_reports_second_order_for_p2_q1() {
    let dir = tempfile::tempdir().unwrap();
    let out = cw(dir.path(), &["converge", "--set", "p=2"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(dir.path().join("convergence.json"));
    assert_eq!(report["case"], "B");
    assert_eq!(report["levels"].as_array().unwrap().len(), 3);
    assert!(report["fitted_order"].as_f64().unwrap() >= 1.8);
}

#[test]
fn converge_rejects_bad_levels() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        code(&cw(
            dir.path(),
            &["converge", "--set", "p=2", "--levels", "0.1,0.04,0.02"]
        )),
        2
    );
    assert_eq!(
        code(&cw(
            dir.path(),
            &["converge", "--set", "p=2", "--levels", "0.1,0.05"]
        )),
        2
    );
    assert_eq!(
        code(&cw(
            dir.path(),
            &["converge", "--set", "p=2", "--t-check", "10"]
        )),
        3
    );
}

#[test]
fn diagnostics_exit_4_on_failed_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = cw(dir.path(), &["diagnostics", "--set", "max_steps=10"]);
    assert_eq!(code(&out), 4);
    let d = json(dir.path().join("diagnostics.json"));
    assert_eq!(d["passed"], false);
    assert_eq!(d["checks"][0]["name"], "blew_up");
}

#[test]
fn diagnostics_peak_ratios_pass_on_fixed_grid() {
    let dir = tempfile::tempdir().unwrap();
    let h = "h=0.0023784142300054423";
    cw(dir.path(), &["diagnostics", "--set", "q=1.2", h]);
    let d = json(dir.path().join("diagnostics.json"));
    let check = |name: &str| {
        d["checks"]
            .as_array()
            .unwrap()
            .iter()
            .find(|c| c["name"] == name)
            .unwrap()["passed"]
            .clone()
    };
    assert_eq!(check("peak_ratios"), true);
    assert_eq!(check("blowup_set"), true);
    assert_eq!(check("time_lower_bound"), true);
}

fn final_window_start(u_m: &[f64]) -> usize {
    let last = *u_m.last().unwrap();
    (0..u_m.len() - 1)
        .rev()
        .find(|&i| last / u_m[i] >= 100.0)
        .unwrap()
}

#[test]
fn figure_1_neighbour_settles() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&cw(dir.path(), &["figures", "--lambdas", "10"])), 0);
    let (header, rows) = table(dir.path().join("fig1.csv"));
    let um = column(&header, &rows, "u_m");
    let um1 = column(&header, &rows, "u_m_minus_1");
    let s = final_window_start(&um);
    let last = *um1.last().unwrap();
    assert!((last - um1[s]).abs() / last < 0.01);
}

#[test]
fn figure_2_neighbour_keeps_growing() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&cw(dir.path(), &["figures", "--lambdas", "10"])), 0);
    let (header, rows) = table(dir.path().join("fig2.csv"));
    let um1 = column(&header, &rows, "u_m_minus_1");
    let up1 = column(&header, &rows, "u_m_plus_1");
    assert_eq!(um1, up1);
    assert!(um1.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn figure_3_second_neighbour_stays_bounded() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&cw(dir.path(), &["figures", "--lambdas", "10"])), 0);
    let (header, rows) = table(dir.path().join("fig3.csv"));
    let um2 = column(&header, &rows, "u_m_minus_2");
    let um = column(&header, &rows, "u_m");
    assert!(um.last().unwrap() >= &1e12);
    assert!(um2.iter().all(|v| v.is_finite() && *v <= um2[0].max(1.0)));
}

#[test]
fn figure_4_g_column() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        code(&cw(dir.path(), &["figures", "--lambdas", "10,100,1000"])),
        0
    );
    let (header, rows) = table(dir.path().join("fig4.csv"));
    let lambda = column(&header, &rows, "lambda");
    let g = column(&header, &rows, "g_lambda");
    let t = column(&header, &rows, "T_num");
    for i in 0..3 {
        assert!((g[i] - 1.0 / (2.0 * lambda[i] * lambda[i])).abs() <= 1e-15 * g[i]);
        assert!(t[i] >= g[i]);
    }
}

fn read_tree(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((
                    p.strip_prefix(root).unwrap().to_path_buf(),
                    fs::read(&p).unwrap(),
                ));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn repeated_invocations_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        for args in [
            &["run", "--set", "q=1.1"][..],
            &["classify"],
            &["time-table", "--lambdas", "10,100,1000"],
            &["converge", "--set", "p=2"],
            &["figures", "--lambdas", "10,100"],
        ] {
            assert_eq!(code(&cw(dir, args)), 0, "{args:?}");
        }
    }
    let (ta, tb) = (read_tree(a.path()), read_tree(b.path()));
    assert!(ta.len() > 10);
    assert_eq!(ta, tb);
}

#[test]
fn output_dir_env_var_takes_precedence() {
    let flag = tempfile::tempdir().unwrap();
    let env = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_cw"))
        .args(["run", "--snapshot-every", "0", "--output-dir"])
        .arg(flag.path())
        .env("CW_OUTPUT_DIR", env.path())
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    assert!(env.path().join("outcome.json").exists());
    assert!(!flag.path().join("outcome.json").exists());
    assert!(!env.path().join("snapshots").exists());
}
