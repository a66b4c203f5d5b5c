use std::path::Path;
use std::process::{Command, Output};

fn fdcache(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fdcache"))
        .current_dir(dir)
        .args(args)
        .env_remove("FD_D2D_THREADS")
        .output()
        .unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn analytic_run_writes_41_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = fdcache(
        dir.path(),
        &[
            "--mode",
            "analytic",
            "--n-users",
            "20",
            "--radius",
            "40",
            "--zipf",
            "0.8",
            "--theta-db",
            "-10:30:1",
            "--out",
            "curve.csv",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("curve.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "theta_db,theta_linear,p_cache,p_sir_analytic,p_total_analytic,p_total_sim,ci_halfwidth,\
         n_users,gamma_r,radius,alpha,beta,trials,seed"
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 41);
    let mut previous = f64::INFINITY;
    for row in &rows {
        assert_eq!(row.len(), 14);
        assert!(row[5].is_empty() && row[6].is_empty());
        let p: f64 = row[4].parse().unwrap();
        assert!(p <= previous && (0.0..=1.0).contains(&p));
        previous = p;
    }
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("P_TX"));
    assert!(stdout.contains("TNFD"));
}

#[test]
fn both_mode_reports_gap() {
    let dir = tempfile::tempdir().unwrap();
    let out = fdcache(
        dir.path(),
        &[
            "--mode",
            "both",
            "--n-users",
            "5",
            "--radius",
            "30",
            "--zipf",
            "1.2",
            "--theta-db",
            "0:10:10",
            "--trials",
            "3000",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("max |analytic - simulated|"), "{stdout}");
    let csv = std::fs::read_to_string(dir.path().join("fdcache.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert!(!row[5].is_empty() && !row[6].is_empty());
    assert_eq!(row[12], "3000");
    assert_eq!(row[13], "1");
}

#[test]
fn sweep_family_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("users.conf"),
        "sweep = n_users=5,10,20,40\nzipf = 1.2\nradius = 30\ntheta_db = -10:30:10\nout = users.csv\n",
    )
    .unwrap();
    let out = fdcache(dir.path(), &["--config", "users.conf", "--alpha", "3.5"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("users.csv")).unwrap();
    let rows: Vec<Vec<String>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    assert_eq!(rows.len(), 20);
    assert!(rows.iter().all(|r| r[10] == "3.5"));
    let users: Vec<&str> = rows.iter().step_by(5).map(|r| r[7].as_str()).collect();
    assert_eq!(users, ["5", "10", "20", "40"]);
}

#[test]
fn usage_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&[&str], &str); 5] = [
        (&["--radius", "30", "--zipf", "1.2"], "--n-users"),
        (
            &[
                "--n-users",
                "5",
                "--radius",
                "30",
                "--zipf",
                "1",
                "--theta-db",
                "0:10",
            ],
            "--theta-db",
        ),
        (
            &[
                "--n-users",
                "50",
                "--library-size",
                "20",
                "--radius",
                "30",
                "--zipf",
                "1",
            ],
            "--n-users",
        ),
        (
            &[
                "--n-users",
                "5",
                "--radius",
                "30",
                "--zipf",
                "1",
                "--sweep",
                "alpha=3,4",
            ],
            "--sweep",
        ),
        (
            &[
                "--n-users",
                "5",
                "--radius",
                "30",
                "--zipf",
                "1",
                "--beta",
                "2",
            ],
            "--beta",
        ),
    ];
    for (args, flag) in cases {
        let out = fdcache(dir.path(), args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(stderr(&out).contains(flag), "{args:?}: {}", stderr(&out));
    }
    let out = fdcache(dir.path(), &["--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("fdcache.csv").exists());
}

#[test]
fn unwritable_output_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("missing").join("out.csv");
    let out = fdcache(
        dir.path(),
        &[
            "--n-users",
            "3",
            "--radius",
            "10",
            "--zipf",
            "1",
            "--theta-db",
            "0:0:1",
            "--out",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_fdcache"))
        .args([
            "--n-users",
            "3",
            "--radius",
            "10",
            "--zipf",
            "1",
            "--theta-db",
            "0:0:1",
            "--out",
        ])
        .arg(&target)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn bad_thread_count_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_fdcache"))
        .current_dir(dir.path())
        .args([
            "--n-users",
            "3",
            "--radius",
            "10",
            "--zipf",
            "1",
            "--theta-db",
            "0:0:1",
        ])
        .env("FD_D2D_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("FD_D2D_THREADS"));
}

#[test]
fn help_exits_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = fdcache(dir.path(), &["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("--theta-db"));
}
