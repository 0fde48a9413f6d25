//! CLI contract tests: exit codes (0 ok, 2 invalid config), diagnostics,
//! unit-suffix handling, and the bank cache round trip.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn adcp(args: &[&str], out_dir: &PathBuf) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adcp"))
        .args(args)
        .arg("--out-dir")
        .arg(out_dir)
        .output()
        .expect("spawn adcp")
}

fn temp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("adcp_cli_{name}"));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn plan_emits_expected_numerology() {
    let dir = temp_dir("plan");
    let out = adcp(
        &["plan", "--T", "80us", "--B", "32MHz", "--tau", "2.6667us", "--mult", "6", "--M", "1200"],
        &dir,
    );
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("N = 2048"), "{stdout}");
    assert!(stdout.contains("K = 512"), "{stdout}");
    let csv = fs::read_to_string(dir.join("plan.csv")).unwrap();
    assert!(csv.starts_with("T_seconds,"));
    assert!(csv.contains(",2048,1200,512,"));
    assert!(dir.join("plan.config.txt").exists());
}

#[test]
fn plan_lte_grid_lists_low_overhead_solutions() {
    let dir = temp_dir("lte");
    let out = adcp(
        &["plan", "--lte-grid", "--subframe", "500us", "--Td", "66.7us"],
        &dir,
    );
    assert!(out.status.success());
    // --lte-grid dispatches to the lte-grid report
    let csv = fs::read_to_string(dir.join("lte-grid.csv")).unwrap();
    let mut lines = csv.lines().skip(1);
    assert!(lines.next().unwrap().starts_with("7,0.0000047285"));
    assert!(lines.next().unwrap().starts_with("6,0.0000166333"));
}

#[test]
fn plan_infeasible_clock_set_exits_2() {
    let dir = temp_dir("clocks_bad");
    let clock_file = dir.join("clocks.txt");
    fs::write(&clock_file, "31.25ns\n").unwrap();
    let out = adcp(
        &[
            "plan", "--clocks", clock_file.to_str().unwrap(), "--T", "64us", "--Ts", "31.25ns",
            "--Ntilde", "2048", "--tau", "1us",
        ],
        &dir,
    );
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("no feasible clock"), "{stderr}");
}

#[test]
fn plan_clock_set_selects_minimal_cp() {
    let dir = temp_dir("clocks_ok");
    let clock_file = dir.join("clocks.txt");
    fs::write(&clock_file, "# candidate clock periods\n31.25ns\n27.34375ns\n").unwrap();
    let out = adcp(
        &[
            "plan", "--clocks", clock_file.to_str().unwrap(), "--T", "80us", "--Ts", "31.25ns",
            "--Ntilde", "2048", "--tau", "3.5us",
        ],
        &dir,
    );
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("N = 1792"), "{stdout}");
    assert!(stdout.contains("K_tilde = 878"), "{stdout}");
}

#[test]
fn plan_missing_flags_exit_2() {
    let dir = temp_dir("plan_missing");
    let out = adcp(&["plan", "--T", "80us"], &dir);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("--B"));
}

#[test]
fn sweep_zero_trials_exits_2() {
    let dir = temp_dir("sweep0");
    let out = adcp(
        &["sweep", "--taus", "0", "--T", "20us", "--B", "25.6MHz", "--trials", "0", "--seed", "1"],
        &dir,
    );
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("trials must be >= 1"), "{stderr}");
}

#[test]
fn multiuser_accepts_scenario_file_with_preset() {
    let dir = temp_dir("scenario");
    let scenario = dir.join("two_user.toml");
    fs::write(
        &scenario,
        "cp_user1 = 2.5e-6\nn_symbols = 4\n\n[channel_user2]\npreset = \"mmw73-avg\"\n",
    )
    .unwrap();
    let out = adcp(
        &["multiuser", "--config", scenario.to_str().unwrap(), "--trials", "1", "--seed", "5"],
        &dir,
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(dir.join("multiuser.csv")).unwrap();
    assert!(csv.starts_with("trial,evm_user2_mismatched_db,evm_user2_common_db"));
    assert!(csv.lines().last().unwrap().starts_with("all,"));
}

#[test]
fn multiuser_unknown_preset_exits_2() {
    let dir = temp_dir("scenario_bad");
    let scenario = dir.join("two_user.toml");
    fs::write(&scenario, "[channel_user1]\npreset = \"bogus\"\n").unwrap();
    let out = adcp(
        &["multiuser", "--config", scenario.to_str().unwrap(), "--seed", "5"],
        &dir,
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("bogus"));
}

#[test]
fn farrow_bench_bank_cache_roundtrip() {
    let dir = temp_dir("bankcache");
    let bank = dir.join("bank.txt");
    let first = adcp(
        &["farrow-bench", "--seed", "3", "--bank-out", bank.to_str().unwrap(), "-o", "a"],
        &dir,
    );
    assert!(first.status.success());
    let second = adcp(
        &["farrow-bench", "--seed", "3", "--bank-in", bank.to_str().unwrap(), "-o", "b"],
        &dir,
    );
    assert!(second.status.success());
    assert_eq!(
        fs::read(dir.join("a.csv")).unwrap(),
        fs::read(dir.join("b.csv")).unwrap()
    );
}

#[test]
fn env_var_sets_default_output_directory() {
    let dir = temp_dir("envdir");
    let out = Command::new(env!("CARGO_BIN_EXE_adcp"))
        .args(["lte-grid", "--subframe", "10us", "--Td", "3us"])
        .env("ADCP_OUT_DIR", &dir)
        .output()
        .expect("spawn adcp");
    assert!(out.status.success());
    assert!(dir.join("lte-grid.csv").exists());
}

#[test]
fn farrow_bench_exact_fit_order() {
    // alpha = p - 1 leaves only the filter error
    let dir = temp_dir("alpha8");
    let out = adcp(&["farrow-bench", "--alpha", "8", "--seed", "1"], &dir);
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.join("farrow-bench.csv")).unwrap();
    let row = csv.lines().nth(1).unwrap();
    let rel_mse: f64 = row.split(',').next().unwrap().parse().unwrap();
    assert!(rel_mse <= -60.0, "alpha=8 rel MSE {rel_mse}");
}
