//! End-to-end tests of the `geokrige` binary: exit codes, output contracts,
//! and byte-level determinism across reruns and thread counts.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_geokrige"))
}

fn tmpdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("geokrige_cli_{}_{tag}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("reading {}: {e}", path.display()))
}

/// Data rows only (header comments stripped), for comparisons across
/// commands whose `# cmd:` echo necessarily differs.
fn data_rows(path: &Path) -> Vec<String> {
    String::from_utf8(read(path))
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.to_string())
        .collect()
}

#[test]
fn simulate_is_byte_deterministic() {
    let dir = tmpdir("sim_det");
    let out1 = dir.join("a.csv");
    let out2 = dir.join("b.csv");
    for out in [&out1, &out2] {
        let st = bin()
            .args(["simulate", "--beta", "0.5", "--sigma2-x", "0.01", "--sigma2-u", "0.1"])
            .args(["--seed", "7", "--out", out.to_str().unwrap()])
            .status()
            .unwrap();
        assert!(st.success());
    }
    assert_eq!(read(&out1), read(&out2), "same seed must be byte-identical");
    let out3 = dir.join("c.csv");
    let st = bin()
        .args(["simulate", "--beta", "0.5", "--sigma2-x", "0.01", "--sigma2-u", "0.1"])
        .args(["--seed", "8", "--out", out3.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(st.success());
    assert_ne!(data_rows(&out1), data_rows(&out3), "different seeds must differ");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn simulate_missing_beta_is_usage_error() {
    let dir = tmpdir("sim_usage");
    let out = bin()
        .args(["simulate", "--seed", "1", "--out", dir.join("x.csv").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("--beta"), "stderr should mention the flag: {msg}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn unknown_command_is_usage_error() {
    let out = bin().args(["frobnicate"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn env_seed_fallback_works() {
    let dir = tmpdir("env_seed");
    let with_flag = dir.join("flag.csv");
    let with_env = dir.join("env.csv");
    assert!(bin()
        .args(["simulate", "--beta", "1", "--seed", "99", "--out", with_flag.to_str().unwrap()])
        .status()
        .unwrap()
        .success());
    assert!(bin()
        .args(["simulate", "--beta", "1", "--out", with_env.to_str().unwrap()])
        .env("GEOKRIGE_SEED", "99")
        .status()
        .unwrap()
        .success());
    assert_eq!(data_rows(&with_flag), data_rows(&with_env));
    // no seed anywhere: usage error
    let out = bin()
        .args(["simulate", "--beta", "1", "--out", dir.join("z.csv").to_str().unwrap()])
        .env_remove("GEOKRIGE_SEED")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn config_file_defaults_and_flag_precedence() {
    let dir = tmpdir("config");
    let cfg = dir.join("run.conf");
    std::fs::write(&cfg, "beta=0.5\nsigma2-x=0.01\nseed=7\n").unwrap();
    let from_cfg = dir.join("cfg.csv");
    assert!(bin()
        .args(["simulate", "--config", cfg.to_str().unwrap(), "--out", from_cfg.to_str().unwrap()])
        .status()
        .unwrap()
        .success());
    let explicit = dir.join("explicit.csv");
    assert!(bin()
        .args(["simulate", "--beta", "0.5", "--sigma2-x", "0.01", "--seed", "7"])
        .args(["--out", explicit.to_str().unwrap()])
        .status()
        .unwrap()
        .success());
    assert_eq!(data_rows(&from_cfg), data_rows(&explicit));
    // flag beats config
    let overridden = dir.join("override.csv");
    assert!(bin()
        .args(["simulate", "--config", cfg.to_str().unwrap(), "--beta", "2.0"])
        .args(["--out", overridden.to_str().unwrap()])
        .status()
        .unwrap()
        .success());
    assert_ne!(data_rows(&from_cfg), data_rows(&overridden));
    std::fs::remove_dir_all(&dir).ok();
}

fn write_fixture(dir: &Path) -> (PathBuf, PathBuf) {
    let data = dir.join("data.csv");
    let targets = dir.join("targets.csv");
    let st = bin()
        .args(["simulate", "--beta", "0.5", "--sigma2-x", "0.01", "--sigma2-u", "0.1"])
        .args(["--seed", "21", "--out", data.to_str().unwrap()])
        .args(["--targets-out", targets.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(st.success());
    (data, targets)
}

#[test]
fn krige_kale_equals_kile_without_errors() {
    let dir = tmpdir("krige_eq");
    let (data, targets) = write_fixture(&dir);
    let kale = dir.join("kale.csv");
    let kile = dir.join("kile.csv");
    for (method, out) in [("kale", &kale), ("kile", &kile)] {
        let st = bin()
            .args(["krige", "--input", data.to_str().unwrap()])
            .args(["--targets", targets.to_str().unwrap()])
            .args(["--method", method, "--sigma2-u", "0"])
            .args(["--tau2", "1", "--beta", "0.5", "--sigma2-x", "0.01"])
            .args(["--seed", "3", "--out", out.to_str().unwrap()])
            .status()
            .unwrap();
        assert!(st.success());
    }
    assert_eq!(
        data_rows(&kale),
        data_rows(&kile),
        "with sigma2_u = 0 the two methods coincide"
    );
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn krige_rejects_malformed_csv_with_line_number() {
    let dir = tmpdir("krige_bad");
    let bad = dir.join("bad.csv");
    std::fs::write(&bad, "x1,x2,y\n1,2,3\nnot,a,number\n").unwrap();
    let targets = dir.join("t.csv");
    std::fs::write(&targets, "x1,x2\n0,0\n").unwrap();
    let out = bin()
        .args(["krige", "--input", bad.to_str().unwrap()])
        .args(["--targets", targets.to_str().unwrap()])
        .args(["--method", "kale", "--tau2", "1", "--beta", "1"])
        .args(["--seed", "1", "--out", dir.join("o.csv").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("line 3"), "diagnostic should carry the line: {msg}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn fit_reports_parameters_as_json() {
    let dir = tmpdir("fit");
    let (data, _) = write_fixture(&dir);
    let out = dir.join("fit.json");
    let st = bin()
        .args(["fit", "--input", data.to_str().unwrap()])
        .args(["--sigma2-u", "0.1", "--restarts", "4"])
        .args(["--seed", "5", "--out", out.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(st.success());
    let text = String::from_utf8(read(&out)).unwrap();
    for key in ["tau2", "beta", "sigma2_x", "log_pseudolik", "converged"] {
        assert!(text.contains(key), "missing {key} in {text}");
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn hmc_outputs_and_thread_count_determinism() {
    let dir = tmpdir("hmc_det");
    let (data, targets) = write_fixture(&dir);
    let mut outs = Vec::new();
    for threads in ["1", "2"] {
        let preds = dir.join(format!("preds_t{threads}.csv"));
        let diag = dir.join(format!("diag_t{threads}.json"));
        let st = bin()
            .args(["hmc", "--input", data.to_str().unwrap()])
            .args(["--targets", targets.to_str().unwrap()])
            .args(["--tau2", "1", "--beta", "0.5", "--sigma2-x", "0.01", "--sigma2-u", "0.1"])
            .args(["--chains", "4", "--warmup", "100", "--draws", "100", "--leapfrog", "8"])
            .args(["--seed", "11", "--threads", threads])
            .args(["--out", preds.to_str().unwrap()])
            .args(["--diag-out", diag.to_str().unwrap()])
            .status()
            .unwrap();
        assert!(st.success());
        let text = String::from_utf8(read(&diag)).unwrap();
        assert!(text.contains("max_rhat"), "diagnostics must carry R-hat: {text}");
        outs.push(read(&preds));
    }
    assert_eq!(outs[0], outs[1], "thread count must not change the bytes");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn hmc_kappa_reports_weight_ess() {
    let dir = tmpdir("hmc_kappa");
    let (data, targets) = write_fixture(&dir);
    let diag = dir.join("diag.json");
    let st = bin()
        .args(["hmc", "--input", data.to_str().unwrap()])
        .args(["--targets", targets.to_str().unwrap()])
        .args(["--tau2", "1", "--beta", "0.5", "--sigma2-x", "0.01", "--sigma2-u", "0.1"])
        .args(["--chains", "2", "--warmup", "80", "--draws", "80", "--leapfrog", "8"])
        .args(["--kappa", "1.0", "--seed", "13"])
        .args(["--out", dir.join("p.csv").to_str().unwrap()])
        .args(["--diag-out", diag.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(st.success());
    let text = String::from_utf8(read(&diag)).unwrap();
    assert!(text.contains("weight_ess"), "kappa run must report weight ESS: {text}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn sweep_deterministic_and_resumable() {
    let dir = tmpdir("sweep");
    let common = [
        "sweep",
        "--betas",
        "0.5",
        "--sigma2-xs",
        "0.01",
        "--sigma2-us",
        "0.1",
        "--reps",
        "2",
        "--methods",
        "kale,kile",
        "--seed",
        "4",
    ];
    let r1 = dir.join("r1.csv");
    let r2 = dir.join("r2.csv");
    for (threads, out) in [("1", &r1), ("2", &r2)] {
        let st = bin()
            .args(common)
            .args(["--threads", threads, "--out", out.to_str().unwrap()])
            .status()
            .unwrap();
        assert!(st.success());
    }
    assert_eq!(read(&r1), read(&r2), "sweep must be thread-count independent");

    // checkpointed rerun restores identical results
    let ckpt = dir.join("ckpt");
    let r3 = dir.join("r3.csv");
    let r4 = dir.join("r4.csv");
    for out in [&r3, &r4] {
        let st = bin()
            .args(common)
            .args(["--checkpoint-dir", ckpt.to_str().unwrap()])
            .args(["--out", out.to_str().unwrap()])
            .status()
            .unwrap();
        assert!(st.success());
    }
    assert_eq!(read(&r3), read(&r4));
    assert_eq!(read(&r1), read(&r3));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn geo_synthetic_then_interpolate() {
    let dir = tmpdir("geo");
    let data = dir.join("geo.csv");
    let targets = dir.join("geo_targets.csv");
    let st = bin()
        .args(["geo", "--synthetic", "--grid-step", "15"])
        .args(["--lat-range", "10:70", "--lon-range", "0:90"])
        .args(["--seed", "9", "--out", data.to_str().unwrap()])
        .args(["--targets-out", targets.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(st.success());
    let preds = dir.join("preds.csv");
    let params = dir.join("params.json");
    let st = bin()
        .args(["geo", "--input", data.to_str().unwrap()])
        .args(["--targets", targets.to_str().unwrap()])
        .args(["--mode", "kale", "--sigma2-u", "7500", "--restarts", "3"])
        .args(["--n-mc", "512", "--seed", "10"])
        .args(["--out", preds.to_str().unwrap()])
        .args(["--params-out", params.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(st.success());
    let rows = data_rows(&preds);
    assert_eq!(rows[0], "lon,lat,mean,var,lo95,hi95");
    assert!(rows.len() > 1);
    let ptext = String::from_utf8(read(&params)).unwrap();
    for key in ["tau2", "beta", "sigma2_x", "mode", "sigma2_u", "runtime_s"] {
        assert!(ptext.contains(key), "missing {key} in {ptext}");
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn outputs_carry_config_header() {
    let dir = tmpdir("header");
    let out = dir.join("d.csv");
    assert!(bin()
        .args(["simulate", "--beta", "0.5", "--seed", "6", "--out", out.to_str().unwrap()])
        .status()
        .unwrap()
        .success());
    let text = String::from_utf8(read(&out)).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# geokrige "));
    let cmd_line = lines.next().unwrap();
    assert!(cmd_line.starts_with("# cmd: simulate"), "{cmd_line}");
    assert!(cmd_line.contains("beta=0.5"));
    assert!(text.lines().nth(2).unwrap().starts_with("# seed: 6"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn hmc_without_errors_matches_krige_means() {
    let dir = tmpdir("hmc_vs_krige");
    let (data, targets) = write_fixture(&dir);
    let kr = dir.join("kr.csv");
    assert!(bin()
        .args(["krige", "--input", data.to_str().unwrap()])
        .args(["--targets", targets.to_str().unwrap()])
        .args(["--method", "kale", "--sigma2-u", "0"])
        .args(["--tau2", "1", "--beta", "0.5", "--sigma2-x", "0.01"])
        .args(["--seed", "3", "--out", kr.to_str().unwrap()])
        .status()
        .unwrap()
        .success());
    let hm = dir.join("hm.csv");
    assert!(bin()
        .args(["hmc", "--input", data.to_str().unwrap()])
        .args(["--targets", targets.to_str().unwrap()])
        .args(["--tau2", "1", "--beta", "0.5", "--sigma2-x", "0.01", "--sigma2-u", "0"])
        .args(["--chains", "2", "--warmup", "50", "--draws", "400"])
        .args(["--seed", "3", "--out", hm.to_str().unwrap()])
        .status()
        .unwrap()
        .success());
    let parse_col = |path: &Path, col: usize| -> Vec<f64> {
        data_rows(path)[1..]
            .iter()
            .map(|l| l.split(',').nth(col).unwrap().parse().unwrap())
            .collect()
    };
    let kr_means = parse_col(&kr, 2);
    let hm_means = parse_col(&hm, 2);
    for (a, b) in kr_means.iter().zip(&hm_means) {
        // no latent displacements: both are the same exact conditional
        assert!((a - b).abs() < 1e-9, "krige {a} vs hmc {b}");
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn krige_line_scenario_kale_beats_kile() {
    // one-dimensional line of observations with a target beyond the end:
    // the adjusted MSE never exceeds the ignoring-errors MSE
    let dir = tmpdir("fig2");
    let data = dir.join("line.csv");
    let mut text = String::from("x1,y\n");
    for i in 0..5 {
        text.push_str(&format!("{i},{}\n", (i as f64 * 0.7).sin() * 0.5));
    }
    std::fs::write(&data, text).unwrap();
    let targets = dir.join("t.csv");
    std::fs::write(&targets, "x1\n5\n").unwrap();
    let mut mses = Vec::new();
    for method in ["kale", "kile"] {
        let out = dir.join(format!("{method}.csv"));
        assert!(bin()
            .args(["krige", "--input", data.to_str().unwrap()])
            .args(["--targets", targets.to_str().unwrap()])
            .args(["--method", method, "--sigma2-u", "0.25"])
            .args(["--tau2", "1", "--beta", "1", "--sigma2-x", "0"])
            .args(["--seed", "2", "--out", out.to_str().unwrap()])
            .status()
            .unwrap()
            .success());
        let row = data_rows(&out)[1].clone();
        let mse: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
        mses.push(mse);
    }
    assert!(
        mses[0] <= mses[1] + 1e-12,
        "KALE mse {} > KILE mse {}",
        mses[0],
        mses[1]
    );
    std::fs::remove_dir_all(&dir).ok();
}
