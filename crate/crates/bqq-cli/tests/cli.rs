//! End-to-end CLI behavior: exit codes, summary self-consistency, input
//! formats, and error-cell handling in sweeps.

use bqq_core::io::rawmat;
use bqq_core::matrix::mse;
use std::path::Path;
use std::process::Command;

fn bqq_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bqq"))
}

fn read_matrix(path: &Path) -> bqq_core::matrix::DenseMatrix {
    rawmat::read_raw_matrix(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn constant_matrix_quantizes_to_zero_mse() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("const.csv");
    let row = ["3.5"; 8].join(",");
    let text = format!("{}\n", vec![row; 8].join("\n"));
    std::fs::write(&input, text).unwrap();

    let code = dir.path().join("const.code");
    let output = bqq_bin()
        .arg("quantize")
        .arg(&input)
        .args(["--method", "bqq", "--p", "1", "--steps", "50"])
        .arg("-o")
        .arg(&code)
        .output()
        .unwrap();
    assert!(output.status.success());
    let summary: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(summary["mse"].as_f64().unwrap(), 0.0);
    assert_eq!(summary["shape"], serde_json::json!([8, 8]));
}

#[test]
fn summary_mse_matches_externally_recomputed_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("m.rawmat");
    assert!(bqq_bin()
        .args(["gen", "gaussian", "--rows", "24", "--cols", "24", "--seed", "5"])
        .arg("-o")
        .arg(&input)
        .status()
        .unwrap()
        .success());

    for method_args in [
        vec!["--method", "bqq", "--p", "2", "--steps", "150"],
        vec!["--method", "uq", "--bits", "2", "--n-split", "40"],
        vec!["--method", "e8", "--n-bits", "2"],
        vec!["--method", "vq-uq", "--vec-dim", "4", "--k", "16"],
        vec!["--method", "svd", "--rank", "6"],
    ] {
        let code = dir.path().join("m.code");
        let output = bqq_bin()
            .arg("quantize")
            .arg(&input)
            .args(&method_args)
            .arg("-o")
            .arg(&code)
            .output()
            .unwrap();
        assert!(output.status.success(), "{method_args:?}");
        let summary: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();

        let reconstructed = dir.path().join("m_back.rawmat");
        assert!(bqq_bin()
            .arg("dequantize")
            .arg(&code)
            .arg("-o")
            .arg(&reconstructed)
            .status()
            .unwrap()
            .success());

        let original = read_matrix(&input);
        let restored = read_matrix(&reconstructed);
        let recomputed = mse(&original, &restored).unwrap();
        let reported = summary["mse"].as_f64().unwrap();
        assert!(
            (recomputed - reported).abs() <= 1e-12 * (1.0 + reported),
            "{method_args:?}: summary {reported} vs recomputed {recomputed}"
        );
    }
}

#[test]
fn unknown_method_exits_with_usage_error_and_method_list() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("m.csv");
    std::fs::write(&input, "1,2\n3,4\n").unwrap();
    let output = bqq_bin()
        .arg("quantize")
        .arg(&input)
        .args(["--method", "nope", "-o"])
        .arg(dir.path().join("x.code"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("bqq"), "stderr should list methods: {stderr}");
    assert!(stderr.contains("e8"), "stderr should list methods: {stderr}");
}

#[test]
fn missing_rank_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("m.csv");
    std::fs::write(&input, "1,2\n3,4\n").unwrap();
    let output = bqq_bin()
        .arg("quantize")
        .arg(&input)
        .args(["--method", "svd", "-o"])
        .arg(dir.path().join("x.code"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn unreadable_input_exits_one() {
    let output = bqq_bin()
        .arg("quantize")
        .arg("/nonexistent/m.rawmat")
        .args(["--method", "uq", "-o", "/tmp/never.code"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn tsplib_input_flows_through_quantize() {
    let dir = tempfile::tempdir().unwrap();
    let tsp = dir.path().join("cities.tsp");
    assert!(bqq_bin()
        .args(["gen", "cities", "--n", "24", "--seed", "9"])
        .arg("-o")
        .arg(&tsp)
        .status()
        .unwrap()
        .success());
    let output = bqq_bin()
        .arg("quantize")
        .arg(&tsp)
        .args(["--method", "uq", "--bits", "3", "--n-split", "30"])
        .arg("-o")
        .arg(dir.path().join("cities.code"))
        .output()
        .unwrap();
    assert!(output.status.success());
    let summary: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(summary["shape"], serde_json::json!([24, 24]));
}

#[test]
fn groupwise_quantize_runs_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("m.rawmat");
    assert!(bqq_bin()
        .args(["gen", "lowrank", "--rows", "16", "--cols", "16", "--rank", "2", "--seed", "3"])
        .arg("-o")
        .arg(&input)
        .status()
        .unwrap()
        .success());
    let output = bqq_bin()
        .arg("quantize")
        .arg(&input)
        .args([
            "--method", "uq", "--bits", "2", "--n-split", "30", "--group-rows", "8",
            "--group-cols", "8",
        ])
        .arg("-o")
        .arg(dir.path().join("m.code"))
        .output()
        .unwrap();
    assert!(output.status.success());
    let summary: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(summary["group_rows"], serde_json::json!(8));
    // 4 blocks, 2 scalars each at 32 bits, plus 2-bit indices.
    assert_eq!(
        summary["memory_bits"].as_u64().unwrap(),
        16 * 16 * 2 + 4 * 2 * 32
    );
}

#[test]
fn failing_sweep_cells_are_marked_and_do_not_abort() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sweep.toml");
    // rank 40 exceeds min(8, 8): that cell must fail, the rest proceed.
    std::fs::write(
        &config,
        r#"
seeds = [1]

[input]
kind = "gaussian"
rows = 8
cols = 8
seed = 1

[methods.svd]
rank = [2, 40]

[methods.uq]
bits = [2]
n_split = 20
"#,
    )
    .unwrap();
    let out = dir.path().join("r");
    let output = bqq_bin()
        .args(["sweep", "--config"])
        .arg(&config)
        .arg("-o")
        .arg(&out)
        .output()
        .unwrap();
    assert!(output.status.success());
    let status: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(status["failed_cells"], serde_json::json!(1));

    let csv = std::fs::read_to_string(out.with_extension("csv")).unwrap();
    assert!(csv.lines().any(|l| l.contains(",error,")), "csv: {csv}");
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.with_extension("json")).unwrap())
            .unwrap();
    let records = json.as_array().unwrap();
    assert_eq!(records.len(), 3);
    assert_eq!(
        records
            .iter()
            .filter(|r| !r["error"].is_null())
            .count(),
        1
    );
}

#[test]
fn constant_matrix_sweep_is_exact_for_every_method() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("const.csv");
    let row = ["2.75"; 6].join(",");
    std::fs::write(&input, format!("{}\n", vec![row; 6].join("\n"))).unwrap();
    let config = dir.path().join("sweep.toml");
    std::fs::write(
        &config,
        format!(
            r#"
seeds = [1]

[input]
kind = "file"
path = "{}"

[methods.uq]
bits = [2]
n_split = 20

[methods.bcq]
p = [2]
"#,
            input.display()
        ),
    )
    .unwrap();
    let out = dir.path().join("r");
    assert!(bqq_bin()
        .args(["sweep", "--config"])
        .arg(&config)
        .arg("-o")
        .arg(&out)
        .status()
        .unwrap()
        .success());
    let csv = std::fs::read_to_string(out.with_extension("csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    for row in rows {
        let mse: f64 = row.split(',').nth(4).unwrap().parse().unwrap();
        assert_eq!(mse, 0.0, "constant input should quantize exactly: {row}");
    }
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sweep.toml");
    std::fs::write(
        &config,
        r#"
seeds = [1]
seedz = [2]

[input]
kind = "gaussian"
rows = 4
cols = 4

[methods.uq]
bits = [1]
"#,
    )
    .unwrap();
    let output = bqq_bin()
        .args(["sweep", "--config"])
        .arg(&config)
        .args(["-o"])
        .arg(dir.path().join("r"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("seedz"), "stderr should name the bad key: {stderr}");
}

#[test]
fn csv_and_json_sweeps_carry_identical_records() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sweep.toml");
    std::fs::write(
        &config,
        r#"
seeds = [3, 4]

[input]
kind = "lowrank"
rows = 16
cols = 16
rank = 2
noise_std = 0.05
seed = 2

[methods.uq]
bits = [1, 2]
n_split = 20

[methods.bcq]
p = [1]
"#,
    )
    .unwrap();
    let out = dir.path().join("r");
    assert!(bqq_bin()
        .args(["sweep", "--config"])
        .arg(&config)
        .arg("-o")
        .arg(&out)
        .status()
        .unwrap()
        .success());

    let csv = std::fs::read_to_string(out.with_extension("csv")).unwrap();
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.with_extension("json")).unwrap())
            .unwrap();
    let records = json.as_array().unwrap();
    let csv_rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(records.len(), csv_rows.len());
    for (row, record) in csv_rows.iter().zip(records) {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields[0], record["method"].as_str().unwrap());
        assert_eq!(fields[1], record["params"].as_str().unwrap());
        assert_eq!(fields[2], record["seed"].to_string());
        assert_eq!(fields[3], record["memory_bits"].to_string());
        let json_mse = record["mse"].as_f64().unwrap();
        let csv_mse: f64 = fields[4].parse().unwrap();
        assert_eq!(csv_mse, json_mse);
        assert_eq!(fields[5], record["wall_time_ms"].to_string());
    }
}

#[test]
fn bound_command_dominates_achieved_error_on_rank_one_positive_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("rankone.csv");
    // Strictly positive rank-1 matrix.
    let u = [1.0, 2.0, 0.5, 1.5, 3.0, 0.75, 2.5, 1.25];
    let v = [0.6, 1.1, 2.2, 0.9, 1.7, 0.4];
    let mut text = String::new();
    for ui in u {
        let row: Vec<String> = v.iter().map(|vj| format!("{}", ui * vj)).collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    std::fs::write(&input, text).unwrap();

    let output = bqq_bin()
        .arg("bound")
        .arg(&input)
        .args(["--l", "1", "--steps", "500"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let parsed: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    let bound = parsed["upper_bound_frobenius"].as_f64().unwrap();
    let achieved_rmse = parsed["achieved_sqrt_mse"].as_f64().unwrap();
    let achieved_frob = parsed["achieved_frobenius"].as_f64().unwrap();
    assert!(
        bound >= achieved_rmse,
        "bound {bound} < achieved sqrt-mse {achieved_rmse}"
    );
    assert!(
        bound + 1e-9 >= achieved_frob,
        "bound {bound} < achieved frobenius {achieved_frob}"
    );
}
