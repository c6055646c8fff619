//! End-to-end tests driving the compiled binary: exit codes, warning
//! semantics, output-file reproducibility, and the cache environment
//! variable.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::tempdir;

const CSV_HEADER: &str = "tau,t,nu_tilde_1st_order,log_negativity,commutator_defect";

/// Run the binary with the given arguments and extra environment variables.
fn run(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_relcav"));
    cmd.args(args);
    // Never let the ambient environment leak a cache location into a test.
    cmd.env_remove("RELCAV_CACHE_DIR");
    for (key, value) in envs {
        cmd.env(key, value);
    }
    cmd.output().expect("binary runs")
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("process not killed by signal")
}

fn stdout_text(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("stdout is UTF-8")
}

fn stderr_text(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).expect("stderr is UTF-8")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.toml");
    fs::write(&path, body).expect("config written");
    path.to_string_lossy().into_owned()
}

/// Scenario config with the standard cavity (L = 1, modes 1 and 2).
fn scenario_config(out_dir: &Path, h: f64, n_max: usize, extra: &str) -> String {
    format!(
        r#"
repetitions = 5

[geometry]
length = 1.0
acceleration = {h}

[modes]
k = 1
k_prime = 2

[scenario]
tau = 0.3333333333333333
t = 0.3333333333333333
resonance_order = 2

[numerics]
n_max = {n_max}

[output]
dir = "{out}"
csv = "sweep.csv"
{extra}
"#,
        h = h,
        n_max = n_max,
        out = out_dir.display(),
        extra = extra,
    )
}

fn data_rows(csv: &str) -> Vec<&str> {
    csv.lines()
        .filter(|line| !line.starts_with('#') && !line.starts_with("tau,"))
        .filter(|line| !line.is_empty())
        .collect()
}

fn parse_row(row: &str) -> Vec<f64> {
    row.split(',')
        .map(|field| field.parse::<f64>().expect("numeric field"))
        .collect()
}

#[test]
fn missing_config_flag_is_a_config_error() {
    let output = run(&["evolve"], &[]);
    assert_eq!(exit_code(&output), 2);
    assert!(stderr_text(&output).contains("no configuration given"));
}

#[test]
fn malformed_config_reports_the_parse_location() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("broken.toml");
    fs::write(&path, "geometry = { not toml").unwrap();
    let output = run(&["evolve", "--config", path.to_str().unwrap()], &[]);
    assert_eq!(exit_code(&output), 2);
    let err = stderr_text(&output);
    assert!(err.contains("configuration error"), "stderr: {err}");
    assert!(err.contains("line"), "parse errors cite a location: {err}");
}

#[test]
fn unknown_keys_are_rejected_by_name() {
    let dir = tempdir().unwrap();
    let body = scenario_config(dir.path(), 1e-4, 8, "");
    let config = write_config(dir.path(), &format!("warp_factor = 1\n{body}"));
    let output = run(&["evolve", "--config", &config], &[]);
    assert_eq!(exit_code(&output), 2);
    assert!(stderr_text(&output).contains("warp_factor"));
}

#[test]
fn equal_mode_pair_is_rejected_with_the_invariant_named() {
    let dir = tempdir().unwrap();
    let body = scenario_config(dir.path(), 1e-4, 8, "").replace("k_prime = 2", "k_prime = 1");
    let config = write_config(dir.path(), &body);
    let output = run(&["evolve", "--config", &config], &[]);
    assert_eq!(exit_code(&output), 2);
    assert!(stderr_text(&output).contains("mode-pair invariant"));
}

#[test]
fn strong_burn_loads_with_a_warning_then_refuses_to_build() {
    let dir = tempdir().unwrap();
    let body = scenario_config(dir.path(), 0.5, 8, "");
    let config = write_config(dir.path(), &body);
    let output = run(&["evolve", "--config", &config, "--no-cache"], &[]);
    let err = stderr_text(&output);
    assert!(err.contains("warning:"), "stderr: {err}");
    assert!(err.contains("perturbative"), "stderr: {err}");
    assert_eq!(exit_code(&output), 3, "stderr: {err}");
    assert!(err.contains("exceeds the perturbative validity limit"));
}

#[test]
fn evolve_prints_the_full_report_and_keeps_stdout_machine_clean() {
    let dir = tempdir().unwrap();
    let body = scenario_config(dir.path(), 1e-4, 12, "");
    let config = write_config(dir.path(), &body);
    let output = run(
        &["evolve", "--config", &config, "--no-cache", "--nmax", "8"],
        &[],
    );
    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr_text(&output));
    let out = stdout_text(&output);
    for key in [
        "nu_tilde_first_order:",
        "log_negativity:",
        "squeezing_r:",
        "commutator_defect:",
        "symplectic_defect:",
        "config_hash:",
        "tool_version:",
    ] {
        assert!(out.contains(key), "missing `{key}` in stdout:\n{out}");
    }
    let err = stderr_text(&output);
    assert!(!err.contains("warning:"), "unexpected warning: {err}");
    // The effective-config echo (with the --nmax override applied) goes to
    // stderr so stdout stays parseable.
    assert!(err.contains("effective configuration"));
    assert!(err.contains("n_max = 8"));
    assert!(!out.contains("effective configuration"));
}

#[test]
fn explicit_segment_lists_drive_the_evolution() {
    let dir = tempdir().unwrap();
    let body = format!(
        r#"
repetitions = 2

[geometry]
length = 1.0
acceleration = 1e-4

[modes]
k = 1
k_prime = 2

[[trajectory.segments]]
kind = "burn"
duration = 0.2
strength = 1e-4

[[trajectory.segments]]
kind = "coast"
duration = 0.3

[[trajectory.segments]]
kind = "burn"
duration = 0.2
strength = -1e-4

[[trajectory.segments]]
kind = "coast"
duration = 0.3

[numerics]
n_max = 8

[output]
dir = "{out}"
csv = "sweep.csv"
"#,
        out = dir.path().display(),
    );
    let config = write_config(dir.path(), &body);
    let output = run(&["evolve", "--config", &config, "--no-cache"], &[]);
    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr_text(&output));
    let out = stdout_text(&output);
    assert!(out.contains("per_pass_proper_time: 1.0000000000000000e0"));
    assert!(out.contains("total_proper_time: 2.0000000000000000e0"));
}

#[test]
fn sweep_output_is_byte_identical_across_runs_and_worker_counts() {
    let dir = tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let extra = r#"heatmap = "sweep.svg"

[sweep]
variables = ["tau", "t"]
tau = { start = 0.0, stop = 0.6666666666666666, count = 4 }
t = { start = 0.0, stop = 0.6666666666666666, count = 4 }
"#;
    let body = scenario_config(&out_dir, 1e-4, 8, extra);
    let config = write_config(dir.path(), &body);

    let first = run(
        &["sweep", "--config", &config, "--no-cache", "--workers", "1"],
        &[],
    );
    assert_eq!(exit_code(&first), 0, "stderr: {}", stderr_text(&first));
    let csv_once = fs::read(out_dir.join("sweep.csv")).unwrap();
    let svg_once = fs::read(out_dir.join("sweep.svg")).unwrap();

    let second = run(
        &["sweep", "--config", &config, "--no-cache", "--workers", "2"],
        &[],
    );
    assert_eq!(exit_code(&second), 0, "stderr: {}", stderr_text(&second));
    let csv_twice = fs::read(out_dir.join("sweep.csv")).unwrap();
    let svg_twice = fs::read(out_dir.join("sweep.svg")).unwrap();

    assert_eq!(csv_once, csv_twice, "CSV bytes depend on the worker count");
    assert_eq!(svg_once, svg_twice, "SVG bytes depend on the worker count");

    let csv = String::from_utf8(csv_once).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# tool_version: "));
    assert!(lines.next().unwrap().starts_with("# config_hash: "));
    assert_eq!(lines.next().unwrap(), CSV_HEADER);
    assert_eq!(data_rows(&csv).len(), 16);

    let svg = String::from_utf8(svg_once).unwrap();
    assert!(svg.starts_with("<svg "));
    assert!(svg.trim_end().ends_with("</svg>"));
    assert!(svg.contains("tool_version:"));
    assert!(svg.contains("config_hash:"));
}

#[test]
fn cache_directory_env_var_controls_where_blocks_are_stored() {
    let dir = tempdir().unwrap();
    let cache_dir = dir.path().join("cache");
    let body = scenario_config(dir.path(), 1e-4, 8, "");
    let config = write_config(dir.path(), &body);
    let envs = [("RELCAV_CACHE_DIR", cache_dir.to_str().unwrap())];

    let first = run(&["coeffs", "--config", &config], &envs);
    assert_eq!(exit_code(&first), 0, "stderr: {}", stderr_text(&first));
    assert!(stdout_text(&first).contains("unitarity_defect"));

    let stored: Vec<String> = fs::read_dir(&cache_dir)
        .expect("cache directory created")
        .map(|entry| entry.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert!(
        stored
            .iter()
            .any(|name| name.starts_with("junction-") && name.ends_with(".json")),
        "no cache entry in {stored:?}"
    );

    let second = run(&["coeffs", "--config", &config], &envs);
    assert_eq!(exit_code(&second), 0, "stderr: {}", stderr_text(&second));
}

#[test]
fn zero_acceleration_sweep_has_all_zero_entanglement_columns() {
    let dir = tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let extra = r#"
[sweep]
variables = ["tau", "t"]
tau = { start = 0.0, stop = 0.5, count = 3 }
t = { start = 0.0, stop = 0.5, count = 3 }
"#;
    let body = scenario_config(&out_dir, 0.0, 8, extra);
    let config = write_config(dir.path(), &body);
    let output = run(&["sweep", "--config", &config, "--no-cache"], &[]);
    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr_text(&output));
    let csv = fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 9);
    for row in rows {
        let fields = parse_row(row);
        assert!(
            fields[2].abs() < 1e-12 && fields[3].abs() < 1e-12,
            "mode mixing without acceleration in row: {row}"
        );
    }
}

#[test]
fn single_point_sweep_at_a_closed_form_zero_stays_below_1e9() {
    // A burn lasting a full period of the mode-sum frequency creates nothing
    // at first order; only a second-order residue (~ h^2) remains.
    let dir = tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let extra = r#"
[sweep]
variables = ["tau", "t"]
tau = { start = 0.6666666666666666, stop = 0.6666666666666666, count = 1 }
t = { start = 0.1, stop = 0.1, count = 1 }
"#;
    let body = scenario_config(&out_dir, 1e-5, 8, extra);
    let config = write_config(dir.path(), &body);
    let output = run(&["sweep", "--config", &config, "--no-cache"], &[]);
    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr_text(&output));
    let csv = fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 1);
    let fields = parse_row(rows[0]);
    assert!(fields[2].abs() < 1e-9, "nu_tilde_1st_order = {}", fields[2]);
    assert!(fields[3].abs() < 1e-9, "log_negativity = {}", fields[3]);
}

#[test]
fn resonance_report_lists_resonance_times() {
    let dir = tempdir().unwrap();
    let body = scenario_config(dir.path(), 1e-4, 8, "");
    let config = write_config(dir.path(), &body);
    let output = run(
        &[
            "resonance",
            "--config",
            &config,
            "--no-cache",
            "--orders",
            "1,2",
        ],
        &[],
    );
    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr_text(&output));
    let out = stdout_text(&output);
    assert!(out.contains("resonance_time"), "stdout: {out}");
    assert!(out.contains("0.6667"), "first resonance time: {out}");
    assert!(out.contains("1.3333"), "second resonance time: {out}");
    assert!(out.contains("pipeline_gain_per_pass"), "stdout: {out}");
}

#[test]
fn evenly_separated_modes_are_flagged_as_non_resonant() {
    let dir = tempdir().unwrap();
    let body = scenario_config(dir.path(), 1e-4, 8, "").replace("k_prime = 2", "k_prime = 3");
    let config = write_config(dir.path(), &body);
    let output = run(
        &[
            "resonance",
            "--config",
            &config,
            "--no-cache",
            "--orders",
            "1",
        ],
        &[],
    );
    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr_text(&output));
    assert!(stdout_text(&output).contains("no first-order resonance"));
}

#[test]
fn validate_passes_on_a_sound_configuration() {
    let dir = tempdir().unwrap();
    let body = scenario_config(dir.path(), 1e-4, 8, "");
    let config = write_config(dir.path(), &body);
    let output = run(&["validate", "--config", &config, "--no-cache"], &[]);
    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr_text(&output));
    let out = stdout_text(&output);
    assert!(out.contains("0 failed"), "stdout: {out}");
    assert!(!out.contains("FAIL"), "stdout: {out}");
}

#[test]
fn per_point_build_failures_leave_nan_rows_and_a_numeric_exit() {
    // The second burn strength (ratio 2.2 on h = 0.05) clears the
    // configuration bound but exceeds the build-time perturbative hard
    // limit, so every grid point with nonzero duration fails.
    let dir = tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let extra = r#"
[sweep]
variables = ["tau", "t"]
tau = { start = 0.0, stop = 0.5, count = 3 }
t = { start = 0.0, stop = 0.5, count = 3 }
"#;
    let body = scenario_config(&out_dir, 0.05, 8, extra)
        .replace("resonance_order = 2", "resonance_order = 2\nstrength_ratio = 2.2");
    let config = write_config(dir.path(), &body);
    let output = run(&["sweep", "--config", &config, "--no-cache"], &[]);
    assert_eq!(exit_code(&output), 3);
    assert!(stderr_text(&output).contains("grid points failed"));
    let csv = fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 9);
    let nan_rows = rows.iter().filter(|row| row.contains("NaN")).count();
    assert_eq!(nan_rows, 8, "csv:\n{csv}");
    // The zero-duration corner is the identity and must survive.
    assert!(!rows[0].contains("NaN"), "row: {}", rows[0]);
}

#[test]
fn out_flag_overrides_the_output_directory() {
    let dir = tempdir().unwrap();
    let configured = dir.path().join("configured");
    let overridden = dir.path().join("overridden");
    let extra = r#"
[sweep]
variables = ["tau"]
tau = { start = 0.0, stop = 0.3, count = 2 }
"#;
    let body = scenario_config(&configured, 1e-4, 8, extra);
    let config = write_config(dir.path(), &body);
    let output = run(
        &[
            "sweep",
            "--config",
            &config,
            "--no-cache",
            "--out",
            overridden.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(exit_code(&output), 0, "stderr: {}", stderr_text(&output));
    assert!(overridden.join("sweep.csv").exists());
    assert!(!configured.join("sweep.csv").exists());
}

#[test]
fn heatmap_requests_require_a_two_variable_sweep() {
    let dir = tempdir().unwrap();
    let extra = r#"heatmap = "sweep.svg"

[sweep]
variables = ["tau"]
tau = { start = 0.0, stop = 0.3, count = 2 }
"#;
    let body = scenario_config(dir.path(), 1e-4, 8, extra);
    let config = write_config(dir.path(), &body);
    let output = run(&["sweep", "--config", &config, "--no-cache"], &[]);
    assert_eq!(exit_code(&output), 2);
    assert!(stderr_text(&output).contains("two-variable sweep"));
}
