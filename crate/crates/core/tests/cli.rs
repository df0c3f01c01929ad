use std::fs;
use std::path::Path;

use hedgerate::cli_io::{parse_config, read_csv, run_command, EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME};

const BASE: &str = "schema_version = 1\nbeta = 0.5\nn_values = [4, 8, 16]\nn_paths = 2000\nseed = 7\n\
                    [payoff]\nkind = \"indicator\"\nstrike = 0.0\n";

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("c.toml");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> i32 {
    run_command(std::iter::once("hedgerate").chain(args.iter().copied()))
}

fn summaries(dir: &Path) -> Vec<serde_json::Value> {
    fs::read_to_string(dir.join("summary.jsonl")).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn coeffs_for_indicator() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), BASE);
    let out = dir.path().join("out");
    assert_eq!(run(&["coeffs", "--config", &cfg, "--output", out.to_str().unwrap()]), EXIT_OK);
    let table = read_csv(&out.join("coefficients.csv")).unwrap();
    assert_eq!(table.header, ["n", "c_n"]);
    let c = table.column("c_n").unwrap();
    assert_eq!(c.len(), 65);
    assert_eq!(c[0], 0.5);
    assert!((c[1] - 0.398_942_280_401_432_7).abs() < 1e-16);
    assert!(out.join("config.toml").exists());
}

#[test]
fn sweep_then_fit_reproduces_slope_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), BASE);
    let out = dir.path().join("out");
    let out_s = out.to_str().unwrap();
    assert_eq!(run(&["sweep", "--config", &cfg, "--output", out_s]), EXIT_OK);
    let table = read_csv(&out.join("sweep.csv")).unwrap();
    assert_eq!(table.header, ["n", "analytic_error", "mc_error", "mc_std_error"]);
    assert_eq!(run(&["fit", "--output", out_s]), EXIT_OK);
    let s = summaries(&out);
    assert_eq!(s.len(), 2);
    assert_eq!(s[0]["command"], "sweep");
    assert_eq!(s[1]["command"], "fit");
    let (a, b) = (s[0]["fitted_slope"].as_f64().unwrap(), s[1]["fitted_slope"].as_f64().unwrap());
    assert_eq!(a.to_bits(), b.to_bits());
    assert_eq!(s[0]["fitted_c2"], s[1]["fitted_c2"]);
    assert!(out.join("fit.csv").exists());
}

#[test]
fn resolved_config_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), BASE);
    let first = dir.path().join("first");
    assert_eq!(run(&["oracle", "--config", &cfg, "--output", first.to_str().unwrap(), "--seed", "9"]), EXIT_OK);
    let resolved_text = fs::read_to_string(first.join("config.toml")).unwrap();
    let resolved = parse_config(&resolved_text).unwrap();
    assert_eq!(resolved.seed, 9);
    assert_eq!(resolved.output_path.as_deref(), first.to_str());

    let second = dir.path().join("second");
    let resolved_path = first.join("config.toml");
    assert_eq!(
        run(&["oracle", "--config", resolved_path.to_str().unwrap(), "--output", second.to_str().unwrap()]),
        EXIT_OK
    );
    assert_eq!(fs::read(first.join("oracle.csv")).unwrap(), fs::read(second.join("oracle.csv")).unwrap());
    assert_eq!(summaries(&first)[0]["config_digest"], summaries(&second)[0]["config_digest"]);
}

#[test]
fn simulate_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), BASE);
    let out = dir.path().join("o");
    let out_s = out.to_str().unwrap();
    assert_eq!(
        run(&["simulate", "--config", &cfg, "--output", out_s, "--intervals", "8", "--n-paths", "4000"]),
        EXIT_OK
    );
    let sim = read_csv(&out.join("simulate.csv")).unwrap();
    assert_eq!(sim.column("n").unwrap(), [8.0]);
    assert_eq!(sim.column("n_paths").unwrap(), [4000.0]);
    assert!(summaries(&out)[0]["z_score"].as_f64().unwrap().abs() < 5.0);

    assert_eq!(run(&["report", "--config", &cfg, "--output", out_s, "--thetas", "0.2,0.4"]), EXIT_OK);
    let rep = read_csv(&out.join("smoothness.csv")).unwrap();
    assert_eq!(rep.column("theta").unwrap(), [0.2, 0.4]);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let out_s = out.to_str().unwrap();
    let bad = write_config(dir.path(), &BASE.replace("beta = 0.5", "beta = 1.5"));
    assert_eq!(run(&["sweep", "--config", &bad, "--output", out_s]), EXIT_CONFIG);
    assert_eq!(run(&["sweep", "--output", out_s]), EXIT_CONFIG);
    assert_eq!(run(&["nonsense"]), EXIT_CONFIG);
    assert_eq!(run(&["sweep", "--config", "/nonexistent/c.toml", "--output", out_s]), EXIT_RUNTIME);
    assert_eq!(run(&["fit", "--input", "/nonexistent/sweep.csv", "--output", out_s]), EXIT_RUNTIME);
    let constant = write_config(
        dir.path(),
        &BASE.replace("kind = \"indicator\"\nstrike = 0.0", "kind = \"polynomial\"\ncoefficients = [2.0]"),
    );
    assert_eq!(run(&["sweep", "--config", &constant, "--output", out_s]), EXIT_RUNTIME);
    assert_eq!(run(&["--help"]), EXIT_OK);
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), BASE);
    let env_dir = dir.path().join("from-env");
    // only this test reads the variable
    unsafe { std::env::set_var("HEDGERATE_OUTPUT_DIR", &env_dir) };
    let code = run(&["coeffs", "--config", &cfg]);
    unsafe { std::env::remove_var("HEDGERATE_OUTPUT_DIR") };
    assert_eq!(code, EXIT_OK);
    assert!(env_dir.join("coefficients.csv").exists());
}
