use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_icf-bvsr"))
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin().args(args).current_dir(dir).output().expect("binary runs")
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let idx = r.headers().unwrap().iter().position(|h| h == name).unwrap();
    r.records().map(|rec| rec.unwrap()[idx].parse().unwrap()).collect()
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn scalar_system_by_hand() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("x.csv"), "2\n").unwrap();
    fs::write(dir.path().join("z.csv"), "10\n").unwrap();
    for method in ["direct", "icf"] {
        let out = run(&["solve", "x.csv", "z.csv", "--sigma", "1", "--method", method], dir.path());
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let beta: f64 = String::from_utf8(out.stdout).unwrap().trim().parse().unwrap();
        assert!((beta - 2.0).abs() < 1e-9, "{method}: {beta}");
    }
    assert_eq!(column(&dir.path().join("solution.csv"), "beta").len(), 1);
    assert_eq!(
        header(&dir.path().join("report.csv")),
        "method,dim,iterations,converged,max_step,wall_time_s,rho_hat,final_omega,residual_inf"
    );
}

#[test]
fn icf_agrees_with_direct() {
    let dir = TempDir::new().unwrap();
    let mut x = String::new();
    let mut state = 12345u64;
    for _ in 0..60 {
        let row: Vec<String> = (0..8)
            .map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                format!("{:.6}", (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5)
            })
            .collect();
        x.push_str(&row.join(","));
        x.push('\n');
    }
    fs::write(dir.path().join("x.csv"), x).unwrap();
    fs::write(dir.path().join("z.csv"), "1,-2,3,0.5,0,1,-1,2\n").unwrap();
    let mut sols = Vec::new();
    for method in ["direct", "icf"] {
        let out = run(
            &["solve", "x.csv", "z.csv", "--sigma", "2", "--method", method, "--out", method],
            dir.path(),
        );
        assert_eq!(out.status.code(), Some(0));
        sols.push(column(&dir.path().join(method).join("solution.csv"), "beta"));
    }
    let diff = sols[0].iter().zip(&sols[1]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(diff < 1e-6, "{diff}");
}

#[test]
fn malformed_csv_names_the_line() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("bad.csv"), "1,2\n3,4\n5,oops\n").unwrap();
    let out = run(&["solve", "bad.csv", "--null-z"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 3"), "{err}");

    fs::write(dir.path().join("x.csv"), "1,0\n0,1\n").unwrap();
    fs::write(dir.path().join("z.csv"), "1,2,3\n").unwrap();
    let out = run(&["solve", "x.csv", "z.csv"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("dimension 2"));

    let out = run(&["solve", "--definitely-not-a-flag"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn iteration_cap_exits_with_two() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("x.csv"), "1,1\n1,-1\n2,0.5\n").unwrap();
    fs::write(dir.path().join("z.csv"), "5\n-3\n").unwrap();
    let out = run(&["solve", "x.csv", "z.csv", "--method", "gs", "--max-iter", "1"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(column(&dir.path().join("report.csv"), "iterations"), vec![1.0]);
}

#[test]
fn null_z_gives_zero() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("g.csv"), "4,1\n1,3\n").unwrap();
    let out = run(&["solve", "g.csv", "--gram", "--null-z"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(column(&dir.path().join("solution.csv"), "beta"), vec![0.0, 0.0]);
}

fn simulate(dir: &Path) {
    let out = run(
        &["simulate", "--n", "120", "--p", "40", "--n-causal", "3", "--h", "0.6", "--seed", "5", "--out", "sim"],
        dir,
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

fn fit(dir: &Path, out_dir: &str, chains: &str) -> Output {
    run(
        &[
            "fit",
            "sim/genotypes.txt",
            "sim/phenotype.txt",
            "--burn-in",
            "200",
            "--steps",
            "1000",
            "--rb-interval",
            "250",
            "--pi-min",
            "0.01",
            "--pi-max",
            "0.3",
            "--seed",
            "11",
            "--chains",
            chains,
            "--out",
            out_dir,
        ],
        dir,
    )
}

#[test]
fn simulate_fit_calibrate_round_trip() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    simulate(d);
    assert!(fs::read_to_string(d.join("sim/genotypes.txt")).unwrap().starts_with("# snp0 snp1"));
    assert_eq!(header(&d.join("sim/truth.csv")), "index,beta_true,causal");

    let out = fit(d, "a", "1");
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(header(&d.join("a/pip.csv")), "index,raw_pip,rb_pip");
    assert_eq!(header(&d.join("a/hyper.csv")), "chain,record,h,pve,model_size,pi,tau");
    assert_eq!(column(&d.join("a/pip.csv"), "rb_pip").len(), 40);
    let hyper = fs::read_to_string(d.join("a/hyper.csv")).unwrap();
    assert_eq!(hyper.lines().count(), 1001);

    // the same seed reproduces every posterior output
    assert_eq!(fit(d, "b", "1").status.code(), Some(0));
    for f in ["pip.csv", "hyper.csv", "summary.csv", "beta.csv"] {
        assert_eq!(fs::read(d.join("a").join(f)).unwrap(), fs::read(d.join("b").join(f)).unwrap(), "{f}");
    }

    let truth = column(&d.join("sim/truth.csv"), "causal");
    let rb = column(&d.join("a/pip.csv"), "rb_pip");
    let causal_mean = rb.iter().zip(&truth).filter(|(_, t)| **t == 1.0).map(|(p, _)| p).sum::<f64>() / 3.0;
    let null_mean = rb.iter().zip(&truth).filter(|(_, t)| **t == 0.0).map(|(p, _)| p).sum::<f64>() / 37.0;
    assert!(causal_mean > null_mean, "{causal_mean} vs {null_mean}");

    let out = run(&["calibrate", "--pip", "a/pip.csv", "--truth", "sim/truth.csv", "--out", "cal"], d);
    assert_eq!(out.status.code(), Some(0));
    let cal = fs::read_to_string(d.join("cal/calibration.csv")).unwrap();
    assert_eq!(cal.lines().next().unwrap(), "bin,lower,upper,count,mean_pip,tp_fraction,se");
    assert_eq!(cal.lines().count(), 21);
    assert_eq!(column(&d.join("cal/calibration.csv"), "count").iter().sum::<f64>(), 40.0);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("a/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "fit");
    assert_eq!(manifest["seed"], 11);
    assert_eq!(manifest["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    assert_eq!(manifest["details"]["missing_imputed"], 0);
}

#[test]
fn multiple_chains_write_combined_summary() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    simulate(d);
    let out = fit(d, "c", "3");
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(header(&d.join("c/summary.csv")), "parameter,combined,run1,run2,run3");
    for k in 1..=3 {
        assert!(d.join(format!("c/pip_run{k}.csv")).exists());
    }
    let summary = fs::read_to_string(d.join("c/summary.csv")).unwrap();
    let h: Vec<f64> = summary
        .lines()
        .find(|l| l.starts_with("h,"))
        .unwrap()
        .split(',')
        .skip(1)
        .map(|v| v.parse().unwrap())
        .collect();
    let mean_runs = (h[1] + h[2] + h[3]) / 3.0;
    assert!((h[0] - mean_runs).abs() < 1e-12);
    assert_eq!(fs::read_to_string(d.join("c/hyper.csv")).unwrap().lines().count(), 3001);
}

#[test]
fn missing_genotypes_are_imputed_and_counted() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    simulate(d);
    let geno = fs::read_to_string(d.join("sim/genotypes.txt")).unwrap();
    let mut lines: Vec<String> = geno.lines().map(str::to_string).collect();
    for i in [3, 7] {
        let mut toks: Vec<&str> = lines[i].split(' ').collect();
        toks[5] = "NA";
        lines[i] = toks.join(" ");
    }
    fs::write(d.join("sim/genotypes.txt"), lines.join("\n") + "\n").unwrap();
    assert_eq!(fit(d, "m", "1").status.code(), Some(0));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("m/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["details"]["missing_imputed"], 2);
}

#[test]
fn small_benchmark_files() {
    let dir = TempDir::new().unwrap();
    let out = run(
        &["bench", "--mode", "dep", "--p-grid", "10,20", "--trials", "3", "--n", "80", "--methods", "icf,sor"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let d = dir.path();
    assert_eq!(
        header(&d.join("bench_results.csv")),
        "mode,method,p,trial,wall_time_s,iterations,converged,max_error_vs_direct"
    );
    assert_eq!(header(&d.join("error_dist.csv")), "mode,method,p,trial,max_error_vs_direct,log10_error");
    assert_eq!(
        header(&d.join("bench_summary.csv")),
        "mode,method,p,trials,failures,median_wall_time_s,median_iterations,median_log10_error"
    );
    // 2 p values x 3 trials x (direct + 2 methods)
    assert_eq!(fs::read_to_string(d.join("bench_results.csv")).unwrap().lines().count(), 19);
}

#[test]
fn thread_variable_is_validated() {
    let dir = TempDir::new().unwrap();
    let out = bin()
        .args(["bench", "--p-grid", "5", "--trials", "1", "--n", "20"])
        .env("ICF_BVSR_THREADS", "zero")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = bin()
        .args(["bench", "--p-grid", "5", "--trials", "2", "--n", "20"])
        .env("ICF_BVSR_THREADS", "2")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}
