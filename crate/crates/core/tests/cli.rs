use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use stomo::container;
use stomo::solvers::read_trace_csv;
use stomo::ImageGrid;

const CONFIG: &str = r#"
[phantom]
kind = "shepp_logan_2d"
dims = [32, 32, 1]

[geometry]
kind = "parallel2d"
n_theta = 12

[noise]
kind = "gaussian"
rel_std = 0.02
seed = 1

[solver]
name = "fblisa"
mu = 0.5
n0 = 4
epochs = 6

[outputs]
checkpoints = [1.0, 100.0]
"#;

fn stomo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stomo"))
        .args(args)
        .env_remove("STOMO_THREADS")
        .output()
        .unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_then_reconstruct_then_evaluate() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "run.toml", CONFIG);
    let out = tmp.path().join("out");

    let sim = stomo(&["simulate", "--config", &cfg, "--out-dir", s(&out)]);
    assert!(sim.status.success(), "{}", String::from_utf8_lossy(&sim.stderr));
    let line = String::from_utf8(sim.stdout).unwrap();
    assert!(line.contains("32x32x1") && line.contains("n_theta=12") && line.contains("seed=1"), "{line}");
    let sino = container::load_sinogram(out.join("sinogram.stomo")).unwrap();
    assert_eq!(sino.values().len(), 12 * sino.geometry().det_cols);
    let first = fs::read(out.join("sinogram.stomo")).unwrap();
    assert!(stomo(&["simulate", "--config", &cfg, "--out-dir", s(&out)]).status.success());
    assert_eq!(first, fs::read(out.join("sinogram.stomo")).unwrap());

    let rec = stomo(&["reconstruct", "--config", &cfg, "--out-dir", s(&out), "--threads", "2"]);
    assert_eq!(rec.status.code(), Some(0), "{}", String::from_utf8_lossy(&rec.stderr));
    let trace = read_trace_csv(fs::File::open(out.join("trace.csv")).unwrap()).unwrap();
    assert!(!trace.is_empty());
    assert!(trace.windows(2).all(|w| w[0].batch_size <= w[1].batch_size));
    assert_eq!(trace[0].batch_size, 4);
    let table = fs::read_to_string(out.join("checkpoints.csv")).unwrap();
    assert!(table.starts_with("method,checkpoint_s,re,psnr_db,ssim\nfblisa,1,"), "{table}");

    let eval_dir = tmp.path().join("eval");
    let recon = out.join("recon.stomo");
    let gt = out.join("phantom.stomo");
    let ev = stomo(&["evaluate", s(&gt), s(&gt), "--out-dir", s(&eval_dir)]);
    assert!(ev.status.success());
    let report = fs::read_to_string(eval_dir.join("metrics.txt")).unwrap();
    assert!(report.contains("re = 0\n") || report.contains("re=0\n"), "{report}");
    let rep = stomo::MetricsReport::from_key_values(&report).unwrap();
    assert_eq!((rep.re, rep.ssim), (0.0, 1.0));

    let zeros = ImageGrid::zeros(container::load_image(&gt).unwrap().spec().clone()).unwrap();
    let zpath = tmp.path().join("zero.stomo");
    container::save_image(&zpath, &zeros).unwrap();
    let ev = stomo(&["evaluate", s(&zpath), s(&gt), "--out-dir", s(&eval_dir)]);
    assert!(ev.status.success());
    let rep = stomo::MetricsReport::from_key_values(&String::from_utf8(ev.stdout).unwrap()).unwrap();
    assert_eq!(rep.re, 1.0);

    let ev = stomo(&["evaluate", s(&recon), s(&gt), "--out-dir", s(&eval_dir)]);
    assert!(ev.status.success());
    let csv = fs::read_to_string(eval_dir.join("metrics.csv")).unwrap();
    assert!(csv.starts_with("re,psnr_db,ssim\n"));
}

#[test]
fn fb_trace_has_full_batches_and_no_backtracks() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "fb.toml",
        &CONFIG.replace("name = \"fblisa\"", "name = \"fb\"").replace("n0 = 4\n", ""),
    );
    assert!(stomo(&["simulate", "--config", &cfg, "--out-dir", s(tmp.path())]).status.success());
    let rec = stomo(&["reconstruct", "--config", &cfg, "--out-dir", s(tmp.path())]);
    assert!(rec.status.success(), "{}", String::from_utf8_lossy(&rec.stderr));
    let trace = read_trace_csv(fs::File::open(tmp.path().join("trace.csv")).unwrap()).unwrap();
    assert_eq!(trace.len(), 6);
    assert!(trace.iter().all(|r| r.batch_size == 12 && r.backtracks == 0));
}

#[test]
fn backtrack_cap_exits_with_solver_abort() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "cap.toml",
        &CONFIG.replace("epochs = 6", "epochs = 6\nalpha0 = 1e6\nmax_backtracks = 1"),
    );
    assert!(stomo(&["simulate", "--config", &cfg, "--out-dir", s(tmp.path())]).status.success());
    let rec = stomo(&["reconstruct", "--config", &cfg, "--out-dir", s(tmp.path())]);
    assert_eq!(rec.status.code(), Some(3));
    assert!(tmp.path().join("trace.csv").exists());
}

#[test]
fn error_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = stomo(&["simulate", "--config", s(&tmp.path().join("nope.toml"))]);
    assert_eq!(missing.status.code(), Some(4));
    assert!(!missing.stderr.is_empty());

    let typo = write_config(tmp.path(), "typo.toml", &CONFIG.replace("n0 = 4", "n_zero = 4"));
    let bad = stomo(&["simulate", "--config", &typo, "--out-dir", s(tmp.path())]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("n_zero"));

    let case = stomo(&["case", "9", "--out-dir", s(tmp.path())]);
    assert_eq!(case.status.code(), Some(2));

    let cfg = write_config(tmp.path(), "ok.toml", CONFIG);
    fs::write(tmp.path().join("sinogram.stomo"), b"not a container").unwrap();
    let corrupt = stomo(&["reconstruct", "--config", &cfg, "--out-dir", s(tmp.path())]);
    assert_eq!(corrupt.status.code(), Some(4));

    let threads = Command::new(env!("CARGO_BIN_EXE_stomo"))
        .args(["simulate", "--config", &cfg, "--out-dir", s(tmp.path())])
        .env("STOMO_THREADS", "lots")
        .output()
        .unwrap();
    assert_eq!(threads.status.code(), Some(2));
}

#[test]
fn case_writes_table_and_curves() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("case");
    let run = stomo(&["case", "2", "--budget", "3", "--seed", "3", "--out-dir", s(&out)]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let table = fs::read_to_string(out.join("table.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("method,checkpoint_s,re,psnr_db,ssim"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 9);
    for m in ["fblisa", "proxsgd", "fb"] {
        assert_eq!(rows.iter().filter(|r| r.starts_with(&format!("{m},"))).count(), 3);
        assert!(out.join(format!("recon_{m}.stomo")).exists());
        assert!(out.join(format!("trace_{m}.csv")).exists());
    }
    let curve = fs::read_to_string(out.join("re_vs_time.csv")).unwrap();
    assert!(curve.starts_with("method,elapsed_s,re\nfblisa,0,1\n"), "{}", &curve[..60]);
    assert!(out.join("config.toml").exists());
}
