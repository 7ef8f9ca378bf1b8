use std::path::Path;
use std::process::{Command, Output};

fn g2kit(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_g2kit"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("spawn g2kit")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let idx = lines.next().unwrap().split(',').position(|h| h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

#[test]
fn verify_cone_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = g2kit(&["verify-cone", "--link", "s3xs3"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("d(phi_C) = 0: PASS"));
    assert!(dir.path().join("checks.csv").exists());
}

#[test]
fn feasibility_kappa_column_stops_below_delta() {
    let dir = tempfile::tempdir().unwrap();
    let o = g2kit(&["feasibility", "--mu", "1", "--nu-prime", "-4", "--delta", "0.2"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let csv = std::fs::read_to_string(dir.path().join("feasibility.csv")).unwrap();
    assert!(csv.starts_with("kappa,gamma_lb_mu,gamma_lb_nu,gamma_lb_delta\n"));
    let kmax = column(&csv, "kappa").into_iter().fold(0.0, f64::max);
    assert!(kmax < 0.2 && kmax > 0.199, "{kmax}");
}

#[test]
fn single_even_rate_at_minus_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = g2kit(&["rates", "--parity", "even", "--from", "-3.5", "--to", "-2.5"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let csv = std::fs::read_to_string(dir.path().join("critical_rates.csv")).unwrap();
    let rates = column(&csv, "lambda");
    assert_eq!(rates.len(), 1);
    assert!((rates[0] + 3.0).abs() < 1e-9);
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let o = g2kit(&["verify-pointwise", "--seed", "7"], d.path());
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
        let o = g2kit(&["glue-scan"], d.path());
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    }
    let mut names: Vec<_> = std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 4);
    for n in names {
        let x = std::fs::read(a.path().join(&n)).unwrap();
        let y = std::fs::read(b.path().join(&n)).unwrap();
        assert_eq!(x, y, "{n:?} differs");
        assert!(!x.contains(&b'\r'));
    }
    let header = std::fs::read_to_string(a.path().join("glue_scan_1.csv")).unwrap();
    assert!(header.starts_with("s,region,c0,l2,l14\n"));
}

#[test]
fn input_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[tolerances]\nslope = -1.0\n").unwrap();
    let o = g2kit(&["verify-pointwise", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    std::fs::write(&cfg, "[glue]\nmu = 1.0\nextra = 2\n").unwrap();
    let o = g2kit(&["glue-scan", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = g2kit(&["verify-link", "--link", "no-such-link"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = g2kit(&["rates", "--from", "x"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn failing_check_exits_one_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tight.toml");
    std::fs::write(&cfg, "[tolerances]\nslope = 1e-6\n").unwrap();
    let o = g2kit(&["glue-scan", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("failed invariant: (mu, nu', delta, gamma)"));
}

#[test]
fn config_glue_block_runs_one_set() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("glue.toml");
    std::fs::write(&cfg, "seed = 3\n[glue]\nmu = 1.0\nnu_prime = -4.0\ndelta = 0.2\ngamma = 0.8\n").unwrap();
    let o = g2kit(&["glue-scan", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("seed = 3"));
    let fits = std::fs::read_to_string(dir.path().join("glue_fits.csv")).unwrap();
    assert_eq!(fits.lines().count(), 4);
    assert!(dir.path().join("glue_scan.csv").exists());
}
