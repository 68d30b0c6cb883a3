use std::path::Path;
use std::process::{Command, Output};

use hfce::dictionary::dft_dictionary;
use hfce::geometry::ArrayConfig;
use hfce::io::{load_dictionary, read_channel_binary};

fn hfce(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hfce"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn hfce")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    std::fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

/// Small but complete config so CLI tests stay fast.
const SMALL: &str = "\
array.num_antennas = 64
pilots.count = 48
channel.num_paths = 3
channel.distance_min = 0.5
channel.distance_max = 6.0
dictionary.rho_min = 0.32
estimation.kappa = 4
run.trials = 4
";

#[test]
fn snr_sweep_with_single_trial() {
    let dir = tempfile::tempdir().unwrap();
    let o = hfce(&["sweep-snr", "--trials", "1", "--out", "s.csv"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "sweep_value,estimator,nmse_linear,nmse_db,trials,stderr_db");
    assert_eq!(lines.len(), 1 + 6 * 4);
    let meta = std::fs::read_to_string(dir.path().join("s.csv.meta")).unwrap();
    for key in ["config_hash=", "base_seed=2022", "polar_columns=380", "library_version="] {
        assert!(meta.contains(key), "missing {key}");
    }
    let err = stderr(&o);
    assert!(err.contains("run.seed = 2022") && err.contains("array.num_antennas = 256"));
}

#[test]
fn paper_profile_shape() {
    let dir = tempfile::tempdir().unwrap();
    let o = hfce(&["sweep-snr", "--profile", "paper", "--trials", "1", "--out", "p.csv"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("p.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 24);
    let snrs: Vec<&str> = rows.iter().step_by(4).map(|r| r[0]).collect();
    assert_eq!(snrs, ["0", "2", "4", "6", "8", "10"]);
    let names: Vec<&str> = rows[..4].iter().map(|r| r[1]).collect();
    assert_eq!(names, ["ff-omp", "nf-omp", "hf-omp", "mmse"]);
    let meta = std::fs::read_to_string(dir.path().join("p.csv.meta")).unwrap();
    assert!(meta.contains("polar_columns=2068"));
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = hfce(&["sweep-snr", "--config", "missing.toml"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing.toml"));

    let bad = write(dir.path(), "bad.toml", "channel.gama = 0.5\n");
    let o = hfce(&["sweep-gamma", "--config", &bad], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("gama"));

    let o = hfce(&["sweep-snr", "--estimators", "ff-omp,amp"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = hfce(&["sweep-snr", "--bogus-flag"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = hfce(&["sweep-snr", "--trials", "1", "--out", "no/such/dir/x.csv"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn gamma_sweep_rounding_and_endpoints() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let o = hfce(
        &["sweep-gamma", "--config", &cfg, "--gamma-grid", "0,0.25,0.5,0.75,1", "--out", "g.csv"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let err = stderr(&o);
    assert!(err.contains("gamma=0.5 gives gamma*L=1.5"), "{err}");
    assert!(err.contains("round half toward far"));

    // The default grid (multiples of 1/L for L = 6) never rounds.
    let o = hfce(&["sweep-gamma", "--trials", "1", "--estimators", "ls", "--out", "d.csv"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(!stderr(&o).contains("gives gamma*L"));

    let csv = std::fs::read_to_string(dir.path().join("g.csv")).unwrap();
    let field = |g: &str, e: &str| -> String {
        csv.lines()
            .find(|l| l.starts_with(&format!("{g},{e},")))
            .unwrap()
            .split(',')
            .skip(2)
            .collect::<Vec<_>>()
            .join(",")
    };
    assert_eq!(field("0", "hf-omp"), field("0", "nf-omp"));
    assert_eq!(field("1", "hf-omp"), field("1", "ff-omp"));
}

#[test]
fn logged_configuration_reproduces_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let o = hfce(&["sweep-snr", "--config", &cfg, "--seed", "77", "--out", "a.csv"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let logged: String = stderr(&o)
        .lines()
        .filter_map(|l| l.strip_prefix("  "))
        .map(|l| format!("{l}\n"))
        .collect();
    let replay = write(dir.path(), "replay.toml", &logged);
    let o = hfce(&["sweep-snr", "--config", &replay, "--out", "b.csv"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}\n{logged}", stderr(&o));
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn export_dictionaries() {
    let dir = tempfile::tempdir().unwrap();
    let o = hfce(&["export-dict", "--kind", "angle", "--profile", "paper", "--out", "f.bin"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let f = load_dictionary(&dir.path().join("f.bin")).unwrap();
    assert_eq!(f.num_columns(), 512);
    let reference = dft_dictionary(&ArrayConfig::half_wavelength(512, 0.01).unwrap()).unwrap();
    assert!(f.matrix().iter().zip(reference.matrix().iter()).all(|(a, b)| a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits()));
    let mut again = Vec::new();
    hfce::io::write_dictionary(&mut again, &f).unwrap();
    assert_eq!(again, std::fs::read(dir.path().join("f.bin")).unwrap());

    let o = hfce(&["export-dict", "--kind", "polar", "--profile", "paper", "--out", "w.bin"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let out = String::from_utf8(o.stdout).unwrap();
    let s: usize = out.trim().strip_prefix("S=").unwrap().parse().unwrap();
    assert!((1500..=2600).contains(&s), "{s}");

    let cfg = write(dir.path(), "far.toml", "dictionary.rho_min = 5000\n");
    let o = hfce(&["export-dict", "--kind", "polar", "--config", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("rho_min"));
}

#[test]
fn export_channel_formats() {
    let dir = tempfile::tempdir().unwrap();
    let o = hfce(&["export-channel", "--trial", "2", "--out", "h.csv"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let o = hfce(&["export-channel", "--trial", "2", "--format", "bin", "--out", "h.bin"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let h = read_channel_binary(&mut std::fs::read(dir.path().join("h.bin")).unwrap().as_slice()).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("h.csv")).unwrap();
    assert_eq!(csv.lines().count(), 257);
    for (i, line) in csv.lines().skip(1).enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[0], i.to_string());
        assert_eq!(f[1].parse::<f64>().unwrap().to_bits(), h[i].re.to_bits());
        assert_eq!(f[2].parse::<f64>().unwrap().to_bits(), h[i].im.to_bits());
    }
}

#[test]
fn plotdata_shapes_errors_and_idempotence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let o = hfce(&["sweep-snr", "--config", &cfg, "--trials", "2", "--out", "s.csv"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let o = hfce(&["plotdata", "s.csv", "--out", "plots"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let listed = String::from_utf8(o.stdout).unwrap();
    let names: Vec<String> = listed
        .lines()
        .map(|l| Path::new(l).file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names, ["ff-omp.dat", "hf-omp.dat", "mmse.dat", "nf-omp.dat"]);
    let read_all = || -> Vec<Vec<u8>> {
        names.iter().map(|n| std::fs::read(dir.path().join("plots").join(n)).unwrap()).collect()
    };
    let first = read_all();
    for body in &first {
        let text = std::str::from_utf8(body).unwrap();
        assert_eq!(text.lines().count(), 6);
        assert!(text.lines().all(|l| l.split(' ').count() == 2));
    }
    let o = hfce(&["plotdata", "s.csv", "--out", "plots"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(read_all(), first);

    let header = write(dir.path(), "empty.csv", "sweep_value,estimator,nmse_linear,nmse_db,trials,stderr_db\n");
    let o = hfce(&["plotdata", &header], dir.path());
    assert_eq!(o.status.code(), Some(2));

    let broken = write(
        dir.path(),
        "broken.csv",
        "sweep_value,estimator,nmse_linear,nmse_db,trials,stderr_db\n0,ls,1,0,1,0\n2,ls,oops,0,1,0\n",
    );
    let o = hfce(&["plotdata", &broken], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}
