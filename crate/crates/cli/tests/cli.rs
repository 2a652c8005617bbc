use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scop_core::ingest::{to_binary, to_csv};
use scop_core::signal::EpochedSeries;

fn scop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scop"))
        .args(args)
        .env_remove("SCOP_THREADS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Two channels sharing a common component, 80 epochs of 64 samples at 64 Hz.
fn dataset() -> EpochedSeries {
    let (r, t) = (80, 64);
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let common: Vec<f64> = (0..r * t).map(|_| rng.random::<f64>() - 0.5).collect();
    let mut data = Vec::with_capacity(2 * r * t);
    for w in [1.0, 0.8] {
        data.extend(common.iter().map(|c| w * c + 0.3 * (rng.random::<f64>() - 0.5)));
    }
    EpochedSeries::new(2, r, t, 64.0, data).unwrap()
}

fn write_data(dir: &Path) -> (PathBuf, PathBuf) {
    let s = dataset();
    let csv = dir.join("data.csv");
    let bin = dir.join("data.bin");
    fs::write(&csv, to_csv(&s).unwrap()).unwrap();
    fs::write(&bin, to_binary(&s).unwrap()).unwrap();
    (csv, bin)
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(code(&scop(&["--help"])), 0);
    assert_eq!(code(&scop(&["no-such-command"])), 2);
    let o = scop(&["simulate", "sim1", "--R", "10"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--B"));
    assert_eq!(code(&scop(&["simulate", "sim1", "--B", "x"])), 2);
}

#[test]
fn ingest_check_reads_both_formats_identically() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, bin) = write_data(dir.path());
    let a = scop(&["ingest-check", p(&csv), "--fs", "64"]);
    let b = scop(&["ingest-check", p(&bin)]);
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    assert_eq!(code(&b), 0, "{}", stderr(&b));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(
        String::from_utf8_lossy(&a.stdout).trim(),
        "ok: channels=2 epochs=80 samples=64 fs=64"
    );
    // CSV needs a sampling rate
    assert_eq!(code(&scop(&["ingest-check", p(&csv)])), 2);
}

#[test]
fn data_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let (_, bin) = write_data(dir.path());
    let mut bytes = fs::read(&bin).unwrap();
    bytes[0] = b'Z';
    let bad = dir.path().join("bad.bin");
    fs::write(&bad, &bytes).unwrap();
    let o = scop(&["ingest-check", p(&bad)]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("BAD_MAGIC"));

    let nan = dir.path().join("nan.csv");
    fs::write(&nan, "channel,epoch,t,value\n1,1,1,1.0\n1,1,2,nan\n").unwrap();
    let o = scop(&["ingest-check", p(&nan), "--fs", "10"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("NON_FINITE at row 3"), "{}", stderr(&o));

    assert_eq!(code(&scop(&["ingest-check", "/nonexistent/file.bin"])), 3);
}

#[test]
fn analyze_reports_domain_and_range_errors() {
    let dir = tempfile::tempdir().unwrap();
    let (_, bin) = write_data(dir.path());
    let o = scop(&["analyze", p(&bin), "--channels", "1,2", "--freq", "40"]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    let o = scop(&[
        "analyze",
        p(&bin),
        "--channels",
        "1,2",
        "--freq",
        "8",
        "--epochs",
        "1:40",
        "--paired-epochs",
        "41:70",
    ]);
    assert_eq!(code(&o), 3);
    assert_eq!(
        code(&scop(&["analyze", p(&bin), "--channels", "1,5", "--freq", "8"])),
        3
    );
    assert_eq!(
        code(&scop(&["analyze", p(&bin), "--channels", "1", "--freq", "8"])),
        2
    );
    assert_eq!(
        code(&scop(&[
            "analyze",
            p(&bin),
            "--channels",
            "1,2",
            "--freq",
            "8",
            "--method",
            "x"
        ])),
        2
    );
}

#[test]
fn analyze_writes_reports_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, bin) = write_data(dir.path());
    let run = |input: &Path, out: &Path, threads: &str| {
        let o = scop(&[
            "analyze",
            p(input),
            "--fs",
            "64",
            "--channels",
            "1,2",
            "--freq",
            "8",
            "--out",
            p(out),
            "--threads",
            threads,
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    };
    let (o1, o2) = (dir.path().join("o1"), dir.path().join("o2"));
    run(&bin, &o1, "1");
    run(&csv, &o2, "3");
    for f in ["pair_report.json", "fits.csv", "scatter.csv", "surface.csv"] {
        assert_eq!(
            fs::read(o1.join(f)).unwrap(),
            fs::read(o2.join(f)).unwrap(),
            "{f}"
        );
    }
    let report = fs::read_to_string(o1.join("pair_report.json")).unwrap();
    let parsed = scop_core::analysis::PairReport::from_json(&report).unwrap();
    assert!(parsed.rank_coherence.value > 0.3);
    assert!(!parsed.fits.is_empty());
    let surface = fs::read_to_string(o1.join("surface.csv")).unwrap();
    assert_eq!(surface.lines().count(), 1 + 400);
}

#[test]
fn config_file_supplies_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let (_, bin) = write_data(dir.path());
    let cfg = dir.path().join("run.conf");
    fs::write(
        &cfg,
        format!(
            "# pair\ninput = {}\nchannels = 1,2\nfreq = 40\nthreads = 2\n",
            p(&bin)
        ),
    )
    .unwrap();
    // 40 Hz is above Nyquist for this file
    assert_eq!(code(&scop(&["--config", p(&cfg), "analyze"])), 4);
    let o = scop(&["--config", p(&cfg), "analyze", "--freq", "alpha"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = scop_core::analysis::PairReport::from_json(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert!(matches!(
        report.frequency,
        scop_core::dependence::FrequencySelector::Band {
            lower_hz: 8.0,
            upper_hz: 12.0
        }
    ));
}

#[test]
fn matrix_command_writes_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let (_, bin) = write_data(dir.path());
    let out = dir.path().join("m");
    let o = scop(&["matrix", p(&bin), "--freq", "5", "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("matrix.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.starts_with("channel_a,channel_b,rank_coherence,p_value\n1,2,"));
}

#[test]
fn simulate_and_emit_plots() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim2");
    let o = scop(&[
        "simulate",
        "sim2",
        "--B",
        "2",
        "--R",
        "60",
        "--seed",
        "7",
        "--out",
        p(&sim),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in [
        "report.json",
        "table1.csv",
        "table2.csv",
        "table3.csv",
        "scatter.csv",
    ] {
        assert!(sim.join(f).exists(), "{f}");
    }

    let env_run = Command::new(env!("CARGO_BIN_EXE_scop"))
        .args(["simulate", "sim2", "--B", "2", "--R", "60", "--seed", "7"])
        .env("SCOP_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(code(&env_run), 0);
    assert_eq!(
        env_run.stdout,
        fs::read(sim.join("report.json"))
            .unwrap()
            .iter()
            .chain(b"\n")
            .copied()
            .collect::<Vec<u8>>()
    );

    let plots = dir.path().join("plots");
    let o = scop(&[
        "emit-plots",
        "--report",
        p(&sim.join("report.json")),
        "--grid",
        "5",
        "--out",
        p(&plots),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let spectrum = fs::read_to_string(plots.join("spectrum_Z_beta.csv")).unwrap();
    assert_eq!(spectrum.lines().count(), 1 + 501);
    assert!(spectrum.starts_with("frequency_hz,omega,spectrum\n"));
    let surface = fs::read_to_string(plots.join("surface_40hz.csv")).unwrap();
    assert_eq!(surface.lines().count(), 1 + 25);

    let again = dir.path().join("plots2");
    scop(&[
        "emit-plots",
        "--report",
        p(&sim.join("report.json")),
        "--grid",
        "5",
        "--out",
        p(&again),
    ]);
    assert_eq!(
        fs::read(plots.join("surface_12hz.csv")).unwrap(),
        fs::read(again.join("surface_12hz.csv")).unwrap()
    );

    let ar = dir.path().join("ar");
    let o = scop(&[
        "emit-plots",
        "--ar2",
        "0.5,-0.3",
        "--fs",
        "100",
        "--T",
        "50",
        "--out",
        p(&ar),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(
        fs::read_to_string(ar.join("spectrum.csv"))
            .unwrap()
            .lines()
            .count(),
        1 + 26
    );
    let o = scop(&[
        "emit-plots",
        "--ar2",
        "1.5,0.6",
        "--fs",
        "100",
        "--T",
        "50",
        "--out",
        p(&ar),
    ]);
    assert_eq!(code(&o), 4);
}
