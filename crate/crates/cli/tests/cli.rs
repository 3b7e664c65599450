use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn netfit(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netfit")).current_dir(dir).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr_line(o: &Output) -> String {
    let s = String::from_utf8_lossy(&o.stderr).to_string();
    assert_eq!(s.trim_end().lines().count(), 1, "diagnostic should be one line: {s:?}");
    s
}

fn generate_modular(dir: &Path) {
    let o = netfit(
        dir,
        &[
            "generate", "--kind", "modular", "--n", "24", "--modules", "4", "--in-frac", "0.9", "--seed", "7",
            "--out", "W.csv", "--modules-out", "mods.txt", "--noisy-out", "noisy.csv", "--sigma", "0.3",
            "--mask-out", "mask.txt", "--missing-frac", "0.2",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn generate_writes_all_outputs_reproducibly() {
    let dir = tempfile::tempdir().unwrap();
    generate_modular(dir.path());
    let first: Vec<String> = ["W.csv", "mods.txt", "noisy.csv", "mask.txt"]
        .iter()
        .map(|f| fs::read_to_string(dir.path().join(f)).unwrap())
        .collect();
    assert_eq!(first[0].lines().count(), 24);
    assert_eq!(first[1].lines().count(), 24);
    generate_modular(dir.path());
    for (k, f) in ["W.csv", "mods.txt", "noisy.csv", "mask.txt"].iter().enumerate() {
        assert_eq!(fs::read_to_string(dir.path().join(f)).unwrap(), first[k], "{f} changed");
    }
    let leftovers: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().starts_with(".tmp"))
        .collect();
    assert!(leftovers.is_empty());
}

#[test]
fn gradcheck_reports_small_errors() {
    let dir = tempfile::tempdir().unwrap();
    for metric in ["transitivity", "degree", "clustering", "avg_neighbour_degree", "global_clustering", "modularity"] {
        let o = netfit(dir.path(), &["gradcheck", "--metric", metric, "--n", "8", "--seed", "1"]);
        assert_eq!(code(&o), 0, "{metric}: {}", String::from_utf8_lossy(&o.stderr));
        let out = String::from_utf8(o.stdout).unwrap();
        assert!(out.starts_with("metric,node,max_rel_err,mean_rel_err\n"));
        for line in out.lines().skip(1) {
            let err: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
            assert!(err < 1e-5, "{line}");
        }
    }
}

#[test]
fn metrics_lists_values() {
    let dir = tempfile::tempdir().unwrap();
    generate_modular(dir.path());
    let o = netfit(dir.path(), &["metrics", "--input", "W.csv", "--modules", "mods.txt", "--metric", "degree,modularity"]);
    assert_eq!(code(&o), 0);
    let out = String::from_utf8(o.stdout).unwrap();
    assert_eq!(out.lines().count(), 1 + 24 + 1);
    assert!(out.lines().last().unwrap().starts_with("modularity,,"));
}

#[test]
fn denoise_with_targets_file_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    generate_modular(dir.path());
    let d = dir.path();
    let args = [
        "denoise", "--input", "noisy.csv", "--targets-from", "W.csv", "--metrics", "degree", "--mu", "1e-2",
        "--max-iters", "3000", "--out", "den.csv", "--trace", "trace.csv", "--truth", "W.csv",
    ];
    let o = netfit(d, &args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let trace = fs::read_to_string(d.join("trace.csv")).unwrap();
    assert!(trace.starts_with("iter,cost,recon_error,dist_to_truth\n"));
    let dist = |line: &str| line.split(',').nth(3).unwrap().parse::<f64>().unwrap();
    let lines: Vec<&str> = trace.lines().skip(1).collect();
    assert!(dist(lines.last().unwrap()) < dist(lines[0]));
    let den = fs::read_to_string(d.join("den.csv")).unwrap();
    assert_eq!(code(&netfit(d, &args)), 0);
    assert_eq!(fs::read_to_string(d.join("den.csv")).unwrap(), den);

    fs::write(
        d.join("targets.toml"),
        "[[target]]\nmetric = \"transitivity\"\nvalue = 0.3\n\n[[target]]\nmetric = \"modularity\"\nmodules = \"mods.txt\"\nvalue = 0.5\n",
    )
    .unwrap();
    let o = netfit(d, &["denoise", "--input", "noisy.csv", "--targets", "targets.toml", "--mu", "10", "--max-iters", "200", "--out", "den2.csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn complete_keeps_observed_entries() {
    let dir = tempfile::tempdir().unwrap();
    generate_modular(dir.path());
    let d = dir.path();
    let o = netfit(
        d,
        &["complete", "--input", "W.csv", "--mask", "mask.txt", "--targets-from", "W.csv", "--metrics", "degree", "--mu", "1e-2", "--out", "comp.csv"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let parse = |f: &str| -> Vec<Vec<String>> {
        fs::read_to_string(d.join(f)).unwrap().lines().map(|l| l.split(',').map(str::to_string).collect()).collect()
    };
    let (w, c) = (parse("W.csv"), parse("comp.csv"));
    let mask: Vec<(usize, usize)> = fs::read_to_string(d.join("mask.txt"))
        .unwrap()
        .lines()
        .map(|l| {
            let v: Vec<usize> = l.split_whitespace().map(|t| t.parse().unwrap()).collect();
            (v[0] - 1, v[1] - 1)
        })
        .collect();
    for i in 0..24 {
        for j in 0..24 {
            if !mask.contains(&(i.min(j), i.max(j))) {
                assert_eq!(w[i][j], c[i][j], "({i},{j})");
            }
        }
    }
}

#[test]
fn decompose_splits_a_mixture() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&netfit(d, &["generate", "--kind", "random-complete", "--n", "10", "--seed", "1", "--out", "A.csv"])), 0);
    assert_eq!(code(&netfit(d, &["generate", "--kind", "scale-free", "--n", "10", "--avg-degree", "4", "--seed", "2", "--out", "B.csv"])), 0);
    let read = |f: &str| -> Vec<Vec<f64>> {
        fs::read_to_string(d.join(f)).unwrap().lines().map(|l| l.split(',').map(|t| t.parse().unwrap()).collect()).collect()
    };
    let (a, b) = (read("A.csv"), read("B.csv"));
    let mix: Vec<String> = (0..10)
        .map(|i| (0..10).map(|j| (a[i][j] + b[i][j]).to_string()).collect::<Vec<_>>().join(","))
        .collect();
    fs::write(d.join("mix.csv"), mix.join("\n") + "\n").unwrap();
    let o = netfit(
        d,
        &[
            "decompose", "--input", "mix.csv", "--reference1", "A.csv", "--metrics1", "degree", "--reference2", "B.csv",
            "--metrics2", "degree", "--mu", "1e-2", "--max-iters", "2000", "--outer-max", "10", "--out1", "W1.csv",
            "--out2", "W2.csv", "--trace", "recon.csv",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let recon = fs::read_to_string(d.join("recon.csv")).unwrap();
    assert!(recon.starts_with("outer,recon_error\n0,"));
    assert_eq!(read("W1.csv").len(), 10);
}

#[test]
fn sweep_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("sweep.toml"),
        r#"
scheme = "complete"
sweep_var = "missing_frac"
sweep_values = [0.1, 0.2]
realizations = 2
base_seed = 5

[generator]
kind = "random_complete"
n = 12

[descent]
mu = 0.01
max_iters = 500

[[metric_set]]
name = "degree"
metrics = ["degree"]
"#,
    )
    .unwrap();
    assert_eq!(code(&netfit(d, &["sweep", "--config", "sweep.toml", "--out", "a.csv"])), 0);
    assert_eq!(code(&netfit(d, &["sweep", "--config", "sweep.toml", "--out", "b.csv"])), 0);
    let a = fs::read(d.join("a.csv")).unwrap();
    assert_eq!(a, fs::read(d.join("b.csv")).unwrap());
    assert!(String::from_utf8(a).unwrap().starts_with("sweep_value,metric_set,mean_er,std_er,realizations\n"));
}

#[test]
fn exit_codes_by_error_class() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    generate_modular(d);

    let usage = netfit(d, &["denoise", "--input", "W.csv", "--bogus"]);
    assert_eq!(code(&usage), 2);
    stderr_line(&usage);
    assert_eq!(code(&netfit(d, &["frobnicate"])), 2);

    fs::write(d.join("bad.csv"), "0,2\n2,0\n").unwrap();
    let invalid = netfit(d, &["metrics", "--input", "bad.csv"]);
    assert_eq!(code(&invalid), 3);
    assert!(stderr_line(&invalid).contains("(1, 2)"));

    fs::write(d.join("empty_mask.txt"), "").unwrap();
    let empty = netfit(
        d,
        &["complete", "--input", "W.csv", "--mask", "empty_mask.txt", "--targets-from", "W.csv", "--metrics", "degree", "--out", "x.csv"],
    );
    assert_eq!(code(&empty), 3);
    stderr_line(&empty);

    fs::write(d.join("zero.csv"), "0,0,0\n0,0,0\n0,0,0\n").unwrap();
    fs::write(d.join("one.txt"), "1\n1\n1\n").unwrap();
    let numerical = netfit(d, &["metrics", "--input", "zero.csv", "--modules", "one.txt", "--metric", "modularity"]);
    assert_eq!(code(&numerical), 4);
    stderr_line(&numerical);

    let io = netfit(d, &["metrics", "--input", "missing.csv"]);
    assert_eq!(code(&io), 5);
    assert!(stderr_line(&io).contains("missing.csv"));
    assert!(!d.join("x.csv").exists());
}

#[test]
fn help_documents_every_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    for sub in ["generate", "metrics", "gradcheck", "denoise", "decompose", "complete", "sweep"] {
        let o = netfit(dir.path(), &[sub, "--help"]);
        assert_eq!(code(&o), 0);
        assert!(String::from_utf8(o.stdout).unwrap().contains("Usage: netfit"));
    }
}
