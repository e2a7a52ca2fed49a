use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use polar_express::{MatrixBuffer, Schedule};

const REFERENCE_TABLE: [[f64; 3]; 8] = [
    [8.28721201814563, -23.595886519098837, 17.300387312530933],
    [4.107059111542203, -2.9478499167379106, 0.5448431082926601],
    [3.9486908534822946, -2.908902115962949, 0.5518191394370137],
    [3.3184196573706015, -2.488488024314874, 0.51004894012372],
    [2.300652019954817, -1.6689039845747493, 0.4188073119525673],
    [1.891301407787398, -1.2679958271945868, 0.37680408948524835],
    [1.8750014808534479, -1.2500016453999487, 0.3750001645474248],
    [1.875, -1.25, 0.375],
];

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polar-express"))
        .args(args)
        .output()
        .unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn synth_writes_the_reference_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.json");
    let o = run(&["synth", "--l", "1e-3", "--T", "8", "--degree", "5", "--out", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = Schedule::load(&out).unwrap();
    // the last tuple is the limit Pade step; the others agree closely
    for (t, (p, want)) in s.pre_safety_polys().iter().zip(REFERENCE_TABLE).enumerate().take(7) {
        for (got, want) in p.coeffs().iter().zip(want) {
            assert!((got - want).abs() <= 1e-6 * want.abs(), "step {t}: {got} vs {want}");
        }
    }
}

#[test]
fn synth_to_stdout() {
    let o = run(&["synth", "--l", "0.1", "--T", "2"]);
    assert!(o.status.success());
    let s = Schedule::from_json(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert_eq!(s.len(), 2);
}

#[test]
fn apply_keeps_the_identity() {
    let dir = tempfile::tempdir().unwrap();
    let (input, out) = (dir.path().join("i.pxm"), dir.path().join("o.pxm"));
    MatrixBuffer::identity(5).save(&input).unwrap();
    for schedule in ["default", "ns3"] {
        let o = run(&["apply", "--schedule", schedule, "--in", path(&input), "--out", path(&out), "--normalization", "none"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let x = MatrixBuffer::load(&out).unwrap();
        assert!(x.max_abs_diff(&MatrixBuffer::identity(5)) < 1e-2, "{schedule}");
    }
}

#[test]
fn apply_fast_with_restart_and_schedule_file() {
    let dir = tempfile::tempdir().unwrap();
    let (sched, input, out) = (dir.path().join("s.json"), dir.path().join("m.csv"), dir.path().join("o.pxm"));
    assert!(run(&["synth", "--l", "0.01", "--T", "6", "--out", path(&sched)]).status.success());
    let rows: Vec<String> = (0..40)
        .map(|i| (0..5).map(|j| format!("{}", ((i * 7 + j * 3) % 11) as f64 - 5.0 + (i == j) as u8 as f64 * 20.0)).collect::<Vec<_>>().join(","))
        .collect();
    fs::write(&input, rows.join("\n")).unwrap();
    let o = run(&["apply", "--schedule", path(&sched), "--in", path(&input), "--out", path(&out), "--fast", "on", "--restart", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let x = MatrixBuffer::load(&out).unwrap();
    assert_eq!(x.shape(), (40, 5));
    assert!(x.is_finite());
}

#[test]
fn bench_writes_the_convergence_table() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("out.csv");
    let o = run(&[
        "bench", "--spec", "log:1e-6:1:32", "--methods", "polarexpress:1e-6,ns5,jordan", "--T", "25",
        "--csv", path(&csv), "--normalization", "none", "--no-timing",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "method,iter,spectral_error,frob_error,cosine_sim,truncated_error,seconds"
    );
    assert_eq!(lines.count(), 3 * 26);
}

#[test]
fn polar_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let (input, out) = (dir.path().join("m.pxm"), dir.path().join("p.pxm"));
    fs::write(&input, "PXM1 2 2\n2 1\n0 3\n").unwrap();
    assert!(run(&["polar", "--in", path(&input), "--out", path(&out)]).status.success());
    let want = polar_express::exact_polar(&MatrixBuffer::load(&input).unwrap()).unwrap();
    assert_eq!(MatrixBuffer::load(&out).unwrap(), want);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["synth", "--help"]).status.code(), Some(0));
    assert_eq!(run(&["synth"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    let o = run(&["apply", "--schedule", "nope", "--in", "x", "--out", "y"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!o.stderr.is_empty());

    let dir = tempfile::tempdir().unwrap();
    let (input, out) = (dir.path().join("nan.pxm"), dir.path().join("o.pxm"));
    fs::write(&input, "PXM1 1 2\n1 nan\n").unwrap();
    let o = run(&["apply", "--schedule", "default", "--in", path(&input), "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&["synth", "--l", "2", "--T", "3"]);
    assert_ne!(o.status.code(), Some(0));
}
