use num_complex::Complex64 as C64;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

const STEP: &str = "[potential]\nkind = \"step\"\nv0 = 100.0\nb = 1.0\n";
const PT: &str = "[potential]\nkind = \"poschl_teller\"\nv0 = 5.0\n";

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn qnm(args: &[&str]) -> Run {
    let Output { status, stdout, stderr } = Command::new(env!("CARGO_BIN_EXE_qnm")).args(args).output().unwrap();
    Run {
        code: status.code().unwrap(),
        stdout: String::from_utf8(stdout).unwrap(),
        stderr: String::from_utf8(stderr).unwrap(),
    }
}

fn runfile(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Data rows (header and comment rows dropped) as floats; non-numeric
/// cells become NaN.
fn rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(|c| c.parse().unwrap_or(f64::NAN)).collect())
        .collect()
}

fn header(csv: &str) -> Vec<&str> {
    csv.lines().next().unwrap().split(',').collect()
}

/// φ′ − iωφ at x = a for the odd solution of the step plus a bump of
/// height μ, by exact transfer matrices.
fn step_bump_mismatch(x0: f64, mu: f64, w: C64) -> f64 {
    let (v0, b, a, wd) = (100.0, 1.0, 1.6, 0.1);
    let (lo, hi) = (x0 - wd / 2.0, x0 + wd / 2.0);
    let mut cuts = [0.0, lo, hi, b, a];
    cuts.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let v = |x: f64| (if x < b { v0 } else { 0.0 }) + if x > lo && x < hi { mu } else { 0.0 };
    let (mut p, mut dp) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
    for s in cuts.windows(2) {
        let h = s[1] - s[0];
        if h <= 0.0 {
            continue;
        }
        let k = (w * w - v(0.5 * (s[0] + s[1]))).sqrt();
        let (c, sn) = ((k * h).cos(), (k * h).sin());
        (p, dp) = (c * p + sn / k * dp, -k * sn * p + c * dp);
    }
    (dp - C64::i() * w * p).norm() / (dp.norm() + (w * p).norm())
}

#[test]
fn solve_poschl_teller() {
    let d = TempDir::new().unwrap();
    let f = runfile(&d, "pt.toml", PT);
    let r = qnm(&["solve", "--runfile", s(&f)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(header(&r.stdout), ["mode_index", "re_omega", "im_omega", "residual"]);
    let row = &rows(&r.stdout)[0];
    assert_eq!(row[0], 0.0);
    assert!((row[1] - 4.75f64.sqrt()).abs() < 1e-15 && row[2] == -0.5);
}

#[test]
fn solve_step_rows_satisfy_the_dispersion_relation() {
    let d = TempDir::new().unwrap();
    let f = runfile(&d, "step.toml", &format!("{STEP}[mode]\ncount = 5\n"));
    let out = d.path().join("modes.csv");
    let r = qnm(&["solve", "--runfile", s(&f), "--out", s(&out)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let text = std::fs::read_to_string(&out).unwrap();
    let rs = rows(&text);
    assert_eq!(rs.len(), 5);
    for (k, row) in rs.iter().enumerate() {
        assert_eq!(row[0], (k + 1) as f64);
        let w = C64::new(row[1], row[2]);
        assert!(w.im < 0.0);
        assert!(step_bump_mismatch(0.5, 0.0, w) < 1e-12, "mode {}", k + 1);
    }
    assert!(d.path().join("modes.json").exists());
}

#[test]
fn malformed_and_unknown_keys_exit_2() {
    let d = TempDir::new().unwrap();
    let f = runfile(&d, "bad.toml", "[potential\nkind = \"step\"\n");
    let r = qnm(&["solve", "--runfile", s(&f)]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("line 1, column"), "{}", r.stderr);
    let f = runfile(&d, "bad2.toml", &format!("{STEP}colour = 3\n"));
    assert_eq!(qnm(&["solve", "--runfile", s(&f)]).code, 2);
    let f = runfile(&d, "bad3.toml", &format!("{STEP}[solver]\ntol = -1.0\n"));
    assert_eq!(qnm(&["solve", "--runfile", s(&f)]).code, 2);
    let f = runfile(&d, "ok.toml", STEP);
    assert_eq!(qnm(&["solve", "--runfile", s(&f), "--tol", "0"]).code, 2);
    assert_eq!(qnm(&["solve"]).code, 2);
    assert_eq!(qnm(&["solve", "--runfile", s(&d.path().join("missing.toml"))]).code, 2);
}

#[test]
fn solver_failure_exits_3() {
    let d = TempDir::new().unwrap();
    let text = "[potential]\nkind = \"sum\"\n[[potential.terms]]\nkind = \"step\"\nv0 = 100.0\nb = 1.0\n\
                [mode]\nguess = [0.5, -200.0]\nparity = \"odd\"\n";
    let f = runfile(&d, "f.toml", text);
    let r = qnm(&["solve", "--runfile", s(&f)]);
    assert_eq!(r.code, 3, "{}", r.stderr);
}

#[test]
fn sum_potential_is_shot_from_a_seed() {
    let d = TempDir::new().unwrap();
    let text = "[potential]\nkind = \"sum\"\n[[potential.terms]]\nkind = \"step\"\nv0 = 100.0\nb = 1.0\n\
                [[potential.terms]]\nkind = \"bump\"\nx0 = 0.3\nw = 0.1\nheight = 10.0\n\
                [mode]\nguess = [10.52, -0.1]\nparity = \"odd\"\n";
    let f = runfile(&d, "sum.toml", text);
    let r = qnm(&["solve", "--runfile", s(&f)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let row = &rows(&r.stdout)[0];
    assert!(step_bump_mismatch(0.3, 10.0, C64::new(row[1], row[2])) < 1e-10);
}

#[test]
fn perturb_width_first_order() {
    let d = TempDir::new().unwrap();
    let sigma = 4.75f64.sqrt();
    for (branch, sign) in [(1, -1.0), (-1, 1.0)] {
        let f = runfile(&d, "pt.toml", &format!("{PT}[mode]\nbranch = {branch}\n[perturbation]\nkind = \"width\"\n"));
        let r = qnm(&["perturb", "--runfile", s(&f), "--order", "1"]);
        assert_eq!(r.code, 0, "{}", r.stderr);
        assert_eq!(header(&r.stdout), ["order", "re_omega_n", "im_omega_n", "digits_lost", "L_independence_residual"]);
        let row = &rows(&r.stdout)[0];
        let w1 = C64::new(row[1], row[2]);
        let expect = C64::new(sign / (4.0 * sigma), -0.5);
        assert!((w1 - expect).norm() / expect.norm() < 1e-6, "{w1}");
        assert!(row[4] < 1e-7);
    }
    // higher orders are not available when the tails deform
    let f = runfile(&d, "pt.toml", &format!("{PT}[perturbation]\nkind = \"width\"\n"));
    assert_eq!(qnm(&["perturb", "--runfile", s(&f), "--order", "2"]).code, 2);
}

#[test]
fn zero_perturbation_rows_are_zero() {
    let d = TempDir::new().unwrap();
    for text in [format!("{STEP}[perturbation]\nkind = \"none\"\n"), format!("{PT}[perturbation]\nkind = \"none\"\n")] {
        let f = runfile(&d, "z.toml", &text);
        let r = qnm(&["perturb", "--runfile", s(&f), "--order", "2"]);
        assert_eq!(r.code, 0, "{}", r.stderr);
        let rs = rows(&r.stdout);
        assert_eq!(rs.len(), 2);
        assert!(rs.iter().all(|row| row[1] == 0.0 && row[2] == 0.0));
    }
}

#[test]
fn precision_exhausted_exits_4_unless_subtracting() {
    let d = TempDir::new().unwrap();
    let f = runfile(&d, "deep.toml", &format!("{PT}[mode]\nj = 1\n[perturbation]\nkind = \"width\"\n[domain]\nl = 10.0\n"));
    let r = qnm(&["perturb", "--runfile", s(&f), "--order", "1", "--subtract-asymptotics", "false"]);
    assert_eq!(r.code, 4, "{}", r.stderr);
    let r = qnm(&["perturb", "--runfile", s(&f), "--order", "1", "--subtract-asymptotics", "true"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let w1 = C64::new(rows(&r.stdout)[0][1], rows(&r.stdout)[0][2]);
    let expect = C64::new(-1.0 / (4.0 * 4.75f64.sqrt()), -1.5);
    assert!((w1 - expect).norm() / expect.norm() < 1e-6);
}

#[test]
fn perturb_and_sweep_agree() {
    let d = TempDir::new().unwrap();
    let bump = format!("{STEP}[perturbation]\nkind = \"bump\"\nx0 = 0.3\nw = 0.1\n");
    let f = runfile(&d, "p.toml", &bump);
    let out = d.path().join("p.csv");
    let r = qnm(&["perturb", "--runfile", s(&f), "--order", "2", "--out", s(&out)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let rs = rows(&std::fs::read_to_string(&out).unwrap());
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.path().join("p.json")).unwrap()).unwrap();
    let w0 = C64::new(json["omega0"][0].as_f64().unwrap(), json["omega0"][1].as_f64().unwrap());
    let (w1, w2) = (C64::new(rs[0][1], rs[0][2]), C64::new(rs[1][1], rs[1][2]));

    let f = runfile(&d, "s.toml", &format!("{bump}[sweep]\nkind = \"mu-scaling\"\nmu = [0.01, 0.1]\n"));
    let r = qnm(&["sweep", "--runfile", s(&f)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let sw = rows(&r.stdout);
    for row in &sw {
        let mu = row[1];
        let second = w0 + mu * w1 + mu * mu * w2;
        assert!((second - C64::new(row[6], row[7])).norm() < 1e-12 * second.norm());
    }
    // third-order remainder: a tenfold μ gives a thousandfold error
    let ratio = sw[1][10] / sw[0][10];
    assert!((ratio / 1e3 - 1.0).abs() < 0.05, "{ratio}");
}

#[test]
fn mu_scaling_emits_slopes() {
    let d = TempDir::new().unwrap();
    let text = format!(
        "{STEP}[perturbation]\nkind = \"bump\"\nx0 = 1.4\n[sweep]\nkind = \"mu-scaling\"\nmu = {{ from = 1e-3, to = 1e-1, per_decade = 2 }}\n"
    );
    let f = runfile(&d, "m.toml", &text);
    let r = qnm(&["sweep", "--runfile", s(&f)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(rows(&r.stdout).len(), 5);
    let slope = |name: &str| -> f64 {
        let line = r.stdout.lines().find(|l| l.starts_with(&format!("# slope_{name}="))).unwrap();
        line.split('=').nth(1).unwrap().parse().unwrap()
    };
    assert!((slope("first") - 2.0).abs() < 0.15 && (slope("second") - 3.0).abs() < 0.15);
    assert!(r.stdout.contains("# degenerate=false"));
}

#[test]
fn bump_sweep_round_trips_through_the_csv() {
    let d = TempDir::new().unwrap();
    let text = format!(
        "{STEP}[sweep]\nkind = \"bump-x0\"\nmu = 10.0\nx0 = {{ from = 0.05, to = 0.95, step = 0.05 }}\n"
    );
    let f = runfile(&d, "fig.toml", &text);
    let out = d.path().join("fig.csv");
    let r = qnm(&["sweep", "--runfile", s(&f), "--out", s(&out)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(!csv.contains('\r'));
    let rs = rows(&csv);
    assert_eq!(rs.len(), 19);
    assert!(rs.windows(2).all(|w| w[0][0] < w[1][0]));
    for row in &rs {
        let exact = C64::new(row[2], row[3]);
        assert!(step_bump_mismatch(row[0], row[1], exact) < 1e-10, "x0={}", row[0]);
        assert!(row[10] < row[9], "second order should beat first at x0={}", row[0]);
    }
    // same bytes again, and with sequential execution
    let again = qnm(&["sweep", "--runfile", s(&f)]);
    assert_eq!(again.stdout, csv);
    let f = runfile(&d, "fig2.toml", &format!("{text}[solver]\nparallel = false\n"));
    assert_eq!(qnm(&["sweep", "--runfile", s(&f)]).stdout, csv);
}

#[test]
fn empty_sweep_range_exits_2() {
    let d = TempDir::new().unwrap();
    let f = runfile(&d, "e.toml", &format!("{STEP}[sweep]\nkind = \"bump-x0\"\nmu = 1.0\nx0 = []\n"));
    assert_eq!(qnm(&["sweep", "--runfile", s(&f)]).code, 2);
    let f = runfile(&d, "e2.toml", &format!("{STEP}[sweep]\nkind = \"bump-x0\"\nmu = 1.0\nx0 = {{ from = 0.5, to = 0.1, step = 0.1 }}\n"));
    assert_eq!(qnm(&["sweep", "--runfile", s(&f)]).code, 2);
}

#[test]
fn demo_runs_with_defaults() {
    let d = TempDir::new().unwrap();
    let out = d.path().join("demo.csv");
    let r = qnm(&["demo", "--out", s(&out)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let csv = std::fs::read_to_string(&out).unwrap();
    let surface = csv.lines().find(|l| l.starts_with("omega1_surface,")).unwrap();
    let rel: f64 = surface.split(',').nth(3).unwrap().parse().unwrap();
    assert!(rel < 1e-6);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.path().join("demo.json")).unwrap()).unwrap();
    assert!(json["digits_lost"]["raw"].as_f64().is_some());
}
