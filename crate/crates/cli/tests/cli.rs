use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tamarkin_core::interleave::InterleavingCertificate;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tamarkin"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn file(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn barcode(bars: &[(i32, &str, &str)]) -> String {
    let mut t = String::from("barcode v1\nfield f2\n");
    for (d, b, e) in bars {
        t.push_str(&format!("bar degree={d} birth={b} death={e}\n"));
    }
    t
}

#[test]
fn distance_prints_value_and_writes_verified_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let f = file(dir.path(), "F.bc", &barcode(&[(0, "0", "4")]));
    let g = file(dir.path(), "G.bc", &barcode(&[(0, "1", "3")]));
    let cert = dir.path().join("out.cert");
    let o = run(&["distance", s(&f), s(&g), "--certificate", s(&cert)]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "2 attained\n");
    let c = InterleavingCertificate::from_text(&std::fs::read_to_string(&cert).unwrap()).unwrap();
    c.verify().unwrap();
    assert_eq!(&c.a + &c.b, tamarkin_core::rat::int(2));
}

#[test]
fn torsion_of_empty_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let e = file(dir.path(), "e.bc", &barcode(&[]));
    let o = run(&["torsion", s(&e)]);
    assert_eq!(stdout(&o), "0\n");
}

#[test]
fn exit_codes_are_distinct() {
    let dir = tempfile::tempdir().unwrap();
    let bad = file(dir.path(), "bad.bc", "barcode v1\nfield f2\nbar degree=0 birth=1 death=oops\n");
    let o = run(&["torsion", s(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("3:"), "{err}");

    let q = file(dir.path(), "q.bc", "barcode v1\nfield q\n");
    let f = file(dir.path(), "f.bc", &barcode(&[(0, "0", "1")]));
    assert_eq!(run(&["distance", s(&f), s(&q)]).status.code(), Some(2));

    // closed square translated upward is not a restriction: precondition
    let sq = file(
        dir.path(),
        "sq.region",
        "region v1\npolygon\nvertex 0 0\nvertex 1 0\nvertex 1 1\nvertex 0 1\n",
    );
    assert_eq!(run(&["plane", "sweep", s(&sq), "--cmax", "2"]).status.code(), Some(3));

    assert_eq!(run(&["nonsense"]).status.code(), Some(2));
}

#[test]
fn sphere_example_through_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let region = dir.path().join("s.region");
    assert!(run(&["example", "sphere", "--mesh", "1/20", "--out", s(&region)]).status.success());
    let report = dir.path().join("sweep.txt");
    let o = run(&["plane", "sweep", s(&region), "--cmax", "1", "--mesh", "1/20", "--report", s(&report)]);
    assert_eq!(stdout(&o), "threshold 2/3 attained\n");
    let r = std::fs::read_to_string(&report).unwrap();
    assert!(r.contains("provenance") && r.contains("boundary error bound"));
    let half = dir.path().join("h.region");
    run(&["example", "sphere", "--mesh", "1/10", "--epsilon", "1/2", "--out", s(&half)]);
    assert_eq!(stdout(&run(&["plane", "sweep", s(&half), "--cmax", "1"])), "threshold 1/6 attained\n");
}

#[test]
fn circle_and_morse_commands() {
    let o = run(&["example", "circle", "--aplus", "5/2", "--aminus", "3/4"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "expected 3/4\nnovikov 3/4\nquotient 3/4\n");

    let dir = tempfile::tempdir().unwrap();
    let g = file(
        dir.path(),
        "g.morse",
        "morsegraph v1\ncrit id=a index=1 value=3\ncrit id=b index=0 value=1\ncrit id=c index=0 value=2\nflow a b\nflow a c\n",
    );
    assert_eq!(stdout(&run(&["morse-estimate", s(&g)])), "1\n");

    let c = file(
        dir.path(),
        "c.filtered",
        "filtered v1\nfield f2\ngen id=v degree=0 value=0\ngen id=w degree=0 value=0\ngen id=e degree=1 value=1\nbnd e = v + w\n",
    );
    let o = run(&["morse", s(&c)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("barcode v1\nfield f2\n"));
}

#[test]
fn energy_report_lists_barcodes() {
    let dir = tempfile::tempdir().unwrap();
    let f = file(dir.path(), "F.bc", &barcode(&[(0, "0", "2/3")]));
    let rep = dir.path().join("r.txt");
    let o = run(&["energy", s(&f), s(&f), "--report", s(&rep)]);
    assert_eq!(stdout(&o), "2/3\n");
    let r = std::fs::read_to_string(&rep).unwrap();
    assert!(r.contains("degree 0: [0,2/3)") && r.contains("e_D 2/3"));
    assert_eq!(stdout(&run(&["novikov", s(&f), s(&f), "--precision", "4"])), "2/3\n");
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let mut first: Option<(String, Vec<u8>, Vec<u8>)> = None;
    for _ in 0..20 {
        let bc = stdout(&run(&["example", "random-barcode", "--seed", "42", "--bars", "4"]));
        let f = file(dir.path(), "F.bc", &bc);
        let g = file(dir.path(), "G.bc", &barcode(&[(0, "1/2", "3"), (1, "1", "2")]));
        let cert = dir.path().join("c.cert");
        let rep = dir.path().join("r.txt");
        let d = stdout(&run(&["--jobs", "2", "distance", s(&f), s(&g), "--certificate", s(&cert)]));
        run(&["energy", s(&f), s(&g), "--report", s(&rep)]);
        let now = (bc + &d, std::fs::read(&cert).unwrap(), std::fs::read(&rep).unwrap());
        match &first {
            None => first = Some(now),
            Some(x) => assert_eq!(x, &now),
        }
    }
    let other = stdout(&run(&["example", "random-barcode", "--seed", "43", "--bars", "4"]));
    assert_ne!(first.unwrap().0.lines().take(5).collect::<Vec<_>>(), other.lines().take(5).collect::<Vec<_>>());
}

#[test]
fn constant_against_graph() {
    let o = run(&["example", "constant-vs-graph", "--phi=-1/2,2,1"]);
    assert_eq!(stdout(&o), "a 2\nb 1/2\nbound 5/2\npointwise-distance 2\n");
}
