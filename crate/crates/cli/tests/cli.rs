use ctrlgeom::{Evaluator, SampleConfig};
use ctrlgeom_cli::commands::{self, Session};
use ctrlgeom_cli::file::{Config, SystemFile};
use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::Command;

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn fixture(name: &str) -> PathBuf {
    fixtures().join(format!("{}.sys", name))
}

fn session(name: &str) -> Session {
    let text = std::fs::read_to_string(fixture(name)).unwrap();
    Session::new(name, &text, &Config::default(), &Config::default(), 1).unwrap()
}

fn ctrlgeom(args: &[&str]) -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ctrlgeom"));
    c.args(args).env_remove(ctrlgeom_cli::CONFIG_ENV);
    c
}

fn scratch(name: &str, text: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json_of(c: &mut Command) -> (i32, Value) {
    let out = c.arg("--json-stdout").output().unwrap();
    let v = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (out.status.code().unwrap(), v)
}

#[test]
fn fixtures_round_trip_through_the_printer() {
    for e in std::fs::read_dir(fixtures()).unwrap() {
        let p = e.unwrap().path();
        let f = SystemFile::parse(&std::fs::read_to_string(&p).unwrap()).unwrap();
        let printed = f.to_string();
        let g = SystemFile::parse(&printed).unwrap_or_else(|e| panic!("{}: {}", p.display(), e));
        assert_eq!(g.to_string(), printed, "{}", p.display());
    }
}

#[test]
fn command_outputs() {
    let r = commands::analyze(&session("brunovsky_1_1"), None).unwrap();
    assert_eq!(r.analysis.unwrap().verdict, "SFL, κ=⟨1,1⟩");
    let r = commands::analyze(&session("example0"), None).unwrap();
    assert_eq!(r.analysis.unwrap().verdict, "Goursat ⟨0,2⟩; OFL-only");
    let r = commands::analyze(&session("pvtol"), None).unwrap();
    let a = r.analysis.unwrap();
    assert_eq!(a.rdt, vec![vec![3, 0], vec![5, 2, 2], vec![7, 2, 2], vec![9, 9]]);
    assert_eq!(a.verdict, "not Goursat");
    let r = commands::symmetry(&session("marino"), "scaling").unwrap();
    assert!(r.symmetry.unwrap().verdict.admissible);
    let r = commands::batch(&session("pvtol"), &["X6".to_string()]).unwrap();
    assert_eq!(r.batch.unwrap()[0].ell, Some(2));
}

#[test]
fn sgs_with_a_clock() {
    let s = session("example0");
    assert!(!commands::sgs(&s, None, None).unwrap().sgs.unwrap().passes);
    assert!(commands::sgs(&s, Some("clock"), None).unwrap().sgs.unwrap().passes);
    assert!(commands::sgs(&session("pvtol"), None, Some("X5_X6")).unwrap().sgs.unwrap().passes);
}

#[test]
fn batch_is_independent_of_thread_count() {
    let p = fixture("pvtol");
    let run = |t: &str| ctrlgeom(&["batch", s(&p), "X5", "X6", "X5_X6", "--threads", t]).output().unwrap().stdout;
    let one = run("1");
    assert!(!one.is_empty());
    assert_eq!(run("3"), one);
}

#[test]
fn exit_codes() {
    let bad = scratch("bad.sys", "[chart]\nstate x\n[distribution]\nd_y\n");
    assert_eq!(ctrlgeom(&["analyze", s(&bad)]).output().unwrap().status.code(), Some(2));
    let p = fixture("pvtol");
    assert_eq!(ctrlgeom(&["symmetry", s(&p), "nope"]).output().unwrap().status.code(), Some(2));
    assert_eq!(ctrlgeom(&["analyze", s(&fixture("brunovsky_1_1"))]).output().unwrap().status.code(), Some(0));

    // A coefficient that vanishes at the first sample point only.
    let c = Evaluator::new(SampleConfig::default()).coordinate(0, "x");
    let text = format!("[chart]\nstate x y z\n[distribution]\nd_x\n(x - {})*d_y\n", c);
    let p = scratch("singular.sys", &text);
    let out = ctrlgeom(&["analyze", s(&p)]).output().unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn json_file_matches_stdout_json() {
    let out = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("report.json");
    let p = fixture("charlet");
    let (code, v) = json_of(&mut ctrlgeom(&["quotient", s(&p), "translation", "translation", "--json", s(&out)]));
    assert_eq!(code, 0);
    let written: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(written, v);
    assert_eq!(v["schema"], "ctrlgeom-report/1");
}

#[test]
fn config_precedence() {
    let env = scratch("env.conf", "seed = 7\nsamples = 5\n");
    let plain = fixture("brunovsky_1_1");
    let (_, v) = json_of(ctrlgeom(&["analyze", s(&plain)]).env(ctrlgeom_cli::CONFIG_ENV, &env));
    assert_eq!((v["config"]["seed"].as_u64(), v["config"]["samples"].as_u64()), (Some(7), Some(5)));

    let text = std::fs::read_to_string(&plain).unwrap() + "\n[config]\nseed = 11\n";
    let with_file = scratch("with_config.sys", &text);
    let (_, v) = json_of(ctrlgeom(&["analyze", s(&with_file)]).env(ctrlgeom_cli::CONFIG_ENV, &env));
    assert_eq!((v["config"]["seed"].as_u64(), v["config"]["samples"].as_u64()), (Some(11), Some(5)));

    let (_, v) = json_of(ctrlgeom(&["analyze", s(&with_file), "--seed", "13"]).env(ctrlgeom_cli::CONFIG_ENV, &env));
    assert_eq!(v["config"]["seed"].as_u64(), Some(13));
}
