use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_poset-hdx"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

struct Fixtures {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

impl Fixtures {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        let mut tri = String::from("# complete 2-complex on 5 vertices\n");
        for a in 0..5 {
            for b in a + 1..5 {
                for c in b + 1..5 {
                    tri.push_str(&format!("{a} {b} {c}\n"));
                }
            }
        }
        std::fs::write(root.join("delta4.txt"), tri).unwrap();
        std::fs::write(root.join("delta3.txt"), "0 1 2\n").unwrap();
        Fixtures { _dir: dir, root }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn build(&self, name: &str, args: &[&str]) -> PathBuf {
        let out = self.path(name);
        let mut all = vec!["build"];
        all.extend_from_slice(args);
        all.extend_from_slice(&["--out", p(&out)]);
        let o = run(&all);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        out
    }

    fn delta4(&self) -> PathBuf {
        let f = self.path("delta4.txt");
        self.build("d4.json", &["--facets", p(&f)])
    }

    fn f24(&self) -> PathBuf {
        self.build("g24.json", &["--grassmannian", "q=2", "n=4", "d=2"])
    }
}

#[test]
fn build_reports_level_sizes() {
    let fx = Fixtures::new();
    let o = run(&["build", "--grassmannian", "q=2", "n=4", "d=2"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("levels: 1,15,35,15"));
    let f = fx.path("delta4.txt");
    let o = run(&["build", "--facets", p(&f)]);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("levels: 1,5,10,10") && err.contains("thickness: 2"), "{err}");
    let v = json(&o);
    assert_eq!(v["d"], 2);
    assert_eq!(v["elements"].as_array().unwrap().len(), 26);
}

#[test]
fn posetified_simplex_equals_grassmannian() {
    let fx = Fixtures::new();
    let f = fx.path("delta3.txt");
    let a = fx.build("p.json", &["--posetify", p(&f), "q=2"]);
    let b = fx.build("g.json", &["--grassmannian", "q=2", "n=3", "d=2"]);
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn facet_parse_errors_exit_one_with_line() {
    let fx = Fixtures::new();
    let bad = fx.path("bad.txt");
    std::fs::write(&bad, "0 1 2\n0 x 3\n").unwrap();
    let o = run(&["build", "--facets", p(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn two_sided_certificate_on_delta4() {
    let fx = Fixtures::new();
    let d4 = fx.delta4();
    let o = run(&["certify", p(&d4), "--two-sided", "nu=-0.34", "lambda=-0.24"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["verdict"], true);
    let o = run(&["certify", p(&d4), "--two-sided", "lambda=-0.26"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(json(&o)["verdict"], false);
}

#[test]
fn eposet_auto_reports_fitted_constants() {
    let fx = Fixtures::new();
    let g = fx.f24();
    let o = run(&["certify", p(&g), "--eposet", "auto"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    let row = &v["certificates"][0]["rows"][0]["detail"];
    assert!(row["fitted"]["r"].is_number());
    assert!((row["regular"]["r"].as_f64().unwrap() - 1.0 / 7.0).abs() < 1e-12);
}

#[test]
fn verify_passes_on_delta4() {
    let fx = Fixtures::new();
    let d4 = fx.delta4();
    let start = std::time::Instant::now();
    let o = run(&["verify", p(&d4)]);
    assert!(start.elapsed().as_secs() < 10);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["verdict"], true);
    assert_eq!(v["trials"], 100);
    assert!(v["seed"].is_u64());
    let names: Vec<&str> = v["checks"].as_array().unwrap().iter().map(|c| c["check"].as_str().unwrap()).collect();
    for want in ["basic-localization", "up-localization", "decomposition", "alev-lau", "trickle", "eposet"] {
        assert!(names.contains(&want), "{want} missing");
    }
}

#[test]
fn verify_trickle_on_grassmannian() {
    let fx = Fixtures::new();
    let g = fx.f24();
    let o = run(&["verify", p(&g), "--only", "trickle"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    let checks = v["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 1);
    let m = checks[0]["measured"].as_f64().unwrap();
    assert!((m + 1.0 / 14.0).abs() < 1e-9, "{m}");
    assert!((checks[0]["bound"].as_f64().unwrap() + 1.0 / 14.0).abs() < 1e-9);
}

#[test]
fn verify_up_localization_on_perturbed_poset() {
    let fx = Fixtures::new();
    let f = fx.path("delta4.txt");
    let pert = fx.build("pert.json", &["--facets", p(&f), "--jitter", "0.01", "--seed", "9"]);
    let o = run(&["verify", "--only", "up-localization", p(&pert)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    for c in v["checks"].as_array().unwrap() {
        let extra = &c["details"]["extra"];
        assert_eq!(extra["mode"], "approximate");
        assert!(extra["epsilon"].as_f64().unwrap() > 0.0);
    }
}

#[test]
fn verify_with_posetification_oracles() {
    let fx = Fixtures::new();
    let f = fx.path("delta3.txt");
    let vx = fx.build("vx.json", &["--posetify", p(&f), "q=2"]);
    let o = run(&["verify", p(&vx), "--only", "posetification,trickle", "--posetify", p(&f), "q=2"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["checks"].as_array().unwrap().len(), 2);
}

#[test]
fn unknown_check_is_an_error() {
    let fx = Fixtures::new();
    let d4 = fx.delta4();
    let o = run(&["verify", p(&d4), "--only", "nonsense"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn missing_file_exits_one() {
    let o = run(&["validate", "/nonexistent/poset.json"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn reports_are_byte_identical() {
    let fx = Fixtures::new();
    let g = fx.f24();
    let a = run(&["verify", p(&g), "--trials", "20"]);
    let b = run(&["--jobs", "1", "verify", p(&g), "--trials", "20"]);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.status.code(), Some(0));
}

#[test]
fn config_file_overrides_flags() {
    let fx = Fixtures::new();
    let d4 = fx.delta4();
    let cfg = fx.path("cfg.json");
    std::fs::write(&cfg, r#"{"trials": 5, "only": ["alev-lau"], "seed": 17}"#).unwrap();
    let o = run(&["verify", p(&d4), "--trials", "50", "--config", p(&cfg)]);
    let v = json(&o);
    assert_eq!(v["trials"], 5);
    assert_eq!(v["seed"], 17);
    assert_eq!(v["checks"].as_array().unwrap().len(), 1);
}

#[test]
fn spectrum_and_report_and_validate() {
    let fx = Fixtures::new();
    let d4 = fx.delta4();
    let v = json(&run(&["spectrum", p(&d4), "--level", "0"]));
    let a0 = v["levels"][0]["adjacency"]["eigenvalues"].as_array().unwrap();
    assert_eq!(a0.len(), 5);
    assert!((a0[4].as_f64().unwrap() + 0.25).abs() < 1e-12);
    let dump = json(&run(&["spectrum", p(&d4), "--dump", "up", "--level", "0"]));
    assert_eq!(dump["matrix"].as_array().unwrap().len(), 10);
    let r = json(&run(&["report", p(&d4)]));
    assert_eq!(r["report"]["ul"]["exact"], true);
    assert_eq!(r["report"]["al"]["exact"], true);
    let o = run(&["validate", p(&d4)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["valid"], true);
}

#[test]
fn invalid_weights_fail_validation() {
    let fx = Fixtures::new();
    let d4 = fx.delta4();
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(&d4).unwrap()).unwrap();
    // supply transition probabilities that do not sum to one
    let mut probs = serde_json::Map::new();
    for c in v["covers"].as_array().unwrap() {
        probs.insert(format!("{},{}", c[0], c[1]), Value::from(0.9));
    }
    v["p"] = Value::Object(probs);
    let bad = fx.path("bad.json");
    std::fs::write(&bad, serde_json::to_string(&v).unwrap()).unwrap();
    let o = run(&["validate", p(&bad)]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&o)["valid"], false);
}
