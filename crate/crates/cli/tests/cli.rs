use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use spikecore::convert::{write_archive, zoo};
use spikecore::hbm;
use spikecore::report::{parse_jsonl, Record};
use tempfile::TempDir;

const EXAMPLE: &str = r#"{
  "version": 1,
  "models": {
    "N1": {"kind": "lif", "theta": 3, "nu": -17, "lambda": 63},
    "N2": {"kind": "lif", "theta": 4, "nu": -17, "lambda": 2},
    "N3": {"kind": "ann", "theta": 5, "nu": 2}
  },
  "axons": {"alpha": [["a", 3], ["c", 2]], "beta": [["b", 3]]},
  "neurons": {
    "a": {"model": "N1", "synapses": [["b", 1], ["d", 2]]},
    "b": {"model": "N1"},
    "c": {"model": "N2", "synapses": []},
    "d": {"model": "N3", "synapses": [["c", 1]]}
  },
  "outputs": ["a", "b"]
}"#;

const SCHEDULE: &str = r#"{"version": 1, "blocks": [[["alpha", "beta"], ["alpha", "beta"], []]]}"#;

struct Work {
    dir: TempDir,
}

impl Work {
    fn new() -> Self {
        let w = Self {
            dir: TempDir::new().unwrap(),
        };
        w.write("ex.json", EXAMPLE);
        w.write("sched.json", SCHEDULE);
        w
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn write(&self, name: &str, text: &str) -> PathBuf {
        let p = self.path(name);
        fs::write(&p, text).unwrap();
        p
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_spikecore"))
            .current_dir(self.dir.path())
            .env_remove("SPIKECORE_CONFIG")
            .args(args)
            .output()
            .unwrap()
    }

    fn ok(&self, args: &[&str]) -> String {
        let out = self.run(args);
        assert!(
            out.status.success(),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        String::from_utf8(out.stdout).unwrap()
    }

    fn read(&self, name: &str) -> Vec<u8> {
        fs::read(self.path(name)).unwrap()
    }
}

fn trace(report: &str) -> Vec<Vec<String>> {
    parse_jsonl(report)
        .unwrap()
        .into_iter()
        .filter_map(|r| match r {
            Record::Step { spikes, .. } => Some(spikes),
            _ => None,
        })
        .collect()
}

#[test]
fn compile_prints_occupancy() {
    let w = Work::new();
    let out = w.ok(&["compile", "--netlist", "ex.json", "--image", "ex.img"]);
    assert!(out.contains("axon_pointers\t2\t2\t2"), "{out}");
    assert!(out.contains("neuron_pointers\t4\t2\t4"), "{out}");
    let img = hbm::read_image(fs::File::open(w.path("ex.img")).unwrap()).unwrap();
    assert_eq!(img.num_neurons(), 4);

    w.write("empty.json", r#"{"version": 1}"#);
    let out = w.ok(&["compile", "--netlist", "empty.json", "--image", "empty.img"]);
    assert!(out.contains("synapses\t0\t0\t0"), "{out}");
}

#[test]
fn compile_rejects_dangling_target() {
    let w = Work::new();
    w.write("bad.json", &EXAMPLE.replace(r#"["c", 1]"#, r#"["z", 1]"#));
    let out = w.run(&["compile", "--netlist", "bad.json", "--image", "bad.img"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("targets unknown neuron `z`"), "{err}");
}

#[test]
fn run_reproduces_example_trace() {
    let w = Work::new();
    for backend in ["oracle", "engine"] {
        let out = w.ok(&[
            "run",
            "--netlist",
            "ex.json",
            "--schedule",
            "sched.json",
            "--seed",
            "42",
            "--backend",
            backend,
        ]);
        assert_eq!(
            trace(&out),
            vec![vec![], vec![], vec!["a".to_string(), "b".to_string()]]
        );
    }
    w.ok(&["compile", "--netlist", "ex.json", "--image", "ex.img"]);
    let from_image = w.ok(&["run", "--image", "ex.img", "--schedule", "sched.json", "--seed", "42"]);
    let from_netlist = w.ok(&[
        "run",
        "--netlist",
        "ex.json",
        "--schedule",
        "sched.json",
        "--seed",
        "42",
    ]);
    assert_eq!(from_image, from_netlist);
}

#[test]
fn zero_steps_gives_empty_report() {
    let w = Work::new();
    let out = w.ok(&[
        "run",
        "--netlist",
        "ex.json",
        "--schedule",
        "sched.json",
        "--steps",
        "0",
    ]);
    let recs = parse_jsonl(&out).unwrap();
    assert_eq!(recs.len(), 2);
    assert!(matches!(&recs[1], Record::Summary { hbm_accesses: 0, .. }));
}

#[test]
fn run_requires_exactly_one_source() {
    let w = Work::new();
    assert!(!w.run(&["run", "--schedule", "sched.json"]).status.success());
    w.ok(&["compile", "--netlist", "ex.json", "--image", "ex.img"]);
    assert!(!w
        .run(&["run", "--netlist", "ex.json", "--image", "ex.img"])
        .status
        .success());
}

#[test]
fn cost_flags_and_config_file() {
    let w = Work::new();
    let args = [
        "run",
        "--netlist",
        "ex.json",
        "--schedule",
        "sched.json",
        "--energy-per-access",
        "2.5",
        "--cycles-per-row",
        "3",
        "--clock-ns",
        "10",
    ];
    let recs = parse_jsonl(&w.ok(&args)).unwrap();
    let Some(Record::Summary {
        hbm_accesses,
        total_cycles,
        energy,
        latency,
        ..
    }) = recs.last()
    else {
        panic!("no summary")
    };
    assert_eq!(*energy, 2.5 * *hbm_accesses as f64);
    assert_eq!(*total_cycles, 3 + 3 * hbm_accesses);
    assert!((latency - 0.01 * *total_cycles as f64).abs() < 1e-9);

    let cfg = w.write("cfg.json", r#"{"seed": 42, "backend": "oracle"}"#);
    let via_env = Command::new(env!("CARGO_BIN_EXE_spikecore"))
        .current_dir(w.dir.path())
        .env("SPIKECORE_CONFIG", &cfg)
        .args(["run", "--netlist", "ex.json", "--schedule", "sched.json"])
        .output()
        .unwrap();
    assert!(via_env.status.success());
    let explicit = w.ok(&[
        "run",
        "--netlist",
        "ex.json",
        "--schedule",
        "sched.json",
        "--seed",
        "42",
        "--backend",
        "oracle",
    ]);
    assert_eq!(String::from_utf8(via_env.stdout).unwrap(), explicit);

    w.write("bad_cfg.json", r#"{"sed": 1}"#);
    assert!(!w
        .run(&["--config", "bad_cfg.json", "run", "--netlist", "ex.json"])
        .status
        .success());
    assert!(!w
        .run(&["run", "--netlist", "ex.json", "--backend", "gpu"])
        .status
        .success());
}

#[test]
fn diff_passes_then_catches_corrupted_weight() {
    let w = Work::new();
    let out = w.ok(&[
        "diff",
        "--netlist",
        "ex.json",
        "--schedule",
        "sched.json",
        "--steps",
        "40",
        "--seed",
        "7",
    ]);
    assert_eq!(out.trim(), "PASS 40 steps");

    let net = spikecore::netlist::parse_network(EXAMPLE).unwrap();
    let mut img = hbm::compile(&net).unwrap();
    hbm::patch_weight(&mut img, "beta", "b", 2).unwrap();
    hbm::write_image(&img, fs::File::create(w.path("bad.img")).unwrap()).unwrap();
    let out = w.run(&[
        "diff",
        "--netlist",
        "ex.json",
        "--image",
        "bad.img",
        "--schedule",
        "sched.json",
        "--seed",
        "7",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(
        String::from_utf8_lossy(&out.stdout).trim(),
        "FAIL step 0 neuron b (membrane)"
    );

    w.write("empty.json", r#"{"version": 1}"#);
    let out = w.ok(&["diff", "--netlist", "empty.json", "--steps", "5"]);
    assert_eq!(out.trim(), "PASS 5 steps");
}

fn convert_report(w: &Work, archive: &str, extra: &[&str]) -> serde_json::Value {
    let mut args = vec!["convert", "--archive", archive, "--netlist", "out.json"];
    args.extend(extra);
    serde_json::from_str(&w.ok(&args)).unwrap()
}

#[test]
fn convert_reports_structure() {
    let w = Work::new();
    write_archive(&w.path("mlp"), &zoo::mlp_128_10(1)).unwrap();
    let r = convert_report(&w, "mlp", &[]);
    assert_eq!(
        (r["axons"].as_u64(), r["neurons"].as_u64(), r["params"].as_u64()),
        (Some(784), Some(138), Some(101_632))
    );
    assert_eq!(r["closed_form_match"], true);
    let net = spikecore::netlist::parse_network(&String::from_utf8(w.read("out.json")).unwrap()).unwrap();
    assert_eq!(net.num_neurons(), 138);
    assert_eq!(net.outputs().len(), 10);

    write_archive(&w.path("lenet"), &zoo::lenet5_maxpool(2)).unwrap();
    let r = convert_report(&w, "lenet", &["--quant-alpha", "1000"]);
    assert_eq!(
        (r["axons"].as_u64(), r["neurons"].as_u64(), r["params"].as_u64()),
        (Some(784), Some(5_814), Some(44_190))
    );
    assert_eq!(r["scales"][0], 1000.0);
}

#[test]
fn convert_bias_strategies_and_errors() {
    let w = Work::new();
    let mut layers = zoo::mlp(&[4, 3, 2], 5);
    layers[0].bias = Some(vec![0.5, -0.25, 0.0]);
    write_archive(&w.path("b"), &layers).unwrap();
    let r = convert_report(&w, "b", &["--bias-strategy", "bias_axon"]);
    assert_eq!(r["always_on"], serde_json::json!(["L0:bias"]));
    assert_eq!(r["axons"], 4);
    let r = convert_report(&w, "b", &["--bias-strategy", "always_on_neuron"]);
    assert_eq!(r["bias_neurons"], 1);
    assert!(!w
        .run(&[
            "convert",
            "--archive",
            "b",
            "--netlist",
            "o.json",
            "--bias-strategy",
            "magic"
        ])
        .status
        .success());

    layers[1].in_shape = spikecore::convert::Shape::new(5, 1, 1);
    layers[1].weights.push(0.0);
    layers[1].weights.push(0.0);
    write_archive(&w.path("bad"), &layers).unwrap();
    let out = w.run(&["convert", "--archive", "bad", "--netlist", "o.json"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("layer 1"), "{err}");
}

#[test]
fn scaling_fits_and_degenerate_inputs() {
    let w = Work::new();
    let out = w.ok(&["scaling", "--steps", "6", "--table", "t.tsv"]);
    let r: serde_json::Value = serde_json::from_str(&out).unwrap();
    for fit in ["access_fit", "cycle_fit"] {
        assert!(r[fit]["r2"].as_f64().unwrap() >= 0.98, "{r}");
    }
    let table = String::from_utf8(w.read("t.tsv")).unwrap();
    assert_eq!(table.lines().count(), 6);

    let out = w.ok(&[
        "scaling",
        "--netlist",
        "ex.json",
        "--schedule",
        "sched.json",
        "--factors",
        "1,2,4",
    ]);
    let r: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!((r["access_fit"]["r2"].as_f64().unwrap() - 1.0).abs() < 1e-9);

    let two = w.run(&["scaling", "--factors", "1,2"]);
    assert_eq!(two.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&two.stderr).contains("degenerate"));
    let same = w.run(&["scaling", "--factors", "2,2,2"]);
    assert!(String::from_utf8_lossy(&same.stderr).contains("degenerate"));
}

fn identical_twice(w: &Work, args: &[&str], outputs: &[&str]) {
    let first = w.ok(args);
    let files: Vec<Vec<u8>> = outputs.iter().map(|f| w.read(f)).collect();
    assert_eq!(w.ok(args), first, "{args:?}");
    for (f, bytes) in outputs.iter().zip(files) {
        assert_eq!(w.read(f), bytes, "{f}");
    }
}

#[test]
fn commands_are_deterministic() {
    let w = Work::new();
    write_archive(&w.path("lenet"), &zoo::lenet5_stride2(3)).unwrap();
    identical_twice(
        &w,
        &["compile", "--netlist", "ex.json", "--image", "ex.img"],
        &["ex.img"],
    );
    identical_twice(
        &w,
        &[
            "run",
            "--netlist",
            "ex.json",
            "--schedule",
            "sched.json",
            "--steps",
            "25",
            "--seed",
            "3",
            "--report",
            "r.jsonl",
        ],
        &["r.jsonl"],
    );
    identical_twice(
        &w,
        &[
            "diff",
            "--netlist",
            "ex.json",
            "--schedule",
            "sched.json",
            "--steps",
            "25",
        ],
        &[],
    );
    identical_twice(
        &w,
        &["convert", "--archive", "lenet", "--netlist", "n.json"],
        &["n.json"],
    );
    identical_twice(&w, &["scaling", "--steps", "4", "--table", "t.tsv"], &["t.tsv"]);
}
