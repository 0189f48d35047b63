use std::collections::BTreeSet;
use std::io::Write;
use std::process::{Command, Output};

use serde_json::Value;

const COMMANDS: [&str; 6] = ["rho", "hardy", "nosignal", "chsh", "lhv", "sample"];

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_basiscorr"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(args: &[&str]) -> Value {
    let mut full = args.to_vec();
    full.extend(["--format", "json"]);
    serde_json::from_str(&stdout(&full)).unwrap()
}

/// Non-integer numbers appearing in a text rendering.
fn text_numbers(s: &str) -> BTreeSet<u64> {
    s.split(|c: char| !(c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '-' | '+')))
        .filter_map(|tok| tok.parse::<f64>().ok())
        .filter(|x| x.fract() != 0.0)
        .map(|x| x.abs().to_bits())
        .collect()
}

fn json_numbers(v: &Value, out: &mut BTreeSet<u64>) {
    match v {
        Value::Number(n) => {
            let x = n.as_f64().unwrap();
            if x.fract() != 0.0 {
                out.insert(x.abs().to_bits());
            }
        }
        Value::Array(items) => items.iter().for_each(|i| json_numbers(i, out)),
        Value::Object(map) => map.values().for_each(|i| json_numbers(i, out)),
        _ => {}
    }
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["hardy"]).status.code(), Some(0));
    assert_eq!(run(&["sample", "--samples", "0"]).status.code(), Some(2));
    assert_eq!(
        run(&["hardy", "--choice-prob", "1.5"]).status.code(),
        Some(2)
    );
    assert_eq!(run(&["hardy", "--mode", "quantum"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        run(&["hardy", "--config", "/nonexistent/run.cfg"])
            .status
            .code(),
        Some(2)
    );
    // at choice probability 1 the inputs (+1,−1) never occur
    assert_eq!(
        run(&["nosignal", "--choice-prob", "1"]).status.code(),
        Some(3)
    );
    assert_eq!(run(&["lhv", "--choice-prob", "1"]).status.code(), Some(3));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn verdicts_are_payload_not_exit_codes() {
    let h = json(&["hardy", "--choice-prob", "1"]);
    assert_eq!(h["results"]["verdict"], "CONSISTENT");
    let h = json(&["hardy"]);
    assert_eq!(h["results"]["verdict"], "CONTRADICTION");
}

#[test]
fn json_round_trips_byte_for_byte() {
    for cmd in COMMANDS {
        for extra in [&[][..], &["--samples", "5000"][..]] {
            let mut args = vec![cmd, "--format", "json"];
            args.extend(extra);
            let text = stdout(&args);
            let v: Value = serde_json::from_str(&text).unwrap();
            let again = serde_json::to_string_pretty(&v).unwrap() + "\n";
            assert_eq!(text, again, "{cmd} {extra:?}");
            assert_eq!(v["command"], cmd);
            assert!(v["config"].is_object() && v["results"].is_object());
        }
    }
}

#[test]
fn identical_config_gives_identical_bytes() {
    for cmd in COMMANDS {
        for format in ["table", "json", "csv"] {
            let args = [
                cmd,
                "--samples",
                "20000",
                "--seed",
                "1234",
                "--format",
                format,
            ];
            assert_eq!(stdout(&args), stdout(&args), "{cmd} {format}");
        }
    }
    let a = stdout(&["sample", "--samples", "20000", "--seed", "1"]);
    let b = stdout(&["sample", "--samples", "20000", "--seed", "2"]);
    assert_ne!(a, b);
}

#[test]
fn table_and_json_carry_the_same_numbers() {
    let cases: [&[&str]; 8] = [
        &["rho"],
        &["rho", "--diagonal"],
        &["hardy"],
        &["hardy", "--samples", "3000"],
        &["nosignal"],
        &["chsh"],
        &["lhv"],
        &["sample", "--samples", "3000"],
    ];
    for args in cases {
        let table = text_numbers(&stdout(args));
        let v = json(args);
        let mut from_json = BTreeSet::new();
        // headers echo the configuration, so config values count too
        json_numbers(&v["results"], &mut from_json);
        let mut config = BTreeSet::new();
        json_numbers(&v["config"], &mut config);
        assert!(!table.is_empty(), "{args:?}");
        let known: BTreeSet<u64> = from_json.union(&config).copied().collect();
        assert!(
            table.is_subset(&known),
            "{args:?}: {:?}",
            table.difference(&known)
        );
        assert!(
            from_json.is_subset(&table),
            "{args:?}: {:?}",
            from_json.difference(&table)
        );
    }
}

#[test]
fn csv_headers() {
    let expect = [
        (
            vec!["rho", "--diagonal"],
            "index,q1,q2,q3,q4,probability",
            16,
        ),
        (vec!["rho"], "row,col,re,im", 256),
        (vec!["hardy"], "fact,target,given,value,established", 4),
        (
            vec!["nosignal"],
            "q1,q2,p_pp,p_pm,p_mp,p_mm,q3_plus,q4_plus",
            4,
        ),
        (vec!["chsh"], "alice,bob,angle_a,angle_b,correlator", 4),
        (vec!["lhv"], "f_plus,f_minus,g_plus,g_minus,chsh", 16),
        (
            vec!["sample", "--samples", "100"],
            "index,q1,q2,q3,q4,count,empirical,exact",
            16,
        ),
    ];
    for (mut args, header, rows) in expect {
        args.extend(["--format", "csv"]);
        let text = stdout(&args);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(header));
        assert_eq!(lines.count(), rows, "{args:?}");
    }
}

#[test]
fn config_file_is_read_and_flags_override_it() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    writeln!(
        file,
        "# run record\nmode = coin\nchoice-prob = 0.3\nseed = 7\n"
    )
    .unwrap();
    let path = file.path().to_str().unwrap();

    let v = json(&["rho", "--config", path]);
    assert_eq!(v["config"]["mode"], "coin");
    assert_eq!(v["config"]["choice_prob"], 0.3);
    assert_eq!(v["config"]["seed"], 7);

    let v = json(&[
        "rho",
        "--config",
        path,
        "--choice-prob",
        "0.5",
        "--mode",
        "coherent",
    ]);
    assert_eq!(v["config"]["mode"], "coherent");
    assert_eq!(v["config"]["choice_prob"], 0.5);
    assert_eq!(v["config"]["seed"], 7);

    let mut bad = tempfile::NamedTempFile::new().unwrap();
    writeln!(bad, "colour = blue").unwrap();
    let out = run(&["rho", "--config", bad.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

fn diagonal(v: &Value) -> Vec<f64> {
    v["results"]["diagonal"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["p"].as_f64().unwrap())
        .collect()
}

#[test]
fn coin_mode_diagonal_matches_coherent() {
    let coherent = json(&["rho", "--diagonal"]);
    let coin = json(&["rho", "--diagonal", "--mode", "coin"]);
    let a = diagonal(&coherent);
    let b = diagonal(&coin);
    assert_eq!(a.len(), 16);
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-12);
    }
    assert_eq!(coin["results"]["cross_sector_max_abs"], 0.0);
    assert!(
        coherent["results"]["cross_sector_max_abs"]
            .as_f64()
            .unwrap()
            > 0.0
    );
}

#[test]
fn z_only_choices_put_all_weight_on_plus_registers() {
    let v = json(&["rho", "--diagonal", "--choice-prob", "1.0"]);
    for (i, p) in diagonal(&v).iter().enumerate() {
        if i & 3 != 0 {
            assert_eq!(p.abs(), 0.0, "index {i}");
        }
    }
}

#[test]
fn chsh_angles_flag() {
    let v = json(&[
        "chsh",
        "--angles",
        "0,1.5707963267948966,-0.7853981633974483,0.7853981633974483",
    ]);
    let s = v["results"]["chsh"].as_f64().unwrap();
    assert!((s - 2.0 * 2f64.sqrt()).abs() < 1e-9);
    assert_eq!(run(&["chsh", "--angles", "0,1,2"]).status.code(), Some(2));
}

#[test]
fn empirical_hardy_uses_loose_epsilon_by_default() {
    let v = json(&["hardy", "--samples", "200000", "--seed", "3"]);
    assert_eq!(v["results"]["epsilon"], 0.01);
    assert_eq!(v["results"]["verdict"], "CONTRADICTION");
    let v = json(&["hardy", "--samples", "200000", "--epsilon", "0.001"]);
    assert_eq!(v["results"]["epsilon"], 0.001);
}
