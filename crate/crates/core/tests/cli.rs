use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn atypical(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_atypical"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

fn read_bits(path: &Path) -> String {
    fs::read_to_string(path).unwrap().split_whitespace().collect()
}

fn pseudo_random_bits(len: usize, mut state: u64) -> String {
    (0..len)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            if state >> 63 == 1 { '1' } else { '0' }
        })
        .collect()
}

#[test]
fn training_is_deterministic() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "a.txt", &pseudo_random_bits(5000, 7));
    write(dir.path(), "b.txt", &pseudo_random_bits(3000, 9));
    for out in ["one", "two"] {
        let o = atypical(dir.path(), &["--output-dir", out, "train", "a.txt", "b.txt", "--depth", "6"]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let one = fs::read(dir.path().join("one/model.atyp")).unwrap();
    let two = fs::read(dir.path().join("two/model.atyp")).unwrap();
    assert!(!one.is_empty());
    assert_eq!(one, two);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("one/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["subcommand"], "train");
    assert_eq!(manifest["inputs"][0]["bits"], 5000);
    assert_eq!(manifest["parameters"]["depth"], 6);
}

#[test]
fn alternating_data_is_typical_under_its_own_model() {
    let dir = TempDir::new().unwrap();
    let train: String = "01".repeat(5000);
    write(dir.path(), "train.txt", &train);
    write(dir.path(), "test.txt", &"01".repeat(300));
    let o = atypical(dir.path(), &["train", "train.txt", "--depth", "4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = atypical(dir.path(), &["scan", "test.txt", "--model", "atypical-out/model.atyp", "--l-max", "64", "--tau", "0"]);
    assert!(o.status.success(), "{}", stderr(&o));

    let profile = fs::read_to_string(dir.path().join("atypical-out/profile.csv")).unwrap();
    let mut rows = profile.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(rows.next(), Some("n,delta_l,best_l,best_d"));
    let scores: Vec<f64> = rows.map(|r| r.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(scores.len(), 600 - 16 + 1);
    // a perfectly predicted window still pays the atypical coder's few bits
    assert!(scores.iter().all(|&s| s > -0.5), "{scores:?}");
    let flags = fs::read_to_string(dir.path().join("atypical-out/flags.csv")).unwrap();
    assert_eq!(flags.lines().filter(|l| !l.starts_with('#')).count(), 1, "{flags}");
}

#[test]
fn scan_finds_a_planted_run() {
    let dir = TempDir::new().unwrap();
    let mut x = pseudo_random_bits(3000, 3);
    x.replace_range(1200..1400, &"1".repeat(200));
    write(dir.path(), "x.txt", &x);
    let o = atypical(dir.path(), &["--workers", "2", "scan", "x.txt", "--iid-p", "0.5", "--tau", "16", "--svg"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let flags = fs::read_to_string(dir.path().join("atypical-out/flags.csv")).unwrap();
    let hit = flags.lines().filter(|l| !l.starts_with('#')).skip(1).any(|row| {
        let f: Vec<usize> = row.split(',').enumerate().filter(|(i, _)| [4, 5].contains(i)).map(|(_, v)| v.parse().unwrap()).collect();
        f[0] < 1400 && f[1] > 1200
    });
    assert!(hit, "{flags}");
    let svg = fs::read_to_string(dir.path().join("atypical-out/scan.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
}

#[test]
fn ranking_without_threshold() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "x.txt", &pseudo_random_bits(400, 5));
    let o = atypical(dir.path(), &["scan", "x.txt", "--iid-p", "0.5", "--l-max", "32"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(!dir.path().join("atypical-out/flags.csv").exists());
    let ranking = fs::read_to_string(dir.path().join("atypical-out/ranking.csv")).unwrap();
    let scores: Vec<f64> = ranking
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|r| r.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(scores.len(), 400 - 16 + 1);
    assert!(scores.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn input_errors_are_data_errors() {
    let dir = TempDir::new().unwrap();
    let o = atypical(dir.path(), &["scan", "nowhere.txt", "--iid-p", "0.5"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("nowhere.txt"), "{}", stderr(&o));

    write(dir.path(), "empty.txt", "");
    let o = atypical(dir.path(), &["scan", "empty.txt", "--iid-p", "0.5"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));

    write(dir.path(), "bad.txt", "0101\n01x1\n");
    let o = atypical(dir.path(), &["train", "bad.txt"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn usage_errors() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "x.txt", &pseudo_random_bits(100, 1));
    for args in [
        &["scan", "x.txt", "--iid-p", "0.5", "--l-min", "64", "--l-max", "32"][..],
        &["scan", "x.txt"],
        &["scan", "x.txt", "--iid-p", "1.5"],
        &["frobnicate"],
        &["simulate", "phase", "--alphas", "3:1:0.5"],
        &["simulate", "miss", "--p", "0.3", "--p-a", "0.3"],
    ] {
        let o = atypical(dir.path(), args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn binarize_modes() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "n.txt", "1\n2\n3\n");
    let o = atypical(dir.path(), &["binarize", "compare", "n.txt", "--output", "cmp.txt"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(read_bits(&dir.path().join("cmp.txt")), "11");

    write(dir.path(), "g.fa", ">seq\nACGT\n");
    let o = atypical(dir.path(), &["binarize", "dna", "g.fa", "--output", "dna.txt"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(read_bits(&dir.path().join("dna.txt")), "00011011");

    for out in ["r1.txt", "r2.txt"] {
        let o = atypical(dir.path(), &["--seed", "12345", "binarize", "randu", "--count", "500", "--output", out]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let r1 = read_bits(&dir.path().join("r1.txt"));
    assert_eq!(r1.len(), 500);
    assert_eq!(r1, read_bits(&dir.path().join("r2.txt")));

    let o = atypical(dir.path(), &["--seed", "4", "binarize", "randu"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulations_write_grids() {
    let dir = TempDir::new().unwrap();
    let o = atypical(dir.path(), &["simulate", "pa", "--p", "0.3", "--tau", "1", "--trials", "2000", "--lengths", "64,128"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let grid = fs::read_to_string(dir.path().join("atypical-out/pa.csv")).unwrap();
    let rows: Vec<&str> = grid.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "l,estimate,half_width,bound");
    assert_eq!(rows.len(), 3);

    let o = atypical(
        dir.path(),
        &["simulate", "phase", "--alphas", "0.5:3:0.5", "--runs", "2", "--stream-len", "4096", "--tau", "4", "--l-max", "256"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let grid = fs::read_to_string(dir.path().join("atypical-out/phase.csv")).unwrap();
    assert_eq!(grid.lines().filter(|l| !l.starts_with('#')).count(), 7);

    let o = atypical(
        dir.path(),
        &[
            "simulate", "freezing", "--train-len", "5000", "--test-len", "2000", "--segment-start", "800", "--segment-len",
            "400", "--l-max", "128",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["freezing_frozen.csv", "freezing_adaptive.csv", "freezing_test.txt", "manifest.json"] {
        assert!(dir.path().join("atypical-out").join(f).exists(), "{f}");
    }
}

#[test]
fn whole_sequence_test() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "ones.txt", &"1".repeat(200));
    let o = atypical(dir.path(), &["test", "ones.txt", "--iid-p", "0.5", "--tau", "8"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("atypical-out/test.json")).unwrap()).unwrap();
    assert_eq!(report["is_atypical"], true);
    assert_eq!(report["iid_is_atypical"], true);
}
