#![allow(dead_code)]

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Run {
    pub fn text(&self) -> String {
        format!("{}{}", self.stdout, self.stderr)
    }
}

pub fn keri(store: &Path, args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_keri"))
        .arg("--keystore")
        .arg(store)
        .args(args)
        .output()
        .expect("spawn keri");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

pub fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

/// Every seed stored in the keystore records, qualified and bare.
pub fn stored_seeds(store: &Path) -> BTreeSet<String> {
    let mut seeds = BTreeSet::new();
    for entry in fs::read_dir(store).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
            for field in ["current", "next"] {
                for s in v[field].as_array().unwrap() {
                    let q = s.as_str().unwrap().to_string();
                    seeds.insert(q[2..].to_string());
                    seeds.insert(q);
                }
            }
        }
    }
    seeds
}

/// incept, rotate twice, interact, delegate a child and rotate it, then
/// verify both logs. Returns every run in order.
pub fn end_to_end(store: &Path) -> Vec<Run> {
    let kel = |a: &str| store.join(format!("{a}.kel")).display().to_string();
    let mut runs = vec![
        keri(store, &["incept", "--alias", "parent", "--keys", "2", "--next", "2"]),
        keri(store, &["rotate", "--alias", "parent"]),
        keri(store, &["rotate", "--alias", "parent", "--next", "3"]),
        keri(store, &["interact", "--alias", "parent", "--data", "hello"]),
        keri(store, &["delegate", "--alias", "parent", "--child", "child"]),
        keri(store, &["rotate", "--alias", "child"]),
        keri(store, &["delegate", "--alias", "parent", "--child", "second", "--rotate"]),
    ];
    runs.push(keri(store, &["verify", &kel("parent"), &kel("child"), &kel("second")]));
    runs
}
