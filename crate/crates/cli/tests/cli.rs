mod support;

use std::collections::BTreeSet;
use std::fs;

use keri_core::logs::Kerl;
use keri_core::netsim::recovery_scenario;
use support::{end_to_end, keri, scenario, stored_seeds};

#[test]
fn incept_and_rotate_twice_verify() {
    let dir = tempfile::tempdir().unwrap();
    let ks = dir.path();
    assert_eq!(keri(ks, &["incept", "--alias", "a"]).code, 0);
    assert_eq!(keri(ks, &["rotate", "--alias", "a"]).code, 0);
    assert_eq!(keri(ks, &["rotate", "--alias", "a"]).code, 0);
    let v = keri(ks, &["verify", ks.join("a.kel").to_str().unwrap()]);
    assert_eq!(v.code, 0, "{}", v.text());
    assert!(v.stdout.contains("\"sn\": 2"), "{}", v.stdout);
    assert_eq!(v.stdout.matches("accepted-first-seen").count(), 3);
}

#[test]
fn abandoned_identifier_refuses_further_events() {
    let dir = tempfile::tempdir().unwrap();
    let ks = dir.path();
    keri(ks, &["incept", "--alias", "a"]);
    assert_eq!(keri(ks, &["rotate", "--alias", "a", "--next", "none"]).code, 0);
    for args in [&["rotate", "--alias", "a"][..], &["interact", "--alias", "a"], &["delegate", "--alias", "a", "--child", "c"]] {
        let r = keri(ks, args);
        assert_eq!(r.code, 2, "{args:?}: {}", r.text());
        assert!(r.stderr.contains("abandoned"));
    }
    assert_eq!(keri(ks, &["verify", ks.join("a.kel").to_str().unwrap()]).code, 0);
}

#[test]
fn altered_signature_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let ks = dir.path();
    keri(ks, &["--deterministic", "incept", "--alias", "a"]);
    keri(ks, &["--deterministic", "rotate", "--alias", "a"]);
    let path = ks.join("a.kel");
    let mut text = fs::read_to_string(&path).unwrap();
    // a character in the middle of the last signature
    let at = text.rfind("-AAB").unwrap() + 4 + 30;
    let c = text.as_bytes()[at];
    text.replace_range(at..at + 1, if c == b'A' { "B" } else { "A" });
    fs::write(&path, text).unwrap();
    let r = keri(ks, &["verify", path.to_str().unwrap()]);
    assert_eq!(r.code, 2, "{}", r.text());
    assert!(r.stdout.contains("rejected"));
}

#[test]
fn garbage_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("junk.kel");
    fs::write(&path, "not an event").unwrap();
    assert_eq!(keri(dir.path(), &["verify", path.to_str().unwrap()]).code, 1);
    assert_eq!(keri(dir.path(), &["frobnicate"]).code, 1);
    assert_eq!(keri(dir.path(), &["--help"]).code, 0);
}

#[test]
fn divergent_keystore_copies_are_duplicitous() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    keri(&a, &["incept", "--alias", "x"]);
    fs::create_dir_all(&b).unwrap();
    for f in ["x.json", "x.kel"] {
        fs::copy(a.join(f), b.join(f)).unwrap();
    }
    assert_eq!(keri(&a, &["interact", "--alias", "x", "--data", "left"]).code, 0);
    assert_eq!(keri(&b, &["interact", "--alias", "x", "--data", "right"]).code, 0);
    let fa = a.join("x.kel").display().to_string();
    let fb = b.join("x.kel").display().to_string();
    let r = keri(dir.path(), &["verify", &fa, &fb]);
    assert_eq!(r.code, 3, "{}", r.text());
    assert!(r.stdout.contains("duplicity"));
    // both proof locations are named
    assert!(r.stdout.contains(&format!("{fa}:1")) && r.stdout.contains(&format!("{fb}:1")), "{}", r.stdout);
}

#[test]
fn bundled_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    for (name, code) in [("round_robin.txt", 0), ("recovery.txt", 0), ("insufficient.txt", 4)] {
        let out = dir.path().join(format!("{name}.transcript"));
        let r = keri(dir.path(), &["simulate", scenario(name).to_str().unwrap(), "--transcript", out.to_str().unwrap()]);
        assert_eq!(r.code, code, "{name}: {}", r.text());
        let transcript = fs::read_to_string(out).unwrap();
        assert!(r.stdout.starts_with(&transcript));
    }
}

#[test]
fn invalid_script_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.txt");
    fs::write(&path, "SEED 1\nNODE w1 wizard\n").unwrap();
    let r = keri(dir.path(), &["simulate", path.to_str().unwrap()]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("line 2"));
}

#[test]
fn seeds_never_appear_in_output() {
    let dir = tempfile::tempdir().unwrap();
    let ks = dir.path();
    let mut seeds = BTreeSet::new();
    let mut output = String::new();
    let mut record = |runs: &[support::Run], seeds: &mut BTreeSet<String>| {
        for r in runs {
            output.push_str(&r.text());
        }
        seeds.extend(stored_seeds(ks));
    };
    let runs = end_to_end(ks);
    record(&runs, &mut seeds);
    let more = [
        keri(ks, &["export", "--alias", "parent"]),
        keri(ks, &["rotate", "--alias", "parent", "--next", "none"]),
        keri(ks, &["interact", "--alias", "parent"]),
        keri(ks, &["simulate", scenario("recovery.txt").to_str().unwrap()]),
    ];
    record(&more, &mut seeds);
    assert!(seeds.len() >= 10);
    for s in &seeds {
        assert!(!output.contains(s.as_str()), "seed leaked");
    }
}

#[test]
fn keystore_records_are_private() {
    let dir = tempfile::tempdir().unwrap();
    keri(dir.path(), &["incept", "--alias", "a"]);
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        let mode = fs::metadata(dir.path().join("a.json")).unwrap().permissions().mode();
        assert_eq!(mode & 0o077, 0);
    }
}

#[test]
fn end_to_end_flow_and_export_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let ks = dir.path();
    let runs = end_to_end(ks);
    for r in &runs {
        assert_eq!(r.code, 0, "{}", r.text());
    }
    let exported = keri(ks, &["export", "--alias", "parent"]);
    assert_eq!(exported.code, 0);
    let mut kerl = Kerl::new();
    kerl.import(exported.stdout.as_bytes()).unwrap();
    let path = ks.join("exported.kel");
    fs::write(&path, &exported.stdout).unwrap();
    assert_eq!(keri(ks, &["verify", path.to_str().unwrap()]).code, 0);

    // a witness log carries receipt couplets
    let sim = recovery_scenario(3, 4, 3, &[3, 3, 1]).unwrap();
    let w = &sim.node("w2").unwrap().kerl;
    let prefix = sim.created("e0").unwrap().event.prefix.clone();
    let first = w.export(&prefix).unwrap();
    let mut copy = Kerl::new();
    copy.import(&first).unwrap();
    assert_eq!(copy.export(&prefix).unwrap(), first);
    let kever = copy.engine().kever(&prefix).unwrap();
    assert_eq!(kever.trunk.len(), w.engine().kever(&prefix).unwrap().trunk.len());
    for a in &kever.trunk {
        assert_eq!(copy.couplets(&a.digest).len(), w.couplets(&a.digest).len());
        assert!(!w.couplets(&a.digest).is_empty());
    }
}
