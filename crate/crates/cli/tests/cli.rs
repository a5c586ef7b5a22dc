use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dcap_core::{Capability, KeyPair};

fn dcap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dcap"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

struct Setup {
    dir: tempfile::TempDir,
}

impl Setup {
    fn new() -> Self {
        let s = Self {
            dir: tempfile::tempdir().unwrap(),
        };
        assert!(dcap(&[
            "keygen",
            "--out",
            &s.p("grantor"),
            "--seed",
            &"11".repeat(32)
        ])
        .status
        .success());
        assert!(
            dcap(&["keygen", "--out", &s.p("alice"), "--seed", &"22".repeat(32)])
                .status
                .success()
        );
        let o = dcap(&[
            "store",
            "--state",
            &s.p("state"),
            "--key",
            &s.p("grantor.key"),
            "--grantee",
            &s.p("alice.pub"),
            "--object",
            "/doc",
            "--privilege",
            "read",
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        s
    }

    fn p(&self, name: &str) -> String {
        self.path(name).to_string_lossy().into_owned()
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn issue(&self, cmd: &str, window: Option<(u64, u64)>, out: &str) -> Output {
        let mut args = vec![
            cmd.to_string(),
            "--state".into(),
            self.p("state"),
            "--key".into(),
            self.p("grantor.key"),
            "--grantee".into(),
            self.p("alice.pub"),
            "--object".into(),
            "/doc".into(),
            "--privilege".into(),
            "read".into(),
            "--out".into(),
            self.p(out),
        ];
        match window {
            Some((a, b)) => args.extend([
                "--not-before".into(),
                a.to_string(),
                "--not-after".into(),
                b.to_string(),
            ]),
            None => args.push("--clockless".into()),
        }
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        dcap(&refs)
    }

    fn decide(&self, caps: &[&str], at: u64) -> Output {
        let mut args = vec!["decide".to_string()];
        args.extend(caps.iter().map(|c| self.p(c)));
        args.extend([
            "--anchor".into(),
            self.p("grantor.pub"),
            "--grantee".into(),
            self.p("alice.pub"),
            "--object".into(),
            "/doc".into(),
            "--privilege".into(),
            "read".into(),
            "--at".into(),
            at.to_string(),
        ]);
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        dcap(&refs)
    }
}

fn tamper(path: &Path) {
    let cap = Capability::from_text(&fs::read_to_string(path).unwrap()).unwrap();
    let mut sig = *cap.signature();
    sig[10] ^= 0x01;
    fs::write(path, cap.with_signature(sig).to_text()).unwrap();
}

#[test]
fn keygen_is_deterministic_with_seed() {
    let s = Setup::new();
    let again = s.p("again");
    dcap(&["keygen", "--out", &again, "--seed", &"11".repeat(32)]);
    assert_eq!(
        fs::read(s.path("grantor.pub")).unwrap(),
        fs::read(s.path("again.pub")).unwrap()
    );
    assert_eq!(
        fs::read(s.path("grantor.key")).unwrap(),
        fs::read(s.path("again.key")).unwrap()
    );
    let kp =
        KeyPair::from_secret_text(&fs::read_to_string(s.path("grantor.key")).unwrap()).unwrap();
    assert_eq!(
        kp.public_text(),
        fs::read_to_string(s.path("grantor.pub")).unwrap().trim()
    );
}

#[test]
fn keygen_rejects_short_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("k");
    let o = dcap(&[
        "keygen",
        "--out",
        out.to_str().unwrap(),
        "--seed",
        &"00".repeat(31),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn issue_then_decide() {
    let s = Setup::new();
    let o = s.issue("issue", Some((100, 200)), "c1");
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "serial=1 flavor=GRANT");
    let o = s.decide(&["c1"], 150);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "authorized=true reason=GRANTED serial=1");
    let o = s.decide(&["c1"], 201);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("EXPIRED"));
}

#[test]
fn nested_issue_order_fixture() {
    let s = Setup::new();
    assert!(s.issue("issue", Some((100, 1000)), "c1").status.success());
    assert!(s.issue("revoke", Some((200, 900)), "c2").status.success());
    assert!(s.issue("issue", Some((300, 800)), "c3").status.success());
    // presentation order must not matter
    let o = s.decide(&["c3", "c1", "c2"], 500);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "authorized=true reason=GRANTED serial=3");
    let o = s.decide(&["c1", "c2", "c3"], 850);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(
        stdout(&o).trim(),
        "authorized=false reason=REVOKED serial=2"
    );
    assert!(fs::read_to_string(s.path("state"))
        .unwrap()
        .starts_with("serial=4\n"));
}

#[test]
fn issue_outside_store_is_denied() {
    let s = Setup::new();
    let o = dcap(&[
        "issue",
        "--state",
        &s.p("state"),
        "--key",
        &s.p("grantor.key"),
        "--grantee",
        &s.p("alice.pub"),
        "--object",
        "/other",
        "--privilege",
        "read",
        "--clockless",
        "--out",
        &s.p("c"),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!s.path("c").exists());
    assert!(fs::read_to_string(s.path("state"))
        .unwrap()
        .starts_with("serial=1\n"));
}

#[test]
fn verify_reports_outcomes() {
    let s = Setup::new();
    s.issue("issue", Some((100, 200)), "c1");
    let verify =
        |at: &str, anchor: &str| dcap(&["verify", &s.p("c1"), "--anchor", anchor, "--at", at]);
    let o = verify("150", &s.p("grantor.pub"));
    assert_eq!(
        (o.status.code(), stdout(&o).trim()),
        (Some(0), "VALID serial=1 flavor=GRANT")
    );
    let o = verify("99", &s.p("grantor.pub"));
    assert_eq!(
        (o.status.code(), stdout(&o).trim()),
        (Some(1), "NOT_YET_VALID")
    );
    let o = verify("150", &s.p("alice.pub"));
    assert_eq!(
        (o.status.code(), stdout(&o).trim()),
        (Some(1), "UNTRUSTED_GRANTOR")
    );
    tamper(&s.path("c1"));
    let o = verify("150", &s.p("grantor.pub"));
    assert_eq!(
        (o.status.code(), stdout(&o).trim()),
        (Some(1), "BAD_SIGNATURE")
    );
}

#[test]
fn malformed_inputs_exit_2() {
    let s = Setup::new();
    fs::write(s.path("junk"), "dcap1:AAAA").unwrap();
    let o = dcap(&[
        "verify",
        &s.p("junk"),
        "--anchor",
        &s.p("grantor.pub"),
        "--at",
        "1",
    ]);
    assert_eq!((o.status.code(), stdout(&o).trim()), (Some(2), "MALFORMED"));
    fs::write(s.path("junk"), "not a capability").unwrap();
    assert_eq!(dcap(&["inspect", &s.p("junk")]).status.code(), Some(2));
    assert_eq!(dcap(&["inspect", &s.p("missing")]).status.code(), Some(2));
    assert_eq!(dcap(&["decide"]).status.code(), Some(2));
    assert_eq!(dcap(&["frobnicate"]).status.code(), Some(2));
    // validity flags are all-or-nothing
    let o = dcap(&[
        "issue",
        "--state",
        &s.p("state"),
        "--key",
        &s.p("grantor.key"),
        "--grantee",
        &s.p("alice.pub"),
        "--object",
        "/doc",
        "--privilege",
        "read",
        "--not-before",
        "5",
        "--out",
        &s.p("c"),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn inspect_matches_decoder() {
    let s = Setup::new();
    s.issue("revoke", None, "c");
    let o = dcap(&["inspect", &s.p("c")]);
    assert!(o.status.success());
    let cap = Capability::from_text(&fs::read_to_string(s.path("c")).unwrap()).unwrap();
    let text = stdout(&o);
    let field = |k: &str| {
        text.lines()
            .find_map(|l| l.strip_prefix(&format!("{k}=")))
            .unwrap_or_else(|| panic!("missing {k}"))
            .to_string()
    };
    assert_eq!(field("flavor"), "REVOCATION");
    assert_eq!(field("validity"), "clockless");
    assert_eq!(field("serial"), cap.serial().to_string());
    assert_eq!(field("grantor"), dcap_core::armor::b64url(cap.grantor_id()));
    assert_eq!(field("tuple.0.object_utf8"), "/doc");
    assert_eq!(
        field("signature"),
        dcap_core::armor::b64url(cap.signature())
    );
}

#[test]
fn store_remove() {
    let s = Setup::new();
    let args = |extra: Option<&str>| {
        let mut v = vec![
            "store".to_string(),
            "--state".into(),
            s.p("state"),
            "--key".into(),
            s.p("grantor.key"),
            "--grantee".into(),
            s.p("alice.pub"),
            "--object".into(),
            "/doc".into(),
            "--privilege".into(),
            "read".into(),
        ];
        v.extend(extra.map(String::from));
        v
    };
    let run = |v: Vec<String>| dcap(&v.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(stdout(&run(args(Some("--remove")))).trim(), "tuples=0");
    assert_eq!(run(args(Some("--remove"))).status.code(), Some(1));
}

#[test]
fn simulate_prints_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("s.txt");
    fs::write(
        &file,
        "node c consumer\nnode r router\nnode p producer\nlink c r\nlink r p\ncache r 2\nlegit 0 c /n1\nlegit 9 c /n1\nseed 1\n",
    )
    .unwrap();
    let o = dcap(&["simulate", file.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("legit_cache_hit_rate=0.500000"));
    fs::write(&file, "node c consumer\n").unwrap();
    assert_eq!(
        dcap(&["simulate", file.to_str().unwrap()]).status.code(),
        Some(2)
    );
}
