#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

pub fn fusionforge<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(env!("CARGO_BIN_EXE_fusionforge"))
        .args(args)
        .output()
        .expect("spawn fusionforge")
}

pub fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

pub fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 temp path")
}

/// Small synthetic dataset written by the CLI into `dir`.
pub fn synth_small(dir: &Path, seed: u64) {
    ok(&fusionforge([
        "synth", "--out", p(dir), "--seed", &seed.to_string(),
        "--labeled", "60", "--unlabeled", "80", "--val", "40", "--test", "30", "--dim", "8",
    ]));
}
