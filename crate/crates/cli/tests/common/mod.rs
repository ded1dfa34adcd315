#![allow(dead_code)]

use std::path::{Path, PathBuf};

pub fn dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests")
}

pub fn fixture(name: &str) -> String {
    dir().join("fixtures").join(name).display().to_string()
}

pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Output {
    pub fn error(&self) -> serde_json::Value {
        serde_json::from_str(self.stderr.trim()).unwrap_or_else(|e| panic!("stderr is not JSON ({e}): {}", self.stderr))
    }
}

pub fn heurex(args: &[&str]) -> Output {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = heurex::run(std::iter::once("heurex").chain(args.iter().copied()), &mut out, &mut err);
    Output { code, stdout: String::from_utf8(out).unwrap(), stderr: String::from_utf8(err).unwrap() }
}

/// Compares `actual` with a committed file; `HEUREX_BLESS=1` rewrites it.
pub fn check_golden(path: &Path, actual: &str) {
    if std::env::var_os("HEUREX_BLESS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("{}: {e} (run with HEUREX_BLESS=1 to create it)", path.display()));
    assert!(expected == actual, "{} differs from the output:\n{actual}", path.display());
}

pub fn golden(name: &str) -> PathBuf {
    dir().join("golden").join(name)
}
