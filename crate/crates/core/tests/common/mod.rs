#![allow(dead_code)]

pub mod fake_llm;

use std::path::{Path, PathBuf};

use heurex_core::design_tree::{parse_document, DesignDocument};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

pub const SCREENS: [&str; 12] = [
    "cafe_reviews",
    "cart",
    "chat",
    "checkout",
    "login",
    "lyft_event",
    "music_player",
    "pet_finder",
    "profile_form",
    "settings",
    "travel_menu",
    "weather",
];

pub fn screen_bytes(name: &str) -> Vec<u8> {
    std::fs::read(fixtures().join("screens").join(format!("{name}.json"))).expect("fixture exists")
}

pub fn screen(name: &str) -> DesignDocument {
    parse_document(&screen_bytes(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Compares `actual` with the golden file, or rewrites it when HEUREX_BLESS is set.
pub fn check_golden(rel: &str, actual: &str) {
    let path = golden_dir().join(rel);
    if std::env::var_os("HEUREX_BLESS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path)
        .unwrap_or_else(|_| panic!("missing golden {}; run with HEUREX_BLESS=1", path.display()));
    if expected != actual {
        let line = expected.lines().zip(actual.lines()).position(|(a, b)| a != b).unwrap_or(0);
        panic!(
            "{} differs from golden at line {}:\n  golden: {:?}\n  actual: {:?}",
            rel,
            line + 1,
            expected.lines().nth(line),
            actual.lines().nth(line)
        );
    }
}
