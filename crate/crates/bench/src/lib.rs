//! Inputs shared by the benchmarks.

use heurex_core::design_tree::{Bounds, DesignNode, NodeKind, SourceMeta};
use heurex_core::{parse_document, DesignDocument};

pub const SCREENS: [(&str, &str); 3] = [
    ("lyft_event", include_str!("../../core/tests/fixtures/screens/lyft_event.json")),
    ("music_player", include_str!("../../core/tests/fixtures/screens/music_player.json")),
    ("profile_form", include_str!("../../core/tests/fixtures/screens/profile_form.json")),
];

pub fn screen(text: &str) -> DesignDocument {
    parse_document(text.as_bytes()).expect("bundled screen parses")
}

/// A feed of `cards` cards, each a group with an image, two text lines and a button.
pub fn feed(cards: usize) -> DesignDocument {
    let children = (0..cards)
        .map(|i| {
            let y = 20.0 + 120.0 * i as f64;
            let id = |part: &str| format!("card-{i}-{part}");
            DesignNode::new(id("group"), NodeKind::Group, Bounds::new(16.0, y, 343.0, 104.0))
                .named(format!("Group {i}"))
                .with_children(vec![
                    DesignNode::new(id("image"), NodeKind::Image, Bounds::new(16.0, y, 104.0, 104.0)),
                    DesignNode::new(id("title"), NodeKind::Text, Bounds::new(136.0, y + 8.0, 200.0, 22.0))
                        .named("Title"),
                    DesignNode::new(id("body"), NodeKind::Text, Bounds::new(136.0 + (i % 3) as f64, y + 36.0, 200.0, 18.0))
                        .named("Body"),
                    DesignNode::new(id("button"), NodeKind::Button, Bounds::new(136.0, y + 68.0, 96.0, 28.0))
                        .named("Open"),
                ])
        })
        .collect();
    let height = 40.0 + 120.0 * cards as f64;
    let root = DesignNode::new("root", NodeKind::Group, Bounds::new(0.0, 0.0, 375.0, height)).with_children(children);
    DesignDocument::new(root, None, SourceMeta::default()).expect("generated feed is valid")
}
