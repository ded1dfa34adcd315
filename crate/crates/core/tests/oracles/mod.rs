//! Slow, direct reimplementations of the layout checks, plus random scene
//! generators. Used as reference answers for the rule engine.
#![allow(dead_code)]

use std::collections::BTreeMap;

use heurex_core::design_tree::{Bounds, Color, DesignNode, NodeKind};
use heurex_core::rules::{
    check_center_alignment, check_contrast, check_edge_alignment, check_overlap, check_size_consistency,
    check_spacing, detect_axis, Axis, RuleConfig, RuleFinding, RuleId,
};
use rand::Rng;

/// A finding reduced to what both sides must agree on.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub rule: RuleId,
    pub nodes: Vec<String>,
    pub axis: Option<Axis>,
    pub measurements: BTreeMap<String, f64>,
}

impl Verdict {
    fn new(rule: RuleId, nodes: Vec<String>, axis: Option<Axis>, m: &[(&str, f64)]) -> Verdict {
        Verdict { rule, nodes, axis, measurements: m.iter().map(|(k, v)| (k.to_string(), *v)).collect() }
    }

    fn key(&self) -> String {
        format!("{:?}|{:?}|{:?}", self.rule, self.nodes, self.axis)
    }
}

pub fn verdicts(findings: &[RuleFinding]) -> Vec<Verdict> {
    let mut out: Vec<Verdict> = findings
        .iter()
        .map(|f| Verdict {
            rule: f.rule,
            nodes: f.node_ids.clone(),
            axis: f.axis,
            measurements: f.measurements.clone(),
        })
        .collect();
    out.sort_by_key(|v| v.key());
    out
}

fn sorted(mut v: Vec<Verdict>) -> Vec<Verdict> {
    v.sort_by_key(|v| v.key());
    v
}

/// Same findings, with measurements equal to within `tol`.
pub fn agree(a: &[Verdict], b: &[Verdict], tol: f64) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| {
            x.rule == y.rule
                && x.nodes == y.nodes
                && x.axis == y.axis
                && x.measurements.len() == y.measurements.len()
                && x.measurements
                    .iter()
                    .zip(&y.measurements)
                    .all(|((ka, va), (kb, vb))| ka == kb && (va - vb).abs() <= tol)
        })
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Status {
    Free,
    On(f64),
    Off(f64, f64),
}

// Components of the "within near_miss" graph, found by repeated merging.
fn components(values: &[f64], near: f64) -> Vec<usize> {
    let mut label: Vec<usize> = (0..values.len()).collect();
    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..values.len() {
            for j in 0..values.len() {
                if (values[i] - values[j]).abs() <= near && label[j] < label[i] {
                    label[i] = label[j];
                    changed = true;
                }
            }
        }
    }
    label
}

fn classify(values: &[f64], eps: f64, near: f64, min_support: usize) -> Vec<Status> {
    let label = components(values, near);
    let mut out = vec![Status::Free; values.len()];
    for i in 0..values.len() {
        let members: Vec<usize> = (0..values.len()).filter(|&j| label[j] == label[i]).collect();
        if members.len() < 2 {
            continue;
        }
        let support = |v: f64| members.iter().filter(|&&j| (values[j] - v).abs() <= eps).count();
        let mut best: Option<(usize, f64)> = None;
        for &j in &members {
            let (s, v) = (support(values[j]), values[j]);
            let better = match best {
                None => true,
                Some((bs, bv)) => s > bs || (s == bs && v < bv),
            };
            if better {
                best = Some((s, v));
            }
        }
        let (s, reference) = best.unwrap();
        if s < min_support {
            continue;
        }
        let offset = values[i] - reference;
        out[i] = if offset.abs() <= eps { Status::On(reference) } else { Status::Off(reference, offset) };
    }
    out
}

fn edge_values(nodes: &[&DesignNode], axis: Axis) -> [Vec<f64>; 3] {
    let pick = |f: &dyn Fn(&Bounds) -> f64| nodes.iter().map(|n| f(&n.bounds)).collect::<Vec<f64>>();
    match axis {
        Axis::X => [pick(&|b| b.x), pick(&|b| b.x + b.width), pick(&|b| b.x + b.width / 2.0)],
        Axis::Y => [pick(&|b| b.y), pick(&|b| b.y + b.height), pick(&|b| b.y + b.height / 2.0)],
    }
}

pub fn oracle_edge(nodes: &[&DesignNode], cfg: &RuleConfig) -> Vec<Verdict> {
    let mut out = Vec::new();
    for axis in [Axis::X, Axis::Y] {
        let [a, b, c] = edge_values(nodes, axis);
        let lines = [
            classify(&a, cfg.epsilon_align, cfg.near_miss_px, 2),
            classify(&b, cfg.epsilon_align, cfg.near_miss_px, 2),
            classify(&c, cfg.epsilon_align, cfg.near_miss_px, 2),
        ];
        for (i, node) in nodes.iter().enumerate() {
            if lines.iter().any(|l| matches!(l[i], Status::On(_))) {
                continue;
            }
            let misses: Vec<(f64, f64)> = lines[..2]
                .iter()
                .filter_map(|l| match l[i] {
                    Status::Off(r, o) => Some((r, o)),
                    _ => None,
                })
                .collect();
            // smallest miss; the leading edge wins a tie
            if let Some(&(r, o)) = misses.iter().fold(None, |acc: Option<&(f64, f64)>, m| match acc {
                Some(best) if best.1.abs() <= m.1.abs() => Some(best),
                _ => Some(m),
            }) {
                out.push(Verdict::new(
                    RuleId::EdgeAlignment,
                    vec![node.id.clone()],
                    Some(axis),
                    &[("offset_px", o), ("reference_px", r)],
                ));
            }
        }
    }
    sorted(out)
}

pub fn oracle_center(nodes: &[&DesignNode], cfg: &RuleConfig) -> Vec<Verdict> {
    let mut out = Vec::new();
    for axis in [Axis::X, Axis::Y] {
        let [_, _, c] = edge_values(nodes, axis);
        for (node, s) in nodes.iter().zip(classify(&c, cfg.epsilon_align, cfg.near_miss_px, 1)) {
            if let Status::Off(r, o) = s {
                out.push(Verdict::new(
                    RuleId::CenterAlignment,
                    vec![node.id.clone()],
                    Some(axis),
                    &[("offset_px", o), ("reference_px", r)],
                ));
            }
        }
    }
    sorted(out)
}

pub fn oracle_size(nodes: &[&DesignNode], cfg: &RuleConfig) -> Vec<Verdict> {
    let mut out = Vec::new();
    let mut kinds: Vec<&NodeKind> = nodes.iter().map(|n| &n.kind).collect();
    kinds.dedup();
    let mut seen: Vec<&NodeKind> = Vec::new();
    for kind in kinds {
        if seen.contains(&kind) {
            continue;
        }
        seen.push(kind);
        let same: Vec<&DesignNode> = nodes.iter().copied().filter(|n| &n.kind == kind).collect();
        if same.len() < 2 {
            continue;
        }
        let w: Vec<f64> = same.iter().map(|n| n.bounds.width).collect();
        let h: Vec<f64> = same.iter().map(|n| n.bounds.height).collect();
        let ws = classify(&w, cfg.epsilon_align, cfg.near_miss_px, 2);
        let hs = classify(&h, cfg.epsilon_align, cfg.near_miss_px, 2);
        for (i, node) in same.iter().enumerate() {
            let mut m = Vec::new();
            if let Status::Off(r, o) = ws[i] {
                m.push(("width_px", r + o));
                m.push(("expected_width_px", r));
            }
            if let Status::Off(r, o) = hs[i] {
                m.push(("height_px", r + o));
                m.push(("expected_height_px", r));
            }
            if !m.is_empty() {
                out.push(Verdict::new(RuleId::SizeConsistency, vec![node.id.clone()], None, &m));
            }
        }
    }
    sorted(out)
}

/// Layout direction: a row when some horizontal band crosses every box.
pub fn oracle_axis(nodes: &[&DesignNode]) -> Option<Axis> {
    if nodes.len() < 2 {
        return None;
    }
    let band = |lo: &dyn Fn(&Bounds) -> f64, hi: &dyn Fn(&Bounds) -> f64| {
        nodes.iter().all(|a| nodes.iter().all(|b| lo(&a.bounds) < hi(&b.bounds)))
    };
    if band(&|b| b.y, &|b| b.y + b.height) {
        Some(Axis::X)
    } else if band(&|b| b.x, &|b| b.x + b.width) {
        Some(Axis::Y)
    } else {
        None
    }
}

pub fn oracle_spacing(nodes: &[&DesignNode], axis: Axis, cfg: &RuleConfig) -> Vec<Verdict> {
    if nodes.len() < 3 {
        return Vec::new();
    }
    let span = |n: &DesignNode| match axis {
        Axis::X => (n.bounds.x, n.bounds.x + n.bounds.width),
        Axis::Y => (n.bounds.y, n.bounds.y + n.bounds.height),
    };
    // rank by counting how many boxes come first
    let before = |a: &DesignNode, b: &DesignNode| {
        let (sa, sb) = (span(a), span(b));
        sa.0 < sb.0 || (sa.0 == sb.0 && (sa.1 < sb.1 || (sa.1 == sb.1 && a.id < b.id)))
    };
    let mut ordered: Vec<&DesignNode> = vec![nodes[0]; nodes.len()];
    for n in nodes {
        let rank = nodes.iter().filter(|m| before(m, n)).count();
        ordered[rank] = n;
    }
    let gaps: Vec<f64> = (1..ordered.len()).map(|i| span(ordered[i]).0 - span(ordered[i - 1]).1).collect();
    // median by counting
    let k = gaps.len();
    let nth = |r: usize| {
        *gaps
            .iter()
            .find(|&&g| {
                let less = gaps.iter().filter(|&&h| h < g).count();
                let equal = gaps.iter().filter(|&&h| h == g).count();
                less <= r && r < less + equal
            })
            .unwrap()
    };
    let median = if k % 2 == 1 { nth(k / 2) } else { (nth(k / 2 - 1) + nth(k / 2)) / 2.0 };
    let mut out = Vec::new();
    for (i, &g) in gaps.iter().enumerate() {
        let d = (g - median).abs();
        if d > cfg.epsilon_gap && d <= cfg.near_miss_px {
            out.push(Verdict::new(
                RuleId::Spacing,
                vec![ordered[i].id.clone(), ordered[i + 1].id.clone()],
                Some(axis),
                &[("gap_px", g), ("median_gap_px", median)],
            ));
        }
    }
    sorted(out)
}

/// Counts shared unit cells; exact for integer boxes.
pub fn oracle_overlap(nodes: &[&DesignNode], cfg: &RuleConfig) -> Vec<Verdict> {
    let cells = |b: &Bounds| {
        let mut v = Vec::new();
        for x in b.x as i64..(b.x + b.width) as i64 {
            for y in b.y as i64..(b.y + b.height) as i64 {
                v.push((x, y));
            }
        }
        v
    };
    let mut out = Vec::new();
    for i in 0..nodes.len() {
        for j in i + 1..nodes.len() {
            let (a, b) = (nodes[i], nodes[j]);
            let (ca, cb) = (cells(&a.bounds), cells(&b.bounds));
            let smaller = ca.len().min(cb.len());
            if smaller == 0 {
                continue;
            }
            let shared = ca.iter().filter(|c| cb.contains(c)).count();
            let fraction = shared as f64 / smaller as f64;
            if fraction > cfg.overlap_min_fraction {
                out.push(Verdict::new(
                    RuleId::Overlap,
                    vec![a.id.clone(), b.id.clone()],
                    None,
                    &[("overlap_fraction", fraction)],
                ));
            }
        }
    }
    sorted(out)
}

fn srgb_to_linear(v: f64) -> f64 {
    let s = v / 255.0;
    if s > 0.03928 {
        ((s + 0.055).ln() - 1.055f64.ln()).mul_add(2.4, 0.0).exp()
    } else {
        s / 12.92
    }
}

/// Contrast of text over an opaque backdrop, compositing by hand.
pub fn oracle_contrast_ratio(fill: Color, opacity: f64, bg: Color) -> f64 {
    let a = fill.a * opacity;
    let ch = |f: f64, b: f64| a * f + (1.0 - a) * b;
    let text = [ch(fill.r, bg.r), ch(fill.g, bg.g), ch(fill.b, bg.b)];
    let lum = |c: [f64; 3]| {
        let w = [0.2126, 0.7152, 0.0722];
        (0..3).map(|i| w[i] * srgb_to_linear(c[i])).sum::<f64>()
    };
    let (l1, l2) = (lum(text), lum([bg.r, bg.g, bg.b]));
    (l1.max(l2) + 0.05) / (l1.min(l2) + 0.05)
}

pub fn oracle_contrast(node: &DesignNode, bg: Color, cfg: &RuleConfig) -> Vec<Verdict> {
    let ratio = oracle_contrast_ratio(node.fill.unwrap(), node.opacity, bg);
    if ratio >= cfg.min_contrast {
        return Vec::new();
    }
    vec![Verdict::new(
        RuleId::Contrast,
        vec![node.id.clone()],
        None,
        &[("contrast_ratio", ratio), ("min_contrast", cfg.min_contrast)],
    )]
}

const KINDS: [NodeKind; 3] = [NodeKind::Icon, NodeKind::Button, NodeKind::Image];

/// Siblings placed near a few shared lines and sizes, so near misses,
/// exact alignments and unrelated values all occur often.
pub fn random_scene(rng: &mut impl Rng) -> Vec<DesignNode> {
    let n = rng.gen_range(2..=8);
    let lines_x: Vec<i64> = (0..rng.gen_range(1..=3)).map(|_| rng.gen_range(0..300)).collect();
    let lines_y: Vec<i64> = (0..rng.gen_range(1..=3)).map(|_| rng.gen_range(0..700)).collect();
    let sizes: Vec<i64> = (0..rng.gen_range(1..=3)).map(|_| rng.gen_range(8..60)).collect();
    let jitter = |rng: &mut dyn rand::RngCore| -> i64 {
        match rng.gen_range(0..4) {
            0 => 0,
            1 => rng.gen_range(-1..=1),
            2 => rng.gen_range(-8..=8),
            _ => rng.gen_range(-30..=30),
        }
    };
    (0..n)
        .map(|i| {
            let w = (sizes[rng.gen_range(0..sizes.len())] + jitter(rng)).max(1);
            let h = (sizes[rng.gen_range(0..sizes.len())] + jitter(rng)).max(1);
            let x = lines_x[rng.gen_range(0..lines_x.len())] + jitter(rng);
            let y = lines_y[rng.gen_range(0..lines_y.len())] + jitter(rng);
            let kind = KINDS[rng.gen_range(0..KINDS.len())].clone();
            DesignNode::new(format!("n{i}"), kind, Bounds::new(x as f64, y as f64, w as f64, h as f64))
        })
        .collect()
}

/// A row or column of 3-8 same-kind boxes with mostly regular gaps.
pub fn random_run(rng: &mut impl Rng) -> Vec<DesignNode> {
    let n = rng.gen_range(3..=8);
    let gap = rng.gen_range(0..30i64);
    let column = rng.gen_bool(0.5);
    let mut pos = rng.gen_range(0..50i64);
    let cross = rng.gen_range(0..200i64);
    (0..n)
        .map(|i| {
            let len = rng.gen_range(10..50i64);
            let thick = rng.gen_range(10..50i64);
            let offset = rng.gen_range(0..5i64);
            let b = if column {
                Bounds::new((cross + offset) as f64, pos as f64, thick as f64, len as f64)
            } else {
                Bounds::new(pos as f64, (cross + offset) as f64, len as f64, thick as f64)
            };
            let step = match rng.gen_range(0..4) {
                0 | 1 => gap,
                2 => gap + rng.gen_range(-8..=8),
                _ => gap + rng.gen_range(-20..=20),
            };
            pos += len + step;
            DesignNode::new(format!("r{i}"), NodeKind::Icon, b)
        })
        .collect()
}

/// Random scene with some zero-area boxes, for the overlap check.
pub fn random_boxes(rng: &mut impl Rng) -> Vec<DesignNode> {
    (0..rng.gen_range(2..=7))
        .map(|i| {
            let w = if rng.gen_range(0..10) == 0 { 0 } else { rng.gen_range(1..30i64) };
            let h = rng.gen_range(1..30i64);
            let x = rng.gen_range(0..60i64);
            let y = rng.gen_range(0..60i64);
            DesignNode::new(format!("b{i}"), NodeKind::Rectangle, Bounds::new(x as f64, y as f64, w as f64, h as f64))
        })
        .collect()
}

pub fn random_color(rng: &mut impl Rng, alpha: bool) -> Color {
    let a = if alpha && rng.gen_bool(0.3) { rng.gen_range(0..=100) as f64 / 100.0 } else { 1.0 };
    Color::rgba(rng.gen(), rng.gen(), rng.gen(), a)
}

pub fn random_text(rng: &mut impl Rng) -> (DesignNode, Color) {
    let mut t = DesignNode::new("t", NodeKind::Text, Bounds::new(0.0, 0.0, 80.0, 20.0));
    t.fill = Some(random_color(rng, true));
    if rng.gen_bool(0.2) {
        t.opacity = rng.gen_range(0..=100) as f64 / 100.0;
    }
    (t, random_color(rng, false))
}

/// Disagreements between one check and its oracle over `scenes` random
/// scenes, with the first mismatch described.
pub fn disagreements(check: RuleId, scenes: usize, seed: u64) -> (usize, Option<String>) {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let cfg = RuleConfig::default();
    let mut bad = 0;
    let mut first = None;
    for _ in 0..scenes {
        let (got, want, tol, scene) = match check {
            RuleId::EdgeAlignment | RuleId::CenterAlignment | RuleId::SizeConsistency => {
                let nodes = random_scene(&mut rng);
                let refs: Vec<&DesignNode> = nodes.iter().collect();
                let (got, want) = match check {
                    RuleId::EdgeAlignment => (check_edge_alignment(&refs, &cfg), oracle_edge(&refs, &cfg)),
                    RuleId::CenterAlignment => (check_center_alignment(&refs, &cfg), oracle_center(&refs, &cfg)),
                    _ => (check_size_consistency(&refs, &cfg), oracle_size(&refs, &cfg)),
                };
                (verdicts(&got), want, 0.0, format!("{:?}", boxes(&nodes)))
            }
            RuleId::Spacing => {
                let nodes = random_run(&mut rng);
                let refs: Vec<&DesignNode> = nodes.iter().collect();
                let axis = oracle_axis(&refs);
                if detect_axis(&refs) != axis {
                    bad += 1;
                    first.get_or_insert_with(|| format!("axis differs on {:?}", boxes(&nodes)));
                    continue;
                }
                let (got, want) = match axis {
                    Some(axis) => (check_spacing(&refs, axis, &cfg), oracle_spacing(&refs, axis, &cfg)),
                    None => (Vec::new(), Vec::new()),
                };
                (verdicts(&got), want, 0.0, format!("{:?}", boxes(&nodes)))
            }
            RuleId::Overlap => {
                let nodes = random_boxes(&mut rng);
                let refs: Vec<&DesignNode> = nodes.iter().collect();
                (verdicts(&check_overlap(&refs, &cfg)), oracle_overlap(&refs, &cfg), 1e-12, format!("{:?}", boxes(&nodes)))
            }
            RuleId::Contrast => {
                let (text, bg) = random_text(&mut rng);
                let ratio = oracle_contrast_ratio(text.fill.unwrap(), text.opacity, bg);
                if (ratio - cfg.min_contrast).abs() < 1e-9 {
                    continue;
                }
                let got = check_contrast(&text, Some(bg), &cfg).unwrap();
                (verdicts(&got), oracle_contrast(&text, bg, &cfg), 1e-9, format!("{:?} on {:?}", text.fill, bg))
            }
        };
        if !agree(&got, &want, tol) {
            bad += 1;
            first.get_or_insert_with(|| format!("{scene}\n  engine: {got:?}\n  oracle: {want:?}"));
        }
    }
    (bad, first)
}

fn boxes(nodes: &[DesignNode]) -> Vec<[f64; 4]> {
    nodes.iter().map(|n| n.bounds.to_array()).collect()
}
