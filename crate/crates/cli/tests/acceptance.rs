//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero when any fails.

#[path = "../../core/tests/common/fake_llm.rs"]
#[allow(dead_code)]
mod fake_llm;
#[path = "../../core/tests/oracles/mod.rs"]
mod oracles;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use fake_llm::{FakeLlm, PromptKind};
use heurex::core::analysis::{
    default_stopwords, fleiss_kappa, load_ground_truth, precision_recall_f1, word_count_analysis, RatedText, WordCount,
    DEFAULT_DROP_WORDS,
};
use heurex::core::design_tree::{Bounds, DesignNode};
use heurex::core::llm::{
    ablation_prompt, build_eval_prompt, prompt_tokens, ParseError, PipelineError, PromptCondition, PromptMessage,
    PromptOptions, Stage, SuggestionId, COMMON_ERRORS,
};
use heurex::core::rules::{check_center_alignment, RuleConfig, RuleId};
use heurex::core::{
    builtin_sets, condense, create_session, estimate_tokens, parse_document, resolve_builtin, CondenseOptions,
    DesignDocument, Engine, SessionError, SessionState,
};
use oracles::{disagreements, random_scene, verdicts, Verdict};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

type Outcome = Result<(), String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, message: impl FnOnce() -> String) -> Outcome {
    if ok {
        Ok(())
    } else {
        Err(message())
    }
}

fn core_tests() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests")
}

fn cli_tests() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests")
}

const SCREENS: [&str; 12] = [
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

fn screen(name: &str) -> DesignDocument {
    let path = core_tests().join("fixtures/screens").join(format!("{name}.json"));
    parse_document(&std::fs::read(&path).unwrap()).unwrap()
}

fn close(x: Option<f64>, want: f64, tol: f64) -> bool {
    x.is_some_and(|v| (v - want).abs() <= tol)
}

fn metrics() -> Outcome {
    let start = Instant::now();
    let m = precision_recall_f1(63, 38, 100).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(close(m.precision, 0.603, 0.001), || format!("precision {:?}", m.precision))?;
    ensure(close(m.recall, 0.380, 0.001), || format!("recall {:?}", m.recall))?;
    ensure(close(m.f1, 0.466, 0.001), || format!("f1 {:?}", m.f1))?;
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))
}

fn ground_truth() -> Outcome {
    let mut csv = String::from("id,provenance\n");
    for (n, p) in [(9, "llm-only"), (29, "both"), (62, "human-only")] {
        for i in 0..n {
            csv.push_str(&format!("{p}-{i},{p}\n"));
        }
    }
    let gt = load_ground_truth(csv.as_bytes()).map_err(|e| e.to_string())?;
    ensure(gt.llm_found() == 38 && gt.total() == 100, || format!("{} helpful of {}", gt.llm_found(), gt.total()))
}

fn render(messages: &[PromptMessage]) -> String {
    messages.iter().map(|m| format!("=== {} ===\n{}\n", m.role, m.content)).collect::<Vec<_>>().join("\n")
}

fn prompt_goldens() -> Outcome {
    let doc = screen("lyft_event");
    let ui = condense(&doc, CondenseOptions::default());
    let sets = builtin_sets().to_vec();
    for condition in PromptCondition::ALL {
        let text = render(&ablation_prompt(condition, &ui, &sets, &PromptOptions::default()).map_err(|e| e.to_string())?);
        let path = core_tests().join("golden/prompts").join(format!("{}.txt", condition.as_str()));
        let golden = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        ensure(text == golden, || format!("{condition} differs from its golden"))?;
        ensure(text.contains(&ui.text), || format!("{condition} lacks the UI JSON"))?;
        for line in COMMON_ERRORS.lines().map(str::trim).filter(|l| !l.is_empty()) {
            ensure(text.contains(line), || format!("{condition} lacks common error {line:?}"))?;
        }
        let bodies = sets.iter().flat_map(|s| &s.guidelines).map(|g| g.body.as_str()).filter(|b| !b.is_empty());
        match condition {
            PromptCondition::Complete => {
                for body in bodies {
                    ensure(text.contains(body), || format!("complete lacks {body:?}"))?;
                }
            }
            PromptCondition::NoHeuristics => {
                for body in bodies {
                    ensure(!text.contains(body), || format!("no-heuristics contains {body:?}"))?;
                }
            }
            _ => {}
        }
    }
    Ok(())
}

fn four_items() -> Value {
    json!([
        {"guideline": "Layout", "elements": ["event-photo", "event-logo"], "explanation": "The logo overlaps the event photo and hides part of it."},
        {"guideline": "Readability", "elements": ["event-going"], "explanation": "The attendee count is small and light gray."},
        {"guideline": "Consistency and Standards", "elements": ["event-rsvp"], "explanation": "The RSVP button does not match the other buttons."},
        {"guideline": "Aesthetic and Minimalist Design", "elements": ["event-about"], "explanation": "The description runs long for a summary card."}
    ])
}

fn new_session(budget: Option<usize>) -> SessionState {
    let sets = resolve_builtin(&["nielsen", "crowdcrit"]).unwrap();
    create_session("acceptance", screen("lyft_event"), sets, Engine::Llm, budget).unwrap()
}

fn find(s: &SessionState, start: &str) -> Result<SuggestionId, String> {
    s.latest_round()
        .and_then(|r| r.suggestions.iter().find(|x| x.violation.explanation.starts_with(start)))
        .map(|x| x.id.clone())
        .ok_or_else(|| format!("no suggestion starting {start:?}"))
}

fn step<T>(r: Result<T, SessionError>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn replay() -> Result<(Vec<u8>, Vec<Vec<PromptMessage>>), String> {
    let fake = FakeLlm::new(vec![four_items()]);
    let mut s = new_session(None);
    step(s.run_round(None, &fake))?;
    let a = find(&s, "The RSVP button")?;
    step(s.dismiss(&a, 100))?;
    step(s.run_round(None, &fake))?;
    let b = find(&s, "The logo overlaps")?;
    step(s.dismiss(&b, 200))?;
    step(s.run_round(None, &fake))?;
    Ok((s.save(), fake.calls()))
}

fn session_suite() -> Outcome {
    // one dismissal adds assistant, user and assistant messages
    let fake = FakeLlm::new(vec![four_items()]);
    let mut s = new_session(None);
    step(s.run_round(None, &fake))?;
    let id = find(&s, "The attendee count")?;
    step(s.dismiss(&id, 1))?;
    step(s.run_round(None, &fake))?;
    let evals = fake.calls_of(PromptKind::Evaluate);
    ensure(evals[1].len() == evals[0].len() + 3, || format!("prompt grew from {} to {}", evals[0].len(), evals[1].len()))?;

    // dismissed suggestions stay gone over four rounds
    let fake = FakeLlm::new(vec![four_items()]);
    let mut s = new_session(None);
    step(s.run_round(None, &fake))?;
    let mut gone = Vec::new();
    for (i, start) in ["The attendee count", "The RSVP button", "The description"].iter().enumerate() {
        let id = find(&s, start)?;
        step(s.dismiss(&id, i as u64))?;
        gone.push(id);
        step(s.run_round(None, &fake))?;
        let latest = s.latest_round().unwrap();
        ensure(gone.iter().all(|g| latest.find(g).is_none()), || format!("round {} repeats a dismissal", latest.number))?;
    }
    ensure(s.rounds.len() == 4, || format!("{} rounds", s.rounds.len()))?;

    // a budget that fits one exchange keeps the newest
    let fake = FakeLlm::new(vec![four_items()]);
    let mut probe = new_session(None);
    step(probe.run_round(None, &fake))?;
    let older = find(&probe, "The logo overlaps")?;
    let newer = find(&probe, "The attendee count")?;
    step(probe.dismiss(&older, 1))?;
    step(probe.dismiss(&newer, 2))?;
    step(probe.run_round(None, &fake))?;
    let cost_old = prompt_tokens(&probe.dismissals[0].exchange());
    let cost_new = prompt_tokens(&probe.dismissals[1].exchange());
    let ui = condense(&probe.document, CondenseOptions::default());
    let base = prompt_tokens(&build_eval_prompt(&ui, &probe.sets, &[], &PromptOptions::default()).unwrap());
    let budget = base + cost_new + cost_old / 2;
    let fake = FakeLlm::new(vec![four_items()]);
    let mut s = new_session(Some(budget));
    step(s.run_round(None, &fake))?;
    step(s.dismiss(&older, 1))?;
    step(s.dismiss(&newer, 2))?;
    step(s.run_round(None, &fake))?;
    let prompt = fake.calls_of(PromptKind::Evaluate)[1].clone();
    ensure(prompt.len() == 5, || format!("{} messages under the tight budget", prompt.len()))?;
    ensure(prompt[1].content.contains("The attendee count"), || "the newest record was evicted".into())?;

    // five replays are identical
    let first = replay()?;
    for i in 1..5 {
        ensure(replay()? == first, || format!("replay {i} differs"))?;
    }
    Ok(())
}

fn three_parts() -> Outcome {
    let fake = FakeLlm::new(vec![four_items()]);
    let mut s = new_session(None);
    step(s.run_round(None, &fake))?;
    for sug in &s.latest_round().unwrap().suggestions {
        let c = &sug.constructive;
        ensure(!c.standard.trim().is_empty() && !c.gap.trim().is_empty() && !c.fix.trim().is_empty(), || {
            format!("{} has an empty part", sug.id)
        })?;
    }
    let fake = FakeLlm::new(vec![four_items()]).without_fix();
    let mut s = new_session(None);
    let err = s.run_round(None, &fake).err();
    let want = SessionError::Pipeline(PipelineError::Parse { stage: Stage::Rephrase, source: ParseError::MissingSegment("fix") });
    ensure(err.as_ref() == Some(&want), || format!("got {err:?}"))?;
    ensure(s.rounds.is_empty(), || "the failed round was kept".into())
}

fn without_positions(v: Vec<Verdict>) -> Vec<Verdict> {
    v.into_iter()
        .map(|mut x| {
            x.measurements.remove("reference_px");
            x
        })
        .collect()
}

fn all_checks(nodes: &[DesignNode]) -> Vec<Verdict> {
    let doc_sets = builtin_sets();
    let root = DesignNode::new("root", heurex::core::NodeKind::Group, Bounds::new(-2000.0, -2000.0, 6000.0, 6000.0))
        .with_children(nodes.to_vec());
    let doc = DesignDocument::new(root, None, Default::default()).unwrap();
    let findings = heurex::core::run_rules(&doc, doc_sets, &RuleConfig::default());
    without_positions(verdicts(&findings))
}

fn rule_oracles() -> Outcome {
    let start = Instant::now();
    let checks = [
        RuleId::EdgeAlignment,
        RuleId::CenterAlignment,
        RuleId::SizeConsistency,
        RuleId::Spacing,
        RuleId::Overlap,
        RuleId::Contrast,
    ];
    for (i, check) in checks.into_iter().enumerate() {
        let (bad, first) = disagreements(check, 1000, 100 + i as u64);
        ensure(bad == 0, || format!("{check}: {bad} disagreements, first {}", first.unwrap_or_default()))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let cfg = RuleConfig::default();
    for scene in 0..1000 {
        let mut nodes = random_scene(&mut rng);
        let before = verdicts(&check_center_alignment(&nodes.iter().collect::<Vec<_>>(), &cfg));
        let i = rng.gen_range(0..nodes.len());
        let b = nodes[i].bounds;
        let d = rng.gen_range(-10..40) as f64;
        if b.width + 2.0 * d <= 0.0 || b.height + 2.0 * d <= 0.0 {
            continue;
        }
        nodes[i].bounds = Bounds::new(b.x - d, b.y - d, b.width + 2.0 * d, b.height + 2.0 * d);
        let after = verdicts(&check_center_alignment(&nodes.iter().collect::<Vec<_>>(), &cfg));
        ensure(before == after, || format!("scene {scene}: resizing node {i} by {d} changed the center verdict"))?;
    }
    for scene in 0..1000 {
        let nodes = random_scene(&mut rng);
        let (dx, dy) = (rng.gen_range(-500..500) as f64, rng.gen_range(-500..500) as f64);
        let moved: Vec<DesignNode> = nodes
            .iter()
            .map(|n| {
                let mut m = n.clone();
                m.bounds = n.bounds.translated(dx, dy);
                m
            })
            .collect();
        ensure(all_checks(&nodes) == all_checks(&moved), || format!("scene {scene}: translation by ({dx}, {dy}) changed findings"))?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))
}

// Pairwise agreement computed straight from the ratings.
fn kappa_oracle(ratings: &[Vec<usize>], categories: usize) -> f64 {
    let mut p_o = 0.0;
    let mut totals = vec![0.0; categories];
    let all: usize = ratings.iter().map(Vec::len).sum();
    for item in ratings {
        let n = item.len();
        let pairs = (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).filter(|(a, b)| a != b);
        let same = pairs.filter(|&(a, b)| item[a] == item[b]).count();
        p_o += same as f64 / (n * (n - 1)) as f64 / ratings.len() as f64;
        for &c in item {
            totals[c] += 1.0 / all as f64;
        }
    }
    let p_e: f64 = totals.iter().map(|p| p * p).sum();
    (p_o - p_e) / (1.0 - p_e)
}

fn kappa() -> Outcome {
    let k = |t: &[Vec<u64>], n| fleiss_kappa(t, n).map_err(|e| e.to_string());
    ensure(k(&[vec![3, 0, 0], vec![0, 3, 0], vec![0, 0, 3]], 3)? == Some(1.0), || "perfect agreement is not 1".into())?;
    let ratings = vec![vec![0, 0, 0], vec![0, 1, 1], vec![0, 2, 2], vec![1, 1, 2]];
    let table: Vec<Vec<u64>> =
        ratings.iter().map(|r| (0..3).map(|c| r.iter().filter(|&&x| x == c).count() as u64).collect()).collect();
    let got = k(&table, 3)?.ok_or("kappa undefined on the 4x3 table")?;
    let want = kappa_oracle(&ratings, 3);
    ensure((got - want).abs() < 1e-9, || format!("{got} vs oracle {want}"))?;
    ensure((got - 0.234_042_553_191_489_4).abs() < 1e-9, || format!("{got} vs frozen 22/94"))?;
    ensure(k(&[vec![0, 4], vec![0, 4]], 4)?.is_none(), || "degenerate table has a kappa".into())
}

fn words_oracle(corpus: &[RatedText], keep: impl Fn(&RatedText) -> bool, k: usize) -> Vec<WordCount> {
    let stop = default_stopwords();
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for r in corpus.iter().filter(|r| keep(r)) {
        let lower = r.text.to_lowercase();
        for word in lower.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty()) {
            if !stop.contains(word) && !DEFAULT_DROP_WORDS.contains(&word) {
                *counts.entry(word.to_string()).or_default() += 1;
            }
        }
    }
    let mut ranked: Vec<(String, usize)> = counts.into_iter().collect();
    // highest count first, then alphabetical
    for i in 0..ranked.len() {
        for j in 0..ranked.len() - 1 - i {
            let swap = ranked[j].1 < ranked[j + 1].1 || (ranked[j].1 == ranked[j + 1].1 && ranked[j].0 > ranked[j + 1].0);
            if swap {
                ranked.swap(j, j + 1);
            }
        }
    }
    ranked.into_iter().take(k).map(|(word, count)| WordCount { word, count }).collect()
}

fn word_counts() -> Outcome {
    const VOCAB: &[&str] = &[
        "the", "button", "icon", "label", "Interface", "guideline", "contrast", "spacing", "align", "text", "color",
        "missing", "users", "should", "is", "a", "logo", "menu", "tab", "error", "hierarchy", "font", "padding",
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let corpus: Vec<RatedText> = (0..200)
        .map(|_| {
            let words: Vec<&str> = (0..rng.gen_range(3..20)).map(|_| VOCAB[rng.gen_range(0..VOCAB.len())]).collect();
            RatedText { text: words.join(", "), accuracy: rng.gen_range(1..=3), helpfulness: rng.gen_range(1..=5) }
        })
        .collect();
    let report = word_count_analysis(&corpus, 20, &default_stopwords(), DEFAULT_DROP_WORDS).map_err(|e| e.to_string())?;
    let pairs: [(&str, &Vec<WordCount>, Vec<WordCount>); 4] = [
        ("accurate", &report.accurate, words_oracle(&corpus, |r| r.accuracy == 3, 20)),
        ("inaccurate", &report.inaccurate, words_oracle(&corpus, |r| r.accuracy == 1, 20)),
        ("helpful", &report.helpful, words_oracle(&corpus, |r| matches!(r.helpfulness, 4 | 5), 20)),
        ("unhelpful", &report.unhelpful, words_oracle(&corpus, |r| r.helpfulness == 1, 20)),
    ];
    for (name, got, want) in pairs {
        ensure(got == &want, || format!("{name}: {got:?} vs oracle {want:?}"))?;
    }
    Ok(())
}

fn condenser() -> Outcome {
    for name in SCREENS {
        let doc = screen(name);
        let raw = doc.to_json();
        let c = condense(&doc, CondenseOptions::default());
        let ratio = c.text.len() as f64 / raw.len() as f64;
        ensure(ratio <= 0.6, || format!("{name}: condensed to {ratio:.3} of raw"))?;
        for node in c.root.preorder() {
            ensure(doc.lookup(&node.id).is_some(), || format!("{name}: {} does not resolve", node.id))?;
        }
        ensure(condense(&doc, CondenseOptions::default()).text == c.text, || format!("{name}: not deterministic"))?;
    }
    let alphabet: Vec<char> = "ab Z9{}\":,é漢🙂\n".chars().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..1000 {
        let s: String = (0..rng.gen_range(0..200)).map(|_| alphabet[rng.gen_range(0..alphabet.len())]).collect();
        let chars = s.chars().count();
        let want = chars.div_ceil(4);
        ensure(estimate_tokens(&s).0 == want, || format!("{s:?}: {} tokens, want {want}", estimate_tokens(&s).0))?;
    }
    Ok(())
}

fn cli_goldens() -> Outcome {
    let fixture = |f: &str| cli_tests().join("fixtures").join(f).display().to_string();
    let design = fixture("lyft_event.json");
    let transport = format!("scripted:{}", fixture("lyft_event.scripted.json"));
    for (engine, golden) in [("llm", "lyft_event.llm.json"), ("rules", "lyft_event.rules.json")] {
        let args = [
            "heurex", "evaluate", "--design", &design, "--guidelines", "nielsen,crowdcrit", "--engine", engine,
            "--transport", &transport,
        ];
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = heurex::run(args, &mut out, &mut err);
        ensure(code == 0, || format!("{engine}: exit {code}: {}", String::from_utf8_lossy(&err)))?;
        let want = std::fs::read(cli_tests().join("golden").join(golden)).map_err(|e| e.to_string())?;
        ensure(out == want, || format!("{engine}: report differs from {golden}"))?;
    }
    Ok(())
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("precision, recall and F1 for 63/38/100", metrics),
        ("ground-truth partition 9/29/62", ground_truth),
        ("ablation prompt goldens", prompt_goldens),
        ("session dismissal, eviction and replay", session_suite),
        ("three-part suggestions", three_parts),
        ("layout rules against oracles", rule_oracles),
        ("Fleiss' kappa", kappa),
        ("word counts against brute force", word_counts),
        ("condenser size, ids and tokens", condenser),
        ("offline CLI reports match goldens", cli_goldens),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let ms = start.elapsed().as_millis();
        match outcome {
            Ok(()) => println!("[PASS] criterion {}: {name} ({ms} ms)", i + 1),
            Err(e) => {
                failed += 1;
                println!("[FAIL] criterion {}: {name}: {e}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
