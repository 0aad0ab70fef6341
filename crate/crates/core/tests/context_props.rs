//! Context-threshold gate: previews, pass-through and variable naming.

mod common;

use proptest::prelude::*;
use rpreact::context::{compose_executor_notice, ingest_tool_output, VariableStore};

const T: usize = 100;

/// Whitespace tokenizer written independently of the library one.
fn oracle_tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in text.chars() {
        if c.is_whitespace() {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
        } else {
            cur.push(c);
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn sized_text() -> impl Strategy<Value = String> {
    // Half the cases straddle the threshold, the rest range up to 10,000 tokens.
    (prop_oneof![(1usize..=2 * T), (1usize..=10_000)], any::<u64>())
        .prop_map(|(n, seed)| common::generated_text(n, seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn gate_properties(text in sized_text()) {
        let mut store = VariableStore::new();
        let n = oracle_tokens(&text).len();
        let obs = ingest_tool_output(&text, T, &mut store);
        let preview_tokens = oracle_tokens(&obs.preview);
        prop_assert!(preview_tokens.len() <= T);
        prop_assert_eq!(obs.full_token_count, n);
        if n <= T {
            prop_assert!(!obs.truncated);
            prop_assert_eq!(obs.variable, None);
            prop_assert_eq!(&obs.preview, &text);
            prop_assert!(store.is_empty());
        } else {
            prop_assert!(obs.truncated);
            prop_assert_eq!(preview_tokens, oracle_tokens(&text)[..T].to_vec());
            let var = obs.variable.clone().unwrap();
            prop_assert_eq!(&var, "value0");
            prop_assert_eq!(store.get(&var), Some(text.as_str()));
            let notice = compose_executor_notice(&obs, "q");
            prop_assert!(notice.contains(&var));
        }
    }

    #[test]
    fn names_are_dense_per_trajectory(sizes in prop::collection::vec(1usize..300, 1..20)) {
        let mut store = VariableStore::new();
        let mut originals = Vec::new();
        for (i, n) in sizes.iter().enumerate() {
            let text = (0..*n).map(|k| format!("t{i}_{k}")).collect::<Vec<_>>().join(" ");
            let obs = ingest_tool_output(&text, T, &mut store);
            if let Some(v) = obs.variable {
                originals.push((v, text));
            }
        }
        for (k, (name, text)) in originals.iter().enumerate() {
            prop_assert_eq!(name, &format!("value{k}"));
            prop_assert_eq!(store.get(name), Some(text.as_str()));
        }
        prop_assert_eq!(store.len(), originals.len());
    }
}

#[test]
fn boundary_at_threshold() {
    let mut store = VariableStore::new();
    let exactly = vec!["w"; T].join(" ");
    let obs = ingest_tool_output(&exactly, T, &mut store);
    assert!(!obs.truncated);
    let over = vec!["w"; T + 1].join(" ");
    let obs = ingest_tool_output(&over, T, &mut store);
    assert_eq!(obs.variable.as_deref(), Some("value0"));
    let obs = ingest_tool_output(&over, T, &mut store);
    assert_eq!(obs.variable.as_deref(), Some("value1"));
    assert_eq!(store.get("value1"), Some(over.as_str()));
}

#[test]
fn unicode_round_trip_is_byte_identical() {
    let mut store = VariableStore::new();
    let text = "naïve  café\t☕\u{00a0}x ".repeat(60);
    let obs = ingest_tool_output(&text, T, &mut store);
    assert_eq!(store.get(obs.variable.as_deref().unwrap()).unwrap().as_bytes(), text.as_bytes());
}
