//! Context saving for oversized tool outputs.
//!
//! Tool output longer than a threshold `T` (counted in whitespace-delimited
//! tokens) is not shown to the agent in full. The agent gets the first `T`
//! tokens as a preview and the full text goes into a fresh variable
//! (`value0`, `value1`, …) that the code interpreter can read by name.

use std::collections::BTreeMap;

/// Whitespace tokenization used for every threshold decision.
pub fn tokenize_for_threshold(text: &str) -> Vec<&str> {
    text.split_whitespace().collect()
}

pub fn count_tokens(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Per-trajectory store of offloaded outputs. Entries are never modified.
#[derive(Debug, Clone, Default)]
pub struct VariableStore {
    entries: BTreeMap<String, String>,
    order: Vec<String>,
}

impl VariableStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Stores `text` under the next `value{k}` name and returns that name.
    pub fn insert(&mut self, text: String) -> String {
        let name = format!("value{}", self.order.len());
        self.entries.insert(name.clone(), text);
        self.order.push(name.clone());
        name
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.entries.get(name).map(String::as_str)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    /// Names in creation order.
    pub fn names(&self) -> &[String] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn clear(&mut self) {
        self.entries.clear();
        self.order.clear();
    }
}

/// What the agent sees of one tool output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Observation {
    pub preview: String,
    pub variable: Option<String>,
    pub truncated: bool,
    pub full_token_count: usize,
}

impl Observation {
    /// Text placed after `Observation:` in the agent scratchpad.
    pub fn render(&self) -> String {
        match &self.variable {
            Some(var) => format!(
                "{} ...\n[Output truncated: {} tokens in total. The full output is stored in the variable {}. \
                 Use PythonInterpreter({})[...] to analyse it.]",
                self.preview, self.full_token_count, var, var
            ),
            None => self.preview.clone(),
        }
    }
}

/// Gates one tool output through the threshold.
///
/// # Panics
///
/// Panics if `threshold` is zero.
pub fn ingest_tool_output(text: &str, threshold: usize, store: &mut VariableStore) -> Observation {
    assert!(threshold >= 1, "context threshold must be at least 1");
    let tokens = tokenize_for_threshold(text);
    if tokens.len() <= threshold {
        return Observation {
            preview: text.to_string(),
            variable: None,
            truncated: false,
            full_token_count: tokens.len(),
        };
    }
    let preview = tokens[..threshold].join(" ");
    let full_token_count = tokens.len();
    let variable = store.insert(text.to_string());
    Observation { preview, variable: Some(variable), truncated: true, full_token_count }
}

/// Notice returned to the planner when an executor's answer lives in a variable.
///
/// Untruncated observations are returned as their preview.
pub fn compose_executor_notice(observation: &Observation, subquery: &str) -> String {
    let Some(var) = &observation.variable else {
        return observation.preview.clone();
    };
    format!(
        "The result of \"{subquery}\" is too large to return in full ({} tokens). \
         Preview: {} ... \
         The complete output is stored in the variable {var}. \
         Analysing it in full requires asking for a Python program that reads the variable {var}.",
        observation.full_token_count, observation.preview
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(n: usize) -> String {
        (0..n).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ")
    }

    #[test]
    fn tokenization() {
        assert_eq!(tokenize_for_threshold("a b  c"), vec!["a", "b", "c"]);
        assert!(tokenize_for_threshold("").is_empty());
        assert_eq!(tokenize_for_threshold(" \n\t ").len(), 0);
    }

    #[test]
    fn below_threshold_passes_through() {
        let mut store = VariableStore::new();
        let text = words(50);
        let obs = ingest_tool_output(&text, 100, &mut store);
        assert!(!obs.truncated);
        assert_eq!(obs.preview, text);
        assert!(store.is_empty());
        assert_eq!(obs.render(), text);
    }

    #[test]
    fn exactly_threshold_is_not_truncated() {
        let mut store = VariableStore::new();
        let obs = ingest_tool_output(&words(100), 100, &mut store);
        assert!(!obs.truncated);
    }

    #[test]
    fn oversized_output_is_offloaded() {
        let mut store = VariableStore::new();
        let text = words(250).replace(' ', "  ");
        let obs = ingest_tool_output(&text, 100, &mut store);
        assert!(obs.truncated);
        assert_eq!(obs.variable.as_deref(), Some("value0"));
        assert_eq!(count_tokens(&obs.preview), 100);
        assert_eq!(obs.full_token_count, 250);
        assert_eq!(store.get("value0"), Some(text.as_str()));

        let second = ingest_tool_output(&words(300), 100, &mut store);
        assert_eq!(second.variable.as_deref(), Some("value1"));
        assert_eq!(store.names(), ["value0", "value1"]);
    }

    #[test]
    fn notice_names_variable() {
        let mut store = VariableStore::new();
        let obs = ingest_tool_output(&words(150), 100, &mut store);
        let notice = compose_executor_notice(&obs, "Return the DepTime column");
        assert!(notice.contains("value0"));
        assert!(notice.contains("Python program"));
        assert_eq!(notice, compose_executor_notice(&obs, "Return the DepTime column"));
    }
}
