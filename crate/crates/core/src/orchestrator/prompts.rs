use std::collections::BTreeMap;
use std::io;
use std::path::Path;

/// Domains that have their own ReAct few-shot block.
pub const EXAMPLE_DOMAINS: [&str; 6] = ["flights", "coffee", "airbnb", "yelp", "scirex", "agenda"];

/// All prompt templates and few-shot blocks used by the agents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSet {
    pub rpa: String,
    pub pea: String,
    pub react: String,
    pub reflexion_actor: String,
    pub reflexion_evaluator: String,
    pub reflexion_self_refine: String,
    pub rpa_examples: String,
    pub pea_examples: String,
    pub react_examples: BTreeMap<String, String>,
}

impl Default for PromptSet {
    fn default() -> Self {
        let react_examples = [
            ("flights", include_str!("../../assets/examples/react_flights.txt")),
            ("coffee", include_str!("../../assets/examples/react_coffee.txt")),
            ("airbnb", include_str!("../../assets/examples/react_airbnb.txt")),
            ("yelp", include_str!("../../assets/examples/react_yelp.txt")),
            ("scirex", include_str!("../../assets/examples/react_scirex.txt")),
            ("agenda", include_str!("../../assets/examples/react_agenda.txt")),
        ]
        .into_iter()
        .map(|(d, t)| (d.to_string(), t.to_string()))
        .collect();
        PromptSet {
            rpa: include_str!("../../assets/prompts/rpa.txt").into(),
            pea: include_str!("../../assets/prompts/pea.txt").into(),
            react: include_str!("../../assets/prompts/react.txt").into(),
            reflexion_actor: include_str!("../../assets/prompts/reflexion_actor.txt").into(),
            reflexion_evaluator: include_str!("../../assets/prompts/reflexion_evaluator.txt").into(),
            reflexion_self_refine: include_str!("../../assets/prompts/reflexion_self_refine.txt").into(),
            rpa_examples: include_str!("../../assets/examples/rpa.txt").into(),
            pea_examples: include_str!("../../assets/examples/pea.txt").into(),
            react_examples,
        }
    }
}

impl PromptSet {
    /// Starts from the built-in set and replaces every file present under
    /// `dir/prompts/*.txt` and `dir/examples/*.txt`.
    pub fn from_dir(dir: &Path) -> io::Result<PromptSet> {
        let mut set = PromptSet::default();
        let read = |sub: &str, name: &str| -> io::Result<Option<String>> {
            let p = dir.join(sub).join(format!("{name}.txt"));
            match std::fs::read_to_string(&p) {
                Ok(s) => Ok(Some(s.trim_end_matches('\n').to_string())),
                Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
                Err(e) => Err(e),
            }
        };
        let slots: [(&str, &str, &mut String); 8] = [
            ("prompts", "rpa", &mut set.rpa),
            ("prompts", "pea", &mut set.pea),
            ("prompts", "react", &mut set.react),
            ("prompts", "reflexion_actor", &mut set.reflexion_actor),
            ("prompts", "reflexion_evaluator", &mut set.reflexion_evaluator),
            ("prompts", "reflexion_self_refine", &mut set.reflexion_self_refine),
            ("examples", "rpa", &mut set.rpa_examples),
            ("examples", "pea", &mut set.pea_examples),
        ];
        for (sub, name, slot) in slots {
            if let Some(text) = read(sub, name)? {
                *slot = text;
            }
        }
        for domain in EXAMPLE_DOMAINS {
            if let Some(text) = read("examples", &format!("react_{domain}"))? {
                set.react_examples.insert(domain.to_string(), text);
            }
        }
        Ok(set)
    }

    /// Few-shot block for a ReAct-style agent on `domain`; unknown domains get
    /// every block concatenated.
    pub fn react_examples_for(&self, domain: &str) -> String {
        match self.react_examples.get(&domain.to_ascii_lowercase()) {
            Some(block) => block.clone(),
            None => self.react_examples.values().cloned().collect::<Vec<_>>().join("\n\n"),
        }
    }
}

/// Replaces `{key}` placeholders in one pass. Braces that do not enclose a
/// known key are copied through, so JSON or Python in a template survives.
pub fn render_template(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let key_len = after.find(|c: char| !(c.is_ascii_alphanumeric() || c == '_')).unwrap_or(after.len());
        let key = &after[..key_len];
        let closed = after[key_len..].starts_with('}');
        match vars.iter().find(|(k, _)| *k == key) {
            Some((_, value)) if closed && key_len > 0 => {
                out.push_str(value);
                rest = &after[key_len + 1..];
            }
            _ => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}
