use std::fmt;

use super::ProtocolError;

/// The thirteen tools an executor can call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum ActionKind {
    Calculate,
    RetrieveAgenda,
    RetrieveScirex,
    LoadDB,
    FilterDB,
    GetValue,
    LoadGraph,
    NeighbourCheck,
    NodeCheck,
    EdgeCheck,
    SQLInterpreter,
    PythonInterpreter,
    Finish,
}

impl ActionKind {
    pub const ALL: [ActionKind; 13] = [
        ActionKind::Calculate,
        ActionKind::RetrieveAgenda,
        ActionKind::RetrieveScirex,
        ActionKind::LoadDB,
        ActionKind::FilterDB,
        ActionKind::GetValue,
        ActionKind::LoadGraph,
        ActionKind::NeighbourCheck,
        ActionKind::NodeCheck,
        ActionKind::EdgeCheck,
        ActionKind::SQLInterpreter,
        ActionKind::PythonInterpreter,
        ActionKind::Finish,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ActionKind::Calculate => "Calculate",
            ActionKind::RetrieveAgenda => "RetrieveAgenda",
            ActionKind::RetrieveScirex => "RetrieveScirex",
            ActionKind::LoadDB => "LoadDB",
            ActionKind::FilterDB => "FilterDB",
            ActionKind::GetValue => "GetValue",
            ActionKind::LoadGraph => "LoadGraph",
            ActionKind::NeighbourCheck => "NeighbourCheck",
            ActionKind::NodeCheck => "NodeCheck",
            ActionKind::EdgeCheck => "EdgeCheck",
            ActionKind::SQLInterpreter => "SQLInterpreter",
            ActionKind::PythonInterpreter => "PythonInterpreter",
            ActionKind::Finish => "Finish",
        }
    }

    /// Case-sensitive lookup by the name printed in the prompts.
    pub fn from_name(name: &str) -> Option<ActionKind> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A parsed tool invocation. `payload` is the raw text between the outer
/// brackets; `variables` is only ever non-empty for `PythonInterpreter`.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Action {
    pub kind: ActionKind,
    pub payload: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub variables: Vec<String>,
}

impl Action {
    pub fn new(kind: ActionKind, payload: impl Into<String>) -> Self {
        Action { kind, payload: payload.into(), variables: Vec::new() }
    }

    pub fn python(variables: Vec<String>, code: impl Into<String>) -> Self {
        Action { kind: ActionKind::PythonInterpreter, payload: code.into(), variables }
    }

    pub fn is_finish(&self) -> bool {
        self.kind == ActionKind::Finish
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind.name())?;
        if !self.variables.is_empty() {
            write!(f, "({})", self.variables.join(", "))?;
        }
        write!(f, "[{}]", self.payload)
    }
}

/// Parses `Name[payload]` or `PythonInterpreter(v1, v2)[payload]` and
/// returns the text left after the closing bracket.
pub fn parse_action_prefix(text: &str) -> Result<(Action, &str), ProtocolError> {
    let text = text.trim_start();
    let name_end = text
        .find(|c: char| !c.is_ascii_alphanumeric() && c != '_')
        .unwrap_or(text.len());
    let name = &text[..name_end];
    let kind = ActionKind::from_name(name).ok_or_else(|| {
        let shown = if name.is_empty() { text.chars().take(32).collect() } else { name.to_string() };
        ProtocolError::UnknownAction(shown)
    })?;

    let mut rest = text[name_end..].trim_start_matches([' ', '\t']);
    let mut variables = Vec::new();
    if kind == ActionKind::PythonInterpreter && rest.starts_with('(') {
        let close = rest
            .find(')')
            .ok_or_else(|| ProtocolError::UnbalancedBrackets(text.to_string()))?;
        variables = rest[1..close]
            .split(',')
            .map(str::trim)
            .filter(|v| !v.is_empty())
            .map(str::to_string)
            .collect();
        rest = rest[close + 1..].trim_start_matches([' ', '\t']);
    }

    let Some(body) = rest.strip_prefix('[') else {
        return Err(ProtocolError::MalformedOutput(format!("expected `[` after {name}")));
    };
    let mut depth = 1usize;
    for (i, c) in body.char_indices() {
        match c {
            '[' => depth += 1,
            ']' => {
                depth -= 1;
                if depth == 0 {
                    let action = Action { kind, payload: body[..i].to_string(), variables };
                    return Ok((action, &body[i + 1..]));
                }
            }
            _ => {}
        }
    }
    Err(ProtocolError::UnbalancedBrackets(text.to_string()))
}

/// Parses one action; anything after the matching closing bracket is ignored.
pub fn parse_action(text: &str) -> Result<Action, ProtocolError> {
    parse_action_prefix(text).map(|(action, _)| action)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeaTurn {
    pub thought: String,
    pub action: Action,
}

/// Finds `word`, optionally followed by a step number, then `:`.
fn find_header(text: &str, word: &str, from: usize) -> Option<(usize, usize)> {
    for (at, _) in text[from..].match_indices(word) {
        let start = from + at;
        if text[..start].chars().next_back().is_some_and(|c| c.is_alphanumeric()) {
            continue;
        }
        let tail = &text[start + word.len()..];
        let after_num = tail
            .trim_start_matches([' ', '\t'])
            .trim_start_matches(|c: char| c.is_ascii_digit())
            .trim_start_matches([' ', '\t']);
        if let Some(after) = after_num.strip_prefix(':') {
            return Some((start, text.len() - after.len()));
        }
    }
    None
}

/// Parses a `Thought: … Action: Name[…]` executor turn.
///
/// Step numbers (`Thought 2:` / `Action 2:`) are accepted. A missing
/// `Thought` header is tolerated; a missing `Action` header is not.
pub fn parse_pea_output(text: &str) -> Result<PeaTurn, ProtocolError> {
    let thought_header = find_header(text, "Thought", 0);
    let search_from = thought_header.map_or(0, |(_, end)| end);
    let (action_start, action_end) = find_header(text, "Action", search_from)
        .ok_or_else(|| ProtocolError::MalformedOutput("no Action found".into()))?;
    let thought_start = thought_header.map_or(0, |(_, end)| end);
    let thought = text[thought_start..action_start].trim().to_string();
    let action = parse_action(&text[action_end..])?;
    Ok(PeaTurn { thought, action })
}
