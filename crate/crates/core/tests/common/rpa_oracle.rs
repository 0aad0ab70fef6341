//! Generated actions and an independent model of planner directive selection.

use proptest::prelude::*;
use rpreact::protocol::{
    parse_rpa_output, Action, ActionKind, Directive, BEGIN_FINISH, BEGIN_SEARCH_QUERY, END_FINISH, END_SEARCH_QUERY,
};

pub fn payload() -> impl Strategy<Value = String> {
    let atom = prop_oneof![
        "[a-zA-Z0-9_=<>.'\"+*/-]{1,6}",
        Just(",".to_string()),
        Just(", ".to_string()),
        Just("\n".to_string()),
        Just(" ".to_string()),
        Just("é☕".to_string()),
    ];
    let flat = prop::collection::vec(atom, 0..8).prop_map(|v| v.concat());
    flat.prop_recursive(3, 24, 4, |inner| {
        prop::collection::vec(
            prop_oneof![inner.clone(), inner.prop_map(|s| format!("[{s}]"))],
            0..4,
        )
        .prop_map(|v| v.concat())
    })
}

pub fn action() -> impl Strategy<Value = Action> {
    let kind = prop::sample::select(ActionKind::ALL.to_vec());
    let vars = prop::collection::vec("value[0-9]{1,2}|[a-z][a-z0-9_]{0,6}", 0..3);
    (kind, payload(), vars).prop_map(|(kind, payload, vars)| {
        if kind == ActionKind::PythonInterpreter {
            Action::python(vars, payload)
        } else {
            Action::new(kind, payload)
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tok {
    Q,
    Qe,
    F,
    Fe,
}

/// Positions of every tag occurrence, by scanning byte offsets.
fn tags(text: &str) -> Vec<(usize, Tok)> {
    let mut out = Vec::new();
    for (tag, tok) in [
        (BEGIN_SEARCH_QUERY, Tok::Q),
        (END_SEARCH_QUERY, Tok::Qe),
        (BEGIN_FINISH, Tok::F),
        (END_FINISH, Tok::Fe),
    ] {
        for (i, _) in text.match_indices(tag) {
            out.push((i, tok));
        }
    }
    out.sort_by_key(|(i, _)| *i);
    out
}

fn tag_len(t: Tok) -> usize {
    match t {
        Tok::Q => BEGIN_SEARCH_QUERY.len(),
        Tok::Qe => END_SEARCH_QUERY.len(),
        Tok::F => BEGIN_FINISH.len(),
        Tok::Fe => END_FINISH.len(),
    }
}

/// Innermost pairs: an opener followed by a closer of the same kind with no
/// same-kind tag in between. Returns (start, content) in document order.
fn innermost_pairs(text: &str, open: Tok, close: Tok) -> Vec<(usize, String)> {
    let same: Vec<(usize, Tok)> = tags(text).into_iter().filter(|(_, t)| *t == open || *t == close).collect();
    same.windows(2)
        .filter(|w| w[0].1 == open && w[1].1 == close)
        .map(|w| {
            let content = &text[w[0].0 + tag_len(open)..w[1].0];
            (w[0].0, content.trim().to_string())
        })
        .collect()
}

pub fn oracle(text: &str) -> Option<(Directive, String)> {
    let q = innermost_pairs(text, Tok::Q, Tok::Qe).into_iter().find(|(_, c)| !c.is_empty());
    let f = innermost_pairs(text, Tok::F, Tok::Fe).into_iter().next();
    match (q, f) {
        (Some(q), Some(f)) if f.0 < q.0 => Some((Directive::Finish, f.1)),
        (Some(q), _) => Some((Directive::Query, q.1)),
        (None, Some(f)) => Some((Directive::Finish, f.1)),
        (None, None) => None,
    }
}

pub fn actual(text: &str) -> Option<(Directive, String)> {
    parse_rpa_output(text).ok().map(|t| {
        let (d, s) = t.effective();
        (d, s.to_string())
    })
}

pub fn expand(short: &str) -> String {
    short
        .replace("«Q»", BEGIN_SEARCH_QUERY)
        .replace("«q»", END_SEARCH_QUERY)
        .replace("«F»", BEGIN_FINISH)
        .replace("«f»", END_FINISH)
}

use Directive::{Finish as F, Query as Q};

/// Hand-built planner outputs and the directive each must select.
pub const FIXTURES: [(&str, Option<(Directive, &str)>); 50] = [
    ("«Q»load db«q»", Some((Q, "load db"))),
    ("«F»42«f»", Some((F, "42"))),
    ("<think>plan</think>«Q»x«q»", Some((Q, "x"))),
    ("«Q»x«q»«F»y«f»", Some((Q, "x"))),
    ("«F»y«f»«Q»x«q»", Some((F, "y"))),
    ("«Q»  padded  «q»", Some((Q, "padded"))),
    ("«Q»«q»«F»done«f»", Some((F, "done"))),
    ("«Q»   «q»«Q»real«q»", Some((Q, "real"))),
    ("«Q»outer «Q»inner«q»", Some((Q, "inner"))),
    ("«Q»a«q» trailing «Q»b«q»", Some((Q, "a"))),
    ("no tags at all", None),
    ("«Q»unclosed", None),
    ("«F»unclosed", None),
    ("«q»«Q»", None),
    ("«f»«F»x", None),
    ("«q»«Q»x«q»", Some((Q, "x"))),
    ("«F»«f»", Some((F, ""))),
    ("«F» a «F» b «f»", Some((F, "b"))),
    ("text «F»1,425«f» more", Some((F, "1,425"))),
    ("«Q»multi\nline\nquery«q»", Some((Q, "multi\nline\nquery"))),
    ("«F»«Q»x«q»«f»", Some((F, "<|begin_search_query|>x<|end_search_query|>"))),
    ("«Q»«F»x«f»«q»", Some((Q, "<Finish>x</Finish>"))),
    ("<think>«Q» thinking about tags</think> «Q»x«q»", Some((Q, "x"))),
    ("«Q»a«q»«Q»b«q»«Q»c«q»", Some((Q, "a"))),
    ("«F»first«f»«F»second«f»", Some((F, "first"))),
    ("«Q» «q» only", None),
    ("«Q»\n«q»«F»\n«f»", Some((F, ""))),
    ("<|begin_search_result|>r<|end_search_result|>«Q»x«q»", Some((Q, "x"))),
    ("«Q»What is 2+2?«q»", Some((Q, "What is 2+2?"))),
    ("«F»[SUCCESS]«f»", Some((F, "[SUCCESS]"))),
    ("«F» yes. «f»", Some((F, "yes."))),
    ("<think></think>«F»14:25«f»", Some((F, "14:25"))),
    ("«Q»a«q»«q»", Some((Q, "a"))),
    ("«Q»«Q»«q»", None),
    ("«Q»x«Q»«q»«q»", None),
    ("«F»a«f»«F»", Some((F, "a"))),
    ("«F»x «Q»y«q»", Some((Q, "y"))),
    ("«Q»x «F»y«f»", Some((F, "y"))),
    ("«Q»café ☕ prix«q»", Some((Q, "café ☕ prix"))),
    ("«Q»Filter DepTime>1200, Origin=SEA«q»", Some((Q, "Filter DepTime>1200, Origin=SEA"))),
    ("<finish>x</finish>", None),
    ("«F»  «f»", Some((F, ""))),
    ("«Q»a«q»«F»«f»", Some((Q, "a"))),
    ("<think>«F» is how I end</think>«F»real«f»", Some((F, "real"))),
    ("«Q»a«f»", None),
    ("«F»a«q»", None),
    ("«Q»x«q»\n<|begin_search_result|>y<|end_search_result|>", Some((Q, "x"))),
    ("«Q»1«q»«Q»«q»", Some((Q, "1"))),
    ("«F»a\nb«f»", Some((F, "a\nb"))),
    ("   ", None),
];

