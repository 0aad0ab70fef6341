use crate::toolkit::table::parse_number;

const QUOTES: [(char, char); 5] = [('"', '"'), ('\'', '\''), ('`', '`'), ('“', '”'), ('‘', '’')];
const TERMINAL_PUNCT: [char; 6] = ['.', '!', '?', ',', ';', ':'];
const CURRENCY: [char; 4] = ['$', '€', '£', '¥'];

/// Relative tolerance for numeric answers.
pub const NUMERIC_RTOL: f64 = 1e-6;

fn strip_quotes_and_punct(mut s: &str) -> &str {
    loop {
        let before = s.len();
        s = s.trim_end_matches(TERMINAL_PUNCT).trim();
        for (open, close) in QUOTES {
            if s.len() >= open.len_utf8() + close.len_utf8() && s.starts_with(open) && s.ends_with(close) {
                s = s[open.len_utf8()..s.len() - close.len_utf8()].trim();
                break;
            }
        }
        if s.len() == before {
            return s;
        }
    }
}

/// `-?d{1,3}(,ddd)+(.d+)?` with the commas removed, or `None`.
fn strip_thousands(s: &str) -> Option<String> {
    let unsigned = s.strip_prefix(['-', '+']).unwrap_or(s);
    let (int, frac) = match unsigned.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (unsigned, None),
    };
    let mut groups = int.split(',');
    let head = groups.next()?;
    if head.is_empty() || head.len() > 3 || !head.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let mut any = false;
    for g in groups {
        if g.len() != 3 || !g.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        any = true;
    }
    if !any || frac.is_some_and(|f| f.is_empty() || !f.chars().all(|c| c.is_ascii_digit())) {
        return None;
    }
    Some(s.replace(',', ""))
}

/// The numeric value of an answer, after currency and thousands separators
/// are removed.
pub fn parse_numeric(text: &str) -> Option<f64> {
    let t = text.trim();
    let t = t.strip_prefix(CURRENCY).unwrap_or(t).trim_start();
    let t = t.strip_suffix(CURRENCY).unwrap_or(t).trim_end();
    if let Some(v) = parse_number(t) {
        return Some(v);
    }
    strip_thousands(t).and_then(|s| parse_number(&s))
}

fn canonical_number(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    format!("{v}")
}

/// Canonical form used for exact-match scoring.
///
/// ```
/// use rpreact::eval::normalize_answer;
/// assert_eq!(normalize_answer(" Yes."), "yes");
/// assert_eq!(normalize_answer("2.50"), "2.5");
/// assert_eq!(normalize_answer("$ 1,425"), "1425");
/// assert_eq!(normalize_answer("14:25"), "14:25");
/// ```
pub fn normalize_answer(text: &str) -> String {
    let folded = text.to_lowercase();
    let collapsed = folded.split_whitespace().collect::<Vec<_>>().join(" ");
    let core = strip_quotes_and_punct(&collapsed);
    match parse_numeric(core) {
        Some(v) => canonical_number(v),
        None => core.to_string(),
    }
}

/// Exact match after normalisation; numbers match within [`NUMERIC_RTOL`].
/// An empty prediction is never correct.
pub fn is_correct(predicted: &str, gold: &str) -> bool {
    let p = normalize_answer(predicted);
    let g = normalize_answer(gold);
    if p.is_empty() {
        return false;
    }
    if p == g {
        return true;
    }
    match (parse_number(&p), parse_number(&g)) {
        (Some(a), Some(b)) => (a - b).abs() <= NUMERIC_RTOL * a.abs().max(b.abs()),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_cases() {
        assert_eq!(normalize_answer("  \"Hello   World\". "), "hello world");
        assert_eq!(normalize_answer("'yes'"), "yes");
        assert_eq!(normalize_answer("-0.0"), "0");
        assert_eq!(normalize_answer("1e3"), "1000");
        assert_eq!(normalize_answer("1,5"), "1,5");
        assert_eq!(normalize_answer("inf"), "inf");
    }

    #[test]
    fn correctness() {
        assert!(is_correct("1425", "1425"));
        assert!(!is_correct("14:25", "1425"));
        assert!(is_correct("1.6666667", "1.666667"));
        assert!(!is_correct("1.67", "1.666667"));
        assert!(is_correct("0", "0.0"));
        assert!(!is_correct("", ""));
    }
}
