//! FilterDB/GetValue against SQLite over the same fixture tables.

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rpreact::protocol::parse_action;
use rpreact::toolkit::{ToolEnvironment, ToolOutcome};

pub const TABLES: [&str; 4] = ["flights", "coffee", "airbnb", "yelp"];

pub fn run(env: &mut ToolEnvironment, action: &str) -> String {
    match env.dispatch(&parse_action(action).unwrap()) {
        ToolOutcome::Text(o) => o,
        ToolOutcome::Finish(f) => panic!("unexpected finish {f}"),
    }
}

/// Numbers compare by value (`0915.0` and `915` are the same cell), text as is.
pub fn canonical(cell: &str) -> String {
    let t = cell.trim();
    match t.parse::<f64>() {
        Ok(v) if t.chars().any(|c| c.is_ascii_digit()) => format!("{v}"),
        _ => t.to_string(),
    }
}

pub fn multiset<'a>(cells: impl IntoIterator<Item = &'a str>) -> Vec<String> {
    let mut v: Vec<String> = cells.into_iter().map(canonical).collect();
    v.sort();
    v
}

fn is_numeric(cell: &str) -> bool {
    let t = cell.trim();
    !t.is_empty() && t.parse::<f64>().is_ok() && t.chars().any(|c| c.is_ascii_digit())
}

struct Column {
    name: String,
    numeric: bool,
    cells: Vec<String>,
}

fn columns(table: &str) -> Vec<Column> {
    let t = super::catalog().table(table).unwrap();
    (0..t.columns.len())
        .map(|i| {
            let cells: Vec<String> = t.rows.iter().map(|r| r[i].clone()).collect();
            let numeric = cells.iter().filter(|c| !c.trim().is_empty()).all(|c| is_numeric(c));
            Column { name: t.columns[i].clone(), numeric, cells }
        })
        .collect()
}

/// A clause in FilterDB syntax and the equivalent SQL predicate.
fn random_clause(rng: &mut ChaCha8Rng, cols: &[Column]) -> (String, String) {
    loop {
        let col = cols.choose(rng).unwrap();
        let present: Vec<&String> = col.cells.iter().filter(|c| !c.trim().is_empty() && !c.contains(',')).collect();
        if present.is_empty() {
            continue;
        }
        let ident = format!("\"{}\"", col.name);
        if col.numeric {
            let value = if rng.gen_bool(0.6) {
                present.choose(rng).unwrap().trim().to_string()
            } else {
                let nums: Vec<f64> = present.iter().map(|c| c.trim().parse().unwrap()).collect();
                let lo = nums.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = nums.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                format!("{:.2}", rng.gen_range(lo - 1.0..=hi + 1.0))
            };
            let op = *["=", ">", "<", ">=", "<="].choose(rng).unwrap();
            return (format!("{}{op}{value}", col.name), format!("{ident} {op} {value}"));
        }
        let texts: Vec<&&String> = present.iter().filter(|c| !is_numeric(c)).collect();
        if texts.is_empty() {
            continue;
        }
        let cell = texts.choose(rng).unwrap().trim().to_string();
        if rng.gen_bool(0.3) {
            let chars: Vec<char> = cell.chars().collect();
            let start = rng.gen_range(0..chars.len());
            let len = rng.gen_range(1..=(chars.len() - start).min(4));
            let sub: String = chars[start..start + len].iter().collect();
            if sub.trim() != sub || sub.contains('\'') {
                continue;
            }
            return (format!("{} contains {sub}", col.name), format!("instr({ident}, '{sub}') > 0"));
        }
        let op = *["=", ">", "<", ">=", "<="].choose(rng).unwrap();
        let quoted = cell.replace('\'', "''");
        return (format!("{}{op}{cell}", col.name), format!("{ident} {op} '{quoted}'"));
    }
}

fn sql_values(table: &str, column: &str, predicates: &[String]) -> Vec<String> {
    let sql = super::catalog().sql().unwrap();
    let where_ = if predicates.is_empty() { "1".to_string() } else { predicates.join(" AND ") };
    let out = sql.query(&format!("SELECT \"{column}\" FROM \"{table}\" WHERE {where_}")).unwrap();
    // Header, then one line per row; a NULL row is an empty line.
    match out.split_once('\n') {
        Some((_, rows)) => multiset(rows.split('\n')),
        None => Vec::new(),
    }
}

#[derive(Debug)]
pub struct OracleStats {
    pub conditions: usize,
    pub applications: usize,
    pub nonempty: usize,
    pub elapsed: Duration,
}

/// Random conjunctions applied one FilterDB call at a time. After every
/// call the view must not grow and a random column's values must equal the
/// SQL result as a multiset.
pub fn check_filter_equivalence(seed: u64, cases: usize) -> Result<OracleStats, String> {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = OracleStats { conditions: 0, applications: 0, nonempty: 0, elapsed: Duration::ZERO };
    for case in 0..cases {
        let table = TABLES[case % TABLES.len()];
        let cols = columns(table);
        let mut env = super::env();
        run(&mut env, &format!("LoadDB[{table}]"));
        let mut predicates = Vec::new();
        let mut previous: Vec<usize> = env.session().unwrap().active_rows().to_vec();
        for _ in 0..rng.gen_range(1..=3) {
            let n = rng.gen_range(1..=3);
            let clauses: Vec<(String, String)> = (0..n).map(|_| random_clause(&mut rng, &cols)).collect();
            stats.conditions += n;
            stats.applications += 1;
            let text = clauses.iter().map(|(f, _)| f.as_str()).collect::<Vec<_>>().join(", ");
            let obs = run(&mut env, &format!("FilterDB[{text}]"));
            if !obs.starts_with(&format!("Filtered {table}:")) {
                return Err(format!("FilterDB[{text}] failed: {obs}"));
            }
            predicates.extend(clauses.into_iter().map(|(_, s)| s));

            let now = env.session().unwrap().active_rows().to_vec();
            if !now.iter().all(|r| previous.contains(r)) {
                return Err(format!("view grew after FilterDB[{text}]"));
            }
            previous = now;

            let col = cols.choose(&mut rng).unwrap();
            let session = env.session().unwrap();
            let got = multiset(session.values(&col.name).unwrap());
            let expected = sql_values(table, &col.name, &predicates);
            if got != expected {
                return Err(format!("case {case} on {table}, {predicates:?} -> {}: {got:?} vs SQL {expected:?}", col.name));
            }
            if !got.is_empty() {
                stats.nonempty += 1;
                let joined = session.values(&col.name).unwrap().join(", ");
                let via_tool = run(&mut env, &format!("GetValue[{}]", col.name));
                if via_tool != joined {
                    return Err(format!("GetValue[{}] returned {via_tool:?}, view holds {joined:?}", col.name));
                }
            }
        }
    }
    stats.elapsed = started.elapsed();
    Ok(stats)
}
