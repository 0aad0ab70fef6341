use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{AccuracyCell, EvalError, MetricsRow};

const DIFFICULTY_ORDER: [&str; 2] = ["easy", "hard"];
const APPROACH_ORDER: [&str; 4] = ["React", "React-100", "Reflexion", "RP-ReAct"];
const DOMAIN_ORDER: [&str; 6] = ["yelp", "scirex", "flights", "airbnb", "coffee", "agenda"];

/// Sort key: listed names first in list order, anything else alphabetically after.
fn rank<'a>(order: &[&str], name: &'a str) -> (usize, &'a str) {
    (order.iter().position(|o| *o == name).unwrap_or(order.len()), name)
}

pub(crate) fn difficulty_key(d: &str) -> (usize, &str) {
    rank(&DIFFICULTY_ORDER, d)
}

pub(crate) fn approach_key(a: &str) -> (usize, &str) {
    rank(&APPROACH_ORDER, a)
}

pub(crate) fn domain_key(d: &str) -> (usize, &str) {
    rank(&DOMAIN_ORDER, d)
}

/// Rounds half away from zero to two decimals and prints both of them.
pub fn fmt2(x: f64) -> String {
    let r = (x * 100.0).round() / 100.0;
    let s = format!("{r:.2}");
    if s == "-0.00" { "0.00".into() } else { s }
}

/// Groups cells into one [`MetricsRow`] per (difficulty, approach, domain).
/// With `models` set, only those models contribute.
pub fn aggregate(cells: &[AccuracyCell], models: Option<&[String]>) -> Result<Vec<MetricsRow>, EvalError> {
    let mut groups: BTreeMap<(String, String, String), BTreeMap<String, f64>> = BTreeMap::new();
    for c in cells {
        if models.is_some_and(|m| !m.iter().any(|x| x == &c.model)) {
            continue;
        }
        groups
            .entry((c.difficulty.clone(), c.approach.clone(), c.domain.clone()))
            .or_default()
            .insert(c.model.clone(), c.accuracy);
    }
    let mut rows = groups
        .into_iter()
        .map(|((d, a, dom), accs)| MetricsRow::new(&d, &a, &dom, accs))
        .collect::<Result<Vec<_>, _>>()?;
    rows.sort_by(|x, y| {
        (difficulty_key(&x.difficulty), approach_key(&x.approach), domain_key(&x.domain)).cmp(&(
            difficulty_key(&y.difficulty),
            approach_key(&y.approach),
            domain_key(&y.domain),
        ))
    });
    Ok(rows)
}

/// What [`build_report`] produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub rows: Vec<MetricsRow>,
    pub files: Vec<PathBuf>,
    pub text: String,
}

fn sorted_cells(cells: &[AccuracyCell], models: Option<&[String]>) -> Vec<AccuracyCell> {
    let mut v: Vec<AccuracyCell> = cells
        .iter()
        .filter(|c| models.is_none_or(|m| m.iter().any(|x| x == &c.model)))
        .cloned()
        .collect();
    v.sort_by(|x, y| {
        (difficulty_key(&x.difficulty), approach_key(&x.approach), &x.model, domain_key(&x.domain)).cmp(&(
            difficulty_key(&y.difficulty),
            approach_key(&y.approach),
            &y.model,
            domain_key(&y.domain),
        ))
    });
    v
}

/// Writes `accuracy_{difficulty}.csv`, `aggregate_{difficulty}.csv` and
/// `report.txt` under `out_dir`. `easy` and `hard` files are always written,
/// headers only when there is no data for them.
pub fn build_report(cells: &[AccuracyCell], out_dir: &Path, models: Option<&[String]>) -> Result<Report, EvalError> {
    let cells = sorted_cells(cells, models);
    let rows = aggregate(&cells, None)?;
    let mut difficulties: Vec<&str> = DIFFICULTY_ORDER.to_vec();
    for c in &cells {
        if !difficulties.contains(&c.difficulty.as_str()) {
            difficulties.push(&c.difficulty);
        }
    }
    difficulties.sort_by_key(|d| difficulty_key(d));

    std::fs::create_dir_all(out_dir)?;
    let mut files = Vec::new();
    let mut text = String::new();
    for d in &difficulties {
        let dc: Vec<&AccuracyCell> = cells.iter().filter(|c| c.difficulty == *d).collect();
        let dr: Vec<&MetricsRow> = rows.iter().filter(|r| r.difficulty == *d).collect();

        let path = out_dir.join(format!("accuracy_{d}.csv"));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["approach", "model", "domain", "accuracy"])?;
        for c in &dc {
            w.write_record([c.approach.as_str(), &c.model, &c.domain, &fmt2(c.accuracy)])?;
        }
        w.flush()?;
        files.push(path);

        let path = out_dir.join(format!("aggregate_{d}.csv"));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["approach", "domain", "models", "mean", "std", "max", "saturation", "cps"])?;
        for r in &dr {
            w.write_record([
                r.approach.as_str(),
                &r.domain,
                &r.per_model_accuracy.len().to_string(),
                &fmt2(r.mean),
                &fmt2(r.std),
                &fmt2(r.max),
                &fmt2(r.saturation),
                &fmt2(r.cps),
            ])?;
        }
        w.flush()?;
        files.push(path);

        render_text(&mut text, d, &dc, &dr);
    }
    let path = out_dir.join("report.txt");
    std::fs::write(&path, &text)?;
    files.push(path);
    Ok(Report { rows, files, text })
}

fn render_text(out: &mut String, difficulty: &str, cells: &[&AccuracyCell], rows: &[&MetricsRow]) {
    let mut domains: Vec<&str> = cells.iter().map(|c| c.domain.as_str()).collect::<BTreeSet<_>>().into_iter().collect();
    domains.sort_by_key(|d| domain_key(d));

    let _ = writeln!(out, "== {difficulty} ==");
    let _ = writeln!(out, "Accuracy");
    let mut header = format!("{:<12} {:<16}", "approach", "model");
    for d in &domains {
        let _ = write!(header, " {d:>8}");
    }
    let _ = writeln!(out, "{}", header.trim_end());
    let mut keys: Vec<(&str, &str)> = Vec::new();
    for c in cells {
        if !keys.contains(&(c.approach.as_str(), c.model.as_str())) {
            keys.push((&c.approach, &c.model));
        }
    }
    for (a, m) in keys {
        let mut line = format!("{a:<12} {m:<16}");
        for d in &domains {
            let cell = cells.iter().find(|c| c.approach == a && c.model == m && c.domain == *d);
            let v = cell.map_or("-".to_string(), |c| fmt2(c.accuracy));
            let _ = write!(line, " {v:>8}");
        }
        let _ = writeln!(out, "{line}");
    }

    let _ = writeln!(out, "\nAggregate (mean / std / cps)");
    let mut header = format!("{:<12}", "approach");
    for d in &domains {
        let _ = write!(header, " {d:>16}");
    }
    let _ = writeln!(out, "{}", header.trim_end());
    let mut approaches: Vec<&str> = Vec::new();
    for r in rows {
        if !approaches.contains(&r.approach.as_str()) {
            approaches.push(&r.approach);
        }
    }
    for a in approaches {
        let mut line = format!("{a:<12}");
        for d in &domains {
            let v = rows
                .iter()
                .find(|r| r.approach == a && r.domain == *d)
                .map_or("-".to_string(), |r| format!("{} {} {}", fmt2(r.mean), fmt2(r.std), fmt2(r.cps)));
            let _ = write!(line, " {v:>16}");
        }
        let _ = writeln!(out, "{line}");
    }
    out.push('\n');
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding() {
        assert_eq!(fmt2(0.3619), "0.36");
        assert_eq!(fmt2(0.165), "0.17");
        assert_eq!(fmt2(-0.0001), "0.00");
        assert_eq!(fmt2(1.0), "1.00");
    }

    #[test]
    fn ordering_keys() {
        let mut a = vec!["RP-ReAct", "Zeta", "React", "Reflexion", "React-100"];
        a.sort_by_key(|x| approach_key(x));
        assert_eq!(a, ["React", "React-100", "Reflexion", "RP-ReAct", "Zeta"]);
    }
}
