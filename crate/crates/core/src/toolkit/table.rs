use std::cmp::Ordering;
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::sync::Arc;

use super::ToolError;

/// A CSV table held in memory. Cells are kept as the original text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: Vec<String>, rows: Vec<Vec<String>>) -> Self {
        Table { name: name.into(), columns, rows }
    }

    pub fn from_csv_path(name: &str, path: &Path) -> Result<Table, ToolError> {
        let file = std::fs::File::open(path)
            .map_err(|e| ToolError::Io(format!("{}: {e}", path.display())))?;
        Self::from_csv_reader(name, file)
    }

    pub fn from_csv_reader(name: &str, reader: impl Read) -> Result<Table, ToolError> {
        let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
        let columns: Vec<String> = rdr
            .headers()
            .map_err(|e| ToolError::Io(e.to_string()))?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        let mut rows = Vec::new();
        for record in rdr.records() {
            let record = record.map_err(|e| ToolError::Io(e.to_string()))?;
            let mut row: Vec<String> = record.iter().map(str::to_string).collect();
            row.resize(columns.len(), String::new());
            rows.push(row);
        }
        Ok(Table { name: name.to_string(), columns, rows })
    }

    pub fn column_index(&self, column: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == column)
    }

    /// Header line followed by one comma-joined line per selected row.
    pub fn serialize(&self, row_ids: &[usize]) -> String {
        let mut out = self.columns.join(",");
        for &id in row_ids {
            out.push('\n');
            out.push_str(&self.rows[id].join(","));
        }
        out
    }
}

/// Parses a plain decimal number. Rejects `inf`, `nan` and other words that
/// `f64::from_str` would accept.
pub fn parse_number(text: &str) -> Option<f64> {
    let t = text.trim();
    if t.is_empty()
        || !t.chars().all(|c| c.is_ascii_digit() || matches!(c, '+' | '-' | '.' | 'e' | 'E'))
        || !t.chars().any(|c| c.is_ascii_digit())
    {
        return None;
    }
    t.parse::<f64>().ok().filter(|v| v.is_finite())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Eq,
    Gt,
    Lt,
    Ge,
    Le,
    Contains,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Eq => "=",
            Relation::Gt => ">",
            Relation::Lt => "<",
            Relation::Ge => ">=",
            Relation::Le => "<=",
            Relation::Contains => "contains",
        }
    }
}

/// One `column relation value` clause.
#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub column: String,
    pub relation: Relation,
    pub value: String,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.relation {
            Relation::Contains => write!(f, "{} contains {}", self.column, self.value),
            r => write!(f, "{}{}{}", self.column, r.symbol(), self.value),
        }
    }
}

fn strip_quotes(s: &str) -> &str {
    for q in ['\'', '"'] {
        if s.len() >= 2 && s.starts_with(q) && s.ends_with(q) {
            return &s[1..s.len() - 1];
        }
    }
    s
}

impl Condition {
    pub fn parse(text: &str) -> Result<Condition, ToolError> {
        let text = text.trim();
        if let Some(at) = text.find(" contains ") {
            let column = text[..at].trim();
            let value = strip_quotes(text[at + " contains ".len()..].trim());
            if column.is_empty() {
                return Err(ToolError::BadCondition(text.to_string()));
            }
            return Ok(Condition {
                column: column.to_string(),
                relation: Relation::Contains,
                value: value.to_string(),
            });
        }
        let at = text
            .find(['=', '<', '>', '!'])
            .ok_or_else(|| ToolError::BadCondition(text.to_string()))?;
        let tail = &text[at..];
        let (relation, len) = if tail.starts_with(">=") {
            (Relation::Ge, 2)
        } else if tail.starts_with("<=") {
            (Relation::Le, 2)
        } else if tail.starts_with("==") {
            (Relation::Eq, 2)
        } else if tail.starts_with('=') {
            (Relation::Eq, 1)
        } else if tail.starts_with('>') {
            (Relation::Gt, 1)
        } else if tail.starts_with('<') {
            (Relation::Lt, 1)
        } else {
            let op: String = tail.chars().take_while(|c| "!=<>".contains(*c)).collect();
            return Err(ToolError::UnknownRelation(op));
        };
        let column = text[..at].trim();
        if column.is_empty() {
            return Err(ToolError::BadCondition(text.to_string()));
        }
        let value = strip_quotes(text[at + len..].trim());
        Ok(Condition { column: column.to_string(), relation, value: value.to_string() })
    }

    /// Comma-separated conjunction.
    pub fn parse_all(text: &str) -> Result<Vec<Condition>, ToolError> {
        let conds = text
            .split(',')
            .filter(|part| !part.trim().is_empty())
            .map(Condition::parse)
            .collect::<Result<Vec<_>, _>>()?;
        if conds.is_empty() {
            return Err(ToolError::BadCondition(text.trim().to_string()));
        }
        Ok(conds)
    }

    /// Numeric comparison when both sides are numbers, byte-wise string
    /// comparison otherwise. `contains` is a plain substring test. Empty
    /// cells are missing values and match nothing.
    pub fn matches(&self, cell: &str) -> bool {
        if cell.trim().is_empty() {
            return false;
        }
        if self.relation == Relation::Contains {
            return cell.contains(self.value.as_str());
        }
        let ord = match (parse_number(cell), parse_number(&self.value)) {
            (Some(a), Some(b)) => a.partial_cmp(&b).unwrap_or(Ordering::Equal),
            _ => cell.cmp(self.value.as_str()),
        };
        match self.relation {
            Relation::Eq => ord == Ordering::Equal,
            Relation::Gt => ord == Ordering::Greater,
            Relation::Lt => ord == Ordering::Less,
            Relation::Ge => ord != Ordering::Less,
            Relation::Le => ord != Ordering::Greater,
            Relation::Contains => unreachable!(),
        }
    }
}

/// A loaded database plus the current filtered view.
#[derive(Debug, Clone)]
pub struct TabularSession {
    pub db_name: String,
    table: Arc<Table>,
    active: Vec<usize>,
    filters: Vec<Condition>,
}

impl TabularSession {
    pub fn new(table: Arc<Table>) -> Self {
        let active = (0..table.rows.len()).collect();
        TabularSession { db_name: table.name.clone(), table, active, filters: Vec::new() }
    }

    pub fn table(&self) -> &Table {
        &self.table
    }

    pub fn active_rows(&self) -> &[usize] {
        &self.active
    }

    pub fn filters(&self) -> &[Condition] {
        &self.filters
    }

    pub fn summary(&self) -> String {
        format!(
            "{} loaded: {} columns, {} rows\nColumns: {}",
            self.db_name,
            self.table.columns.len(),
            self.table.rows.len(),
            self.table.columns.join(", ")
        )
    }

    /// Applies every clause of `condition_text`. The view only shrinks.
    pub fn filter(&mut self, condition_text: &str) -> Result<String, ToolError> {
        let conds = Condition::parse_all(condition_text)?;
        let mut bound = Vec::with_capacity(conds.len());
        for c in &conds {
            let idx = self
                .table
                .column_index(&c.column)
                .ok_or_else(|| ToolError::UnknownColumn(c.column.clone()))?;
            bound.push((idx, c));
        }
        let table = &self.table;
        self.active
            .retain(|&row| bound.iter().all(|(idx, c)| c.matches(&table.rows[row][*idx])));
        self.filters.extend(conds);
        if self.active.is_empty() {
            return Ok(format!("Filtered {}: 0 rows", self.db_name));
        }
        Ok(format!(
            "Filtered {}: {} rows\n{}",
            self.db_name,
            self.active.len(),
            self.table.serialize(&self.active)
        ))
    }

    /// Values of `column` in the active view.
    pub fn values(&self, column: &str) -> Result<Vec<&str>, ToolError> {
        let idx = self
            .table
            .column_index(column.trim())
            .ok_or_else(|| ToolError::UnknownColumn(column.trim().to_string()))?;
        Ok(self.active.iter().map(|&r| self.table.rows[r][idx].as_str()).collect())
    }

    pub fn get_value(&self, column: &str) -> Result<String, ToolError> {
        let values = self.values(column)?;
        if values.is_empty() {
            return Ok(format!("No values: {} has 0 rows in the current view", self.db_name));
        }
        Ok(values.join(", "))
    }
}
