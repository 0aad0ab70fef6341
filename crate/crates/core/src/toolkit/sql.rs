//! Read-only SQL over the domain tables, backed by an in-memory SQLite database.

use std::sync::{Arc, Mutex};

use rusqlite::types::{Value, ValueRef};
use rusqlite::Connection;

use super::table::{parse_number, Table};
use super::ToolError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColumnType {
    Integer,
    Real,
    Text,
}

impl ColumnType {
    fn sql(self) -> &'static str {
        match self {
            ColumnType::Integer => "INTEGER",
            ColumnType::Real => "REAL",
            ColumnType::Text => "TEXT",
        }
    }
}

fn infer_column(table: &Table, idx: usize) -> ColumnType {
    let mut ty = ColumnType::Integer;
    for row in &table.rows {
        let cell = row[idx].trim();
        if cell.is_empty() {
            continue;
        }
        if ty == ColumnType::Integer && cell.parse::<i64>().is_err() {
            ty = ColumnType::Real;
        }
        if ty == ColumnType::Real && parse_number(cell).is_none() {
            return ColumnType::Text;
        }
    }
    ty
}

fn quote_ident(name: &str) -> String {
    format!("\"{}\"", name.replace('"', "\"\""))
}

fn sql_err(e: rusqlite::Error) -> ToolError {
    ToolError::Sql(e.to_string())
}

/// Integral reals keep one decimal so they read back as reals (`1425.0`).
pub fn format_real(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{v:.1}")
    } else {
        format!("{v}")
    }
}

/// Shared read-only store. Queries are serialized through one connection.
pub struct SqlStore {
    conn: Mutex<Connection>,
}

impl std::fmt::Debug for SqlStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SqlStore").finish_non_exhaustive()
    }
}

impl SqlStore {
    pub fn from_tables(tables: &[Arc<Table>]) -> Result<SqlStore, ToolError> {
        let mut conn = Connection::open_in_memory().map_err(sql_err)?;
        for table in tables {
            let types: Vec<ColumnType> =
                (0..table.columns.len()).map(|i| infer_column(table, i)).collect();
            let cols: Vec<String> = table
                .columns
                .iter()
                .zip(&types)
                .map(|(c, t)| format!("{} {}", quote_ident(c), t.sql()))
                .collect();
            let tx = conn.transaction().map_err(sql_err)?;
            tx.execute(
                &format!("CREATE TABLE {} ({})", quote_ident(&table.name), cols.join(", ")),
                [],
            )
            .map_err(sql_err)?;
            {
                let placeholders = vec!["?"; table.columns.len()].join(", ");
                let mut stmt = tx
                    .prepare(&format!(
                        "INSERT INTO {} VALUES ({placeholders})",
                        quote_ident(&table.name)
                    ))
                    .map_err(sql_err)?;
                for row in &table.rows {
                    let values: Vec<Value> = row
                        .iter()
                        .zip(&types)
                        .map(|(cell, ty)| {
                            let cell = cell.trim();
                            if cell.is_empty() {
                                return Value::Null;
                            }
                            match ty {
                                ColumnType::Integer => Value::Integer(cell.parse().unwrap_or_default()),
                                ColumnType::Real => Value::Real(parse_number(cell).unwrap_or_default()),
                                ColumnType::Text => Value::Text(cell.to_string()),
                            }
                        })
                        .collect();
                    stmt.execute(rusqlite::params_from_iter(values)).map_err(sql_err)?;
                }
            }
            tx.commit().map_err(sql_err)?;
        }
        conn.execute_batch("PRAGMA query_only = ON;").map_err(sql_err)?;
        Ok(SqlStore { conn: Mutex::new(conn) })
    }

    /// Runs one query and serializes the result as header plus comma-joined rows.
    pub fn query(&self, sql: &str) -> Result<String, ToolError> {
        let conn = self.conn.lock().unwrap_or_else(|p| p.into_inner());
        let mut stmt = conn.prepare(sql.trim().trim_end_matches(';')).map_err(sql_err)?;
        let names: Vec<String> = stmt.column_names().into_iter().map(str::to_string).collect();
        let width = names.len();
        let mut out = names.join(",");
        let mut rows = stmt.query([]).map_err(sql_err)?;
        while let Some(row) = rows.next().map_err(sql_err)? {
            out.push('\n');
            for i in 0..width {
                if i > 0 {
                    out.push(',');
                }
                match row.get_ref(i).map_err(sql_err)? {
                    ValueRef::Null => {}
                    ValueRef::Integer(v) => out.push_str(&v.to_string()),
                    ValueRef::Real(v) => out.push_str(&format_real(v)),
                    ValueRef::Text(t) => out.push_str(&String::from_utf8_lossy(t)),
                    ValueRef::Blob(b) => out.push_str(&format!("<{} bytes>", b.len())),
                }
            }
        }
        Ok(out)
    }
}
