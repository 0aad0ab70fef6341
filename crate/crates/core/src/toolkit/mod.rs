//! The thirteen tools and their data backends.
//!
//! [`DataCatalog`] holds immutable data shared by every trajectory (tables,
//! corpora, graphs, the SQL store). [`ToolEnvironment`] is the per-trajectory
//! state on top of it: the loaded database and its filter stack, loaded
//! graphs, and the variable store for offloaded outputs.

pub mod calculator;
pub mod code;
pub mod graph;
pub mod retrieval;
pub mod sql;
pub mod table;

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Duration;

pub use code::{CodeExecError, CodeRunner, DisabledRunner};
pub use graph::GraphStore;
pub use retrieval::Corpus;
pub use sql::SqlStore;
pub use table::{Condition, Relation, Table, TabularSession};

use crate::context::VariableStore;
use crate::protocol::{Action, ActionKind};

pub const DB_NAMES: [&str; 4] = ["flights", "coffee", "airbnb", "yelp"];
pub const GRAPH_NAMES: [&str; 2] = ["PaperNet", "AuthorNet"];
pub const CORPUS_NAMES: [&str; 2] = ["agenda", "scirex"];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ToolError {
    #[error("no database loaded")]
    NoDatabase,
    #[error("unknown database `{0}` (expected one of flights/coffee/airbnb/yelp)")]
    UnknownDatabase(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("unknown relation `{0}` (use =, >, <, >=, <=, contains)")]
    UnknownRelation(String),
    #[error("cannot parse condition `{0}`")]
    BadCondition(String),
    #[error("unknown graph `{0}` (expected PaperNet or AuthorNet)")]
    UnknownGraph(String),
    #[error("graph {0} is not loaded")]
    GraphNotLoaded(String),
    #[error("node {0} not found")]
    NodeNotFound(String),
    #[error("edge between {0} and {1} not found")]
    EdgeNotFound(String, String),
    #[error("corpus {0} is empty")]
    EmptyCorpus(String),
    #[error("corpus {0} is not available")]
    UnknownCorpus(String),
    #[error("cannot calculate: {0}")]
    Calc(String),
    #[error("{0}")]
    Sql(String),
    #[error("unknown variable {0}")]
    UnknownVariable(String),
    #[error("{0}")]
    CodeExec(#[from] CodeExecError),
    #[error("bad arguments: {0}")]
    BadArguments(String),
    #[error("{0}")]
    Io(String),
}

/// Immutable data shared across trajectories. Files are loaded lazily from
/// `root` on first use; in-memory entries take precedence.
#[derive(Default)]
pub struct DataCatalog {
    root: Option<PathBuf>,
    tables: Mutex<HashMap<String, Arc<Table>>>,
    corpora: Mutex<HashMap<String, Arc<Corpus>>>,
    graphs: Mutex<HashMap<String, Arc<GraphStore>>>,
    sql: OnceLock<Result<Arc<SqlStore>, ToolError>>,
}

impl std::fmt::Debug for DataCatalog {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DataCatalog").field("root", &self.root).finish_non_exhaustive()
    }
}

fn lock<T>(m: &Mutex<T>) -> std::sync::MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|p| p.into_inner())
}

impl DataCatalog {
    /// Catalog reading `{db}.csv`, `{corpus}.jsonl` or `{corpus}/`, and
    /// `{Graph}.json` from `root`.
    pub fn from_dir(root: impl Into<PathBuf>) -> Self {
        DataCatalog { root: Some(root.into()), ..Default::default() }
    }

    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn root(&self) -> Option<&Path> {
        self.root.as_deref()
    }

    pub fn with_table(self, table: Table) -> Self {
        lock(&self.tables).insert(table.name.clone(), Arc::new(table));
        self
    }

    pub fn with_corpus(self, corpus: Corpus) -> Self {
        lock(&self.corpora).insert(corpus.name.clone(), Arc::new(corpus));
        self
    }

    pub fn with_graph(self, graph: GraphStore) -> Self {
        lock(&self.graphs).insert(graph.name.clone(), Arc::new(graph));
        self
    }

    pub fn table(&self, name: &str) -> Result<Arc<Table>, ToolError> {
        if let Some(t) = lock(&self.tables).get(name) {
            return Ok(Arc::clone(t));
        }
        let path = match &self.root {
            Some(root) if DB_NAMES.contains(&name) => root.join(format!("{name}.csv")),
            _ => return Err(ToolError::UnknownDatabase(name.to_string())),
        };
        let table = Arc::new(Table::from_csv_path(name, &path)?);
        lock(&self.tables).insert(name.to_string(), Arc::clone(&table));
        Ok(table)
    }

    pub fn corpus(&self, name: &str) -> Result<Arc<Corpus>, ToolError> {
        if let Some(c) = lock(&self.corpora).get(name) {
            return Ok(Arc::clone(c));
        }
        let root = self.root.as_ref().ok_or_else(|| ToolError::UnknownCorpus(name.to_string()))?;
        let jsonl = root.join(format!("{name}.jsonl"));
        let dir = root.join(name);
        let path = if jsonl.is_file() {
            jsonl
        } else if dir.is_dir() {
            dir
        } else {
            return Err(ToolError::UnknownCorpus(name.to_string()));
        };
        let corpus = Arc::new(Corpus::load(name, &path)?);
        lock(&self.corpora).insert(name.to_string(), Arc::clone(&corpus));
        Ok(corpus)
    }

    pub fn graph(&self, name: &str) -> Result<Arc<GraphStore>, ToolError> {
        if let Some(g) = lock(&self.graphs).get(name) {
            return Ok(Arc::clone(g));
        }
        let path = match &self.root {
            Some(root) if GRAPH_NAMES.contains(&name) => root.join(format!("{name}.json")),
            _ => return Err(ToolError::UnknownGraph(name.to_string())),
        };
        let graph = Arc::new(GraphStore::load(name, &path)?);
        lock(&self.graphs).insert(name.to_string(), Arc::clone(&graph));
        Ok(graph)
    }

    /// SQL store over every domain table that is available, built once.
    pub fn sql(&self) -> Result<Arc<SqlStore>, ToolError> {
        self.sql
            .get_or_init(|| {
                let mut names: Vec<String> = lock(&self.tables).keys().cloned().collect();
                if let Some(root) = &self.root {
                    for db in DB_NAMES {
                        if root.join(format!("{db}.csv")).is_file() && !names.iter().any(|n| n == db) {
                            names.push(db.to_string());
                        }
                    }
                }
                names.sort();
                let tables = names.iter().map(|n| self.table(n)).collect::<Result<Vec<_>, _>>()?;
                SqlStore::from_tables(&tables).map(Arc::new)
            })
            .clone()
    }
}

/// Result of dispatching one action.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ToolOutcome {
    Text(String),
    Finish(String),
}

/// Per-trajectory tool state.
pub struct ToolEnvironment {
    catalog: Arc<DataCatalog>,
    session: Option<TabularSession>,
    graphs: BTreeMap<String, Arc<GraphStore>>,
    pub variables: VariableStore,
    code: Arc<dyn CodeRunner>,
    pub code_timeout: Duration,
}

impl std::fmt::Debug for ToolEnvironment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ToolEnvironment")
            .field("session", &self.session.as_ref().map(|s| &s.db_name))
            .field("graphs", &self.graphs.keys().collect::<Vec<_>>())
            .field("variables", &self.variables.names())
            .finish()
    }
}

impl ToolEnvironment {
    pub fn new(catalog: Arc<DataCatalog>, code: Arc<dyn CodeRunner>) -> Self {
        ToolEnvironment {
            catalog,
            session: None,
            graphs: BTreeMap::new(),
            variables: VariableStore::new(),
            code,
            code_timeout: code::DEFAULT_TIMEOUT,
        }
    }

    /// Environment with the code interpreter disabled.
    pub fn without_code(catalog: Arc<DataCatalog>) -> Self {
        Self::new(catalog, Arc::new(DisabledRunner))
    }

    pub fn catalog(&self) -> &Arc<DataCatalog> {
        &self.catalog
    }

    pub fn session(&self) -> Option<&TabularSession> {
        self.session.as_ref()
    }

    /// Drops the loaded database, graphs and variables.
    pub fn reset(&mut self) {
        self.session = None;
        self.graphs.clear();
        self.variables.clear();
    }

    /// Runs one action. Tool failures come back as `Error: …` text.
    pub fn dispatch(&mut self, action: &Action) -> ToolOutcome {
        if action.kind == ActionKind::Finish {
            return ToolOutcome::Finish(action.payload.trim().to_string());
        }
        match self.run_tool(action) {
            Ok(text) => ToolOutcome::Text(text),
            Err(e) => ToolOutcome::Text(format!("Error: {e}")),
        }
    }

    fn run_tool(&mut self, action: &Action) -> Result<String, ToolError> {
        let arg = action.payload.trim();
        match action.kind {
            ActionKind::Calculate => calculator::calculate(arg),
            ActionKind::RetrieveAgenda => self.catalog.corpus("agenda")?.retrieve(arg),
            ActionKind::RetrieveScirex => self.catalog.corpus("scirex")?.retrieve(arg),
            ActionKind::LoadDB => self.load_db(arg),
            ActionKind::FilterDB => self.session.as_mut().ok_or(ToolError::NoDatabase)?.filter(arg),
            ActionKind::GetValue => self.session.as_ref().ok_or(ToolError::NoDatabase)?.get_value(arg),
            ActionKind::LoadGraph => self.load_graph(arg),
            ActionKind::NeighbourCheck => {
                let (g, node) = self.graph_and_rest(arg)?;
                g.neighbour_check(node)
            }
            ActionKind::NodeCheck => {
                let (g, node) = self.graph_and_rest(arg)?;
                g.node_check(node)
            }
            ActionKind::EdgeCheck => {
                let (g, rest) = self.graph_and_rest(arg)?;
                let (a, b) = split_node_pair(&g, rest)?;
                g.edge_check(a, b)
            }
            ActionKind::SQLInterpreter => self.catalog.sql()?.query(arg),
            ActionKind::PythonInterpreter => self.run_code(&action.payload, &action.variables),
            ActionKind::Finish => unreachable!("handled by dispatch"),
        }
    }

    fn load_db(&mut self, name: &str) -> Result<String, ToolError> {
        let name = name.trim_matches(|c| c == '\'' || c == '"');
        let table = self.catalog.table(name)?;
        let session = TabularSession::new(table);
        let summary = session.summary();
        self.session = Some(session);
        Ok(summary)
    }

    fn load_graph(&mut self, name: &str) -> Result<String, ToolError> {
        let graph = self.catalog.graph(name)?;
        let summary = graph.summary();
        self.graphs.insert(name.to_string(), graph);
        Ok(summary)
    }

    fn graph_and_rest<'a>(&self, arg: &'a str) -> Result<(Arc<GraphStore>, &'a str), ToolError> {
        let (name, rest) = arg
            .split_once(',')
            .ok_or_else(|| ToolError::BadArguments(format!("expected `GraphName, Node`, got `{arg}`")))?;
        let name = name.trim();
        let graph = self
            .graphs
            .get(name)
            .cloned()
            .ok_or_else(|| ToolError::GraphNotLoaded(name.to_string()))?;
        Ok((graph, rest.trim()))
    }

    fn run_code(&mut self, code: &str, names: &[String]) -> Result<String, ToolError> {
        let mut bindings = BTreeMap::new();
        for name in names {
            let value = self
                .variables
                .get(name)
                .ok_or_else(|| ToolError::UnknownVariable(name.clone()))?;
            bindings.insert(name.clone(), value.to_string());
        }
        let resp = self.code.execute(code, &bindings, self.code_timeout)?;
        Ok(code::render_response(&resp))
    }
}

/// Splits `Node1, Node2`, preferring a split where both sides are nodes.
fn split_node_pair<'a>(graph: &GraphStore, rest: &'a str) -> Result<(&'a str, &'a str), ToolError> {
    let splits: Vec<(&str, &str)> = rest
        .match_indices(',')
        .map(|(i, _)| (rest[..i].trim(), rest[i + 1..].trim()))
        .collect();
    splits
        .iter()
        .find(|(a, b)| graph.has_node(a) && graph.has_node(b))
        .or_else(|| splits.first())
        .copied()
        .ok_or_else(|| ToolError::BadArguments(format!("expected `GraphName, Node1, Node2`, got `{rest}`")))
}
