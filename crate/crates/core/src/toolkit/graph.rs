use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde_json::Value;

use super::ToolError;

type Attrs = BTreeMap<String, Value>;

/// Node/edge attribute graph loaded from the JSON graph format:
/// `{"nodes": [{"id": …, attrs…}], "edges": [{"src": …, "dst": …, attrs…}], "directed": bool}`.
#[derive(Debug, Clone, Default)]
pub struct GraphStore {
    pub name: String,
    pub directed: bool,
    nodes: BTreeMap<String, Attrs>,
    edges: BTreeMap<(String, String), Attrs>,
    adjacency: BTreeMap<String, BTreeSet<String>>,
}

#[derive(serde::Deserialize)]
struct GraphFile {
    #[serde(default)]
    nodes: Vec<BTreeMap<String, Value>>,
    #[serde(default)]
    edges: Vec<BTreeMap<String, Value>>,
    #[serde(default)]
    directed: bool,
}

fn id_of(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn render_attrs(attrs: &Attrs) -> String {
    if attrs.is_empty() {
        return "(no attributes)".to_string();
    }
    attrs
        .iter()
        .map(|(k, v)| match v {
            Value::String(s) => format!("{k}: {s}"),
            other => format!("{k}: {other}"),
        })
        .collect::<Vec<_>>()
        .join("\n")
}

impl GraphStore {
    pub fn from_json(name: &str, json: &str) -> Result<GraphStore, ToolError> {
        let file: GraphFile =
            serde_json::from_str(json).map_err(|e| ToolError::Io(format!("graph {name}: {e}")))?;
        let mut g = GraphStore { name: name.to_string(), directed: file.directed, ..Default::default() };
        for mut node in file.nodes {
            let id = node
                .remove("id")
                .map(|v| id_of(&v))
                .ok_or_else(|| ToolError::Io(format!("graph {name}: node without id")))?;
            g.adjacency.entry(id.clone()).or_default();
            g.nodes.insert(id, node);
        }
        for mut edge in file.edges {
            let (Some(src), Some(dst)) = (edge.remove("src"), edge.remove("dst")) else {
                return Err(ToolError::Io(format!("graph {name}: edge without src/dst")));
            };
            let (src, dst) = (id_of(&src), id_of(&dst));
            for end in [&src, &dst] {
                if !g.nodes.contains_key(end) {
                    return Err(ToolError::Io(format!("graph {name}: edge endpoint {end} is not a node")));
                }
            }
            g.adjacency.entry(src.clone()).or_default().insert(dst.clone());
            if !g.directed {
                g.adjacency.entry(dst.clone()).or_default().insert(src.clone());
            }
            g.edges.insert((src, dst), edge);
        }
        Ok(g)
    }

    pub fn load(name: &str, path: &Path) -> Result<GraphStore, ToolError> {
        let json = std::fs::read_to_string(path)
            .map_err(|e| ToolError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(name, &json)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_node(&self, id: &str) -> bool {
        self.nodes.contains_key(id)
    }

    pub fn summary(&self) -> String {
        format!("{} loaded: {} nodes, {} edges", self.name, self.node_count(), self.edge_count())
    }

    /// Sorted neighbour ids (successors for directed graphs).
    pub fn neighbours(&self, node: &str) -> Result<Vec<&str>, ToolError> {
        self.adjacency
            .get(node)
            .map(|set| set.iter().map(String::as_str).collect())
            .ok_or_else(|| ToolError::NodeNotFound(node.to_string()))
    }

    pub fn neighbour_check(&self, node: &str) -> Result<String, ToolError> {
        Ok(self.neighbours(node)?.join(", "))
    }

    pub fn node_check(&self, node: &str) -> Result<String, ToolError> {
        self.nodes
            .get(node)
            .map(render_attrs)
            .ok_or_else(|| ToolError::NodeNotFound(node.to_string()))
    }

    fn edge(&self, a: &str, b: &str) -> Option<&Attrs> {
        let key = (a.to_string(), b.to_string());
        self.edges.get(&key).or_else(|| {
            if self.directed {
                None
            } else {
                self.edges.get(&(b.to_string(), a.to_string()))
            }
        })
    }

    pub fn edge_check(&self, a: &str, b: &str) -> Result<String, ToolError> {
        for n in [a, b] {
            if !self.has_node(n) {
                return Err(ToolError::NodeNotFound(n.to_string()));
            }
        }
        self.edge(a, b)
            .map(render_attrs)
            .ok_or_else(|| ToolError::EdgeNotFound(a.to_string(), b.to_string()))
    }
}
