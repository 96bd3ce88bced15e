//! Hierarchical content tree over typed slices.
//!
//! Slices arrive in document order carrying integer levels. A monotonic
//! stack links them into a forest in one pass: while processing a node,
//! every stack entry with level >= the new node's level is popped; the
//! remaining top (if any) becomes the parent, otherwise the node is a root.
//! The stack therefore always holds the open ancestor chain, and its levels
//! are strictly increasing bottom to top.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{ContentSlice, SliceType};

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContentTreeNode {
    pub id: NodeId,
    pub title: String,
    pub level: u32,
    pub node_type: SliceType,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub content: String,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    pub depth: usize,
}

/// Document-ordered nodes plus root list; edges live in the
/// `parent`/`children` links.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ContentTree {
    pub nodes: Vec<ContentTreeNode>,
    pub roots: Vec<NodeId>,
}

impl ContentTree {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.iter().map(|n| n.children.len()).sum()
    }

    /// Pre-order traversal of the forest; for a tree built from slices this
    /// visits nodes in document order.
    pub fn preorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack: Vec<NodeId> = self.roots.iter().rev().copied().collect();
        while let Some(id) = stack.pop() {
            out.push(id);
            for &child in self.nodes[id].children.iter().rev() {
                stack.push(child);
            }
        }
        out
    }

    pub fn node(&self, id: NodeId) -> &ContentTreeNode {
        &self.nodes[id]
    }
}

/// Link ordered slices into a forest with a monotonic stack. Node ids are
/// sequential in document order. Empty input gives an empty tree;
/// non-positive levels are rejected.
pub fn build_tree(slices: Vec<ContentSlice>) -> Result<ContentTree> {
    let mut nodes: Vec<ContentTreeNode> = Vec::with_capacity(slices.len());
    for slice in slices {
        if slice.level == 0 {
            return Err(Error::InvalidLevel {
                index: slice.index,
                level: slice.level as i64,
            });
        }
        nodes.push(ContentTreeNode {
            id: nodes.len(),
            title: slice.title,
            level: slice.level,
            node_type: slice.slice_type,
            abstract_text: slice.abstract_text,
            content: slice.body,
            parent: None,
            children: Vec::new(),
            depth: 0,
        });
    }

    let mut roots = Vec::new();
    let mut stack: Vec<NodeId> = Vec::new();
    for id in 0..nodes.len() {
        let level = nodes[id].level;
        while let Some(&top) = stack.last() {
            if nodes[top].level >= level {
                stack.pop();
            } else {
                break;
            }
        }
        match stack.last() {
            Some(&parent) => {
                nodes[id].parent = Some(parent);
                nodes[id].depth = nodes[parent].depth + 1;
                nodes[parent].children.push(id);
            }
            None => {
                roots.push(id);
            }
        }
        stack.push(id);
        debug_assert!(
            stack.windows(2).all(|w| nodes[w[0]].level < nodes[w[1]].level),
            "stack levels must be strictly increasing"
        );
    }

    Ok(ContentTree { nodes, roots })
}

/// Indented heading titles down to `max_depth` levels, document order.
/// `max_depth = 1` prints root headings only.
pub fn outline(tree: &ContentTree, max_depth: usize) -> String {
    let mut lines = Vec::new();
    for id in tree.preorder() {
        let node = &tree.nodes[id];
        if node.node_type == SliceType::Heading && node.depth < max_depth {
            lines.push(format!("{}{}", "  ".repeat(node.depth), node.title));
        }
    }
    lines.join("\n")
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum TreeRecord {
    Header { version: u32, nodes: usize, roots: Vec<NodeId> },
    Node(ContentTreeNode),
    Edge { parent: NodeId, child: NodeId },
}

/// Write the tree as line-delimited records: a header, one node record per
/// node in id order, then one edge record per parent/child link.
pub fn write_tree<W: Write>(tree: &ContentTree, mut w: W) -> Result<()> {
    let header = TreeRecord::Header {
        version: 1,
        nodes: tree.nodes.len(),
        roots: tree.roots.clone(),
    };
    writeln!(w, "{}", serde_json::to_string(&header).expect("header"))?;
    for node in &tree.nodes {
        let mut flat = node.clone();
        // Links are reconstructed from the edge records.
        flat.children = Vec::new();
        flat.parent = None;
        writeln!(w, "{}", serde_json::to_string(&TreeRecord::Node(flat)).expect("node"))?;
    }
    for node in &tree.nodes {
        for &child in &node.children {
            let edge = TreeRecord::Edge { parent: node.id, child };
            writeln!(w, "{}", serde_json::to_string(&edge).expect("edge"))?;
        }
    }
    Ok(())
}

/// Read a tree written by [`write_tree`].
pub fn read_tree<R: BufRead>(r: R) -> Result<ContentTree> {
    let mut nodes: Vec<ContentTreeNode> = Vec::new();
    let mut roots: Vec<NodeId> = Vec::new();
    let mut expected = 0usize;
    let mut saw_header = false;
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: TreeRecord =
            serde_json::from_str(&line).map_err(|e| Error::IndexFile(e.to_string()))?;
        match record {
            TreeRecord::Header { version, nodes: n, roots: r } => {
                if version != 1 {
                    return Err(Error::IndexFile(format!("unsupported version {version}")));
                }
                expected = n;
                roots = r;
                saw_header = true;
            }
            TreeRecord::Node(node) => {
                if node.id != nodes.len() {
                    return Err(Error::IndexFile(format!(
                        "node {} out of order (expected {})",
                        node.id,
                        nodes.len()
                    )));
                }
                nodes.push(node);
            }
            TreeRecord::Edge { parent, child } => {
                if parent >= nodes.len() || child >= nodes.len() {
                    return Err(Error::IndexFile(format!("edge {parent}->{child} out of range")));
                }
                nodes[parent].children.push(child);
                nodes[child].parent = Some(parent);
            }
        }
    }
    if !saw_header {
        return Err(Error::IndexFile("missing header record".to_string()));
    }
    if nodes.len() != expected {
        return Err(Error::IndexFile(format!(
            "header promised {expected} nodes, found {}",
            nodes.len()
        )));
    }
    // Depths are stored on node records; recompute to guard against a
    // hand-edited file.
    let order: Vec<NodeId> = {
        let tree = ContentTree { nodes: nodes.clone(), roots: roots.clone() };
        tree.preorder()
    };
    for id in order {
        if let Some(parent) = nodes[id].parent {
            nodes[id].depth = nodes[parent].depth + 1;
        } else {
            nodes[id].depth = 0;
        }
    }
    Ok(ContentTree { nodes, roots })
}
