//! Rooted phylogenetic trees read from and written to Newick.
//!
//! Supported grammar (whitespace allowed between tokens):
//!
//! ```text
//! tree     -> subtree [':' length] ';'
//! subtree  -> '(' subtree (',' subtree)* ')' [name] [':' length]
//!           | name [':' length]
//! name     -> [A-Za-z0-9_.-]+
//! ```
//!
//! Quoted labels and bracketed comments are rejected. Missing branch lengths
//! read as 0 and the root's length is ignored.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// One arena node. The branch length belongs to the edge leading to the parent.
#[derive(Debug, Clone)]
pub struct Node {
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub branch_length: f64,
    pub name: Option<String>,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// Arena tree; every parent is stored before its children and node 0 is the root.
#[derive(Debug, Clone)]
pub struct PhyloTree {
    nodes: Vec<Node>,
    leaf_index: HashMap<String, usize>,
}

impl PhyloTree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn node(&self, i: usize) -> &Node {
        &self.nodes[i]
    }

    pub fn leaf(&self, name: &str) -> Option<usize> {
        self.leaf_index.get(name).copied()
    }

    pub fn n_leaves(&self) -> usize {
        self.leaf_index.len()
    }

    /// Leaf names in arena order.
    pub fn leaf_names(&self) -> Vec<&str> {
        self.nodes.iter().filter(|n| n.is_leaf()).filter_map(|n| n.name.as_deref()).collect()
    }

    /// Length of the edge above `i`; the root contributes no edge.
    pub fn edge_length(&self, i: usize) -> f64 {
        if self.nodes[i].parent.is_none() {
            0.0
        } else {
            self.nodes[i].branch_length
        }
    }

    /// Copy with every non-root branch set to length 1.
    pub fn with_unit_branch_lengths(&self) -> Self {
        let mut t = self.clone();
        for n in t.nodes.iter_mut().skip(1) {
            n.branch_length = 1.0;
        }
        t
    }

    /// Structural equality: same shape, child order, names and branch lengths.
    pub fn structurally_equal(&self, other: &PhyloTree) -> bool {
        fn walk(a: &PhyloTree, i: usize, b: &PhyloTree, j: usize) -> bool {
            let (x, y) = (&a.nodes[i], &b.nodes[j]);
            x.name == y.name
                && a.edge_length(i) == b.edge_length(j)
                && x.children.len() == y.children.len()
                && x.children.iter().zip(&y.children).all(|(&ci, &cj)| walk(a, ci, b, cj))
        }
        walk(self, 0, other, 0)
    }

    fn from_nodes(nodes: Vec<Node>) -> Result<Self> {
        let mut leaf_index = HashMap::new();
        for (i, n) in nodes.iter().enumerate() {
            if n.is_leaf() {
                let name = n.name.clone().filter(|s| !s.is_empty()).ok_or_else(|| Error::UnexpectedToken {
                    position: 0,
                    token: format!("unnamed leaf (node {i})"),
                })?;
                if leaf_index.insert(name.clone(), i).is_some() {
                    return Err(Error::DuplicateLeafName(name));
                }
            }
        }
        Ok(Self { nodes, leaf_index })
    }
}

impl PartialEq for PhyloTree {
    fn eq(&self, other: &Self) -> bool {
        self.structurally_equal(other)
    }
}

/// Incremental construction of a [`PhyloTree`] in preorder.
#[derive(Debug)]
pub struct TreeBuilder {
    nodes: Vec<Node>,
}

impl TreeBuilder {
    pub fn new(root_name: Option<&str>) -> Self {
        Self {
            nodes: vec![Node { parent: None, children: Vec::new(), branch_length: 0.0, name: root_name.map(str::to_owned) }],
        }
    }

    pub fn add_child(&mut self, parent: usize, name: Option<&str>, branch_length: f64) -> Result<usize> {
        if parent >= self.nodes.len() {
            return Err(Error::InvalidParameter(format!("no node {parent}")));
        }
        if !(branch_length >= 0.0) || !branch_length.is_finite() {
            return Err(Error::NegativeBranchLength { position: 0, length: branch_length });
        }
        let id = self.nodes.len();
        self.nodes.push(Node { parent: Some(parent), children: Vec::new(), branch_length, name: name.map(str::to_owned) });
        self.nodes[parent].children.push(id);
        Ok(id)
    }

    pub fn build(self) -> Result<PhyloTree> {
        PhyloTree::from_nodes(self.nodes)
    }
}

fn is_name_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || matches!(b, b'_' | b'.' | b'-')
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    nodes: Vec<Node>,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn unexpected(&self) -> Error {
        let token = match self.src.get(self.pos) {
            Some(b'\'') | Some(b'"') => "quoted label (unsupported)".to_owned(),
            Some(b'[') => "bracketed comment (unsupported)".to_owned(),
            Some(&b) => (b as char).to_string(),
            None => "end of input".to_owned(),
        };
        Error::UnexpectedToken { position: self.pos, token }
    }

    fn name(&mut self) -> Option<String> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && is_name_byte(self.src[self.pos]) {
            self.pos += 1;
        }
        (self.pos > start).then(|| String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
    }

    fn length(&mut self) -> Result<f64> {
        if self.peek() != Some(b':') {
            return Ok(0.0);
        }
        self.pos += 1;
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && matches!(self.src[self.pos], b'0'..=b'9' | b'.' | b'e' | b'E' | b'+' | b'-') {
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default();
        let value: f64 = text.parse().map_err(|_| Error::UnexpectedToken {
            position: start,
            token: if text.is_empty() { "missing branch length".to_owned() } else { text.to_owned() },
        })?;
        if !value.is_finite() {
            return Err(Error::UnexpectedToken { position: start, token: text.to_owned() });
        }
        if value < 0.0 {
            return Err(Error::NegativeBranchLength { position: start, length: value });
        }
        Ok(value)
    }

    fn subtree(&mut self, parent: Option<usize>) -> Result<usize> {
        let id = self.nodes.len();
        self.nodes.push(Node { parent, children: Vec::new(), branch_length: 0.0, name: None });
        if let Some(p) = parent {
            self.nodes[p].children.push(id);
        }
        match self.peek() {
            Some(b'(') => {
                let open = self.pos;
                self.pos += 1;
                loop {
                    self.subtree(Some(id))?;
                    match self.peek() {
                        Some(b',') => self.pos += 1,
                        Some(b')') => {
                            self.pos += 1;
                            break;
                        }
                        None => return Err(Error::UnbalancedParenthesis(open)),
                        Some(b';') => return Err(Error::UnbalancedParenthesis(open)),
                        Some(_) => return Err(self.unexpected()),
                    }
                }
                self.nodes[id].name = self.name();
            }
            _ => {
                let start = self.pos;
                match self.name() {
                    Some(n) => self.nodes[id].name = Some(n),
                    None => {
                        self.pos = start;
                        return Err(self.unexpected());
                    }
                }
            }
        }
        self.nodes[id].branch_length = self.length()?;
        Ok(id)
    }
}

/// Parses a single Newick statement terminated by `;`.
pub fn parse_newick(text: &str) -> Result<PhyloTree> {
    let mut p = Parser { src: text.as_bytes(), pos: 0, nodes: Vec::new() };
    p.subtree(None)?;
    p.nodes[0].branch_length = 0.0;
    match p.peek() {
        Some(b';') => p.pos += 1,
        None => return Err(Error::MissingTerminator),
        Some(b')') => return Err(Error::UnbalancedParenthesis(p.pos)),
        Some(_) => return Err(p.unexpected()),
    }
    if p.peek().is_some() {
        return Err(p.unexpected());
    }
    PhyloTree::from_nodes(p.nodes)
}

/// Canonical Newick: children in stored order, every non-root edge written with
/// the shortest decimal that round-trips.
pub fn serialize_newick(tree: &PhyloTree) -> String {
    fn write(t: &PhyloTree, i: usize, out: &mut String) {
        let n = &t.nodes[i];
        if !n.children.is_empty() {
            out.push('(');
            for (k, &c) in n.children.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                write(t, c, out);
            }
            out.push(')');
        }
        if let Some(name) = &n.name {
            out.push_str(name);
        }
        if n.parent.is_some() {
            out.push(':');
            out.push_str(&n.branch_length.to_string());
        }
    }
    let mut out = String::new();
    write(tree, 0, &mut out);
    out.push(';');
    out
}

/// Fraction of the total leaf weight that descends through each edge,
/// indexed by the child node of the edge (the root entry is the full mass, 1).
pub fn branch_descendant_mass(tree: &PhyloTree, leaf_weights: &HashMap<String, f64>) -> Result<Vec<f64>> {
    let mut mass = vec![0.0; tree.nodes.len()];
    let mut total = 0.0;
    for (name, &w) in leaf_weights {
        let leaf = tree.leaf(name).ok_or_else(|| Error::UnknownLeaf(name.clone()))?;
        if !(w >= 0.0) || !w.is_finite() {
            return Err(Error::InvalidParameter(format!("weight of `{name}` is {w}")));
        }
        mass[leaf] += w;
        total += w;
    }
    if total <= 0.0 {
        return Err(Error::ZeroTotalWeight { row: None });
    }
    accumulate(tree, &mut mass);
    for m in &mut mass {
        *m /= total;
    }
    Ok(mass)
}

/// Pushes leaf masses up the tree. Relies on parents preceding children in the arena.
pub(crate) fn accumulate(tree: &PhyloTree, mass: &mut [f64]) {
    for i in (1..tree.nodes.len()).rev() {
        if let Some(p) = tree.nodes[i].parent {
            mass[p] += mass[i];
        }
    }
}
