//! Ordered, rooted, labeled trees.
//!
//! Trees are stored flat in preorder together with the size of every
//! subtree. That layout gives cheap node counts, iteration without recursion
//! (parsed trees can be arbitrarily deep) and is what the edit-distance code
//! consumes directly.
//!
//! [`TreeNode`] is the nested value used to *build* trees by hand; it is
//! converted into a [`SyntaxTree`] once and never mutated afterwards.

use std::fmt;

use thiserror::Error;

/// A nested tree value used for construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeNode {
    pub label: String,
    pub children: Vec<TreeNode>,
}

impl TreeNode {
    pub fn leaf(label: impl Into<String>) -> Self {
        TreeNode {
            label: label.into(),
            children: Vec::new(),
        }
    }

    pub fn new(label: impl Into<String>, children: Vec<TreeNode>) -> Self {
        TreeNode {
            label: label.into(),
            children,
        }
    }
}

// The derived drop glue recurses once per level.
impl Drop for TreeNode {
    fn drop(&mut self) {
        let mut pending = std::mem::take(&mut self.children);
        while let Some(mut node) = pending.pop() {
            pending.append(&mut node.children);
        }
    }
}

/// Errors raised while building a tree.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("node label must not be empty")]
    EmptyLabel,
    #[error("malformed bracket notation at byte {offset}: {reason}")]
    Malformed { offset: usize, reason: &'static str },
}

/// An immutable ordered labeled tree.
///
/// Nodes are identified by their preorder index; the root is index 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxTree {
    labels: Vec<String>,
    sizes: Vec<usize>,
    had_parse_errors: bool,
}

impl SyntaxTree {
    /// Builds a tree from a nested value. Fails on empty labels.
    pub fn from_node(root: &TreeNode) -> Result<Self, TreeError> {
        let mut builder = Builder::default();
        // (node, next child index)
        let mut stack: Vec<(&TreeNode, usize)> = Vec::new();
        builder.open(&root.label)?;
        stack.push((root, 0));
        while let Some((node, next)) = stack.last_mut() {
            if let Some(child) = node.children.get(*next) {
                *next += 1;
                builder.open(&child.label)?;
                stack.push((child, 0));
            } else {
                builder.close();
                stack.pop();
            }
        }
        Ok(builder.finish(false))
    }

    /// A single-node tree.
    pub fn leaf(label: impl Into<String>) -> Result<Self, TreeError> {
        let label = label.into();
        if label.is_empty() {
            return Err(TreeError::EmptyLabel);
        }
        Ok(SyntaxTree {
            labels: vec![label],
            sizes: vec![1],
            had_parse_errors: false,
        })
    }

    /// Total number of nodes.
    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    /// Whether the parser that produced this tree reported syntax errors.
    pub fn had_parse_errors(&self) -> bool {
        self.had_parse_errors
    }

    pub fn root(&self) -> Node<'_> {
        Node {
            tree: self,
            index: 0,
        }
    }

    /// Node by preorder index.
    pub fn node(&self, index: usize) -> Node<'_> {
        assert!(index < self.labels.len(), "node index out of range");
        Node { tree: self, index }
    }

    /// Labels in preorder.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Subtree sizes in preorder.
    pub fn subtree_sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Equality of shape and labels, ignoring the parse-error flag.
    pub fn same_structure(&self, other: &SyntaxTree) -> bool {
        self.labels == other.labels && self.sizes == other.sizes
    }

    /// Maximum depth, counting the root as depth 1.
    pub fn depth(&self) -> usize {
        let mut ends: Vec<usize> = Vec::new();
        let mut deepest = 0;
        for (i, &size) in self.sizes.iter().enumerate() {
            while ends.last().is_some_and(|&end| end <= i) {
                ends.pop();
            }
            ends.push(i + size);
            deepest = deepest.max(ends.len());
        }
        deepest
    }

    /// Converts back to the nested representation.
    pub fn to_node(&self) -> TreeNode {
        let mut stack: Vec<(TreeNode, usize)> = Vec::new();
        let mut finished = None;
        for (i, label) in self.labels.iter().enumerate() {
            while stack.last().is_some_and(|(_, end)| *end <= i) {
                let (done, _) = stack.pop().unwrap();
                stack.last_mut().unwrap().0.children.push(done);
            }
            stack.push((TreeNode::leaf(label.clone()), i + self.sizes[i]));
        }
        while let Some((done, _)) = stack.pop() {
            match stack.last_mut() {
                Some((parent, _)) => parent.children.push(done),
                None => finished = Some(done),
            }
        }
        finished.expect("tree has a root")
    }

    /// Canonical bracket notation, e.g. `{a{b}{c}}`.
    pub fn to_bracket(&self) -> String {
        let mut out = String::with_capacity(self.labels.len() * 8);
        let mut ends: Vec<usize> = Vec::new();
        for (i, label) in self.labels.iter().enumerate() {
            while ends.last().is_some_and(|&end| end <= i) {
                ends.pop();
                out.push('}');
            }
            out.push('{');
            escape_into(label, &mut out);
            ends.push(i + self.sizes[i]);
        }
        for _ in ends {
            out.push('}');
        }
        out
    }

    /// Parses bracket notation. Surrounding whitespace is ignored; whitespace
    /// inside braces is part of the label.
    pub fn from_bracket(text: &str) -> Result<Self, TreeError> {
        let trimmed_start = text.len() - text.trim_start().len();
        let body = text.trim();
        let malformed = |offset: usize, reason| TreeError::Malformed {
            offset: trimmed_start + offset,
            reason,
        };

        let mut builder = Builder::default();
        let mut label = String::new();
        // Byte offset of the '{' that opened the label being read.
        let mut label_open: Option<usize> = None;
        let mut depth = 0usize;
        let mut done = false;
        let mut chars = body.char_indices();

        while let Some((pos, c)) = chars.next() {
            if done {
                return Err(malformed(pos, "trailing input after root"));
            }
            match c {
                '{' => {
                    // The parent's label ends where its first child begins.
                    if let Some(open) = label_open.take() {
                        flush_label(&mut builder, &mut label)
                            .map_err(|_| malformed(open, "empty label"))?;
                    }
                    depth += 1;
                    label_open = Some(pos);
                }
                '}' => {
                    if depth == 0 {
                        return Err(malformed(pos, "unbalanced '}'"));
                    }
                    if let Some(open) = label_open.take() {
                        flush_label(&mut builder, &mut label)
                            .map_err(|_| malformed(open, "empty label"))?;
                    }
                    builder.close();
                    depth -= 1;
                    if depth == 0 {
                        done = true;
                    }
                }
                '\\' => match chars.next() {
                    Some((_, e @ ('{' | '}' | '\\'))) if label_open.is_some() => label.push(e),
                    Some((p, _)) => return Err(malformed(p, "invalid escape")),
                    None => return Err(malformed(pos, "dangling escape")),
                },
                _ => {
                    if label_open.is_none() {
                        return Err(malformed(pos, "text outside a label"));
                    }
                    label.push(c);
                }
            }
        }
        if body.is_empty() {
            return Err(malformed(0, "empty input"));
        }
        if depth != 0 {
            return Err(malformed(body.len(), "unbalanced '{'"));
        }
        Ok(builder.finish(false))
    }
}

fn flush_label(builder: &mut Builder, label: &mut String) -> Result<(), TreeError> {
    let result = builder.open(label);
    label.clear();
    result
}

fn escape_into(label: &str, out: &mut String) {
    for c in label.chars() {
        if matches!(c, '{' | '}' | '\\') {
            out.push('\\');
        }
        out.push(c);
    }
}

impl fmt::Display for SyntaxTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bracket())
    }
}

impl std::str::FromStr for SyntaxTree {
    type Err = TreeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SyntaxTree::from_bracket(s)
    }
}

/// A borrowed view of one node.
#[derive(Debug, Clone, Copy)]
pub struct Node<'a> {
    tree: &'a SyntaxTree,
    index: usize,
}

impl<'a> Node<'a> {
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn label(&self) -> &'a str {
        &self.tree.labels[self.index]
    }

    pub fn subtree_size(&self) -> usize {
        self.tree.sizes[self.index]
    }

    pub fn is_leaf(&self) -> bool {
        self.subtree_size() == 1
    }

    pub fn children(&self) -> Children<'a> {
        Children {
            tree: self.tree,
            next: self.index + 1,
            end: self.index + self.subtree_size(),
        }
    }
}

pub struct Children<'a> {
    tree: &'a SyntaxTree,
    next: usize,
    end: usize,
}

impl<'a> Iterator for Children<'a> {
    type Item = Node<'a>;

    fn next(&mut self) -> Option<Node<'a>> {
        if self.next >= self.end {
            return None;
        }
        let node = Node {
            tree: self.tree,
            index: self.next,
        };
        self.next += self.tree.sizes[self.next];
        Some(node)
    }
}

/// Incremental preorder builder: `open` a node, add its children, `close` it.
#[derive(Debug, Default)]
pub(crate) struct Builder {
    labels: Vec<String>,
    sizes: Vec<usize>,
    open: Vec<usize>,
}

impl Builder {
    pub(crate) fn open(&mut self, label: &str) -> Result<(), TreeError> {
        if label.is_empty() {
            return Err(TreeError::EmptyLabel);
        }
        assert!(
            self.labels.is_empty() || !self.open.is_empty(),
            "tree already has a closed root"
        );
        self.open.push(self.labels.len());
        self.labels.push(label.to_owned());
        self.sizes.push(0);
        Ok(())
    }

    pub(crate) fn close(&mut self) {
        let index = self.open.pop().expect("close without open");
        self.sizes[index] = self.labels.len() - index;
    }

    pub(crate) fn finish(mut self, had_parse_errors: bool) -> SyntaxTree {
        while !self.open.is_empty() {
            self.close();
        }
        assert!(!self.labels.is_empty(), "tree must have a root");
        SyntaxTree {
            labels: self.labels,
            sizes: self.sizes,
            had_parse_errors,
        }
    }
}
