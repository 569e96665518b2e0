//! Clustering features and the CF-tree.
//!
//! A [`ClusteringFeature`] is the additive triple `(N, LS, SS)` over a point
//! set, with `LS` and `SS` kept per dimension. The [`CFTree`] is an arena of
//! nodes: internal entries summarize a child node, leaf entries summarize a
//! group of points whose radius stays within the threshold `T`. Leaves are
//! threaded on a doubly linked chain.

use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CfError {
    #[error("input contains a non-finite coordinate")]
    NonFiniteInput,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("clustering feature summarizes no points")]
    EmptyCF,
    #[error("cannot split a node with {0} entries")]
    Underfull(usize),
    #[error("invalid tree parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringFeature {
    n: u64,
    ls: Vec<f64>,
    ss: Vec<f64>,
}

/// RMS distance to the centroid, computed from the raw sums.
fn radius_from_sums(n: u64, ls: impl Iterator<Item = f64>, ss: impl Iterator<Item = f64>) -> f64 {
    let nf = n as f64;
    let mean_sq: f64 = ls.map(|v| (v / nf) * (v / nf)).sum();
    let sq_mean: f64 = ss.sum::<f64>() / nf;
    (sq_mean - mean_sq).max(0.0).sqrt()
}

impl ClusteringFeature {
    pub fn zero(dim: usize) -> Self {
        Self {
            n: 0,
            ls: vec![0.0; dim],
            ss: vec![0.0; dim],
        }
    }

    pub fn from_point(x: &[f64]) -> Result<Self, CfError> {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(CfError::NonFiniteInput);
        }
        Ok(Self {
            n: 1,
            ls: x.to_vec(),
            ss: x.iter().map(|v| v * v).collect(),
        })
    }

    /// Builds a CF from raw parts, checking dimensions and the Cauchy–Schwarz
    /// bound.
    pub fn from_parts(n: u64, ls: Vec<f64>, ss: Vec<f64>) -> Result<Self, CfError> {
        if ls.len() != ss.len() {
            return Err(CfError::DimensionMismatch {
                expected: ls.len(),
                found: ss.len(),
            });
        }
        let cf = Self { n, ls, ss };
        cf.check().map_err(CfError::InvalidParams)?;
        Ok(cf)
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn ls(&self) -> &[f64] {
        &self.ls
    }

    pub fn ss(&self) -> &[f64] {
        &self.ss
    }

    pub fn dim(&self) -> usize {
        self.ls.len()
    }

    pub fn ss_total(&self) -> f64 {
        self.ss.iter().sum()
    }

    fn same_dim(&self, other: &Self) -> Result<(), CfError> {
        if self.dim() != other.dim() {
            return Err(CfError::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }

    pub fn merge(&self, other: &Self) -> Result<Self, CfError> {
        self.same_dim(other)?;
        let mut out = self.clone();
        out.absorb(other);
        Ok(out)
    }

    /// In-place merge; dimensions must already agree.
    pub(crate) fn absorb(&mut self, other: &Self) {
        self.n += other.n;
        for (a, b) in self.ls.iter_mut().zip(&other.ls) {
            *a += b;
        }
        for (a, b) in self.ss.iter_mut().zip(&other.ss) {
            *a += b;
        }
    }

    pub(crate) fn absorb_point(&mut self, x: &[f64]) {
        self.n += 1;
        for (a, b) in self.ls.iter_mut().zip(x) {
            *a += b;
        }
        for (a, b) in self.ss.iter_mut().zip(x) {
            *a += b * b;
        }
    }

    pub fn centroid(&self) -> Result<Vec<f64>, CfError> {
        if self.n == 0 {
            return Err(CfError::EmptyCF);
        }
        let nf = self.n as f64;
        Ok(self.ls.iter().map(|v| v / nf).collect())
    }

    pub fn radius(&self) -> Result<f64, CfError> {
        if self.n == 0 {
            return Err(CfError::EmptyCF);
        }
        Ok(radius_from_sums(
            self.n,
            self.ls.iter().copied(),
            self.ss.iter().copied(),
        ))
    }

    /// Radius this CF would have after absorbing `x`; bit-identical to
    /// absorbing and then calling [`radius`](Self::radius).
    pub(crate) fn radius_with_point(&self, x: &[f64]) -> f64 {
        radius_from_sums(
            self.n + 1,
            self.ls.iter().zip(x).map(|(a, b)| a + b),
            self.ss.iter().zip(x).map(|(a, b)| a + b * b),
        )
    }

    pub(crate) fn radius_with(&self, other: &Self) -> f64 {
        radius_from_sums(
            self.n + other.n,
            self.ls.iter().zip(&other.ls).map(|(a, b)| a + b),
            self.ss.iter().zip(&other.ss).map(|(a, b)| a + b),
        )
    }

    /// Euclidean distance between centroids.
    pub fn distance(&self, other: &Self) -> Result<f64, CfError> {
        self.same_dim(other)?;
        if self.n == 0 || other.n == 0 {
            return Err(CfError::EmptyCF);
        }
        Ok(self.sq_distance_unchecked(other).sqrt())
    }

    fn sq_distance_unchecked(&self, other: &Self) -> f64 {
        let (na, nb) = (self.n as f64, other.n as f64);
        self.ls
            .iter()
            .zip(&other.ls)
            .map(|(a, b)| {
                let d = a / na - b / nb;
                d * d
            })
            .sum()
    }

    fn sq_distance_to_point(&self, x: &[f64]) -> f64 {
        let nf = self.n as f64;
        self.ls
            .iter()
            .zip(x)
            .map(|(a, b)| {
                let d = a / nf - b;
                d * d
            })
            .sum()
    }

    /// Checks the structural invariants of the triple.
    pub fn check(&self) -> Result<(), String> {
        if self.ls.len() != self.ss.len() {
            return Err(format!("ls has {} dims, ss has {}", self.ls.len(), self.ss.len()));
        }
        if self.n == 0 && self.ls.iter().chain(&self.ss).any(|&v| v != 0.0) {
            return Err("empty CF with nonzero sums".into());
        }
        let nf = self.n as f64;
        for (i, (&l, &s)) in self.ls.iter().zip(&self.ss).enumerate() {
            let tol = 1e-9 * (1.0 + s.abs() * nf);
            if s * nf < l * l - tol {
                return Err(format!("dimension {i}: ss·n = {} < ls² = {}", s * nf, l * l));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    /// Maximum radius `T` of a leaf entry.
    pub threshold: f64,
    /// Maximum entries `B` of an internal node.
    pub branching: usize,
    /// Maximum entries `L` of a leaf node.
    pub leaf_capacity: usize,
    pub dimension: usize,
}

impl TreeParams {
    pub fn new(dimension: usize) -> Self {
        Self {
            threshold: 0.5,
            branching: 8,
            leaf_capacity: 8,
            dimension,
        }
    }

    pub fn validate(&self) -> Result<(), CfError> {
        if !(self.threshold.is_finite() && self.threshold > 0.0) {
            return Err(CfError::InvalidParams(format!(
                "threshold {} must be positive",
                self.threshold
            )));
        }
        if self.branching < 2 {
            return Err(CfError::InvalidParams(format!(
                "branching {} must be at least 2",
                self.branching
            )));
        }
        if self.leaf_capacity < 1 {
            return Err(CfError::InvalidParams("leaf capacity must be at least 1".into()));
        }
        if self.dimension == 0 {
            return Err(CfError::InvalidParams("dimension must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Internal,
    Leaf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CFEntry {
    pub cf: ClusteringFeature,
    pub child: Option<NodeId>,
    members: Vec<usize>,
}

impl CFEntry {
    pub fn leaf(cf: ClusteringFeature) -> Self {
        Self {
            cf,
            child: None,
            members: Vec::new(),
        }
    }

    /// Row indices absorbed by this leaf entry; empty unless the tree tracks
    /// members.
    pub fn members(&self) -> &[usize] {
        &self.members
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CFNode {
    pub kind: NodeKind,
    pub entries: Vec<CFEntry>,
    pub parent: Option<NodeId>,
    pub prev: Option<NodeId>,
    pub next: Option<NodeId>,
    live: bool,
}

impl CFNode {
    fn new(kind: NodeKind, entries: Vec<CFEntry>, parent: Option<NodeId>) -> Self {
        Self {
            kind,
            entries,
            parent,
            prev: None,
            next: None,
            live: true,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.kind == NodeKind::Leaf
    }

    /// Sum of the node's entry CFs.
    pub fn total(&self, dim: usize) -> ClusteringFeature {
        let mut cf = ClusteringFeature::zero(dim);
        for e in &self.entries {
            cf.absorb(&e.cf);
        }
        cf
    }
}

fn sum_entries(entries: &[CFEntry], dim: usize) -> ClusteringFeature {
    let mut cf = ClusteringFeature::zero(dim);
    for e in entries {
        cf.absorb(&e.cf);
    }
    cf
}

/// Farthest-pair split of an overfull entry list.
///
/// The pair of entries with the largest centroid distance (first such pair in
/// index order) seeds the two halves; every other entry joins the nearer
/// seed, ties going to the first. Relative order is preserved on each side.
pub fn split_entries(entries: Vec<CFEntry>) -> Result<(Vec<CFEntry>, Vec<CFEntry>), CfError> {
    let m = entries.len();
    if m < 2 {
        return Err(CfError::Underfull(m));
    }
    let (mut si, mut sj, mut best) = (0, 1, f64::NEG_INFINITY);
    for i in 0..m {
        for j in i + 1..m {
            let d = entries[i].cf.sq_distance_unchecked(&entries[j].cf);
            if d > best {
                (si, sj, best) = (i, j, d);
            }
        }
    }
    let mut left = Vec::new();
    let mut right = Vec::new();
    let goes_left: Vec<bool> = (0..m)
        .map(|k| {
            if k == si {
                true
            } else if k == sj {
                false
            } else {
                entries[k].cf.sq_distance_unchecked(&entries[si].cf)
                    <= entries[k].cf.sq_distance_unchecked(&entries[sj].cf)
            }
        })
        .collect();
    for (entry, left_side) in entries.into_iter().zip(goes_left) {
        if left_side {
            left.push(entry);
        } else {
            right.push(entry);
        }
    }
    Ok((left, right))
}

/// Splits a detached node into two of the same kind. Chain links are not
/// carried over; [`CFTree`] rewires them when it splits in place.
pub fn split_node(node: &CFNode) -> Result<(CFNode, CFNode), CfError> {
    let (a, b) = split_entries(node.entries.clone())?;
    Ok((
        CFNode::new(node.kind, a, node.parent),
        CFNode::new(node.kind, b, node.parent),
    ))
}

/// Height-balanced CF-tree. Single writer; share freely once built.
#[derive(Debug, Clone)]
pub struct CFTree {
    params: TreeParams,
    nodes: Vec<CFNode>,
    root: NodeId,
    leaf_head: NodeId,
    point_total: u64,
    track_members: bool,
}

impl CFTree {
    pub fn new(params: TreeParams) -> Result<Self, CfError> {
        params.validate()?;
        Ok(Self {
            params,
            nodes: vec![CFNode::new(NodeKind::Leaf, Vec::new(), None)],
            root: NodeId(0),
            leaf_head: NodeId(0),
            point_total: 0,
            track_members: false,
        })
    }

    /// Like [`new`](Self::new) but every leaf entry remembers which inserted
    /// points (by insertion index) it holds.
    pub fn with_member_tracking(params: TreeParams) -> Result<Self, CfError> {
        let mut tree = Self::new(params)?;
        tree.track_members = true;
        Ok(tree)
    }

    pub fn params(&self) -> &TreeParams {
        &self.params
    }

    pub fn point_total(&self) -> u64 {
        self.point_total
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn leaf_head(&self) -> NodeId {
        self.leaf_head
    }

    pub fn node(&self, id: NodeId) -> &CFNode {
        &self.nodes[id.0]
    }

    fn node_mut(&mut self, id: NodeId) -> &mut CFNode {
        &mut self.nodes[id.0]
    }

    /// Aggregate CF of every absorbed point.
    pub fn root_cf(&self) -> ClusteringFeature {
        self.node(self.root).total(self.params.dimension)
    }

    fn closest_entry_to_point(&self, id: NodeId, x: &[f64]) -> usize {
        let mut best = (0, f64::INFINITY);
        for (i, e) in self.node(id).entries.iter().enumerate() {
            let d = e.cf.sq_distance_to_point(x);
            if d < best.1 {
                best = (i, d);
            }
        }
        best.0
    }

    pub fn insert_point(&mut self, x: &[f64]) -> Result<(), CfError> {
        if x.len() != self.params.dimension {
            return Err(CfError::DimensionMismatch {
                expected: self.params.dimension,
                found: x.len(),
            });
        }
        let point = ClusteringFeature::from_point(x)?;
        let member = self.point_total as usize;
        let track = self.track_members;
        let new_entry = move |cf| {
            let mut e = CFEntry::leaf(cf);
            if track {
                e.members.push(member);
            }
            e
        };

        if self.point_total == 0 {
            let root = self.root;
            self.node_mut(root).entries.push(new_entry(point));
            self.point_total = 1;
            return Ok(());
        }

        let mut id = self.root;
        while !self.node(id).is_leaf() {
            let idx = self.closest_entry_to_point(id, x);
            let entry = &mut self.node_mut(id).entries[idx];
            entry.cf.absorb_point(x);
            id = entry.child.expect("internal entries have children");
        }

        let j = self.closest_entry_to_point(id, x);
        let threshold = self.params.threshold;
        let leaf = self.node_mut(id);
        if leaf.entries[j].cf.radius_with_point(x) <= threshold {
            leaf.entries[j].cf.absorb_point(x);
            if track {
                leaf.entries[j].members.push(member);
            }
        } else {
            leaf.entries.push(new_entry(point));
            if leaf.entries.len() > self.params.leaf_capacity {
                self.split_upward(id)?;
            }
        }
        self.point_total += 1;
        Ok(())
    }

    fn capacity(&self, kind: NodeKind) -> usize {
        match kind {
            NodeKind::Leaf => self.params.leaf_capacity,
            NodeKind::Internal => self.params.branching,
        }
    }

    fn split_upward(&mut self, mut id: NodeId) -> Result<(), CfError> {
        let dim = self.params.dimension;
        loop {
            let kind = self.node(id).kind;
            if self.node(id).entries.len() <= self.capacity(kind) {
                return Ok(());
            }
            let entries = std::mem::take(&mut self.node_mut(id).entries);
            let (left, right) = split_entries(entries)?;
            let (left_cf, right_cf) = (sum_entries(&left, dim), sum_entries(&right, dim));
            let parent = self.node(id).parent;

            let sibling = NodeId(self.nodes.len());
            for child in right.iter().filter_map(|e| e.child) {
                self.node_mut(child).parent = Some(sibling);
            }
            self.nodes.push(CFNode::new(kind, right, parent));
            self.node_mut(id).entries = left;
            if kind == NodeKind::Leaf {
                let next = self.node(id).next;
                self.node_mut(sibling).prev = Some(id);
                self.node_mut(sibling).next = next;
                if let Some(n) = next {
                    self.node_mut(n).prev = Some(sibling);
                }
                self.node_mut(id).next = Some(sibling);
            }

            let entry = |cf, child| CFEntry {
                cf,
                child: Some(child),
                members: Vec::new(),
            };
            match parent {
                None => {
                    let root = NodeId(self.nodes.len());
                    self.nodes.push(CFNode::new(
                        NodeKind::Internal,
                        vec![entry(left_cf, id), entry(right_cf, sibling)],
                        None,
                    ));
                    self.node_mut(id).parent = Some(root);
                    self.node_mut(sibling).parent = Some(root);
                    self.root = root;
                    return Ok(());
                }
                Some(p) => {
                    let pos = self
                        .node(p)
                        .entries
                        .iter()
                        .position(|e| e.child == Some(id))
                        .expect("child is referenced by its parent");
                    let pnode = self.node_mut(p);
                    pnode.entries[pos].cf = left_cf;
                    pnode.entries.insert(pos + 1, entry(right_cf, sibling));
                    if pnode.entries.len() <= self.params.branching {
                        self.merge_refinement(p, (pos, pos + 1));
                        return Ok(());
                    }
                    id = p;
                }
            }
        }
    }

    /// Merges the closest pair of `parent`'s entries, other than the freshly
    /// split pair, when their combined radius stays within `T` and the two
    /// children fit in one node. Returns whether a merge happened.
    pub fn merge_refinement(&mut self, parent: NodeId, split_pair: (usize, usize)) -> bool {
        let entries = &self.node(parent).entries;
        if self.node(parent).is_leaf() || entries.len() < 3 {
            return false;
        }
        let excluded = (split_pair.0.min(split_pair.1), split_pair.0.max(split_pair.1));
        let mut best: Option<(usize, usize, f64)> = None;
        for a in 0..entries.len() {
            for b in a + 1..entries.len() {
                if (a, b) == excluded {
                    continue;
                }
                let d = entries[a].cf.sq_distance_unchecked(&entries[b].cf);
                if best.is_none_or(|(_, _, bd)| d < bd) {
                    best = Some((a, b, d));
                }
            }
        }
        let Some((a, b, _)) = best else {
            return false;
        };
        if entries[a].cf.radius_with(&entries[b].cf) > self.params.threshold {
            return false;
        }
        let (ca, cb) = (
            entries[a].child.expect("internal entry"),
            entries[b].child.expect("internal entry"),
        );
        let kind = self.node(ca).kind;
        if self.node(ca).entries.len() + self.node(cb).entries.len() > self.capacity(kind) {
            return false;
        }

        let moved = std::mem::take(&mut self.node_mut(cb).entries);
        for child in moved.iter().filter_map(|e| e.child) {
            self.node_mut(child).parent = Some(ca);
        }
        self.node_mut(ca).entries.extend(moved);
        if kind == NodeKind::Leaf {
            let (prev, next) = (self.node(cb).prev, self.node(cb).next);
            match prev {
                Some(p) => self.node_mut(p).next = next,
                None => self.leaf_head = next.expect("chain keeps another leaf"),
            }
            if let Some(n) = next {
                self.node_mut(n).prev = prev;
            }
        }
        let dead = self.node_mut(cb);
        dead.live = false;
        dead.parent = None;
        dead.prev = None;
        dead.next = None;

        let pnode = self.node_mut(parent);
        let removed = pnode.entries.remove(b);
        pnode.entries[a].cf.absorb(&removed.cf);
        true
    }

    /// Leaf ids in chain order.
    pub fn leaves(&self) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut cur = Some(self.leaf_head);
        while let Some(id) = cur {
            out.push(id);
            cur = self.node(id).next;
        }
        out
    }

    pub fn leaf_entry_refs(&self) -> Vec<&CFEntry> {
        self.leaves()
            .into_iter()
            .flat_map(|id| self.node(id).entries.iter())
            .collect()
    }

    /// Leaf entry CFs in chain order.
    pub fn leaf_entries(&self) -> Vec<ClusteringFeature> {
        self.leaf_entry_refs().into_iter().map(|e| e.cf.clone()).collect()
    }

    pub fn live_node_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.live).count()
    }

    /// Full structural audit; returns the first violation found.
    pub fn check_invariants(&self) -> Result<(), String> {
        let p = &self.params;
        let dim = p.dimension;
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()));

        let mut leaf_depth: Option<usize> = None;
        let mut reachable_leaves = Vec::new();
        let mut stack = vec![(self.root, 0usize)];
        if self.node(self.root).parent.is_some() {
            return Err("root has a parent".into());
        }
        while let Some((id, depth)) = stack.pop() {
            let node = self.node(id);
            if !node.live {
                return Err(format!("dead node {id:?} is reachable"));
            }
            if node.entries.is_empty() && !(id == self.root && self.point_total == 0) {
                return Err(format!("node {id:?} has no entries"));
            }
            if node.entries.len() > self.capacity(node.kind) {
                return Err(format!("node {id:?} holds {} entries", node.entries.len()));
            }
            for e in &node.entries {
                if e.cf.dim() != dim {
                    return Err(format!("entry of dim {} in {id:?}", e.cf.dim()));
                }
                e.cf.check().map_err(|m| format!("{id:?}: {m}"))?;
            }
            match node.kind {
                NodeKind::Leaf => {
                    for e in &node.entries {
                        if e.child.is_some() {
                            return Err(format!("leaf {id:?} entry has a child"));
                        }
                        let r = e.cf.radius().map_err(|e| e.to_string())?;
                        if r > p.threshold + 1e-12 {
                            return Err(format!("leaf {id:?} entry radius {r} > T"));
                        }
                    }
                    match leaf_depth {
                        None => leaf_depth = Some(depth),
                        Some(d) if d != depth => return Err(format!("leaf {id:?} at depth {depth}, expected {d}")),
                        _ => {}
                    }
                    reachable_leaves.push(id);
                }
                NodeKind::Internal => {
                    for e in &node.entries {
                        let child = e.child.ok_or_else(|| format!("internal {id:?} entry without child"))?;
                        if self.node(child).parent != Some(id) {
                            return Err(format!("{child:?} does not point back to {id:?}"));
                        }
                        let sum = self.node(child).total(dim);
                        if sum.n != e.cf.n
                            || !sum.ls.iter().zip(&e.cf.ls).all(|(a, b)| close(*a, *b))
                            || !sum.ss.iter().zip(&e.cf.ss).all(|(a, b)| close(*a, *b))
                        {
                            return Err(format!("entry for {child:?} in {id:?} disagrees with child sum"));
                        }
                        stack.push((child, depth + 1));
                    }
                }
            }
        }

        // chain
        let head = self.node(self.leaf_head);
        if !head.is_leaf() || head.prev.is_some() {
            return Err("bad leaf head".into());
        }
        let mut chain = Vec::new();
        let mut cur = Some(self.leaf_head);
        let mut prev = None;
        while let Some(id) = cur {
            if chain.len() > reachable_leaves.len() {
                return Err("leaf chain is cyclic or too long".into());
            }
            if self.node(id).prev != prev {
                return Err(format!("prev link of {id:?} is inconsistent"));
            }
            chain.push(id);
            prev = Some(id);
            cur = self.node(id).next;
        }
        let mut a = chain.clone();
        a.sort();
        a.dedup();
        let mut b = reachable_leaves;
        b.sort();
        if a.len() != chain.len() || a != b {
            return Err("leaf chain does not visit every leaf exactly once".into());
        }

        let total: u64 = self.leaf_entry_refs().iter().map(|e| e.cf.n).sum();
        if total != self.point_total || self.root_cf().n != self.point_total {
            return Err(format!("point total {} but leaves hold {total}", self.point_total));
        }
        Ok(())
    }

    /// Deterministic indented dump: one line per node and per entry.
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.render_node(self.root, 0, &mut out);
        out
    }

    fn render_node(&self, id: NodeId, depth: usize, out: &mut String) {
        let node = self.node(id);
        let pad = "  ".repeat(depth);
        let kind = match node.kind {
            NodeKind::Internal => "internal",
            NodeKind::Leaf => "leaf",
        };
        let _ = writeln!(out, "{pad}{kind} entries={}", node.entries.len());
        for e in &node.entries {
            let centroid =
                e.cf.centroid()
                    .map(|c| c.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>().join(" "))
                    .unwrap_or_default();
            let radius = e.cf.radius().unwrap_or(0.0);
            let _ = writeln!(out, "{pad}- n={} centroid=[{centroid}] radius={radius:.6}", e.cf.n);
            if let Some(child) = e.child {
                self.render_node(child, depth + 1, out);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cf_of(points: &[Vec<f64>]) -> ClusteringFeature {
        let d = points[0].len();
        let mut ls = vec![0.0; d];
        let mut ss = vec![0.0; d];
        for p in points {
            for i in 0..d {
                ls[i] += p[i];
                ss[i] += p[i] * p[i];
            }
        }
        ClusteringFeature {
            n: points.len() as u64,
            ls,
            ss,
        }
    }

    fn brute_rms(points: &[Vec<f64>]) -> f64 {
        let d = points[0].len();
        let n = points.len() as f64;
        let mean: Vec<f64> = (0..d).map(|i| points.iter().map(|p| p[i]).sum::<f64>() / n).collect();
        let sq: f64 = points
            .iter()
            .map(|p| p.iter().zip(&mean).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
            .sum();
        (sq / n).sqrt()
    }

    fn random_points(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect()
    }

    #[test]
    fn cf_from_point_examples() {
        let cf = ClusteringFeature::from_point(&[0.0, 0.0]).unwrap();
        assert_eq!((cf.n(), cf.ls(), cf.ss()), (1, &[0.0, 0.0][..], &[0.0, 0.0][..]));
        let cf = ClusteringFeature::from_point(&[3.0, 4.0]).unwrap();
        assert_eq!((cf.n(), cf.ls(), cf.ss()), (1, &[3.0, 4.0][..], &[9.0, 16.0][..]));
        assert_eq!(ClusteringFeature::from_point(&[f64::NAN]), Err(CfError::NonFiniteInput));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for p in random_points(&mut rng, 50, 4) {
            ClusteringFeature::from_point(&p).unwrap().check().unwrap();
        }
    }

    #[test]
    fn merge_examples() {
        let a = ClusteringFeature::from_point(&[1.0, -2.0]).unwrap();
        assert_eq!(a.merge(&ClusteringFeature::zero(2)).unwrap(), a);
        assert!(matches!(
            a.merge(&ClusteringFeature::zero(3)),
            Err(CfError::DimensionMismatch { .. })
        ));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let left = random_points(&mut rng, 7, 3);
        let right = random_points(&mut rng, 5, 3);
        let merged = cf_of(&left).merge(&cf_of(&right)).unwrap();
        let direct = cf_of(&[left.clone(), right.clone()].concat());
        assert_eq!(merged.n(), direct.n());
        for (a, b) in merged
            .ls()
            .iter()
            .chain(merged.ss())
            .zip(direct.ls().iter().chain(direct.ss()))
        {
            assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "{a} vs {b}");
        }
        assert_eq!(cf_of(&left).merge(&cf_of(&right)), cf_of(&right).merge(&cf_of(&left)));
    }

    #[test]
    fn centroid_examples() {
        let p = ClusteringFeature::from_point(&[0.5, 2.0]).unwrap();
        assert_eq!(p.centroid().unwrap(), vec![0.5, 2.0]);
        let two = cf_of(&[vec![0.0, 0.0], vec![2.0, 2.0]]);
        assert_eq!(two.centroid().unwrap(), vec![1.0, 1.0]);
        assert_eq!(ClusteringFeature::zero(2).centroid(), Err(CfError::EmptyCF));

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts = random_points(&mut rng, 50, 5);
        let c = cf_of(&pts).centroid().unwrap();
        for i in 0..5 {
            let mean = pts.iter().map(|p| p[i]).sum::<f64>() / 50.0;
            assert!((c[i] - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn radius_examples() {
        assert_eq!(
            ClusteringFeature::from_point(&[4.0, 1.0]).unwrap().radius().unwrap(),
            0.0
        );
        assert_eq!(cf_of(&[vec![0.0], vec![2.0]]).radius().unwrap(), 1.0);
        assert_eq!(ClusteringFeature::zero(1).radius(), Err(CfError::EmptyCF));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pts = random_points(&mut rng, 100, 6);
        assert!((cf_of(&pts).radius().unwrap() - brute_rms(&pts)).abs() < 1e-9);
    }

    #[test]
    fn distance_examples() {
        let a = ClusteringFeature::from_point(&[0.0, 0.0]).unwrap();
        let b = ClusteringFeature::from_point(&[3.0, 4.0]).unwrap();
        assert_eq!(a.distance(&a).unwrap(), 0.0);
        assert_eq!(a.distance(&b).unwrap(), 5.0);
        assert_eq!(a.distance(&ClusteringFeature::zero(2)), Err(CfError::EmptyCF));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let cfs: Vec<_> = (0..3).map(|_| cf_of(&random_points(&mut rng, 4, 3))).collect();
            let ab = cfs[0].distance(&cfs[1]).unwrap();
            let bc = cfs[1].distance(&cfs[2]).unwrap();
            let ac = cfs[0].distance(&cfs[2]).unwrap();
            assert!(ac <= ab + bc + 1e-12);
            assert_eq!(ab, cfs[1].distance(&cfs[0]).unwrap());
        }
    }

    #[test]
    fn radius_with_point_matches_absorb() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let pts = random_points(&mut rng, 20, 3);
        let mut cf = cf_of(&pts[..10]);
        for p in &pts[10..] {
            let predicted = cf.radius_with_point(p);
            cf.absorb_point(p);
            assert_eq!(predicted.to_bits(), cf.radius().unwrap().to_bits());
        }
    }

    fn params(d: usize, t: f64, b: usize, l: usize) -> TreeParams {
        TreeParams {
            threshold: t,
            branching: b,
            leaf_capacity: l,
            dimension: d,
        }
    }

    #[test]
    fn insert_into_empty_tree() {
        let mut tree = CFTree::new(params(2, 0.5, 4, 4)).unwrap();
        assert!(tree.leaf_entries().is_empty());
        tree.insert_point(&[0.2, 0.3]).unwrap();
        assert!(tree.node(tree.root()).is_leaf());
        assert_eq!(
            tree.leaf_entries(),
            vec![ClusteringFeature::from_point(&[0.2, 0.3]).unwrap()]
        );
        tree.check_invariants().unwrap();
    }

    #[test]
    fn insert_errors() {
        let mut tree = CFTree::new(params(2, 0.5, 4, 4)).unwrap();
        assert!(matches!(
            tree.insert_point(&[1.0]),
            Err(CfError::DimensionMismatch { .. })
        ));
        assert_eq!(tree.insert_point(&[1.0, f64::INFINITY]), Err(CfError::NonFiniteInput));
        assert_eq!(tree.point_total(), 0);
        assert!(CFTree::new(params(2, 0.0, 4, 4)).is_err());
        assert!(CFTree::new(params(2, 0.5, 1, 4)).is_err());
        assert!(CFTree::new(params(2, 0.5, 2, 0)).is_err());
    }

    #[test]
    fn absorption_within_threshold() {
        let mut tree = CFTree::new(params(2, 0.5, 4, 4)).unwrap();
        tree.insert_point(&[0.0, 0.0]).unwrap();
        tree.insert_point(&[0.1, 0.0]).unwrap();
        let entries = tree.leaf_entries();
        assert_eq!(entries.len(), 1);
        assert_eq!(entries[0].n(), 2);
    }

    #[test]
    fn overflow_split_seeds_are_the_farthest_pair() {
        let t = 0.1;
        let l = 4;
        let pts: Vec<Vec<f64>> = vec![
            vec![0.0, 0.0],
            vec![1.0, 0.2],
            vec![0.3, 2.0],
            vec![3.0, 3.1],
            vec![0.5, 0.9],
        ];
        // oracle: all pairs
        let mut far = (0, 0, -1.0);
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                let d: f64 = pts[i].iter().zip(&pts[j]).map(|(a, b)| (a - b).powi(2)).sum();
                assert!(d.sqrt() > 2.0 * t);
                if d > far.2 {
                    far = (i, j, d);
                }
            }
        }
        let mut tree = CFTree::new(params(2, t, 4, l)).unwrap();
        for p in &pts {
            tree.insert_point(p).unwrap();
        }
        tree.check_invariants().unwrap();
        let leaves = tree.leaves();
        assert_eq!(leaves.len(), 2);
        let holds = |leaf: NodeId, p: &Vec<f64>| tree.node(leaf).entries.iter().any(|e| e.cf.centroid().unwrap() == *p);
        let (i, j) = (far.0, far.1);
        assert!(
            (holds(leaves[0], &pts[i]) && holds(leaves[1], &pts[j]))
                || (holds(leaves[0], &pts[j]) && holds(leaves[1], &pts[i]))
        );
        // the two seeds open their leaves
        let firsts: Vec<_> = leaves
            .iter()
            .map(|&id| tree.node(id).entries[0].cf.centroid().unwrap())
            .collect();
        assert!(firsts.contains(&pts[i]) && firsts.contains(&pts[j]));
    }

    fn entry_at(x: f64) -> CFEntry {
        CFEntry::leaf(ClusteringFeature::from_point(&[x]).unwrap())
    }

    fn positions(entries: &[CFEntry]) -> Vec<f64> {
        entries.iter().map(|e| e.cf.centroid().unwrap()[0]).collect()
    }

    #[test]
    fn split_examples() {
        let (a, b) = split_entries(vec![entry_at(0.0), entry_at(10.0), entry_at(1.0), entry_at(9.0)]).unwrap();
        assert_eq!(positions(&a), vec![0.0, 1.0]);
        assert_eq!(positions(&b), vec![10.0, 9.0]);

        let (a, b) = split_entries(vec![entry_at(2.0), entry_at(3.0)]).unwrap();
        assert_eq!((a.len(), b.len()), (1, 1));

        assert_eq!(split_entries(vec![entry_at(1.0)]).unwrap_err(), CfError::Underfull(1));

        let node = CFNode::new(
            NodeKind::Leaf,
            vec![
                entry_at(0.5),
                entry_at(4.0),
                entry_at(-3.0),
                entry_at(2.0),
                entry_at(2.5),
            ],
            None,
        );
        let (x, y) = split_node(&node).unwrap();
        let mut both = x.total(1);
        both.absorb(&y.total(1));
        assert_eq!(both, node.total(1));
    }

    #[test]
    fn equidistant_entry_goes_to_first_seed() {
        let (a, b) = split_entries(vec![entry_at(0.0), entry_at(2.0), entry_at(1.0)]).unwrap();
        assert_eq!(positions(&a), vec![0.0, 1.0]);
        assert_eq!(positions(&b), vec![2.0]);
    }

    /// Two-level tree whose root holds leaves at the given 1-D positions,
    /// one entry per leaf.
    fn tree_with_leaves(xs: &[f64], t: f64) -> CFTree {
        let p = params(1, t, 8, 8);
        let mut tree = CFTree::new(p).unwrap();
        let root = NodeId(xs.len());
        let mut root_entries = Vec::new();
        tree.nodes.clear();
        for (i, &x) in xs.iter().enumerate() {
            let mut leaf = CFNode::new(NodeKind::Leaf, vec![entry_at(x)], Some(root));
            leaf.prev = (i > 0).then(|| NodeId(i - 1));
            leaf.next = (i + 1 < xs.len()).then(|| NodeId(i + 1));
            tree.nodes.push(leaf);
            root_entries.push(CFEntry {
                cf: ClusteringFeature::from_point(&[x]).unwrap(),
                child: Some(NodeId(i)),
                members: Vec::new(),
            });
        }
        tree.nodes.push(CFNode::new(NodeKind::Internal, root_entries, None));
        tree.root = root;
        tree.leaf_head = NodeId(0);
        tree.point_total = xs.len() as u64;
        tree.check_invariants().unwrap();
        tree
    }

    #[test]
    fn refinement_noop_when_pairs_are_far() {
        let mut tree = tree_with_leaves(&[0.0, 5.0, 10.0, 15.0], 0.5);
        let before = tree.node(tree.root()).clone();
        assert!(!tree.merge_refinement(tree.root(), (0, 1)));
        assert_eq!(tree.node(tree.root()), &before);
    }

    #[test]
    fn refinement_merges_near_duplicates() {
        // split pair (0,1); closest other pair is (2,3) at distance 0.2
        let mut tree = tree_with_leaves(&[0.0, 0.1, 5.0, 5.2, 9.0], 0.5);
        // combined radius by brute force: two points 0.2 apart -> 0.1
        assert!((brute_rms(&[vec![5.0], vec![5.2]]) - 0.1).abs() < 1e-12);
        let before = tree.root_cf();
        assert!(tree.merge_refinement(tree.root(), (0, 1)));
        assert_eq!(tree.node(tree.root()).entries.len(), 4);
        let after = tree.root_cf();
        assert_eq!(after.n(), before.n());
        assert!((after.ls()[0] - before.ls()[0]).abs() < 1e-12);
        assert!((after.ss()[0] - before.ss()[0]).abs() < 1e-12);
        assert_eq!(tree.leaves().len(), 4);
        tree.check_invariants().unwrap();
    }

    #[test]
    fn leaf_entries_sum_to_point_total() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let pts = random_points(&mut rng, 1000, 3);
        let mut tree = CFTree::new(params(3, 0.15, 4, 5)).unwrap();
        for p in &pts {
            tree.insert_point(p).unwrap();
        }
        tree.check_invariants().unwrap();
        let entries = tree.leaf_entries();
        assert_eq!(entries.iter().map(|e| e.n()).sum::<u64>(), 1000);
        let brute = cf_of(&pts);
        for i in 0..3 {
            let s: f64 = entries.iter().map(|e| e.ls()[i]).sum();
            assert!((s - brute.ls()[i]).abs() <= 1e-9 * (1.0 + brute.ls()[i].abs()));
        }
    }

    #[test]
    fn member_tracking_partitions_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pts = random_points(&mut rng, 300, 2);
        let mut tree = CFTree::with_member_tracking(params(2, 0.1, 3, 3)).unwrap();
        for p in &pts {
            tree.insert_point(p).unwrap();
        }
        let mut seen: Vec<usize> = Vec::new();
        for e in tree.leaf_entry_refs() {
            assert_eq!(e.members().len() as u64, e.cf.n());
            let sub: Vec<Vec<f64>> = e.members().iter().map(|&i| pts[i].clone()).collect();
            let brute = cf_of(&sub);
            assert!(brute.ls().iter().zip(e.cf.ls()).all(|(a, b)| (a - b).abs() < 1e-12));
            seen.extend(e.members());
        }
        seen.sort_unstable();
        assert_eq!(seen, (0..300).collect::<Vec<_>>());
    }

    #[test]
    fn render_is_deterministic() {
        let build = || {
            let mut tree = CFTree::new(params(2, 0.2, 2, 2)).unwrap();
            for p in [[0.0, 0.0], [1.0, 1.0], [0.05, 0.0], [2.0, 0.0], [0.0, 2.0]] {
                tree.insert_point(&p).unwrap();
            }
            tree.render()
        };
        let text = build();
        assert_eq!(text, build());
        assert!(text.starts_with("internal entries="));
        assert!(text.contains("- n=2 centroid=[0.025000 0.000000] radius=0.025000"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn tree_invariants_hold_after_every_insert(
            seed in any::<u64>(),
            t in 0.01f64..0.6,
            b in 2usize..6,
            l in 1usize..6,
            d in 1usize..4,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut tree = CFTree::new(params(d, t, b, l)).unwrap();
            let pts = random_points(&mut rng, 150, d);
            for p in &pts {
                tree.insert_point(p).unwrap();
                if let Err(msg) = tree.check_invariants() {
                    prop_assert!(false, "{}", msg);
                }
            }
            let brute = cf_of(&pts);
            let root = tree.root_cf();
            prop_assert_eq!(root.n(), brute.n());
            for i in 0..d {
                prop_assert!((root.ls()[i] - brute.ls()[i]).abs() <= 1e-9 * (1.0 + brute.ls()[i].abs()));
                prop_assert!((root.ss()[i] - brute.ss()[i]).abs() <= 1e-9 * (1.0 + brute.ss()[i].abs()));
            }
        }

        #[test]
        fn split_conserves_cf(xs in prop::collection::vec(-10.0f64..10.0, 2..12)) {
            let node = CFNode::new(NodeKind::Leaf, xs.iter().map(|&x| entry_at(x)).collect(), None);
            let (a, b) = split_node(&node).unwrap();
            prop_assert!(!a.entries.is_empty() && !b.entries.is_empty());
            prop_assert_eq!(a.entries.len() + b.entries.len(), xs.len());
            let mut both = a.total(1);
            both.absorb(&b.total(1));
            let whole = node.total(1);
            prop_assert_eq!(both.n(), whole.n());
            prop_assert!((both.ls()[0] - whole.ls()[0]).abs() < 1e-9);
        }
    }
}
