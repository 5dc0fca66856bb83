//! Directed acyclic graphs over indexed binary variables and the flat
//! indexing of their parental configurations.
//!
//! Nodes are `0..d` and every edge points from a smaller index to a larger
//! one, so acyclicity holds by construction. For node `i` with `f` parents,
//! a *parental configuration* is one of the `2^f` joint assignments of the
//! parent variables; the `ConfigTable` lays all configurations of all nodes
//! out in a single flat index space `0..m`.

use crate::error::ModelError;

/// Largest fan-in for which we will enumerate parental configurations.
pub const MAX_FAN_IN: usize = 25;

/// A DAG over `d` binary variables with all edges pointing from lower to
/// higher node index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dag {
    parents: Vec<Vec<usize>>,
}

impl Dag {
    /// Builds a DAG from per-node parent lists. Each list must be strictly
    /// increasing and contain only indices smaller than the node's own.
    pub fn new(parents: Vec<Vec<usize>>) -> Result<Self, ModelError> {
        if parents.is_empty() {
            return Err(ModelError::EmptyGraph);
        }
        for (node, list) in parents.iter().enumerate() {
            for &p in list {
                if p >= node {
                    return Err(ModelError::ParentOutOfOrder { node, parent: p });
                }
            }
            if !list.windows(2).all(|w| w[0] < w[1]) {
                return Err(ModelError::UnsortedParents { node });
            }
        }
        Ok(Self { parents })
    }

    /// The edgeless graph on `d` nodes.
    pub fn empty(d: usize) -> Result<Self, ModelError> {
        Self::new(vec![Vec::new(); d])
    }

    /// The chain `0 -> 1 -> ... -> d-1`.
    pub fn chain(d: usize) -> Result<Self, ModelError> {
        Self::new((0..d).map(|i| if i == 0 { vec![] } else { vec![i - 1] }).collect())
    }

    pub fn node_count(&self) -> usize {
        self.parents.len()
    }

    pub fn parents(&self, node: usize) -> &[usize] {
        &self.parents[node]
    }

    pub fn parent_lists(&self) -> &[Vec<usize>] {
        &self.parents
    }

    pub fn fan_in(&self, node: usize) -> usize {
        self.parents[node].len()
    }

    pub fn max_fan_in(&self) -> usize {
        self.parents.iter().map(Vec::len).max().unwrap_or(0)
    }
}

/// Flat indexing of all parental configurations of a DAG.
///
/// Configuration `k` stands for a pair `(node, assignment)`: nodes appear in
/// index order, and within a node the assignments are ordered by the integer
/// value of the parent bits, with the lowest-indexed parent as the least
/// significant bit. A node with no parents contributes exactly one (empty)
/// configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigTable {
    dag: Dag,
    /// `offsets[i]` is the flat index of node `i`'s first configuration;
    /// `offsets[d]` equals the total configuration count `m`.
    offsets: Vec<usize>,
}

impl ConfigTable {
    pub fn new(dag: &Dag) -> Result<Self, ModelError> {
        let d = dag.node_count();
        let mut offsets = Vec::with_capacity(d + 1);
        let mut m = 0usize;
        offsets.push(0);
        for node in 0..d {
            let fan_in = dag.fan_in(node);
            if fan_in > MAX_FAN_IN {
                return Err(ModelError::TooManyConfigurations { node, fan_in });
            }
            m += 1usize << fan_in;
            offsets.push(m);
        }
        Ok(Self { dag: dag.clone(), offsets })
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    /// Total number of parental configurations, `m`.
    pub fn len(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of variables, `d`.
    pub fn dim(&self) -> usize {
        self.dag.node_count()
    }

    /// Flat indices owned by `node`.
    pub fn node_range(&self, node: usize) -> std::ops::Range<usize> {
        self.offsets[node]..self.offsets[node + 1]
    }

    /// Flat index of `(node, assignment)`.
    pub fn flat_index(&self, node: usize, assignment: u64) -> usize {
        debug_assert!((assignment as usize) < (1usize << self.dag.fan_in(node)));
        self.offsets[node] + assignment as usize
    }

    /// The `(node, assignment)` pair behind flat index `k`.
    pub fn entry(&self, k: usize) -> (usize, u64) {
        debug_assert!(k < self.len());
        // offsets is strictly increasing, so this finds the owning node.
        let node = self.offsets.partition_point(|&o| o <= k) - 1;
        (node, (k - self.offsets[node]) as u64)
    }

    /// The assignment of `node`'s parents realized by the sample `x`, read
    /// with the lowest-indexed parent as the least significant bit.
    pub fn assignment_of(&self, x: &[u8], node: usize) -> u64 {
        let mut a = 0u64;
        for (bit, &p) in self.dag.parents(node).iter().enumerate() {
            a |= (x[p] as u64) << bit;
        }
        a
    }

    /// Flat index of the configuration of `node` that `x` realizes.
    pub fn active_config(&self, x: &[u8], node: usize) -> usize {
        self.offsets[node] + self.assignment_of(x, node) as usize
    }

    /// Flat indices of all `d` configurations realized by `x`, in node order.
    pub fn active_configs(&self, x: &[u8], out: &mut Vec<usize>) {
        out.clear();
        for node in 0..self.dim() {
            out.push(self.active_config(x, node));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_graph_configs() {
        let dag = Dag::empty(3).unwrap();
        let table = ConfigTable::new(&dag).unwrap();
        assert_eq!(table.len(), 3);
        for (k, node) in (0..3).enumerate() {
            assert_eq!(table.entry(k), (node, 0));
        }
    }

    #[test]
    fn chain_configs() {
        let dag = Dag::chain(3).unwrap();
        let table = ConfigTable::new(&dag).unwrap();
        assert_eq!(table.len(), 5);
        let expected = [(0, 0), (1, 0), (1, 1), (2, 0), (2, 1)];
        for (k, &e) in expected.iter().enumerate() {
            assert_eq!(table.entry(k), e);
        }
    }

    #[test]
    fn two_parent_node_assignment_order() {
        // Node 2 has parents {0, 1}; its four configurations are ordered by
        // the integer value of the assignment with parent 0 as the LSB.
        let dag = Dag::new(vec![vec![], vec![], vec![0, 1]]).unwrap();
        let table = ConfigTable::new(&dag).unwrap();
        assert_eq!(table.len(), 6);
        assert_eq!(table.node_range(2), 2..6);
        for a in 0..4u64 {
            assert_eq!(table.entry(2 + a as usize), (2, a));
        }
        // x = (0, 1, 1): parents of node 2 read as x0=0 (LSB), x1=1 -> a = 2.
        assert_eq!(table.active_config(&[0, 1, 1], 2), 2 + 2);
    }

    #[test]
    fn active_config_chain() {
        let dag = Dag::chain(2).unwrap();
        let table = ConfigTable::new(&dag).unwrap();
        // x = (1, 0): node 1's active configuration is (1, a=1).
        assert_eq!(table.active_config(&[1, 0], 1), table.flat_index(1, 1));
        // Root nodes are always in their single empty configuration.
        assert_eq!(table.active_config(&[1, 0], 0), 0);
        assert_eq!(table.active_config(&[0, 1], 0), 0);
    }

    #[test]
    fn flat_index_entry_roundtrip() {
        let dag = Dag::new(vec![vec![], vec![0], vec![0, 1], vec![2], vec![0, 2, 3]]).unwrap();
        let table = ConfigTable::new(&dag).unwrap();
        assert_eq!(table.len(), 1 + 2 + 4 + 2 + 8);
        for k in 0..table.len() {
            let (node, a) = table.entry(k);
            assert_eq!(table.flat_index(node, a), k);
        }
    }

    #[test]
    fn rejects_bad_parent_lists() {
        assert_eq!(
            Dag::new(vec![vec![], vec![1]]).unwrap_err(),
            ModelError::ParentOutOfOrder { node: 1, parent: 1 }
        );
        assert_eq!(
            Dag::new(vec![vec![], vec![0], vec![1, 0]]).unwrap_err(),
            ModelError::UnsortedParents { node: 2 }
        );
        assert_eq!(
            Dag::new(vec![vec![], vec![0], vec![0, 0]]).unwrap_err(),
            ModelError::UnsortedParents { node: 2 }
        );
        assert_eq!(Dag::new(vec![]).unwrap_err(), ModelError::EmptyGraph);
    }
}
