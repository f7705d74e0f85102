//! Structurally hashed and-inverter graphs.

use std::collections::HashMap;

/// Node id; ids increase in creation order, so operands always precede users.
pub type NodeId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    False,
    Input(u32),
    Not(NodeId),
    And(NodeId, NodeId),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Aig {
    nodes: Vec<Node>,
    table: HashMap<Node, NodeId>,
}

impl Default for Aig {
    fn default() -> Self {
        Aig::new()
    }
}

impl Aig {
    pub fn new() -> Aig {
        let mut g = Aig { nodes: Vec::new(), table: HashMap::new() };
        g.intern(Node::False);
        g
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> Node {
        self.nodes[id as usize]
    }

    fn intern(&mut self, n: Node) -> NodeId {
        if let Some(&id) = self.table.get(&n) {
            return id;
        }
        let id = self.nodes.len() as NodeId;
        self.nodes.push(n);
        self.table.insert(n, id);
        id
    }

    pub fn constant(&mut self, value: bool) -> NodeId {
        let f = self.intern(Node::False);
        if value {
            self.not(f)
        } else {
            f
        }
    }

    pub fn input(&mut self, var: u32) -> NodeId {
        self.intern(Node::Input(var))
    }

    pub fn not(&mut self, a: NodeId) -> NodeId {
        match self.node(a) {
            Node::Not(b) => b,
            _ => self.intern(Node::Not(a)),
        }
    }

    fn complement_of(&self, a: NodeId, b: NodeId) -> bool {
        self.node(a) == Node::Not(b) || self.node(b) == Node::Not(a)
    }

    pub fn and(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let f = self.constant(false);
        let t = self.constant(true);
        if a == f || b == f || self.complement_of(a, b) {
            return f;
        }
        if a == t || a == b {
            return b;
        }
        if b == t {
            return a;
        }
        let (x, y) = if a < b { (a, b) } else { (b, a) };
        self.intern(Node::And(x, y))
    }

    pub fn or(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let (na, nb) = (self.not(a), self.not(b));
        let n = self.and(na, nb);
        self.not(n)
    }

    pub fn and_all(&mut self, items: impl IntoIterator<Item = NodeId>) -> NodeId {
        let mut acc = self.constant(true);
        for i in items {
            acc = self.and(acc, i);
        }
        acc
    }

    pub fn ite(&mut self, c: NodeId, t: NodeId, e: NodeId) -> NodeId {
        let a = self.and(c, t);
        let nc = self.not(c);
        let b = self.and(nc, e);
        self.or(a, b)
    }

    /// Input variables reachable from `root`.
    pub fn support(&self, root: NodeId) -> Vec<u32> {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![root];
        let mut out = Vec::new();
        while let Some(n) = stack.pop() {
            if std::mem::replace(&mut seen[n as usize], true) {
                continue;
            }
            match self.node(n) {
                Node::False => {}
                Node::Input(v) => out.push(v),
                Node::Not(a) => stack.push(a),
                Node::And(a, b) => stack.extend([a, b]),
            }
        }
        out.sort_unstable();
        out
    }

    /// Evaluates every node on 64 input patterns at once. `input` gives the
    /// bit pattern of each input variable.
    pub fn eval64(&self, input: impl Fn(u32) -> u64) -> Vec<u64> {
        let mut val: Vec<u64> = Vec::with_capacity(self.nodes.len());
        for n in &self.nodes {
            let v = match *n {
                Node::False => 0,
                Node::Input(x) => input(x),
                Node::Not(a) => !val[a as usize],
                Node::And(a, b) => val[a as usize] & val[b as usize],
            };
            val.push(v);
        }
        val
    }

    /// Rebuilds a graph from a node list, checking that operands precede users.
    pub fn from_nodes(nodes: Vec<Node>) -> Result<Aig, String> {
        let mut table = HashMap::new();
        for (i, n) in nodes.iter().enumerate() {
            let ok = match *n {
                Node::False | Node::Input(_) => true,
                Node::Not(a) => (a as usize) < i,
                Node::And(a, b) => (a as usize) < i && (b as usize) < i,
            };
            if !ok {
                return Err(format!("node {i} refers forward"));
            }
            table.entry(*n).or_insert(i as NodeId);
        }
        Ok(Aig { nodes, table })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplification_and_sharing() {
        let mut g = Aig::new();
        let x = g.input(1);
        let y = g.input(2);
        let nx = g.not(x);
        assert_eq!(g.not(nx), x);
        assert_eq!(g.and(x, nx), g.constant(false));
        let t = g.constant(true);
        assert_eq!(g.and(x, t), x);
        assert_eq!(g.and(x, y), g.and(y, x));
        let before = g.len();
        g.and(y, x);
        assert_eq!(g.len(), before);
    }

    #[test]
    fn ite_truth_table() {
        let mut g = Aig::new();
        let (c, t, e) = (g.input(1), g.input(2), g.input(3));
        let r = g.ite(c, t, e);
        let pats = [0b1111_0000u64, 0b1100_1100, 0b1010_1010];
        let val = g.eval64(|v| pats[v as usize - 1]);
        let want = (pats[0] & pats[1]) | (!pats[0] & pats[2]);
        assert_eq!(val[r as usize] & 0xff, want & 0xff);
        assert_eq!(g.support(r), vec![1, 2, 3]);
    }
}
