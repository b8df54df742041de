//! Primal network simplex for uncapacitated transshipment with integer data.
//!
//! The spanning tree is kept strongly feasible (zero-flow tree arcs point
//! away from the root) and the leaving arc is chosen by Cunningham's rule,
//! which rules out cycling. Entering arcs are found by block search.

#[derive(Debug, Clone, Copy)]
pub(crate) struct Arc {
    pub source: usize,
    pub target: usize,
    pub cost: i64,
}

#[derive(Debug, Clone)]
pub(crate) struct NetworkSimplex {
    arcs: Vec<Arc>,
    flow: Vec<i64>,
    parent: Vec<usize>,
    pred: Vec<usize>,
    depth: Vec<usize>,
    children: Vec<Vec<usize>>,
    pi: Vec<i64>,
    next_arc: usize,
    pub pivots: usize,
}

const NONE: usize = usize::MAX;

impl NetworkSimplex {
    /// Star tree at `root`, which must be joined to every other node by arcs
    /// in both directions: `up[v]` is `v → root`, `down[v]` is `root → v`.
    pub fn new(supply: &[i64], root: usize, arcs: Vec<Arc>, up: &[usize], down: &[usize]) -> Self {
        let n = supply.len();
        let mut s = Self {
            flow: vec![0; arcs.len()],
            arcs,
            parent: vec![NONE; n],
            pred: vec![NONE; n],
            depth: vec![0; n],
            children: vec![Vec::new(); n],
            pi: vec![0; n],
            next_arc: 0,
            pivots: 0,
        };
        for v in 0..n {
            if v == root {
                continue;
            }
            let (arc, amount) = if supply[v] > 0 { (up[v], supply[v]) } else { (down[v], -supply[v]) };
            s.parent[v] = root;
            s.pred[v] = arc;
            s.depth[v] = 1;
            s.flow[arc] = amount;
            s.children[root].push(v);
            let a = s.arcs[arc];
            s.pi[v] = if a.source == root { a.cost } else { -a.cost };
        }
        s
    }

    /// Adds non-basic arcs; the current tree stays a feasible basis.
    pub fn add_arcs(&mut self, arcs: impl IntoIterator<Item = Arc>) {
        for a in arcs {
            self.arcs.push(a);
            self.flow.push(0);
        }
    }

    /// `c(u→v) + π(u) − π(v)`; the dual variable of node `v` is `−π(v)`.
    #[inline]
    fn reduced_cost(&self, a: usize) -> i64 {
        let arc = &self.arcs[a];
        arc.cost + self.pi[arc.source] - self.pi[arc.target]
    }

    pub fn potentials(&self) -> &[i64] {
        &self.pi
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn flows(&self) -> &[i64] {
        &self.flow
    }

    pub fn objective(&self) -> i128 {
        self.arcs.iter().zip(&self.flow).map(|(a, &f)| a.cost as i128 * f as i128).sum()
    }

    fn find_entering(&mut self) -> Option<usize> {
        let m = self.arcs.len();
        if m == 0 {
            return None;
        }
        let block = ((m as f64).sqrt().ceil() as usize).max(10);
        let mut best = NONE;
        let mut best_rc = 0i64;
        let mut scanned = 0;
        let mut in_block = 0;
        let mut a = self.next_arc % m;
        while scanned < m {
            let rc = self.reduced_cost(a);
            if rc < best_rc {
                best_rc = rc;
                best = a;
            }
            scanned += 1;
            in_block += 1;
            a = if a + 1 == m { 0 } else { a + 1 };
            if in_block == block {
                if best != NONE {
                    self.next_arc = a;
                    return Some(best);
                }
                in_block = 0;
            }
        }
        (best != NONE).then(|| {
            self.next_arc = a;
            best
        })
    }

    /// Pivots until every reduced cost is nonnegative.
    pub fn solve(&mut self) {
        while let Some(entering) = self.find_entering() {
            self.pivot(entering);
            self.pivots += 1;
        }
    }

    fn pivot(&mut self, entering: usize) {
        let Arc { source: s, target: t, .. } = self.arcs[entering];

        // Apex of the cycle formed with the tree path t → s.
        let (mut u, mut v) = (s, t);
        while u != v {
            if self.depth[u] >= self.depth[v] {
                u = self.parent[u];
            } else {
                v = self.parent[v];
            }
        }
        let apex = u;

        // Cycle orientation: apex → s, entering arc, t → apex. The t side is
        // traversed upwards, so a tree arc there is backward when it points
        // from parent to child; on the s side when it points child to parent.
        // Ties go to the last blocking arc in cycle order.
        let mut delta = i64::MAX;
        let mut leaving_node = NONE;
        let mut on_s_side = false;
        let mut w = s;
        while w != apex {
            let a = self.pred[w];
            if self.arcs[a].source == w && self.flow[a] < delta {
                delta = self.flow[a];
                leaving_node = w;
                on_s_side = true;
            }
            w = self.parent[w];
        }
        let mut w = t;
        while w != apex {
            let a = self.pred[w];
            if self.arcs[a].target == w && self.flow[a] <= delta {
                delta = self.flow[a];
                leaving_node = w;
                on_s_side = false;
            }
            w = self.parent[w];
        }
        debug_assert!(leaving_node != NONE, "uncapacitated network with a negative cycle");

        if delta > 0 {
            self.flow[entering] += delta;
            let mut w = s;
            while w != apex {
                let a = self.pred[w];
                if self.arcs[a].source == w {
                    self.flow[a] -= delta;
                } else {
                    self.flow[a] += delta;
                }
                w = self.parent[w];
            }
            let mut w = t;
            while w != apex {
                let a = self.pred[w];
                if self.arcs[a].target == w {
                    self.flow[a] -= delta;
                } else {
                    self.flow[a] += delta;
                }
                w = self.parent[w];
            }
        }

        // Re-hang the subtree cut off by the leaving arc below the entering
        // arc's other endpoint, reversing the path in between.
        let (new_child, new_parent) = if on_s_side { (s, t) } else { (t, s) };
        let mut v = new_child;
        let mut up_parent = new_parent;
        let mut up_arc = entering;
        loop {
            let old_parent = self.parent[v];
            let old_arc = self.pred[v];
            let siblings = &mut self.children[old_parent];
            let pos = siblings.iter().position(|&c| c == v).expect("tree links are consistent");
            siblings.swap_remove(pos);
            self.children[up_parent].push(v);
            self.parent[v] = up_parent;
            self.pred[v] = up_arc;
            if v == leaving_node {
                break;
            }
            up_parent = v;
            up_arc = old_arc;
            v = old_parent;
        }
        self.refresh_subtree(new_child);
    }

    fn refresh_subtree(&mut self, top: usize) {
        let mut stack = vec![top];
        while let Some(v) = stack.pop() {
            let p = self.parent[v];
            let a = self.arcs[self.pred[v]];
            self.pi[v] = if a.source == p { self.pi[p] + a.cost } else { self.pi[p] - a.cost };
            self.depth[v] = self.depth[p] + 1;
            stack.extend_from_slice(&self.children[v]);
        }
    }
}
