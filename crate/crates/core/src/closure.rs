//! Minimum-weight closure: minimize `Σ_{i ∈ A} v_i` over upper sets `A` of a
//! preorder, solved as an s-t minimum cut.
//!
//! Atoms with `v_i < 0` get a source arc of capacity `-v_i`, atoms with
//! `v_i > 0` a sink arc of capacity `v_i`, and every relation `i ⪯ j` an
//! infinite arc `i → j`. The source side of a minimum cut (minus the source)
//! is a minimizing upper set. Among all minimizers, the minimal one is the set
//! reachable from the source in the residual graph and the maximal one is the
//! set that cannot reach the sink.

use std::collections::VecDeque;

use crate::space::Preorder;

/// Which minimizer to return when several exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    /// Union of all minimizers.
    Maximal,
    /// Intersection of all minimizers.
    Minimal,
}

#[derive(Debug, Clone)]
pub struct ClosureSolution {
    /// `selected[a]` for each position `a` of the `members` slice passed to the solver.
    pub selected: Vec<bool>,
    /// `Σ v` over the selected members.
    pub objective: f64,
    /// Max-flow value; `objective + Σ_{v<0} |v|` equals it at optimality.
    pub flow: f64,
}

struct Arc {
    to: usize,
    cap: f64,
}

struct FlowNetwork {
    arcs: Vec<Arc>,
    adj: Vec<Vec<usize>>,
    eps: f64,
}

impl FlowNetwork {
    fn new(nodes: usize, eps: f64) -> Self {
        Self {
            arcs: Vec::new(),
            adj: vec![Vec::new(); nodes],
            eps,
        }
    }

    fn add_arc(&mut self, from: usize, to: usize, cap: f64) {
        self.adj[from].push(self.arcs.len());
        self.arcs.push(Arc { to, cap });
        self.adj[to].push(self.arcs.len());
        self.arcs.push(Arc { to: from, cap: 0.0 });
    }

    fn residual(&self, arc: usize) -> bool {
        self.arcs[arc].cap > self.eps
    }

    fn levels(&self, s: usize) -> Vec<usize> {
        let mut level = vec![usize::MAX; self.adj.len()];
        level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &a in &self.adj[u] {
                let v = self.arcs[a].to;
                if self.residual(a) && level[v] == usize::MAX {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        level
    }

    fn augment(
        &mut self,
        u: usize,
        t: usize,
        pushed: f64,
        level: &[usize],
        next: &mut [usize],
    ) -> f64 {
        if u == t {
            return pushed;
        }
        while next[u] < self.adj[u].len() {
            let a = self.adj[u][next[u]];
            let v = self.arcs[a].to;
            if self.residual(a) && level[v] == level[u] + 1 {
                let got = self.augment(v, t, pushed.min(self.arcs[a].cap), level, next);
                if got > self.eps {
                    self.arcs[a].cap -= got;
                    self.arcs[a ^ 1].cap += got;
                    return got;
                }
            }
            next[u] += 1;
        }
        0.0
    }

    /// Dinic's algorithm.
    fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let mut total = 0.0;
        loop {
            let level = self.levels(s);
            if level[t] == usize::MAX {
                return total;
            }
            let mut next = vec![0; self.adj.len()];
            loop {
                let got = self.augment(s, t, f64::INFINITY, &level, &mut next);
                if got <= self.eps {
                    break;
                }
                total += got;
            }
        }
    }

    fn reachable_from(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &a in &self.adj[u] {
                let v = self.arcs[a].to;
                if self.residual(a) && !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    }

    fn reaching(&self, t: usize) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        seen[t] = true;
        let mut queue = VecDeque::from([t]);
        while let Some(v) = queue.pop_front() {
            // arc u → v has residual capacity iff arcs[a ^ 1] (stored at v) does
            for &back in &self.adj[v] {
                let u = self.arcs[back].to;
                if self.residual(back ^ 1) && !seen[u] {
                    seen[u] = true;
                    queue.push_back(u);
                }
            }
        }
        seen
    }
}

/// Minimizes `Σ_{a ∈ A} v[a]` over subsets `A` of `members` that are upward
/// closed for `order` restricted to `members`. `v[a]` belongs to `members[a]`.
pub fn min_weight_closure(
    order: &Preorder,
    members: &[usize],
    v: &[f64],
    policy: Policy,
) -> ClosureSolution {
    assert_eq!(members.len(), v.len(), "one weight per member");
    let m = members.len();
    let scale: f64 = v.iter().map(|x| x.abs()).sum::<f64>();
    let eps = 1e-14 * (1.0 + scale);
    let (s, t) = (m, m + 1);
    let mut net = FlowNetwork::new(m + 2, eps);
    for (a, &va) in v.iter().enumerate() {
        if va < 0.0 {
            net.add_arc(s, a, -va);
        } else if va > 0.0 {
            net.add_arc(a, t, va);
        }
    }
    for (a, &i) in members.iter().enumerate() {
        for (b, &j) in members.iter().enumerate() {
            if a != b && order.leq(i, j) {
                net.add_arc(a, b, f64::INFINITY);
            }
        }
    }
    let flow = net.max_flow(s, t);
    let selected: Vec<bool> = match policy {
        Policy::Minimal => net.reachable_from(s)[..m].to_vec(),
        Policy::Maximal => net.reaching(t)[..m].iter().map(|r| !r).collect(),
    };
    let objective = v
        .iter()
        .zip(&selected)
        .filter(|(_, sel)| **sel)
        .map(|(x, _)| x)
        .sum();
    ClosureSolution {
        selected,
        objective,
        flow,
    }
}
