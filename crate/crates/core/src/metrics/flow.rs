//! Dinic max-flow on the bipartite transport graph source -> μ atoms -> ν atoms -> sink.

const SOURCE: usize = 0;
const SINK: usize = 1;

pub(crate) struct FlowResult {
    pub value: f64,
    /// μ atoms reachable from the source in the final residual graph.
    pub source_side: Vec<bool>,
}

struct Graph {
    to: Vec<u32>,
    cap: Vec<f64>,
    adj: Vec<Vec<u32>>,
}

impl Graph {
    fn new(nodes: usize) -> Self {
        Graph {
            to: Vec::new(),
            cap: Vec::new(),
            adj: vec![Vec::new(); nodes],
        }
    }

    fn add_edge(&mut self, u: usize, v: usize, c: f64) {
        let e = self.to.len() as u32;
        self.to.push(v as u32);
        self.cap.push(c);
        self.adj[u].push(e);
        self.to.push(u as u32);
        self.cap.push(0.0);
        self.adj[v].push(e + 1);
    }
}

/// Maximum flow where μ atom i may ship to ν atom j iff `edges[i]` contains j.
///
/// Residual capacities at or below `eps` count as saturated.
pub(crate) fn bipartite_max_flow(supply: &[f64], demand: &[f64], edges: &[Vec<u32>], eps: f64) -> FlowResult {
    let n = supply.len();
    let nodes = 2 + n + demand.len();
    let mut g = Graph::new(nodes);
    for (i, &w) in supply.iter().enumerate() {
        g.add_edge(SOURCE, 2 + i, w);
    }
    for (i, targets) in edges.iter().enumerate() {
        for &j in targets {
            g.add_edge(2 + i, 2 + n + j as usize, f64::INFINITY);
        }
    }
    for (j, &w) in demand.iter().enumerate() {
        g.add_edge(2 + n + j, SINK, w);
    }

    let mut value = 0.0;
    let mut level = vec![u32::MAX; nodes];
    let mut iter = vec![0usize; nodes];
    let mut queue = Vec::with_capacity(nodes);
    loop {
        bfs(&g, eps, &mut level, &mut queue);
        if level[SINK] == u32::MAX {
            break;
        }
        iter.iter_mut().for_each(|i| *i = 0);
        loop {
            let pushed = augment(&mut g, eps, &level, &mut iter);
            if pushed <= 0.0 {
                break;
            }
            value += pushed;
        }
    }
    bfs(&g, eps, &mut level, &mut queue);
    let source_side = (0..n).map(|i| level[2 + i] != u32::MAX).collect();
    FlowResult { value, source_side }
}

fn bfs(g: &Graph, eps: f64, level: &mut [u32], queue: &mut Vec<usize>) {
    level.iter_mut().for_each(|l| *l = u32::MAX);
    queue.clear();
    level[SOURCE] = 0;
    queue.push(SOURCE);
    let mut head = 0;
    while head < queue.len() {
        let u = queue[head];
        head += 1;
        for &e in &g.adj[u] {
            let v = g.to[e as usize] as usize;
            if g.cap[e as usize] > eps && level[v] == u32::MAX {
                level[v] = level[u] + 1;
                queue.push(v);
            }
        }
    }
}

/// Finds one augmenting path in the level graph and pushes its bottleneck.
fn augment(g: &mut Graph, eps: f64, level: &[u32], iter: &mut [usize]) -> f64 {
    let mut path: Vec<u32> = Vec::new();
    let mut u = SOURCE;
    loop {
        if u == SINK {
            let bottleneck = path.iter().map(|&e| g.cap[e as usize]).fold(f64::INFINITY, f64::min);
            for &e in &path {
                let e = e as usize;
                g.cap[e] -= bottleneck;
                g.cap[e ^ 1] += bottleneck;
            }
            return bottleneck;
        }
        let mut advanced = false;
        while iter[u] < g.adj[u].len() {
            let e = g.adj[u][iter[u]] as usize;
            let v = g.to[e] as usize;
            if g.cap[e] > eps && level[v] == level[u] + 1 {
                path.push(e as u32);
                u = v;
                advanced = true;
                break;
            }
            iter[u] += 1;
        }
        if !advanced {
            if u == SOURCE {
                return 0.0;
            }
            let e = path.pop().expect("non-source node has an incoming path edge") as usize;
            u = g.to[e ^ 1] as usize;
            iter[u] += 1;
        }
    }
}
