//! Time-varying doubly stochastic weight schedules, their validation, and the
//! consensus mixing step.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const DOUBLY_STOCHASTIC_TOL: f64 = 1e-9;

/// Square nonnegative weight matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl WeightMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Config("weight matrix needs at least one row".into()));
        }
        let mut entries = Vec::with_capacity(n * n);
        for (i, r) in rows.into_iter().enumerate() {
            if r.len() != n {
                return Err(Error::dim("weight matrix row", n, r.len()));
            }
            if let Some(w) = r.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
                return Err(Error::Config(format!("weight matrix row {i} has invalid entry {w}")));
            }
            entries.extend(r);
        }
        Ok(Self { n, entries })
    }

    pub fn identity(n: usize) -> Self {
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            entries[i * n + i] = 1.0;
        }
        Self { n, entries }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    /// Directed edges `(i, j)` with `w_ij > 0`, self-loops excluded.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| {
            (0..self.n).filter_map(move |j| (i != j && self.get(i, j) > 0.0).then_some((i, j)))
        })
    }

    pub fn min_nonzero(&self) -> Option<f64> {
        self.entries
            .iter()
            .copied()
            .filter(|w| *w > 0.0)
            .fold(None, |m, w| Some(m.map_or(w, |m: f64| m.min(w))))
    }
}

/// Undirected communication graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn from_edges(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("graph needs at least one node".into()));
        }
        let mut clean = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::Config(format!("edge ({a}, {b}) out of range for {n} nodes")));
            }
            if a == b {
                continue;
            }
            let e = (a.min(b), a.max(b));
            if !clean.contains(&e) {
                clean.push(e);
            }
        }
        Ok(Self { n, edges: clean })
    }

    pub fn ring(n: usize) -> Result<Self> {
        Self::from_edges(n, (0..n).map(|i| (i, (i + 1) % n)).collect())
    }

    pub fn path(n: usize) -> Result<Self> {
        Self::from_edges(n, (1..n).map(|i| (i - 1, i)).collect())
    }

    pub fn star(n: usize) -> Result<Self> {
        Self::from_edges(n, (1..n).map(|i| (0, i)).collect())
    }

    pub fn complete(n: usize) -> Result<Self> {
        Self::from_edges(
            n,
            (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect(),
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(a, b) in &self.edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    /// `w_ij = 1 / (1 + max(deg_i, deg_j))` on edges, remainder on the diagonal.
    pub fn metropolis(&self) -> WeightMatrix {
        let n = self.n;
        let deg = self.degrees();
        let mut w = vec![0.0; n * n];
        for &(a, b) in &self.edges {
            let v = 1.0 / (1.0 + deg[a].max(deg[b]) as f64);
            w[a * n + b] = v;
            w[b * n + a] = v;
        }
        for i in 0..n {
            let off: f64 = (0..n).filter(|j| *j != i).map(|j| w[i * n + j]).sum();
            w[i * n + i] = 1.0 - off;
        }
        WeightMatrix { n, entries: w }
    }
}

/// A deterministic generator `t -> W(t)`.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightSchedule {
    /// Same matrix every step.
    Static { matrix: WeightMatrix },
    /// Step `t` averages the ring edge `(t mod N, t+1 mod N)` with weight 1/2.
    RingCycle { n: usize },
    /// Step `t` averages one uniformly random pair, a pure function of `(seed, t)`.
    PairwiseGossip { n: usize, seed: u64 },
    /// No communication; never connected for N > 1.
    Identity { n: usize },
}

impl WeightSchedule {
    pub fn metropolis(graph: &Graph) -> Self {
        WeightSchedule::Static {
            matrix: graph.metropolis(),
        }
    }

    pub fn n_agents(&self) -> usize {
        match self {
            WeightSchedule::Static { matrix } => matrix.n(),
            WeightSchedule::RingCycle { n }
            | WeightSchedule::PairwiseGossip { n, .. }
            | WeightSchedule::Identity { n } => *n,
        }
    }

    pub fn weights_at(&self, t: usize) -> WeightMatrix {
        match self {
            WeightSchedule::Static { matrix } => matrix.clone(),
            WeightSchedule::Identity { n } => WeightMatrix::identity(*n),
            WeightSchedule::RingCycle { n } => {
                let n = *n;
                if n == 1 {
                    return WeightMatrix::identity(1);
                }
                let i = t % n;
                pair_average(n, i, (i + 1) % n)
            }
            WeightSchedule::PairwiseGossip { n, seed } => {
                let n = *n;
                if n == 1 {
                    return WeightMatrix::identity(1);
                }
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                rng.set_stream(t as u64);
                let i = rng.random_range(0..n);
                let mut j = rng.random_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                pair_average(n, i, j)
            }
        }
    }

    /// Smallest nonzero weight the family can produce.
    pub fn w_min(&self) -> f64 {
        match self {
            WeightSchedule::Static { matrix } => matrix.min_nonzero().unwrap_or(0.0),
            WeightSchedule::RingCycle { n } | WeightSchedule::PairwiseGossip { n, .. } => {
                if *n == 1 {
                    1.0
                } else {
                    0.5
                }
            }
            WeightSchedule::Identity { .. } => 1.0,
        }
    }

    /// Connectivity window the family is designed for, when it has one.
    pub fn natural_q(&self) -> Option<usize> {
        match self {
            WeightSchedule::Static { .. } => Some(1),
            WeightSchedule::RingCycle { n } => Some((*n).max(1)),
            WeightSchedule::PairwiseGossip { .. } | WeightSchedule::Identity { .. } => None,
        }
    }
}

fn pair_average(n: usize, i: usize, j: usize) -> WeightMatrix {
    let mut w = WeightMatrix::identity(n);
    w.entries[i * n + i] = 0.5;
    w.entries[j * n + j] = 0.5;
    w.entries[i * n + j] = 0.5;
    w.entries[j * n + i] = 0.5;
    w
}

#[derive(Debug, Clone, PartialEq)]
pub struct StochasticityReport {
    pub row_sums: Vec<f64>,
    pub col_sums: Vec<f64>,
    pub max_row_deviation: f64,
    pub max_col_deviation: f64,
    pub min_nonzero: Option<f64>,
    pub passed: bool,
}

pub fn check_doubly_stochastic(w: &WeightMatrix, tol: f64) -> StochasticityReport {
    let n = w.n();
    let row_sums: Vec<f64> = (0..n).map(|i| w.row(i).iter().sum()).collect();
    let col_sums: Vec<f64> = (0..n).map(|j| (0..n).map(|i| w.get(i, j)).sum()).collect();
    let dev = |s: &[f64]| s.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
    let max_row_deviation = dev(&row_sums);
    let max_col_deviation = dev(&col_sums);
    StochasticityReport {
        passed: max_row_deviation <= tol && max_col_deviation <= tol,
        row_sums,
        col_sums,
        max_row_deviation,
        max_col_deviation,
        min_nonzero: w.min_nonzero(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConnectivityReport {
    pub q: usize,
    pub windows_checked: usize,
    /// Start index `k` of the first window `[k, k+Q)` whose union graph is not strongly connected.
    pub first_failure: Option<usize>,
}

impl ConnectivityReport {
    pub fn passed(&self) -> bool {
        self.first_failure.is_none()
    }
}

/// Strong connectivity of every union graph over `Q` consecutive steps in `[0, horizon)`.
pub fn check_q_connectivity(
    schedule: &WeightSchedule,
    q: usize,
    horizon: usize,
) -> Result<ConnectivityReport> {
    if q == 0 {
        return Err(Error::Config("connectivity window Q must be >= 1".into()));
    }
    if horizon < q {
        return Err(Error::Config(format!("horizon {horizon} shorter than Q = {q}")));
    }
    let n = schedule.n_agents();
    let edge_sets: Vec<Vec<(usize, usize)>> = (0..horizon)
        .map(|t| schedule.weights_at(t).edges().collect())
        .collect();
    let windows = horizon - q + 1;
    for k in 0..windows {
        let mut adj = vec![Vec::new(); n];
        for edges in &edge_sets[k..k + q] {
            for &(i, j) in edges {
                adj[i].push(j);
            }
        }
        if !strongly_connected(&adj) {
            return Ok(ConnectivityReport {
                q,
                windows_checked: k + 1,
                first_failure: Some(k),
            });
        }
    }
    Ok(ConnectivityReport {
        q,
        windows_checked: windows,
        first_failure: None,
    })
}

/// Every node reachable from node 0 in the graph and in its transpose.
pub fn strongly_connected(adj: &[Vec<usize>]) -> bool {
    let n = adj.len();
    if n <= 1 {
        return true;
    }
    let mut transpose = vec![Vec::new(); n];
    for (i, out) in adj.iter().enumerate() {
        for &j in out {
            transpose[j].push(i);
        }
    }
    reaches_all(adj) && reaches_all(&transpose)
}

fn reaches_all(adj: &[Vec<usize>]) -> bool {
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Geometric mixing rate `(1 - w_min / (4 N^2))^(1/Q)` for Q-connected doubly stochastic schedules.
pub fn mixing_constant(n: usize, w_min: f64, q: usize) -> Result<f64> {
    if n == 0 || q == 0 {
        return Err(Error::Config("mixing constant needs N >= 1 and Q >= 1".into()));
    }
    if !(w_min > 0.0 && w_min <= 1.0) {
        return Err(Error::Assumption {
            assumption: "Assumption 3",
            detail: format!("w_min = {w_min} must lie in (0, 1]"),
        });
    }
    let n = n as f64;
    Ok((1.0 - w_min / (4.0 * n * n)).powf(1.0 / q as f64))
}

/// `out_i = sum_j W_ij * states_j`
pub fn consensus_mix(w: &WeightMatrix, states: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    if states.len() != w.n() {
        return Err(Error::dim("consensus states", w.n(), states.len()));
    }
    let k = states.first().map_or(0, Vec::len);
    if let Some(s) = states.iter().find(|s| s.len() != k) {
        return Err(Error::dim("consensus state length", k, s.len()));
    }
    Ok((0..w.n()).map(|i| mix_row(w.row(i), states, k)).collect())
}

pub(crate) fn mix_row(row: &[f64], states: &[Vec<f64>], k: usize) -> Vec<f64> {
    let mut out = vec![0.0; k];
    for (wij, s) in row.iter().zip(states) {
        if *wij != 0.0 {
            crate::linalg::axpy(*wij, s, &mut out);
        }
    }
    out
}
