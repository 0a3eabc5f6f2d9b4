//! Coupled logistic-map generators with ground-truth structure.
//!
//! Every variable follows
//! `v_{i,t+1} = v_{i,t} (γ_i − γ_i v_{i,t} − Σ_j β_{ji} v_{j,t}) + ε_{i,t}`
//! where `β_{ji}` is the strength of `j`'s influence on `i`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::series::TimeSeries;

/// Growth rates of the three-variable benchmark `(x, y, z)`.
pub const GAMMA3: [f64; 3] = [3.7, 3.72, 3.78];
pub const DEFAULT_BURN_IN: usize = 100;
const NOISE_RETRIES: usize = 100;
const MAX_RESTARTS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticSystemSpec {
    pub gamma: Vec<f64>,
    /// `beta[(i, j)]` multiplies `v_i` inside `v_j`'s update.
    pub beta: Matrix,
    pub noise_sd: f64,
    pub length: usize,
    pub burn_in: usize,
    pub seed: u64,
    /// Initial state; drawn from `U(0.1, 0.9)` when absent.
    pub init: Option<Vec<f64>>,
}

impl LogisticSystemSpec {
    pub fn validate(&self) -> Result<()> {
        let n = self.gamma.len();
        if n == 0 {
            return Err(Error::InvalidConfig("system needs at least one variable".into()));
        }
        if self.beta.shape() != (n, n) {
            return Err(Error::Shape {
                context: "LogisticSystemSpec::beta",
                expected: (n, n),
                found: self.beta.shape(),
            });
        }
        if let Some(g) = self.gamma.iter().find(|g| !(**g > 0.0 && **g <= 4.0)) {
            return Err(Error::InvalidConfig(format!("growth rate {g} outside (0, 4]")));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::InvalidConfig("noise_sd must be finite and non-negative".into()));
        }
        if self.length < 1 {
            return Err(Error::InvalidConfig("length must be at least 1".into()));
        }
        if !self.beta.is_finite() {
            return Err(Error::InvalidConfig("coupling matrix must be finite".into()));
        }
        if let Some(init) = &self.init {
            if init.len() != n || init.iter().any(|v| !(*v > 0.0 && *v < 1.0)) {
                return Err(Error::InvalidConfig(format!(
                    "init must hold {n} values in (0, 1)"
                )));
            }
        }
        Ok(())
    }
}

/// Direct-cause and confounded-pair matrices for a simulated system.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub names: Vec<String>,
    /// `causal[i][j]`: `i` directly drives `j`.
    pub causal: Vec<Vec<bool>>,
    /// `confounded[i][j]`: `i` and `j` share a parent and neither drives the other.
    pub confounded: Vec<Vec<bool>>,
}

impl GroundTruth {
    pub fn from_causal(names: Vec<String>, causal: Vec<Vec<bool>>) -> Self {
        let n = causal.len();
        let mut confounded = vec![vec![false; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i == j || causal[i][j] || causal[j][i] {
                    continue;
                }
                confounded[i][j] = (0..n).any(|k| k != i && k != j && causal[k][i] && causal[k][j]);
            }
        }
        Self {
            names,
            causal,
            confounded,
        }
    }

    /// Whether `from` reaches `to` through a directed path.
    pub fn reaches(&self, from: usize, to: usize) -> bool {
        let n = self.causal.len();
        let mut seen = vec![false; n];
        let mut stack = vec![from];
        while let Some(v) = stack.pop() {
            for w in 0..n {
                if self.causal[v][w] && !seen[w] {
                    if w == to {
                        return true;
                    }
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        false
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub series: TimeSeries,
    pub truth: GroundTruth,
    /// Non-fatal validation notes, e.g. strong inbound coupling.
    pub warnings: Vec<String>,
    pub gamma: Vec<f64>,
    pub restarts: usize,
}

/// Iterates a coupled logistic system. When a step leaves `(0, 1)` its
/// noise is redrawn up to 100 times; if that fails the trajectory restarts
/// from a fresh initial state, at most 20 times.
pub fn simulate(spec: &LogisticSystemSpec, names: Vec<String>) -> Result<(TimeSeries, usize)> {
    spec.validate()?;
    let n = spec.gamma.len();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut init = match &spec.init {
        Some(v) => v.clone(),
        None => draw_init(&mut rng, n),
    };
    let total = spec.burn_in + spec.length;
    let mut out = Vec::with_capacity(spec.length * n);
    let mut next = vec![0.0; n];
    for restart in 0..=MAX_RESTARTS {
        out.clear();
        let mut state = init.clone();
        if spec.burn_in == 0 {
            out.extend_from_slice(&state);
        }
        let mut ok = true;
        // step k produces the state at time k + 1
        for k in 0..total - 1 {
            if !step(spec, &state, &mut next, &mut rng) {
                ok = false;
                break;
            }
            core::mem::swap(&mut state, &mut next);
            if k + 1 >= spec.burn_in {
                out.extend_from_slice(&state);
            }
        }
        if ok {
            let values = Matrix::from_vec(spec.length, n, out)?;
            return Ok((TimeSeries::single(names, values)?, restart));
        }
        init = draw_init(&mut rng, n);
    }
    Err(Error::Unstable {
        restarts: MAX_RESTARTS,
    })
}

fn draw_init(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.1..0.9)).collect()
}

/// One update; false when every noise redraw left `(0, 1)`.
fn step(spec: &LogisticSystemSpec, state: &[f64], next: &mut [f64], rng: &mut ChaCha8Rng) -> bool {
    let n = state.len();
    let mut drift = vec![0.0; n];
    for i in 0..n {
        let mut inner = spec.gamma[i] - spec.gamma[i] * state[i];
        for j in 0..n {
            if j != i {
                inner -= spec.beta[(j, i)] * state[j];
            }
        }
        drift[i] = state[i] * inner;
    }
    for _ in 0..NOISE_RETRIES {
        for i in 0..n {
            let e: f64 = rng.sample(StandardNormal);
            next[i] = drift[i] + spec.noise_sd * e;
        }
        if next.iter().all(|v| *v > 0.0 && *v < 1.0) {
            return true;
        }
    }
    false
}

/// The four coupling regimes of the three-variable benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum System3 {
    /// x drives y.
    Causal = 1,
    /// y drives x.
    Reverse = 2,
    /// z drives both x and y.
    Confounded = 3,
    /// No coupling.
    Independent = 4,
}

impl System3 {
    pub fn from_id(id: u8) -> Result<Self> {
        match id {
            1 => Ok(Self::Causal),
            2 => Ok(Self::Reverse),
            3 => Ok(Self::Confounded),
            4 => Ok(Self::Independent),
            _ => Err(Error::InvalidConfig(format!("system id must be 1..=4, got {id}"))),
        }
    }

    pub fn id(self) -> u8 {
        self as u8
    }

    /// Coupling matrix over `(x, y, z)`.
    pub fn coupling(self, strength: f64) -> Matrix {
        let mut b = Matrix::zeros(3, 3);
        match self {
            Self::Causal => b[(0, 1)] = strength,
            Self::Reverse => b[(1, 0)] = strength,
            Self::Confounded => {
                b[(2, 0)] = strength;
                b[(2, 1)] = strength;
            }
            Self::Independent => {}
        }
        b
    }
}

/// Three-variable benchmark with columns `x, y, z`.
pub fn simulate3(
    system: System3,
    strength: f64,
    noise_sd: f64,
    length: usize,
    seed: u64,
) -> Result<Simulation> {
    if !(strength >= 0.0) {
        return Err(Error::InvalidConfig("strength must be non-negative".into()));
    }
    let spec = LogisticSystemSpec {
        gamma: GAMMA3.to_vec(),
        beta: system.coupling(strength),
        noise_sd,
        length,
        burn_in: DEFAULT_BURN_IN,
        seed,
        init: None,
    };
    let names: Vec<String> = ["x", "y", "z"].iter().map(|s| s.to_string()).collect();
    let (series, restarts) = simulate(&spec, names.clone())?;
    let truth = truth_from_coupling(names, &spec.beta);
    Ok(Simulation {
        series,
        truth,
        warnings: Vec::new(),
        gamma: spec.gamma,
        restarts,
    })
}

fn truth_from_coupling(names: Vec<String>, beta: &Matrix) -> GroundTruth {
    let n = beta.rows();
    let causal = (0..n)
        .map(|i| (0..n).map(|j| i != j && beta[(i, j)] != 0.0).collect())
        .collect();
    GroundTruth::from_causal(names, causal)
}

/// Network of logistic maps; `adjacency[i][j]` means `i → j`. Growth rates
/// are drawn from `U(3.6, 3.8)`.
pub fn simulate_network(
    adjacency: &[Vec<bool>],
    strength: f64,
    noise_sd: f64,
    length: usize,
    seed: u64,
) -> Result<Simulation> {
    let n = adjacency.len();
    if n == 0 || adjacency.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidConfig("adjacency must be a non-empty square matrix".into()));
    }
    if (0..n).any(|i| adjacency[i][i]) {
        return Err(Error::InvalidConfig("adjacency diagonal must be zero".into()));
    }
    if !(strength >= 0.0) {
        return Err(Error::InvalidConfig("strength must be non-negative".into()));
    }
    let mut warnings = Vec::new();
    for j in 0..n {
        let inbound = strength * (0..n).filter(|&i| adjacency[i][j]).count() as f64;
        if inbound > 0.5 {
            warnings.push(format!(
                "node {} has total inbound coupling {inbound:.3} > 0.5; trajectories may escape (0, 1)",
                j + 1
            ));
        }
    }
    // growth rates use their own stream so they do not depend on `length`
    let mut grng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let gamma: Vec<f64> = (0..n).map(|_| grng.random_range(3.6..3.8)).collect();
    let mut beta = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if adjacency[i][j] {
                beta[(i, j)] = strength;
            }
        }
    }
    let spec = LogisticSystemSpec {
        gamma: gamma.clone(),
        beta,
        noise_sd,
        length,
        burn_in: DEFAULT_BURN_IN,
        seed,
        init: None,
    };
    let names: Vec<String> = (1..=n).map(|i| format!("v{i}")).collect();
    let (series, restarts) = simulate(&spec, names.clone())?;
    let causal = adjacency.to_vec();
    Ok(Simulation {
        series,
        truth: GroundTruth::from_causal(names, causal),
        warnings,
        gamma,
        restarts,
    })
}

/// Random directed graph on `n` nodes with `edges` edges and in-degree at
/// most `max_in_degree`, no self loops.
pub fn random_adjacency(n: usize, edges: usize, max_in_degree: usize, seed: u64) -> Result<Vec<Vec<bool>>> {
    if n < 2 || edges > n * max_in_degree.min(n - 1) {
        return Err(Error::InvalidConfig(format!(
            "cannot place {edges} edges on {n} nodes with in-degree ≤ {max_in_degree}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut adj = vec![vec![false; n]; n];
    let mut indeg = vec![0usize; n];
    let mut placed = 0;
    while placed < edges {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        if i == j || adj[i][j] || adj[j][i] || indeg[j] >= max_in_degree {
            continue;
        }
        adj[i][j] = true;
        indeg[j] += 1;
        placed += 1;
    }
    Ok(adj)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_evaluated_first_step() {
        let spec = LogisticSystemSpec {
            gamma: GAMMA3.to_vec(),
            beta: Matrix::zeros(3, 3),
            noise_sd: 0.0,
            length: 3,
            burn_in: 0,
            seed: 1,
            init: Some(vec![0.4, 0.5, 0.6]),
        };
        let (ts, _) = simulate(&spec, ["x", "y", "z"].iter().map(|s| s.to_string()).collect()).unwrap();
        assert_eq!(ts.values()[(0, 0)], 0.4);
        assert!((ts.values()[(1, 0)] - 0.888).abs() < 1e-15);
        assert!((ts.values()[(1, 1)] - 0.5 * (3.72 - 3.72 * 0.5)).abs() < 1e-15);
    }

    #[test]
    fn zero_strength_matches_independent() {
        let a = simulate3(System3::Causal, 0.0, 0.001, 300, 5).unwrap();
        let b = simulate3(System3::Independent, 0.35, 0.001, 300, 5).unwrap();
        assert_eq!(a.series.values(), b.series.values());
    }

    #[test]
    fn deterministic_given_seed() {
        let a = simulate3(System3::Confounded, 0.35, 0.005, 500, 9).unwrap();
        let b = simulate3(System3::Confounded, 0.35, 0.005, 500, 9).unwrap();
        let c = simulate3(System3::Confounded, 0.35, 0.005, 500, 10).unwrap();
        assert_eq!(a.series, b.series);
        assert_ne!(a.series, c.series);
    }

    #[test]
    fn emitted_values_in_unit_interval() {
        for seed in 0..5 {
            let s = simulate3(System3::Causal, 0.35, 0.015, 2000, seed).unwrap();
            assert!(s.series.values().as_slice().iter().all(|v| *v > 0.0 && *v < 1.0));
        }
    }

    #[test]
    fn truth_of_regimes() {
        let s = simulate3(System3::Confounded, 0.35, 0.001, 50, 0).unwrap();
        assert!(s.truth.causal[2][0] && s.truth.causal[2][1]);
        assert!(s.truth.confounded[0][1] && s.truth.confounded[1][0]);
        assert!(!s.truth.causal[0][1]);
        let s = simulate3(System3::Causal, 0.35, 0.001, 50, 0).unwrap();
        assert!(s.truth.causal[0][1] && !s.truth.causal[1][0]);
        assert!(!s.truth.confounded[0][1]);
    }

    #[test]
    fn chain_truth() {
        let adj = vec![
            vec![false, true, false],
            vec![false, false, true],
            vec![false, false, false],
        ];
        let s = simulate_network(&adj, 0.2, 0.001, 100, 3).unwrap();
        assert!(s.truth.causal[0][1] && s.truth.causal[1][2] && !s.truth.causal[0][2]);
        assert!(s.truth.reaches(0, 2));
        assert!(!s.truth.reaches(2, 0));
        assert!(s.warnings.is_empty());
        assert_eq!(s.series.names()[0], "v1");
    }

    #[test]
    fn empty_network_is_independent_maps() {
        let adj = vec![vec![false; 4]; 4];
        let s = simulate_network(&adj, 0.3, 0.0, 50, 8).unwrap();
        let v = s.series.values();
        for t in 0..49 {
            for i in 0..4 {
                let x = v[(t, i)];
                assert_eq!(v[(t + 1, i)], x * (s.gamma[i] - s.gamma[i] * x));
            }
        }
    }

    #[test]
    fn strong_inbound_coupling_warns() {
        let mut adj = vec![vec![false; 3]; 3];
        adj[0][2] = true;
        adj[1][2] = true;
        let s = simulate_network(&adj, 0.3, 0.001, 100, 1);
        assert!(s.map(|s| !s.warnings.is_empty()).unwrap_or(true));
    }

    #[test]
    fn invalid_inputs() {
        assert!(System3::from_id(5).is_err());
        assert!(simulate3(System3::Causal, -1.0, 0.001, 10, 0).is_err());
        assert!(simulate3(System3::Causal, 0.3, 0.001, 0, 0).is_err());
        let mut adj = vec![vec![false; 2]; 2];
        adj[0][0] = true;
        assert!(simulate_network(&adj, 0.1, 0.0, 10, 0).is_err());
    }

    #[test]
    fn random_adjacency_respects_limits() {
        let adj = random_adjacency(10, 9, 1, 4).unwrap();
        let edges: usize = adj.iter().map(|r| r.iter().filter(|b| **b).count()).sum();
        assert_eq!(edges, 9);
        for j in 0..10 {
            assert!(!adj[j][j]);
            assert!((0..10).filter(|&i| adj[i][j]).count() <= 1);
        }
    }
}
