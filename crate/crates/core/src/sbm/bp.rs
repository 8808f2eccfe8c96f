//! Sparse belief propagation for the static SBM.
//!
//! Messages live on the directed slots of an [`Adjacency`]. With `c_ab = N p_ab`
//! the cavity update is
//!
//! ```text
//! ψ^{i→j}_r ∝ q_r exp(−h_r) Π_{ℓ ∈ ∂i \ j} Σ_s c_rs ψ^{ℓ→i}_s,
//! h_r = N⁻¹ Σ_ℓ Σ_s c_sr ψ^ℓ_s,
//! ```
//!
//! where the external field `h` stands in for the non-edges. Updates are
//! asynchronous, node by node, in a fresh random order every sweep. All
//! products are taken in log space with prefix/suffix sums, so zero affinities
//! never produce `0/0`.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::graph::Adjacency;
use crate::labels::Marginals;
use crate::params::{AffinityMatrix, Prior};
use crate::rng::seeded;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BpConfig {
    pub max_iterations: usize,
    /// Convergence threshold on the largest absolute message change in a sweep.
    pub convergence_tol: f64,
    /// Weight of the old message in the damped update, in `[0, 1)`.
    pub damping: f64,
    /// Amplitude of the multiplicative noise on the initial messages.
    pub random_init_amplitude: f64,
    pub seed: u64,
}

impl Default for BpConfig {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            convergence_tol: 1e-6,
            damping: 0.0,
            random_init_amplitude: 0.1,
            seed: 0,
        }
    }
}

impl BpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(invalid!("max_iterations must be at least 1"));
        }
        if !(self.convergence_tol > 0.0) {
            return Err(invalid!("convergence_tol must be positive"));
        }
        if !(0.0..1.0).contains(&self.damping) {
            return Err(invalid!("damping must lie in [0, 1)"));
        }
        if !(0.0..1.0).contains(&self.random_init_amplitude) {
            return Err(invalid!("random_init_amplitude must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Directed-edge message table, `k` values per slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Messages {
    k: usize,
    values: Vec<f64>,
}

impl Messages {
    pub fn k(&self) -> usize {
        self.k
    }

    /// Message `ψ^{i→j}` for the slot `i → j`.
    pub fn get(&self, slot: usize) -> &[f64] {
        &self.values[slot * self.k..(slot + 1) * self.k]
    }
}

#[derive(Debug, Clone)]
pub struct BpResult {
    pub marginals: Marginals,
    pub converged: bool,
    pub iterations: usize,
    /// Bethe free energy per node (`−log Z / N`).
    pub free_energy: f64,
    pub messages: Messages,
}

/// Runs BP to a fixed point (or `max_iterations`) on one snapshot.
pub fn bp_marginals(
    adjacency: &Adjacency,
    affinity: &AffinityMatrix,
    prior: &Prior,
    config: &BpConfig,
) -> Result<BpResult> {
    run(adjacency, affinity, prior, config, None)
}

/// Same as [`bp_marginals`], optionally warm-started from earlier messages.
pub(crate) fn run(
    adjacency: &Adjacency,
    affinity: &AffinityMatrix,
    prior: &Prior,
    config: &BpConfig,
    warm: Option<Messages>,
) -> Result<BpResult> {
    config.validate()?;
    let k = prior.k();
    if affinity.k() != k {
        return Err(invalid!("affinity is {0}×{0} but the prior has {1} groups", affinity.k(), k));
    }
    if affinity.entries().iter().all(|&p| p <= 0.0) {
        return Err(Error::ZeroAffinity);
    }
    let mut state = State::new(adjacency, affinity, prior, config, warm);
    let mut rng = seeded(config.seed ^ 0x5851_F42D_4C95_7F2D);
    let mut order: Vec<usize> = (0..adjacency.n_nodes()).collect();

    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iterations {
        iterations += 1;
        order.shuffle(&mut rng);
        let mut max_change: f64 = 0.0;
        for &i in &order {
            max_change = max_change.max(state.update_node(i, config.damping));
        }
        if max_change < config.convergence_tol {
            converged = true;
            break;
        }
    }
    let free_energy = state.free_energy();
    Ok(BpResult {
        marginals: Marginals::from_raw(k, state.marginals),
        converged,
        iterations,
        free_energy,
        messages: Messages {
            k,
            values: state.messages,
        },
    })
}

struct State<'a> {
    adj: &'a Adjacency,
    k: usize,
    n: f64,
    /// `c_ab = N p_ab`, row-major.
    c: Vec<f64>,
    log_prior: Vec<f64>,
    messages: Vec<f64>,
    marginals: Vec<f64>,
    field: Vec<f64>,
    // scratch
    log_in: Vec<f64>,
    prefix: Vec<f64>,
    suffix: Vec<f64>,
    buf: Vec<f64>,
    fresh: Vec<f64>,
}

impl<'a> State<'a> {
    fn new(
        adj: &'a Adjacency,
        affinity: &AffinityMatrix,
        prior: &Prior,
        config: &BpConfig,
        warm: Option<Messages>,
    ) -> Self {
        let k = prior.k();
        let n = adj.n_nodes() as f64;
        let c: Vec<f64> = affinity.entries().iter().map(|p| p * n).collect();
        let log_prior = prior.weights().iter().map(|&q| libm::log(q)).collect();
        let messages = match warm {
            Some(m) if m.k == k && m.values.len() == adj.n_slots() * k => m.values,
            _ => {
                let mut rng = seeded(config.seed);
                let mut values = vec![0.0; adj.n_slots() * k];
                for msg in values.chunks_mut(k) {
                    for (r, v) in msg.iter_mut().enumerate() {
                        let noise = 1.0 + config.random_init_amplitude * (2.0 * rng.random::<f64>() - 1.0);
                        *v = prior[r] * noise;
                    }
                    normalize(msg);
                }
                values
            }
        };
        let mut state = Self {
            adj,
            k,
            n,
            c,
            log_prior,
            messages,
            marginals: vec![0.0; adj.n_nodes() * k],
            field: vec![0.0; k],
            log_in: Vec::new(),
            prefix: Vec::new(),
            suffix: Vec::new(),
            buf: vec![0.0; k],
            fresh: vec![0.0; k],
        };
        state.init_marginals(prior);
        state
    }

    /// Marginals from the full neighbourhood product, with the external field
    /// taken from the initial messages' prior-weighted guess.
    fn init_marginals(&mut self, prior: &Prior) {
        let k = self.k;
        // Start the field from the prior, then refine once from the marginals.
        for r in 0..k {
            self.field[r] = (0..k).map(|s| self.c[s * k + r] * prior[s]).sum();
        }
        for i in 0..self.adj.n_nodes() {
            self.incoming_logs(i);
            let deg = self.adj.degree(i);
            let mut total = vec![0.0; k];
            for r in 0..k {
                total[r] = self.log_prior[r] - self.field[r] + (0..deg).map(|e| self.log_in[e * k + r]).sum::<f64>();
            }
            softmax_into(&total, &mut self.marginals[i * k..(i + 1) * k], &self.log_prior);
        }
        self.recompute_field();
    }

    fn recompute_field(&mut self) {
        let k = self.k;
        let mut mass = vec![0.0; k];
        for row in self.marginals.chunks(k) {
            for (m, v) in mass.iter_mut().zip(row) {
                *m += v;
            }
        }
        for r in 0..k {
            self.field[r] = (0..k).map(|s| self.c[s * k + r] * mass[s]).sum::<f64>() / self.n;
        }
    }

    /// Fills `log_in[e * k + r] = ln Σ_s c_rs ψ^{ℓ→i}_s` for every neighbour slot.
    fn incoming_logs(&mut self, i: usize) {
        let k = self.k;
        let slots = self.adj.slots(i);
        self.log_in.clear();
        for e in slots {
            let rev = self.adj.reverse(e);
            let msg = &self.messages[rev * k..(rev + 1) * k];
            for r in 0..k {
                let s: f64 = (0..k).map(|s| self.c[r * k + s] * msg[s]).sum();
                self.log_in.push(libm::log(s));
            }
        }
    }

    /// Recomputes all messages leaving `i` and its marginal; returns the
    /// largest absolute message change.
    fn update_node(&mut self, i: usize, damping: f64) -> f64 {
        let k = self.k;
        let deg = self.adj.degree(i);
        self.incoming_logs(i);

        // prefix[m] = Σ_{e<m} log_in[e], suffix[m] = Σ_{e>=m} log_in[e]
        self.prefix.clear();
        self.prefix.resize((deg + 1) * k, 0.0);
        self.suffix.clear();
        self.suffix.resize((deg + 1) * k, 0.0);
        for m in 0..deg {
            for r in 0..k {
                self.prefix[(m + 1) * k + r] = self.prefix[m * k + r] + self.log_in[m * k + r];
            }
        }
        for m in (0..deg).rev() {
            for r in 0..k {
                self.suffix[m * k + r] = self.suffix[(m + 1) * k + r] + self.log_in[m * k + r];
            }
        }

        let mut max_change: f64 = 0.0;
        let base: Vec<f64> = (0..k).map(|r| self.log_prior[r] - self.field[r]).collect();
        let first = self.adj.slots(i).start;
        for m in 0..deg {
            for r in 0..k {
                self.buf[r] = base[r] + self.prefix[m * k + r] + self.suffix[(m + 1) * k + r];
            }
            let slot = first + m;
            let old = &mut self.messages[slot * k..(slot + 1) * k];
            softmax_into(&self.buf, &mut self.fresh, &self.log_prior);
            for r in 0..k {
                let v = (1.0 - damping) * self.fresh[r] + damping * old[r];
                max_change = max_change.max((v - old[r]).abs());
                old[r] = v;
            }
        }

        for r in 0..k {
            self.buf[r] = base[r] + self.suffix[r];
        }
        softmax_into(&self.buf, &mut self.fresh, &self.log_prior);
        let row = &mut self.marginals[i * k..(i + 1) * k];
        for s in 0..k {
            let d = self.fresh[s] - row[s];
            if d != 0.0 {
                for r in 0..k {
                    self.field[r] += self.c[s * k + r] * d / self.n;
                }
            }
            row[s] = self.fresh[s];
        }
        max_change
    }

    /// Bethe free energy per node:
    /// `−N⁻¹ [Σ_i ln Z^i − Σ_{(ij)} ln Z^{ij} + (2N)⁻¹ Σ_ab c_ab S_a S_b]`
    /// with `S_a = Σ_i ψ^i_a`.
    fn free_energy(&mut self) -> f64 {
        let k = self.k;
        let mut log_z_nodes = 0.0;
        for i in 0..self.adj.n_nodes() {
            self.incoming_logs(i);
            let deg = self.adj.degree(i);
            let mut best = f64::NEG_INFINITY;
            let mut total = vec![0.0; k];
            for r in 0..k {
                total[r] = self.log_prior[r] - self.field[r] + (0..deg).map(|e| self.log_in[e * k + r]).sum::<f64>();
                best = best.max(total[r]);
            }
            if best.is_finite() {
                log_z_nodes += best + libm::log(total.iter().map(|t| libm::exp(t - best)).sum::<f64>());
            }
        }
        let mut log_z_edges = 0.0;
        for i in 0..self.adj.n_nodes() {
            for e in self.adj.slots(i) {
                let j = self.adj.target(e);
                if j < i {
                    continue;
                }
                let out = &self.messages[e * k..(e + 1) * k];
                let rev = self.adj.reverse(e);
                let back = &self.messages[rev * k..(rev + 1) * k];
                let mut z = 0.0;
                for a in 0..k {
                    for b in 0..k {
                        z += self.c[a * k + b] * out[a] * back[b];
                    }
                }
                if z > 0.0 {
                    log_z_edges += libm::log(z);
                }
            }
        }
        let mut mass = vec![0.0; k];
        for row in self.marginals.chunks(k) {
            for (m, v) in mass.iter_mut().zip(row) {
                *m += v;
            }
        }
        let mut non_edges = 0.0;
        for a in 0..k {
            for b in 0..k {
                non_edges += self.c[a * k + b] * mass[a] * mass[b];
            }
        }
        non_edges /= 2.0 * self.n;
        -(log_z_nodes - log_z_edges + non_edges) / self.n
    }
}

fn normalize(v: &mut [f64]) {
    let s: f64 = v.iter().sum();
    if s > 0.0 && s.is_finite() {
        v.iter_mut().for_each(|x| *x /= s);
    } else {
        let u = 1.0 / v.len() as f64;
        v.iter_mut().for_each(|x| *x = u);
    }
}

/// Normalized `exp(logits)`; falls back to `exp(fallback)` when every logit is
/// `−∞` (a node incompatible with every group).
fn softmax_into(logits: &[f64], out: &mut [f64], fallback: &[f64]) {
    let best = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let src = if best.is_finite() { logits } else { fallback };
    let best = if best.is_finite() { best } else { src.iter().copied().fold(f64::NEG_INFINITY, f64::max) };
    let mut s = 0.0;
    for (o, &l) in out.iter_mut().zip(src) {
        *o = libm::exp(l - best);
        s += *o;
    }
    out.iter_mut().for_each(|x| *x /= s);
}
