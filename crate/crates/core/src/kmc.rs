//! Continuous-time simulation of the generator
//! `L_N = (N^2 / sqrt K) L_K + sqrt K L_G`.
//!
//! Exchanges across concordant bonds do not change the configuration, so the
//! event list holds discordant bonds only; each carries rate `N^2 / sqrt K`.
//! Site flips are sampled by thinning: proposals arrive at each site with
//! rate `sqrt K max c` and are accepted with probability `c_x(eta) / max c`,
//! which reproduces the flip rates exactly without per-site bookkeeping.
//! The module also provides product-measure sampling, block densities and a
//! brute-force oracle for the law of the process on tiny tori.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::lattice::{Configuration, TorusGeometry};
use crate::rates::RateFunction;

/// Seed of replica `i` derived from a base seed.
pub fn replica_seed(seed: u64, replica: u64) -> u64 {
    seed ^ replica
}

pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const ABSENT: u32 = u32::MAX;

/// Set of small integers with O(1) insert, remove and uniform sampling.
#[derive(Debug, Clone)]
struct IndexedSet {
    items: Vec<u32>,
    pos: Vec<u32>,
}

impl IndexedSet {
    fn new(universe: usize) -> Self {
        Self {
            items: Vec::new(),
            pos: vec![ABSENT; universe],
        }
    }

    #[inline]
    fn insert(&mut self, v: u32) {
        self.pos[v as usize] = self.items.len() as u32;
        self.items.push(v);
    }

    #[inline]
    fn remove(&mut self, v: u32) {
        let p = self.pos[v as usize];
        let last = self.items.pop().unwrap();
        if last != v {
            self.items[p as usize] = last;
            self.pos[last as usize] = p;
        }
        self.pos[v as usize] = ABSENT;
    }

    #[inline]
    fn contains(&self, v: u32) -> bool {
        self.pos[v as usize] != ABSENT
    }

    fn len(&self) -> usize {
        self.items.len()
    }
}

/// What the last call to [`MarkovState::step`] did.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Event {
    Exchange {
        x: usize,
        y: usize,
        time: f64,
    },
    Flip {
        x: usize,
        time: f64,
    },
    /// Total rate is zero; the configuration never changes again.
    Absorbed,
}

/// Event counters of a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventCounts {
    pub exchanges: u64,
    pub flips: u64,
}

/// Configuration plus the incremental bookkeeping for event selection.
#[derive(Debug, Clone)]
pub struct MarkovState {
    config: Configuration,
    time: f64,
    rates: RateFunction,
    k: f64,
    exchange_rate: f64,
    flip_scale: f64,
    /// `sqrt K max c` per site: the rate at which flip proposals arrive.
    flip_bound: f64,
    /// `flip_bound` times the number of sites.
    flip_proposals: f64,
    num_sites: usize,
    max_rate: f64,
    window_len: usize,
    /// `window_sites[x * W + i]` is `x + offset_i`.
    window_sites: Vec<u32>,
    bonds: Vec<(u32, u32)>,
    /// Distinct bonds touching each site, `2d` slots padded with `ABSENT`.
    site_bonds: Vec<u32>,
    degree: usize,
    discordant: IndexedSet,
    counts: EventCounts,
    rng: ChaCha8Rng,
}

impl MarkovState {
    /// Bookkeeping for `eta` at time zero under `L_N` with parameter `k > 1`.
    pub fn new(eta: Configuration, rates: RateFunction, k: f64, seed: u64) -> Result<Self> {
        if !(k > 1.0 && k.is_finite()) {
            return domain(format!("K must exceed 1, got {k}"));
        }
        let g = eta.geometry();
        if rates.window().dim() != g.dim() {
            return domain("rate window and torus have different dimensions");
        }
        let n = g.num_sites();
        if n >= ABSENT as usize {
            return Err(Error::Capacity(format!("{n} sites exceed the index range")));
        }
        let w = rates.window().size();
        let mut window_sites = Vec::with_capacity(n * w);
        for x in 0..n {
            for o in rates.window().offsets() {
                window_sites.push(g.shift(x, o) as u32);
            }
        }
        let bonds: Vec<(u32, u32)> = g
            .bonds()
            .into_iter()
            .map(|(a, b)| (a as u32, b as u32))
            .collect();
        let degree = 2 * g.dim();
        // distinct bonds per site, padded with ABSENT
        let mut site_bonds = vec![ABSENT; n * degree];
        let mut fill = vec![0usize; n];
        for (i, &(a, b)) in bonds.iter().enumerate() {
            for s in [a, b] {
                let s = s as usize;
                let list = &mut site_bonds[s * degree..(s + 1) * degree];
                if !list[..fill[s]].contains(&(i as u32)) {
                    list[fill[s]] = i as u32;
                    fill[s] += 1;
                }
            }
        }
        let max_rate = rates.max_rate();
        let side = g.side() as f64;
        let mut state = Self {
            config: eta,
            time: 0.0,
            exchange_rate: side * side / k.sqrt(),
            flip_scale: k.sqrt(),
            flip_bound: k.sqrt() * max_rate,
            flip_proposals: k.sqrt() * max_rate * n as f64,
            num_sites: n,
            max_rate,
            k,
            rates,
            window_len: w,
            window_sites,
            bonds,
            site_bonds,
            degree,
            discordant: IndexedSet::new(0),
            counts: EventCounts::default(),
            rng: rng_for(seed),
        };
        state.discordant = IndexedSet::new(state.bonds.len());
        for (i, &(a, b)) in state.bonds.iter().enumerate() {
            if state.config.get(a as usize) != state.config.get(b as usize) {
                state.discordant.insert(i as u32);
            }
        }
        Ok(state)
    }

    #[inline]
    fn pattern(&self, x: usize) -> usize {
        let w = self.window_len;
        let sites = &self.window_sites[x * w..(x + 1) * w];
        sites.iter().enumerate().fold(0usize, |acc, (i, &y)| {
            acc | ((self.config.get(y as usize) as usize) << i)
        })
    }

    pub fn configuration(&self) -> &Configuration {
        &self.config
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Time on the clock `t / sqrt K`.
    pub fn rescaled_time(&self) -> f64 {
        self.time / self.k.sqrt()
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn counts(&self) -> EventCounts {
        self.counts
    }

    pub fn discordant_bond_count(&self) -> usize {
        self.discordant.len()
    }

    fn count_discordant(&self) -> usize {
        self.bonds
            .iter()
            .filter(|&&(a, b)| self.config.get(a as usize) != self.config.get(b as usize))
            .count()
    }

    /// Current discordant bonds as site pairs, in bond-list order.
    pub fn discordant_bonds(&self) -> Vec<(usize, usize)> {
        self.bonds
            .iter()
            .filter(|&&(a, b)| self.config.get(a as usize) != self.config.get(b as usize))
            .map(|&(a, b)| (a as usize, b as usize))
            .collect()
    }

    /// `c_x(eta)` read from the current window.
    pub fn flip_rate(&self, x: usize) -> f64 {
        self.rates.rate_of_pattern(self.pattern(x))
    }

    /// `N^2 / sqrt K` times the number of discordant bonds.
    pub fn exchange_total(&self) -> f64 {
        self.exchange_rate * self.discordant.len() as f64
    }

    /// `sqrt K sum_x c_x(eta)` (computed in O(number of sites)).
    pub fn flip_total(&self) -> f64 {
        let n = self.config.geometry().num_sites();
        self.flip_scale * (0..n).map(|x| self.flip_rate(x)).sum::<f64>()
    }

    pub fn total_rate(&self) -> f64 {
        self.exchange_total() + self.flip_total()
    }

    /// Compares the incremental bookkeeping with a rebuild from scratch.
    pub fn check_consistency(&self) -> bool {
        let g = self.config.geometry();
        let rates_ok =
            (0..g.num_sites()).all(|x| self.flip_rate(x) == self.rates.evaluate(&self.config, x));
        let bonds_ok = self.bonds.iter().enumerate().all(|(i, &(a, b))| {
            (self.config.get(a as usize) != self.config.get(b as usize))
                == self.discordant.contains(i as u32)
        });
        bonds_ok && self.count_discordant() == self.discordant.len() && rates_ok
    }

    /// Flipping `eta_y` toggles the discordance of every bond at `y`
    /// except `skip`.
    #[inline]
    fn toggle_bonds(&mut self, y: usize, skip: u32) {
        for j in 0..self.degree {
            let b = self.site_bonds[y * self.degree + j];
            if b == ABSENT {
                break;
            }
            if b == skip {
                continue;
            }
            if self.discordant.contains(b) {
                self.discordant.remove(b);
            } else {
                self.discordant.insert(b);
            }
        }
    }

    /// Rate of all candidate events: exchanges plus flip proposals.
    #[inline]
    fn proposal_total(&self) -> f64 {
        self.exchange_total() + self.flip_proposals
    }

    /// Applies the candidate selected by a uniform draw on
    /// `[0, proposal_total)`; flip proposals at `x` are accepted with
    /// probability `c_x / max c`.
    #[inline]
    fn fire(&mut self, u: f64) -> Option<Event> {
        let ex = self.exchange_total();
        if u < ex {
            let i = ((u / self.exchange_rate) as usize).min(self.discordant.len() - 1);
            let bond = self.discordant.items[i];
            let (x, y) = self.bonds[bond as usize];
            let (x, y) = (x as usize, y as usize);
            let occupied = self.config.get(x);
            self.config.set(x, !occupied);
            self.config.set(y, occupied);
            self.toggle_bonds(x, bond);
            self.toggle_bonds(y, bond);
            self.counts.exchanges += 1;
            return Some(Event::Exchange {
                x,
                y,
                time: self.time,
            });
        }
        let x = (((u - ex) / self.flip_bound) as usize).min(self.num_sites - 1);
        let accept = self.rng.random::<f64>() * self.max_rate;
        if accept < self.flip_rate(x) {
            let occupied = self.config.get(x);
            self.config.set(x, !occupied);
            self.toggle_bonds(x, ABSENT);
            self.counts.flips += 1;
            return Some(Event::Flip { x, time: self.time });
        }
        None
    }

    /// One event: exponential holding times with the proposal rate, then
    /// the first proposal that changes the configuration is applied.
    pub fn step(&mut self) -> Event {
        loop {
            let total = self.proposal_total();
            if total <= 0.0 || self.total_rate() <= 0.0 {
                return Event::Absorbed;
            }
            let e: f64 = self.rng.sample(Exp1);
            self.time += e / total;
            let u = self.rng.random::<f64>() * total;
            if let Some(ev) = self.fire(u) {
                return ev;
            }
        }
    }

    /// Runs events until time `t`. The event whose holding time would cross
    /// `t` is discarded and the clock set to `t`, which leaves the law of
    /// the process unchanged because holding times are memoryless.
    pub fn advance_to(&mut self, t: f64) {
        while self.time < t {
            let total = self.proposal_total();
            if total <= 0.0 {
                self.time = t;
                return;
            }
            let e: f64 = self.rng.sample(Exp1);
            let next = self.time + e / total;
            if next > t {
                self.time = t;
                return;
            }
            self.time = next;
            let u = self.rng.random::<f64>() * total;
            self.fire(u);
        }
    }
}

/// Runs one trajectory and calls `observer` at every requested time in
/// `[0, t_end]` (sorted ascending).
pub fn simulate(
    eta0: Configuration,
    rates: &RateFunction,
    k: f64,
    t_end: f64,
    observe_at: &[f64],
    seed: u64,
    mut observer: impl FnMut(f64, &MarkovState),
) -> Result<EventCounts> {
    if observe_at.windows(2).any(|w| w[1] < w[0]) {
        return domain("observation times must be sorted");
    }
    let mut state = MarkovState::new(eta0, rates.clone(), k, seed)?;
    for &t in observe_at.iter().filter(|&&t| t <= t_end) {
        state.advance_to(t);
        observer(t, &state);
    }
    state.advance_to(t_end);
    Ok(state.counts())
}

/// Independent Bernoulli occupations with site densities `u`.
pub fn sample_product_measure(
    geometry: TorusGeometry,
    u: &[f64],
    seed: u64,
) -> Result<Configuration> {
    if u.len() != geometry.num_sites() {
        return domain(format!(
            "density field has {} values for {} sites",
            u.len(),
            geometry.num_sites()
        ));
    }
    if let Some((x, v)) = u
        .iter()
        .enumerate()
        .find(|(_, v)| !(0.0..=1.0).contains(*v))
    {
        return domain(format!("density {v} at site {x} is outside [0, 1]"));
    }
    let mut rng = rng_for(seed);
    let mut eta = Configuration::empty(geometry);
    for (x, &p) in u.iter().enumerate() {
        let draw: f64 = rng.random();
        if draw < p {
            eta.set(x, true);
        }
    }
    Ok(eta)
}

/// Block-averaged densities on a torus of `N / b` blocks per side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalField {
    pub dim: usize,
    pub block: usize,
    pub blocks_per_side: usize,
    pub densities: Vec<f64>,
}

impl EmpiricalField {
    /// Riemann sum of `phi` against the block densities at block centres.
    pub fn pair(&self, phi: impl Fn(&[f64]) -> f64) -> f64 {
        let m = self.blocks_per_side;
        let g = TorusGeometry::new(self.dim, m.max(2)).expect("valid block torus");
        let mut v = vec![0.0; self.dim];
        let mut acc = 0.0;
        for (i, &rho) in self.densities.iter().enumerate() {
            for (vi, c) in v.iter_mut().zip(g.coords(i)) {
                *vi = (c as f64 + 0.5) / m as f64;
            }
            acc += rho * phi(&v);
        }
        acc / self.densities.len() as f64
    }
}

pub fn empirical_measure(eta: &Configuration, block: usize) -> Result<EmpiricalField> {
    let g = eta.geometry();
    if block == 0 || !g.side().is_multiple_of(block) {
        return domain(format!(
            "block size {block} does not divide N = {}",
            g.side()
        ));
    }
    let m = g.side() / block;
    let mut counts = vec![0usize; m.pow(g.dim() as u32)];
    for x in 0..g.num_sites() {
        if eta.get(x) {
            let idx = g.coords(x).iter().fold(0, |acc, &c| acc * m + c / block);
            counts[idx] += 1;
        }
    }
    let vol = block.pow(g.dim() as u32) as f64;
    Ok(EmpiricalField {
        dim: g.dim(),
        block,
        blocks_per_side: m,
        densities: counts.into_iter().map(|c| c as f64 / vol).collect(),
    })
}

/// Largest torus handled by the exact oracle.
pub const MAX_EXACT_SITES: usize = 16;

/// Sparse generator of `L_N` on all `2^(N^d)` states; bit `x` of a state
/// index is `eta_x`.
#[derive(Debug, Clone)]
pub struct ExactGenerator {
    pub num_states: usize,
    /// Off-diagonal and no-op transitions `(target, rate)` per state.
    pub transitions: Vec<Vec<(usize, f64)>>,
    /// Diagonal entries (minus the total exit rate including no-ops).
    pub diagonal: Vec<f64>,
}

impl ExactGenerator {
    pub fn new(geometry: TorusGeometry, rates: &RateFunction, k: f64) -> Result<Self> {
        let n = geometry.num_sites();
        if n > MAX_EXACT_SITES {
            return Err(Error::Capacity(format!(
                "{n} sites exceed the exact oracle limit of {MAX_EXACT_SITES}"
            )));
        }
        if !(k > 1.0) {
            return domain(format!("K must exceed 1, got {k}"));
        }
        let num_states = 1usize << n;
        let side = geometry.side() as f64;
        let ex = side * side / k.sqrt();
        let fl = k.sqrt();
        let bonds = geometry.bonds();
        let mut transitions = Vec::with_capacity(num_states);
        let mut diagonal = Vec::with_capacity(num_states);
        for s in 0..num_states {
            let eta = Configuration::from_index(geometry, s);
            let mut row = Vec::with_capacity(bonds.len() + n);
            let mut exit = 0.0;
            for &(x, y) in &bonds {
                let target = if ((s >> x) & 1) != ((s >> y) & 1) {
                    s ^ (1 << x) ^ (1 << y)
                } else {
                    s
                };
                row.push((target, ex));
                exit += ex;
            }
            for x in 0..n {
                let r = fl * rates.evaluate(&eta, x);
                if r > 0.0 {
                    row.push((s ^ (1 << x), r));
                    exit += r;
                }
            }
            transitions.push(row);
            diagonal.push(-exit);
        }
        Ok(Self {
            num_states,
            transitions,
            diagonal,
        })
    }

    /// Sum of row `s` of the generator matrix.
    pub fn row_sum(&self, s: usize) -> f64 {
        self.diagonal[s] + self.transitions[s].iter().map(|(_, r)| r).sum::<f64>()
    }

    /// `p Q` for a row vector `p`.
    fn apply(&self, p: &[f64], out: &mut [f64]) {
        for (o, (&pi, &d)) in out.iter_mut().zip(p.iter().zip(&self.diagonal)) {
            *o = pi * d;
        }
        for (s, row) in self.transitions.iter().enumerate() {
            let ps = p[s];
            if ps == 0.0 {
                continue;
            }
            for &(t, r) in row {
                out[t] += ps * r;
            }
        }
    }

    /// `p0 exp(t Q)` by uniformization. The time is split so that each piece
    /// has `Lambda dt <= 20`; each Poisson series is truncated once a bound
    /// on the remaining Poisson mass, which bounds the l1 error, is below
    /// `1e-15`.
    pub fn evolve(&self, p0: &[f64], t: f64) -> Vec<f64> {
        let lambda = self.diagonal.iter().map(|d| -d).fold(0.0, f64::max);
        if t <= 0.0 || lambda == 0.0 {
            return p0.to_vec();
        }
        let pieces = (lambda * t / 20.0).ceil().max(1.0) as usize;
        let dt = t / pieces as f64;
        let a = lambda * dt;
        let mut p = p0.to_vec();
        let mut term = vec![0.0; self.num_states];
        let mut tmp = vec![0.0; self.num_states];
        for _ in 0..pieces {
            // term_k = p P^k with P = I + Q / lambda
            term.copy_from_slice(&p);
            let mut weight = (-a).exp();
            let mut acc: Vec<f64> = term.iter().map(|v| v * weight).collect();
            let mut k = 0usize;
            // For k + 2 > a the tail sum_{j > k} w_j is at most
            // w_{k+1} / (1 - a / (k + 2)).
            let tail = |w: f64, k: usize| {
                let next = w * a / (k + 1) as f64;
                let ratio = a / (k + 2) as f64;
                if ratio < 1.0 {
                    next / (1.0 - ratio)
                } else {
                    f64::INFINITY
                }
            };
            while tail(weight, k) > 1e-15 {
                k += 1;
                self.apply(&term, &mut tmp);
                for (tv, qv) in term.iter_mut().zip(&tmp) {
                    *tv += qv / lambda;
                }
                weight *= a / k as f64;
                for (av, tv) in acc.iter_mut().zip(&term) {
                    *av += weight * tv;
                }
            }
            p = acc;
        }
        p
    }
}

/// Law of the process at time `t` started from the point mass at `eta0`.
pub fn exact_distribution(
    eta0: &Configuration,
    rates: &RateFunction,
    k: f64,
    t: f64,
) -> Result<Vec<f64>> {
    let gen = ExactGenerator::new(eta0.geometry(), rates, k)?;
    let mut p0 = vec![0.0; gen.num_states];
    p0[eta0.to_index()] = 1.0;
    Ok(gen.evolve(&p0, t))
}

/// `sum_x p log(p / q) + (1 - p) log((1 - p) / (1 - q))`, the relative
/// entropy of two Bernoulli product measures.
pub fn relative_entropy_product(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return domain("density fields have different lengths");
    }
    let mut h = 0.0;
    for (x, (&a, &b)) in p.iter().zip(q).enumerate() {
        if !(b > 0.0 && b < 1.0) {
            return domain(format!(
                "reference density {b} at site {x} is not in (0, 1)"
            ));
        }
        if !(0.0..=1.0).contains(&a) {
            return domain(format!("density {a} at site {x} is outside [0, 1]"));
        }
        if a > 0.0 {
            h += a * (a / b).ln();
        }
        if a < 1.0 {
            h += (1.0 - a) * ((1.0 - a) / (1.0 - b)).ln();
        }
    }
    Ok(h.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LocalWindow;

    #[test]
    fn step_rates_small_example() {
        let g = TorusGeometry::new(1, 4).unwrap();
        let eta = Configuration::from_occupancy(g, &[1, 0, 0, 0]).unwrap();
        let c = RateFunction::constant(LocalWindow::new(1, 1), 1.0).unwrap();
        let s = MarkovState::new(eta, c, 4.0, 1).unwrap();
        assert_eq!(s.discordant_bond_count(), 2);
        assert_eq!(s.exchange_total(), 16.0);
        assert_eq!(s.flip_total(), 8.0);
        assert_eq!(s.total_rate(), 24.0);
    }

    #[test]
    fn absorbed_without_rates() {
        let g = TorusGeometry::new(1, 5).unwrap();
        let c = RateFunction::constant(LocalWindow::new(1, 1), 0.0).unwrap();
        let mut s = MarkovState::new(Configuration::full(g), c, 2.0, 1).unwrap();
        assert_eq!(s.step(), Event::Absorbed);
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(
            relative_entropy_product(&[0.3, 0.6], &[0.3, 0.6]).unwrap(),
            0.0
        );
        let h = relative_entropy_product(&[1.0], &[0.5]).unwrap();
        assert!((h - 2f64.ln()).abs() < 1e-15);
        assert!(relative_entropy_product(&[0.5], &[1.0]).is_err());
    }

    #[test]
    fn block_densities() {
        let g = TorusGeometry::new(1, 6).unwrap();
        let eta = Configuration::from_occupancy(g, &[1, 0, 1, 0, 1, 0]).unwrap();
        let e = empirical_measure(&eta, 2).unwrap();
        assert_eq!(e.densities, vec![0.5; 3]);
        assert!(empirical_measure(&eta, 4).is_err());
        let full = empirical_measure(&Configuration::full(g), 3).unwrap();
        assert_eq!(full.densities, vec![1.0; 2]);
    }
}
