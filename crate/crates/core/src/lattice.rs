//! Finite periodic lattices and synchronous noisy updates.
//!
//! States are bit-packed, 64 sites per word, in row-major order (the last
//! coordinate varies fastest); bit set means spin `+1`. Trailing bits of
//! the last word are always zero.
//!
//! Noise draws are keyed: the uniform variate for site `x` at step `t` is
//! a pure function of `(seed, t, x)`, so trajectories do not depend on how
//! sites are partitioned across worker threads.
//!
//! Two update paths compute the same map. The row path works when the last
//! side length is a multiple of 64: neighbor planes are gathered a word at
//! a time and the rule is evaluated bit-sliced as an OR over minimal plus
//! sets of ANDs of planes. The gather path looks every site's neighborhood
//! up through an index table and reads the truth table directly; it is the
//! reference the row path is tested against.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rule::{Offset, RuleSpec, Spin};

const WORDS_PER_TASK: usize = 64;

/// Bit-packed spin configuration on a `d`-dimensional torus.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LatticeState {
    dims: Vec<usize>,
    len: usize,
    words: Vec<u64>,
}

impl LatticeState {
    pub fn filled(dims: &[usize], spin: Spin) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::Config(format!("invalid torus dimensions {dims:?}")));
        }
        let len = dims
            .iter()
            .try_fold(1usize, |acc, &l| acc.checked_mul(l))
            .ok_or_else(|| Error::Resource(format!("torus {dims:?} too large")))?;
        let mut state = LatticeState { dims: dims.to_vec(), len, words: vec![0; len.div_ceil(64)] };
        if spin.is_plus() {
            state.words.fill(u64::MAX);
            state.clear_tail();
        }
        Ok(state)
    }

    pub fn all_plus(dims: &[usize]) -> Result<Self> {
        Self::filled(dims, Spin::Plus)
    }

    pub fn all_minus(dims: &[usize]) -> Result<Self> {
        Self::filled(dims, Spin::Minus)
    }

    /// Builds a state from an integer code (bit `x` = site `x`), for tori
    /// with at most 64 sites.
    pub fn from_code(dims: &[usize], code: u64) -> Result<Self> {
        let mut s = Self::all_minus(dims)?;
        if s.len > 64 {
            return Err(Error::Resource("state codes need at most 64 sites".into()));
        }
        s.words[0] = code;
        s.clear_tail();
        Ok(s)
    }

    /// Inverse of [`LatticeState::from_code`].
    pub fn code(&self) -> u64 {
        self.words[0]
    }

    fn clear_tail(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            let last = self.words.len() - 1;
            self.words[last] &= (1u64 << rem) - 1;
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Number of sites.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, site: usize) -> bool {
        self.words[site / 64] >> (site % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, site: usize, plus: bool) {
        let mask = 1u64 << (site % 64);
        if plus {
            self.words[site / 64] |= mask;
        } else {
            self.words[site / 64] &= !mask;
        }
    }

    pub fn spin(&self, site: usize) -> Spin {
        Spin::from_bit(self.get(site))
    }

    /// Linear index of a point of `Z^d`, wrapped onto the torus.
    pub fn site_index(&self, point: &[i64]) -> usize {
        site_index(&self.dims, point)
    }

    pub fn coords(&self, site: usize) -> Vec<usize> {
        coords(&self.dims, site)
    }

    pub fn count_plus(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn count_minus(&self) -> usize {
        self.len - self.count_plus()
    }

    pub fn minus_density(&self) -> f64 {
        self.count_minus() as f64 / self.len as f64
    }

    /// Mean spin.
    pub fn magnetization(&self) -> f64 {
        1.0 - 2.0 * self.minus_density()
    }

    pub fn is_all_plus(&self) -> bool {
        self.count_minus() == 0
    }

    /// Cyclic translation: the spin at `x` moves to `x + shift`.
    pub fn shifted(&self, shift: &[i64]) -> LatticeState {
        let mut out = LatticeState { dims: self.dims.clone(), len: self.len, words: vec![0; self.words.len()] };
        for site in 0..self.len {
            if self.get(site) {
                let target: Vec<i64> = coords(&self.dims, site)
                    .iter()
                    .zip(shift)
                    .map(|(&c, &s)| c as i64 + s)
                    .collect();
                out.set(site_index(&self.dims, &target), true);
            }
        }
        out
    }

    /// Sitewise `self ≤ other`.
    pub fn le(&self, other: &LatticeState) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }
}

pub(crate) fn site_index(dims: &[usize], point: &[i64]) -> usize {
    dims.iter()
        .zip(point)
        .fold(0usize, |acc, (&l, &p)| acc * l + p.rem_euclid(l as i64) as usize)
}

pub(crate) fn coords(dims: &[usize], mut site: usize) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for (k, &l) in dims.iter().enumerate().rev() {
        out[k] = site % l;
        site /= l;
    }
    out
}

/// Local error kernel around the deterministic prescription.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseKind {
    /// Each site disobeys the rule with probability `eps`.
    Symmetric { eps: f64 },
    /// `eps_plus` turns a prescribed `+1` into `-1`; `eps_minus` the reverse.
    Biased { eps_plus: f64, eps_minus: f64 },
    /// Probability of `+1` for each local configuration index.
    Table { p_plus: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    /// Least ε for which the low-noise condition holds; set by
    /// [`NoiseModel::verify`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verified_eps: Option<f64>,
    /// Least α for which the pure-phase decoupling condition holds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verified_alpha: Option<f64>,
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} = {p} is not a probability")))
    }
}

impl NoiseModel {
    pub fn new(kind: NoiseKind) -> Result<Self> {
        match &kind {
            NoiseKind::Symmetric { eps } => check_probability("eps", *eps)?,
            NoiseKind::Biased { eps_plus, eps_minus } => {
                check_probability("eps_plus", *eps_plus)?;
                check_probability("eps_minus", *eps_minus)?;
            }
            NoiseKind::Table { p_plus } => {
                if p_plus.is_empty() || !p_plus.len().is_power_of_two() {
                    return Err(Error::Config("noise table length must be 2^R".into()));
                }
                for &p in p_plus {
                    check_probability("p_plus", p)?;
                }
            }
        }
        Ok(NoiseModel { kind, verified_eps: None, verified_alpha: None })
    }

    pub fn symmetric(eps: f64) -> Result<Self> {
        Self::new(NoiseKind::Symmetric { eps })
    }

    pub fn biased(eps_plus: f64, eps_minus: f64) -> Result<Self> {
        Self::new(NoiseKind::Biased { eps_plus, eps_minus })
    }

    pub fn table(p_plus: Vec<f64>) -> Result<Self> {
        Self::new(NoiseKind::Table { p_plus })
    }

    pub fn noiseless() -> Self {
        NoiseModel { kind: NoiseKind::Symmetric { eps: 0.0 }, verified_eps: None, verified_alpha: None }
    }

    /// Probability that the site becomes `+1` given the prescription and
    /// the local configuration index.
    #[inline]
    pub fn p_plus(&self, prescribed: bool, config: usize) -> f64 {
        match &self.kind {
            NoiseKind::Symmetric { eps } => {
                if prescribed {
                    1.0 - eps
                } else {
                    *eps
                }
            }
            NoiseKind::Biased { eps_plus, eps_minus } => {
                if prescribed {
                    1.0 - eps_plus
                } else {
                    *eps_minus
                }
            }
            NoiseKind::Table { p_plus } => p_plus[config],
        }
    }

    /// `p(ξ | ω)` for the local configuration `config`.
    pub fn kernel(&self, target: Spin, prescribed: bool, config: usize) -> f64 {
        // Error probabilities are returned as given rather than as
        // `1 - (1 - eps)`, which would round.
        let obeys = target.is_plus() == prescribed;
        match &self.kind {
            NoiseKind::Symmetric { eps } => {
                if obeys {
                    1.0 - eps
                } else {
                    *eps
                }
            }
            NoiseKind::Biased { eps_plus, eps_minus } => {
                let err = if prescribed { *eps_plus } else { *eps_minus };
                if obeys {
                    1.0 - err
                } else {
                    err
                }
            }
            NoiseKind::Table { p_plus } => {
                if target.is_plus() {
                    p_plus[config]
                } else {
                    1.0 - p_plus[config]
                }
            }
        }
    }

    /// True when the kernel depends on the neighborhood only through the
    /// deterministic prescription.
    pub fn depends_only_on_prescription(&self) -> bool {
        !matches!(self.kind, NoiseKind::Table { .. })
    }

    pub(crate) fn check_rule(&self, rule: &RuleSpec) -> Result<()> {
        if let NoiseKind::Table { p_plus } = &self.kind {
            if p_plus.len() != rule.table().len() {
                return Err(Error::Config(format!(
                    "noise table covers {} configurations, rule has {}",
                    p_plus.len(),
                    rule.table().len()
                )));
            }
        }
        Ok(())
    }

    /// Runs [`check_assumptions`] and stores the verified constants.
    pub fn verify(&mut self, rule: &RuleSpec) -> Result<AssumptionReport> {
        let report = check_assumptions(self, rule)?;
        self.verified_eps = Some(report.eps);
        self.verified_alpha = Some(report.alpha);
        Ok(report)
    }
}

/// Smallest constants for which the low-noise and decoupling assumptions
/// hold. `alpha` is infinite when a zero-probability transition becomes
/// possible after substituting the prescribed value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub eps: f64,
    pub alpha: f64,
}

/// Exhaustive check over all `2^R` local configurations, both target
/// spins and every neighborhood position. Positions outside the
/// neighborhood never change the kernel, so they are skipped.
pub fn check_assumptions(noise: &NoiseModel, rule: &RuleSpec) -> Result<AssumptionReport> {
    noise.check_rule(rule)?;
    let r = rule.size();
    let mut eps = 0.0f64;
    let mut alpha = 0.0f64;
    for config in 0..rule.table().len() {
        let prescribed = rule.output(config);
        for target in [Spin::Minus, Spin::Plus] {
            let p = noise.kernel(target, prescribed, config);
            if target.is_plus() != prescribed {
                eps = eps.max(p);
            }
            for y in 0..r {
                let substituted = if prescribed { config | 1 << y } else { config & !(1 << y) };
                let p_sub = noise.kernel(target, rule.output(substituted), substituted);
                let diff = (p - p_sub).abs();
                if diff == 0.0 {
                    continue;
                }
                if p == 0.0 {
                    alpha = f64::INFINITY;
                } else {
                    alpha = alpha.max(diff / p);
                }
            }
        }
    }
    Ok(AssumptionReport { eps, alpha })
}

/// Seed of the counter-based noise generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngKey {
    pub seed: u64,
}

const GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngKey {
    pub fn new(seed: u64) -> Self {
        RngKey { seed }
    }

    /// Key of the `index`-th independent replica.
    pub fn derive(&self, index: u64) -> RngKey {
        RngKey { seed: mix64(self.seed ^ mix64(index.wrapping_add(0x5851_f42d_4c95_7f2d))) }
    }

    #[inline]
    fn step_base(&self, t: u64) -> u64 {
        mix64(mix64(self.seed.wrapping_add(GAMMA)) ^ t.wrapping_mul(0xd6e8_feb8_6659_fd93))
    }

    /// Raw 64-bit draw for `site` at step `t`.
    pub fn draw(&self, t: u64, site: u64) -> u64 {
        draw_from_base(self.step_base(t), site)
    }

    /// Uniform variate in `[0, 1)` for `site` at step `t`.
    pub fn uniform(&self, t: u64, site: u64) -> f64 {
        to_unit(self.draw(t, site))
    }
}

#[inline]
fn draw_from_base(base: u64, site: u64) -> u64 {
    // SplitMix64 stream started at `base`, indexed by site.
    mix64(base.wrapping_add(site.wrapping_add(1).wrapping_mul(GAMMA)))
}

#[inline]
fn to_unit(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[inline]
fn sample(p_plus: f64, base: u64, key: u64) -> bool {
    if p_plus >= 1.0 {
        true
    } else if p_plus <= 0.0 {
        false
    } else {
        to_unit(draw_from_base(base, key)) < p_plus
    }
}

#[derive(Clone, Debug)]
enum UpdatePath {
    Rows {
        row_len: usize,
        words_per_row: usize,
        /// `row_neighbors[i][row]`: row holding the `i`-th neighbor.
        row_neighbors: Vec<Vec<usize>>,
        /// Column shift of each neighbor, reduced mod `row_len`.
        col_shift: Vec<usize>,
    },
    Gather {
        /// `neighbors[site * R + i]`.
        neighbors: Vec<u32>,
    },
}

/// A rule compiled for a fixed torus.
#[derive(Clone, Debug)]
pub struct Engine {
    rule: RuleSpec,
    dims: Vec<usize>,
    n_sites: usize,
    plus_masks: Vec<u32>,
    path: UpdatePath,
}

/// Fewest minimal plus sets beyond which bit-sliced evaluation falls back
/// to per-bit table lookup.
const MAX_SLICED_TERMS: usize = 64;

impl Engine {
    /// Compiles `rule` for the torus `dims`, choosing the row path when
    /// the last side length is a multiple of 64.
    pub fn new(rule: &RuleSpec, dims: &[usize]) -> Result<Self> {
        let last = *dims.last().unwrap_or(&0);
        Self::build(rule, dims, last.is_multiple_of(64))
    }

    /// Compiles `rule` using only the per-site gather path.
    pub fn reference(rule: &RuleSpec, dims: &[usize]) -> Result<Self> {
        Self::build(rule, dims, false)
    }

    fn build(rule: &RuleSpec, dims: &[usize], rows: bool) -> Result<Self> {
        rule.validate()?;
        if dims.len() != rule.dimension() {
            return Err(Error::Config(format!(
                "torus has {} dimensions, rule has {}",
                dims.len(),
                rule.dimension()
            )));
        }
        let min_side = 2 * rule.max_sup_norm() as usize + 1;
        if let Some(&bad) = dims.iter().find(|&&l| l < min_side) {
            return Err(Error::Config(format!(
                "side length {bad} < {min_side}: neighborhoods would alias on the torus"
            )));
        }
        let probe = LatticeState::all_minus(dims)?;
        let n_sites = probe.len();
        if n_sites > u32::MAX as usize {
            return Err(Error::Resource("torus too large".into()));
        }
        let plus_masks = rule
            .minimal_plus_sets()?
            .sets
            .iter()
            .map(|s| s.iter().fold(0u32, |m, &i| m | 1 << i))
            .collect();
        let nbhd = rule.neighborhood();
        let path = if rows {
            let row_len = *dims.last().unwrap();
            let outer = &dims[..dims.len() - 1];
            let n_rows = n_sites / row_len;
            let row_neighbors = nbhd
                .iter()
                .map(|u| {
                    (0..n_rows)
                        .map(|row| {
                            let c = if outer.is_empty() { vec![] } else { coords(outer, row) };
                            let p: Vec<i64> = c.iter().zip(u).map(|(&c, &o)| c as i64 + o).collect();
                            if outer.is_empty() {
                                0
                            } else {
                                site_index(outer, &p)
                            }
                        })
                        .collect()
                })
                .collect();
            let col_shift = nbhd
                .iter()
                .map(|u| u[u.len() - 1].rem_euclid(row_len as i64) as usize)
                .collect();
            UpdatePath::Rows { row_len, words_per_row: row_len / 64, row_neighbors, col_shift }
        } else {
            let mut neighbors = Vec::with_capacity(n_sites * nbhd.len());
            for site in 0..n_sites {
                let c = coords(dims, site);
                for u in nbhd {
                    let p: Vec<i64> = c.iter().zip(u).map(|(&c, &o)| c as i64 + o).collect();
                    neighbors.push(site_index(dims, &p) as u32);
                }
            }
            UpdatePath::Gather { neighbors }
        };
        Ok(Engine { rule: rule.clone(), dims: dims.to_vec(), n_sites, plus_masks, path })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn rule(&self) -> &RuleSpec {
        &self.rule
    }

    pub fn uses_row_path(&self) -> bool {
        matches!(self.path, UpdatePath::Rows { .. })
    }

    fn check_state(&self, state: &LatticeState) -> Result<()> {
        if state.dims != self.dims {
            return Err(Error::Config(format!(
                "state dims {:?} differ from engine dims {:?}",
                state.dims, self.dims
            )));
        }
        Ok(())
    }

    pub fn step_deterministic(&self, state: &LatticeState) -> Result<LatticeState> {
        self.step_noisy(state, &NoiseModel::noiseless(), &RngKey::new(0), 0)
    }

    pub fn step_noisy(
        &self,
        state: &LatticeState,
        noise: &NoiseModel,
        key: &RngKey,
        t: u64,
    ) -> Result<LatticeState> {
        self.step_keyed(state, noise, key, t, |site| site as u64)
    }

    /// Noisy step with the generator keyed on `site_key(x)` instead of `x`.
    pub(crate) fn step_keyed<F>(
        &self,
        state: &LatticeState,
        noise: &NoiseModel,
        key: &RngKey,
        t: u64,
        site_key: F,
    ) -> Result<LatticeState>
    where
        F: Fn(usize) -> u64 + Sync,
    {
        self.check_state(state)?;
        noise.check_rule(&self.rule)?;
        let base = key.step_base(t);
        let r = self.rule.size();
        let mut out = vec![0u64; state.words.len()];
        let fill = |(chunk, words): (usize, &mut [u64])| {
            let mut planes = vec![0u64; r];
            for (k, word) in words.iter_mut().enumerate() {
                let w = chunk * WORDS_PER_TASK + k;
                *word = match &self.path {
                    UpdatePath::Rows { .. } => {
                        self.gather_planes(state, w, &mut planes);
                        self.sliced_word(&planes, w, noise, base, &site_key)
                    }
                    UpdatePath::Gather { neighbors } => {
                        self.gathered_word(state, neighbors, w, noise, base, &site_key)
                    }
                };
            }
        };
        if out.len() <= WORDS_PER_TASK {
            fill((0, &mut out));
        } else {
            out.par_chunks_mut(WORDS_PER_TASK).enumerate().for_each(fill);
        }
        Ok(LatticeState { dims: self.dims.clone(), len: self.n_sites, words: out })
    }

    fn gather_planes(&self, state: &LatticeState, w: usize, planes: &mut [u64]) {
        let UpdatePath::Rows { row_len, words_per_row, row_neighbors, col_shift } = &self.path else {
            unreachable!()
        };
        let row = w / words_per_row;
        let col = (w % words_per_row) * 64;
        for (i, plane) in planes.iter_mut().enumerate() {
            let nrow = row_neighbors[i][row];
            let words = &state.words[nrow * words_per_row..(nrow + 1) * words_per_row];
            let start = (col + col_shift[i]) % row_len;
            let (wi, b) = (start / 64, start % 64);
            *plane = if b == 0 {
                words[wi]
            } else {
                (words[wi] >> b) | (words[(wi + 1) % words_per_row] << (64 - b))
            };
        }
    }

    #[inline]
    fn sliced_word<F: Fn(usize) -> u64>(
        &self,
        planes: &[u64],
        w: usize,
        noise: &NoiseModel,
        base: u64,
        site_key: &F,
    ) -> u64 {
        let config_of = |j: usize| {
            planes
                .iter()
                .enumerate()
                .fold(0usize, |acc, (i, p)| acc | ((p >> j & 1) as usize) << i)
        };
        let det = if self.plus_masks.len() <= MAX_SLICED_TERMS {
            self.plus_masks.iter().fold(0u64, |acc, &mask| {
                let term = planes
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask >> i & 1 == 1)
                    .fold(u64::MAX, |t, (_, p)| t & p);
                acc | term
            })
        } else {
            (0..64).fold(0u64, |acc, j| acc | (self.rule.output(config_of(j)) as u64) << j)
        };
        if let NoiseKind::Symmetric { eps } = noise.kind {
            if eps == 0.0 {
                return det;
            }
        }
        let mut out = 0u64;
        for j in 0..64 {
            let prescribed = det >> j & 1 == 1;
            let config = if noise.depends_only_on_prescription() { 0 } else { config_of(j) };
            let site = w * 64 + j;
            if sample(noise.p_plus(prescribed, config), base, site_key(site)) {
                out |= 1 << j;
            }
        }
        out
    }

    #[inline]
    fn gathered_word<F: Fn(usize) -> u64>(
        &self,
        state: &LatticeState,
        neighbors: &[u32],
        w: usize,
        noise: &NoiseModel,
        base: u64,
        site_key: &F,
    ) -> u64 {
        let r = self.rule.size();
        let mut out = 0u64;
        let end = (w * 64 + 64).min(self.n_sites);
        for site in w * 64..end {
            let config = neighbors[site * r..(site + 1) * r]
                .iter()
                .enumerate()
                .fold(0usize, |acc, (i, &n)| acc | (state.get(n as usize) as usize) << i);
            let prescribed = self.rule.output(config);
            if sample(noise.p_plus(prescribed, config), base, site_key(site)) {
                out |= 1 << (site % 64);
            }
        }
        out
    }
}

pub fn step_deterministic(state: &LatticeState, rule: &RuleSpec) -> Result<LatticeState> {
    Engine::new(rule, state.dims())?.step_deterministic(state)
}

pub fn step_noisy(
    state: &LatticeState,
    rule: &RuleSpec,
    noise: &NoiseModel,
    key: &RngKey,
    t: u64,
) -> Result<LatticeState> {
    Engine::new(rule, state.dims())?.step_noisy(state, noise, key, t)
}

/// Runs `f` on a dedicated pool of `threads` workers, or on the global
/// pool when `threads` is `None`.
pub fn with_threads<R, F>(threads: Option<usize>, f: F) -> Result<R>
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Binary PPM image of a two-dimensional state: one pixel per site, white
/// for `+1`, rows along the first coordinate.
pub fn ppm_frame(state: &LatticeState) -> Result<Vec<u8>> {
    let [h, w] = state.dims() else {
        return Err(Error::Config("PPM frames need a two-dimensional torus".into()));
    };
    Ok(ppm(*w, *h, (0..state.len()).map(|x| state.get(x))))
}

/// Space-time strip of one-dimensional states, one row per state.
pub fn ppm_strip(states: &[LatticeState]) -> Result<Vec<u8>> {
    let Some(first) = states.first() else {
        return Err(Error::Config("no states to render".into()));
    };
    if first.dims().len() != 1 || states.iter().any(|s| s.dims() != first.dims()) {
        return Err(Error::Config("PPM strips need one-dimensional states of equal length".into()));
    }
    Ok(ppm(first.len(), states.len(), states.iter().flat_map(|s| (0..s.len()).map(|x| s.get(x)))))
}

fn ppm(width: usize, height: usize, pixels: impl Iterator<Item = bool>) -> Vec<u8> {
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    for plus in pixels {
        out.extend_from_slice(if plus { &[255; 3] } else { &[0; 3] });
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", content = "steps", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ErosionOutcome {
    Erased(u64),
    Persists(u64),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErosionTrace {
    pub outcome: ErosionOutcome,
    pub dims: Vec<usize>,
    pub cutoff: u64,
    /// Minus-site count at each step, starting with the initial island.
    pub island_sizes: Vec<usize>,
}

/// Largest coordinate extent of the island's bounding box.
pub fn island_diameter(island: &[Offset]) -> u64 {
    let Some(first) = island.first() else { return 0 };
    (0..first.len())
        .map(|k| {
            let lo = island.iter().map(|p| p[k]).min().unwrap();
            let hi = island.iter().map(|p| p[k]).max().unwrap();
            (hi - lo) as u64
        })
        .max()
        .unwrap_or(0)
}

pub fn default_cutoff(diameter: u64) -> u64 {
    64 * (diameter + 1)
}

/// Smallest side length for which an island's light cone cannot wrap
/// within `cutoff` steps.
pub fn erosion_side(rule: &RuleSpec, island: &[Offset], cutoff: u64) -> usize {
    let v = rule.max_manhattan();
    let min = (2 * cutoff * v + island_diameter(island)) as usize;
    min.max(2 * rule.max_sup_norm() as usize + 1)
}

/// Torus for [`erosion_time`], with the last side rounded up to a multiple
/// of 64 so the row path applies.
pub fn erosion_dims(rule: &RuleSpec, island: &[Offset], cutoff: u64) -> Vec<usize> {
    let side = erosion_side(rule, island, cutoff);
    let mut dims = vec![side; rule.dimension()];
    *dims.last_mut().unwrap() = side.div_ceil(64) * 64;
    dims
}

/// Iterates the deterministic map from all-plus-except-island, recording
/// the island size after each step. `on_step` sees every state, starting
/// with the initial one.
pub fn erosion_trace_with<F>(
    rule: &RuleSpec,
    island: &[Offset],
    dims: &[usize],
    cutoff: u64,
    mut on_step: F,
) -> Result<ErosionTrace>
where
    F: FnMut(u64, &LatticeState),
{
    if island.iter().any(|p| p.len() != rule.dimension()) {
        return Err(Error::InputShape("island point of wrong dimension".into()));
    }
    let need = erosion_side(rule, island, cutoff);
    if let Some(&bad) = dims.iter().find(|&&l| l < need) {
        return Err(Error::Config(format!(
            "side {bad} < {need}: the island's light cone would wrap within {cutoff} steps"
        )));
    }
    let engine = Engine::new(rule, dims)?;
    let mut state = LatticeState::all_plus(dims)?;
    for p in island {
        let site = state.site_index(p);
        state.set(site, false);
    }
    let mut sizes = vec![state.count_minus()];
    on_step(0, &state);
    let mut outcome = ErosionOutcome::Persists(cutoff);
    if state.is_all_plus() {
        outcome = ErosionOutcome::Erased(0);
    } else {
        for n in 1..=cutoff {
            let next = engine.step_deterministic(&state)?;
            sizes.push(next.count_minus());
            on_step(n, &next);
            if next.is_all_plus() {
                outcome = ErosionOutcome::Erased(n);
                break;
            }
            if next == state {
                // Fixed point other than all-plus.
                break;
            }
            state = next;
        }
    }
    Ok(ErosionTrace { outcome, dims: dims.to_vec(), cutoff, island_sizes: sizes })
}

pub fn erosion_trace(rule: &RuleSpec, island: &[Offset], dims: &[usize], cutoff: u64) -> Result<ErosionTrace> {
    erosion_trace_with(rule, island, dims, cutoff, |_, _| {})
}

pub fn erosion_time(rule: &RuleSpec, island: &[Offset], dims: &[usize], cutoff: u64) -> Result<ErosionOutcome> {
    Ok(erosion_trace(rule, island, dims, cutoff)?.outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rule::builtin;
    use proptest::prelude::*;

    fn ring_with_minuses(len: usize, minus: &[usize]) -> LatticeState {
        let mut s = LatticeState::all_plus(&[len]).unwrap();
        for &m in minus {
            s.set(m, false);
        }
        s
    }

    fn minus_sites(s: &LatticeState) -> Vec<usize> {
        (0..s.len()).filter(|&i| !s.get(i)).collect()
    }

    fn random_state(dims: &[usize], seed: u64, p_plus: f64) -> LatticeState {
        let mut s = LatticeState::all_minus(dims).unwrap();
        let key = RngKey::new(seed);
        for site in 0..s.len() {
            s.set(site, key.uniform(999, site as u64) < p_plus);
        }
        s
    }

    #[test]
    fn all_plus_is_invariant() {
        for name in crate::rule::BUILTIN_NAMES {
            let rule = builtin(name).unwrap();
            let dims = vec![64; rule.dimension()];
            let s = LatticeState::all_plus(&dims).unwrap();
            assert_eq!(step_deterministic(&s, &rule).unwrap(), s);
        }
    }

    #[test]
    fn stavskaya_island_shrinks() {
        let rule = builtin("stavskaya").unwrap();
        let s = ring_with_minuses(8, &[2, 3, 4]);
        assert_eq!(minus_sites(&step_deterministic(&s, &rule).unwrap()), vec![2, 3]);
    }

    #[test]
    fn nec_single_minus_vanishes() {
        let rule = builtin("nec").unwrap();
        let mut s = LatticeState::all_plus(&[5, 7]).unwrap();
        s.set(0, false);
        assert!(step_deterministic(&s, &rule).unwrap().is_all_plus());
    }

    #[test]
    fn aliasing_dims_rejected() {
        let rule = builtin("majority1d").unwrap();
        let s = LatticeState::all_plus(&[2]).unwrap();
        assert!(matches!(step_deterministic(&s, &rule), Err(Error::Config(_))));
    }

    #[test]
    fn zero_noise_matches_deterministic() {
        let rule = builtin("nec").unwrap();
        let s = random_state(&[16, 128], 3, 0.6);
        let a = step_deterministic(&s, &rule).unwrap();
        let b = step_noisy(&s, &rule, &NoiseModel::symmetric(0.0).unwrap(), &RngKey::new(5), 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn row_and_gather_paths_agree() {
        let noises = [
            NoiseModel::noiseless(),
            NoiseModel::symmetric(0.2).unwrap(),
            NoiseModel::biased(0.1, 0.3).unwrap(),
        ];
        let cases: Vec<(RuleSpec, Vec<usize>)> = vec![
            (builtin("nec").unwrap(), vec![6, 128]),
            (builtin("stavskaya").unwrap(), vec![192]),
            (builtin("majority1d").unwrap(), vec![64]),
            (
                RuleSpec::from_plus_sets(2, vec![vec![-2, 1], vec![0, 0], vec![3, -1], vec![0, 7]], &[vec![0, 3], vec![1], vec![2, 3]])
                    .unwrap(),
                vec![15, 128],
            ),
        ];
        for (rule, dims) in cases {
            let fast = Engine::new(&rule, &dims).unwrap();
            let slow = Engine::reference(&rule, &dims).unwrap();
            assert!(fast.uses_row_path() && !slow.uses_row_path());
            let mut table_noise = vec![0.0; rule.table().len()];
            for (c, p) in table_noise.iter_mut().enumerate() {
                *p = (c as f64 + 0.5) / rule.table().len() as f64;
            }
            let mut all = noises.to_vec();
            all.push(NoiseModel::table(table_noise).unwrap());
            for (seed, noise) in all.iter().enumerate() {
                let s = random_state(&dims, seed as u64, 0.7);
                let key = RngKey::new(seed as u64 + 100);
                assert_eq!(
                    fast.step_noisy(&s, noise, &key, 3).unwrap(),
                    slow.step_noisy(&s, noise, &key, 3).unwrap()
                );
            }
        }
    }

    #[test]
    fn half_noise_gives_unbiased_sites() {
        let rule = builtin("nec").unwrap();
        let engine = Engine::new(&rule, &[64, 64]).unwrap();
        let noise = NoiseModel::symmetric(0.5).unwrap();
        let key = RngKey::new(11);
        let mut s = LatticeState::all_plus(&[64, 64]).unwrap();
        let mut total = 0.0;
        for t in 0..100 {
            s = engine.step_noisy(&s, &noise, &key, t).unwrap();
            total += s.magnetization();
        }
        let mean = total / 100.0;
        let se = (1.0 / (4096.0 * 100.0f64)).sqrt();
        assert!(mean.abs() < 4.0 * se, "mean magnetization {mean}");
    }

    #[test]
    fn thread_count_does_not_change_trajectories() {
        let rule = builtin("nec").unwrap();
        let engine = Engine::new(&rule, &[64, 128]).unwrap();
        let noise = NoiseModel::symmetric(0.1).unwrap();
        let run = |threads| {
            with_threads(Some(threads), || {
                let mut s = LatticeState::all_plus(&[64, 128]).unwrap();
                for t in 0..10 {
                    s = engine.step_noisy(&s, &noise, &RngKey::new(4), t).unwrap();
                }
                s
            })
            .unwrap()
        };
        assert_eq!(run(1), run(8));
    }

    #[test]
    fn assumption_constants() {
        for name in crate::rule::BUILTIN_NAMES {
            let rule = builtin(name).unwrap();
            for eps in [0.0, 0.05, 0.1] {
                let report = check_assumptions(&NoiseModel::symmetric(eps).unwrap(), &rule).unwrap();
                assert_eq!(report, AssumptionReport { eps, alpha: 0.0 });
            }
        }
        let stav = builtin("stavskaya").unwrap();
        let report = check_assumptions(&NoiseModel::biased(0.1, 0.0).unwrap(), &stav).unwrap();
        assert_eq!(report, AssumptionReport { eps: 0.1, alpha: 0.0 });
    }

    #[test]
    fn table_noise_assumptions() {
        let stav = builtin("stavskaya").unwrap();
        // Kernel that reacts to the second input even when the prescription
        // does not change.
        let table = NoiseModel::table(vec![0.1, 0.8, 0.9, 0.95]).unwrap();
        let report = check_assumptions(&table, &stav).unwrap();
        assert!((report.eps - 0.2).abs() < 1e-12);
        // p(-|01) = 0.2 vs p(-|11) = 0.05 → 0.15/0.2
        assert!((report.alpha - 0.75).abs() < 1e-12);
        let hard = NoiseModel::table(vec![0.0, 1.0, 0.9, 0.95]).unwrap();
        assert_eq!(check_assumptions(&hard, &stav).unwrap().alpha, f64::INFINITY);
        let short = NoiseModel::table(vec![0.0, 1.0]).unwrap();
        assert!(check_assumptions(&short, &stav).is_err());
    }

    #[test]
    fn erosion_examples() {
        let stav = builtin("stavskaya").unwrap();
        for k in [1i64, 5, 12] {
            let island: Vec<Offset> = (0..k).map(|i| vec![i]).collect();
            let cutoff = default_cutoff(island_diameter(&island));
            let dims = erosion_dims(&stav, &island, cutoff);
            assert_eq!(erosion_time(&stav, &island, &dims, cutoff).unwrap(), ErosionOutcome::Erased(k as u64));
        }
        let nec = builtin("nec").unwrap();
        let island = vec![vec![0, 0]];
        let dims = erosion_dims(&nec, &island, 64);
        assert_eq!(erosion_time(&nec, &island, &dims, 64).unwrap(), ErosionOutcome::Erased(1));
        let maj = builtin("majority1d").unwrap();
        let island = vec![vec![0], vec![1]];
        let dims = erosion_dims(&maj, &island, 100);
        assert_eq!(erosion_time(&maj, &island, &dims, 100).unwrap(), ErosionOutcome::Persists(100));
        assert!(matches!(erosion_time(&maj, &island, &[50], 100), Err(Error::Config(_))));
    }

    #[test]
    fn ppm_layout() {
        let mut s = LatticeState::all_plus(&[2, 3]).unwrap();
        s.set(1, false);
        let img = ppm_frame(&s).unwrap();
        assert!(img.starts_with(b"P6\n3 2\n255\n"));
        let body = &img[img.len() - 18..];
        assert_eq!(&body[3..6], &[0, 0, 0]);
        assert_eq!(&body[..3], &[255, 255, 255]);
        let strip = ppm_strip(&vec![LatticeState::all_plus(&[4]).unwrap(); 3]).unwrap();
        assert!(strip.starts_with(b"P6\n4 3\n255\n"));
        assert!(ppm_frame(&LatticeState::all_plus(&[4]).unwrap()).is_err());
    }

    #[test]
    fn ppm_friendly_coords() {
        let s = LatticeState::all_plus(&[3, 5]).unwrap();
        assert_eq!(s.site_index(&[1, 2]), 7);
        assert_eq!(s.coords(7), vec![1, 2]);
        assert_eq!(s.site_index(&[-1, -1]), 14);
    }

    proptest! {
        #[test]
        fn monotone_coupling(seed in any::<u64>()) {
            let rule = builtin("nec").unwrap();
            let engine = Engine::new(&rule, &[8, 64]).unwrap();
            let lo = random_state(&[8, 64], seed, 0.4);
            let mut hi = lo.clone();
            let extra = random_state(&[8, 64], seed ^ 1, 0.3);
            for site in 0..hi.len() {
                if extra.get(site) { hi.set(site, true); }
            }
            prop_assert!(lo.le(&hi));
            prop_assert!(engine.step_deterministic(&lo).unwrap().le(&engine.step_deterministic(&hi).unwrap()));
        }

        #[test]
        fn translation_covariance(seed in any::<u64>(), sx in -10i64..10, sy in -10i64..10) {
            let rule = builtin("nec").unwrap();
            let dims = [6usize, 10];
            let engine = Engine::new(&rule, &dims).unwrap();
            let s = random_state(&dims, seed, 0.5);
            let shift = [sx, sy];
            let a = engine.step_deterministic(&s.shifted(&shift)).unwrap();
            let b = engine.step_deterministic(&s).unwrap().shifted(&shift);
            prop_assert_eq!(a, b);
            // Noisy version: the shifted run draws for site x what the
            // unshifted run drew for x - shift.
            let noise = NoiseModel::symmetric(0.3).unwrap();
            let key = RngKey::new(seed);
            let inverse = [-sx, -sy];
            let a = engine
                .step_keyed(&s.shifted(&shift), &noise, &key, 2, |x| {
                    let c: Vec<i64> = coords(&dims, x).iter().zip(&inverse).map(|(&c, &o)| c as i64 + o).collect();
                    site_index(&dims, &c) as u64
                })
                .unwrap();
            let b = engine.step_noisy(&s, &noise, &key, 2).unwrap().shifted(&shift);
            prop_assert_eq!(a, b);
        }
    }
}
