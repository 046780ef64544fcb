//! Exact computations on tiny tori.
//!
//! A distribution over the `2^N` configurations of a torus is a dense
//! vector indexed by the bit-packed state code of [`LatticeState`]. The
//! transfer operator is never materialized: when the noise depends only on
//! the prescription, one step is the pushforward through the deterministic
//! map followed by an independent two-state channel at every site, which
//! costs `O(2^N · N)`. General kernels fall back to summing one product
//! measure per source state.
//!
//! These are finite-state stand-ins. Nothing here computes infinite-volume
//! measures; the window-consistency check is what ties the two together.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{coords, site_index, LatticeState, NoiseModel};
use crate::rule::{Offset, RuleSpec, Spin};

pub const MAX_EXACT_SITES: usize = 24;
/// Kernels that look past the prescription cost `4^N`; keep them small.
pub const MAX_GENERAL_KERNEL_SITES: usize = 14;
pub const MAX_WINDOW: usize = 20;

const MASS_TOLERANCE: f64 = 1e-12;
const CESARO_AFTER: usize = 10_000;
const ITERATION_CAP: usize = 1_000_000;

fn site_count(dims: &[usize]) -> Result<usize> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::Config(format!("invalid torus dimensions {dims:?}")));
    }
    let n = dims.iter().try_fold(1usize, |a, &l| a.checked_mul(l));
    match n {
        Some(n) if n <= MAX_EXACT_SITES => Ok(n),
        _ => Err(Error::Resource(format!(
            "torus {dims:?} exceeds the exact-oracle cap of {MAX_EXACT_SITES} sites"
        ))),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateDistribution {
    dims: Vec<usize>,
    probs: Vec<f64>,
}

impl StateDistribution {
    pub fn new(dims: &[usize], probs: Vec<f64>) -> Result<Self> {
        let n = site_count(dims)?;
        if probs.len() != 1 << n {
            return Err(Error::InputShape(format!("expected {} probabilities, got {}", 1usize << n, probs.len())));
        }
        if probs.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::Validation("probabilities must be nonnegative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::Validation(format!("probabilities sum to {total}")));
        }
        Ok(StateDistribution { dims: dims.to_vec(), probs })
    }

    pub fn point_mass(state: &LatticeState) -> Result<Self> {
        let n = site_count(state.dims())?;
        let mut probs = vec![0.0; 1 << n];
        probs[state.code() as usize] = 1.0;
        Ok(StateDistribution { dims: state.dims().to_vec(), probs })
    }

    pub fn all_plus(dims: &[usize]) -> Result<Self> {
        site_count(dims)?;
        Self::point_mass(&LatticeState::all_plus(dims)?)
    }

    pub fn all_minus(dims: &[usize]) -> Result<Self> {
        site_count(dims)?;
        Self::point_mass(&LatticeState::all_minus(dims)?)
    }

    pub fn uniform(dims: &[usize]) -> Result<Self> {
        let n = site_count(dims)?;
        Ok(StateDistribution { dims: dims.to_vec(), probs: vec![1.0 / (1u64 << n) as f64; 1 << n] })
    }

    /// Product measure with the given per-site minus probabilities.
    pub fn product(dims: &[usize], spec: &ProductMeasureSpec) -> Result<Self> {
        let n = site_count(dims)?;
        let m = spec.per_site(n)?;
        let mut probs = vec![1.0];
        for &mx in &m {
            let mut next = Vec::with_capacity(probs.len() * 2);
            next.extend(probs.iter().map(|p| p * mx));
            next.extend(probs.iter().map(|p| p * (1.0 - mx)));
            probs = next;
        }
        Ok(StateDistribution { dims: dims.to_vec(), probs })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_sites(&self) -> usize {
        self.probs.len().trailing_zeros() as usize
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, state: &LatticeState) -> f64 {
        self.probs[state.code() as usize]
    }

    /// Probability that `site` holds `-1`.
    pub fn minus_marginal(&self, site: usize) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .filter(|(s, _)| s >> site & 1 == 0)
            .map(|(_, p)| p)
            .sum()
    }

    /// Joint law of the given sites; entry `c` has bit `i` set when
    /// `sites[i]` is `+1`.
    pub fn window_marginal(&self, sites: &[usize]) -> Vec<f64> {
        let mut out = vec![0.0; 1 << sites.len()];
        for (s, &p) in self.probs.iter().enumerate() {
            out[window_config(s, sites)] += p;
        }
        out
    }

    /// Image under the global spin flip.
    pub fn flipped(&self) -> StateDistribution {
        let mask = self.probs.len() - 1;
        let mut probs = vec![0.0; self.probs.len()];
        for (s, &p) in self.probs.iter().enumerate() {
            probs[!s & mask] = p;
        }
        StateDistribution { dims: self.dims.clone(), probs }
    }

    fn renormalize(&mut self) {
        let total: f64 = self.probs.iter().sum();
        if total > 0.0 {
            for p in &mut self.probs {
                *p /= total;
            }
        }
    }
}

#[inline]
fn window_config(state: usize, sites: &[usize]) -> usize {
    sites.iter().enumerate().fold(0, |c, (i, &x)| c | (state >> x & 1) << i)
}

/// Real function of the spins in a finite window of `Z^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CylinderFunction {
    pub window: Vec<Offset>,
    /// Value per window configuration; bit `i` set means `window[i]` is `+1`.
    pub table: Vec<f64>,
}

impl CylinderFunction {
    pub fn new(window: Vec<Offset>, table: Vec<f64>) -> Result<Self> {
        if window.len() > MAX_WINDOW {
            return Err(Error::Resource(format!("window larger than {MAX_WINDOW} sites")));
        }
        if table.len() != 1 << window.len() {
            return Err(Error::InputShape(format!(
                "{} window sites need {} table entries, got {}",
                window.len(),
                1usize << window.len(),
                table.len()
            )));
        }
        for (i, w) in window.iter().enumerate() {
            if window[..i].contains(w) {
                return Err(Error::Validation(format!("window site {w:?} repeated")));
            }
        }
        Ok(CylinderFunction { window, table })
    }

    pub fn constant(value: f64) -> Self {
        CylinderFunction { window: vec![], table: vec![value] }
    }

    /// The spin at `point`, as `±1`.
    pub fn spin(point: Offset) -> Self {
        CylinderFunction { window: vec![point], table: vec![-1.0, 1.0] }
    }

    /// Product of the spins at `points`.
    pub fn spin_product(points: Vec<Offset>) -> Result<Self> {
        let table = (0..1usize << points.len())
            .map(|c| if (points.len() as u32 - c.count_ones()).is_multiple_of(2) { 1.0 } else { -1.0 })
            .collect();
        Self::new(points, table)
    }

    pub fn eval(&self, config: usize) -> f64 {
        self.table[config]
    }

    /// Torus sites of the window, failing if two points coincide after
    /// wrapping or have the wrong dimension.
    pub fn sites_on(&self, dims: &[usize]) -> Result<Vec<usize>> {
        torus_sites(&self.window, dims)
    }

    /// Value on every torus state, as a dense vector.
    pub fn on_torus(&self, dims: &[usize]) -> Result<Vec<f64>> {
        let n = site_count(dims)?;
        let sites = self.sites_on(dims)?;
        Ok((0..1usize << n).map(|s| self.table[window_config(s, &sites)]).collect())
    }
}

fn torus_sites(points: &[Offset], dims: &[usize]) -> Result<Vec<usize>> {
    let mut sites = Vec::with_capacity(points.len());
    for p in points {
        if p.len() != dims.len() {
            return Err(Error::InputShape(format!("window point {p:?} is not {}-dimensional", dims.len())));
        }
        let s = site_index(dims, p);
        if sites.contains(&s) {
            return Err(Error::Domain(format!("window point {p:?} wraps onto another window site")));
        }
        sites.push(s);
    }
    Ok(sites)
}

/// Per-site minus probabilities of a product measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProductMeasureSpec {
    Sites(Vec<f64>),
    Uniform(f64),
}

impl ProductMeasureSpec {
    fn validate(&self) -> Result<()> {
        let ok = |m: f64| (0.0..=1.0).contains(&m);
        let valid = match self {
            ProductMeasureSpec::Sites(ms) => ms.iter().all(|&m| ok(m)),
            ProductMeasureSpec::Uniform(m) => ok(*m),
        };
        if valid {
            Ok(())
        } else {
            Err(Error::Validation("minus probabilities must lie in [0, 1]".into()))
        }
    }

    fn per_site(&self, n: usize) -> Result<Vec<f64>> {
        self.validate()?;
        match self {
            ProductMeasureSpec::Uniform(m) => Ok(vec![*m; n]),
            ProductMeasureSpec::Sites(ms) if ms.len() == n => Ok(ms.clone()),
            ProductMeasureSpec::Sites(ms) => {
                Err(Error::InputShape(format!("{} site probabilities for {n} sites", ms.len())))
            }
        }
    }
}

/// Whether the product measure satisfies `μ(all of Λ minus) ≤ K ε′^|Λ|`
/// for every finite `Λ`, the empty set included.
///
/// For a list of sites the worst `Λ` collects exactly the sites with
/// `m_x > ε′`. A uniform spec describes the infinite lattice, where any
/// `m > ε′` makes the ratio unbounded.
pub fn basin_membership(spec: &ProductMeasureSpec, k: f64, eps_prime: f64) -> Result<bool> {
    if !(k >= 0.0) {
        return Err(Error::Validation(format!("K = {k} must be nonnegative")));
    }
    if !(0.0..=1.0).contains(&eps_prime) {
        return Err(Error::Validation(format!("ε′ = {eps_prime} must lie in [0, 1]")));
    }
    spec.validate()?;
    let ratio = |m: f64| {
        if m == 0.0 {
            0.0
        } else if eps_prime == 0.0 {
            f64::INFINITY
        } else {
            m / eps_prime
        }
    };
    let sup = match spec {
        ProductMeasureSpec::Uniform(m) => {
            if ratio(*m) > 1.0 {
                f64::INFINITY
            } else {
                1.0
            }
        }
        ProductMeasureSpec::Sites(ms) => ms.iter().map(|&m| ratio(m).max(1.0)).product(),
    };
    Ok(sup <= k)
}

/// The transfer operator of a noisy rule on a fixed small torus.
#[derive(Clone, Debug)]
pub struct TransferOperator {
    dims: Vec<usize>,
    n: usize,
    rule: RuleSpec,
    noise: NoiseModel,
    /// `neighbors[x][i]`: torus site of the `i`-th neighbor of `x`.
    neighbors: Vec<Vec<usize>>,
    /// Deterministic image of every state code.
    image: Vec<u32>,
}

impl TransferOperator {
    pub fn new(rule: &RuleSpec, noise: &NoiseModel, dims: &[usize]) -> Result<Self> {
        let n = site_count(dims)?;
        rule.validate()?;
        noise.check_rule(rule)?;
        if dims.len() != rule.dimension() {
            return Err(Error::Config(format!("torus has {} dimensions, rule has {}", dims.len(), rule.dimension())));
        }
        if !noise.depends_only_on_prescription() && n > MAX_GENERAL_KERNEL_SITES {
            return Err(Error::Resource(format!(
                "table noise is limited to {MAX_GENERAL_KERNEL_SITES} sites in the exact oracle"
            )));
        }
        let neighbors: Vec<Vec<usize>> = (0..n)
            .map(|x| {
                let c = coords(dims, x);
                rule.neighborhood()
                    .iter()
                    .map(|u| {
                        let p: Vec<i64> = c.iter().zip(u).map(|(&c, &o)| c as i64 + o).collect();
                        site_index(dims, &p)
                    })
                    .collect()
            })
            .collect();
        let mut op = TransferOperator {
            dims: dims.to_vec(),
            n,
            rule: rule.clone(),
            noise: noise.clone(),
            neighbors,
            image: Vec::new(),
        };
        op.image = (0..1usize << n)
            .map(|s| {
                (0..n).fold(0u32, |acc, x| acc | (op.rule.output(op.local_config(s, x)) as u32) << x)
            })
            .collect();
        Ok(op)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    #[inline]
    fn local_config(&self, state: usize, x: usize) -> usize {
        window_config(state, &self.neighbors[x])
    }

    /// Deterministic image of a state code.
    pub fn image(&self, state: usize) -> usize {
        self.image[state] as usize
    }

    fn check_dims(&self, dims: &[usize]) -> Result<()> {
        if dims != self.dims.as_slice() {
            return Err(Error::Config(format!("distribution on {dims:?}, operator on {:?}", self.dims)));
        }
        Ok(())
    }

    pub fn apply(&self, dist: &StateDistribution) -> Result<StateDistribution> {
        self.check_dims(&dist.dims)?;
        let mut out = StateDistribution { dims: self.dims.clone(), probs: self.apply_linear(&dist.probs) };
        out.renormalize();
        Ok(out)
    }

    /// Applies the kernel to an arbitrary (possibly signed) vector.
    pub fn apply_linear(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), 1 << self.n);
        if self.noise.depends_only_on_prescription() {
            let mut out = vec![0.0; v.len()];
            for (s, &p) in v.iter().enumerate() {
                out[self.image[s] as usize] += p;
            }
            self.channel(&mut out);
            out
        } else {
            self.apply_general(v)
        }
    }

    fn channel(&self, v: &mut [f64]) {
        let p_minus = self.noise.p_plus(false, 0);
        let p_plus = self.noise.p_plus(true, 0);
        for x in 0..self.n {
            let bit = 1usize << x;
            for i in 0..v.len() {
                if i & bit != 0 {
                    continue;
                }
                let (from_minus, from_plus) = (v[i], v[i | bit]);
                v[i] = (1.0 - p_minus) * from_minus + (1.0 - p_plus) * from_plus;
                v[i | bit] = p_minus * from_minus + p_plus * from_plus;
            }
        }
    }

    fn channel_transpose(&self, f: &mut [f64]) {
        let p_minus = self.noise.p_plus(false, 0);
        let p_plus = self.noise.p_plus(true, 0);
        for x in 0..self.n {
            let bit = 1usize << x;
            for i in 0..f.len() {
                if i & bit != 0 {
                    continue;
                }
                let (to_minus, to_plus) = (f[i], f[i | bit]);
                f[i] = (1.0 - p_minus) * to_minus + p_minus * to_plus;
                f[i | bit] = (1.0 - p_plus) * to_minus + p_plus * to_plus;
            }
        }
    }

    fn site_probs(&self, s: usize) -> Vec<f64> {
        (0..self.n)
            .map(|x| {
                let config = self.local_config(s, x);
                self.noise.p_plus(self.rule.output(config), config)
            })
            .collect()
    }

    fn product_vector(&self, p_plus: &[f64]) -> Vec<f64> {
        let mut prod = vec![1.0; 1 << self.n];
        for (x, &p) in p_plus.iter().enumerate() {
            let bit = 1usize << x;
            for (t, w) in prod.iter_mut().enumerate() {
                *w *= if t & bit != 0 { p } else { 1.0 - p };
            }
        }
        prod
    }

    fn apply_general(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for (s, &w) in v.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let prod = self.product_vector(&self.site_probs(s));
            for (o, p) in out.iter_mut().zip(prod) {
                *o += w * p;
            }
        }
        out
    }

    /// Sites forced to `+1` and to `-1` in the next state, as masks.
    fn forced(&self, s: usize) -> (usize, usize) {
        let (mut plus, mut minus) = (0, 0);
        for x in 0..self.n {
            let config = self.local_config(s, x);
            let p = self.noise.p_plus(self.rule.output(config), config);
            if p >= 1.0 {
                plus |= 1 << x;
            } else if p <= 0.0 {
                minus |= 1 << x;
            }
        }
        (plus, minus)
    }

    /// The unique absorbing state, if there is one and every state can
    /// reach it. Its point mass is then the only stationary law.
    pub fn absorbing_attractor(&self) -> Option<usize> {
        let full = (1usize << self.n) - 1;
        let absorbing: Vec<usize> = (0..=full)
            .filter(|&s| {
                let (plus, minus) = self.forced(s);
                plus | minus == full && plus == s
            })
            .collect();
        let [target] = absorbing[..] else { return None };
        if self.n > MAX_GENERAL_KERNEL_SITES {
            return None;
        }
        let forced: Vec<(usize, usize)> = (0..=full).map(|s| self.forced(s)).collect();
        let mut reaches = vec![false; full + 1];
        reaches[target] = true;
        let mut members = vec![target];
        loop {
            let before = members.len();
            for s in 0..=full {
                if reaches[s] {
                    continue;
                }
                let (plus, minus) = forced[s];
                if members.iter().any(|&t| t & plus == plus && t & minus == 0) {
                    reaches[s] = true;
                    members.push(s);
                }
            }
            if members.len() == before {
                break;
            }
        }
        (members.len() == full + 1).then_some(target)
    }

    /// Dual action on functions of the state: `(T f)(ω) = E[f(ξ) | ω]`.
    pub fn dual_apply(&self, f: &[f64]) -> Vec<f64> {
        assert_eq!(f.len(), 1 << self.n);
        if self.noise.depends_only_on_prescription() {
            let mut g = f.to_vec();
            self.channel_transpose(&mut g);
            (0..f.len()).map(|s| g[self.image[s] as usize]).collect()
        } else {
            (0..f.len())
                .map(|s| {
                    let prod = self.product_vector(&self.site_probs(s));
                    prod.iter().zip(f).map(|(p, v)| p * v).sum()
                })
                .collect()
        }
    }
}

pub fn transfer_apply(dist: &StateDistribution, rule: &RuleSpec, noise: &NoiseModel) -> Result<StateDistribution> {
    TransferOperator::new(rule, noise, &dist.dims)?.apply(dist)
}

/// Half the L1 distance.
pub fn tv_distance(a: &StateDistribution, b: &StateDistribution) -> Result<f64> {
    if a.dims != b.dims {
        return Err(Error::Config(format!("distributions on {:?} and {:?}", a.dims, b.dims)));
    }
    Ok(0.5 * a.probs.iter().zip(&b.probs).map(|(x, y)| (x - y).abs()).sum::<f64>())
}

pub fn cylinder_expectation(dist: &StateDistribution, f: &CylinderFunction) -> Result<f64> {
    let sites = f.sites_on(&dist.dims)?;
    Ok(dist.probs.iter().enumerate().map(|(s, p)| p * f.table[window_config(s, &sites)]).sum())
}

/// Sum over window sites of the largest change caused by flipping that
/// site alone.
pub fn seminorm(f: &CylinderFunction) -> f64 {
    (0..f.window.len())
        .map(|i| {
            (0..f.table.len())
                .map(|c| (f.table[c] - f.table[c ^ 1 << i]).abs())
                .fold(0.0, f64::max)
        })
        .sum()
}

/// Dual of the transfer operator on `Z^d`: the cylinder function on the
/// window `W + U` whose value is `E[f(ξ_W) | ω]`.
pub fn dual_cylinder(rule: &RuleSpec, noise: &NoiseModel, f: &CylinderFunction) -> Result<CylinderFunction> {
    rule.validate()?;
    noise.check_rule(rule)?;
    let mut wider: Vec<Offset> = Vec::new();
    for w in &f.window {
        if w.len() != rule.dimension() {
            return Err(Error::InputShape(format!("window point {w:?} has the wrong dimension")));
        }
        for u in rule.neighborhood() {
            let p: Offset = w.iter().zip(u).map(|(a, b)| a + b).collect();
            if !wider.contains(&p) {
                wider.push(p);
            }
        }
    }
    wider.sort();
    if wider.len() > MAX_WINDOW {
        return Err(Error::Resource(format!("dual window exceeds {MAX_WINDOW} sites")));
    }
    // Position in `wider` of each neighbor of each window point.
    let positions: Vec<Vec<usize>> = f
        .window
        .iter()
        .map(|w| {
            rule.neighborhood()
                .iter()
                .map(|u| {
                    let p: Offset = w.iter().zip(u).map(|(a, b)| a + b).collect();
                    wider.iter().position(|q| *q == p).unwrap()
                })
                .collect()
        })
        .collect();
    let k = f.window.len();
    let table = (0..1usize << wider.len())
        .map(|omega| {
            let p_plus: Vec<f64> = positions
                .iter()
                .map(|pos| {
                    let config = window_config(omega, pos);
                    noise.p_plus(rule.output(config), config)
                })
                .collect();
            (0..1usize << k)
                .map(|xi| {
                    let weight: f64 = (0..k)
                        .map(|i| if xi >> i & 1 == 1 { p_plus[i] } else { 1.0 - p_plus[i] })
                        .product();
                    weight * f.table[xi]
                })
                .sum::<f64>()
        })
        .collect();
    CylinderFunction::new(wider, table)
}

/// Result of a power iteration.
#[derive(Clone, Debug)]
pub struct StationaryResult {
    pub distribution: StateDistribution,
    pub iterations: usize,
    /// `TV(Tπ, π)` of the returned vector.
    pub residual: f64,
    pub averaged: bool,
}

pub fn stationary_distribution(
    rule: &RuleSpec,
    noise: &NoiseModel,
    dims: &[usize],
    tol: f64,
) -> Result<StateDistribution> {
    let op = TransferOperator::new(rule, noise, dims)?;
    Ok(stationary_with(&op, tol, ITERATION_CAP)?.distribution)
}

/// Power iteration from all-plus until successive iterates are within
/// `tol` in total variation. After a long stall the Cesàro average of the
/// iterates is tracked instead, which settles for periodic chains.
pub fn stationary_with(op: &TransferOperator, tol: f64, cap: usize) -> Result<StationaryResult> {
    if !(tol > 0.0) {
        return Err(Error::Validation(format!("tolerance {tol} must be positive")));
    }
    if let Some(state) = op.absorbing_attractor() {
        let distribution = StateDistribution { dims: op.dims.clone(), probs: unit_vector(op.n, state) };
        return Ok(StationaryResult { distribution, iterations: 0, residual: 0.0, averaged: false });
    }
    let mut current = StateDistribution::all_plus(&op.dims)?;
    let mut sum = vec![0.0; current.probs.len()];
    let mut count = 0usize;
    let mut last_diff = f64::NAN;
    for it in 1..=cap {
        let next = op.apply(&current)?;
        last_diff = tv_distance(&next, &current)?;
        if last_diff < tol {
            let residual = tv_distance(&op.apply(&next)?, &next)?;
            if residual < tol {
                return Ok(StationaryResult { distribution: next, iterations: it, residual, averaged: false });
            }
        }
        if it > CESARO_AFTER {
            for (s, p) in sum.iter_mut().zip(&next.probs) {
                *s += p;
            }
            count += 1;
            if count.is_multiple_of(100) {
                let mut avg = StateDistribution {
                    dims: op.dims.clone(),
                    probs: sum.iter().map(|s| s / count as f64).collect(),
                };
                avg.renormalize();
                let residual = tv_distance(&op.apply(&avg)?, &avg)?;
                if residual < tol {
                    return Ok(StationaryResult { distribution: avg, iterations: it, residual, averaged: true });
                }
            }
        }
        current = next;
    }
    Err(Error::Numerical(format!(
        "power iteration did not reach tolerance {tol} in {cap} steps (last successive TV {last_diff:e})"
    )))
}

/// `TV(T^n start, target)` for `n = 0..=steps`.
pub fn tv_curve(
    op: &TransferOperator,
    start: &StateDistribution,
    target: &StateDistribution,
    steps: usize,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(steps + 1);
    let mut cur = start.clone();
    out.push(tv_distance(&cur, target)?);
    for _ in 0..steps {
        cur = op.apply(&cur)?;
        out.push(tv_distance(&cur, target)?);
    }
    Ok(out)
}

/// Largest difference between the window marginals of `T^n δ₊` on two
/// tori, valid while the window's light cone fits inside the smaller one.
pub fn window_marginal_consistency(
    rule: &RuleSpec,
    noise: &NoiseModel,
    window: &[Offset],
    n: usize,
    dims_small: &[usize],
    dims_large: &[usize],
) -> Result<f64> {
    let radius = window
        .iter()
        .map(|w| w.iter().map(|c| c.unsigned_abs()).sum::<u64>())
        .max()
        .unwrap_or(0);
    let reach = radius + n as u64 * rule.max_manhattan();
    let min_side = dims_small.iter().chain(dims_large).copied().min().unwrap_or(0) as u64;
    if 2 * reach >= min_side {
        return Err(Error::Domain(format!(
            "window radius {radius} plus light cone {n}·{} does not fit below half the side {min_side}",
            rule.max_manhattan()
        )));
    }
    let marginal = |dims: &[usize]| -> Result<Vec<f64>> {
        let op = TransferOperator::new(rule, noise, dims)?;
        let mut dist = StateDistribution::all_plus(dims)?;
        for _ in 0..n {
            dist = op.apply(&dist)?;
        }
        Ok(dist.window_marginal(&torus_sites(window, dims)?))
    };
    let a = marginal(dims_small)?;
    let b = marginal(dims_large)?;
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}

fn unit_vector(n: usize, state: usize) -> Vec<f64> {
    let mut v = vec![0.0; 1 << n];
    v[state] = 1.0;
    v
}

fn spin_vector(n: usize, site: usize) -> Vec<f64> {
    (0..1usize << n).map(|s| Spin::from_bit(s >> site & 1 == 1).value() as f64).collect()
}

/// `cov(ω_a, ω_b)` under `dist`, spins valued `±1`.
pub fn two_point_covariance(dist: &StateDistribution, a: usize, b: usize) -> f64 {
    let n = dist.n_sites();
    let (sa, sb) = (spin_vector(n, a), spin_vector(n, b));
    let e = |f: &dyn Fn(usize) -> f64| dist.probs.iter().enumerate().map(|(s, p)| p * f(s)).sum::<f64>();
    e(&|s| sa[s] * sb[s]) - e(&|s| sa[s]) * e(&|s| sb[s])
}

/// `cov(ω_a(0), ω_b(k))` for the chain started from `dist`.
pub fn lagged_covariance(op: &TransferOperator, dist: &StateDistribution, a: usize, b: usize, lag: usize) -> Result<f64> {
    op.check_dims(&dist.dims)?;
    let n = dist.n_sites();
    let (sa, sb) = (spin_vector(n, a), spin_vector(n, b));
    let mut weighted: Vec<f64> = dist.probs.iter().zip(&sa).map(|(p, s)| p * s).collect();
    let mut later = dist.probs.clone();
    for _ in 0..lag {
        weighted = op.apply_linear(&weighted);
        later = op.apply_linear(&later);
    }
    let joint: f64 = weighted.iter().zip(&sb).map(|(w, s)| w * s).sum();
    let mean_a: f64 = dist.probs.iter().zip(&sa).map(|(p, s)| p * s).sum();
    let mean_b: f64 = later.iter().zip(&sb).map(|(p, s)| p * s).sum();
    Ok(joint - mean_a * mean_b)
}
