//! Closed-form low-noise constants.
//!
//! Every quantity here is a function of the neighborhood size `R`, the
//! erosion constants `(q, r)`, the noise parameters `(α, ε, ε′)` and the
//! basin constant `K`. The recurring combinatorial factor is
//! `B = 2^q (R² + 2R)`, the number of edge types a vertex of a Toom graph
//! can carry, and the recurring exponent is `a = 1 / (1 + 2q/r)`.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rule::Offset;

/// Parameters shared by the bound formulas.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundParams {
    pub neighborhood_size: usize,
    pub q: usize,
    pub r: f64,
    pub alpha: f64,
    pub eps: f64,
    pub eps_prime: f64,
    pub k: f64,
    /// `max(ε, ε′)`.
    pub eps_tilde: f64,
    /// `B² ε̃^a < 1`, i.e. the graph series converges.
    pub admissible: bool,
}

impl BoundParams {
    pub fn new(
        neighborhood_size: usize,
        q: usize,
        r: f64,
        alpha: f64,
        eps: f64,
        eps_prime: f64,
        k: f64,
    ) -> Result<Self> {
        if neighborhood_size == 0 || q == 0 {
            return Err(Error::Domain("R and q must be positive".into()));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Domain(format!("r must be positive and finite, got {r}")));
        }
        if !(alpha >= 0.0) {
            return Err(Error::Domain(format!("α must be nonnegative, got {alpha}")));
        }
        for (name, v) in [("ε", eps), ("ε′", eps_prime)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Domain(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if !(k >= 0.0) {
            return Err(Error::Domain(format!("K must be nonnegative, got {k}")));
        }
        let eps_tilde = eps.max(eps_prime);
        let mut p = BoundParams {
            neighborhood_size,
            q,
            r,
            alpha,
            eps,
            eps_prime,
            k,
            eps_tilde,
            admissible: false,
        };
        p.admissible = p.b_squared() * eps_tilde.powf(p.exponent()) < 1.0;
        Ok(p)
    }

    /// `B = 2^q (R² + 2R)`.
    pub fn b(&self) -> f64 {
        edge_types(self.q, self.neighborhood_size)
    }

    pub fn b_squared(&self) -> f64 {
        self.b() * self.b()
    }

    /// `1 + 2q/r`.
    pub fn inverse_exponent(&self) -> f64 {
        1.0 + 2.0 * self.q as f64 / self.r
    }

    /// `a = 1 / (1 + 2q/r)`.
    pub fn exponent(&self) -> f64 {
        1.0 / self.inverse_exponent()
    }
}

/// `2^q (R² + 2R)` as a float.
pub fn edge_types(q: usize, r: usize) -> f64 {
    let r = r as f64;
    2f64.powi(q as i32) * (r * r + 2.0 * r)
}

fn edge_types_exact(q: usize, r: usize) -> BigUint {
    (BigUint::one() << q) * BigUint::from(r * r + 2 * r)
}

/// Contraction factor `σ = R (α + 4 B² ε̃^a)`.
pub fn sigma(p: &BoundParams) -> f64 {
    let r = p.neighborhood_size as f64;
    r * (p.alpha + 4.0 * p.b_squared() * p.eps_tilde.powf(p.exponent()))
}

/// `α* = 1/R`.
pub fn alpha_star(neighborhood_size: usize) -> f64 {
    1.0 / neighborhood_size as f64
}

/// The noise level at which `σ` reaches one:
/// `ε*(α) = ((1/R − α) / (4B²))^{1 + 2q/r}`.
pub fn epsilon_star(neighborhood_size: usize, q: usize, r: f64, alpha: f64) -> Result<f64> {
    if neighborhood_size == 0 || q == 0 || !(r > 0.0) {
        return Err(Error::Domain("R, q and r must be positive".into()));
    }
    let a_star = alpha_star(neighborhood_size);
    if !(0.0..a_star).contains(&alpha) {
        return Err(Error::Domain(format!("α = {alpha} outside [0, α* = {a_star})")));
    }
    let b = edge_types(q, neighborhood_size);
    let base = (a_star - alpha) / (4.0 * b * b);
    Ok(base.powf(1.0 + 2.0 * q as f64 / r))
}

/// Size bounds on a class of graphs with `c` components and `m` edges.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GraphCountBound {
    /// `binom(|γ⁻|, c) · B^{2m}`.
    pub binomial: BigUint,
    /// `2^{|γ⁻|} · B^{2m}`.
    pub loose: BigUint,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GraphClassParams {
    pub gamma_minus_size: u64,
    pub components: u64,
    pub edges: u64,
}

fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

pub fn graph_count_bound(g: GraphClassParams, q: usize, neighborhood_size: usize) -> GraphCountBound {
    let per_step = edge_types_exact(q, neighborhood_size).pow(2);
    let walks = num_traits::pow(per_step, g.edges as usize);
    if g.components > g.gamma_minus_size {
        return GraphCountBound { binomial: BigUint::zero(), loose: BigUint::zero() };
    }
    GraphCountBound {
        binomial: binomial(g.gamma_minus_size, g.components) * &walks,
        loose: (BigUint::one() << g.gamma_minus_size) * walks,
    }
}

/// Least number of identified errors compatible with
/// `|E|/(1 + 2q/r) + c ≤ |V̂|`.
pub fn edge_error_inequality(edges: u64, components: u64, q: usize, r: f64) -> u64 {
    let x = edges as f64 / (1.0 + 2.0 * q as f64 / r) + components as f64;
    // Absorb rounding so that exact integers are not pushed up by one ulp.
    (x - 1e-9 * x.max(1.0)).ceil().max(0.0) as u64
}

fn denominators(b_sq: f64, eps: f64, a: f64, q: usize, r: f64) -> (f64, f64) {
    let first = 1.0 - b_sq * eps.powf(a);
    let second = 1.0 - eps.powf(2.0 * q as f64 / r * a) / b_sq;
    (first, second)
}

/// `(C, C_inv)` prefactors of the convergence bound.
pub fn constants_c(p: &BoundParams) -> Result<(f64, f64)> {
    if !p.admissible {
        return Err(Error::Domain(format!(
            "B²·ε̃^(1/(1+2q/r)) = {} ≥ 1: the graph series diverges",
            p.b_squared() * p.eps_tilde.powf(p.exponent())
        )));
    }
    let (a1, a2) = denominators(p.b_squared(), p.eps_tilde, p.exponent(), p.q, p.r);
    let (b1, b2) = denominators(p.b_squared(), p.eps, p.exponent(), p.q, p.r);
    Ok((2.0 * p.k / (a1 * a2), 2.0 / (b1 * b2)))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesCheck {
    pub partial_sum: f64,
    pub closed_form: f64,
    pub gap: f64,
}

/// Sums the double series over `c, k ∈ [0, truncation)` of
/// `2^g B^{2(g−c+k)} ε̃^{(g + 2qc/r + k)/(1 + 2q/r)}` for `g = |γ⁻|`, next to
/// its closed-form geometric value.
pub fn series_check(p: &BoundParams, gamma_minus_size: u32, truncation: usize) -> Result<SeriesCheck> {
    if !p.admissible {
        return Err(Error::Domain("series diverges for these parameters".into()));
    }
    if truncation == 0 {
        return Err(Error::Domain("truncation must be at least 1".into()));
    }
    let g = gamma_minus_size as f64;
    let a = p.exponent();
    let b_sq = p.b_squared();
    let e = p.eps_tilde;
    let two_q_r = 2.0 * p.q as f64 / p.r;
    let lead = 2f64.powf(g) * b_sq.powf(g) * e.powf(g * a);
    // Terms factor as lead · u^c · v^k; summing explicit terms keeps this
    // an independent check of the product-of-geometric-series formula.
    let mut partial = 0.0;
    for c in 0..truncation {
        for k in 0..truncation {
            let (cf, kf) = (c as f64, k as f64);
            // Combined in log space: the B and ε factors separately
            // overflow and underflow long before their product does.
            let log_term = g * 2f64.ln() + (g - cf + kf) * b_sq.ln() + (g + two_q_r * cf + kf) * a * e.ln();
            let term = log_term.exp();
            partial += term;
        }
    }
    let (d1, d2) = denominators(b_sq, e, a, p.q, p.r);
    let closed = lead / (d1 * d2);
    Ok(SeriesCheck { partial_sum: partial, closed_form: closed, gap: closed - partial })
}

/// Spatial decay constants derived from `C` and `σ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayConstants {
    pub c_prime: f64,
    pub eta: f64,
    /// `max_{u ∈ U} ‖u‖₁`.
    pub v: u64,
}

pub fn decay_constants(c: f64, sigma: f64, neighborhood: &[Offset]) -> Result<DecayConstants> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::Domain(format!("σ = {sigma} outside (0, 1)")));
    }
    let v = neighborhood
        .iter()
        .map(|u| u.iter().map(|x| x.unsigned_abs()).sum::<u64>())
        .max()
        .unwrap_or(0);
    if v == 0 {
        return Err(Error::Domain("v = 0: neighborhood is the origin, η undefined".into()));
    }
    Ok(DecayConstants {
        c_prime: 2.0 * c / sigma,
        eta: sigma.powf(1.0 / (2.0 * v as f64)),
        v,
    })
}
