//! Exact certification of the erosion criterion.
//!
//! A monotone rule erodes finite islands iff the convex hulls of its
//! minimal plus sets have empty common intersection in `R^d`. The decision
//! is an exact LP: one convex-weight vector per set, all weighted
//! barycenters equal to a common point `x`. Feasible systems yield the
//! common point as a witness. Infeasible systems yield a separating family
//! `(f_i, c_i)` with `Σ f_i = 0`, `Σ c_i > 0` and `f_i(z) ≥ c_i` on `Z_i`;
//! evaluating at any common point gives `0 = Σ f_i(x) ≥ Σ c_i > 0`.
//!
//! Separating families are reduced to at most `d + 1` sets by searching
//! subfamilies (Helly), then scaled so the largest functional coefficient
//! has absolute value one. That fixes the constants `q` (number of
//! functionals) and `r = Σ c_i` passed to [`crate::bounds`].

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::lp::{feasibility, Feasibility};
use crate::rule::{Offset, PlusSetFamily};

/// Exact rational number, serialized as a `"num/den"` string.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(pub BigRational);

impl Rational {
    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn from_integer(n: i64) -> Self {
        Rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn new(num: i64, den: i64) -> Self {
        Rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }
}

impl From<BigRational> for Rational {
    fn from(v: BigRational) -> Self {
        Rational(v)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl FromStr for Rational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InputShape(format!("invalid rational `{s}`"));
        let (num, den) = match s.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s.trim(), "1"),
        };
        let num: BigInt = num.parse().map_err(|_| bad())?;
        let den: BigInt = den.parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(bad());
        }
        Ok(Rational(BigRational::new(num, den)))
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Eroder,
    NonEroder,
}

/// Separating family proving the hulls have empty intersection.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeparationCertificate {
    pub dimension: usize,
    /// Positions of the selected sets within the family.
    pub selected: Vec<usize>,
    /// Offsets of the selected plus sets, for readability.
    pub plus_sets: Vec<Vec<Offset>>,
    pub functionals: Vec<Vec<Rational>>,
    pub thresholds: Vec<Rational>,
    pub q: usize,
    pub r: Rational,
}

/// Common point of all hulls with the convex weights realizing it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessCertificate {
    pub dimension: usize,
    pub witness: Vec<Rational>,
    /// `weights[i][j]` is the weight of the `j`-th point of set `i`.
    pub weights: Vec<Vec<Rational>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ErosionCertificate {
    Eroder(SeparationCertificate),
    NonEroder(WitnessCertificate),
}

impl ErosionCertificate {
    pub fn verdict(&self) -> Verdict {
        match self {
            ErosionCertificate::Eroder(_) => Verdict::Eroder,
            ErosionCertificate::NonEroder(_) => Verdict::NonEroder,
        }
    }

    pub fn is_eroder(&self) -> bool {
        self.verdict() == Verdict::Eroder
    }
}

fn int(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

enum SubfamilyOutcome {
    Common { point: Vec<BigRational>, weights: Vec<Vec<BigRational>> },
    Separated { functionals: Vec<Vec<BigRational>>, thresholds: Vec<BigRational> },
}

/// Solves the common-point LP restricted to the sets at `chosen`.
fn solve_subfamily(family: &PlusSetFamily, chosen: &[usize]) -> SubfamilyOutcome {
    let d = family.dimension;
    let sizes: Vec<usize> = chosen.iter().map(|&i| family.sets[i].len()).collect();
    let n_weights: usize = sizes.iter().sum();
    // Columns: all weights, then x⁺, then x⁻.
    let n_cols = n_weights + 2 * d;
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut col = 0;
    for (k, &i) in chosen.iter().enumerate() {
        let points = family.points(i);
        let mut norm = vec![BigRational::zero(); n_cols];
        for j in 0..sizes[k] {
            norm[col + j] = BigRational::one();
        }
        a.push(norm);
        b.push(BigRational::one());
        for axis in 0..d {
            let mut row = vec![BigRational::zero(); n_cols];
            for (j, p) in points.iter().enumerate() {
                row[col + j] = int(p[axis]);
            }
            row[n_weights + axis] = -BigRational::one();
            row[n_weights + d + axis] = BigRational::one();
            a.push(row);
            b.push(BigRational::zero());
        }
        col += sizes[k];
    }

    match feasibility(&a, &b) {
        Feasibility::Feasible(x) => {
            let mut weights = Vec::with_capacity(chosen.len());
            let mut col = 0;
            for &s in &sizes {
                weights.push(x[col..col + s].to_vec());
                col += s;
            }
            let point = (0..d).map(|k| &x[n_weights + k] - &x[n_weights + d + k]).collect();
            SubfamilyOutcome::Common { point, weights }
        }
        Feasibility::Infeasible(y) => {
            // Rows per set: [normalization, axis_0, ..., axis_{d-1}].
            // Farkas on weight columns gives s_i + g_i·z ≤ 0; on the x
            // columns Σ g_i = 0. Then f_i = -g_i, c_i = s_i.
            let mut functionals = Vec::with_capacity(chosen.len());
            let mut thresholds = Vec::with_capacity(chosen.len());
            for k in 0..chosen.len() {
                let base = k * (d + 1);
                thresholds.push(y[base].clone());
                functionals.push((0..d).map(|axis| -&y[base + 1 + axis]).collect());
            }
            SubfamilyOutcome::Separated { functionals, thresholds }
        }
    }
}

/// Lexicographic k-subsets of `0..n`.
fn combinations(n: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    let mut current: Option<Vec<usize>> = (k <= n).then(|| (0..k).collect());
    std::iter::from_fn(move || {
        let out = current.clone()?;
        let mut next = out.clone();
        let mut i = k;
        loop {
            if i == 0 {
                current = None;
                break;
            }
            i -= 1;
            if next[i] < n - k + i {
                next[i] += 1;
                for j in i + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                current = Some(next);
                break;
            }
        }
        Some(out)
    })
}

fn normalize(functionals: &mut [Vec<BigRational>], thresholds: &mut [BigRational]) {
    let scale = functionals
        .iter()
        .flatten()
        .map(|c| c.abs())
        .max()
        .unwrap_or_else(BigRational::zero);
    if scale.is_zero() || scale.is_one() {
        return;
    }
    for c in functionals.iter_mut().flatten() {
        *c /= &scale;
    }
    for c in thresholds.iter_mut() {
        *c /= &scale;
    }
}

fn separation(
    family: &PlusSetFamily,
    selected: Vec<usize>,
    mut functionals: Vec<Vec<BigRational>>,
    mut thresholds: Vec<BigRational>,
) -> SeparationCertificate {
    normalize(&mut functionals, &mut thresholds);
    let r: BigRational = thresholds.iter().sum();
    SeparationCertificate {
        dimension: family.dimension,
        plus_sets: selected
            .iter()
            .map(|&i| family.points(i).into_iter().cloned().collect())
            .collect(),
        q: selected.len(),
        selected,
        functionals: functionals
            .into_iter()
            .map(|f| f.into_iter().map(Rational).collect())
            .collect(),
        thresholds: thresholds.into_iter().map(Rational).collect(),
        r: Rational(r),
    }
}

/// Decides whether the hulls of `family` have empty intersection.
pub fn check_eroder(family: &PlusSetFamily, dimension: usize) -> Result<ErosionCertificate> {
    if family.is_empty() {
        return Err(Error::InputShape("plus set family is empty".into()));
    }
    if family.dimension != dimension {
        return Err(Error::InputShape(format!(
            "family has dimension {}, expected {dimension}",
            family.dimension
        )));
    }
    let all: Vec<usize> = (0..family.len()).collect();
    match solve_subfamily(family, &all) {
        SubfamilyOutcome::Common { point, weights } => {
            Ok(ErosionCertificate::NonEroder(WitnessCertificate {
                dimension,
                witness: point.into_iter().map(Rational).collect(),
                weights: weights
                    .into_iter()
                    .map(|w| w.into_iter().map(Rational).collect())
                    .collect(),
            }))
        }
        SubfamilyOutcome::Separated { .. } => {
            let max_size = (dimension + 1).min(family.len());
            for size in 2..=max_size {
                for chosen in combinations(family.len(), size) {
                    if let SubfamilyOutcome::Separated { functionals, thresholds } =
                        solve_subfamily(family, &chosen)
                    {
                        return Ok(ErosionCertificate::Eroder(separation(
                            family,
                            chosen,
                            functionals,
                            thresholds,
                        )));
                    }
                }
            }
            Err(Error::Numerical(
                "full family infeasible but no subfamily of size ≤ d+1 is".into(),
            ))
        }
    }
}

fn dot(f: &[Rational], z: &[i64]) -> BigRational {
    f.iter().zip(z).map(|(c, &x)| &c.0 * int(x)).sum()
}

/// Re-checks a certificate in exact arithmetic without solving any LP.
///
/// Returns `Err` when the certificate does not even match the shape of
/// `family`, and `Ok(false)` when it is well-formed but wrong.
pub fn verify_certificate(family: &PlusSetFamily, cert: &ErosionCertificate) -> Result<bool> {
    let d = family.dimension;
    let malformed = |msg: String| Err(Error::Validation(format!("malformed certificate: {msg}")));
    match cert {
        ErosionCertificate::NonEroder(w) => {
            if w.dimension != d || w.witness.len() != d {
                return malformed(format!("witness dimension {} vs {d}", w.witness.len()));
            }
            if w.weights.len() != family.len() {
                return malformed(format!("{} weight vectors for {} sets", w.weights.len(), family.len()));
            }
            for (i, weights) in w.weights.iter().enumerate() {
                if weights.len() != family.sets[i].len() {
                    return malformed(format!("set {i} has {} weights", weights.len()));
                }
            }
            for (i, weights) in w.weights.iter().enumerate() {
                if weights.iter().any(|l| l.0.is_negative()) {
                    return Ok(false);
                }
                let total: BigRational = weights.iter().map(|l| &l.0).sum();
                if !total.is_one() {
                    return Ok(false);
                }
                let points = family.points(i);
                for axis in 0..d {
                    let coord: BigRational = weights
                        .iter()
                        .zip(&points)
                        .map(|(l, p)| &l.0 * int(p[axis]))
                        .sum();
                    if coord != w.witness[axis].0 {
                        return Ok(false);
                    }
                }
            }
            Ok(true)
        }
        ErosionCertificate::Eroder(s) => {
            let q = s.selected.len();
            if s.dimension != d || s.functionals.len() != q || s.thresholds.len() != q || s.plus_sets.len() != q {
                return malformed("inconsistent lengths".into());
            }
            if s.functionals.iter().any(|f| f.len() != d) {
                return malformed("functional of wrong dimension".into());
            }
            let mut seen = vec![false; family.len()];
            for (k, &i) in s.selected.iter().enumerate() {
                if i >= family.len() || std::mem::replace(&mut seen[i], true) {
                    return malformed(format!("selected set {i} out of range or repeated"));
                }
                let points: Vec<Offset> = family.points(i).into_iter().cloned().collect();
                if points != s.plus_sets[k] {
                    return malformed(format!("listed plus set {k} differs from family set {i}"));
                }
            }
            if s.q != q || q == 0 {
                return Ok(false);
            }
            for axis in 0..d {
                let total: BigRational = s.functionals.iter().map(|f| &f[axis].0).sum();
                if !total.is_zero() {
                    return Ok(false);
                }
            }
            let sum_c: BigRational = s.thresholds.iter().map(|c| &c.0).sum();
            if !sum_c.is_positive() || sum_c != s.r.0 {
                return Ok(false);
            }
            let max_coef = s.functionals.iter().flatten().map(|c| c.0.abs()).max();
            if max_coef.is_none_or(|m| !m.is_one()) {
                return Ok(false);
            }
            for (k, &i) in s.selected.iter().enumerate() {
                for z in family.points(i) {
                    if dot(&s.functionals[k], z) < s.thresholds[k].0 {
                        return Ok(false);
                    }
                }
            }
            Ok(true)
        }
    }
}

/// `(q, r)` of an eroder certificate, after rescaling so the largest
/// functional coefficient is one in absolute value.
pub fn certificate_constants(cert: &ErosionCertificate) -> Result<(usize, Rational)> {
    match cert {
        ErosionCertificate::NonEroder(_) => Err(Error::Domain(
            "constants are only defined for eroder certificates".into(),
        )),
        ErosionCertificate::Eroder(s) => {
            let mut functionals: Vec<Vec<BigRational>> =
                s.functionals.iter().map(|f| f.iter().map(|c| c.0.clone()).collect()).collect();
            let mut thresholds: Vec<BigRational> = s.thresholds.iter().map(|c| c.0.clone()).collect();
            normalize(&mut functionals, &mut thresholds);
            Ok((s.functionals.len(), Rational(thresholds.iter().sum())))
        }
    }
}
