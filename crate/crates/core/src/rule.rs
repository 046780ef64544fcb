//! Monotone binary tessellation rules.
//!
//! A rule is a finite neighborhood `U = (u_1, ..., u_R)` of offsets in `Z^d`
//! together with a truth table `φ : {-1,+1}^R -> {-1,+1}`. Local
//! configurations are encoded as integers: bit `i` set means spin `+1` at
//! `u_i`. Tables are stored explicitly, which caps `R` at
//! [`MAX_NEIGHBORHOOD`].

use std::collections::HashSet;
use std::fmt;
use std::ops::Neg;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Offset = Vec<i64>;

/// Largest supported neighborhood size.
pub const MAX_NEIGHBORHOOD: usize = 20;

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: [&str; 4] = ["stavskaya", "nec", "majority1d", "identity"];

/// A binary spin.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Spin {
    Minus,
    Plus,
}

impl Spin {
    pub fn from_bit(bit: bool) -> Spin {
        if bit {
            Spin::Plus
        } else {
            Spin::Minus
        }
    }

    pub fn is_plus(self) -> bool {
        self == Spin::Plus
    }

    pub fn value(self) -> i8 {
        match self {
            Spin::Minus => -1,
            Spin::Plus => 1,
        }
    }

    pub fn from_value(v: i64) -> Result<Spin> {
        match v {
            1 => Ok(Spin::Plus),
            -1 => Ok(Spin::Minus),
            other => Err(Error::InputShape(format!("spin must be ±1, got {other}"))),
        }
    }
}

impl Neg for Spin {
    type Output = Spin;

    fn neg(self) -> Spin {
        match self {
            Spin::Minus => Spin::Plus,
            Spin::Plus => Spin::Minus,
        }
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if self.is_plus() { "+1" } else { "-1" })
    }
}

impl Serialize for Spin {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_i8(self.value())
    }
}

impl<'de> Deserialize<'de> for Spin {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = i64::deserialize(d)?;
        Spin::from_value(v).map_err(serde::de::Error::custom)
    }
}

/// Decodes a local configuration index into spins, `u_1` first.
pub fn decode_local(index: usize, r: usize) -> Vec<Spin> {
    (0..r).map(|i| Spin::from_bit(index >> i & 1 == 1)).collect()
}

/// Two local configurations `lo <= hi` with `φ(lo) > φ(hi)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MonotoneViolation {
    pub lo_index: usize,
    pub hi_index: usize,
    pub lo: Vec<Spin>,
    pub hi: Vec<Spin>,
}

/// Outcome of [`RuleSpec::check_monotone`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MonotoneCheck {
    pub violation: Option<MonotoneViolation>,
    /// `Some(s)` when the table is constantly `s`.
    pub constant: Option<Spin>,
}

impl MonotoneCheck {
    pub fn passed(&self) -> bool {
        self.violation.is_none() && self.constant.is_none()
    }

    fn into_result(self) -> Result<()> {
        if let Some(v) = &self.violation {
            return Err(Error::Validation(format!(
                "rule is not monotone: φ({}) = +1 but φ({}) = -1",
                fmt_spins(&v.lo),
                fmt_spins(&v.hi)
            )));
        }
        if let Some(s) = self.constant {
            return Err(Error::Validation(format!("rule is constant ({s})")));
        }
        Ok(())
    }
}

fn fmt_spins(spins: &[Spin]) -> String {
    let parts: Vec<String> = spins.iter().map(|s| s.to_string()).collect();
    format!("({})", parts.join(", "))
}

/// A binary tessellation rule given by its neighborhood and truth table.
///
/// Construction only checks the shape; monotonicity and non-constancy are
/// checked by [`RuleSpec::validate`] so that invalid tables can still be
/// loaded and diagnosed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleSpec {
    dimension: usize,
    neighborhood: Vec<Offset>,
    table: Vec<bool>,
}

impl RuleSpec {
    pub fn new(dimension: usize, neighborhood: Vec<Offset>, table: Vec<bool>) -> Result<RuleSpec> {
        check_neighborhood(dimension, &neighborhood)?;
        let expected = 1usize << neighborhood.len();
        if table.len() != expected {
            return Err(Error::InputShape(format!(
                "table has {} entries, expected 2^{} = {expected}",
                table.len(),
                neighborhood.len()
            )));
        }
        Ok(RuleSpec { dimension, neighborhood, table })
    }

    /// Builds the smallest monotone table for which every listed set of
    /// neighborhood indices is a plus set.
    pub fn from_plus_sets(
        dimension: usize,
        neighborhood: Vec<Offset>,
        plus_sets: &[Vec<usize>],
    ) -> Result<RuleSpec> {
        check_neighborhood(dimension, &neighborhood)?;
        let r = neighborhood.len();
        if plus_sets.is_empty() {
            return Err(Error::Validation("plus set list is empty (constant rule)".into()));
        }
        let mut masks = Vec::with_capacity(plus_sets.len());
        for set in plus_sets {
            if set.is_empty() {
                return Err(Error::Validation("empty plus set forces a constant rule".into()));
            }
            let mut mask = 0usize;
            for &i in set {
                if i >= r {
                    return Err(Error::InputShape(format!(
                        "plus set index {i} out of range for R = {r}"
                    )));
                }
                mask |= 1 << i;
            }
            masks.push(mask);
        }
        let table = (0..1usize << r)
            .map(|idx| masks.iter().any(|&m| idx & m == m))
            .collect();
        RuleSpec::new(dimension, neighborhood, table)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn neighborhood(&self) -> &[Offset] {
        &self.neighborhood
    }

    /// Neighborhood size `R`.
    pub fn size(&self) -> usize {
        self.neighborhood.len()
    }

    pub fn table(&self) -> &[bool] {
        &self.table
    }

    #[inline]
    pub fn output(&self, index: usize) -> bool {
        self.table[index]
    }

    pub fn encode(&self, local: &[Spin]) -> Result<usize> {
        if local.len() != self.size() {
            return Err(Error::InputShape(format!(
                "local configuration has {} spins, rule needs {}",
                local.len(),
                self.size()
            )));
        }
        Ok(local
            .iter()
            .enumerate()
            .fold(0, |acc, (i, s)| acc | (usize::from(s.is_plus()) << i)))
    }

    pub fn evaluate(&self, local: &[Spin]) -> Result<Spin> {
        Ok(Spin::from_bit(self.table[self.encode(local)?]))
    }

    /// Scans every single-input raise `lo -> lo ∪ {i}` of the input lattice.
    /// A function is monotone iff no such raise decreases the output.
    pub fn check_monotone(&self) -> MonotoneCheck {
        let r = self.size();
        let mut violation = None;
        'scan: for lo in 0..self.table.len() {
            if !self.table[lo] {
                continue;
            }
            for i in 0..r {
                let hi = lo | 1 << i;
                if hi != lo && !self.table[hi] {
                    violation = Some(MonotoneViolation {
                        lo_index: lo,
                        hi_index: hi,
                        lo: decode_local(lo, r),
                        hi: decode_local(hi, r),
                    });
                    break 'scan;
                }
            }
        }
        let first = self.table[0];
        let constant = self
            .table
            .iter()
            .all(|&b| b == first)
            .then_some(Spin::from_bit(first));
        MonotoneCheck { violation, constant }
    }

    /// Fails unless the rule is monotone and non-constant.
    pub fn validate(&self) -> Result<()> {
        self.check_monotone().into_result()
    }

    /// Inclusion-minimal plus sets, lexicographic by index list.
    pub fn minimal_plus_sets(&self) -> Result<PlusSetFamily> {
        self.validate()?;
        let r = self.size();
        // For a monotone table, Z is a plus set iff φ is +1 on the
        // configuration that is +1 exactly on Z.
        let mut sets: Vec<Vec<usize>> = (0..self.table.len())
            .filter(|&m| self.table[m] && (0..r).all(|i| m >> i & 1 == 0 || !self.table[m & !(1 << i)]))
            .map(|m| (0..r).filter(|&i| m >> i & 1 == 1).collect())
            .collect();
        sets.sort();
        PlusSetFamily::new(self.dimension, self.neighborhood.clone(), sets)
    }

    /// True when `φ(-ω) = -φ(ω)` for every local configuration.
    pub fn is_flip_symmetric(&self) -> bool {
        let full = self.table.len() - 1;
        (0..self.table.len()).all(|idx| self.table[idx] != self.table[full ^ idx])
    }

    /// `max_{u ∈ U} ‖u‖₁`, the light-cone speed.
    pub fn max_manhattan(&self) -> u64 {
        self.neighborhood
            .iter()
            .map(|u| u.iter().map(|c| c.unsigned_abs()).sum::<u64>())
            .max()
            .unwrap_or(0)
    }

    /// `max_{u ∈ U} ‖u‖_∞`.
    pub fn max_sup_norm(&self) -> u64 {
        self.neighborhood
            .iter()
            .flat_map(|u| u.iter().map(|c| c.unsigned_abs()))
            .max()
            .unwrap_or(0)
    }

    pub fn to_file(&self) -> RuleFile {
        RuleFile {
            dimension: self.dimension,
            neighborhood: self.neighborhood.clone(),
            table: Some(encode_table_hex(&self.table)),
            plus_sets: None,
        }
    }

    pub fn from_json_str(s: &str) -> Result<RuleSpec> {
        let file: RuleFile = serde_json::from_str(s)?;
        file.into_rule()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<RuleSpec> {
        let text = std::fs::read_to_string(path)?;
        RuleSpec::from_json_str(&text)
    }
}

fn check_neighborhood(dimension: usize, neighborhood: &[Offset]) -> Result<()> {
    if dimension == 0 {
        return Err(Error::InputShape("dimension must be positive".into()));
    }
    if neighborhood.is_empty() {
        return Err(Error::InputShape("neighborhood must be nonempty".into()));
    }
    if neighborhood.len() > MAX_NEIGHBORHOOD {
        return Err(Error::Resource(format!(
            "neighborhood size {} exceeds cap {MAX_NEIGHBORHOOD}",
            neighborhood.len()
        )));
    }
    let mut seen = HashSet::new();
    for u in neighborhood {
        if u.len() != dimension {
            return Err(Error::InputShape(format!(
                "offset {u:?} does not have dimension {dimension}"
            )));
        }
        if !seen.insert(u) {
            return Err(Error::InputShape(format!("duplicate offset {u:?}")));
        }
    }
    Ok(())
}

/// Inclusion-minimal plus sets of a rule, as index lists into the
/// neighborhood.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlusSetFamily {
    pub dimension: usize,
    pub neighborhood: Vec<Offset>,
    pub sets: Vec<Vec<usize>>,
}

impl PlusSetFamily {
    pub fn new(dimension: usize, neighborhood: Vec<Offset>, sets: Vec<Vec<usize>>) -> Result<Self> {
        check_neighborhood(dimension, &neighborhood)?;
        for set in &sets {
            if set.is_empty() {
                return Err(Error::InputShape("plus set family contains the empty set".into()));
            }
            if let Some(&bad) = set.iter().find(|&&i| i >= neighborhood.len()) {
                return Err(Error::InputShape(format!("plus set index {bad} out of range")));
            }
        }
        Ok(PlusSetFamily { dimension, neighborhood, sets })
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// Offsets of the `i`-th set.
    pub fn points(&self, i: usize) -> Vec<&Offset> {
        self.sets[i].iter().map(|&j| &self.neighborhood[j]).collect()
    }
}

/// On-disk rule description. Exactly one of `table` or `plus_sets` is set.
///
/// `table` is a hexadecimal number whose bit `k` (least significant first)
/// is `φ` on local configuration `k`; `"e"` is the Stavskaya rule and
/// `"e8"` three-input majority.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleFile {
    pub dimension: usize,
    pub neighborhood: Vec<Offset>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plus_sets: Option<Vec<Vec<usize>>>,
}

impl RuleFile {
    pub fn into_rule(self) -> Result<RuleSpec> {
        match (self.table, self.plus_sets) {
            (Some(hex), None) => {
                check_neighborhood(self.dimension, &self.neighborhood)?;
                let table = decode_table_hex(&hex, self.neighborhood.len())?;
                RuleSpec::new(self.dimension, self.neighborhood, table)
            }
            (None, Some(sets)) => RuleSpec::from_plus_sets(self.dimension, self.neighborhood, &sets),
            _ => Err(Error::InputShape(
                "rule file needs exactly one of `table` or `plus_sets`".into(),
            )),
        }
    }
}

pub fn encode_table_hex(table: &[bool]) -> String {
    let digits = (table.len() / 4).max(1);
    (0..digits)
        .rev()
        .map(|d| {
            let nibble = (0..4)
                .filter(|&b| table.get(4 * d + b).copied().unwrap_or(false))
                .fold(0u32, |acc, b| acc | 1 << b);
            char::from_digit(nibble, 16).unwrap()
        })
        .collect()
}

pub fn decode_table_hex(hex: &str, r: usize) -> Result<Vec<bool>> {
    let hex = hex.trim();
    let hex = hex
        .strip_prefix("0x")
        .or_else(|| hex.strip_prefix("0X"))
        .unwrap_or(hex);
    let n = 1usize << r;
    if hex.is_empty() {
        return Err(Error::InputShape("empty table string".into()));
    }
    let mut table = vec![false; n];
    for (d, ch) in hex.chars().rev().enumerate() {
        let nibble = ch
            .to_digit(16)
            .ok_or_else(|| Error::InputShape(format!("invalid hex digit `{ch}` in table")))?;
        for b in 0..4 {
            if nibble >> b & 1 == 1 {
                let k = 4 * d + b;
                if k >= n {
                    return Err(Error::InputShape(format!(
                        "table sets bit {k} but R = {r} only has {n} entries"
                    )));
                }
                table[k] = true;
            }
        }
    }
    Ok(table)
}

fn majority_table(r: usize) -> Vec<bool> {
    (0..1usize << r)
        .map(|idx| 2 * (idx.count_ones() as usize) > r)
        .collect()
}

/// Returns one of the named reference rules (see [`BUILTIN_NAMES`]).
pub fn builtin(name: &str) -> Result<RuleSpec> {
    let rule = match name {
        // φ(ω_0, ω_1) = -1 iff both inputs are -1.
        "stavskaya" => RuleSpec::new(1, vec![vec![0], vec![1]], vec![false, true, true, true])?,
        "nec" => RuleSpec::new(
            2,
            vec![vec![0, 0], vec![1, 0], vec![0, 1]],
            majority_table(3),
        )?,
        "majority1d" => RuleSpec::new(1, vec![vec![-1], vec![0], vec![1]], majority_table(3))?,
        "identity" => RuleSpec::new(1, vec![vec![0]], vec![false, true])?,
        other => return Err(Error::Lookup(other.to_string())),
    };
    rule.validate()?;
    Ok(rule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use Spin::{Minus, Plus};

    fn xor_rule() -> RuleSpec {
        RuleSpec::new(1, vec![vec![0], vec![1]], vec![false, true, true, false]).unwrap()
    }

    #[test]
    fn evaluate_builtins() {
        let stav = builtin("stavskaya").unwrap();
        assert_eq!(stav.evaluate(&[Minus, Minus]).unwrap(), Minus);
        assert_eq!(stav.evaluate(&[Plus, Minus]).unwrap(), Plus);
        let nec = builtin("nec").unwrap();
        assert_eq!(nec.evaluate(&[Plus, Plus, Minus]).unwrap(), Plus);
        assert_eq!(nec.evaluate(&[Minus, Plus, Minus]).unwrap(), Minus);
        for name in BUILTIN_NAMES {
            let rule = builtin(name).unwrap();
            assert_eq!(rule.evaluate(&vec![Plus; rule.size()]).unwrap(), Plus);
            assert_eq!(rule.evaluate(&vec![Minus; rule.size()]).unwrap(), Minus);
        }
    }

    #[test]
    fn evaluate_rejects_wrong_length() {
        let stav = builtin("stavskaya").unwrap();
        assert!(matches!(stav.evaluate(&[Plus]), Err(Error::InputShape(_))));
    }

    #[test]
    fn unknown_builtin() {
        assert!(matches!(builtin("life"), Err(Error::Lookup(_))));
    }

    #[test]
    fn identity_shape() {
        let id = builtin("identity").unwrap();
        assert_eq!(id.dimension(), 1);
        assert_eq!(id.neighborhood(), &[vec![0]]);
        assert_eq!(id.table(), &[false, true]);
    }

    #[test]
    fn xor_is_not_monotone() {
        let check = xor_rule().check_monotone();
        let v = check.violation.clone().expect("xor must fail");
        assert!(!check.passed());
        assert!(v.lo_index & v.hi_index == v.lo_index);
        assert!(xor_rule().output(v.lo_index) && !xor_rule().output(v.hi_index));
        assert!(matches!(xor_rule().minimal_plus_sets(), Err(Error::Validation(_))));
    }

    #[test]
    fn constant_rule_rejected() {
        let plus = RuleSpec::new(1, vec![vec![0], vec![1]], vec![true; 4]).unwrap();
        let check = plus.check_monotone();
        assert!(check.violation.is_none());
        assert_eq!(check.constant, Some(Plus));
        assert!(plus.validate().is_err());
    }

    #[test]
    fn builtin_plus_sets() {
        assert_eq!(builtin("stavskaya").unwrap().minimal_plus_sets().unwrap().sets, vec![vec![0], vec![1]]);
        assert_eq!(
            builtin("nec").unwrap().minimal_plus_sets().unwrap().sets,
            vec![vec![0, 1], vec![0, 2], vec![1, 2]]
        );
        assert_eq!(
            builtin("majority1d").unwrap().minimal_plus_sets().unwrap().sets,
            vec![vec![0, 1], vec![0, 2], vec![1, 2]]
        );
        assert_eq!(builtin("identity").unwrap().minimal_plus_sets().unwrap().sets, vec![vec![0]]);
    }

    #[test]
    fn majority1d_plus_sets_by_brute_force() {
        // Plus sets straight from the definition: Z is a plus set iff every
        // configuration that is +1 on Z evaluates to +1.
        let rule = builtin("majority1d").unwrap();
        let is_plus_set = |z: usize| (0..8usize).filter(|c| c & z == z).all(|c| rule.output(c));
        let minimal: Vec<usize> = (0..8usize)
            .filter(|&z| is_plus_set(z))
            .filter(|&z| (0..3).all(|i| z >> i & 1 == 0 || !is_plus_set(z & !(1 << i))))
            .collect();
        assert_eq!(minimal, vec![0b011, 0b101, 0b110]);
    }

    #[test]
    fn hex_table_round_trip_and_bit_order() {
        assert_eq!(encode_table_hex(builtin("stavskaya").unwrap().table()), "e");
        assert_eq!(encode_table_hex(builtin("nec").unwrap().table()), "e8");
        assert_eq!(encode_table_hex(builtin("identity").unwrap().table()), "2");
        assert_eq!(decode_table_hex("0xE8", 3).unwrap(), builtin("nec").unwrap().table());
        assert!(decode_table_hex("1e", 2).is_err());
        assert!(decode_table_hex("g", 2).is_err());
    }

    #[test]
    fn rule_file_variants() {
        let by_table = r#"{"dimension": 2, "neighborhood": [[0,0],[1,0],[0,1]], "table": "e8"}"#;
        let by_sets = r#"{"dimension": 2, "neighborhood": [[0,0],[1,0],[0,1]], "plus_sets": [[0,1],[1,2],[0,2]]}"#;
        let nec = builtin("nec").unwrap();
        assert_eq!(RuleSpec::from_json_str(by_table).unwrap(), nec);
        assert_eq!(RuleSpec::from_json_str(by_sets).unwrap(), nec);
        let both = r#"{"dimension": 1, "neighborhood": [[0]], "table": "2", "plus_sets": [[0]]}"#;
        assert!(RuleSpec::from_json_str(both).is_err());
        let unknown = r#"{"dimension": 1, "neighborhood": [[0]], "table": "2", "memory": 1}"#;
        assert!(RuleSpec::from_json_str(unknown).is_err());
        let json = serde_json::to_string(&nec.to_file()).unwrap();
        assert_eq!(RuleSpec::from_json_str(&json).unwrap(), nec);
    }

    #[test]
    fn shape_errors() {
        assert!(RuleSpec::new(1, vec![vec![0], vec![0]], vec![false, true, true, true]).is_err());
        assert!(RuleSpec::new(1, vec![vec![0, 1]], vec![false, true]).is_err());
        assert!(RuleSpec::new(1, vec![vec![0]], vec![false, true, true]).is_err());
        assert!(RuleSpec::new(1, vec![], vec![false]).is_err());
    }

    #[test]
    fn flip_symmetry_and_norms() {
        assert!(builtin("nec").unwrap().is_flip_symmetric());
        assert!(!builtin("stavskaya").unwrap().is_flip_symmetric());
        assert_eq!(builtin("nec").unwrap().max_manhattan(), 1);
        assert_eq!(builtin("identity").unwrap().max_manhattan(), 0);
    }

    /// Random monotone rule on `r` inputs: upward closure of random sets.
    fn monotone_table(r: usize, seeds: &[u32]) -> Vec<bool> {
        let masks: Vec<usize> = seeds.iter().map(|s| (*s as usize % ((1 << r) - 1)) + 1).collect();
        (0..1usize << r).map(|c| masks.iter().any(|&m| c & m == m)).collect()
    }

    proptest! {
        #[test]
        fn random_tables_monotone_iff_no_raise_violation(r in 1usize..6, bits in proptest::collection::vec(any::<bool>(), 64)) {
            let table: Vec<bool> = bits[..1 << r].to_vec();
            let offsets = (0..r as i64).map(|i| vec![i]).collect();
            let rule = RuleSpec::new(1, offsets, table.clone()).unwrap();
            // Definition over all comparable pairs, not just single raises.
            let monotone = (0..1usize << r).all(|lo| (0..1usize << r).filter(|hi| hi & lo == lo).all(|hi| table[lo] <= table[hi]));
            prop_assert_eq!(rule.check_monotone().violation.is_none(), monotone);
        }

        #[test]
        fn plus_sets_minimal_and_generating(r in 1usize..9, seeds in proptest::collection::vec(any::<u32>(), 1..6)) {
            let table = monotone_table(r, &seeds);
            let offsets = (0..r as i64).map(|i| vec![i]).collect();
            let rule = RuleSpec::new(1, offsets, table.clone()).unwrap();
            prop_assume!(rule.validate().is_ok());
            let family = rule.minimal_plus_sets().unwrap();
            let masks: Vec<usize> = family.sets.iter().map(|s| s.iter().fold(0, |m, &i| m | 1 << i)).collect();
            for &m in &masks {
                prop_assert!(table[m]);
                for i in 0..r {
                    if m >> i & 1 == 1 {
                        prop_assert!(!table[m & !(1 << i)]);
                    }
                }
            }
            for (a, &ma) in masks.iter().enumerate() {
                for (b, &mb) in masks.iter().enumerate() {
                    prop_assert!(a == b || ma & mb != ma, "nested plus sets");
                }
            }
            for c in 0..1usize << r {
                prop_assert_eq!(table[c], masks.iter().any(|&m| c & m == m));
            }
        }
    }
}
