//! Group and order parameters, residue configurations and the pairing-set algebra.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, MomError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    Symplectic,
    EvenOrthogonal,
}

impl Family {
    pub fn short_name(self) -> &'static str {
        match self {
            Family::Symplectic => "sp",
            Family::EvenOrthogonal => "so",
        }
    }

    /// Whether diagonal pairs (n, n) carry a kernel factor.
    pub fn includes_diagonal(self) -> bool {
        matches!(self, Family::Symplectic)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Symplectic => write!(f, "Sp"),
            Family::EvenOrthogonal => write!(f, "SO"),
        }
    }
}

impl FromStr for Family {
    type Err = MomError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sp" | "symplectic" => Ok(Family::Symplectic),
            "so" | "orthogonal" | "even-orthogonal" => Ok(Family::EvenOrthogonal),
            other => invalid(format!("unknown group family '{other}' (expected sp or so)")),
        }
    }
}

/// A compact group Sp(2N) or SO(2N).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupSpec {
    pub family: Family,
    pub half_dim: usize,
}

impl GroupSpec {
    pub fn new(family: Family, half_dim: usize) -> Result<Self> {
        if half_dim == 0 {
            return invalid("half dimension N must be at least 1");
        }
        Ok(GroupSpec { family, half_dim })
    }

    pub fn symplectic(half_dim: usize) -> Result<Self> {
        Self::new(Family::Symplectic, half_dim)
    }

    pub fn orthogonal(half_dim: usize) -> Result<Self> {
        Self::new(Family::EvenOrthogonal, half_dim)
    }

    pub fn matrix_size(&self) -> usize {
        2 * self.half_dim
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.family, 2 * self.half_dim)
    }
}

/// Moment orders: the outer power `k` and the inner power `beta`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MomOrder {
    pub k: usize,
    pub beta: usize,
}

impl MomOrder {
    pub fn new(k: usize, beta: usize) -> Result<Self> {
        if k == 0 || beta == 0 {
            return invalid(format!("moment orders must be positive (k={k}, beta={beta})"));
        }
        Ok(MomOrder { k, beta })
    }

    /// Number of contour variables, 2kβ.
    pub fn num_vars(&self) -> usize {
        2 * self.k * self.beta
    }

    pub fn k_beta(&self) -> usize {
        self.k * self.beta
    }

    /// The orthogonal case k = β = 1, whose growth differs from the generic exponent.
    pub fn is_special_for(&self, family: Family) -> bool {
        family == Family::EvenOrthogonal && self.k == 1 && self.beta == 1
    }
}

impl fmt::Display for MomOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(k={}, beta={})", self.k, self.beta)
    }
}

/// How many of the 2β variables of each block sit at +iθ_m.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ConfigurationVector(Vec<usize>);

impl ConfigurationVector {
    pub fn new(order: MomOrder, l: Vec<usize>) -> Result<Self> {
        if l.len() != order.k {
            return invalid(format!("configuration has {} entries, expected k={}", l.len(), order.k));
        }
        if let Some(bad) = l.iter().find(|&&x| x > 2 * order.beta) {
            return invalid(format!("configuration entry {bad} outside [0, {}]", 2 * order.beta));
        }
        Ok(ConfigurationVector(l))
    }

    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    pub fn sum(&self) -> usize {
        self.0.iter().sum()
    }

    /// The configuration l ↦ 2β − l.
    pub fn mirror(&self, order: MomOrder) -> ConfigurationVector {
        ConfigurationVector(self.0.iter().map(|&x| 2 * order.beta - x).collect())
    }

    /// Frequencies 2(l_m − β) of the oscillatory factor in each shift variable.
    pub fn frequencies(&self, order: MomOrder) -> Vec<i64> {
        self.0.iter().map(|&x| 2 * (x as i64 - order.beta as i64)).collect()
    }
}

impl fmt::Display for ConfigurationVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|x| x.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> i32 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

/// A symbolic pole label ±θ_m (index is zero-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Slot {
    pub index: usize,
    pub sign: Sign,
}

impl Slot {
    pub fn plus(index: usize) -> Self {
        Slot { index, sign: Sign::Plus }
    }

    pub fn minus(index: usize) -> Self {
        Slot { index, sign: Sign::Minus }
    }

    pub fn value(&self, theta: &[f64]) -> f64 {
        self.sign.value() as f64 * theta[self.index]
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = if self.sign == Sign::Plus { '+' } else { '-' };
        write!(f, "{s}θ{}", self.index + 1)
    }
}

/// Integer combination Σ c_m θ_m.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ThetaForm(pub Vec<i32>);

impl ThetaForm {
    pub fn zero(k: usize) -> Self {
        ThetaForm(vec![0; k])
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn eval(&self, theta: &[f64]) -> f64 {
        self.0.iter().zip(theta).map(|(&c, &t)| c as f64 * t).sum()
    }

    pub fn eval_complex(&self, t: &[num_complex::Complex64]) -> num_complex::Complex64 {
        self.0.iter().zip(t).map(|(&c, &x)| x * c as f64).sum()
    }
}

/// Pole labels μ_1, …, μ_{2kβ} for a configuration.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MuAssignment {
    k: usize,
    slots: Vec<Slot>,
}

impl MuAssignment {
    /// Wraps an arbitrary slot sequence (used for configurations outside the surviving set).
    pub fn from_slots(k: usize, slots: Vec<Slot>) -> Result<Self> {
        if slots.iter().any(|s| s.index >= k) {
            return invalid("slot index exceeds k");
        }
        Ok(MuAssignment { k, slots })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// μ_a + μ_b as a combination of shifts.
    pub fn sum_form(&self, a: usize, b: usize) -> ThetaForm {
        let mut f = ThetaForm::zero(self.k);
        f.0[self.slots[a].index] += self.slots[a].sign.value();
        f.0[self.slots[b].index] += self.slots[b].sign.value();
        f
    }

    /// μ_b − μ_a as a combination of shifts.
    pub fn diff_form(&self, a: usize, b: usize) -> ThetaForm {
        let mut f = ThetaForm::zero(self.k);
        f.0[self.slots[b].index] += self.slots[b].sign.value();
        f.0[self.slots[a].index] -= self.slots[a].sign.value();
        f
    }

    pub fn values(&self, theta: &[f64]) -> Vec<f64> {
        self.slots.iter().map(|s| s.value(theta)).collect()
    }

    /// Σ μ_n as a combination of shifts.
    pub fn total_form(&self) -> ThetaForm {
        let mut f = ThetaForm::zero(self.k);
        for s in &self.slots {
            f.0[s.index] += s.sign.value();
        }
        f
    }
}

pub fn build_mu_assignment(order: MomOrder, l: &ConfigurationVector) -> Result<MuAssignment> {
    let l = ConfigurationVector::new(order, l.entries().to_vec())?;
    let mut slots = Vec::with_capacity(order.num_vars());
    for (m, &lm) in l.entries().iter().enumerate() {
        slots.extend(std::iter::repeat_n(Slot::plus(m), lm));
        slots.extend(std::iter::repeat_n(Slot::minus(m), 2 * order.beta - lm));
    }
    Ok(MuAssignment { k: order.k, slots })
}

fn binomial(n: usize, r: usize) -> BigUint {
    if r > n {
        return BigUint::from(0u32);
    }
    let r = r.min(n - r);
    let mut acc = BigUint::from(1u32);
    for i in 0..r {
        acc *= BigUint::from(n - i);
        acc /= BigUint::from(i + 1);
    }
    acc
}

/// Number of orderings of the pole labels that realise the configuration l.
pub fn combinatorial_coefficient(order: MomOrder, l: &ConfigurationVector) -> BigUint {
    let mut remaining = order.num_vars();
    let mut acc = BigUint::from(1u32);
    for &lm in l.entries() {
        acc *= binomial(remaining, lm);
        acc *= binomial(remaining - lm, 2 * order.beta - lm);
        remaining -= 2 * order.beta;
    }
    acc
}

/// Multinomial (2kβ)! / ((2β)!)^k.
pub fn block_multinomial(order: MomOrder) -> BigUint {
    let mut remaining = order.num_vars();
    let mut acc = BigUint::from(1u32);
    for _ in 0..order.k {
        acc *= binomial(remaining, 2 * order.beta);
        remaining -= 2 * order.beta;
    }
    acc
}

/// Index sets for one configuration. Pairs are zero-based with m ≤ n.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PairingSets {
    pub a: Vec<(usize, usize)>,
    pub b: Vec<(usize, usize)>,
    pub t: Vec<(usize, usize)>,
    pub u_plus: BTreeMap<(usize, usize), Vec<(usize, usize)>>,
    pub u_minus: BTreeMap<(usize, usize), Vec<(usize, usize)>>,
    pub v_plus: BTreeMap<(usize, usize), Vec<(usize, usize)>>,
    pub v_minus: BTreeMap<(usize, usize), Vec<(usize, usize)>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairClass {
    UPlus(usize, usize),
    UMinus(usize, usize),
    VPlus(usize, usize),
    VMinus(usize, usize),
}

/// Classifies a nonzero form ±θ_σ ± θ_τ into its U/V family.
pub fn classify_form(form: &ThetaForm) -> Option<PairClass> {
    let nz: Vec<(usize, i32)> = form.0.iter().copied().enumerate().filter(|&(_, c)| c != 0).collect();
    match nz.as_slice() {
        [(s, 2)] => Some(PairClass::UPlus(*s, *s)),
        [(s, -2)] => Some(PairClass::UMinus(*s, *s)),
        [(s, 1), (t, 1)] => Some(PairClass::UPlus(*s, *t)),
        [(s, -1), (t, -1)] => Some(PairClass::UMinus(*s, *t)),
        [(s, 1), (t, -1)] => Some(PairClass::VPlus(*s, *t)),
        [(s, -1), (t, 1)] => Some(PairClass::VMinus(*s, *t)),
        _ => None,
    }
}

impl PairingSets {
    fn class_map(&self, class: PairClass) -> (&BTreeMap<(usize, usize), Vec<(usize, usize)>>, (usize, usize)) {
        match class {
            PairClass::UPlus(s, t) => (&self.u_plus, (s, t)),
            PairClass::UMinus(s, t) => (&self.u_minus, (s, t)),
            PairClass::VPlus(s, t) => (&self.v_plus, (s, t)),
            PairClass::VMinus(s, t) => (&self.v_minus, (s, t)),
        }
    }

    pub fn members(&self, class: PairClass) -> &[(usize, usize)] {
        let (map, key) = self.class_map(class);
        map.get(&key).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Every (pair, class) in the U/V families.
    pub fn classified(&self) -> Vec<((usize, usize), PairClass)> {
        let mut out = Vec::new();
        for (map, ctor) in [
            (&self.u_plus, PairClass::UPlus as fn(usize, usize) -> PairClass),
            (&self.u_minus, PairClass::UMinus),
            (&self.v_plus, PairClass::VPlus),
            (&self.v_minus, PairClass::VMinus),
        ] {
            for (&(s, t), pairs) in map {
                out.extend(pairs.iter().map(|&p| (p, ctor(s, t))));
            }
        }
        out
    }
}

pub fn pairing_sets(family: Family, mu: &MuAssignment) -> PairingSets {
    let v = mu.len();
    let mut sets = PairingSets::default();
    for m in 0..v {
        let start = if family.includes_diagonal() { m } else { m + 1 };
        for n in start..v {
            let sum = mu.sum_form(m, n);
            if m < n {
                if sum.is_zero() {
                    sets.a.push((m, n));
                    continue;
                }
                if mu.diff_form(m, n).is_zero() {
                    sets.b.push((m, n));
                }
            }
            sets.t.push((m, n));
            let target = match classify_form(&sum).expect("nonzero pair form") {
                PairClass::UPlus(s, t) => sets.u_plus.entry((s, t)),
                PairClass::UMinus(s, t) => sets.u_minus.entry((s, t)),
                PairClass::VPlus(s, t) => sets.v_plus.entry((s, t)),
                PairClass::VMinus(s, t) => sets.v_minus.entry((s, t)),
            };
            target.or_default().push((m, n));
        }
    }
    sets
}

/// Power of N in the leading-order growth of the moments of moments.
pub fn leading_exponent(family: Family, order: MomOrder) -> i64 {
    if order.is_special_for(family) {
        return 1;
    }
    let kb = order.k_beta() as i64;
    let k = order.k as i64;
    match family {
        Family::Symplectic => kb * (2 * kb + 1) - k,
        Family::EvenOrthogonal => kb * (2 * kb - 1) - k,
    }
}

/// All (2β+1)^k configurations in lexicographic order.
pub fn enumerate_configurations(order: MomOrder) -> Vec<ConfigurationVector> {
    let base = 2 * order.beta + 1;
    let total = base.pow(order.k as u32);
    (0..total)
        .map(|mut idx| {
            let mut l = vec![0; order.k];
            for slot in l.iter_mut().rev() {
                *slot = idx % base;
                idx /= base;
            }
            ConfigurationVector(l)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn order(k: usize, beta: usize) -> MomOrder {
        MomOrder::new(k, beta).unwrap()
    }

    fn cfg(o: MomOrder, l: &[usize]) -> ConfigurationVector {
        ConfigurationVector::new(o, l.to_vec()).unwrap()
    }

    #[test]
    fn mu_layout_is_blockwise() {
        let o = order(1, 1);
        let mu = build_mu_assignment(o, &cfg(o, &[1])).unwrap();
        assert_eq!(mu.slots(), &[Slot::plus(0), Slot::minus(0)]);
        let mu = build_mu_assignment(o, &cfg(o, &[0])).unwrap();
        assert_eq!(mu.slots(), &[Slot::minus(0), Slot::minus(0)]);
        let o = order(2, 1);
        let mu = build_mu_assignment(o, &cfg(o, &[2, 0])).unwrap();
        assert_eq!(mu.slots(), &[Slot::plus(0), Slot::plus(0), Slot::minus(1), Slot::minus(1)]);
    }

    #[test]
    fn configuration_rejects_out_of_range() {
        assert!(ConfigurationVector::new(order(1, 1), vec![3]).is_err());
        assert!(ConfigurationVector::new(order(2, 1), vec![1]).is_err());
    }

    #[test]
    fn coefficient_examples() {
        let o = order(1, 1);
        assert_eq!(combinatorial_coefficient(o, &cfg(o, &[1])), BigUint::from(2u32));
        assert_eq!(combinatorial_coefficient(o, &cfg(o, &[0])), BigUint::from(1u32));
        let o = order(2, 1);
        assert_eq!(combinatorial_coefficient(o, &cfg(o, &[1, 1])), BigUint::from(24u32));
        let total: BigUint = enumerate_configurations(o).iter().map(|l| combinatorial_coefficient(o, l)).sum();
        assert_eq!(total, BigUint::from(96u32));
    }

    #[test]
    fn pairing_examples() {
        let o = order(1, 1);
        let mu = build_mu_assignment(o, &cfg(o, &[1])).unwrap();
        let sp = pairing_sets(Family::Symplectic, &mu);
        assert_eq!(sp.a, vec![(0, 1)]);
        assert_eq!(sp.t, vec![(0, 0), (1, 1)]);
        assert_eq!(sp.members(PairClass::UPlus(0, 0)), &[(0, 0)]);
        assert_eq!(sp.members(PairClass::UMinus(0, 0)), &[(1, 1)]);
        let so = pairing_sets(Family::EvenOrthogonal, &mu);
        assert_eq!(so.a, vec![(0, 1)]);
        assert!(so.t.is_empty());

        let mu = build_mu_assignment(o, &cfg(o, &[0])).unwrap();
        let sp = pairing_sets(Family::Symplectic, &mu);
        assert!(sp.a.is_empty());
        assert_eq!(sp.b, vec![(0, 1)]);
        assert_eq!(sp.members(PairClass::UMinus(0, 0)), &[(0, 0), (0, 1), (1, 1)]);
    }

    #[test]
    fn exponents() {
        assert_eq!(leading_exponent(Family::Symplectic, order(1, 1)), 2);
        assert_eq!(leading_exponent(Family::EvenOrthogonal, order(2, 1)), 4);
        assert_eq!(leading_exponent(Family::EvenOrthogonal, order(1, 1)), 1);
        assert_eq!(leading_exponent(Family::Symplectic, order(1, 2)), 9);
    }

    #[test]
    fn enumeration_is_lexicographic() {
        let o = order(1, 1);
        let all: Vec<Vec<usize>> = enumerate_configurations(o).iter().map(|c| c.entries().to_vec()).collect();
        assert_eq!(all, vec![vec![0], vec![1], vec![2]]);
        let all = enumerate_configurations(order(2, 1));
        assert_eq!(all.len(), 9);
        assert!(all.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(enumerate_configurations(order(1, 2)).len(), 5);
    }
}
