//! Count vectors: multisets over a domain with arbitrary-precision counts.
//!
//! A symmetric operation only sees how often each element occurs among its
//! arguments, so a count vector stands for every argument tuple obtained by
//! permuting one fixed tuple.

use std::collections::BTreeSet;

use num_bigint::{BigUint, RandBigInt};
use num_traits::{ToPrimitive, Zero};
use rand::Rng;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::relation::{Domain, Elem};

/// Upper end for "strictly less than" counts: an element, or one past the
/// largest element (which counts everything).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bound {
    Elem(Elem),
    Top,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CountVector {
    counts: Vec<BigUint>,
    total: BigUint,
}

impl CountVector {
    pub fn new(counts: Vec<BigUint>) -> Self {
        let total = counts.iter().sum();
        CountVector { counts, total }
    }

    pub fn zeros(domain: usize) -> Self {
        CountVector::new(vec![BigUint::zero(); domain])
    }

    pub fn from_u64s(counts: &[u64]) -> Self {
        CountVector::new(counts.iter().map(|&c| BigUint::from(c)).collect())
    }

    pub fn from_tuple(domain: usize, tuple: &[Elem]) -> Self {
        let mut counts = vec![0u64; domain];
        for e in tuple {
            counts[e.index()] += 1;
        }
        CountVector::from_u64s(&counts)
    }

    /// `count` copies of `e`, nothing else.
    pub fn constant(domain: usize, e: Elem, count: BigUint) -> Self {
        let mut v = CountVector::zeros(domain);
        v.add(e, &count);
        v
    }

    pub fn domain_size(&self) -> usize {
        self.counts.len()
    }

    pub fn count(&self, e: Elem) -> &BigUint {
        &self.counts[e.index()]
    }

    pub fn counts(&self) -> &[BigUint] {
        &self.counts
    }

    pub fn total(&self) -> &BigUint {
        &self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total.is_zero()
    }

    pub fn add(&mut self, e: Elem, by: &BigUint) {
        self.counts[e.index()] += by;
        self.total += by;
    }

    /// Number of entries strictly below `bound` in the domain order.
    pub fn less_count(&self, bound: Bound) -> BigUint {
        match bound {
            Bound::Top => self.total.clone(),
            Bound::Elem(e) => self.counts[..e.index()].iter().sum(),
        }
    }

    /// Elements with a positive count.
    pub fn support(&self) -> impl Iterator<Item = Elem> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, _)| Elem(i as u8))
    }

    pub fn to_u64s(&self) -> Option<Vec<u64>> {
        self.counts.iter().map(ToPrimitive::to_u64).collect()
    }

    /// `{"counts": {"a": "2", ...}}` with every element listed in domain order
    /// of the serialized object keys.
    pub fn to_json(&self, names: &Domain) -> Value {
        let counts: serde_json::Map<String, Value> = names
            .elements()
            .map(|e| (names.name(e).to_string(), Value::String(self.count(e).to_string())))
            .collect();
        json!({ "counts": counts })
    }

    /// Inverse of [`CountVector::to_json`]; missing elements count zero.
    pub fn from_json(names: &Domain, v: &Value) -> Result<Self> {
        let obj = v
            .get("counts")
            .and_then(Value::as_object)
            .ok_or_else(|| Error::Parse("expected an object with a `counts` map".into()))?;
        let mut out = CountVector::zeros(names.size());
        for (name, c) in obj {
            let e = names.lookup(name)?;
            let s = c
                .as_str()
                .ok_or_else(|| Error::Parse(format!("count for `{name}` must be a string")))?;
            let c = crate::json::parse_biguint(s).map_err(Error::Parse)?;
            out.add(e, &c);
        }
        Ok(out)
    }

    /// Human-readable form such as `(a:3, 1:2)`; zero counts are omitted.
    pub fn display(&self, names: &Domain) -> String {
        let parts: Vec<String> = self
            .support()
            .map(|e| format!("{}:{}", names.name(e), self.count(e)))
            .collect();
        format!("({})", parts.join(", "))
    }
}

/// Calls `f` on every weak composition of `total` into `parts` parts, in
/// lexicographic order. Stops early when `f` returns `false`; the return value
/// reports whether the enumeration ran to completion.
pub fn for_each_composition<F>(total: u64, parts: usize, mut f: F) -> bool
where
    F: FnMut(&[u64]) -> bool,
{
    if parts == 0 {
        return total != 0 || f(&[]);
    }
    let mut c = vec![0u64; parts];
    c[parts - 1] = total;
    loop {
        if !f(&c) {
            return false;
        }
        // lexicographic successor: bump the rightmost slot that still has
        // mass to its right, then push that remaining mass into the last slot
        let mut suffix = c[parts - 1];
        let mut i = parts - 1;
        loop {
            if i == 0 {
                return true;
            }
            i -= 1;
            if suffix > 0 {
                c[i] += 1;
                c[i + 1..].iter_mut().for_each(|x| *x = 0);
                c[parts - 1] = suffix - 1;
                break;
            }
            suffix += c[i];
        }
    }
}

/// Number of weak compositions of `total` into `parts` parts,
/// `C(total + parts - 1, parts - 1)`.
pub fn composition_count(total: &BigUint, parts: usize) -> BigUint {
    if parts == 0 {
        return if total.is_zero() { 1u32.into() } else { BigUint::zero() };
    }
    let mut acc = BigUint::from(1u32);
    let k = parts - 1;
    for i in 1..=k {
        acc = acc * (total + BigUint::from(i)) / BigUint::from(i);
    }
    acc
}

/// A uniformly random weak composition of `total` into `parts` parts, by
/// placing `parts - 1` bars among `total + parts - 1` slots.
pub fn sample_composition<R: Rng + ?Sized>(rng: &mut R, total: &BigUint, parts: usize) -> Vec<BigUint> {
    assert!(parts > 0, "cannot split into zero parts");
    let slots = total + BigUint::from(parts - 1);
    let mut bars = BTreeSet::new();
    while bars.len() < parts - 1 {
        bars.insert(rng.gen_biguint_below(&slots));
    }
    let mut out = Vec::with_capacity(parts);
    let mut prev = BigUint::zero();
    for (idx, bar) in bars.iter().enumerate() {
        // slots before this bar that are not bars themselves
        let stars_before = bar - BigUint::from(idx);
        out.push(&stars_before - &prev);
        prev = stars_before;
    }
    out.push(total - prev);
    out
}
