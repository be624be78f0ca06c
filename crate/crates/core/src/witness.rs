//! Symmetric operations and the explicit NU witnesses for both families.
//!
//! The family A witness of arity `l = m^(2^n) + 1` is the cascade
//!
//! ```text
//! n      if l > m^(2^n) * x<n
//! r      else if x<(r+1) > m^(2^r) * x<r      (r = n-1, ..., 0)
//! a      otherwise
//! ```
//!
//! where `x<r` counts arguments strictly below `r` in `a < 0 < ... < n`.
//! Equivalently it returns the largest `r` with `x<(r+1) > m^(2^r) * x<r`
//! (reading `x<(n+1)` as the total), or `a` when there is none. Family B uses
//! `m = 2` over `a1 < a2 < 0 < ... < n` and resolves the fall-through case to
//! `a2` when `a2` occurs strictly more often than `a1`, else to `a1`.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::count::{composition_count, for_each_composition, sample_composition, CountVector};
use crate::error::{Error, Result};
use crate::exec::{sampled_search, Exec};
use crate::relation::{table_size, Elem, OpTable};
use crate::structures::FamilySpec;

/// An operation whose value depends only on how often each element occurs
/// among its arguments.
pub trait SymmetricOp: Send + Sync {
    fn domain_size(&self) -> usize;

    /// Declared arity.
    fn arity(&self) -> &BigUint;

    fn eval(&self, x: &CountVector) -> Result<Elem>;

    /// Same as [`SymmetricOp::eval`] on machine-word counts.
    fn eval_u64(&self, counts: &[u64]) -> Result<Elem> {
        self.eval(&CountVector::from_u64s(counts))
    }
}

impl<T: SymmetricOp + ?Sized> SymmetricOp for &T {
    fn domain_size(&self) -> usize {
        (**self).domain_size()
    }
    fn arity(&self) -> &BigUint {
        (**self).arity()
    }
    fn eval(&self, x: &CountVector) -> Result<Elem> {
        (**self).eval(x)
    }
    fn eval_u64(&self, counts: &[u64]) -> Result<Elem> {
        (**self).eval_u64(counts)
    }
}

/// The threshold cascade shared by both families.
#[derive(Clone, Debug)]
pub struct Witness {
    family: FamilySpec,
    arity: BigUint,
    /// `m^(2^r)` for `r = 0..=n`
    thresholds: Vec<BigUint>,
    small: Option<SmallThresholds>,
}

#[derive(Clone, Debug)]
struct SmallThresholds {
    thresholds: Vec<u128>,
}

impl Witness {
    /// The family A witness at its intended arity `m^(2^n) + 1`.
    pub fn f_a(n: usize, m: usize) -> Result<Self> {
        let spec = FamilySpec::A { n, m }.validate()?;
        let arity = pow_tower(m, n) + BigUint::one();
        Ok(Witness::build(spec, m, n, arity))
    }

    /// The family B witness at its intended arity `2^(2^n) + 1`.
    pub fn f_b(n: usize) -> Result<Self> {
        let spec = FamilySpec::B { n }.validate()?;
        let arity = pow_tower(2, n) + BigUint::one();
        Ok(Witness::build(spec, 2, n, arity))
    }

    /// The same cascade with a different declared arity (used for negative
    /// controls; at arities other than the intended one the result need not
    /// be a polymorphism).
    pub fn with_arity(mut self, arity: BigUint) -> Result<Self> {
        if arity.is_zero() {
            return Err(Error::Usage("arity must be positive".into()));
        }
        let (m, n) = self.base_and_n();
        self = Witness::build(self.family, m, n, arity);
        Ok(self)
    }

    fn build(family: FamilySpec, m: usize, n: usize, arity: BigUint) -> Self {
        let thresholds: Vec<BigUint> = (0..=n).map(|r| pow_tower(m, r)).collect();
        let small = (|| {
            let th = thresholds
                .iter()
                .map(|t| t.to_u64().map(u128::from))
                .collect::<Option<Vec<_>>>()?;
            Some(SmallThresholds { thresholds: th })
        })();
        Witness {
            family,
            arity,
            thresholds,
            small,
        }
    }

    fn base_and_n(&self) -> (usize, usize) {
        match self.family {
            FamilySpec::A { n, m } => (m, n),
            FamilySpec::B { n } => (2, n),
        }
    }

    pub fn family(&self) -> FamilySpec {
        self.family
    }

    pub fn n(&self) -> usize {
        self.base_and_n().1
    }

    /// Number of elements below the numbered element `0`.
    fn offset(&self) -> usize {
        match self.family {
            FamilySpec::A { .. } => 1,
            FamilySpec::B { .. } => 2,
        }
    }

    fn num(&self, r: usize) -> Elem {
        Elem((r + self.offset()) as u8)
    }

    fn fallthrough(&self, a1: &BigUint, a2: &BigUint) -> Elem {
        match self.family {
            FamilySpec::A { .. } => Elem(0),
            FamilySpec::B { .. } if a2 > a1 => Elem(1),
            FamilySpec::B { .. } => Elem(0),
        }
    }

    /// Prefix sums: `less[r]` is the number of entries strictly below the
    /// numbered element `r`, for `r = 0..=n+1`.
    fn less_counts(&self, x: &CountVector) -> Vec<BigUint> {
        let c = x.counts();
        let mut acc: BigUint = c[..self.offset()].iter().sum();
        let mut out = Vec::with_capacity(self.n() + 2);
        out.push(acc.clone());
        for v in &c[self.offset()..] {
            acc += v;
            out.push(acc.clone());
        }
        out
    }

    fn check_input(&self, x: &CountVector) -> Result<()> {
        if x.domain_size() != self.domain_size() {
            return Err(Error::DomainMismatch {
                left: self.domain_size(),
                right: x.domain_size(),
            });
        }
        if x.is_empty() {
            return Err(Error::Usage("empty count vector".into()));
        }
        Ok(())
    }

    /// The cascade exactly as written, with the declared arity in the first
    /// test regardless of the input's total.
    pub fn cascade(&self, x: &CountVector) -> Result<Elem> {
        self.check_input(x)?;
        let less = self.less_counts(x);
        let n = self.n();
        if self.arity > &self.thresholds[n] * &less[n] {
            return Ok(self.num(n));
        }
        for r in (0..n).rev() {
            if less[r + 1] > &self.thresholds[r] * &less[r] {
                return Ok(self.num(r));
            }
        }
        Ok(self.fallthrough(&x.counts()[0], &x.counts()[1]))
    }

    /// `max F_x` with `F_x = { r : x<(r+1) > m^(2^r) * x<r }`, reading
    /// `x<(n+1)` as the input's total.
    pub fn max_form(&self, x: &CountVector) -> Result<Elem> {
        self.check_input(x)?;
        let less = self.less_counts(x);
        let fired = (0..=self.n())
            .rev()
            .find(|&r| less[r + 1] > &self.thresholds[r] * &less[r]);
        Ok(match fired {
            Some(r) => self.num(r),
            None => self.fallthrough(&x.counts()[0], &x.counts()[1]),
        })
    }

    fn small_eval(&self, small: &SmallThresholds, counts: &[u64]) -> Elem {
        let off = self.offset();
        let n = self.n();
        let mut less = Vec::with_capacity(n + 2);
        let mut acc: u128 = counts[..off].iter().map(|&c| u128::from(c)).sum();
        less.push(acc);
        for &c in &counts[off..] {
            acc += u128::from(c);
            less.push(acc);
        }
        // at the declared arity the literal top test and the total coincide
        let top = less[n + 1];
        let fires = |r: usize, upper: u128| {
            // thresholds and counts both fit in u64, so the product fits in u128
            upper > small.thresholds[r] * less[r]
        };
        if fires(n, top) {
            return self.num(n);
        }
        for r in (0..n).rev() {
            if fires(r, less[r + 1]) {
                return self.num(r);
            }
        }
        match self.family {
            FamilySpec::A { .. } => Elem(0),
            FamilySpec::B { .. } if counts[1] > counts[0] => Elem(1),
            FamilySpec::B { .. } => Elem(0),
        }
    }
}

/// `m^(2^r)`
pub fn pow_tower(m: usize, r: usize) -> BigUint {
    num_traits::pow::Pow::pow(BigUint::from(m), BigUint::one() << r)
}

impl SymmetricOp for Witness {
    fn domain_size(&self) -> usize {
        self.n() + self.offset() + 1
    }

    fn arity(&self) -> &BigUint {
        &self.arity
    }

    /// At the declared arity this is [`Witness::cascade`]; at any other total
    /// it is [`Witness::max_form`], whose top test uses the actual total.
    fn eval(&self, x: &CountVector) -> Result<Elem> {
        if x.total() == &self.arity {
            self.cascade(x)
        } else {
            self.max_form(x)
        }
    }

    fn eval_u64(&self, counts: &[u64]) -> Result<Elem> {
        match &self.small {
            Some(small) if counts.len() == self.domain_size() && counts.iter().any(|&c| c > 0) => {
                if counts.iter().map(|&c| u128::from(c)).sum::<u128>() > u128::from(u64::MAX) {
                    return self.eval(&CountVector::from_u64s(counts));
                }
                Ok(self.small_eval(small, counts))
            }
            _ => self.eval(&CountVector::from_u64s(counts)),
        }
    }
}

/// A symmetric operation given by an explicit table over count vectors of
/// one fixed total.
#[derive(Clone, Debug)]
pub struct TabulatedSymmetric {
    domain: usize,
    arity: BigUint,
    values: HashMap<Vec<u64>, Elem>,
}

impl TabulatedSymmetric {
    /// Tabulates `f` on every count vector with total `arity`.
    pub fn from_fn<F>(domain: usize, arity: u64, mut f: F) -> Self
    where
        F: FnMut(&[u64]) -> Elem,
    {
        let mut values = HashMap::new();
        for_each_composition(arity, domain, |c| {
            values.insert(c.to_vec(), f(c));
            true
        });
        TabulatedSymmetric {
            domain,
            arity: BigUint::from(arity),
            values,
        }
    }

    /// The constant operation.
    pub fn constant(domain: usize, arity: u64, value: Elem) -> Self {
        TabulatedSymmetric::from_fn(domain, arity, |_| value)
    }
}

impl SymmetricOp for TabulatedSymmetric {
    fn domain_size(&self) -> usize {
        self.domain
    }

    fn arity(&self) -> &BigUint {
        &self.arity
    }

    fn eval(&self, x: &CountVector) -> Result<Elem> {
        let key = x
            .to_u64s()
            .ok_or_else(|| Error::Usage("count exceeds the tabulated range".into()))?;
        self.eval_u64(&key)
    }

    fn eval_u64(&self, counts: &[u64]) -> Result<Elem> {
        self.values.get(counts).copied().ok_or_else(|| {
            Error::Usage(format!(
                "no tabulated value for counts {counts:?} (declared arity {})",
                self.arity
            ))
        })
    }
}

/// Expands a symmetric operation into an explicit table at its declared
/// arity.
pub fn expand_to_table(op: &dyn SymmetricOp) -> Result<OpTable> {
    let k = op
        .arity()
        .to_usize()
        .filter(|&k| k <= 16)
        .ok_or_else(|| Error::Usage(format!("arity {} is too large to tabulate", op.arity())))?;
    let d = op.domain_size();
    table_size(k, d)?;
    let mut err = None;
    let table = OpTable::from_fn(k, d, |args| {
        let mut counts = vec![0u64; d];
        for e in args {
            counts[e.index()] += 1;
        }
        op.eval_u64(&counts).unwrap_or_else(|e| {
            err.get_or_insert(e);
            Elem(0)
        })
    })?;
    match err {
        Some(e) => Err(e),
        None => Ok(table),
    }
}

/// Checks the NU identities on count vectors: `op(r,...,r) = r` and
/// `op(s,...,s,t) = s` for `s != t`.
pub fn is_nu_symmetric(op: &dyn SymmetricOp) -> Result<bool> {
    let l = op.arity().clone();
    if l < BigUint::from(3u32) {
        return Err(Error::Usage(format!("NU operations need arity >= 3, got {l}")));
    }
    let d = op.domain_size();
    for r in 0..d {
        let r = Elem(r as u8);
        if op.eval(&CountVector::constant(d, r, l.clone()))? != r {
            return Ok(false);
        }
    }
    for s in 0..d {
        for t in 0..d {
            if s == t {
                continue;
            }
            let (s, t) = (Elem(s as u8), Elem(t as u8));
            let mut x = CountVector::constant(d, s, &l - BigUint::one());
            x.add(t, &BigUint::one());
            if op.eval(&x)? != s {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Result of a conservativity scan.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Conservativity {
    pub examined: u64,
    pub counterexample: Option<CountVector>,
}

impl Conservativity {
    pub fn is_conservative(&self) -> bool {
        self.counterexample.is_none()
    }
}

/// Checks that `op(x)` occurs in `x` for every count vector of total
/// `1..=max_total`.
pub fn is_conservative_exhaustive(
    op: &dyn SymmetricOp,
    max_total: u64,
    budget: u64,
) -> Result<Conservativity> {
    let d = op.domain_size();
    let needed: BigUint = (1..=max_total)
        .map(|t| composition_count(&BigUint::from(t), d))
        .sum();
    if needed > BigUint::from(budget) {
        return Err(Error::BudgetExceeded {
            needed: needed.to_string(),
            budget,
        });
    }
    let mut examined = 0;
    let mut failure: Option<Result<CountVector>> = None;
    for total in 1..=max_total {
        for_each_composition(total, d, |c| {
            examined += 1;
            match op.eval_u64(c) {
                Ok(v) if c[v.index()] > 0 => true,
                Ok(_) => {
                    failure = Some(Ok(CountVector::from_u64s(c)));
                    false
                }
                Err(e) => {
                    failure = Some(Err(e));
                    false
                }
            }
        });
        if failure.is_some() {
            break;
        }
    }
    Ok(Conservativity {
        examined,
        counterexample: failure.transpose()?,
    })
}

/// Checks conservativity on `trials` uniformly random count vectors at the
/// declared arity.
pub fn is_conservative_sampled(
    op: &dyn SymmetricOp,
    trials: u64,
    seed: u64,
    exec: Exec,
) -> Result<Conservativity> {
    let d = op.domain_size();
    let l = op.arity().clone();
    let hit = sampled_search(exec, trials, seed, |rng| {
        let x = CountVector::new(sample_composition(rng, &l, d));
        match op.eval(&x) {
            Ok(v) if !x.count(v).is_zero() => None,
            Ok(_) => Some(Ok(x)),
            Err(e) => Some(Err(e)),
        }
    });
    match hit {
        None => Ok(Conservativity {
            examined: trials,
            counterexample: None,
        }),
        Some((i, r)) => Ok(Conservativity {
            examined: i + 1,
            counterexample: Some(r?),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cv(c: &[u64]) -> CountVector {
        CountVector::from_u64s(c)
    }

    #[test]
    fn arity_values() {
        assert_eq!(Witness::f_a(1, 2).unwrap().arity(), &BigUint::from(5u32));
        assert_eq!(Witness::f_a(0, 3).unwrap().arity(), &BigUint::from(4u32));
        assert_eq!(Witness::f_a(1, 3).unwrap().arity(), &BigUint::from(10u32));
        assert_eq!(Witness::f_b(2).unwrap().arity(), &BigUint::from(17u32));
        assert_eq!(Witness::f_a(2, 2).unwrap().arity(), &BigUint::from(17u32));
    }

    #[test]
    fn f_a_hand_example() {
        // n=1, m=2, x = (a:2, 0:1, 1:2): 3 <= 2*2 and 5 <= 4*3, so a
        let f = Witness::f_a(1, 2).unwrap();
        let x = cv(&[2, 1, 2]);
        assert_eq!(f.cascade(&x).unwrap(), Elem(0));
        assert_eq!(f.max_form(&x).unwrap(), Elem(0));
        assert_eq!(f.eval_u64(&[2, 1, 2]).unwrap(), Elem(0));
    }

    #[test]
    fn f_a_unanimous_and_near_unanimous() {
        let f = Witness::f_a(1, 2).unwrap();
        for r in 0..3 {
            let mut c = [0u64; 3];
            c[r] = 5;
            assert_eq!(f.eval_u64(&c).unwrap(), Elem(r as u8));
            for t in 0..3 {
                if t != r {
                    let mut c = [0u64; 3];
                    c[r] = 4;
                    c[t] = 1;
                    assert_eq!(f.eval(&cv(&c)).unwrap(), Elem(r as u8));
                }
            }
        }
    }

    #[test]
    fn f_b_tie_goes_to_a1() {
        let f = Witness::f_b(0).unwrap();
        assert_eq!(f.eval(&cv(&[1, 1, 1])).unwrap(), Elem(0));
        assert_eq!(f.eval(&cv(&[1, 2, 0])).unwrap(), Elem(1));
        assert_eq!(f.eval(&cv(&[3, 0, 0])).unwrap(), Elem(0));
        assert_eq!(f.eval(&cv(&[0, 3, 0])).unwrap(), Elem(1));
    }

    #[test]
    fn f_b_near_unanimous_exhaustive() {
        let f = Witness::f_b(1).unwrap();
        for s in 0..4 {
            for t in 0..4 {
                if s == t {
                    continue;
                }
                let mut c = [0u64; 4];
                c[s] = 4;
                c[t] = 1;
                assert_eq!(f.eval_u64(&c).unwrap(), Elem(s as u8), "s={s} t={t}");
            }
        }
    }

    #[test]
    fn empty_input_is_an_error() {
        let f = Witness::f_a(1, 2).unwrap();
        assert!(f.eval(&cv(&[0, 0, 0])).is_err());
        assert!(f.eval_u64(&[0, 0, 0]).is_err());
        assert!(f.eval(&cv(&[1, 1])).is_err());
    }

    #[test]
    fn nu_checks() {
        assert!(is_nu_symmetric(&Witness::f_a(1, 2).unwrap()).unwrap());
        assert!(is_nu_symmetric(&Witness::f_b(0).unwrap()).unwrap());
        assert!(!is_nu_symmetric(&TabulatedSymmetric::constant(3, 4, Elem(0))).unwrap());
        // the lower-bound arity is not NU for the cascade
        let short = Witness::f_a(1, 2).unwrap().with_arity(4u32.into()).unwrap();
        assert!(!is_nu_symmetric(&short).unwrap());
        let tiny = TabulatedSymmetric::constant(2, 2, Elem(0));
        assert!(is_nu_symmetric(&tiny).is_err());
    }

    #[test]
    fn conservative_at_declared_arity() {
        let f = Witness::f_a(1, 2).unwrap();
        let mut n = 0;
        for_each_composition(5, 3, |c| {
            n += 1;
            let v = f.eval_u64(c).unwrap();
            assert!(c[v.index()] > 0);
            true
        });
        assert_eq!(n, 21);
        let report = is_conservative_exhaustive(&f, 8, 1_000_000).unwrap();
        assert!(report.is_conservative());
        let constant = TabulatedSymmetric::constant(2, 3, Elem(1));
        let scan = |op: &TabulatedSymmetric| {
            let mut bad = None;
            for_each_composition(3, 2, |c| {
                let v = op.eval_u64(c).unwrap();
                if c[v.index()] == 0 {
                    bad = Some(c.to_vec());
                }
                true
            });
            bad
        };
        assert_eq!(scan(&constant), Some(vec![3, 0]));
    }

    #[test]
    fn conservativity_budget() {
        let f = Witness::f_a(3, 3).unwrap();
        assert!(matches!(
            is_conservative_exhaustive(&f, 200, 1000),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn sampled_conservativity_at_huge_arity() {
        let f = Witness::f_a(4, 3).unwrap();
        let r = is_conservative_sampled(&f, 2_000, 99, Exec::Parallel).unwrap();
        assert!(r.is_conservative());
        assert_eq!(r.examined, 2_000);
    }

    #[test]
    fn expanded_table_matches_cascade() {
        let f = Witness::f_a(0, 3).unwrap();
        let t = expand_to_table(&f).unwrap();
        assert_eq!(t.arity(), 4);
        let x = [Elem(1), Elem(0), Elem(1), Elem(1)];
        assert_eq!(t.apply(&x), f.cascade(&CountVector::from_tuple(2, &x)).unwrap());
        assert!(expand_to_table(&Witness::f_a(2, 2).unwrap()).is_err());
    }
}
