//! The two extremal structure families and their derived relations.
//!
//! Family A, parameters `n >= 0` and `m >= 2`, lives on the ordered domain
//! `a < 0 < 1 < ... < n` and carries the `(m+1)`-ary relations `S_0..S_n`
//! together with every nonempty unary relation. Family B, parameter `n`,
//! lives on `a1 < a2 < 0 < ... < n` and carries the binary relations
//! `R_i^j` (`0 <= i <= n`, `j in {1, 2}`) plus every nonempty unary relation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::relation::{Domain, Elem, Equivalence, Relation};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpecA {
    pub n: usize,
    pub m: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpecB {
    pub n: usize,
}

/// Largest `n` accepted by the generators; keeps the domain within a `u32` mask.
pub const MAX_N: usize = 24;

impl SpecA {
    pub fn new(n: usize, m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::Usage(format!("family A needs m >= 2, got m = {m}")));
        }
        if n > MAX_N {
            return Err(Error::Usage(format!("family A needs n <= {MAX_N}, got n = {n}")));
        }
        Ok(SpecA { n, m })
    }

    /// `n = 0, m = 2` gives arity-2 "NU" operations, which do not exist; the
    /// lower-bound argument excludes it.
    pub fn is_degenerate(&self) -> bool {
        self.n == 0 && self.m == 2
    }

    pub fn domain_size(&self) -> usize {
        self.n + 2
    }

    pub fn a(&self) -> Elem {
        Elem(0)
    }

    /// The numbered element `r` (`0 <= r <= n`).
    pub fn num(&self, r: usize) -> Elem {
        debug_assert!(r <= self.n);
        Elem(r as u8 + 1)
    }

    pub fn domain(&self) -> Domain {
        let names = std::iter::once("a".to_string())
            .chain((0..=self.n).map(|r| r.to_string()))
            .collect();
        Domain::new(names).expect("valid family A domain")
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i > self.n {
            return Err(Error::OutOfRange {
                index: i,
                limit: self.n + 1,
            });
        }
        Ok(())
    }

    /// `{a, 0, ..., i-1}`
    pub fn lower_block(&self, i: usize) -> Vec<Elem> {
        std::iter::once(self.a())
            .chain((0..i).map(|r| self.num(r)))
            .collect()
    }
}

impl SpecB {
    pub fn new(n: usize) -> Result<Self> {
        if n > MAX_N {
            return Err(Error::Usage(format!("family B needs n <= {MAX_N}, got n = {n}")));
        }
        Ok(SpecB { n })
    }

    pub fn domain_size(&self) -> usize {
        self.n + 3
    }

    pub fn a1(&self) -> Elem {
        Elem(0)
    }

    pub fn a2(&self) -> Elem {
        Elem(1)
    }

    /// `a1` for `j = 1`, `a2` for `j = 2`.
    pub fn a_j(&self, j: u8) -> Elem {
        Elem(j - 1)
    }

    pub fn num(&self, r: usize) -> Elem {
        debug_assert!(r <= self.n);
        Elem(r as u8 + 2)
    }

    pub fn domain(&self) -> Domain {
        let names = ["a1".to_string(), "a2".to_string()]
            .into_iter()
            .chain((0..=self.n).map(|r| r.to_string()))
            .collect();
        Domain::new(names).expect("valid family B domain")
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i > self.n {
            return Err(Error::OutOfRange {
                index: i,
                limit: self.n + 1,
            });
        }
        Ok(())
    }

    /// `{a1, a2, 0, ..., i-1}`
    pub fn lower_block(&self, i: usize) -> Vec<Elem> {
        [self.a1(), self.a2()]
            .into_iter()
            .chain((0..i).map(|r| self.num(r)))
            .collect()
    }
}

/// Which family a structure belongs to, with its parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum FamilySpec {
    A { n: usize, m: usize },
    B { n: usize },
}

impl FamilySpec {
    pub fn validate(self) -> Result<Self> {
        match self {
            FamilySpec::A { n, m } => SpecA::new(n, m).map(|_| self),
            FamilySpec::B { n } => SpecB::new(n).map(|_| self),
        }
    }

    pub fn structure(self) -> Result<Structure> {
        match self {
            FamilySpec::A { n, m } => Ok(gen_structure_a(SpecA::new(n, m)?)),
            FamilySpec::B { n } => Ok(gen_structure_b(SpecB::new(n)?)),
        }
    }
}

impl From<SpecA> for FamilySpec {
    fn from(s: SpecA) -> Self {
        FamilySpec::A { n: s.n, m: s.m }
    }
}

impl From<SpecB> for FamilySpec {
    fn from(s: SpecB) -> Self {
        FamilySpec::B { n: s.n }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedRelation {
    pub name: String,
    #[serde(flatten)]
    pub relation: Relation,
}

/// A domain with an ordered list of named relations.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Structure {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub spec: Option<FamilySpec>,
    pub domain: Domain,
    pub relations: Vec<NamedRelation>,
}

impl Structure {
    pub fn new(domain: Domain, relations: Vec<NamedRelation>) -> Result<Self> {
        for r in &relations {
            if r.relation.domain() != domain.size() {
                return Err(Error::DomainMismatch {
                    left: domain.size(),
                    right: r.relation.domain(),
                });
            }
        }
        Ok(Structure {
            spec: None,
            domain,
            relations,
        })
    }

    pub fn domain_size(&self) -> usize {
        self.domain.size()
    }

    pub fn relation(&self, name: &str) -> Option<&Relation> {
        self.relations
            .iter()
            .find(|r| r.name == name)
            .map(|r| &r.relation)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Relation)> {
        self.relations.iter().map(|r| (r.name.as_str(), &r.relation))
    }
}

/// Name used for the unary relation with characteristic bitmask `mask`.
pub fn unary_name(mask: u32) -> String {
    format!("X{mask}")
}

pub fn s_name(i: usize) -> String {
    format!("S{i}")
}

pub fn r_name(i: usize, j: u8) -> String {
    format!("R{i}_{j}")
}

fn all_unary(domain: usize) -> impl Iterator<Item = NamedRelation> {
    (1u32..(1 << domain)).map(move |mask| NamedRelation {
        name: unary_name(mask),
        relation: Relation::unary_from_mask(domain, mask).expect("valid mask"),
    })
}

/// Bitmask of a set of elements.
pub fn mask_of(elems: &[Elem]) -> u32 {
    elems.iter().fold(0, |m, e| m | 1 << e.index())
}

/// `S_i = ({a,0..i-1} x {a,i}^m minus (a,i,...,i)) plus (u,...,u) for u > i`.
pub fn gen_s(spec: SpecA, i: usize) -> Result<Relation> {
    spec.check_index(i)?;
    let d = spec.domain_size();
    let mut factors = vec![spec.lower_block(i)];
    factors.extend(std::iter::repeat_n(vec![spec.a(), spec.num(i)], spec.m));
    let mut excluded = vec![spec.num(i); spec.m + 1];
    excluded[0] = spec.a();
    let tuples = crate::relation::cartesian(&factors)
        .into_iter()
        .filter(|t| *t != excluded)
        .chain(((i + 1)..=spec.n).map(|u| vec![spec.num(u); spec.m + 1]));
    Relation::new(spec.m + 1, d, tuples)
}

/// `R_i = {a,0..i-1} x {a,i}` plus the diagonal pairs above `i`.
pub fn gen_r(spec: SpecA, i: usize) -> Result<Relation> {
    spec.check_index(i)?;
    let tuples = crate::relation::cartesian(&[spec.lower_block(i), vec![spec.a(), spec.num(i)]])
        .into_iter()
        .chain(((i + 1)..=spec.n).map(|u| vec![spec.num(u); 2]));
    Relation::new(2, spec.domain_size(), tuples)
}

/// The equivalence with blocks `{a,0,...,i-1}, {i}, ..., {n}`.
pub fn gen_congruence_a(spec: SpecA, i: usize) -> Result<Equivalence> {
    if i == 0 {
        return Err(Error::Usage("congruence index must be at least 1".into()));
    }
    spec.check_index(i)?;
    Equivalence::from_blocks(spec.domain_size(), &[spec.lower_block(i)])
}

/// The chain `R_0^-1 . R_1^-1 ... R_{i-1}^-1 . R_{i-1} ... R_1 . R_0`, composed
/// left to right from the given binary factors.
pub fn converse_chain(factors: &[Relation]) -> Result<Relation> {
    converse_chain_mixed(factors, factors)
}

/// Like [`converse_chain`] but with independent choices for the descending
/// (converse) half and the ascending half.
pub fn converse_chain_mixed(down: &[Relation], up: &[Relation]) -> Result<Relation> {
    let first = down
        .first()
        .ok_or_else(|| Error::Usage("empty composition chain".into()))?;
    if down.len() != up.len() {
        return Err(Error::Usage("chain halves differ in length".into()));
    }
    let mut acc = first.converse()?;
    for r in &down[1..] {
        acc = acc.compose(&r.converse()?)?;
    }
    for r in up.iter().rev() {
        acc = acc.compose(r)?;
    }
    Ok(acc)
}

/// Checks that the converse chain over `R_0..R_{i-1}` equals the congruence
/// `a0...i-1|i|...|n`.
pub fn verify_eq1(spec: SpecA, i: usize) -> Result<bool> {
    let target = gen_congruence_a(spec, i)?;
    let factors = (0..i).map(|j| gen_r(spec, j)).collect::<Result<Vec<_>>>()?;
    Ok(converse_chain(&factors)? == *target.relation())
}

pub fn gen_structure_a(spec: SpecA) -> Structure {
    let d = spec.domain_size();
    let relations = (0..=spec.n)
        .map(|i| NamedRelation {
            name: s_name(i),
            relation: gen_s(spec, i).expect("index in range"),
        })
        .chain(all_unary(d))
        .collect();
    Structure {
        spec: Some(spec.into()),
        domain: spec.domain(),
        relations,
    }
}

/// `R_i^j = ({a1,a2,0..i-1} x {a1,a2,i}) minus (a_j, i)`, plus the diagonal
/// pairs above `i`.
pub fn gen_rij(spec: SpecB, i: usize, j: u8) -> Result<Relation> {
    spec.check_index(i)?;
    if !(1..=2).contains(&j) {
        return Err(Error::Usage(format!("j must be 1 or 2, got {j}")));
    }
    let excluded = vec![spec.a_j(j), spec.num(i)];
    let tuples = crate::relation::cartesian(&[
        spec.lower_block(i),
        vec![spec.a1(), spec.a2(), spec.num(i)],
    ])
    .into_iter()
    .filter(|t| *t != excluded)
    .chain(((i + 1)..=spec.n).map(|u| vec![spec.num(u); 2]));
    Relation::new(2, spec.domain_size(), tuples)
}

/// Equivalence with blocks `{a1,a2,0,...,i-1}, {i}, ..., {n}`.
pub fn gen_congruence_b(spec: SpecB, i: usize) -> Result<Equivalence> {
    if i == 0 {
        return Err(Error::Usage("congruence index must be at least 1".into()));
    }
    spec.check_index(i)?;
    Equivalence::from_blocks(spec.domain_size(), &[spec.lower_block(i)])
}

/// Family B analogue of [`verify_eq1`]. `pattern` lists the `j` used for each
/// of the `2i` factors in chain order; `None` uses `j = 1` throughout.
pub fn verify_eq1_b(spec: SpecB, i: usize, pattern: Option<&[u8]>) -> Result<bool> {
    let target = gen_congruence_b(spec, i)?;
    let pattern: Vec<u8> = match pattern {
        Some(p) if p.len() == 2 * i => p.to_vec(),
        Some(p) => {
            return Err(Error::Usage(format!(
                "pattern has {} entries, chain has {}",
                p.len(),
                2 * i
            )))
        }
        None => vec![1; 2 * i],
    };
    // down half: R_0^-1 ... R_{i-1}^-1 ; up half (listed R_{i-1} ... R_0)
    let down = (0..i)
        .map(|r| gen_rij(spec, r, pattern[r]))
        .collect::<Result<Vec<_>>>()?;
    let up = (0..i)
        .map(|r| gen_rij(spec, r, pattern[2 * i - 1 - r]))
        .collect::<Result<Vec<_>>>()?;
    Ok(converse_chain_mixed(&down, &up)? == *target.relation())
}

pub fn gen_structure_b(spec: SpecB) -> Structure {
    let d = spec.domain_size();
    let relations = (0..=spec.n)
        .flat_map(|i| {
            [1u8, 2].map(|j| NamedRelation {
                name: r_name(i, j),
                relation: gen_rij(spec, i, j).expect("index in range"),
            })
        })
        .chain(all_unary(d))
        .collect();
    Structure {
        spec: Some(spec.into()),
        domain: spec.domain(),
        relations,
    }
}
