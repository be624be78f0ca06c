//! Domains, relations and operation tables over small ordered domains.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;

/// An element of a finite ordered domain, identified by its position.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Elem(pub u8);

impl Elem {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for Elem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

pub type Tuple = Vec<Elem>;

/// Display names for the elements of a domain, listed in the domain's order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Domain {
    names: Vec<String>,
}

impl Domain {
    pub fn new(names: Vec<String>) -> Result<Self> {
        if names.is_empty() || names.len() > 32 {
            return Err(Error::Usage(format!(
                "domain size must be within 1..=32, got {}",
                names.len()
            )));
        }
        let distinct: BTreeSet<&String> = names.iter().collect();
        if distinct.len() != names.len() {
            return Err(Error::Usage("duplicate element names".into()));
        }
        Ok(Domain { names })
    }

    /// Domain with elements named by their index.
    pub fn numeric(size: usize) -> Result<Self> {
        Domain::new((0..size).map(|i| i.to_string()).collect())
    }

    pub fn size(&self) -> usize {
        self.names.len()
    }

    pub fn name(&self, e: Elem) -> &str {
        &self.names[e.index()]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn lookup(&self, name: &str) -> Result<Elem> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| Elem(i as u8))
            .ok_or_else(|| Error::Parse(format!("unknown element `{name}`")))
    }

    pub fn elements(&self) -> impl Iterator<Item = Elem> + '_ {
        (0..self.names.len()).map(|i| Elem(i as u8))
    }
}

/// A finite relation: a set of equal-length tuples, kept sorted and free of
/// duplicates so that membership is a binary search.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RelationRepr", into = "RelationRepr")]
pub struct Relation {
    arity: usize,
    domain: usize,
    tuples: Vec<Tuple>,
}

#[derive(Serialize, Deserialize)]
struct RelationRepr {
    arity: usize,
    domain: usize,
    tuples: Vec<Tuple>,
}

impl TryFrom<RelationRepr> for Relation {
    type Error = Error;

    fn try_from(r: RelationRepr) -> Result<Self> {
        Relation::new(r.arity, r.domain, r.tuples)
    }
}

impl From<Relation> for RelationRepr {
    fn from(r: Relation) -> Self {
        RelationRepr {
            arity: r.arity,
            domain: r.domain,
            tuples: r.tuples,
        }
    }
}

impl Relation {
    pub fn new<I>(arity: usize, domain: usize, tuples: I) -> Result<Self>
    where
        I: IntoIterator<Item = Tuple>,
    {
        if arity == 0 {
            return Err(Error::Usage("relation arity must be positive".into()));
        }
        if domain == 0 || domain > 32 {
            return Err(Error::Usage(format!("unsupported domain size {domain}")));
        }
        let mut set = BTreeSet::new();
        for t in tuples {
            if t.len() != arity {
                return Err(Error::Arity {
                    expected: arity,
                    found: t.len(),
                });
            }
            if let Some(e) = t.iter().find(|e| e.index() >= domain) {
                return Err(Error::OutOfRange {
                    index: e.index(),
                    limit: domain,
                });
            }
            set.insert(t);
        }
        Ok(Relation {
            arity,
            domain,
            tuples: set.into_iter().collect(),
        })
    }

    pub fn empty(arity: usize, domain: usize) -> Result<Self> {
        Relation::new(arity, domain, std::iter::empty())
    }

    /// The equality relation.
    pub fn identity(domain: usize) -> Result<Self> {
        Relation::new(2, domain, (0..domain).map(|i| vec![Elem(i as u8); 2]))
    }

    pub fn full(arity: usize, domain: usize) -> Result<Self> {
        let elems: Vec<Elem> = (0..domain).map(|i| Elem(i as u8)).collect();
        Relation::new(arity, domain, cartesian(&vec![elems; arity]))
    }

    /// Unary relation whose members are the set bits of `mask`.
    pub fn unary_from_mask(domain: usize, mask: u32) -> Result<Self> {
        Relation::new(
            1,
            domain,
            (0..domain)
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| vec![Elem(i as u8)]),
        )
    }

    /// Product of the given coordinate sets.
    pub fn product(domain: usize, factors: &[Vec<Elem>]) -> Result<Self> {
        Relation::new(factors.len(), domain, cartesian(factors))
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn domain(&self) -> usize {
        self.domain
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn tuples(&self) -> &[Tuple] {
        &self.tuples
    }

    pub fn iter(&self) -> impl Iterator<Item = &Tuple> {
        self.tuples.iter()
    }

    pub fn contains(&self, t: &[Elem]) -> bool {
        self.tuples
            .binary_search_by(|probe| probe.as_slice().cmp(t))
            .is_ok()
    }

    /// Position of `t` in the canonical tuple order.
    pub fn position(&self, t: &[Elem]) -> Option<usize> {
        self.tuples
            .binary_search_by(|probe| probe.as_slice().cmp(t))
            .ok()
    }

    /// Bitmask of the members of a unary relation.
    pub fn unary_mask(&self) -> Result<u32> {
        self.expect_arity(1)?;
        Ok(self.tuples.iter().fold(0, |m, t| m | 1 << t[0].index()))
    }

    pub fn union(&self, other: &Relation) -> Result<Relation> {
        self.same_shape(other)?;
        Relation::new(
            self.arity,
            self.domain,
            self.tuples.iter().chain(other.tuples.iter()).cloned(),
        )
    }

    pub fn difference(&self, other: &Relation) -> Result<Relation> {
        self.same_shape(other)?;
        Relation::new(
            self.arity,
            self.domain,
            self.tuples.iter().filter(|t| !other.contains(t)).cloned(),
        )
    }

    pub fn with_tuple(&self, t: Tuple) -> Result<Relation> {
        Relation::new(
            self.arity,
            self.domain,
            self.tuples.iter().cloned().chain(std::iter::once(t)),
        )
    }

    pub fn without_tuple(&self, t: &[Elem]) -> Result<Relation> {
        Relation::new(
            self.arity,
            self.domain,
            self.tuples.iter().filter(|u| u.as_slice() != t).cloned(),
        )
    }

    /// `(x, y)` is in the result iff `(y, x)` is in `self`.
    pub fn converse(&self) -> Result<Relation> {
        self.expect_arity(2)?;
        Relation::new(
            2,
            self.domain,
            self.tuples.iter().map(|t| vec![t[1], t[0]]),
        )
    }

    /// Relational composition in diagram order: `(x, z)` is in the result iff
    /// some `y` has `(x, y)` in `self` and `(y, z)` in `other`.
    pub fn compose(&self, other: &Relation) -> Result<Relation> {
        self.expect_arity(2)?;
        other.expect_arity(2)?;
        if self.domain != other.domain {
            return Err(Error::DomainMismatch {
                left: self.domain,
                right: other.domain,
            });
        }
        // successor masks of `other`, indexed by the middle element
        let mut succ = vec![0u32; self.domain];
        for t in &other.tuples {
            succ[t[0].index()] |= 1 << t[1].index();
        }
        let mut pairs = Vec::new();
        for x in 0..self.domain {
            let reach = self
                .tuples
                .iter()
                .filter(|t| t[0].index() == x)
                .fold(0u32, |acc, t| acc | succ[t[1].index()]);
            for z in 0..self.domain {
                if reach >> z & 1 == 1 {
                    pairs.push(vec![Elem(x as u8), Elem(z as u8)]);
                }
            }
        }
        Relation::new(2, self.domain, pairs)
    }

    /// Image of the tuples under restriction to `coords` (in the given order).
    pub fn project(&self, coords: &[usize]) -> Result<Relation> {
        if coords.is_empty() {
            return Err(Error::Usage("projection onto no coordinates".into()));
        }
        if let Some(&c) = coords.iter().find(|&&c| c >= self.arity) {
            return Err(Error::OutOfRange {
                index: c,
                limit: self.arity,
            });
        }
        Relation::new(
            coords.len(),
            self.domain,
            self.tuples
                .iter()
                .map(|t| coords.iter().map(|&c| t[c]).collect()),
        )
    }

    pub fn is_equivalence(&self) -> Result<bool> {
        self.expect_arity(2)?;
        let d = self.domain;
        let has = |x: usize, y: usize| self.contains(&[Elem(x as u8), Elem(y as u8)]);
        let reflexive = (0..d).all(|x| has(x, x));
        let symmetric = self.tuples.iter().all(|t| has(t[1].index(), t[0].index()));
        let transitive = self.compose(self)?.tuples.iter().all(|t| self.contains(t));
        Ok(reflexive && symmetric && transitive)
    }

    fn expect_arity(&self, arity: usize) -> Result<()> {
        if self.arity != arity {
            return Err(Error::Arity {
                expected: arity,
                found: self.arity,
            });
        }
        Ok(())
    }

    fn same_shape(&self, other: &Relation) -> Result<()> {
        other.expect_arity(self.arity)?;
        if self.domain != other.domain {
            return Err(Error::DomainMismatch {
                left: self.domain,
                right: other.domain,
            });
        }
        Ok(())
    }

    /// One tuple per line, elements separated by single spaces.
    pub fn to_text(&self, names: &Domain) -> String {
        let mut out = String::new();
        for t in &self.tuples {
            let line: Vec<&str> = t.iter().map(|&e| names.name(e)).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    /// Parses the line format produced by [`Relation::to_text`]. Blank lines
    /// and lines starting with `#` are skipped.
    pub fn from_text(text: &str, names: &Domain) -> Result<Relation> {
        let mut tuples = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let t = line
                .split_whitespace()
                .map(|w| names.lookup(w))
                .collect::<Result<Tuple>>()?;
            tuples.push(t);
        }
        let arity = tuples
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::Parse("no tuples; arity is unknown".into()))?;
        Relation::new(arity, names.size(), tuples)
    }
}

/// All tuples of the cartesian product, in lexicographic order.
pub fn cartesian(factors: &[Vec<Elem>]) -> Vec<Tuple> {
    let mut out: Vec<Tuple> = vec![Vec::with_capacity(factors.len())];
    for f in factors {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                f.iter().map(move |&e| {
                    let mut t = prefix.clone();
                    t.push(e);
                    t
                })
            })
            .collect();
    }
    out
}

/// An equivalence relation together with its block partition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Equivalence {
    relation: Relation,
    blocks: Vec<Vec<Elem>>,
}

impl Equivalence {
    pub fn from_relation(relation: Relation) -> Result<Self> {
        if !relation.is_equivalence()? {
            return Err(Error::Usage("relation is not an equivalence".into()));
        }
        let mut seen = 0u32;
        let mut blocks = Vec::new();
        for x in 0..relation.domain() {
            if seen >> x & 1 == 1 {
                continue;
            }
            let block: Vec<Elem> = (0..relation.domain())
                .filter(|&y| relation.contains(&[Elem(x as u8), Elem(y as u8)]))
                .map(|y| Elem(y as u8))
                .collect();
            for e in &block {
                seen |= 1 << e.index();
            }
            blocks.push(block);
        }
        Ok(Equivalence { relation, blocks })
    }

    /// Builds the equivalence whose blocks are the given sets; elements not
    /// mentioned form singleton blocks.
    pub fn from_blocks(domain: usize, blocks: &[Vec<Elem>]) -> Result<Self> {
        let mut label: Vec<usize> = (0..domain).collect();
        let mut used = 0u32;
        for block in blocks {
            for e in block {
                if e.index() >= domain {
                    return Err(Error::OutOfRange {
                        index: e.index(),
                        limit: domain,
                    });
                }
                if used >> e.index() & 1 == 1 {
                    return Err(Error::Usage(format!("{e} occurs in two blocks")));
                }
                used |= 1 << e.index();
                label[e.index()] = domain + block[0].index();
            }
        }
        let pairs = (0..domain).flat_map(|x| {
            let label = &label;
            (0..domain)
                .filter(move |&y| label[x] == label[y])
                .map(move |y| vec![Elem(x as u8), Elem(y as u8)])
        });
        Equivalence::from_relation(Relation::new(2, domain, pairs)?)
    }

    pub fn relation(&self) -> &Relation {
        &self.relation
    }

    /// Blocks in ascending order of their least element.
    pub fn blocks(&self) -> &[Vec<Elem>] {
        &self.blocks
    }
}

/// Blocks of an equivalence relation, failing if `r` is not one.
pub fn blocks(r: &Relation) -> Result<Vec<Vec<Elem>>> {
    Ok(Equivalence::from_relation(r.clone())?.blocks)
}

/// A fully tabulated operation. Inputs are indexed in mixed radix with the
/// first argument most significant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpTable {
    arity: usize,
    domain: usize,
    values: Vec<Elem>,
}

impl OpTable {
    pub fn new(arity: usize, domain: usize, values: Vec<Elem>) -> Result<Self> {
        let size = table_size(arity, domain)?;
        if values.len() != size {
            return Err(Error::Usage(format!(
                "table has {} entries, expected {size}",
                values.len()
            )));
        }
        if let Some(e) = values.iter().find(|e| e.index() >= domain) {
            return Err(Error::OutOfRange {
                index: e.index(),
                limit: domain,
            });
        }
        Ok(OpTable {
            arity,
            domain,
            values,
        })
    }

    /// Tabulates `f` on every input tuple.
    pub fn from_fn<F>(arity: usize, domain: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(&[Elem]) -> Elem,
    {
        let size = table_size(arity, domain)?;
        let values = (0..size)
            .map(|idx| f(&decode_index(idx, arity, domain)))
            .collect();
        OpTable::new(arity, domain, values)
    }

    pub fn projection(arity: usize, domain: usize, coord: usize) -> Result<Self> {
        OpTable::from_fn(arity, domain, |x| x[coord])
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn domain(&self) -> usize {
        self.domain
    }

    pub fn values(&self) -> &[Elem] {
        &self.values
    }

    pub fn index_of(&self, args: &[Elem]) -> usize {
        args.iter()
            .fold(0, |acc, e| acc * self.domain + e.index())
    }

    pub fn apply(&self, args: &[Elem]) -> Elem {
        self.values[self.index_of(args)]
    }

    pub fn set(&mut self, args: &[Elem], value: Elem) {
        let i = self.index_of(args);
        self.values[i] = value;
    }
}

pub(crate) fn table_size(arity: usize, domain: usize) -> Result<usize> {
    u32::try_from(arity)
        .ok()
        .and_then(|a| domain.checked_pow(a))
        .ok_or_else(|| Error::BudgetExceeded {
            needed: format!("{domain}^{arity}"),
            budget: usize::MAX as u64,
        })
}

pub(crate) fn decode_index(mut idx: usize, arity: usize, domain: usize) -> Tuple {
    let mut t = vec![Elem(0); arity];
    for slot in t.iter_mut().rev() {
        *slot = Elem((idx % domain) as u8);
        idx /= domain;
    }
    t
}

/// Outcome of an explicit compatibility check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Compat {
    Compatible,
    /// The offending matrix, listed column by column.
    Violation(Vec<Tuple>),
}

impl Compat {
    pub fn is_compatible(&self) -> bool {
        matches!(self, Compat::Compatible)
    }
}

/// Checks every `arity(R) x k` matrix whose columns lie in `R`, applying `t`
/// row-wise. Fails with [`Error::BudgetExceeded`] when `|R|^k > budget`.
pub fn is_compatible_table(t: &OpTable, r: &Relation, budget: u64, exec: Exec) -> Result<Compat> {
    if t.domain() != r.domain() {
        return Err(Error::DomainMismatch {
            left: t.domain(),
            right: r.domain(),
        });
    }
    let k = t.arity();
    let size = r.len();
    let matrices = (size as u128).checked_pow(k as u32);
    match matrices {
        Some(c) if c <= budget as u128 => {}
        _ => {
            return Err(Error::BudgetExceeded {
                needed: format!("{size}^{k}"),
                budget,
            })
        }
    }
    if size == 0 {
        return Ok(Compat::Compatible);
    }
    let k = t.arity();
    // the first column is the unit of parallel work
    let found = exec.find_first(size, |first| {
        let mut cols = vec![0usize; k];
        cols[0] = first;
        let mut row = vec![Elem(0); k];
        let mut image = vec![Elem(0); r.arity()];
        loop {
            for (j, slot) in image.iter_mut().enumerate() {
                for (c, &ci) in cols.iter().enumerate() {
                    row[c] = r.tuples[ci][j];
                }
                *slot = t.apply(&row);
            }
            if !r.contains(&image) {
                return Some(cols.iter().map(|&ci| r.tuples[ci].clone()).collect());
            }
            // odometer over columns 1..k
            let mut pos = k;
            loop {
                if pos == 1 {
                    return None;
                }
                pos -= 1;
                cols[pos] += 1;
                if cols[pos] < size {
                    break;
                }
                cols[pos] = 0;
            }
        }
    });
    Ok(match found {
        Some(m) => Compat::Violation(m),
        None => Compat::Compatible,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(i: u8) -> Elem {
        Elem(i)
    }

    fn rel2(domain: usize, pairs: &[(u8, u8)]) -> Relation {
        Relation::new(2, domain, pairs.iter().map(|&(x, y)| vec![e(x), e(y)])).unwrap()
    }

    #[test]
    fn identity_is_neutral_for_compose() {
        let q = rel2(3, &[(0, 1), (1, 2), (2, 2)]);
        let id = Relation::identity(3).unwrap();
        assert_eq!(id.compose(&q).unwrap(), q);
        assert_eq!(q.compose(&id).unwrap(), q);
    }

    #[test]
    fn compose_is_diagram_order() {
        let p = rel2(3, &[(0, 1)]);
        let q = rel2(3, &[(1, 2)]);
        assert_eq!(p.compose(&q).unwrap(), rel2(3, &[(0, 2)]));
        assert!(q.compose(&p).unwrap().is_empty());
    }

    #[test]
    fn compose_rejects_non_binary() {
        let u = Relation::unary_from_mask(3, 0b101).unwrap();
        let id = Relation::identity(3).unwrap();
        assert!(matches!(u.compose(&id), Err(Error::Arity { .. })));
        assert!(matches!(u.converse(), Err(Error::Arity { .. })));
    }

    #[test]
    fn converse_of_identity() {
        let id = Relation::identity(4).unwrap();
        assert_eq!(id.converse().unwrap(), id);
    }

    #[test]
    fn projection_checks_range() {
        let r = Relation::full(2, 2).unwrap();
        assert!(matches!(r.project(&[2]), Err(Error::OutOfRange { .. })));
        assert_eq!(r.project(&[0, 1]).unwrap(), r);
    }

    #[test]
    fn relation_rejects_bad_tuples() {
        assert!(Relation::new(2, 2, vec![vec![e(0)]]).is_err());
        assert!(Relation::new(1, 2, vec![vec![e(2)]]).is_err());
        let r = Relation::new(1, 2, vec![vec![e(1)], vec![e(1)]]).unwrap();
        assert_eq!(r.len(), 1);
    }

    #[test]
    fn equivalence_blocks() {
        let id = Relation::identity(3).unwrap();
        assert!(id.is_equivalence().unwrap());
        assert_eq!(blocks(&id).unwrap(), vec![vec![e(0)], vec![e(1)], vec![e(2)]]);
        let full = Relation::full(2, 3).unwrap();
        assert_eq!(blocks(&full).unwrap(), vec![vec![e(0), e(1), e(2)]]);
        let eq = Equivalence::from_blocks(4, &[vec![e(2), e(0)]]).unwrap();
        assert_eq!(eq.blocks(), &[vec![e(0), e(2)], vec![e(1)], vec![e(3)]]);
        assert!(!rel2(2, &[(0, 0), (0, 1)]).is_equivalence().unwrap());
    }

    #[test]
    fn text_format_round_trip() {
        let names = Domain::new(vec!["a".into(), "0".into(), "1".into()]).unwrap();
        let r = rel2(3, &[(0, 0), (0, 1), (2, 2)]);
        let text = r.to_text(&names);
        assert_eq!(text, "a a\na 0\n1 1\n");
        assert_eq!(Relation::from_text(&text, &names).unwrap(), r);
        assert!(Relation::from_text("a b\n", &names).is_err());
    }

    #[test]
    fn json_format() {
        let r = rel2(2, &[(1, 0)]);
        let json = serde_json::to_string(&r).unwrap();
        assert_eq!(json, r#"{"arity":2,"domain":2,"tuples":[[1,0]]}"#);
        let back: Relation = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
        assert!(serde_json::from_str::<Relation>(r#"{"arity":2,"domain":2,"tuples":[[3,0]]}"#).is_err());
    }

    #[test]
    fn projection_op_is_compatible() {
        let r = rel2(3, &[(0, 1), (1, 2), (2, 0)]);
        let t = OpTable::projection(3, 3, 0).unwrap();
        assert!(is_compatible_table(&t, &r, 1_000, Exec::Sequential).unwrap().is_compatible());
    }

    #[test]
    fn majority_vs_not_all_equal() {
        let nae = Relation::new(
            3,
            2,
            cartesian(&vec![vec![e(0), e(1)]; 3])
                .into_iter()
                .filter(|t| !(t[0] == t[1] && t[1] == t[2])),
        )
        .unwrap();
        let maj = OpTable::from_fn(3, 2, |x| {
            if x.iter().filter(|v| v.0 == 1).count() >= 2 {
                e(1)
            } else {
                e(0)
            }
        })
        .unwrap();
        // independent brute force over all 6^3 column choices
        let mut brute_ok = true;
        for c0 in nae.iter() {
            for c1 in nae.iter() {
                for c2 in nae.iter() {
                    let img: Vec<Elem> = (0..3).map(|j| maj.apply(&[c0[j], c1[j], c2[j]])).collect();
                    brute_ok &= nae.contains(&img);
                }
            }
        }
        assert!(!brute_ok);
        match is_compatible_table(&maj, &nae, 1_000, Exec::Sequential).unwrap() {
            Compat::Violation(cols) => {
                let rows: Vec<Elem> = (0..3)
                    .map(|j| maj.apply(&cols.iter().map(|c| c[j]).collect::<Vec<_>>()))
                    .collect();
                assert!(!nae.contains(&rows));
            }
            Compat::Compatible => panic!("expected a violation"),
        }
        // majority is self-dual, so it does preserve disequality
        let neq = rel2(2, &[(0, 1), (1, 0)]);
        assert!(is_compatible_table(&maj, &neq, 1_000, Exec::Parallel).unwrap().is_compatible());
    }

    #[test]
    fn budget_is_enforced() {
        let r = Relation::full(2, 3).unwrap();
        let t = OpTable::projection(4, 3, 0).unwrap();
        assert!(matches!(
            is_compatible_table(&t, &r, 100, Exec::Sequential),
            Err(Error::BudgetExceeded { .. })
        ));
    }
}
