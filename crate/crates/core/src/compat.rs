//! Compatibility of symmetric operations with relations at large arity.
//!
//! Permuting the columns of a matrix permutes every row the same way, and a
//! symmetric operation ignores the order of its arguments. So whether the
//! row-wise image of a matrix lies in `R` depends only on the multiset of its
//! columns, and it suffices to range over weak compositions of the arity into
//! `|R|` parts instead of over `|R|^l` matrices.

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::count::{composition_count, sample_composition, CountVector};
use crate::error::{Error, Result};
use crate::exec::{sampled_search, Exec};
use crate::relation::{Domain, Elem, Relation, Tuple};
use crate::witness::SymmetricOp;

/// Seed used when the caller does not supply one.
pub const DEFAULT_SEED: u64 = 20_171_027;

/// A matrix of relation tuples up to column permutation: each distinct column
/// with its multiplicity. Columns are kept in canonical tuple order and every
/// multiplicity is positive.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ColumnMultiset {
    arity: usize,
    domain: usize,
    columns: Vec<(Tuple, BigUint)>,
}

impl ColumnMultiset {
    /// Builds a multiset, merging repeated columns and dropping zero counts.
    pub fn new(arity: usize, domain: usize, columns: Vec<(Tuple, BigUint)>) -> Result<Self> {
        let mut merged: std::collections::BTreeMap<Tuple, BigUint> = Default::default();
        for (t, c) in columns {
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
            *merged.entry(t).or_default() += c;
        }
        Ok(ColumnMultiset {
            arity,
            domain,
            columns: merged.into_iter().filter(|(_, c)| !c.is_zero()).collect(),
        })
    }

    /// Multiset over `r` with `counts[i]` copies of the `i`-th tuple.
    pub fn from_relation_counts(r: &Relation, counts: &[BigUint]) -> Result<Self> {
        if counts.len() != r.len() {
            return Err(Error::Usage(format!(
                "{} counts for a relation with {} tuples",
                counts.len(),
                r.len()
            )));
        }
        ColumnMultiset::new(
            r.arity(),
            r.domain(),
            r.iter().cloned().zip(counts.iter().cloned()).collect(),
        )
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn columns(&self) -> &[(Tuple, BigUint)] {
        &self.columns
    }

    pub fn total(&self) -> BigUint {
        self.columns.iter().map(|(_, c)| c).sum()
    }

    /// First column not in `r`, if any.
    pub fn first_outside(&self, r: &Relation) -> Option<&Tuple> {
        self.columns.iter().map(|(t, _)| t).find(|t| !r.contains(t))
    }

    /// Count vector of every row: row `i` counts element `e` once per column
    /// whose `i`-th entry is `e`, weighted by that column's multiplicity.
    pub fn row_counts(&self) -> Vec<CountVector> {
        (0..self.arity)
            .map(|i| {
                let mut v = CountVector::zeros(self.domain);
                for (t, c) in &self.columns {
                    v.add(t[i], c);
                }
                v
            })
            .collect()
    }

    /// Row-wise image under `op`.
    pub fn image(&self, op: &dyn SymmetricOp) -> Result<Tuple> {
        self.row_counts().iter().map(|row| op.eval(row)).collect()
    }

    pub fn to_json(&self, names: &Domain) -> Value {
        let cols: Vec<Value> = self
            .columns
            .iter()
            .map(|(t, c)| {
                json!({
                    "tuple": t.iter().map(|&e| names.name(e)).collect::<Vec<_>>(),
                    "count": c.to_string(),
                })
            })
            .collect();
        json!({ "columns": cols, "total": self.total().to_string() })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Exact,
    Sampled,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Exact => "exact",
            Mode::Sampled => "sampled",
        }
    }
}

/// Outcome of a compatibility check. In sampled mode a violation is
/// definitive while `ok` is only evidence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub mode: Mode,
    pub examined: BigUint,
    pub violation: Option<ColumnMultiset>,
    pub seed: Option<u64>,
}

impl Verdict {
    pub fn is_ok(&self) -> bool {
        self.violation.is_none()
    }

    pub fn to_json(&self, names: &Domain, op: Option<&dyn SymmetricOp>) -> Value {
        let mut v = json!({
            "mode": self.mode.as_str(),
            "verdict": if self.is_ok() { "ok" } else { "violation" },
            "examined": self.examined.to_string(),
        });
        if let Some(seed) = self.seed {
            v["seed"] = json!(seed);
        }
        if let Some(cm) = &self.violation {
            v["violation"] = cm.to_json(names);
            v["rows"] = Value::Array(cm.row_counts().iter().map(|r| r.to_json(names)).collect());
            if let Some(img) = op.and_then(|op| cm.image(op).ok()) {
                v["image"] = json!(img.iter().map(|&e| names.name(e)).collect::<Vec<_>>());
            }
        }
        v
    }
}

/// Exhaustive check over every column multiset of size `arity(op)` drawn from
/// `r`, in lexicographic order of the count vectors. The first violation in
/// that order is reported, whatever the execution strategy.
pub fn check_compat_symmetric(
    op: &dyn SymmetricOp,
    r: &Relation,
    budget: u64,
    exec: Exec,
) -> Result<Verdict> {
    if op.domain_size() != r.domain() {
        return Err(Error::DomainMismatch {
            left: op.domain_size(),
            right: r.domain(),
        });
    }
    let needed = composition_count(op.arity(), r.len());
    let l = match op.arity().to_u64() {
        Some(l) if needed <= BigUint::from(budget) => l,
        _ => {
            return Err(Error::BudgetExceeded {
                needed: needed.to_string(),
                budget,
            })
        }
    };
    if r.is_empty() {
        return Ok(Verdict {
            mode: Mode::Exact,
            examined: BigUint::zero(),
            violation: None,
            seed: None,
        });
    }
    let scan = Scan::new(op, r, l);
    let units = scan.work_units();
    let hit = exec.find_first(units.len(), |u| scan.run_unit(&units[u]).transpose());
    match hit.transpose()? {
        None => Ok(Verdict {
            mode: Mode::Exact,
            examined: needed,
            violation: None,
            seed: None,
        }),
        Some(counts) => {
            let examined = lex_rank(&counts, l) + 1u32;
            let counts: Vec<BigUint> = counts.into_iter().map(BigUint::from).collect();
            Ok(Verdict {
                mode: Mode::Exact,
                examined,
                violation: Some(ColumnMultiset::from_relation_counts(r, &counts)?),
                seed: None,
            })
        }
    }
}

/// Number of weak compositions with the same total and length that precede
/// `counts` lexicographically.
fn lex_rank(counts: &[u64], total: u64) -> BigUint {
    let parts = counts.len();
    let mut rank = BigUint::zero();
    let mut remaining = total;
    for (j, &c) in counts.iter().enumerate().take(parts.saturating_sub(1)) {
        for v in 0..c {
            rank += composition_count(&BigUint::from(remaining - v), parts - j - 1);
        }
        remaining -= c;
    }
    rank
}

struct Scan<'a> {
    op: &'a dyn SymmetricOp,
    r: &'a Relation,
    l: u64,
    d: usize,
    prefix_len: usize,
}

impl<'a> Scan<'a> {
    fn new(op: &'a dyn SymmetricOp, r: &'a Relation, l: u64) -> Self {
        Scan {
            op,
            r,
            l,
            d: r.domain(),
            prefix_len: r.len().saturating_sub(1).min(2),
        }
    }

    /// Fixed counts for the first `prefix_len` tuples, in lexicographic order.
    fn work_units(&self) -> Vec<Vec<u64>> {
        let mut units = vec![vec![]];
        for _ in 0..self.prefix_len {
            units = units
                .into_iter()
                .flat_map(|p: Vec<u64>| {
                    let used: u64 = p.iter().sum();
                    (0..=self.l - used).map(move |c| {
                        let mut q = p.clone();
                        q.push(c);
                        q
                    })
                })
                .collect();
        }
        units
    }

    fn run_unit(&self, prefix: &[u64]) -> Result<Option<Vec<u64>>> {
        let rows = self.r.arity();
        let mut tally = vec![0u64; rows * self.d];
        let mut counts = vec![0u64; self.r.len()];
        let mut used = 0;
        for (j, &c) in prefix.iter().enumerate() {
            self.bump(&mut tally, j, c as i64);
            counts[j] = c;
            used += c;
        }
        let mut image = vec![Elem(0); rows];
        if self.descend(prefix.len(), self.l - used, &mut tally, &mut counts, &mut image)? {
            Ok(Some(counts))
        } else {
            Ok(None)
        }
    }

    fn bump(&self, tally: &mut [u64], j: usize, by: i64) {
        for (i, e) in self.r.tuples()[j].iter().enumerate() {
            let slot = &mut tally[i * self.d + e.index()];
            *slot = (*slot as i64 + by) as u64;
        }
    }

    /// Returns `true` (leaving `counts` at the violating composition) when a
    /// violation is found below this node.
    fn descend(
        &self,
        j: usize,
        remaining: u64,
        tally: &mut [u64],
        counts: &mut [u64],
        image: &mut [Elem],
    ) -> Result<bool> {
        let last = self.r.len() - 1;
        if j == last {
            self.bump(tally, j, remaining as i64);
            counts[j] = remaining;
            for (i, slot) in image.iter_mut().enumerate() {
                *slot = self.op.eval_u64(&tally[i * self.d..(i + 1) * self.d])?;
            }
            self.bump(tally, j, -(remaining as i64));
            return Ok(!self.r.contains(image));
        }
        for c in 0..=remaining {
            counts[j] = c;
            if self.descend(j + 1, remaining - c, tally, counts, image)? {
                return Ok(true);
            }
            self.bump(tally, j, 1);
        }
        self.bump(tally, j, -((remaining + 1) as i64));
        counts[j] = 0;
        Ok(false)
    }
}

/// Checks `trials` uniformly random column multisets. A violation is
/// definitive; `ok` is only evidence.
pub fn check_compat_sampled(
    op: &dyn SymmetricOp,
    r: &Relation,
    trials: u64,
    seed: u64,
    exec: Exec,
) -> Result<Verdict> {
    if op.domain_size() != r.domain() {
        return Err(Error::DomainMismatch {
            left: op.domain_size(),
            right: r.domain(),
        });
    }
    if r.is_empty() || trials == 0 {
        return Ok(Verdict {
            mode: Mode::Sampled,
            examined: BigUint::zero(),
            violation: None,
            seed: Some(seed),
        });
    }
    let l = op.arity().clone();
    let hit = sampled_search(exec, trials, seed, |rng| {
        let counts = sample_composition(rng, &l, r.len());
        let cm = match ColumnMultiset::from_relation_counts(r, &counts) {
            Ok(cm) => cm,
            Err(e) => return Some(Err(e)),
        };
        match cm.image(op) {
            Ok(img) if r.contains(&img) => None,
            Ok(_) => Some(Ok(cm)),
            Err(e) => Some(Err(e)),
        }
    });
    match hit {
        None => Ok(Verdict {
            mode: Mode::Sampled,
            examined: BigUint::from(trials),
            violation: None,
            seed: Some(seed),
        }),
        Some((i, cm)) => Ok(Verdict {
            mode: Mode::Sampled,
            examined: BigUint::from(i + 1),
            violation: Some(cm?),
            seed: Some(seed),
        }),
    }
}

/// Binary specialisation: columns are pairs `(u_i, w_i)` and the image is
/// `(op(u), op(w))`. Falls back to sampling with `fallback = (trials, seed)`
/// when exact enumeration exceeds the budget.
pub fn check_compat_binary(
    op: &dyn SymmetricOp,
    r: &Relation,
    budget: u64,
    fallback: Option<(u64, u64)>,
    exec: Exec,
) -> Result<Verdict> {
    if r.arity() != 2 {
        return Err(Error::Arity {
            expected: 2,
            found: r.arity(),
        });
    }
    match check_compat_symmetric(op, r, budget, exec) {
        Err(Error::BudgetExceeded { .. }) if fallback.is_some() => {
            let (trials, seed) = fallback.unwrap_or_default();
            check_compat_sampled(op, r, trials, seed, exec)
        }
        other => other,
    }
}
