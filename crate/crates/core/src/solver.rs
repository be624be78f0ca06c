//! Existence of near-unanimity polymorphisms of a fixed arity, decided by
//! solving the indicator problem: one variable per input tuple of the unknown
//! operation, one constraint per matrix of relation tuples.

use std::collections::{HashSet, VecDeque};

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::exec::{enumeration_budget, Exec};
use crate::relation::{decode_index, is_compatible_table, Elem, OpTable, Tuple};
use crate::structures::{FamilySpec, Structure};

/// Default cap on the number of variables (`|domain|^k`).
pub const VARIABLE_CAP: usize = 20_000;
/// Cap on `|R|^k` summed over the relations when generating constraints.
pub const MATRIX_CAP: u128 = 20_000_000;
/// Default search node limit.
pub const NODE_LIMIT: u64 = 5_000_000;

/// Which values of the unknown operation are fixed in advance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Pinning {
    /// `t(b,a,...,a) = ... = t(a,...,a,b) = a` for all `a, b`.
    NearUnanimity,
    /// Only the listed inputs are fixed.
    Rows(Vec<(Tuple, Elem)>),
}

impl Pinning {
    /// Every permutation of `(low, high, ..., high)` mapped to `high`.
    pub fn one_low(k: usize, low: Elem, high: Elem) -> Pinning {
        Pinning::Rows(
            (0..k)
                .map(|p| {
                    let mut t = vec![high; k];
                    t[p] = low;
                    (t, high)
                })
                .collect(),
        )
    }

    /// The weak pinning for a family structure: `t(a,n,...,n)` and its
    /// permutations equal `n` (with `a1` standing in for `a` on family B).
    pub fn top_rows(spec: FamilySpec, k: usize) -> Pinning {
        match spec {
            FamilySpec::A { n, m } => {
                let s = crate::structures::SpecA { n, m };
                Pinning::one_low(k, s.a(), s.num(n))
            }
            FamilySpec::B { n } => {
                let s = crate::structures::SpecB { n };
                Pinning::one_low(k, s.a1(), s.num(n))
            }
        }
    }

    pub fn describe(&self) -> &'static str {
        match self {
            Pinning::NearUnanimity => "nu",
            Pinning::Rows(_) => "rows",
        }
    }
}

/// Value forced on `t` by the near-unanimity identities, if any.
fn nu_value(t: &[Elem]) -> Option<Elem> {
    let first = t[0];
    let diff = t.iter().filter(|&&e| e != first).count();
    if diff == 0 {
        return Some(first);
    }
    if t.len() >= 3 && diff == t.len() - 1 {
        // only t[0] deviates
        return t[1..].iter().all(|&e| e == t[1]).then_some(t[1]);
    }
    (t.len() >= 3 && diff == 1).then_some(first)
}

#[derive(Clone, Debug)]
struct Constraint {
    rel: usize,
    vars: Vec<u32>,
    /// Positions holding the same variable.
    eq_pairs: Vec<(usize, usize)>,
}

/// The indicator problem for one structure and arity.
#[derive(Clone, Debug)]
pub struct IndicatorInstance {
    k: usize,
    d: usize,
    domains: Vec<u32>,
    relations: Vec<Vec<Vec<u8>>>,
    constraints: Vec<Constraint>,
    watches: Vec<Vec<u32>>,
    pub nu_pinned: usize,
    pub const_pinned: usize,
    pub row_pinned: usize,
}

impl IndicatorInstance {
    pub fn variables(&self) -> usize {
        self.domains.len()
    }

    pub fn arity(&self) -> usize {
        self.k
    }

    pub fn constraint_count(&self) -> usize {
        self.constraints.len()
    }

    /// Current domain of the variable for input `t`, as a bitmask.
    pub fn domain_of(&self, t: &[Elem]) -> u32 {
        let idx = t.iter().fold(0, |acc, e| acc * self.d + e.index());
        self.domains[idx]
    }
}

/// Builds the indicator instance. Unary relations restrict variable domains;
/// every relation of arity two or more contributes one constraint per distinct
/// row pattern of a matrix whose columns lie in it.
pub fn build_indicator(
    s: &Structure,
    k: usize,
    pinning: &Pinning,
    cap: usize,
) -> Result<IndicatorInstance> {
    let d = s.domain_size();
    if d > 32 {
        return Err(Error::OutOfRange { index: d, limit: 32 });
    }
    if k == 0 {
        return Err(Error::Usage("arity must be positive".into()));
    }
    if matches!(pinning, Pinning::NearUnanimity) && k < 3 {
        return Err(Error::Usage(format!("near-unanimity needs arity at least 3, got {k}")));
    }
    let vars = u32::try_from(k)
        .ok()
        .and_then(|k| d.checked_pow(k))
        .filter(|&v| v <= cap)
        .ok_or_else(|| Error::BudgetExceeded {
            needed: format!("{d}^{k} variables"),
            budget: cap as u64,
        })?;

    let matrices: u128 = s
        .iter()
        .filter(|(_, r)| r.arity() >= 2)
        .map(|(_, r)| (r.len() as u128).saturating_pow(k as u32))
        .fold(0, u128::saturating_add);
    if matrices > MATRIX_CAP {
        return Err(Error::BudgetExceeded {
            needed: format!("{matrices} matrices"),
            budget: MATRIX_CAP as u64,
        });
    }

    let full = if d == 32 { u32::MAX } else { (1u32 << d) - 1 };
    let mut domains = vec![full; vars];
    let unary: Vec<u32> = s
        .iter()
        .filter(|(_, r)| r.arity() == 1)
        .map(|(_, r)| r.unary_mask())
        .collect::<Result<_>>()?;
    for (idx, dom) in domains.iter_mut().enumerate() {
        let coords = decode_index(idx, k, d)
            .iter()
            .fold(0u32, |acc, e| acc | 1 << e.index());
        for &u in &unary {
            if coords & !u == 0 {
                *dom &= u;
            }
        }
    }

    let (mut nu_pinned, mut const_pinned, mut row_pinned) = (0, 0, 0);
    match pinning {
        Pinning::NearUnanimity => {
            for (idx, dom) in domains.iter_mut().enumerate() {
                let t = decode_index(idx, k, d);
                if let Some(v) = nu_value(&t) {
                    *dom &= 1 << v.index();
                    if t.iter().all(|&e| e == t[0]) {
                        const_pinned += 1;
                    } else {
                        nu_pinned += 1;
                    }
                }
            }
        }
        Pinning::Rows(rows) => {
            for (t, v) in rows {
                if t.len() != k {
                    return Err(Error::Arity {
                        expected: k,
                        found: t.len(),
                    });
                }
                if let Some(e) = t.iter().chain([v]).find(|e| e.index() >= d) {
                    return Err(Error::OutOfRange {
                        index: e.index(),
                        limit: d,
                    });
                }
                let idx = t.iter().fold(0, |acc, e| acc * d + e.index());
                domains[idx] &= 1 << v.index();
                row_pinned += 1;
            }
        }
    }

    let mut relations = Vec::new();
    let mut constraints = Vec::new();
    for (_, r) in s.iter().filter(|(_, r)| r.arity() >= 2) {
        let rel = relations.len();
        let tuples: Vec<Vec<u8>> = r
            .iter()
            .map(|t| t.iter().map(|e| e.0).collect())
            .collect();
        let mut seen: HashSet<Vec<u32>> = HashSet::new();
        if !r.is_empty() {
            // odometer over k columns, each a tuple of r
            let mut pick = vec![0usize; k];
            loop {
                let row_vars: Vec<u32> = (0..r.arity())
                    .map(|p| pick.iter().fold(0, |acc, &c| acc * d as u32 + tuples[c][p] as u32))
                    .collect();
                seen.insert(row_vars);
                let mut j = k;
                loop {
                    if j == 0 {
                        break;
                    }
                    j -= 1;
                    pick[j] += 1;
                    if pick[j] < tuples.len() {
                        break;
                    }
                    pick[j] = 0;
                }
                if pick.iter().all(|&c| c == 0) {
                    break;
                }
            }
        }
        let mut vars: Vec<Vec<u32>> = seen.into_iter().collect();
        vars.sort();
        for v in vars {
            let mut eq_pairs = Vec::new();
            for p in 0..v.len() {
                for q in p + 1..v.len() {
                    if v[p] == v[q] {
                        eq_pairs.push((p, q));
                    }
                }
            }
            constraints.push(Constraint { rel, vars: v, eq_pairs });
        }
        relations.push(tuples);
    }
    let mut watches = vec![Vec::new(); vars];
    for (ci, c) in constraints.iter().enumerate() {
        let mut vs = c.vars.clone();
        vs.sort_unstable();
        vs.dedup();
        for v in vs {
            watches[v as usize].push(ci as u32);
        }
    }
    Ok(IndicatorInstance {
        k,
        d,
        domains,
        relations,
        constraints,
        watches,
        nu_pinned,
        const_pinned,
        row_pinned,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Sat(OpTable),
    Unsat,
    Unknown,
}

impl Outcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::Sat(_) => "sat",
            Outcome::Unsat => "unsat",
            Outcome::Unknown => "unknown",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solution {
    pub outcome: Outcome,
    pub nodes: u64,
}

struct Search<'a> {
    inst: &'a IndicatorInstance,
    nodes: u64,
    limit: u64,
}

impl Search<'_> {
    /// Enforces generalized arc consistency; `false` on a wipe-out.
    fn propagate(&self, doms: &mut [u32], mut queue: VecDeque<u32>) -> bool {
        let inst = self.inst;
        let mut queued = vec![false; inst.constraints.len()];
        for &c in &queue {
            queued[c as usize] = true;
        }
        let mut support = Vec::new();
        while let Some(ci) = queue.pop_front() {
            queued[ci as usize] = false;
            let c = &inst.constraints[ci as usize];
            support.clear();
            support.resize(c.vars.len(), 0u32);
            'tuples: for t in &inst.relations[c.rel] {
                for (p, &v) in c.vars.iter().enumerate() {
                    if doms[v as usize] & (1 << t[p]) == 0 {
                        continue 'tuples;
                    }
                }
                if c.eq_pairs.iter().any(|&(p, q)| t[p] != t[q]) {
                    continue;
                }
                for (p, s) in support.iter_mut().enumerate() {
                    *s |= 1 << t[p];
                }
            }
            for (p, &v) in c.vars.iter().enumerate() {
                let v = v as usize;
                let narrowed = doms[v] & support[p];
                if narrowed != doms[v] {
                    if narrowed == 0 {
                        return false;
                    }
                    doms[v] = narrowed;
                    for &w in &inst.watches[v] {
                        if w != ci && !queued[w as usize] {
                            queued[w as usize] = true;
                            queue.push_back(w);
                        }
                    }
                }
            }
        }
        true
    }

    /// `Some(true)` solved (doms fully assigned), `Some(false)` refuted,
    /// `None` node limit hit.
    fn search(&mut self, doms: &mut Vec<u32>) -> Option<bool> {
        let pick = doms
            .iter()
            .enumerate()
            .filter(|(_, d)| d.count_ones() > 1)
            .min_by_key(|(i, d)| (d.count_ones(), *i))
            .map(|(i, _)| i);
        let Some(var) = pick else {
            return Some(true);
        };
        let mut values = doms[var];
        while values != 0 {
            let v = values.trailing_zeros();
            values &= values - 1;
            self.nodes += 1;
            if self.nodes > self.limit {
                return None;
            }
            let mut next = doms.clone();
            next[var] = 1 << v;
            let queue = self.inst.watches[var].iter().copied().collect();
            if self.propagate(&mut next, queue) {
                match self.search(&mut next) {
                    Some(true) => {
                        *doms = next;
                        return Some(true);
                    }
                    Some(false) => {}
                    None => return None,
                }
            }
        }
        Some(false)
    }
}

/// Complete backtracking search with GAC at every node. Hitting the node limit
/// yields [`Outcome::Unknown`], never `Unsat`.
pub fn solve(inst: &IndicatorInstance, node_limit: u64) -> Result<Solution> {
    let mut search = Search {
        inst,
        nodes: 0,
        limit: node_limit,
    };
    let mut doms = inst.domains.clone();
    if doms.contains(&0) {
        return Ok(Solution {
            outcome: Outcome::Unsat,
            nodes: 0,
        });
    }
    let all = (0..inst.constraints.len() as u32).collect();
    if !search.propagate(&mut doms, all) {
        return Ok(Solution {
            outcome: Outcome::Unsat,
            nodes: 0,
        });
    }
    let outcome = match search.search(&mut doms) {
        Some(true) => {
            let values = doms.iter().map(|d| Elem(d.trailing_zeros() as u8)).collect();
            Outcome::Sat(OpTable::new(inst.k, inst.d, values)?)
        }
        Some(false) => Outcome::Unsat,
        None => Outcome::Unknown,
    };
    Ok(Solution {
        outcome,
        nodes: search.nodes,
    })
}

/// Result of [`decide_nu`], ready for JSON output.
#[derive(Clone, Debug)]
pub struct DecideReport {
    pub structure: String,
    pub arity: usize,
    pub pinning: &'static str,
    pub variables: usize,
    pub constraints: usize,
    pub solution: Solution,
}

impl DecideReport {
    pub fn to_json(&self, s: &Structure) -> Value {
        let mut v = json!({
            "structure": self.structure,
            "arity": self.arity,
            "pinning": self.pinning,
            "variables": self.variables,
            "constraints": self.constraints,
            "verdict": self.solution.outcome.as_str(),
            "nodes": self.solution.nodes,
        });
        if let Outcome::Sat(t) = &self.solution.outcome {
            v["witness"] = json!({
                "arity": t.arity(),
                "values": t.values().iter().map(|&e| s.domain.name(e)).collect::<Vec<_>>(),
            });
        }
        v
    }
}

/// Short label such as `A(1,2)` for family structures.
pub fn structure_label(s: &Structure) -> String {
    match s.spec {
        Some(FamilySpec::A { n, m }) => format!("A({n},{m})"),
        Some(FamilySpec::B { n }) => format!("B({n})"),
        None => format!("custom({} elements)", s.domain_size()),
    }
}

/// Builds and solves the indicator problem. With `fixed_rows` the
/// near-unanimity pinning is replaced by the given rows.
pub fn decide_nu(
    s: &Structure,
    k: usize,
    fixed_rows: Option<Pinning>,
    node_limit: u64,
) -> Result<DecideReport> {
    let pinning = fixed_rows.unwrap_or(Pinning::NearUnanimity);
    let inst = build_indicator(s, k, &pinning, VARIABLE_CAP)?;
    let solution = solve(&inst, node_limit)?;
    Ok(DecideReport {
        structure: structure_label(s),
        arity: k,
        pinning: pinning.describe(),
        variables: inst.variables(),
        constraints: inst.constraint_count(),
        solution,
    })
}

/// Re-checks a table from scratch: the pinned identities, then compatibility
/// with every relation by explicit matrix enumeration.
pub fn verify_witness_table(t: &OpTable, s: &Structure, pinning: &Pinning) -> Result<bool> {
    let (k, d) = (t.arity(), t.domain());
    if d != s.domain_size() {
        return Err(Error::DomainMismatch {
            left: d,
            right: s.domain_size(),
        });
    }
    let identities_hold = match pinning {
        Pinning::NearUnanimity => (0..t.values().len()).all(|idx| {
            let args = decode_index(idx, k, d);
            nu_value(&args).is_none_or(|v| t.apply(&args) == v)
        }),
        Pinning::Rows(rows) => rows.iter().all(|(args, v)| t.apply(args) == *v),
    };
    if !identities_hold {
        return Ok(false);
    }
    let budget = enumeration_budget();
    for (_, r) in s.iter() {
        if !is_compatible_table(t, r, budget, Exec::default())?.is_compatible() {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relation::{Domain, Relation};
    use crate::structures::{gen_structure_a, gen_structure_b, NamedRelation, SpecA, SpecB};
    use crate::witness::{expand_to_table, Witness};

    fn a(n: usize, m: usize) -> Structure {
        gen_structure_a(SpecA::new(n, m).unwrap())
    }

    #[test]
    fn nu_values() {
        let e = |v: &[u8]| v.iter().map(|&x| Elem(x)).collect::<Vec<_>>();
        assert_eq!(nu_value(&e(&[1, 0, 0])), Some(Elem(0)));
        assert_eq!(nu_value(&e(&[0, 1, 0])), Some(Elem(0)));
        assert_eq!(nu_value(&e(&[0, 0, 2])), Some(Elem(0)));
        assert_eq!(nu_value(&e(&[2, 2, 2])), Some(Elem(2)));
        assert_eq!(nu_value(&e(&[0, 1, 2])), None);
        assert_eq!(nu_value(&e(&[0, 0, 1, 1])), None);
    }

    #[test]
    fn instance_sizes() {
        let inst = build_indicator(&a(0, 3), 3, &Pinning::NearUnanimity, VARIABLE_CAP).unwrap();
        assert_eq!(inst.variables(), 8);
        assert_eq!((inst.nu_pinned, inst.const_pinned), (6, 2));
        assert_eq!(build_indicator(&a(1, 2), 4, &Pinning::NearUnanimity, VARIABLE_CAP).unwrap().variables(), 81);
        let b1 = gen_structure_b(SpecB::new(1).unwrap());
        assert_eq!(build_indicator(&b1, 4, &Pinning::NearUnanimity, VARIABLE_CAP).unwrap().variables(), 256);
        assert!(matches!(
            build_indicator(&b1, 8, &Pinning::NearUnanimity, VARIABLE_CAP),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn conservative_domains() {
        let inst = build_indicator(&a(1, 2), 3, &Pinning::Rows(vec![]), VARIABLE_CAP).unwrap();
        // input (a, 1, 1) may only map into {a, 1}
        assert_eq!(inst.domain_of(&[Elem(0), Elem(2), Elem(2)]), 0b101);
    }

    #[test]
    fn a03_threshold() {
        let s = a(0, 3);
        let r3 = decide_nu(&s, 3, None, NODE_LIMIT).unwrap();
        assert_eq!(r3.solution.outcome, Outcome::Unsat);
        let r4 = decide_nu(&s, 4, None, NODE_LIMIT).unwrap();
        let Outcome::Sat(t) = r4.solution.outcome else {
            panic!("expected a witness at arity 4");
        };
        assert!(verify_witness_table(&t, &s, &Pinning::NearUnanimity).unwrap());
    }

    #[test]
    fn witness_expansion_verifies() {
        let t = expand_to_table(&Witness::f_a(0, 3).unwrap()).unwrap();
        let s = a(0, 3);
        assert!(verify_witness_table(&t, &s, &Pinning::NearUnanimity).unwrap());
        let mut broken = t.clone();
        broken.set(&[Elem(1), Elem(0), Elem(0), Elem(0)], Elem(1));
        assert!(!verify_witness_table(&broken, &s, &Pinning::NearUnanimity).unwrap());
    }

    #[test]
    fn empty_domain_is_unsat_without_search() {
        let dom = Domain::numeric(2).unwrap();
        let s = Structure::new(dom, vec![]).unwrap();
        let pin = Pinning::Rows(vec![
            (vec![Elem(0), Elem(1), Elem(1)], Elem(0)),
            (vec![Elem(0), Elem(1), Elem(1)], Elem(1)),
        ]);
        let inst = build_indicator(&s, 3, &pin, VARIABLE_CAP).unwrap();
        let sol = solve(&inst, 10).unwrap();
        assert_eq!(sol, Solution { outcome: Outcome::Unsat, nodes: 0 });
    }

    #[test]
    fn node_limit_gives_unknown() {
        // B(1) at arity 5 needs a few hundred nodes
        let s = gen_structure_b(SpecB::new(1).unwrap());
        let r = decide_nu(&s, 5, None, 10).unwrap();
        assert_eq!(r.solution.outcome, Outcome::Unknown);
        assert_eq!(r.to_json(&s)["verdict"], "unknown");
    }

    #[test]
    fn majority_on_boolean_order() {
        let dom = Domain::numeric(2).unwrap();
        let le = Relation::new(2, 2, vec![vec![Elem(0), Elem(0)], vec![Elem(0), Elem(1)], vec![Elem(1), Elem(1)]]).unwrap();
        let s = Structure::new(dom, vec![NamedRelation { name: "le".into(), relation: le }]).unwrap();
        let r = decide_nu(&s, 3, None, NODE_LIMIT).unwrap();
        assert_eq!(r.to_json(&s)["verdict"], "sat");
        let Outcome::Sat(t) = r.solution.outcome else { panic!() };
        assert!(verify_witness_table(&t, &s, &Pinning::NearUnanimity).unwrap());
    }
}
