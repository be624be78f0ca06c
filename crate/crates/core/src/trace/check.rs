//! Independent re-check of a trace certificate against a structure. Nothing
//! here calls the builders: vectors come from a closed form of their own,
//! memberships and congruence blocks from the structure's named relations.

use std::cell::RefCell;
use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::{One, Pow, Zero};

use super::{Cmp, Identity, MatrixInstance, StepCertificate, StepKind, TraceCertificate};
use crate::relation::{blocks, Elem, Relation};
use crate::structures::{FamilySpec, Structure};

/// Outcome of [`check_certificate`]: valid exactly when no fault was found.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Verification {
    pub faults: Vec<String>,
}

impl Verification {
    pub fn is_valid(&self) -> bool {
        self.faults.is_empty()
    }
}

type Blocks = Vec<Vec<String>>;

/// Parameters the checker derives from the certificate's family tag, plus
/// per-call caches of facts that many steps share.
struct Frame<'a> {
    s: &'a Structure,
    n: usize,
    /// Base of the exponent schedule.
    m: usize,
    is_b: bool,
    arity: BigUint,
    by_name: HashMap<&'a str, &'a Relation>,
    vectors: Vec<Vec<BigUint>>,
    /// Blocks of the chain congruence, by pivot.
    chains: RefCell<HashMap<usize, Result<Blocks, String>>>,
}

fn power(m: usize, e: u64) -> BigUint {
    Pow::pow(BigUint::from(m), e)
}

impl Frame<'_> {
    /// Index of the element named `r` (numbered elements follow the bottom ones).
    fn num(&self, r: usize) -> Elem {
        Elem((r + if self.is_b { 2 } else { 1 }) as u8)
    }

    fn bottoms(&self) -> Vec<Elem> {
        if self.is_b {
            vec![Elem(0), Elem(1)]
        } else {
            vec![Elem(0)]
        }
    }

    fn name(&self, e: Elem) -> String {
        self.s.domain.name(e).to_string()
    }

    /// Occurrences of `r` in vector `k`: zero when bit `r` of `k` is set,
    /// otherwise `m^(e + 2^(r+1)) - m^(e + 2^r)` with `e` the value of `k`
    /// after clearing bits `0..=r`.
    fn numbered(&self, k: u64, r: usize) -> BigUint {
        if k & (1 << r) != 0 {
            return BigUint::zero();
        }
        let e = k & !((2u64 << r) - 1);
        power(self.m, e + (2u64 << r)) - power(self.m, e + (1u64 << r))
    }

    fn vector(&self, k: u64) -> Vec<BigUint> {
        self.vectors[k as usize].clone()
    }

    fn build_vector(&self, k: u64) -> Vec<BigUint> {
        let mut v = vec![BigUint::zero(); self.s.domain_size()];
        if self.is_b {
            v[0] = BigUint::one() << k;
            v[1] = BigUint::one() << k;
        } else {
            v[0] = power(self.m, k + 1);
        }
        for r in 0..self.n {
            v[self.num(r).index()] = self.numbered(k, r);
        }
        v
    }

    /// Combined count of the bottom elements.
    fn bottom_count(&self, v: &[BigUint]) -> BigUint {
        self.bottoms().iter().map(|e| &v[e.index()]).sum()
    }

    fn relation(&self, name: &str) -> Result<&Relation, String> {
        self.by_name
            .get(name)
            .copied()
            .ok_or_else(|| format!("structure has no relation `{name}`"))
    }

    fn elem(&self, name: &str) -> Result<Elem, String> {
        self.s.domain.lookup(name).map_err(|e| e.to_string())
    }

    fn set_of(&self, r: &Relation) -> Result<Vec<Elem>, String> {
        if r.arity() != 1 {
            return Err("expected a unary relation".into());
        }
        Ok(r.iter().map(|t| t[0]).collect())
    }
}

/// Re-verifies every recorded fact. Returns all faults found rather than
/// stopping at the first.
pub fn check_certificate(cert: &TraceCertificate, s: &Structure) -> Verification {
    let mut faults = Vec::new();
    let frame = match frame_for(cert, s) {
        Ok(f) => f,
        Err(e) => {
            return Verification { faults: vec![e] };
        }
    };
    check_schedule(&frame, cert, &mut faults);
    let expected_steps = 1u64 << frame.n;
    if cert.steps.len() as u64 != expected_steps {
        faults.push(format!("{} steps recorded, expected {expected_steps}", cert.steps.len()));
    }
    for (pos, step) in cert.steps.iter().enumerate() {
        if let Err(e) = check_step(&frame, pos as u64, step) {
            faults.push(format!("step k={pos}: {e}"));
        }
    }
    if let Err(e) = check_terminal(&frame, cert) {
        faults.push(format!("terminal: {e}"));
    }
    Verification { faults }
}

fn frame_for<'a>(cert: &TraceCertificate, s: &'a Structure) -> Result<Frame<'a>, String> {
    if s.spec != Some(cert.spec) {
        return Err(format!(
            "certificate is for {:?}, structure is {:?}",
            cert.spec, s.spec
        ));
    }
    let (n, m, is_b) = match cert.spec {
        FamilySpec::A { n, m } => (n, m, false),
        FamilySpec::B { n } => (n, 2, true),
    };
    if n > super::MAX_TRACE_N || m < 2 || (!is_b && n == 0 && m == 2) {
        return Err(format!("no lower-bound trace for parameters n={n}, m={m}"));
    }
    let expected_domain = n + if is_b { 3 } else { 2 };
    if s.domain_size() != expected_domain {
        return Err(format!("domain has {} elements, expected {expected_domain}", s.domain_size()));
    }
    let arity = power(m, 1u64 << n);
    if cert.arity != arity {
        return Err(format!("arity {} recorded, expected {arity}", cert.arity));
    }
    let mut f = Frame {
        s,
        n,
        m,
        is_b,
        arity,
        by_name: s.iter().collect(),
        vectors: Vec::new(),
        chains: RefCell::default(),
    };
    f.vectors = (0..1u64 << n).map(|k| f.build_vector(k)).collect();
    Ok(f)
}

fn check_schedule(f: &Frame, cert: &TraceCertificate, faults: &mut Vec<String>) {
    let len = 1u64 << f.n;
    if cert.schedule.len() as u64 != len {
        faults.push(format!("schedule has {} vectors, expected {len}", cert.schedule.len()));
    }
    for (pos, rec) in cert.schedule.iter().enumerate() {
        let k = pos as u64;
        if rec.k != k {
            faults.push(format!("schedule entry {pos} labelled k={}", rec.k));
        }
        let bits = if f.n == 0 { String::new() } else { format!("{k:0width$b}", width = f.n) };
        if rec.bits != bits {
            faults.push(format!("schedule k={k}: bits `{}`, expected `{bits}`", rec.bits));
        }
        let v = f.vector(k);
        let total: BigUint = v.iter().sum();
        if total != f.arity {
            faults.push(format!("schedule k={k}: total {total} differs from the arity"));
        }
        if rec.counts.len() != v.len() {
            faults.push(format!("schedule k={k}: {} counts listed", rec.counts.len()));
            continue;
        }
        for (idx, (c, want)) in rec.counts.iter().zip(&v).enumerate() {
            let name = f.name(Elem(idx as u8));
            if c.elem != name || &c.count != want {
                faults.push(format!(
                    "schedule k={k}: entry {}:{} expected {name}:{want}",
                    c.elem, c.count
                ));
            }
        }
    }
}

fn check_step(f: &Frame, k: u64, step: &StepCertificate) -> Result<(), String> {
    if step.k != k {
        return Err(format!("labelled k={}", step.k));
    }
    let (kind, pivot) = if k == 0 {
        (StepKind::Base, f.n)
    } else {
        (StepKind::Induction, (k - 1).trailing_ones() as usize)
    };
    if step.kind != kind {
        return Err(format!("kind {:?}, expected {kind:?}", step.kind));
    }
    if step.pivot != pivot {
        return Err(format!("pivot {}, expected {pivot}", step.pivot));
    }
    let hyp = f.num(pivot);
    let target = f.vector(k);
    let hyp_rows: Vec<BigUint> = match kind {
        StepKind::Base => {
            // near-unanimous input: one bottom element, everything else the top
            let mut v = vec![BigUint::zero(); f.s.domain_size()];
            v[0] = BigUint::one();
            v[hyp.index()] = &f.arity - 1u32;
            v
        }
        StepKind::Induction => f.vector(k - 1),
    };
    let forbidden: Vec<Elem> = f.bottoms();
    if step.instances.len() != forbidden.len() {
        return Err(format!("{} matrix instances, expected {}", step.instances.len(), forbidden.len()));
    }
    let mut side = Vec::new();
    for (j, (inst, &bad)) in step.instances.iter().zip(&forbidden).enumerate() {
        let expected_name = if f.is_b {
            format!("R{pivot}_{}", j + 1)
        } else {
            format!("S{pivot}")
        };
        let rows = check_instance(f, inst, &expected_name, bad, hyp)
            .map_err(|e| format!("instance {expected_name}: {e}"))?;
        if rows[0] != target {
            return Err(format!("instance {expected_name}: conclusion row differs from vector {k}"));
        }
        if let Some(p) = rows[1..].iter().position(|r| *r != hyp_rows) {
            return Err(format!("instance {expected_name}: hypothesis row {} is not the expected input", p + 1));
        }
        side.push((f.bottom_count(&rows[1]), rows[1][hyp.index()].clone()));
    }
    let expected = expected_identities(f, k, pivot, &target, &side);
    check_identities(&step.identities, &expected)?;
    match (kind, &step.case_split) {
        (StepKind::Base, None) => Ok(()),
        (StepKind::Base, Some(_)) => Err("base step carries a case split".into()),
        (StepKind::Induction, None) => Err("missing case split".into()),
        (StepKind::Induction, Some(cs)) => check_case_split(f, k, pivot, cs),
    }
}

/// Validates one instance and returns its row count vectors.
fn check_instance(
    f: &Frame,
    inst: &MatrixInstance,
    expected_name: &str,
    bad: Elem,
    hyp: Elem,
) -> Result<Vec<Vec<BigUint>>, String> {
    if inst.relation != expected_name {
        return Err(format!("names relation `{}`", inst.relation));
    }
    let r = f.relation(expected_name)?;
    if r.arity() < 2 {
        return Err("relation is not at least binary".into());
    }
    if f.elem(&inst.forbidden)? != bad {
        return Err(format!("forbidden value `{}`", inst.forbidden));
    }
    if f.elem(&inst.hypothesis_value)? != hyp {
        return Err(format!("hypothesis value `{}`", inst.hypothesis_value));
    }
    let mut excluded = vec![hyp; r.arity()];
    excluded[0] = bad;
    let recorded: Vec<Elem> = inst
        .excluded
        .iter()
        .map(|e| f.elem(e))
        .collect::<Result<_, _>>()?;
    if recorded != excluded {
        return Err(format!("excluded tuple {:?}", inst.excluded));
    }
    if r.contains(&excluded) {
        return Err("the excluded tuple belongs to the relation".into());
    }
    if inst.columns.is_empty() {
        return Err("no columns".into());
    }
    let mut rows = vec![vec![BigUint::zero(); f.s.domain_size()]; r.arity()];
    let mut prev: Option<Vec<Elem>> = None;
    for col in &inst.columns {
        let t: Vec<Elem> = col.tuple.iter().map(|e| f.elem(e)).collect::<Result<_, _>>()?;
        if t.len() != r.arity() {
            return Err(format!("column {:?} has the wrong length", col.tuple));
        }
        if col.count.is_zero() {
            return Err(format!("column {:?} has count zero", col.tuple));
        }
        if !r.contains(&t) {
            return Err(format!("column {:?} is not in the relation", col.tuple));
        }
        if prev.as_ref().is_some_and(|p| *p >= t) {
            return Err(format!("column {:?} is out of order", col.tuple));
        }
        for (row, e) in rows.iter_mut().zip(&t) {
            row[e.index()] += &col.count;
        }
        prev = Some(t);
    }
    Ok(rows)
}

fn expected_identities(
    f: &Frame,
    k: u64,
    pivot: usize,
    cur: &[BigUint],
    side: &[(BigUint, BigUint)],
) -> Vec<Identity> {
    let eq = |name: String, lhs: BigUint, rhs: BigUint| Identity {
        name,
        op: Cmp::Eq,
        lhs,
        rhs,
    };
    let mut out = Vec::new();
    if k > 0 {
        let p = k - 1;
        let prev = f.vector(p);
        let at = |v: &[BigUint], r: usize| v[f.num(r).index()].clone();
        let tower = 1u64 << pivot;
        let below: BigUint = (0..pivot).map(|r| at(&prev, r)).sum();
        out.push(eq("below-pivot-zero".into(), below, BigUint::zero()));
        out.push(eq(
            "pivot-count".into(),
            at(&prev, pivot),
            power(f.m, p + 1 + tower) - power(f.m, p + 1),
        ));
        out.push(eq(
            "pivot-prefix".into(),
            f.bottom_count(&prev) + at(&prev, pivot),
            power(f.m, p + 1 + tower),
        ));
        out.push(eq("pivot-cleared".into(), at(cur, pivot), BigUint::zero()));
        for r in pivot + 1..f.n {
            out.push(eq(format!("upper-unchanged-{r}"), at(cur, r), at(&prev, r)));
        }
        let next_prefix = f.bottom_count(cur) + (0..pivot).map(|r| at(cur, r)).sum::<BigUint>();
        out.push(eq("next-prefix".into(), next_prefix, power(f.m, p + 1 + tower)));
        out.push(eq("growth".into(), f.bottom_count(cur), f.bottom_count(&prev) * f.m));
    }
    if f.is_b {
        for (j, (lhs, rhs)) in side.iter().enumerate() {
            out.push(Identity {
                name: format!("side-condition-{}", j + 1),
                op: Cmp::Le,
                lhs: lhs.clone(),
                rhs: rhs.clone(),
            });
        }
        out.push(eq("a-split".into(), cur[0].clone(), cur[1].clone()));
    }
    out.push(eq("total".into(), cur.iter().sum(), f.arity.clone()));
    out
}

fn check_identities(recorded: &[Identity], expected: &[Identity]) -> Result<(), String> {
    for (i, want) in expected.iter().enumerate() {
        let Some(got) = recorded.get(i) else {
            return Err(format!("identity {} missing", want.name));
        };
        if got != want {
            return Err(format!(
                "identity {}: recorded {} {:?} {}, expected {} {:?} {} ({})",
                want.name, got.lhs, got.op, got.rhs, want.lhs, want.op, want.rhs, got.name
            ));
        }
        if !want.holds() {
            return Err(format!("identity {} does not hold", want.name));
        }
    }
    if recorded.len() != expected.len() {
        return Err(format!("{} identities recorded, expected {}", recorded.len(), expected.len()));
    }
    Ok(())
}

fn check_case_split(f: &Frame, k: u64, pivot: usize, cs: &super::CaseSplit) -> Result<(), String> {
    // support of the previous vector lies in the named unary relation
    let unary = f.set_of(f.relation(&cs.unary)?)?;
    let mut want: Vec<Elem> = f.bottoms();
    want.extend((pivot..f.n).map(|r| f.num(r)));
    if unary != want {
        return Err(format!("unary relation `{}` is not the expected set", cs.unary));
    }
    let prev = f.vector(k - 1);
    let cur = f.vector(k);
    if let Some(idx) = (0..prev.len()).find(|&i| !prev[i].is_zero() && !unary.contains(&Elem(i as u8))) {
        return Err(format!("element {} occurs outside `{}`", f.name(Elem(idx as u8)), cs.unary));
    }

    // congruence from the composition chain of binary projections
    let names: Vec<String> = (0..=pivot)
        .map(|r| if f.is_b { format!("R{r}_1") } else { format!("S{r}") })
        .collect();
    if cs.chain != names {
        return Err(format!("chain {:?}, expected {names:?}", cs.chain));
    }
    let found = f
        .chains
        .borrow_mut()
        .entry(pivot)
        .or_insert_with(|| chain_blocks(f, &names))
        .clone()?;
    if cs.blocks != found {
        return Err(format!("recorded blocks {:?}, computed {found:?}", cs.blocks));
    }
    let mut low: Vec<Elem> = f.bottoms();
    low.extend((0..=pivot).map(|r| f.num(r)));
    let mut expected = vec![low.iter().map(|&e| f.name(e)).collect::<Vec<_>>()];
    expected.extend((pivot + 1..=f.n).map(|r| vec![f.name(f.num(r))]));
    if found != expected {
        return Err(format!("blocks {found:?} do not merge exactly the elements up to the pivot"));
    }
    // the two vectors differ only inside the merged block
    if let Some(idx) = (0..cur.len()).find(|&i| !low.contains(&Elem(i as u8)) && cur[i] != prev[i]) {
        return Err(format!("count of {} changes across the step", f.name(Elem(idx as u8))));
    }
    Ok(())
}

/// Blocks of the congruence composed from the binary projections of the
/// named relations.
fn chain_blocks(f: &Frame, names: &[String]) -> Result<Vec<Vec<String>>, String> {
    let factors = names
        .iter()
        .map(|name| {
            let r = f.relation(name)?;
            r.project(&[0, 1]).map_err(|e| e.to_string())
        })
        .collect::<Result<Vec<_>, _>>()?;
    let chain = compose_chain(&factors).map_err(|e| e.to_string())?;
    if !chain.is_equivalence().map_err(|e| e.to_string())? {
        return Err("the chain is not an equivalence".into());
    }
    Ok(blocks(&chain)
        .map_err(|e| e.to_string())?
        .iter()
        .map(|b| b.iter().map(|&e| f.name(e)).collect())
        .collect())
}

/// `R_0^-1 ... R_p^-1 R_p ... R_0`, left to right.
fn compose_chain(factors: &[Relation]) -> crate::error::Result<Relation> {
    let mut acc = Relation::identity(factors[0].domain())?;
    for r in factors {
        acc = acc.compose(&r.converse()?)?;
    }
    for r in factors.iter().rev() {
        acc = acc.compose(r)?;
    }
    Ok(acc)
}

fn check_terminal(f: &Frame, cert: &TraceCertificate) -> Result<(), String> {
    let last = (1u64 << f.n) - 1;
    if cert.terminal.k != last {
        return Err(format!("terminal vector {}, expected {last}", cert.terminal.k));
    }
    let set = f.set_of(f.relation(&cert.terminal.relation)?)?;
    if set != f.bottoms() {
        return Err(format!("`{}` is not the set of bottom elements", cert.terminal.relation));
    }
    let v = f.vector(last);
    if (0..v.len()).any(|i| !v[i].is_zero() && !set.contains(&Elem(i as u8))) {
        return Err("last vector is not supported on the bottom elements".into());
    }
    let step = cert
        .steps
        .get(last as usize)
        .ok_or_else(|| "no step for the last vector".to_string())?;
    let forbidden: Vec<Elem> = step
        .instances
        .iter()
        .map(|i| f.elem(&i.forbidden))
        .collect::<Result<_, _>>()?;
    if !set.iter().all(|e| forbidden.contains(e)) {
        return Err("the last step does not exclude every bottom element".into());
    }
    Ok(())
}
