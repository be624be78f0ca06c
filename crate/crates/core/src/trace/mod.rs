//! Certificates for the lower-bound argument: the count schedules, the
//! exponent identities behind each step, and the concrete matrices that turn
//! compatibility with `S_i` (or `R_i^j`) into the next inequality.
//!
//! A certificate records checkable facts (memberships, exact arithmetic,
//! congruence blocks). The case analysis over the values of an unknown
//! operation is not encoded.

mod check;
mod fuzz;

pub use check::{check_certificate, Verification};
pub use fuzz::{fuzz_certificate, mutate_leaf, FuzzReport};

use num_bigint::BigUint;
use num_traits::{One, Pow, Zero};
use serde::{Deserialize, Serialize};

use crate::count::CountVector;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::json::{biguint_from_str, biguint_str};
use crate::relation::{Domain, Elem};
use crate::structures::{mask_of, r_name, s_name, unary_name, FamilySpec, SpecA, SpecB};

/// Largest `n` for which full certificates are built (`2^n` steps).
pub const MAX_TRACE_N: usize = 16;

/// Index into a schedule vector: the bottom element or a numbered one.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slot {
    A,
    Num(usize),
}

fn check_k(n: usize, k: u64) -> Result<()> {
    if n > MAX_TRACE_N {
        return Err(Error::Usage(format!("traces need n <= {MAX_TRACE_N}, got {n}")));
    }
    if k >= 1u64 << n {
        return Err(Error::OutOfRange {
            index: k as usize,
            limit: 1 << n,
        });
    }
    Ok(())
}

/// `b_{n-1} ... b_0`, most significant first.
pub fn bits_of(n: usize, k: u64) -> String {
    (0..n).rev().map(|b| if k >> b & 1 == 1 { '1' } else { '0' }).collect()
}

fn pow(m: usize, e: u64) -> BigUint {
    Pow::pow(BigUint::from(m), e)
}

/// Number of occurrences of `slot` in the `k`-th schedule vector.
pub fn inum(n: usize, m: usize, k: u64, slot: Slot) -> Result<BigUint> {
    check_k(n, k)?;
    match slot {
        Slot::A => Ok(pow(m, k + 1)),
        Slot::Num(i) if i < n => {
            let bits: Vec<u8> = bits_of(n, k).bytes().map(|b| b - b'0').collect();
            // bits[0] is b_{n-1}
            let b_i = bits[n - 1 - i];
            if b_i == 1 {
                return Ok(BigUint::zero());
            }
            // b_{n-1} ... b_{i+1} followed by i+1 zeros
            let prefix = bits[..n - 1 - i]
                .iter()
                .chain(std::iter::repeat_n(&0, i + 1))
                .fold(0u64, |acc, &b| acc * 2 + b as u64);
            let tower = 1u64 << i;
            Ok(pow(m, prefix + tower) * (pow(m, tower) - 1u32))
        }
        Slot::Num(i) => Err(Error::OutOfRange { index: i, limit: n }),
    }
}

/// Least index with a zero bit, if `k < 2^n - 1`.
pub fn pivot(n: usize, k: u64) -> Option<usize> {
    (0..n).find(|&b| k >> b & 1 == 0)
}

/// `v_k` over the family A domain (`n` itself never occurs).
pub fn build_vector(n: usize, m: usize, k: u64) -> Result<CountVector> {
    let spec = SpecA::new(n, m)?;
    let mut v = CountVector::zeros(spec.domain_size());
    v.add(spec.a(), &inum(n, m, k, Slot::A)?);
    for i in 0..n {
        v.add(spec.num(i), &inum(n, m, k, Slot::Num(i))?);
    }
    Ok(v)
}

/// `w_k`: the `m = 2` schedule with its `a` mass split evenly between `a1` and
/// `a2`.
pub fn build_vector_b(n: usize, k: u64) -> Result<CountVector> {
    let spec = SpecB::new(n)?;
    let mut w = CountVector::zeros(spec.domain_size());
    let half = BigUint::one() << k;
    w.add(spec.a1(), &half);
    w.add(spec.a2(), &half);
    for i in 0..n {
        w.add(spec.num(i), &inum(n, 2, k, Slot::Num(i))?);
    }
    Ok(w)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScheduleEntry {
    pub k: u64,
    pub bits: String,
    pub vector: CountVector,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schedule {
    pub spec: FamilySpec,
    pub arity: BigUint,
    pub entries: Vec<ScheduleEntry>,
}

fn schedule_with<F>(spec: FamilySpec, n: usize, arity: BigUint, top: CountVector, vector: F) -> Result<Schedule>
where
    F: Fn(u64) -> Result<CountVector>,
{
    check_k(n, 0)?;
    let entries = (0..1u64 << n)
        .map(|k| {
            Ok(ScheduleEntry {
                k,
                bits: bits_of(n, k),
                vector: vector(k)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    for e in &entries {
        if e.vector.total() != &arity {
            return Err(Error::Certificate {
                step: format!("schedule k={}", e.k),
                fact: format!("total {} differs from {arity}", e.vector.total()),
            });
        }
    }
    if entries.last().map(|e| &e.vector) != Some(&top) {
        return Err(Error::Certificate {
            step: "schedule".into(),
            fact: "last vector is not concentrated on the bottom elements".into(),
        });
    }
    Ok(Schedule {
        spec,
        arity,
        entries,
    })
}

pub fn build_schedule_a(n: usize, m: usize) -> Result<Schedule> {
    let spec = SpecA::new(n, m)?;
    let arity = pow(m, 1 << n);
    let top = CountVector::constant(spec.domain_size(), spec.a(), arity.clone());
    schedule_with(spec.into(), n, arity, top, |k| build_vector(n, m, k))
}

pub fn build_schedule_b(n: usize) -> Result<Schedule> {
    let spec = SpecB::new(n)?;
    let arity = pow(2, 1 << n);
    let mut top = CountVector::zeros(spec.domain_size());
    let half = &arity >> 1u32;
    top.add(spec.a1(), &half);
    top.add(spec.a2(), &half);
    schedule_with(spec.into(), n, arity, top, |k| build_vector_b(n, k))
}

// ---- certificate data ----

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cmp {
    Eq,
    Le,
}

/// An exact arithmetic fact `lhs op rhs`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Identity {
    pub name: String,
    pub op: Cmp,
    #[serde(serialize_with = "biguint_str", deserialize_with = "biguint_from_str")]
    pub lhs: BigUint,
    #[serde(serialize_with = "biguint_str", deserialize_with = "biguint_from_str")]
    pub rhs: BigUint,
}

impl Identity {
    fn eq(name: impl Into<String>, lhs: BigUint, rhs: BigUint) -> Self {
        Identity {
            name: name.into(),
            op: Cmp::Eq,
            lhs,
            rhs,
        }
    }

    pub fn holds(&self) -> bool {
        match self.op {
            Cmp::Eq => self.lhs == self.rhs,
            Cmp::Le => self.lhs <= self.rhs,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElemCount {
    pub elem: String,
    #[serde(serialize_with = "biguint_str", deserialize_with = "biguint_from_str")]
    pub count: BigUint,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleRecord {
    pub k: u64,
    pub bits: String,
    pub counts: Vec<ElemCount>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnRecord {
    pub tuple: Vec<String>,
    #[serde(serialize_with = "biguint_str", deserialize_with = "biguint_from_str")]
    pub count: BigUint,
}

/// One use of compatibility with a relation that omits exactly
/// `(forbidden, hyp, ..., hyp)`. Row 0 of the column matrix is the conclusion
/// row, the remaining rows are hypotheses known to map to `hyp`; so row 0
/// cannot map to `forbidden`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixInstance {
    pub relation: String,
    pub excluded: Vec<String>,
    pub forbidden: String,
    pub hypothesis_value: String,
    pub columns: Vec<ColumnRecord>,
}

/// The facts used to reduce to the case where the hypotheses all map to the
/// pivot: the unary relation containing the previous vector's support, and
/// the congruence (as a composition chain of named binary projections) whose
/// blocks merge everything up to the pivot.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseSplit {
    pub unary: String,
    pub chain: Vec<String>,
    pub blocks: Vec<Vec<String>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepKind {
    /// Hypotheses are near-unanimous inputs.
    Base,
    /// Hypotheses are permutations of the previous vector.
    Induction,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepCertificate {
    /// Index of the vector this step concludes about.
    pub k: u64,
    pub kind: StepKind,
    pub pivot: usize,
    pub instances: Vec<MatrixInstance>,
    pub identities: Vec<Identity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub case_split: Option<CaseSplit>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Terminal {
    pub k: u64,
    pub relation: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceCertificate {
    pub spec: FamilySpec,
    #[serde(serialize_with = "biguint_str", deserialize_with = "biguint_from_str")]
    pub arity: BigUint,
    pub schedule: Vec<ScheduleRecord>,
    pub steps: Vec<StepCertificate>,
    pub terminal: Terminal,
}

impl TraceCertificate {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("certificate serializes")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        Ok(TraceCertificate::deserialize(v)?)
    }
}

// ---- builders ----

/// Identities relating `v_k` and `v_{k+1}` around the pivot (the least zero
/// bit of `k`), evaluated on the built schedule.
pub fn check_lemma_i1(n: usize, m: usize, k: u64) -> Result<Vec<Identity>> {
    check_k(n, k)?;
    let i = pivot(n, k).ok_or_else(|| {
        Error::Usage(format!("k = {k} has no zero bit below {n}; there is no next step"))
    })?;
    let cur = |s| inum(n, m, k, s);
    let next = |s| inum(n, m, k + 1, s);
    let tower = 1u64 << i;
    let mut ids = Vec::new();
    let below: BigUint = (0..i).map(|j| cur(Slot::Num(j))).sum::<Result<BigUint>>()?;
    ids.push(Identity::eq("below-pivot-zero", below, BigUint::zero()));
    ids.push(Identity::eq(
        "pivot-count",
        cur(Slot::Num(i))?,
        pow(m, k + 1) * (pow(m, tower) - 1u32),
    ));
    ids.push(Identity::eq(
        "pivot-prefix",
        cur(Slot::A)? + cur(Slot::Num(i))?,
        pow(m, k + 1 + tower),
    ));
    ids.push(Identity::eq("pivot-cleared", next(Slot::Num(i))?, BigUint::zero()));
    for j in i + 1..n {
        ids.push(Identity::eq(
            format!("upper-unchanged-{j}"),
            next(Slot::Num(j))?,
            cur(Slot::Num(j))?,
        ));
    }
    let next_prefix = (0..i).map(|j| next(Slot::Num(j))).sum::<Result<BigUint>>()? + next(Slot::A)?;
    ids.push(Identity::eq("next-prefix", next_prefix, pow(m, k + 1 + tower)));
    ids.push(Identity::eq("growth", next(Slot::A)?, cur(Slot::A)? * m));
    Ok(ids)
}

fn names_of(d: &Domain, t: &[Elem]) -> Vec<String> {
    t.iter().map(|&e| d.name(e).to_string()).collect()
}

fn record(d: &Domain, k: u64, n: usize, v: &CountVector) -> ScheduleRecord {
    ScheduleRecord {
        k,
        bits: bits_of(n, k),
        counts: d
            .elements()
            .map(|e| ElemCount {
                elem: d.name(e).to_string(),
                count: v.count(e).clone(),
            })
            .collect(),
    }
}

fn columns(d: &Domain, mut cols: Vec<(Vec<Elem>, BigUint)>) -> Vec<ColumnRecord> {
    cols.retain(|(_, c)| !c.is_zero());
    cols.sort();
    cols.into_iter()
        .map(|(t, count)| ColumnRecord {
            tuple: names_of(d, &t),
            count,
        })
        .collect()
}

fn total_identity(v: &CountVector, arity: &BigUint) -> Identity {
    Identity::eq("total", v.total().clone(), arity.clone())
}

/// Certificate for the fact about `v_k`: the base case for `k = 0`, otherwise
/// the step from `v_{k-1}`.
pub fn certify_step(n: usize, m: usize, k: u64) -> Result<StepCertificate> {
    let spec = SpecA::new(n, m)?;
    if spec.is_degenerate() {
        return Err(Error::Usage("n = 0, m = 2 has no lower-bound argument".into()));
    }
    check_k(n, k)?;
    let d = spec.domain();
    let arity = pow(m, 1 << n);
    let a = spec.a();
    let (kind, i, l_a, prev) = if k == 0 {
        (StepKind::Base, n, BigUint::one(), None)
    } else {
        let i = pivot(n, k - 1).expect("k - 1 < 2^n - 1");
        (StepKind::Induction, i, pow(m, k), Some(build_vector(n, m, k - 1)?))
    };
    let target = build_vector(n, m, k)?;
    let hyp = spec.num(i);

    let mut cols = Vec::new();
    for p in 1..=m {
        let mut t = vec![hyp; m + 1];
        t[0] = a;
        t[p] = a;
        cols.push((t, l_a.clone()));
    }
    for x in 0..i {
        let mut t = vec![hyp; m + 1];
        t[0] = spec.num(x);
        cols.push((t, target.count(spec.num(x)).clone()));
    }
    if let Some(prev) = &prev {
        for u in i + 1..n {
            cols.push((vec![spec.num(u); m + 1], prev.count(spec.num(u)).clone()));
        }
    }
    let mut excluded = vec![hyp; m + 1];
    excluded[0] = a;
    let s_i = crate::structures::gen_s(spec, i)?;
    if let Some((t, _)) = cols.iter().find(|(t, _)| !s_i.contains(t)) {
        return Err(Error::Certificate {
            step: format!("k={k}"),
            fact: format!("column {:?} is not in {}", names_of(&d, t), s_name(i)),
        });
    }
    let instance = MatrixInstance {
        relation: s_name(i),
        excluded: names_of(&d, &excluded),
        forbidden: d.name(a).to_string(),
        hypothesis_value: d.name(hyp).to_string(),
        columns: columns(&d, cols),
    };

    let mut identities = match k {
        0 => Vec::new(),
        _ => check_lemma_i1(n, m, k - 1)?,
    };
    identities.push(total_identity(&target, &arity));
    if let Some(bad) = identities.iter().find(|id| !id.holds()) {
        return Err(Error::Certificate {
            step: format!("k={k}"),
            fact: format!("identity {} fails", bad.name),
        });
    }
    let case_split = match prev {
        None => None,
        Some(_) => {
            let mut unary = vec![a];
            unary.extend((i..n).map(|u| spec.num(u)));
            let mut blocks = vec![names_of(&d, &spec.lower_block(i + 1))];
            blocks.extend((i + 1..=n).map(|u| vec![d.name(spec.num(u)).to_string()]));
            if !crate::structures::verify_eq1(spec, i + 1)? {
                return Err(Error::Certificate {
                    step: format!("k={k}"),
                    fact: format!("chain up to {} is not the congruence", s_name(i)),
                });
            }
            Some(CaseSplit {
                unary: unary_name(mask_of(&unary)),
                chain: (0..=i).map(s_name).collect(),
                blocks,
            })
        }
    };
    Ok(StepCertificate {
        k,
        kind,
        pivot: i,
        instances: vec![instance],
        identities,
        case_split,
    })
}

/// Family B analogue of [`certify_step`], with one instance for each of
/// `R_i^1` (conclusion not `a1`) and `R_i^2` (not `a2`).
pub fn certify_step_b(n: usize, k: u64) -> Result<StepCertificate> {
    let spec = SpecB::new(n)?;
    check_k(n, k)?;
    let d = spec.domain();
    let arity = pow(2, 1 << n);
    let (a1, a2) = (spec.a1(), spec.a2());
    let target = build_vector_b(n, k)?;
    let (kind, i, prev) = if k == 0 {
        (StepKind::Base, n, None)
    } else {
        let i = pivot(n, k - 1).expect("k - 1 < 2^n - 1");
        (StepKind::Induction, i, Some(build_vector_b(n, k - 1)?))
    };
    let hyp = spec.num(i);
    // hypothesis row counts of a1 and a2
    let (l_a1, l_a2) = match &prev {
        None => (BigUint::one(), BigUint::zero()),
        Some(p) => (p.count(a1).clone(), p.count(a2).clone()),
    };
    let big_l = target.count(a1).clone();
    let mut instances = Vec::new();
    let mut identities = match k {
        0 => Vec::new(),
        _ => check_lemma_i1(n, 2, k - 1)?,
    };
    for j in [1u8, 2] {
        let (own, other) = if j == 1 { (a1, a2) } else { (a2, a1) };
        let mut cols = vec![
            (vec![own, a1], l_a1.clone()),
            (vec![own, a2], l_a2.clone()),
            (vec![other, hyp], big_l.clone()),
        ];
        for x in 0..i {
            cols.push((vec![spec.num(x), hyp], target.count(spec.num(x)).clone()));
        }
        if let Some(prev) = &prev {
            for u in i + 1..n {
                cols.push((vec![spec.num(u); 2], prev.count(spec.num(u)).clone()));
            }
        }
        let r = crate::structures::gen_rij(spec, i, j)?;
        if let Some((t, _)) = cols.iter().find(|(t, c)| !c.is_zero() && !r.contains(t)) {
            return Err(Error::Certificate {
                step: format!("k={k}"),
                fact: format!("column {:?} is not in {}", names_of(&d, t), r_name(i, j)),
            });
        }
        let l_i: BigUint = cols.iter().filter(|(t, _)| t[1] == hyp).map(|(_, c)| c).sum();
        identities.push(Identity {
            name: format!("side-condition-{j}"),
            op: Cmp::Le,
            lhs: &l_a1 + &l_a2,
            rhs: l_i,
        });
        instances.push(MatrixInstance {
            relation: r_name(i, j),
            excluded: names_of(&d, &[spec.a_j(j), hyp]),
            forbidden: d.name(spec.a_j(j)).to_string(),
            hypothesis_value: d.name(hyp).to_string(),
            columns: columns(&d, cols),
        });
    }
    identities.push(Identity::eq(
        "a-split",
        target.count(a1).clone(),
        target.count(a2).clone(),
    ));
    identities.push(total_identity(&target, &arity));
    if let Some(bad) = identities.iter().find(|id| !id.holds()) {
        return Err(Error::Certificate {
            step: format!("k={k}"),
            fact: format!("identity {} fails", bad.name),
        });
    }
    let case_split = match prev {
        None => None,
        Some(_) => {
            let mut unary = vec![a1, a2];
            unary.extend((i..n).map(|u| spec.num(u)));
            let mut blocks = vec![names_of(&d, &spec.lower_block(i + 1))];
            blocks.extend((i + 1..=n).map(|u| vec![d.name(spec.num(u)).to_string()]));
            if !crate::structures::verify_eq1_b(spec, i + 1, None)? {
                return Err(Error::Certificate {
                    step: format!("k={k}"),
                    fact: format!("chain up to {} is not the congruence", r_name(i, 1)),
                });
            }
            Some(CaseSplit {
                unary: unary_name(mask_of(&unary)),
                chain: (0..=i).map(|r| r_name(r, 1)).collect(),
                blocks,
            })
        }
    };
    Ok(StepCertificate {
        k,
        kind,
        pivot: i,
        instances,
        identities,
        case_split,
    })
}

fn assemble<F>(spec: FamilySpec, schedule: Schedule, bottom: &[Elem], step: F) -> Result<TraceCertificate>
where
    F: Fn(u64) -> Result<StepCertificate> + Sync,
{
    let n = match spec {
        FamilySpec::A { n, .. } | FamilySpec::B { n } => n,
    };
    let d = match spec {
        FamilySpec::A { n, m } => SpecA { n, m }.domain(),
        FamilySpec::B { n } => SpecB { n }.domain(),
    };
    let last = (1u64 << n) - 1;
    let steps = Exec::default()
        .map(1usize << n, |k| step(k as u64))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(TraceCertificate {
        spec,
        arity: schedule.arity.clone(),
        schedule: schedule
            .entries
            .iter()
            .map(|e| record(&d, e.k, n, &e.vector))
            .collect(),
        steps,
        terminal: Terminal {
            k: last,
            relation: unary_name(mask_of(bottom)),
        },
    })
}

/// Full chain of steps for family A: base case, then every induction step up
/// to `v_{2^n - 1} = (a: m^{2^n})`.
pub fn certify_lowerbound_a(n: usize, m: usize) -> Result<TraceCertificate> {
    let spec = SpecA::new(n, m)?;
    if spec.is_degenerate() {
        return Err(Error::Usage("n = 0, m = 2 has no lower-bound argument".into()));
    }
    assemble(spec.into(), build_schedule_a(n, m)?, &[spec.a()], |k| certify_step(n, m, k))
}

pub fn certify_lowerbound_b(n: usize) -> Result<TraceCertificate> {
    let spec = SpecB::new(n)?;
    assemble(spec.into(), build_schedule_b(n)?, &[spec.a1(), spec.a2()], |k| {
        certify_step_b(n, k)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn inum_small_display() {
        assert_eq!(inum(3, 3, 0, Slot::A).unwrap(), b(3));
        assert_eq!(inum(3, 3, 0, Slot::Num(0)).unwrap(), b(6));
        assert_eq!(inum(3, 3, 0, Slot::Num(1)).unwrap(), b(72));
        assert_eq!(inum(3, 3, 0, Slot::Num(2)).unwrap(), b(6480));
        assert_eq!(inum(3, 3, 1, Slot::A).unwrap(), b(9));
        assert_eq!(inum(3, 3, 1, Slot::Num(0)).unwrap(), b(0));
        assert_eq!(inum(3, 3, 1, Slot::Num(1)).unwrap(), b(72));
        assert_eq!(inum(3, 3, 1, Slot::Num(2)).unwrap(), b(6480));
        assert!(inum(3, 3, 8, Slot::A).is_err());
        assert!(inum(3, 3, 0, Slot::Num(3)).is_err());
    }

    #[test]
    fn vectors_match_hand_values() {
        assert_eq!(build_vector(3, 3, 7).unwrap(), CountVector::from_u64s(&[6561, 0, 0, 0, 0]));
        assert_eq!(build_vector(3, 3, 4).unwrap(), CountVector::from_u64s(&[243, 486, 5832, 0, 0]));
        assert_eq!(
            build_vector_b(3, 0).unwrap(),
            CountVector::from_u64s(&[1, 1, 2, 12, 240, 0])
        );
        assert_eq!(build_vector_b(3, 1).unwrap(), CountVector::from_u64s(&[2, 2, 0, 12, 240, 0]));
        assert_eq!(build_vector_b(3, 2).unwrap(), CountVector::from_u64s(&[4, 4, 8, 0, 240, 0]));
        assert_eq!(build_vector_b(3, 7).unwrap(), CountVector::from_u64s(&[128, 128, 0, 0, 0, 0]));
    }

    #[test]
    fn bits_and_pivots() {
        assert_eq!(bits_of(3, 3), "011");
        assert_eq!(pivot(3, 3), Some(2));
        assert_eq!(pivot(3, 0), Some(0));
        assert_eq!(pivot(3, 7), None);
    }

    #[test]
    fn growth_identity_examples() {
        let ids = check_lemma_i1(3, 3, 0).unwrap();
        assert!(ids.iter().all(Identity::holds));
        let prefix = ids.iter().find(|i| i.name == "pivot-prefix").unwrap();
        assert_eq!(prefix.lhs, b(9));
        let ids = check_lemma_i1(3, 3, 3).unwrap();
        let next = ids.iter().find(|i| i.name == "next-prefix").unwrap();
        assert_eq!(next.lhs, b(6561));
        assert!(check_lemma_i1(3, 3, 7).is_err());
    }

    #[test]
    fn base_step_columns() {
        let step = certify_step(3, 3, 0).unwrap();
        assert_eq!(step.pivot, 3);
        let inst = &step.instances[0];
        assert_eq!(inst.relation, "S3");
        assert_eq!(inst.excluded, ["a", "3", "3", "3"]);
        let tuples: Vec<&[String]> = inst.columns.iter().map(|c| c.tuple.as_slice()).collect();
        assert!(tuples.contains(&&["a".to_string(), "a".into(), "3".into(), "3".into()][..]));
        assert!(!tuples.contains(&&["a".to_string(), "3".into(), "3".into(), "3".into()][..]));
    }

    #[test]
    fn first_induction_step_uses_pivot_zero() {
        let step = certify_step(3, 3, 1).unwrap();
        assert_eq!(step.pivot, 0);
        assert_eq!(step.kind, StepKind::Induction);
        let inst = &step.instances[0];
        assert_eq!(inst.relation, "S0");
        let la: Vec<_> = inst
            .columns
            .iter()
            .filter(|c| c.tuple.iter().filter(|e| *e == "a").count() == 2)
            .map(|c| c.count.clone())
            .collect();
        assert_eq!(la, vec![b(3); 3]);
        assert_eq!(step.case_split.as_ref().unwrap().blocks[0], ["a", "0"]);
    }

    #[test]
    fn degenerate_case_rejected() {
        assert!(certify_lowerbound_a(0, 2).is_err());
        assert!(certify_lowerbound_a(0, 3).is_ok());
        assert!(certify_lowerbound_b(0).is_ok());
    }

    #[test]
    fn certificate_json_round_trip() {
        let cert = certify_lowerbound_b(2).unwrap();
        let v = cert.to_json();
        assert_eq!(v["spec"]["family"], "B");
        assert_eq!(TraceCertificate::from_json(&v).unwrap(), cert);
    }
}
