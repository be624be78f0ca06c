//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the
//! libtest harness so the lines are printed even when everything passes.

use std::process::ExitCode;
use std::time::Instant;

use num_bigint::BigUint;
use num_traits::{One, Pow};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use polyclone::bounds::{bounds, lower_bound, upper_bound};
use polyclone::compat::{check_compat_sampled, check_compat_symmetric, DEFAULT_SEED};
use polyclone::exec::enumeration_budget;
use polyclone::relation::is_compatible_table;
use polyclone::solver::{decide_nu, verify_witness_table, Outcome, Pinning, NODE_LIMIT};
use polyclone::structures::{verify_eq1, verify_eq1_b};
use polyclone::trace::{
    build_schedule_a, build_schedule_b, certify_lowerbound_a, certify_lowerbound_b, check_certificate,
    fuzz_certificate,
};
use polyclone::witness::{
    expand_to_table, is_conservative_exhaustive, is_conservative_sampled, is_nu_symmetric, SymmetricOp,
    TabulatedSymmetric, Witness,
};
use polyclone::{Elem, Exec, FamilySpec, Relation, SpecA, SpecB};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e<E: std::fmt::Display>(x: E) -> String {
    x.to_string()
}

fn composition_chains() -> Check {
    let mut checked = 0;
    for n in 1..=8 {
        for m in 2..=4 {
            let spec = SpecA::new(n, m).map_err(e)?;
            for i in 1..=n {
                ensure(verify_eq1(spec, i).map_err(e)?, || format!("A({n},{m}) i={i}"))?;
                checked += 1;
            }
        }
    }
    // one j per level, shared by the converse half and the forward half
    let mut levels = 0;
    // independent j for all 2i factors; only the unmatched single-level
    // chains may fail there (0 is then never linked back to itself)
    let mut free = 0;
    for n in 1..=6 {
        let spec = SpecB::new(n).map_err(e)?;
        for i in 1..=n {
            for bits in 0u32..1 << (2 * i) {
                let p: Vec<u8> = (0..2 * i).map(|b| 1 + ((bits >> b) & 1) as u8).collect();
                let mirrored = (0..i).all(|r| p[r] == p[2 * i - 1 - r]);
                let holds = verify_eq1_b(spec, i, Some(&p)).map_err(e)?;
                if mirrored {
                    ensure(holds, || format!("B n={n} i={i} {p:?}"))?;
                    levels += 1;
                } else {
                    ensure(holds == (i > 1), || format!("B n={n} i={i} {p:?}: unexpected {holds}"))?;
                    free += 1;
                }
            }
        }
    }
    Ok(format!(
        "{checked} A chains, {levels} per-level B patterns, {free} unmatched B patterns (fail exactly at i=1)"
    ))
}

fn exact_witnesses() -> Check {
    let mut cases: Vec<Witness> = [(0, 2), (0, 3), (0, 4), (1, 2), (1, 3)]
        .iter()
        .map(|&(n, m)| Witness::f_a(n, m))
        .collect::<Result<_, _>>()
        .map_err(e)?;
    cases.push(Witness::f_b(0).map_err(e)?);
    cases.push(Witness::f_b(1).map_err(e)?);
    let budget = enumeration_budget();
    let mut multisets = BigUint::ZERO;
    let mut arities = Vec::new();
    for w in &cases {
        let spec = w.family();
        let s = spec.structure().map_err(e)?;
        ensure(is_nu_symmetric(w).map_err(e)?, || format!("{spec:?} is not NU"))?;
        let l = w.arity().to_string().parse::<u64>().map_err(e)?;
        let cons = is_conservative_exhaustive(w, l, budget).map_err(e)?;
        ensure(cons.is_conservative(), || format!("{spec:?} not conservative"))?;
        for (name, r) in s.iter().filter(|(_, r)| r.arity() >= 2) {
            let v = check_compat_symmetric(w, r, budget, Exec::Parallel).map_err(e)?;
            ensure(v.is_ok(), || format!("{spec:?} violates {name}"))?;
            multisets += v.examined;
        }
        arities.push(l.to_string());
    }
    Ok(format!("arities {}; {multisets} column multisets", arities.join(",")))
}

fn small_solver_instances() -> Check {
    let mut notes = Vec::new();
    let cases = [
        (FamilySpec::A { n: 0, m: 3 }, 3, false),
        (FamilySpec::A { n: 0, m: 4 }, 4, false),
        (FamilySpec::A { n: 1, m: 2 }, 4, true),
        (FamilySpec::B { n: 1 }, 4, false),
    ];
    for (spec, k, remark) in cases {
        let s = spec.structure().map_err(e)?;
        let mut pinnings = vec![(Pinning::NearUnanimity, None)];
        if remark {
            pinnings.push((Pinning::top_rows(spec, k), Some(Pinning::top_rows(spec, k + 1))));
        }
        for (low_pin, high_pin) in pinnings {
            let low = decide_nu(&s, k, low_pin.clone().into_rows(), NODE_LIMIT).map_err(e)?;
            ensure(matches!(low.solution.outcome, Outcome::Unsat), || {
                format!("{spec:?} k={k} {}: {}", low_pin.describe(), low.solution.outcome.as_str())
            })?;
            let high_rows = high_pin.clone();
            let high = decide_nu(&s, k + 1, high_rows.clone(), NODE_LIMIT).map_err(e)?;
            let Outcome::Sat(table) = &high.solution.outcome else {
                return Err(format!("{spec:?} k={}: {}", k + 1, high.solution.outcome.as_str()));
            };
            let check = high_rows.unwrap_or(Pinning::NearUnanimity);
            ensure(verify_witness_table(table, &s, &check).map_err(e)?, || {
                format!("{spec:?} k={} witness fails re-verification", k + 1)
            })?;
            // every witness is NU whatever was pinned during search
            ensure(verify_witness_table(table, &s, &Pinning::NearUnanimity).map_err(e)?, || {
                format!("{spec:?} k={} witness is not NU", k + 1)
            })?;
            notes.push(format!("{spec:?}:{}", low_pin.describe()));
        }
    }
    Ok(format!("unsat at k, sat at k+1 for {}", notes.len()))
}

trait IntoRows {
    fn into_rows(self) -> Option<Pinning>;
}

impl IntoRows for Pinning {
    fn into_rows(self) -> Option<Pinning> {
        match self {
            Pinning::NearUnanimity => None,
            rows => Some(rows),
        }
    }
}

fn schedules() -> Check {
    let want_a: [&[u64]; 8] = [
        &[3, 6, 72, 6480, 0],
        &[9, 0, 72, 6480, 0],
        &[27, 54, 0, 6480, 0],
        &[81, 0, 0, 6480, 0],
        &[243, 486, 5832, 0, 0],
        &[729, 0, 5832, 0, 0],
        &[2187, 4374, 0, 0, 0],
        &[6561, 0, 0, 0, 0],
    ];
    let want_b: [&[u64]; 8] = [
        &[1, 1, 2, 12, 240, 0],
        &[2, 2, 0, 12, 240, 0],
        &[4, 4, 8, 0, 240, 0],
        &[8, 8, 0, 0, 240, 0],
        &[16, 16, 32, 192, 0, 0],
        &[32, 32, 0, 192, 0, 0],
        &[64, 64, 128, 0, 0, 0],
        &[128, 128, 0, 0, 0, 0],
    ];
    let a = build_schedule_a(3, 3).map_err(e)?;
    let b = build_schedule_b(3).map_err(e)?;
    for (label, sched, want) in [("A(3,3)", &a, &want_a), ("B(3)", &b, &want_b)] {
        ensure(sched.entries.len() == want.len(), || format!("{label}: {} entries", sched.entries.len()))?;
        for (entry, w) in sched.entries.iter().zip(want.iter()) {
            let w: Vec<BigUint> = w.iter().map(|&x| BigUint::from(x)).collect();
            ensure(entry.vector.counts() == w.as_slice(), || {
                format!("{label} k={}: {:?}", entry.k, entry.vector.to_u64s())
            })?;
        }
    }
    Ok("A(3,3) and B(3) match exactly".into())
}

fn certificate_sweep() -> Check {
    let mut specs = Vec::new();
    for n in 0..=6 {
        for m in 2..=5 {
            if n == 0 && m == 2 {
                continue;
            }
            specs.push(FamilySpec::A { n, m });
        }
        specs.push(FamilySpec::B { n });
    }
    let mut mutations = 0;
    for spec in &specs {
        let cert = match *spec {
            FamilySpec::A { n, m } => certify_lowerbound_a(n, m),
            FamilySpec::B { n } => certify_lowerbound_b(n),
        }
        .map_err(e)?;
        let s = spec.structure().map_err(e)?;
        let v = check_certificate(&cert, &s);
        ensure(v.is_valid(), || format!("{spec:?}: {:?}", v.faults))?;
        ensure(cert.steps.iter().flat_map(|st| &st.identities).all(|i| i.holds()), || {
            format!("{spec:?}: an identity fails")
        })?;
        let report = fuzz_certificate(&cert, &s, 1000, DEFAULT_SEED, Exec::Parallel);
        ensure(report.all_rejected(), || {
            format!(
                "{spec:?}: {} escaped, {} unparsable, first {:?}",
                report.escaped.len(),
                report.unparsable.len(),
                report.escaped.first().or(report.unparsable.first())
            )
        })?;
        mutations += report.rejected;
    }
    Ok(format!("{} certificates, {mutations} mutations rejected", specs.len()))
}

fn sampled_witnesses() -> Check {
    const TRIALS: u64 = 100_000;
    let mut relations = 0;
    for w in [Witness::f_a(2, 2).map_err(e)?, Witness::f_b(2).map_err(e)?] {
        let spec = w.family();
        ensure(w.arity() == &BigUint::from(17u32), || format!("{spec:?} arity {}", w.arity()))?;
        let s = spec.structure().map_err(e)?;
        ensure(is_nu_symmetric(&w).map_err(e)?, || format!("{spec:?} is not NU"))?;
        let cons = is_conservative_sampled(&w, TRIALS, DEFAULT_SEED, Exec::Parallel).map_err(e)?;
        ensure(cons.is_conservative(), || format!("{spec:?} not conservative"))?;
        for (name, r) in s.iter().filter(|(_, r)| r.arity() >= 2) {
            let v = check_compat_sampled(&w, r, TRIALS, DEFAULT_SEED, Exec::Parallel).map_err(e)?;
            ensure(v.is_ok(), || format!("{spec:?} violates {name}: {:?}", v.violation))?;
            relations += 1;
        }
    }
    Ok(format!("{relations} relations x {TRIALS} samples, seed {DEFAULT_SEED}"))
}

fn oracle_equivalence() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    let (mut ok, mut bad) = (0, 0);
    for case in 0..200 {
        let d = rng.gen_range(1..=3usize);
        let l = rng.gen_range(1..=4u64);
        let arity = rng.gen_range(1..=3usize);
        let op = TabulatedSymmetric::from_fn(d, l, |_| Elem(rng.gen_range(0..d) as u8));
        let tuples: Vec<Vec<Elem>> = (0..d.pow(arity as u32))
            .filter(|_| rng.gen_bool(0.5))
            .map(|mut idx| {
                let mut t = vec![Elem(0); arity];
                for slot in t.iter_mut().rev() {
                    *slot = Elem((idx % d) as u8);
                    idx /= d;
                }
                t
            })
            .collect();
        let r = Relation::new(arity, d, tuples).map_err(e)?;
        let fast = check_compat_symmetric(&op, &r, u64::MAX, Exec::Sequential).map_err(e)?;
        let table = expand_to_table(&op).map_err(e)?;
        let slow = is_compatible_table(&table, &r, u64::MAX, Exec::Sequential).map_err(e)?;
        ensure(fast.is_ok() == slow.is_compatible(), || {
            format!("case {case}: d={d} l={l} arity={arity} disagree")
        })?;
        if let Some(v) = &fast.violation {
            ensure(!r.contains(&v.image(&op).map_err(e)?), || format!("case {case}: bogus violation"))?;
            bad += 1;
        } else {
            ok += 1;
        }
    }
    ensure(ok > 0 && bad > 0, || format!("degenerate sample: {ok} ok, {bad} violated"))?;
    Ok(format!("200 instances agree ({ok} compatible, {bad} violated)"))
}

fn bound_formulas() -> Check {
    let big = |x: u64| BigUint::from(x);
    ensure(upper_bound(2, 2).map_err(e)? == big(257), || "upper(2,2)".into())?;
    ensure(lower_bound(2, 4).map_err(e)? == big(3), || "lower(2,4)".into())?;
    ensure(lower_bound(3, 2).map_err(e)? == big(2), || "lower(3,2)".into())?;
    ensure(bounds(2, 2).map_err(e)?.lower.is_none(), || "lower(2,2) should be undefined".into())?;
    for n in 0..=6usize {
        for m in [2u32, 3, 4] {
            if n == 0 && m == 2 {
                continue;
            }
            let want = Pow::pow(BigUint::from(m), 1u64 << n);
            ensure(lower_bound(n + 2, m as usize + 1).map_err(e)? == want, || format!("lower({}, {})", n + 2, m + 1))?;
        }
        let want = Pow::pow(BigUint::from(2u32), 1u64 << n);
        ensure(lower_bound(n + 3, 2).map_err(e)? == want, || format!("lower({}, 2)", n + 3))?;
        // the witness arities sit one above the lower bounds
        for m in [2usize, 3, 4] {
            if n == 0 && m == 2 {
                continue;
            }
            let w = Witness::f_a(n, m).map_err(e)?;
            ensure(w.arity() == &(lower_bound(n + 2, m + 1).map_err(e)? + BigUint::one()), || {
                format!("witness arity A({n},{m})")
            })?;
        }
    }
    Ok("closed forms and section-parameter consistency hold".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("composition chains equal the congruences", composition_chains),
        ("explicit witnesses pass exact multiset enumeration", exact_witnesses),
        ("small instances: unsat below the bound, sat at it", small_solver_instances),
        ("schedules reproduce the worked examples", schedules),
        ("certificate sweep and mutation fuzzing", certificate_sweep),
        ("sampled compatibility at arity 17", sampled_witnesses),
        ("multiset check agrees with the matrix oracle", oracle_equivalence),
        ("bound formulas", bound_formulas),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (idx, (name, f)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|x| name.contains(x.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result = f();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {}. {name} [{detail}] ({secs:.1}s)", idx + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {}. {name}: {why} ({secs:.1}s)", idx + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
