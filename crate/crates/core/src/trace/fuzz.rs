//! Single-leaf mutations of serialized certificates. Every mutation keeps the
//! JSON shape and leaf type, so the result still deserializes; the checker
//! then has to reject it.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use super::{check_certificate, TraceCertificate};
use crate::exec::Exec;
use crate::structures::Structure;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FuzzReport {
    pub trials: u64,
    pub rejected: u64,
    /// Mutations that no longer deserialize.
    pub unparsable: Vec<String>,
    /// Mutations the checker accepted.
    pub escaped: Vec<String>,
}

impl FuzzReport {
    pub fn all_rejected(&self) -> bool {
        self.unparsable.is_empty() && self.escaped.is_empty() && self.rejected == self.trials
    }
}

enum Outcome {
    Rejected,
    Unparsable(String),
    Escaped(String),
}

fn leaves(v: &Value, path: String, out: &mut Vec<String>) {
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                leaves(x, format!("{path}/{}", k.replace('~', "~0").replace('/', "~1")), out);
            }
        }
        Value::Array(xs) => {
            for (i, x) in xs.iter().enumerate() {
                leaves(x, format!("{path}/{i}"), out);
            }
        }
        Value::Number(_) | Value::String(_) => out.push(path),
        Value::Null | Value::Bool(_) => {}
    }
}

fn bump(x: u128, rng: &mut impl Rng) -> u128 {
    if x == 0 || rng.gen_bool(0.5) {
        x + 1
    } else {
        x - 1
    }
}

fn mutate_string(s: &str, names: &[String], rng: &mut impl Rng) -> String {
    if let Ok(x) = s.parse::<num_bigint::BigUint>() {
        return if x == num_bigint::BigUint::ZERO || rng.gen_bool(0.5) {
            (x + 1u32).to_string()
        } else {
            (x - 1u32).to_string()
        };
    }
    let swap = [("A", "B"), ("eq", "le"), ("base", "induction")];
    for (x, y) in swap {
        if s == x {
            return y.into();
        }
        if s == y {
            return x.into();
        }
    }
    if names.iter().any(|n| n == s) {
        let others: Vec<&String> = names.iter().filter(|n| *n != s).collect();
        if let Some(o) = others.choose(rng) {
            return (*o).clone();
        }
    }
    // shift a trailing index: S3 -> S2 / S4, X29 -> X30, R1_2 -> R1_1
    let digits = s.bytes().rev().take_while(u8::is_ascii_digit).count();
    if digits > 0 {
        let (head, tail) = s.split_at(s.len() - digits);
        if let Ok(x) = tail.parse::<u128>() {
            return format!("{head}{}", bump(x, rng));
        }
    }
    format!("{s}'")
}

/// Mutates one number or string leaf chosen uniformly; returns its JSON
/// pointer.
pub fn mutate_leaf(v: &mut Value, names: &[String], rng: &mut impl Rng) -> Option<String> {
    let mut paths = Vec::new();
    leaves(v, String::new(), &mut paths);
    let path = paths.choose(rng)?;
    mutate_at(v, path, names, rng);
    Some(path.clone())
}

fn mutate_at(v: &mut Value, path: &str, names: &[String], rng: &mut impl Rng) {
    let Some(leaf) = v.pointer_mut(path) else {
        return;
    };
    *leaf = match &*leaf {
        Value::Number(x) => match x.as_u64() {
            Some(u) => Value::from(bump(u as u128, rng) as u64),
            None => Value::from(0u64),
        },
        Value::String(s) => Value::String(mutate_string(s, names, rng)),
        other => other.clone(),
    };
    // B -> A also needs the second parameter to deserialize
    if let Some(parent) = path.strip_suffix("/family") {
        if let Some(Value::Object(obj)) = v.pointer_mut(parent) {
            if obj.get("family") == Some(&Value::from("A")) {
                obj.entry("m").or_insert(Value::from(2u64));
            }
        }
    }
}

const CHUNK: u64 = 32;

/// Applies `trials` independent single-leaf mutations to `cert` and checks
/// each against `s`. Trial `t` draws from stream `t` of the seeded generator,
/// so the report does not depend on the execution strategy.
pub fn fuzz_certificate(
    cert: &TraceCertificate,
    s: &Structure,
    trials: u64,
    seed: u64,
    exec: Exec,
) -> FuzzReport {
    let base = cert.to_json();
    let names = s.domain.names().to_vec();
    let mut paths = Vec::new();
    leaves(&base, String::new(), &mut paths);
    // each chunk mutates one working copy and restores it after every trial
    let chunks = trials.div_ceil(CHUNK);
    let outcomes = exec.map(chunks as usize, |c| {
        let mut work = base.clone();
        let end = ((c as u64 + 1) * CHUNK).min(trials);
        let mut out = Vec::new();
        for t in c as u64 * CHUNK..end {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t);
            let Some(path) = paths.choose(&mut rng) else {
                out.push(Outcome::Unparsable(format!("trial {t}: certificate has no leaves")));
                continue;
            };
            let spec = work["spec"].clone();
            let old = work.pointer(path).cloned().unwrap_or(Value::Null);
            mutate_at(&mut work, path, &names, &mut rng);
            let entry = || format!("trial {t}: {path} (was {old})");
            out.push(match TraceCertificate::from_json(&work) {
                Err(_) => Outcome::Unparsable(entry()),
                Ok(m) if check_certificate(&m, s).is_valid() => Outcome::Escaped(entry()),
                Ok(_) => Outcome::Rejected,
            });
            if let Some(leaf) = work.pointer_mut(path) {
                *leaf = old;
            }
            work["spec"] = spec;
        }
        out
    });
    let mut report = FuzzReport {
        trials,
        ..FuzzReport::default()
    };
    for o in outcomes.into_iter().flatten() {
        match o {
            Outcome::Rejected => report.rejected += 1,
            Outcome::Unparsable(e) => report.unparsable.push(e),
            Outcome::Escaped(e) => report.escaped.push(e),
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{certify_lowerbound_a, certify_lowerbound_b};

    #[test]
    fn string_mutations() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let names = vec!["a".to_string(), "0".into(), "1".into()];
        assert_eq!(mutate_string("A", &names, &mut rng), "B");
        assert_eq!(mutate_string("le", &names, &mut rng), "eq");
        assert_eq!(mutate_string("0", &names, &mut rng), "1");
        assert_ne!(mutate_string("a", &names, &mut rng), "a");
        let s = mutate_string("S3", &names, &mut rng);
        assert!(s == "S2" || s == "S4");
        assert_eq!(mutate_string("total", &names, &mut rng), "total'");
    }

    #[test]
    fn small_certificates_reject_all_mutations() {
        let cert = certify_lowerbound_a(1, 2).unwrap();
        let s = crate::structures::gen_structure_a(crate::SpecA::new(1, 2).unwrap());
        let report = fuzz_certificate(&cert, &s, 300, 9, Exec::Parallel);
        assert!(report.all_rejected(), "{report:?}");

        let cert = certify_lowerbound_b(1).unwrap();
        let s = crate::structures::gen_structure_b(crate::SpecB::new(1).unwrap());
        let report = fuzz_certificate(&cert, &s, 300, 9, Exec::Parallel);
        assert!(report.all_rejected(), "{report:?}");
    }
}
