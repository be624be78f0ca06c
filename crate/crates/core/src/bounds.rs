//! Closed-form bounds on the minimal arity of an NU polymorphism, in terms of
//! the universe size and the maximal relation arity.

use num_bigint::BigUint;
use num_traits::{One, Pow};
use serde::Serialize;

use crate::error::{Error, Result};

/// Largest universe size accepted; `3^n` in the upper-bound exponent grows fast.
pub const MAX_UNIVERSE: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Bounds {
    #[serde(serialize_with = "crate::json::biguint_str")]
    pub upper: BigUint,
    /// `None` when the parameters fall outside the lower-bound construction.
    #[serde(serialize_with = "crate::json::opt_biguint_str")]
    pub lower: Option<BigUint>,
}

fn check_universe(universe: usize) -> Result<()> {
    if universe < 2 {
        return Err(Error::Hypothesis(format!(
            "universe size must be at least 2, got {universe}"
        )));
    }
    if universe > MAX_UNIVERSE {
        return Err(Error::Usage(format!(
            "universe size {universe} exceeds the supported maximum {MAX_UNIVERSE}"
        )));
    }
    Ok(())
}

/// `(2m-2)^(3^n) / 2 + 1`: any structure with an NU polymorphism has one of
/// at most this arity.
pub fn upper_bound(universe: usize, max_arity: usize) -> Result<BigUint> {
    check_universe(universe)?;
    if max_arity < 2 {
        return Err(Error::Hypothesis(format!(
            "maximal relation arity must be at least 2, got {max_arity}"
        )));
    }
    let exponent: BigUint = BigUint::from(3u32).pow(universe as u32);
    let base = BigUint::from(2 * max_arity - 2);
    Ok(base.pow(exponent) / 2u32 + BigUint::one())
}

/// Arity below which the extremal structures have no NU polymorphism:
/// `(m-1)^(2^(n-2))` for `m >= 3, n >= 2`, and `2^(2^(n-3))` for `m = 2, n >= 3`.
pub fn lower_bound(universe: usize, max_arity: usize) -> Result<BigUint> {
    check_universe(universe)?;
    match max_arity {
        0 | 1 => Err(Error::Hypothesis(format!(
            "maximal relation arity must be at least 2, got {max_arity}"
        ))),
        2 if universe < 3 => Err(Error::Hypothesis(format!(
            "binary relations need a universe of size at least 3, got {universe}"
        ))),
        2 => Ok(BigUint::from(2u32).pow(1u64 << (universe - 3))),
        m => Ok(BigUint::from(m - 1).pow(1u64 << (universe - 2))),
    }
}

pub fn bounds(universe: usize, max_arity: usize) -> Result<Bounds> {
    Ok(Bounds {
        upper: upper_bound(universe, max_arity)?,
        lower: lower_bound(universe, max_arity).ok(),
    })
}
