//! Process parameters and the crate-wide error type.

use num_bigint::BigInt;
use num_traits::FromPrimitive;
use thiserror::Error;

use crate::Rational;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("capacity exceeded: {what} needs {actual}, cap is {cap}")]
    Capacity {
        what: &'static str,
        cap: u64,
        actual: u64,
    },
    #[error("quadrature did not converge: achieved {achieved:e}, requested {requested:e}")]
    Convergence { achieved: f64, requested: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
}

/// The pair (n, r): n bins, r balls per round, each round landing in r
/// distinct bins chosen uniformly among the binom(n, r) subsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Params {
    n: u32,
    r: u32,
}

impl Params {
    pub fn new(n: u32, r: u32) -> Result<Self, Error> {
        if n < 1 {
            return Err(Error::InvalidParams("n must be at least 1".into()));
        }
        if r < 1 || r > n {
            return Err(Error::InvalidParams(format!(
                "r must satisfy 1 <= r <= n, got n={n}, r={r}"
            )));
        }
        Ok(Params { n, r })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    /// Per-round drift of each bin, r/n, as an exact rational.
    pub fn drift(&self) -> Rational {
        Rational::new(
            BigInt::from_u32(self.r).unwrap(),
            BigInt::from_u32(self.n).unwrap(),
        )
    }

    /// r/n as a double.
    pub fn drift_f64(&self) -> f64 {
        f64::from(self.r) / f64::from(self.n)
    }

    /// True when r = n, i.e. every round fills every bin and the process
    /// is deterministic.
    pub fn is_deterministic(&self) -> bool {
        self.r == self.n
    }
}

impl std::fmt::Display for Params {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(n={}, r={})", self.n, self.r)
    }
}
