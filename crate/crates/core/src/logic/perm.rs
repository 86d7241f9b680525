use std::fmt;
use std::ops::{Add, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("permission {0} outside (0, 1]")]
pub struct PermError(pub BigRational);

/// A fractional permission. Sums may temporarily exceed 1 during
/// normalization; [`Perm::is_valid`] tells whether the value is in (0, 1].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Perm(BigRational);

impl Perm {
    pub fn new(value: BigRational) -> Result<Self, PermError> {
        let p = Perm(value);
        if p.is_valid() {
            Ok(p)
        } else {
            Err(PermError(p.0))
        }
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        Perm::new(BigRational::new(BigInt::from(num), BigInt::from(den))).expect("valid permission")
    }

    pub fn one() -> Self {
        Perm(BigRational::one())
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    pub fn is_valid(&self) -> bool {
        self.0.is_positive() && self.0 <= BigRational::one()
    }

    pub fn value(&self) -> &BigRational {
        &self.0
    }

    /// `self - other` when strictly positive, `None` when zero; panics if negative.
    pub fn residue(&self, other: &Perm) -> Option<Perm> {
        let r = &self.0 - &other.0;
        assert!(!r.is_negative(), "residue of {self} - {other} is negative");
        if r.is_zero() {
            None
        } else {
            Some(Perm(r))
        }
    }
}

impl Add for &Perm {
    type Output = Perm;
    fn add(self, rhs: &Perm) -> Perm {
        Perm(&self.0 + &rhs.0)
    }
}

impl Sub for &Perm {
    type Output = BigRational;
    fn sub(self, rhs: &Perm) -> BigRational {
        &self.0 - &rhs.0
    }
}

impl fmt::Display for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}
