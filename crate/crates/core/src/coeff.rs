//! Exact scalar coefficients: a rational times integer powers of `hbar`,
//! `eps0` and the imaginary unit.
//!
//! The imaginary unit is kept reduced to `I^0` or `I^1`; `I^2 = -1` is folded
//! into the sign of the rational part, so two coefficients with the same
//! units can be added by adding their rationals.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Mul, Neg};

use num_rational::Rational64;
use num_traits::{One, Signed, Zero};

/// The non-rational part of a coefficient: `(hbar power, eps0 power, I power)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Units {
    pub hbar: i32,
    pub eps0: i32,
    pub imag: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Coefficient {
    rational: Rational64,
    units: Units,
}

impl Coefficient {
    pub fn new(rational: Rational64, hbar: i32, eps0: i32, i_pow: i32) -> Self {
        let i_pow = i_pow.rem_euclid(4);
        let (rational, imag) = match i_pow {
            0 => (rational, 0),
            1 => (rational, 1),
            2 => (-rational, 0),
            _ => (-rational, 1),
        };
        Coefficient {
            rational,
            units: Units { hbar, eps0, imag },
        }
    }

    pub fn from_int(n: i64) -> Self {
        Self::new(Rational64::from_integer(n), 0, 0, 0)
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        Self::new(Rational64::new(num, den), 0, 0, 0)
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    pub fn zero() -> Self {
        Self::from_int(0)
    }

    pub fn i() -> Self {
        Self::new(Rational64::one(), 0, 0, 1)
    }

    pub fn hbar() -> Self {
        Self::new(Rational64::one(), 1, 0, 0)
    }

    pub fn eps0() -> Self {
        Self::new(Rational64::one(), 0, 1, 0)
    }

    /// `-(I hbar / eps0)`, the prefactor of the electric-magnetic field commutator.
    pub fn field_commutator_prefactor() -> Self {
        Self::new(-Rational64::one(), 1, -1, 1)
    }

    pub fn rational(&self) -> Rational64 {
        self.rational
    }

    pub fn units(&self) -> Units {
        self.units
    }

    pub fn with_rational(&self, rational: Rational64) -> Self {
        Coefficient {
            rational,
            units: self.units,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.rational.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.rational.is_negative()
    }

    pub fn abs(&self) -> Self {
        self.with_rational(self.rational.abs())
    }

    pub fn pow(&self, n: u32) -> Self {
        (0..n).fold(Self::one(), |acc, _| acc * *self)
    }

    /// Adds two coefficients carrying identical units.
    pub fn checked_add(&self, other: &Self) -> Option<Self> {
        (self.units == other.units).then(|| self.with_rational(self.rational + other.rational))
    }

    /// Numeric value with `hbar = eps0 = 1`, as `(re, im)`.
    pub fn to_complex(&self) -> (f64, f64) {
        let v = *self.rational.numer() as f64 / *self.rational.denom() as f64;
        if self.units.imag == 1 {
            (0.0, v)
        } else {
            (v, 0.0)
        }
    }
}

impl Default for Coefficient {
    fn default() -> Self {
        Self::one()
    }
}

impl Mul for Coefficient {
    type Output = Coefficient;

    fn mul(self, rhs: Self) -> Self {
        Coefficient::new(
            self.rational * rhs.rational,
            self.units.hbar + rhs.units.hbar,
            self.units.eps0 + rhs.units.eps0,
            i32::from(self.units.imag) + i32::from(rhs.units.imag),
        )
    }
}

impl Neg for Coefficient {
    type Output = Coefficient;

    fn neg(self) -> Self {
        self.with_rational(-self.rational)
    }
}

impl PartialOrd for Coefficient {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Coefficient {
    fn cmp(&self, other: &Self) -> Ordering {
        self.units
            .cmp(&other.units)
            .then_with(|| self.rational.cmp(&other.rational))
    }
}

/// Writes the coefficient in the text grammar, e.g. `-2/3*I*hbar*eps0^-1`.
impl fmt::Display for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = Vec::new();
        let r = self.rational;
        let bare_unit = r.abs().is_one();
        let has_units = self.units != Units::default();
        if !bare_unit || !has_units {
            parts.push(if r.is_integer() {
                r.numer().abs().to_string()
            } else {
                format!("{}/{}", r.numer().abs(), r.denom())
            });
        }
        if self.units.imag == 1 {
            parts.push("I".into());
        }
        for (name, p) in [("hbar", self.units.hbar), ("eps0", self.units.eps0)] {
            match p {
                0 => {}
                1 => parts.push(name.into()),
                _ => parts.push(format!("{name}^{p}")),
            }
        }
        if r.is_negative() {
            write!(f, "-")?;
        }
        write!(f, "{}", parts.join("*"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn imaginary_unit_folds_into_sign() {
        let i = Coefficient::i();
        assert_eq!(i * i, Coefficient::from_int(-1));
        assert_eq!(i * i * i, -Coefficient::i());
        assert_eq!((i * i * i * i), Coefficient::one());
    }

    #[test]
    fn units_add_only_when_equal() {
        let a = Coefficient::hbar();
        let b = Coefficient::hbar() * Coefficient::from_int(2);
        assert_eq!(
            a.checked_add(&b).unwrap(),
            Coefficient::hbar() * Coefficient::from_int(3)
        );
        assert!(a.checked_add(&Coefficient::eps0()).is_none());
    }

    #[test]
    fn display_forms() {
        assert_eq!(
            Coefficient::field_commutator_prefactor().to_string(),
            "-I*hbar*eps0^-1"
        );
        assert_eq!(Coefficient::ratio(-2, 4).to_string(), "-1/2");
        assert_eq!(Coefficient::one().to_string(), "1");
        assert_eq!(
            (Coefficient::from_int(2) * Coefficient::i()).to_string(),
            "2*I"
        );
    }

    #[test]
    fn rational_is_reduced() {
        let c = Coefficient::ratio(6, 8);
        assert_eq!(c.rational(), Rational64::new(3, 4));
    }
}
