//! Exact rational arithmetic helpers shared by every verdict path.

use core::cmp::Ordering;
use core::fmt;

use num_integer::Integer;
use num_traits::Signed;

/// Exact rational number used for weights, levels and values.
pub type Rational = num_rational::Ratio<i64>;

/// Shorthand constructor, `rat(3, 4)` is three quarters.
pub fn rat(numer: i64, denom: i64) -> Rational {
    Rational::new(numer, denom)
}

/// Shorthand for an integer-valued rational.
pub fn int(value: i64) -> Rational {
    Rational::from_integer(value)
}

/// A gain value: a non-negative rational or `+inf`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Gain {
    Finite(Rational),
    Infinite,
}

impl Gain {
    pub fn finite(self) -> Option<Rational> {
        match self {
            Gain::Finite(g) => Some(g),
            Gain::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Gain::Infinite)
    }
}

impl PartialOrd for Gain {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Gain {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Gain::Finite(a), Gain::Finite(b)) => a.cmp(b),
            (Gain::Finite(_), Gain::Infinite) => Ordering::Less,
            (Gain::Infinite, Gain::Finite(_)) => Ordering::Greater,
            (Gain::Infinite, Gain::Infinite) => Ordering::Equal,
        }
    }
}

impl From<Rational> for Gain {
    fn from(value: Rational) -> Self {
        Gain::Finite(value)
    }
}

impl fmt::Display for Gain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gain::Finite(g) => write!(f, "{}", Fraction(*g)),
            Gain::Infinite => f.write_str("+inf"),
        }
    }
}

/// Least common multiple of the denominators of `values` (1 for an empty slice).
pub(crate) fn common_denominator<'a>(values: impl IntoIterator<Item = &'a Rational>) -> i64 {
    values
        .into_iter()
        .fold(1i64, |acc, v| acc.lcm(v.denom()))
}

/// Scales `value` by `scale`, which must be a multiple of its denominator.
pub(crate) fn scaled(value: &Rational, scale: i64) -> i128 {
    i128::from(*value.numer()) * i128::from(scale / value.denom())
}

/// Formats a rational as `p/q`, or `p` when integral.
#[derive(Clone, Copy, Debug)]
pub struct Fraction(pub Rational);

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

/// Formats a rational as an exact decimal when its denominator has only the
/// prime factors 2 and 5, and as `p/q` otherwise.
#[derive(Clone, Copy, Debug)]
pub struct Decimal(pub Rational);

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let value = self.0;
        let mut denom = *value.denom();
        let (mut twos, mut fives) = (0u32, 0u32);
        while denom % 2 == 0 {
            denom /= 2;
            twos += 1;
        }
        while denom % 5 == 0 {
            denom /= 5;
            fives += 1;
        }
        if denom != 1 {
            return Fraction(value).fmt(f);
        }
        let digits = twos.max(fives);
        let shift = 10i128.pow(digits);
        let scaled = i128::from(*value.numer()) * shift / i128::from(*value.denom());
        let sign = if value.is_negative() { "-" } else { "" };
        let magnitude = scaled.abs();
        let whole = magnitude / shift;
        if digits == 0 {
            write!(f, "{sign}{whole}")
        } else {
            let frac = magnitude % shift;
            write!(f, "{sign}{whole}.{frac:0width$}", width = digits as usize)
        }
    }
}

/// Parses `p/q`, `p` or a plain decimal such as `22.5` into an exact rational.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    if let Some((p, q)) = text.split_once('/') {
        let p: i64 = p.trim().parse().ok()?;
        let q: i64 = q.trim().parse().ok()?;
        if q == 0 {
            return None;
        }
        return Some(Rational::new(p, q));
    }
    if let Some((whole, frac)) = text.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let negative = whole.starts_with('-');
        let whole_val: i64 = if whole.is_empty() || whole == "-" {
            0
        } else {
            whole.parse().ok()?
        };
        let denom = 10i64.checked_pow(u32::try_from(frac.len()).ok()?)?;
        let frac_val: i64 = frac.parse().ok()?;
        let magnitude = whole_val.abs().checked_mul(denom)?.checked_add(frac_val)?;
        let numer = if negative { -magnitude } else { magnitude };
        return Some(Rational::new(numer, denom));
    }
    text.parse::<i64>().ok().map(Rational::from_integer)
}

pub(crate) fn is_nonnegative(value: &Rational) -> bool {
    !value.is_negative()
}
