//! Exact rational values in `[0,1]` used for thresholds and transition possibilities.

use num_rational::Ratio;
use num_traits::{One, Zero};

/// Exact rational number, always kept in lowest terms with a positive denominator.
pub type Rat = Ratio<i64>;

pub fn rat(num: i64, den: i64) -> Rat {
    Ratio::new(num, den)
}

pub fn zero() -> Rat {
    Rat::zero()
}

pub fn one() -> Rat {
    Rat::one()
}

/// `1 - r`, the negation that `V(Λ)` and `EV(Λ)` are closed under.
pub fn complement(r: Rat) -> Rat {
    Rat::one() - r
}

pub fn midpoint(a: Rat, b: Rat) -> Rat {
    (a + b) / Rat::from_integer(2)
}

pub fn in_unit(r: Rat) -> bool {
    r >= Rat::zero() && r <= Rat::one()
}

/// Canonical text form: `p/q`, or just `p` when the denominator is 1. Never decimal.
pub fn fmt_rat(r: Rat) -> String {
    if r.denom() == &1 {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `p/q`, a plain integer, or a decimal literal (converted exactly).
pub fn parse_rat(s: &str) -> Option<Rat> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: i64 = n.trim().parse().ok()?;
        let d: i64 = d.trim().parse().ok()?;
        if d <= 0 {
            return None;
        }
        return Some(Ratio::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let neg = int.trim_start().starts_with('-');
        let int: i64 = if int.is_empty() || int == "-" { 0 } else { int.parse().ok()? };
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let num: i64 = frac.parse().ok()?;
        let den = 10i64.checked_pow(frac.len() as u32)?;
        let frac_part = Ratio::new(num, den);
        let whole = Ratio::from_integer(int);
        return Some(if neg { whole - frac_part } else { whole + frac_part });
    }
    let n: i64 = s.parse().ok()?;
    Some(Ratio::from_integer(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_literals_convert_exactly() {
        assert_eq!(parse_rat("0.125").unwrap(), rat(1, 8));
        assert_eq!(parse_rat("0.2").unwrap(), rat(1, 5));
        assert_eq!(parse_rat("0.5").unwrap(), rat(1, 2));
        assert_eq!(parse_rat("1").unwrap(), one());
        assert_eq!(parse_rat("2/4").unwrap(), rat(1, 2));
    }

    #[test]
    fn formatting_never_uses_decimals() {
        assert_eq!(fmt_rat(rat(1, 2)), "1/2");
        assert_eq!(fmt_rat(one()), "1");
        assert_eq!(fmt_rat(zero()), "0");
        assert_eq!(fmt_rat(rat(7, 10)), "7/10");
    }
}
