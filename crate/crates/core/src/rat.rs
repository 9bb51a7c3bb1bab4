//! Exact rational arithmetic helpers.
//!
//! All semantic computations in this crate are exact; floating point is never
//! used. `Rational` is an arbitrary-precision fraction kept in reduced form
//! with a positive denominator.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

/// Integer as a rational.
pub fn int(n: i64) -> Rational {
    BigRational::from_integer(BigInt::from(n))
}

/// `num/den` as a rational. Panics on zero denominator.
pub fn rat(num: i64, den: i64) -> Rational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn is_integer(r: &Rational) -> bool {
    r.denom().is_one()
}

pub fn to_i64(r: &Rational) -> Option<i64> {
    if is_integer(r) {
        r.numer().to_i64()
    } else {
        None
    }
}

pub fn to_u64(r: &Rational) -> Option<u64> {
    if is_integer(r) && !r.is_negative() {
        r.numer().to_u64()
    } else {
        None
    }
}

/// Exact floor as a big integer.
pub fn floor_int(r: &Rational) -> BigInt {
    r.floor().to_integer()
}

pub fn lcm_u64(a: u64, b: u64) -> u64 {
    if a == 0 || b == 0 {
        return 0;
    }
    a / a.gcd(&b) * b
}

/// Least common multiple of the denominators of `values`, as `u64`.
pub fn denom_lcm<'a>(values: impl Iterator<Item = &'a Rational>) -> Option<u64> {
    let mut acc = BigInt::one();
    for v in values {
        acc = acc.lcm(v.denom());
    }
    acc.to_u64()
}

/// Parses `"3"`, `"-2"`, `"2.5"`, `"5/2"`, `"-1/3"`, `"inf"` handled by callers.
pub fn parse_rational(s: &str) -> Result<Rational, String> {
    let s = s.trim();
    if s.is_empty() {
        return Err("empty rational literal".into());
    }
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num
            .trim()
            .parse()
            .map_err(|_| format!("invalid numerator `{num}`"))?;
        let d: BigInt = den
            .trim()
            .parse()
            .map_err(|_| format!("invalid denominator `{den}`"))?;
        if d.is_zero() {
            return Err(format!("zero denominator in `{s}`"));
        }
        return Ok(BigRational::new(n, d));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        let neg = whole.trim_start().starts_with('-');
        let whole = if whole.is_empty() || whole == "-" {
            BigInt::zero()
        } else {
            whole
                .parse()
                .map_err(|_| format!("invalid decimal `{s}`"))?
        };
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(format!("invalid decimal `{s}`"));
        }
        let digits = frac.len() as u32;
        let frac_part: BigInt = frac.parse().map_err(|_| format!("invalid decimal `{s}`"))?;
        let den = BigInt::from(10u32).pow(digits);
        let mut numer = whole * &den;
        if neg {
            numer -= frac_part;
        } else {
            numer += frac_part;
        }
        return Ok(BigRational::new(numer, den));
    }
    let n: BigInt = s.parse().map_err(|_| format!("invalid rational `{s}`"))?;
    Ok(BigRational::from_integer(n))
}

/// Renders exactly: integers plainly, finite decimals (denominator `2^a 5^b`)
/// in decimal notation, everything else as `num/den`.
pub fn format_rational(r: &Rational) -> String {
    if is_integer(r) {
        return r.numer().to_string();
    }
    let mut d = r.denom().clone();
    let mut twos = 0u32;
    let mut fives = 0u32;
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    while (&d % &two).is_zero() {
        d /= &two;
        twos += 1;
    }
    while (&d % &five).is_zero() {
        d /= &five;
        fives += 1;
    }
    if d.is_one() {
        let digits = twos.max(fives);
        let scaled = r.numer() * BigInt::from(10u32).pow(digits) / r.denom();
        let neg = scaled.is_negative();
        let mut body = scaled.abs().to_string();
        let digits = digits as usize;
        while body.len() <= digits {
            body.insert(0, '0');
        }
        body.insert(body.len() - digits, '.');
        if neg {
            body.insert(0, '-');
        }
        body
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}
