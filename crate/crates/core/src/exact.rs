//! Exact arithmetic helpers: decimal parsing, a small/big hybrid rational
//! used inside the simplex tableau, and fraction-free rank computation.

use std::cmp::Ordering;
use std::fmt;

use num::bigint::Sign;
use num::rational::Ratio;
use num::traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub};
use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};

use crate::error::{BmeError, Result};

/// Parses a decimal literal (`12`, `-0.25`, `1.5e-3`) or a fraction (`3/8`)
/// into an exact rational. No floating point is involved.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let s = text.trim();
    if s.is_empty() {
        return Err(BmeError::parse(0, "empty number"));
    }
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num
            .trim()
            .parse()
            .map_err(|_| BmeError::parse(0, format!("bad numerator in {s:?}")))?;
        let den: BigInt = den
            .trim()
            .parse()
            .map_err(|_| BmeError::parse(0, format!("bad denominator in {s:?}")))?;
        if den.is_zero() {
            return Err(BmeError::parse(0, format!("zero denominator in {s:?}")));
        }
        return Ok(BigRational::new(num, den));
    }

    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let exp: i64 = s[pos + 1..]
                .parse()
                .map_err(|_| BmeError::parse(pos + 1, format!("bad exponent in {s:?}")))?;
            (&s[..pos], exp)
        }
        None => (s, 0),
    };
    let (negative, body) = match mantissa.as_bytes().first() {
        Some(b'-') => (true, &mantissa[1..]),
        Some(b'+') => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(BmeError::parse(0, format!("no digits in {s:?}")));
    }
    if let Some(pos) = int_part
        .bytes()
        .chain(frac_part.bytes())
        .position(|b| !b.is_ascii_digit())
    {
        return Err(BmeError::parse(pos, format!("invalid number {s:?}")));
    }
    let digits = format!("{int_part}{frac_part}");
    let mut numer: BigInt = digits.parse().unwrap_or_else(|_| BigInt::zero());
    if negative {
        numer = -numer;
    }
    let scale = exponent - frac_part.len() as i64;
    let ten = BigInt::from(10u32);
    let value = if scale >= 0 {
        BigRational::from_integer(numer * num::pow(ten, scale as usize))
    } else {
        BigRational::new(numer, num::pow(ten, (-scale) as usize))
    };
    Ok(value)
}

/// Renders a rational as `p` or `p/q`.
pub fn format_rational(q: &BigRational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// `2^k` as a rational.
pub fn pow2(k: usize) -> BigRational {
    BigRational::from_integer(BigInt::one() << k)
}

/// If `q` is a positive integral power of two, its exponent.
pub fn log2_exact(q: &BigRational) -> Option<usize> {
    if !q.is_integer() || !q.is_positive() {
        return None;
    }
    let n = q.numer();
    let bits = n.bits();
    if bits == 0 {
        return None;
    }
    let k = (bits - 1) as usize;
    if *n == (BigInt::one() << k) {
        Some(k)
    } else {
        None
    }
}

/// Hybrid rational: machine-word ratio while it fits, arbitrary precision
/// once any operation would overflow.
#[derive(Clone)]
pub(crate) enum Num {
    Small(Ratio<i64>),
    Big(BigRational),
}

impl fmt::Debug for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", format_rational(&self.to_big()))
    }
}

impl Num {
    pub fn zero() -> Self {
        Num::Small(Ratio::from_integer(0))
    }

    pub fn one() -> Self {
        Num::Small(Ratio::from_integer(1))
    }

    pub fn is_one(&self) -> bool {
        match self {
            Num::Small(r) => r.numer() == &1 && r.denom() == &1,
            Num::Big(b) => b.is_one(),
        }
    }

    pub fn from_big(q: &BigRational) -> Self {
        match (q.numer().to_i64(), q.denom().to_i64()) {
            (Some(n), Some(d)) if n != i64::MIN && d != i64::MIN => {
                Num::Small(Ratio::new_raw(n, d))
            }
            _ => Num::Big(q.clone()),
        }
    }

    pub fn to_big(&self) -> BigRational {
        match self {
            Num::Small(r) => BigRational::new_raw(BigInt::from(*r.numer()), BigInt::from(*r.denom())),
            Num::Big(b) => b.clone(),
        }
    }

    fn demote(b: BigRational) -> Self {
        Num::from_big(&b)
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Num::Small(r) => r.numer() == &0,
            Num::Big(b) => b.is_zero(),
        }
    }

    pub fn signum(&self) -> Ordering {
        match self {
            Num::Small(r) => r.numer().cmp(&0),
            Num::Big(b) => match b.numer().sign() {
                Sign::Minus => Ordering::Less,
                Sign::NoSign => Ordering::Equal,
                Sign::Plus => Ordering::Greater,
            },
        }
    }

    pub fn is_negative(&self) -> bool {
        self.signum() == Ordering::Less
    }

    pub fn is_positive(&self) -> bool {
        self.signum() == Ordering::Greater
    }

    fn binop(
        &self,
        other: &Num,
        small: impl Fn(&Ratio<i64>, &Ratio<i64>) -> Option<Ratio<i64>>,
        big: impl Fn(&BigRational, &BigRational) -> BigRational,
    ) -> Num {
        if let (Num::Small(a), Num::Small(b)) = (self, other) {
            if let Some(r) = small(a, b) {
                if *r.numer() != i64::MIN && *r.denom() != i64::MIN {
                    return Num::Small(r);
                }
            }
        }
        Num::demote(big(&self.to_big(), &other.to_big()))
    }

    pub fn add(&self, other: &Num) -> Num {
        self.binop(other, |a, b| a.checked_add(b), |a, b| a + b)
    }

    pub fn sub(&self, other: &Num) -> Num {
        self.binop(other, |a, b| a.checked_sub(b), |a, b| a - b)
    }

    pub fn mul(&self, other: &Num) -> Num {
        if self.is_zero() || other.is_zero() {
            return Num::zero();
        }
        self.binop(other, |a, b| a.checked_mul(b), |a, b| a * b)
    }

    pub fn div(&self, other: &Num) -> Num {
        assert!(!other.is_zero(), "division by zero");
        self.binop(other, |a, b| a.checked_div(b), |a, b| a / b)
    }

    pub fn neg(&self) -> Num {
        match self {
            Num::Small(r) => Num::Small(-*r),
            Num::Big(b) => Num::Big(-b.clone()),
        }
    }

    pub fn cmp(&self, other: &Num) -> Ordering {
        match (self, other) {
            (Num::Small(a), Num::Small(b)) => a.cmp(b),
            _ => self.to_big().cmp(&other.to_big()),
        }
    }
}

/// Rank of an integer matrix by fraction-free (Bareiss) elimination.
/// Runs on `i128` and restarts on `BigInt` if an intermediate overflows.
pub fn integer_rank(rows: &[Vec<BigInt>]) -> usize {
    let small: Option<Vec<Vec<i128>>> = rows
        .iter()
        .map(|r| r.iter().map(|v| v.to_i128()).collect())
        .collect();
    if let Some(mut m) = small {
        if let Some(rank) = bareiss_rank_i128(&mut m) {
            return rank;
        }
    }
    bareiss_rank_big(rows.to_vec())
}

fn bareiss_rank_i128(m: &mut [Vec<i128>]) -> Option<usize> {
    let rows = m.len();
    if rows == 0 {
        return Some(0);
    }
    let cols = m[0].len();
    let mut rank = 0;
    let mut prev: i128 = 1;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(pivot) = (rank..rows).find(|&r| m[r][col] != 0) else {
            continue;
        };
        m.swap(rank, pivot);
        let p = m[rank][col];
        for r in rank + 1..rows {
            let f = m[r][col];
            for c in col..cols {
                let lhs = m[r][c].checked_mul(p)?;
                let rhs = m[rank][c].checked_mul(f)?;
                m[r][c] = lhs.checked_sub(rhs)? / prev;
            }
        }
        prev = p;
        rank += 1;
    }
    Some(rank)
}

fn bareiss_rank_big(mut m: Vec<Vec<BigInt>>) -> usize {
    let rows = m.len();
    if rows == 0 {
        return 0;
    }
    let cols = m[0].len();
    let mut rank = 0;
    let mut prev = BigInt::one();
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(pivot) = (rank..rows).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, pivot);
        let p = m[rank][col].clone();
        for r in rank + 1..rows {
            let f = m[r][col].clone();
            for c in col..cols {
                let v = (&m[r][c] * &p - &m[rank][c] * &f) / &prev;
                m[r][c] = v;
            }
        }
        prev = p;
        rank += 1;
    }
    rank
}

/// Rank of a rational matrix. Rows are scaled to integers first.
pub fn rational_rank(rows: &[Vec<BigRational>]) -> usize {
    let ints: Vec<Vec<BigInt>> = rows.iter().map(|r| clear_denominators(r)).collect();
    integer_rank(&ints)
}

/// Multiplies a rational row by the lcm of its denominators.
pub fn clear_denominators(row: &[BigRational]) -> Vec<BigInt> {
    use num::Integer;
    let lcm = row
        .iter()
        .fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
    row.iter()
        .map(|q| q.numer() * (&lcm / q.denom()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn decimal_parsing_is_exact() {
        assert_eq!(parse_rational("0.1").unwrap(), q(1, 10));
        assert_eq!(parse_rational("-2.50").unwrap(), q(-5, 2));
        assert_eq!(parse_rational("3").unwrap(), q(3, 1));
        assert_eq!(parse_rational("1.5e-3").unwrap(), q(3, 2000));
        assert_eq!(parse_rational("2E2").unwrap(), q(200, 1));
        assert_eq!(parse_rational(".5").unwrap(), q(1, 2));
        assert_eq!(parse_rational("6/4").unwrap(), q(3, 2));
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("").is_err());
        assert!(parse_rational("1.2.3").is_err());
    }

    #[test]
    fn powers_of_two() {
        assert_eq!(log2_exact(&pow2(7)), Some(7));
        assert_eq!(log2_exact(&q(1, 1)), Some(0));
        assert_eq!(log2_exact(&q(6, 1)), None);
        assert_eq!(log2_exact(&q(1, 2)), None);
        assert_eq!(log2_exact(&q(0, 1)), None);
    }

    #[test]
    fn hybrid_overflow_promotes() {
        let a = Num::from_big(&q(i64::MAX, 1));
        let b = a.add(&a);
        assert!(matches!(b, Num::Big(_)));
        assert_eq!(b.to_big(), q(i64::MAX, 1) * q(2, 1));
        let c = b.sub(&a);
        assert!(matches!(c, Num::Small(_)));
        let d = Num::from_big(&q(3, 7)).mul(&Num::from_big(&q(7, 3)));
        assert_eq!(d.to_big(), q(1, 1));
    }

    #[test]
    fn rank_small_and_big_agree() {
        let rows = vec![
            vec![BigInt::from(1), BigInt::from(2), BigInt::from(3)],
            vec![BigInt::from(2), BigInt::from(4), BigInt::from(6)],
            vec![BigInt::from(0), BigInt::from(1), BigInt::from(1)],
        ];
        assert_eq!(integer_rank(&rows), 2);
        assert_eq!(bareiss_rank_big(rows), 2);
        let huge: BigInt = BigInt::one() << 100;
        let rows = vec![
            vec![huge.clone(), BigInt::from(1)],
            vec![BigInt::from(1), huge.clone()],
        ];
        assert_eq!(integer_rank(&rows), 2);
    }
}
