//! Dense kernels with reproducible reductions.
//!
//! Row-times-vector products go through [`ExactSum`], a correctly rounded
//! accumulator, so a margin `x_k . beta` does not depend on the order in which
//! the columns are visited. That is what makes every solver in this crate
//! exactly equivariant under column permutations. Column reductions over
//! samples (`X^T u`) are plain sequential sums in row order: the row order
//! never changes under a column permutation, so nothing more is needed there.

use ndarray::{Array1, ArrayView1, ArrayView2};

/// Correctly rounded floating-point summation.
///
/// Every finite double is an integer multiple of `2^-1074`, so the exact sum
/// of any batch of them is an integer in that unit. The accumulator holds it
/// in signed 32-bit digits (carry-save, one `i64` per digit) and rounds once,
/// half-to-even, in [`ExactSum::total`]. The result depends only on the
/// multiset of inputs, never on their order. Inputs must be finite; at most
/// `2^30` values may be added between totals.
#[derive(Clone, Debug)]
pub struct ExactSum {
    digits: [i64; DIGITS],
    lo: usize,
    hi: usize,
    // Signs of zero inputs, so a sum of only `-0.0` stays `-0.0`.
    neg_zero: bool,
    pos_zero: bool,
}

// Exponents reach 2^971 with a 53-bit significand on top; 66 digits cover
// that, and two more absorb carries and the sign.
const DIGITS: usize = 68;
const DIGIT_BITS: u32 = 32;

impl Default for ExactSum {
    fn default() -> Self {
        Self::new()
    }
}

impl ExactSum {
    pub fn new() -> Self {
        ExactSum {
            digits: [0; DIGITS],
            lo: DIGITS,
            hi: 0,
            neg_zero: false,
            pos_zero: false,
        }
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        debug_assert!(value.is_finite());
        let bits = value.to_bits();
        let biased = ((bits >> 52) & 0x7ff) as u32;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, shift) = if biased == 0 {
            if frac == 0 {
                if bits >> 63 == 1 {
                    self.neg_zero = true;
                } else {
                    self.pos_zero = true;
                }
                return;
            }
            (frac, 0)
        } else {
            (frac | (1u64 << 52), biased - 1)
        };
        let k = (shift / DIGIT_BITS) as usize;
        let r = shift % DIGIT_BITS;
        // The shifted significand spans at most 85 bits: `low` holds the
        // bottom 64, `high` the rest.
        let low = mant << r;
        let high = (mant >> 1) >> (63 - r);
        // 0 for positive values, -1 for negative: (x ^ sign) - sign negates.
        let sign = -((bits >> 63) as i64);
        let slot = &mut self.digits[k..k + 3];
        slot[0] += ((low & 0xffff_ffff) as i64 ^ sign) - sign;
        slot[1] += ((low >> 32) as i64 ^ sign) - sign;
        slot[2] += (high as i64 ^ sign) - sign;
        self.lo = self.lo.min(k);
        self.hi = self.hi.max(k + 2);
    }

    /// Folds another accumulator into this one. Integer addition is exact,
    /// so merging never changes the rounded total.
    pub fn merge(&mut self, other: &ExactSum) {
        self.neg_zero |= other.neg_zero;
        self.pos_zero |= other.pos_zero;
        if other.lo > other.hi {
            return;
        }
        for i in other.lo..=other.hi {
            self.digits[i] += other.digits[i];
        }
        self.lo = self.lo.min(other.lo);
        self.hi = self.hi.max(other.hi);
    }

    pub fn total(&self) -> f64 {
        if self.lo > self.hi {
            return if self.neg_zero && !self.pos_zero { -0.0 } else { 0.0 };
        }
        let mut d = self.digits;
        let top = propagate(&mut d, self.lo);
        let negative = d[top] < 0;
        if negative {
            for v in d[self.lo..=top].iter_mut() {
                *v = -*v;
            }
            propagate(&mut d, self.lo);
        }
        let magnitude = round_digits(&d[..=top], self.lo);
        if negative {
            -magnitude
        } else {
            magnitude
        }
    }
}

/// Brings digits `lo..` into `[0, 2^32)`, pushing the signed carry to the top
/// digit. Returns the index of that top digit.
fn propagate(d: &mut [i64; DIGITS], lo: usize) -> usize {
    for i in lo..DIGITS - 1 {
        let carry = d[i] >> DIGIT_BITS;
        d[i] -= carry << DIGIT_BITS;
        d[i + 1] += carry;
    }
    DIGITS - 1
}

/// Rounds a nonnegative digit string (value `sum d[i] 2^(32 i - 1074)`) to
/// the nearest double, ties to even.
fn round_digits(d: &[i64], lo: usize) -> f64 {
    let Some(h) = (lo..d.len()).rev().find(|&i| d[i] != 0) else {
        return 0.0;
    };
    // Top three digits as one integer, with everything below folded into a
    // sticky bit.
    let base = h as i64 - 2;
    let mut top: u128 = 0;
    for i in 0..3 {
        let idx = base + i;
        if idx >= 0 {
            top |= (d[idx as usize] as u128) << (DIGIT_BITS as i64 * i);
        }
    }
    let sticky = base > 0 && d[lo.min(base as usize)..base as usize].iter().any(|&v| v != 0);
    let lsb_exp = DIGIT_BITS as i64 * base - 1074;

    let bitlen = 128 - top.leading_zeros() as i64;
    // Keep 53 significant bits, but never go below the subnormal unit 2^-1074.
    let shift = (bitlen - 53).max(-1074 - lsb_exp).max(0);
    let mut mant = top >> shift;
    let mut exp = lsb_exp + shift;
    if shift > 0 {
        let rem = top & ((1u128 << shift) - 1);
        let half = 1u128 << (shift - 1);
        if rem > half || (rem == half && (sticky || mant & 1 == 1)) {
            mant += 1;
        }
    }
    if mant >> 53 != 0 {
        mant >>= 1;
        exp += 1;
    }
    compose_f64(mant as u64, exp)
}

/// `mant * 2^exp` for a value already representable as a double.
fn compose_f64(mut mant: u64, mut exp: i64) -> f64 {
    if mant == 0 {
        return 0.0;
    }
    let room = (mant.leading_zeros() as i64 - 11).min(exp + 1074).max(0);
    mant <<= room;
    exp -= room;
    if mant >> 52 == 0 {
        // subnormal: exp is -1074
        return f64::from_bits(mant);
    }
    let field = exp + 52 + 1023;
    if field >= 0x7ff {
        return f64::INFINITY;
    }
    f64::from_bits(((field as u64) << 52) | (mant & ((1u64 << 52) - 1)))
}

impl Extend<f64> for ExactSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for v in iter {
            self.add(v);
        }
    }
}

/// Correctly rounded sum of `values`.
pub fn exact_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = ExactSum::new();
    acc.extend(values);
    acc.total()
}

/// `a . b` with each product rounded once and the sum correctly rounded.
#[inline]
pub fn exact_dot(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    // Four independent banks break the store-to-load dependency between
    // consecutive terms that land on the same digits.
    let mut banks = [ExactSum::new(), ExactSum::new(), ExactSum::new(), ExactSum::new()];
    match (a.as_slice(), b.as_slice()) {
        (Some(a), Some(b)) => {
            let mut ca = a.chunks_exact(4);
            let mut cb = b.chunks_exact(4);
            for (xa, xb) in ca.by_ref().zip(cb.by_ref()) {
                for i in 0..4 {
                    banks[i].add(xa[i] * xb[i]);
                }
            }
            for (&x, &y) in ca.remainder().iter().zip(cb.remainder()) {
                banks[0].add(x * y);
            }
        }
        _ => {
            for (i, (&x, &y)) in a.iter().zip(b.iter()).enumerate() {
                banks[i & 3].add(x * y);
            }
        }
    }
    let [mut acc, b1, b2, b3] = banks;
    acc.merge(&b1);
    acc.merge(&b2);
    acc.merge(&b3);
    acc.total()
}

/// `X beta`, one exactly rounded dot product per row.
pub fn mat_vec(x: ArrayView2<'_, f64>, beta: ArrayView1<'_, f64>) -> Array1<f64> {
    x.rows().into_iter().map(|row| exact_dot(row, beta)).collect()
}

/// `X beta` where only the listed columns of `beta` may be nonzero.
pub fn mat_vec_cols(x: ArrayView2<'_, f64>, beta: ArrayView1<'_, f64>, cols: &[usize]) -> Array1<f64> {
    x.rows()
        .into_iter()
        .map(|row| {
            let mut acc = ExactSum::new();
            for &j in cols {
                let b = beta[j];
                let v = row[j];
                if b != 0.0 && v != 0.0 {
                    acc.add(v * b);
                }
            }
            acc.total()
        })
        .collect()
}

/// `X^T u`, summing over rows in index order. Rows with `u_k = 0` are
/// skipped.
pub fn mat_t_vec(x: ArrayView2<'_, f64>, u: ArrayView1<'_, f64>) -> Array1<f64> {
    let p = x.ncols();
    let mut out = vec![0.0; p];
    let x = x.as_standard_layout();
    let rows = x.as_slice().expect("standard layout");
    if p > 0 {
        for (row, &uk) in rows.chunks_exact(p).zip(u.iter()) {
            if uk == 0.0 {
                continue;
            }
            for (o, &xv) in out.iter_mut().zip(row) {
                *o += uk * xv;
            }
        }
    }
    Array1::from_vec(out)
}

pub fn norm2(v: ArrayView1<'_, f64>) -> f64 {
    exact_sum(v.iter().map(|x| x * x)).sqrt()
}

pub fn norm_inf(v: ArrayView1<'_, f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    /// Shewchuk's partials algorithm with the half-even fix-up from Python's
    /// `math.fsum`; an independent correctly rounded reference.
    fn fsum(values: &[f64]) -> f64 {
        let mut partials: Vec<f64> = Vec::new();
        for &v in values {
            let mut x = v;
            let mut kept = 0;
            for i in 0..partials.len() {
                let mut y = partials[i];
                if x.abs() < y.abs() {
                    std::mem::swap(&mut x, &mut y);
                }
                let hi = x + y;
                let lo = y - (hi - x);
                if lo != 0.0 {
                    partials[kept] = lo;
                    kept += 1;
                }
                x = hi;
            }
            partials.truncate(kept);
            partials.push(x);
        }
        let mut n = partials.len();
        if n == 0 {
            return 0.0;
        }
        n -= 1;
        let mut hi = partials[n];
        let mut lo = 0.0;
        while n > 0 {
            let x = hi;
            n -= 1;
            let y = partials[n];
            hi = x + y;
            lo = y - (hi - x);
            if lo != 0.0 {
                break;
            }
        }
        if n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) || (lo > 0.0 && partials[n - 1] > 0.0)) {
            let y = lo * 2.0;
            let x = hi + y;
            if y == x - hi {
                hi = x;
            }
        }
        hi
    }

    // Magnitudes stay below 2^1013 so that sums of a few dozen terms cannot
    // overflow; the reference turns overflow into NaN.
    fn wide_float() -> impl Strategy<Value = f64> {
        (any::<bool>(), 1u64..(1 << 53), -1100i32..960).prop_map(|(neg, m, e)| {
            let v = m as f64 * 2f64.powi(e);
            if neg { -v } else { v }
        })
    }

    #[test]
    fn cancellation_is_exact() {
        assert_eq!(exact_sum([1e100, 1.0, -1e100]), 1.0);
        assert_eq!(exact_sum([0.1, 0.2, 0.3, -0.6]), exact_sum([-0.6, 0.3, 0.2, 0.1]));
        assert_eq!(exact_sum(std::iter::repeat(0.1).take(10)), 1.0);
    }

    #[test]
    fn signed_zeros() {
        assert!(exact_sum([-0.0]).is_sign_negative());
        assert!(exact_sum([-0.0, -0.0]).is_sign_negative());
        assert!(exact_sum([-0.0, 0.0]).is_sign_positive());
        assert!(exact_sum([-1.0, 1.0]).is_sign_positive());
        assert!(exact_sum([-1.0, 1.0, -0.0]).is_sign_positive());
        assert!(exact_sum([]).is_sign_positive());
        let mut a = ExactSum::new();
        a.add(-0.0);
        a.merge(&ExactSum::new());
        assert!(a.total().is_sign_negative());
    }

    #[test]
    fn extreme_magnitudes() {
        let tiny = f64::from_bits(1);
        assert_eq!(exact_sum([tiny]), tiny);
        assert_eq!(exact_sum([tiny, tiny, -tiny]), tiny);
        assert_eq!(exact_sum([f64::MIN_POSITIVE, -tiny]), f64::MIN_POSITIVE - tiny);
        assert_eq!(exact_sum([f64::MAX, -f64::MAX, 1.5]), 1.5);
        assert_eq!(exact_sum([f64::MAX, f64::MAX]), f64::INFINITY);
        assert_eq!(exact_sum([-3.25]), -3.25);
        assert_eq!(exact_sum([1e308, 1e-308, -1e308]), 1e-308);
    }

    #[test]
    fn empty_sum_is_zero() {
        assert_eq!(exact_sum([]), 0.0);
        assert_eq!(ExactSum::new().total(), 0.0);
    }

    #[test]
    fn half_even_rounding() {
        // 1 + 2^-53 is a tie; it must round to the even neighbour 1.0, and
        // 1 + 2^-53 + 2^-100 must round up.
        let half_ulp = 2f64.powi(-53);
        assert_eq!(exact_sum([1.0, half_ulp]), 1.0);
        assert_eq!(exact_sum([1.0, half_ulp, 2f64.powi(-100)]), 1.0 + 2.0 * half_ulp);
    }

    #[test]
    fn kernels_on_small_matrix() {
        let x = array![[1.0, 2.0], [3.0, -4.0], [0.0, 0.5]];
        let b = array![2.0, -1.0];
        assert_eq!(mat_vec(x.view(), b.view()), array![0.0, 10.0, -0.5]);
        assert_eq!(mat_vec_cols(x.view(), b.view(), &[0]), array![2.0, 6.0, 0.0]);
        let u = array![1.0, 0.0, 2.0];
        assert_eq!(mat_t_vec(x.view(), u.view()), array![1.0, 3.0]);
    }

    proptest! {
        #[test]
        fn order_independent(mut v in proptest::collection::vec(-1e6f64..1e6, 0..60), seed in any::<u64>()) {
            let forward = exact_sum(v.iter().copied());
            // deterministic shuffle
            let mut s = seed | 1;
            for i in (1..v.len()).rev() {
                s ^= s << 13; s ^= s >> 7; s ^= s << 17;
                v.swap(i, (s % (i as u64 + 1)) as usize);
            }
            prop_assert_eq!(forward, exact_sum(v.iter().copied()));
        }

        #[test]
        fn matches_reference(v in proptest::collection::vec(wide_float(), 0..40)) {
            prop_assert_eq!(exact_sum(v.iter().copied()).to_bits(), fsum(&v).to_bits());
        }

        #[test]
        fn matches_reference_with_cancellation(v in proptest::collection::vec(-1e3f64..1e3, 1..40)) {
            let mut all = v.clone();
            all.extend(v.iter().skip(1).map(|x| -x * (1.0 + f64::EPSILON)));
            prop_assert_eq!(exact_sum(all.iter().copied()).to_bits(), fsum(&all).to_bits());
        }

        #[test]
        fn close_to_naive(v in proptest::collection::vec(-1.0f64..1.0, 1..100)) {
            let naive: f64 = v.iter().sum();
            prop_assert!((exact_sum(v.iter().copied()) - naive).abs() <= 1e-12);
        }
    }
}
