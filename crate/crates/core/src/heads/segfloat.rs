//! Exact, invertible sums of doubles.
//!
//! The accumulator holds `X + S` in fixed point, where `S` is the exact
//! sum and `X = sum(2^(4k) for k in -512..=512)`. Bits are grouped into
//! 52-bit segments; segment `j` covers bit positions `[52j, 52j + 52)`.
//! Only segments that differ from the matching segment of `X` are stored.
//! Because `X` has a one bit every fourth position, carries and borrows
//! stop within a segment or two.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, Zero};

use crate::error::{Error, Result};

const SEG: i64 = 52;
const MASK: u64 = (1 << SEG) - 1;
/// Segment range holding the one bits of `X`.
pub const LOW_SEGMENT: i32 = -40;
pub const HIGH_SEGMENT: i32 = 39;
/// Position of the least significant double bit, `2^-1074`.
const MIN_EXP: i64 = -1074;

/// Segment `j` of `X`.
pub fn x_segment(j: i32) -> u64 {
    let base = SEG * j as i64;
    let mut s = 0;
    for t in (0..SEG).step_by(4) {
        let p = base + t;
        if (-2048..=2048).contains(&p) {
            s |= 1 << t;
        }
    }
    s
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SegmentedFloat {
    segs: BTreeMap<i32, u64>,
    touched: usize,
}

impl SegmentedFloat {
    pub fn new() -> Self {
        Self::default()
    }

    fn get(&self, j: i32) -> u64 {
        self.segs.get(&j).copied().unwrap_or_else(|| x_segment(j))
    }

    fn set(&mut self, j: i32, v: u64) {
        if v == x_segment(j) {
            self.segs.remove(&j);
        } else {
            self.segs.insert(j, v);
        }
        self.touched += 1;
    }

    pub fn add(&mut self, s: f64) -> Result<()> {
        self.apply(s, false)
    }

    pub fn sub(&mut self, s: f64) -> Result<()> {
        self.apply(s, true)
    }

    /// Add `s`, or subtract it when `negate` is set.
    pub fn apply(&mut self, s: f64, negate: bool) -> Result<()> {
        if !s.is_finite() {
            return Err(Error::NonFinite(s));
        }
        self.touched = 0;
        if s == 0.0 {
            return Ok(());
        }
        let bits = s.to_bits();
        let exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & MASK;
        let (m, e) = if exp == 0 { (frac, MIN_EXP) } else { (frac | (1 << 52), exp - 1075) };
        let subtract = (s < 0.0) != negate;
        let j0 = e.div_euclid(SEG) as i32;
        let wide = (m as u128) << e.rem_euclid(SEG);
        let chunks = [(wide as u64) & MASK, ((wide >> SEG) as u64) & MASK];
        let mut j = j0;
        let mut carry = 0u64;
        for i in 0.. {
            let part = chunks.get(i).copied().unwrap_or(0) + carry;
            if part == 0 {
                if i >= chunks.len() {
                    break;
                }
                j += 1;
                continue;
            }
            let cur = self.get(j);
            if subtract {
                if cur >= part {
                    self.set(j, cur - part);
                    carry = 0;
                } else {
                    self.set(j, cur + (1 << SEG) - part);
                    carry = 1;
                }
            } else {
                let v = cur + part;
                self.set(j, v & MASK);
                carry = v >> SEG;
            }
            j += 1;
        }
        Ok(())
    }

    /// Segments written by the last `apply`.
    pub fn last_touched(&self) -> usize {
        self.touched
    }

    pub fn stored_segments(&self) -> usize {
        self.segs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.segs.is_empty()
    }

    /// The exact sum as an integer multiple of `2^-1074`.
    pub fn exact(&self) -> BigInt {
        // The lowest touched segment starts below 2^-1074; bits under it
        // never change, so the final shift is exact.
        let base = SEG * MIN_EXP.div_euclid(SEG);
        let mut out = BigInt::zero();
        for (&j, &v) in &self.segs {
            let d = BigInt::from(v) - BigInt::from(x_segment(j));
            out += d << (SEG * j as i64 - base) as usize;
        }
        out >> (MIN_EXP - base) as usize
    }

    /// Nearest double, ties to even.
    pub fn to_float(&self) -> f64 {
        self.to_float_checked().0
    }

    /// Nearest double and whether the exact sum overflowed the double
    /// range (the double is then a signed infinity).
    pub fn to_float_checked(&self) -> (f64, bool) {
        let n = self.exact();
        let (sign, mag) = n.into_parts();
        if sign == Sign::NoSign {
            return (0.0, false);
        }
        let (v, overflow) = round_scaled(&mag);
        (if sign == Sign::Minus { -v } else { v }, overflow)
    }
}

/// `mag * 2^-1074` rounded to the nearest double.
fn round_scaled(mag: &BigUint) -> (f64, bool) {
    let len = mag.bits();
    // Keep 53 significant bits; subnormals keep fewer.
    let shift = len.saturating_sub(53);
    let mut q = mag >> shift;
    let mut e = shift as i64;
    if shift > 0 {
        let rem = mag - (&q << shift);
        let half = BigUint::one() << (shift - 1);
        if rem > half || (rem == half && q.bit(0)) {
            q += 1u32;
        }
        if q.bits() > 53 {
            q >>= 1;
            e += 1;
        }
    }
    let q: u64 = q.try_into().expect("53-bit mantissa");
    // value = q * 2^(e - 1074)
    if q < 1 << 52 {
        // Only reachable with e == 0: a subnormal or the smallest normals.
        return (f64::from_bits(q), false);
    }
    let biased = e + 1; // exponent field of q * 2^(e-1074) with q in [2^52, 2^53)
    if biased >= 0x7ff {
        return (f64::INFINITY, true);
    }
    (f64::from_bits(((biased as u64) << 52) | (q & MASK)), false)
}
