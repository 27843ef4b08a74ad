//! Bi-infinite eventually periodic sequences and the dyadic shift metrics.
//!
//! A [`BiSeq`] stores a finite core flanked by two periodic tails:
//!
//! ```text
//!   ... left left left | core[0] core[1] ... core[c-1] | right right right ...
//!                        ^ core_start
//! ```
//!
//! Position `i < core_start` holds `left[(i - core_start) mod |left|]`, and
//! position `i >= core_start + |core|` holds
//! `right[(i - core_start - |core|) mod |right|]`. Every sequence the crate
//! manipulates (orbit legs, splices, loop switches, box corners) is of this
//! form, which is what makes the infinite metric sums exactly computable.

use std::fmt;

use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, pow2, pow2_inv, Rational};

/// The coordinate space of a sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValueSpace {
    /// Symbols `0..alphabet` with the discrete metric.
    Discrete { alphabet: u32 },
    /// Rationals in `[0, 1]` with the absolute-value metric.
    UnitInterval,
}

impl ValueSpace {
    pub fn contains(&self, v: &Rational) -> bool {
        match self {
            ValueSpace::Discrete { alphabet } => {
                v.is_integer() && !v.is_negative() && v.to_integer() < (*alphabet).into()
            }
            ValueSpace::UnitInterval => !v.is_negative() && *v <= Rational::one(),
        }
    }

    /// Per-coordinate distance: `ρ` for symbols, `|a - b|` on the interval.
    pub fn coordinate_distance(&self, a: &Rational, b: &Rational) -> Rational {
        match self {
            ValueSpace::Discrete { .. } => {
                if a == b {
                    Rational::zero()
                } else {
                    Rational::one()
                }
            }
            ValueSpace::UnitInterval => (a - b).abs(),
        }
    }
}

/// Direction of a tail comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Forward,
    Backward,
}

/// Where two sequences stop disagreeing.
///
/// Forward: `From(j)` means the sequences agree at every `i >= j` and
/// differ at `j - 1`. Backward: they agree at every `i <= j` and differ at
/// `j + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Agreement {
    Everywhere,
    From(i64),
    Never,
}

impl Agreement {
    pub fn exists(&self) -> bool {
        !matches!(self, Agreement::Never)
    }

    pub fn index(&self) -> Option<i64> {
        match self {
            Agreement::From(j) => Some(*j),
            _ => None,
        }
    }
}

impl Serialize for Agreement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Agreement::Everywhere => s.serialize_str("all"),
            Agreement::From(j) => s.serialize_i64(*j),
            Agreement::Never => s.serialize_none(),
        }
    }
}

/// An eventually periodic nonnegative rational sequence without a value
/// space; the intermediate form of per-coordinate distances and diameters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coeffs {
    left: Vec<Rational>,
    core: Vec<Rational>,
    right: Vec<Rational>,
    start: i64,
}

impl Coeffs {
    fn right_start(&self) -> i64 {
        self.start + self.core.len() as i64
    }

    pub fn value_at(&self, i: i64) -> &Rational {
        tail_value(&self.left, &self.core, &self.right, self.start, i)
    }

    /// `Σ v_i / 2^{|i|}` over `lo <= i < hi`, either bound optionally open.
    pub fn weighted_sum(&self, lo: Option<i64>, hi: Option<i64>) -> Rational {
        let left_edge = self.start.min(0);
        let right_edge = self.right_start().max(0);
        let mut total = Rational::zero();

        let lo_fin = match lo {
            Some(a) => a,
            None => {
                let c = left_edge.min(hi.unwrap_or(left_edge));
                total += self.left_tail_sum(c);
                c
            }
        };
        let hi_fin = match hi {
            Some(b) => b,
            None => {
                let c = right_edge.max(lo_fin);
                total += self.right_tail_sum(c);
                c
            }
        };
        for i in lo_fin..hi_fin {
            let v = self.value_at(i);
            if !v.is_zero() {
                total += v * pow2_inv(i.unsigned_abs());
            }
        }
        total
    }

    /// `max v_i` over `lo <= i < hi`, either bound optionally open; zero on
    /// an empty range. One period of each open tail decides the maximum.
    pub fn max_over(&self, lo: Option<i64>, hi: Option<i64>) -> Rational {
        let lo = lo.unwrap_or_else(|| self.start.min(hi.unwrap_or(self.start)) - self.left.len() as i64);
        let hi = hi.unwrap_or_else(|| self.right_start().max(lo) + self.right.len() as i64);
        (lo..hi).map(|i| self.value_at(i)).max().cloned().unwrap_or_else(Rational::zero)
    }

    /// `Σ_{i < c} v_i 2^{i}` for `c <= min(start, 0)`.
    fn left_tail_sum(&self, c: i64) -> Rational {
        debug_assert!(c <= self.start && c <= 0);
        let period = self.left.len() as u64;
        let mut block = Rational::zero();
        for j in 1..=period {
            let v = self.value_at(c - j as i64);
            if !v.is_zero() {
                block += v * pow2_inv(j);
            }
        }
        geometric(block, period) * pow2_inv(c.unsigned_abs())
    }

    /// `Σ_{i >= c} v_i 2^{-i}` for `c >= max(right_start, 0)`.
    fn right_tail_sum(&self, c: i64) -> Rational {
        debug_assert!(c >= self.right_start() && c >= 0);
        let period = self.right.len() as u64;
        let mut block = Rational::zero();
        for j in 0..period {
            let v = self.value_at(c + j as i64);
            if !v.is_zero() {
                block += v * pow2_inv(j);
            }
        }
        geometric(block, period) * pow2_inv(c as u64)
    }

    fn all_zero(word: &[Rational]) -> bool {
        word.iter().all(Zero::is_zero)
    }
}

/// `block / (1 - 2^{-period})`.
fn geometric(block: Rational, period: u64) -> Rational {
    let p = pow2(period);
    block * &p / (p - Rational::one())
}

fn tail_value<'a, T>(left: &'a [T], core: &'a [T], right: &'a [T], start: i64, i: i64) -> &'a T {
    if i < start {
        &left[(i - start).rem_euclid(left.len() as i64) as usize]
    } else {
        let offset = i - start;
        if (offset as usize) < core.len() {
            &core[offset as usize]
        } else {
            let rs = offset - core.len() as i64;
            &right[rs.rem_euclid(right.len() as i64) as usize]
        }
    }
}

fn minimal_period<T: PartialEq>(word: &[T]) -> usize {
    let n = word.len();
    (1..=n)
        .find(|&d| n.is_multiple_of(d) && (0..n - d).all(|i| word[i] == word[i + d]))
        .unwrap_or(n)
}

/// A bi-infinite eventually periodic sequence over a [`ValueSpace`].
///
/// Constructors other than [`BiSeq::raw`] return the canonical form, and
/// every operation preserves it, so derived equality coincides with
/// equality of the represented functions `ℤ → V` for canonical values.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BiSeq {
    space: ValueSpace,
    left: Vec<Rational>,
    core: Vec<Rational>,
    right: Vec<Rational>,
    core_start: i64,
}

impl BiSeq {
    /// Validates the parts without canonicalizing.
    pub fn raw(
        space: ValueSpace,
        left: Vec<Rational>,
        core: Vec<Rational>,
        right: Vec<Rational>,
        core_start: i64,
    ) -> Result<Self> {
        if left.is_empty() || right.is_empty() {
            return Err(Error::InvalidPoint("periodic words must be nonempty".into()));
        }
        if let ValueSpace::Discrete { alphabet: 0 } = space {
            return Err(Error::InvalidPoint("alphabet must be positive".into()));
        }
        if let Some(v) = left.iter().chain(&core).chain(&right).find(|v| !space.contains(v)) {
            return Err(Error::InvalidPoint(format!(
                "value {} outside {space:?}",
                rational::format(v)
            )));
        }
        Ok(BiSeq { space, left, core, right, core_start })
    }

    pub fn new(
        space: ValueSpace,
        left: Vec<Rational>,
        core: Vec<Rational>,
        right: Vec<Rational>,
        core_start: i64,
    ) -> Result<Self> {
        Ok(Self::raw(space, left, core, right, core_start)?.canonical())
    }

    /// Convenience constructor over a discrete alphabet.
    pub fn symbols(alphabet: u32, left: &[u32], core: &[u32], right: &[u32], core_start: i64) -> Result<Self> {
        let conv = |w: &[u32]| w.iter().map(|&s| rational::int(s.into())).collect();
        Self::new(ValueSpace::Discrete { alphabet }, conv(left), conv(core), conv(right), core_start)
    }

    /// Convenience constructor over `[0, 1]`.
    pub fn unit(left: &[Rational], core: &[Rational], right: &[Rational], core_start: i64) -> Result<Self> {
        Self::new(ValueSpace::UnitInterval, left.to_vec(), core.to_vec(), right.to_vec(), core_start)
    }

    pub fn constant(space: ValueSpace, value: Rational) -> Result<Self> {
        Self::new(space, vec![value.clone()], vec![], vec![value], 0)
    }

    /// The periodic sequence with `word[0]` at position `anchor`.
    pub fn periodic(space: ValueSpace, word: Vec<Rational>, anchor: i64) -> Result<Self> {
        Self::new(space, word.clone(), vec![], word, anchor)
    }

    pub fn space(&self) -> ValueSpace {
        self.space
    }

    pub fn left_period(&self) -> &[Rational] {
        &self.left
    }

    pub fn core(&self) -> &[Rational] {
        &self.core
    }

    pub fn right_period(&self) -> &[Rational] {
        &self.right
    }

    pub fn core_start(&self) -> i64 {
        self.core_start
    }

    /// First index of the right periodic tail.
    pub fn right_start(&self) -> i64 {
        self.core_start + self.core.len() as i64
    }

    pub fn value_at(&self, i: i64) -> &Rational {
        tail_value(&self.left, &self.core, &self.right, self.core_start, i)
    }

    /// Symbol at `i` for discrete sequences.
    pub fn symbol_at(&self, i: i64) -> u32 {
        u32::try_from(self.value_at(i).to_integer()).unwrap_or(u32::MAX)
    }

    fn is_purely_periodic_form(&self) -> bool {
        self.core.is_empty() && self.left == self.right
    }

    /// The unique representative with minimal periods and a maximal tails.
    ///
    /// Purely periodic sequences are anchored so that `core_start` lies in
    /// `[0, period)` and the period word is its lexicographically least
    /// rotation.
    pub fn canonical(&self) -> BiSeq {
        let mut left = self.left.clone();
        let mut core = self.core.clone();
        let mut right = self.right.clone();
        let mut cs = self.core_start;
        left.truncate(minimal_period(&left));
        right.truncate(minimal_period(&right));
        let (lp, rp) = (left.len(), right.len());
        let rs = cs + core.len() as i64;
        let right_fn = |i: i64| &right[(i - rs).rem_euclid(rp as i64) as usize];

        let purely_periodic = lp == rp
            && (0..lp as i64).all(|t| left[t as usize] == *right_fn(cs + t))
            && core.iter().enumerate().all(|(j, v)| v == right_fn(cs + j as i64));
        if purely_periodic {
            let rotations = (0..rp as i64).map(|k| (k, (0..rp as i64).map(|t| right_fn(k + t).clone()).collect::<Vec<_>>()));
            let (k, word) = rotations.min_by(|a, b| a.1.cmp(&b.1)).expect("nonempty period");
            return BiSeq { space: self.space, left: word.clone(), core: vec![], right: word, core_start: k };
        }

        while core.last().is_some_and(|v| *v == right[rp - 1]) {
            core.pop();
            right.rotate_right(1);
        }
        if core.is_empty() {
            // Slide the empty boundary left while both tails agree; the
            // sequence is not purely periodic, so this stops within
            // lcm(lp, rp) steps.
            let mut steps = 0usize;
            while left[lp - 1] == right[rp - 1] {
                cs -= 1;
                left.rotate_right(1);
                right.rotate_right(1);
                steps += 1;
                debug_assert!(steps <= lp.lcm(&rp));
            }
        } else {
            let absorbed = core.iter().zip(left.iter().cycle()).take_while(|(c, l)| c == l).count();
            if absorbed > 0 {
                core.drain(..absorbed);
                cs += absorbed as i64;
                left.rotate_left(absorbed % lp);
            }
        }
        BiSeq { space: self.space, left, core, right, core_start: cs }
    }

    pub fn is_canonical(&self) -> bool {
        *self == self.canonical()
    }

    /// Equality of the represented functions, independent of representation.
    pub fn same_function(&self, other: &BiSeq) -> bool {
        self.space == other.space && self.canonical() == other.canonical()
    }

    /// `σ^k`: the result satisfies `value_at(r, i) = value_at(self, i + k)`.
    pub fn shift(&self, k: i64) -> BiSeq {
        let mut out = self.clone();
        if self.is_purely_periodic_form() {
            out.core_start = (self.core_start - k).rem_euclid(self.right.len() as i64);
        } else {
            out.core_start = self.core_start - k;
        }
        out
    }

    /// Coordinates `[lo, hi)` as a vector.
    pub fn window(&self, lo: i64, hi: i64) -> Vec<Rational> {
        (lo..hi).map(|i| self.value_at(i).clone()).collect()
    }

    /// Replaces coordinates starting at `at` with `values`.
    pub fn with_values(&self, at: i64, values: &[Rational]) -> Result<BiSeq> {
        if values.is_empty() {
            return Ok(self.clone());
        }
        let hi_edit = at + values.len() as i64;
        let lo = self.core_start.min(at);
        let hi = self.right_start().max(hi_edit);
        let core = (lo..hi)
            .map(|i| {
                if (at..hi_edit).contains(&i) {
                    values[(i - at) as usize].clone()
                } else {
                    self.value_at(i).clone()
                }
            })
            .collect();
        let left = rotate_word(&self.left, lo - self.core_start);
        let right = rotate_word(&self.right, hi - self.right_start());
        BiSeq::new(self.space, left, core, right, lo)
    }

    /// Equal to `past` on `(-∞, boundary)` and to `future` on `[boundary, ∞)`.
    pub fn join(past: &BiSeq, future: &BiSeq, boundary: i64) -> Result<BiSeq> {
        if past.space != future.space {
            return Err(Error::SpaceMismatch(format!("{:?} vs {:?}", past.space, future.space)));
        }
        let lo = past.core_start.min(boundary);
        let hi = future.right_start().max(boundary);
        let core = (lo..hi)
            .map(|i| if i < boundary { past.value_at(i) } else { future.value_at(i) }.clone())
            .collect();
        let left = rotate_word(&past.left, lo - past.core_start);
        let right = rotate_word(&future.right, hi - future.right_start());
        BiSeq::new(past.space, left, core, right, lo)
    }

    /// Per-coordinate map into an unconstrained coefficient sequence.
    pub fn map_coeffs(&self, f: impl Fn(&Rational) -> Rational) -> Coeffs {
        Coeffs {
            left: self.left.iter().map(&f).collect(),
            core: self.core.iter().map(&f).collect(),
            right: self.right.iter().map(&f).collect(),
            start: self.core_start,
        }
    }

    /// Coordinate-wise combination of two sequences, aligned on lcm periods.
    pub fn zip_coeffs(x: &BiSeq, y: &BiSeq, f: impl Fn(&Rational, &Rational) -> Rational) -> Coeffs {
        let lo = x.core_start.min(y.core_start);
        let hi = x.right_start().max(y.right_start());
        let lp = x.left.len().lcm(&y.left.len()) as i64;
        let rp = x.right.len().lcm(&y.right.len()) as i64;
        let at = |i: i64| f(x.value_at(i), y.value_at(i));
        Coeffs {
            left: (lo - lp..lo).map(at).collect(),
            core: (lo..hi).map(at).collect(),
            right: (hi..hi + rp).map(at).collect(),
            start: lo,
        }
    }

    fn ensure_same_space(&self, other: &BiSeq) -> Result<()> {
        if self.space == other.space {
            Ok(())
        } else {
            Err(Error::SpaceMismatch(format!("{:?} vs {:?}", self.space, other.space)))
        }
    }

    /// Per-coordinate distance sequence `ρ(x_i, y_i)`.
    pub fn distance_coeffs(&self, other: &BiSeq) -> Result<Coeffs> {
        self.ensure_same_space(other)?;
        let space = self.space;
        Ok(BiSeq::zip_coeffs(self, other, |a, b| space.coordinate_distance(a, b)))
    }

    /// Agreement index of `self` and `other` on the given side.
    pub fn agreement(&self, other: &BiSeq, side: Side) -> Result<Agreement> {
        let c = self.distance_coeffs(other)?;
        Ok(coeff_agreement(&c, side))
    }
}

fn rotate_word(word: &[Rational], by: i64) -> Vec<Rational> {
    let mut w = word.to_vec();
    let n = w.len() as i64;
    w.rotate_left(by.rem_euclid(n) as usize);
    w
}

/// Agreement index read off a per-coordinate distance sequence.
pub fn coeff_agreement(c: &Coeffs, side: Side) -> Agreement {
    match side {
        Side::Forward => {
            if !Coeffs::all_zero(&c.right) {
                return Agreement::Never;
            }
            if let Some(j) = c.core.iter().rposition(|v| !v.is_zero()) {
                return Agreement::From(c.start + j as i64 + 1);
            }
            if Coeffs::all_zero(&c.left) {
                return Agreement::Everywhere;
            }
            let t = (1..).find(|&t| !c.value_at(c.start - t).is_zero()).expect("nonzero left word");
            Agreement::From(c.start - t + 1)
        }
        Side::Backward => {
            if !Coeffs::all_zero(&c.left) {
                return Agreement::Never;
            }
            if let Some(j) = c.core.iter().position(|v| !v.is_zero()) {
                return Agreement::From(c.start + j as i64 - 1);
            }
            if Coeffs::all_zero(&c.right) {
                return Agreement::Everywhere;
            }
            let rs = c.right_start();
            let t = (0..).find(|&t| !c.value_at(rs + t).is_zero()).expect("nonzero right word");
            Agreement::From(rs + t - 1)
        }
    }
}

/// `d(x, y) = Σ_i ρ(x_i, y_i) / 2^{|i|}`, evaluated in closed form.
pub fn seq_metric(x: &BiSeq, y: &BiSeq) -> Result<crate::rational::ExactDist> {
    let c = x.distance_coeffs(y)?;
    Ok(crate::rational::ExactDist::exact(c.weighted_sum(None, None)))
}

pub fn canonical(s: &BiSeq) -> BiSeq {
    s.canonical()
}

pub fn value_at(s: &BiSeq, i: i64) -> Rational {
    s.value_at(i).clone()
}

pub fn shift(s: &BiSeq, k: i64) -> BiSeq {
    s.shift(k)
}

pub fn agreement_index(x: &BiSeq, y: &BiSeq, side: Side) -> Result<Agreement> {
    x.agreement(y, side)
}

impl fmt::Display for BiSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let word = |w: &[Rational]| {
            w.iter()
                .map(|v| if v.is_integer() { v.to_integer().to_string() } else { rational::format(v) })
                .collect::<Vec<_>>()
                .join(",")
        };
        write!(
            f,
            "({})^∞ @{} [{}] ({})^∞",
            word(&self.left),
            self.core_start,
            word(&self.core),
            word(&self.right)
        )
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BiSeqRepr {
    left: Vec<serde_json::Value>,
    core: Vec<serde_json::Value>,
    right: Vec<serde_json::Value>,
    core_start: i64,
    space: ValueSpace,
}

fn encode_value(space: ValueSpace, v: &Rational) -> serde_json::Value {
    match space {
        ValueSpace::Discrete { .. } => serde_json::Value::from(v.to_integer().to_string().parse::<u64>().unwrap_or(0)),
        ValueSpace::UnitInterval => serde_json::Value::from(rational::format(v)),
    }
}

fn decode_value(space: ValueSpace, v: &serde_json::Value) -> Result<Rational> {
    match (space, v) {
        (ValueSpace::Discrete { .. }, serde_json::Value::Number(n)) => n
            .as_u64()
            .map(|s| rational::int(s as i64))
            .ok_or_else(|| Error::Parse(format!("symbol {n} is not a nonnegative integer"))),
        (ValueSpace::UnitInterval, serde_json::Value::String(s)) => rational::parse(s),
        (_, other) => Err(Error::Parse(format!("unexpected value {other} for {space:?}"))),
    }
}

impl Serialize for BiSeq {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let enc = |w: &[Rational]| w.iter().map(|v| encode_value(self.space, v)).collect();
        BiSeqRepr {
            left: enc(&self.left),
            core: enc(&self.core),
            right: enc(&self.right),
            core_start: self.core_start,
            space: self.space,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for BiSeq {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = BiSeqRepr::deserialize(d)?;
        let dec = |w: &[serde_json::Value]| -> Result<Vec<Rational>> {
            w.iter().map(|v| decode_value(repr.space, v)).collect()
        };
        let build = || -> Result<BiSeq> {
            BiSeq::new(repr.space, dec(&repr.left)?, dec(&repr.core)?, dec(&repr.right)?, repr.core_start)
        };
        build().map_err(serde::de::Error::custom)
    }
}
