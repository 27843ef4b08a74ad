//! The dynamical systems the crate can run: a shift map on a family of
//! eventually periodic points, with an exact metric and splicing.

use std::fmt::Debug;

use num_traits::{One, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, pow2_inv, ratio, Rational};
use crate::seqspace::{seq_metric, Agreement, BiSeq, Side, ValueSpace};

/// A point modification used to create pseudo-orbit jumps.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Perturbation {
    /// Add `amount` to one coordinate of a Hilbert-cube point.
    Nudge {
        coordinate: i64,
        #[serde(with = "rational::serde_str")]
        amount: Rational,
    },
    /// Overwrite one coordinate of a full-shift point.
    Symbol { coordinate: i64, symbol: u32 },
    /// From the first visit to vertex 0 at or after `from`, repeat one loop
    /// forever. `factor` is 1-based; a single loop shift only has factor 1.
    LoopSwitch { factor: usize, from: i64, loop_kind: LoopKind },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoopKind {
    P,
    Q,
}

/// Size limits for randomly drawn eventually periodic points.
#[derive(Clone, Debug)]
pub struct SampleBudget {
    pub max_period: usize,
    pub max_core: usize,
    pub max_den: i64,
}

impl Default for SampleBudget {
    fn default() -> Self {
        SampleBudget { max_period: 3, max_core: 6, max_den: 8 }
    }
}

/// A rate `r` and the time `k_r` after which distances must stay `<= r`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RateDeadline {
    #[serde(with = "rational::serde_str")]
    pub r: Rational,
    pub k_r: u32,
}

/// A homeomorphism acting by shifts on exactly representable points.
pub trait ShiftSystem: Sync {
    type Point: Clone + PartialEq + Debug + Send + Sync + Serialize + DeserializeOwned;

    fn validate(&self, p: &Self::Point) -> Result<()>;

    /// Canonical representative, used for set deduplication.
    fn canonical(&self, p: &Self::Point) -> Self::Point;

    /// `f^k(p)`.
    fn shift(&self, p: &Self::Point, k: i64) -> Self::Point;

    fn distance(&self, a: &Self::Point, b: &Self::Point) -> Result<Rational>;

    fn agreement(&self, a: &Self::Point, b: &Self::Point, side: Side) -> Result<Agreement>;

    /// A point equal to `past` far to the left and `future` far to the
    /// right, switching at `boundary` when the system allows it.
    fn join(&self, past: &Self::Point, future: &Self::Point, boundary: i64) -> Result<Self::Point>;

    /// The canonical witness in `W^s(x) ∩ W^u(y)` for a nearby pair.
    fn local_splice(&self, x: &Self::Point, y: &Self::Point) -> Result<Self::Point> {
        self.join(y, x, 0)
    }

    fn perturb(&self, p: &Self::Point, perturbation: &Perturbation) -> Result<Self::Point>;

    /// Largest pseudo-orbit jump the readout shadowing construction accepts.
    fn shadow_delta_limit(&self, eps: &Rational) -> Rational;

    /// `δ` below which the canonical splice lies in the product structure
    /// for the given `ε`, when the system has one in closed form.
    fn product_structure_delta(&self, _eps: &Rational) -> Option<Rational> {
        None
    }

    /// Known uniform contraction deadlines for `eps`, all with `k_r <= horizon`.
    fn rate_family(&self, _eps: &Rational, _horizon: u32) -> Vec<RateDeadline> {
        Vec::new()
    }

    fn sample_point(&self, rng: &mut ChaCha8Rng, budget: &SampleBudget) -> Self::Point;

    /// A random point `y` with `d(x, y) < delta`.
    fn sample_near(&self, rng: &mut ChaCha8Rng, x: &Self::Point, delta: &Rational, budget: &SampleBudget) -> Self::Point;
}

/// Exact supremum of `d(f^k z, f^k w)` over a half-line of times.
#[derive(Clone, Debug)]
pub struct TailScan {
    pub agreement: Agreement,
    /// Exact supremum over the half-line; `None` without an agreement
    /// certificate.
    pub sup: Option<Rational>,
    /// Time achieving the supremum.
    pub argsup: Option<i64>,
    /// Every evaluated `(k, distance)`.
    pub values: Vec<(i64, Rational)>,
}

/// Scans `k >= from`. Once the points agree at every coordinate `>= J`, the
/// distance halves with each step past `J - 1`, so the scan stops there.
pub fn forward_scan<S: ShiftSystem>(sys: &S, z: &S::Point, w: &S::Point, from: i64) -> Result<TailScan> {
    let agreement = sys.agreement(z, w, Side::Forward)?;
    let last = match agreement {
        Agreement::Everywhere => {
            return Ok(TailScan { agreement, sup: Some(Rational::zero()), argsup: Some(from), values: vec![] })
        }
        Agreement::From(j) => (j - 1).max(from),
        Agreement::Never => return Ok(TailScan { agreement, sup: None, argsup: None, values: vec![] }),
    };
    scan(sys, z, w, from..=last, agreement)
}

/// Scans `k <= to`, mirroring [`forward_scan`].
pub fn backward_scan<S: ShiftSystem>(sys: &S, z: &S::Point, w: &S::Point, to: i64) -> Result<TailScan> {
    let agreement = sys.agreement(z, w, Side::Backward)?;
    let first = match agreement {
        Agreement::Everywhere => {
            return Ok(TailScan { agreement, sup: Some(Rational::zero()), argsup: Some(to), values: vec![] })
        }
        Agreement::From(j) => (j + 1).min(to),
        Agreement::Never => return Ok(TailScan { agreement, sup: None, argsup: None, values: vec![] }),
    };
    scan(sys, z, w, first..=to, agreement)
}

fn scan<S: ShiftSystem>(
    sys: &S,
    z: &S::Point,
    w: &S::Point,
    range: std::ops::RangeInclusive<i64>,
    agreement: Agreement,
) -> Result<TailScan> {
    let mut values = Vec::new();
    let mut best: Option<(i64, Rational)> = None;
    for k in range {
        let d = sys.distance(&sys.shift(z, k), &sys.shift(w, k))?;
        if best.as_ref().is_none_or(|(_, b)| d > *b) {
            best = Some((k, d.clone()));
        }
        values.push((k, d));
    }
    let (argsup, sup) = best.expect("scan range is nonempty");
    Ok(TailScan { agreement, sup: Some(sup), argsup: Some(argsup), values })
}

/// Certified membership of `z` in `V^s_eps(x)` (forward) or `V^u_eps(x)`
/// (backward): an agreement certificate plus an exact supremum `<= eps`.
#[derive(Clone, Debug, Serialize)]
pub struct LocalCertificate {
    pub agreement: Agreement,
    #[serde(with = "rational::serde_opt_str")]
    pub sup: Option<Rational>,
    pub member: bool,
}

pub fn stable_certificate<S: ShiftSystem>(sys: &S, z: &S::Point, x: &S::Point, eps: &Rational) -> Result<LocalCertificate> {
    let scan = forward_scan(sys, z, x, 0)?;
    Ok(certificate(scan, eps))
}

pub fn unstable_certificate<S: ShiftSystem>(sys: &S, z: &S::Point, y: &S::Point, eps: &Rational) -> Result<LocalCertificate> {
    let scan = backward_scan(sys, z, y, 0)?;
    Ok(certificate(scan, eps))
}

fn certificate(scan: TailScan, eps: &Rational) -> LocalCertificate {
    let member = scan.sup.as_ref().is_some_and(|s| s <= eps);
    LocalCertificate { agreement: scan.agreement, sup: scan.sup, member }
}

/// The full shift on `alphabet` symbols with the dyadic discrete metric.
#[derive(Clone, Debug)]
pub struct FullShift {
    pub alphabet: u32,
}

impl FullShift {
    fn space(&self) -> ValueSpace {
        ValueSpace::Discrete { alphabet: self.alphabet }
    }

    fn random_word(&self, rng: &mut ChaCha8Rng, len: usize) -> Vec<Rational> {
        (0..len).map(|_| rational::int(rng.gen_range(0..self.alphabet).into())).collect()
    }

    fn random_seq(&self, rng: &mut ChaCha8Rng, budget: &SampleBudget) -> BiSeq {
        let lp = rng.gen_range(1..=budget.max_period);
        let rp = rng.gen_range(1..=budget.max_period);
        let cl = rng.gen_range(0..=budget.max_core);
        let cs = rng.gen_range(-(budget.max_core as i64)..=0);
        let left = self.random_word(rng, lp);
        let core = self.random_word(rng, cl);
        let right = self.random_word(rng, rp);
        BiSeq::new(self.space(), left, core, right, cs).expect("symbols lie in the alphabet")
    }
}

/// Least `m >= 0` with `2^{1-m} < delta`, so that agreement on `[-m, m]`
/// forces a discrete-metric distance below `delta`.
pub(crate) fn agreement_radius(delta: &Rational) -> i64 {
    (0..).find(|&m: &i64| rational::scale_pow2(&Rational::one(), m - 1) < *delta).expect("delta is positive")
}

impl ShiftSystem for FullShift {
    type Point = BiSeq;

    fn validate(&self, p: &BiSeq) -> Result<()> {
        if p.space() == self.space() {
            Ok(())
        } else {
            Err(Error::SpaceMismatch(format!("expected {:?}, got {:?}", self.space(), p.space())))
        }
    }

    fn canonical(&self, p: &BiSeq) -> BiSeq {
        p.canonical()
    }

    fn shift(&self, p: &BiSeq, k: i64) -> BiSeq {
        p.shift(k)
    }

    fn distance(&self, a: &BiSeq, b: &BiSeq) -> Result<Rational> {
        Ok(seq_metric(a, b)?.value)
    }

    fn agreement(&self, a: &BiSeq, b: &BiSeq, side: Side) -> Result<Agreement> {
        a.agreement(b, side)
    }

    fn join(&self, past: &BiSeq, future: &BiSeq, boundary: i64) -> Result<BiSeq> {
        BiSeq::join(past, future, boundary)
    }

    fn perturb(&self, p: &BiSeq, perturbation: &Perturbation) -> Result<BiSeq> {
        match perturbation {
            Perturbation::Symbol { coordinate, symbol } if *symbol < self.alphabet => {
                p.with_values(*coordinate, &[rational::int((*symbol).into())])
            }
            other => Err(Error::IllegalPerturbation(format!("{other:?} on a full shift over {} symbols", self.alphabet))),
        }
    }

    fn shadow_delta_limit(&self, _eps: &Rational) -> Rational {
        ratio(1, 4)
    }

    fn sample_point(&self, rng: &mut ChaCha8Rng, budget: &SampleBudget) -> BiSeq {
        self.random_seq(rng, budget)
    }

    fn sample_near(&self, rng: &mut ChaCha8Rng, x: &BiSeq, delta: &Rational, budget: &SampleBudget) -> BiSeq {
        let m = agreement_radius(delta);
        let past = self.random_seq(rng, budget);
        let future = self.random_seq(rng, budget);
        let y = BiSeq::join(&past, x, -m).expect("same space");
        BiSeq::join(&y, &future, m + 1).expect("same space")
    }
}

/// `2^{-|i|}`, the weight of coordinate `i`.
pub fn weight(i: i64) -> Rational {
    pow2_inv(i.unsigned_abs())
}
