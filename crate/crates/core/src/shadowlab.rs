//! Pseudo-orbits with finitely many jumps, their shadowing points, exact
//! limit-shadowing checks, and sampled contraction deadlines.

use num_traits::{Signed, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperspace::{build_c, hausdorff, induced_map, FiniteCompact, PairPolicy};
use crate::rational::{self, Rational};
use crate::seqspace::Agreement;
use crate::system::{
    backward_scan, forward_scan, stable_certificate, unstable_certificate, LocalCertificate, Perturbation,
    RateDeadline, SampleBudget, ShiftSystem,
};

/// A true orbit segment `start, f(start), …, f^{length-1}(start)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Leg<P> {
    pub start: P,
    pub length: u64,
}

/// Consecutive legs indexed from `first_index`. Before the first leg and
/// after the last, the sequence follows the true orbit of the nearest leg,
/// so all but finitely many step errors are exactly zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PseudoOrbit<P> {
    pub legs: Vec<Leg<P>>,
    pub first_index: i64,
}

impl<P: Clone> PseudoOrbit<P> {
    pub fn new(legs: Vec<Leg<P>>, first_index: i64) -> Result<Self> {
        if legs.is_empty() {
            return Err(Error::ShapeMismatch("a pseudo-orbit needs at least one leg".into()));
        }
        if legs.iter().any(|l| l.length == 0) {
            return Err(Error::ShapeMismatch("leg lengths must be positive".into()));
        }
        Ok(PseudoOrbit { legs, first_index })
    }

    /// Index of each leg's first point.
    pub fn leg_starts(&self) -> Vec<i64> {
        self.legs
            .iter()
            .scan(self.first_index, |s, leg| {
                let here = *s;
                *s += leg.length as i64;
                Some(here)
            })
            .collect()
    }

    /// One past the last index of the last leg.
    pub fn end_index(&self) -> i64 {
        self.first_index + self.legs.iter().map(|l| l.length as i64).sum::<i64>()
    }

    fn leg_for(&self, k: i64) -> (usize, i64) {
        let starts = self.leg_starts();
        let j = starts.iter().rposition(|&s| s <= k).unwrap_or(0);
        (j, starts[j])
    }

    /// `x_k`, following the extension convention outside the window.
    pub fn point_at<S: ShiftSystem<Point = P>>(&self, sys: &S, k: i64) -> P {
        let (j, s) = self.leg_for(k);
        sys.shift(&self.legs[j].start, k - s)
    }

    /// The true point whose orbit passes through leg `j`: `f^{s_j}(w_j) = start_j`.
    pub fn leg_origin<S: ShiftSystem<Point = P>>(&self, sys: &S, j: usize) -> P {
        sys.shift(&self.legs[j].start, -self.leg_starts()[j])
    }

    /// `e_j = d(f(last point of leg j), first point of leg j+1)`.
    pub fn junction_errors<S: ShiftSystem<Point = P>>(&self, sys: &S) -> Result<Vec<Rational>> {
        self.legs
            .windows(2)
            .map(|w| sys.distance(&sys.shift(&w[0].start, w[0].length as i64), &w[1].start))
            .collect()
    }

    pub fn delta<S: ShiftSystem<Point = P>>(&self, sys: &S) -> Result<Rational> {
        Ok(self.junction_errors(sys)?.into_iter().max().unwrap_or_else(Rational::zero))
    }
}

/// A perturbation applied to the orbit point at `index`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Jump {
    pub index: i64,
    pub perturbation: Perturbation,
}

/// The orbit of `x` over `[first_index, first_index + length)`, restarted at
/// every jump index from the perturbed orbit point.
pub fn perturb_orbit<S: ShiftSystem>(
    sys: &S,
    x: &S::Point,
    first_index: i64,
    length: u64,
    jumps: &[Jump],
) -> Result<PseudoOrbit<S::Point>> {
    sys.validate(x)?;
    let end = first_index + length as i64;
    let mut jumps = jumps.to_vec();
    jumps.sort_by_key(|j| j.index);
    if let Some(bad) = jumps.iter().find(|j| j.index <= first_index || j.index >= end) {
        return Err(Error::OutOfRange(format!("jump index {} not inside ({first_index}, {end})", bad.index)));
    }
    if jumps.windows(2).any(|w| w[0].index == w[1].index) {
        return Err(Error::IllegalPerturbation("two jumps at one index".into()));
    }
    let mut legs = Vec::new();
    let mut start = sys.shift(x, first_index);
    let mut s = first_index;
    for jump in &jumps {
        let arrived = sys.shift(&start, jump.index - s);
        let next = sys.perturb(&arrived, &jump.perturbation)?;
        sys.validate(&next)?;
        legs.push(Leg { start, length: (jump.index - s) as u64 });
        start = next;
        s = jump.index;
    }
    legs.push(Leg { start, length: (end - s) as u64 });
    PseudoOrbit::new(legs, first_index)
}

/// Reads `z_k = (x_k)_0` along the window by joining the legs' true origins
/// at each junction; graph shifts repair each junction with whole loops.
pub fn shadow_point<S: ShiftSystem>(sys: &S, orbit: &PseudoOrbit<S::Point>, eps: &Rational) -> Result<S::Point> {
    let delta = orbit.delta(sys)?;
    let limit = sys.shadow_delta_limit(eps);
    if delta >= limit {
        return Err(Error::Precondition(format!(
            "pseudo-orbit error {} is not below {}",
            rational::format(&delta),
            rational::format(&limit)
        )));
    }
    let starts = orbit.leg_starts();
    let mut z = orbit.leg_origin(sys, 0);
    for (j, &s) in starts.iter().enumerate().skip(1) {
        z = sys.join(&z, &orbit.leg_origin(sys, j), s)?;
    }
    Ok(z)
}

#[derive(Clone, Debug, Serialize)]
pub struct ShadowReport<P> {
    pub candidate: P,
    /// Exact supremum over all `k` of `d(f^k z, x_k)`, when both tails are
    /// certified.
    #[serde(with = "rational::serde_opt_str")]
    pub sup_dist: Option<Rational>,
    #[serde(with = "rational::serde_str")]
    pub window_sup: Rational,
    pub window: Vec<WindowDistance>,
    pub forward_tail_index: Agreement,
    pub backward_tail_index: Agreement,
    pub pass_eps: bool,
    pub pass_limit: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WindowDistance {
    pub k: i64,
    #[serde(with = "rational::serde_str")]
    pub distance: Rational,
}

/// Exact check that `z` ε-shadows the orbit and shadows it in the limit.
///
/// Inside the window every `d(f^k z, x_k)` is evaluated; beyond it the
/// distance is against an endpoint leg's true orbit, whose supremum is
/// exact once an agreement index exists.
pub fn verify_shadowing<S: ShiftSystem>(
    sys: &S,
    orbit: &PseudoOrbit<S::Point>,
    z: &S::Point,
    eps: &Rational,
) -> Result<ShadowReport<S::Point>> {
    let (lo, hi) = (orbit.first_index, orbit.end_index());
    let window = (lo..hi)
        .into_par_iter()
        .map(|k| Ok(WindowDistance { k, distance: sys.distance(&sys.shift(z, k), &orbit.point_at(sys, k))? }))
        .collect::<Result<Vec<_>>>()?;
    let window_sup = window.iter().map(|w| w.distance.clone()).max().unwrap_or_else(Rational::zero);
    let last = orbit.legs.len() - 1;
    let forward = forward_scan(sys, z, &orbit.leg_origin(sys, last), hi)?;
    let backward = backward_scan(sys, z, &orbit.leg_origin(sys, 0), lo - 1)?;
    let sup_dist = match (&forward.sup, &backward.sup) {
        (Some(f), Some(b)) => Some(window_sup.clone().max(f.clone()).max(b.clone())),
        _ => None,
    };
    Ok(ShadowReport {
        candidate: z.clone(),
        pass_eps: sup_dist.as_ref().is_some_and(|s| s <= eps),
        pass_limit: forward.agreement.exists() && backward.agreement.exists(),
        sup_dist,
        window_sup,
        window,
        forward_tail_index: forward.agreement,
        backward_tail_index: backward.agreement,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RateCheck {
    #[serde(with = "rational::serde_str")]
    pub r: Rational,
    pub k_r: u32,
    pub forward_ok: bool,
    pub backward_ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct GammaReport {
    pub stable: LocalCertificate,
    pub unstable: LocalCertificate,
    pub rates: Vec<RateCheck>,
    pub member: bool,
}

/// Membership of `z` in `Γ_{eps,k}(x, y)`: `z ∈ V^s_eps(x) ∩ V^u_eps(y)`,
/// and for each `(r, k_r)` the forward distance to `x` and the backward
/// distance to `y` stay `<= r` from time `k_r` on.
pub fn gamma_membership<S: ShiftSystem>(
    sys: &S,
    z: &S::Point,
    x: &S::Point,
    y: &S::Point,
    eps: &Rational,
    family: &[RateDeadline],
    horizon: u32,
) -> Result<GammaReport> {
    if let Some(d) = family.iter().find(|d| d.k_r > horizon) {
        return Err(Error::Precondition(format!("deadline {} exceeds horizon {horizon}", d.k_r)));
    }
    let stable = stable_certificate(sys, z, x, eps)?;
    let unstable = unstable_certificate(sys, z, y, eps)?;
    let forward = one_sided_curve(sys, z, x, horizon, 1)?;
    let backward = one_sided_curve(sys, z, y, horizon, -1)?;
    let rates: Vec<RateCheck> = family
        .iter()
        .map(|d| RateCheck {
            r: d.r.clone(),
            k_r: d.k_r,
            forward_ok: forward.holds_from(d.k_r, &d.r),
            backward_ok: backward.holds_from(d.k_r, &d.r),
        })
        .collect();
    let member = stable.member && unstable.member && rates.iter().all(|c| c.forward_ok && c.backward_ok);
    Ok(GammaReport { stable, unstable, rates, member })
}

/// `d(f^{sn} z, f^{sn} w)` for `n = 0..=horizon`, plus the certified
/// supremum beyond the horizon.
struct Curve {
    values: Vec<Rational>,
    tail: Option<Rational>,
}

impl Curve {
    fn holds_from(&self, k: u32, r: &Rational) -> bool {
        self.tail.as_ref().is_some_and(|t| t <= r) && self.values[k as usize..].iter().all(|v| v <= r)
    }

    /// Least `k >= 1` after which the curve stays `<= r`, or `None`.
    fn deadline(&self, r: &Rational) -> Option<u32> {
        if !self.tail.as_ref().is_some_and(|t| t <= r) {
            return None;
        }
        let k = self.values.iter().rposition(|v| v > r).map_or(1, |i| i + 1).max(1);
        (k < self.values.len()).then_some(k as u32)
    }
}

fn one_sided_curve<S: ShiftSystem>(sys: &S, z: &S::Point, w: &S::Point, horizon: u32, sign: i64) -> Result<Curve> {
    let values = (0..=i64::from(horizon))
        .map(|n| sys.distance(&sys.shift(z, sign * n), &sys.shift(w, sign * n)))
        .collect::<Result<Vec<_>>>()?;
    let beyond = i64::from(horizon) + 1;
    let tail = if sign > 0 {
        forward_scan(sys, z, w, beyond)?.sup
    } else {
        backward_scan(sys, z, w, -beyond)?.sup
    };
    Ok(Curve { values, tail })
}

/// The least `k <= horizon` such that, for every sampled pair `(x, y)` with
/// `d(x, y) < delta` and its splice `z`, the forward distance of `z` to `x`
/// and the backward distance to `y` stay `<= r` from `k` on. `None` when
/// some sample needs more than `horizon`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_k_r<S: ShiftSystem>(
    sys: &S,
    eps: &Rational,
    delta: &Rational,
    r: &Rational,
    samples: u64,
    horizon: u32,
    seed: u64,
    budget: &SampleBudget,
) -> Result<Option<u32>> {
    if r > eps || !r.is_positive() {
        return Err(Error::Precondition(format!(
            "need 0 < r <= eps, got r = {}, eps = {}",
            rational::format(r),
            rational::format(eps)
        )));
    }
    let per_sample = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            let x = sys.sample_point(&mut rng, budget);
            let y = sys.sample_near(&mut rng, &x, delta, budget);
            let z = sys.local_splice(&x, &y)?;
            let f = one_sided_curve(sys, &z, &x, horizon, 1)?.deadline(r);
            let b = one_sided_curve(sys, &z, &y, horizon, -1)?.deadline(r);
            Ok(f.zip(b).map(|(f, b)| f.max(b)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_sample.into_iter().try_fold(1, |acc, k| k.map(|k| acc.max(k))))
}

/// Point distances `d(f^k z, x_k)` against hyperspace distances of the
/// singleton lifts `d_H(2^f^k {z}, {x_k})` over the window.
#[derive(Clone, Debug, Serialize)]
pub struct SingletonLift {
    pub rows: Vec<(i64, String, String)>,
    pub coherent: bool,
}

pub fn singleton_lift<S: ShiftSystem>(sys: &S, orbit: &PseudoOrbit<S::Point>, z: &S::Point) -> Result<SingletonLift> {
    let lifted = FiniteCompact::singleton(sys, z.clone())?;
    let rows = (orbit.first_index..orbit.end_index())
        .map(|k| {
            let xk = orbit.point_at(sys, k);
            let point = sys.distance(&sys.shift(z, k), &xk)?;
            let hyper = hausdorff(sys, &induced_map(sys, &lifted, k), &FiniteCompact::singleton(sys, xk)?)?.value;
            Ok((k, point, hyper))
        })
        .collect::<Result<Vec<_>>>()?;
    let coherent = rows.iter().all(|(_, p, h)| p == h);
    Ok(SingletonLift {
        rows: rows.into_iter().map(|(k, p, h)| (k, rational::format(&p), rational::format(&h))).collect(),
        coherent,
    })
}

/// For each junction `j`, the hyperspace shadowing set of the singletons
/// `A = {first point of leg j+1}` and `B = {f(last point of leg j)}`,
/// moved back to time zero.
pub fn junction_shadow_sets<S: ShiftSystem>(
    sys: &S,
    orbit: &PseudoOrbit<S::Point>,
    eps: &Rational,
    delta: &Rational,
) -> Result<Vec<FiniteCompact<S::Point>>> {
    let starts = orbit.leg_starts();
    orbit
        .legs
        .windows(2)
        .zip(&starts[1..])
        .map(|(w, &s)| {
            let a = FiniteCompact::singleton(sys, w[1].start.clone())?;
            let b = FiniteCompact::singleton(sys, sys.shift(&w[0].start, w[0].length as i64))?;
            let shadow = build_c(sys, &a, &b, eps, delta, PairPolicy::AllPairs)?;
            Ok(induced_map(sys, &shadow.c, -s))
        })
        .collect()
}
