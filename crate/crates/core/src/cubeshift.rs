//! The shift on the Hilbert cube `[0,1]^ℤ`: stable and unstable boxes, the
//! `ε/4` splice, and the witness against uniform contraction.

use num_traits::{One, Signed, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, pow2_inv, ratio, Rational};
use crate::seqspace::{seq_metric, Agreement, BiSeq, Coeffs, Side, ValueSpace};
use crate::system::{
    agreement_radius, stable_certificate, unstable_certificate, Perturbation, RateDeadline, SampleBudget,
    ShiftSystem,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoxSide {
    Stable,
    Unstable,
}

/// `D^s_ε(x)` fixes `i >= 0` and frees `i < 0` to `[x_i - ε, x_i + ε] ∩ [0,1]`;
/// `D^u_ε(x)` fixes `i < 0` and frees `i >= 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DBox {
    center: BiSeq,
    radius: Rational,
    side: BoxSide,
}

fn require_unit(x: &BiSeq) -> Result<()> {
    if x.space() == ValueSpace::UnitInterval {
        Ok(())
    } else {
        Err(Error::SpaceMismatch(format!("expected unit-interval point, got {:?}", x.space())))
    }
}

impl DBox {
    pub fn new(center: BiSeq, radius: Rational, side: BoxSide) -> Result<Self> {
        require_unit(&center)?;
        if !radius.is_positive() || radius >= ratio(1, 4) {
            return Err(Error::Precondition(format!("box radius {} not in (0, 1/4)", rational::format(&radius))));
        }
        Ok(DBox { center, radius, side })
    }

    /// Membership-only box; any positive radius.
    fn loose(center: &BiSeq, radius: &Rational, side: BoxSide) -> Self {
        DBox { center: center.clone(), radius: radius.clone(), side }
    }

    pub fn center(&self) -> &BiSeq {
        &self.center
    }

    pub fn radius(&self) -> &Rational {
        &self.radius
    }

    pub fn side(&self) -> BoxSide {
        self.side
    }

    /// Index range `[lo, hi)` of the free coordinates.
    fn free_range(&self) -> (Option<i64>, Option<i64>) {
        match self.side {
            BoxSide::Stable => (None, Some(0)),
            BoxSide::Unstable => (Some(0), None),
        }
    }

    fn fixed_range(&self) -> (Option<i64>, Option<i64>) {
        match self.side {
            BoxSide::Stable => (Some(0), None),
            BoxSide::Unstable => (None, Some(0)),
        }
    }
}

/// Exact coordinate-wise membership of `z` in `b`.
pub fn box_contains(b: &DBox, z: &BiSeq) -> Result<bool> {
    require_unit(z)?;
    let diff = BiSeq::zip_coeffs(&b.center, z, rational::abs_diff);
    let (flo, fhi) = b.fixed_range();
    let (lo, hi) = b.free_range();
    Ok(diff.max_over(flo, fhi).is_zero() && diff.max_over(lo, hi) <= b.radius)
}

/// Diameter of `σ^n(b)`, for `n >= 0` on stable boxes and `n <= 0` on
/// unstable ones.
pub fn dbox_diameter(b: &DBox, n: i64) -> Result<Rational> {
    let contracting = match b.side {
        BoxSide::Stable => n >= 0,
        BoxSide::Unstable => n <= 0,
    };
    if !contracting {
        return Err(Error::Precondition(format!("{:?} box diameter needs n of the contracting sign, got {n}", b.side)));
    }
    let eps = &b.radius;
    let widths: Coeffs = b.center.map_coeffs(|c| {
        let hi = (c + eps).min(Rational::one());
        let lo = (c - eps).max(Rational::zero());
        hi - lo
    });
    let (lo, hi) = b.free_range();
    Ok(widths.weighted_sum(lo, hi) * pow2_inv(n.unsigned_abs()))
}

/// Least `k >= 1` with `eps / 2^{k-2} < r`.
pub fn contraction_k_r(eps: &Rational, r: &Rational) -> Result<u32> {
    if !r.is_positive() || r >= eps {
        return Err(Error::Precondition(format!(
            "need 0 < r < eps, got r = {}, eps = {}",
            rational::format(r),
            rational::format(eps)
        )));
    }
    Ok((1..).find(|&k| rational::scale_pow2(eps, i64::from(k) - 2) < *r).expect("the bound halves each step"))
}

/// `(r, contraction_k_r(eps, r))` for `r = eps/2^j`, `j = 1, 2, …`, while
/// `k_r <= horizon`.
pub fn dyadic_family(eps: &Rational, horizon: u32) -> Vec<RateDeadline> {
    (1..)
        .map(|j| {
            let r = rational::scale_pow2(eps, j);
            let k_r = contraction_k_r(eps, &r).expect("r < eps");
            RateDeadline { r, k_r }
        })
        .take_while(|d| d.k_r <= horizon)
        .collect()
}

/// The splice `z` with `z_i = x_i` for `i >= 0` and `z_i = y_i` for `i < 0`,
/// with its exact box memberships.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BoxSplice {
    pub point: BiSeq,
    pub in_stable_box: bool,
    pub in_unstable_box: bool,
}

impl BoxSplice {
    pub fn in_both(&self) -> bool {
        self.in_stable_box && self.in_unstable_box
    }
}

/// Splices `y`'s past onto `x`'s future and checks the point against
/// `D^s_ε(x)` and `D^u_ε(y)`.
///
/// `d(x, y) < ε/4` only forces `|x_i - y_i| <= ε` for `|i| <= 2`, so farther
/// coordinates can leave the point outside the boxes; the flags report it.
pub fn dbox_splice(x: &BiSeq, y: &BiSeq, eps: &Rational) -> Result<BoxSplice> {
    if !eps.is_positive() {
        return Err(Error::Precondition(format!("eps = {} must be positive", rational::format(eps))));
    }
    require_unit(x)?;
    require_unit(y)?;
    let d = seq_metric(x, y)?.value;
    if d >= eps / rational::int(4) {
        return Err(Error::Precondition(format!(
            "d(x, y) = {} is not below eps/4 = {}",
            rational::format(&d),
            rational::format(&(eps / rational::int(4)))
        )));
    }
    let point = BiSeq::join(y, x, 0)?;
    let in_stable_box = box_contains(&DBox::loose(x, eps, BoxSide::Stable), &point)?;
    let in_unstable_box = box_contains(&DBox::loose(y, eps, BoxSide::Unstable), &point)?;
    Ok(BoxSplice { point, in_stable_box, in_unstable_box })
}

/// `v ± 1/n`, moving away from the nearer end of `[0, 1]`.
fn push_inward(v: &Rational, step: &Rational) -> Rational {
    let out = if *v <= ratio(1, 2) { v + step } else { v - step };
    assert!(!out.is_negative() && out <= Rational::one(), "a step below 1/2 stays in [0, 1]");
    out
}

/// The witness `z^m`: the splice of `y`'s past and `x`'s future with
/// coordinates `m` and `-m` each moved by `1/n`.
pub fn build_z_m(x: &BiSeq, y: &BiSeq, n: u64, m: i64) -> Result<BiSeq> {
    require_unit(x)?;
    require_unit(y)?;
    if n < 3 {
        return Err(Error::Precondition(format!("n = {n} must be at least 3")));
    }
    if m <= n as i64 {
        return Err(Error::OutOfRange(format!("m = {m} must exceed n = {n}")));
    }
    let step = ratio(1, n as i64);
    let z = BiSeq::join(y, x, 0)?;
    let z = z.with_values(m, &[push_inward(x.value_at(m), &step)])?;
    z.with_values(-m, &[push_inward(y.value_at(-m), &step)])
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NonuniformityReport {
    pub n: u64,
    pub m: i64,
    pub stable_ok: bool,
    pub unstable_ok: bool,
    #[serde(with = "rational::serde_str")]
    pub displacement: Rational,
    #[serde(with = "rational::serde_str")]
    pub lower_bound: Rational,
    pub refutes_uniformity: bool,
    #[serde(skip)]
    pub witness: BiSeq,
}

/// Least integer `n` with `1/n < delta/2`.
pub fn least_witness_n(delta: &Rational) -> u64 {
    let bound = (rational::int(2) / delta).floor().to_integer();
    u64::try_from(bound + 1u32).expect("delta is positive and small")
}

/// Builds `z^m` with `m = k_r_claim` and checks exactly that it lies in
/// `V^s_eps(x) ∩ V^u_eps(y)` yet is still `1/n > r` away from `x` at time `m`.
pub fn nonuniformity_report(
    eps: &Rational,
    delta: &Rational,
    r: &Rational,
    k_r_claim: i64,
    x: &BiSeq,
    y: &BiSeq,
) -> Result<NonuniformityReport> {
    let fmt = rational::format;
    if !eps.is_positive() || *eps >= ratio(1, 2) {
        return Err(Error::Precondition(format!("eps = {} not in (0, 1/2)", fmt(eps))));
    }
    if !delta.is_positive() || *delta >= eps / rational::int(2) {
        return Err(Error::Precondition(format!("delta = {} not in (0, eps/2)", fmt(delta))));
    }
    if !r.is_positive() || *r >= delta / rational::int(2) {
        return Err(Error::Precondition(format!("r = {} not in (0, delta/2)", fmt(r))));
    }
    let d = seq_metric(x, y)?.value;
    if d >= *delta {
        return Err(Error::Precondition(format!("d(x, y) = {} is not below delta", fmt(&d))));
    }
    let n = least_witness_n(delta);
    let lower_bound = ratio(1, n as i64);
    if lower_bound <= *r {
        return Err(Error::Precondition(format!("no integer n with r < 1/n < delta/2 for r = {}", fmt(r))));
    }
    if k_r_claim <= n as i64 {
        return Err(Error::Precondition(format!("claimed k_r = {k_r_claim} must exceed n = {n}")));
    }
    let m = k_r_claim;
    let sys = HilbertCube;
    let witness = build_z_m(x, y, n, m)?;
    let stable = stable_certificate(&sys, &witness, x, eps)?;
    let unstable = unstable_certificate(&sys, &witness, y, eps)?;
    let displacement = seq_metric(&x.shift(m), &witness.shift(m))?.value;
    let refutes_uniformity = stable.member && unstable.member && displacement >= lower_bound && lower_bound > *r;
    Ok(NonuniformityReport {
        n,
        m,
        stable_ok: stable.member,
        unstable_ok: unstable.member,
        displacement,
        lower_bound,
        refutes_uniformity,
        witness,
    })
}

/// The shift on `[0,1]^ℤ` with the weighted dyadic metric.
#[derive(Clone, Copy, Debug, Default)]
pub struct HilbertCube;

fn random_unit(rng: &mut ChaCha8Rng, budget: &SampleBudget) -> Rational {
    let den = rng.gen_range(1..=budget.max_den);
    ratio(rng.gen_range(0..=den), den)
}

fn random_point(rng: &mut ChaCha8Rng, budget: &SampleBudget) -> BiSeq {
    let (lp, cl, rp) = (
        rng.gen_range(1..=budget.max_period),
        rng.gen_range(0..=budget.max_core),
        rng.gen_range(1..=budget.max_period),
    );
    let mut word = |len: usize| (0..len).map(|_| random_unit(rng, budget)).collect::<Vec<_>>();
    let (left, core, right) = (word(lp), word(cl), word(rp));
    BiSeq::new(ValueSpace::UnitInterval, left, core, right, -(cl as i64) / 2).expect("values lie in [0, 1]")
}

impl ShiftSystem for HilbertCube {
    type Point = BiSeq;

    fn validate(&self, p: &BiSeq) -> Result<()> {
        require_unit(p)
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
            Perturbation::Nudge { coordinate, amount } => {
                let moved = p.value_at(*coordinate) + amount;
                if moved.is_negative() || moved > Rational::one() {
                    return Err(Error::IllegalPerturbation(format!(
                        "coordinate {coordinate} would move to {}",
                        rational::format(&moved)
                    )));
                }
                p.with_values(*coordinate, &[moved])
            }
            other => Err(Error::IllegalPerturbation(format!("{other:?} on the Hilbert cube"))),
        }
    }

    fn shadow_delta_limit(&self, eps: &Rational) -> Rational {
        eps / rational::int(4)
    }

    fn product_structure_delta(&self, eps: &Rational) -> Option<Rational> {
        Some(eps / rational::int(4))
    }

    fn rate_family(&self, eps: &Rational, horizon: u32) -> Vec<RateDeadline> {
        dyadic_family(eps, horizon)
    }

    fn sample_point(&self, rng: &mut ChaCha8Rng, budget: &SampleBudget) -> BiSeq {
        random_point(rng, budget)
    }

    /// Copies `x` and spends half of `delta` on a few coordinate moves in
    /// `[-M, M]`; with probability 1/2 the coordinates beyond `M` are
    /// replaced by a random point, which costs less than the other half.
    fn sample_near(&self, rng: &mut ChaCha8Rng, x: &BiSeq, delta: &Rational, budget: &SampleBudget) -> BiSeq {
        let half = delta / rational::int(2);
        let reach = agreement_radius(&half);
        let mut y = x.clone();
        if rng.gen_bool(0.5) {
            let outside = random_point(rng, budget);
            y = BiSeq::join(&outside, &y, -reach).expect("same space");
            y = BiSeq::join(&y, &outside, reach + 1).expect("same space");
        }
        let moves = rng.gen_range(1..=4);
        let share = half / rational::int(moves);
        for _ in 0..moves {
            let i = rng.gen_range(-reach..=reach);
            // |amount| / 2^{|i|} <= share.
            let limit = rational::scale_pow2(&share, -(i.abs()));
            let den = rng.gen_range(1..=budget.max_den);
            let amount = limit * ratio(rng.gen_range(-den..=den), den);
            let moved = (y.value_at(i) + amount).clamp(Rational::zero(), Rational::one());
            y = y.with_values(i, &[moved]).expect("clamped into [0, 1]");
        }
        y
    }
}
