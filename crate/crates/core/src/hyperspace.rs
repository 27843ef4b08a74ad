//! Finite compacta in the hyperspace of a shift system: the Hausdorff
//! metric, the induced map, and the shadowing set built from splices of
//! nearby pairs.

use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, ExactDist, Rational};
use crate::system::{stable_certificate, unstable_certificate, LocalCertificate, RateDeadline, ShiftSystem};

/// A nonempty finite set of points, canonical and deduplicated, kept in
/// insertion order so that ties resolve by input order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FiniteCompact<P> {
    points: Vec<P>,
}

impl<P: Clone + PartialEq> FiniteCompact<P> {
    pub fn new<S: ShiftSystem<Point = P>>(sys: &S, points: impl IntoIterator<Item = P>) -> Result<Self> {
        let mut out: Vec<P> = Vec::new();
        for p in points {
            sys.validate(&p)?;
            let p = sys.canonical(&p);
            if !out.contains(&p) {
                out.push(p);
            }
        }
        if out.is_empty() {
            return Err(Error::InvalidPoint("a compact set needs at least one point".into()));
        }
        Ok(FiniteCompact { points: out })
    }

    pub fn singleton<S: ShiftSystem<Point = P>>(sys: &S, p: P) -> Result<Self> {
        Self::new(sys, [p])
    }

    pub fn points(&self) -> &[P] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `max_{a ∈ A} min_{b ∈ B} d(a, b)` and the index in `A` attaining it.
pub fn directed<S: ShiftSystem>(sys: &S, a: &[S::Point], b: &[S::Point]) -> Result<(Rational, usize)> {
    let mut worst = (Rational::zero(), 0);
    for (i, p) in a.iter().enumerate() {
        let mut nearest: Option<Rational> = None;
        for q in b {
            let d = sys.distance(p, q)?;
            if nearest.as_ref().is_none_or(|n| d < *n) {
                nearest = Some(d);
            }
        }
        let nearest = nearest.ok_or_else(|| Error::InvalidPoint("empty set".into()))?;
        if nearest > worst.0 {
            worst = (nearest, i);
        }
    }
    Ok(worst)
}

pub fn hausdorff<S: ShiftSystem>(sys: &S, a: &FiniteCompact<S::Point>, b: &FiniteCompact<S::Point>) -> Result<ExactDist> {
    let (ab, _) = directed(sys, &a.points, &b.points)?;
    let (ba, _) = directed(sys, &b.points, &a.points)?;
    Ok(ExactDist::exact(ab.max(ba)))
}

/// `2^f(A) = f^k(A)`; the shift is injective, so no points merge.
pub fn induced_map<S: ShiftSystem>(sys: &S, a: &FiniteCompact<S::Point>, k: i64) -> FiniteCompact<S::Point> {
    FiniteCompact { points: a.points.iter().map(|p| sys.shift(p, k)).collect() }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairPolicy {
    /// Every pair within `delta`.
    AllPairs,
    /// A nearest partner for each point of either set.
    #[default]
    CoveringPairs,
}

/// Index pairs `(i, j)` into `A` and `B` with `d(A[i], B[j]) <= delta`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PairSet {
    pub pairs: Vec<(usize, usize)>,
    #[serde(with = "rational::serde_str")]
    pub delta: Rational,
}

pub fn build_psi<S: ShiftSystem>(
    sys: &S,
    a: &FiniteCompact<S::Point>,
    b: &FiniteCompact<S::Point>,
    delta: &Rational,
    policy: PairPolicy,
) -> Result<PairSet> {
    let dh = hausdorff(sys, a, b)?.value;
    if dh >= *delta {
        return Err(Error::Precondition(format!(
            "d_H(A, B) = {} is not below delta = {}",
            rational::format(&dh),
            rational::format(delta)
        )));
    }
    let matrix: Vec<Vec<Rational>> = a
        .points
        .iter()
        .map(|p| b.points.iter().map(|q| sys.distance(p, q)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let close = |i: usize, j: usize| matrix[i][j] <= *delta;
    let nearest = |cands: &mut dyn Iterator<Item = (usize, usize)>| {
        cands.filter(|&(i, j)| close(i, j)).min_by(|&(i, j), &(k, l)| matrix[i][j].cmp(&matrix[k][l]))
    };

    let mut pairs = Vec::new();
    match policy {
        PairPolicy::AllPairs => {
            for i in 0..a.len() {
                pairs.extend((0..b.len()).filter(|&j| close(i, j)).map(|j| (i, j)));
            }
        }
        PairPolicy::CoveringPairs => {
            for i in 0..a.len() {
                let pair = nearest(&mut (0..b.len()).map(|j| (i, j)))
                    .ok_or_else(|| Error::Precondition(format!("A[{i}] has no partner within delta")))?;
                pairs.push(pair);
            }
            for j in 0..b.len() {
                let pair = nearest(&mut (0..a.len()).map(|i| (i, j)))
                    .ok_or_else(|| Error::Precondition(format!("B[{j}] has no partner within delta")))?;
                if !pairs.contains(&pair) {
                    pairs.push(pair);
                }
            }
        }
    }
    let covered_a = (0..a.len()).all(|i| pairs.iter().any(|p| p.0 == i));
    let covered_b = (0..b.len()).all(|j| pairs.iter().any(|p| p.1 == j));
    if !covered_a || !covered_b {
        return Err(Error::Precondition("some point has no partner within delta".into()));
    }
    Ok(PairSet { pairs, delta: delta.clone() })
}

/// `C`: one splice per pair of `Ψ`, following `A[i]` forward and `B[j]`
/// backward.
#[derive(Clone, Debug)]
pub struct ShadowSet<P> {
    pub psi: PairSet,
    /// The splice of each pair, aligned with `psi.pairs`.
    pub splices: Vec<P>,
    pub c: FiniteCompact<P>,
}

pub fn build_c<S: ShiftSystem>(
    sys: &S,
    a: &FiniteCompact<S::Point>,
    b: &FiniteCompact<S::Point>,
    eps: &Rational,
    delta: &Rational,
    policy: PairPolicy,
) -> Result<ShadowSet<S::Point>> {
    if let Some(limit) = sys.product_structure_delta(eps) {
        if *delta > limit {
            return Err(Error::Precondition(format!(
                "delta = {} exceeds the splice limit {}",
                rational::format(delta),
                rational::format(&limit)
            )));
        }
    }
    let psi = build_psi(sys, a, b, delta, policy)?;
    let splices = psi
        .pairs
        .iter()
        .map(|&(i, j)| {
            sys.local_splice(&a.points[i], &b.points[j])
                .map_err(|e| Error::SpliceFailed(format!("pair (A[{i}], B[{j}]): {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let c = FiniteCompact::new(sys, splices.iter().cloned())?;
    Ok(ShadowSet { psi, splices, c })
}

/// Exact distances at one time `n`: forward against `A`, backward against `B`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DecayRow {
    pub n: u32,
    /// `d_H(σ^n C, σ^n A)`.
    #[serde(with = "rational::serde_str")]
    pub forward: Rational,
    /// `d_H(σ^{-n} C, σ^{-n} B)`.
    #[serde(with = "rational::serde_str")]
    pub backward: Rational,
    /// The enforced bound: `eps` and every rate whose deadline has passed.
    #[serde(with = "rational::serde_str")]
    pub bound: Rational,
    #[serde(skip)]
    inclusions: [(Rational, usize); 4],
}

const INCLUSIONS: [&str; 4] = ["C_in_A", "A_in_C", "C_in_B", "B_in_C"];

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub n: u32,
    /// Which one-sided inclusion failed, e.g. `C_in_A` for `σ^n C ⊂ B(σ^n A, bound)`.
    pub inclusion: &'static str,
    #[serde(with = "rational::serde_str")]
    pub distance: Rational,
    #[serde(with = "rational::serde_str")]
    pub bound: Rational,
    /// Index of the offending point in the first set of the inclusion.
    pub witness: usize,
    /// A pair of `Ψ` generating or covering the witness.
    pub pair: Option<(usize, usize)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PairCertificate {
    pub pair: (usize, usize),
    pub stable: LocalCertificate,
    pub unstable: LocalCertificate,
}

#[derive(Clone, Debug, Serialize)]
pub struct TheoremAReport {
    #[serde(with = "rational::serde_str")]
    pub eps: Rational,
    #[serde(with = "rational::serde_str")]
    pub delta: Rational,
    pub horizon: u32,
    pub policy: PairPolicy,
    pub pairs: Vec<(usize, usize)>,
    pub c_size: usize,
    pub rates: Vec<RateDeadline>,
    pub rows: Vec<DecayRow>,
    pub certificates: Vec<PairCertificate>,
    pub violations: Vec<Violation>,
    pub pass: bool,
}

fn row_bound(eps: &Rational, rates: &[RateDeadline], n: u32) -> Rational {
    rates.iter().filter(|d| d.k_r <= n).map(|d| d.r.clone()).fold(eps.clone(), Rational::min)
}

/// Builds `C` and checks, for `0 <= n <= horizon`, both one-sided
/// inclusions of `σ^n C` against `σ^n A` and of `σ^{-n} C` against
/// `σ^{-n} B`, at `eps` and at every known rate past its deadline.
pub fn verify_theorem_a<S: ShiftSystem>(
    sys: &S,
    a: &FiniteCompact<S::Point>,
    b: &FiniteCompact<S::Point>,
    eps: &Rational,
    delta: &Rational,
    horizon: u32,
    policy: PairPolicy,
) -> Result<TheoremAReport> {
    let shadow = build_c(sys, a, b, eps, delta, policy)?;
    let rates = sys.rate_family(eps, horizon);
    let c = &shadow.c;

    let rows = (0..=horizon)
        .into_par_iter()
        .map(|n| {
            let k = i64::from(n);
            let (cf, af) = (induced_map(sys, c, k), induced_map(sys, a, k));
            let (cb, bb) = (induced_map(sys, c, -k), induced_map(sys, b, -k));
            let inclusions = [
                directed(sys, &cf.points, &af.points)?,
                directed(sys, &af.points, &cf.points)?,
                directed(sys, &cb.points, &bb.points)?,
                directed(sys, &bb.points, &cb.points)?,
            ];
            Ok(DecayRow {
                n,
                forward: inclusions[0].0.clone().max(inclusions[1].0.clone()),
                backward: inclusions[2].0.clone().max(inclusions[3].0.clone()),
                bound: row_bound(eps, &rates, n),
                inclusions,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let pair_of = |inclusion: usize, witness: usize| -> Option<(usize, usize)> {
        let pairs = &shadow.psi.pairs;
        match inclusion {
            0 | 2 => shadow.splices.iter().position(|z| *z == c.points[witness]).map(|p| pairs[p]),
            1 => pairs.iter().copied().find(|p| p.0 == witness),
            _ => pairs.iter().copied().find(|p| p.1 == witness),
        }
    };
    let mut violations = Vec::new();
    for row in &rows {
        for (idx, (distance, witness)) in row.inclusions.iter().enumerate() {
            if *distance > row.bound {
                violations.push(Violation {
                    n: row.n,
                    inclusion: INCLUSIONS[idx],
                    distance: distance.clone(),
                    bound: row.bound.clone(),
                    witness: *witness,
                    pair: pair_of(idx, *witness),
                });
            }
        }
    }

    let certificates = shadow
        .psi
        .pairs
        .par_iter()
        .zip(shadow.splices.par_iter())
        .map(|(&(i, j), z)| {
            Ok(PairCertificate {
                pair: (i, j),
                stable: stable_certificate(sys, z, &a.points[i], eps)?,
                unstable: unstable_certificate(sys, z, &b.points[j], eps)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let pass = violations.is_empty() && certificates.iter().all(|c| c.stable.member && c.unstable.member);
    Ok(TheoremAReport {
        eps: eps.clone(),
        delta: delta.clone(),
        horizon,
        policy,
        pairs: shadow.psi.pairs.clone(),
        c_size: c.len(),
        rates,
        rows,
        certificates,
        violations,
        pass,
    })
}
