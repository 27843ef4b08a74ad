//! Two-loop graph shifts `X_(p,q)` and their finite products.
//!
//! The graph has vertex 0 shared by a `p`-loop `0 → 1 → … → p-1 → 0` and a
//! `q`-loop `0 → p → p+1 → … → p+q-2 → 0`, so the alphabet has `p + q - 1`
//! symbols. A product point carries one walk per factor `n = 1..=N`, factor
//! `n` living on the graph for consecutive primes `(p_n, p_{n+1})`. Factors
//! beyond `N` are taken equal in both arguments of every metric call, which
//! makes the truncated product metric exact.

use num_integer::Integer;
use num_traits::Zero;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, pow2_inv, ratio, ExactDist, Rational};
use crate::seqspace::{seq_metric, Agreement, BiSeq, Side, ValueSpace};
use crate::system::{agreement_radius, LoopKind, Perturbation, SampleBudget, ShiftSystem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LoopGraph {
    p: u32,
    q: u32,
}

impl LoopGraph {
    pub fn new(p: u32, q: u32) -> Result<Self> {
        if p == 0 || q == 0 || p.gcd(&q) != 1 {
            return Err(Error::Precondition(format!("loop lengths ({p}, {q}) must be positive and coprime")));
        }
        Ok(LoopGraph { p, q })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn alphabet(&self) -> u32 {
        self.p + self.q - 1
    }

    pub fn space(&self) -> ValueSpace {
        ValueSpace::Discrete { alphabet: self.alphabet() }
    }

    /// `(0, 1, …, p-1)`.
    pub fn p_loop(&self) -> Vec<u32> {
        (0..self.p).collect()
    }

    /// `(0, p, p+1, …, p+q-2)`.
    pub fn q_loop(&self) -> Vec<u32> {
        std::iter::once(0).chain(self.p..self.p + self.q - 1).collect()
    }

    pub fn loop_word(&self, kind: LoopKind) -> Vec<u32> {
        match kind {
            LoopKind::P => self.p_loop(),
            LoopKind::Q => self.q_loop(),
        }
    }

    pub fn has_edge(&self, a: u32, b: u32) -> bool {
        let next_in = |word: &[u32]| {
            word.iter()
                .position(|&v| v == a)
                .is_some_and(|j| word[(j + 1) % word.len()] == b)
        };
        next_in(&self.p_loop()) || next_in(&self.q_loop())
    }

    /// The periodic walk repeating one loop, at vertex 0 at `anchor`.
    pub fn loop_walk(&self, kind: LoopKind, anchor: i64) -> BiSeq {
        let word = to_rationals(&self.loop_word(kind));
        BiSeq::periodic(self.space(), word, anchor).expect("loop symbols are in the alphabet")
    }

    /// A finite walk `0 … 0` of `p_loops` p-loops then `q_loops` q-loops,
    /// including the closing 0.
    pub fn connector(&self, p_loops: u64, q_loops: u64) -> Vec<u32> {
        let mut walk = Vec::new();
        for _ in 0..p_loops {
            walk.extend(self.p_loop());
        }
        for _ in 0..q_loops {
            walk.extend(self.q_loop());
        }
        walk.push(0);
        walk
    }

    /// Nonnegative `(a, b)` with `a p + b q = n`, preferring the fewest q-loops.
    pub fn loop_decomposition(&self, n: u64) -> Option<(u64, u64)> {
        let (p, q) = (u64::from(self.p), u64::from(self.q));
        (0..=n / q).find(|b| (n - b * q).is_multiple_of(p)).map(|b| ((n - b * q) / p, b))
    }
}

fn to_rationals(word: &[u32]) -> Vec<Rational> {
    word.iter().map(|&s| rational::int(s.into())).collect()
}

/// Whether every adjacent pair of `s` is an edge of `g`.
pub fn validate_walk(s: &BiSeq, g: &LoopGraph) -> Result<bool> {
    if s.space() != g.space() {
        return Err(Error::SpaceMismatch(format!("walk over {:?}, graph alphabet {}", s.space(), g.alphabet())));
    }
    // Adjacent pairs inside either tail repeat with the tail's period, so one
    // block on each side of the core decides all of them.
    let lo = s.core_start() - s.left_period().len() as i64 - 1;
    let hi = s.right_start() + s.right_period().len() as i64;
    Ok((lo..=hi).all(|i| g.has_edge(s.symbol_at(i), s.symbol_at(i + 1))))
}

/// Splices the past of `y_past` onto the future of `x_future` through
/// whole loops based at vertex 0.
///
/// Finds the last vertex-0 visit `u` of `y_past` in `[-window, 0]` and the
/// first vertex-0 visit `e >= u` of `x_future` such that `e - u` is a sum
/// of loop lengths, with `e <= window + p q`. Returns `None` when either
/// side has no vertex-0 visit within the window.
pub fn splice_walks(x_future: &BiSeq, y_past: &BiSeq, g: &LoopGraph, window: u64) -> Option<BiSeq> {
    if x_future.space() != g.space() || y_past.space() != g.space() {
        return None;
    }
    if x_future.same_function(y_past) {
        return Some(x_future.canonical());
    }
    let window = window as i64;
    let u = (-window..=0).rev().find(|&i| y_past.symbol_at(i) == 0)?;
    (0..=window).find(|&i| x_future.symbol_at(i) == 0)?;
    let limit = window + i64::from(g.p) * i64::from(g.q);
    // Starting at u lets walks that share the visit join with no connector.
    let end = (u..=limit)
        .find(|&e| x_future.symbol_at(e) == 0 && g.loop_decomposition((e - u) as u64).is_some())?;
    let (a, b) = g.loop_decomposition((end - u) as u64)?;
    let bridge_word = to_rationals(&g.connector(a, b));
    let zero = vec![Rational::zero()];
    let bridge = BiSeq::new(g.space(), zero.clone(), bridge_word, zero, u).ok()?;
    let head = BiSeq::join(y_past, &bridge, u).ok()?;
    BiSeq::join(&head, x_future, end).ok()
}

/// A point of the product of loop-graph shifts, truncated at `N` factors.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProductPoint {
    primes: Vec<u32>,
    factors: Vec<BiSeq>,
}

fn is_prime(n: u32) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
}

fn check_primes(primes: &[u32]) -> Result<()> {
    if primes.len() < 2 {
        return Err(Error::ShapeMismatch("need at least two primes (one factor)".into()));
    }
    if let Some(p) = primes.iter().find(|p| !is_prime(**p)) {
        return Err(Error::ShapeMismatch(format!("{p} is not prime")));
    }
    if primes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::ShapeMismatch("primes must be strictly increasing".into()));
    }
    Ok(())
}

impl ProductPoint {
    pub fn new(primes: Vec<u32>, factors: Vec<BiSeq>) -> Result<Self> {
        check_primes(&primes)?;
        if factors.len() + 1 != primes.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} factors need {} primes, got {}",
                factors.len(),
                factors.len() + 1,
                primes.len()
            )));
        }
        let point = ProductPoint { primes, factors: factors.iter().map(BiSeq::canonical).collect() };
        for n in 1..=point.factor_count() {
            if !validate_walk(point.factor(n), &point.graph(n))? {
                return Err(Error::InvalidPoint(format!("factor {n} is not a walk in X_({}, {})", point.primes[n - 1], point.primes[n])));
            }
        }
        Ok(point)
    }

    pub fn primes(&self) -> &[u32] {
        &self.primes
    }

    pub fn factors(&self) -> &[BiSeq] {
        &self.factors
    }

    pub fn factor_count(&self) -> usize {
        self.factors.len()
    }

    /// Factor `n`, 1-based.
    pub fn factor(&self, n: usize) -> &BiSeq {
        &self.factors[n - 1]
    }

    pub fn graph(&self, n: usize) -> LoopGraph {
        LoopGraph { p: self.primes[n - 1], q: self.primes[n] }
    }

    fn with_factor(&self, n: usize, factor: BiSeq) -> ProductPoint {
        let mut out = self.clone();
        out.factors[n - 1] = factor.canonical();
        out
    }

    fn same_shape(&self, other: &ProductPoint) -> Result<()> {
        if self.primes == other.primes {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!("primes {:?} vs {:?}", self.primes, other.primes)))
        }
    }
}

/// The point whose factor `n` repeats the `p_n`-loop with `x_{n,0} = 0`.
pub fn base_point(primes: &[u32], factor_count: usize) -> Result<ProductPoint> {
    if factor_count == 0 {
        return Err(Error::ShapeMismatch("need at least one factor".into()));
    }
    if primes.len() < factor_count + 1 {
        return Err(Error::ShapeMismatch(format!("{factor_count} factors need {} primes", factor_count + 1)));
    }
    let primes = primes[..=factor_count].to_vec();
    check_primes(&primes)?;
    let factors = (1..=factor_count)
        .map(|n| LoopGraph::new(primes[n - 1], primes[n]).map(|g| g.loop_walk(LoopKind::P, 0)))
        .collect::<Result<Vec<_>>>()?;
    ProductPoint::new(primes, factors)
}

/// `d(a, b) = Σ_{n <= N} d_n(a_n, b_n) / 2^n`.
pub fn product_metric(a: &ProductPoint, b: &ProductPoint) -> Result<ExactDist> {
    a.same_shape(b)?;
    let mut total = Rational::zero();
    for (n, (fa, fb)) in a.factors.iter().zip(&b.factors).enumerate() {
        total += seq_metric(fa, fb)?.value * pow2_inv(n as u64 + 1);
    }
    Ok(ExactDist::exact(total))
}

/// `F^k`: every factor shifted by `k`.
pub fn apply_f(a: &ProductPoint, k: i64) -> ProductPoint {
    ProductPoint { primes: a.primes.clone(), factors: a.factors.iter().map(|f| f.shift(k)).collect() }
}

/// Factor-wise agreement, combined: the latest forward (earliest backward)
/// index over factors, `Never` if any factor never agrees.
pub fn product_agreement(a: &ProductPoint, b: &ProductPoint, side: Side) -> Result<Agreement> {
    a.same_shape(b)?;
    let mut combined = Agreement::Everywhere;
    for (fa, fb) in a.factors.iter().zip(&b.factors) {
        combined = match (combined, fa.agreement(fb, side)?) {
            (_, Agreement::Never) | (Agreement::Never, _) => return Ok(Agreement::Never),
            (c, Agreement::Everywhere) => c,
            (Agreement::Everywhere, f) => f,
            (Agreement::From(c), Agreement::From(f)) => Agreement::From(match side {
                Side::Forward => c.max(f),
                Side::Backward => c.min(f),
            }),
        };
    }
    Ok(combined)
}

/// The loop-switch witness `z(i)`.
///
/// Factor `n_eps` follows `i` loops of length `p`, then `p` loops of length
/// `q`, then rejoins the base point from index `i p + p q` on; all other
/// factors equal the base point.
pub fn build_z_i(x: &ProductPoint, n_eps: usize, i: u64) -> Result<ProductPoint> {
    if n_eps == 0 || n_eps > x.factor_count() {
        return Err(Error::OutOfRange(format!("factor {n_eps} not in 1..={}", x.factor_count())));
    }
    if i == 0 {
        return Err(Error::OutOfRange("i must be positive".into()));
    }
    let g = x.graph(n_eps);
    let base = g.loop_walk(LoopKind::P, 0);
    if !x.factor(n_eps).same_function(&base) {
        return Err(Error::Precondition(format!("factor {n_eps} is not the base p-loop walk")));
    }
    let (p, q) = (i64::from(g.p), i64::from(g.q));
    let start = i as i64 * p;
    let detour = to_rationals(&g.connector(0, u64::from(g.p)));
    let bridge = BiSeq::new(g.space(), vec![Rational::zero()], detour, vec![Rational::zero()], start)?;
    let head = BiSeq::join(&base, &bridge, start)?;
    let factor = BiSeq::join(&head, &base, start + p * q)?;
    Ok(x.with_factor(n_eps, factor))
}

/// `d(F^{i p}(x), F^{i p}(z(i)))`, with `z_i` checked against the
/// construction.
pub fn z_i_displacement(x: &ProductPoint, z_i: &ProductPoint, n_eps: usize, i: u64) -> Result<ExactDist> {
    let expected = build_z_i(x, n_eps, i)?;
    if expected != *z_i {
        return Err(Error::Precondition(format!("argument is not z({i}) for factor {n_eps}")));
    }
    let steps = i as i64 * i64::from(x.graph(n_eps).p);
    product_metric(&apply_f(x, steps), &apply_f(z_i, steps))
}

/// The shift on one loop graph, splicing through `window`.
#[derive(Clone, Debug)]
pub struct LoopShift {
    pub graph: LoopGraph,
    pub window: u64,
}

fn join_walks(g: &LoopGraph, window: u64, past: &BiSeq, future: &BiSeq, boundary: i64) -> Result<BiSeq> {
    let direct = BiSeq::join(past, future, boundary)?;
    if validate_walk(&direct, g)? {
        return Ok(direct);
    }
    splice_walks(&future.shift(boundary), &past.shift(boundary), g, window)
        .map(|z| z.shift(-boundary))
        .ok_or_else(|| Error::SpliceFailed(format!("no loop connector near index {boundary} within window {window}")))
}

fn loop_switch(g: &LoopGraph, p: &BiSeq, from: i64, kind: LoopKind) -> Result<BiSeq> {
    let reach = i64::from(g.p.max(g.q));
    let c = (from..=from + reach)
        .find(|&i| p.symbol_at(i) == 0)
        .ok_or_else(|| Error::IllegalPerturbation(format!("no visit to vertex 0 after {from}")))?;
    BiSeq::join(p, &g.loop_walk(kind, c), c)
}

fn random_loops(g: &LoopGraph, rng: &mut ChaCha8Rng, count: std::ops::RangeInclusive<usize>) -> Vec<Rational> {
    let count = rng.gen_range(count);
    let mut word = Vec::new();
    for _ in 0..count {
        let kind = if rng.gen_bool(0.5) { LoopKind::P } else { LoopKind::Q };
        word.extend(g.loop_word(kind));
    }
    to_rationals(&word)
}

fn random_walk(g: &LoopGraph, rng: &mut ChaCha8Rng, budget: &SampleBudget) -> BiSeq {
    let left = random_loops(g, rng, 1..=budget.max_period);
    let right = random_loops(g, rng, 1..=budget.max_period);
    let core = random_loops(g, rng, 0..=budget.max_core / 2);
    let walk = BiSeq::new(g.space(), left, core, right, 0).expect("loop symbols are in the alphabet");
    walk.shift(rng.gen_range(0..i64::from(g.p * g.q)))
}

/// `y` agreeing with the walk `x` on `[-m, m]` and random elsewhere.
fn random_walk_near(g: &LoopGraph, rng: &mut ChaCha8Rng, x: &BiSeq, m: i64, budget: &SampleBudget) -> BiSeq {
    let reach = i64::from(g.p.max(g.q));
    let right_cut = (m + 1..=m + 1 + reach).find(|&i| x.symbol_at(i) == 0).expect("walks revisit 0");
    let left_cut = (-m - reach..=-m).rev().find(|&i| x.symbol_at(i) == 0).expect("walks revisit 0");
    // Random walks re-anchored so that a loop starts at the cut.
    let anchor = |w: BiSeq, cut: i64| {
        let zero = (0..).find(|&i| w.symbol_at(i) == 0).expect("walks revisit 0");
        w.shift(zero - cut)
    };
    let past = anchor(random_walk(g, rng, budget), left_cut);
    let future = anchor(random_walk(g, rng, budget), right_cut);
    let y = BiSeq::join(&past, x, left_cut).expect("same space");
    BiSeq::join(&y, &future, right_cut).expect("same space")
}

impl ShiftSystem for LoopShift {
    type Point = BiSeq;

    fn validate(&self, p: &BiSeq) -> Result<()> {
        if validate_walk(p, &self.graph)? {
            Ok(())
        } else {
            Err(Error::InvalidPoint(format!("not a walk in X_({}, {})", self.graph.p, self.graph.q)))
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
        join_walks(&self.graph, self.window, past, future, boundary)
    }

    fn local_splice(&self, x: &BiSeq, y: &BiSeq) -> Result<BiSeq> {
        splice_walks(x, y, &self.graph, self.window)
            .ok_or_else(|| Error::SpliceFailed(format!("no connector within window {}", self.window)))
    }

    fn perturb(&self, p: &BiSeq, perturbation: &Perturbation) -> Result<BiSeq> {
        match perturbation {
            Perturbation::LoopSwitch { factor: 1, from, loop_kind } => loop_switch(&self.graph, p, *from, *loop_kind),
            other => Err(Error::IllegalPerturbation(format!("{other:?} on a loop shift"))),
        }
    }

    fn shadow_delta_limit(&self, _eps: &Rational) -> Rational {
        ratio(1, 4)
    }

    fn sample_point(&self, rng: &mut ChaCha8Rng, budget: &SampleBudget) -> BiSeq {
        random_walk(&self.graph, rng, budget)
    }

    fn sample_near(&self, rng: &mut ChaCha8Rng, x: &BiSeq, delta: &Rational, budget: &SampleBudget) -> BiSeq {
        random_walk_near(&self.graph, rng, x, agreement_radius(delta), budget)
    }
}

/// The product system `F = σ_1 × … × σ_N`.
#[derive(Clone, Debug)]
pub struct ProductShift {
    pub primes: Vec<u32>,
    pub window: u64,
}

impl ProductShift {
    pub fn new(primes: Vec<u32>, window: u64) -> Result<Self> {
        check_primes(&primes)?;
        Ok(ProductShift { primes, window })
    }

    fn factor_count(&self) -> usize {
        self.primes.len() - 1
    }

    fn graph(&self, n: usize) -> LoopGraph {
        LoopGraph { p: self.primes[n - 1], q: self.primes[n] }
    }

    fn per_factor(&self, a: &ProductPoint, b: &ProductPoint, f: impl Fn(&LoopGraph, &BiSeq, &BiSeq) -> Result<BiSeq>) -> Result<ProductPoint> {
        a.same_shape(b)?;
        let factors = (1..=a.factor_count())
            .map(|n| f(&a.graph(n), a.factor(n), b.factor(n)))
            .collect::<Result<Vec<_>>>()?;
        Ok(ProductPoint { primes: a.primes.clone(), factors })
    }
}

impl ShiftSystem for ProductShift {
    type Point = ProductPoint;

    fn validate(&self, p: &ProductPoint) -> Result<()> {
        if p.primes != self.primes {
            return Err(Error::ShapeMismatch(format!("primes {:?} vs {:?}", p.primes, self.primes)));
        }
        ProductPoint::new(p.primes.clone(), p.factors.clone()).map(|_| ())
    }

    fn canonical(&self, p: &ProductPoint) -> ProductPoint {
        ProductPoint { primes: p.primes.clone(), factors: p.factors.iter().map(BiSeq::canonical).collect() }
    }

    fn shift(&self, p: &ProductPoint, k: i64) -> ProductPoint {
        apply_f(p, k)
    }

    fn distance(&self, a: &ProductPoint, b: &ProductPoint) -> Result<Rational> {
        Ok(product_metric(a, b)?.value)
    }

    fn agreement(&self, a: &ProductPoint, b: &ProductPoint, side: Side) -> Result<Agreement> {
        product_agreement(a, b, side)
    }

    fn join(&self, past: &ProductPoint, future: &ProductPoint, boundary: i64) -> Result<ProductPoint> {
        let window = self.window;
        self.per_factor(past, future, |g, p, f| join_walks(g, window, p, f, boundary))
    }

    fn local_splice(&self, x: &ProductPoint, y: &ProductPoint) -> Result<ProductPoint> {
        let window = self.window;
        self.per_factor(x, y, |g, xf, yf| {
            splice_walks(xf, yf, g, window).ok_or_else(|| Error::SpliceFailed(format!("no connector within window {window}")))
        })
    }

    fn perturb(&self, p: &ProductPoint, perturbation: &Perturbation) -> Result<ProductPoint> {
        match perturbation {
            Perturbation::LoopSwitch { factor, from, loop_kind } if (1..=self.factor_count()).contains(factor) => {
                let switched = loop_switch(&self.graph(*factor), p.factor(*factor), *from, *loop_kind)?;
                Ok(p.with_factor(*factor, switched))
            }
            other => Err(Error::IllegalPerturbation(format!("{other:?} on a product of loop shifts"))),
        }
    }

    fn shadow_delta_limit(&self, _eps: &Rational) -> Rational {
        ratio(1, 4)
    }

    fn sample_point(&self, rng: &mut ChaCha8Rng, budget: &SampleBudget) -> ProductPoint {
        let factors = (1..=self.factor_count()).map(|n| random_walk(&self.graph(n), rng, budget)).collect();
        ProductPoint { primes: self.primes.clone(), factors }
    }

    fn sample_near(&self, rng: &mut ChaCha8Rng, x: &ProductPoint, delta: &Rational, budget: &SampleBudget) -> ProductPoint {
        // Each factor within delta keeps the weighted sum below delta.
        let m = agreement_radius(delta);
        let factors = (1..=self.factor_count())
            .map(|n| random_walk_near(&self.graph(n), rng, x.factor(n), m, budget))
            .collect();
        ProductPoint { primes: self.primes.clone(), factors }
    }
}
