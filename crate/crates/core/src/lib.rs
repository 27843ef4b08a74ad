//! Exact experiments on shift homeomorphisms of bi-infinite sequence
//! spaces: metrics, splicing, hyperspace decay and shadowing.

pub mod cubeshift;
pub mod error;
pub mod graphshift;
pub mod hyperspace;
pub mod rational;
pub mod seqspace;
pub mod shadowlab;
pub mod system;

pub use cubeshift::{BoxSide, DBox, HilbertCube};
pub use error::{Error, Result};
pub use graphshift::{LoopGraph, LoopShift, ProductPoint, ProductShift};
pub use hyperspace::{FiniteCompact, PairPolicy};
pub use rational::{ExactDist, Rational};
pub use seqspace::{seq_metric, Agreement, BiSeq, Coeffs, Side, ValueSpace};
pub use shadowlab::{Jump, Leg, PseudoOrbit};
pub use system::{FullShift, LoopKind, Perturbation, RateDeadline, SampleBudget, ShiftSystem};
