use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Deserialize;
use shiftlab::graphshift::LoopGraph;
use shiftlab::rational::{self, Rational};
use shiftlab::{FullShift, HilbertCube, Jump, LoopShift, PairPolicy, ProductShift, SampleBudget, ShiftSystem};

use crate::exit::Failure;

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceSpec {
    Cube,
    FullShift { alphabet: u32 },
    Loop { p: u32, q: u32, window: u64 },
    Product { primes: Vec<u32>, window: u64 },
}

impl SpaceSpec {
    pub fn label(&self) -> String {
        match self {
            SpaceSpec::Cube => "cube".into(),
            SpaceSpec::FullShift { alphabet } => format!("full_shift({alphabet})"),
            SpaceSpec::Loop { p, q, .. } => format!("loop({p},{q})"),
            SpaceSpec::Product { primes, .. } => {
                let ps: Vec<String> = primes.iter().map(u32::to_string).collect();
                format!("product({})", ps.join(","))
            }
        }
    }

    pub fn build(&self) -> Result<AnySystem, Failure> {
        Ok(match self {
            SpaceSpec::Cube => AnySystem::Cube(HilbertCube),
            SpaceSpec::FullShift { alphabet } => {
                if *alphabet == 0 {
                    return Err(Failure::usage("alphabet must be positive"));
                }
                AnySystem::Full(FullShift { alphabet: *alphabet })
            }
            SpaceSpec::Loop { p, q, window } => {
                AnySystem::Loop(LoopShift { graph: LoopGraph::new(*p, *q).map_err(Failure::usage_from)?, window: *window })
            }
            SpaceSpec::Product { primes, window } => {
                AnySystem::Product(ProductShift::new(primes.clone(), *window).map_err(Failure::usage_from)?)
            }
        })
    }
}

pub enum AnySystem {
    Cube(HilbertCube),
    Full(FullShift),
    Loop(LoopShift),
    Product(ProductShift),
}

/// Runs `$body` with `$sys` bound to the concrete system.
macro_rules! with_system {
    ($any:expr, $sys:ident => $body:expr) => {
        match $any {
            $crate::config::AnySystem::Cube($sys) => $body,
            $crate::config::AnySystem::Full($sys) => $body,
            $crate::config::AnySystem::Loop($sys) => $body,
            $crate::config::AnySystem::Product($sys) => $body,
        }
    };
}
pub(crate) use with_system;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetSpec {
    pub max_period: usize,
    pub max_core: usize,
    pub max_den: i64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitSpec {
    pub point: PathBuf,
    #[serde(default)]
    pub first_index: i64,
    pub length: u64,
    #[serde(default)]
    pub jumps: Vec<Jump>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub space: Option<SpaceSpec>,
    pub spaces: Option<Vec<SpaceSpec>>,
    #[serde(default, with = "rational::serde_opt_str")]
    pub eps: Option<Rational>,
    #[serde(default, with = "rational::serde_opt_str")]
    pub delta: Option<Rational>,
    #[serde(default, with = "rational::serde_opt_str")]
    pub r: Option<Rational>,
    pub horizon: Option<u32>,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
    pub policy: Option<PairPolicy>,
    pub budget: Option<BudgetSpec>,
    /// `cube` or `product`, for `counterexample`.
    pub regime: Option<String>,
    pub m_values: Option<Vec<i64>>,
    pub x: Option<PathBuf>,
    pub y: Option<PathBuf>,
    pub primes: Option<Vec<u32>>,
    pub factors: Option<usize>,
    pub n_eps: Option<usize>,
    pub i_max: Option<u64>,
    pub orbit: Option<OrbitSpec>,
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, Failure> {
        let Some(path) = path else {
            return Ok(ExperimentConfig { base_dir: PathBuf::from("."), ..Default::default() });
        };
        let text = fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        let mut cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
        Ok(cfg)
    }

    /// Paths inside a config file are relative to that file.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn space(&self) -> Result<&SpaceSpec, Failure> {
        self.space.as_ref().ok_or_else(|| Failure::usage("config needs a \"space\""))
    }

    pub fn rational(&self, name: &str, value: &Option<Rational>) -> Result<Rational, Failure> {
        value.clone().ok_or_else(|| Failure::usage(format!("config needs \"{name}\"")))
    }

    pub fn eps(&self) -> Result<Rational, Failure> {
        let eps = self.rational("eps", &self.eps)?;
        if eps <= rational::int(0) || eps >= rational::ratio(1, 2) {
            return Err(Failure::usage(format!("eps = {} must lie in (0, 1/2)", rational::format(&eps))));
        }
        Ok(eps)
    }

    pub fn budget(&self) -> Result<SampleBudget, Failure> {
        match &self.budget {
            None => Ok(SampleBudget::default()),
            Some(b) if b.max_period == 0 || b.max_den <= 0 => Err(Failure::usage("budget sizes must be positive")),
            Some(b) => Ok(SampleBudget { max_period: b.max_period, max_core: b.max_core, max_den: b.max_den }),
        }
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

pub fn read_point<S: ShiftSystem>(sys: &S, path: &Path) -> Result<S::Point, Failure> {
    let p: S::Point = read_json(path)?;
    sys.validate(&p).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    Ok(sys.canonical(&p))
}
