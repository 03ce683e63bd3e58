//! Instance files: a model kind, its static parameters and an optional
//! sweep that maps one or two sweep variables onto named parameters.
//!
//! ```json
//! {
//!   "kind": "two_level",
//!   "params": { "eps1": [0.0, -0.1], "eps2": [0.0, 0.0], "omega": [0.2, 0.0] },
//!   "sweep": {
//!     "path": [
//!       { "param": "eps1.re", "var": 0, "slope": 1.0 },
//!       { "param": "eps2.re", "var": 0, "slope": -1.0 }
//!     ],
//!     "grid": { "start": -1.0, "stop": 1.0, "count": 101, "scale": "linear" }
//!   },
//!   "outputs": ["eigenvalues", "widths", "rigidity", "avoided_crossings"]
//! }
//! ```

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::effective::EffectiveHamiltonian;
use crate::matrix::ComplexMatrix;
use crate::pt_dimer::PtDimer;
use crate::trajectory::{linspace, logspace, ParamFamily};
use crate::two_level::TwoLevelSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    TwoLevel,
    PtDimer,
    NLevel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    #[serde(default = "linear")]
    pub scale: Scale,
}

fn linear() -> Scale {
    Scale::Linear
}

/// `param = offset + slope · x[var]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathEntry {
    pub param: String,
    #[serde(default)]
    pub var: usize,
    #[serde(default)]
    pub offset: f64,
    #[serde(default = "one")]
    pub slope: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default)]
    pub path: Vec<PathEntry>,
    pub grid: Option<GridSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Output {
    Eigenvalues,
    Widths,
    Rigidity,
    AvoidedCrossings,
    Bics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub kind: Kind,
    pub params: Value,
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub outputs: Vec<Output>,
    /// Seed for random `n_level` instances; `--seed` overrides it.
    pub seed: Option<u64>,
    pub description: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct TwoLevelParams {
    eps1: Complex64,
    eps2: Complex64,
    omega: Complex64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct PtParams {
    #[serde(default)]
    epsilon: f64,
    #[serde(default)]
    gamma: f64,
    b: Complex64,
    #[serde(default)]
    passive: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RandomSpec {
    levels: usize,
    channels: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct NLevelParams {
    h_b: Option<Vec<Vec<f64>>>,
    v: Option<Vec<Vec<f64>>>,
    random: Option<RandomSpec>,
    #[serde(default)]
    alpha: f64,
    symmetry: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    TwoLevel(TwoLevelSystem),
    PtDimer { epsilon: f64, gamma: f64, b: Complex64, passive: bool },
    NLevel { eh: EffectiveHamiltonian, symmetry: Option<Vec<usize>> },
}

fn set_complex(z: &mut Complex64, part: &str, value: f64) -> Result<(), String> {
    match part {
        "re" => z.re = value,
        "im" => z.im = value,
        _ => return Err(format!("unknown component `{part}`, expected `re` or `im`")),
    }
    Ok(())
}

impl Model {
    fn from_instance(inst: &InstanceFile, seed_override: Option<u64>) -> Result<(Self, Option<u64>), String> {
        let p = &inst.params;
        let err = |e: serde_json::Error| format!("params: {e}");
        match inst.kind {
            Kind::TwoLevel => {
                let t: TwoLevelParams = serde_json::from_value(p.clone()).map_err(err)?;
                Ok((Model::TwoLevel(TwoLevelSystem::new(t.eps1, t.eps2, t.omega)), None))
            }
            Kind::PtDimer => {
                let t: PtParams = serde_json::from_value(p.clone()).map_err(err)?;
                PtDimer::new(t.epsilon, t.gamma, t.b).map_err(|e| format!("params: {e}"))?;
                Ok((
                    Model::PtDimer {
                        epsilon: t.epsilon,
                        gamma: t.gamma,
                        b: t.b,
                        passive: t.passive,
                    },
                    None,
                ))
            }
            Kind::NLevel => {
                let t: NLevelParams = serde_json::from_value(p.clone()).map_err(err)?;
                let (eh, seed) = match (t.h_b, t.v, t.random) {
                    (Some(h), Some(v), None) => (EffectiveHamiltonian::new(h, v, t.alpha), None),
                    (None, None, Some(r)) => {
                        let seed = seed_override.or(inst.seed).unwrap_or(0);
                        (
                            EffectiveHamiltonian::random(r.levels, r.channels, seed).and_then(|e| e.with_alpha(t.alpha)),
                            Some(seed),
                        )
                    }
                    _ => return Err("params: n_level needs either `h_b` and `v`, or `random`".into()),
                };
                let eh = eh.map_err(|e| format!("params: {e}"))?;
                Ok((Model::NLevel { eh, symmetry: t.symmetry }, seed))
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Model::TwoLevel(_) | Model::PtDimer { .. } => 2,
            Model::NLevel { eh, .. } => eh.levels(),
        }
    }

    fn set(&mut self, name: &str, value: f64) -> Result<(), String> {
        let (head, part) = match name.split_once('.') {
            Some((h, p)) => (h, Some(p)),
            None => (name, None),
        };
        let complex_hint = || format!("`{name}` is complex, use `{name}.re` or `{name}.im`");
        match self {
            Model::TwoLevel(s) => {
                let z = match head {
                    "eps1" => &mut s.eps1,
                    "eps2" => &mut s.eps2,
                    "omega" => &mut s.omega,
                    _ => return Err(format!("unknown two_level parameter `{name}`")),
                };
                set_complex(z, part.ok_or_else(complex_hint)?, value)
            }
            Model::PtDimer { epsilon, gamma, b, .. } => match (head, part) {
                ("epsilon", None) => {
                    *epsilon = value;
                    Ok(())
                }
                ("gamma", None) => {
                    *gamma = value;
                    Ok(())
                }
                ("b", p) => set_complex(b, p.ok_or_else(complex_hint)?, value),
                _ => Err(format!("unknown pt_dimer parameter `{name}`")),
            },
            Model::NLevel { eh, .. } => match (head, part) {
                ("alpha", None) => {
                    *eh = eh.clone().with_alpha(value.max(0.0)).map_err(|e| e.to_string())?;
                    Ok(())
                }
                _ => Err(format!("unknown n_level parameter `{name}`, only `alpha` can be swept")),
            },
        }
    }

    pub fn matrix(&self) -> ComplexMatrix {
        match self {
            Model::TwoLevel(s) => s.matrix(),
            Model::PtDimer {
                epsilon,
                gamma,
                b,
                passive,
            } => {
                let d = PtDimer::unchecked(*epsilon, *gamma, *b);
                if *passive {
                    d.passive_matrix()
                } else {
                    d.matrix()
                }
            }
            Model::NLevel { eh, .. } => eh.assemble(),
        }
    }

    pub fn effective(&self) -> Option<(&EffectiveHamiltonian, Option<&[usize]>)> {
        match self {
            Model::NLevel { eh, symmetry } => Some((eh, symmetry.as_deref())),
            _ => None,
        }
    }
}

/// Validated instance with the model resolved.
#[derive(Debug, Clone)]
pub struct Instance {
    pub file: InstanceFile,
    pub model: Model,
    pub seed: Option<u64>,
    pub path: Vec<PathEntry>,
    /// Number of sweep variables used by the path (1 or 2).
    pub vars: usize,
}

impl Instance {
    pub fn parse(text: &str, seed_override: Option<u64>) -> Result<Self, String> {
        let file: InstanceFile =
            serde_json::from_str(text).map_err(|e| e.to_string())?;
        let (model, seed) = Model::from_instance(&file, seed_override)?;
        let mut path = file.sweep.as_ref().map(|s| s.path.clone()).unwrap_or_default();
        if path.is_empty() && file.kind == Kind::NLevel {
            path.push(PathEntry {
                param: "alpha".into(),
                var: 0,
                offset: 0.0,
                slope: 1.0,
            });
        }
        for e in &path {
            if e.var > 1 {
                return Err(format!("sweep.path: `{}` uses variable {}, only 0 and 1 exist", e.param, e.var));
            }
            if !(e.offset.is_finite() && e.slope.is_finite()) {
                return Err(format!("sweep.path: `{}` has a non-finite offset or slope", e.param));
            }
            model.clone().set(&e.param, e.offset).map_err(|m| format!("sweep.path: {m}"))?;
        }
        if let Some(g) = file.sweep.as_ref().and_then(|s| s.grid.as_ref()) {
            if g.count < 2 {
                return Err(format!("sweep.grid: count must be at least 2, got {}", g.count));
            }
            if !(g.start.is_finite() && g.stop.is_finite()) {
                return Err("sweep.grid: bounds must be finite".into());
            }
            if g.scale == Scale::Log && !(g.start > 0.0 && g.stop > 0.0) {
                return Err("sweep.grid: log scale needs positive bounds".into());
            }
        }
        let vars = path.iter().map(|e| e.var + 1).max().unwrap_or(0);
        Ok(Self {
            file,
            model,
            seed,
            path,
            vars,
        })
    }

    pub fn grid(&self) -> Option<Vec<f64>> {
        let g = self.file.sweep.as_ref()?.grid.as_ref()?;
        Some(match g.scale {
            Scale::Linear => linspace(g.start, g.stop, g.count),
            Scale::Log => logspace(g.start, g.stop, g.count),
        })
    }

    pub fn wants(&self, o: Output) -> bool {
        self.file.outputs.contains(&o)
    }

    /// Model with the path applied at sweep variables `x`.
    pub fn model_at(&self, x: &[f64]) -> Model {
        let mut m = self.model.clone();
        for e in &self.path {
            // names were checked at parse time
            let _ = m.set(&e.param, e.offset + e.slope * x[e.var]);
        }
        m
    }

    pub fn family(&self, params: usize) -> ParamFamily {
        let this = self.clone();
        let description = self
            .file
            .description
            .clone()
            .unwrap_or_else(|| format!("{:?} instance", self.file.kind));
        ParamFamily::new(params, self.model.dim(), description, move |x| this.model_at(x).matrix())
    }
}
