//! Fault catalog, fault plans and the runtime injector.

pub mod bitflip;

use crate::ads::registry::{all_vars, lookup, var, Stage, VarId, VarKind, Vars, N_VARS};
use crate::ads::InjectionHook;
use crate::util::sha256_hex;
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;

pub use bitflip::{bitflip, flip_bits};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rule {
    SetMax,
    SetMin,
    Double,
    Halve,
    SetCategory(u8),
    SetValue(f64),
    /// Uniform draw over the variable's domain, redrawn every scene.
    Random,
    BitFlip(u8),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaultType {
    pub target: VarId,
    pub rule: Rule,
}

impl FaultType {
    pub fn new(target: VarId, rule: Rule) -> Result<Self> {
        let kind = target.def().kind;
        let ok = match rule {
            Rule::SetMax | Rule::SetMin => matches!(kind, VarKind::Bounded { .. }),
            Rule::Double | Rule::Halve => matches!(kind, VarKind::Unbounded),
            Rule::SetCategory(c) => matches!(kind, VarKind::Categorical(n) if (c as usize) < n.len()),
            Rule::SetValue(v) => !kind.is_categorical() && !v.is_nan(),
            Rule::Random => true,
            Rule::BitFlip(n) => !kind.is_categorical() && (n == 1 || n == 2),
        };
        if ok {
            Ok(Self { target, rule })
        } else {
            Err(Error::Config(format!("rule {rule:?} does not apply to {}", target.name())))
        }
    }

    pub fn name(&self) -> String {
        self.to_string()
    }

    /// Parse `variable:rule`, e.g. `control.throttle:set_max` or `perception.lane_type:solid`.
    pub fn parse(s: &str) -> Result<Self> {
        let (v, r) = s.rsplit_once(':').ok_or_else(|| Error::UnknownFault(s.to_string()))?;
        let target = lookup(v).ok_or_else(|| Error::UnknownVariable(v.to_string()))?;
        let rule = match r {
            "set_max" => Rule::SetMax,
            "set_min" => Rule::SetMin,
            "double" => Rule::Double,
            "halve" => Rule::Halve,
            "random" => Rule::Random,
            "bitflip1" => Rule::BitFlip(1),
            "bitflip2" => Rule::BitFlip(2),
            other => {
                if let Some(x) = other.strip_prefix("set_value=") {
                    Rule::SetValue(x.parse().map_err(|_| Error::UnknownFault(s.to_string()))?)
                } else if let VarKind::Categorical(names) = target.def().kind {
                    let c = names.iter().position(|n| *n == other).ok_or_else(|| Error::UnknownFault(s.to_string()))?;
                    Rule::SetCategory(c as u8)
                } else {
                    return Err(Error::UnknownFault(s.to_string()));
                }
            }
        };
        Self::new(target, rule)
    }

    pub fn corrupt<R: Rng + ?Sized>(&self, value: f64, rng: &mut R) -> f64 {
        let kind = self.target.def().kind;
        match (self.rule, kind) {
            (Rule::SetMax, VarKind::Bounded { hi, .. }) => hi,
            (Rule::SetMin, VarKind::Bounded { lo, .. }) => lo,
            (Rule::Double, _) => value * 2.0,
            (Rule::Halve, _) => value * 0.5,
            (Rule::SetCategory(c), _) => c as f64,
            (Rule::SetValue(v), _) => v,
            (Rule::Random, VarKind::Bounded { lo, hi }) => rng.random_range(lo..=hi),
            (Rule::Random, VarKind::Unbounded) => value * rng.random_range(0.0..=2.0),
            (Rule::Random, VarKind::Categorical(n)) => rng.random_range(0..n.len()) as f64,
            (Rule::BitFlip(n), _) => bitflip(value, n, rng),
            _ => value,
        }
    }
}

impl fmt::Display for FaultType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = match self.rule {
            Rule::SetMax => "set_max".to_string(),
            Rule::SetMin => "set_min".to_string(),
            Rule::Double => "double".to_string(),
            Rule::Halve => "halve".to_string(),
            Rule::SetCategory(c) => match self.target.def().kind {
                VarKind::Categorical(n) => n[c as usize].to_string(),
                _ => c.to_string(),
            },
            Rule::SetValue(v) => format!("set_value={v}"),
            Rule::Random => "random".to_string(),
            Rule::BitFlip(n) => format!("bitflip{n}"),
        };
        write!(f, "{}:{}", self.target.name(), r)
    }
}

/// Every single-variable fault type: bounded variables to their limits,
/// unbounded ones doubled or halved, categoricals forced to each category.
pub fn catalog() -> Vec<FaultType> {
    let mut out = Vec::new();
    for v in all_vars() {
        let rules: Vec<Rule> = match v.def().kind {
            VarKind::Bounded { .. } => vec![Rule::SetMax, Rule::SetMin],
            VarKind::Unbounded => vec![Rule::Double, Rule::Halve],
            VarKind::Categorical(n) => (0..n.len() as u8).map(Rule::SetCategory).collect(),
        };
        out.extend(rules.into_iter().map(|r| FaultType::new(v, r).expect("catalog rules are compatible")));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FaultModel {
    OneFixed,
    MFixed,
    OneRandom,
    MRandom,
    BitFlip,
}

impl FaultModel {
    pub fn is_multi(self) -> bool {
        matches!(self, FaultModel::MFixed | FaultModel::MRandom)
    }

    pub fn label(self) -> &'static str {
        match self {
            FaultModel::OneFixed => "one-fixed",
            FaultModel::MFixed => "m-fixed",
            FaultModel::OneRandom => "one-random",
            FaultModel::MRandom => "m-random",
            FaultModel::BitFlip => "bit-flip",
        }
    }
}

pub const M_MIN: usize = 10;
pub const M_MAX: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct FaultPlan {
    pub model: FaultModel,
    pub start: usize,
    pub duration: usize,
    pub fault: FaultType,
    pub seed: u64,
}

impl FaultPlan {
    pub fn active(&self, scene: usize) -> bool {
        scene >= self.start && scene < self.start + self.duration
    }

    pub fn digest(&self) -> String {
        sha256_hex(self.to_string().as_bytes())[..16].to_string()
    }
}

impl fmt::Display for FaultPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}@{}+{}#{}",
            self.model.label(),
            self.fault,
            self.start,
            self.duration,
            self.seed
        )
    }
}

/// Draw a plan. Fixed models need `fault`; random models pick their own target.
pub fn make_plan(model: FaultModel, fault: Option<&FaultType>, bits: u8, scenes: usize, seed: u64) -> Result<FaultPlan> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let duration = if model.is_multi() { rng.random_range(M_MIN..=M_MAX) } else { 1 };
    let upper = if model.is_multi() { scenes.saturating_sub(duration) } else { scenes };
    if upper == 0 {
        return Err(Error::Config(format!("{scenes} scenes cannot hold a {duration}-scene fault window")));
    }
    let start = rng.random_range(0..upper);
    let fault = match model {
        FaultModel::OneFixed | FaultModel::MFixed => fault
            .cloned()
            .ok_or_else(|| Error::Config(format!("model {} needs a fault type", model.label())))?,
        FaultModel::OneRandom | FaultModel::MRandom => {
            FaultType::new(crate::ads::registry::VarId(rng.random_range(0..N_VARS as u8)), Rule::Random)?
        }
        FaultModel::BitFlip => {
            let numeric: Vec<VarId> = all_vars().filter(|v| !v.def().kind.is_categorical()).collect();
            FaultType::new(numeric[rng.random_range(0..numeric.len())], Rule::BitFlip(bits))?
        }
    };
    Ok(FaultPlan { model, start, duration, fault, seed })
}

/// A plan for a specific fault at a specific window, used by replays.
pub fn fixed_plan(fault: FaultType, start: usize, duration: usize, seed: u64) -> FaultPlan {
    let model = if duration > 1 { FaultModel::MFixed } else { FaultModel::OneFixed };
    FaultPlan { model, start, duration, fault, seed }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InjectionRecord {
    pub scene: usize,
    pub variable: VarId,
    pub old: f64,
    pub new: f64,
}

/// Applies a plan inside the ADS pipeline and logs every corruption.
#[derive(Debug, Clone)]
pub struct Injector {
    plan: Option<FaultPlan>,
    rng: ChaCha8Rng,
    pub log: Vec<InjectionRecord>,
}

impl Injector {
    pub fn new(plan: Option<FaultPlan>) -> Self {
        let seed = plan.as_ref().map_or(0, |p| p.seed ^ 0x5eed_f417);
        Self { plan, rng: ChaCha8Rng::seed_from_u64(seed), log: Vec::new() }
    }

    pub fn plan(&self) -> Option<&FaultPlan> {
        self.plan.as_ref()
    }
}

impl InjectionHook for Injector {
    fn apply(&mut self, scene: usize, stage: Stage, vars: &mut Vars) {
        let Some(plan) = &self.plan else { return };
        if !plan.active(scene) || plan.fault.target.def().stage != stage {
            return;
        }
        let t = plan.fault.target;
        let old = vars[t];
        let new = plan.fault.corrupt(old, &mut self.rng);
        vars[t] = new;
        self.log.push(InjectionRecord { scene, variable: t, old, new });
    }
}

/// The throttle example used in documentation and tests.
pub fn throttle_max() -> FaultType {
    FaultType::new(var::THROTTLE, Rule::SetMax).unwrap()
}
