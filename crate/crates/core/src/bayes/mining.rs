//! Counterfactual safety potential of (scene, fault) pairs on a golden run.

use super::gibbs::{GibbsConfig, GibbsPlan, Posterior};
use super::tbn::TemporalNet;
use super::topology::{Binding, Truth, CUR, NEXT};
use crate::ads::registry::{all_vars, VarId, N_VARS};
use crate::exec::Execution;
use crate::fault::{catalog, FaultType};
use crate::kinematics::VehicleState;
use crate::safety::assess;
use crate::scenario::{Scenario, SimConfig, Trace};
use crate::util::wrap_angle;
use crate::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

#[derive(Debug, Clone)]
struct TargetPlan {
    intervened: Vec<usize>,
    plan: GibbsPlan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub scene: usize,
    pub fault: FaultType,
    pub golden_delta: f64,
    pub predicted_delta: f64,
    pub predicted: VehicleState,
    pub converged: bool,
}

impl Candidate {
    pub fn critical(&self) -> bool {
        self.predicted_delta <= 0.0
    }
}

#[derive(Debug, Clone, Default)]
pub struct MiningOutcome {
    /// Critical pairs in scene order, then catalog order.
    pub critical: Vec<Candidate>,
    /// Scenes with a positive golden safety potential at k and k+1.
    pub eligible_scenes: usize,
    pub inferences: usize,
    pub unconverged: usize,
}

impl MiningOutcome {
    pub fn critical_scenes(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.critical.iter().map(|c| c.scene).collect();
        s.dedup();
        s
    }

    pub fn unconverged_fraction(&self) -> f64 {
        if self.inferences == 0 {
            0.0
        } else {
            self.unconverged as f64 / self.inferences as f64
        }
    }
}

/// Ground displacement over one frame from the trapezoid of speed and heading.
fn displacement(v0: f64, v1: f64, th0: f64, th1: f64, dt: f64) -> (f64, f64) {
    let d = dt * 0.5 * (v0 + v1);
    let th = th0 + 0.5 * wrap_angle(th1 - th0);
    (d * th.cos(), d * th.sin())
}

pub struct Miner<'a> {
    model: &'a TemporalNet,
    scenario: Arc<Scenario>,
    golden: &'a Trace,
    cfg: SimConfig,
    gibbs: GibbsConfig,
    plans: Vec<Option<TargetPlan>>,
    query: [usize; 3],
}

impl<'a> Miner<'a> {
    pub fn new(model: &'a TemporalNet, scenario: Arc<Scenario>, golden: &'a Trace, sim: &SimConfig, gibbs: GibbsConfig) -> Result<Self> {
        gibbs.validate()?;
        if golden.scenario != scenario.id {
            return Err(Error::Config(format!("golden trace is from `{}`, not `{}`", golden.scenario, scenario.id)));
        }
        if golden.plan.is_some() {
            return Err(Error::Config("mining needs a fault-free reference run".into()));
        }
        let t = model.topology();
        let truth = |x: Truth| t.truth_slot(x).map(|s| t.node(NEXT, s)).ok_or_else(|| Error::Model(format!("topology lacks {}", x.name())));
        let query = [truth(Truth::V)?, truth(Truth::Theta)?, truth(Truth::Phi)?];
        let mut plans = vec![None; N_VARS];
        for v in all_vars() {
            let intervened: Vec<usize> = t.slots_for(v).into_iter().map(|s| t.node(CUR, s)).collect();
            if intervened.is_empty() {
                continue;
            }
            let below = t.dag().descendants(&intervened);
            if !query.iter().any(|&q| below[q]) {
                continue;
            }
            let observed = t.dag().non_descendants(&intervened);
            let plan = GibbsPlan::compile(model.net(), &intervened, &observed, &query)?;
            plans[v.index()] = Some(TargetPlan { intervened, plan });
        }
        let cfg = sim.for_scenario(&scenario);
        Ok(Self { model, scenario, golden, cfg, gibbs, plans, query })
    }

    /// Whether a fault on `v` can change the predicted ego state at all.
    pub fn reaches_ego(&self, v: VarId) -> bool {
        self.plans[v.index()].is_some()
    }

    /// Both the scene and the next one are safe in the golden run.
    pub fn eligible(&self, k: usize) -> bool {
        let f = &self.golden.frames;
        k >= 1 && k + 1 < f.len() && f[k].assessment.delta() > 0.0 && f[k + 1].assessment.delta() > 0.0
    }

    fn seed(&self, k: usize, v: VarId) -> u64 {
        self.gibbs.seed ^ ((k as u64) << 8 | v.index() as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
    }

    /// Predicted ego state and safety potential one frame after injecting `fault` at scene `k`.
    /// The golden run is the factual world: the predicted state is the golden one moved by the
    /// difference between posterior means under the corrupted and the golden value, both drawn
    /// with the same random stream.
    /// `None` when the scene is ineligible or the fault cannot reach the ego state.
    pub fn counterfactual(&self, k: usize, fault: &FaultType) -> Result<Option<Candidate>> {
        self.evaluate(k, fault, &mut vec![None; N_VARS])
    }

    fn evaluate(&self, k: usize, fault: &FaultType, references: &mut [Option<Posterior>]) -> Result<Option<Candidate>> {
        if !self.eligible(k) {
            return Ok(None);
        }
        let Some(tp) = &self.plans[fault.target.index()] else { return Ok(None) };
        let t = self.model.topology();
        let frames = &self.golden.frames;
        let factual = t.encode_triple(&frames[k - 1..=k + 1]);
        let seed = self.seed(k, fault.target);
        let golden_value = frames[k].vars[fault.target];
        let corrupted = fault.corrupt(golden_value, &mut ChaCha8Rng::seed_from_u64(seed));
        let mut base = factual.clone();
        let mut values = factual;
        for &n in &tp.intervened {
            let encode = |x: f64| match t.slots()[t.slot_of(n).1].binding {
                Binding::Indicator(_, c) => (x.round() == c as f64) as u8 as f64,
                _ => x,
            };
            base[n] = encode(golden_value);
            values[n] = encode(corrupted);
        }
        let (g0, g1) = (&frames[k].ego, &frames[k + 1].ego);
        let mut shift = [0.0; 3];
        let mut converged = true;
        if values != base {
            let cfg = GibbsConfig { seed, ..self.gibbs };
            let post = tp.plan.run(&values, &cfg)?;
            let reference = match &mut references[fault.target.index()] {
                Some(r) => r,
                slot => slot.insert(tp.plan.run(&base, &cfg)?),
            };
            converged = post.converged && reference.converged;
            for (s, (a, b)) in shift.iter_mut().zip(post.mean.iter().zip(&reference.mean)) {
                *s = a - b;
            }
        }
        let dt = self.scenario.dt;
        let v = (g1.v + shift[0]).max(0.0);
        let theta = g1.theta + shift[1];
        let phi = (g1.phi + shift[2]).clamp(-self.cfg.kinematics.phi_max, self.cfg.kinematics.phi_max);
        let (px, py) = displacement(g0.v, v, g0.theta, theta, dt);
        let (gx, gy) = displacement(g0.v, g1.v, g0.theta, g1.theta, dt);
        let predicted = VehicleState { x: g1.x + px - gx, y: g1.y + py - gy, v, theta: wrap_angle(theta), phi };
        let world = self.scenario.world_at((k + 1) as f64 * dt);
        let a = assess(&predicted, &world, &self.scenario.lane, &self.cfg.kinematics, &self.cfg.safety)?;
        Ok(Some(Candidate {
            scene: k,
            fault: fault.clone(),
            golden_delta: frames[k].assessment.delta(),
            predicted_delta: a.delta(),
            predicted,
            converged,
        }))
    }

    /// Evaluate every eligible scene against every catalog fault and keep the critical pairs.
    pub fn mine(&self, exec: Execution) -> Result<MiningOutcome> {
        let faults = catalog();
        let per_scene = exec.try_map(self.golden.frames.len(), |k| -> Result<(bool, usize, usize, Vec<Candidate>)> {
            if !self.eligible(k) {
                return Ok((false, 0, 0, Vec::new()));
            }
            let mut references = vec![None; N_VARS];
            let (mut n, mut bad, mut crit) = (0, 0, Vec::new());
            for f in &faults {
                if let Some(c) = self.evaluate(k, f, &mut references)? {
                    n += 1;
                    bad += usize::from(!c.converged);
                    if c.critical() {
                        debug_assert!(c.golden_delta > 0.0);
                        crit.push(c);
                    }
                }
            }
            Ok((true, n, bad, crit))
        })?;
        let mut out = MiningOutcome::default();
        for (eligible, n, bad, crit) in per_scene {
            out.eligible_scenes += usize::from(eligible);
            out.inferences += n;
            out.unconverged += bad;
            out.critical.extend(crit);
        }
        Ok(out)
    }

    pub fn query_nodes(&self) -> [usize; 3] {
        self.query
    }
}
