//! Trained three-slice network: dataset windows, EM training and the model file.

use super::em::{self, EmOptions, EmReport};
use super::net::{Cpd, LinearGaussianNet};
use super::topology::Topology;
use crate::scenario::FrameRecord;
use crate::{Error, Result};
use std::io::{BufRead, BufReader, Read, Write};

const MAGIC: &str = "deltafi-model 1";

/// Rows of three consecutive frames, encoded slot by slot.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub rows: Vec<Vec<f64>>,
    pub dropped: usize,
}

impl Dataset {
    /// Add every window of consecutive scenes; windows with non-finite values are counted and skipped.
    pub fn add_frames(&mut self, topology: &Topology, frames: &[FrameRecord]) {
        for w in frames.windows(3) {
            if w[1].scene != w[0].scene + 1 || w[2].scene != w[1].scene + 1 {
                continue;
            }
            let row = topology.encode_triple(w);
            if row.iter().all(|x| x.is_finite()) {
                self.rows.push(row);
            } else {
                self.dropped += 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct TemporalNet {
    topology: Topology,
    /// One CPD per slot for the first slice.
    initial: Vec<Cpd>,
    /// One CPD per slot shared by the later slices.
    transition: Vec<Cpd>,
    net: LinearGaussianNet,
}

impl TemporalNet {
    pub fn from_parts(topology: Topology, initial: Vec<Cpd>, transition: Vec<Cpd>) -> Result<Self> {
        let w = topology.width();
        if initial.len() != w || transition.len() != w {
            return Err(Error::Model(format!("expected {w} initial and transition CPDs")));
        }
        let cpds: Vec<Cpd> = initial.iter().chain(&transition).cloned().collect();
        let net = em::expand(topology.dag(), &topology.groups(), &cpds)?;
        Ok(Self { topology, initial, transition, net })
    }

    /// Fit by EM on data centred per slot, then shift intercepts back to raw units.
    pub fn train(topology: Topology, rows: &[Vec<f64>], opts: &EmOptions) -> Result<(Self, EmReport)> {
        let w = topology.width();
        let mut offsets = vec![0.0; w];
        for (s, off) in offsets.iter_mut().enumerate() {
            let vals: Vec<f64> = rows
                .iter()
                .flat_map(|r| (0..3).map(move |t| r.get(t * w + s).copied().unwrap_or(f64::NAN)))
                .filter(|x| x.is_finite())
                .collect();
            if !vals.is_empty() {
                *off = vals.iter().sum::<f64>() / vals.len() as f64;
            }
        }
        let centred: Vec<Vec<f64>> =
            rows.iter().map(|r| r.iter().enumerate().map(|(i, x)| x - offsets[i % w]).collect()).collect();
        let groups = topology.groups();
        let (mut cpds, report) = em::fit(topology.dag(), &groups, &centred, opts)?;
        for (g, c) in groups.iter().zip(cpds.iter_mut()) {
            let node = g[0];
            let shift: f64 =
                topology.dag().parents(node).iter().zip(&c.weights).map(|(&p, w)| w * offsets[topology.slot_of(p).1]).sum();
            c.intercept += offsets[topology.slot_of(node).1] - shift;
        }
        let transition = cpds.split_off(w);
        Ok((Self::from_parts(topology, cpds, transition)?, report))
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn initial(&self) -> &[Cpd] {
        &self.initial
    }

    pub fn transition(&self) -> &[Cpd] {
        &self.transition
    }

    /// The unrolled network over all three slices.
    pub fn net(&self) -> &LinearGaussianNet {
        &self.net
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        let t = &self.topology;
        writeln!(w, "{MAGIC}")?;
        writeln!(w, "topology\t{}", t.digest())?;
        writeln!(w, "slots\t{}", t.width())?;
        for (i, s) in t.slots().iter().enumerate() {
            writeln!(w, "slot\t{i}\t{}", s.name)?;
        }
        for (kind, slice, cpds) in [("initial", 0, &self.initial), ("transition", 1, &self.transition)] {
            for (s, c) in cpds.iter().enumerate() {
                let node = t.node(slice, s);
                write!(w, "cpd\t{kind}\t{}\t{}\t{}", t.slots()[s].name, c.sigma, c.intercept)?;
                for (&p, wt) in t.dag().parents(node).iter().zip(&c.weights) {
                    let (ps, pslot) = t.slot_of(p);
                    let lag = ps as i64 - slice as i64;
                    write!(w, "\t{lag}|{}|{wt}", t.slots()[pslot].name)?;
                }
                writeln!(w)?;
            }
        }
        Ok(())
    }

    /// Parse a model file, which must have been written for `topology`.
    pub fn read<R: Read>(r: R, topology: Topology) -> Result<Self> {
        let mut lines = BufReader::new(r).lines();
        let mut next = || -> Result<Option<String>> {
            for l in lines.by_ref() {
                let l = l?;
                if !l.trim().is_empty() && !l.starts_with('#') {
                    return Ok(Some(l));
                }
            }
            Ok(None)
        };
        let bad = |m: String| Error::Parse(format!("model file: {m}"));
        if next()?.as_deref() != Some(MAGIC) {
            return Err(bad("missing header".into()));
        }
        let digest = next()?.unwrap_or_default();
        if digest.strip_prefix("topology\t") != Some(topology.digest().as_str()) {
            return Err(Error::Model("model was trained for a different network topology".into()));
        }
        let w = topology.width();
        if next()?.as_deref() != Some(format!("slots\t{w}").as_str()) {
            return Err(Error::Model("slot count does not match".into()));
        }
        for (i, s) in topology.slots().iter().enumerate() {
            if next()? != Some(format!("slot\t{i}\t{}", s.name)) {
                return Err(Error::Model(format!("slot {i} does not match `{}`", s.name)));
            }
        }
        let mut initial = Vec::with_capacity(w);
        let mut transition = Vec::with_capacity(w);
        for (kind, slice) in [("initial", 0usize), ("transition", 1)] {
            for s in 0..w {
                let line = next()?.ok_or_else(|| bad("truncated".into()))?;
                let f: Vec<&str> = line.split('\t').collect();
                if f.len() < 5 || f[0] != "cpd" || f[1] != kind || f[2] != topology.slots()[s].name {
                    return Err(bad(format!("expected {kind} CPD of `{}`", topology.slots()[s].name)));
                }
                let num = |x: &str| x.parse::<f64>().map_err(|_| bad(format!("bad number `{x}`")));
                let (sigma, intercept) = (num(f[3])?, num(f[4])?);
                let parents = topology.dag().parents(topology.node(slice, s));
                if f.len() - 5 != parents.len() {
                    return Err(bad(format!("`{}` has {} parents, expected {}", f[2], f.len() - 5, parents.len())));
                }
                let mut weights = Vec::with_capacity(parents.len());
                for (field, &p) in f[5..].iter().zip(parents) {
                    let (ps, pslot) = topology.slot_of(p);
                    let expect = format!("{}|{}|", ps as i64 - slice as i64, topology.slots()[pslot].name);
                    let wt = field.strip_prefix(&expect).ok_or_else(|| bad(format!("unexpected parent `{field}`")))?;
                    weights.push(num(wt)?);
                }
                let cpd = Cpd { intercept, weights, sigma };
                if slice == 0 { &mut initial } else { &mut transition }.push(cpd);
            }
        }
        if next()?.is_some() {
            return Err(bad("trailing content".into()));
        }
        Self::from_parts(topology, initial, transition)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayes::topology::{Binding, Slot};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_slot() -> Topology {
        let slots = ["a", "b"].iter().map(|n| Slot { name: n.to_string(), binding: Binding::Free }).collect();
        Topology::new(slots, vec![vec![], vec![0]], vec![vec![0], vec![1]]).unwrap()
    }

    fn truth() -> TemporalNet {
        TemporalNet::from_parts(
            two_slot(),
            vec![Cpd::root(100.0, 2.0), Cpd { intercept: 1.0, weights: vec![0.5], sigma: 0.3 }],
            vec![
                Cpd { intercept: 10.0, weights: vec![0.9], sigma: 0.5 },
                Cpd { intercept: -3.0, weights: vec![0.2, 0.7], sigma: 0.2 },
            ],
        )
        .unwrap()
    }

    #[test]
    fn training_recovers_raw_intercepts() {
        let t = truth();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rows: Vec<Vec<f64>> = (0..4000).map(|_| t.net().sample(&mut rng)).collect();
        let (fit, report) = TemporalNet::train(two_slot(), &rows, &EmOptions::default()).unwrap();
        assert!(report.converged);
        let c = &fit.transition()[0];
        assert!((c.weights[0] - 0.9).abs() < 0.02, "{c:?}");
        assert!((c.intercept - 10.0).abs() < 2.0, "{c:?}");
        assert!((fit.initial()[0].intercept - 100.0).abs() < 0.2);
    }

    #[test]
    fn model_file_round_trips() {
        let t = truth();
        let mut buf = Vec::new();
        t.write(&mut buf).unwrap();
        let back = TemporalNet::read(&buf[..], two_slot()).unwrap();
        assert_eq!(back.initial(), t.initial());
        assert_eq!(back.transition(), t.transition());
    }

    #[test]
    fn foreign_topology_is_rejected() {
        let mut buf = Vec::new();
        truth().write(&mut buf).unwrap();
        assert!(matches!(TemporalNet::read(&buf[..], Topology::ads()), Err(Error::Model(_))));
        let text = String::from_utf8(buf).unwrap().replace("-1|a|0.9", "-1|b|0.9");
        assert!(TemporalNet::read(text.as_bytes(), two_slot()).is_err());
    }
}
