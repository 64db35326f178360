//! Sweeping on a path: repeated forward and reverse passes of two-agent cut
//! and choose along the path edges until no edge carries strong envy.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::envy::{envy_amount, first_strong_envy, strong_envy_amount};
use crate::error::{Error, Result};
use crate::graph::{make_path, Graph};
use crate::model::{Allocation, Bundle, Instance};
use crate::rational::Rational;
use crate::solvers::local_efx;

/// Which endpoint of an edge `(i, i+1)` cuts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// Agent `i` cuts, `i+1` chooses.
    Left,
    /// Agent `i+1` cuts, `i` chooses.
    Right,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SweepConfig {
    pub max_rounds: usize,
    /// Cutter used unless overridden.
    pub default_cutter: Side,
    /// Cutter per `(edge index, round)`; edge `i` joins agents `i` and `i+1`,
    /// rounds count from 1.
    pub overrides: BTreeMap<(usize, usize), Side>,
    /// Leave edges without strong envy untouched.
    pub skip_efx_edges: bool,
    /// Also revisit the last edge during the reverse pass.
    pub include_last_edge_in_reverse: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            max_rounds: 1000,
            default_cutter: Side::Left,
            overrides: BTreeMap::new(),
            skip_efx_edges: true,
            include_last_edge_in_reverse: false,
        }
    }
}

impl SweepConfig {
    pub fn cutter(&self, edge: usize, round: usize) -> Side {
        self.overrides.get(&(edge, round)).copied().unwrap_or(self.default_cutter)
    }

    pub fn with_override(mut self, edge: usize, round: usize, side: Side) -> Self {
        self.overrides.insert((edge, round), side);
        self
    }
}

/// Total envy, total strong envy (both directions over path edges) and the
/// minimum own-bundle value.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Potentials {
    pub phi1: Rational,
    pub phi2: Rational,
    pub phi3: Rational,
}

pub fn potentials(inst: &Instance, x: &Allocation, path: &Graph) -> Result<Potentials> {
    let mut phi1 = Rational::zero();
    let mut phi2 = Rational::zero();
    for (u, v) in path.edges() {
        for (i, j) in [(u, v), (v, u)] {
            phi1 += &envy_amount(inst, x, i, j)?;
            phi2 += &strong_envy_amount(inst, x, i, j)?;
        }
    }
    let mut phi3: Option<Rational> = None;
    for a in 0..inst.n() {
        let own = inst.valuation(a).value(x.bundle(a)).ok_or(Error::LexicographicNotNumeric)?;
        if phi3.as_ref().map_or(true, |p| own < *p) {
            phi3 = Some(own);
        }
    }
    Ok(Potentials { phi1, phi2, phi3: phi3.unwrap_or_else(Rational::zero) })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Success,
    /// A whole round left the allocation unchanged while strong envy remains.
    Failure,
    MaxRounds,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SweepTrace {
    /// Completed rounds.
    pub rounds: usize,
    /// Potentials of the starting allocation.
    pub initial: Potentials,
    /// Potentials after each completed round.
    pub potentials: Vec<Potentials>,
    pub outcome: Outcome,
    pub final_allocation: Allocation,
}

impl SweepTrace {
    /// Initial potentials followed by the per-round ones, indexed by round.
    pub fn series(&self) -> Vec<Potentials> {
        std::iter::once(self.initial.clone()).chain(self.potentials.iter().cloned()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Phi {
    Phi1,
    Phi2,
    Phi3,
}

/// A round where a potential moved against its hoped-for direction
/// (φ1 or φ2 went up, or φ3 went down).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub round: usize,
    pub phi: Phi,
    pub before: Rational,
    pub after: Rational,
}

/// Scans a series indexed by round (index 0 = start) for monotonicity
/// violations.
pub fn monotonicity_violations(series: &[Potentials]) -> Vec<Violation> {
    let mut out = Vec::new();
    for (r, w) in series.windows(2).enumerate() {
        let (a, b) = (&w[0], &w[1]);
        let checks = [
            (Phi::Phi1, &a.phi1, &b.phi1, b.phi1 > a.phi1),
            (Phi::Phi2, &a.phi2, &b.phi2, b.phi2 > a.phi2),
            (Phi::Phi3, &a.phi3, &b.phi3, b.phi3 < a.phi3),
        ];
        for (phi, before, after, violated) in checks {
            if violated {
                out.push(Violation { round: r + 1, phi, before: before.clone(), after: after.clone() });
            }
        }
    }
    out
}

fn edge_is_efx(inst: &Instance, bundles: &[Bundle], i: usize) -> bool {
    let x = Allocation::from_parts_unchecked(bundles.to_vec());
    let edge = Graph::new(inst.n(), [(i, i + 1)]).expect("valid edge");
    first_strong_envy(inst, &x, &edge).is_none()
}

fn fix_edge(inst: &Instance, bundles: &mut [Bundle], i: usize, side: Side) -> Result<()> {
    let (cutter, chooser) = match side {
        Side::Left => (i, i + 1),
        Side::Right => (i + 1, i),
    };
    let (kept, chosen) = local_efx(&bundles[cutter], &bundles[chooser], inst.valuation(cutter), inst.valuation(chooser))?;
    bundles[cutter] = kept;
    bundles[chooser] = chosen;
    Ok(())
}

/// Runs the sweep on the path over `n` agents, starting from agent 0 holding
/// every item.
pub fn sweep(inst: &Instance, n: usize, config: &SweepConfig) -> Result<(Allocation, SweepTrace)> {
    if n != inst.n() {
        return Err(Error::BadSize(format!("sweep over {n} agents but the instance has {}", inst.n())));
    }
    if n < 2 {
        return Err(Error::BadSize("sweeping needs at least two agents".into()));
    }
    if config.max_rounds == 0 {
        return Err(Error::InvalidArgument("max_rounds must be at least 1".into()));
    }
    if !inst.is_goods_only() {
        return Err(Error::InvalidInstance("sweeping is defined for goods only".into()));
    }
    if let Some(a) = (0..n).find(|&a| !inst.valuation(a).is_additive()) {
        return Err(Error::NotAdditive(format!("agent {a}")));
    }
    let path = make_path(n)?;
    let mut bundles = vec![Bundle::new(); n];
    bundles[0] = inst.all_items();
    let start = Allocation::from_parts_unchecked(bundles.clone());
    let initial = potentials(inst, &start, &path)?;
    let mut trace_potentials = Vec::new();
    let mut outcome = if first_strong_envy(inst, &start, &path).is_none() { Some(Outcome::Success) } else { None };
    let mut round = 0;
    while outcome.is_none() {
        round += 1;
        let before = bundles.clone();
        let last_reverse = if config.include_last_edge_in_reverse { n - 1 } else { n - 2 };
        let forward = 0..n - 1;
        let reverse = (0..last_reverse).rev();
        for i in forward.chain(reverse) {
            if config.skip_efx_edges && edge_is_efx(inst, &bundles, i) {
                continue;
            }
            fix_edge(inst, &mut bundles, i, config.cutter(i, round))?;
            debug_assert!(edge_is_efx(inst, &bundles, i));
        }
        let x = Allocation::from_parts_unchecked(bundles.clone());
        trace_potentials.push(potentials(inst, &x, &path)?);
        if first_strong_envy(inst, &x, &path).is_none() {
            outcome = Some(Outcome::Success);
        } else if bundles == before {
            outcome = Some(Outcome::Failure);
        } else if round >= config.max_rounds {
            outcome = Some(Outcome::MaxRounds);
        }
    }
    let final_allocation = Allocation::for_instance(inst, bundles)?;
    let outcome = outcome.expect("loop ends with an outcome");
    if outcome == Outcome::Success {
        assert!(first_strong_envy(inst, &final_allocation, &path).is_none(), "success implies G-EFX on the path");
    }
    let trace = SweepTrace {
        rounds: round,
        initial,
        potentials: trace_potentials,
        outcome,
        final_allocation: final_allocation.clone(),
    };
    Ok((final_allocation, trace))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BatchEntry {
    pub index: usize,
    pub result: std::result::Result<SweepTrace, String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct BatchReport {
    pub entries: Vec<BatchEntry>,
}

impl BatchReport {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn successes(&self) -> usize {
        self.traces().filter(|t| t.outcome == Outcome::Success).count()
    }

    pub fn traces(&self) -> impl Iterator<Item = &SweepTrace> {
        self.entries.iter().filter_map(|e| e.result.as_ref().ok())
    }

    /// Number of successful runs per round count.
    pub fn rounds_histogram(&self) -> BTreeMap<usize, usize> {
        let mut hist = BTreeMap::new();
        for t in self.traces().filter(|t| t.outcome == Outcome::Success) {
            *hist.entry(t.rounds).or_insert(0) += 1;
        }
        hist
    }
}

fn run_one(index: usize, inst: &Instance, config: &SweepConfig) -> BatchEntry {
    let result = sweep(inst, inst.n(), config).map(|(_, t)| t).map_err(|e| e.to_string());
    BatchEntry { index, result }
}

/// Sweeps every instance; results keep the input order.
pub fn run_batch(instances: &[Instance], config: &SweepConfig) -> BatchReport {
    #[cfg(feature = "parallel")]
    let entries = {
        use rayon::prelude::*;
        instances.par_iter().enumerate().map(|(i, inst)| run_one(i, inst, config)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let entries = run_batch_sequential(instances, config).entries;
    BatchReport { entries }
}

/// Single-threaded `run_batch`.
pub fn run_batch_sequential(instances: &[Instance], config: &SweepConfig) -> BatchReport {
    BatchReport { entries: instances.iter().enumerate().map(|(i, inst)| run_one(i, inst, config)).collect() }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[usize]) -> Bundle {
        v.iter().copied().collect()
    }

    fn r(v: i64) -> Rational {
        Rational::from_integer(v)
    }

    fn table_three() -> Instance {
        Instance::goods_additive([[120, 200, 80, 120, 400, 80], [39, 39, 38, 77, 769, 38], [994, 1, 1, 1, 2, 1]]).unwrap()
    }

    #[test]
    fn potentials_of_example_one_allocation() {
        let inst = Instance::goods_additive([[9, 1, 0, 0, 0, 0], [8, 0, 0, 0, 0, 2], [2, 2, 2, 1, 2, 1]]).unwrap();
        let x = Allocation::new(vec![set(&[0, 1]), set(&[4, 5]), set(&[2, 3])], 6).unwrap();
        let p = potentials(&inst, &x, &make_path(3).unwrap()).unwrap();
        assert_eq!(p, Potentials { phi1: r(6), phi2: r(6), phi3: r(2) });
    }

    #[test]
    fn potentials_trivial_cases() {
        let inst = Instance::goods_additive([[3, 4], [0, 0], [0, 0]]).unwrap();
        let x = Allocation::new(vec![set(&[0, 1]), set(&[]), set(&[])], 2).unwrap();
        let p = potentials(&inst, &x, &make_path(3).unwrap()).unwrap();
        assert_eq!(p, Potentials { phi1: r(0), phi2: r(0), phi3: r(0) });
    }

    #[test]
    fn table_three_default_run() {
        let inst = table_three();
        let (x, trace) = sweep(&inst, 3, &SweepConfig::default()).unwrap();
        assert_eq!(trace.outcome, Outcome::Success);
        assert_eq!(trace.rounds, 2);
        assert!(first_strong_envy(&inst, &x, &make_path(3).unwrap()).is_none());
        let phi2: Vec<Rational> = trace.series().iter().map(|p| p.phi2.clone()).collect();
        assert_eq!(phi2, vec![r(962), r(993), r(0)]);
        let violations = monotonicity_violations(&trace.series());
        assert!(violations.iter().any(|v| v.phi == Phi::Phi2 && v.round == 1));
    }

    #[test]
    fn table_three_swapped_roles_finish_in_one_round() {
        let inst = table_three();
        let config = SweepConfig::default().with_override(1, 1, Side::Right);
        let (x, trace) = sweep(&inst, 3, &config).unwrap();
        assert_eq!((trace.outcome, trace.rounds), (Outcome::Success, 1));
        assert_eq!(x.bundles(), &[set(&[0, 1, 3, 5]), set(&[4]), set(&[2])]);
    }

    #[test]
    fn two_agents_one_round() {
        let inst = Instance::goods_additive([[5, 4, 3], [1, 1, 9]]).unwrap();
        let (_, trace) = sweep(&inst, 2, &SweepConfig::default()).unwrap();
        assert_eq!((trace.outcome, trace.rounds), (Outcome::Success, 1));
    }

    #[test]
    fn rejects_bad_input() {
        let inst = table_three();
        assert!(sweep(&inst, 2, &SweepConfig::default()).is_err());
        let cfg = SweepConfig { max_rounds: 0, ..SweepConfig::default() };
        assert!(sweep(&inst, 3, &cfg).is_err());
    }

    #[test]
    fn detects_synthetic_violations() {
        let p = |a: i64, b: i64, c: i64| Potentials { phi1: r(a), phi2: r(b), phi3: r(c) };
        let series = vec![p(10, 5, 1), p(12, 4, 0), p(3, 0, 2)];
        let v = monotonicity_violations(&series);
        assert_eq!(v.iter().map(|x| (x.round, x.phi)).collect::<Vec<_>>(), vec![(1, Phi::Phi1), (1, Phi::Phi3)]);
        assert!(monotonicity_violations(&[p(3, 2, 1), p(2, 1, 1)]).is_empty());
    }

    #[test]
    fn batch_matches_sequential_and_handles_empty() {
        assert!(run_batch(&[], &SweepConfig::default()).is_empty());
        let batch = vec![table_three(), Instance::goods_additive([[1, 2], [2, 1]]).unwrap()];
        let par = run_batch(&batch, &SweepConfig::default());
        assert_eq!(par, run_batch_sequential(&batch, &SweepConfig::default()));
        assert_eq!(par.successes(), 2);
        assert_eq!(par.rounds_histogram().values().sum::<usize>(), 2);
    }
}
