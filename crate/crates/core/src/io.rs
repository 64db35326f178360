//! File formats: JSON instances and allocations, Spliddit-style point CSVs,
//! and per-round potential traces as CSV.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{make_path, Graph};
use crate::model::{Allocation, Bundle, HiddenSet, Instance, Item, ItemId, ItemKind, Valuation};
use crate::rational::Rational;
use crate::sweep::SweepTrace;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemSpec {
    pub id: ItemId,
    pub kind: ItemKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ValuationSpec {
    Additive { values: Vec<Rational> },
    Table { entries: Vec<(Vec<ItemId>, Rational)> },
    Lexicographic { priority: Vec<ItemId> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum GraphSpec {
    Path { n: usize },
    Star {
        n: usize,
        #[serde(default)]
        center: usize,
    },
    Complete { n: usize },
    Custom { n: usize, edges: Vec<(usize, usize)> },
}

impl GraphSpec {
    pub fn n(&self) -> usize {
        match self {
            GraphSpec::Path { n } | GraphSpec::Star { n, .. } | GraphSpec::Complete { n } | GraphSpec::Custom { n, .. } => *n,
        }
    }

    pub fn build(&self) -> Result<Graph> {
        match self {
            GraphSpec::Path { n } => make_path(*n),
            GraphSpec::Star { n, center } => crate::construct::star_around(*n, *center),
            GraphSpec::Complete { n } => Ok(Graph::complete(*n)),
            GraphSpec::Custom { n, edges } => Graph::new(*n, edges.iter().copied()),
        }
    }

    pub fn custom(g: &Graph) -> Self {
        GraphSpec::Custom { n: g.n(), edges: g.edges().collect() }
    }
}

/// On-disk instance: agents, items, one valuation per agent, and a graph
/// (the complete graph when omitted).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub agents: usize,
    pub items: Vec<ItemSpec>,
    pub valuations: Vec<ValuationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphSpec>,
}

impl InstanceFile {
    pub fn from_parts(inst: &Instance, g: &Graph) -> Self {
        let m = inst.m();
        let valuations = inst
            .valuations()
            .iter()
            .map(|v| match v {
                Valuation::Additive(values) => ValuationSpec::Additive { values: values.clone() },
                Valuation::Table(values) => ValuationSpec::Table {
                    entries: values
                        .iter()
                        .enumerate()
                        .map(|(mask, value)| ((0..m).filter(|g| mask >> g & 1 == 1).collect(), value.clone()))
                        .collect(),
                },
                Valuation::Lexicographic(priority) => ValuationSpec::Lexicographic { priority: priority.clone() },
            })
            .collect();
        InstanceFile {
            agents: inst.n(),
            items: inst.items().iter().map(|it| ItemSpec { id: it.id, kind: it.kind }).collect(),
            valuations,
            graph: Some(GraphSpec::custom(g)),
        }
    }

    pub fn into_parts(self) -> Result<(Instance, Graph)> {
        if self.valuations.len() != self.agents {
            return Err(Error::InvalidInstance(format!(
                "agents = {} but {} valuations given",
                self.agents,
                self.valuations.len()
            )));
        }
        let m = self.items.len();
        let items: Vec<Item> = self.items.iter().map(|s| Item { id: s.id, kind: s.kind }).collect();
        let valuations = self
            .valuations
            .into_iter()
            .enumerate()
            .map(|(i, spec)| match spec {
                ValuationSpec::Additive { values } => Ok(Valuation::Additive(values)),
                ValuationSpec::Table { entries } => {
                    let entries: Vec<(Bundle, Rational)> =
                        entries.into_iter().map(|(ids, v)| (ids.into_iter().collect(), v)).collect();
                    Valuation::table_from_entries(m, &entries)
                        .map_err(|e| Error::InvalidInstance(format!("valuations[{i}]: {e}")))
                }
                ValuationSpec::Lexicographic { priority } => Ok(Valuation::Lexicographic(priority)),
            })
            .collect::<Result<Vec<_>>>()?;
        let inst = Instance::new(items, valuations)?;
        let graph = match &self.graph {
            Some(spec) => {
                if spec.n() != self.agents {
                    return Err(Error::InvalidGraph(format!("graph.n = {} but agents = {}", spec.n(), self.agents)));
                }
                spec.build()?
            }
            None => Graph::complete(self.agents),
        };
        Ok((inst, graph))
    }
}

pub fn instance_from_json(text: &str) -> Result<(Instance, Graph)> {
    let file: InstanceFile = serde_json::from_str(text).map_err(|e| Error::Parse(format!("instance JSON: {e}")))?;
    file.into_parts()
}

pub fn instance_to_json(inst: &Instance, g: &Graph) -> String {
    serde_json::to_string_pretty(&InstanceFile::from_parts(inst, g)).expect("instance serializes")
}

pub fn parse_instance(path: impl AsRef<Path>) -> Result<(Instance, Graph)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    instance_from_json(&text).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn write_instance(path: impl AsRef<Path>, inst: &Instance, g: &Graph) -> Result<()> {
    fs::write(path, instance_to_json(inst, g) + "\n")?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllocationFile {
    pub bundles: Vec<Vec<ItemId>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden: Option<Vec<ItemId>>,
}

impl AllocationFile {
    pub fn new(x: &Allocation, hidden: Option<&HiddenSet>) -> Self {
        AllocationFile {
            bundles: x.bundles().iter().map(|b| b.iter().copied().collect()).collect(),
            hidden: hidden.map(|h| h.hidden.iter().copied().collect()),
        }
    }

    pub fn to_allocation(&self, inst: &Instance) -> Result<Allocation> {
        Allocation::for_instance(inst, self.bundles.iter().map(|b| b.iter().copied().collect()).collect())
    }

    pub fn hidden_set(&self) -> Option<HiddenSet> {
        self.hidden.as_ref().map(|h| h.iter().copied().collect())
    }
}

pub fn allocation_from_json(text: &str) -> Result<AllocationFile> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("allocation JSON: {e}")))
}

pub fn allocation_to_json(x: &Allocation, hidden: Option<&HiddenSet>) -> String {
    serde_json::to_string_pretty(&AllocationFile::new(x, hidden)).expect("allocation serializes")
}

/// One problem read from a Spliddit-style CSV.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplidditInstance {
    pub id: String,
    pub instance: Instance,
    pub graph: Graph,
}

/// Reads rows `instance_id,agent,p_1,...,p_m` of nonnegative integer points
/// (an optional header row is skipped). Rows are grouped by instance id in
/// order of first appearance; agents are ordered by their `agent` field and
/// joined by a path in that order.
pub fn ingest_spliddit(path: impl AsRef<Path>) -> Result<Vec<SplidditInstance>> {
    ingest_spliddit_from(fs::File::open(path)?)
}

pub fn ingest_spliddit_from(reader: impl Read) -> Result<Vec<SplidditInstance>> {
    let mut csv = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(reader);
    let mut order: Vec<String> = Vec::new();
    let mut rows: BTreeMap<String, Vec<(u64, Vec<u64>)>> = BTreeMap::new();
    for (line, record) in csv.records().enumerate() {
        let record = record?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() < 2 {
            return Err(Error::Parse(format!("line {}: expected instance_id,agent,points...", line + 1)));
        }
        let Ok(agent) = record[1].parse::<u64>() else {
            if line == 0 {
                continue; // header
            }
            return Err(Error::Parse(format!("line {}: agent field {:?} is not an integer", line + 1, &record[1])));
        };
        let points = record
            .iter()
            .skip(2)
            .map(|p| p.parse::<u64>().map_err(|_| Error::Parse(format!("line {}: {p:?} is not a nonnegative integer", line + 1))))
            .collect::<Result<Vec<u64>>>()?;
        let total: u64 = points.iter().sum();
        if total != 1000 {
            log::warn!("line {}: agent {agent} of instance {} spends {total} points, not 1000", line + 1, &record[0]);
        }
        let id = record[0].to_string();
        if !rows.contains_key(&id) {
            order.push(id.clone());
        }
        rows.entry(id).or_default().push((agent, points));
    }
    order
        .into_iter()
        .map(|id| {
            let mut agents = rows.remove(&id).expect("grouped");
            agents.sort_by_key(|(a, _)| *a);
            if agents.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::Parse(format!("instance {id} lists an agent twice")));
            }
            let m = agents[0].1.len();
            if agents.iter().any(|(_, p)| p.len() != m) {
                return Err(Error::RaggedRows(id));
            }
            let table: Vec<Vec<i64>> = agents.iter().map(|(_, p)| p.iter().map(|&v| v as i64).collect()).collect();
            let instance = Instance::goods_additive(table)?;
            let graph = make_path(instance.n())?;
            Ok(SplidditInstance { id, instance, graph })
        })
        .collect()
}

/// One line of a potential trace CSV.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRow {
    pub instance_id: String,
    pub round: usize,
    pub phi1: Rational,
    pub phi2: Rational,
    pub phi3: Rational,
}

/// Rows for round 0 (the starting allocation) through the last round.
pub fn trace_rows(instance_id: &str, trace: &SweepTrace) -> Vec<TraceRow> {
    trace
        .series()
        .into_iter()
        .enumerate()
        .map(|(round, p)| TraceRow { instance_id: instance_id.to_string(), round, phi1: p.phi1, phi2: p.phi2, phi3: p.phi3 })
        .collect()
}

pub fn write_trace_csv(writer: impl Write, rows: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace_csv(reader: impl Read) -> Result<Vec<TraceRow>> {
    let mut r = csv::Reader::from_reader(reader);
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record?;
        if record.len() != 5 {
            return Err(Error::Parse(format!("trace row has {} fields, expected 5", record.len())));
        }
        let rational = |k: usize| record[k].parse::<Rational>().map_err(|e| Error::Parse(e.0));
        rows.push(TraceRow {
            instance_id: record[0].to_string(),
            round: record[1].parse().map_err(|_| Error::Parse(format!("bad round {:?}", &record[1])))?,
            phi1: rational(2)?,
            phi2: rational(3)?,
            phi3: rational(4)?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::{sweep, SweepConfig};

    const EXAMPLE_ONE: &str = r#"{
        "agents": 3,
        "items": [
            {"id": 0, "kind": "good"}, {"id": 1, "kind": "good"}, {"id": 2, "kind": "good"},
            {"id": 3, "kind": "good"}, {"id": 4, "kind": "good"}, {"id": 5, "kind": "good"}
        ],
        "valuations": [
            {"type": "additive", "values": [9, 1, 0, 0, 0, 0]},
            {"type": "additive", "values": [8, 0, 0, 0, 0, 2]},
            {"type": "additive", "values": [2, 2, 2, 1, 2, 1]}
        ],
        "graph": {"type": "path", "n": 3}
    }"#;

    #[test]
    fn example_one_parses() {
        let (inst, g) = instance_from_json(EXAMPLE_ONE).unwrap();
        assert_eq!(inst, Instance::goods_additive([[9, 1, 0, 0, 0, 0], [8, 0, 0, 0, 0, 2], [2, 2, 2, 1, 2, 1]]).unwrap());
        assert_eq!(g, make_path(3).unwrap());
    }

    #[test]
    fn round_trip_with_rationals_tables_and_lex() {
        let items = vec![Item::good(0), Item::good(1)];
        let table = Valuation::table_from_entries(
            2,
            &[
                (Bundle::new(), Rational::zero()),
                ([0].into(), Rational::new(1, 3)),
                ([1].into(), Rational::new(1, 2)),
                ([0, 1].into(), Rational::one()),
            ],
        )
        .unwrap();
        let inst = Instance::new(
            items,
            vec![Valuation::additive([Rational::new(2, 7), Rational::from_integer(3)]), table, Valuation::Lexicographic(vec![1, 0])],
        )
        .unwrap();
        let g = Graph::new(3, [(0, 2)]).unwrap();
        let text = instance_to_json(&inst, &g);
        assert!(text.contains("\"2/7\""));
        assert_eq!(instance_from_json(&text).unwrap(), (inst, g));
    }

    #[test]
    fn rejects_bad_documents() {
        let negative = EXAMPLE_ONE.replace("[9, 1, 0", "[-9, 1, 0");
        let err = instance_from_json(&negative).unwrap_err().to_string();
        assert!(err.contains("valuations[0]"), "{err}");
        let float = EXAMPLE_ONE.replace("[9, 1, 0", "[9.5, 1, 0");
        assert!(matches!(instance_from_json(&float), Err(Error::Parse(_))));
        let wrong_n = EXAMPLE_ONE.replace("\"n\": 3", "\"n\": 4");
        assert!(matches!(instance_from_json(&wrong_n), Err(Error::InvalidGraph(_))));
        assert!(matches!(instance_from_json("{"), Err(Error::Parse(_))));
    }

    #[test]
    fn allocation_round_trip() {
        let x = Allocation::new(vec![[0, 1].into(), [2].into()], 3).unwrap();
        let hidden: HiddenSet = [1].into_iter().collect();
        let file = allocation_from_json(&allocation_to_json(&x, Some(&hidden))).unwrap();
        let inst = Instance::goods_additive([[1, 1, 1], [1, 1, 1]]).unwrap();
        assert_eq!(file.to_allocation(&inst).unwrap(), x);
        assert_eq!(file.hidden_set(), Some(hidden));
    }

    #[test]
    fn spliddit_ingestion() {
        let text = "instance_id,agent,p1,p2,p3\n7,1,500,300,200\n7,0,100,100,800\n9,0,1000,0,0\n9,1,0,0,1000\n";
        let got = ingest_spliddit_from(text.as_bytes()).unwrap();
        assert_eq!(got.len(), 2);
        assert_eq!(got[0].id, "7");
        assert_eq!(got[0].instance, Instance::goods_additive([[100, 100, 800], [500, 300, 200]]).unwrap());
        assert_eq!(got[0].graph, make_path(2).unwrap());
        assert!(ingest_spliddit_from("".as_bytes()).unwrap().is_empty());
        let ragged = "1,0,1,2,3\n1,1,1,2\n";
        assert!(matches!(ingest_spliddit_from(ragged.as_bytes()), Err(Error::RaggedRows(_))));
        assert!(ingest_spliddit_from("1,0,-5,3\n".as_bytes()).is_err());
    }

    #[test]
    fn trace_csv_round_trip() {
        let inst = Instance::goods_additive([[120, 200, 80, 120, 400, 80], [39, 39, 38, 77, 769, 38], [994, 1, 1, 1, 2, 1]]).unwrap();
        let (_, trace) = sweep(&inst, 3, &SweepConfig::default()).unwrap();
        let rows = trace_rows("t3", &trace);
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("instance_id,round,phi1,phi2,phi3\n"));
        assert_eq!(read_trace_csv(buf.as_slice()).unwrap(), rows);
    }
}
