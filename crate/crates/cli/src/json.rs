//! JSON interchange types. Rationals travel as `"p/q"` strings; integers are
//! also accepted on input.

use mmskit_core::numeric::{format_rational, parse_rational};
use mmskit_core::rbf::{BagEvent, ReductionEvent, Transcript};
use mmskit_core::{Allocation, Bundle, Instance, PriorityRanking, Rational, ThresholdList};
use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rat(pub Rational);

impl Serialize for Rat {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(&self.0))
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Signed(i64),
            Unsigned(u64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Signed(v) => Ok(Rat(Rational::from_integer(v.into()))),
            Raw::Unsigned(v) => Ok(Rat(Rational::from_integer(v.into()))),
            Raw::Text(t) => parse_rational(&t).map(Rat).ok_or_else(|| {
                de::Error::custom(format!("`{t}` is not a rational of the form p/q"))
            }),
        }
    }
}

pub fn rat(value: &Rational) -> Rat {
    Rat(value.clone())
}

pub fn rats(values: &[Rational]) -> Vec<Rat> {
    values.iter().map(rat).collect()
}

fn set(goods: &[usize], what: &str) -> Result<Bundle, CliError> {
    let out: Bundle = goods.iter().copied().collect();
    if out.len() != goods.len() {
        return Err(CliError::Input(format!("{what} lists a good twice")));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub agents: usize,
    pub goods: usize,
    pub valuations: Vec<Vec<Rat>>,
    /// Generator parameters; ignored on input.
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub meta: Map<String, Value>,
}

impl InstanceFile {
    pub fn from_instance(inst: &Instance) -> Self {
        Self {
            agents: inst.agents(),
            goods: inst.goods(),
            valuations: inst.rows().iter().map(|r| rats(r)).collect(),
            meta: Map::new(),
        }
    }

    pub fn to_instance(&self) -> Result<Instance, CliError> {
        if self.valuations.len() != self.agents {
            return Err(CliError::Input(format!(
                "\"agents\" is {} but {} valuation rows are given",
                self.agents,
                self.valuations.len()
            )));
        }
        let rows = self
            .valuations
            .iter()
            .map(|r| r.iter().map(|v| v.0.clone()).collect())
            .collect();
        Ok(Instance::new(self.goods, rows)?)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllocationJson {
    pub bundles: Vec<Vec<usize>>,
    #[serde(default)]
    pub unallocated: Vec<usize>,
}

impl AllocationJson {
    pub fn from_allocation(alloc: &Allocation) -> Self {
        Self {
            bundles: alloc
                .bundles
                .iter()
                .map(|b| b.iter().copied().collect())
                .collect(),
            unallocated: alloc.unallocated.iter().copied().collect(),
        }
    }

    pub fn to_allocation(&self) -> Result<Allocation, CliError> {
        Ok(Allocation {
            bundles: self
                .bundles
                .iter()
                .map(|b| set(b, "a bundle"))
                .collect::<Result<_, _>>()?,
            unallocated: set(&self.unallocated, "\"unallocated\"")?,
        })
    }
}

pub fn thresholds_json(t: &ThresholdList) -> Vec<Rat> {
    rats(t.as_slice())
}

pub fn thresholds_from_json(t: &[Rat]) -> Result<ThresholdList, CliError> {
    Ok(ThresholdList::new(t.iter().map(|v| v.0.clone()).collect())?)
}

pub fn ranking_from_json(ranks: &[usize]) -> Result<PriorityRanking, CliError> {
    Ok(PriorityRanking::new(ranks.to_vec())?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionJson {
    pub kind: u8,
    pub bundle: Vec<usize>,
    pub agent: usize,
    pub rank: usize,
    pub agents_before: usize,
    pub goods_before: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum BagEventJson {
    Fill {
        bag: usize,
        good: usize,
    },
    Assign {
        bag: usize,
        agent: usize,
        rank: usize,
        liked: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptJson {
    pub agents: usize,
    pub goods: usize,
    pub reductions: Vec<ReductionJson>,
    pub bag_events: Vec<BagEventJson>,
    pub ran_out_of_goods: bool,
    pub final_goods: Vec<usize>,
    pub final_agents: Vec<usize>,
    pub initial_bags: Vec<Vec<usize>>,
}

fn list(b: &Bundle) -> Vec<usize> {
    b.iter().copied().collect()
}

impl TranscriptJson {
    pub fn from_transcript(tr: &Transcript) -> Self {
        Self {
            agents: tr.agents,
            goods: tr.goods,
            reductions: tr
                .reductions
                .iter()
                .map(|r| ReductionJson {
                    kind: r.kind,
                    bundle: list(&r.bundle),
                    agent: r.agent,
                    rank: r.rank,
                    agents_before: r.agents_before,
                    goods_before: r.goods_before,
                })
                .collect(),
            bag_events: tr
                .bag_events
                .iter()
                .map(|e| match *e {
                    BagEvent::Fill { bag, good } => BagEventJson::Fill { bag, good },
                    BagEvent::Assign {
                        bag,
                        agent,
                        rank,
                        liked,
                    } => BagEventJson::Assign {
                        bag,
                        agent,
                        rank,
                        liked,
                    },
                })
                .collect(),
            ran_out_of_goods: tr.ran_out_of_goods,
            final_goods: list(&tr.final_goods),
            final_agents: tr.final_agents.clone(),
            initial_bags: tr.initial_bags.iter().map(list).collect(),
        }
    }

    pub fn to_transcript(&self) -> Result<Transcript, CliError> {
        let reductions = self
            .reductions
            .iter()
            .map(|r| {
                if !(1..=4).contains(&r.kind) {
                    return Err(CliError::Input(format!(
                        "reduction kind {} is not in 1..=4",
                        r.kind
                    )));
                }
                Ok(ReductionEvent {
                    kind: r.kind,
                    bundle: set(&r.bundle, "a reduction bundle")?,
                    agent: r.agent,
                    rank: r.rank,
                    agents_before: r.agents_before,
                    goods_before: r.goods_before,
                })
            })
            .collect::<Result<_, _>>()?;
        Ok(Transcript {
            agents: self.agents,
            goods: self.goods,
            reductions,
            bag_events: self
                .bag_events
                .iter()
                .map(|e| match *e {
                    BagEventJson::Fill { bag, good } => BagEvent::Fill { bag, good },
                    BagEventJson::Assign {
                        bag,
                        agent,
                        rank,
                        liked,
                    } => BagEvent::Assign {
                        bag,
                        agent,
                        rank,
                        liked,
                    },
                })
                .collect(),
            ran_out_of_goods: self.ran_out_of_goods,
            final_goods: set(&self.final_goods, "\"final_goods\"")?,
            final_agents: self.final_agents.clone(),
            initial_bags: self
                .initial_bags
                .iter()
                .map(|b| set(b, "an initial bag"))
                .collect::<Result<_, _>>()?,
        })
    }
}

pub fn partition_json(parts: &[Bundle]) -> Vec<Vec<usize>> {
    parts.iter().map(list).collect()
}

/// Accepts either a bare allocation or any report carrying an
/// `"allocation"` field.
pub fn allocation_from_value(value: Value) -> Result<Allocation, CliError> {
    let inner = match value {
        Value::Object(mut map) if map.contains_key("allocation") => {
            map.remove("allocation").unwrap_or(Value::Null)
        }
        other => other,
    };
    let parsed: AllocationJson =
        serde_json::from_value(inner).map_err(|e| CliError::Input(format!("allocation: {e}")))?;
    parsed.to_allocation()
}
