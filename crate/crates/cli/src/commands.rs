use std::io::Read;

use mmskit_core::adversarial::{gen_hard1, gen_hard2, gen_ordinal_tight, hard1_epsilon_inv};
use mmskit_core::bobw::{cyclic_rotation_distribution_general, BoundFamily};
use mmskit_core::generate::{random_instance, random_normalized};
use mmskit_core::numeric::{parse_rational, rat as ratio};
use mmskit_core::ordinal::{run_1_out_of_d, run_ordinal, GuaranteeCheck, OrdinalConfig};
use mmskit_core::rbf::{guaranteed_thresholds, run_rbf_pipeline, BagChoice, RbfConfig};
use mmskit_core::verify::{check_1_out_of_d, check_thresholds, check_transcript, AgentCheck};
use mmskit_core::{mms, Allocation, Instance, PriorityRanking, Rational, ThresholdList};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use crate::json::{
    allocation_from_value, partition_json, rat, rats, thresholds_json, AllocationJson,
    InstanceFile, TranscriptJson,
};
use crate::{BagChoiceArg, Cli, CliError, Command, Family, VerifyMode};

/// A JSON report and the exit code it should end the process with.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub json: Value,
    pub code: u8,
}

impl Report {
    fn ok(json: Value) -> Self {
        Self { json, code: 0 }
    }
}

pub fn read_source(path: &str) -> Result<String, CliError> {
    let mut text = String::new();
    let res = if path == "-" {
        std::io::stdin().read_to_string(&mut text).map(|_| ())
    } else {
        std::fs::read_to_string(path).map(|t| text = t)
    };
    res.map_err(|source| CliError::Io {
        path: path.to_string(),
        source,
    })?;
    Ok(text)
}

fn parse_json(path: &str) -> Result<Value, CliError> {
    let text = read_source(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{path}: {e}")))
}

pub fn load_instance(path: &str) -> Result<Instance, CliError> {
    let text = read_source(path)?;
    let file: InstanceFile =
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{path}: {e}")))?;
    file.to_instance()
}

pub fn parse_thresholds(spec: &str, n: usize) -> Result<ThresholdList, CliError> {
    if spec == "guaranteed" {
        return Ok(guaranteed_thresholds(n));
    }
    let taus = spec
        .split(',')
        .map(|t| {
            parse_rational(t)
                .ok_or_else(|| CliError::Input(format!("threshold `{t}` is not a rational")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if taus.len() != n {
        return Err(CliError::Input(format!(
            "{} thresholds given for {n} agents",
            taus.len()
        )));
    }
    Ok(ThresholdList::new(taus)?)
}

pub fn parse_ranking(spec: &str, n: usize) -> Result<PriorityRanking, CliError> {
    if spec == "identity" {
        return Ok(PriorityRanking::identity(n));
    }
    if let Some(k) = spec.strip_prefix("rotation:") {
        let k: usize = k.parse().map_err(|_| {
            CliError::Input(format!("rotation `{k}` is not a non-negative integer"))
        })?;
        return Ok(PriorityRanking::rotation(n, k));
    }
    let ranks = spec
        .split(',')
        .map(|r| {
            r.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Input(format!("rank `{r}` is not a non-negative integer")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if ranks.len() != n {
        return Err(CliError::Input(format!(
            "{} ranks given for {n} agents",
            ranks.len()
        )));
    }
    Ok(PriorityRanking::new(ranks)?)
}

fn checks_json(checks: &[AgentCheck]) -> Value {
    checks
        .iter()
        .map(|c| {
            json!({
                "agent": c.agent,
                "value": rat(&c.value),
                "share": rat(&c.share),
                "pass": c.pass,
            })
        })
        .collect()
}

fn all_pass(checks: &[AgentCheck]) -> bool {
    checks.iter().all(|c| c.pass)
}

fn values(inst: &Instance, alloc: &Allocation) -> Result<Vec<Rational>, CliError> {
    Ok(alloc.values(inst)?)
}

pub fn run(cli: &Cli) -> Result<Report, CliError> {
    let budget = cli.node_budget;
    match &cli.command {
        Command::Mms { instance, d, agent } => {
            cmd_mms(&load_instance(instance)?, *d, *agent, budget)
        }
        Command::Ordinal { instance, d } => cmd_ordinal(&load_instance(instance)?, *d, budget),
        Command::Rbf {
            instance,
            thresholds,
            ranking,
            bag_choice,
        } => cmd_rbf(
            &load_instance(instance)?,
            thresholds,
            ranking,
            *bag_choice,
            budget,
        ),
        Command::Bobw {
            instance,
            thresholds,
            seed,
        } => cmd_bobw(&load_instance(instance)?, thresholds, *seed, budget),
        Command::Gen { family } => cmd_gen(family).map(Report::ok),
        Command::Verify {
            instance,
            allocation,
            mode,
            d,
            thresholds,
            ranking,
        } => {
            let inst = load_instance(instance)?;
            let alloc = allocation_from_value(parse_json(allocation)?)?;
            cmd_verify(&inst, &alloc, *mode, *d, thresholds, ranking, budget)
        }
    }
}

pub fn cmd_mms(
    inst: &Instance,
    d: Option<usize>,
    agent: Option<usize>,
    budget: u64,
) -> Result<Report, CliError> {
    let d = d.unwrap_or(inst.agents());
    let agents: Vec<usize> = match agent {
        Some(a) => {
            inst.check_agent(a)?;
            vec![a]
        }
        None => (0..inst.agents()).collect(),
    };
    let all = inst.all_goods();
    let results = agents
        .into_iter()
        .map(|a| {
            let res = mms(inst, a, d, &all, budget)?;
            Ok(json!({
                "agent": a,
                "value": rat(&res.value),
                "witness": partition_json(res.witness.parts()),
            }))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(Report::ok(json!({ "d": d, "results": results })))
}

pub fn cmd_ordinal(inst: &Instance, d: Option<usize>, budget: u64) -> Result<Report, CliError> {
    let n = inst.agents();
    let guaranteed = 4 * n.div_ceil(3);
    match d {
        Some(d) if d != guaranteed => {
            let (alloc, run) = run_ordinal(
                inst,
                OrdinalConfig {
                    d: Some(d),
                    check: GuaranteeCheck::Warn,
                },
            )?;
            let checks = check_1_out_of_d(inst, &alloc, d, budget)?;
            Ok(Report::ok(json!({
                "d": d,
                "pipeline": false,
                "allocation": AllocationJson::from_allocation(&alloc),
                "values": rats(&values(inst, &alloc)?),
                "checks": checks_json(&checks),
                "all_pass": all_pass(&checks),
                "terminated_early": run.terminated_early,
                "assignment": run.assignment,
            })))
        }
        _ => {
            let out = run_1_out_of_d(inst, budget)?;
            let checks = check_1_out_of_d(inst, &out.allocation, out.d, budget)?;
            let pass = all_pass(&checks);
            let early = out.run.as_ref().is_some_and(|r| r.terminated_early);
            Ok(Report {
                json: json!({
                    "d": out.d,
                    "pipeline": true,
                    "allocation": AllocationJson::from_allocation(&out.allocation),
                    "values": rats(&values(inst, &out.allocation)?),
                    "checks": checks_json(&checks),
                    "all_pass": pass,
                    "terminated_early": early,
                }),
                code: if pass && !early { 0 } else { 3 },
            })
        }
    }
}

pub fn cmd_rbf(
    inst: &Instance,
    thresholds: &str,
    ranking: &str,
    bag_choice: BagChoiceArg,
    budget: u64,
) -> Result<Report, CliError> {
    let n = inst.agents();
    let taus = parse_thresholds(thresholds, n)?;
    let ranking = parse_ranking(ranking, n)?;
    let config = RbfConfig {
        bag_choice: match bag_choice {
            BagChoiceArg::LowestIndex => BagChoice::LowestIndex,
            BagChoiceArg::RoundRobin => BagChoice::RoundRobin,
        },
        ..RbfConfig::default()
    };
    let (record, out) = run_rbf_pipeline(inst, &taus, &ranking, config, budget)?;
    let checks = check_thresholds(inst, &out.allocation, &ranking, &taus, &record.original_mms)?;
    let pass = all_pass(&checks);
    let (transcript, violations) = match &out.run {
        Some(run) => {
            let v: Vec<Value> = check_transcript(&run.transcript)
                .into_iter()
                .map(|v| json!({ "rule": format!("{:?}", v.rule), "detail": v.detail }))
                .collect();
            (json!(TranscriptJson::from_transcript(&run.transcript)), v)
        }
        None => (Value::Null, Vec::new()),
    };
    Ok(Report {
        code: if pass && violations.is_empty() { 0 } else { 3 },
        json: json!({
            "thresholds": thresholds_json(&taus),
            "ranking": ranking.ranks(),
            "allocation": AllocationJson::from_allocation(&out.allocation),
            "values": rats(&values(inst, &out.allocation)?),
            "shares": rats(&record.original_mms),
            "checks": checks_json(&checks),
            "all_pass": pass,
            "working_ranking": out.working_ranking.as_ref().map(|r| r.ranks().to_vec()),
            "transcript": transcript,
            "transcript_violations": violations,
        }),
    })
}

pub fn cmd_bobw(
    inst: &Instance,
    thresholds: &str,
    seed: Option<u64>,
    budget: u64,
) -> Result<Report, CliError> {
    let n = inst.agents();
    let taus = parse_thresholds(thresholds, n)?;
    let dist = cyclic_rotation_distribution_general(inst, &taus, budget)?;
    let support: Vec<Value> = dist
        .support
        .iter()
        .map(|p| {
            json!({
                "ranking": p.ranking.ranks(),
                "allocation": AllocationJson::from_allocation(&p.allocation),
                "values": rats(&p.values),
            })
        })
        .collect();
    let mut body = Map::new();
    body.insert("probability".into(), json!(rat(&dist.probability())));
    body.insert("thresholds".into(), json!(thresholds_json(&taus)));
    body.insert("support".into(), Value::Array(support));
    body.insert("per_agent_ex_ante".into(), json!(rats(&dist.ex_ante)));
    body.insert(
        "per_agent_ex_post_min".into(),
        json!(rats(&dist.ex_post_min)),
    );
    body.insert("shares".into(), json!(rats(&dist.shares)));
    body.insert(
        "gamma".into(),
        json!(BoundFamily::Gamma.bound(n).to_decimal(20)),
    );
    if let Some(seed) = seed {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let point = dist.draw(&mut rng);
        let index = dist
            .support
            .iter()
            .position(|p| std::ptr::eq(p, point))
            .unwrap_or(0);
        body.insert(
            "draw".into(),
            json!({
                "seed": seed,
                "index": index,
                "allocation": AllocationJson::from_allocation(&point.allocation),
            }),
        );
    }
    Ok(Report::ok(Value::Object(body)))
}

fn instance_with_meta(inst: &Instance, meta: Value) -> Value {
    let mut file = InstanceFile::from_instance(inst);
    if let Value::Object(map) = meta {
        file.meta = map;
    }
    json!(file)
}

pub fn cmd_gen(family: &Family) -> Result<Value, CliError> {
    Ok(match *family {
        Family::Random {
            agents,
            goods,
            max_value,
            seed,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let inst = random_instance(&mut rng, agents, goods, max_value)?;
            instance_with_meta(&inst, json!({ "family": "random", "seed": seed }))
        }
        Family::Normalized {
            agents,
            goods,
            d,
            max_weight,
            seed,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = d.unwrap_or(agents);
            let s = random_normalized(&mut rng, agents, goods, d, max_weight)?;
            let partitions: Vec<Value> = s
                .partitions
                .iter()
                .map(|p| json!(partition_json(p.parts())))
                .collect();
            instance_with_meta(
                &s.instance,
                json!({ "family": "normalized", "seed": seed, "d": d, "partitions": partitions }),
            )
        }
        Family::OrdinalTight { n } => {
            let t = gen_ordinal_tight(n)?;
            instance_with_meta(
                &t.instance,
                json!({ "family": "ordinal-tight", "n": n, "d": t.d, "partition": partition_json(t.partition.parts()) }),
            )
        }
        Family::Hard1 { n, i, epsilon_inv } => {
            let epsilon_inv = match epsilon_inv {
                Some(e) => e,
                None => hard1_epsilon_inv(
                    &(ratio(3 * n as i64, (3 * n + i) as i64 - 2) + ratio(1, 1000)),
                )?,
            };
            let h = gen_hard1(n, i, epsilon_inv)?;
            instance_with_meta(
                &h.instance,
                json!({
                    "family": "hard1",
                    "n": n,
                    "i": h.i,
                    "alpha": rat(&h.alpha),
                    "delta": rat(&h.delta),
                    "epsilon": rat(&h.epsilon),
                    "partition_u": partition_json(h.partition_u.parts()),
                    "partition_w": partition_json(h.partition_w.parts()),
                }),
            )
        }
        Family::Hard2 { n, i, k1, k2, t } => {
            let h = gen_hard2(n, i, k1, k2, t)?;
            instance_with_meta(
                &h.target_instance(),
                json!({
                    "family": "hard2",
                    "n": n,
                    "i": i,
                    "k1": k1,
                    "k2": k2,
                    "t": t,
                    "alpha": rat(&h.alpha),
                    "epsilon": rat(&h.epsilon),
                    "partition": partition_json(h.partition.parts()),
                }),
            )
        }
    })
}

pub fn cmd_verify(
    inst: &Instance,
    alloc: &Allocation,
    mode: VerifyMode,
    d: Option<usize>,
    thresholds: &str,
    ranking: &str,
    budget: u64,
) -> Result<Report, CliError> {
    let n = inst.agents();
    let json = match mode {
        VerifyMode::OneOutOfD => {
            let d = d.ok_or_else(|| CliError::Input("--mode 1ood needs --d".into()))?;
            let checks = check_1_out_of_d(inst, alloc, d, budget)?;
            json!({
                "mode": "1ood",
                "d": d,
                "checks": checks_json(&checks),
                "all_pass": all_pass(&checks),
            })
        }
        VerifyMode::Tmms => {
            let taus = parse_thresholds(thresholds, n)?;
            let ranking = parse_ranking(ranking, n)?;
            let all = inst.all_goods();
            let shares = (0..n)
                .map(|a| Ok(mms(inst, a, n, &all, budget)?.value))
                .collect::<Result<Vec<_>, CliError>>()?;
            let checks = check_thresholds(inst, alloc, &ranking, &taus, &shares)?;
            json!({
                "mode": "tmms",
                "thresholds": thresholds_json(&taus),
                "ranking": ranking.ranks(),
                "checks": checks_json(&checks),
                "all_pass": all_pass(&checks),
            })
        }
    };
    Ok(Report::ok(json))
}
