//! Parsers for the policy strings accepted on the command line.

use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use kscoal::coalition::{AssignmentFile, TaskId};
use kscoal::engine::KPolicy;
use kscoal::experiments::{GraphKind, InstanceSpec, UtilityKind};
use kscoal::{Assignment, Structure};

/// `instance`, `uniform:N` or `list:K1,K2,...`.
pub fn parse_k(text: &str) -> Result<KPolicy> {
    let (head, tail) = text.split_once(':').unwrap_or((text, ""));
    match head {
        "instance" if tail.is_empty() => Ok(KPolicy::FromStructure),
        "uniform" => {
            let k: usize = tail.parse().with_context(|| format!("bad k in '{text}'"))?;
            if k == 0 {
                bail!("k must be at least 1");
            }
            Ok(KPolicy::Uniform(k))
        }
        "list" => Ok(KPolicy::PerRobot(parse_list(tail)?)),
        _ => bail!("unknown k policy '{text}' (expected instance, uniform:N or list:K1,K2,...)"),
    }
}

pub fn parse_list(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|t| t.trim().parse::<usize>().with_context(|| format!("bad integer '{t}'")))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum WarmSpec {
    Idle,
    Greedy,
    Previous(PathBuf),
    Fixed(String),
}

/// `idle`, `greedy`, `previous:FILE` or `fixed:TASKS`.
pub fn parse_warm(text: &str) -> Result<WarmSpec> {
    let (head, tail) = text.split_once(':').unwrap_or((text, ""));
    match (head, tail.is_empty()) {
        ("idle", true) => Ok(WarmSpec::Idle),
        ("greedy", true) => Ok(WarmSpec::Greedy),
        ("previous", false) => Ok(WarmSpec::Previous(PathBuf::from(tail))),
        ("fixed", false) => Ok(WarmSpec::Fixed(tail.to_string())),
        _ => bail!("unknown warm start '{text}' (expected idle, greedy, previous:FILE or fixed:TASKS)"),
    }
}

/// Reads a task list such as `aa`, `a,idle` or `0,1`. Without commas every
/// character must name a task.
pub fn parse_fixed(text: &str, s: &Structure) -> Result<Assignment> {
    let lookup = |token: &str| -> Result<TaskId> {
        s.task_by_name(token)
            .or_else(|| token.parse::<usize>().ok().filter(|&i| i < s.n_tasks()).map(TaskId))
            .ok_or_else(|| anyhow!("unknown task '{token}'"))
    };
    let tokens: Vec<String> = if text.contains(',') {
        text.split(',').map(|t| t.trim().to_string()).collect()
    } else if text.chars().all(|c| s.task_by_name(&c.to_string()).is_some()) {
        text.chars().map(|c| c.to_string()).collect()
    } else {
        vec![text.to_string()]
    };
    if tokens.len() != s.n_robots() {
        bail!("fixed assignment names {} tasks for {} robots", tokens.len(), s.n_robots());
    }
    let tasks = tokens.iter().map(|t| lookup(t)).collect::<Result<Vec<_>>>()?;
    Ok(Assignment::from_tasks(tasks))
}

pub fn read_assignment(path: &PathBuf, s: &Structure) -> Result<Assignment> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: AssignmentFile =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(s.assignment_from_file(&file)?)
}

/// `default`, a JSON file, or comma-separated overrides of the default
/// family: `n=20,m=8,caps=3|all,utility=table|saturating,`
/// `graph=complete|connected:P|disk:SIDE:RADIUS`.
pub fn parse_family(text: &str) -> Result<InstanceSpec> {
    if text.ends_with(".json") {
        let body = std::fs::read_to_string(text).with_context(|| format!("reading {text}"))?;
        return serde_json::from_str(&body).with_context(|| format!("parsing {text}"));
    }
    let mut spec = InstanceSpec::bench_family();
    if text == "default" || text.is_empty() {
        return Ok(spec);
    }
    for item in text.split(',') {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| anyhow!("expected key=value, got '{item}'"))?;
        let num = |v: &str| v.parse::<f64>().with_context(|| format!("bad number '{v}'"));
        match key {
            "n" => spec.n_robots = value.parse().context("bad n")?,
            "m" => spec.n_tasks = value.parse().context("bad m")?,
            "caps" if value == "all" => spec.capabilities = None,
            "caps" => spec.capabilities = Some(value.parse().context("bad caps")?),
            "utility" => {
                spec.utility = match value {
                    "table" => UtilityKind::Table,
                    "saturating" => UtilityKind::Saturating,
                    _ => bail!("unknown utility '{value}'"),
                }
            }
            "graph" => {
                let parts: Vec<&str> = value.split(':').collect();
                spec.graph = match parts.as_slice() {
                    ["complete"] => GraphKind::Complete,
                    ["connected", p] => GraphKind::Connected { p: num(p)? },
                    ["disk", side, radius] => GraphKind::Disk {
                        side: num(side)?,
                        radius: num(radius)?,
                    },
                    _ => bail!("unknown graph '{value}'"),
                }
            }
            _ => bail!("unknown family key '{key}'"),
        }
    }
    if spec.n_robots == 0 || spec.n_tasks == 0 {
        bail!("family needs at least one robot and one task");
    }
    Ok(spec)
}
