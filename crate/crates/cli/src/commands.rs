use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use log::{info, warn};
use serde_json::json;

use kscoal::engine::{self, EngineConfig, Heuristic, InitPolicy};
use kscoal::experiments::{self, BenchPlan, ExperimentError, VerifyCase, VerifyPlan};
use kscoal::netsim::NetConfig;
use kscoal::oracle::{self, OracleError, OracleReport};
use kscoal::world::{run_scenario, ScenarioConfig};
use kscoal::{Config, Structure};

use crate::policy::{self, WarmSpec};
use crate::{BenchArgs, SimulateArgs, SolveArgs, Status, VerifyArgs};

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, body: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, body).with_context(|| format!("writing {}", path.display()))
}

fn emit(out: Option<&PathBuf>, body: &str) -> Result<()> {
    match out {
        Some(p) => write(p, body),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn load_structure(path: &Path) -> Result<Structure> {
    Structure::from_json(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

pub fn solve(args: SolveArgs) -> Result<Status> {
    let s = load_structure(&args.instance)?;
    let k = policy::parse_k(&args.k)?;
    let init = match policy::parse_warm(&args.warm)? {
        WarmSpec::Idle => InitPolicy::Idle,
        WarmSpec::Greedy => InitPolicy::GreedyMarginal,
        WarmSpec::Previous(p) => InitPolicy::Fixed(policy::read_assignment(&p, &s)?),
        WarmSpec::Fixed(t) => InitPolicy::Fixed(policy::parse_fixed(&t, &s)?),
    };
    let warm = Heuristic { k, init };
    let cfg = Config {
        epsilon: args.epsilon,
        max_rounds: args.rounds,
        rng_seed: args.seed,
        ..Config::default()
    };
    let net = NetConfig {
        delay_rounds: args.delay,
        drop_prob: args.drop,
        rng_seed: args.seed,
    };
    let sol = engine::run_to_convergence(&s, &net, &cfg, &warm, None).context("solving")?;
    let out = json!({
        "assignment": s.assignment_file(&sol.assignment),
        "utility": sol.utility,
        "converged": sol.converged,
        "agreed": sol.agreed,
        "k_indices": sol.k_indices,
        "warnings": sol.warnings,
        "stats": sol.stats,
    });
    emit(args.out.as_ref(), &(serde_json::to_string_pretty(&out)? + "\n"))?;
    info!(
        "rho = {} after {} rounds, {} messages",
        sol.utility, sol.stats.rounds_to_converge, sol.stats.total_messages
    );
    if sol.converged {
        Ok(Status::Success)
    } else {
        warn!("round limit reached, writing the best assignment found");
        Ok(Status::Anytime)
    }
}

pub fn simulate(args: SimulateArgs) -> Result<Status> {
    let mut cfg = match &args.scenario {
        Some(p) => ScenarioConfig::from_json(&read(p)?).with_context(|| format!("parsing {}", p.display()))?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(h) = args.horizon {
        cfg.horizon = h;
    }
    if args.no_coordination {
        cfg.coordination = false;
    }
    let out = run_scenario(&cfg)?;
    write(&args.out.join("steps.jsonl"), &out.steps_jsonl())?;
    let summary = out.summary_json() + "\n";
    write(&args.out.join("summary.json"), &summary)?;
    if args.trace {
        write(&args.out.join("trace.csv"), &out.trace_csv())?;
    }
    print!("{summary}");
    Ok(Status::Success)
}

/// How one verification entry ended.
enum Verdict {
    Checked(Box<VerifyCase>, Option<String>),
    Skipped(String),
}

fn row(name: &str, v: &Verdict) -> String {
    match v {
        Verdict::Skipped(why) => format!("{name:<28} SKIP  {why}"),
        Verdict::Checked(c, mismatch) => {
            let ok = c.passed() && mismatch.is_none();
            let mut line = format!(
                "{:<28} {}  N={} M={} rho={:.6} rounds={} msgs={} kss={} agreed={} monotone={}",
                name,
                if ok { "PASS" } else { "FAIL" },
                c.n_robots,
                c.n_tasks,
                c.utility,
                c.rounds,
                c.messages,
                c.kss,
                c.agreed,
                c.monotone,
            );
            if let Some(opt) = c.optimal_utility {
                line.push_str(&format!(" opt={opt:.6}"));
            }
            if let Some(m) = mismatch {
                line.push_str(&format!(" golden: {m}"));
            }
            line
        }
    }
}

fn check(name: &str, s: &Structure, golden: Option<&OracleReport<f64>>) -> Result<(Verdict, Option<OracleReport<f64>>)> {
    let mismatch = match golden {
        None => None,
        Some(g) => match oracle::report(&g.assignment, s) {
            Ok(fresh) => {
                let mut bad = Vec::new();
                if (fresh.utility - g.utility).abs() > 1e-9 {
                    bad.push(format!("utility {} != {}", g.utility, fresh.utility));
                }
                if (fresh.optimal_utility - g.optimal_utility).abs() > 1e-9 {
                    bad.push(format!("optimum {} != {}", g.optimal_utility, fresh.optimal_utility));
                }
                if fresh.is_kss != g.is_kss {
                    bad.push(format!("is_kss {} != {}", g.is_kss, fresh.is_kss));
                }
                (!bad.is_empty()).then(|| bad.join(", "))
            }
            Err(OracleError::TooLarge(n)) => return Ok((Verdict::Skipped(format!("search space {n} too large")), None)),
            Err(e) => Some(e.to_string()),
        },
    };
    match experiments::verify_instance(name, s, &Heuristic::default(), &EngineConfig::default()) {
        Ok((case, sol)) => {
            let report = oracle::report(&sol.assignment, s).ok();
            Ok((Verdict::Checked(Box::new(case), mismatch), report))
        }
        Err(ExperimentError::Oracle(OracleError::TooLarge(n))) => {
            Ok((Verdict::Skipped(format!("search space {n} too large")), None))
        }
        Err(e) => Err(e.into()),
    }
}

pub fn verify(args: VerifyArgs) -> Result<Status> {
    let start = Instant::now();
    let mut entries: Vec<(String, Verdict)> = Vec::new();
    if let Some(dir) = &args.instances {
        let mut names: Vec<String> = fs::read_dir(dir)
            .with_context(|| format!("listing {}", dir.display()))?
            .filter_map(|e| e.ok())
            .filter_map(|e| e.file_name().to_str().and_then(|n| n.strip_suffix(".instance.json")).map(String::from))
            .collect();
        names.sort();
        if names.is_empty() {
            bail!("no *.instance.json files in {}", dir.display());
        }
        for name in names {
            let s = load_structure(&dir.join(format!("{name}.instance.json")))?;
            let report_path = dir.join(format!("{name}.report.json"));
            let golden: Option<OracleReport<f64>> = if report_path.exists() {
                Some(serde_json::from_str(&read(&report_path)?).with_context(|| format!("parsing {}", report_path.display()))?)
            } else {
                None
            };
            let (verdict, _) = check(&name, &s, golden.as_ref())?;
            entries.push((name, verdict));
        }
    } else if let Some(count) = args.random {
        let plan = VerifyPlan {
            max_tasks: args.max_tasks,
            seed: args.seed,
            complete: args.complete,
            ..VerifyPlan::new(count, args.max_robots)
        };
        for index in 0..count {
            let (s, warm) = experiments::plan_case::<f64>(&plan, index);
            let name = format!("random-{index}");
            let verdict = match experiments::verify_instance(&name, &s, &warm, &EngineConfig::default()) {
                Ok((case, sol)) => {
                    if let Some(dir) = &args.emit_fixtures {
                        write(&dir.join(format!("{name}.instance.json")), &(s.to_json()? + "\n"))?;
                        let report = oracle::report(&sol.assignment, &s)?;
                        write(&dir.join(format!("{name}.report.json")), &(serde_json::to_string_pretty(&report)? + "\n"))?;
                    }
                    Verdict::Checked(Box::new(case), None)
                }
                Err(ExperimentError::Oracle(OracleError::TooLarge(n))) => Verdict::Skipped(format!("search space {n} too large")),
                Err(e) => return Err(e.into()),
            };
            entries.push((name, verdict));
        }
    }
    let mut failed = 0;
    let mut skipped = 0;
    for (name, v) in &entries {
        match v {
            Verdict::Skipped(why) => {
                warn!("{name} skipped: {why}");
                skipped += 1;
            }
            Verdict::Checked(c, m) if !c.passed() || m.is_some() => failed += 1,
            Verdict::Checked(..) => {}
        }
        println!("{}", row(name, v));
    }
    let elapsed = start.elapsed().as_secs_f64();
    println!(
        "{} checked, {} failed, {} skipped in {:.2} s",
        entries.len() - skipped,
        failed,
        skipped,
        elapsed
    );
    if let Some(path) = &args.json {
        let cases: Vec<_> = entries
            .iter()
            .map(|(name, v)| match v {
                Verdict::Checked(c, m) => json!({"name": name, "case": c, "golden_mismatch": m, "passed": c.passed() && m.is_none()}),
                Verdict::Skipped(why) => json!({"name": name, "skipped": why}),
            })
            .collect();
        let body = json!({"cases": cases, "failed": failed, "skipped": skipped, "elapsed_secs": elapsed});
        write(path, &(serde_json::to_string_pretty(&body)? + "\n"))?;
    }
    Ok(if failed == 0 { Status::Success } else { Status::VerifyFailed })
}

pub fn bench(args: BenchArgs) -> Result<Status> {
    if args.repeats == 0 {
        bail!("--repeats must be positive");
    }
    let csv = match &args.scenario {
        Some(path) => {
            let base = ScenarioConfig::from_json(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
            scenario_csv(&base, args.repeats)?
        }
        None => {
            let ks = policy::parse_list(&args.k_sweep)?;
            if ks.contains(&0) {
                bail!("k values must be at least 1");
            }
            let plan = BenchPlan {
                family: policy::parse_family(&args.instance_family)?,
                seeds: args.repeats,
                base_seed: args.seed,
                ks,
            };
            experiments::bench_csv(&experiments::bench(&plan)?)
        }
    };
    emit(args.out.as_ref(), &csv)?;
    Ok(Status::Success)
}

/// One row per seed starting at the scenario's own, then the column means.
fn scenario_csv(base: &ScenarioConfig, repeats: usize) -> Result<String> {
    let mut out = String::from("seed,captured,taken,score,replans,total_plan_messages,mean_plan_utility\n");
    let mut sums = [0.0f64; 6];
    for i in 0..repeats {
        let cfg = ScenarioConfig {
            seed: base.seed.wrapping_add(i as u64),
            ..base.clone()
        };
        let s = run_scenario(&cfg)?.summary;
        let vals = [
            s.captured as f64,
            s.taken as f64,
            s.score as f64,
            s.replans as f64,
            s.total_plan_messages as f64,
            s.mean_plan_utility,
        ];
        for (acc, v) in sums.iter_mut().zip(vals) {
            *acc += v;
        }
        out.push_str(&format!(
            "{},{},{},{},{},{},{:.9}\n",
            cfg.seed, s.captured, s.taken, s.score, s.replans, s.total_plan_messages, s.mean_plan_utility
        ));
    }
    let n = repeats as f64;
    let m: Vec<String> = sums.iter().map(|v| format!("{:.6}", v / n)).collect();
    out.push_str(&format!("mean,{}\n", m.join(",")));
    Ok(out)
}
