//! Subcommand implementations.

use std::path::{Path, PathBuf};

use musobench::corpus::{Corpus, GenConfig};
use musobench::fsutil::write_json_atomic;
use musobench::harness::{
    run_benchmark, run_temperature_sweep, ChatClient, HttpChatClient, MockEndpoint, Persona, RunConfig, RunControl,
    RunOutcome, RunStatus, RUN_FILE,
};
use musobench::oracle::{self, OracleError, SolverConfig};
use musobench::report::{
    self, emit_figures, load_scored, percent_string, score_run, write_scored, ScoredRun, SUMMARY_FILE,
};
use musobench::selftest::{self, SelftestOptions};

use crate::config::PipelineConfig;
use crate::failure::Failure;
use crate::{Cli, Command, GenArgs, ReportArgs, RunArgs, ScoreArgs, SelftestArgs, SolveArgs};

pub fn dispatch(cli: Cli) -> Result<(), Failure> {
    let globals = Globals {
        seed: cli.seed,
        parallelism: cli.parallelism,
        mock: cli.mock,
    };
    match cli.command {
        Command::Gen(a) => gen(&globals, a),
        Command::Solve(a) => solve(a),
        Command::Run(a) => run(&globals, a),
        Command::Score(a) => score(a),
        Command::Report(a) => report(a),
        Command::Selftest(a) => selftest(&globals, a),
    }
}

struct Globals {
    seed: Option<u64>,
    parallelism: Option<usize>,
    mock: Option<String>,
}

fn load_corpus(path: &Path) -> Result<Corpus, Failure> {
    Corpus::load(path).map_err(|e| {
        let f = Failure::from(e);
        Failure {
            message: format!("corpus {}: {}", path.display(), f.message),
            ..f
        }
    })
}

fn gen(g: &Globals, a: GenArgs) -> Result<(), Failure> {
    let cfg = PipelineConfig::load_opt(a.config.as_deref())?;
    let mut gen = match (cfg.gen.clone(), a.task) {
        (Some(gen), Some(task)) if gen.params.kind() != task => {
            return Err(Failure::usage(format!(
                "--task {task} disagrees with the config's {} generator",
                gen.params.kind()
            )))
        }
        (Some(gen), _) => gen,
        (None, Some(task)) => GenConfig::default_for(task),
        (None, None) => return Err(Failure::usage("gen needs --task or a config with a `gen` section")),
    };
    if let Some(q) = a.quota {
        gen.quota = q;
    }
    let seed = g.seed.or(cfg.seed).unwrap_or(0);
    let out = cfg.output(a.out, "corpus.json")?;
    let corpus = Corpus::build(gen, seed)?;
    corpus.save(&out)?;
    println!(
        "wrote {} {} items to {} (sha256 {})",
        corpus.items.len(),
        corpus.task_kind,
        out.display(),
        corpus.content_hash()
    );
    Ok(())
}

fn solve(a: SolveArgs) -> Result<(), Failure> {
    let corpus = load_corpus(&a.corpus)?;
    let solver = SolverConfig {
        node_budget: corpus.config.build.node_budget,
        max_solutions: None,
    };
    let (mut mismatched, mut brute_checked, mut brute_skipped) = (Vec::new(), 0usize, 0usize);
    for item in &corpus.items {
        let fresh =
            oracle::solve(&item.instance, &solver).map_err(|e| Failure::integrity(format!("{}: {e}", item.item_id)))?;
        if fresh != item.ground_truth {
            mismatched.push(format!("{} (backtracking)", item.item_id));
        }
        if a.check_brute_force {
            match oracle::brute_force(&item.instance) {
                Ok(brute) => {
                    brute_checked += 1;
                    if brute != item.ground_truth {
                        mismatched.push(format!("{} (exhaustive)", item.item_id));
                    }
                }
                Err(OracleError::AboveScanBound(_)) => brute_skipped += 1,
                Err(e) => return Err(Failure::integrity(format!("{}: {e}", item.item_id))),
            }
        }
    }
    println!("items: {}", corpus.items.len());
    if a.check_brute_force {
        println!("exhaustive checks: {brute_checked} (skipped above scan bound: {brute_skipped})");
    }
    println!("mismatches: {}", mismatched.len());
    if mismatched.is_empty() {
        Ok(())
    } else {
        Err(Failure::integrity(format!(
            "ground truth disagrees for {}",
            mismatched.join(", ")
        )))
    }
}

fn resolve_run(g: &Globals, a: &RunArgs, cfg: &PipelineConfig) -> Result<RunConfig, Failure> {
    let mut run = cfg.run.clone().unwrap_or_default();
    if let Some(seed) = g.seed.or(cfg.seed) {
        run.seed = seed;
    }
    if let Some(p) = g.parallelism {
        run.parallelism = p;
    }
    if let Some(s) = a.strategy {
        run.strategy.kind = s;
    }
    if let Some(n) = a.n {
        run.strategy.n = n;
    }
    if let Some(c) = &a.checkpoints {
        run.strategy.checkpoints = c.clone();
    }
    if let Some(p) = a.paradigm {
        run.paradigm = p;
    }
    if let Some(m) = &a.model {
        run.model = m.clone();
    }
    if let Some(t) = a.temperature {
        run.temperature = t;
    }
    run.plan.recheck |= a.recheck;
    run.plan.explore |= a.explore;
    run.validate()?;
    Ok(run)
}

fn run(g: &Globals, a: RunArgs) -> Result<(), Failure> {
    let cfg = PipelineConfig::load_opt(a.config.as_deref())?;
    let run_cfg = resolve_run(g, &a, &cfg)?;
    let corpus = load_corpus(&a.corpus)?;
    let out = cfg.output(a.out.clone(), "run")?;
    let mock = g.mock.clone().or(cfg.mock.clone());
    let client: Box<dyn ChatClient> = match &mock {
        Some(spec) => Box::new(MockEndpoint::persona(Persona::resolve(spec)?)),
        None => Box::new(HttpChatClient::new(&run_cfg.endpoint)),
    };
    std::fs::create_dir_all(&out)?;
    let resolved = PipelineConfig {
        seed: Some(run_cfg.seed),
        output_root: cfg.output_root.clone(),
        gen: None,
        run: Some(run_cfg.clone()),
        mock,
    };
    write_json_atomic(&out.join("pipeline.json"), &resolved)?;

    let outcomes: Vec<RunOutcome> = match &a.temperatures {
        Some(temps) => run_temperature_sweep(client.as_ref(), &corpus, &run_cfg, temps, &out, &RunControl::default())?
            .into_iter()
            .map(|(_, o)| o)
            .collect(),
        None => vec![run_benchmark(client.as_ref(), &corpus, &run_cfg, &out)?],
    };
    let mut failed = 0;
    for o in &outcomes {
        println!(
            "{}: {:?}, complete {}, parse-empty {}, endpoint-failed {}, queried {}, replayed {}",
            o.dir.display(),
            o.status,
            o.counts.complete,
            o.counts.parse_empty,
            o.counts.endpoint_failed,
            o.queried,
            o.replayed
        );
        failed += o.counts.endpoint_failed;
        if o.status != RunStatus::Complete {
            return Err(Failure::endpoint(format!("{} did not complete", o.dir.display())));
        }
    }
    if failed > 0 {
        return Err(Failure::endpoint(format!(
            "{failed} item(s) failed at the endpoint; rerun to retry them"
        )));
    }
    Ok(())
}

/// Run directories below `dir`: itself, or its sweep subdirectories.
fn run_dirs(dir: &Path) -> Result<Vec<PathBuf>, Failure> {
    if dir.join(RUN_FILE).is_file() {
        return Ok(vec![dir.to_path_buf()]);
    }
    let mut subs: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Failure::usage(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(RUN_FILE).is_file())
        .collect();
    subs.sort();
    if subs.is_empty() {
        return Err(Failure::usage(format!("{} holds no run", dir.display())));
    }
    Ok(subs)
}

fn print_summary(dir: &Path, s: &ScoredRun) {
    let pct = |r: &report::Rate| r.fraction.map_or_else(|| "n/a".to_owned(), percent_string);
    let m = &s.summary;
    println!(
        "{}: scored {}/{}, precision {}, recall {}, confidence {}, ECE(recall) {}, ECE(precision) {}",
        dir.display(),
        m.scored,
        m.corpus_items,
        pct(&m.precision),
        pct(&m.recall),
        pct(&m.confidence),
        pct(&m.ece_recall),
        pct(&m.ece_precision)
    );
}

fn score(a: ScoreArgs) -> Result<(), Failure> {
    let corpus = load_corpus(&a.corpus)?;
    let out = a.out;
    let dirs = run_dirs(&a.run)?;
    let sweep = dirs.len() > 1 || dirs[0] != a.run;
    for dir in dirs {
        let scored = score_run(&dir, &corpus)?;
        let target = if sweep {
            out.join(dir.file_name().expect("subdirectory"))
        } else {
            out.clone()
        };
        write_scored(&target, &scored)?;
        print_summary(&target, &scored);
    }
    Ok(())
}

fn report(a: ReportArgs) -> Result<(), Failure> {
    let corpus = a.corpus.as_deref().map(load_corpus).transpose()?;
    let mut runs: Vec<(String, ScoredRun)> = Vec::new();
    for dir in &a.runs {
        let scored = if dir.join(SUMMARY_FILE).is_file() {
            load_scored(dir)?
        } else if dir.join(RUN_FILE).is_file() {
            let corpus = corpus
                .as_ref()
                .ok_or_else(|| Failure::usage(format!("{} is unscored; pass --corpus", dir.display())))?;
            score_run(dir, corpus)?
        } else {
            return Err(Failure::usage(format!(
                "{} is neither a scored nor a run directory",
                dir.display()
            )));
        };
        let mut label = dir
            .file_name()
            .map_or_else(|| dir.display().to_string(), |n| n.to_string_lossy().into_owned());
        if runs.iter().any(|(l, _)| *l == label) {
            label = dir.display().to_string();
        }
        runs.push((label, scored));
    }
    if a.paired && runs.len() != 2 {
        return Err(Failure::usage("--paired needs exactly two runs"));
    }
    for f in emit_figures(&runs, a.paired, &a.out)? {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn selftest(g: &Globals, a: SelftestArgs) -> Result<(), Failure> {
    let options = SelftestOptions {
        subsetsum_instances: a.subsetsum,
        timetabling_instances: a.timetabling,
        seed: g.seed.unwrap_or(0),
    };
    let checks = selftest::run_selftest(&options);
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure::integrity(format!("{failed} self-check(s) failed")))
    }
}
