//! One function per command. Each computes everything in memory and returns
//! the artifacts; nothing touches the output directory until it succeeds.

use qcoord::config::ModelFile;
use qcoord::model::{cascade_rate_point, isolated_rate, two_node_rate, NetworkKind, ValidatedExtension};
use qcoord::optimizer::{optimize, OptimizerOptions};
use qcoord::protocol::{converse_check, derandomize, quantile, Simulation, Simulator};

use crate::artifacts::{num, opt_num, Artifacts, Table};
use crate::experiment::{Command, Experiment, SimulationBlock, SweepParameter};
use crate::failure::{Failure, Outcome};

/// Progress output, silenced by `--quiet`.
pub struct Console {
    pub quiet: bool,
}

impl Console {
    pub fn say(&self, line: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", line.as_ref());
        }
    }
}

const QUANTILES: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];

fn kind_name(k: NetworkKind) -> String {
    k.to_string()
}

fn rates(v: &ValidatedExtension) -> Outcome<(f64, Option<f64>)> {
    Ok(match v.kind() {
        NetworkKind::TwoNode => (two_node_rate(v)?, None),
        NetworkKind::Cascade => {
            let p = cascade_rate_point(v)?;
            (p.r12, p.r23)
        }
        NetworkKind::Isolated => (isolated_rate(v)?, None),
    })
}

fn describe_rates(kind: NetworkKind, r12: f64, r23: Option<f64>) -> String {
    match (kind, r23) {
        (NetworkKind::Cascade, Some(r23)) => format!("I(X;YZ) = {r12:.6} bits, I(X;Z) = {r23:.6} bits"),
        (NetworkKind::Isolated, _) => format!("I(X;Y|Z) = {r12:.6} bits"),
        _ => format!("I(X;Y) = {r12:.6} bits"),
    }
}

pub fn run(exp: &Experiment, console: &Console) -> Outcome<Artifacts> {
    match exp.config.command {
        Command::Rate => rate(exp, console),
        Command::Optimize => optimize_cmd(exp, console),
        Command::Simulate => simulate(exp, console),
        Command::Derandomize => derandomize_cmd(exp, console),
        Command::Converse => converse(exp, console),
        Command::Sweep => sweep(exp, console),
    }
}

fn rate(exp: &Experiment, console: &Console) -> Outcome<Artifacts> {
    let v = exp.model()?.validated()?;
    let (r12, r23) = rates(&v)?;
    console.say(describe_rates(v.kind(), r12, r23));
    let mut t = Table::new("rate", &exp.hash, &["kind", "r12", "r23"]);
    t.push(vec![kind_name(v.kind()), num(r12), opt_num(r23)]);
    Ok(Artifacts {
        tables: vec![t],
        ..Default::default()
    })
}

fn optimize_cmd(exp: &Experiment, console: &Console) -> Outcome<Artifacts> {
    let block = exp.config.optimize.clone().unwrap_or_default();
    let target = exp.model()?.target()?;
    let res = optimize(&target, block.kind, &block.options)?;
    console.say(format!(
        "optimized {} objective {:.6} bits; {}",
        block.kind,
        res.value,
        describe_rates(block.kind, res.rate.r12, res.rate.r23)
    ));
    let mut t = Table::new(
        "optimize",
        &exp.hash,
        &["kind", "lambda", "value", "r12", "r23", "iterations", "max_residual"],
    );
    let max_residual = res.residuals.iter().copied().fold(0.0, f64::max);
    t.push(vec![
        kind_name(block.kind),
        num(block.options.lambda),
        num(res.value),
        num(res.rate.r12),
        opt_num(res.rate.r23),
        res.iterations.to_string(),
        num(max_residual),
    ]);
    let mut c = Table::new(
        "candidates",
        &exp.hash,
        &["label", "atoms_b", "atoms_c", "value", "max_residual", "error"],
    );
    for r in &res.candidates {
        c.push(vec![
            r.label.clone(),
            r.atoms_b.to_string(),
            r.atoms_c.to_string(),
            opt_num(r.value),
            opt_num(r.max_residual),
            r.error.clone().unwrap_or_default(),
        ]);
    }
    let model = ModelFile::from_parts(Some(res.extension.target()), Some(res.extension.extension()));
    Ok(Artifacts {
        tables: vec![t, c],
        files: vec![("extension.json".to_string(), model.to_json().into_bytes())],
        seeds: Vec::new(),
    })
}

fn simulation_block(exp: &Experiment) -> Outcome<&SimulationBlock> {
    exp.config
        .simulation
        .as_ref()
        .ok_or_else(|| Failure::parse("missing `simulation` block"))
}

/// Builds every cell's simulator up front so parameter errors surface before
/// any run starts.
fn simulators(exp: &Experiment) -> Outcome<Vec<(usize, f64, Simulator)>> {
    let block = simulation_block(exp)?;
    let v = exp.model()?.validated()?;
    block
        .cells()
        .into_iter()
        .map(|(n, r)| Ok((n, r, Simulator::new(&v, &block.spec(n, r, exp.seed()))?)))
        .collect()
}

const TRACE_COLUMNS: [&str; 17] = [
    "n",
    "rate",
    "trial",
    "source_typical",
    "ell",
    "ell_hat",
    "encoder_fallback",
    "decoder_fallback",
    "z_ell",
    "z_ell_hat",
    "charlie_index",
    "bob_charlie_match",
    "decoded_tv",
    "decoded_typical",
    "distance_to_target",
    "distance_to_tau",
    "engine",
];

fn push_traces(t: &mut Table, n: usize, rate: f64, run: &Simulation) {
    let engine = match run.engine_z {
        Some(z) => format!("{:?}/{:?}", run.engine_y, z).to_lowercase(),
        None => format!("{:?}", run.engine_y).to_lowercase(),
    };
    for tr in &run.traces {
        t.push(vec![
            n.to_string(),
            num(rate),
            tr.trial.to_string(),
            tr.source_typical.to_string(),
            num(tr.y.ell),
            num(tr.y.ell_hat),
            tr.y.encoder_fallback.to_string(),
            tr.y.decoder_fallback.to_string(),
            opt_num(tr.z.map(|z| z.ell)),
            opt_num(tr.z.map(|z| z.ell_hat)),
            opt_num(tr.charlie_index),
            tr.bob_charlie_match.to_string(),
            num(tr.decoded_tv),
            tr.decoded_typical.to_string(),
            num(tr.distance_to_target),
            num(tr.distance_to_tau),
            engine.clone(),
        ]);
    }
}

fn quantile_columns() -> Vec<String> {
    QUANTILES.iter().map(|q| format!("q{}", (q * 100.0).round())).collect()
}

fn simulate(exp: &Experiment, console: &Console) -> Outcome<Artifacts> {
    let sims = simulators(exp)?;
    let mut traces = Table::new("traces", &exp.hash, &TRACE_COLUMNS);
    let qcols = quantile_columns();
    let mut cols = vec!["n", "rate", "trials", "gamma", "median", "mean"];
    cols.extend(qcols.iter().map(String::as_str));
    cols.extend(["typical_decodes", "source_typical"]);
    let mut summary = Table::new("summary", &exp.hash, &cols);
    for (n, rate, sim) in &sims {
        let run = sim.run()?;
        let d = run.distances();
        console.say(format!(
            "n = {n}, R = {rate}: median distance {:.4}, mean {:.4} over {} trials",
            run.median_distance(),
            run.mean_distance(),
            d.len()
        ));
        push_traces(&mut traces, *n, *rate, &run);
        let count = |f: fn(&qcoord::protocol::SimulationTrace) -> bool| run.traces.iter().filter(|t| f(t)).count();
        let mut row = vec![
            n.to_string(),
            num(*rate),
            d.len().to_string(),
            num(run.gamma),
            num(run.median_distance()),
            num(run.mean_distance()),
        ];
        row.extend(QUANTILES.iter().map(|&q| num(quantile(&d, q))));
        row.push(count(|t| t.decoded_typical).to_string());
        row.push(count(|t| t.source_typical).to_string());
        summary.push(row);
    }
    Ok(Artifacts {
        tables: vec![summary, traces],
        files: Vec::new(),
        seeds: vec![exp.seed()],
    })
}

fn derandomize_cmd(exp: &Experiment, console: &Console) -> Outcome<Artifacts> {
    let block = exp
        .config
        .derandomize
        .as_ref()
        .ok_or_else(|| Failure::parse("missing `derandomize` block"))?;
    let sims = simulators(exp)?;
    let mut seeds_t = Table::new(
        "seeds",
        &exp.hash,
        &["n", "rate", "codebook_seed", "mean_distance", "selected"],
    );
    let qcols = quantile_columns();
    let mut cols = vec!["n", "rate", "selected_seed", "selected_distance", "mean"];
    cols.extend(qcols.iter().map(String::as_str));
    cols.extend(["epsilon", "below_epsilon", "codebook_fixed"]);
    let mut summary = Table::new("derandomize", &exp.hash, &cols);
    let mut all_seeds = vec![exp.seed()];
    for (n, rate, sim) in &sims {
        let rep = derandomize(sim, block.seeds, block.epsilon)?;
        console.say(format!(
            "n = {n}, R = {rate}: seed {} gives {:.4} (mean {:.4}, below {}: {})",
            rep.selected_seed, rep.selected_distance, rep.mean, rep.epsilon, rep.below_epsilon
        ));
        for (&s, &d) in rep.seeds.iter().zip(&rep.distances) {
            seeds_t.push(vec![
                n.to_string(),
                num(*rate),
                s.to_string(),
                num(d),
                (s == rep.selected_seed).to_string(),
            ]);
            if !all_seeds.contains(&s) {
                all_seeds.push(s);
            }
        }
        let mut row = vec![
            n.to_string(),
            num(*rate),
            rep.selected_seed.to_string(),
            num(rep.selected_distance),
            num(rep.mean),
        ];
        row.extend(rep.quantiles.iter().map(|&(_, v)| num(v)));
        row.extend([
            num(rep.epsilon),
            rep.below_epsilon.to_string(),
            rep.codebook_fixed.to_string(),
        ]);
        summary.push(row);
    }
    Ok(Artifacts {
        tables: vec![summary, seeds_t],
        files: Vec::new(),
        seeds: all_seeds,
    })
}

fn converse(exp: &Experiment, console: &Console) -> Outcome<Artifacts> {
    let slack = exp.config.converse.clone().unwrap_or_default().slack;
    let sims = simulators(exp)?;
    let mut checks = Table::new(
        "converse_checks",
        &exp.hash,
        &[
            "n",
            "rate",
            "trial",
            "epsilon",
            "alpha",
            "measured_r12",
            "margin_r12",
            "measured_r23",
            "margin_r23",
            "passed",
        ],
    );
    let mut summary = Table::new(
        "converse",
        &exp.hash,
        &["n", "rate", "rate12", "rate23", "slack", "checks", "violations"],
    );
    for (n, rate, sim) in &sims {
        let run = sim.run()?;
        let rep = converse_check(sim, &run, slack)?;
        console.say(format!(
            "n = {n}, R = {rate}: {} of {} codes violate the converse bound",
            rep.violations,
            rep.checks.len()
        ));
        for c in &rep.checks {
            checks.push(vec![
                n.to_string(),
                num(*rate),
                c.trial.to_string(),
                num(c.epsilon),
                num(c.alpha),
                num(c.measured_r12),
                num(c.margin_r12),
                opt_num(c.measured_r23),
                opt_num(c.margin_r23),
                c.passed.to_string(),
            ]);
        }
        summary.push(vec![
            n.to_string(),
            num(*rate),
            num(rep.rate12),
            opt_num(rep.rate23),
            num(rep.slack),
            rep.checks.len().to_string(),
            rep.violations.to_string(),
        ]);
    }
    Ok(Artifacts {
        tables: vec![summary, checks],
        files: Vec::new(),
        seeds: vec![exp.seed()],
    })
}

fn sweep(exp: &Experiment, console: &Console) -> Outcome<Artifacts> {
    let block = exp
        .config
        .sweep
        .as_ref()
        .ok_or_else(|| Failure::parse("missing `sweep` block"))?;
    if block.values.is_empty() {
        console.say("empty sweep grid; nothing to do");
        return Ok(Artifacts::default());
    }
    let table = match block.parameter {
        SweepParameter::P => {
            let mut t = Table::new("sweep", &exp.hash, &["p", "kind", "r12", "r23"]);
            for &p in &block.values {
                let model = exp.config.resolve_model(std::path::Path::new("."), Some(p))?;
                let v = model.validated()?;
                let (r12, r23) = rates(&v)?;
                console.say(format!("p = {p}: {}", describe_rates(v.kind(), r12, r23)));
                t.push(vec![num(p), kind_name(v.kind()), num(r12), opt_num(r23)]);
            }
            t
        }
        SweepParameter::Lambda => {
            let target = exp.model()?.target()?;
            let base = exp.config.optimize.clone().unwrap_or_default().options;
            let mut t = Table::new("sweep", &exp.hash, &["lambda", "value", "r12", "r23"]);
            for &lambda in &block.values {
                let opts = OptimizerOptions { lambda, ..base };
                let res = optimize(&target, NetworkKind::Cascade, &opts)?;
                console.say(format!(
                    "lambda = {lambda}: {}",
                    describe_rates(NetworkKind::Cascade, res.rate.r12, res.rate.r23)
                ));
                t.push(vec![
                    num(lambda),
                    num(res.value),
                    num(res.rate.r12),
                    opt_num(res.rate.r23),
                ]);
            }
            t
        }
    };
    Ok(Artifacts {
        tables: vec![table],
        ..Default::default()
    })
}
