// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::{Path, PathBuf};

use prefixsyn::dataio::config::check_width;
use prefixsyn::dataio::{
    emit_jsonl, emit_report, emit_verilog, FileConfig, PolicySpec, ProfileSpec, Style,
};
use prefixsyn::esat::BackboneExpr;
use prefixsyn::graph::{check_adder, parse_epr, render_epr, Coverage};
use prefixsyn::pipeline::{
    assemble_samples, extract_for_seed, saturated_space, sweep, sweep_targets, synthesize,
    DatagenConfig, SynthesisConfig,
};
use prefixsyn::policy::{GreedyPolicy, Policy, RemoteLlmPolicy, ScriptedPolicy};
use prefixsyn::timing::pareto_front;
use prefixsyn::{ArrivalProfile, DelayModel, Error, Result};
use rayon::prelude::*;

use crate::args::{DatagenArgs, EvalArgs, ExportArgs, RunArgs, SynthesizeArgs, VerifyArgs};

const DEFAULT_MAX_ITERS: usize = 64;

/// Flags merged over the config file.
struct Common {
    file: FileConfig,
    bits: usize,
    seed: u64,
    profile: ArrivalProfile,
    model: DelayModel,
    out: PathBuf,
}

fn load(run: &RunArgs) -> Result<Common> {
    let file = match &run.config {
        Some(path) => toml::from_str::<FileConfig>(&fs::read_to_string(path)?)
            .map_err(|e| Error::InvalidArgument(format!("config {}: {e}", path.display())))?,
        None => FileConfig::default(),
    };
    let bits = run
        .bits
        .or(file.bits)
        .ok_or_else(|| Error::InvalidArgument("--bits is required".into()))?;
    check_width(bits)?;
    let seed = run.seed.or(file.seed).unwrap_or(0);
    let model = file.model.or(run.model_overrides()).build()?;
    let spec = run
        .profile
        .clone()
        .or(file.profile.clone())
        .unwrap_or(ProfileSpec::Uniform);
    let profile = spec.resolve(bits, &model, seed)?;
    let out = run
        .out
        .clone()
        .or(file.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    Ok(Common {
        file,
        bits,
        seed,
        profile,
        model,
        out,
    })
}

fn make_policy(spec: &PolicySpec, file: &FileConfig) -> Result<Box<dyn Policy>> {
    Ok(match spec {
        PolicySpec::Greedy => Box::new(GreedyPolicy::default()),
        PolicySpec::Scripted(path) => Box::new(ScriptedPolicy::parse(&fs::read_to_string(path)?)?),
        PolicySpec::Remote => Box::new(RemoteLlmPolicy::new(
            file.remote.clone().unwrap_or_default(),
        )),
    })
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), text)?;
    Ok(())
}

pub fn synthesize_cmd(args: &SynthesizeArgs) -> Result<()> {
    let c = load(&args.run)?;
    let spec = args
        .policy
        .clone()
        .or(c.file.policy.clone())
        .unwrap_or(PolicySpec::Greedy);
    let mut policy = make_policy(&spec, &c.file)?;
    let config = SynthesisConfig {
        width: c.bits,
        profile: c.profile.clone(),
        model: c.model,
        target: args.target.or(c.file.target),
        max_iterations: args
            .max_iters
            .or(c.file.max_iters)
            .unwrap_or(DEFAULT_MAX_ITERS),
    };
    write(&c.out, "profile.txt", &c.profile.to_text())?;
    let out = match synthesize(&config, &mut policy) {
        Ok(out) => out,
        Err(Error::PolicyAbort { reason, trace }) => {
            write(&c.out, "trace.txt", &trace.to_text())?;
            write(&c.out, "trace.json", &serde_json::to_string_pretty(&trace)?)?;
            return Err(Error::PolicyAbort { reason, trace });
        }
        Err(e) => return Err(e),
    };
    write(
        &c.out,
        "backbone.txt",
        &format!("{}\n", BackboneExpr::from_backbone(&out.backbone)),
    )?;
    write(&c.out, "graph.epr", &render_epr(&out.graph))?;
    write(&c.out, "adder.v", &emit_verilog(&out.graph, Style::Plain)?)?;
    write(&c.out, "trace.txt", &out.trace_text())?;
    write(
        &c.out,
        "trace.json",
        &serde_json::to_string_pretty(&[&out.phase1, &out.phase2])?,
    )?;
    write(
        &c.out,
        "report.csv",
        &emit_report(std::slice::from_ref(&out.row))?,
    )?;
    println!(
        "{}-bit adder: backbone level {}, {} auxiliary nodes, {} phase 1 and {} phase 2 actions",
        c.bits,
        out.backbone.level(),
        out.auxiliary,
        out.phase1.len(),
        out.phase2.len()
    );
    println!(
        "target {:.4} ns, delay {:.4} ns, slack {:.4} ns, size {}, level {}",
        out.target, out.row.delay, out.row.slack, out.row.size, out.row.level
    );
    println!("artifacts written to {}", c.out.display());
    Ok(())
}

pub fn datagen_cmd(args: &DatagenArgs) -> Result<()> {
    let c = load(&args.run)?;
    let cfg = DatagenConfig {
        samples: args.samples.or(c.file.samples).unwrap_or(100),
        eps_scale: args.eps_scale.or(c.file.eps_scale).unwrap_or(1.0),
        threshold: args.threshold.or(c.file.threshold).unwrap_or(0),
        ..DatagenConfig::default()
    };
    let extracted = if cfg.samples == 0 {
        Vec::new()
    } else {
        let g = saturated_space(c.bits, cfg.limits)?;
        if let Some(r) = g.report().filter(|r| !r.saturated()) {
            eprintln!("warning: saturation stopped early ({:?})", r.stop);
        }
        // Seeds are offset by the run seed so distinct runs draw distinct noise.
        let base = c.seed.wrapping_mul(cfg.samples as u64);
        (0..cfg.samples as u64)
            .into_par_iter()
            .map(|i| {
                let seed = if i == 0 { 0 } else { base.wrapping_add(i) };
                extract_for_seed(&g, &c.profile, &c.model, seed, cfg.eps_scale)
            })
            .collect::<Result<Vec<_>>>()?
    };
    let out = assemble_samples(&extracted, &c.profile, &c.model, cfg.threshold)?;
    for d in &out.diagnostics {
        eprintln!("warning: {d}");
    }
    if out.kept == 0 && out.generated > 0 {
        eprintln!(
            "note: no backbone completes within {} levels of its own depth; raise --threshold to keep some",
            cfg.threshold
        );
    }
    write(&c.out, "samples.jsonl", &emit_jsonl(&out.samples)?)?;
    println!(
        "generated {} filtered {} kept {}",
        out.generated, out.filtered, out.kept
    );
    Ok(())
}

pub fn eval_cmd(args: &EvalArgs) -> Result<()> {
    let c = load(&args.run)?;
    let spec = args
        .policy
        .clone()
        .or(c.file.policy.clone())
        .unwrap_or(PolicySpec::Greedy);
    let targets = if args.target.is_empty() {
        sweep_targets(c.bits, &c.profile, &c.model, 6)?
    } else {
        args.target.clone()
    };
    let config = SynthesisConfig {
        width: c.bits,
        profile: c.profile.clone(),
        model: c.model,
        target: None,
        max_iterations: args
            .max_iters
            .or(c.file.max_iters)
            .unwrap_or(DEFAULT_MAX_ITERS),
    };
    // Each target gets a fresh policy; construction errors surface here first.
    make_policy(&spec, &c.file)?;
    let rows = sweep(&config, &targets, || {
        make_policy(&spec, &c.file).expect("policy was constructible a moment ago")
    })?;
    let report = emit_report(&rows)?;
    write(&c.out, "report.csv", &report)?;
    print!("{report}");
    println!(
        "pareto front: {} of {} designs",
        pareto_front(&rows).len(),
        rows.len()
    );
    Ok(())
}

pub fn export_cmd(args: &ExportArgs) -> Result<()> {
    let g = parse_epr(&fs::read_to_string(&args.graph)?)?;
    let text = emit_verilog(&g, args.style)?;
    match &args.out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

pub fn verify_cmd(args: &VerifyArgs) -> Result<bool> {
    let g = parse_epr(&fs::read_to_string(&args.graph)?)?;
    g.ensure_valid()?;
    g.ensure_complete()?;
    let report = check_adder(&g, Coverage::for_width(g.width(), args.seed))?;
    match &report.mismatch {
        None => {
            println!(
                "ok: {}-bit adder matches addition on {} vectors",
                g.width(),
                report.vectors
            );
            Ok(true)
        }
        Some(m) => {
            eprintln!(
                "mismatch after {} vectors: a={:?} b={:?} expected {:?}/{} got {:?}/{}",
                report.vectors, m.a, m.b, m.expected_sum, m.expected_cout, m.got_sum, m.got_cout
            );
            Ok(false)
        }
    }
}
