//! Command implementations.

use std::path::Path;
use std::str::FromStr;

use bloc_core::analysis::SupportWeighting;
use bloc_core::diagnostics::{batch_means_se, gelman_rubin};
use bloc_core::random::stream_rng;
use bloc_core::simulation::{recovery_replicate, summarize, RecoverySettings, ReplicateReport};
use bloc_core::{
    posterior_k, run_chain, simulate_dataset, ChainOutput, Hyperparams, RunConfig, SamplerSchedule, SimSpec,
    SweepConfig, VoteTable,
};

use crate::cli::{AnalyzeArgs, ChainArgs, Cli, Command, InferArgs, PriorArgs, RecoverArgs, SimulateArgs, SummaryArgs};
use crate::error::{CliError, CliResult};
use crate::ingest::{ingest, write_table, ColumnMap};
use crate::manifest::{fingerprint, Manifest};
use crate::parallel::{map_indexed, thread_limit};
use crate::products::{parse_pairs, run_analysis, write_csv, write_posterior_k, AnalysisOptions};
use crate::samples::{chain_file, load_dir, write_samples};

pub const FAILURE_MARKER: &str = "FAILED";

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Infer(a) => infer(&a),
        Command::Analyze(a) => analyze(&a),
        Command::Simulate(a) => simulate(&a),
        Command::Recover(a) => recover(&a),
    }
}

fn hyperparams(p: &PriorArgs) -> CliResult<Hyperparams> {
    let h = Hyperparams {
        kappa: p.kappa,
        theta: p.theta,
        lambda: p.lambda,
        gamma: p.gamma,
        beta_birth: p.beta_birth.unwrap_or(p.lambda),
        k_max: p.k_max,
    };
    h.validate().map_err(CliError::usage)?;
    Ok(h)
}

fn chain_configs(c: &ChainArgs) -> CliResult<(SweepConfig, RunConfig)> {
    let schedule = SamplerSchedule::from_str(&c.schedule).map_err(CliError::usage)?;
    let sweep = SweepConfig {
        schedule,
        ..SweepConfig::default()
    };
    sweep.validate().map_err(CliError::usage)?;
    let run = RunConfig {
        iterations: c.iterations,
        burn_in: c.burn_in,
        thin: c.thin,
        bd_time: c.bd_time,
        seed: c.seed,
        chains: c.chains,
        initial_k: c.initial_k,
    };
    run.validate().map_err(CliError::usage)?;
    Ok((sweep, run))
}

fn record_settings(m: &mut Manifest, h: &Hyperparams, sweep: &SweepConfig, run: &RunConfig) {
    m.set("kappa", h.kappa);
    m.set("theta", h.theta);
    m.set("lambda", h.lambda);
    m.set("gamma", h.gamma);
    m.set("beta_birth", h.beta_birth);
    m.set("k_max", h.k_max);
    m.set("schedule", sweep.schedule.as_str());
    m.set("alpha_total_proposal", format!("{}:{}", sweep.alpha_total_proposal.0, sweep.alpha_total_proposal.1));
    m.set(
        "alpha_component_proposal",
        format!("{}:{}", sweep.alpha_component_proposal.0, sweep.alpha_component_proposal.1),
    );
    m.set("iterations", run.iterations);
    m.set("burn_in", run.burn_in);
    m.set("thin", run.thin);
    m.set("bd_time", run.bd_time);
    m.set("seed", run.seed);
    m.set("chains", run.chains);
    m.set("initial_k", run.initial_k.map_or("auto".to_string(), |k| k.to_string()));
}

fn analysis_options(s: &SummaryArgs, seed: u64, min_bloc_size: usize) -> CliResult<AnalysisOptions> {
    if s.draws == 0 {
        return Err(CliError::Usage("--draws must be at least 1".into()));
    }
    if !(s.pseudocount > 0.0 && s.pseudocount.is_finite()) {
        return Err(CliError::Usage("--pseudocount must be positive".into()));
    }
    if s.k_star == Some(0) {
        return Err(CliError::Usage("--k-star must be at least 1".into()));
    }
    Ok(AnalysisOptions {
        k_star: s.k_star,
        draws: s.draws,
        pseudocount: s.pseudocount,
        seed,
        min_bloc_size,
        pairs: s.pairs.as_deref().map(parse_pairs).transpose()?,
        weighting: if s.mean_of_proportions {
            SupportWeighting::MeanOfProportions
        } else {
            SupportWeighting::VoteWeighted
        },
        threads: thread_limit(),
    })
}

fn record_analysis(m: &mut Manifest, o: &AnalysisOptions) {
    m.set("k_star", o.k_star.map_or("mode".to_string(), |k| k.to_string()));
    m.set("draws", o.draws);
    m.set("pseudocount", o.pseudocount);
    m.set("analysis_seed", o.seed);
    m.set("min_bloc_size", o.min_bloc_size);
    m.set(
        "weighting",
        match o.weighting {
            SupportWeighting::VoteWeighted => "vote_weighted",
            SupportWeighting::MeanOfProportions => "mean_of_proportions",
        },
    );
}

fn column_map(spec: &Option<String>) -> CliResult<ColumnMap> {
    spec.as_deref().map_or_else(|| Ok(ColumnMap::default()), ColumnMap::parse)
}

fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Runs `body`, leaving a failure marker in `dir` if it fails.
fn with_marker<T>(dir: &Path, body: impl FnOnce() -> CliResult<T>) -> CliResult<T> {
    let _ = std::fs::remove_file(dir.join(FAILURE_MARKER));
    body().inspect_err(|e| {
        let _ = std::fs::write(dir.join(FAILURE_MARKER), format!("{e}\n"));
    })
}

fn infer(a: &InferArgs) -> CliResult<()> {
    let hyper = hyperparams(&a.prior)?;
    let (sweep, run) = chain_configs(&a.chain)?;
    let opts = analysis_options(&a.summary, run.seed, a.min_bloc_size)?;
    let map = column_map(&a.columns)?;
    let (data, _) = ingest(&a.data, &map)?;
    let digest = fingerprint(&a.data)?;
    create_dir(&a.out)?;
    let mut manifest = Manifest::new("infer");
    manifest.set("input", a.data.display());
    manifest.set("output", a.out.display());
    manifest.set("data_sha256", &digest);
    manifest.set("municipalities", data.n_municipalities());
    manifest.set("questions", data.n_questions());
    record_settings(&mut manifest, &hyper, &sweep, &run);
    record_analysis(&mut manifest, &opts);
    manifest.write(&a.out)?;
    with_marker(&a.out, || {
        let outputs = run_chains(&data, &hyper, &sweep, &run)?;
        write_chain_outputs(&a.out, &outputs, &hyper, a.min_bloc_size)?;
        let samples: Vec<_> = outputs.iter().flat_map(|o| o.samples.iter().cloned()).collect();
        let analysis_dir = a.out.join("analysis");
        let summary = run_analysis(&data, &samples, &opts, &analysis_dir)?;
        log::info!(
            "representative clustering uses {} blocs; flagged questions: [{}]",
            summary.k_star,
            summary.flagged.join(", ")
        );
        Ok(())
    })
}

fn run_chains(data: &VoteTable, hyper: &Hyperparams, sweep: &SweepConfig, run: &RunConfig) -> CliResult<Vec<ChainOutput>> {
    map_indexed(run.chains, thread_limit(), |c| {
        log::info!("chain {c}: starting {} iterations", run.iterations);
        let mut rng = stream_rng(run.seed, c as u64);
        let out = run_chain(data, hyper, sweep, run, &mut rng);
        log::info!("chain {c}: finished");
        out
    })
    .into_iter()
    .map(|r| r.map_err(|e| CliError::Runtime(e.to_string())))
    .collect()
}

fn write_chain_outputs(dir: &Path, outputs: &[ChainOutput], hyper: &Hyperparams, min_bloc_size: usize) -> CliResult<()> {
    for (c, out) in outputs.iter().enumerate() {
        let path = chain_file(dir, c);
        let file = std::fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
        write_samples(c, &out.samples, std::io::BufWriter::new(file)).map_err(|e| CliError::io(&path, e))?;
    }
    let samples: Vec<_> = outputs.iter().flat_map(|o| o.samples.iter().cloned()).collect();
    write_posterior_k(&dir.join("posterior_k.csv"), &posterior_k(&samples, min_bloc_size)?)?;

    let mut occupancy = vec![0.0; hyper.k_max + 1];
    for out in outputs {
        for (k, t) in out.k_occupancy.iter().enumerate() {
            occupancy[k] += t;
        }
    }
    let total: f64 = occupancy.iter().sum();
    write_csv(
        &dir.join("k_occupancy.csv"),
        &["k".into(), "time".into(), "probability".into()],
        |w| {
            for (k, t) in occupancy.iter().enumerate().filter(|(_, t)| **t > 0.0) {
                w.write_record([k.to_string(), t.to_string(), (t / total).to_string()])?;
            }
            Ok(())
        },
    )?;

    let traces: Vec<Vec<f64>> = outputs
        .iter()
        .map(|o| o.k_trace.iter().map(|&k| k as f64).collect())
        .collect();
    write_csv(
        &dir.join("chain_diagnostics.csv"),
        &[
            "chain", "births", "deaths", "rejected_births", "capped_waits", "mean_k", "mean_k_se", "mean_log_likelihood",
        ]
        .map(String::from),
        |w| {
            for (c, o) in outputs.iter().enumerate() {
                let ks: Vec<f64> = o.samples.iter().map(|s| s.state.k as f64).collect();
                let ll = &o.log_likelihood[o.log_likelihood.len() - ks.len().max(1).min(o.log_likelihood.len())..];
                w.write_record([
                    c.to_string(),
                    o.births.to_string(),
                    o.deaths.to_string(),
                    o.rejected_births.to_string(),
                    o.capped_waits.to_string(),
                    bloc_core::math::mean(&ks).to_string(),
                    batch_means_se(&ks).map_or(String::new(), |v| v.to_string()),
                    bloc_core::math::mean(ll).to_string(),
                ])?;
            }
            Ok(())
        },
    )?;
    if outputs.len() >= 2 {
        let lls: Vec<&[f64]> = outputs.iter().map(|o| o.log_likelihood.as_slice()).collect();
        let ks: Vec<&[f64]> = traces.iter().map(|t| t.as_slice()).collect();
        write_csv(&dir.join("convergence.csv"), &["statistic".into(), "value".into()], |w| {
            for (name, set) in [("rhat_k", &ks), ("rhat_log_likelihood", &lls)] {
                if let Ok(v) = gelman_rubin(set) {
                    w.write_record([name.to_string(), v.to_string()])?;
                }
            }
            Ok(())
        })?;
    }
    Ok(())
}

fn analyze(a: &AnalyzeArgs) -> CliResult<()> {
    let stored = Manifest::read(&a.samples)?;
    let expected = stored
        .get("data_sha256")
        .ok_or_else(|| CliError::Data("stored manifest has no data fingerprint".into()))?;
    let actual = fingerprint(&a.data)?;
    if actual != expected {
        return Err(CliError::Data(format!(
            "{} does not match the data the samples were drawn from (fingerprint {actual}, expected {expected})",
            a.data.display()
        )));
    }
    let parse_stored = |key: &str| -> CliResult<u64> {
        stored
            .get(key)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| CliError::Data(format!("stored manifest lacks a numeric `{key}`")))
    };
    let seed = match a.seed {
        Some(s) => s,
        None => parse_stored("seed")?,
    };
    let min_bloc_size = match a.min_bloc_size {
        Some(m) => m,
        None => parse_stored("min_bloc_size")? as usize,
    };
    let opts = analysis_options(&a.summary, seed, min_bloc_size)?;
    let (data, _) = ingest(&a.data, &column_map(&a.columns)?)?;
    let samples = load_dir(&a.samples, data.n_municipalities(), data.n_questions())?;
    let out = a.out.clone().unwrap_or_else(|| a.samples.join("analysis"));
    create_dir(&out)?;
    with_marker(&out, || {
        let summary = run_analysis(&data, &samples, &opts, &out)?;
        log::info!("representative clustering uses {} blocs", summary.k_star);
        Ok(())
    })
}

fn simulate(a: &SimulateArgs) -> CliResult<()> {
    let spec = SimSpec {
        k_true: a.k,
        n: a.n,
        q: a.q,
        c: a.c,
        delta: a.delta,
        alpha_gen: (a.alpha_shape, a.alpha_scale),
        seed: a.seed,
    };
    spec.validate().map_err(CliError::usage)?;
    let (table, truth) = simulate_dataset(&spec, &mut spec.rng()).map_err(|e| CliError::Runtime(e.to_string()))?;
    create_dir(&a.out)?;
    let data_path = a.out.join("data.csv");
    let file = std::fs::File::create(&data_path).map_err(|e| CliError::io(&data_path, e))?;
    write_table(&table, std::io::BufWriter::new(file)).map_err(|e| CliError::io(&data_path, e))?;
    let ids: Vec<&str> = table.municipalities().iter().map(|m| m.id.as_str()).collect();
    let mut header = vec!["municipality_id".to_string()];
    header.extend((1..=spec.k_true).map(|b| format!("bloc_{b}")));
    write_csv(&a.out.join("truth_lambda.csv"), &header, |w| {
        for (i, id) in ids.iter().enumerate() {
            let mut rec = vec![id.to_string()];
            rec.extend(truth.lambda_row(i).iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        Ok(())
    })?;
    write_csv(
        &a.out.join("truth_alpha.csv"),
        &["bloc", "question_id", "alpha_yes", "alpha_no"].map(String::from),
        |w| {
            for b in 0..spec.k_true {
                for (q, question) in table.questions().iter().enumerate() {
                    let al = truth.alpha[b * spec.q + q];
                    w.write_record([(b + 1).to_string(), question.id.clone(), al[0].to_string(), al[1].to_string()])?;
                }
            }
            Ok(())
        },
    )?;
    let mut m = Manifest::new("simulate");
    m.set("output", a.out.display());
    m.set("k", spec.k_true);
    m.set("n", spec.n);
    m.set("q", spec.q);
    m.set("c", spec.c);
    m.set("delta", spec.delta);
    m.set("alpha_shape", spec.alpha_gen.0);
    m.set("alpha_scale", spec.alpha_gen.1);
    m.set("seed", spec.seed);
    m.set("data_sha256", fingerprint(&data_path)?);
    m.write(&a.out)
}

/// Reads a recovery grid; each row becomes one [`SimSpec`].
pub fn read_grid(path: &Path, default_seed: u64) -> CliResult<Vec<SimSpec>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let headers = rdr.headers().map_err(|e| CliError::Usage(e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let required = ["k", "n", "q", "c", "delta"];
    let idx: Vec<usize> = required
        .iter()
        .map(|n| col(n).ok_or_else(|| CliError::Usage(format!("grid lacks column `{n}`"))))
        .collect::<CliResult<_>>()?;
    let (shape, scale, seed) = (col("alpha_shape"), col("alpha_scale"), col("seed"));
    let mut cells = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::Usage(format!("grid: {e}")))?;
        let line = rec.position().map_or(0, |p| p.line());
        let get = |i: usize| -> CliResult<f64> {
            rec.get(i)
                .and_then(|v| v.trim().parse::<f64>().ok())
                .ok_or_else(|| CliError::Usage(format!("grid row {line}: bad value in column {}", headers.get(i).unwrap_or("?"))))
        };
        let opt = |i: Option<usize>, d: f64| -> CliResult<f64> {
            match i {
                Some(i) if rec.get(i).is_some_and(|v| !v.trim().is_empty()) => get(i),
                _ => Ok(d),
            }
        };
        let whole = |x: f64| -> CliResult<u64> {
            if x >= 0.0 && x.fract() == 0.0 {
                Ok(x as u64)
            } else {
                Err(CliError::Usage(format!("grid row {line}: {x} is not a whole number")))
            }
        };
        let spec = SimSpec {
            k_true: whole(get(idx[0])?)? as usize,
            n: whole(get(idx[1])?)? as usize,
            q: whole(get(idx[2])?)? as usize,
            c: u32::try_from(whole(get(idx[3])?)?).map_err(|_| CliError::Usage(format!("grid row {line}: c too large")))?,
            delta: get(idx[4])?,
            alpha_gen: (opt(shape, 1.0)?, opt(scale, 20.0)?),
            seed: whole(opt(seed, default_seed as f64)?)?,
        };
        spec.validate()
            .map_err(|e| CliError::Usage(format!("grid row {line}: {e}")))?;
        cells.push(spec);
    }
    if cells.is_empty() {
        return Err(CliError::Usage("grid has no rows".into()));
    }
    Ok(cells)
}

fn recover(a: &RecoverArgs) -> CliResult<()> {
    if a.replicates == 0 {
        return Err(CliError::Usage("--replicates must be at least 1".into()));
    }
    let hyper = hyperparams(&a.prior)?;
    let (sweep, run) = chain_configs(&a.chain)?;
    let cells = read_grid(&a.grid, run.seed)?;
    create_dir(&a.out)?;
    let mut m = Manifest::new("recover");
    m.set("grid", a.grid.display());
    m.set("grid_sha256", fingerprint(&a.grid)?);
    m.set("output", a.out.display());
    m.set("replicates", a.replicates);
    m.set("min_bloc_size", a.min_bloc_size);
    record_settings(&mut m, &hyper, &sweep, &run);
    m.write(&a.out)?;
    let settings = RecoverySettings {
        hyper,
        sweep,
        run,
        min_bloc_size: a.min_bloc_size,
    };
    with_marker(&a.out, || {
        let jobs: Vec<(usize, usize)> = (0..cells.len())
            .flat_map(|c| (0..a.replicates).map(move |r| (c, r)))
            .collect();
        let reports: Vec<ReplicateReport> = map_indexed(jobs.len(), thread_limit(), |j| {
            let (c, r) = jobs[j];
            log::info!("cell {c} replicate {r}");
            recovery_replicate(&cells[c], c, r, &settings)
        })
        .into_iter()
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
        write_recovery(&a.out, &reports)
    })
}

fn spec_fields(s: &SimSpec) -> [String; 7] {
    [
        s.k_true.to_string(),
        s.n.to_string(),
        s.q.to_string(),
        s.c.to_string(),
        s.delta.to_string(),
        s.alpha_gen.0.to_string(),
        s.alpha_gen.1.to_string(),
    ]
}

const SPEC_COLUMNS: [&str; 7] = ["k_true", "n", "q", "c", "delta", "alpha_shape", "alpha_scale"];

fn write_recovery(dir: &Path, reports: &[ReplicateReport]) -> CliResult<()> {
    let mut header = vec!["cell".to_string(), "replicate".to_string()];
    header.extend(SPEC_COLUMNS.map(String::from));
    header.extend(["mode", "mass_at_truth", "mode_match", "posterior"].map(String::from));
    write_csv(&dir.join("recovery.csv"), &header, |w| {
        for r in reports {
            let mut rec = vec![r.cell.to_string(), r.replicate.to_string()];
            rec.extend(spec_fields(&r.spec));
            let posterior: Vec<String> = r.posterior.iter().map(|(k, p)| format!("{k}:{p}")).collect();
            rec.extend([
                r.mode.to_string(),
                r.mass_at_truth.to_string(),
                r.mode_matches().to_string(),
                posterior.join(";"),
            ]);
            w.write_record(&rec)?;
        }
        Ok(())
    })?;
    let mut header = vec!["cell".to_string()];
    header.extend(SPEC_COLUMNS.map(String::from));
    header.extend(["replicates", "mode_matches", "match_rate", "mean_mass_at_truth"].map(String::from));
    write_csv(&dir.join("recovery_summary.csv"), &header, |w| {
        for s in summarize(reports) {
            let mut rec = vec![s.cell.to_string()];
            rec.extend(spec_fields(&s.spec));
            rec.extend([
                s.replicates.to_string(),
                s.mode_matches.to_string(),
                s.match_rate().to_string(),
                s.mean_mass_at_truth.to_string(),
            ]);
            w.write_record(&rec)?;
        }
        Ok(())
    })
}
