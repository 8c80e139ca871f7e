//! Posterior summaries written as CSV files.

use std::collections::BTreeMap;
use std::path::Path;

use bloc_core::analysis::{
    bloc_ordering, bloc_proportions, bloc_support, clr_distance_export, cooccupancy, fit_from_columns, js_matrix,
    k_medoids, polarization_series, predicted_column, Matrix, SupportWeighting,
};
use bloc_core::bdmcmc::posterior_mode;
use bloc_core::random::stream_rng;
use bloc_core::{posterior_k, PosteriorSample, VoteTable};

use crate::error::{CliError, CliResult};
use crate::parallel::map_indexed;

/// Settings of the summary stage.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOptions {
    pub k_star: Option<usize>,
    pub draws: usize,
    pub pseudocount: f64,
    pub seed: u64,
    pub min_bloc_size: usize,
    /// 1-based display labels.
    pub pairs: Option<Vec<(usize, usize)>>,
    pub weighting: SupportWeighting,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisSummary {
    pub k_star: usize,
    pub flagged: Vec<String>,
}

/// Parses `1-2,2-3` into label pairs.
pub fn parse_pairs(spec: &str) -> CliResult<Vec<(usize, usize)>> {
    spec.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            let (a, b) = p
                .split_once('-')
                .ok_or_else(|| CliError::Usage(format!("bloc pair `{p}` is not of the form a-b")))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| CliError::Usage(format!("bloc pair `{p}` has a non-numeric label")))
            };
            Ok((parse(a)?, parse(b)?))
        })
        .collect()
}

pub(crate) fn write_csv<F>(path: &Path, header: &[String], rows: F) -> CliResult<()>
where
    F: FnOnce(&mut csv::Writer<std::fs::File>) -> csv::Result<()>,
{
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))?;
    w.write_record(header).map_err(|e| CliError::io(path, e))?;
    rows(&mut w).map_err(|e| CliError::io(path, e))?;
    w.flush().map_err(|e| CliError::io(path, e))
}

fn strings<const N: usize>(items: [&str; N]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

/// Square matrix with municipality ids labelling rows and columns, in `order`.
fn write_matrix(path: &Path, m: &Matrix, ids: &[String], order: &[usize]) -> CliResult<()> {
    let permuted = m.permuted(order)?;
    let mut header = vec!["municipality_id".to_string()];
    header.extend(order.iter().map(|&i| ids[i].clone()));
    write_csv(path, &header, |w| {
        for (r, &i) in order.iter().enumerate() {
            let mut rec = vec![ids[i].clone()];
            rec.extend(permuted.row(r).iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        Ok(())
    })
}

/// Wait-weighted posterior over the filtered number of blocs.
pub fn write_posterior_k(path: &Path, dist: &BTreeMap<usize, f64>) -> CliResult<()> {
    write_csv(path, &strings(["k", "probability"]), |w| {
        for (k, p) in dist {
            w.write_record([k.to_string(), p.to_string()])?;
        }
        Ok(())
    })
}

/// Computes and writes every summary product into `dir`.
pub fn run_analysis(
    data: &VoteTable,
    samples: &[PosteriorSample],
    opts: &AnalysisOptions,
    dir: &Path,
) -> CliResult<AnalysisSummary> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let n = data.n_municipalities();
    let nq = data.n_questions();
    let ids: Vec<String> = data.municipalities().iter().map(|m| m.id.clone()).collect();
    let qids: Vec<String> = data.questions().iter().map(|q| q.id.clone()).collect();

    let cooc = cooccupancy(samples)?;
    let k_star = match opts.k_star {
        Some(k) => k,
        None => posterior_mode(&posterior_k(samples, opts.min_bloc_size)?).unwrap_or(1),
    };
    if k_star == 0 || k_star > n {
        return Err(CliError::Usage(format!("k-star must lie in 1..={n}, got {k_star}")));
    }
    let mut clustering = k_medoids(&cooc.complement(), k_star, opts.seed)?;
    let proportions = bloc_proportions(&cooc, &clustering)?;
    clustering.bloc_order = bloc_ordering(&proportions, data.municipalities());
    let order = &clustering.bloc_order;
    let mut rank = vec![0; k_star];
    for (r, &b) in order.iter().enumerate() {
        rank[b] = r;
    }
    let mut m_order: Vec<usize> = (0..n).collect();
    m_order.sort_by_key(|&i| (rank[clustering.labels[i]], i));

    write_matrix(&dir.join("cooccupancy.csv"), &cooc, &ids, &m_order)?;

    let mut header = strings(["municipality_id", "municipality_name", "label", "medoid"]);
    header.extend((1..=k_star).map(|b| format!("bloc_{b}")));
    write_csv(&dir.join("clustering.csv"), &header, |w| {
        for &i in &m_order {
            let m = &data.municipalities()[i];
            let mut rec = vec![
                m.id.clone(),
                m.name.clone(),
                (rank[clustering.labels[i]] + 1).to_string(),
                clustering.medoids.contains(&i).to_string(),
            ];
            rec.extend(order.iter().map(|&b| proportions.get(i, b).to_string()));
            w.write_record(&rec)?;
        }
        Ok(())
    })?;

    let columns = map_indexed(nq, opts.threads, |q| {
        let mut rng = stream_rng(opts.seed, q as u64);
        predicted_column(data, samples, q, opts.draws, &mut rng)
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let fit = fit_from_columns(data, &columns)?;
    write_csv(
        &dir.join("question_fit.csv"),
        &strings(["municipality_id", "question_id", "observed", "predicted", "fit"]),
        |w| {
            for i in 0..n {
                for q in 0..nq {
                    w.write_record([
                        ids[i].clone(),
                        qids[q].clone(),
                        data.cell(i, q).proportion_yes().to_string(),
                        fit.predicted(i, q).to_string(),
                        fit.fit(i, q).to_string(),
                    ])?;
                }
            }
            Ok(())
        },
    )?;
    write_csv(
        &dir.join("question_summary.csv"),
        &strings(["question_id", "year", "median_fit", "sd_fit", "flagged"]),
        |w| {
            for q in 0..nq {
                w.write_record([
                    qids[q].clone(),
                    data.questions()[q].year.to_string(),
                    fit.median[q].to_string(),
                    fit.sd[q].to_string(),
                    fit.flagged.contains(&q).to_string(),
                ])?;
            }
            Ok(())
        },
    )?;

    let js_dir = dir.join("js");
    std::fs::create_dir_all(&js_dir).map_err(|e| CliError::io(&js_dir, e))?;
    let js = map_indexed(nq, opts.threads, |q| js_matrix(data, q));
    for (q, m) in js.into_iter().enumerate() {
        let file = format!("js_{}.csv", sanitize(&qids[q]));
        write_matrix(&js_dir.join(file), &m?, &ids, &m_order)?;
    }

    let identity: Vec<usize> = (0..n).collect();
    let clr = clr_distance_export(data, opts.pseudocount).map_err(CliError::usage)?;
    write_matrix(&dir.join("clr_distance.csv"), &clr, &ids, &identity)?;

    let display_pairs = match &opts.pairs {
        Some(p) => p.clone(),
        None => (1..=k_star)
            .flat_map(|a| (a + 1..=k_star).map(move |b| (a, b)))
            .collect(),
    };
    let mut pairs = Vec::with_capacity(display_pairs.len());
    for &(a, b) in &display_pairs {
        if a == 0 || b == 0 || a > k_star || b > k_star {
            return Err(CliError::Usage(format!("bloc pair {a}-{b} is outside 1..={k_star}")));
        }
        pairs.push((order[a - 1], order[b - 1]));
    }
    let series = polarization_series(data, &clustering.labels, k_star, &pairs, opts.weighting)?;
    write_csv(
        &dir.join("polarization.csv"),
        &strings(["year", "pair", "mean", "sd", "questions"]),
        |w| {
            for r in &series {
                w.write_record([
                    r.year.to_string(),
                    format!("{}-{}", rank[r.pair.0] + 1, rank[r.pair.1] + 1),
                    r.mean.to_string(),
                    r.sd.to_string(),
                    r.questions.to_string(),
                ])?;
            }
            Ok(())
        },
    )?;

    let support = bloc_support(samples, &clustering.labels, k_star, nq)?;
    write_csv(&dir.join("bloc_support.csv"), &strings(["bloc", "question_id", "support"]), |w| {
        for (r, &b) in order.iter().enumerate() {
            for q in 0..nq {
                w.write_record([(r + 1).to_string(), qids[q].clone(), support.get(b, q).to_string()])?;
            }
        }
        Ok(())
    })?;

    Ok(AnalysisSummary {
        k_star,
        flagged: fit.flagged.iter().map(|&q| qids[q].clone()).collect(),
    })
}

/// Question ids made safe for file names.
pub fn sanitize(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}
