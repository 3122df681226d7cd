use anyhow::{anyhow, bail, Context};
use serde::Serialize;
use sonotrace::complexity::{run_bench, slope_over, BenchOptions, BenchRow};
use sonotrace::io;

use crate::failure::{Classify, Failure};
use crate::BenchArgs;

/// Accepts `10-18`, `10,12,14` or an empty string.
pub fn parse_sizes(spec: &str) -> anyhow::Result<Vec<u32>> {
    let spec = spec.trim();
    if spec.is_empty() {
        return Ok(vec![]);
    }
    if let Some((lo, hi)) = spec.split_once('-') {
        let lo: u32 = lo.trim().parse().context("range start")?;
        let hi: u32 = hi.trim().parse().context("range end")?;
        if lo > hi {
            bail!("empty range {spec}");
        }
        return Ok((lo..=hi).collect());
    }
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse::<u32>()
                .map_err(|_| anyhow!("bad size `{s}`"))
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct Summary {
    rows: Vec<BenchRow>,
    tree_slope_12_18: Option<f64>,
    brute_slope_10_14: Option<f64>,
    /// Brute-force over tree time per k.
    speedups: Vec<(u32, f64)>,
}

pub fn run(args: &BenchArgs) -> Result<(), Failure> {
    let sizes = parse_sizes(&args.sizes).context("--sizes").config()?;
    if let Some(k) = sizes.iter().find(|k| !(2..=30).contains(*k)) {
        return Err(Failure::config(anyhow!("--sizes: k = {k} outside 2..=30")));
    }
    let options = BenchOptions {
        brute_max_k: args.brute_max_k,
        brute_sample: args.brute_sample,
        min_time_s: args.min_time,
        ..Default::default()
    };
    let rows = run_bench(&sizes, &options).runtime()?;

    match &args.output {
        Some(path) => io::write_bench_csv(path, &rows).runtime()?,
        None => {
            let mut w = csv::Writer::from_writer(std::io::stdout());
            io::write_bench_rows(&mut w, &rows).runtime()?;
            w.flush().context("stdout").runtime()?;
        }
    }
    let summary = Summary {
        tree_slope_12_18: slope_over(&rows, 12, 18, |r| Some(r.t_tree_s)),
        brute_slope_10_14: slope_over(&rows, 10, 14, |r| r.t_brute_s),
        speedups: rows
            .iter()
            .filter_map(|r| r.t_brute_s.map(|b| (r.k, b / r.t_tree_s)))
            .collect(),
        rows,
    };
    let fmt = |s: Option<f64>| s.map_or_else(|| "n/a".into(), |v| format!("{v:.3}"));
    eprintln!(
        "log-log slope: tree (k 12..18) {}, brute force (k 10..14) {}",
        fmt(summary.tree_slope_12_18),
        fmt(summary.brute_slope_10_14)
    );
    if let Some(path) = &args.summary {
        io::write_json(path, &summary).runtime()?;
    }
    Ok(())
}
