use anyhow::Context;
use sonotrace::io;
use sonotrace::metrics::{factors_from_samples, MetricsReport};

use crate::failure::{Classify, Failure};
use crate::MetricsArgs;

pub fn run(args: &MetricsArgs) -> Result<(), Failure> {
    let json = if let Some(path) = &args.band_trains {
        let trains = io::read_band_trains_csv(path)
            .with_context(|| format!("band trains {}", path.display()))
            .config()?;
        let report = MetricsReport::from_trains(&trains, args.sample_rate).runtime()?;
        report.to_json_string().runtime()?
    } else {
        let path = args.wav.as_ref().expect("clap requires one input");
        let (samples, rate) = io::read_wav(path)
            .with_context(|| format!("{}", path.display()))
            .config()?;
        let factors = factors_from_samples(&samples, rate).runtime()?;
        serde_json::to_string_pretty(&serde_json::json!({ "broadband": factors })).runtime()?
    };
    match &args.output {
        Some(path) => std::fs::write(path, json + "\n")
            .with_context(|| format!("cannot write {}", path.display()))
            .runtime(),
        None => {
            println!("{json}");
            Ok(())
        }
    }
}
