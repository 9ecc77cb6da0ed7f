//! Run reports: JSON Lines, one record per line, schema-versioned.
//!
//! Record order is fixed: one `header`, one `step` per timestep, one
//! `inference` per schedule block, one `summary`. Field order within each
//! record is fixed too, so equal runs produce byte-identical reports.

use serde::{Deserialize, Serialize};

use crate::backend::RunOutcome;
use crate::cost::{CostConfig, MeanSd, StepCounters};
use crate::error::{Error, Result};

pub const REPORT_SCHEMA: &str = "spikecore.run-report";
pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "lowercase")]
pub enum Record {
    Header {
        schema: String,
        version: u32,
        backend: String,
        seed: u64,
        steps: usize,
        axons: usize,
        neurons: usize,
    },
    Step {
        step: usize,
        spikes: Vec<String>,
        #[serde(flatten)]
        counters: StepCounters,
    },
    Inference {
        index: usize,
        steps: usize,
        energy: f64,
        latency: f64,
    },
    Summary {
        #[serde(flatten)]
        totals: StepCounters,
        hbm_accesses: u64,
        total_cycles: u64,
        energy: f64,
        latency: f64,
        energy_per_inference: Option<MeanSd>,
        latency_per_inference: Option<MeanSd>,
        cost: CostConfig,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMeta {
    pub backend: String,
    pub seed: u64,
    pub axons: usize,
    pub neurons: usize,
}

pub fn run_records(meta: &RunMeta, outcome: &RunOutcome, block_lens: &[usize]) -> Vec<Record> {
    let r = &outcome.report;
    let mut out = vec![Record::Header {
        schema: REPORT_SCHEMA.to_string(),
        version: REPORT_VERSION,
        backend: meta.backend.clone(),
        seed: meta.seed,
        steps: outcome.trace.len(),
        axons: meta.axons,
        neurons: meta.neurons,
    }];
    for (step, (spikes, counters)) in outcome.trace.iter().zip(&r.per_step).enumerate() {
        out.push(Record::Step {
            step,
            spikes: spikes.clone(),
            counters: *counters,
        });
    }
    let mut at = 0;
    for (index, &len) in block_lens.iter().enumerate() {
        let block: StepCounters = r.per_step[at..at + len].iter().copied().sum();
        at += len;
        out.push(Record::Inference {
            index,
            steps: len,
            energy: r.config.energy(&block),
            latency: r.config.latency(&block),
        });
    }
    out.push(Record::Summary {
        totals: r.totals,
        hbm_accesses: r.totals.hbm_accesses(),
        total_cycles: r.total_cycles,
        energy: r.energy,
        latency: r.latency,
        energy_per_inference: r.per_inference_energy,
        latency_per_inference: r.per_inference_latency,
        cost: r.config,
    });
    out
}

pub fn to_jsonl(records: &[Record]) -> String {
    let mut s = String::new();
    for r in records {
        s.push_str(&serde_json::to_string(r).expect("records serialize"));
        s.push('\n');
    }
    s
}

pub fn parse_jsonl(text: &str) -> Result<Vec<Record>> {
    let records = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect::<Result<Vec<Record>>>()?;
    match records.first() {
        Some(Record::Header { schema, version, .. }) if schema == REPORT_SCHEMA && *version == REPORT_VERSION => {
            Ok(records)
        }
        _ => Err(Error::Parse("missing or unsupported report header".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::example_network;
    use crate::schedule::Schedule;
    use crate::Session;

    #[test]
    fn report_round_trip_and_totals() {
        let schedule = Schedule::from_steps([vec!["alpha", "beta"], vec!["alpha", "beta"], vec![]]);
        let mut s = Session::with_backend(example_network(), "engine", 5).unwrap();
        let out = s.run(&schedule, 3, CostConfig::default()).unwrap();
        let meta = RunMeta {
            backend: "engine".into(),
            seed: 5,
            axons: 2,
            neurons: 4,
        };
        let recs = run_records(&meta, &out, &schedule.block_lens(3));
        let text = to_jsonl(&recs);
        assert_eq!(parse_jsonl(&text).unwrap(), recs);
        let step_sum: StepCounters = recs
            .iter()
            .filter_map(|r| match r {
                Record::Step { counters, .. } => Some(*counters),
                _ => None,
            })
            .sum();
        let Some(Record::Summary { totals, .. }) = recs.last() else {
            panic!("no summary")
        };
        assert_eq!(*totals, step_sum);
        assert!(parse_jsonl("{\"record\":\"step\"}").is_err());
    }
}
