use std::collections::BTreeMap;

use serde::Serialize;

use super::spec::{walk_chain, ScenarioSpec};
use crate::finality::{hierarchy_finality, FinalityReport};
use crate::registry::RegistryEvent;
use crate::sim::measure::{measured_finality, model_layers, MeasuredFinality};
use crate::sim::Simulation;

#[derive(Debug, Clone, Serialize)]
pub struct ExpectationResult {
    pub expectation: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainSummary {
    pub id: String,
    pub height: u64,
    pub tip: Option<String>,
    pub live_pins: u64,
    pub contested_pins: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LeafFinality {
    pub chain: String,
    pub model: FinalityReport,
    pub measured: Option<MeasuredFinality>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub seed: u64,
    pub ticks: u64,
    pub passed: bool,
    pub expectations: Vec<ExpectationResult>,
    pub chains: Vec<ChainSummary>,
    pub event_counts: BTreeMap<String, u64>,
    /// Successful registry operations, by call (and action kind).
    pub operation_counts: BTreeMap<String, u64>,
    /// Rejected transactions, by error code.
    pub rejections: BTreeMap<String, u64>,
    pub finality: Vec<LeafFinality>,
}

/// Runs a scenario to completion and evaluates its expectations.
pub fn run_scenario(spec: &ScenarioSpec) -> Result<(Simulation, RunReport), crate::sim::ConfigError> {
    let mut sim = Simulation::new(spec.sim.clone())?;
    sim.run();
    let report = build_report(spec, &sim);
    Ok((sim, report))
}

pub fn build_report(spec: &ScenarioSpec, sim: &Simulation) -> RunReport {
    let expectations: Vec<ExpectationResult> = spec
        .expectations
        .iter()
        .map(|e| {
            let (passed, detail) = e.check(sim);
            ExpectationResult {
                expectation: e.label(),
                passed,
                detail,
            }
        })
        .collect();

    let mut event_counts = BTreeMap::new();
    let mut operation_counts = BTreeMap::new();
    let mut rejections = BTreeMap::new();
    for record in sim.log() {
        *event_counts.entry(record.event_type.clone()).or_insert(0) += 1;
        if record.event_type == "tx_rejected" {
            let code = record.payload_str("error").unwrap_or("unknown").to_string();
            *rejections.entry(code).or_insert(0) += 1;
        } else if let Ok(event) = RegistryEvent::from_record(record) {
            if let Some(label) = event.kind.operation_label() {
                *operation_counts.entry(label).or_insert(0) += 1;
            }
        }
    }

    let chains = sim
        .chains()
        .iter()
        .map(|c| {
            let walked = walk_chain(sim, &c.id);
            let contested = walked.iter().filter(|e| e.entry.contested).count() as u64;
            ChainSummary {
                id: c.id.clone(),
                height: c.honest.height(),
                tip: c.honest.tip().map(|h| h.hash.to_hex()),
                live_pins: walked.len() as u64 - contested,
                contested_pins: contested,
            }
        })
        .collect();

    let pinned_into: Vec<usize> = sim
        .chains()
        .iter()
        .filter_map(|c| c.pinning.as_ref().map(|p| p.management))
        .collect();
    let finality = sim
        .chains()
        .iter()
        .enumerate()
        .filter(|(idx, c)| c.pinning.is_some() && !pinned_into.contains(idx))
        .filter_map(|(idx, c)| {
            let model = hierarchy_finality(&model_layers(sim, idx)).ok()?;
            Some(LeafFinality {
                chain: c.id.clone(),
                model,
                measured: measured_finality(sim, idx),
            })
        })
        .collect();

    RunReport {
        scenario: spec.name.clone(),
        seed: spec.sim.seed,
        ticks: sim.tick(),
        passed: expectations.iter().all(|e| e.passed),
        expectations,
        chains,
        event_counts,
        operation_counts,
        rejections,
        finality,
    }
}

impl RunReport {
    pub fn to_text(&self) -> String {
        let mut out = format!("scenario {} (seed {}, {} ticks)\n", self.scenario, self.seed, self.ticks);
        out.push_str("\nchains:\n");
        for c in &self.chains {
            out.push_str(&format!(
                "  {:<12} height {:>6}  live pins {:>4}  contested {:>3}\n",
                c.id, c.height, c.live_pins, c.contested_pins
            ));
        }
        out.push_str("\noperations:\n");
        for (op, n) in &self.operation_counts {
            out.push_str(&format!("  {op:<40} {n:>6}\n"));
        }
        if !self.rejections.is_empty() {
            out.push_str("\nrejected transactions:\n");
            for (code, n) in &self.rejections {
                out.push_str(&format!("  {code:<40} {n:>6}\n"));
            }
        }
        out.push_str("\nevents:\n");
        for (ty, n) in &self.event_counts {
            out.push_str(&format!("  {ty:<40} {n:>6}\n"));
        }
        for f in &self.finality {
            out.push_str(&format!(
                "\nfinality of {}: model worst case {} s",
                f.chain, f.model.worst_case_seconds
            ));
            match &f.measured {
                Some(m) => out.push_str(&format!(
                    ", measured worst {} s / best {} s over {} blocks\n",
                    m.worst_case_seconds, m.best_case_seconds, m.samples
                )),
                None => out.push_str(", not reached within the run\n"),
            }
        }
        out.push_str("\nexpectations:\n");
        for e in &self.expectations {
            out.push_str(&format!(
                "  [{}] {}: {}\n",
                if e.passed { "pass" } else { "FAIL" },
                e.expectation,
                e.detail
            ));
        }
        out.push_str(if self.passed { "\nresult: pass\n" } else { "\nresult: FAIL\n" });
        out
    }
}
