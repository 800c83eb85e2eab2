// Copyright 2026 The ACiS Simulator Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Latency sweeps over (collective, nodes, size) cells.

use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use acis_core::wire::CollectiveKind;
use acis_core::{DType, ReduceOp};
use acis_dataplane::{run_acis, AcisOptions};
use acis_hostmpi::{run_host, CollectiveCall, Communicator};
use acis_simnet::{Network, SimOptions, Time, Trace, TraceLevel};

use crate::config::{auto_topology, BenchConfig};
use crate::csvio::round_sig4;
use crate::HarnessError;

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub collective: String,
    pub nodes: u32,
    pub size_bytes: u64,
    /// All-finish latency in picoseconds, averaged over repetitions.
    pub host_latency: Option<Time>,
    pub acis_latency: Option<Time>,
    /// `host_latency / acis_latency` to 4 significant digits.
    pub speedup: Option<f64>,
    pub traffic_host_bytes: Option<u64>,
    pub traffic_acis_bytes: Option<u64>,
    /// Mean-over-ranks completion, averaged over repetitions.
    pub host_mean_latency: Option<Time>,
    pub acis_mean_latency: Option<Time>,
}

/// Speedup of `host` over `acis`; two zero latencies count as 1.
pub fn speedup(host: Time, acis: Time) -> Option<f64> {
    match (host, acis) {
        (0, 0) => Some(1.0),
        (_, 0) => None,
        (h, a) => Some(round_sig4(h as f64 / a as f64)),
    }
}

struct Sample {
    latency: Time,
    mean: Time,
    bytes: u64,
}

fn sample(trace: &Trace) -> Sample {
    Sample {
        latency: trace.max_completion().unwrap_or(0),
        mean: trace.mean_completion().unwrap_or(0),
        bytes: trace.link_bytes.iter().sum(),
    }
}

fn dump(dir: &Path, name: &str, trace: &Trace) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir)?;
    let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join(name))?);
    writeln!(f, "time_ps,event,vertex,comm,seq,link_bytes")?;
    for e in &trace.events {
        writeln!(
            f,
            "{},{},{},{},{},{}",
            e.time,
            e.kind.name(),
            e.vertex,
            e.packet_comm,
            e.packet_seq,
            e.link_bytes
        )?;
    }
    f.flush()?;
    Ok(())
}

/// Averages repetitions; without jitter every repetition is identical, so
/// one run stands for all.
fn repeat(
    cfg: &BenchConfig,
    mut run: impl FnMut(Option<u64>, usize) -> Result<Sample, String>,
) -> Result<Sample, String> {
    let reps = if cfg.seed.is_some() {
        cfg.repetitions as usize
    } else {
        1
    };
    let (mut lat, mut mean, mut bytes) = (0u128, 0u128, 0u128);
    for rep in 0..reps {
        let s = run(cfg.seed.map(|s| s.wrapping_add(rep as u64)), rep)?;
        lat += s.latency as u128;
        mean += s.mean as u128;
        bytes += s.bytes as u128;
    }
    let r = reps as u128;
    Ok(Sample {
        latency: (lat / r) as Time,
        mean: (mean / r) as Time,
        bytes: (bytes / r) as u64,
    })
}

/// Runs one cell of the sweep.
pub fn run_cell(cfg: &BenchConfig, kind: CollectiveKind, nodes: u32, size: u64) -> Result<BenchRow, HarnessError> {
    let cell_err = |msg: String| HarnessError::Cell {
        collective: kind.name().to_string(),
        nodes,
        size,
        msg,
    };
    let spec = auto_topology(cfg.topology, nodes);
    let base = Network::new(spec, cfg.cost).map_err(|e| cell_err(e.to_string()))?;
    let net = |seed: Option<u64>| Network {
        topo: base.topo.clone(),
        params: base.params,
        opts: SimOptions {
            trace_level: if cfg.dump_trace.is_some() {
                TraceLevel::Full
            } else {
                TraceLevel::Counters
            },
            max_events: cfg.max_events,
            jitter_seed: seed,
        },
    };
    let comm = Communicator::world(1, nodes);
    let dtype = DType::vec_i32((size / 4) as u32);
    let call = CollectiveCall::opaque(kind, ReduceOp::Sum, dtype, nodes, size as usize);
    let stem = format!("{}_{nodes}_{size}", kind.name());
    let host = if cfg.mode.runs_host() {
        Some(
            repeat(cfg, |seed, rep| {
                let r = run_host(&net(seed), &comm, &call, None).map_err(|e| e.to_string())?;
                if let Some(dir) = &cfg.dump_trace {
                    dump(dir, &format!("{stem}_host_{rep}.csv"), &r.trace).map_err(|e| e.to_string())?;
                }
                Ok(sample(&r.trace))
            })
            .map_err(cell_err)?,
        )
    } else {
        None
    };
    let acis = if cfg.mode.runs_acis() {
        Some(
            repeat(cfg, |seed, rep| {
                let r = run_acis(&net(seed), &comm, &call, AcisOptions::default()).map_err(|e| e.to_string())?;
                if let Some((v, e)) = r.stats.errors.first() {
                    return Err(format!("switch {v}: {e}"));
                }
                if let Some(dir) = &cfg.dump_trace {
                    dump(dir, &format!("{stem}_acis_{rep}.csv"), &r.trace).map_err(|e| e.to_string())?;
                }
                Ok(sample(&r.trace))
            })
            .map_err(cell_err)?,
        )
    } else {
        None
    };
    Ok(BenchRow {
        collective: kind.name().to_string(),
        nodes,
        size_bytes: size,
        host_latency: host.as_ref().map(|s| s.latency),
        acis_latency: acis.as_ref().map(|s| s.latency),
        speedup: match (&host, &acis) {
            (Some(h), Some(a)) => speedup(h.latency, a.latency),
            _ => None,
        },
        traffic_host_bytes: host.as_ref().map(|s| s.bytes),
        traffic_acis_bytes: acis.as_ref().map(|s| s.bytes),
        host_mean_latency: host.as_ref().map(|s| s.mean),
        acis_mean_latency: acis.as_ref().map(|s| s.mean),
    })
}

/// Runs every cell on `cfg.workers` threads. Rows come back in the order
/// collective (as configured), nodes, size, whatever the worker count.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<Vec<BenchRow>, HarnessError> {
    cfg.validate()?;
    let mut nodes = cfg.nodes.clone();
    nodes.sort_unstable();
    nodes.dedup();
    let cells: Vec<(CollectiveKind, u32, u64)> = cfg
        .collectives
        .iter()
        .flat_map(|&k| {
            nodes
                .iter()
                .flat_map(move |&n| cfg.sizes.iter().map(move |&s| (k, n, s)))
        })
        .collect();
    let slots: Vec<Mutex<Option<Result<BenchRow, HarnessError>>>> = cells.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let work = || loop {
        let i = next.fetch_add(1, Ordering::Relaxed);
        let Some(&(k, n, s)) = cells.get(i) else { break };
        let r = run_cell(cfg, k, n, s);
        *slots[i].lock().expect("unpoisoned") = Some(r);
    };
    let workers = cfg.workers.min(cells.len()).max(1);
    if workers == 1 {
        work();
    } else {
        std::thread::scope(|sc| {
            for _ in 0..workers {
                sc.spawn(work);
            }
        });
    }
    let rows = slots
        .into_iter()
        .map(|m| m.into_inner().expect("unpoisoned").expect("every cell ran"))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(path) = &cfg.output {
        crate::csvio::emit_csv(&rows, path)?;
    }
    Ok(rows)
}
