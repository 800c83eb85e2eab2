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

//! `acis`: benchmark sweeps, fused scenarios, the map compiler, the CGRA VM,
//! topology dumps and reference oracles.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use acis_cgra::mapc::compile_checked;
use acis_cgra::{exec, map_stage, CgraConfig, CgraProgram, Elem, Memory};
use acis_core::wire::CollectiveKind;
use acis_core::{DType, DTypeKind, ReduceOp, Value};
use acis_fusion::{load_plan_file, oracle_fused, FusionError, Scenario};
use acis_harness::config::{parse_collectives, TopologyKind};
use acis_harness::values::{format_value, parse_ranks, parse_value};
use acis_harness::{
    auto_topology, parse_bench_config, run_benchmark, run_fused_scenario, write_csv, BenchConfig, FusedConfig,
    HarnessError, Mode,
};
use acis_hostmpi::{oracle, Chunk, CollectiveCall};
use acis_simnet::config::ConfigError;
use acis_simnet::{Topology, TopologySpec};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "acis", version, about = "In-switch collective computing simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Host-baseline and in-switch latency sweeps.
    Bench {
        #[arg(long)]
        config: Option<PathBuf>,
        /// CSV output; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// host, acis or both.
        #[arg(long)]
        mode: Option<String>,
        #[arg(long, value_delimiter = ',')]
        nodes: Option<Vec<u32>>,
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<u64>>,
        #[arg(long, value_delimiter = ',')]
        collectives: Option<Vec<String>>,
        /// torus or star.
        #[arg(long)]
        topology: Option<String>,
        /// Enables ±5% endpoint jitter.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        repetitions: Option<u32>,
        #[arg(long)]
        workers: Option<usize>,
        /// Directory for per-cell event logs.
        #[arg(long)]
        dump_trace: Option<PathBuf>,
    },
    /// Fused scenarios against their unfused stages.
    Fused {
        /// allgather_prefix_allgather, allreduce_alltoall or all.
        #[arg(long, default_value = "all")]
        scenario: String,
        #[arg(long, value_delimiter = ',', default_value = "2")]
        nodes: Vec<u32>,
        #[arg(long, value_delimiter = ',', default_value = "4")]
        sizes: Vec<u64>,
        #[arg(long, default_value = "star")]
        topology: String,
        /// Seed of the validated random inputs.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Time opaque inputs without checking results.
        #[arg(long)]
        no_validate: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compiles a map function to a CGRA binary.
    Compile {
        src: PathBuf,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
        /// Prints the dataflow graph, one node per line.
        #[arg(long)]
        dump_dfg: bool,
    },
    /// Runs a CGRA binary on the given inputs.
    Exec {
        binary: PathBuf,
        /// Comma-separated elements; repeat for further inputs.
        #[arg(long = "input")]
        inputs: Vec<String>,
    },
    /// Prints a topology.
    Topo {
        #[arg(long, default_value = "torus")]
        topology: String,
        #[arg(long, default_value_t = 128)]
        nodes: u32,
        /// Lists every link.
        #[arg(long)]
        links: bool,
    },
    /// Runs a reference oracle.
    Oracle {
        #[arg(long)]
        collective: Option<String>,
        /// Fused plan file instead of a collective.
        #[arg(long)]
        plan: Option<PathBuf>,
        #[arg(long, default_value = "sum")]
        op: String,
        #[arg(long, default_value = "vec_i32")]
        dtype: String,
        #[arg(long, default_value_t = 0)]
        root: u32,
        /// Rank contributions separated by `;`.
        #[arg(long)]
        values: String,
    },
}

enum Failure {
    Config(String),
    Validation(String),
    Other(String),
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e.exit_code() {
            2 => Failure::Config(e.to_string()),
            3 => Failure::Validation(e.to_string()),
            _ => Failure::Other(e.to_string()),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

fn config(msg: impl ToString) -> Failure {
    Failure::Config(msg.to_string())
}

fn other(msg: impl ToString) -> Failure {
    Failure::Other(msg.to_string())
}

fn topology(name: &str) -> Result<TopologyKind, Failure> {
    TopologyKind::from_name(name).ok_or_else(|| config(format!("unknown topology `{name}`")))
}

fn emit(rows: &[acis_harness::BenchRow], out: Option<PathBuf>) -> Result<(), Failure> {
    match out {
        Some(p) => acis_harness::emit_csv(rows, &p)?,
        None => write_csv(rows, std::io::stdout().lock())?,
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn bench(
    cfg_path: Option<PathBuf>,
    out: Option<PathBuf>,
    mode: Option<String>,
    nodes: Option<Vec<u32>>,
    sizes: Option<Vec<u64>>,
    collectives: Option<Vec<String>>,
    topo: Option<String>,
    seed: Option<u64>,
    repetitions: Option<u32>,
    workers: Option<usize>,
    dump_trace: Option<PathBuf>,
) -> Result<(), Failure> {
    let mut cfg = match &cfg_path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| config(format!("{}: {e}", p.display())))?;
            parse_bench_config(&text)?
        }
        None => BenchConfig::default(),
    };
    if let Some(m) = mode {
        cfg.mode = Mode::from_name(&m).ok_or_else(|| config(format!("unknown mode `{m}`")))?;
    }
    if let Some(t) = topo {
        cfg.topology = topology(&t)?;
    }
    if let Some(c) = collectives {
        cfg.collectives = parse_collectives(&c)?;
    }
    cfg.nodes = nodes.unwrap_or(cfg.nodes);
    cfg.sizes = sizes.unwrap_or(cfg.sizes);
    cfg.seed = seed.or(cfg.seed);
    cfg.repetitions = repetitions.unwrap_or(cfg.repetitions);
    cfg.workers = workers.unwrap_or(cfg.workers);
    cfg.dump_trace = dump_trace;
    let out = out.or(cfg.output.take());
    cfg.validate()?;
    let rows = run_benchmark(&cfg)?;
    emit(&rows, out)
}

fn fused(
    scenario: String,
    nodes: Vec<u32>,
    sizes: Vec<u64>,
    topo: String,
    seed: u64,
    no_validate: bool,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    let scenarios = match scenario.as_str() {
        "all" => Scenario::ALL.to_vec(),
        s => vec![Scenario::from_name(s).ok_or_else(|| config(format!("unknown scenario `{s}`")))?],
    };
    let cfg = FusedConfig {
        topology: topology(&topo)?,
        nodes,
        sizes,
        seed: (!no_validate).then_some(seed),
        ..FusedConfig::default()
    };
    let mut rows = Vec::new();
    for sc in scenarios {
        let rep = run_fused_scenario(sc, &cfg)?;
        eprintln!("{sc}: {}", if rep.validated { "pass" } else { "timed only" });
        rows.extend(rep.rows);
    }
    emit(&rows, out)
}

fn compile(src: PathBuf, output: PathBuf, dump_dfg: bool) -> Result<(), Failure> {
    let text = std::fs::read_to_string(&src).map_err(|e| config(format!("{}: {e}", src.display())))?;
    let c = compile_checked(&text, &CgraConfig::default()).map_err(config)?;
    std::fs::write(&output, c.program.to_bytes()).map_err(other)?;
    if dump_dfg {
        print!("{}", c.dfg.dump());
    }
    Ok(())
}

fn exec_binary(binary: PathBuf, inputs: Vec<String>) -> Result<(), Failure> {
    let bytes = std::fs::read(&binary).map_err(|e| config(format!("{}: {e}", binary.display())))?;
    let prog = CgraProgram::from_bytes(&bytes).map_err(config)?;
    let kind = match prog.elem {
        Elem::I32 => DTypeKind::VecI32,
        Elem::F32 => DTypeKind::VecF32,
    };
    let values = inputs
        .iter()
        .map(|s| parse_value(kind, s))
        .collect::<Result<Vec<Value>, _>>()
        .map_err(config)?;
    let cfg = prog.config;
    let mut mem = Memory::default();
    let (out, cycles) = if values.len() == 1 {
        map_stage(&prog, &cfg, &values[0], &mut mem).map_err(other)?
    } else {
        let r = exec(&prog, &cfg, &values, &mut mem).map_err(other)?;
        (
            r.outputs.into_iter().next().unwrap_or(Value::VecI32(Vec::new())),
            r.cycles,
        )
    };
    println!("{}", format_value(&out));
    println!("cycles {cycles}");
    Ok(())
}

fn topo(name: String, nodes: u32, links: bool) -> Result<(), Failure> {
    let spec = auto_topology(topology(&name)?, nodes);
    let t = Topology::build(spec).map_err(config)?;
    println!("{spec}");
    println!("hosts {}", t.n_hosts());
    println!("vertices {}", t.n_vertices());
    println!("links {}", t.links().len());
    if let TopologySpec::StarWithAccel { .. } = spec {
        println!("accel {:?}", t.acis_vertices());
    }
    if links {
        let mut w = std::io::stdout().lock();
        for (id, l) in t.links().iter().enumerate() {
            writeln!(w, "{id} {} {} {}", l.src, l.dst, l.kind.name()).map_err(other)?;
        }
    }
    Ok(())
}

fn run_oracle(
    collective: Option<String>,
    plan: Option<PathBuf>,
    op: String,
    dtype: String,
    root: u32,
    values: String,
) -> Result<(), Failure> {
    let kind = DTypeKind::from_name(&dtype).ok_or_else(|| config(format!("unknown dtype `{dtype}`")))?;
    let inputs = parse_ranks(kind, &values).map_err(config)?;
    let print = |r: usize, vs: &[Value]| {
        let parts: Vec<String> = vs.iter().map(format_value).collect();
        println!("rank {r}: {}", parts.join(" | "));
    };
    match (collective, plan) {
        (Some(c), None) => {
            let ck = CollectiveKind::from_name(&c).ok_or_else(|| config(format!("unknown collective `{c}`")))?;
            let op = ReduceOp::from_name(&op).ok_or_else(|| config(format!("unknown op `{op}`")))?;
            let dt = DType::new(kind, inputs.first().map_or(0, |v| v.len() as u32));
            let mut call = CollectiveCall::with_values(ck, op, dt, inputs).with_root(root);
            if ck == CollectiveKind::Alltoall {
                let n = call.n() as usize;
                for row in &mut call.inputs {
                    *row = row[0].split(n, kind.elem_bytes());
                }
            }
            let res = oracle(&call).map_err(config)?;
            for (r, out) in res.iter().enumerate() {
                match out {
                    Some(cs) => {
                        let vs: Vec<Value> = cs.iter().filter_map(Chunk::value).cloned().collect();
                        print(r, &vs);
                    }
                    None => println!("rank {r}: -"),
                }
            }
        }
        (None, Some(p)) => {
            let plan = load_plan_file(&p).map_err(config)?;
            let res = oracle_fused(&plan, &inputs).map_err(|e| match e {
                FusionError::Contribution(_) | FusionError::DtypeChainMismatch(_) => config(e),
                e => other(e),
            })?;
            for (r, v) in res.iter().enumerate() {
                print(r, std::slice::from_ref(v));
            }
        }
        _ => return Err(config("give exactly one of --collective or --plan")),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match cli.cmd {
        Cmd::Bench {
            config,
            out,
            mode,
            nodes,
            sizes,
            collectives,
            topology,
            seed,
            repetitions,
            workers,
            dump_trace,
        } => bench(
            config,
            out,
            mode,
            nodes,
            sizes,
            collectives,
            topology,
            seed,
            repetitions,
            workers,
            dump_trace,
        ),
        Cmd::Fused {
            scenario,
            nodes,
            sizes,
            topology,
            seed,
            no_validate,
            out,
        } => fused(scenario, nodes, sizes, topology, seed, no_validate, out),
        Cmd::Compile { src, output, dump_dfg } => compile(src, output, dump_dfg),
        Cmd::Exec { binary, inputs } => exec_binary(binary, inputs),
        Cmd::Topo { topology, nodes, links } => topo(topology, nodes, links),
        Cmd::Oracle {
            collective,
            plan,
            op,
            dtype,
            root,
            values,
        } => run_oracle(collective, plan, op, dtype, root, values),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Validation(m)) => {
            eprintln!("validation failed: {m}");
            ExitCode::from(3)
        }
        Err(Failure::Other(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
