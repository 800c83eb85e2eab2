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

use std::path::PathBuf;
use std::process::{Command, Output};

fn acis(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_acis"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("acis-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn bench_writes_csv_to_stdout() {
    let o = acis(&["bench", "--nodes", "4", "--sizes", "4", "--collectives", "allreduce"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("collective,nodes,size_bytes"));
    assert!(lines[1].starts_with("allreduce,4,4,"));
}

#[test]
fn config_errors_exit_2() {
    assert_eq!(acis(&["bench", "--mode", "sideways"]).status.code(), Some(2));
    let d = scratch("cfg");
    let p = d.join("bad.toml");
    std::fs::write(&p, "[bench]\nrepetitions = 0\n").unwrap();
    let o = acis(&["bench", "--config", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    std::fs::write(&p, "[bench]\nnodes = [4,\n").unwrap();
    let o = acis(&["bench", "--config", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line"));
    std::fs::remove_dir_all(d).unwrap();
}

#[test]
fn fused_scenarios_validate() {
    let o = acis(&["fused", "--nodes", "2", "--sizes", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("allgather_prefix_allgather,2,4,"));
    assert!(out.contains("allreduce_alltoall,2,4,"));
}

#[test]
fn compile_then_exec_runs_prefix_sum() {
    let d = scratch("cc");
    let src = d.join("p.map");
    let bin = d.join("p.bin");
    std::fs::write(&src, "elem i32\nout = scan_add(in0)\n").unwrap();
    let o = acis(&["compile", src.to_str().unwrap(), "-o", bin.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = acis(&["exec", bin.to_str().unwrap(), "--input", "1,2,3,4"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().next(), Some("1,3,6,10"));
    std::fs::write(&src, "elem i32\nout = nonsense(in0)\n").unwrap();
    let o = acis(&["compile", src.to_str().unwrap(), "-o", bin.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    std::fs::remove_dir_all(d).unwrap();
}

#[test]
fn topo_reports_cluster_scale_torus() {
    let o = acis(&["topo", "--nodes", "128"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("torus 4x4x8\nhosts 128\n"), "{out}");
}

#[test]
fn oracle_prints_per_rank_results() {
    let o = acis(&["oracle", "--collective", "allgather", "--values", "1;2;3"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "rank 0: 1 | 2 | 3\nrank 1: 1 | 2 | 3\nrank 2: 1 | 2 | 3\n");
    let o = acis(&[
        "oracle",
        "--collective",
        "reduce",
        "--op",
        "max",
        "--root",
        "1",
        "--values",
        "1,9;5,2",
    ]);
    assert_eq!(stdout(&o), "rank 0: -\nrank 1: 5,9\n");
    let o = acis(&[
        "oracle",
        "--collective",
        "allreduce",
        "--dtype",
        "quaternion",
        "--values",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn oracle_runs_plan_files() {
    let d = scratch("plan");
    let p = d.join("plan.toml");
    std::fs::write(
        &p,
        "plan_id = 3\n[[stage]]\ncollective = \"allgather\"\ndtype = \"vec_i32\"\n\
         [[stage]]\nmap = \"elem i32\\nout = scan_add(in0)\"\n",
    )
    .unwrap();
    let o = acis(&["oracle", "--plan", p.to_str().unwrap(), "--values", "1;2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o), "rank 0: 1,3\nrank 1: 1,3\n");
    std::fs::remove_dir_all(d).unwrap();
}
