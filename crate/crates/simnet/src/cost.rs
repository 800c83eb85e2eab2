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

//! Calibrated cost model. All durations are integer picoseconds.

use thiserror::Error;

use crate::topology::LinkKind;

/// Simulated time in picoseconds.
pub type Time = u64;

pub const PS_PER_SEC: u64 = 1_000_000_000_000;
pub const PS_PER_US: u64 = 1_000_000;
pub const PS_PER_NS: u64 = 1_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CostParams {
    pub mpi_overhead_ps: Time,
    pub bandwidth_bps: u64,
    pub pcie_latency_ps: Time,
    pub fpga_to_fpga_latency_ps: Time,
    pub port_to_port_latency_ps: Time,
    pub switch_clock_hz: u64,
    pub pipeline_depth_cycles: u64,
}

impl Default for CostParams {
    fn default() -> Self {
        CostParams {
            mpi_overhead_ps: 14_800_000,
            bandwidth_bps: 95_900_000_000,
            pcie_latency_ps: 900_000,
            fpga_to_fpga_latency_ps: 440_000,
            port_to_port_latency_ps: 52_000,
            switch_clock_hz: 250_000_000,
            pipeline_depth_cycles: 16,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CostError {
    #[error("cost parameter `{0}` must be strictly positive")]
    NonPositive(&'static str),
}

fn ceil_div(num: u128, den: u128) -> u64 {
    num.div_ceil(den) as u64
}

impl CostParams {
    /// All parameters zero except the two divisors, which stay at their
    /// defaults so that delays remain computable.
    pub fn zeroed() -> Self {
        CostParams {
            mpi_overhead_ps: 0,
            pcie_latency_ps: 0,
            fpga_to_fpga_latency_ps: 0,
            port_to_port_latency_ps: 0,
            pipeline_depth_cycles: 0,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), CostError> {
        let fields = [
            ("mpi_overhead", self.mpi_overhead_ps),
            ("max_bandwidth", self.bandwidth_bps),
            ("pcie_latency", self.pcie_latency_ps),
            ("fpga_to_fpga_latency", self.fpga_to_fpga_latency_ps),
            ("port_to_port_latency", self.port_to_port_latency_ps),
            ("switch_clock", self.switch_clock_hz),
            ("pipeline_depth_cycles", self.pipeline_depth_cycles),
        ];
        match fields.iter().find(|(_, v)| *v == 0) {
            Some((name, _)) => Err(CostError::NonPositive(name)),
            None => Ok(()),
        }
    }

    /// Time to clock `bytes` onto a link, rounded up to whole picoseconds.
    pub fn serialization_ps(&self, bytes: usize) -> Time {
        ceil_div(bytes as u128 * 8 * PS_PER_SEC as u128, self.bandwidth_bps as u128)
    }

    pub fn wire_latency(&self, kind: LinkKind) -> Time {
        match kind {
            LinkKind::HostToSwitch | LinkKind::SwitchToSwitch => self.port_to_port_latency_ps,
            LinkKind::AccelLink => self.fpga_to_fpga_latency_ps,
        }
    }

    pub fn link_delay(&self, bytes: usize, kind: LinkKind) -> Time {
        self.wire_latency(kind) + self.serialization_ps(bytes)
    }

    pub fn endpoint_send_cost(&self) -> Time {
        self.mpi_overhead_ps + self.pcie_latency_ps
    }

    pub fn endpoint_recv_cost(&self) -> Time {
        self.mpi_overhead_ps + self.pcie_latency_ps
    }

    /// Duration of `cycles` switch clock cycles, rounded up.
    pub fn cycles_ps(&self, cycles: u64) -> Time {
        ceil_div(cycles as u128 * PS_PER_SEC as u128, self.switch_clock_hz as u128)
    }

    /// One traversal of the switch pipeline.
    pub fn switch_latency(&self) -> Time {
        self.cycles_ps(self.pipeline_depth_cycles)
    }
}
