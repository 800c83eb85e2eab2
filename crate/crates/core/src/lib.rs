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

//! Shared vocabulary of the simulator: packet wire format, datatypes and the
//! reduction algebra.

pub mod value;
pub mod wire;

pub use value::{apply_op, fold, prefix_sum, DType, DTypeKind, Rank, ReduceOp, Value, ValueError};
pub use wire::{
    encode_packet, parse_packet, segment_message, CollectiveKind, MsgKind, PacketHeader, WireError, CONTEXT_DIRECTED,
    HEADER_LEN, MAX_PAYLOAD,
};
