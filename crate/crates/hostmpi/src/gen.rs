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

//! Random payloads for tests, sweeps and the oracle command.

use acis_core::{DType, DTypeKind, Value};
use rand::Rng;

fn float<R: Rng>(rng: &mut R) -> f64 {
    // mixed magnitudes so that float folds are order-sensitive
    let m: f64 = rng.gen_range(-1.0..1.0);
    m * 10f64.powi(rng.gen_range(-3..4))
}

/// A value conforming to `dtype`; sparse values hold `elem_count` pairs drawn
/// from indices `0..4 * elem_count`.
pub fn random_value<R: Rng>(dtype: DType, rng: &mut R) -> Value {
    let n = dtype.elem_count as usize;
    match dtype.kind {
        DTypeKind::I32 => Value::I32(rng.gen()),
        DTypeKind::F32 => Value::F32(float(rng) as f32),
        DTypeKind::F64 => Value::F64(float(rng)),
        DTypeKind::VecI32 => Value::VecI32((0..n).map(|_| rng.gen()).collect()),
        DTypeKind::VecF32 => Value::VecF32((0..n).map(|_| float(rng) as f32).collect()),
        DTypeKind::VecF64 => Value::VecF64((0..n).map(|_| float(rng)).collect()),
        DTypeKind::SparseF32 => {
            let space = (4 * n).max(1) as u32;
            let mut idx: Vec<u32> = (0..space).collect();
            for i in (1..idx.len()).rev() {
                idx.swap(i, rng.gen_range(0..=i));
            }
            let mut chosen: Vec<u32> = idx.into_iter().take(n).collect();
            chosen.sort_unstable();
            Value::SparseF32(chosen.into_iter().map(|i| (i, float(rng) as f32)).collect())
        }
    }
}
