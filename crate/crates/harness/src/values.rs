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

//! Text form of values on the command line: elements separated by commas,
//! sparse entries written `index:value`.

use acis_core::{DTypeKind, Value};

pub fn parse_value(kind: DTypeKind, s: &str) -> Result<Value, String> {
    let items: Vec<&str> = s.split(',').map(str::trim).filter(|t| !t.is_empty()).collect();
    let bad = |t: &str| format!("cannot parse {t:?} as {kind}");
    fn nums<T: std::str::FromStr>(items: &[&str], bad: impl Fn(&str) -> String) -> Result<Vec<T>, String> {
        items.iter().map(|t| t.parse().map_err(|_| bad(t))).collect()
    }
    fn one<'a>(kind: DTypeKind, items: &[&'a str]) -> Result<&'a str, String> {
        match items {
            [x] => Ok(x),
            _ => Err(format!("{kind} takes exactly one element, got {}", items.len())),
        }
    }
    Ok(match kind {
        DTypeKind::I32 => Value::I32(one(kind, &items)?.parse().map_err(|_| bad(s))?),
        DTypeKind::F32 => Value::F32(one(kind, &items)?.parse().map_err(|_| bad(s))?),
        DTypeKind::F64 => Value::F64(one(kind, &items)?.parse().map_err(|_| bad(s))?),
        DTypeKind::VecI32 => Value::VecI32(nums(&items, bad)?),
        DTypeKind::VecF32 => Value::VecF32(nums(&items, bad)?),
        DTypeKind::VecF64 => Value::VecF64(nums(&items, bad)?),
        DTypeKind::SparseF32 => {
            let pairs = items
                .iter()
                .map(|t| {
                    let (i, v) = t.split_once(':').ok_or_else(|| bad(t))?;
                    Ok((
                        i.trim().parse().map_err(|_| bad(t))?,
                        v.trim().parse().map_err(|_| bad(t))?,
                    ))
                })
                .collect::<Result<Vec<(u32, f32)>, String>>()?;
            let v = Value::SparseF32(pairs);
            if !v.is_well_formed() {
                return Err("sparse indices must be strictly ascending".into());
            }
            v
        }
    })
}

/// Parses one value per rank, ranks separated by `;`.
pub fn parse_ranks(kind: DTypeKind, s: &str) -> Result<Vec<Value>, String> {
    s.split(';').map(|r| parse_value(kind, r)).collect()
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

pub fn format_value(v: &Value) -> String {
    match v {
        Value::I32(x) => x.to_string(),
        Value::F32(x) => x.to_string(),
        Value::F64(x) => x.to_string(),
        Value::VecI32(xs) => join(xs),
        Value::VecF32(xs) => join(xs),
        Value::VecF64(xs) => join(xs),
        Value::SparseF32(ps) => ps.iter().map(|(i, x)| format!("{i}:{x}")).collect::<Vec<_>>().join(","),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrips_every_kind() {
        let cases = [
            (DTypeKind::I32, "-7"),
            (DTypeKind::F64, "0.5"),
            (DTypeKind::VecI32, "1,2,3"),
            (DTypeKind::VecF32, "1.5,-2"),
            (DTypeKind::SparseF32, "1:0.5,4:2"),
            (DTypeKind::VecI32, ""),
        ];
        for (k, s) in cases {
            let v = parse_value(k, s).unwrap();
            assert_eq!(parse_value(k, &format_value(&v)).unwrap(), v, "{k} {s}");
        }
    }

    #[test]
    fn rejects_malformed() {
        assert!(parse_value(DTypeKind::I32, "1,2").is_err());
        assert!(parse_value(DTypeKind::VecI32, "1,x").is_err());
        assert!(parse_value(DTypeKind::SparseF32, "4:1,1:2").is_err());
        assert_eq!(
            parse_ranks(DTypeKind::I32, "3;4").unwrap(),
            vec![Value::I32(3), Value::I32(4)]
        );
    }
}
