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

//! CSV emission and parsing of benchmark rows.

use std::io::{Read, Write};
use std::path::Path;

use crate::bench::BenchRow;
use crate::HarnessError;

pub const HEADER: [&str; 10] = [
    "collective",
    "nodes",
    "size_bytes",
    "host_latency_ps",
    "acis_latency_ps",
    "speedup",
    "traffic_host_bytes",
    "traffic_acis_bytes",
    "host_mean_latency_ps",
    "acis_mean_latency_ps",
];

/// Rounds to 4 significant digits.
pub fn round_sig4(x: f64) -> f64 {
    format!("{x:.3e}").parse().expect("formatted float")
}

/// Formats with 4 significant digits, positional between 1e-4 and 1e5.
pub fn fmt_sig4(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let v = round_sig4(x);
    let e = v.abs().log10().floor() as i32;
    if (-4..5).contains(&e) {
        format!("{v:.*}", (3 - e).max(0) as usize)
    } else {
        format!("{v:.3e}")
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

pub fn write_csv<W: Write>(rows: &[BenchRow], w: W) -> Result<(), HarnessError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(HEADER)?;
    for r in rows {
        out.write_record([
            r.collective.clone(),
            r.nodes.to_string(),
            r.size_bytes.to_string(),
            opt(r.host_latency),
            opt(r.acis_latency),
            r.speedup.map_or_else(String::new, fmt_sig4),
            opt(r.traffic_host_bytes),
            opt(r.traffic_acis_bytes),
            opt(r.host_mean_latency),
            opt(r.acis_mean_latency),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Writes `rows` to `path`, header first.
pub fn emit_csv(rows: &[BenchRow], path: &Path) -> Result<(), HarnessError> {
    write_csv(rows, std::fs::File::create(path)?)
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize) -> Result<Option<T>, HarnessError> {
    let s = rec.get(i).unwrap_or("");
    if s.is_empty() {
        return Ok(None);
    }
    s.parse().map(Some).map_err(|_| {
        HarnessError::Io(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!("column {}: cannot parse {s:?}", HEADER[i]),
        ))
    })
}

fn required<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize) -> Result<T, HarnessError> {
    field(rec, i)?.ok_or_else(|| {
        HarnessError::Io(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!("column {} is empty", HEADER[i]),
        ))
    })
}

pub fn read_csv<R: Read>(r: R) -> Result<Vec<BenchRow>, HarnessError> {
    let mut rd = csv::Reader::from_reader(r);
    if rd.headers()?.iter().ne(HEADER) {
        return Err(HarnessError::Io(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            "unexpected header",
        )));
    }
    rd.records()
        .map(|rec| {
            let rec = rec?;
            Ok(BenchRow {
                collective: required(&rec, 0)?,
                nodes: required(&rec, 1)?,
                size_bytes: required(&rec, 2)?,
                host_latency: field(&rec, 3)?,
                acis_latency: field(&rec, 4)?,
                speedup: field(&rec, 5)?,
                traffic_host_bytes: field(&rec, 6)?,
                traffic_acis_bytes: field(&rec, 7)?,
                host_mean_latency: field(&rec, 8)?,
                acis_mean_latency: field(&rec, 9)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(speedup: Option<f64>) -> BenchRow {
        BenchRow {
            collective: "allreduce".into(),
            nodes: 32,
            size_bytes: 4096,
            host_latency: Some(123_456_789),
            acis_latency: Some(45_678_901),
            speedup,
            traffic_host_bytes: Some(10),
            traffic_acis_bytes: None,
            host_mean_latency: Some(100),
            acis_mean_latency: None,
        }
    }

    #[test]
    fn four_significant_digits() {
        assert_eq!(fmt_sig4(2.702702), "2.703");
        assert_eq!(fmt_sig4(12.3456), "12.35");
        assert_eq!(fmt_sig4(9.99951), "10.00");
        assert_eq!(fmt_sig4(0.012345), "0.01235");
        assert_eq!(fmt_sig4(1234.56), "1235");
        assert_eq!(fmt_sig4(123456.0), "1.235e5");
    }

    #[test]
    fn empty_rows_give_header_only() {
        let mut buf = Vec::new();
        write_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{}\n", HEADER.join(",")));
    }

    #[test]
    fn quoting_follows_rfc4180() {
        let mut r = row(None);
        r.collective = "a,\"b\"".into();
        let mut buf = Vec::new();
        write_csv(&[r.clone()], &mut buf).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().contains("\"a,\"\"b\"\"\""));
        assert_eq!(read_csv(buf.as_slice()).unwrap(), vec![r]);
    }

    #[test]
    fn roundtrip_is_identity() {
        let rows = vec![row(Some(round_sig4(123_456_789.0 / 45_678_901.0))), row(None)];
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        assert_eq!(read_csv(buf.as_slice()).unwrap(), rows);
    }
}
