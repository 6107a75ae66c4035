//! File formats: JSON documents with 17-significant-digit floats, the defect
//! trace CSV, and run manifests.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use vacancy_core::vacancy::DefectTrace;
use vacancy_core::Realization;

use crate::config::Config;
use crate::Error;

/// Pretty JSON where every float is written as `{:.16e}` (17 significant
/// digits, round-trips exactly). Non-finite floats become `null`.
pub struct SciFormatter<'a>(PrettyFormatter<'a>);

impl Default for SciFormatter<'_> {
    fn default() -> Self {
        SciFormatter(PrettyFormatter::new())
    }
}

impl Formatter for SciFormatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{}", sci(value))
    }
    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// `{:.16e}` for finite values, `inf`, `-inf` or `nan` otherwise.
pub fn sci(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SciFormatter::default());
    value.serialize(&mut ser).expect("serialising to memory cannot fail");
    out.push(b'\n');
    out
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Error> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io(dir.to_path_buf(), e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::Io(path.to_path_buf(), e))
}

#[derive(Serialize)]
struct PointDoc {
    rho: f64,
    theta: f64,
    #[serde(rename = "R")]
    r: f64,
}

#[derive(Serialize)]
struct RealizationDoc {
    lambda_sq: f64,
    seed: u64,
    replica: u64,
    window: f64,
    points: Vec<PointDoc>,
    certified: bool,
}

pub fn realization_json(r: &Realization) -> Vec<u8> {
    to_json(&RealizationDoc {
        lambda_sq: r.lambda_sq,
        seed: r.seed,
        replica: r.replica,
        window: r.window,
        points: r
            .points
            .iter()
            .map(|p| PointDoc { rho: p.rho, theta: p.theta, r: p.mark_radius })
            .collect(),
        certified: r.certified,
    })
}

pub const TRACE_HEADER: [&str; 8] = ["t", "L_line", "L_disc", "d", "d_bar", "X", "edge_atom_id", "disc_atom_id"];

fn id(i: Option<usize>) -> String {
    i.map_or_else(String::new, |i| i.to_string())
}

pub fn trace_csv(trace: &DefectTrace) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(TRACE_HEADER).expect("in-memory csv");
    for s in &trace.samples {
        w.write_record([
            sci(s.t),
            sci(s.l_line),
            sci(s.l_disc),
            sci(s.d),
            sci(s.d_bar),
            sci(s.x),
            id(s.line_atom),
            id(s.disc_atom),
        ])
        .expect("in-memory csv");
    }
    w.into_inner().expect("in-memory csv")
}

/// Writes rows of already formatted fields under `header`.
pub fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for r in rows {
        w.write_record(r).expect("in-memory csv");
    }
    w.into_inner().expect("in-memory csv")
}

/// Record of one subcommand invocation.
#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub config: Config,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
    /// Command-specific facts worth keeping next to the outputs.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub summary: BTreeMap<String, serde_json::Value>,
}

impl Manifest {
    pub fn new(command: &str, config: &Config) -> Self {
        Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            seed: config.run.seed,
            config: config.clone(),
            wall_time_s: 0.0,
            outputs: Vec::new(),
            summary: BTreeMap::new(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, Error> {
        let path = dir.join(format!("manifest_{}.json", self.command));
        write_file(&path, &to_json(self))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use vacancy_core::coupling::atom;

    #[test]
    fn floats_keep_17_digits() {
        #[derive(Serialize)]
        struct S {
            a: f64,
            b: f64,
            c: Vec<f64>,
        }
        let text = String::from_utf8(to_json(&S { a: 0.1, b: f64::INFINITY, c: vec![1.0 / 3.0] })).unwrap();
        assert!(text.contains("\"a\": 1.0000000000000001e-1"), "{text}");
        assert!(text.contains("\"b\": null"));
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["c"][0].as_f64().unwrap(), 1.0 / 3.0);
    }

    #[test]
    fn realization_document() {
        let r = Realization::from_points(vec![atom(1.0, 0.5, 1.0)], 10.0, 5.0, 1.0, 16);
        let v: serde_json::Value = serde_json::from_slice(&realization_json(&r)).unwrap();
        assert_eq!(v["points"][0]["R"].as_f64(), Some(1.0));
        assert_eq!(v["certified"].as_bool(), Some(false));
        for key in ["lambda_sq", "seed", "replica", "window", "points", "certified"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn trace_layout() {
        let r = Realization::from_points(vec![atom(1.0, 0.0, 1.0)], 10.0, 5.0, 1.0, 16);
        let trace = vacancy_core::vacancy::trace_defect(&r, 16);
        let text = String::from_utf8(trace_csv(&trace)).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,L_line,L_disc,d,d_bar,X,edge_atom_id,disc_atom_id");
        assert_eq!(lines.len(), 17);
        assert!(lines[1].starts_with("0.0000000000000000e0,1.0000000000000000e0,"));
        // direction π misses the only line
        assert!(lines[9].contains("inf"));
    }
}
