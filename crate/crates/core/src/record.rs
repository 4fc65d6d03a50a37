//! Trajectory records and their line-delimited JSON encoding.
//!
//! Floats are written in scientific notation with the shortest digits that
//! round-trip, so `parse(emit(record)) == record` bit for bit. Fields that can
//! legitimately be non-finite go through [`nonfinite`], which writes them as
//! the strings `"inf"`, `"-inf"` or `"nan"`.

use std::io;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;

use crate::functionals::FunctionalSnapshot;
use crate::model::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerminationCause {
    Horizon,
    BlowUp,
    DivergenceFlag,
    /// Non-finite values or a failed step; the record is partial.
    Aborted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRecord {
    pub s: f64,
    pub sup_norm: f64,
    /// `∫_{s0}^s ∫ (∂_s w)² ρ/(1-|y|²) dy dτ`, accumulated by the stepper.
    #[serde(with = "nonfinite")]
    pub dissipation_cum: f64,
    /// `∫_{s0}^s α(τ) e^{(p+3)/√τ} ∫ (∂_s w)² ρ/(1-|y|²) dy dτ`.
    #[serde(with = "nonfinite")]
    pub dissipation_alpha_cum: f64,
    /// `∫_{s0}^s ∫_{∂B} (∂_s w)² dσ dτ`.
    pub boundary_cum: f64,
    pub functionals: FunctionalSnapshot,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dw_ds: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub steps: usize,
    pub ds_min: f64,
    pub ds_max: f64,
    /// Constant added to the initial level by frame tuning, if any.
    #[serde(default)]
    pub level_shift: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest_id: Option<String>,
    pub params: ModelParams,
    /// Blow-up time of the similarity frame.
    pub t0: f64,
    pub grid_size: usize,
    pub snapshots: Vec<SnapshotRecord>,
    pub diagnostics: Diagnostics,
    pub termination: TerminationCause,
    pub termination_s: f64,
}

impl TrajectoryRecord {
    pub fn s0(&self) -> Option<f64> {
        self.snapshots.first().map(|r| r.s)
    }

    /// Snapshot whose `s` is within `tol` of `s`.
    pub fn at(&self, s: f64, tol: f64) -> Option<&SnapshotRecord> {
        let k = self.snapshots.partition_point(|r| r.s < s - tol);
        self.snapshots.get(k).filter(|r| (r.s - s).abs() <= tol)
    }

    /// Header line followed by one line per snapshot.
    pub fn to_json_lines(&self) -> String {
        let header = RecordHeader {
            manifest_id: self.manifest_id.clone(),
            params: self.params,
            t0: self.t0,
            grid_size: self.grid_size,
            diagnostics: self.diagnostics.clone(),
            termination: self.termination,
            termination_s: self.termination_s,
            snapshots: self.snapshots.len(),
        };
        let mut out = to_json_line(&header);
        out.push('\n');
        for snap in &self.snapshots {
            out.push_str(&to_json_line(snap));
            out.push('\n');
        }
        out
    }

    pub fn from_json_lines(text: &str) -> Result<Self, serde_json::Error> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: RecordHeader = match lines.next() {
            Some(l) => serde_json::from_str(l)?,
            None => return Err(serde::de::Error::custom("empty record")),
        };
        let snapshots = lines.map(serde_json::from_str).collect::<Result<Vec<SnapshotRecord>, _>>()?;
        if snapshots.len() != header.snapshots {
            return Err(serde::de::Error::custom(format!(
                "header announces {} snapshots, found {}",
                header.snapshots,
                snapshots.len()
            )));
        }
        Ok(Self {
            manifest_id: header.manifest_id,
            params: header.params,
            t0: header.t0,
            grid_size: header.grid_size,
            snapshots,
            diagnostics: header.diagnostics,
            termination: header.termination,
            termination_s: header.termination_s,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RecordHeader {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    manifest_id: Option<String>,
    params: ModelParams,
    t0: f64,
    grid_size: usize,
    diagnostics: Diagnostics,
    termination: TerminationCause,
    termination_s: f64,
    snapshots: usize,
}

/// serde_json formatter that writes every float as `{:e}`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SciFormatter;

impl Formatter for SciFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        write!(writer, "{value:e}")
    }
}

pub fn to_json_line<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SciFormatter);
    value.serialize(&mut ser).expect("in-memory serialization cannot fail");
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}

pub fn from_json_line<T: DeserializeOwned>(line: &str) -> Result<T, serde_json::Error> {
    serde_json::from_str(line)
}

/// `#[serde(with = "nonfinite")]` for floats that may be infinite or NaN.
pub mod nonfinite {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "nan" => Ok(f64::NAN),
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(serde::de::Error::custom(format!("not a float: {other}"))),
            },
        }
    }
}

/// Two-column whitespace-separated series with a `#` header.
pub fn plot_series(header: &str, rows: impl IntoIterator<Item = (f64, f64)>) -> String {
    let mut out = format!("# {header}\n");
    for (x, y) in rows {
        out.push_str(&format!("{x:e} {y:e}\n"));
    }
    out
}
