//! CSV writers for curves, traces and experiment tables.
//!
//! Every file starts with a `# <schema> v<N>` comment line, then a header row.

use std::io::Write;

use declip_core::psycho::ThresholdCurve;
use declip_core::weights::{parabola_weights, weights_from_curve, CurveVariant};

use crate::Result;

pub const CURVES_SCHEMA: &str = "# declip-curves v1";
pub const TRACE_SCHEMA: &str = "# declip-trace v1";

/// Format a dB value; infinities become `inf` / `-inf`.
pub fn fmt_db(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

/// Inverse of [`fmt_db`].
pub fn parse_db(s: &str) -> Option<f64> {
    match s.trim() {
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        other => other.parse().ok(),
    }
}

/// Start a CSV document: comment line, then a writer ready for the header.
pub fn csv_writer<W: Write>(mut out: W, schema: &str) -> Result<csv::Writer<W>> {
    writeln!(out, "{schema}")?;
    Ok(csv::WriterBuilder::new().has_headers(false).from_writer(out))
}

/// Frequency band to keep, inclusive.
#[derive(Debug, Clone, Copy)]
pub struct Band {
    pub min_hz: f64,
    pub max_hz: f64,
}

impl Default for Band {
    fn default() -> Self {
        Self { min_hz: 0.0, max_hz: f64::INFINITY }
    }
}

impl Band {
    fn contains(&self, f: f64) -> bool {
        f >= self.min_hz && f <= self.max_hz
    }
}

pub fn write_ath<W: Write>(out: W, ath: &ThresholdCurve, band: Band) -> Result<()> {
    let mut w = csv_writer(out, &format!("{CURVES_SCHEMA} ath"))?;
    w.write_record(["bin_freq_hz", "ath_db"])?;
    for (&f, &v) in ath.bin_freqs.iter().zip(&ath.values_db) {
        if band.contains(f) {
            w.write_record([f.to_string(), fmt_db(v)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// ATH-derived and parabola weights for a `channels`-point grid, one-sided.
pub fn write_weights<W: Write>(out: W, ath: &ThresholdCurve, tau: f64, band: Band) -> Result<()> {
    let channels = (ath.len() - 1) * 2;
    let peak = ath.max_db();
    let curves = [
        weights_from_curve(&ath.values_db, CurveVariant::Inverse, tau)?,
        weights_from_curve(&ath.values_db, CurveVariant::Linear, tau)?,
        weights_from_curve(&ath.values_db, CurveVariant::Pressure, tau)?,
    ];
    let parabola = parabola_weights(channels);
    let mut w = csv_writer(out, &format!("{CURVES_SCHEMA} weights tau={tau}"))?;
    w.write_record([
        "bin_freq_hz",
        "ath_db",
        "ath_normalized",
        "w_ath1",
        "w_ath2",
        "w_ath3",
        "w_parabola",
    ])?;
    for (k, &f) in ath.bin_freqs.iter().enumerate() {
        if !band.contains(f) {
            continue;
        }
        let v = ath.values_db[k];
        w.write_record([
            f.to_string(),
            fmt_db(v),
            (v / peak).to_string(),
            curves[0][k].to_string(),
            curves[1][k].to_string(),
            curves[2][k].to_string(),
            parabola[k].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// PSD, ATH, GMT and the three GMT weight variants of one frame.
pub fn write_gmt<W: Write>(
    out: W,
    psd: &ThresholdCurve,
    ath: &ThresholdCurve,
    gmt: &ThresholdCurve,
    tau: f64,
    band: Band,
) -> Result<()> {
    let variants = [CurveVariant::Inverse, CurveVariant::Linear, CurveVariant::Pressure];
    let weights = variants
        .iter()
        .map(|&v| weights_from_curve(&gmt.values_db, v, tau))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let mut w = csv_writer(out, &format!("{CURVES_SCHEMA} gmt tau={tau}"))?;
    w.write_record(["bin_freq_hz", "psd_db", "ath_db", "gmt_db", "w_gmt1", "w_gmt2", "w_gmt3"])?;
    for (k, &f) in gmt.bin_freqs.iter().enumerate() {
        if !band.contains(f) {
            continue;
        }
        w.write_record([
            f.to_string(),
            fmt_db(psd.values_db[k]),
            fmt_db(ath.values_db[k]),
            fmt_db(gmt.values_db[k]),
            weights[0][k].to_string(),
            weights[1][k].to_string(),
            weights[2][k].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace<W: Write>(out: W, trace: &[f64]) -> Result<()> {
    let mut w = csv_writer(out, TRACE_SCHEMA)?;
    w.write_record(["iteration", "weighted_l1_objective"])?;
    for (i, v) in trace.iter().enumerate() {
        w.write_record([(i + 1).to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
