// Copyright 2026 The chiralwg Authors
// SPDX-License-Identifier: Apache-2.0

//! Byte-stable CSV and JSON artifacts.
//!
//! Floats in CSV files are written with 17 significant digits and every file
//! ends lines with `\n`. Nothing time- or host-dependent is written, so the
//! bytes are a function of the configuration and the tool version only.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::dynamics::Monitor;
use crate::molecule::{Q1, Q2, R1, R2};
use crate::observables::MetricSet;
use crate::protocols::{Health, ProtocolReport};
use crate::sweeps::SweepResult;

pub const TIMESERIES_COLUMNS: [&str; 11] =
    ["t", "n_R", "n_L", "beta_R_re", "beta_R_im", "beta_L_re", "beta_L_im", "pop_1", "pop_2", "trace_dev", "min_eig"];

pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 output")
}

pub fn timeseries_csv(report: &ProtocolReport) -> String {
    let fs = &report.flux;
    let pick = |a: &str, b: &str| fs.population(a).or_else(|| fs.population(b)).map(<[f64]>::to_vec);
    let len = fs.len();
    let pop1 = pick(Q1, R1).unwrap_or_else(|| vec![0.0; len]);
    let pop2 = pick(Q2, R2).unwrap_or_else(|| vec![0.0; len]);
    let mut w = csv_writer();
    w.write_record(TIMESERIES_COLUMNS).expect("in-memory write");
    for k in 0..len {
        let m = report.monitors.get(k).copied().unwrap_or(Monitor {
            trace_dev: f64::NAN,
            min_eig: f64::NAN,
            herm: f64::NAN,
            leakage: f64::NAN,
        });
        let row = [
            fs.times[k],
            fs.n_r[k],
            fs.n_l[k],
            fs.beta_r[k].re,
            fs.beta_r[k].im,
            fs.beta_l[k].re,
            fs.beta_l[k].im,
            pop1[k],
            pop2[k],
            m.trace_dev,
            m.min_eig,
        ];
        w.write_record(row.iter().map(|x| fmt_float(*x))).expect("in-memory write");
    }
    finish(w)
}

#[derive(Serialize)]
struct StateJson {
    dim: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct RunMetricsJson<'a> {
    protocol: &'a str,
    design: &'a str,
    direction: Option<&'a str>,
    metrics: &'a MetricSet,
    oracle_deviation: Option<f64>,
    health: &'a Health,
    dt: f64,
    samples: usize,
    final_molecule_state: StateJson,
}

pub fn metrics_json(report: &ProtocolReport, direction: Option<&str>) -> String {
    let rho = &report.final_molecule_state;
    let n = rho.dim();
    let state = StateJson {
        dim: n,
        re: (0..n).map(|i| (0..n).map(|j| rho[(i, j)].re).collect()).collect(),
        im: (0..n).map(|i| (0..n).map(|j| rho[(i, j)].im).collect()).collect(),
    };
    let doc = RunMetricsJson {
        protocol: report.protocol.name(),
        design: report.config.design.name(),
        direction,
        metrics: &report.metrics,
        oracle_deviation: report.oracle_deviation,
        health: &report.health,
        dt: report.dt,
        samples: report.flux.len(),
        final_molecule_state: state,
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("metrics serialize");
    s.push('\n');
    s
}

pub fn sweep_csv(result: &SweepResult) -> String {
    let mut w = csv_writer();
    let mut header: Vec<String> = result.axes.clone();
    header.extend(MetricSet::NAMES.iter().map(|s| s.to_string()));
    header.push("healthy".into());
    header.push("error".into());
    w.write_record(&header).expect("in-memory write");
    for p in &result.points {
        let mut row: Vec<String> = p.coords.iter().map(|x| fmt_float(*x)).collect();
        match &p.metrics {
            Some(m) => row.extend(m.values().iter().map(|v| v.map(fmt_float).unwrap_or_default())),
            None => row.extend(std::iter::repeat_n(String::new(), MetricSet::NAMES.len())),
        }
        row.push(p.healthy.to_string());
        row.push(p.error.clone().unwrap_or_default());
        w.write_record(&row).expect("in-memory write");
    }
    finish(w)
}

#[derive(Serialize)]
struct SweepSummaryJson<'a> {
    sweep: &'a str,
    axes: &'a [String],
    points: usize,
    healthy_points: usize,
    failed_points: Vec<usize>,
}

pub fn sweep_summary_json(name: &str, result: &SweepResult) -> String {
    let failed: Vec<usize> =
        result.points.iter().filter(|p| !p.healthy || p.error.is_some()).map(|p| p.index).collect();
    let doc = SweepSummaryJson {
        sweep: name,
        axes: &result.axes,
        points: result.points.len(),
        healthy_points: result.points.len() - failed.len(),
        failed_points: failed,
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("summary serialize");
    s.push('\n');
    s
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Serialize)]
struct ManifestJson<'a> {
    tool: &'a str,
    version: &'a str,
    command: &'a str,
    target: &'a str,
    units: &'a str,
    config: &'a str,
    files: BTreeMap<&'a str, String>,
    content_hash: String,
}

pub const UNITS: &str = "rates share the unit of gamma_ph (gamma_ph = 1 unless set); times in the inverse unit";

/// Manifest describing the other files of a bundle.
pub fn manifest_json(command: &str, target: &str, config_toml: &str, files: &[(&str, String)]) -> String {
    let hashes: BTreeMap<&str, String> =
        files.iter().map(|(name, body)| (*name, sha256_hex(body.as_bytes()))).collect();
    let mut combined = String::new();
    for (name, hash) in &hashes {
        combined.push_str(&format!("{hash}  {name}\n"));
    }
    let doc = ManifestJson {
        tool: "chiralwg",
        version: env!("CARGO_PKG_VERSION"),
        command,
        target,
        units: UNITS,
        config: config_toml,
        content_hash: sha256_hex(combined.as_bytes()),
        files: hashes,
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("manifest serialize");
    s.push('\n');
    s
}

pub fn write_files(dir: &Path, files: &[(&str, String)]) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    for (name, body) in files {
        fs::write(dir.join(name), body)?;
    }
    Ok(())
}
