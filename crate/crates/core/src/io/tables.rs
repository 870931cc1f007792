//! CSV and JSON payload formats.
//!
//! Every number is written with 12 significant digits in its shortest
//! round-tripping form. Payloads are assembled in memory and written in one
//! call, so a failed validation leaves nothing on disk.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::coupling::EigenBranches;
use crate::fitting::{RidgeData, RidgePoint};
use crate::magnon::FieldPoint;
use crate::phasemap::PhaseDiagram;
use crate::transmission::{MapMetadata, SpectrumMap, SweepGrid};
use crate::units::{from_db, GHZ_TO_RAD_PER_S};
use crate::{Complex64, Error, Result};

/// `x` rounded to 12 significant digits, printed in shortest form.
pub fn fmt_num(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn data_err(origin: &str, msg: impl std::fmt::Display) -> Error {
    Error::Data(format!("{origin}: {msg}"))
}

fn header_index(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers
        .iter()
        .position(|h| h.trim().eq_ignore_ascii_case(name))
}

fn parse_cell(rec: &csv::StringRecord, idx: usize, line: u64, origin: &str) -> Result<Option<f64>> {
    let cell = rec.get(idx).map(str::trim).unwrap_or("");
    if cell.is_empty() {
        return Ok(None);
    }
    cell.parse::<f64>()
        .map(Some)
        .map_err(|_| data_err(origin, format!("line {line}: {cell:?} is not a number")))
}

fn required(
    rec: &csv::StringRecord,
    idx: usize,
    line: u64,
    origin: &str,
    name: &str,
) -> Result<f64> {
    parse_cell(rec, idx, line, origin)?
        .ok_or_else(|| data_err(origin, format!("line {line}: missing {name}")))
}

fn records(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(text.as_bytes())
}

// ---------------------------------------------------------------- spectrum

/// Long format, field-major: `mu0_H_T,f_GHz,s21_linear,s21_dB`.
pub fn spectrum_csv(map: &SpectrumMap) -> Result<String> {
    let (nf, nw) = map.grid.shape();
    if nf == 0 || nw == 0 {
        return Err(Error::Data("refusing to write an empty spectrum".into()));
    }
    let mut out = String::from("mu0_H_T,f_GHz,s21_linear,s21_dB\n");
    for (i, h) in map.grid.field_axis().iter().enumerate() {
        let h = fmt_num(h.tesla());
        for (j, f) in map.grid.freq_axis().iter().enumerate() {
            let v = map.values[i][j];
            let _ = writeln!(
                out,
                "{h},{},{},{}",
                fmt_num(*f),
                fmt_num(v),
                fmt_num(map.db(i, j))
            );
        }
    }
    Ok(out)
}

pub fn write_spectrum_csv(path: &Path, map: &SpectrumMap) -> Result<()> {
    write_file(path, &spectrum_csv(map)?)
}

pub fn read_spectrum_csv(path: &Path) -> Result<SpectrumMap> {
    parse_spectrum_csv(&read_file(path)?, &path.display().to_string())
}

/// Reads a long-format grid. `s21_linear` wins over `s21_dB` when both are
/// present; dB values are converted with 10^(dB/20). Rows must be sorted by
/// field, then frequency.
pub fn parse_spectrum_csv(text: &str, origin: &str) -> Result<SpectrumMap> {
    let mut rdr = records(text);
    let headers = rdr.headers().map_err(|e| data_err(origin, e))?.clone();
    let ih = header_index(&headers, "mu0_H_T")
        .ok_or_else(|| data_err(origin, "missing column mu0_H_T"))?;
    let jf =
        header_index(&headers, "f_GHz").ok_or_else(|| data_err(origin, "missing column f_GHz"))?;
    let (iv, is_db) = match (
        header_index(&headers, "s21_linear"),
        header_index(&headers, "s21_dB"),
    ) {
        (Some(i), _) => (i, false),
        (None, Some(i)) => (i, true),
        (None, None) => return Err(data_err(origin, "need a s21_linear or s21_dB column")),
    };

    let mut cells: HashMap<(u64, u64), f64> = HashMap::new();
    let mut fields: Vec<f64> = Vec::new();
    let mut freqs: BTreeSet<u64> = BTreeSet::new();
    let mut last: Option<(f64, f64)> = None;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| data_err(origin, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let h = required(&rec, ih, line, origin, "mu0_H_T")?;
        let f = required(&rec, jf, line, origin, "f_GHz")?;
        let v = required(&rec, iv, line, origin, "magnitude")?;
        let v = if is_db { from_db(v) } else { v };
        if !(h.is_finite() && f.is_finite() && v.is_finite() && v >= 0.0) {
            return Err(data_err(origin, format!("line {line}: invalid values")));
        }
        let key = (h.to_bits(), f.to_bits());
        if cells.insert(key, v).is_some() {
            return Err(data_err(
                origin,
                format!("line {line}: duplicate coordinate ({h} T, {f} GHz)"),
            ));
        }
        if let Some((ph, pf)) = last {
            if h < ph || (h == ph && f <= pf) {
                return Err(data_err(
                    origin,
                    format!("line {line}: non-monotone axes at ({h} T, {f} GHz)"),
                ));
            }
        }
        if fields.last() != Some(&h) {
            fields.push(h);
        }
        freqs.insert(f.to_bits());
        last = Some((h, f));
    }
    let mut freqs: Vec<f64> = freqs.into_iter().map(f64::from_bits).collect();
    freqs.sort_by(f64::total_cmp);
    if fields.is_empty() {
        return Err(data_err(origin, "no data rows"));
    }

    let mut missing = Vec::new();
    let mut values = vec![vec![0.0; freqs.len()]; fields.len()];
    for (i, &h) in fields.iter().enumerate() {
        for (j, &f) in freqs.iter().enumerate() {
            match cells.get(&(h.to_bits(), f.to_bits())) {
                Some(&v) => values[i][j] = v,
                None => missing.push(format!("({h} T, {f} GHz)")),
            }
        }
    }
    if !missing.is_empty() {
        let n = missing.len();
        missing.truncate(10);
        return Err(data_err(
            origin,
            format!(
                "{n} missing cell(s): {}{}",
                missing.join(", "),
                if n > 10 { ", ..." } else { "" }
            ),
        ));
    }
    let axis = fields
        .into_iter()
        .map(FieldPoint::new)
        .collect::<Result<Vec<_>>>()
        .map_err(|e| data_err(origin, e))?;
    let grid = SweepGrid::new(axis, freqs).map_err(|e| data_err(origin, e))?;
    SpectrumMap::from_values(grid, values).map_err(|e| data_err(origin, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SpectrumJson {
    mu0_h_t: Vec<f64>,
    f_ghz: Vec<f64>,
    /// `s21_linear[field][freq]`, normalised to a maximum of 1.
    s21_linear: Vec<Vec<f64>>,
    scale: f64,
    saturated: Vec<(usize, usize)>,
    metadata: MapMetadata,
}

/// Same map as a JSON grid, keeping the normalisation scale and the
/// clamped-pole cells.
pub fn spectrum_json(map: &SpectrumMap) -> Result<String> {
    let (nf, nw) = map.grid.shape();
    if nf == 0 || nw == 0 {
        return Err(Error::Data("refusing to write an empty spectrum".into()));
    }
    let r = |v: &[f64]| {
        v.iter()
            .map(|&x| fmt_num(x).parse().expect("parses"))
            .collect::<Vec<f64>>()
    };
    let doc = SpectrumJson {
        mu0_h_t: r(&map
            .grid
            .field_axis()
            .iter()
            .map(|h| h.tesla())
            .collect::<Vec<_>>()),
        f_ghz: r(map.grid.freq_axis()),
        s21_linear: map.values.iter().map(|row| r(row)).collect(),
        scale: r(&[map.scale])[0],
        saturated: map.saturated.clone(),
        metadata: map.metadata.clone(),
    };
    let mut s = serde_json::to_string_pretty(&doc).map_err(|e| Error::Data(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn write_spectrum_json(path: &Path, map: &SpectrumMap) -> Result<()> {
    write_file(path, &spectrum_json(map)?)
}

pub fn read_spectrum_json(path: &Path) -> Result<SpectrumMap> {
    let origin = path.display().to_string();
    let doc: SpectrumJson =
        serde_json::from_str(&read_file(path)?).map_err(|e| data_err(&origin, e))?;
    let axis = doc
        .mu0_h_t
        .into_iter()
        .map(FieldPoint::new)
        .collect::<Result<Vec<_>>>()
        .map_err(|e| data_err(&origin, e))?;
    let grid = SweepGrid::new(axis, doc.f_ghz).map_err(|e| data_err(&origin, e))?;
    let mut map =
        SpectrumMap::from_values(grid, doc.s21_linear).map_err(|e| data_err(&origin, e))?;
    map.scale = doc.scale;
    map.saturated = doc.saturated;
    map.metadata = doc.metadata;
    Ok(map)
}

// ---------------------------------------------------------------- branches

/// `mu0_H_T,branch_id,f_GHz,linewidth_GHz`, with linewidth = −Im ω̃/2π.
pub fn branches_csv(b: &EigenBranches) -> Result<String> {
    if b.fields.is_empty() || b.branch_count() == 0 {
        return Err(Error::Data(
            "refusing to write empty branch trajectories".into(),
        ));
    }
    let mut out = String::from("mu0_H_T,branch_id,f_GHz,linewidth_GHz\n");
    for (i, h) in b.fields.iter().enumerate() {
        let h = fmt_num(h.tesla());
        for k in 0..b.branch_count() {
            let _ = writeln!(
                out,
                "{h},{k},{},{}",
                fmt_num(b.frequency_ghz(i, k)),
                fmt_num(b.half_linewidth_ghz(i, k))
            );
        }
    }
    Ok(out)
}

pub fn write_branches_csv(path: &Path, b: &EigenBranches) -> Result<()> {
    write_file(path, &branches_csv(b)?)
}

pub fn read_branches_csv(path: &Path) -> Result<EigenBranches> {
    parse_branches_csv(&read_file(path)?, &path.display().to_string())
}

pub fn parse_branches_csv(text: &str, origin: &str) -> Result<EigenBranches> {
    let mut rdr = records(text);
    let headers = rdr.headers().map_err(|e| data_err(origin, e))?.clone();
    let col = |n: &str| {
        header_index(&headers, n).ok_or_else(|| data_err(origin, format!("missing column {n}")))
    };
    let (ih, ib, jf, jl) = (
        col("mu0_H_T")?,
        col("branch_id")?,
        col("f_GHz")?,
        col("linewidth_GHz")?,
    );
    let mut fields: Vec<f64> = Vec::new();
    let mut eig: Vec<Vec<Complex64>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| data_err(origin, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let h = required(&rec, ih, line, origin, "mu0_H_T")?;
        let id = required(&rec, ib, line, origin, "branch_id")?;
        let f = required(&rec, jf, line, origin, "f_GHz")?;
        let lw = required(&rec, jl, line, origin, "linewidth_GHz")?;
        if fields.last() != Some(&h) {
            if fields.last().is_some_and(|&p| h < p) {
                return Err(data_err(
                    origin,
                    format!("line {line}: fields must increase"),
                ));
            }
            fields.push(h);
            eig.push(Vec::new());
        }
        let row = eig.last_mut().expect("row pushed");
        if id != row.len() as f64 {
            return Err(data_err(
                origin,
                format!("line {line}: expected branch_id {}", row.len()),
            ));
        }
        row.push(Complex64::new(f, -lw) * GHZ_TO_RAD_PER_S);
    }
    if eig.is_empty() || eig.iter().any(|r| r.len() != eig[0].len()) {
        return Err(data_err(origin, "ragged or empty branch table"));
    }
    let fields = fields
        .into_iter()
        .map(FieldPoint::new)
        .collect::<Result<Vec<_>>>()
        .map_err(|e| data_err(origin, e))?;
    Ok(EigenBranches {
        fields,
        eigenvalues: eig,
    })
}

// ----------------------------------------------------------- phase diagram

/// `d,psi_deg,regime,gap_GHz,gap_kind`, damping-major.
pub fn phase_cells_csv(pd: &PhaseDiagram) -> Result<String> {
    if pd.damping_axis.is_empty() || pd.psi_axis.is_empty() {
        return Err(Error::Data(
            "refusing to write an empty phase diagram".into(),
        ));
    }
    let mut out = String::from("d,psi_deg,regime,gap_GHz,gap_kind\n");
    for (i, d) in pd.damping_axis.iter().enumerate() {
        let d = fmt_num(*d);
        for (j, psi) in pd.psi_axis.iter().enumerate() {
            let c = &pd.cells[i][j];
            let _ = writeln!(
                out,
                "{d},{},{},{},{}",
                fmt_num(*psi),
                c.regime.as_str(),
                fmt_num(c.delta.gap_ghz),
                c.delta.kind.as_str()
            );
        }
    }
    Ok(out)
}

/// `d,psi_star_deg` polyline.
pub fn phase_boundary_csv(pd: &PhaseDiagram) -> String {
    let mut out = String::from("d,psi_star_deg\n");
    for (d, psi) in &pd.boundary {
        let _ = writeln!(out, "{},{}", fmt_num(*d), fmt_num(*psi));
    }
    out
}

pub fn read_phase_boundary_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let origin = path.display().to_string();
    let text = read_file(path)?;
    let mut rdr = records(&text);
    let headers = rdr.headers().map_err(|e| data_err(&origin, e))?.clone();
    let id = header_index(&headers, "d").ok_or_else(|| data_err(&origin, "missing column d"))?;
    let ip = header_index(&headers, "psi_star_deg")
        .ok_or_else(|| data_err(&origin, "missing column psi_star_deg"))?;
    rdr.records()
        .map(|rec| {
            let rec = rec.map_err(|e| data_err(&origin, e))?;
            let line = rec.position().map_or(0, |p| p.line());
            Ok((
                required(&rec, id, line, &origin, "d")?,
                required(&rec, ip, line, &origin, "psi_star_deg")?,
            ))
        })
        .collect()
}

// ------------------------------------------------------------------ ridges

/// `mu0_H_T,f_upper_GHz,f_lower_GHz,weight`; an empty cell is an absent
/// branch.
pub fn ridges_csv(r: &RidgeData) -> String {
    let opt = |v: Option<f64>| v.map(fmt_num).unwrap_or_default();
    let mut out = String::from("mu0_H_T,f_upper_GHz,f_lower_GHz,weight\n");
    for p in r.points() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_num(p.mu0_h_t),
            opt(p.f_upper),
            opt(p.f_lower),
            fmt_num(p.weight)
        );
    }
    out
}

pub fn write_ridges_csv(path: &Path, r: &RidgeData) -> Result<()> {
    write_file(path, &ridges_csv(r))
}

pub fn read_ridges_csv(path: &Path) -> Result<RidgeData> {
    parse_ridges_csv(&read_file(path)?, &path.display().to_string())
}

/// A missing weight column means unit weights.
pub fn parse_ridges_csv(text: &str, origin: &str) -> Result<RidgeData> {
    let mut rdr = records(text);
    let headers = rdr.headers().map_err(|e| data_err(origin, e))?.clone();
    let col = |n: &str| {
        header_index(&headers, n).ok_or_else(|| data_err(origin, format!("missing column {n}")))
    };
    let (ih, iu, il) = (col("mu0_H_T")?, col("f_upper_GHz")?, col("f_lower_GHz")?);
    let iw = header_index(&headers, "weight");
    let mut points = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| data_err(origin, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let mut f_upper = parse_cell(&rec, iu, line, origin)?;
        let mut f_lower = parse_cell(&rec, il, line, origin)?;
        if f_upper.is_none() {
            std::mem::swap(&mut f_upper, &mut f_lower);
        }
        let weight = match iw {
            Some(i) => parse_cell(&rec, i, line, origin)?.unwrap_or(1.0),
            None => 1.0,
        };
        points.push(RidgePoint {
            mu0_h_t: required(&rec, ih, line, origin, "mu0_H_T")?,
            f_upper,
            f_lower,
            weight,
        });
    }
    RidgeData::new(points).map_err(|e| match e {
        Error::Data(m) => data_err(origin, m),
        other => other,
    })
}

// ------------------------------------------------------------------ others

/// `mu0_H_T,f_GHz`.
pub fn kittel_csv(curve: &[(f64, f64)]) -> Result<String> {
    if curve.is_empty() {
        return Err(Error::Data(
            "refusing to write an empty Kittel curve".into(),
        ));
    }
    let mut out = String::from("mu0_H_T,f_GHz\n");
    for (h, f) in curve {
        let _ = writeln!(out, "{},{}", fmt_num(*h), fmt_num(*f));
    }
    Ok(out)
}

/// `iteration,objective_GHz2`.
pub fn trace_csv(trace: &[f64]) -> String {
    let mut out = String::from("iteration,objective_GHz2\n");
    for (i, v) in trace.iter().enumerate() {
        let _ = writeln!(out, "{i},{}", fmt_num(*v));
    }
    out
}
