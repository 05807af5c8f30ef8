//! Binary checkpoints and deterministic CSV/JSON reports.
//!
//! Checkpoint layout, all little-endian:
//!
//! | bytes | content |
//! |---|---|
//! | 5 | magic `YMTG1` |
//! | 4 | `n` (u32) |
//! | 8 | period `L` (f64) |
//! | 4 | coefficients per field (u32) |
//! | 1 | representation (0 physical, 1 spectral) |
//! | 4 | number of stored scalar components (u32) |
//! | 8 | time (f64) |
//! | … | `re, im` pairs (f64), ordered by component, coefficient, grid index |

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolution::{DiagnosticsRecord, State};
use crate::grid::{Repr, ScalarField, TorusGrid, VectorField};

pub const MAGIC: &[u8; 5] = b"YMTG1";
const HEADER_LEN: usize = 5 + 4 + 8 + 4 + 1 + 4 + 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckpointHeader {
    pub grid: TorusGrid,
    pub dim: usize,
    pub repr: Repr,
    pub components: usize,
    pub time: f64,
}

fn encode(header: &CheckpointHeader, comps: &[&ScalarField]) -> Vec<u8> {
    let npts = header.grid.points();
    let mut out = Vec::with_capacity(HEADER_LEN + comps.len() * header.dim * npts * 16);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(header.grid.n() as u32).to_le_bytes());
    out.extend_from_slice(&header.grid.length().to_le_bytes());
    out.extend_from_slice(&(header.dim as u32).to_le_bytes());
    out.push(match header.repr {
        Repr::Physical => 0,
        Repr::Spectral => 1,
    });
    out.extend_from_slice(&(comps.len() as u32).to_le_bytes());
    out.extend_from_slice(&header.time.to_le_bytes());
    for c in comps {
        for v in c.data() {
            out.extend_from_slice(&v.re.to_le_bytes());
            out.extend_from_slice(&v.im.to_le_bytes());
        }
    }
    out
}

fn corrupt<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::DataCorruption(msg.into()))
}

fn decode(bytes: &[u8]) -> Result<(CheckpointHeader, Vec<ScalarField>)> {
    if bytes.len() < 5 {
        return corrupt("file too short for a checkpoint header");
    }
    if &bytes[..4] == b"YMTG" && bytes[4] != MAGIC[4] {
        return Err(Error::UnsupportedVersion(format!(
            "found magic {:?}, this build reads {:?}",
            String::from_utf8_lossy(&bytes[..5]),
            String::from_utf8_lossy(MAGIC)
        )));
    }
    if &bytes[..5] != MAGIC {
        return corrupt("not a checkpoint (bad magic)");
    }
    if bytes.len() < HEADER_LEN {
        return corrupt("truncated checkpoint header");
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes")) as usize;
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
    let n = u32_at(5);
    let length = f64_at(9);
    let dim = u32_at(17);
    let repr = match bytes[21] {
        0 => Repr::Physical,
        1 => Repr::Spectral,
        r => return corrupt(format!("unknown representation tag {r}")),
    };
    let components = u32_at(22);
    let time = f64_at(26);
    let grid = TorusGrid::new(n, length).or_else(|e| corrupt(format!("bad grid in header: {e}")))?;
    if dim == 0 || components == 0 {
        return corrupt("empty checkpoint payload");
    }
    let block = dim * grid.points();
    let expected = HEADER_LEN + components * block * 16;
    if bytes.len() != expected {
        return corrupt(format!("payload has {} bytes, header implies {}", bytes.len(), expected));
    }
    let mut fields = Vec::with_capacity(components);
    let mut o = HEADER_LEN;
    for _ in 0..components {
        let mut data = Vec::with_capacity(block);
        for _ in 0..block {
            data.push(Complex64::new(f64_at(o), f64_at(o + 8)));
            o += 16;
        }
        fields.push(ScalarField::from_data(grid, dim, repr, data)?);
    }
    Ok((CheckpointHeader { grid, dim, repr, components, time }, fields))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(bytes)?;
    f.sync_all()?;
    Ok(())
}

fn uniform(fields: &[&ScalarField]) -> Vec<ScalarField> {
    let repr = if fields.iter().all(|f| f.repr() == Repr::Physical) {
        Repr::Physical
    } else {
        Repr::Spectral
    };
    fields.iter().map(|f| (*f).clone().into_repr_unchecked(repr)).collect()
}

/// Writes scalar components sharing a grid. Mixed representations are stored spectrally.
pub fn write_fields(path: &Path, fields: &[&ScalarField], time: f64) -> Result<()> {
    let first = fields
        .first()
        .ok_or_else(|| Error::Precondition("nothing to checkpoint".into()))?;
    if fields.iter().any(|f| f.grid() != first.grid() || f.dim() != first.dim()) {
        return Err(Error::InvalidInput("checkpoint components do not share a layout".into()));
    }
    let same = uniform(fields);
    let header = CheckpointHeader {
        grid: *first.grid(),
        dim: first.dim(),
        repr: same[0].repr(),
        components: fields.len(),
        time,
    };
    write_file(path, &encode(&header, &same.iter().collect::<Vec<_>>()))
}

pub fn read_fields(path: &Path) -> Result<(CheckpointHeader, Vec<ScalarField>)> {
    decode(&fs::read(path)?)
}

/// `A^df`, `∂_t A^df`, `A^cf` as nine components.
pub fn write_state(path: &Path, state: &State) -> Result<()> {
    let comps: Vec<&ScalarField> = [&state.adf, &state.adf_t, &state.acf]
        .into_iter()
        .flat_map(|v| v.comps().iter())
        .collect();
    write_fields(path, &comps, state.t)
}

/// Reads a state; `expect` gives the grid size and algebra dimension it must match.
pub fn read_state(path: &Path, expect: Option<(usize, usize)>) -> Result<State> {
    let (h, fields) = read_fields(path)?;
    check_expect(&h, expect)?;
    if h.components != 9 {
        return Err(Error::InvalidInput(format!("a state has 9 components, file has {}", h.components)));
    }
    let mut it = fields.into_iter();
    let mut next = || -> Result<VectorField> {
        VectorField::new([(); 3].map(|_| it.next().expect("nine components")))
    };
    let (adf, adf_t, acf) = (next()?, next()?, next()?);
    Ok(State::new(h.time, adf, adf_t, acf))
}

pub fn write_vector(path: &Path, v: &VectorField) -> Result<()> {
    let comps: Vec<&ScalarField> = v.comps().iter().collect();
    write_fields(path, &comps, 0.0)
}

pub fn read_vector(path: &Path, expect: Option<(usize, usize)>) -> Result<VectorField> {
    let (h, fields) = read_fields(path)?;
    check_expect(&h, expect)?;
    let k = fields.len();
    let arr: [ScalarField; 3] = fields
        .try_into()
        .map_err(|_| Error::InvalidInput(format!("a vector field has 3 components, file has {k}")))?;
    VectorField::new(arr)
}

fn check_expect(h: &CheckpointHeader, expect: Option<(usize, usize)>) -> Result<()> {
    if let Some((n, dim)) = expect {
        if h.grid.n() != n || h.dim != dim {
            return Err(Error::InvalidInput(format!(
                "checkpoint holds n={} dim={}, expected n={n} dim={dim}",
                h.grid.n(),
                h.dim
            )));
        }
    }
    Ok(())
}

/// Fixed-column CSV rows.
pub trait CsvRecord {
    fn header() -> &'static [&'static str];
    fn row(&self) -> Vec<f64>;
}

impl CsvRecord for DiagnosticsRecord {
    fn header() -> &'static [&'static str] {
        &[
            "t",
            "gauss_residual",
            "div_df_residual",
            "curl_cf_residual",
            "hs_adf",
            "hs_acf",
            "hamiltonian",
            "linear_energy",
        ]
    }

    fn row(&self) -> Vec<f64> {
        vec![
            self.t,
            self.gauss_residual,
            self.div_df_residual,
            self.curl_cf_residual,
            self.hs_adf,
            self.hs_acf,
            self.hamiltonian,
            self.linear_energy,
        ]
    }
}

/// Seventeen significant digits.
pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn csv_string<R: CsvRecord>(records: &[R]) -> Result<String> {
    if records.is_empty() {
        return Err(Error::Precondition("no records to report".into()));
    }
    let mut out = R::header().join(",");
    out.push('\n');
    for r in records {
        let cells: Vec<String> = r.row().into_iter().map(format_number).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    Ok(out)
}

/// Compact JSON with every float printed by [`format_number`]; non-finite values become `null`.
#[derive(Clone, Copy, Default)]
pub struct SeventeenDigits;

impl serde_json::ser::Formatter for SeventeenDigits {
    fn write_f64<W: ?Sized + std::io::Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        writer.write_all(format_number(value).as_bytes())
    }

    fn write_f32<W: ?Sized + std::io::Write>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

pub fn json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SeventeenDigits);
    value
        .serialize(&mut ser)
        .map_err(|e| Error::InvalidInput(format!("cannot serialize report: {e}")))?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl ReportFormat {
    /// From the file extension; anything but `.json` is CSV.
    pub fn for_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Self::Json,
            _ => Self::Csv,
        }
    }
}

/// Writes time-series records as CSV or as a JSON array.
pub fn emit_report<R: CsvRecord + Serialize>(records: &[R], format: ReportFormat, path: &Path) -> Result<()> {
    if records.is_empty() {
        return Err(Error::Precondition("no records to report".into()));
    }
    let text = match format {
        ReportFormat::Csv => csv_string(records)?,
        ReportFormat::Json => json_string(records)?,
    };
    write_file(path, text.as_bytes())
}

pub fn write_json<T: Serialize + ?Sized>(value: &T, path: &Path) -> Result<()> {
    write_file(path, json_string(value)?.as_bytes())
}
