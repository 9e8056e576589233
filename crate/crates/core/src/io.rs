//! On-disk formats for ensembles and behavior tables.
//!
//! Ensembles are JSON documents
//! `{"dim": d, "states": [[[re, im], ...], {"rho": [[[re, im], ...], ...]}, ...]}`
//! where each entry is either a ket or a density matrix. Behavior tables are
//! CSV with the header `x,y1,y2,b,probability`, 1-based labels, outcomes
//! `1`, `2` or `perp`, and an optional `# n_states=N dim=d` line in front.
//! Every float is written with 17 significant digits.

use std::collections::HashMap;
use std::io::{self, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::designs::{State, StateEnsemble};
use crate::error::{Error, Result};
use crate::qmath::{CMat, CVec};
use crate::usd::{BehaviorTable, Outcome, Pair};

#[derive(Debug, Serialize, Deserialize)]
struct EnsembleDoc {
    dim: usize,
    states: Vec<StateDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum StateDoc {
    Pure(Vec<[f64; 2]>),
    Mixed { rho: Vec<Vec<[f64; 2]>> },
}

fn to_pair(z: &Complex64) -> [f64; 2] {
    [z.re, z.im]
}

fn from_pair(p: &[f64; 2]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

/// JSON formatter that prints floats in scientific notation with 17
/// significant digits.
struct PreciseFloats;

impl serde_json::ser::Formatter for PreciseFloats {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{}", format_float(value))
    }
}

/// Scientific notation with 17 significant digits.
pub fn format_float(value: f64) -> String {
    format!("{value:.16e}")
}

pub fn write_ensemble<W: Write>(ens: &StateEnsemble, mut writer: W) -> Result<()> {
    let doc = EnsembleDoc {
        dim: ens.dim(),
        states: ens
            .states()
            .iter()
            .map(|s| match s {
                State::Pure(v) => StateDoc::Pure(v.entries().iter().map(to_pair).collect()),
                State::Mixed(m) => StateDoc::Mixed {
                    rho: (0..m.dim()).map(|i| m.row(i).iter().map(to_pair).collect()).collect(),
                },
            })
            .collect(),
    };
    let mut ser = serde_json::Serializer::with_formatter(&mut writer, PreciseFloats);
    doc.serialize(&mut ser).map_err(|e| Error::Format(e.to_string()))?;
    writer.write_all(b"\n")?;
    Ok(())
}

pub fn ensemble_to_string(ens: &StateEnsemble) -> String {
    let mut buf = Vec::new();
    write_ensemble(ens, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("JSON output is UTF-8")
}

pub fn read_ensemble<R: Read>(reader: R) -> Result<StateEnsemble> {
    let doc: EnsembleDoc = serde_json::from_reader(reader).map_err(|e| Error::Format(e.to_string()))?;
    let states = doc
        .states
        .iter()
        .map(|s| match s {
            StateDoc::Pure(entries) => State::Pure(CVec::new(entries.iter().map(from_pair).collect())),
            StateDoc::Mixed { rho } => State::Mixed(
                CMat::from_rows(rho.iter().map(|r| r.iter().map(from_pair).collect()).collect())
                    .unwrap_or_else(|_| CMat::zeros(0)),
            ),
        })
        .collect();
    StateEnsemble::new(doc.dim, states).map_err(|e| Error::Format(e.to_string()))
}

/// Reads Bloch vectors, three numbers per line separated by whitespace or
/// commas; `#` starts a comment.
pub fn read_bloch_vertices<R: Read>(mut reader: R) -> Result<Vec<[f64; 3]>> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let nums: Vec<f64> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Format(format!("line {}: {e}", lineno + 1)))?;
        if nums.len() != 3 {
            return Err(Error::Format(format!(
                "line {}: expected 3 coordinates, got {}",
                lineno + 1,
                nums.len()
            )));
        }
        out.push([nums[0], nums[1], nums[2]]);
    }
    Ok(out)
}

pub const BEHAVIOR_HEADER: [&str; 5] = ["x", "y1", "y2", "b", "probability"];

#[derive(Debug, Serialize, Deserialize)]
struct BehaviorRow {
    x: usize,
    y1: usize,
    y2: usize,
    b: String,
    probability: String,
}

pub fn write_behavior<W: Write>(behavior: &BehaviorTable, mut writer: W) -> Result<()> {
    writeln!(writer, "# n_states={} dim={}", behavior.n_states(), behavior.dim())?;
    let mut csv = csv::Writer::from_writer(writer);
    for (x, y, cell) in behavior.cells() {
        for b in Outcome::ALL {
            csv.serialize(BehaviorRow {
                x: x + 1,
                y1: y.first + 1,
                y2: y.second + 1,
                b: b.label().to_string(),
                probability: format_float(cell[b.index()]),
            })
            .map_err(|e| Error::Format(e.to_string()))?;
        }
    }
    csv.flush()?;
    Ok(())
}

pub fn behavior_to_string(behavior: &BehaviorTable) -> String {
    let mut buf = Vec::new();
    write_behavior(behavior, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("CSV output is UTF-8")
}

fn parse_metadata(line: &str) -> (Option<usize>, Option<usize>) {
    let mut n = None;
    let mut d = None;
    for token in line.trim_start_matches('#').split_whitespace() {
        if let Some((k, v)) = token.split_once('=') {
            match k {
                "n_states" => n = v.parse().ok(),
                "dim" => d = v.parse().ok(),
                _ => {}
            }
        }
    }
    (n, d)
}

/// Parses a behavior table. The dimension comes from the metadata line, or
/// from `dim_hint` when the file has none.
pub fn read_behavior<R: Read>(mut reader: R, dim_hint: Option<usize>) -> Result<BehaviorTable> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    let (mut n_meta, mut d_meta) = (None, None);
    for line in text.lines().take_while(|l| l.trim_start().starts_with('#')) {
        if !line.trim_start_matches('#').trim_start().starts_with("n_states=") {
            continue;
        }
        let (n, d) = parse_metadata(line);
        n_meta = n_meta.or(n);
        d_meta = d_meta.or(d);
    }
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| Error::Format(e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != BEHAVIOR_HEADER {
        return Err(Error::Format(format!(
            "expected header {}, found {}",
            BEHAVIOR_HEADER.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut entries: HashMap<(usize, usize, usize, Outcome), f64> = HashMap::new();
    let mut max_label = 0;
    for (i, row) in rdr.deserialize::<BehaviorRow>().enumerate() {
        let row = row.map_err(|e| Error::Format(format!("row {}: {e}", i + 1)))?;
        let b = Outcome::from_label(&row.b)
            .ok_or_else(|| Error::Format(format!("row {}: unknown outcome {:?}", i + 1, row.b)))?;
        let p: f64 = row
            .probability
            .parse()
            .map_err(|e| Error::Format(format!("row {}: {e}", i + 1)))?;
        if row.x == 0 || row.y1 == 0 || row.y1 >= row.y2 {
            return Err(Error::Format(format!(
                "row {}: labels must be 1-based with y1 < y2",
                i + 1
            )));
        }
        max_label = max_label.max(row.x).max(row.y2);
        if entries.insert((row.x - 1, row.y1 - 1, row.y2 - 1, b), p).is_some() {
            return Err(Error::Format(format!("row {}: duplicate entry", i + 1)));
        }
    }
    let n = n_meta.unwrap_or(max_label);
    if max_label > n {
        return Err(Error::Format(format!("label {max_label} exceeds n_states = {n}")));
    }
    let dim = d_meta
        .or(dim_hint)
        .ok_or_else(|| Error::Format("behavior file carries no dimension; supply one".into()))?;
    let expected = Pair::count(n) * n * 3;
    if entries.len() != expected {
        return Err(Error::Format(format!(
            "expected {expected} rows for N = {n}, found {}",
            entries.len()
        )));
    }
    let mut probs = Vec::with_capacity(Pair::count(n) * n);
    for y in Pair::all(n) {
        for x in 0..n {
            let mut cell = [0.0; 3];
            for b in Outcome::ALL {
                cell[b.index()] = *entries
                    .get(&(x, y.first, y.second, b))
                    .ok_or_else(|| Error::Format(format!("missing x={} y=({}, {}) b={b}", x + 1, y.first + 1, y.second + 1)))?;
            }
            probs.push(cell);
        }
    }
    BehaviorTable::new(n, dim, probs).map_err(|e| match e {
        Error::Format(m) => Error::Format(m),
        other => Error::Format(other.to_string()),
    })
}

/// Writes `contents` to `path` through a temporary file in the same directory
/// followed by a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}
