//! JSON-lines shadow files.
//!
//! ```text
//! {"format":"fshadow-v1","m":3,"n":2,"source":"simulated/pnr","root_seed":7}
//! {"seed":1234,"n":2,"outcomes":[[[1,1,0],3],[[0,2,0],1]]}
//! {"unitary":[[0.5,0.1],...],"n":2,"outcomes":[]}
//! ```
//!
//! Unitaries are written row-major as `[re, im]` pairs. Floats go through
//! shortest round-trip formatting, so reading a file back is bit-exact.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{ClassicalShadow, Provenance, ShadowRecord, UnitarySource};
use crate::error::{Error, Result};
use crate::fock::{ModeOccupation, UnitaryMatrix};
use crate::linalg::CMatrix;

pub const SHADOW_FORMAT: &str = "fshadow-v1";

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[serde(flatten)]
    provenance: Provenance,
}

#[derive(Serialize, Deserialize)]
struct Line {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    unitary: Option<Vec<[f64; 2]>>,
    n: usize,
    outcomes: Vec<(Vec<u32>, u64)>,
}

impl ClassicalShadow {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        write_shadow(&mut w, self)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        read_shadow(BufReader::new(File::open(path)?))
    }
}

pub fn write_shadow(w: &mut impl Write, shadow: &ClassicalShadow) -> Result<()> {
    let header = Header {
        format: SHADOW_FORMAT.into(),
        m: shadow.m,
        n: Some(shadow.n),
        provenance: shadow.provenance.clone(),
    };
    serde_json::to_writer(&mut *w, &header)?;
    w.write_all(b"\n")?;
    for r in &shadow.records {
        let (seed, unitary) = match &r.unitary {
            UnitarySource::Seed(s) => (Some(*s), None),
            UnitarySource::Matrix(u) => {
                let m = u.matrix();
                let flat = (0..m.nrows())
                    .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
                    .map(|(i, j)| [m[(i, j)].re, m[(i, j)].im])
                    .collect();
                (None, Some(flat))
            }
        };
        let line = Line {
            seed,
            unitary,
            n: r.n,
            outcomes: r.outcomes.iter().map(|(s, c)| (s.as_slice().to_vec(), *c)).collect(),
        };
        serde_json::to_writer(&mut *w, &line)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_shadow(r: impl BufRead) -> Result<ClassicalShadow> {
    let mut lines = r.lines().enumerate().filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
    let (_, first) = lines.next().ok_or_else(|| Error::InvalidInput("shadow file is empty".into()))?;
    let header: Header = serde_json::from_str(&first?)?;
    if header.format != SHADOW_FORMAT {
        return Err(Error::InvalidInput(format!("unknown shadow format {:?}", header.format)));
    }
    let m = header.m;
    let mut records = Vec::new();
    let mut n = header.n;
    for (lineno, line) in lines {
        let line: Line = serde_json::from_str(&line?)?;
        let context = |e: Error| Error::InvalidInput(format!("line {}: {e}", lineno + 1));
        let unitary = match (line.seed, line.unitary) {
            (Some(s), None) => UnitarySource::Seed(s),
            (None, Some(flat)) => {
                if flat.len() != m * m {
                    return Err(context(Error::DimensionMismatch { expected: m * m, found: flat.len() }));
                }
                let mat = CMatrix::from_fn(m, m, |i, j| {
                    let [re, im] = flat[i * m + j];
                    Complex64::new(re, im)
                });
                UnitarySource::Matrix(UnitaryMatrix::new(mat).map_err(context)?)
            }
            _ => return Err(context(Error::InvalidInput("record needs exactly one of seed or unitary".into()))),
        };
        let outcomes = line
            .outcomes
            .into_iter()
            .map(|(occ, c)| Ok((ModeOccupation::new(occ)?, c)))
            .collect::<Result<Vec<_>>>()
            .map_err(context)?;
        let expected = *n.get_or_insert(line.n);
        if line.n != expected {
            return Err(context(Error::PhotonMismatch { expected, found: line.n }));
        }
        records.push(ShadowRecord::new(unitary, line.n, outcomes).map_err(context)?);
    }
    let n = n.ok_or_else(|| Error::InvalidInput("photon number missing from shadow file".into()))?;
    ClassicalShadow::new(m, n, records, header.provenance)
}
