//! Binary checkpoints of the stepper state and its diagnostics.
//!
//! Layout, all little endian: the magic `NHCK`, a `u32` format version,
//! grid metadata (`u32` dim, `u32` points per axis, `f64` period), the time
//! and step, the two Strichartz accumulators, the named fields (samples as
//! `f64`), then the diagnostics rows.

use std::io::Write;
use std::path::Path;

use thiserror::Error;

use elastowave::solver::{DiagnosticsRecord, DiagnosticsRow, StepperState};
use elastowave::spectral::{Field, Grid, Rank};

pub const MAGIC: [u8; 4] = *b"NHCK";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a checkpoint (bad magic)")]
    Magic,
    #[error("checkpoint format version {found} is not supported (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("malformed checkpoint: {0}")]
    Format(String),
    #[error(transparent)]
    Core(#[from] elastowave::Error),
}

/// Stepper state plus the diagnostics recorded up to it.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub state: StepperState<f64>,
    pub record: DiagnosticsRecord,
}

fn rank_code(r: Rank) -> u8 {
    match r {
        Rank::Scalar => 0,
        Rank::Vector => 1,
        Rank::Matrix => 2,
    }
}

fn put_field(out: &mut Vec<u8>, name: &str, f: &Field<f64>) {
    out.push(name.len() as u8);
    out.extend_from_slice(name.as_bytes());
    out.push(rank_code(f.rank()));
    out.extend_from_slice(&(f.num_components() as u32).to_le_bytes());
    for c in f.components() {
        for v in c {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
}

pub fn encode(ck: &Checkpoint) -> Vec<u8> {
    let st = &ck.state;
    let grid = st.grid();
    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(grid.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(grid.points_per_axis() as u32).to_le_bytes());
    out.extend_from_slice(&grid.period().to_le_bytes());
    out.extend_from_slice(&st.t.to_le_bytes());
    out.extend_from_slice(&st.step.to_le_bytes());
    for a in st.strichartz {
        out.extend_from_slice(&a.to_le_bytes());
    }
    let mut fields: Vec<(&str, &Field<f64>)> = vec![("u", &st.u), ("v", &st.v), ("g", &st.g), ("w", &st.w)];
    if let Some(p) = &st.p {
        fields.push(("p", p));
    }
    out.push(fields.len() as u8);
    for (name, f) in fields {
        put_field(&mut out, name, f);
    }
    out.extend_from_slice(&ck.record.s.to_le_bytes());
    out.extend_from_slice(&(ck.record.rows.len() as u64).to_le_bytes());
    out.extend_from_slice(&(DiagnosticsRow::COLUMNS.len() as u32).to_le_bytes());
    for row in &ck.record.rows {
        for v in row.values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out.extend_from_slice(&(ck.record.picard_factors.len() as u64).to_le_bytes());
    for f in &ck.record.picard_factors {
        out.extend_from_slice(&f.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| CheckpointError::Format(format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8, CheckpointError> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn f64(&mut self) -> Result<f64, CheckpointError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn decode(bytes: &[u8]) -> Result<Checkpoint, CheckpointError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4).map_err(|_| CheckpointError::Magic)? != MAGIC {
        return Err(CheckpointError::Magic);
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(CheckpointError::Version { found: version, expected: VERSION });
    }
    let dim = r.u32()? as usize;
    let n = r.u32()? as usize;
    let period = r.f64()?;
    let grid = Grid::<f64>::new(dim, n, period)?;
    let t = r.f64()?;
    let step = r.u64()?;
    let strichartz = [r.f64()?, r.f64()?];
    let count = r.u8()?;
    let mut fields = std::collections::BTreeMap::new();
    for _ in 0..count {
        let len = r.u8()? as usize;
        let name = String::from_utf8(r.take(len)?.to_vec()).map_err(|_| CheckpointError::Format("field name".into()))?;
        let rank = match r.u8()? {
            0 => Rank::Scalar,
            1 => Rank::Vector,
            2 => Rank::Matrix,
            c => return Err(CheckpointError::Format(format!("rank code {c}"))),
        };
        let nc = r.u32()? as usize;
        let mut comps = Vec::with_capacity(nc);
        for _ in 0..nc {
            comps.push((0..grid.len()).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?);
        }
        fields.insert(name, Field::from_components(&grid, rank, comps)?);
    }
    let mut get = |name: &str| fields.remove(name).ok_or_else(|| CheckpointError::Format(format!("missing field {name}")));
    let (u, v, g, w) = (get("u")?, get("v")?, get("g")?, get("w")?);
    let p = fields.remove("p");
    let s = r.f64()?;
    let rows = r.u64()? as usize;
    let cols = r.u32()? as usize;
    if cols != DiagnosticsRow::COLUMNS.len() {
        return Err(CheckpointError::Format(format!("{cols} diagnostics columns")));
    }
    let mut record = DiagnosticsRecord::new(dim, s);
    for _ in 0..rows {
        let mut vals = [0.0; 13];
        for v in vals.iter_mut() {
            *v = r.f64()?;
        }
        record.rows.push(DiagnosticsRow::from_values(&vals));
    }
    let nf = r.u64()? as usize;
    record.picard_factors = (0..nf).map(|_| r.f64()).collect::<Result<_, _>>()?;
    if r.pos != bytes.len() {
        return Err(CheckpointError::Format(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    Ok(Checkpoint { state: StepperState { t, step, u, v, g, w, p, strichartz }, record })
}

/// Writes through a temporary file and a rename, so an interrupted write
/// never replaces a good checkpoint.
pub fn write(path: &Path, ck: &Checkpoint) -> Result<(), CheckpointError> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(&encode(ck))?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read(path: &Path) -> Result<Checkpoint, CheckpointError> {
    decode(&std::fs::read(path)?)
}
