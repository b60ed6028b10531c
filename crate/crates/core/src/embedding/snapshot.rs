use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

const MAGIC: &str = "CENDSNAP1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelTag {
    Svd,
    Sgns,
}

impl fmt::Display for ModelTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelTag::Svd => "svd",
            ModelTag::Sgns => "sgns",
        })
    }
}

impl FromStr for ModelTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "svd" => Ok(ModelTag::Svd),
            "sgns" => Ok(ModelTag::Sgns),
            other => Err(invalid(format!("unknown model tag {other:?}"))),
        }
    }
}

/// Word vectors for one time slice, one row per vocabulary entry.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSnapshot {
    pub vectors: DMatrix<f64>,
    pub time_index: usize,
    pub model: ModelTag,
    pub aligned: bool,
}

impl EmbeddingSnapshot {
    pub fn vocab_size(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn row(&self, word: usize) -> Vec<f64> {
        self.vectors.row(word).iter().copied().collect()
    }

    pub fn is_finite(&self) -> bool {
        self.vectors.iter().all(|x| x.is_finite())
    }
}

/// Header line `CENDSNAP1 <V> <D> <model_tag> <time_index>` followed by `V`
/// rows of `D` little-endian `f32`. Values are narrowed to `f32` on write.
pub fn write_snapshot<W: Write>(mut writer: W, snap: &EmbeddingSnapshot) -> Result<()> {
    writeln!(
        writer,
        "{MAGIC} {} {} {} {}",
        snap.vocab_size(),
        snap.dim(),
        snap.model,
        snap.time_index
    )?;
    let mut buf = Vec::with_capacity(snap.vocab_size() * snap.dim() * 4);
    for i in 0..snap.vocab_size() {
        for j in 0..snap.dim() {
            buf.extend_from_slice(&(snap.vectors[(i, j)] as f32).to_le_bytes());
        }
    }
    writer.write_all(&buf)?;
    Ok(())
}

/// Inverse of [`write_snapshot`]. The file carries no alignment flag, so the
/// result reports `aligned = false`.
pub fn read_snapshot<R: BufRead>(mut reader: R) -> Result<EmbeddingSnapshot> {
    let mut header = String::new();
    reader.read_line(&mut header)?;
    let bad = |msg: &str| Error::Parse {
        line: 1,
        message: msg.to_string(),
    };
    let fields: Vec<&str> = header.trim_end_matches('\n').split(' ').collect();
    if fields.len() != 5 || fields[0] != MAGIC {
        return Err(bad("expected `CENDSNAP1 <V> <D> <model_tag> <time_index>`"));
    }
    let v: usize = fields[1].parse().map_err(|_| bad("bad vocabulary size"))?;
    let d: usize = fields[2].parse().map_err(|_| bad("bad dimension"))?;
    let model: ModelTag = fields[3].parse()?;
    let time_index: usize = fields[4].parse().map_err(|_| bad("bad time index"))?;
    let mut bytes = vec![0u8; v * d * 4];
    reader.read_exact(&mut bytes)?;
    let values = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64);
    let vectors = DMatrix::from_row_iterator(v, d, values);
    Ok(EmbeddingSnapshot {
        vectors,
        time_index,
        model,
        aligned: false,
    })
}
