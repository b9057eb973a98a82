//! Document embeddings and their on-disk form.
//!
//! Binary layout (all integers little-endian):
//!
//! | bytes   | content                                   |
//! |---------|-------------------------------------------|
//! | 4       | magic `MTSE`                              |
//! | 4       | format version (`1`)                      |
//! | 1       | scalar width in bytes (4 = f32, 8 = f64)  |
//! | 3       | zero padding                              |
//! | 8       | N, feature count (columns)                |
//! | 8       | M, article count (rows)                   |
//! | 8       | SVD seed                                  |
//! | 32      | vocabulary fingerprint (SHA-256)          |
//! | M·N·w   | rows, row-major                           |
//! | …       | M × (u32 byte length, UTF-8 article id), in row order |

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use nalgebra::DMatrix;
use num_traits::Float;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::GroundTruth;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const MAGIC: &[u8; 4] = b"MTSE";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbeddingHeader {
    pub dims: usize,
    pub rows: usize,
    pub seed: u64,
    pub vocab_fingerprint: [u8; 32],
}

/// M×N document embedding with its article-id dictionary.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticMatrix<T> {
    header: EmbeddingHeader,
    ids: Vec<String>,
    id_to_row: HashMap<String, usize>,
    data: Vec<T>,
}

impl<T: Scalar> SemanticMatrix<T> {
    pub fn from_dense(ids: Vec<String>, m: &DMatrix<T>, seed: u64) -> Result<Self> {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for r in 0..m.nrows() {
            data.extend(m.row(r).iter().copied());
        }
        Self::from_rows(ids, m.ncols(), data, seed)
    }

    /// `data` is row-major with `dims` columns.
    pub fn from_rows(ids: Vec<String>, dims: usize, data: Vec<T>, seed: u64) -> Result<Self> {
        if data.len() != ids.len() * dims {
            return Err(Error::invalid(format!(
                "{} values do not form {} rows of {dims}",
                data.len(),
                ids.len()
            )));
        }
        let mut id_to_row = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if id_to_row.insert(id.clone(), i).is_some() {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        Ok(Self {
            header: EmbeddingHeader {
                dims,
                rows: ids.len(),
                seed,
                vocab_fingerprint: [0; 32],
            },
            ids,
            id_to_row,
            data,
        })
    }

    pub fn with_vocab_fingerprint(mut self, fp: [u8; 32]) -> Self {
        self.header.vocab_fingerprint = fp;
        self
    }

    pub fn header(&self) -> &EmbeddingHeader {
        &self.header
    }

    pub fn dims(&self) -> usize {
        self.header.dims
    }

    pub fn rows(&self) -> usize {
        self.header.rows
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn row_of(&self, id: &str) -> Option<usize> {
        self.id_to_row.get(id).copied()
    }

    pub fn row(&self, r: usize) -> &[T] {
        let n = self.header.dims;
        &self.data[r * n..(r + 1) * n]
    }

    pub fn vector(&self, id: &str) -> Option<&[T]> {
        self.row_of(id).map(|r| self.row(r))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(f);
        self.write_to(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_u32::<LittleEndian>(VERSION)?;
        w.write_all(&[T::WIDTH, 0, 0, 0])?;
        w.write_u64::<LittleEndian>(self.header.dims as u64)?;
        w.write_u64::<LittleEndian>(self.header.rows as u64)?;
        w.write_u64::<LittleEndian>(self.header.seed)?;
        w.write_all(&self.header.vocab_fingerprint)?;
        for &v in &self.data {
            v.write_le(w)?;
        }
        for id in &self.ids {
            w.write_u32::<LittleEndian>(id.len() as u32)?;
            w.write_all(id.as_bytes())?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        let corrupt = |message: String| Error::Artifact {
            path: path.to_owned(),
            message,
        };
        Self::read_from(&mut BufReader::new(f))
            .map_err(|e| corrupt(e.to_string()))?
            .map_err(corrupt)
    }

    fn read_from<R: Read>(r: &mut R) -> std::io::Result<std::result::Result<Self, String>> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Ok(Err("not an embedding file".into()));
        }
        let version = r.read_u32::<LittleEndian>()?;
        if version != VERSION {
            return Ok(Err(format!("embedding format version {version} (expected {VERSION})")));
        }
        let mut width = [0u8; 4];
        r.read_exact(&mut width)?;
        if width[0] != T::WIDTH {
            return Ok(Err(format!(
                "stored scalar width {} does not match requested width {}",
                width[0],
                T::WIDTH
            )));
        }
        let dims = r.read_u64::<LittleEndian>()? as usize;
        let rows = r.read_u64::<LittleEndian>()? as usize;
        let seed = r.read_u64::<LittleEndian>()?;
        let mut fp = [0u8; 32];
        r.read_exact(&mut fp)?;
        let mut data = Vec::with_capacity(rows * dims);
        for _ in 0..rows * dims {
            data.push(T::read_le(r)?);
        }
        let mut ids = Vec::with_capacity(rows);
        for _ in 0..rows {
            let len = r.read_u32::<LittleEndian>()? as usize;
            let mut buf = vec![0u8; len];
            r.read_exact(&mut buf)?;
            match String::from_utf8(buf) {
                Ok(s) => ids.push(s),
                Err(_) => return Ok(Err("article id is not UTF-8".into())),
            }
        }
        Ok(Self::from_rows(ids, dims, data, seed)
            .map(|m| m.with_vocab_fingerprint(fp))
            .map_err(|e| e.to_string()))
    }
}

/// Cosine similarity; errors on a zero vector.
pub fn cosine<T: Scalar>(u: &[T], v: &[T]) -> Result<T> {
    if u.len() != v.len() {
        return Err(Error::invalid("cosine of vectors with different lengths"));
    }
    let (mut dot, mut nu, mut nv) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in u.iter().zip(v) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == T::zero() || nv == T::zero() {
        return Err(Error::invalid("cosine of a zero vector"));
    }
    let c = dot / (Float::sqrt(nu) * Float::sqrt(nv));
    Ok(Float::max(Float::min(c, T::one()), -T::one()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct QualityReport {
    pub intra_topic_mean: f64,
    pub random_pair_mean: f64,
    /// `intra_topic_mean - random_pair_mean`; larger is better.
    pub gap: f64,
    pub intra_pairs: usize,
    pub random_pairs: usize,
    pub topics_used: usize,
}

/// Pair budget per topic; topics with fewer pairs are enumerated exhaustively.
const PAIRS_PER_TOPIC: usize = 2000;

/// Mean cosine between articles sharing a topic versus between random articles.
/// Zero rows are ignored.
pub fn embedding_quality<T: Scalar>(sem: &SemanticMatrix<T>, truth: &GroundTruth, seed: u64) -> Result<QualityReport> {
    let nonzero = |r: usize| sem.row(r).iter().any(|&x| x != T::zero());
    let mut members: std::collections::BTreeMap<&str, Vec<usize>> = Default::default();
    for (id, topics) in &truth.labels {
        let Some(r) = sem.row_of(id).filter(|&r| nonzero(r)) else {
            continue;
        };
        for t in topics {
            members.entry(t.as_str()).or_default().push(r);
        }
    }
    members.retain(|_, rows| rows.len() >= 2);
    if members.len() < 2 {
        return Err(Error::invalid(
            "embedding quality needs at least two topics with two labeled articles each",
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut intra_sum = 0.0;
    let mut intra_pairs = 0usize;
    for rows in members.values() {
        let n = rows.len();
        let total = n * (n - 1) / 2;
        if total <= PAIRS_PER_TOPIC {
            for i in 0..n {
                for j in i + 1..n {
                    intra_sum += cosine(sem.row(rows[i]), sem.row(rows[j]))?.as_f64();
                }
            }
            intra_pairs += total;
        } else {
            for _ in 0..PAIRS_PER_TOPIC {
                let p = sample(&mut rng, n, 2);
                intra_sum += cosine(sem.row(rows[p.index(0)]), sem.row(rows[p.index(1)]))?.as_f64();
            }
            intra_pairs += PAIRS_PER_TOPIC;
        }
    }

    let candidates: Vec<usize> = (0..sem.rows()).filter(|&r| nonzero(r)).collect();
    let mut random_sum = 0.0;
    for _ in 0..intra_pairs {
        let i = candidates[rng.random_range(0..candidates.len())];
        let mut j = i;
        while j == i {
            j = candidates[rng.random_range(0..candidates.len())];
        }
        random_sum += cosine(sem.row(i), sem.row(j))?.as_f64();
    }
    let intra = intra_sum / intra_pairs as f64;
    let random = random_sum / intra_pairs as f64;
    Ok(QualityReport {
        intra_topic_mean: intra,
        random_pair_mean: random,
        gap: intra - random,
        intra_pairs,
        random_pairs: intra_pairs,
        topics_used: members.len(),
    })
}
