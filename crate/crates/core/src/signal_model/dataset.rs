use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::synth::{real_split, Environment};
use crate::rng::record_stream;
use crate::{Error, Result};

/// One training/evaluation record.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// Real-split stacked received vector.
    pub input: Vec<f32>,
    /// Active devices, ascending.
    pub support: Vec<usize>,
    pub snr_db: f32,
}

impl Sample {
    pub fn sparsity(&self) -> usize {
        self.support.len()
    }
}

/// Lazily generates records `0..count` of the stream `(seed, stream_id)`.
/// Record `i` depends only on the environment, the seed, the stream id and `i`.
pub struct DatasetGenerator<'a> {
    env: &'a Environment,
    seed: u64,
    stream_id: u64,
    next: u64,
    end: u64,
}

impl Iterator for DatasetGenerator<'_> {
    type Item = Result<Sample>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.end {
            return None;
        }
        let i = self.next;
        self.next += 1;
        Some(generate_record(self.env, self.seed, self.stream_id, i))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = (self.end - self.next) as usize;
        (n, Some(n))
    }
}

pub fn generate_record(env: &Environment, seed: u64, stream_id: u64, index: u64) -> Result<Sample> {
    let mut rng = record_stream(seed, stream_id, index);
    let inst = env.synthesize(&mut rng)?;
    Ok(Sample {
        input: real_split(&inst.y).into_iter().map(|v| v as f32).collect(),
        support: inst.support,
        snr_db: inst.snr_db as f32,
    })
}

pub fn generate_dataset(env: &Environment, count: usize, seed: u64, stream_id: u64) -> DatasetGenerator<'_> {
    DatasetGenerator {
        env,
        seed,
        stream_id,
        next: 0,
        end: count as u64,
    }
}

/// Materializes a dataset, generating records in parallel.
pub fn collect_dataset(env: &Environment, count: usize, seed: u64, stream_id: u64) -> Result<Vec<Sample>> {
    use rayon::prelude::*;
    (0..count as u64)
        .into_par_iter()
        .map(|i| generate_record(env, seed, stream_id, i))
        .collect()
}

pub const DATASET_MAGIC: &[u8; 4] = b"GFNA";
pub const DATASET_VERSION: u32 = 1;

/// Fixed-size header of a dataset file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DatasetHeader {
    pub devices: u32,
    pub subcarriers: u32,
    pub measurements: u32,
    pub antennas: u32,
    pub active: u32,
}

impl DatasetHeader {
    pub fn from_env(env: &Environment) -> Self {
        let sc = &env.scenario;
        Self {
            devices: sc.devices as u32,
            subcarriers: sc.subcarriers as u32,
            measurements: sc.measurements as u32,
            antennas: sc.antennas as u32,
            active: sc.active as u32,
        }
    }

    pub fn input_dim(&self) -> usize {
        2 * (self.subcarriers * self.measurements * self.antennas) as usize
    }
}

/// Writes `magic, version, N, m, N_d, M, k` (little-endian `u32`) followed by
/// one record per sample: the real input then a one-hot support vector of
/// length `N`, both little-endian `f32`.
pub fn write_dataset<'s>(
    path: &Path,
    header: DatasetHeader,
    samples: impl IntoIterator<Item = &'s Sample>,
) -> Result<usize> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    w.write_all(DATASET_MAGIC).map_err(io)?;
    for v in [
        DATASET_VERSION,
        header.devices,
        header.subcarriers,
        header.measurements,
        header.antennas,
        header.active,
    ] {
        w.write_all(&v.to_le_bytes()).map_err(io)?;
    }
    let dim = header.input_dim();
    let mut count = 0;
    for s in samples {
        if s.input.len() != dim {
            return Err(Error::Shape(format!("record input has {} values, header says {dim}", s.input.len())));
        }
        for v in &s.input {
            w.write_all(&v.to_le_bytes()).map_err(io)?;
        }
        let mut onehot = vec![0f32; header.devices as usize];
        for &d in &s.support {
            onehot[d] = 1.0;
        }
        for v in onehot {
            w.write_all(&v.to_le_bytes()).map_err(io)?;
        }
        count += 1;
    }
    w.flush().map_err(io)?;
    Ok(count)
}

/// Reads a dataset file back; SNR is not stored and comes back as NaN.
pub fn read_dataset(path: &Path) -> Result<(DatasetHeader, Vec<Sample>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut bytes = Vec::new();
    BufReader::new(file).read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?;
    let bad = |reason: String| Error::Format { kind: "dataset", reason };
    if bytes.len() < 28 || &bytes[0..4] != DATASET_MAGIC {
        return Err(bad("missing GFNA magic".into()));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap());
    if word(0) != DATASET_VERSION {
        return Err(bad(format!("unsupported version {}", word(0))));
    }
    let header = DatasetHeader {
        devices: word(1),
        subcarriers: word(2),
        measurements: word(3),
        antennas: word(4),
        active: word(5),
    };
    let dim = header.input_dim();
    let n = header.devices as usize;
    let record = 4 * (dim + n);
    let body = &bytes[28..];
    if record == 0 || body.len() % record != 0 {
        return Err(bad(format!("body of {} bytes is not a whole number of records", body.len())));
    }
    let floats: Vec<f32> = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let samples = floats
        .chunks_exact(dim + n)
        .map(|rec| Sample {
            input: rec[..dim].to_vec(),
            support: rec[dim..]
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, _)| i)
                .collect(),
            snr_db: f32::NAN,
        })
        .collect();
    Ok((header, samples))
}
