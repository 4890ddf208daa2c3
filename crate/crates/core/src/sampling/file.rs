//! `BCDS1` dataset files.
//!
//! Layout, all integers and reals little-endian:
//!
//! ```text
//! offset  size  field
//!      0     5  magic "BCDS1"
//!      5     1  flags: bit 0 compact (mean features), bit 1 complete
//!      6     4  state dimension n (u32)
//!     10     4  barrier degree k (u32)
//!     14     8  target sample count N (u64)
//!     22     8  successors per sample N̂ (u64)
//!     30     8  run seed (u64)
//!     38    32  config digest (SHA-256)
//!     70     8  records written so far (u64)
//!     78        records: n state reals, then N̂·n successor reals
//!               (raw) or Q mean-feature reals (compact)
//! ```
//!
//! Records are appended one chunk at a time and the record counter is
//! updated after each chunk, so an interrupted run resumes from the last
//! complete chunk. Output bytes do not depend on the chunk size.

use std::fs::{File, OpenOptions};
use std::io::{BufReader, Read, Seek, SeekFrom, Write};
use std::path::Path;

use rayon::prelude::*;

use super::dataset::{draw_state, sample_payload, ScenarioDataset, Successors};
use crate::domain::{MonomialBasis, Region};
use crate::error::{check_dimension, Error, Result};
use crate::systems::BlackBoxSystem;

pub const MAGIC: &[u8; 5] = b"BCDS1";
pub const HEADER_LEN: u64 = 78;
const FLAG_COMPACT: u8 = 1;
const FLAG_COMPLETE: u8 = 2;
const FLAGS_OFFSET: u64 = 5;
const RECORDS_OFFSET: u64 = 70;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetHeader {
    pub dimension: u32,
    pub degree: u32,
    pub n_samples: u64,
    pub n_hat: u64,
    pub run_seed: u64,
    pub digest: [u8; 32],
    pub compact: bool,
    pub complete: bool,
    pub records_written: u64,
}

impl DatasetHeader {
    fn encode(&self) -> [u8; HEADER_LEN as usize] {
        let mut buf = [0u8; HEADER_LEN as usize];
        buf[0..5].copy_from_slice(MAGIC);
        buf[5] = self.flags();
        buf[6..10].copy_from_slice(&self.dimension.to_le_bytes());
        buf[10..14].copy_from_slice(&self.degree.to_le_bytes());
        buf[14..22].copy_from_slice(&self.n_samples.to_le_bytes());
        buf[22..30].copy_from_slice(&self.n_hat.to_le_bytes());
        buf[30..38].copy_from_slice(&self.run_seed.to_le_bytes());
        buf[38..70].copy_from_slice(&self.digest);
        buf[70..78].copy_from_slice(&self.records_written.to_le_bytes());
        buf
    }

    fn decode(buf: &[u8; HEADER_LEN as usize]) -> Result<Self> {
        if &buf[0..5] != MAGIC {
            return Err(Error::Dataset("not a BCDS1 dataset (bad magic)".into()));
        }
        let flags = buf[5];
        if flags & !(FLAG_COMPACT | FLAG_COMPLETE) != 0 {
            return Err(Error::Dataset(format!("unknown header flags {flags:#04x}")));
        }
        let u32_at = |o: usize| u32::from_le_bytes(buf[o..o + 4].try_into().expect("4 bytes"));
        let u64_at = |o: usize| u64::from_le_bytes(buf[o..o + 8].try_into().expect("8 bytes"));
        let header = DatasetHeader {
            dimension: u32_at(6),
            degree: u32_at(10),
            n_samples: u64_at(14),
            n_hat: u64_at(22),
            run_seed: u64_at(30),
            digest: buf[38..70].try_into().expect("32 bytes"),
            compact: flags & FLAG_COMPACT != 0,
            complete: flags & FLAG_COMPLETE != 0,
            records_written: u64_at(70),
        };
        if header.dimension == 0 || header.n_hat == 0 {
            return Err(Error::Dataset("header has zero dimension or N̂".into()));
        }
        if header.records_written > header.n_samples {
            return Err(Error::Dataset("header records exceed the sample count".into()));
        }
        Ok(header)
    }

    fn flags(&self) -> u8 {
        (if self.compact { FLAG_COMPACT } else { 0 }) | (if self.complete { FLAG_COMPLETE } else { 0 })
    }

    pub fn digest_hex(&self) -> String {
        hex::encode(self.digest)
    }

    pub fn basis(&self) -> Result<MonomialBasis> {
        MonomialBasis::new(self.dimension as usize, self.degree)
    }

    /// Reals per record.
    pub fn record_len(&self) -> Result<usize> {
        let n = self.dimension as usize;
        let payload = if self.compact {
            self.basis()?.len()
        } else {
            (self.n_hat as usize)
                .checked_mul(n)
                .ok_or_else(|| Error::Dataset("record size overflows".into()))?
        };
        Ok(n + payload)
    }

    fn same_run(&self, other: &DatasetHeader) -> bool {
        self.dimension == other.dimension
            && self.degree == other.degree
            && self.n_samples == other.n_samples
            && self.n_hat == other.n_hat
            && self.run_seed == other.run_seed
            && self.digest == other.digest
            && self.compact == other.compact
    }
}

/// Everything that determines a dataset file.
#[derive(Debug, Clone)]
pub struct DatasetSpec {
    pub region: Region,
    pub degree: u32,
    pub n_samples: u64,
    pub n_hat: u64,
    pub run_seed: u64,
    pub compact: bool,
    pub digest: [u8; 32],
    pub chunk_size: usize,
}

impl DatasetSpec {
    fn header(&self) -> DatasetHeader {
        DatasetHeader {
            dimension: self.region.dimension() as u32,
            degree: self.degree,
            n_samples: self.n_samples,
            n_hat: self.n_hat,
            run_seed: self.run_seed,
            digest: self.digest,
            compact: self.compact,
            complete: false,
            records_written: 0,
        }
    }
}

pub fn read_header(path: &Path) -> Result<DatasetHeader> {
    let mut f = File::open(path)?;
    read_header_from(&mut f)
}

fn read_header_from(f: &mut File) -> Result<DatasetHeader> {
    let mut buf = [0u8; HEADER_LEN as usize];
    f.seek(SeekFrom::Start(0))?;
    f.read_exact(&mut buf)
        .map_err(|_| Error::Dataset("file too short for a BCDS1 header".into()))?;
    DatasetHeader::decode(&buf)
}

/// Produces (or resumes) the dataset file at `path`. `progress` receives
/// `(records_done, records_total)` after each chunk. On a system failure the
/// file keeps every finished chunk and stays flagged incomplete.
pub fn write_dataset<S: BlackBoxSystem + ?Sized>(
    sys: &S,
    spec: &DatasetSpec,
    path: &Path,
    progress: &mut dyn FnMut(u64, u64),
) -> Result<DatasetHeader> {
    check_dimension(sys.state_dimension(), spec.region.dimension())?;
    if spec.n_samples == 0 || spec.n_hat == 0 {
        return Err(Error::invalid("N and N̂ must be positive"));
    }
    let mut header = spec.header();
    let record_len = header.record_len()?;
    let basis = if spec.compact { Some(header.basis()?) } else { None };

    let mut file = if path.exists() {
        let mut f = OpenOptions::new().read(true).write(true).open(path)?;
        let existing = read_header_from(&mut f)?;
        if !existing.same_run(&header) {
            return Err(Error::Dataset(format!(
                "existing file {} belongs to a different configuration",
                path.display()
            )));
        }
        header = existing;
        let expected_len = HEADER_LEN + header.records_written * record_len as u64 * 8;
        if header.complete {
            if f.metadata()?.len() != expected_len {
                return Err(Error::Dataset("complete dataset has the wrong length".into()));
            }
            progress(header.records_written, header.n_samples);
            return Ok(header);
        }
        // drop any half-written chunk past the last committed record
        f.set_len(expected_len)?;
        f
    } else {
        let mut f = OpenOptions::new()
            .read(true)
            .write(true)
            .create_new(true)
            .open(path)?;
        f.write_all(&header.encode())?;
        f
    };

    let chunk = spec.chunk_size.max(1) as u64;
    while header.records_written < header.n_samples {
        let start = header.records_written;
        let end = (start + chunk).min(header.n_samples);
        let records: Vec<Vec<f64>> = (start..end)
            .into_par_iter()
            .map(|i| {
                let state = draw_state(&spec.region, spec.run_seed, i);
                let payload =
                    sample_payload(sys, &state, i, spec.n_hat as usize, spec.run_seed, basis.as_ref())?;
                let mut rec = state;
                rec.extend_from_slice(&payload);
                Ok(rec)
            })
            .collect::<Result<_>>()?;
        let mut bytes = Vec::with_capacity(records.len() * record_len * 8);
        for rec in &records {
            debug_assert_eq!(rec.len(), record_len);
            for v in rec {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
        file.seek(SeekFrom::Start(HEADER_LEN + start * record_len as u64 * 8))?;
        file.write_all(&bytes)?;
        file.flush()?;
        header.records_written = end;
        file.seek(SeekFrom::Start(RECORDS_OFFSET))?;
        file.write_all(&end.to_le_bytes())?;
        progress(end, header.n_samples);
    }
    header.complete = true;
    file.seek(SeekFrom::Start(FLAGS_OFFSET))?;
    file.write_all(&[header.flags()])?;
    file.sync_all()?;
    Ok(header)
}

/// Loads a complete dataset file.
pub fn read_dataset(path: &Path) -> Result<(DatasetHeader, ScenarioDataset)> {
    let mut f = File::open(path)?;
    let header = read_header_from(&mut f)?;
    if !header.complete {
        return Err(Error::Dataset(format!(
            "dataset is incomplete ({} of {} records); rerun `sample` to resume",
            header.records_written, header.n_samples
        )));
    }
    let record_len = header.record_len()?;
    let expected = HEADER_LEN + header.n_samples * record_len as u64 * 8;
    if f.metadata()?.len() != expected {
        return Err(Error::Dataset("file length does not match its header".into()));
    }
    let n = header.dimension as usize;
    let count = header.n_samples as usize;
    let payload_len = record_len - n;
    let mut samples = Vec::with_capacity(count * n);
    let mut payload = Vec::with_capacity(count * payload_len);
    let mut reader = BufReader::with_capacity(1 << 20, f);
    let mut rec = vec![0u8; record_len * 8];
    for _ in 0..count {
        reader.read_exact(&mut rec)?;
        let mut values = rec
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")));
        samples.extend(values.by_ref().take(n));
        payload.extend(values);
    }
    let successors = if header.compact {
        Successors::MeanFeatures {
            basis: header.basis()?,
            values: payload,
        }
    } else {
        Successors::Raw(payload)
    };
    let ds = ScenarioDataset::from_parts(n, header.n_hat as usize, header.run_seed, samples, successors)?;
    Ok((header, ds))
}
