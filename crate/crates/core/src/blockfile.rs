//! Binary sample-block files.
//!
//! Layout, all integers little-endian:
//!
//! | offset | size | field                                        |
//! |--------|------|----------------------------------------------|
//! | 0      | 4    | magic `QRSB`                                 |
//! | 4      | 2    | format version (1)                           |
//! | 6      | 1    | ADC bits                                     |
//! | 7      | 1    | reserved, 0                                  |
//! | 8      | 8    | bin width δ (f64)                            |
//! | 16     | 8    | full-scale range R (f64), equals δ·2^(bits−1) |
//! | 24     | 8    | sample rate in Hz (f64)                      |
//! | 32     | 8    | sample count N (u64)                         |
//! | 40     | 2N   | bin indices (i16)                            |
//! | 40+2N  | N    | tags: slot kind in bits 0..7, saturation bit 7 |
//!
//! Slot kinds: 0 data, 1 check, 2 electronic noise.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{DiscretizationGrid, Sample, SampleBlock, SlotKind};

pub const MAGIC: &[u8; 4] = b"QRSB";
pub const VERSION: u16 = 1;
const SATURATED_BIT: u8 = 0x80;

pub fn write_block<W: Write>(block: &SampleBlock, w: W) -> Result<()> {
    let mut w = BufWriter::new(w);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&[block.grid.adc_bits() as u8, 0])?;
    w.write_all(&block.grid.delta().to_le_bytes())?;
    w.write_all(&block.grid.adc_range().to_le_bytes())?;
    w.write_all(&block.sample_rate_hz.to_le_bytes())?;
    w.write_all(&(block.samples.len() as u64).to_le_bytes())?;
    for s in &block.samples {
        w.write_all(&s.index.to_le_bytes())?;
    }
    let tags: Vec<u8> = block
        .samples
        .iter()
        .map(|s| s.kind as u8 | if s.saturated { SATURATED_BIT } else { 0 })
        .collect();
    w.write_all(&tags)?;
    w.flush()?;
    Ok(())
}

fn take<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format("truncated file".into()),
        _ => Error::Io(e),
    })?;
    Ok(buf)
}

pub fn read_block<R: Read>(r: R) -> Result<SampleBlock> {
    let mut r = BufReader::new(r);
    if &take::<4, _>(&mut r)? != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = u16::from_le_bytes(take(&mut r)?);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let [bits, _] = take::<2, _>(&mut r)?;
    let delta = f64::from_le_bytes(take(&mut r)?);
    let range = f64::from_le_bytes(take(&mut r)?);
    let rate = f64::from_le_bytes(take(&mut r)?);
    let n = u64::from_le_bytes(take(&mut r)?) as usize;
    let grid = DiscretizationGrid::new(delta, bits as u32).map_err(|e| Error::Format(e.to_string()))?;
    if (grid.adc_range() - range).abs() > 1e-9 * range.abs() {
        return Err(Error::Format(format!(
            "range {range} inconsistent with delta {delta} and {bits} bits"
        )));
    }
    let mut raw = vec![0u8; 3 * n];
    r.read_exact(&mut raw)
        .map_err(|_| Error::Format(format!("expected {n} samples")))?;
    let (idx, tags) = raw.split_at(2 * n);
    let samples = idx
        .chunks_exact(2)
        .zip(tags)
        .map(|(b, &tag)| {
            let kind = SlotKind::from_u8(tag & !SATURATED_BIT)
                .ok_or_else(|| Error::Format(format!("bad slot tag {tag:#x}")))?;
            Ok(Sample {
                index: i16::from_le_bytes([b[0], b[1]]),
                kind,
                saturated: tag & SATURATED_BIT != 0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if r.read(&mut [0u8; 1])? != 0 {
        return Err(Error::Format("trailing bytes".into()));
    }
    Ok(SampleBlock {
        grid,
        sample_rate_hz: rate,
        samples,
    })
}

pub fn save(block: &SampleBlock, path: &Path) -> Result<()> {
    write_block(block, File::create(path)?)
}

pub fn load(path: &Path) -> Result<SampleBlock> {
    read_block(File::open(path)?)
}
