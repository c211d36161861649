//! File formats: binary channel tensors, CSV tables, key-value reports and
//! provenance sidecars.
//!
//! Tensor layout (all little-endian):
//!
//! ```text
//! magic        8 bytes  "TSIMTNSR"
//! version      u32      1
//! axis         u8       0 frequency, 1 delay
//! level        u8       0 element, 1 subarray
//! reserved     u16      0
//! n_time, n_bins, n_rx, n_tx                  u64 x4
//! sample_interval_s, time_step_s, center_hz, bandwidth_hz   f64 x4
//! subcarriers, subbands, truncated_paths      u64 x3
//! n_freq       u64, then n_freq subcarrier frequencies (f64, Hz)
//! note_len     u32, then note_len bytes of UTF-8 describing the order
//! payload      n_time*n_bins*n_rx*n_tx complex values as (re, im) f64
//!              row-major [time][bin][rx][tx]
//! ```

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex;
use serde::Serialize;

use crate::channel::{Axis, ChannelTensor, FrequencyGrid, Level};
use crate::error::{Error, Result};

pub const TENSOR_MAGIC: &[u8; 8] = b"TSIMTNSR";
pub const TENSOR_VERSION: u32 = 1;
pub const ORDER_NOTE: &str = "row-major [time][bin][rx][tx], complex interleaved re,im, f64 little-endian";

/// Writes `bytes` to `path` through a temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let result = (|| {
        let mut f = BufWriter::new(File::create(&tmp)?);
        f.write_all(bytes)?;
        f.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = std::fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

pub fn encode_tensor(t: &ChannelTensor<f64>) -> Vec<u8> {
    let mut b = Vec::with_capacity(256 + t.data.len() * 16);
    b.extend_from_slice(TENSOR_MAGIC);
    b.extend_from_slice(&TENSOR_VERSION.to_le_bytes());
    b.push(match t.axis {
        Axis::Frequency => 0,
        Axis::Delay => 1,
    });
    b.push(match t.level {
        Level::Element => 0,
        Level::Subarray => 1,
    });
    b.extend_from_slice(&0u16.to_le_bytes());
    for n in [t.n_time, t.n_bins, t.n_rx, t.n_tx] {
        b.extend_from_slice(&(n as u64).to_le_bytes());
    }
    for x in [t.sample_interval, t.time_step, t.grid.center, t.grid.bandwidth] {
        b.extend_from_slice(&x.to_le_bytes());
    }
    for n in [t.grid.subcarriers, t.grid.subbands, t.truncated_paths] {
        b.extend_from_slice(&(n as u64).to_le_bytes());
    }
    let freqs = t.grid.subcarriers();
    b.extend_from_slice(&(freqs.len() as u64).to_le_bytes());
    for f in freqs {
        b.extend_from_slice(&f.to_le_bytes());
    }
    b.extend_from_slice(&(ORDER_NOTE.len() as u32).to_le_bytes());
    b.extend_from_slice(ORDER_NOTE.as_bytes());
    for v in &t.data {
        b.extend_from_slice(&v.re.to_le_bytes());
        b.extend_from_slice(&v.im.to_le_bytes());
    }
    b
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::parse(self.path, format!("truncated tensor file at byte {}", self.pos)));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn usize(&mut self) -> Result<usize> {
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| Error::parse(self.path, format!("dimension {v} too large")))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode_tensor(bytes: &[u8], path: &Path) -> Result<ChannelTensor<f64>> {
    let mut c = Cursor { buf: bytes, pos: 0, path };
    if c.take(8)? != TENSOR_MAGIC {
        return Err(Error::parse(path, "not a tensor file (bad magic)"));
    }
    let version = c.u32()?;
    if version != TENSOR_VERSION {
        return Err(Error::parse(path, format!("unsupported tensor version {version}")));
    }
    let axis = match c.u8()? {
        0 => Axis::Frequency,
        1 => Axis::Delay,
        x => return Err(Error::parse(path, format!("bad axis code {x}"))),
    };
    let level = match c.u8()? {
        0 => Level::Element,
        1 => Level::Subarray,
        x => return Err(Error::parse(path, format!("bad level code {x}"))),
    };
    c.take(2)?;
    let (n_time, n_bins, n_rx, n_tx) = (c.usize()?, c.usize()?, c.usize()?, c.usize()?);
    let (sample_interval, time_step, center, bandwidth) = (c.f64()?, c.f64()?, c.f64()?, c.f64()?);
    let (subcarriers, subbands, truncated_paths) = (c.usize()?, c.usize()?, c.usize()?);
    let n_freq = c.usize()?;
    c.take(n_freq.checked_mul(8).ok_or_else(|| Error::parse(path, "bad frequency count"))?)?;
    let note_len = c.u32()? as usize;
    c.take(note_len)?;
    let n = [n_time, n_bins, n_rx, n_tx]
        .iter()
        .try_fold(1usize, |a, &b| a.checked_mul(b))
        .ok_or_else(|| Error::parse(path, "tensor dimensions overflow"))?;
    if bytes.len() - c.pos != n * 16 {
        return Err(Error::parse(
            path,
            format!("payload is {} bytes, header implies {}", bytes.len() - c.pos, n * 16),
        ));
    }
    let mut data = Vec::with_capacity(n);
    for _ in 0..n {
        data.push(Complex::new(c.f64()?, c.f64()?));
    }
    Ok(ChannelTensor {
        axis,
        level,
        n_time,
        n_bins,
        n_rx,
        n_tx,
        grid: FrequencyGrid {
            center,
            bandwidth,
            subcarriers,
            subbands,
        },
        sample_interval,
        time_step,
        truncated_paths,
        data,
    })
}

pub fn write_tensor(path: &Path, t: &ChannelTensor<f64>) -> Result<()> {
    write_atomic(path, &encode_tensor(t))
}

pub fn read_tensor(path: &Path) -> Result<ChannelTensor<f64>> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    decode_tensor(&bytes, path)
}

/// Shortest round-trip scientific notation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:e}")
}

/// CSV with a header row; values formatted with [`fmt_f64`], LF endings.
pub fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let io_err = |e: csv::Error| Error::io("<csv buffer>", std::io::Error::other(e.to_string()));
    w.write_record(header).map_err(io_err)?;
    for r in rows {
        w.write_record(r).map_err(io_err)?;
    }
    w.into_inner().map_err(|e| Error::io("<csv buffer>", std::io::Error::other(e.to_string())))
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    write_atomic(path, &csv_bytes(header, rows)?)
}

/// `key = value` lines in insertion order.
pub fn report_bytes(entries: &[(String, String)]) -> Vec<u8> {
    let mut s = String::new();
    for (k, v) in entries {
        s.push_str(k);
        s.push_str(" = ");
        s.push_str(v);
        s.push('\n');
    }
    s.into_bytes()
}

/// Parses a `key = value` report back.
pub fn parse_report(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| l.split_once(" = "))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect()
}

/// Everything needed to rerun a command.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    /// Input files other than the config.
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    /// Verbatim config text.
    pub config: String,
}

impl Provenance {
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::parse("<provenance>", e.to_string()))
    }
}

/// Files written by one command; removed again unless committed.
#[derive(Debug, Default)]
pub struct OutputSet {
    written: Vec<PathBuf>,
    committed: bool,
}

impl OutputSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn write(&mut self, path: &Path, bytes: &[u8]) -> Result<()> {
        write_atomic(path, bytes)?;
        self.written.push(path.to_path_buf());
        Ok(())
    }

    pub fn write_tensor(&mut self, path: &Path, t: &ChannelTensor<f64>) -> Result<()> {
        self.write(path, &encode_tensor(t))
    }

    pub fn write_csv(&mut self, path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        self.write(path, &csv_bytes(header, rows)?)
    }

    pub fn paths(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn commit(mut self) -> Vec<PathBuf> {
        self.committed = true;
        std::mem::take(&mut self.written)
    }
}

impl Drop for OutputSet {
    fn drop(&mut self) {
        if !self.committed {
            for p in &self.written {
                let _ = std::fs::remove_file(p);
            }
        }
    }
}
