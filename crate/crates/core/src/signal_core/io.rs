//! Flat binary capture container.
//!
//! Layout, all little-endian:
//!
//! | offset | size | field                          |
//! |--------|------|--------------------------------|
//! | 0      | 4    | magic `b"WGNC"`                |
//! | 4      | 4    | version (`u32`, currently 1)   |
//! | 8      | 4    | stream count M (`u32`)         |
//! | 12     | 8    | samples per stream Ns (`u64`)  |
//! | 20     | 8    | sample rate (`f64`, Hz)        |
//! | 28     | ...  | M x Ns x (re `f64`, im `f64`)  |
//!
//! Streams are stored one after the other (tributary-major). Channel and
//! equalizer payloads reuse the same container with one stream per matrix
//! entry; their JSON descriptor says how to interpret the streams.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::MimoSignal;
use crate::error::{Error, Result};
use crate::C64;

pub const MAGIC: [u8; 4] = *b"WGNC";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 28;

/// Raw streams plus the rate field of the header.
#[derive(Debug, Clone, PartialEq)]
pub struct Container {
    pub streams: Vec<Vec<C64>>,
    pub rate: f64,
}

impl Container {
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let ns = self.streams.first().map_or(0, Vec::len);
        if self.streams.iter().any(|s| s.len() != ns) {
            return Err(Error::Format("streams must have equal length".into()));
        }
        w.write_all(&MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.streams.len() as u32).to_le_bytes())?;
        w.write_all(&(ns as u64).to_le_bytes())?;
        w.write_all(&self.rate.to_le_bytes())?;
        let mut buf = Vec::with_capacity(16 * 4096);
        for stream in &self.streams {
            for chunk in stream.chunks(4096) {
                buf.clear();
                for v in chunk {
                    buf.extend_from_slice(&v.re.to_le_bytes());
                    buf.extend_from_slice(&v.im.to_le_bytes());
                }
                w.write_all(&buf)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut header = [0u8; HEADER_LEN];
        r.read_exact(&mut header)?;
        if header[0..4] != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let m = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
        let ns = u64::from_le_bytes(header[12..20].try_into().unwrap()) as usize;
        let rate = f64::from_le_bytes(header[20..28].try_into().unwrap());

        let mut streams = Vec::with_capacity(m);
        let mut raw = vec![0u8; 16 * 4096];
        for _ in 0..m {
            let mut stream = Vec::with_capacity(ns);
            let mut left = ns;
            while left > 0 {
                let take = left.min(4096);
                let bytes = &mut raw[..16 * take];
                r.read_exact(bytes)?;
                for pair in bytes.chunks_exact(16) {
                    let re = f64::from_le_bytes(pair[0..8].try_into().unwrap());
                    let im = f64::from_le_bytes(pair[8..16].try_into().unwrap());
                    stream.push(C64::new(re, im));
                }
                left -= take;
            }
            streams.push(stream);
        }
        let mut probe = [0u8; 1];
        if r.read(&mut probe)? != 0 {
            return Err(Error::Format("trailing bytes after payload".into()));
        }
        Ok(Self { streams, rate })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

pub fn write_signal<W: Write>(signal: &MimoSignal, w: W) -> Result<()> {
    Container {
        streams: signal.tributaries().to_vec(),
        rate: signal.sample_rate(),
    }
    .write_to(w)
}

pub fn read_signal<R: Read>(r: R) -> Result<MimoSignal> {
    let c = Container::read_from(r)?;
    MimoSignal::new(c.streams, c.rate)
}

pub fn save_signal(signal: &MimoSignal, path: impl AsRef<Path>) -> Result<()> {
    write_signal(signal, BufWriter::new(File::create(path)?))
}

pub fn load_signal(path: impl AsRef<Path>) -> Result<MimoSignal> {
    read_signal(BufReader::new(File::open(path)?))
}
