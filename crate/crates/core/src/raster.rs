//! Raster data model and the LSCP exchange format.
//!
//! An LSCP file is little-endian throughout:
//!
//! ```text
//! magic            4C 53 43 50 ("LSCP")
//! version          u16 = 1
//! channels         u16
//! width            u32
//! height           u32
//! cell_size_m      f32
//! name_blob_len    u32
//! name_blob        UTF-8, channel names joined by '\n'
//! values           width*height*channels f32, band-sequential, rows top to bottom
//! ```

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"LSCP";
pub const VERSION: u16 = 1;
pub const DEFAULT_CELL_SIZE_M: f32 = 43.0;

/// Imagery band order. Every imagery stack carries exactly these channels.
pub const IMAGERY_BANDS: [&str; 4] = ["blue", "green", "red", "nir"];
pub const BLUE: usize = 0;
pub const GREEN: usize = 1;
pub const RED: usize = 2;
pub const NIR: usize = 3;

/// Multi-channel 2-D grid of 32-bit reals.
///
/// Values are band-sequential: band `c` occupies
/// `values[c*w*h .. (c+1)*w*h]`, row-major with row 0 at the top.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterStack {
    width: usize,
    height: usize,
    channel_names: Vec<String>,
    cell_size_m: f32,
    values: Vec<f32>,
}

/// A single broken invariant reported by [`RasterStack::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    ZeroDimension { width: usize, height: usize },
    NoChannels,
    TooManyChannels(usize),
    DimensionTooLarge { width: usize, height: usize },
    DuplicateChannelName(String),
    BadChannelName(String),
    BadCellSize,
    ValuesLength { expected: usize, actual: usize },
    NonFinite { count: usize, first_index: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ZeroDimension { width, height } => {
                write!(f, "dimensions must be positive, got {width}x{height}")
            }
            Violation::NoChannels => write!(f, "raster has no channels"),
            Violation::TooManyChannels(n) => write!(f, "{n} channels exceed the u16 limit"),
            Violation::DimensionTooLarge { width, height } => {
                write!(f, "dimensions {width}x{height} exceed the u32 limit")
            }
            Violation::DuplicateChannelName(n) => write!(f, "duplicate channel name {n:?}"),
            Violation::BadChannelName(n) => {
                write!(f, "channel name {n:?} is empty or contains a newline")
            }
            Violation::BadCellSize => write!(f, "cell size must be positive and finite"),
            Violation::ValuesLength { expected, actual } => {
                write!(f, "expected {expected} values, found {actual}")
            }
            Violation::NonFinite { count, first_index } => {
                write!(f, "{count} non-finite values (first at index {first_index})")
            }
        }
    }
}

impl RasterStack {
    /// Builds a raster and checks every invariant.
    pub fn new(
        width: usize,
        height: usize,
        channel_names: Vec<String>,
        cell_size_m: f32,
        values: Vec<f32>,
    ) -> Result<Self> {
        let r = Self::from_parts_unchecked(width, height, channel_names, cell_size_m, values);
        r.validate().map_err(Error::Validation)?;
        Ok(r)
    }

    /// Builds a raster without validation. Writers validate before emitting.
    pub fn from_parts_unchecked(
        width: usize,
        height: usize,
        channel_names: Vec<String>,
        cell_size_m: f32,
        values: Vec<f32>,
    ) -> Self {
        RasterStack {
            width,
            height,
            channel_names,
            cell_size_m,
            values,
        }
    }

    /// Zero-filled raster with the given channels.
    pub fn zeros(width: usize, height: usize, names: &[&str], cell_size_m: f32) -> Self {
        RasterStack {
            width,
            height,
            channel_names: names.iter().map(|s| s.to_string()).collect(),
            cell_size_m,
            values: vec![0.0; width * height * names.len()],
        }
    }

    /// Builds a raster from per-channel planes.
    pub fn from_bands(
        width: usize,
        height: usize,
        names: &[&str],
        cell_size_m: f32,
        bands: Vec<Vec<f32>>,
    ) -> Result<Self> {
        if bands.len() != names.len() {
            return Err(Error::invalid(format!(
                "{} bands for {} channel names",
                bands.len(),
                names.len()
            )));
        }
        let values = bands.concat();
        Self::new(
            width,
            height,
            names.iter().map(|s| s.to_string()).collect(),
            cell_size_m,
            values,
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channel_names.len()
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    pub fn cell_size_m(&self) -> f32 {
        self.cell_size_m
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }

    pub fn channel_index(&self, name: &str) -> Option<usize> {
        self.channel_names.iter().position(|n| n == name)
    }

    /// Contiguous plane of channel `c`.
    pub fn band(&self, c: usize) -> &[f32] {
        let n = self.pixel_count();
        &self.values[c * n..(c + 1) * n]
    }

    pub fn band_mut(&mut self, c: usize) -> &mut [f32] {
        let n = self.pixel_count();
        &mut self.values[c * n..(c + 1) * n]
    }

    pub fn band_by_name(&self, name: &str) -> Option<&[f32]> {
        self.channel_index(name).map(|c| self.band(c))
    }

    pub fn get(&self, c: usize, row: usize, col: usize) -> f32 {
        self.values[c * self.pixel_count() + row * self.width + col]
    }

    /// All channel values at pixel index `i` (row-major).
    pub fn pixel(&self, i: usize) -> Vec<f32> {
        let n = self.pixel_count();
        (0..self.channels()).map(|c| self.values[c * n + i]).collect()
    }

    /// Whether this stack has the canonical imagery band layout.
    pub fn is_imagery(&self) -> bool {
        self.channel_names.len() == IMAGERY_BANDS.len()
            && self
                .channel_names
                .iter()
                .zip(IMAGERY_BANDS)
                .all(|(a, b)| a == b)
    }

    pub(crate) fn require_imagery(&self) -> Result<()> {
        if self.is_imagery() {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "expected imagery bands {:?}, found {:?}",
                IMAGERY_BANDS, self.channel_names
            )))
        }
    }

    /// Returns every violated invariant.
    pub fn validate(&self) -> std::result::Result<(), Vec<Violation>> {
        let mut out = Vec::new();
        if self.width == 0 || self.height == 0 {
            out.push(Violation::ZeroDimension {
                width: self.width,
                height: self.height,
            });
        }
        if self.width > u32::MAX as usize || self.height > u32::MAX as usize {
            out.push(Violation::DimensionTooLarge {
                width: self.width,
                height: self.height,
            });
        }
        if self.channel_names.is_empty() {
            out.push(Violation::NoChannels);
        }
        if self.channel_names.len() > u16::MAX as usize {
            out.push(Violation::TooManyChannels(self.channel_names.len()));
        }
        let mut seen = HashSet::new();
        for name in &self.channel_names {
            if name.is_empty() || name.contains('\n') {
                out.push(Violation::BadChannelName(name.clone()));
            }
            if !seen.insert(name.as_str()) {
                out.push(Violation::DuplicateChannelName(name.clone()));
            }
        }
        if !(self.cell_size_m.is_finite() && self.cell_size_m > 0.0) {
            out.push(Violation::BadCellSize);
        }
        let expected = self.width * self.height * self.channel_names.len();
        if self.values.len() != expected {
            out.push(Violation::ValuesLength {
                expected,
                actual: self.values.len(),
            });
        }
        let mut bad = self.values.iter().enumerate().filter(|(_, v)| !v.is_finite());
        if let Some((first_index, _)) = bad.next() {
            out.push(Violation::NonFinite {
                count: 1 + bad.count(),
                first_index,
            });
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }

    /// Serializes to LSCP. Returns the number of bytes written.
    pub fn write_to<W: Write>(&self, mut sink: W) -> Result<u64> {
        self.validate().map_err(Error::Validation)?;
        let blob = self.channel_names.join("\n");
        let mut header = Vec::with_capacity(24 + blob.len());
        header.extend_from_slice(&MAGIC);
        header.extend_from_slice(&VERSION.to_le_bytes());
        header.extend_from_slice(&(self.channels() as u16).to_le_bytes());
        header.extend_from_slice(&(self.width as u32).to_le_bytes());
        header.extend_from_slice(&(self.height as u32).to_le_bytes());
        header.extend_from_slice(&self.cell_size_m.to_le_bytes());
        header.extend_from_slice(&(blob.len() as u32).to_le_bytes());
        header.extend_from_slice(blob.as_bytes());
        sink.write_all(&header)?;

        let mut payload = Vec::with_capacity(self.values.len() * 4);
        for v in &self.values {
            payload.extend_from_slice(&v.to_le_bytes());
        }
        sink.write_all(&payload)?;
        sink.flush()?;
        Ok((header.len() + payload.len()) as u64)
    }

    /// Parses an LSCP stream and validates the result.
    pub fn read_from<R: Read>(mut source: R) -> Result<Self> {
        let mut fixed = [0u8; 24];
        read_exact_or(&mut source, &mut fixed, "header")?;
        let magic: [u8; 4] = fixed[0..4].try_into().unwrap();
        if magic != MAGIC {
            return Err(Error::BadMagic(magic));
        }
        let version = u16::from_le_bytes([fixed[4], fixed[5]]);
        if version != VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let channels = u16::from_le_bytes([fixed[6], fixed[7]]) as usize;
        let width = u32::from_le_bytes(fixed[8..12].try_into().unwrap()) as usize;
        let height = u32::from_le_bytes(fixed[12..16].try_into().unwrap()) as usize;
        let cell_size_m = f32::from_le_bytes(fixed[16..20].try_into().unwrap());
        let blob_len = u32::from_le_bytes(fixed[20..24].try_into().unwrap()) as usize;

        let mut blob = vec![0u8; blob_len];
        read_exact_or(&mut source, &mut blob, "channel names")?;
        let blob = String::from_utf8(blob)
            .map_err(|_| Error::Format("channel name blob is not UTF-8".into()))?;
        let names: Vec<String> = if channels == 0 {
            Vec::new()
        } else {
            blob.split('\n').map(str::to_string).collect()
        };
        if names.len() != channels {
            return Err(Error::Format(format!(
                "header declares {channels} channels but name blob holds {}",
                names.len()
            )));
        }

        let n = width
            .checked_mul(height)
            .and_then(|x| x.checked_mul(channels))
            .ok_or_else(|| Error::Format("payload size overflows".into()))?;
        let mut payload = vec![0u8; n * 4];
        read_exact_or(&mut source, &mut payload, "payload")?;
        let values = payload
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();

        RasterStack::new(width, height, names, cell_size_m, values)
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<u64> {
        let f = File::create(path)?;
        self.write_to(BufWriter::new(f))
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        let f = File::open(path)?;
        Self::read_from(BufReader::new(f))
    }

    /// Copy of this raster with `delta` added to every value of channel `name`.
    pub fn with_channel_offset(&self, name: &str, delta: f32) -> Result<Self> {
        let c = self
            .channel_index(name)
            .ok_or_else(|| Error::invalid(format!("channel {name:?} not present")))?;
        let mut out = self.clone();
        for v in out.band_mut(c) {
            *v += delta;
        }
        Ok(out)
    }

    /// Copy with pixel `i` of the output taken from pixel `perm[i]` of `self`,
    /// applied to every channel.
    pub fn permute_pixels(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.pixel_count());
        let n = self.pixel_count();
        let mut values = Vec::with_capacity(self.values.len());
        for c in 0..self.channels() {
            let band = &self.values[c * n..(c + 1) * n];
            values.extend(perm.iter().map(|&j| band[j]));
        }
        RasterStack {
            values,
            ..self.clone_header()
        }
    }

    fn clone_header(&self) -> Self {
        RasterStack {
            width: self.width,
            height: self.height,
            channel_names: self.channel_names.clone(),
            cell_size_m: self.cell_size_m,
            values: Vec::new(),
        }
    }
}

fn read_exact_or<R: Read>(r: &mut R, buf: &mut [u8], what: &'static str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => Error::Truncated(what),
        _ => Error::Io(e),
    })
}

/// Writes `r` to `sink` in LSCP format.
pub fn write_raster<W: Write>(r: &RasterStack, sink: W) -> Result<u64> {
    r.write_to(sink)
}

/// Reads and validates an LSCP raster.
pub fn read_raster<R: Read>(source: R) -> Result<RasterStack> {
    RasterStack::read_from(source)
}

/// One geolocated pairing of conditions and imagery.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: String,
    pub lat: f64,
    pub lon: f64,
    pub region: String,
    pub conditions: RasterStack,
    pub imagery: RasterStack,
}

impl Sample {
    pub fn new(
        id: impl Into<String>,
        lat: f64,
        lon: f64,
        region: impl Into<String>,
        conditions: RasterStack,
        imagery: RasterStack,
    ) -> Result<Self> {
        if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
            return Err(Error::invalid(format!("coordinates ({lat}, {lon}) out of range")));
        }
        imagery.require_imagery()?;
        if conditions.width() != imagery.width() || conditions.height() != imagery.height() {
            return Err(Error::invalid(format!(
                "conditions {}x{} and imagery {}x{} differ in shape",
                conditions.width(),
                conditions.height(),
                imagery.width(),
                imagery.height()
            )));
        }
        Ok(Sample {
            id: id.into(),
            lat,
            lon,
            region: region.into(),
            conditions,
            imagery,
        })
    }
}
