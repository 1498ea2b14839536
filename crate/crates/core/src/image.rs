//! Raster containers (grayscale, binary mask, depth) and Netpbm I/O.

use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("buffer length {got} does not match {width}x{height}")]
    BadLength {
        got: usize,
        width: usize,
        height: usize,
    },
    #[error("netpbm parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// 8-bit intensity image, row-major, origin top-left.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self, ImageError> {
        check_len(data.len(), width, height)?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, v: u8) -> Self {
        Self {
            width,
            height,
            data: vec![v; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    /// HSV value channel, `max(r, g, b)`, of an interleaved RGB buffer.
    pub fn value_channel_from_rgb(width: usize, height: usize, rgb: &[u8]) -> Result<Self, ImageError> {
        if rgb.len() != width * height * 3 {
            return Err(ImageError::BadLength {
                got: rgb.len(),
                width,
                height,
            });
        }
        let data = rgb.chunks_exact(3).map(|p| p[0].max(p[1]).max(p[2])).collect();
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn read_pnm(path: &Path) -> Result<Self, ImageError> {
        let raw = read_netpbm(&std::fs::read(path)?)?;
        let data = match raw.kind {
            Kind::Bitmap => raw.samples.iter().map(|&s| if s != 0 { 255 } else { 0 }).collect(),
            Kind::Graymap => {
                if raw.maxval > 255 {
                    raw.samples.iter().map(|&s| ((s as u32 * 255) / raw.maxval) as u8).collect()
                } else {
                    raw.samples.iter().map(|&s| s as u8).collect()
                }
            }
        };
        Self::new(raw.width, raw.height, data)
    }

    pub fn write_pgm(&self, path: &Path) -> Result<(), ImageError> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        write!(f, "P5\n{} {}\n255\n", self.width, self.height)?;
        f.write_all(&self.data)?;
        f.flush()?;
        Ok(())
    }
}

/// Row-major boolean raster.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMask {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self, ImageError> {
        check_len(bits.len(), width, height)?;
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn filled(width: usize, height: usize, v: bool) -> Self {
        Self {
            width,
            height,
            bits: vec![v; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            bits,
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.width + x] = v;
    }

    /// Out-of-bounds coordinates read as false.
    #[inline]
    pub fn get_signed(&self, x: i64, y: i64) -> bool {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            false
        } else {
            self.get(x as usize, y as usize)
        }
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|b| *b)
    }

    /// True pixel with at least one false (or out-of-image) 4-neighbor.
    pub fn is_boundary(&self, x: usize, y: usize) -> bool {
        if !self.get(x, y) {
            return false;
        }
        let (xi, yi) = (x as i64, y as i64);
        !(self.get_signed(xi - 1, yi)
            && self.get_signed(xi + 1, yi)
            && self.get_signed(xi, yi - 1)
            && self.get_signed(xi, yi + 1))
    }

    pub fn same_dims(&self, o: &BinaryMask) -> Result<(), ImageError> {
        if self.width != o.width || self.height != o.height {
            return Err(ImageError::DimensionMismatch(self.width, self.height, o.width, o.height));
        }
        Ok(())
    }

    /// Accepts P1/P4 (1 = true) and P2/P5 (nonzero = true).
    pub fn read_pnm(path: &Path) -> Result<Self, ImageError> {
        let raw = read_netpbm(&std::fs::read(path)?)?;
        Self::new(raw.width, raw.height, raw.samples.iter().map(|&s| s != 0).collect())
    }

    /// Writes a binary PBM (P4), true as 1.
    pub fn write_pbm(&self, path: &Path) -> Result<(), ImageError> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        write!(f, "P4\n{} {}\n", self.width, self.height)?;
        let row_bytes = self.width.div_ceil(8);
        for y in 0..self.height {
            let mut row = vec![0u8; row_bytes];
            for x in 0..self.width {
                if self.get(x, y) {
                    row[x / 8] |= 0x80 >> (x % 8);
                }
            }
            f.write_all(&row)?;
        }
        f.flush()?;
        Ok(())
    }
}

/// Metric depth, row-major; 0 marks an invalid pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    pub width: usize,
    pub height: usize,
    pub depths: Vec<f64>,
}

impl DepthMap {
    pub fn new(width: usize, height: usize, depths: Vec<f64>) -> Result<Self, ImageError> {
        check_len(depths.len(), width, height)?;
        if depths.iter().any(|d| !(*d >= 0.0) || !d.is_finite()) {
            return Err(ImageError::Parse("depths must be finite and non-negative".into()));
        }
        Ok(Self {
            width,
            height,
            depths,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            depths: vec![0.0; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.depths[y * self.width + x]
    }

    /// 16-bit PGM in millimeters.
    pub fn read_pgm_mm(path: &Path) -> Result<Self, ImageError> {
        let raw = read_netpbm(&std::fs::read(path)?)?;
        if raw.kind != Kind::Graymap {
            return Err(ImageError::Parse("depth must be a graymap".into()));
        }
        Self::new(
            raw.width,
            raw.height,
            raw.samples.iter().map(|&s| s as f64 / 1000.0).collect(),
        )
    }

    /// Writes P5 with maxval 65535, big-endian millimeters.
    pub fn write_pgm_mm(&self, path: &Path) -> Result<(), ImageError> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        write!(f, "P5\n{} {}\n65535\n", self.width, self.height)?;
        for d in &self.depths {
            let mm = (d * 1000.0).round().clamp(0.0, 65535.0) as u16;
            f.write_all(&mm.to_be_bytes())?;
        }
        f.flush()?;
        Ok(())
    }
}

fn check_len(got: usize, width: usize, height: usize) -> Result<(), ImageError> {
    if got != width * height {
        return Err(ImageError::BadLength { got, width, height });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Bitmap,
    Graymap,
}

struct RawPnm {
    kind: Kind,
    width: usize,
    height: usize,
    maxval: u32,
    samples: Vec<u16>,
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_ws_and_comments(&mut self) {
        while self.pos < self.buf.len() {
            let c = self.buf[self.pos];
            if c == b'#' {
                while self.pos < self.buf.len() && self.buf[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if c.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn uint(&mut self) -> Result<u32, ImageError> {
        self.skip_ws_and_comments();
        let start = self.pos;
        while self.pos < self.buf.len() && self.buf[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.buf[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| ImageError::Parse(format!("expected integer at byte {start}")))
    }

    /// Plain PBM allows samples without separating whitespace.
    fn bit(&mut self) -> Result<u16, ImageError> {
        self.skip_ws_and_comments();
        match self.buf.get(self.pos) {
            Some(b'0') => {
                self.pos += 1;
                Ok(0)
            }
            Some(b'1') => {
                self.pos += 1;
                Ok(1)
            }
            _ => Err(ImageError::Parse(format!("expected bit at byte {}", self.pos))),
        }
    }
}

fn read_netpbm(buf: &[u8]) -> Result<RawPnm, ImageError> {
    if buf.len() < 2 || buf[0] != b'P' {
        return Err(ImageError::Parse("missing magic".into()));
    }
    let magic = buf[1];
    let mut c = Cursor { buf, pos: 2 };
    let width = c.uint()? as usize;
    let height = c.uint()? as usize;
    let n = width * height;
    let (kind, maxval) = match magic {
        b'1' | b'4' => (Kind::Bitmap, 1),
        b'2' | b'5' => {
            let m = c.uint()?;
            if m == 0 || m > 65535 {
                return Err(ImageError::Parse(format!("bad maxval {m}")));
            }
            (Kind::Graymap, m)
        }
        _ => return Err(ImageError::Parse(format!("unsupported magic P{}", magic as char))),
    };
    let mut samples = Vec::with_capacity(n);
    match magic {
        b'1' => {
            for _ in 0..n {
                samples.push(c.bit()?);
            }
        }
        b'2' => {
            for _ in 0..n {
                samples.push(c.uint()? as u16);
            }
        }
        b'4' | b'5' => {
            // exactly one whitespace byte after the header
            c.pos += 1;
            let data = buf.get(c.pos..).unwrap_or(&[]);
            if magic == b'4' {
                let row_bytes = width.div_ceil(8);
                if data.len() < row_bytes * height {
                    return Err(ImageError::Parse("truncated P4 raster".into()));
                }
                for y in 0..height {
                    for x in 0..width {
                        let byte = data[y * row_bytes + x / 8];
                        samples.push(((byte >> (7 - x % 8)) & 1) as u16);
                    }
                }
            } else if maxval < 256 {
                if data.len() < n {
                    return Err(ImageError::Parse("truncated P5 raster".into()));
                }
                samples.extend(data[..n].iter().map(|&b| b as u16));
            } else {
                if data.len() < 2 * n {
                    return Err(ImageError::Parse("truncated 16-bit P5 raster".into()));
                }
                let mut rd = &data[..2 * n];
                let mut b = [0u8; 2];
                for _ in 0..n {
                    rd.read_exact(&mut b)?;
                    samples.push(u16::from_be_bytes(b));
                }
            }
        }
        _ => unreachable!(),
    }
    Ok(RawPnm {
        kind,
        width,
        height,
        maxval,
        samples,
    })
}
