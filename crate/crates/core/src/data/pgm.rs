//! 8-bit PGM (P2 ASCII, P5 binary) reading and writing, plus binary PPM output.
//!
//! Header grammar: magic, then width, height and maxval as decimal tokens
//! separated by whitespace, with `#` comments running to end of line. A single
//! whitespace byte ends the header of a P5 file.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub data: Vec<u8>,
}

impl GrayImage {
    /// Samples divided by 255 (by maxval for files with a smaller maxval).
    pub fn to_unit(&self) -> Vec<f64> {
        let m = self.maxval as f64;
        self.data.iter().map(|&p| p as f64 / m).collect()
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::parse(start, format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::parse(start, format!("{what} out of range")))
    }
}

pub fn decode(bytes: &[u8]) -> Result<GrayImage> {
    if bytes.len() < 2 {
        return Err(Error::parse(0, "file too short for a magic number"));
    }
    let binary = match &bytes[..2] {
        b"P5" => true,
        b"P2" => false,
        _ => return Err(Error::parse(0, "expected magic P2 or P5")),
    };
    let mut cur = Cursor { bytes, pos: 2 };
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    cur.skip_space_and_comments();
    let max_at = cur.pos;
    let maxval = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::parse(max_at, "zero image dimension"));
    }
    if maxval == 0 || maxval > 255 {
        return Err(Error::parse(max_at, format!("unsupported maxval {maxval}")));
    }
    let count = width
        .checked_mul(height)
        .ok_or_else(|| Error::parse(max_at, "image dimensions overflow"))?;
    let mut data = Vec::with_capacity(count);
    if binary {
        if cur.pos >= bytes.len() || !bytes[cur.pos].is_ascii_whitespace() {
            return Err(Error::parse(cur.pos, "expected whitespace after maxval"));
        }
        let start = cur.pos + 1;
        if bytes.len() < start + count {
            return Err(Error::parse(
                bytes.len(),
                format!("truncated raster: expected {count} bytes, found {}", bytes.len() - start),
            ));
        }
        data.extend_from_slice(&bytes[start..start + count]);
        if let Some(i) = data.iter().position(|&v| v as usize > maxval) {
            return Err(Error::parse(start + i, format!("sample {} exceeds maxval {maxval}", data[i])));
        }
    } else {
        for _ in 0..count {
            cur.skip_space_and_comments();
            let at = cur.pos;
            let v = cur.number("pixel value")?;
            if v > maxval {
                return Err(Error::parse(at, format!("sample {v} exceeds maxval {maxval}")));
            }
            data.push(v as u8);
        }
    }
    Ok(GrayImage {
        width,
        height,
        maxval: maxval as u16,
        data,
    })
}

/// Binary P5 encoding with maxval 255.
pub fn encode(width: usize, height: usize, data: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(data);
    out
}

/// Binary P6 encoding with maxval 255.
pub fn encode_ppm(width: usize, height: usize, rgb: &[[u8; 3]]) -> Vec<u8> {
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    for px in rgb {
        out.extend_from_slice(px);
    }
    out
}

/// `round(255 v)` with halves rounded up, clamped to `0..=255`.
pub fn quantize(v: f64) -> u8 {
    (v * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Reads a square PGM as a row-major image in `[0, 1]`; returns (side, pixels).
pub fn load_pgm(path: impl AsRef<Path>) -> Result<(usize, Vec<f64>)> {
    let img = load_pgm_any(path)?;
    if img.width != img.height {
        return Err(Error::parse(0, format!("image is {}x{}, expected a square", img.width, img.height)));
    }
    Ok((img.width, img.to_unit()))
}

pub fn load_pgm_any(path: impl AsRef<Path>) -> Result<GrayImage> {
    decode(&std::fs::read(path)?)
}

pub fn save_pgm(path: impl AsRef<Path>, side: usize, pixels: &[f64]) -> Result<()> {
    if pixels.len() != side * side {
        return Err(Error::invalid("pixel buffer does not match side"));
    }
    let data: Vec<u8> = pixels.iter().map(|&v| quantize(v)).collect();
    std::fs::write(path, encode(side, side, &data))?;
    Ok(())
}
