//! Binary portable pixmap I/O (P5 grayscale, P6 color), 8- and 16-bit.
//!
//! Values map to [0, 1] by dividing by the header maxval; 16-bit samples
//! are big-endian per the format. The writer emits a canonical header
//! (`P5\n<w> <h>\n<max>\n`), so write(read(f)) is byte-identical for files
//! in that canonical form.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::ImagePlane;
use crate::real::{rf, Real};

/// A decoded raster: 1 (grayscale) or 3 (RGB) unit-range planes plus the
/// maxval needed to re-encode losslessly.
#[derive(Debug, Clone)]
pub struct Raster<R: Real> {
    pub planes: Vec<ImagePlane<R>>,
    pub maxval: u16,
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn skip_space(&mut self) -> Result<()> {
        loop {
            match self.bytes.get(self.pos) {
                Some(b) if b.is_ascii_whitespace() => self.pos += 1,
                Some(b'#') => {
                    while let Some(&b) = self.bytes.get(self.pos) {
                        self.pos += 1;
                        if b == b'\n' {
                            break;
                        }
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn token_uint(&mut self, what: &str) -> Result<u64> {
        self.skip_space()?;
        let start = self.pos;
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|b| b.is_ascii_digit())
        {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.err(format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| self.err(format!("{what} out of range")))
    }
}

/// Decode a binary PGM/PPM from bytes.
pub fn decode_image<R: Real>(bytes: &[u8]) -> Result<Raster<R>> {
    let mut p = Parser { bytes, pos: 0 };
    let channels = match bytes.get(..2) {
        Some(b"P5") => 1usize,
        Some(b"P6") => 3usize,
        _ => return Err(p.err("not a binary PGM (P5) or PPM (P6) file")),
    };
    p.pos = 2;
    let width = p.token_uint("width")? as usize;
    let height = p.token_uint("height")? as usize;
    let maxval = p.token_uint("maxval")?;
    if width == 0 || height == 0 {
        return Err(p.err("zero image dimension"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(p.err(format!("maxval {maxval} outside [1, 65535]")));
    }
    // single whitespace byte separates header from payload
    match bytes.get(p.pos) {
        Some(b) if b.is_ascii_whitespace() => p.pos += 1,
        _ => return Err(p.err("expected whitespace before pixel data")),
    }
    let bytes_per_sample = if maxval > 255 { 2 } else { 1 };
    let expected = width * height * channels * bytes_per_sample;
    let payload = &bytes[p.pos..];
    if payload.len() < expected {
        return Err(Error::Parse {
            offset: bytes.len(),
            message: format!(
                "truncated payload: expected {expected} bytes, found {}",
                payload.len()
            ),
        });
    }
    let scale = 1.0 / maxval as f64;
    let mut planes_data: Vec<Vec<R>> = vec![Vec::with_capacity(width * height); channels];
    for i in 0..width * height {
        for (c, plane) in planes_data.iter_mut().enumerate() {
            let o = (i * channels + c) * bytes_per_sample;
            let raw = if bytes_per_sample == 2 {
                u16::from_be_bytes([payload[o], payload[o + 1]]) as u64
            } else {
                payload[o] as u64
            };
            if raw > maxval {
                return Err(Error::Parse {
                    offset: p.pos + o,
                    message: format!("sample {raw} exceeds maxval {maxval}"),
                });
            }
            plane.push(rf::<R>(raw as f64 * scale));
        }
    }
    let planes = planes_data
        .into_iter()
        .map(|d| ImagePlane::new(width, height, d))
        .collect::<Result<_>>()?;
    Ok(Raster {
        planes,
        maxval: maxval as u16,
    })
}

/// Encode 1 or 3 unit-range planes as binary PGM/PPM.
pub fn encode_image<R: Real>(planes: &[ImagePlane<R>], maxval: u16) -> Result<Vec<u8>> {
    let channels = planes.len();
    if channels != 1 && channels != 3 {
        return Err(Error::invalid(format!(
            "expected 1 or 3 planes, got {channels}"
        )));
    }
    if maxval == 0 {
        return Err(Error::invalid("maxval must be positive"));
    }
    let (w, h) = (planes[0].width(), planes[0].height());
    if planes.iter().any(|p| (p.width(), p.height()) != (w, h)) {
        return Err(Error::SizeMismatch("planes differ in size".into()));
    }
    let magic = if channels == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{w} {h}\n{maxval}\n").into_bytes();
    let two_bytes = maxval > 255;
    let mv = maxval as f64;
    for i in 0..w * h {
        for plane in planes {
            let v = plane.as_slice()[i].to_f64().unwrap().clamp(0.0, 1.0);
            let raw = (v * mv).round() as u16;
            if two_bytes {
                out.extend_from_slice(&raw.to_be_bytes());
            } else {
                out.push(raw as u8);
            }
        }
    }
    Ok(out)
}

pub fn read_image<R: Real>(path: impl AsRef<Path>) -> Result<Raster<R>> {
    decode_image(&fs::read(path)?)
}

pub fn write_image<R: Real>(
    path: impl AsRef<Path>,
    planes: &[ImagePlane<R>],
    maxval: u16,
) -> Result<()> {
    fs::write(path, encode_image(planes, maxval)?)?;
    Ok(())
}
