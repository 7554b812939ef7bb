//! Portable graymap / pixmap (PGM / PPM) reading and 16-bit writing.

use std::fs;
use std::path::Path;

use crate::error::Result;
use crate::tensornet::{Shape, Tensor};
use crate::Error;

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_space(&mut self) {
        while let Some(&b) = self.buf.get(self.pos) {
            if b == b'#' {
                while self.buf.get(self.pos).is_some_and(|&b| b != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Option<&str> {
        self.skip_space();
        let start = self.pos;
        while self.buf.get(self.pos).is_some_and(|b| !b.is_ascii_whitespace()) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.buf[start..self.pos]).ok().filter(|t| !t.is_empty())
    }

    fn number(&mut self) -> Option<usize> {
        self.token()?.parse().ok()
    }
}

/// Decodes P2/P3/P5/P6 data into a planar tensor scaled to `[0, 1]`.
pub(crate) fn decode(buf: &[u8]) -> std::result::Result<Tensor, String> {
    let mut cur = Cursor { buf, pos: 0 };
    let magic = cur.token().ok_or("missing magic")?.to_string();
    let (channels, binary) = match magic.as_str() {
        "P2" => (1, false),
        "P5" => (1, true),
        "P3" => (3, false),
        "P6" => (3, true),
        m => return Err(format!("unsupported netpbm magic {m}")),
    };
    let width = cur.number().ok_or("bad width")?;
    let height = cur.number().ok_or("bad height")?;
    let maxval = cur.number().ok_or("bad maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(format!("maxval {maxval} out of range"));
    }
    let n = width * height * channels;
    let mut samples = Vec::with_capacity(n);
    if binary {
        // exactly one whitespace byte separates the header from the raster
        cur.pos += 1;
        let wide = maxval > 255;
        let bytes = if wide { 2 * n } else { n };
        let raster = buf.get(cur.pos..cur.pos + bytes).ok_or("raster truncated")?;
        if wide {
            samples.extend(raster.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]]) as usize));
        } else {
            samples.extend(raster.iter().map(|&b| b as usize));
        }
    } else {
        for _ in 0..n {
            samples.push(cur.number().ok_or("raster truncated")?);
        }
    }
    if samples.iter().any(|&s| s > maxval) {
        return Err("sample exceeds maxval".into());
    }
    let scale = maxval as f64;
    let data = Tensor::from_fn(Shape::new(channels, height, width), |c, y, x| {
        samples[(y * width + x) * channels + c] as f64 / scale
    });
    Ok(data)
}

pub(crate) fn read(path: &Path) -> Result<Tensor> {
    let buf = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&buf).map_err(|message| Error::Image {
        path: path.to_path_buf(),
        message,
    })
}

/// Binary 16-bit encoding: P5 for one channel, P6 for three.
pub(crate) fn encode(image: &Tensor) -> std::result::Result<Vec<u8>, String> {
    let s = image.shape();
    let magic = match s.channels {
        1 => "P5",
        3 => "P6",
        c => return Err(format!("netpbm supports 1 or 3 channels, not {c}")),
    };
    let mut out = format!("{magic}\n{} {}\n65535\n", s.width, s.height).into_bytes();
    for y in 0..s.height {
        for x in 0..s.width {
            for c in 0..s.channels {
                let q = (image.get(c, y, x).clamp(0.0, 1.0) * 65535.0).round() as u16;
                out.extend_from_slice(&q.to_be_bytes());
            }
        }
    }
    Ok(out)
}

pub(crate) fn write(path: &Path, image: &Tensor) -> Result<()> {
    let bytes = encode(image).map_err(|message| Error::Image {
        path: path.to_path_buf(),
        message,
    })?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
