//! Binary greyscale images (PGM, `P5`).

use crate::error::{CliError, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    /// Row-major samples in `0..=maxval`.
    pub samples: Vec<u16>,
}

fn bad(message: impl Into<String>) -> CliError {
    CliError::Format { what: "PGM", message: message.into() }
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&c) = self.bytes.get(self.pos) {
            if c == b'#' {
                while self.bytes.get(self.pos).is_some_and(|c| *c != b'\n') {
                    self.pos += 1;
                }
            } else if c.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| bad(format!("bad {what}")))
    }
}

impl GrayImage {
    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if !bytes.starts_with(b"P5") {
            return Err(bad("missing P5 magic"));
        }
        let mut h = Header { bytes, pos: 2 };
        let width = h.number("width")?;
        let height = h.number("height")?;
        let maxval = h.number("maxval")?;
        if width == 0 || height == 0 {
            return Err(bad("empty image"));
        }
        if !(1..=65535).contains(&maxval) {
            return Err(bad("maxval must be in 1..=65535"));
        }
        if !bytes.get(h.pos).is_some_and(u8::is_ascii_whitespace) {
            return Err(bad("no separator after header"));
        }
        let data = &bytes[h.pos + 1..];
        let count = width.checked_mul(height).ok_or_else(|| bad("image too large"))?;
        let wide = maxval > 255;
        let need = if wide { 2 * count } else { count };
        if data.len() < need {
            return Err(bad(format!("expected {need} bytes of samples, found {}", data.len())));
        }
        let samples: Vec<u16> = if wide {
            data[..need].chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()
        } else {
            data[..need].iter().map(|b| u16::from(*b)).collect()
        };
        if samples.iter().any(|s| usize::from(*s) > maxval) {
            return Err(bad("sample above maxval"));
        }
        Ok(GrayImage { width, height, maxval: maxval as u16, samples })
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n{}\n", self.width, self.height, self.maxval).into_bytes();
        if self.maxval > 255 {
            out.extend(self.samples.iter().flat_map(|s| s.to_be_bytes()));
        } else {
            out.extend(self.samples.iter().map(|s| *s as u8));
        }
        out
    }

    /// Samples scaled to `[0, 1]`.
    pub fn intensities(&self) -> Vec<f64> {
        let m = f64::from(self.maxval);
        self.samples.iter().map(|s| f64::from(*s) / m).collect()
    }

    /// 8-bit image of `values` clamped to `[0, 1]`.
    pub fn from_unit(width: usize, height: usize, values: &[f64]) -> Result<Self> {
        if values.len() != width * height {
            return Err(bad("value count does not match the image size"));
        }
        let samples = values.iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u16).collect();
        Ok(GrayImage { width, height, maxval: 255, samples })
    }

    /// Labels `0..labels` spread evenly over the grey range.
    pub fn from_labels(width: usize, height: usize, labels: &[usize], count: usize) -> Result<Self> {
        let top = count.saturating_sub(1).max(1) as f64;
        let values: Vec<f64> = labels.iter().map(|l| *l as f64 / top).collect();
        Self::from_unit(width, height, &values)
    }
}
