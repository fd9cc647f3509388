//! Binary PGM (P5) images with 8-bit samples.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub maxval: u8,
    /// Row-major samples.
    pub pixels: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PgmError {
    /// Byte offset at which parsing failed.
    pub offset: usize,
    pub message: String,
}

impl fmt::Display for PgmError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "malformed PGM at byte {}: {}", self.offset, self.message)
    }
}

impl std::error::Error for PgmError {}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn fail<T>(&self, message: impl Into<String>) -> Result<T, PgmError> {
        Err(PgmError {
            offset: self.pos,
            message: message.into(),
        })
    }

    /// Skips whitespace and `#` comments between header fields.
    fn skip_separators(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&c| c != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize, PgmError> {
        self.skip_separators();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return self.fail(format!("expected {what}"));
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ASCII digits");
        text.parse().or_else(|_| {
            self.pos = start;
            self.fail(format!("{what} {text} is out of range"))
        })
    }
}

impl Pgm {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Self {
        assert_eq!(
            pixels.len(),
            width * height,
            "pixel count must be width·height"
        );
        Self {
            width,
            height,
            maxval: 255,
            pixels,
        }
    }

    pub fn parse(bytes: &[u8]) -> Result<Self, PgmError> {
        let mut c = Cursor { bytes, pos: 0 };
        if !bytes.starts_with(b"P5") {
            return c.fail("missing P5 magic number");
        }
        c.pos = 2;
        if !bytes
            .get(2)
            .is_some_and(|b| b.is_ascii_whitespace() || *b == b'#')
        {
            return c.fail("expected whitespace after magic number");
        }
        let width = c.number("width")?;
        let height = c.number("height")?;
        c.skip_separators();
        let maxval_at = c.pos;
        let maxval = c.number("maxval")?;
        if maxval == 0 || maxval > 255 {
            c.pos = maxval_at;
            return c.fail(format!(
                "maxval {maxval} unsupported; only 8-bit images (1..=255)"
            ));
        }
        if width == 0 || height == 0 {
            return c.fail("image dimensions must be positive");
        }
        if !bytes.get(c.pos).is_some_and(u8::is_ascii_whitespace) {
            return c.fail("expected a single whitespace byte before the raster");
        }
        c.pos += 1;
        let Some(count) = width.checked_mul(height) else {
            return c.fail(format!("{width}x{height} raster size overflows"));
        };
        let raster = &bytes[c.pos..];
        if raster.len() < count {
            c.pos = bytes.len();
            return c.fail(format!(
                "raster truncated: need {count} bytes, found {}",
                raster.len()
            ));
        }
        if raster.len() > count {
            c.pos += count;
            return c.fail("trailing bytes after the raster");
        }
        if let Some(i) = raster.iter().position(|&p| p as usize > maxval) {
            c.pos += i;
            return c.fail(format!("sample {} exceeds maxval {maxval}", raster[i]));
        }
        Ok(Self {
            width,
            height,
            maxval: maxval as u8,
            pixels: raster.to_vec(),
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n{}\n", self.width, self.height, self.maxval).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.pixels.iter().map(|&p| p as f64).collect()
    }

    /// Rounds and clamps samples to `0..=maxval`.
    pub fn from_f64(width: usize, height: usize, maxval: u8, values: &[f64]) -> Self {
        assert_eq!(
            values.len(),
            width * height,
            "sample count must be width·height"
        );
        let hi = maxval as f64;
        Self {
            width,
            height,
            maxval,
            pixels: values
                .iter()
                .map(|&v| v.round().clamp(0.0, hi) as u8)
                .collect(),
        }
    }
}
