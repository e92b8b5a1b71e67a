//! Binary PGM (P5, maxval 255) reading and writing.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::GrayImage;
use crate::error::{Error, Result};

pub fn load_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    load_pgm_bytes(&bytes, path)
}

/// Parses an in-memory P5 file. `origin` is only used in error messages.
pub fn load_pgm_bytes(bytes: &[u8], origin: &Path) -> Result<GrayImage> {
    let (width, height, payload) = read_pgm(bytes, origin)?;
    let pixels = payload.iter().map(|b| f64::from(*b)).collect();
    GrayImage::new(width, height, pixels)
}

/// Returns `(width, height, payload)` for a P5 file.
pub fn read_pgm<'a>(bytes: &'a [u8], origin: &Path) -> Result<(usize, usize, &'a [u8])> {
    let malformed = |reason: &str| Error::MalformedPgm {
        path: origin.to_path_buf(),
        reason: reason.to_string(),
    };

    if bytes.len() < 2 {
        return Err(malformed("missing magic number"));
    }
    let magic = &bytes[..2];
    if magic != b"P5" {
        return Err(Error::UnsupportedPgm {
            path: origin.to_path_buf(),
            magic: String::from_utf8_lossy(magic).into_owned(),
        });
    }

    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in &mut fields {
        skip_whitespace_and_comments(bytes, &mut pos);
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(malformed("expected a decimal header field"));
        }
        // digits only, so utf8 and parse failures mean overflow
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| malformed("header field out of range"))?;
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(malformed("zero width or height"));
    }
    if maxval != 255 {
        return Err(malformed(&format!(
            "maxval {maxval}, only 255 is supported"
        )));
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(malformed("missing whitespace after maxval")),
    }

    let expected = width
        .checked_mul(height)
        .ok_or_else(|| malformed("image too large"))?;
    let found = bytes.len() - pos;
    if found < expected {
        return Err(Error::TruncatedPgm {
            path: origin.to_path_buf(),
            expected,
            found,
        });
    }
    Ok((width, height, &bytes[pos..pos + expected]))
}

fn skip_whitespace_and_comments(bytes: &[u8], pos: &mut usize) {
    while *pos < bytes.len() {
        match bytes[*pos] {
            b'#' => {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
            }
            b if b.is_ascii_whitespace() => *pos += 1,
            _ => break,
        }
    }
}

/// Encodes the image as P5, rounding and clamping to bytes.
pub fn write_pgm(img: &GrayImage, out: &mut impl Write) -> std::io::Result<()> {
    write!(out, "P5\n{} {}\n255\n", img.width(), img.height())?;
    out.write_all(&img.to_bytes())
}

pub fn save_pgm(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::with_capacity(img.width() * img.height() + 32);
    write_pgm(img, &mut buf).map_err(|e| Error::io(path, e))?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(bytes: &[u8]) -> Result<GrayImage> {
        load_pgm_bytes(bytes, Path::new("test.pgm"))
    }

    #[test]
    fn reads_bytes_verbatim() {
        let mut file = b"P5\n2 2\n255\n".to_vec();
        file.extend([0, 128, 255, 64]);
        let img = parse(&file).unwrap();
        assert_eq!((img.width(), img.height()), (2, 2));
        assert_eq!(img.pixels(), &[0.0, 128.0, 255.0, 64.0]);
    }

    #[test]
    fn header_comments_are_skipped() {
        let mut file = b"P5 # made by hand\n# another\n3 1 255\n".to_vec();
        file.extend([1, 2, 3]);
        assert_eq!(parse(&file).unwrap().pixels(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn ascii_variant_is_rejected() {
        let err = parse(b"P2\n2 2\n255\n0 1 2 3\n").unwrap_err();
        assert!(matches!(err, Error::UnsupportedPgm { .. }), "{err}");
        assert!(err.to_string().contains("unsupported PGM variant"));
    }

    #[test]
    fn short_payload_is_truncated() {
        let mut file = b"P5\n4 4\n255\n".to_vec();
        file.extend([0; 10]);
        let err = parse(&file).unwrap_err();
        assert!(err.to_string().contains("truncated"), "{err}");
    }

    #[test]
    fn sixteen_bit_maxval_is_rejected() {
        let mut file = b"P5\n1 1\n65535\n".to_vec();
        file.extend([0, 0]);
        assert!(matches!(parse(&file), Err(Error::MalformedPgm { .. })));
    }

    proptest! {
        #[test]
        fn write_then_read_is_byte_identical(
            (w, h, data) in (1usize..20, 1usize..20)
                .prop_flat_map(|(w, h)| (Just(w), Just(h), proptest::collection::vec(any::<u8>(), w * h)))
        ) {
            let mut file = format!("P5\n{w} {h}\n255\n").into_bytes();
            file.extend(&data);
            let img = parse(&file).unwrap();
            let mut out = Vec::new();
            write_pgm(&img, &mut out).unwrap();
            prop_assert_eq!(out, file);
        }
    }
}
