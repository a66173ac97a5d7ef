//! Binary portable graymap (P5) reading and writing.

use std::path::Path;

use crate::quality::{GrayImage, QualityError};

fn unreadable(message: impl Into<String>) -> QualityError {
    QualityError::UnreadableImage(message.into())
}

/// Header tokens with `#` comments skipped; returns the values and the
/// offset of the single whitespace byte that ends the header.
fn header(bytes: &[u8]) -> Result<([usize; 3], usize), QualityError> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(unreadable("not a binary PGM (missing P5 magic)"));
    }
    let mut values = [0usize; 3];
    let mut pos = 2;
    for value in &mut values {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(_) => break,
                None => return Err(unreadable("truncated header")),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *value = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| unreadable("malformed header number"))?;
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(unreadable("header must end with whitespace"));
    }
    Ok((values, pos + 1))
}

/// Decodes 8- or 16-bit (big-endian) samples into `[0, 1]`.
pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage, QualityError> {
    let ([width, height, maxval], offset) = header(bytes)?;
    if width == 0 || height == 0 {
        return Err(unreadable("empty image"));
    }
    if !(1..=65535).contains(&maxval) {
        return Err(unreadable(format!("maxval {maxval} out of range")));
    }
    let depth = if maxval < 256 { 1 } else { 2 };
    let count = width * height;
    let data = &bytes[offset..];
    if data.len() < count * depth {
        return Err(unreadable(format!(
            "expected {} data bytes, found {}",
            count * depth,
            data.len()
        )));
    }
    let scale = maxval as f64;
    let pixels = (0..count)
        .map(|i| {
            let v = if depth == 1 {
                data[i] as f64
            } else {
                u16::from_be_bytes([data[2 * i], data[2 * i + 1]]) as f64
            };
            v / scale
        })
        .collect();
    Ok(GrayImage {
        width,
        height,
        pixels,
    })
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<GrayImage, QualityError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| unreadable(format!("{}: {e}", path.display())))?;
    decode_pgm(&bytes)
}

/// 8-bit encoding scaled so the brightest pixel maps to 255.
pub fn encode_pgm(image: &GrayImage) -> Vec<u8> {
    let peak = image.max();
    let scale = if peak > 0.0 { 255.0 / peak } else { 0.0 };
    let mut out = format!("P5\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.extend(
        image
            .pixels
            .iter()
            .map(|&p| (p.max(0.0) * scale).round().min(255.0) as u8),
    );
    out
}

pub fn write_pgm(image: &GrayImage, path: impl AsRef<Path>) -> std::io::Result<()> {
    std::fs::write(path, encode_pgm(image))
}
