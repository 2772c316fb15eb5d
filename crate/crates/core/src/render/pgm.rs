//! Binary PGM (P5, maxval 255) encoding.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::TactileImage;

/// Encodes `img` as P5; the pixel pitch is kept in a `# mm_per_px` comment.
pub fn encode_pgm(img: &TactileImage) -> Vec<u8> {
    let mut out = format!(
        "P5\n# mm_per_px {:?}\n{} {}\n255\n",
        img.mm_per_px, img.width, img.height
    )
    .into_bytes();
    out.extend(
        img.pixels
            .iter()
            .map(|&p| (255.0 * p).round().clamp(0.0, 255.0) as u8),
    );
    out
}

fn next_token<'a>(bytes: &'a [u8], pos: &mut usize, pitch: &mut Option<f64>) -> Result<&'a str> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            let start = *pos;
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            let comment = String::from_utf8_lossy(&bytes[start + 1..*pos]);
            if let Some(v) = comment.trim().strip_prefix("mm_per_px") {
                *pitch = v.trim().parse().ok();
            }
        } else {
            break;
        }
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::Parse("truncated PGM header".into()));
    }
    std::str::from_utf8(&bytes[start..*pos])
        .map_err(|_| Error::Parse("non-ASCII PGM header".into()))
}

fn header_number(bytes: &[u8], pos: &mut usize, pitch: &mut Option<f64>) -> Result<usize> {
    let tok = next_token(bytes, pos, pitch)?;
    tok.parse()
        .map_err(|_| Error::Parse(format!("bad PGM header field `{tok}`")))
}

/// Decodes a P5 image; intensities become `value / maxval`. The pixel pitch
/// comes from a `# mm_per_px` header comment when present, else
/// `default_mm_per_px`.
pub fn decode_pgm(bytes: &[u8], default_mm_per_px: f64) -> Result<TactileImage> {
    let mut pos = 0;
    let mut pitch = None;
    if next_token(bytes, &mut pos, &mut pitch)? != "P5" {
        return Err(Error::Parse("not a binary PGM (P5) file".into()));
    }
    let width = header_number(bytes, &mut pos, &mut pitch)?;
    let height = header_number(bytes, &mut pos, &mut pitch)?;
    let maxval = header_number(bytes, &mut pos, &mut pitch)?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::Parse(format!("unsupported PGM maxval {maxval}")));
    }
    pos += 1;
    let data = bytes
        .get(pos..pos + width * height)
        .ok_or_else(|| Error::Parse("truncated PGM data".into()))?;
    let pixels = data
        .iter()
        .map(|&b| (b as f64 / maxval as f64).min(1.0))
        .collect();
    TactileImage::new(width, height, pitch.unwrap_or(default_mm_per_px), pixels)
}

pub fn write_pgm(img: &TactileImage, path: &Path) -> Result<()> {
    fs::write(path, encode_pgm(img)).map_err(|source| Error::DatasetWrite {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_pgm(path: &Path, default_mm_per_px: f64) -> Result<TactileImage> {
    decode_pgm(&fs::read(path)?, default_mm_per_px)
}
