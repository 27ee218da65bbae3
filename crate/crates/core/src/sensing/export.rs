//! 16-bit binary PGM export.
//!
//! Depth is stored in millimeters (`round(depth * 1000)`, saturating at
//! 65535, i.e. 65.535 m). Segmentation stores object ids directly; ids above
//! 65535 saturate. Samples are big-endian as the format requires.

use std::io::{self, Read, Write};

use super::image::{DepthImage, SegmentationImage};

pub const DEPTH_SCALE: f64 = 1000.0;

fn write_pgm16<W: Write>(mut out: W, width: usize, height: usize, values: impl Iterator<Item = u16>) -> io::Result<()> {
    write!(out, "P5\n{width} {height}\n65535\n")?;
    let mut buf = Vec::with_capacity(width * height * 2);
    for v in values {
        buf.extend_from_slice(&v.to_be_bytes());
    }
    out.write_all(&buf)
}

pub fn depth_to_millimeters(depth: f64) -> u16 {
    (depth * DEPTH_SCALE).round().clamp(0.0, u16::MAX as f64) as u16
}

pub fn write_depth_pgm<W: Write>(out: W, image: &DepthImage) -> io::Result<()> {
    write_pgm16(out, image.width, image.height, image.data.iter().map(|&d| depth_to_millimeters(d)))
}

pub fn write_segmentation_pgm<W: Write>(out: W, image: &SegmentationImage) -> io::Result<()> {
    write_pgm16(
        out,
        image.width,
        image.height,
        image.data.iter().map(|&id| id.min(u16::MAX as u32) as u16),
    )
}

/// Reads a 16-bit binary PGM back as (width, height, samples).
pub fn read_pgm16<R: Read>(mut input: R) -> io::Result<(usize, usize, Vec<u16>)> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let invalid = |m: &str| io::Error::new(io::ErrorKind::InvalidData, m.to_string());
    // header: magic, width, height, maxval separated by whitespace
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(invalid("truncated header"));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    pos += 1;
    if fields[0] != "P5" || fields[3] != "65535" {
        return Err(invalid("not a 16-bit binary PGM"));
    }
    let w: usize = fields[1].parse().map_err(|_| invalid("bad width"))?;
    let h: usize = fields[2].parse().map_err(|_| invalid("bad height"))?;
    let data = bytes.get(pos..pos + w * h * 2).ok_or_else(|| invalid("truncated data"))?;
    let values = data.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect();
    Ok((w, h, values))
}
