//! Binary greyscale PGM (P5) images, first row at the top (north up).

use std::io::{self, Write};
use std::path::Path;

/// Encodes `pixels` given in grid order (row 0 = southernmost) as P5.
pub fn encode_pgm(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    assert_eq!(pixels.len(), width * height, "pixel buffer does not match image size");
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    for row in (0..height).rev() {
        out.extend_from_slice(&pixels[row * width..(row + 1) * width]);
    }
    out
}

pub fn write_pgm(path: impl AsRef<Path>, width: usize, height: usize, pixels: &[u8]) -> io::Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&encode_pgm(width, height, pixels))
}

/// Maps `value` linearly onto `1..=255` between `floor` and `ceiling`,
/// leaving 0 for "no data".
pub fn scale_to_grey(value: f64, floor: f64, ceiling: f64) -> u8 {
    let span = ceiling - floor;
    let t = if span > 0.0 { ((value - floor) / span).clamp(0.0, 1.0) } else { 1.0 };
    1 + (t * 254.0).round() as u8
}
