//! Reader for the big-endian IDX container used by MNIST.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::Mat;

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

/// Raw `u8` images, `count` of them, each `rows x cols` row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

impl IdxImages {
    pub fn image(&self, i: usize) -> &[u8] {
        let size = self.rows * self.cols;
        &self.pixels[i * size..(i + 1) * size]
    }

    /// One flattened image per row, scaled to `[0, 1]`.
    pub fn to_mat(&self) -> Mat {
        let data = self.pixels.iter().map(|&p| p as f64 / 255.0).collect();
        Mat::from_vec(self.count, self.rows * self.cols, data).expect("consistent header")
    }
}

fn be_u32(buf: &[u8], offset: usize) -> Result<u32> {
    buf.get(offset..offset + 4)
        .map(|b| u32::from_be_bytes(b.try_into().unwrap()))
        .ok_or_else(|| Error::format(offset as u64, "file ends inside the header"))
}

fn check_magic(buf: &[u8], want: u32) -> Result<()> {
    let magic = be_u32(buf, 0)?;
    if magic != want {
        return Err(Error::format(
            0,
            format!("bad magic 0x{magic:08x}, expected 0x{want:08x}"),
        ));
    }
    Ok(())
}

fn payload(buf: &[u8], start: usize, len: usize) -> Result<&[u8]> {
    if buf.len() < start + len {
        return Err(Error::format(
            buf.len() as u64,
            format!("short payload: {} bytes needed, {} present", len, buf.len() - start),
        ));
    }
    Ok(&buf[start..start + len])
}

pub fn parse_idx_images(buf: &[u8]) -> Result<IdxImages> {
    check_magic(buf, IMAGES_MAGIC)?;
    let count = be_u32(buf, 4)? as usize;
    let rows = be_u32(buf, 8)? as usize;
    let cols = be_u32(buf, 12)? as usize;
    let pixels = payload(buf, 16, count * rows * cols)?.to_vec();
    Ok(IdxImages {
        count,
        rows,
        cols,
        pixels,
    })
}

pub fn parse_idx_labels(buf: &[u8]) -> Result<Vec<u8>> {
    check_magic(buf, LABELS_MAGIC)?;
    let count = be_u32(buf, 4)? as usize;
    Ok(payload(buf, 8, count)?.to_vec())
}

pub fn load_idx_images(path: impl AsRef<Path>) -> Result<IdxImages> {
    parse_idx_images(&fs::read(path)?)
}

pub fn load_idx_labels(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    parse_idx_labels(&fs::read(path)?)
}

/// Images and labels, checked to have equal counts.
pub fn load_idx_pair(images: impl AsRef<Path>, labels: impl AsRef<Path>) -> Result<(IdxImages, Vec<u8>)> {
    let img = load_idx_images(images)?;
    let lab = load_idx_labels(labels)?;
    if img.count != lab.len() {
        return Err(Error::format(
            4,
            format!("{} images but {} labels", img.count, lab.len()),
        ));
    }
    Ok((img, lab))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn images_file(count: u32, side: u32, payload: &[u8]) -> Vec<u8> {
        let mut b = Vec::new();
        for v in [IMAGES_MAGIC, count, side, side] {
            b.extend_from_slice(&v.to_be_bytes());
        }
        b.extend_from_slice(payload);
        b
    }

    #[test]
    fn parses_header_and_scales() {
        let buf = images_file(2, 2, &[0, 255, 51, 0, 1, 2, 3, 4]);
        let img = parse_idx_images(&buf).unwrap();
        assert_eq!((img.count, img.rows, img.cols), (2, 2, 2));
        assert_eq!(img.image(1), &[1, 2, 3, 4]);
        let m = img.to_mat();
        assert_eq!(m[(0, 1)], 1.0);
        assert!((m[(0, 2)] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn wrong_magic_and_short_read() {
        let mut buf = images_file(1, 2, &[0, 0, 0, 0]);
        assert!(parse_idx_labels(&buf).is_err());
        buf[3] = 0x01;
        assert!(matches!(parse_idx_images(&buf), Err(Error::Format { offset: 0, .. })));
        let short = images_file(2, 2, &[0; 5]);
        assert!(matches!(parse_idx_images(&short), Err(Error::Format { .. })));
        assert!(matches!(parse_idx_images(&[0, 0]), Err(Error::Format { .. })));
    }
}
