//! IDX (MNIST) image and label files. Big-endian headers: a magic word
//! (`0x00000803` images, `0x00000801` labels), the item count, and for images
//! the row and column counts, followed by unsigned bytes.

use std::path::Path;

use crate::error::{Error, Result};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, PartialEq)]
pub struct IdxImages {
    pub rows: usize,
    pub cols: usize,
    /// Each image row-major in `[0, 1]`.
    pub images: Vec<Vec<f64>>,
}

fn be_u32(bytes: &[u8], at: usize) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::parse(bytes.len(), "unexpected end of header"))
}

pub fn parse_images(bytes: &[u8]) -> Result<IdxImages> {
    let magic = be_u32(bytes, 0)?;
    if magic != IMAGE_MAGIC {
        return Err(Error::parse(0, format!("image magic {magic:#010x}, expected {IMAGE_MAGIC:#010x}")));
    }
    let count = be_u32(bytes, 4)? as usize;
    let rows = be_u32(bytes, 8)? as usize;
    let cols = be_u32(bytes, 12)? as usize;
    let size = rows * cols;
    let need = 16 + count * size;
    if bytes.len() < need {
        return Err(Error::parse(bytes.len(), format!("expected {need} bytes for {count} images")));
    }
    let images = bytes[16..need]
        .chunks(size.max(1))
        .take(count)
        .map(|c| c.iter().map(|&p| p as f64 / 255.0).collect())
        .collect();
    Ok(IdxImages { rows, cols, images })
}

pub fn parse_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let magic = be_u32(bytes, 0)?;
    if magic != LABEL_MAGIC {
        return Err(Error::parse(0, format!("label magic {magic:#010x}, expected {LABEL_MAGIC:#010x}")));
    }
    let count = be_u32(bytes, 4)? as usize;
    if bytes.len() < 8 + count {
        return Err(Error::parse(bytes.len(), format!("expected {} bytes for {count} labels", 8 + count)));
    }
    Ok(bytes[8..8 + count].to_vec())
}

/// Images with their digit labels; the two files must hold equally many items.
pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<(IdxImages, Vec<u8>)> {
    let images = parse_images(&std::fs::read(images_path)?)?;
    let labels = parse_labels(&std::fs::read(labels_path)?)?;
    if images.images.len() != labels.len() {
        return Err(Error::parse(
            4,
            format!("{} images but {} labels", images.images.len(), labels.len()),
        ));
    }
    Ok((images, labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn image_file(count: u32, rows: u32, cols: u32, px: &[u8]) -> Vec<u8> {
        let mut v = Vec::new();
        for w in [IMAGE_MAGIC, count, rows, cols] {
            v.extend_from_slice(&w.to_be_bytes());
        }
        v.extend_from_slice(px);
        v
    }

    fn label_file(labels: &[u8]) -> Vec<u8> {
        let mut v = LABEL_MAGIC.to_be_bytes().to_vec();
        v.extend_from_slice(&(labels.len() as u32).to_be_bytes());
        v.extend_from_slice(labels);
        v
    }

    #[test]
    fn two_image_fixture() {
        let dir = tempfile::tempdir().unwrap();
        let (ip, lp) = (dir.path().join("i"), dir.path().join("l"));
        std::fs::write(&ip, image_file(2, 2, 2, &[0, 255, 51, 102, 255, 0, 0, 255])).unwrap();
        std::fs::write(&lp, label_file(&[7, 3])).unwrap();
        let (imgs, labels) = load_idx(&ip, &lp).unwrap();
        assert_eq!((imgs.rows, imgs.cols), (2, 2));
        assert_eq!(imgs.images[0], vec![0.0, 1.0, 0.2, 0.4]);
        assert_eq!(imgs.images[1], vec![1.0, 0.0, 0.0, 1.0]);
        assert_eq!(labels, vec![7, 3]);

        std::fs::write(&lp, label_file(&[7])).unwrap();
        assert!(load_idx(&ip, &lp).is_err());
    }

    #[test]
    fn rejects_bad_files() {
        assert!(parse_images(&[]).is_err());
        assert!(parse_labels(&[]).is_err());
        assert!(parse_images(&label_file(&[1])).is_err());
        assert!(parse_images(&image_file(2, 2, 2, &[0; 5])).is_err());
    }
}
