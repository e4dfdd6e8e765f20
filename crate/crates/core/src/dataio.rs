//! MNIST IDX loading, normalization and digit-pair splits.

use crate::error::{Error, Result};
use flate2::read::GzDecoder;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

/// Images and labels exactly as stored in an IDX pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawDataset {
    /// One row-major `rows * cols` image per sample.
    pub images: Vec<Vec<u8>>,
    pub labels: Vec<u8>,
    pub rows: usize,
    pub cols: usize,
}

impl RawDataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.rows * self.cols
    }
}

fn open(path: &Path) -> Result<Box<dyn Read>> {
    let file = BufReader::new(File::open(path)?);
    if path.extension().is_some_and(|e| e == "gz") {
        Ok(Box::new(GzDecoder::new(file)))
    } else {
        Ok(Box::new(file))
    }
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_be_bytes(b))
}

fn check_magic(found: u32, want: u32, what: &str) -> Result<()> {
    if found == want {
        Ok(())
    } else {
        Err(Error::Format(format!(
            "{what}: bad magic number {found:#010x}, expected {want:#010x}"
        )))
    }
}

/// Reads an IDX3 image stream: `(count, rows, cols, pixels)`.
pub fn read_idx_images(mut r: impl Read) -> Result<(usize, usize, usize, Vec<u8>)> {
    check_magic(read_u32(&mut r)?, IMAGES_MAGIC, "images")?;
    let count = read_u32(&mut r)? as usize;
    let rows = read_u32(&mut r)? as usize;
    let cols = read_u32(&mut r)? as usize;
    let mut pixels = vec![0u8; count * rows * cols];
    r.read_exact(&mut pixels)?;
    Ok((count, rows, cols, pixels))
}

/// Reads an IDX1 label stream.
pub fn read_idx_labels(mut r: impl Read) -> Result<Vec<u8>> {
    check_magic(read_u32(&mut r)?, LABELS_MAGIC, "labels")?;
    let count = read_u32(&mut r)? as usize;
    let mut labels = vec![0u8; count];
    r.read_exact(&mut labels)?;
    Ok(labels)
}

/// Loads an image/label IDX pair. Paths ending in `.gz` are decompressed.
pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<RawDataset> {
    let (count, rows, cols, pixels) = read_idx_images(open(images_path.as_ref())?)?;
    let labels = read_idx_labels(open(labels_path.as_ref())?)?;
    if labels.len() != count {
        return Err(Error::Consistency(format!(
            "{count} images but {} labels",
            labels.len()
        )));
    }
    if let Some(bad) = labels.iter().find(|&&l| l > 9) {
        return Err(Error::Consistency(format!("label {bad} outside 0..=9")));
    }
    let dim = rows * cols;
    let images = if dim == 0 {
        vec![Vec::new(); count]
    } else {
        pixels.chunks_exact(dim).map(<[u8]>::to_vec).collect()
    };
    Ok(RawDataset { images, labels, rows, cols })
}

/// Writes `data` as an uncompressed IDX pair.
pub fn write_idx(data: &RawDataset, images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(images_path)?);
    for v in [IMAGES_MAGIC, data.len() as u32, data.rows as u32, data.cols as u32] {
        w.write_all(&v.to_be_bytes())?;
    }
    for img in &data.images {
        w.write_all(img)?;
    }
    w.flush()?;
    let mut w = BufWriter::new(File::create(labels_path)?);
    for v in [LABELS_MAGIC, data.len() as u32] {
        w.write_all(&v.to_be_bytes())?;
    }
    w.write_all(&data.labels)?;
    w.flush()?;
    Ok(())
}

fn find_file(dir: &Path, stem: &str) -> Result<PathBuf> {
    for name in [stem.to_string(), format!("{stem}.gz")] {
        let p = dir.join(&name);
        if p.is_file() {
            return Ok(p);
        }
    }
    Err(Error::Data(format!("{stem}[.gz] not found in {}", dir.display())))
}

/// Loads the standard four MNIST files (optionally gzipped) from `dir`,
/// returning `(train, test)`.
pub fn load_mnist_dir(dir: impl AsRef<Path>) -> Result<(RawDataset, RawDataset)> {
    let dir = dir.as_ref();
    let train = load_idx(
        find_file(dir, "train-images-idx3-ubyte")?,
        find_file(dir, "train-labels-idx1-ubyte")?,
    )?;
    let test = load_idx(
        find_file(dir, "t10k-images-idx3-ubyte")?,
        find_file(dir, "t10k-labels-idx1-ubyte")?,
    )?;
    Ok((train, test))
}

/// Maps a pixel from `[0, 255]` to `[-1, 1]`.
#[inline]
pub fn normalize_pixel(v: u8) -> f64 {
    f64::from(v) / 127.5 - 1.0
}

/// Inverse of [`normalize_pixel`], clamped and rounded for display.
#[inline]
pub fn denormalize_pixel(v: f64) -> u8 {
    ((v + 1.0) * 127.5).round().clamp(0.0, 255.0) as u8
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// Flattened image with entries in `[-1, 1]`.
    pub x: Vec<f64>,
    pub label: u8,
}

/// Two-digit dataset, pooled from both native splits and re-split 3:1.
#[derive(Debug, Clone)]
pub struct PairDataset {
    pub train: Vec<Sample>,
    pub test: Vec<Sample>,
    pub d1: u8,
    pub d2: u8,
    pub rows: usize,
    pub cols: usize,
}

impl PairDataset {
    pub fn dim(&self) -> usize {
        self.rows * self.cols
    }

    pub fn pair(&self) -> (u8, u8) {
        (self.d1, self.d2)
    }
}

/// Filters both raw splits to digits `d1`/`d2`, normalizes to `[-1, 1]`, pools
/// them (train first, then test, in file order), shuffles with `seed` and puts
/// `⌊n/4⌋` samples in the test set and the rest in the training set.
pub fn make_pair_dataset(
    raw_train: &RawDataset,
    raw_test: &RawDataset,
    d1: u8,
    d2: u8,
    seed: u64,
) -> Result<PairDataset> {
    if d1 == d2 {
        return Err(Error::InvalidArgument(format!("digit pair must differ, got {d1}/{d2}")));
    }
    if d1 > 9 || d2 > 9 {
        return Err(Error::InvalidArgument(format!("digits must be in 0..=9, got {d1}/{d2}")));
    }
    if (raw_train.rows, raw_train.cols) != (raw_test.rows, raw_test.cols) {
        return Err(Error::Consistency("train and test image sizes differ".into()));
    }
    let mut pool: Vec<Sample> = [raw_train, raw_test]
        .into_iter()
        .flat_map(|raw| raw.images.iter().zip(&raw.labels))
        .filter(|(_, &l)| l == d1 || l == d2)
        .map(|(img, &label)| Sample { x: img.iter().map(|&p| normalize_pixel(p)).collect(), label })
        .collect();
    for d in [d1, d2] {
        if !pool.iter().any(|s| s.label == d) {
            return Err(Error::Data(format!("no samples of digit {d}")));
        }
    }
    pool.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_test = pool.len() / 4;
    let train = pool.split_off(n_test);
    Ok(PairDataset { train, test: pool, d1, d2, rows: raw_train.rows, cols: raw_train.cols })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn tiny(n: usize) -> RawDataset {
        RawDataset {
            images: (0..n).map(|i| vec![(i * 40 % 256) as u8, 0, 255, 127]).collect(),
            labels: (0..n).map(|i| (i % 10) as u8).collect(),
            rows: 2,
            cols: 2,
        }
    }

    #[test]
    fn normalization_endpoints() {
        assert_eq!(normalize_pixel(0), -1.0);
        assert_eq!(normalize_pixel(255), 1.0);
        // 127.5 is the midpoint; the two neighbouring pixels straddle zero
        assert!((normalize_pixel(127) + normalize_pixel(128)).abs() < 1e-15);
        for v in 0..255u8 {
            assert!(normalize_pixel(v) < normalize_pixel(v + 1));
            assert_eq!(denormalize_pixel(normalize_pixel(v)), v);
        }
    }

    #[test]
    fn header_parsing() {
        let mut bytes = vec![0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 1, 0, 0, 0, 3];
        bytes.extend([1, 2, 3, 4, 5, 6]);
        let (count, rows, cols, px) = read_idx_images(Cursor::new(bytes)).unwrap();
        assert_eq!((count, rows, cols), (2, 1, 3));
        assert_eq!(px, vec![1, 2, 3, 4, 5, 6]);

        let labels = read_idx_labels(Cursor::new(vec![0, 0, 8, 1, 0, 0, 0, 2, 7, 3])).unwrap();
        assert_eq!(labels, vec![7, 3]);
    }

    #[test]
    fn bad_magic_is_format_error() {
        let bytes = vec![0, 0, 8, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0];
        assert!(matches!(read_idx_images(Cursor::new(bytes)), Err(Error::Format(_))));
        assert!(matches!(read_idx_labels(Cursor::new(vec![0, 0, 8, 3, 0, 0, 0, 0])), Err(Error::Format(_))));
    }

    #[test]
    fn truncated_payload_is_io_error() {
        let bytes = vec![0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2, 1, 2, 3];
        assert!(matches!(read_idx_images(Cursor::new(bytes)), Err(Error::Io(_))));
    }

    #[test]
    fn count_mismatch_is_consistency_error() {
        let dir = tempfile::tempdir().unwrap();
        let (img, lab) = (dir.path().join("i"), dir.path().join("l"));
        let mut data = tiny(100);
        write_idx(&data, &img, &lab).unwrap();
        data.labels.pop();
        write_idx(&data, dir.path().join("i2"), &lab).unwrap();
        assert!(matches!(load_idx(&img, &lab), Err(Error::Consistency(_))));
    }

    #[test]
    fn gzip_variant_is_read() {
        use flate2::write::GzEncoder;
        let dir = tempfile::tempdir().unwrap();
        let data = tiny(12);
        let (img, lab) = (dir.path().join("img"), dir.path().join("lab"));
        write_idx(&data, &img, &lab).unwrap();
        for p in [&img, &lab] {
            let raw = std::fs::read(p).unwrap();
            let mut enc = GzEncoder::new(Vec::new(), flate2::Compression::default());
            enc.write_all(&raw).unwrap();
            std::fs::write(p.with_extension("gz"), enc.finish().unwrap()).unwrap();
        }
        let back = load_idx(img.with_extension("gz"), lab.with_extension("gz")).unwrap();
        assert_eq!(back, data);
    }

    #[test]
    fn pair_dataset_split() {
        let train = tiny(200);
        let test = tiny(40);
        let pd = make_pair_dataset(&train, &test, 3, 7, 0).unwrap();
        let total = 48; // 24 threes + 24 sevens
        assert_eq!(pd.test.len(), total / 4);
        assert_eq!(pd.train.len(), total - total / 4);
        for s in pd.train.iter().chain(&pd.test) {
            assert!(s.label == 3 || s.label == 7);
            assert!(s.x.iter().all(|v| (-1.0..=1.0).contains(v)));
        }
        let again = make_pair_dataset(&train, &test, 3, 7, 0).unwrap();
        assert_eq!(pd.train, again.train);
        let other = make_pair_dataset(&train, &test, 3, 7, 1).unwrap();
        assert_ne!(pd.train, other.train);
    }

    #[test]
    fn pair_dataset_errors() {
        let raw = tiny(30);
        assert!(matches!(make_pair_dataset(&raw, &raw, 4, 4, 0), Err(Error::InvalidArgument(_))));
        let mut only_low = tiny(30);
        only_low.labels.iter_mut().for_each(|l| *l %= 5);
        assert!(matches!(make_pair_dataset(&only_low, &only_low, 1, 8, 0), Err(Error::Data(_))));
    }
}
