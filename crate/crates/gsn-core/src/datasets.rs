//! Data ingestion and synthetic generators.
//!
//! IDX image loading (scaled to [0,1], optionally binarized at 0.5),
//! desk-scale toy distributions, block-mean downsampling, and CSV I/O.
//! Bit-pattern datasets carry their exact generating table so exact
//! chain analysis can compare a learned stationary distribution against
//! ground truth.

use std::fs;
use std::path::Path;

use crate::ndnum::{Matrix, Rng};
use crate::{Error, Result};

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueKind {
    /// Entries are exactly 0 or 1.
    Binary,
    /// Entries lie in [0, 1].
    UnitInterval,
    /// Unbounded reals.
    Real,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub examples: Matrix,
    pub kind: ValueKind,
    /// Exact generating distribution over bit states (length 2^d),
    /// present only for bit-pattern data.
    pub table: Option<Vec<f64>>,
}

impl Dataset {
    pub fn new(examples: Matrix, kind: ValueKind) -> Result<Dataset> {
        let ok = match kind {
            ValueKind::Binary => examples.data().iter().all(|&v| v == 0.0 || v == 1.0),
            ValueKind::UnitInterval => examples.data().iter().all(|&v| (0.0..=1.0).contains(&v)),
            ValueKind::Real => examples.data().iter().all(|v| v.is_finite()),
        };
        if !ok {
            return Err(Error::Param(format!("examples violate the {kind:?} value kind")));
        }
        Ok(Dataset { examples, kind, table: None })
    }

    pub fn len(&self) -> usize {
        self.examples.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.examples.cols()
    }

    /// Contiguous train/valid/test split (callers shuffle separately if
    /// they need to). Fractions apply to the row count; test takes the
    /// remainder.
    pub fn split(&self, train: f64, valid: f64) -> Result<(Dataset, Dataset, Dataset)> {
        if !(0.0..=1.0).contains(&train) || !(0.0..=1.0).contains(&valid) || train + valid > 1.0 {
            return Err(Error::Param(format!("bad split fractions {train} / {valid}")));
        }
        let n = self.len();
        let n_train = (n as f64 * train).floor() as usize;
        let n_valid = (n as f64 * valid).floor() as usize;
        let idx: Vec<usize> = (0..n).collect();
        let part = |range: std::ops::Range<usize>| Dataset {
            examples: self.examples.select_rows(&idx[range]),
            kind: self.kind,
            table: self.table.clone(),
        };
        Ok((
            part(0..n_train),
            part(n_train..n_train + n_valid),
            part(n_train + n_valid..n),
        ))
    }
}

struct ByteReader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Format(format!(
                "idx file truncated at byte {}: needed {n} bytes for {what}, {} left",
                self.pos,
                self.buf.len() - self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32_be(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }
}

/// Reads an IDX image file as one row per image, pixels scaled to
/// [0, 1]; `binarize` applies the 0.5 threshold (values >= 0.5 become 1).
pub fn load_idx(path: impl AsRef<Path>, binarize: bool) -> Result<Dataset> {
    let bytes = fs::read(path.as_ref())?;
    let mut r = ByteReader { buf: &bytes, pos: 0 };
    let magic = r.u32_be("magic")?;
    if magic == IDX_LABELS_MAGIC {
        return Err(Error::Format(format!(
            "idx magic {magic:#010x} at byte 0 is a label file, expected images ({IDX_IMAGES_MAGIC:#010x})"
        )));
    }
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::Format(format!(
            "bad idx magic {magic:#010x} at byte 0, expected images ({IDX_IMAGES_MAGIC:#010x})"
        )));
    }
    let n = r.u32_be("image count")? as usize;
    let rows = r.u32_be("row count")? as usize;
    let cols = r.u32_be("column count")? as usize;
    let pixels = r.take(n * rows * cols, "pixel data")?;
    if r.pos != bytes.len() {
        return Err(Error::Format(format!(
            "idx file has {} trailing bytes after pixel data",
            bytes.len() - r.pos
        )));
    }
    let d = rows * cols;
    let data: Vec<f64> = pixels
        .iter()
        .map(|&b| {
            let v = b as f64 / 255.0;
            if binarize {
                if v >= 0.5 { 1.0 } else { 0.0 }
            } else {
                v
            }
        })
        .collect();
    let kind = if binarize { ValueKind::Binary } else { ValueKind::UnitInterval };
    Dataset::new(Matrix::from_vec(n, d, data)?, kind)
}

pub fn load_idx_labels(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    let bytes = fs::read(path.as_ref())?;
    let mut r = ByteReader { buf: &bytes, pos: 0 };
    let magic = r.u32_be("magic")?;
    if magic != IDX_LABELS_MAGIC {
        return Err(Error::Format(format!(
            "bad idx magic {magic:#010x} at byte 0, expected labels ({IDX_LABELS_MAGIC:#010x})"
        )));
    }
    let n = r.u32_be("label count")? as usize;
    let labels = r.take(n, "label data")?;
    if r.pos != bytes.len() {
        return Err(Error::Format(format!(
            "idx file has {} trailing bytes after label data",
            bytes.len() - r.pos
        )));
    }
    Ok(labels.to_vec())
}

/// Writes raw image bytes in IDX format (the inverse of `load_idx`
/// before scaling).
pub fn write_idx_images(
    path: impl AsRef<Path>,
    n: usize,
    rows: usize,
    cols: usize,
    pixels: &[u8],
) -> Result<()> {
    if pixels.len() != n * rows * cols {
        return Err(Error::Shape(format!(
            "pixel buffer has {} bytes, expected {} for {n} images of {rows}x{cols}",
            pixels.len(),
            n * rows * cols
        )));
    }
    let mut out = Vec::with_capacity(16 + pixels.len());
    out.extend_from_slice(&IDX_IMAGES_MAGIC.to_be_bytes());
    out.extend_from_slice(&(n as u32).to_be_bytes());
    out.extend_from_slice(&(rows as u32).to_be_bytes());
    out.extend_from_slice(&(cols as u32).to_be_bytes());
    out.extend_from_slice(pixels);
    fs::write(path.as_ref(), out)?;
    Ok(())
}

pub fn write_idx_labels(path: impl AsRef<Path>, labels: &[u8]) -> Result<()> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    fs::write(path.as_ref(), out)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ToyKind {
    /// Equal mixture of two isotropic Gaussians at (+-2, 0), std 0.3.
    TwoGaussians2d,
    /// d-bit samples from a randomly generated stored table (d <= 8).
    BitPatterns { dim: usize },
    /// Points near the unit circle, radial std 0.1.
    Ring,
}

pub fn make_toy(kind: ToyKind, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::Param("need at least one sample".into()));
    }
    match kind {
        ToyKind::TwoGaussians2d => {
            let mut rng = Rng::new(seed);
            let mut data = Vec::with_capacity(2 * n);
            for _ in 0..n {
                let center = if rng.next_bernoulli(0.5) { 2.0 } else { -2.0 };
                data.push(center + 0.3 * rng.next_gaussian());
                data.push(0.3 * rng.next_gaussian());
            }
            Dataset::new(Matrix::from_vec(n, 2, data)?, ValueKind::Real)
        }
        ToyKind::BitPatterns { dim } => {
            let table = bit_pattern_table_softmax(dim, 0.5, seed)?;
            sample_from_table(&table, dim, n, seed)
        }
        ToyKind::Ring => {
            let mut rng = Rng::new(seed);
            let tau = 2.0 * std::f64::consts::PI;
            let mut data = Vec::with_capacity(2 * n);
            for _ in 0..n {
                let theta = tau * rng.next_f64();
                let r = 1.0 + 0.1 * rng.next_gaussian();
                data.push(r * theta.cos());
                data.push(r * theta.sin());
            }
            Dataset::new(Matrix::from_vec(n, 2, data)?, ValueKind::Real)
        }
    }
}

fn check_bit_dim(dim: usize) -> Result<()> {
    if dim == 0 || dim > 8 {
        return Err(Error::Param(format!("bit-pattern dimension {dim} outside 1..=8")));
    }
    Ok(())
}

/// Random multinomial over the 2^d bit states: softmax of N(0,1) logits
/// divided by `temperature` (smaller temperature = peakier table).
pub fn bit_pattern_table_softmax(dim: usize, temperature: f64, seed: u64) -> Result<Vec<f64>> {
    check_bit_dim(dim)?;
    if !(temperature > 0.0) {
        return Err(Error::Param(format!("temperature must be positive, got {temperature}")));
    }
    let mut rng = Rng::with_stream(seed, 0);
    let logits: Vec<f64> = (0..1usize << dim).map(|_| rng.next_gaussian() / temperature).collect();
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut table: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = table.iter().sum();
    for v in &mut table {
        *v /= sum;
    }
    Ok(table)
}

/// Mixture of noisy codewords: `m` codewords drawn to keep pairwise
/// Hamming distance at least 4 (relaxing toward distinctness when the
/// space is too tight), softmax-of-Gaussian mixture weights, and each
/// bit of a sampled codeword flipped independently with probability
/// `flip_eps`. Returns the exact table and the codewords behind it.
pub fn bit_pattern_table_codewords(
    dim: usize,
    m: usize,
    flip_eps: f64,
    seed: u64,
) -> Result<(Vec<f64>, Vec<usize>)> {
    check_bit_dim(dim)?;
    let states = 1usize << dim;
    if m == 0 || m > states {
        return Err(Error::Param(format!("{m} codewords do not fit in {states} states")));
    }
    if !(flip_eps > 0.0 && flip_eps < 0.5) {
        return Err(Error::Param(format!("flip probability {flip_eps} outside (0, 0.5)")));
    }
    let mut rng = Rng::with_stream(seed, 0);
    let mut codes: Vec<usize> = Vec::with_capacity(m);
    let mut target = 4.min(dim);
    while codes.len() < m {
        let mut tries = 0;
        loop {
            let w = rng.next_below(states);
            if codes.iter().all(|&c| (c ^ w).count_ones() as usize >= target) {
                codes.push(w);
                break;
            }
            tries += 1;
            if tries >= 500 {
                if target > 1 {
                    target -= 1;
                    tries = 0;
                } else {
                    let w = (0..states).find(|s| !codes.contains(s)).expect("m <= states");
                    codes.push(w);
                    break;
                }
            }
        }
    }
    let logits: Vec<f64> = (0..m).map(|_| rng.next_gaussian()).collect();
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut weights: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let wsum: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= wsum;
    }
    let mut table = vec![0.0; states];
    for (w, &c) in weights.iter().zip(&codes) {
        for (x, t) in table.iter_mut().enumerate() {
            let ham = (x ^ c).count_ones() as i32;
            *t += w * flip_eps.powi(ham) * (1.0 - flip_eps).powi(dim as i32 - ham);
        }
    }
    let sum: f64 = table.iter().sum();
    for v in &mut table {
        *v /= sum;
    }
    Ok((table, codes))
}

/// Draws n bit vectors from an explicit table over 2^dim states and
/// stores the table in the dataset for later exact comparison.
pub fn sample_from_table(table: &[f64], dim: usize, n: usize, seed: u64) -> Result<Dataset> {
    check_bit_dim(dim)?;
    if n == 0 {
        return Err(Error::Param("need at least one sample".into()));
    }
    if table.len() != 1 << dim {
        return Err(Error::Shape(format!(
            "table has {} entries, expected {}",
            table.len(),
            1 << dim
        )));
    }
    let sum: f64 = table.iter().sum();
    if table.iter().any(|&p| !(p >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Param(format!("table is not a distribution (sum {sum})")));
    }
    let mut rng = Rng::with_stream(seed, 1);
    let mut data = Vec::with_capacity(n * dim);
    for _ in 0..n {
        let s = rng.next_categorical(table);
        for j in 0..dim {
            data.push(((s >> j) & 1) as f64);
        }
    }
    let mut ds = Dataset::new(Matrix::from_vec(n, dim, data)?, ValueKind::Binary)?;
    ds.table = Some(table.to_vec());
    Ok(ds)
}

/// Block-mean pooling of square images by an integer factor,
/// re-binarized at 0.5 when the dataset is binary.
pub fn downsample(ds: &Dataset, factor: usize) -> Result<Dataset> {
    if factor == 0 {
        return Err(Error::Param("factor must be positive".into()));
    }
    let d = ds.dim();
    let side = (d as f64).sqrt().round() as usize;
    if side * side != d {
        return Err(Error::Param(format!("{d} pixels is not a square image")));
    }
    if side % factor != 0 {
        return Err(Error::Param(format!("side {side} not divisible by factor {factor}")));
    }
    let out_side = side / factor;
    let n = ds.len();
    let mut out = Matrix::zeros(n, out_side * out_side);
    let area = (factor * factor) as f64;
    for i in 0..n {
        let row = ds.examples.row(i);
        for r in 0..out_side {
            for c in 0..out_side {
                let mut sum = 0.0;
                for dr in 0..factor {
                    for dc in 0..factor {
                        sum += row[(r * factor + dr) * side + (c * factor + dc)];
                    }
                }
                let mut v = sum / area;
                if ds.kind == ValueKind::Binary {
                    v = if v >= 0.5 { 1.0 } else { 0.0 };
                }
                out.set(i, r * out_side + c, v);
            }
        }
    }
    Dataset::new(out, ds.kind)
}

/// Reads a headerless CSV of floats (the sampler's output format).
pub fn read_csv(path: impl AsRef<Path>, kind: ValueKind) -> Result<Dataset> {
    let text = fs::read_to_string(path.as_ref())?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|cell| {
                cell.trim().parse::<f64>().map_err(|_| {
                    Error::Format(format!("line {}: {cell:?} is not a number", lineno + 1))
                })
            })
            .collect::<Result<_>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Format(format!(
                    "line {}: {} columns, expected {}",
                    lineno + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Format("csv file has no rows".into()));
    }
    let (n, d) = (rows.len(), rows[0].len());
    Dataset::new(Matrix::from_vec(n, d, rows.into_iter().flatten().collect())?, kind)
}

pub fn write_csv(path: impl AsRef<Path>, ds: &Dataset) -> Result<()> {
    crate::sampler::write_samples_csv(&ds.examples, path.as_ref())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn temp_path(name: &str) -> std::path::PathBuf {
        std::env::temp_dir().join(format!("gsn_ds_{}_{name}", std::process::id()))
    }

    #[test]
    fn idx_roundtrip_is_exact() {
        let pixels: Vec<u8> = (0..24).map(|i| (i * 11 % 256) as u8).collect();
        let path = temp_path("roundtrip.idx");
        write_idx_images(&path, 4, 2, 3, &pixels).unwrap();
        let ds = load_idx(&path, false).unwrap();
        assert_eq!(ds.len(), 4);
        assert_eq!(ds.dim(), 6);
        assert_eq!(ds.kind, ValueKind::UnitInterval);
        let recovered: Vec<u8> = ds
            .examples
            .data()
            .iter()
            .map(|&v| (v * 255.0).round() as u8)
            .collect();
        assert_eq!(recovered, pixels);
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn idx_binarization_threshold() {
        let path = temp_path("thresh.idx");
        write_idx_images(&path, 1, 1, 2, &[127, 128]).unwrap();
        let ds = load_idx(&path, true).unwrap();
        assert_eq!(ds.examples.data(), &[0.0, 1.0]);
        assert_eq!(ds.kind, ValueKind::Binary);
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn idx_error_cases() {
        let path = temp_path("empty.idx");
        std::fs::write(&path, []).unwrap();
        let err = load_idx(&path, false).unwrap_err();
        assert!(err.to_string().contains("truncated at byte 0"), "{err}");

        write_idx_labels(&path, &[1, 2, 3]).unwrap();
        let err = load_idx(&path, false).unwrap_err();
        assert!(err.to_string().contains("0x00000801"), "{err}");
        assert!(err.to_string().contains("label"), "{err}");

        // Header promises more pixels than the file holds.
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&0x0000_0803u32.to_be_bytes());
        bytes.extend_from_slice(&2u32.to_be_bytes());
        bytes.extend_from_slice(&2u32.to_be_bytes());
        bytes.extend_from_slice(&2u32.to_be_bytes());
        bytes.extend_from_slice(&[0, 1, 2]);
        std::fs::write(&path, bytes).unwrap();
        let err = load_idx(&path, false).unwrap_err();
        assert!(err.to_string().contains("truncated at byte 16"), "{err}");
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn idx_labels_roundtrip() {
        let path = temp_path("labels.idx");
        write_idx_labels(&path, &[7, 0, 9]).unwrap();
        assert_eq!(load_idx_labels(&path).unwrap(), vec![7, 0, 9]);
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn toy_data_deterministic_per_seed() {
        for kind in [
            ToyKind::TwoGaussians2d,
            ToyKind::BitPatterns { dim: 4 },
            ToyKind::Ring,
        ] {
            let a = make_toy(kind.clone(), 50, 9).unwrap();
            let b = make_toy(kind.clone(), 50, 9).unwrap();
            assert_eq!(a.examples.data(), b.examples.data(), "{kind:?}");
            let c = make_toy(kind.clone(), 50, 10).unwrap();
            assert_ne!(a.examples.data(), c.examples.data(), "{kind:?}");
        }
        assert!(make_toy(ToyKind::Ring, 0, 1).is_err());
    }

    #[test]
    fn two_gaussians_cluster_means() {
        let ds = make_toy(ToyKind::TwoGaussians2d, 100_000, 5).unwrap();
        let mut sums = [[0.0f64; 2]; 2];
        let mut counts = [0usize; 2];
        for i in 0..ds.len() {
            let row = ds.examples.row(i);
            let cluster = usize::from(row[0] > 0.0);
            sums[cluster][0] += row[0];
            sums[cluster][1] += row[1];
            counts[cluster] += 1;
        }
        for (cluster, center) in [(0usize, -2.0), (1usize, 2.0)] {
            let n = counts[cluster] as f64;
            assert!((sums[cluster][0] / n - center).abs() < 0.01);
            assert!((sums[cluster][1] / n).abs() < 0.01);
        }
    }

    #[test]
    fn ring_radius_statistics() {
        let ds = make_toy(ToyKind::Ring, 10_000, 3).unwrap();
        assert_eq!(ds.kind, ValueKind::Real);
        let mean_r: f64 = (0..ds.len())
            .map(|i| {
                let row = ds.examples.row(i);
                (row[0] * row[0] + row[1] * row[1]).sqrt()
            })
            .sum::<f64>()
            / ds.len() as f64;
        assert!((mean_r - 1.0).abs() < 0.01, "mean radius {mean_r}");
    }

    #[test]
    fn bit_patterns_single_sample() {
        let ds = make_toy(ToyKind::BitPatterns { dim: 5 }, 1, 2).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.dim(), 5);
        assert_eq!(ds.kind, ValueKind::Binary);
        let table = ds.table.as_ref().unwrap();
        assert_eq!(table.len(), 32);
        assert!((table.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_table_frequencies_within_three_sigma() {
        let n = 20_000usize;
        let table = vec![1.0 / 8.0; 8];
        let ds = sample_from_table(&table, 3, n, 17).unwrap();
        let mut counts = [0usize; 8];
        for i in 0..n {
            let row = ds.examples.row(i);
            let s = row.iter().enumerate().fold(0usize, |acc, (j, &b)| {
                acc | ((b as usize) << j)
            });
            counts[s] += 1;
        }
        let p = 1.0 / 8.0;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        for (s, &c) in counts.iter().enumerate() {
            let freq = c as f64 / n as f64;
            assert!((freq - p).abs() <= 3.0 * sigma, "state {s}: freq {freq}");
        }
    }

    #[test]
    fn codeword_table_structure() {
        let (table, codes) = bit_pattern_table_codewords(8, 4, 0.03, 41).unwrap();
        assert_eq!(table.len(), 256);
        assert!((table.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(codes.len(), 4);
        for i in 0..4 {
            for j in 0..i {
                let dist = (codes[i] ^ codes[j]).count_ones();
                assert!(dist >= 2, "codes {i} and {j} at distance {dist}");
            }
        }
        // Mass concentrates on the codewords: each keeps (1-eps)^8 of its
        // mixture weight, so together they hold most of the distribution.
        let on_codes: f64 = codes.iter().map(|&c| table[c]).sum();
        assert!(on_codes > 0.5, "codewords hold only {on_codes}");
        for &c in &codes {
            assert!(table[c] > 1.0 / 256.0, "codeword {c} has mass {}", table[c]);
        }
        assert!(bit_pattern_table_codewords(3, 9, 0.03, 1).is_err());
        assert!(bit_pattern_table_codewords(4, 2, 0.6, 1).is_err());
    }

    #[test]
    fn sample_from_table_validates() {
        assert!(sample_from_table(&[0.5, 0.5], 2, 10, 1).is_err());
        assert!(sample_from_table(&[0.7, 0.2, 0.2, 0.2], 2, 10, 1).is_err());
        let ds = sample_from_table(&[0.25; 4], 2, 10, 1).unwrap();
        assert_eq!(ds.table.as_deref(), Some(&[0.25; 4][..]));
    }

    #[test]
    fn downsample_shapes_and_values() {
        let ds = Dataset::new(Matrix::zeros(2, 784), ValueKind::UnitInterval).unwrap();
        let small = downsample(&ds, 2).unwrap();
        assert_eq!(small.dim(), 196);

        let constant = Dataset::new(
            Matrix::from_fn(1, 16, |_, _| 0.7).unwrap(),
            ValueKind::UnitInterval,
        )
        .unwrap();
        let pooled = downsample(&constant, 2).unwrap();
        assert!(pooled.examples.data().iter().all(|&v| (v - 0.7).abs() < 1e-15));

        // 2x2 checkerboard pools to 0.5, which binarizes to 1.
        let checker = Dataset::new(
            Matrix::from_vec(1, 4, vec![1.0, 0.0, 0.0, 1.0]).unwrap(),
            ValueKind::Binary,
        )
        .unwrap();
        let pooled = downsample(&checker, 2).unwrap();
        assert_eq!(pooled.examples.data(), &[1.0]);

        let bad = Dataset::new(Matrix::zeros(1, 9), ValueKind::Binary).unwrap();
        assert!(downsample(&bad, 2).is_err());
        assert!(downsample(&ds, 0).is_err());
        let not_square = Dataset::new(Matrix::zeros(1, 8), ValueKind::Binary).unwrap();
        assert!(downsample(&not_square, 2).is_err());
    }

    #[test]
    fn dataset_kind_validation() {
        assert!(Dataset::new(Matrix::from_fn(1, 2, |_, _| 0.5).unwrap(), ValueKind::Binary).is_err());
        assert!(
            Dataset::new(Matrix::from_fn(1, 2, |_, _| 1.5).unwrap(), ValueKind::UnitInterval)
                .is_err()
        );
        assert!(Dataset::new(Matrix::from_fn(1, 2, |_, _| 1.5).unwrap(), ValueKind::Real).is_ok());
    }

    #[test]
    fn split_fractions() {
        let ds = Dataset::new(
            Matrix::from_fn(10, 2, |i, _| i as f64).unwrap(),
            ValueKind::Real,
        )
        .unwrap();
        let (train, valid, test) = ds.split(0.6, 0.2).unwrap();
        assert_eq!((train.len(), valid.len(), test.len()), (6, 2, 2));
        assert_eq!(train.examples.get(0, 0), 0.0);
        assert_eq!(valid.examples.get(0, 0), 6.0);
        assert_eq!(test.examples.get(1, 0), 9.0);
        assert!(ds.split(0.8, 0.3).is_err());
    }

    #[test]
    fn csv_roundtrip_with_sampler_format() {
        let ds = make_toy(ToyKind::TwoGaussians2d, 7, 13).unwrap();
        let path = temp_path("toy.csv");
        write_csv(&path, &ds).unwrap();
        let back = read_csv(&path, ValueKind::Real).unwrap();
        assert_eq!(back.examples.data(), ds.examples.data());

        std::fs::write(&path, "1.0,2.0\n3.0\n").unwrap();
        assert!(read_csv(&path, ValueKind::Real).is_err());
        std::fs::write(&path, "1.0,oops\n").unwrap();
        let err = read_csv(&path, ValueKind::Real).unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
        std::fs::remove_file(&path).unwrap();
    }
}
