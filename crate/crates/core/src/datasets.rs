//! Point clouds: synthetic generators, IDX and CSV ingestion, PCA.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Environment variable naming the directory for generated data files.
pub const DATA_DIR_ENV: &str = "TVCUT_DATA_DIR";

/// Directory for cached generated data: `$TVCUT_DATA_DIR`, else `./data`.
pub fn data_dir() -> PathBuf {
    std::env::var_os(DATA_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("data"))
}

/// `path` itself if it exists, else the same relative path under
/// [`data_dir`] if that exists, else `path` unchanged.
pub fn resolve_path(path: &Path) -> PathBuf {
    if path.exists() || path.is_absolute() {
        return path.to_path_buf();
    }
    let cached = data_dir().join(path);
    if cached.exists() {
        cached
    } else {
        path.to_path_buf()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vec<f64>>,
    pub labels: Option<Vec<usize>>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec<f64>>, labels: Option<Vec<usize>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let d = points[0].len();
        if let Some((index, p)) = points.iter().enumerate().find(|(_, p)| p.len() != d) {
            return Err(Error::RaggedPoints { index, expected: d, got: p.len() });
        }
        if let Some(l) = &labels {
            if l.len() != points.len() {
                return Err(Error::CountMismatch { images: points.len(), labels: l.len() });
            }
        }
        Ok(Self { points, labels })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    /// Number of distinct classes, `max label + 1`.
    pub fn num_classes(&self) -> Option<usize> {
        self.labels.as_ref().map(|l| l.iter().max().map_or(0, |m| m + 1))
    }
}

pub const TWO_MOONS_DIM: usize = 100;

/// Two interleaved unit half-circles with `n / 2` points each, embedded in
/// 100 dimensions, with i.i.d. Gaussian noise on every coordinate.
///
/// Upper moon: `(cos t, sin t)`; lower moon: `(1 - cos t, 1/2 - sin t)`, with
/// `t` evenly spaced on `[0, pi]`.
pub fn two_moons(n: usize, noise_sd: f64, seed: u64) -> Result<PointCloud> {
    two_moons_in(n, TWO_MOONS_DIM, noise_sd, seed)
}

pub fn two_moons_in(n: usize, dim: usize, noise_sd: f64, seed: u64) -> Result<PointCloud> {
    if n < 4 || !n.is_multiple_of(2) {
        return Err(Error::param(format!("two moons needs an even n >= 4, got {n}")));
    }
    if dim < 2 {
        return Err(Error::param("two moons needs at least 2 dimensions"));
    }
    let noise = Normal::new(0.0, noise_sd).map_err(|_| Error::param(format!("invalid noise sd {noise_sd}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = n / 2;
    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for moon in 0..2 {
        for i in 0..half {
            let t = PI * i as f64 / (half - 1) as f64;
            let mut p = vec![0.0; dim];
            if moon == 0 {
                p[0] = t.cos();
                p[1] = t.sin();
            } else {
                p[0] = 1.0 - t.cos();
                p[1] = 0.5 - t.sin();
            }
            if noise_sd > 0.0 {
                p.iter_mut().for_each(|x| *x += noise.sample(&mut rng));
            }
            points.push(p);
            labels.push(moon);
        }
    }
    PointCloud::new(points, Some(labels))
}

/// Isotropic Gaussian blobs with centers drawn uniformly from `[-10, 10]^dim`.
pub fn blobs(n_per: usize, centers: usize, dim: usize, sd: f64, seed: u64) -> Result<PointCloud> {
    if n_per == 0 || centers == 0 || dim == 0 {
        return Err(Error::param("blobs need positive sizes"));
    }
    let noise = Normal::new(0.0, sd).map_err(|_| Error::param(format!("invalid blob sd {sd}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let uniform = rand_distr::Uniform::new(-10.0, 10.0).expect("valid range");
    let mids: Vec<Vec<f64>> = (0..centers).map(|_| (0..dim).map(|_| uniform.sample(&mut rng)).collect()).collect();
    let mut points = Vec::with_capacity(n_per * centers);
    let mut labels = Vec::with_capacity(n_per * centers);
    for (c, mid) in mids.iter().enumerate() {
        for _ in 0..n_per {
            points.push(mid.iter().map(|m| m + noise.sample(&mut rng)).collect());
            labels.push(c);
        }
    }
    PointCloud::new(points, Some(labels))
}

const IDX_IMAGES: u32 = 0x0000_0803;
const IDX_LABELS: u32 = 0x0000_0801;

fn be_u32(bytes: &[u8], at: usize, path: &Path) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Truncated(path.to_path_buf()))
}

/// Parses an IDX image file (`u8`, 3 dimensions) into rows scaled to `[0, 1]`.
pub fn parse_idx_images(bytes: &[u8], path: &Path) -> Result<Vec<Vec<f64>>> {
    let magic = be_u32(bytes, 0, path)?;
    if magic != IDX_IMAGES {
        return Err(Error::BadMagic(path.to_path_buf(), magic));
    }
    let count = be_u32(bytes, 4, path)? as usize;
    let rows = be_u32(bytes, 8, path)? as usize;
    let cols = be_u32(bytes, 12, path)? as usize;
    if count == 0 {
        return Err(Error::EmptyDataset);
    }
    let size = rows * cols;
    let payload = &bytes[16..];
    if payload.len() < count * size {
        return Err(Error::Truncated(path.to_path_buf()));
    }
    Ok(payload[..count * size].chunks(size).map(|c| c.iter().map(|&b| b as f64 / 255.0).collect()).collect())
}

pub fn parse_idx_labels(bytes: &[u8], path: &Path) -> Result<Vec<usize>> {
    let magic = be_u32(bytes, 0, path)?;
    if magic != IDX_LABELS {
        return Err(Error::BadMagic(path.to_path_buf(), magic));
    }
    let count = be_u32(bytes, 4, path)? as usize;
    if count == 0 {
        return Err(Error::EmptyDataset);
    }
    let payload = &bytes[8..];
    if payload.len() < count {
        return Err(Error::Truncated(path.to_path_buf()));
    }
    Ok(payload[..count].iter().map(|&b| b as usize).collect())
}

pub fn load_idx(images: &Path, labels: &Path) -> Result<PointCloud> {
    let img = fs::read(images).map_err(|e| Error::io(images, e))?;
    let lab = fs::read(labels).map_err(|e| Error::io(labels, e))?;
    let points = parse_idx_images(&img, images)?;
    let labels = parse_idx_labels(&lab, labels)?;
    if points.len() != labels.len() {
        return Err(Error::CountMismatch { images: points.len(), labels: labels.len() });
    }
    PointCloud::new(points, Some(labels))
}

/// Concatenates several clouds (e.g. MNIST train and test).
pub fn concat(clouds: Vec<PointCloud>) -> Result<PointCloud> {
    let with_labels = clouds.iter().all(|c| c.labels.is_some());
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for c in clouds {
        points.extend(c.points);
        if let Some(l) = c.labels {
            labels.extend(l);
        }
    }
    PointCloud::new(points, with_labels.then_some(labels))
}

/// Writes square images quantized to bytes, plus labels when present.
pub fn write_idx(pc: &PointCloud, images: &Path, labels: Option<&Path>) -> Result<()> {
    let d = pc.dim();
    let side = (d as f64).sqrt().round() as usize;
    let (rows, cols) = if side * side == d { (side, side) } else { (1, d) };
    let mut out = Vec::with_capacity(16 + pc.len() * d);
    for v in [IDX_IMAGES, pc.len() as u32, rows as u32, cols as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    for p in &pc.points {
        out.extend(p.iter().map(|x| (x.clamp(0.0, 1.0) * 255.0).round() as u8));
    }
    fs::write(images, out).map_err(|e| Error::io(images, e))?;
    if let (Some(path), Some(l)) = (labels, &pc.labels) {
        let mut out = Vec::with_capacity(8 + l.len());
        out.extend_from_slice(&IDX_LABELS.to_be_bytes());
        out.extend_from_slice(&(l.len() as u32).to_be_bytes());
        for &x in l {
            let b = u8::try_from(x).map_err(|_| Error::param(format!("label {x} does not fit in a byte")))?;
            out.push(b);
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

fn csv_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (no, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        let row = rec
            .iter()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse(format!("{} row {}: {e}", path.display(), no + 1)))?;
        rows.push(row);
    }
    Ok(rows)
}

/// Points as CSV rows without a header.
pub fn read_points_csv(path: &Path) -> Result<PointCloud> {
    PointCloud::new(csv_rows(path)?, None)
}

/// Optional labels, one integer per line.
pub fn read_labels_csv(path: &Path) -> Result<Vec<usize>> {
    csv_rows(path)?
        .into_iter()
        .enumerate()
        .map(|(i, r)| match r.as_slice() {
            [x] if *x >= 0.0 && x.fract() == 0.0 => Ok(*x as usize),
            _ => Err(Error::Parse(format!("{} row {}: expected one label", path.display(), i + 1))),
        })
        .collect()
}

/// USPS-style CSV: label first, then the pixel values.
pub fn read_labeled_csv(path: &Path) -> Result<PointCloud> {
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (i, row) in csv_rows(path)?.into_iter().enumerate() {
        let (&label, pixels) = row
            .split_first()
            .ok_or_else(|| Error::Parse(format!("{} row {}: empty", path.display(), i + 1)))?;
        if label < 0.0 || label.fract() != 0.0 {
            return Err(Error::Parse(format!("{} row {}: bad label {label}", path.display(), i + 1)));
        }
        labels.push(label as usize);
        points.push(pixels.to_vec());
    }
    PointCloud::new(points, Some(labels))
}

pub fn write_points_csv(pc: &PointCloud, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    for p in &pc.points {
        w.write_record(p.iter().map(|x| format!("{x:?}")))
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Projects centered data onto the leading principal directions.
///
/// Each direction's sign makes its largest-magnitude loading positive.
pub fn pca_project(pc: &PointCloud, components: usize) -> Result<PointCloud> {
    let (n, d) = (pc.len(), pc.dim());
    if components == 0 || components > n.min(d) {
        return Err(Error::param(format!("pca components {components} must lie in [1, {}]", n.min(d))));
    }
    let mut mean = vec![0.0; d];
    for p in &pc.points {
        mean.iter_mut().zip(p).for_each(|(m, x)| *m += x);
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centered = DMatrix::from_fn(n, d, |i, j| pc.points[i][j] - mean[j]);
    let cov = centered.transpose() * &centered / n as f64;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let mut basis = DMatrix::<f64>::zeros(d, components);
    for (c, &idx) in order[..components].iter().enumerate() {
        let col = eig.eigenvectors.column(idx);
        let pivot = (0..d).fold(0, |best, i| if col[i].abs() > col[best].abs() { i } else { best });
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..d {
            basis[(i, c)] = sign * col[i];
        }
    }
    let projected = centered * basis;
    let points = (0..n).map(|i| projected.row(i).iter().copied().collect()).collect();
    PointCloud::new(points, pc.labels.clone())
}
