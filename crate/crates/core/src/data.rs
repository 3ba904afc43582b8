//! Image ingestion, labeled datasets, stratified splitting and the synthetic
//! two-blob corpus.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::matrix::{seeded_rng, Matrix};
use crate::raster::{read_image, GrayImage, ResizeFilter};
use crate::softmax::{argmax, check_one_hot, one_hot};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PreprocessConfig {
    pub target_height: usize,
    pub target_width: usize,
    pub resize_filter: ResizeFilter,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            target_height: 270,
            target_width: 270,
            resize_filter: ResizeFilter::Bilinear,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.target_height == 0 || self.target_width == 0 {
            return Err(Error::Param("target image dimensions must be >= 1".into()));
        }
        Ok(())
    }

    pub fn feature_width(&self) -> usize {
        self.target_height * self.target_width
    }
}

/// Labeled, flattened, `[0, 1]`-normalized images.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// `samples × n`
    pub features: Matrix,
    /// One-hot, `samples × k`
    pub labels: Matrix,
    pub class_names: Vec<String>,
    pub source_paths: Vec<String>,
}

impl Dataset {
    pub fn new(
        features: Matrix,
        labels: Matrix,
        class_names: Vec<String>,
        source_paths: Vec<String>,
    ) -> Result<Self> {
        let ds = Dataset {
            features,
            labels,
            class_names,
            source_paths,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.features.rows();
        if self.labels.rows() != n || self.source_paths.len() != n {
            return Err(Error::Param(format!(
                "dataset row counts disagree: {} features, {} labels, {} paths",
                n,
                self.labels.rows(),
                self.source_paths.len()
            )));
        }
        if self.labels.cols() != self.class_names.len() {
            return Err(Error::Param(format!(
                "{} label columns for {} class names",
                self.labels.cols(),
                self.class_names.len()
            )));
        }
        if self
            .features
            .data()
            .iter()
            .any(|v| !(0.0..=1.0).contains(v))
        {
            return Err(Error::Param("dataset features must lie in [0, 1]".into()));
        }
        check_one_hot(&self.labels)
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn width(&self) -> usize {
        self.features.cols()
    }

    pub fn classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_indices(&self) -> Vec<usize> {
        (0..self.len())
            .map(|r| argmax(self.labels.row(r)))
            .collect()
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(indices),
            labels: self.labels.select_rows(indices),
            class_names: self.class_names.clone(),
            source_paths: indices
                .iter()
                .map(|&i| self.source_paths[i].clone())
                .collect(),
        }
    }
}

/// Grayscale → resize → scale to `[0, 1]` → flatten row-major into `1 × H·W`.
pub fn load_image(path: &Path, cfg: &PreprocessConfig) -> Result<Matrix> {
    cfg.validate()?;
    let img = read_image(path)?;
    Ok(image_to_row(&img, cfg))
}

pub fn image_to_row(img: &GrayImage, cfg: &PreprocessConfig) -> Matrix {
    let data = img
        .resample(cfg.target_width, cfg.target_height, cfg.resize_filter)
        .into_iter()
        .map(|v| v / 255.0)
        .collect();
    Matrix::from_vec(1, cfg.feature_width(), data).expect("resample returns H·W values")
}

/// Loads `root/<class>/<file>`; classes and files in lexicographic order.
pub fn load_directory(root: &Path, cfg: &PreprocessConfig) -> Result<Dataset> {
    cfg.validate()?;
    let ingest = |path: &Path, reason: String| Error::Ingest {
        path: path.to_path_buf(),
        reason,
    };
    let mut class_dirs: Vec<(String, PathBuf)> = fs::read_dir(root)
        .map_err(|e| ingest(root, e.to_string()))?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_dir())
        .map(|e| (e.file_name().to_string_lossy().into_owned(), e.path()))
        .filter(|(name, _)| !name.starts_with('.'))
        .collect();
    class_dirs.sort();
    if class_dirs.is_empty() {
        return Err(ingest(root, "no class subdirectories".into()));
    }

    let mut rows = Vec::new();
    let mut classes = Vec::new();
    let mut paths = Vec::new();
    let mut errors = Vec::new();
    for (ci, (_, dir)) in class_dirs.iter().enumerate() {
        let mut files: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| ingest(dir, e.to_string()))?
            .filter_map(|e| e.ok())
            .filter(|e| e.path().is_file() && !e.file_name().to_string_lossy().starts_with('.'))
            .map(|e| e.path())
            .collect();
        files.sort();
        if files.is_empty() {
            errors.push(ingest(dir, "empty class directory".into()));
            continue;
        }
        for f in files {
            match read_image(&f) {
                Ok(img) => {
                    rows.push(image_to_row(&img, cfg).into_data());
                    classes.push(ci);
                    paths.push(f.to_string_lossy().into_owned());
                }
                Err(e) => errors.push(e),
            }
        }
    }
    if !errors.is_empty() {
        return Err(if errors.len() == 1 {
            errors.pop().unwrap()
        } else {
            Error::IngestMany(errors)
        });
    }
    let k = class_dirs.len();
    Dataset::new(
        Matrix::from_rows(&rows)?,
        one_hot(&classes, k)?,
        class_dirs.into_iter().map(|(n, _)| n).collect(),
        paths,
    )
}

/// Stratified split: each class contributes `round(count · val_fraction)`
/// samples to validation, clamped so both sides keep at least one sample.
/// Rows keep their original relative order on both sides.
pub fn split(dataset: &Dataset, val_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(val_fraction > 0.0 && val_fraction < 1.0) {
        return Err(Error::Split(format!(
            "val_fraction must lie in (0,1), got {val_fraction}"
        )));
    }
    let labels = dataset.class_indices();
    let mut rng = seeded_rng(seed);
    let mut val = Vec::new();
    for c in 0..dataset.classes() {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        if members.len() < 2 {
            return Err(Error::Split(format!(
                "class `{}` has {} sample(s); at least 2 are needed",
                dataset.class_names[c],
                members.len()
            )));
        }
        let count =
            ((members.len() as f64 * val_fraction).round() as usize).clamp(1, members.len() - 1);
        members.shuffle(&mut rng);
        val.extend_from_slice(&members[..count]);
    }
    val.sort_unstable();
    let mut in_val = vec![false; dataset.len()];
    for &i in &val {
        in_val[i] = true;
    }
    let train: Vec<usize> = (0..dataset.len()).filter(|&i| !in_val[i]).collect();
    Ok((dataset.subset(&train), dataset.subset(&val)))
}

pub const SYNTH_CLASSES: [&str; 2] = ["defective", "healthy"];

/// Two-class synthetic corpus of `side × side` images: class 0 has a bright
/// square filling the top-left quadrant, class 1 the bottom-right one.
/// Gaussian pixel noise is added and clipped to `[0, 1]`. Samples are
/// ordered class by class.
pub fn synth_blobs(
    samples_per_class: usize,
    side: usize,
    noise_sd: f64,
    seed: u64,
) -> Result<Dataset> {
    if side < 4 {
        return Err(Error::Param(format!("synth side must be >= 4, got {side}")));
    }
    if !(noise_sd >= 0.0 && noise_sd.is_finite()) {
        return Err(Error::Param(format!(
            "noise_sd must be >= 0, got {noise_sd}"
        )));
    }
    if samples_per_class == 0 {
        return Err(Error::Param("samples_per_class must be >= 1".into()));
    }
    let templates = [blob_template(side, 0), blob_template(side, 1)];
    let noise = Normal::new(0.0, noise_sd).map_err(|e| Error::Param(e.to_string()))?;
    let mut rng = seeded_rng(seed);
    let n = side * side;
    let mut data = Vec::with_capacity(2 * samples_per_class * n);
    let mut classes = Vec::new();
    let mut paths = Vec::new();
    for (c, template) in templates.iter().enumerate() {
        for s in 0..samples_per_class {
            if noise_sd == 0.0 {
                data.extend_from_slice(template);
            } else {
                data.extend(
                    template
                        .iter()
                        .map(|&t| (t + noise.sample(&mut rng)).clamp(0.0, 1.0)),
                );
            }
            classes.push(c);
            paths.push(format!("synth:{}/{s:04}", SYNTH_CLASSES[c]));
        }
    }
    Dataset::new(
        Matrix::from_vec(2 * samples_per_class, n, data)?,
        one_hot(&classes, 2)?,
        SYNTH_CLASSES.iter().map(|s| s.to_string()).collect(),
        paths,
    )
}

fn blob_template(side: usize, class: usize) -> Vec<f64> {
    let half = side / 2;
    let (r0, c0) = if class == 0 {
        (0, 0)
    } else {
        (side - half, side - half)
    };
    let mut t = vec![0.0; side * side];
    for r in r0..r0 + half {
        for c in c0..c0 + half {
            t[r * side + c] = 1.0;
        }
    }
    t
}

/// Quantizes a `[0, 1]` feature row back to an 8-bit image.
pub fn row_to_image(row: &[f64], width: usize, height: usize) -> Result<GrayImage> {
    let pixels = row
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    GrayImage::new(width, height, pixels)
}

/// Writes a dataset as `out/<class>/<index>.pgm`, the layout
/// [`load_directory`] reads back.
pub fn write_dataset_pgm(dataset: &Dataset, side: usize, out: &Path) -> Result<Vec<PathBuf>> {
    if side * side != dataset.width() {
        return Err(Error::Param(format!(
            "side {side} does not match feature width {}",
            dataset.width()
        )));
    }
    for name in &dataset.class_names {
        let dir = out.join(name);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }
    let mut written = Vec::with_capacity(dataset.len());
    for (i, c) in dataset.class_indices().into_iter().enumerate() {
        let img = row_to_image(dataset.features.row(i), side, side)?;
        let path = out
            .join(&dataset.class_names[c])
            .join(format!("{i:05}.pgm"));
        img.write_pgm(&path)?;
        written.push(path);
    }
    Ok(written)
}
