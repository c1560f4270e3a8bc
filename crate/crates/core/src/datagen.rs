//! Feature datasets: synthetic Gaussian class clusters, CSV ingestion, and
//! per-dataset descriptor variables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::ClassId;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample<T> {
    pub features: Vec<T>,
    pub label: ClassId,
    pub split: Split,
}

impl<T> Sample<T> {
    pub fn new(features: Vec<T>, label: ClassId, split: Split) -> Self {
        Self { features, label, split }
    }
}

/// Labelled feature vectors with a train/test split.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDataset<T> {
    name: String,
    dim: usize,
    samples: Vec<Sample<T>>,
}

impl<T: Scalar> FeatureDataset<T> {
    /// Checks that vectors share one finite dimension and that every class
    /// has at least one train and one test sample.
    pub fn new(name: impl Into<String>, samples: Vec<Sample<T>>) -> Result<Self> {
        let dim = samples
            .first()
            .map(|s| s.features.len())
            .ok_or_else(|| Error::Invalid("dataset has no samples".into()))?;
        if dim == 0 {
            return Err(Error::Invalid("feature dimension must be positive".into()));
        }
        for (i, s) in samples.iter().enumerate() {
            if s.features.len() != dim {
                return Err(Error::Invalid(format!(
                    "sample {i} has {} features, expected {dim}",
                    s.features.len()
                )));
            }
            if s.features.iter().any(|x| !x.is_finite()) {
                return Err(Error::Invalid(format!("sample {i} has a non-finite feature")));
            }
        }
        let ds = Self {
            name: name.into(),
            dim,
            samples,
        };
        if let Some((class, split)) = ds.first_class_missing_split() {
            return Err(Error::Invalid(format!(
                "class {class} has no {} samples",
                split.as_str()
            )));
        }
        Ok(ds)
    }

    fn first_class_missing_split(&self) -> Option<(ClassId, Split)> {
        self.class_counts().into_iter().find_map(|(c, (tr, te))| {
            if tr == 0 {
                Some((c, Split::Train))
            } else if te == 0 {
                Some((c, Split::Test))
            } else {
                None
            }
        })
    }
}

impl<T> FeatureDataset<T> {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn samples(&self) -> &[Sample<T>] {
        &self.samples
    }

    /// Sorted distinct class ids.
    pub fn classes(&self) -> Vec<ClassId> {
        self.class_counts().into_keys().collect()
    }

    /// Per class: (train count, test count).
    pub fn class_counts(&self) -> BTreeMap<ClassId, (usize, usize)> {
        let mut counts = BTreeMap::new();
        for s in &self.samples {
            let e = counts.entry(s.label).or_insert((0, 0));
            match s.split {
                Split::Train => e.0 += 1,
                Split::Test => e.1 += 1,
            }
        }
        counts
    }
}

impl<T: Scalar> FeatureDataset<T> {
    /// Canonical CSV: `label,split,f0,...,f{d-1}`, LF line endings.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("label,split");
        for j in 0..self.dim {
            let _ = write!(out, ",f{j}");
        }
        out.push('\n');
        for s in &self.samples {
            let _ = write!(out, "{},{}", s.label, s.split.as_str());
            for x in &s.features {
                let _ = write!(out, ",{x}");
            }
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    pub fn from_csv_str(name: impl Into<String>, text: &str) -> Result<Self> {
        let mut lines = text.split('\n').enumerate();
        let header = lines.next().map(|(_, l)| l).unwrap_or_default();
        let cols: Vec<&str> = header.trim_end_matches('\r').split(',').collect();
        if cols.len() < 3 || cols[0] != "label" || cols[1] != "split" {
            return Err(Error::Parse {
                line: 1,
                message: "header must start with `label,split` followed by feature columns".into(),
            });
        }
        for (j, c) in cols[2..].iter().enumerate() {
            if *c != format!("f{j}") {
                return Err(Error::Parse {
                    line: 1,
                    message: format!("feature column {j} must be named `f{j}`, found `{c}`"),
                });
            }
        }
        let dim = cols.len() - 2;
        let mut samples = Vec::new();
        let mut first_line = BTreeMap::new();
        for (i, raw) in lines {
            let line_no = i + 1;
            let line = raw.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse { line: line_no, message };
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != dim + 2 {
                return Err(err(format!("expected {} fields, found {}", dim + 2, fields.len())));
            }
            let label: ClassId = fields[0]
                .parse()
                .map_err(|_| err(format!("invalid label `{}`", fields[0])))?;
            let split = match fields[1] {
                "train" => Split::Train,
                "test" => Split::Test,
                other => return Err(err(format!("invalid split `{other}`"))),
            };
            let mut features = Vec::with_capacity(dim);
            for (j, f) in fields[2..].iter().enumerate() {
                let v: T = f
                    .parse()
                    .map_err(|_| err(format!("invalid number `{f}` in column f{j}")))?;
                if !v.is_finite() {
                    return Err(err(format!("non-finite value in column f{j}")));
                }
                features.push(v);
            }
            first_line.entry(label).or_insert(line_no);
            samples.push(Sample::new(features, label, split));
        }
        let ds = Self {
            name: name.into(),
            dim,
            samples,
        };
        if ds.samples.is_empty() {
            return Err(Error::Parse {
                line: 1,
                message: "no samples".into(),
            });
        }
        if let Some((class, split)) = ds.first_class_missing_split() {
            return Err(Error::Parse {
                line: first_line[&class],
                message: format!("class {class} has no {} samples", split.as_str()),
            });
        }
        Ok(ds)
    }

    /// Reads a canonical feature CSV; the dataset is named after the file stem.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::from_csv_str(name, &text)
    }
}

/// Alias kept for symmetry with `synth_features`.
pub fn load_features<T: Scalar>(path: &Path) -> Result<FeatureDataset<T>> {
    FeatureDataset::load(path)
}

/// Parameters of a synthetic Gaussian-cluster dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub name: String,
    pub n_classes: usize,
    pub dim: usize,
    pub n_train: usize,
    pub n_test: usize,
    /// Pairwise distance between class means, in within-class standard deviations.
    pub separation: f64,
    pub strategy_tag: String,
    /// Optional per-axis within-class standard deviations (isotropic when absent).
    #[serde(default)]
    pub axis_scales: Option<Vec<f64>>,
    pub seed: u64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 1 {
            return Err(Error::Invalid("dim must be at least 1".into()));
        }
        if self.n_classes < 2 {
            return Err(Error::Invalid("at least 2 classes are required".into()));
        }
        if self.n_train < 1 || self.n_test < 1 {
            return Err(Error::Invalid(
                "per-class train and test counts must be at least 1".into(),
            ));
        }
        if !(self.separation >= 0.0) || !self.separation.is_finite() {
            return Err(Error::Invalid("separation must be finite and nonnegative".into()));
        }
        if let Some(s) = &self.axis_scales {
            if s.len() != self.dim || s.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
                return Err(Error::Invalid(
                    "axis_scales must hold `dim` positive finite values".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeanLayout {
    /// Means on a scaled random orthonormal frame; all pairwise distances equal the separation.
    Orthogonal,
    /// More classes than dimensions: means on random unit directions, distances only approximate.
    Random,
}

/// Class means for a spec, plus how they were placed.
pub fn synth_class_means<T: Scalar>(spec: &SynthSpec) -> Result<(Vec<Vec<T>>, MeanLayout)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let radius = spec.separation / std::f64::consts::SQRT_2;
    let mut dirs: Vec<Vec<f64>> = Vec::with_capacity(spec.n_classes);
    let layout = if spec.n_classes <= spec.dim {
        MeanLayout::Orthogonal
    } else {
        MeanLayout::Random
    };
    while dirs.len() < spec.n_classes {
        let mut v: Vec<f64> = (0..spec.dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        if layout == MeanLayout::Orthogonal {
            // two passes of Gram-Schmidt
            for _ in 0..2 {
                for d in &dirs {
                    let proj: f64 = v.iter().zip(d).map(|(a, b)| a * b).sum();
                    v.iter_mut().zip(d).for_each(|(a, b)| *a -= proj * b);
                }
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue;
        }
        v.iter_mut().for_each(|a| *a /= norm);
        dirs.push(v);
    }
    let means = dirs
        .into_iter()
        .map(|d| d.into_iter().map(|a| T::lit(a * radius)).collect())
        .collect();
    Ok((means, layout))
}

/// Gaussian clusters, one per class, with unit (or `axis_scales`) within-class spread.
pub fn synth_features<T: Scalar>(spec: &SynthSpec) -> Result<FeatureDataset<T>> {
    let (means, _) = synth_class_means::<T>(spec)?;
    // Noise stream is separate from the mean-placement stream.
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x9E37_79B9_7F4A_7C15);
    let mut samples = Vec::with_capacity(spec.n_classes * (spec.n_train + spec.n_test));
    for (c, mean) in means.iter().enumerate() {
        for (split, count) in [(Split::Train, spec.n_train), (Split::Test, spec.n_test)] {
            for _ in 0..count {
                let features = mean
                    .iter()
                    .enumerate()
                    .map(|(j, &m)| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        let s = spec.axis_scales.as_ref().map_or(1.0, |a| a[j]);
                        m + T::lit(z * s)
                    })
                    .collect();
                samples.push(Sample::new(features, c as ClassId, split));
            }
        }
    }
    FeatureDataset::new(spec.name.clone(), samples)
}

/// Dataset descriptor variables used as regressors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub n_classes: usize,
    pub mean_train: f64,
    pub sigma_train: f64,
    pub mean_test: f64,
    pub sigma_test: f64,
    pub small: bool,
    pub width: f64,
}

impl DatasetStats {
    pub fn with_metadata(mut self, small: bool, width: f64) -> Self {
        self.small = small;
        self.width = width;
        self
    }
}

/// Mean and population standard deviation of per-class train/test counts.
pub fn dataset_stats<T>(ds: &FeatureDataset<T>) -> Result<DatasetStats> {
    let counts = ds.class_counts();
    if counts.is_empty() {
        return Err(Error::Invalid("dataset is empty".into()));
    }
    let (mean_train, sigma_train) = mean_pop_std(counts.values().map(|c| c.0 as f64));
    let (mean_test, sigma_test) = mean_pop_std(counts.values().map(|c| c.1 as f64));
    Ok(DatasetStats {
        n_classes: counts.len(),
        mean_train,
        sigma_train,
        mean_test,
        sigma_test,
        small: false,
        width: 0.0,
    })
}

fn mean_pop_std(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}
