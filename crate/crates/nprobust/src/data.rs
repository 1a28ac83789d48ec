//! Dataset ingestion, [0,1] feature scaling, PCA reduction, and
//! deterministic train/test splitting.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One labeled example. Labels are contiguous class indices in `1..=C`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: Vec<f64>,
    pub label: usize,
}

/// An ordered collection of samples sharing a dimension and a label range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    samples: Vec<Sample>,
    dim: usize,
    num_classes: usize,
}

impl Dataset {
    pub fn new(samples: Vec<Sample>, num_classes: usize) -> Result<Self> {
        let first = samples.first().ok_or(Error::EmptyDataset)?;
        let dim = first.features.len();
        for (i, s) in samples.iter().enumerate() {
            if s.features.len() != dim {
                return Err(Error::Parse {
                    row: i + 1,
                    message: format!("expected {dim} features, found {}", s.features.len()),
                });
            }
            if s.label == 0 || s.label > num_classes {
                return Err(Error::InvalidArgument(format!(
                    "label {} of sample {i} outside 1..={num_classes}",
                    s.label
                )));
            }
        }
        Ok(Dataset { samples, dim, num_classes })
    }

    pub fn n(&self) -> usize {
        self.samples.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn features(&self, i: usize) -> &[f64] {
        &self.samples[i].features
    }

    pub fn label(&self, i: usize) -> usize {
        self.samples[i].label
    }

    pub fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        Ok(())
    }
}

/// Which CSV column holds the label: a 0-based index or a header name.
#[derive(Debug, Clone, PartialEq)]
pub enum LabelColumn {
    Index(usize),
    Name(String),
}

impl std::str::FromStr for LabelColumn {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.parse::<usize>() {
            Ok(i) => Ok(LabelColumn::Index(i)),
            Err(_) => Ok(LabelColumn::Name(s.to_string())),
        }
    }
}

/// A parsed CSV file: samples plus the original label strings, which are
/// retained for reporting (labels are re-encoded to `1..=C` at load time,
/// in first-occurrence order).
#[derive(Debug, Clone)]
pub struct LoadedCsv {
    pub dataset: Dataset,
    /// `label_names[c - 1]` is the original string of class `c`.
    pub label_names: Vec<String>,
    pub header: Option<Vec<String>>,
}

fn is_numeric(field: &str) -> bool {
    field.trim().parse::<f64>().is_ok()
}

/// Loads a CSV file of feature columns plus one label column.
///
/// The first row is treated as a header when any feature-position field in
/// it fails to parse as a number (a label-column name selector also forces
/// header mode). Labels are re-encoded to contiguous `1..=C` in
/// first-occurrence order.
pub fn load_csv<P: AsRef<Path>>(path: P, label: &LabelColumn) -> Result<LoadedCsv> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path.as_ref())?;
    let mut rows: Vec<csv::StringRecord> = Vec::new();
    for rec in reader.records() {
        rows.push(rec?);
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let arity = rows[0].len();
    if arity < 2 {
        return Err(Error::Parse { row: 1, message: "need at least one feature column and one label column".into() });
    }

    // Resolve the label column and decide whether row 0 is a header.
    let (label_idx, header) = match label {
        LabelColumn::Name(name) => {
            let idx = rows[0]
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| Error::InvalidArgument(format!("label column {name:?} not found in header")))?;
            (idx, Some(rows[0].iter().map(|s| s.to_string()).collect::<Vec<_>>()))
        }
        LabelColumn::Index(idx) => {
            if *idx >= arity {
                return Err(Error::InvalidArgument(format!(
                    "label column index {idx} out of range for {arity} columns"
                )));
            }
            let has_header = rows[0]
                .iter()
                .enumerate()
                .any(|(i, field)| i != *idx && !is_numeric(field));
            let header = has_header
                .then(|| rows[0].iter().map(|s| s.to_string()).collect::<Vec<_>>());
            (*idx, header)
        }
    };

    let data_rows = if header.is_some() { &rows[1..] } else { &rows[..] };
    if data_rows.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let mut label_names: Vec<String> = Vec::new();
    let mut label_codes: BTreeMap<String, usize> = BTreeMap::new();
    let mut samples = Vec::with_capacity(data_rows.len());
    for (i, rec) in data_rows.iter().enumerate() {
        let row = i + 1;
        if rec.len() != arity {
            return Err(Error::Parse {
                row,
                message: format!("expected {arity} fields, found {}", rec.len()),
            });
        }
        let mut features = Vec::with_capacity(arity - 1);
        let mut label_str = None;
        for (j, field) in rec.iter().enumerate() {
            if j == label_idx {
                label_str = Some(field.trim().to_string());
            } else {
                let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                    row,
                    message: format!("column {j}: {field:?} is not a number"),
                })?;
                features.push(v);
            }
        }
        let label_str = label_str.expect("label index checked against arity");
        let code = *label_codes.entry(label_str.clone()).or_insert_with(|| {
            label_names.push(label_str);
            label_names.len()
        });
        samples.push(Sample { features, label: code });
    }

    let dataset = Dataset::new(samples, label_names.len())?;
    Ok(LoadedCsv { dataset, label_names, header })
}

/// Writes a dataset as CSV with a `f1,..,fd,label` header. Floats use the
/// shortest representation that round-trips exactly, so `load_csv` after
/// `save_csv` reproduces the dataset bit for bit.
pub fn save_csv<P: AsRef<Path>>(
    path: P,
    ds: &Dataset,
    label_names: Option<&[String]>,
) -> Result<()> {
    let mut writer = csv::Writer::from_path(path.as_ref())?;
    let mut header: Vec<String> = (1..=ds.dim()).map(|j| format!("f{j}")).collect();
    header.push("label".to_string());
    writer.write_record(&header)?;
    for s in ds.samples() {
        let mut rec: Vec<String> = s.features.iter().map(|v| v.to_string()).collect();
        match label_names {
            Some(names) => rec.push(names[s.label - 1].clone()),
            None => rec.push(s.label.to_string()),
        }
        writer.write_record(&rec)?;
    }
    writer.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureScale {
    pub min: f64,
    pub range: f64,
}

/// Per-feature affine maps taking raw columns into [0,1]. Serialized as a
/// JSON object keyed by feature index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingTable(pub BTreeMap<usize, FeatureScale>);

impl ScalingTable {
    /// Applies the stored maps. Constant columns (range 0) map to 0.
    pub fn apply(&self, ds: &Dataset) -> Result<Dataset> {
        let samples = ds
            .samples()
            .iter()
            .map(|s| {
                let features = s
                    .features
                    .iter()
                    .enumerate()
                    .map(|(j, &v)| {
                        let fs = self.0[&j];
                        if fs.range > 0.0 {
                            (v - fs.min) / fs.range
                        } else {
                            0.0
                        }
                    })
                    .collect();
                Sample { features, label: s.label }
            })
            .collect();
        Dataset::new(samples, ds.num_classes())
    }
}

/// Maps every feature column into [0,1] by `(x - min) / (max - min)`.
/// Constant columns map to 0.
pub fn scale_features(ds: &Dataset) -> (Dataset, ScalingTable) {
    let mut table = BTreeMap::new();
    for j in 0..ds.dim() {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for s in ds.samples() {
            lo = lo.min(s.features[j]);
            hi = hi.max(s.features[j]);
        }
        table.insert(j, FeatureScale { min: lo, range: hi - lo });
    }
    let table = ScalingTable(table);
    let scaled = table.apply(ds).expect("scaling preserves shape");
    (scaled, table)
}

/// A fitted PCA projection: `y = components · (x - mean)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `p` orthonormal rows, eigenvalue-descending. Each row's
    /// largest-magnitude entry is non-negative.
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
/// (eigenvalues, eigenvectors as columns), unsorted. Converges when the
/// off-diagonal Frobenius norm drops below 1e-10.
fn jacobi_eigh(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let d = a.len();
    let mut v = vec![vec![0.0; d]; d];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let off = |a: &Vec<Vec<f64>>| -> f64 {
        let mut s = 0.0;
        for p in 0..d {
            for q in 0..d {
                if p != q {
                    s += a[p][q] * a[p][q];
                }
            }
        }
        s.sqrt()
    };
    for _sweep in 0..100 {
        if off(&a) < 1e-10 {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for i in 0..d {
                    let aip = a[i][p];
                    let aiq = a[i][q];
                    a[i][p] = c * aip - s * aiq;
                    a[i][q] = s * aip + c * aiq;
                }
                for i in 0..d {
                    let api = a[p][i];
                    let aqi = a[q][i];
                    a[p][i] = c * api - s * aqi;
                    a[q][i] = s * api + c * aqi;
                }
                for i in 0..d {
                    let vip = v[i][p];
                    let viq = v[i][q];
                    v[i][p] = c * vip - s * viq;
                    v[i][q] = s * vip + c * viq;
                }
            }
        }
    }
    let eigenvalues = (0..d).map(|i| a[i][i]).collect();
    (eigenvalues, v)
}

/// Fits PCA to the top `p` eigenvectors of the centered covariance.
pub fn pca_fit(ds: &Dataset, p: usize) -> Result<PcaModel> {
    let n = ds.n();
    let d = ds.dim();
    if p == 0 || p > d.min(n) {
        return Err(Error::InvalidArgument(format!(
            "PCA target dimension {p} outside 1..=min(n={n}, d={d})"
        )));
    }
    let mut mean = vec![0.0; d];
    for s in ds.samples() {
        for (m, &x) in mean.iter_mut().zip(&s.features) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let denom = (n.max(2) - 1) as f64;
    let mut cov = vec![vec![0.0; d]; d];
    for s in ds.samples() {
        let centered: Vec<f64> = s.features.iter().zip(&mean).map(|(x, m)| x - m).collect();
        for i in 0..d {
            for j in i..d {
                cov[i][j] += centered[i] * centered[j] / denom;
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            cov[i][j] = cov[j][i];
        }
    }
    let (eigenvalues, vectors) = jacobi_eigh(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eigenvalues[b].partial_cmp(&eigenvalues[a]).unwrap().then(a.cmp(&b)));

    let mut components = Vec::with_capacity(p);
    let mut explained = Vec::with_capacity(p);
    for &col in order.iter().take(p) {
        let mut row: Vec<f64> = (0..d).map(|i| vectors[i][col]).collect();
        // Sign convention: the largest-magnitude entry is non-negative.
        let lead = row
            .iter()
            .enumerate()
            .max_by(|(i, a), (j, b)| {
                a.abs().partial_cmp(&b.abs()).unwrap().then(j.cmp(i))
            })
            .map(|(i, _)| i)
            .unwrap();
        if row[lead] < 0.0 {
            for x in &mut row {
                *x = -*x;
            }
        }
        components.push(row);
        explained.push(eigenvalues[col]);
    }
    Ok(PcaModel { mean, components, explained_variance: explained })
}

/// Projects every sample: `y = components · (x - mean)`. Labels unchanged.
pub fn pca_transform(model: &PcaModel, ds: &Dataset) -> Result<Dataset> {
    if ds.dim() != model.mean.len() {
        return Err(Error::DimensionMismatch { expected: model.mean.len(), got: ds.dim() });
    }
    let samples = ds
        .samples()
        .iter()
        .map(|s| {
            let centered: Vec<f64> =
                s.features.iter().zip(&model.mean).map(|(x, m)| x - m).collect();
            let features = model
                .components
                .iter()
                .map(|row| row.iter().zip(&centered).map(|(a, b)| a * b).sum())
                .collect();
            Sample { features, label: s.label }
        })
        .collect();
    Dataset::new(samples, ds.num_classes())
}

/// Deterministic seeded train/test partition. Both parts keep the order
/// induced by the seeded shuffle.
pub fn split(ds: &Dataset, test_count: usize, seed: u64) -> Result<(Dataset, Dataset)> {
    if test_count == 0 || test_count >= ds.n() {
        return Err(Error::InvalidArgument(format!(
            "test_count {test_count} outside 1..{}",
            ds.n()
        )));
    }
    let mut order: Vec<usize> = (0..ds.n()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let test: Vec<Sample> =
        order[..test_count].iter().map(|&i| ds.samples()[i].clone()).collect();
    let train: Vec<Sample> =
        order[test_count..].iter().map(|&i| ds.samples()[i].clone()).collect();
    Ok((
        Dataset::new(train, ds.num_classes())?,
        Dataset::new(test, ds.num_classes())?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn ds(rows: &[(&[f64], usize)], c: usize) -> Dataset {
        Dataset::new(
            rows.iter().map(|(f, l)| Sample { features: f.to_vec(), label: *l }).collect(),
            c,
        )
        .unwrap()
    }

    fn write_temp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn load_csv_basic() {
        let f = write_temp("0.1,0.2,A\n0.3,0.4,B\n");
        let loaded = load_csv(f.path(), &LabelColumn::Index(2)).unwrap();
        assert_eq!(loaded.dataset.n(), 2);
        assert_eq!(loaded.dataset.dim(), 2);
        assert_eq!(loaded.dataset.num_classes(), 2);
        assert_eq!(loaded.dataset.label(0), 1);
        assert_eq!(loaded.dataset.label(1), 2);
        assert_eq!(loaded.label_names, vec!["A", "B"]);
        assert!(loaded.header.is_none());
    }

    #[test]
    fn load_csv_malformed_row() {
        let f = write_temp("0.1,,A\n");
        match load_csv(f.path(), &LabelColumn::Index(2)) {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn load_csv_first_occurrence_encoding() {
        let f = write_temp("0.0,A\n1.0,B\n2.0,A\n");
        let loaded = load_csv(f.path(), &LabelColumn::Index(1)).unwrap();
        let labels: Vec<usize> =
            loaded.dataset.samples().iter().map(|s| s.label).collect();
        assert_eq!(labels, vec![1, 2, 1]);
    }

    #[test]
    fn load_csv_header_detected_and_by_name() {
        let f = write_temp("x1,x2,which\n0.5,0.25,yes\n0.75,1.0,no\n");
        let loaded = load_csv(f.path(), &LabelColumn::Name("which".into())).unwrap();
        assert_eq!(loaded.dataset.n(), 2);
        assert_eq!(loaded.header.as_deref(), Some(&["x1".to_string(), "x2".into(), "which".into()][..]));
        // Index selection also spots the non-numeric header row.
        let loaded2 = load_csv(f.path(), &LabelColumn::Index(2)).unwrap();
        assert_eq!(loaded2.dataset.n(), 2);
    }

    #[test]
    fn load_csv_empty_file() {
        let f = write_temp("");
        assert!(matches!(load_csv(f.path(), &LabelColumn::Index(0)), Err(Error::EmptyDataset)));
    }

    #[test]
    fn save_load_round_trip_is_exact() {
        let original = ds(
            &[
                (&[0.1, 0.25, -3.5][..], 1),
                (&[1.0 / 3.0, 7e-12, 42.0][..], 2),
                (&[-0.0, 5.5, 1e300][..], 1),
            ],
            2,
        );
        let f = tempfile::NamedTempFile::new().unwrap();
        save_csv(f.path(), &original, None).unwrap();
        let reloaded = load_csv(f.path(), &LabelColumn::Name("label".into())).unwrap();
        assert_eq!(reloaded.dataset, original);
    }

    #[test]
    fn scale_affine_map() {
        let (scaled, table) = scale_features(&ds(&[(&[2.0][..], 1), (&[4.0][..], 1), (&[6.0][..], 2)], 2));
        let col: Vec<f64> = scaled.samples().iter().map(|s| s.features[0]).collect();
        assert_eq!(col, vec![0.0, 0.5, 1.0]);
        assert_eq!(table.0[&0], FeatureScale { min: 2.0, range: 4.0 });
    }

    #[test]
    fn scale_constant_column() {
        let (scaled, _) = scale_features(&ds(&[(&[5.0][..], 1), (&[5.0][..], 2)], 2));
        assert!(scaled.samples().iter().all(|s| s.features[0] == 0.0));
    }

    #[test]
    fn scale_columns_independent() {
        let (scaled, _) =
            scale_features(&ds(&[(&[0.0, 10.0][..], 1), (&[1.0, 20.0][..], 2)], 2));
        assert_eq!(scaled.features(0), &[0.0, 0.0]);
        assert_eq!(scaled.features(1), &[1.0, 1.0]);
    }

    #[test]
    fn pca_line_in_2d() {
        // Points on x2 = 2*x1: the single component is (1,2)/sqrt(5).
        let d = ds(&[(&[0.0, 0.0][..], 1), (&[1.0, 2.0][..], 1), (&[2.0, 4.0][..], 1)], 1);
        let m = pca_fit(&d, 1).unwrap();
        let expect = [1.0 / 5.0_f64.sqrt(), 2.0 / 5.0_f64.sqrt()];
        for (got, want) in m.components[0].iter().zip(expect) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
    }

    #[test]
    fn pca_full_rank_is_isometry() {
        let d = ds(
            &[
                (&[0.3, 0.9, 0.1][..], 1),
                (&[0.8, 0.2, 0.5][..], 1),
                (&[0.1, 0.4, 0.7][..], 1),
                (&[0.6, 0.6, 0.2][..], 1),
            ],
            1,
        );
        let m = pca_fit(&d, 3).unwrap();
        let t = pca_transform(&m, &d).unwrap();
        // Reconstruct: x = mean + components^T y; error should vanish.
        for (orig, proj) in d.samples().iter().zip(t.samples()) {
            for i in 0..3 {
                let rec: f64 = m.mean[i]
                    + (0..3).map(|r| m.components[r][i] * proj.features[r]).sum::<f64>();
                assert!((rec - orig.features[i]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn pca_transform_identity_and_line() {
        let ident = PcaModel {
            mean: vec![0.0, 0.0],
            components: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            explained_variance: vec![1.0, 1.0],
        };
        let d = ds(&[(&[0.25, 0.75][..], 1)], 1);
        let t = pca_transform(&ident, &d).unwrap();
        assert_eq!(t.features(0), &[0.25, 0.75]);

        // Zero-mean model with component (1,2)/sqrt(5): input (1,2) maps to sqrt(5).
        let s5 = 5.0_f64.sqrt();
        let line = PcaModel {
            mean: vec![0.0, 0.0],
            components: vec![vec![1.0 / s5, 2.0 / s5]],
            explained_variance: vec![1.0],
        };
        let d2 = ds(&[(&[1.0, 2.0][..], 1)], 1);
        let t2 = pca_transform(&line, &d2).unwrap();
        assert!((t2.features(0)[0] - s5).abs() < 1e-12);
    }

    #[test]
    fn pca_dimension_mismatch() {
        let m = PcaModel {
            mean: vec![0.0; 3],
            components: vec![vec![1.0, 0.0, 0.0]],
            explained_variance: vec![1.0],
        };
        let d = ds(&[(&[0.1, 0.2][..], 1)], 1);
        assert!(matches!(pca_transform(&m, &d), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn pca_p_out_of_range() {
        let d = ds(&[(&[0.1, 0.2][..], 1), (&[0.2, 0.1][..], 1)], 1);
        assert!(pca_fit(&d, 0).is_err());
        assert!(pca_fit(&d, 3).is_err());
    }

    #[test]
    fn split_partitions_deterministically() {
        let rows: Vec<(Vec<f64>, usize)> = (0..10).map(|i| (vec![i as f64], 1 + i % 2)).collect();
        let d = Dataset::new(
            rows.iter().map(|(f, l)| Sample { features: f.clone(), label: *l }).collect(),
            2,
        )
        .unwrap();
        let (train, test) = split(&d, 2, 7).unwrap();
        assert_eq!(train.n(), 8);
        assert_eq!(test.n(), 2);
        let (train2, test2) = split(&d, 2, 7).unwrap();
        assert_eq!(train, train2);
        assert_eq!(test, test2);
        // Disjoint by feature value (all values distinct here).
        for t in test.samples() {
            assert!(!train.samples().iter().any(|s| s.features == t.features));
        }
        assert!(matches!(split(&d, 0, 7), Err(Error::InvalidArgument(_))));
        assert!(matches!(split(&d, 10, 7), Err(Error::InvalidArgument(_))));
    }
}
