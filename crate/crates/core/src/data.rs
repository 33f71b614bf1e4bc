//! Dataset loading, scaling and the half / train-validation split protocol.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::Stream;

/// Numeric features with one-hot targets.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    name: String,
    features: Matrix,
    targets: Matrix,
    class_labels: Vec<String>,
    dropped_rows: usize,
}

impl Dataset {
    /// `classes[i]` indexes into `class_labels`.
    pub fn new(
        name: impl Into<String>,
        features: Matrix,
        classes: &[usize],
        class_labels: Vec<String>,
    ) -> Result<Self> {
        if features.rows() != classes.len() {
            return Err(Error::shape(format!(
                "{} feature rows but {} labels",
                features.rows(),
                classes.len()
            )));
        }
        if class_labels.is_empty() {
            return Err(Error::Empty("dataset needs at least one class"));
        }
        if features.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::data("non-finite feature value"));
        }
        let n = class_labels.len();
        let mut targets = Matrix::zeros(classes.len(), n);
        for (i, &c) in classes.iter().enumerate() {
            if c >= n {
                return Err(Error::data(format!("row {i}: class index {c} out of range")));
            }
            targets.set(i, c, 1.0);
        }
        Ok(Dataset {
            name: name.into(),
            features,
            targets,
            class_labels,
            dropped_rows: 0,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn targets(&self) -> &Matrix {
        &self.targets
    }

    pub fn class_labels(&self) -> &[String] {
        &self.class_labels
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn num_attributes(&self) -> usize {
        self.features.cols()
    }

    pub fn num_classes(&self) -> usize {
        self.class_labels.len()
    }

    /// Rows removed during loading because of missing values.
    pub fn dropped_rows(&self) -> usize {
        self.dropped_rows
    }

    pub fn class_of(&self, row: usize) -> usize {
        self.targets
            .row(row)
            .iter()
            .position(|&v| v == 1.0)
            .expect("one-hot target row")
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes()];
        for i in 0..self.len() {
            counts[self.class_of(i)] += 1;
        }
        counts
    }

    pub fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            features: self.features.select_rows(rows),
            targets: self.targets.select_rows(rows),
            class_labels: self.class_labels.clone(),
            dropped_rows: 0,
        }
    }

    /// Replaces the one-hot targets with arbitrary values (regression
    /// fixtures in tests).
    #[cfg(test)]
    pub(crate) fn with_targets(self, targets: Matrix) -> Dataset {
        assert_eq!(targets.rows(), self.len());
        Dataset { targets, ..self }
    }

    fn with_features(&self, features: Matrix) -> Dataset {
        Dataset {
            features,
            ..self.clone()
        }
    }
}

// ---------------------------------------------------------------------------
// CSV input
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Column {
    Index(usize),
    Name(String),
}

impl Column {
    /// Integers are indices, anything else a header name.
    pub fn parse(s: &str) -> Column {
        match s.parse::<usize>() {
            Ok(i) => Column::Index(i),
            Err(_) => Column::Name(s.to_string()),
        }
    }

    fn resolve(&self, header: Option<&[String]>, width: usize) -> Result<usize> {
        match self {
            Column::Index(i) if *i < width => Ok(*i),
            Column::Index(i) => Err(Error::data(format!(
                "column {i} out of range ({width} columns)"
            ))),
            Column::Name(n) => header
                .and_then(|h| h.iter().position(|c| c == n))
                .ok_or_else(|| Error::data(format!("no column named {n:?}"))),
        }
    }
}

impl fmt::Display for Column {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Column::Index(i) => write!(f, "{i}"),
            Column::Name(n) => f.write_str(n),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CsvSchema {
    pub has_header: bool,
    pub delimiter: u8,
    pub label: Column,
    pub ignore: Vec<Column>,
}

impl CsvSchema {
    /// No header, comma separated, label in the last column.
    pub fn label_last() -> Self {
        CsvSchema {
            has_header: false,
            delimiter: b',',
            label: Column::Index(usize::MAX),
            ignore: Vec::new(),
        }
    }

    pub fn with_label(mut self, label: Column) -> Self {
        self.label = label;
        self
    }

    pub fn ignoring(mut self, col: Column) -> Self {
        self.ignore.push(col);
        self
    }
}

fn is_missing(v: &str) -> bool {
    matches!(v, "" | "?" | "NA" | "na" | "NaN" | "nan")
}

pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    parse_csv(&name, &text, schema)
}

pub fn parse_csv(name: &str, text: &str, schema: &CsvSchema) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(schema.has_header)
        .delimiter(schema.delimiter)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());

    let header: Option<Vec<String>> = if schema.has_header {
        Some(reader.headers()?.iter().map(str::to_string).collect())
    } else {
        None
    };

    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| match e.position() {
            Some(p) => Error::data(format!("{name}: line {}: {e}", p.line())),
            None => Error::Csv(e),
        })?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let line = rec.position().map_or(0, |p| p.line());
        records.push((line, rec.iter().map(str::to_string).collect::<Vec<_>>()));
    }
    let width = match (&header, records.first()) {
        (Some(h), _) => h.len(),
        (None, Some((_, r))) => r.len(),
        (None, None) => return Err(Error::data(format!("{name}: no data rows"))),
    };
    for (line, r) in &records {
        if r.len() != width {
            return Err(Error::data(format!(
                "{name}: line {line}: {} fields, expected {width}",
                r.len()
            )));
        }
    }

    let label = match schema.label {
        Column::Index(usize::MAX) => width - 1,
        ref c => c.resolve(header.as_deref(), width)?,
    };
    let mut skip = BTreeSet::from([label]);
    for c in &schema.ignore {
        skip.insert(c.resolve(header.as_deref(), width)?);
    }
    let feature_cols: Vec<usize> = (0..width).filter(|c| !skip.contains(c)).collect();
    if feature_cols.is_empty() {
        return Err(Error::data(format!("{name}: no feature columns")));
    }

    let total = records.len();
    records.retain(|(_, r)| {
        !is_missing(&r[label]) && feature_cols.iter().all(|&c| !is_missing(&r[c]))
    });
    let dropped = total - records.len();
    if records.is_empty() {
        return Err(Error::data(format!(
            "{name}: zero usable rows ({dropped} dropped for missing values)"
        )));
    }

    // Numeric columns parse directly; any other column is coded by the
    // sorted order of its distinct values.
    let mut features = Matrix::zeros(records.len(), feature_cols.len());
    for (j, &c) in feature_cols.iter().enumerate() {
        let numeric: Option<Vec<f64>> = records
            .iter()
            .map(|(_, r)| r[c].parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect();
        match numeric {
            Some(vals) => {
                for (i, v) in vals.into_iter().enumerate() {
                    features.set(i, j, v);
                }
            }
            None => {
                let levels: BTreeSet<&str> = records.iter().map(|(_, r)| r[c].as_str()).collect();
                let levels: Vec<&str> = levels.into_iter().collect();
                for (i, (_, r)) in records.iter().enumerate() {
                    let code = levels.binary_search(&r[c].as_str()).unwrap();
                    features.set(i, j, code as f64);
                }
            }
        }
    }

    let labels: BTreeSet<&str> = records.iter().map(|(_, r)| r[label].as_str()).collect();
    let class_labels: Vec<String> = labels.iter().map(|s| s.to_string()).collect();
    let classes: Vec<usize> = records
        .iter()
        .map(|(_, r)| class_labels.iter().position(|l| *l == r[label]).unwrap())
        .collect();

    let mut d = Dataset::new(name, features, &classes, class_labels)?;
    d.dropped_rows = dropped;
    Ok(d)
}

/// Datasets shipped with the crate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Builtin {
    Cancer,
    Diabetes,
    Glass,
}

impl Builtin {
    pub const ALL: [Builtin; 3] = [Builtin::Cancer, Builtin::Diabetes, Builtin::Glass];

    pub fn from_name(name: &str) -> Option<Builtin> {
        match name.to_ascii_lowercase().as_str() {
            "cancer" | "breast-cancer-wisconsin" => Some(Builtin::Cancer),
            "diabetes" | "pima" | "pima-indians-diabetes" => Some(Builtin::Diabetes),
            "glass" | "vidros" => Some(Builtin::Glass),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Cancer => "cancer",
            Builtin::Diabetes => "diabetes",
            Builtin::Glass => "glass",
        }
    }

    pub fn source(self) -> &'static str {
        match self {
            Builtin::Cancer => include_str!("../data/breast-cancer-wisconsin.data"),
            Builtin::Diabetes => include_str!("../data/pima-indians-diabetes.data"),
            Builtin::Glass => include_str!("../data/glass.data"),
        }
    }

    pub fn schema(self) -> CsvSchema {
        match self {
            Builtin::Cancer | Builtin::Glass => {
                CsvSchema::label_last().ignoring(Column::Index(0))
            }
            Builtin::Diabetes => CsvSchema::label_last(),
        }
    }

    pub fn load(self) -> Dataset {
        parse_csv(self.name(), self.source(), &self.schema()).expect("bundled dataset parses")
    }
}

// ---------------------------------------------------------------------------
// Scaling
// ---------------------------------------------------------------------------

/// Per-feature min-max statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct MinMax {
    min: Vec<f64>,
    max: Vec<f64>,
}

impl MinMax {
    pub fn fit(d: &Dataset) -> Result<Self> {
        if d.is_empty() {
            return Err(Error::Empty("cannot fit scaling on an empty dataset"));
        }
        let f = d.features();
        let (min, max) = (0..f.cols())
            .map(|c| {
                f.column(c).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(v), hi.max(v))
                })
            })
            .unzip();
        Ok(MinMax { min, max })
    }

    /// Maps the fitted range to `[0, 1]`; constant features map to 0.5.
    /// Values outside the fitted range are not clamped.
    pub fn transform(&self, d: &Dataset) -> Result<Dataset> {
        if d.num_attributes() != self.min.len() {
            return Err(Error::shape(format!(
                "scaler fitted on {} features, dataset has {}",
                self.min.len(),
                d.num_attributes()
            )));
        }
        let mut f = d.features().clone();
        let cols = f.cols();
        for (i, v) in f.as_mut_slice().iter_mut().enumerate() {
            let c = i % cols;
            let span = self.max[c] - self.min[c];
            *v = if span > 0.0 {
                (*v - self.min[c]) / span
            } else {
                0.5
            };
        }
        Ok(d.with_features(f))
    }
}

pub fn normalize(d: &Dataset) -> Result<Dataset> {
    MinMax::fit(d)?.transform(d)
}

// ---------------------------------------------------------------------------
// Splitting
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitSpec {
    pub seed: u64,
    pub half_fraction: f64,
    pub train_fraction: f64,
    /// Use the other half as the search half (second fold of a replication).
    pub swap_halves: bool,
}

impl SplitSpec {
    pub fn new(seed: u64) -> Self {
        SplitSpec {
            seed,
            half_fraction: 0.5,
            train_fraction: 0.7,
            swap_halves: false,
        }
    }

    pub fn swapped(self) -> Self {
        SplitSpec {
            swap_halves: !self.swap_halves,
            ..self
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Dataset,
}

impl Partition {
    /// Min-max scaling fitted on the training part only.
    pub fn normalized(&self) -> Result<Partition> {
        let s = MinMax::fit(&self.train)?;
        Ok(Partition {
            train: s.transform(&self.train)?,
            validation: s.transform(&self.validation)?,
            test: s.transform(&self.test)?,
        })
    }
}

/// Systematic assignment over a class-grouped ordering: position `i` is
/// selected when `floor((i+1) f) > floor(i f)`. Every class contiguous in
/// `order` receives its share of the selection within one pattern.
fn systematic(order: &[usize], fraction: f64) -> (Vec<usize>, Vec<usize>) {
    let mut picked = Vec::new();
    let mut rest = Vec::new();
    for (i, &idx) in order.iter().enumerate() {
        if ((i + 1) as f64 * fraction).floor() > (i as f64 * fraction).floor() {
            picked.push(idx);
        } else {
            rest.push(idx);
        }
    }
    (picked, rest)
}

pub fn split_indices(d: &Dataset, spec: &SplitSpec) -> Result<SplitIndices> {
    for f in [spec.half_fraction, spec.train_fraction] {
        if !(f > 0.0 && f < 1.0) {
            return Err(Error::invalid(format!("split fraction {f} outside (0, 1)")));
        }
    }
    let counts = d.class_counts();
    if let Some((c, &n)) = counts.iter().enumerate().find(|(_, &n)| n < 2) {
        return Err(Error::data(format!(
            "class {:?} has {n} pattern(s); the split needs at least 2",
            d.class_labels()[c]
        )));
    }
    let stream = Stream::new(spec.seed);
    let mut order = Vec::with_capacity(d.len());
    for c in 0..d.num_classes() {
        let mut members: Vec<usize> = (0..d.len()).filter(|&i| d.class_of(i) == c).collect();
        members.shuffle(&mut stream.child(c as u64).rng());
        order.extend(members);
    }
    let (search, test) = {
        let (a, b) = systematic(&order, spec.half_fraction);
        if spec.swap_halves {
            (b, a)
        } else {
            (a, b)
        }
    };
    let (train, validation) = systematic(&search, spec.train_fraction);
    Ok(SplitIndices {
        train,
        validation,
        test,
    })
}

/// Test set is one half; the other half is split into train and validation.
pub fn split(d: &Dataset, spec: &SplitSpec) -> Result<Partition> {
    let idx = split_indices(d, spec)?;
    Ok(Partition {
        train: d.subset(&idx.train),
        validation: d.subset(&idx.validation),
        test: d.subset(&idx.test),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toy(classes: &[usize], n_classes: usize) -> Dataset {
        let rows: Vec<[f64; 1]> = (0..classes.len()).map(|i| [i as f64]).collect();
        Dataset::new(
            "toy",
            Matrix::from_rows(&rows).unwrap(),
            classes,
            (0..n_classes).map(|c| c.to_string()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn builtin_shapes() {
        let c = Builtin::Cancer.load();
        assert_eq!(c.len() + c.dropped_rows(), 699);
        assert_eq!(c.dropped_rows(), 16);
        assert_eq!((c.num_attributes(), c.num_classes()), (9, 2));
        let d = Builtin::Diabetes.load();
        assert_eq!((d.len(), d.num_attributes(), d.num_classes()), (768, 8, 2));
        let g = Builtin::Glass.load();
        assert_eq!((g.len(), g.num_attributes(), g.num_classes()), (214, 9, 6));
    }

    #[test]
    fn tiny_golden_csv() {
        let text = "a,b,colour,label\n1,2.5,red,yes\n3,-1,blue,no\n?,4,red,yes\n0.5,0,green,no\n";
        let schema = CsvSchema {
            has_header: true,
            delimiter: b',',
            label: Column::Name("label".into()),
            ignore: vec![],
        };
        let d = parse_csv("golden", text, &schema).unwrap();
        assert_eq!(d.dropped_rows(), 1);
        assert_eq!(
            d.features(),
            &Matrix::from_rows(&[[1.0, 2.5, 2.0], [3.0, -1.0, 0.0], [0.5, 0.0, 1.0]]).unwrap()
        );
        assert_eq!(d.class_labels(), &["no".to_string(), "yes".to_string()]);
        assert_eq!(
            d.targets(),
            &Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0], [1.0, 0.0]]).unwrap()
        );
    }

    #[test]
    fn csv_errors_carry_line() {
        let err = parse_csv("bad", "1,2,3\n4,5\n", &CsvSchema::label_last()).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = parse_csv("empty", "?,1\n", &CsvSchema::label_last()).unwrap_err();
        assert!(err.to_string().contains("zero usable rows"), "{err}");
    }

    #[test]
    fn semicolon_delimiter_and_label_index() {
        let schema = CsvSchema {
            has_header: false,
            delimiter: b';',
            label: Column::Index(0),
            ignore: vec![],
        };
        let d = parse_csv("semi", "x;1;2\ny;3;4\n", &schema).unwrap();
        assert_eq!(d.num_attributes(), 2);
        assert_eq!(d.num_classes(), 2);
    }

    #[test]
    fn minmax_examples() {
        let d = Dataset::new(
            "m",
            Matrix::from_rows(&[[2.0, 7.0], [4.0, 7.0], [6.0, 7.0]]).unwrap(),
            &[0, 0, 0],
            vec!["a".into()],
        )
        .unwrap();
        let n = normalize(&d).unwrap();
        assert_eq!(n.features().column(0).collect::<Vec<_>>(), vec![0.0, 0.5, 1.0]);
        assert_eq!(n.features().column(1).collect::<Vec<_>>(), vec![0.5, 0.5, 0.5]);
    }

    #[test]
    fn heldout_rows_are_not_clamped() {
        let p = split(&Builtin::Diabetes.load(), &SplitSpec::new(3))
            .unwrap()
            .normalized()
            .unwrap();
        let f = p.train.features().as_slice();
        assert!(f.iter().all(|v| (0.0..=1.0).contains(v)));
        let outside = p
            .test
            .features()
            .as_slice()
            .iter()
            .chain(p.validation.features().as_slice())
            .filter(|v| !(0.0..=1.0).contains(*v))
            .count();
        assert!(outside > 0);
    }

    #[test]
    fn split_sizes_for_100() {
        let classes: Vec<usize> = (0..100).map(|i| i % 2).collect();
        let idx = split_indices(&toy(&classes, 2), &SplitSpec::new(1)).unwrap();
        assert_eq!((idx.test.len(), idx.train.len(), idx.validation.len()), (50, 35, 15));
    }

    #[test]
    fn split_rejects_singleton_class() {
        let err = split(&toy(&[0, 0, 0, 1], 2), &SplitSpec::new(0)).unwrap_err();
        assert!(matches!(err, Error::Data(_)));
    }

    #[test]
    fn seeds_change_the_permutation() {
        let d = Builtin::Cancer.load();
        let a = split_indices(&d, &SplitSpec::new(1)).unwrap();
        let b = split_indices(&d, &SplitSpec::new(1)).unwrap();
        let c = split_indices(&d, &SplitSpec::new(2)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn swapped_fold_exchanges_halves() {
        let d = Builtin::Glass.load();
        let spec = SplitSpec::new(9);
        let a = split_indices(&d, &spec).unwrap();
        let b = split_indices(&d, &spec.swapped()).unwrap();
        let mut search_b: Vec<usize> = b.train.iter().chain(&b.validation).copied().collect();
        search_b.sort();
        let mut test_a = a.test.clone();
        test_a.sort();
        assert_eq!(search_b, test_a);
    }

    proptest! {
        #[test]
        fn split_is_a_stratified_partition(
            counts in prop::collection::vec(2usize..40, 1..6),
            seed in any::<u64>(),
        ) {
            let classes: Vec<usize> = counts.iter().enumerate()
                .flat_map(|(c, &n)| std::iter::repeat_n(c, n)).collect();
            let d = toy(&classes, counts.len());
            let idx = split_indices(&d, &SplitSpec::new(seed)).unwrap();
            let mut all: Vec<usize> = idx.train.iter().chain(&idx.validation).chain(&idx.test).copied().collect();
            all.sort();
            prop_assert_eq!(all, (0..d.len()).collect::<Vec<_>>());

            // test half against the half fraction, train/validation against
            // the train fraction of their own half
            let search: Vec<usize> = idx.train.iter().chain(&idx.validation).copied().collect();
            let count = |part: &[usize], c: usize| part.iter().filter(|&&i| classes[i] == c).count() as f64;
            for (c, &nc) in counts.iter().enumerate() {
                let s_c = count(&search, c);
                prop_assert!((s_c - nc as f64 * 0.5).abs() < 1.0);
                prop_assert!((count(&idx.test, c) - nc as f64 * 0.5).abs() < 1.0);
                prop_assert!((count(&idx.train, c) - s_c * 0.7).abs() < 1.0);
                prop_assert!((count(&idx.validation, c) - s_c * 0.3).abs() < 1.0);
            }
        }
    }
}
