//! Interaction records, subset partitioning, learner × activity matrices and
//! the synthetic benchmark generator.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("unknown activity `{0}`")]
    UnknownActivity(String),
    #[error("invalid subset key `{0}`")]
    InvalidSubsetKey(String),
    #[error("row {row}: missing column `{column}`")]
    MissingColumn { column: String, row: u64 },
    #[error("row {row}, column {column} (`{name}`): cannot parse `{value}` as a click count")]
    Parse {
        row: u64,
        column: usize,
        name: String,
        value: String,
    },
    #[error("row {row}: {message}")]
    Malformed { row: u64, message: String },
    #[error("subset has no records")]
    EmptySubset,
    #[error("records span more than one subset ({0} and {1})")]
    MixedSubsets(SubsetKey, SubsetKey),
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn from_csv(err: csv::Error) -> DatasetError {
    if err.is_io_error() {
        match err.into_kind() {
            csv::ErrorKind::Io(io) => DatasetError::Io(io),
            _ => unreachable!(),
        }
    } else {
        let row = err.position().map(|p| p.line()).unwrap_or(0);
        DatasetError::Malformed {
            row,
            message: err.to_string(),
        }
    }
}

macro_rules! activities {
    ($($variant:ident => $name:literal),+ $(,)?) => {
        /// One of the twenty catalogued learning interaction activities.
        ///
        /// Variant order is the catalog order, which is also the canonical
        /// feature order everywhere in the crate.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum ActivityKind {
            $($variant),+
        }

        impl ActivityKind {
            pub const ALL: [ActivityKind; 20] = [$(ActivityKind::$variant),+];

            pub fn name(self) -> &'static str {
                match self {
                    $(ActivityKind::$variant => $name),+
                }
            }
        }

        impl FromStr for ActivityKind {
            type Err = DatasetError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s.trim() {
                    $($name => Ok(ActivityKind::$variant),)+
                    other => Err(DatasetError::UnknownActivity(other.to_string())),
                }
            }
        }
    };
}

activities! {
    Dataplus => "dataplus",
    Dualpane => "dualpane",
    Externalquiz => "externalquiz",
    Folder => "folder",
    Forumng => "forumng",
    Glossary => "glossary",
    Homepage => "homepage",
    Htmlactivity => "htmlactivity",
    Collaborate => "collaborate",
    Content => "content",
    Illuminate => "illuminate",
    Wiki => "wiki",
    Page => "page",
    Questionnaire => "questionnaire",
    Quiz => "quiz",
    Repeatactivity => "repeatactivity",
    Resource => "resource",
    Sharedsubpage => "sharedsubpage",
    Subpage => "subpage",
    Url => "url",
}

impl ActivityKind {
    pub fn catalog_index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ActivityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    SocialScience,
    Stem,
}

impl Category {
    fn prefix(self) -> char {
        match self {
            Category::SocialScience => 'S',
            Category::Stem => 'T',
        }
    }

    fn course_count(self) -> u8 {
        match self {
            Category::SocialScience => 4,
            Category::Stem => 3,
        }
    }
}

/// (category, course, period) cell that records are partitioned by.
///
/// Courses are `S1`–`S4` for social science and `T1`–`T3` for STEM; periods
/// run 1 through 4. Renders as `S2-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubsetKey {
    category: Category,
    course: u8,
    period: u8,
}

impl SubsetKey {
    pub fn new(category: Category, course: u8, period: u8) -> Result<Self, DatasetError> {
        if course == 0 || course > category.course_count() || !(1..=4).contains(&period) {
            return Err(DatasetError::InvalidSubsetKey(format!(
                "{}{}-{}",
                category.prefix(),
                course,
                period
            )));
        }
        Ok(Self {
            category,
            course,
            period,
        })
    }

    pub fn category(&self) -> Category {
        self.category
    }

    /// Course label such as `S2` or `T3`.
    pub fn course(&self) -> String {
        format!("{}{}", self.category.prefix(), self.course)
    }

    pub fn period(&self) -> u8 {
        self.period
    }
}

impl fmt::Display for SubsetKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}-{}", self.category.prefix(), self.course, self.period)
    }
}

impl FromStr for SubsetKey {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || DatasetError::InvalidSubsetKey(s.to_string());
        let (course, period) = s.split_once('-').ok_or_else(bad)?;
        let mut chars = course.chars();
        let category = match chars.next() {
            Some('S') => Category::SocialScience,
            Some('T') => Category::Stem,
            _ => return Err(bad()),
        };
        let number: u8 = chars.as_str().parse().map_err(|_| bad())?;
        let period: u8 = period.parse().map_err(|_| bad())?;
        SubsetKey::new(category, number, period).map_err(|_| bad())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionRecord {
    pub learner_id: String,
    pub subset: SubsetKey,
    pub activity: ActivityKind,
    pub clicks: u64,
}

/// Maps CSV columns onto record fields for [`load_records`].
#[derive(Debug, Clone)]
pub struct RecordSchema {
    pub learner_column: String,
    pub activity_columns: Vec<(String, ActivityKind)>,
    pub subset: SubsetKey,
}

impl RecordSchema {
    /// Learner column named `learner_column`; every other header cell that
    /// names a catalog activity becomes an activity column.
    pub fn from_header(header: &[&str], learner_column: &str, subset: SubsetKey) -> Self {
        let activity_columns = header
            .iter()
            .filter(|name| name.trim() != learner_column)
            .filter_map(|name| {
                ActivityKind::from_str(name)
                    .ok()
                    .map(|kind| (name.trim().to_string(), kind))
            })
            .collect();
        Self {
            learner_column: learner_column.to_string(),
            activity_columns,
            subset,
        }
    }

    /// Reads the header of `path` and builds a schema from it.
    pub fn infer(path: &Path, learner_column: &str, subset: SubsetKey) -> Result<Self, DatasetError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)
            .map_err(from_csv)?;
        let header = reader.headers().map_err(from_csv)?.clone();
        let cells: Vec<&str> = header.iter().collect();
        Ok(Self::from_header(&cells, learner_column, subset))
    }
}

/// Reads a wide learner × activity CSV into one record per nonzero cell.
///
/// Rows are 1-based file lines (the header is line 1). Any unparsable click
/// cell aborts the load with its position.
pub fn load_records(path: &Path, schema: &RecordSchema) -> Result<Vec<InteractionRecord>, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(from_csv)?;
    let header = reader.headers().map_err(from_csv)?.clone();
    let position = |column: &str| -> Result<usize, DatasetError> {
        header
            .iter()
            .position(|h| h.trim() == column)
            .ok_or_else(|| DatasetError::MissingColumn {
                column: column.to_string(),
                row: 1,
            })
    };
    let learner_idx = position(&schema.learner_column)?;
    let activity_idx = schema
        .activity_columns
        .iter()
        .map(|(column, kind)| Ok((position(column)?, *kind)))
        .collect::<Result<Vec<_>, DatasetError>>()?;

    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(from_csv)?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let learner = row.get(learner_idx).unwrap_or_default().trim().to_string();
        for &(idx, activity) in &activity_idx {
            let cell = row.get(idx).unwrap_or_default().trim();
            let clicks: u64 = cell.parse().map_err(|_| DatasetError::Parse {
                row: line,
                column: idx + 1,
                name: header.get(idx).unwrap_or_default().to_string(),
                value: cell.to_string(),
            })?;
            if clicks > 0 {
                records.push(InteractionRecord {
                    learner_id: learner.clone(),
                    subset: schema.subset,
                    activity,
                    clicks,
                });
            }
        }
    }
    Ok(records)
}

pub fn partition(records: &[InteractionRecord]) -> BTreeMap<SubsetKey, Vec<InteractionRecord>> {
    let mut buckets: BTreeMap<SubsetKey, Vec<InteractionRecord>> = BTreeMap::new();
    for record in records {
        buckets.entry(record.subset).or_default().push(record.clone());
    }
    buckets
}

/// Learner-indexed feature matrix for one subset (or one synthetic dataset).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    id: String,
    subset: Option<SubsetKey>,
    feature_names: Vec<ActivityKind>,
    learners: Vec<String>,
    rows: Vec<Vec<f64>>,
    labels: Option<Vec<i64>>,
}

impl FeatureMatrix {
    pub fn new(
        id: impl Into<String>,
        feature_names: Vec<ActivityKind>,
        learners: Vec<String>,
        rows: Vec<Vec<f64>>,
        labels: Option<Vec<i64>>,
    ) -> Result<Self, DatasetError> {
        let unique: BTreeSet<_> = feature_names.iter().collect();
        if unique.len() != feature_names.len() {
            return Err(DatasetError::InvalidMatrix("duplicate feature names".into()));
        }
        if learners.len() != rows.len() {
            return Err(DatasetError::InvalidMatrix(format!(
                "{} learner ids for {} rows",
                learners.len(),
                rows.len()
            )));
        }
        if let Some(i) = rows.iter().position(|r| r.len() != feature_names.len()) {
            return Err(DatasetError::InvalidMatrix(format!(
                "row {i} has {} entries, expected {}",
                rows[i].len(),
                feature_names.len()
            )));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(DatasetError::InvalidMatrix("non-finite cell".into()));
        }
        if let Some(labels) = &labels {
            if labels.len() != rows.len() {
                return Err(DatasetError::InvalidMatrix(format!(
                    "{} labels for {} rows",
                    labels.len(),
                    rows.len()
                )));
            }
        }
        Ok(Self {
            id: id.into(),
            subset: None,
            feature_names,
            learners,
            rows,
            labels,
        })
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn with_subset(mut self, subset: SubsetKey) -> Self {
        self.subset = Some(subset);
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn subset(&self) -> Option<SubsetKey> {
        self.subset
    }

    pub fn feature_names(&self) -> &[ActivityKind] {
        &self.feature_names
    }

    pub fn learners(&self) -> &[String] {
        &self.learners
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn labels(&self) -> Option<&[i64]> {
        self.labels.as_deref()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    /// Keeps the given columns, in the given order.
    pub(crate) fn select_columns(&self, columns: &[usize]) -> Self {
        Self {
            id: self.id.clone(),
            subset: self.subset,
            feature_names: columns.iter().map(|&j| self.feature_names[j]).collect(),
            learners: self.learners.clone(),
            rows: self
                .rows
                .iter()
                .map(|r| columns.iter().map(|&j| r[j]).collect())
                .collect(),
            labels: self.labels.clone(),
        }
    }
}

/// Sums clicks per (learner, activity) for a single subset.
///
/// Rows follow first appearance of each learner; columns are the observed
/// activities in catalog order.
pub fn pivot(records: &[InteractionRecord]) -> Result<FeatureMatrix, DatasetError> {
    let first = records.first().ok_or(DatasetError::EmptySubset)?;
    if let Some(other) = records.iter().find(|r| r.subset != first.subset) {
        return Err(DatasetError::MixedSubsets(first.subset, other.subset));
    }
    let features: Vec<ActivityKind> = records
        .iter()
        .map(|r| r.activity)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let column_of: HashMap<ActivityKind, usize> = features.iter().enumerate().map(|(j, &a)| (a, j)).collect();

    let mut learners: Vec<String> = Vec::new();
    let mut row_of: HashMap<&str, usize> = HashMap::new();
    let mut counts: Vec<Vec<u64>> = Vec::new();
    for record in records {
        let row = *row_of.entry(record.learner_id.as_str()).or_insert_with(|| {
            learners.push(record.learner_id.clone());
            counts.push(vec![0; features.len()]);
            counts.len() - 1
        });
        counts[row][column_of[&record.activity]] += record.clicks;
    }
    let rows = counts
        .into_iter()
        .map(|r| r.into_iter().map(|c| c as f64).collect())
        .collect();
    Ok(FeatureMatrix::new(first.subset.to_string(), features, learners, rows, None)?.with_subset(first.subset))
}

/// Per-feature min-max scaling into `[0, 1]`; constant columns become 0.
pub fn normalize(matrix: &FeatureMatrix) -> FeatureMatrix {
    let mut out = matrix.clone();
    for j in 0..matrix.n_features() {
        let (lo, hi) = matrix
            .rows
            .iter()
            .map(|r| r[j])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        let span = hi - lo;
        for row in &mut out.rows {
            row[j] = if span > 0.0 { (row[j] - lo) / span } else { 0.0 };
        }
    }
    out
}

/// Shape of a labelled synthetic dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub cluster_count: usize,
    pub informative_features: usize,
    pub distractor_features: usize,
    pub points_per_cluster: usize,
    /// Per-coordinate variance of the Gaussian noise around each centroid.
    pub variance: f64,
    pub variance_range: (f64, f64),
    pub outlier_fraction: f64,
    /// Centroids are laid out on the diagonal between 0 and `span`.
    pub span: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            cluster_count: 4,
            informative_features: 8,
            distractor_features: 8,
            points_per_cluster: 500,
            variance: 0.35,
            variance_range: (0.3, 0.4),
            outlier_fraction: 0.0,
            span: 10.0,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), DatasetError> {
        let fail = |msg: String| Err(DatasetError::InvalidSpec(msg));
        if self.cluster_count == 0 {
            return fail("cluster_count must be positive".into());
        }
        if self.informative_features == 0 {
            return fail("informative_features must be positive".into());
        }
        if self.points_per_cluster == 0 {
            return fail("points_per_cluster must be positive".into());
        }
        let total = self.informative_features + self.distractor_features;
        if total > ActivityKind::ALL.len() {
            return fail(format!("{total} features exceed the 20-activity catalog"));
        }
        let (lo, hi) = self.variance_range;
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) {
            return fail(format!("variance range [{lo}, {hi}] is not a positive interval"));
        }
        if !(self.variance.is_finite() && self.variance >= lo && self.variance <= hi) {
            return fail(format!("variance {} outside [{lo}, {hi}]", self.variance));
        }
        if !(0.0..=0.2).contains(&self.outlier_fraction) {
            return fail(format!("outlier_fraction {} outside [0, 0.2]", self.outlier_fraction));
        }
        if !(self.span.is_finite() && self.span > 0.0) {
            return fail(format!("span {} must be positive", self.span));
        }
        Ok(())
    }

    pub fn feature_count(&self) -> usize {
        self.informative_features + self.distractor_features
    }

    /// Centroid of cluster `c` in informative coordinates (all equal).
    pub fn centroid_coordinate(&self, c: usize) -> f64 {
        if self.cluster_count == 1 {
            0.5 * self.span
        } else {
            c as f64 / (self.cluster_count - 1) as f64 * self.span
        }
    }
}

/// Which columns of [`generate_synthetic`]'s output carry cluster structure.
pub fn informative_columns(spec: &SyntheticSpec) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    column_roles(spec, &mut rng)
}

fn column_roles(spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut columns: Vec<usize> = (0..spec.feature_count()).collect();
    columns.shuffle(rng);
    let mut informative = columns[..spec.informative_features].to_vec();
    informative.sort_unstable();
    informative
}

/// Gaussian blobs along the all-equal diagonal plus label-independent
/// distractor columns and uniform outliers (label −1).
///
/// Columns are the first `feature_count` catalog activities; which of them
/// are informative is drawn from the seed (see [`informative_columns`]).
/// Rows are shuffled.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<FeatureMatrix, DatasetError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let d = spec.feature_count();
    let informative = column_roles(spec, &mut rng);
    let mut is_informative = vec![false; d];
    for &j in &informative {
        is_informative[j] = true;
    }
    let noise = Normal::new(0.0, spec.variance.sqrt()).map_err(|e| DatasetError::InvalidSpec(e.to_string()))?;

    let n = spec.cluster_count * spec.points_per_cluster;
    let mut points: Vec<(Vec<f64>, i64)> = Vec::with_capacity(n);
    for c in 0..spec.cluster_count {
        let center = spec.centroid_coordinate(c);
        for _ in 0..spec.points_per_cluster {
            let row = (0..d)
                .map(|j| {
                    if is_informative[j] {
                        center + noise.sample(&mut rng)
                    } else {
                        rng.random_range(0.0..spec.span)
                    }
                })
                .collect();
            points.push((row, c as i64));
        }
    }
    points.shuffle(&mut rng);

    let outliers = (spec.outlier_fraction * n as f64).round() as usize;
    if outliers > 0 {
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for (row, _) in &points {
            for j in 0..d {
                lo[j] = lo[j].min(row[j]);
                hi[j] = hi[j].max(row[j]);
            }
        }
        let mut picked = rand::seq::index::sample(&mut rng, n, outliers).into_vec();
        picked.sort_unstable();
        for i in picked {
            let row = (0..d)
                .map(|j| {
                    if hi[j] > lo[j] {
                        rng.random_range(lo[j]..hi[j])
                    } else {
                        lo[j]
                    }
                })
                .collect();
            points[i] = (row, -1);
        }
    }

    let learners = (0..n).map(|i| format!("u{i:05}")).collect();
    let (rows, labels): (Vec<_>, Vec<_>) = points.into_iter().unzip();
    FeatureMatrix::new(
        format!("synthetic-{}", spec.seed),
        ActivityKind::ALL[..d].to_vec(),
        learners,
        rows,
        Some(labels),
    )
}

fn format_cell(v: f64) -> String {
    // avoid "-0"
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v}")
    }
}

/// Writes `learner_id,<activity>...[,label]` with `\n` line endings.
///
/// Numbers use the shortest representation that round-trips, so integral
/// click counts come out as plain integers.
pub fn write_subset(matrix: &FeatureMatrix, path: &Path) -> Result<(), DatasetError> {
    let file = File::create(path)?;
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(file));
    let mut header: Vec<String> = vec!["learner_id".into()];
    header.extend(matrix.feature_names.iter().map(|a| a.name().to_string()));
    if matrix.labels.is_some() {
        header.push("label".into());
    }
    writer.write_record(&header).map_err(from_csv)?;
    for (i, row) in matrix.rows.iter().enumerate() {
        let mut record: Vec<String> = Vec::with_capacity(row.len() + 2);
        record.push(matrix.learners[i].clone());
        record.extend(row.iter().map(|&v| format_cell(v)));
        if let Some(labels) = &matrix.labels {
            record.push(labels[i].to_string());
        }
        writer.write_record(&record).map_err(from_csv)?;
    }
    let mut inner = writer.into_inner().map_err(|e| DatasetError::Io(e.into_error()))?;
    inner.flush()?;
    Ok(())
}

/// Reads a matrix CSV as written by [`write_subset`].
///
/// The matrix id is the file stem; stems shaped like `S2-1` also set the
/// subset key.
pub fn read_matrix(path: &Path) -> Result<FeatureMatrix, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(from_csv)?;
    let header = reader.headers().map_err(from_csv)?.clone();
    if header.len() < 2 {
        return Err(DatasetError::Malformed {
            row: 1,
            message: "header needs a learner column and at least one activity".into(),
        });
    }
    let has_label = header.iter().next_back().map(str::trim) == Some("label");
    let feature_end = if has_label { header.len() - 1 } else { header.len() };
    let features = header
        .iter()
        .take(feature_end)
        .skip(1)
        .map(ActivityKind::from_str)
        .collect::<Result<Vec<_>, _>>()?;

    let mut learners = Vec::new();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record.map_err(from_csv)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let parse_err = |idx: usize| DatasetError::Parse {
            row: line,
            column: idx + 1,
            name: header.get(idx).unwrap_or_default().to_string(),
            value: record.get(idx).unwrap_or_default().to_string(),
        };
        learners.push(record.get(0).unwrap_or_default().trim().to_string());
        let mut row = Vec::with_capacity(features.len());
        for idx in 1..feature_end {
            let v: f64 = record
                .get(idx)
                .unwrap_or_default()
                .trim()
                .parse()
                .map_err(|_| parse_err(idx))?;
            if !v.is_finite() {
                return Err(parse_err(idx));
            }
            row.push(v);
        }
        rows.push(row);
        if has_label {
            let idx = feature_end;
            labels.push(
                record
                    .get(idx)
                    .unwrap_or_default()
                    .trim()
                    .parse::<i64>()
                    .map_err(|_| parse_err(idx))?,
            );
        }
    }
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut matrix = FeatureMatrix::new(stem.clone(), features, learners, rows, has_label.then_some(labels))?;
    if let Ok(key) = SubsetKey::from_str(&stem) {
        matrix = matrix.with_subset(key);
    }
    Ok(matrix)
}

/// One (course, period) cell of the 22-subset benchmark layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CourseCell {
    pub key: SubsetKey,
    pub features: usize,
    pub rows: usize,
}

const COURSE_CELLS: [(&str, usize, usize); 22] = [
    ("S1-2", 4, 378),
    ("S1-4", 4, 357),
    ("S2-1", 10, 1527),
    ("S2-2", 10, 1870),
    ("S2-3", 10, 1294),
    ("S2-4", 10, 1921),
    ("S3-3", 9, 1681),
    ("S3-4", 9, 2302),
    ("S4-2", 7, 895),
    ("S4-3", 7, 773),
    ("S4-4", 7, 698),
    ("T1-1", 11, 1214),
    ("T1-2", 10, 1768),
    ("T1-3", 10, 1116),
    ("T1-4", 10, 1647),
    ("T2-2", 11, 964),
    ("T2-3", 11, 624),
    ("T2-4", 11, 1097),
    ("T3-1", 14, 1510),
    ("T3-2", 16, 2098),
    ("T3-3", 15, 1563),
    ("T3-4", 16, 2121),
];

/// Feature counts and learner counts of the 22 course/period subsets.
pub fn course_cells() -> Vec<CourseCell> {
    COURSE_CELLS
        .iter()
        .map(|&(key, features, rows)| CourseCell {
            key: key.parse().expect("static subset keys are valid"),
            features,
            rows,
        })
        .collect()
}

/// Synthetic specs mirroring [`course_cells`]: half the features (rounded
/// up) informative, the rest distractors, roughly the listed row count split
/// over `cluster_count` clusters, variance drawn from the default range.
pub fn course_cell_specs(seed: u64, cluster_count: usize, outlier_fraction: f64) -> Vec<(SubsetKey, SyntheticSpec)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    course_cells()
        .into_iter()
        .map(|cell| {
            let base = SyntheticSpec::default();
            let (lo, hi) = base.variance_range;
            let informative = cell.features.div_ceil(2);
            let spec = SyntheticSpec {
                cluster_count,
                informative_features: informative,
                distractor_features: cell.features - informative,
                points_per_cluster: (cell.rows / cluster_count.max(1)).max(1),
                variance: rng.random_range(lo..=hi),
                outlier_fraction,
                seed: rng.random(),
                ..base
            };
            (cell.key, spec)
        })
        .collect()
}
