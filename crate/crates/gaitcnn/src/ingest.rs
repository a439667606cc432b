//! Parsing of PhysioNet-style gait records, windowing into labeled 500x18
//! samples, per-window min-max normalization, and the on-disk dataset
//! container.
//!
//! Record files are whitespace-separated numeric text with 19 columns:
//! timestamp, 8 left-foot sensors, 8 right-foot sensors, total left GRF,
//! total right GRF. Filenames follow `<Group><Pt|Co><NN>_<MM>.txt`
//! (e.g. `GaPt03_01.txt`); files that do not follow the convention need an
//! explicit manifest entry.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{BufRead, Read, Write};
use std::path::Path;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const RECORD_COLUMNS: usize = 19;
pub const WINDOW_COLUMNS: usize = 18;
pub const DEFAULT_WINDOW_LEN: usize = 500;
const EXPECTED_RATE_HZ: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Group {
    Ga,
    Ju,
    Si,
}

impl Group {
    pub fn parse(s: &str) -> Option<Group> {
        match s {
            "Ga" => Some(Group::Ga),
            "Ju" => Some(Group::Ju),
            "Si" => Some(Group::Si),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Group::Ga => "Ga",
            Group::Ju => "Ju",
            Group::Si => "Si",
        }
    }

}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cohort {
    Patient,
    Control,
}

/// The four output classes, in one-hot encoding order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassLabel {
    Healthy,
    Pd2,
    Pd2_5,
    Pd3,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 4] = [
        ClassLabel::Healthy,
        ClassLabel::Pd2,
        ClassLabel::Pd2_5,
        ClassLabel::Pd3,
    ];

    pub fn index(&self) -> usize {
        match self {
            ClassLabel::Healthy => 0,
            ClassLabel::Pd2 => 1,
            ClassLabel::Pd2_5 => 2,
            ClassLabel::Pd3 => 3,
        }
    }

    pub fn from_index(i: usize) -> Option<ClassLabel> {
        ClassLabel::ALL.get(i).copied()
    }

    pub fn name(&self) -> &'static str {
        match self {
            ClassLabel::Healthy => "Healthy",
            ClassLabel::Pd2 => "PD2",
            ClassLabel::Pd2_5 => "PD2.5",
            ClassLabel::Pd3 => "PD3",
        }
    }

    pub fn one_hot(&self) -> [f64; 4] {
        let mut v = [0.0; 4];
        v[self.index()] = 1.0;
        v
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One parsed walking trial.
#[derive(Debug, Clone)]
pub struct GrfRecord {
    pub subject_id: String,
    pub group: Group,
    pub cohort: Cohort,
    pub trial: u32,
    /// T x 19: column 0 timestamps (s), 1-16 per-sensor forces (N),
    /// 17-18 total left/right GRF.
    pub frames: Tensor,
    pub sample_rate: f64,
}

/// One labeled 500x18 training sample cut from a record.
#[derive(Debug, Clone)]
pub struct GrfWindow {
    pub matrix: Tensor,
    pub label: ClassLabel,
    pub subject_id: String,
    pub window_index: u32,
    pub normalized: bool,
}

/// Identity parsed from a record filename like `GaPt03_01.txt`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordName {
    pub subject_id: String,
    pub group: Group,
    pub cohort: Cohort,
    pub trial: u32,
}

pub fn parse_record_name(name: &str) -> Option<RecordName> {
    let stem = name.strip_suffix(".txt").unwrap_or(name);
    let (subject, trial) = stem.split_once('_')?;
    if subject.len() < 5 {
        return None;
    }
    let group = Group::parse(&subject[0..2])?;
    let cohort = match &subject[2..4] {
        "Pt" => Cohort::Patient,
        "Co" => Cohort::Control,
        _ => return None,
    };
    subject[4..].parse::<u32>().ok()?;
    let trial = trial.parse::<u32>().ok()?;
    Some(RecordName {
        subject_id: subject.to_string(),
        group,
        cohort,
        trial,
    })
}

/// Parse a 19-column record. The filename supplies subject identity; a
/// non-conforming name must be resolved through a manifest before calling.
pub fn parse_record(reader: impl Read, name: &str) -> Result<GrfRecord> {
    let ident = parse_record_name(name).ok_or_else(|| {
        Error::Data(format!(
            "filename {name:?} does not follow <Group><Pt|Co><NN>_<MM>.txt; provide a manifest entry"
        ))
    })?;
    parse_record_with_identity(reader, name, ident)
}

pub fn parse_record_with_identity(
    reader: impl Read,
    name: &str,
    ident: RecordName,
) -> Result<GrfRecord> {
    let reader = std::io::BufReader::new(reader);
    let mut data: Vec<f64> = Vec::new();
    let mut rows = 0usize;
    for (line_no, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(name, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let start = data.len();
        for field in trimmed.split_whitespace() {
            let v: f64 = field.parse().map_err(|_| Error::Format {
                file: name.to_string(),
                line: line_no + 1,
                message: format!("unparseable value {field:?}"),
            })?;
            data.push(v);
        }
        let cols = data.len() - start;
        if cols != RECORD_COLUMNS {
            return Err(Error::Format {
                file: name.to_string(),
                line: line_no + 1,
                message: format!("expected {RECORD_COLUMNS} columns, got {cols}"),
            });
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::Format {
            file: name.to_string(),
            line: 0,
            message: "empty record".into(),
        });
    }
    // validate timestamps and forces
    let mut prev_t = f64::NEG_INFINITY;
    let mut deltas = Vec::with_capacity(rows.saturating_sub(1));
    for r in 0..rows {
        let row = &data[r * RECORD_COLUMNS..(r + 1) * RECORD_COLUMNS];
        let t = row[0];
        if !t.is_finite() || t <= prev_t {
            return Err(Error::Format {
                file: name.to_string(),
                line: r + 1,
                message: format!("non-monotonic timestamp {t}"),
            });
        }
        if prev_t.is_finite() {
            deltas.push(t - prev_t);
        }
        prev_t = t;
        for (c, &v) in row[1..].iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Format {
                    file: name.to_string(),
                    line: r + 1,
                    message: format!("invalid force {v} in column {}", c + 2),
                });
            }
        }
    }
    let sample_rate = if deltas.is_empty() {
        EXPECTED_RATE_HZ
    } else {
        deltas.sort_by(|a, b| a.partial_cmp(b).unwrap());
        1.0 / deltas[deltas.len() / 2]
    };
    let frames = Tensor::new(vec![rows, RECORD_COLUMNS], data)?;
    Ok(GrfRecord {
        subject_id: ident.subject_id,
        group: ident.group,
        cohort: ident.cohort,
        trial: ident.trial,
        frames,
        sample_rate,
    })
}

/// Linearly resample a record to 100 Hz if its inferred rate deviates by
/// more than 1%. Returns the record unchanged otherwise.
pub fn resample_to_100hz(record: GrfRecord) -> GrfRecord {
    if (record.sample_rate - EXPECTED_RATE_HZ).abs() / EXPECTED_RATE_HZ <= 0.01 {
        return record;
    }
    let rows = record.frames.shape()[0];
    let old = record.frames.data();
    let t0 = old[0];
    let t_end = old[(rows - 1) * RECORD_COLUMNS];
    let dt = 1.0 / EXPECTED_RATE_HZ;
    let new_rows = ((t_end - t0) / dt).floor() as usize + 1;
    let mut data = Vec::with_capacity(new_rows * RECORD_COLUMNS);
    let mut src = 0usize;
    for i in 0..new_rows {
        let t = t0 + i as f64 * dt;
        while src + 1 < rows - 1 && old[(src + 1) * RECORD_COLUMNS] < t {
            src += 1;
        }
        let ta = old[src * RECORD_COLUMNS];
        let tb = old[(src + 1) * RECORD_COLUMNS];
        let alpha = if tb > ta { ((t - ta) / (tb - ta)).clamp(0.0, 1.0) } else { 0.0 };
        data.push(t);
        for c in 1..RECORD_COLUMNS {
            let a = old[src * RECORD_COLUMNS + c];
            let b = old[(src + 1) * RECORD_COLUMNS + c];
            data.push(a + alpha * (b - a));
        }
    }
    GrfRecord {
        frames: Tensor::new(vec![new_rows, RECORD_COLUMNS], data).unwrap(),
        sample_rate: EXPECTED_RATE_HZ,
        ..record
    }
}

/// Demographics table mapping subjects to cohort and Hoehn & Yahr score.
#[derive(Debug, Clone, Default)]
pub struct Demographics {
    entries: BTreeMap<String, (Cohort, Option<f64>)>,
}

impl Demographics {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, subject_id: &str, cohort: Cohort, hoehn_yahr: Option<f64>) {
        self.entries
            .insert(subject_id.to_string(), (cohort, hoehn_yahr));
    }

    /// CSV with header columns subject_id, group, cohort, hoehn_yahr.
    pub fn from_csv(text: &str, name: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| Error::Format {
            file: name.to_string(),
            line: 0,
            message: "empty demographics file".into(),
        })?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        let idx = |want: &str| {
            cols.iter().position(|c| *c == want).ok_or_else(|| Error::Format {
                file: name.to_string(),
                line: 1,
                message: format!("missing column {want:?}"),
            })
        };
        let i_subject = idx("subject_id")?;
        let i_cohort = idx("cohort")?;
        let i_hy = idx("hoehn_yahr")?;
        let mut demo = Demographics::new();
        for (line_no, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != cols.len() {
                return Err(Error::Format {
                    file: name.to_string(),
                    line: line_no + 1,
                    message: format!("expected {} fields, got {}", cols.len(), fields.len()),
                });
            }
            let cohort = match fields[i_cohort].to_ascii_lowercase().as_str() {
                "patient" | "pt" => Cohort::Patient,
                "control" | "co" => Cohort::Control,
                other => {
                    return Err(Error::Format {
                        file: name.to_string(),
                        line: line_no + 1,
                        message: format!("unknown cohort {other:?}"),
                    })
                }
            };
            let hy = fields[i_hy];
            let hy = if hy.is_empty() {
                None
            } else {
                Some(hy.parse::<f64>().map_err(|_| Error::Format {
                    file: name.to_string(),
                    line: line_no + 1,
                    message: format!("unparseable hoehn_yahr {hy:?}"),
                })?)
            };
            demo.insert(fields[i_subject], cohort, hy);
        }
        Ok(demo)
    }

    pub fn lookup(&self, subject_id: &str) -> Option<(Cohort, Option<f64>)> {
        self.entries.get(subject_id).copied()
    }
}

/// Label a record: control -> Healthy, patient by Hoehn & Yahr score.
/// Scores outside {2, 2.5, 3} are rejected.
pub fn label_record(record: &GrfRecord, demographics: &Demographics) -> Result<ClassLabel> {
    let (cohort, score) = demographics
        .lookup(&record.subject_id)
        .ok_or_else(|| Error::Data(format!("subject {} missing from demographics", record.subject_id)))?;
    label_from(cohort, score)
}

pub fn label_from(cohort: Cohort, score: Option<f64>) -> Result<ClassLabel> {
    match cohort {
        Cohort::Control => Ok(ClassLabel::Healthy),
        Cohort::Patient => match score {
            Some(s) if s == 2.0 => Ok(ClassLabel::Pd2),
            Some(s) if s == 2.5 => Ok(ClassLabel::Pd2_5),
            Some(s) if s == 3.0 => Ok(ClassLabel::Pd3),
            Some(s) => Err(Error::Data(format!("unsupported Hoehn & Yahr stage {s}"))),
            None => Err(Error::Data("patient without Hoehn & Yahr score".into())),
        },
    }
}

/// Cut consecutive windows of `window_len` frames, dropping the timestamp
/// column and the trailing remainder. `overlap` frames of each window are
/// shared with the previous one (default 0).
pub fn window_record(
    record: &GrfRecord,
    label: ClassLabel,
    window_len: usize,
    overlap: usize,
) -> Result<Vec<GrfWindow>> {
    if window_len == 0 || overlap >= window_len {
        return Err(Error::Config(format!(
            "invalid windowing: len {window_len}, overlap {overlap}"
        )));
    }
    let t = record.frames.shape()[0];
    let step = window_len - overlap;
    let mut windows = Vec::new();
    let mut start = 0usize;
    let mut index = 0u32;
    while start + window_len <= t {
        let mut data = Vec::with_capacity(window_len * WINDOW_COLUMNS);
        for r in start..start + window_len {
            let row = &record.frames.data()[r * RECORD_COLUMNS..(r + 1) * RECORD_COLUMNS];
            data.extend_from_slice(&row[1..]);
        }
        windows.push(GrfWindow {
            matrix: Tensor::new(vec![window_len, WINDOW_COLUMNS], data)?,
            label,
            subject_id: record.subject_id.clone(),
            window_index: index,
            normalized: false,
        });
        start += step;
        index += 1;
    }
    Ok(windows)
}

/// Min-max normalize a window to [0,1] using the single global min and max
/// over all elements. A constant window maps to all zeros.
pub fn normalize_window(mut w: GrfWindow) -> Result<GrfWindow> {
    if w.normalized {
        return Err(Error::State("window already normalized".into()));
    }
    if !w.matrix.all_finite() {
        return Err(Error::Numeric("non-finite value in window".into()));
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in w.matrix.iter() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let span = hi - lo;
    for v in w.matrix.data_mut() {
        *v = if span > 0.0 { (*v - lo) / span } else { 0.0 };
    }
    w.normalized = true;
    Ok(w)
}

/// An assembled, normalized, deterministically ordered dataset.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub windows: Vec<GrfWindow>,
    pub source: String,
    pub digest: [u8; 32],
}

impl LabeledDataset {
    pub fn class_counts(&self) -> [u64; 4] {
        let mut counts = [0u64; 4];
        for w in &self.windows {
            counts[w.label.index()] += 1;
        }
        counts
    }

    /// Per-class count summary in the four-row table layout.
    pub fn summary_text(&self) -> String {
        let counts = self.class_counts();
        let mut s = String::new();
        s.push_str(&format!("{:<22} {:>17}\n", "Data class", "Number of samples"));
        for label in ClassLabel::ALL {
            s.push_str(&format!(
                "{:<22} {:>17}\n",
                format!("{} subjects", label.name()),
                counts[label.index()]
            ));
        }
        s.push_str(&format!("{:<22} {:>17}\n", "Total", self.windows.len()));
        s
    }

    pub fn summary_csv(&self) -> String {
        let counts = self.class_counts();
        let mut s = String::from("data_class,number_of_samples\n");
        for label in ClassLabel::ALL {
            s.push_str(&format!("{},{}\n", label.name(), counts[label.index()]));
        }
        s.push_str(&format!("total,{}\n", self.windows.len()));
        s
    }
}

/// Optional JSON manifest overriding labels for files outside the filename
/// convention: map of filename to subject/cohort/score.
#[derive(Debug, Clone, Deserialize)]
pub struct ManifestEntry {
    pub subject_id: String,
    pub group: String,
    pub cohort: String,
    #[serde(default)]
    pub hoehn_yahr: Option<f64>,
    #[serde(default = "default_trial")]
    pub trial: u32,
}

fn default_trial() -> u32 {
    1
}

pub type Manifest = BTreeMap<String, ManifestEntry>;

pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    serde_json::from_str(&text).map_err(|e| Error::Data(format!("bad manifest: {e}")))
}

fn manifest_identity(name: &str, entry: &ManifestEntry) -> Result<RecordName> {
    let group = Group::parse(&entry.group)
        .ok_or_else(|| Error::Data(format!("manifest {name}: unknown group {:?}", entry.group)))?;
    let cohort = match entry.cohort.to_ascii_lowercase().as_str() {
        "patient" | "pt" => Cohort::Patient,
        "control" | "co" => Cohort::Control,
        other => return Err(Error::Data(format!("manifest {name}: unknown cohort {other:?}"))),
    };
    Ok(RecordName {
        subject_id: entry.subject_id.clone(),
        group,
        cohort,
        trial: entry.trial,
    })
}

pub struct BuildOptions {
    pub window_len: usize,
    pub overlap: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            window_len: DEFAULT_WINDOW_LEN,
            overlap: 0,
        }
    }
}

/// Parse, label, window, and normalize every `.txt` record in a directory.
/// Ordering is lexicographic by filename, then window index, independent of
/// filesystem enumeration order. Per-file failures are reported as warnings;
/// the build fails only if no windows are produced at all.
pub fn build_dataset(
    data_dir: &Path,
    demographics: &Demographics,
    manifest: Option<&Manifest>,
    options: &BuildOptions,
    mut warn: impl FnMut(&str),
) -> Result<LabeledDataset> {
    let mut names: Vec<String> = Vec::new();
    let entries = fs::read_dir(data_dir).map_err(|e| Error::io(data_dir.display().to_string(), e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(data_dir.display().to_string(), e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.ends_with(".txt") {
            names.push(name);
        }
    }
    names.sort();

    let mut digest = Sha256::new();
    let mut windows = Vec::new();
    for name in &names {
        let path = data_dir.join(name);
        let result = (|| -> Result<Vec<GrfWindow>> {
            let file = fs::File::open(&path).map_err(|e| Error::io(path.display().to_string(), e))?;
            let ident = match manifest.and_then(|m| m.get(name)) {
                Some(entry) => manifest_identity(name, entry)?,
                None => parse_record_name(name).ok_or_else(|| {
                    Error::Data(format!(
                        "filename {name:?} does not follow the convention and has no manifest entry"
                    ))
                })?,
            };
            let record = parse_record_with_identity(file, name, ident)?;
            let record = resample_to_100hz(record);
            let label = label_record(&record, demographics)?;
            let ws = window_record(&record, label, options.window_len, options.overlap)?;
            if ws.is_empty() {
                warn(&format!(
                    "{name}: only {} frames, shorter than window length {}",
                    record.frames.shape()[0],
                    options.window_len
                ));
            }
            ws.into_iter().map(normalize_window).collect()
        })();
        match result {
            Ok(ws) => {
                digest.update(name.as_bytes());
                digest.update((ws.len() as u64).to_le_bytes());
                windows.extend(ws);
            }
            Err(e) => warn(&format!("{name}: {e}")),
        }
    }
    if windows.is_empty() {
        return Err(Error::Data("zero windows produced".into()));
    }
    Ok(LabeledDataset {
        windows,
        source: data_dir.display().to_string(),
        digest: digest.finalize().into(),
    })
}

// --- dataset container file ----------------------------------------------
//
// Layout: 8-byte magic "GRFDSET\0", version byte 0x01, u32 source length +
// UTF-8 source path, 32-byte digest, u32 window count, then per window:
// u32 subject length + UTF-8 subject id, u8 label, u32 window index,
// u32 rows, u32 cols, rows*cols f64 little-endian. All windows normalized.

const DATASET_MAGIC: &[u8; 8] = b"GRFDSET\0";
const DATASET_VERSION: u8 = 1;

pub fn write_dataset(ds: &LabeledDataset, path: &Path) -> Result<()> {
    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(DATASET_MAGIC);
    buf.push(DATASET_VERSION);
    let src = ds.source.as_bytes();
    buf.extend_from_slice(&(src.len() as u32).to_le_bytes());
    buf.extend_from_slice(src);
    buf.extend_from_slice(&ds.digest);
    buf.extend_from_slice(&(ds.windows.len() as u32).to_le_bytes());
    for w in &ds.windows {
        if !w.normalized {
            return Err(Error::State(format!(
                "window {}/{} not normalized",
                w.subject_id, w.window_index
            )));
        }
        let sid = w.subject_id.as_bytes();
        buf.extend_from_slice(&(sid.len() as u32).to_le_bytes());
        buf.extend_from_slice(sid);
        buf.push(w.label.index() as u8);
        buf.extend_from_slice(&w.window_index.to_le_bytes());
        let shape = w.matrix.shape();
        buf.extend_from_slice(&(shape[0] as u32).to_le_bytes());
        buf.extend_from_slice(&(shape[1] as u32).to_le_bytes());
        for v in w.matrix.iter() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    file.write_all(&buf).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
    path: &'a str,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Data(format!("truncated dataset file {}", self.path)));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
}

pub fn read_dataset(path: &Path) -> Result<LabeledDataset> {
    let buf = fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let path_str = path.display().to_string();
    let mut cur = Cursor { buf: &buf, pos: 0, path: &path_str };
    if cur.take(8)? != DATASET_MAGIC {
        return Err(Error::Data(format!("{path_str}: not a dataset file (bad magic)")));
    }
    let version = cur.u8()?;
    if version != DATASET_VERSION {
        return Err(Error::Data(format!(
            "{path_str}: unsupported dataset version {version}"
        )));
    }
    let src_len = cur.u32()? as usize;
    let source = String::from_utf8(cur.take(src_len)?.to_vec())
        .map_err(|_| Error::Data(format!("{path_str}: bad source string")))?;
    let digest: [u8; 32] = cur.take(32)?.try_into().unwrap();
    let count = cur.u32()? as usize;
    let mut windows = Vec::with_capacity(count);
    for _ in 0..count {
        let sid_len = cur.u32()? as usize;
        let subject_id = String::from_utf8(cur.take(sid_len)?.to_vec())
            .map_err(|_| Error::Data(format!("{path_str}: bad subject id")))?;
        let label = ClassLabel::from_index(cur.u8()? as usize)
            .ok_or_else(|| Error::Data(format!("{path_str}: bad label byte")))?;
        let window_index = cur.u32()?;
        let rows = cur.u32()? as usize;
        let cols = cur.u32()? as usize;
        let raw = cur.take(rows * cols * 8)?;
        let data: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        windows.push(GrfWindow {
            matrix: Tensor::new(vec![rows, cols], data)?,
            label,
            subject_id,
            window_index,
            normalized: true,
        });
    }
    Ok(LabeledDataset { windows, source, digest })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record_text(rows: usize) -> String {
        let mut s = String::new();
        for r in 0..rows {
            s.push_str(&format!("{:.2}", r as f64 * 0.01));
            for c in 0..18 {
                s.push_str(&format!("\t{:.1}", (r * 18 + c) as f64 % 97.0));
            }
            s.push('\n');
        }
        s
    }

    #[test]
    fn parse_valid_record() {
        let text = record_text(12119);
        let rec = parse_record(text.as_bytes(), "GaPt03_01.txt").unwrap();
        assert_eq!(rec.frames.shape(), &[12119, 19]);
        assert_eq!(rec.subject_id, "GaPt03");
        assert_eq!(rec.group, Group::Ga);
        assert_eq!(rec.cohort, Cohort::Patient);
        assert_eq!(rec.trial, 1);
        assert!((rec.sample_rate - 100.0).abs() < 1e-9);
    }

    #[test]
    fn parse_rejects_short_line() {
        let mut text = record_text(3);
        text.push_str("0.04\t1.0\t2.0\n");
        let err = parse_record(text.as_bytes(), "GaPt03_01.txt").unwrap_err();
        match err {
            Error::Format { line, .. } => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_rejects_nonmonotonic_timestamps() {
        let mut text = record_text(2);
        text.push_str(&record_text(1));
        assert!(parse_record(text.as_bytes(), "GaPt03_01.txt").is_err());
    }

    #[test]
    fn parse_rejects_bad_filename() {
        let text = record_text(5);
        assert!(parse_record(text.as_bytes(), "mystery.txt").is_err());
    }

    #[test]
    fn labeling_rules() {
        assert_eq!(label_from(Cohort::Control, None).unwrap(), ClassLabel::Healthy);
        assert_eq!(label_from(Cohort::Patient, Some(2.0)).unwrap(), ClassLabel::Pd2);
        assert_eq!(label_from(Cohort::Patient, Some(2.5)).unwrap(), ClassLabel::Pd2_5);
        assert_eq!(label_from(Cohort::Patient, Some(3.0)).unwrap(), ClassLabel::Pd3);
        assert!(label_from(Cohort::Patient, Some(4.0)).is_err());
        assert!(label_from(Cohort::Patient, None).is_err());
    }

    #[test]
    fn windowing_counts() {
        let rec = parse_record(record_text(12119).as_bytes(), "GaPt03_01.txt").unwrap();
        let ws = window_record(&rec, ClassLabel::Pd2, 500, 0).unwrap();
        assert_eq!(ws.len(), 24);
        assert_eq!(ws[0].matrix.shape(), &[500, 18]);
        assert_eq!(ws[23].window_index, 23);

        let rec = parse_record(record_text(500).as_bytes(), "GaPt03_01.txt").unwrap();
        assert_eq!(window_record(&rec, ClassLabel::Pd2, 500, 0).unwrap().len(), 1);

        let rec = parse_record(record_text(499).as_bytes(), "GaPt03_01.txt").unwrap();
        assert_eq!(window_record(&rec, ClassLabel::Pd2, 500, 0).unwrap().len(), 0);
    }

    #[test]
    fn window_extraction_exhaustive() {
        for t in [500usize, 777, 1500, 12119] {
            let rec = parse_record(record_text(t).as_bytes(), "GaCo05_02.txt").unwrap();
            let ws = window_record(&rec, ClassLabel::Healthy, 500, 0).unwrap();
            let remainder = t - ws.len() * 500;
            assert!(remainder < 500);
        }
    }

    #[test]
    fn normalization_contract() {
        let w = GrfWindow {
            matrix: Tensor::new(vec![1, 3], vec![2.0, 4.0, 6.0]).unwrap(),
            label: ClassLabel::Healthy,
            subject_id: "GaCo01".into(),
            window_index: 0,
            normalized: false,
        };
        let w = normalize_window(w).unwrap();
        assert_eq!(w.matrix.data(), &[0.0, 0.5, 1.0]);
        assert!(w.normalized);

        let w = GrfWindow {
            matrix: Tensor::filled(vec![2, 2], 7.0),
            label: ClassLabel::Healthy,
            subject_id: "GaCo01".into(),
            window_index: 0,
            normalized: false,
        };
        let w = normalize_window(w).unwrap();
        assert!(w.matrix.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn resample_slow_record() {
        // 50 Hz record resampled to 100 Hz doubles the frame density
        let mut text = String::new();
        for r in 0..100 {
            text.push_str(&format!("{:.2}", r as f64 * 0.02));
            for _ in 0..18 {
                text.push_str(&format!("\t{:.1}", r as f64));
            }
            text.push('\n');
        }
        let rec = parse_record(text.as_bytes(), "SiCo01_01.txt").unwrap();
        assert!((rec.sample_rate - 50.0).abs() < 1e-9);
        let rec = resample_to_100hz(rec);
        assert!((rec.sample_rate - 100.0).abs() < 1e-9);
        assert_eq!(rec.frames.shape()[0], 199);
        // midpoint interpolation: value at t=0.01 is between rows 0 and 1
        assert!((rec.frames.at(&[1, 1]) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn demographics_csv() {
        let csv = "subject_id,group,cohort,hoehn_yahr\nGaPt03,Ga,patient,2.5\nGaCo01,Ga,control,\n";
        let demo = Demographics::from_csv(csv, "demo.csv").unwrap();
        assert_eq!(demo.lookup("GaPt03"), Some((Cohort::Patient, Some(2.5))));
        assert_eq!(demo.lookup("GaCo01"), Some((Cohort::Control, None)));
        assert_eq!(demo.lookup("SiPt99"), None);
    }
}
