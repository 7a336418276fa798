//! Reader for the SHREC'17 track on 3D hand gesture recognition.
//!
//! Expected layout under the dataset root:
//!
//! ```text
//! train_gestures.txt
//! test_gestures.txt
//! gesture_<g>/finger_<f>/subject_<s>/essai_<e>/skeletons_world.txt
//! ```
//!
//! Each index row holds seven integers: gesture, finger, subject, trial,
//! 14-class label, 28-class label, frame count. Each skeleton line is one
//! frame of 22 joints as 66 whitespace-separated world coordinates.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::dataset::{CanonicalDataset, Sample};
use crate::error::{Error, Result};
use crate::skeleton::SkeletonSequence;

pub const SHREC_JOINTS: usize = 22;
pub const SHREC_COORD_DIM: usize = 3;

pub const GESTURE_NAMES: [&str; 14] = [
    "Grab",
    "Tap",
    "Expand",
    "Pinch",
    "Rotation CW",
    "Rotation CCW",
    "Swipe Right",
    "Swipe Left",
    "Swipe Up",
    "Swipe Down",
    "Swipe X",
    "Swipe +",
    "Swipe V",
    "Shake",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelMode {
    Fourteen,
    TwentyEight,
}

impl LabelMode {
    pub fn num_classes(self) -> usize {
        match self {
            LabelMode::Fourteen => 14,
            LabelMode::TwentyEight => 28,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct IndexRow {
    gesture: u32,
    finger: u32,
    subject: u32,
    trial: u32,
    label14: u32,
    label28: u32,
    frames: usize,
    line: usize,
}

impl IndexRow {
    fn id(&self) -> String {
        format!("g{}_f{}_s{}_e{}", self.gesture, self.finger, self.subject, self.trial)
    }

    fn skeleton_path(&self, root: &Path) -> PathBuf {
        root.join(format!("gesture_{}", self.gesture))
            .join(format!("finger_{}", self.finger))
            .join(format!("subject_{}", self.subject))
            .join(format!("essai_{}", self.trial))
            .join("skeletons_world.txt")
    }

    fn raw_label(&self, mode: LabelMode) -> u32 {
        match mode {
            LabelMode::Fourteen => self.label14,
            LabelMode::TwentyEight => self.label28,
        }
    }
}

/// Parses the train and test splits. Labels become `raw - 1`, so both splits
/// share one label space of 14 or 28 classes. Samples keep index-file order.
pub fn parse_shrec(root: impl AsRef<Path>, mode: LabelMode) -> Result<(CanonicalDataset, CanonicalDataset)> {
    let root = root.as_ref();
    let train_rows = read_index(&root.join("train_gestures.txt"), mode)?;
    let test_rows = read_index(&root.join("test_gestures.txt"), mode)?;
    let names = label_names(mode, train_rows.iter().chain(&test_rows));
    let train = load_split(root, &train_rows, mode, names.clone())?;
    let test = load_split(root, &test_rows, mode, names)?;
    Ok((train, test))
}

fn read_index(path: &Path, mode: LabelMode) -> Result<Vec<IndexRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<u32> = line
            .split_whitespace()
            .map(|t| {
                t.parse::<u32>()
                    .map_err(|_| Error::parse(path, Some(line_no), format!("`{t}` is not a non-negative integer")))
            })
            .collect::<Result<_>>()?;
        let [gesture, finger, subject, trial, label14, label28, frames] = fields[..] else {
            return Err(Error::parse(
                path,
                Some(line_no),
                format!("expected 7 columns, found {}", fields.len()),
            ));
        };
        let row = IndexRow {
            gesture,
            finger,
            subject,
            trial,
            label14,
            label28,
            frames: frames as usize,
            line: line_no,
        };
        let raw = row.raw_label(mode);
        if raw == 0 || raw as usize > mode.num_classes() {
            return Err(Error::parse(
                path,
                Some(line_no),
                format!("label {raw} outside 1..={}", mode.num_classes()),
            ));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::parse(path, None, "index file lists no sequences"));
    }
    Ok(rows)
}

fn label_names<'a>(mode: LabelMode, rows: impl Iterator<Item = &'a IndexRow>) -> Vec<String> {
    match mode {
        LabelMode::Fourteen => GESTURE_NAMES.iter().map(|s| s.to_string()).collect(),
        LabelMode::TwentyEight => {
            // The 28-way label splits each gesture by finger count; name classes from the rows that use them.
            let mut seen = BTreeMap::new();
            for r in rows {
                seen.entry(r.label28).or_insert((r.gesture, r.finger));
            }
            (1..=28u32)
                .map(|raw| match seen.get(&raw) {
                    Some(&(g, f)) => {
                        let gesture = GESTURE_NAMES.get(g as usize - 1).copied().unwrap_or("Gesture");
                        let unit = if f == 1 { "finger" } else { "fingers" };
                        format!("{gesture} ({f} {unit})")
                    }
                    None => format!("label_{raw}"),
                })
                .collect()
        }
    }
}

fn load_split(root: &Path, rows: &[IndexRow], mode: LabelMode, names: Vec<String>) -> Result<CanonicalDataset> {
    let mut samples = Vec::with_capacity(rows.len());
    for row in rows {
        let path = row.skeleton_path(root);
        let sequence = read_skeleton_file(&path)?;
        if sequence.len() != row.frames {
            return Err(Error::parse(
                &path,
                None,
                format!(
                    "{} frames, index row {} says {}",
                    sequence.len(),
                    row.line,
                    row.frames
                ),
            ));
        }
        samples.push(Sample {
            id: row.id(),
            label: row.raw_label(mode) as usize - 1,
            sequence,
        });
    }
    CanonicalDataset::new(names, SHREC_JOINTS, SHREC_COORD_DIM, samples)
}

/// Reads one `skeletons_world.txt`: a frame per line, 66 coordinates each.
pub fn read_skeleton_file(path: &Path) -> Result<SkeletonSequence> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let width = SHREC_JOINTS * SHREC_COORD_DIM;
    let mut data = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let before = data.len();
        for tok in line.split_whitespace() {
            let v: f32 = tok
                .parse()
                .map_err(|_| Error::parse(path, Some(i + 1), format!("`{tok}` is not a number")))?;
            if !v.is_finite() {
                return Err(Error::parse(path, Some(i + 1), format!("non-finite coordinate `{tok}`")));
            }
            data.push(v);
        }
        let got = data.len() - before;
        if got != width {
            return Err(Error::parse(
                path,
                Some(i + 1),
                format!("expected {width} values ({SHREC_JOINTS} joints x {SHREC_COORD_DIM}), found {got}"),
            ));
        }
    }
    SkeletonSequence::new(SHREC_JOINTS, SHREC_COORD_DIM, data).map_err(|e| Error::parse(path, None, e.to_string()))
}
