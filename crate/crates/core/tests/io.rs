mod common;

use common::{frame_line, write_shrec, TEST, TRAIN};

use std::fs;

use ddnet::io::{
    decode_canonical, decode_weights, encode_canonical, encode_weights, load_canonical, load_weights, parse_shrec,
    read_skeleton_file, save_canonical, save_weights, CanonicalDataset, LabelMode, Sample,
};
use ddnet::synthetic::pose_classes;
use ddnet::{DdNet, Error, ModelConfig, SkeletonSequence};
use sha2::{Digest, Sha256};

fn tiny_dataset() -> CanonicalDataset {
    let seq = SkeletonSequence::new(2, 2, vec![0.0, 1.0, -2.5, 3.0, 0.5, 0.25, 8.0, -1.0]).unwrap();
    let samples = vec![Sample { id: "a".into(), label: 1, sequence: seq }];
    CanonicalDataset::new(vec!["x".into(), "yz".into()], 2, 2, samples).unwrap()
}

fn le(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

#[test]
fn canonical_bytes_follow_the_documented_layout() {
    let mut want = b"SKEL".to_vec();
    // version, joints, dim, classes, then the first name's length
    for v in [1, 2, 2, 2, 1] {
        le(&mut want, v);
    }
    want.extend_from_slice(b"x");
    le(&mut want, 2);
    want.extend_from_slice(b"yz");
    le(&mut want, 1);
    le(&mut want, 1);
    want.extend_from_slice(b"a");
    le(&mut want, 1);
    le(&mut want, 2);
    for v in [0.0f32, 1.0, -2.5, 3.0, 0.5, 0.25, 8.0, -1.0] {
        want.extend_from_slice(&v.to_le_bytes());
    }
    let digest = Sha256::digest(&want);
    want.extend_from_slice(&digest);

    assert_eq!(encode_canonical(&tiny_dataset()).unwrap(), want);
    assert_eq!(decode_canonical(&want).unwrap(), tiny_dataset());
}

#[test]
fn canonical_round_trip_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    for (d, seed) in [(2, 1), (3, 2)] {
        let data = pose_classes(3, 4, 15, d, 17, seed).unwrap();
        let path = dir.path().join(format!("d{d}.skel"));
        save_canonical(&data, &path).unwrap();
        assert_eq!(load_canonical(&path).unwrap(), data);
        assert_eq!(encode_canonical(&data).unwrap(), fs::read(&path).unwrap());
    }
}

#[test]
fn canonical_rejects_damage() {
    let bytes = encode_canonical(&tiny_dataset()).unwrap();
    let mut flipped = bytes.clone();
    flipped[30] ^= 0x10;
    assert!(matches!(decode_canonical(&flipped), Err(Error::Corrupt(_))));
    assert!(matches!(decode_canonical(&bytes[..bytes.len() - 1]), Err(Error::Corrupt(_))));
    assert!(matches!(decode_canonical(&bytes[..6]), Err(Error::Corrupt(_))));
    assert!(matches!(decode_canonical(b""), Err(Error::Corrupt(_))));

    let mut future = bytes.clone();
    future[4] = 2;
    assert!(matches!(decode_canonical(&future), Err(Error::Version { found: 2, expected: 1 })));
}

/// Re-seals a payload whose checksum is valid but whose content is not.
fn reseal(mut body: Vec<u8>) -> Vec<u8> {
    let digest = Sha256::digest(&body);
    body.extend_from_slice(&digest);
    body
}

#[test]
fn canonical_enforces_dataset_invariants() {
    let bytes = encode_canonical(&tiny_dataset()).unwrap();
    let body = &bytes[..bytes.len() - 32];
    // The sample label is the u32 just after the one-byte id.
    let label_at = 4 + 4 * 4 + 4 + 1 + 4 + 2 + 4 + 4 + 1;
    assert_eq!(u32::from_le_bytes(body[label_at..label_at + 4].try_into().unwrap()), 1);
    let mut bad = body.to_vec();
    bad[label_at] = 7;
    assert!(matches!(decode_canonical(&reseal(bad)), Err(Error::InvalidInput(_))));

    let mut trailing = body.to_vec();
    trailing.push(0);
    assert!(matches!(decode_canonical(&reseal(trailing)), Err(Error::Corrupt(_))));
}

#[test]
fn weights_round_trip_exactly() {
    let cfg = ModelConfig::new(5, 2, 3).with_filters(4).with_streams(ddnet::Streams::JCD_ONLY);
    let mut m = DdNet::new(cfg.clone(), 4).unwrap();
    common::converge_running_stats(&mut m, 4);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.ddnw");
    save_weights(&m, &path).unwrap();
    let back = load_weights(&path).unwrap();
    assert_eq!(back.config(), &cfg);
    assert!(m.params().zip(back.params()).all(|((a, x), (b, y))| a == b && x == y));
    assert!(m.running_stats().zip(back.running_stats()).all(|((a, x), (b, y))| a == b && x == y));
    let x = common::random_inputs(&cfg, 2, 0).cast::<f32>();
    assert_eq!(m.logits(&x).unwrap().data(), back.logits(&x).unwrap().data());
    assert_eq!(encode_weights(&back).unwrap(), fs::read(&path).unwrap());
}

#[test]
fn weights_reject_other_files_and_versions() {
    let m = DdNet::new(ModelConfig::new(5, 2, 3).with_filters(2), 0).unwrap();
    let bytes = encode_weights(&m).unwrap();
    assert!(matches!(decode_weights(&encode_canonical(&tiny_dataset()).unwrap()), Err(Error::Corrupt(_))));
    let mut future = bytes.clone();
    future[4] = 9;
    assert!(matches!(decode_weights(&future), Err(Error::Version { found: 9, .. })));
    let mut flipped = bytes.clone();
    let mid = bytes.len() / 2;
    flipped[mid] ^= 1;
    assert!(matches!(decode_weights(&flipped), Err(Error::Corrupt(_))));
}

#[test]
fn weights_with_an_invalid_config_are_incompatible() {
    let m = DdNet::new(ModelConfig::new(5, 2, 3).with_filters(2), 0).unwrap();
    let bytes = encode_weights(&m).unwrap();
    let mut body = bytes[..bytes.len() - 32].to_vec();
    // coord_dim is the third config integer.
    body[16..20].copy_from_slice(&4u32.to_le_bytes());
    assert!(matches!(decode_weights(&reseal(body)), Err(Error::Incompatible(_))));
}

#[test]
fn missing_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let err = load_weights(dir.path().join("absent.ddnw")).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert!(err.to_string().contains("absent.ddnw"));
}

#[test]
fn reads_a_two_frame_skeleton_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("skeletons_world.txt");
    fs::write(&path, format!("{}\n{}\n", frame_line(0), frame_line(1))).unwrap();
    let seq = read_skeleton_file(&path).unwrap();
    assert_eq!((seq.len(), seq.num_joints(), seq.coord_dim()), (2, 22, 3));
    let want: Vec<f32> = (0..132).map(|v| v as f32 * 0.5).collect();
    assert_eq!(seq.as_slice(), want.as_slice());
    assert_eq!(seq.frame(1)[0], 33.0);
}

#[test]
fn parses_a_shrec_tree() {
    let dir = tempfile::tempdir().unwrap();
    write_shrec(dir.path(), &TRAIN, &TEST);
    let (train, test) = parse_shrec(dir.path(), LabelMode::Fourteen).unwrap();
    let ids: Vec<&str> = train.samples().iter().map(|s| s.id.as_str()).collect();
    assert_eq!(ids, ["g3_f2_s1_e1", "g1_f1_s2_e1", "g14_f2_s3_e2"]);
    let labels: Vec<usize> = train.samples().iter().map(|s| s.label).collect();
    assert_eq!(labels, [2, 0, 13]);
    assert_eq!(train.samples()[0].sequence.len(), 4);
    assert_eq!(train.num_classes(), 14);
    assert_eq!(train.label_names()[0], "Grab");
    assert_eq!(train.label_names()[13], "Shake");
    assert_eq!((test.len(), test.samples()[0].label), (1, 1));
    assert_eq!(parse_shrec(dir.path(), LabelMode::Fourteen).unwrap(), (train, test));

    let (train28, test28) = parse_shrec(dir.path(), LabelMode::TwentyEight).unwrap();
    let labels: Vec<usize> = train28.samples().iter().map(|s| s.label).collect();
    assert_eq!(labels, [5, 0, 27]);
    assert_eq!(train28.num_classes(), 28);
    assert_eq!(train28.label_names()[5], "Expand (2 fingers)");
    assert_eq!(train28.label_names()[0], "Grab (1 finger)");
    assert_eq!(test28.samples()[0].label, 2);
}

#[test]
fn shrec_frame_count_must_match_the_index() {
    let dir = tempfile::tempdir().unwrap();
    let mut rows = TRAIN;
    rows[1][6] = 6;
    write_shrec(dir.path(), &TRAIN, &TEST);
    fs::write(dir.path().join("train_gestures.txt"), rows.map(|r| r.map(|v| v.to_string()).join(" ")).join("\n")).unwrap();
    let err = parse_shrec(dir.path(), LabelMode::Fourteen).unwrap_err();
    assert!(matches!(err, Error::Parse { .. }));
    assert!(err.to_string().contains("index row 2"), "{err}");
}

#[test]
fn shrec_parse_errors_carry_locations() {
    let dir = tempfile::tempdir().unwrap();
    write_shrec(dir.path(), &TRAIN, &TEST);
    let file = dir.path().join("gesture_1/finger_1/subject_2/essai_1/skeletons_world.txt");
    let mut lines: Vec<String> = (0..5).map(frame_line).collect();
    lines[2] = lines[2].replacen("66", "6x6", 1);
    fs::write(&file, lines.join("\n")).unwrap();
    match parse_shrec(dir.path(), LabelMode::Fourteen).unwrap_err() {
        Error::Parse { path, line, msg } => {
            assert_eq!((path, line), (file.clone(), Some(3)));
            assert!(msg.contains("6x6"));
        }
        e => panic!("{e}"),
    }

    lines[2] = frame_line(2) + " 1.0";
    fs::write(&file, lines.join("\n")).unwrap();
    assert!(matches!(parse_shrec(dir.path(), LabelMode::Fourteen), Err(Error::Parse { line: Some(3), .. })));

    write_shrec(dir.path(), &TRAIN, &TEST);
    fs::write(dir.path().join("test_gestures.txt"), "2 1 1 3 0 3 2\n").unwrap();
    assert!(matches!(parse_shrec(dir.path(), LabelMode::Fourteen), Err(Error::Parse { line: Some(1), .. })));
    fs::write(dir.path().join("test_gestures.txt"), "2 1 1 3 2 3\n").unwrap();
    assert!(matches!(parse_shrec(dir.path(), LabelMode::Fourteen), Err(Error::Parse { line: Some(1), .. })));
    fs::remove_file(dir.path().join("test_gestures.txt")).unwrap();
    assert!(matches!(parse_shrec(dir.path(), LabelMode::Fourteen), Err(Error::Io { .. })));
}

#[test]
fn committed_fixtures_match_their_generators() {
    assert_eq!(load_canonical(common::fixture("tiny.skel")).unwrap(), tiny_dataset());

    let dir = tempfile::tempdir().unwrap();
    write_shrec(dir.path(), &TRAIN, &TEST);
    let generated = parse_shrec(dir.path(), LabelMode::Fourteen).unwrap();
    assert_eq!(parse_shrec(common::fixture("shrec"), LabelMode::Fourteen).unwrap(), generated);
}
