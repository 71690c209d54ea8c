//! Golden scores for the frozen fixture set.
//!
//! `golden/scores.txt` holds the exact MOS and per-band NSIM bit patterns.
//! `golden/versions.txt` maps each conformance version to the sha256 of the
//! scores file it was produced with. Any score change must come with a new
//! `CONFORMANCE_VERSION`; regenerate with
//! `NSIMQ_BLESS=1 cargo test -p nsimq --test conformance`.

use std::path::PathBuf;

use nsimq::fixtures::golden_report;
use sha2::{Digest, Sha256};

fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn recorded_versions() -> Vec<(u32, String)> {
    let text = std::fs::read_to_string(golden_dir().join("versions.txt")).unwrap_or_default();
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| {
            let (v, d) = l.split_once(' ').expect("`<version> <sha256>`");
            (v.parse().expect("integer version"), d.trim().to_string())
        })
        .collect()
}

fn bless(report: &str) {
    let version = nsimq::conformance_version();
    let sum = digest(report);
    let versions = recorded_versions();
    if let Some((_, old)) = versions.iter().find(|(v, _)| *v == version) {
        assert_eq!(
            old, &sum,
            "scores changed but CONFORMANCE_VERSION is still {version}; bump it before blessing"
        );
    } else {
        let mut text =
            std::fs::read_to_string(golden_dir().join("versions.txt")).unwrap_or_default();
        text.push_str(&format!("{version} {sum}\n"));
        std::fs::write(golden_dir().join("versions.txt"), text).unwrap();
    }
    std::fs::write(golden_dir().join("scores.txt"), report).unwrap();
}

#[test]
fn golden_scores_match_bit_exactly() {
    let report = golden_report().unwrap();
    if std::env::var_os("NSIMQ_BLESS").is_some() {
        bless(&report);
        return;
    }
    let stored = std::fs::read_to_string(golden_dir().join("scores.txt"))
        .expect("golden scores present; run with NSIMQ_BLESS=1 to create them");
    for (want, got) in stored.lines().zip(report.lines()) {
        assert_eq!(got, want, "golden mismatch");
    }
    assert_eq!(stored.lines().count(), report.lines().count());
    assert_eq!(stored, report);
}

#[test]
fn conformance_version_matches_recorded_digest() {
    if std::env::var_os("NSIMQ_BLESS").is_some() {
        return;
    }
    let version = nsimq::conformance_version();
    let stored = std::fs::read_to_string(golden_dir().join("scores.txt")).unwrap();
    assert!(stored.starts_with(&format!("conformance_version {version}\n")));
    let versions = recorded_versions();
    let (_, want) = versions
        .iter()
        .find(|(v, _)| *v == version)
        .unwrap_or_else(|| panic!("no digest recorded for conformance version {version}"));
    assert_eq!(
        &digest(&stored),
        want,
        "golden scores were regenerated without bumping CONFORMANCE_VERSION"
    );
    // Versions only move forward.
    let mut sorted = versions.iter().map(|(v, _)| *v).collect::<Vec<_>>();
    sorted.dedup();
    assert!(sorted.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(sorted.last(), Some(&version));
}

#[test]
fn golden_set_is_large_enough() {
    assert!(nsimq::fixtures::golden_cases().unwrap().len() >= 12);
}
