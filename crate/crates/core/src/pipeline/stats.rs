use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{crop_area_ratio, RunManifest};
use crate::augment::Identity;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub key: String,
    pub images: usize,
    pub outputs: usize,
    /// Arithmetic mean of the member images' crop-area ratios.
    pub mean_crop_area_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRatio {
    pub group: String,
    pub source_id: u64,
    pub source_file: String,
    pub crop_area_ratio: f64,
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub groups: Vec<GroupStats>,
    pub images: Vec<ImageRatio>,
    pub identity_counts: BTreeMap<Identity, u64>,
    pub total_outputs: usize,
}

/// Crop-area statistics over one or more runs.
///
/// Each source image counts once however many variants it produced. Images
/// are grouped by the run's split label, or by `group_regex` applied to the
/// source file name (first capture group if any, else the whole match;
/// non-matching names fall back to the split label).
pub fn compute_stats(
    manifests: &[RunManifest],
    group_regex: Option<&Regex>,
) -> Result<StatsReport> {
    let total_outputs: usize = manifests.iter().map(|m| m.records.len()).sum();
    if total_outputs == 0 {
        return Err(Error::InvalidArgument("manifest has no records".into()));
    }
    let key_for = |split: &str, file: &str| -> String {
        group_regex
            .and_then(|re| re.captures(file))
            .and_then(|c| c.get(1).or_else(|| c.get(0)))
            .map_or_else(|| split.to_string(), |m| m.as_str().to_string())
    };

    let mut images = Vec::new();
    let mut seen = BTreeSet::new();
    let mut outputs: BTreeMap<String, usize> = BTreeMap::new();
    let mut identity_counts: BTreeMap<Identity, u64> = BTreeMap::new();
    for m in manifests {
        let split = &m.config.run.split;
        for r in &m.records {
            let group = key_for(split, &r.source_file);
            *outputs.entry(group.clone()).or_default() += 1;
            for (id, n) in &r.identity_counts {
                *identity_counts.entry(*id).or_default() += n;
            }
            if seen.insert((split.clone(), r.source_id)) {
                images.push(ImageRatio {
                    group,
                    source_id: r.source_id,
                    source_file: r.source_file.clone(),
                    crop_area_ratio: crop_area_ratio(r.crop_rect, r.source_width, r.source_height),
                    fallback: r.fallback,
                });
            }
        }
    }

    let mut sums: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for img in &images {
        let e = sums.entry(img.group.as_str()).or_default();
        e.0 += img.crop_area_ratio;
        e.1 += 1;
    }
    let groups = sums
        .into_iter()
        .map(|(key, (sum, n))| GroupStats {
            key: key.to_string(),
            images: n,
            outputs: outputs[key],
            mean_crop_area_ratio: sum / n as f64,
        })
        .collect();
    Ok(StatsReport {
        groups,
        images,
        identity_counts,
        total_outputs,
    })
}

impl StatsReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let width = self
            .groups
            .iter()
            .map(|g| g.key.len())
            .max()
            .unwrap_or(0)
            .max(5);
        let _ = writeln!(
            s,
            "{:<width$}  {:>7}  {:>8}  mean crop-area ratio",
            "group", "images", "outputs"
        );
        for g in &self.groups {
            let _ = writeln!(
                s,
                "{:<width$}  {:>7}  {:>8}  {:.2}%",
                g.key,
                g.images,
                g.outputs,
                100.0 * g.mean_crop_area_ratio
            );
        }
        let fallback = self.images.iter().filter(|i| i.fallback).count();
        let _ = writeln!(
            s,
            "static-bounds fallbacks: {fallback} of {} images",
            self.images.len()
        );
        let counts: Vec<String> = Identity::ALL
            .iter()
            .map(|id| {
                format!(
                    "{} {}",
                    id.as_str(),
                    self.identity_counts.get(id).copied().unwrap_or(0)
                )
            })
            .collect();
        let _ = writeln!(s, "identities: {}", counts.join(", "));
        s
    }
}
