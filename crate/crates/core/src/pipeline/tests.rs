use super::*;
use crate::augment::{PasteConfig, StyleRanges};
use crate::coco::{Category, Segmentation};
use crate::court::static_bounds;

fn record(id: u64, file: &str, w: u32, h: u32, rect: CropRect) -> ImageRecord {
    ImageRecord {
        source_id: id,
        source_file: file.into(),
        source_width: w,
        source_height: h,
        variant: 0,
        output_id: id,
        output_file: format!("{id}.png"),
        crop_rect: rect,
        crop_area_ratio: crop_area_ratio(rect, w, h),
        fallback: false,
        paste_count: 0,
        seed: 0,
        identity_counts: BTreeMap::new(),
    }
}

fn manifest(split: &str, records: Vec<ImageRecord>) -> RunManifest {
    let mut config = AugmentConfig::default();
    config.run.split = split.into();
    RunManifest {
        tool_version: TOOL_VERSION.into(),
        config,
        records,
        skipped: vec![],
    }
}

#[test]
fn ratio_examples() {
    let full = manifest(
        "train",
        vec![record(1, "a.png", 100, 50, CropRect::full(100, 50))],
    );
    assert_eq!(
        compute_stats(&[full], None).unwrap().groups[0].mean_crop_area_ratio,
        1.0
    );
    let half = manifest(
        "train",
        vec![record(1, "a.png", 100, 50, CropRect::new(25, 0, 50, 50))],
    );
    assert_eq!(
        compute_stats(&[half], None).unwrap().images[0].crop_area_ratio,
        0.5
    );
    assert!(compute_stats(&[manifest("train", vec![])], None).is_err());
    assert!(compute_stats(&[], None).is_err());
}

#[test]
fn group_means_match_hand_computation() {
    // Ten 100x100 images; image i keeps a (50 + 5i) x 100 strip.
    let records: Vec<_> = (0..10u64)
        .map(|i| {
            let court = if i < 4 { "courtA" } else { "courtB" };
            let mut r = record(
                i,
                &format!("{court}/f{i}.png"),
                100,
                100,
                CropRect::new(0, 0, 50 + 5 * i as u32, 100),
            );
            r.identity_counts.insert(Identity::Player, i);
            r
        })
        .collect();
    // Duplicated variants must not change the means.
    let mut doubled = records.clone();
    doubled.extend(records.iter().cloned().map(|mut r| {
        r.variant = 1;
        r
    }));
    let m = manifest("train", doubled);

    let by_split = compute_stats(std::slice::from_ref(&m), None).unwrap();
    assert_eq!(by_split.groups.len(), 1);
    let all: f64 = (0..10)
        .map(|i| (50.0 + 5.0 * i as f64) / 100.0)
        .sum::<f64>()
        / 10.0;
    assert_eq!(by_split.groups[0].mean_crop_area_ratio, all);
    assert_eq!(by_split.groups[0].images, 10);
    assert_eq!(by_split.groups[0].outputs, 20);
    assert_eq!(by_split.identity_counts[&Identity::Player], 2 * 45);

    let re = regex::Regex::new(r"^(court\w)/").unwrap();
    let by_court = compute_stats(&[m], Some(&re)).unwrap();
    let a: f64 = [0.50, 0.55, 0.60, 0.65].iter().sum::<f64>() / 4.0;
    let b: f64 = [0.70, 0.75, 0.80, 0.85, 0.90, 0.95].iter().sum::<f64>() / 6.0;
    let got: Vec<_> = by_court
        .groups
        .iter()
        .map(|g| (g.key.as_str(), g.mean_crop_area_ratio))
        .collect();
    assert_eq!(got, vec![("courtA", a), ("courtB", b)]);
    let text = by_court.to_text();
    assert!(text.contains("courtA") && text.contains("mean crop-area ratio"));
}

#[test]
fn splits_form_groups() {
    let train = manifest(
        "train",
        vec![record(1, "a.png", 10, 10, CropRect::new(0, 0, 5, 10))],
    );
    let val = manifest(
        "val",
        vec![record(1, "a.png", 10, 10, CropRect::full(10, 10))],
    );
    let r = compute_stats(&[train, val], None).unwrap();
    let keys: Vec<_> = r
        .groups
        .iter()
        .map(|g| (g.key.clone(), g.mean_crop_area_ratio))
        .collect();
    assert_eq!(keys, vec![("train".into(), 0.5), ("val".into(), 1.0)]);
}

fn box_ann(id: u64, image_id: u64, x: f64, y: f64, w: f64, h: f64) -> CocoAnnotation {
    CocoAnnotation {
        id,
        image_id,
        category_id: 1,
        segmentation: Segmentation::Polygons(vec![vec![x, y, x + w, y, x + w, y + h, x, y + h]]),
        bbox: [x, y, w, h],
        area: w * h,
        iscrowd: 0,
        sub_identity: None,
    }
}

fn blank_dataset() -> (CocoDataset, MemorySource) {
    let ds = CocoDataset {
        images: vec![
            CocoImage {
                id: 2,
                file_name: "b.png".into(),
                width: 150,
                height: 90,
            },
            CocoImage {
                id: 1,
                file_name: "a.png".into(),
                width: 150,
                height: 90,
            },
            CocoImage {
                id: 3,
                file_name: "missing.png".into(),
                width: 150,
                height: 90,
            },
        ],
        annotations: vec![
            box_ann(10, 1, 40.0, 30.0, 20.0, 30.0),
            box_ann(11, 2, 0.0, 0.0, 30.0, 30.0),
            box_ann(12, 2, 70.0, 40.0, 10.0, 20.0),
        ],
        categories: vec![Category {
            id: 1,
            name: "person".into(),
        }],
    };
    let mut src = MemorySource::default();
    for id in [1, 2] {
        src.0.insert(
            id,
            ImageBuffer::from_fn(150, 90, |x, y| [(x % 7) as u8, (y % 5) as u8, 3]).unwrap(),
        );
    }
    (ds, src)
}

#[test]
fn no_op_augmentation_is_a_pure_crop() {
    let (ds, src) = blank_dataset();
    let mut config = AugmentConfig::default();
    config.run.duplication_factor = 1;
    config.paste = PasteConfig {
        paste_min: 0,
        paste_max: 0,
        ..PasteConfig::default()
    };
    config.style = StyleRanges::none();
    let sink = MemorySink::default();
    let out = run_pipeline(&config, &ds, &src, &sink).unwrap();

    // Blank frames fall back to the static bounds.
    let rect = static_bounds(150, 90, &config.crop).unwrap().rect();
    assert_eq!(out.manifest.records.len(), 2);
    assert_eq!(out.manifest.skipped.len(), 1);
    assert_eq!(out.manifest.skipped[0].source_id, 3);
    let images = sink.into_inner();
    for r in &out.manifest.records {
        assert_eq!(r.crop_rect, rect);
        assert!(r.fallback);
        let src_img = src.0.get(&r.source_id).unwrap();
        assert_eq!(images[&r.output_file], crop_image(src_img, rect).unwrap());
    }
    // Records are ordered by source id even though the dataset is not.
    assert_eq!(out.manifest.records[0].source_id, 1);

    let expected: Vec<CocoAnnotation> = [10, 11, 12]
        .iter()
        .filter_map(|&id| {
            let a = ds.annotations.iter().find(|a| a.id == id).unwrap();
            transform_under_crop(a, rect, config.paste.min_area)
        })
        .collect();
    assert_eq!(out.dataset.annotations.len(), expected.len());
    for (got, want) in out.dataset.annotations.iter().zip(&expected) {
        assert_eq!(got.segmentation, want.segmentation);
        assert_eq!(got.bbox, want.bbox);
        assert_eq!(got.area, want.area);
        assert!(got.sub_identity.is_some());
    }
    assert!(validate_dataset(&out.dataset).is_empty());
}

#[test]
fn roi_export_round_trips() {
    let (ds, src) = blank_dataset();
    let config = AugmentConfig::default();
    let export = export_roi(&ds, &config, &src, &NullSink).unwrap();
    assert_eq!(export.rects.entries.len(), 2);
    let e = &export.rects.entries[0];
    assert!((e.crop_area_ratio - 130.0 * 70.0 / (150.0 * 90.0)).abs() < 1e-12);
    let back = project_back_dataset(&export.dataset, &export.rects).unwrap();
    let inside = back.annotations.iter().find(|a| a.id == 10).unwrap();
    assert_eq!(inside, ds.annotations.iter().find(|a| a.id == 10).unwrap());

    let preds = serde_json::json!([
        {"image_id": 1, "category_id": 1, "bbox": [1.0, 2.0, 3.0, 4.0], "score": 0.9,
         "segmentation": [[0.0, 0.0, 5.0, 0.0, 5.0, 5.0]]}
    ]);
    let out = project_back_predictions(preds, &export.rects).unwrap();
    let (dx, dy) = (e.rect.x as f64, e.rect.y as f64);
    assert_eq!(
        out[0]["bbox"],
        serde_json::json!([1.0 + dx, 2.0 + dy, 3.0, 4.0])
    );
    assert_eq!(out[0]["score"], serde_json::json!(0.9));
    assert_eq!(out[0]["segmentation"][0][2], serde_json::json!(5.0 + dx));
    let outside = serde_json::json!([{"image_id": 1, "bbox": [500.0, 0.0, 3.0, 4.0]}]);
    assert!(project_back_predictions(outside, &export.rects).is_err());
}

#[test]
fn validate_file_reports_findings() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ds.json");
    let (ds, _) = blank_dataset();
    std::fs::write(&path, serialize_coco(&ds).unwrap()).unwrap();
    assert!(validate_file(&path).unwrap().is_empty());

    let mut bad = ds.clone();
    bad.annotations[0].image_id = 99;
    std::fs::write(&path, serde_json::to_vec(&bad).unwrap()).unwrap();
    let f = validate_file(&path).unwrap();
    assert_eq!(
        (f[0].kind, f[0].annotation_id),
        (FindingKind::Reference, Some(10))
    );

    let mut odd = ds;
    odd.annotations[1].segmentation = Segmentation::Polygons(vec![vec![0.0; 7]]);
    std::fs::write(&path, serde_json::to_vec(&odd).unwrap()).unwrap();
    assert_eq!(validate_file(&path).unwrap()[0].kind, FindingKind::Schema);

    std::fs::write(&path, b"[1, 2").unwrap();
    assert_eq!(validate_file(&path).unwrap()[0].kind, FindingKind::Schema);
    assert!(validate_file(&dir.path().join("nope.json")).is_err());
}
