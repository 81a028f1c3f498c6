#![allow(dead_code)]

use courtprior::coco::{Category, CocoAnnotation, CocoDataset, CocoImage, Segmentation};
use courtprior::pipeline::MemorySource;
use courtprior::{ImageBuffer, Rng};

pub type Seg = ((f64, f64), (f64, f64));

pub fn point_segment_distance(p: (f64, f64), s: Seg) -> f64 {
    let ((x0, y0), (x1, y1)) = s;
    let (dx, dy) = (x1 - x0, y1 - y0);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - x0) * dx + (p.1 - y0) * dy) / len2).clamp(0.0, 1.0)
    };
    ((p.0 - x0 - t * dx).powi(2) + (p.1 - y0 - t * dy).powi(2)).sqrt()
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

pub fn segments_distance(a: Seg, b: Seg) -> f64 {
    let straddles =
        |s: Seg, t: Seg| cross(s.0, s.1, t.0).signum() * cross(s.0, s.1, t.1).signum() < 0.0;
    if straddles(a, b) && straddles(b, a) {
        return 0.0;
    }
    [
        point_segment_distance(a.0, b),
        point_segment_distance(a.1, b),
        point_segment_distance(b.0, a),
        point_segment_distance(b.1, a),
    ]
    .into_iter()
    .fold(f64::INFINITY, f64::min)
}

pub const LINE_W: u32 = 480;
pub const LINE_H: u32 = 360;
const LINE_VALUE: f64 = 210.0;
const BACKGROUND: f64 = 50.0;
const NOISE: f64 = 6.0;
const STROKE_RADIUS: f64 = 2.5;

/// A gray image with `count` well-separated bright strokes and light noise.
/// Returns the image and the stroke centre lines.
pub fn line_image(count: usize, rng: &mut Rng) -> (ImageBuffer, Vec<Seg>) {
    let (w, h) = (LINE_W as f64, LINE_H as f64);
    let mut segs: Vec<Seg> = Vec::new();
    while segs.len() < count {
        let len = rng.uniform(120.0, 260.0);
        let angle = rng.uniform(0.0, std::f64::consts::PI);
        let (cx, cy) = (rng.uniform(30.0, w - 30.0), rng.uniform(30.0, h - 30.0));
        let (hx, hy) = (0.5 * len * angle.cos(), 0.5 * len * angle.sin());
        let s = ((cx - hx, cy - hy), (cx + hx, cy + hy));
        let inside =
            |p: (f64, f64)| p.0 >= 20.0 && p.0 <= w - 20.0 && p.1 >= 20.0 && p.1 <= h - 20.0;
        if inside(s.0) && inside(s.1) && segs.iter().all(|&t| segments_distance(s, t) >= 20.0) {
            segs.push(s);
        }
    }
    let mut data = Vec::with_capacity((LINE_W * LINE_H) as usize);
    for y in 0..LINE_H {
        for x in 0..LINE_W {
            let c = (x as f64 + 0.5, y as f64 + 0.5);
            let on = segs
                .iter()
                .any(|&s| point_segment_distance(c, s) <= STROKE_RADIUS);
            let base = if on { LINE_VALUE } else { BACKGROUND };
            data.push((base + rng.uniform(-NOISE, NOISE)).round() as u8);
        }
    }
    (
        ImageBuffer::from_raw(LINE_W, LINE_H, 1, data).unwrap(),
        segs,
    )
}

/// Angle between two undirected lines, in degrees.
pub fn angle_between(a: Seg, b: Seg) -> f64 {
    let t = |s: Seg| (s.1 .1 - s.0 .1).atan2(s.1 .0 - s.0 .0);
    let mut d = (t(a) - t(b)).abs().to_degrees() % 180.0;
    if d > 90.0 {
        d = 180.0 - d;
    }
    d
}

/// Endpoint error under the better of the two endpoint pairings.
pub fn endpoint_error(a: Seg, b: Seg) -> f64 {
    let d = |p: (f64, f64), q: (f64, f64)| ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt();
    let same = d(a.0, b.0).max(d(a.1, b.1));
    let swapped = d(a.0, b.1).max(d(a.1, b.0));
    same.min(swapped)
}

pub const COURT_W: u32 = 320;
pub const COURT_H: u32 = 200;

fn rect_polygon(x: f64, y: f64, w: f64, h: f64) -> Vec<f64> {
    vec![x, y, x + w, y, x + w, y + h, x, y + h]
}

fn annotation(id: u64, image_id: u64, category_id: u64, poly: Vec<f64>) -> CocoAnnotation {
    let mut a = CocoAnnotation {
        id,
        image_id,
        category_id,
        segmentation: Segmentation::Polygons(vec![poly]),
        bbox: [0.0; 4],
        area: 0.0,
        iscrowd: 0,
        sub_identity: None,
    };
    a.recompute_geometry().unwrap();
    a
}

/// Frames with a bright court floor on a dark surround, people drawn as
/// solid boxes and a ball as a diamond, with matching polygon annotations.
pub fn court_dataset(images: u64, seed: u64) -> (CocoDataset, MemorySource) {
    let mut rng = Rng::new(seed);
    let mut ds = CocoDataset {
        categories: vec![
            Category {
                id: 1,
                name: "person".into(),
            },
            Category {
                id: 2,
                name: "ball".into(),
            },
        ],
        ..CocoDataset::default()
    };
    let mut source = MemorySource::default();
    let mut next_ann = 1;
    for image_id in 1..=images {
        let (fx, fy) = (
            rng.range_inclusive(30, 60) as u32,
            rng.range_inclusive(30, 50) as u32,
        );
        let (fw, fh) = (
            rng.range_inclusive(200, 250) as u32,
            rng.range_inclusive(110, 140) as u32,
        );
        let floor = [200u8, 160, 110];
        let mut img = ImageBuffer::from_fn(COURT_W, COURT_H, |x, y| {
            if x >= fx && x < fx + fw && y >= fy && y < fy + fh {
                floor
            } else {
                [25, 30, 35]
            }
        })
        .unwrap();

        let mut shapes: Vec<(u64, Vec<f64>, [u8; 3])> = Vec::new();
        for k in 0..rng.range_inclusive(2, 4) {
            let (w, h) = (
                rng.range_inclusive(8, 14) as f64,
                rng.range_inclusive(20, 30) as f64,
            );
            let x = rng
                .uniform(fx as f64 + 5.0, (fx + fw) as f64 - w - 5.0)
                .round();
            let y = rng
                .uniform(fy as f64 + 5.0, (fy + fh) as f64 - h - 5.0)
                .round();
            let color = if k % 2 == 0 {
                [200, 30, 30]
            } else {
                [30, 30, 200]
            };
            shapes.push((1, rect_polygon(x, y, w, h), color));
        }
        // A person standing at the court edge, typically an official.
        let ox = rng.uniform(fx as f64, (fx + fw) as f64 - 12.0).round();
        shapes.push((
            1,
            rect_polygon(ox, (fy + fh) as f64 - 24.0, 10.0, 22.0),
            [20, 20, 20],
        ));
        let (bx, by) = (
            rng.uniform(fx as f64 + 20.0, (fx + fw) as f64 - 20.0)
                .round(),
            rng.uniform(fy as f64 + 20.0, (fy + fh) as f64 - 20.0)
                .round(),
        );
        shapes.push((
            2,
            vec![bx, by - 5.0, bx + 5.0, by, bx, by + 5.0, bx - 5.0, by],
            [240, 120, 0],
        ));

        for (category_id, poly, color) in shapes {
            let ann = annotation(next_ann, image_id, category_id, poly);
            next_ann += 1;
            let mask = ann.mask(COURT_W, COURT_H).unwrap();
            for y in 0..COURT_H {
                for x in 0..COURT_W {
                    if mask.get(x, y) {
                        img.pixel_mut(x, y).copy_from_slice(&color);
                    }
                }
            }
            ds.annotations.push(ann);
        }
        ds.images.push(CocoImage {
            id: image_id,
            file_name: format!("court{}/frame_{image_id:03}.png", image_id % 3),
            width: COURT_W,
            height: COURT_H,
        });
        source.0.insert(image_id, img);
    }
    (ds, source)
}
