//! Low-level image operators: grayscale, blur, gradients, Canny edges,
//! probabilistic Hough segments and convex hulls.
//!
//! Everything here is a pure function of its inputs.

mod canny;
mod filter;
mod hough;
mod hull;

pub use canny::{canny, CannyParams, EdgeMap};
pub use filter::{gaussian_blur, gaussian_kernel, sobel, to_grayscale, Gradients};
pub use hough::{hough_segments, HoughParams, LineSegment};
pub use hull::{convex_hull, hull_bbox, ConvexHull, Point};
