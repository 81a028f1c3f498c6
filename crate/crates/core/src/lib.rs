//! Court-aware data preparation for instance-segmentation datasets of court sports.
//!
//! The crate is organised bottom-up:
//!
//! * [`raster`] holds the 8-bit image and binary mask types every other module works on.
//! * [`imgproc`] implements grayscale conversion, Gaussian blur, Canny edges,
//!   probabilistic Hough segments and convex hulls from scratch.
//! * [`court`] turns detected lines into a crop rectangle and splits it into an
//!   interior and a boundary band.
//! * [`coco`] parses, validates, serializes and geometrically transforms COCO datasets.
//! * [`augment`] assigns sub-identities, applies identity-conditioned style changes,
//!   GridMask, and location-constrained copy-paste.
//! * [`pipeline`] orchestrates a full run, writes outputs and computes crop statistics.

pub mod augment;
pub mod coco;
pub mod court;
pub mod error;
pub mod imgproc;
pub mod pipeline;
pub mod raster;
pub mod rng;

pub use error::{Error, Result};
pub use raster::{ImageBuffer, Mask};
pub use rng::Rng;
