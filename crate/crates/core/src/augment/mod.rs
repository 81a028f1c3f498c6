//! Court-conditioned augmentation.
//!
//! Every person is labelled a player or an official from where its feet stand
//! relative to the court's interior and boundary band; balls form their own
//! class. Each class receives its own appearance transform, and copy-paste
//! only drops instances where that class plausibly appears.

mod paste;
mod style;

use serde::{Deserialize, Serialize};

use crate::coco::CocoAnnotation;
use crate::court::{CourtRegion, Zone};
use crate::error::{Error, Result};

pub use paste::{
    augment_image, extract_from_image, extract_instances, paste_instance, sample_paste_location,
    AugmentOutcome, Canvas, InstancePatch, PasteConfig, PastedInstance, MAX_PLACEMENT_ATTEMPTS,
};
pub use style::{
    apply_style, brightness, grid_mask, hue_shift, rgb_curve, salt_pepper, ChannelCurve,
    GridMaskConfig, RgbCurve, StyleParams, StyleRanges, GRID_FILL,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Identity {
    #[serde(rename = "player")]
    Player,
    /// Referees and coaches get identical treatment and are not told apart.
    #[serde(rename = "official")]
    RefereeOrCoach,
    #[serde(rename = "ball")]
    Ball,
}

impl Identity {
    pub const ALL: [Identity; 3] = [Identity::Player, Identity::RefereeOrCoach, Identity::Ball];

    /// Value of the `sub_identity` attribute on output annotations.
    pub fn as_str(self) -> &'static str {
        match self {
            Identity::Player => "player",
            Identity::RefereeOrCoach => "official",
            Identity::Ball => "ball",
        }
    }

    pub fn from_attr(s: &str) -> Option<Identity> {
        Identity::ALL.into_iter().find(|i| i.as_str() == s)
    }

    /// Zone where this identity's anchor must land when pasted.
    pub fn target_zone(self) -> Zone {
        match self {
            Identity::Player | Identity::Ball => Zone::Interior,
            Identity::RefereeOrCoach => Zone::Band,
        }
    }
}

/// Which category names count as people and which as balls.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CategoryMap {
    pub person: Vec<String>,
    pub ball: Vec<String>,
}

impl Default for CategoryMap {
    fn default() -> Self {
        CategoryMap {
            person: ["person", "player", "referee", "coach", "human"]
                .map(String::from)
                .to_vec(),
            ball: ["ball", "sports ball", "basketball"]
                .map(String::from)
                .to_vec(),
        }
    }
}

impl CategoryMap {
    fn matches(list: &[String], name: &str) -> bool {
        list.iter().any(|n| n.eq_ignore_ascii_case(name))
    }

    pub fn is_ball(&self, name: &str) -> bool {
        Self::matches(&self.ball, name)
    }

    pub fn is_person(&self, name: &str) -> bool {
        Self::matches(&self.person, name)
    }

    pub fn is_known(&self, name: &str) -> bool {
        self.is_ball(name) || self.is_person(name)
    }
}

/// Balls are always [`Identity::Ball`]; a person whose bbox bottom-centre lies
/// strictly inside the interior is a player, anywhere else an official.
pub fn assign_identity(
    ann: &CocoAnnotation,
    region: &CourtRegion,
    category_name: &str,
    categories: &CategoryMap,
) -> Result<Identity> {
    if categories.is_ball(category_name) {
        return Ok(Identity::Ball);
    }
    if !categories.is_person(category_name) {
        return Err(Error::UnknownCategory(category_name.to_string()));
    }
    let (ax, ay) = ann.anchor();
    Ok(match region.zone(ax, ay) {
        Zone::Interior => Identity::Player,
        Zone::Band | Zone::Outside => Identity::RefereeOrCoach,
    })
}
