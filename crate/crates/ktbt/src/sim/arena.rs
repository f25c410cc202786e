//! The rectangular search space: four corner collection zones, one per
//! target color, and an optional fixed obstacle layout.

use crate::geom::{Rect, Vec2};

use super::TargetColor;

/// Zone side length as a fraction of the smaller arena dimension.
pub const ZONE_FRACTION: f64 = 0.15;

/// Obstacle layout when enabled, as fractions of the arena dimensions: four
/// square blocks placed symmetrically, clear of the corner zones.
const OBSTACLE_BLOCKS: [(f64, f64, f64, f64); 4] = [
    (0.30, 0.30, 0.40, 0.40),
    (0.60, 0.30, 0.70, 0.40),
    (0.30, 0.60, 0.40, 0.70),
    (0.60, 0.60, 0.70, 0.70),
];

#[derive(Debug, Clone)]
pub struct Arena {
    pub width: f64,
    pub height: f64,
    zones: [Rect; 4],
    pub obstacles: Vec<Rect>,
}

impl Arena {
    /// Builds an arena with zones in the four corners: red bottom-left,
    /// green bottom-right, yellow top-left, blue top-right.
    pub fn new(width: f64, height: f64, with_obstacles: bool) -> Arena {
        let side = width.min(height) * ZONE_FRACTION;
        let zones = [
            // Red
            Rect::new(Vec2::ZERO, Vec2::new(side, side)),
            // Green
            Rect::new(Vec2::new(width - side, 0.0), Vec2::new(width, side)),
            // Yellow
            Rect::new(Vec2::new(0.0, height - side), Vec2::new(side, height)),
            // Blue
            Rect::new(Vec2::new(width - side, height - side), Vec2::new(width, height)),
        ];
        let obstacles = if with_obstacles {
            OBSTACLE_BLOCKS
                .iter()
                .map(|&(x0, y0, x1, y1)| {
                    Rect::new(
                        Vec2::new(x0 * width, y0 * height),
                        Vec2::new(x1 * width, y1 * height),
                    )
                })
                .collect()
        } else {
            Vec::new()
        };
        Arena {
            width,
            height,
            zones,
            obstacles,
        }
    }

    pub fn zone(&self, color: TargetColor) -> &Rect {
        &self.zones[color.index()]
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.x >= 0.0 && p.x <= self.width && p.y >= 0.0 && p.y <= self.height
    }

    pub fn clamp(&self, p: Vec2) -> Vec2 {
        Vec2::new(p.x.clamp(0.0, self.width), p.y.clamp(0.0, self.height))
    }

    pub fn in_any_zone(&self, p: Vec2) -> bool {
        self.zones.iter().any(|z| z.contains(p))
    }

    pub fn in_obstacle(&self, p: Vec2) -> bool {
        self.obstacles.iter().any(|o| o.contains(p))
    }
}
