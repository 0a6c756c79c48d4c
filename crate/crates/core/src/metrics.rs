//! Silhouette masks, IoU, query efficiency and the episode score.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::render::{RasterImage, Rgb};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("image has no foreground pixel")]
    EmptyMask,
    #[error("both masks are empty")]
    EmptyUnion,
    #[error("mask sizes differ: {0:?} vs {1:?}")]
    DimensionMismatch((u32, u32), (u32, u32)),
}

/// Grayscale below 250 with weights 0.299 / 0.587 / 0.114, in exact
/// integer arithmetic (scaled by 1000).
pub fn is_foreground(c: Rgb) -> bool {
    let g = 299 * u32::from(c[0]) + 587 * u32::from(c[1]) + 114 * u32::from(c[2]);
    g < 250_000
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryMask {
    pub width: u32,
    pub height: u32,
    pub bits: Vec<bool>,
}

impl BinaryMask {
    pub fn empty(width: u32, height: u32) -> Self {
        BinaryMask {
            width,
            height,
            bits: vec![false; width as usize * height as usize],
        }
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, on: bool) {
        self.bits[y as usize * self.width as usize + x as usize] = on;
    }

    pub fn count(&self) -> u64 {
        self.bits.iter().filter(|b| **b).count() as u64
    }

    /// Black on white rendering of the mask.
    pub fn to_image(&self) -> RasterImage {
        let mut img = RasterImage::filled(self.width, self.height, [255, 255, 255]);
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    img.set(x, y, [0, 0, 0]);
                }
            }
        }
        img
    }
}

const NEIGHBORS_8: [(i64, i64); 8] = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];
const NEIGHBORS_4: [(i64, i64); 4] = [(0, -1), (-1, 0), (1, 0), (0, 1)];

/// Foreground threshold, then the largest 8-connected component with its
/// holes filled. Components are compared by filled area; ties keep the
/// first in raster order.
pub fn extract_mask(img: &RasterImage) -> Result<BinaryMask, MetricsError> {
    let (w, h) = (img.width as i64, img.height as i64);
    let idx = |x: i64, y: i64| (y * w + x) as usize;
    let fg: Vec<bool> = img
        .pixels
        .chunks_exact(3)
        .map(|p| is_foreground([p[0], p[1], p[2]]))
        .collect();

    let mut label = vec![u32::MAX; fg.len()];
    let mut best: Option<(u64, BinaryMask)> = None;
    let mut next = 0u32;
    for start in 0..fg.len() {
        if !fg[start] || label[start] != u32::MAX {
            continue;
        }
        let id = next;
        next += 1;
        let mut queue = VecDeque::from([start]);
        label[start] = id;
        let (mut x0, mut y0, mut x1, mut y1) = (w, h, -1, -1);
        while let Some(i) = queue.pop_front() {
            let (x, y) = (i as i64 % w, i as i64 / w);
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
            for (dx, dy) in NEIGHBORS_8 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w || ny >= h {
                    continue;
                }
                let j = idx(nx, ny);
                if fg[j] && label[j] == u32::MAX {
                    label[j] = id;
                    queue.push_back(j);
                }
            }
        }
        let filled = fill_component(&label, id, w, (x0, y0, x1, y1), img.width, img.height);
        let area = filled.count();
        if best.as_ref().is_none_or(|(a, _)| area > *a) {
            best = Some((area, filled));
        }
    }
    best.map(|(_, m)| m).ok_or(MetricsError::EmptyMask)
}

/// Component `id` plus everything it encloses: the complement of the
/// 4-connected region reachable from outside its bounding box.
fn fill_component(label: &[u32], id: u32, w: i64, bbox: (i64, i64, i64, i64), width: u32, height: u32) -> BinaryMask {
    let (x0, y0, x1, y1) = (bbox.0 - 1, bbox.1 - 1, bbox.2 + 1, bbox.3 + 1);
    let (bw, bh) = (x1 - x0 + 1, y1 - y0 + 1);
    let local = |x: i64, y: i64| ((y - y0) * bw + (x - x0)) as usize;
    let is_wall =
        |x: i64, y: i64| x >= 0 && y >= 0 && x < width as i64 && y < height as i64 && label[(y * w + x) as usize] == id;
    let mut outside = vec![false; (bw * bh) as usize];
    let mut queue = VecDeque::from([(x0, y0)]);
    outside[0] = true;
    while let Some((x, y)) = queue.pop_front() {
        for (dx, dy) in NEIGHBORS_4 {
            let (nx, ny) = (x + dx, y + dy);
            if nx < x0 || ny < y0 || nx > x1 || ny > y1 {
                continue;
            }
            let k = local(nx, ny);
            if !outside[k] && !is_wall(nx, ny) {
                outside[k] = true;
                queue.push_back((nx, ny));
            }
        }
    }
    let mut mask = BinaryMask::empty(width, height);
    for y in (y0 + 1)..y1 {
        for x in (x0 + 1)..x1 {
            if !outside[local(x, y)] {
                mask.set(x as u32, y as u32, true);
            }
        }
    }
    mask
}

/// Intersection and union pixel counts.
pub fn overlap_counts(a: &BinaryMask, b: &BinaryMask) -> Result<(u64, u64), MetricsError> {
    if (a.width, a.height) != (b.width, b.height) {
        return Err(MetricsError::DimensionMismatch(
            (a.width, a.height),
            (b.width, b.height),
        ));
    }
    let mut inter = 0;
    let mut union = 0;
    for (x, y) in a.bits.iter().zip(&b.bits) {
        inter += (*x && *y) as u64;
        union += (*x || *y) as u64;
    }
    Ok((inter, union))
}

pub fn iou(a: &BinaryMask, b: &BinaryMask) -> Result<f64, MetricsError> {
    let (inter, union) = overlap_counts(a, b)?;
    if union == 0 {
        return Err(MetricsError::EmptyUnion);
    }
    Ok(inter as f64 / union as f64)
}

/// IoU of the silhouettes of two renders.
pub fn image_iou(a: &RasterImage, b: &RasterImage) -> Result<f64, MetricsError> {
    iou(&extract_mask(a)?, &extract_mask(b)?)
}

/// Accepted over attempted steps; 0 when nothing was attempted.
pub fn query_efficiency(steps_valid: usize, steps_attempted: usize) -> f64 {
    if steps_attempted == 0 {
        0.0
    } else {
        steps_valid as f64 / steps_attempted as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeScore {
    pub qe: f64,
    pub gs: f64,
    /// Absent when no embedding scorer was reachable.
    pub ss: Option<f64>,
    pub steps_attempted: usize,
    pub steps_valid: usize,
    /// Accepted steps that changed the front silhouette.
    pub steps_reshaping: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block(w: u32, h: u32, x0: u32, y0: u32, bw: u32, bh: u32) -> BinaryMask {
        let mut m = BinaryMask::empty(w, h);
        for y in y0..y0 + bh {
            for x in x0..x0 + bw {
                m.set(x, y, true);
            }
        }
        m
    }

    #[test]
    fn threshold_probes() {
        assert!(!is_foreground([250, 250, 250]));
        assert!(is_foreground([249, 249, 249]));
        assert!(!is_foreground([255, 255, 255]));
        // 0.299 * 255 + 0.587 * 255 + 0.114 * 237 = 252.948
        assert!(!is_foreground([255, 255, 237]));
        // 0.299 * 240 + 0.587 * 250 + 0.114 * 255 = 247.58
        assert!(is_foreground([240, 250, 255]));
    }

    #[test]
    fn white_image_has_no_mask() {
        let img = RasterImage::filled(8, 8, [255, 255, 255]);
        assert_eq!(extract_mask(&img), Err(MetricsError::EmptyMask));
    }

    #[test]
    fn ring_is_filled() {
        let mut img = RasterImage::filled(20, 20, [255, 255, 255]);
        for y in 4..16 {
            for x in 4..16 {
                if x == 4 || x == 15 || y == 4 || y == 15 {
                    img.set(x, y, [0, 0, 0]);
                }
            }
        }
        let hollow = img.pixels.chunks_exact(3).filter(|p| p[0] == 0).count();
        assert_eq!(hollow, 44);
        let m = extract_mask(&img).unwrap();
        assert_eq!(m.count(), 144);
        assert_eq!(m, block(20, 20, 4, 4, 12, 12));
    }

    #[test]
    fn largest_component_wins() {
        let mut img = RasterImage::filled(30, 30, [255, 255, 255]);
        for y in 1..4 {
            for x in 1..4 {
                img.set(x, y, [0, 0, 0]);
            }
        }
        for y in 10..20 {
            for x in 10..20 {
                img.set(x, y, [10, 10, 10]);
            }
        }
        assert_eq!(extract_mask(&img).unwrap(), block(30, 30, 10, 10, 10, 10));
    }

    #[test]
    fn diagonal_pixels_join() {
        let mut img = RasterImage::filled(6, 6, [255, 255, 255]);
        img.set(1, 1, [0, 0, 0]);
        img.set(2, 2, [0, 0, 0]);
        img.set(3, 3, [0, 0, 0]);
        assert_eq!(extract_mask(&img).unwrap().count(), 3);
    }

    #[test]
    fn shifted_block_iou() {
        let a = block(40, 40, 10, 10, 10, 10);
        let b = block(40, 40, 15, 10, 10, 10);
        assert_eq!(overlap_counts(&a, &b).unwrap(), (50, 150));
        assert_eq!(iou(&a, &b).unwrap(), 50.0 / 150.0);
        assert_eq!(iou(&a, &a).unwrap(), 1.0);
        assert_eq!(iou(&a, &block(40, 40, 25, 25, 5, 5)).unwrap(), 0.0);
    }

    #[test]
    fn iou_errors() {
        let e = BinaryMask::empty(4, 4);
        assert_eq!(iou(&e, &e), Err(MetricsError::EmptyUnion));
        assert!(matches!(
            iou(&e, &BinaryMask::empty(4, 5)),
            Err(MetricsError::DimensionMismatch(..))
        ));
    }

    #[test]
    fn qe_cases() {
        assert_eq!(query_efficiency(10, 10), 1.0);
        assert_eq!(query_efficiency(7, 10), 0.7);
        assert_eq!(query_efficiency(0, 0), 0.0);
    }

    #[test]
    fn mask_of_mask_image_is_stable() {
        let mut m = block(32, 32, 3, 5, 20, 9);
        m.set(23, 14, true);
        let again = extract_mask(&m.to_image()).unwrap();
        assert_eq!(again, m);
    }
}
