//! Connected components of binary rasters.

use std::collections::VecDeque;

use crate::imgcore::Mask;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

impl Connectivity {
    pub(crate) fn offsets(self) -> &'static [(isize, isize)] {
        match self {
            Connectivity::Four => &[(1, 0), (-1, 0), (0, 1), (0, -1)],
            Connectivity::Eight => &[
                (1, 0),
                (-1, 0),
                (0, 1),
                (0, -1),
                (1, 1),
                (1, -1),
                (-1, 1),
                (-1, -1),
            ],
        }
    }
}

/// Pixels of one connected component, in breadth-first discovery order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub pixels: Vec<(usize, usize)>,
}

impl Component {
    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn centroid(&self) -> (f64, f64) {
        let n = self.pixels.len() as f64;
        let (sx, sy) = self
            .pixels
            .iter()
            .fold((0.0, 0.0), |(ax, ay), &(x, y)| (ax + x as f64, ay + y as f64));
        (sx / n, sy / n)
    }
}

#[inline]
pub(crate) fn neighbor(
    x: usize,
    y: usize,
    (dx, dy): (isize, isize),
    width: usize,
    height: usize,
) -> Option<(usize, usize)> {
    let nx = x as isize + dx;
    let ny = y as isize + dy;
    (nx >= 0 && ny >= 0 && (nx as usize) < width && (ny as usize) < height)
        .then_some((nx as usize, ny as usize))
}

/// All connected components, ordered by their first pixel in raster order.
pub fn components(mask: &Mask, connectivity: Connectivity) -> Vec<Component> {
    let (w, h) = (mask.width(), mask.height());
    let mut seen = vec![false; w * h];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if seen[start] || !mask.data()[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back((start % w, start / w));
        let mut pixels = Vec::new();
        while let Some((x, y)) = queue.pop_front() {
            pixels.push((x, y));
            for &off in connectivity.offsets() {
                if let Some((nx, ny)) = neighbor(x, y, off, w, h) {
                    let idx = ny * w + nx;
                    if !seen[idx] && mask.data()[idx] {
                        seen[idx] = true;
                        queue.push_back((nx, ny));
                    }
                }
            }
        }
        out.push(Component { pixels });
    }
    out
}

/// Largest component; ties go to the one found first.
pub fn largest_component(mask: &Mask, connectivity: Connectivity) -> Option<Component> {
    components(mask, connectivity)
        .into_iter()
        .reduce(|best, c| if c.len() > best.len() { c } else { best })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_pixels_connect_only_under_eight() {
        let mut m = Mask::new(4, 4).unwrap();
        m.set(0, 0, true);
        m.set(1, 1, true);
        m.set(3, 3, true);
        assert_eq!(components(&m, Connectivity::Eight).len(), 2);
        assert_eq!(components(&m, Connectivity::Four).len(), 3);
    }

    #[test]
    fn largest_wins() {
        let m = Mask::from_fn(10, 10, |x, y| (x < 3 && y < 3) || (x == 8 && y == 8)).unwrap();
        let c = largest_component(&m, Connectivity::Eight).unwrap();
        assert_eq!(c.len(), 9);
        assert_eq!(c.centroid(), (1.0, 1.0));
        assert!(largest_component(&Mask::new(3, 3).unwrap(), Connectivity::Eight).is_none());
    }
}
