use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::image::Image;

/// Dense per-pixel displacement between two frames.
///
/// Backward flow: the vector at `(x, y)` of frame `f + 1` points to the
/// source position `(x + dx, y + dy)` in frame `f`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    width: usize,
    height: usize,
    vectors: Vec<[f64; 2]>,
}

impl FlowField {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self::uniform(width, height, [0.0, 0.0])
    }

    pub fn uniform(width: usize, height: usize, d: [f64; 2]) -> Self {
        Self {
            width,
            height,
            vectors: vec![d; width * height],
        }
    }

    pub fn new(width: usize, height: usize, vectors: Vec<[f64; 2]>) -> Result<Self> {
        if vectors.len() != width * height {
            return Err(Error::LengthMismatch {
                expected: width * height,
                found: vectors.len(),
            });
        }
        if let Some(i) = vectors
            .iter()
            .position(|v| !v[0].is_finite() || !v[1].is_finite())
        {
            return Err(Error::Invalid(alloc::format!(
                "flow vector {i} is not finite"
            )));
        }
        Ok(Self {
            width,
            height,
            vectors,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn vectors(&self) -> &[[f64; 2]] {
        &self.vectors
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [f64; 2] {
        self.vectors[y * self.width + x]
    }
}

const BLOCK: usize = 8;
const RADIUS: isize = 4;
const LEVELS: usize = 3;

/// Single-channel plane used by the block matcher.
struct Plane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Plane {
    #[inline]
    fn at(&self, x: isize, y: isize) -> f64 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.data[y * self.width + x]
    }

    /// 2x2 box downsample, edge-clamped for odd sizes.
    fn half(&self) -> Plane {
        let width = self.width.div_ceil(2);
        let height = self.height.div_ceil(2);
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height as isize {
            for x in 0..width as isize {
                let s = self.at(2 * x, 2 * y)
                    + self.at(2 * x + 1, 2 * y)
                    + self.at(2 * x, 2 * y + 1)
                    + self.at(2 * x + 1, 2 * y + 1);
                data.push(s / 4.0);
            }
        }
        Plane {
            width,
            height,
            data,
        }
    }
}

/// Integer displacement per block of one pyramid level.
struct BlockFlow {
    cols: usize,
    vectors: Vec<(isize, isize)>,
}

impl BlockFlow {
    fn at_pixel(&self, x: usize, y: usize) -> (isize, isize) {
        self.vectors[(y / BLOCK) * self.cols + x / BLOCK]
    }
}

/// Orders candidate displacements: lower cost first, then shorter, then by
/// `(dy, dx)`.
#[inline]
fn better(cost: f64, d: (isize, isize), best_cost: f64, best: (isize, isize)) -> bool {
    if cost != best_cost {
        return cost < best_cost;
    }
    let (n, bn) = (d.0 * d.0 + d.1 * d.1, best.0 * best.0 + best.1 * best.1);
    if n != bn {
        return n < bn;
    }
    (d.1, d.0) < (best.1, best.0)
}

fn match_level(source: &Plane, target: &Plane, coarse: Option<&BlockFlow>) -> BlockFlow {
    let cols = target.width.div_ceil(BLOCK);
    let rows = target.height.div_ceil(BLOCK);
    let mut vectors = Vec::with_capacity(cols * rows);
    for by in 0..rows {
        for bx in 0..cols {
            let x0 = bx * BLOCK;
            let y0 = by * BLOCK;
            let x1 = (x0 + BLOCK).min(target.width);
            let y1 = (y0 + BLOCK).min(target.height);
            let guess = match coarse {
                Some(c) => {
                    let (cx, cy) = ((x0 + x1) / 2 / 2, (y0 + y1) / 2 / 2);
                    let (dx, dy) = c.at_pixel(cx, cy);
                    (2 * dx, 2 * dy)
                }
                None => (0, 0),
            };
            let mut best = (0, 0);
            let mut best_cost = f64::INFINITY;
            // Search around the coarse guess and around zero, so a coarse
            // level fooled by aliasing cannot make things worse than a
            // single-level search.
            let centers: &[(isize, isize)] = if guess == (0, 0) {
                &[(0, 0)]
            } else {
                &[guess, (0, 0)]
            };
            for &center in centers {
                for sy in -RADIUS..=RADIUS {
                    for sx in -RADIUS..=RADIUS {
                        let d = (center.0 + sx, center.1 + sy);
                        let mut cost = 0.0;
                        for y in y0..y1 {
                            for x in x0..x1 {
                                let t = target.data[y * target.width + x];
                                cost += (t - source.at(x as isize + d.0, y as isize + d.1)).abs();
                            }
                        }
                        if better(cost, d, best_cost, best) {
                            best_cost = cost;
                            best = d;
                        }
                    }
                }
            }
            vectors.push(best);
        }
    }
    BlockFlow { cols, vectors }
}

/// Backward flow from `frame_b` to `frame_a` by coarse-to-fine block matching.
///
/// Three pyramid levels, 8x8 blocks, a +-4 pixel search around both the
/// upsampled coarser estimate and zero, sum of absolute luma differences. Ties go to the
/// smallest displacement, so identical or flat frames give zero flow.
pub fn estimate_flow(frame_a: &Image, frame_b: &Image) -> Result<FlowField> {
    if frame_a.dims() != frame_b.dims() {
        return Err(Error::DimensionMismatch {
            expected: frame_a.dims(),
            found: frame_b.dims(),
        });
    }
    let plane = |img: &Image| Plane {
        width: img.width(),
        height: img.height(),
        data: img.luminance(),
    };
    let mut sources = vec![plane(frame_a)];
    let mut targets = vec![plane(frame_b)];
    for _ in 1..LEVELS {
        let s = sources.last().unwrap().half();
        let t = targets.last().unwrap().half();
        sources.push(s);
        targets.push(t);
    }

    let mut flow: Option<BlockFlow> = None;
    for level in (0..LEVELS).rev() {
        flow = Some(match_level(&sources[level], &targets[level], flow.as_ref()));
    }
    let flow = flow.expect("at least one level");

    let (w, h) = frame_b.dims();
    let mut vectors = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let (dx, dy) = flow.at_pixel(x, y);
            vectors.push([dx as f64, dy as f64]);
        }
    }
    FlowField::new(w, h, vectors)
}
