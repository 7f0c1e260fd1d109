//! Deterministic synthetic videos with exact ground truth.
//!
//! Objects are discs or rectangles moving over a smooth textured background.
//! During configured frame ranges an object's color is blended toward the
//! color of another class (and optionally smeared along its motion), which
//! makes a color-driven classifier waver between the two classes while the
//! ground truth keeps the true class.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::catalog::{ClassCatalog, BACKGROUND};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::label::LabelMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub frames: usize,
    pub width: usize,
    pub height: usize,
    /// Canonical color per class; entry 0 is the background base color.
    pub class_colors: Vec<[f64; 3]>,
    /// Optional class names, background first.
    #[serde(default)]
    pub class_names: Vec<String>,
    #[serde(default)]
    pub background: BackgroundSpec,
    #[serde(default)]
    pub noise_sigma: f64,
    pub objects: Vec<ObjectSpec>,
    #[serde(default)]
    pub ambiguity: Vec<AmbiguitySpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackgroundSpec {
    /// Peak deviation of the texture from the base color.
    pub texture_amplitude: f64,
    pub texture_seed: u64,
    /// Number of summed plane waves.
    pub waves: usize,
}

impl Default for BackgroundSpec {
    fn default() -> Self {
        Self {
            texture_amplitude: 0.05,
            texture_seed: 0,
            waves: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Shape {
    Disc { radius: f64 },
    Rectangle { width: f64, height: f64 },
}

impl Shape {
    fn half_extent(&self) -> [f64; 2] {
        match *self {
            Shape::Disc { radius } => [radius, radius],
            Shape::Rectangle { width, height } => [width / 2.0, height / 2.0],
        }
    }

    #[inline]
    fn contains(&self, dx: f64, dy: f64) -> bool {
        match *self {
            Shape::Disc { radius } => dx * dx + dy * dy <= radius * radius,
            Shape::Rectangle { width, height } => {
                dx.abs() <= width / 2.0 && dy.abs() <= height / 2.0
            }
        }
    }
}

/// An object whose center at frame `f` is
/// `start + velocity * f + amplitude * sin(2 pi f / period)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub class_id: u8,
    pub shape: Shape,
    /// Instance color; may differ from the class's canonical color.
    pub color: [f64; 3],
    pub start: [f64; 2],
    #[serde(default)]
    pub velocity: [f64; 2],
    #[serde(default)]
    pub oscillation_amplitude: [f64; 2],
    #[serde(default)]
    pub oscillation_period: f64,
}

impl ObjectSpec {
    pub fn center(&self, frame: usize) -> [f64; 2] {
        let f = frame as f64;
        let phase = if self.oscillation_period > 0.0 {
            libm::sin(2.0 * PI * f / self.oscillation_period)
        } else {
            0.0
        };
        [
            self.start[0] + self.velocity[0] * f + self.oscillation_amplitude[0] * phase,
            self.start[1] + self.velocity[1] * f + self.oscillation_amplitude[1] * phase,
        ]
    }
}

/// Frames `start..end` during which object `object` is rendered ambiguously.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmbiguitySpec {
    pub object: usize,
    pub start: usize,
    pub end: usize,
    pub confusable_class: u8,
    /// Blend weight of the confusable class color.
    pub lambda: f64,
    /// Box-blur length in pixels along the motion direction; 0 or 1 disables.
    #[serde(default)]
    pub motion_blur: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticVideo {
    pub frames: Vec<Image>,
    /// Ground truth for every frame.
    pub ground_truth: Vec<LabelMap>,
}

fn color_ok(c: &[f64; 3]) -> bool {
    c.iter().all(|v| (0.0..=1.0).contains(v))
}

impl SceneSpec {
    pub fn num_classes(&self) -> usize {
        self.class_colors.len()
    }

    /// Catalog from `class_names`, or generated names when none are given.
    pub fn catalog(&self) -> Result<ClassCatalog> {
        if self.class_names.is_empty() {
            let names = (0..self.num_classes()).map(|c| {
                if c == 0 {
                    String::from("background")
                } else {
                    alloc::format!("class{c}")
                }
            });
            ClassCatalog::new(names)
        } else {
            ClassCatalog::new(self.class_names.iter().cloned())
        }
    }

    /// Object classes that appear in the video.
    pub fn present_classes(&self) -> BTreeSet<u8> {
        self.objects.iter().map(|o| o.class_id).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::Invalid(msg));
        if self.frames == 0 || self.width == 0 || self.height == 0 {
            return invalid(alloc::format!(
                "scene needs at least one frame and pixel, got {} frames of {}x{}",
                self.frames,
                self.width,
                self.height
            ));
        }
        if self.class_colors.len() < 2 || self.class_colors.len() > 255 {
            return invalid(alloc::format!(
                "scene needs 2..=255 class colors, got {}",
                self.class_colors.len()
            ));
        }
        if !self.class_names.is_empty() && self.class_names.len() != self.class_colors.len() {
            return invalid("class_names and class_colors differ in length".into());
        }
        if let Some(c) = self.class_colors.iter().position(|c| !color_ok(c)) {
            return invalid(alloc::format!("class color {c} is outside [0, 1]"));
        }
        if !(self.noise_sigma >= 0.0) || !(self.background.texture_amplitude >= 0.0) {
            return invalid("noise sigma and texture amplitude must be >= 0".into());
        }
        for (i, obj) in self.objects.iter().enumerate() {
            if obj.class_id == BACKGROUND || obj.class_id as usize >= self.num_classes() {
                return invalid(alloc::format!(
                    "object {i} has invalid class {}",
                    obj.class_id
                ));
            }
            if !color_ok(&obj.color) {
                return invalid(alloc::format!("object {i} color is outside [0, 1]"));
            }
            let [hx, hy] = obj.shape.half_extent();
            if !(hx > 0.0 && hy > 0.0) {
                return invalid(alloc::format!("object {i} has an empty shape"));
            }
            for f in 0..self.frames {
                let [cx, cy] = obj.center(f);
                if cx - hx < 0.0
                    || cy - hy < 0.0
                    || cx + hx > (self.width - 1) as f64
                    || cy + hy > (self.height - 1) as f64
                {
                    return invalid(alloc::format!(
                        "object {i} leaves the frame at frame {f} (center {cx:.2}, {cy:.2})"
                    ));
                }
            }
        }
        for (i, amb) in self.ambiguity.iter().enumerate() {
            if amb.object >= self.objects.len() {
                return invalid(alloc::format!(
                    "ambiguity {i} refers to missing object {}",
                    amb.object
                ));
            }
            if amb.confusable_class as usize >= self.num_classes() {
                return invalid(alloc::format!("ambiguity {i} has invalid confusable class"));
            }
            if !(0.0..=1.0).contains(&amb.lambda) {
                return invalid(alloc::format!(
                    "ambiguity {i} lambda {} is outside [0, 1]",
                    amb.lambda
                ));
            }
            if amb.start > amb.end {
                return invalid(alloc::format!("ambiguity {i} has start after end"));
            }
        }
        Ok(())
    }

    /// Frames in which at least one object is ambiguous.
    pub fn ambiguous_frames(&self) -> BTreeSet<usize> {
        self.ambiguity
            .iter()
            .flat_map(|a| a.start..a.end.min(self.frames))
            .collect()
    }

    fn ambiguity_for(&self, object: usize, frame: usize) -> Option<&AmbiguitySpec> {
        self.ambiguity
            .iter()
            .find(|a| a.object == object && (a.start..a.end).contains(&frame))
    }
}

/// Class palette of [`SceneSpec::ambiguous_benchmark`]. "dog" is the
/// confusable look-alike of "cat" and never appears in the video.
pub const BENCHMARK_CLASSES: [&str; 4] = ["background", "cat", "dog", "bird"];
/// Sharpness that makes the nearest-color prototype model confident on
/// unambiguous benchmark frames.
pub const BENCHMARK_SHARPNESS: f64 = 40.0;
pub const BENCHMARK_COLORS: [[f64; 3]; 4] = [
    [0.35, 0.55, 0.35],
    [0.85, 0.2, 0.2],
    [0.75, 0.3, 0.48],
    [0.85, 0.75, 0.2],
];

impl SceneSpec {
    /// 90 frames of 128x128 with a moving "cat" disc that looks like a "dog"
    /// (`lambda` = 0.6) during two spans covering 36 to 44 frames, plus a
    /// drifting "bird" square that is never ambiguous. Geometry and spans vary
    /// with `seed`.
    pub fn ambiguous_benchmark(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (w, h, frames) = (128usize, 128usize, 90usize);
        let span = (frames - 1) as f64;

        let radius: f64 = rng.random_range(14.0..20.0);
        let speed: f64 = rng.random_range(0.3..0.8);
        let dir = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let slack = (w as f64 - 1.0) - 2.0 * radius - 4.0 - speed * span;
        let offset = radius + 2.0 + rng.random_range(0.0..slack.max(0.0) + f64::EPSILON);
        let start_x = if dir > 0.0 {
            offset
        } else {
            w as f64 - 1.0 - offset
        };
        let amp_y = rng.random_range(8.0..(h as f64 / 2.0 - radius - 3.0));
        let cat = ObjectSpec {
            class_id: 1,
            shape: Shape::Disc { radius },
            color: BENCHMARK_COLORS[1],
            start: [start_x, (h as f64 - 1.0) / 2.0],
            velocity: [dir * speed, 0.0],
            oscillation_amplitude: [0.0, amp_y],
            oscillation_period: rng.random_range(30.0..60.0),
        };

        let side: f64 = rng.random_range(10.0..16.0);
        let bird_y = if rng.random_bool(0.5) {
            side / 2.0 + 3.0
        } else {
            h as f64 - 4.0 - side / 2.0
        };
        let bird = ObjectSpec {
            class_id: 3,
            shape: Shape::Rectangle {
                width: side,
                height: side,
            },
            color: BENCHMARK_COLORS[3],
            start: [(w as f64 - 1.0) / 2.0, bird_y],
            velocity: [0.0, 0.0],
            oscillation_amplitude: [rng.random_range(10.0..40.0), 0.0],
            oscillation_period: rng.random_range(40.0..90.0),
        };

        let first_len = rng.random_range(18..=22);
        let second_len = rng.random_range(18..=22);
        let first_start = rng.random_range(5..=frames / 2 - first_len);
        let second_start = rng.random_range(frames / 2 + 2..=frames - second_len - 3);
        let ambiguity = [(first_start, first_len), (second_start, second_len)]
            .into_iter()
            .map(|(start, len)| AmbiguitySpec {
                object: 0,
                start,
                end: start + len,
                confusable_class: 2,
                lambda: 0.6,
                motion_blur: 0,
            })
            .collect();

        SceneSpec {
            frames,
            width: w,
            height: h,
            class_colors: BENCHMARK_COLORS.to_vec(),
            class_names: BENCHMARK_CLASSES.iter().map(|s| String::from(*s)).collect(),
            background: BackgroundSpec {
                texture_amplitude: 0.06,
                texture_seed: seed,
                waves: 4,
            },
            noise_sigma: 0.03,
            objects: alloc::vec![cat, bird],
            ambiguity,
        }
    }
}

struct Wave {
    kx: f64,
    ky: f64,
    phase: f64,
}

fn background_waves(spec: &BackgroundSpec) -> Vec<Wave> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.texture_seed);
    (0..spec.waves)
        .map(|_| Wave {
            kx: rng.random_range(-0.4..0.4),
            ky: rng.random_range(-0.4..0.4),
            phase: rng.random_range(0.0..2.0 * PI),
        })
        .collect()
}

/// Renders every frame and its ground truth. Output depends only on
/// `(spec, seed)`; `seed` drives the per-pixel noise.
pub fn generate_video(spec: &SceneSpec, seed: u64) -> Result<SyntheticVideo> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let waves = background_waves(&spec.background);
    let base = spec.class_colors[BACKGROUND as usize];

    let mut background = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let t = if waves.is_empty() {
                0.0
            } else {
                waves
                    .iter()
                    .map(|wv| libm::sin(wv.kx * x as f64 + wv.ky * y as f64 + wv.phase))
                    .sum::<f64>()
                    / waves.len() as f64
            };
            let d = spec.background.texture_amplitude * t;
            background.push([base[0] + d, base[1] + d, base[2] + d]);
        }
    }

    let noise = if spec.noise_sigma > 0.0 {
        Some(
            Normal::new(0.0, spec.noise_sigma)
                .map_err(|e| Error::Invalid(alloc::format!("noise: {e}")))?,
        )
    } else {
        None
    };

    let mut frames = Vec::with_capacity(spec.frames);
    let mut ground_truth = Vec::with_capacity(spec.frames);
    for f in 0..spec.frames {
        let mut pixels = background.clone();
        let mut gt = LabelMap::filled(w, h, BACKGROUND);
        for (o, obj) in spec.objects.iter().enumerate() {
            let center = obj.center(f);
            let amb = spec.ambiguity_for(o, f);
            let color = match amb {
                Some(a) => {
                    let target = spec.class_colors[a.confusable_class as usize];
                    core::array::from_fn(|c| (1.0 - a.lambda) * obj.color[c] + a.lambda * target[c])
                }
                None => obj.color,
            };
            let blur = amb.map_or(1, |a| a.motion_blur.max(1));
            let dir = unit(obj.velocity);
            for y in 0..h {
                for x in 0..w {
                    let (px, py) = (x as f64, y as f64);
                    if obj.shape.contains(px - center[0], py - center[1]) {
                        gt.set(x, y, obj.class_id);
                    }
                    let coverage = if blur == 1 {
                        f64::from(u8::from(obj.shape.contains(px - center[0], py - center[1])))
                    } else {
                        // Average over positions trailing the object along its motion.
                        (0..blur)
                            .filter(|&s| {
                                let back = s as f64;
                                obj.shape.contains(
                                    px - center[0] + dir[0] * back,
                                    py - center[1] + dir[1] * back,
                                )
                            })
                            .count() as f64
                            / blur as f64
                    };
                    if coverage > 0.0 {
                        let p = &mut pixels[y * w + x];
                        for c in 0..3 {
                            p[c] = (1.0 - coverage) * p[c] + coverage * color[c];
                        }
                    }
                }
            }
        }
        if let Some(noise) = &noise {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(f as u64);
            for p in &mut pixels {
                for v in p.iter_mut() {
                    *v += noise.sample(&mut rng);
                }
            }
        }
        for p in &mut pixels {
            for v in p.iter_mut() {
                *v = v.clamp(0.0, 1.0);
            }
        }
        frames.push(Image::new(w, h, pixels)?);
        ground_truth.push(gt);
    }
    Ok(SyntheticVideo {
        frames,
        ground_truth,
    })
}

fn unit(v: [f64; 2]) -> [f64; 2] {
    let n = libm::sqrt(v[0] * v[0] + v[1] * v[1]);
    if n > 0.0 {
        [v[0] / n, v[1] / n]
    } else {
        [1.0, 0.0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn disc_scene() -> SceneSpec {
        SceneSpec {
            frames: 4,
            width: 32,
            height: 24,
            class_colors: vec![[0.4, 0.6, 0.4], [0.9, 0.2, 0.2], [0.2, 0.3, 0.9]],
            class_names: Vec::new(),
            background: BackgroundSpec::default(),
            noise_sigma: 0.0,
            objects: vec![ObjectSpec {
                class_id: 1,
                shape: Shape::Disc { radius: 4.0 },
                color: [0.9, 0.2, 0.2],
                start: [10.0, 12.0],
                velocity: [0.0, 0.0],
                oscillation_amplitude: [0.0, 0.0],
                oscillation_period: 0.0,
            }],
            ambiguity: Vec::new(),
        }
    }

    #[test]
    fn static_scene_is_constant() {
        let video = generate_video(&disc_scene(), 3).unwrap();
        assert!(video.frames.windows(2).all(|p| p[0] == p[1]));
        assert!(video.ground_truth.windows(2).all(|p| p[0] == p[1]));
    }

    #[test]
    fn rendering_matches_ground_truth() {
        let spec = disc_scene();
        let video = generate_video(&spec, 0).unwrap();
        let img = &video.frames[0];
        for (i, &l) in video.ground_truth[0].as_slice().iter().enumerate() {
            let is_obj = img.pixels()[i] == [0.9, 0.2, 0.2];
            assert_eq!(l == 1, is_obj, "pixel {i}");
        }
    }

    #[test]
    fn ambiguity_changes_appearance_only() {
        let mut spec = disc_scene();
        let plain = generate_video(&spec, 0).unwrap();
        spec.ambiguity.push(AmbiguitySpec {
            object: 0,
            start: 1,
            end: 3,
            confusable_class: 2,
            lambda: 0.6,
            motion_blur: 0,
        });
        let amb = generate_video(&spec, 0).unwrap();
        assert_eq!(plain.ground_truth, amb.ground_truth);
        assert_eq!(plain.frames[0], amb.frames[0]);
        assert_ne!(plain.frames[1], amb.frames[1]);
        let center = amb.frames[1].get(10, 12);
        for c in 0..3 {
            let expected = 0.4 * [0.9, 0.2, 0.2][c] + 0.6 * [0.2, 0.3, 0.9][c];
            assert!((center[c] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn out_of_bounds_path_rejected() {
        let mut spec = disc_scene();
        spec.objects[0].velocity = [8.0, 0.0];
        assert!(matches!(generate_video(&spec, 0), Err(Error::Invalid(_))));
    }

    #[test]
    fn motion_blur_smears_along_velocity() {
        let mut spec = disc_scene();
        spec.objects[0].velocity = [1.0, 0.0];
        spec.ambiguity.push(AmbiguitySpec {
            object: 0,
            start: 0,
            end: 4,
            confusable_class: 2,
            lambda: 0.0,
            motion_blur: 4,
        });
        let video = generate_video(&spec, 0).unwrap();
        // Just behind the disc's trailing edge the color is partly the object's.
        let trail = video.frames[0].get(10 - 5, 12);
        let bg = generate_video(&disc_scene(), 0).unwrap().frames[0].get(10 - 5, 12);
        assert_ne!(trail, bg);
        assert!(video.ground_truth[0].get(10 - 5, 12) == BACKGROUND);
    }
}
