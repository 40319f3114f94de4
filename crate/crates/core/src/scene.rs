//! Deterministic synthetic test scenes: piecewise-smooth grayscale images
//! with soft blobs, a few hard-edged shapes and a saturated highlight,
//! statistically similar to natural photographs for benchmarking purposes.

use crate::image::ImagePlane;
use crate::real::{rf, Real};
use crate::rng::Rng;

/// Build a `width` x `height` unit-range scene from a seed.
pub fn synthetic_scene<R: Real>(width: usize, height: usize, seed: u64) -> ImagePlane<R> {
    let mut rng = Rng::new(seed);
    let w = width as f64;
    let h = height as f64;

    // soft Gaussian blobs
    let blobs: Vec<(f64, f64, f64, f64)> = (0..8)
        .map(|_| {
            let cx = rng.next_f64() * w;
            let cy = rng.next_f64() * h;
            let radius = (0.08 + 0.17 * rng.next_f64()) * w.min(h);
            let amp = 0.6 * (rng.next_f64() - 0.35);
            (cx, cy, radius, amp)
        })
        .collect();

    // hard-edged rectangles
    let rects: Vec<(f64, f64, f64, f64, f64)> = (0..3)
        .map(|_| {
            let x0 = rng.next_f64() * 0.7 * w;
            let y0 = rng.next_f64() * 0.7 * h;
            let rw = (0.1 + 0.2 * rng.next_f64()) * w;
            let rh = (0.1 + 0.2 * rng.next_f64()) * h;
            let amp = 0.35 * (rng.next_f64() - 0.5);
            (x0, y0, rw, rh, amp)
        })
        .collect();

    // one strong highlight that saturates to exactly 1.0
    let hx = (0.2 + 0.6 * rng.next_f64()) * w;
    let hy = (0.2 + 0.6 * rng.next_f64()) * h;
    let hr = 0.12 * w.min(h);

    let phase_x = rng.next_f64() * std::f64::consts::TAU;
    let phase_y = rng.next_f64() * std::f64::consts::TAU;

    ImagePlane::from_fn(width, height, |xi, yi| {
        let x = xi as f64;
        let y = yi as f64;
        // smooth illumination gradient plus gentle low-frequency texture
        let mut v = 0.45 + 0.15 * (x / w) - 0.1 * (y / h)
            + 0.05 * (std::f64::consts::TAU * x / w + phase_x).sin()
            + 0.05 * (std::f64::consts::TAU * y / h + phase_y).cos();
        for &(cx, cy, r, a) in &blobs {
            let d2 = ((x - cx).powi(2) + (y - cy).powi(2)) / (r * r);
            v += a * (-d2).exp();
        }
        for &(x0, y0, rw, rh, a) in &rects {
            if x >= x0 && x < x0 + rw && y >= y0 && y < y0 + rh {
                v += a;
            }
        }
        let d2 = ((x - hx).powi(2) + (y - hy).powi(2)) / (hr * hr);
        v += 1.4 * (-d2).exp();
        rf::<R>(v.clamp(0.0, 1.0))
    })
}

/// Three correlated channels derived from one scene, for RGB tests.
pub fn synthetic_scene_rgb<R: Real>(
    width: usize,
    height: usize,
    seed: u64,
) -> [ImagePlane<R>; 3] {
    let base = synthetic_scene::<f64>(width, height, seed);
    let tint = synthetic_scene::<f64>(width, height, seed.wrapping_add(1));
    let make = |wa: f64, wb: f64| {
        ImagePlane::from_fn(width, height, |x, y| {
            rf::<R>((wa * base.get(x, y) + wb * tint.get(x, y)).clamp(0.0, 1.0))
        })
    };
    [make(0.9, 0.1), make(0.75, 0.25), make(0.6, 0.4)]
}
