//! Times the full 640x480 baseline render on a centered spherical contact.

use std::time::Instant;

use tactsim_core::elastomer::DeformParams;
use tactsim_core::illumination::{render_tactile, IlluminationConfig};
use tactsim_core::imagecore::DepthMap;

fn main() {
    let (w, h) = (640, 480);
    let deform = DeformParams::default();
    let illum = IlluminationConfig::default();
    let r = illum.pixel_to_meter;
    let (radius, press) = (0.004, 0.001);
    let depth = DepthMap::from_fn(w, h, |x, y| {
        let dx = (x as f64 + 0.5 - w as f64 / 2.0) * r;
        let dy = (y as f64 + 0.5 - h as f64 / 2.0) * r;
        let q = radius * radius - dx * dx - dy * dy;
        if q > 0.0 {
            deform.d_max - press + radius - q.sqrt()
        } else {
            1.0
        }
    })
    .unwrap();
    render_tactile(&depth, &deform, &illum).unwrap();
    let runs = 10;
    let mut best = f64::INFINITY;
    for _ in 0..runs {
        let t = Instant::now();
        std::hint::black_box(render_tactile(&depth, &deform, &illum).unwrap());
        best = best.min(t.elapsed().as_secs_f64());
    }
    println!("best of {runs}: {:.1} ms", best * 1e3);
}
