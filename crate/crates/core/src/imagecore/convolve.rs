use rayon::prelude::*;

use super::kernel::Kernel2D;
use super::raster::HeightMap;

/// Rows handed to one rayon task. Output is identical for any split.
const ROWS_PER_TASK: usize = 16;

/// Reusable clamp-to-edge convolution over `width x height` row-major buffers.
///
/// Separable kernels run as a horizontal then a vertical pass; other kernels
/// fall back to the direct 2-D sum.
#[derive(Debug, Clone)]
pub struct Convolver {
    width: usize,
    height: usize,
    kernel: Kernel2D,
    // Flipped 1-D taps, so the inner loops read the input in increasing order.
    taps: Option<Vec<f64>>,
    scratch: Vec<f64>,
}

impl Convolver {
    pub fn new(width: usize, height: usize, kernel: &Kernel2D) -> Self {
        let taps = kernel
            .separable_factor()
            .map(|g| g.iter().rev().copied().collect::<Vec<_>>());
        let scratch = if taps.is_some() {
            vec![0.0; width * height]
        } else {
            Vec::new()
        };
        Self {
            width,
            height,
            kernel: kernel.clone(),
            taps,
            scratch,
        }
    }

    pub fn kernel(&self) -> &Kernel2D {
        &self.kernel
    }

    /// `dst = src * kernel`. Both slices must hold `width * height` samples.
    pub fn apply(&mut self, src: &[f64], dst: &mut [f64]) {
        let n = self.width * self.height;
        assert_eq!(src.len(), n, "source buffer has the wrong length");
        assert_eq!(dst.len(), n, "destination buffer has the wrong length");
        match &self.taps {
            Some(taps) => {
                horizontal_pass(self.width, taps, src, &mut self.scratch);
                vertical_pass(self.width, self.height, taps, &self.scratch, dst);
            }
            None => direct_2d(self.width, self.height, &self.kernel, src, dst),
        }
    }
}

fn horizontal_pass(width: usize, taps: &[f64], src: &[f64], dst: &mut [f64]) {
    let wide = simd_available();
    dst.par_chunks_mut(width * ROWS_PER_TASK)
        .zip(src.par_chunks(width * ROWS_PER_TASK))
        .for_each(|(out_rows, in_rows)| {
            #[cfg(target_arch = "x86_64")]
            if wide {
                // SAFETY: AVX2 support was checked at runtime.
                unsafe { horizontal_rows_avx2(width, taps, in_rows, out_rows) };
                return;
            }
            let _ = wide;
            horizontal_rows(width, taps, in_rows, out_rows);
        });
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn horizontal_rows_avx2(width: usize, taps: &[f64], src: &[f64], dst: &mut [f64]) {
    horizontal_rows(width, taps, src, dst);
}

#[inline(always)]
fn horizontal_rows(width: usize, taps: &[f64], src: &[f64], dst: &mut [f64]) {
    let r = taps.len() / 2;
    let symmetric = is_symmetric(taps);
    let mut padded = vec![0.0; width + 2 * r];
    for (out, row) in dst.chunks_exact_mut(width).zip(src.chunks_exact(width)) {
        padded[..r].fill(row[0]);
        padded[r..r + width].copy_from_slice(row);
        padded[r + width..].fill(row[width - 1]);
        if symmetric {
            let centre = taps[r];
            for (o, v) in out.iter_mut().zip(&padded[r..r + width]) {
                *o = centre * v;
            }
            for k in 1..=r {
                let w = taps[r + k];
                let lo = &padded[r - k..r - k + width];
                let hi = &padded[r + k..r + k + width];
                for ((o, a), b) in out.iter_mut().zip(lo).zip(hi) {
                    *o += w * (a + b);
                }
            }
        } else {
            out.fill(0.0);
            for (j, &w) in taps.iter().enumerate() {
                let window = &padded[j..j + width];
                for (o, v) in out.iter_mut().zip(window) {
                    *o += w * v;
                }
            }
        }
    }
}

fn vertical_pass(width: usize, height: usize, taps: &[f64], src: &[f64], dst: &mut [f64]) {
    let wide = simd_available();
    dst.par_chunks_mut(width * ROWS_PER_TASK)
        .enumerate()
        .for_each(|(chunk, out_rows)| {
            let first = chunk * ROWS_PER_TASK;
            #[cfg(target_arch = "x86_64")]
            if wide {
                // SAFETY: AVX2 support was checked at runtime.
                unsafe { vertical_rows_avx2(width, height, taps, src, first, out_rows) };
                return;
            }
            let _ = wide;
            vertical_rows(width, height, taps, src, first, out_rows);
        });
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn vertical_rows_avx2(
    width: usize,
    height: usize,
    taps: &[f64],
    src: &[f64],
    first_row: usize,
    dst: &mut [f64],
) {
    vertical_rows(width, height, taps, src, first_row, dst);
}

#[inline(always)]
fn vertical_rows(
    width: usize,
    height: usize,
    taps: &[f64],
    src: &[f64],
    first_row: usize,
    dst: &mut [f64],
) {
    let r = taps.len() as isize / 2;
    let last = height as isize - 1;
    let symmetric = is_symmetric(taps);
    let row_at = |y: isize| {
        let y = y.clamp(0, last) as usize;
        &src[y * width..(y + 1) * width]
    };
    for (i, out) in dst.chunks_exact_mut(width).enumerate() {
        let y = (first_row + i) as isize;
        if symmetric {
            let centre = taps[r as usize];
            for (o, v) in out.iter_mut().zip(row_at(y)) {
                *o = centre * v;
            }
            for k in 1..=r {
                let w = taps[(r + k) as usize];
                let (lo, hi) = (row_at(y - k), row_at(y + k));
                for ((o, a), b) in out.iter_mut().zip(lo).zip(hi) {
                    *o += w * (a + b);
                }
            }
        } else {
            out.fill(0.0);
            for (j, &w) in taps.iter().enumerate() {
                for (o, v) in out.iter_mut().zip(row_at(y + j as isize - r)) {
                    *o += w * v;
                }
            }
        }
    }
}

/// Wider vector units only change throughput: both paths issue the same
/// multiply and add sequence per sample (no fused multiply-add), so results
/// are bit-identical.
fn simd_available() -> bool {
    #[cfg(target_arch = "x86_64")]
    {
        std::is_x86_feature_detected!("avx2")
    }
    #[cfg(not(target_arch = "x86_64"))]
    {
        false
    }
}

fn is_symmetric(taps: &[f64]) -> bool {
    taps.iter().eq(taps.iter().rev())
}

fn direct_2d(width: usize, height: usize, kernel: &Kernel2D, src: &[f64], dst: &mut [f64]) {
    let r = kernel.radius() as isize;
    let (w, h) = (width as isize, height as isize);
    dst.par_chunks_mut(width)
        .enumerate()
        .for_each(|(y, out)| {
            let y = y as isize;
            for (x, o) in out.iter_mut().enumerate() {
                let x = x as isize;
                let mut acc = 0.0;
                for i in -r..=r {
                    let sy = (y - i).clamp(0, h - 1) as usize;
                    for j in -r..=r {
                        let sx = (x - j).clamp(0, w - 1) as usize;
                        acc += kernel.weight(j, i) * src[sy * width + sx];
                    }
                }
                *o = acc;
            }
        });
}

/// Convolves a raw buffer into `dst` with clamp-to-edge borders.
pub fn convolve_into(width: usize, height: usize, src: &[f64], kernel: &Kernel2D, dst: &mut [f64]) {
    Convolver::new(width, height, kernel).apply(src, dst);
}

/// Discrete 2-D convolution with edge replication; output has the input's size.
pub fn convolve(map: &HeightMap, kernel: &Kernel2D) -> HeightMap {
    let mut out = vec![0.0; map.data().len()];
    convolve_into(map.width(), map.height(), map.data(), kernel, &mut out);
    HeightMap::from_raw(map.width(), map.height(), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imagecore::gaussian_kernel;
    use proptest::prelude::*;

    /// Textbook double loop: out(x, y) = sum k(i, j) in(clamp(x - i), clamp(y - j)).
    fn brute_force(map: &HeightMap, kernel: &Kernel2D) -> Vec<f64> {
        let r = kernel.radius() as isize;
        let mut out = Vec::new();
        for y in 0..map.height() as isize {
            for x in 0..map.width() as isize {
                let mut acc = 0.0;
                for j in -r..=r {
                    for i in -r..=r {
                        acc += kernel.weight(i, j) * map.get_clamped(x - i, y - j);
                    }
                }
                out.push(acc);
            }
        }
        out
    }

    #[test]
    fn constant_map_is_preserved() {
        let map = HeightMap::new(9, 7, vec![0.0125; 63]).unwrap();
        let out = convolve(&map, &gaussian_kernel(5, 1.3).unwrap());
        for v in out.data() {
            assert!((v - 0.0125).abs() < 1e-15);
        }
    }

    #[test]
    fn impulse_stamps_the_kernel() {
        let asym = Kernel2D::new(3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]).unwrap();
        for kernel in [gaussian_kernel(3, 0.8).unwrap(), asym] {
            let mut data = vec![0.0; 49];
            data[3 * 7 + 3] = 1.0;
            let out = convolve(&HeightMap::new(7, 7, data).unwrap(), &kernel);
            for dy in -1isize..=1 {
                for dx in -1isize..=1 {
                    let v = out.get((3 + dx) as usize, (3 + dy) as usize);
                    assert!((v - kernel.weight(dx, dy)).abs() < 1e-15);
                }
            }
            let stamped: f64 = out.data().iter().map(|v| v.abs()).sum();
            assert!((stamped - kernel.weights().iter().sum::<f64>()).abs() < 1e-12);
        }
    }

    #[test]
    fn kernel_wider_than_map_clamps() {
        let map = HeightMap::new(3, 3, (0..9).map(f64::from).collect()).unwrap();
        let k = gaussian_kernel(9, 2.0).unwrap();
        let out = convolve(&map, &k);
        let oracle = brute_force(&map, &k);
        for (a, b) in out.data().iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[cfg(target_arch = "x86_64")]
    #[test]
    fn vector_paths_agree_bitwise() {
        if !simd_available() {
            return;
        }
        let (w, h) = (37, 23);
        let src: Vec<f64> = (0..w * h).map(|i| ((i * 7919) % 1013) as f64 * 1e-6).collect();
        let taps = gaussian_kernel(21, 7.0).unwrap().separable_factor().unwrap().to_vec();
        let (mut a, mut b) = (vec![0.0; w * h], vec![0.0; w * h]);
        horizontal_rows(w, &taps, &src, &mut a);
        unsafe { horizontal_rows_avx2(w, &taps, &src, &mut b) };
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
        vertical_rows(w, h, &taps, &src, 0, &mut a);
        unsafe { vertical_rows_avx2(w, h, &taps, &src, 0, &mut b) };
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    proptest! {
        #[test]
        fn separable_matches_brute_force(
            w in 8usize..=16,
            h in 8usize..=16,
            half in 1usize..4,
            sigma in 0.5f64..4.0,
            seed in proptest::collection::vec(-1.0f64..1.0, 256),
        ) {
            let map = HeightMap::new(w, h, seed[..w * h].to_vec()).unwrap();
            let k = gaussian_kernel(2 * half + 1, sigma).unwrap();
            let out = convolve(&map, &k);
            for (a, b) in out.data().iter().zip(brute_force(&map, &k)) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        #[test]
        fn stays_within_input_range(
            seed in proptest::collection::vec(0.0f64..0.03, 100),
            sigma in 0.5f64..5.0,
        ) {
            let map = HeightMap::new(10, 10, seed).unwrap();
            let out = convolve(&map, &gaussian_kernel(7, sigma).unwrap());
            let (lo, hi) = (map.min_value(), map.max_value());
            for v in out.data() {
                prop_assert!(*v >= lo - 1e-15 && *v <= hi + 1e-15);
            }
        }
    }
}
