use proptest::prelude::*;
use tactsim_core::evaluate::{
    common_region, compare, constrained_affine, warp_and_crop, AlignmentTransform, MetricReport,
};
use tactsim_core::imagecore::TactileImage;

fn lcg_bytes(seed: u64, n: usize) -> Vec<u8> {
    let mut x = seed;
    (0..n)
        .map(|_| {
            x = (x * 1_103_515_245 + 12_345) % (1 << 31);
            ((x >> 16) & 255) as u8
        })
        .collect()
}

fn noisy_pair(w: usize, h: usize, s1: u64, s2: u64) -> (TactileImage, TactileImage) {
    let a = lcg_bytes(s1, w * h * 3);
    let n = lcg_bytes(s2, w * h * 3);
    let b = a
        .iter()
        .zip(&n)
        .map(|(&v, &d)| (i64::from(v) + i64::from(d) % 61 - 30).clamp(0, 255) as u8)
        .collect();
    (
        TactileImage::new(w, h, a).unwrap(),
        TactileImage::new(w, h, b).unwrap(),
    )
}

/// Straightforward per-window metric definitions.
fn naive(a: &TactileImage, b: &TactileImage) -> MetricReport {
    let (w, h) = (a.width(), a.height());
    let n = a.data().len() as f64;
    let diffs = a.data().iter().zip(b.data()).map(|(x, y)| f64::from(*x) - f64::from(*y));
    let mae = diffs.clone().map(f64::abs).sum::<f64>() / n / 255.0 * 100.0;
    let mse = diffs.map(|d| d * d).sum::<f64>() / n;
    let psnr = if mse == 0.0 { f64::INFINITY } else { 10.0 * (255.0f64.powi(2) / mse).log10() };

    let g: Vec<f64> = (-5..=5).map(|i: i32| (-f64::from(i * i) / (2.0 * 1.5 * 1.5)).exp()).collect();
    let gsum: f64 = g.iter().sum();
    let (c1, c2) = ((0.01f64 * 255.0).powi(2), (0.03f64 * 255.0).powi(2));
    let mut total = 0.0;
    for c in 0..3 {
        let mut acc = 0.0;
        let mut count = 0.0;
        for y0 in 0..=h - 11 {
            for x0 in 0..=w - 11 {
                let (mut ma, mut mb, mut aa, mut bb, mut ab) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for j in 0..11 {
                    for i in 0..11 {
                        let wt = g[i] * g[j] / (gsum * gsum);
                        let va = f64::from(a.get(x0 + i, y0 + j)[c]);
                        let vb = f64::from(b.get(x0 + i, y0 + j)[c]);
                        ma += wt * va;
                        mb += wt * vb;
                        aa += wt * va * va;
                        bb += wt * vb * vb;
                        ab += wt * va * vb;
                    }
                }
                let (sa, sb, sab) = (aa - ma * ma, bb - mb * mb, ab - ma * mb);
                acc += (2.0 * ma * mb + c1) * (2.0 * sab + c2) / ((ma * ma + mb * mb + c1) * (sa + sb + c2));
                count += 1.0;
            }
        }
        total += acc / count;
    }
    MetricReport { ssim: total / 3.0, psnr, mae }
}

#[test]
fn matches_reference_values() {
    // Frozen from scikit-image's structural_similarity (gaussian window, sigma 1.5,
    // population covariance, data_range 255) and peak_signal_noise_ratio.
    let cases = [
        (16, 16, 1, 2, 0.9707137696333253, 23.412006352809627, 5.791462418300653),
        (24, 20, 7, 9, 0.9723035625446269, 23.473454489169153, 5.743736383442266),
    ];
    for (w, h, s1, s2, ssim, psnr, mae) in cases {
        let (a, b) = noisy_pair(w, h, s1, s2);
        let r = compare(&a, &b).unwrap();
        assert!((r.ssim - ssim).abs() < 1e-9, "{} vs {ssim}", r.ssim);
        assert!((r.psnr - psnr).abs() < 1e-9);
        assert!((r.mae - mae).abs() < 1e-9);
    }
}

/// Least-squares scale + translation fit between point sets.
fn similarity_fit(src: &[[f64; 2]], dst: &[[f64; 2]]) -> (f64, [f64; 2]) {
    let n = src.len() as f64;
    let mean = |p: &[[f64; 2]]| [p.iter().map(|v| v[0]).sum::<f64>() / n, p.iter().map(|v| v[1]).sum::<f64>() / n];
    let (ms, md) = (mean(src), mean(dst));
    let (mut num, mut den) = (0.0, 0.0);
    for (s, d) in src.iter().zip(dst) {
        let (ps, pd) = ([s[0] - ms[0], s[1] - ms[1]], [d[0] - md[0], d[1] - md[1]]);
        num += ps[0] * pd[0] + ps[1] * pd[1];
        den += ps[0] * ps[0] + ps[1] * ps[1];
    }
    let s = num / den;
    (s, [md[0] - s * ms[0], md[1] - s * ms[1]])
}

#[test]
fn scaled_points_recover_the_similarity_fit() {
    let src = [[120.0, 80.0], [300.0, 215.0]];
    let dst = src.map(|p| [1.1 * p[0], 1.1 * p[1]]);
    let t = constrained_affine(src[0], src[1], dst[0], dst[1]).unwrap();
    let (s, tr) = similarity_fit(&src, &dst);
    assert!((t.scale - 1.1).abs() < 1e-12 && (t.scale - s).abs() < 1e-12);
    assert!((t.translation[0] - tr[0]).abs() < 1e-9 && (t.translation[1] - tr[1]).abs() < 1e-9);
    let m = t.matrix();
    assert_eq!((m[0][1], m[1][0]), (0.0, 0.0));
}

#[test]
fn translated_warp_crops_to_630() {
    let (a, b) = noisy_pair(640, 480, 3, 4);
    let t = AlignmentTransform::new(1.0, [10.0, 0.0]).unwrap();
    let (wa, wb, _) = warp_and_crop(&a, &b, &t).unwrap();
    assert_eq!((wa.width(), wa.height()), (630, 480));
    assert_eq!((wb.width(), wb.height()), (630, 480));
    let (ia, ib, _) = warp_and_crop(&a, &b, &AlignmentTransform::identity()).unwrap();
    assert_eq!((ia, ib), (a, b));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn metrics_match_naive_oracle(s1 in 0u64..1 << 30, s2 in 0u64..1 << 30, w in 11usize..20, h in 11usize..20) {
        let (a, b) = noisy_pair(w, h, s1, s2);
        let fast = compare(&a, &b).unwrap();
        let slow = naive(&a, &b);
        prop_assert!((fast.ssim - slow.ssim).abs() < 1e-6);
        prop_assert!((fast.psnr - slow.psnr).abs() < 1e-6);
        prop_assert!((fast.mae - slow.mae).abs() < 1e-6);
        let rev = compare(&b, &a).unwrap();
        prop_assert_eq!(rev.mae, fast.mae);
        prop_assert_eq!(rev.psnr, fast.psnr);
        prop_assert!((rev.ssim - fast.ssim).abs() < 1e-12);
        prop_assert!(fast.ssim <= 1.0 && fast.mae >= 0.0);
    }

    #[test]
    fn alignment_round_trips(
        p1 in proptest::array::uniform2(0.0f64..640.0),
        chord in proptest::array::uniform2(-200.0f64..200.0),
        scale in 0.5f64..2.0,
        shift in proptest::array::uniform2(-50.0f64..50.0),
    ) {
        prop_assume!(chord[0].hypot(chord[1]) > 1.0);
        let p2 = [p1[0] + chord[0], p1[1] + chord[1]];
        let map = |p: [f64; 2]| [scale * p[0] + shift[0], scale * p[1] + shift[1]];
        let t = constrained_affine(p1, p2, map(p1), map(p2)).unwrap();
        for p in [p1, p2] {
            let (q, r) = (t.apply(p), map(p));
            prop_assert!((q[0] - r[0]).abs() < 1e-9 && (q[1] - r[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn warp_outputs_share_dimensions(
        scale in 0.8f64..1.2,
        shift in proptest::array::uniform2(-12.0f64..12.0),
        w in 20usize..40,
        h in 20usize..40,
    ) {
        let (a, _) = noisy_pair(w, h, 5, 6);
        let (b, _) = noisy_pair(w + 3, h - 2, 8, 9);
        let t = AlignmentTransform::new(scale, shift).unwrap();
        if let Ok((wa, wb, rect)) = warp_and_crop(&a, &b, &t) {
            prop_assert_eq!((wa.width(), wa.height()), (wb.width(), wb.height()));
            prop_assert_eq!(rect, common_region((w, h), (w + 3, h - 2), &t).unwrap());
        }
    }
}
