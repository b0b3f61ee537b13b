//! Elastomer surface approximation from a raw depth map.
//!
//! Depth is first clipped at the maximum observable distance and stored as
//! elevation (`d_max - min(D, d_max)`), so the contact region is raised and
//! the undeformed membrane sits at zero. The elevation is then smoothed by
//! repeated Gaussian filtering, with one of several merge strategies:
//!
//! * [`Variant::SingleGaussian`]: each step is merged with the raw elevation by
//!   an elementwise max, which keeps contact features sharp while the
//!   surrounding membrane relaxes smoothly.
//! * [`Variant::DifferenceOfGaussians`]: `2 * narrow - wide` over two
//!   max-merged smoothings, which adds the slight depression ring around
//!   contacts.
//! * [`Variant::LegacyMasked`]: the older mask-multiplication merge. It keeps
//!   a visible step at the contact boundary and is kept for comparison.
//! * [`Variant::BeforeSmoothing`]: the thresholded elevation, untouched.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagecore::{gaussian_kernel, Convolver, DepthMap, HeightMap};

/// Which heightmap approximation to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    BeforeSmoothing,
    SingleGaussian,
    LegacyMasked,
    DifferenceOfGaussians,
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" | "before_smoothing" => Ok(Variant::BeforeSmoothing),
            "single" | "single_gaussian" => Ok(Variant::SingleGaussian),
            "legacy" | "legacy_masked" => Ok(Variant::LegacyMasked),
            "dog" | "difference_of_gaussians" => Ok(Variant::DifferenceOfGaussians),
            other => Err(Error::param(
                "variant",
                format!("unknown variant `{other}` (raw, single, legacy, dog)"),
            )),
        }
    }
}

/// Elastomer deformation parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeformParams {
    /// Maximum observable depth in meters.
    pub d_max: f64,
    /// Odd side length of the Gaussian kernel in pixels.
    pub kernel_size: usize,
    /// Standard deviation of the narrow (and single) Gaussian, pixels.
    pub sigma_narrow: f64,
    /// Standard deviation of the wide Gaussian used by the DoG variant, pixels.
    pub sigma_wide: f64,
    /// Number of smooth-and-merge iterations.
    pub steps: usize,
    pub variant: Variant,
}

impl Default for DeformParams {
    /// 3 cm observable depth, 21x21 kernel, σ = 7 over 6 steps, wide σ = 21, DoG.
    fn default() -> Self {
        Self {
            d_max: 0.03,
            kernel_size: 21,
            sigma_narrow: 7.0,
            sigma_wide: 21.0,
            steps: 6,
            variant: Variant::DifferenceOfGaussians,
        }
    }
}

impl DeformParams {
    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_d_max(self.d_max)?;
        check_smoothing(self.kernel_size, self.sigma_narrow, self.steps)?;
        if !(self.sigma_wide.is_finite() && self.sigma_wide >= self.sigma_narrow) {
            return Err(Error::param(
                "sigma_wide",
                format!(
                    "must be >= sigma_narrow ({}), got {}",
                    self.sigma_narrow, self.sigma_wide
                ),
            ));
        }
        Ok(())
    }
}

fn check_d_max(d_max: f64) -> Result<()> {
    if !(d_max.is_finite() && d_max > 0.0) {
        return Err(Error::param("d_max", format!("must be positive, got {d_max}")));
    }
    Ok(())
}

fn check_smoothing(kernel_size: usize, sigma: f64, steps: usize) -> Result<()> {
    if kernel_size < 3 || kernel_size % 2 == 0 {
        return Err(Error::param(
            "kernel_size",
            format!("must be odd and >= 3, got {kernel_size}"),
        ));
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::param("sigma", format!("must be positive, got {sigma}")));
    }
    if steps == 0 {
        return Err(Error::param("steps", "must be at least 1"));
    }
    Ok(())
}

/// Elevation of the clipped depth: `d_max - min(D, d_max)`, in `[0, d_max]`.
pub fn threshold_depth(depth: &DepthMap, d_max: f64) -> Result<HeightMap> {
    check_d_max(d_max)?;
    let data = depth.data().iter().map(|&d| d_max - d.min(d_max)).collect();
    Ok(HeightMap::from_raw(depth.width(), depth.height(), data))
}

/// `T` rounds of Gaussian smoothing, each merged with `e0` by elementwise max.
pub fn smooth_heightmap(
    e0: &HeightMap,
    kernel_size: usize,
    sigma: f64,
    steps: usize,
) -> Result<HeightMap> {
    check_smoothing(kernel_size, sigma, steps)?;
    let kernel = gaussian_kernel(kernel_size, sigma)?;
    let mut conv = Convolver::new(e0.width(), e0.height(), &kernel);
    let mut current = e0.data().to_vec();
    let mut next = vec![0.0; current.len()];
    for _ in 0..steps {
        conv.apply(&current, &mut next);
        for (v, &base) in next.iter_mut().zip(e0.data()) {
            *v = v.max(base);
        }
        std::mem::swap(&mut current, &mut next);
    }
    Ok(HeightMap::from_raw(e0.width(), e0.height(), current))
}

/// `2 * H_narrow - H_wide`, both branches smoothed with the same kernel size and step count.
pub fn dog_heightmap(e0: &HeightMap, params: &DeformParams) -> Result<HeightMap> {
    params.validate()?;
    let narrow = smooth_heightmap(e0, params.kernel_size, params.sigma_narrow, params.steps)?;
    if params.sigma_wide == params.sigma_narrow {
        return Ok(narrow);
    }
    let wide = smooth_heightmap(e0, params.kernel_size, params.sigma_wide, params.steps)?;
    let data = narrow
        .data()
        .iter()
        .zip(wide.data())
        .map(|(n, w)| 2.0 * n - w)
        .collect();
    Ok(HeightMap::from_raw(e0.width(), e0.height(), data))
}

/// Mask-multiplication merge: plain `T`-step smoothing outside the contact,
/// raw elevation inside it (`M * e0 + (1 - M) * S` with `M = [e0 > 0]`).
pub fn legacy_masked_smooth(e0: &HeightMap, params: &DeformParams) -> Result<HeightMap> {
    params.validate()?;
    let kernel = gaussian_kernel(params.kernel_size, params.sigma_narrow)?;
    let mut conv = Convolver::new(e0.width(), e0.height(), &kernel);
    let mut smoothed = e0.data().to_vec();
    let mut scratch = vec![0.0; smoothed.len()];
    for _ in 0..params.steps {
        conv.apply(&smoothed, &mut scratch);
        std::mem::swap(&mut smoothed, &mut scratch);
    }
    let data = e0
        .data()
        .iter()
        .zip(&smoothed)
        .map(|(&base, &s)| if base > 0.0 { base } else { s })
        .collect();
    Ok(HeightMap::from_raw(e0.width(), e0.height(), data))
}

/// Applies the configured variant to an already thresholded elevation.
pub fn deform(e0: &HeightMap, params: &DeformParams) -> Result<HeightMap> {
    params.validate()?;
    match params.variant {
        Variant::BeforeSmoothing => Ok(e0.clone()),
        Variant::SingleGaussian => {
            smooth_heightmap(e0, params.kernel_size, params.sigma_narrow, params.steps)
        }
        Variant::LegacyMasked => legacy_masked_smooth(e0, params),
        Variant::DifferenceOfGaussians => dog_heightmap(e0, params),
    }
}

/// Threshold followed by the configured smoothing variant.
pub fn elastomer_heightmap(depth: &DepthMap, params: &DeformParams) -> Result<HeightMap> {
    params.validate()?;
    let e0 = threshold_depth(depth, params.d_max)?;
    deform(&e0, params)
}

/// Largest absolute step between 4-neighbours that straddle the contact boundary
/// (exactly one of the pair has `e0 > 0`).
pub fn boundary_gradient(h: &HeightMap, e0: &HeightMap) -> Result<f64> {
    if !h.same_shape(e0) {
        return Err(Error::DimensionMismatch(format!(
            "heightmap {}x{} vs contact map {}x{}",
            h.width(),
            h.height(),
            e0.width(),
            e0.height()
        )));
    }
    let (w, ht) = (h.width(), h.height());
    let contact = |x: usize, y: usize| e0.get(x, y) > 0.0;
    let mut worst = 0.0f64;
    for y in 0..ht {
        for x in 0..w {
            if x + 1 < w && contact(x, y) != contact(x + 1, y) {
                worst = worst.max((h.get(x, y) - h.get(x + 1, y)).abs());
            }
            if y + 1 < ht && contact(x, y) != contact(x, y + 1) {
                worst = worst.max((h.get(x, y) - h.get(x, y + 1)).abs());
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imagecore::convolve;
    use proptest::prelude::*;

    fn plateau(n: usize, half: usize, height: f64) -> HeightMap {
        let c = n / 2;
        HeightMap::from_fn(n, n, |x, y| {
            if x.abs_diff(c) < half && y.abs_diff(c) < half {
                height
            } else {
                0.0
            }
        })
        .unwrap()
    }

    /// Reference smoothing: 2-D double-loop convolution then max, step by step.
    fn smooth_oracle(e0: &HeightMap, size: usize, sigma: f64, steps: usize) -> Vec<f64> {
        let k = gaussian_kernel(size, sigma).unwrap();
        let r = (size / 2) as isize;
        let (w, h) = (e0.width(), e0.height());
        let mut cur = e0.clone();
        for _ in 0..steps {
            let mut next = Vec::with_capacity(w * h);
            for y in 0..h as isize {
                for x in 0..w as isize {
                    let mut acc = 0.0;
                    for j in -r..=r {
                        for i in -r..=r {
                            acc += k.weight(i, j) * cur.get_clamped(x - i, y - j);
                        }
                    }
                    next.push(acc.max(e0.get(x as usize, y as usize)));
                }
            }
            cur = HeightMap::new(w, h, next).unwrap();
        }
        cur.into_data()
    }

    #[test]
    fn threshold_examples() {
        let d = DepthMap::new(3, 3, vec![0.035, 0.028, 0.03, 0.0, 0.5, 0.01, 0.03, 0.03, 0.03])
            .unwrap();
        let e = threshold_depth(&d, 0.03).unwrap();
        assert_eq!(e.get(0, 0), 0.0);
        assert!((e.get(1, 0) - 0.002).abs() < 1e-15);
        assert_eq!(e.get(2, 0), 0.0);
        assert_eq!(e.get(0, 1), 0.03);
        assert!(threshold_depth(&d, 0.0).is_err());
        let bg = DepthMap::filled(5, 4, 0.1).unwrap();
        assert!(threshold_depth(&bg, 0.03).unwrap().data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn zeros_stay_zero() {
        let zero = HeightMap::zeros(12, 9).unwrap();
        for steps in [1, 3] {
            let s = smooth_heightmap(&zero, 5, 1.5, steps).unwrap();
            assert!(s.data().iter().all(|v| *v == 0.0));
        }
        let p = DeformParams {
            kernel_size: 5,
            sigma_narrow: 1.0,
            sigma_wide: 3.0,
            steps: 2,
            ..DeformParams::default()
        };
        assert!(dog_heightmap(&zero, &p).unwrap().data().iter().all(|v| *v == 0.0));
        assert!(legacy_masked_smooth(&zero, &p).unwrap().data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn single_step_is_convolve_then_max() {
        let e0 = plateau(16, 4, 1e-3);
        let k = gaussian_kernel(5, 1.2).unwrap();
        let conv = convolve(&e0, &k);
        let expected: Vec<f64> = conv.data().iter().zip(e0.data()).map(|(a, b)| a.max(*b)).collect();
        assert_eq!(smooth_heightmap(&e0, 5, 1.2, 1).unwrap().data(), &expected[..]);
    }

    #[test]
    fn plateau_is_kept_and_decays_outside() {
        let e0 = plateau(32, 6, 2e-3);
        let out = smooth_heightmap(&e0, 7, 2.0, 3).unwrap();
        let oracle = smooth_oracle(&e0, 7, 2.0, 3);
        for (a, b) in out.data().iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-9);
        }
        // Interior untouched.
        for y in 11..21 {
            for x in 11..21 {
                assert_eq!(out.get(x, y), e0.get(x, y));
            }
        }
        // Monotone decay along the centre row, right of the plateau edge.
        let row: Vec<f64> = (22..32).map(|x| out.get(x, 16)).collect();
        assert!(row.windows(2).all(|w| w[1] <= w[0]));
        assert!(row[0] > 0.0 && row[0] < 2e-3);
    }

    #[test]
    fn dog_matches_composition_oracle() {
        let e0 = plateau(32, 6, 1e-3);
        let p = DeformParams {
            kernel_size: 21,
            sigma_narrow: 2.0,
            sigma_wide: 6.0,
            steps: 2,
            ..DeformParams::default()
        };
        let out = dog_heightmap(&e0, &p).unwrap();
        let narrow = smooth_oracle(&e0, 21, 2.0, 2);
        let wide = smooth_oracle(&e0, 21, 6.0, 2);
        for ((o, n), w) in out.data().iter().zip(&narrow).zip(&wide) {
            assert!((o - (2.0 * n - w)).abs() < 1e-9);
        }
        assert!(out.min_value() < 0.0, "DoG should dip below the rest plane");
    }

    #[test]
    fn dog_identity_when_sigmas_match() {
        let e0 = plateau(20, 4, 1e-3);
        let p = DeformParams {
            kernel_size: 7,
            sigma_narrow: 2.0,
            sigma_wide: 2.0,
            steps: 3,
            ..DeformParams::default()
        };
        let dog = dog_heightmap(&e0, &p).unwrap();
        assert_eq!(dog, smooth_heightmap(&e0, 7, 2.0, 3).unwrap());
    }

    #[test]
    fn legacy_keeps_contact_and_has_a_sharper_edge() {
        let e0 = plateau(48, 10, 1e-3);
        let p = DeformParams {
            kernel_size: 9,
            sigma_narrow: 3.0,
            sigma_wide: 9.0,
            steps: 4,
            ..DeformParams::default()
        };
        let legacy = legacy_masked_smooth(&e0, &p).unwrap();
        for (l, b) in legacy.data().iter().zip(e0.data()) {
            if *b > 0.0 {
                assert_eq!(l.to_bits(), b.to_bits());
            }
        }
        let max_merge = smooth_heightmap(&e0, 9, 3.0, 4).unwrap();
        assert!(
            boundary_gradient(&legacy, &e0).unwrap() > boundary_gradient(&max_merge, &e0).unwrap()
        );
    }

    #[test]
    fn param_validation() {
        let good = DeformParams::default();
        assert!(good.validate().is_ok());
        assert!(DeformParams { d_max: -1.0, ..good }.validate().is_err());
        assert!(DeformParams { kernel_size: 4, ..good }.validate().is_err());
        assert!(DeformParams { kernel_size: 1, ..good }.validate().is_err());
        assert!(DeformParams { steps: 0, ..good }.validate().is_err());
        assert!(DeformParams { sigma_wide: 3.0, ..good }.validate().is_err());
        assert_eq!("dog".parse::<Variant>().unwrap(), Variant::DifferenceOfGaussians);
        assert!("blur".parse::<Variant>().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn threshold_is_idempotent(vals in proptest::collection::vec(0.0f64..0.06, 25), d_max in 0.005f64..0.05) {
            let d = DepthMap::new(5, 5, vals).unwrap();
            let e = threshold_depth(&d, d_max).unwrap();
            prop_assert!(e.data().iter().all(|v| (0.0..=d_max).contains(v)));
            // Clipped depth recovered from the elevation thresholds to the same elevation.
            let clipped = DepthMap::new(5, 5, e.data().iter().map(|v| d_max - v).collect()).unwrap();
            let again = threshold_depth(&clipped, d_max).unwrap();
            for (a, b) in again.data().iter().zip(e.data()) {
                prop_assert!((a - b).abs() <= 1e-15);
            }
        }

        #[test]
        fn smoothing_is_monotone_and_bounded_below(
            base in proptest::collection::vec(0.0f64..1e-3, 144),
            bump in proptest::collection::vec(0.0f64..1e-3, 144),
        ) {
            let a = HeightMap::new(12, 12, base.clone()).unwrap();
            let b = HeightMap::new(12, 12, base.iter().zip(&bump).map(|(x, y)| x + y).collect()).unwrap();
            let sa = smooth_heightmap(&a, 5, 1.5, 3).unwrap();
            let sb = smooth_heightmap(&b, 5, 1.5, 3).unwrap();
            for i in 0..144 {
                prop_assert!(sa.data()[i] >= a.data()[i]);
                prop_assert!(sb.data()[i] >= sa.data()[i] - 1e-18);
            }
        }

        #[test]
        fn variants_are_translation_equivariant(shift in 1usize..5) {
            let n = 40;
            let make = |s: usize| HeightMap::from_fn(n, n, |x, y| {
                if (14 + s..20 + s).contains(&x) && (15..22).contains(&y) { 1e-3 } else { 0.0 }
            }).unwrap();
            let (a, b) = (make(0), make(shift));
            let p = DeformParams { kernel_size: 5, sigma_narrow: 1.0, sigma_wide: 2.0, steps: 2, ..DeformParams::default() };
            for variant in [Variant::SingleGaussian, Variant::LegacyMasked, Variant::DifferenceOfGaussians] {
                let p = p.with_variant(variant);
                let (ha, hb) = (deform(&a, &p).unwrap(), deform(&b, &p).unwrap());
                for y in 8..32 {
                    for x in 8..30 {
                        prop_assert!((ha.get(x, y) - hb.get(x + shift, y)).abs() < 1e-15);
                    }
                }
            }
        }
    }
}
