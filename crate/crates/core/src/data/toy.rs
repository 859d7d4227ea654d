//! Seeded synthetic domain-shift problems.

use std::f64::consts::{PI, TAU};

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};

use super::{Domain, LabeledDataset, Labels};
use crate::error::Result;

/// Three isotropic 2-D Gaussian classes with centers on a ring around the
/// origin; the target domain is the same draws rotated about the origin.
///
/// Defaults: 50 points per class, centers at 0°, 45° and 90° on a ring of
/// radius 3, standard deviations 0.4, 0.6 and 0.8, rotation π/4. With these
/// centers a rotation of π/4 moves each of the first two target classes onto
/// the next source class, so a source-only classifier is mostly wrong on the
/// target while the geometry still identifies the correct matching.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianToy {
    pub n_per_class: usize,
    /// Rotation applied to the target, radians.
    pub rotation: f64,
    pub ring_radius: f64,
    /// Angular position of each class center, radians.
    pub center_angles: [f64; 3],
    pub class_std: [f64; 3],
    pub seed: u64,
}

impl Default for GaussianToy {
    fn default() -> Self {
        Self {
            n_per_class: 50,
            rotation: PI / 4.0,
            ring_radius: 3.0,
            center_angles: [0.0, PI / 4.0, PI / 2.0],
            class_std: [0.4, 0.6, 0.8],
            seed: 0,
        }
    }
}

impl GaussianToy {
    pub fn centers(&self) -> [[f64; 2]; 3] {
        self.center_angles
            .map(|a| [self.ring_radius * a.cos(), self.ring_radius * a.sin()])
    }

    pub fn generate(&self) -> Result<(LabeledDataset, LabeledDataset)> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let n = 3 * self.n_per_class;
        let mut xs = Array2::zeros((n, 2));
        let mut classes = Vec::with_capacity(n);
        let unit = Normal::new(0.0, 1.0).expect("unit normal");
        for (k, center) in self.centers().iter().enumerate() {
            for r in 0..self.n_per_class {
                let row = k * self.n_per_class + r;
                xs[[row, 0]] = center[0] + self.class_std[k] * unit.sample(&mut rng);
                xs[[row, 1]] = center[1] + self.class_std[k] * unit.sample(&mut rng);
                classes.push(k);
            }
        }
        let xt = rotate(&xs, self.rotation);
        let labels = Labels::Classes {
            indices: classes,
            n_classes: 3,
        };
        let source = LabeledDataset::new(xs, Some(labels.clone()), Domain::Source)?;
        let target = LabeledDataset::new(xt, Some(labels), Domain::Target)?;
        Ok((source, target))
    }
}

/// Rotate every row of a 2-column matrix about the origin.
///
/// The angle is reduced modulo 2π first so a full turn is an exact identity.
pub fn rotate(x: &Array2<f64>, angle: f64) -> Array2<f64> {
    let a = angle.rem_euclid(TAU);
    if a == 0.0 {
        return x.clone();
    }
    let (s, c) = a.sin_cos();
    let mut out = x.clone();
    for mut row in out.rows_mut() {
        let (u, v) = (row[0], row[1]);
        row[0] = c * u - s * v;
        row[1] = s * u + c * v;
    }
    out
}

pub fn gen_rotated_gaussians(n_per_class: usize, rotation: f64, seed: u64) -> Result<(LabeledDataset, LabeledDataset)> {
    GaussianToy {
        n_per_class,
        rotation,
        seed,
        ..GaussianToy::default()
    }
    .generate()
}

/// One-dimensional regression under a joint shift.
///
/// Source inputs are uniform on `[-π, π]` with response `sin(x)`. Target
/// inputs are a second uniform draw on a narrower interval, translated by
/// `shift`, with response `sin(x − shift)`: the joint distribution moves as a
/// whole, and with the default `shift = π` the target response is `−sin(x)`
/// on the overlap with the source range. Both responses get i.i.d. Gaussian
/// noise of standard deviation `noise`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionToy {
    pub n: usize,
    pub shift: f64,
    /// Half-width of the target input interval before the shift.
    pub target_half_width: f64,
    pub noise: f64,
    pub seed: u64,
}

impl Default for RegressionToy {
    fn default() -> Self {
        Self {
            n: 100,
            shift: PI,
            target_half_width: 0.75 * PI,
            noise: 0.1,
            seed: 0,
        }
    }
}

impl RegressionToy {
    pub fn source_curve(x: f64) -> f64 {
        x.sin()
    }

    pub fn target_curve(&self, x: f64) -> f64 {
        (x - self.shift).sin()
    }

    pub fn generate(&self) -> Result<(LabeledDataset, LabeledDataset)> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let xs: Array1<f64> = sample_uniform(&mut rng, self.n, -PI, PI);
        let xt: Array1<f64> =
            sample_uniform(&mut rng, self.n, -self.target_half_width, self.target_half_width).mapv(|u| u + self.shift);
        let ys = xs.mapv(Self::source_curve) + self.noise_vec(&mut rng);
        let yt = xt.mapv(|x| self.target_curve(x)) + self.noise_vec(&mut rng);

        let column = |v: Array1<f64>| v.insert_axis(ndarray::Axis(1));
        let source = LabeledDataset::new(column(xs), Some(Labels::Values(column(ys))), Domain::Source)?;
        let target = LabeledDataset::new(column(xt), Some(Labels::Values(column(yt))), Domain::Target)?;
        Ok((source, target))
    }

    fn noise_vec(&self, rng: &mut ChaCha8Rng) -> Array1<f64> {
        if self.noise == 0.0 {
            return Array1::zeros(self.n);
        }
        let normal = Normal::new(0.0, self.noise).expect("noise std must be finite and non-negative");
        Array1::from_shape_fn(self.n, |_| normal.sample(rng))
    }
}

pub fn gen_1d_regression_shift(n: usize, seed: u64) -> Result<(LabeledDataset, LabeledDataset)> {
    RegressionToy {
        n,
        seed,
        ..RegressionToy::default()
    }
    .generate()
}

fn sample_uniform(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> Array1<f64> {
    let dist = Uniform::new(lo, hi).expect("non-empty interval");
    Array1::from_shape_fn(n, |_| dist.sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rotation_keeps_features() {
        let (s, t) = gen_rotated_gaussians(20, 0.0, 3).unwrap();
        assert_eq!(s.x(), t.x());
    }

    #[test]
    fn full_turn_equals_no_rotation() {
        let (_, t0) = gen_rotated_gaussians(20, 0.0, 3).unwrap();
        let (_, t1) = gen_rotated_gaussians(20, TAU, 3).unwrap();
        assert_eq!(t0.x(), t1.x());
    }

    #[test]
    fn rotation_is_an_isometry() {
        let (s, t) = gen_rotated_gaussians(15, PI / 4.0, 8).unwrap();
        let d = |m: ndarray::ArrayView2<f64>, i: usize, j: usize| {
            ((m[[i, 0]] - m[[j, 0]]).powi(2) + (m[[i, 1]] - m[[j, 1]]).powi(2)).sqrt()
        };
        for i in 0..s.len() {
            for j in (i + 1)..s.len() {
                assert!((d(s.x(), i, j) - d(t.x(), i, j)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn rotated_class_means_follow_rotated_centers() {
        let toy = GaussianToy {
            n_per_class: 10_000,
            seed: 2,
            ..GaussianToy::default()
        };
        let (_, t) = toy.generate().unwrap();
        let (s, c) = toy.rotation.sin_cos();
        for (k, center) in toy.centers().iter().enumerate() {
            let rows = t
                .x()
                .slice_move(ndarray::s![k * 10_000..(k + 1) * 10_000, ..])
                .to_owned();
            let mean = rows.mean_axis(ndarray::Axis(0)).unwrap();
            let expected = [c * center[0] - s * center[1], s * center[0] + c * center[1]];
            let band = 3.0 * toy.class_std[k] / (10_000f64).sqrt();
            assert!((mean[0] - expected[0]).abs() < band);
            assert!((mean[1] - expected[1]).abs() < band);
        }
    }

    #[test]
    fn noiseless_regression_lies_on_curves() {
        let toy = RegressionToy {
            noise: 0.0,
            seed: 4,
            ..RegressionToy::default()
        };
        let (s, t) = toy.generate().unwrap();
        let Some(Labels::Values(ys)) = s.labels() else { panic!() };
        let Some(Labels::Values(yt)) = t.labels() else { panic!() };
        for i in 0..toy.n {
            assert_eq!(ys[[i, 0]], RegressionToy::source_curve(s.x()[[i, 0]]));
            assert_eq!(yt[[i, 0]], toy.target_curve(t.x()[[i, 0]]));
        }
    }

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(
            gen_1d_regression_shift(30, 5).unwrap(),
            gen_1d_regression_shift(30, 5).unwrap()
        );
        assert_eq!(
            gen_rotated_gaussians(5, 1.0, 5).unwrap(),
            gen_rotated_gaussians(5, 1.0, 5).unwrap()
        );
        assert_ne!(
            gen_1d_regression_shift(30, 5).unwrap(),
            gen_1d_regression_shift(30, 6).unwrap()
        );
    }
}
