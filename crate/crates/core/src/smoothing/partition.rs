use nalgebra::DVector;

use crate::manifold::Point;

use super::Cover;

/// The flat bump `exp(-1 / (1 - s^2))` for `|s| < 1`, zero otherwise.
pub fn bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s * s)).exp()
    }
}

fn bump_slope(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        let t = 1.0 - s * s;
        bump(s) * (-2.0 * s / (t * t))
    }
}

/// Smooth partition of unity subordinate to a cover.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionOfUnity {
    pub cover: Cover,
}

impl PartitionOfUnity {
    pub fn new(cover: Cover) -> Self {
        PartitionOfUnity { cover }
    }

    /// Unnormalized bumps `b_i(q)`.
    pub fn bumps(&self, q: &Point) -> Vec<f64> {
        let m = &self.cover.manifold;
        self.cover
            .centers
            .iter()
            .zip(&self.cover.radii)
            .map(|(c, r)| bump(m.distance(c, q) / r))
            .collect()
    }

    /// `(i, psi_i(q))` for every ball containing `q`.
    pub fn weights(&self, q: &Point) -> Vec<(usize, f64)> {
        let b = self.bumps(q);
        let total: f64 = b.iter().sum();
        assert!(total > 0.0, "point outside the cover");
        b.into_iter()
            .enumerate()
            .filter(|(_, v)| *v > 0.0)
            .map(|(i, v)| (i, v / total))
            .collect()
    }

    pub fn psi(&self, i: usize, q: &Point) -> f64 {
        let b = self.bumps(q);
        let total: f64 = b.iter().sum();
        assert!(total > 0.0, "point outside the cover");
        b[i] / total
    }

    /// `(i, psi_i(q), grad psi_i(q))` for every ball containing `q`.
    pub fn weights_with_gradients(&self, q: &Point) -> Vec<(usize, f64, DVector<f64>)> {
        let m = &self.cover.manifold;
        let mut vals = Vec::new();
        for (i, (c, r)) in self.cover.centers.iter().zip(&self.cover.radii).enumerate() {
            let d = m.distance(c, q);
            let s = d / r;
            if s >= 1.0 {
                continue;
            }
            let grad = if d == 0.0 {
                DVector::zeros(q.coords.len())
            } else {
                // grad d_c at q points away from c
                let toward = m.log_vec(q, c).expect("inside a ball below the injectivity radius");
                toward * (-bump_slope(s) / (r * d))
            };
            vals.push((i, bump(s), grad));
        }
        let total: f64 = vals.iter().map(|v| v.1).sum();
        assert!(total > 0.0, "point outside the cover");
        let mut total_grad = DVector::zeros(q.coords.len());
        for v in &vals {
            total_grad += &v.2;
        }
        vals.into_iter()
            .filter(|v| v.1 > 0.0)
            .map(|(i, b, g)| {
                let psi = b / total;
                (i, psi, (g - &total_grad * psi) / total)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::Manifold;
    use crate::smoothing::build_cover;

    #[test]
    fn bump_is_flat_at_the_rim() {
        assert_eq!(bump(1.0), 0.0);
        assert!(bump(0.999) < 1e-200);
        assert_eq!(bump(0.0), (-1f64).exp());
        assert_eq!(bump_slope(1.0), 0.0);
    }

    #[test]
    fn sums_to_one_and_supported() {
        let m = Manifold::flat_torus(vec![1.0, 1.0]).unwrap();
        let cover = build_cover(&m, 0.125).unwrap();
        let pou = PartitionOfUnity::new(cover.clone());
        for k in 0..50 {
            let q = m.point(vec![0.37 * k as f64, 0.11 * k as f64]).unwrap();
            let w = pou.weights(&q);
            let s: f64 = w.iter().map(|x| x.1).sum();
            assert!((s - 1.0).abs() < 1e-12);
            for (i, _) in w {
                assert!(m.distance(&cover.centers[i], &q) < cover.radii[i]);
            }
        }
    }

    #[test]
    fn gradients_sum_to_zero() {
        let m = Manifold::sphere(2, 1.0).unwrap();
        let cover = build_cover(&m, 0.6).unwrap();
        let pou = PartitionOfUnity::new(cover);
        let q = m.point(vec![0.6, 0.0, 0.8]).unwrap();
        let mut total = DVector::zeros(3);
        for (_, _, g) in pou.weights_with_gradients(&q) {
            total += g;
        }
        assert!(total.norm() < 1e-12);
    }
}
