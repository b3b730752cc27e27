use std::f64::consts::{PI, TAU};

use super::{CapConfiguration, CoverageValue};
use crate::error::{Error, Result};

/// Exact covered fraction of the circle.
///
/// Each cap is the arc `[θ_i − r_N, θ_i + r_N]`; arcs that wrap past angle 0
/// are split in two, then the arcs are sorted and merged in one sweep.
pub fn covered_volume_exact_d2(config: &CapConfiguration) -> Result<CoverageValue> {
    let params = config.params();
    if params.d() != 2 {
        return Err(Error::WrongDimension {
            expected: 2,
            actual: params.d(),
        });
    }
    let angles: Vec<f64> = (0..config.len())
        .map(|i| {
            let c = config.center(i);
            c[1].atan2(c[0])
        })
        .collect();
    Ok(CoverageValue::exact(arc_union_fraction(&angles, params.radius())))
}

/// Fraction of the circle covered by closed arcs of half-width `half_width`
/// centered at `angles`.
pub(crate) fn arc_union_fraction(angles: &[f64], half_width: f64) -> f64 {
    if angles.is_empty() {
        return 0.0;
    }
    if half_width >= PI {
        return 1.0;
    }
    let width = 2.0 * half_width;
    let mut arcs: Vec<(f64, f64)> = Vec::with_capacity(angles.len() + 4);
    for &theta in angles {
        let start = (theta - half_width).rem_euclid(TAU);
        let end = start + width;
        if end > TAU {
            arcs.push((start, TAU));
            arcs.push((0.0, end - TAU));
        } else {
            arcs.push((start, end));
        }
    }
    arcs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let mut covered = 0.0;
    let (mut lo, mut hi) = arcs[0];
    for &(s, e) in &arcs[1..] {
        if s <= hi {
            hi = hi.max(e);
        } else {
            covered += hi - lo;
            lo = s;
            hi = e;
        }
    }
    covered += hi - lo;
    (covered / TAU).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::ModelParams;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    fn config(n: usize, angles: &[f64]) -> CapConfiguration {
        CapConfiguration::from_angles(ModelParams::new(2, n).unwrap(), angles).unwrap()
    }

    #[test]
    fn identical_centers_cover_one_arc() {
        let v = covered_volume_exact_d2(&config(2, &[0.7, 0.7])).unwrap();
        assert_abs_diff_eq!(v.value, 0.5, epsilon = 1e-15);
        assert_eq!(v.mc_points, 0);
    }

    #[test]
    fn antipodal_half_circles_cover_everything() {
        let v = covered_volume_exact_d2(&config(2, &[0.3, 0.3 + PI])).unwrap();
        assert_abs_diff_eq!(v.value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn quarter_arcs_tile_the_circle() {
        let v = covered_volume_exact_d2(&config(4, &[0.0, FRAC_PI_2, PI, 3.0 * FRAC_PI_2])).unwrap();
        assert_abs_diff_eq!(v.value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn single_cap_and_full_cap() {
        let v = covered_volume_exact_d2(&config(1, &[1.0])).unwrap();
        assert_eq!(v.value, 1.0);
        for n in [2usize, 5, 64] {
            let v = arc_union_fraction(&[-3.1], PI / n as f64);
            assert_abs_diff_eq!(v, 1.0 / n as f64, epsilon = 1e-15);
        }
    }

    #[test]
    fn wraparound_arc_split() {
        // Arc around angle 0 must not be double counted or lost.
        let v = arc_union_fraction(&[0.0, 0.05], 0.1);
        assert_abs_diff_eq!(v, 0.25 / TAU, epsilon = 1e-15);
        let v = arc_union_fraction(&[PI - 0.01, -PI + 0.01], 0.1);
        assert_abs_diff_eq!(v, 0.22 / TAU, epsilon = 1e-14);
    }

    #[test]
    fn rejects_other_dimensions() {
        let params = ModelParams::new(3, 4).unwrap();
        let mut rng = crate::rng::stream(0, 0, 0);
        let c = CapConfiguration::sample(params, &mut rng);
        assert_eq!(
            covered_volume_exact_d2(&c),
            Err(Error::WrongDimension { expected: 2, actual: 3 })
        );
    }
}
