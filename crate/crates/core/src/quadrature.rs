//! Numerical integration used by the cap-measure and variance oracles.

/// Gauss–Kronrod 7/15 nodes on [-1, 1] (non-negative half).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
/// Gauss weights for the 7-point rule living on XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK[..7].iter().zip(&WGK[..7]).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, (kronrod - gauss).abs() * half)
}

fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: (f64, f64), tol: f64, depth: u32) -> f64 {
    let (value, err) = whole;
    if err <= tol || depth == 0 {
        return value;
    }
    let mid = 0.5 * (a + b);
    let left = gk15(f, a, mid);
    let right = gk15(f, mid, b);
    adapt(f, a, mid, left, 0.5 * tol, depth - 1) + adapt(f, mid, b, right, 0.5 * tol, depth - 1)
}

/// Adaptive Gauss–Kronrod integral of `f` over `[a, b]`.
///
/// Stops refining a panel once its Kronrod/Gauss discrepancy falls below
/// `max(abs_tol, rel_tol * |I|)`, where `I` is the first whole-interval
/// estimate.
pub fn adaptive_gauss_kronrod<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let whole = gk15(&f, a, b);
    let tol = abs_tol.max(rel_tol * whole.0.abs());
    adapt(&f, a, b, whole, tol, 40)
}

const GL5_X: [f64; 3] = [0.0, 0.538_469_310_105_683_1, 0.906_179_845_938_664];
const GL5_W: [f64; 3] = [
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// Composite five-point Gauss–Legendre rule with `panels` equal panels.
pub fn composite_gauss_legendre<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let panels = panels.max(1);
    let width = (b - a) / panels as f64;
    let half = 0.5 * width;
    let mut total = 0.0;
    for p in 0..panels {
        let center = a + (p as f64 + 0.5) * width;
        let mut s = GL5_W[0] * f(center);
        for k in 1..3 {
            s += GL5_W[k] * (f(center - half * GL5_X[k]) + f(center + half * GL5_X[k]));
        }
        total += s * half;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gauss_kronrod_polynomials_and_trig() {
        let v = adaptive_gauss_kronrod(|x| x.powi(5) - 3.0 * x * x, 0.0, 2.0, 1e-15, 1e-14);
        assert!((v - (64.0 / 6.0 - 8.0)).abs() < 1e-13);
        let v = adaptive_gauss_kronrod(|x| x.sin().powi(40), 0.0, PI, 1e-16, 1e-14);
        // Wallis: prod_{k=1}^{20} (2k-1)/(2k) * pi
        let wallis = (1..=20).fold(PI, |acc, k| acc * (2 * k - 1) as f64 / (2 * k) as f64);
        assert!((v - wallis).abs() < 1e-14, "{v} vs {wallis}");
    }

    #[test]
    fn gauss_legendre_exact_for_degree_nine() {
        let v = composite_gauss_legendre(|x| x.powi(9), 0.0, 1.0, 1);
        assert!((v - 0.1).abs() < 1e-15);
        let v = composite_gauss_legendre(|x| (-x).exp(), 0.0, 3.0, 64);
        assert!((v - (1.0 - (-3.0f64).exp())).abs() < 1e-14);
    }
}
