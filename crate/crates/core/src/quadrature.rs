//! Small composite quadrature rules shared by the data constants, the cone
//! integrals and the frame checks.

/// Composite Simpson rule on `[lo, hi]` with `n` panels (rounded up to even).
pub fn simpson<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let n = (n.max(2) + 1) & !1;
    let h = (hi - lo) / n as f64;
    let mut acc = f(lo) + f(hi);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(lo + i as f64 * h);
    }
    acc * h / 3.0
}

/// Composite trapezoid rule on `[lo, hi]` with `n` panels.
pub fn trapezoid<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let n = n.max(1);
    let h = (hi - lo) / n as f64;
    let mut acc = 0.5 * (f(lo) + f(hi));
    for i in 1..n {
        acc += f(lo + i as f64 * h);
    }
    acc * h
}

/// Composite trapezoid over `[lo, hi]` split at every breakpoint strictly
/// inside the interval, `n` panels per piece. Keeps the rule second order when
/// the integrand has kinks at known locations.
pub fn trapezoid_pieces<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, breaks: &[f64], n: usize) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let mut cuts: Vec<f64> = Vec::with_capacity(breaks.len() + 2);
    cuts.push(lo);
    cuts.extend(breaks.iter().copied().filter(|&c| c > lo && c < hi));
    cuts.push(hi);
    cuts.sort_by(|x, y| x.total_cmp(y));
    cuts.dedup();
    cuts.windows(2).map(|w| trapezoid(&f, w[0], w[1], n)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_is_exact_on_cubics() {
        let v = simpson(|x| x * x * x - 2.0 * x + 1.0, -1.0, 2.0, 4);
        assert!((v - (15.0 / 4.0 - 3.0 + 3.0)).abs() < 1e-13);
    }

    #[test]
    fn trapezoid_second_order() {
        let exact = 1.0 - (-1.0f64).exp();
        let e1 = (trapezoid(|x| (-x).exp(), 0.0, 1.0, 16) - exact).abs();
        let e2 = (trapezoid(|x| (-x).exp(), 0.0, 1.0, 32) - exact).abs();
        let ratio = e1 / e2;
        assert!((3.9..4.1).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn pieces_handle_kinks() {
        let v = trapezoid_pieces(|x: f64| x.abs(), -1.0, 2.0, &[0.0], 3);
        assert!((v - 2.5).abs() < 1e-14);
        assert_eq!(trapezoid_pieces(|x| x, 1.0, 1.0, &[], 8), 0.0);
    }
}
