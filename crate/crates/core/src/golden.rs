//! Golden-section search for a minimum of a unimodal scalar function.

/// `(√5 − 1)/2`
const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub value: f64,
    pub iterations: usize,
    /// Final bracket; contains `x`.
    pub lo: f64,
    pub hi: f64,
}

/// Shrinks `[lo, hi]` until its width is at most `width_tol` (or `max_iter`
/// reductions have been made) and returns the best interior point seen.
///
/// Non-finite objective values are treated as larger than any finite value.
pub fn golden_section<F>(mut f: F, lo: f64, hi: f64, width_tol: f64, max_iter: usize) -> Minimum
where
    F: FnMut(f64) -> f64,
{
    let eval = |f: &mut F, x: f64| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = eval(&mut f, c);
    let mut fd = eval(&mut f, d);
    let mut iterations = 0;
    while b - a > width_tol && iterations < max_iter {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = eval(&mut f, c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = eval(&mut f, d);
        }
        iterations += 1;
    }
    let (x, value) = if fc <= fd { (c, fc) } else { (d, fd) };
    Minimum {
        x,
        value,
        iterations,
        lo: a,
        hi: b,
    }
}
