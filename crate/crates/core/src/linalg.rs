//! Small dense linear solves used by the Newton iterations.

use num_complex::Complex;
use num_traits::Num;

use crate::scalar::Real;

/// Solves `a x = rhs` in place by Gaussian elimination with partial pivoting.
/// `a` is row-major `n × n`; the solution overwrites `rhs`. Returns `false`
/// for a numerically singular matrix.
pub(crate) fn solve_in_place<F, M>(a: &mut [F], rhs: &mut [F], n: usize, magnitude: M) -> bool
where
    F: Num + Copy,
    M: Fn(&F) -> f64,
{
    for col in 0..n {
        let (mut best, mut best_mag) = (col, magnitude(&a[col * n + col]));
        for r in col + 1..n {
            let m = magnitude(&a[r * n + col]);
            if m > best_mag {
                best = r;
                best_mag = m;
            }
        }
        if !(best_mag > 0.0) || !best_mag.is_finite() {
            return false;
        }
        if best != col {
            for k in 0..n {
                a.swap(col * n + k, best * n + k);
            }
            rhs.swap(col, best);
        }
        let p = a[col * n + col];
        for r in col + 1..n {
            let f = a[r * n + col] / p;
            if f.is_zero() {
                continue;
            }
            for k in col..n {
                let v = a[col * n + k];
                a[r * n + k] = a[r * n + k] - f * v;
            }
            rhs[r] = rhs[r] - f * rhs[col];
        }
    }
    for col in (0..n).rev() {
        let mut s = rhs[col];
        for k in col + 1..n {
            s = s - a[col * n + k] * rhs[k];
        }
        rhs[col] = s / a[col * n + col];
    }
    true
}

pub(crate) fn solve_real<T: Real>(a: &mut [T], rhs: &mut [T], n: usize) -> bool {
    solve_in_place(a, rhs, n, |x: &T| x.abs().as_f64())
}

pub(crate) fn solve_complex<T: Real>(
    a: &mut [Complex<T>],
    rhs: &mut [Complex<T>],
    n: usize,
) -> bool {
    solve_in_place(a, rhs, n, |x: &Complex<T>| {
        (x.re.abs() + x.im.abs()).as_f64()
    })
}
