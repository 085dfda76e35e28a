//! Dense symmetric eigenvalues and empirical spectra.
//!
//! Householder reduction to tridiagonal form followed by the implicit-shift QL
//! iteration. Only eigenvalues are computed.

use std::fmt::Write as _;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Square row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T = f64> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> DenseMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            if r.len() != n {
                return Err(Error::invalid("matrix is not square"));
            }
            data.extend_from_slice(r);
        }
        Ok(DenseMatrix { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn trace(&self) -> T {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    /// `self * v`.
    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(v).map(|(&a, &x)| a * x).sum())
            .collect()
    }

    pub fn is_symmetric(&self, rel_tol: T) -> bool {
        let scale = self.max_abs().max(T::min_positive_value());
        for i in 0..self.n {
            for j in 0..i {
                if (self[(i, j)] - self[(j, i)]).abs() > rel_tol * scale {
                    return false;
                }
            }
        }
        true
    }
}

impl<T> Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.n + j]
    }
}

impl<T> IndexMut<(usize, usize)> for DenseMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.n + j]
    }
}

/// Eigenvalues sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSample<T = f64> {
    pub eigenvalues: Vec<T>,
}

impl<T: Real> SpectrumSample<T> {
    pub fn from_values(mut values: Vec<T>) -> Self {
        values.sort_by(|a, b| a.partial_cmp(b).expect("eigenvalues are finite"));
        SpectrumSample {
            eigenvalues: values,
        }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn max(&self) -> Option<T> {
        self.eigenvalues.last().copied()
    }

    pub fn min(&self) -> Option<T> {
        self.eigenvalues.first().copied()
    }

    /// Removes, for every value in `old`, the nearest remaining eigenvalue.
    /// Used to strip the spectrum of a base graph out of the spectrum of one of
    /// its lifts.
    pub fn without(&self, old: &SpectrumSample<T>) -> SpectrumSample<T> {
        let mut left = self.eigenvalues.clone();
        for &x in &old.eigenvalues {
            if left.is_empty() {
                break;
            }
            let pos = left.partition_point(|&y| y < x);
            let idx = match (pos.checked_sub(1), (pos < left.len()).then_some(pos)) {
                (Some(a), Some(b)) => {
                    if (x - left[a]).abs() <= (left[b] - x).abs() {
                        a
                    } else {
                        b
                    }
                }
                (Some(a), None) => a,
                (None, Some(b)) => b,
                (None, None) => unreachable!(),
            };
            left.remove(idx);
        }
        SpectrumSample { eigenvalues: left }
    }
}

/// All eigenvalues of a symmetric matrix.
pub fn sym_eigenvalues<T: Real>(m: &DenseMatrix<T>) -> Result<SpectrumSample<T>> {
    let n = m.n();
    let sym_tol = T::lit(1e-12).max(T::epsilon() * T::lit(8.0));
    if !m.is_symmetric(sym_tol) {
        return Err(Error::invalid("matrix is not symmetric"));
    }
    if n == 0 {
        return Ok(SpectrumSample {
            eigenvalues: Vec::new(),
        });
    }
    let (mut d, mut e) = tridiagonalize(m);
    tridiagonal_ql(&mut d, &mut e)?;
    Ok(SpectrumSample::from_values(d))
}

/// Householder reduction of a symmetric matrix to tridiagonal form. Returns
/// the diagonal `d` and the subdiagonal `e` with `e[i]` coupling `i` and `i-1`
/// (`e[0] = 0`). The full active block is updated so that all inner loops run
/// along rows.
fn tridiagonalize<T: Real>(m: &DenseMatrix<T>) -> (Vec<T>, Vec<T>) {
    let n = m.n();
    let mut a = m.data.clone();
    let mut e = vec![T::zero(); n];
    let mut u = vec![T::zero(); n];
    let mut p = vec![T::zero(); n];
    for i in (1..n).rev() {
        let l = i - 1;
        let row_i = &a[i * n..i * n + i];
        let scale: T = row_i.iter().map(|x| x.abs()).sum();
        if l == 0 || scale.is_zero() {
            e[i] = a[i * n + l];
            continue;
        }
        let mut h = T::zero();
        for k in 0..=l {
            u[k] = row_i[k] / scale;
            h += u[k] * u[k];
        }
        let f = u[l];
        let g = if f >= T::zero() { -h.sqrt() } else { h.sqrt() };
        e[i] = scale * g;
        h -= f * g;
        u[l] = f - g;
        let mut up = T::zero();
        for j in 0..=l {
            let row = &a[j * n..j * n + i];
            let s: T = row.iter().zip(&u[..i]).map(|(&x, &y)| x * y).sum();
            p[j] = s / h;
            up += p[j] * u[j];
        }
        let kk = up / (h + h);
        for j in 0..=l {
            p[j] -= kk * u[j];
        }
        for j in 0..=l {
            let (uj, pj) = (u[j], p[j]);
            let row = &mut a[j * n..j * n + i];
            for ((x, &uk), &pk) in row.iter_mut().zip(&u[..i]).zip(&p[..i]) {
                *x -= uj * pk + pj * uk;
            }
        }
    }
    let d = (0..n).map(|i| a[i * n + i]).collect();
    (d, e)
}

/// Implicit-shift QL on a symmetric tridiagonal matrix; eigenvalues overwrite
/// `d`. Fails after `30 n` sweeps in total.
fn tridiagonal_ql<T: Real>(d: &mut [T], e: &mut [T]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();
    let two = T::lit(2.0);
    let max_sweeps = 30 * n;
    let mut sweeps = 0usize;
    for l in 0..n {
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= T::epsilon() * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > max_sweeps {
                return Err(Error::Numeric(format!(
                    "QL iteration did not converge after {max_sweeps} sweeps"
                )));
            }
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(T::one());
            g = d[m] - d[l] + e[l] / (g + if g >= T::zero() { r } else { -r });
            let (mut s, mut c, mut p) = (T::one(), T::one(), T::zero());
            let mut underflow = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r.is_zero() {
                    d[i + 1] -= p;
                    e[m] = T::zero();
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
    Ok(())
}

/// `(1/N) Σ λ^k`.
pub fn empirical_moment<T: Real>(s: &SpectrumSample<T>, k: u32) -> T {
    if s.is_empty() {
        return T::zero();
    }
    let total: T = s.eigenvalues.iter().map(|&x| x.powi(k as i32)).sum();
    total / T::count(s.len())
}

/// Uniform-bin histogram normalized to unit mass over the values in range.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram<T = f64> {
    pub lo: T,
    pub hi: T,
    pub mass: Vec<T>,
    /// Sample values that fell outside `[lo, hi]` and were not counted.
    pub outside: usize,
}

impl<T: Real> Histogram<T> {
    pub fn bins(&self) -> usize {
        self.mass.len()
    }

    pub fn width(&self) -> T {
        (self.hi - self.lo) / T::count(self.bins())
    }

    pub fn edges(&self) -> Vec<T> {
        let w = self.width();
        (0..=self.bins())
            .map(|k| self.lo + w * T::count(k))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let edges = self.edges();
        let mut s = String::from("x_left,x_right,mass\n");
        for (k, m) in self.mass.iter().enumerate() {
            let _ = writeln!(
                s,
                "{:.16e},{:.16e},{:.16e}",
                edges[k].as_f64(),
                edges[k + 1].as_f64(),
                m.as_f64()
            );
        }
        s
    }
}

/// Histogram of a sample. Without a range, the sample's own extent is used.
pub fn histogram<T: Real>(
    s: &SpectrumSample<T>,
    bins: usize,
    range: Option<(T, T)>,
) -> Result<Histogram<T>> {
    if s.is_empty() {
        return Err(Error::invalid("empty spectrum sample"));
    }
    if bins == 0 {
        return Err(Error::invalid("histogram needs at least one bin"));
    }
    let (lo, hi) = match range {
        Some((lo, hi)) => {
            if !(lo < hi) {
                return Err(Error::invalid("histogram range must satisfy lo < hi"));
            }
            (lo, hi)
        }
        None => {
            let (lo, hi) = (s.min().unwrap(), s.max().unwrap());
            if lo < hi {
                (lo, hi)
            } else {
                let half = T::lit(0.5);
                (lo - half, hi + half)
            }
        }
    };
    let width = (hi - lo) / T::count(bins);
    let mut counts = vec![0usize; bins];
    let mut outside = 0usize;
    for &x in &s.eigenvalues {
        if x < lo || x > hi {
            outside += 1;
            continue;
        }
        let k = ((x - lo) / width)
            .floor()
            .to_usize()
            .unwrap_or(bins - 1)
            .min(bins - 1);
        counts[k] += 1;
    }
    let inside = s.len() - outside;
    if inside == 0 {
        return Err(Error::invalid(
            "no sample values inside the histogram range",
        ));
    }
    let total = T::count(inside);
    let mass = counts.iter().map(|&c| T::count(c) / total).collect();
    Ok(Histogram {
        lo,
        hi,
        mass,
        outside,
    })
}
