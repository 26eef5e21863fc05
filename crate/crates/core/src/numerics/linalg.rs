//! Dense kernels: determinants, Hankel elimination, the moment-to-recurrence
//! (Chebyshev) algorithm and symmetric tridiagonal eigenvalues.

use crate::error::{Error, Result};
use crate::scalar::{Field, Real};

/// Determinant by Gaussian elimination with partial pivoting.
///
/// An exactly zero pivot column gives a zero determinant, which is the right
/// answer for exact types and a signal of lost precision for floating ones.
pub fn lu_determinant<T: Field>(mut a: Vec<Vec<T>>, bits: u32) -> Result<T> {
    let n = a.len();
    if a.iter().any(|row| row.len() != n) {
        return Err(Error::InvalidArgument("determinant of a non-square matrix".into()));
    }
    let mut det = T::one(bits);
    for k in 0..n {
        let mut p = k;
        for i in k + 1..n {
            if a[i][k].abs_val() > a[p][k].abs_val() {
                p = i;
            }
        }
        if a[p][k].is_zero_val() {
            return Ok(T::zero(bits));
        }
        if p != k {
            a.swap(p, k);
            det = -det;
        }
        let pivot = a[k][k].clone();
        det = det * pivot.clone();
        for i in k + 1..n {
            let l = a[i][k].clone() / pivot.clone();
            if l.is_zero_val() {
                continue;
            }
            for j in k + 1..n {
                let v = a[i][j].clone() - l.clone() * a[k][j].clone();
                a[i][j] = v;
            }
        }
    }
    Ok(det)
}

/// `(μ_{i+j})` for `0 ≤ i, j < n`; with `shifted` the last column is replaced by
/// `(μ_{i+n})`.
pub fn hankel_matrix<T: Clone>(mu: &[T], n: usize, shifted: bool) -> Result<Vec<Vec<T>>> {
    let need = if n == 0 { 0 } else if shifted { 2 * n } else { 2 * n - 1 };
    if mu.len() < need {
        return Err(Error::InvalidArgument(format!("need {need} moments, have {}", mu.len())));
    }
    Ok((0..n)
        .map(|i| (0..n).map(|j| if shifted && j == n - 1 { mu[i + n].clone() } else { mu[i + j].clone() }).collect())
        .collect())
}

/// Output of one unpivoted elimination of the bordered Hankel matrix.
#[derive(Clone, Debug)]
pub struct HankelMinors<T> {
    /// `pivots[k] = D_{k+1}/D_k`.
    pub pivots: Vec<T>,
    /// `ratios[k] = D̃_{k+1}/D_{k+1}`.
    pub ratios: Vec<T>,
}

/// Leading principal minors of `(μ_{i+j})_{0≤i,j<m}` and of its shifted
/// variants, from one symmetric elimination of the m×(m+1) bordered matrix.
///
/// Needs `μ_0..μ_{2m−1}`. A non-positive pivot means the working precision no
/// longer resolves the moment matrix.
pub fn hankel_minors<T: Field>(mu: &[T], m: usize) -> Result<HankelMinors<T>> {
    if mu.len() < 2 * m {
        return Err(Error::InvalidArgument(format!("need {} moments, have {}", 2 * m, mu.len())));
    }
    let mut a: Vec<Vec<T>> = (0..m).map(|i| (0..=m).map(|j| mu[i + j].clone()).collect()).collect();
    let mut pivots = Vec::with_capacity(m);
    let mut ratios = Vec::with_capacity(m);
    for k in 0..m {
        let pivot = a[k][k].clone();
        if pivot.is_zero_val() || pivot < pivot.clone() - pivot.clone() {
            return Err(Error::InsufficientPrecision(format!("Hankel pivot {k} is not positive")));
        }
        ratios.push(a[k][k + 1].clone() / pivot.clone());
        for i in k + 1..m {
            let l = a[k][i].clone() / pivot.clone();
            let (head, tail) = a.split_at_mut(i);
            let src = &head[k];
            let row = &mut tail[0];
            for j in i..=m {
                let v = row[j].clone() - l.clone() * src[j].clone();
                row[j] = v;
            }
        }
        pivots.push(pivot);
    }
    Ok(HankelMinors { pivots, ratios })
}

/// Recurrence coefficients `α_0..α_{n−1}`, `β_0..β_{n−1}` (with `β_0 = μ_0`)
/// from the moments `μ_0..μ_{2n−1}` by the Chebyshev algorithm.
pub fn chebyshev_algorithm<T: Field>(mu: &[T], n: usize, bits: u32) -> Result<(Vec<T>, Vec<T>)> {
    if n == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    if mu.len() < 2 * n {
        return Err(Error::InvalidArgument(format!("need {} moments, have {}", 2 * n, mu.len())));
    }
    let positive = |v: &T| !v.is_zero_val() && !(*v < v.clone() - v.clone());
    if !positive(&mu[0]) {
        return Err(Error::InsufficientPrecision("zeroth moment is not positive".into()));
    }
    let zero = T::zero(bits);
    let mut sig_prev: Vec<T> = vec![zero.clone(); 2 * n];
    let mut sig: Vec<T> = mu[..2 * n].to_vec();
    let mut alpha = vec![mu[1].clone() / mu[0].clone()];
    let mut beta = vec![mu[0].clone()];
    for k in 1..n {
        let mut next = vec![zero.clone(); 2 * n];
        for l in k..2 * n - k {
            next[l] = sig[l + 1].clone()
                - alpha[k - 1].clone() * sig[l].clone()
                - beta[k - 1].clone() * sig_prev[l].clone();
        }
        if !positive(&next[k]) {
            return Err(Error::InsufficientPrecision(format!("modified moment σ[{k},{k}] is not positive")));
        }
        alpha.push(next[k + 1].clone() / next[k].clone() - sig[k].clone() / sig[k - 1].clone());
        beta.push(next[k].clone() / sig[k - 1].clone());
        sig_prev = sig;
        sig = next;
    }
    Ok((alpha, beta))
}

/// Eigenvalues, ascending, of the symmetric tridiagonal matrix with diagonal
/// `diag` and off-diagonal `off` (`off[i]` couples rows i and i+1), by the
/// implicit QL method.
pub fn tridiagonal_eigenvalues<T: Real>(diag: &[T], off: &[T], bits: u32) -> Result<Vec<T>> {
    let n = diag.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    if off.len() + 1 != n {
        return Err(Error::InvalidArgument("off-diagonal length must be one less than the diagonal".into()));
    }
    let mut d = diag.to_vec();
    let mut e: Vec<T> = off.to_vec();
    e.push(T::zero(bits));
    let eps = T::epsilon(bits);
    let one = T::one(bits);
    let two = T::from_i64(2, bits);
    let hypot = |a: &T, b: &T| (a.clone() * a.clone() + b.clone() * b.clone()).sqrt();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs_val() + d[m + 1].abs_val();
                if e[m].abs_val() <= eps.clone() * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::EigenNonConvergence { index: l });
            }
            let mut g = (d[l + 1].clone() - d[l].clone()) / (two.clone() * e[l].clone());
            let mut r = hypot(&g, &one);
            let signed_r = if g < T::zero(bits) { -r.abs_val() } else { r.abs_val() };
            g = d[m].clone() - d[l].clone() + e[l].clone() / (g + signed_r);
            let mut s = one.clone();
            let mut c = one.clone();
            let mut p = T::zero(bits);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s.clone() * e[i].clone();
                let b = c.clone() * e[i].clone();
                r = hypot(&f, &g);
                e[i + 1] = r.clone();
                if r.is_zero_val() {
                    d[i + 1] = d[i + 1].clone() - p.clone();
                    e[m] = T::zero(bits);
                    underflow = true;
                    break;
                }
                s = f / r.clone();
                c = g.clone() / r.clone();
                g = d[i + 1].clone() - p.clone();
                r = (d[i].clone() - g.clone()) * s.clone() + two.clone() * c.clone() * b.clone();
                p = s.clone() * r.clone();
                d[i + 1] = g.clone() + p.clone();
                g = c.clone() * r.clone() - b;
            }
            if underflow {
                continue;
            }
            d[l] = d[l].clone() - p;
            e[l] = g;
            e[m] = T::zero(bits);
        }
    }
    d.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    Ok(d)
}
