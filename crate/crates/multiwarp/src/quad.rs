//! Small numerical kernels: adaptive Gauss–Kronrod quadrature, bracketed
//! root refinement, golden-section minimization, pairwise summation and
//! tiny least-squares solves.

use crate::error::{Error, Result};

// Gauss 7 / Kronrod 15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

fn gk15<F: Fn(f64) -> Result<f64>>(f: &F, a: f64, b: f64) -> Result<(f64, f64)> {
    let c = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut kronrod = WGK[7] * f(c)?;
    let mut gauss = WG[3] * f(c)?;
    for (i, &x) in XGK.iter().enumerate().take(7) {
        let fa = f(c - half * x)?;
        let fb = f(c + half * x)?;
        kronrod += WGK[i] * (fa + fb);
        if i % 2 == 1 {
            gauss += WG[i / 2] * (fa + fb);
        }
    }
    kronrod *= half;
    gauss *= half;
    Ok((kronrod, (kronrod - gauss).abs()))
}

/// Adaptive Gauss–Kronrod integration of `f` over `[a, b]` to absolute
/// tolerance `tol`. The integrand is only evaluated at interior nodes, so
/// integrable endpoint behaviour is allowed.
pub fn integrate<F: Fn(f64) -> Result<f64>>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    fn recurse<F: Fn(f64) -> Result<f64>>(
        f: &F,
        a: f64,
        b: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64> {
        let (k, err) = gk15(f, a, b)?;
        if err <= tol || depth >= 60 || (b - a).abs() < f64::EPSILON * (a.abs() + b.abs() + 1.0) {
            return Ok(k);
        }
        let mid = 0.5 * (a + b);
        Ok(recurse(f, a, mid, tol / 2.0, depth + 1)?
            + recurse(f, mid, b, tol / 2.0, depth + 1)?)
    }
    recurse(f, a, b, tol, 0)
}

/// Refine a root of `f` inside the bracket `[lo, hi]` (where `f` changes
/// sign) by bisection, to width `tol`.
pub fn bisect_root<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Bracket(format!(
            "no sign change on [{lo}, {hi}]"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol * (1.0 + mid.abs()) {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Golden-section minimization of `f` on `[a, b]`; returns `(x, f(x))`.
pub fn golden_min<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = 0.618_033_988_749_894_9;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol * (1.0 + a.abs() + b.abs()) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Pairwise (cascade) summation; deterministic and more accurate than a
/// left fold for long grids.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => pairwise_sum(&xs[..n / 2]) + pairwise_sum(&xs[n / 2..]),
    }
}

pub fn pairwise_mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        f64::NAN
    } else {
        pairwise_sum(xs) / xs.len() as f64
    }
}

/// `n` evenly spaced points covering `[a, b]` inclusively.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![0.5 * (a + b)];
    }
    let step = (b - a) / (n - 1) as f64;
    (0..n).map(|i| a + step * i as f64).collect()
}

/// Least squares `min ||A x - y||` via normal equations; `A` is given by
/// rows. Intended for the 2- and 3-parameter lapse family fits.
pub fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>> {
    let k = rows.first().map(|r| r.len()).unwrap_or(0);
    if k == 0 || rows.len() != y.len() || rows.len() < k {
        return Err(Error::Validation("least squares: bad shapes".into()));
    }
    let mut ata = vec![vec![0.0; k]; k];
    let mut aty = vec![0.0; k];
    for (row, &yi) in rows.iter().zip(y) {
        for i in 0..k {
            aty[i] += row[i] * yi;
            for j in 0..k {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    // Gaussian elimination with partial pivoting
    let mut m = ata;
    let mut rhs = aty;
    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        if m[pivot][col].abs() < 1e-300 {
            return Err(Error::Validation("least squares: singular system".into()));
        }
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in col + 1..k {
            let factor = m[row][col] / m[col][col];
            for j in col..k {
                m[row][j] -= factor * m[col][j];
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    let mut x = vec![0.0; k];
    for row in (0..k).rev() {
        let mut acc = rhs[row];
        for j in row + 1..k {
            acc -= m[row][j] * x[j];
        }
        x[row] = acc / m[row][row];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomial_exactly() {
        let v = integrate(&|x| Ok(x * x), 0.0, 3.0, 1e-12).unwrap();
        assert!((v - 9.0).abs() < 1e-12);
    }

    #[test]
    fn integrates_oscillatory() {
        let v = integrate(&|x: f64| Ok(x.sin()), 0.0, std::f64::consts::PI, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-11);
    }

    #[test]
    fn integrates_endpoint_singularity() {
        // int_0^1 x^{-1/2} dx = 2, integrable endpoint singularity
        let v = integrate(&|x: f64| Ok(1.0 / x.sqrt()), 0.0, 1.0, 1e-10).unwrap();
        assert!((v - 2.0).abs() < 1e-6, "got {v}");
    }

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect_root(&|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn golden_finds_parabola_min() {
        let (x, _) = golden_min(&|x| (x - 1.3) * (x - 1.3), -4.0, 4.0, 1e-12);
        assert!((x - 1.3).abs() < 1e-8);
    }

    #[test]
    fn least_squares_recovers_quadratic() {
        let xs = linspace(0.0, 2.0, 17);
        let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x * x, x, 1.0]).collect();
        let y: Vec<f64> = xs.iter().map(|&x| 2.0 * x * x - x + 0.5).collect();
        let c = least_squares(&rows, &y).unwrap();
        assert!((c[0] - 2.0).abs() < 1e-10);
        assert!((c[1] + 1.0).abs() < 1e-10);
        assert!((c[2] - 0.5).abs() < 1e-10);
    }
}
