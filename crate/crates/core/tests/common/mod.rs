//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use hfce::{CMatrix, CVector, Complex64};

/// Least squares on the given columns by Gaussian elimination with partial
/// pivoting on the normal equations `AᴴA x = Aᴴy`.
#[allow(clippy::needless_range_loop)]
pub fn lstsq_normal(a: &CMatrix, cols: &[usize], y: &CVector) -> Vec<Complex64> {
    let k = cols.len();
    let m = a.nrows();
    let mut g = vec![vec![Complex64::new(0.0, 0.0); k + 1]; k];
    for (p, &i) in cols.iter().enumerate() {
        for (q, &j) in cols.iter().enumerate() {
            g[p][q] = (0..m).map(|r| a[(r, i)].conj() * a[(r, j)]).sum();
        }
        g[p][k] = (0..m).map(|r| a[(r, i)].conj() * y[r]).sum();
    }
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&x, &y| g[x][col].norm().total_cmp(&g[y][col].norm()))
            .unwrap();
        g.swap(col, piv);
        let d = g[col][col];
        for row in col + 1..k {
            let f = g[row][col] / d;
            for c in col..=k {
                let v = g[col][c];
                g[row][c] -= f * v;
            }
        }
    }
    let mut x = vec![Complex64::new(0.0, 0.0); k];
    for row in (0..k).rev() {
        let s: Complex64 = (row + 1..k).map(|c| g[row][c] * x[c]).sum();
        x[row] = (g[row][k] - s) / g[row][row];
    }
    x
}

/// `‖y − A_S x‖` for the oracle fit on `cols`.
pub fn lstsq_residual(a: &CMatrix, cols: &[usize], y: &CVector) -> f64 {
    let x = lstsq_normal(a, cols, y);
    let mut r = y.clone();
    for (p, &j) in cols.iter().enumerate() {
        for i in 0..a.nrows() {
            r[i] -= a[(i, j)] * x[p];
        }
    }
    r.norm()
}

/// Polar grid size by direct enumeration of `r_s = N²d²(1 − θ²)/(2λβ²s)`
/// on the angle grid `θ_n = (2n − N − 1)/N`.
pub fn polar_count(n: usize, d: f64, lambda: f64, beta: f64, rho_min: f64, far: bool) -> usize {
    let mut total = 0;
    for k in 1..=n {
        let theta = (2.0 * k as f64 - n as f64 - 1.0) / n as f64;
        if far {
            total += 1;
        }
        let mut s = 1u64;
        loop {
            let r = (n * n) as f64 * d * d * (1.0 - theta * theta) / (2.0 * lambda * beta * beta * s as f64);
            if r < rho_min || rho_min <= 0.0 {
                break;
            }
            total += 1;
            s += 1;
        }
    }
    total
}

pub fn nmse(h: &CVector, h_hat: &CVector) -> f64 {
    (h - h_hat).norm_squared() / h.norm_squared()
}
