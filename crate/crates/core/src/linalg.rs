//! Small dense helpers. Matrices here are at most 6x6.

/// Determinant by Gaussian elimination with partial pivoting.
pub fn det(mut m: Vec<Vec<f64>>) -> f64 {
    let n = m.len();
    let mut d = 1.0;
    for c in 0..n {
        let p = (c..n)
            .max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs()))
            .unwrap();
        if m[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            m.swap(p, c);
            d = -d;
        }
        d *= m[c][c];
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            if f != 0.0 {
                for j in c..n {
                    m[r][j] -= f * m[c][j];
                }
            }
        }
    }
    d
}

/// Solves `a x = b`; `None` when the system is singular.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = a.len();
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs()))?;
        if a[p][c].abs() < 1e-14 {
            return None;
        }
        a.swap(p, c);
        b.swap(p, c);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for j in c..n {
                a[r][j] -= f * a[c][j];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|j| a[r][j] * x[j]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Determinant of a symmetric positive semidefinite Gram matrix, clamped at 0.
pub fn gram_det(g: &[f64], k: usize) -> f64 {
    match k {
        0 => 1.0,
        1 => g[0].max(0.0),
        2 => (g[0] * g[3] - g[1] * g[2]).max(0.0),
        _ => {
            let m = (0..k).map(|i| g[i * k..(i + 1) * k].to_vec()).collect();
            det(m).max(0.0)
        }
    }
}
