//! Flat-buffer dense kernels for the MLP denoiser. Row-major layouts,
//! deterministic accumulation order.


/// `out[r][o] += sum_k x[r][k] * w[o][k]` — x is `rows x k`, w is `o_dim x k`.
///
/// This is the forward shape (`y = x W^T`); weights keep their rows hot in
/// cache by blocking over input rows.
pub fn matmul_xwt_acc(x: &[f64], rows: usize, k: usize, w: &[f64], o_dim: usize, out: &mut [f64]) {
    debug_assert_eq!(x.len(), rows * k);
    debug_assert_eq!(w.len(), o_dim * k);
    debug_assert_eq!(out.len(), rows * o_dim);
    const RB: usize = 4;
    let mut r = 0;
    while r + RB <= rows {
        let x0 = &x[r * k..(r + 1) * k];
        let x1 = &x[(r + 1) * k..(r + 2) * k];
        let x2 = &x[(r + 2) * k..(r + 3) * k];
        let x3 = &x[(r + 3) * k..(r + 4) * k];
        for o in 0..o_dim {
            let wo = &w[o * k..(o + 1) * k];
            let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
            for i in 0..k {
                let wi = wo[i];
                s0 += x0[i] * wi;
                s1 += x1[i] * wi;
                s2 += x2[i] * wi;
                s3 += x3[i] * wi;
            }
            out[r * o_dim + o] += s0;
            out[(r + 1) * o_dim + o] += s1;
            out[(r + 2) * o_dim + o] += s2;
            out[(r + 3) * o_dim + o] += s3;
        }
        r += RB;
    }
    while r < rows {
        let xr = &x[r * k..(r + 1) * k];
        for o in 0..o_dim {
            let wo = &w[o * k..(o + 1) * k];
            let mut s = 0.0;
            for i in 0..k {
                s += xr[i] * wo[i];
            }
            out[r * o_dim + o] += s;
        }
        r += 1;
    }
}

/// `dx[r][i] += sum_o dy[r][o] * w[o][i]` — backprop to inputs (`dx = dy W`).
pub fn matmul_xw_acc(dy: &[f64], rows: usize, o_dim: usize, w: &[f64], k: usize, dx: &mut [f64]) {
    debug_assert_eq!(dy.len(), rows * o_dim);
    debug_assert_eq!(w.len(), o_dim * k);
    debug_assert_eq!(dx.len(), rows * k);
    for r in 0..rows {
        let dyr = &dy[r * o_dim..(r + 1) * o_dim];
        let dxr = &mut dx[r * k..(r + 1) * k];
        for o in 0..o_dim {
            let g = dyr[o];
            if g == 0.0 {
                continue;
            }
            let wo = &w[o * k..(o + 1) * k];
            for i in 0..k {
                dxr[i] += g * wo[i];
            }
        }
    }
}

/// `dw[o][i] += sum_r dy[r][o] * x[r][i]` — weight gradient (`dW = dY^T X`).
pub fn matmul_ytx_acc(dy: &[f64], x: &[f64], rows: usize, o_dim: usize, k: usize, dw: &mut [f64]) {
    debug_assert_eq!(dy.len(), rows * o_dim);
    debug_assert_eq!(x.len(), rows * k);
    debug_assert_eq!(dw.len(), o_dim * k);
    for r in 0..rows {
        let dyr = &dy[r * o_dim..(r + 1) * o_dim];
        let xr = &x[r * k..(r + 1) * k];
        for o in 0..o_dim {
            let g = dyr[o];
            if g == 0.0 {
                continue;
            }
            let dwo = &mut dw[o * k..(o + 1) * k];
            for i in 0..k {
                dwo[i] += g * xr[i];
            }
        }
    }
}

/// Column sums of `dy` into `db`.
pub fn col_sum_acc(dy: &[f64], rows: usize, o_dim: usize, db: &mut [f64]) {
    debug_assert_eq!(db.len(), o_dim);
    for r in 0..rows {
        let dyr = &dy[r * o_dim..(r + 1) * o_dim];
        for o in 0..o_dim {
            db[o] += dyr[o];
        }
    }
}

/// Naive reference used by tests.
#[cfg(test)]
pub fn matmul_xwt_ref(x: &[f64], rows: usize, k: usize, w: &[f64], o_dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; rows * o_dim];
    for r in 0..rows {
        for o in 0..o_dim {
            let mut s = 0.0;
            for i in 0..k {
                s += x[r * k + i] * w[o * k + i];
            }
            out[r * o_dim + o] = s;
        }
    }
    out
}



#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn blocked_matmul_matches_reference() {
        let mut r = rng::chacha(1, &[9]);
        for &(rows, k, o) in &[(1usize, 3usize, 2usize), (4, 8, 5), (7, 16, 3), (13, 5, 11)] {
            let x = rng::normal_vec(&mut r, rows * k);
            let w = rng::normal_vec(&mut r, o * k);
            let mut out = alloc::vec![0.0; rows * o];
            matmul_xwt_acc(&x, rows, k, &w, o, &mut out);
            let reference = matmul_xwt_ref(&x, rows, k, &w, o);
            for (a, b) in out.iter().zip(reference.iter()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
