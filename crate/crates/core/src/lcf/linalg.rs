//! Row-major dense kernels used by the encoder. Shapes are passed explicitly;
//! callers guarantee slice lengths.

/// `x (n×d_in) · w (d_in×d_out) + b`.
pub fn linear(x: &[f64], w: &[f64], b: &[f64], n: usize, d_in: usize, d_out: usize) -> Vec<f64> {
    let mut y = Vec::with_capacity(n * d_out);
    for _ in 0..n {
        y.extend_from_slice(b);
    }
    for i in 0..n {
        let xi = &x[i * d_in..(i + 1) * d_in];
        let yi = &mut y[i * d_out..(i + 1) * d_out];
        for (k, &xv) in xi.iter().enumerate() {
            if xv == 0.0 {
                continue;
            }
            let wk = &w[k * d_out..(k + 1) * d_out];
            for (yv, &wv) in yi.iter_mut().zip(wk) {
                *yv += xv * wv;
            }
        }
    }
    y
}

/// Backward of [`linear`]: accumulates `dw += xᵀ·dy`, `db += Σ dy` and returns
/// `dx = dy·wᵀ`.
#[allow(clippy::too_many_arguments)]
pub fn linear_backward(
    x: &[f64],
    w: &[f64],
    dy: &[f64],
    dw: &mut [f64],
    db: &mut [f64],
    n: usize,
    d_in: usize,
    d_out: usize,
) -> Vec<f64> {
    let mut dx = vec![0.0; n * d_in];
    for i in 0..n {
        let xi = &x[i * d_in..(i + 1) * d_in];
        let dyi = &dy[i * d_out..(i + 1) * d_out];
        for (dbv, &g) in db.iter_mut().zip(dyi) {
            *dbv += g;
        }
        let dxi = &mut dx[i * d_in..(i + 1) * d_in];
        for k in 0..d_in {
            let wk = &w[k * d_out..(k + 1) * d_out];
            let dwk = &mut dw[k * d_out..(k + 1) * d_out];
            let xv = xi[k];
            let mut acc = 0.0;
            for j in 0..d_out {
                dwk[j] += xv * dyi[j];
                acc += dyi[j] * wk[j];
            }
            dxi[k] = acc;
        }
    }
    dx
}

pub const LN_EPS: f64 = 1e-5;

pub struct LayerNormCache {
    pub xhat: Vec<f64>,
    pub inv_std: Vec<f64>,
}

pub fn layer_norm(x: &[f64], gamma: &[f64], beta: &[f64], n: usize, d: usize) -> (Vec<f64>, LayerNormCache) {
    let mut y = vec![0.0; n * d];
    let mut xhat = vec![0.0; n * d];
    let mut inv_std = vec![0.0; n];
    for i in 0..n {
        let row = &x[i * d..(i + 1) * d];
        let mean = row.iter().sum::<f64>() / d as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
        let is = 1.0 / (var + LN_EPS).sqrt();
        inv_std[i] = is;
        for j in 0..d {
            let h = (row[j] - mean) * is;
            xhat[i * d + j] = h;
            y[i * d + j] = h * gamma[j] + beta[j];
        }
    }
    (y, LayerNormCache { xhat, inv_std })
}

pub fn layer_norm_backward(
    cache: &LayerNormCache,
    gamma: &[f64],
    dy: &[f64],
    dgamma: &mut [f64],
    dbeta: &mut [f64],
    n: usize,
    d: usize,
) -> Vec<f64> {
    let mut dx = vec![0.0; n * d];
    for i in 0..n {
        let xh = &cache.xhat[i * d..(i + 1) * d];
        let g = &dy[i * d..(i + 1) * d];
        let mut sum_dxhat = 0.0;
        let mut sum_dxhat_xhat = 0.0;
        for j in 0..d {
            dgamma[j] += g[j] * xh[j];
            dbeta[j] += g[j];
            let dxh = g[j] * gamma[j];
            sum_dxhat += dxh;
            sum_dxhat_xhat += dxh * xh[j];
        }
        let is = cache.inv_std[i];
        for j in 0..d {
            let dxh = g[j] * gamma[j];
            dx[i * d + j] = is / d as f64 * (d as f64 * dxh - sum_dxhat - xh[j] * sum_dxhat_xhat);
        }
    }
    dx
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)

/// Tanh approximation of GELU.
pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + 0.044715 * x * x * x)).tanh())
}

pub fn gelu_grad(x: f64) -> f64 {
    let inner = GELU_C * (x + 0.044715 * x * x * x);
    let t = inner.tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * 0.044715 * x * x)
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// `ln Σ exp(logits)`.
pub fn log_sum_exp(logits: &[f64]) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + logits.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_small_case() {
        // [1 2] · [[1 0 1], [0 1 1]] + [0.5 0 0]
        let y = linear(&[1.0, 2.0], &[1.0, 0.0, 1.0, 0.0, 1.0, 1.0], &[0.5, 0.0, 0.0], 1, 2, 3);
        assert_eq!(y, vec![1.5, 2.0, 3.0]);
    }

    #[test]
    fn gelu_grad_matches_difference() {
        for &x in &[-3.0, -0.7, 0.0, 0.4, 2.5] {
            let h = 1e-6;
            let fd = (gelu(x + h) - gelu(x - h)) / (2.0 * h);
            assert!((fd - gelu_grad(x)).abs() < 1e-8, "x={x}");
        }
    }

    #[test]
    fn softmax_sums_to_one() {
        let p = softmax(&[1000.0, 1001.0, -5.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p[1] > p[0]);
    }

    #[test]
    fn layer_norm_rows_are_standardized() {
        let x = [1.0, 2.0, 3.0, 4.0, -1.0, 0.0, 5.0, 2.0];
        let (y, _) = layer_norm(&x, &[1.0; 4], &[0.0; 4], 2, 4);
        for row in y.chunks(4) {
            let mean: f64 = row.iter().sum::<f64>() / 4.0;
            assert!(mean.abs() < 1e-12);
        }
    }
}
