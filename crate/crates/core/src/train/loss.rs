use ndarray::{Array1, Array2, Axis};

use super::{Result, TrainError};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LossOptions {
    /// Accept a single pair (loss 0) for diagnostics.
    pub allow_singleton: bool,
}

/// Loss value and its gradients with respect to both embedding matrices
/// and `ln tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossGrad {
    pub loss: f64,
    pub d_audio: Array2<f64>,
    pub d_text: Array2<f64>,
    pub d_log_tau: f64,
}

fn normalize_rows(m: &Array2<f64>, side: &'static str) -> Result<(Array2<f64>, Array1<f64>)> {
    let norms: Array1<f64> = m.map_axis(Axis(1), |r| r.dot(&r).sqrt());
    if let Some(row) = norms.iter().position(|&n| n == 0.0 || !n.is_finite()) {
        return Err(TrainError::ZeroNormRow { side, row });
    }
    let unit = m / &norms.view().insert_axis(Axis(1));
    Ok((unit, norms))
}

fn log_softmax_rows(z: &Array2<f64>) -> Array2<f64> {
    let mut out = z.clone();
    for mut row in out.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let log_sum = row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        row.mapv_inplace(|v| (v - max) - log_sum);
    }
    out
}

fn check(audio: &Array2<f64>, text: &Array2<f64>, tau: f64, opts: LossOptions) -> Result<()> {
    if audio.dim() != text.dim() {
        return Err(TrainError::DimMismatch(format!(
            "audio {:?} vs text {:?}",
            audio.dim(),
            text.dim()
        )));
    }
    let n = audio.nrows();
    if n < 2 && !(opts.allow_singleton && n == 1) {
        return Err(TrainError::DegenerateBatch(n));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(TrainError::NonPositiveTau(tau));
    }
    Ok(())
}

/// Symmetric InfoNCE over cosine similarities:
///
/// `L = -1/(2N) sum_i [ log softmax_j(s_ij / tau)_i + log softmax_j(s_ji / tau)_i ]`
///
/// where `s_ij` is the cosine similarity of audio row i and text row j.
pub fn contrastive_loss(audio: &Array2<f64>, text: &Array2<f64>, tau: f64, opts: LossOptions) -> Result<f64> {
    Ok(contrastive_loss_grad(audio, text, tau.ln(), opts)?.loss)
}

pub fn contrastive_loss_grad(
    audio: &Array2<f64>,
    text: &Array2<f64>,
    log_tau: f64,
    opts: LossOptions,
) -> Result<LossGrad> {
    let tau = log_tau.exp();
    check(audio, text, tau, opts)?;
    let n = audio.nrows();
    let (ua, na) = normalize_rows(audio, "audio")?;
    let (ut, nt) = normalize_rows(text, "text")?;
    let sim = ua.dot(&ut.t());
    let logits = &sim / tau;

    let row_lp = log_softmax_rows(&logits);
    let col_lp = log_softmax_rows(&logits.t().to_owned());
    let nf = n as f64;
    let loss = -(0..n).map(|i| row_lp[[i, i]] + col_lp[[i, i]]).sum::<f64>() / (2.0 * nf);

    // dL/dlogits = (P_row + P_col - 2I) / 2N, P_col normalized down columns
    let mut g = row_lp.mapv(f64::exp) + &col_lp.t().mapv(f64::exp);
    for i in 0..n {
        g[[i, i]] -= 2.0;
    }
    g /= 2.0 * nf;

    let d_log_tau = -(&g * &logits).sum();
    let g_sim = &g / tau;
    let d_ua = g_sim.dot(&ut);
    let d_ut = g_sim.t().dot(&ua);

    // back through x / |x|: (g - u (u . g)) / |x|
    let unnormalize = |du: Array2<f64>, u: &Array2<f64>, norms: &Array1<f64>| {
        let mut out = du;
        for ((mut row, urow), &norm) in out.rows_mut().into_iter().zip(u.rows()).zip(norms) {
            let proj = row.dot(&urow);
            row.zip_mut_with(&urow, |g, &uv| *g = (*g - uv * proj) / norm);
        }
        out
    };
    Ok(LossGrad {
        loss,
        d_audio: unnormalize(d_ua, &ua, &na),
        d_text: unnormalize(d_ut, &ut, &nt),
        d_log_tau,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn singleton_is_zero_in_diagnostic_mode() {
        let a = array![[0.3, 0.4]];
        let opts = LossOptions { allow_singleton: true };
        assert_eq!(contrastive_loss(&a, &a, 0.07, opts).unwrap(), 0.0);
        assert!(matches!(
            contrastive_loss(&a, &a, 0.07, LossOptions::default()),
            Err(TrainError::DegenerateBatch(1))
        ));
    }

    #[test]
    fn uniform_batch_is_ln_n() {
        let a = Array2::from_elem((4, 8), 0.5);
        let l = contrastive_loss(&a, &a, 0.07, LossOptions::default()).unwrap();
        assert_eq!(l, 4f64.ln());
    }

    #[test]
    fn errors() {
        let a = array![[1.0, 0.0], [0.0, 0.0]];
        let b = array![[1.0, 0.0], [0.0, 1.0]];
        assert!(matches!(
            contrastive_loss(&a, &b, 0.1, LossOptions::default()),
            Err(TrainError::ZeroNormRow { side: "audio", row: 1 })
        ));
        assert!(matches!(
            contrastive_loss(&b, &b, 0.0, LossOptions::default()),
            Err(TrainError::NonPositiveTau(_))
        ));
        assert!(matches!(
            contrastive_loss(&b, &array![[1.0, 0.0, 0.0]], 0.1, LossOptions::default()),
            Err(TrainError::DimMismatch(_))
        ));
    }

    #[test]
    fn aligned_batch_with_small_tau_approaches_zero() {
        let a = array![[1.0, 0.0], [-1.0, 0.0]];
        let l = contrastive_loss(&a, &a, 0.01, LossOptions::default()).unwrap();
        assert!(l < 1e-50, "{l}");
    }
}
