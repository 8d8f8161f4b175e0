use crate::scalar::{lit, Scalar};

use super::activation::leaky_relu;
use super::loss::{mse_slices, validate_mask};
use super::network::{Network, ParamId};
use super::{NetError, Volume};

/// Largest relative error between analytic gradients and central finite
/// differences of the masked MSE, over every parameter:
/// `|analytic - numeric| / max(|analytic|, |numeric|, 1e-8)`.
///
/// Perturbing a dense weight only changes one output, so those finite
/// differences reuse the conv features of the unperturbed input and
/// recompute the affected output alone.
pub fn grad_check<T: Scalar>(
    net: &Network<T>,
    input: &Volume<T>,
    target: &Volume<T>,
    mask: &Volume<T>,
    epsilon: T,
) -> Result<f64, NetError> {
    if !(epsilon > T::zero()) || !epsilon.is_finite() {
        return Err(NetError::InvalidArgument("finite-difference step must be positive".into()));
    }
    validate_mask(mask.data())?;
    let (_, grads) = net.backward(input, target, mask)?;
    let mut probe = net.clone();

    let base_trace = net.features(input)?;
    let base_out: Vec<T> = (0..net.dense().out_dim()).map(|r| net.output_from_features(&base_trace, r)).collect();
    let loss_of = |out: &[T]| mse_slices(out, target.data(), mask.data()).expect("mask validated");

    let two_eps = lit::<T>(2.0) * epsilon;
    let mut worst = 0.0f64;
    let mut scratch = base_out.clone();
    let ids: Vec<ParamId> = net.param_ids().collect();
    for p in ids {
        let original = net.param(p);
        let numeric = match p {
            ParamId::DenseWeight { row, .. } | ParamId::DenseBias { row } => {
                let mut eval = |v: T| {
                    probe.set_param(p, v);
                    let z = probe.dense().output(row, base_trace.features());
                    scratch[row] = leaky_relu(z, probe.alpha());
                    let l = loss_of(&scratch);
                    scratch[row] = base_out[row];
                    l
                };
                let plus = eval(original + epsilon);
                let minus = eval(original - epsilon);
                (plus - minus) / two_eps
            }
            _ => {
                let mut eval = |v: T| -> Result<T, NetError> {
                    probe.set_param(p, v);
                    Ok(loss_of(probe.forward(input)?.data()))
                };
                let plus = eval(original + epsilon)?;
                let minus = eval(original - epsilon)?;
                (plus - minus) / two_eps
            }
        };
        probe.set_param(p, original);

        let analytic = grads.get(p).to_f64().unwrap_or(f64::NAN);
        let numeric = numeric.to_f64().unwrap_or(f64::NAN);
        let denom = analytic.abs().max(numeric.abs()).max(1e-8);
        let rel = (analytic - numeric).abs() / denom;
        if rel.is_nan() {
            return Ok(f64::INFINITY);
        }
        worst = worst.max(rel);
    }
    Ok(worst)
}

/// Smallest distance of any leaky-relu input (conv or dense) from the kink
/// at zero. Finite differences with a step that can move a pre-activation
/// across the kink are meaningless, so checks should draw instances where
/// this margin comfortably exceeds the step.
pub fn kink_margin<T: Scalar>(net: &Network<T>, input: &Volume<T>) -> Result<f64, NetError> {
    let trace = net.features(input)?;
    let conv = trace.pre.iter().flat_map(|v| v.data().iter().copied());
    let dense = (0..net.dense().out_dim()).map(|r| net.dense().output(r, trace.features()));
    Ok(conv.chain(dense).map(|z| z.abs().to_f64().unwrap_or(0.0)).fold(f64::INFINITY, f64::min))
}

/// [`grad_check`] with every output in the loss.
pub fn grad_check_full<T: Scalar>(
    net: &Network<T>,
    input: &Volume<T>,
    target: &Volume<T>,
    epsilon: T,
) -> Result<f64, NetError> {
    let (w, h, c) = target.shape();
    grad_check(net, input, target, &Volume::filled(w, h, c, T::one()), epsilon)
}
