use crate::scalar::Scalar;

use super::{NetError, Volume};

/// Masked mean-square error: `sum(mask * (pred - target)^2) / max(1, sum(mask))`.
pub fn mse<T: Scalar>(pred: &Volume<T>, target: &Volume<T>, mask: &Volume<T>) -> Result<T, NetError> {
    if pred.shape() != target.shape() || pred.shape() != mask.shape() {
        return Err(NetError::ShapeMismatch {
            expected: format!("{:?}", pred.shape()),
            got: format!("target {:?}, mask {:?}", target.shape(), mask.shape()),
        });
    }
    mse_slices(pred.data(), target.data(), mask.data())
}

pub(crate) fn mse_slices<T: Scalar>(pred: &[T], target: &[T], mask: &[T]) -> Result<T, NetError> {
    validate_mask(mask)?;
    let mut sum = T::zero();
    let mut count = T::zero();
    for ((&p, &t), &m) in pred.iter().zip(target).zip(mask) {
        if m != T::zero() {
            let r = p - t;
            sum = sum + r * r;
            count = count + T::one();
        }
    }
    Ok(sum / count.max(T::one()))
}

pub(crate) fn validate_mask<T: Scalar>(mask: &[T]) -> Result<(), NetError> {
    if mask.iter().all(|&m| m == T::zero() || m == T::one()) {
        Ok(())
    } else {
        Err(NetError::InvalidArgument("mask entries must be 0 or 1".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vol(v: &[f64]) -> Volume<f64> {
        Volume::from_vec(v.len(), 1, 1, v.to_vec()).unwrap()
    }

    #[test]
    fn examples() {
        let p = vol(&[0.3, -2.0]);
        assert_eq!(mse(&p, &p, &vol(&[1.0, 1.0])).unwrap(), 0.0);
        assert_eq!(mse(&p, &p, &vol(&[0.0, 1.0])).unwrap(), 0.0);
        assert_eq!(mse(&vol(&[1.0]), &vol(&[0.0]), &vol(&[1.0])).unwrap(), 1.0);
        assert_eq!(mse(&vol(&[1.0, 1.0]), &vol(&[0.0, 1.0]), &vol(&[1.0, 0.0])).unwrap(), 1.0);
        assert_eq!(mse(&vol(&[5.0]), &vol(&[0.0]), &vol(&[0.0])).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(mse(&vol(&[1.0]), &vol(&[1.0, 2.0]), &vol(&[1.0])), Err(NetError::ShapeMismatch { .. })));
        assert!(matches!(mse(&vol(&[1.0]), &vol(&[1.0]), &vol(&[0.5])), Err(NetError::InvalidArgument(_))));
    }
}
