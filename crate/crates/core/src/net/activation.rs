use crate::scalar::Scalar;

use super::Volume;

/// Slope used on the negative side unless configured otherwise.
pub const DEFAULT_LEAKY_ALPHA: f64 = 0.01;

#[inline]
pub fn leaky_relu<T: Scalar>(x: T, alpha: T) -> T {
    if x > T::zero() {
        x
    } else {
        alpha * x
    }
}

/// Derivative of [`leaky_relu`]; the value at exactly zero is `alpha`.
#[inline]
pub fn leaky_relu_grad<T: Scalar>(x: T, alpha: T) -> T {
    if x > T::zero() {
        T::one()
    } else {
        alpha
    }
}

pub fn leaky_relu_volume<T: Scalar>(v: &Volume<T>, alpha: T) -> Volume<T> {
    v.map(|x| leaky_relu(x, alpha))
}

pub fn leaky_relu_grad_volume<T: Scalar>(v: &Volume<T>, alpha: T) -> Volume<T> {
    v.map(|x| leaky_relu_grad(x, alpha))
}
