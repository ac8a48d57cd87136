use super::Scalar;

/// Probability clamp applied before taking logarithms.
pub const BCE_EPSILON: f64 = 1e-7;

/// Binary cross-entropy of one prediction, with `p` clamped to
/// `[BCE_EPSILON, 1 - BCE_EPSILON]`.
pub fn bce<T: Scalar>(p: T, label: u8) -> T {
    let eps = T::of(BCE_EPSILON);
    let p = p.max(eps).min(T::one() - eps);
    if label == 1 {
        -p.ln()
    } else {
        -(T::one() - p).ln()
    }
}

/// `bce(p, y) + lambda * weight_sq_sum`, where `weight_sq_sum` is the sum of
/// squared weight-matrix entries (biases excluded).
pub fn bce_l2_loss<T: Scalar>(p: T, label: u8, weight_sq_sum: T, lambda: T) -> T {
    bce(p, label) + lambda * weight_sq_sum
}
