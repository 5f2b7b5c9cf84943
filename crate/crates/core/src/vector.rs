//! Small dense-vector helpers shared by the store, the axis engine and t-SNE.

/// Rows whose L2 norm is within this distance of 1 are left untouched by
/// [`normalize_in_place`]. It is a few f32 ulps at 1.0, so a row that was
/// already normalized in single precision keeps its exact bits.
pub const UNIT_NORM_SLACK: f64 = 4.0 * f32::EPSILON as f64;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

/// Scales `v` to unit length. Returns the original norm, or `None` when the
/// norm is zero or not finite (the vector is then left unchanged).
///
/// Idempotent: a vector within [`UNIT_NORM_SLACK`] of unit length is not
/// rescaled.
pub fn normalize_in_place(v: &mut [f64]) -> Option<f64> {
    let n = norm(v);
    if !n.is_finite() || n == 0.0 {
        return None;
    }
    if (n - 1.0).abs() > UNIT_NORM_SLACK {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
    Some(n)
}

/// Unconditional scaling to unit length; used for derived directions where
/// the slack shortcut would lose precision.
pub fn unit(v: &[f64]) -> Option<Vec<f64>> {
    let n = norm(v);
    if !n.is_finite() || n == 0.0 {
        return None;
    }
    Some(v.iter().map(|x| x / n).collect())
}
