/// Squared Euclidean distance between two binary32 vectors, accumulated in
/// binary64.
///
/// Four lane accumulators take dimensions `4j..4j+3` in turn and are
/// combined as `(l0 + l1) + (l2 + l3)` before the tail is added in order.
/// The order is fixed, so the result does not depend on the target's SIMD
/// width.
#[inline]
pub fn squared_euclidean(a: &[f32], b: &[f32]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut lanes = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for l in 0..4 {
            let d = x[l] as f64 - y[l] as f64;
            lanes[l] += d * d;
        }
    }
    let mut sum = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        let d = *x as f64 - *y as f64;
        sum += d * d;
    }
    sum
}
