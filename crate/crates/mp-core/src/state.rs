/// A plant state usable with the transfer-function machinery.
///
/// Continuous coordinates feed the stability-envelope norm and edge costs;
/// any discrete part (contact flags etc.) participates only through
/// `PartialEq` and the primitive predicates.
pub trait State: Clone + PartialEq + Send + Sync + 'static {
    /// Continuous coordinates of the state, in a fixed order.
    fn coords(&self) -> Vec<f64>;
}

/// Weighted Euclidean distance between the continuous parts of two states.
///
/// Weights act per dimension; a weight slice shorter than the coordinate
/// vector treats missing entries as 1.
pub fn weighted_distance<S: State>(a: &S, b: &S, weights: &[f64]) -> f64 {
    let ca = a.coords();
    let cb = b.coords();
    debug_assert_eq!(ca.len(), cb.len());
    let mut acc = 0.0;
    for i in 0..ca.len() {
        let w = weights.get(i).copied().unwrap_or(1.0);
        let d = ca[i] - cb[i];
        acc += w * d * d;
    }
    acc.sqrt()
}
