//! Exact inference on a linear chain, all in log space.
//!
//! `emission` is T×L (score of label y at position t) and `transition` is L×L (score of
//! moving from label y' to label y). A path's score is the sum of its emission entries plus
//! the transitions between consecutive labels.

use ndarray::{Array2, Array3};

pub(crate) fn logsumexp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Forward scores: alpha[t][y] = log-sum of all prefixes ending in y at t.
pub fn forward(emission: &Array2<f64>, transition: &Array2<f64>) -> Array2<f64> {
    let (t_len, l) = emission.dim();
    let mut alpha = Array2::<f64>::zeros((t_len, l));
    if t_len == 0 {
        return alpha;
    }
    alpha.row_mut(0).assign(&emission.row(0));
    for t in 1..t_len {
        for y in 0..l {
            let prev = (0..l).map(|p| alpha[[t - 1, p]] + transition[[p, y]]);
            alpha[[t, y]] = logsumexp(prev) + emission[[t, y]];
        }
    }
    alpha
}

/// Backward scores: beta[t][y] = log-sum of all suffixes after t given y at t.
pub fn backward(emission: &Array2<f64>, transition: &Array2<f64>) -> Array2<f64> {
    let (t_len, l) = emission.dim();
    let mut beta = Array2::<f64>::zeros((t_len, l));
    for t in (0..t_len.saturating_sub(1)).rev() {
        for y in 0..l {
            let next = (0..l).map(|n| transition[[y, n]] + emission[[t + 1, n]] + beta[[t + 1, n]]);
            beta[[t, y]] = logsumexp(next);
        }
    }
    beta
}

/// Log of the partition function. Zero for an empty sequence.
pub fn log_partition(emission: &Array2<f64>, transition: &Array2<f64>) -> f64 {
    let t_len = emission.nrows();
    if t_len == 0 {
        return 0.0;
    }
    let alpha = forward(emission, transition);
    logsumexp(alpha.row(t_len - 1).iter().copied())
}

/// Posterior node marginals (T×L) and edge marginals ((T-1)×L×L), plus log Z.
pub fn marginals_with_log_z(
    emission: &Array2<f64>,
    transition: &Array2<f64>,
) -> (Array2<f64>, Array3<f64>, f64) {
    let (t_len, l) = emission.dim();
    let mut node = Array2::<f64>::zeros((t_len, l));
    let mut edge = Array3::<f64>::zeros((t_len.saturating_sub(1), l, l));
    if t_len == 0 {
        return (node, edge, 0.0);
    }
    let alpha = forward(emission, transition);
    let beta = backward(emission, transition);
    let log_z = logsumexp(alpha.row(t_len - 1).iter().copied());
    for t in 0..t_len {
        for y in 0..l {
            node[[t, y]] = (alpha[[t, y]] + beta[[t, y]] - log_z).exp();
        }
    }
    for t in 0..t_len - 1 {
        for p in 0..l {
            for y in 0..l {
                edge[[t, p, y]] =
                    (alpha[[t, p]] + transition[[p, y]] + emission[[t + 1, y]] + beta[[t + 1, y]]
                        - log_z)
                        .exp();
            }
        }
    }
    (node, edge, log_z)
}

pub fn marginals(emission: &Array2<f64>, transition: &Array2<f64>) -> (Array2<f64>, Array3<f64>) {
    let (node, edge, _) = marginals_with_log_z(emission, transition);
    (node, edge)
}

pub fn path_score(emission: &Array2<f64>, transition: &Array2<f64>, path: &[usize]) -> f64 {
    let mut score = 0.0;
    for (t, &y) in path.iter().enumerate() {
        score += emission[[t, y]];
        if t > 0 {
            score += transition[[path[t - 1], y]];
        }
    }
    score
}

/// Highest-scoring label path and its score. Ties go to the lower label index.
pub fn viterbi_path(emission: &Array2<f64>, transition: &Array2<f64>) -> (Vec<usize>, f64) {
    let (t_len, l) = emission.dim();
    if t_len == 0 {
        return (Vec::new(), 0.0);
    }
    let mut delta = emission.row(0).to_owned();
    let mut back = Array2::<usize>::zeros((t_len, l));
    for t in 1..t_len {
        let mut next = delta.clone();
        for y in 0..l {
            let mut best = (0, f64::NEG_INFINITY);
            for p in 0..l {
                let s = delta[p] + transition[[p, y]];
                if s > best.1 {
                    best = (p, s);
                }
            }
            back[[t, y]] = best.0;
            next[y] = best.1 + emission[[t, y]];
        }
        delta = next;
    }
    let mut last = 0;
    for y in 1..l {
        if delta[y] > delta[last] {
            last = y;
        }
    }
    let score = delta[last];
    let mut path = vec![last; t_len];
    for t in (1..t_len).rev() {
        path[t - 1] = back[[t, path[t]]];
    }
    (path, score)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn zero_potentials_give_uniform() {
        let em = Array2::zeros((4, 3));
        let tr = Array2::zeros((3, 3));
        assert_abs_diff_eq!(log_partition(&em, &tr), 4.0 * 3f64.ln(), epsilon = 1e-12);
        let (node, edge) = marginals(&em, &tr);
        for v in node.iter() {
            assert_abs_diff_eq!(*v, 1.0 / 3.0, epsilon = 1e-12);
        }
        for v in edge.iter() {
            assert_abs_diff_eq!(*v, 1.0 / 9.0, epsilon = 1e-12);
        }
        assert_eq!(viterbi_path(&em, &tr).0, vec![0; 4]);
    }

    #[test]
    fn single_position_is_softmax() {
        let em = array![[1.0, 2.0, -0.5]];
        let tr = Array2::from_elem((3, 3), 5.0);
        let z = (1f64.exp() + 2f64.exp() + (-0.5f64).exp()).ln();
        assert_abs_diff_eq!(log_partition(&em, &tr), z, epsilon = 1e-12);
        let (node, _) = marginals(&em, &tr);
        assert_abs_diff_eq!(node[[0, 1]], (2.0 - z).exp(), epsilon = 1e-12);
        assert_eq!(viterbi_path(&em, &tr).0, vec![1]);
    }

    #[test]
    fn two_by_two_by_hand() {
        let em = array![[0.3, -0.2], [0.1, 0.7]];
        let tr = array![[0.5, -1.0], [0.25, 0.0]];
        let paths = [[0, 0], [0, 1], [1, 0], [1, 1]];
        let scores: Vec<f64> = paths.iter().map(|p| path_score(&em, &tr, p)).collect();
        let z = scores.iter().map(|s| s.exp()).sum::<f64>().ln();
        assert_abs_diff_eq!(log_partition(&em, &tr), z, epsilon = 1e-10);
    }

    #[test]
    fn strong_emissions_decode_per_position() {
        let em = array![[0.0, 9.0], [9.0, 0.0], [0.0, 9.0]];
        let tr = Array2::zeros((2, 2));
        assert_eq!(viterbi_path(&em, &tr).0, vec![1, 0, 1]);
    }
}
