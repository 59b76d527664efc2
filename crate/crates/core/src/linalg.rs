//! Small dense vector helpers over plain slices.

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += c * x`
pub(crate) fn axpy(c: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += c * xi;
    }
}

/// Modified Gram-Schmidt with one reorthogonalisation pass. A vector whose
/// residual falls below `rel_tol` times its original norm is treated as
/// dependent and dropped, so the output spans the input with full rank.
pub(crate) fn orthonormalize<I>(vectors: I, rel_tol: f64) -> Vec<Vec<f64>>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for mut v in vectors {
        let original = norm(&v);
        if original == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &v);
                axpy(-c, q, &mut v);
            }
        }
        let residual = norm(&v);
        if residual > rel_tol * original {
            v.iter_mut().for_each(|x| *x /= residual);
            basis.push(v);
        }
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drops_dependent_vectors() {
        let basis = orthonormalize(
            vec![vec![1.0, 1.0, 0.0], vec![2.0, 2.0, 0.0], vec![0.0, 1.0, 1.0], vec![0.0; 3]],
            1e-10,
        );
        assert_eq!(basis.len(), 2);
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((dot(a, b) - expected).abs() < 1e-14);
            }
        }
    }
}
