//! Small dense linear algebra on the ambient space (n ≤ 3).

use nalgebra::{SymmetricEigen, SVD};

use crate::{Matrix, Vector};

pub fn frobenius(m: &Matrix) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Orthogonal projector onto the hyperplane `u⊥` for a unit vector `u`.
pub fn perp_projector(u: &Vector) -> Matrix {
    let n = u.len();
    Matrix::identity(n, n) - u * u.transpose()
}

/// Orthonormal basis of the orthogonal complement of `span(vectors)`.
///
/// The input must be orthonormal. Candidates are the canonical axes, taken
/// in order of least overlap with the span, so the result is deterministic.
pub fn orthonormal_complement(vectors: &[Vector], dim: usize) -> Vec<Vector> {
    let mut basis: Vec<Vector> = vectors.to_vec();
    let mut axes: Vec<(f64, usize)> = (0..dim)
        .map(|i| {
            let overlap: f64 = vectors.iter().map(|v| v[i] * v[i]).sum();
            (overlap, i)
        })
        .collect();
    axes.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut out = Vec::new();
    for (_, i) in axes {
        if basis.len() == dim {
            break;
        }
        let mut w = Vector::zeros(dim);
        w[i] = 1.0;
        for b in &basis {
            let c = w.dot(b);
            w -= b * c;
        }
        // second pass keeps the basis orthonormal to rounding
        for b in &basis {
            let c = w.dot(b);
            w -= b * c;
        }
        let norm = w.norm();
        if norm > 1e-6 {
            w /= norm;
            basis.push(w.clone());
            out.push(w);
        }
    }
    out
}

/// Orthonormal basis of `u⊥` for a unit vector `u`.
pub fn perp_basis(u: &Vector) -> Vec<Vector> {
    orthonormal_complement(std::slice::from_ref(u), u.len())
}

/// Columns of a matrix built from vectors of equal length.
pub fn columns(vectors: &[Vector], rows: usize) -> Matrix {
    let mut m = Matrix::zeros(rows, vectors.len());
    for (j, v) in vectors.iter().enumerate() {
        m.set_column(j, v);
    }
    m
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues ascending.
pub fn sym_eigen(m: &Matrix) -> (Vec<f64>, Vec<Vector>) {
    if m.nrows() == 0 {
        return (Vec::new(), Vec::new());
    }
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect();
    (values, vectors)
}

pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

/// Singular triplets `(σ, left, right)` sorted by decreasing σ.
pub fn svd_triplets(m: &Matrix) -> Vec<(f64, Vector, Vector)> {
    let svd = SVD::new(m.clone(), true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut out: Vec<(f64, Vector, Vector)> = (0..svd.singular_values.len())
        .map(|i| {
            (
                svd.singular_values[i],
                u.column(i).into_owned(),
                v_t.row(i).transpose().into_owned(),
            )
        })
        .collect();
    out.sort_by(|a, b| b.0.total_cmp(&a.0));
    out
}

/// Largest principal angle between the spans of two orthonormal families.
///
/// Spans of different dimension are at angle π/2.
pub fn max_principal_angle(a: &[Vector], b: &[Vector]) -> f64 {
    if a.len() != b.len() {
        return std::f64::consts::FRAC_PI_2;
    }
    if a.is_empty() {
        return 0.0;
    }
    let n = a[0].len();
    let cross = columns(a, n).transpose() * columns(b, n);
    let smallest = svd_triplets(&cross).last().map(|t| t.0).unwrap_or(0.0);
    smallest.clamp(-1.0, 1.0).acos()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn complement_is_orthonormal() {
        let u = v(&[1.0, 2.0, 2.0]) / 3.0;
        let basis = perp_basis(&u);
        assert_eq!(basis.len(), 2);
        for b in &basis {
            assert!(b.dot(&u).abs() < 1e-14);
            assert!((b.norm() - 1.0).abs() < 1e-14);
        }
        assert!(basis[0].dot(&basis[1]).abs() < 1e-14);
    }

    #[test]
    fn eigen_sorted_ascending() {
        let m = Matrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 3.0]);
        let (vals, vecs) = sym_eigen(&m);
        assert!((vals[0] - 2.0).abs() < 1e-12 && (vals[1] - 4.0).abs() < 1e-12);
        assert!(((&m * &vecs[1]) - &vecs[1] * 4.0).norm() < 1e-12);
    }

    #[test]
    fn principal_angle_of_rotated_lines() {
        let a = vec![v(&[1.0, 0.0])];
        let t: f64 = 0.3;
        let b = vec![v(&[t.cos(), t.sin()])];
        assert!((max_principal_angle(&a, &b) - t).abs() < 1e-12);
    }
}
