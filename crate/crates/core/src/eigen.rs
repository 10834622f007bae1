//! Eigen-decomposition of small non-normal complex matrices.
//!
//! Eigenvalues come from nalgebra's complex Schur form. Eigenvectors are
//! null vectors of `M − λI` taken from an SVD; numerically coincident
//! eigenvalues are grouped so a semisimple degenerate eigenvalue yields an
//! orthonormal basis of its eigenspace, while a defective group (an
//! exceptional point) is reported instead of papered over.

use nalgebra::{Matrix4, Vector4};

use crate::basis::C64;

pub(crate) type M4 = Matrix4<C64>;

/// Relative distance below which eigenvalues are treated as one cluster.
const CLUSTER_TOL: f64 = 1e-7;
/// Relative singular-value bound for a vector to count as a null vector.
const NULL_TOL: f64 = 1e-8;

/// Eigenvalues sorted by descending real part, then descending imaginary part.
pub(crate) fn eigenvalues(m: &M4) -> [C64; 4] {
    let schur = m.schur();
    let (_, t) = schur.unpack();
    let mut v = [t[(0, 0)], t[(1, 1)], t[(2, 2)], t[(3, 3)]];
    sort_eigenvalues(&mut v);
    v
}

pub(crate) fn sort_eigenvalues(v: &mut [C64; 4]) {
    let quant = |x: f64| (x * 1e9).round();
    v.sort_by(|a, b| quant(b.re).partial_cmp(&quant(a.re)).unwrap().then(b.im.partial_cmp(&a.im).unwrap()));
}

fn scale(values: &[C64; 4]) -> f64 {
    1.0 + values.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn clusters(values: &[C64; 4]) -> Vec<Vec<usize>> {
    let tol = CLUSTER_TOL * scale(values);
    let mut assigned = [false; 4];
    let mut out = Vec::new();
    for i in 0..4 {
        if assigned[i] {
            continue;
        }
        let mut group = vec![i];
        assigned[i] = true;
        // Transitive closure so chains of nearby values end up together.
        let mut k = 0;
        while k < group.len() {
            let anchor = values[group[k]];
            for j in 0..4 {
                if !assigned[j] && (values[j] - anchor).norm() < tol {
                    assigned[j] = true;
                    group.push(j);
                }
            }
            k += 1;
        }
        group.sort_unstable();
        out.push(group);
    }
    out
}

/// Right null vectors of `a` spanning its `m` smallest singular directions,
/// together with the largest of those `m` singular values.
fn null_space(a: &M4, m: usize) -> (Vec<Vector4<C64>>, f64) {
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("requested V^H");
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].partial_cmp(&svd.singular_values[j]).unwrap());
    let worst = svd.singular_values[order[m - 1]];
    let vecs = order[..m].iter().map(|&i| v_t.row(i).adjoint().into_owned()).collect();
    (vecs, worst)
}

/// Right eigenvectors (unit-norm columns, matching `values`). Returns
/// `None` when some cluster is defective.
pub(crate) fn right_eigenvectors(m: &M4, values: &[C64; 4]) -> Option<M4> {
    let s = scale(values);
    let mut r = M4::zeros();
    for group in clusters(values) {
        let mean = group.iter().map(|&i| values[i]).sum::<C64>() / C64::from(group.len() as f64);
        let (vecs, worst) = null_space(&(m - M4::identity() * mean), group.len());
        if worst > NULL_TOL * s {
            return None;
        }
        for (&i, v) in group.iter().zip(vecs) {
            r.set_column(i, &v);
        }
    }
    Some(r)
}

/// Full biorthonormal eigensystem: columns of `right` and rows of `left`
/// satisfy `left · right = 1` up to rounding.
pub(crate) struct EigenSystem {
    pub values: [C64; 4],
    pub right: M4,
    pub left: M4,
    pub conditioning: f64,
}

pub(crate) fn eigensystem(m: &M4) -> Result<EigenSystem, f64> {
    let values = eigenvalues(m);
    let s = scale(&values);
    let right = right_eigenvectors(m, &values).ok_or(0.0)?;
    let conditioning = smallest_singular_value(&right);
    let mt = m.transpose();
    let mut left = M4::zeros();
    for group in clusters(&values) {
        let k = group.len();
        let mean = group.iter().map(|&i| values[i]).sum::<C64>() / C64::from(k as f64);
        let (lvecs, worst) = null_space(&(mt - M4::identity() * mean), k);
        if worst > NULL_TOL * s {
            return Err(0.0);
        }
        // Gram matrix between the cluster's left and right vectors.
        let mut g = nalgebra::DMatrix::<C64>::zeros(k, k);
        for (a, l) in lvecs.iter().enumerate() {
            for (b, &j) in group.iter().enumerate() {
                g[(a, b)] = (l.transpose() * right.column(j))[(0, 0)];
            }
        }
        let g_inv = g.try_inverse().ok_or(0.0)?;
        for (b, &i) in group.iter().enumerate() {
            let mut row = Vector4::<C64>::zeros();
            for (a, l) in lvecs.iter().enumerate() {
                row += l * g_inv[(b, a)];
            }
            left.set_row(i, &row.transpose());
        }
    }
    Ok(EigenSystem { values, right, left, conditioning })
}

pub(crate) fn smallest_singular_value(m: &M4) -> f64 {
    m.singular_values().iter().cloned().fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(d: [f64; 4]) -> M4 {
        M4::from_diagonal(&Vector4::new(d[0].into(), d[1].into(), d[2].into(), d[3].into()))
    }

    #[test]
    fn semisimple_degeneracy_gets_independent_vectors() {
        let m = diag([-1.0, -0.5, -0.5, 0.0]);
        let es = eigensystem(&m).unwrap();
        assert!(es.conditioning > 0.99);
        assert!((es.left * es.right - M4::identity()).norm() < 1e-12);
    }

    #[test]
    fn jordan_block_is_defective() {
        let mut m = diag([-1.0, -1.0, 0.5, 0.0]);
        m[(0, 1)] = C64::from(1.0);
        assert!(eigensystem(&m).is_err());
    }

    #[test]
    fn sorting_is_deterministic() {
        let mut v = [C64::new(-1.0, 0.0), C64::new(-0.5, -2.0), C64::new(-0.5, 2.0), C64::new(0.0, 0.0)];
        sort_eigenvalues(&mut v);
        assert_eq!(v[0], C64::new(0.0, 0.0));
        assert_eq!(v[1], C64::new(-0.5, 2.0));
        assert_eq!(v[3], C64::new(-1.0, 0.0));
    }
}
