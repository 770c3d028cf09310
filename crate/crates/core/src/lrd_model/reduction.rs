//! Reduction of a vector field to orthonormal coordinates.

use crate::linalg::RMatrix;

/// `X' = c X` has identity covariance; `X = D X'` in mean square.
#[derive(Debug, Clone, PartialEq)]
pub struct Reduction {
    pub rank: usize,
    /// `rank × d`
    pub forward: RMatrix,
    /// `d × rank`
    pub reconstruction: RMatrix,
    /// Original coordinates in pivot order.
    pub pivots: Vec<usize>,
}

/// Pivoted Cholesky of `c0` with rank cutoff `1e-10 · trace`. Ties between
/// candidate pivots go to the lowest index.
pub fn orthonormal_reduction(c0: &RMatrix) -> Reduction {
    let d = c0.nrows();
    let cutoff = 1e-10 * c0.trace().max(0.0);
    let mut perm: Vec<usize> = (0..d).collect();
    let mut a = c0.clone();
    let mut l = RMatrix::zeros(d, d);
    let mut rank = 0;
    for col in 0..d {
        // largest remaining diagonal
        let mut best = col;
        for i in col + 1..d {
            if a[(i, i)] > a[(best, best)] {
                best = i;
            }
        }
        if a[(best, best)] <= cutoff {
            break;
        }
        if best != col {
            a.swap_rows(col, best);
            a.swap_columns(col, best);
            l.swap_rows(col, best);
            perm.swap(col, best);
        }
        let piv = a[(col, col)].sqrt();
        l[(col, col)] = piv;
        for i in col + 1..d {
            l[(i, col)] = a[(i, col)] / piv;
        }
        for i in col + 1..d {
            for j in col + 1..=i {
                let v = a[(i, j)] - l[(i, col)] * l[(j, col)];
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
        rank += 1;
    }
    // rows of the permuted field: X_perm = L_full X', X' = L11^{-1} X_perm[..rank]
    let l11 = l.view((0, 0), (rank, rank)).into_owned();
    let l11_inv = l11
        .solve_lower_triangular(&RMatrix::identity(rank, rank))
        .unwrap_or_else(|| RMatrix::zeros(rank, rank));
    let mut forward = RMatrix::zeros(rank, d);
    for r in 0..rank {
        for s in 0..rank {
            forward[(r, perm[s])] = l11_inv[(r, s)];
        }
    }
    let mut reconstruction = RMatrix::zeros(d, rank);
    for i in 0..d {
        for r in 0..rank {
            reconstruction[(perm[i], r)] = l[(i, r)];
        }
    }
    Reduction { rank, forward, reconstruction, pivots: perm[..rank].to_vec() }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &RMatrix, b: &RMatrix, tol: f64) -> bool {
        (a - b).abs().max() <= tol
    }

    #[test]
    fn identity_is_fixed() {
        let c = RMatrix::identity(3, 3);
        let r = orthonormal_reduction(&c);
        assert_eq!(r.rank, 3);
        assert!(close(&r.forward, &c, 0.0));
        assert!(close(&r.reconstruction, &c, 0.0));
    }

    #[test]
    fn rank_one_case() {
        let c = RMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let r = orthonormal_reduction(&c);
        assert_eq!(r.rank, 1);
        assert!(close(&r.forward, &RMatrix::from_row_slice(1, 2, &[1.0, 0.0]), 1e-15));
        assert!(close(&r.reconstruction, &RMatrix::from_row_slice(2, 1, &[1.0, 1.0]), 1e-15));
    }

    #[test]
    fn correlated_pair_matches_cholesky_oracle() {
        let c = RMatrix::from_row_slice(2, 2, &[1.0, 0.6, 0.6, 1.0]);
        let r = orthonormal_reduction(&c);
        let want = RMatrix::from_row_slice(2, 2, &[1.0, 0.0, -0.75, 1.25]);
        assert!(close(&r.forward, &want, 1e-12));
        let ident = &r.forward * &c * r.forward.transpose();
        assert!(close(&ident, &RMatrix::identity(2, 2), 1e-12));
        assert!(close(&(&r.reconstruction * &r.forward * &c), &c, 1e-12));
    }
}
