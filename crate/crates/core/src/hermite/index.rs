//! Correspondence between multi-indices `(k_1, …, k_d)` with `Σ k_s = k` and
//! non-decreasing coordinate sequences `(j_1 ≤ … ≤ j_k)`. Coordinates are
//! zero-based.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexMaps {
    pub k: usize,
    pub d: usize,
    /// Every multi-index of total order `k`, in lexicographic order.
    pub multi_indices: Vec<Vec<usize>>,
}

impl IndexMaps {
    pub fn new(k: usize, d: usize) -> Result<Self> {
        if k == 0 || d == 0 {
            return Err(Error::InvalidParameter("index maps need k, d ≥ 1".into()));
        }
        let mut out = Vec::new();
        let mut cur = vec![0usize; d];
        compositions(k, 0, &mut cur, &mut out);
        Ok(Self { k, d, multi_indices: out })
    }

    /// `j(s | k_1..k_d)` for `s = 0..k`: the first `k_1` slots map to
    /// coordinate 0, the next `k_2` to coordinate 1, and so on.
    pub fn sequence_of(multi: &[usize]) -> Vec<usize> {
        multi
            .iter()
            .enumerate()
            .flat_map(|(j, &kj)| std::iter::repeat_n(j, kj))
            .collect()
    }

    /// `k_s(j_1..j_k)`: the number of slots holding coordinate `s`.
    pub fn multi_of(seq: &[usize], d: usize) -> Result<Vec<usize>> {
        if seq.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::MalformedSequence(format!("{seq:?} is not non-decreasing")));
        }
        let mut out = vec![0; d];
        for &j in seq {
            if j >= d {
                return Err(Error::MalformedSequence(format!("coordinate {j} ≥ d = {d}")));
            }
            out[j] += 1;
        }
        Ok(out)
    }
}

fn compositions(rest: usize, pos: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if pos + 1 == cur.len() {
        cur[pos] = rest;
        out.push(cur.clone());
        return;
    }
    for v in (0..=rest).rev() {
        cur[pos] = v;
        compositions(rest - v, pos + 1, cur, out);
    }
}
