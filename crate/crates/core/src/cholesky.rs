//! Envelope (skyline) Cholesky factorization with reverse Cuthill–McKee ordering.
//!
//! A = Pᵀ L Lᵀ P, where P reorders the unknowns to shrink the envelope.
//! Diagonal matrices get a trivial factor with P = I.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone)]
pub struct SpdFactor {
    /// new index → original index
    order: Vec<usize>,
    storage: Storage,
}

#[derive(Debug, Clone)]
enum Storage {
    /// √a_ii
    Diagonal(Vec<f64>),
    Envelope {
        /// first stored column of each row
        first: Vec<usize>,
        /// start of each row's segment in `values`
        offset: Vec<usize>,
        values: Vec<f64>,
    },
}

impl SpdFactor {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let n = a.nrows();
        if a.is_diagonal() {
            let diag = a.diagonal();
            let sqrt = diag
                .iter()
                .enumerate()
                .map(|(i, &d)| {
                    if d > 0.0 {
                        Ok(d.sqrt())
                    } else {
                        Err(Error::NotPositiveDefinite { pivot: i, value: d })
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            return Ok(Self {
                order: (0..n).collect(),
                storage: Storage::Diagonal(sqrt),
            });
        }

        let order = reverse_cuthill_mckee(a);
        let mut inverse = vec![0; n];
        for (new, &old) in order.iter().enumerate() {
            inverse[old] = new;
        }

        let mut first: Vec<usize> = (0..n).collect();
        for (new_i, &old_i) in order.iter().enumerate() {
            for (old_j, _) in a.row(old_i) {
                let new_j = inverse[old_j];
                if new_j < first[new_i] {
                    first[new_i] = new_j;
                }
            }
        }
        let mut offset = vec![0; n + 1];
        for i in 0..n {
            offset[i + 1] = offset[i] + (i - first[i] + 1);
        }
        let mut values = vec![0.0; offset[n]];
        for (new_i, &old_i) in order.iter().enumerate() {
            for (old_j, v) in a.row(old_i) {
                let new_j = inverse[old_j];
                if new_j <= new_i {
                    values[offset[new_i] + new_j - first[new_i]] += v;
                }
            }
        }

        for i in 0..n {
            let (fi, oi) = (first[i], offset[i]);
            for j in fi..i {
                let (fj, oj) = (first[j], offset[j]);
                let start = fi.max(fj);
                let mut s = values[oi + j - fi];
                for k in start..j {
                    s -= values[oi + k - fi] * values[oj + k - fj];
                }
                values[oi + j - fi] = s / values[oj + j - fj];
            }
            let mut d = values[oi + i - fi];
            for k in fi..i {
                let l = values[oi + k - fi];
                d -= l * l;
            }
            if !(d > 0.0) {
                return Err(Error::NotPositiveDefinite {
                    pivot: order[i],
                    value: d,
                });
            }
            values[oi + i - fi] = d.sqrt();
        }

        Ok(Self {
            order,
            storage: Storage::Envelope { first, offset, values },
        })
    }

    pub fn dim(&self) -> usize {
        self.order.len()
    }

    /// Stored entries of L.
    pub fn envelope_size(&self) -> usize {
        match &self.storage {
            Storage::Diagonal(d) => d.len(),
            Storage::Envelope { values, .. } => values.len(),
        }
    }

    /// y = L⁻¹ P b (result in permuted ordering).
    pub fn lower_solve(&self, b: &[f64]) -> Vec<f64> {
        let mut y: Vec<f64> = self.order.iter().map(|&old| b[old]).collect();
        match &self.storage {
            Storage::Diagonal(d) => y.iter_mut().zip(d).for_each(|(v, s)| *v /= s),
            Storage::Envelope { first, offset, values } => {
                for i in 0..y.len() {
                    let (fi, oi) = (first[i], offset[i]);
                    let mut s = y[i];
                    for k in fi..i {
                        s -= values[oi + k - fi] * y[k];
                    }
                    y[i] = s / values[oi + i - fi];
                }
            }
        }
        y
    }

    /// x = Pᵀ L⁻ᵀ y (result in original ordering).
    pub fn upper_solve(&self, y: &[f64]) -> Vec<f64> {
        let mut z = y.to_vec();
        match &self.storage {
            Storage::Diagonal(d) => z.iter_mut().zip(d).for_each(|(v, s)| *v /= s),
            Storage::Envelope { first, offset, values } => {
                for i in (0..z.len()).rev() {
                    let (fi, oi) = (first[i], offset[i]);
                    z[i] /= values[oi + i - fi];
                    let zi = z[i];
                    for k in fi..i {
                        z[k] -= values[oi + k - fi] * zi;
                    }
                }
            }
        }
        let mut x = vec![0.0; z.len()];
        for (new, &old) in self.order.iter().enumerate() {
            x[old] = z[new];
        }
        x
    }

    /// Solves A x = b.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.upper_solve(&self.lower_solve(b))
    }
}

/// Reverse Cuthill–McKee ordering of the (symmetrized) sparsity graph; returns new → old.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.nrows();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let (row_ptr, col_idx) = (a.row_ptr(), a.col_idx());
    for i in 0..n {
        for &j in &col_idx[row_ptr[i]..row_ptr[i + 1]] {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();

    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let seed = (0..n).filter(|&i| !visited[i]).min_by_key(|&i| (degree[i], i)).unwrap();
        let start = pseudo_peripheral(seed, &adj, &visited);
        let mut queue = VecDeque::from([start]);
        visited[start] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (degree[w], w));
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

fn pseudo_peripheral(seed: usize, adj: &[Vec<usize>], blocked: &[bool]) -> usize {
    let mut node = seed;
    let mut ecc = 0;
    for _ in 0..8 {
        let (far, depth) = farthest(node, adj, blocked);
        if depth <= ecc {
            break;
        }
        ecc = depth;
        node = far;
    }
    node
}

fn farthest(start: usize, adj: &[Vec<usize>], blocked: &[bool]) -> (usize, usize) {
    let mut dist = vec![usize::MAX; adj.len()];
    dist[start] = 0;
    let mut queue = VecDeque::from([start]);
    let mut best = (start, 0);
    while let Some(v) = queue.pop_front() {
        let d = dist[v];
        if d > best.1 || (d == best.1 && adj[v].len() < adj[best.0].len()) {
            best = (v, d);
        }
        for &w in &adj[v] {
            if !blocked[w] && dist[w] == usize::MAX {
                dist[w] = d + 1;
                queue.push_back(w);
            }
        }
    }
    best
}
