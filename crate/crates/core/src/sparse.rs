//! Symmetric sparse matrices stored as their lower triangle in compressed
//! rows, plus an envelope (skyline) Cholesky factorization under a
//! reverse Cuthill-McKee ordering.

use std::collections::VecDeque;
use std::io::Write;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Accumulates `(row, col, value)` contributions; only the lower triangle is kept.
#[derive(Debug, Clone)]
pub struct TripletBuilder {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(n: usize) -> Self {
        TripletBuilder {
            n,
            entries: Vec::new(),
        }
    }

    /// Add `value` at `(i, j)`. Entries above the diagonal are dropped, so
    /// callers pushing a full symmetric element matrix get each pair once.
    pub fn push(&mut self, i: usize, j: usize, value: f64) {
        debug_assert!(i < self.n && j < self.n);
        if j <= i {
            self.entries.push((i, j, value));
        }
    }

    /// Sum duplicates in insertion order and compress. Exact zeros are dropped.
    pub fn build(mut self) -> SparseSymMatrix {
        self.entries.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut col_idx = Vec::with_capacity(self.entries.len());
        let mut values = Vec::with_capacity(self.entries.len());
        let mut k = 0;
        while k < self.entries.len() {
            let (i, j, _) = self.entries[k];
            let mut sum = 0.0;
            while k < self.entries.len() && self.entries[k].0 == i && self.entries[k].1 == j {
                sum += self.entries[k].2;
                k += 1;
            }
            if sum != 0.0 {
                col_idx.push(j);
                values.push(sum);
                row_ptr[i + 1] += 1;
            }
        }
        for i in 0..self.n {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseSymMatrix {
            n: self.n,
            row_ptr,
            col_idx,
            values,
        }
    }
}

/// Symmetric matrix; row `i` stores columns `j <= i` in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSymMatrix {
    pub fn zeros(n: usize) -> Self {
        TripletBuilder::new(n).build()
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut b = TripletBuilder::new(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            b.push(i, i, v);
        }
        b.build()
    }

    pub fn from_dense(a: &DMatrix<f64>) -> Self {
        let mut b = TripletBuilder::new(a.nrows());
        for i in 0..a.nrows() {
            for j in 0..=i {
                b.push(i, j, a[(i, j)]);
            }
        }
        b.build()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored (lower-triangle) nonzeros.
    pub fn nnz_lower(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if j > i { (j, i) } else { (i, j) };
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.n {
            let mut acc = 0.0;
            for (j, a) in self.row(i) {
                acc += a * x[j];
                if j != i {
                    y[j] += a * x[i];
                }
            }
            y[i] += acc;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    /// `x^T A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let mut sum = 0.0;
        for i in 0..self.n {
            for (j, a) in self.row(i) {
                let t = a * x[i] * x[j];
                sum += if i == j { t } else { 2.0 * t };
            }
        }
        sum
    }

    /// `alpha A + beta B`; the pattern is the union of both patterns.
    pub fn lin_comb(alpha: f64, a: &Self, beta: f64, b: &Self) -> Self {
        assert_eq!(a.n, b.n, "dimension mismatch");
        let mut t = TripletBuilder::new(a.n);
        for i in 0..a.n {
            for (j, v) in a.row(i) {
                t.push(i, j, alpha * v);
            }
            for (j, v) in b.row(i) {
                t.push(i, j, beta * v);
            }
        }
        t.build()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= factor);
        if factor == 0.0 {
            return Self::zeros(self.n);
        }
        out
    }

    /// Principal submatrix on `keep` (ascending old indices).
    pub fn submatrix(&self, keep: &[usize]) -> Self {
        let mut new_index = vec![usize::MAX; self.n];
        for (k, &old) in keep.iter().enumerate() {
            new_index[old] = k;
        }
        let mut t = TripletBuilder::new(keep.len());
        for (k, &old) in keep.iter().enumerate() {
            for (j, v) in self.row(old) {
                let nj = new_index[j];
                if nj != usize::MAX {
                    t.push(k, nj, v);
                }
            }
        }
        t.build()
    }

    /// Symmetric permutation: entry `(i, j)` of the result is entry
    /// `(perm[i], perm[j])` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut inv = vec![0usize; self.n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut t = TripletBuilder::new(self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                let (a, b) = (inv[i], inv[j]);
                t.push(a.max(b), a.min(b), v);
            }
        }
        t.build()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                d[(i, j)] = v;
                d[(j, i)] = v;
            }
        }
        d
    }

    /// Lower Gershgorin bound `min_i (a_ii - sum_{j != i} |a_ij|)`.
    pub fn gershgorin_lower(&self) -> f64 {
        let mut off = vec![0.0; self.n];
        let mut diag = vec![0.0; self.n];
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                if i == j {
                    diag[i] = v;
                } else {
                    off[i] += v.abs();
                    off[j] += v.abs();
                }
            }
        }
        diag.iter()
            .zip(&off)
            .map(|(d, o)| d - o)
            .fold(f64::INFINITY, f64::min)
    }

    /// Adjacency lists of the off-diagonal pattern.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for i in 0..self.n {
            for (j, _) in self.row(i) {
                if j != i {
                    adj[i].push(j);
                    adj[j].push(i);
                }
            }
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        adj
    }

    /// Coordinate listing `row col value` (0-based, both triangles).
    pub fn write_coordinate<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# {} {} {}", self.n, self.n, 2 * self.nnz_lower() - self.n_diag_stored())?;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                writeln!(out, "{i} {j} {v:.17e}")?;
                if i != j {
                    writeln!(out, "{j} {i} {v:.17e}")?;
                }
            }
        }
        Ok(())
    }

    fn n_diag_stored(&self) -> usize {
        (0..self.n).filter(|&i| self.row(i).any(|(j, _)| j == i)).count()
    }
}

/// Reverse Cuthill-McKee ordering; returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);

    let bfs_last_level = |start: usize| -> (Vec<usize>, usize) {
        let mut level = vec![usize::MAX; n];
        level[start] = 0;
        let mut queue = VecDeque::from([start]);
        let mut seen = vec![start];
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if level[w] == usize::MAX {
                    level[w] = level[v] + 1;
                    seen.push(w);
                    queue.push_back(w);
                }
            }
        }
        let depth = seen.iter().map(|&v| level[v]).max().unwrap_or(0);
        let last = seen.into_iter().filter(|&v| level[v] == depth).collect();
        (last, depth)
    };

    for seed in 0..n {
        if visited[seed] {
            continue;
        }
        // Pseudo-peripheral start: walk to a minimum-degree node of the
        // deepest BFS level until the eccentricity stops growing.
        let mut start = seed;
        let (mut last, mut depth) = bfs_last_level(start);
        loop {
            let cand = *last.iter().min_by_key(|&&v| (adj[v].len(), v)).unwrap();
            let (next_last, next_depth) = bfs_last_level(cand);
            if next_depth <= depth {
                break;
            }
            start = cand;
            last = next_last;
            depth = next_depth;
        }

        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (adj[w].len(), w));
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// `P A P^T = L L^T` with `L` stored row-wise over its envelope.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    perm: Vec<usize>,
    first: Vec<usize>,
    ptr: Vec<usize>,
    data: Vec<f64>,
}

impl EnvelopeCholesky {
    /// Factor with a reverse Cuthill-McKee ordering of the pattern.
    pub fn new(a: &SparseSymMatrix) -> Result<Self> {
        let perm = reverse_cuthill_mckee(&a.adjacency());
        Self::with_ordering(a, perm)
    }

    pub fn with_ordering(a: &SparseSymMatrix, perm: Vec<usize>) -> Result<Self> {
        let n = a.dim();
        let p = a.permuted(&perm);
        let first: Vec<usize> = (0..n)
            .map(|i| p.row(i).next().map_or(i, |(j, _)| j.min(i)))
            .collect();
        let mut ptr = vec![0usize; n + 1];
        for i in 0..n {
            ptr[i + 1] = ptr[i] + (i - first[i] + 1);
        }
        let mut data = vec![0.0; ptr[n]];
        for i in 0..n {
            for (j, v) in p.row(i) {
                data[ptr[i] + j - first[i]] = v;
            }
        }

        for i in 0..n {
            let fi = first[i];
            for j in fi..i {
                let fj = first[j];
                let lo = fi.max(fj);
                let (ri, rj) = (ptr[i] + lo - fi, ptr[j] + lo - fj);
                let len = j - lo;
                let dot: f64 = data[ri..ri + len]
                    .iter()
                    .zip(&data[rj..rj + len])
                    .map(|(x, y)| x * y)
                    .sum();
                let ljj = data[ptr[j] + j - fj];
                let idx = ptr[i] + j - fi;
                data[idx] = (data[idx] - dot) / ljj;
            }
            let row = &data[ptr[i]..ptr[i] + (i - fi)];
            let s = data[ptr[i] + i - fi] - row.iter().map(|x| x * x).sum::<f64>();
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::FactorizationFailure {
                    row: perm[i],
                    shift: f64::NAN,
                });
            }
            data[ptr[i] + i - fi] = s.sqrt();
        }
        Ok(EnvelopeCholesky {
            perm,
            first,
            ptr,
            data,
        })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    /// Stored entries of the factor.
    pub fn envelope_size(&self) -> usize {
        self.data.len()
    }

    /// Solve `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.data[self.ptr[i]..self.ptr[i] + (i - fi)];
            let dot: f64 = row.iter().zip(&y[fi..i]).map(|(l, v)| l * v).sum();
            y[i] = (y[i] - dot) / self.data[self.ptr[i] + i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            y[i] /= self.data[self.ptr[i] + i - fi];
            let xi = y[i];
            let row = &self.data[self.ptr[i]..self.ptr[i] + (i - fi)];
            for (k, l) in row.iter().enumerate() {
                y[fi + k] -= l * xi;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}
