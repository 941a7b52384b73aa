//! Compressed sparse column matrices assembled from element stencils.

use faer::sparse::{SparseColMat, SymbolicSparseColMat};
use faer::Mat;

use crate::error::{Error, Result};
use crate::mesh::NONE;

#[derive(Clone, Debug, PartialEq)]
pub struct Csc {
    pub nrows: usize,
    pub ncols: usize,
    pub col_ptr: Vec<usize>,
    /// Row indices, sorted within each column.
    pub row_idx: Vec<usize>,
    pub val: Vec<f64>,
}

impl Csc {
    pub fn zeros(nrows: usize, ncols: usize) -> Csc {
        Csc { nrows, ncols, col_ptr: vec![0; ncols + 1], row_idx: Vec::new(), val: Vec::new() }
    }

    pub fn identity(n: usize) -> Csc {
        Csc { nrows: n, ncols: n, col_ptr: (0..=n).collect(), row_idx: (0..n).collect(), val: vec![1.0; n] }
    }

    /// Sums duplicate entries.
    pub fn from_triplets(nrows: usize, ncols: usize, mut t: Vec<(usize, usize, f64)>) -> Csc {
        t.sort_unstable_by_key(|&(r, c, _)| (c, r));
        let mut col_ptr = vec![0; ncols + 1];
        let mut row_idx = Vec::with_capacity(t.len());
        let mut val: Vec<f64> = Vec::with_capacity(t.len());
        let mut last = (NONE, NONE);
        for (r, c, v) in t {
            assert!(r < nrows && c < ncols, "triplet out of range");
            if (r, c) == last {
                *val.last_mut().unwrap() += v;
            } else {
                row_idx.push(r);
                val.push(v);
                col_ptr[c + 1] += 1;
                last = (r, c);
            }
        }
        for c in 0..ncols {
            col_ptr[c + 1] += col_ptr[c];
        }
        Csc { nrows, ncols, col_ptr, row_idx, val }
    }

    pub fn from_dense(m: &Mat<f64>) -> Csc {
        let mut t = Vec::new();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                if m[(i, j)] != 0.0 {
                    t.push((i, j, m[(i, j)]));
                }
            }
        }
        Csc::from_triplets(m.nrows(), m.ncols(), t)
    }

    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    pub fn col(&self, j: usize) -> (&[usize], &[f64]) {
        let r = self.col_ptr[j]..self.col_ptr[j + 1];
        (&self.row_idx[r.clone()], &self.val[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (rows, vals) = self.col(j);
        rows.binary_search(&i).map(|k| vals[k]).unwrap_or(0.0)
    }

    /// y = A x
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![0.0; self.nrows];
        for j in 0..self.ncols {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                y[self.row_idx[k]] += self.val[k] * xj;
            }
        }
        y
    }

    /// A x as an unevaluated sum hi + lo, accumulated with error-free
    /// transformations so that cancellation in a row costs about one
    /// rounding of the result instead of one per term.
    pub fn apply_compensated(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        assert_eq!(x.len(), self.ncols);
        let mut hi = vec![0.0; self.nrows];
        let mut lo = vec![0.0; self.nrows];
        for j in 0..self.ncols {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                let i = self.row_idx[k];
                let p = self.val[k] * xj;
                let pe = self.val[k].mul_add(xj, -p);
                let s = hi[i] + p;
                let bb = s - hi[i];
                let se = (hi[i] - (s - bb)) + (p - bb);
                hi[i] = s;
                lo[i] += se + pe;
            }
        }
        (hi, lo)
    }

    /// Entries on and below the diagonal.
    pub fn lower_triangle(&self) -> Csc {
        let mut col_ptr = vec![0];
        let mut row_idx = Vec::new();
        let mut val = Vec::new();
        for j in 0..self.ncols {
            let (r, v) = self.col(j);
            for (&i, &a) in r.iter().zip(v) {
                if i >= j {
                    row_idx.push(i);
                    val.push(a);
                }
            }
            col_ptr.push(row_idx.len());
        }
        Csc { nrows: self.nrows, ncols: self.ncols, col_ptr, row_idx, val }
    }

    /// y = A x for the symmetric matrix whose lower triangle is stored.
    pub fn apply_symmetric_lower(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        for j in 0..self.ncols {
            let mut s = 0.0;
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                let i = self.row_idx[k];
                y[i] += self.val[k] * x[j];
                if i != j {
                    s += self.val[k] * x[i];
                }
            }
            y[j] += s;
        }
        y
    }

    /// y = Aᵀ x
    pub fn apply_transpose(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        (0..self.ncols)
            .map(|j| (self.col_ptr[j]..self.col_ptr[j + 1]).map(|k| self.val[k] * x[self.row_idx[k]]).sum())
            .collect()
    }

    /// xᵀ A y
    pub fn form(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, &self.apply(y))
    }

    pub fn transpose(&self) -> Csc {
        let mut count = vec![0usize; self.nrows + 1];
        for &r in &self.row_idx {
            count[r + 1] += 1;
        }
        for r in 0..self.nrows {
            count[r + 1] += count[r];
        }
        let col_ptr = count.clone();
        let mut next = count;
        let mut row_idx = vec![0; self.nnz()];
        let mut val = vec![0.0; self.nnz()];
        for j in 0..self.ncols {
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                let r = self.row_idx[k];
                row_idx[next[r]] = j;
                val[next[r]] = self.val[k];
                next[r] += 1;
            }
        }
        Csc { nrows: self.ncols, ncols: self.nrows, col_ptr, row_idx, val }
    }

    /// Sparse product A B (Gustavson).
    pub fn matmul(&self, b: &Csc) -> Csc {
        assert_eq!(self.ncols, b.nrows);
        let mut col_ptr = vec![0];
        let mut row_idx = Vec::new();
        let mut val = Vec::new();
        let mut acc = vec![0.0; self.nrows];
        let mut mark = vec![NONE; self.nrows];
        let mut rows: Vec<usize> = Vec::new();
        for j in 0..b.ncols {
            rows.clear();
            let (bk, bv) = b.col(j);
            for (&k, &v) in bk.iter().zip(bv) {
                let (ai, av) = self.col(k);
                for (&i, &a) in ai.iter().zip(av) {
                    if mark[i] != j {
                        mark[i] = j;
                        acc[i] = 0.0;
                        rows.push(i);
                    }
                    acc[i] += a * v;
                }
            }
            rows.sort_unstable();
            for &i in &rows {
                row_idx.push(i);
                val.push(acc[i]);
            }
            col_ptr.push(row_idx.len());
        }
        Csc { nrows: self.nrows, ncols: b.ncols, col_ptr, row_idx, val }
    }

    /// A + s B on the union pattern.
    pub fn add_scaled(&self, s: f64, b: &Csc) -> Csc {
        assert!(self.nrows == b.nrows && self.ncols == b.ncols);
        let mut col_ptr = vec![0];
        let mut row_idx = Vec::with_capacity(self.nnz().max(b.nnz()));
        let mut val = Vec::with_capacity(self.nnz().max(b.nnz()));
        for j in 0..self.ncols {
            let (ar, av) = self.col(j);
            let (br, bv) = b.col(j);
            let (mut p, mut q) = (0, 0);
            while p < ar.len() || q < br.len() {
                let ra = ar.get(p).copied().unwrap_or(NONE);
                let rb = br.get(q).copied().unwrap_or(NONE);
                if ra < rb {
                    row_idx.push(ra);
                    val.push(av[p]);
                    p += 1;
                } else if rb < ra {
                    row_idx.push(rb);
                    val.push(s * bv[q]);
                    q += 1;
                } else {
                    row_idx.push(ra);
                    val.push(av[p] + s * bv[q]);
                    p += 1;
                    q += 1;
                }
            }
            col_ptr.push(row_idx.len());
        }
        Csc { nrows: self.nrows, ncols: self.ncols, col_ptr, row_idx, val }
    }

    pub fn scale(&self, s: f64) -> Csc {
        let mut c = self.clone();
        c.val.iter_mut().for_each(|v| *v *= s);
        c
    }

    /// max |a_ij − a_ji|
    pub fn asymmetry(&self) -> f64 {
        let t = self.transpose();
        self.add_scaled(-1.0, &t).val.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs(&self) -> f64 {
        self.val.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_faer(&self) -> SparseColMat<usize, f64> {
        let sym = SymbolicSparseColMat::new_checked(self.nrows, self.ncols, self.col_ptr.clone(), None, self.row_idx.clone());
        SparseColMat::new(sym, self.val.clone())
    }

    pub fn from_faer(m: &SparseColMat<usize, f64>) -> Csc {
        let mut t = Vec::new();
        for j in 0..m.ncols() {
            let r = m.col_ptr()[j]..m.col_ptr()[j + 1];
            for k in r {
                t.push((m.row_idx()[k], j, m.val()[k]));
            }
        }
        Csc::from_triplets(m.nrows(), m.ncols(), t)
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::zeros(self.nrows, self.ncols);
        for j in 0..self.ncols {
            let (r, v) = self.col(j);
            for (&i, &a) in r.iter().zip(v) {
                m[(i, j)] += a;
            }
        }
        m
    }

    /// Plain-text coordinate format: a header `nrows ncols nnz`, then one
    /// `row col value` line per entry (zero-based, 17 significant digits).
    pub fn to_coordinate_text(&self) -> String {
        let mut s = format!("{} {} {}\n", self.nrows, self.ncols, self.nnz());
        for j in 0..self.ncols {
            let (r, v) = self.col(j);
            for (&i, &a) in r.iter().zip(v) {
                s.push_str(&format!("{i} {j} {a:.16e}\n"));
            }
        }
        s
    }

    pub fn from_coordinate_text(text: &str) -> Result<Csc> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let parse_err = |line: usize, msg: &str| Error::Parse { line: line + 1, msg: msg.to_string() };
        let (hl, header) = lines.next().ok_or_else(|| parse_err(0, "missing header"))?;
        let h: Vec<usize> = header
            .split_whitespace()
            .map(|x| x.parse().map_err(|_| parse_err(hl, "bad header")))
            .collect::<Result<_>>()?;
        if h.len() != 3 {
            return Err(parse_err(hl, "header needs nrows ncols nnz"));
        }
        let mut t = Vec::with_capacity(h[2]);
        for (ln, l) in lines {
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() != 3 {
                return Err(parse_err(ln, "expected row col value"));
            }
            let i: usize = f[0].parse().map_err(|_| parse_err(ln, "bad row"))?;
            let j: usize = f[1].parse().map_err(|_| parse_err(ln, "bad col"))?;
            let v: f64 = f[2].parse().map_err(|_| parse_err(ln, "bad value"))?;
            if i >= h[0] || j >= h[1] {
                return Err(parse_err(ln, "index out of range"));
            }
            t.push((i, j, v));
        }
        if t.len() != h[2] {
            return Err(parse_err(hl, "entry count mismatch"));
        }
        Ok(Csc::from_triplets(h[0], h[1], t))
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn axpy(y: &mut [f64], s: f64, x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(y, x)| *y += s * x);
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Column-oriented pattern for matrices whose entries couple dofs of a
/// common element; `NONE` entries in the element lists are skipped.
pub struct StencilAssembler {
    m: Csc,
}

impl StencilAssembler {
    pub fn new<const R: usize, const C: usize>(nrows: usize, ncols: usize, rows: &[[usize; R]], cols: &[[usize; C]]) -> Self {
        assert_eq!(rows.len(), cols.len());
        // elements touching each column
        let mut start = vec![0usize; ncols + 1];
        for c in cols {
            for &j in c.iter().filter(|&&j| j != NONE) {
                start[j + 1] += 1;
            }
        }
        for j in 0..ncols {
            start[j + 1] += start[j];
        }
        let mut fill = start.clone();
        let mut elems = vec![0usize; start[ncols]];
        for (e, c) in cols.iter().enumerate() {
            for &j in c.iter().filter(|&&j| j != NONE) {
                elems[fill[j]] = e;
                fill[j] += 1;
            }
        }
        let mut col_ptr = vec![0];
        let mut row_idx = Vec::new();
        let mut buf: Vec<usize> = Vec::new();
        for j in 0..ncols {
            buf.clear();
            for &e in &elems[start[j]..start[j + 1]] {
                buf.extend(rows[e].iter().filter(|&&i| i != NONE));
            }
            buf.sort_unstable();
            buf.dedup();
            row_idx.extend_from_slice(&buf);
            col_ptr.push(row_idx.len());
        }
        let val = vec![0.0; row_idx.len()];
        StencilAssembler { m: Csc { nrows, ncols, col_ptr, row_idx, val } }
    }

    /// Adds a local matrix `local[a][b]` at (rows[a], cols[b]).
    pub fn add<const R: usize, const C: usize>(&mut self, rows: &[usize; R], cols: &[usize; C], local: &[[f64; C]; R]) {
        for (b, &j) in cols.iter().enumerate() {
            if j == NONE {
                continue;
            }
            let lo = self.m.col_ptr[j];
            let seg = &self.m.row_idx[lo..self.m.col_ptr[j + 1]];
            for (a, &i) in rows.iter().enumerate() {
                if i == NONE {
                    continue;
                }
                let k = seg.binary_search(&i).expect("entry inside the element stencil");
                self.m.val[lo + k] += local[a][b];
            }
        }
    }

    pub fn finish(self) -> Csc {
        self.m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Csc {
        Csc::from_triplets(3, 2, vec![(0, 0, 1.0), (2, 0, 2.0), (1, 1, 3.0), (2, 0, 0.5), (0, 1, -1.0)])
    }

    #[test]
    fn triplets_sum_duplicates() {
        let a = sample();
        assert_eq!(a.get(2, 0), 2.5);
        assert_eq!(a.nnz(), 4);
        assert_eq!(a.apply(&[1.0, 2.0]), vec![-1.0, 6.0, 2.5]);
        assert_eq!(a.apply_transpose(&[1.0, 1.0, 1.0]), vec![3.5, 2.0]);
    }

    #[test]
    fn products_match_dense() {
        let a = sample();
        let b = a.transpose();
        let c = a.matmul(&b).to_dense();
        let d = a.to_dense() * b.to_dense();
        assert!((&c - &d).norm_max() < 1e-15);
        let s = a.add_scaled(2.0, &a).to_dense();
        assert!((&s - &(a.to_dense() * faer::Scale(3.0))).norm_max() < 1e-15);
    }

    #[test]
    fn compensated_product_survives_cancellation() {
        let a = Csc::from_triplets(1, 3, vec![(0, 0, 1.0), (0, 1, 1e16), (0, 2, -1e16)]);
        let x = [1.0, 1.0, 1.0];
        assert_eq!(a.apply(&x)[0], 0.0);
        let (hi, lo) = a.apply_compensated(&x);
        assert_eq!(hi[0] + lo[0], 1.0);
        let b = sample();
        let y = [0.3, -1.7];
        let (h, l) = b.apply_compensated(&y);
        for (p, q) in b.apply(&y).iter().zip(h.iter().zip(&l)) {
            assert!((p - (q.0 + q.1)).abs() <= 1e-15 * p.abs().max(1.0));
        }
    }

    #[test]
    fn coordinate_round_trip() {
        let a = sample();
        let b = Csc::from_coordinate_text(&a.to_coordinate_text()).unwrap();
        assert_eq!(a, b);
        assert!(Csc::from_coordinate_text("2 2 1\n0 5 1.0\n").is_err());
    }

    #[test]
    fn stencil_assembly() {
        let rows = [[0, 1], [1, 2]];
        let mut s = StencilAssembler::new(3, 3, &rows, &rows);
        s.add(&rows[0], &rows[0], &[[1.0, 1.0], [1.0, 1.0]]);
        s.add(&rows[1], &rows[1], &[[1.0, 1.0], [1.0, 1.0]]);
        let m = s.finish();
        assert_eq!(m.get(1, 1), 2.0);
        assert_eq!(m.get(0, 2), 0.0);
        assert_eq!(m.nnz(), 7);
    }
}
