//! Dense linear algebra mod a word-sized prime: characteristic polynomials
//! via Hessenberg reduction and left eigenvector extraction.

use super::polyu64::{self, Poly};

/// Row-major square matrix over F_q.
#[derive(Clone)]
pub struct MatQ {
    pub q: u64,
    pub n: usize,
    pub entries: Vec<u64>,
}

impl MatQ {
    pub fn zero(n: usize, q: u64) -> MatQ {
        MatQ {
            q,
            n,
            entries: vec![0; n * n],
        }
    }

    pub fn at(&self, i: usize, j: usize) -> u64 {
        self.entries[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: u64) {
        self.entries[i * self.n + j] = v;
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        for j in 0..self.n {
            self.entries.swap(a * self.n + j, b * self.n + j);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        for i in 0..self.n {
            self.entries.swap(i * self.n + a, i * self.n + b);
        }
    }
}

/// Monic characteristic polynomial det(xI - A), lowest degree first.
pub fn charpoly(a: &MatQ) -> Poly {
    let q = a.q;
    let n = a.n;
    if n == 0 {
        return vec![1];
    }
    let mut h = a.clone();
    // Similarity reduction to upper Hessenberg form.
    for k in 0..n.saturating_sub(2) {
        let pivot = (k + 1..n).find(|&r| h.at(r, k) != 0);
        let Some(pivot) = pivot else { continue };
        if pivot != k + 1 {
            h.swap_rows(pivot, k + 1);
            h.swap_cols(pivot, k + 1);
        }
        let inv = polyu64::invmod(h.at(k + 1, k), q);
        for i in k + 2..n {
            let m = polyu64::mulmod(h.at(i, k), inv, q);
            if m == 0 {
                continue;
            }
            // row_i -= m * row_{k+1}, then col_{k+1} += m * col_i.
            for j in k..n {
                let t = polyu64::mulmod(m, h.at(k + 1, j), q);
                h.set(i, j, polyu64::submod(h.at(i, j), t, q));
            }
            for r in 0..n {
                let t = polyu64::mulmod(m, h.at(r, i), q);
                h.set(r, k + 1, polyu64::addmod(h.at(r, k + 1), t, q));
            }
        }
    }
    // Charpoly of a Hessenberg matrix by expansion along last columns.
    let mut polys: Vec<Poly> = vec![vec![1]];
    for k in 1..=n {
        let diag = h.at(k - 1, k - 1);
        let x_minus: Poly = vec![polyu64::submod(0, diag, q), 1];
        let mut p = polyu64::mul(&x_minus, &polys[k - 1], q);
        let mut subdiag_prod = 1u64;
        for i in (0..k.saturating_sub(1)).rev() {
            subdiag_prod = polyu64::mulmod(subdiag_prod, h.at(i + 1, i), q);
            if subdiag_prod == 0 {
                break;
            }
            let coef = polyu64::mulmod(h.at(i, k - 1), subdiag_prod, q);
            if coef == 0 {
                continue;
            }
            let term = polyu64::scale(&polys[i], coef, q);
            p = polyu64::sub(&p, &term, q);
        }
        polys.push(p);
    }
    polys.pop().expect("n >= 1")
}

/// Basis of the left nullspace of (A - shift I): row vectors w with
/// w A = shift * w.
pub fn left_nullspace(a: &MatQ, shift: u64) -> Vec<Vec<u64>> {
    let q = a.q;
    let n = a.n;
    // Row-reduce the transpose of (A - shift I).
    let mut m = MatQ::zero(n, q);
    for i in 0..n {
        for j in 0..n {
            let mut v = a.at(j, i);
            if i == j {
                v = polyu64::submod(v, shift % q, q);
            }
            m.set(i, j, v);
        }
    }
    let mut pivot_of_col = vec![usize::MAX; n];
    let mut rank = 0;
    for col in 0..n {
        let Some(pr) = (rank..n).find(|&r| m.at(r, col) != 0) else {
            continue;
        };
        m.swap_rows(pr, rank);
        let inv = polyu64::invmod(m.at(rank, col), q);
        for j in col..n {
            m.set(rank, j, polyu64::mulmod(m.at(rank, j), inv, q));
        }
        for r in 0..n {
            if r == rank || m.at(r, col) == 0 {
                continue;
            }
            let f = m.at(r, col);
            for j in col..n {
                let t = polyu64::mulmod(f, m.at(rank, j), q);
                m.set(r, j, polyu64::submod(m.at(r, j), t, q));
            }
        }
        pivot_of_col[col] = rank;
        rank += 1;
    }
    let mut basis = Vec::new();
    for free in 0..n {
        if pivot_of_col[free] != usize::MAX {
            continue;
        }
        let mut w = vec![0u64; n];
        w[free] = 1;
        for col in 0..n {
            let pr = pivot_of_col[col];
            if pr != usize::MAX {
                w[col] = polyu64::submod(0, m.at(pr, free), q);
            }
        }
        basis.push(w);
    }
    basis
}

pub fn dot(u: &[u64], v: &[u64], q: u64) -> u64 {
    let mut acc = 0u64;
    for (&a, &b) in u.iter().zip(v) {
        acc = polyu64::macmod(acc, a, b, q);
    }
    acc
}
