//! Exact rational linear algebra: sparse matrices over the rationals,
//! fraction-free elimination, kernels, and graded-basis bookkeeping.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use num::{BigInt, BigRational, Integer, One, Signed, Zero};

use crate::error::{Error, Result};

/// Exact rational scalar. Always stored in lowest terms with positive
/// denominator; serializes as `p/q` or `p`.
pub type Rational = BigRational;

/// Shorthand constructor for small rationals.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rational {
    Rational::from(BigInt::from(n))
}

/// Parse `p/q` or `p` (exact, no decimals).
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        Some(Rational::new(p, q))
    } else {
        let p: BigInt = s.parse().ok()?;
        Some(Rational::from(p))
    }
}

static DIM_CAP: OnceLock<usize> = OnceLock::new();

/// Global column cap for eliminations; override with `DUFLOQ_DIM_CAP`.
pub fn dim_cap() -> usize {
    *DIM_CAP.get_or_init(|| {
        std::env::var("DUFLOQ_DIM_CAP")
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(20000)
    })
}

/// Pivot selection strategy for elimination. Results (rank, kernel) must not
/// depend on the choice; tests assert this.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pivoting {
    /// First nonzero entry in the current column.
    FirstNonZero,
    /// Entry with the smallest number of digits (keeps integers small).
    ShortestEntry,
}

/// Sparse matrix over the rationals. No explicit zeros are stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    entries: BTreeMap<(usize, usize), Rational>,
}

impl SparseMatrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        SparseMatrix {
            rows,
            cols,
            entries: BTreeMap::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n, n);
        for i in 0..n {
            m.set(i, i, Rational::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut m = Self::zero(r, c);
        for (i, row) in rows.into_iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            for (j, v) in row.into_iter().enumerate() {
                m.set(i, j, v);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn set(&mut self, i: usize, j: usize, v: Rational) {
        assert!(i < self.rows && j < self.cols, "index out of range");
        if v.is_zero() {
            self.entries.remove(&(i, j));
        } else {
            self.entries.insert((i, j), v);
        }
    }

    pub fn add_to(&mut self, i: usize, j: usize, v: Rational) {
        let cur = self.get(i, j) + v;
        self.set(i, j, cur);
    }

    pub fn get(&self, i: usize, j: usize) -> Rational {
        self.entries.get(&(i, j)).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(usize, usize), &Rational)> {
        self.entries.iter()
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut m = Self::zero(self.cols, self.rows);
        for (&(i, j), v) in &self.entries {
            m.set(j, i, v.clone());
        }
        m
    }

    pub fn mul(&self, other: &SparseMatrix) -> SparseMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch in product");
        let mut m = Self::zero(self.rows, other.cols);
        for (&(i, k), a) in &self.entries {
            for j in 0..other.cols {
                let b = other.get(k, j);
                if !b.is_zero() {
                    m.add_to(i, j, a * &b);
                }
            }
        }
        m
    }

    pub fn mul_vec(&self, v: &[Rational]) -> Vec<Rational> {
        assert_eq!(self.cols, v.len());
        let mut out = vec![Rational::zero(); self.rows];
        for (&(i, j), a) in &self.entries {
            out[i] += a * &v[j];
        }
        out
    }

    fn check_cap(&self) -> Result<()> {
        if self.cols > dim_cap() {
            return Err(Error::DimensionCap {
                size: self.cols,
                cap: dim_cap(),
            });
        }
        Ok(())
    }

    /// Integer row-echelon form by fraction-free elimination: rows are scaled
    /// to integers, cross-multiplied, and re-normalized by their content.
    /// Returns (pivot columns, echelon rows).
    fn echelon(&self, pivoting: Pivoting) -> Result<(Vec<usize>, Vec<Vec<BigInt>>)> {
        self.check_cap()?;
        // Clear denominators row by row; scaling a row changes neither the
        // row space nor the kernel.
        let mut rows: Vec<Vec<BigInt>> = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            let mut lcm = BigInt::one();
            for j in 0..self.cols {
                if let Some(v) = self.entries.get(&(i, j)) {
                    lcm = lcm.lcm(v.denom());
                }
            }
            let mut row = vec![BigInt::zero(); self.cols];
            for j in 0..self.cols {
                if let Some(v) = self.entries.get(&(i, j)) {
                    row[j] = v.numer() * (&lcm / v.denom());
                }
            }
            rows.push(row);
        }

        let mut pivot_cols = Vec::new();
        let mut next_row = 0usize;
        for col in 0..self.cols {
            if next_row >= rows.len() {
                break;
            }
            let candidates: Vec<usize> = (next_row..rows.len())
                .filter(|&r| !rows[r][col].is_zero())
                .collect();
            if candidates.is_empty() {
                continue;
            }
            let chosen = match pivoting {
                Pivoting::FirstNonZero => candidates[0],
                Pivoting::ShortestEntry => *candidates
                    .iter()
                    .min_by_key(|&&r| rows[r][col].magnitude().bits())
                    .unwrap(),
            };
            rows.swap(next_row, chosen);
            let pivot = rows[next_row][col].clone();
            for r in 0..rows.len() {
                if r == next_row || rows[r][col].is_zero() {
                    continue;
                }
                let factor = rows[r][col].clone();
                for j in 0..self.cols {
                    let v = &pivot * &rows[r][j] - &factor * &rows[next_row][j];
                    rows[r][j] = v;
                }
                normalize_row(&mut rows[r]);
            }
            pivot_cols.push(col);
            next_row += 1;
        }
        rows.truncate(next_row);
        Ok((pivot_cols, rows))
    }

    pub fn rank_with(&self, pivoting: Pivoting) -> Result<usize> {
        Ok(self.echelon(pivoting)?.0.len())
    }

    pub fn rank(&self) -> usize {
        self.rank_with(Pivoting::FirstNonZero)
            .expect("dimension cap exceeded")
    }

    /// Exact basis of the kernel; count = cols - rank (asserted).
    pub fn kernel_basis_with(&self, pivoting: Pivoting) -> Result<Vec<Vec<Rational>>> {
        let (pivot_cols, rows) = self.echelon(pivoting)?;
        let rank = pivot_cols.len();
        let free_cols: Vec<usize> = (0..self.cols).filter(|c| !pivot_cols.contains(c)).collect();
        let mut basis = Vec::with_capacity(free_cols.len());
        for &fc in &free_cols {
            let mut v = vec![Rational::zero(); self.cols];
            v[fc] = Rational::one();
            // Back-substitute through the echelon rows, bottom-up.
            for (k, &pc) in pivot_cols.iter().enumerate().rev() {
                let mut s = Rational::zero();
                for j in (pc + 1)..self.cols {
                    if !rows[k][j].is_zero() && !v[j].is_zero() {
                        s += Rational::from(rows[k][j].clone()) * &v[j];
                    }
                }
                v[pc] = -s / Rational::from(rows[k][pc].clone());
            }
            basis.push(v);
        }
        assert_eq!(rank + basis.len(), self.cols, "rank-nullity violated");
        Ok(basis)
    }

    pub fn kernel_basis(&self) -> Vec<Vec<Rational>> {
        self.kernel_basis_with(Pivoting::FirstNonZero)
            .expect("dimension cap exceeded")
    }

    /// Solve `self * x = b` exactly; returns None when inconsistent.
    pub fn solve(&self, b: &[Rational]) -> Result<Option<Vec<Rational>>> {
        assert_eq!(b.len(), self.rows);
        // Eliminate on the augmented matrix.
        let mut aug = SparseMatrix::zero(self.rows, self.cols + 1);
        for (&(i, j), v) in &self.entries {
            aug.set(i, j, v.clone());
        }
        for (i, v) in b.iter().enumerate() {
            aug.set(i, self.cols, v.clone());
        }
        let (pivot_cols, rows) = aug.echelon(Pivoting::FirstNonZero)?;
        if pivot_cols.contains(&self.cols) {
            return Ok(None); // pivot in the augmented column
        }
        let mut x = vec![Rational::zero(); self.cols];
        for (k, &pc) in pivot_cols.iter().enumerate().rev() {
            let mut s = Rational::from(rows[k][self.cols].clone());
            for j in (pc + 1)..self.cols {
                if !rows[k][j].is_zero() && !x[j].is_zero() {
                    s -= Rational::from(rows[k][j].clone()) * &x[j];
                }
            }
            x[pc] = s / Rational::from(rows[k][pc].clone());
        }
        Ok(Some(x))
    }
}

fn normalize_row(row: &mut [BigInt]) {
    let mut g = BigInt::zero();
    for v in row.iter() {
        if !v.is_zero() {
            g = g.gcd(v);
        }
    }
    if g.is_zero() || g.is_one() {
        return;
    }
    for v in row.iter_mut() {
        *v = &*v / &g;
    }
    // Keep the leading nonzero entry positive.
    if let Some(first) = row.iter().find(|v| !v.is_zero()) {
        if first.is_negative() {
            for v in row.iter_mut() {
                *v = -std::mem::take(v);
            }
        }
    }
}

/// dim ker(d_out) - rank(d_in), i.e. the dimension of ker(d_out)/im(d_in).
/// Fails with `CompositionNotZero` unless d_out * d_in = 0 exactly.
pub fn cohomology_dim(d_in: &SparseMatrix, d_out: &SparseMatrix) -> Result<usize> {
    assert_eq!(d_in.rows(), d_out.cols(), "complex dimensions mismatch");
    if !d_out.mul(d_in).is_zero() {
        return Err(Error::CompositionNotZero);
    }
    let ker = d_out.cols() - d_out.rank_with(Pivoting::FirstNonZero)?;
    let im = d_in.rank_with(Pivoting::FirstNonZero)?;
    Ok(ker - im)
}

/// Ordered basis of a graded vector space. The order is fixed for the
/// lifetime of the object; every sign convention depends on it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GradedBasis {
    elements: Vec<(String, i64)>,
}

impl GradedBasis {
    pub fn new(elements: Vec<(String, i64)>) -> Self {
        let mut seen = std::collections::BTreeSet::new();
        for (name, _) in &elements {
            assert!(seen.insert(name.clone()), "duplicate basis name `{name}`");
        }
        GradedBasis { elements }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.elements[i].0
    }

    pub fn degree(&self, i: usize) -> i64 {
        self.elements[i].1
    }

    /// Parity = degree mod 2 (0 even, 1 odd).
    pub fn parity(&self, i: usize) -> u8 {
        (self.elements[i].1.rem_euclid(2)) as u8
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.elements.iter().position(|(n, _)| n == name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, i64)> {
        self.elements.iter().map(|(n, d)| (n.as_str(), *d))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_of_zero_map() {
        let m = SparseMatrix::zero(3, 3);
        let k = m.kernel_basis();
        assert_eq!(k.len(), 3);
        for (i, v) in k.iter().enumerate() {
            for (j, x) in v.iter().enumerate() {
                assert_eq!(*x, if i == j { Rational::one() } else { Rational::zero() });
            }
        }
    }

    #[test]
    fn kernel_of_identity_is_empty() {
        let m = SparseMatrix::identity(2);
        assert!(m.kernel_basis().is_empty());
    }

    #[test]
    fn rank_one_kernel() {
        // [[1,2],[2,4]] has kernel spanned by (2,-1); hand elimination.
        let m = SparseMatrix::from_rows(vec![
            vec![rat_int(1), rat_int(2)],
            vec![rat_int(2), rat_int(4)],
        ]);
        let k = m.kernel_basis();
        assert_eq!(k.len(), 1);
        let v = &k[0];
        // proportional to (2,-1)
        assert_eq!(&v[0] * rat_int(-1), &v[1] * rat_int(2));
        assert!(!v[0].is_zero());
    }

    #[test]
    fn cohomology_zero_differentials() {
        let d_in = SparseMatrix::zero(3, 0);
        let d_out = SparseMatrix::zero(0, 3);
        assert_eq!(cohomology_dim(&d_in, &d_out).unwrap(), 3);
    }

    #[test]
    fn cohomology_exact_complex() {
        let d_in = SparseMatrix::identity(2);
        let d_out = SparseMatrix::zero(0, 2);
        assert_eq!(cohomology_dim(&d_in, &d_out).unwrap(), 0);
    }

    #[test]
    fn cohomology_rank_nullity_by_hand() {
        // Q -> Q^2 as (1,0)^T, Q^2 -> Q as (0,1): H = 0.
        let d_in = SparseMatrix::from_rows(vec![vec![rat_int(1)], vec![rat_int(0)]]);
        let d_out = SparseMatrix::from_rows(vec![vec![rat_int(0), rat_int(1)]]);
        assert_eq!(cohomology_dim(&d_in, &d_out).unwrap(), 0);
    }

    #[test]
    fn composition_not_zero_detected() {
        let d_in = SparseMatrix::identity(2);
        let d_out = SparseMatrix::identity(2);
        assert_eq!(
            cohomology_dim(&d_in, &d_out),
            Err(Error::CompositionNotZero)
        );
    }

    #[test]
    fn pivoting_strategies_agree() {
        let m = SparseMatrix::from_rows(vec![
            vec![rat(3, 2), rat_int(7), rat_int(-2), rat_int(0)],
            vec![rat_int(6), rat_int(28), rat_int(-8), rat_int(0)],
            vec![rat_int(1), rat_int(0), rat_int(5), rat(1, 3)],
        ]);
        let r1 = m.rank_with(Pivoting::FirstNonZero).unwrap();
        let r2 = m.rank_with(Pivoting::ShortestEntry).unwrap();
        assert_eq!(r1, r2);
        let k1 = m.kernel_basis_with(Pivoting::FirstNonZero).unwrap();
        let k2 = m.kernel_basis_with(Pivoting::ShortestEntry).unwrap();
        assert_eq!(k1.len(), k2.len());
        // Kernel members from one strategy are annihilated per the other's matrix.
        for v in k1.iter().chain(k2.iter()) {
            assert!(m.mul_vec(v).iter().all(|x| x.is_zero()));
        }
    }

    #[test]
    fn solve_consistent_and_inconsistent() {
        let m = SparseMatrix::from_rows(vec![
            vec![rat_int(1), rat_int(2)],
            vec![rat_int(2), rat_int(4)],
        ]);
        let sol = m.solve(&[rat_int(3), rat_int(6)]).unwrap().unwrap();
        let back = m.mul_vec(&sol);
        assert_eq!(back, vec![rat_int(3), rat_int(6)]);
        assert!(m.solve(&[rat_int(3), rat_int(7)]).unwrap().is_none());
    }

    #[test]
    fn rational_string_round_trip() {
        for r in [rat(3, 2), rat(-7, 3), rat_int(0), rat_int(42), rat(1, 48)] {
            let s = r.to_string();
            assert_eq!(parse_rational(&s).unwrap(), r);
        }
        assert_eq!(rat(3, 2).to_string(), "3/2");
        assert_eq!(rat_int(5).to_string(), "5");
        assert_eq!(rat(-1, 5760).to_string(), "-1/5760");
    }

    #[test]
    fn graded_basis_parity() {
        let b = GradedBasis::new(vec![("x".into(), 0), ("q".into(), 1), ("y".into(), -3)]);
        assert_eq!(b.parity(0), 0);
        assert_eq!(b.parity(1), 1);
        assert_eq!(b.parity(2), 1);
        assert_eq!(b.index_of("q"), Some(1));
    }
}
