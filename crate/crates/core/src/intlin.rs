//! Exact integer linear algebra.
//!
//! Everything here works over `BigInt`. The central routine is
//! [`smith_normal_form`], which also tracks the inverses of both change of
//! basis matrices so that subquotients of lattices can be given explicit
//! generators.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::decimal;
use crate::error::{Error, Result};

/// Dense integer matrix stored row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    #[serde(with = "decimal::many")]
    entries: Vec<BigInt>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix {
            rows,
            cols,
            entries: vec![BigInt::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, BigInt::one());
        }
        m
    }

    pub fn from_entries(rows: usize, cols: usize, entries: Vec<BigInt>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Ok(IntMatrix {
            rows,
            cols,
            entries,
        })
    }

    /// Builds a matrix from small integer rows. Panics on ragged input.
    pub fn from_rows<R: AsRef<[i64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut entries = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.as_ref().len(), cols, "ragged rows");
            entries.extend(r.as_ref().iter().map(|&x| BigInt::from(x)));
        }
        IntMatrix {
            rows: rows.len(),
            cols,
            entries,
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> BigInt) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        IntMatrix {
            rows,
            cols,
            entries,
        }
    }

    /// Matrix whose columns are the given vectors, each of length `rows`.
    pub fn from_columns(rows: usize, columns: &[Vec<BigInt>]) -> Self {
        Self::from_fn(rows, columns.len(), |i, j| columns[j][i].clone())
    }

    pub fn diagonal(rows: usize, cols: usize, diag: &[BigInt]) -> Self {
        let mut m = Self::zeros(rows, cols);
        for (i, d) in diag.iter().enumerate().take(rows.min(cols)) {
            m.set(i, i, d.clone());
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.entries[i * self.cols + j] = v;
    }

    pub fn entries(&self) -> &[BigInt] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Zero::is_zero)
    }

    pub fn column(&self, j: usize) -> Vec<BigInt> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn columns(&self) -> Vec<Vec<BigInt>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn mul(&self, other: &IntMatrix) -> Result<IntMatrix> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        out.entries[i * other.cols + j] += a * b;
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn apply(&self, v: &[BigInt]) -> Result<Vec<BigInt>> {
        if v.len() != self.cols {
            return Err(Error::Dimension(format!(
                "vector of length {} for {}x{} matrix",
                v.len(),
                self.rows,
                self.cols
            )));
        }
        Ok((0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .filter(|(a, b)| !a.is_zero() && !b.is_zero())
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect())
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hstack(&self, other: &IntMatrix) -> Result<IntMatrix> {
        if self.rows != other.rows {
            return Err(Error::Dimension(format!(
                "hstack of {} and {} rows",
                self.rows, other.rows
            )));
        }
        Ok(Self::from_fn(self.rows, self.cols + other.cols, |i, j| {
            if j < self.cols {
                self.get(i, j).clone()
            } else {
                other.get(i, j - self.cols).clone()
            }
        }))
    }

    /// Rows `range` of the matrix.
    pub fn top_rows(&self, n: usize) -> IntMatrix {
        Self::from_fn(n, self.cols, |i, j| self.get(i, j).clone())
    }

    pub fn select_columns(&self, cols: &[usize]) -> IntMatrix {
        Self::from_fn(self.rows, cols.len(), |i, j| self.get(i, cols[j]).clone())
    }

    /// Entries reduced into `[0, m)`.
    pub fn reduce_mod(&self, m: &BigInt) -> IntMatrix {
        IntMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|x| x.mod_floor(m)).collect(),
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.entries.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.entries.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// row[dst] += q * row[src]
    fn add_row(&mut self, dst: usize, src: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        for j in 0..self.cols {
            let v = &self.entries[src * self.cols + j] * q;
            self.entries[dst * self.cols + j] += v;
        }
    }

    /// col[dst] += q * col[src]
    fn add_col(&mut self, dst: usize, src: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        for i in 0..self.rows {
            let v = &self.entries[i * self.cols + src] * q;
            self.entries[i * self.cols + dst] += v;
        }
    }

    fn negate_row(&mut self, i: usize) {
        for j in 0..self.cols {
            let v = -std::mem::take(&mut self.entries[i * self.cols + j]);
            self.entries[i * self.cols + j] = v;
        }
    }

    fn negate_col(&mut self, j: usize) {
        for i in 0..self.rows {
            let v = -std::mem::take(&mut self.entries[i * self.cols + j]);
            self.entries[i * self.cols + j] = v;
        }
    }
}

impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "[")?;
            for (j, x) in self.row(i).iter().enumerate() {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{x}")?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

/// Output of [`smith_normal_form`]: `s * a * t == d`.
#[derive(Clone, Debug)]
pub struct Smith {
    pub s: IntMatrix,
    pub s_inv: IntMatrix,
    pub d: IntMatrix,
    pub t: IntMatrix,
    pub t_inv: IntMatrix,
    pub rank: usize,
}

impl Smith {
    /// Diagonal entries of `d`, `min(rows, cols)` of them.
    pub fn diagonal(&self) -> Vec<BigInt> {
        (0..self.d.rows().min(self.d.cols()))
            .map(|i| self.d.get(i, i).clone())
            .collect()
    }
}

struct Reducer {
    a: IntMatrix,
    s: IntMatrix,
    s_inv: IntMatrix,
    t: IntMatrix,
    t_inv: IntMatrix,
}

impl Reducer {
    fn swap_rows(&mut self, i: usize, k: usize) {
        self.a.swap_rows(i, k);
        self.s.swap_rows(i, k);
        self.s_inv.swap_cols(i, k);
    }

    fn swap_cols(&mut self, j: usize, k: usize) {
        self.a.swap_cols(j, k);
        self.t.swap_cols(j, k);
        self.t_inv.swap_rows(j, k);
    }

    fn add_row(&mut self, dst: usize, src: usize, q: &BigInt) {
        self.a.add_row(dst, src, q);
        self.s.add_row(dst, src, q);
        self.s_inv.add_col(src, dst, &-q);
    }

    fn add_col(&mut self, dst: usize, src: usize, q: &BigInt) {
        self.a.add_col(dst, src, q);
        self.t.add_col(dst, src, q);
        self.t_inv.add_row(src, dst, &-q);
    }

    fn negate_row(&mut self, i: usize) {
        self.a.negate_row(i);
        self.s.negate_row(i);
        self.s_inv.negate_col(i);
    }

    /// Smallest nonzero |entry| in the block `[k.., k..]`, first in row-major order.
    fn pivot(&self, k: usize) -> Option<(usize, usize)> {
        let mut best: Option<(usize, usize, BigInt)> = None;
        for i in k..self.a.rows() {
            for j in k..self.a.cols() {
                let v = self.a.get(i, j);
                if v.is_zero() {
                    continue;
                }
                let m = v.abs();
                if best.as_ref().is_none_or(|(_, _, b)| m < *b) {
                    best = Some((i, j, m));
                }
            }
        }
        best.map(|(i, j, _)| (i, j))
    }

    /// Clears row and column `k` outside the pivot. Returns false if some
    /// remainder was left, meaning a smaller pivot now exists.
    fn clear_cross(&mut self, k: usize) -> bool {
        let mut clean = true;
        for i in k + 1..self.a.rows() {
            if self.a.get(i, k).is_zero() {
                continue;
            }
            let q = self.a.get(i, k).div_floor(self.a.get(k, k));
            self.add_row(i, k, &-q);
            if !self.a.get(i, k).is_zero() {
                clean = false;
            }
        }
        for j in k + 1..self.a.cols() {
            if self.a.get(k, j).is_zero() {
                continue;
            }
            let q = self.a.get(k, j).div_floor(self.a.get(k, k));
            self.add_col(j, k, &-q);
            if !self.a.get(k, j).is_zero() {
                clean = false;
            }
        }
        clean
    }

    fn smallest_in_cross(&self, k: usize) -> (usize, usize) {
        let mut best = (k, k);
        let mut best_abs = self.a.get(k, k).abs();
        for i in k + 1..self.a.rows() {
            let v = self.a.get(i, k);
            if !v.is_zero() && v.abs() < best_abs {
                best_abs = v.abs();
                best = (i, k);
            }
        }
        for j in k + 1..self.a.cols() {
            let v = self.a.get(k, j);
            if !v.is_zero() && v.abs() < best_abs {
                best_abs = v.abs();
                best = (k, j);
            }
        }
        best
    }
}

/// Smith normal form with deterministic smallest-pivot elimination.
///
/// Returns unimodular `s`, `t` (and their inverses) with `s * a * t = d`,
/// `d` diagonal, non-negative, and `d[i][i] | d[i+1][i+1]`.
pub fn smith_normal_form(a: &IntMatrix) -> Smith {
    let (m, n) = (a.rows(), a.cols());
    let mut r = Reducer {
        a: a.clone(),
        s: IntMatrix::identity(m),
        s_inv: IntMatrix::identity(m),
        t: IntMatrix::identity(n),
        t_inv: IntMatrix::identity(n),
    };
    let mut rank = 0;
    for k in 0..m.min(n) {
        let Some((pi, pj)) = r.pivot(k) else { break };
        r.swap_rows(k, pi);
        r.swap_cols(k, pj);
        loop {
            if r.clear_cross(k) {
                // divisibility of the remaining block by the pivot
                let p = r.a.get(k, k).clone();
                let bad = (k + 1..m)
                    .flat_map(|i| (k + 1..n).map(move |j| (i, j)))
                    .find(|&(i, j)| !r.a.get(i, j).is_multiple_of(&p));
                match bad {
                    None => break,
                    Some((i, _)) => r.add_row(k, i, &BigInt::one()),
                }
            } else {
                let (i, j) = r.smallest_in_cross(k);
                r.swap_rows(k, i);
                r.swap_cols(k, j);
            }
        }
        if r.a.get(k, k).is_negative() {
            r.negate_row(k);
        }
        rank += 1;
    }
    Smith {
        s: r.s,
        s_inv: r.s_inv,
        d: r.a,
        t: r.t,
        t_inv: r.t_inv,
        rank,
    }
}

/// Finitely generated abelian group `Z^r ⊕ Z/d1 ⊕ ... ⊕ Z/dk` with `d1 | ... | dk`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct FinAbGroup {
    free_rank: usize,
    #[serde(with = "decimal::many")]
    torsion: Vec<BigInt>,
}

impl FinAbGroup {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn free(rank: usize) -> Self {
        FinAbGroup {
            free_rank: rank,
            torsion: Vec::new(),
        }
    }

    pub fn cyclic(order: impl Into<BigInt>) -> Self {
        Self::from_orders(0, [order.into()])
    }

    /// Canonical form of `Z^free ⊕ ⊕ Z/o` for arbitrary cyclic orders `o`.
    /// Orders 0 count as free summands, orders ±1 vanish.
    pub fn from_orders(free: usize, orders: impl IntoIterator<Item = BigInt>) -> Self {
        let orders: Vec<BigInt> = orders.into_iter().map(|o| o.abs()).collect();
        let k = orders.len();
        let smith = smith_normal_form(&IntMatrix::diagonal(k, k, &orders));
        let mut g = FinAbGroup::from_smith_diagonal(k, &smith.diagonal());
        g.free_rank += free;
        g
    }

    /// Group `Z^rows / (diagonal entries)`: zeros and missing entries give Z.
    fn from_smith_diagonal(rows: usize, diag: &[BigInt]) -> Self {
        let nonzero = diag.iter().filter(|d| !d.is_zero()).count();
        FinAbGroup {
            free_rank: rows - nonzero,
            torsion: diag
                .iter()
                .filter(|d| !d.is_zero() && !d.is_one())
                .cloned()
                .collect(),
        }
    }

    pub fn free_rank(&self) -> usize {
        self.free_rank
    }

    pub fn torsion(&self) -> &[BigInt] {
        &self.torsion
    }

    pub fn is_zero(&self) -> bool {
        self.free_rank == 0 && self.torsion.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.free_rank == 0
    }

    /// Order of the group, `None` when infinite.
    pub fn order(&self) -> Option<BigInt> {
        self.is_finite().then(|| self.torsion.iter().product())
    }

    pub fn torsion_part(&self) -> FinAbGroup {
        FinAbGroup {
            free_rank: 0,
            torsion: self.torsion.clone(),
        }
    }

    pub fn direct_sum(&self, other: &FinAbGroup) -> FinAbGroup {
        Self::from_orders(
            self.free_rank + other.free_rank,
            self.torsion.iter().chain(&other.torsion).cloned(),
        )
    }

    /// Cyclic orders of the summands, `0` for each free summand, torsion first.
    pub fn summand_orders(&self) -> Vec<BigInt> {
        let mut v = self.torsion.clone();
        v.extend(std::iter::repeat_n(BigInt::zero(), self.free_rank));
        v
    }

    /// Parses the display form, e.g. `0`, `Z`, `Z^2 ⊕ Z/2`, `Z/4+Z/8`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "0" || s.is_empty() {
            return Ok(Self::zero());
        }
        let mut free = 0;
        let mut orders = Vec::new();
        for part in s.split(['⊕', '+']) {
            let part = part.trim();
            if let Some(o) = part.strip_prefix("Z/") {
                orders.push(decimal::parse(o).map_err(Error::Parse)?);
            } else if part == "Z" || part == "Z2" || part == "Z₂" {
                free += 1;
            } else if let Some(r) = part.strip_prefix("Z^") {
                free += r
                    .parse::<usize>()
                    .map_err(|e| Error::Parse(format!("{part:?}: {e}")))?;
            } else {
                return Err(Error::Parse(format!("unrecognised summand {part:?}")));
            }
        }
        Ok(Self::from_orders(free, orders))
    }
}

impl fmt::Display for FinAbGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut parts = Vec::new();
        match self.free_rank {
            0 => {}
            1 => parts.push("Z".to_string()),
            r => parts.push(format!("Z^{r}")),
        }
        parts.extend(self.torsion.iter().map(|d| format!("Z/{d}")));
        write!(f, "{}", parts.join(" ⊕ "))
    }
}

/// Cokernel of `a`: the target lattice modulo the column span.
pub fn cokernel(a: &IntMatrix) -> FinAbGroup {
    let smith = smith_normal_form(a);
    FinAbGroup::from_smith_diagonal(a.rows(), &smith.diagonal())
}

/// Kernel of `a` as a free group together with an explicit basis.
pub fn kernel(a: &IntMatrix) -> (FinAbGroup, Vec<Vec<BigInt>>) {
    let smith = smith_normal_form(a);
    let basis: Vec<_> = (smith.rank..a.cols()).map(|j| smith.t.column(j)).collect();
    (FinAbGroup::free(basis.len()), basis)
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn inverse_mod(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let e = a.mod_floor(m).extended_gcd(m);
    if e.gcd.is_one() {
        Some(e.x.mod_floor(m))
    } else {
        None
    }
}

/// A solution of `a x ≡ b (mod m)` with entries in `[0, m)`, if one exists.
pub fn solve_mod(a: &IntMatrix, b: &[BigInt], m: &BigInt) -> Result<Option<Vec<BigInt>>> {
    if b.len() != a.rows() {
        return Err(Error::Dimension(format!(
            "right-hand side has length {}, matrix has {} rows",
            b.len(),
            a.rows()
        )));
    }
    let smith = smith_normal_form(a);
    let h = smith.s.apply(b)?;
    let mut y = vec![BigInt::zero(); a.cols()];
    for (i, hi) in h.iter().enumerate() {
        let d = if i < a.cols() { smith.d.get(i, i).clone() } else { BigInt::zero() };
        let g = d.gcd(m);
        if !hi.is_multiple_of(&g) {
            return Ok(None);
        }
        if i < a.cols() && !d.is_zero() {
            let mg = m / &g;
            let inv = inverse_mod(&(&d / &g), &mg).expect("coprime after dividing by the gcd");
            y[i] = ((hi / &g) * inv).mod_floor(&mg);
        }
    }
    let x: Vec<BigInt> = smith.t.apply(&y)?.iter().map(|v| v.mod_floor(m)).collect();
    let check = a.apply(&x)?;
    debug_assert!(check.iter().zip(b).all(|(u, v)| (u - v).is_multiple_of(m)));
    Ok(Some(x))
}

/// Smith form over `Z/p^n`: `s * a * t ≡ diag(p^{v_0}, p^{v_1}, ...)`.
///
/// Over a local ring the pivot of least valuation divides everything else
/// in its row and column, so entries never leave `[0, p^n)`.
#[derive(Clone, Debug)]
pub struct LocalSmith {
    pub prime: BigInt,
    pub exponent: u32,
    pub s: IntMatrix,
    pub t: IntMatrix,
    /// Valuations of the nonzero pivots, in order; all are `< n`.
    pub valuations: Vec<u32>,
    rows: usize,
    cols: usize,
}

fn valuation_below(x: &BigInt, p: &BigInt, n: u32) -> u32 {
    if x.is_zero() {
        return n;
    }
    let mut x = x.clone();
    let mut v = 0;
    while v < n && x.is_multiple_of(p) {
        x /= p;
        v += 1;
    }
    v
}

pub fn local_smith(a: &IntMatrix, p: &BigInt, n: u32) -> LocalSmith {
    let q = num_traits::pow(p.clone(), n as usize);
    let (r, c) = (a.rows(), a.cols());
    let mut m = a.reduce_mod(&q);
    let mut s = IntMatrix::identity(r);
    let mut t = IntMatrix::identity(c);
    let mut valuations = Vec::new();
    for k in 0..r.min(c) {
        let mut best: Option<(u32, usize, usize)> = None;
        for i in k..r {
            for j in k..c {
                let v = valuation_below(m.get(i, j), p, n);
                if v < n && best.is_none_or(|(bv, _, _)| v < bv) {
                    best = Some((v, i, j));
                }
            }
        }
        let Some((v, i, j)) = best else { break };
        m.swap_rows(k, i);
        s.swap_rows(k, i);
        m.swap_cols(k, j);
        t.swap_cols(k, j);
        let pv = num_traits::pow(p.clone(), v as usize);
        let unit = m.get(k, k) / &pv;
        let inv = inverse_mod(&unit, &q).expect("unit");
        for jj in 0..c {
            let x = (m.get(k, jj) * &inv).mod_floor(&q);
            m.set(k, jj, x);
        }
        for jj in 0..r {
            let x = (s.get(k, jj) * &inv).mod_floor(&q);
            s.set(k, jj, x);
        }
        for i in k + 1..r {
            let f = m.get(i, k) / &pv;
            if f.is_zero() {
                continue;
            }
            for jj in 0..c {
                let x = (m.get(i, jj) - &f * m.get(k, jj)).mod_floor(&q);
                m.set(i, jj, x);
            }
            for jj in 0..r {
                let x = (s.get(i, jj) - &f * s.get(k, jj)).mod_floor(&q);
                s.set(i, jj, x);
            }
        }
        for j in k + 1..c {
            let f = m.get(k, j) / &pv;
            if f.is_zero() {
                continue;
            }
            for ii in 0..r {
                let x = (m.get(ii, j) - &f * m.get(ii, k)).mod_floor(&q);
                m.set(ii, j, x);
            }
            for ii in 0..c {
                let x = (t.get(ii, j) - &f * t.get(ii, k)).mod_floor(&q);
                t.set(ii, j, x);
            }
        }
        valuations.push(v);
    }
    LocalSmith {
        prime: p.clone(),
        exponent: n,
        s,
        t,
        valuations,
        rows: r,
        cols: c,
    }
}

impl LocalSmith {
    fn modulus(&self) -> BigInt {
        num_traits::pow(self.prime.clone(), self.exponent as usize)
    }

    fn power(&self, v: u32) -> BigInt {
        num_traits::pow(self.prime.clone(), v as usize)
    }

    /// `(Z/p^n)^rows / image`.
    pub fn cokernel(&self) -> FinAbGroup {
        let q = self.modulus();
        let extra = self.rows - self.valuations.len();
        let orders = self
            .valuations
            .iter()
            .map(|&v| self.power(v))
            .chain(std::iter::repeat_n(q, extra));
        FinAbGroup::from_orders(0, orders)
    }

    /// Kernel on `(Z/p^n)^cols` with one generator per cyclic summand.
    pub fn kernel(&self) -> (FinAbGroup, Vec<Vec<BigInt>>) {
        let q = self.modulus();
        let mut orders = Vec::new();
        let mut gens = Vec::new();
        for j in 0..self.cols {
            let v = self.valuations.get(j).copied().unwrap_or(self.exponent);
            if v == 0 {
                continue;
            }
            let scale = self.power(self.exponent - v);
            gens.push(
                self.t
                    .column(j)
                    .iter()
                    .map(|x| (x * &scale).mod_floor(&q))
                    .collect(),
            );
            orders.push(self.power(v));
        }
        (FinAbGroup::from_orders(0, orders), gens)
    }

    /// Some `x` with `a x ≡ b (mod p^n)`.
    pub fn solve(&self, b: &[BigInt]) -> Result<Option<Vec<BigInt>>> {
        let q = self.modulus();
        let h: Vec<BigInt> = self.s.apply(b)?.iter().map(|x| x.mod_floor(&q)).collect();
        let mut y = vec![BigInt::zero(); self.cols];
        for (i, hi) in h.iter().enumerate() {
            match self.valuations.get(i) {
                Some(&v) => {
                    let pv = self.power(v);
                    if !hi.is_multiple_of(&pv) {
                        return Ok(None);
                    }
                    y[i] = hi / pv;
                }
                None => {
                    if !hi.is_zero() {
                        return Ok(None);
                    }
                }
            }
        }
        Ok(Some(self.t.apply(&y)?.iter().map(|x| x.mod_floor(&q)).collect()))
    }
}

/// Basis of a full-rank sublattice of `Z^n`, with the data needed to solve
/// for coordinates.
#[derive(Clone, Debug)]
pub struct Lattice {
    ambient: usize,
    basis: IntMatrix,
    smith: Smith,
}

impl Lattice {
    /// Lattice spanned by the columns of `gens`.
    pub fn span(gens: &IntMatrix) -> Lattice {
        let smith = smith_normal_form(gens);
        let rank = smith.rank;
        // columns of gens * t are d_i * (columns of s_inv)
        let basis = IntMatrix::from_fn(gens.rows(), rank, |i, j| {
            smith.s_inv.get(i, j) * smith.d.get(j, j)
        });
        let smith = smith_normal_form(&basis);
        Lattice {
            ambient: gens.rows(),
            basis,
            smith,
        }
    }

    pub fn full(n: usize) -> Lattice {
        Self::span(&IntMatrix::identity(n))
    }

    pub fn rank(&self) -> usize {
        self.basis.cols()
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn basis(&self) -> &IntMatrix {
        &self.basis
    }

    /// Coordinates of `v` in the basis, or `None` if `v` is not in the lattice.
    pub fn coords(&self, v: &[BigInt]) -> Option<Vec<BigInt>> {
        let z = self.smith.s.apply(v).ok()?;
        let r = self.rank();
        let mut w = Vec::with_capacity(r);
        for (i, zi) in z.iter().enumerate() {
            if i < r {
                let d = self.smith.d.get(i, i);
                if !zi.is_multiple_of(d) {
                    return None;
                }
                w.push(zi / d);
            } else if !zi.is_zero() {
                return None;
            }
        }
        self.smith.t.apply(&w).ok()
    }

    pub fn contains(&self, v: &[BigInt]) -> bool {
        self.coords(v).is_some()
    }
}

/// Lattice `{x : map x ∈ span(target_relations)}`, returned by generators.
pub fn preimage(map: &IntMatrix, target_relations: &IntMatrix) -> Result<IntMatrix> {
    let stacked = map.hstack(target_relations)?;
    let (_, basis) = kernel(&stacked);
    let n = map.cols();
    let gens: Vec<Vec<BigInt>> = basis.into_iter().map(|v| v[..n].to_vec()).collect();
    Ok(IntMatrix::from_columns(n, &gens))
}

/// Quotient of lattices `numerator / denominator` inside `Z^n`, with explicit
/// generators of the cyclic summands.
#[derive(Clone, Debug)]
pub struct Subquotient {
    numerator: Lattice,
    s: IntMatrix,
    s_inv: IntMatrix,
    /// invariant factor per numerator-basis index after change of basis
    factors: Vec<BigInt>,
    group: FinAbGroup,
}

/// A generator of one cyclic summand of a [`Subquotient`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuotientGenerator {
    /// Representative in ambient coordinates.
    pub vector: Vec<BigInt>,
    /// Additive order, 0 for infinite.
    pub order: BigInt,
}

impl Subquotient {
    /// Errors if some denominator generator is not in the numerator lattice.
    pub fn new(numerator_gens: &IntMatrix, denominator_gens: &IntMatrix) -> Result<Subquotient> {
        if numerator_gens.rows() != denominator_gens.rows() {
            return Err(Error::Dimension("subquotient ambient mismatch".into()));
        }
        let numerator = Lattice::span(numerator_gens);
        let r = numerator.rank();
        let mut cols = Vec::with_capacity(denominator_gens.cols());
        for (j, v) in denominator_gens.columns().into_iter().enumerate() {
            match numerator.coords(&v) {
                Some(c) => cols.push(c),
                None => {
                    return Err(Error::InconsistentDifferential(format!(
                        "denominator generator {j} is not contained in the numerator"
                    )))
                }
            }
        }
        let rel = IntMatrix::from_columns(r, &cols);
        let smith = smith_normal_form(&rel);
        let mut factors = smith.diagonal();
        factors.resize(r, BigInt::zero());
        let group = FinAbGroup::from_smith_diagonal(r, &factors);
        Ok(Subquotient {
            numerator,
            s: smith.s,
            s_inv: smith.s_inv,
            factors,
            group,
        })
    }

    pub fn group(&self) -> &FinAbGroup {
        &self.group
    }

    pub fn numerator(&self) -> &Lattice {
        &self.numerator
    }

    /// Indices (into the SNF basis) of the nontrivial summands, in the order
    /// used by [`Subquotient::generators`] and [`Subquotient::class_coords`].
    fn live(&self) -> impl Iterator<Item = usize> + '_ {
        self.factors
            .iter()
            .enumerate()
            .filter(|(_, d)| !d.is_one())
            .map(|(i, _)| i)
    }

    pub fn generators(&self) -> Vec<QuotientGenerator> {
        self.live()
            .map(|i| {
                let local = self.s_inv.column(i);
                let vector = self.numerator.basis().apply(&local).expect("shape");
                QuotientGenerator {
                    vector,
                    order: self.factors[i].clone(),
                }
            })
            .collect()
    }

    /// Coordinates of a numerator element in terms of [`Subquotient::generators`],
    /// reduced modulo each order. Errors if `v` is outside the numerator.
    pub fn class_coords(&self, v: &[BigInt]) -> Result<Vec<BigInt>> {
        let y = self.numerator.coords(v).ok_or_else(|| {
            Error::InconsistentDifferential("element is not in the numerator lattice".into())
        })?;
        let u = self.s.apply(&y)?;
        Ok(self
            .live()
            .map(|i| {
                let d = &self.factors[i];
                if d.is_zero() {
                    u[i].clone()
                } else {
                    u[i].mod_floor(d)
                }
            })
            .collect())
    }
}

/// `ker(d_out) / im(d_in)` for maps of free groups `Z^a -> Z^b -> Z^c`.
pub fn homology_subquotient(d_in: &IntMatrix, d_out: &IntMatrix) -> Result<FinAbGroup> {
    if d_in.rows() != d_out.cols() {
        return Err(Error::Dimension(format!(
            "d_in lands in Z^{} but d_out starts at Z^{}",
            d_in.rows(),
            d_out.cols()
        )));
    }
    let composite = d_out.mul(d_in)?;
    if !composite.is_zero() {
        return Err(Error::InconsistentDifferential(format!(
            "d_out ∘ d_in = {composite} is not zero"
        )));
    }
    let (_, basis) = kernel(d_out);
    let ker = IntMatrix::from_columns(d_out.cols(), &basis);
    Ok(Subquotient::new(&ker, d_in)?.group().clone())
}

/// Homology at the middle of `A -> B -> C` where each term is a quotient of a
/// free group by the column span of its relation matrix.
pub fn presented_homology(
    d_in: &IntMatrix,
    d_out: &IntMatrix,
    rel_mid: &IntMatrix,
    rel_out: &IntMatrix,
) -> Result<Subquotient> {
    let cycles = preimage(d_out, rel_out)?;
    let boundaries = d_in.hstack(rel_mid)?;
    Subquotient::new(&cycles, &boundaries)
}

/// `Hom(G, Z)`: the free part.
pub fn hom_free_dual(g: &FinAbGroup) -> FinAbGroup {
    FinAbGroup::free(g.free_rank())
}

/// `Ext^1(G, Z)`: the torsion part.
pub fn ext1_torsion_dual(g: &FinAbGroup) -> FinAbGroup {
    g.torsion_part()
}

/// Applies the two-term dual twice and compares with `g`.
///
/// The dual of a group in degree 0 is `Hom` in degree 0 and `Ext^1` in
/// degree -1; dualizing that pair puts `Hom(Hom)` and `Ext^1(Ext^1)` back
/// into degree 0 and nothing anywhere else.
pub fn double_dual_verify(g: &FinAbGroup) -> bool {
    let mut once: BTreeMap<i64, FinAbGroup> = BTreeMap::new();
    two_term_dual_into(&mut once, 0, g);
    let mut twice: BTreeMap<i64, FinAbGroup> = BTreeMap::new();
    for (k, h) in &once {
        two_term_dual_into(&mut twice, *k, h);
    }
    twice.retain(|_, h| !h.is_zero());
    match twice.len() {
        0 => g.is_zero(),
        1 => twice.get(&0) == Some(g),
        _ => false,
    }
}

fn two_term_dual_into(out: &mut BTreeMap<i64, FinAbGroup>, degree: i64, g: &FinAbGroup) {
    let hom = hom_free_dual(g);
    let ext = ext1_torsion_dual(g);
    let slot = out.entry(-degree).or_default();
    *slot = slot.direct_sum(&hom);
    let slot = out.entry(-degree - 1).or_default();
    *slot = slot.direct_sum(&ext);
}

/// Integer-graded abelian group over an explicit window of degrees.
///
/// Degrees outside the window are undefined, not zero.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GradedAbGroup {
    window: (i64, i64),
    groups: BTreeMap<i64, FinAbGroup>,
}

/// Compact JSON form of a graded group: `{"window": [lo, hi], "groups":
/// {"0": "Z", "1": "Z/2"}}`, with missing degrees read as zero.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GradedTable {
    pub window: (i64, i64),
    #[serde(default)]
    pub groups: BTreeMap<i64, String>,
}

impl GradedTable {
    pub fn to_graded(&self) -> Result<GradedAbGroup> {
        let (lo, hi) = self.window;
        if lo > hi {
            return Err(Error::InvalidParameter(format!("empty window [{lo}, {hi}]")));
        }
        if let Some(k) = self.groups.keys().find(|k| !(lo..=hi).contains(*k)) {
            return Err(Error::OutsideWindow(format!("degree {k} is outside [{lo}, {hi}]")));
        }
        let mut g = GradedAbGroup::zero(lo, hi);
        for (k, s) in &self.groups {
            g.set(*k, FinAbGroup::parse(s)?)?;
        }
        Ok(g)
    }
}

impl From<&GradedAbGroup> for GradedTable {
    fn from(g: &GradedAbGroup) -> Self {
        GradedTable {
            window: g.window,
            groups: g.iter().map(|(k, h)| (k, h.to_string())).collect(),
        }
    }
}

impl GradedAbGroup {
    /// All-zero graded group on `[lo, hi]`.
    pub fn zero(lo: i64, hi: i64) -> Self {
        Self::from_fn(lo, hi, |_| FinAbGroup::zero())
    }

    pub fn from_fn(lo: i64, hi: i64, mut f: impl FnMut(i64) -> FinAbGroup) -> Self {
        GradedAbGroup {
            window: (lo, hi),
            groups: (lo..=hi).map(|k| (k, f(k))).collect(),
        }
    }

    pub fn window(&self) -> (i64, i64) {
        self.window
    }

    pub fn get(&self, degree: i64) -> Option<&FinAbGroup> {
        self.groups.get(&degree)
    }

    pub fn set(&mut self, degree: i64, g: FinAbGroup) -> Result<()> {
        if degree < self.window.0 || degree > self.window.1 {
            return Err(Error::OutsideWindow(format!(
                "degree {degree} outside [{}, {}]",
                self.window.0, self.window.1
            )));
        }
        self.groups.insert(degree, g);
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, &FinAbGroup)> {
        self.groups.iter().map(|(k, g)| (*k, g))
    }

    /// `shifted(s)[k] = self[k - s]`.
    pub fn shifted(&self, s: i64) -> Self {
        GradedAbGroup {
            window: (self.window.0 + s, self.window.1 + s),
            groups: self.groups.iter().map(|(k, g)| (k + s, g.clone())).collect(),
        }
    }

    /// Restriction to a sub-window.
    pub fn restrict(&self, lo: i64, hi: i64) -> Result<Self> {
        if lo < self.window.0 || hi > self.window.1 {
            return Err(Error::OutsideWindow(format!(
                "[{lo}, {hi}] not inside [{}, {}]",
                self.window.0, self.window.1
            )));
        }
        Ok(Self::from_fn(lo, hi, |k| self.groups[&k].clone()))
    }

    /// Agreement on the intersection of the two windows.
    pub fn agrees_on_overlap(&self, other: &GradedAbGroup) -> bool {
        let lo = self.window.0.max(other.window.0);
        let hi = self.window.1.min(other.window.1);
        (lo..=hi).all(|k| self.get(k) == other.get(k))
    }
}

impl fmt::Display for GradedAbGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, g) in &self.groups {
            writeln!(f, "{k:>4}: {g}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn local_smith_matches_integer_smith() {
        let a = IntMatrix::from_rows(&[vec![2, 4, 6], vec![1, 3, 7], vec![8, 0, 4]]);
        let p = BigInt::from(2);
        for n in 1..=5u32 {
            let q = BigInt::from(1u64 << n);
            let ls = local_smith(&a, &p, n);
            let with_rel = a.hstack(&IntMatrix::diagonal(3, 3, &vec![q.clone(); 3])).unwrap();
            assert_eq!(ls.cokernel(), cokernel(&with_rel), "n = {n}");
            let (ker, gens) = ls.kernel();
            assert_eq!(ker.order().unwrap(), ls.cokernel().order().unwrap());
            for g in &gens {
                assert!(a.apply(g).unwrap().iter().all(|x| x.is_multiple_of(&q)));
            }
            for b in [[1, 0, 0], [0, 1, 1], [2, 2, 0], [3, 5, 7]] {
                let b: Vec<BigInt> = b.iter().map(|&x| BigInt::from(x)).collect();
                let x = ls.solve(&b).unwrap();
                let y = solve_mod(&a, &b, &q).unwrap();
                assert_eq!(x.is_some(), y.is_some());
                if let Some(x) = x {
                    let ax = a.apply(&x).unwrap();
                    assert!(ax.iter().zip(&b).all(|(u, v)| (u - v).is_multiple_of(&q)));
                }
            }
        }
    }

    fn big(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    fn check_smith(a: &IntMatrix) -> Smith {
        let sm = smith_normal_form(a);
        assert_eq!(sm.s.mul(a).unwrap().mul(&sm.t).unwrap(), sm.d);
        assert_eq!(sm.s.mul(&sm.s_inv).unwrap(), IntMatrix::identity(a.rows()));
        assert_eq!(sm.t.mul(&sm.t_inv).unwrap(), IntMatrix::identity(a.cols()));
        sm
    }

    #[test]
    fn smith_small_examples() {
        let sm = check_smith(&IntMatrix::from_rows(&[[2, 4], [6, 8]]));
        assert_eq!(sm.diagonal(), big(&[2, 4]));
        let sm = check_smith(&IntMatrix::identity(2));
        assert_eq!(sm.diagonal(), big(&[1, 1]));
        let sm = check_smith(&IntMatrix::from_rows(&[[0]]));
        assert_eq!(sm.diagonal(), big(&[0]));
        assert_eq!(sm.rank, 0);
    }

    #[test]
    fn smith_empty() {
        let sm = check_smith(&IntMatrix::zeros(0, 3));
        assert!(sm.diagonal().is_empty());
        let sm = check_smith(&IntMatrix::zeros(2, 0));
        assert_eq!(sm.rank, 0);
        assert_eq!(cokernel(&IntMatrix::zeros(2, 0)), FinAbGroup::free(2));
        assert_eq!(kernel(&IntMatrix::zeros(0, 2)).0, FinAbGroup::free(2));
    }

    #[test]
    fn cokernel_examples() {
        assert_eq!(cokernel(&IntMatrix::from_rows(&[[2]])), FinAbGroup::cyclic(2));
        assert_eq!(cokernel(&IntMatrix::from_rows(&[[0]])), FinAbGroup::free(1));
        // 9P - I for the 4-cycle
        let a = IntMatrix::from_rows(&[[-1, 0, 0, 9], [9, -1, 0, 0], [0, 9, -1, 0], [0, 0, 9, -1]]);
        assert_eq!(cokernel(&a), FinAbGroup::cyclic(6560));
        assert_eq!(kernel(&a).0, FinAbGroup::zero());
    }

    #[test]
    fn kernel_examples() {
        assert_eq!(kernel(&IntMatrix::from_rows(&[[2]])).0.free_rank(), 0);
        // sign action: 1 - c = 2, 1 + c = 0
        assert_eq!(kernel(&IntMatrix::from_rows(&[[2]])).1.len(), 0);
        let (g, basis) = kernel(&IntMatrix::from_rows(&[[0]]));
        assert_eq!(g, FinAbGroup::free(1));
        assert_eq!(basis, vec![big(&[1])]);
    }

    #[test]
    fn homology_examples() {
        let zero = IntMatrix::from_rows(&[[0]]);
        let two = IntMatrix::from_rows(&[[2]]);
        assert_eq!(homology_subquotient(&zero, &zero).unwrap(), FinAbGroup::free(1));
        assert_eq!(homology_subquotient(&two, &zero).unwrap(), FinAbGroup::cyclic(2));
        // sign module: ker(1 - c) / im(1 + c) with 1 - c = 2, 1 + c = 0 ... and
        // ker(1 + c) / im(1 - c) = Z / 2 at the odd spot
        assert_eq!(homology_subquotient(&two, &zero).unwrap(), FinAbGroup::cyclic(2));
        assert_eq!(homology_subquotient(&zero, &two).unwrap(), FinAbGroup::zero());
        assert!(matches!(
            homology_subquotient(&two, &two),
            Err(Error::InconsistentDifferential(_))
        ));
    }

    #[test]
    fn group_canonical_form() {
        let g = FinAbGroup::from_orders(1, big(&[6, 4, 1, 0]));
        assert_eq!(g.free_rank(), 2);
        assert_eq!(g.torsion(), &big(&[2, 12])[..]);
        assert_eq!(g.to_string(), "Z^2 ⊕ Z/2 ⊕ Z/12");
        assert_eq!(FinAbGroup::parse(&g.to_string()).unwrap(), g);
        assert_eq!(FinAbGroup::parse("0").unwrap(), FinAbGroup::zero());
    }

    #[test]
    fn duals() {
        let g = FinAbGroup::from_orders(1, big(&[2]));
        assert_eq!(hom_free_dual(&g), FinAbGroup::free(1));
        assert_eq!(ext1_torsion_dual(&g), FinAbGroup::cyclic(2));
        let g = FinAbGroup::cyclic(2);
        assert_eq!(hom_free_dual(&g), FinAbGroup::zero());
        let g = FinAbGroup::free(2);
        assert_eq!(ext1_torsion_dual(&g), FinAbGroup::zero());
        assert!(double_dual_verify(&FinAbGroup::cyclic(6)));
        assert!(double_dual_verify(&FinAbGroup::from_orders(3, big(&[4, 8]))));
        assert!(double_dual_verify(&FinAbGroup::zero()));
    }

    #[test]
    fn subquotient_generators() {
        // 2Z inside Z, modulo 8Z: Z/4 generated by 2
        let num = IntMatrix::from_rows(&[[2]]);
        let den = IntMatrix::from_rows(&[[8]]);
        let sq = Subquotient::new(&num, &den).unwrap();
        assert_eq!(sq.group(), &FinAbGroup::cyclic(4));
        let gens = sq.generators();
        assert_eq!(gens.len(), 1);
        assert_eq!(gens[0].vector[0].abs(), BigInt::from(2));
        assert_eq!(sq.class_coords(&big(&[6])).unwrap().len(), 1);
        assert!(sq.class_coords(&big(&[3])).is_err());
        assert!(Subquotient::new(&den, &num).is_err());
    }

    #[test]
    fn graded_window_is_explicit() {
        let g = GradedAbGroup::zero(-2, 2);
        assert!(g.get(3).is_none());
        assert_eq!(g.get(0), Some(&FinAbGroup::zero()));
        let s = g.shifted(4);
        assert_eq!(s.window(), (2, 6));
    }
}
