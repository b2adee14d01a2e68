//! Diagonal serialization of the two-parameter converse grid.
//!
//! The grid holds the points `(i / M_u, j / M_v)` for `0 <= i < M_u`, `0 <= j < M_v`
//! (left cell edges, not the quantizer's cell centers). Points are visited one
//! 45-degree diagonal `j - i = l` at a time, for `l` from `M_v - 1` down to
//! `-(M_u - 1)`, each diagonal from bottom-left to top-right. Consecutive points
//! on one diagonal therefore differ by exactly `(1/M_u, 1/M_v)`; the
//! `M_u + M_v - 2` steps between diagonals are the roll-overs.

use std::io::Write;

use crate::error::{invalid, Error, Result};
use crate::num::{from_usize, lit, Real};
use crate::report::fmt_f64;
use crate::theory::ErrorCostSpec;

/// Integer grid coordinates of one scan point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridIndex {
    pub i: usize,
    pub j: usize,
}

impl GridIndex {
    /// Diagonal label `l = j - i`.
    pub fn diagonal(&self) -> i64 {
        self.j as i64 - self.i as i64
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridScan {
    m_u: usize,
    m_v: usize,
    order: Vec<GridIndex>,
    rollovers: Vec<usize>,
    diagonal_offsets: Vec<(i64, usize)>,
}

impl GridScan {
    pub fn m_u(&self) -> usize {
        self.m_u
    }

    pub fn m_v(&self) -> usize {
        self.m_v
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn order(&self) -> &[GridIndex] {
        &self.order
    }

    /// Indices `k` whose step `w_k -> w_{k+1}` jumps to the next diagonal, ascending.
    pub fn rollovers(&self) -> &[usize] {
        &self.rollovers
    }

    pub fn is_rollover(&self, k: usize) -> bool {
        self.rollovers.binary_search(&k).is_ok()
    }

    /// Step indices `k` (with `k + 1 < len`) that stay on one diagonal.
    pub fn in_diagonal_steps(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.order.len().saturating_sub(1)).filter(move |&k| !self.is_rollover(k))
    }

    /// `(l, first scan index of diagonal l)` in scan order.
    pub fn diagonal_offsets(&self) -> &[(i64, usize)] {
        &self.diagonal_offsets
    }

    /// Parameter-space coordinates `(i / M_u, j / M_v)` of scan point `k`.
    pub fn point<T: Real>(&self, k: usize) -> [T; 2] {
        let g = self.order[k];
        [
            from_usize::<T>(g.i) / from_usize(self.m_u),
            from_usize::<T>(g.j) / from_usize(self.m_v),
        ]
    }

    pub fn points<T: Real>(&self) -> Vec<[T; 2]> {
        (0..self.len()).map(|k| self.point(k)).collect()
    }

    /// Writes `k,i,j,u,v,is_rollover` rows with a header line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "k,i,j,u,v,is_rollover")?;
        for (k, g) in self.order.iter().enumerate() {
            let [u, v] = self.point::<f64>(k);
            writeln!(
                out,
                "{k},{},{},{},{},{}",
                g.i,
                g.j,
                fmt_f64(u),
                fmt_f64(v),
                self.is_rollover(k)
            )?;
        }
        Ok(())
    }
}

/// Builds the diagonal scan of the `M_u x M_v` grid.
pub fn diagonal_scan(m_u: usize, m_v: usize) -> Result<GridScan> {
    if m_u == 0 || m_v == 0 {
        return Err(invalid(format!("grid sizes must be >= 1, got ({m_u}, {m_v})")));
    }
    let total = m_u
        .checked_mul(m_v)
        .ok_or_else(|| invalid("grid too large"))?;
    let mut order = Vec::with_capacity(total);
    let mut rollovers = Vec::with_capacity(m_u + m_v - 2);
    let mut diagonal_offsets = Vec::with_capacity(m_u + m_v - 1);
    let (mu, mv) = (m_u as i64, m_v as i64);
    for l in (-(mu - 1)..=mv - 1).rev() {
        if !order.is_empty() {
            rollovers.push(order.len() - 1);
        }
        diagonal_offsets.push((l, order.len()));
        let first = (-l).max(0);
        let last = mu.min(mv - l) - 1;
        for i in first..=last {
            order.push(GridIndex { i: i as usize, j: (i + l) as usize });
        }
    }
    debug_assert_eq!(order.len(), total);
    Ok(GridScan { m_u, m_v, order, rollovers, diagonal_offsets })
}

/// Half-step cost `rho(1/(2 M_u), 1/(2 M_v))` shared by all in-diagonal transitions.
pub fn scan_step_cost<T: Real>(m_u: usize, m_v: usize, ecf: &ErrorCostSpec<T>) -> Result<T> {
    if ecf.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: ecf.dim() });
    }
    if m_u == 0 || m_v == 0 {
        return Err(invalid(format!("grid sizes must be >= 1, got ({m_u}, {m_v})")));
    }
    let two: T = lit(2.0);
    Ok(ecf.cost(&[
        T::one() / (two * from_usize(m_u)),
        T::one() / (two * from_usize(m_v)),
    ]))
}

/// `min_t |t|^q + |1 - t|^q = 2^(1-q)`: the cost separation factor between adjacent diagonals.
pub fn diagonal_separation_constant<T: Real>(q: T) -> T {
    lit::<T>(2.0).powf(T::one() - q)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coords(s: &GridScan) -> Vec<(usize, usize)> {
        s.order().iter().map(|g| (g.i, g.j)).collect()
    }

    #[test]
    fn four_by_four_rollovers() {
        let s = diagonal_scan(4, 4).unwrap();
        assert_eq!(s.rollovers(), &[0, 2, 5, 9, 12, 14]);
        assert_eq!(s.point::<f64>(0), [0.0, 0.75]);
        assert_eq!(s.len(), 16);
    }

    #[test]
    fn single_point() {
        let s = diagonal_scan(1, 1).unwrap();
        assert_eq!(coords(&s), vec![(0, 0)]);
        assert!(s.rollovers().is_empty());
        assert_eq!(s.in_diagonal_steps().count(), 0);
    }

    #[test]
    fn two_by_two_order() {
        let s = diagonal_scan(2, 2).unwrap();
        let pts: Vec<[f64; 2]> = s.points();
        assert_eq!(pts, vec![[0.0, 0.5], [0.0, 0.0], [0.5, 0.5], [0.5, 0.0]]);
    }

    #[test]
    fn rectangular_rollover_count() {
        let s = diagonal_scan(3, 2).unwrap();
        assert_eq!(s.rollovers().len(), 3);
        let s = diagonal_scan(5, 1).unwrap();
        // single row: every point is its own diagonal
        assert_eq!(s.rollovers().len(), 4);
        assert_eq!(coords(&s), vec![(0, 0), (1, 0), (2, 0), (3, 0), (4, 0)]);
    }

    #[test]
    fn rejects_empty_grid() {
        assert!(diagonal_scan(0, 3).is_err());
        assert!(diagonal_scan(3, 0).is_err());
    }

    #[test]
    fn step_cost_examples() {
        let e = ErrorCostSpec::new(1.0, vec![0.0, 0.0], 7).unwrap();
        assert_eq!(scan_step_cost(4, 4, &e).unwrap(), 0.25);
        let c1 = scan_step_cost(4, 4, &e).unwrap();
        let c2 = scan_step_cost(8, 4, &e).unwrap();
        assert_eq!(c1 - c2, 0.125 - 0.0625);
        let asym = ErrorCostSpec::new(2.0, vec![0.3, 0.3], 3).unwrap();
        assert_eq!(scan_step_cost(3, 5, &asym).unwrap(), scan_step_cost(5, 3, &asym).unwrap());
        let one_d = ErrorCostSpec::new(1.0, vec![0.0], 1).unwrap();
        assert!(scan_step_cost(4, 4, &one_d).is_err());
    }

    #[test]
    fn separation_constant_examples() {
        assert_eq!(diagonal_separation_constant(1.0_f64), 1.0);
        assert_eq!(diagonal_separation_constant(2.0_f64), 0.5);
        assert_eq!(diagonal_separation_constant(3.0_f64), 0.25);
    }

    #[test]
    fn csv_dump() {
        let mut buf = Vec::new();
        diagonal_scan(2, 2).unwrap().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "k,i,j,u,v,is_rollover");
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("0,0,1,"));
        assert!(lines[1].ends_with(",true"));
        assert!(lines[2].ends_with(",false"));
        assert!(lines[3].ends_with(",true"));
        assert!(lines[4].ends_with(",false"));
    }
}
