//! Nonnegative scalar fields on regular voxel grids.
//!
//! Values live either in a dense row-major array or as run-length rows along
//! the last axis; indicator fields built by the rasterizer use runs.

mod builders;
mod io;
mod raster;

pub use builders::{
    box_field, focusing_bounds, focusing_field, segment_field, tube_indicator_field, union_set_bounds, union_set_field, UnionConfig,
    SCALE_RANGE, TAIL_HALF_WIDTH,
};
pub use io::{read_field, write_field};
pub use raster::{rasterize, MomentPiece, PieceSet, PredicateSet, RowSet, SlabMask};
pub(crate) use raster::raster_runs;

use crate::error::{Error, Result};

/// Default budget on voxel counts for dense storage.
pub const DEFAULT_VOXEL_BUDGET: u128 = 200_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub shape: Vec<usize>,
    pub spacing: Vec<f64>,
}

impl Grid {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, shape: Vec<usize>) -> Result<Self> {
        if lo.len() != hi.len() || lo.len() != shape.len() || lo.len() < 2 {
            return Err(Error::InvalidInput("grid bounds and shape must agree, d >= 2".into()));
        }
        for i in 0..lo.len() {
            if !(hi[i] > lo[i]) || shape[i] == 0 || shape[i] > u32::MAX as usize {
                return Err(Error::InvalidInput(format!("degenerate grid axis {i}")));
            }
        }
        let spacing = (0..lo.len()).map(|i| (hi[i] - lo[i]) / shape[i] as f64).collect();
        Ok(Grid { lo, hi, shape, spacing })
    }

    /// Cubic voxels of side h covering [lo, hi]; the upper corner is rounded out.
    pub fn with_spacing(lo: Vec<f64>, hi: Vec<f64>, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::InvalidInput(format!("spacing {h}")));
        }
        let shape: Vec<usize> = lo.iter().zip(&hi).map(|(a, b)| ((b - a) / h - 1e-9).ceil().max(1.0) as usize).collect();
        let hi = lo.iter().zip(&shape).map(|(a, &n)| a + n as f64 * h).collect();
        let mut g = Grid::new(lo, hi, shape)?;
        g.spacing = vec![h; g.dim()];
        Ok(g)
    }

    /// The cube [−a, a]^d with side h.
    pub fn cube(d: usize, a: f64, h: f64) -> Result<Self> {
        Grid::with_spacing(vec![-a; d], vec![a; d], h)
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn voxel_count(&self) -> u128 {
        self.shape.iter().map(|&n| n as u128).product()
    }

    pub fn voxel_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    pub fn max_spacing(&self) -> f64 {
        self.spacing.iter().cloned().fold(0.0, f64::max)
    }

    /// Number of rows: product of all extents but the last.
    pub fn row_count(&self) -> usize {
        self.shape[..self.dim() - 1].iter().product()
    }

    pub fn row_len(&self) -> usize {
        self.shape[self.dim() - 1]
    }

    #[inline]
    pub fn center(&self, axis: usize, i: usize) -> f64 {
        self.lo[axis] + (i as f64 + 0.5) * self.spacing[axis]
    }

    /// Index of the voxel containing coordinate y on an axis (may be out of range).
    #[inline]
    pub fn index_of(&self, axis: usize, y: f64) -> i64 {
        ((y - self.lo[axis]) / self.spacing[axis]).floor() as i64
    }

    /// Smallest and largest indices whose centers lie in [a, b]; None if empty.
    #[inline]
    pub fn center_range(&self, axis: usize, a: f64, b: f64) -> Option<(usize, usize)> {
        let h = self.spacing[axis];
        let i0 = ((a - self.lo[axis]) / h - 0.5).ceil().max(0.0);
        let i1 = ((b - self.lo[axis]) / h - 0.5).floor().min(self.shape[axis] as f64 - 1.0);
        if i0 > i1 {
            None
        } else {
            Some((i0 as usize, i1 as usize))
        }
    }

    /// Row index of the leading indices idx[0..d−1].
    #[inline]
    pub fn row_index(&self, lead: &[usize]) -> usize {
        let mut r = 0;
        for (k, &i) in lead.iter().enumerate() {
            r = r * self.shape[k] + i;
        }
        r
    }

    pub fn check_resolution(&self, delta: f64) -> Result<()> {
        let h = self.max_spacing();
        if h > delta / 2.0 * (1.0 + 1e-12) {
            Err(Error::Resolution { spacing: h, delta })
        } else {
            Ok(())
        }
    }
}

/// A maximal interval of equal value along the last axis: [start, end).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Run {
    pub start: u32,
    pub end: u32,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Storage {
    Dense(Vec<f64>),
    Runs { offsets: Vec<u64>, runs: Vec<Run> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid,
    pub storage: Storage,
}

impl ScalarField {
    pub fn dense(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() as u128 != grid.voxel_count() {
            return Err(Error::InvalidInput("value count does not match shape".into()));
        }
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidInput("field values must be finite and nonnegative".into()));
        }
        Ok(ScalarField {
            grid,
            storage: Storage::Dense(values),
        })
    }

    pub fn constant(grid: Grid, v: f64) -> Result<Self> {
        guard(&grid, DEFAULT_VOXEL_BUDGET)?;
        let n = grid.voxel_count() as usize;
        ScalarField::dense(grid, vec![v; n])
    }

    pub fn zeros(grid: Grid) -> Self {
        let rows = grid.row_count();
        ScalarField {
            grid,
            storage: Storage::Runs {
                offsets: vec![0; rows + 1],
                runs: vec![],
            },
        }
    }

    /// Dense field from a function of the voxel center.
    pub fn from_fn<F: Fn(&[f64]) -> f64>(grid: Grid, f: F) -> Result<Self> {
        guard(&grid, DEFAULT_VOXEL_BUDGET)?;
        let d = grid.dim();
        let n = grid.voxel_count() as usize;
        let mut values = Vec::with_capacity(n);
        let mut idx = vec![0usize; d];
        let mut y = vec![0.0; d];
        for _ in 0..n {
            for k in 0..d {
                y[k] = grid.center(k, idx[k]);
            }
            values.push(f(&y));
            for k in (0..d).rev() {
                idx[k] += 1;
                if idx[k] < grid.shape[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        ScalarField::dense(grid, values)
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Runs { .. })
    }

    /// Value of voxel with leading row `row` and last index k.
    #[inline]
    pub fn get(&self, row: usize, k: usize) -> f64 {
        match &self.storage {
            Storage::Dense(v) => v[row * self.grid.row_len() + k],
            Storage::Runs { offsets, runs } => {
                let rs = &runs[offsets[row] as usize..offsets[row + 1] as usize];
                let k = k as u32;
                let pos = rs.partition_point(|r| r.end <= k);
                match rs.get(pos) {
                    Some(r) if r.start <= k => r.value,
                    _ => 0.0,
                }
            }
        }
    }

    /// Value at the voxel containing y; zero outside the box.
    pub fn value_at(&self, y: &[f64]) -> f64 {
        let d = self.dim();
        let mut row = 0usize;
        for k in 0..d - 1 {
            let i = self.grid.index_of(k, y[k]);
            if i < 0 || i as usize >= self.grid.shape[k] {
                return 0.0;
            }
            row = row * self.grid.shape[k] + i as usize;
        }
        let k = self.grid.index_of(d - 1, y[d - 1]);
        if k < 0 || k as usize >= self.grid.row_len() {
            return 0.0;
        }
        self.get(row, k as usize)
    }

    /// Σ values over voxels k ∈ [k0, k1) of a row.
    #[inline]
    pub fn row_sum(&self, row: usize, k0: usize, k1: usize) -> f64 {
        match &self.storage {
            Storage::Dense(v) => {
                let base = row * self.grid.row_len();
                v[base + k0..base + k1].iter().sum()
            }
            Storage::Runs { offsets, runs } => {
                let rs = &runs[offsets[row] as usize..offsets[row + 1] as usize];
                let (a, b) = (k0 as u32, k1 as u32);
                let mut s = 0.0;
                for r in rs {
                    if r.end <= a {
                        continue;
                    }
                    if r.start >= b {
                        break;
                    }
                    s += r.value * (r.end.min(b) - r.start.max(a)) as f64;
                }
                s
            }
        }
    }

    /// Σ_j w[j]·value(row, k0 + j).
    pub fn row_dot(&self, row: usize, k0: usize, w: &[f64]) -> f64 {
        let k1 = k0 + w.len();
        match &self.storage {
            Storage::Dense(v) => {
                let base = row * self.grid.row_len();
                v[base + k0..base + k1].iter().zip(w).map(|(a, b)| a * b).sum()
            }
            Storage::Runs { offsets, runs } => {
                let rs = &runs[offsets[row] as usize..offsets[row + 1] as usize];
                let mut s = 0.0;
                for r in rs {
                    let (a, b) = ((r.start as usize).max(k0), (r.end as usize).min(k1));
                    if a < b {
                        s += r.value * w[a - k0..b - k0].iter().sum::<f64>();
                    }
                }
                s
            }
        }
    }

    /// Visit every nonzero voxel run as (row, start, end, value).
    pub fn for_each_run<F: FnMut(usize, usize, usize, f64)>(&self, mut f: F) {
        match &self.storage {
            Storage::Dense(v) => {
                let n = self.grid.row_len();
                for (row, chunk) in v.chunks(n).enumerate() {
                    let mut k = 0;
                    while k < n {
                        if chunk[k] == 0.0 {
                            k += 1;
                            continue;
                        }
                        let val = chunk[k];
                        let s = k;
                        while k < n && chunk[k] == val {
                            k += 1;
                        }
                        f(row, s, k, val);
                    }
                }
            }
            Storage::Runs { offsets, runs } => {
                for row in 0..offsets.len() - 1 {
                    for r in &runs[offsets[row] as usize..offsets[row + 1] as usize] {
                        f(row, r.start as usize, r.end as usize, r.value);
                    }
                }
            }
        }
    }

    pub fn max_value(&self) -> f64 {
        let mut m: f64 = 0.0;
        self.for_each_run(|_, _, _, v| m = m.max(v));
        m
    }

    /// Number of voxels with positive value.
    pub fn support_voxels(&self) -> u64 {
        let mut n = 0u64;
        self.for_each_run(|_, a, b, v| {
            if v > 0.0 {
                n += (b - a) as u64
            }
        });
        n
    }

    /// Inclusive per-axis index bounds of the positive voxels.
    pub fn support_bounds(&self) -> Option<(Vec<usize>, Vec<usize>)> {
        let d = self.dim();
        let mut lo = vec![usize::MAX; d];
        let mut hi = vec![0usize; d];
        let mut any = false;
        let lead_shape = &self.grid.shape[..d - 1];
        self.for_each_run(|row, a, b, v| {
            if v <= 0.0 {
                return;
            }
            any = true;
            let mut rem = row;
            for k in (0..d - 1).rev() {
                let i = rem % lead_shape[k];
                rem /= lead_shape[k];
                lo[k] = lo[k].min(i);
                hi[k] = hi[k].max(i);
            }
            lo[d - 1] = lo[d - 1].min(a);
            hi[d - 1] = hi[d - 1].max(b - 1);
        });
        any.then_some((lo, hi))
    }

    /// (Σ v^p · voxel volume)^{1/p}.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if !(p >= 1.0) {
            return Err(Error::InvalidExponent(p));
        }
        let mut s = 0.0;
        self.for_each_run(|_, a, b, v| s += v.powf(p) * (b - a) as f64);
        Ok((s * self.grid.voxel_volume()).powf(1.0 / p))
    }

    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) {
            return Err(Error::InvalidInput("scale factor must be nonnegative".into()));
        }
        let storage = match &self.storage {
            Storage::Dense(v) => Storage::Dense(v.iter().map(|x| x * lambda).collect()),
            Storage::Runs { offsets, runs } => Storage::Runs {
                offsets: offsets.clone(),
                runs: runs
                    .iter()
                    .map(|r| Run {
                        value: r.value * lambda,
                        ..*r
                    })
                    .collect(),
            },
        };
        Ok(ScalarField {
            grid: self.grid.clone(),
            storage,
        })
    }

    pub fn to_dense(&self, budget: u128) -> Result<Self> {
        guard(&self.grid, budget)?;
        let n = self.grid.row_len();
        let mut v = vec![0.0; self.grid.voxel_count() as usize];
        self.for_each_run(|row, a, b, val| v[row * n + a..row * n + b].fill(val));
        ScalarField::dense(self.grid.clone(), v)
    }

    pub fn to_runs(&self) -> Self {
        let mut offsets = vec![0u64; self.grid.row_count() + 1];
        let mut runs = Vec::new();
        let mut last_row = 0;
        self.for_each_run(|row, a, b, val| {
            while last_row < row {
                last_row += 1;
                offsets[last_row] = runs.len() as u64;
            }
            runs.push(Run {
                start: a as u32,
                end: b as u32,
                value: val,
            });
        });
        for o in offsets.iter_mut().skip(last_row + 1) {
            *o = runs.len() as u64;
        }
        ScalarField {
            grid: self.grid.clone(),
            storage: Storage::Runs { offsets, runs },
        }
    }
}

pub fn guard(grid: &Grid, budget: u128) -> Result<()> {
    let voxels = grid.voxel_count();
    if voxels > budget {
        Err(Error::Budget { voxels, budget })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_grid(n: usize) -> Grid {
        Grid::new(vec![0.0; 3], vec![1.0; 3], vec![n; 3]).unwrap()
    }

    #[test]
    fn ones_have_unit_norm() {
        let f = ScalarField::constant(unit_grid(8), 1.0).unwrap();
        for p in [1.0, 2.0, 7.5] {
            assert!((f.lp_norm(p).unwrap() - 1.0).abs() < 1e-12);
        }
        assert_eq!(f.lp_norm(0.5), Err(Error::InvalidExponent(0.5)));
    }

    #[test]
    fn half_box_norm() {
        let f = ScalarField::from_fn(unit_grid(8), |y| if y[0] < 0.5 { 1.0 } else { 0.0 }).unwrap();
        assert!((f.lp_norm(2.0).unwrap() - 0.5f64.sqrt()).abs() < 1e-12);
        let g = f.to_runs();
        assert!((g.lp_norm(2.0).unwrap() - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn runs_and_dense_agree() {
        let f = ScalarField::from_fn(unit_grid(10), |y| {
            let v = (7.0 * y[0]).sin() * (3.0 * y[2]).cos();
            if v > 0.2 {
                (v * 4.0).round()
            } else {
                0.0
            }
        })
        .unwrap();
        let g = f.to_runs();
        assert!(g.is_sparse());
        for row in 0..f.grid.row_count() {
            for k in 0..10 {
                assert_eq!(f.get(row, k), g.get(row, k));
            }
            for (a, b) in [(0, 10), (2, 7), (5, 6)] {
                assert!((f.row_sum(row, a, b) - g.row_sum(row, a, b)).abs() < 1e-12);
            }
        }
        assert_eq!(g.to_dense(DEFAULT_VOXEL_BUDGET).unwrap(), f);
        assert_eq!(f.support_bounds(), g.support_bounds());
    }

    #[test]
    fn lookup_outside_is_zero() {
        let f = ScalarField::constant(unit_grid(4), 2.0).unwrap();
        assert_eq!(f.value_at(&[0.5, 0.5, 0.5]), 2.0);
        assert_eq!(f.value_at(&[1.5, 0.5, 0.5]), 0.0);
        assert_eq!(f.value_at(&[0.5, -0.1, 0.5]), 0.0);
    }

    #[test]
    fn spacing_grid_is_exact() {
        let g = Grid::with_spacing(vec![-1.0, -1.0], vec![1.0, 0.3], 0.25).unwrap();
        assert_eq!(g.shape, vec![8, 6]);
        assert_eq!(g.spacing, vec![0.25, 0.25]);
        assert_eq!(g.center_range(0, -0.8, 0.0), Some((1, 3)));
        assert_eq!(g.center_range(0, 0.01, 0.1), None);
    }

    #[test]
    fn budget_guard() {
        let g = Grid::cube(3, 1.0, 0.001).unwrap();
        assert!(matches!(ScalarField::constant(g, 1.0), Err(Error::Budget { .. })));
    }
}
