//! Slab-by-slab rasterization of sets into run-length indicator fields.
//!
//! A voxel belongs to a set when its center does. Sets report, per slab of
//! constant first coordinate, which stretches of each row along the last axis
//! they cover.

use super::{Grid, Run, ScalarField, Storage};
use rayon::prelude::*;

/// Largest bitmap, in 64-bit words, before a slab switches to interval lists.
const DENSE_WORDS: usize = 1 << 20;

/// Marked voxels of one slab: a bitmap over its rows, or a list of
/// intervals when the bitmap would be large.
pub struct SlabMask {
    words: usize,
    bits: Vec<u64>,
    list: Vec<(u32, u32, u32)>,
    dense: bool,
    lo_row: usize,
    hi_row: usize,
}

impl SlabMask {
    fn new(grid: &Grid) -> Self {
        let d = grid.dim();
        let rows: usize = grid.shape[1..d - 1].iter().product();
        let words = grid.row_len().div_ceil(64);
        let dense = rows.saturating_mul(words) <= DENSE_WORDS;
        SlabMask {
            words,
            bits: if dense { vec![0; rows * words] } else { Vec::new() },
            list: Vec::new(),
            dense,
            lo_row: usize::MAX,
            hi_row: 0,
        }
    }

    /// Mark voxels k0..=k1 of a slab row.
    #[inline]
    pub fn set(&mut self, row: usize, k0: usize, k1: usize) {
        if !self.dense {
            self.list.push((row as u32, k0 as u32, k1 as u32));
            return;
        }
        self.lo_row = self.lo_row.min(row);
        self.hi_row = self.hi_row.max(row);
        let base = row * self.words;
        let (w0, w1) = (k0 / 64, k1 / 64);
        let m0 = !0u64 << (k0 % 64);
        let m1 = !0u64 >> (63 - k1 % 64);
        if w0 == w1 {
            self.bits[base + w0] |= m0 & m1;
        } else {
            self.bits[base + w0] |= m0;
            for w in &mut self.bits[base + w0 + 1..base + w1] {
                *w = !0;
            }
            self.bits[base + w1] |= m1;
        }
    }

    /// Drain marked rows into runs; `emit(row, start, end)` in row order.
    fn drain<F: FnMut(usize, u32, u32)>(&mut self, mut emit: F) {
        if !self.dense {
            self.list.sort_unstable();
            let mut cur: Option<(u32, u32, u32)> = None;
            for &(row, a, b) in &self.list {
                match &mut cur {
                    Some((r, _, e)) if *r == row && a <= *e + 1 => *e = (*e).max(b),
                    _ => {
                        if let Some((r, s, e)) = cur {
                            emit(r as usize, s, e + 1);
                        }
                        cur = Some((row, a, b));
                    }
                }
            }
            if let Some((r, s, e)) = cur {
                emit(r as usize, s, e + 1);
            }
            self.list.clear();
            return;
        }
        if self.lo_row == usize::MAX {
            return;
        }
        for row in self.lo_row..=self.hi_row {
            let ws = &mut self.bits[row * self.words..(row + 1) * self.words];
            let mut open: Option<u32> = None;
            for (wi, w) in ws.iter_mut().enumerate() {
                let mut word = *w;
                *w = 0;
                let base = (wi * 64) as u32;
                if open.is_none() && word == 0 {
                    continue;
                }
                if open.is_some() && word == !0 {
                    continue;
                }
                let mut pos = 0u32;
                while pos < 64 {
                    match open {
                        None => {
                            if word == 0 {
                                break;
                            }
                            let z = word.trailing_zeros();
                            open = Some(base + z);
                            pos = z;
                            word = !word & (!0u64).checked_shl(z).unwrap_or(0);
                            word = !word;
                        }
                        Some(s) => {
                            let inv = !word & (!0u64).checked_shl(pos).unwrap_or(0);
                            if inv == 0 {
                                break;
                            }
                            let z = inv.trailing_zeros();
                            emit(row, s, base + z);
                            open = None;
                            pos = z;
                            word &= (!0u64).checked_shl(z).unwrap_or(0);
                        }
                    }
                }
            }
            if let Some(s) = open {
                emit(row, s, (self.words * 64) as u32);
            }
        }
        self.lo_row = usize::MAX;
        self.hi_row = 0;
    }
}

/// A set that can mark its voxels slab by slab.
pub trait RowSet: Sync {
    /// Mark the voxels of slab `i0` whose centers belong to the set.
    fn mark_slab(&self, grid: &Grid, i0: usize, mask: &mut SlabMask);

    /// Range of slabs that may contain members.
    fn slab_range(&self, grid: &Grid) -> (usize, usize) {
        (0, grid.shape[0])
    }
}

/// Runs of a set in global row order, as (row, start, end).
pub(crate) fn raster_runs(grid: &Grid, set: &dyn RowSet) -> Vec<(usize, u32, u32)> {
    let d = grid.dim();
    let rows_per_slab: usize = grid.shape[1..d - 1].iter().product();
    let n_last = grid.row_len() as u32;
    let (s0, s1) = set.slab_range(grid);
    const CHUNK: usize = 8;
    let slabs: Vec<usize> = (s0..s1).step_by(CHUNK).collect();
    let parts: Vec<Vec<(usize, u32, u32)>> = slabs
        .par_iter()
        .map(|&start| {
            let mut mask = SlabMask::new(grid);
            let mut out = Vec::new();
            for i0 in start..(start + CHUNK).min(s1) {
                set.mark_slab(grid, i0, &mut mask);
                mask.drain(|row, a, b| out.push((i0 * rows_per_slab + row, a, b.min(n_last))));
            }
            out
        })
        .collect();
    parts.concat()
}

/// Indicator field (value 1) of a set, stored as runs.
pub fn rasterize(grid: &Grid, set: &dyn RowSet) -> ScalarField {
    let total_rows = grid.row_count();
    let mut offsets = vec![0u64; total_rows + 1];
    let parts = raster_runs(grid, set);
    let mut runs = Vec::with_capacity(parts.len());
    for (row, start, end) in parts {
        offsets[row + 1] += 1;
        runs.push(Run { start, end, value: 1.0 });
    }
    for i in 0..total_rows {
        offsets[i + 1] += offsets[i];
    }
    ScalarField {
        grid: grid.clone(),
        storage: Storage::Runs { offsets, runs },
    }
}

/// Points within `radius` of { x + r·γ(t) + v : t ∈ [−1, 1], |v_i| ≤ slack_i }.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentPiece {
    pub center: Vec<f64>,
    pub scale: f64,
    /// Half-widths of the translation box per axis; slack[0] must be 0.
    pub slack: Vec<f64>,
    pub radius: f64,
}

impl MomentPiece {
    pub fn tube(center: &[f64], scale: f64, radius: f64) -> Self {
        MomentPiece {
            center: center.to_vec(),
            scale,
            slack: vec![0.0; center.len()],
            radius,
        }
    }

    /// Axis-aligned bounds of the piece.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let d = self.center.len();
        (0..d)
            .map(|i| {
                let (a, b) = mono_range(i + 1, -1.0, 1.0);
                let pad = self.slack[i] + self.radius;
                (
                    self.center[i] + self.scale * a - pad,
                    self.center[i] + self.scale * b + pad,
                )
            })
            .unzip()
    }

    /// Parameter window [lo, hi] for first coordinate y1, if nonempty.
    #[inline]
    fn window(&self, y1: f64) -> Option<(f64, f64)> {
        let a1 = y1 - self.center[0];
        let lo = ((a1 - self.radius) / self.scale).max(-1.0);
        let hi = ((a1 + self.radius) / self.scale).min(1.0);
        (lo <= hi).then_some((lo, hi))
    }

    /// Extent along the last axis, over the window, of the row with leading
    /// coordinates y1 and middle offsets `mid[m] = y_m − x_m`; `None` when the
    /// row misses the piece. With `skip` the middle axes are treated as
    /// inside their slack box.
    fn extent(&self, a1: f64, lo: f64, hi: f64, mid: &[f64], skip: bool) -> Option<(f64, f64)> {
        let d = self.center.len();
        let r = self.scale;
        let rho2 = self.radius * self.radius;
        let q = |t: f64| -> f64 {
            let e1 = a1 - r * t;
            let mut q = rho2 - e1 * e1;
            if !skip {
                let mut tp = t;
                for (m, &ym) in mid.iter().enumerate() {
                    tp *= t;
                    let e = ((ym - r * tp).abs() - self.slack[m + 1]).max(0.0);
                    q -= e * e;
                }
            }
            q
        };
        let c = |t: f64| self.center[d - 1] + r * t.powi(d as i32);
        const K: usize = 9;
        let step = (hi - lo) / (K - 1) as f64;
        let ts: [f64; K] = std::array::from_fn(|j| lo + j as f64 * step);
        let qs: [f64; K] = std::array::from_fn(|j| q(ts[j]));
        let (mut jb, mut qb) = (0, qs[0]);
        for j in 1..K {
            if qs[j] > qb {
                (jb, qb) = (j, qs[j]);
            }
        }
        let mut tb = ts[jb];
        if step > 0.0 && jb > 0 && jb < K - 1 {
            let t = tb + vertex_offset(qs[jb - 1], qs[jb], qs[jb + 1], step);
            let qt = q(t);
            if qt > qb {
                (tb, qb) = (t, qt);
            }
        }
        if qb < 0.0 {
            return None;
        }
        // Feasible interval around tb, by bisection toward the nearest
        // infeasible sample on each side.
        let edge = |mut inside: f64, mut outside: f64| -> f64 {
            for _ in 0..22 {
                let m = 0.5 * (inside + outside);
                if q(m) >= 0.0 {
                    inside = m;
                } else {
                    outside = m;
                }
            }
            inside
        };
        let tl = match (0..K).rev().find(|&j| ts[j] < tb && qs[j] < 0.0) {
            Some(j) => edge(tb, ts[j]),
            None => lo,
        };
        let tr = match (0..K).find(|&j| ts[j] > tb && qs[j] < 0.0) {
            Some(j) => edge(tb, ts[j]),
            None => hi,
        };
        let w = (tr - tl) / (K - 1) as f64;
        let mut up = [0.0f64; K];
        let mut dn = [0.0f64; K];
        for j in 0..K {
            let t = tl + j as f64 * w;
            let s = q(t).max(0.0).sqrt();
            up[j] = c(t) + s;
            dn[j] = c(t) - s;
        }
        let best = |f: &[f64; K], sign: f64| -> f64 {
            let mut j = 0;
            for i in 1..K {
                if sign * f[i] > sign * f[j] {
                    j = i;
                }
            }
            if w == 0.0 {
                return f[j];
            }
            // Golden section on the bracketing sample cells.
            let g = |t: f64| sign * (c(t) + sign * q(t).max(0.0).sqrt());
            let (mut a, mut b) = (tl + j.saturating_sub(1) as f64 * w, tl + (j + 1).min(K - 1) as f64 * w);
            const PHI: f64 = 0.618_033_988_749_895;
            let (mut x1, mut x2) = (b - PHI * (b - a), a + PHI * (b - a));
            let (mut g1, mut g2) = (g(x1), g(x2));
            for _ in 0..16 {
                if g1 > g2 {
                    b = x2;
                    (x2, g2) = (x1, g1);
                    x1 = b - PHI * (b - a);
                    g1 = g(x1);
                } else {
                    a = x1;
                    (x1, g1) = (x2, g2);
                    x2 = a + PHI * (b - a);
                    g2 = g(x2);
                }
            }
            let v = sign * g1.max(g2);
            if sign * v > sign * f[j] {
                v
            } else {
                f[j]
            }
        };
        let (zmin, zmax) = (best(&dn, -1.0), best(&up, 1.0));
        let s = qb.sqrt();
        Some((zmin.min(c(tb) - s), zmax.max(c(tb) + s)))
    }
}

/// Offset of the vertex of the parabola through (−h, f0), (0, f1), (h, f2),
/// clamped to [−h, h]; zero unless the parabola opens downward.
#[inline]
fn vertex_offset(f0: f64, f1: f64, f2: f64, h: f64) -> f64 {
    let den = f0 - 2.0 * f1 + f2;
    if den < 0.0 {
        (0.5 * h * (f0 - f2) / den).clamp(-h, h)
    } else {
        0.0
    }
}

/// Range of t^k over [lo, hi].
#[inline]
pub(crate) fn mono_range(k: usize, lo: f64, hi: f64) -> (f64, f64) {
    let (a, b) = (lo.powi(k as i32), hi.powi(k as i32));
    if k % 2 == 0 && lo < 0.0 && hi > 0.0 {
        (0.0, a.max(b))
    } else {
        (a.min(b), a.max(b))
    }
}

/// Union of moment pieces, optionally clipped to a ball.
#[derive(Debug, Clone)]
pub struct PieceSet {
    pub pieces: Vec<MomentPiece>,
    pub clip: Option<(Vec<f64>, f64)>,
}

impl PieceSet {
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let d = self.pieces[0].center.len();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for p in &self.pieces {
            let (a, b) = p.bounds();
            for i in 0..d {
                lo[i] = lo[i].min(a[i]);
                hi[i] = hi[i].max(b[i]);
            }
        }
        if let Some((c, rad)) = &self.clip {
            for i in 0..d {
                lo[i] = lo[i].max(c[i] - rad);
                hi[i] = hi[i].min(c[i] + rad);
            }
        }
        (lo, hi)
    }

    fn mark_piece(&self, p: &MomentPiece, grid: &Grid, i0: usize, mask: &mut SlabMask) {
        let d = grid.dim();
        let y1 = grid.center(0, i0);
        let Some((lo, hi)) = p.window(y1) else {
            return;
        };
        let a1 = y1 - p.center[0];
        let nm = d - 2;
        let mut ranges = [(0usize, 0usize); 16];
        let mut interior = [(0.0f64, 0.0f64); 16];
        let mut all_slack = true;
        for m in 0..nm {
            let axis = m + 1;
            let (a, b) = mono_range(axis + 1, lo, hi);
            let (cmin, cmax) = (p.center[axis] + p.scale * a, p.center[axis] + p.scale * b);
            let pad = p.slack[axis] + p.radius;
            match grid.center_range(axis, cmin - pad, cmax + pad) {
                Some(r) => ranges[m] = r,
                None => return,
            }
            if p.slack[axis] > 0.0 {
                interior[m] = (cmax - p.slack[axis], cmin + p.slack[axis]);
            } else {
                all_slack = false;
            }
        }
        let inner = if all_slack { p.extent(a1, lo, hi, &[], true) } else { None };
        let last = d - 1;
        let pad_last = p.slack[last];
        let mut idx = [0usize; 16];
        for m in 0..nm {
            idx[m] = ranges[m].0;
        }
        let mut mid = [0.0f64; 16];
        let mut ycoord = [0.0f64; 16];
        loop {
            let mut row = 0usize;
            let mut deep = all_slack;
            for m in 0..nm {
                let axis = m + 1;
                row = row * grid.shape[axis] + idx[m];
                let y = grid.center(axis, idx[m]);
                ycoord[m] = y;
                mid[m] = y - p.center[axis];
                if deep && !(y >= interior[m].0 && y <= interior[m].1) {
                    deep = false;
                }
            }
            let ext = if deep { inner } else { p.extent(a1, lo, hi, &mid[..nm], false) };
            if let Some((zlo, zhi)) = ext {
                let (mut zlo, mut zhi) = (zlo - pad_last, zhi + pad_last);
                let mut keep = true;
                if let Some((c, rad)) = &self.clip {
                    let mut rem = rad * rad - (y1 - c[0]).powi(2);
                    for m in 0..nm {
                        rem -= (ycoord[m] - c[m + 1]).powi(2);
                    }
                    if rem < 0.0 {
                        keep = false;
                    } else {
                        let w = rem.sqrt();
                        zlo = zlo.max(c[last] - w);
                        zhi = zhi.min(c[last] + w);
                    }
                }
                if keep {
                    if let Some((k0, k1)) = grid.center_range(last, zlo, zhi) {
                        mask.set(row, k0, k1);
                    }
                }
            }
            let mut m = nm;
            loop {
                if m == 0 {
                    return;
                }
                m -= 1;
                idx[m] += 1;
                if idx[m] <= ranges[m].1 {
                    break;
                }
                idx[m] = ranges[m].0;
            }
        }
    }
}

impl RowSet for PieceSet {
    fn mark_slab(&self, grid: &Grid, i0: usize, mask: &mut SlabMask) {
        if let Some((c, rad)) = &self.clip {
            if (grid.center(0, i0) - c[0]).abs() > *rad {
                return;
            }
        }
        for p in &self.pieces {
            self.mark_piece(p, grid, i0, mask);
        }
    }

    fn slab_range(&self, grid: &Grid) -> (usize, usize) {
        let (lo, hi) = self.bounds();
        match grid.center_range(0, lo[0], hi[0]) {
            Some((a, b)) => (a, b + 1),
            None => (0, 0),
        }
    }
}

/// Set given by a pointwise predicate inside a bounding box; tested voxel by voxel.
pub struct PredicateSet<F: Fn(&[f64]) -> bool + Sync> {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub pred: F,
}

impl<F: Fn(&[f64]) -> bool + Sync> RowSet for PredicateSet<F> {
    fn mark_slab(&self, grid: &Grid, i0: usize, mask: &mut SlabMask) {
        let d = grid.dim();
        let mut ranges = Vec::with_capacity(d);
        for axis in 1..d {
            match grid.center_range(axis, self.lo[axis], self.hi[axis]) {
                Some(r) => ranges.push(r),
                None => return,
            }
        }
        let mut y = vec![0.0; d];
        y[0] = grid.center(0, i0);
        let nm = d - 2;
        let mut idx: Vec<usize> = ranges[..nm].iter().map(|r| r.0).collect();
        loop {
            let mut row = 0;
            for m in 0..nm {
                row = row * grid.shape[m + 1] + idx[m];
                y[m + 1] = grid.center(m + 1, idx[m]);
            }
            for k in ranges[nm].0..=ranges[nm].1 {
                y[d - 1] = grid.center(d - 1, k);
                if (self.pred)(&y) {
                    mask.set(row, k, k);
                }
            }
            let mut m = nm;
            loop {
                if m == 0 {
                    return;
                }
                m -= 1;
                idx[m] += 1;
                if idx[m] <= ranges[m].1 {
                    break;
                }
                idx[m] = ranges[m].0;
            }
        }
    }

    fn slab_range(&self, grid: &Grid) -> (usize, usize) {
        match grid.center_range(0, self.lo[0], self.hi[0]) {
            Some((a, b)) => (a, b + 1),
            None => (0, 0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{in_neighborhood, MomentCurve};

    #[test]
    fn list_mask_matches_bitmap() {
        let g = Grid::new(vec![0.0; 3], vec![1.0; 3], vec![2, 3, 200]).unwrap();
        let mut a = SlabMask::new(&g);
        let mut b = SlabMask::new(&g);
        b.dense = false;
        for (row, k0, k1) in [(2, 5, 9), (0, 3, 70), (2, 10, 12), (0, 65, 130), (1, 0, 199), (2, 20, 20)] {
            a.set(row, k0, k1);
            b.set(row, k0, k1);
        }
        let (mut oa, mut ob) = (vec![], vec![]);
        a.drain(|r, s, e| oa.push((r, s, e)));
        b.drain(|r, s, e| ob.push((r, s, e)));
        assert_eq!(oa, ob);
        assert_eq!(ob[2..], [(2, 5, 13), (2, 20, 21)]);
    }

    #[test]
    fn mask_round_trip() {
        let g = Grid::new(vec![0.0; 3], vec![1.0; 3], vec![2, 3, 200]).unwrap();
        let mut m = SlabMask::new(&g);
        m.set(0, 3, 70);
        m.set(0, 65, 130);
        m.set(1, 0, 199);
        m.set(2, 63, 64);
        m.set(2, 127, 127);
        let mut out = vec![];
        m.drain(|r, a, b| out.push((r, a, b)));
        assert_eq!(out, vec![(0, 3, 131), (1, 0, 200), (2, 63, 65), (2, 127, 128)]);
        let mut out2 = vec![];
        m.drain(|r, a, b| out2.push((r, a, b)));
        assert!(out2.is_empty());
    }

    fn count_mismatch(set: &dyn RowSet, brute: &dyn RowSet, g: &Grid) -> (u64, u64) {
        let (f, b) = (rasterize(g, set), rasterize(g, brute));
        let mut diff = 0;
        for row in 0..g.row_count() {
            for k in 0..g.row_len() {
                if f.get(row, k) != b.get(row, k) {
                    diff += 1;
                }
            }
        }
        (diff, b.support_voxels())
    }

    #[test]
    fn tube_raster_matches_pointwise_membership() {
        for (x, r, delta, h) in [
            ([0.05, -0.1, 0.02], 0.9, 0.06, 0.03),
            ([0.0, 0.0, 0.0], 1.7, 0.02, 0.01),
            ([0.3, 0.1, -0.2], 0.6, 0.1, 0.021),
        ] {
            let c = MomentCurve::from_parts(&x, r).unwrap();
            let piece = MomentPiece::tube(&x, r, delta);
            let (lo, hi) = piece.bounds();
            let g = Grid::with_spacing(lo, hi, h).unwrap();
            let set = PieceSet {
                pieces: vec![piece],
                clip: None,
            };
            let brute = PredicateSet {
                lo: g.lo.clone(),
                hi: g.hi.clone(),
                pred: |y: &[f64]| in_neighborhood(y, &c, delta),
            };
            let (diff, n) = count_mismatch(&set, &brute, &g);
            assert!(n > 1000);
            assert!(diff as f64 <= 1e-3 * n as f64, "diff {diff} of {n}");
        }
    }

    #[test]
    fn slab_pieces_match_pointwise_membership() {
        // Translation slack on the last axis, then on the last two axes.
        for s in [2usize, 1] {
            let mut slack = vec![0.0; 3];
            for a in &mut slack[s..] {
                *a = 0.25;
            }
            let (r, delta) = (1.3, 0.05);
            let p = MomentPiece {
                center: vec![0.0; 3],
                scale: r,
                slack: slack.clone(),
                radius: delta,
            };
            let (lo, hi) = p.bounds();
            let g = Grid::with_spacing(lo.clone(), hi.clone(), 0.025).unwrap();
            let set = PieceSet {
                pieces: vec![p],
                clip: Some((vec![0.1, 0.2, 0.0], 0.9)),
            };
            let brute = PredicateSet {
                lo,
                hi,
                pred: |y: &[f64]| {
                    if (y[0] - 0.1).powi(2) + (y[1] - 0.2).powi(2) + y[2] * y[2] > 0.81 {
                        return false;
                    }
                    // Distance to the slab family by dense search in t.
                    (0..=2000).any(|j| {
                        let t = -1.0 + j as f64 / 1000.0;
                        let mut e = 0.0;
                        for i in 0..3 {
                            let v = y[i] - r * t.powi(i as i32 + 1);
                            let v = (v.abs() - slack[i]).max(0.0);
                            e += v * v;
                        }
                        e <= delta * delta
                    })
                },
            };
            let (diff, n) = count_mismatch(&set, &brute, &g);
            assert!(n > 1000);
            assert!(diff as f64 <= 2e-3 * n as f64, "s={s} diff {diff} of {n}");
        }
    }
}
