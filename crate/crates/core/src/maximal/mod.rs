//! Tube averages and the s-parameter maximal function on voxel fields.

mod smooth;

pub use smooth::{smooth_average, smooth_average_constant};



use crate::curve::MomentCurve;
use crate::error::{Error, Result};
use crate::field::{raster_runs, Grid, MomentPiece, PieceSet, ScalarField, SCALE_RANGE, TAIL_HALF_WIDTH};
use rayon::prelude::*;
use std::collections::HashMap;
use std::fmt::Write as _;

/// Voxel runs of a tube, in the lattice of a field grid.
#[derive(Debug, Clone)]
pub struct Stencil {
    d: usize,
    /// Leading indices per run, stride d − 1.
    lead: Vec<i64>,
    /// Half-open ranges along the last axis.
    spans: Vec<(i64, i64)>,
    count: u64,
    lo: Vec<i64>,
    hi: Vec<i64>,
}

impl Stencil {
    /// Voxels of `grid`'s lattice whose centers are within δ of the curve.
    pub fn new(grid: &Grid, c: &MomentCurve, delta: f64) -> Result<Self> {
        let d = grid.dim();
        if c.dim() != d {
            return Err(Error::InvalidInput("curve and field dimensions differ".into()));
        }
        grid.check_resolution(delta)?;
        let piece = MomentPiece::tube(&c.center.coords, c.scale, delta);
        let (blo, bhi) = piece.bounds();
        let mut base = vec![0i64; d];
        let mut shape = vec![0usize; d];
        for i in 0..d {
            let h = grid.spacing[i];
            base[i] = ((blo[i] - grid.lo[i]) / h).floor() as i64 - 1;
            let top = ((bhi[i] - grid.lo[i]) / h).ceil() as i64 + 1;
            shape[i] = (top - base[i]) as usize;
        }
        let lo: Vec<f64> = (0..d).map(|i| grid.lo[i] + base[i] as f64 * grid.spacing[i]).collect();
        let hi: Vec<f64> = (0..d).map(|i| lo[i] + shape[i] as f64 * grid.spacing[i]).collect();
        let mut local = Grid::new(lo, hi, shape)?;
        local.spacing = grid.spacing.clone();
        let set = PieceSet {
            pieces: vec![piece],
            clip: None,
        };
        let mut st = Stencil {
            d,
            lead: Vec::new(),
            spans: Vec::new(),
            count: 0,
            lo: vec![i64::MAX; d],
            hi: vec![i64::MIN; d],
        };
        let lead_shape = &local.shape[..d - 1];
        let mut idx = vec![0i64; d - 1];
        for (row, a, b) in raster_runs(&local, &set) {
            let mut rem = row;
            for k in (0..d - 1).rev() {
                idx[k] = (rem % lead_shape[k]) as i64 + base[k];
                rem /= lead_shape[k];
            }
            let (a, b) = (a as i64 + base[d - 1], b as i64 + base[d - 1]);
            st.push(&idx, a, b);
        }
        if st.count == 0 {
            return Err(Error::Degenerate("tube contains no voxel centers".into()));
        }
        Ok(st)
    }

    fn push(&mut self, idx: &[i64], a: i64, b: i64) {
        let d = self.d;
        for k in 0..d - 1 {
            self.lo[k] = self.lo[k].min(idx[k]);
            self.hi[k] = self.hi[k].max(idx[k]);
        }
        self.lo[d - 1] = self.lo[d - 1].min(a);
        self.hi[d - 1] = self.hi[d - 1].max(b - 1);
        self.lead.extend_from_slice(idx);
        self.spans.push((a, b));
        self.count += (b - a) as u64;
    }

    /// Drop runs that miss the index box [lo, hi] under every shift in
    /// [smin, smax]; the normalization keeps the full voxel count.
    fn restrict(&self, lo: &[usize], hi: &[usize], smin: &[i64], smax: &[i64]) -> Stencil {
        let d = self.d;
        let mut out = Stencil {
            d,
            lead: Vec::new(),
            spans: Vec::new(),
            count: 0,
            lo: vec![i64::MAX; d],
            hi: vec![i64::MIN; d],
        };
        let hits = |k: usize, a: i64, b: i64| a + smax[k] >= lo[k] as i64 && b + smin[k] <= hi[k] as i64;
        for (j, &(a, b)) in self.spans.iter().enumerate() {
            let idx = &self.lead[j * (d - 1)..(j + 1) * (d - 1)];
            if (0..d - 1).all(|k| hits(k, idx[k], idx[k])) && hits(d - 1, b - 1, a) {
                out.push(idx, a, b);
            }
        }
        out.count = self.count;
        out
    }

    pub fn voxel_count(&self) -> u64 {
        self.count
    }

    /// Average of f over the stencil shifted by `shift` voxels.
    pub fn average(&self, f: &ScalarField, shift: &[i64]) -> f64 {
        let d = self.d;
        let g = &f.grid;
        let n = g.row_len() as i64;
        let mut sum = 0.0;
        'runs: for (j, &(a, b)) in self.spans.iter().enumerate() {
            let mut row = 0usize;
            for k in 0..d - 1 {
                let i = self.lead[j * (d - 1) + k] + shift[k];
                if i < 0 || i >= g.shape[k] as i64 {
                    continue 'runs;
                }
                row = row * g.shape[k] + i as usize;
            }
            let (a, b) = ((a + shift[d - 1]).max(0), (b + shift[d - 1]).min(n));
            if a < b {
                sum += f.row_sum(row, a as usize, b as usize);
            }
        }
        sum / self.count as f64
    }

    /// Whether the shifted stencil box meets the index box [lo, hi].
    fn meets(&self, shift: &[i64], lo: &[usize], hi: &[usize]) -> bool {
        (0..self.d).all(|k| self.lo[k] + shift[k] <= hi[k] as i64 && self.hi[k] + shift[k] >= lo[k] as i64)
    }
}

/// Average of f over the δ-neighborhood of a curve, taken over the voxels
/// whose centers lie in it.
pub fn tube_average(f: &ScalarField, c: &MomentCurve, delta: f64) -> Result<f64> {
    Ok(Stencil::new(&f.grid, c, delta)?.average(f, &vec![0; f.dim()]))
}

/// A point (x̲, r) of the parameter space I₁^{s'−1} × I₂.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSample {
    pub x_tail: Vec<f64>,
    pub r: f64,
}

/// Nodes of a parameter grid with a common cell volume.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrid {
    pub samples: Vec<ParamSample>,
    pub cell_volume: f64,
}

impl ParamGrid {
    /// Cell-centered nodes: `n_tail` per tail axis over I₁ and `n_r` over `r_range`.
    pub fn cells(tail_dim: usize, n_tail: usize, n_r: usize, r_range: (f64, f64)) -> Result<Self> {
        if n_r == 0 || (tail_dim > 0 && n_tail == 0) || !(r_range.1 > r_range.0) {
            return Err(Error::InvalidConfiguration("empty parameter grid".into()));
        }
        let w = 2.0 * TAIL_HALF_WIDTH;
        let ht = w / n_tail.max(1) as f64;
        let hr = (r_range.1 - r_range.0) / n_r as f64;
        let mut samples = Vec::new();
        let total = n_tail.pow(tail_dim as u32);
        for flat in 0..total {
            let mut rem = flat;
            let x_tail: Vec<f64> = (0..tail_dim)
                .map(|_| {
                    let i = rem % n_tail;
                    rem /= n_tail;
                    -TAIL_HALF_WIDTH + (i as f64 + 0.5) * ht
                })
                .rev()
                .collect();
            for j in 0..n_r {
                samples.push(ParamSample {
                    x_tail: x_tail.clone(),
                    r: r_range.0 + (j as f64 + 0.5) * hr,
                });
            }
        }
        Ok(ParamGrid {
            samples,
            cell_volume: ht.powi(tail_dim as i32) * hr,
        })
    }

    /// δ-spaced cells over I₁^{d−s} × I₂.
    pub fn delta_spaced(d: usize, s: usize, delta: f64) -> Result<Self> {
        if s < 1 || s > d || !(delta > 0.0) {
            return Err(Error::InvalidConfiguration(format!("s = {s}, d = {d}, δ = {delta}")));
        }
        let n_tail = (2.0 * TAIL_HALF_WIDTH / delta).ceil() as usize;
        let n_r = ((SCALE_RANGE.1 - SCALE_RANGE.0) / delta).ceil() as usize;
        let count = (n_tail as f64).powi((d - s) as i32) * n_r as f64;
        if count > 1e7 {
            return Err(Error::InvalidConfiguration(format!("{count:.0} parameter nodes")));
        }
        ParamGrid::cells(d - s, n_tail, n_r, SCALE_RANGE)
    }

    /// Nodes with a fixed tail and the given dilations.
    pub fn fixed(x_tail: Vec<f64>, rs: &[f64]) -> Self {
        ParamGrid {
            samples: rs
                .iter()
                .map(|&r| ParamSample {
                    x_tail: x_tail.clone(),
                    r,
                })
                .collect(),
            cell_volume: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaximalConfig {
    pub d: usize,
    /// Number of sup parameters.
    pub s: usize,
    pub delta: f64,
    pub search_lo: Vec<f64>,
    pub search_hi: Vec<f64>,
    pub search_step: f64,
    /// Coarse scan step in units of `search_step`.
    pub coarse_factor: usize,
    /// Number of coarse maxima refined at the fine step.
    pub refine_top: usize,
    pub params: ParamGrid,
}

impl MaximalConfig {
    /// Search box [−1/2, 1/2]^s with step δ over the given parameter nodes.
    pub fn new(d: usize, s: usize, delta: f64, params: ParamGrid) -> Result<Self> {
        if s < 1 || s > d {
            return Err(Error::InvalidConfiguration(format!("s = {s} with d = {d}")));
        }
        let cfg = MaximalConfig {
            d,
            s,
            delta,
            search_lo: vec![-0.5; s],
            search_hi: vec![0.5; s],
            search_step: delta,
            coarse_factor: 4,
            refine_top: 5,
            params,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn s_prime(&self) -> usize {
        self.d + 1 - self.s
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfiguration(m));
        if self.s < 1 || self.s > self.d {
            return bad(format!("s = {} with d = {}", self.s, self.d));
        }
        if !(self.delta > 0.0) {
            return Err(Error::InvalidDelta(self.delta));
        }
        if self.search_lo.len() != self.s || self.search_hi.len() != self.s {
            return bad("search box must have s coordinates".into());
        }
        if self.search_lo.iter().zip(&self.search_hi).any(|(a, b)| !(a <= b)) {
            return bad("empty search box".into());
        }
        if !(self.search_step > 0.0 && self.search_step <= self.delta * (1.0 + 1e-12)) {
            return bad(format!("search step {} must be in (0, δ]", self.search_step));
        }
        if self.coarse_factor == 0 || self.refine_top == 0 {
            return bad("coarse factor and refine count must be positive".into());
        }
        if self.params.samples.is_empty() {
            return bad("empty parameter grid".into());
        }
        if self.params.samples.iter().any(|p| p.x_tail.len() != self.d - self.s) {
            return bad("tail length must be d − s".into());
        }
        Ok(())
    }
}

/// Max of the tube average over the search grid of x̄, for one (x̲, r).
pub fn maximal_value(f: &ScalarField, sample: &ParamSample, cfg: &MaximalConfig) -> Result<f64> {
    cfg.validate()?;
    if f.dim() != cfg.d {
        return Err(Error::InvalidInput("field dimension differs from configuration".into()));
    }
    let (d, s) = (cfg.d, cfg.s);
    let mut center = vec![0.0; d];
    center[s..].copy_from_slice(&sample.x_tail);
    let c = MomentCurve::from_parts(&center, sample.r)?;
    let st = Stencil::new(&f.grid, &c, cfg.delta)?;
    let Some((slo, shi)) = f.support_bounds() else {
        return Ok(0.0);
    };
    // Fine step in voxels per sup axis, and the index range of the box.
    let step: Vec<i64> = (0..s)
        .map(|k| ((cfg.search_step / f.grid.spacing[k]) * (1.0 + 1e-9)).floor().max(1.0) as i64)
        .collect();
    let range: Vec<(i64, i64)> = (0..s)
        .map(|k| {
            let u = step[k] as f64 * f.grid.spacing[k];
            (
                (cfg.search_lo[k] / u - 1e-9).ceil() as i64,
                (cfg.search_hi[k] / u + 1e-9).floor() as i64,
            )
        })
        .collect();
    let mut smin = vec![0i64; d];
    let mut smax = vec![0i64; d];
    for k in 0..s {
        smin[k] = range[k].0 * step[k];
        smax[k] = range[k].1 * step[k];
    }
    let st = st.restrict(&slo, &shi, &smin, &smax);
    let mut memo: HashMap<Vec<i64>, f64> = HashMap::new();
    let mut eval = |j: &[i64]| -> f64 {
        if let Some(v) = memo.get(j) {
            return *v;
        }
        let mut shift = vec![0i64; d];
        for k in 0..s {
            shift[k] = j[k] * step[k];
        }
        let v = if st.meets(&shift, &slo, &shi) { st.average(f, &shift) } else { 0.0 };
        memo.insert(j.to_vec(), v);
        v
    };
    let cf = cfg.coarse_factor as i64;
    let mut coarse: Vec<(f64, Vec<i64>)> = Vec::new();
    let first: Vec<i64> = range.iter().map(|r| (r.0 as f64 / cf as f64).ceil() as i64 * cf).collect();
    let last: Vec<i64> = range.iter().map(|r| r.1).collect();
    if (0..s).all(|k| first[k] <= last[k]) {
        let mut j = first.clone();
        loop {
            coarse.push((eval(&j), j.clone()));
            if !advance(&mut j, &first, &last, cf) {
                break;
            }
        }
    }
    coarse.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    let mut best = coarse.first().map_or(0.0, |c| c.0);
    for (_, jc) in coarse.iter().take(cfg.refine_top) {
        let lo: Vec<i64> = (0..s).map(|k| (jc[k] - cf + 1).max(range[k].0)).collect();
        let hi: Vec<i64> = (0..s).map(|k| (jc[k] + cf - 1).min(range[k].1)).collect();
        let mut j = lo.clone();
        loop {
            best = best.max(eval(&j));
            if !advance(&mut j, &lo, &hi, 1) {
                break;
            }
        }
    }
    Ok(best)
}

/// Odometer step over the lattice lo + step·Z within [lo, hi]; false when done.
fn advance(j: &mut [i64], lo: &[i64], hi: &[i64], step: i64) -> bool {
    for k in (0..j.len()).rev() {
        j[k] += step;
        if j[k] <= hi[k] {
            return true;
        }
        j[k] = lo[k];
    }
    false
}

/// Maximal function values over a parameter grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MaximalSurface {
    pub values: Vec<f64>,
    pub config: MaximalConfig,
}

impl MaximalSurface {
    pub fn compute(f: &ScalarField, cfg: &MaximalConfig) -> Result<Self> {
        cfg.validate()?;
        let values = cfg
            .params
            .samples
            .par_iter()
            .map(|p| maximal_value(f, p, cfg))
            .collect::<Result<Vec<_>>>()?;
        Ok(MaximalSurface {
            values,
            config: cfg.clone(),
        })
    }

    /// Columns x_{s+1}..x_d, r, value.
    pub fn to_csv(&self) -> String {
        let (d, s) = (self.config.d, self.config.s);
        let mut out = String::new();
        for i in s + 1..=d {
            write!(out, "x{i},").unwrap();
        }
        out.push_str("r,value\n");
        for (p, v) in self.config.params.samples.iter().zip(&self.values) {
            for x in &p.x_tail {
                write!(out, "{x},").unwrap();
            }
            writeln!(out, "{},{v}", p.r).unwrap();
        }
        out
    }
}

/// Discrete L^p norm over the parameter grid with cell-volume weights.
pub fn maximal_lp_norm(surface: &MaximalSurface, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidExponent(p));
    }
    let w = surface.config.params.cell_volume;
    let sum: f64 = surface.values.iter().map(|v| v.powf(p)).sum();
    Ok((sum * w).powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{tube_indicator_field, union_set_bounds, union_set_field, UnionConfig};

    fn grid(delta: f64) -> Grid {
        Grid::cube(3, 1.5, delta / 2.0).unwrap()
    }

    #[test]
    fn constant_field_averages_to_one() {
        let delta = 1.0 / 16.0;
        let f = ScalarField::constant(grid(delta), 1.0).unwrap();
        let c = MomentCurve::from_parts(&[0.1, 0.0, -0.05], 1.1).unwrap();
        assert_eq!(tube_average(&f, &c, delta).unwrap(), 1.0);
    }

    #[test]
    fn own_tube_and_disjoint_tube() {
        let delta = 1.0 / 16.0;
        let g = grid(delta);
        let c = MomentCurve::from_parts(&[0.0, 0.0, 0.0], 1.0).unwrap();
        let f = tube_indicator_field(&c, delta, &g).unwrap();
        assert!(tube_average(&f, &c, delta).unwrap() >= 0.95);
        let far = MomentCurve::from_parts(&[0.0, 0.0, 1.3], 0.1).unwrap();
        assert_eq!(tube_average(&f, &far, delta).unwrap(), 0.0);
        let coarse = ScalarField::constant(Grid::cube(3, 1.5, delta).unwrap(), 1.0).unwrap();
        assert!(matches!(tube_average(&coarse, &c, delta), Err(Error::Resolution { .. })));
    }

    #[test]
    fn grid_volume_weights() {
        let pg = ParamGrid::cells(1, 4, 6, SCALE_RANGE).unwrap();
        let surf = MaximalSurface {
            values: vec![1.0; pg.samples.len()],
            config: MaximalConfig::new(3, 2, 0.1, pg.clone()).unwrap(),
        };
        for p in [1.0, 3.0] {
            assert!((maximal_lp_norm(&surf, p).unwrap() - (0.5f64 * 1.5).powf(1.0 / p)).abs() < 1e-12);
        }
        let half = MaximalSurface {
            values: pg.samples.iter().map(|s| if s.r < 1.25 { 1.0 } else { 0.0 }).collect(),
            ..surf.clone()
        };
        assert!((maximal_lp_norm(&half, 1.0).unwrap() - 0.375).abs() < 1e-12);
        assert!(matches!(maximal_lp_norm(&surf, 0.9), Err(Error::InvalidExponent(_))));
        let csv = surf.to_csv();
        assert!(csv.starts_with("x3,r,value\n"));
        assert_eq!(csv.lines().count(), 25);
    }

    #[test]
    fn search_finds_shifted_tube() {
        let delta = 1.0 / 16.0;
        let g = grid(delta);
        let c = MomentCurve::from_parts(&[0.25, -0.125, 0.0], 1.0).unwrap();
        let f = tube_indicator_field(&c, delta, &g).unwrap();
        let mut cfg = MaximalConfig::new(3, 2, delta, ParamGrid::fixed(vec![0.0], &[1.0])).unwrap();
        let v = maximal_value(&f, &cfg.params.samples[0], &cfg).unwrap();
        assert!(v >= 0.95, "{v}");
        let zero = ScalarField::zeros(g);
        assert_eq!(maximal_value(&zero, &cfg.params.samples[0], &cfg).unwrap(), 0.0);
        let twice = f.scaled(2.0).unwrap();
        assert_eq!(maximal_value(&twice, &cfg.params.samples[0], &cfg).unwrap(), 2.0 * v);
        cfg.search_lo = vec![0.1, 0.0];
        cfg.search_hi = vec![0.0, 0.0];
        assert!(matches!(
            maximal_value(&f, &cfg.params.samples[0], &cfg),
            Err(Error::InvalidConfiguration(_))
        ));
    }

    #[test]
    fn union_set_lower_bound_small() {
        let delta = 1.0 / 16.0;
        let cfg_u = UnionConfig::default();
        let (lo, hi) = union_set_bounds(2, 3, delta, &cfg_u).unwrap();
        let g = Grid::with_spacing(lo, hi, delta / 2.0).unwrap();
        let f = union_set_field(2, delta, &g, &cfg_u).unwrap();
        let mut cfg = MaximalConfig::new(3, 2, delta, ParamGrid::cells(1, 3, 4, SCALE_RANGE).unwrap()).unwrap();
        cfg.search_lo = vec![-0.125; 2];
        cfg.search_hi = vec![0.125; 2];
        let surf = MaximalSurface::compute(&f, &cfg).unwrap();
        assert!(surf.values.iter().all(|&v| v >= 0.8), "{:?}", surf.values);
    }
}
