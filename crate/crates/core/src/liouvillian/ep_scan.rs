//! Exceptional-point maps over the `(J, Δ)` drive plane.
//!
//! Second-order EPs separate regions with different numbers of real
//! eigenvalues, so every grid edge whose endpoints disagree on that count
//! brackets one. Each bracket is bisected in the parameter and the result is
//! kept only if the closest eigenpair there passes the gap and eigenvector
//! angle tests. Points are grouped into lines through shared grid cells.
//!
//! Third-order EPs sit where two lines of different kind meet. They are
//! refined by shrinking the three-eigenvalue cluster and then solving
//! `p = p' = p'' = 0` for the characteristic polynomial `p`.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{build_superoperator, characteristic_polynomial, real_eigenvalue_count, spectrum_with, EpTolerances};
use crate::error::{Error, Result};
use crate::model::{DriveParams, QuantumSystem};
use crate::numerics::eigenvalues;
use crate::output::CsvTable;

/// Evenly spaced samples of one drive parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanAxis {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl ScanAxis {
    pub fn new(min: f64, max: f64, points: usize) -> Result<Self> {
        let axis = Self { min, max, points };
        axis.validate("axis")?;
        Ok(axis)
    }

    /// Single sample at `value`.
    pub fn fixed(value: f64) -> Self {
        Self {
            min: value,
            max: value,
            points: 1,
        }
    }

    pub fn validate(&self, name: &'static str) -> Result<()> {
        let bad = |reason: String| Err(Error::InvalidParameter { name, reason });
        if !self.min.is_finite() || !self.max.is_finite() {
            return bad("range must be finite".into());
        }
        match self.points {
            0 => bad("need at least one point".into()),
            1 if self.min != self.max => bad("a single point needs min == max".into()),
            1 => Ok(()),
            _ if self.max <= self.min => bad(format!("empty range [{}, {}]", self.min, self.max)),
            _ => Ok(()),
        }
    }

    pub fn value(&self, k: usize) -> f64 {
        if self.points == 1 {
            self.min
        } else if k + 1 == self.points {
            self.max
        } else {
            self.min + (self.max - self.min) * k as f64 / (self.points - 1) as f64
        }
    }

    pub fn step(&self) -> f64 {
        if self.points > 1 {
            (self.max - self.min) / (self.points - 1) as f64
        } else {
            0.0
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.points).map(|k| self.value(k)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanGrid {
    #[serde(rename = "J")]
    pub j: ScanAxis,
    #[serde(rename = "Delta")]
    pub delta: ScanAxis,
}

impl ScanGrid {
    pub fn new(j: ScanAxis, delta: ScanAxis) -> Result<Self> {
        j.validate("J range")?;
        delta.validate("Delta range")?;
        if j.min < 0.0 {
            return Err(Error::InvalidParameter {
                name: "J range",
                reason: format!("J must be non-negative, got {}", j.min),
            });
        }
        Ok(Self { j, delta })
    }

    /// Row along `J` at fixed detuning.
    pub fn row(j: ScanAxis, delta: f64) -> Result<Self> {
        Self::new(j, ScanAxis::fixed(delta))
    }
}

/// Spectral summary of one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSummary {
    pub j: f64,
    pub delta: f64,
    pub eigenvalues: Vec<Complex64>,
    pub min_eigenvalue_gap: f64,
    pub min_eigenvector_angle: f64,
    pub ep_order: u8,
    pub real_count: usize,
}

/// A refined point on a second-order exceptional line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpPoint {
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "Delta")]
    pub delta: f64,
    pub re_lambda: f64,
    pub im_lambda: f64,
    pub gap: f64,
    pub angle: f64,
    /// Number of other eigenvalues with a larger real part than the coalescing pair.
    pub kind: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpLine {
    pub kind: usize,
    /// Ordered along the line.
    pub points: Vec<EpPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ep3Point {
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "Delta")]
    pub delta: f64,
    /// The triple eigenvalue; real for a conjugation-symmetric spectrum.
    pub lambda: f64,
    /// Largest pairwise distance among the three coalescing eigenvalues.
    pub cluster_diameter: f64,
    /// Largest pairwise principal angle among their eigenvectors.
    pub max_angle: f64,
}

#[derive(Debug, Clone)]
pub struct EpMap {
    pub scan: ScanGrid,
    /// Row-major over `(Δ, J)`: index `iΔ · nJ + iJ`.
    pub grid: Vec<GridSummary>,
    pub ep_lines: Vec<EpLine>,
    pub ep3_points: Vec<Ep3Point>,
}

impl EpMap {
    pub fn at(&self, ij: usize, id: usize) -> &GridSummary {
        &self.grid[id * self.scan.j.points + ij]
    }

    pub fn ep_points(&self) -> impl Iterator<Item = &EpPoint> {
        self.ep_lines.iter().flat_map(|l| l.points.iter())
    }

    pub fn is_empty(&self) -> bool {
        self.ep_lines.is_empty() && self.ep3_points.is_empty()
    }

    /// Columns `J, Delta, re_lambda_k…, im_lambda_k…, gap, angle, ep_order`.
    pub fn to_csv(&self) -> CsvTable {
        let n = self.grid.first().map_or(0, |g| g.eigenvalues.len());
        let header = ["J".to_string(), "Delta".to_string()]
            .into_iter()
            .chain((0..n).map(|k| format!("re_lambda_{k}")))
            .chain((0..n).map(|k| format!("im_lambda_{k}")))
            .chain(["gap", "angle", "ep_order"].map(String::from));
        let mut table = CsvTable::new(header);
        for g in &self.grid {
            let mut row = vec![g.j, g.delta];
            row.extend(g.eigenvalues.iter().map(|z| z.re));
            row.extend(g.eigenvalues.iter().map(|z| z.im));
            row.extend([g.min_eigenvalue_gap, g.min_eigenvector_angle, g.ep_order as f64]);
            table.push_numbers(&row);
        }
        table
    }
}

/// Knobs for [`ep_scan_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpScanOptions {
    pub tolerances: EpTolerances,
    /// Bisection stops when the bracket is shorter than this (parameter units).
    pub bisection_tol: f64,
}

impl Default for EpScanOptions {
    fn default() -> Self {
        Self {
            tolerances: EpTolerances::default(),
            bisection_tol: 1e-12,
        }
    }
}

pub fn ep_scan(template: &QuantumSystem, grid: &ScanGrid) -> Result<EpMap> {
    ep_scan_with(template, grid, &EpScanOptions::default())
}

pub fn ep_scan_with(template: &QuantumSystem, grid: &ScanGrid, opts: &EpScanOptions) -> Result<EpMap> {
    let scan = ScanGrid::new(grid.j, grid.delta)?;
    let (nj, nd) = (scan.j.points, scan.delta.points);
    let eval = Evaluator { template, opts };

    let summaries: Vec<GridSummary> = (0..nj * nd)
        .into_par_iter()
        .map(|k| eval.summary(scan.j.value(k % nj), scan.delta.value(k / nj)))
        .collect::<Result<_>>()?;

    let edges = grid_edges(nj, nd);
    let found: Vec<Option<(EpPoint, [Option<usize>; 2])>> = edges
        .par_iter()
        .map(|e| {
            let (a, b) = (e.from(nj), e.to(nj));
            if summaries[a].real_count == summaries[b].real_count {
                return Ok(None);
            }
            let pa = (summaries[a].j, summaries[a].delta);
            let pb = (summaries[b].j, summaries[b].delta);
            Ok(eval
                .refine_edge(pa, pb, summaries[a].real_count)?
                .map(|p| (p, e.cells(nj, nd))))
        })
        .collect::<Result<_>>()?;
    let found: Vec<(EpPoint, [Option<usize>; 2])> = found.into_iter().flatten().collect();

    let steps = (scan.j.step().max(f64::MIN_POSITIVE), scan.delta.step().max(f64::MIN_POSITIVE));
    let ep_lines = group_lines(&found, steps);
    let ep3_points = eval.third_order_points(&ep_lines, &scan)?;

    Ok(EpMap {
        scan,
        grid: summaries,
        ep_lines,
        ep3_points,
    })
}

struct Evaluator<'a> {
    template: &'a QuantumSystem,
    opts: &'a EpScanOptions,
}

impl Evaluator<'_> {
    fn system(&self, j: f64, delta: f64) -> Result<QuantumSystem> {
        self.template.with_drive(DriveParams::new(j.max(0.0), delta)?)
    }

    fn eigenvalues(&self, j: f64, delta: f64) -> Result<Vec<Complex64>> {
        eigenvalues(&build_superoperator(&self.system(j, delta)?).matrix)
    }

    fn real_count(&self, j: f64, delta: f64) -> Result<usize> {
        Ok(real_eigenvalue_count(&self.eigenvalues(j, delta)?))
    }

    fn summary(&self, j: f64, delta: f64) -> Result<GridSummary> {
        let s = spectrum_with(&build_superoperator(&self.system(j, delta)?), &self.opts.tolerances)?;
        Ok(GridSummary {
            j,
            delta,
            real_count: s.real_count(),
            min_eigenvalue_gap: s.min_eigenvalue_gap,
            min_eigenvector_angle: s.min_eigenvector_angle,
            ep_order: s.ep_order,
            eigenvalues: s.eigenvalues,
        })
    }

    /// Bisects the segment `a → b` on the real-eigenvalue count and validates
    /// the limit point as a defective coalescence.
    fn refine_edge(&self, a: (f64, f64), b: (f64, f64), count_a: usize) -> Result<Option<EpPoint>> {
        let len = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
        let at = |s: f64| (a.0 + s * (b.0 - a.0), a.1 + s * (b.1 - a.1));
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        for _ in 0..200 {
            if (hi - lo) * len <= self.opts.bisection_tol {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let (j, d) = at(mid);
            if self.real_count(j, d)? == count_a {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (j, delta) = at(0.5 * (lo + hi));
        let s = spectrum_with(&build_superoperator(&self.system(j, delta)?), &self.opts.tolerances)?;
        if s.ep_order != 2 {
            return Ok(None);
        }
        let (p, q) = (s.coalescing[0], s.coalescing[1]);
        let lambda = (s.eigenvalues[p] + s.eigenvalues[q]) * 0.5;
        let vp: Vec<Complex64> = (0..s.eigenvectors.rows()).map(|r| s.eigenvectors[(r, p)]).collect();
        let vq: Vec<Complex64> = (0..s.eigenvectors.rows()).map(|r| s.eigenvectors[(r, q)]).collect();
        let kind = s
            .eigenvalues
            .iter()
            .enumerate()
            .filter(|&(k, z)| k != p && k != q && z.re > lambda.re)
            .count();
        Ok(Some(EpPoint {
            j,
            delta,
            re_lambda: lambda.re,
            im_lambda: lambda.im,
            gap: (s.eigenvalues[p] - s.eigenvalues[q]).norm(),
            angle: crate::numerics::principal_angle(&vp, &vq),
            kind,
        }))
    }

    fn third_order_points(&self, lines: &[EpLine], scan: &ScanGrid) -> Result<Vec<Ep3Point>> {
        let (hj, hd) = (scan.j.step(), scan.delta.step());
        if hj == 0.0 || hd == 0.0 {
            return Ok(Vec::new());
        }
        let mut seeds = Vec::new();
        for (ia, la) in lines.iter().enumerate() {
            for lb in &lines[ia + 1..] {
                if la.kind == lb.kind {
                    continue;
                }
                let mut best = (f64::INFINITY, (0.0, 0.0));
                for p in &la.points {
                    for q in &lb.points {
                        let dist = (((p.j - q.j) / hj).powi(2) + ((p.delta - q.delta) / hd).powi(2)).sqrt();
                        if dist < best.0 {
                            best = (dist, (0.5 * (p.j + q.j), 0.5 * (p.delta + q.delta)));
                        }
                    }
                }
                if best.0 <= 3.0 {
                    seeds.push(best.1);
                }
            }
        }

        let mut points: Vec<Ep3Point> = Vec::new();
        let refined: Vec<Option<Ep3Point>> = seeds
            .par_iter()
            .map(|&seed| self.refine_third_order(seed, (hj, hd)))
            .collect::<Result<_>>()?;
        for p in refined.into_iter().flatten() {
            let duplicate = points
                .iter()
                .any(|q| ((p.j - q.j) / hj).abs() < 0.5 && ((p.delta - q.delta) / hd).abs() < 0.5);
            if !duplicate {
                points.push(p);
            }
        }
        points.sort_by(|a, b| a.delta.total_cmp(&b.delta).then(a.j.total_cmp(&b.j)));
        Ok(points)
    }

    /// Smallest diameter over all eigenvalue triples.
    fn triple_diameter(&self, j: f64, delta: f64) -> Result<(f64, f64)> {
        let ev = self.eigenvalues(j, delta)?;
        let n = ev.len();
        let mut best = (f64::INFINITY, 0.0);
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    let d = (ev[a] - ev[b])
                        .norm()
                        .max((ev[a] - ev[c]).norm())
                        .max((ev[b] - ev[c]).norm());
                    if d < best.0 {
                        best = (d, ((ev[a] + ev[b] + ev[c]) / 3.0).re);
                    }
                }
            }
        }
        Ok(best)
    }

    fn refine_third_order(&self, seed: (f64, f64), steps: (f64, f64)) -> Result<Option<Ep3Point>> {
        // Coordinate golden-section descent on the cluster diameter.
        let (mut j, mut delta) = seed;
        let (mut hj, mut hd) = (2.0 * steps.0, 2.0 * steps.1);
        for _ in 0..30 {
            j = golden_min(|x| self.triple_diameter(x, delta).map(|t| t.0), (j - hj).max(0.0), j + hj)?;
            delta = golden_min(|y| self.triple_diameter(j, y).map(|t| t.0), delta - hd, delta + hd)?;
            hj *= 0.5;
            hd *= 0.5;
        }
        let lambda = self.triple_diameter(j, delta)?.1;

        let (j, delta, lambda) = self.newton_triple_root(j, delta, lambda)?.unwrap_or((j, delta, lambda));
        if j < 0.0 {
            return Ok(None);
        }
        let s = spectrum_with(&build_superoperator(&self.system(j, delta)?), &self.opts.tolerances)?;
        if s.ep_order != 3 {
            return Ok(None);
        }
        let idx = &s.coalescing;
        let col = |k: usize| -> Vec<Complex64> { (0..s.eigenvectors.rows()).map(|r| s.eigenvectors[(r, k)]).collect() };
        let mut diameter = 0.0_f64;
        let mut max_angle = 0.0_f64;
        for (a, &p) in idx.iter().enumerate() {
            for &q in &idx[a + 1..] {
                diameter = diameter.max((s.eigenvalues[p] - s.eigenvalues[q]).norm());
                max_angle = max_angle.max(crate::numerics::principal_angle(&col(p), &col(q)));
            }
        }
        Ok(Some(Ep3Point {
            j,
            delta,
            lambda,
            cluster_diameter: diameter,
            max_angle,
        }))
    }

    /// Real characteristic-polynomial derivatives `p, p', p'', p'''` at `λ`.
    fn char_poly_derivs(&self, j: f64, delta: f64, lambda: f64) -> Result<[f64; 4]> {
        let sop = build_superoperator(&self.system(j, delta)?);
        let coeffs: Vec<f64> = characteristic_polynomial(&sop.matrix).iter().map(|c| c.re).collect();
        let mut out = [0.0; 4];
        for (order, slot) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in (order..coeffs.len()).rev() {
                let falling: f64 = (0..order).map(|m| (k - m) as f64).product();
                acc = acc * lambda + coeffs[k] * falling;
            }
            *slot = acc;
        }
        Ok(out)
    }

    /// Newton on `p = p' = p'' = 0` in `(λ, J, Δ)`.
    fn newton_triple_root(&self, j0: f64, d0: f64, l0: f64) -> Result<Option<(f64, f64, f64)>> {
        let residual = |x: &Vector3<f64>| -> Result<(Vector3<f64>, f64)> {
            let p = self.char_poly_derivs(x[1], x[2], x[0])?;
            Ok((Vector3::new(p[0], p[1], p[2]), p[3]))
        };
        let mut x = Vector3::new(l0, j0, d0);
        let h = 1e-6;
        for _ in 0..60 {
            let (f, p3) = residual(&x)?;
            let mut jac = Matrix3::zeros();
            jac[(0, 0)] = f[1];
            jac[(1, 0)] = f[2];
            jac[(2, 0)] = p3;
            for c in 1..3 {
                let mut xp = x;
                let mut xm = x;
                xp[c] += h;
                xm[c] -= h;
                let col = (residual(&xp)?.0 - residual(&xm)?.0) / (2.0 * h);
                jac.set_column(c, &col);
            }
            let Some(step) = jac.lu().solve(&f) else {
                return Ok(None);
            };
            x -= step;
            if !x.iter().all(|v| v.is_finite()) {
                return Ok(None);
            }
            if step.norm() <= 1e-14 * x.norm().max(1.0) {
                break;
            }
        }
        Ok(Some((x[1], x[2], x[0])))
    }
}

/// Golden-section minimization of a unimodal-ish function on `[a, b]`.
fn golden_min(f: impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64) -> Result<f64> {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    for _ in 0..60 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    Ok(0.5 * (a + b))
}

#[derive(Debug, Clone, Copy)]
struct Edge {
    ij: usize,
    id: usize,
    /// Along `J` when true, along `Δ` otherwise.
    along_j: bool,
}

impl Edge {
    fn from(&self, nj: usize) -> usize {
        self.id * nj + self.ij
    }

    fn to(&self, nj: usize) -> usize {
        if self.along_j {
            self.id * nj + self.ij + 1
        } else {
            (self.id + 1) * nj + self.ij
        }
    }

    /// Grid cells bordering this edge, indexed `iΔ · (nJ − 1) + iJ`.
    fn cells(&self, nj: usize, nd: usize) -> [Option<usize>; 2] {
        let cell = |ij: usize, id: usize| (ij + 1 < nj && id + 1 < nd).then(|| id * (nj - 1) + ij);
        if self.along_j {
            [self.id.checked_sub(1).and_then(|id| cell(self.ij, id)), cell(self.ij, self.id)]
        } else {
            [self.ij.checked_sub(1).and_then(|ij| cell(ij, self.id)), cell(self.ij, self.id)]
        }
    }
}

fn grid_edges(nj: usize, nd: usize) -> Vec<Edge> {
    let mut edges = Vec::new();
    for id in 0..nd {
        for ij in 0..nj {
            if ij + 1 < nj {
                edges.push(Edge { ij, id, along_j: true });
            }
            if id + 1 < nd {
                edges.push(Edge { ij, id, along_j: false });
            }
        }
    }
    edges
}

/// Connects points sharing a grid cell and a kind, then orders each component.
fn group_lines(found: &[(EpPoint, [Option<usize>; 2])], steps: (f64, f64)) -> Vec<EpLine> {
    let n = found.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut k: usize) -> usize {
        while parent[k] != k {
            parent[k] = parent[parent[k]];
            k = parent[k];
        }
        k
    }
    let mut by_cell: std::collections::BTreeMap<usize, Vec<usize>> = std::collections::BTreeMap::new();
    for (k, (_, cells)) in found.iter().enumerate() {
        for c in cells.iter().flatten() {
            by_cell.entry(*c).or_default().push(k);
        }
    }
    for members in by_cell.values() {
        for (a, &p) in members.iter().enumerate() {
            for &q in &members[a + 1..] {
                if found[p].0.kind == found[q].0.kind {
                    let (rp, rq) = (root(&mut parent, p), root(&mut parent, q));
                    parent[rp.max(rq)] = rp.min(rq);
                }
            }
        }
    }

    let mut lines = Vec::new();
    for r in 0..n {
        let members: Vec<EpPoint> = (0..n)
            .filter(|&k| root(&mut parent, k) == r)
            .map(|k| found[k].0)
            .collect();
        if !members.is_empty() {
            lines.push(EpLine {
                kind: members[0].kind,
                points: order_polyline(members, steps),
            });
        }
    }
    lines
}

/// Nearest-neighbour chain from the point farthest from the centroid.
fn order_polyline(mut pts: Vec<EpPoint>, steps: (f64, f64)) -> Vec<EpPoint> {
    let dist = |a: &EpPoint, b: (f64, f64)| (((a.j - b.0) / steps.0).powi(2) + ((a.delta - b.1) / steps.1).powi(2)).sqrt();
    let n = pts.len() as f64;
    let centroid = (
        pts.iter().map(|p| p.j).sum::<f64>() / n,
        pts.iter().map(|p| p.delta).sum::<f64>() / n,
    );
    let start = (0..pts.len())
        .max_by(|&a, &b| dist(&pts[a], centroid).total_cmp(&dist(&pts[b], centroid)))
        .unwrap_or(0);
    let mut ordered = vec![pts.swap_remove(start)];
    while !pts.is_empty() {
        let last = ordered[ordered.len() - 1];
        let next = (0..pts.len())
            .min_by(|&a, &b| dist(&pts[a], (last.j, last.delta)).total_cmp(&dist(&pts[b], (last.j, last.delta))))
            .unwrap_or(0);
        ordered.push(pts.swap_remove(next));
    }
    ordered
}
