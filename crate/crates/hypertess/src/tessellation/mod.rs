//! Cells of the vacant set inside the window: exact zero-cell polygons in the
//! plane, probe-lattice connectivity in any dimension, component labeling and
//! unbounded-in-window detection.
//!
//! "Unbounded" is an infinite-volume notion; the window surrogate used
//! throughout is "the cell touches the boundary sphere of B(o, R)", decided by
//! exact predicates. In the plane the zero cell is computed exactly by convex
//! clipping; the probe path discretizes connectivity on an axis lattice and is
//! cross-checked against the exact path (they must agree after at most two
//! pitch halvings).

mod components;
mod polygon;
mod probe;
mod quadric;

pub use components::CellMinusBall;
pub use polygon::{ccw_delta, cell_polygon, ArcPolygon, EdgeKind, Vec2};
pub use probe::{build_probe_graph, ProbeGraph};
pub use quadric::BallQuadric;

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::KleinPoint;
use crate::measure::ProcessSample;

/// A window-level description of one vacant-set cell.
#[derive(Clone, Debug)]
pub struct CellApprox {
    pub witness: KleinPoint,
    /// side(hyperplane_i, witness) for every sampled hyperplane; never 0.
    pub signs: Vec<i8>,
    pub unbounded_in_window: bool,
    pub members: CellMembers,
}

#[derive(Clone, Debug)]
pub enum CellMembers {
    /// Exact polygon (d = 2 path).
    Polygon(ArcPolygon),
    /// Probe node indices (general-d path).
    ProbeNodes(Vec<u32>),
}

fn sign_vector(sample: &ProcessSample, witness: &[f64]) -> Result<Vec<i8>> {
    let signs: Vec<i8> = sample
        .hyperplanes
        .iter()
        .map(|h| h.side_coords(witness))
        .collect();
    if signs.contains(&0) {
        return Err(Error::Degenerate(
            "witness lies on a sampled hyperplane; resample".into(),
        ));
    }
    Ok(signs)
}

/// Exact cell of the origin for a planar sample.
pub fn zero_cell_polygon(sample: &ProcessSample) -> Result<CellApprox> {
    cell_polygon_at(sample, &KleinPoint::origin(2))
}

/// Exact cell of an arbitrary witness point for a planar sample.
pub fn cell_polygon_at(sample: &ProcessSample, witness: &KleinPoint) -> Result<CellApprox> {
    if sample.d != 2 {
        return Err(Error::Usage(format!(
            "exact polygon path requires d = 2, got d = {}",
            sample.d
        )));
    }
    if witness.norm() >= sample.window_radius.tanh() {
        return Err(Error::Usage("witness outside the window".into()));
    }
    let signs = sign_vector(sample, witness.coords())?;
    let poly = cell_polygon(&sample.hyperplanes, sample.window_radius, witness.coords())?;
    Ok(CellApprox {
        witness: witness.clone(),
        signs,
        unbounded_in_window: poly.is_unbounded_in_window(),
        members: CellMembers::Polygon(poly),
    })
}

/// Probe-graph cell of `z`: flood fill from the nearest lattice node on z's
/// side of every hyperplane, with window reach decided by exact outward
/// segments.
pub fn component_of(
    graph: &ProbeGraph,
    sample: &ProcessSample,
    z: &KleinPoint,
) -> Result<CellApprox> {
    if z.dim() != sample.d {
        return Err(Error::Usage("query dimension mismatch".into()));
    }
    if z.norm() >= sample.window_radius.tanh() {
        return Err(Error::Usage("query point outside the window".into()));
    }
    let signs = sign_vector(sample, z.coords())?;
    let seed = graph.seed_for(z.coords(), &sample.hyperplanes)?;
    let members = graph.component_from(seed);
    let unbounded = graph.any_reaches_window(&members, &sample.hyperplanes);
    Ok(CellApprox {
        witness: z.clone(),
        signs,
        unbounded_in_window: unbounded,
        members: CellMembers::ProbeNodes(members),
    })
}

/// Number of unbounded-in-window components of C(y) minus B(y, r), exact
/// planar path.
pub fn unbounded_components_outside_ball(
    sample: &ProcessSample,
    y: &KleinPoint,
    r: f64,
) -> Result<usize> {
    Ok(split_cell_at(sample, y, r)?.unbounded_count())
}

/// Full exact decomposition of C(y) minus B(y, r) for a planar sample; the
/// window must contain the excised ball (dist(o, y) + r < R).
pub fn split_cell_at(sample: &ProcessSample, y: &KleinPoint, r: f64) -> Result<CellMinusBall> {
    if sample.d != 2 {
        return Err(Error::Usage("exact split path requires d = 2".into()));
    }
    if !(r > 0.0) {
        return Err(Error::Usage("excised radius must be positive".into()));
    }
    let dist_to_o = KleinPoint::origin(2).dist(y)?;
    if dist_to_o + r >= sample.window_radius {
        return Err(Error::Usage(format!(
            "excised ball must sit inside the window: dist(o,y) + r = {} >= R = {}",
            dist_to_o + r,
            sample.window_radius
        )));
    }
    let cell = match cell_polygon_at(sample, y)?.members {
        CellMembers::Polygon(p) => p,
        CellMembers::ProbeNodes(_) => unreachable!(),
    };
    let ball = BallQuadric::new(y, r);
    let center = Vec2::new(y.coords()[0], y.coords()[1]);
    Ok(CellMinusBall::new(cell, ball, center))
}

/// Probe-path variant of `unbounded_components_outside_ball` (any dimension).
pub fn unbounded_components_outside_ball_probe(
    graph: &ProbeGraph,
    sample: &ProcessSample,
    y: &KleinPoint,
    r: f64,
) -> Result<usize> {
    let dist_to_o = KleinPoint::origin(y.dim()).dist(y)?;
    if dist_to_o + r >= sample.window_radius {
        return Err(Error::Usage(
            "excised ball must sit inside the window".into(),
        ));
    }
    let cell = component_of(graph, sample, y)?;
    let members = match cell.members {
        CellMembers::ProbeNodes(m) => m,
        CellMembers::Polygon(_) => unreachable!(),
    };
    let ball = BallQuadric::new(y, r);
    let pieces = graph.split_outside_ball(&members, &ball);
    Ok(pieces
        .iter()
        .filter(|p| graph.any_reaches_window(p, &sample.hyperplanes))
        .count())
}

/// Isometry-covariant center of a bounded cell: the Lorentz barycenter of its
/// vertices (hyperboloid lifts summed and projected back). The lift sum is a
/// timelike vector inside the convex cone over the cell, so the center lies
/// in the cell, and it transforms covariantly because isometries act linearly
/// on the hyperboloid.
pub fn lorentz_barycenter(poly: &ArcPolygon) -> Vec2 {
    let mut sum = [0.0f64; 3];
    for v in poly.vertices() {
        let s = 1.0 / (1.0 - v.norm_sq()).sqrt();
        sum[0] += s;
        sum[1] += v.x * s;
        sum[2] += v.y * s;
    }
    Vec2::new(sum[1] / sum[0], sum[2] / sum[0])
}

/// One cell touching the window circle, identified by its sign vector, with
/// the angular arcs it owns on the circle.
#[derive(Clone, Debug)]
pub struct WindowCell {
    /// A point just inside the circle in the middle of one of the arcs.
    pub witness: [f64; 2],
    pub signs: Vec<i8>,
    /// (start angle, ccw sweep) pairs.
    pub arcs: Vec<(f64, f64)>,
}

/// All cells touching the window circle of a planar sample, found exactly:
/// the line-circle crossing angles split the circle into arcs, each arc
/// belongs to one cell, and arcs are merged by sign vector.
pub fn window_touching_cells(sample: &ProcessSample) -> Result<Vec<WindowCell>> {
    if sample.d != 2 {
        return Err(Error::Usage("window arc enumeration requires d = 2".into()));
    }
    let rho = sample.window_radius.tanh();
    if sample.hyperplanes.is_empty() {
        return Ok(vec![WindowCell {
            witness: [rho * (1.0 - 1e-9), 0.0],
            signs: Vec::new(),
            arcs: vec![(0.0, std::f64::consts::TAU)],
        }]);
    }
    let mut angles = Vec::with_capacity(2 * sample.hyperplanes.len());
    for h in &sample.hyperplanes {
        debug_assert!(h.offset() < rho);
        let alpha = (h.offset() / rho).clamp(-1.0, 1.0).acos();
        let psi = Vec2::new(h.normal()[0], h.normal()[1]).angle();
        angles.push((psi - alpha).rem_euclid(std::f64::consts::TAU));
        angles.push((psi + alpha).rem_euclid(std::f64::consts::TAU));
    }
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = angles.len();
    let mut cells: Vec<WindowCell> = Vec::new();
    let mut by_signs: HashMap<Vec<i8>, usize> = HashMap::new();
    for i in 0..m {
        let start = angles[i];
        let sweep = if i + 1 < m {
            angles[i + 1] - start
        } else {
            angles[0] + std::f64::consts::TAU - start
        };
        if sweep < 1e-12 {
            continue;
        }
        let mid = start + 0.5 * sweep;
        let witness = [
            rho * (1.0 - 1e-9) * mid.cos(),
            rho * (1.0 - 1e-9) * mid.sin(),
        ];
        let signs = sign_vector(sample, &witness)?;
        match by_signs.get(&signs) {
            Some(&idx) => cells[idx].arcs.push((start, sweep)),
            None => {
                by_signs.insert(signs.clone(), cells.len());
                cells.push(WindowCell {
                    witness,
                    signs,
                    arcs: vec![(start, sweep)],
                });
            }
        }
    }
    Ok(cells)
}
