use super::polygon::{ccw_delta, ArcPolygon, EdgeKind, Vec2};
use super::quadric::BallQuadric;

const PARAM_EPS: f64 = 1e-12;

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
enum Assign {
    Covered,
    Gap(usize),
}

/// Components of a convex plane cell minus the Klein ellipsoid of a
/// hyperbolic ball centered strictly inside the window.
///
/// Both sets are convex, so the boundary of the cell decomposes into maximal
/// runs covered by the ellipsoid and uncovered gaps, and the components of
/// cell-minus-ball are in bijection with the gaps (one wrap-around component
/// when the ellipsoid never reaches the boundary). The ellipsoid sits
/// strictly inside the window, so arc edges are never covered and a gap is
/// window-reaching exactly when it contains an arc edge.
pub struct CellMinusBall {
    cell: ArcPolygon,
    ball: BallQuadric,
    center: Vec2,
    /// (edge index, param lo, param hi, assignment), cyclic boundary order.
    /// Chord params are in [0, 1]; arc params are CCW angle offsets.
    segments: Vec<(usize, f64, f64, Assign)>,
    gap_has_arc: Vec<bool>,
    swallowed: bool,
}

impl CellMinusBall {
    pub fn new(cell: ArcPolygon, ball: BallQuadric, center: Vec2) -> Self {
        let n = cell.vertices().len();
        // Covered param interval per edge (single interval: the quadric is
        // concave along any line, so the inside set is connected).
        let mut covered: Vec<Option<(f64, f64)>> = Vec::with_capacity(n);
        for i in 0..n {
            let a = cell.vertices()[i];
            let b = cell.vertices()[(i + 1) % n];
            match cell.kinds()[i] {
                EdgeKind::Arc => covered.push(None),
                EdgeKind::Chord { .. } => {
                    let pa = [a.x, a.y];
                    let pb = [b.x, b.y];
                    let (in_a, in_b) = (ball.contains(&pa), ball.contains(&pb));
                    let roots = ball.segment_roots(&pa, &pb);
                    let interval = match (in_a, in_b, roots.len()) {
                        (true, true, _) => Some((0.0, 1.0)),
                        (true, false, 1..) => Some((0.0, roots[0])),
                        (false, true, 1..) => Some((*roots.last().unwrap(), 1.0)),
                        (false, false, 2) => Some((roots[0], roots[1])),
                        _ => None,
                    };
                    covered.push(interval.filter(|(lo, hi)| hi - lo > PARAM_EPS));
                }
            }
        }

        // Cyclic boundary intervals with covered/uncovered assignment.
        let mut segments: Vec<(usize, f64, f64, Assign)> = Vec::new();
        for i in 0..n {
            let len = match cell.kinds()[i] {
                EdgeKind::Chord { .. } => 1.0,
                EdgeKind::Arc => {
                    let a = cell.vertices()[i].angle();
                    ccw_delta(a, cell.vertices()[(i + 1) % n].angle())
                }
            };
            match covered[i] {
                None => segments.push((i, 0.0, len, Assign::Gap(usize::MAX))),
                Some((lo, hi)) => {
                    // Chord params live in [0, 1] = [0, len].
                    if lo > PARAM_EPS {
                        segments.push((i, 0.0, lo, Assign::Gap(usize::MAX)));
                    }
                    segments.push((i, lo, hi, Assign::Covered));
                    if hi < len - PARAM_EPS {
                        segments.push((i, hi, len, Assign::Gap(usize::MAX)));
                    }
                }
            }
        }

        let any_covered = segments.iter().any(|s| s.3 == Assign::Covered);
        let any_gap = segments.iter().any(|s| s.3 != Assign::Covered);
        let swallowed = any_covered && !any_gap;

        let mut gap_has_arc = Vec::new();
        if !swallowed && !segments.is_empty() {
            // Number gaps starting after a covered segment (or from 0 when
            // nothing is covered: one wrap-around gap).
            let m = segments.len();
            let start = segments
                .iter()
                .position(|s| s.3 == Assign::Covered)
                .unwrap_or(0);
            let mut gap: Option<usize> = if any_covered { None } else { Some(0) };
            if !any_covered {
                gap_has_arc.push(false);
            }
            for k in 0..m {
                let idx = (start + k) % m;
                if segments[idx].3 == Assign::Covered {
                    gap = None;
                    continue;
                }
                let g = match gap {
                    Some(g) => g,
                    None => {
                        gap_has_arc.push(false);
                        gap = Some(gap_has_arc.len() - 1);
                        gap_has_arc.len() - 1
                    }
                };
                segments[idx].3 = Assign::Gap(g);
                if cell.kinds()[segments[idx].0] == EdgeKind::Arc {
                    gap_has_arc[g] = true;
                }
            }
        }

        Self {
            cell,
            ball,
            center,
            segments,
            gap_has_arc,
            swallowed,
        }
    }

    pub fn cell(&self) -> &ArcPolygon {
        &self.cell
    }

    /// Number of connected components of cell minus ball.
    pub fn component_count(&self) -> usize {
        if self.swallowed {
            0
        } else {
            self.gap_has_arc.len()
        }
    }

    /// Number of components whose closure meets the window sphere.
    pub fn unbounded_count(&self) -> usize {
        self.gap_has_arc.iter().filter(|b| **b).count()
    }

    pub fn component_is_unbounded(&self, gap: usize) -> bool {
        self.gap_has_arc[gap]
    }

    /// True iff p lies in the cell and outside the removed ball.
    pub fn contains(&self, p: Vec2) -> bool {
        self.cell.contains(p) && !self.ball.contains(&[p.x, p.y])
    }

    /// Component id of a point of cell-minus-ball, located by walking the ray
    /// away from the ball center to the unique boundary exit. The ray stays
    /// outside the ball (convexity), so the exit lands in a gap.
    pub fn locate(&self, p: Vec2) -> Option<usize> {
        if !self.contains(p) {
            return None;
        }
        let dir = p.sub(self.center);
        if dir.norm() < 1e-12 {
            return None; // p is the center: inside the ball, filtered above
        }
        let n = self.cell.vertices().len();
        let mut best: Option<(f64, usize, f64)> = None; // (ray s, edge, param)
        for i in 0..n {
            let a = self.cell.vertices()[i];
            let b = self.cell.vertices()[(i + 1) % n];
            match self.cell.kinds()[i] {
                EdgeKind::Chord { .. } => {
                    let e = b.sub(a);
                    let normal = Vec2::new(-e.y, e.x);
                    let denom = normal.dot(dir);
                    if denom.abs() < 1e-300 {
                        continue;
                    }
                    let s = normal.dot(a.sub(p)) / denom;
                    if s <= PARAM_EPS {
                        continue;
                    }
                    let hit = p.add(dir.scale(s));
                    let tau = hit.sub(a).dot(e) / e.norm_sq();
                    if (-1e-9..=1.0 + 1e-9).contains(&tau)
                        && best.map_or(true, |(bs, _, _)| s < bs)
                    {
                        best = Some((s, i, tau.clamp(0.0, 1.0)));
                    }
                }
                EdgeKind::Arc => {
                    // |p + s dir|^2 = rho^2.
                    let (qa, qb, qc) = (
                        dir.norm_sq(),
                        2.0 * p.dot(dir),
                        p.norm_sq() - self.cell.radius() * self.cell.radius(),
                    );
                    let disc = qb * qb - 4.0 * qa * qc;
                    if disc <= 0.0 {
                        continue;
                    }
                    let s = (-qb + disc.sqrt()) / (2.0 * qa); // outward root
                    if s <= PARAM_EPS {
                        continue;
                    }
                    let hit = p.add(dir.scale(s));
                    let sweep = ccw_delta(a.angle(), b.angle());
                    let off = ccw_delta(a.angle(), hit.angle());
                    if off <= sweep + 1e-9 && best.map_or(true, |(bs, _, _)| s < bs) {
                        best = Some((s, i, off.min(sweep)));
                    }
                }
            }
        }
        let (_, edge, param) = best?;
        // Find the boundary segment holding (edge, param).
        let mut fallback = None;
        for &(e, lo, hi, assign) in &self.segments {
            if e == edge && param >= lo - 1e-9 && param <= hi + 1e-9 {
                match assign {
                    Assign::Gap(g) => return Some(g),
                    Assign::Covered => fallback = Some(()),
                }
            }
        }
        let _ = fallback;
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Hyperplane, KleinPoint};
    use crate::tessellation::polygon::cell_polygon;

    fn ball_at_origin(rho: f64) -> BallQuadric {
        BallQuadric::new(&KleinPoint::origin(2), rho)
    }

    #[test]
    fn empty_cell_minus_centered_ball_is_one_unbounded_component() {
        let cell = cell_polygon(&[], 3.0, &[0.0, 0.0]).unwrap();
        let split = CellMinusBall::new(cell, ball_at_origin(1.0), Vec2::new(0.0, 0.0));
        assert_eq!(split.component_count(), 1);
        assert_eq!(split.unbounded_count(), 1);
    }

    #[test]
    fn needle_cell_splits_in_two() {
        // Horizontal slab |y| < 0.05 cut by a ball of hyperbolic radius 0.5
        // around the origin (Euclidean radius tanh 0.5 = 0.46): two unbounded
        // pieces, left and right.
        let hs = vec![
            Hyperplane::new(vec![0.0, 1.0], 0.05).unwrap(),
            Hyperplane::new(vec![0.0, -1.0], 0.05).unwrap(),
        ];
        let cell = cell_polygon(&hs, 3.0, &[0.0, 0.0]).unwrap();
        let split = CellMinusBall::new(cell, ball_at_origin(0.5), Vec2::new(0.0, 0.0));
        assert_eq!(split.component_count(), 2);
        assert_eq!(split.unbounded_count(), 2);
        // Point location distinguishes the sides.
        let l = split.locate(Vec2::new(-0.8, 0.0)).unwrap();
        let r = split.locate(Vec2::new(0.8, 0.0)).unwrap();
        assert_ne!(l, r);
        assert_eq!(split.locate(Vec2::new(-0.7, 0.0)).unwrap(), l);
    }

    #[test]
    fn bounded_box_minus_interior_ball_wraps_around() {
        let hs: Vec<Hyperplane> = [
            (vec![1.0, 0.0], 0.6),
            (vec![-1.0, 0.0], 0.6),
            (vec![0.0, 1.0], 0.6),
            (vec![0.0, -1.0], 0.6),
        ]
        .into_iter()
        .map(|(u, t)| Hyperplane::new(u, t).unwrap())
        .collect();
        let cell = cell_polygon(&hs, 3.0, &[0.0, 0.0]).unwrap();
        // Ball small enough to stay inside the box: one bounded component.
        let split = CellMinusBall::new(cell.clone(), ball_at_origin(0.3), Vec2::new(0.0, 0.0));
        assert_eq!(split.component_count(), 1);
        assert_eq!(split.unbounded_count(), 0);
        // Ball swallowing the box: zero components.
        let split = CellMinusBall::new(cell, ball_at_origin(2.0), Vec2::new(0.0, 0.0));
        assert_eq!(split.component_count(), 0);
    }

    #[test]
    fn ball_poking_through_walls_leaves_four_corner_components() {
        // The square cell [-0.5, 0.5]^2 minus a ball of Euclidean radius
        // tanh(0.75) = 0.635: the ball covers the wall midpoints but not the
        // corners, leaving four bounded corner pieces.
        let hs: Vec<Hyperplane> = [
            (vec![1.0, 0.0], 0.5),
            (vec![-1.0, 0.0], 0.5),
            (vec![0.0, 1.0], 0.5),
            (vec![0.0, -1.0], 0.5),
        ]
        .into_iter()
        .map(|(u, t)| Hyperplane::new(u, t).unwrap())
        .collect();
        let cell = cell_polygon(&hs, 3.0, &[0.0, 0.0]).unwrap();
        assert!(!cell.is_unbounded_in_window());
        let split = CellMinusBall::new(cell, ball_at_origin(0.75), Vec2::new(0.0, 0.0));
        assert_eq!(split.component_count(), 4);
        assert_eq!(split.unbounded_count(), 0);
        let p = split.locate(Vec2::new(0.48, 0.48));
        let q = split.locate(Vec2::new(-0.48, 0.48));
        assert!(p.is_some() && q.is_some() && p != q);
        assert_eq!(split.locate(Vec2::new(0.46, 0.46)), p);
    }
}
