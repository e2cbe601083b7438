//! Exact zero-cell geometry in the plane: convex regions bounded by chords of
//! sampled lines and arcs of the window circle, built by sequential clipping.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::geometry::Hyperplane;
use crate::numeric::adaptive_simpson;

/// Coordinates on a chord or arc closer than this to an endpoint are treated
/// as the endpoint itself.
const GEOM_EPS: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }

    pub fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }

    pub fn scale(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Polar angle in [0, 2 pi).
    pub fn angle(self) -> f64 {
        let a = self.y.atan2(self.x);
        if a < 0.0 {
            a + TAU
        } else {
            a
        }
    }
}

/// CCW angular sweep from `from` to `to`, in [0, 2 pi).
pub fn ccw_delta(from: f64, to: f64) -> f64 {
    let mut d = (to - from) % TAU;
    if d < 0.0 {
        d += TAU;
    }
    d
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeKind {
    /// The edge lies on sample hyperplane `line`.
    Chord { line: usize },
    /// The edge lies on the window circle.
    Arc,
}

/// A convex region inside the window disc, bounded by chord edges (pieces of
/// sampled lines) and arc edges (pieces of the window circle). Vertices run
/// counterclockwise; edge i joins vertex i to vertex i+1 (cyclically).
#[derive(Clone, Debug)]
pub struct ArcPolygon {
    radius: f64,
    verts: Vec<Vec2>,
    kinds: Vec<EdgeKind>,
}

impl ArcPolygon {
    /// The whole window disc, as two semicircular arcs.
    pub fn full_disc(radius: f64) -> Self {
        assert!(radius > 0.0 && radius < 1.0);
        Self {
            radius,
            verts: vec![Vec2::new(radius, 0.0), Vec2::new(-radius, 0.0)],
            kinds: vec![EdgeKind::Arc, EdgeKind::Arc],
        }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.verts
    }

    pub fn kinds(&self) -> &[EdgeKind] {
        &self.kinds
    }

    pub fn is_empty(&self) -> bool {
        self.verts.is_empty()
    }

    /// True iff the region touches the window circle.
    pub fn is_unbounded_in_window(&self) -> bool {
        self.kinds.contains(&EdgeKind::Arc)
    }

    /// Endpoint angles (start, ccw sweep) of every arc edge.
    pub fn window_arcs(&self) -> Vec<(f64, f64)> {
        let n = self.verts.len();
        (0..n)
            .filter(|&i| self.kinds[i] == EdgeKind::Arc)
            .map(|i| {
                let a = self.verts[i].angle();
                (a, ccw_delta(a, self.verts[(i + 1) % n].angle()))
            })
            .collect()
    }

    /// Membership: inside the circle and on the interior side of every chord.
    /// The region is the disc intersected with the chord half-planes, so arc
    /// edges impose no extra constraint.
    pub fn contains(&self, p: Vec2) -> bool {
        if p.norm_sq() >= self.radius * self.radius {
            return false;
        }
        let n = self.verts.len();
        (0..n).all(|i| match self.kinds[i] {
            EdgeKind::Arc => true,
            EdgeKind::Chord { .. } => {
                let a = self.verts[i];
                let b = self.verts[(i + 1) % n];
                b.sub(a).cross(p.sub(a)) > 0.0
            }
        })
    }

    /// Clip to the half-plane on side `keep_sign` of the line, which must be
    /// a window-hitting line (offset < radius). `line` is the index recorded
    /// on the new chord edge.
    pub fn clip(&mut self, line: usize, h: &Hyperplane, keep_sign: i8) {
        debug_assert!(keep_sign == 1 || keep_sign == -1);
        debug_assert!(h.offset() < self.radius);
        if self.verts.is_empty() {
            return;
        }
        let u = Vec2::new(h.normal()[0], h.normal()[1]);
        let t = h.offset();
        let k = keep_sign as f64;
        let w = |p: Vec2| k * (u.dot(p) - t);

        // Fast accept: every vertex strictly inside and no arc reaches the
        // excluded side (the circle direction minimizing w is -keep_sign * u).
        let all_in = self.verts.iter().all(|&v| w(v) > GEOM_EPS);
        if all_in {
            let worst = u.scale(-k * self.radius).angle();
            let n = self.verts.len();
            let poked = (0..n).any(|i| {
                self.kinds[i] == EdgeKind::Arc && {
                    let a = self.verts[i].angle();
                    ccw_delta(a, worst) < ccw_delta(a, self.verts[(i + 1) % n].angle())
                }
            });
            if !poked {
                return;
            }
        }

        #[derive(Clone, Copy, PartialEq)]
        enum Piece {
            Keep(EdgeKind),
            Cut,
        }
        let n = self.verts.len();
        let mut out: Vec<(Vec2, Piece)> = Vec::with_capacity(n + 2);
        let push = |start: Vec2, kept: bool, kind: EdgeKind, on_boundary: bool,
                        out: &mut Vec<(Vec2, Piece)>| {
            if kept {
                out.push((start, Piece::Keep(kind)));
            } else if on_boundary && out.last().map(|(_, k)| *k) != Some(Piece::Cut) {
                out.push((start, Piece::Cut));
            }
        };

        for i in 0..n {
            let a = self.verts[i];
            let b = self.verts[(i + 1) % n];
            let kind = self.kinds[i];
            match kind {
                EdgeKind::Chord { .. } => {
                    let (wa, wb) = (w(a), w(b));
                    // Interior crossing only when the endpoint values straddle
                    // zero strictly; vertex-on-line cases resolve by midpoints.
                    let mut params = vec![0.0];
                    if wa * wb < 0.0 && wa.abs() > GEOM_EPS && wb.abs() > GEOM_EPS {
                        params.push(wa / (wa - wb));
                    }
                    params.push(1.0);
                    let d = b.sub(a);
                    for j in 0..params.len() - 1 {
                        let (s0, s1) = (params[j], params[j + 1]);
                        if s1 - s0 < GEOM_EPS {
                            continue;
                        }
                        let start = if j == 0 { a } else { a.add(d.scale(s0)) };
                        let mid = a.add(d.scale(0.5 * (s0 + s1)));
                        let on_boundary = j > 0 || wa.abs() <= GEOM_EPS;
                        push(start, w(mid) > 0.0, kind, on_boundary, &mut out);
                    }
                }
                EdgeKind::Arc => {
                    let theta_a = a.angle();
                    let sweep = ccw_delta(theta_a, b.angle());
                    // Circle-line intersections at psi +- alpha.
                    let alpha = (t / self.radius).clamp(-1.0, 1.0).acos();
                    let psi = u.angle();
                    let mut hits: Vec<f64> = [psi - alpha, psi + alpha]
                        .iter()
                        .map(|&th| ccw_delta(theta_a, th))
                        .filter(|&dd| dd > GEOM_EPS && dd < sweep - GEOM_EPS)
                        .collect();
                    hits.sort_by(|x, y| x.partial_cmp(y).unwrap());
                    let mut offsets = vec![0.0];
                    offsets.extend(hits);
                    offsets.push(sweep);
                    for j in 0..offsets.len() - 1 {
                        let (d0, d1) = (offsets[j], offsets[j + 1]);
                        if d1 - d0 < GEOM_EPS {
                            continue;
                        }
                        let start = if j == 0 {
                            a
                        } else {
                            let th = theta_a + d0;
                            Vec2::new(self.radius * th.cos(), self.radius * th.sin())
                        };
                        let thm = theta_a + 0.5 * (d0 + d1);
                        let mid = Vec2::new(self.radius * thm.cos(), self.radius * thm.sin());
                        let on_boundary = j > 0 || w(a).abs() <= GEOM_EPS;
                        push(start, w(mid) > 0.0, kind, on_boundary, &mut out);
                    }
                }
            }
        }

        // A leading Cut merges with a trailing one cyclically.
        if out.len() > 1
            && matches!(out.first(), Some((_, Piece::Cut)))
            && matches!(out.last(), Some((_, Piece::Cut)))
        {
            out.pop();
        }
        if out.iter().all(|(_, k)| *k == Piece::Cut) {
            self.verts.clear();
            self.kinds.clear();
            return;
        }
        self.verts = out.iter().map(|(v, _)| *v).collect();
        self.kinds = out
            .iter()
            .map(|(_, k)| match k {
                Piece::Keep(kind) => *kind,
                Piece::Cut => EdgeKind::Chord { line },
            })
            .collect();
    }

    /// Hyperbolic area via the divergence theorem: the Klein area density
    /// (1 - r^2)^{-3/2} is div(f(r) x) with f = ((1-r^2)^{-1/2} - 1)/r^2,
    /// so the area is the boundary integral of f(r)(x dy - y dx). Arc edges
    /// integrate in closed form; chord edges by quadrature.
    pub fn area_hyperbolic(&self) -> Result<f64> {
        fn radial_weight(r_sq: f64) -> f64 {
            if r_sq < 1e-8 {
                0.5 + 0.375 * r_sq // series; the closed form loses digits at 0
            } else {
                ((1.0 - r_sq).powf(-0.5) - 1.0) / r_sq
            }
        }
        let n = self.verts.len();
        let mut area = 0.0;
        for i in 0..n {
            let a = self.verts[i];
            let b = self.verts[(i + 1) % n];
            match self.kinds[i] {
                EdgeKind::Arc => {
                    let sweep = ccw_delta(a.angle(), b.angle());
                    area += ((1.0 - self.radius * self.radius).powf(-0.5) - 1.0) * sweep;
                }
                EdgeKind::Chord { .. } => {
                    let cross = a.cross(b);
                    if cross.abs() < 1e-300 {
                        continue;
                    }
                    let d = b.sub(a);
                    let g = |s: f64| radial_weight(a.add(d.scale(s)).norm_sq());
                    let tol = 1e-12_f64.max(1e-11 * cross.abs());
                    area += cross * adaptive_simpson(&g, 0.0, 1.0, tol)?;
                }
            }
        }
        Ok(area)
    }
}

/// Exact cell polygon of `witness` under the sampled lines: the window disc
/// clipped against every line on the witness's side.
///
/// Errors with `Degenerate` if the witness lies within tolerance of a line
/// (callers resample; a null event under the sampling measure).
pub fn cell_polygon(
    hyperplanes: &[Hyperplane],
    window_radius: f64,
    witness: &[f64],
) -> Result<ArcPolygon> {
    assert_eq!(witness.len(), 2, "exact polygon path is d = 2 only");
    let rho = window_radius.tanh();
    debug_assert!(witness[0].hypot(witness[1]) < rho);
    let mut poly = ArcPolygon::full_disc(rho);
    for (i, h) in hyperplanes.iter().enumerate() {
        let s = h.side_coords(witness);
        if s == 0 {
            return Err(Error::Degenerate(format!(
                "witness lies on hyperplane {i}; resample"
            )));
        }
        poly.clip(i, h, s);
        debug_assert!(!poly.is_empty(), "witness clipped out of its own cell");
    }
    Ok(poly)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn plane(ux: f64, uy: f64, t: f64) -> Hyperplane {
        let n = ux.hypot(uy);
        Hyperplane::new(vec![ux / n, uy / n], t).unwrap()
    }

    #[test]
    fn full_disc_reports_unbounded_and_correct_area() {
        let r_hyp = 2.0f64;
        let disc = ArcPolygon::full_disc(r_hyp.tanh());
        assert!(disc.is_unbounded_in_window());
        assert_relative_eq!(
            disc.area_hyperbolic().unwrap(),
            crate::geometry::ball_volume(2, r_hyp),
            max_relative = 1e-10
        );
    }

    #[test]
    fn empty_sample_gives_full_disc() {
        let poly = cell_polygon(&[], 3.0, &[0.0, 0.0]).unwrap();
        assert!(poly.is_unbounded_in_window());
        assert_eq!(poly.vertices().len(), 2);
    }

    #[test]
    fn single_line_gives_half_disc() {
        let h = plane(1.0, 0.0, 0.3);
        let poly = cell_polygon(std::slice::from_ref(&h), 3.0, &[0.0, 0.0]).unwrap();
        assert!(poly.is_unbounded_in_window());
        // One chord edge on line 0, one arc edge.
        let chords: Vec<_> = poly
            .kinds()
            .iter()
            .filter(|k| matches!(k, EdgeKind::Chord { .. }))
            .collect();
        assert_eq!(chords.len(), 1);
        assert!(poly.contains(Vec2::new(0.0, 0.0)));
        assert!(!poly.contains(Vec2::new(0.5, 0.0)));
    }

    #[test]
    fn four_walls_box_the_origin() {
        // Walls at x = +-0.3 and y = +-0.3 box the origin into the square
        // [-0.3, 0.3]^2, a bounded cell. (Canonical offsets are positive, so
        // the left wall is H((-1,0), 0.3), not H((1,0), -0.3).)
        let hs = vec![
            plane(1.0, 0.0, 0.3),
            plane(-1.0, 0.0, 0.3),
            plane(0.0, 1.0, 0.3),
            plane(0.0, -1.0, 0.3),
        ];
        let poly = cell_polygon(&hs, 3.0, &[0.0, 0.0]).unwrap();
        assert!(!poly.is_unbounded_in_window());
        assert_eq!(poly.vertices().len(), 4);
        for v in poly.vertices() {
            assert_relative_eq!(v.x.abs(), 0.3, epsilon = 1e-12);
            assert_relative_eq!(v.y.abs(), 0.3, epsilon = 1e-12);
        }
        assert!(poly.contains(Vec2::new(0.29, 0.0)));
        assert!(!poly.contains(Vec2::new(0.31, 0.0)));
    }

    #[test]
    fn clip_order_does_not_matter() {
        let hs = vec![
            plane(1.0, 0.2, 0.4),
            plane(-0.3, 1.0, 0.2),
            plane(-1.0, -0.4, 0.35),
            plane(0.6, -1.0, 0.5),
        ];
        let a = cell_polygon(&hs, 2.0, &[0.0, 0.0]).unwrap();
        let rev: Vec<_> = hs.iter().rev().cloned().collect();
        let b = cell_polygon(&rev, 2.0, &[0.0, 0.0]).unwrap();
        assert_relative_eq!(
            a.area_hyperbolic().unwrap(),
            b.area_hyperbolic().unwrap(),
            max_relative = 1e-9
        );
        assert_eq!(a.vertices().len(), b.vertices().len());
    }

    #[test]
    fn degenerate_witness_is_rejected() {
        let h = plane(1.0, 0.0, 0.0);
        // Origin lies on a line through the origin.
        assert!(matches!(
            cell_polygon(std::slice::from_ref(&h), 2.0, &[0.0, 0.0]),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn cell_at_off_origin_witness_is_on_witness_side() {
        let h = plane(1.0, 0.0, 0.3);
        let poly = cell_polygon(std::slice::from_ref(&h), 3.0, &[0.6, 0.0]).unwrap();
        assert!(poly.contains(Vec2::new(0.6, 0.0)));
        assert!(!poly.contains(Vec2::new(0.0, 0.0)));
        assert!(poly.is_unbounded_in_window());
    }

    #[test]
    fn half_disc_area_is_half_ball_volume() {
        let r_hyp = 2.0f64;
        let h = plane(1.0, 0.0, 0.0);
        let poly = cell_polygon(std::slice::from_ref(&h), r_hyp, &[-0.3, 0.0]).unwrap();
        assert_relative_eq!(
            poly.area_hyperbolic().unwrap(),
            0.5 * crate::geometry::ball_volume(2, r_hyp),
            max_relative = 1e-9
        );
    }

    #[test]
    fn area_is_additive_across_a_cut() {
        let r_hyp = 1.5f64;
        let h = plane(0.3, 1.0, 0.25);
        let left = cell_polygon(std::slice::from_ref(&h), r_hyp, &[0.0, 0.0]).unwrap();
        let right = cell_polygon(std::slice::from_ref(&h), r_hyp, &[0.3, 0.9 * 0.3]).unwrap();
        assert_relative_eq!(
            left.area_hyperbolic().unwrap() + right.area_hyperbolic().unwrap(),
            crate::geometry::ball_volume(2, r_hyp),
            max_relative = 1e-9
        );
    }
}
