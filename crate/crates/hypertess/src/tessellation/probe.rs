use std::collections::{HashMap, VecDeque};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Hyperplane;
use crate::measure::ProcessSample;

use super::quadric::BallQuadric;

/// Disjoint-set forest with path compression.
pub(crate) struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
        }
    }

    pub fn find(&mut self, i: u32) -> u32 {
        let mut root = i;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        let mut cur = i;
        while self.parent[cur as usize] != root {
            let next = self.parent[cur as usize];
            self.parent[cur as usize] = root;
            cur = next;
        }
        root
    }

    pub fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb) as usize] = ra.min(rb);
        }
    }
}

/// Axis-aligned probe lattice in Klein coordinates, restricted to the window
/// ball, with edges kept exactly when no sampled hyperplane crosses them.
///
/// Lattice pitch is Euclidean; near the window sphere one pitch spans a huge
/// hyperbolic distance, which is why window-reach tests use an exact outward
/// segment predicate rather than node adjacency.
pub struct ProbeGraph {
    pub d: usize,
    pub spacing: f64,
    pub window_radius: f64,
    rho: f64,
    tuples: Vec<Vec<i32>>,
    coords: Vec<f64>,
    index: HashMap<Vec<i32>, u32>,
    adjacency: Vec<Vec<u32>>,
    sign_bits: Vec<Vec<u64>>,
    sign_zero: Vec<bool>,
}

/// Per-node packed sign vector over all hyperplanes (bit = side > 0).
fn sign_bits(planes: &[Hyperplane], x: &[f64]) -> (Vec<u64>, bool) {
    let mut bits = vec![0u64; planes.len().div_ceil(64)];
    let mut zero = false;
    for (j, h) in planes.iter().enumerate() {
        match h.side_coords(x) {
            1 => bits[j / 64] |= 1 << (j % 64),
            0 => zero = true,
            _ => {}
        }
    }
    (bits, zero)
}

pub fn build_probe_graph(sample: &ProcessSample, spacing: f64) -> Result<ProbeGraph> {
    let d = sample.d;
    let rho = sample.window_radius.tanh();
    if !(spacing > 0.0 && spacing < rho / 4.0) {
        return Err(Error::Usage(format!(
            "lattice pitch must lie in (0, tanh(R)/4) = (0, {}), got {spacing}",
            rho / 4.0
        )));
    }
    let m = (rho / spacing).floor() as i32;
    // Deterministic lexicographic enumeration of lattice tuples in the ball.
    let mut tuples = Vec::new();
    let mut cur = vec![-m; d];
    'outer: loop {
        let norm_sq: f64 = cur.iter().map(|&k| (k as f64 * spacing).powi(2)).sum();
        if norm_sq < rho * rho {
            tuples.push(cur.clone());
        }
        for axis in (0..d).rev() {
            if cur[axis] < m {
                cur[axis] += 1;
                continue 'outer;
            }
            cur[axis] = -m;
        }
        break;
    }
    let coords: Vec<f64> = tuples
        .iter()
        .flat_map(|t| t.iter().map(|&k| k as f64 * spacing))
        .collect();
    let index: HashMap<Vec<i32>, u32> = tuples
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), i as u32))
        .collect();

    let n = tuples.len();
    let signs: Vec<(Vec<u64>, bool)> = (0..n)
        .into_par_iter()
        .map(|i| sign_bits(&sample.hyperplanes, &coords[i * d..(i + 1) * d]))
        .collect();

    let forward: Vec<Vec<u32>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut nbrs = Vec::new();
            if signs[i].1 {
                return nbrs; // node on a hyperplane: isolated per crossing rule
            }
            let mut key = tuples[i].clone();
            for axis in 0..d {
                key[axis] += 1;
                if let Some(&j) = index.get(&key) {
                    if !signs[j as usize].1 && signs[i].0 == signs[j as usize].0 {
                        nbrs.push(j);
                    }
                }
                key[axis] -= 1;
            }
            nbrs
        })
        .collect();

    let mut adjacency = vec![Vec::new(); n];
    for (i, nbrs) in forward.iter().enumerate() {
        for &j in nbrs {
            adjacency[i].push(j);
            adjacency[j as usize].push(i as u32);
        }
    }
    let (sign_bits, sign_zero) = signs.into_iter().unzip();
    Ok(ProbeGraph {
        d,
        spacing,
        window_radius: sample.window_radius,
        rho,
        tuples,
        coords,
        index,
        adjacency,
        sign_bits,
        sign_zero,
    })
}

impl ProbeGraph {
    pub fn node_count(&self) -> usize {
        self.tuples.len()
    }

    pub fn node_coords(&self, i: u32) -> &[f64] {
        &self.coords[i as usize * self.d..(i as usize + 1) * self.d]
    }

    pub fn neighbors(&self, i: u32) -> &[u32] {
        &self.adjacency[i as usize]
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Nearest lattice node connectable to `z` by a hyperplane-free segment,
    /// searched over expanding Chebyshev rings around z's lattice cell.
    pub fn seed_for(&self, z: &[f64], planes: &[Hyperplane]) -> Result<u32> {
        let base: Vec<i32> = z
            .iter()
            .map(|&c| (c / self.spacing).round() as i32)
            .collect();
        for ring in 0..=3i32 {
            let mut candidates: Vec<Vec<i32>> = Vec::new();
            let mut cur = vec![-ring; self.d];
            'odo: loop {
                if cur.iter().any(|&c| c.abs() == ring) {
                    candidates.push(base.iter().zip(&cur).map(|(b, o)| b + o).collect());
                }
                for axis in (0..self.d).rev() {
                    if cur[axis] < ring {
                        cur[axis] += 1;
                        continue 'odo;
                    }
                    cur[axis] = -ring;
                }
                break;
            }
            for key in candidates {
                if let Some(&i) = self.index.get(&key) {
                    if self.sign_zero[i as usize] {
                        continue;
                    }
                    let node = self.node_coords(i);
                    if planes.iter().all(|h| !h.segment_crosses_coords(z, node)) {
                        return Ok(i);
                    }
                }
            }
        }
        Err(Error::Resolution(format!(
            "no probe node reachable from the query point at pitch {}; halve the pitch",
            self.spacing
        )))
    }

    /// All nodes connected to `seed` through kept edges, in BFS order.
    pub fn component_from(&self, seed: u32) -> Vec<u32> {
        let mut visited = vec![false; self.node_count()];
        let mut queue = VecDeque::from([seed]);
        visited[seed as usize] = true;
        let mut members = Vec::new();
        while let Some(i) = queue.pop_front() {
            members.push(i);
            for &j in &self.adjacency[i as usize] {
                if !visited[j as usize] {
                    visited[j as usize] = true;
                    queue.push_back(j);
                }
            }
        }
        members
    }

    /// True iff the node sits within one lattice pitch of the window sphere
    /// and its outward radial segment crosses no hyperplane (so the cell it
    /// belongs to touches the sphere).
    pub fn node_reaches_window(&self, i: u32, planes: &[Hyperplane]) -> bool {
        let x = self.node_coords(i);
        let norm = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm <= self.rho - self.spacing * (self.d as f64).sqrt() {
            return false;
        }
        let scale = self.rho * (1.0 - 1e-12) / norm;
        let outward: Vec<f64> = x.iter().map(|c| c * scale).collect();
        planes.iter().all(|h| !h.segment_crosses_coords(x, &outward))
    }

    pub fn any_reaches_window(&self, members: &[u32], planes: &[Hyperplane]) -> bool {
        members
            .iter()
            .any(|&i| self.node_reaches_window(i, planes))
    }

    /// Count distinct cells touching the window sphere: cells are convex, so
    /// the sign vector identifies the cell and window-reaching nodes are
    /// deduplicated by it. (Lattice connected components would over-count:
    /// thin crescents near the circle fragment at any finite pitch.) Cells
    /// thinner than the pitch near the sphere can still be missed entirely.
    pub fn count_window_components(&self, planes: &[Hyperplane]) -> usize {
        let mut cells = std::collections::HashSet::new();
        for i in 0..self.node_count() {
            if self.sign_zero[i] || cells.contains(&self.sign_bits[i]) {
                continue;
            }
            if self.node_reaches_window(i as u32, planes) {
                cells.insert(self.sign_bits[i].clone());
            }
        }
        cells.len()
    }

    /// Components of (cell of the member set) minus the ball quadric: nodes
    /// inside the ball are dropped and edges crossing it are cut. Returns the
    /// member lists of the surviving components.
    pub fn split_outside_ball(&self, members: &[u32], ball: &BallQuadric) -> Vec<Vec<u32>> {
        let kept: Vec<u32> = members
            .iter()
            .copied()
            .filter(|&i| !ball.contains(self.node_coords(i)))
            .collect();
        let pos: HashMap<u32, u32> = kept.iter().enumerate().map(|(p, &i)| (i, p as u32)).collect();
        let mut uf = UnionFind::new(kept.len());
        for (p, &i) in kept.iter().enumerate() {
            for &j in &self.adjacency[i as usize] {
                if let Some(&q) = pos.get(&j) {
                    if q as usize > p
                        && !ball.segment_intersects(self.node_coords(i), self.node_coords(j))
                    {
                        uf.union(p as u32, q);
                    }
                }
            }
        }
        let mut groups: HashMap<u32, Vec<u32>> = HashMap::new();
        for (p, &i) in kept.iter().enumerate() {
            groups.entry(uf.find(p as u32)).or_default().push(i);
        }
        let mut out: Vec<Vec<u32>> = groups.into_values().collect();
        out.sort_by_key(|g| g[0]);
        out
    }
}
