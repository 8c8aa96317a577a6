//! Sharp-interface extraction and the BV-solution checks: marching-squares
//! contour of `psi(u)` at level `c0/2`, geometry measurement (lengths, area,
//! contact points and angles), normal-velocity estimation between snapshots,
//! the distributional motion-law residual, and the optimal-dissipation /
//! volume-continuity report.

use crate::error::Error;
use crate::grid::{Wall, WallSpecs};
use crate::potentials::{psi, EnergyModel, C0};
use crate::solver::PhaseField;
use crate::Result;

/// One oriented polyline of the extracted contour. The phase `A = {u = 1}`
/// lies on the left of the direction of travel, so the per-vertex normals
/// (left normals) are the measure-theoretic inner normals of `A`.
#[derive(Debug, Clone)]
pub struct Curve {
    pub vertices: Vec<[f64; 2]>,
    pub closed: bool,
    /// Inner normal of `A` per vertex.
    pub normals: Vec<[f64; 2]>,
    /// Arc-length quadrature weight per vertex.
    pub weights: Vec<f64>,
}

impl Curve {
    pub fn length(&self) -> f64 {
        let mut acc = 0.0;
        for w in self.vertices.windows(2) {
            acc += dist(w[0], w[1]);
        }
        if self.closed && self.vertices.len() > 2 {
            acc += dist(*self.vertices.first().unwrap(), *self.vertices.last().unwrap());
        }
        acc
    }
}

/// Where an open curve meets the container boundary.
#[derive(Debug, Clone, Copy)]
pub struct ContactPoint {
    pub wall: Wall,
    pub position: [f64; 2],
    pub curve: usize,
    /// True when this is the start of the directed curve.
    pub at_start: bool,
}

/// Extracted sharp interface with its geometry measurements.
#[derive(Debug, Clone)]
pub struct InterfaceCurve {
    pub curves: Vec<Curve>,
    pub contact_points: Vec<ContactPoint>,
    /// Total contour length inside the domain.
    pub interior_length: f64,
    /// Length of the container boundary wetted by `A`.
    pub wetted_length: f64,
    /// Wetted stretches per wall, as intervals of the along-wall coordinate.
    pub wetted_intervals: Vec<(Wall, f64, f64)>,
    /// Enclosed area of `A`.
    pub area: f64,
}

impl InterfaceCurve {
    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    pub fn component_count(&self) -> usize {
        self.curves.len()
    }
}

#[inline]
fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Node lattice for the contour: cell centers augmented by a boundary ring
/// on the physical walls, filled with extrapolated traces of `psi(u)`.
struct NodeGrid {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// `values[q * np + p]`
    values: Vec<f64>,
    np: usize,
    nq: usize,
}

fn node_grid(state: &PhaseField) -> NodeGrid {
    let g = state.grid;
    let (nx, ny, h) = (g.nx, g.ny, g.h);
    let (np, nq) = (nx + 2, ny + 2);
    let mut xs = Vec::with_capacity(np);
    xs.push(0.0);
    for i in 0..nx {
        xs.push((i as f64 + 0.5) * h);
    }
    xs.push(g.lx());
    let mut ys = Vec::with_capacity(nq);
    ys.push(0.0);
    for j in 0..ny {
        ys.push((j as f64 + 0.5) * h);
    }
    ys.push(g.ly());

    let mut v = vec![0.0; np * nq];
    for j in 0..ny {
        for i in 0..nx {
            v[(j + 1) * np + (i + 1)] = psi(state.u.at(i, j));
        }
    }
    for q in 1..=ny {
        v[q * np] = 1.5 * v[q * np + 1] - 0.5 * v[q * np + 2];
        v[q * np + np - 1] = 1.5 * v[q * np + np - 2] - 0.5 * v[q * np + np - 3];
    }
    for p in 1..=nx {
        v[p] = 1.5 * v[np + p] - 0.5 * v[2 * np + p];
        v[(nq - 1) * np + p] = 1.5 * v[(nq - 2) * np + p] - 0.5 * v[(nq - 3) * np + p];
    }
    // corners: average of the two one-sided extrapolations along the ring
    v[0] = 0.5 * ((1.5 * v[1] - 0.5 * v[2]) + (1.5 * v[np] - 0.5 * v[2 * np]));
    v[np - 1] = 0.5
        * ((1.5 * v[np - 2] - 0.5 * v[np - 3]) + (1.5 * v[2 * np - 1] - 0.5 * v[3 * np - 1]));
    v[(nq - 1) * np] = 0.5
        * ((1.5 * v[(nq - 1) * np + 1] - 0.5 * v[(nq - 1) * np + 2])
            + (1.5 * v[(nq - 2) * np] - 0.5 * v[(nq - 3) * np]));
    v[nq * np - 1] = 0.5
        * ((1.5 * v[nq * np - 2] - 0.5 * v[nq * np - 3])
            + (1.5 * v[(nq - 1) * np - 1] - 0.5 * v[(nq - 2) * np - 1]));

    NodeGrid {
        xs,
        ys,
        values: v,
        np,
        nq,
    }
}

/// Global edge identifiers of the node lattice: horizontal edges join
/// `(p, q)-(p+1, q)`, vertical edges join `(p, q)-(p, q+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum EdgeId {
    H(usize, usize),
    V(usize, usize),
}

impl NodeGrid {
    #[inline]
    fn val(&self, p: usize, q: usize) -> f64 {
        self.values[q * self.np + p]
    }

    fn crossing(&self, e: EdgeId, level: f64) -> [f64; 2] {
        match e {
            EdgeId::H(p, q) => {
                let (va, vb) = (self.val(p, q), self.val(p + 1, q));
                let t = ((level - va) / (vb - va)).clamp(0.0, 1.0);
                [self.xs[p] + t * (self.xs[p + 1] - self.xs[p]), self.ys[q]]
            }
            EdgeId::V(p, q) => {
                let (va, vb) = (self.val(p, q), self.val(p, q + 1));
                let t = ((level - va) / (vb - va)).clamp(0.0, 1.0);
                [self.xs[p], self.ys[q] + t * (self.ys[q + 1] - self.ys[q])]
            }
        }
    }
}

/// Marching squares over the node lattice. Returns directed segments
/// `(from_edge, to_edge)` with the high side (`psi > level`) on the left.
fn marching_segments(ng: &NodeGrid, level: f64) -> Vec<(EdgeId, EdgeId)> {
    let mut segs = Vec::new();
    for q in 0..ng.nq - 1 {
        for p in 0..ng.np - 1 {
            let bl = ng.val(p, q) > level;
            let br = ng.val(p + 1, q) > level;
            let tr = ng.val(p + 1, q + 1) > level;
            let tl = ng.val(p, q + 1) > level;
            let code = (bl as u8) | (br as u8) << 1 | (tr as u8) << 2 | (tl as u8) << 3;
            if code == 0 || code == 15 {
                continue;
            }
            let bottom = EdgeId::H(p, q);
            let top = EdgeId::H(p, q + 1);
            let left = EdgeId::V(p, q);
            let right = EdgeId::V(p + 1, q);
            match code {
                1 => segs.push((bottom, left)),
                2 => segs.push((right, bottom)),
                3 => segs.push((right, left)),
                4 => segs.push((top, right)),
                6 => segs.push((top, bottom)),
                7 => segs.push((top, left)),
                8 => segs.push((left, top)),
                9 => segs.push((bottom, top)),
                11 => segs.push((right, top)),
                12 => segs.push((left, right)),
                13 => segs.push((bottom, right)),
                14 => segs.push((left, bottom)),
                5 | 10 => {
                    let center = 0.25
                        * (ng.val(p, q)
                            + ng.val(p + 1, q)
                            + ng.val(p + 1, q + 1)
                            + ng.val(p, q + 1));
                    let center_in = center > level;
                    if code == 5 {
                        if center_in {
                            segs.push((top, left));
                            segs.push((bottom, right));
                        } else {
                            segs.push((bottom, left));
                            segs.push((top, right));
                        }
                    } else if center_in {
                        segs.push((right, bottom));
                        segs.push((left, top));
                    } else {
                        segs.push((left, bottom));
                        segs.push((right, top));
                    }
                }
                _ => unreachable!(),
            }
        }
    }
    segs
}

fn boundary_wall_of_edge(ng: &NodeGrid, e: EdgeId) -> Option<Wall> {
    match e {
        EdgeId::H(_, q) => {
            if q == 0 {
                Some(Wall::Bottom)
            } else if q == ng.nq - 1 {
                Some(Wall::Top)
            } else {
                None
            }
        }
        EdgeId::V(p, _) => {
            if p == 0 {
                Some(Wall::Left)
            } else if p == ng.np - 1 {
                Some(Wall::Right)
            } else {
                None
            }
        }
    }
}

/// Arc-length parametrization of the container boundary, counterclockwise
/// from the origin: bottom, right, top, left.
fn boundary_param(lx: f64, ly: f64, pt: [f64; 2]) -> f64 {
    let [x, y] = pt;
    let tol = 1e-9 * (lx + ly);
    if y.abs() <= tol {
        x
    } else if (x - lx).abs() <= tol {
        lx + y
    } else if (y - ly).abs() <= tol {
        lx + ly + (lx - x)
    } else {
        2.0 * lx + ly + (ly - y)
    }
}

fn boundary_point(lx: f64, ly: f64, s: f64) -> [f64; 2] {
    let p = 2.0 * (lx + ly);
    let s = s.rem_euclid(p);
    if s < lx {
        [s, 0.0]
    } else if s < lx + ly {
        [lx, s - lx]
    } else if s < 2.0 * lx + ly {
        [lx - (s - lx - ly), ly]
    } else {
        [0.0, ly - (s - 2.0 * lx - ly)]
    }
}

/// Extracts the sharp interface of `psi(u)` at level `c0/2`: contour
/// polylines with inner normals, contact points, interior and wetted
/// lengths, and the enclosed area of `A = {psi(u) > c0/2}` (shoelace with
/// closure through the wetted boundary arcs).
pub fn extract_interface(state: &PhaseField) -> InterfaceCurve {
    let g = state.grid;
    let (lx, ly) = (g.lx(), g.ly());
    let level = 0.5 * C0;
    let ng = node_grid(state);
    let segs = marching_segments(&ng, level);

    // wetted wall intervals from the ring values
    let mut wetted_intervals = Vec::new();
    let mut wetted_length = 0.0;
    {
        let mut scan = |wall: Wall, coords: &[f64], vals: Vec<f64>| {
            let n = coords.len();
            let mut start: Option<f64> = None;
            for k in 0..n {
                let inside = vals[k] > level;
                if inside && start.is_none() {
                    let c = if k == 0 {
                        coords[0]
                    } else {
                        let t = ((level - vals[k - 1]) / (vals[k] - vals[k - 1])).clamp(0.0, 1.0);
                        coords[k - 1] + t * (coords[k] - coords[k - 1])
                    };
                    start = Some(c);
                } else if !inside {
                    if let Some(s0) = start.take() {
                        let t = ((level - vals[k - 1]) / (vals[k] - vals[k - 1])).clamp(0.0, 1.0);
                        let c = coords[k - 1] + t * (coords[k] - coords[k - 1]);
                        wetted_intervals.push((wall, s0, c));
                        wetted_length += c - s0;
                    }
                }
            }
            if let Some(s0) = start.take() {
                wetted_intervals.push((wall, s0, coords[n - 1]));
                wetted_length += coords[n - 1] - s0;
            }
        };
        let (np, nq) = (ng.np, ng.nq);
        scan(Wall::Bottom, &ng.xs, (0..np).map(|p| ng.values[p]).collect());
        scan(
            Wall::Top,
            &ng.xs,
            (0..np).map(|p| ng.values[(nq - 1) * np + p]).collect(),
        );
        scan(Wall::Left, &ng.ys, (0..nq).map(|q| ng.values[q * np]).collect());
        scan(
            Wall::Right,
            &ng.ys,
            (0..nq).map(|q| ng.values[q * np + np - 1]).collect(),
        );
    }

    if segs.is_empty() {
        let inside = ng.val(ng.np / 2, ng.nq / 2) > level;
        return InterfaceCurve {
            curves: Vec::new(),
            contact_points: Vec::new(),
            interior_length: 0.0,
            wetted_length,
            wetted_intervals,
            area: if inside { lx * ly } else { 0.0 },
        };
    }

    // chain directed segments through their shared edges
    use std::collections::{BTreeMap, BTreeSet};
    let mut next: BTreeMap<EdgeId, EdgeId> = BTreeMap::new();
    let mut incoming: BTreeSet<EdgeId> = BTreeSet::new();
    for &(a, b) in &segs {
        next.insert(a, b);
        incoming.insert(b);
    }
    let mut used: BTreeSet<EdgeId> = BTreeSet::new();
    let mut chains: Vec<(Vec<EdgeId>, bool)> = Vec::new();
    for (&s, _) in next.iter() {
        if incoming.contains(&s) || used.contains(&s) {
            continue;
        }
        let mut chain = vec![s];
        used.insert(s);
        let mut cur = s;
        while let Some(&n) = next.get(&cur) {
            chain.push(n);
            if !used.insert(n) {
                break;
            }
            cur = n;
        }
        chains.push((chain, false));
    }
    let keys: Vec<EdgeId> = next.keys().copied().collect();
    for s in keys {
        if used.contains(&s) {
            continue;
        }
        let mut chain = vec![s];
        used.insert(s);
        let mut cur = *next.get(&s).unwrap();
        while cur != s {
            chain.push(cur);
            used.insert(cur);
            cur = *next.get(&cur).unwrap();
        }
        chains.push((chain, true));
    }

    let mut curves: Vec<Curve> = Vec::new();
    let mut contact_points = Vec::new();
    let mut interior_length = 0.0;
    for (chain, closed) in chains {
        let vertices: Vec<[f64; 2]> = chain.iter().map(|&e| ng.crossing(e, level)).collect();
        if vertices.len() < 2 {
            continue;
        }
        let n = vertices.len();
        let seg_normal = |a: [f64; 2], b: [f64; 2]| -> ([f64; 2], f64) {
            let tx = b[0] - a[0];
            let ty = b[1] - a[1];
            let l = (tx * tx + ty * ty).sqrt();
            if l > 0.0 {
                ([-ty / l, tx / l], l)
            } else {
                ([0.0, 0.0], 0.0)
            }
        };
        let mut normals = vec![[0.0; 2]; n];
        let mut weights = vec![0.0; n];
        for k in 0..n {
            let (mut n1, mut l1) = ([0.0; 2], 0.0);
            let (mut n2, mut l2) = ([0.0; 2], 0.0);
            if closed || k > 0 {
                let prev = vertices[(k + n - 1) % n];
                let (nn, ll) = seg_normal(prev, vertices[k]);
                n1 = nn;
                l1 = ll;
            }
            if closed || k + 1 < n {
                let nxt = vertices[(k + 1) % n];
                let (nn, ll) = seg_normal(vertices[k], nxt);
                n2 = nn;
                l2 = ll;
            }
            let mut vx = n1[0] * l1 + n2[0] * l2;
            let mut vy = n1[1] * l1 + n2[1] * l2;
            let vn = (vx * vx + vy * vy).sqrt();
            if vn > 0.0 {
                vx /= vn;
                vy /= vn;
            }
            normals[k] = [vx, vy];
            weights[k] = 0.5 * (l1 + l2);
        }
        let curve = Curve {
            vertices,
            closed,
            normals,
            weights,
        };
        interior_length += curve.length();
        if !closed {
            if let Some(w) = boundary_wall_of_edge(&ng, chain[0]) {
                contact_points.push(ContactPoint {
                    wall: w,
                    position: curve.vertices[0],
                    curve: curves.len(),
                    at_start: true,
                });
            }
            if let Some(w) = boundary_wall_of_edge(&ng, *chain.last().unwrap()) {
                contact_points.push(ContactPoint {
                    wall: w,
                    position: *curve.vertices.last().unwrap(),
                    curve: curves.len(),
                    at_start: false,
                });
            }
        }
        curves.push(curve);
    }

    // Enclosed area: shoelace over closed curves plus open curves closed
    // through the wetted boundary arcs (walking CCW, A stays on the left).
    let shoelace = |pts: &[[f64; 2]]| -> f64 {
        let mut a = 0.0;
        for k in 0..pts.len() {
            let p = pts[k];
            let q = pts[(k + 1) % pts.len()];
            a += p[0] * q[1] - q[0] * p[1];
        }
        0.5 * a
    };
    let mut area = 0.0;
    let mut any_negative_closed = false;
    for c in curves.iter().filter(|c| c.closed) {
        let a = shoelace(&c.vertices);
        if a < 0.0 {
            any_negative_closed = true;
        }
        area += a;
    }
    let open_idx: Vec<usize> = (0..curves.len()).filter(|&i| !curves[i].closed).collect();
    if !open_idx.is_empty() {
        let perimeter = 2.0 * (lx + ly);
        let starts_params: Vec<(f64, usize)> = open_idx
            .iter()
            .map(|&i| (boundary_param(lx, ly, curves[i].vertices[0]), i))
            .collect();
        let corners = [lx, lx + ly, 2.0 * lx + ly, 2.0 * (lx + ly)];
        let mut visited = vec![false; curves.len()];
        for &i0 in &open_idx {
            if visited[i0] {
                continue;
            }
            let mut poly: Vec<[f64; 2]> = Vec::new();
            let mut cur = i0;
            loop {
                visited[cur] = true;
                poly.extend_from_slice(&curves[cur].vertices);
                let s_end = boundary_param(lx, ly, *curves[cur].vertices.last().unwrap());
                let mut best: Option<(f64, usize)> = None;
                for &(s, idx) in &starts_params {
                    let mut gap = s - s_end;
                    if gap <= 1e-12 * perimeter {
                        gap += perimeter;
                    }
                    if best.map_or(true, |(bg, _)| gap < bg) {
                        best = Some((gap, idx));
                    }
                }
                let (gap, nxt) = best.expect("open contour without a successor on the boundary");
                // corners passed on the CCW walk, in walk order
                let mut passed: Vec<(f64, [f64; 2])> = Vec::new();
                for &c in &corners {
                    let mut d = c - s_end;
                    if d <= 1e-12 * perimeter {
                        d += perimeter;
                    }
                    if d < gap - 1e-12 * perimeter {
                        passed.push((d, boundary_point(lx, ly, c)));
                    }
                }
                passed.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                poly.extend(passed.into_iter().map(|(_, p)| p));
                if nxt == i0 {
                    break;
                }
                cur = nxt;
            }
            area += shoelace(&poly);
        }
    } else if any_negative_closed {
        // closed contour(s) around the complement only: A fills the rest
        area += lx * ly;
    }

    InterfaceCurve {
        curves,
        contact_points,
        interior_length,
        wetted_length,
        wetted_intervals,
        area: area.max(0.0),
    }
}

/// Sharp-interface energy `E(A) = c0 |interface| + sum_w [[sigma_hat]]_w
/// |wetted_w|` with per-wall tension jump `c0 cos(alpha_w)`.
pub fn sharp_energy(curve: &InterfaceCurve, model: &EnergyModel, walls: &WallSpecs) -> f64 {
    let mut e = model.c0() * curve.interior_length;
    for &(wall, a, b) in &curve.wetted_intervals {
        e += model.c0() * walls.get(wall).cos_alpha() * (b - a);
    }
    e
}

/// A measured contact angle at one contact point.
#[derive(Debug, Clone, Copy)]
pub struct ContactAngle {
    pub contact: [f64; 2],
    /// Angle between the interface and the wall, measured inside `A = {u=1}`.
    pub angle_in_plus_phase: f64,
    /// `pi - angle_in_plus_phase`: the angle on the favored-phase side, which
    /// the standard boundary energy drives to the Young angle `alpha`.
    pub young_angle: f64,
}

/// Measures the contact angle at every contact point of the interface on
/// `wall`. Contour vertices with wall distance inside `band` are fit by a
/// quadratic in arc length and the tangent is extrapolated to the wall; a
/// straight-line fit would carry an `O(curvature x band)` bias larger than
/// the measurement targets.
pub fn contact_angle(
    iface: &InterfaceCurve,
    wall: Wall,
    band: (f64, f64),
) -> Result<Vec<ContactAngle>> {
    let contacts: Vec<&ContactPoint> = iface
        .contact_points
        .iter()
        .filter(|c| c.wall == wall)
        .collect();
    if contacts.is_empty() {
        return Err(Error::Interface(format!("no contact point on {wall:?}")));
    }
    let mut out = Vec::new();
    for cp in contacts {
        let curve = &iface.curves[cp.curve];
        let n = curve.vertices.len();
        let indices: Vec<usize> = if cp.at_start {
            (0..n).collect()
        } else {
            (0..n).rev().collect()
        };
        let wall_coord = match wall {
            Wall::Left | Wall::Right => cp.position[0],
            Wall::Bottom | Wall::Top => cp.position[1],
        };
        let distf = |p: [f64; 2]| -> f64 {
            match wall {
                Wall::Left | Wall::Right => (p[0] - wall_coord).abs(),
                Wall::Bottom | Wall::Top => (p[1] - wall_coord).abs(),
            }
        };
        let mut pts: Vec<([f64; 2], f64)> = Vec::new();
        let mut arc = 0.0;
        let mut prev = cp.position;
        for &k in &indices {
            let v = curve.vertices[k];
            arc += dist(prev, v);
            prev = v;
            let d = distf(v);
            if d > band.1 {
                break;
            }
            if d >= band.0 {
                pts.push((v, arc));
            }
        }
        if pts.len() < 4 {
            return Err(Error::Interface(format!(
                "only {} contour vertices in the fit band on {wall:?}",
                pts.len()
            )));
        }
        let fit = |component: usize| -> [f64; 3] {
            let mut m = [[0.0; 3]; 3];
            let mut rhs = [0.0; 3];
            for (p, l) in &pts {
                let basis = [1.0, *l, l * l];
                for r in 0..3 {
                    rhs[r] += basis[r] * p[component];
                    for c in 0..3 {
                        m[r][c] += basis[r] * basis[c];
                    }
                }
            }
            solve3(m, rhs)
        };
        let cx = fit(0);
        let cy = fit(1);
        // tangent extrapolated to the contact (l = 0); arc length grows away
        // from the wall, so the tangent points into the domain
        let (tx, ty) = (cx[1], cy[1]);
        let tn = (tx * tx + ty * ty).sqrt();
        if tn == 0.0 {
            return Err(Error::Interface("degenerate tangent fit".into()));
        }
        let t_hat = [tx / tn, ty / tn];
        // wall direction on the A side, probed from the wetted intervals
        let along = match wall {
            Wall::Bottom | Wall::Top => cp.position[0],
            Wall::Left | Wall::Right => cp.position[1],
        };
        let delta = 1e-6_f64.max(1e-3 * (band.1 - band.0));
        let wetted_at = |s: f64| {
            iface
                .wetted_intervals
                .iter()
                .any(|&(w, a, b)| w == wall && s >= a - 1e-12 && s <= b + 1e-12)
        };
        let wall_dir = match wall {
            Wall::Bottom | Wall::Top => [1.0, 0.0],
            Wall::Left | Wall::Right => [0.0, 1.0],
        };
        let w_a = if wetted_at(along + delta) {
            wall_dir
        } else {
            [-wall_dir[0], -wall_dir[1]]
        };
        let cosang = (t_hat[0] * w_a[0] + t_hat[1] * w_a[1]).clamp(-1.0, 1.0);
        let angle = cosang.acos();
        out.push(ContactAngle {
            contact: cp.position,
            angle_in_plus_phase: angle,
            young_angle: std::f64::consts::PI - angle,
        });
    }
    Ok(out)
}

fn solve3(mut m: [[f64; 3]; 3], mut b: [f64; 3]) -> [f64; 3] {
    for col in 0..3 {
        let mut piv = col;
        for r in col + 1..3 {
            if m[r][col].abs() > m[piv][col].abs() {
                piv = r;
            }
        }
        m.swap(col, piv);
        b.swap(col, piv);
        let d = m[col][col];
        for r in 0..3 {
            if r != col && m[r][col] != 0.0 {
                let f = m[r][col] / d;
                for c in 0..3 {
                    m[r][c] -= f * m[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    [b[0] / m[0][0], b[1] / m[1][1], b[2] / m[2][2]]
}

/// Scalar normal speed sampled at a contour vertex. `speed` is the
/// displacement along the inner normal `nu_A` per unit time, so a shrinking
/// phase has positive `speed`; the paper's velocity relative to `-nu_A` is
/// `-speed`.
#[derive(Debug, Clone, Copy)]
pub struct VelocitySample {
    pub position: [f64; 2],
    pub normal: [f64; 2],
    pub speed: f64,
    pub weight: f64,
}

/// Estimates the normal velocity between two interface snapshots separated
/// by `dt`: for each vertex of `a`, the signed distance to `b` along the
/// inner normal divided by `dt`. Fails when the displacement exceeds `10 h`.
pub fn normal_velocity(
    a: &InterfaceCurve,
    b: &InterfaceCurve,
    dt: f64,
    h: f64,
) -> Result<Vec<VelocitySample>> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(
            "snapshot gap must be positive".into(),
        ));
    }
    if a.is_empty() || b.is_empty() {
        return Err(Error::Interface(
            "empty interface in velocity estimation".into(),
        ));
    }
    let limit = 10.0 * h;
    let mut out = Vec::new();
    let mut misses = 0usize;
    let mut total = 0usize;
    for curve in &a.curves {
        for (k, &p) in curve.vertices.iter().enumerate() {
            let nu = curve.normals[k];
            let mut best: Option<f64> = None;
            for cb in &b.curves {
                let m = cb.vertices.len();
                let nseg = if cb.closed { m } else { m - 1 };
                for s in 0..nseg {
                    let q1 = cb.vertices[s];
                    let q2 = cb.vertices[(s + 1) % m];
                    let ex = q2[0] - q1[0];
                    let ey = q2[1] - q1[1];
                    // p + t nu = q1 + r e
                    let det = nu[0] * (-ey) + nu[1] * ex;
                    if det.abs() < 1e-300 {
                        continue;
                    }
                    let bx = q1[0] - p[0];
                    let by = q1[1] - p[1];
                    let t = (bx * (-ey) + by * ex) / det;
                    let r = (nu[0] * by - nu[1] * bx) / det;
                    if (-1e-9..=1.0 + 1e-9).contains(&r)
                        && best.map_or(true, |bt: f64| t.abs() < bt.abs())
                    {
                        best = Some(t);
                    }
                }
            }
            // Normal rays from endpoint vertices can exit through the wall
            // without meeting the successor curve; those samples are dropped
            // (their total arc weight is O(h)).
            let Some(t) = best else {
                misses += 1;
                total += 1;
                continue;
            };
            total += 1;
            if t.abs() > limit {
                return Err(Error::Undersampled {
                    displacement: t.abs(),
                    limit,
                });
            }
            out.push(VelocitySample {
                position: p,
                normal: nu,
                speed: t / dt,
                weight: curve.weights[k],
            });
        }
    }
    if total == 0 || misses * 5 > total {
        return Err(Error::Interface(format!(
            "{misses} of {total} normal rays missed the successor interface"
        )));
    }
    Ok(out)
}

/// Tangential test vector field with analytic gradient; `grad[i][j]` is
/// `d B_i / d x_j`.
pub struct TangentialField {
    pub name: &'static str,
    pub b: Box<dyn Fn(f64, f64) -> [f64; 2] + Sync>,
    pub grad: Box<dyn Fn(f64, f64) -> [[f64; 2]; 2] + Sync>,
}

/// Catalogue of six polynomial test fields tangential on all four walls of
/// `(0, lx) x (0, ly)`, with exact gradients.
pub fn tangential_catalogue(lx: f64, ly: f64) -> Vec<TangentialField> {
    let px = move |x: f64| 4.0 * x * (lx - x) / (lx * lx);
    let dpx = move |x: f64| 4.0 * (lx - 2.0 * x) / (lx * lx);
    let py = move |y: f64| 4.0 * y * (ly - y) / (ly * ly);
    let dpy = move |y: f64| 4.0 * (ly - 2.0 * y) / (ly * ly);
    let cx = move |x: f64| 2.0 * x / lx - 1.0;
    let cy = move |y: f64| 2.0 * y / ly - 1.0;
    let dcx = 2.0 / lx;
    let dcy = 2.0 / ly;

    vec![
        TangentialField {
            name: "px_ex",
            b: Box::new(move |x, _| [px(x), 0.0]),
            grad: Box::new(move |x, _| [[dpx(x), 0.0], [0.0, 0.0]]),
        },
        TangentialField {
            name: "py_ey",
            b: Box::new(move |_, y| [0.0, py(y)]),
            grad: Box::new(move |_, y| [[0.0, 0.0], [0.0, dpy(y)]]),
        },
        TangentialField {
            name: "shear",
            b: Box::new(move |x, y| [px(x) * cy(y), py(y) * cx(x)]),
            grad: Box::new(move |x, y| {
                [
                    [dpx(x) * cy(y), px(x) * dcy],
                    [py(y) * dcx, dpy(y) * cx(x)],
                ]
            }),
        },
        TangentialField {
            name: "pxpy_ex",
            b: Box::new(move |x, y| [px(x) * py(y), 0.0]),
            grad: Box::new(move |x, y| [[dpx(x) * py(y), px(x) * dpy(y)], [0.0, 0.0]]),
        },
        TangentialField {
            name: "pxpy_ey",
            b: Box::new(move |x, y| [0.0, px(x) * py(y)]),
            grad: Box::new(move |x, y| [[0.0, 0.0], [dpx(x) * py(y), px(x) * dpy(y)]]),
        },
        TangentialField {
            name: "stretch",
            b: Box::new(move |x, y| [px(x) * cx(x), -py(y) * cy(y)]),
            grad: Box::new(move |x, y| {
                [
                    [dpx(x) * cx(x) + px(x) * dcx, 0.0],
                    [0.0, -(dpy(y) * cy(y) + py(y) * dcy)],
                ]
            }),
        },
    ]
}

/// Residual of the distributional motion law for one snapshot:
///
/// ```text
///   | c0 int_{interface} (I - nu x nu) : grad B
///     + sum_w [[sigma_hat]]_w int_{wetted_w} (I - nu_w x nu_w) : grad B
///     - c0 int_{interface} (B . nu_A) V |,       V = -speed.
/// ```
///
/// `B` must be tangential on the walls; the wetted-wall term uses the exact
/// wall normals and the analytic gradient of the catalogue field.
pub fn motion_law_residual(
    iface: &InterfaceCurve,
    velocity: &[VelocitySample],
    field: &TangentialField,
    model: &EnergyModel,
    walls: &WallSpecs,
    lx: f64,
    ly: f64,
) -> Result<f64> {
    for k in 0..=16 {
        let t = k as f64 / 16.0;
        for (p, nu) in [
            ([t * lx, 0.0], [0.0, 1.0]),
            ([t * lx, ly], [0.0, -1.0]),
            ([0.0, t * ly], [1.0, 0.0]),
            ([lx, t * ly], [-1.0, 0.0]),
        ] {
            let b = (field.b)(p[0], p[1]);
            if (b[0] * nu[0] + b[1] * nu[1]).abs() > 1e-10 {
                return Err(Error::InvalidParameter(format!(
                    "test field {} is not tangential on the walls",
                    field.name
                )));
            }
        }
    }
    let c0 = model.c0();
    let tangential_trace = |g: [[f64; 2]; 2], nu: [f64; 2]| -> f64 {
        let trace = g[0][0] + g[1][1];
        let nn = nu[0] * (g[0][0] * nu[0] + g[0][1] * nu[1])
            + nu[1] * (g[1][0] * nu[0] + g[1][1] * nu[1]);
        trace - nn
    };

    let mut curvature_term = 0.0;
    for c in &iface.curves {
        for (k, &p) in c.vertices.iter().enumerate() {
            let g = (field.grad)(p[0], p[1]);
            curvature_term += c.weights[k] * tangential_trace(g, c.normals[k]);
        }
    }
    curvature_term *= c0;

    let mut wall_term = 0.0;
    for &(wall, a, b) in &iface.wetted_intervals {
        let jump = c0 * walls.get(wall).cos_alpha();
        if jump == 0.0 {
            continue;
        }
        let len = b - a;
        let nseg = ((len / (0.01 * (lx + ly))).ceil() as usize).max(4);
        let ds = len / nseg as f64;
        for k in 0..nseg {
            let s = a + (k as f64 + 0.5) * ds;
            let p = match wall {
                Wall::Bottom => [s, 0.0],
                Wall::Top => [s, ly],
                Wall::Left => [0.0, s],
                Wall::Right => [lx, s],
            };
            let g = (field.grad)(p[0], p[1]);
            wall_term += jump * ds * tangential_trace(g, wall.inward_normal());
        }
    }

    let mut velocity_term = 0.0;
    for v in velocity {
        let b = (field.b)(v.position[0], v.position[1]);
        let v_paper = -v.speed;
        velocity_term += v.weight * (b[0] * v.normal[0] + b[1] * v.normal[1]) * v_paper;
    }
    velocity_term *= c0;

    Ok((curvature_term + wall_term - velocity_term).abs())
}

/// Per-snapshot row of the optimal-dissipation check.
#[derive(Debug, Clone, Copy)]
pub struct DissipationRow {
    pub t: f64,
    pub sharp_energy: f64,
    pub area: f64,
    /// `c0 int_0^t int V^2` accumulated by the trapezoid rule.
    pub dissipation: f64,
    /// `E(A(0)) - E(A(t)) - dissipation`; nonnegative when the optimal
    /// dissipation inequality holds.
    pub slack: f64,
}

/// Report of the BV optimal-dissipation inequality and the 1/2-Hoelder
/// volume-continuity bound.
#[derive(Debug, Clone)]
pub struct BvDissipationReport {
    pub rows: Vec<DissipationRow>,
    /// Most negative slack (0 when the inequality holds everywhere).
    pub worst_slack: f64,
    /// Worst `c0 |area(t) - area(s)| / (sqrt(2|t-s|) E_eps(u0))` over pairs.
    pub worst_holder_ratio: f64,
}

/// Verifies `E(A(t)) + c0 int_0^t int V^2 <= E(A(0))` along a trajectory of
/// extracted interfaces, and the volume-continuity bound
/// `c0 |area(t) - area(s)| <= sqrt(2|t-s|) E_eps(u0)` over all snapshot
/// pairs.
pub fn bv_dissipation_check(
    curves: &[(f64, InterfaceCurve)],
    model: &EnergyModel,
    walls: &WallSpecs,
    initial_phase_field_energy: f64,
    h: f64,
) -> Result<BvDissipationReport> {
    if curves.len() < 2 {
        return Err(Error::Interface(
            "dissipation check needs at least two snapshots".into(),
        ));
    }
    let c0 = model.c0();
    let e0 = sharp_energy(&curves[0].1, model, walls);
    let mut rows = vec![DissipationRow {
        t: curves[0].0,
        sharp_energy: e0,
        area: curves[0].1.area,
        dissipation: 0.0,
        slack: 0.0,
    }];
    let mut acc = 0.0;
    let mut prev_rate: Option<f64> = None;
    for w in curves.windows(2) {
        let (t0, a) = (&w[0].0, &w[0].1);
        let (t1, b) = (&w[1].0, &w[1].1);
        let dt = t1 - t0;
        let samples = normal_velocity(a, b, dt, h)?;
        let rate: f64 = c0 * samples.iter().map(|s| s.weight * s.speed * s.speed).sum::<f64>();
        acc += 0.5 * (prev_rate.unwrap_or(rate) + rate) * dt;
        prev_rate = Some(rate);
        let e = sharp_energy(b, model, walls);
        rows.push(DissipationRow {
            t: *t1,
            sharp_energy: e,
            area: b.area,
            dissipation: acc,
            slack: e0 - e - acc,
        });
    }
    let worst_slack = rows
        .iter()
        .map(|r| r.slack)
        .fold(f64::INFINITY, f64::min)
        .min(0.0);

    let mut worst_holder: f64 = 0.0;
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let dt = (rows[j].t - rows[i].t).abs();
            if dt == 0.0 {
                continue;
            }
            let bound = (2.0 * dt).sqrt() * initial_phase_field_energy;
            worst_holder = worst_holder.max(c0 * (rows[j].area - rows[i].area).abs() / bound);
        }
    }

    Ok(BvDissipationReport {
        rows,
        worst_slack,
        worst_holder_ratio: worst_holder,
    })
}
