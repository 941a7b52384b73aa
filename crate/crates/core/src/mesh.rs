//! Conforming triangulations with newest-vertex bisection and red refinement.
//!
//! Every triangle is stored counter-clockwise with its refinement edge between
//! local vertices 0 and 1. Local edge `e` is the edge opposite local vertex `e`,
//! so the refinement edge is always local edge 2.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Sentinel for the missing neighbour of a boundary edge.
pub const NONE: usize = usize::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Domain {
    UnitSquare,
    LShape,
}

#[derive(Clone, Debug)]
pub struct Edge {
    /// Endpoints, lower vertex index first.
    pub v: [usize; 2],
    /// Triangle for which `normal` points outward.
    pub plus: usize,
    /// Second triangle, `NONE` on the boundary.
    pub minus: usize,
    pub boundary: bool,
    pub normal: Point,
    pub tangent: Point,
    pub length: f64,
}

impl Edge {
    pub fn midpoint(&self, mesh: &Mesh) -> Point {
        let a = mesh.vertices[self.v[0]];
        let b = mesh.vertices[self.v[1]];
        [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
    }

    pub fn triangles(&self) -> impl Iterator<Item = usize> {
        [self.plus, self.minus].into_iter().filter(|&t| t != NONE)
    }
}

#[derive(Clone, Debug)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
    pub edges: Vec<Edge>,
    /// Global edge index of each local edge.
    pub tri_edges: Vec<[usize; 3]>,
    pub area: Vec<f64>,
    pub diam: Vec<f64>,
    pub centroid: Vec<Point>,
    pub vertex_boundary: Vec<bool>,
    /// Triangles adjacent to each vertex.
    pub vertex_tris: Vec<Vec<usize>>,
    pub generation: usize,
    /// Triangle of the previous mesh containing each triangle; empty for an initial mesh.
    pub parent: Vec<usize>,
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn dist(a: Point, b: Point) -> f64 {
    let d = sub(a, b);
    d[0].hypot(d[1])
}

fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn mid(a: Point, b: Point) -> Point {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
}

impl Mesh {
    /// Builds all derived data from vertex coordinates and triangles whose
    /// refinement edge is local edge 2.
    pub fn from_parts(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        generation: usize,
        parent: Vec<usize>,
    ) -> Mesh {
        let nt = triangles.len();
        let mut area = Vec::with_capacity(nt);
        let mut diam = Vec::with_capacity(nt);
        let mut centroid = Vec::with_capacity(nt);
        for t in &triangles {
            let p = [vertices[t[0]], vertices[t[1]], vertices[t[2]]];
            area.push(0.5 * cross(sub(p[1], p[0]), sub(p[2], p[0])));
            diam.push(dist(p[0], p[1]).max(dist(p[1], p[2])).max(dist(p[2], p[0])));
            centroid.push([
                (p[0][0] + p[1][0] + p[2][0]) / 3.0,
                (p[0][1] + p[1][1] + p[2][1]) / 3.0,
            ]);
        }

        let mut lookup: HashMap<(usize, usize), usize> = HashMap::with_capacity(2 * nt);
        let mut edges: Vec<Edge> = Vec::with_capacity(2 * nt);
        let mut tri_edges = vec![[0usize; 3]; nt];
        for (ti, t) in triangles.iter().enumerate() {
            for e in 0..3 {
                let a = t[(e + 1) % 3];
                let b = t[(e + 2) % 3];
                let key = (a.min(b), a.max(b));
                let idx = *lookup.entry(key).or_insert_with(|| {
                    let pa = vertices[key.0];
                    let pb = vertices[key.1];
                    let len = dist(pa, pb);
                    let tau = [(pb[0] - pa[0]) / len, (pb[1] - pa[1]) / len];
                    edges.push(Edge {
                        v: [key.0, key.1],
                        plus: NONE,
                        minus: NONE,
                        boundary: true,
                        normal: [tau[1], -tau[0]],
                        tangent: tau,
                        length: len,
                    });
                    edges.len() - 1
                });
                tri_edges[ti][e] = idx;
                let edge = &mut edges[idx];
                if edge.plus == NONE {
                    edge.plus = ti;
                } else {
                    edge.minus = ti;
                    edge.boundary = false;
                }
            }
        }
        for edge in edges.iter_mut() {
            if edge.boundary {
                continue;
            }
            let m = mid(vertices[edge.v[0]], vertices[edge.v[1]]);
            let c = centroid[edge.plus];
            let out = (m[0] - c[0]) * edge.normal[0] + (m[1] - c[1]) * edge.normal[1];
            if out < 0.0 {
                std::mem::swap(&mut edge.plus, &mut edge.minus);
            }
        }

        let nv = vertices.len();
        let mut vertex_boundary = vec![false; nv];
        for edge in &edges {
            if edge.boundary {
                vertex_boundary[edge.v[0]] = true;
                vertex_boundary[edge.v[1]] = true;
            }
        }
        let mut vertex_tris = vec![Vec::new(); nv];
        for (ti, t) in triangles.iter().enumerate() {
            for &v in t {
                vertex_tris[v].push(ti);
            }
        }

        Mesh {
            vertices,
            triangles,
            edges,
            tri_edges,
            area,
            diam,
            centroid,
            vertex_boundary,
            vertex_tris,
            generation,
            parent,
        }
    }

    pub fn build_initial(domain: Domain) -> Mesh {
        match domain {
            Domain::UnitSquare => {
                let v = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
                let t = vec![[0, 2, 3], [2, 0, 1]];
                Mesh::from_parts(v, t, 0, Vec::new())
            }
            Domain::LShape => {
                let v = vec![
                    [0.0, 0.0],
                    [-1.0, 0.0],
                    [-1.0, 1.0],
                    [0.0, 1.0],
                    [-1.0, -1.0],
                    [0.0, -1.0],
                    [1.0, -1.0],
                    [1.0, 0.0],
                ];
                // each unit square is cut by its diagonal through the origin
                let squares = [(2, 1, 3), (4, 1, 5), (6, 5, 7)];
                let mut t = Vec::new();
                for (corner, p, q) in squares {
                    for r in [p, q] {
                        let tri = [0, corner, r];
                        if cross(sub(v[corner], v[0]), sub(v[r], v[0])) > 0.0 {
                            t.push(tri);
                        } else {
                            t.push([corner, 0, r]);
                        }
                    }
                }
                Mesh::from_parts(v, t, 0, Vec::new())
            }
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn refinement_edge(&self, t: usize) -> usize {
        self.tri_edges[t][2]
    }

    pub fn h_max(&self) -> f64 {
        self.diam.iter().cloned().fold(0.0, f64::max)
    }

    pub fn domain_area(&self) -> f64 {
        self.area.iter().sum()
    }

    pub fn tri_points(&self, t: usize) -> [Point; 3] {
        let v = self.triangles[t];
        [self.vertices[v[0]], self.vertices[v[1]], self.vertices[v[2]]]
    }

    pub fn is_right_isosceles(&self, t: usize, tol: f64) -> bool {
        let p = self.tri_points(t);
        let mut s = [dist(p[0], p[1]), dist(p[1], p[2]), dist(p[2], p[0])];
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        (s[1] - s[0]).abs() <= tol * s[2] && (s[2] - 2f64.sqrt() * s[0]).abs() <= tol * s[2]
    }

    /// True if every triangle is right-isosceles with its hypotenuse as refinement edge.
    pub fn all_right_isosceles(&self) -> bool {
        (0..self.num_triangles()).all(|t| {
            let p = self.tri_points(t);
            self.is_right_isosceles(t, 1e-12)
                && (dist(p[0], p[1]) - self.diam[t]).abs() <= 1e-12 * self.diam[t]
        })
    }

    /// 𝔥(E) = 3|E| / (h₊⁻⁴|T₊| + h₋⁻⁴|T₋|) for an interior edge.
    pub fn frak_h(&self, e: usize) -> Result<f64> {
        let edge = self.edges.get(e).ok_or(Error::InvalidEdge(e))?;
        if edge.boundary {
            return Err(Error::BoundaryEdge(e));
        }
        let w = |t: usize| self.area[t] / self.diam[t].powi(4);
        Ok(3.0 * edge.length / (w(edge.plus) + w(edge.minus)))
    }

    /// Newest-vertex bisection of all marked edges plus the closure.
    pub fn refine_nvb(&self, marked_edges: &[usize]) -> Result<Mesh> {
        if marked_edges.is_empty() {
            return Err(Error::EmptyMarking);
        }
        let mut marked = vec![false; self.num_edges()];
        for &e in marked_edges {
            if e >= self.num_edges() {
                return Err(Error::InvalidEdge(e));
            }
            marked[e] = true;
        }
        let bound = 10 * self.num_triangles();
        let mut passes = 0;
        loop {
            let mut changed = false;
            for te in &self.tri_edges {
                if !marked[te[2]] && (marked[te[0]] || marked[te[1]]) {
                    marked[te[2]] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
            passes += 1;
            if passes > bound {
                return Err(Error::ClosureDiverged(passes));
            }
        }

        let mut vertices = self.vertices.clone();
        let mut midpoint = vec![NONE; self.num_edges()];
        for (e, edge) in self.edges.iter().enumerate() {
            if marked[e] {
                midpoint[e] = vertices.len();
                vertices.push(mid(self.vertices[edge.v[0]], self.vertices[edge.v[1]]));
            }
        }

        let mut triangles = Vec::with_capacity(self.num_triangles() * 2);
        let mut parent = Vec::with_capacity(self.num_triangles() * 2);
        for (t, tri) in self.triangles.iter().enumerate() {
            let te = self.tri_edges[t];
            let [n1, n2, n3] = *tri;
            let m = midpoint[te[2]];
            if m == NONE {
                triangles.push(*tri);
                parent.push(t);
                continue;
            }
            // left child has refinement edge n3-n1 (parent edge 1)
            let m1 = midpoint[te[1]];
            if m1 == NONE {
                triangles.push([n3, n1, m]);
                parent.push(t);
            } else {
                triangles.push([m, n3, m1]);
                triangles.push([n1, m, m1]);
                parent.push(t);
                parent.push(t);
            }
            // right child has refinement edge n2-n3 (parent edge 0)
            let m0 = midpoint[te[0]];
            if m0 == NONE {
                triangles.push([n2, n3, m]);
                parent.push(t);
            } else {
                triangles.push([m, n2, m0]);
                triangles.push([n3, m, m0]);
                parent.push(t);
                parent.push(t);
            }
        }
        Ok(Mesh::from_parts(vertices, triangles, self.generation + 1, parent))
    }

    /// Uniform red refinement; each child keeps a refinement edge parallel to its parent's.
    pub fn refine_red(&self) -> Mesh {
        let mut vertices = self.vertices.clone();
        let mut midpoint = Vec::with_capacity(self.num_edges());
        for edge in &self.edges {
            midpoint.push(vertices.len());
            vertices.push(mid(self.vertices[edge.v[0]], self.vertices[edge.v[1]]));
        }
        let mut triangles = Vec::with_capacity(4 * self.num_triangles());
        let mut parent = Vec::with_capacity(4 * self.num_triangles());
        for (t, tri) in self.triangles.iter().enumerate() {
            let te = self.tri_edges[t];
            let [v0, v1, v2] = *tri;
            let m12 = midpoint[te[0]];
            let m20 = midpoint[te[1]];
            let m01 = midpoint[te[2]];
            triangles.push([v0, m01, m20]);
            triangles.push([m01, v1, m12]);
            triangles.push([m20, m12, v2]);
            triangles.push([m12, m20, m01]);
            parent.extend_from_slice(&[t, t, t, t]);
        }
        Mesh::from_parts(vertices, triangles, self.generation + 1, parent)
    }

    /// Plain-text export: `v x y` lines followed by `t i j k r` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for v in &self.vertices {
            let _ = writeln!(s, "v {:.17e} {:.17e}", v[0], v[1]);
        }
        for t in &self.triangles {
            let _ = writeln!(s, "t {} {} {} 2", t[0], t[1], t[2]);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Mesh> {
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: &str| Error::Parse { line: i + 1, msg: msg.to_string() };
            let mut it = line.split_whitespace();
            match it.next() {
                Some("v") => {
                    let x: f64 = it.next().and_then(|s| s.parse().ok()).ok_or_else(|| err("bad x"))?;
                    let y: f64 = it.next().and_then(|s| s.parse().ok()).ok_or_else(|| err("bad y"))?;
                    vertices.push([x, y]);
                }
                Some("t") => {
                    let mut f = [0usize; 4];
                    for slot in f.iter_mut() {
                        *slot = it.next().and_then(|s| s.parse().ok()).ok_or_else(|| err("bad index"))?;
                    }
                    if f[3] > 2 {
                        return Err(err("refinement edge index must be 0, 1 or 2"));
                    }
                    // rotate so that the refinement edge becomes local edge 2
                    let r = f[3];
                    let tri = [f[(r + 1) % 3], f[(r + 2) % 3], f[r]];
                    triangles.push(tri);
                }
                _ => return Err(err("expected 'v' or 't'")),
            }
        }
        for (i, t) in triangles.iter_mut().enumerate() {
            if t.iter().any(|&k| k >= vertices.len()) {
                return Err(Error::Parse { line: i + 1, msg: "vertex index out of range".into() });
            }
            let a = cross(sub(vertices[t[1]], vertices[t[0]]), sub(vertices[t[2]], vertices[t[0]]));
            if a < 0.0 {
                // reflect orientation while keeping the refinement edge
                *t = [t[1], t[0], t[2]];
            }
        }
        Ok(Mesh::from_parts(vertices, triangles, 0, Vec::new()))
    }
}

/// Geometric constants consumed by the explicit bounds.
#[derive(Clone, Copy, Debug)]
pub struct MeshConstants {
    pub h_max: f64,
    pub c_p: f64,
    pub c_tr1: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub area: f64,
    pub right_isosceles: bool,
}

impl MeshConstants {
    pub fn new(mesh: &Mesh) -> MeshConstants {
        let h_max = mesh.h_max();
        let area = mesh.domain_area();
        if mesh.all_right_isosceles() {
            MeshConstants {
                h_max,
                c_p: 1.0 / (2f64.sqrt() * PI),
                c_tr1: 5f64.sqrt() / (3.0 * 2f64.sqrt()),
                kappa1: 0.1653,
                kappa2: 0.0451,
                area,
                right_isosceles: true,
            }
        } else {
            let mut c_tr1: f64 = 0.0;
            for t in 0..mesh.num_triangles() {
                let c = mesh.centroid[t];
                for p in mesh.tri_points(t) {
                    c_tr1 = c_tr1.max(dist(p, c) / mesh.diam[t]);
                }
            }
            MeshConstants {
                h_max,
                c_p: 1.0 / PI,
                c_tr1,
                kappa1: 0.2983,
                kappa2: 0.2359,
                area,
                right_isosceles: false,
            }
        }
    }
}
