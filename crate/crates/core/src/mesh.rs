//! Triangulated flat cone surfaces.
//!
//! A `ConeMesh` is a closed oriented surface assembled from per-face flat
//! charts glued edge to edge by rigid transitions whose rotation part is a
//! multiple of pi (half-translation gluings). All background curvature sits
//! at cone vertices, as angle defects; every triangle is honestly euclidean
//! in its chart.
//!
//! Meshes are built from a polygon with side identifications, midpoint
//! subdivision and an optional radial grading toward cone/marked vertices
//! (the conformal factor of the solved metrics has log singularities there).

use crate::error::{Error, Result};
use crate::scalar::{real, Real};
use crate::sparse::{reverse_cuthill_mckee, SparseOperator};

#[derive(Clone, Debug)]
pub struct Face<T> {
    pub v: [usize; 3],
    /// Chart positions of the three corners; edge `e` joins corners `e` and
    /// `e+1 (mod 3)`.
    pub chart: [[T; 2]; 3],
}

/// Rigid transition `p -> (-1)^rot * p + shift` from chart `a` to chart `b`,
/// matching edge `edge_a` of `face_a` with `edge_b` of `face_b` with reversed
/// orientation. Interior shared edges carry the identity.
#[derive(Clone, Debug)]
pub struct Gluing<T> {
    pub face_a: usize,
    pub edge_a: usize,
    pub face_b: usize,
    pub edge_b: usize,
    pub rot_half_turns: i32,
    pub shift: [T; 2],
}

impl<T: Real> Gluing<T> {
    pub fn apply(&self, p: [T; 2]) -> [T; 2] {
        let s = if self.rot_half_turns.rem_euclid(2) == 0 {
            T::one()
        } else {
            -T::one()
        };
        [s * p[0] + self.shift[0], s * p[1] + self.shift[1]]
    }
}

#[derive(Clone, Debug)]
pub struct MarkedVertex<T> {
    pub vertex: usize,
    /// Target cone angle, in (0, 2*pi) and never exactly 2*pi.
    pub theta: T,
}

#[derive(Clone, Debug)]
pub struct ConeMesh<T> {
    pub genus: usize,
    pub num_vertices: usize,
    pub faces: Vec<Face<T>>,
    pub gluings: Vec<Gluing<T>>,
    pub marked: Vec<MarkedVertex<T>>,
    partner: Vec<[(usize, usize); 3]>,
    face_area: Vec<T>,
    vertex_mass: Vec<T>,
    vertex_defect: Vec<T>,
}

/// Polygon-gluing description of a closed half-translation surface: a simple
/// CCW polygon, side pairings, and marked points with target cone angles.
#[derive(Clone, Debug)]
pub struct PolygonGluing<T> {
    pub corners: Vec<[T; 2]>,
    pub pairings: Vec<SidePairing>,
    pub marks: Vec<([T; 2], T)>,
}

/// Side `i` runs from corner `i` to corner `i+1 (mod k)`; the pairing
/// identifies `side_a` with `side_b` reversed, rotating by `rot_half_turns`
/// half turns.
#[derive(Clone, Copy, Debug)]
pub struct SidePairing {
    pub side_a: usize,
    pub side_b: usize,
    pub rot_half_turns: i32,
}

/// Snap report for a requested marked point.
#[derive(Clone, Debug)]
pub struct MarkSnap<T> {
    pub requested: [T; 2],
    pub snapped: [T; 2],
    pub distance: T,
    pub vertex: usize,
}

// ---------------------------------------------------------------------------
// construction

struct WorkMesh<T> {
    num_vertices: usize,
    faces: Vec<[usize; 3]>,
    charts: Vec<[[T; 2]; 3]>,
    gluings: Vec<Gluing<T>>,
}

fn sub2<T: Real>(a: [T; 2], b: [T; 2]) -> [T; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn dist2<T: Real>(a: [T; 2], b: [T; 2]) -> T {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn cross2<T: Real>(a: [T; 2], b: [T; 2]) -> T {
    a[0] * b[1] - a[1] * b[0]
}

fn triangle_area<T: Real>(p: &[[T; 2]; 3]) -> T {
    cross2(sub2(p[1], p[0]), sub2(p[2], p[0])) * real::<T>(0.5)
}

/// Ear-clipping triangulation of a simple CCW polygon. Collinear corners are
/// allowed; zero-area ears are skipped, never emitted.
fn triangulate_polygon<T: Real>(pts: &[[T; 2]]) -> Result<Vec<[usize; 3]>> {
    let k = pts.len();
    if k < 3 {
        return Err(Error::Mesh("polygon needs at least 3 corners".into()));
    }
    let total: T = (0..k)
        .map(|i| cross2(pts[i], pts[(i + 1) % k]))
        .sum::<T>()
        * real::<T>(0.5);
    if total <= T::zero() {
        return Err(Error::Mesh("polygon must be simple and CCW".into()));
    }
    let scale = total.sqrt();
    let eps = real::<T>(1e-12) * scale * scale;

    let mut ring: Vec<usize> = (0..k).collect();
    let mut tris = Vec::with_capacity(k - 2);
    let mut guard = 0usize;
    while ring.len() > 3 {
        guard += 1;
        if guard > k * k + 16 {
            return Err(Error::Mesh("polygon triangulation failed (not simple?)".into()));
        }
        let m = ring.len();
        let mut clipped = false;
        for idx in 0..m {
            let ia = ring[(idx + m - 1) % m];
            let ib = ring[idx];
            let ic = ring[(idx + 1) % m];
            let area = triangle_area(&[pts[ia], pts[ib], pts[ic]]);
            if area <= eps {
                continue;
            }
            // no other ring vertex strictly inside
            let mut ok = true;
            for &other in &ring {
                if other == ia || other == ib || other == ic {
                    continue;
                }
                let p = pts[other];
                let s0 = cross2(sub2(pts[ib], pts[ia]), sub2(p, pts[ia]));
                let s1 = cross2(sub2(pts[ic], pts[ib]), sub2(p, pts[ib]));
                let s2 = cross2(sub2(pts[ia], pts[ic]), sub2(p, pts[ic]));
                if s0 > eps && s1 > eps && s2 > eps {
                    ok = false;
                    break;
                }
            }
            if ok {
                tris.push([ia, ib, ic]);
                ring.remove(idx);
                clipped = true;
                break;
            }
        }
        if !clipped {
            return Err(Error::Mesh("polygon triangulation found no ear".into()));
        }
    }
    let area = triangle_area(&[pts[ring[0]], pts[ring[1]], pts[ring[2]]]);
    if area <= eps {
        return Err(Error::Mesh("degenerate final triangle in polygon".into()));
    }
    tris.push([ring[0], ring[1], ring[2]]);
    Ok(tris)
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

fn base_mesh<T: Real>(gluing: &PolygonGluing<T>) -> Result<WorkMesh<T>> {
    let pts = &gluing.corners;
    let k = pts.len();

    // every side in exactly one pairing
    let mut used = vec![false; k];
    for p in &gluing.pairings {
        for s in [p.side_a, p.side_b] {
            if s >= k {
                return Err(Error::Mesh(format!("pairing references side {s} of a {k}-gon")));
            }
            if used[s] {
                return Err(Error::Mesh(format!("side {s} glued more than once")));
            }
            used[s] = true;
        }
        if p.side_a == p.side_b {
            return Err(Error::Mesh("side glued to itself".into()));
        }
    }
    if used.iter().any(|&u| !u) {
        return Err(Error::Mesh("not every polygon side is glued".into()));
    }

    // corner identifications from side pairings, and transition data
    let mut uf = UnionFind::new(k);
    let scale = dist2(pts[0], pts[1]).max(T::one());
    let tol = real::<T>(1e-9) * scale;
    let mut side_transition: Vec<Option<(usize, i32, [T; 2])>> = vec![None; k];
    for p in &gluing.pairings {
        let (a0, a1) = (p.side_a, (p.side_a + 1) % k);
        let (b0, b1) = (p.side_b, (p.side_b + 1) % k);
        let sg = if p.rot_half_turns.rem_euclid(2) == 0 {
            T::one()
        } else {
            -T::one()
        };
        // T(P_a0) = P_b1, T(P_a1) = P_b0
        let shift = sub2(pts[b1], [sg * pts[a0][0], sg * pts[a0][1]]);
        let img = [sg * pts[a1][0] + shift[0], sg * pts[a1][1] + shift[1]];
        if dist2(img, pts[b0]) > tol {
            return Err(Error::Mesh(format!(
                "sides {} and {} are not compatible under a half-turn-multiple isometry",
                p.side_a, p.side_b
            )));
        }
        side_transition[p.side_a] = Some((p.side_b, p.rot_half_turns, shift));
        uf.union(a0, b1);
        uf.union(a1, b0);
    }

    let tris = triangulate_polygon(pts)?;

    // vertex classes
    let mut class_of = vec![usize::MAX; k];
    let mut next = 0usize;
    for c in 0..k {
        let r = uf.find(c);
        if class_of[r] == usize::MAX {
            class_of[r] = next;
            next += 1;
        }
        class_of[c] = class_of[r];
    }

    let mut faces = Vec::with_capacity(tris.len());
    let mut charts = Vec::with_capacity(tris.len());
    for t in &tris {
        faces.push([class_of[t[0]], class_of[t[1]], class_of[t[2]]]);
        charts.push([pts[t[0]], pts[t[1]], pts[t[2]]]);
    }

    // edges: interior ones appear twice keyed by original corner pair, side
    // edges once and must coincide with a polygon side
    use std::collections::HashMap;
    let mut seen: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
    let mut gluings: Vec<Gluing<T>> = Vec::new();
    let mut side_slot: Vec<Option<(usize, usize)>> = vec![None; k];
    for (f, t) in tris.iter().enumerate() {
        for e in 0..3 {
            let (i, j) = (t[e], t[(e + 1) % 3]);
            let key = (i.min(j), i.max(j));
            if let Some(&(f0, e0)) = seen.get(&key) {
                gluings.push(Gluing {
                    face_a: f0,
                    edge_a: e0,
                    face_b: f,
                    edge_b: e,
                    rot_half_turns: 0,
                    shift: [T::zero(), T::zero()],
                });
                seen.remove(&key);
            } else if j == (i + 1) % k && side_slot[i].is_none() && key == (i.min(j), i.max(j)) && (j == i + 1 || (i == k - 1 && j == 0)) {
                // boundary edge on side i (faces are CCW so boundary edges
                // follow the polygon orientation)
                side_slot[i] = Some((f, e));
            } else {
                seen.insert(key, (f, e));
            }
        }
    }
    if !seen.is_empty() {
        return Err(Error::Mesh("non-manifold gluing: unmatched interior edge".into()));
    }
    for s in 0..k {
        if let Some((sb, rot, shift)) = side_transition[s] {
            let (fa, ea) = side_slot[s]
                .ok_or_else(|| Error::Mesh(format!("no boundary edge found on side {s}")))?;
            let (fb, eb) = side_slot[sb]
                .ok_or_else(|| Error::Mesh(format!("no boundary edge found on side {sb}")))?;
            gluings.push(Gluing {
                face_a: fa,
                edge_a: ea,
                face_b: fb,
                edge_b: eb,
                rot_half_turns: rot,
                shift,
            });
        }
    }

    Ok(WorkMesh {
        num_vertices: next,
        faces,
        charts,
        gluings,
    })
}

fn subdivide<T: Real>(w: &WorkMesh<T>) -> WorkMesh<T> {
    let nf = w.faces.len();
    // partner lookup and midpoint ids, one per gluing
    let mut glue_of = vec![[usize::MAX; 3]; nf];
    for (gi, g) in w.gluings.iter().enumerate() {
        glue_of[g.face_a][g.edge_a] = gi;
        glue_of[g.face_b][g.edge_b] = gi;
    }
    let mid_id: Vec<usize> = (0..w.gluings.len()).map(|i| w.num_vertices + i).collect();

    let half = real::<T>(0.5);
    let child = |f: usize, c: usize| 4 * f + c; // c in 0..3 corner children, 3 = center
    let mut faces = Vec::with_capacity(4 * nf);
    let mut charts = Vec::with_capacity(4 * nf);
    let mut gluings: Vec<Gluing<T>> = Vec::new();

    for f in 0..nf {
        let v = w.faces[f];
        let p = w.charts[f];
        let m: [usize; 3] = [
            mid_id[glue_of[f][0]],
            mid_id[glue_of[f][1]],
            mid_id[glue_of[f][2]],
        ];
        let mp: [[T; 2]; 3] = [
            [(p[0][0] + p[1][0]) * half, (p[0][1] + p[1][1]) * half],
            [(p[1][0] + p[2][0]) * half, (p[1][1] + p[2][1]) * half],
            [(p[2][0] + p[0][0]) * half, (p[2][1] + p[0][1]) * half],
        ];
        for c in 0..3 {
            faces.push([v[c], m[c], m[(c + 2) % 3]]);
            charts.push([p[c], mp[c], mp[(c + 2) % 3]]);
        }
        faces.push([m[0], m[1], m[2]]);
        charts.push([mp[0], mp[1], mp[2]]);
        // center child against corner children (chart-shared, identity)
        for c in 0..3 {
            gluings.push(Gluing {
                face_a: child(f, 3),
                edge_a: c,
                face_b: child(f, (c + 1) % 3),
                edge_b: 1,
                rot_half_turns: 0,
                shift: [T::zero(), T::zero()],
            });
        }
    }
    // each parent gluing spawns the two half-edge gluings
    for g in &w.gluings {
        let (fa, ea, fb, eb) = (g.face_a, g.edge_a, g.face_b, g.edge_b);
        gluings.push(Gluing {
            face_a: child(fa, ea),
            edge_a: 0,
            face_b: child(fb, (eb + 1) % 3),
            edge_b: 2,
            rot_half_turns: g.rot_half_turns,
            shift: g.shift,
        });
        gluings.push(Gluing {
            face_a: child(fa, (ea + 1) % 3),
            edge_a: 2,
            face_b: child(fb, eb),
            edge_b: 0,
            rot_half_turns: g.rot_half_turns,
            shift: g.shift,
        });
    }

    WorkMesh {
        num_vertices: w.num_vertices + w.gluings.len(),
        faces,
        charts,
        gluings,
    }
}

/// Corner angles of a chart triangle, one per corner.
fn corner_angles<T: Real>(p: &[[T; 2]; 3]) -> [T; 3] {
    let mut out = [T::zero(); 3];
    for c in 0..3 {
        let a = sub2(p[(c + 1) % 3], p[c]);
        let b = sub2(p[(c + 2) % 3], p[c]);
        let dot = a[0] * b[0] + a[1] * b[1];
        let crs = cross2(a, b);
        out[c] = crs.atan2(dot).abs();
    }
    out
}

fn apply_grading<T: Real>(
    w: &mut WorkMesh<T>,
    centers: &[[T; 2]],
    on_boundary: &[bool],
    boundary_dist: &[T],
    min_side: T,
    grading: T,
) -> Result<()> {
    if grading <= T::one() || centers.is_empty() {
        if grading < T::one() {
            return Err(Error::InvalidArgument("cone_grading must be >= 1".into()));
        }
        return Ok(());
    }
    let gamma = T::one() + grading.ln() / real::<T>(2.0).ln();
    let mut radius = real::<T>(0.45) * min_side;
    for i in 0..centers.len() {
        for j in (i + 1)..centers.len() {
            radius = radius.min(real::<T>(0.45) * dist2(centers[i], centers[j]));
        }
        if !on_boundary[i] {
            radius = radius.min(real::<T>(0.9) * boundary_dist[i]);
        }
    }
    if radius <= T::zero() {
        return Err(Error::InvalidArgument(
            "grading centers too close together for a positive grading radius".into(),
        ));
    }
    for chart in w.charts.iter_mut() {
        for p in chart.iter_mut() {
            for c in centers {
                let d = dist2(*p, *c);
                if d < radius && d > T::zero() {
                    let f = (d / radius).powf(gamma - T::one());
                    p[0] = c[0] + (p[0] - c[0]) * f;
                    p[1] = c[1] + (p[1] - c[1]) * f;
                    break;
                }
            }
        }
    }
    Ok(())
}

/// Build a cone mesh from a polygon gluing at a given refinement level.
///
/// Refinement quadruples the face count per level via midpoint subdivision.
/// `cone_grading > 1` concentrates vertices geometrically toward cone and
/// marked vertices (ratio per level = `cone_grading`).
pub fn build_mesh<T: Real>(
    gluing: &PolygonGluing<T>,
    refinement: usize,
    cone_grading: T,
) -> Result<ConeMesh<T>> {
    Ok(build_mesh_with_snaps(gluing, refinement, cone_grading)?.0)
}

/// As `build_mesh`, also reporting where each requested mark was snapped.
pub fn build_mesh_with_snaps<T: Real>(
    gluing: &PolygonGluing<T>,
    refinement: usize,
    cone_grading: T,
) -> Result<(ConeMesh<T>, Vec<MarkSnap<T>>)> {
    let mut w = base_mesh(gluing)?;
    for _ in 0..refinement {
        w = subdivide(&w);
    }

    // snap marks to nearest chart corner
    let mut snaps: Vec<MarkSnap<T>> = Vec::new();
    let mut marked: Vec<MarkedVertex<T>> = Vec::new();
    for &(pos, theta) in &gluing.marks {
        if theta <= T::zero() || theta >= real::<T>(2.0) * T::PI() {
            return Err(Error::InvalidArgument(format!(
                "marked cone angle must lie strictly inside (0, 2*pi), got {theta}"
            )));
        }
        let mut best = (T::max_value(), 0usize, [T::zero(); 2]);
        for (f, chart) in w.charts.iter().enumerate() {
            for c in 0..3 {
                let d = dist2(chart[c], pos);
                if d < best.0 {
                    best = (d, w.faces[f][c], chart[c]);
                }
            }
        }
        if marked.iter().any(|m| m.vertex == best.1) {
            return Err(Error::InvalidArgument(
                "two marked points snap to the same vertex; refine or separate them".into(),
            ));
        }
        snaps.push(MarkSnap {
            requested: pos,
            snapped: best.2,
            distance: best.0,
            vertex: best.1,
        });
        marked.push(MarkedVertex { vertex: best.1, theta });
    }

    // defects on the ungraded mesh locate the cone classes
    let defect = {
        let mut angle = vec![T::zero(); w.num_vertices];
        for (f, chart) in w.charts.iter().enumerate() {
            let ang = corner_angles(chart);
            for c in 0..3 {
                angle[w.faces[f][c]] += ang[c];
            }
        }
        let two_pi = real::<T>(2.0) * T::PI();
        angle.iter().map(|&a| two_pi - a).collect::<Vec<T>>()
    };

    // grading centers: every chart instance of cone and marked classes
    let mut is_center_class = vec![false; w.num_vertices];
    for (v, &d) in defect.iter().enumerate() {
        if d.abs() > real::<T>(1e-9) {
            is_center_class[v] = true;
        }
    }
    for m in &marked {
        is_center_class[m.vertex] = true;
    }
    let mut centers: Vec<[T; 2]> = Vec::new();
    for (f, chart) in w.charts.iter().enumerate() {
        for c in 0..3 {
            if is_center_class[w.faces[f][c]] {
                let p = chart[c];
                if !centers.iter().any(|q| dist2(*q, p) < real::<T>(1e-9)) {
                    centers.push(p);
                }
            }
        }
    }
    let k = gluing.corners.len();
    let min_side = (0..k)
        .map(|i| dist2(gluing.corners[i], gluing.corners[(i + 1) % k]))
        .fold(T::max_value(), |m, d| m.min(d));
    let (on_boundary, boundary_dist): (Vec<bool>, Vec<T>) = centers
        .iter()
        .map(|&p| {
            let mut dmin = T::max_value();
            for i in 0..k {
                let a = gluing.corners[i];
                let b = gluing.corners[(i + 1) % k];
                let ab = sub2(b, a);
                let len2 = ab[0] * ab[0] + ab[1] * ab[1];
                let t = ((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2;
                let t = t.max(T::zero()).min(T::one());
                let proj = [a[0] + t * ab[0], a[1] + t * ab[1]];
                dmin = dmin.min(dist2(p, proj));
            }
            (dmin < real::<T>(1e-9) * min_side, dmin)
        })
        .unzip();
    apply_grading(&mut w, &centers, &on_boundary, &boundary_dist, min_side, cone_grading)?;

    finalize(w, marked, &mut snaps)
}

fn finalize<T: Real>(
    w: WorkMesh<T>,
    marked: Vec<MarkedVertex<T>>,
    snaps: &mut [MarkSnap<T>],
) -> Result<(ConeMesh<T>, Vec<MarkSnap<T>>)> {
    // RCM relabel
    let n = w.num_vertices;
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for f in &w.faces {
        for e in 0..3 {
            let (i, j) = (f[e], f[(e + 1) % 3]);
            if !adj[i].contains(&j) {
                adj[i].push(j);
            }
            if !adj[j].contains(&i) {
                adj[j].push(i);
            }
        }
    }
    let perm = reverse_cuthill_mckee(&adj);
    let mut inv = vec![0usize; n];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }

    let faces: Vec<Face<T>> = w
        .faces
        .iter()
        .zip(&w.charts)
        .map(|(f, c)| Face {
            v: [inv[f[0]], inv[f[1]], inv[f[2]]],
            chart: *c,
        })
        .collect();
    let marked: Vec<MarkedVertex<T>> = marked
        .into_iter()
        .map(|m| MarkedVertex {
            vertex: inv[m.vertex],
            theta: m.theta,
        })
        .collect();
    for s in snaps.iter_mut() {
        s.vertex = inv[s.vertex];
    }

    let mut mesh = ConeMesh {
        genus: 0,
        num_vertices: n,
        faces,
        gluings: w.gluings,
        marked,
        partner: Vec::new(),
        face_area: Vec::new(),
        vertex_mass: Vec::new(),
        vertex_defect: Vec::new(),
    };
    mesh.rebuild_caches()?;
    Ok((mesh, snaps.to_vec()))
}

// ---------------------------------------------------------------------------
// queries and invariants

impl<T: Real> ConeMesh<T> {
    /// Assemble a mesh from loaded parts, rebuilding caches and checking
    /// every invariant.
    pub fn from_parts(
        faces: Vec<Face<T>>,
        gluings: Vec<Gluing<T>>,
        marked: Vec<MarkedVertex<T>>,
    ) -> Result<Self> {
        let num_vertices = faces
            .iter()
            .flat_map(|f| f.v.iter().copied())
            .max()
            .map(|m| m + 1)
            .unwrap_or(0);
        let mut mesh = ConeMesh {
            genus: 0,
            num_vertices,
            faces,
            gluings,
            marked,
            partner: Vec::new(),
            face_area: Vec::new(),
            vertex_mass: Vec::new(),
            vertex_defect: Vec::new(),
        };
        mesh.rebuild_caches()?;
        Ok(mesh)
    }

    /// Recompute caches and check every structural invariant. Called by the
    /// builder and when loading a mesh from disk.
    pub fn rebuild_caches(&mut self) -> Result<()> {
        let nf = self.faces.len();
        let nv = self.num_vertices;

        self.partner = vec![[(usize::MAX, usize::MAX); 3]; nf];
        for g in &self.gluings {
            for (f, e, pf, pe) in [
                (g.face_a, g.edge_a, g.face_b, g.edge_b),
                (g.face_b, g.edge_b, g.face_a, g.edge_a),
            ] {
                if f >= nf || e >= 3 {
                    return Err(Error::Mesh("gluing references missing face edge".into()));
                }
                if self.partner[f][e] != (usize::MAX, usize::MAX) {
                    return Err(Error::Mesh(format!(
                        "non-manifold gluing: edge ({f},{e}) glued twice"
                    )));
                }
                self.partner[f][e] = (pf, pe);
            }
        }
        for f in 0..nf {
            for e in 0..3 {
                if self.partner[f][e] == (usize::MAX, usize::MAX) {
                    return Err(Error::Mesh(format!(
                        "non-manifold gluing: edge ({f},{e}) unglued"
                    )));
                }
            }
        }

        self.face_area = Vec::with_capacity(nf);
        let mut scale = T::zero();
        for face in &self.faces {
            let a = triangle_area(&face.chart);
            if !(a > T::zero()) {
                return Err(Error::Mesh("non-positive triangle area".into()));
            }
            self.face_area.push(a);
            scale = scale.max(a.sqrt());
        }

        // glued edges: matching lengths and orientation-reversing transitions
        let tol = real::<T>(1e-12);
        for g in &self.gluings {
            let pa = &self.faces[g.face_a].chart;
            let pb = &self.faces[g.face_b].chart;
            let (a0, a1) = (pa[g.edge_a], pa[(g.edge_a + 1) % 3]);
            let (b0, b1) = (pb[g.edge_b], pb[(g.edge_b + 1) % 3]);
            let (la, lb) = (dist2(a0, a1), dist2(b0, b1));
            if (la - lb).abs() > tol * (T::one() + la) {
                return Err(Error::Mesh(format!(
                    "glued edge lengths disagree: {la} vs {lb}"
                )));
            }
            if dist2(g.apply(a0), b1) > real::<T>(1e-9) * (T::one() + la)
                || dist2(g.apply(a1), b0) > real::<T>(1e-9) * (T::one() + la)
            {
                return Err(Error::Mesh(
                    "orientation mismatch: transition does not reverse the glued edge".into(),
                ));
            }
        }

        // vertex ids in range, vertex angle sums -> defects
        let mut angle = vec![T::zero(); nv];
        let mut touched = vec![false; nv];
        for (f, face) in self.faces.iter().enumerate() {
            let ang = corner_angles(&face.chart);
            for c in 0..3 {
                let v = face.v[c];
                if v >= nv {
                    return Err(Error::Mesh(format!("face {f} references vertex {v} >= {nv}")));
                }
                angle[v] += ang[c];
                touched[v] = true;
            }
        }
        if touched.iter().any(|&t| !t) {
            return Err(Error::Mesh("isolated vertex".into()));
        }
        let two_pi = real::<T>(2.0) * T::PI();
        self.vertex_defect = angle.iter().map(|&a| two_pi - a).collect();

        // Euler characteristic fixes the genus
        let euler = nv as i64 - self.gluings.len() as i64 + nf as i64;
        if euler > 0 || euler % 2 != 0 {
            return Err(Error::Mesh(format!(
                "Euler characteristic {euler} is not that of a closed genus >= 1 surface"
            )));
        }
        self.genus = ((2 - euler) / 2) as usize;

        let defect_sum: T = self.vertex_defect.iter().copied().sum();
        let target = two_pi * real::<T>(2.0 - 2.0 * self.genus as f64);
        if (defect_sum - target).abs() > real::<T>(1e-9) * real::<T>(1.0 + self.genus as f64) {
            return Err(Error::Mesh(format!(
                "angle defects sum to {defect_sum}, Gauss-Bonnet needs {target}"
            )));
        }

        self.vertex_mass = vec![T::zero(); nv];
        let third = real::<T>(1.0 / 3.0);
        for (f, face) in self.faces.iter().enumerate() {
            for c in 0..3 {
                self.vertex_mass[face.v[c]] += self.face_area[f] * third;
            }
        }

        for m in &self.marked {
            if m.vertex >= nv {
                return Err(Error::Mesh("marked vertex out of range".into()));
            }
            if m.theta <= T::zero() || m.theta >= two_pi {
                return Err(Error::InvalidArgument(
                    "marked cone angle must lie strictly inside (0, 2*pi)".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn num_edges(&self) -> usize {
        self.gluings.len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices as i64 - self.gluings.len() as i64 + self.faces.len() as i64
    }

    pub fn face_areas(&self) -> &[T] {
        &self.face_area
    }

    /// Lumped vertex areas `A_v` (one third of incident triangle areas).
    pub fn vertex_mass(&self) -> &[T] {
        &self.vertex_mass
    }

    pub fn partner_of(&self, face: usize, edge: usize) -> (usize, usize) {
        self.partner[face][edge]
    }

    pub fn marked_theta(&self, vertex: usize) -> Option<T> {
        self.marked.iter().find(|m| m.vertex == vertex).map(|m| m.theta)
    }

    pub fn min_edge_length(&self) -> T {
        let mut m = T::max_value();
        for face in &self.faces {
            for e in 0..3 {
                m = m.min(dist2(face.chart[e], face.chart[(e + 1) % 3]));
            }
        }
        m
    }

    pub fn total_area(&self) -> T {
        self.face_area.iter().copied().sum()
    }

    /// Barycenter of a face in its chart.
    pub fn face_barycenter(&self, f: usize) -> [T; 2] {
        let p = &self.faces[f].chart;
        let third = real::<T>(1.0 / 3.0);
        [
            (p[0][0] + p[1][0] + p[2][0]) * third,
            (p[0][1] + p[1][1] + p[2][1]) * third,
        ]
    }

    /// Chart midpoint of edge `e` of face `f`.
    pub fn edge_midpoint(&self, f: usize, e: usize) -> [T; 2] {
        let p = &self.faces[f].chart;
        let half = real::<T>(0.5);
        [
            (p[e][0] + p[(e + 1) % 3][0]) * half,
            (p[e][1] + p[(e + 1) % 3][1]) * half,
        ]
    }

    /// Corner angle of face `f` at local corner `c`.
    pub fn corner_angle(&self, f: usize, c: usize) -> T {
        corner_angles(&self.faces[f].chart)[c]
    }

    /// Gluing record for slot (f, e), if this slot is the `a` or `b` side.
    pub fn gluing_at(&self, f: usize, e: usize) -> &Gluing<T> {
        self.gluings
            .iter()
            .find(|g| (g.face_a == f && g.edge_a == e) || (g.face_b == f && g.edge_b == e))
            .expect("every slot is glued")
    }
}

/// Per-vertex angle defects of the background flat metric.
pub fn angle_defects<T: Real>(mesh: &ConeMesh<T>) -> Vec<T> {
    mesh.vertex_defect.clone()
}

/// Cotangent-weight stiffness matrix of the background metric, assembled
/// symmetrically with exact zero row sums. `u L u` approximates the Dirichlet
/// energy of the piecewise-linear interpolant.
pub fn cotan_laplacian<T: Real>(mesh: &ConeMesh<T>) -> SparseOperator<T> {
    let half = real::<T>(0.5);
    let mut triplets: Vec<(usize, usize, T)> = Vec::with_capacity(mesh.faces.len() * 12);
    for face in &mesh.faces {
        let p = &face.chart;
        for c in 0..3 {
            // cotangent at corner c weights the opposite edge
            let a = sub2(p[(c + 1) % 3], p[c]);
            let b = sub2(p[(c + 2) % 3], p[c]);
            let dot = a[0] * b[0] + a[1] * b[1];
            let crs = cross2(a, b).abs();
            let w = half * dot / crs;
            let (i, j) = (face.v[(c + 1) % 3], face.v[(c + 2) % 3]);
            triplets.push((i, j, -w));
            triplets.push((j, i, -w));
            triplets.push((i, i, w));
            triplets.push((j, j, w));
        }
    }
    SparseOperator::from_triplets(mesh.num_vertices, &triplets)
}

/// Lumped-mass quadrature of a vertex field.
pub fn integrate<T: Real>(mesh: &ConeMesh<T>, f: &[T]) -> T {
    assert_eq!(f.len(), mesh.num_vertices, "field length must match mesh");
    f.iter().zip(&mesh.vertex_mass).map(|(&x, &m)| x * m).sum()
}

/// Face-sample quadrature of a face field against background areas.
pub fn integrate_faces<T: Real>(mesh: &ConeMesh<T>, f: &[T]) -> T {
    assert_eq!(f.len(), mesh.faces.len(), "field length must match mesh");
    f.iter().zip(&mesh.face_area).map(|(&x, &a)| x * a).sum()
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_torus(refinement: usize) -> ConeMesh<f64> {
        let gluing = PolygonGluing {
            corners: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            pairings: vec![
                SidePairing { side_a: 0, side_b: 2, rot_half_turns: 0 },
                SidePairing { side_a: 1, side_b: 3, rot_half_turns: 0 },
            ],
            marks: vec![],
        };
        build_mesh(&gluing, refinement, 1.0).unwrap()
    }

    #[test]
    fn torus_counts_level3() {
        let m = unit_torus(3);
        assert_eq!(m.num_vertices, 64);
        assert_eq!(m.num_edges(), 192);
        assert_eq!(m.num_faces(), 128);
        assert_eq!(m.euler_characteristic(), 0);
        assert_eq!(m.genus, 1);
    }

    #[test]
    fn torus_flat_defects() {
        let m = unit_torus(3);
        for &d in &angle_defects(&m) {
            assert!(d.abs() <= 1e-12);
        }
    }

    #[test]
    fn subdivision_halves_min_edge() {
        for r in 0..4 {
            let a = unit_torus(r).min_edge_length();
            let b = unit_torus(r + 1).min_edge_length();
            assert!((a / b - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn total_area_refinement_invariant() {
        for r in 0..5 {
            assert!((unit_torus(r).total_area() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn laplacian_row_sums_and_symmetry() {
        let m = unit_torus(3);
        let l = cotan_laplacian(&m);
        for s in l.row_sums() {
            assert!(s.abs() <= 1e-12);
        }
        assert!(l.asymmetry() == 0.0);
    }

    #[test]
    fn integrate_constant_and_linearity() {
        let m = unit_torus(3);
        let one = vec![1.0; m.num_vertices];
        assert!((integrate(&m, &one) - 1.0).abs() <= 1e-12);
        let f: Vec<f64> = (0..m.num_vertices).map(|i| (i as f64).sin()).collect();
        let g: Vec<f64> = (0..m.num_vertices).map(|i| (i as f64 * 0.3).cos()).collect();
        let comb: Vec<f64> = f.iter().zip(&g).map(|(&a, &b)| 2.5 * a - 1.25 * b).collect();
        let lhs = integrate(&m, &comb);
        let rhs = 2.5 * integrate(&m, &f) - 1.25 * integrate(&m, &g);
        assert!((lhs - rhs).abs() <= 1e-12);
    }

    #[test]
    fn marked_corner_torus() {
        let gluing = PolygonGluing {
            corners: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            pairings: vec![
                SidePairing { side_a: 0, side_b: 2, rot_half_turns: 0 },
                SidePairing { side_a: 1, side_b: 3, rot_half_turns: 0 },
            ],
            marks: vec![([0.0, 0.0], std::f64::consts::PI)],
        };
        let m = build_mesh(&gluing, 2, 1.5).unwrap();
        assert_eq!(m.marked.len(), 1);
        // grading must keep the surface closed and flat
        for &d in &angle_defects(&m) {
            assert!(d.abs() <= 1e-9);
        }
        assert!((m.total_area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_manifold() {
        let gluing = PolygonGluing {
            corners: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            pairings: vec![SidePairing { side_a: 0, side_b: 2, rot_half_turns: 0 }],
            marks: vec![],
        };
        assert!(build_mesh(&gluing, 0, 1.0).is_err());
    }

    #[test]
    fn rejects_theta_two_pi() {
        let gluing = PolygonGluing {
            corners: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            pairings: vec![
                SidePairing { side_a: 0, side_b: 2, rot_half_turns: 0 },
                SidePairing { side_a: 1, side_b: 3, rot_half_turns: 0 },
            ],
            marks: vec![([0.0, 0.0], 2.0 * std::f64::consts::PI)],
        };
        assert!(build_mesh(&gluing, 1, 1.0).is_err());
    }
}
