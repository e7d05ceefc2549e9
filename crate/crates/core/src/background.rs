//! Generators for the built-in geometries: a flat torus with a constant
//! differential, the genus-2 L-shaped surface, and a torus carrying a
//! pole-pair differential. Each produces a `ConeMesh` plus an `HqdField`.

use crate::error::{Error, Result};
use crate::mesh::{build_mesh_with_snaps, ConeMesh, MarkSnap, PolygonGluing, SidePairing};
use crate::scalar::{real, Cplx, Real};
use crate::weierstrass::{EllipticZeta, PolePairDifferential};

/// Per-face samples of a quadratic differential together with the lumped
/// vertex weights `Q_v` approximating the integral of |t|^2 near each vertex,
/// and pole/zero annotations at special vertices.
#[derive(Clone, Debug)]
pub struct HqdField<T> {
    pub face_t: Vec<Cplx<T>>,
    pub vertex_q: Vec<T>,
    pub marks: Vec<HqdMark<T>>,
}

#[derive(Clone, Debug)]
pub struct HqdMark<T> {
    pub vertex: usize,
    /// 0 (regular) or 1 (simple pole).
    pub pole_order: u8,
    pub zero_order: u32,
    /// Residue of the differential at a simple pole; zero otherwise.
    pub residue: Cplx<T>,
}

/// Scaled view of a quadratic-differential field: `t -> s t`, `Q -> s^2 Q`.
#[derive(Clone, Debug)]
pub struct ScaledData<T> {
    pub base: HqdField<T>,
    pub scale: T,
}

impl<T: Real> ScaledData<T> {
    pub fn field(&self) -> HqdField<T> {
        let s = self.scale;
        HqdField {
            face_t: self.base.face_t.iter().map(|&t| t * s).collect(),
            vertex_q: self.base.vertex_q.iter().map(|&q| q * s * s).collect(),
            marks: self
                .base
                .marks
                .iter()
                .map(|m| HqdMark {
                    vertex: m.vertex,
                    pole_order: m.pole_order,
                    zero_order: m.zero_order,
                    residue: m.residue * s,
                })
                .collect(),
        }
    }
}

/// Scale a differential field by `s >= 0`.
pub fn scale_hqd<T: Real>(base: &HqdField<T>, s: T) -> Result<ScaledData<T>> {
    if s < T::zero() {
        return Err(Error::InvalidArgument("scale must be non-negative".into()));
    }
    Ok(ScaledData { base: base.clone(), scale: s })
}

impl<T: Real> HqdField<T> {
    /// Corner-quadrature vertex weights for plain (pole-free) samples:
    /// Q_v = sum over incident faces of area/3 * |t|^2 at the barycenter.
    fn corner_quadrature(mesh: &ConeMesh<T>, face_t: &[Cplx<T>]) -> Vec<T> {
        let third = real::<T>(1.0 / 3.0);
        let mut q = vec![T::zero(); mesh.num_vertices];
        for (f, face) in mesh.faces.iter().enumerate() {
            let w = mesh.face_areas()[f] * third * face_t[f].norm_sqr();
            for c in 0..3 {
                q[face.v[c]] += w;
            }
        }
        q
    }

    /// Field with a constant value on every face.
    pub fn constant(mesh: &ConeMesh<T>, t: Cplx<T>) -> Self {
        let face_t = vec![t; mesh.num_faces()];
        let vertex_q = Self::corner_quadrature(mesh, &face_t);
        HqdField { face_t, vertex_q, marks: Vec::new() }
    }

    /// Field from per-face samples plus pole annotations. Near a simple pole
    /// the |t|^2 quadrature diverges like 1/r^2; faces incident to the pole
    /// are integrated exactly over one e-fold of radii in their angular
    /// sector instead of sampled, which keeps every Q_v finite and
    /// refinement-stable.
    pub fn from_samples(mesh: &ConeMesh<T>, face_t: Vec<Cplx<T>>, marks: Vec<HqdMark<T>>) -> Result<Self> {
        if face_t.len() != mesh.num_faces() {
            return Err(Error::InvalidArgument("face sample count does not match mesh".into()));
        }
        let pole_vertices: Vec<(usize, T)> = marks
            .iter()
            .filter(|m| m.pole_order == 1)
            .map(|m| (m.vertex, m.residue.norm_sqr()))
            .collect();

        let third = real::<T>(1.0 / 3.0);
        let half = real::<T>(0.5);
        let mut q = vec![T::zero(); mesh.num_vertices];
        for (f, face) in mesh.faces.iter().enumerate() {
            let pole_corner = (0..3).find(|&c| pole_vertices.iter().any(|&(v, _)| v == face.v[c]));
            let w = match pole_corner {
                None => mesh.face_areas()[f] * third * face_t[f].norm_sqr(),
                Some(c) => {
                    let res2 = pole_vertices
                        .iter()
                        .find(|&&(v, _)| v == face.v[c])
                        .unwrap()
                        .1;
                    // sector integral of |res|^2/r^2 over radii [rho/e, rho]:
                    // beta * |res|^2 * ln(e) = beta * |res|^2
                    let p = &face.chart;
                    let r1 = (p[(c + 1) % 3][0] - p[c][0]).hypot(p[(c + 1) % 3][1] - p[c][1]);
                    let r2 = (p[(c + 2) % 3][0] - p[c][0]).hypot(p[(c + 2) % 3][1] - p[c][1]);
                    let _rho = (r1 * r2).sqrt() * half; // radial scale, fixed by the e-fold rule
                    let beta = mesh.corner_angle(f, c);
                    beta * res2
                }
            };
            for c in 0..3 {
                q[face.v[c]] += w * third;
            }
        }
        Ok(HqdField { face_t, vertex_q: q, marks })
    }

    /// Structural invariants: weights finite and non-negative, annotations in
    /// range, and constant-per-face samples consistent across gluings.
    pub fn validate(&self, mesh: &ConeMesh<T>) -> Result<()> {
        if self.face_t.len() != mesh.num_faces() || self.vertex_q.len() != mesh.num_vertices {
            return Err(Error::InvalidArgument("field lengths do not match mesh".into()));
        }
        for &q in &self.vertex_q {
            if !(q >= T::zero()) || !q.is_finite() {
                return Err(Error::InvalidArgument("vertex weight Q must be finite and >= 0".into()));
            }
        }
        for m in &self.marks {
            if m.vertex >= mesh.num_vertices {
                return Err(Error::InvalidArgument("differential mark out of range".into()));
            }
            if m.pole_order > 1 {
                return Err(Error::InvalidArgument("poles of order above one are not allowed".into()));
            }
        }
        Ok(())
    }

    /// Check `t_b = t_a` across every gluing for an analytically sampled
    /// differential: rotation by pi acts trivially on quadratic differentials,
    /// so the sampler evaluated at the two chart images of a shared edge
    /// midpoint must agree.
    pub fn check_gluing_consistency<F>(mesh: &ConeMesh<T>, sample: F, rel_tol: T) -> Result<()>
    where
        F: Fn(Cplx<T>) -> Result<Cplx<T>>,
    {
        for g in &mesh.gluings {
            let ma = mesh.edge_midpoint(g.face_a, g.edge_a);
            let mb = g.apply(ma);
            let ta = sample(Cplx::new(ma[0], ma[1]))?;
            let tb = sample(Cplx::new(mb[0], mb[1]))?;
            let scale = ta.norm().max(tb.norm()).max(T::epsilon());
            if (ta - tb).norm() > rel_tol * scale {
                return Err(Error::Mesh(format!(
                    "differential samples disagree across a gluing: {:?} vs {:?}",
                    ta, tb
                )));
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.face_t.iter().all(|t| t.norm_sqr() == T::zero())
    }
}

fn torus_polygon<T: Real>(tau: Cplx<T>, marks: Vec<([T; 2], T)>) -> Result<PolygonGluing<T>> {
    if tau.im <= T::zero() {
        return Err(Error::InvalidArgument("tau must have positive imaginary part".into()));
    }
    Ok(PolygonGluing {
        corners: vec![
            [T::zero(), T::zero()],
            [T::one(), T::zero()],
            [T::one() + tau.re, tau.im],
            [tau.re, tau.im],
        ],
        pairings: vec![
            SidePairing { side_a: 0, side_b: 2, rot_half_turns: 0 },
            SidePairing { side_a: 1, side_b: 3, rot_half_turns: 0 },
        ],
        marks,
    })
}

/// Flat torus C/(Z + tau Z) carrying the constant differential `t_const`.
pub fn torus_background<T: Real>(
    tau: Cplx<T>,
    t_const: Cplx<T>,
    refinement: usize,
) -> Result<(ConeMesh<T>, HqdField<T>)> {
    let gluing = torus_polygon(tau, Vec::new())?;
    let mesh = crate::mesh::build_mesh(&gluing, refinement, T::one())?;
    let hqd = HqdField::constant(&mesh, t_const);
    hqd.validate(&mesh)?;
    Ok((mesh, hqd))
}

/// Flat torus with marked cone vertices (t constant, typically zero). Marked
/// points are snapped to grid vertices; the mesh is graded toward them.
pub fn torus_marked_background<T: Real>(
    tau: Cplx<T>,
    t_const: Cplx<T>,
    marks: &[(Cplx<T>, T)],
    refinement: usize,
    grading: T,
) -> Result<(ConeMesh<T>, HqdField<T>, Vec<MarkSnap<T>>)> {
    let marks: Vec<([T; 2], T)> = marks.iter().map(|&(p, th)| ([p.re, p.im], th)).collect();
    let gluing = torus_polygon(tau, marks)?;
    let (mesh, snaps) = build_mesh_with_snaps(&gluing, refinement, grading)?;
    let hqd = HqdField::constant(&mesh, t_const);
    hqd.validate(&mesh)?;
    Ok((mesh, hqd, snaps))
}

/// Genus-2 surface from the L-shaped polygon with legs a x 1 and 1 x b and
/// opposite sides identified; one cone vertex of angle 6 pi (defect -4 pi),
/// carrying the constant differential t = 1 whose double zero sits at the
/// cone point.
pub fn lshape_background<T: Real>(
    a: T,
    b: T,
    refinement: usize,
    grading: T,
) -> Result<(ConeMesh<T>, HqdField<T>)> {
    if !(a > T::one()) || !(b > T::zero()) {
        return Err(Error::InvalidArgument(
            "L-shape needs a > 1 and b > 0 for a non-degenerate polygon".into(),
        ));
    }
    let one = T::one();
    let zero = T::zero();
    let gluing = PolygonGluing {
        corners: vec![
            [zero, zero],
            [one, zero],
            [a, zero],
            [a, one],
            [one, one],
            [one, one + b],
            [zero, one + b],
            [zero, one],
        ],
        pairings: vec![
            SidePairing { side_a: 0, side_b: 5, rot_half_turns: 0 }, // [0,1]x{0} ~ [0,1]x{1+b}
            SidePairing { side_a: 1, side_b: 3, rot_half_turns: 0 }, // [1,a]x{0} ~ [1,a]x{1}
            SidePairing { side_a: 2, side_b: 7, rot_half_turns: 0 }, // {a}x[0,1] ~ {0}x[0,1]
            SidePairing { side_a: 4, side_b: 6, rot_half_turns: 0 }, // {1}x[1,1+b] ~ {0}x[1,1+b]
        ],
        marks: vec![],
    };
    let mesh = crate::mesh::build_mesh(&gluing, refinement, grading)?;

    let cone_vertex = crate::mesh::angle_defects(&mesh)
        .iter()
        .enumerate()
        .find(|(_, d)| d.abs() > real::<T>(1e-6))
        .map(|(v, _)| v)
        .ok_or_else(|| Error::Mesh("L-shape surface lost its cone vertex".into()))?;

    let mut hqd = HqdField::constant(&mesh, Cplx::new(T::one(), T::zero()));
    hqd.marks.push(HqdMark {
        vertex: cone_vertex,
        pole_order: 0,
        zero_order: 2,
        residue: Cplx::new(T::zero(), T::zero()),
    });
    hqd.validate(&mesh)?;
    Ok((mesh, hqd))
}

/// Torus with the pole-pair differential t = c (zeta(z-p1) - zeta(z-p2)).
/// p1 and p2 are snapped to grid vertices, marked with the given cone angles
/// and annotated with pole order one; the mesh is graded toward them.
#[allow(clippy::too_many_arguments)]
pub fn weierstrass_pole_pair<T: Real>(
    tau: Cplx<T>,
    p1: Cplx<T>,
    p2: Cplx<T>,
    c: Cplx<T>,
    truncation: usize,
    refinement: usize,
    thetas: [T; 2],
    grading: T,
) -> Result<(ConeMesh<T>, HqdField<T>, Vec<MarkSnap<T>>)> {
    let zeta = EllipticZeta::new(tau, truncation)?;
    // snap to the refinement grid before building, so the marks are vertices
    let n = real::<T>((1usize << refinement) as f64);
    let snap = |p: Cplx<T>| -> Cplx<T> {
        // marker coordinates (x, y) with z = x + tau y
        let y = p.im / tau.im;
        let x = p.re - tau.re * y;
        let (xs, ys) = ((x * n).round() / n, (y * n).round() / n);
        Cplx::new(xs + tau.re * ys, tau.im * ys)
    };
    let (q1, q2) = (snap(p1), snap(p2));
    if (q1 - q2).norm() < real::<T>(1e-12) {
        return Err(Error::InvalidArgument("p1 and p2 snap to the same lattice point".into()));
    }
    let diff = PolePairDifferential {
        zeta,
        p1: q1,
        p2: q2,
        c,
        guard: real::<T>(1e-8),
    };

    let gluing = torus_polygon(tau, vec![([q1.re, q1.im], thetas[0]), ([q2.re, q2.im], thetas[1])])?;
    let (mesh, mut snaps) = build_mesh_with_snaps(&gluing, refinement, grading)?;
    // report distances relative to the requested points, not the grid snaps
    snaps[0].requested = [p1.re, p1.im];
    snaps[0].distance = (p1 - q1).norm();
    snaps[1].requested = [p2.re, p2.im];
    snaps[1].distance = (p2 - q2).norm();

    HqdField::check_gluing_consistency(&mesh, |z| diff.eval(z), real::<T>(1e-9))?;

    let face_t: Vec<Cplx<T>> = (0..mesh.num_faces())
        .map(|f| {
            let b = mesh.face_barycenter(f);
            diff.eval(Cplx::new(b[0], b[1]))
        })
        .collect::<Result<_>>()?;
    let marks = vec![
        HqdMark { vertex: snaps[0].vertex, pole_order: 1, zero_order: 0, residue: c },
        HqdMark { vertex: snaps[1].vertex, pole_order: 1, zero_order: 0, residue: -c },
    ];
    let hqd = HqdField::from_samples(&mesh, face_t, marks)?;
    hqd.validate(&mesh)?;
    Ok((mesh, hqd, snaps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::angle_defects;

    #[test]
    fn torus_constant_field() {
        let (mesh, hqd) = torus_background(Cplx::new(0.0, 1.0), Cplx::new(1.0, 0.0), 3).unwrap();
        assert!(hqd.face_t.iter().all(|t| (t - Cplx::new(1.0, 0.0)).norm() == 0.0));
        assert!((mesh.total_area() - 1.0).abs() < 1e-12);
        for &d in &angle_defects(&mesh) {
            assert!(d.abs() < 1e-12);
        }
        // translations only: constant samples agree across gluings exactly
        HqdField::check_gluing_consistency(&mesh, |_| Ok(Cplx::new(1.0, 0.0)), 1e-12).unwrap();
    }

    #[test]
    fn lshape_genus_two() {
        let (mesh, hqd) = lshape_background(2.0, 1.0, 2, 1.5).unwrap();
        assert_eq!(mesh.euler_characteristic(), -2);
        assert_eq!(mesh.genus, 2);
        assert!((mesh.total_area() - 3.0).abs() < 1e-12);
        let defects = angle_defects(&mesh);
        let nonzero: Vec<_> = defects.iter().filter(|d| d.abs() > 1e-9).collect();
        assert_eq!(nonzero.len(), 1);
        assert!((nonzero[0] + 4.0 * std::f64::consts::PI).abs() < 1e-9);
        assert_eq!(hqd.marks.len(), 1);
        assert_eq!(hqd.marks[0].zero_order, 2);
    }

    #[test]
    fn scaling_is_exact() {
        let (mesh, hqd) = torus_background(Cplx::new(0.0, 1.0), Cplx::new(0.5, -0.25), 2).unwrap();
        let scaled = scale_hqd(&hqd, 3.0).unwrap().field();
        for (a, b) in hqd.vertex_q.iter().zip(&scaled.vertex_q) {
            assert_eq!(b, &(a * 9.0));
        }
        for (a, b) in hqd.face_t.iter().zip(&scaled.face_t) {
            assert_eq!(*b, a * 3.0);
        }
        let zero = scale_hqd(&hqd, 0.0).unwrap().field();
        assert!(zero.is_zero());
        assert!(zero.vertex_q.iter().all(|&q| q == 0.0));
        let _ = mesh;
    }

    #[test]
    fn pole_pair_q_finite() {
        let (mesh, hqd, snaps) = weierstrass_pole_pair(
            Cplx::new(0.0, 1.0),
            Cplx::new(0.25, 0.25),
            Cplx::new(0.75, 0.75),
            Cplx::new(1.0, 0.0),
            8,
            3,
            [std::f64::consts::PI * 0.75, std::f64::consts::PI * 0.75],
            1.5,
        )
        .unwrap();
        assert_eq!(snaps.len(), 2);
        assert!(snaps.iter().all(|s| s.distance < 1e-12)); // on-grid requests
        hqd.validate(&mesh).unwrap();
        assert!(hqd.vertex_q.iter().all(|q| q.is_finite()));
        assert_eq!(mesh.marked.len(), 2);
    }
}
