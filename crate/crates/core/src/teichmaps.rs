//! Per-face linear algebra realizing the parameterization maps: the two
//! hyperbolic metrics I#+- = I((E +- J B)., (E +- J B).) visible from any
//! space-like surface, the maximal-surface metrics I*+- = I((E +- B)., .),
//! the bundle morphism b = (E + B)^{-1}(E - B) between them and its inverse
//! reconstruction, and the third-fundamental-form duality III = I(B., B.).
//!
//! A derived metric is validated by recomputing edge lengths per face,
//! averaging across gluings and measuring the discrete curvature through
//! angle defects; the derived metrics all target constant curvature -1.

use crate::error::{Error, Result};
use crate::gauss::{GeometrySetting, Model};
use crate::germ::SurfaceGerm;
use crate::mat2::Mat2;
use crate::mesh::ConeMesh;
use crate::scalar::{real, Real};

/// Per-face symmetric positive-definite 2x2 metric in the face charts.
#[derive(Clone, Debug)]
pub struct Metric2Field<T> {
    pub face_g: Vec<Mat2<T>>,
}

impl<T: Real> Metric2Field<T> {
    pub fn validate(&self, mesh: &ConeMesh<T>) -> Result<()> {
        if self.face_g.len() != mesh.num_faces() {
            return Err(Error::InvalidArgument("metric field length mismatch".into()));
        }
        for (f, g) in self.face_g.iter().enumerate() {
            if !g.is_symmetric(real::<T>(1e-12)) {
                return Err(Error::InvalidArgument(format!("face {f}: metric not symmetric")));
            }
            if !g.is_positive_definite() {
                return Err(Error::InvalidArgument(format!("face {f}: metric not positive definite")));
            }
        }
        Ok(())
    }

    /// Squared length of edge e of face f in this metric.
    pub fn edge_length_sq(&self, mesh: &ConeMesh<T>, f: usize, e: usize) -> T {
        let p = &mesh.faces[f].chart;
        let v = [
            p[(e + 1) % 3][0] - p[e][0],
            p[(e + 1) % 3][1] - p[e][1],
        ];
        self.face_g[f].pair(v, v)
    }
}

/// Per-face bundle morphism field with unit determinant.
#[derive(Clone, Debug)]
pub struct MorphismField<T> {
    pub face_b: Vec<Mat2<T>>,
}

impl<T: Real> MorphismField<T> {
    pub fn validate(&self) -> Result<()> {
        for (f, b) in self.face_b.iter().enumerate() {
            if (b.det() - T::one()).abs() > real::<T>(1e-9) {
                return Err(Error::InvalidArgument(format!(
                    "face {f}: morphism determinant {} != 1",
                    b.det()
                )));
            }
        }
        Ok(())
    }
}

fn require_ads<T: Real>(germ: &SurfaceGerm<T>) -> Result<()> {
    if germ.setting.model() != Model::AntiDeSitter {
        return Err(Error::InvalidArgument("this map needs an AdS germ".into()));
    }
    Ok(())
}

/// I((E + s J B) ., (E + s J B) .) for one face, s = +-1, with I the face
/// metric and J its complex structure.
pub fn sharp_from_operators<T: Real>(i: &Mat2<T>, b: &Mat2<T>, sign: T) -> Result<Mat2<T>> {
    let j = i
        .metric_complex_structure()
        .ok_or_else(|| Error::InvalidArgument("metric is not positive definite".into()))?;
    let m = Mat2::identity().add(&j.mul(b).scale(sign));
    if m.det() <= T::zero() {
        return Err(Error::InvalidArgument("degenerate transport E + JB".into()));
    }
    Ok(m.transpose().mul(i).mul(&m))
}

/// The pair (I#+, I#-) of an AdS germ. Both have constant curvature -1 in
/// the continuum; the discrete curvature check is `l1_curvature_error`.
pub fn sharp_metrics<T: Real>(germ: &SurfaceGerm<T>) -> Result<(Metric2Field<T>, Metric2Field<T>)> {
    require_ads(germ)?;
    let nf = germ.mesh.num_faces();
    let mut plus = Vec::with_capacity(nf);
    let mut minus = Vec::with_capacity(nf);
    for f in 0..nf {
        let i = Mat2::identity().scale(germ.face_phi[f].exp());
        plus.push(sharp_from_operators(&i, &germ.face_b[f], T::one())?);
        minus.push(sharp_from_operators(&i, &germ.face_b[f], -T::one())?);
    }
    Ok((Metric2Field { face_g: plus }, Metric2Field { face_g: minus }))
}

/// The pair (I*+, I*-): e^phi (E +- B)^2 for AdS maximal germs with k < 1,
/// e^phi (sqrt(H^2-1) E +- B0)^2 for de Sitter CMC germs with
/// k < sqrt(H^2-1).
pub fn star_metrics<T: Real>(germ: &SurfaceGerm<T>) -> Result<(Metric2Field<T>, Metric2Field<T>)> {
    let nf = germ.mesh.num_faces();
    let (base, bound) = match germ.setting {
        GeometrySetting::AdsMaximal => (Mat2::identity(), T::one()),
        GeometrySetting::DsCmc(h) => {
            let s = (h * h - T::one()).sqrt();
            (Mat2::identity().scale(s), s)
        }
        _ => {
            return Err(Error::InvalidArgument(
                "star metrics need an AdS maximal or de Sitter CMC germ".into(),
            ));
        }
    };
    let h = germ.mean_curvature;
    let mut plus = Vec::with_capacity(nf);
    let mut minus = Vec::with_capacity(nf);
    for f in 0..nf {
        if germ.face_k[f] >= bound {
            return Err(Error::InvalidArgument(format!(
                "face {f}: curvature deviation {} reaches the transport bound {}",
                germ.face_k[f], bound
            )));
        }
        let b0 = germ.face_b[f].sub(&Mat2::identity().scale(h));
        let scale = germ.face_phi[f].exp();
        for (sign, out) in [(T::one(), &mut plus), (-T::one(), &mut minus)] {
            let m = base.add(&b0.scale(sign));
            out.push(m.transpose().mul(&m).scale(scale));
        }
    }
    Ok((Metric2Field { face_g: plus }, Metric2Field { face_g: minus }))
}

/// The bundle morphism b = (E + B)^{-1}(E - B) of an AdS maximal germ:
/// unit determinant, positive eigenvalues, self-adjoint for I*+, and
/// I*- = I*+(b ., b .) per face.
pub fn labourie_morphism<T: Real>(germ: &SurfaceGerm<T>) -> Result<MorphismField<T>> {
    require_ads(germ)?;
    if germ.setting != GeometrySetting::AdsMaximal {
        return Err(Error::InvalidArgument("the morphism needs a maximal germ".into()));
    }
    let mut out = Vec::with_capacity(germ.mesh.num_faces());
    for (f, b) in germ.face_b.iter().enumerate() {
        if germ.face_k[f] >= T::one() {
            return Err(Error::InvalidArgument(format!(
                "face {f}: principal curvature {} >= 1",
                germ.face_k[f]
            )));
        }
        let e = Mat2::identity();
        let m = e
            .add(b)
            .inverse()
            .ok_or_else(|| Error::InvalidArgument(format!("face {f}: E + B singular")))?
            .mul(&e.sub(b));
        out.push(m);
    }
    let field = MorphismField { face_b: out };
    field.validate()?;
    Ok(field)
}

/// Invert the morphism description: from (g+, b) recover the shape operator
/// B = (E + b)^{-1}(E - b) and the metric g = g+((E+B)^{-1} ., (E+B)^{-1} .).
pub fn reconstruct_from_pair<T: Real>(
    g_plus: &Metric2Field<T>,
    b: &MorphismField<T>,
) -> Result<(Metric2Field<T>, Vec<Mat2<T>>)> {
    if g_plus.face_g.len() != b.face_b.len() {
        return Err(Error::InvalidArgument("field lengths differ".into()));
    }
    b.validate()?;
    let mut g = Vec::with_capacity(b.face_b.len());
    let mut shape = Vec::with_capacity(b.face_b.len());
    for (f, bf) in b.face_b.iter().enumerate() {
        let ev = bf.sym_eigenvalues();
        if ev[0] <= T::zero() {
            return Err(Error::InvalidArgument(format!(
                "face {f}: morphism eigenvalues must be positive"
            )));
        }
        let e = Mat2::identity();
        let big_b = e
            .add(bf)
            .inverse()
            .ok_or_else(|| Error::InvalidArgument(format!("face {f}: E + b singular")))?
            .mul(&e.sub(bf));
        let inv = e
            .add(&big_b)
            .inverse()
            .ok_or_else(|| Error::InvalidArgument(format!("face {f}: E + B singular")))?;
        g.push(inv.transpose().mul(&g_plus.face_g[f]).mul(&inv));
        shape.push(big_b);
    }
    Ok((Metric2Field { face_g: g }, shape))
}

/// Third-fundamental-form duality data of an AdS germ.
#[derive(Clone, Debug)]
pub struct DualSurface<T> {
    /// III = I(B ., B .) per face.
    pub third_form: Metric2Field<T>,
    /// Dual shape operator B^{-1}, absent on ramified faces.
    pub dual_shape: Vec<Option<Mat2<T>>>,
    /// Faces where B degenerates (zeros of the differential).
    pub ramified: Vec<bool>,
    /// Target curvature of the dual metric, -1 - det(B^{-1}), away from
    /// ramification.
    pub dual_curvature_target: Vec<Option<T>>,
    /// Cone-angle bookkeeping: marked angles map to 2 pi - theta.
    pub dual_cone_angles: Vec<(usize, T)>,
}

pub fn dual_surface<T: Real>(germ: &SurfaceGerm<T>) -> Result<DualSurface<T>> {
    require_ads(germ)?;
    let nf = germ.mesh.num_faces();
    let det_floor = real::<T>(1e-9);
    let mut third = Vec::with_capacity(nf);
    let mut dual_shape = Vec::with_capacity(nf);
    let mut ramified = Vec::with_capacity(nf);
    let mut target = Vec::with_capacity(nf);
    for f in 0..nf {
        let b = &germ.face_b[f];
        let i = Mat2::identity().scale(germ.face_phi[f].exp());
        third.push(b.transpose().mul(&i).mul(b));
        if b.det().abs() <= det_floor {
            ramified.push(true);
            dual_shape.push(None);
            target.push(None);
        } else {
            ramified.push(false);
            let binv = b.inverse().unwrap();
            target.push(Some(-T::one() - binv.det()));
            dual_shape.push(Some(binv));
        }
    }
    let two_pi = real::<T>(2.0) * T::PI();
    Ok(DualSurface {
        third_form: Metric2Field { face_g: third },
        dual_shape,
        ramified,
        dual_curvature_target: target,
        dual_cone_angles: germ
            .mesh
            .marked
            .iter()
            .map(|m| (m.vertex, two_pi - m.theta))
            .collect(),
    })
}

/// Discrete curvature of a derived metric: per-face corner angles from the
/// metric inner products, vertex defects, and lumped vertex areas in the new
/// metric. Glued-edge lengths must agree within 1e-3 relative.
#[derive(Clone, Debug)]
pub struct DiscreteCurvature<T> {
    pub vertex_curvature: Vec<T>,
    pub vertex_defect: Vec<T>,
    pub vertex_area: Vec<T>,
    pub max_glue_mismatch: T,
}

pub fn discrete_curvature<T: Real>(
    mesh: &ConeMesh<T>,
    metric: &Metric2Field<T>,
) -> Result<DiscreteCurvature<T>> {
    metric.validate(mesh)?;

    let mut mismatch = T::zero();
    for g in &mesh.gluings {
        let la = metric.edge_length_sq(mesh, g.face_a, g.edge_a).sqrt();
        let lb = metric.edge_length_sq(mesh, g.face_b, g.edge_b).sqrt();
        mismatch = mismatch.max((la - lb).abs() / la.max(lb));
    }
    if mismatch > real::<T>(1e-3) {
        return Err(Error::InvalidArgument(format!(
            "derived metric disagrees across a gluing by {mismatch:e} relative"
        )));
    }

    let nv = mesh.num_vertices;
    let mut angle = vec![T::zero(); nv];
    let mut area = vec![T::zero(); nv];
    let third = real::<T>(1.0 / 3.0);
    for (f, face) in mesh.faces.iter().enumerate() {
        let p = &face.chart;
        let gm = &metric.face_g[f];
        let a_new = mesh.face_areas()[f] * gm.det().sqrt();
        for c in 0..3 {
            let u = [
                p[(c + 1) % 3][0] - p[c][0],
                p[(c + 1) % 3][1] - p[c][1],
            ];
            let v = [
                p[(c + 2) % 3][0] - p[c][0],
                p[(c + 2) % 3][1] - p[c][1],
            ];
            let dot = gm.pair(u, v);
            let lu = gm.pair(u, u).sqrt();
            let lv = gm.pair(v, v).sqrt();
            let cosang = (dot / (lu * lv)).max(-T::one()).min(T::one());
            angle[face.v[c]] += cosang.acos();
            area[face.v[c]] += a_new * third;
        }
    }
    let two_pi = real::<T>(2.0) * T::PI();
    let defect: Vec<T> = angle.iter().map(|&a| two_pi - a).collect();
    let curvature: Vec<T> = defect.iter().zip(&area).map(|(&d, &a)| d / a).collect();
    Ok(DiscreteCurvature {
        vertex_curvature: curvature,
        vertex_defect: defect,
        vertex_area: area,
        max_glue_mismatch: mismatch,
    })
}

/// Area-weighted L1-average error of the discrete curvature against a
/// constant target, skipping marked vertices (their defects encode cone
/// angles, not curvature).
pub fn l1_curvature_error<T: Real>(
    mesh: &ConeMesh<T>,
    metric: &Metric2Field<T>,
    target: T,
) -> Result<T> {
    let dc = discrete_curvature(mesh, metric)?;
    let marked: Vec<usize> = mesh.marked.iter().map(|m| m.vertex).collect();
    let mut err = T::zero();
    let mut total = T::zero();
    for v in 0..mesh.num_vertices {
        if marked.contains(&v) {
            continue;
        }
        err += (dc.vertex_curvature[v] - target).abs() * dc.vertex_area[v];
        total += dc.vertex_area[v];
    }
    Ok(err / total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_traceless(rng: &mut ChaCha8Rng, k_bound: f64) -> Mat2<f64> {
        // B = k * (cos a sigma3 + sin a sigma1)-style traceless symmetric
        let k: f64 = rng.gen_range(0.0..k_bound);
        let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        Mat2::new(k * a.cos(), k * a.sin(), k * a.sin(), -k * a.cos())
    }

    #[test]
    fn det_identity_e_plus_jb() {
        // det(E +- JB) = 1 + det B for traceless symmetric B
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let j = Mat2::<f64>::rotation_j();
        for _ in 0..200 {
            let b = random_traceless(&mut rng, 0.999);
            for s in [1.0, -1.0] {
                let m = Mat2::identity().add(&j.mul(&b).scale(s));
                assert!((m.det() - (1.0 + b.det())).abs() < 1e-12);
            }
            assert!(j.mul(&b).trace().abs() < 1e-12);
        }
    }

    #[test]
    fn morphism_algebra_round_trip() {
        // b = (E+B)^{-1}(E-B) has det 1 and inverts back to B
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..200 {
            let b = random_traceless(&mut rng, 0.95);
            let e = Mat2::<f64>::identity();
            let small_b = e.add(&b).inverse().unwrap().mul(&e.sub(&b));
            assert!((small_b.det() - 1.0).abs() < 1e-10);
            let back = e.add(&small_b).inverse().unwrap().mul(&e.sub(&small_b));
            assert!(back.sub(&b).max_abs() < 1e-10);
            // tr B = 0 whenever det b = 1
            assert!(back.trace().abs() < 1e-10);
        }
    }

    #[test]
    fn reconstruct_identity_morphism() {
        let g_plus = Metric2Field {
            face_g: vec![Mat2::new(2.0, 0.3, 0.3, 1.5); 4],
        };
        let b = MorphismField { face_b: vec![Mat2::identity(); 4] };
        let (g, shape) = reconstruct_from_pair(&g_plus, &b).unwrap();
        for f in 0..4 {
            assert!(shape[f].max_abs() < 1e-14);
            assert!(g.face_g[f].sub(&g_plus.face_g[f]).max_abs() < 1e-12);
        }
    }
}
