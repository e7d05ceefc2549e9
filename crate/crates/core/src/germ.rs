//! Surface germs: the solved first/second fundamental form pair, its shape
//! operator field and the pointwise/integral diagnostics.
//!
//! In a face chart the solved metric is I = e^phi Id with phi the
//! corner-averaged 2u, the traceless second-fundamental-form block is
//! Re(t dz^2) and the shape operator
//!
//!   B = e^{-phi} [[Re t, -Im t], [-Im t, -Re t]] + H E,
//!
//! so tr B = 2H and the traceless eigenvalues are +-k with k = e^{-phi} |t|.

use crate::background::HqdField;
use crate::error::{Error, Result};
use crate::gauss::{face_phi, pole_faces, GaussProblem, GeometrySetting, Model, Solution};
use crate::mat2::Mat2;
use crate::mesh::ConeMesh;
use crate::scalar::{real, Cplx, Real};
use std::sync::Arc;

#[derive(Clone)]
pub struct SurfaceGerm<T> {
    pub mesh: Arc<ConeMesh<T>>,
    pub setting: GeometrySetting<T>,
    /// e^{2u} per vertex (empty when reloaded from per-face data only).
    pub vertex_e2u: Vec<T>,
    /// Corner-averaged phi = 2u per face.
    pub face_phi: Vec<T>,
    pub face_t: Vec<Cplx<T>>,
    pub face_b: Vec<Mat2<T>>,
    pub face_k: Vec<T>,
    pub mean_curvature: T,
    /// Faces incident to a first-order pole, excluded from interior maxima.
    pub pole_faces: Vec<bool>,
}

/// Diagnostics summary of a germ.
#[derive(Clone, Debug)]
pub struct GermReport<T> {
    pub k_max_interior: T,
    pub k_max_near_marks: Option<T>,
    /// Hyperbolic settings: all principal curvatures strictly inside (-1, 1).
    pub almost_fuchsian: bool,
    /// Integral of k against the germ area form (= background integral of |t|).
    pub af_integral: T,
    /// |integral of K - (2 pi (2-2g) - sum (2 pi - theta))| by face quadrature.
    pub gauss_bonnet_residual: T,
    /// Setting-specific pointwise curvature bound, when the model has one.
    pub curvature_bound: Option<CurvatureBound<T>>,
    /// Hyperbolic settings: integral of (1 + k^2) against the germ area.
    pub hyperbolic_identity: Option<T>,
    /// Germ area (the Hamiltonian's A_0 for maximal surfaces).
    pub area: T,
}

#[derive(Clone, Copy, Debug)]
pub struct CurvatureBound<T> {
    pub bound: T,
    pub satisfied: bool,
}

/// Build the germ fields from a converged solution.
pub fn assemble_germ<T: Real>(
    solution: &Solution<T>,
    problem: &GaussProblem<T>,
) -> Result<SurfaceGerm<T>> {
    if !solution.converged {
        return Err(Error::InvalidArgument("germ assembly needs a converged solution".into()));
    }
    let mesh = &problem.mesh;
    let h = problem.setting.mean_curvature();
    let phi = face_phi(mesh, &solution.u);
    let two = real::<T>(2.0);

    let mut face_b = Vec::with_capacity(mesh.num_faces());
    let mut face_k = Vec::with_capacity(mesh.num_faces());
    for f in 0..mesh.num_faces() {
        let t = problem.hqd.face_t[f];
        let b0 = Mat2::from_quadratic(t).scale((-phi[f]).exp());
        let b = b0.add(&Mat2::identity().scale(h));
        // traceless eigenvalues are +-k
        let ev = b.sym_eigenvalues();
        face_k.push((ev[1] - ev[0]) / two);
        face_b.push(b);
    }

    Ok(SurfaceGerm {
        mesh: mesh.clone(),
        setting: problem.setting,
        vertex_e2u: solution.u.iter().map(|&u| (two * u).exp()).collect(),
        face_phi: phi,
        face_t: problem.hqd.face_t.clone(),
        face_b,
        face_k,
        mean_curvature: h,
        pole_faces: pole_faces(mesh, &problem.hqd),
    })
}

/// Rebuild a germ from per-face data (the on-disk form).
pub fn germ_from_faces<T: Real>(
    mesh: Arc<ConeMesh<T>>,
    setting: GeometrySetting<T>,
    face_phi: Vec<T>,
    face_b: Vec<Mat2<T>>,
    vertex_e2u: Vec<T>,
) -> Result<SurfaceGerm<T>> {
    if face_phi.len() != mesh.num_faces() || face_b.len() != mesh.num_faces() {
        return Err(Error::InvalidArgument("face field lengths do not match mesh".into()));
    }
    let h = setting.mean_curvature();
    let two = real::<T>(2.0);
    let mut face_t = Vec::with_capacity(face_b.len());
    let mut face_k = Vec::with_capacity(face_b.len());
    for (f, b) in face_b.iter().enumerate() {
        if !b.is_symmetric(real::<T>(1e-9)) {
            return Err(Error::InvalidArgument(format!("face {f}: shape operator not symmetric")));
        }
        if (b.trace() - two * h).abs() > real::<T>(1e-8) * (T::one() + h.abs()) {
            return Err(Error::InvalidArgument(format!(
                "face {f}: trace of B is {} but 2H = {}",
                b.trace(),
                two * h
            )));
        }
        let b0 = b.sub(&Mat2::identity().scale(h));
        face_t.push(b0.to_quadratic() * face_phi[f].exp());
        let ev = b.sym_eigenvalues();
        face_k.push((ev[1] - ev[0]) / two);
    }
    let pole = vec![false; mesh.num_faces()];
    Ok(SurfaceGerm {
        mesh,
        setting,
        vertex_e2u,
        face_phi,
        face_t,
        face_b,
        face_k,
        mean_curvature: h,
        pole_faces: pole,
    })
}

impl<T: Real> SurfaceGerm<T> {
    /// Metric area of a face: e^phi times the chart area.
    pub fn face_metric_area(&self, f: usize) -> T {
        self.face_phi[f].exp() * self.mesh.face_areas()[f]
    }

    /// Total germ area.
    pub fn area(&self) -> T {
        (0..self.mesh.num_faces()).map(|f| self.face_metric_area(f)).sum()
    }

    /// Face-quadrature integral of the model curvature K = K(det B).
    pub fn curvature_integral(&self) -> T {
        (0..self.mesh.num_faces())
            .map(|f| {
                let k = self.setting.curvature_from_det_b(self.face_b[f].det());
                k * self.face_metric_area(f)
            })
            .sum()
    }

    /// Gauss-Bonnet target: 2 pi (2 - 2g) - sum (2 pi - theta).
    pub fn gauss_bonnet_target(&self) -> T {
        let two_pi = real::<T>(2.0) * T::PI();
        let mut t = two_pi * real::<T>(2.0 - 2.0 * self.mesh.genus as f64);
        for m in &self.mesh.marked {
            t -= two_pi - m.theta;
        }
        t
    }

    pub fn k_max_interior(&self) -> T {
        self.face_k
            .iter()
            .zip(&self.pole_faces)
            .filter(|(_, &p)| !p)
            .map(|(&k, _)| k)
            .fold(T::zero(), |m, k| m.max(k))
    }

    /// Verify the construction identities: tr B = 2H, B symmetric,
    /// k = e^{-phi} |t| per face.
    pub fn validate(&self) -> Result<()> {
        let two = real::<T>(2.0);
        let tol = real::<T>(1e-10);
        for f in 0..self.mesh.num_faces() {
            let b = &self.face_b[f];
            if !b.is_symmetric(tol) {
                return Err(Error::InvalidArgument(format!("face {f}: B not self-adjoint")));
            }
            if (b.trace() - two * self.mean_curvature).abs() > tol * (T::one() + b.max_abs()) {
                return Err(Error::InvalidArgument(format!("face {f}: tr B != 2H")));
            }
            let k_fock = (-self.face_phi[f]).exp() * self.face_t[f].norm();
            if (self.face_k[f] - k_fock).abs() > tol * (T::one() + k_fock) {
                return Err(Error::InvalidArgument(format!(
                    "face {f}: k = {} but e^-phi |t| = {}",
                    self.face_k[f], k_fock
                )));
            }
        }
        Ok(())
    }
}

/// Pointwise and integral diagnostics of a germ.
pub fn diagnostics<T: Real>(germ: &SurfaceGerm<T>) -> GermReport<T> {
    let mesh = &germ.mesh;
    let mut k_max_interior = T::zero();
    let mut k_max_marks: Option<T> = None;
    let mut af_integral = T::zero();
    for f in 0..mesh.num_faces() {
        let k = germ.face_k[f];
        if germ.pole_faces[f] {
            k_max_marks = Some(k_max_marks.map_or(k, |m: T| m.max(k)));
        } else {
            k_max_interior = k_max_interior.max(k);
        }
        af_integral += germ.face_t[f].norm() * mesh.face_areas()[f];
    }

    let area = germ.area();
    let gauss_bonnet_residual = (germ.curvature_integral() - germ.gauss_bonnet_target()).abs();

    let model = germ.setting.model();
    // strict margin so the AF classification cannot flap at the bound
    let almost_fuchsian = model == Model::Hyperbolic
        && k_max_interior < T::one() - real::<T>(1e-9);

    let curvature_bound = match germ.setting {
        GeometrySetting::AdsMaximal | GeometrySetting::AdsCmc(_) => Some(CurvatureBound {
            bound: T::one(),
            satisfied: k_max_interior <= T::one() + real::<T>(1e-6),
        }),
        GeometrySetting::DsCmc(h) => {
            let bound = (h * h - T::one()).sqrt();
            Some(CurvatureBound {
                bound,
                satisfied: k_max_interior <= bound + real::<T>(1e-6),
            })
        }
        _ => None,
    };

    let hyperbolic_identity = (model == Model::Hyperbolic).then(|| {
        (0..mesh.num_faces())
            .map(|f| (T::one() + germ.face_k[f] * germ.face_k[f]) * germ.face_metric_area(f))
            .sum()
    });

    GermReport {
        k_max_interior,
        k_max_near_marks: k_max_marks,
        almost_fuchsian,
        af_integral,
        gauss_bonnet_residual,
        curvature_bound,
        hyperbolic_identity,
        area,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::background::torus_background;
    use crate::gauss::{assemble, solve, SolveOptions};

    fn ads_torus_germ(c: f64) -> SurfaceGerm<f64> {
        let (mesh, hqd) = torus_background(Cplx::new(0.0, 1.0), Cplx::new(c, 0.0), 3).unwrap();
        let mesh = Arc::new(mesh);
        let problem = assemble(GeometrySetting::AdsMaximal, &mesh, &hqd).unwrap();
        let sol = solve(&problem, None, &SolveOptions::default()).unwrap();
        assemble_germ(&sol, &problem).unwrap()
    }

    #[test]
    fn ads_unit_torus_shape_operator() {
        let germ = ads_torus_germ(1.0);
        germ.validate().unwrap();
        for b in &germ.face_b {
            // B = diag(1, -1) in every chart
            assert!((b.m[0][0] - 1.0).abs() < 1e-9);
            assert!((b.m[1][1] + 1.0).abs() < 1e-9);
            assert!(b.m[0][1].abs() < 1e-9);
        }
        for &k in &germ.face_k {
            assert!((k - 1.0).abs() < 1e-9);
        }
        let report = diagnostics(&germ);
        assert!((report.area - 1.0).abs() < 1e-9);
        // the torus with constant t realizes the equality case k = 1
        assert!((report.k_max_interior - 1.0).abs() < 1e-9);
    }

    #[test]
    fn umbilic_when_t_vanishes() {
        let (mesh, hqd) = torus_background(Cplx::new(0.0, 1.0), Cplx::new(0.0, 0.0), 2).unwrap();
        let mesh = Arc::new(mesh);
        let problem = assemble(GeometrySetting::MinkCmc(1.5), &mesh, &hqd).unwrap();
        let sol = solve(&problem, None, &SolveOptions::default()).unwrap();
        let germ = assemble_germ(&sol, &problem).unwrap();
        for (b, &k) in germ.face_b.iter().zip(&germ.face_k) {
            assert!(k.abs() < 1e-12);
            assert!((b.m[0][0] - 1.5).abs() < 1e-10 && (b.m[1][1] - 1.5).abs() < 1e-10);
            assert!(b.m[0][1].abs() < 1e-12);
        }
    }
}
