//! Reconstruction of the 3-metrics over a germ: equidistant foliations,
//! explicit metric blocks, breakdown radii, asymptotic boundary data, the
//! convex-core volume bound, the reduced Hamiltonian and the presymplectic
//! pairing.
//!
//! The equidistant transport at signed distance r is per-face linear algebra:
//!
//!   I_r = I(M_r ., M_r .),  B_r = M_r^{-1} N_r,
//!
//! with (M_r, N_r) given by (cosh r E + sinh r B, sinh r E + cosh r B) in the
//! hyperbolic and de Sitter models, (cos r E + sin r B, sin r E + cos r B) in
//! AdS and (E + r B, B) in Minkowski.

use crate::error::{Error, Result};
use crate::gauss::{GeometrySetting, Model};
use crate::germ::SurfaceGerm;
use crate::mat2::Mat2;
use crate::scalar::{real, Cplx, Real};

/// One equidistant leaf, sampled per face.
#[derive(Clone, Debug)]
pub struct FoliationSample<T> {
    pub r: T,
    pub metric: Vec<Mat2<T>>,
    pub shape: Vec<Mat2<T>>,
    pub mean_curvature: Vec<T>,
    /// da_r / da per face (the determinant of the transport operator).
    pub area_ratio: Vec<T>,
    pub face_valid: Vec<bool>,
    /// False exactly when the transport determinant is <= 0 on some face.
    pub valid: bool,
}

/// Transport coefficients: M = c_e E + c_b B, N = n_e E + n_b B.
fn transport_coefficients<T: Real>(model: Model, r: T) -> (T, T, T, T) {
    match model {
        Model::Hyperbolic | Model::DeSitter => (r.cosh(), r.sinh(), r.sinh(), r.cosh()),
        Model::AntiDeSitter => (r.cos(), r.sin(), r.sin(), r.cos()),
        Model::Minkowski => (T::one(), r, T::zero(), T::one()),
    }
}

/// Transported (I_r, B_r, valid) for one face.
pub fn transport_face<T: Real>(
    model: Model,
    i: &Mat2<T>,
    b: &Mat2<T>,
    r: T,
) -> (Mat2<T>, Option<Mat2<T>>, T) {
    let (ce, cb, ne, nb) = transport_coefficients(model, r);
    let e = Mat2::identity();
    let m = e.scale(ce).add(&b.scale(cb));
    let n = e.scale(ne).add(&b.scale(nb));
    let i_r = m.transpose().mul(i).mul(&m);
    let det = m.det();
    let b_r = m.inverse().map(|mi| mi.mul(&n));
    (i_r, b_r, det)
}

/// Equidistant leaves of the germ's 3-metric at the given signed distances.
pub fn foliate<T: Real>(germ: &SurfaceGerm<T>, r_values: &[T]) -> Vec<FoliationSample<T>> {
    let model = germ.setting.model();
    let nf = germ.mesh.num_faces();
    r_values
        .iter()
        .map(|&r| {
            let mut metric = Vec::with_capacity(nf);
            let mut shape = Vec::with_capacity(nf);
            let mut mean = Vec::with_capacity(nf);
            let mut ratio = Vec::with_capacity(nf);
            let mut face_valid = Vec::with_capacity(nf);
            for f in 0..nf {
                let i = Mat2::identity().scale(germ.face_phi[f].exp());
                let (i_r, b_r, det) = transport_face(model, &i, &germ.face_b[f], r);
                metric.push(i_r);
                mean.push(b_r.as_ref().map_or(T::nan(), |b| b.trace() * real::<T>(0.5)));
                shape.push(b_r.unwrap_or_else(Mat2::zero));
                ratio.push(det);
                face_valid.push(det > T::zero());
            }
            let valid = face_valid.iter().all(|&v| v);
            FoliationSample { r, metric, shape, mean_curvature: mean, area_ratio: ratio, valid, face_valid }
        })
        .collect()
}

/// Foliation and convexity radii of the germ's equidistant family.
#[derive(Clone, Debug)]
pub struct BreakdownReport<T> {
    /// Largest r > 0 with the transport non-degenerate on every face
    /// (infinity when the foliation never folds in that direction).
    pub validity_radius_future: T,
    pub validity_radius_past: T,
    /// Hyperbolic almost-Fuchsian germs: radius beyond which both equidistant
    /// principal curvatures are non-negative.
    pub convexity_radius: Option<T>,
}

/// Per-setting breakdown radii from the interior curvature maximum.
pub fn breakdown_radius<T: Real>(germ: &SurfaceGerm<T>) -> BreakdownReport<T> {
    let k = germ.k_max_interior();
    let one = T::one();
    let inf = T::infinity();
    let half = real::<T>(0.5);
    match germ.setting.model() {
        Model::Hyperbolic => {
            // det M = cosh^2 r - sinh^2 r k^2, symmetric in r
            let (fold, convexity) = if k < one {
                (inf, Some(half * ((one + k) / (one - k)).ln()))
            } else {
                (half * ((k + one) / (k - one)).ln(), None)
            };
            BreakdownReport {
                validity_radius_future: fold,
                validity_radius_past: fold,
                convexity_radius: convexity,
            }
        }
        Model::AntiDeSitter => {
            // cos r / sin r = k at the fold
            let fold = if k == T::zero() {
                half * T::PI()
            } else {
                k.recip().atan()
            };
            BreakdownReport {
                validity_radius_future: fold,
                validity_radius_past: fold,
                convexity_radius: None,
            }
        }
        Model::DeSitter => {
            // singular toward the past at coth T = k_max + H
            let h = germ.mean_curvature;
            let c = k + h;
            let past = half * ((c + one) / (c - one)).ln();
            BreakdownReport {
                validity_radius_future: inf,
                validity_radius_past: past,
                convexity_radius: None,
            }
        }
        Model::Minkowski => {
            let h = germ.mean_curvature;
            let past = (h + k).recip();
            let future = if k < h { inf } else { (k - h).recip() };
            BreakdownReport {
                validity_radius_future: future,
                validity_radius_past: past,
                convexity_radius: None,
            }
        }
    }
}

/// Components of the explicit 3-metric over one face at distance r: the
/// radial coefficient (+1 Riemannian, -1 Lorentzian), vanishing cross terms,
/// and the tangential 2x2 block
///
///   e^phi | A dz + C e^{-phi} conj(t) dz_bar |^2,
///
/// with (A, C) = (cosh r, sinh r), (cos r, sin r), (cosh r + H sinh r, sinh r)
/// and (1 + H r, r) in the four models.
#[derive(Clone, Debug)]
pub struct FockBlock<T> {
    pub radial: T,
    pub cross: [T; 2],
    pub tangential: Mat2<T>,
}

pub fn fock_eval<T: Real>(germ: &SurfaceGerm<T>, face: usize, r: T) -> Result<FockBlock<T>> {
    if face >= germ.mesh.num_faces() {
        return Err(Error::InvalidArgument(format!("face {face} out of range")));
    }
    let h = germ.mean_curvature;
    let (radial, a, scale_c) = match germ.setting.model() {
        Model::Hyperbolic => (T::one(), r.cosh() + h * r.sinh(), r.sinh()),
        Model::AntiDeSitter => (-T::one(), r.cos() + h * r.sin(), r.sin()),
        Model::DeSitter => (-T::one(), r.cosh() + h * r.sinh(), r.sinh()),
        Model::Minkowski => (-T::one(), T::one() + h * r, r),
    };
    let phi = germ.face_phi[face];
    let c = Cplx::new(scale_c, T::zero()) * germ.face_t[face].conj() * (-phi).exp();
    let w = c.conj() * a; // A real in every model
    let diag = a * a + c.norm_sqr();
    let tangential = Mat2::identity()
        .scale(diag)
        .add(&Mat2::from_quadratic(w).scale(real::<T>(2.0)))
        .scale(phi.exp());
    Ok(FockBlock { radial, cross: [T::zero(), T::zero()], tangential })
}

/// Asymptotic boundary data of a hyperbolic germ: the two boundary metrics
/// e^phi |dz +- mu dz_bar|^2 and the Beltrami coefficient mu = e^{-phi}
/// conj(t), whose modulus equals k per face.
#[derive(Clone, Debug)]
pub struct BoundaryData<T> {
    pub star_plus: Vec<Mat2<T>>,
    pub star_minus: Vec<Mat2<T>>,
    pub mu: Vec<Cplx<T>>,
    pub mu_max: T,
    /// |mu| < 1 everywhere exactly when the germ is almost-Fuchsian.
    pub af_consistent: bool,
}

pub fn boundary_data<T: Real>(germ: &SurfaceGerm<T>) -> Result<BoundaryData<T>> {
    if germ.setting.model() != Model::Hyperbolic {
        return Err(Error::InvalidArgument("boundary data is defined for hyperbolic germs".into()));
    }
    let nf = germ.mesh.num_faces();
    let mut star_plus = Vec::with_capacity(nf);
    let mut star_minus = Vec::with_capacity(nf);
    let mut mu = Vec::with_capacity(nf);
    let mut mu_max = T::zero();
    let h = germ.mean_curvature;
    for f in 0..nf {
        let phi = germ.face_phi[f];
        let b0 = germ.face_b[f].sub(&Mat2::identity().scale(h));
        let e = Mat2::identity();
        for (sign, out) in [(T::one(), &mut star_plus), (-T::one(), &mut star_minus)] {
            let m = e.add(&b0.scale(sign));
            out.push(m.transpose().mul(&m).scale(phi.exp()));
        }
        let m_f = germ.face_t[f].conj() * (-phi).exp();
        if !germ.pole_faces[f] {
            mu_max = mu_max.max(m_f.norm());
        }
        mu.push(m_f);
    }
    let af = germ.k_max_interior() < T::one() - real::<T>(1e-9);
    Ok(BoundaryData {
        star_plus,
        star_minus,
        mu,
        mu_max,
        af_consistent: (mu_max < T::one()) == af,
    })
}

/// Closed-form upper bound for the convex-core volume of a hyperbolic
/// almost-Fuchsian germ:
///
///   2 k/(1-k^2) A - 2 pi (2g-2) (k/(1-k^2) + (1/2) ln((1+k)/(1-k))),
///
/// with k the interior curvature maximum and A the germ area. Vanishes in
/// the Fuchsian case k = 0.
pub fn convex_core_bound<T: Real>(germ: &SurfaceGerm<T>) -> Result<T> {
    if germ.setting.model() != Model::Hyperbolic {
        return Err(Error::InvalidArgument("convex-core bound needs a hyperbolic germ".into()));
    }
    let k = germ.k_max_interior();
    if k >= T::one() - real::<T>(1e-9) {
        return Err(Error::InvalidArgument(
            "convex-core bound needs an almost-Fuchsian germ (k_max < 1)".into(),
        ));
    }
    if germ.mesh.genus < 2 {
        return Err(Error::InvalidArgument("convex-core bound needs genus at least 2".into()));
    }
    Ok(convex_core_bound_formula(k, germ.area(), germ.mesh.genus))
}

/// The displayed closed form, exposed for monotonicity checks.
pub fn convex_core_bound_formula<T: Real>(k_max: T, area: T, genus: usize) -> T {
    let one = T::one();
    let two = real::<T>(2.0);
    let half = real::<T>(0.5);
    if k_max == T::zero() {
        return T::zero();
    }
    let denom = one - k_max * k_max;
    let euler_area = two * T::PI() * real::<T>(2.0 * genus as f64 - 2.0);
    two * k_max / denom * area
        - euler_area * (k_max / denom + half * ((one + k_max) / (one - k_max)).ln())
}

/// One sample of the reduced Hamiltonian of an AdS maximal germ.
#[derive(Clone, Debug)]
pub struct HamiltonianSample<T> {
    pub t: T,
    /// Direct quadrature of (cos^2 t k^2 - sin^2 t) against the germ area.
    pub direct: T,
    /// Closed form A_0 cos 2t + cos^2 t * (discrete integral of K).
    pub closed: T,
    /// Closed form with the Euler-characteristic value of the K integral.
    pub closed_euler: T,
    pub diff: T,
}

/// Reduced Hamiltonian along the AdS equidistant foliation. Using the
/// discrete curvature integral makes direct and closed forms agree to
/// rounding; the Euler form differs by the mesh Gauss-Bonnet residual.
pub fn ads_hamiltonian<T: Real>(germ: &SurfaceGerm<T>, t_values: &[T]) -> Result<Vec<HamiltonianSample<T>>> {
    if germ.setting != GeometrySetting::AdsMaximal {
        return Err(Error::InvalidArgument("the reduced Hamiltonian needs an AdS maximal germ".into()));
    }
    let area: T = germ.area();
    let k_int = germ.curvature_integral();
    let euler_term = real::<T>(2.0) * T::PI() * real::<T>(2.0 * germ.mesh.genus as f64 - 2.0);
    let k2_int: T = (0..germ.mesh.num_faces())
        .map(|f| germ.face_k[f] * germ.face_k[f] * germ.face_metric_area(f))
        .sum();
    Ok(t_values
        .iter()
        .map(|&t| {
            let (c2, s2) = (t.cos() * t.cos(), t.sin() * t.sin());
            let direct = c2 * k2_int - s2 * area;
            let closed = area * (real::<T>(2.0) * t).cos() + c2 * k_int;
            let closed_euler = area * (real::<T>(2.0) * t).cos() - c2 * euler_term;
            HamiltonianSample { t, direct, closed, closed_euler, diff: (direct - closed).abs() }
        })
        .collect())
}

/// Momentum field pi = II - 2 H I per face (traceless exactly at maximal
/// germs).
pub fn momentum<T: Real>(germ: &SurfaceGerm<T>) -> Vec<Mat2<T>> {
    let h = germ.mean_curvature;
    (0..germ.mesh.num_faces())
        .map(|f| {
            // II = h0 + H e^phi Id, so pi = h0 - H e^phi Id
            Mat2::from_quadratic(germ.face_t[f])
                .sub(&Mat2::identity().scale(h * germ.face_phi[f].exp()))
        })
        .collect()
}

/// Presymplectic pairing sum_f area_f tr(I^{-1} pi I^{-1} dI) with area_f the
/// germ area of the face. All matrices are read in the germ's face charts.
pub fn presymplectic_pairing<T: Real>(
    germ: &SurfaceGerm<T>,
    delta_i: &[Mat2<T>],
    pi: &[Mat2<T>],
) -> T {
    assert_eq!(delta_i.len(), germ.mesh.num_faces(), "delta I length mismatch");
    assert_eq!(pi.len(), germ.mesh.num_faces(), "momentum length mismatch");
    let mut total = T::zero();
    for f in 0..germ.mesh.num_faces() {
        let i_inv = Mat2::identity().scale((-germ.face_phi[f]).exp());
        let m = i_inv.mul(&pi[f]).mul(&i_inv).mul(&delta_i[f]);
        total += m.trace() * germ.face_metric_area(f);
    }
    total
}

/// Canonical cotangent pairing 2 * integral of (t dmu + conj), against the
/// background area form; `delta_mu` is the Beltrami differential of the
/// deformation per face. Normalized to agree with `presymplectic_pairing`.
pub fn canonical_pairing<T: Real>(germ: &SurfaceGerm<T>, delta_mu: &[Cplx<T>]) -> T {
    assert_eq!(delta_mu.len(), germ.mesh.num_faces(), "delta mu length mismatch");
    let four = real::<T>(4.0);
    (0..germ.mesh.num_faces())
        .map(|f| four * (germ.face_t[f] * delta_mu[f]).re * germ.mesh.face_areas()[f])
        .sum()
}

/// Finite-difference variation data for the two-parameter torus family
/// (tau, c): germs at (tau +- eps dtau, c +- eps dc) are built on the same
/// combinatorial grid, their metrics pulled back to fixed marker coordinates
/// and central-differenced, then pushed to the base face charts.
#[derive(Clone)]
pub struct TorusFamilyDelta<T> {
    pub germ: SurfaceGerm<T>,
    pub pi: Vec<Mat2<T>>,
    pub delta_i: Vec<Mat2<T>>,
    /// Beltrami differential of the complex-structure variation:
    /// i dtau / (2 Im tau), constant over the torus.
    pub delta_mu: Cplx<T>,
}

pub fn torus_family_delta<T: Real>(
    setting: GeometrySetting<T>,
    tau: Cplx<T>,
    c: Cplx<T>,
    dtau: Cplx<T>,
    dc: Cplx<T>,
    eps: T,
    refinement: usize,
    opts: &crate::gauss::SolveOptions<T>,
) -> Result<TorusFamilyDelta<T>> {
    let germ_at = |tau_v: Cplx<T>, c_v: Cplx<T>| -> Result<SurfaceGerm<T>> {
        let (mesh, hqd) = crate::background::torus_background(tau_v, c_v, refinement)?;
        let mesh = std::sync::Arc::new(mesh);
        let problem = crate::gauss::assemble(setting, &mesh, &hqd)?;
        let sol = crate::gauss::solve(&problem, None, opts)?;
        crate::germ::assemble_germ(&sol, &problem)
    };

    // marker chart map z = x + tau y
    let jac = |tau_v: Cplx<T>| Mat2::new(T::one(), tau_v.re, T::zero(), tau_v.im);

    let base = germ_at(tau, c)?;
    let plus = germ_at(tau + dtau * eps, c + dc * eps)?;
    let minus = germ_at(tau - dtau * eps, c - dc * eps)?;

    let j0 = jac(tau);
    let j0_inv = j0.inverse().expect("Im tau > 0");
    let jp = jac(tau + dtau * eps);
    let jm = jac(tau - dtau * eps);

    let nf = base.mesh.num_faces();
    let mut delta_i = Vec::with_capacity(nf);
    for f in 0..nf {
        let gp = jp
            .transpose()
            .mul(&Mat2::identity().scale(plus.face_phi[f].exp()))
            .mul(&jp);
        let gm = jm
            .transpose()
            .mul(&Mat2::identity().scale(minus.face_phi[f].exp()))
            .mul(&jm);
        let d_marker = gp.sub(&gm).scale((real::<T>(2.0) * eps).recip());
        // back to the base face chart
        delta_i.push(j0_inv.transpose().mul(&d_marker).mul(&j0_inv));
    }

    let pi = momentum(&base);
    let delta_mu = Cplx::new(T::zero(), T::one()) * dtau / real::<T>(2.0) / tau.im;
    Ok(TorusFamilyDelta { germ: base, pi, delta_i, delta_mu })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::background::torus_background;
    use crate::gauss::{assemble, solve, SolveOptions};
    use std::sync::Arc;

    fn ads_torus_germ(c: f64) -> SurfaceGerm<f64> {
        let (mesh, hqd) = torus_background(Cplx::new(0.0, 1.0), Cplx::new(c, 0.0), 3).unwrap();
        let mesh = Arc::new(mesh);
        let problem = assemble(GeometrySetting::AdsMaximal, &mesh, &hqd).unwrap();
        let sol = solve(&problem, None, &SolveOptions::default()).unwrap();
        crate::germ::assemble_germ(&sol, &problem).unwrap()
    }

    #[test]
    fn foliation_reproduces_base_at_zero() {
        let germ = ads_torus_germ(1.0);
        let samples = foliate(&germ, &[0.0]);
        for f in 0..germ.mesh.num_faces() {
            let i = Mat2::identity().scale(germ.face_phi[f].exp());
            assert!(samples[0].metric[f].sub(&i).max_abs() < 1e-14);
            assert!(samples[0].shape[f].sub(&germ.face_b[f]).max_abs() < 1e-14);
        }
        assert!(samples[0].valid);
    }

    #[test]
    fn ads_unit_torus_folds_at_quarter_pi() {
        let germ = ads_torus_germ(1.0);
        let report = breakdown_radius(&germ);
        assert!((report.validity_radius_future - std::f64::consts::FRAC_PI_4).abs() < 1e-9);
        // a sample exactly at the fold is flagged invalid
        let s = foliate(&germ, &[std::f64::consts::FRAC_PI_4]);
        assert!(!s[0].valid);
    }

    #[test]
    fn fock_block_matches_transport() {
        let germ = ads_torus_germ(0.7);
        for &r in &[0.0, 0.2, -0.35] {
            for f in [0usize, 3, 11] {
                let block = fock_eval(&germ, f, r).unwrap();
                let i = Mat2::identity().scale(germ.face_phi[f].exp());
                let (i_r, _, _) = transport_face(Model::AntiDeSitter, &i, &germ.face_b[f], r);
                assert!(
                    block.tangential.sub(&i_r).max_abs() < 1e-12,
                    "fock block disagrees with transport at r = {r}"
                );
                assert_eq!(block.radial, -1.0);
            }
        }
    }

    #[test]
    fn conformal_direction_pairs_to_zero() {
        let germ = ads_torus_germ(1.0);
        let pi = momentum(&germ);
        // delta I = phi * I with an arbitrary face profile
        let delta: Vec<Mat2<f64>> = (0..germ.mesh.num_faces())
            .map(|f| Mat2::identity().scale(germ.face_phi[f].exp() * (0.3 + 0.1 * f as f64)))
            .collect();
        let theta = presymplectic_pairing(&germ, &delta, &pi);
        assert!(theta.abs() < 1e-12);
    }

    #[test]
    fn pairing_is_bilinear() {
        let germ = ads_torus_germ(1.0);
        let pi = momentum(&germ);
        let mk = |s: f64| -> Vec<Mat2<f64>> {
            (0..germ.mesh.num_faces())
                .map(|f| Mat2::new(s * (f as f64 + 1.0), 0.2 * s, 0.2 * s, -s))
                .collect()
        };
        let a = mk(1.0);
        let b = mk(-0.7);
        let ab: Vec<Mat2<f64>> = a.iter().zip(&b).map(|(x, y)| x.add(y)).collect();
        let lhs = presymplectic_pairing(&germ, &ab, &pi);
        let rhs = presymplectic_pairing(&germ, &a, &pi) + presymplectic_pairing(&germ, &b, &pi);
        assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()));
    }
}
