//! Assembly and solution of the unified discrete Gauss equation
//!
//!   (L u)_v + Omega_v = a A_v e^{2 u_v} + b Q_v e^{-2 u_v}
//!
//! for the conformal factor u of a surface germ, with the coefficient pair
//! (a, b) selecting the ambient geometry:
//!
//!   hyperbolic minimal      (-1,    -1)
//!   hyperbolic CMC-H        (H^2-1, -1)
//!   AdS maximal             (-1,    +1)
//!   AdS CMC-H, |H| < 1      (H^2-1, +1)
//!   de Sitter CMC-H, H > 1  (1-H^2, +1)
//!   Minkowski CMC-H, H > 0  (-H^2,  +1)
//!
//! L is the positive-Laplacian stiffness matrix, Omega the integrated
//! background curvature minus the cone-angle sources, A the lumped mass and
//! Q the |t|^2 weights. Critical points of
//!
//!   F(u) = 1/2 u L u + Omega.u - (a/2) sum A e^{2u} + (b/2) sum Q e^{-2u}
//!
//! are exactly the solutions; for a <= 0, b >= 0 (all Lorentzian settings)
//! F is strictly convex and Newton with backtracking converges to the unique
//! minimizer. The hyperbolic family (b < 0) is non-convex and is safeguarded
//! by a Levenberg shift when the Hessian loses positivity.

use crate::background::HqdField;
use crate::error::{Error, Result};
use crate::mesh::{angle_defects, cotan_laplacian, ConeMesh};
use crate::scalar::{real, Real};
use crate::sparse::{EnvelopeCholesky, SparseOperator};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// Ambient model geometry of a setting.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Model {
    Hyperbolic,
    AntiDeSitter,
    DeSitter,
    Minkowski,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GeometrySetting<T> {
    HypMinimal,
    HypCmc(T),
    AdsMaximal,
    AdsCmc(T),
    DsCmc(T),
    MinkCmc(T),
}

impl<T: Real> GeometrySetting<T> {
    pub fn validate(&self) -> Result<()> {
        match *self {
            GeometrySetting::AdsCmc(h) if h.abs() >= T::one() => Err(Error::InvalidArgument(
                format!("AdS CMC requires |H| < 1, got H = {h}"),
            )),
            GeometrySetting::DsCmc(h) if h <= T::one() => Err(Error::InvalidArgument(
                format!("de Sitter CMC requires H > 1, got H = {h}"),
            )),
            GeometrySetting::MinkCmc(h) if h <= T::zero() => Err(Error::InvalidArgument(
                format!("Minkowski CMC requires H > 0, got H = {h}"),
            )),
            _ => Ok(()),
        }
    }

    /// Coefficient pair (a, b) of the unified equation.
    pub fn coefficients(&self) -> (T, T) {
        let one = T::one();
        match *self {
            GeometrySetting::HypMinimal => (-one, -one),
            GeometrySetting::HypCmc(h) => (h * h - one, -one),
            GeometrySetting::AdsMaximal => (-one, one),
            GeometrySetting::AdsCmc(h) => (h * h - one, one),
            GeometrySetting::DsCmc(h) => (one - h * h, one),
            GeometrySetting::MinkCmc(h) => (-h * h, one),
        }
    }

    pub fn mean_curvature(&self) -> T {
        match *self {
            GeometrySetting::HypMinimal | GeometrySetting::AdsMaximal => T::zero(),
            GeometrySetting::HypCmc(h)
            | GeometrySetting::AdsCmc(h)
            | GeometrySetting::DsCmc(h)
            | GeometrySetting::MinkCmc(h) => h,
        }
    }

    pub fn model(&self) -> Model {
        match self {
            GeometrySetting::HypMinimal | GeometrySetting::HypCmc(_) => Model::Hyperbolic,
            GeometrySetting::AdsMaximal | GeometrySetting::AdsCmc(_) => Model::AntiDeSitter,
            GeometrySetting::DsCmc(_) => Model::DeSitter,
            GeometrySetting::MinkCmc(_) => Model::Minkowski,
        }
    }

    /// Gauss equation of the model: intrinsic curvature from det B.
    pub fn curvature_from_det_b(&self, det_b: T) -> T {
        match self.model() {
            Model::Hyperbolic => det_b - T::one(),
            Model::AntiDeSitter => -T::one() - det_b,
            Model::DeSitter => T::one() - det_b,
            Model::Minkowski => -det_b,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            GeometrySetting::HypMinimal => "hyp-min",
            GeometrySetting::HypCmc(_) => "hyp-cmc",
            GeometrySetting::AdsMaximal => "ads-max",
            GeometrySetting::AdsCmc(_) => "ads-cmc",
            GeometrySetting::DsCmc(_) => "ds-cmc",
            GeometrySetting::MinkCmc(_) => "mink-cmc",
        }
    }

    pub fn from_tag(tag: &str, h: T) -> Result<Self> {
        let s = match tag {
            "hyp-min" => GeometrySetting::HypMinimal,
            "hyp-cmc" => GeometrySetting::HypCmc(h),
            "ads-max" => GeometrySetting::AdsMaximal,
            "ads-cmc" => GeometrySetting::AdsCmc(h),
            "ds-cmc" => GeometrySetting::DsCmc(h),
            "mink-cmc" => GeometrySetting::MinkCmc(h),
            other => {
                return Err(Error::InvalidArgument(format!("unknown setting '{other}'")));
            }
        };
        s.validate()?;
        Ok(s)
    }
}

/// Assembled discrete problem.
#[derive(Clone)]
pub struct GaussProblem<T> {
    pub setting: GeometrySetting<T>,
    pub mesh: Arc<ConeMesh<T>>,
    pub stiffness: SparseOperator<T>,
    /// Curvature source Omega_v: background defect, minus (2 pi - theta) at
    /// marked vertices.
    pub source: Vec<T>,
    pub mass: Vec<T>,
    pub weight: Vec<T>,
    pub hqd: HqdField<T>,
    /// True when the energy is convex: a <= 0 and (b >= 0 or Q identically 0).
    pub convex: bool,
}

#[derive(Clone, Debug)]
pub struct Solution<T> {
    pub u: Vec<T>,
    /// Converged L-infinity norm of the mass-normalized equation residual.
    pub residual: T,
    pub iterations: usize,
    /// Smallest eigenvalue of the Hessian pencil
    /// (L + diag(-2aA e^{2u} + 2bQ e^{-2u}), diag(A)).
    pub hessian_lambda_min: T,
    pub converged: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions<T> {
    pub tol: T,
    pub max_iter: usize,
    pub compute_lambda_min: bool,
}

impl<T: Real> Default for SolveOptions<T> {
    fn default() -> Self {
        SolveOptions {
            tol: real::<T>(1e-10),
            max_iter: 100,
            compute_lambda_min: true,
        }
    }
}

/// Assemble the discrete problem for a setting on a mesh with a differential
/// field. Rejects first-order poles at cone angles above pi, and Fuchsian
/// hyperbolic data violating the angle (Troyanov) inequality.
pub fn assemble<T: Real>(
    setting: GeometrySetting<T>,
    mesh: &Arc<ConeMesh<T>>,
    hqd: &HqdField<T>,
) -> Result<GaussProblem<T>> {
    setting.validate()?;
    hqd.validate(mesh)?;

    let pi = T::PI();
    let two_pi = real::<T>(2.0) * pi;
    for m in &hqd.marks {
        if m.pole_order == 1 {
            match mesh.marked_theta(m.vertex) {
                Some(theta) if theta <= pi => {}
                Some(theta) => {
                    return Err(Error::Infeasible(format!(
                        "a first-order pole requires cone angle at most pi, got theta = {theta}; \
                         use the dual (third-fundamental-form) description for large angles"
                    )));
                }
                None => {
                    return Err(Error::Infeasible(
                        "a first-order pole must sit at a marked vertex".into(),
                    ));
                }
            }
        }
    }

    let mut source = angle_defects(mesh);
    for m in &mesh.marked {
        source[m.vertex] -= two_pi - m.theta;
    }

    let (a, b) = setting.coefficients();
    let q_zero = hqd.is_zero();
    // Fuchsian feasibility: with Q = 0 the integrated equation reads
    // a * area = sum Omega, so the signs must agree.
    if q_zero && b < T::zero() {
        let total: T = source.iter().copied().sum();
        if a < T::zero() && total >= T::zero() {
            return Err(Error::Infeasible(format!(
                "angle condition violated: sum of curvature sources is {total:e} >= 0 \
                 but the equation needs a negative total (a = {a})"
            )));
        }
        if a > T::zero() && total <= T::zero() {
            return Err(Error::Infeasible(format!(
                "angle condition violated: sum of curvature sources is {total:e} <= 0 \
                 but the equation needs a positive total (a = {a})"
            )));
        }
    }

    Ok(GaussProblem {
        setting,
        mesh: mesh.clone(),
        stiffness: cotan_laplacian(mesh),
        source,
        mass: mesh.vertex_mass().to_vec(),
        weight: hqd.vertex_q.clone(),
        hqd: hqd.clone(),
        convex: a <= T::zero() && (b >= T::zero() || q_zero),
    })
}

impl<T: Real> GaussProblem<T> {
    pub fn num_vertices(&self) -> usize {
        self.mass.len()
    }

    pub fn total_source(&self) -> T {
        self.source.iter().copied().sum()
    }

    pub fn energy(&self, u: &[T]) -> T {
        let (a, b) = self.setting.coefficients();
        let half = real::<T>(0.5);
        let mut f = half * self.stiffness.quadratic_form(u);
        for v in 0..u.len() {
            f += self.source[v] * u[v];
            f -= half * a * self.mass[v] * (real::<T>(2.0) * u[v]).exp();
            f += half * b * self.weight[v] * (real::<T>(-2.0) * u[v]).exp();
        }
        f
    }

    pub fn gradient(&self, u: &[T]) -> Vec<T> {
        let (a, b) = self.setting.coefficients();
        let mut g = self.stiffness.apply(u);
        for v in 0..u.len() {
            g[v] += self.source[v]
                - a * self.mass[v] * (real::<T>(2.0) * u[v]).exp()
                - b * self.weight[v] * (real::<T>(-2.0) * u[v]).exp();
        }
        g
    }

    /// Diagonal part added to the stiffness in the Hessian.
    pub fn hessian_diagonal(&self, u: &[T]) -> Vec<T> {
        let (a, b) = self.setting.coefficients();
        let two = real::<T>(2.0);
        (0..u.len())
            .map(|v| {
                -two * a * self.mass[v] * (two * u[v]).exp()
                    + two * b * self.weight[v] * (-two * u[v]).exp()
            })
            .collect()
    }

    /// Full Hessian as a sparse operator.
    pub fn hessian(&self, u: &[T]) -> SparseOperator<T> {
        let d = self.hessian_diagonal(u);
        let mut all = Vec::with_capacity(self.stiffness.values.len() + d.len());
        for i in 0..self.stiffness.n {
            for k in self.stiffness.row_ptr[i]..self.stiffness.row_ptr[i + 1] {
                all.push((i, self.stiffness.col_idx[k], self.stiffness.values[k]));
            }
        }
        for (v, &x) in d.iter().enumerate() {
            all.push((v, v, x));
        }
        SparseOperator::from_triplets(d.len(), &all)
    }

    pub fn residual_norm(&self, u: &[T]) -> T {
        self.gradient(u)
            .iter()
            .zip(&self.mass)
            .map(|(&g, &m)| (g / m).abs())
            .fold(T::zero(), |acc, x| acc.max(x))
    }
}

/// Newton iteration with Armijo backtracking (factor 1/2, c = 1e-4) and a
/// Levenberg diagonal shift whenever the Hessian fails to factor.
pub fn solve<T: Real>(
    problem: &GaussProblem<T>,
    init: Option<&[T]>,
    opts: &SolveOptions<T>,
) -> Result<Solution<T>> {
    let n = problem.num_vertices();
    let (a, b) = problem.setting.coefficients();

    // integrated identity: a.area_u + b.sum Q e^{-2u} = sum Omega; both terms
    // are negative in the hyperbolic family, so a non-negative total source
    // has no solution at all.
    if a < T::zero() && b < T::zero() && problem.total_source() >= T::zero() {
        return Err(Error::Infeasible(
            "integrated identity is unsatisfiable: both area terms are negative \
             but the total curvature source is non-negative"
                .into(),
        ));
    }

    let mut u: Vec<T> = match init {
        Some(u0) => {
            if u0.len() != n {
                return Err(Error::InvalidArgument("initial field length mismatch".into()));
            }
            u0.to_vec()
        }
        None => vec![T::zero(); n],
    };

    let armijo_c = real::<T>(1e-4);
    let mut f = problem.energy(&u);
    if !f.is_finite() {
        return Err(Error::InvalidArgument("initial energy is not finite".into()));
    }
    let mut g = problem.gradient(&u);
    let mut residual = problem.residual_norm(&u);
    let mut iterations = 0usize;

    while residual > opts.tol && iterations < opts.max_iter {
        iterations += 1;
        let hdiag = problem.hessian_diagonal(&u);
        let dscale = hdiag
            .iter()
            .zip(&problem.mass)
            .map(|(&h, &m)| (h / m).abs())
            .fold(T::one(), |acc, x| acc.max(x));

        let mut mu = T::zero();
        let mut step: Option<Vec<T>> = None;
        for _try in 0..60 {
            let extra: Vec<T> = hdiag
                .iter()
                .zip(&problem.mass)
                .map(|(&h, &m)| h + mu * m)
                .collect();
            match EnvelopeCholesky::factor(&problem.stiffness, Some(&extra)) {
                Ok(chol) => {
                    let rhs: Vec<T> = g.iter().map(|&x| -x).collect();
                    let delta = chol.solve(&rhs);
                    // Armijo on F; the shifted direction is always descent
                    let gdot: T = g.iter().zip(&delta).map(|(&gi, &di)| gi * di).sum();
                    let mut lambda = T::one();
                    let mut accepted = false;
                    for _ls in 0..60 {
                        let trial: Vec<T> = u
                            .iter()
                            .zip(&delta)
                            .map(|(&ui, &di)| ui + lambda * di)
                            .collect();
                        let ft = problem.energy(&trial);
                        if ft.is_finite() && ft <= f + armijo_c * lambda * gdot {
                            u = trial;
                            f = ft;
                            accepted = true;
                            break;
                        }
                        lambda = lambda * real::<T>(0.5);
                    }
                    if accepted {
                        step = Some(delta);
                        break;
                    }
                    // line search failed: steepen the model
                    mu = if mu == T::zero() {
                        real::<T>(1e-8) * dscale
                    } else {
                        mu * real::<T>(10.0)
                    };
                }
                Err(_) => {
                    mu = if mu == T::zero() {
                        real::<T>(1e-8) * dscale
                    } else {
                        mu * real::<T>(10.0)
                    };
                }
            }
        }
        if step.is_none() {
            return Err(Error::NoConvergence {
                iterations,
                residual: residual.to_f64().unwrap_or(f64::NAN),
            });
        }
        g = problem.gradient(&u);
        residual = problem.residual_norm(&u);
    }

    if residual > opts.tol {
        return Err(Error::NoConvergence {
            iterations,
            residual: residual.to_f64().unwrap_or(f64::NAN),
        });
    }

    let lambda_min = if opts.compute_lambda_min {
        let h = problem.hessian(&u);
        crate::eigen::smallest_generalized(&h, &problem.mass, 1)?[0]
    } else {
        T::nan()
    };

    Ok(Solution {
        u,
        residual,
        iterations,
        hessian_lambda_min: lambda_min,
        converged: true,
    })
}

/// k smallest generalized eigenvalues of the Hessian against the lumped mass,
/// ascending. lambda_min > 0 flags a stable, locally unique germ; a vanishing
/// lambda_min flags a fold.
pub fn stability_spectrum<T: Real>(
    problem: &GaussProblem<T>,
    solution: &Solution<T>,
    k: usize,
) -> Result<Vec<T>> {
    if !solution.converged {
        return Err(Error::InvalidArgument(
            "stability spectrum needs a converged solution".into(),
        ));
    }
    let h = problem.hessian(&solution.u);
    crate::eigen::smallest_generalized(&h, &problem.mass, k)
}

/// Fold detection threshold: 1e-6 times the median lumped mass.
pub fn fold_threshold<T: Real>(mesh: &ConeMesh<T>) -> T {
    let mut m = mesh.vertex_mass().to_vec();
    m.sort_by(|a, b| a.partial_cmp(b).unwrap());
    real::<T>(1e-6) * m[m.len() / 2]
}

#[derive(Clone, Debug)]
pub struct BranchPoint<T> {
    pub scale: T,
    pub solution: Solution<T>,
    /// Maximum principal-curvature deviation over faces away from poles.
    pub k_max: T,
    /// Integral of k against the germ area form; equals the background
    /// integral of |t| and bounds the feasible hyperbolic branch.
    pub af_integral: T,
    pub lambda_min: T,
}

#[derive(Clone, Debug)]
pub struct FoldReport<T> {
    pub scale: T,
    pub reason: FoldReason,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FoldReason {
    NewtonFailed,
    LambdaMinVanished,
    Infeasible,
}

#[derive(Clone, Debug)]
pub struct BranchReport<T> {
    pub points: Vec<BranchPoint<T>>,
    pub fold: Option<FoldReport<T>>,
}

/// Corner-averaged conformal exponent phi = 2u per face.
pub fn face_phi<T: Real>(mesh: &ConeMesh<T>, u: &[T]) -> Vec<T> {
    let third = real::<T>(2.0 / 3.0);
    mesh.faces
        .iter()
        .map(|f| (u[f.v[0]] + u[f.v[1]] + u[f.v[2]]) * third)
        .collect()
}

/// Faces incident to a first-order-pole vertex; excluded from interior
/// curvature maxima.
pub fn pole_faces<T: Real>(mesh: &ConeMesh<T>, hqd: &HqdField<T>) -> Vec<bool> {
    let poles: Vec<usize> = hqd
        .marks
        .iter()
        .filter(|m| m.pole_order == 1)
        .map(|m| m.vertex)
        .collect();
    mesh.faces
        .iter()
        .map(|f| f.v.iter().any(|v| poles.contains(v)))
        .collect()
}

/// Warm-started solves along s -> s*t over an ascending scale grid, stopping
/// with a fold report when Newton fails or the stability margin vanishes.
pub fn continuation<T: Real>(
    setting: GeometrySetting<T>,
    mesh: &Arc<ConeMesh<T>>,
    hqd: &HqdField<T>,
    s_grid: &[T],
    opts: &SolveOptions<T>,
) -> Result<BranchReport<T>> {
    if s_grid.is_empty() {
        return Err(Error::InvalidArgument("empty scale grid".into()));
    }
    for w in s_grid.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::InvalidArgument("scale grid must be ascending".into()));
        }
    }
    if setting.model() == Model::Hyperbolic && s_grid[0].abs() > real::<T>(1e-15) {
        return Err(Error::InvalidArgument(
            "hyperbolic continuation must start at scale 0".into(),
        ));
    }

    let eps_fold = fold_threshold(mesh);
    let mut points: Vec<BranchPoint<T>> = Vec::new();
    let mut fold = None;
    let mut warm: Option<Vec<T>> = None;

    for &s in s_grid {
        let field = crate::background::scale_hqd(hqd, s)?.field();
        let problem = match assemble(setting, mesh, &field) {
            Ok(p) => p,
            Err(Error::Infeasible(_)) => {
                fold = Some(FoldReport { scale: s, reason: FoldReason::Infeasible });
                break;
            }
            Err(e) => return Err(e),
        };
        match solve(&problem, warm.as_deref(), opts) {
            Ok(sol) => {
                let phi = face_phi(mesh, &sol.u);
                let excluded = pole_faces(mesh, &field);
                let mut k_max = T::zero();
                let mut af = T::zero();
                for f in 0..mesh.num_faces() {
                    let k = (-phi[f]).exp() * field.face_t[f].norm();
                    if !excluded[f] {
                        k_max = k_max.max(k);
                    }
                    af += field.face_t[f].norm() * mesh.face_areas()[f];
                }
                let lambda_min = sol.hessian_lambda_min;
                warm = Some(sol.u.clone());
                points.push(BranchPoint {
                    scale: s,
                    solution: sol,
                    k_max,
                    af_integral: af,
                    lambda_min,
                });
                if lambda_min < eps_fold {
                    fold = Some(FoldReport { scale: s, reason: FoldReason::LambdaMinVanished });
                    break;
                }
            }
            Err(Error::NoConvergence { .. }) | Err(Error::Eigen(_)) => {
                fold = Some(FoldReport { scale: s, reason: FoldReason::NewtonFailed });
                break;
            }
            Err(Error::Infeasible(_)) => {
                fold = Some(FoldReport { scale: s, reason: FoldReason::Infeasible });
                break;
            }
            Err(e) => return Err(e),
        }
    }

    Ok(BranchReport { points, fold })
}

/// Solve from `n` random initial fields; returns the solutions and the
/// largest pairwise L-infinity disagreement of the solved fields.
pub fn multistart<T: Real>(
    problem: &GaussProblem<T>,
    n: usize,
    seed: u64,
    opts: &SolveOptions<T>,
) -> Result<(Vec<Solution<T>>, T)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nv = problem.num_vertices();
    let mut sols = Vec::with_capacity(n);
    for _ in 0..n {
        let init: Vec<T> = (0..nv).map(|_| real::<T>(rng.gen_range(-1.0..1.0))).collect();
        sols.push(solve(problem, Some(&init), opts)?);
    }
    let mut spread = T::zero();
    for i in 0..sols.len() {
        for j in (i + 1)..sols.len() {
            let d = sols[i]
                .u
                .iter()
                .zip(&sols[j].u)
                .map(|(&x, &y)| (x - y).abs())
                .fold(T::zero(), |acc, x| acc.max(x));
            spread = spread.max(d);
        }
    }
    Ok((sols, spread))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::background::torus_background;
    use crate::scalar::Cplx;

    fn ads_torus(c: f64, refinement: usize) -> (Arc<ConeMesh<f64>>, HqdField<f64>) {
        let (mesh, hqd) = torus_background(Cplx::new(0.0, 1.0), Cplx::new(c, 0.0), refinement).unwrap();
        (Arc::new(mesh), hqd)
    }

    #[test]
    fn coefficient_table() {
        assert_eq!(GeometrySetting::<f64>::HypMinimal.coefficients(), (-1.0, -1.0));
        assert_eq!(GeometrySetting::HypCmc(0.5).coefficients(), (-0.75, -1.0));
        assert_eq!(GeometrySetting::<f64>::AdsMaximal.coefficients(), (-1.0, 1.0));
        assert_eq!(GeometrySetting::AdsCmc(0.5).coefficients(), (-0.75, 1.0));
        assert_eq!(GeometrySetting::DsCmc(2.0).coefficients(), (-3.0, 1.0));
        assert_eq!(GeometrySetting::MinkCmc(2.0).coefficients(), (-4.0, 1.0));
    }

    #[test]
    fn setting_preconditions() {
        assert!(GeometrySetting::DsCmc(1.0).validate().is_err());
        assert!(GeometrySetting::AdsCmc(1.0).validate().is_err());
        assert!(GeometrySetting::MinkCmc(0.0).validate().is_err());
        assert!(GeometrySetting::DsCmc(1.5).validate().is_ok());
    }

    #[test]
    fn ads_torus_constant_solution() {
        let (mesh, hqd) = ads_torus(2.0, 3);
        let problem = assemble(GeometrySetting::AdsMaximal, &mesh, &hqd).unwrap();
        assert!(problem.convex);
        let sol = solve(&problem, None, &SolveOptions::default()).unwrap();
        let expect = 0.5 * 2.0f64.ln();
        for &u in &sol.u {
            assert!((u - expect).abs() < 1e-10);
        }
        assert!(sol.hessian_lambda_min > 0.0);
    }

    #[test]
    fn hyperbolic_torus_with_t_is_infeasible() {
        let (mesh, hqd) = ads_torus(1.0, 2);
        let problem = assemble(GeometrySetting::HypMinimal, &mesh, &hqd).unwrap();
        match solve(&problem, None, &SolveOptions::default()) {
            Err(Error::Infeasible(_)) => {}
            other => panic!("expected infeasibility, got {other:?}"),
        }
    }

    #[test]
    fn fuchsian_torus_rejected_at_assembly() {
        let (mesh, hqd) = ads_torus(0.0, 2);
        match assemble(GeometrySetting::HypMinimal, &mesh, &hqd) {
            Err(Error::Infeasible(_)) => {}
            other => panic!("expected Troyanov rejection, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn marked_source_sums() {
        // torus, two marks theta = pi, t = 0: sum Omega = -2 pi
        let (mesh, hqd, _) = crate::background::torus_marked_background(
            Cplx::new(0.0, 1.0),
            Cplx::new(0.0, 0.0),
            &[
                (Cplx::new(0.25, 0.25), std::f64::consts::PI),
                (Cplx::new(0.75, 0.75), std::f64::consts::PI),
            ],
            3,
            1.5,
        )
        .unwrap();
        let mesh = Arc::new(mesh);
        let problem = assemble(GeometrySetting::HypMinimal, &mesh, &hqd).unwrap();
        assert!((problem.total_source() + 2.0 * std::f64::consts::PI).abs() < 1e-9);
    }

    #[test]
    fn energy_gradient_consistency() {
        // finite differences of F match the assembled gradient
        let (mesh, hqd) = ads_torus(1.3, 2);
        let problem = assemble(GeometrySetting::AdsMaximal, &mesh, &hqd).unwrap();
        let n = problem.num_vertices();
        let u: Vec<f64> = (0..n).map(|i| 0.1 * ((i as f64) * 0.7).sin()).collect();
        let g = problem.gradient(&u);
        let h = 1e-6;
        for v in (0..n).step_by(5) {
            let mut up = u.clone();
            let mut um = u.clone();
            up[v] += h;
            um[v] -= h;
            let fd = (problem.energy(&up) - problem.energy(&um)) / (2.0 * h);
            assert!(
                (fd - g[v]).abs() < 1e-5 * (1.0 + g[v].abs()),
                "vertex {v}: fd {fd} vs grad {}",
                g[v]
            );
        }
    }
}
