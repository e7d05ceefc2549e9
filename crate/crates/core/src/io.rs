//! On-disk JSON forms of meshes, differential fields, solutions, germs and
//! derived metrics. The structures mirror the artifact schemas exactly;
//! loaders re-run the type invariants.

use crate::background::{HqdField, HqdMark};
use crate::error::{Error, Result};
use crate::gauss::{GeometrySetting, Solution};
use crate::germ::SurfaceGerm;
use crate::mat2::Mat2;
use crate::mesh::{ConeMesh, Face, Gluing, MarkedVertex};
use crate::scalar::{real, Cplx, Real};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct MeshJson {
    pub genus: usize,
    pub faces: Vec<FaceJson>,
    pub gluings: Vec<GluingJson>,
    pub marked: Vec<MarkJson>,
}

#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct FaceJson {
    pub v: [usize; 3],
    pub chart: [[f64; 2]; 3],
}

#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct GluingJson {
    pub face_a: usize,
    pub edge_a: usize,
    pub face_b: usize,
    pub edge_b: usize,
    pub rot_half_turns: i32,
    pub shift: [f64; 2],
}

#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct MarkJson {
    pub v: usize,
    pub theta: f64,
}

pub fn mesh_to_json<T: Real>(mesh: &ConeMesh<T>) -> MeshJson {
    let f64of = |x: T| x.to_f64().expect("scalar fits f64");
    MeshJson {
        genus: mesh.genus,
        faces: mesh
            .faces
            .iter()
            .map(|f| FaceJson {
                v: f.v,
                chart: [
                    [f64of(f.chart[0][0]), f64of(f.chart[0][1])],
                    [f64of(f.chart[1][0]), f64of(f.chart[1][1])],
                    [f64of(f.chart[2][0]), f64of(f.chart[2][1])],
                ],
            })
            .collect(),
        gluings: mesh
            .gluings
            .iter()
            .map(|g| GluingJson {
                face_a: g.face_a,
                edge_a: g.edge_a,
                face_b: g.face_b,
                edge_b: g.edge_b,
                rot_half_turns: g.rot_half_turns,
                shift: [f64of(g.shift[0]), f64of(g.shift[1])],
            })
            .collect(),
        marked: mesh
            .marked
            .iter()
            .map(|m| MarkJson { v: m.vertex, theta: f64of(m.theta) })
            .collect(),
    }
}

pub fn mesh_from_json<T: Real>(json: &MeshJson) -> Result<ConeMesh<T>> {
    let t = |x: f64| real::<T>(x);
    let faces: Vec<Face<T>> = json
        .faces
        .iter()
        .map(|f| Face {
            v: f.v,
            chart: [
                [t(f.chart[0][0]), t(f.chart[0][1])],
                [t(f.chart[1][0]), t(f.chart[1][1])],
                [t(f.chart[2][0]), t(f.chart[2][1])],
            ],
        })
        .collect();
    let gluings = json
        .gluings
        .iter()
        .map(|g| Gluing {
            face_a: g.face_a,
            edge_a: g.edge_a,
            face_b: g.face_b,
            edge_b: g.edge_b,
            rot_half_turns: g.rot_half_turns,
            shift: [t(g.shift[0]), t(g.shift[1])],
        })
        .collect();
    let marked = json
        .marked
        .iter()
        .map(|m| MarkedVertex { vertex: m.v, theta: t(m.theta) })
        .collect();
    let mesh = ConeMesh::from_parts(faces, gluings, marked)?;
    if mesh.genus != json.genus {
        return Err(Error::Mesh(format!(
            "declared genus {} but Euler characteristic gives {}",
            json.genus, mesh.genus
        )));
    }
    Ok(mesh)
}

#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct HqdJson {
    pub faces: Vec<CplxJson>,
    pub marks: Vec<HqdMarkJson>,
}

#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct CplxJson {
    pub re: f64,
    pub im: f64,
}

#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct HqdMarkJson {
    pub v: usize,
    pub pole_order: u8,
    #[serde(default)]
    pub zero_order: u32,
    #[serde(default)]
    pub res_re: f64,
    #[serde(default)]
    pub res_im: f64,
}

pub fn hqd_to_json<T: Real>(hqd: &HqdField<T>) -> HqdJson {
    let f64of = |x: T| x.to_f64().expect("scalar fits f64");
    HqdJson {
        faces: hqd
            .face_t
            .iter()
            .map(|t| CplxJson { re: f64of(t.re), im: f64of(t.im) })
            .collect(),
        marks: hqd
            .marks
            .iter()
            .map(|m| HqdMarkJson {
                v: m.vertex,
                pole_order: m.pole_order,
                zero_order: m.zero_order,
                res_re: f64of(m.residue.re),
                res_im: f64of(m.residue.im),
            })
            .collect(),
    }
}

pub fn hqd_from_json<T: Real>(json: &HqdJson, mesh: &ConeMesh<T>) -> Result<HqdField<T>> {
    let face_t: Vec<Cplx<T>> = json
        .faces
        .iter()
        .map(|c| Cplx::new(real::<T>(c.re), real::<T>(c.im)))
        .collect();
    let marks: Vec<HqdMark<T>> = json
        .marks
        .iter()
        .map(|m| HqdMark {
            vertex: m.v,
            pole_order: m.pole_order,
            zero_order: m.zero_order,
            residue: Cplx::new(real::<T>(m.res_re), real::<T>(m.res_im)),
        })
        .collect();
    let hqd = HqdField::from_samples(mesh, face_t, marks)?;
    hqd.validate(mesh)?;
    Ok(hqd)
}

#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct SolutionJson {
    pub u: Vec<f64>,
    pub residual: f64,
    pub lambda_min: f64,
    pub iterations: usize,
    #[serde(default = "default_true")]
    pub converged: bool,
}

fn default_true() -> bool {
    true
}

pub fn solution_to_json<T: Real>(sol: &Solution<T>) -> SolutionJson {
    let f64of = |x: T| x.to_f64().unwrap_or(f64::NAN);
    SolutionJson {
        u: sol.u.iter().map(|&x| f64of(x)).collect(),
        residual: f64of(sol.residual),
        lambda_min: f64of(sol.hessian_lambda_min),
        iterations: sol.iterations,
        converged: sol.converged,
    }
}

pub fn solution_from_json<T: Real>(json: &SolutionJson) -> Solution<T> {
    Solution {
        u: json.u.iter().map(|&x| real::<T>(x)).collect(),
        residual: real::<T>(json.residual),
        iterations: json.iterations,
        hessian_lambda_min: real::<T>(json.lambda_min),
        converged: json.converged,
    }
}

#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct GermJson {
    pub setting: String,
    pub h: f64,
    pub faces: Vec<GermFaceJson>,
    /// e^{2u} per vertex; retained so a reloaded germ keeps vertex data.
    #[serde(default)]
    pub e2u: Vec<f64>,
}

#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct GermFaceJson {
    pub b: [[f64; 2]; 2],
    pub k: f64,
    pub phi: f64,
}

pub fn germ_to_json<T: Real>(germ: &SurfaceGerm<T>) -> GermJson {
    let f64of = |x: T| x.to_f64().expect("scalar fits f64");
    GermJson {
        setting: germ.setting.tag().to_string(),
        h: f64of(germ.mean_curvature),
        faces: (0..germ.mesh.num_faces())
            .map(|f| GermFaceJson {
                b: [
                    [f64of(germ.face_b[f].m[0][0]), f64of(germ.face_b[f].m[0][1])],
                    [f64of(germ.face_b[f].m[1][0]), f64of(germ.face_b[f].m[1][1])],
                ],
                k: f64of(germ.face_k[f]),
                phi: f64of(germ.face_phi[f]),
            })
            .collect(),
        e2u: germ.vertex_e2u.iter().map(|&x| f64of(x)).collect(),
    }
}

pub fn germ_from_json<T: Real>(json: &GermJson, mesh: Arc<ConeMesh<T>>) -> Result<SurfaceGerm<T>> {
    let setting = GeometrySetting::from_tag(&json.setting, real::<T>(json.h))?;
    let face_b: Vec<Mat2<T>> = json
        .faces
        .iter()
        .map(|f| {
            Mat2::new(
                real::<T>(f.b[0][0]),
                real::<T>(f.b[0][1]),
                real::<T>(f.b[1][0]),
                real::<T>(f.b[1][1]),
            )
        })
        .collect();
    let face_phi: Vec<T> = json.faces.iter().map(|f| real::<T>(f.phi)).collect();
    let e2u: Vec<T> = json.e2u.iter().map(|&x| real::<T>(x)).collect();
    let germ = crate::germ::germ_from_faces(mesh, setting, face_phi, face_b, e2u)?;
    germ.validate()?;
    Ok(germ)
}

#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct MetricJson {
    pub faces: Vec<[[f64; 2]; 2]>,
}

pub fn metric_to_json<T: Real>(m: &crate::teichmaps::Metric2Field<T>) -> MetricJson {
    let f64of = |x: T| x.to_f64().expect("scalar fits f64");
    MetricJson {
        faces: m
            .face_g
            .iter()
            .map(|g| {
                [
                    [f64of(g.m[0][0]), f64of(g.m[0][1])],
                    [f64of(g.m[1][0]), f64of(g.m[1][1])],
                ]
            })
            .collect(),
    }
}

#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct MorphismJson {
    pub faces: Vec<[[f64; 2]; 2]>,
}

pub fn morphism_to_json<T: Real>(m: &crate::teichmaps::MorphismField<T>) -> MorphismJson {
    let f64of = |x: T| x.to_f64().expect("scalar fits f64");
    MorphismJson {
        faces: m
            .face_b
            .iter()
            .map(|b| {
                [
                    [f64of(b.m[0][0]), f64of(b.m[0][1])],
                    [f64of(b.m[1][0]), f64of(b.m[1][1])],
                ]
            })
            .collect(),
    }
}

/// Diagnostics report in serializable form.
#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct ReportJson {
    pub k_max_interior: f64,
    pub k_max_near_marks: Option<f64>,
    pub almost_fuchsian: bool,
    pub af_integral: f64,
    pub gauss_bonnet_residual: f64,
    pub curvature_bound: Option<f64>,
    pub curvature_bound_satisfied: Option<bool>,
    pub hyperbolic_identity: Option<f64>,
    pub area: f64,
}

pub fn report_to_json<T: Real>(r: &crate::germ::GermReport<T>) -> ReportJson {
    let f64of = |x: T| x.to_f64().expect("scalar fits f64");
    ReportJson {
        k_max_interior: f64of(r.k_max_interior),
        k_max_near_marks: r.k_max_near_marks.map(f64of),
        almost_fuchsian: r.almost_fuchsian,
        af_integral: f64of(r.af_integral),
        gauss_bonnet_residual: f64of(r.gauss_bonnet_residual),
        curvature_bound: r.curvature_bound.map(|c| f64of(c.bound)),
        curvature_bound_satisfied: r.curvature_bound.map(|c| c.satisfied),
        hyperbolic_identity: r.hyperbolic_identity.map(f64of),
        area: f64of(r.area),
    }
}
