//! Benchmark functions and machine-learning problems with their known constants.

mod data;
mod functions;
mod ml;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use ndarray::{array, Array1, Array2};
use serde::{Deserialize, Serialize};

pub use data::{
    generate_blobs, generate_lasso_data, load_libsvm, parse_libsvm_str, rng_from_seed,
    to_libsvm_string, DataSource, Dataset, LassoData,
};
pub use functions::{AnisoQuad, PiecewiseQuadratic, QuadPiece, QuadQuartic, SineQuad};
pub use ml::{CompositeModel, SvmModel};

use crate::error::{Error, Result};
use crate::problem::{KnownConstants, ProblemSpec, SinglePoint};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BenchmarkId {
    /// f(x) = x²
    Quad1d,
    /// x² on |x| ≤ 1, ½x⁴ + ½ elsewhere
    QuadQuartic,
    /// x² + 6 sin²(x)
    SineQuad,
    /// −x² + 1 on (−1, −0.5), 3(x + 1)² elsewhere; 2-weakly convex
    WcPiecewise,
    /// ½(x₁² + L x₂²)
    AnisoQuad(f64),
}

impl BenchmarkId {
    pub fn all() -> [BenchmarkId; 5] {
        [
            BenchmarkId::Quad1d,
            BenchmarkId::QuadQuartic,
            BenchmarkId::SineQuad,
            BenchmarkId::WcPiecewise,
            BenchmarkId::AnisoQuad(9.0),
        ]
    }
}

impl fmt::Display for BenchmarkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BenchmarkId::Quad1d => write!(f, "quad1d"),
            BenchmarkId::QuadQuartic => write!(f, "quad_quartic"),
            BenchmarkId::SineQuad => write!(f, "sine_quad"),
            BenchmarkId::WcPiecewise => write!(f, "wc_piecewise"),
            BenchmarkId::AnisoQuad(l) => write!(f, "aniso_quad({l})"),
        }
    }
}

impl FromStr for BenchmarkId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "quad1d" => BenchmarkId::Quad1d,
            "quad_quartic" => BenchmarkId::QuadQuartic,
            "sine_quad" => BenchmarkId::SineQuad,
            "wc_piecewise" => BenchmarkId::WcPiecewise,
            other => {
                let inner = other
                    .strip_prefix("aniso_quad(")
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(|| Error::InvalidParams(format!("unknown benchmark `{other}`")))?;
                let l: f64 = inner
                    .parse()
                    .map_err(|_| Error::InvalidParams(format!("bad curvature in `{other}`")))?;
                if !(l > 0.0 && l.is_finite()) {
                    return Err(Error::InvalidParams("curvature must be positive".into()));
                }
                BenchmarkId::AnisoQuad(l)
            }
        })
    }
}

fn origin_solution(dim: usize) -> Option<Arc<dyn crate::problem::SolutionSet>> {
    Some(Arc::new(SinglePoint(Array1::zeros(dim))))
}

/// Constants implied by m-strong convexity alone; valid on the whole space.
fn strong_convexity_constants(m: f64) -> KnownConstants {
    KnownConstants {
        mu_s: Some(m / 2.0),
        mu_r: Some(m),
        mu_e: Some(1.0 / m),
        mu_p: Some(2.0 * m),
        mu_q: Some(m / 2.0),
        ..KnownConstants::default()
    }
}

pub(crate) fn wc_piecewise_function() -> PiecewiseQuadratic {
    let outer = |lo, hi| QuadPiece {
        lo,
        hi,
        a: 3.0,
        b: 6.0,
        c: 3.0,
    };
    PiecewiseQuadratic::new(vec![
        outer(f64::NEG_INFINITY, -1.0),
        QuadPiece {
            lo: -1.0,
            hi: -0.5,
            a: -1.0,
            b: 0.0,
            c: 1.0,
        },
        outer(-0.5, f64::INFINITY),
    ])
}

/// Build a benchmark with exact f★, solution oracle and the analytically known constants.
pub fn make_benchmark(id: BenchmarkId) -> ProblemSpec {
    let name = id.to_string();
    match id {
        BenchmarkId::Quad1d => {
            let f = PiecewiseQuadratic::new(vec![QuadPiece {
                lo: f64::NEG_INFINITY,
                hi: f64::INFINITY,
                a: 1.0,
                b: 0.0,
                c: 0.0,
            }]);
            ProblemSpec::new(name, Arc::new(f), 0.0)
                .with_smoothness(2.0)
                .with_strong_convexity(2.0)
                .with_optimum(0.0, origin_solution(1))
                .with_known(KnownConstants {
                    mu_s: Some(1.0),
                    mu_r: Some(2.0),
                    mu_e: Some(0.5),
                    mu_p: Some(4.0),
                    mu_q: Some(1.0),
                    pl_beta: Some(2.0),
                    eb_pl_fail_globally: false,
                    bracket: Some((-1.0, 1.0)),
                })
        }
        BenchmarkId::QuadQuartic => ProblemSpec::new(name, Arc::new(QuadQuartic), 0.0)
            .with_strong_convexity(2.0)
            .with_optimum(0.0, origin_solution(1))
            .with_known(KnownConstants {
                mu_s: Some(1.0),
                mu_r: Some(2.0),
                mu_e: Some(0.5),
                mu_p: Some(4.0),
                mu_q: Some(1.0),
                pl_beta: None,
                eb_pl_fail_globally: false,
                bracket: Some((-2.0, 2.0)),
            }),
        BenchmarkId::SineQuad => ProblemSpec::new(name, Arc::new(SineQuad), 10.0)
            .with_smoothness(14.0)
            .with_optimum(0.0, origin_solution(1))
            .with_known(KnownConstants {
                mu_q: Some(1.0),
                eb_pl_fail_globally: true,
                bracket: Some((-10.0, 10.0)),
                ..KnownConstants::default()
            }),
        BenchmarkId::WcPiecewise => ProblemSpec::new(name, Arc::new(wc_piecewise_function()), 2.0)
            .with_optimum(0.0, Some(Arc::new(SinglePoint(array![-1.0]))))
            .with_known(KnownConstants {
                mu_r: Some(2.0),
                mu_e: Some(0.5),
                mu_p: Some(4.0 / 3.0),
                mu_q: Some(3.0),
                bracket: Some((-2.0, 0.0)),
                ..KnownConstants::default()
            }),
        BenchmarkId::AnisoQuad(l) => {
            let m = l.min(1.0);
            ProblemSpec::new(name, Arc::new(AnisoQuad { curvature: l }), 0.0)
                .with_smoothness(l.max(1.0))
                .with_strong_convexity(m)
                .with_optimum(0.0, origin_solution(2))
                .with_known(KnownConstants {
                    pl_beta: Some(m),
                    bracket: Some((-1.0, 1.0)),
                    ..strong_convexity_constants(m)
                })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MlKind {
    Svm,
    Lasso,
    ElasticNet,
}

/// Regularization parameters of an ML problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlProblemParams {
    pub kind: MlKind,
    pub rho_svm: f64,
    pub lambda: f64,
    pub mu_en: f64,
}

impl MlProblemParams {
    pub fn svm(rho_svm: f64) -> Self {
        MlProblemParams {
            kind: MlKind::Svm,
            rho_svm,
            lambda: 0.0,
            mu_en: 0.0,
        }
    }

    pub fn lasso(lambda: f64) -> Self {
        MlProblemParams {
            kind: MlKind::Lasso,
            rho_svm: 0.0,
            lambda,
            mu_en: 0.0,
        }
    }

    pub fn elastic_net(lambda: f64, mu_en: f64) -> Self {
        MlProblemParams {
            kind: MlKind::ElasticNet,
            rho_svm: 0.0,
            lambda,
            mu_en,
        }
    }

    /// A quadratic regularizer is present.
    pub fn strongly_convex(&self) -> bool {
        matches!(self.kind, MlKind::Svm | MlKind::ElasticNet)
    }

    fn validate(&self) -> Result<()> {
        let positive = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParams(format!(
                    "{what} must be positive, got {v}"
                )))
            }
        };
        match self.kind {
            MlKind::Svm => positive(self.rho_svm, "rho_svm"),
            MlKind::Lasso => positive(self.lambda, "lambda"),
            MlKind::ElasticNet => {
                positive(self.lambda, "lambda")?;
                positive(self.mu_en, "mu_en")
            }
        }
    }
}

/// Data backing an ML problem.
#[derive(Debug, Clone)]
pub enum MlData {
    Classification(Dataset),
    Regression { a: Array2<f64>, y: Array1<f64> },
}

impl From<LassoData> for MlData {
    fn from(d: LassoData) -> Self {
        MlData::Regression { a: d.a, y: d.y }
    }
}

/// Assemble the SVM, lasso or elastic-net objective.
///
/// All three are convex. No solution oracle is attached; see
/// [`crate::ppm::reference_solution`].
pub fn make_ml_problem(params: MlProblemParams, data: MlData) -> Result<ProblemSpec> {
    params.validate()?;
    match (params.kind, data) {
        (MlKind::Svm, MlData::Classification(ds)) => {
            ds.validate_classification()?;
            let model = SvmModel {
                features: ds.features,
                labels: ds.labels,
                rho: params.rho_svm,
            };
            Ok(ProblemSpec::new("svm", Arc::new(model), 0.0)
                .with_strong_convexity(params.rho_svm)
                .with_known(strong_convexity_constants(params.rho_svm)))
        }
        (MlKind::Lasso | MlKind::ElasticNet, MlData::Regression { a, y }) => {
            if a.nrows() != y.len() {
                return Err(Error::BadShape(format!(
                    "A has {} rows but y has length {}",
                    a.nrows(),
                    y.len()
                )));
            }
            if a.iter().chain(y.iter()).any(|v| !v.is_finite()) {
                return Err(Error::BadShape("regression data must be finite".into()));
            }
            let (name, mu) = match params.kind {
                MlKind::Lasso => ("lasso", 0.0),
                _ => ("elastic_net", params.mu_en),
            };
            let model = CompositeModel::new(a, y, params.lambda, mu);
            let known = if mu > 0.0 {
                strong_convexity_constants(mu)
            } else {
                KnownConstants::default()
            };
            Ok(ProblemSpec::new(name, Arc::new(model), 0.0)
                .with_strong_convexity(mu)
                .with_known(known))
        }
        (kind, _) => Err(Error::BadShape(format!(
            "{kind:?} problem given the wrong kind of data"
        ))),
    }
}
