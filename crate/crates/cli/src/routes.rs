use qcs_core::fock::DEFAULT_DEFICIT_TOL;
use qcs_core::phase_space::{qcs_wigner_gradient_default, qcs_wigner_laplacian};
use qcs_core::qcs::{qcs_classical_mixture, qcs_direct, qcs_gaussian, qcs_pure_shortcut, qcs_two_copy_state};
use qcs_core::states::gaussian_covariance;
use qcs_core::{
    ClassicalMixture, DensityOperator, Method, QcsError, QcsEstimate, Result, StateKind, StateSpec,
};
use serde::Serialize;

use crate::config::Route;
use crate::error::CliError;

/// Agreement required between routes that are exact up to round-off.
pub const EXACT_ROUTE_TOL: f64 = 1e-6;
/// Agreement required whenever the finite-difference gradient route is
/// one of the pair.
pub const GRADIENT_ROUTE_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RouteStatus {
    Ok,
    NotApplicable,
    Failed,
}

#[derive(Debug, Serialize)]
pub struct RouteOutcome {
    pub route: Method,
    pub status: RouteStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate: Option<QcsEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(skip)]
    pub error: Option<CliError>,
}

pub fn methods_for(route: Route) -> &'static [Method] {
    match route {
        Route::Direct => &[Method::Direct],
        Route::TwoCopy => &[Method::TwoCopy],
        Route::Gaussian => &[Method::Gaussian],
        Route::Wigner => &[Method::WignerLaplacian, Method::WignerGradient],
        Route::All => &[
            Method::Direct,
            Method::TwoCopy,
            Method::PureShortcut,
            Method::ClassicalMixture,
            Method::Gaussian,
            Method::WignerLaplacian,
            Method::WignerGradient,
        ],
    }
}

pub fn classical_mixture_of(spec: &StateSpec) -> Result<ClassicalMixture> {
    match &spec.kind {
        StateKind::Mixture { weights, alphas } => {
            ClassicalMixture::new(weights.clone(), alphas.iter().map(|a| a.0).collect())
        }
        StateKind::Coherent { alpha } | StateKind::Displaced { alpha, n: 0 } => {
            Ok(ClassicalMixture::single(alpha.0))
        }
        _ => Err(QcsError::NotApplicable(
            "not a finite mixture of coherent states".into(),
        )),
    }
}

fn run_method(method: Method, spec: &StateSpec, rho: &DensityOperator) -> Result<QcsEstimate> {
    match method {
        Method::Direct => qcs_direct(rho),
        Method::TwoCopy => qcs_two_copy_state(rho),
        Method::PureShortcut => match spec.build_ket(rho.deficit_tol().max(DEFAULT_DEFICIT_TOL))? {
            Some(psi) => qcs_pure_shortcut(&psi),
            None => Err(QcsError::NotApplicable("state family is not pure".into())),
        },
        Method::ClassicalMixture => qcs_classical_mixture(&classical_mixture_of(spec)?),
        Method::Gaussian => qcs_gaussian(&gaussian_covariance(spec)?),
        Method::WignerLaplacian => qcs_wigner_laplacian(rho),
        Method::WignerGradient => qcs_wigner_gradient_default(rho),
        Method::Sampled => Err(QcsError::NotApplicable(
            "sampling is its own command".into(),
        )),
    }
}

pub fn evaluate(method: Method, spec: &StateSpec, rho: &DensityOperator) -> RouteOutcome {
    match run_method(method, spec, rho) {
        Ok(est) => RouteOutcome {
            route: method,
            status: RouteStatus::Ok,
            estimate: Some(est),
            reason: None,
            error: None,
        },
        Err(QcsError::NotApplicable(why)) => RouteOutcome {
            route: method,
            status: RouteStatus::NotApplicable,
            estimate: None,
            reason: Some(why),
            error: None,
        },
        Err(e) => RouteOutcome {
            route: method,
            status: RouteStatus::Failed,
            estimate: None,
            reason: Some(e.to_string()),
            error: Some(e.into()),
        },
    }
}

pub fn evaluate_route(route: Route, spec: &StateSpec, rho: &DensityOperator) -> Vec<RouteOutcome> {
    methods_for(route)
        .iter()
        .map(|&m| evaluate(m, spec, rho))
        .collect()
}

pub fn pair_tolerance(a: Method, b: Method) -> f64 {
    if a == Method::WignerGradient || b == Method::WignerGradient {
        GRADIENT_ROUTE_TOL
    } else {
        EXACT_ROUTE_TOL
    }
}
