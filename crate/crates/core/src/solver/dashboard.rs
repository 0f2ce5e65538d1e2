use super::{select_k, solve_dbar, solve_laplace, source_grid, Manufactured, SolveConfig, SolveRequest};
use crate::damping::{build_damping_closed_form, build_damping_poisson, nontrivial_element};
use crate::geometry::GeneralizedStrip;
use crate::weights::{check_condition, Condition, Verdict, WeightSystem};
use crate::Error;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DashboardConfig {
    pub n: usize,
    pub m: usize,
    pub a_n: f64,
    pub a_m: f64,
    pub x_max: f64,
    pub hx: f64,
    /// Residual tolerance of the smoke solves.
    pub tol: f64,
    pub solve: SolveConfig,
}

impl Default for DashboardConfig {
    fn default() -> Self {
        DashboardConfig {
            n: 1,
            m: 2,
            a_n: 0.3,
            a_m: 0.9,
            x_max: 8.0,
            hx: 0.1,
            tol: 2e-2,
            solve: SolveConfig::default(),
        }
    }
}

/// Independent evidence for the equivalent statements of the surjectivity
/// theorem. `None` marks a statement that could not be evaluated.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DashboardReport {
    pub system: String,
    pub strip: String,
    /// The standing hypotheses (α) and (N).
    pub hypotheses: Vec<(Condition, Verdict)>,
    pub eps0: Verdict,
    /// A certified damping function for `w_K` exists.
    pub damping: Option<bool>,
    /// A non-zero element with finite norms and finite log-integral.
    pub element: Option<bool>,
    pub log_integral: Option<f64>,
    /// ∂̄ smoke solve accepted.
    pub dbar: Option<bool>,
    /// Δ smoke solve accepted.
    pub laplace: Option<bool>,
    pub notes: Vec<String>,
    /// The (ε)₀ verdict as a surjectivity claim.
    pub surjective: Option<bool>,
    pub agree: bool,
}

impl DashboardReport {
    pub fn verdicts(&self) -> [(&'static str, Option<bool>); 5] {
        [
            ("eps0", self.surjective),
            ("damping", self.damping),
            ("element", self.element),
            ("dbar", self.dbar),
            ("laplace", self.laplace),
        ]
    }
}

pub fn surjectivity_dashboard(ws: &WeightSystem, strip: &GeneralizedStrip, cfg: &DashboardConfig) -> DashboardReport {
    let quad = &cfg.solve.quad;
    let mut notes = Vec::new();
    let hypotheses: Vec<_> =
        [Condition::Alpha, Condition::NSystem].iter().map(|&c| (c, check_condition(ws, c, quad).verdict)).collect();
    if hypotheses.iter().any(|(_, v)| !v.holds()) {
        notes.push("standing hypotheses (alpha) and (N) not confirmed".into());
    }
    let eps0 = check_condition(ws, Condition::Eps0, quad).verdict;
    let surjective = match eps0 {
        v if v.holds() => Some(true),
        v if v.fails() => Some(false),
        _ => None,
    };

    let damping = match select_k(ws, cfg.m, &cfg.solve).and_then(|(k, _)| ws.member(k)) {
        Ok(w) => {
            let h = cfg.solve.h_factor * cfg.a_m * strip.max_sup();
            let built = match build_damping_closed_form(&w, h, &cfg.solve.damping) {
                Err(Error::UnsupportedFamily(_)) => build_damping_poisson(&w, h, &cfg.solve.damping),
                r => r,
            };
            match built {
                Ok(q) => Some(q.certificate.min_margin >= 0.0),
                Err(e) => {
                    notes.push(format!("damping: {e}"));
                    Some(false)
                }
            }
        }
        Err(e) => {
            notes.push(format!("K-search: {e}"));
            None
        }
    };

    let (element, log_integral) = match nontrivial_element(ws, strip) {
        Ok(el) => {
            let li = el.log_integral(strip.max_sup());
            let ok = el.holomorphy_residual <= 1e-6 && li.is_finite() && li > f64::NEG_INFINITY;
            (Some(ok), Some(li))
        }
        Err(Error::UnsupportedFamily(_)) => (None, None),
        Err(e) => {
            notes.push(format!("element: {e}"));
            (Some(false), None)
        }
    };

    let (mut dbar, mut laplace) = (None, None);
    if surjective == Some(true) {
        let smoke = |m: Manufactured, laplace: bool| -> Option<bool> {
            let grid = source_grid(strip, cfg.a_m, cfg.x_max, cfg.hx).ok()?;
            let g = m.source(&grid).ok()?;
            let req = SolveRequest::new(ws, cfg.n, cfg.m, cfg.a_n, cfg.a_m, g).with_tol(cfg.tol);
            let r = if laplace { solve_laplace(&req, &cfg.solve) } else { solve_dbar(&req, &cfg.solve) };
            Some(r.map(|r| r.accepted).unwrap_or(false))
        };
        dbar = smoke(Manufactured::DbarConj, false);
        laplace = smoke(Manufactured::LaplaceConj2, true);
    } else {
        notes.push("solve smoke tests skipped".into());
    }

    let mut report = DashboardReport {
        system: ws.describe(),
        strip: strip.describe(),
        hypotheses,
        eps0,
        damping,
        element,
        log_integral,
        dbar,
        laplace,
        notes,
        surjective,
        agree: true,
    };
    let vals: Vec<bool> = report.verdicts().iter().filter_map(|v| v.1).collect();
    report.agree = vals.windows(2).all(|p| p[0] == p[1]);
    report
}
