//! Reaction terms `(F, G)` with analytic partial derivatives.

use crate::error::{Error, Result};
use std::fmt;
use std::sync::Arc;

pub type RateFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct KineticsModel {
    pub name: String,
    f: RateFn,
    g: RateFn,
    df_du: RateFn,
    df_dv: RateFn,
    dg_du: RateFn,
    dg_dv: RateFn,
}

impl fmt::Debug for KineticsModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KineticsModel").field("name", &self.name).finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrusselatorParams {
    pub a: f64,
    pub b: f64,
}

impl Default for BrusselatorParams {
    fn default() -> Self {
        BrusselatorParams { a: 0.0, b: 1.0 }
    }
}

/// `F = a - (b + 1) u + u^2 v`, `G = b u - u^2 v`.
pub fn brusselator(params: BrusselatorParams) -> KineticsModel {
    let BrusselatorParams { a, b } = params;
    KineticsModel {
        name: "brusselator".into(),
        f: Arc::new(move |u, v| a - (b + 1.0) * u + u * u * v),
        g: Arc::new(move |u, v| b * u - u * u * v),
        df_du: Arc::new(move |u, v| -(b + 1.0) + 2.0 * u * v),
        df_dv: Arc::new(|u, _| u * u),
        dg_du: Arc::new(move |u, v| b - 2.0 * u * v),
        dg_dv: Arc::new(|u, _| -u * u),
    }
}

/// `F = G = 0`.
pub fn no_reaction() -> KineticsModel {
    let zero: RateFn = Arc::new(|_, _| 0.0);
    KineticsModel {
        name: "none".into(),
        f: zero.clone(),
        g: zero.clone(),
        df_du: zero.clone(),
        df_dv: zero.clone(),
        dg_du: zero.clone(),
        dg_dv: zero,
    }
}

/// Preset by name; parameters are ignored by presets that take none.
pub fn preset(name: &str, params: BrusselatorParams) -> Result<KineticsModel> {
    match name {
        "brusselator" => Ok(brusselator(params)),
        "none" => Ok(no_reaction()),
        other => Err(Error::InvalidArgument(format!("unknown kinetics preset `{other}`"))),
    }
}

/// Relative tolerance of the derivative self-check.
pub const DERIVATIVE_CHECK_TOL: f64 = 1e-5;
const FD_STEP: f64 = 1e-6;

impl KineticsModel {
    /// User-supplied kinetics. The derivatives are checked against centered
    /// finite differences on a fixed grid of points in `[-2, 2]^2`.
    #[allow(clippy::too_many_arguments)]
    pub fn custom(
        name: impl Into<String>,
        f: RateFn,
        g: RateFn,
        df_du: RateFn,
        df_dv: RateFn,
        dg_du: RateFn,
        dg_dv: RateFn,
    ) -> Result<Self> {
        let model = KineticsModel {
            name: name.into(),
            f,
            g,
            df_du,
            df_dv,
            dg_du,
            dg_dv,
        };
        let grid: Vec<f64> = (0..9).map(|i| -2.0 + 0.5 * i as f64).collect();
        for &u in &grid {
            for &v in &grid {
                model.check_derivatives_at(u, v)?;
            }
        }
        Ok(model)
    }

    pub fn check_derivatives_at(&self, u: f64, v: f64) -> Result<()> {
        let fd = self.finite_difference_jacobian(u, v);
        let an = self.jacobian(u, v);
        let names = [["dF/du", "dF/dv"], ["dG/du", "dG/dv"]];
        for i in 0..2 {
            for j in 0..2 {
                let scale = an[i][j].abs().max(fd[i][j].abs()).max(1.0);
                if (an[i][j] - fd[i][j]).abs() > DERIVATIVE_CHECK_TOL * scale {
                    return Err(Error::KineticsDerivative {
                        name: self.name.clone(),
                        which: names[i][j],
                        u,
                        v,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn f(&self, u: f64, v: f64) -> f64 {
        (self.f)(u, v)
    }

    pub fn g(&self, u: f64, v: f64) -> f64 {
        (self.g)(u, v)
    }

    /// `[[dF/du, dF/dv], [dG/du, dG/dv]]`
    pub fn jacobian(&self, u: f64, v: f64) -> [[f64; 2]; 2] {
        [
            [(self.df_du)(u, v), (self.df_dv)(u, v)],
            [(self.dg_du)(u, v), (self.dg_dv)(u, v)],
        ]
    }

    pub fn finite_difference_jacobian(&self, u: f64, v: f64) -> [[f64; 2]; 2] {
        let h = FD_STEP;
        let d = |fun: &RateFn| {
            [
                (fun(u + h, v) - fun(u - h, v)) / (2.0 * h),
                (fun(u, v + h) - fun(u, v - h)) / (2.0 * h),
            ]
        };
        [d(&self.f), d(&self.g)]
    }
}
