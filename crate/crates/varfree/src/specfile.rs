//! Problem specification files.
//!
//! A problem is a single TOML file: a `[lagrangian]` table, an optional
//! `[boundary]` table (flat by default), an optional `[transformation]`
//! and an optional `[solver]` table. Expressions use the grammar of
//! [`crate::jet::parse`]; densities parse in the `(x, u)` chart by
//! default, or in the `(t, y)` chart when `chart = "ty"` (the default
//! for curve/level-set boundaries). Boundary curves are expressions in
//! the parameter `s`/`sigma`.
//!
//! ```toml
//! [lagrangian]
//! n = 1
//! m = 1
//! order = 1
//! density = "y_t^2/2 + y"
//!
//! [boundary]
//! kind = "curves"
//! gamma0 = { kind = "point", t = "0", y = "0" }
//! gamma1 = { t = "1", y = "s" }
//!
//! [solver]
//! n_cells = 200
//! gtol = 1e-9
//! ```

use crate::contact::{BoundaryCurve, PointTransformation};
use crate::jet::{parse, parse_with_order, Expr, JetSpace, VarTable};
use crate::solver::{FilmSettings, SolverSettings};
use crate::variational::Lagrangian;
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("cannot read spec file: {0}")]
    Io(#[from] std::io::Error),
    #[error("spec file is not valid TOML: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("in `{place}`: {message}")]
    Invalid { place: String, message: String },
}

fn invalid(place: &str, message: impl ToString) -> SpecError {
    SpecError::Invalid { place: place.into(), message: message.to_string() }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    lagrangian: LagrangianTable,
    boundary: Option<BoundaryTable>,
    transformation: Option<TransformationTable>,
    solver: Option<SolverTable>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LagrangianTable {
    n: usize,
    m: usize,
    order: u32,
    density: String,
    /// "xu" or "ty"; defaults to "xu" for flat problems, "ty" otherwise.
    chart: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundaryTable {
    kind: String,
    gamma0: Option<CurveTable>,
    gamma1: Option<CurveTable>,
    phi: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CurveTable {
    kind: Option<String>,
    t: String,
    y: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransformationTable {
    x: Vec<String>,
    u: String,
    inverse_t: Option<Vec<String>>,
    inverse_y: Option<String>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct SolverTable {
    n_cells: Option<usize>,
    mesh: Option<[usize; 2]>,
    gtol: Option<f64>,
    max_iter: Option<usize>,
    area_tol: Option<f64>,
    initial_sigma0: Option<f64>,
    initial_sigma1: Option<f64>,
    initial_values: Option<Vec<f64>>,
    /// Film initial height field, an expression in (t1, t2).
    initial_height: Option<String>,
}

/// The boundary of a problem.
#[derive(Debug, Clone)]
pub enum Boundary {
    /// The flat chart boundary {x_n = 0}.
    Flat,
    /// Two curves in the (t, y) plane (n = 1 problems).
    Curves { gamma0: BoundaryCurve, gamma1: BoundaryCurve },
    /// A level-set wall (film problems, n = 2).
    LevelSet { phi: Expr },
}

/// Solver configuration merged with defaults.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub n_cells: usize,
    pub mesh: [usize; 2],
    pub settings: SolverSettings,
    pub film: FilmSettings,
    pub initial_sigma0: f64,
    pub initial_sigma1: f64,
    pub initial_values: Option<Vec<f64>>,
    pub initial_height: Option<Expr>,
}

/// A fully parsed and validated problem specification.
pub struct ProblemSpec {
    pub lagrangian: Lagrangian,
    /// The chart the density was written in (used for printing).
    pub table: VarTable,
    pub boundary: Boundary,
    pub transformation: Option<PointTransformation>,
    pub solver: Option<SolverConfig>,
}

impl ProblemSpec {
    pub fn load(path: &std::path::Path) -> Result<ProblemSpec, SpecError> {
        let text = std::fs::read_to_string(path)?;
        ProblemSpec::from_str(&text)
    }

    pub fn from_str(text: &str) -> Result<ProblemSpec, SpecError> {
        let file: SpecFile = toml::from_str(text)?;
        let lt = &file.lagrangian;
        if lt.n < 1 || lt.m < 1 || lt.order < 1 {
            return Err(invalid("lagrangian", "n, m and order must all be at least 1"));
        }

        let boundary_kind = file.boundary.as_ref().map(|b| b.kind.as_str()).unwrap_or("flat");
        let chart = lt.chart.clone().unwrap_or_else(|| {
            if boundary_kind == "flat" { "xu".to_string() } else { "ty".to_string() }
        });
        let table = match chart.as_str() {
            "xu" => VarTable::xu(lt.n, lt.m),
            "ty" if lt.m == 1 => VarTable::ty(lt.n),
            "ty" => return Err(invalid("lagrangian.chart", "the ty chart needs m = 1")),
            other => return Err(invalid("lagrangian.chart", format!("unknown chart `{other}`"))),
        };
        let space = JetSpace::new(lt.n, lt.m, lt.order);
        let density = parse_with_order(&lt.density, &space, &table, lt.order)
            .map_err(|e| invalid("lagrangian.density", e))?;
        let lagrangian = Lagrangian::new(lt.n, lt.m, lt.order, density)
            .map_err(|e| invalid("lagrangian", e))?;

        let boundary = match &file.boundary {
            None => Boundary::Flat,
            Some(b) => match b.kind.as_str() {
                "flat" => Boundary::Flat,
                "curves" => {
                    if lt.n != 1 {
                        return Err(invalid("boundary", "curve boundaries require n = 1"));
                    }
                    let g0 = b.gamma0.as_ref().ok_or_else(|| invalid("boundary", "missing gamma0"))?;
                    let g1 = b.gamma1.as_ref().ok_or_else(|| invalid("boundary", "missing gamma1"))?;
                    Boundary::Curves {
                        gamma0: parse_curve(g0, "boundary.gamma0")?,
                        gamma1: parse_curve(g1, "boundary.gamma1")?,
                    }
                }
                "level_set" => {
                    if lt.n != 2 {
                        return Err(invalid("boundary", "level-set walls require n = 2"));
                    }
                    let phi_src = b.phi.as_ref().ok_or_else(|| invalid("boundary", "missing phi"))?;
                    let wall_space = JetSpace::new(2, 1, 1);
                    let phi = parse_with_order(phi_src, &wall_space, &VarTable::ty(2), 0)
                        .map_err(|e| invalid("boundary.phi", e))?;
                    Boundary::LevelSet { phi }
                }
                other => return Err(invalid("boundary.kind", format!("unknown kind `{other}`"))),
            },
        };

        let transformation = match &file.transformation {
            None => None,
            Some(t) => {
                if t.x.len() != lt.n {
                    return Err(invalid("transformation.x", format!("expected {} components", lt.n)));
                }
                let source_space = JetSpace::new(lt.n, 1, 1);
                let source_table = VarTable::ty(lt.n);
                let mut forward = Vec::with_capacity(lt.n + 1);
                for (k, src) in t.x.iter().enumerate() {
                    forward.push(
                        parse_with_order(src, &source_space, &source_table, 0)
                            .map_err(|e| invalid(&format!("transformation.x[{k}]"), e))?,
                    );
                }
                forward.push(
                    parse_with_order(&t.u, &source_space, &source_table, 0)
                        .map_err(|e| invalid("transformation.u", e))?,
                );
                match (&t.inverse_t, &t.inverse_y) {
                    (Some(inv_t), Some(inv_y)) => {
                        if inv_t.len() != lt.n {
                            return Err(invalid(
                                "transformation.inverse_t",
                                format!("expected {} components", lt.n),
                            ));
                        }
                        let target_table = VarTable::xu(lt.n, 1);
                        let mut inverse = Vec::with_capacity(lt.n + 1);
                        for (k, src) in inv_t.iter().enumerate() {
                            inverse.push(
                                parse_with_order(src, &source_space, &target_table, 0)
                                    .map_err(|e| invalid(&format!("transformation.inverse_t[{k}]"), e))?,
                            );
                        }
                        inverse.push(
                            parse_with_order(inv_y, &source_space, &target_table, 0)
                                .map_err(|e| invalid("transformation.inverse_y", e))?,
                        );
                        Some(
                            PointTransformation::with_inverse(lt.n, forward, inverse)
                                .map_err(|e| invalid("transformation", e))?,
                        )
                    }
                    (None, None) => Some(
                        PointTransformation::new(lt.n, forward)
                            .map_err(|e| invalid("transformation", e))?,
                    ),
                    _ => {
                        return Err(invalid(
                            "transformation",
                            "inverse_t and inverse_y must be supplied together",
                        ))
                    }
                }
            }
        };

        let solver = match &file.solver {
            None => None,
            Some(s) => {
                let initial_height = match &s.initial_height {
                    None => None,
                    Some(src) => {
                        let hspace = JetSpace { n: 2, m: 0, cap: 0 };
                        Some(
                            parse(src, &hspace, &VarTable::ty(2))
                                .map_err(|e| invalid("solver.initial_height", e))?,
                        )
                    }
                };
                Some(SolverConfig {
                    n_cells: s.n_cells.unwrap_or(200),
                    mesh: s.mesh.unwrap_or([64, 64]),
                    settings: SolverSettings {
                        max_iter: s.max_iter.unwrap_or_else(|| SolverSettings::default().max_iter),
                        gtol: s.gtol.unwrap_or_else(|| SolverSettings::default().gtol),
                        ..Default::default()
                    },
                    film: FilmSettings {
                        max_iter: s.max_iter.unwrap_or_else(|| FilmSettings::default().max_iter),
                        area_tol: s.area_tol.unwrap_or_else(|| FilmSettings::default().area_tol),
                        ..Default::default()
                    },
                    initial_sigma0: s.initial_sigma0.unwrap_or(0.0),
                    initial_sigma1: s.initial_sigma1.unwrap_or(0.0),
                    initial_values: s.initial_values.clone(),
                    initial_height,
                })
            }
        };

        Ok(ProblemSpec { lagrangian, table, boundary, transformation, solver })
    }
}

fn parse_curve(c: &CurveTable, place: &str) -> Result<BoundaryCurve, SpecError> {
    let pspace = JetSpace { n: 1, m: 0, cap: 0 };
    let ptable = VarTable::param("s");
    let t = parse(&c.t, &pspace, &ptable).map_err(|e| invalid(place, e))?;
    let y = parse(&c.y, &pspace, &ptable).map_err(|e| invalid(place, e))?;
    match c.kind.as_deref() {
        Some("point") => {
            // constant components; evaluate at s = 0
            let mut p = crate::jet::JetPoint::new();
            p.set(crate::jet::JetVar::Independent(0), 0.0);
            let tv = crate::jet::evaluate(&t, &p).map_err(|e| invalid(place, e))?;
            let yv = crate::jet::evaluate(&y, &p).map_err(|e| invalid(place, e))?;
            Ok(BoundaryCurve::point(tv, yv))
        }
        Some("curve") | None => BoundaryCurve::new(t, y).map_err(|e| invalid(place, e)),
        Some(other) => Err(invalid(place, format!("unknown curve kind `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loads_loaded_string_spec() {
        let text = r#"
            [lagrangian]
            n = 1
            m = 1
            order = 1
            density = "y_t^2/2 + y"

            [boundary]
            kind = "curves"
            gamma0 = { kind = "point", t = "0", y = "0" }
            gamma1 = { t = "1", y = "s" }

            [solver]
            n_cells = 100
            gtol = 1e-10
        "#;
        let spec = ProblemSpec::from_str(text).unwrap();
        assert!(matches!(spec.boundary, Boundary::Curves { .. }));
        let solver = spec.solver.unwrap();
        assert_eq!(solver.n_cells, 100);
        assert_eq!(solver.settings.gtol, 1e-10);
    }

    #[test]
    fn flat_spec_defaults_to_xu_chart() {
        let text = r#"
            [lagrangian]
            n = 2
            m = 1
            order = 1
            density = "sqrt(1 + u_x^2 + u_y^2)"
        "#;
        let spec = ProblemSpec::from_str(text).unwrap();
        assert!(matches!(spec.boundary, Boundary::Flat));
        assert_eq!(spec.lagrangian.n(), 2);
    }

    #[test]
    fn rejects_unknown_fields_and_bad_expressions() {
        let text = r#"
            [lagrangian]
            n = 1
            m = 1
            order = 1
            density = "u_x^2/2"
            bogus = 1
        "#;
        assert!(matches!(ProblemSpec::from_str(text), Err(SpecError::Toml(_))));

        let text = r#"
            [lagrangian]
            n = 1
            m = 1
            order = 1
            density = "u_zz"
        "#;
        assert!(matches!(ProblemSpec::from_str(text), Err(SpecError::Invalid { .. })));
    }

    #[test]
    fn level_set_spec() {
        let text = r#"
            [lagrangian]
            n = 2
            m = 1
            order = 1
            chart = "ty"
            density = "sqrt(1 + y_t1^2 + y_t2^2)"

            [boundary]
            kind = "level_set"
            phi = "t1^2 + t2^2 - 1"

            [solver]
            mesh = [16, 16]
            initial_height = "0.3*t1"
        "#;
        let spec = ProblemSpec::from_str(text).unwrap();
        assert!(matches!(spec.boundary, Boundary::LevelSet { .. }));
        assert!(spec.solver.unwrap().initial_height.is_some());
    }
}
