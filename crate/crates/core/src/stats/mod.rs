//! Ordinary least squares with inference, the development / house-price
//! model wiring, and Pearson correlation.
//!
//! The fit runs through a Householder QR decomposition; rank deficiency is
//! detected from the R diagonal and reported with the offending column
//! names. Standard errors come from s²(XᵀX)⁻¹ with s² = SS_res/(n-k-1), and
//! two-sided p values from the t distribution via the regularized
//! incomplete beta.

pub mod dist;

use std::collections::BTreeMap;

use crate::metrics::{self, MetricsError};

#[derive(Debug, thiserror::Error)]
pub enum StatsError {
    #[error("design shape error: {message}")]
    Shape { message: String },
    #[error("insufficient data for {context}: need {needed}, got {got}")]
    InsufficientData {
        context: String,
        needed: usize,
        got: usize,
    },
    #[error("singular design: column(s) {columns:?} are collinear")]
    SingularDesign { columns: Vec<String> },
    #[error("degenerate response: zero variance")]
    DegenerateResponse,
    #[error("degenerate input {name:?}: zero variance")]
    DegenerateInput { name: String },
    #[error("no common locations across the inputs")]
    EmptyResult,
}

/// A regression design: response plus k regressor columns. The intercept is
/// added internally, never as an input column.
#[derive(Debug, Clone)]
pub struct Design {
    pub response_name: String,
    pub response: Vec<f64>,
    pub regressor_names: Vec<String>,
    /// Column-major: `columns[j]` is the j-th regressor.
    pub columns: Vec<Vec<f64>>,
}

impl Design {
    pub fn new(
        response_name: impl Into<String>,
        response: Vec<f64>,
        regressor_names: Vec<String>,
        columns: Vec<Vec<f64>>,
    ) -> Result<Self, StatsError> {
        if regressor_names.len() != columns.len() {
            return Err(StatsError::Shape {
                message: format!(
                    "{} regressor names for {} columns",
                    regressor_names.len(),
                    columns.len()
                ),
            });
        }
        let n = response.len();
        for (name, col) in regressor_names.iter().zip(&columns) {
            if col.len() != n {
                return Err(StatsError::Shape {
                    message: format!("column {name:?} has {} rows, response has {n}", col.len()),
                });
            }
        }
        let k = columns.len();
        if n < k + 2 {
            return Err(StatsError::InsufficientData {
                context: "ols fit".into(),
                needed: k + 2,
                got: n,
            });
        }
        Ok(Design {
            response_name: response_name.into(),
            response,
            regressor_names,
            columns,
        })
    }

    fn n(&self) -> usize {
        self.response.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub t_value: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionResult {
    pub response_name: String,
    /// Intercept first, then one entry per regressor.
    pub coefficients: Vec<Coefficient>,
    pub r_squared: f64,
    pub n: usize,
    /// Residual degrees of freedom, n - k - 1.
    pub df: usize,
    /// Rows dropped upstream for missing data (set by the model wrappers).
    pub dropped_rows: usize,
}

/// Cosmetic significance markers; the thresholds are configurable output
/// decoration, nothing in the fit depends on them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StarThresholds {
    pub weak: f64,
    pub strong: f64,
}

impl Default for StarThresholds {
    fn default() -> Self {
        StarThresholds {
            weak: 0.05,
            strong: 0.001,
        }
    }
}

impl StarThresholds {
    pub fn stars(&self, p: f64) -> &'static str {
        if p < self.strong {
            "**"
        } else if p < self.weak {
            "*"
        } else {
            ""
        }
    }
}

impl RegressionResult {
    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }

    /// CSV report: one row per coefficient plus a summary row.
    pub fn to_csv(&self, thresholds: StarThresholds) -> String {
        let mut out = String::from("term,estimate,std_error,t_value,p_value,stars\n");
        for c in &self.coefficients {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                c.name,
                c.estimate,
                c.std_error,
                c.t_value,
                c.p_value,
                thresholds.stars(c.p_value)
            ));
        }
        out.push_str(&format!(
            "r_squared,{},,,,\nn,{},,,,\ndropped_rows,{},,,,\n",
            self.r_squared, self.n, self.dropped_rows
        ));
        out
    }

    /// Human-readable block in the style of a regression table.
    pub fn to_text(&self, thresholds: StarThresholds) -> String {
        // Scientific notation for magnitudes that would blow the fixed
        // columns apart (near-perfect fits produce astronomical t values).
        fn cell(v: f64) -> String {
            if v != 0.0 && (v.abs() >= 1e5 || v.abs() < 1e-4) {
                format!("{v:.3e}")
            } else {
                format!("{v:.4}")
            }
        }
        let mut out = format!("response: {}\n", self.response_name);
        out.push_str(&format!(
            "{:<16}{:>14}{:>14}{:>14}{:>12}\n",
            "term", "estimate", "std error", "t", "p"
        ));
        for c in &self.coefficients {
            out.push_str(&format!(
                "{:<16}{:>14}{:>14}{:>14}{:>12.6}{}\n",
                c.name,
                cell(c.estimate),
                cell(c.std_error),
                cell(c.t_value),
                c.p_value,
                thresholds.stars(c.p_value)
            ));
        }
        out.push_str(&format!(
            "R^2 = {:.4}   n = {}   dropped = {}\n",
            self.r_squared, self.n, self.dropped_rows
        ));
        out
    }
}

/// Fits the design by Householder QR and derives the usual inference.
pub fn ols_fit(design: &Design) -> Result<RegressionResult, StatsError> {
    let n = design.n();
    let p = design.columns.len() + 1;

    // Row-major X with the intercept in column 0.
    let mut x = vec![vec![0.0; p]; n];
    for row in x.iter_mut() {
        row[0] = 1.0;
    }
    for (j, col) in design.columns.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            x[i][j + 1] = v;
        }
    }
    let mut qty = design.response.clone();

    let column_name = |j: usize| -> String {
        if j == 0 {
            "intercept".to_string()
        } else {
            design.regressor_names[j - 1].clone()
        }
    };
    let column_scales: Vec<f64> = (0..p)
        .map(|j| (0..n).map(|i| x[i][j] * x[i][j]).sum::<f64>().sqrt())
        .collect();

    // Householder reflections, applied column by column.
    let mut collinear: Vec<String> = Vec::new();
    for k in 0..p {
        let norm = (k..n).map(|i| x[i][k] * x[i][k]).sum::<f64>().sqrt();
        let tolerance = 1e-10 * column_scales[k].max(1.0);
        if norm <= tolerance {
            collinear.push(column_name(k));
            continue;
        }
        let alpha = if x[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..n).map(|i| x[i][k]).collect();
        v[0] -= alpha;
        let v_norm2: f64 = v.iter().map(|w| w * w).sum();
        if v_norm2 == 0.0 {
            // Column already reduced; alpha is the pivot.
            x[k][k] = alpha;
            continue;
        }
        // Apply H = I - 2 v vᵀ / (vᵀ v) to the remaining columns and to y.
        for j in k..p {
            let dot: f64 = (k..n).map(|i| v[i - k] * x[i][j]).sum();
            let factor = 2.0 * dot / v_norm2;
            for i in k..n {
                x[i][j] -= factor * v[i - k];
            }
        }
        let dot: f64 = (k..n).map(|i| v[i - k] * qty[i]).sum();
        let factor = 2.0 * dot / v_norm2;
        for i in k..n {
            qty[i] -= factor * v[i - k];
        }
        x[k][k] = alpha;
        for i in (k + 1)..n {
            x[i][k] = 0.0;
        }
    }
    if !collinear.is_empty() {
        return Err(StatsError::SingularDesign { columns: collinear });
    }

    // Back-substitution: R beta = (Qᵀ y)[..p]
    let mut beta = vec![0.0; p];
    for i in (0..p).rev() {
        let mut sum = qty[i];
        for j in (i + 1)..p {
            sum -= x[i][j] * beta[j];
        }
        beta[i] = sum / x[i][i];
    }

    // SS_res from the tail of Qᵀ y; SS_tot from the centered response.
    let ss_res: f64 = qty[p..].iter().map(|v| v * v).sum();
    let mean_y = design.response.iter().sum::<f64>() / n as f64;
    let ss_tot: f64 = design.response.iter().map(|y| (y - mean_y).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(StatsError::DegenerateResponse);
    }
    let df = n - p;
    let sigma2 = ss_res / df as f64;

    // (XᵀX)⁻¹ = R⁻¹ R⁻ᵀ; its diagonal is the squared row norms of R⁻¹.
    let mut r_inv = vec![vec![0.0; p]; p];
    for i in (0..p).rev() {
        r_inv[i][i] = 1.0 / x[i][i];
        for j in (i + 1)..p {
            let mut sum = 0.0;
            for k in (i + 1)..=j {
                sum += x[i][k] * r_inv[k][j];
            }
            r_inv[i][j] = -sum / x[i][i];
        }
    }

    let coefficients: Vec<Coefficient> = (0..p)
        .map(|j| {
            let xtx_inv_jj: f64 = (j..p).map(|k| r_inv[j][k] * r_inv[j][k]).sum();
            let std_error = (sigma2 * xtx_inv_jj).sqrt();
            let estimate = beta[j];
            let (t_value, p_value) = if std_error > 0.0 {
                let t = estimate / std_error;
                (t, dist::student_t_two_sided_p(t, df))
            } else if estimate == 0.0 {
                (0.0, 1.0)
            } else {
                (f64::INFINITY.copysign(estimate), 0.0)
            };
            Coefficient {
                name: column_name(j),
                estimate,
                std_error,
                t_value,
                p_value,
            }
        })
        .collect();

    Ok(RegressionResult {
        response_name: design.response_name.clone(),
        coefficients,
        r_squared: 1.0 - ss_res / ss_tot,
        n,
        df,
        dropped_rows: 0,
    })
}

/// Aligns location→value maps on their common keys. Returns the sorted
/// common locations, one value vector per input map, and the locations
/// dropped from at least one input.
pub fn align_locations(
    maps: &[&BTreeMap<String, f64>],
) -> (Vec<String>, Vec<Vec<f64>>, Vec<String>) {
    let mut union: std::collections::BTreeSet<String> = Default::default();
    for map in maps {
        union.extend(map.keys().cloned());
    }
    let common: Vec<String> = union
        .iter()
        .filter(|key| maps.iter().all(|m| m.contains_key(*key)))
        .cloned()
        .collect();
    let dropped: Vec<String> = union
        .iter()
        .filter(|key| !maps.iter().all(|m| m.contains_key(*key)))
        .cloned()
        .collect();
    let vectors = maps
        .iter()
        .map(|m| common.iter().map(|key| m[key]).collect())
        .collect();
    (common, vectors, dropped)
}

/// A fitted model plus the location bookkeeping of the alignment.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFit {
    pub result: RegressionResult,
    pub locations: Vec<String>,
    pub dropped: Vec<String>,
}

const MIN_MODEL_LOCATIONS: usize = 8;

fn fit_aligned(
    response_name: &str,
    response: &BTreeMap<String, f64>,
    regressors: &[(&str, &BTreeMap<String, f64>)],
) -> Result<ModelFit, StatsError> {
    let mut maps: Vec<&BTreeMap<String, f64>> = vec![response];
    maps.extend(regressors.iter().map(|(_, m)| *m));
    let (locations, mut vectors, dropped) = align_locations(&maps);
    if locations.len() < MIN_MODEL_LOCATIONS {
        return Err(StatsError::InsufficientData {
            context: format!("model for {response_name}"),
            needed: MIN_MODEL_LOCATIONS,
            got: locations.len(),
        });
    }
    let response_vec = vectors.remove(0);
    let design = Design::new(
        response_name,
        response_vec,
        regressors.iter().map(|(n, _)| n.to_string()).collect(),
        vectors,
    )?;
    let mut result = ols_fit(&design)?;
    result.dropped_rows = dropped.len();
    Ok(ModelFit {
        result,
        locations,
        dropped,
    })
}

/// Development model: dev ~ cultural capital + economic capital, optionally
/// extended with extra regressors (penetration control, diversity).
pub fn model_development(
    capital_cult: &BTreeMap<String, f64>,
    capital_econ: &BTreeMap<String, f64>,
    dev: &BTreeMap<String, f64>,
    extras: &[(&str, &BTreeMap<String, f64>)],
) -> Result<ModelFit, StatsError> {
    let mut regressors: Vec<(&str, &BTreeMap<String, f64>)> = vec![
        ("capital_cult", capital_cult),
        ("capital_econ", capital_econ),
    ];
    regressors.extend_from_slice(extras);
    fit_aligned("dev", dev, &regressors)
}

/// House-price model: z-scored house price ~ cultural + economic capital.
pub fn model_house_price(
    capital_cult: &BTreeMap<String, f64>,
    capital_econ: &BTreeMap<String, f64>,
    house_price: &BTreeMap<String, f64>,
) -> Result<ModelFit, StatsError> {
    let response = zscore_response(house_price)?;
    fit_aligned(
        "house_price_z",
        &response,
        &[
            ("capital_cult", capital_cult),
            ("capital_econ", capital_econ),
        ],
    )
}

fn zscore_response(values: &BTreeMap<String, f64>) -> Result<BTreeMap<String, f64>, StatsError> {
    metrics::zscore_values(values, "response").map_err(|e| match e {
        MetricsError::DegenerateDistribution { .. } => StatsError::DegenerateResponse,
        MetricsError::TooFewLocations { needed, got } => StatsError::InsufficientData {
            context: "response z-score".into(),
            needed,
            got,
        },
        MetricsError::InsufficientData {
            context,
            needed,
            got,
        } => StatsError::InsufficientData {
            context,
            needed,
            got,
        },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategoryModelRow {
    pub category: u16,
    pub r_squared: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategoryModelTable {
    pub rows: Vec<CategoryModelRow>,
    /// The category with the highest R², when any row fit.
    pub best: Option<u16>,
    pub skipped: Vec<(u16, String)>,
}

/// One house-price model per macro category: house_price_z ~ category
/// capital + economic capital. Categories whose inputs are degenerate are
/// skipped with a note.
pub fn model_category_house(
    category_capitals: &BTreeMap<u16, BTreeMap<String, f64>>,
    capital_econ: &BTreeMap<String, f64>,
    house_price: &BTreeMap<String, f64>,
) -> Result<CategoryModelTable, StatsError> {
    let response = zscore_response(house_price)?;
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (&code, capital) in category_capitals {
        let name = format!("capital_cult_{code}");
        match fit_aligned(
            "house_price_z",
            &response,
            &[(name.as_str(), capital), ("capital_econ", capital_econ)],
        ) {
            Ok(fit) => rows.push(CategoryModelRow {
                category: code,
                r_squared: fit.result.r_squared,
                n: fit.result.n,
            }),
            Err(e) => skipped.push((code, e.to_string())),
        }
    }
    let best = rows
        .iter()
        .max_by(|a, b| {
            a.r_squared
                .partial_cmp(&b.r_squared)
                .expect("finite r_squared")
                .then_with(|| b.category.cmp(&a.category))
        })
        .map(|row| row.category);
    Ok(CategoryModelTable {
        rows,
        best,
        skipped,
    })
}

/// Per-location difference t2 - t1 over the common locations; the rest are
/// reported as dropped.
pub fn delta(
    t2: &BTreeMap<String, f64>,
    t1: &BTreeMap<String, f64>,
) -> Result<(BTreeMap<String, f64>, Vec<String>), StatsError> {
    let (common, vectors, dropped) = align_locations(&[t2, t1]);
    if common.is_empty() {
        return Err(StatsError::EmptyResult);
    }
    let map = common
        .iter()
        .enumerate()
        .map(|(i, loc)| (loc.clone(), vectors[0][i] - vectors[1][i]))
        .collect();
    Ok((map, dropped))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PearsonResult {
    pub r: f64,
    pub n: usize,
}

/// Sample Pearson correlation over the common locations of two maps.
pub fn pearson(
    x: &BTreeMap<String, f64>,
    y: &BTreeMap<String, f64>,
) -> Result<PearsonResult, StatsError> {
    let (common, vectors, _) = align_locations(&[x, y]);
    let n = common.len();
    if n < 3 {
        return Err(StatsError::InsufficientData {
            context: "pearson correlation".into(),
            needed: 3,
            got: n,
        });
    }
    let (xs, ys) = (&vectors[0], &vectors[1]);
    let mean_x = xs.iter().sum::<f64>() / n as f64;
    let mean_y = ys.iter().sum::<f64>() / n as f64;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for i in 0..n {
        let dx = xs[i] - mean_x;
        let dy = ys[i] - mean_y;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    if var_x == 0.0 {
        return Err(StatsError::DegenerateInput { name: "x".into() });
    }
    if var_y == 0.0 {
        return Err(StatsError::DegenerateInput { name: "y".into() });
    }
    Ok(PearsonResult {
        r: cov / (var_x.sqrt() * var_y.sqrt()),
        n,
    })
}
