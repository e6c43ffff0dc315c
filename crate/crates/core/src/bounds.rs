//! Two-sided bounds on the claim-weighted maxmin partition value from a set
//! of efficient value vectors.
//!
//! Geometry: the partition range is compact and convex, every EVV lies on
//! its Pareto border, and the optimal value `v` is where the claim ray
//! `r·α` exits the range. Stack `m <= n` linearly independent EVVs as the
//! columns of an `n x m` matrix `U` and pick a nonsingular `m x m` row
//! submatrix `Ū`:
//!
//! * upper bound: each EVV's supporting hyperplane cuts the claim ray at
//!   `(β·u) / (β·α)`, and the ray cannot exit the range before any of these
//!   cuts, so the minimum over any pool of EVVs is an upper bound;
//! * cone test: `α` lies in the cone spanned by the EVVs iff
//!   `det(Ū)·det(Ū_{αi}) >= 0` for every column replacement `i`, where
//!   `Ū_{αi}` swaps column `i` for the row-restricted claim vector;
//! * lower bound: when the cone test passes, the claim ray crosses the
//!   simplex of the EVVs at `r* = 1 / (1ᵀ Ū⁻¹ ᾱ)`, a point of the range,
//!   so `r* <= v`. The convex weights come from Cramer's rule,
//!   `t_i ∝ det(Ū_{αi})`.
//!
//! `lower_bound` computes `r*` twice (inverse formula and a direct
//! elimination solve of the bordered system) and additionally verifies the
//! certificate `U t = r* α` on all `n` rows, which is what makes the row
//! selection trustworthy when `m < n`.

use crate::evv::{corner_evv, dot, EvvRecord};
use crate::linalg::{gauss_solve, Matrix};
use crate::measure::Instance;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Relative tolerance for determinant sign classification, scaled by the
/// Hadamard bound of the matrices involved.
pub const EPS_DET: f64 = 1e-9;
/// Relative pivot tolerance below which columns count as dependent.
pub const EPS_RANK: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConeStatus {
    Interior,
    Boundary,
    Outside,
}

impl fmt::Display for ConeStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConeStatus::Interior => write!(f, "interior"),
            ConeStatus::Boundary => write!(f, "boundary"),
            ConeStatus::Outside => write!(f, "outside"),
        }
    }
}

/// Outcome of the determinant sign test with the per-column products
/// `det(Ū)·det(Ū_{αi})` and the scaled tolerances they were compared to.
#[derive(Debug, Clone)]
pub struct ConeReport {
    pub status: ConeStatus,
    pub products: Vec<f64>,
    pub tolerances: Vec<f64>,
}

/// An ordered set of `m <= n` EVVs with linearly independent value vectors
/// and a selected row set making the square submatrix nonsingular.
#[derive(Debug, Clone)]
pub struct EvvBasis {
    evvs: Vec<EvvRecord>,
    rows: Vec<usize>,
    det_ubar: f64,
}

impl EvvBasis {
    /// Builds a basis from records whose value vectors must be independent.
    pub fn new(evvs: Vec<EvvRecord>) -> Result<Self, BoundsError> {
        let columns: Vec<Vec<f64>> = evvs.iter().map(|e| e.values.clone()).collect();
        let (kept, rows) = independent_columns(&columns);
        if kept.len() != columns.len() {
            return Err(BoundsError::RankDeficient {
                dropped: first_missing(&kept, columns.len()),
            });
        }
        let mut basis = EvvBasis {
            evvs,
            rows,
            det_ubar: 0.0,
        };
        basis.det_ubar = basis.ubar().det();
        Ok(basis)
    }

    /// Like [`new`](Self::new) but drops dependent columns instead of
    /// failing; returns the surviving basis and the dropped indices.
    pub fn new_pruning(evvs: Vec<EvvRecord>) -> Result<(Self, Vec<usize>), BoundsError> {
        let columns: Vec<Vec<f64>> = evvs.iter().map(|e| e.values.clone()).collect();
        let (kept, rows) = independent_columns(&columns);
        if kept.is_empty() {
            return Err(BoundsError::Degenerate("no independent EVV columns".into()));
        }
        let dropped: Vec<usize> = (0..columns.len()).filter(|i| !kept.contains(i)).collect();
        let evvs: Vec<EvvRecord> = kept.iter().map(|&i| evvs[i].clone()).collect();
        let mut basis = EvvBasis {
            evvs,
            rows,
            det_ubar: 0.0,
        };
        basis.det_ubar = basis.ubar().det();
        Ok((basis, dropped))
    }

    pub fn m(&self) -> usize {
        self.evvs.len()
    }

    pub fn n(&self) -> usize {
        self.evvs[0].values.len()
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn evvs(&self) -> &[EvvRecord] {
        &self.evvs
    }

    pub fn det_ubar(&self) -> f64 {
        self.det_ubar
    }

    /// The full `n x m` value matrix (EVVs as columns).
    pub fn value_matrix(&self) -> Matrix {
        let cols: Vec<Vec<f64>> = self.evvs.iter().map(|e| e.values.clone()).collect();
        Matrix::from_columns(&cols)
    }

    /// The selected `m x m` submatrix `Ū`.
    pub fn ubar(&self) -> Matrix {
        let cols: Vec<Vec<f64>> = self.evvs.iter().map(|e| self.restrict(&e.values)).collect();
        Matrix::from_columns(&cols)
    }

    /// Restricts a full-length vector to the selected rows.
    pub fn restrict(&self, v: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|&r| v[r]).collect()
    }

    /// Replaces the EVV at `j`, keeping the remaining records, and reselects
    /// rows.
    pub fn with_replaced(&self, j: usize, rec: EvvRecord) -> Result<Self, BoundsError> {
        let mut evvs = self.evvs.clone();
        evvs[j] = rec;
        EvvBasis::new(evvs)
    }

    /// Removes the EVVs at the given positions and reselects rows.
    pub fn without(&self, drop: &[usize]) -> Result<Self, BoundsError> {
        let evvs: Vec<EvvRecord> = self
            .evvs
            .iter()
            .enumerate()
            .filter(|(i, _)| !drop.contains(i))
            .map(|(_, e)| e.clone())
            .collect();
        if evvs.is_empty() {
            return Err(BoundsError::Degenerate(
                "cannot drop every supporting EVV".into(),
            ));
        }
        EvvBasis::new(evvs)
    }
}

/// Greedy independent-column selection by Gaussian elimination with partial
/// pivoting; also yields the pivot rows, which maximize `|det(Ū)|` greedily.
fn independent_columns(columns: &[Vec<f64>]) -> (Vec<usize>, Vec<usize>) {
    let n = columns[0].len();
    let mut work: Vec<Vec<f64>> = columns.to_vec();
    let scale = columns
        .iter()
        .flat_map(|c| c.iter())
        .fold(0.0f64, |a, &b| a.max(b.abs()))
        .max(1e-300);
    let mut kept = Vec::new();
    let mut rows = Vec::new();
    let mut used = vec![false; n];
    for j in 0..work.len() {
        // pick the largest remaining pivot in column j
        let mut best_row = None;
        let mut best = EPS_RANK * scale;
        for r in 0..n {
            if !used[r] && work[j][r].abs() > best {
                best = work[j][r].abs();
                best_row = Some(r);
            }
        }
        let Some(p) = best_row else { continue };
        used[p] = true;
        kept.push(j);
        rows.push(p);
        // eliminate the pivot row from every later column; rows used by
        // earlier pivots are already zero in this column
        let pivot_col = work[j].clone();
        let pivot = pivot_col[p];
        for k in (j + 1)..work.len() {
            let factor = work[k][p] / pivot;
            if factor != 0.0 {
                for r in 0..n {
                    work[k][r] -= factor * pivot_col[r];
                }
                work[k][p] = 0.0;
            }
        }
    }
    rows.sort_unstable();
    (kept, rows)
}

fn first_missing(kept: &[usize], len: usize) -> usize {
    (0..len).find(|i| !kept.contains(i)).unwrap_or(0)
}

/// Selects row indices making `Ū` nonsingular for the given value columns,
/// or reports that the columns themselves are dependent.
pub fn select_basis_rows(columns: &[Vec<f64>]) -> Result<Vec<usize>, BoundsError> {
    let (kept, rows) = independent_columns(columns);
    if kept.len() != columns.len() {
        return Err(BoundsError::RankDeficient {
            dropped: first_missing(&kept, columns.len()),
        });
    }
    Ok(rows)
}

/// Determinant sign test for `α ∈ cone(u^1, ..., u^m)`.
pub fn cone_membership(basis: &EvvBasis, claims: &[f64]) -> ConeReport {
    let ubar = basis.ubar();
    let alpha_bar = basis.restrict(claims);
    let d = basis.det_ubar();
    let scale_u = ubar.hadamard_scale();
    let m = basis.m();
    let mut products = Vec::with_capacity(m);
    let mut tolerances = Vec::with_capacity(m);
    for i in 0..m {
        let replaced = ubar.with_column(i, &alpha_bar);
        let di = replaced.det();
        products.push(d * di);
        tolerances.push(EPS_DET * scale_u * replaced.hadamard_scale());
    }
    let mut any_zero = false;
    let mut status = ConeStatus::Interior;
    for (p, tol) in products.iter().zip(&tolerances) {
        if *p < -tol {
            status = ConeStatus::Outside;
            break;
        }
        if p.abs() <= *tol {
            any_zero = true;
        }
    }
    if status != ConeStatus::Outside && any_zero {
        status = ConeStatus::Boundary;
    }
    ConeReport {
        status,
        products,
        tolerances,
    }
}

/// The crossing of the claim ray with the simplex of the supporting EVVs.
#[derive(Debug, Clone)]
pub struct ConeSolution {
    /// certified lower bound `r*`
    pub r_star: f64,
    /// convex weights with `U t = r* α`
    pub t: Vec<f64>,
    /// Cramer numerators `det(Ū_{αi})`
    pub col_dets: Vec<f64>,
}

/// Certified lower bound from a basis whose cone contains the claim ray.
pub fn lower_bound(basis: &EvvBasis, claims: &[f64]) -> Result<ConeSolution, BoundsError> {
    let report = cone_membership(basis, claims);
    if report.status == ConeStatus::Outside {
        return Err(BoundsError::ConeOutside(report));
    }
    let ubar = basis.ubar();
    let alpha_bar = basis.restrict(claims);
    let m = basis.m();

    // route one: r* = 1 / (1ᵀ Ū⁻¹ ᾱ) with the inverse from the LU factors,
    // convex weights by Cramer's rule
    let inv = ubar
        .inverse()
        .ok_or(BoundsError::RankDeficient { dropped: 0 })?;
    let y = inv.mul_vec(&alpha_bar);
    let denom: f64 = y.iter().sum();
    if denom.abs() < 1e-300 {
        return Err(BoundsError::Degenerate(
            "claim ray parallel to the EVV simplex".into(),
        ));
    }
    let r_inverse_route = 1.0 / denom;

    let col_dets: Vec<f64> = (0..m)
        .map(|i| ubar.with_column(i, &alpha_bar).det())
        .collect();
    let det_sum: f64 = col_dets.iter().sum();
    if det_sum.abs() < 1e-300 {
        return Err(BoundsError::Degenerate(
            "all replacement determinants vanish".into(),
        ));
    }
    let t: Vec<f64> = col_dets.iter().map(|d| d / det_sum).collect();

    // route two: the bordered system [Ū, -ᾱ; 1ᵀ, 0] (t, r) = e_{m+1} solved
    // by plain elimination
    let mut bord = Matrix::zeros(m + 1, m + 1);
    for i in 0..m {
        for j in 0..m {
            bord.set(i, j, ubar.at(i, j));
        }
        bord.set(i, m, -alpha_bar[i]);
        bord.set(m, i, 1.0);
    }
    let mut rhs = vec![0.0; m + 1];
    rhs[m] = 1.0;
    let direct = gauss_solve(&bord, &rhs)
        .ok_or_else(|| BoundsError::Degenerate("bordered claim system is singular".into()))?;
    let r_direct = direct[m];

    let rel = (r_inverse_route - r_direct).abs() / r_inverse_route.abs().max(1e-300);
    if rel > 1e-9 {
        return Err(BoundsError::RouteMismatch {
            inverse_route: r_inverse_route,
            direct_route: r_direct,
        });
    }

    // certificate on all n rows, not only the selected ones; this is what
    // validates the row selection when m < n
    let full = basis.value_matrix();
    let reproduced = full.mul_vec(&t);
    let tol = 1e-8 * (1.0 + r_inverse_route.abs());
    for (i, (&got, &a)) in reproduced.iter().zip(claims).enumerate() {
        if (got - r_inverse_route * a).abs() > tol {
            return Err(BoundsError::SpanMismatch {
                row: i,
                residual: got - r_inverse_route * a,
            });
        }
    }

    Ok(ConeSolution {
        r_star: r_inverse_route,
        t,
        col_dets,
    })
}

/// `min_i (β_i · u_i) / (β_i · α)` over any pool of EVVs, with the argmin.
/// Every EVV ever computed may contribute; no independence is required.
pub fn upper_bound(evvs: &[EvvRecord], claims: &[f64]) -> (f64, usize) {
    assert!(!evvs.is_empty(), "upper bound needs at least one EVV");
    let mut best = f64::INFINITY;
    let mut arg = 0;
    for (i, rec) in evvs.iter().enumerate() {
        let r = hyperplane_ratio(rec, claims);
        if r < best {
            best = r;
            arg = i;
        }
    }
    (best, arg)
}

/// The claim-ray intercept of one EVV's supporting hyperplane.
pub fn hyperplane_ratio(rec: &EvvRecord, claims: &[f64]) -> f64 {
    dot(rec.beta.as_slice(), &rec.values) / dot(rec.beta.as_slice(), claims)
}

/// Lightweight snapshot of a supporting EVV for reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportEvv {
    pub beta: Vec<f64>,
    pub u: Vec<f64>,
}

/// A two-sided enclosure with its certificate data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsResult {
    /// certified lower bound; absent when the cone test fails
    pub lower: Option<f64>,
    pub upper: f64,
    /// index into the upper-bound pool achieving the minimum
    pub argmin_upper: usize,
    pub cone_status: ConeStatus,
    /// the supporting EVVs (basis snapshot)
    pub support: Vec<SupportEvv>,
    /// convex weights certifying the lower bound
    pub t: Option<Vec<f64>>,
}

pub(crate) fn snapshot(evvs: &[EvvRecord]) -> Vec<SupportEvv> {
    evvs.iter()
        .map(|e| SupportEvv {
            beta: e.beta.as_slice().to_vec(),
            u: e.values.clone(),
        })
        .collect()
}

/// Assembles bounds from a basis (lower side) and an EVV pool (upper side).
pub fn compute_bounds(basis: &EvvBasis, pool: &[EvvRecord], claims: &[f64]) -> BoundsResult {
    let report = cone_membership(basis, claims);
    let (upper, argmin_upper) = upper_bound(pool, claims);
    let solution = if report.status != ConeStatus::Outside {
        lower_bound(basis, claims).ok()
    } else {
        None
    };
    let result = BoundsResult {
        lower: solution.as_ref().map(|s| s.r_star),
        upper,
        argmin_upper,
        cone_status: report.status,
        support: snapshot(basis.evvs()),
        t: solution.map(|s| s.t),
    };
    if let Some(lo) = result.lower {
        debug_assert!(
            lo <= result.upper + 1e-9,
            "sandwich violated: {lo} > {}",
            result.upper
        );
    }
    result
}

/// Index satisfying `u_j / α_j = max_i u_i / α_i` (ties to the lowest index).
pub fn max_ratio_index(values: &[f64], claims: &[f64]) -> usize {
    let mut j = 0;
    let mut best = f64::NEG_INFINITY;
    for (i, (&u, &a)) in values.iter().zip(claims).enumerate() {
        let r = u / a;
        if r > best {
            best = r;
            j = i;
        }
    }
    j
}

/// Bounds from a single EVV of a finite-measure instance.
///
/// The basis behind the lower bound is the EVV together with the corner
/// value vectors `μ_i(C) e_i`; the closed form and the generic route are
/// both evaluated and must agree.
pub fn single_evv_bounds(
    inst: &Instance,
    rec: &EvvRecord,
    claims: &[f64],
) -> Result<BoundsResult, BoundsError> {
    let n = inst.n();
    if dot(claims, &rec.values) <= 0.0 {
        return Err(BoundsError::Degenerate("EVV is the zero vector".into()));
    }
    let j = max_ratio_index(&rec.values, claims);
    let u_j = rec.values[j];
    let masses = inst.total_masses();

    let mut denom = claims[j];
    for i in 0..n {
        if i != j {
            denom += (claims[i] * u_j - claims[j] * rec.values[i]) / masses[i];
        }
    }
    let lower_closed = u_j / denom;
    let upper = hyperplane_ratio(rec, claims);

    // generic route on the corner basis with the EVV in position j
    let mut records: Vec<EvvRecord> = (0..n).map(|i| corner_evv(inst, i)).collect();
    records[j] = rec.clone();
    let basis = EvvBasis::new(records)?;
    let report = cone_membership(&basis, claims);
    if report.status == ConeStatus::Outside {
        return Err(BoundsError::ConeOutside(report));
    }
    let solution = lower_bound(&basis, claims)?;
    let rel = (solution.r_star - lower_closed).abs() / lower_closed.abs().max(1e-300);
    if rel > 1e-9 {
        return Err(BoundsError::RouteMismatch {
            inverse_route: solution.r_star,
            direct_route: lower_closed,
        });
    }

    Ok(BoundsResult {
        lower: Some(lower_closed),
        upper,
        argmin_upper: 0,
        cone_status: report.status,
        support: snapshot(basis.evvs()),
        t: Some(solution.t),
    })
}

/// The classical single-EVV bounds for probability measures and uniform
/// weights: `u_j / (u_j - α_j (K - 1)) <= v <= K` with `K = Σ u_i`.
pub fn legut_bounds(
    inst: &Instance,
    rec: &EvvRecord,
    claims: &[f64],
) -> Result<BoundsResult, BoundsError> {
    if !inst.is_probability(1e-9) {
        return Err(BoundsError::NotNormalized);
    }
    let n = inst.n();
    let uniform = 1.0 / n as f64;
    if rec
        .beta
        .as_slice()
        .iter()
        .any(|&b| (b - uniform).abs() > 1e-9)
    {
        return Err(BoundsError::NonUniformWeights);
    }
    let k: f64 = rec.values.iter().sum();
    if k <= 0.0 {
        return Err(BoundsError::Degenerate("EVV is the zero vector".into()));
    }
    let j = max_ratio_index(&rec.values, claims);
    let lower = rec.values[j] / (rec.values[j] - claims[j] * (k - 1.0));

    // must coincide with the general single-EVV bounds under unit masses
    let general = single_evv_bounds(inst, rec, claims)?;
    let lo_gen = general.lower.expect("single-EVV lower always certified");
    if (lower - lo_gen).abs() > 1e-12 * lower.abs().max(1.0)
        || (k - general.upper).abs() > 1e-12 * k.max(1.0)
    {
        return Err(BoundsError::RouteMismatch {
            inverse_route: lo_gen,
            direct_route: lower,
        });
    }

    Ok(BoundsResult {
        lower: Some(lower),
        upper: k,
        ..general
    })
}

#[derive(Debug, Clone)]
pub enum BoundsError {
    /// Value columns are not linearly independent; `dropped` is the first
    /// offending column.
    RankDeficient {
        dropped: usize,
    },
    /// The claim ray lies outside the cone of the basis.
    ConeOutside(ConeReport),
    /// The two computation routes disagreed beyond tolerance.
    RouteMismatch {
        inverse_route: f64,
        direct_route: f64,
    },
    /// `U t = r α` failed on a non-selected row: the claim vector is not in
    /// the span of the basis.
    SpanMismatch {
        row: usize,
        residual: f64,
    },
    /// Probability measures are required (use the single-EVV bounds instead).
    NotNormalized,
    /// Uniform weights are required (use the single-EVV bounds instead).
    NonUniformWeights,
    Degenerate(String),
}

impl fmt::Display for BoundsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundsError::RankDeficient { dropped } => {
                write!(
                    f,
                    "EVV columns not linearly independent (drop column {dropped})"
                )
            }
            BoundsError::ConeOutside(r) => {
                write!(
                    f,
                    "no lower bound from this basis: claim ray outside the EVV cone ({:?})",
                    r.products
                )
            }
            BoundsError::RouteMismatch {
                inverse_route,
                direct_route,
            } => write!(
                f,
                "internal cross-check failed: {inverse_route} vs {direct_route}"
            ),
            BoundsError::SpanMismatch { row, residual } => write!(
                f,
                "claim vector outside the span of the basis (row {row} residual {residual:e})"
            ),
            BoundsError::NotNormalized => {
                write!(
                    f,
                    "measures are not probability measures; use the single-EVV bounds"
                )
            }
            BoundsError::NonUniformWeights => {
                write!(f, "EVV weights are not uniform; use the single-EVV bounds")
            }
            BoundsError::Degenerate(s) => write!(f, "degenerate input: {s}"),
        }
    }
}

impl std::error::Error for BoundsError {}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evv::WeightVector;

    fn rec(beta: Vec<f64>, values: Vec<f64>) -> EvvRecord {
        EvvRecord::from_values(WeightVector::new(beta).unwrap(), values)
    }

    #[test]
    fn rows_for_identity() {
        let cols = vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        assert_eq!(select_basis_rows(&cols).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn dependent_columns_fail() {
        let cols = vec![vec![1.0, 0.0, 0.0], vec![2.0, 0.0, 0.0]];
        assert!(matches!(
            select_basis_rows(&cols),
            Err(BoundsError::RankDeficient { .. })
        ));
    }

    #[test]
    fn rows_for_worked_evv_matrix() {
        // the worked instance's three EVVs are independent, so the square
        // case selects every row and the submatrix is nonsingular
        let cols = vec![
            vec![0.2881, 0.5556, 0.7761],
            vec![0.25, 0.9375, 0.0],
            vec![0.0501, 0.75, 0.8594],
        ];
        assert_eq!(select_basis_rows(&cols).unwrap(), vec![0, 1, 2]);
        let basis = EvvBasis::new(vec![
            rec(vec![0.4, 0.3, 0.3], cols[0].clone()),
            rec(vec![0.3, 0.6, 0.1], cols[1].clone()),
            rec(vec![1.0 / 3.0; 3], cols[2].clone()),
        ])
        .unwrap();
        assert!(basis.det_ubar().abs() > 0.1);
    }

    #[test]
    fn wide_matrix_row_selection() {
        // m = 2 < n = 3; rows 0 and 2 carry the pivots
        let cols = vec![vec![1.0, 0.5, 0.0], vec![0.0, 0.5, 1.0]];
        let rows = select_basis_rows(&cols).unwrap();
        assert_eq!(rows.len(), 2);
        let basis = EvvBasis::new(vec![
            rec(vec![1.0, 0.0, 0.0], cols[0].clone()),
            rec(vec![0.0, 0.0, 1.0], cols[1].clone()),
        ])
        .unwrap();
        assert!(basis.det_ubar().abs() > 1e-12);
    }

    #[test]
    fn cone_single_evv_on_ray() {
        let claims = [0.2, 0.3, 0.5];
        let basis = EvvBasis::new(vec![rec(
            vec![1.0 / 3.0; 3],
            claims.iter().map(|a| 2.0 * a).collect(),
        )])
        .unwrap();
        let report = cone_membership(&basis, &claims);
        assert_eq!(report.status, ConeStatus::Interior);
        let sol = lower_bound(&basis, &claims).unwrap();
        assert!((sol.r_star - 2.0).abs() < 1e-12);
        assert_eq!(sol.t, vec![1.0]);
    }

    #[test]
    fn cone_outside_two_agents() {
        // both EVVs hug the first axis; the diagonal claim ray escapes
        let basis = EvvBasis::new(vec![
            rec(vec![1.0, 0.0], vec![1.0, 0.0]),
            rec(vec![0.9, 0.1], vec![0.9, 0.1]),
        ])
        .unwrap();
        let claims = [0.5, 0.5];
        assert_eq!(cone_membership(&basis, &claims).status, ConeStatus::Outside);
        assert!(matches!(
            lower_bound(&basis, &claims),
            Err(BoundsError::ConeOutside(_))
        ));
    }

    #[test]
    fn single_evv_off_span_is_rejected() {
        // m = 1 < n = 2 and the claim ray leaves the span: the all-rows
        // certificate must catch it even though the 1x1 determinant test
        // passes on the selected row
        let basis = EvvBasis::new(vec![rec(vec![0.5, 0.5], vec![1.0, 0.5])]).unwrap();
        let claims = [0.5, 0.5];
        assert_ne!(cone_membership(&basis, &claims).status, ConeStatus::Outside);
        assert!(matches!(
            lower_bound(&basis, &claims),
            Err(BoundsError::SpanMismatch { .. })
        ));
    }

    #[test]
    fn published_support_set_lower_bound() {
        // three supporting EVVs with the claim ray strictly inside
        let basis = EvvBasis::new(vec![
            rec(vec![1.0 / 3.0; 3], vec![0.5144, 0.5663, 0.3447]),
            rec(vec![1.0 / 3.0; 3], vec![0.4858, 0.5462, 0.4410]),
            rec(vec![1.0 / 3.0; 3], vec![0.4816, 0.3910, 0.6551]),
        ])
        .unwrap();
        let claims = [1.0 / 3.0; 3];
        assert_eq!(
            cone_membership(&basis, &claims).status,
            ConeStatus::Interior
        );
        let sol = lower_bound(&basis, &claims).unwrap();
        assert!((sol.r_star - 1.4792).abs() < 1e-3, "r* = {}", sol.r_star);
        assert!(sol.t.iter().all(|&t| t > 0.0));
        assert!((sol.t.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn upper_bound_of_claims_evv_is_one() {
        let claims = [0.25, 0.25, 0.5];
        let pool = [rec(vec![0.2, 0.5, 0.3], claims.to_vec())];
        let (up, arg) = upper_bound(&pool, &claims);
        assert!((up - 1.0).abs() < 1e-12);
        assert_eq!(arg, 0);
    }

    #[test]
    fn legut_formula_two_agents() {
        // u = (0.3, 0.9), K = 1.2, j = 2: lower 0.9/0.8 = 1.125, upper 1.2
        let f = crate::measure::DensityFunction::constant("u", 1.0).unwrap();
        let g = crate::measure::DensityFunction::new(
            "lin",
            vec![crate::measure::PolyPiece::new(0.0, 1.0, vec![0.0, 2.0])],
        )
        .unwrap();
        let inst = Instance::new(vec![f, g], vec![0.5, 0.5]).unwrap();
        let r = rec(vec![0.5, 0.5], vec![0.3, 0.9]);
        let out = legut_bounds(&inst, &r, &[0.5, 0.5]).unwrap();
        assert!((out.lower.unwrap() - 1.125).abs() < 1e-12);
        assert!((out.upper - 1.2).abs() < 1e-12);
    }

    #[test]
    fn legut_identity_evv_gives_unit_bounds() {
        let f = crate::measure::DensityFunction::constant("u", 1.0).unwrap();
        let inst = Instance::new(vec![f.clone(), f.clone(), f], vec![1.0 / 3.0; 3]).unwrap();
        let r = rec(vec![1.0 / 3.0; 3], vec![1.0 / 3.0; 3]);
        let out = legut_bounds(&inst, &r, &[1.0 / 3.0; 3]).unwrap();
        assert!((out.lower.unwrap() - 1.0).abs() < 1e-12);
        assert!((out.upper - 1.0).abs() < 1e-12);
    }

    #[test]
    fn legut_requires_probability_measures() {
        let f = crate::measure::DensityFunction::constant("u", 2.0).unwrap();
        let g = crate::measure::DensityFunction::constant("v", 1.0).unwrap();
        let inst = Instance::new(vec![f, g], vec![0.5, 0.5]).unwrap();
        let r = rec(vec![0.5, 0.5], vec![2.0, 0.0]);
        assert!(matches!(
            legut_bounds(&inst, &r, &[0.5, 0.5]),
            Err(BoundsError::NotNormalized)
        ));
    }

    #[test]
    fn single_evv_equals_unit_ray() {
        let f = crate::measure::DensityFunction::constant("u", 1.0).unwrap();
        let inst = Instance::new(vec![f.clone(), f], vec![0.5, 0.5]).unwrap();
        let r = rec(vec![0.5, 0.5], vec![0.5, 0.5]);
        let out = single_evv_bounds(&inst, &r, &[0.5, 0.5]).unwrap();
        assert!((out.lower.unwrap() - 1.0).abs() < 1e-12);
        assert!((out.upper - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_evv_with_mixed_masses_cross_checks() {
        // masses (2, 1, 1): the closed form must match the corner-basis route,
        // which single_evv_bounds verifies internally
        let f = crate::measure::DensityFunction::constant("a", 2.0).unwrap();
        let g = crate::measure::DensityFunction::constant("b", 1.0).unwrap();
        let h = crate::measure::DensityFunction::constant("c", 1.0).unwrap();
        let inst = Instance::new(vec![f, g, h], vec![1.0 / 3.0; 3]).unwrap();
        let r = rec(vec![1.0 / 3.0; 3], vec![1.0, 0.5, 0.5]);
        let out = single_evv_bounds(&inst, &r, &[1.0 / 3.0; 3]).unwrap();
        let lo = out.lower.unwrap();
        assert!(lo > 0.0 && lo <= out.upper + 1e-9);
    }

    #[test]
    fn zero_replacement_determinant_means_removable_column() {
        // claims in the span of the first two columns: t_3 = 0 and dropping
        // the third EVV leaves the bound unchanged
        let u1 = vec![1.0, 0.0, 0.2];
        let u2 = vec![0.0, 1.0, 0.2];
        let u3 = vec![0.3, 0.3, 0.6];
        let claims: Vec<f64> = (0..3).map(|i| 0.5 * u1[i] + 0.5 * u2[i]).collect();
        let claims: Vec<f64> = {
            let s: f64 = claims.iter().sum();
            claims.iter().map(|c| c / s).collect()
        };
        let full = EvvBasis::new(vec![
            rec(vec![1.0 / 3.0; 3], u1.clone()),
            rec(vec![1.0 / 3.0; 3], u2.clone()),
            rec(vec![1.0 / 3.0; 3], u3),
        ])
        .unwrap();
        let sol = lower_bound(&full, &claims).unwrap();
        assert!(sol.t[2].abs() < 1e-9, "t = {:?}", sol.t);
        let reduced = full.without(&[2]).unwrap();
        let sol2 = lower_bound(&reduced, &claims).unwrap();
        assert!((sol.r_star - sol2.r_star).abs() < 1e-9);
    }
}
