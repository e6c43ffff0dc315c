//! Iterative improvement of both bounds from a stream of candidate EVVs.
//!
//! A [`SupportSet`] keeps two things: the supporting basis (the `m` EVVs
//! whose cone currently certifies the lower bound) and an append-only pool
//! feeding the upper bound. Candidates enter through a determinant swap
//! test: there is a position `j` such that for every other column `k` the
//! hyperplane through the origin, the candidate and the remaining columns
//! separates the claim vector from column `j`. When such a `j` exists the
//! candidate may replace column `j` without losing cone containment of the
//! claim ray; when the test fails everywhere the candidate is discarded and
//! the current lower bound is kept. Either way the candidate stays in the
//! upper-bound pool, where a new EVV is never harmful.
//!
//! Candidate weights come either from uniform simplex sampling or from a
//! projected subgradient walk on the upper-bound ratio.

use crate::bounds::{
    cone_membership, hyperplane_ratio, lower_bound, snapshot, BoundsResult, ConeStatus, EvvBasis,
};
use crate::evv::{compute_evv, corner_evv, dot, EvvRecord, WeightVector};
use crate::linalg::Matrix;
use crate::measure::Instance;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt;
use std::io::Write;

/// Scaled tolerance for treating a swap-test determinant product as zero.
const SWAP_EPS: f64 = 1e-9;

/// How a candidate fared against the swap test.
#[derive(Debug, Clone, PartialEq)]
pub struct SwapDecision {
    /// position whose EVV the candidate replaces
    pub j: usize,
    /// true when every separation held strictly
    pub strict: bool,
    /// columns `k` where the claim-side determinant vanished; their weight
    /// in the lower bound is zero and they can be discarded after the swap
    pub alpha_equalities: Vec<usize>,
}

/// Per-position outcome of the swap condition, exposed for diagnostics and
/// for cross-checking against the brute-force cone test.
#[derive(Debug, Clone)]
pub struct SwapCheck {
    pub qualifies: bool,
    /// `(k, det(ᾱ, Ū_{*j-k}) · det(ū^j, Ū_{*j-k}))` for each `k != j`
    pub products: Vec<(usize, f64)>,
    /// whether the post-swap square submatrix stays nonsingular
    pub post_det_ok: bool,
}

/// Evaluates the swap condition at one position `j`.
pub fn swap_test_at(
    basis: &EvvBasis,
    candidate: &EvvRecord,
    claims: &[f64],
    j: usize,
) -> SwapCheck {
    let m = basis.m();
    let ustar = basis.restrict(&candidate.values);
    let alpha_bar = basis.restrict(claims);
    let cols: Vec<Vec<f64>> = basis
        .evvs()
        .iter()
        .map(|e| basis.restrict(&e.values))
        .collect();

    let mut products = Vec::with_capacity(m - 1);
    let mut qualifies = true;
    for k in 0..m {
        if k == j {
            continue;
        }
        // columns of Ū with j replaced by the candidate and k removed
        let reduced: Vec<&[f64]> = (0..m)
            .filter(|&c| c != k)
            .map(|c| {
                if c == j {
                    ustar.as_slice()
                } else {
                    cols[c].as_slice()
                }
            })
            .collect();
        let m1 = prepend_column(&alpha_bar, &reduced);
        let m2 = prepend_column(&cols[j], &reduced);
        let d1 = m1.det();
        let d2 = m2.det();
        let p = d1 * d2;
        let tol = SWAP_EPS * m1.hadamard_scale() * m2.hadamard_scale();
        products.push((k, p));
        if p > tol {
            qualifies = false;
        }
    }

    // dependence guard: the candidate must not be a combination of the
    // surviving columns
    let post_cols: Vec<Vec<f64>> = (0..m)
        .map(|c| {
            if c == j {
                ustar.clone()
            } else {
                cols[c].clone()
            }
        })
        .collect();
    let post = Matrix::from_columns(&post_cols);
    let post_det_ok = post.det().abs() > SWAP_EPS * post.hadamard_scale();
    SwapCheck {
        qualifies: qualifies && post_det_ok,
        products,
        post_det_ok,
    }
}

/// Scans positions in index order and returns the first qualifying one.
pub fn swap_test(basis: &EvvBasis, candidate: &EvvRecord, claims: &[f64]) -> Option<SwapDecision> {
    let m = basis.m();
    let alpha_bar = basis.restrict(claims);
    let ustar = basis.restrict(&candidate.values);
    let cols: Vec<Vec<f64>> = basis
        .evvs()
        .iter()
        .map(|e| basis.restrict(&e.values))
        .collect();
    for j in 0..m {
        let check = swap_test_at(basis, candidate, claims, j);
        if !check.qualifies {
            continue;
        }
        // classify equalities: only a vanishing claim-side determinant makes
        // column k removable (its convex weight is zero); a vanishing
        // candidate-side determinant just means the candidate is coplanar
        // with the other columns and says nothing about k
        let mut alpha_equalities = Vec::new();
        let mut strict = true;
        for &(k, p) in &check.products {
            let reduced: Vec<&[f64]> = (0..m)
                .filter(|&c| c != k)
                .map(|c| {
                    if c == j {
                        ustar.as_slice()
                    } else {
                        cols[c].as_slice()
                    }
                })
                .collect();
            let m1 = prepend_column(&alpha_bar, &reduced);
            let d1 = m1.det();
            let tol1 = SWAP_EPS * m1.hadamard_scale();
            if d1.abs() <= tol1 {
                alpha_equalities.push(k);
            }
            let tol = SWAP_EPS
                * m1.hadamard_scale()
                * prepend_column(&cols[j], &reduced).hadamard_scale();
            if p.abs() <= tol {
                strict = false;
            }
        }
        return Some(SwapDecision {
            j,
            strict,
            alpha_equalities,
        });
    }
    None
}

fn prepend_column(first: &[f64], rest: &[&[f64]]) -> Matrix {
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(rest.len() + 1);
    cols.push(first.to_vec());
    for r in rest {
        cols.push(r.to_vec());
    }
    Matrix::from_columns(&cols)
}

#[derive(Debug, Clone)]
pub enum SwapError {
    /// Post-swap verification failed; the support set was left unchanged.
    RolledBack(String),
}

impl fmt::Display for SwapError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SwapError::RolledBack(why) => write!(f, "swap rolled back: {why}"),
        }
    }
}

impl std::error::Error for SwapError {}

/// The supporting EVVs for the lower bound plus the upper-bound pool.
#[derive(Debug, Clone)]
pub struct SupportSet {
    basis: EvvBasis,
    pool: Vec<EvvRecord>,
    claims: Vec<f64>,
    lower: f64,
    lower_t: Vec<f64>,
    upper: f64,
    argmin_upper: usize,
    cone_status: ConeStatus,
}

impl SupportSet {
    /// Starts from the corner value vectors `μ_i(C) e_i`, whose cone
    /// contains every interior claim vector; for probability measures this
    /// is the identity matrix.
    pub fn from_corners(inst: &Instance, claims: &[f64]) -> Self {
        let corners: Vec<EvvRecord> = (0..inst.n()).map(|i| corner_evv(inst, i)).collect();
        let basis = EvvBasis::new(corners.clone()).expect("corner vectors are independent");
        let sol = lower_bound(&basis, claims).expect("interior claims lie in the corner cone");
        let report = cone_membership(&basis, claims);
        let (upper, argmin_upper) = crate::bounds::upper_bound(&corners, claims);
        SupportSet {
            basis,
            pool: corners,
            claims: claims.to_vec(),
            lower: sol.r_star,
            lower_t: sol.t,
            upper,
            argmin_upper,
            cone_status: report.status,
        }
    }

    pub fn basis(&self) -> &EvvBasis {
        &self.basis
    }

    pub fn pool(&self) -> &[EvvRecord] {
        &self.pool
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn bounds(&self) -> BoundsResult {
        BoundsResult {
            lower: Some(self.lower),
            upper: self.upper,
            argmin_upper: self.argmin_upper,
            cone_status: self.cone_status,
            support: snapshot(self.basis.evvs()),
            t: Some(self.lower_t.clone()),
        }
    }

    /// Adds a record to the upper-bound pool only.
    pub fn add_to_pool(&mut self, rec: EvvRecord) {
        let ratio = hyperplane_ratio(&rec, &self.claims);
        self.pool.push(rec);
        if ratio < self.upper {
            self.upper = ratio;
            self.argmin_upper = self.pool.len() - 1;
        }
    }

    /// Replaces the basis EVV at `j` with `candidate` (which the swap test
    /// must have approved), re-verifies the cone and the lower bound, and
    /// applies the equality-case discards. Any verification failure rolls
    /// the support set back and reports why.
    pub fn apply_swap(
        &mut self,
        j: usize,
        candidate: EvvRecord,
        decision: &SwapDecision,
    ) -> Result<(), SwapError> {
        let swapped = self
            .basis
            .with_replaced(j, candidate)
            .map_err(|e| SwapError::RolledBack(format!("post-swap basis: {e}")))?;
        let report = cone_membership(&swapped, &self.claims);
        if report.status == ConeStatus::Outside {
            return Err(SwapError::RolledBack("post-swap cone test failed".into()));
        }
        let sol = lower_bound(&swapped, &self.claims)
            .map_err(|e| SwapError::RolledBack(format!("post-swap lower bound: {e}")))?;
        if sol.r_star < self.lower - 1e-9 {
            return Err(SwapError::RolledBack(format!(
                "lower bound would regress from {} to {}",
                self.lower, sol.r_star
            )));
        }

        let mut new_basis = swapped;
        let mut new_sol = sol;
        let mut new_status = report.status;
        if !decision.alpha_equalities.is_empty() {
            // the flagged columns carry zero weight; try shedding them, keep
            // the plain swap if verification disagrees
            if let Ok(shrunk) = new_basis.without(&decision.alpha_equalities) {
                let rep = cone_membership(&shrunk, &self.claims);
                if rep.status != ConeStatus::Outside {
                    if let Ok(s) = lower_bound(&shrunk, &self.claims) {
                        if (s.r_star - new_sol.r_star).abs() <= 1e-9 * (1.0 + new_sol.r_star.abs())
                        {
                            new_basis = shrunk;
                            new_sol = s;
                            new_status = rep.status;
                        }
                    }
                }
            }
        }

        self.basis = new_basis;
        self.lower = new_sol.r_star;
        self.lower_t = new_sol.t;
        self.cone_status = new_status;
        Ok(())
    }

    /// Feeds one candidate EVV: pool first, then the swap test.
    /// Returns the accepted replacement position, if any.
    pub fn offer(&mut self, rec: EvvRecord) -> Option<usize> {
        let decision = swap_test(&self.basis, &rec, &self.claims);
        self.add_to_pool(rec.clone());
        if let Some(d) = decision {
            if self.apply_swap(d.j, rec, &d).is_ok() {
                return Some(d.j);
            }
        }
        None
    }
}

/// One refinement step as recorded in a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub beta: Vec<f64>,
    pub u: Vec<f64>,
    /// replacement position, if the swap was accepted
    pub swap_index: Option<usize>,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RefineTrace {
    pub rows: Vec<TraceRow>,
}

impl RefineTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let n = self.rows.first().map_or(0, |r| r.beta.len());
        out.push_str("iteration");
        for i in 0..n {
            out.push_str(&format!(",beta_{}", i + 1));
        }
        for i in 0..n {
            out.push_str(&format!(",u_{}", i + 1));
        }
        out.push_str(",swap_index,lower,upper\n");
        for row in &self.rows {
            out.push_str(&row.iteration.to_string());
            for b in &row.beta {
                out.push_str(&format!(",{b}"));
            }
            for u in &row.u {
                out.push_str(&format!(",{u}"));
            }
            let swap = row.swap_index.map_or(-1i64, |j| j as i64);
            out.push_str(&format!(",{swap},{},{}\n", row.lower, row.upper));
        }
        out
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(self.to_csv().as_bytes())
    }
}

/// Uniform simplex sample via normalized unit exponentials.
fn sample_simplex<R: Rng>(rng: &mut R, n: usize) -> WeightVector {
    loop {
        let draws: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
        let sum: f64 = draws.iter().sum();
        if sum > 1e-300 {
            return WeightVector::new(draws.into_iter().map(|d| d / sum).collect())
                .expect("exponential draws are nonnegative");
        }
    }
}

fn seeded_support(inst: &Instance, claims: &[f64]) -> SupportSet {
    let mut support = SupportSet::from_corners(inst, claims);
    // seed the pool with the uniform-weight EVV so a single-EVV upper bound
    // is available before any iteration has run
    support.add_to_pool(compute_evv(inst, &WeightVector::uniform(inst.n())));
    support
}

/// Random-search refinement: `count` uniform weight samples, each offered to
/// the support set.
pub fn refine_random(
    inst: &Instance,
    claims: &[f64],
    count: usize,
    seed: u64,
) -> (BoundsResult, RefineTrace) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut support = seeded_support(inst, claims);
    let mut trace = RefineTrace::default();
    for it in 1..=count {
        let beta = sample_simplex(&mut rng, inst.n());
        let rec = compute_evv(inst, &beta);
        let (beta_out, u_out) = (rec.beta.as_slice().to_vec(), rec.values.clone());
        let swap_index = support.offer(rec);
        trace.rows.push(TraceRow {
            iteration: it,
            beta: beta_out,
            u: u_out,
            swap_index,
            lower: support.lower(),
            upper: support.upper(),
        });
    }
    (support.bounds(), trace)
}

/// Step-size schedule for the subgradient walk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    /// `γ_t = c / sqrt(t)`
    SqrtDecay { c: f64 },
    /// `γ_t = c (r̄(β) - lower) / |g|²`, targeting the certified lower bound
    Polyak { c: f64 },
}

#[derive(Debug, Clone)]
pub struct SubgradientConfig {
    pub max_iter: usize,
    /// stop once `upper - lower` drops to this
    pub gap_tol: f64,
    pub step: StepRule,
    /// simplex floor keeping iterates away from the boundary
    pub eps_beta: f64,
}

impl Default for SubgradientConfig {
    fn default() -> Self {
        SubgradientConfig {
            max_iter: 200,
            gap_tol: 1e-3,
            step: StepRule::SqrtDecay { c: 0.5 },
            eps_beta: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RefineOutcome {
    pub bounds: BoundsResult,
    pub trace: RefineTrace,
    pub iterations: usize,
    /// false when the loop exhausted `max_iter` without reaching `gap_tol`;
    /// the returned bounds are valid either way
    pub gap_met: bool,
}

/// Projected-subgradient refinement of the upper-bound ratio
/// `r̄(β) = (β·u^β) / (β·α)`, starting from uniform weights. Every iterate's
/// EVV also feeds the swap test, so the lower bound tightens alongside.
pub fn refine_subgradient(
    inst: &Instance,
    claims: &[f64],
    config: &SubgradientConfig,
) -> RefineOutcome {
    assert!(config.max_iter >= 1);
    let n = inst.n();
    assert!(config.eps_beta > 0.0 && config.eps_beta < 1.0 / n as f64);
    let mut support = seeded_support(inst, claims);
    let mut trace = RefineTrace::default();
    let mut beta = WeightVector::uniform(n);
    let mut gap_met = false;
    let mut iterations = 0;
    for t in 1..=config.max_iter {
        iterations = t;
        let rec = compute_evv(inst, &beta);
        let u = rec.values.clone();
        let beta_out = rec.beta.as_slice().to_vec();
        let swap_index = support.offer(rec);
        trace.rows.push(TraceRow {
            iteration: t,
            beta: beta_out,
            u: u.clone(),
            swap_index,
            lower: support.lower(),
            upper: support.upper(),
        });
        if support.upper() - support.lower() <= config.gap_tol {
            gap_met = true;
            break;
        }
        let denom = dot(beta.as_slice(), claims);
        let ratio = dot(beta.as_slice(), &u) / denom;
        let g: Vec<f64> = (0..n).map(|i| (u[i] - ratio * claims[i]) / denom).collect();
        let gamma = match config.step {
            StepRule::SqrtDecay { c } => c / (t as f64).sqrt(),
            StepRule::Polyak { c } => {
                let norm2 = dot(&g, &g);
                if norm2 < 1e-30 {
                    0.0
                } else {
                    c * (ratio - support.lower()).max(0.0) / norm2
                }
            }
        };
        let stepped: Vec<f64> = beta
            .as_slice()
            .iter()
            .zip(&g)
            .map(|(b, gi)| b - gamma * gi)
            .collect();
        beta = WeightVector::new(project_simplex_floor(&stepped, config.eps_beta))
            .expect("projection output is a valid weight vector");
    }
    RefineOutcome {
        bounds: support.bounds(),
        trace,
        iterations,
        gap_met,
    }
}

/// Euclidean projection onto `{x : Σ x = 1, x_i >= floor}`.
pub fn project_simplex_floor(v: &[f64], floor: f64) -> Vec<f64> {
    let n = v.len();
    let budget = 1.0 - n as f64 * floor;
    assert!(budget > 0.0, "floor too large for dimension {n}");
    let shifted: Vec<f64> = v.iter().map(|x| x - floor).collect();
    let mut sorted = shifted.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = (sorted[0] - budget).max(0.0);
    for (i, &s) in sorted.iter().enumerate() {
        cumsum += s;
        let candidate = (cumsum - budget) / (i as f64 + 1.0);
        if s - candidate > 0.0 {
            theta = candidate;
        }
    }
    shifted
        .iter()
        .map(|x| (x - theta).max(0.0) + floor)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::DensityFunction;

    fn two_agent_unit_instance() -> Instance {
        let f = DensityFunction::constant("u", 1.0).unwrap();
        Instance::new(vec![f.clone(), f], vec![0.5, 0.5]).unwrap()
    }

    fn synthetic(beta: Vec<f64>, values: Vec<f64>) -> EvvRecord {
        EvvRecord::from_values(WeightVector::new(beta).unwrap(), values)
    }

    #[test]
    fn swap_replaces_first_corner_in_two_dimensions() {
        // candidate inside the corner cone with the claim ray between the
        // candidate and the second corner: position 1 must be replaced
        let inst = two_agent_unit_instance();
        let claims = [0.3, 0.7];
        let mut support = SupportSet::from_corners(&inst, &claims);
        let candidate = synthetic(vec![0.5, 0.5], vec![0.8, 0.5]);
        let decision = swap_test(support.basis(), &candidate, &claims).unwrap();
        assert_eq!(decision.j, 0);
        assert!(decision.strict);
        assert_eq!(support.offer(candidate), Some(0));
        assert_eq!(support.basis().evvs()[0].values, vec![0.8, 0.5]);
        assert!(support.lower() > 1.0);
    }

    #[test]
    fn self_replacement_is_a_no_op() {
        let inst = two_agent_unit_instance();
        let claims = [0.5, 0.5];
        let mut support = SupportSet::from_corners(&inst, &claims);
        let before = support.lower();
        let duplicate = synthetic(vec![1.0, 0.0], vec![1.0, 0.0]);
        let decision = swap_test(support.basis(), &duplicate, &claims).unwrap();
        assert_eq!(decision.j, 0);
        assert!(!decision.strict);
        support.offer(duplicate);
        assert!((support.lower() - before).abs() < 1e-12);
        assert_eq!(support.basis().m(), 2);
    }

    #[test]
    fn equality_case_sheds_a_column() {
        // claims coplanar with the candidate and the third corner: after the
        // swap the second corner carries zero weight and is discarded
        let f = DensityFunction::constant("u", 1.0).unwrap();
        let inst = Instance::new(vec![f.clone(), f.clone(), f], vec![1.0 / 3.0; 3]).unwrap();
        let raw_claims = [0.4, 0.4, 0.5];
        let s: f64 = raw_claims.iter().sum();
        let claims: Vec<f64> = raw_claims.iter().map(|c| c / s).collect();
        let mut support = SupportSet::from_corners(&inst, &claims);
        let before = support.lower();
        let candidate = synthetic(vec![1.0 / 3.0; 3], vec![0.4, 0.4, 0.2]);
        let decision = swap_test(support.basis(), &candidate, &claims).unwrap();
        assert!(!decision.alpha_equalities.is_empty());
        support.offer(candidate);
        assert_eq!(support.basis().m(), 2);
        assert!((support.lower() - before).abs() < 1e-9);
    }

    #[test]
    fn projection_respects_floor_and_sum() {
        let p = project_simplex_floor(&[1.2, -0.4, 0.3], 1e-6);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|&x| x >= 1e-6 - 1e-15));
        // an interior point projects to itself
        let q = project_simplex_floor(&[0.2, 0.3, 0.5], 1e-6);
        for (a, b) in q.iter().zip([0.2, 0.3, 0.5]) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn identical_measures_collapse_immediately() {
        let f = DensityFunction::constant("u", 1.0).unwrap();
        let inst = Instance::new(vec![f.clone(), f.clone(), f], vec![1.0 / 3.0; 3]).unwrap();
        let claims = [1.0 / 3.0; 3];
        for count in [0, 5] {
            let (bounds, _) = refine_random(&inst, &claims, count, 11);
            assert!((bounds.lower.unwrap() - 1.0).abs() < 1e-6);
            assert!((bounds.upper - 1.0).abs() < 1e-6);
        }
        let out = refine_subgradient(&inst, &claims, &SubgradientConfig::default());
        assert!(out.gap_met);
        assert_eq!(out.iterations, 1);
        assert!((out.bounds.upper - 1.0).abs() < 1e-9);
    }

    #[test]
    fn traces_are_deterministic() {
        let f = DensityFunction::constant("u", 1.0).unwrap();
        let g = DensityFunction::new(
            "lin",
            vec![crate::measure::PolyPiece::new(0.0, 1.0, vec![0.0, 2.0])],
        )
        .unwrap();
        let inst = Instance::new(vec![f, g], vec![0.5, 0.5]).unwrap();
        let (b1, t1) = refine_random(&inst, &[0.5, 0.5], 40, 7);
        let (b2, t2) = refine_random(&inst, &[0.5, 0.5], 40, 7);
        assert_eq!(t1.to_csv(), t2.to_csv());
        assert_eq!(b1.lower, b2.lower);
        assert_eq!(b1.upper, b2.upper);
    }

    #[test]
    fn frozen_weights_keep_upper_constant() {
        let f = DensityFunction::constant("u", 1.0).unwrap();
        let g = DensityFunction::new(
            "lin",
            vec![crate::measure::PolyPiece::new(0.0, 1.0, vec![0.0, 2.0])],
        )
        .unwrap();
        let inst = Instance::new(vec![f, g], vec![0.5, 0.5]).unwrap();
        let config = SubgradientConfig {
            max_iter: 10,
            gap_tol: 0.0,
            step: StepRule::SqrtDecay { c: 0.0 },
            eps_beta: 1e-6,
        };
        let out = refine_subgradient(&inst, &[0.5, 0.5], &config);
        let first = hyperplane_ratio(&compute_evv(&inst, &WeightVector::uniform(2)), &[0.5, 0.5]);
        for row in &out.trace.rows {
            assert!((row.upper - first).abs() < 1e-12);
        }
    }
}
