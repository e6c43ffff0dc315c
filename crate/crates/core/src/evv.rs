//! Weighted maxsum partitions and their efficient value vectors.
//!
//! For a weight vector `β` on the simplex, a partition maximizing
//! `Σ β_i μ_i(A_i)` assigns each point `x` to an agent maximizing
//! `β_k f_k(x)`. The value vector `u_i = μ_i(A_i)` of such a partition is the
//! efficient value vector (EVV) for `β`; it is a point where the hyperplane
//! with normal `β` supports the partition range, i.e. a Pareto-border point.
//!
//! Cell boundaries are localized by scanning the pointwise argmax on a dense
//! grid (all piece endpoints plus `n_scan` uniform probes) and bisecting the
//! two competing weighted densities wherever the winning label changes.

use crate::measure::{Instance, IntervalSet};
use std::fmt;

/// A point of the weight simplex. Entries are nonnegative and normalized to
/// sum to one at construction; zero entries are allowed (corner weights are
/// needed to produce the corner value vectors), unlike claim vectors which
/// must be interior.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(raw: Vec<f64>) -> Result<Self, WeightError> {
        if raw.is_empty() {
            return Err(WeightError::Empty);
        }
        if raw.iter().any(|&b| b < 0.0 || !b.is_finite()) {
            return Err(WeightError::Negative);
        }
        let sum: f64 = raw.iter().sum();
        if sum <= 0.0 {
            return Err(WeightError::ZeroSum);
        }
        Ok(WeightVector(raw.into_iter().map(|b| b / sum).collect()))
    }

    pub fn uniform(n: usize) -> Self {
        WeightVector(vec![1.0 / n as f64; n])
    }

    /// The k-th vertex of the simplex.
    pub fn corner(n: usize, k: usize) -> Self {
        let mut v = vec![0.0; n];
        v[k] = 1.0;
        WeightVector(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum WeightError {
    Empty,
    Negative,
    ZeroSum,
}

impl fmt::Display for WeightError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightError::Empty => write!(f, "weight vector is empty"),
            WeightError::Negative => write!(f, "weight vector has a negative or non-finite entry"),
            WeightError::ZeroSum => write!(f, "weight vector sums to zero"),
        }
    }
}

impl std::error::Error for WeightError {}

/// Knobs for the argmax scan. The defaults comfortably over-resolve the
/// crossing structure of low-degree densities; raise `n_scan` for densities
/// with many close crossings.
#[derive(Debug, Clone)]
pub struct PartitionParams {
    pub n_scan: usize,
    pub tol_x: f64,
}

impl Default for PartitionParams {
    fn default() -> Self {
        PartitionParams {
            n_scan: 4096,
            tol_x: 1e-12,
        }
    }
}

/// One cell of a labeled partition: the owning agent holds `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub lo: f64,
    pub hi: f64,
    pub owner: usize,
}

/// An interval partition of `[0, 1]` with an owning agent per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPartition {
    cells: Vec<Cell>,
    per_agent: Vec<IntervalSet>,
}

impl LabeledPartition {
    fn from_cells(n: usize, cells: Vec<Cell>) -> Self {
        let mut buckets: Vec<Vec<(f64, f64)>> = vec![Vec::new(); n];
        for c in &cells {
            buckets[c.owner].push((c.lo, c.hi));
        }
        let per_agent = buckets
            .into_iter()
            .map(|b| IntervalSet::from_merged(b).expect("cells lie in [0,1]"))
            .collect();
        LabeledPartition { cells, per_agent }
    }

    /// Whole cake to a single agent.
    pub fn single_owner(n: usize, owner: usize) -> Self {
        LabeledPartition::from_cells(
            n,
            vec![Cell {
                lo: 0.0,
                hi: 1.0,
                owner,
            }],
        )
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn agent_set(&self, i: usize) -> &IntervalSet {
        &self.per_agent[i]
    }

    pub fn n_agents(&self) -> usize {
        self.per_agent.len()
    }

    /// Interior cell boundaries (excludes 0 and 1).
    pub fn breakpoints(&self) -> Vec<f64> {
        self.cells.iter().skip(1).map(|c| c.lo).collect()
    }

    /// Verifies the argmax inequality at three interior probes of every cell.
    pub fn check_pointwise_optimal(
        &self,
        inst: &Instance,
        beta: &WeightVector,
        tol: f64,
    ) -> Result<(), String> {
        let b = beta.as_slice();
        for cell in &self.cells {
            let w = cell.hi - cell.lo;
            for frac in [0.5, 0.25, 0.75] {
                let x = cell.lo + frac * w;
                let own = b[cell.owner] * inst.density(cell.owner).eval_in(x);
                for h in 0..inst.n() {
                    let other = b[h] * inst.density(h).eval_in(x);
                    if other > own + tol {
                        return Err(format!(
                            "cell [{}, {}] owned by {} loses to {} at x = {x}: {own} < {other}",
                            cell.lo, cell.hi, cell.owner, h
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

/// An EVV together with the weights and partition that produced it.
#[derive(Debug, Clone)]
pub struct EvvRecord {
    pub beta: WeightVector,
    pub partition: LabeledPartition,
    /// `u_i = μ_i(A_i)`
    pub values: Vec<f64>,
    /// `Σ β_i u_i`, the supporting hyperplane constant
    pub maxsum: f64,
}

impl EvvRecord {
    /// Wraps an externally supplied value vector (no partition attached).
    /// Bound computations only read `beta` and `values`.
    pub fn from_values(beta: WeightVector, values: Vec<f64>) -> Self {
        let n = values.len();
        assert_eq!(beta.len(), n);
        let maxsum = dot(beta.as_slice(), &values);
        EvvRecord {
            beta,
            partition: LabeledPartition::single_owner(n, 0),
            values,
            maxsum,
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `Σ β_i u_i` for a record.
pub fn maxsum_value(rec: &EvvRecord) -> f64 {
    dot(rec.beta.as_slice(), &rec.values)
}

/// The partition assigning each point to an agent with maximal weighted
/// density, ties to the lowest agent index.
pub fn weighted_argmax_partition(inst: &Instance, beta: &WeightVector) -> LabeledPartition {
    weighted_argmax_partition_with(inst, beta, &PartitionParams::default())
}

pub fn weighted_argmax_partition_with(
    inst: &Instance,
    beta: &WeightVector,
    params: &PartitionParams,
) -> LabeledPartition {
    assert_eq!(beta.len(), inst.n(), "weight dimension mismatch");
    let b = beta.as_slice();
    let winner = |x: f64| -> usize {
        let mut best = 0usize;
        let mut best_v = b[0] * inst.density(0).eval_in(x);
        for k in 1..inst.n() {
            let v = b[k] * inst.density(k).eval_in(x);
            if v > best_v {
                best_v = v;
                best = k;
            }
        }
        best
    };

    // probe grid: all piece endpoints plus a uniform scan
    let mut grid = inst.all_breakpoints();
    for k in 0..=params.n_scan {
        grid.push(k as f64 / params.n_scan as f64);
    }
    grid.sort_by(|a, b| a.total_cmp(b));
    grid.dedup_by(|a, b| (*a - *b).abs() <= 1e-15);

    // label each grid segment by its midpoint winner
    let mut labels = Vec::with_capacity(grid.len().saturating_sub(1));
    for w in grid.windows(2) {
        labels.push(winner(0.5 * (w[0] + w[1])));
    }

    let mut cells: Vec<Cell> = Vec::new();
    let mut start = 0.0;
    let mut current = labels[0];
    for i in 1..labels.len() {
        if labels[i] != current {
            // the winner changes somewhere between the two segment midpoints;
            // bisect on the winning label, which also handles density jumps
            // at piece seams
            let mut lo = 0.5 * (grid[i - 1] + grid[i]);
            let mut hi = 0.5 * (grid[i] + grid[i + 1]);
            while hi - lo > params.tol_x {
                let mid = 0.5 * (lo + hi);
                if winner(mid) == current {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let cut = 0.5 * (lo + hi);
            cells.push(Cell {
                lo: start,
                hi: cut,
                owner: current,
            });
            start = cut;
            current = labels[i];
        }
    }
    cells.push(Cell {
        lo: start,
        hi: 1.0,
        owner: current,
    });
    LabeledPartition::from_cells(inst.n(), cells)
}

/// Computes the EVV for `β`: the argmax partition and its value vector.
pub fn compute_evv(inst: &Instance, beta: &WeightVector) -> EvvRecord {
    compute_evv_with(inst, beta, &PartitionParams::default())
}

pub fn compute_evv_with(
    inst: &Instance,
    beta: &WeightVector,
    params: &PartitionParams,
) -> EvvRecord {
    let partition = weighted_argmax_partition_with(inst, beta, params);
    let values: Vec<f64> = (0..inst.n())
        .map(|i| inst.density(i).measure_of(partition.agent_set(i)).max(0.0))
        .collect();
    let maxsum = dot(beta.as_slice(), &values);
    EvvRecord {
        beta: beta.clone(),
        partition,
        values,
        maxsum,
    }
}

/// The i-th corner of the partition range: the whole cake to agent `i`,
/// value vector `μ_i(C) e_i`. This is the EVV for `β = e_i` under the
/// convention that the partition is chosen in agent i's favor.
pub fn corner_evv(inst: &Instance, i: usize) -> EvvRecord {
    let n = inst.n();
    let mut values = vec![0.0; n];
    values[i] = inst.density(i).total_mass();
    let beta = WeightVector::corner(n, i);
    let maxsum = values[i];
    EvvRecord {
        beta,
        partition: LabeledPartition::single_owner(n, i),
        values,
        maxsum,
    }
}
