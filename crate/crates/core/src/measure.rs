//! Agents' preferences as piecewise-polynomial densities on the unit
//! interval, with exact integration over finite unions of intervals.
//!
//! A [`DensityFunction`] is a list of polynomial pieces whose intervals tile
//! `[0, 1]`. Integrals are evaluated through closed-form antiderivatives, so
//! `measure_of` carries no quadrature error; that exactness is what the rest
//! of the crate leans on when it promises certified bounds.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Number of interior sample points per piece used by the nonnegativity
/// check. Sampling is a documented heuristic: exact global nonnegativity
/// testing of polynomials is out of scope.
pub const NONNEG_GRID: usize = 1024;

const ENDPOINT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PolyPiece {
    lo: f64,
    hi: f64,
    coeffs: Vec<f64>, // ascending degree
}

impl PolyPiece {
    pub fn new(lo: f64, hi: f64, coeffs: Vec<f64>) -> Self {
        PolyPiece { lo, hi, coeffs }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Horner evaluation of the piece polynomial (ignores the interval).
    pub fn eval(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    /// Antiderivative `sum c_k x^{k+1} / (k+1)` evaluated at `x`.
    fn antiderivative(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for (k, &c) in self.coeffs.iter().enumerate().rev() {
            acc = acc * x + c / (k as f64 + 1.0);
        }
        acc * x
    }

    fn integral(&self, a: f64, b: f64) -> f64 {
        self.antiderivative(b) - self.antiderivative(a)
    }
}

/// One agent's measure, represented by its density w.r.t. Lebesgue measure
/// on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityFunction {
    name: String,
    pieces: Vec<PolyPiece>,
    total_mass: f64,
}

impl DensityFunction {
    /// Validates and builds a density. Piece intervals must tile `[0, 1]`
    /// (within 1e-12 at the seams, which are then snapped), values must be
    /// nonnegative on the sampling grid, and the total mass must be positive.
    pub fn new(name: impl Into<String>, pieces: Vec<PolyPiece>) -> Result<Self, Vec<Violation>> {
        let name = name.into();
        let violations = validate_pieces(0, &name, &pieces);
        if !violations.is_empty() {
            return Err(violations);
        }
        let mut pieces = pieces;
        snap_pieces(&mut pieces);
        let total_mass: f64 = pieces.iter().map(|p| p.integral(p.lo, p.hi)).sum();
        if total_mass <= 0.0 {
            return Err(vec![Violation::NonpositiveMass {
                agent: 0,
                mass: total_mass,
            }]);
        }
        Ok(DensityFunction {
            name,
            pieces,
            total_mass,
        })
    }

    pub fn constant(name: impl Into<String>, value: f64) -> Result<Self, Vec<Violation>> {
        DensityFunction::new(name, vec![PolyPiece::new(0.0, 1.0, vec![value])])
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn pieces(&self) -> &[PolyPiece] {
        &self.pieces
    }

    /// Density value at `x`. At a shared piece endpoint the left piece wins,
    /// so evaluation is deterministic everywhere on `[0, 1]`.
    pub fn eval(&self, x: f64) -> Result<f64, MeasureError> {
        if !(0.0..=1.0).contains(&x) {
            return Err(MeasureError::OutOfDomain(x));
        }
        Ok(self.eval_in(x))
    }

    /// Same as [`eval`](Self::eval) for `x` already known to lie in `[0, 1]`.
    pub(crate) fn eval_in(&self, x: f64) -> f64 {
        debug_assert!((0.0..=1.0).contains(&x));
        // first piece whose closed interval has hi >= x; left piece wins at
        // shared endpoints because its hi == x sorts first
        let idx = self.pieces.partition_point(|p| p.hi < x);
        let idx = idx.min(self.pieces.len() - 1);
        self.pieces[idx].eval(x)
    }

    /// Exact integral of the density over `[a, b] ∩ [0, 1]`.
    pub fn measure_of_interval(&self, a: f64, b: f64) -> f64 {
        let a = a.max(0.0);
        let b = b.min(1.0);
        if b <= a {
            return 0.0;
        }
        let mut total = 0.0;
        for p in &self.pieces {
            let lo = a.max(p.lo);
            let hi = b.min(p.hi);
            if hi > lo {
                total += p.integral(lo, hi);
            }
        }
        total
    }

    /// Exact integral over a finite union of intervals.
    pub fn measure_of(&self, set: &IntervalSet) -> f64 {
        set.intervals()
            .iter()
            .map(|&(a, b)| self.measure_of_interval(a, b))
            .sum()
    }

    /// `μ(C)`, cached at construction; always positive for a valid density.
    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// Sorted piece endpoints, including 0 and 1.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.pieces.len() + 1);
        out.push(self.pieces[0].lo);
        for p in &self.pieces {
            out.push(p.hi);
        }
        out
    }

    /// Rescales to a probability density (total mass one).
    pub fn normalized(&self) -> DensityFunction {
        let m = self.total_mass;
        let pieces = self
            .pieces
            .iter()
            .map(|p| PolyPiece::new(p.lo, p.hi, p.coeffs.iter().map(|c| c / m).collect()))
            .collect();
        DensityFunction {
            name: self.name.clone(),
            pieces,
            total_mass: 1.0,
        }
    }
}

/// A finite union of disjoint closed subintervals of `[0, 1]`, kept sorted.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IntervalSet {
    intervals: Vec<(f64, f64)>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet {
            intervals: Vec::new(),
        }
    }

    pub fn whole() -> Self {
        IntervalSet {
            intervals: vec![(0.0, 1.0)],
        }
    }

    pub fn singleton(x: f64) -> Result<Self, MeasureError> {
        IntervalSet::new(vec![(x, x)])
    }

    /// Validates: each `lo <= hi`, contained in `[0, 1]`, strictly sorted and
    /// non-overlapping in the interior.
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self, MeasureError> {
        for &(a, b) in &intervals {
            if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) || b < a {
                return Err(MeasureError::BadInterval(a, b));
            }
        }
        for w in intervals.windows(2) {
            if w[1].0 < w[0].1 {
                return Err(MeasureError::Overlap(w[0], w[1]));
            }
        }
        Ok(IntervalSet { intervals })
    }

    /// Builds a set from arbitrary intervals, sorting and merging any that
    /// touch or overlap.
    pub fn from_merged(mut intervals: Vec<(f64, f64)>) -> Result<Self, MeasureError> {
        for &(a, b) in &intervals {
            if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) || b < a {
                return Err(MeasureError::BadInterval(a, b));
            }
        }
        intervals.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(intervals.len());
        for (a, b) in intervals {
            match merged.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        Ok(IntervalSet { intervals: merged })
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn total_length(&self) -> f64 {
        self.intervals.iter().map(|&(a, b)| b - a).sum()
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        let mut all = self.intervals.clone();
        all.extend_from_slice(&other.intervals);
        IntervalSet::from_merged(all).expect("unions of valid sets are valid")
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }
}

/// A full problem instance: `n >= 2` agents' densities plus an interior
/// claim vector.
#[derive(Debug, Clone)]
pub struct Instance {
    densities: Vec<DensityFunction>,
    claims: Vec<f64>,
}

impl Instance {
    pub fn new(
        densities: Vec<DensityFunction>,
        claims: Vec<f64>,
    ) -> Result<Self, ValidationReport> {
        let mut violations = Vec::new();
        if densities.len() < 2 {
            violations.push(Violation::TooFewAgents { n: densities.len() });
        }
        validate_claims(&claims, densities.len(), &mut violations);
        if !violations.is_empty() {
            return Err(ValidationReport { violations });
        }
        let sum: f64 = claims.iter().sum();
        let claims = claims.into_iter().map(|a| a / sum).collect();
        Ok(Instance { densities, claims })
    }

    pub fn n(&self) -> usize {
        self.densities.len()
    }

    pub fn claims(&self) -> &[f64] {
        &self.claims
    }

    pub fn densities(&self) -> &[DensityFunction] {
        &self.densities
    }

    pub fn density(&self, i: usize) -> &DensityFunction {
        &self.densities[i]
    }

    pub fn total_masses(&self) -> Vec<f64> {
        self.densities.iter().map(|f| f.total_mass()).collect()
    }

    pub fn is_probability(&self, tol: f64) -> bool {
        self.densities
            .iter()
            .all(|f| (f.total_mass() - 1.0).abs() <= tol)
    }

    /// Same instance with every density rescaled to a probability measure.
    pub fn normalized(&self) -> Instance {
        Instance {
            densities: self.densities.iter().map(|f| f.normalized()).collect(),
            claims: self.claims.clone(),
        }
    }

    /// Union of all agents' piece endpoints, sorted and deduplicated.
    pub fn all_breakpoints(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = self
            .densities
            .iter()
            .flat_map(|f| f.breakpoints())
            .collect();
        pts.sort_by(|a, b| a.total_cmp(b));
        pts.dedup_by(|a, b| (*a - *b).abs() <= ENDPOINT_TOL);
        pts
    }

    pub fn from_raw(raw: &RawInstance) -> Result<Self, ValidationReport> {
        let mut violations = Vec::new();
        if raw.agents.len() < 2 {
            violations.push(Violation::TooFewAgents {
                n: raw.agents.len(),
            });
        }
        validate_claims(&raw.claims, raw.agents.len(), &mut violations);
        let mut densities = Vec::with_capacity(raw.agents.len());
        for (idx, agent) in raw.agents.iter().enumerate() {
            let pieces: Vec<PolyPiece> = agent
                .pieces
                .iter()
                .map(|p| PolyPiece::new(p.interval[0], p.interval[1], p.coeffs.clone()))
                .collect();
            let vs = validate_pieces(idx, &agent.name, &pieces);
            if vs.is_empty() {
                let mut pieces = pieces;
                snap_pieces(&mut pieces);
                let mass: f64 = pieces.iter().map(|p| p.integral(p.lo, p.hi)).sum();
                if mass <= 0.0 {
                    violations.push(Violation::NonpositiveMass { agent: idx, mass });
                } else {
                    densities.push(DensityFunction {
                        name: agent.name.clone(),
                        pieces,
                        total_mass: mass,
                    });
                }
            } else {
                violations.extend(vs);
            }
        }
        if !violations.is_empty() {
            return Err(ValidationReport { violations });
        }
        let sum: f64 = raw.claims.iter().sum();
        let claims = raw.claims.iter().map(|a| a / sum).collect();
        Ok(Instance { densities, claims })
    }

    pub fn to_raw(&self) -> RawInstance {
        RawInstance {
            claims: self.claims.clone(),
            agents: self
                .densities
                .iter()
                .map(|f| RawAgent {
                    name: f.name().to_string(),
                    pieces: f
                        .pieces()
                        .iter()
                        .map(|p| RawPiece {
                            interval: [p.lo, p.hi],
                            coeffs: p.coeffs.clone(),
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self, InstanceLoadError> {
        let raw: RawInstance = serde_json::from_str(s).map_err(InstanceLoadError::Parse)?;
        Instance::from_raw(&raw).map_err(InstanceLoadError::Invalid)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_raw()).expect("raw instance serializes")
    }
}

/// On-disk instance schema. Coefficients are ascending-degree.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RawInstance {
    pub claims: Vec<f64>,
    pub agents: Vec<RawAgent>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RawAgent {
    pub name: String,
    pub pieces: Vec<RawPiece>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RawPiece {
    pub interval: [f64; 2],
    pub coeffs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    TooFewAgents {
        n: usize,
    },
    ClaimsCountMismatch {
        claims: usize,
        agents: usize,
    },
    ClaimNotPositive {
        agent: usize,
        value: f64,
    },
    ClaimsSumOff {
        sum: f64,
    },
    EmptyPieces {
        agent: usize,
    },
    BadPieceInterval {
        agent: usize,
        piece: usize,
        lo: f64,
        hi: f64,
    },
    CoverageStart {
        agent: usize,
        found: f64,
    },
    CoverageEnd {
        agent: usize,
        found: f64,
    },
    PieceGap {
        agent: usize,
        piece: usize,
        end: f64,
        next_start: f64,
    },
    PieceOverlap {
        agent: usize,
        piece: usize,
        end: f64,
        next_start: f64,
    },
    NegativeDensity {
        agent: usize,
        piece: usize,
        x: f64,
        value: f64,
    },
    NonpositiveMass {
        agent: usize,
        mass: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TooFewAgents { n } => {
                write!(f, "instance has {n} agents; at least 2 required")
            }
            Violation::ClaimsCountMismatch { claims, agents } => {
                write!(f, "{claims} claims for {agents} agents")
            }
            Violation::ClaimNotPositive { agent, value } => {
                write!(
                    f,
                    "claim for agent {agent} is {value}; claims must be strictly positive"
                )
            }
            Violation::ClaimsSumOff { sum } => write!(f, "claims sum to {sum}; expected 1"),
            Violation::EmptyPieces { agent } => write!(f, "agent {agent} has no density pieces"),
            Violation::BadPieceInterval {
                agent,
                piece,
                lo,
                hi,
            } => {
                write!(
                    f,
                    "agent {agent} piece {piece}: invalid interval [{lo}, {hi}]"
                )
            }
            Violation::CoverageStart { agent, found } => {
                write!(f, "agent {agent}: pieces start at {found}; expected 0")
            }
            Violation::CoverageEnd { agent, found } => {
                write!(f, "agent {agent}: pieces end at {found}; expected 1")
            }
            Violation::PieceGap {
                agent,
                piece,
                end,
                next_start,
            } => {
                write!(f, "agent {agent}: gap between piece {piece} ending {end} and next starting {next_start}")
            }
            Violation::PieceOverlap {
                agent,
                piece,
                end,
                next_start,
            } => {
                write!(
                    f,
                    "agent {agent}: piece {piece} ending {end} overlaps next starting {next_start}"
                )
            }
            Violation::NegativeDensity {
                agent,
                piece,
                x,
                value,
            } => {
                write!(
                    f,
                    "agent {agent} piece {piece}: density {value} < 0 at x = {x}"
                )
            }
            Violation::NonpositiveMass { agent, mass } => {
                write!(f, "agent {agent}: total mass {mass} is not positive")
            }
        }
    }
}

/// Structured list of everything wrong with a raw instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationReport {}

#[derive(Debug)]
pub enum InstanceLoadError {
    Parse(serde_json::Error),
    Invalid(ValidationReport),
}

impl fmt::Display for InstanceLoadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InstanceLoadError::Parse(e) => write!(f, "instance JSON parse error: {e}"),
            InstanceLoadError::Invalid(r) => write!(f, "invalid instance:\n{r}"),
        }
    }
}

impl std::error::Error for InstanceLoadError {}

#[derive(Debug, Clone, PartialEq)]
pub enum MeasureError {
    OutOfDomain(f64),
    BadInterval(f64, f64),
    Overlap((f64, f64), (f64, f64)),
}

impl fmt::Display for MeasureError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeasureError::OutOfDomain(x) => write!(f, "coordinate {x} outside [0, 1]"),
            MeasureError::BadInterval(a, b) => write!(f, "invalid interval [{a}, {b}]"),
            MeasureError::Overlap(p, q) => {
                write!(
                    f,
                    "intervals [{}, {}] and [{}, {}] overlap",
                    p.0, p.1, q.0, q.1
                )
            }
        }
    }
}

impl std::error::Error for MeasureError {}

fn validate_claims(claims: &[f64], n_agents: usize, out: &mut Vec<Violation>) {
    if claims.len() != n_agents {
        out.push(Violation::ClaimsCountMismatch {
            claims: claims.len(),
            agents: n_agents,
        });
        return;
    }
    for (i, &a) in claims.iter().enumerate() {
        // NaN must fail the positivity requirement too
        if a.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) || !a.is_finite() {
            out.push(Violation::ClaimNotPositive { agent: i, value: a });
        }
    }
    let sum: f64 = claims.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        out.push(Violation::ClaimsSumOff { sum });
    }
}

fn validate_pieces(agent: usize, _name: &str, pieces: &[PolyPiece]) -> Vec<Violation> {
    let mut out = Vec::new();
    if pieces.is_empty() {
        out.push(Violation::EmptyPieces { agent });
        return out;
    }
    for (pi, p) in pieces.iter().enumerate() {
        if !p.lo.is_finite()
            || !p.hi.is_finite()
            || p.hi <= p.lo
            || p.lo < -ENDPOINT_TOL
            || p.hi > 1.0 + ENDPOINT_TOL
        {
            out.push(Violation::BadPieceInterval {
                agent,
                piece: pi,
                lo: p.lo,
                hi: p.hi,
            });
        }
    }
    if !out.is_empty() {
        return out;
    }
    if pieces[0].lo.abs() > ENDPOINT_TOL {
        out.push(Violation::CoverageStart {
            agent,
            found: pieces[0].lo,
        });
    }
    if (pieces[pieces.len() - 1].hi - 1.0).abs() > ENDPOINT_TOL {
        out.push(Violation::CoverageEnd {
            agent,
            found: pieces[pieces.len() - 1].hi,
        });
    }
    for (pi, w) in pieces.windows(2).enumerate() {
        let d = w[1].lo - w[0].hi;
        if d > ENDPOINT_TOL {
            out.push(Violation::PieceGap {
                agent,
                piece: pi,
                end: w[0].hi,
                next_start: w[1].lo,
            });
        } else if d < -ENDPOINT_TOL {
            out.push(Violation::PieceOverlap {
                agent,
                piece: pi,
                end: w[0].hi,
                next_start: w[1].lo,
            });
        }
    }
    // nonnegativity on the sampling grid; a tiny negative tolerance absorbs
    // roundoff at polynomial roots
    for (pi, p) in pieces.iter().enumerate() {
        let scale: f64 = 1.0 + p.coeffs.iter().map(|c| c.abs()).sum::<f64>();
        let tol = -1e-12 * scale;
        for k in 0..NONNEG_GRID {
            let x = p.lo + (p.hi - p.lo) * (k as f64) / ((NONNEG_GRID - 1) as f64);
            let v = p.eval(x);
            if v < tol {
                out.push(Violation::NegativeDensity {
                    agent,
                    piece: pi,
                    x,
                    value: v,
                });
                break;
            }
        }
    }
    out
}

/// Snaps already-validated seams exactly: contiguous pieces share endpoints,
/// the first starts at 0 and the last ends at 1.
fn snap_pieces(pieces: &mut [PolyPiece]) {
    pieces[0].lo = 0.0;
    let last = pieces.len() - 1;
    pieces[last].hi = 1.0;
    for i in 1..pieces.len() {
        pieces[i].lo = pieces[i - 1].hi;
    }
}
