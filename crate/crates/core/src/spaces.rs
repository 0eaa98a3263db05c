//! Concrete Banach sequence spaces: finite `ℓᵖₙ` and infinite-dimensional `ℓ¹`.
//!
//! Primal vectors are finitely supported. Dual elements are a finite prefix
//! followed by a closed-form monotone tail, which keeps every supremum exact.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which space a computation lives in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceSpec {
    FiniteLp { p: f64, dim: usize },
    SequenceL1,
}

impl SpaceSpec {
    pub fn finite(p: f64, dim: usize) -> Result<Self> {
        let s = SpaceSpec::FiniteLp { p, dim };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SpaceSpec::FiniteLp { p, dim } => {
                if !(p.is_finite() && p >= 1.0) {
                    return Err(Error::InvalidSpace(format!("p must lie in [1, ∞), got {p}")));
                }
                if dim == 0 {
                    return Err(Error::InvalidSpace("dim must be positive".into()));
                }
                Ok(())
            }
            SpaceSpec::SequenceL1 => Ok(()),
        }
    }

    pub fn p(&self) -> f64 {
        match *self {
            SpaceSpec::FiniteLp { p, .. } => p,
            SpaceSpec::SequenceL1 => 1.0,
        }
    }

    pub fn dim(&self) -> Option<usize> {
        match *self {
            SpaceSpec::FiniteLp { dim, .. } => Some(dim),
            SpaceSpec::SequenceL1 => None,
        }
    }

    pub fn is_l1(&self) -> bool {
        self.p() == 1.0
    }

    /// Conjugate exponent `q` with `1/p + 1/q = 1`; infinite for `p = 1`.
    pub fn conjugate(&self) -> f64 {
        let p = self.p();
        if p == 1.0 {
            f64::INFINITY
        } else {
            p / (p - 1.0)
        }
    }

    /// Dual norm of `l` in this space's dual (`ℓ^q` or `ℓ∞`).
    pub fn dual_norm_of(&self, l: &DualFunctional) -> f64 {
        match *self {
            SpaceSpec::FiniteLp { p, dim } if p > 1.0 => lp_norm(&l.to_dense(dim), self.conjugate()),
            _ => dual_norm(l).value,
        }
    }

    pub(crate) fn check_vector(&self, f: &PrimalVector) -> Result<()> {
        if let Some(dim) = self.dim() {
            if let Some(&(i, _)) = f.entries.last() {
                if i > dim {
                    return Err(Error::IndexOutOfRange { index: i, dim });
                }
            }
        }
        Ok(())
    }

    pub(crate) fn check_functional(&self, l: &DualFunctional) -> Result<()> {
        if let Some(dim) = self.dim() {
            if l.prefix.len() != dim || l.tail != TailRule::Zero {
                return Err(Error::DimensionMismatch(format!(
                    "functional in a {dim}-dimensional space needs {dim} prefix values and a zero tail (got {} values)",
                    l.prefix.len()
                )));
            }
        }
        Ok(())
    }
}

/// `(Σ|xᵢ|ᵖ)^(1/p)`, scaled against overflow.
pub fn lp_norm(x: &[f64], p: f64) -> f64 {
    let m = x.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if m == 0.0 {
        return 0.0;
    }
    if p.is_infinite() {
        return m;
    }
    if p == 1.0 {
        return x.iter().map(|v| v.abs()).sum();
    }
    let s: f64 = x.iter().map(|v| (v.abs() / m).powf(p)).sum();
    m * s.powf(1.0 / p)
}

/// A finitely supported sequence, indices starting at 1.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "RawVector", into = "RawVector")]
pub struct PrimalVector {
    entries: Vec<(usize, f64)>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVector {
    entries: Vec<(usize, f64)>,
}

impl TryFrom<RawVector> for PrimalVector {
    type Error = Error;
    fn try_from(raw: RawVector) -> Result<Self> {
        PrimalVector::new(raw.entries)
    }
}

impl From<PrimalVector> for RawVector {
    fn from(v: PrimalVector) -> Self {
        RawVector { entries: v.entries }
    }
}

impl PrimalVector {
    /// Builds a vector from `(index, value)` pairs. Zeros are dropped; duplicate
    /// or zero indices are rejected.
    pub fn new(mut entries: Vec<(usize, f64)>) -> Result<Self> {
        entries.sort_by_key(|e| e.0);
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidVector(format!("duplicate index {}", w[0].0)));
            }
        }
        if entries.first().is_some_and(|e| e.0 == 0) {
            return Err(Error::InvalidVector("indices start at 1".into()));
        }
        if let Some(e) = entries.iter().find(|e| !e.1.is_finite()) {
            return Err(Error::InvalidVector(format!("non-finite value at index {}", e.0)));
        }
        entries.retain(|e| e.1 != 0.0);
        Ok(PrimalVector { entries })
    }

    pub fn zero() -> Self {
        PrimalVector::default()
    }

    /// `value · e_index`.
    pub fn unit(index: usize, value: f64) -> Self {
        assert!(index >= 1, "indices start at 1");
        if value == 0.0 {
            return Self::zero();
        }
        PrimalVector {
            entries: vec![(index, value)],
        }
    }

    /// Dense coordinates `x[0]` ↦ index 1.
    pub fn from_dense(x: &[f64]) -> Self {
        PrimalVector {
            entries: x
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, v)| (i + 1, *v))
                .collect(),
        }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, index: usize) -> f64 {
        self.entries
            .binary_search_by_key(&index, |e| e.0)
            .map(|k| self.entries[k].1)
            .unwrap_or(0.0)
    }

    /// Largest index in the support (0 for the zero vector).
    pub fn max_index(&self) -> usize {
        self.entries.last().map_or(0, |e| e.0)
    }

    pub fn to_dense(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for &(i, v) in &self.entries {
            if i <= n {
                out[i - 1] = v;
            }
        }
        out
    }

    pub fn scale(&self, a: f64) -> Self {
        if a == 0.0 {
            return Self::zero();
        }
        PrimalVector {
            entries: self.entries.iter().map(|&(i, v)| (i, a * v)).filter(|e| e.1 != 0.0).collect(),
        }
    }

    /// `self + a · other`.
    pub fn axpy(&self, a: f64, other: &PrimalVector) -> Self {
        let mut out = Vec::with_capacity(self.entries.len() + other.entries.len());
        let (mut i, mut j) = (0, 0);
        let (x, y) = (&self.entries, &other.entries);
        while i < x.len() || j < y.len() {
            let take_x = j >= y.len() || (i < x.len() && x[i].0 < y[j].0);
            let take_y = i >= x.len() || (j < y.len() && y[j].0 < x[i].0);
            let (idx, v) = if take_x {
                i += 1;
                (x[i - 1].0, x[i - 1].1)
            } else if take_y {
                j += 1;
                (y[j - 1].0, a * y[j - 1].1)
            } else {
                i += 1;
                j += 1;
                (x[i - 1].0, x[i - 1].1 + a * y[j - 1].1)
            };
            if v != 0.0 {
                out.push((idx, v));
            }
        }
        PrimalVector { entries: out }
    }

    pub fn add(&self, other: &PrimalVector) -> Self {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &PrimalVector) -> Self {
        self.axpy(-1.0, other)
    }
}

/// `‖f‖` in `space`.
pub fn norm(space: &SpaceSpec, f: &PrimalVector) -> Result<f64> {
    space.check_vector(f)?;
    let vals: Vec<f64> = f.entries.iter().map(|e| e.1).collect();
    Ok(lp_norm(&vals, space.p()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monotone {
    Increasing,
    Decreasing,
}

/// Closed-form values of a dual sequence beyond its prefix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTail", into = "RawTail")]
pub enum TailRule {
    Zero,
    Constant(f64),
    /// `Lₙ = (αn + β)/(γn + δ)` for `n ≥ start`, with a checked monotone direction.
    Rational {
        alpha: f64,
        beta: f64,
        gamma: f64,
        delta: f64,
        start: usize,
        monotone: Monotone,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawTail {
    Zero,
    Constant {
        value: f64,
    },
    Rational {
        alpha: f64,
        beta: f64,
        gamma: f64,
        delta: f64,
        start: usize,
        monotone: Monotone,
    },
}

impl TryFrom<RawTail> for TailRule {
    type Error = Error;
    fn try_from(raw: RawTail) -> Result<Self> {
        match raw {
            RawTail::Zero => Ok(TailRule::Zero),
            RawTail::Constant { value } => TailRule::constant(value),
            RawTail::Rational {
                alpha,
                beta,
                gamma,
                delta,
                start,
                monotone,
            } => TailRule::rational(alpha, beta, gamma, delta, start, monotone),
        }
    }
}

impl From<TailRule> for RawTail {
    fn from(t: TailRule) -> Self {
        match t {
            TailRule::Zero => RawTail::Zero,
            TailRule::Constant(value) => RawTail::Constant { value },
            TailRule::Rational {
                alpha,
                beta,
                gamma,
                delta,
                start,
                monotone,
            } => RawTail::Rational {
                alpha,
                beta,
                gamma,
                delta,
                start,
                monotone,
            },
        }
    }
}

impl TailRule {
    pub fn constant(value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::InvalidTailRule("constant must be finite".into()));
        }
        Ok(if value == 0.0 { TailRule::Zero } else { TailRule::Constant(value) })
    }

    /// Validates and builds a rational rule. The declared direction must match
    /// the sign of `αδ − βγ`, and the denominator may not vanish from `start` on.
    pub fn rational(
        alpha: f64,
        beta: f64,
        gamma: f64,
        delta: f64,
        start: usize,
        monotone: Monotone,
    ) -> Result<Self> {
        if ![alpha, beta, gamma, delta].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidTailRule("coefficients must be finite".into()));
        }
        if start == 0 {
            return Err(Error::InvalidTailRule("start index must be at least 1".into()));
        }
        if gamma == 0.0 {
            if delta == 0.0 {
                return Err(Error::InvalidTailRule("denominator is identically zero".into()));
            }
            if alpha != 0.0 {
                return Err(Error::InvalidTailRule(
                    "unbounded rule: γ = 0 requires α = 0".into(),
                ));
            }
        } else {
            let d0 = gamma * start as f64 + delta;
            if d0 == 0.0 || d0.signum() != gamma.signum() {
                return Err(Error::InvalidTailRule(format!(
                    "denominator γn+δ vanishes or changes sign for some n ≥ {start}"
                )));
            }
        }
        let det = alpha * delta - beta * gamma;
        let ok = match monotone {
            Monotone::Increasing => det >= 0.0,
            Monotone::Decreasing => det <= 0.0,
        };
        if !ok {
            return Err(Error::InvalidTailRule(format!(
                "declared {monotone:?} but αδ − βγ = {det}"
            )));
        }
        Ok(TailRule::Rational {
            alpha,
            beta,
            gamma,
            delta,
            start,
            monotone,
        })
    }

    /// Value at index `n`; only meaningful inside the tail region.
    pub fn value(&self, n: usize) -> f64 {
        match *self {
            TailRule::Zero => 0.0,
            TailRule::Constant(c) => c,
            TailRule::Rational {
                alpha,
                beta,
                gamma,
                delta,
                ..
            } => {
                let n = n as f64;
                (alpha * n + beta) / (gamma * n + delta)
            }
        }
    }

    pub fn limit(&self) -> f64 {
        match *self {
            TailRule::Zero => 0.0,
            TailRule::Constant(c) => c,
            TailRule::Rational {
                alpha,
                beta,
                gamma,
                delta,
                ..
            } => {
                if gamma == 0.0 {
                    beta / delta
                } else {
                    alpha / gamma
                }
            }
        }
    }

    /// `true` when every tail value equals the limit.
    pub fn is_constant(&self) -> bool {
        match *self {
            TailRule::Rational {
                alpha,
                beta,
                gamma,
                delta,
                ..
            } => alpha * delta - beta * gamma == 0.0,
            _ => true,
        }
    }

    /// Supremum of `|Lₙ|` for `n ≥ first` and the index attaining it, if any.
    pub fn sup_abs_from(&self, first: usize) -> (f64, Option<usize>) {
        let v0 = self.value(first).abs();
        if self.is_constant() {
            return (v0, Some(first));
        }
        let lim = self.limit().abs();
        // strictly monotone: later values lie strictly between v(first) and the limit
        if v0 >= lim {
            (v0, Some(first))
        } else {
            (lim, None)
        }
    }

    pub fn scale(&self, a: f64) -> TailRule {
        match *self {
            TailRule::Zero => TailRule::Zero,
            TailRule::Constant(c) => {
                if a * c == 0.0 {
                    TailRule::Zero
                } else {
                    TailRule::Constant(a * c)
                }
            }
            TailRule::Rational {
                alpha,
                beta,
                gamma,
                delta,
                start,
                monotone,
            } => {
                if a == 0.0 {
                    return TailRule::Zero;
                }
                let monotone = if a > 0.0 {
                    monotone
                } else {
                    match monotone {
                        Monotone::Increasing => Monotone::Decreasing,
                        Monotone::Decreasing => Monotone::Increasing,
                    }
                };
                TailRule::Rational {
                    alpha: a * alpha,
                    beta: a * beta,
                    gamma,
                    delta,
                    start,
                    monotone,
                }
            }
        }
    }
}

/// `(sup value, attained?, first attaining index)` of `|Lₙ|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualNorm {
    pub value: f64,
    pub attained: bool,
    pub witness: Option<usize>,
}

/// An element of `ℓ∞` (or of `ℓ^q_n` in finite dimensions): prefix values for
/// indices `1..=k`, then a tail rule for `n > k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFunctional", into = "RawFunctional")]
pub struct DualFunctional {
    prefix: Vec<f64>,
    tail: TailRule,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFunctional {
    prefix: Vec<f64>,
    #[serde(default = "zero_tail")]
    tail: TailRule,
}

fn zero_tail() -> TailRule {
    TailRule::Zero
}

impl TryFrom<RawFunctional> for DualFunctional {
    type Error = Error;
    fn try_from(raw: RawFunctional) -> Result<Self> {
        DualFunctional::new(raw.prefix, raw.tail)
    }
}

impl From<DualFunctional> for RawFunctional {
    fn from(l: DualFunctional) -> Self {
        RawFunctional {
            prefix: l.prefix,
            tail: l.tail,
        }
    }
}

impl DualFunctional {
    pub fn new(prefix: Vec<f64>, tail: TailRule) -> Result<Self> {
        if prefix.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidTailRule("prefix values must be finite".into()));
        }
        if let TailRule::Rational { start, .. } = tail {
            if start > prefix.len() + 1 {
                return Err(Error::InvalidTailRule(format!(
                    "rule starts at {start} but the prefix ends at {}",
                    prefix.len()
                )));
            }
        }
        Ok(DualFunctional { prefix, tail })
    }

    /// A finite-dimensional functional with a zero tail.
    pub fn finite(values: Vec<f64>) -> Self {
        DualFunctional::new(values, TailRule::Zero).expect("finite values")
    }

    /// Pure tail rule with an empty prefix.
    pub fn from_rule(tail: TailRule) -> Result<Self> {
        DualFunctional::new(Vec::new(), tail)
    }

    pub fn prefix(&self) -> &[f64] {
        &self.prefix
    }

    pub fn tail(&self) -> &TailRule {
        &self.tail
    }

    /// First index governed by the tail rule.
    pub fn tail_start(&self) -> usize {
        self.prefix.len() + 1
    }

    /// `Lₙ`, `n ≥ 1`.
    pub fn value(&self, n: usize) -> f64 {
        debug_assert!(n >= 1);
        if n <= self.prefix.len() {
            self.prefix[n - 1]
        } else {
            self.tail.value(n)
        }
    }

    pub fn to_dense(&self, n: usize) -> Vec<f64> {
        (1..=n).map(|i| self.value(i)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.tail == TailRule::Zero && self.prefix.iter().all(|v| *v == 0.0)
    }

    pub fn scale(&self, a: f64) -> Self {
        DualFunctional {
            prefix: self.prefix.iter().map(|v| a * v).collect(),
            tail: self.tail.scale(a),
        }
    }

    /// Exact `Σ cᵢ Lᵢ` as a single functional, when the tails combine into one
    /// monotone rule (constants plus rational rules sharing a denominator).
    pub fn linear_combination(coeffs: &[f64], fs: &[&DualFunctional]) -> Option<DualFunctional> {
        assert_eq!(coeffs.len(), fs.len());
        let k = fs.iter().map(|f| f.prefix.len()).max().unwrap_or(0);
        let prefix: Vec<f64> = (1..=k)
            .map(|n| coeffs.iter().zip(fs).map(|(c, f)| c * f.value(n)).sum())
            .collect();
        let mut constant = 0.0;
        let mut rational: Option<(f64, f64, f64, f64)> = None;
        for (&c, f) in coeffs.iter().zip(fs) {
            if c == 0.0 {
                continue;
            }
            match f.tail {
                TailRule::Zero => {}
                TailRule::Constant(v) => constant += c * v,
                TailRule::Rational {
                    alpha,
                    beta,
                    gamma,
                    delta,
                    ..
                } => {
                    if gamma == 0.0 {
                        constant += c * beta / delta;
                        continue;
                    }
                    match rational {
                        None => rational = Some((c * alpha, c * beta, gamma, delta)),
                        Some((a, b, g, d)) => {
                            if g == gamma && d == delta {
                                rational = Some((a + c * alpha, b + c * beta, g, d));
                            } else {
                                return None;
                            }
                        }
                    }
                }
            }
        }
        let tail = match rational {
            None => TailRule::constant(constant).ok()?,
            Some((a, b, g, d)) => {
                let alpha = a + constant * g;
                let beta = b + constant * d;
                let det = alpha * d - beta * g;
                let monotone = if det >= 0.0 { Monotone::Increasing } else { Monotone::Decreasing };
                TailRule::rational(alpha, beta, g, d, k + 1, monotone).ok()?
            }
        };
        DualFunctional::new(prefix, tail).ok()
    }
}

/// Sup norm `sup |Lₙ|` with attainment information, using the tail's monotone limit.
pub fn dual_norm(l: &DualFunctional) -> DualNorm {
    let (mut best, mut at) = (0.0_f64, None);
    for (i, v) in l.prefix.iter().enumerate() {
        if at.is_none() || v.abs() > best {
            best = v.abs();
            at = Some(i + 1);
        }
    }
    let (tsup, tat) = l.tail.sup_abs_from(l.tail_start());
    if at.is_none() || tsup > best {
        best = tsup;
        at = tat;
    }
    DualNorm {
        value: best,
        attained: at.is_some(),
        witness: at,
    }
}

/// `L(f)` as an exact finite sum over the support of `f`, in index order.
pub fn pair(l: &DualFunctional, f: &PrimalVector) -> f64 {
    let mut s = 0.0;
    for &(i, v) in &f.entries {
        s += l.value(i) * v;
    }
    s
}

/// Finite description of the (possibly set-valued) duality image `J(f)`.
///
/// Members are exactly the functionals that equal `fixed` on the listed
/// coordinates and are bounded by `box_bound` in absolute value everywhere else.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualitySetDescriptor {
    pub radius: f64,
    pub fixed: Vec<(usize, f64)>,
    pub box_bound: f64,
    pub smooth_point: Option<DualFunctional>,
    /// Ambient dimension, `None` for sequence spaces.
    pub dim: Option<usize>,
}

impl DualitySetDescriptor {
    pub fn is_singleton(&self) -> bool {
        self.smooth_point.is_some()
    }

    /// `J(0) = {0}`.
    pub fn of_zero(space: &SpaceSpec) -> Self {
        let dim = space.dim();
        DualitySetDescriptor {
            radius: 0.0,
            fixed: Vec::new(),
            box_bound: 0.0,
            smooth_point: Some(match dim {
                Some(d) => DualFunctional::finite(vec![0.0; d]),
                None => DualFunctional::from_rule(TailRule::Zero).expect("zero"),
            }),
            dim,
        }
    }

    pub fn scale(&self, a: f64) -> Self {
        assert!(a > 0.0);
        DualitySetDescriptor {
            radius: a * self.radius,
            fixed: self.fixed.iter().map(|&(i, v)| (i, a * v)).collect(),
            box_bound: a * self.box_bound,
            smooth_point: self.smooth_point.as_ref().map(|l| l.scale(a)),
            dim: self.dim,
        }
    }

    /// Draws a random member (finite-dimensional descriptors only; sequence
    /// descriptors get a random prefix covering the fixed indices and a
    /// constant tail inside the box).
    pub fn sample_member<R: Rng>(&self, rng: &mut R) -> DualFunctional {
        let len = self
            .dim
            .unwrap_or_else(|| self.fixed.last().map_or(0, |e| e.0) + rng.gen_range(0..4));
        let mut prefix: Vec<f64> = (0..len)
            .map(|_| rng.gen_range(-1.0..=1.0) * self.box_bound)
            .collect();
        for &(i, v) in &self.fixed {
            prefix[i - 1] = v;
        }
        let tail = if self.dim.is_some() || self.box_bound == 0.0 {
            TailRule::Zero
        } else {
            TailRule::constant(rng.gen_range(-1.0..=1.0) * self.box_bound).expect("finite")
        };
        DualFunctional::new(prefix, tail).expect("valid member")
    }

    /// The member closest to `target` coordinate-wise: fixed coordinates as
    /// required, every other coordinate `target` clamped into the box.
    pub fn clamp_member(&self, target: &DualFunctional) -> DualFunctional {
        let b = self.box_bound;
        let clamp = |v: f64| v.clamp(-b, b);
        match self.dim {
            Some(d) => {
                let mut vals: Vec<f64> = (1..=d).map(|n| clamp(target.value(n))).collect();
                for &(i, v) in &self.fixed {
                    vals[i - 1] = v;
                }
                DualFunctional::finite(vals)
            }
            None => {
                let last_fixed = self.fixed.last().map_or(0, |e| e.0);
                let len0 = target.prefix.len().max(last_fixed);
                let (cut, tail) = clamp_tail(&target.tail, len0 + 1, b);
                let mut prefix: Vec<f64> = (1..cut).map(|n| clamp(target.value(n))).collect();
                for &(i, v) in &self.fixed {
                    prefix[i - 1] = v;
                }
                DualFunctional::new(prefix, tail).expect("clamped member")
            }
        }
    }
}

/// Longest prefix we are willing to materialize for a clamped tail.
const MAX_CLAMP_PREFIX: usize = 1 << 20;

#[derive(Clone, Copy, PartialEq, Eq)]
enum BoxStatus {
    Below,
    Inside,
    Above,
}

fn box_status(v: f64, b: f64) -> BoxStatus {
    if v > b {
        BoxStatus::Above
    } else if v < -b {
        BoxStatus::Below
    } else {
        BoxStatus::Inside
    }
}

/// Splits the clamp of a monotone tail (from index `from`) into an explicit
/// part `from..cut` and a representable tail from `cut` on. Along a monotone
/// sequence the box status changes at most twice, so the eventual status holds
/// from a single index onward; it is found by doubling plus bisection.
fn clamp_tail(tail: &TailRule, from: usize, b: f64) -> (usize, TailRule) {
    let lim = tail.limit();
    let eventual = if tail.is_constant() {
        box_status(tail.value(from), b)
    } else {
        match box_status(lim, b) {
            BoxStatus::Inside if lim.abs() == b => {
                let moving_out = matches!(
                    (lim > 0.0, tail),
                    (true, TailRule::Rational { monotone: Monotone::Decreasing, .. })
                        | (false, TailRule::Rational { monotone: Monotone::Increasing, .. })
                );
                if !moving_out {
                    BoxStatus::Inside
                } else if lim > 0.0 {
                    BoxStatus::Above
                } else {
                    BoxStatus::Below
                }
            }
            s => s,
        }
    };
    let settled = |n: usize| box_status(tail.value(n), b) == eventual;
    let cut = if settled(from) {
        from
    } else {
        let (mut lo, mut hi) = (from, from + 1);
        while !settled(hi) && hi - from < MAX_CLAMP_PREFIX {
            lo = hi;
            hi = from + 2 * (hi - from);
        }
        if !settled(hi) {
            // give up on the exact clamp; any constant inside the box is still a member
            return (from, TailRule::constant(lim.clamp(-b, b)).expect("finite"));
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if settled(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };
    let rest = match eventual {
        BoxStatus::Above => TailRule::constant(b).expect("finite"),
        BoxStatus::Below => TailRule::constant(-b).expect("finite"),
        BoxStatus::Inside => match *tail {
            TailRule::Rational {
                alpha,
                beta,
                gamma,
                delta,
                monotone,
                ..
            } => TailRule::Rational {
                alpha,
                beta,
                gamma,
                delta,
                start: cut,
                monotone,
            },
            ref t => t.clone(),
        },
    };
    (cut, rest)
}

/// Exact description of `J(f)`.
pub fn duality_map(space: &SpaceSpec, f: &PrimalVector) -> Result<DualitySetDescriptor> {
    space.check_vector(f)?;
    if f.is_zero() {
        return Err(Error::ZeroVector);
    }
    let r = norm(space, f)?;
    let p = space.p();
    let dim = space.dim();
    if p == 1.0 {
        let fixed: Vec<(usize, f64)> = f.entries.iter().map(|&(i, v)| (i, r * v.signum())).collect();
        let smooth_point = match dim {
            Some(d) if fixed.len() == d => {
                Some(DualFunctional::finite(fixed.iter().map(|e| e.1).collect()))
            }
            _ => None,
        };
        return Ok(DualitySetDescriptor {
            radius: r,
            fixed,
            box_bound: r,
            smooth_point,
            dim,
        });
    }
    let d = dim.expect("p > 1 only in finite dimensions");
    let vals: Vec<f64> = f
        .to_dense(d)
        .iter()
        .map(|&v| {
            if v == 0.0 {
                0.0
            } else {
                r * v.signum() * (v.abs() / r).powf(p - 1.0)
            }
        })
        .collect();
    Ok(DualitySetDescriptor {
        radius: r,
        fixed: vals.iter().enumerate().map(|(i, &v)| (i + 1, v)).collect(),
        box_bound: 0.0,
        smooth_point: Some(DualFunctional::finite(vals)),
        dim,
    })
}

/// Membership test for `J(f)` within `tol`.
pub fn in_duality_set(desc: &DualitySetDescriptor, l: &DualFunctional, tol: f64) -> bool {
    if let Some(d) = desc.dim {
        if l.prefix.len() != d || l.tail != TailRule::Zero {
            return false;
        }
    }
    for &(i, v) in &desc.fixed {
        if (l.value(i) - v).abs() > tol {
            return false;
        }
    }
    match desc.dim {
        Some(d) => {
            let mut fixed_iter = desc.fixed.iter().peekable();
            for n in 1..=d {
                if fixed_iter.peek().is_some_and(|e| e.0 == n) {
                    fixed_iter.next();
                    continue;
                }
                if l.value(n).abs() > desc.box_bound + tol {
                    return false;
                }
            }
            true
        }
        // fixed coordinates already match values of magnitude ≤ radius, so
        // including them in the supremum cannot cause a false rejection
        None => dual_norm(l).value <= desc.box_bound + tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ratio_rule() -> DualFunctional {
        DualFunctional::from_rule(TailRule::rational(1.0, 0.0, 1.0, 1.0, 1, Monotone::Increasing).unwrap())
            .unwrap()
    }

    fn harmonic() -> DualFunctional {
        DualFunctional::from_rule(TailRule::rational(0.0, 1.0, 1.0, 0.0, 1, Monotone::Decreasing).unwrap())
            .unwrap()
    }

    #[test]
    fn norms() {
        let l1 = SpaceSpec::finite(1.0, 3).unwrap();
        assert_eq!(norm(&l1, &PrimalVector::from_dense(&[1.0, -2.0, 0.0])).unwrap(), 3.0);
        let l2 = SpaceSpec::finite(2.0, 2).unwrap();
        assert_eq!(norm(&l2, &PrimalVector::from_dense(&[3.0, 4.0])).unwrap(), 5.0);
        let l4 = SpaceSpec::finite(4.0, 2).unwrap();
        let v = norm(&l4, &PrimalVector::from_dense(&[1.0, 1.0])).unwrap();
        assert!((v - 2f64.powf(0.25)).abs() < 1e-15);
        assert_eq!(
            norm(&l2, &PrimalVector::unit(3, 1.0)),
            Err(Error::IndexOutOfRange { index: 3, dim: 2 })
        );
    }

    #[test]
    fn dual_norm_examples() {
        let d = dual_norm(&ratio_rule());
        assert_eq!((d.value, d.attained, d.witness), (1.0, false, None));
        let d = dual_norm(&harmonic());
        assert_eq!((d.value, d.attained, d.witness), (1.0, true, Some(1)));
        let d = dual_norm(&DualFunctional::finite(vec![0.3, 0.9]));
        assert_eq!((d.value, d.attained, d.witness), (0.9, true, Some(2)));
    }

    #[test]
    fn pair_examples() {
        assert!((pair(&harmonic(), &PrimalVector::unit(3, 2.0)) - 2.0 / 3.0).abs() < 1e-16);
        let l = DualFunctional::finite(vec![1.0, 2.0, 3.0]);
        assert_eq!(pair(&l, &PrimalVector::from_dense(&[0.0, 0.0, 2.0])), 6.0);
        assert_eq!(pair(&ratio_rule(), &PrimalVector::unit(1, 2.0)), 1.0);
    }

    #[test]
    fn duality_map_examples() {
        let l2 = SpaceSpec::finite(2.0, 2).unwrap();
        let d = duality_map(&l2, &PrimalVector::from_dense(&[3.0, 4.0])).unwrap();
        assert_eq!(d.smooth_point.as_ref().unwrap().prefix(), &[3.0, 4.0]);
        assert!(in_duality_set(&d, &DualFunctional::finite(vec![3.0, 4.0]), 1e-12));
        assert!(!in_duality_set(&d, &DualFunctional::finite(vec![4.0, 3.0]), 1e-12));

        let l4 = SpaceSpec::finite(4.0, 2).unwrap();
        let f = PrimalVector::from_dense(&[1.0, 1.0]);
        let d = duality_map(&l4, &f).unwrap();
        let j = d.smooth_point.clone().unwrap();
        for v in j.prefix() {
            assert!((v - 0.5f64.sqrt()).abs() < 1e-15);
        }
        assert!((pair(&j, &f) - 2f64.sqrt()).abs() < 1e-15);
        assert!((l4.dual_norm_of(&j) - 2f64.powf(0.25)).abs() < 1e-15);

        let l1 = SpaceSpec::finite(1.0, 5).unwrap();
        let f = PrimalVector::new(vec![(1, 1.0), (5, -2.0)]).unwrap();
        let d = duality_map(&l1, &f).unwrap();
        assert_eq!(d.radius, 3.0);
        assert_eq!(d.fixed, vec![(1, 3.0), (5, -3.0)]);
        assert_eq!(d.box_bound, 3.0);
        assert!(in_duality_set(&d, &DualFunctional::finite(vec![3.0, 0.0, 0.0, 0.0, -3.0]), 1e-12));
        assert!(!in_duality_set(&d, &DualFunctional::finite(vec![3.0, 4.0, 0.0, 0.0, -3.0]), 1e-12));
        assert_eq!(duality_map(&l1, &PrimalVector::zero()), Err(Error::ZeroVector));
    }

    #[test]
    fn tail_rule_validation() {
        assert!(TailRule::rational(1.0, 0.0, 1.0, 1.0, 1, Monotone::Decreasing).is_err());
        assert!(TailRule::rational(1.0, 0.0, 0.0, 1.0, 1, Monotone::Increasing).is_err());
        // pole at n = 3
        assert!(TailRule::rational(0.0, 1.0, 1.0, -3.0, 1, Monotone::Decreasing).is_err());
        assert!(TailRule::rational(0.0, 1.0, 1.0, -3.0, 4, Monotone::Decreasing).is_ok());
        assert!(DualFunctional::new(vec![], TailRule::rational(0.0, 1.0, 1.0, -3.0, 4, Monotone::Decreasing).unwrap()).is_err());
        let json = r#"{"prefix":[],"tail":{"kind":"rational","alpha":1,"beta":0,"gamma":1,"delta":1,"start":1,"monotone":"decreasing"}}"#;
        assert!(serde_json::from_str::<DualFunctional>(json).is_err());
    }

    #[test]
    fn clamp_member_crossing_tail() {
        // 2·n/(n+1) clamped to 1.5 crosses at n = 4 (2·3/4 = 1.5 stays inside)
        let target = ratio_rule().scale(2.0);
        let desc = DualitySetDescriptor {
            radius: 1.5,
            fixed: vec![(1, 1.5)],
            box_bound: 1.5,
            smooth_point: None,
            dim: None,
        };
        let w = desc.clamp_member(&target);
        assert_eq!(w.value(1), 1.5);
        assert_eq!(w.value(2), 2.0 * 2.0 / 3.0);
        assert_eq!(w.value(3), 1.5);
        assert_eq!(w.value(100), 1.5);
        assert!(in_duality_set(&desc, &w, 1e-12));
    }

    #[test]
    fn combination_of_shared_denominators() {
        let a = ratio_rule();
        let b = DualFunctional::new(vec![5.0], TailRule::rational(0.0, 1.0, 1.0, 1.0, 1, Monotone::Decreasing).unwrap()).unwrap();
        let c = DualFunctional::linear_combination(&[2.0, -1.0], &[&a, &b]).unwrap();
        for n in 1..50 {
            let want = 2.0 * a.value(n) - b.value(n);
            assert!((c.value(n) - want).abs() < 1e-14, "n = {n}");
        }
        let h = harmonic();
        assert!(DualFunctional::linear_combination(&[1.0, 1.0], &[&a, &h]).is_none());
    }
}
