//! Regularizers: the norm, radial profiles `h(‖f‖)`, custom coordinate
//! expressions, and the optional radial mollifier.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Expr, Var};
use crate::spaces::{norm, PrimalVector, SpaceSpec};

/// Piecewise-linear profile on `[0, ∞)`. Repeated radii encode jumps; the
/// profile is right-continuous there and constant beyond the last point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct PiecewiseTable {
    points: Vec<[f64; 2]>,
}

impl TryFrom<Vec<[f64; 2]>> for PiecewiseTable {
    type Error = Error;
    fn try_from(points: Vec<[f64; 2]>) -> Result<Self> {
        PiecewiseTable::new(points)
    }
}

impl From<PiecewiseTable> for Vec<[f64; 2]> {
    fn from(t: PiecewiseTable) -> Self {
        t.points
    }
}

impl PiecewiseTable {
    pub fn new(points: Vec<[f64; 2]>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidRegularizer("empty table".into()));
        }
        if points.iter().any(|p| !p[0].is_finite() || !p[1].is_finite() || p[0] < 0.0) {
            return Err(Error::InvalidRegularizer("table radii must be finite and ≥ 0".into()));
        }
        for w in points.windows(2) {
            if w[1][0] < w[0][0] {
                return Err(Error::InvalidRegularizer("table radii must be nondecreasing".into()));
            }
        }
        for w in points.windows(3) {
            if w[0][0] == w[2][0] {
                return Err(Error::InvalidRegularizer("at most two values per radius".into()));
            }
        }
        Ok(PiecewiseTable { points })
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    /// Index of the segment whose left end governs `r` (last point with radius ≤ r).
    fn segment(&self, r: f64) -> Option<usize> {
        let k = self.points.partition_point(|p| p[0] <= r);
        k.checked_sub(1)
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self.segment(r) {
            None => self.points[0][1],
            Some(i) if i + 1 == self.points.len() => self.points[i][1],
            Some(i) => {
                let [r0, v0] = self.points[i];
                let [r1, v1] = self.points[i + 1];
                v0 + (v1 - v0) * (r - r0) / (r1 - r0)
            }
        }
    }

    /// Right derivative.
    pub fn slope(&self, r: f64) -> f64 {
        match self.segment(r) {
            Some(i) if i + 1 < self.points.len() => {
                let [r0, v0] = self.points[i];
                let [r1, v1] = self.points[i + 1];
                (v1 - v0) / (r1 - r0)
            }
            _ => 0.0,
        }
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.points.iter().map(|p| p[0]).collect();
        b.dedup();
        b
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.points.windows(2).all(|w| w[1][1] >= w[0][1])
    }
}

/// A radial profile `h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    Expr(Expr),
    Table(PiecewiseTable),
}

impl Profile {
    pub fn expr(src: &str) -> Result<Self> {
        let e = Expr::parse(src)?;
        if e.variables().iter().any(|v| matches!(v, Var::Coord(_))) {
            return Err(Error::InvalidRegularizer(
                "radial profiles may only use `r` (or `norm`)".into(),
            ));
        }
        Ok(Profile::Expr(e))
    }

    pub fn table(points: Vec<[f64; 2]>) -> Result<Self> {
        Ok(Profile::Table(PiecewiseTable::new(points)?))
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Profile::Expr(e) => e.eval_radius(r),
            Profile::Table(t) => t.eval(r),
        }
    }

    /// Radii where the profile may fail to be smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Profile::Expr(_) => Vec::new(),
            Profile::Table(t) => t.breakpoints(),
        }
    }
}

/// Radial mollifier density on `[-1, 0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Density {
    /// Masses of equal-width bins partitioning `[-1, 0]`, left to right.
    Bins(Vec<f64>),
    /// Unit point mass at `t`.
    Atom(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mollifier {
    pub density: Density,
    /// Quadrature nodes per smooth sub-interval.
    #[serde(default = "default_points")]
    pub points: usize,
}

fn default_points() -> usize {
    64
}

impl Mollifier {
    pub fn uniform(points: usize) -> Self {
        Mollifier {
            density: Density::Bins(vec![1.0]),
            points,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.density {
            Density::Bins(w) => {
                if w.is_empty() || w.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(Error::InvalidRegularizer("mollifier weights must be nonnegative".into()));
                }
                let s: f64 = w.iter().sum();
                if (s - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidRegularizer(format!("mollifier weights sum to {s}, not 1")));
                }
            }
            Density::Atom(t) => {
                if !(-1.0..=0.0).contains(t) {
                    return Err(Error::InvalidRegularizer("atom must lie in [-1, 0]".into()));
                }
            }
        }
        if self.points < 2 {
            return Err(Error::InvalidRegularizer("need at least 2 quadrature points".into()));
        }
        Ok(())
    }

    /// `∫ ρ(t) g(t) dt`, splitting at the density bins and at the extra
    /// `cuts` (kinks of `g`). Each piece uses composite Simpson, which is
    /// exact for the piecewise-linear integrands produced by tables.
    pub fn integrate(&self, g: &dyn Fn(f64) -> f64, cuts: &[f64]) -> f64 {
        match &self.density {
            Density::Atom(t) => g(*t),
            Density::Bins(w) => {
                let k = w.len();
                let mut total = 0.0;
                for (j, &mass) in w.iter().enumerate() {
                    if mass == 0.0 {
                        continue;
                    }
                    let a = -1.0 + j as f64 / k as f64;
                    let b = -1.0 + (j + 1) as f64 / k as f64;
                    let mut nodes = vec![a];
                    nodes.extend(cuts.iter().copied().filter(|c| *c > a && *c < b));
                    nodes.push(b);
                    nodes.sort_by(f64::total_cmp);
                    let density = mass * k as f64;
                    for seg in nodes.windows(2) {
                        total += density * simpson(g, seg[0], seg[1], self.points);
                    }
                }
                total
            }
        }
    }
}

/// Composite Simpson on `[a, b]` with `n` intervals (rounded up to even),
/// sampling just inside the end points so one-sided limits are used.
fn simpson(g: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let eps = (b - a) * 1e-12;
    let at = |i: usize| {
        let t = if i == 0 {
            a + eps
        } else if i == n {
            b - eps
        } else {
            a + i as f64 * h
        };
        g(t)
    };
    let mut s = at(0) + at(n);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * at(i);
    }
    s * h / 3.0
}

#[derive(Debug, Clone, PartialEq)]
pub enum RegularizerKind {
    Norm,
    RadialMonotone(Profile),
    RadialGeneral(Profile),
    Custom(Expr),
}

/// A regularizer `Ω`, optionally mollified in the radial direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRegularizer", into = "RawRegularizer")]
pub struct RegularizerSpec {
    pub kind: RegularizerKind,
    pub mollifier: Option<Mollifier>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRegularizer {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    h: Option<Profile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    expr: Option<Expr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mollifier: Option<Mollifier>,
}

impl TryFrom<RawRegularizer> for RegularizerSpec {
    type Error = Error;
    fn try_from(raw: RawRegularizer) -> Result<Self> {
        let need_h = |h: Option<Profile>| {
            h.ok_or_else(|| Error::InvalidRegularizer(format!("`{}` needs a profile `h`", raw.kind)))
        };
        let kind = match raw.kind.as_str() {
            "norm" => RegularizerKind::Norm,
            "radial_monotone" => RegularizerKind::RadialMonotone(need_h(raw.h)?),
            "radial_general" => RegularizerKind::RadialGeneral(need_h(raw.h)?),
            "custom" => RegularizerKind::Custom(
                raw.expr
                    .ok_or_else(|| Error::InvalidRegularizer("`custom` needs `expr`".into()))?,
            ),
            other => return Err(Error::InvalidRegularizer(format!("unknown regularizer kind `{other}`"))),
        };
        RegularizerSpec::new(kind, raw.mollifier)
    }
}

impl From<RegularizerSpec> for RawRegularizer {
    fn from(s: RegularizerSpec) -> Self {
        let (kind, h, expr) = match s.kind {
            RegularizerKind::Norm => ("norm", None, None),
            RegularizerKind::RadialMonotone(h) => ("radial_monotone", Some(h), None),
            RegularizerKind::RadialGeneral(h) => ("radial_general", Some(h), None),
            RegularizerKind::Custom(e) => ("custom", None, Some(e)),
        };
        RawRegularizer {
            kind: kind.to_string(),
            h,
            expr,
            mollifier: s.mollifier,
        }
    }
}

impl RegularizerSpec {
    pub fn new(kind: RegularizerKind, mollifier: Option<Mollifier>) -> Result<Self> {
        match &kind {
            RegularizerKind::RadialMonotone(h) | RegularizerKind::RadialGeneral(h) => {
                if let Profile::Expr(e) = h {
                    if e.variables().iter().any(|v| matches!(v, Var::Coord(_))) {
                        return Err(Error::InvalidRegularizer(
                            "radial profiles may only use `r` (or `norm`)".into(),
                        ));
                    }
                }
                if matches!(kind, RegularizerKind::RadialMonotone(_)) && !profile_nondecreasing(h) {
                    return Err(Error::InvalidRegularizer(
                        "profile declared monotone but decreases".into(),
                    ));
                }
            }
            RegularizerKind::Custom(e) => {
                if e.variables().contains(&Var::Radius) {
                    return Err(Error::InvalidRegularizer(
                        "custom expressions use `norm`, not `r`".into(),
                    ));
                }
            }
            RegularizerKind::Norm => {}
        }
        if let Some(m) = &mollifier {
            m.validate()?;
        }
        Ok(RegularizerSpec { kind, mollifier })
    }

    pub fn norm() -> Self {
        RegularizerSpec {
            kind: RegularizerKind::Norm,
            mollifier: None,
        }
    }

    pub fn radial(h: Profile) -> Result<Self> {
        let kind = if profile_nondecreasing(&h) {
            RegularizerKind::RadialMonotone(h)
        } else {
            RegularizerKind::RadialGeneral(h)
        };
        RegularizerSpec::new(kind, None)
    }

    pub fn custom(src: &str) -> Result<Self> {
        RegularizerSpec::new(RegularizerKind::Custom(Expr::parse(src)?), None)
    }

    pub fn with_mollifier(&self, m: Mollifier) -> Result<Self> {
        RegularizerSpec::new(self.kind.clone(), Some(m))
    }

    pub fn without_mollifier(&self) -> Self {
        RegularizerSpec {
            kind: self.kind.clone(),
            mollifier: None,
        }
    }

    pub fn is_radial(&self) -> bool {
        !matches!(self.kind, RegularizerKind::Custom(_))
    }

    /// Value of the unmollified profile at radius `r` (radial kinds only).
    pub fn base_radial(&self, r: f64) -> Option<f64> {
        match &self.kind {
            RegularizerKind::Norm => Some(r),
            RegularizerKind::RadialMonotone(h) | RegularizerKind::RadialGeneral(h) => Some(h.eval(r)),
            RegularizerKind::Custom(_) => None,
        }
    }

    /// Effective radial profile including mollification (radial kinds only).
    pub fn radial_value(&self, r: f64) -> Option<f64> {
        match &self.mollifier {
            None => self.base_radial(r),
            Some(m) => {
                self.base_radial(0.0)?;
                let cuts: Vec<f64> = self.profile_breakpoints().iter().map(|b| r - b).collect();
                Some(m.integrate(&|t| self.base_radial(r - t).expect("radial"), &cuts))
            }
        }
    }

    fn profile_breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            RegularizerKind::RadialMonotone(h) | RegularizerKind::RadialGeneral(h) => h.breakpoints(),
            _ => Vec::new(),
        }
    }

    /// `Ω(f)` without the mollifier.
    pub fn eval_base(&self, space: &SpaceSpec, f: &PrimalVector) -> f64 {
        let r = norm(space, f).unwrap_or(f64::NAN);
        match &self.kind {
            RegularizerKind::Custom(e) => e.eval(&|v| match v {
                Var::Coord(i) => f.get(i),
                Var::Norm | Var::Radius => r,
            }),
            _ => self.base_radial(r).expect("radial"),
        }
    }

    /// `Ω(f)`, mollified when configured.
    pub fn eval(&self, space: &SpaceSpec, f: &PrimalVector) -> f64 {
        match &self.mollifier {
            None => self.eval_base(space, f),
            Some(_) => mollify_radial(self, space, f),
        }
    }

    /// Like [`eval`](Self::eval) but rejects non-finite values.
    pub fn try_eval(&self, space: &SpaceSpec, f: &PrimalVector) -> Result<f64> {
        let v = self.eval(space, f);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::InvalidRegularizer(format!("Ω is not finite at {:?}", f.entries())))
        }
    }
}

fn profile_nondecreasing(h: &Profile) -> bool {
    match h {
        Profile::Table(t) => t.is_nondecreasing(),
        Profile::Expr(e) => {
            let mut prev = e.eval_radius(0.0);
            (1..=4000).all(|k| {
                let r = 100.0 * k as f64 / 4000.0;
                let v = e.eval_radius(r);
                let ok = v >= prev - 1e-12 * prev.abs().max(1.0);
                prev = v;
                ok
            })
        }
    }
}

/// `Ω̃(f) = ∫₋₁⁰ ρ(t) Ω((‖f‖ − t) f/‖f‖) dt`, using the configured mollifier
/// (uniform with 64 points when none is set). At `f = 0` the direction `e₁`
/// is used.
pub fn mollify_radial(spec: &RegularizerSpec, space: &SpaceSpec, f: &PrimalVector) -> f64 {
    let m = spec.mollifier.clone().unwrap_or_else(|| Mollifier::uniform(64));
    let r = norm(space, f).unwrap_or(0.0);
    if spec.is_radial() {
        let cuts: Vec<f64> = spec.profile_breakpoints().iter().map(|b| r - b).collect();
        return m.integrate(&|t| spec.base_radial(r - t).expect("radial"), &cuts);
    }
    let dir = if r == 0.0 { PrimalVector::unit(1, 1.0) } else { f.scale(1.0 / r) };
    m.integrate(&|t| spec.eval_base(space, &dir.scale(r - t)), &[])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_jumps_are_right_continuous() {
        let t = PiecewiseTable::new(vec![[0.0, 0.0], [1.0, 1.0], [1.0, 3.0], [2.0, 4.0]]).unwrap();
        assert_eq!(t.eval(0.5), 0.5);
        assert_eq!(t.eval(1.0), 3.0);
        assert!((t.eval(0.999_999) - 0.999_999).abs() < 1e-12);
        assert_eq!(t.eval(1.5), 3.5);
        assert_eq!(t.eval(7.0), 4.0);
        assert_eq!(t.slope(1.5), 1.0);
        assert!(PiecewiseTable::new(vec![[1.0, 0.0], [0.5, 1.0]]).is_err());
        assert!(PiecewiseTable::new(vec![[1.0, 0.0], [1.0, 1.0], [1.0, 2.0]]).is_err());
    }

    #[test]
    fn serde_shapes() {
        let s: RegularizerSpec =
            serde_json::from_str(r#"{"kind":"radial_monotone","h":{"table":[[0,0],[1,1]]}}"#).unwrap();
        assert!(matches!(s.kind, RegularizerKind::RadialMonotone(_)));
        let s: RegularizerSpec = serde_json::from_str(r#"{"kind":"custom","expr":"x1 + norm"}"#).unwrap();
        let back: RegularizerSpec = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(s, back);
        assert!(serde_json::from_str::<RegularizerSpec>(r#"{"kind":"radial_monotone","h":{"expr":"(r-1)^2"}}"#).is_err());
        assert!(serde_json::from_str::<RegularizerSpec>(r#"{"kind":"norm","bogus":1}"#).is_err());
    }

    #[test]
    fn mollified_step_and_identity() {
        let space = SpaceSpec::finite(2.0, 2).unwrap();
        let step = RegularizerSpec::radial(Profile::table(vec![[1.0, 0.0], [1.0, 1.0]]).unwrap()).unwrap();
        let f = PrimalVector::from_dense(&[0.3, 0.4]);
        let v = mollify_radial(&step, &space, &f);
        assert!((v - 0.5).abs() < 1e-9, "{v}");

        let lin = RegularizerSpec::radial(Profile::expr("r").unwrap()).unwrap();
        let v = mollify_radial(&lin, &space, &f);
        assert!((v - 1.0).abs() < 1e-12);

        let atom = lin
            .with_mollifier(Mollifier {
                density: Density::Atom(0.0),
                points: 2,
            })
            .unwrap();
        assert!((atom.eval(&space, &f) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn mollifier_weights_checked() {
        let bad = Mollifier {
            density: Density::Bins(vec![0.5, 0.6]),
            points: 8,
        };
        assert!(bad.validate().is_err());
    }
}
