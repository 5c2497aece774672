//! Empirical estimation of the SC, RSI, EB, PL and QG constants over a
//! sublevel set [f ≤ f★ + ν], and a cross-check of the relations they must
//! satisfy.

use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::ppm::RateConstants;
use crate::problem::{min_norm_subgradient, secant_excess, Point, ProblemSpec};
use crate::zoo::rng_from_seed;

/// Where the estimator samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Sampling {
    /// `count` points per axis on [lo, hi]^dim; dimension at most 2.
    Grid { lo: f64, hi: f64, count: usize },
    /// `count` points uniform in the ball of `radius` around `center`
    /// (the projection of the origin onto S when omitted).
    Random {
        count: usize,
        radius: f64,
        #[serde(default)]
        center: Option<Vec<f64>>,
        #[serde(default)]
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationPlan {
    /// Sublevel offset; `f64::INFINITY` samples globally.
    pub nu: f64,
    pub sampling: Sampling,
    /// Points with f − f★ < τ or dist(x, S) < √τ are kept out of ratio denominators.
    pub tau_s: f64,
}

impl EstimationPlan {
    pub fn grid(nu: f64, lo: f64, hi: f64, count: usize) -> Self {
        EstimationPlan {
            nu,
            sampling: Sampling::Grid { lo, hi, count },
            tau_s: 1e-9,
        }
    }

    pub fn random(nu: f64, count: usize, radius: f64, seed: u64) -> Self {
        EstimationPlan {
            nu,
            sampling: Sampling::Random {
                count,
                radius,
                center: None,
                seed,
            },
            tau_s: 1e-9,
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if !(self.nu > 0.0) {
            return Err(Error::InvalidParams(format!(
                "nu must be positive, got {}",
                self.nu
            )));
        }
        if !(self.tau_s > 0.0) {
            return Err(Error::InvalidParams("tau_s must be positive".into()));
        }
        match &self.sampling {
            Sampling::Grid { lo, hi, count } => {
                if dim > 2 {
                    return Err(Error::InvalidParams(
                        "grid sampling needs dimension at most 2".into(),
                    ));
                }
                if *count < 100 {
                    return Err(Error::InvalidParams(format!(
                        "need at least 100 samples, got {count}"
                    )));
                }
                if !(lo < hi) {
                    return Err(Error::InvalidParams(format!(
                        "empty grid bracket [{lo}, {hi}]"
                    )));
                }
            }
            Sampling::Random {
                count,
                radius,
                center,
                ..
            } => {
                if *count < 100 {
                    return Err(Error::InvalidParams(format!(
                        "need at least 100 samples, got {count}"
                    )));
                }
                if !(*radius > 0.0) {
                    return Err(Error::InvalidParams("radius must be positive".into()));
                }
                if center.as_ref().is_some_and(|c| c.len() != dim) {
                    return Err(Error::BadShape(
                        "sampling center has the wrong dimension".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// How an estimate relates to the true constant because of the subgradient
/// oracle (sampling error aside).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundDirection {
    Exact,
    /// At least the true value.
    Upper,
    /// At most the true value.
    Lower,
    Approximate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    #[serde(with = "ext_f64")]
    pub value: f64,
    pub witness: Vec<f64>,
    /// Second point of the witnessing pair (strong convexity only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness_pair: Option<Vec<f64>>,
    pub bound_direction: BoundDirection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RegularityFlags {
    pub pl_fails_globally: bool,
    pub eb_fails_globally: bool,
}

/// Estimated constants; `None` where the data needed is unavailable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub problem: String,
    #[serde(with = "ext_f64")]
    pub nu: f64,
    pub samples: usize,
    pub mu_s: Option<Estimate>,
    pub mu_r: Option<Estimate>,
    pub mu_e: Option<Estimate>,
    pub mu_p: Option<Estimate>,
    pub mu_q: Option<Estimate>,
    pub flags: RegularityFlags,
    /// Suboptimal stationary points that triggered the flags.
    pub stationary_witnesses: Vec<Vec<f64>>,
}

impl RegularityReport {
    fn value(e: &Option<Estimate>) -> Option<f64> {
        e.as_ref().map(|e| e.value)
    }

    pub fn mu_s(&self) -> Option<f64> {
        Self::value(&self.mu_s)
    }

    pub fn mu_r(&self) -> Option<f64> {
        Self::value(&self.mu_r)
    }

    pub fn mu_e(&self) -> Option<f64> {
        Self::value(&self.mu_e)
    }

    pub fn mu_p(&self) -> Option<f64> {
        Self::value(&self.mu_p)
    }

    pub fn mu_q(&self) -> Option<f64> {
        Self::value(&self.mu_q)
    }

    pub fn rate_constants(&self, rho: f64) -> RateConstants {
        RateConstants {
            mu_p: self.mu_p(),
            mu_q: self.mu_q(),
            mu_e: self.mu_e(),
            rho,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// JSON has no infinities; they travel as the strings "inf" and "-inf".
mod ext_f64 {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else if *v < 0.0 {
            s.serialize_str("-inf")
        } else {
            s.serialize_str("nan")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Str(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(de::Error::custom(format!(
                    "expected a number, \"inf\" or \"nan\", got {other:?}"
                ))),
            },
        }
    }
}

/// Ratios above this count as EB failure.
pub const EB_CAP: f64 = 1e12;
/// Subgradient norms at or below this mark a stationary point.
pub const STATIONARY_TOL: f64 = 1e-8;
const SC_MAX_POINTS: usize = 200;

struct Sample {
    x: Point,
    gap: f64,
    g: Point,
    g_norm: f64,
    approximate: bool,
    proj: Option<Point>,
    dist: Option<f64>,
}

fn sample_points(p: &ProblemSpec, plan: &EstimationPlan) -> Result<Vec<Point>> {
    let dim = p.dim();
    match &plan.sampling {
        Sampling::Grid { lo, hi, count } => {
            let axis = linalg::linspace(*lo, *hi, *count);
            let mut pts: Vec<Point> = if dim == 1 {
                axis.iter().map(|&v| Point::from_elem(1, v)).collect()
            } else {
                axis.iter()
                    .flat_map(|&a| axis.iter().map(move |&b| Point::from(vec![a, b])))
                    .collect()
            };
            if dim == 1 {
                for r in stationary_points(p, *lo, *hi, *count)? {
                    pts.push(Point::from_elem(1, r));
                }
            }
            Ok(pts)
        }
        Sampling::Random {
            count,
            radius,
            center,
            seed,
        } => {
            let center = match center {
                Some(c) => Point::from(c.clone()),
                None => p
                    .project_solution(&Point::zeros(dim))
                    .unwrap_or_else(|| Point::zeros(dim)),
            };
            let mut rng = rng_from_seed(*seed);
            Ok((0..*count)
                .map(|_| {
                    let d: Point = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
                    let n = linalg::norm(d.view()).max(f64::MIN_POSITIVE);
                    let r = radius * rng.random::<f64>().powf(1.0 / dim as f64);
                    &center + &(d * (r / n))
                })
                .collect())
        }
    }
}

fn evaluate(p: &ProblemSpec, x: Point, f_star: f64) -> Result<Option<Sample>> {
    let Some(f) = p.value(&x).finite() else {
        return Ok(None);
    };
    let g = min_norm_subgradient(p, &x, false)?;
    let proj = p.project_solution(&x);
    let dist = proj.as_ref().map(|s| linalg::dist(x.view(), s.view()));
    Ok(Some(Sample {
        x,
        gap: f - f_star,
        g: g.element,
        g_norm: g.norm,
        approximate: g.approximate,
        proj,
        dist,
    }))
}

#[derive(Default)]
struct Extremum {
    value: Option<f64>,
    witness: Option<Vec<f64>>,
    pair: Option<Vec<f64>>,
}

impl Extremum {
    fn min(&mut self, v: f64, x: &Point) {
        if self.value.is_none_or(|cur| v < cur) {
            self.value = Some(v);
            self.witness = Some(x.to_vec());
        }
    }

    fn max(&mut self, v: f64, x: &Point) {
        if self.value.is_none_or(|cur| v > cur) {
            self.value = Some(v);
            self.witness = Some(x.to_vec());
        }
    }

    fn finish(self, dir: BoundDirection, clamp: impl Fn(f64) -> f64) -> Option<Estimate> {
        Some(Estimate {
            value: clamp(self.value?),
            witness: self.witness?,
            witness_pair: self.pair,
            bound_direction: dir,
        })
    }
}

/// Extremal empirical ratios of the five conditions over the admitted samples.
///
/// Needs f★; constants involving dist(x, S) also need a solution oracle. A
/// sampled stationary point with f > f★ + τ sets both failure flags,
/// forcing μ_p = 0 and μ_e = +∞.
pub fn estimate_constants(p: &ProblemSpec, plan: &EstimationPlan) -> Result<RegularityReport> {
    let f_star = p.f_star.ok_or(Error::NeedsReference)?;
    plan.validate(p.dim())?;
    let tau = plan.tau_s;
    let mut samples = Vec::new();
    for x in sample_points(p, plan)? {
        if let Some(s) = evaluate(p, x, f_star)? {
            if s.gap <= plan.nu {
                samples.push(s);
            }
        }
    }
    if samples.is_empty() {
        return Err(Error::InvalidParams(
            "no sample lies in the sublevel set".into(),
        ));
    }
    let approximate = samples.iter().any(|s| s.approximate);
    let dir = |exact_dir: BoundDirection| {
        if approximate {
            exact_dir
        } else {
            BoundDirection::Exact
        }
    };

    let mut rsi = Extremum::default();
    let mut eb = Extremum::default();
    let mut pl = Extremum::default();
    let mut qg = Extremum::default();
    let mut flags = RegularityFlags::default();
    let mut stationary_witnesses = Vec::new();
    for s in &samples {
        let away = s.gap >= tau && s.dist.is_none_or(|d| d >= tau.sqrt());
        if !away {
            continue;
        }
        pl.min(s.g_norm * s.g_norm / s.gap, &s.x);
        if let (Some(d), Some(proj)) = (s.dist, &s.proj) {
            rsi.min(s.g.dot(&(&s.x - proj)) / (d * d), &s.x);
            qg.min(s.gap / (d * d), &s.x);
            let ratio = if s.g_norm > 0.0 {
                d / s.g_norm
            } else {
                f64::INFINITY
            };
            eb.max(ratio, &s.x);
        }
        if s.g_norm <= STATIONARY_TOL {
            stationary_witnesses.push(s.x.to_vec());
        }
    }
    if !stationary_witnesses.is_empty() || eb.value.is_some_and(|v| v > EB_CAP) {
        flags.pl_fails_globally = true;
        flags.eb_fails_globally = true;
    }
    let mut mu_p = pl.finish(dir(BoundDirection::Lower), |v| v.max(0.0));
    let mut mu_e = eb.finish(dir(BoundDirection::Upper), |v| {
        if v > EB_CAP {
            f64::INFINITY
        } else {
            v
        }
    });
    if flags.pl_fails_globally {
        let w = stationary_witnesses.first().cloned();
        for est in [&mut mu_p, &mut mu_e].into_iter().flatten() {
            if let Some(w) = &w {
                est.witness = w.clone();
            }
        }
        if let Some(e) = mu_p.as_mut() {
            e.value = 0.0;
        }
        if let Some(e) = mu_e.as_mut() {
            e.value = f64::INFINITY;
        }
    }

    Ok(RegularityReport {
        problem: p.name.clone(),
        nu: plan.nu,
        samples: samples.len(),
        mu_s: strong_convexity(&samples).finish(dir(BoundDirection::Approximate), |v| v.max(0.0)),
        mu_r: rsi.finish(dir(BoundDirection::Approximate), |v| v.max(0.0)),
        mu_e,
        mu_p,
        mu_q: qg.finish(BoundDirection::Exact, |v| v.max(0.0)),
        flags,
        stationary_witnesses,
    })
}

/// inf (f(y) − f(x) − ⟨g, y − x⟩)/‖y − x‖² over ordered pairs of a thinned sample.
fn strong_convexity(samples: &[Sample]) -> Extremum {
    let stride = samples.len().div_ceil(SC_MAX_POINTS).max(1);
    let thin: Vec<&Sample> = samples.iter().step_by(stride).collect();
    let mut ext = Extremum::default();
    for a in &thin {
        for b in &thin {
            let d = &b.x - &a.x;
            let dd = d.dot(&d);
            if dd == 0.0 {
                continue;
            }
            let v = (b.gap - a.gap - a.g.dot(&d)) / dd;
            if ext.value.is_none_or(|cur| v < cur) {
                ext.value = Some(v);
                ext.witness = Some(a.x.to_vec());
                ext.pair = Some(b.x.to_vec());
            }
        }
    }
    ext
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", content = "reason", rename_all = "snake_case")]
pub enum AuditOutcome {
    Pass,
    Fail,
    NotApplicable(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub relation: String,
    /// Bound implied by the other constants.
    #[serde(with = "ext_f64")]
    pub expected: f64,
    #[serde(with = "ext_f64")]
    pub observed: f64,
    #[serde(flatten)]
    pub outcome: AuditOutcome,
}

impl AuditEntry {
    pub fn passed(&self) -> bool {
        self.outcome == AuditOutcome::Pass
    }
}

impl fmt::Display for AuditEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = match &self.outcome {
            AuditOutcome::Pass => "pass".to_string(),
            AuditOutcome::Fail => "FAIL".to_string(),
            AuditOutcome::NotApplicable(r) => format!("n/a ({r})"),
        };
        write!(
            f,
            "{:<28} expected {:<12.6} observed {:<12.6} {verdict}",
            self.relation, self.expected, self.observed
        )
    }
}

/// Relative tolerance of the audit, absorbing sampling error.
pub const AUDIT_TOL: f64 = 0.1;

/// Check the six relations between the estimated constants.
///
/// 1. μ_r ≥ μ_s
/// 2. μ_e ≤ 1/μ_r
/// 3. μ_p ≥ 2/(2μ_e + ρμ_e²)
/// 4. μ_e ≤ 2/μ_p
/// 5. μ_q ≥ 1/(4μ_e)
/// 6. μ_r ≥ μ_q − ρ/2, when ρ = 0 or μ_q > ρ/2
///
/// A relation whose premise constant is missing, zero or infinite is reported
/// as not applicable.
pub fn audit_implications(report: &RegularityReport, rho: f64) -> Vec<AuditEntry> {
    let positive = |v: Option<f64>| v.filter(|x| *x > 0.0 && x.is_finite());
    let failed = report.flags.pl_fails_globally || report.flags.eb_fails_globally;
    let na = |relation: &str, why: &str| AuditEntry {
        relation: relation.into(),
        expected: f64::NAN,
        observed: f64::NAN,
        outcome: AuditOutcome::NotApplicable(why.into()),
    };
    let at_least = |relation: &str, expected: f64, observed: f64| AuditEntry {
        relation: relation.into(),
        expected,
        observed,
        outcome: if observed >= expected * (1.0 - AUDIT_TOL) {
            AuditOutcome::Pass
        } else {
            AuditOutcome::Fail
        },
    };
    let at_most = |relation: &str, expected: f64, observed: f64| AuditEntry {
        relation: relation.into(),
        expected,
        observed,
        outcome: if observed <= expected * (1.0 + AUDIT_TOL) {
            AuditOutcome::Pass
        } else {
            AuditOutcome::Fail
        },
    };
    let eb_pl_reason = "EB/PL fail; only QG is in force";
    let mut out = Vec::new();

    let r1 = "(1) mu_r >= mu_s";
    out.push(match (positive(report.mu_s()), report.mu_r()) {
        (Some(s), Some(r)) => at_least(r1, s, r),
        _ => na(r1, "SC constant is zero or unavailable"),
    });

    let r2 = "(2) mu_e <= 1/mu_r";
    out.push(match (positive(report.mu_r()), report.mu_e()) {
        _ if failed => na(r2, eb_pl_reason),
        (Some(r), Some(e)) => at_most(r2, 1.0 / r, e),
        _ => na(r2, "RSI constant is zero or unavailable"),
    });

    let r3 = "(3) mu_p >= 2/(2mu_e+rho mu_e^2)";
    out.push(match (positive(report.mu_e()), report.mu_p()) {
        _ if failed => na(r3, eb_pl_reason),
        (Some(e), Some(pl)) => at_least(r3, 2.0 / (2.0 * e + rho * e * e), pl),
        _ => na(r3, "EB constant is unavailable"),
    });

    let r4 = "(4) mu_e <= 2/mu_p";
    out.push(match (positive(report.mu_p()), report.mu_e()) {
        _ if failed => na(r4, eb_pl_reason),
        (Some(pl), Some(e)) => at_most(r4, 2.0 / pl, e),
        _ => na(r4, "PL constant is zero or unavailable"),
    });

    let r5 = "(5) mu_q >= 1/(4mu_e)";
    out.push(match (positive(report.mu_e()), report.mu_q()) {
        _ if failed => na(r5, eb_pl_reason),
        (Some(e), Some(q)) => at_least(r5, 1.0 / (4.0 * e), q),
        _ => na(r5, "EB constant is unavailable"),
    });

    let r6 = "(6) mu_r >= mu_q - rho/2";
    out.push(match (report.mu_q(), report.mu_r()) {
        (Some(q), Some(r)) if rho == 0.0 || q > rho / 2.0 => at_least(r6, q - rho / 2.0, r),
        (Some(_), Some(_)) => na(r6, "QG constant does not exceed rho/2"),
        _ => na(r6, "QG or RSI constant is unavailable"),
    });
    out
}

/// Every stationary point of a one-dimensional objective on [lo, hi], located
/// by sign changes of the minimum-norm subgradient on a `count`-point scan
/// refined by bisection.
fn stationary_points(p: &ProblemSpec, lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if p.dim() != 1 {
        return Err(Error::BadShape(
            "stationary-point search needs a one-dimensional problem".into(),
        ));
    }
    let slope = |x: f64| -> Result<f64> {
        Ok(min_norm_subgradient(p, &Point::from_elem(1, x), false)?.element[0])
    };
    let grid = linalg::linspace(lo, hi, count);
    let mut roots = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for &x in &grid {
        if p.value(&Point::from_elem(1, x)).finite().is_none() {
            prev = None;
            continue;
        }
        let g = slope(x)?;
        if g == 0.0 {
            roots.push(x);
        } else if let Some((xp, gp)) = prev {
            if gp != 0.0 && gp.signum() != g.signum() {
                let (mut a, mut b) = (xp, x);
                for _ in 0..200 {
                    let m = 0.5 * (a + b);
                    if m == a || m == b {
                        break;
                    }
                    let gm = slope(m)?;
                    if gm == 0.0 {
                        a = m;
                        b = m;
                        break;
                    }
                    if gm.signum() == gp.signum() {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                let r = if slope(a)?.abs() <= slope(b)?.abs() {
                    a
                } else {
                    b
                };
                roots.push(r);
            }
        }
        prev = Some((x, g));
    }
    Ok(roots)
}

/// Stationary points on the bracket whose value exceeds f★ by more than 1e−6.
pub fn find_suboptimal_stationary_points(
    p: &ProblemSpec,
    bracket: (f64, f64),
) -> Result<Vec<Point>> {
    let f_star = p.f_star.ok_or(Error::NeedsReference)?;
    let mut out = Vec::new();
    for r in stationary_points(p, bracket.0, bracket.1, 10_001)? {
        let x = Point::from_elem(1, r);
        let g = min_norm_subgradient(p, &x, false)?;
        if g.norm < STATIONARY_TOL && p.finite_value(&x)? - f_star > 1e-6 {
            out.push(x);
        }
    }
    Ok(out)
}

/// Result of a sampled weak-convexity check.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakConvexityCheck {
    pub holds: bool,
    /// Worst violating triple (x, y, λ) and its excess.
    pub witness: Option<(Point, Point, f64, f64)>,
}

/// Check the secant inequality with modulus `rho_claim` on `samples` seeded
/// triples drawn from the box `bracket`^dim.
pub fn verify_weak_convexity(
    p: &ProblemSpec,
    rho_claim: f64,
    bracket: (f64, f64),
    samples: usize,
    seed: u64,
) -> Result<WeakConvexityCheck> {
    let mut rng = rng_from_seed(seed);
    let (lo, hi) = bracket;
    let mut worst: Option<(Point, Point, f64, f64)> = None;
    for _ in 0..samples {
        let x: Point = (0..p.dim()).map(|_| rng.random_range(lo..hi)).collect();
        let y: Point = (0..p.dim()).map(|_| rng.random_range(lo..hi)).collect();
        let lam: f64 = rng.random();
        if !(p.value(&x).is_finite() && p.value(&y).is_finite()) {
            continue;
        }
        let excess = secant_excess(p, rho_claim, &x, &y, lam)?;
        let scale = 1.0 + p.finite_value(&x)?.abs() + p.finite_value(&y)?.abs();
        if excess > 1e-9 * scale && worst.as_ref().is_none_or(|w| excess > w.3) {
            worst = Some((x, y, lam, excess));
        }
    }
    Ok(WeakConvexityCheck {
        holds: worst.is_none(),
        witness: worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo::{make_benchmark, BenchmarkId};

    fn within(v: f64, target: f64, rel: f64) -> bool {
        (v - target).abs() <= rel * target.abs()
    }

    #[test]
    fn quad1d_constants() {
        let p = make_benchmark(BenchmarkId::Quad1d);
        let r = estimate_constants(&p, &EstimationPlan::grid(1.0, -1.0, 1.0, 10_001)).unwrap();
        assert!(within(r.mu_s().unwrap(), 1.0, 0.05));
        assert!(within(r.mu_r().unwrap(), 2.0, 0.05));
        assert!(within(r.mu_e().unwrap(), 0.5, 0.05));
        assert!(within(r.mu_p().unwrap(), 4.0, 0.05));
        assert!(within(r.mu_q().unwrap(), 1.0, 0.05));
        assert!(!r.flags.pl_fails_globally);
        assert!(audit_implications(&r, 0.0).iter().all(AuditEntry::passed));
    }

    #[test]
    fn wc_piecewise_constants_and_audit() {
        let p = make_benchmark(BenchmarkId::WcPiecewise);
        let r = estimate_constants(&p, &EstimationPlan::grid(1.0, -2.0, 0.0, 10_001)).unwrap();
        assert!(within(r.mu_q().unwrap(), 3.0, 0.05));
        assert!(within(r.mu_e().unwrap(), 0.5, 0.05));
        assert!(within(r.mu_p().unwrap(), 4.0 / 3.0, 0.05));
        assert!(within(r.mu_r().unwrap(), 2.0, 0.05));
        let audit = audit_implications(&r, 2.0);
        assert!(audit[5].passed(), "{}", audit[5]);
        assert!(audit.iter().all(|a| a.outcome != AuditOutcome::Fail));
    }

    #[test]
    fn sine_quad_global_failure() {
        let p = make_benchmark(BenchmarkId::SineQuad);
        let r = estimate_constants(
            &p,
            &EstimationPlan::grid(f64::INFINITY, -10.0, 10.0, 10_001),
        )
        .unwrap();
        assert!(r.mu_q().unwrap() >= 1.0 - 1e-3);
        assert!(r.flags.pl_fails_globally && r.flags.eb_fails_globally);
        assert_eq!(r.mu_p(), Some(0.0));
        assert_eq!(r.mu_e(), Some(f64::INFINITY));
        let audit = audit_implications(&r, 10.0);
        assert!(audit.iter().all(|a| a.outcome != AuditOutcome::Fail));
        assert!(matches!(audit[5].outcome, AuditOutcome::NotApplicable(_)));
    }

    #[test]
    fn suboptimal_stationary_points() {
        let s = make_benchmark(BenchmarkId::SineQuad);
        let pts = find_suboptimal_stationary_points(&s, (1.0, 3.0)).unwrap();
        assert!(!pts.is_empty());
        for x in &pts {
            let v = x[0];
            assert!((v + 3.0 * (2.0 * v).sin()).abs() < 1e-8);
            assert!(s.finite_value(x).unwrap() > 0.1);
        }
        for id in [BenchmarkId::Quad1d, BenchmarkId::WcPiecewise] {
            let p = make_benchmark(id);
            assert!(find_suboptimal_stationary_points(&p, (-3.0, 3.0))
                .unwrap()
                .is_empty());
        }
    }

    #[test]
    fn weak_convexity_claims() {
        let wc = make_benchmark(BenchmarkId::WcPiecewise);
        assert!(
            verify_weak_convexity(&wc, 2.0, (-2.0, 0.5), 20_000, 1)
                .unwrap()
                .holds
        );
        let bad = verify_weak_convexity(&wc, 1.0, (-2.0, 0.5), 20_000, 1).unwrap();
        assert!(!bad.holds);
        let (x, y, lam, _) = bad.witness.unwrap();
        let m = lam * x[0] + (1.0 - lam) * y[0];
        assert!(m > -1.0 && m < -0.5, "midpoint {m}");
        let q = make_benchmark(BenchmarkId::Quad1d);
        assert!(
            verify_weak_convexity(&q, 0.0, (-3.0, 3.0), 5_000, 2)
                .unwrap()
                .holds
        );
    }

    #[test]
    fn report_json_round_trip_with_infinity() {
        let p = make_benchmark(BenchmarkId::SineQuad);
        let r = estimate_constants(&p, &EstimationPlan::grid(f64::INFINITY, -10.0, 10.0, 1001))
            .unwrap();
        let json = r.to_json().unwrap();
        assert!(json.contains("\"inf\""));
        let back: RegularityReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn plan_validation() {
        let p = make_benchmark(BenchmarkId::Quad1d);
        assert!(estimate_constants(&p, &EstimationPlan::grid(1.0, -1.0, 1.0, 50)).is_err());
        let bare = crate::problem::ProblemSpec::new(
            "bare",
            std::sync::Arc::new(crate::zoo::SineQuad),
            10.0,
        );
        assert!(matches!(
            estimate_constants(&bare, &EstimationPlan::grid(1.0, -1.0, 1.0, 101)),
            Err(Error::NeedsReference)
        ));
    }

    #[test]
    fn random_sampling_on_aniso() {
        let p = make_benchmark(BenchmarkId::AnisoQuad(9.0));
        let r =
            estimate_constants(&p, &EstimationPlan::random(f64::INFINITY, 2000, 2.0, 3)).unwrap();
        assert!(r.mu_q().unwrap() >= 0.5 * (1.0 - 1e-9));
        assert!(within(r.mu_q().unwrap(), 0.5, 0.05));
        assert!(audit_implications(&r, 0.0)
            .iter()
            .all(|a| a.outcome != AuditOutcome::Fail));
    }
}
