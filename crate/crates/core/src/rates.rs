//! Local Glauber flip rates, the induced reaction polynomial and the
//! constants derived from it.
//!
//! A [`RateFunction`] is a nonnegative table indexed by window patterns (see
//! [`crate::lattice`] for the bit order). The reaction term is
//! `f(u) = E[(1 - 2 eta_0) c(eta)]` under the Bernoulli product measure of
//! density `u`, computed exactly by grouping patterns by particle count.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::lattice::{Configuration, LocalWindow};
use crate::poly::Polynomial;

/// Largest window (in sites) for which tables are stored and enumerated.
pub const MAX_WINDOW_BITS: usize = 20;

/// Absolute tolerance for "is a root" and "integral is zero".
pub const ROOT_TOLERANCE: f64 = 1e-10;

/// Grid used for the sign-change root scan on `[0, 1]`.
pub const ROOT_SCAN_POINTS: usize = 10_000;

pub const BIT_ORDER: &str =
    "offsets of {-r..r}^d sorted lexicographically; bit i = occupancy of offset i";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RateFunctionJson", into = "RateFunctionJson")]
pub struct RateFunction {
    window: LocalWindow,
    table: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RateFunctionJson {
    dim: usize,
    radius: usize,
    bit_order: String,
    table: Vec<f64>,
}

impl From<RateFunction> for RateFunctionJson {
    fn from(c: RateFunction) -> Self {
        Self {
            dim: c.window.dim(),
            radius: c.window.radius(),
            bit_order: BIT_ORDER.to_string(),
            table: c.table,
        }
    }
}

impl TryFrom<RateFunctionJson> for RateFunction {
    type Error = Error;

    fn try_from(j: RateFunctionJson) -> Result<Self> {
        if j.bit_order != BIT_ORDER {
            return Err(Error::Format(format!(
                "unknown bit order '{}'",
                j.bit_order
            )));
        }
        RateFunction::new(LocalWindow::new(j.dim, j.radius), j.table)
    }
}

impl RateFunction {
    pub fn new(window: LocalWindow, table: Vec<f64>) -> Result<Self> {
        if window.size() > MAX_WINDOW_BITS {
            return Err(Error::Capacity(format!(
                "window of {} sites exceeds {MAX_WINDOW_BITS}",
                window.size()
            )));
        }
        let expected = 1usize << window.size();
        if table.len() != expected {
            return domain(format!(
                "rate table has {} entries, expected {expected}",
                table.len()
            ));
        }
        if let Some((i, v)) = table
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v >= 0.0 && v.is_finite()))
        {
            return domain(format!(
                "rate table entry {i} is {v}, not a finite nonnegative number"
            ));
        }
        Ok(Self { window, table })
    }

    pub fn constant(window: LocalWindow, value: f64) -> Result<Self> {
        let n = 1usize << window.size().min(MAX_WINDOW_BITS + 1);
        Self::new(window, vec![value; n])
    }

    /// Table built from a closure over pattern indices.
    pub fn from_fn(window: LocalWindow, f: impl Fn(usize) -> f64) -> Result<Self> {
        if window.size() > MAX_WINDOW_BITS {
            return Err(Error::Capacity(format!(
                "window of {} sites is too large",
                window.size()
            )));
        }
        let table = (0..1usize << window.size()).map(f).collect();
        Self::new(window, table)
    }

    pub fn window(&self) -> &LocalWindow {
        &self.window
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn rate_of_pattern(&self, pattern: usize) -> f64 {
        self.table[pattern]
    }

    /// `c_x(eta) = (tau_x c)(eta)`.
    pub fn evaluate(&self, eta: &Configuration, x: usize) -> f64 {
        self.table[eta.read_window(x, &self.window)]
    }

    /// `(c^+, c^-)` indexed by the pattern with the origin bit removed.
    pub fn decompose(&self) -> (Vec<f64>, Vec<f64>) {
        let o = self.window.origin_bit();
        let reduced = 1usize << (self.window.size() - 1);
        let mut plus = Vec::with_capacity(reduced);
        let mut minus = Vec::with_capacity(reduced);
        for q in 0..reduced {
            let p = insert_bit(q, o);
            plus.push(self.table[p]);
            minus.push(self.table[p | (1 << o)]);
        }
        (plus, minus)
    }

    /// Exact `f(u) = E^{nu_u}[(1 - 2 eta_0) c]` as a polynomial.
    pub fn reaction_polynomial(&self) -> Polynomial {
        let n = self.window.size();
        let o = self.window.origin_bit();
        let mut by_count = vec![0.0; n + 1];
        for (p, &c) in self.table.iter().enumerate() {
            let sign = if (p >> o) & 1 == 1 { -1.0 } else { 1.0 };
            by_count[p.count_ones() as usize] += sign * c;
        }
        bernstein_sum(&by_count, n)
    }

    /// The same polynomial through `(1 - u) E[c^+] - u E[c^-]`.
    pub fn reaction_polynomial_decomposed(&self) -> Polynomial {
        let (plus, minus) = self.decompose();
        let m = self.window.size() - 1;
        let expect = |t: &[f64]| {
            let mut by_count = vec![0.0; m + 1];
            for (q, &c) in t.iter().enumerate() {
                by_count[q.count_ones() as usize] += c;
            }
            bernstein_sum(&by_count, m)
        };
        let one_minus_u = Polynomial::new(vec![1.0, -1.0]);
        let u = Polynomial::new(vec![0.0, 1.0]);
        one_minus_u
            .mul(&expect(&plus))
            .add(&u.mul(&expect(&minus)).scale(-1.0))
    }

    pub fn max_rate(&self) -> f64 {
        self.table.iter().copied().fold(0.0, f64::max)
    }
}

/// Inserts a zero bit at position `pos`.
fn insert_bit(q: usize, pos: usize) -> usize {
    let low = q & ((1 << pos) - 1);
    let high = q >> pos;
    (high << (pos + 1)) | low
}

/// `sum_k w[k] u^k (1 - u)^(n - k)`, expanded in the monomial basis.
fn bernstein_sum(w: &[f64], n: usize) -> Polynomial {
    let mut coeffs = vec![0.0; n + 1];
    for (k, &wk) in w.iter().enumerate() {
        if wk == 0.0 {
            continue;
        }
        // u^k (1-u)^(n-k) = sum_j C(n-k, j) (-1)^j u^(k+j)
        let m = n - k;
        let mut binom = 1.0;
        for j in 0..=m {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            coeffs[k + j] += wk * sign * binom;
            binom = binom * (m - j) as f64 / (j + 1) as f64;
        }
    }
    Polynomial::new(coeffs)
}

/// A bistable reaction term: exactly three simple zeros
/// `alpha_minus < alpha_star < alpha_plus` in `(0, 1)` with the stable,
/// unstable, stable sign pattern of `f'`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReactionPolynomial {
    pub coefficients: Vec<f64>,
    pub alpha_minus: f64,
    pub alpha_star: f64,
    pub alpha_plus: f64,
}

impl ReactionPolynomial {
    pub fn new(poly: Polynomial) -> Result<Self> {
        let report = validate_bistable_unbalanced(&poly, false);
        if !report.bistable() {
            return Err(Error::Domain(format!(
                "reaction polynomial is not bistable: {}",
                report.summary()
            )));
        }
        let r = &report.roots;
        Ok(Self {
            coefficients: poly.coeffs().to_vec(),
            alpha_minus: r[0],
            alpha_star: r[1],
            alpha_plus: r[2],
        })
    }

    /// `s (u - a_minus)(a_plus - u)(u - a_star)`.
    ///
    /// The roots only need to be ordered, so classical examples with roots
    /// at the ends of `[0, 1]` are representable.
    pub fn cubic(s: f64, alpha_minus: f64, alpha_star: f64, alpha_plus: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return domain(format!("scale must be positive, got {s}"));
        }
        if !(alpha_minus < alpha_star && alpha_star < alpha_plus)
            || !alpha_plus.is_finite()
            || !alpha_minus.is_finite()
        {
            return domain("roots must satisfy alpha_- < alpha_* < alpha_+");
        }
        let poly = Polynomial::from_roots(-s, &[alpha_minus, alpha_star, alpha_plus]);
        Ok(Self {
            coefficients: poly.coeffs().to_vec(),
            alpha_minus,
            alpha_star,
            alpha_plus,
        })
    }

    /// Default model with roots `(0.25, 0.45, 0.75)`.
    pub fn default_model(s: f64) -> Result<Self> {
        Self::cubic(s, 0.25, 0.45, 0.75)
    }

    pub fn polynomial(&self) -> Polynomial {
        Polynomial::new(self.coefficients.clone())
    }

    pub fn eval(&self, u: f64) -> f64 {
        self.coefficients
            .iter()
            .rev()
            .fold(0.0, |acc, &c| acc * u + c)
    }

    pub fn derivative_at(&self, u: f64) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (k, &c)| acc * u + k as f64 * c)
    }

    /// `int_{alpha_-}^{alpha_+} f`.
    pub fn integral(&self) -> f64 {
        self.polynomial()
            .integrate(self.alpha_minus, self.alpha_plus)
    }

    /// `max |f'|` over `[a, b]`.
    pub fn lipschitz_on(&self, a: f64, b: f64) -> f64 {
        self.polynomial().derivative().max_abs_on(a, b)
    }

    /// `max |f''|` over `[a, b]`.
    pub fn max_abs_second_on(&self, a: f64, b: f64) -> f64 {
        self.polynomial().derivative().derivative().max_abs_on(a, b)
    }

    /// `max |f|` over `[a, b]`.
    pub fn max_abs_on(&self, a: f64, b: f64) -> f64 {
        self.polynomial().max_abs_on(a, b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub roots: Vec<f64>,
    pub derivative_at_roots: Vec<f64>,
    /// `int_{alpha_-}^{alpha_+} f`, present when three roots were found.
    pub integral: Option<f64>,
    pub tolerance: f64,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Root count and derivative signs pass, regardless of balance.
    pub fn bistable(&self) -> bool {
        ["three_roots", "derivative_signs"]
            .iter()
            .all(|n| self.check(n).is_some_and(|c| c.passed))
    }

    pub fn summary(&self) -> String {
        self.checks
            .iter()
            .map(|c| {
                format!(
                    "{}={} ({})",
                    c.name,
                    if c.passed { "pass" } else { "fail" },
                    c.detail
                )
            })
            .collect::<Vec<_>>()
            .join("; ")
    }
}

/// Checks the bistability and imbalance conditions for `f`.
///
/// Roots are located by a sign-change scan on `[0, 1]` and polished with
/// Newton; the integral comes from the exact antiderivative. With
/// `require_positive` the imbalance check additionally demands a positive
/// integral.
pub fn validate_bistable_unbalanced(f: &Polynomial, require_positive: bool) -> ValidationReport {
    let roots: Vec<f64> = f
        .roots_in(0.0, 1.0, ROOT_SCAN_POINTS)
        .into_iter()
        .filter(|&r| r > ROOT_TOLERANCE && r < 1.0 - ROOT_TOLERANCE)
        .collect();
    let df = f.derivative();
    let derivative_at_roots: Vec<f64> = roots.iter().map(|&r| df.eval(r)).collect();
    let mut checks = Vec::new();
    let three = roots.len() == 3;
    checks.push(Check {
        name: "three_roots".into(),
        passed: three,
        detail: format!("{} interior roots {:?}", roots.len(), roots),
    });
    let signs = three
        && derivative_at_roots[0] < -ROOT_TOLERANCE
        && derivative_at_roots[1] > ROOT_TOLERANCE
        && derivative_at_roots[2] < -ROOT_TOLERANCE;
    checks.push(Check {
        name: "derivative_signs".into(),
        passed: signs,
        detail: format!("f' at roots {:?}, expected (-, +, -)", derivative_at_roots),
    });
    let residual_ok = roots.iter().all(|&r| f.eval(r).abs() <= ROOT_TOLERANCE);
    checks.push(Check {
        name: "root_residuals".into(),
        passed: residual_ok,
        detail: format!(
            "max |f(root)| = {:e}",
            roots.iter().map(|&r| f.eval(r).abs()).fold(0.0, f64::max)
        ),
    });
    let integral = three.then(|| f.integrate(roots[0], roots[2]));
    let unbalanced = match integral {
        Some(i) if require_positive => i > ROOT_TOLERANCE,
        Some(i) => i.abs() > ROOT_TOLERANCE,
        None => false,
    };
    checks.push(Check {
        name: "unbalanced".into(),
        passed: unbalanced,
        detail: match integral {
            Some(i) => format!(
                "integral {i:e}, required {}",
                if require_positive {
                    "> tol"
                } else {
                    "|.| > tol"
                }
            ),
            None => "no integral without three roots".into(),
        },
    });
    ValidationReport {
        roots,
        derivative_at_roots,
        integral,
        tolerance: ROOT_TOLERANCE,
        checks,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    pub gamma: f64,
    pub gamma_bar: f64,
    pub beta: f64,
    pub delta0: f64,
    pub theta: f64,
}

/// `gamma = f'(alpha_*)`, `gamma_bar = max(-f')` over
/// `[u_- min alpha_-, u_+ max alpha_+]`, `beta = min|f'(alpha_pm)| / 2`,
/// `delta0 = min(alpha_* - alpha_-, alpha_+ - alpha_*)`,
/// `theta = 2 gamma / (3 gamma + gamma_bar)`.
pub fn derived_constants(
    f: &ReactionPolynomial,
    u_minus: f64,
    u_plus: f64,
) -> Result<DerivedConstants> {
    if !(0.0 < u_minus && u_minus < f.alpha_star && f.alpha_star < u_plus && u_plus < 1.0) {
        return domain(format!(
            "need 0 < u_- < alpha_* < u_+ < 1, got u_- = {u_minus}, alpha_* = {}, u_+ = {u_plus}",
            f.alpha_star
        ));
    }
    let gamma = f.derivative_at(f.alpha_star);
    let lo = u_minus.min(f.alpha_minus);
    let hi = u_plus.max(f.alpha_plus);
    let gamma_bar = f.polynomial().derivative().scale(-1.0).max_on(lo, hi);
    let beta = 0.5
        * f.derivative_at(f.alpha_minus)
            .abs()
            .min(f.derivative_at(f.alpha_plus).abs());
    let delta0 = (f.alpha_star - f.alpha_minus).min(f.alpha_plus - f.alpha_star);
    let theta = 2.0 * gamma / (3.0 * gamma + gamma_bar);
    Ok(DerivedConstants {
        gamma,
        gamma_bar,
        beta,
        delta0,
        theta,
    })
}

/// Rates of the nearest-neighbour basis along the first axis.
///
/// `plus[k]` is `c^+` and `minus[k]` is `c^-` when `k` of the two sites
/// `+-e_1` are occupied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeighborRates {
    pub plus: [f64; 3],
    pub minus: [f64; 3],
}

impl NeighborRates {
    /// Coefficients `(beta_0, .., beta_5)` of
    /// `b0 + b1 n + b2 m + eta_0 (b3 + b4 n + b5 m)` with
    /// `n = eta_{-e1} + eta_{e1}`, `m = eta_{-e1} eta_{e1}`.
    pub fn basis_coefficients(&self) -> [f64; 6] {
        let [a0, a1, a2] = self.plus;
        let [b0, b1, b2] = self.minus;
        [
            a0,
            a1 - a0,
            a2 - 2.0 * a1 + a0,
            b0 - a0,
            (b1 - b0) - (a1 - a0),
            (b2 - 2.0 * b1 + b0) - (a2 - 2.0 * a1 + a0),
        ]
    }

    pub fn to_rate_function(&self, window: &LocalWindow) -> Result<RateFunction> {
        let (left, right) = axis_neighbor_bits(window)?;
        let o = window.origin_bit();
        RateFunction::from_fn(window.clone(), |p| {
            let k = ((p >> left) & 1) + ((p >> right) & 1);
            if (p >> o) & 1 == 1 {
                self.minus[k]
            } else {
                self.plus[k]
            }
        })
    }
}

fn axis_neighbor_bits(window: &LocalWindow) -> Result<(usize, usize)> {
    if window.radius() < 1 {
        return domain("design_rates needs a window of radius at least 1");
    }
    let mut e = vec![0i64; window.dim()];
    e[0] = -1;
    let left = window.bit_of(&e).expect("radius >= 1 window contains -e1");
    e[0] = 1;
    let right = window.bit_of(&e).expect("radius >= 1 window contains +e1");
    Ok((left, right))
}

/// Solves for nearest-neighbour rates whose reaction polynomial is `target`.
///
/// Writing `target` in the cubic Bernstein basis with coefficients
/// `F0..F3`, the basis realises it iff `a0 = F0`, `2 a1 - b0 = 3 F1`,
/// `a2 - 2 b1 = 3 F2` and `b2 = -F3`. The two free directions are fixed by
/// keeping exactly one rate of each coupled pair nonzero, which gives the
/// smallest table. Nonnegativity then only constrains `f(0) >= 0 >= f(1)`.
pub fn design_neighbor_rates(target: &Polynomial) -> Result<NeighborRates> {
    if target.degree() > 3 {
        return domain(format!(
            "target has degree {}, the basis spans cubics",
            target.degree()
        ));
    }
    let c = |k: usize| target.coeffs().get(k).copied().unwrap_or(0.0);
    let f0 = c(0);
    let f1 = c(0) + c(1) / 3.0;
    let f2 = c(0) + 2.0 * c(1) / 3.0 + c(2) / 3.0;
    let f3 = c(0) + c(1) + c(2) + c(3);
    let (a1, b0) = if f1 >= 0.0 {
        (1.5 * f1, 0.0)
    } else {
        (0.0, -3.0 * f1)
    };
    let (a2, b1) = if f2 >= 0.0 {
        (3.0 * f2, 0.0)
    } else {
        (0.0, -1.5 * f2)
    };
    let rates = NeighborRates {
        plus: [f0, a1, a2],
        minus: [b0, b1, -f3],
    };
    let mut violations = Vec::new();
    if f0 < 0.0 {
        violations.push(format!("c+ with no occupied neighbours = f(0) = {f0} < 0"));
    }
    if f3 > 0.0 {
        violations.push(format!(
            "c- with both neighbours occupied = -f(1) = {} < 0",
            -f3
        ));
    }
    if !violations.is_empty() {
        return Err(Error::Infeasible { violations });
    }
    Ok(rates)
}

/// Rate table on `window` realising the cubic `target`.
pub fn design_rates(target: &Polynomial, window: &LocalWindow) -> Result<RateFunction> {
    let rates = design_neighbor_rates(target)?;
    let c = rates.to_rate_function(window)?;
    let got = c.reaction_polynomial();
    let diff = got.add(&target.scale(-1.0));
    let err = diff.coeffs().iter().map(|x| x.abs()).fold(0.0, f64::max);
    let scale = target.coeffs().iter().map(|x| x.abs()).fold(1.0, f64::max);
    if err > 1e-12 * scale {
        return domain(format!(
            "designed rates reproduce the target only to {err:e}"
        ));
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::TorusGeometry;

    fn w1() -> LocalWindow {
        LocalWindow::new(1, 1)
    }

    #[test]
    fn neighbour_sum_rate() {
        // pattern bits: (eta_{-1}, eta_0, eta_1) at bits (0, 1, 2)
        let c = RateFunction::from_fn(w1(), |p| ((p & 1) + ((p >> 2) & 1)) as f64).unwrap();
        let g = TorusGeometry::new(1, 3).unwrap();
        let eta = Configuration::from_occupancy(g, &[1, 0, 1]).unwrap();
        assert_eq!(c.evaluate(&eta, 1), 2.0);
    }

    #[test]
    fn decompose_origin_rate() {
        let c = RateFunction::from_fn(w1(), |p| ((p >> 1) & 1) as f64).unwrap();
        let (plus, minus) = c.decompose();
        assert!(plus.iter().all(|&v| v == 0.0));
        assert!(minus.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn constant_rates_give_linear_f() {
        let c = RateFunction::constant(w1(), 1.0).unwrap();
        assert_eq!(c.reaction_polynomial().coeffs(), &[1.0, -2.0]);
        let (a, b) = (0.7, 1.9);
        let c = RateFunction::from_fn(w1(), |p| if (p >> 1) & 1 == 1 { b } else { a }).unwrap();
        let f = c.reaction_polynomial();
        assert!((f.coeffs()[0] - a).abs() < 1e-15);
        assert!((f.coeffs()[1] + a + b).abs() < 1e-15);
    }

    #[test]
    fn default_model_constants() {
        let f = ReactionPolynomial::cubic(1.0, 0.25, 0.45, 0.75).unwrap();
        let k = derived_constants(&f, 0.3, 0.7).unwrap();
        assert!((k.gamma - 0.06).abs() < 1e-14);
        assert!((k.delta0 - 0.2).abs() < 1e-14);
        assert!((k.beta - 0.05).abs() < 1e-14);
        assert!(k.theta > 0.0 && k.theta < 2.0 / 3.0);
        assert!(derived_constants(&f, 0.5, 0.7).is_err());
    }

    #[test]
    fn validation_cases() {
        let f = Polynomial::from_roots(-1.0, &[0.25, 0.45, 0.75]);
        let r = validate_bistable_unbalanced(&f, true);
        assert!(r.passed(), "{}", r.summary());
        assert!(r.integral.unwrap() > 0.0);

        let balanced = Polynomial::from_roots(-1.0, &[0.25, 0.5, 0.75]);
        let r = validate_bistable_unbalanced(&balanced, false);
        assert!(r.bistable());
        assert!(!r.check("unbalanced").unwrap().passed);

        let r = validate_bistable_unbalanced(&Polynomial::new(vec![1.0, -2.0]), false);
        assert!(!r.check("three_roots").unwrap().passed);
    }

    #[test]
    fn design_round_trip() {
        for s in [0.1, 1.0, 200.0] {
            let f = Polynomial::from_roots(-s, &[0.25, 0.45, 0.75]);
            let c = design_rates(&f, &w1()).unwrap();
            let back = c.reaction_polynomial();
            for k in 0..4 {
                assert!((back.coeffs()[k] - f.coeffs()[k]).abs() < 1e-12 * s.max(1.0));
            }
        }
        let lin = design_rates(&Polynomial::new(vec![1.0, -2.0]), &w1()).unwrap();
        let back = lin.reaction_polynomial();
        for (k, e) in [1.0, -2.0, 0.0, 0.0].iter().enumerate() {
            assert!((back.coeffs().get(k).copied().unwrap_or(0.0) - e).abs() < 1e-12);
        }
    }

    #[test]
    fn design_rejects_negative_entries() {
        let f = Polynomial::from_roots(-1.0, &[0.25, 0.45, 0.75]).add(&Polynomial::constant(-0.2));
        match design_rates(&f, &w1()) {
            Err(Error::Infeasible { violations }) => assert_eq!(violations.len(), 1),
            other => panic!("expected infeasibility, got {other:?}"),
        }
    }

    #[test]
    fn json_round_trip() {
        let f = Polynomial::from_roots(-2.0, &[0.25, 0.45, 0.75]);
        let c = design_rates(&f, &w1()).unwrap();
        let s = serde_json::to_string(&c).unwrap();
        let back: RateFunction = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
    }
}
