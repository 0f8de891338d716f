//! Bulk and surface energy densities, their recession functions, convex
//! envelopes in one dimension, and the assumption checks that gate every
//! downstream computation.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::scalar::{c, Real};

/// Structural constants of a bulk density: `c_w|A| <= W(A) <= cap_w(1 + |A|)`,
/// Lipschitz constant `lip`, and recession rate `c_rec |A|^(1-alpha) / t^alpha`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BulkConstants<T> {
    pub c_w: T,
    pub cap_w: T,
    pub lip: T,
    pub alpha: T,
    pub c_rec: T,
}

/// `c_psi|lambda| <= psi(lambda, nu) <= cap_psi|lambda|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfaceConstants<T> {
    pub c_psi: T,
    pub cap_psi: T,
}

pub type BulkFn<T> = Arc<dyn Fn(&Mat<T>) -> T + Send + Sync>;
pub type SurfaceFn<T> = Arc<dyn Fn(&Mat<T>, &Mat<T>) -> T + Send + Sync>;

#[derive(Clone)]
pub enum BulkKind<T> {
    /// `|A|`.
    Abs,
    /// `sqrt(1 + |A|^2)`.
    Area,
    /// `min(2|A - 1| + 1, 2|A + 1| + 1)`, scalar gradients only.
    DoubleWell,
    /// Piecewise-linear interpolation of samples, extended by the end slopes.
    CustomGrid { xs: Vec<T>, ws: Vec<T> },
    /// User-supplied closure; `convex` enables the exact envelope shortcut.
    Function { name: String, value: BulkFn<T>, recession: Option<BulkFn<T>>, convex: bool },
}

#[derive(Clone)]
pub enum SurfaceKind<T> {
    /// `|lambda|`.
    Norm,
    /// `sqrt(sum_i w_i lambda_i^2) * (1 + kappa nu_1^2)`.
    Anisotropic { weights: Vec<T>, kappa: T },
    Function { name: String, value: SurfaceFn<T> },
}

#[derive(Clone)]
pub struct BulkDensity<T> {
    pub kind: BulkKind<T>,
    /// Target dimension (rows of a gradient).
    pub d: usize,
    /// Domain dimension (columns of a gradient).
    pub n: usize,
    pub constants: BulkConstants<T>,
}

#[derive(Clone)]
pub struct SurfaceDensity<T> {
    pub kind: SurfaceKind<T>,
    pub d: usize,
    pub n: usize,
    pub constants: SurfaceConstants<T>,
}

impl<T: Real> fmt::Debug for BulkDensity<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BulkDensity({}, {}x{})", self.name(), self.d, self.n)
    }
}

impl<T: Real> fmt::Debug for SurfaceDensity<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SurfaceDensity({}, {}x{})", self.name(), self.d, self.n)
    }
}

fn check_dims(d: usize, n: usize) -> Result<()> {
    if !(1..=2).contains(&d) || !(1..=2).contains(&n) {
        return Err(Error::UnsupportedDimension(format!("d = {d}, N = {n}; expected 1 or 2")));
    }
    Ok(())
}

fn unit_tol<T: Real>() -> T {
    c::<T>(1e-9).max(T::epsilon() * c(64.0))
}

impl<T: Real> BulkDensity<T> {
    pub fn abs(d: usize, n: usize) -> Result<Self> {
        check_dims(d, n)?;
        let constants = BulkConstants { c_w: T::one(), cap_w: T::one(), lip: T::one(), alpha: c(0.5), c_rec: T::one() };
        Ok(Self { kind: BulkKind::Abs, d, n, constants })
    }

    pub fn area(d: usize, n: usize) -> Result<Self> {
        check_dims(d, n)?;
        let constants = BulkConstants { c_w: T::one(), cap_w: T::one(), lip: T::one(), alpha: c(0.5), c_rec: T::one() };
        Ok(Self { kind: BulkKind::Area, d, n, constants })
    }

    pub fn double_well() -> Self {
        let constants = BulkConstants { c_w: T::one(), cap_w: c(3.0), lip: c(2.0), alpha: c(0.5), c_rec: T::one() };
        Self { kind: BulkKind::DoubleWell, d: 1, n: 1, constants }
    }

    /// Scalar density interpolating `(xs[i], ws[i])`; constants are derived
    /// from the data when `constants` is `None`.
    pub fn custom_grid(xs: Vec<T>, ws: Vec<T>, constants: Option<BulkConstants<T>>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != ws.len() {
            return Err(Error::Precondition("custom grid needs at least two (x, w) samples".into()));
        }
        if xs.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::Precondition("custom grid abscissae must increase strictly".into()));
        }
        if xs.iter().chain(&ws).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("custom grid samples".into()));
        }
        let mut out = Self {
            kind: BulkKind::CustomGrid { xs, ws },
            d: 1,
            n: 1,
            constants: BulkConstants { c_w: T::zero(), cap_w: T::zero(), lip: T::zero(), alpha: c(0.5), c_rec: T::zero() },
        };
        out.constants = constants.unwrap_or_else(|| out.derived_grid_constants());
        Ok(out)
    }

    pub fn function(
        name: &str,
        d: usize,
        n: usize,
        value: BulkFn<T>,
        recession: Option<BulkFn<T>>,
        convex: bool,
        constants: BulkConstants<T>,
    ) -> Result<Self> {
        check_dims(d, n)?;
        Ok(Self { kind: BulkKind::Function { name: name.to_string(), value, recession, convex }, d, n, constants })
    }

    pub fn name(&self) -> &str {
        match &self.kind {
            BulkKind::Abs => "abs",
            BulkKind::Area => "area",
            BulkKind::DoubleWell => "double-well",
            BulkKind::CustomGrid { .. } => "custom-grid",
            BulkKind::Function { name, .. } => name,
        }
    }

    pub fn is_convex(&self) -> bool {
        match &self.kind {
            BulkKind::Abs | BulkKind::Area => true,
            BulkKind::DoubleWell => false,
            BulkKind::CustomGrid { xs, ws } => {
                let slopes = grid_slopes(xs, ws);
                slopes.windows(2).all(|s| s[1] >= s[0])
            }
            BulkKind::Function { convex, .. } => *convex,
        }
    }

    /// True when the recession function is itself convex, so its envelope is exact.
    pub fn recession_is_convex(&self) -> bool {
        match &self.kind {
            BulkKind::Abs | BulkKind::Area | BulkKind::DoubleWell => true,
            BulkKind::CustomGrid { xs, ws } => {
                let s = grid_slopes(xs, ws);
                s[0] <= s[s.len() - 1]
            }
            BulkKind::Function { convex, .. } => *convex,
        }
    }

    /// `W(A)` without shape checks.
    pub(crate) fn value(&self, a: &Mat<T>) -> T {
        match &self.kind {
            BulkKind::Abs => a.norm(),
            BulkKind::Area => (T::one() + a.dot(a)).sqrt(),
            BulkKind::DoubleWell => {
                let x = a.get(0, 0);
                let two = c::<T>(2.0);
                (two * (x - T::one()).abs() + T::one()).min(two * (x + T::one()).abs() + T::one())
            }
            BulkKind::CustomGrid { xs, ws } => interpolate_grid(xs, ws, a.get(0, 0)),
            BulkKind::Function { value, .. } => value(a),
        }
    }

    /// Exact recession function when one is available in closed form.
    pub fn recession(&self, a: &Mat<T>) -> Option<T> {
        match &self.kind {
            BulkKind::Abs | BulkKind::Area => Some(a.norm()),
            BulkKind::DoubleWell => Some(c::<T>(2.0) * a.get(0, 0).abs()),
            BulkKind::CustomGrid { xs, ws } => {
                let s = grid_slopes(xs, ws);
                let x = a.get(0, 0);
                Some(if x >= T::zero() { s[s.len() - 1] * x } else { s[0] * x })
            }
            BulkKind::Function { recession, .. } => recession.as_ref().map(|r| r(a)),
        }
    }

    /// Recession value, falling back to `W(tA)/t` at a large `t`.
    pub(crate) fn recession_value(&self, a: &Mat<T>) -> T {
        self.recession(a).unwrap_or_else(|| {
            let t = c::<T>(1e8);
            self.value(&a.scale(t)) / t
        })
    }

    fn derived_grid_constants(&self) -> BulkConstants<T> {
        let BulkKind::CustomGrid { xs, ws } = &self.kind else { unreachable!() };
        let slopes = grid_slopes(xs, ws);
        let lip = slopes.iter().fold(T::zero(), |m, s| m.max(s.abs()));
        let (sl, sr) = (slopes[0], slopes[slopes.len() - 1]);
        let mut c_w = (-sl).min(sr);
        let mut cap_w = (-sl).max(sr).max(T::zero());
        let mut c_rec = T::zero();
        let mut probes: Vec<T> = xs.clone();
        probes.extend([-T::one(), T::one(), T::zero()]);
        for &x in &probes {
            let w = interpolate_grid(xs, ws, x);
            if x != T::zero() {
                c_w = c_w.min(w / x.abs());
            }
            cap_w = cap_w.max(w / (T::one() + x.abs()));
            if x.abs() >= T::one() {
                let winf = if x >= T::zero() { sr * x } else { sl * x };
                c_rec = c_rec.max((winf - w).abs() / x.abs().sqrt());
            }
        }
        BulkConstants { c_w: c_w.max(T::zero()), cap_w, lip, alpha: c(0.5), c_rec }
    }
}

fn grid_slopes<T: Real>(xs: &[T], ws: &[T]) -> Vec<T> {
    xs.windows(2).zip(ws.windows(2)).map(|(x, w)| (w[1] - w[0]) / (x[1] - x[0])).collect()
}

fn interpolate_grid<T: Real>(xs: &[T], ws: &[T], x: T) -> T {
    let last = xs.len() - 1;
    let i = match xs.partition_point(|v| *v <= x) {
        0 => 0,
        k if k > last => last - 1,
        k => k - 1,
    }
    .min(last - 1);
    ws[i] + (ws[i + 1] - ws[i]) / (xs[i + 1] - xs[i]) * (x - xs[i])
}

impl<T: Real> SurfaceDensity<T> {
    pub fn norm(d: usize, n: usize) -> Result<Self> {
        check_dims(d, n)?;
        Ok(Self { kind: SurfaceKind::Norm, d, n, constants: SurfaceConstants { c_psi: T::one(), cap_psi: T::one() } })
    }

    pub fn anisotropic(d: usize, n: usize, weights: Vec<T>, kappa: T) -> Result<Self> {
        check_dims(d, n)?;
        if weights.len() != d || weights.iter().any(|w| !(*w > T::zero())) || !(kappa >= T::zero()) {
            return Err(Error::Precondition(format!("anisotropic norm needs {d} positive weights and kappa >= 0")));
        }
        let lo = weights.iter().fold(T::infinity(), |m, w| m.min(*w)).sqrt();
        let hi = weights.iter().fold(T::zero(), |m, w| m.max(*w)).sqrt();
        // In one dimension every normal has nu_1^2 = 1.
        let floor = if n == 1 { lo * (T::one() + kappa) } else { lo };
        let constants = SurfaceConstants { c_psi: floor, cap_psi: hi * (T::one() + kappa) };
        Ok(Self { kind: SurfaceKind::Anisotropic { weights, kappa }, d, n, constants })
    }

    pub fn function(name: &str, d: usize, n: usize, value: SurfaceFn<T>, constants: SurfaceConstants<T>) -> Result<Self> {
        check_dims(d, n)?;
        Ok(Self { kind: SurfaceKind::Function { name: name.to_string(), value }, d, n, constants })
    }

    pub fn name(&self) -> &str {
        match &self.kind {
            SurfaceKind::Norm => "norm",
            SurfaceKind::Anisotropic { .. } => "anisotropic-norm",
            SurfaceKind::Function { name, .. } => name,
        }
    }

    /// True when `psi(lambda, nu) = |lambda|` for every normal.
    pub fn is_isotropic_norm(&self) -> bool {
        matches!(self.kind, SurfaceKind::Norm)
    }

    pub(crate) fn value(&self, lambda: &Mat<T>, nu: &Mat<T>) -> T {
        match &self.kind {
            SurfaceKind::Norm => lambda.norm(),
            SurfaceKind::Anisotropic { weights, kappa } => {
                let s = lambda.as_slice().iter().zip(weights).fold(T::zero(), |s, (l, w)| s + *w * *l * *l);
                let n1 = nu.get(0, 0);
                s.sqrt() * (T::one() + *kappa * n1 * n1)
            }
            SurfaceKind::Function { value, .. } => value(lambda, nu),
        }
    }
}

pub fn eval_bulk<T: Real>(w: &BulkDensity<T>, a: &Mat<T>) -> Result<T> {
    a.check_shape(w.d, w.n, "bulk argument")?;
    a.check_finite("bulk argument")?;
    let v = w.value(a);
    if !v.is_finite() {
        return Err(Error::NonFinite("bulk value".into()));
    }
    Ok(v)
}

pub fn eval_surface<T: Real>(psi: &SurfaceDensity<T>, lambda: &Mat<T>, nu: &Mat<T>) -> Result<T> {
    lambda.check_shape(psi.d, 1, "jump amplitude")?;
    nu.check_shape(psi.n, 1, "normal")?;
    lambda.check_finite("jump amplitude")?;
    nu.check_finite("normal")?;
    let len = nu.norm();
    if (len - T::one()).abs() > unit_tol() {
        return Err(Error::NonUnitNormal(len.to_f64_lossy()));
    }
    Ok(psi.value(lambda, nu))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecessionValue<T> {
    pub value: T,
    /// `None` when the value is exact.
    pub error_bound: Option<T>,
}

/// `W^inf(A)`: exact for catalog kinds, otherwise `W(t A)/t` at the last
/// schedule entry with the structural rate bound.
pub fn recession_bulk<T: Real>(w: &BulkDensity<T>, a: &Mat<T>, schedule: &[T]) -> Result<RecessionValue<T>> {
    a.check_shape(w.d, w.n, "recession argument")?;
    a.check_finite("recession argument")?;
    let &t_max = schedule.last().ok_or_else(|| Error::Schedule("empty".into()))?;
    if schedule.windows(2).any(|p| p[1] <= p[0]) || schedule[0] <= T::zero() {
        return Err(Error::Schedule("must be positive and strictly increasing".into()));
    }
    let size = a.norm();
    if size > T::zero() && t_max * size < T::one() {
        return Err(Error::Schedule("final t|A| must be at least 1".into()));
    }
    if let Some(v) = w.recession(a) {
        return Ok(RecessionValue { value: v, error_bound: None });
    }
    let value = w.value(&a.scale(t_max)) / t_max;
    let k = w.constants;
    let bound = k.c_rec * size.powf(T::one() - k.alpha) / t_max.powf(k.alpha);
    Ok(RecessionValue { value, error_bound: Some(bound) })
}

/// Piecewise-linear function with linear extension beyond its nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseLinear<T> {
    pub xs: Vec<T>,
    pub ys: Vec<T>,
    pub left_slope: T,
    pub right_slope: T,
}

impl<T: Real> PiecewiseLinear<T> {
    pub fn eval(&self, x: T) -> T {
        let last = self.xs.len() - 1;
        if x <= self.xs[0] {
            return self.ys[0] + self.left_slope * (x - self.xs[0]);
        }
        if x >= self.xs[last] {
            return self.ys[last] + self.right_slope * (x - self.xs[last]);
        }
        let i = self.xs.partition_point(|v| *v <= x) - 1;
        let (x0, x1, y0, y1) = (self.xs[i], self.xs[i + 1], self.ys[i], self.ys[i + 1]);
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    /// Hull segment containing `x`: `(left vertex, right vertex)`; equal
    /// vertices when `x` is a vertex or lies outside the nodes.
    pub fn segment(&self, x: T) -> (T, T) {
        let last = self.xs.len() - 1;
        if x <= self.xs[0] || x >= self.xs[last] {
            return (x, x);
        }
        let i = self.xs.partition_point(|v| *v <= x) - 1;
        if self.xs[i] == x {
            return (x, x);
        }
        (self.xs[i], self.xs[i + 1])
    }
}

/// Lower convex hull of sample points sorted by abscissa.
pub(crate) fn lower_hull<T: Real>(pts: &[(T, T)]) -> Vec<(T, T)> {
    let mut hull: Vec<(T, T)> = Vec::with_capacity(pts.len());
    for &p in pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross <= T::zero() {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvelopeGrid<T> {
    pub lo: T,
    pub hi: T,
    pub step: T,
}

fn hull_on_grid<T: Real>(f: &impl Fn(T) -> T, grid: &EnvelopeGrid<T>) -> Vec<(T, T)> {
    let count = ((grid.hi - grid.lo) / grid.step).round().to_usize().unwrap_or(0).max(1);
    let pts: Vec<(T, T)> = (0..=count)
        .map(|i| {
            let x = grid.lo + (grid.hi - grid.lo) * T::from_usize_exact(i) / T::from_usize_exact(count);
            (x, f(x))
        })
        .collect();
    lower_hull(&pts)
}

fn hull_function<T: Real>(hull: &[(T, T)]) -> PiecewiseLinear<T> {
    let xs: Vec<T> = hull.iter().map(|p| p.0).collect();
    let ys: Vec<T> = hull.iter().map(|p| p.1).collect();
    let slope = |i: usize| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
    let (left_slope, right_slope) =
        if xs.len() > 1 { (slope(0), slope(xs.len() - 2)) } else { (T::zero(), T::zero()) };
    PiecewiseLinear { xs, ys, left_slope, right_slope }
}

/// Discrete convex envelope of a scalar bulk density on `grid`, rejected
/// when halving the step moves the envelope by more than `1e-6`.
pub fn convex_envelope_1d<T: Real>(w: &BulkDensity<T>, grid: &EnvelopeGrid<T>) -> Result<PiecewiseLinear<T>> {
    if w.d != 1 || w.n != 1 {
        return Err(Error::UnsupportedDimension("convex envelope needs d = N = 1".into()));
    }
    if !(grid.step > T::zero()) || !(grid.hi > grid.lo) {
        return Err(Error::Precondition("envelope grid needs lo < hi and step > 0".into()));
    }
    let f = |x: T| w.value(&Mat::scalar(x));
    let coarse = hull_function(&hull_on_grid(&f, grid));
    let fine_grid = EnvelopeGrid { step: grid.step / c(2.0), ..*grid };
    let fine = hull_function(&hull_on_grid(&f, &fine_grid));
    let count = ((grid.hi - grid.lo) / grid.step).round().to_usize().unwrap_or(0).max(1);
    let mut worst = T::zero();
    for i in 0..=count {
        let x = grid.lo + (grid.hi - grid.lo) * T::from_usize_exact(i) / T::from_usize_exact(count);
        worst = worst.max((coarse.eval(x) - fine.eval(x)).abs());
    }
    if worst > c(1e-6) {
        return Err(Error::GridTooCoarse(worst.to_f64_lossy()));
    }
    Ok(coarse)
}

/// Result of one structural assumption check.
#[derive(Clone, Debug, PartialEq)]
pub struct AssumptionCheck {
    pub name: &'static str,
    pub passed: bool,
    /// Largest observed violation ratio; at most 1 when the check passes.
    pub worst_ratio: f64,
    pub witness: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<AssumptionCheck>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&'static str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect()
    }
}

struct Tracker {
    name: &'static str,
    worst: f64,
    witness: Option<String>,
}

impl Tracker {
    fn new(name: &'static str) -> Self {
        Self { name, worst: 0.0, witness: None }
    }

    /// Record `lhs <= rhs` with relative slack.
    fn le(&mut self, lhs: f64, rhs: f64, slack: f64, describe: impl FnOnce() -> String) {
        let allowed = rhs + slack * rhs.abs().max(1.0);
        let ratio = if allowed > 0.0 { lhs / allowed } else if lhs <= allowed { 0.0 } else { f64::INFINITY };
        let ratio = if lhs.is_nan() { f64::INFINITY } else { ratio };
        if ratio > self.worst {
            self.worst = ratio;
            if ratio > 1.0 {
                self.witness = Some(describe());
            }
        }
    }

    fn finish(self) -> AssumptionCheck {
        AssumptionCheck { name: self.name, passed: self.worst <= 1.0, worst_ratio: self.worst, witness: self.witness }
    }
}

fn random_mat<T: Real>(rng: &mut ChaCha8Rng, rows: usize, cols: usize, magnitude: f64) -> Mat<T> {
    let raw: Vec<f64> = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
    let vals: Vec<T> = raw.iter().map(|v| c(v / norm * magnitude)).collect();
    Mat::from_rows(rows, cols, &vals)
}

fn random_normal<T: Real>(rng: &mut ChaCha8Rng, n: usize) -> Mat<T> {
    if n == 1 {
        return Mat::scalar(if rng.gen_bool(0.5) { T::one() } else { -T::one() });
    }
    let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    Mat::col(&[c(theta.cos()), c(theta.sin())])
}

fn log_uniform(rng: &mut ChaCha8Rng, lo_exp: f64, hi_exp: f64) -> f64 {
    10f64.powf(rng.gen_range(lo_exp..hi_exp))
}

/// Sample the six structural assumptions on `budget` random arguments.
pub fn validate_pair<T: Real>(w: &BulkDensity<T>, psi: &SurfaceDensity<T>, budget: usize, seed: u64) -> ValidationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let slack = 1e-9f64.max(T::epsilon().to_f64_lossy() * 256.0);
    let (d, n) = (w.d, w.n);
    let kw = w.constants;
    let kp = psi.constants;
    let f = |x: T| x.to_f64_lossy();
    let mut growth = Tracker::new("W:growth");
    let mut lipschitz = Tracker::new("W:lipschitz");
    let mut recession = Tracker::new("W:recession");
    let mut psi_growth = Tracker::new("psi:growth");
    let mut psi_homog = Tracker::new("psi:homogeneity");
    let mut psi_sub = Tracker::new("psi:subadditivity");

    if psi.d != d || psi.n != n {
        let mut t = Tracker::new("psi:growth");
        t.worst = f64::INFINITY;
        t.witness = Some(format!("surface density is {}x{}, bulk is {d}x{n}", psi.d, psi.n));
        psi_growth = t;
    }
    let zero = Mat::<T>::zeros(d, n);
    growth.le(0.0, f(w.value(&zero)), slack, || "W(0) < 0".into());
    growth.le(f(w.value(&zero)), f(kw.cap_w), slack, || "W(0) > C_W".into());

    for _ in 0..budget {
        let a: Mat<T> = { let mag = log_uniform(&mut rng, -3.0, 3.0); random_mat(&mut rng, d, n, mag) };
        let wa = f(w.value(&a));
        let na = f(a.norm());
        growth.le(f(kw.c_w) * na, wa, slack, || format!("c_W|A| > W(A) at {a:?}"));
        growth.le(wa, f(kw.cap_w) * (1.0 + na), slack, || format!("W(A) > C_W(1+|A|) at {a:?}"));

        let delta: Mat<T> = { let mag = log_uniform(&mut rng, -4.0, 1.0); random_mat(&mut rng, d, n, mag) };
        let b = a + delta;
        let wb = f(w.value(&b));
        let diff = (wa - wb).abs();
        let rounding = T::epsilon().to_f64_lossy() * 8.0 * (wa.abs() + wb.abs());
        lipschitz.le(diff, f(kw.lip) * f(delta.norm()) + rounding, slack, || format!("Lipschitz bound fails between {a:?} and {b:?}"));

        if na > 0.0 {
            let winf = f(w.recession_value(&a));
            let t = log_uniform(&mut rng, 0.0, 6.0) / na;
            let tt: T = c(t);
            let gap = (winf - f(w.value(&a.scale(tt))) / t).abs();
            let bound = f(kw.c_rec) * na.powf(1.0 - f(kw.alpha)) / t.powf(f(kw.alpha));
            let est_err = if w.recession(&a).is_some() { 0.0 } else { f(kw.c_rec) * na.powf(1.0 - f(kw.alpha)) * 1e-4 };
            recession.le(gap, bound + est_err, slack, || format!("recession rate fails at A = {a:?}, t = {t:e}"));
        }

        let lambda: Mat<T> = { let mag = log_uniform(&mut rng, -3.0, 3.0); random_mat(&mut rng, d, 1, mag) };
        let nu = random_normal::<T>(&mut rng, n);
        let pl = f(psi.value(&lambda, &nu));
        let nl = f(lambda.norm());
        psi_growth.le(f(kp.c_psi) * nl, pl, slack, || format!("c_psi|lambda| > psi at {lambda:?}"));
        psi_growth.le(pl, f(kp.cap_psi) * nl, slack, || format!("psi > C_psi|lambda| at {lambda:?}"));

        let t = log_uniform(&mut rng, -2.0, 2.0);
        let scaled = f(psi.value(&lambda.scale(c(t)), &nu));
        psi_homog.le((scaled - t * pl).abs(), 0.0, slack * (t * pl).abs().max(1.0), || {
            format!("psi(t lambda) != t psi(lambda) at t = {t}, lambda = {lambda:?}")
        });
        let flipped = f(psi.value(&(-lambda), &(-nu)));
        psi_homog.le((flipped - pl).abs(), 0.0, slack * pl.abs().max(1.0), || format!("psi(-lambda, -nu) != psi(lambda, nu) at {lambda:?}"));

        let other: Mat<T> = { let mag = log_uniform(&mut rng, -3.0, 3.0); random_mat(&mut rng, d, 1, mag) };
        let sum = f(psi.value(&(lambda + other), &nu));
        psi_sub.le(sum, pl + f(psi.value(&other, &nu)), slack, || format!("subadditivity fails at {lambda:?} + {other:?}"));
    }

    ValidationReport {
        checks: vec![
            growth.finish(),
            lipschitz.finish(),
            recession.finish(),
            psi_growth.finish(),
            psi_homog.finish(),
            psi_sub.finish(),
        ],
    }
}

/// A bulk/surface pair that passed `validate_pair`.
#[derive(Clone)]
pub struct EnergyPair<T> {
    bulk: BulkDensity<T>,
    surface: SurfaceDensity<T>,
}

impl<T: Real> fmt::Debug for EnergyPair<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EnergyPair({:?}, {:?})", self.bulk, self.surface)
    }
}

pub const DEFAULT_VALIDATION_BUDGET: usize = 400;

impl<T: Real> EnergyPair<T> {
    pub fn new(bulk: BulkDensity<T>, surface: SurfaceDensity<T>) -> Result<Self> {
        Self::with_budget(bulk, surface, DEFAULT_VALIDATION_BUDGET, 0)
    }

    pub fn with_budget(bulk: BulkDensity<T>, surface: SurfaceDensity<T>, budget: usize, seed: u64) -> Result<Self> {
        if bulk.d != surface.d || bulk.n != surface.n {
            return Err(Error::Dimension(format!(
                "bulk is {}x{}, surface is {}x{}",
                bulk.d, bulk.n, surface.d, surface.n
            )));
        }
        let report = validate_pair(&bulk, &surface, budget, seed);
        if !report.passed() {
            return Err(Error::InvalidPair(report.failures().join(", ")));
        }
        Ok(Self { bulk, surface })
    }

    /// `W = |.|`, `psi = |.|`.
    pub fn abs_norm(d: usize, n: usize) -> Result<Self> {
        Self::new(BulkDensity::abs(d, n)?, SurfaceDensity::norm(d, n)?)
    }

    pub fn area_norm(d: usize, n: usize) -> Result<Self> {
        Self::new(BulkDensity::area(d, n)?, SurfaceDensity::norm(d, n)?)
    }

    pub fn double_well_norm() -> Result<Self> {
        Self::new(BulkDensity::double_well(), SurfaceDensity::norm(1, 1)?)
    }

    pub fn bulk(&self) -> &BulkDensity<T> {
        &self.bulk
    }

    pub fn surface(&self) -> &SurfaceDensity<T> {
        &self.surface
    }

    pub fn d(&self) -> usize {
        self.bulk.d
    }

    pub fn n(&self) -> usize {
        self.bulk.n
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(x: f64) -> Mat<f64> {
        Mat::scalar(x)
    }

    #[test]
    fn catalog_values() {
        let dw = BulkDensity::<f64>::double_well();
        assert_eq!(eval_bulk(&dw, &s(0.0)).unwrap(), 3.0);
        assert_eq!(eval_bulk(&dw, &s(1.0)).unwrap(), 1.0);
        assert_eq!(eval_bulk(&dw, &s(-2.5)).unwrap(), 4.0);
        let area = BulkDensity::<f64>::area(1, 1).unwrap();
        assert!((eval_bulk(&area, &s(1.0)).unwrap() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn surface_rejects_non_unit_normal() {
        let psi = SurfaceDensity::<f64>::norm(1, 2).unwrap();
        let r = eval_surface(&psi, &s(1.0), &Mat::col(&[0.6, 0.6]));
        assert!(matches!(r, Err(Error::NonUnitNormal(_))));
        let v = eval_surface(&psi, &s(-2.0), &Mat::col(&[0.6, 0.8])).unwrap();
        assert_eq!(v, 2.0);
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let w = BulkDensity::<f64>::abs(2, 2).unwrap();
        assert!(matches!(eval_bulk(&w, &s(1.0)), Err(Error::Dimension(_))));
    }

    #[test]
    fn area_recession_estimate_and_exact() {
        let w = BulkDensity::<f64>::area(1, 1).unwrap();
        let r = recession_bulk(&w, &s(1.0), &[1.0, 10.0, 100.0, 1000.0]).unwrap();
        assert_eq!(r.value, 1.0);
        assert!(matches!(recession_bulk(&w, &s(1.0), &[]), Err(Error::Schedule(_))));
        assert!(matches!(recession_bulk(&w, &s(1e-3), &[1.0, 10.0]), Err(Error::Schedule(_))));
        let f = BulkDensity::function(
            "area-closure",
            1,
            1,
            Arc::new(|a: &Mat<f64>| (1.0 + a.dot(a)).sqrt()),
            None,
            true,
            w.constants,
        )
        .unwrap();
        let est = recession_bulk(&f, &s(1.0), &[10.0, 1e3]).unwrap();
        assert!((est.value - 1.0).abs() <= est.error_bound.unwrap());
    }

    #[test]
    fn double_well_envelope() {
        let dw = BulkDensity::<f64>::double_well();
        let grid = EnvelopeGrid { lo: -4.0, hi: 4.0, step: 0.01 };
        let env = convex_envelope_1d(&dw, &grid).unwrap();
        for &(x, want) in &[(0.0, 1.0), (0.5, 1.0), (-1.0, 1.0), (2.0, 3.0), (-3.0, 5.0)] {
            assert!((env.eval(x) - want).abs() < 1e-9, "x = {x}");
        }
        let coarse = EnvelopeGrid { lo: -4.0, hi: 4.0, step: 0.3 };
        assert!(matches!(convex_envelope_1d(&dw, &coarse), Err(Error::GridTooCoarse(_))));
    }

    #[test]
    fn custom_grid_extends_with_end_slopes() {
        let w = BulkDensity::custom_grid(vec![-1.0, 0.0, 1.0], vec![1.0, 0.5, 2.0], None).unwrap();
        assert!((w.value(&s(3.0)) - 5.0).abs() < 1e-15);
        assert!((w.value(&s(-2.0)) - 1.5).abs() < 1e-15);
        assert_eq!(w.recession(&s(2.0)), Some(3.0));
        let pair = EnergyPair::new(w, SurfaceDensity::norm(1, 1).unwrap());
        assert!(pair.is_ok(), "{:?}", pair.err());
    }

    #[test]
    fn catalog_pairs_validate() {
        assert!(EnergyPair::<f64>::abs_norm(1, 1).is_ok());
        assert!(EnergyPair::<f64>::abs_norm(2, 2).is_ok());
        assert!(EnergyPair::<f64>::area_norm(2, 2).is_ok());
        assert!(EnergyPair::<f64>::double_well_norm().is_ok());
        let aniso = SurfaceDensity::anisotropic(2, 2, vec![1.0, 4.0], 0.5).unwrap();
        assert!(EnergyPair::new(BulkDensity::area(2, 2).unwrap(), aniso).is_ok());
    }

    #[test]
    fn superlinear_densities_are_rejected() {
        let k = BulkConstants { c_w: 1.0, cap_w: 1.0, lip: 1.0, alpha: 0.5, c_rec: 1.0 };
        let quad = BulkDensity::function("quadratic", 1, 1, Arc::new(|a: &Mat<f64>| a.dot(a)), None, true, k).unwrap();
        let report = validate_pair(&quad, &SurfaceDensity::norm(1, 1).unwrap(), 500, 1);
        assert!(report.failures().contains(&"W:growth"));
        assert!(EnergyPair::new(quad, SurfaceDensity::norm(1, 1).unwrap()).is_err());

        let sq = SurfaceDensity::function(
            "squared",
            1,
            1,
            Arc::new(|l: &Mat<f64>, _n: &Mat<f64>| l.dot(l)),
            SurfaceConstants { c_psi: 1.0, cap_psi: 1.0 },
        )
        .unwrap();
        let report = validate_pair(&BulkDensity::abs(1, 1).unwrap(), &sq, 500, 1);
        assert!(report.failures().contains(&"psi:homogeneity"));
    }

    #[test]
    fn f32_catalog_pair_validates() {
        let r = EnergyPair::<f32>::area_norm(1, 1);
        assert!(r.is_ok(), "{:?}", r.err());
    }
}
