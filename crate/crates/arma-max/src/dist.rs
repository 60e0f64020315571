//! Innovation laws: density, density derivative, cdf and sampling, plus the
//! initial joint cdf of the process state.
//!
//! The kernel machinery needs three analytic ingredients from the innovation
//! law — `f`, `f'` and `F` — and the Monte Carlo oracle needs a deterministic
//! sampler. Built-in families (normal, logistic) provide all four in closed
//! form; a tabulated family covers user-supplied laws.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Tail probability mass allowed outside the effective support radius.
pub const TAIL_TOL: f64 = 1e-10;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const SQRT_2: f64 = std::f64::consts::SQRT_2;

#[inline]
fn std_normal_pdf(t: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * t * t).exp()
}

#[inline]
fn std_normal_cdf(t: f64) -> f64 {
    0.5 * erfc(-t / SQRT_2)
}

/// Tabulated density on a sorted abscissa grid, with optional derivative
/// column. The cdf is the trapezoid cumulative of the (renormalized) table.
#[derive(Debug, Clone)]
pub struct PdfTable {
    pub ts: Vec<f64>,
    pub pdf: Vec<f64>,
    pub deriv: Option<Vec<f64>>,
    cdf: Vec<f64>,
}

impl PdfTable {
    pub fn new(ts: Vec<f64>, pdf: Vec<f64>, deriv: Option<Vec<f64>>) -> Result<Self> {
        if ts.len() < 2 || ts.len() != pdf.len() {
            return Err(Error::config("pdf table needs at least two (t, pdf) rows of equal length"));
        }
        if let Some(d) = &deriv {
            if d.len() != ts.len() {
                return Err(Error::config("pdf-derivative column length mismatch"));
            }
        }
        if ts.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("pdf table abscissae must be strictly increasing"));
        }
        if pdf.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::config("pdf table values must be finite and nonnegative"));
        }
        let mut cdf = vec![0.0; ts.len()];
        for i in 1..ts.len() {
            cdf[i] = cdf[i - 1] + 0.5 * (pdf[i] + pdf[i - 1]) * (ts[i] - ts[i - 1]);
        }
        let total = *cdf.last().unwrap();
        if total <= 0.0 {
            return Err(Error::config("pdf table integrates to zero"));
        }
        for c in &mut cdf {
            *c /= total;
        }
        Ok(PdfTable { ts, pdf, deriv, cdf })
    }

    fn locate(&self, t: f64) -> Option<usize> {
        if t < self.ts[0] || t > *self.ts.last().unwrap() {
            return None;
        }
        let i = self.ts.partition_point(|&a| a <= t).saturating_sub(1);
        Some(i.min(self.ts.len() - 2))
    }

    fn interp(&self, col: &[f64], t: f64) -> f64 {
        match self.locate(t) {
            None => 0.0,
            Some(i) => {
                let w = (t - self.ts[i]) / (self.ts[i + 1] - self.ts[i]);
                col[i] * (1.0 - w) + col[i + 1] * w
            }
        }
    }

    fn cdf_at(&self, t: f64) -> f64 {
        if t <= self.ts[0] {
            return 0.0;
        }
        if t >= *self.ts.last().unwrap() {
            return 1.0;
        }
        let i = self.locate(t).unwrap();
        // trapezoid between grid points, consistent with the stored cumulative
        let p = self.interp(&self.pdf, t);
        self.cdf[i] + 0.5 * (p + self.pdf[i]) * (t - self.ts[i]) / self.total_mass()
    }

    fn total_mass(&self) -> f64 {
        let mut m = 0.0;
        for i in 1..self.ts.len() {
            m += 0.5 * (self.pdf[i] + self.pdf[i - 1]) * (self.ts[i] - self.ts[i - 1]);
        }
        m
    }

    fn quantile(&self, p: f64) -> f64 {
        let i = self.cdf.partition_point(|&c| c <= p).saturating_sub(1).min(self.ts.len() - 2);
        let (c0, c1) = (self.cdf[i], self.cdf[i + 1]);
        if c1 <= c0 {
            return self.ts[i];
        }
        let w = (p - c0) / (c1 - c0);
        self.ts[i] * (1.0 - w) + self.ts[i + 1] * w
    }
}

/// An innovation law with location/scale structure.
#[derive(Debug, Clone)]
pub enum ErrorDistribution {
    Normal { location: f64, scale: f64 },
    Logistic { location: f64, scale: f64 },
    Table(Arc<PdfTable>),
}

impl ErrorDistribution {
    pub fn standard_normal() -> Self {
        ErrorDistribution::Normal { location: 0.0, scale: 1.0 }
    }

    pub fn normal(location: f64, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() || !location.is_finite() {
            return Err(Error::config("normal law needs finite location and positive scale"));
        }
        Ok(ErrorDistribution::Normal { location, scale })
    }

    pub fn logistic(location: f64, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() || !location.is_finite() {
            return Err(Error::config("logistic law needs finite location and positive scale"));
        }
        Ok(ErrorDistribution::Logistic { location, scale })
    }

    /// Density at `t`.
    #[inline]
    pub fn pdf(&self, t: f64) -> f64 {
        match self {
            ErrorDistribution::Normal { location, scale } => {
                std_normal_pdf((t - location) / scale) / scale
            }
            ErrorDistribution::Logistic { location, scale } => {
                let u = (t - location) / scale;
                // F(1-F)/scale written to stay stable in both tails
                let e = (-u.abs()).exp();
                e / (scale * (1.0 + e) * (1.0 + e))
            }
            ErrorDistribution::Table(tb) => tb.interp(&tb.pdf, t) / tb.total_mass(),
        }
    }

    /// Analytic derivative of the density. Errors for a tabulated law without
    /// a derivative column.
    pub fn pdf_deriv(&self, t: f64) -> Result<f64> {
        match self {
            ErrorDistribution::Table(tb) => match &tb.deriv {
                Some(col) => Ok(tb.interp(col, t) / tb.total_mass()),
                None => Err(Error::config("tabulated law has no pdf-derivative column")),
            },
            _ => Ok(self.d1(t)),
        }
    }

    /// Density derivative on the hot path. Requires `supports_deriv()`;
    /// enforced when the law is installed into a model.
    #[inline]
    pub(crate) fn d1(&self, t: f64) -> f64 {
        match self {
            ErrorDistribution::Normal { location, scale } => {
                let u = (t - location) / scale;
                -u * std_normal_pdf(u) / (scale * scale)
            }
            ErrorDistribution::Logistic { location, scale } => {
                let u = (t - location) / scale;
                let e = (-u.abs()).exp();
                let f = e / ((1.0 + e) * (1.0 + e));
                let one_minus_2f_cdf = if u >= 0.0 {
                    // 1 - 2F = -(1-e)/(1+e) for u >= 0
                    -(1.0 - e) / (1.0 + e)
                } else {
                    (1.0 - e) / (1.0 + e)
                };
                f * one_minus_2f_cdf / (scale * scale)
            }
            ErrorDistribution::Table(tb) => match &tb.deriv {
                Some(col) => tb.interp(col, t) / tb.total_mass(),
                None => unreachable!("derivative support is validated at model construction"),
            },
        }
    }

    pub fn supports_deriv(&self) -> bool {
        !matches!(self, ErrorDistribution::Table(tb) if tb.deriv.is_none())
    }

    /// Cumulative distribution at `t` (handles `±inf`).
    #[inline]
    pub fn cdf(&self, t: f64) -> f64 {
        if t == f64::INFINITY {
            return 1.0;
        }
        if t == f64::NEG_INFINITY {
            return 0.0;
        }
        match self {
            ErrorDistribution::Normal { location, scale } => std_normal_cdf((t - location) / scale),
            ErrorDistribution::Logistic { location, scale } => {
                let u = (t - location) / scale;
                1.0 / (1.0 + (-u).exp())
            }
            ErrorDistribution::Table(tb) => tb.cdf_at(t),
        }
    }

    /// Smallest radius `R` with `1 - F(R) + F(-R)` below [`TAIL_TOL`],
    /// measured about the location.
    pub fn support_radius(&self) -> f64 {
        match self {
            ErrorDistribution::Table(tb) => {
                let lo = tb.ts[0];
                let hi = *tb.ts.last().unwrap();
                lo.abs().max(hi.abs())
            }
            _ => {
                let loc = self.location();
                let mut lo = 0.0;
                let mut hi = 60.0 * self.scale();
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    let tail = 1.0 - self.cdf(loc + mid) + self.cdf(loc - mid);
                    if tail > TAIL_TOL {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                hi
            }
        }
    }

    pub fn location(&self) -> f64 {
        match self {
            ErrorDistribution::Normal { location, .. }
            | ErrorDistribution::Logistic { location, .. } => *location,
            ErrorDistribution::Table(_) => 0.0,
        }
    }

    pub fn scale(&self) -> f64 {
        match self {
            ErrorDistribution::Normal { scale, .. } | ErrorDistribution::Logistic { scale, .. } => {
                *scale
            }
            ErrorDistribution::Table(_) => 1.0,
        }
    }

    /// Draw `count` iid values. Deterministic for a given stream identity.
    pub fn sample(&self, stream: &mut SeedStream, count: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            out.push(self.draw(stream));
        }
        out
    }

    #[inline]
    pub(crate) fn draw(&self, stream: &mut SeedStream) -> f64 {
        match self {
            ErrorDistribution::Normal { location, scale } => {
                let z: f64 = stream.rng.sample(StandardNormal);
                location + scale * z
            }
            ErrorDistribution::Logistic { location, scale } => {
                let u: f64 = stream.rng.gen_range(f64::MIN_POSITIVE..1.0);
                location + scale * (u / (1.0 - u)).ln()
            }
            ErrorDistribution::Table(tb) => {
                let u: f64 = stream.rng.gen_range(0.0..1.0);
                tb.quantile(u)
            }
        }
    }

    /// Short canonical description, used in cache keys and CSV headers.
    pub fn describe(&self) -> String {
        match self {
            ErrorDistribution::Normal { location, scale } => {
                format!("normal({location},{scale})")
            }
            ErrorDistribution::Logistic { location, scale } => {
                format!("logistic({location},{scale})")
            }
            ErrorDistribution::Table(tb) => format!(
                "table(n={},lo={},hi={},deriv={})",
                tb.ts.len(),
                tb.ts[0],
                tb.ts.last().unwrap(),
                tb.deriv.is_some()
            ),
        }
    }
}

/// A deterministic, splittable random stream. Sub-streams indexed by a block
/// id are independent of each other and of thread scheduling.
pub struct SeedStream {
    seed: u64,
    rng: ChaCha8Rng,
}

impl SeedStream {
    pub fn new(seed: u64) -> Self {
        SeedStream { seed, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Independent stream for block `idx`; the parent state is untouched.
    pub fn substream(&self, idx: u64) -> SeedStream {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(idx.wrapping_add(1));
        SeedStream { seed: self.seed, rng }
    }
}

/// Joint cdf of the initial state `(X_0, e_0)`.
#[derive(Clone)]
pub enum InitialJoint {
    /// Independent marginals: `G_0(y) = F_X0(y0) * F_e0(y1)`.
    Product { x0: ErrorDistribution, e0: ErrorDistribution },
    /// User-supplied joint cdf; must be a genuine cdf (monotone, limits 0/1).
    Custom(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for InitialJoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InitialJoint::Product { x0, e0 } => {
                write!(f, "Product({}, {})", x0.describe(), e0.describe())
            }
            InitialJoint::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl InitialJoint {
    /// Independent standard normal marginals.
    pub fn product_standard_normal() -> Self {
        InitialJoint::Product {
            x0: ErrorDistribution::standard_normal(),
            e0: ErrorDistribution::standard_normal(),
        }
    }

    /// Evaluate the joint cdf; coordinates may be `±inf`.
    pub fn eval_g0(&self, y0: f64, y1: f64) -> f64 {
        match self {
            InitialJoint::Product { x0, e0 } => x0.cdf(y0) * e0.cdf(y1),
            InitialJoint::Custom(f) => f(y0, y1),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            InitialJoint::Product { x0, e0 } => {
                format!("product({},{})", x0.describe(), e0.describe())
            }
            InitialJoint::Custom(_) => "custom".to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn normal_pdf_reference_values() {
        let d = ErrorDistribution::standard_normal();
        assert_abs_diff_eq!(d.pdf(0.0), 0.3989423, epsilon = 1e-7);
        assert_abs_diff_eq!(d.pdf(2.0), 0.0539910, epsilon = 1e-7);
        let r = d.support_radius();
        assert!(d.pdf(10.0 + r) < 1e-12);
        assert!(d.pdf(-(10.0 + r)) < 1e-12);
    }

    #[test]
    fn normal_pdf_deriv_reference_values() {
        let d = ErrorDistribution::standard_normal();
        assert_abs_diff_eq!(d.pdf_deriv(0.0).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.pdf_deriv(2.0).unwrap(), -0.1079820, epsilon = 1e-7);
        assert_abs_diff_eq!(d.pdf_deriv(-0.1).unwrap(), 0.0396953, epsilon = 1e-7);
    }

    #[test]
    fn cdf_reference_values() {
        let d = ErrorDistribution::standard_normal();
        assert_abs_diff_eq!(d.cdf(0.0), 0.5, epsilon = 1e-15);
        assert_eq!(d.cdf(f64::INFINITY), 1.0);
        // independent series oracle for Phi(1.3333):
        // Phi(t) = 1/2 + phi(t) * sum_{k>=0} t^(2k+1) / (1*3*...*(2k+1))
        let t = 1.3333f64;
        let phi = (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut term = t;
        let mut sum = t;
        for k in 1..200 {
            term *= t * t / (2.0 * k as f64 + 1.0);
            sum += term;
            if term < 1e-18 {
                break;
            }
        }
        let oracle = 0.5 + phi * sum;
        assert_abs_diff_eq!(d.cdf(t), oracle, epsilon = 1e-12);
        assert_abs_diff_eq!(d.cdf(t), 0.9088, epsilon = 5e-5);
    }

    #[test]
    fn pdf_deriv_matches_finite_difference() {
        let h = 1e-5;
        for d in [
            ErrorDistribution::standard_normal(),
            ErrorDistribution::logistic(0.3, 1.4).unwrap(),
            ErrorDistribution::normal(-1.0, 2.5).unwrap(),
        ] {
            let r = d.support_radius();
            for i in 0..100 {
                let t = d.location() - r + 2.0 * r * (i as f64 + 0.5) / 100.0;
                let fd = (d.pdf(t + h) - d.pdf(t - h)) / (2.0 * h);
                assert!(
                    (d.pdf_deriv(t).unwrap() - fd).abs() <= 1e-6,
                    "law {} at t={t}: analytic {} vs fd {}",
                    d.describe(),
                    d.pdf_deriv(t).unwrap(),
                    fd
                );
            }
        }
    }

    #[test]
    fn truncated_box_captures_mass() {
        for d in [
            ErrorDistribution::standard_normal(),
            ErrorDistribution::logistic(0.0, 1.0).unwrap(),
        ] {
            let r = d.support_radius();
            let g = crate::quad::build_grid1(r, 12, 16, &[]).unwrap();
            let mass = crate::quad::integrate1(&g, |t| d.pdf(t)).unwrap();
            assert!(mass >= 1.0 - 2.0 * TAIL_TOL, "mass {mass} for {}", d.describe());
        }
    }

    #[test]
    fn sampling_is_deterministic_and_unbiased() {
        let d = ErrorDistribution::standard_normal();
        let a = d.sample(&mut SeedStream::new(7).substream(0), 1000);
        let b = d.sample(&mut SeedStream::new(7).substream(0), 1000);
        assert_eq!(a, b);
        assert!(d.sample(&mut SeedStream::new(7).substream(0), 0).is_empty());

        let n = 1_000_000;
        let xs = d.sample(&mut SeedStream::new(42).substream(0), n);
        let mean: f64 = xs.iter().sum::<f64>() / n as f64;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt(), "sample mean {mean}");
    }

    #[test]
    fn sampler_matches_cdf_ks() {
        // Kolmogorov–Smirnov at desk scale.
        for d in [
            ErrorDistribution::standard_normal(),
            ErrorDistribution::logistic(0.5, 0.8).unwrap(),
        ] {
            let n = 20_000;
            let mut xs = d.sample(&mut SeedStream::new(11).substream(3), n);
            xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut ks: f64 = 0.0;
            for (i, x) in xs.iter().enumerate() {
                let emp = (i + 1) as f64 / n as f64;
                ks = ks.max((emp - d.cdf(*x)).abs());
            }
            // 1.63/sqrt(n) is the 1% critical value
            assert!(ks < 1.63 / (n as f64).sqrt(), "KS {ks} for {}", d.describe());
        }
    }

    #[test]
    fn g0_product_and_limits() {
        let init = InitialJoint::product_standard_normal();
        assert_eq!(init.eval_g0(f64::INFINITY, f64::INFINITY), 1.0);
        assert_abs_diff_eq!(init.eval_g0(0.0, 0.0), 0.25, epsilon = 1e-12);
        assert_eq!(init.eval_g0(f64::NEG_INFINITY, 3.0), 0.0);
        assert_eq!(init.eval_g0(0.5, f64::NEG_INFINITY), 0.0);
    }

    #[test]
    fn g0_monotone_in_each_argument() {
        let init = InitialJoint::product_standard_normal();
        let mut stream = SeedStream::new(5).substream(0);
        let d = ErrorDistribution::standard_normal();
        for _ in 0..200 {
            let a = (d.draw(&mut stream), d.draw(&mut stream));
            let b = (a.0 + d.draw(&mut stream).abs(), a.1 + d.draw(&mut stream).abs());
            assert!(init.eval_g0(a.0, a.1) <= init.eval_g0(b.0, b.1) + 1e-15);
        }
    }

    #[test]
    fn table_law_roundtrip_and_deriv_error() {
        let ts: Vec<f64> = (0..201).map(|i| -5.0 + 0.05 * i as f64).collect();
        let pdf: Vec<f64> = ts.iter().map(|&t| std_normal_pdf(t)).collect();
        let tb = PdfTable::new(ts.clone(), pdf.clone(), None).unwrap();
        let d = ErrorDistribution::Table(Arc::new(tb));
        assert!(d.pdf_deriv(0.0).is_err());
        assert!(!d.supports_deriv());
        assert_abs_diff_eq!(d.cdf(0.0), 0.5, epsilon = 1e-3);

        let deriv: Vec<f64> = pdf.iter().zip(&ts).map(|(&p, &t)| -t * p).collect();
        let tb = PdfTable::new(ts, pdf, Some(deriv)).unwrap();
        let d = ErrorDistribution::Table(Arc::new(tb));
        assert!(d.supports_deriv());
        assert_abs_diff_eq!(d.pdf_deriv(1.0).unwrap(), -std_normal_pdf(1.0), epsilon = 1e-3);
    }
}
