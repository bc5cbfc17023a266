//! Laws of sums of independent characteristic values.
//!
//! Closed forms are kept where they exist (atoms, normal sums, the trapezoid from
//! two uniforms, shifts by a point mass); anything else becomes a [`GridLaw`].

use num_traits::Zero;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::{normal, rational, AtomLaw, DistError, Distribution, Rational};

/// Resolution of numeric convolutions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    /// Number of grid points spanning the support of the sum.
    pub points: usize,
    /// Tail probability cut from each unbounded side.
    pub tail: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { points: 1 << 14, tail: 1e-12 }
    }
}

/// CDF tabulated on a uniform grid, linearly interpolated.
#[derive(Debug, Clone, PartialEq)]
pub struct GridLaw {
    x0: f64,
    dx: f64,
    cdf: Vec<f64>,
}

impl GridLaw {
    fn from_values(x0: f64, dx: f64, mut cdf: Vec<f64>) -> Self {
        let mut running = 0.0_f64;
        for v in cdf.iter_mut() {
            running = running.max(v.clamp(0.0, 1.0));
            *v = running;
        }
        if let Some(&last) = cdf.last() {
            if last > 0.0 {
                cdf.iter_mut().for_each(|v| *v /= last);
            }
        }
        Self { x0, dx, cdf }
    }

    pub fn lower(&self) -> f64 {
        self.x0
    }

    pub fn upper(&self) -> f64 {
        self.x0 + self.dx * (self.cdf.len() - 1) as f64
    }

    pub fn step(&self) -> f64 {
        self.dx
    }

    pub fn len(&self) -> usize {
        self.cdf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cdf.is_empty()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x < self.x0 {
            return 0.0;
        }
        let t = (x - self.x0) / self.dx;
        let k = t.floor() as usize;
        if k + 1 >= self.cdf.len() {
            return 1.0;
        }
        let frac = t - k as f64;
        self.cdf[k] + frac * (self.cdf[k + 1] - self.cdf[k])
    }

    pub fn mean(&self) -> f64 {
        let survival: f64 = self
            .cdf
            .windows(2)
            .map(|w| 1.0 - 0.5 * (w[0] + w[1]))
            .sum();
        self.x0 + survival * self.dx
    }
}

/// Law of a perceived valuation or of a sum of characteristic values.
#[derive(Debug, Clone, PartialEq)]
pub enum Law {
    Atoms(AtomLaw),
    Uniform { lo: f64, hi: f64 },
    Normal { mean: f64, sd: f64 },
    /// Sum of two independent uniforms: trapezoid on `[lo, lo + short + long]`.
    UniformSum { lo: f64, short: f64, long: f64 },
    Grid(GridLaw),
}

impl From<&Distribution> for Law {
    fn from(d: &Distribution) -> Self {
        match d {
            Distribution::Uniform(u) => Law::Uniform { lo: u.lo(), hi: u.hi() },
            Distribution::Normal(n) => Law::Normal { mean: n.mean(), sd: n.sd() },
            Distribution::Discrete(a) => Law::Atoms(a.clone()),
        }
    }
}

impl Law {
    pub fn point(value: Rational) -> Self {
        Law::Atoms(AtomLaw::point(value))
    }

    /// Point mass at a float, converted exactly.
    pub fn point_f64(value: f64) -> Self {
        Law::point(rational::from_f64(value).expect("finite point mass"))
    }

    pub fn as_point(&self) -> Option<&Rational> {
        match self {
            Law::Atoms(a) if a.len() == 1 => a.values().first(),
            _ => None,
        }
    }

    pub fn as_atoms(&self) -> Option<&AtomLaw> {
        match self {
            Law::Atoms(a) => Some(a),
            _ => None,
        }
    }

    pub fn is_continuous(&self) -> bool {
        !matches!(self, Law::Atoms(_))
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Law::Atoms(a) => a.cdf(x),
            Law::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            Law::Normal { mean, sd } => normal::cdf((x - mean) / sd),
            Law::UniformSum { lo, short, long } => {
                let t = x - lo;
                let hi = short + long;
                if t <= 0.0 {
                    0.0
                } else if t < *short {
                    t * t / (2.0 * short * long)
                } else if t < *long {
                    short / (2.0 * long) + (t - short) / long
                } else if t < hi {
                    1.0 - (hi - t) * (hi - t) / (2.0 * short * long)
                } else {
                    1.0
                }
            }
            Law::Grid(g) => g.cdf(x),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Law::Atoms(a) => rational::to_f64(&a.mean_exact()),
            Law::Uniform { lo, hi } => 0.5 * (lo + hi),
            Law::Normal { mean, .. } => *mean,
            Law::UniformSum { lo, short, long } => lo + 0.5 * (short + long),
            Law::Grid(g) => g.mean(),
        }
    }

    /// Support bounds; unbounded laws are cut where each tail holds `tail` mass.
    pub fn bounds(&self, tail: f64) -> (f64, f64) {
        match self {
            Law::Atoms(a) => {
                let v = a.values_f64();
                (v[0], v[v.len() - 1])
            }
            Law::Uniform { lo, hi } => (*lo, *hi),
            Law::Normal { mean, sd } => {
                let z = -normal::quantile(tail);
                (mean - z * sd, mean + z * sd)
            }
            Law::UniformSum { lo, short, long } => (*lo, lo + short + long),
            Law::Grid(g) => (g.lower(), g.upper()),
        }
    }

    /// Points where the CDF or its derivative is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Law::Atoms(a) => a.values_f64().to_vec(),
            Law::Uniform { lo, hi } => vec![*lo, *hi],
            Law::Normal { .. } => Vec::new(),
            Law::UniformSum { lo, short, long } => {
                vec![*lo, lo + short, lo + long, lo + short + long]
            }
            Law::Grid(_) => Vec::new(),
        }
    }

    pub fn shifted(&self, c: &Rational) -> Law {
        let cf = rational::to_f64(c);
        match self {
            Law::Atoms(a) => Law::Atoms(a.shift(c)),
            Law::Uniform { lo, hi } => Law::Uniform { lo: lo + cf, hi: hi + cf },
            Law::Normal { mean, sd } => Law::Normal { mean: mean + cf, sd: *sd },
            Law::UniformSum { lo, short, long } => Law::UniformSum { lo: lo + cf, short: *short, long: *long },
            Law::Grid(g) => Law::Grid(GridLaw { x0: g.x0 + cf, dx: g.dx, cdf: g.cdf.clone() }),
        }
    }
}

/// Law of `A + B` for independent `A`, `B`.
pub fn convolve(a: &Law, b: &Law, grid: &GridConfig) -> Result<Law, DistError> {
    if grid.points < 16 || !(grid.tail > 0.0 && grid.tail < 0.5) {
        return Err(DistError::Unsupported("grid needs at least 16 points and a tail in (0, 0.5)"));
    }
    if let Some(c) = a.as_point() {
        return Ok(b.shifted(c));
    }
    if let Some(c) = b.as_point() {
        return Ok(a.shifted(c));
    }
    match (a, b) {
        (Law::Atoms(x), Law::Atoms(y)) => {
            let atoms = x
                .atoms()
                .flat_map(|(vx, px)| y.atoms().map(move |(vy, py)| (vx + vy, px * py)));
            Ok(Law::Atoms(AtomLaw::from_atoms(atoms)?))
        }
        (Law::Normal { mean: m1, sd: s1 }, Law::Normal { mean: m2, sd: s2 }) => Ok(Law::Normal {
            mean: m1 + m2,
            sd: (s1 * s1 + s2 * s2).sqrt(),
        }),
        (Law::Uniform { lo: l1, hi: h1 }, Law::Uniform { lo: l2, hi: h2 }) => {
            let (w1, w2) = (h1 - l1, h2 - l2);
            Ok(Law::UniformSum { lo: l1 + l2, short: w1.min(w2), long: w1.max(w2) })
        }
        (Law::Atoms(x), c) | (c, Law::Atoms(x)) => Ok(Law::Grid(atoms_plus_continuous(x, c, grid))),
        _ => Ok(Law::Grid(continuous_sum(a, b, grid))),
    }
}

fn atoms_plus_continuous(atoms: &AtomLaw, c: &Law, grid: &GridConfig) -> GridLaw {
    let (c_lo, c_hi) = c.bounds(grid.tail);
    let vals = atoms.values_f64();
    let probs: Vec<f64> = atoms.probs().iter().map(rational::to_f64).collect();
    let lo = c_lo + vals[0];
    let hi = c_hi + vals[vals.len() - 1];
    let dx = (hi - lo) / (grid.points - 1) as f64;
    let cdf = (0..grid.points)
        .map(|t| {
            let y = lo + t as f64 * dx;
            vals.iter().zip(&probs).map(|(v, p)| p * c.cdf(y - v)).sum()
        })
        .collect();
    GridLaw::from_values(lo, dx, cdf)
}

/// Midpoint discretization of `a` convolved with the tabulated CDF of `b` via FFT.
fn continuous_sum(a: &Law, b: &Law, grid: &GridConfig) -> GridLaw {
    let (a_lo, a_hi) = a.bounds(grid.tail);
    let (b_lo, b_hi) = b.bounds(grid.tail);
    let dx = ((a_hi - a_lo) + (b_hi - b_lo)) / (grid.points - 1) as f64;
    let na = (((a_hi - a_lo) / dx).ceil() as usize).max(1);
    let nb = (((b_hi - b_lo) / dx).ceil() as usize).max(1);

    let a_mass: Vec<f64> = (0..na)
        .map(|k| a.cdf(a_lo + (k + 1) as f64 * dx) - a.cdf(a_lo + k as f64 * dx))
        .collect();
    let b_cdf: Vec<f64> = (0..=nb).map(|t| b.cdf(b_lo + t as f64 * dx)).collect();
    let b_inc: Vec<f64> = std::iter::once(b_cdf[0])
        .chain(b_cdf.windows(2).map(|w| w[1] - w[0]))
        .collect();

    let out_len = na + b_inc.len() - 1;
    let len = out_len.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(len);
    let inverse = planner.plan_fft_inverse(len);
    let pad = |v: &[f64]| {
        let mut buf: Vec<Complex<f64>> = v.iter().map(|&x| Complex::new(x, 0.0)).collect();
        buf.resize(len, Complex::zero());
        buf
    };
    let mut fa = pad(&a_mass);
    let mut fb = pad(&b_inc);
    forward.process(&mut fa);
    forward.process(&mut fb);
    let mut prod: Vec<Complex<f64>> = fa.iter().zip(&fb).map(|(x, y)| x * y).collect();
    inverse.process(&mut prod);

    let scale = 1.0 / len as f64;
    let mut acc = 0.0;
    let cdf: Vec<f64> = prod[..out_len]
        .iter()
        .map(|z| {
            acc += z.re * scale;
            acc
        })
        .collect();
    GridLaw::from_values(a_lo + b_lo + 0.5 * dx, dx, cdf)
}

#[cfg(test)]
mod tests {
    use super::super::rational::{int, ratio};
    use super::*;

    fn example_trapezoid_density(y: f64) -> f64 {
        if (-6.0..=-1.0).contains(&y) {
            (6.0 + y) / 55.0
        } else if y > -1.0 && y <= 5.0 {
            1.0 / 11.0
        } else if y > 5.0 && y <= 10.0 {
            (10.0 - y) / 55.0
        } else {
            0.0
        }
    }

    #[test]
    fn two_uniforms_give_the_trapezoid() {
        let law = convolve(
            &Law::Uniform { lo: 0.0, hi: 5.0 },
            &Law::Uniform { lo: -6.0, hi: 5.0 },
            &GridConfig::default(),
        )
        .unwrap();
        assert_eq!(law, Law::UniformSum { lo: -6.0, short: 5.0, long: 11.0 });
        // central differences of the closed-form CDF against the stated density
        let h = 1e-6;
        for k in 0..=160 {
            let y = -6.0 + 0.1 * k as f64 + 0.013;
            let dens = (law.cdf(y + h) - law.cdf(y - h)) / (2.0 * h);
            assert!((dens - example_trapezoid_density(y)).abs() < 1e-6, "y={y}");
        }
        assert!((law.mean() - (-0.5 + 2.5)).abs() < 1e-15);
    }

    #[test]
    fn normals_add_moments() {
        let law = convolve(
            &Law::Normal { mean: 1.0, sd: 3.0 },
            &Law::Normal { mean: -2.0, sd: 4.0 },
            &GridConfig::default(),
        )
        .unwrap();
        assert_eq!(law, Law::Normal { mean: -1.0, sd: 5.0 });
    }

    #[test]
    fn discrete_sum_is_exact() {
        let a = Law::from(&Distribution::discrete_ratios(&[(0, 1, 2), (1, 1, 2)]).unwrap());
        let b = Law::from(&Distribution::discrete_ratios(&[(0, 1, 2), (2, 1, 2)]).unwrap());
        let s = convolve(&a, &b, &GridConfig::default()).unwrap();
        let atoms = s.as_atoms().unwrap();
        assert_eq!(atoms.values(), &[int(0), int(1), int(2), int(3)]);
        assert!(atoms.probs().iter().all(|p| *p == ratio(1, 4)));
        let total: Rational = atoms.probs().iter().sum();
        assert_eq!(total, int(1));
    }

    #[test]
    fn point_masses_shift() {
        let s = convolve(&Law::point(ratio(-1, 2)), &Law::Uniform { lo: 0.0, hi: 5.0 }, &GridConfig::default()).unwrap();
        assert_eq!(s, Law::Uniform { lo: -0.5, hi: 4.5 });
    }

    #[test]
    fn grid_sum_matches_closed_form() {
        // uniform + normal against the exact formula
        let (lo, hi, sd) = (0.0, 2.0, 0.7);
        let exact = |y: f64| {
            // E[Phi((y - U)/sd)] in closed form
            let g = |t: f64| t * normal::cdf(t) + normal::pdf(t);
            sd / (hi - lo) * (g((y - lo) / sd) - g((y - hi) / sd))
        };
        let s = convolve(&Law::Uniform { lo, hi }, &Law::Normal { mean: 0.0, sd }, &GridConfig::default()).unwrap();
        assert!(matches!(s, Law::Grid(_)));
        for k in 0..50 {
            let y = -2.0 + 0.12 * k as f64;
            assert!((s.cdf(y) - exact(y)).abs() < 1e-5, "y={y}: {} vs {}", s.cdf(y), exact(y));
        }
        assert!((s.mean() - 1.0).abs() < 1e-4);
        assert_eq!(s.cdf(-100.0), 0.0);
        assert_eq!(s.cdf(100.0), 1.0);
    }

    #[test]
    fn atoms_plus_uniform_grid() {
        let a = Law::from(&Distribution::discrete_ratios(&[(0, 1, 2), (3, 1, 2)]).unwrap());
        let s = convolve(&a, &Law::Uniform { lo: 0.0, hi: 1.0 }, &GridConfig::default()).unwrap();
        assert!((s.cdf(0.5) - 0.25).abs() < 1e-6);
        assert!((s.cdf(2.0) - 0.5).abs() < 1e-6);
        assert!((s.cdf(3.5) - 0.75).abs() < 1e-6);
        assert!((s.mean() - 2.0).abs() < 1e-4);
    }
}
