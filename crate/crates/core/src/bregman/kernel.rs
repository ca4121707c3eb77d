use crate::error::{check_dim, Error, Result};
use crate::Vector;

/// Closure of the domain of a kernel, componentwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelDomain {
    /// All of `R^n`.
    Full,
    /// `x >= 0`; the interior is `x > 0`.
    NonNegative,
    /// `x > 0` (open).
    Positive,
    /// `[0, 1]^n`.
    UnitBox,
    /// `[-1, 1]^n`.
    SymmetricUnitBox,
}

/// Legendre kernels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    /// `||x||^2 / 2`
    Energy,
    /// `sum x log x`
    Shannon,
    /// `-sum log x`
    Burg,
    /// `sum x log x + (1 - x) log(1 - x)`
    FermiDirac,
    /// `-sum sqrt(1 - x^2)`
    Hellinger,
    /// `alpha ||x||^2 / 2 + ||x||^4 / 4`
    Polynomial { alpha: f64 },
}

const CUBIC_TOL: f64 = 1e-14;
const CUBIC_MAX_ITERS: usize = 100;

/// Nonnegative root of `t^3 + alpha t = s` for `s >= 0`, `alpha >= 0`.
///
/// Newton from the smaller of the two upper bounds `s^(1/3)` and `s / alpha`;
/// the cubic is convex and increasing on `t >= 0`, so the iterates decrease
/// monotonically to the root.
pub fn solve_depressed_cubic(s: f64, alpha: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    let mut t = s.cbrt();
    if alpha > 0.0 {
        t = t.min(s / alpha);
    }
    let scale = s.max(1.0);
    for _ in 0..CUBIC_MAX_ITERS {
        let h = t * t * t + alpha * t - s;
        if h.abs() <= CUBIC_TOL * scale {
            break;
        }
        let next = t - h / (3.0 * t * t + alpha);
        // Safeguard: stay in [0, t] where the root lies.
        let next = if next.is_finite() {
            next.clamp(0.0, t)
        } else {
            0.5 * t
        };
        if next == t {
            break;
        }
        t = next;
    }
    t
}

fn softplus(y: f64) -> f64 {
    y.max(0.0) + (-y.abs()).exp().ln_1p()
}

fn sigmoid(y: f64) -> f64 {
    if y >= 0.0 {
        1.0 / (1.0 + (-y).exp())
    } else {
        let e = y.exp();
        e / (1.0 + e)
    }
}

fn domain_err(kernel: &Kernel, what: &str, i: usize, v: f64) -> Error {
    Error::Domain(format!("{kernel:?} {what}: component {i} = {v}"))
}

impl Kernel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Kernel::Polynomial { alpha } if !(alpha >= 0.0) || !alpha.is_finite() => Err(
                Error::InvalidArgument(format!("polynomial kernel needs alpha >= 0, got {alpha}")),
            ),
            _ => Ok(()),
        }
    }

    pub fn domain(&self) -> KernelDomain {
        match self {
            Kernel::Energy | Kernel::Polynomial { .. } => KernelDomain::Full,
            Kernel::Shannon => KernelDomain::NonNegative,
            Kernel::Burg => KernelDomain::Positive,
            Kernel::FermiDirac => KernelDomain::UnitBox,
            Kernel::Hellinger => KernelDomain::SymmetricUnitBox,
        }
    }

    /// Whether `grad phi*` is defined on all of `R^n`.
    pub fn full_dual_domain(&self) -> bool {
        !matches!(self, Kernel::Burg)
    }

    fn component_in_domain(&self, v: f64) -> bool {
        match self.domain() {
            KernelDomain::Full => v.is_finite(),
            KernelDomain::NonNegative => v >= 0.0 && v.is_finite(),
            KernelDomain::Positive => v > 0.0 && v.is_finite(),
            KernelDomain::UnitBox => (0.0..=1.0).contains(&v),
            KernelDomain::SymmetricUnitBox => (-1.0..=1.0).contains(&v),
        }
    }

    fn component_in_interior(&self, v: f64) -> bool {
        match self.domain() {
            KernelDomain::Full => v.is_finite(),
            KernelDomain::NonNegative | KernelDomain::Positive => v > 0.0 && v.is_finite(),
            KernelDomain::UnitBox => v > 0.0 && v < 1.0,
            KernelDomain::SymmetricUnitBox => v > -1.0 && v < 1.0,
        }
    }

    pub fn in_domain(&self, x: &Vector) -> bool {
        x.iter().all(|&v| self.component_in_domain(v))
    }

    pub fn in_interior(&self, x: &Vector) -> bool {
        x.iter().all(|&v| self.component_in_interior(v))
    }

    fn require_interior(&self, x: &Vector, what: &str) -> Result<()> {
        match x.iter().position(|&v| !self.component_in_interior(v)) {
            Some(i) => Err(domain_err(self, what, i, x[i])),
            None => Ok(()),
        }
    }

    /// `phi(x)` on the closed domain.
    pub fn value(&self, x: &Vector) -> Result<f64> {
        if let Some(i) = x.iter().position(|&v| !self.component_in_domain(v)) {
            return Err(domain_err(self, "value outside domain", i, x[i]));
        }
        Ok(match *self {
            Kernel::Energy => 0.5 * x.norm_squared(),
            Kernel::Shannon => x
                .iter()
                .map(|&v| if v == 0.0 { 0.0 } else { v * v.ln() })
                .sum(),
            Kernel::Burg => -x.iter().map(|v| v.ln()).sum::<f64>(),
            Kernel::FermiDirac => x
                .iter()
                .map(|&v| {
                    let a = if v == 0.0 { 0.0 } else { v * v.ln() };
                    let b = if v == 1.0 {
                        0.0
                    } else {
                        (1.0 - v) * (1.0 - v).ln()
                    };
                    a + b
                })
                .sum(),
            Kernel::Hellinger => -x
                .iter()
                .map(|&v| ((1.0 - v) * (1.0 + v)).sqrt())
                .sum::<f64>(),
            Kernel::Polynomial { alpha } => {
                let a = x.norm_squared();
                0.5 * alpha * a + 0.25 * a * a
            }
        })
    }

    /// `grad phi(x)` for `x` in the interior of the domain.
    pub fn grad(&self, x: &Vector) -> Result<Vector> {
        self.require_interior(x, "gradient outside interior")?;
        Ok(match *self {
            Kernel::Energy => x.clone(),
            Kernel::Shannon => x.map(|v| 1.0 + v.ln()),
            Kernel::Burg => x.map(|v| -1.0 / v),
            Kernel::FermiDirac => x.map(|v| (v / (1.0 - v)).ln()),
            Kernel::Hellinger => x.map(|v| v / ((1.0 - v) * (1.0 + v)).sqrt()),
            Kernel::Polynomial { alpha } => x * (alpha + x.norm_squared()),
        })
    }

    /// `grad phi*(y)`, the inverse of [`Kernel::grad`].
    pub fn conj_grad(&self, y: &Vector) -> Result<Vector> {
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(domain_err(self, "nonfinite dual point", i, y[i]));
        }
        Ok(match *self {
            Kernel::Energy => y.clone(),
            Kernel::Shannon => y.map(|v| (v - 1.0).exp()),
            Kernel::Burg => {
                if let Some(i) = y.iter().position(|&v| v >= 0.0) {
                    return Err(domain_err(self, "dual point must be negative", i, y[i]));
                }
                y.map(|v| -1.0 / v)
            }
            Kernel::FermiDirac => y.map(sigmoid),
            Kernel::Hellinger => y.map(|v| v / (1.0 + v * v).sqrt()),
            Kernel::Polynomial { alpha } => {
                let s = y.norm();
                if s == 0.0 {
                    y.clone()
                } else {
                    let t = solve_depressed_cubic(s, alpha);
                    y * (t / s)
                }
            }
        })
    }

    /// Convex conjugate `phi*(y)`.
    pub fn conj_value(&self, y: &Vector) -> Result<f64> {
        Ok(match *self {
            Kernel::Energy => 0.5 * y.norm_squared(),
            Kernel::Shannon => y.iter().map(|v| (v - 1.0).exp()).sum(),
            Kernel::Burg => {
                if let Some(i) = y.iter().position(|&v| v >= 0.0) {
                    return Err(domain_err(self, "dual point must be negative", i, y[i]));
                }
                -(y.len() as f64) - y.iter().map(|v| (-v).ln()).sum::<f64>()
            }
            Kernel::FermiDirac => y.iter().map(|&v| softplus(v)).sum(),
            Kernel::Hellinger => y.iter().map(|v| (1.0 + v * v).sqrt()).sum(),
            Kernel::Polynomial { alpha } => {
                let s = y.norm();
                let t = solve_depressed_cubic(s, alpha);
                t * s - 0.5 * alpha * t * t - 0.25 * t.powi(4)
            }
        })
    }

    /// `D(x, y) = phi(x) - phi(y) - <grad phi(y), x - y>` for `x` in the
    /// domain and `y` in its interior, evaluated in a cancellation-free form.
    pub fn distance(&self, x: &Vector, y: &Vector) -> Result<f64> {
        check_dim(x.len(), y.len())?;
        if let Some(i) = x.iter().position(|&v| !self.component_in_domain(v)) {
            return Err(domain_err(
                self,
                "distance argument outside domain",
                i,
                x[i],
            ));
        }
        self.require_interior(y, "distance center outside interior")?;
        let per = |f: &dyn Fn(f64, f64) -> f64| -> f64 {
            x.iter()
                .zip(y.iter())
                .map(|(&a, &b)| f(a, b).max(0.0))
                .sum()
        };
        Ok(match *self {
            Kernel::Energy => 0.5 * (x - y).norm_squared(),
            Kernel::Shannon => per(&|a, b| {
                if a == 0.0 {
                    b
                } else {
                    a * (a / b).ln() - a + b
                }
            }),
            Kernel::Burg => per(&|a, b| {
                let q = a / b;
                q - q.ln() - 1.0
            }),
            Kernel::FermiDirac => per(&|a, b| {
                let p = if a == 0.0 { 0.0 } else { a * (a / b).ln() };
                let q = if a == 1.0 {
                    0.0
                } else {
                    (1.0 - a) * ((1.0 - a) / (1.0 - b)).ln()
                };
                p + q
            }),
            Kernel::Hellinger => per(&|a, b| {
                let sa = ((1.0 - a) * (1.0 + a)).sqrt();
                let sb = ((1.0 - b) * (1.0 + b)).sqrt();
                (a - b) * (a - b) / ((1.0 - a * b) + sa * sb) / sb
            }),
            Kernel::Polynomial { alpha } => {
                let a = x.norm_squared();
                let b = y.norm_squared();
                let d = (x - y).norm_squared();
                (0.5 * alpha * d + 0.25 * (a - b) * (a - b) + 0.5 * b * d).max(0.0)
            }
        })
    }
}
