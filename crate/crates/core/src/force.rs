use std::fmt;
use std::sync::Arc;

/// Scalar time-dependent forcing (force per unit mass).
#[derive(Clone)]
pub enum ForceLaw {
    /// `values[k]` holds on `(breaks[k-1], breaks[k])`; `values.len() == breaks.len() + 1`.
    Piecewise { breaks: Vec<f64>, values: Vec<f64> },
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for ForceLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ForceLaw::Piecewise { breaks, values } => f
                .debug_struct("Piecewise")
                .field("breaks", breaks)
                .field("values", values)
                .finish(),
            ForceLaw::Function(_) => f.write_str("Function(..)"),
        }
    }
}

impl ForceLaw {
    pub fn constant(value: f64) -> Self {
        ForceLaw::Piecewise {
            breaks: Vec::new(),
            values: vec![value],
        }
    }

    /// Push with `-magnitude` until `switch`, then pull with `+magnitude`.
    pub fn push_pull(magnitude: f64, switch: f64) -> Self {
        ForceLaw::Piecewise {
            breaks: vec![switch],
            values: vec![-magnitude, magnitude],
        }
    }

    pub fn function(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        ForceLaw::Function(Arc::new(f))
    }

    pub fn is_valid(&self) -> bool {
        match self {
            ForceLaw::Piecewise { breaks, values } => {
                values.len() == breaks.len() + 1
                    && breaks.windows(2).all(|w| w[0] < w[1])
                    && breaks.iter().chain(values.iter()).all(|v| v.is_finite())
            }
            ForceLaw::Function(_) => true,
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            ForceLaw::Piecewise { breaks, values } => {
                let k = breaks.partition_point(|&b| b <= t);
                values[k]
            }
            ForceLaw::Function(f) => f(t),
        }
    }

    fn piecewise_integral(breaks: &[f64], values: &[f64], a: f64, b: f64, abs: bool) -> f64 {
        let mut total = 0.0;
        let mut lo = a;
        for (k, &v) in values.iter().enumerate() {
            let hi = breaks.get(k).copied().unwrap_or(f64::INFINITY).min(b);
            if hi > lo {
                total += (hi - lo) * if abs { v.abs() } else { v };
                lo = hi;
            }
            if lo >= b {
                break;
            }
        }
        total
    }

    /// `(1/(b-a)) * integral_a^b f`; exact for piecewise laws, midpoint rule otherwise.
    pub fn interval_mean(&self, a: f64, b: f64) -> f64 {
        match self {
            ForceLaw::Piecewise { breaks, values } => {
                Self::piecewise_integral(breaks, values, a, b, false) / (b - a)
            }
            ForceLaw::Function(f) => f(0.5 * (a + b)),
        }
    }

    /// `integral_a^b |f|` (midpoint rule with `steps` cells for general laws).
    pub fn abs_integral(&self, a: f64, b: f64, steps: usize) -> f64 {
        match self {
            ForceLaw::Piecewise { breaks, values } => Self::piecewise_integral(breaks, values, a, b, true),
            ForceLaw::Function(f) => {
                let n = steps.max(1);
                let dt = (b - a) / n as f64;
                (0..n).map(|k| f(a + (k as f64 + 0.5) * dt).abs() * dt).sum()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn push_pull_means() {
        let f = ForceLaw::push_pull(2.0, 2.0);
        assert_eq!(f.value(1.0), -2.0);
        assert_eq!(f.value(2.0), 2.0);
        assert_eq!(f.interval_mean(0.0, 1.0), -2.0);
        assert!((f.interval_mean(1.5, 2.5) - 0.0).abs() < 1e-15);
        assert!((f.interval_mean(1.9, 2.1) - 0.0).abs() < 1e-12);
        assert!((f.interval_mean(1.0, 2.5) - (-2.0 + 1.0) / 1.5).abs() < 1e-15);
        assert!((f.abs_integral(0.0, 6.0, 1) - 12.0).abs() < 1e-12);
    }

    #[test]
    fn function_law_uses_midpoint() {
        let f = ForceLaw::function(|t| t);
        assert!((f.interval_mean(0.0, 1.0) - 0.5).abs() < 1e-15);
        assert!((f.abs_integral(-1.0, 1.0, 1000) - 1.0).abs() < 1e-6);
    }
}
